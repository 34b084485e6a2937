//! Group signatures and point types.

use crate::error::{Error, Result};

/// Signature `(K, A)` of the group `H(K, A)`: `l` blocks, where block `j`
/// has complex dimension `k_j >= 1` and frequency `a_j`, with
/// `0 < a_1 < a_2 < ... < a_l = 1` (the last frequency is exactly `1`).
///
/// `l = 1` is the isotropic group `H(n, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    k: Vec<u32>,
    a: Vec<f64>,
}

impl Signature {
    /// Validates and builds a signature.
    pub fn new(k: Vec<u32>, a: Vec<f64>) -> Result<Self> {
        if k.is_empty() || a.is_empty() {
            return Err(Error::Domain("signature must have at least one block".into()));
        }
        if k.len() != a.len() {
            return Err(Error::Domain(format!(
                "signature has {} dimension entries but {} frequencies",
                k.len(),
                a.len()
            )));
        }
        if let Some(j) = k.iter().position(|&kj| kj == 0) {
            return Err(Error::Domain(format!("block {j} has dimension 0")));
        }
        for (j, &aj) in a.iter().enumerate() {
            if !aj.is_finite() || aj <= 0.0 {
                return Err(Error::Domain(format!("frequency a[{j}] = {aj} must be positive")));
            }
        }
        if a.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("frequencies must be strictly increasing".into()));
        }
        if *a.last().expect("non-empty") != 1.0 {
            return Err(Error::Domain("the last frequency must equal 1 exactly".into()));
        }
        Ok(Signature { k, a })
    }

    /// The isotropic group `H(n, 1)` (one block of dimension `n`).
    pub fn isotropic(n: u32) -> Result<Self> {
        Signature::new(vec![n], vec![1.0])
    }

    /// Number of blocks `l`.
    pub fn blocks(&self) -> usize {
        self.k.len()
    }

    /// Block dimensions `k_1, ..., k_l`.
    pub fn k(&self) -> &[u32] {
        &self.k
    }

    /// Block frequencies `a_1, ..., a_l`.
    pub fn a(&self) -> &[f64] {
        &self.a
    }

    /// Dimension of the last block, `k_l`.
    pub fn k_last(&self) -> u32 {
        *self.k.last().expect("non-empty")
    }

    /// Total complex dimension `n = k_1 + ... + k_l`.
    pub fn n(&self) -> u32 {
        self.k.iter().sum()
    }

    /// Homogeneous dimension `Q = 2n + 2`.
    pub fn q(&self) -> u32 {
        2 * self.n() + 2
    }

    pub fn is_isotropic(&self) -> bool {
        self.blocks() == 1
    }

    /// Iterator over `(k_j, a_j)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.k.iter().copied().zip(self.a.iter().copied())
    }

    /// Checks that a radial point has one radius per block.
    pub fn check_point(&self, p: &RadialPoint) -> Result<()> {
        if p.r().len() != self.blocks() {
            return Err(Error::Domain(format!(
                "point has {} radial components, signature has {} blocks",
                p.r().len(),
                self.blocks()
            )));
        }
        Ok(())
    }
}

/// A point of `H(K, A)` up to the rotations the kernel is invariant under:
/// block radii `r_j = |z_j| >= 0` and the central coordinate `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialPoint {
    r: Vec<f64>,
    t: f64,
}

impl RadialPoint {
    pub fn new(r: Vec<f64>, t: f64) -> Result<Self> {
        if r.is_empty() {
            return Err(Error::Domain("point must have at least one radial component".into()));
        }
        for (j, &rj) in r.iter().enumerate() {
            if !rj.is_finite() || rj < 0.0 {
                return Err(Error::Domain(format!("radius r[{j}] = {rj} must be >= 0")));
            }
        }
        if !t.is_finite() {
            return Err(Error::Domain(format!("central coordinate t = {t} must be finite")));
        }
        Ok(RadialPoint { r, t })
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// `|z|^2 = sum_j r_j^2`.
    pub fn r_total_sq(&self) -> f64 {
        self.r.iter().map(|rj| rj * rj).sum()
    }

    /// `|z| = sqrt(sum_j r_j^2)`.
    pub fn r_total(&self) -> f64 {
        self.r_total_sq().sqrt()
    }

    pub fn is_origin(&self) -> bool {
        self.t == 0.0 && self.r.iter().all(|&rj| rj == 0.0)
    }

    /// Anisotropic dilation `delta_rho(z, t) = (rho z, rho^2 t)`, `rho > 0`.
    pub fn dilate(&self, rho: f64) -> Result<RadialPoint> {
        if !rho.is_finite() || rho <= 0.0 {
            return Err(Error::Domain(format!("dilation factor rho = {rho} must be positive")));
        }
        Ok(RadialPoint {
            r: self.r.iter().map(|rj| rj * rho).collect(),
            t: self.t * rho * rho,
        })
    }

    /// The reflection `(z, t) -> (z, -t)`; the kernel and the distance are
    /// invariant under it.
    pub fn reflect_t(&self) -> RadialPoint {
        RadialPoint {
            r: self.r.clone(),
            t: -self.t,
        }
    }

    /// Same radii with `t` replaced by `|t|`.
    pub(crate) fn abs_t(&self) -> RadialPoint {
        RadialPoint {
            r: self.r.clone(),
            t: self.t.abs(),
        }
    }
}

/// A point with full coordinates `z_j = (x_{j,1} + i y_{j,1}, ...)`,
/// used only where individual coordinates matter (derivative checks);
/// everything radial goes through [`RadialPoint`].
#[derive(Debug, Clone, PartialEq)]
pub struct FullPoint {
    z: Vec<Vec<(f64, f64)>>,
    t: f64,
}

impl FullPoint {
    pub fn new(z: Vec<Vec<(f64, f64)>>, t: f64) -> Result<Self> {
        if z.is_empty() || z.iter().any(|b| b.is_empty()) {
            return Err(Error::Domain("every block must have at least one coordinate pair".into()));
        }
        let all_finite = z
            .iter()
            .flatten()
            .all(|&(x, y)| x.is_finite() && y.is_finite());
        if !all_finite || !t.is_finite() {
            return Err(Error::Domain("coordinates must be finite".into()));
        }
        Ok(FullPoint { z, t })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn blocks(&self) -> usize {
        self.z.len()
    }

    pub fn coords(&self, block: usize) -> &[(f64, f64)] {
        &self.z[block]
    }

    /// Radial reduction: `r_j = |z_j|`.
    pub fn reduce(&self) -> RadialPoint {
        let r = self
            .z
            .iter()
            .map(|block| {
                block
                    .iter()
                    .map(|&(x, y)| x * x + y * y)
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        RadialPoint { r, t: self.t }
    }

    /// Copy with coordinate pair `(block, idx)` shifted by `(dx, dy)` and
    /// `t` shifted by `dt`.
    pub fn translated(&self, block: usize, idx: usize, dx: f64, dy: f64, dt: f64) -> FullPoint {
        let mut z = self.z.clone();
        z[block][idx].0 += dx;
        z[block][idx].1 += dy;
        FullPoint { z, t: self.t + dt }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signature_accepts_valid_inputs() {
        let sig = Signature::new(vec![1, 2], vec![0.5, 1.0]).unwrap();
        assert_eq!(sig.blocks(), 2);
        assert_eq!(sig.n(), 3);
        assert_eq!(sig.q(), 8);
        assert!(!sig.is_isotropic());
        assert!(Signature::isotropic(3).unwrap().is_isotropic());
    }

    #[test]
    fn signature_rejects_bad_inputs() {
        assert!(Signature::new(vec![], vec![]).is_err());
        assert!(Signature::new(vec![1], vec![0.5]).is_err()); // a_l != 1
        assert!(Signature::new(vec![1, 1], vec![1.0, 1.0]).is_err()); // not strict
        assert!(Signature::new(vec![1, 1], vec![-0.5, 1.0]).is_err());
        assert!(Signature::new(vec![0], vec![1.0]).is_err());
        assert!(Signature::new(vec![1, 1], vec![0.5]).is_err());
        // a_l must be exactly 1, not merely close.
        assert!(Signature::new(vec![1], vec![1.0 + 1e-15]).is_err());
    }

    #[test]
    fn dilation_scales_radii_linearly_and_t_quadratically() {
        let p = RadialPoint::new(vec![1.0, 2.0], -3.0).unwrap();
        let q = p.dilate(2.0).unwrap();
        assert_eq!(q.r(), &[2.0, 4.0]);
        assert_eq!(q.t(), -12.0);
        assert!(p.dilate(0.0).is_err());
        assert!(p.dilate(-1.0).is_err());
    }

    #[test]
    fn reflection_and_origin() {
        let p = RadialPoint::new(vec![0.0], 0.0).unwrap();
        assert!(p.is_origin());
        let q = RadialPoint::new(vec![1.0], 2.0).unwrap();
        assert_eq!(q.reflect_t().t(), -2.0);
        assert!(!q.is_origin());
    }

    #[test]
    fn full_point_reduces_to_block_radii() {
        let g = FullPoint::new(vec![vec![(3.0, 4.0)], vec![(0.0, 1.0), (1.0, 0.0)]], 0.5).unwrap();
        let p = g.reduce();
        assert!((p.r()[0] - 5.0).abs() < 1e-15);
        assert!((p.r()[1] - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert_eq!(p.t(), 0.5);
    }
}
