//! Domains, multi-indices, points, and monomial moments.
//!
//! The fundamental quantity is the squared monomial norm ("moment")
//!
//! ```text
//! I(alpha) = integral over E(m) of |z^alpha|^2 dV
//!          = pi^n / (m_1 ... m_n)
//!            * prod_k Gamma((alpha_k + 1) / m_k)
//!            / Gamma(1 + sum_k (alpha_k + 1) / m_k),
//! ```
//!
//! obtained by writing the integral in polar coordinates and substituting
//! `s_k = r_k^(2 m_k)`, which turns the radial region into the standard
//! simplex and the integral into a Dirichlet integral.  Everything is done
//! in logarithms so large caps and uneven exponents stay in range.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::Deref;
use num_complex::Complex64;
// Float supplies the f64 math methods in pure no_std builds; builds whose
// dependency graph links std resolve them inherently and see this import
// as unused.
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamma::ln_gamma;
use crate::kahan::CompensatedSum;

/// `ln(pi)`.
pub(crate) const LN_PI: f64 = 1.144_729_885_849_400_2;

/// Exponent vector `alpha` of a monomial `z^alpha`.
///
/// Ordered by total degree first, then lexicographically, so that sorting a
/// set of indices groups them into degree layers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex {
    entries: Vec<u32>,
}

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        Self { entries }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: vec![0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    /// Total degree `|alpha| = sum_k alpha_k`.
    pub fn degree(&self) -> u32 {
        self.entries.iter().sum()
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.entries.cmp(&other.entries))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All multi-indices of dimension `dim` with total degree at most `cap`,
/// in graded lexicographic order: `(0,0), (0,1), (1,0), (0,2), ...`.
pub fn multi_indices(dim: usize, cap: u32) -> Vec<MultiIndex> {
    assert!(dim >= 1, "dimension must be at least 1");
    let mut out = Vec::new();
    let mut buf = vec![0u32; dim];
    for degree in 0..=cap {
        push_layer(&mut out, &mut buf, 0, degree);
    }
    out
}

fn push_layer(out: &mut Vec<MultiIndex>, buf: &mut [u32], position: usize, remaining: u32) {
    if position + 1 == buf.len() {
        buf[position] = remaining;
        out.push(MultiIndex::new(buf.to_vec()));
        return;
    }
    for value in 0..=remaining {
        buf[position] = value;
        push_layer(out, buf, position + 1, remaining - value);
    }
}

/// Number of multi-indices of dimension `dim` with degree at most `cap`,
/// i.e. `binomial(cap + dim, dim)`; `None` on overflow.
pub fn count_multi_indices(dim: usize, cap: u32) -> Option<u64> {
    let mut acc: u64 = 1;
    for i in 1..=dim as u64 {
        acc = acc.checked_mul(cap as u64 + i)?;
        acc /= i;
    }
    Some(acc)
}

/// A point of `C^n`, stored as a coordinate vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComplexPoint {
    coords: Vec<Complex64>,
}

impl ComplexPoint {
    pub fn new(coords: Vec<Complex64>) -> Self {
        Self { coords }
    }

    /// Point with the given real coordinates.
    pub fn from_re(re: &[f64]) -> Self {
        Self {
            coords: re.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    /// Point with coordinates `rho_k * exp(i theta_k)`.
    pub fn from_polar(moduli: &[f64], phases: &[f64]) -> Self {
        assert_eq!(moduli.len(), phases.len());
        Self {
            coords: moduli
                .iter()
                .zip(phases)
                .map(|(&r, &t)| Complex64::from_polar(r, t))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.coords
    }
}

impl Deref for ComplexPoint {
    type Target = [Complex64];

    fn deref(&self) -> &[Complex64] {
        &self.coords
    }
}

impl From<Vec<Complex64>> for ComplexPoint {
    fn from(coords: Vec<Complex64>) -> Self {
        Self::new(coords)
    }
}

/// `x^m` for `x >= 0`, taking the exact integer-power path when possible.
pub(crate) fn pow_positive(x: f64, m: f64) -> f64 {
    if m == 1.0 {
        x
    } else if m.fract() == 0.0 && m.abs() <= 127.0 {
        x.powi(m as i32)
    } else {
        x.powf(m)
    }
}

/// The domain `E(m) = { z : sum_k |z_k|^(2 m_k) < 1 }` for positive real
/// exponents `m_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidSpec {
    exponents: Vec<f64>,
}

impl EllipsoidSpec {
    /// Validates that every exponent is finite and strictly positive.
    pub fn new(exponents: Vec<f64>) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::InvalidSpec(String::from("no exponents given")));
        }
        if exponents.len() > 16 {
            return Err(Error::InvalidSpec(String::from(
                "dimension above 16 is not supported",
            )));
        }
        for &m in &exponents {
            if !(m.is_finite() && m > 0.0) {
                return Err(Error::InvalidSpec(String::from(
                    "exponents must be finite and positive",
                )));
            }
        }
        Ok(Self { exponents })
    }

    /// The unit ball of `C^n` (all exponents 1).
    pub fn unit_ball(dim: usize) -> Self {
        Self {
            exponents: vec![1.0; dim.max(1)],
        }
    }

    /// The unit disc in `C`.
    pub fn disc() -> Self {
        Self::unit_ball(1)
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    /// True when the domain is exactly the unit ball.
    pub fn is_ball(&self) -> bool {
        self.exponents.iter().all(|&m| m == 1.0)
    }

    /// Domain E(j * m); the coordinate power map `z -> (z_k^j)` maps it
    /// properly onto this domain.
    pub fn power_cover_source(&self, j: u32) -> Result<Self> {
        if j == 0 {
            return Err(Error::InvalidInput(String::from(
                "covering order must be at least 1",
            )));
        }
        Self::new(self.exponents.iter().map(|m| m * j as f64).collect())
    }

    /// Spec with permuted exponents: entry `k` of the result is
    /// `exponents[perm[k]]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: perm.len(),
            });
        }
        let mut seen = vec![false; perm.len()];
        for &p in perm {
            if p >= perm.len() || seen[p] {
                return Err(Error::InvalidInput(String::from(
                    "not a permutation of 0..dim",
                )));
            }
            seen[p] = true;
        }
        Self::new(perm.iter().map(|&p| self.exponents[p]).collect())
    }

    /// Boundary defect `sum_k |z_k|^(2 m_k)`; the open domain is
    /// `defect < 1`, the boundary `defect = 1`.
    pub fn defect(&self, z: &[Complex64]) -> Result<f64> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        let mut acc = CompensatedSum::new();
        for (zk, &m) in z.iter().zip(&self.exponents) {
            acc.add(pow_positive(zk.norm_sqr(), m));
        }
        Ok(acc.value())
    }

    /// Defect of a vector of coordinate moduli (non-negative reals).
    pub fn defect_of_moduli(&self, moduli: &[f64]) -> Result<f64> {
        if moduli.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: moduli.len(),
            });
        }
        let mut acc = CompensatedSum::new();
        for (&r, &m) in moduli.iter().zip(&self.exponents) {
            acc.add(pow_positive(r * r, m));
        }
        Ok(acc.value())
    }

    /// True when `z` lies in the open domain.
    pub fn contains(&self, z: &[Complex64]) -> Result<bool> {
        Ok(self.defect(z)? < 1.0)
    }

    /// Log of the squared monomial norm `I(alpha)` (see module docs).
    pub fn log_moment(&self, alpha: &MultiIndex) -> Result<f64> {
        if alpha.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: alpha.dim(),
            });
        }
        let mut log = CompensatedSum::new();
        let mut exponent_sum = CompensatedSum::new();
        log.add(self.dim() as f64 * LN_PI);
        for (&a, &m) in alpha.entries().iter().zip(&self.exponents) {
            let q = (a as f64 + 1.0) / m;
            log.add(-m.ln());
            log.add(ln_gamma(q));
            exponent_sum.add(q);
        }
        log.add(-ln_gamma(1.0 + exponent_sum.value()));
        Ok(log.value())
    }

    /// Squared monomial norm `I(alpha)` itself.
    pub fn moment(&self, alpha: &MultiIndex) -> Result<f64> {
        Ok(self.log_moment(alpha)?.exp())
    }

    /// Euclidean volume of the domain, `I(0)`.
    pub fn volume(&self) -> f64 {
        self.log_moment(&MultiIndex::zeros(self.dim()))
            .expect("zero index always matches the dimension")
            .exp()
    }

    /// All multi-indices for this dimension with degree at most `cap`.
    pub fn indices_up_to(&self, cap: u32) -> Vec<MultiIndex> {
        multi_indices(self.dim(), cap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;
    use proptest::prelude::*;
    use rand_core::{RngCore, SeedableRng};

    const PI2: f64 = PI * PI;

    fn assert_close(got: f64, want: f64, tol: f64) {
        assert!(
            (got - want).abs() <= tol * want.abs().max(1.0),
            "{got} vs {want}"
        );
    }

    #[test]
    fn disc_moments_match_classical_values() {
        let disc = EllipsoidSpec::disc();
        // integral of |z|^(2a) over the unit disc = pi / (a + 1).
        for a in 0..12u32 {
            let got = disc.moment(&MultiIndex::new(vec![a])).unwrap();
            assert_close(got, PI / (a as f64 + 1.0), 1e-14);
        }
    }

    #[test]
    fn ball_moments_match_factorial_formula() {
        // On the unit ball, I(alpha) = pi^n alpha! / (n + |alpha|)!.
        let ball = EllipsoidSpec::unit_ball(2);
        assert_close(ball.volume(), PI2 / 2.0, 1e-14);
        assert_close(
            ball.moment(&MultiIndex::new(vec![1, 0])).unwrap(),
            PI2 / 6.0,
            1e-14,
        );
        assert_close(
            ball.moment(&MultiIndex::new(vec![2, 0])).unwrap(),
            PI2 / 12.0,
            1e-14,
        );
        assert_close(
            ball.moment(&MultiIndex::new(vec![2, 3])).unwrap(),
            PI2 * 2.0 * 6.0 / 5040.0,
            1e-13,
        );
    }

    #[test]
    fn mixed_exponent_volume_is_exact() {
        // E(1, 2): volume = 2 pi^2 / 3.
        let spec = EllipsoidSpec::new(vec![1.0, 2.0]).unwrap();
        assert_close(spec.volume(), 2.0 * PI2 / 3.0, 1e-14);
    }

    #[test]
    fn fractional_exponents_are_accepted() {
        let spec = EllipsoidSpec::new(vec![0.5, 2.5]).unwrap();
        let v = spec.volume();
        assert!(v.is_finite() && v > 0.0 && v < PI2);
    }

    /// Draw a uniform f64 in [0, 1) from a raw 64-bit generator.
    fn unit_f64(rng: &mut impl RngCore) -> f64 {
        (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[test]
    fn monte_carlo_confirms_mixed_moment() {
        // Independent check of the gamma-function formula: sample the
        // bounding box [-1,1]^(2n) and average |z^alpha|^2 over hits.
        let spec = EllipsoidSpec::new(vec![1.0, 2.0]).unwrap();
        let alpha = MultiIndex::new(vec![2, 1]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        let samples = 400_000u64;
        let box_volume = 16.0; // [-1,1]^4
        let mut sum = CompensatedSum::new();
        let mut sum_sq = CompensatedSum::new();
        for _ in 0..samples {
            let z = [
                Complex64::new(2.0 * unit_f64(&mut rng) - 1.0, 2.0 * unit_f64(&mut rng) - 1.0),
                Complex64::new(2.0 * unit_f64(&mut rng) - 1.0, 2.0 * unit_f64(&mut rng) - 1.0),
            ];
            let value = if spec.defect(&z).unwrap() < 1.0 {
                let w = z[0].norm_sqr().powi(2) * z[1].norm_sqr();
                w
            } else {
                0.0
            };
            sum.add(value);
            sum_sq.add(value * value);
        }
        let mean = sum.value() / samples as f64;
        let variance = (sum_sq.value() / samples as f64 - mean * mean).max(0.0);
        let standard_error = (variance / samples as f64).sqrt() * box_volume;
        let estimate = mean * box_volume;
        let exact = spec.moment(&alpha).unwrap();
        assert!(
            (estimate - exact).abs() <= 4.0 * standard_error + 1e-12,
            "MC {estimate} vs exact {exact} (stderr {standard_error})"
        );
    }

    #[test]
    fn enumeration_is_graded_lexicographic() {
        let indices = multi_indices(2, 5);
        assert_eq!(indices.len(), 21);
        assert_eq!(indices[0].entries(), &[0, 0]);
        assert_eq!(indices[1].entries(), &[0, 1]);
        assert_eq!(indices[2].entries(), &[1, 0]);
        assert_eq!(indices[3].entries(), &[0, 2]);
        let mut sorted = indices.clone();
        sorted.sort();
        assert_eq!(indices, sorted);
        assert_eq!(count_multi_indices(2, 5), Some(21));
        assert_eq!(count_multi_indices(3, 4), Some(35));
        assert_eq!(multi_indices(3, 4).len(), 35);
        assert_eq!(count_multi_indices(2, 60), Some(1891));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(EllipsoidSpec::new(Vec::new()).is_err());
        assert!(EllipsoidSpec::new(vec![1.0, 0.0]).is_err());
        assert!(EllipsoidSpec::new(vec![-2.0]).is_err());
        assert!(EllipsoidSpec::new(vec![f64::NAN]).is_err());
        assert!(EllipsoidSpec::new(vec![1.0; 17]).is_err());
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let spec = EllipsoidSpec::unit_ball(2);
        assert!(matches!(
            spec.log_moment(&MultiIndex::new(vec![1])),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
        assert!(spec.defect(&[Complex64::new(0.1, 0.0)]).is_err());
    }

    fn arb_spec() -> impl Strategy<Value = (Vec<f64>, Vec<u32>)> {
        (1usize..=4).prop_flat_map(|dim| {
            (
                proptest::collection::vec(0.3f64..5.0, dim),
                proptest::collection::vec(0u32..12, dim),
            )
        })
    }

    proptest! {
        #[test]
        fn log_moment_is_finite_and_permutation_symmetric((ms, alpha) in arb_spec()) {
            let spec = EllipsoidSpec::new(ms.clone()).unwrap();
            let value = spec.log_moment(&MultiIndex::new(alpha.clone())).unwrap();
            prop_assert!(value.is_finite());

            // Reverse both the exponents and the index: the moment integral
            // does not care how coordinates are labelled.
            let perm: Vec<usize> = (0..ms.len()).rev().collect();
            let spec_rev = spec.permuted(&perm).unwrap();
            let alpha_rev: Vec<u32> = alpha.iter().rev().copied().collect();
            let value_rev = spec_rev.log_moment(&MultiIndex::new(alpha_rev)).unwrap();
            prop_assert!((value - value_rev).abs() <= 1e-11 * value.abs().max(1.0));
        }

        #[test]
        fn ball_moments_decrease_along_coordinates(alpha in proptest::collection::vec(0u32..10, 2), bump in 0usize..2) {
            let ball = EllipsoidSpec::unit_ball(2);
            let base = ball.log_moment(&MultiIndex::new(alpha.clone())).unwrap();
            let mut larger = alpha;
            larger[bump] += 1;
            let stepped = ball.log_moment(&MultiIndex::new(larger)).unwrap();
            prop_assert!(stepped < base);
        }

        #[test]
        fn volume_is_bounded_by_polydisc((ms, _) in arb_spec()) {
            let spec = EllipsoidSpec::new(ms.clone()).unwrap();
            let v = spec.volume();
            prop_assert!(v > 0.0);
            prop_assert!(v <= PI.powi(ms.len() as i32) * (1.0 + 1e-12));
            if ms.iter().all(|&m| m >= 1.0) {
                // Domain contains the unit ball, volume pi^n / n!.
                let mut ball_volume = 1.0;
                for k in 1..=ms.len() {
                    ball_volume *= PI / k as f64;
                }
                prop_assert!(v >= ball_volume * (1.0 - 1e-12));
            }
        }

        #[test]
        fn defect_ignores_coordinate_phases(
            moduli in proptest::collection::vec(0.0f64..0.9, 3),
            phases in proptest::collection::vec(0.0f64..(2.0 * PI), 3),
        ) {
            let spec = EllipsoidSpec::new(vec![1.0, 2.0, 0.7]).unwrap();
            let plain = ComplexPoint::from_re(&moduli);
            let rotated = ComplexPoint::from_polar(&moduli, &phases);
            let a = spec.defect(&plain).unwrap();
            let b = spec.defect(&rotated).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
    }
}
