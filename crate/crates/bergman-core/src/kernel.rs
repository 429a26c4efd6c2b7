//! Truncated Bergman kernel series with tail bounds, plus closed forms.
//!
//! On a Reinhardt domain the Bergman kernel is the monomial series
//! `K(z, w) = sum_alpha z^alpha conj(w)^alpha / I(alpha)` with `I` the
//! squared monomial norms from [`crate::ellipsoid`].  Because `z` and `w`
//! enter only through the products `t_k = z_k conj(w_k)`, the series is
//! evaluated as a function of `t`.  Coefficients are stored as logarithms
//! and terms are accumulated per degree layer with compensated summation,
//! smallest degrees first.

use alloc::string::String;
use alloc::vec::Vec;
use num_complex::Complex64;
// Float supplies the f64 math methods in pure no_std builds; builds whose
// dependency graph links std resolve them inherently and see this import
// as unused.
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::ellipsoid::{count_multi_indices, multi_indices, EllipsoidSpec, MultiIndex};
use crate::error::{Error, Result};
use crate::kahan::{CompensatedSum, ComplexSum};

/// Default cap on the memory used by a coefficient table (bytes).
pub const DEFAULT_MEMORY_BUDGET: usize = 1 << 28;

/// Result of evaluating a truncated kernel series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    /// Value of the truncated sum.
    pub value: Complex64,
    /// Bound on the discarded tail, from the geometric-ratio estimate.
    pub tail_bound: f64,
    /// False when the tail bound could not be trusted (layer ratio >= 1) or
    /// the argument lay outside the region where the series converges.
    pub reliable: bool,
}

/// Geometric tail estimate from the last few degree-layer sums.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    /// Estimated bound on the sum of all discarded layers; `inf` when
    /// unreliable.
    pub bound: f64,
    /// Largest ratio of adjacent layer sums among the last three pairs.
    pub ratio: f64,
    /// False when no contraction was observed (`ratio >= 1`) and the bound
    /// is therefore unavailable.
    pub reliable: bool,
}

/// Truncated Bergman kernel series of a domain `E(m)`.
///
/// Stores one log-coefficient per multi-index with degree at most `cap`, in
/// graded lexicographic order, together with the layer boundaries.
#[derive(Clone, Debug)]
pub struct KernelSeries {
    spec: EllipsoidSpec,
    cap: u32,
    indices: Vec<MultiIndex>,
    log_coeffs: Vec<f64>,
    layer_offsets: Vec<usize>,
}

impl KernelSeries {
    /// Builds the coefficient table with the default memory budget.
    pub fn build(spec: &EllipsoidSpec, cap: u32) -> Result<Self> {
        Self::build_with_budget(spec, cap, DEFAULT_MEMORY_BUDGET)
    }

    /// Builds the coefficient table, refusing when the estimated size
    /// exceeds `budget` bytes.
    pub fn build_with_budget(spec: &EllipsoidSpec, cap: u32, budget: usize) -> Result<Self> {
        let dim = spec.dim();
        let count = count_multi_indices(dim, cap)
            .ok_or(Error::ResourceLimit {
                required: usize::MAX,
                budget,
            })?;
        // Rough per-entry cost: the index vector (heap block + u32 entries),
        // the log coefficient, and amortized bookkeeping.
        let entry_bytes = 4 * dim as u64 + 48;
        let required = count.saturating_mul(entry_bytes);
        if required > budget as u64 {
            return Err(Error::ResourceLimit {
                required: required.min(usize::MAX as u64) as usize,
                budget,
            });
        }

        let indices = multi_indices(dim, cap);
        let mut log_coeffs = Vec::with_capacity(indices.len());
        for alpha in &indices {
            log_coeffs.push(-spec.log_moment(alpha)?);
        }
        let layer_offsets = layer_offsets(&indices, cap);
        Ok(Self {
            spec: spec.clone(),
            cap,
            indices,
            log_coeffs,
            layer_offsets,
        })
    }

    pub fn spec(&self) -> &EllipsoidSpec {
        &self.spec
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn num_terms(&self) -> usize {
        self.indices.len()
    }

    /// Terms in graded lexicographic order as `(alpha, log coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.indices.iter().zip(self.log_coeffs.iter().copied())
    }

    /// Log coefficient of a particular index, if within the cap.
    pub fn log_coeff(&self, alpha: &MultiIndex) -> Option<f64> {
        self.indices
            .binary_search_by(|probe| probe.cmp(alpha))
            .ok()
            .map(|i| self.log_coeffs[i])
    }

    /// Evaluates the series as a function of the Reinhardt variable
    /// `t_k = z_k conj(w_k)`.
    ///
    /// Always returns a value; the `reliable` flag is false when `t` lies
    /// outside the convergence region `sum_k |t_k|^(m_k) < 1` or the tail
    /// could not be bounded.
    pub fn eval_reinhardt(&self, t: &[Complex64]) -> Result<EvalResult> {
        if t.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: t.len(),
            });
        }
        let moduli: Vec<f64> = t.iter().map(|z| z.norm()).collect();
        let in_region = region_sum(&self.spec, &moduli) < 1.0;
        let terms = eval_graded_terms(
            &self.indices,
            &self.log_coeffs,
            None,
            &self.layer_offsets,
            t,
        );
        let tail = tail_from_layers(&terms.abs_layers);
        Ok(EvalResult {
            value: terms.value,
            tail_bound: tail.bound,
            reliable: in_region && tail.reliable,
        })
    }

    /// Kernel value `K(z, w)` for interior points `z, w`.
    pub fn eval_kernel(&self, z: &[Complex64], w: &[Complex64]) -> Result<EvalResult> {
        for p in [z, w] {
            let defect = self.spec.defect(p)?;
            if !(defect < 1.0) {
                return Err(Error::OutsideDomain { defect });
            }
        }
        let t: Vec<Complex64> = z.iter().zip(w).map(|(a, b)| a * b.conj()).collect();
        self.eval_reinhardt(&t)
    }

    /// Sum of `|term|` per degree layer at the given coordinate moduli.
    pub fn layer_sums(&self, moduli: &[f64]) -> Result<Vec<f64>> {
        if moduli.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: moduli.len(),
            });
        }
        if moduli.iter().any(|&r| !(r >= 0.0)) {
            return Err(Error::InvalidInput(String::from(
                "moduli must be non-negative",
            )));
        }
        let t: Vec<Complex64> = moduli.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        let terms = eval_graded_terms(
            &self.indices,
            &self.log_coeffs,
            None,
            &self.layer_offsets,
            &t,
        );
        Ok(terms.abs_layers)
    }

    /// Tail estimate at the given coordinate moduli.
    pub fn tail_estimate(&self, moduli: &[f64]) -> Result<TailEstimate> {
        Ok(tail_from_layers(&self.layer_sums(moduli)?))
    }

    pub(crate) fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub(crate) fn log_coeffs_slice(&self) -> &[f64] {
        &self.log_coeffs
    }
}

/// Convergence-region defect `sum_k |t_k|^(m_k)` of a Reinhardt variable.
pub(crate) fn region_sum(spec: &EllipsoidSpec, moduli: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for (&r, &m) in moduli.iter().zip(spec.exponents()) {
        acc.add(crate::ellipsoid::pow_positive(r, m));
    }
    acc.value()
}

/// Layer start offsets (`cap + 2` entries; layer `d` spans
/// `offsets[d]..offsets[d + 1]`) for an index list in graded order.
pub(crate) fn layer_offsets(indices: &[MultiIndex], cap: u32) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(cap as usize + 2);
    let mut next_degree = 0u32;
    for (i, alpha) in indices.iter().enumerate() {
        while next_degree <= alpha.degree() {
            offsets.push(i);
            next_degree += 1;
        }
    }
    while next_degree <= cap + 1 {
        offsets.push(indices.len());
        next_degree += 1;
    }
    offsets
}

pub(crate) struct TermSum {
    pub value: Complex64,
    pub abs_layers: Vec<f64>,
}

/// Shared evaluation core: sums `sign_i * exp(log_coeff_i) * t^alpha_i`
/// layer by layer (ascending degree), compensating within each layer and
/// across layers, and records per-layer absolute sums for tail estimation.
pub(crate) fn eval_graded_terms(
    indices: &[MultiIndex],
    log_coeffs: &[f64],
    signs: Option<&[f64]>,
    offsets: &[usize],
    t: &[Complex64],
) -> TermSum {
    let dim = t.len();
    let log_abs: Vec<f64> = t.iter().map(|z| z.norm().ln()).collect();
    let args: Vec<f64> = t.iter().map(|z| z.arg()).collect();

    let mut total = ComplexSum::new();
    let mut abs_layers = Vec::with_capacity(offsets.len() - 1);
    for window in offsets.windows(2) {
        let mut layer = ComplexSum::new();
        let mut layer_abs = CompensatedSum::new();
        for i in window[0]..window[1] {
            let mut log_mag = log_coeffs[i];
            let mut phase = 0.0;
            for (k, &a) in indices[i].entries().iter().enumerate().take(dim) {
                if a > 0 {
                    // A zero coordinate contributes -inf here, correctly
                    // killing the term; coordinates with a == 0 are skipped
                    // so that 0 * (-inf) never occurs.
                    log_mag += a as f64 * log_abs[k];
                    phase += a as f64 * args[k];
                }
            }
            if log_mag == f64::NEG_INFINITY {
                continue;
            }
            let magnitude = log_mag.exp();
            let sign = signs.map_or(1.0, |s| s[i]);
            layer.add(Complex64::from_polar(magnitude, phase) * sign);
            layer_abs.add(magnitude);
        }
        total.add(layer.value());
        abs_layers.push(layer_abs.value());
    }
    TermSum {
        value: total.value(),
        abs_layers,
    }
}

/// Tail bound from per-layer absolute sums: take the largest ratio among
/// the last three adjacent layer pairs and sum the implied geometric series.
pub(crate) fn tail_from_layers(abs_layers: &[f64]) -> TailEstimate {
    let n = abs_layers.len();
    let last = abs_layers[n - 1];
    if last == 0.0 {
        // Happens exactly when every coordinate modulus is zero: all layers
        // beyond the constant one vanish and the true tail is zero.
        return TailEstimate {
            bound: 0.0,
            ratio: 0.0,
            reliable: true,
        };
    }
    let mut ratio = 0.0f64;
    let mut pairs = 0usize;
    for i in (1..n).rev().take(3) {
        let prev = abs_layers[i - 1];
        if prev <= 0.0 {
            return TailEstimate {
                bound: f64::INFINITY,
                ratio: f64::INFINITY,
                reliable: false,
            };
        }
        ratio = ratio.max(abs_layers[i] / prev);
        pairs += 1;
    }
    if pairs == 0 || ratio >= 1.0 {
        return TailEstimate {
            bound: f64::INFINITY,
            ratio,
            reliable: false,
        };
    }
    TailEstimate {
        bound: last * ratio / (1.0 - ratio),
        ratio,
        reliable: true,
    }
}

/// Outcome of the automatic cap search.
#[derive(Clone, Debug)]
pub struct CapSearch {
    pub series: KernelSeries,
    pub tail: TailEstimate,
    /// True when the tail bound reached the requested tolerance.
    pub converged: bool,
}

/// Doubles the truncation cap starting from 8 until the tail bound at the
/// given moduli drops below `tolerance` or `max_cap` is reached.
pub fn pick_cap(
    spec: &EllipsoidSpec,
    moduli: &[f64],
    tolerance: f64,
    max_cap: u32,
) -> Result<CapSearch> {
    if !(tolerance > 0.0) {
        return Err(Error::InvalidInput(String::from(
            "tolerance must be positive",
        )));
    }
    let mut cap = 8.min(max_cap);
    loop {
        let series = KernelSeries::build(spec, cap)?;
        let tail = series.tail_estimate(moduli)?;
        if tail.reliable && tail.bound <= tolerance {
            return Ok(CapSearch {
                series,
                tail,
                converged: true,
            });
        }
        if cap >= max_cap {
            return Ok(CapSearch {
                series,
                tail,
                converged: false,
            });
        }
        cap = (cap * 2).min(max_cap);
    }
}

/// Closed-form Bergman kernel of the unit ball of `C^n`:
/// `K(z, w) = n! / pi^n * (1 - <z, w>)^(-(n + 1))`.
pub fn ball_kernel(z: &[Complex64], w: &[Complex64]) -> Result<Complex64> {
    if z.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: z.len(),
            got: w.len(),
        });
    }
    let n = z.len();
    let mut inner = ComplexSum::new();
    for (a, b) in z.iter().zip(w) {
        inner.add(a * b.conj());
    }
    let denom = Complex64::new(1.0, 0.0) - inner.value();
    if denom.norm() < 1e-300 {
        return Err(Error::InvalidInput(String::from(
            "1 - <z, w> vanishes; kernel pole",
        )));
    }
    let mut factor = 1.0;
    for k in 1..=n {
        factor *= k as f64 / core::f64::consts::PI;
    }
    let mut power = Complex64::new(1.0, 0.0);
    for _ in 0..=n {
        power *= denom;
    }
    Ok(factor / power)
}

/// Closed-form Bergman kernel of the unit polydisc of `C^n`:
/// `K(z, w) = prod_k 1 / (pi (1 - z_k conj(w_k))^2)`.
pub fn polydisc_kernel(z: &[Complex64], w: &[Complex64]) -> Result<Complex64> {
    if z.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: z.len(),
            got: w.len(),
        });
    }
    let mut product = Complex64::new(1.0, 0.0);
    for (a, b) in z.iter().zip(w) {
        let denom = Complex64::new(1.0, 0.0) - a * b.conj();
        if denom.norm() < 1e-300 {
            return Err(Error::InvalidInput(String::from(
                "1 - z_k conj(w_k) vanishes; kernel pole",
            )));
        }
        product *= core::f64::consts::PI * denom * denom;
    }
    Ok(product.finv())
}

/// Anything that can produce Bergman kernel values with an error bound.
pub trait KernelEvaluator {
    fn dim(&self) -> usize;

    /// Kernel value at `(z, w)`, both required to be interior points.
    fn eval_pair(&self, z: &[Complex64], w: &[Complex64]) -> Result<EvalResult>;
}

impl KernelEvaluator for KernelSeries {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn eval_pair(&self, z: &[Complex64], w: &[Complex64]) -> Result<EvalResult> {
        self.eval_kernel(z, w)
    }
}

/// Exact unit-ball kernel as a [`KernelEvaluator`].
#[derive(Clone, Copy, Debug)]
pub struct BallKernel {
    pub dim: usize,
}

impl KernelEvaluator for BallKernel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_pair(&self, z: &[Complex64], w: &[Complex64]) -> Result<EvalResult> {
        let spec = EllipsoidSpec::unit_ball(self.dim);
        for p in [z, w] {
            let defect = spec.defect(p)?;
            if !(defect < 1.0) {
                return Err(Error::OutsideDomain { defect });
            }
        }
        Ok(EvalResult {
            value: ball_kernel(z, w)?,
            tail_bound: 0.0,
            reliable: true,
        })
    }
}

/// Exact polydisc kernel as a [`KernelEvaluator`].
#[derive(Clone, Copy, Debug)]
pub struct PolydiscKernel {
    pub dim: usize,
}

impl KernelEvaluator for PolydiscKernel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_pair(&self, z: &[Complex64], w: &[Complex64]) -> Result<EvalResult> {
        for p in [z, w] {
            if p.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: p.len(),
                });
            }
            for zk in p {
                let r = zk.norm();
                if !(r < 1.0) {
                    return Err(Error::OutsideDomain { defect: r * r });
                }
            }
        }
        Ok(EvalResult {
            value: polydisc_kernel(z, w)?,
            tail_bound: 0.0,
            reliable: true,
        })
    }
}

/// An exact kernel for the given domain, when one is known: dimension one
/// (every `E(m)` in `C^1` is the unit disc as a set) and the unit ball.
pub fn closed_form_kernel(spec: &EllipsoidSpec) -> Option<BallKernel> {
    if spec.dim() == 1 || spec.is_ball() {
        Some(BallKernel { dim: spec.dim() })
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Naive reference evaluation by direct complex powers, no logs.
    fn naive_eval(series: &KernelSeries, t: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (alpha, log_c) in series.terms() {
            let mut term = Complex64::new(log_c.exp(), 0.0);
            for (k, &a) in alpha.entries().iter().enumerate() {
                term *= t[k].powu(a);
            }
            acc += term;
        }
        acc
    }

    #[test]
    fn value_at_origin_is_reciprocal_volume() {
        for exponents in [vec![1.0, 1.0], vec![1.0, 2.0], vec![3.0, 5.0], vec![2.5, 0.8]] {
            let spec = EllipsoidSpec::new(exponents).unwrap();
            let series = KernelSeries::build(&spec, 12).unwrap();
            let zero = [c(0.0, 0.0), c(0.0, 0.0)];
            let result = series.eval_kernel(&zero, &zero).unwrap();
            assert!(result.reliable);
            assert_eq!(result.tail_bound, 0.0);
            let product = result.value.re * spec.volume();
            assert!((product - 1.0).abs() < 1e-13, "K(0,0) * vol = {product}");
            assert!(result.value.im.abs() < 1e-300);
        }
    }

    #[test]
    fn disc_series_matches_closed_form() {
        let series = KernelSeries::build(&EllipsoidSpec::disc(), 80).unwrap();
        let z = [c(0.3, 0.4)];
        let w = [c(-0.2, 0.35)];
        let got = series.eval_kernel(&z, &w).unwrap();
        let want = ball_kernel(&z, &w).unwrap();
        assert!(got.reliable);
        assert!((got.value - want).norm() <= 1e-12 * want.norm() + got.tail_bound);
    }

    #[test]
    fn ball_series_matches_closed_form() {
        let series = KernelSeries::build(&EllipsoidSpec::unit_ball(2), 48).unwrap();
        let z = [c(0.31, -0.12), c(-0.05, 0.4)];
        let w = [c(0.15, 0.25), c(0.33, -0.1)];
        let got = series.eval_kernel(&z, &w).unwrap();
        let want = ball_kernel(&z, &w).unwrap();
        assert!(got.reliable);
        let rel = (got.value - want).norm() / want.norm();
        assert!(rel < 1e-10, "relative error {rel}");
    }

    #[test]
    fn ball_diagonal_frozen_value() {
        // K((0.5, 0), (0.5, 0)) on the unit ball of C^2:
        // 2! / pi^2 * (1 - 0.25)^(-3) = 0.4803374631933...
        let z = [c(0.5, 0.0), c(0.0, 0.0)];
        let got = ball_kernel(&z, &z).unwrap();
        assert!((got.re - 0.480_337_463_193_305).abs() < 1e-14);
        assert!(got.im.abs() < 1e-300);
    }

    #[test]
    fn polydisc_kernel_matches_product_of_discs() {
        let z = [c(0.3, 0.1), c(-0.4, 0.2)];
        let w = [c(0.1, -0.3), c(0.05, 0.15)];
        let product = ball_kernel(&z[..1], &w[..1]).unwrap() * ball_kernel(&z[1..], &w[1..]).unwrap();
        let got = polydisc_kernel(&z, &w).unwrap();
        assert!((got - product).norm() < 1e-14 * product.norm());
    }

    #[test]
    fn matches_naive_summation_with_zero_coordinates() {
        let spec = EllipsoidSpec::new(vec![1.0, 2.0]).unwrap();
        let series = KernelSeries::build(&spec, 10).unwrap();
        for t in [
            [c(0.0, 0.0), c(0.5, -0.2)],
            [c(0.3, 0.2), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0)],
            [c(-0.25, 0.33), c(0.2, 0.41)],
        ] {
            let fast = series.eval_reinhardt(&t).unwrap();
            let slow = naive_eval(&series, &t);
            assert!(
                (fast.value - slow).norm() <= 1e-12 * slow.norm().max(1.0),
                "t = {t:?}: {} vs {slow}",
                fast.value
            );
            assert!(fast.value.re.is_finite() && fast.value.im.is_finite());
        }
    }

    #[test]
    fn outside_region_is_flagged_not_rejected() {
        let spec = EllipsoidSpec::unit_ball(2);
        let series = KernelSeries::build(&spec, 16).unwrap();
        let t = [c(0.9, 0.0), c(0.9, 0.0)];
        let result = series.eval_reinhardt(&t).unwrap();
        assert!(!result.reliable);

        let tail = series.tail_estimate(&[0.9, 0.9]).unwrap();
        assert!(!tail.reliable);
        assert!(tail.bound.is_infinite());
        assert!(tail.ratio >= 1.0);
    }

    #[test]
    fn eval_kernel_requires_interior_points() {
        let spec = EllipsoidSpec::unit_ball(2);
        let series = KernelSeries::build(&spec, 8).unwrap();
        let boundary = [c(1.0, 0.0), c(0.0, 0.0)];
        let inside = [c(0.1, 0.0), c(0.2, 0.0)];
        assert!(matches!(
            series.eval_kernel(&boundary, &inside),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn zero_moduli_have_zero_tail() {
        let spec = EllipsoidSpec::new(vec![1.0, 3.0]).unwrap();
        let series = KernelSeries::build(&spec, 20).unwrap();
        let tail = series.tail_estimate(&[0.0, 0.0]).unwrap();
        assert!(tail.reliable);
        assert_eq!(tail.bound, 0.0);
    }

    #[test]
    fn tail_bound_dominates_true_remainder_on_disc() {
        // For the disc the full series is known; the geometric bound from
        // the last layers must dominate the actual discarded tail.
        let series = KernelSeries::build(&EllipsoidSpec::disc(), 24).unwrap();
        for rho in [0.1f64, 0.3, 0.5, 0.7] {
            let t = [c(rho, 0.0)];
            let truncated = series.eval_reinhardt(&t).unwrap();
            let exact = 1.0 / (PI * (1.0 - rho) * (1.0 - rho));
            let true_tail = exact - truncated.value.re;
            assert!(truncated.reliable);
            // The f64 difference of two O(1) kernel values carries rounding
            // noise around 1e-16, which dominates the true tail at small rho.
            assert!(
                true_tail.abs() <= truncated.tail_bound * 1.000_001 + 1e-15 * exact,
                "rho = {rho}: true tail {true_tail}, bound {}",
                truncated.tail_bound
            );
        }
    }

    #[test]
    fn budget_is_enforced() {
        let spec = EllipsoidSpec::unit_ball(2);
        assert!(matches!(
            KernelSeries::build_with_budget(&spec, 60, 1024),
            Err(Error::ResourceLimit { .. })
        ));
    }

    #[test]
    fn cap_search_converges_on_ball() {
        let spec = EllipsoidSpec::unit_ball(2);
        let result = pick_cap(&spec, &[0.4, 0.4], 1e-10, 512).unwrap();
        assert!(result.converged);
        assert!(result.tail.bound <= 1e-10);

        let capped = pick_cap(&spec, &[0.7, 0.7], 1e-10, 12).unwrap();
        assert!(!capped.converged);
        assert_eq!(capped.series.cap(), 12);
    }

    #[test]
    fn layer_offsets_partition_the_table() {
        let spec = EllipsoidSpec::unit_ball(3);
        let series = KernelSeries::build(&spec, 7).unwrap();
        let offsets = layer_offsets(series.indices(), series.cap());
        assert_eq!(offsets.len(), 9);
        assert_eq!(*offsets.last().unwrap(), series.num_terms());
        for (d, window) in offsets.windows(2).enumerate() {
            for i in window[0]..window[1] {
                assert_eq!(series.indices()[i].degree() as usize, d);
            }
        }
    }

    #[test]
    fn lookup_by_index_works() {
        let spec = EllipsoidSpec::new(vec![1.0, 2.0]).unwrap();
        let series = KernelSeries::build(&spec, 6).unwrap();
        let alpha = MultiIndex::new(vec![2, 3]);
        let expected = -spec.log_moment(&alpha).unwrap();
        assert_eq!(series.log_coeff(&alpha), Some(expected));
        assert_eq!(series.log_coeff(&MultiIndex::new(vec![5, 2])), None);
    }

    proptest! {
        #[test]
        fn kernel_is_hermitian(
            zr in proptest::collection::vec(0.0f64..0.55, 2),
            zp in proptest::collection::vec(0.0f64..(2.0 * PI), 2),
            wr in proptest::collection::vec(0.0f64..0.55, 2),
            wp in proptest::collection::vec(0.0f64..(2.0 * PI), 2),
        ) {
            let spec = EllipsoidSpec::new(vec![1.0, 2.0]).unwrap();
            let series = KernelSeries::build(&spec, 24).unwrap();
            let z = crate::ellipsoid::ComplexPoint::from_polar(&zr, &zp);
            let w = crate::ellipsoid::ComplexPoint::from_polar(&wr, &wp);
            let kzw = series.eval_kernel(&z, &w).unwrap().value;
            let kwz = series.eval_kernel(&w, &z).unwrap().value;
            prop_assert!((kzw - kwz.conj()).norm() <= 1e-11 * kzw.norm().max(1.0));
        }

        #[test]
        fn diagonal_dominates_reciprocal_volume(
            zr in proptest::collection::vec(0.0f64..0.6, 2),
            zp in proptest::collection::vec(0.0f64..(2.0 * PI), 2),
        ) {
            let spec = EllipsoidSpec::new(vec![2.0, 1.0]).unwrap();
            let series = KernelSeries::build(&spec, 24).unwrap();
            let z = crate::ellipsoid::ComplexPoint::from_polar(&zr, &zp);
            let k = series.eval_kernel(&z, &z).unwrap();
            // On the diagonal every term is non-negative, so the truncated
            // value is real, positive, and at least the constant term.
            prop_assert!(k.value.im.abs() <= 1e-12 * k.value.re.max(1.0));
            prop_assert!(k.value.re >= 1.0 / spec.volume() - 1e-12);
        }
    }
}
