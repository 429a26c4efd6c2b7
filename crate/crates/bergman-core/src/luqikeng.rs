//! Global zero search for the kernel (the Lu Qi-Keng property), plus two
//! experiments built on top of it: zero-freeness transfer along power-map
//! coverings, and Ramadanov-style convergence of the kernels of `E(j m)`
//! towards the bidisc kernel as `j` grows.
//!
//! The search exploits the Reinhardt structure: `K(z, w)` depends on the
//! pair only through `t_k = z_k conj(w_k)`, and the attainable moduli
//! `rho_k = |t_k|` form exactly the region `sum_k rho_k^(m_k) < 1` (take
//! `z = w = sqrt(rho)` to attain any point; the arithmetic-geometric mean
//! inequality shows nothing more is attainable).  So the search runs over
//! `2 n` real parameters `(rho, theta)` instead of `4 n`.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;
use num_complex::Complex64;
// Float supplies the f64 math methods in pure no_std builds; builds whose
// dependency graph links std resolve them inherently and see this import
// as unused.
#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::ellipsoid::{multi_indices, pow_positive, ComplexPoint, EllipsoidSpec, MultiIndex};
use crate::error::{Error, Result};
use crate::kahan::CompensatedSum;
use crate::kernel::{
    eval_graded_terms, layer_offsets, polydisc_kernel, region_sum, tail_from_layers, EvalResult,
    KernelSeries,
};
use crate::simplex::{self, SimplexOptions};
use crate::transforms::{check_bell_covering_law, HoloMap};

/// Per-term rounding unit used in the accumulated evaluation error bound.
const EVAL_ULP: f64 = 2.2e-16;

/// Moduli below this are nudged up before covering checks, away from the
/// branch locus of the power map.
const BRANCH_NUDGE: f64 = 0.05;

/// Residual tolerance for declaring a covering check consistent.
pub const TRANSFER_RESIDUAL_TOLERANCE: f64 = 1e-6;

/// Largest number of certificate cells (`resolution^(2 dim)`).
const MAX_CERTIFICATE_CELLS: usize = 1 << 22;

/// The attainable moduli `rho_k = |z_k conj(w_k)|` for interior pairs:
/// the region `sum_k rho_k^(m_k) < 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModuliRegion {
    exponents: Vec<f64>,
}

impl ModuliRegion {
    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    /// `sum_k rho_k^(m_k)`; below 1 means `rho` is attainable.
    pub fn sum(&self, rho: &[f64]) -> f64 {
        let mut acc = CompensatedSum::new();
        for (&r, &m) in rho.iter().zip(&self.exponents) {
            acc.add(pow_positive(r, m));
        }
        acc.value()
    }

    /// Like [`Self::sum`] with every modulus scaled by `scale` first.
    fn sum_scaled(&self, rho: &[f64], scale: f64) -> f64 {
        let mut acc = CompensatedSum::new();
        for (&r, &m) in rho.iter().zip(&self.exponents) {
            acc.add(pow_positive(scale * r, m));
        }
        acc.value()
    }

    pub fn contains(&self, rho: &[f64]) -> bool {
        rho.len() == self.dim() && rho.iter().all(|&r| r >= 0.0) && self.sum(rho) < 1.0
    }

    /// Largest value coordinate `k` can take with the others at zero while
    /// keeping `sum <= 1 - margin`.
    pub fn max_radius(&self, k: usize, margin: f64) -> f64 {
        pow_positive(1.0 - margin, 1.0 / self.exponents[k])
    }
}

/// Region of attainable Reinhardt moduli for a domain.
pub fn achievable_moduli(spec: &EllipsoidSpec) -> ModuliRegion {
    ModuliRegion {
        exponents: spec.exponents().to_vec(),
    }
}

/// Configuration of the multistart zero search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Series truncation degree.
    pub cap: u32,
    /// Number of independent local searches.
    pub starts: u32,
    /// Seed of the deterministic start-point generator.
    pub seed: u64,
    /// Iteration budget per local search.
    pub max_iters: u32,
    /// Objective-spread stopping tolerance (0 disables).
    pub f_tol: f64,
    /// Simplex-diameter stopping tolerance.
    pub x_tol: f64,
    /// Shrink margin: the search stays in `sum rho^m <= 1 - margin`.
    pub margin: f64,
    /// Zero threshold as a fraction of `|F(0)|`.
    pub zero_threshold_rel: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            cap: 60,
            starts: 64,
            seed: 0,
            max_iters: 400,
            f_tol: 0.0,
            x_tol: 1e-10,
            margin: 0.05,
            zero_threshold_rel: 1e-10,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.starts < 1 {
            return Err(Error::InvalidInput(String::from("starts must be >= 1")));
        }
        if !(self.margin > 0.0 && self.margin < 1.0) {
            return Err(Error::InvalidInput(String::from(
                "margin must lie strictly between 0 and 1",
            )));
        }
        if !(self.zero_threshold_rel > 0.0 && self.zero_threshold_rel.is_finite()) {
            return Err(Error::InvalidInput(String::from(
                "zero threshold must be positive and finite",
            )));
        }
        if self.max_iters < 1 {
            return Err(Error::InvalidInput(String::from("max_iters must be >= 1")));
        }
        if !(self.x_tol >= 0.0) || !(self.f_tol >= 0.0) {
            return Err(Error::InvalidInput(String::from(
                "stopping tolerances must be non-negative",
            )));
        }
        Ok(())
    }
}

/// Outcome classification of a search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchStatus {
    /// `min |F|` fell below the zero threshold and the evaluation error
    /// bound at the minimizer is below that threshold too.
    ZeroFound,
    /// No zero below threshold; `margin = min_abs - error_bound` is the
    /// certified distance from zero (negative or -inf when uncertified).
    PositiveOnSearch,
}

/// Optional uniform lower bound for `|F|` over the shrunk search region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCertificate {
    /// Cells per axis (each of the `2 dim` axes).
    pub resolution: usize,
    /// Number of cells that intersect the region and were bounded.
    pub cells: usize,
    /// Uniform lower bound for `|F|`; meaningful only when positive.
    pub lower_bound: f64,
    /// True when every cell had a reliable tail bound and the lower bound
    /// is positive.
    pub valid: bool,
}

/// Result of a zero search.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchReport {
    pub status: SearchStatus,
    /// Smallest `|F(t)|` found.
    pub min_abs: f64,
    /// `min_abs - error_bound`: certified distance from zero when
    /// positive; `-inf` when the tail bound was unavailable.
    pub margin: f64,
    /// Series tail bound plus accumulated rounding at the minimizer.
    pub error_bound: f64,
    /// Absolute threshold below which a value counts as a zero.
    pub zero_threshold: f64,
    pub argmin_moduli: Vec<f64>,
    pub argmin_phases: Vec<f64>,
    /// The minimizing Reinhardt variable `t_k = rho_k exp(i theta_k)`.
    pub argmin_t: Vec<Complex64>,
    /// Total objective evaluations across all starts.
    pub evaluations: u64,
    pub starts_run: u32,
    /// Index of the start whose local search produced the minimum.
    pub best_start: u32,
    pub grid_certificate: Option<GridCertificate>,
}

/// A series `F(t) = sum_alpha c_alpha t^alpha` that the search engine can
/// evaluate, together with the bookkeeping needed for error bounds.
pub trait SearchSeries {
    fn dim(&self) -> usize;
    /// Attainable moduli of the variable `t`.
    fn region(&self) -> ModuliRegion;
    fn num_terms(&self) -> usize;
    /// `|F(0)| = |c_0|`, the scale defining the zero threshold.
    fn origin_abs(&self) -> f64;
    fn eval_t(&self, t: &[Complex64]) -> Result<EvalResult>;
    /// `sum_alpha |c_alpha| rho^alpha` (as the real part of `value`),
    /// with the tail bound of that positive series.
    fn abs_profile(&self, rho: &[f64]) -> Result<EvalResult>;
    /// `sum_alpha |c_alpha| alpha_k rho^(alpha - e_k)`, an upper bound for
    /// `|dF/dt_k|` on the polydisc of polyradius `rho`.
    fn abs_derivative(&self, axis: usize, rho: &[f64]) -> Result<f64>;
}

impl SearchSeries for KernelSeries {
    fn dim(&self) -> usize {
        KernelSeries::dim(self)
    }

    fn region(&self) -> ModuliRegion {
        achievable_moduli(self.spec())
    }

    fn num_terms(&self) -> usize {
        KernelSeries::num_terms(self)
    }

    fn origin_abs(&self) -> f64 {
        self.log_coeffs_slice()[0].exp()
    }

    fn eval_t(&self, t: &[Complex64]) -> Result<EvalResult> {
        self.eval_reinhardt(t)
    }

    fn abs_profile(&self, rho: &[f64]) -> Result<EvalResult> {
        // All kernel coefficients are positive, so the evaluation at the
        // non-negative real point rho is already the absolute profile.
        let t: Vec<Complex64> = rho.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        self.eval_reinhardt(&t)
    }

    fn abs_derivative(&self, axis: usize, rho: &[f64]) -> Result<f64> {
        derivative_abs_sum(self.indices(), self.log_coeffs_slice(), axis, rho)
    }
}

/// A graded series with explicit coefficient signs.  The search engine is
/// validated on one of these: the disc kernel with one flipped sign has a
/// genuine zero at a location an independent root solver can confirm.
#[derive(Clone, Debug)]
pub struct SignedSeries {
    spec: EllipsoidSpec,
    cap: u32,
    indices: Vec<MultiIndex>,
    log_abs: Vec<f64>,
    signs: Vec<f64>,
    offsets: Vec<usize>,
}

impl SignedSeries {
    /// Builds the series from explicit signed coefficients; indices not
    /// listed get coefficient zero.
    pub fn from_coefficients(
        spec: &EllipsoidSpec,
        cap: u32,
        entries: &[(MultiIndex, f64)],
    ) -> Result<Self> {
        let indices = multi_indices(spec.dim(), cap);
        let mut log_abs = vec![f64::NEG_INFINITY; indices.len()];
        let mut signs = vec![1.0f64; indices.len()];
        for (alpha, value) in entries {
            if alpha.dim() != spec.dim() {
                return Err(Error::DimensionMismatch {
                    expected: spec.dim(),
                    got: alpha.dim(),
                });
            }
            let slot = indices.binary_search(alpha).map_err(|_| {
                Error::InvalidInput(format!(
                    "coefficient index of degree {} exceeds the cap {cap}",
                    alpha.degree()
                ))
            })?;
            log_abs[slot] = value.abs().ln();
            signs[slot] = if *value < 0.0 { -1.0 } else { 1.0 };
        }
        let offsets = layer_offsets(&indices, cap);
        Ok(Self {
            spec: spec.clone(),
            cap,
            indices,
            log_abs,
            signs,
            offsets,
        })
    }

    /// The engine-validation series: disc kernel coefficients
    /// `(d + 1) / pi` with the degree-1 coefficient negated.  Its zeros in
    /// the unit disc are the complex pair solving
    /// `4 t^3 - 8 t^2 + 4 t - 1 = 0`.
    pub fn validation_series(cap: u32) -> Self {
        let spec = EllipsoidSpec::disc();
        let entries: Vec<(MultiIndex, f64)> = (0..=cap)
            .map(|d| {
                let c = (d as f64 + 1.0) / core::f64::consts::PI;
                (MultiIndex::new(vec![d]), if d == 1 { -c } else { c })
            })
            .collect();
        Self::from_coefficients(&spec, cap, &entries).expect("entries lie within the cap")
    }

    pub fn spec(&self) -> &EllipsoidSpec {
        &self.spec
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }
}

impl SearchSeries for SignedSeries {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn region(&self) -> ModuliRegion {
        achievable_moduli(&self.spec)
    }

    fn num_terms(&self) -> usize {
        self.indices.len()
    }

    fn origin_abs(&self) -> f64 {
        self.log_abs[0].exp()
    }

    fn eval_t(&self, t: &[Complex64]) -> Result<EvalResult> {
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
            &self.log_abs,
            Some(&self.signs),
            &self.offsets,
            t,
        );
        let tail = tail_from_layers(&terms.abs_layers);
        Ok(EvalResult {
            value: terms.value,
            tail_bound: tail.bound,
            reliable: in_region && tail.reliable,
        })
    }

    fn abs_profile(&self, rho: &[f64]) -> Result<EvalResult> {
        if rho.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: rho.len(),
            });
        }
        let t: Vec<Complex64> = rho.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        let moduli: Vec<f64> = rho.to_vec();
        let in_region = region_sum(&self.spec, &moduli) < 1.0;
        // Signs omitted: this sums |c_alpha| rho^alpha.
        let terms = eval_graded_terms(&self.indices, &self.log_abs, None, &self.offsets, &t);
        let tail = tail_from_layers(&terms.abs_layers);
        Ok(EvalResult {
            value: terms.value,
            tail_bound: tail.bound,
            reliable: in_region && tail.reliable,
        })
    }

    fn abs_derivative(&self, axis: usize, rho: &[f64]) -> Result<f64> {
        derivative_abs_sum(&self.indices, &self.log_abs, axis, rho)
    }
}

/// `sum_alpha |c_alpha| alpha_axis rho^(alpha - e_axis)` over a graded
/// coefficient table stored as log-magnitudes.
fn derivative_abs_sum(
    indices: &[MultiIndex],
    log_abs: &[f64],
    axis: usize,
    rho: &[f64],
) -> Result<f64> {
    if rho.len() != indices.first().map_or(0, MultiIndex::dim) {
        return Err(Error::DimensionMismatch {
            expected: indices.first().map_or(0, MultiIndex::dim),
            got: rho.len(),
        });
    }
    let log_rho: Vec<f64> = rho.iter().map(|&r| r.ln()).collect();
    let mut acc = CompensatedSum::new();
    for (alpha, &lc) in indices.iter().zip(log_abs) {
        let a_axis = alpha.entries()[axis];
        if a_axis == 0 || lc == f64::NEG_INFINITY {
            continue;
        }
        let mut log_mag = lc + (a_axis as f64).ln();
        let mut vanishes = false;
        for (k, &a) in alpha.entries().iter().enumerate() {
            let power = if k == axis { a - 1 } else { a };
            if power > 0 {
                if rho[k] == 0.0 {
                    vanishes = true;
                    break;
                }
                log_mag += power as f64 * log_rho[k];
            }
        }
        if !vanishes {
            acc.add(log_mag.exp());
        }
    }
    Ok(acc.value())
}

/// Result of one local search, identified by its start index.
#[derive(Clone, Debug)]
pub struct StartOutcome {
    pub start_index: u32,
    /// Best objective value `|F(t)|^2` reached.
    pub objective: f64,
    /// Best packed parameter vector `[rho.., theta..]`.
    pub point: Vec<f64>,
    pub evaluations: u64,
}

/// Uniform f64 in [0, 1) from the top 53 bits of the generator.
fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn wrap_angle(theta: f64) -> f64 {
    let r = theta % TAU;
    if r < 0.0 {
        r + TAU
    } else {
        r
    }
}

/// Restores a packed `[rho.., theta..]` point to feasibility: moduli are
/// reflected to non-negative, rescaled onto `sum rho^m <= 1 - margin` by
/// bisection when outside, and angles are wrapped into `[0, 2 pi)`.
fn repair_point(region: &ModuliRegion, margin: f64, x: &mut [f64]) {
    let dim = region.dim();
    let limit = 1.0 - margin;
    for v in x[..dim].iter_mut() {
        *v = v.abs();
    }
    if region.sum(&x[..dim]) > limit {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if region.sum_scaled(&x[..dim], mid) > limit {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        for v in x[..dim].iter_mut() {
            *v *= lo;
        }
    }
    for v in x[dim..].iter_mut() {
        *v = wrap_angle(*v);
    }
}

/// Runs the local search of one start.  Start points are drawn from a
/// counter-based generator seeded by `(cfg.seed, start_index)`, so each
/// start is reproducible in isolation; parallel drivers may run starts in
/// any order and still combine to the same result via [`finalize_search`].
pub fn search_single_start<S: SearchSeries + ?Sized>(
    series: &S,
    cfg: &SearchConfig,
    start_index: u32,
) -> Result<StartOutcome> {
    let dim = series.dim();
    let region = series.region();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(start_index as u64 + 1);

    let max_r: Vec<f64> = (0..dim).map(|k| region.max_radius(k, cfg.margin)).collect();
    let mut x = vec![0.0f64; 2 * dim];
    for k in 0..dim {
        x[k] = unit_f64(&mut rng) * max_r[k];
    }
    for k in 0..dim {
        x[dim + k] = unit_f64(&mut rng) * TAU;
    }
    repair_point(&region, cfg.margin, &mut x);

    let mut steps = vec![0.0f64; 2 * dim];
    for k in 0..dim {
        steps[k] = 0.1 * max_r[k];
        steps[dim + k] = 0.5;
    }

    let objective = |p: &[f64]| -> f64 {
        let t: Vec<Complex64> = (0..dim)
            .map(|k| Complex64::from_polar(p[k], p[dim + k]))
            .collect();
        match series.eval_t(&t) {
            Ok(result) => result.value.norm_sqr(),
            Err(_) => f64::INFINITY,
        }
    };
    let repair = |p: &mut [f64]| repair_point(&region, cfg.margin, p);
    let options = SimplexOptions {
        max_iters: cfg.max_iters as usize,
        f_tol: cfg.f_tol,
        x_tol: cfg.x_tol,
    };
    let outcome = simplex::minimize(objective, repair, &x, &steps, &options);
    Ok(StartOutcome {
        start_index,
        objective: outcome.value,
        point: outcome.x,
        evaluations: outcome.evaluations,
    })
}

/// Combines per-start outcomes into the final report.  The minimum is the
/// smallest objective, ties broken by lowest start index, so the result
/// does not depend on the order in which outcomes were produced.
pub fn finalize_search<S: SearchSeries + ?Sized>(
    series: &S,
    cfg: &SearchConfig,
    outcomes: &[StartOutcome],
) -> Result<SearchReport> {
    let best = outcomes
        .iter()
        .min_by(|a, b| {
            (a.objective, a.start_index)
                .partial_cmp(&(b.objective, b.start_index))
                .expect("objectives are never NaN")
        })
        .ok_or_else(|| Error::InvalidInput(String::from("no search outcomes to combine")))?;

    let dim = series.dim();
    let rho = best.point[..dim].to_vec();
    let phases = best.point[dim..].to_vec();
    let t: Vec<Complex64> = rho
        .iter()
        .zip(&phases)
        .map(|(&r, &th)| Complex64::from_polar(r, th))
        .collect();

    let eval = series.eval_t(&t)?;
    let profile = series.abs_profile(&rho)?;
    let min_abs = eval.value.norm();
    let rounding = series.num_terms() as f64 * EVAL_ULP * profile.value.re;
    let error_bound = if eval.reliable && profile.reliable && eval.tail_bound.is_finite() {
        eval.tail_bound + rounding
    } else {
        f64::INFINITY
    };
    let zero_threshold = cfg.zero_threshold_rel * series.origin_abs();
    let status = if min_abs < zero_threshold && error_bound < zero_threshold {
        SearchStatus::ZeroFound
    } else {
        SearchStatus::PositiveOnSearch
    };
    let evaluations: u64 = outcomes.iter().map(|o| o.evaluations).sum::<u64>() + 2;

    Ok(SearchReport {
        status,
        min_abs,
        margin: min_abs - error_bound,
        error_bound,
        zero_threshold,
        argmin_moduli: rho,
        argmin_phases: phases,
        argmin_t: t,
        evaluations,
        starts_run: outcomes.len() as u32,
        best_start: best.start_index,
        grid_certificate: None,
    })
}

/// Multistart zero search over an arbitrary [`SearchSeries`].
pub fn zero_search_series<S: SearchSeries + ?Sized>(
    series: &S,
    cfg: &SearchConfig,
) -> Result<SearchReport> {
    cfg.validate()?;
    let mut outcomes = Vec::with_capacity(cfg.starts as usize);
    for start in 0..cfg.starts {
        outcomes.push(search_single_start(series, cfg, start)?);
    }
    finalize_search(series, cfg, &outcomes)
}

/// Multistart zero search for the kernel of a domain.
pub fn zero_search(spec: &EllipsoidSpec, cfg: &SearchConfig) -> Result<SearchReport> {
    cfg.validate()?;
    let series = KernelSeries::build(spec, cfg.cap)?;
    zero_search_series(&series, cfg)
}

/// Attempts a uniform lower bound for `|F|` over the shrunk region by
/// covering `(rho, theta)` space with `resolution^(2 dim)` cells.  Each
/// cell is anchored at its lowest moduli corner and center angles;
/// first-order derivative bounds, the series tail at the top corner, and
/// accumulated rounding are subtracted from the anchor value.
///
/// Feasible at small dimension only; the cost grows as `resolution^(2 n)`
/// and the derivative bounds ignore phases, so fine grids are needed near
/// the region boundary.
pub fn grid_certificate<S: SearchSeries + ?Sized>(
    series: &S,
    cfg: &SearchConfig,
    resolution: usize,
) -> Result<GridCertificate> {
    cfg.validate()?;
    if resolution == 0 {
        return Err(Error::InvalidInput(String::from(
            "certificate resolution must be at least 1",
        )));
    }
    let dim = series.dim();
    let cells_total = resolution
        .checked_pow(2 * dim as u32)
        .unwrap_or(usize::MAX);
    if cells_total > MAX_CERTIFICATE_CELLS {
        return Err(Error::ResourceLimit {
            required: cells_total,
            budget: MAX_CERTIFICATE_CELLS,
        });
    }
    let region = series.region();
    let limit = 1.0 - cfg.margin;
    let widths: Vec<f64> = (0..dim)
        .map(|k| region.max_radius(k, cfg.margin) / resolution as f64)
        .collect();
    let angle_width = TAU / resolution as f64;

    let mut lower = f64::INFINITY;
    let mut all_reliable = true;
    let mut counted = 0usize;

    let mut rho_digits = vec![0usize; dim];
    let mut rho_bot = vec![0.0f64; dim];
    let mut rho_top = vec![0.0f64; dim];
    loop {
        for k in 0..dim {
            rho_bot[k] = rho_digits[k] as f64 * widths[k];
            rho_top[k] = (rho_digits[k] + 1) as f64 * widths[k];
        }
        // The sum is increasing in every modulus, so the bottom corner
        // decides whether the cell meets the shrunk region at all.
        if region.sum(&rho_bot) <= limit {
            let profile = series.abs_profile(&rho_top)?;
            if !profile.reliable {
                all_reliable = false;
            }
            let rounding = series.num_terms() as f64 * EVAL_ULP * profile.value.re;
            let mut shift = CompensatedSum::new();
            for k in 0..dim {
                let derivative = series.abs_derivative(k, &rho_top)?;
                shift.add(derivative * widths[k]);
                shift.add(rho_top[k] * derivative * 0.5 * angle_width);
            }
            let deduction = shift.value() + profile.tail_bound + rounding;

            let mut angle_digits = vec![0usize; dim];
            loop {
                let t: Vec<Complex64> = (0..dim)
                    .map(|k| {
                        Complex64::from_polar(
                            rho_bot[k],
                            (angle_digits[k] as f64 + 0.5) * angle_width,
                        )
                    })
                    .collect();
                let eval = series.eval_t(&t)?;
                if !eval.reliable {
                    all_reliable = false;
                }
                lower = lower.min(eval.value.norm() - deduction);
                counted += 1;
                if !advance_digits(&mut angle_digits, resolution) {
                    break;
                }
            }
        }
        if !advance_digits(&mut rho_digits, resolution) {
            break;
        }
    }
    Ok(GridCertificate {
        resolution,
        cells: counted,
        lower_bound: lower,
        valid: all_reliable && lower > 0.0,
    })
}

fn advance_digits(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

/// Outcome of the zero-freeness transfer experiment along the covering
/// `z -> (z_k^j) : E(j m) -> E(m)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroTransferReport {
    pub j: u32,
    /// Search on the covering source `E(j m)`.
    pub upstairs: SearchReport,
    /// Search on the covering target `E(m)`; absent when `j = 1`.
    pub downstairs: Option<SearchReport>,
    /// Covering-identity residuals, one per source preimage of the
    /// downstairs minimizer.
    pub covering_residuals: Vec<f64>,
    pub max_covering_residual: Option<f64>,
    /// True when every level searched positive and the covering identity
    /// held at the checked points.
    pub consistent: bool,
}

/// Searches both levels of the power covering and checks the covering
/// identity at the preimages of the downstairs minimizer: evidence for
/// "zero-free upstairs implies zero-free downstairs" along those points.
pub fn zero_transfer_experiment(
    target: &EllipsoidSpec,
    j: u32,
    cfg: &SearchConfig,
) -> Result<ZeroTransferReport> {
    cfg.validate()?;
    let source_spec = target.power_cover_source(j)?;
    let upstairs = zero_search(&source_spec, cfg)?;
    if j == 1 {
        let consistent = upstairs.status == SearchStatus::PositiveOnSearch;
        return Ok(ZeroTransferReport {
            j,
            upstairs,
            downstairs: None,
            covering_residuals: Vec::new(),
            max_covering_residual: None,
            consistent,
        });
    }
    let downstairs = zero_search(target, cfg)?;

    // Reconstruct an interior pair from the minimizer: t_k = z_k conj(w_k)
    // with z = sqrt(rho) e^(i theta), w = sqrt(rho).  Tiny moduli are
    // nudged off the branch locus, then the point is re-shrunk into the
    // search region.
    let dim = target.dim();
    let region = achievable_moduli(target);
    let mut packed = vec![0.0f64; 2 * dim];
    for k in 0..dim {
        packed[k] = downstairs.argmin_moduli[k].max(BRANCH_NUDGE);
        packed[dim + k] = downstairs.argmin_phases[k];
    }
    repair_point(&region, cfg.margin, &mut packed);
    let z_down = ComplexPoint::new(
        (0..dim)
            .map(|k| Complex64::from_polar(packed[k].sqrt(), packed[dim + k]))
            .collect(),
    );
    let w_down = ComplexPoint::new(
        (0..dim)
            .map(|k| Complex64::new(packed[k].sqrt(), 0.0))
            .collect(),
    );

    let map = HoloMap::power_map(target.clone(), j)?;
    let preimages = map.local_inverses(&z_down)?;
    let mut covering_residuals = Vec::with_capacity(preimages.len());
    let mut max_residual = 0.0f64;
    for preimage in &preimages {
        // Closed forms replace series where available: near the rim of
        // the search region the minimizer's moduli are large and series
        // truncation would otherwise dominate the residual.
        let check =
            check_bell_covering_law(target, j, &preimage.point, &w_down, (cfg.cap, cfg.cap), true)?;
        max_residual = max_residual.max(check.residual);
        covering_residuals.push(check.residual);
    }

    let consistent = upstairs.status == SearchStatus::PositiveOnSearch
        && downstairs.status == SearchStatus::PositiveOnSearch
        && max_residual <= TRANSFER_RESIDUAL_TOLERANCE;
    Ok(ZeroTransferReport {
        j,
        upstairs,
        downstairs: Some(downstairs),
        covering_residuals,
        max_covering_residual: Some(max_residual),
        consistent,
    })
}

/// One row of the exhaustion-convergence table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RamadanovRow {
    pub j: u32,
    pub point_index: usize,
    /// `K_j(p, p)`, the kernel of `E(j m)` on the diagonal.
    pub value: f64,
    /// `|K_j(p, p) - K_limit(p, p)|` against the bidisc kernel.
    pub difference: f64,
}

/// Convergence table of the kernels of `E(j m)` towards the bidisc kernel.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RamadanovReport {
    pub j_list: Vec<u32>,
    /// Bidisc diagonal values, one per test point.
    pub limits: Vec<f64>,
    /// Rows grouped by `j` (outer) then point (inner).
    pub rows: Vec<RamadanovRow>,
    /// True when, for every point, the differences strictly decrease from
    /// the second listed `j` onward.
    pub eventually_decreasing: bool,
}

/// Runs the exhaustion-convergence experiment: as `j` grows, `E(j m)`
/// fills out the bidisc and its kernel should approach the bidisc kernel
/// at interior points.
pub fn ramadanov_experiment(
    base: &EllipsoidSpec,
    j_list: &[u32],
    points: &[ComplexPoint],
    cap: u32,
) -> Result<RamadanovReport> {
    if base.dim() != 2 {
        return Err(Error::Incompatible(String::from(
            "the exhaustion experiment is set up for two complex dimensions",
        )));
    }
    if j_list.is_empty() || points.is_empty() {
        return Err(Error::InvalidInput(String::from(
            "need at least one level and one test point",
        )));
    }
    if j_list.windows(2).any(|w| w[0] >= w[1]) || j_list[0] == 0 {
        return Err(Error::InvalidInput(String::from(
            "levels must be strictly increasing and at least 1",
        )));
    }

    let mut limits = Vec::with_capacity(points.len());
    for p in points {
        limits.push(polydisc_kernel(p, p)?.re);
    }

    let mut rows = Vec::with_capacity(j_list.len() * points.len());
    for &j in j_list {
        let spec_j = base.power_cover_source(j)?;
        for (point_index, p) in points.iter().enumerate() {
            if !spec_j.contains(p)? {
                return Err(Error::InvalidInput(format!(
                    "test point {point_index} escapes the covering domain at j = {j}"
                )));
            }
        }
        let series = KernelSeries::build(&spec_j, cap)?;
        for (point_index, p) in points.iter().enumerate() {
            let value = series.eval_kernel(p, p)?.value.re;
            rows.push(RamadanovRow {
                j,
                point_index,
                value,
                difference: (value - limits[point_index]).abs(),
            });
        }
    }

    let mut eventually_decreasing = true;
    for point_index in 0..points.len() {
        let differences: Vec<f64> = rows
            .iter()
            .filter(|r| r.point_index == point_index)
            .map(|r| r.difference)
            .collect();
        for i in 2..differences.len() {
            if !(differences[i] < differences[i - 1]) {
                eventually_decreasing = false;
            }
        }
    }

    Ok(RamadanovReport {
        j_list: j_list.to_vec(),
        limits,
        rows,
        eventually_decreasing,
    })
}

/// Boxed helper so callers can treat both kernel and signed series
/// uniformly behind one object when needed.
pub type BoxedSearchSeries = Box<dyn SearchSeries>;

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn quick_config() -> SearchConfig {
        // Cap 60 keeps the truncation error at the shell radius 0.75 near
        // 1e-5, well inside the comparison tolerance below.
        SearchConfig {
            cap: 60,
            starts: 8,
            seed: 7,
            margin: 0.25,
            ..SearchConfig::default()
        }
    }

    #[test]
    fn achievable_region_matches_expectations() {
        let ball = achievable_moduli(&EllipsoidSpec::unit_ball(2));
        assert!(ball.contains(&[0.49, 0.5]));
        assert!(!ball.contains(&[0.6, 0.5]));
        assert!(!ball.contains(&[-0.1, 0.5]));

        let disc = achievable_moduli(&EllipsoidSpec::disc());
        assert!(disc.contains(&[0.999]));
        assert!(!disc.contains(&[1.0]));

        let mixed = achievable_moduli(&EllipsoidSpec::new(vec![1.0, 2.0]).unwrap());
        assert!(mixed.contains(&[0.5, 0.70]));
        assert!(!mixed.contains(&[0.5, 0.72]));

        // rho_2^2 <= 0.81 allows rho_2 up to 0.9.
        let r = mixed.max_radius(1, 0.19);
        assert!((r - 0.9).abs() < 1e-15);
    }

    #[test]
    fn config_validation_rejects_bad_fields() {
        let ok = SearchConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            SearchConfig { starts: 0, ..ok.clone() },
            SearchConfig { margin: 0.0, ..ok.clone() },
            SearchConfig { margin: 1.0, ..ok.clone() },
            SearchConfig { zero_threshold_rel: 0.0, ..ok.clone() },
            SearchConfig { max_iters: 0, ..ok.clone() },
            SearchConfig { x_tol: -1.0, ..ok.clone() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn repair_projects_into_the_shrunk_region() {
        let region = achievable_moduli(&EllipsoidSpec::unit_ball(2));
        let mut x = vec![-0.9, 0.8, -1.0, 7.0];
        repair_point(&region, 0.1, &mut x);
        assert!(x[0] >= 0.0 && x[1] >= 0.0);
        assert!(region.sum(&x[..2]) <= 0.9 + 1e-12);
        assert!((0.0..TAU).contains(&x[2]) && (0.0..TAU).contains(&x[3]));
        // The rescaling preserves the direction of the moduli.
        assert!((x[0] / x[1] - 0.9 / 0.8).abs() < 1e-12);
    }

    #[test]
    fn ball_search_certifies_a_positive_minimum() {
        // The 2-ball kernel 2/pi^2 (1 - t1 - t2)^-3 has its modulus
        // minimum on the shrunk region at t1 + t2 = -(1 - margin), value
        // 2/pi^2 (1 + 1 - margin)^-3.
        let report = zero_search(&EllipsoidSpec::unit_ball(2), &quick_config()).unwrap();
        assert_eq!(report.status, SearchStatus::PositiveOnSearch);
        let expected = 2.0 / (PI * PI) * (1.75f64).powi(-3);
        assert!(
            (report.min_abs - expected).abs() < 1e-4,
            "min_abs {} vs {expected}",
            report.min_abs
        );
        assert!(report.margin > 0.0, "margin {}", report.margin);
        assert!(report.error_bound < report.min_abs);
        let attained: f64 = report.argmin_moduli.iter().sum();
        assert!(attained > 0.74, "minimizer not on the shell: {attained}");
        assert!(report.best_start < report.starts_run);
        assert!(report.evaluations > 0);
    }

    #[test]
    fn search_is_deterministic() {
        let spec = EllipsoidSpec::new(vec![1.0, 2.0]).unwrap();
        let cfg = SearchConfig {
            cap: 24,
            starts: 6,
            seed: 123,
            margin: 0.3,
            ..SearchConfig::default()
        };
        let a = zero_search(&spec, &cfg).unwrap();
        let b = zero_search(&spec, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kernel_is_positive_on_the_nonnegative_face() {
        // With all phases zero the series has positive terms, so the
        // value is at least the constant term 1/volume.
        let spec = EllipsoidSpec::new(vec![1.0, 2.0]).unwrap();
        let series = KernelSeries::build(&spec, 30).unwrap();
        let floor = 1.0 / spec.volume();
        for rho in [[0.0, 0.0], [0.3, 0.3], [0.6, 0.2], [0.05, 0.8]] {
            let t: Vec<Complex64> = rho.iter().map(|&r| Complex64::new(r, 0.0)).collect();
            let value = series.eval_reinhardt(&t).unwrap().value;
            assert!(value.im.abs() < 1e-14);
            assert!(value.re >= floor - 1e-12, "{value} below {floor}");
        }
    }

    #[test]
    fn diagonal_dominates_inverse_volume() {
        let spec = EllipsoidSpec::new(vec![2.0, 1.0]).unwrap();
        let series = KernelSeries::build(&spec, 30).unwrap();
        let floor = 1.0 / spec.volume();
        for z in [
            ComplexPoint::new(vec![Complex64::new(0.3, 0.4), Complex64::new(-0.2, 0.1)]),
            ComplexPoint::new(vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, -0.6)]),
            ComplexPoint::new(vec![Complex64::new(-0.5, 0.2), Complex64::new(0.3, 0.3)]),
        ] {
            let value = series.eval_kernel(&z, &z).unwrap().value.re;
            assert!(value >= floor - 1e-12, "K(z,z) = {value} below {floor}");
        }
    }

    /// Durand-Kerner root solver for a cubic with real coefficients
    /// `c[0] + c[1] t + c[2] t^2 + c[3] t^3`, used as an independent
    /// oracle for the doctored-series zero location.
    fn cubic_roots(c: [f64; 4]) -> Vec<Complex64> {
        let normalized: Vec<Complex64> = c
            .iter()
            .map(|&v| Complex64::new(v / c[3], 0.0))
            .collect();
        let eval = |t: Complex64| -> Complex64 {
            normalized[0] + normalized[1] * t + normalized[2] * t * t + t * t * t
        };
        let mut roots = vec![
            Complex64::new(0.4, 0.9),
            Complex64::new(0.4, 0.9).powu(2),
            Complex64::new(0.4, 0.9).powu(3),
        ];
        for _ in 0..200 {
            let snapshot = roots.clone();
            for i in 0..3 {
                let mut denom = Complex64::new(1.0, 0.0);
                for (k, r) in snapshot.iter().enumerate() {
                    if k != i {
                        denom *= snapshot[i] - r;
                    }
                }
                roots[i] = snapshot[i] - eval(snapshot[i]) / denom;
            }
        }
        roots
    }

    #[test]
    fn doctored_series_zero_found_at_oracle_root() {
        let series = SignedSeries::validation_series(60);
        let cfg = SearchConfig {
            cap: 60,
            starts: 16,
            seed: 3,
            margin: 0.05,
            x_tol: 1e-12,
            zero_threshold_rel: 1e-9,
            ..SearchConfig::default()
        };
        let report = zero_search_series(&series, &cfg).unwrap();
        assert_eq!(report.status, SearchStatus::ZeroFound);
        assert!(report.min_abs < 1e-10, "min_abs {}", report.min_abs);
        assert!(report.error_bound < report.zero_threshold);

        // Independent oracle: F(t) = (1/pi)((1 - t)^-2 - 4 t), whose zeros
        // solve 4 t^3 - 8 t^2 + 4 t - 1 = 0.
        let roots = cubic_roots([-1.0, 4.0, -8.0, 4.0]);
        let found = report.argmin_t[0];
        let distance = roots
            .iter()
            .map(|r| (found - r).norm())
            .fold(f64::INFINITY, f64::min)
            ;
        assert!(distance < 1e-8, "minimizer {found} misses the oracle roots");
        // Sanity on the oracle itself: the roots really kill the series.
        for root in roots {
            if root.norm() < 1.0 {
                let value = series.eval_t(&[root]).unwrap().value;
                assert!(value.norm() < 1e-12, "oracle root fails: {value}");
            }
        }
    }

    #[test]
    fn short_series_refuses_certification_near_the_rim() {
        // With cap 8 and margin 0.05 the layer sums still grow at the
        // truncation point, so the tail estimate must declare itself
        // unreliable and the margin must collapse to -inf.
        let cfg = SearchConfig {
            cap: 8,
            starts: 4,
            seed: 1,
            margin: 0.05,
            ..SearchConfig::default()
        };
        let report = zero_search(&EllipsoidSpec::unit_ball(2), &cfg).unwrap();
        assert_eq!(report.status, SearchStatus::PositiveOnSearch);
        assert!(report.error_bound.is_infinite());
        assert!(report.margin.is_infinite() && report.margin < 0.0);
    }

    #[test]
    fn grid_certificate_validates_disc_and_rejects_doctored_series() {
        let cfg = SearchConfig {
            cap: 40,
            margin: 0.5,
            ..SearchConfig::default()
        };
        let disc = KernelSeries::build(&EllipsoidSpec::disc(), 40).unwrap();
        let good = grid_certificate(&disc, &cfg, 300).unwrap();
        assert!(good.valid, "lower bound {}", good.lower_bound);
        // True minimum over |t| <= 1/2 is 1/pi (3/2)^-2 = 0.1415...
        assert!(good.lower_bound > 0.1, "lower bound {}", good.lower_bound);
        assert!(good.lower_bound < 0.15);

        let doctored = SignedSeries::validation_series(40);
        let bad = grid_certificate(&doctored, &cfg, 300).unwrap();
        assert!(!bad.valid);
        assert!(bad.lower_bound < 0.0);
    }

    #[test]
    fn certificate_rejects_excessive_grids() {
        let series = KernelSeries::build(&EllipsoidSpec::unit_ball(3), 8).unwrap();
        assert!(matches!(
            grid_certificate(&series, &SearchConfig::default(), 64),
            Err(Error::ResourceLimit { .. })
        ));
    }

    #[test]
    fn transfer_experiment_consistent_for_square_cover() {
        // Margin 0.5 keeps the minimizer's moduli at sum 1/2, where the
        // cap-80 source series is accurate to ~1e-13 for any split of the
        // (degenerate) minimizing shell.
        let cfg = SearchConfig {
            cap: 80,
            starts: 4,
            seed: 11,
            margin: 0.5,
            ..SearchConfig::default()
        };
        let report = zero_transfer_experiment(&EllipsoidSpec::unit_ball(2), 2, &cfg).unwrap();
        assert_eq!(report.upstairs.status, SearchStatus::PositiveOnSearch);
        assert_eq!(
            report.downstairs.as_ref().unwrap().status,
            SearchStatus::PositiveOnSearch
        );
        assert_eq!(report.covering_residuals.len(), 4);
        let residual = report.max_covering_residual.unwrap();
        assert!(residual < 1e-6, "covering residual {residual}");
        assert!(report.consistent);
    }

    #[test]
    fn transfer_degenerates_at_j_equal_one() {
        let cfg = SearchConfig {
            cap: 24,
            starts: 3,
            seed: 5,
            margin: 0.3,
            ..SearchConfig::default()
        };
        let report = zero_transfer_experiment(&EllipsoidSpec::unit_ball(2), 1, &cfg).unwrap();
        assert!(report.downstairs.is_none());
        assert!(report.covering_residuals.is_empty());
        assert!(report.max_covering_residual.is_none());
        assert!(report.consistent);
    }

    #[test]
    fn ramadanov_rows_match_closed_forms() {
        let base = EllipsoidSpec::unit_ball(2);
        let p = ComplexPoint::new(vec![Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0)]);
        let report = ramadanov_experiment(&base, &[1, 2, 4], &[p], 40).unwrap();
        assert_eq!(report.rows.len(), 3);

        // j = 1 is the unit ball: K(p, p) = 2/pi^2 (1 - 1/2)^-3.
        let ball_value = 16.0 / (PI * PI);
        assert!((report.rows[0].value - ball_value).abs() < 1e-8);

        // Limit: bidisc closed form (1/pi^2)(1 - 1/4)^-4.
        let limit = (0.75f64).powi(-4) / (PI * PI);
        assert!((report.limits[0] - limit).abs() < 1e-12);

        assert!(report.eventually_decreasing);
        let diffs: Vec<f64> = report.rows.iter().map(|r| r.difference).collect();
        assert!(diffs[1] > diffs[2], "differences not shrinking: {diffs:?}");
    }

    #[test]
    fn ramadanov_rejects_escaping_points() {
        let base = EllipsoidSpec::unit_ball(2);
        let p = ComplexPoint::new(vec![Complex64::new(0.9, 0.0), Complex64::new(0.9, 0.0)]);
        let err = ramadanov_experiment(&base, &[1, 2], &[p], 20).unwrap_err();
        match err {
            Error::InvalidInput(message) => assert!(message.contains("j = 1"), "{message}"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn ramadanov_validates_levels() {
        let base = EllipsoidSpec::unit_ball(2);
        let points = [ComplexPoint::new(vec![
            Complex64::new(0.1, 0.0),
            Complex64::new(0.1, 0.0),
        ])];
        assert!(ramadanov_experiment(&base, &[2, 2], &points, 10).is_err());
        assert!(ramadanov_experiment(&base, &[], &points, 10).is_err());
        assert!(ramadanov_experiment(&EllipsoidSpec::disc(), &[1], &points, 10).is_err());
    }
}
