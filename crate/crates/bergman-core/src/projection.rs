//! Bergman projection by quadrature.
//!
//! The projection of `g` onto the Bergman space is the series
//! `P g = sum_alpha <g, z^alpha> / I(alpha) * z^alpha`, so everything
//! reduces to the inner products `<g, z^alpha>` over the domain.  These are
//! computed on a tensor grid: equispaced angles in every coordinate (so the
//! angular part of all inner products is one separable discrete Fourier
//! transform per radial node) times a radial grid adapted to the region
//! `sum_k r_k^(2 m_k) < 1`.
//!
//! The radial grid is built recursively over coordinates.  Fixing the value
//! `y` of the outermost radius leaves the same region in the remaining
//! coordinates shrunk by `c = 1 - y^(2 m)`, so inner nodes are reused after
//! scaling.  Each level is integrated in two panels: Gauss--Legendre in `y`
//! while `c >= 1/2`, and Gauss--Legendre in `w` with `c = w^(2 M)` while
//! `c <= 1/2`, where `M` is the least common multiple of the inner integer
//! exponents.  With integer exponents this makes every scaling factor a
//! polynomial in the quadrature variable, so monomial moments are exact and
//! smooth integrands converge spectrally; fractional exponents fall back to
//! algebraic convergence.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
// Float supplies the f64 math methods in pure no_std builds; builds whose
// dependency graph links std resolve them inherently and see this import
// as unused.
#[allow(unused_imports)]
use num_traits::Float;

use crate::ellipsoid::{multi_indices, pow_positive, ComplexPoint, EllipsoidSpec, MultiIndex};
use crate::error::{Error, Result};
use crate::gauss::gauss_legendre_on;
use crate::kahan::{CompensatedSum, ComplexSum};
use crate::transforms::HoloMap;

/// Default number of radial nodes per panel and level.
pub const DEFAULT_RADIAL_NODES: usize = 48;
/// Default number of equispaced angles per coordinate.
pub const DEFAULT_ANGULAR_NODES: usize = 64;

/// Largest number of angular samples (`angular^dim`) per radial node.
const MAX_ANGULAR_SAMPLES: usize = 1 << 20;
/// Largest number of radial nodes.
const MAX_RADIAL_NODES: usize = 1 << 20;

/// Anything that can be sampled pointwise on the domain.
pub trait Evaluable {
    fn eval_at(&self, z: &[Complex64]) -> Complex64;
}

/// Adapter turning a closure into an [`Evaluable`].
pub struct FnEval<F>(pub F);

impl<F> Evaluable for FnEval<F>
where
    F: Fn(&[Complex64]) -> Complex64,
{
    fn eval_at(&self, z: &[Complex64]) -> Complex64 {
        (self.0)(z)
    }
}

/// Ready-made integrands for exercising the projection.
#[derive(Clone, Debug)]
pub enum TestFunction {
    Constant(f64),
    /// `z^alpha` (holomorphic; the projection reproduces it).
    Monomial(MultiIndex),
    /// `conj(z^alpha)`; for `alpha != 0` the projection annihilates it.
    ConjugateMonomial(MultiIndex),
    /// Smooth compactly supported mollifier of the boundary defect
    /// `s = sum_k |z_k|^(2 m_k)`: equals `exp(-1 / (1 - (s / support)^2))`
    /// for `s < support` and vanishes identically beyond.
    RadialBump { exponents: Vec<f64>, support: f64 },
    /// Pointwise product of factors.
    Product(Vec<TestFunction>),
}

impl TestFunction {
    /// Bump supported strictly inside the domain of `spec`
    /// (`0 < support < 1`).
    pub fn radial_bump(spec: &EllipsoidSpec, support: f64) -> Result<Self> {
        if !(support > 0.0 && support < 1.0) {
            return Err(Error::InvalidInput(String::from(
                "bump support must lie in (0, 1)",
            )));
        }
        Ok(TestFunction::RadialBump {
            exponents: spec.exponents().to_vec(),
            support,
        })
    }
}

impl Evaluable for TestFunction {
    fn eval_at(&self, z: &[Complex64]) -> Complex64 {
        match self {
            TestFunction::Constant(c) => Complex64::new(*c, 0.0),
            TestFunction::Monomial(alpha) => {
                debug_assert_eq!(alpha.dim(), z.len());
                let mut product = Complex64::new(1.0, 0.0);
                for (zk, &a) in z.iter().zip(alpha.entries()) {
                    product *= zk.powu(a);
                }
                product
            }
            TestFunction::ConjugateMonomial(alpha) => {
                debug_assert_eq!(alpha.dim(), z.len());
                let mut product = Complex64::new(1.0, 0.0);
                for (zk, &a) in z.iter().zip(alpha.entries()) {
                    product *= zk.powu(a);
                }
                product.conj()
            }
            TestFunction::RadialBump { exponents, support } => {
                debug_assert_eq!(exponents.len(), z.len());
                let mut acc = CompensatedSum::new();
                for (zk, &m) in z.iter().zip(exponents) {
                    acc.add(pow_positive(zk.norm_sqr(), m));
                }
                let u = acc.value() / support;
                if u >= 1.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new((-1.0 / (1.0 - u * u)).exp(), 0.0)
                }
            }
            TestFunction::Product(factors) => {
                let mut product = Complex64::new(1.0, 0.0);
                for f in factors {
                    product *= f.eval_at(z);
                }
                product
            }
        }
    }
}

/// One radial node: a vector of coordinate radii and the weight of the
/// radial measure `prod_k r_k dr_k` (angular factors excluded).
#[derive(Clone, Debug)]
pub struct RadialNode {
    pub radii: Vec<f64>,
    pub weight: f64,
}

/// Tensor quadrature grid over a domain `E(m)`.
#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    spec: EllipsoidSpec,
    radial_nodes: Vec<RadialNode>,
    angular: usize,
}

impl QuadratureGrid {
    /// Builds the grid with `radial` Gauss--Legendre nodes per panel and
    /// level and `angular` equispaced angles per coordinate.
    pub fn build(spec: &EllipsoidSpec, radial: usize, angular: usize) -> Result<Self> {
        if radial < 2 {
            return Err(Error::InvalidInput(String::from(
                "need at least 2 radial nodes per level",
            )));
        }
        if angular < 4 {
            return Err(Error::InvalidInput(String::from(
                "need at least 4 angular nodes per coordinate",
            )));
        }
        let dim = spec.dim();
        let samples = angular.checked_pow(dim as u32).unwrap_or(usize::MAX);
        if samples > MAX_ANGULAR_SAMPLES {
            return Err(Error::ResourceLimit {
                required: samples,
                budget: MAX_ANGULAR_SAMPLES,
            });
        }
        let node_estimate = radial
            .checked_mul((2 * radial).pow(dim.saturating_sub(1) as u32))
            .unwrap_or(usize::MAX);
        if node_estimate > MAX_RADIAL_NODES {
            return Err(Error::ResourceLimit {
                required: node_estimate,
                budget: MAX_RADIAL_NODES,
            });
        }
        let radial_nodes = build_radial(spec.exponents(), radial);
        Ok(Self {
            spec: spec.clone(),
            radial_nodes,
            angular,
        })
    }

    /// Grid at the default resolution.
    pub fn default_for(spec: &EllipsoidSpec) -> Result<Self> {
        Self::build(spec, DEFAULT_RADIAL_NODES, DEFAULT_ANGULAR_NODES)
    }

    pub fn spec(&self) -> &EllipsoidSpec {
        &self.spec
    }

    pub fn radial_nodes(&self) -> &[RadialNode] {
        &self.radial_nodes
    }

    pub fn angular(&self) -> usize {
        self.angular
    }

    /// Total quadrature weight including angular factors; approximates the
    /// domain volume (exactly, for integer exponents).
    pub fn total_weight(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        for node in &self.radial_nodes {
            acc.add(node.weight);
        }
        let two_pi_n = (2.0 * PI).powi(self.spec.dim() as i32);
        acc.value() * two_pi_n
    }
}

/// Recursive radial grid over the region `sum_k r_k^(2 m_k) < 1`,
/// including the measure `prod r_k dr_k` in the weights.
fn build_radial(m: &[f64], per_level: usize) -> Vec<RadialNode> {
    if m.len() == 1 {
        // In one radial coordinate the region is just 0 <= r < 1.
        let (xs, ws) = gauss_legendre_on(per_level, 0.0, 1.0);
        return xs
            .iter()
            .zip(&ws)
            .map(|(&r, &w)| RadialNode {
                radii: vec![r],
                weight: w * r,
            })
            .collect();
    }
    let (inner_m, outer) = m.split_at(m.len() - 1);
    let m_out = outer[0];
    let inner = build_radial(inner_m, per_level);
    let sum_inv_inner: f64 = inner_m.iter().map(|mi| 1.0 / mi).sum();
    let mut nodes = Vec::new();

    // Panel with c = 1 - y^(2 m_out) in [1/2, 1].
    let y_split = 0.5f64.powf(1.0 / (2.0 * m_out));
    let (ys, wys) = gauss_legendre_on(per_level, 0.0, y_split);
    for (&y, &wy) in ys.iter().zip(&wys) {
        let c = 1.0 - pow_positive(y * y, m_out);
        push_scaled(&mut nodes, &inner, inner_m, c, wy * y, sum_inv_inner, y);
    }

    // Panel with c = w^(2 M) in (0, 1/2]; y dy transforms to
    // (M / m_out) w^(2M - 1) (1 - w^(2M))^(1 / m_out - 1) dw.
    let big_m = panel_exponent(inner_m);
    let w_split = 0.5f64.powf(1.0 / (2.0 * big_m));
    let (wxs, wws) = gauss_legendre_on(per_level, 0.0, w_split);
    for (&w, &ww) in wxs.iter().zip(&wws) {
        let c = pow_positive(w * w, big_m);
        let y = (1.0 - c).powf(1.0 / (2.0 * m_out));
        let outer_weight =
            ww * (big_m / m_out) * pow_positive(w, 2.0 * big_m - 1.0) * (1.0 - c).powf(1.0 / m_out - 1.0);
        push_scaled(&mut nodes, &inner, inner_m, c, outer_weight, sum_inv_inner, y);
    }
    nodes
}

/// Appends the inner unit-region nodes rescaled to the slice with radial
/// budget `c`, appending the outer radius `y`.
fn push_scaled(
    nodes: &mut Vec<RadialNode>,
    inner: &[RadialNode],
    inner_m: &[f64],
    c: f64,
    outer_weight: f64,
    sum_inv_inner: f64,
    y: f64,
) {
    let measure_scale = pow_positive(c, sum_inv_inner);
    for node in inner {
        let mut radii = Vec::with_capacity(node.radii.len() + 1);
        for (&r, &mi) in node.radii.iter().zip(inner_m) {
            radii.push(r * pow_positive(c, 1.0 / (2.0 * mi)));
        }
        radii.push(y);
        nodes.push(RadialNode {
            radii,
            weight: node.weight * measure_scale * outer_weight,
        });
    }
}

/// Substitution exponent for the outer panel: least common multiple of the
/// inner integer exponents (so all scalings become polynomial), or 1 when
/// any exponent is fractional or the lcm grows past 64.
fn panel_exponent(inner_m: &[f64]) -> f64 {
    let mut l: u64 = 1;
    for &mi in inner_m {
        if mi.fract() != 0.0 || mi > 32.0 {
            return 1.0;
        }
        let v = mi as u64;
        l = l / gcd(l, v) * v;
        if l > 64 {
            return 1.0;
        }
    }
    l as f64
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Integral of `f` over the domain of the grid.
pub fn integrate<E: Evaluable + ?Sized>(f: &E, grid: &QuadratureGrid) -> Complex64 {
    let mut acc = ComplexSum::new();
    for index in 0..grid.radial_nodes.len() {
        acc.add(integrate_node_contribution(f, grid, index));
    }
    acc.value()
}

/// Contribution of one radial node to the integral of `f`; summing these in
/// node order (as [`integrate`] does) is the deterministic reduction that
/// parallel drivers must reproduce.
pub fn integrate_node_contribution<E: Evaluable + ?Sized>(
    f: &E,
    grid: &QuadratureGrid,
    node_index: usize,
) -> Complex64 {
    let node = &grid.radial_nodes[node_index];
    let dim = grid.spec.dim();
    let q = grid.angular;
    let phases = unit_phases(q);
    let mut digits = vec![0usize; dim];
    let mut z = vec![Complex64::new(0.0, 0.0); dim];
    let mut acc = ComplexSum::new();
    loop {
        for k in 0..dim {
            z[k] = node.radii[k] * phases[digits[k]];
        }
        acc.add(f.eval_at(&z));
        if !advance(&mut digits, q) {
            break;
        }
    }
    let angular_weight = (2.0 * PI / q as f64).powi(dim as i32);
    acc.value() * node.weight * angular_weight
}

/// `exp(2 pi i q / n)` for `q = 0..n`.
fn unit_phases(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|q| Complex64::from_polar(1.0, 2.0 * PI * q as f64 / n as f64))
        .collect()
}

/// Odometer increment, last digit fastest; false when it wraps around.
fn advance(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

/// Truncated monomial expansion produced by [`project`].
#[derive(Clone, Debug)]
pub struct ProjectedFunction {
    spec: EllipsoidSpec,
    cap: u32,
    indices: Vec<MultiIndex>,
    coefficients: Vec<Complex64>,
}

impl ProjectedFunction {
    pub fn spec(&self) -> &EllipsoidSpec {
        &self.spec
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    /// Coefficients aligned with [`Self::indices`], graded lexicographic.
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> Option<Complex64> {
        self.indices
            .binary_search_by(|probe| probe.cmp(alpha))
            .ok()
            .map(|i| self.coefficients[i])
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.coefficients
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }
}

impl Evaluable for ProjectedFunction {
    fn eval_at(&self, z: &[Complex64]) -> Complex64 {
        let mut acc = ComplexSum::new();
        for (alpha, coeff) in self.indices.iter().zip(&self.coefficients) {
            let mut term = *coeff;
            for (zk, &a) in z.iter().zip(alpha.entries()) {
                term *= zk.powu(a);
            }
            acc.add(term);
        }
        acc.value()
    }
}

/// Bergman projection of `g`, truncated at total degree `cap`.
pub fn project<E: Evaluable + ?Sized>(
    g: &E,
    grid: &QuadratureGrid,
    cap: u32,
) -> Result<ProjectedFunction> {
    let contributions =
        (0..grid.radial_nodes.len()).map(|i| project_node_contribution(g, grid, i, cap));
    project_from_contributions(grid, cap, contributions)
}

/// Inner products `<g, z^alpha>` restricted to one radial node, for all
/// `|alpha| <= cap`, in graded lexicographic order.
///
/// The angular part is a separable discrete Fourier transform of the
/// samples of `g` on the angular torus of the node.  Public so external
/// drivers can compute node contributions in parallel and feed them back
/// through [`project_from_contributions`].
pub fn project_node_contribution<E: Evaluable + ?Sized>(
    g: &E,
    grid: &QuadratureGrid,
    node_index: usize,
    cap: u32,
) -> Vec<Complex64> {
    let node = &grid.radial_nodes[node_index];
    let dim = grid.spec.dim();
    let q = grid.angular;
    let freqs = cap as usize + 1;
    debug_assert!(freqs <= q);
    let phases = unit_phases(q);

    // Sample g over the angular torus, last coordinate fastest.
    let total = q.pow(dim as u32);
    let mut samples = Vec::with_capacity(total);
    let mut digits = vec![0usize; dim];
    let mut z = vec![Complex64::new(0.0, 0.0); dim];
    loop {
        for k in 0..dim {
            z[k] = node.radii[k] * phases[digits[k]];
        }
        samples.push(g.eval_at(&z));
        if !advance(&mut digits, q) {
            break;
        }
    }

    // Twiddle table: row a holds exp(-2 pi i a q / Q) for q = 0..Q.
    let mut twiddles = vec![vec![Complex64::new(1.0, 0.0); q]; freqs];
    for a in 1..freqs {
        for qi in 0..q {
            twiddles[a][qi] = twiddles[a - 1][qi] * phases[qi].conj();
        }
    }

    // Transform one axis at a time; shape starts as [q; dim] and each pass
    // replaces one extent q by freqs.
    let mut data = samples;
    let mut shape = vec![q; dim];
    for axis in 0..dim {
        let inner_stride: usize = shape[axis + 1..].iter().product();
        let outer_count: usize = shape[..axis].iter().product();
        let extent = shape[axis];
        let mut out = vec![Complex64::new(0.0, 0.0); outer_count * freqs * inner_stride];
        for outer in 0..outer_count {
            let in_base = outer * extent * inner_stride;
            let out_base = outer * freqs * inner_stride;
            for inner in 0..inner_stride {
                for (a, row) in twiddles.iter().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (qi, tw) in row.iter().enumerate() {
                        acc += data[in_base + qi * inner_stride + inner] * tw;
                    }
                    out[out_base + a * inner_stride + inner] = acc;
                }
            }
        }
        data = out;
        shape[axis] = freqs;
    }

    // Radius powers r_k^a for a <= cap.
    let mut powers = Vec::with_capacity(dim);
    for k in 0..dim {
        let mut row = Vec::with_capacity(freqs);
        let mut p = 1.0f64;
        for _ in 0..freqs {
            row.push(p);
            p *= node.radii[k];
        }
        powers.push(row);
    }

    let angular_weight = (2.0 * PI / q as f64).powi(dim as i32);
    let scale = node.weight * angular_weight;
    let indices = multi_indices(dim, cap);
    let mut contributions = Vec::with_capacity(indices.len());
    for alpha in &indices {
        let mut offset = 0usize;
        let mut radial = 1.0f64;
        for (k, &a) in alpha.entries().iter().enumerate() {
            offset = offset * freqs + a as usize;
            radial *= powers[k][a as usize];
        }
        contributions.push(data[offset] * radial * scale);
    }
    contributions
}

/// Combines per-node contributions (in node order) into the projection.
/// [`project`] is exactly this over a sequential iterator; a parallel
/// driver that collects the same vectors and feeds them here in node order
/// produces bit-identical results.
pub fn project_from_contributions<I>(
    grid: &QuadratureGrid,
    cap: u32,
    contributions: I,
) -> Result<ProjectedFunction>
where
    I: IntoIterator<Item = Vec<Complex64>>,
{
    let dim = grid.spec.dim();
    if cap as usize + 1 > grid.angular {
        return Err(Error::InvalidInput(String::from(
            "angular resolution must exceed the degree cap",
        )));
    }
    let indices = multi_indices(dim, cap);
    let mut accumulators = vec![ComplexSum::new(); indices.len()];
    let mut nodes_seen = 0usize;
    for contribution in contributions {
        if contribution.len() != indices.len() {
            return Err(Error::DimensionMismatch {
                expected: indices.len(),
                got: contribution.len(),
            });
        }
        for (acc, value) in accumulators.iter_mut().zip(&contribution) {
            acc.add(*value);
        }
        nodes_seen += 1;
    }
    if nodes_seen != grid.radial_nodes.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.radial_nodes.len(),
            got: nodes_seen,
        });
    }
    let mut coefficients = Vec::with_capacity(indices.len());
    for (alpha, acc) in indices.iter().zip(&accumulators) {
        let inv_moment = (-grid.spec.log_moment(alpha)?).exp();
        coefficients.push(acc.value() * inv_moment);
    }
    Ok(ProjectedFunction {
        spec: grid.spec.clone(),
        cap,
        indices,
        coefficients,
    })
}

/// Projections of `g` and of `P g`, with their largest pointwise gap over
/// the sample points.
#[derive(Clone, Debug)]
pub struct IdempotenceReport {
    pub first: ProjectedFunction,
    pub second: ProjectedFunction,
    pub max_deviation: f64,
}

/// Checks `P(P g) = P g` by re-projecting and comparing at sample points.
pub fn idempotence_check<E: Evaluable + ?Sized>(
    g: &E,
    grid: &QuadratureGrid,
    cap: u32,
    samples: &[ComplexPoint],
) -> Result<IdempotenceReport> {
    let first = project(g, grid, cap)?;
    let second = project(&first, grid, cap)?;
    let mut max_deviation = 0.0f64;
    for sample in samples {
        let gap = (first.eval_at(sample) - second.eval_at(sample)).norm();
        max_deviation = max_deviation.max(gap);
    }
    Ok(IdempotenceReport {
        first,
        second,
        max_deviation,
    })
}

/// Root-test estimate of where the projected series stops converging.
#[derive(Clone, Copy, Debug)]
pub struct ContinuationEstimate {
    /// Largest `max_layer |c|^(1/degree)` over the top degree layers; below
    /// 1 means the coefficients still decay geometrically at the cap.
    pub radius: f64,
    /// Highest degree layer with a coefficient above the noise floor.
    pub top_degree: u32,
    /// Number of layers that entered the estimate.
    pub layers_used: usize,
    /// Set when fewer than three layers carry signal, e.g. for radial or
    /// polynomial inputs whose expansion is trivially finite.
    pub low_confidence: bool,
}

/// Estimates the coefficient decay rate of a projection from the top
/// (up to five) degree layers that rise above the relative noise floor
/// `1e-13 * max |c|`.
pub fn continuation_radius_proxy(projection: &ProjectedFunction) -> ContinuationEstimate {
    let max_abs = projection.max_abs_coefficient();
    if max_abs == 0.0 {
        return ContinuationEstimate {
            radius: 0.0,
            top_degree: 0,
            layers_used: 0,
            low_confidence: true,
        };
    }
    let threshold = 1e-13 * max_abs;
    let mut layer_max = vec![0.0f64; projection.cap as usize + 1];
    for (alpha, coeff) in projection.indices.iter().zip(&projection.coefficients) {
        let d = alpha.degree() as usize;
        layer_max[d] = layer_max[d].max(coeff.norm());
    }
    let top = layer_max.iter().rposition(|&v| v > threshold).unwrap_or(0);
    if top == 0 {
        return ContinuationEstimate {
            radius: 0.0,
            top_degree: 0,
            layers_used: 0,
            low_confidence: true,
        };
    }
    let window_start = top.saturating_sub(4).max(1);
    let mut radius = 0.0f64;
    let mut layers_used = 0usize;
    for (d, &value) in layer_max
        .iter()
        .enumerate()
        .take(top + 1)
        .skip(window_start)
    {
        if value > threshold {
            radius = radius.max(value.powf(1.0 / d as f64));
            layers_used += 1;
        }
    }
    ContinuationEstimate {
        radius,
        top_degree: top as u32,
        layers_used,
        low_confidence: layers_used < 3,
    }
}

/// `g` pulled back through a biholomorphism and weighted by its Jacobian
/// determinant: `z -> det JF(z) * g(F z)`.
struct PulledBack<'a, E: Evaluable + ?Sized> {
    map: &'a HoloMap,
    g: &'a E,
}

impl<E: Evaluable + ?Sized> Evaluable for PulledBack<'_, E> {
    fn eval_at(&self, z: &[Complex64]) -> Complex64 {
        let det = self
            .map
            .jacobian_det(z)
            .expect("quadrature nodes lie inside the source domain");
        let image = self
            .map
            .apply(z)
            .expect("quadrature nodes lie inside the source domain");
        det * self.g.eval_at(&image)
    }
}

/// Checks the transformation law of the projection under a biholomorphism
/// `F`: `P_s(det JF * (g o F)) = det JF * (P_t g) o F`, comparing both
/// sides at the given interior points of the source domain.  Returns the
/// largest absolute deviation.
pub fn bell_projection_identity_check<E: Evaluable + ?Sized>(
    map: &HoloMap,
    g: &E,
    source_grid: &QuadratureGrid,
    target_grid: &QuadratureGrid,
    cap: u32,
    samples: &[ComplexPoint],
) -> Result<f64> {
    if !map.is_biholomorphic() {
        return Err(Error::NotInvertible);
    }
    if source_grid.spec() != map.source() || target_grid.spec() != map.target() {
        return Err(Error::Incompatible(String::from(
            "grids do not match the map's domains",
        )));
    }
    let pulled = PulledBack { map, g };
    let projected_pullback = project(&pulled, source_grid, cap)?;
    let projected = project(g, target_grid, cap)?;
    let mut max_deviation = 0.0f64;
    for sample in samples {
        let lhs = projected_pullback.eval_at(sample);
        let det = map.jacobian_det(sample)?;
        let image = map.apply(sample)?;
        let rhs = det * projected.eval_at(&image);
        max_deviation = max_deviation.max((lhs - rhs).norm());
    }
    Ok(max_deviation)
}

/// Largest coefficient change of `P g` when both grid resolutions double;
/// a direct a-posteriori error indicator for the quadrature.
pub fn grid_refinement_delta<E: Evaluable + ?Sized>(
    g: &E,
    spec: &EllipsoidSpec,
    radial: usize,
    angular: usize,
    cap: u32,
) -> Result<f64> {
    let coarse = project(g, &QuadratureGrid::build(spec, radial, angular)?, cap)?;
    let fine = project(g, &QuadratureGrid::build(spec, 2 * radial, 2 * angular)?, cap)?;
    let mut delta = 0.0f64;
    for (a, b) in coarse.coefficients.iter().zip(fine.coefficients.iter()) {
        delta = delta.max((a - b).norm());
    }
    Ok(delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelSeries;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn point(coords: &[(f64, f64)]) -> ComplexPoint {
        ComplexPoint::new(coords.iter().map(|&(re, im)| c(re, im)).collect())
    }

    #[test]
    fn total_weight_matches_volume_for_integer_exponents() {
        for exponents in [
            vec![1.0],
            vec![3.0],
            vec![1.0, 1.0],
            vec![1.0, 2.0],
            vec![2.0, 2.0],
            vec![1.0, 3.0],
            vec![2.0, 3.0],
        ] {
            let spec = EllipsoidSpec::new(exponents.clone()).unwrap();
            let grid = QuadratureGrid::build(&spec, 24, 8).unwrap();
            let relative = (grid.total_weight() - spec.volume()).abs() / spec.volume();
            assert!(
                relative < 1e-12,
                "m = {exponents:?}: relative volume error {relative}"
            );
        }
    }

    #[test]
    fn total_weight_converges_for_fractional_exponents() {
        let spec = EllipsoidSpec::new(vec![1.5, 0.75]).unwrap();
        let coarse = QuadratureGrid::build(&spec, 24, 8).unwrap();
        let fine = QuadratureGrid::build(&spec, 96, 8).unwrap();
        let volume = spec.volume();
        let coarse_err = (coarse.total_weight() - volume).abs() / volume;
        let fine_err = (fine.total_weight() - volume).abs() / volume;
        assert!(coarse_err < 1e-3, "coarse error {coarse_err}");
        assert!(fine_err < coarse_err / 4.0, "no convergence: {fine_err}");
    }

    #[test]
    fn integrates_moments_exactly() {
        // integral of |z^alpha|^2 must match the gamma-formula moments.
        let spec = EllipsoidSpec::new(vec![1.0, 2.0]).unwrap();
        let grid = QuadratureGrid::build(&spec, 24, 12).unwrap();
        for alpha in [vec![0u32, 0], vec![1, 0], vec![2, 3], vec![4, 1]] {
            let alpha = MultiIndex::new(alpha);
            let f = TestFunction::Product(vec![
                TestFunction::Monomial(alpha.clone()),
                TestFunction::ConjugateMonomial(alpha.clone()),
            ]);
            let got = integrate(&f, &grid);
            let want = spec.moment(&alpha).unwrap();
            assert!(
                (got.re - want).abs() < 1e-12 * want && got.im.abs() < 1e-13,
                "alpha {alpha:?}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn projects_constant_to_constant() {
        for exponents in [vec![1.0, 1.0], vec![1.0, 2.0]] {
            let spec = EllipsoidSpec::new(exponents).unwrap();
            let grid = QuadratureGrid::build(&spec, 20, 16).unwrap();
            let projection = project(&TestFunction::Constant(1.0), &grid, 6).unwrap();
            for (alpha, coeff) in projection.indices().iter().zip(projection.coefficients()) {
                if alpha.degree() == 0 {
                    assert!((coeff - c(1.0, 0.0)).norm() < 1e-12);
                } else {
                    assert!(coeff.norm() < 1e-12, "alpha {alpha:?}: {coeff}");
                }
            }
        }
    }

    #[test]
    fn reproduces_monomials() {
        let spec = EllipsoidSpec::new(vec![1.0, 2.0]).unwrap();
        let grid = QuadratureGrid::build(&spec, 20, 16).unwrap();
        for entries in [vec![1u32, 0], vec![0, 2], vec![2, 1], vec![3, 0]] {
            let alpha = MultiIndex::new(entries);
            let projection =
                project(&TestFunction::Monomial(alpha.clone()), &grid, 5).unwrap();
            for (beta, coeff) in projection.indices().iter().zip(projection.coefficients()) {
                let want = if *beta == alpha { 1.0 } else { 0.0 };
                assert!(
                    (coeff - c(want, 0.0)).norm() < 1e-11,
                    "alpha {alpha:?}, beta {beta:?}: {coeff}"
                );
            }
        }
    }

    #[test]
    fn annihilates_antiholomorphic_monomials() {
        let spec = EllipsoidSpec::unit_ball(2);
        let grid = QuadratureGrid::build(&spec, 20, 16).unwrap();
        let g = TestFunction::ConjugateMonomial(MultiIndex::new(vec![1, 2]));
        let projection = project(&g, &grid, 6).unwrap();
        assert!(projection.max_abs_coefficient() < 1e-12);
    }

    #[test]
    fn projection_is_idempotent() {
        let spec = EllipsoidSpec::new(vec![1.0, 2.0]).unwrap();
        let grid = QuadratureGrid::build(&spec, 20, 16).unwrap();
        let g = TestFunction::Product(vec![
            TestFunction::radial_bump(&spec, 0.55).unwrap(),
            TestFunction::Monomial(MultiIndex::new(vec![1, 1])),
        ]);
        let samples = [
            point(&[(0.2, 0.1), (0.3, -0.2)]),
            point(&[(0.0, 0.0), (0.0, 0.0)]),
            point(&[(-0.4, 0.2), (0.1, 0.3)]),
        ];
        let report = idempotence_check(&g, &grid, 6, &samples).unwrap();
        assert!(
            report.max_deviation < 1e-10,
            "deviation {}",
            report.max_deviation
        );
    }

    #[test]
    fn projection_is_self_adjoint() {
        // <P g, h> = <g, P h> for non-holomorphic g, h.
        let spec = EllipsoidSpec::unit_ball(2);
        let grid = QuadratureGrid::build(&spec, 20, 16).unwrap();
        let g = TestFunction::Product(vec![
            TestFunction::radial_bump(&spec, 0.6).unwrap(),
            TestFunction::Monomial(MultiIndex::new(vec![2, 0])),
        ]);
        let h = TestFunction::Product(vec![
            TestFunction::ConjugateMonomial(MultiIndex::new(vec![0, 1])),
            TestFunction::Monomial(MultiIndex::new(vec![1, 0])),
        ]);
        let pg = project(&g, &grid, 6).unwrap();
        let ph = project(&h, &grid, 6).unwrap();
        let lhs = integrate(
            &FnEval(|z: &[Complex64]| pg.eval_at(z) * h.eval_at(z).conj()),
            &grid,
        );
        let rhs = integrate(
            &FnEval(|z: &[Complex64]| g.eval_at(z) * ph.eval_at(z).conj()),
            &grid,
        );
        assert!(
            (lhs - rhs).norm() < 1e-10,
            "<Pg, h> = {lhs} vs <g, Ph> = {rhs}"
        );
    }

    #[test]
    fn projection_matches_kernel_integral() {
        // P g(z) can also be computed as integral of K(z, w) g(w) dV(w);
        // cross-check the coefficient route against the kernel route at a
        // few points.
        let spec = EllipsoidSpec::new(vec![1.0, 2.0]).unwrap();
        let grid = QuadratureGrid::build(&spec, 20, 16).unwrap();
        let g = TestFunction::radial_bump(&spec, 0.5).unwrap();
        let projection = project(&g, &grid, 10).unwrap();
        let series = KernelSeries::build(&spec, 10).unwrap();
        for z in [
            point(&[(0.2, 0.1), (0.25, -0.15)]),
            point(&[(0.5, 0.0), (0.1, 0.2)]),
        ] {
            let via_kernel = integrate(
                &FnEval(|w: &[Complex64]| {
                    series.eval_kernel(&z, w).unwrap().value * g.eval_at(w)
                }),
                &grid,
            );
            let via_coeffs = projection.eval_at(&z);
            assert!(
                (via_kernel - via_coeffs).norm() < 1e-10,
                "kernel route {via_kernel} vs coefficient route {via_coeffs}"
            );
        }
    }

    #[test]
    fn proxy_recovers_geometric_decay() {
        // g(z) = 1 / (1 - z_1 / 2) has Taylor coefficients 2^-d, so the
        // root-test proxy should sit at 0.5.
        let spec = EllipsoidSpec::unit_ball(2);
        let grid = QuadratureGrid::build(&spec, 20, 16).unwrap();
        let g = FnEval(|z: &[Complex64]| (c(1.0, 0.0) - 0.5 * z[0]).finv());
        let projection = project(&g, &grid, 10).unwrap();
        let estimate = continuation_radius_proxy(&projection);
        assert!(
            (estimate.radius - 0.5).abs() < 1e-6,
            "radius {}",
            estimate.radius
        );
        assert!(!estimate.low_confidence);
        assert_eq!(estimate.top_degree, 10);
    }

    #[test]
    fn proxy_flags_trivial_expansions() {
        let spec = EllipsoidSpec::new(vec![1.0, 2.0]).unwrap();
        let grid = QuadratureGrid::build(&spec, 20, 16).unwrap();

        // Radial input: only the constant coefficient survives.
        let bump = TestFunction::radial_bump(&spec, 0.5).unwrap();
        let bump_estimate = continuation_radius_proxy(&project(&bump, &grid, 8).unwrap());
        assert_eq!(bump_estimate.radius, 0.0);
        assert!(bump_estimate.low_confidence);

        // A single monomial: exactly one layer carries signal.
        let mono = TestFunction::Monomial(MultiIndex::new(vec![3, 0]));
        let mono_estimate = continuation_radius_proxy(&project(&mono, &grid, 8).unwrap());
        assert!((mono_estimate.radius - 1.0).abs() < 1e-9);
        assert_eq!(mono_estimate.top_degree, 3);
        assert!(mono_estimate.low_confidence);
    }

    #[test]
    fn rotation_projection_identity_holds() {
        let spec = EllipsoidSpec::new(vec![1.0, 2.0]).unwrap();
        let map = HoloMap::rotation(spec.clone(), vec![0.9, -0.4]).unwrap();
        let grid = QuadratureGrid::build(&spec, 20, 16).unwrap();
        let g = TestFunction::Product(vec![
            TestFunction::radial_bump(&spec, 0.6).unwrap(),
            TestFunction::Monomial(MultiIndex::new(vec![0, 1])),
        ]);
        let samples = [
            point(&[(0.25, 0.0), (0.2, 0.1)]),
            point(&[(-0.1, 0.3), (0.0, 0.25)]),
        ];
        let deviation =
            bell_projection_identity_check(&map, &g, &grid, &grid, 6, &samples).unwrap();
        assert!(deviation < 1e-10, "deviation {deviation}");
    }

    #[test]
    fn refinement_delta_separates_resolved_from_unresolved() {
        let spec = EllipsoidSpec::unit_ball(2);
        // Entire integrand: quadrature converges spectrally, so doubling
        // the grid changes nothing measurable.
        let analytic = FnEval(|z: &[Complex64]| (0.4 * z[0] + 0.2 * z[1]).exp());
        let small = grid_refinement_delta(&analytic, &spec, 16, 12, 4).unwrap();
        assert!(small < 1e-12, "delta {small}");
        // The compactly supported bump is smooth but not analytic; at this
        // resolution the indicator must report a visible error.
        let bump = TestFunction::radial_bump(&spec, 0.5).unwrap();
        let large = grid_refinement_delta(&bump, &spec, 16, 12, 4).unwrap();
        assert!(large > 1e-8, "delta {large}");
    }

    #[test]
    fn cap_must_stay_below_angular_resolution() {
        let spec = EllipsoidSpec::unit_ball(2);
        let grid = QuadratureGrid::build(&spec, 8, 8).unwrap();
        assert!(matches!(
            project(&TestFunction::Constant(1.0), &grid, 8),
            Err(Error::InvalidInput(_))
        ));
        assert!(project(&TestFunction::Constant(1.0), &grid, 7).is_ok());
    }

    #[test]
    fn resource_limits_are_enforced() {
        let spec = EllipsoidSpec::new(vec![1.0; 8]).unwrap();
        assert!(matches!(
            QuadratureGrid::build(&spec, 48, 64),
            Err(Error::ResourceLimit { .. })
        ));
    }
}
