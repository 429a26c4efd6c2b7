//! Holomorphic maps between ellipsoid domains and the kernel identities
//! they satisfy.
//!
//! Two identities are checkable here.  For a biholomorphism `F` between
//! domains with kernels `K_s`, `K_t`:
//!
//! ```text
//! K_s(z, w) = det JF(z) * K_t(F z, F w) * conj(det JF(w)),
//! ```
//!
//! and for the proper covering map `Phi(z) = (z_k^j) : E(j m) -> E(m)`,
//! summing over the local inverse branches `v_b` of `Phi` at `W`:
//!
//! ```text
//! K_t(Phi z, W) * det JPhi(z) = sum_b K_s(z, v_b) * conj(det J v_b(W)).
//! ```
//!
//! Both are checked with truncated series (or closed forms where known) and
//! reported as residuals normalized by the kernel size plus tail bounds.

use alloc::boxed::Box;
use alloc::format;
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

use crate::ellipsoid::{ComplexPoint, EllipsoidSpec};
use crate::error::{Error, Result};
use crate::kahan::{CompensatedSum, ComplexSum};
use crate::kernel::{closed_form_kernel, BallKernel, KernelEvaluator, KernelSeries};

/// Maximum number of covering branches `j^n` that `local_inverses` will
/// enumerate.
const MAX_BRANCHES: usize = 4096;

/// The concrete shape of a holomorphic map.
#[derive(Clone, Debug, PartialEq)]
pub enum MapKind {
    /// `z_k -> exp(i theta_k) z_k`.
    Rotation(Vec<f64>),
    /// `w_k = z_{perm[k]}`.
    Permutation(Vec<usize>),
    /// Ball automorphism exchanging the origin with the stored center.
    BallAutomorphism(ComplexPoint),
    /// `z_k -> z_k^j`; a proper `j^n`-sheeted covering for `j >= 2`.
    PowerMap(u32),
    /// Composition, applied left to right.
    Composition(Vec<HoloMap>),
}

/// A holomorphic map with validated source and target domains.
#[derive(Clone, Debug, PartialEq)]
pub struct HoloMap {
    kind: MapKind,
    source: EllipsoidSpec,
    target: EllipsoidSpec,
}

/// One branch of a local inverse: the preimage point and the complex
/// Jacobian determinant of the branch at the evaluation point.
#[derive(Clone, Debug)]
pub struct LocalInverse {
    pub point: ComplexPoint,
    pub jacobian_det: Complex64,
}

impl HoloMap {
    /// Identity on `spec`.
    pub fn identity(spec: EllipsoidSpec) -> Self {
        let dim = spec.dim();
        Self {
            kind: MapKind::Rotation(vec![0.0; dim]),
            source: spec.clone(),
            target: spec,
        }
    }

    /// Coordinate rotation by the given angles (radians).
    pub fn rotation(spec: EllipsoidSpec, angles: Vec<f64>) -> Result<Self> {
        if angles.len() != spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.dim(),
                got: angles.len(),
            });
        }
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidInput(String::from("angles must be finite")));
        }
        Ok(Self {
            kind: MapKind::Rotation(angles),
            source: spec.clone(),
            target: spec,
        })
    }

    /// Coordinate permutation `w_k = z_{perm[k]}`; the target exponents are
    /// permuted accordingly.
    pub fn permutation(spec: EllipsoidSpec, perm: Vec<usize>) -> Result<Self> {
        let target = spec.permuted(&perm)?;
        Ok(Self {
            kind: MapKind::Permutation(perm),
            source: spec,
            target,
        })
    }

    /// Automorphism of the unit ball carrying the origin to `center` (and
    /// `-center` to the origin).  A zero center gives the identity, and the
    /// inverse is the same construction with `-center`.
    pub fn ball_automorphism(spec: EllipsoidSpec, center: ComplexPoint) -> Result<Self> {
        if !spec.is_ball() {
            return Err(Error::Incompatible(String::from(
                "ball automorphisms require the unit ball",
            )));
        }
        let defect = spec.defect(&center)?;
        if !(defect < 1.0) {
            return Err(Error::OutsideDomain { defect });
        }
        Ok(Self {
            kind: MapKind::BallAutomorphism(center),
            source: spec.clone(),
            target: spec,
        })
    }

    /// Power map `z_k -> z_k^j` onto `target`; its source is `E(j m)`.
    pub fn power_map(target: EllipsoidSpec, j: u32) -> Result<Self> {
        let source = target.power_cover_source(j)?;
        Ok(Self {
            kind: MapKind::PowerMap(j),
            source,
            target,
        })
    }

    /// Composition applied left to right; adjacent domains must match
    /// exactly.
    pub fn compose(maps: Vec<HoloMap>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::InvalidInput(String::from(
                "composition of zero maps",
            )));
        }
        for pair in maps.windows(2) {
            if pair[0].target != pair[1].source {
                return Err(Error::Incompatible(format!(
                    "target {:?} does not match next source {:?}",
                    pair[0].target.exponents(),
                    pair[1].source.exponents()
                )));
            }
        }
        let source = maps[0].source.clone();
        let target = maps[maps.len() - 1].target.clone();
        Ok(Self {
            kind: MapKind::Composition(maps),
            source,
            target,
        })
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn source(&self) -> &EllipsoidSpec {
        &self.source
    }

    pub fn target(&self) -> &EllipsoidSpec {
        &self.target
    }

    /// True when the map is invertible with holomorphic inverse.
    pub fn is_biholomorphic(&self) -> bool {
        match &self.kind {
            MapKind::Rotation(_) | MapKind::Permutation(_) | MapKind::BallAutomorphism(_) => true,
            MapKind::PowerMap(j) => *j == 1,
            MapKind::Composition(maps) => maps.iter().all(HoloMap::is_biholomorphic),
        }
    }

    /// Applies the map to an interior point of the source domain.
    pub fn apply(&self, z: &[Complex64]) -> Result<ComplexPoint> {
        let defect = self.source.defect(z)?;
        if !(defect < 1.0) {
            return Err(Error::OutsideDomain { defect });
        }
        Ok(match &self.kind {
            MapKind::Rotation(angles) => ComplexPoint::new(
                z.iter()
                    .zip(angles)
                    .map(|(zk, &a)| zk * Complex64::from_polar(1.0, a))
                    .collect(),
            ),
            MapKind::Permutation(perm) => {
                ComplexPoint::new(perm.iter().map(|&p| z[p]).collect())
            }
            MapKind::BallAutomorphism(center) => apply_ball_automorphism(center, z),
            MapKind::PowerMap(j) => {
                ComplexPoint::new(z.iter().map(|zk| zk.powu(*j)).collect())
            }
            MapKind::Composition(maps) => {
                let mut current = ComplexPoint::new(z.to_vec());
                for map in maps {
                    current = map.apply(&current)?;
                }
                current
            }
        })
    }

    /// Complex Jacobian determinant at an interior point of the source.
    pub fn jacobian_det(&self, z: &[Complex64]) -> Result<Complex64> {
        let defect = self.source.defect(z)?;
        if !(defect < 1.0) {
            return Err(Error::OutsideDomain { defect });
        }
        Ok(match &self.kind {
            MapKind::Rotation(angles) => {
                let total: f64 = angles.iter().sum();
                Complex64::from_polar(1.0, total)
            }
            MapKind::Permutation(perm) => Complex64::new(permutation_sign(perm), 0.0),
            MapKind::BallAutomorphism(center) => ball_automorphism_det(center, z),
            MapKind::PowerMap(j) => {
                let j = *j;
                let mut det = Complex64::new(1.0, 0.0);
                for zk in z {
                    det *= j as f64 * zk.powu(j - 1);
                }
                det
            }
            MapKind::Composition(maps) => {
                let mut det = Complex64::new(1.0, 0.0);
                let mut current = ComplexPoint::new(z.to_vec());
                for map in maps {
                    det *= map.jacobian_det(&current)?;
                    current = map.apply(&current)?;
                }
                det
            }
        })
    }

    /// Inverse map; fails for proper coverings (`j >= 2`).
    pub fn inverse(&self) -> Result<HoloMap> {
        match &self.kind {
            MapKind::Rotation(angles) => HoloMap::rotation(
                self.source.clone(),
                angles.iter().map(|a| -a).collect(),
            ),
            MapKind::Permutation(perm) => {
                let mut inverse_perm = vec![0usize; perm.len()];
                for (j, &p) in perm.iter().enumerate() {
                    inverse_perm[p] = j;
                }
                HoloMap::permutation(self.target.clone(), inverse_perm)
            }
            MapKind::BallAutomorphism(center) => {
                let negated =
                    ComplexPoint::new(center.coords().iter().map(|c| -c).collect());
                HoloMap::ball_automorphism(self.source.clone(), negated)
            }
            MapKind::PowerMap(1) => Ok(self.clone()),
            MapKind::PowerMap(_) => Err(Error::NotInvertible),
            MapKind::Composition(maps) => {
                let mut inverted = Vec::with_capacity(maps.len());
                for map in maps.iter().rev() {
                    inverted.push(map.inverse()?);
                }
                HoloMap::compose(inverted)
            }
        }
    }

    /// All local inverse branches at an interior point `w` of the target,
    /// with the Jacobian determinant of each branch at `w`.
    ///
    /// For biholomorphic maps this is the single global inverse.  For the
    /// power map it enumerates all `j^n` root choices and fails with
    /// [`Error::BranchPoint`] when some `w_k = 0`.
    pub fn local_inverses(&self, w: &[Complex64]) -> Result<Vec<LocalInverse>> {
        let defect = self.target.defect(w)?;
        if !(defect < 1.0) {
            return Err(Error::OutsideDomain { defect });
        }
        if let MapKind::PowerMap(j) = self.kind {
            if j >= 2 {
                return power_map_branches(j, w);
            }
        }
        let inverse = self.inverse()?;
        let point = inverse.apply(w)?;
        let jacobian_det = inverse.jacobian_det(w)?;
        Ok(vec![LocalInverse {
            point,
            jacobian_det,
        }])
    }
}

/// Sign of a permutation given in one-line notation.
fn permutation_sign(perm: &[usize]) -> f64 {
    let mut seen = vec![false; perm.len()];
    let mut sign = 1.0;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut length = 0usize;
        let mut k = start;
        while !seen[k] {
            seen[k] = true;
            k = perm[k];
            length += 1;
        }
        if length % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

/// `psi_a(z) = (a + P_a z + s Q_a z) / (1 + <z, a>)` where `P_a` projects
/// onto the line through `a`, `Q_a = I - P_a`, and `s = sqrt(1 - |a|^2)`.
/// Carries `0` to `a` and `-a` to `0`; reduces to the identity for `a = 0`.
fn apply_ball_automorphism(center: &ComplexPoint, z: &[Complex64]) -> ComplexPoint {
    let mut norm_acc = CompensatedSum::new();
    for c in center.coords() {
        norm_acc.add(c.norm_sqr());
    }
    let aa = norm_acc.value();
    if aa == 0.0 {
        return ComplexPoint::new(z.to_vec());
    }
    let s = (1.0 - aa).sqrt();
    let mut inner = ComplexSum::new();
    for (zk, ak) in z.iter().zip(center.coords()) {
        inner.add(zk * ak.conj());
    }
    let d = inner.value();
    let denom = Complex64::new(1.0, 0.0) + d;
    let coef = d / aa;
    let coords = z
        .iter()
        .zip(center.coords())
        .map(|(zk, ak)| {
            let parallel = coef * ak;
            let orthogonal = zk - parallel;
            (ak + parallel + s * orthogonal) / denom
        })
        .collect();
    ComplexPoint::new(coords)
}

/// `det J psi_a(z) = (1 - |a|^2)^((n + 1) / 2) / (1 + <z, a>)^(n + 1)`.
fn ball_automorphism_det(center: &ComplexPoint, z: &[Complex64]) -> Complex64 {
    let n = center.dim();
    let mut norm_acc = CompensatedSum::new();
    for c in center.coords() {
        norm_acc.add(c.norm_sqr());
    }
    let aa = norm_acc.value();
    let mut inner = ComplexSum::new();
    for (zk, ak) in z.iter().zip(center.coords()) {
        inner.add(zk * ak.conj());
    }
    let numerator = (1.0 - aa).powf((n as f64 + 1.0) / 2.0);
    let denom = (Complex64::new(1.0, 0.0) + inner.value()).powu(n as u32 + 1);
    numerator / denom
}

/// All `j^n` branches of the inverse of `z -> z^j` at `w` (no zero
/// coordinates), each with its Jacobian determinant
/// `1 / (j^n prod_k v_k^(j - 1))`.
fn power_map_branches(j: u32, w: &[Complex64]) -> Result<Vec<LocalInverse>> {
    let n = w.len();
    for (k, wk) in w.iter().enumerate() {
        if wk.norm() == 0.0 {
            return Err(Error::BranchPoint { coordinate: k });
        }
    }
    let mut count: usize = 1;
    for _ in 0..n {
        count = count.saturating_mul(j as usize);
        if count > MAX_BRANCHES {
            return Err(Error::ResourceLimit {
                required: count,
                budget: MAX_BRANCHES,
            });
        }
    }
    let principal: Vec<Complex64> = w.iter().map(|wk| wk.powf(1.0 / j as f64)).collect();
    let mut branches = Vec::with_capacity(count);
    let mut choice = vec![0u32; n];
    loop {
        let mut point = Vec::with_capacity(n);
        let mut derivative_product = Complex64::new(1.0, 0.0);
        for (k, root) in principal.iter().enumerate() {
            let vk = root * Complex64::from_polar(1.0, 2.0 * PI * choice[k] as f64 / j as f64);
            derivative_product *= j as f64 * vk.powu(j - 1);
            point.push(vk);
        }
        branches.push(LocalInverse {
            point: ComplexPoint::new(point),
            jacobian_det: derivative_product.finv(),
        });
        // Odometer over branch choices, last coordinate fastest.
        let mut digit = n;
        loop {
            if digit == 0 {
                return Ok(branches);
            }
            digit -= 1;
            choice[digit] += 1;
            if choice[digit] < j {
                break;
            }
            choice[digit] = 0;
        }
    }
}

/// Per-pair residuals of the biholomorphic transformation law.
#[derive(Clone, Debug)]
pub struct LawCheck {
    /// Relative residual for each pair, normalized by `|K_s| + tail bounds`.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

/// Checks `K_s(z, w) = det JF(z) K_t(Fz, Fw) conj(det JF(w))` over the
/// given pairs of interior source points.
pub fn check_biholomorphic_law<Ks, Kt>(
    map: &HoloMap,
    source_kernel: &Ks,
    target_kernel: &Kt,
    pairs: &[(ComplexPoint, ComplexPoint)],
) -> Result<LawCheck>
where
    Ks: KernelEvaluator + ?Sized,
    Kt: KernelEvaluator + ?Sized,
{
    if !map.is_biholomorphic() {
        return Err(Error::NotInvertible);
    }
    if source_kernel.dim() != map.source().dim() || target_kernel.dim() != map.target().dim() {
        return Err(Error::DimensionMismatch {
            expected: map.source().dim(),
            got: source_kernel.dim(),
        });
    }
    let mut residuals = Vec::with_capacity(pairs.len());
    let mut max_residual = 0.0f64;
    for (z, w) in pairs {
        let lhs = source_kernel.eval_pair(z, w)?;
        let det_z = map.jacobian_det(z)?;
        let det_w = map.jacobian_det(w)?;
        let fz = map.apply(z)?;
        let fw = map.apply(w)?;
        let target_value = target_kernel.eval_pair(&fz, &fw)?;
        let rhs = det_z * target_value.value * det_w.conj();
        let scale = det_z.norm() * det_w.norm();
        let normalizer =
            lhs.value.norm() + lhs.tail_bound + scale * target_value.tail_bound + f64::MIN_POSITIVE;
        let residual = (lhs.value - rhs).norm() / normalizer;
        max_residual = max_residual.max(residual);
        residuals.push(residual);
    }
    Ok(LawCheck {
        residuals,
        max_residual,
    })
}

/// Outcome of checking the covering identity at one pair of points.
#[derive(Clone, Debug)]
pub struct CoveringCheck {
    /// `K_t(Phi z, W) * det JPhi(z)`.
    pub lhs: Complex64,
    /// `sum_b K_s(z, v_b(W)) * conj(det J v_b(W))`.
    pub rhs: Complex64,
    /// `|lhs - rhs|` normalized by `|lhs|` plus all tail bounds.
    pub residual: f64,
    /// Combined tail bound entering the normalizer.
    pub tail_bound: f64,
    pub branches: usize,
}

enum EitherKernel {
    Series(Box<KernelSeries>),
    Ball(BallKernel),
}

impl KernelEvaluator for EitherKernel {
    fn dim(&self) -> usize {
        match self {
            EitherKernel::Series(s) => s.dim(),
            EitherKernel::Ball(b) => b.dim,
        }
    }

    fn eval_pair(&self, z: &[Complex64], w: &[Complex64]) -> Result<crate::kernel::EvalResult> {
        match self {
            EitherKernel::Series(s) => s.eval_pair(z, w),
            EitherKernel::Ball(b) => b.eval_pair(z, w),
        }
    }
}

fn kernel_for(spec: &EllipsoidSpec, cap: u32, use_closed_forms: bool) -> Result<EitherKernel> {
    if use_closed_forms {
        if let Some(ball) = closed_form_kernel(spec) {
            return Ok(EitherKernel::Ball(ball));
        }
    }
    Ok(EitherKernel::Series(Box::new(KernelSeries::build(
        spec, cap,
    )?)))
}

/// Checks the covering identity for `Phi(z) = (z_k^j) : E(j m) -> E(m)` at
/// a source point `z` and a target point `w` (no zero coordinates).
///
/// `caps = (source cap, target cap)` controls the series truncations; with
/// `use_closed_forms` set, exact kernels replace series where available
/// (dimension one, unit ball).
pub fn check_bell_covering_law(
    target: &EllipsoidSpec,
    j: u32,
    z: &ComplexPoint,
    w: &ComplexPoint,
    caps: (u32, u32),
    use_closed_forms: bool,
) -> Result<CoveringCheck> {
    let map = HoloMap::power_map(target.clone(), j)?;
    let source_kernel = kernel_for(map.source(), caps.0, use_closed_forms)?;
    let target_kernel = kernel_for(target, caps.1, use_closed_forms)?;

    let branches = map.local_inverses(w)?;
    let phi_z = map.apply(z)?;
    let det_z = map.jacobian_det(z)?;
    let target_value = target_kernel.eval_pair(&phi_z, w)?;
    let lhs = target_value.value * det_z;

    let mut rhs_acc = ComplexSum::new();
    let mut tail_acc = CompensatedSum::new();
    for branch in &branches {
        let source_value = source_kernel.eval_pair(z, &branch.point)?;
        rhs_acc.add(source_value.value * branch.jacobian_det.conj());
        tail_acc.add(source_value.tail_bound * branch.jacobian_det.norm());
    }
    let rhs = rhs_acc.value();
    let tail_bound = tail_acc.value() + det_z.norm() * target_value.tail_bound;
    let residual = (lhs - rhs).norm() / (lhs.norm() + tail_bound + f64::MIN_POSITIVE);
    Ok(CoveringCheck {
        lhs,
        rhs,
        residual,
        tail_bound,
        branches: branches.len(),
    })
}
