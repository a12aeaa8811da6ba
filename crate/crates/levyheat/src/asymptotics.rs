//! Small-time limit constants of the heat content and convergence reports.
//!
//! Every theorem-level limit is evaluated by its own numerical route so that
//! the closed forms (where they exist) can be checked against independent
//! quadratures:
//!
//! * first-order (`t⁻¹`) limits integrate `r - r(0)` against the Lévy measure;
//! * regularly varying limits integrate `R_β(x/‖x‖) ‖x‖^β` against the limit
//!   density `p_Λ` or `p_η`, either on an inverted density grid or through a
//!   zonoid representation of `R_1` that reduces the integral to
//!   one-dimensional fractional moments.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use crate::density::{p_lambda, GridSpec};
use crate::error::{argument, hypothesis, unsupported, Error, Result};
use crate::geometry::{richardson, second_difference, RFunction, RKind, SetGeometry, SharedFn, StencilOptions};
use crate::heatcontent::{Scaling, SweepTable};
use crate::levy_models::{
    direction_grid, dyadic_radial_integral, least_squares_slope, EtaMeasure, LevyModel, LimitObject, PowerLaw,
    SphereFunction, Triplet,
};
use crate::quadrature::{sphere_area, sphere_integral, Adaptive};
use crate::special::{gamma, isotropic_levy_constant, sphere_abs_moment};

/// Relative accuracy requested from the limit quadratures.
pub const LIMIT_TOL: f64 = 1e-8;

/// Default PASS threshold of a convergence report at the smallest `t`.
pub const DEFAULT_PASS_TOL: f64 = 0.02;

/// The limit statements that can be checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Theorem {
    T1Case1,
    T1Case2i,
    T1Case2ii,
    T2,
    Corollary1,
    T3,
    Ex2Case1,
    Ex2Case2,
    Ex5Radial,
    Ex5Rectangle,
}

impl Theorem {
    pub const ALL: [Theorem; 10] = [
        Theorem::T1Case1,
        Theorem::T1Case2i,
        Theorem::T1Case2ii,
        Theorem::T2,
        Theorem::Corollary1,
        Theorem::T3,
        Theorem::Ex2Case1,
        Theorem::Ex2Case2,
        Theorem::Ex5Radial,
        Theorem::Ex5Rectangle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Theorem::T1Case1 => "T1_case1",
            Theorem::T1Case2i => "T1_case2i",
            Theorem::T1Case2ii => "T1_case2ii",
            Theorem::T2 => "T2",
            Theorem::Corollary1 => "Corollary1",
            Theorem::T3 => "T3",
            Theorem::Ex2Case1 => "Ex2_case1",
            Theorem::Ex2Case2 => "Ex2_case2",
            Theorem::Ex5Radial => "Ex5_radial",
            Theorem::Ex5Rectangle => "Ex5_rectangle",
        }
    }

    /// Whether the law uses the linear scale `t⁻¹`.
    pub fn is_first_order(self) -> bool {
        matches!(
            self,
            Theorem::T1Case1 | Theorem::T1Case2i | Theorem::T1Case2ii | Theorem::Ex2Case1 | Theorem::Ex2Case2
        )
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Theorem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Theorem::ALL
            .iter()
            .copied()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<&str> = Theorem::ALL.iter().map(|t| t.name()).collect();
                Error::Argument(format!("unknown theorem `{s}`; expected one of {}", names.join(", ")))
            })
    }
}

/// A limit constant with its estimated quadrature error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitValue {
    pub value: f64,
    pub error: f64,
}

impl LimitValue {
    fn exact(value: f64) -> Self {
        LimitValue { value, error: 0.0 }
    }

    fn scaled(self, c: f64) -> Self {
        LimitValue { value: self.value * c, error: self.error * c.abs() }
    }
}

// ---------------------------------------------------------------------------
// Local behaviour of r near the origin
// ---------------------------------------------------------------------------

/// Empirical order of `|f(hθ)| ≈ C h^q` near the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
struct LocalOrder {
    q: f64,
    /// `f` vanishes on the probed neighbourhood.
    flat: bool,
}

/// Reads the order off two dyadic radii and snaps it to a nearby integer.
fn local_order(d: usize, scale: f64, f: impl Fn(&[f64]) -> f64) -> LocalOrder {
    let mut dirs = direction_grid(d, 8);
    let neg: Vec<Vec<f64>> = dirs.iter().map(|v| v.iter().map(|x| -x).collect()).collect();
    dirs.extend(neg);
    let probe = |h: f64| {
        dirs.iter()
            .map(|th| {
                let x: Vec<f64> = th.iter().map(|v| v * h).collect();
                f(&x).abs()
            })
            .fold(0.0, f64::max)
    };
    let (h1, h2) = (2f64.powi(-6), 2f64.powi(-10));
    let (m1, m2) = (probe(h1), probe(h2));
    let floor = 1e-13 * scale.max(1e-300);
    if m1 <= floor || m2 <= floor {
        return LocalOrder { q: 2.0, flat: m1 <= floor && m2 <= floor };
    }
    let q = ((m1 / m2).ln() / (h1 / h2).ln()).clamp(0.0, 2.0);
    let near = q.round();
    LocalOrder { q: if (q - near).abs() < 0.05 { near } else { q }, flat: false }
}

fn pure_jump_triplet(model: &LevyModel, rf: &RFunction, what: &str) -> Result<Triplet> {
    if model.dim() != rf.dim() {
        return argument("model and initial data have different dimensions");
    }
    let t = model.triplet()?;
    if t.a.iter().any(|&v| v != 0.0) {
        return hypothesis(format!("{what} needs a pure-jump process; the Gaussian part would dominate at scale t^(1/2)"));
    }
    Ok(t)
}

fn require_integrable(t: &Triplet, q: f64, what: &str) -> Result<()> {
    if !t.nu.integrable_with(q) {
        return hypothesis(format!(
            "{what}: r behaves like ‖x‖^{q} near 0 but ∫(1 ∧ ‖x‖^{q}) ν(dx) diverges (small-jump index {})",
            t.nu.small_jump_index()
        ));
    }
    Ok(())
}

/// `∫ (r(x) - r(0)) ν(dx)` for a finite-variation process with `γ₀ = 0`.
pub fn limit_t1_case1(model: &LevyModel, rf: &RFunction) -> Result<LimitValue> {
    let t = pure_jump_triplet(model, rf, "the first-order limit")?;
    match model.gamma0()? {
        None => return hypothesis("γ₀ is undefined: the process does not have finite variation"),
        Some(g) if g.iter().any(|v| v.abs() > 1e-12) => {
            return hypothesis(format!("the drift γ₀ = {g:?} must vanish for this limit"));
        }
        Some(_) => {}
    }
    let d = rf.dim();
    let r0 = rf.r0();
    let order = local_order(d, rf.sup_bound(), |x| rf.eval(x) - r0);
    require_integrable(&t, order.q, "increment bound")?;
    let v = t.nu.integrate(d, |x| rf.eval(x) - r0, LIMIT_TOL)?;
    Ok(LimitValue { value: v.value, error: v.error })
}

/// `½ ∫ (r(x) + r(-x) - 2r(0)) ν(dx)` for a symmetric process.
pub fn limit_t1_symmetric(model: &LevyModel, rf: &RFunction) -> Result<LimitValue> {
    let t = pure_jump_triplet(model, rf, "the symmetric first-order limit")?;
    if !model.is_symmetric() {
        return hypothesis("the process is not symmetric");
    }
    let d = rf.dim();
    let r0 = rf.r0();
    let second = |x: &[f64]| {
        let m: Vec<f64> = x.iter().map(|v| -v).collect();
        rf.eval(x) + rf.eval(&m) - 2.0 * r0
    };
    let order = local_order(d, rf.sup_bound(), second);
    require_integrable(&t, order.q, "second-difference bound")?;
    let v = t.nu.integrate(d, second, LIMIT_TOL)?;
    Ok(LimitValue { value: 0.5 * v.value, error: 0.5 * v.error })
}

/// `⟨γ, ∇r(0)⟩ + ∫ (r(x) - r(0) - ⟨x, ∇r(0)⟩ 1_{‖x‖≤1}) ν(dx)`.
pub fn limit_t1_general(model: &LevyModel, rf: &RFunction) -> Result<LimitValue> {
    let t = pure_jump_triplet(model, rf, "the first-order limit")?;
    let d = rf.dim();
    let grad = rf
        .gradient_at_zero()
        .map_err(|e| Error::Hypothesis(format!("∇r(0) could not be certified: {e}")))?;
    let r0 = rf.r0();
    let remainder = |x: &[f64]| {
        let lin: f64 = x.iter().zip(&grad).map(|(a, b)| a * b).sum();
        rf.eval(x) - r0 - lin
    };
    let order = local_order(d, rf.sup_bound(), remainder);
    require_integrable(&t, order.q, "remainder bound")?;
    let drift: f64 = t.gamma.iter().zip(&grad).map(|(a, b)| a * b).sum();
    let v = t.nu.integrate(
        d,
        |x| {
            let n2: f64 = x.iter().map(|v| v * v).sum();
            if n2 <= 1.0 {
                remainder(x)
            } else {
                rf.eval(x) - r0
            }
        },
        LIMIT_TOL,
    )?;
    Ok(LimitValue { value: drift + v.value, error: v.error })
}

// ---------------------------------------------------------------------------
// Example 2: disjoint and nested sets
// ---------------------------------------------------------------------------

/// Configuration of the two sets in Example-2 type limits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetArrangement {
    /// `dist(Ω, Ω₀) > 0`; the limit is `∫_Ω ν(y - Ω₀) dy`.
    Disjoint,
    /// `Ω` lies inside `Ω₀` at positive distance from its complement; the
    /// limit is `-∫_Ω ν(y - Ω₀^c) dy`.
    Interior,
}

fn covariance_sets(rf: &RFunction) -> Result<(&SetGeometry, &SetGeometry)> {
    match rf.kind() {
        RKind::Covariance { omega, omega0 } => Ok((omega, omega0)),
        _ => argument("this limit needs set-indicator data r(x) = |Ω ∩ (Ω₀ + x)|"),
    }
}

fn positive_intervals(set: &SetGeometry) -> Result<Vec<(f64, f64)>> {
    let pieces = set.signed_intervals().ok_or_else(|| Error::Argument("not a one-dimensional set".into()))?;
    if pieces.iter().any(|p| p.2 < 0.0) {
        return unsupported("sets with holes are not supported by the nested quadrature");
    }
    Ok(pieces.into_iter().map(|(a, b, _)| (a, b)).collect())
}

/// Nested quadrature of the Example-2 limits; `r` must be set-indicator data.
pub fn limit_example2(model: &LevyModel, rf: &RFunction, arrangement: SetArrangement) -> Result<LimitValue> {
    if model.dim() != rf.dim() {
        return argument("model and initial data have different dimensions");
    }
    let (omega, omega0) = covariance_sets(rf)?;
    let nu = model.triplet()?.nu;
    let d = rf.dim();
    if d > 1 {
        // r - r(0) vanishes near the origin, so the generator reduces to a plain ν-integral.
        let r0 = rf.r0();
        let order = local_order(d, rf.sup_bound(), |x| rf.eval(x) - r0);
        if !order.flat {
            return hypothesis("r is not constant near the origin: the sets are not separated");
        }
        if arrangement == SetArrangement::Disjoint && r0 != 0.0 {
            return hypothesis("the sets overlap");
        }
        if arrangement == SetArrangement::Interior && (r0 - omega.measure().min(omega0.measure())).abs() > 1e-12 * r0 {
            return hypothesis("Ω is not contained in Ω₀");
        }
        let v = nu.integrate(d, |x| rf.eval(x) - r0, LIMIT_TOL)?;
        return Ok(LimitValue { value: v.value, error: v.error });
    }
    let a = positive_intervals(omega)?;
    let b = positive_intervals(omega0)?;
    let quad = Adaptive::with_tol(1e-14, 1e-11);
    let atoms = atom_positions(&nu);
    let mut total = LimitValue::exact(0.0);
    match arrangement {
        SetArrangement::Disjoint => {
            for &(a0, a1) in &a {
                for &(b0, b1) in &b {
                    if !(b0 - a1 > 0.0 || a0 - b1 > 0.0) {
                        return hypothesis("the sets are not at positive distance");
                    }
                    let mut breaks = vec![a0, a1];
                    for p in &atoms {
                        breaks.extend([p + b0, p + b1]);
                    }
                    let breaks = clip_breaks(breaks, a0, a1);
                    let mut failure = None;
                    let v = quad.integrate_breaks(
                        |y| match nu.interval_mass_1d(y - b1, y - b0) {
                            Ok(m) => m,
                            Err(e) => {
                                failure = Some(e);
                                0.0
                            }
                        },
                        &breaks,
                    )?;
                    if let Some(e) = failure {
                        return Err(e);
                    }
                    total.value += v.value;
                    total.error += v.error;
                }
            }
        }
        SetArrangement::Interior => {
            let (b0, b1) = match b.as_slice() {
                [one] => *one,
                _ => return unsupported("the interior arrangement needs Ω₀ to be a single interval"),
            };
            for &(a0, a1) in &a {
                if !(a0 > b0 && a1 < b1) {
                    return hypothesis("Ω must lie inside Ω₀ at positive distance from its complement");
                }
                let mut breaks = vec![a0, a1];
                for p in &atoms {
                    breaks.extend([p + b0, p + b1]);
                }
                let breaks = clip_breaks(breaks, a0, a1);
                let mut failure = None;
                let v = quad.integrate_breaks(
                    |y| {
                        let left = nu.interval_mass_1d(f64::NEG_INFINITY, y - b1);
                        let right = nu.interval_mass_1d(y - b0, f64::INFINITY);
                        match (left, right) {
                            (Ok(l), Ok(r)) => l + r,
                            (Err(e), _) | (_, Err(e)) => {
                                failure = Some(e);
                                0.0
                            }
                        }
                    },
                    &breaks,
                )?;
                if let Some(e) = failure {
                    return Err(e);
                }
                total.value -= v.value;
                total.error += v.error;
            }
        }
    }
    Ok(total.scaled(rf.scale()))
}

fn atom_positions(nu: &crate::levy_models::LevyMeasure) -> Vec<f64> {
    use crate::levy_models::{JumpMeasure, LevyMeasure};
    match nu {
        LevyMeasure::Finite(JumpMeasure::Atoms { points, .. }) => points.iter().map(|p| p[0]).collect(),
        LevyMeasure::Sum(parts) => parts.iter().flat_map(atom_positions).collect(),
        _ => Vec::new(),
    }
}

fn clip_breaks(mut v: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    v.retain(|x| *x >= lo && *x <= hi);
    v.sort_by(f64::total_cmp);
    v.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
    v
}

// ---------------------------------------------------------------------------
// R_β
// ---------------------------------------------------------------------------

/// `R_1` of a set written as a zonoid support function:
/// `coef · (Σ w_k |⟨θ, n_k⟩| + uniform · mean_u |⟨θ, u⟩|)`.
///
/// The atoms are boundary normals weighted by face area, the uniform part
/// collects spherical boundary pieces (their normals are uniformly spread).
#[derive(Clone, Debug, PartialEq)]
pub struct Zonoid {
    pub coef: f64,
    pub atoms: Vec<(Vec<f64>, f64)>,
    pub uniform: f64,
}

impl Zonoid {
    /// `V_θ(Ω) = ∫_{∂Ω} |⟨θ, n⟩| dS` for the supported set shapes.
    pub fn of_set(set: &SetGeometry) -> Self {
        let mut z = Zonoid { coef: 1.0, atoms: Vec::new(), uniform: 0.0 };
        z.add(set);
        z
    }

    fn add(&mut self, set: &SetGeometry) {
        let d = set.dim();
        match set {
            SetGeometry::Box { half_widths, .. } => {
                for k in 0..d {
                    let face: f64 = (0..d).filter(|&j| j != k).map(|j| 2.0 * half_widths[j]).product();
                    let mut e = vec![0.0; d];
                    e[k] = 1.0;
                    self.atoms.push((e, 2.0 * face));
                }
            }
            SetGeometry::Ball { radius, .. } => self.uniform += sphere_area(d) * radius.powi(d as i32 - 1),
            SetGeometry::Annulus { r_in, r_out, .. } => {
                self.uniform += sphere_area(d) * (r_in.powi(d as i32 - 1) + r_out.powi(d as i32 - 1))
            }
            SetGeometry::DisjointUnion(parts) => parts.iter().for_each(|p| self.add(p)),
        }
    }

    fn dim(&self) -> Option<usize> {
        self.atoms.first().map(|a| a.0.len())
    }

    pub fn eval(&self, theta: &[f64]) -> f64 {
        let d = theta.len();
        let atoms: f64 = self.atoms.iter().map(|(n, w)| w * n.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>().abs()).sum();
        self.coef * (atoms + self.uniform * sphere_abs_moment(d, 1.0) / sphere_area(d))
    }

    fn scaled(mut self, c: f64) -> Self {
        self.coef *= c;
        self
    }
}

/// Where an `R_β` comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RSource {
    /// `R_1 = -V_θ` from the closed-form directional derivative.
    Analytic,
    /// Extrapolated second differences of `r`.
    Numerical,
    /// A constant supplied by the caller.
    Constant,
    /// A closure supplied by the caller.
    Custom,
}

/// The angular weight `R_β(θ) = lim t^{-β}(r(tθ) + r(-tθ) - 2r(0))`.
#[derive(Clone)]
pub struct RBeta {
    dim: usize,
    beta: f64,
    f: SharedFn,
    constant: Option<f64>,
    zonoid: Option<Zonoid>,
    source: RSource,
}

impl fmt::Debug for RBeta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RBeta")
            .field("dim", &self.dim)
            .field("beta", &self.beta)
            .field("constant", &self.constant)
            .field("zonoid", &self.zonoid)
            .field("source", &self.source)
            .finish()
    }
}

impl RBeta {
    pub fn constant(dim: usize, beta: f64, value: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(RBeta { dim, beta, f: Arc::new(move |_| value), constant: Some(value), zonoid: None, source: RSource::Constant })
    }

    pub fn custom(dim: usize, beta: f64, f: SharedFn) -> Result<Self> {
        check_beta(beta)?;
        Ok(RBeta { dim, beta, f, constant: None, zonoid: None, source: RSource::Custom })
    }

    /// `R_β` of the given data: analytic for the classical covariance with
    /// `β = 1`, otherwise extrapolated second differences certified on a
    /// direction grid.
    pub fn from_r(rf: &RFunction, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        let d = rf.dim();
        if beta == 1.0 {
            if let RKind::Covariance { omega, omega0 } = rf.kind() {
                if omega == omega0 {
                    let owned = rf.clone();
                    let f: SharedFn = Arc::new(move |th| owned.analytic_r1(th).unwrap_or(f64::NAN));
                    let z = Zonoid::of_set(omega).scaled(-rf.scale());
                    let zonoid = zonoid_matches(&z, &f, d).then_some(z);
                    return Ok(RBeta { dim: d, beta, f, constant: None, zonoid, source: RSource::Analytic });
                }
            }
        }
        let opts = StencilOptions::default();
        for th in direction_grid(d, 8) {
            second_difference(rf, &th, beta, &opts)
                .map_err(|e| Error::Hypothesis(format!("R_β is not certified in direction {th:?}: {e}")))?;
        }
        let owned = rf.clone();
        let f: SharedFn =
            Arc::new(move |th| second_difference(&owned, th, beta, &opts).map(|e| e.value).unwrap_or(f64::NAN));
        Ok(RBeta { dim: d, beta, f, constant: None, zonoid: None, source: RSource::Numerical })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn source(&self) -> RSource {
        self.source
    }

    pub fn zonoid(&self) -> Option<&Zonoid> {
        self.zonoid.as_ref()
    }

    pub fn eval(&self, theta: &[f64]) -> f64 {
        match self.constant {
            Some(c) => c,
            None => (self.f)(theta),
        }
    }

    fn is_zero(&self) -> bool {
        self.constant == Some(0.0)
    }

    /// `∫_{S^{d-1}} R_β dσ`.
    pub fn sphere_integral(&self) -> Result<LimitValue> {
        let d = self.dim;
        if let Some(c) = self.constant {
            return Ok(LimitValue::exact(c * sphere_area(d)));
        }
        if let Some(z) = &self.zonoid {
            let total: f64 = z.atoms.iter().map(|a| a.1).sum::<f64>() + z.uniform;
            return Ok(LimitValue::exact(z.coef * total * sphere_abs_moment(d, 1.0)));
        }
        let v = sphere_integral(d, |th| (self.f)(th), 1e-9)?;
        if !v.value.is_finite() {
            return Err(Error::Numeric("R_β could not be evaluated on the whole sphere".into()));
        }
        Ok(LimitValue { value: v.value, error: v.error })
    }

    fn sup_abs(&self) -> f64 {
        match self.constant {
            Some(c) => c.abs(),
            None => direction_grid(self.dim, 64)
                .iter()
                .flat_map(|th| {
                    let m: Vec<f64> = th.iter().map(|v| -v).collect();
                    [(self.f)(th).abs(), (self.f)(&m).abs()]
                })
                .fold(0.0, f64::max),
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(1.0..2.0).contains(&beta) {
        return argument(format!("β must lie in [1, 2), got {beta}"));
    }
    Ok(())
}

fn zonoid_matches(z: &Zonoid, f: &SharedFn, d: usize) -> bool {
    if z.dim().is_some_and(|zd| zd != d) {
        return false;
    }
    direction_grid(d, 7).iter().all(|th| {
        let exact = f(th);
        exact.is_finite() && (z.eval(th) - exact).abs() <= 1e-9 * exact.abs().max(1e-300)
    })
}

fn check_indices(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > beta && alpha <= 2.0) {
        return hypothesis(format!("the index α = {alpha} must lie in (β, 2] with β = {beta}"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Fractional moments of the limit laws
// ---------------------------------------------------------------------------

/// Large-`x` expansion `p(x) ≈ Σ_k A_k x^{-1-kα}` of the symmetric law with
/// exponent `c|ξ|^α`; three terms.
fn stable_tail_series(c: f64, alpha: f64) -> Vec<(f64, f64)> {
    if alpha >= 2.0 {
        return Vec::new();
    }
    (1..=3)
        .map(|k| {
            let kf = k as f64;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            let fact = gamma(kf + 1.0);
            let a = sign * gamma(kf * alpha + 1.0) * (kf * PI * alpha / 2.0).sin() / (PI * fact) * c.powi(k);
            (a, kf * alpha)
        })
        .collect()
}

/// `E|Y|^β` for the one-dimensional law with exponent `c|ξ|^α`, from the
/// inverted density on a lattice.
///
/// The lattice sum is corrected for the periodic images of the inversion,
/// for the Euler–Maclaurin end terms and for the tail beyond the box, all
/// from the large-`x` expansion; the `h^{1+β}` and `h^{3+β}` terms of the
/// kink at the origin are then removed by Richardson extrapolation.
pub fn lattice_abs_moment(c: f64, alpha: f64, beta: f64) -> Result<LimitValue> {
    if !(c > 0.0) {
        return argument("the exponent scale must be positive");
    }
    check_indices(alpha, beta)?;
    let ell = c.powf(1.0 / alpha);
    let r_cut = (crate::density::CUTOFF_EXPONENT / c).powf(1.0 / alpha);
    let h0 = (0.25 * ell).min(PI / r_cut);
    let half = if alpha < 2.0 { 256.0 } else { 40.0 } * ell;
    let series = stable_tail_series(c, alpha);
    let lambda = SphereFunction::constant(1, c, alpha);
    let levels = 3;
    let mut sums = Vec::with_capacity(levels + 1);
    for k in 0..=levels {
        let spec = GridSpec {
            half_extent: Some(half),
            spacing: Some(h0 * 0.5f64.powi(k as i32)),
            mass_tol: Some(0.5),
            geometry_scale: None,
            max_points: 1 << 22,
        };
        let grid = p_lambda(&lambda, alpha, &spec)?;
        sums.push(corrected_lattice_moment(&grid.values, grid.spacing, beta, &series));
    }
    let ext = richardson(
        |t| sums[(h0 / t).log2().round() as usize],
        h0,
        levels,
        &[1.0 + beta, 3.0 + beta],
    );
    Ok(LimitValue { value: ext.value, error: ext.residual })
}

fn corrected_lattice_moment(values: &[f64], h: f64, beta: f64, series: &[(f64, f64)]) -> f64 {
    let n = (values.len() - 1) / 2;
    let x_max = n as f64 * h;
    let period = 2.0 * x_max;
    let tail = |x: f64| series.iter().map(|(a, e)| a * x.powf(-1.0 - e)).sum::<f64>();
    const IMAGES: i32 = 32;
    // Images beyond IMAGES periods, leading term of the expansion only:
    // Σ_{m>M} [(2mX + x)^{-s} + (2mX - x)^{-s}] with s = 1 + α, expanded to second order in x
    // and summed by the midpoint rule Σ_{m>M} m^{-q} ≈ (M + ½)^{1-q}/(q - 1).
    let far = |x: f64| match series.first() {
        Some(&(a, e)) => {
            let s = 1.0 + e;
            let m = IMAGES as f64 + 0.5;
            let base = 2.0 * a * period.powf(-s);
            base * (m.powf(1.0 - s) / (s - 1.0) + s * (s + 1.0) / 2.0 * (x / period).powi(2) * m.powf(-1.0 - s) / (s + 1.0))
        }
        None => 0.0,
    };
    let mut s = 0.0;
    for (j, &p) in values.iter().enumerate() {
        let x = (j as f64 - n as f64) * h;
        let mut alias = far(x);
        if !series.is_empty() {
            for m in 1..=IMAGES {
                let shift = m as f64 * period;
                alias += tail((x + shift).abs()) + tail((x - shift).abs());
            }
        }
        let w = if j == 0 || j == values.len() - 1 { 0.5 } else { 1.0 };
        s += w * x.abs().powf(beta) * (p - alias);
    }
    s *= h;
    // End corrections: T - I ≈ (h²/6) f'(X) - (h⁴/360) f'''(X) for the even integrand f.
    let (mut d1, mut d3, mut beyond) = (0.0, 0.0, 0.0);
    for &(a, e) in series {
        let q = beta - 1.0 - e;
        d1 += a * q * x_max.powf(q - 1.0);
        d3 += a * q * (q - 1.0) * (q - 2.0) * x_max.powf(q - 3.0);
        beyond += 2.0 * a * x_max.powf(beta - e) / (e - beta);
    }
    s - h * h / 6.0 * d1 + h.powi(4) / 360.0 * d3 + beyond
}

/// `E‖X‖^β` for the isotropic law with exponent `c‖ξ‖^α` in `R^d`, from
/// `‖x‖^β = c_{d,β} ∫ (1 - cos⟨ξ,x⟩) ‖ξ‖^{-d-β} dξ`.
pub fn radial_abs_moment(d: usize, c: f64, alpha: f64, beta: f64) -> Result<LimitValue> {
    check_indices(alpha, beta)?;
    let i = dyadic_radial_integral(|k| -(-k.powf(alpha)).exp_m1() * k.powf(-1.0 - beta), 1e-13)?;
    let pre = c.powf(beta / alpha) * isotropic_levy_constant(d, beta) * sphere_area(d);
    Ok(LimitValue { value: pre * i.value, error: pre * i.error })
}

// ---------------------------------------------------------------------------
// Theorem 2, Corollary 1, Theorem 3
// ---------------------------------------------------------------------------

/// `½ ∫ R_β(x/‖x‖) ‖x‖^β p_Λ(x) dx`.
pub fn limit_t2(lambda: &SphereFunction, alpha: f64, rb: &RBeta) -> Result<LimitValue> {
    let beta = rb.beta;
    check_indices(alpha, beta)?;
    let d = rb.dim;
    if lambda.dim() != d {
        return argument("Λ and R_β live in different dimensions");
    }
    if rb.is_zero() {
        return Ok(LimitValue::exact(0.0));
    }
    if let Some(c) = lambda.constant_value() {
        let moment = if d == 1 { lattice_abs_moment(c, alpha, beta)? } else { radial_abs_moment(d, c, alpha, beta)? };
        let s = rb.sphere_integral()?;
        let mean = s.value / sphere_area(d);
        return Ok(LimitValue {
            value: 0.5 * mean * moment.value,
            error: 0.5 * (mean.abs() * moment.error + moment.value * s.error / sphere_area(d)),
        });
    }
    if let Some(z) = rb.zonoid() {
        // E|⟨X, n⟩|^β = Λ(n)^{β/α} E|Y|^β with Y of exponent |s|^α.
        let unit = lattice_abs_moment(1.0, alpha, beta)?;
        let mut acc = 0.0;
        for (n, w) in &z.atoms {
            acc += w * lambda.at(n).powf(beta / alpha);
        }
        if z.uniform != 0.0 {
            let avg = sphere_integral(d, |u| lambda.at(u).powf(beta / alpha), 1e-11)?.value / sphere_area(d);
            acc += z.uniform * avg;
        }
        let value = 0.5 * z.coef * acc * unit.value;
        return Ok(LimitValue { value, error: (value * unit.error / unit.value).abs() });
    }
    if d == 2 {
        return limit_t2_on_grid(lambda, alpha, rb);
    }
    unsupported("the limit integral for non-constant Λ and numerical R_β is implemented in two dimensions only")
}

fn limit_t2_on_grid(lambda: &SphereFunction, alpha: f64, rb: &RBeta) -> Result<LimitValue> {
    let beta = rb.beta;
    let grid = p_lambda(lambda, alpha, &GridSpec::default())?;
    const ANGLES: usize = 720;
    let table: Vec<f64> = (0..=ANGLES)
        .map(|k| {
            let p = 2.0 * PI * k as f64 / ANGLES as f64;
            rb.eval(&[p.cos(), p.sin()])
        })
        .collect();
    if table.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("R_β could not be evaluated on the angular table".into()));
    }
    let value = 0.5
        * grid.integrate(|x| {
            let r = x[0].hypot(x[1]);
            if r == 0.0 {
                return 0.0;
            }
            let u = x[1].atan2(x[0]).rem_euclid(2.0 * PI) / (2.0 * PI) * ANGLES as f64;
            let i = (u.floor() as usize).min(ANGLES - 1);
            let f = u - i as f64;
            (table[i] * (1.0 - f) + table[i + 1] * f) * r.powf(beta)
        });
    let (_, hi) = lambda.range_on_grid(256);
    let x = grid.half_extent();
    let tail_prob = 2.0 * hi * isotropic_levy_constant(2, alpha) * sphere_area(2) * x.powf(-alpha) / alpha;
    let sup = rb.sup_abs();
    let error = 0.5 * sup * (tail_prob * x.powf(beta) * alpha / (alpha - beta) + (grid.mass - 1.0).abs() * x.powf(beta));
    Ok(LimitValue { value, error })
}

/// The closed form for an isotropic process with exponent `‖ξ‖^α`:
/// `π^{-d/2} 4^{β/2-1} Γ((d+β)/2) Γ(1-β/α) / Γ(1-β/2) · ∫_S R_β dσ`.
pub fn limit_corollary1(d: usize, alpha: f64, rb: &RBeta) -> Result<LimitValue> {
    let beta = rb.beta;
    check_indices(alpha, beta)?;
    if rb.dim != d {
        return argument("R_β lives in a different dimension");
    }
    let df = d as f64;
    let pre = PI.powf(-df / 2.0) * 4f64.powf(beta / 2.0 - 1.0) * gamma((df + beta) / 2.0) * gamma(1.0 - beta / alpha)
        / gamma(1.0 - beta / 2.0);
    Ok(rb.sphere_integral()?.scaled(pre))
}

/// `½ ∫ R_β(x/‖x‖) ‖x‖^β p_η(x) dx`.
pub fn limit_t3(eta: &EtaMeasure, rb: &RBeta) -> Result<LimitValue> {
    let rho = eta.rho();
    check_indices(rho, rb.beta)?;
    if eta.dim() != rb.dim {
        return argument("η and R_β live in different dimensions");
    }
    if rb.is_zero() {
        return Ok(LimitValue::exact(0.0));
    }
    match eta.support_axis() {
        Some(k) => {
            // p_η lives on one axis: the integral collapses to that marginal.
            let mut e = vec![0.0; rb.dim];
            e[k] = 1.0;
            let c = eta.exponent().at(&e);
            let plus = rb.eval(&e);
            e[k] = -1.0;
            let mean = 0.5 * (plus + rb.eval(&e));
            Ok(lattice_abs_moment(c, rho, rb.beta)?.scaled(0.5 * mean))
        }
        None => limit_t2(&eta.exponent(), rho, rb),
    }
}

/// `2π⁻¹ Γ(1 - 1/ρ) a` for the rectangle of Example 5 (positive, as `|Ω| - H`).
pub fn example5_rectangle(rho: f64, a: f64) -> f64 {
    2.0 / PI * gamma(1.0 - 1.0 / rho) * a
}

/// `π⁻² Γ(1 - 1/ρ) Per(Ω)` with the perimeter functional
/// `Γ((d+1)/2) π^{-(d-1)/2} ∫ V_θ σ(dθ)` (positive, as `|Ω| - H`).
pub fn example5_radial(rho: f64, omega: &SetGeometry) -> Result<f64> {
    Ok(PI.powi(-2) * gamma(1.0 - 1.0 / rho) * omega.perimeter()?.functional)
}

// ---------------------------------------------------------------------------
// Laws
// ---------------------------------------------------------------------------

/// A scale function together with the limit of the scaled heat deficit.
#[derive(Clone, Debug)]
pub struct AsymptoticLaw {
    pub theorem: Theorem,
    pub scaling: Scaling,
    /// `None` for the linear laws.
    pub beta: Option<f64>,
    pub limit: f64,
    pub limit_error: f64,
    pub diagnostics: Vec<String>,
}

impl AsymptoticLaw {
    pub fn scale(&self, t: f64) -> Result<f64> {
        self.scaling.factor(t)
    }
}

fn first_order_law(theorem: Theorem, v: LimitValue, note: String) -> AsymptoticLaw {
    AsymptoticLaw {
        theorem,
        scaling: Scaling::Linear,
        beta: None,
        limit: v.value,
        limit_error: v.error,
        diagnostics: vec![note],
    }
}

/// Builds the law of `theorem` for the given process and data.
pub fn derive_law(theorem: Theorem, model: &LevyModel, rf: &RFunction, beta: f64) -> Result<AsymptoticLaw> {
    match theorem {
        Theorem::T1Case1 => Ok(first_order_law(theorem, limit_t1_case1(model, rf)?, "∫(r - r(0)) dν".into())),
        Theorem::T1Case2i => {
            Ok(first_order_law(theorem, limit_t1_symmetric(model, rf)?, "½∫(r(x) + r(-x) - 2r(0)) dν".into()))
        }
        Theorem::T1Case2ii => Ok(first_order_law(
            theorem,
            limit_t1_general(model, rf)?,
            "⟨γ, ∇r(0)⟩ + compensated ν-integral".into(),
        )),
        Theorem::Ex2Case1 => Ok(first_order_law(
            theorem,
            limit_example2(model, rf, SetArrangement::Disjoint)?,
            "∫_Ω ν(y - Ω₀) dy".into(),
        )),
        Theorem::Ex2Case2 => Ok(first_order_law(
            theorem,
            limit_example2(model, rf, SetArrangement::Interior)?,
            "-∫_Ω ν(y - Ω₀ᶜ) dy".into(),
        )),
        Theorem::T2 => {
            let sl = model.exponent_scaling_limit()?;
            sl.admits_beta(beta)?;
            let LimitObject::Lambda(lambda) = &sl.limit else {
                return Err(Error::Numeric("exponent scaling limit without Λ".into()));
            };
            let rb = RBeta::from_r(rf, beta)?;
            let v = limit_t2(lambda, sl.alpha, &rb)?;
            Ok(AsymptoticLaw {
                theorem,
                scaling: Scaling::Regular { v: sl.v.clone(), beta },
                beta: Some(beta),
                limit: v.value,
                limit_error: v.error,
                diagnostics: vec![format!("α = {}, R_β source {:?}", sl.alpha, rb.source())],
            })
        }
        Theorem::Corollary1 => {
            if !model.is_isotropic() {
                return hypothesis("the closed form needs an isotropic process");
            }
            let sl = model.exponent_scaling_limit()?;
            sl.admits_beta(beta)?;
            let c = match &sl.limit {
                LimitObject::Lambda(l) => l.constant_value(),
                LimitObject::Eta(_) => None,
            }
            .ok_or_else(|| Error::Hypothesis("the angular limit Λ is not constant".into()))?;
            let rb = RBeta::from_r(rf, beta)?;
            let v = limit_corollary1(model.dim(), sl.alpha, &rb)?;
            // Absorbing Λ ≡ c into V(s) = c s^α makes the limit exponent exactly ‖ξ‖^α.
            Ok(AsymptoticLaw {
                theorem,
                scaling: Scaling::Regular { v: Arc::new(PowerLaw { coef: c, index: sl.alpha }), beta },
                beta: Some(beta),
                limit: v.value,
                limit_error: v.error,
                diagnostics: vec![format!("α = {}, Λ ≡ {c} absorbed into V", sl.alpha)],
            })
        }
        Theorem::T3 => {
            let (sl, eta) = eta_limit(model)?;
            sl.admits_beta(beta)?;
            let rb = RBeta::from_r(rf, beta)?;
            let v = limit_t3(&eta, &rb)?;
            Ok(AsymptoticLaw {
                theorem,
                scaling: Scaling::Regular { v: sl.v.clone(), beta },
                beta: Some(beta),
                limit: v.value,
                limit_error: v.error,
                diagnostics: vec![format!("ρ = {}, η(B₁ᶜ) = {}", eta.rho(), eta.outer_mass())],
            })
        }
        Theorem::Ex5Rectangle | Theorem::Ex5Radial => {
            if beta != 1.0 {
                return argument("the Example-5 closed forms use β = 1");
            }
            let (sl, eta) = eta_limit(model)?;
            sl.admits_beta(beta)?;
            let (omega, omega0) = covariance_sets(rf)?;
            if omega != omega0 || rf.dim() != 2 {
                return argument("the Example-5 closed forms need the classical heat content of a planar set");
            }
            let axis = eta
                .support_axis()
                .ok_or_else(|| Error::Hypothesis("the Example-5 closed forms need η on a coordinate axis".into()))?;
            let rho = eta.rho();
            let value = match (theorem, omega) {
                (Theorem::Ex5Rectangle, SetGeometry::Box { half_widths, .. }) => {
                    example5_rectangle(rho, 2.0 * half_widths[1 - axis])
                }
                (Theorem::Ex5Rectangle, _) => return argument("the rectangle closed form needs a box"),
                (_, SetGeometry::Ball { .. } | SetGeometry::Annulus { .. }) => example5_radial(rho, omega)?,
                _ => return argument("the radial closed form needs a ball or an annulus"),
            };
            Ok(AsymptoticLaw {
                theorem,
                scaling: Scaling::Regular { v: sl.v.clone(), beta },
                beta: Some(beta),
                limit: -value * rf.scale(),
                limit_error: 0.0,
                diagnostics: vec![format!("closed form with ρ = {rho}; η(B₁ᶜ) = {}", eta.outer_mass())],
            })
        }
    }
}

fn eta_limit(model: &LevyModel) -> Result<(crate::levy_models::ScalingLimit, EtaMeasure)> {
    let sl = model.measure_scaling_limit()?;
    let eta = match &sl.limit {
        LimitObject::Eta(e) => e.clone(),
        LimitObject::Lambda(_) => return Err(Error::Numeric("measure scaling limit without η".into())),
    };
    Ok((sl, eta))
}

// ---------------------------------------------------------------------------
// Convergence reports
// ---------------------------------------------------------------------------

/// How errors are measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorMode {
    /// `|scaled/limit - 1|`.
    Relative,
    /// `|scaled - limit|`, used when the limit is zero.
    Absolute,
}

impl fmt::Display for ErrorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorMode::Relative => "relative",
            ErrorMode::Absolute => "absolute",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub t: f64,
    pub scale: f64,
    pub scaled: f64,
    pub error: f64,
    pub stderr: Option<f64>,
}

/// Errors of a scaled sweep against a law and the PASS verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub scenario: String,
    pub theorem: Theorem,
    pub estimator: String,
    pub limit: f64,
    pub limit_error: f64,
    pub mode: ErrorMode,
    pub tolerance: f64,
    /// Ordered by decreasing `t`.
    pub rows: Vec<ReportRow>,
    /// Least-squares slope of `log error` against `log t`.
    pub slope: Option<f64>,
    pub pass: bool,
    /// `false` when the errors do not shrink along the sweep, the symptom of a wrong scale.
    pub converging: bool,
}

/// Compares the scaled rows of `estimator` in `table` with the law.
pub fn convergence_report(table: &SweepTable, law: &AsymptoticLaw, estimator: &str, tolerance: f64) -> Result<ConvergenceReport> {
    if !(tolerance > 0.0) {
        return argument("the tolerance must be positive");
    }
    let mode = if law.limit == 0.0 { ErrorMode::Absolute } else { ErrorMode::Relative };
    let mut rows: Vec<ReportRow> = table
        .estimator_rows(estimator)
        .map(|r| {
            let error = match mode {
                ErrorMode::Relative => (r.scaled / law.limit - 1.0).abs(),
                ErrorMode::Absolute => (r.scaled - law.limit).abs(),
            };
            ReportRow { t: r.t, scale: r.scale, scaled: r.scaled, error, stderr: r.stderr }
        })
        .collect();
    if rows.is_empty() {
        return argument(format!("the sweep has no rows for the estimator `{estimator}`"));
    }
    rows.sort_by(|a, b| b.t.total_cmp(&a.t));
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        rows.iter().filter(|r| r.error > 0.0 && r.error.is_finite()).map(|r| (r.t.ln(), r.error.ln())).unzip();
    let slope = (xs.len() >= 3).then(|| least_squares_slope(&xs, &ys));
    let first = rows[0].error;
    let last = rows[rows.len() - 1].error;
    let pass = last.is_finite() && last <= tolerance;
    let converging = pass || (last.is_finite() && last < 0.5 * first);
    Ok(ConvergenceReport {
        scenario: table.scenario.clone(),
        theorem: law.theorem,
        estimator: estimator.to_string(),
        limit: law.limit,
        limit_error: law.limit_error,
        mode,
        tolerance,
        rows,
        slope,
        pass,
        converging,
    })
}

impl ConvergenceReport {
    pub fn final_error(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.error)
    }

    /// Columns `t, scale, scaled_value, limit, error, error_mode, stderr`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e.to_string()));
        w.write_record(["t", "scale", "scaled_value", "limit", "error", "error_mode", "stderr"]).map_err(io)?;
        for r in &self.rows {
            w.write_record([
                format!("{:e}", r.t),
                format!("{:e}", r.scale),
                format!("{:e}", r.scaled),
                format!("{:e}", self.limit),
                format!("{:e}", r.error),
                self.mode.to_string(),
                r.stderr.map_or(String::new(), |s| format!("{s:e}")),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for ConvergenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario   {}", self.scenario)?;
        writeln!(f, "theorem    {}", self.theorem)?;
        writeln!(f, "estimator  {}", self.estimator)?;
        writeln!(f, "limit      {:.10} (± {:.1e})", self.limit, self.limit_error)?;
        writeln!(f, "errors     {}", self.mode)?;
        writeln!(f, "{:>12}  {:>14}  {:>12}", "t", "scaled", "error")?;
        for r in &self.rows {
            writeln!(f, "{:>12.4e}  {:>14.8}  {:>12.4e}", r.t, r.scaled, r.error)?;
        }
        match self.slope {
            Some(s) => writeln!(f, "slope      {s:.3}")?,
            None => writeln!(f, "slope      n/a")?,
        }
        if !self.converging {
            writeln!(f, "warning    errors do not decrease along the sweep; the scale may be wrong")?;
        }
        write!(
            f,
            "verdict    {} (error {:.3e} at t = {:.3e}, tolerance {:.1e})",
            if self.pass { "PASS" } else { "FAIL" },
            self.final_error(),
            self.rows.last().map_or(f64::NAN, |r| r.t),
            self.tolerance
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_r, InitialData};
    use crate::levy_models::{stable_abs_moment, JumpMeasure};

    fn interval_r() -> RFunction {
        build_r(&InitialData::classical(SetGeometry::interval(0.0, 1.0).unwrap())).unwrap()
    }

    #[test]
    fn first_order_limits_of_stable_intervals() {
        let rf = interval_r();
        let m = LevyModel::stable_from_levy_density(1, 0.5, 1.0).unwrap();
        let v = limit_t1_case1(&m, &rf).unwrap();
        assert!((v.value + 8.0).abs() < 1e-7, "{v:?}");
        let m = LevyModel::stable_from_levy_density(1, 0.8, 1.0).unwrap();
        let v = limit_t1_symmetric(&m, &rf).unwrap();
        assert!((v.value + 12.5).abs() < 1e-7, "{v:?}");
    }

    #[test]
    fn theorem_one_chain_for_even_data() {
        let rf = interval_r();
        let m = LevyModel::stable_from_levy_density(1, 0.8, 1.0).unwrap();
        let a = limit_t1_case1(&m, &rf).unwrap().value;
        let b = limit_t1_symmetric(&m, &rf).unwrap().value;
        let c = limit_t1_general(&m, &rf).unwrap().value;
        assert!((a - b).abs() < 1e-7 && (b - c).abs() < 1e-7, "{a} {b} {c}");
    }

    #[test]
    fn hypothesis_gates() {
        let rf = interval_r();
        let m = LevyModel::isotropic_stable(1, 1.5, 1.0).unwrap();
        assert!(matches!(limit_t1_symmetric(&m, &rf), Err(Error::Hypothesis(_))));
        assert!(matches!(limit_t1_case1(&m, &rf), Err(Error::Hypothesis(_))));
        let drift = LevyModel::compound_poisson(
            1,
            JumpMeasure::Atoms { points: vec![vec![1.0]], weights: vec![1.0] },
            vec![0.3],
        )
        .unwrap();
        assert!(matches!(limit_t1_case1(&drift, &rf), Err(Error::Hypothesis(_))));
        assert!(matches!(limit_t1_symmetric(&drift, &rf), Err(Error::Hypothesis(_))));
        let rb = RBeta::constant(1, 1.0, -2.0).unwrap();
        let one = SphereFunction::constant(1, 1.0, 0.9);
        assert!(matches!(limit_t2(&one, 0.9, &rb), Err(Error::Hypothesis(_))));
        assert!(matches!(limit_corollary1(1, 1.0, &rb), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn lattice_moment_matches_fractional_moment_formula() {
        for &(c, a, b) in &[(1.0, 1.5, 1.0), (2.5, 1.5, 1.0), (1.0, 1.2, 1.0), (0.7, 1.9, 1.4), (1.0, 2.0, 1.0)] {
            let v = lattice_abs_moment(c, a, b).unwrap();
            let exact = c.powf(b / a) * stable_abs_moment(a, b);
            assert!((v.value / exact - 1.0).abs() < 1e-7, "c={c} a={a} b={b}: {} vs {exact}", v.value);
        }
    }

    #[test]
    fn corollary_examples() {
        let rb = RBeta::constant(1, 1.0, -2.0).unwrap();
        let v = limit_corollary1(1, 2.0, &rb).unwrap().value;
        assert!((v + 2.0 / PI.sqrt()).abs() < 1e-14);
        let v = limit_corollary1(1, 1.5, &rb).unwrap().value;
        assert!((v + 2.0 / PI * gamma(1.0 / 3.0)).abs() < 1e-13);
    }

    #[test]
    fn theorem_two_agrees_with_closed_form() {
        let rb = RBeta::constant(1, 1.0, -2.0).unwrap();
        let one = SphereFunction::constant(1, 1.0, 1.5);
        let a = limit_t2(&one, 1.5, &rb).unwrap().value;
        let b = limit_corollary1(1, 1.5, &rb).unwrap().value;
        assert!((a / b - 1.0).abs() < 1e-6, "{a} {b}");
        let disk = build_r(&InitialData::classical(SetGeometry::ball(vec![0.0, 0.0], 1.0).unwrap())).unwrap();
        let rb = RBeta::from_r(&disk, 1.0).unwrap();
        assert!(rb.zonoid().is_some());
        let one = SphereFunction::constant(2, 1.0, 1.7);
        let a = limit_t2(&one, 1.7, &rb).unwrap().value;
        let b = limit_corollary1(2, 1.7, &rb).unwrap().value;
        assert!((a / b - 1.0).abs() < 1e-6, "{a} {b}");
    }

    #[test]
    fn zonoid_route_matches_grid_route() {
        let sq = build_r(&InitialData::classical(SetGeometry::centered_box(&[1.0, 2.0]).unwrap())).unwrap();
        let rb = RBeta::from_r(&sq, 1.0).unwrap();
        let lambda = SphereFunction::coordinate_powers(2, 1.6);
        let z = limit_t2(&lambda, 1.6, &rb).unwrap();
        let numeric = RBeta::custom(2, 1.0, Arc::new(move |th| rb.eval(th))).unwrap();
        let g = limit_t2(&lambda, 1.6, &numeric).unwrap();
        assert!((z.value - g.value).abs() <= 1e-2 * z.value.abs() + g.error, "{z:?} {g:?}");
    }

    #[test]
    fn axis_limit_collapses_to_marginal_moment() {
        let eta = EtaMeasure::Axes { dim: 2, rho: 1.5, weights: vec![(1, 0.75)] };
        let rb = RBeta::constant(2, 1.0, -2.0).unwrap();
        let v = limit_t3(&eta, &rb).unwrap().value;
        let c = eta.exponent().at(&[0.0, 1.0]);
        assert!((c - (2.0 * PI).sqrt()).abs() < 1e-12);
        let exact = -c.powf(1.0 / 1.5) * stable_abs_moment(1.5, 1.0);
        assert!((v / exact - 1.0).abs() < 1e-7, "{v} {exact}");
    }

    #[test]
    fn example_two_atoms() {
        let r = |a: (f64, f64), b: (f64, f64)| {
            build_r(&InitialData::new(
                crate::geometry::GFunction::Indicator(SetGeometry::interval(a.0, a.1).unwrap()),
                crate::geometry::MuMeasure::LebesgueOnSet(SetGeometry::interval(b.0, b.1).unwrap()),
            ))
            .unwrap()
        };
        let atom = |p: f64| {
            LevyModel::compound_poisson_without_drift(1, JumpMeasure::Atoms { points: vec![vec![p]], weights: vec![1.0] })
                .unwrap()
        };
        let rf = r((0.0, 1.0), (3.0, 4.0));
        let (omega, omega0) = covariance_sets(&rf).unwrap();
        assert_eq!(omega.measure(), 1.0);
        let _ = omega0;
        let v = limit_example2(&atom(3.0), &rf, SetArrangement::Disjoint).unwrap().value;
        assert!(v.abs() < 1e-12, "{v}");
        let rf = r((0.0, 1.0), (2.0, 3.0));
        let v = limit_example2(&atom(-2.0), &rf, SetArrangement::Disjoint).unwrap().value;
        let w = limit_t1_case1(&atom(-2.0), &rf).unwrap().value;
        assert!((v - w).abs() < 1e-8, "{v} {w}");
    }

    #[test]
    fn nested_quadrature_matches_levy_integral_for_power_law() {
        let rf = build_r(&InitialData::new(
            crate::geometry::GFunction::Indicator(SetGeometry::interval(0.0, 1.0).unwrap()),
            crate::geometry::MuMeasure::LebesgueOnSet(SetGeometry::interval(2.0, 3.0).unwrap()),
        ))
        .unwrap();
        let m = LevyModel::stable_from_levy_density(1, 0.5, 1.0).unwrap();
        let a = limit_example2(&m, &rf, SetArrangement::Disjoint).unwrap().value;
        let b = limit_t1_case1(&m, &rf).unwrap().value;
        assert!(a > 0.0 && (a - b).abs() < 1e-8 * a, "{a} {b}");
    }

    #[test]
    fn theorem_names_round_trip() {
        for t in Theorem::ALL {
            assert_eq!(t.name().parse::<Theorem>().unwrap(), t);
        }
    }
}
