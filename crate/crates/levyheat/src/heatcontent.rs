//! Heat content `H_g^μ(t) = E r(X_t)` by deterministic quadrature and by
//! Monte Carlo, plus t-sweeps of the scaled deficit `H(t) - H(0)`.
//!
//! Deterministic routes, chosen automatically:
//!
//! * compound Poisson models: the Poisson series `Σ_k P(N_t = k) E r(S_k - tγ₀)`;
//! * one-dimensional symmetric models without finite jump parts and `r` a
//!   covariance of intervals: a spectral integral in frequency space;
//! * boxes under separable exponents: a product of one-dimensional spectral values;
//! * anything else symmetric: `∫ r p_t` over a Fourier-inverted density grid.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::density::{transition_density, DensityCache, GridSpec, Sampler};
use crate::error::{argument, numeric, unsupported, Error, Result};
use crate::geometry::{build_r, InitialData, RFunction, RKind, SetGeometry};
use crate::levy_models::{generalized_inverse, Family, InverseOptions, JumpMeasure, LevyModel, ScalarFunction};
use crate::quadrature::{gauss_panel, Adaptive};
use crate::special::{normal_cdf, normal_pdf};

/// Which estimators a scenario runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimator {
    Quadrature,
    MonteCarlo { n: usize },
    Both { n: usize },
}

impl Estimator {
    pub fn mc_draws(&self) -> Option<usize> {
        match self {
            Estimator::Quadrature => None,
            Estimator::MonteCarlo { n } | Estimator::Both { n } => Some(*n),
        }
    }

    pub fn uses_quadrature(&self) -> bool {
        !matches!(self, Estimator::MonteCarlo { .. })
    }
}

/// Deterministic route for [`heat_content_quadrature`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadratureMethod {
    Auto,
    Spectral,
    SeparableBoxes,
    PoissonSeries,
    DensityGrid,
}

impl fmt::Display for QuadratureMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            QuadratureMethod::Auto => "auto",
            QuadratureMethod::Spectral => "spectral",
            QuadratureMethod::SeparableBoxes => "separable-boxes",
            QuadratureMethod::PoissonSeries => "poisson-series",
            QuadratureMethod::DensityGrid => "density-grid",
        };
        f.write_str(s)
    }
}

/// Numerical tolerances of the estimators.
#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances {
    /// Relative target for deterministic deficits.
    pub rel: f64,
    /// Absolute floor for deterministic deficits.
    pub abs: f64,
    /// Draws per Monte-Carlo batch (one random stream per batch).
    pub mc_batch: usize,
    /// Grid options for the density route.
    pub grid: GridSpec,
    /// Directory of the on-disk density cache used by the density route.
    pub cache_dir: Option<PathBuf>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rel: 1e-9, abs: 1e-16, mc_batch: 1 << 16, grid: GridSpec::default(), cache_dir: None }
    }
}

/// A model, initial data and time grid.
#[derive(Clone, Debug)]
pub struct HeatScenario {
    pub name: String,
    pub model: LevyModel,
    pub data: InitialData,
    pub r: RFunction,
    pub t_grid: Vec<f64>,
    pub estimator: Estimator,
    pub seed: u64,
    pub method: QuadratureMethod,
    pub tol: Tolerances,
}

/// `n` geometric points from `hi` down to `lo`.
pub fn geometric_grid(hi: f64, lo: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![hi];
    }
    let (a, b) = (hi.ln(), lo.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

impl HeatScenario {
    /// Twelve points from `10⁻¹` to `10^{-4.5}`.
    pub fn default_t_grid() -> Vec<f64> {
        geometric_grid(1e-1, 10f64.powf(-4.5), 12)
    }

    pub fn new(
        name: impl Into<String>,
        model: LevyModel,
        data: InitialData,
        t_grid: Vec<f64>,
        estimator: Estimator,
    ) -> Result<Self> {
        let r = build_r(&data)?;
        if r.dim() != model.dim() {
            return argument(format!("model lives in d = {} but the data in d = {}", model.dim(), r.dim()));
        }
        if t_grid.is_empty() {
            return argument("the time grid is empty");
        }
        if !t_grid.iter().all(|t| *t > 0.0 && t.is_finite()) {
            return argument("every time in the grid must be positive and finite");
        }
        if !t_grid.windows(2).all(|w| w[1] < w[0]) {
            return argument("the time grid must be strictly decreasing");
        }
        if let Some(n) = estimator.mc_draws() {
            if n < 1000 {
                return argument("Monte Carlo needs at least 1000 draws");
            }
        }
        Ok(HeatScenario {
            name: name.into(),
            model,
            data,
            r,
            t_grid,
            estimator,
            seed: 0,
            method: QuadratureMethod::Auto,
            tol: Tolerances::default(),
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_method(mut self, method: QuadratureMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    /// `H(0) = r(0)`.
    pub fn h0(&self) -> f64 {
        self.r.r0()
    }

    /// The deterministic route [`QuadratureMethod::Auto`] resolves to.
    pub fn resolved_method(&self) -> Result<QuadratureMethod> {
        if self.method != QuadratureMethod::Auto {
            return Ok(self.method);
        }
        if matches!(self.model.family(), Family::CompoundPoisson { .. }) {
            return Ok(QuadratureMethod::PoissonSeries);
        }
        if spectral_weights(&self.model, &self.r).is_some() {
            return Ok(QuadratureMethod::Spectral);
        }
        if box_pair(&self.r).is_some() && separable_spectral(&self.model).is_some() {
            return Ok(QuadratureMethod::SeparableBoxes);
        }
        if self.model.is_symmetric() {
            return Ok(QuadratureMethod::DensityGrid);
        }
        unsupported(
            "no deterministic estimator covers this non-symmetric, non-compound-Poisson model; use Monte Carlo",
        )
    }
}

/// Result of [`heat_content_quadrature`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureValue {
    pub h: f64,
    /// `H(t) - H(0)`, computed without forming the difference.
    pub deficit: f64,
    /// Bound on the truncation and quadrature error of `deficit`.
    pub tail_bound: f64,
    pub method: QuadratureMethod,
}

/// Deterministic heat content at time `t`.
pub fn heat_content_quadrature(sc: &HeatScenario, t: f64) -> Result<QuadratureValue> {
    if !(t > 0.0) {
        return argument("heat content needs t > 0");
    }
    let method = sc.resolved_method()?;
    let (deficit, tail_bound) = match method {
        QuadratureMethod::Spectral => {
            let w = spectral_weights(&sc.model, &sc.r)
                .ok_or_else(|| Error::Unsupported("the spectral route needs a 1-d symmetric model and interval covariance".into()))?;
            spectral_1d(&sc.model, &w, t, &sc.tol)?
        }
        QuadratureMethod::SeparableBoxes => separable_boxes(sc, t)?,
        QuadratureMethod::PoissonSeries => poisson_series(sc, t)?,
        QuadratureMethod::DensityGrid => density_route(sc, t)?,
        QuadratureMethod::Auto => unreachable!("resolved above"),
    };
    Ok(QuadratureValue { h: sc.h0() + deficit, deficit, tail_bound, method })
}

// ---------------------------------------------------------------------------
// Spectral route

/// Kinks `(s, w)` with `r'' = Σ w δ_s` for a one-dimensional covariance of intervals.
fn interval_kinks(a: &[(f64, f64, f64)], b: &[(f64, f64, f64)], scale: f64) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = Vec::new();
    for &(a0, a1, sa) in a {
        for &(b0, b1, sb) in b {
            let s = sa * sb * scale;
            v.extend([(a0 - b1, s), (a0 - b0, -s), (a1 - b1, -s), (a1 - b0, s)]);
        }
    }
    v.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (s, w) in v {
        match out.last_mut() {
            Some(last) if (last.0 - s).abs() <= 1e-13 * (1.0 + s.abs()) => last.1 += w,
            _ => out.push((s, w)),
        }
    }
    let wmax = out.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    out.retain(|p| p.1.abs() > 1e-14 * wmax);
    out
}

fn kinks_of(r: &RFunction) -> Option<Vec<(f64, f64)>> {
    match r.kind() {
        RKind::Covariance { omega, omega0 } if r.dim() == 1 => {
            Some(interval_kinks(&omega.signed_intervals()?, &omega0.signed_intervals()?, r.scale()))
        }
        _ => None,
    }
}

fn spectral_eligible(model: &LevyModel) -> bool {
    model.dim() == 1 && model.is_symmetric() && model.radially_monotone()
}

fn spectral_weights(model: &LevyModel, r: &RFunction) -> Option<Vec<(f64, f64)>> {
    if spectral_eligible(model) {
        kinks_of(r)
    } else {
        None
    }
}

/// `E r(X_t) - r(0)` for `r'' = Σ w δ_s` and a real, radially monotone exponent:
///
/// `(1/π) ∫_0^∞ C(ξ) (1 - e^{-tψ(ξ)}) ξ^{-2} dξ`, `C(ξ) = Σ w cos(ξ s) = -2 Σ w sin²(ξ s / 2)`.
///
/// Half-period panels run out to `Ξ`; beyond it the oscillatory terms use two
/// integration-by-parts terms (remainder `≤ 2|g''(Ξ)|/|s|³`) and the `s = 0`
/// term is integrated in `log ξ`.
pub(crate) fn spectral_1d(model: &LevyModel, kinks: &[(f64, f64)], t: f64, tol: &Tolerances) -> Result<(f64, f64)> {
    if kinks.is_empty() {
        return Ok((0.0, 0.0));
    }
    let one_minus_e = |xi: f64| -(-t * model.psi_re(&[xi])).exp_m1();
    let g = |xi: f64| one_minus_e(xi) / (xi * xi);
    let c = |xi: f64| -2.0 * kinks.iter().map(|&(s, w)| w * (0.5 * xi * s).sin().powi(2)).sum::<f64>();
    let integrand = |xi: f64| c(xi) * g(xi);
    let smax = kinks.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
    let w0: f64 = kinks.iter().filter(|p| p.0 == 0.0).map(|p| p.1).sum();
    let osc: Vec<(f64, f64)> = kinks.iter().copied().filter(|p| p.0 != 0.0).collect();
    let panel = PI / smax;
    let quad = Adaptive { abs_tol: tol.abs * 1e-3, rel_tol: tol.rel * 1e-2, max_segments: 20_000 };
    let first = quad.integrate(integrand, 0.0, panel)?;
    let mut acc = first.value;
    let mut err = first.error;
    let max_panels: usize = 4_000_000;
    let mut k = 1usize;
    let (tail_osc, bound) = loop {
        acc += gauss_panel(integrand, k as f64 * panel, (k + 1) as f64 * panel);
        k += 1;
        if k.is_multiple_of(16) || k >= max_panels {
            let xi = k as f64 * panel;
            let (d1, d2) = derivatives(&g, xi);
            let mut tail = 0.0;
            let mut b = 0.0;
            for &(s, w) in &osc {
                let a = s.abs();
                tail += w * (-(a * xi).sin() * g(xi) / a - (a * xi).cos() * d1 / (a * a));
                b += w.abs() * (2.0 * d2.abs() / a.powi(3) + 1e-6 * d1.abs() / (a * a));
            }
            let target = (tol.abs).max(tol.rel * (acc + tail).abs()) / PI;
            if b <= target || k >= max_panels {
                if b > target {
                    return numeric(format!(
                        "spectral tail bound {:e} stays above the tolerance after {k} panels",
                        b / PI
                    ));
                }
                break (tail, b);
            }
        }
    };
    let xi_end = k as f64 * panel;
    let mut nonosc = 0.0;
    if w0 != 0.0 {
        let mut u = xi_end;
        let mut guard = 0;
        while t * model.psi_re(&[u]) < 40.0 {
            u *= 2.0;
            guard += 1;
            if guard > 2000 {
                return numeric("the exponent never reaches the cutoff level");
            }
        }
        let v = quad.integrate(|l: f64| one_minus_e(l.exp()) * (-l).exp(), xi_end.ln(), u.ln())?;
        nonosc = w0 * (v.value + 1.0 / u);
        err += w0.abs() * v.error;
    }
    let deficit = (acc + tail_osc + nonosc) / PI;
    Ok((deficit, (bound + err) / PI))
}

/// First and second derivatives by five-point central differences.
fn derivatives(g: &dyn Fn(f64) -> f64, x: f64) -> (f64, f64) {
    let h = 1e-2 * x;
    let (m2, m1, z, p1, p2) = (g(x - 2.0 * h), g(x - h), g(x), g(x + h), g(x + 2.0 * h));
    let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
    let d2 = (-m2 + 16.0 * m1 - 30.0 * z + 16.0 * p1 - p2) / (12.0 * h * h);
    (d1, d2)
}

// ---------------------------------------------------------------------------
// Boxes under separable exponents

/// Per-axis `(lo, hi)` bounds of a box.
type Bounds = Vec<(f64, f64)>;

/// `(Ω, Ω₀)` when `r` is the covariance of two axis-aligned boxes.
fn box_pair(r: &RFunction) -> Option<(Bounds, Bounds)> {
    match r.kind() {
        RKind::Covariance {
            omega: SetGeometry::Box { center: c, half_widths: h },
            omega0: SetGeometry::Box { center: c0, half_widths: h0 },
        } => Some((
            c.iter().zip(h).map(|(c, h)| (c - h, c + h)).collect(),
            c0.iter().zip(h0).map(|(c, h)| (c - h, c + h)).collect(),
        )),
        _ => None,
    }
}

fn separable_spectral(model: &LevyModel) -> Option<Vec<LevyModel>> {
    if model.dim() < 2 {
        return None;
    }
    let f = model.separable_factors()?;
    f.iter().all(spectral_eligible).then_some(f)
}

fn separable_boxes(sc: &HeatScenario, t: f64) -> Result<(f64, f64)> {
    let (a, b) = box_pair(&sc.r).ok_or_else(|| Error::Unsupported("separable route needs a box covariance".into()))?;
    let factors = separable_spectral(&sc.model)
        .ok_or_else(|| Error::Unsupported("separable route needs ψ(ξ) = Σ ψ_k(ξ_k) with spectral factors".into()))?;
    let d = factors.len();
    let mut lengths = Vec::with_capacity(d);
    let mut deficits = Vec::with_capacity(d);
    let mut bounds = Vec::with_capacity(d);
    for k in 0..d {
        let kinks = interval_kinks(&[(a[k].0, a[k].1, 1.0)], &[(b[k].0, b[k].1, 1.0)], 1.0);
        let len = (a[k].1.min(b[k].1) - a[k].0.max(b[k].0)).max(0.0);
        let tol = Tolerances { rel: sc.tol.rel * 0.1, ..sc.tol.clone() };
        let (dk, bk) = spectral_1d(&factors[k], &kinks, t, &tol)?;
        lengths.push(len);
        deficits.push(dk);
        bounds.push(bk);
    }
    // Π (L + D) - Π L = Σ over nonempty S of Π_{S} D Π_{S^c} L, summed without cancellation.
    let mut deficit = 0.0;
    let mut bound = 0.0;
    for mask in 1u32..(1 << d) {
        let mut term = 1.0;
        let mut err = 1.0;
        for k in 0..d {
            if mask >> k & 1 == 1 {
                term *= deficits[k];
                err *= deficits[k].abs() + bounds[k];
            } else {
                term *= lengths[k];
                err *= lengths[k];
            }
        }
        deficit += term;
        bound += err - term.abs();
    }
    let c = sc.r.scale();
    Ok((c * deficit, c.abs() * bound.abs()))
}

// ---------------------------------------------------------------------------
// Poisson series

/// `E r(Y) - r(0)` for `Y ~ N(mean, var·I)` (`var = 0` means a point mass).
fn gaussian_deficit(r: &RFunction, mean: &[f64], var: f64, tol: &Tolerances) -> Result<f64> {
    let r0 = r.r0();
    if var == 0.0 {
        return Ok(r.eval(mean) - r0);
    }
    let sd = var.sqrt();
    if let Some(kinks) = kinks_of(r) {
        // r(x) = Σ w (x - s)_+ and E (Y - s)_+ = (μ - s)Φ((μ - s)/σ) + σ φ((μ - s)/σ).
        let e: f64 = kinks
            .iter()
            .map(|&(s, w)| {
                let z = (mean[0] - s) / sd;
                w * ((mean[0] - s) * normal_cdf(z) + sd * normal_pdf(z))
            })
            .sum();
        return Ok(e - r0);
    }
    if let Some((a, b)) = box_pair(r) {
        let mut prod = r.scale();
        for k in 0..a.len() {
            let kinks = interval_kinks(&[(a[k].0, a[k].1, 1.0)], &[(b[k].0, b[k].1, 1.0)], 1.0);
            prod *= kinks
                .iter()
                .map(|&(s, w)| {
                    let z = (mean[k] - s) / sd;
                    w * ((mean[k] - s) * normal_cdf(z) + sd * normal_pdf(z))
                })
                .sum::<f64>();
        }
        return Ok(prod - r0);
    }
    if r.dim() == 1 {
        let mut breaks: Vec<f64> = r
            .kinks_1d()
            .iter()
            .map(|k| (k - mean[0]) / sd)
            .filter(|z| z.abs() < 9.0)
            .collect();
        breaks.extend([-9.0, 9.0]);
        breaks.sort_by(f64::total_cmp);
        let quad = Adaptive::with_tol(tol.abs, tol.rel);
        let v = quad.integrate_breaks(|z| (r.eval(&[mean[0] + sd * z]) - r0) * normal_pdf(z), &breaks)?;
        return Ok(v.value);
    }
    unsupported("Gaussian jumps in d ≥ 2 need a box covariance for the Poisson series")
}

fn poisson_series(sc: &HeatScenario, t: f64) -> Result<(f64, f64)> {
    let (jumps, g0) = match sc.model.family() {
        Family::CompoundPoisson { jumps, .. } => (jumps.clone(), sc.model.gamma0()?.unwrap_or_default()),
        _ => return unsupported("the Poisson series needs a compound Poisson model"),
    };
    let d = sc.model.dim();
    let drift: Vec<f64> = g0.iter().map(|g| -g * t).collect();
    let lam = jumps.total_mass() * t;
    let mut deficit = 0.0;
    // Distribution of the k-th partial sum for atoms, merged on a fine lattice.
    let mut law: Vec<(Vec<f64>, f64)> = vec![(vec![0.0; d], 1.0)];
    let (atoms, total) = match &jumps {
        JumpMeasure::Atoms { points, weights } => {
            let tot: f64 = weights.iter().sum();
            (points.iter().cloned().zip(weights.iter().map(|w| w / tot)).collect::<Vec<_>>(), tot)
        }
        JumpMeasure::Gaussian { rate, .. } => (Vec::new(), *rate),
    };
    let _ = total;
    let mut log_p = -lam;
    let mut k = 0usize;
    loop {
        let pk = log_p.exp();
        let term = match &jumps {
            JumpMeasure::Atoms { .. } => {
                let mut s = 0.0;
                for (x, p) in &law {
                    let y: Vec<f64> = x.iter().zip(&drift).map(|(a, b)| a + b).collect();
                    s += p * (sc.r.eval(&y) - sc.r.r0());
                }
                s
            }
            JumpMeasure::Gaussian { mean, std, .. } => {
                let mu: Vec<f64> = mean.iter().zip(&drift).map(|(m, c)| k as f64 * m + c).collect();
                gaussian_deficit(&sc.r, &mu, k as f64 * std * std, &sc.tol)?
            }
        };
        deficit += pk * term;
        k += 1;
        log_p += lam.ln() - (k as f64).ln();
        let next = log_p.exp();
        if (k as f64) > lam && next < 1e-18 {
            // Geometric bound on the remaining Poisson mass.
            let q = lam / (k as f64 + 1.0);
            let remaining = next / (1.0 - q);
            return Ok((deficit, remaining * 2.0 * sc.r.sup_bound()));
        }
        if k > 100_000 {
            return numeric("Poisson series did not terminate; λt is too large");
        }
        if !atoms.is_empty() {
            let mut merged: HashMap<Vec<i64>, (Vec<f64>, f64)> = HashMap::new();
            for (x, p) in &law {
                for (a, q) in &atoms {
                    let y: Vec<f64> = x.iter().zip(a).map(|(u, v)| u + v).collect();
                    let key: Vec<i64> = y.iter().map(|v| (v * 1e12).round() as i64).collect();
                    merged.entry(key).or_insert_with(|| (y, 0.0)).1 += p * q;
                }
            }
            if merged.len() > 1_000_000 {
                return numeric("support of the jump sum grew beyond 10⁶ points");
            }
            law = merged.into_values().collect();
            law.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        }
    }
}

// ---------------------------------------------------------------------------
// Density route

fn density_route(sc: &HeatScenario, t: f64) -> Result<(f64, f64)> {
    let spec = GridSpec { geometry_scale: Some(geometry_scale(&sc.data)), ..sc.tol.grid.clone() };
    let grid = match &sc.tol.cache_dir {
        Some(dir) => DensityCache::new(dir.clone()).transition_density(&sc.model, t, &spec)?,
        None => transition_density(&sc.model, t, &spec)?,
    };
    let r0 = sc.r.r0();
    let deficit = grid.integrate(|x| sc.r.eval(x) - r0);
    let bound = sc.r.deficit_bound(f64::INFINITY) * grid.tail_mass + (grid.mass - 1.0).abs() * deficit.abs();
    Ok((deficit, bound))
}

fn geometry_scale(data: &InitialData) -> f64 {
    use crate::geometry::{GFunction, MuMeasure};
    let g = match &data.g {
        GFunction::Indicator(s) => s.feature_size(),
        GFunction::Bounded { .. } => f64::INFINITY,
    };
    let m = match &data.mu {
        MuMeasure::LebesgueOnSet(s) => s.feature_size(),
        MuMeasure::Density { support, .. } => support.feature_size(),
        MuMeasure::Gaussian { std, .. } => *std,
    };
    let s = g.min(m);
    if s.is_finite() {
        s
    } else {
        1.0
    }
}

// ---------------------------------------------------------------------------
// Monte Carlo

/// Result of [`heat_content_mc`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McValue {
    pub h: f64,
    pub deficit: f64,
    pub stderr: f64,
    pub n: usize,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mean of `r(X_t) - r(0)` over `n` draws.
///
/// Draws are split into batches, each on its own ChaCha8 stream keyed by the
/// scenario seed, `t` and the batch index; batch statistics are merged in
/// index order, so the estimate does not depend on thread scheduling.
pub fn heat_content_mc(sc: &HeatScenario, t: f64) -> Result<McValue> {
    let n = sc.estimator.mc_draws().unwrap_or(100_000);
    heat_content_mc_n(sc, t, n)
}

/// [`heat_content_mc`] with an explicit number of draws.
pub fn heat_content_mc_n(sc: &HeatScenario, t: f64, n: usize) -> Result<McValue> {
    if !(t >= 0.0) {
        return argument("t must be non-negative");
    }
    if n == 0 {
        return argument("Monte Carlo needs at least one draw");
    }
    let r0 = sc.r.r0();
    if t == 0.0 {
        return Ok(McValue { h: r0, deficit: 0.0, stderr: 0.0, n });
    }
    let sampler = Sampler::new(&sc.model)?;
    let d = sampler.dim();
    let batch = sc.tol.mc_batch.max(1);
    let batches = n.div_ceil(batch);
    let key = splitmix(sc.seed ^ splitmix(t.to_bits()));
    let stats: Vec<(usize, f64, f64)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(key);
            rng.set_stream(b as u64);
            let m = batch.min(n - b * batch);
            let mut x = vec![0.0; d];
            let (mut mean, mut m2) = (0.0, 0.0);
            for i in 0..m {
                sampler.sample_into(t, &mut rng, &mut x);
                let v = sc.r.eval(&x) - r0;
                let delta = v - mean;
                mean += delta / (i + 1) as f64;
                m2 += delta * (v - mean);
            }
            (m, mean, m2)
        })
        .collect();
    let (mut count, mut mean, mut m2) = (0usize, 0.0, 0.0);
    for (nb, mb, m2b) in stats {
        let total = count + nb;
        let delta = mb - mean;
        mean += delta * nb as f64 / total as f64;
        m2 += m2b + delta * delta * count as f64 * nb as f64 / total as f64;
        count = total;
    }
    let var = if count > 1 { m2 / (count - 1) as f64 } else { 0.0 };
    Ok(McValue { h: r0 + mean, deficit: mean, stderr: (var / count as f64).sqrt(), n: count })
}

// ---------------------------------------------------------------------------
// Sweeps

/// Normalisation of `H(t) - H(0)` in a sweep.
#[derive(Clone)]
pub enum Scaling {
    /// No rescaling.
    Identity,
    /// `t⁻¹`.
    Linear,
    /// `[V⁻(1/t)]^β`.
    Regular { v: Arc<dyn ScalarFunction>, beta: f64 },
}

impl fmt::Debug for Scaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scaling::Identity => f.write_str("Identity"),
            Scaling::Linear => f.write_str("Linear"),
            Scaling::Regular { beta, v } => write!(f, "Regular(beta={beta}, power={:?})", v.power_form()),
        }
    }
}

impl Scaling {
    pub fn factor(&self, t: f64) -> Result<f64> {
        match self {
            Scaling::Identity => Ok(1.0),
            Scaling::Linear => Ok(1.0 / t),
            Scaling::Regular { v, beta } => {
                Ok(generalized_inverse(v.as_ref(), 1.0 / t, &InverseOptions::default())?.powf(*beta))
            }
        }
    }
}

/// One estimator at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub t: f64,
    pub estimator: String,
    pub h: f64,
    pub deficit: f64,
    pub scale: f64,
    pub scaled: f64,
    pub stderr: Option<f64>,
    pub tail_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub scenario: String,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Rows of one estimator (`"quadrature"` or `"montecarlo"`), in sweep order.
    pub fn estimator_rows<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a SweepRow> + 'a {
        self.rows.iter().filter(move |r| r.estimator == name)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e.to_string()));
        w.write_record(["t", "estimator", "H", "H_minus_H0", "scale", "scaled_value", "stderr", "tail_bound"])
            .map_err(io)?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                format!("{:e}", r.t),
                r.estimator.clone(),
                format!("{:.17e}", r.h),
                format!("{:.17e}", r.deficit),
                format!("{:e}", r.scale),
                format!("{:.17e}", r.scaled),
                opt(r.stderr),
                opt(r.tail_bound),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// `(t, H, H - H(0), scale, scaled value)` for each time of the scenario and
/// each requested estimator; rows are ordered by time, quadrature first.
pub fn heat_deficit_sweep(sc: &HeatScenario, scaling: &Scaling) -> Result<SweepTable> {
    let mut rows = Vec::new();
    for &t in &sc.t_grid {
        let scale = scaling.factor(t)?;
        if sc.estimator.uses_quadrature() {
            let q = heat_content_quadrature(sc, t)?;
            rows.push(SweepRow {
                t,
                estimator: "quadrature".into(),
                h: q.h,
                deficit: q.deficit,
                scale,
                scaled: scale * q.deficit,
                stderr: None,
                tail_bound: Some(q.tail_bound),
            });
        }
        if sc.estimator.mc_draws().is_some() {
            let m = heat_content_mc(sc, t)?;
            rows.push(SweepRow {
                t,
                estimator: "montecarlo".into(),
                h: m.h,
                deficit: m.deficit,
                scale,
                scaled: scale * m.deficit,
                stderr: Some(m.stderr),
                tail_bound: None,
            });
        }
    }
    Ok(SweepTable { scenario: sc.name.clone(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma;

    fn unit_interval(model: LevyModel, est: Estimator) -> HeatScenario {
        let omega = SetGeometry::interval(0.0, 1.0).unwrap();
        HeatScenario::new("unit", model, InitialData::classical(omega), HeatScenario::default_t_grid(), est).unwrap()
    }

    /// `E min(|X|, 1)` for `X ~ N(0, 2t)`.
    fn gaussian_truncated_moment(t: f64) -> f64 {
        let s = (2.0 * t).sqrt();
        let inner = 2.0 * s * (normal_pdf(0.0) - normal_pdf(1.0 / s));
        inner + 2.0 * normal_cdf(-1.0 / s)
    }

    #[test]
    fn brownian_interval_matches_truncated_moment() {
        let sc = unit_interval(LevyModel::brownian(1, 1.0).unwrap(), Estimator::Quadrature);
        for &t in &[1e-1, 1e-2, 1e-4] {
            let q = heat_content_quadrature(&sc, t).unwrap();
            assert_eq!(q.method, QuadratureMethod::Spectral);
            let exact = -gaussian_truncated_moment(t);
            assert!((q.deficit - exact).abs() < 1e-12, "t={t} {} vs {exact}", q.deficit);
        }
        let q = heat_content_quadrature(&sc, 1e-4).unwrap();
        assert!((-q.deficit - 2.0 * (1e-4 / PI).sqrt()).abs() < 1e-5);
    }

    #[test]
    fn stable_interval_scaled_value_is_close_to_moment() {
        let sc = unit_interval(LevyModel::isotropic_stable(1, 1.5, 1.0).unwrap(), Estimator::Quadrature);
        let t: f64 = 1e-6;
        let q = heat_content_quadrature(&sc, t).unwrap();
        let scaled = q.deficit * t.powf(-1.0 / 1.5);
        let limit = -(2.0 / PI) * gamma(1.0 / 3.0);
        assert!((scaled / limit - 1.0).abs() < 0.01, "{scaled}");
    }

    #[test]
    fn separable_box_reduces_to_product() {
        let m = LevyModel::brownian(2, 1.0).unwrap();
        let omega = SetGeometry::centered_box(&[1.0, 2.0]).unwrap();
        let sc =
            HeatScenario::new("box", m, InitialData::classical(omega), vec![0.01], Estimator::Quadrature).unwrap();
        let q = heat_content_quadrature(&sc, 0.01).unwrap();
        assert_eq!(q.method, QuadratureMethod::SeparableBoxes);
        let d1 = -gaussian_truncated_moment(0.01);
        let d2 = -2.0 * gaussian_truncated_moment(0.01 / 4.0);
        let exact = (1.0 + d1) * (2.0 + d2) - 2.0;
        assert!((q.deficit - exact).abs() < 1e-12, "{} {exact}", q.deficit);
    }

    #[test]
    fn poisson_series_single_atom() {
        // One unit atom of rate 1: H = Σ P(N = k) (1 - k)_+ = P(N = 0).
        let m = LevyModel::compound_poisson_without_drift(1, JumpMeasure::Atoms { points: vec![vec![1.0]], weights: vec![1.0] })
            .unwrap();
        let sc = unit_interval(m, Estimator::Quadrature);
        let q = heat_content_quadrature(&sc, 0.3).unwrap();
        assert!((q.h - (-0.3f64).exp()).abs() < 1e-14, "{}", q.h);
    }

    #[test]
    fn monte_carlo_is_reproducible_and_consistent() {
        let sc = unit_interval(LevyModel::isotropic_stable(1, 1.2, 1.0).unwrap(), Estimator::Both { n: 200_000 })
            .with_seed(11);
        let a = heat_content_mc(&sc, 0.01).unwrap();
        let b = heat_content_mc(&sc, 0.01).unwrap();
        assert_eq!(a, b);
        let q = heat_content_quadrature(&sc, 0.01).unwrap();
        assert!((a.deficit - q.deficit).abs() < 4.0 * a.stderr, "{a:?} {q:?}");
    }

    #[test]
    fn density_route_agrees_with_spectral() {
        let sc = unit_interval(LevyModel::isotropic_stable(1, 1.0, 1.0).unwrap(), Estimator::Quadrature);
        let s = heat_content_quadrature(&sc, 0.05).unwrap();
        let tol = Tolerances { grid: GridSpec { mass_tol: Some(1e-4), ..Default::default() }, ..Default::default() };
        let dsc = sc.clone().with_method(QuadratureMethod::DensityGrid).with_tolerances(tol);
        let g = heat_content_quadrature(&dsc, 0.05).unwrap();
        assert!((s.deficit - g.deficit).abs() < 1e-5, "{} {}", s.deficit, g.deficit);
    }
}
