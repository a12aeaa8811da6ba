//! Lévy process families, their characteristic exponents and Lévy measures,
//! and regular-variation utilities.
//!
//! Conventions: the characteristic exponent satisfies
//! `E exp(i⟨ξ, X_t⟩) = exp(-t ψ(ξ))` with
//! `ψ(ξ) = ⟨ξ, Aξ⟩ - i⟨ξ, γ⟩ - ∫ (e^{i⟨ξ,y⟩} - 1 - i⟨ξ,y⟩ 1_{‖y‖≤1}) ν(dy)`.
//! For finite-variation processes this is `i⟨ξ, γ₀⟩ + ∫ (1 - e^{i⟨ξ,y⟩}) ν(dy)`
//! with `γ₀ = ∫_{‖y‖≤1} y ν(dy) - γ`, so the process drifts with velocity `-γ₀`.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::error::{argument, hypothesis, numeric, unsupported, Error, Result};
use crate::quadrature::{sphere_area, sphere_integral, Adaptive, Integral};
use crate::special::{
    gamma, isotropic_levy_constant, normal_cdf, one_minus_cos_moment, sphere_abs_moment,
};

const SYMMETRY_TOL: f64 = 1e-12;

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn check_alpha(alpha: f64, what: &str) -> Result<()> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return argument(format!("{what}: stability index must lie in (0, 2), got {alpha}"));
    }
    Ok(())
}

fn check_positive(v: f64, what: &str) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return argument(format!("{what} must be positive and finite, got {v}"));
    }
    Ok(())
}

/// A finite symmetric measure on the unit sphere.
#[derive(Clone, Debug, PartialEq)]
pub enum SphereMeasure {
    /// Total mass spread uniformly with respect to surface measure.
    Uniform { total_mass: f64 },
    /// Point masses; every atom must be matched by an antipodal atom of equal weight.
    Atoms { directions: Vec<Vec<f64>>, weights: Vec<f64> },
}

impl SphereMeasure {
    /// Builds a symmetric atomic measure from `directions` by adding the
    /// antipode of each direction with the same weight.
    pub fn symmetric_atoms(directions: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if directions.len() != weights.len() {
            return argument("sphere atoms: directions and weights differ in length");
        }
        let mut dirs = Vec::new();
        let mut ws = Vec::new();
        for (d, w) in directions.into_iter().zip(weights) {
            let n = norm(&d);
            if !(n > 0.0) {
                return argument("sphere atoms: zero direction");
            }
            let u: Vec<f64> = d.iter().map(|v| v / n).collect();
            dirs.push(u.iter().map(|v| -v).collect());
            ws.push(w);
            dirs.push(u);
            ws.push(w);
        }
        Ok(SphereMeasure::Atoms { directions: dirs, weights: ws })
    }

    fn validate(&self, d: usize) -> Result<()> {
        match self {
            SphereMeasure::Uniform { total_mass } => check_positive(*total_mass, "sphere measure mass"),
            SphereMeasure::Atoms { directions, weights } => {
                if directions.is_empty() || directions.len() != weights.len() {
                    return argument("sphere atoms: need matching, non-empty directions and weights");
                }
                for (dir, &w) in directions.iter().zip(weights) {
                    if dir.len() != d {
                        return argument("sphere atoms: direction has wrong dimension");
                    }
                    if (norm(dir) - 1.0).abs() > 1e-9 {
                        return argument("sphere atoms: directions must be unit vectors");
                    }
                    check_positive(w, "sphere atom weight")?;
                    let mirrored = directions.iter().zip(weights).any(|(o, &wo)| {
                        o.iter().zip(dir).all(|(a, b)| (a + b).abs() < 1e-9) && (wo - w).abs() <= SYMMETRY_TOL * w
                    });
                    if !mirrored {
                        return argument("sphere atoms: measure must be symmetric (antipodal atoms with equal weight)");
                    }
                }
                Ok(())
            }
        }
    }

    pub fn total_mass(&self, d: usize) -> f64 {
        let _ = d;
        match self {
            SphereMeasure::Uniform { total_mass } => *total_mass,
            SphereMeasure::Atoms { weights, .. } => weights.iter().sum(),
        }
    }

    /// `∫_S |⟨x, θ⟩|^a m(dθ)`.
    pub fn abs_moment(&self, x: &[f64], a: f64) -> f64 {
        match self {
            SphereMeasure::Uniform { total_mass } => {
                let d = x.len();
                total_mass / sphere_area(d) * sphere_abs_moment(d, a) * norm(x).powf(a)
            }
            SphereMeasure::Atoms { directions, weights } => directions
                .iter()
                .zip(weights)
                .map(|(th, w)| w * dot(x, th).abs().powf(a))
                .sum(),
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, SphereMeasure::Uniform { .. })
    }

    fn scaled(&self, c: f64) -> SphereMeasure {
        match self {
            SphereMeasure::Uniform { total_mass } => SphereMeasure::Uniform { total_mass: total_mass * c },
            SphereMeasure::Atoms { directions, weights } => SphereMeasure::Atoms {
                directions: directions.clone(),
                weights: weights.iter().map(|w| w * c).collect(),
            },
        }
    }

    /// Integrate `f` over the sphere against this measure.
    fn integrate<F: FnMut(&[f64]) -> f64>(&self, d: usize, mut f: F, tol: f64) -> Result<Integral> {
        match self {
            SphereMeasure::Uniform { total_mass } => {
                let s = sphere_integral(d, &mut f, tol)?;
                let k = total_mass / sphere_area(d);
                Ok(Integral { value: s.value * k, error: s.error * k })
            }
            SphereMeasure::Atoms { directions, weights } => {
                let v = directions.iter().zip(weights).map(|(th, w)| w * f(th)).sum();
                Ok(Integral { value: v, error: 0.0 })
            }
        }
    }
}

/// One term `coef · s^alpha` of a radial profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerTerm {
    pub coef: f64,
    pub alpha: f64,
}

/// Radial profile `f(s) = Σ coef_i s^{alpha_i}`; the radial Lévy density is
/// `f(1/r)/r = Σ coef_i r^{-1-alpha_i}`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfile {
    pub terms: Vec<PowerTerm>,
}

impl RadialProfile {
    pub fn power(alpha: f64) -> Self {
        RadialProfile { terms: vec![PowerTerm { coef: 1.0, alpha }] }
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.terms.iter().map(|t| t.coef * s.powf(t.alpha)).sum()
    }

    fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return argument("radial profile needs at least one term");
        }
        for t in &self.terms {
            check_alpha(t.alpha, "radial profile")?;
            check_positive(t.coef, "radial profile coefficient")?;
        }
        Ok(())
    }

}

/// Finite jump measures of compound Poisson processes.
#[derive(Clone, Debug, PartialEq)]
pub enum JumpMeasure {
    /// Point masses `weights[i]` at `points[i]`.
    Atoms { points: Vec<Vec<f64>>, weights: Vec<f64> },
    /// `rate` times the normal law with the given mean and isotropic standard deviation.
    Gaussian { rate: f64, mean: Vec<f64>, std: f64 },
}

impl JumpMeasure {
    fn validate(&self, d: usize) -> Result<()> {
        match self {
            JumpMeasure::Atoms { points, weights } => {
                if points.len() != weights.len() {
                    return argument("jump atoms: points and weights differ in length");
                }
                for (p, &w) in points.iter().zip(weights) {
                    if p.len() != d {
                        return argument("jump atoms: point has wrong dimension");
                    }
                    check_positive(w, "jump atom weight")?;
                    if norm(p) == 0.0 {
                        return argument("jump atoms: a Lévy measure has no mass at the origin");
                    }
                }
                Ok(())
            }
            JumpMeasure::Gaussian { rate, mean, std } => {
                check_positive(*rate, "jump rate")?;
                check_positive(*std, "jump standard deviation")?;
                if mean.len() != d {
                    return argument("gaussian jumps: mean has wrong dimension");
                }
                Ok(())
            }
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            JumpMeasure::Atoms { weights, .. } => weights.iter().sum(),
            JumpMeasure::Gaussian { rate, .. } => *rate,
        }
    }

    fn is_symmetric(&self) -> bool {
        match self {
            JumpMeasure::Atoms { points, weights } => points.iter().zip(weights).all(|(p, &w)| {
                points
                    .iter()
                    .zip(weights)
                    .any(|(q, &wq)| q.iter().zip(p).all(|(a, b)| (a + b).abs() < 1e-12) && (wq - w).abs() <= SYMMETRY_TOL * w)
            }),
            JumpMeasure::Gaussian { mean, .. } => mean.iter().all(|&m| m == 0.0),
        }
    }

    /// `∫ (1 - e^{i⟨ξ,y⟩}) ν(dy)`.
    fn one_minus_char(&self, xi: &[f64]) -> Complex64 {
        match self {
            JumpMeasure::Atoms { points, weights } => points.iter().zip(weights).fold(Complex64::new(0.0, 0.0), |acc, (p, &w)| {
                let a = dot(xi, p);
                acc + Complex64::new(w * (1.0 - a.cos()), -w * a.sin())
            }),
            JumpMeasure::Gaussian { rate, mean, std } => {
                let a = dot(xi, mean);
                let damp = (-0.5 * std * std * dot(xi, xi)).exp();
                let phi = Complex64::new(damp * a.cos(), damp * a.sin());
                (Complex64::new(1.0, 0.0) - phi) * *rate
            }
        }
    }

    /// Integrate `f` against the measure. Gaussian jumps use polar
    /// coordinates around the origin with the supplied radial break points,
    /// so integrands with radial discontinuities are handled exactly.
    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, d: usize, mut f: F, radial_breaks: &[f64], tol: f64) -> Result<Integral> {
        match self {
            JumpMeasure::Atoms { points, weights } => {
                let v = points.iter().zip(weights).map(|(p, &w)| w * f(p)).sum();
                Ok(Integral { value: v, error: 0.0 })
            }
            JumpMeasure::Gaussian { rate, mean, std } => {
                let s2 = std * std;
                let norm_c = rate / (2.0 * PI * s2).powf(d as f64 / 2.0);
                let density = |y: &[f64]| {
                    let q: f64 = y.iter().zip(mean).map(|(a, m)| (a - m) * (a - m)).sum();
                    norm_c * (-0.5 * q / s2).exp()
                };
                let reach = norm(mean) + 12.0 * std;
                let mut breaks: Vec<f64> = radial_breaks.iter().copied().filter(|&b| b > 0.0 && b < reach).collect();
                if d == 1 {
                    let mut pts: Vec<f64> = breaks.iter().flat_map(|&b| [b, -b]).collect();
                    pts.push(0.0);
                    pts.push(mean[0] - 12.0 * std);
                    pts.push(mean[0] + 12.0 * std);
                    pts.push(mean[0]);
                    pts.sort_by(f64::total_cmp);
                    pts.dedup();
                    let quad = Adaptive::with_tol(tol * 1e-3, tol);
                    return quad.integrate_breaks(|y| f(&[y]) * density(&[y]), &pts);
                }
                breaks.insert(0, 0.0);
                breaks.push(reach);
                breaks.sort_by(f64::total_cmp);
                breaks.dedup();
                let quad = Adaptive::with_tol(tol * 1e-3, tol);
                let mut failure: Option<Error> = None;
                let mut x = vec![0.0; d];
                let out = quad.integrate_breaks(
                    |rho| {
                        let inner = sphere_integral(
                            d,
                            |th| {
                                for (xi, t) in x.iter_mut().zip(th) {
                                    *xi = rho * t;
                                }
                                f(&x) * density(&x)
                            },
                            tol * 0.1,
                        );
                        match inner {
                            Ok(v) => v.value * rho.powi(d as i32 - 1),
                            Err(e) => {
                                failure = Some(e);
                                0.0
                            }
                        }
                    },
                    &breaks,
                )?;
                match failure {
                    Some(e) => Err(e),
                    None => Ok(out),
                }
            }
        }
    }

    fn tail_mass(&self, d: usize, r: f64) -> Result<f64> {
        match self {
            JumpMeasure::Gaussian { rate, mean, std } if d == 1 => {
                Ok(rate * (normal_cdf((-r - mean[0]) / std) + normal_cdf((mean[0] - r) / std)))
            }
            _ => Ok(self.integrate(d, |y| if norm(y) >= r { 1.0 } else { 0.0 }, &[r], 1e-10)?.value),
        }
    }

    fn second_moment_below(&self, d: usize, r: f64) -> Result<f64> {
        Ok(self
            .integrate(d, |y| {
                let n2 = dot(y, y);
                if n2 < r * r { n2 } else { 0.0 }
            }, &[r], 1e-10)?
            .value)
    }

    fn first_moment_below(&self, d: usize, r: f64, inclusive: bool) -> Result<Vec<f64>> {
        let mut out = vec![0.0; d];
        for (k, o) in out.iter_mut().enumerate() {
            *o = self
                .integrate(d, |y| {
                    let n = norm(y);
                    if n < r || (inclusive && n == r) { y[k] } else { 0.0 }
                }, &[r], 1e-11)?
                .value;
        }
        Ok(out)
    }
}

/// Lévy measure descriptors.
#[derive(Clone, Debug, PartialEq)]
pub enum LevyMeasure {
    Zero,
    /// `constant · ‖y‖^{-d-alpha} dy`.
    RadialPowerLaw { alpha: f64, constant: f64 },
    /// `m(dθ) f(1/r)/r dr` in polar coordinates.
    Spherical { sphere: SphereMeasure, profile: RadialProfile },
    /// `Σ_k constants[k] |y_k|^{-1-alphas[k]} dy_k` on the coordinate axes.
    AxesProduct { alphas: Vec<f64>, constants: Vec<f64> },
    Finite(JumpMeasure),
    Sum(Vec<LevyMeasure>),
}

/// Radial power-law pieces `(alpha, coefficient, angular measure)` of a
/// measure: `coefficient · r^{-1-alpha} dr ⊗ angular`.
enum Angular<'a> {
    Uniform(f64),
    Sphere(&'a SphereMeasure),
    Axis(usize),
}

impl LevyMeasure {
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            LevyMeasure::Zero => Ok(()),
            LevyMeasure::RadialPowerLaw { alpha, constant } => {
                check_alpha(*alpha, "radial power law")?;
                check_positive(*constant, "radial power law constant")
            }
            LevyMeasure::Spherical { sphere, profile } => {
                sphere.validate(d)?;
                profile.validate()
            }
            LevyMeasure::AxesProduct { alphas, constants } => {
                if alphas.len() != d || constants.len() != d {
                    return argument("axes product: one index and one constant per coordinate");
                }
                for (&a, &c) in alphas.iter().zip(constants) {
                    check_alpha(a, "axes product")?;
                    check_positive(c, "axes product constant")?;
                }
                Ok(())
            }
            LevyMeasure::Finite(j) => j.validate(d),
            LevyMeasure::Sum(parts) => parts.iter().try_for_each(|p| p.validate(d)),
        }
    }

    fn power_pieces(&self) -> Vec<(f64, f64, Angular<'_>)> {
        match self {
            LevyMeasure::RadialPowerLaw { alpha, constant } => vec![(*alpha, 1.0, Angular::Uniform(*constant))],
            LevyMeasure::Spherical { sphere, profile } => {
                profile.terms.iter().map(|t| (t.alpha, t.coef, Angular::Sphere(sphere))).collect()
            }
            LevyMeasure::AxesProduct { alphas, constants } => alphas
                .iter()
                .zip(constants)
                .enumerate()
                .map(|(k, (&a, &c))| (a, c, Angular::Axis(k)))
                .collect(),
            LevyMeasure::Sum(parts) => parts.iter().flat_map(|p| p.power_pieces()).collect(),
            _ => Vec::new(),
        }
    }

    fn finite_parts(&self) -> Vec<&JumpMeasure> {
        match self {
            LevyMeasure::Finite(j) => vec![j],
            LevyMeasure::Sum(parts) => parts.iter().flat_map(|p| p.finite_parts()).collect(),
            _ => Vec::new(),
        }
    }

    /// Angular mass of a power piece (total mass of the angular factor).
    fn angular_mass(ang: &Angular<'_>, d: usize) -> f64 {
        match ang {
            Angular::Uniform(c) => c * sphere_area(d),
            Angular::Sphere(m) => m.total_mass(d),
            Angular::Axis(_) => 2.0,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.finite_parts().iter().all(|j| j.is_symmetric())
    }

    /// Largest small-jump index: `∫_{‖y‖<1} ‖y‖^β ν(dy) < ∞` iff `β > index`
    /// (or `β ≥ 0` when the index is zero, i.e. for finite measures).
    pub fn small_jump_index(&self) -> f64 {
        self.power_pieces().iter().map(|p| p.0).fold(0.0, f64::max)
    }

    pub fn integrable_with(&self, beta: f64) -> bool {
        let idx = self.small_jump_index();
        if self.power_pieces().is_empty() {
            beta >= 0.0
        } else {
            beta > idx
        }
    }

    pub fn total_mass(&self) -> Option<f64> {
        if self.power_pieces().is_empty() {
            Some(self.finite_parts().iter().map(|j| j.total_mass()).sum())
        } else {
            None
        }
    }

    /// `ν({‖y‖ ≥ r})`.
    pub fn tail_mass(&self, d: usize, r: f64) -> Result<f64> {
        let mut s: f64 = self
            .power_pieces()
            .iter()
            .map(|(a, c, ang)| c * Self::angular_mass(ang, d) * r.powf(-a) / a)
            .sum();
        for j in self.finite_parts() {
            s += j.tail_mass(d, r)?;
        }
        Ok(s)
    }

    /// `ν([a, b])` on the line. Either end may be infinite; the interval must
    /// avoid the origin unless the measure is finite.
    pub fn interval_mass_1d(&self, a: f64, b: f64) -> Result<f64> {
        if !(a < b) {
            return argument(format!("empty interval [{a}, {b}]"));
        }
        let pieces = self.power_pieces();
        if !pieces.is_empty() && a <= 0.0 && b >= 0.0 {
            return argument("the interval contains the origin, where ν has infinite mass");
        }
        let (lo, hi) = if a > 0.0 { (a, b) } else { (-b, -a) };
        let mut s = 0.0;
        for (al, c, ang) in &pieces {
            // Power pieces are symmetric: each half-line carries half of the angular mass.
            let density = c * Self::angular_mass(ang, 1) / 2.0;
            let upper = if hi.is_finite() { hi.powf(-al) } else { 0.0 };
            s += density * (lo.powf(-al) - upper) / al;
        }
        for j in self.finite_parts() {
            s += match j {
                JumpMeasure::Atoms { points, weights } => {
                    points.iter().zip(weights).filter(|(p, _)| p[0] >= a && p[0] <= b).map(|(_, &w)| w).sum()
                }
                JumpMeasure::Gaussian { rate, mean, std } => {
                    rate * (normal_cdf((b - mean[0]) / std) - normal_cdf((a - mean[0]) / std))
                }
            };
        }
        Ok(s)
    }

    /// `∫_{‖y‖<r} ‖y‖² ν(dy)`.
    pub fn second_moment_below(&self, d: usize, r: f64) -> Result<f64> {
        let mut s: f64 = self
            .power_pieces()
            .iter()
            .map(|(a, c, ang)| c * Self::angular_mass(ang, d) * r.powf(2.0 - a) / (2.0 - a))
            .sum();
        for j in self.finite_parts() {
            s += j.second_moment_below(d, r)?;
        }
        Ok(s)
    }

    /// `∫ (1_{‖y‖<r} - 1_{‖y‖<1}) y ν(dy)`; power-law pieces are symmetric and contribute nothing.
    pub fn compensator(&self, d: usize, r: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; d];
        for j in self.finite_parts() {
            let a = j.first_moment_below(d, r, false)?;
            let b = j.first_moment_below(d, 1.0, false)?;
            for k in 0..d {
                out[k] += a[k] - b[k];
            }
        }
        Ok(out)
    }

    /// `∫_{‖y‖≤1} y ν(dy)`.
    pub fn small_jump_mean(&self, d: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; d];
        for j in self.finite_parts() {
            let a = j.first_moment_below(d, 1.0, true)?;
            for k in 0..d {
                out[k] += a[k];
            }
        }
        Ok(out)
    }

    /// Symmetric (real) part of the jump exponent contributed by the power-law pieces.
    fn power_exponent(&self, xi: &[f64]) -> f64 {
        let d = xi.len();
        self.power_pieces()
            .iter()
            .map(|(a, c, ang)| match ang {
                Angular::Uniform(k) => c * k / isotropic_levy_constant(d, *a) * norm(xi).powf(*a),
                Angular::Sphere(m) => c * one_minus_cos_moment(*a) * m.abs_moment(xi, *a),
                Angular::Axis(i) => c * 2.0 * one_minus_cos_moment(*a) * xi[*i].abs().powf(*a),
            })
            .sum()
    }

    /// `∫ (1 - e^{i⟨ξ,y⟩}) ν(dy)`, defined when the power-law pieces are symmetric
    /// (the imaginary part then only comes from finite pieces).
    fn one_minus_char(&self, xi: &[f64]) -> Complex64 {
        let mut s = Complex64::new(self.power_exponent(xi), 0.0);
        for j in self.finite_parts() {
            s += j.one_minus_char(xi);
        }
        s
    }

    /// `∫ f dν` for a function that is finite near the origin in a way that
    /// makes the integral converge. Power-law pieces are integrated radially
    /// on dyadic shells `2^{-k} ≤ r < 2^{-k+1}` (and outward), stopping once
    /// a shell contributes less than `1e-12` of the running total.
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, d: usize, f: F, tol: f64) -> Result<Integral> {
        let mut total = Integral { value: 0.0, error: 0.0 };
        for (a, c, ang) in self.power_pieces() {
            let radial = |dir: &[f64]| -> Result<Integral> {
                let mut x = vec![0.0; d];
                let g = |rho: f64| {
                    for (xi, t) in x.iter_mut().zip(dir) {
                        *xi = rho * t;
                    }
                    f(&x) * c * rho.powf(-1.0 - a)
                };
                dyadic_radial_integral(g, tol)
            };
            let piece = match ang {
                Angular::Uniform(k) => {
                    let mut failure = None;
                    let s = sphere_integral(
                        d,
                        |th| match radial(th) {
                            Ok(v) => v.value,
                            Err(e) => {
                                failure = Some(e);
                                0.0
                            }
                        },
                        tol,
                    )?;
                    if let Some(e) = failure {
                        return Err(e);
                    }
                    Integral { value: s.value * k, error: s.error * k }
                }
                Angular::Sphere(m) => {
                    let mut failure = None;
                    let s = m.integrate(
                        d,
                        |th| match radial(th) {
                            Ok(v) => v.value,
                            Err(e) => {
                                failure = Some(e);
                                0.0
                            }
                        },
                        tol,
                    )?;
                    if let Some(e) = failure {
                        return Err(e);
                    }
                    s
                }
                Angular::Axis(i) => {
                    let mut e = vec![0.0; d];
                    e[i] = 1.0;
                    let plus = radial(&e)?;
                    e[i] = -1.0;
                    plus + radial(&e)?
                }
            };
            total = total + piece;
        }
        for j in self.finite_parts() {
            total = total + j.integrate(d, &f, &[1.0], tol)?;
        }
        Ok(total)
    }
}

/// `∫_0^∞ g(r) dr` for integrands with power-law behaviour at `0` and `∞`,
/// summed over dyadic shells.
///
/// Once three consecutive shell ratios agree to `1e-6` the remaining shells
/// form a geometric series, which is summed in closed form. Besides saving
/// work this avoids the far shells near `0`, where integrands such as
/// `r(x) - r(0)` lose all their digits to cancellation.
pub fn dyadic_radial_integral<G: FnMut(f64) -> f64>(mut g: G, tol: f64) -> Result<Integral> {
    let mut total = Integral { value: 0.0, error: 0.0 };
    for dir in [-1i32, 1] {
        let mut quiet = 0;
        let mut shells: Vec<f64> = Vec::new();
        for k in 0..=1100 {
            let (lo, hi) = if dir < 0 {
                (2f64.powi(-k - 1), 2f64.powi(-k))
            } else {
                (2f64.powi(k), 2f64.powi(k + 1))
            };
            let quad = Adaptive::with_tol((tol * 1e-2 * total.value.abs()).max(1e-300), tol * 1e-2);
            let shell = quad.integrate_best(&mut g, &[lo, hi]);
            if !shell.value.is_finite() {
                return numeric("radial integrand produced a non-finite value");
            }
            // Shells far from the bulk only need accuracy relative to the running total;
            // the estimate itself bottoms out at rounding level near 1e-10 relative.
            let budget = (tol * 1e-2 * total.value.abs().max(shell.value.abs())).max(1e-9 * shell.value.abs());
            if shell.error > budget {
                return numeric(format!(
                    "adaptive quadrature did not converge on the shell [{lo:e}, {hi:e}]: value {:e}, error estimate {:e}",
                    shell.value, shell.error
                ));
            }
            total = total + shell;
            shells.push(shell.value);
            if let Some(q) = geometric_ratio(&shells) {
                let rest = shell.value * q / (1.0 - q);
                total.value += rest;
                total.error += 1e-6 * rest.abs();
                break;
            }
            if shell.value.abs() <= 1e-12 * total.value.abs() || (shell.value == 0.0 && k > 8) {
                quiet += 1;
            } else {
                quiet = 0;
            }
            if quiet >= 3 {
                break;
            }
            if k == 1100 {
                return numeric("radial Lévy integral does not converge over dyadic shells");
            }
        }
    }
    Ok(total)
}

/// Common ratio of the last four shells when they decay geometrically.
fn geometric_ratio(shells: &[f64]) -> Option<f64> {
    let n = shells.len();
    if n < 6 {
        return None;
    }
    let w = &shells[n - 4..];
    if w.contains(&0.0) {
        return None;
    }
    let q: Vec<f64> = w.windows(2).map(|p| p[1] / p[0]).collect();
    let stable = q.windows(2).all(|p| (p[1] - p[0]).abs() <= 1e-6 * p[1].abs());
    (stable && q[2] > 0.0 && q[2] < 0.999).then_some(q[2])
}

/// The characteristic triplet `(A, γ, ν)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Triplet {
    /// Row-major `d × d` matrix.
    pub a: Vec<f64>,
    pub gamma: Vec<f64>,
    pub nu: LevyMeasure,
}

/// Supported process families.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Brownian { lambda: f64 },
    IsotropicStable { alpha: f64, scale: f64 },
    SphericalStableLike { sphere: SphereMeasure, profile: RadialProfile },
    ProductOfStables { alphas: Vec<f64> },
    CompoundPoisson { jumps: JumpMeasure, gamma: Vec<f64> },
    FiniteVariation { nu: LevyMeasure, gamma: Vec<f64> },
    Superposition { parts: Vec<LevyModel> },
}

/// A Lévy process on `R^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct LevyModel {
    dim: usize,
    family: Family,
}

/// A homogeneous piece of a symmetric exponent: `ψ_j(sθ) = s^degree ψ_j(θ)`.
#[derive(Clone, Debug)]
pub(crate) struct HomogeneousPart {
    pub degree: f64,
    pub eval: HomEval,
}

#[derive(Clone, Debug)]
pub(crate) enum HomEval {
    Radial(f64),
    Sphere(f64, SphereMeasure),
    Axis(usize, f64),
}

impl HomogeneousPart {
    pub fn at(&self, x: &[f64]) -> f64 {
        match &self.eval {
            HomEval::Radial(c) => c * norm(x).powf(self.degree),
            HomEval::Sphere(c, m) => c * m.abs_moment(x, self.degree),
            HomEval::Axis(i, c) => c * x[*i].abs().powf(self.degree),
        }
    }
}

impl LevyModel {
    fn build(dim: usize, family: Family) -> Result<Self> {
        if dim == 0 {
            return argument("dimension must be positive");
        }
        let m = LevyModel { dim, family };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim;
        match &self.family {
            Family::Brownian { lambda } => check_positive(*lambda, "Brownian coefficient"),
            Family::IsotropicStable { alpha, scale } => {
                if !(*alpha > 0.0 && *alpha <= 2.0) {
                    return argument(format!("stability index must lie in (0, 2], got {alpha}"));
                }
                check_positive(*scale, "stable scale")
            }
            Family::SphericalStableLike { sphere, profile } => {
                sphere.validate(d)?;
                profile.validate()
            }
            Family::ProductOfStables { alphas } => {
                if alphas.len() != d {
                    return argument("product of stables: one index per coordinate");
                }
                alphas.iter().try_for_each(|&a| check_alpha(a, "product of stables"))
            }
            Family::CompoundPoisson { jumps, gamma } => {
                jumps.validate(d)?;
                if gamma.len() != d {
                    return argument("drift vector has wrong dimension");
                }
                Ok(())
            }
            Family::FiniteVariation { nu, gamma } => {
                nu.validate(d)?;
                if gamma.len() != d {
                    return argument("drift vector has wrong dimension");
                }
                if nu.small_jump_index() >= 1.0 {
                    return argument("finite variation requires ∫_{‖y‖≤1} ‖y‖ ν(dy) < ∞ (all indices below 1)");
                }
                Ok(())
            }
            Family::Superposition { parts } => {
                if parts.is_empty() {
                    return argument("superposition needs at least one part");
                }
                if parts.iter().any(|p| p.dim != d) {
                    return argument("superposition parts must share the dimension");
                }
                Ok(())
            }
        }
    }

    /// Brownian motion with `ψ(ξ) = λ‖ξ‖²`, i.e. `X_t ~ N(0, 2λt I)`.
    pub fn brownian(dim: usize, lambda: f64) -> Result<Self> {
        Self::build(dim, Family::Brownian { lambda })
    }

    /// Isotropic stable process with `ψ(ξ) = scale · ‖ξ‖^α`.
    pub fn isotropic_stable(dim: usize, alpha: f64, scale: f64) -> Result<Self> {
        Self::build(dim, Family::IsotropicStable { alpha, scale })
    }

    /// Isotropic stable process whose Lévy measure is `c ‖y‖^{-d-α} dy`.
    pub fn stable_from_levy_density(dim: usize, alpha: f64, c: f64) -> Result<Self> {
        check_alpha(alpha, "stable Lévy density")?;
        Self::isotropic_stable(dim, alpha, c / isotropic_levy_constant(dim, alpha))
    }

    pub fn spherical_stable_like(dim: usize, sphere: SphereMeasure, profile: RadialProfile) -> Result<Self> {
        Self::build(dim, Family::SphericalStableLike { sphere, profile })
    }

    /// Independent coordinates with `ψ(ξ) = Σ |ξ_k|^{α_k}`.
    pub fn product_of_stables(alphas: Vec<f64>) -> Result<Self> {
        Self::build(alphas.len(), Family::ProductOfStables { alphas })
    }

    pub fn compound_poisson(dim: usize, jumps: JumpMeasure, gamma: Vec<f64>) -> Result<Self> {
        Self::build(dim, Family::CompoundPoisson { jumps, gamma })
    }

    /// Compound Poisson process with `γ` chosen so that `γ₀ = 0` (no drift).
    pub fn compound_poisson_without_drift(dim: usize, jumps: JumpMeasure) -> Result<Self> {
        jumps.validate(dim)?;
        let gamma = jumps.first_moment_below(dim, 1.0, true)?;
        Self::compound_poisson(dim, jumps, gamma)
    }

    pub fn finite_variation(dim: usize, nu: LevyMeasure, gamma: Vec<f64>) -> Result<Self> {
        Self::build(dim, Family::FiniteVariation { nu, gamma })
    }

    /// Sum of independent processes.
    pub fn superposition(parts: Vec<LevyModel>) -> Result<Self> {
        let d = parts.first().map(|p| p.dim).unwrap_or(0);
        Self::build(d, Family::Superposition { parts })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn triplet(&self) -> Result<Triplet> {
        let d = self.dim;
        let zero_a = vec![0.0; d * d];
        Ok(match &self.family {
            Family::Brownian { lambda } => {
                let mut a = zero_a;
                for k in 0..d {
                    a[k * d + k] = *lambda;
                }
                Triplet { a, gamma: vec![0.0; d], nu: LevyMeasure::Zero }
            }
            Family::IsotropicStable { alpha, scale } => {
                if *alpha == 2.0 {
                    return LevyModel::brownian(d, *scale)?.triplet();
                }
                Triplet {
                    a: zero_a,
                    gamma: vec![0.0; d],
                    nu: LevyMeasure::RadialPowerLaw { alpha: *alpha, constant: scale * isotropic_levy_constant(d, *alpha) },
                }
            }
            Family::SphericalStableLike { sphere, profile } => Triplet {
                a: zero_a,
                gamma: vec![0.0; d],
                nu: LevyMeasure::Spherical { sphere: sphere.clone(), profile: profile.clone() },
            },
            Family::ProductOfStables { alphas } => Triplet {
                a: zero_a,
                gamma: vec![0.0; d],
                nu: LevyMeasure::AxesProduct {
                    alphas: alphas.clone(),
                    constants: alphas.iter().map(|&a| isotropic_levy_constant(1, a)).collect(),
                },
            },
            Family::CompoundPoisson { jumps, gamma } => {
                Triplet { a: zero_a, gamma: gamma.clone(), nu: LevyMeasure::Finite(jumps.clone()) }
            }
            Family::FiniteVariation { nu, gamma } => Triplet { a: zero_a, gamma: gamma.clone(), nu: nu.clone() },
            Family::Superposition { parts } => {
                let mut a = zero_a;
                let mut g = vec![0.0; d];
                let mut nus = Vec::new();
                for p in parts {
                    let t = p.triplet()?;
                    for (x, y) in a.iter_mut().zip(&t.a) {
                        *x += y;
                    }
                    for (x, y) in g.iter_mut().zip(&t.gamma) {
                        *x += y;
                    }
                    if t.nu != LevyMeasure::Zero {
                        nus.push(t.nu);
                    }
                }
                let nu = match nus.len() {
                    0 => LevyMeasure::Zero,
                    1 => nus.pop().expect("one element"),
                    _ => LevyMeasure::Sum(nus),
                };
                Triplet { a, gamma: g, nu }
            }
        })
    }

    /// `γ₀ = ∫_{‖y‖≤1} y ν(dy) - γ` for finite-variation models (`A = 0`,
    /// all small-jump indices below one); `None` otherwise.
    pub fn gamma0(&self) -> Result<Option<Vec<f64>>> {
        let t = self.triplet()?;
        if t.a.iter().any(|&v| v != 0.0) || t.nu.small_jump_index() >= 1.0 {
            return Ok(None);
        }
        let m = t.nu.small_jump_mean(self.dim)?;
        Ok(Some(m.iter().zip(&t.gamma).map(|(a, b)| a - b).collect()))
    }

    /// Whether `X` and `-X` have the same law.
    pub fn is_symmetric(&self) -> bool {
        match &self.family {
            Family::Brownian { .. }
            | Family::IsotropicStable { .. }
            | Family::SphericalStableLike { .. }
            | Family::ProductOfStables { .. } => true,
            Family::CompoundPoisson { jumps, .. } => {
                jumps.is_symmetric() && self.gamma0().ok().flatten().is_some_and(|g| g.iter().all(|v| v.abs() < 1e-14))
            }
            Family::FiniteVariation { nu, .. } => {
                nu.is_symmetric() && self.gamma0().ok().flatten().is_some_and(|g| g.iter().all(|v| v.abs() < 1e-14))
            }
            Family::Superposition { parts } => parts.iter().all(|p| p.is_symmetric()),
        }
    }

    /// Whether `ψ` depends on `‖ξ‖` only.
    pub fn is_isotropic(&self) -> bool {
        match &self.family {
            Family::Brownian { .. } | Family::IsotropicStable { .. } => true,
            Family::SphericalStableLike { sphere, .. } => sphere.is_uniform() || self.dim == 1,
            Family::ProductOfStables { .. } => self.dim == 1,
            Family::CompoundPoisson { .. } | Family::FiniteVariation { .. } => self.dim == 1 && self.is_symmetric(),
            Family::Superposition { parts } => parts.iter().all(|p| p.is_isotropic()),
        }
    }

    /// Whether `r ↦ ψ(rθ)` is non-decreasing for every direction; true for
    /// Gaussian and power-law exponents.
    pub(crate) fn radially_monotone(&self) -> bool {
        // Centred Gaussian jumps give rate·(1 - e^{-σ²|ξ|²/2}), which increases in |ξ|.
        let monotone_jumps = |j: &JumpMeasure| matches!(j, JumpMeasure::Gaussian { mean, .. } if mean.iter().all(|&m| m == 0.0));
        match &self.family {
            Family::CompoundPoisson { jumps, .. } => monotone_jumps(jumps),
            Family::FiniteVariation { nu, .. } => nu.finite_parts().into_iter().all(monotone_jumps),
            Family::Superposition { parts } => parts.iter().all(|p| p.radially_monotone()),
            _ => true,
        }
    }

    fn check_dim(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.dim {
            return argument(format!("expected a {}-dimensional argument, got {}", self.dim, xi.len()));
        }
        Ok(())
    }

    /// The characteristic exponent `ψ(ξ)`.
    pub fn psi(&self, xi: &[f64]) -> Result<Complex64> {
        self.check_dim(xi)?;
        Ok(self.psi_unchecked(xi))
    }

    pub(crate) fn psi_unchecked(&self, xi: &[f64]) -> Complex64 {
        match &self.family {
            Family::Brownian { lambda } => Complex64::new(lambda * dot(xi, xi), 0.0),
            Family::IsotropicStable { alpha, scale } => Complex64::new(scale * norm(xi).powf(*alpha), 0.0),
            Family::SphericalStableLike { sphere, profile } => Complex64::new(
                profile.terms.iter().map(|t| t.coef * one_minus_cos_moment(t.alpha) * sphere.abs_moment(xi, t.alpha)).sum(),
                0.0,
            ),
            Family::ProductOfStables { alphas } => {
                Complex64::new(xi.iter().zip(alphas).map(|(x, a)| x.abs().powf(*a)).sum(), 0.0)
            }
            Family::CompoundPoisson { jumps, .. } => {
                let g0 = self.gamma0().ok().flatten().unwrap_or_else(|| vec![0.0; self.dim]);
                let mut v = jumps.one_minus_char(xi) + Complex64::new(0.0, dot(xi, &g0));
                if jumps.is_symmetric() && g0.iter().all(|x| x.abs() < 1e-14) {
                    v.im = 0.0;
                }
                v
            }
            Family::FiniteVariation { nu, .. } => {
                let g0 = self.gamma0().ok().flatten().unwrap_or_else(|| vec![0.0; self.dim]);
                let mut v = nu.one_minus_char(xi) + Complex64::new(0.0, dot(xi, &g0));
                if nu.is_symmetric() && g0.iter().all(|x| x.abs() < 1e-14) {
                    v.im = 0.0;
                }
                v
            }
            Family::Superposition { parts } => parts.iter().map(|p| p.psi_unchecked(xi)).sum(),
        }
    }

    /// Real exponent of a symmetric model (no dimension check).
    pub(crate) fn psi_re(&self, xi: &[f64]) -> f64 {
        self.psi_unchecked(xi).re
    }

    fn require_symmetric(&self, op: &str) -> Result<()> {
        if !self.is_symmetric() {
            return unsupported(format!("{op} requires a symmetric model"));
        }
        Ok(())
    }

    /// `ψ*(u) = sup_{‖x‖≤u} ψ(x)`.
    pub fn psi_star(&self, u: f64) -> Result<f64> {
        self.require_symmetric("psi_star")?;
        if !(u > 0.0) {
            return argument("psi_star needs u > 0");
        }
        if self.is_isotropic() && self.radially_monotone() {
            let mut e = vec![0.0; self.dim];
            e[0] = u;
            return Ok(self.psi_re(&e));
        }
        ball_extremum(self, u, true)
    }

    /// `inf_{‖x‖=u} ψ(x)`: the smallest value of the exponent on the sphere of radius `u`.
    pub fn psi_sphere_min(&self, u: f64) -> Result<f64> {
        self.require_symmetric("psi_sphere_min")?;
        if self.is_isotropic() {
            let mut e = vec![0.0; self.dim];
            e[0] = u;
            return Ok(self.psi_re(&e));
        }
        ball_extremum(self, u, false)
    }

    /// Sampled diagnostic for the comparability condition `ψ ≍ ψ*` on
    /// `‖x‖ ≥ 1`: returns `(min, max)` of `ψ(x)/ψ*(‖x‖)` over a grid of radii
    /// in `[1, 10^4]` and directions.
    pub fn psi_ratio_diagnostic(&self) -> Result<(f64, f64)> {
        self.require_symmetric("psi_ratio_diagnostic")?;
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        let dirs = direction_grid(self.dim, 64);
        for k in 0..=16 {
            let rho = 10f64.powf(k as f64 / 4.0);
            let star = self.psi_star(rho)?;
            for th in &dirs {
                let x: Vec<f64> = th.iter().map(|v| v * rho).collect();
                let q = self.psi_re(&x) / star;
                lo = lo.min(q);
                hi = hi.max(q);
            }
        }
        Ok((lo, hi))
    }

    /// The Pruitt function `h(r)`.
    pub fn pruitt_h(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return argument("pruitt_h needs r > 0");
        }
        let d = self.dim;
        let t = self.triplet()?;
        let a_norm = operator_norm(&t.a, d);
        let comp = t.nu.compensator(d, r)?;
        let drift: Vec<f64> = t.gamma.iter().zip(&comp).map(|(g, c)| g + c).collect();
        let integral = t.nu.tail_mass(d, r)? + t.nu.second_moment_below(d, r)? / (r * r);
        let h = a_norm / (r * r) + norm(&drift) / r + integral;
        if !h.is_finite() {
            return numeric(format!("Pruitt function is not finite at r = {r}"));
        }
        Ok(h)
    }

    /// Decomposition of the exponent into homogeneous pieces; bounded pieces
    /// (compound Poisson parts) are dropped.
    pub(crate) fn homogeneous_parts(&self) -> Result<Vec<HomogeneousPart>> {
        self.require_symmetric("scaling limits")?;
        let d = self.dim;
        let from_nu = |nu: &LevyMeasure| -> Vec<HomogeneousPart> {
            nu.power_pieces()
                .into_iter()
                .map(|(a, c, ang)| match ang {
                    Angular::Uniform(k) => HomogeneousPart { degree: a, eval: HomEval::Radial(c * k / isotropic_levy_constant(d, a)) },
                    Angular::Sphere(m) => HomogeneousPart { degree: a, eval: HomEval::Sphere(c * one_minus_cos_moment(a), m.clone()) },
                    Angular::Axis(i) => HomogeneousPart { degree: a, eval: HomEval::Axis(i, 2.0 * c * one_minus_cos_moment(a)) },
                })
                .collect()
        };
        Ok(match &self.family {
            Family::Brownian { lambda } => vec![HomogeneousPart { degree: 2.0, eval: HomEval::Radial(*lambda) }],
            Family::IsotropicStable { alpha, scale } => {
                vec![HomogeneousPart { degree: *alpha, eval: HomEval::Radial(*scale) }]
            }
            Family::ProductOfStables { alphas } => alphas
                .iter()
                .enumerate()
                .map(|(i, &a)| HomogeneousPart { degree: a, eval: HomEval::Axis(i, 1.0) })
                .collect(),
            Family::SphericalStableLike { .. } | Family::FiniteVariation { .. } | Family::CompoundPoisson { .. } => {
                from_nu(&self.triplet()?.nu)
            }
            Family::Superposition { parts } => {
                let mut v = Vec::new();
                for p in parts {
                    v.extend(p.homogeneous_parts()?);
                }
                v
            }
        })
    }

    /// One-dimensional factor models when `ψ(ξ) = Σ_k ψ_k(ξ_k)`.
    pub fn separable_factors(&self) -> Option<Vec<LevyModel>> {
        match &self.family {
            Family::ProductOfStables { alphas } => {
                alphas.iter().map(|&a| LevyModel::isotropic_stable(1, a, 1.0).ok()).collect()
            }
            Family::Brownian { lambda } => (0..self.dim).map(|_| LevyModel::brownian(1, *lambda).ok()).collect(),
            Family::IsotropicStable { alpha, scale } if *alpha == 2.0 => {
                (0..self.dim).map(|_| LevyModel::brownian(1, *scale).ok()).collect()
            }
            _ if self.dim == 1 => Some(vec![self.clone()]),
            _ => None,
        }
    }

    /// Theorem-2 style scaling limit `ψ(sθ)/V(s) → Λ(θ)` with `V(s) = s^α`
    /// where `α` is the largest homogeneity degree.
    pub fn exponent_scaling_limit(&self) -> Result<ScalingLimit> {
        let parts = self.homogeneous_parts()?;
        if parts.is_empty() {
            return hypothesis("the exponent is bounded; no regularly varying scaling limit exists");
        }
        let top = parts.iter().map(|p| p.degree).fold(0.0, f64::max);
        let lead: Vec<HomogeneousPart> = parts.into_iter().filter(|p| p.degree == top).collect();
        let d = self.dim;
        let lambda = SphereFunction::from_parts(d, lead);
        let (lo, _) = lambda.range_on_grid(256);
        if !(lo > 1e-12) {
            return hypothesis(
                "the limit Λ vanishes somewhere on the sphere (coordinates with smaller indices); \
                 use the Lévy-measure scaling limit instead",
            );
        }
        Ok(ScalingLimit {
            alpha: top,
            v: Arc::new(PowerLaw { coef: 1.0, index: top }),
            limit: LimitObject::Lambda(lambda),
        })
    }

    /// Theorem-3 style scaling limit `ν(s^{-1}·)/V(s) → η` with
    /// `V(s) = ν(B^c_{1/s})`, for power-law Lévy measures.
    pub fn measure_scaling_limit(&self) -> Result<ScalingLimit> {
        self.require_symmetric("scaling limits")?;
        let d = self.dim;
        let t = self.triplet()?;
        if t.a.iter().any(|&v| v != 0.0) {
            return unsupported("processes with a Gaussian part have no Lévy-measure scaling limit here");
        }
        let pieces = t.nu.power_pieces();
        if pieces.is_empty() {
            return hypothesis("finite Lévy measure: ν(B^c_{1/s}) stays bounded");
        }
        let rho = pieces.iter().map(|p| p.0).fold(0.0, f64::max);
        let total_top: f64 = pieces
            .iter()
            .filter(|p| p.0 == rho)
            .map(|(a, c, ang)| c * LevyMeasure::angular_mass(ang, d) / a)
            .sum();
        let mut axes = Vec::new();
        let mut sphere: Option<SphereMeasure> = None;
        for (a, c, ang) in pieces.iter().filter(|p| p.0 == rho) {
            let _ = a;
            match ang {
                Angular::Axis(i) => axes.push((*i, c / total_top)),
                Angular::Uniform(k) => {
                    let add = c * k * sphere_area(d) / total_top;
                    sphere = Some(match sphere.take() {
                        None => SphereMeasure::Uniform { total_mass: add },
                        Some(SphereMeasure::Uniform { total_mass }) => SphereMeasure::Uniform { total_mass: total_mass + add },
                        Some(_) => return unsupported("mixed uniform and atomic angular parts in the limit measure"),
                    })
                }
                Angular::Sphere(m) => {
                    if sphere.is_some() {
                        return unsupported("several angular measures in the limit measure");
                    }
                    sphere = Some(m.scaled(c / total_top));
                }
            }
        }
        let eta = match (axes.is_empty(), sphere) {
            (false, None) => EtaMeasure::Axes { dim: d, rho, weights: axes },
            (true, Some(m)) => EtaMeasure::Spherical { dim: d, rho, sphere: m },
            _ => return unsupported("limit measure mixes axis and spherical parts"),
        };
        let nu = t.nu.clone();
        let v = FnScalar(move |s: f64| nu.tail_mass(d, 1.0 / s).unwrap_or(f64::NAN));
        Ok(ScalingLimit { alpha: rho, v: Arc::new(v), limit: LimitObject::Eta(eta) })
    }
}

fn operator_norm(a: &[f64], d: usize) -> f64 {
    // A is symmetric non-negative definite; power iteration gives the top eigenvalue.
    if a.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    let mut lam = 0.0;
    for _ in 0..200 {
        let w: Vec<f64> = (0..d).map(|i| (0..d).map(|j| a[i * d + j] * v[j]).sum()).collect();
        let n = norm(&w);
        if n == 0.0 {
            return 0.0;
        }
        lam = n;
        v = w.into_iter().map(|x| x / n).collect();
    }
    lam
}

/// Unit directions covering a half-sphere (enough for even functions).
pub(crate) fn direction_grid(d: usize, n: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0]],
        2 => (0..n).map(|k| {
            let p = PI * k as f64 / n as f64;
            vec![p.cos(), p.sin()]
        }).collect(),
        _ => {
            let mut out = Vec::new();
            let nz = n / 2 + 1;
            for i in 0..nz {
                let z = i as f64 / (nz - 1).max(1) as f64;
                let s = (1.0 - z * z).sqrt();
                let nphi = ((2 * n) as f64 * s).ceil().max(1.0) as usize;
                for k in 0..nphi {
                    let p = 2.0 * PI * k as f64 / nphi as f64;
                    out.push(vec![s * p.cos(), s * p.sin(), z]);
                }
            }
            out
        }
    }
}

/// Polar coordinates of the half-space parametrisation used by the grid search.
fn point_from(d: usize, rho: f64, angles: &[f64]) -> Vec<f64> {
    match d {
        1 => vec![rho],
        2 => vec![rho * angles[0].cos(), rho * angles[0].sin()],
        _ => {
            let (z, p) = (angles[0].cos(), angles[1]);
            let s = (1.0 - z * z).max(0.0).sqrt();
            vec![rho * s * p.cos(), rho * s * p.sin(), rho * z]
        }
    }
}

/// Maximise (or minimise on the sphere) an even exponent over the ball of
/// radius `u`: a grid search refined dyadically, each level polished by a
/// coordinate-wise golden-section search, until two successive levels agree
/// to a relative tolerance of `1e-6`.
fn ball_extremum(model: &LevyModel, u: f64, maximise_over_ball: bool) -> Result<f64> {
    let d = model.dim;
    if d > 3 {
        return unsupported("ψ* search beyond three dimensions");
    }
    let sign = if maximise_over_ball { 1.0 } else { -1.0 };
    let f = |rho: f64, ang: &[f64]| sign * model.psi_re(&point_from(d, rho, ang));
    let n_ang = d - 1;
    let ang_range: Vec<(f64, f64)> = match d {
        1 => vec![],
        2 => vec![(0.0, PI)],
        _ => vec![(0.0, PI / 2.0), (0.0, 2.0 * PI)],
    };
    let mut prev: Option<f64> = None;
    let mut nr = if maximise_over_ball { 16 } else { 1 };
    let mut na = 32;
    for _level in 0..12 {
        // grid search
        let mut best = (f64::NEG_INFINITY, 0.0, vec![0.0; n_ang]);
        let radii: Vec<f64> = if maximise_over_ball {
            (1..=nr).map(|j| u * j as f64 / nr as f64).collect()
        } else {
            vec![u]
        };
        let ang_nodes: Vec<Vec<f64>> = match n_ang {
            0 => vec![vec![]],
            1 => (0..=na).map(|k| vec![ang_range[0].0 + (ang_range[0].1 - ang_range[0].0) * k as f64 / na as f64]).collect(),
            _ => {
                let mut v = Vec::new();
                for i in 0..=na / 2 {
                    for k in 0..=na {
                        v.push(vec![
                            ang_range[0].1 * i as f64 / (na / 2) as f64,
                            ang_range[1].1 * k as f64 / na as f64,
                        ]);
                    }
                }
                v
            }
        };
        for &rho in &radii {
            for a in &ang_nodes {
                let v = f(rho, a);
                if v > best.0 {
                    best = (v, rho, a.clone());
                }
            }
        }
        // polish
        let (mut val, mut rho, mut ang) = best;
        let dr = u / nr as f64;
        let steps: Vec<f64> = (0..n_ang).map(|i| (ang_range[i].1 - ang_range[i].0) / na as f64).collect();
        for _ in 0..4 {
            if maximise_over_ball {
                let (lo, hi) = ((rho - dr).max(0.0), (rho + dr).min(u));
                let a2 = ang.clone();
                let (r, v) = golden_max(|x| f(x, &a2), lo, hi);
                if v > val {
                    rho = r;
                    val = v;
                }
            }
            for i in 0..n_ang {
                let (lo, hi) = (ang[i] - steps[i], ang[i] + steps[i]);
                let mut a2 = ang.clone();
                let (x, v) = golden_max(
                    |x| {
                        a2[i] = x;
                        f(rho, &a2)
                    },
                    lo,
                    hi,
                );
                if v > val {
                    ang[i] = x;
                    val = v;
                }
            }
        }
        let value = sign * val;
        if let Some(p) = prev {
            if (value - p).abs() <= 1e-6 * value.abs().max(1e-300) {
                return Ok(if maximise_over_ball { value.max(p) } else { value.min(p) });
            }
        }
        prev = Some(value);
        if maximise_over_ball {
            nr *= 2;
        }
        na *= 2;
    }
    numeric("ψ* grid refinement did not stabilise")
}

fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..60 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        if (b - a).abs() < 1e-14 * (1.0 + a.abs()) {
            break;
        }
    }
    let (fa, fb) = (f(a), f(b));
    [(c, fc), (d, fd), (a, fa), (b, fb)]
        .into_iter()
        .fold((c, f64::NEG_INFINITY), |acc, p| if p.1 > acc.1 { p } else { acc })
}

/// A scalar function of one positive variable.
pub trait ScalarFunction: Send + Sync {
    fn eval(&self, x: f64) -> f64;
    /// `Some((c, a))` when the function is exactly `c x^a`.
    fn power_form(&self) -> Option<(f64, f64)> {
        None
    }
}

/// `coef · x^index`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerLaw {
    pub coef: f64,
    pub index: f64,
}

impl ScalarFunction for PowerLaw {
    fn eval(&self, x: f64) -> f64 {
        self.coef * x.powf(self.index)
    }
    fn power_form(&self) -> Option<(f64, f64)> {
        Some((self.coef, self.index))
    }
}

/// Wraps a closure as a [`ScalarFunction`].
pub struct FnScalar<F>(pub F);

impl<F: Fn(f64) -> f64 + Send + Sync> ScalarFunction for FnScalar<F> {
    fn eval(&self, x: f64) -> f64 {
        (self.0)(x)
    }
}

/// Tolerances for [`generalized_inverse`].
#[derive(Clone, Copy, Debug)]
pub struct InverseOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Bracketing stops after this many doublings (or halvings).
    pub max_doublings: u32,
}

impl Default for InverseOptions {
    fn default() -> Self {
        InverseOptions { abs_tol: 1e-300, rel_tol: 4e-16, max_doublings: 1000 }
    }
}

/// `V⁻(u) = inf{x ≥ 0 : V(x) ≥ u}`.
pub fn generalized_inverse(v: &dyn ScalarFunction, u: f64, opts: &InverseOptions) -> Result<f64> {
    if u.is_nan() {
        return argument("generalized inverse of NaN");
    }
    if let Some((c, a)) = v.power_form() {
        if c > 0.0 && a > 0.0 {
            return Ok(if u <= 0.0 { 0.0 } else { (u / c).powf(1.0 / a) });
        }
    }
    if v.eval(0.0) >= u {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    let mut n = 0;
    while !(v.eval(hi) >= u) {
        hi *= 2.0;
        n += 1;
        if n > opts.max_doublings || !hi.is_finite() {
            return Err(Error::Range(format!("V stays below {u} on the search range up to {hi:e}")));
        }
    }
    let mut lo = hi / 2.0;
    n = 0;
    while v.eval(lo) >= u {
        if lo < f64::MIN_POSITIVE * 4.0 || n > opts.max_doublings {
            return Ok(0.0);
        }
        hi = lo;
        lo /= 2.0;
        n += 1;
    }
    // invariant: V(lo) < u <= V(hi)
    for _ in 0..2000 {
        if hi - lo <= opts.abs_tol.max(opts.rel_tol * hi) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if v.eval(mid) >= u {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Least-squares slope of `log V` against `log x` on a geometric grid of
/// `n` points spanning `[lo, hi]`.
pub fn estimate_rv_index(v: &dyn ScalarFunction, lo: f64, hi: f64, n: usize) -> Result<f64> {
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return argument("probe range must satisfy 0 < lo < hi with at least two points");
    }
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for k in 0..n {
        let x = lo * (hi / lo).powf(k as f64 / (n - 1) as f64);
        let y = v.eval(x);
        if !(y > 0.0) || !y.is_finite() {
            return numeric(format!("V({x:e}) = {y:e} is not positive"));
        }
        xs.push(x.ln());
        ys.push(y.ln());
    }
    Ok(least_squares_slope(&xs, &ys))
}

pub(crate) fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// A continuous function on the unit sphere of `R^d`, built from
/// homogeneous exponent pieces.
#[derive(Clone, Debug)]
pub struct SphereFunction {
    dim: usize,
    parts: Vec<HomogeneousPart>,
}

impl SphereFunction {
    pub(crate) fn from_parts(dim: usize, parts: Vec<HomogeneousPart>) -> Self {
        SphereFunction { dim, parts }
    }

    /// The constant function `c`.
    pub fn constant(dim: usize, c: f64, degree: f64) -> Self {
        SphereFunction { dim, parts: vec![HomogeneousPart { degree, eval: HomEval::Radial(c) }] }
    }

    /// `Σ_k |θ_k|^α`, the limit of a product of equal-index stables.
    pub fn coordinate_powers(dim: usize, alpha: f64) -> Self {
        SphereFunction {
            dim,
            parts: (0..dim).map(|i| HomogeneousPart { degree: alpha, eval: HomEval::Axis(i, 1.0) }).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Homogeneous extension of degree `α` evaluated at an arbitrary point.
    pub fn extended(&self, x: &[f64]) -> f64 {
        self.parts.iter().map(|p| p.at(x)).sum()
    }

    pub fn at(&self, theta: &[f64]) -> f64 {
        self.extended(theta)
    }

    pub fn degree(&self) -> Option<f64> {
        self.parts.first().map(|p| p.degree)
    }

    /// Constant value when the function is rotation invariant.
    pub fn constant_value(&self) -> Option<f64> {
        let mut c = 0.0;
        for p in &self.parts {
            match &p.eval {
                HomEval::Radial(k) => c += k,
                HomEval::Sphere(k, SphereMeasure::Uniform { total_mass }) => {
                    c += k * total_mass / sphere_area(self.dim) * sphere_abs_moment(self.dim, p.degree)
                }
                _ if self.dim == 1 => {}
                _ => return None,
            }
        }
        if self.dim == 1 {
            return Some(self.at(&[1.0]));
        }
        Some(c)
    }

    /// Separable representation `Λ(ξ) = Σ_k c_k |ξ_k|^α` if available.
    pub fn axis_coefficients(&self) -> Option<Vec<f64>> {
        let mut c = vec![0.0; self.dim];
        for p in &self.parts {
            match &p.eval {
                HomEval::Axis(i, k) => c[*i] += k,
                _ if self.dim == 1 => c[0] += p.at(&[1.0]),
                _ => return None,
            }
        }
        Some(c)
    }

    /// `(min, max)` over a direction grid.
    pub fn range_on_grid(&self, n: usize) -> (f64, f64) {
        direction_grid(self.dim, n)
            .iter()
            .map(|t| self.at(t))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }

    pub fn scaled(&self, c: f64) -> Self {
        let parts = self
            .parts
            .iter()
            .map(|p| HomogeneousPart {
                degree: p.degree,
                eval: match &p.eval {
                    HomEval::Radial(k) => HomEval::Radial(k * c),
                    HomEval::Sphere(k, m) => HomEval::Sphere(k * c, m.clone()),
                    HomEval::Axis(i, k) => HomEval::Axis(*i, k * c),
                },
            })
            .collect();
        SphereFunction { dim: self.dim, parts }
    }
}

/// Limit Lévy measures of Theorem-3 type (α-stable, normalised by `η(B_1^c) = 1`).
#[derive(Clone, Debug, PartialEq)]
pub enum EtaMeasure {
    /// `Σ w_k |y|^{-1-ρ} dy` on coordinate axes `k`.
    Axes { dim: usize, rho: f64, weights: Vec<(usize, f64)> },
    /// `m(dθ) r^{-1-ρ} dr`.
    Spherical { dim: usize, rho: f64, sphere: SphereMeasure },
}

impl EtaMeasure {
    pub fn rho(&self) -> f64 {
        match self {
            EtaMeasure::Axes { rho, .. } | EtaMeasure::Spherical { rho, .. } => *rho,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            EtaMeasure::Axes { dim, .. } | EtaMeasure::Spherical { dim, .. } => *dim,
        }
    }

    /// `η(B_1^c)`.
    pub fn outer_mass(&self) -> f64 {
        match self {
            EtaMeasure::Axes { rho, weights, .. } => weights.iter().map(|(_, w)| 2.0 * w / rho).sum(),
            EtaMeasure::Spherical { dim, rho, sphere } => sphere.total_mass(*dim) / rho,
        }
    }

    /// The exponent `∫ (1 - cos⟨ξ,y⟩) η(dy)` as a homogeneous sphere function.
    pub fn exponent(&self) -> SphereFunction {
        let k = |r: f64| one_minus_cos_moment(r);
        match self {
            EtaMeasure::Axes { dim, rho, weights } => SphereFunction {
                dim: *dim,
                parts: weights
                    .iter()
                    .map(|&(i, w)| HomogeneousPart { degree: *rho, eval: HomEval::Axis(i, 2.0 * w * k(*rho)) })
                    .collect(),
            },
            EtaMeasure::Spherical { dim, rho, sphere } => SphereFunction {
                dim: *dim,
                parts: vec![HomogeneousPart { degree: *rho, eval: HomEval::Sphere(k(*rho), sphere.clone()) }],
            },
        }
    }

    /// The measure multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            EtaMeasure::Axes { dim, rho, weights } => {
                EtaMeasure::Axes { dim: *dim, rho: *rho, weights: weights.iter().map(|&(i, w)| (i, w * c)).collect() }
            }
            EtaMeasure::Spherical { dim, rho, sphere } => {
                EtaMeasure::Spherical { dim: *dim, rho: *rho, sphere: sphere.scaled(c) }
            }
        }
    }

    /// The single support axis when `η` lives on one coordinate axis.
    pub fn support_axis(&self) -> Option<usize> {
        match self {
            EtaMeasure::Axes { weights, .. } if weights.len() == 1 => Some(weights[0].0),
            _ => None,
        }
    }
}

/// Either a Theorem-2 angular limit or a Theorem-3 limit measure.
#[derive(Clone, Debug)]
pub enum LimitObject {
    Lambda(SphereFunction),
    Eta(EtaMeasure),
}

/// A regularly varying scale `V` with index `α` and the associated limit.
#[derive(Clone)]
pub struct ScalingLimit {
    pub alpha: f64,
    pub v: Arc<dyn ScalarFunction>,
    pub limit: LimitObject,
}

impl std::fmt::Debug for ScalingLimit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalingLimit").field("alpha", &self.alpha).field("limit", &self.limit).finish()
    }
}

impl ScalingLimit {
    /// Checks `α ∈ (β, 2]` for a scenario using index `β`.
    pub fn admits_beta(&self, beta: f64) -> Result<()> {
        if !(self.alpha > beta && self.alpha <= 2.0) {
            return hypothesis(format!("the scaling index α = {} must exceed β = {beta}", self.alpha));
        }
        Ok(())
    }
}

/// `E|X|^s` for the one-dimensional law with exponent `|ξ|^a`.
pub fn stable_abs_moment(a: f64, s: f64) -> f64 {
    2f64.powf(s) * gamma((1.0 + s) / 2.0) * gamma(1.0 - s / a) / (PI.sqrt() * gamma(1.0 - s / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_examples() {
        let m = LevyModel::isotropic_stable(3, 2.0, 1.0).unwrap();
        let v = m.psi(&[1.0, 2.0, 2.0]).unwrap();
        assert!((v.re - 9.0).abs() < 1e-12 && v.im == 0.0);
        let cp = LevyModel::compound_poisson_without_drift(
            1,
            JumpMeasure::Atoms { points: vec![vec![1.0]], weights: vec![1.0] },
        )
        .unwrap();
        let v = cp.psi(&[PI]).unwrap();
        assert!((v.re - 2.0).abs() < 1e-12);
        assert!(v.im.abs() < 1e-12);
        assert!(m.psi(&[1.0]).is_err());
    }

    #[test]
    fn radial_power_law_exponent_is_consistent_in_every_dimension() {
        for d in 1..=3 {
            let m = LevyModel::stable_from_levy_density(d, 1.3, 1.0).unwrap();
            let nu = LevyMeasure::RadialPowerLaw { alpha: 1.3, constant: 1.0 };
            let sph = LevyMeasure::Spherical {
                sphere: SphereMeasure::Uniform { total_mass: sphere_area(d) },
                profile: RadialProfile::power(1.3),
            };
            let mut xi = vec![0.0; d];
            xi[0] = 0.7;
            let a = m.psi(&xi).unwrap().re;
            assert!((a - nu.power_exponent(&xi)).abs() < 1e-12);
            assert!((a - sph.power_exponent(&xi)).abs() < 1e-12);
        }
    }

    #[test]
    fn psi_star_of_product_of_stables() {
        let m = LevyModel::product_of_stables(vec![0.7, 1.5]).unwrap();
        let v = m.psi_star(1.0).unwrap();
        let mut best: f64 = 0.0;
        for k in 0..100_000 {
            let p = 2.0 * PI * k as f64 / 100_000.0;
            best = best.max(p.cos().abs().powf(0.7) + p.sin().abs().powf(1.5));
        }
        assert!((v - best).abs() < 1e-6 * best, "{v} vs {best}");
    }

    #[test]
    fn pruitt_examples() {
        let b = LevyModel::brownian(1, 1.0).unwrap();
        assert!((b.pruitt_h(2.0).unwrap() - 0.25).abs() < 1e-14);
        let s = LevyModel::stable_from_levy_density(1, 1.5, 1.0).unwrap();
        assert!((s.pruitt_h(1.0).unwrap() - 16.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_examples() {
        let o = InverseOptions::default();
        let sq = FnScalar(|x: f64| x * x);
        assert!((generalized_inverse(&sq, 4.0, &o).unwrap() - 2.0).abs() < 1e-14);
        let p = PowerLaw { coef: 1.0, index: 1.5 };
        assert!((generalized_inverse(&p, 1e3, &o).unwrap() - 100.0).abs() < 1e-10);
        let tail = FnScalar(|x: f64| 2.0 / 1.5 * x.powf(1.5));
        let v = generalized_inverse(&tail, 3.0, &o).unwrap();
        assert!((v - 2.25f64.powf(2.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn inverse_of_flat_stretch_is_left_endpoint() {
        let v = FnScalar(|x: f64| if x < 1.0 { x } else if x < 3.0 { 1.0 } else { x - 2.0 });
        let o = InverseOptions::default();
        assert!((generalized_inverse(&v, 1.0, &o).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn index_examples() {
        let p = PowerLaw { coef: 2.0, index: 1.5 };
        assert!((estimate_rv_index(&p, 1.0, 100.0, 20).unwrap() - 1.5).abs() < 1e-6);
        let lg = FnScalar(|x: f64| x * x * (1.0 + x).ln());
        assert!((estimate_rv_index(&lg, 1e3, 1e6, 30).unwrap() - 2.0).abs() < 0.1);
        let c = FnScalar(|_| 3.0);
        assert!(estimate_rv_index(&c, 1.0, 10.0, 5).unwrap().abs() < 1e-12);
    }

    #[test]
    fn levy_integral_of_triangle_deficit() {
        let nu = LevyMeasure::RadialPowerLaw { alpha: 0.5, constant: 1.0 };
        let v = nu.integrate(1, |x| -(x[0].abs().min(1.0)), 1e-10).unwrap();
        assert!((v.value + 8.0).abs() < 1e-7, "{v:?}");
    }
}
