//! Closed forms and elementary quadrature.

use std::f64::consts::PI;

use libm::{erf, erfc, exp, tgamma};

/// `E|S|^p` for a symmetric stable `S` with `E e^{iξS} = e^{-|ξ|^α}`:
/// `2^p Γ((1+p)/2) Γ(1-p/α) / (√π Γ(1-p/2))`.
pub fn stable_abs_moment(alpha: f64, p: f64) -> f64 {
    2f64.powf(p) * tgamma((1.0 + p) / 2.0) * tgamma(1.0 - p / alpha) / (PI.sqrt() * tgamma(1.0 - p / 2.0))
}

/// Scaled deficit limit of the unit interval under `ψ = |ξ|^α`: `-E|S|`.
pub fn interval_stable_limit(alpha: f64) -> f64 {
    -stable_abs_moment(alpha, 1.0)
}

pub fn std_normal_pdf(x: f64) -> f64 {
    exp(-0.5 * x * x) / (2.0 * PI).sqrt()
}

pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / 2f64.sqrt()))
}

/// `H(t) - 1` for the unit interval and `X_t ~ N(0, 2λt)`:
/// `-E min(|X_t|, 1)` in closed form.
pub fn gaussian_interval_deficit(lambda: f64, t: f64) -> f64 {
    let s = (2.0 * lambda * t).sqrt();
    let inner = 2.0 * s * (std_normal_pdf(0.0) - std_normal_pdf(1.0 / s));
    let outer = erfc(1.0 / (s * 2f64.sqrt()));
    -(inner + outer)
}

/// `∫_Ω (r(x) - r(0)) |x|^{-1-α} dx` for the unit interval, where
/// `r(x) = (1 - |x|)^+`: `-2/(1-α) - 2/α` for `0 < α < 1`.
pub fn interval_power_levy_integral(alpha: f64) -> f64 {
    -2.0 / (1.0 - alpha) - 2.0 / alpha
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// `∫_{[a,b]} ν(y - [c0, c1]) dy` for `ν = rate · N(mean, std²)`, by nested
/// Simpson quadrature: the inner rule integrates the jump density over
/// `[y - c1, y - c0]`, the outer rule integrates over `y`.
pub fn gaussian_jumps_between_intervals(rate: f64, mean: f64, std: f64, (a, b): (f64, f64), (c0, c1): (f64, f64)) -> f64 {
    let dens = |z: f64| rate * std_normal_pdf((z - mean) / std) / std;
    let inner = |y: f64| simpson(dens, y - c1, y - c0, 400);
    simpson(inner, a, b, 400)
}

/// Gaussian density of variance `2t` (the law of Brownian motion with `ψ = |ξ|²`).
pub fn gaussian_density(t: f64, x: f64) -> f64 {
    exp(-x * x / (4.0 * t)) / (4.0 * PI * t).sqrt()
}

/// Cauchy density of `ψ = |ξ|` at time `t`.
pub fn cauchy_density(t: f64, x: f64) -> f64 {
    t / (PI * (t * t + x * x))
}

/// Kolmogorov–Smirnov distance between the empirical law of `samples` and
/// a continuous distribution function `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cauchy_has_no_first_moment_but_gaussian_does() {
        assert!((stable_abs_moment(2.0, 1.0) - 2.0 / PI.sqrt()).abs() < 1e-14);
        assert!(stable_abs_moment(1.0, 0.5).is_finite());
    }

    #[test]
    fn gaussian_deficit_small_time() {
        let t = 1e-8;
        assert!((gaussian_interval_deficit(1.0, t) / t.sqrt() + 2.0 / PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn nested_rule_matches_distribution_function_form() {
        let (rate, m, sd) = (2.0, 2.0, 0.5);
        let v = gaussian_jumps_between_intervals(rate, m, sd, (2.0, 3.0), (0.0, 1.0));
        let w = simpson(
            |y| rate * (std_normal_cdf((y - m) / sd) - std_normal_cdf((y - 1.0 - m) / sd)),
            2.0,
            3.0,
            4000,
        );
        assert!((v - w).abs() < 1e-10, "{v} {w}");
    }
}
