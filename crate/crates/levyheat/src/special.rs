//! Special-function helpers shared by the numerical modules.

use std::f64::consts::{PI, SQRT_2};

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `K(a) = ∫_0^∞ (1 - cos u) u^{-1-a} du` for `0 < a < 2`.
///
/// A one-dimensional Lévy density `c |y|^{-1-a}` therefore produces the
/// exponent `2 c K(a) |ξ|^a`.
pub fn one_minus_cos_moment(a: f64) -> f64 {
    PI / (2.0 * gamma(1.0 + a) * (PI * a / 2.0).sin())
}

/// The constant `c_{d,a}` for which `c_{d,a} ‖y‖^{-d-a} dy` is the Lévy
/// measure of the exponent `‖ξ‖^a` in `R^d`.
pub fn isotropic_levy_constant(d: usize, a: f64) -> f64 {
    let d = d as f64;
    a * 2f64.powf(a - 1.0) * gamma((d + a) / 2.0) / (PI.powf(d / 2.0) * gamma(1.0 - a / 2.0))
}

/// `∫_{S^{d-1}} |θ_1|^a σ(dθ)`.
pub fn sphere_abs_moment(d: usize, a: f64) -> f64 {
    let d = d as f64;
    2.0 * PI.powf((d - 1.0) / 2.0) * gamma((a + 1.0) / 2.0) / gamma((d + a) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levy_constant_matches_one_dimensional_moment() {
        for &a in &[0.3, 0.8, 1.0, 1.5, 1.9] {
            let c = isotropic_levy_constant(1, a);
            assert!((2.0 * c * one_minus_cos_moment(a) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cauchy_constant() {
        assert!((isotropic_levy_constant(1, 1.0) - 1.0 / PI).abs() < 1e-14);
    }

    #[test]
    fn polar_form_agrees_with_cartesian_constant() {
        // c_{d,a} σ-integral of K(a)|θ_1|^a over the sphere equals one.
        for d in 1..=3 {
            for &a in &[0.5, 1.2, 1.7] {
                let v = isotropic_levy_constant(d, a) * one_minus_cos_moment(a) * sphere_abs_moment(d, a);
                assert!((v - 1.0).abs() < 1e-12, "d={d} a={a} v={v}");
            }
        }
    }
}
