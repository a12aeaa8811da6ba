//! Gauss-Legendre based quadrature: fixed panels, adaptive bisection and
//! integrals over the unit sphere.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{numeric, Result};

fn rule(n: usize) -> &'static [(f64, f64)] {
    static R10: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    static R20: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    let cell = match n {
        10 => &R10,
        20 => &R20,
        _ => unreachable!("only 10 and 20 point rules are cached"),
    };
    cell.get_or_init(|| {
        GaussLegendre::new(n)
            .expect("degree is at least 2")
            .as_node_weight_pairs()
            .to_vec()
    })
}

/// Fixed 20-point Gauss-Legendre rule on `[a, b]`.
pub fn gauss_panel<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    rule(20).iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

fn panel10<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    rule(10).iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

/// Result of a quadrature together with its estimated absolute error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

impl std::ops::Add for Integral {
    type Output = Integral;
    fn add(self, o: Integral) -> Integral {
        Integral { value: self.value + o.value, error: self.error + o.error }
    }
}

/// Adaptive bisection driven by the difference between a 10-point rule on a
/// segment and on its two halves.
#[derive(Clone, Copy, Debug)]
pub struct Adaptive {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_segments: usize,
}

impl Default for Adaptive {
    fn default() -> Self {
        Adaptive { abs_tol: 1e-15, rel_tol: 1e-11, max_segments: 4000 }
    }
}

struct Segment {
    a: f64,
    b: f64,
    left: f64,
    right: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Segment {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

impl Adaptive {
    pub fn with_tol(abs_tol: f64, rel_tol: f64) -> Self {
        Adaptive { abs_tol, rel_tol, ..Default::default() }
    }

    fn segment<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, whole: f64) -> Segment {
        let m = 0.5 * (a + b);
        let left = panel10(f, a, m);
        let right = panel10(f, m, b);
        let err = (whole - left - right).abs();
        Segment { a, b, left, right, err }
    }

    /// Integrate `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<Integral> {
        self.integrate_breaks(f, &[a, b])
    }

    /// Integrate over the union of consecutive intervals given by `breaks`,
    /// which should contain every known kink of the integrand.
    pub fn integrate_breaks<F: FnMut(f64) -> f64>(&self, f: F, breaks: &[f64]) -> Result<Integral> {
        let (est, converged) = self.run(f, breaks);
        if !est.value.is_finite() {
            return numeric("integrand produced a non-finite value");
        }
        if !converged {
            return numeric(format!(
                "adaptive quadrature did not converge: value {:e}, error estimate {:e}",
                est.value, est.error
            ));
        }
        Ok(est)
    }

    /// Same as [`Adaptive::integrate_breaks`] but returns the best estimate
    /// (with its error) even when the tolerance is not met.
    pub fn integrate_best<F: FnMut(f64) -> f64>(&self, f: F, breaks: &[f64]) -> Integral {
        self.run(f, breaks).0
    }

    fn run<F: FnMut(f64) -> f64>(&self, mut f: F, breaks: &[f64]) -> (Integral, bool) {
        let mut heap = BinaryHeap::new();
        for w in breaks.windows(2) {
            if w[1] > w[0] {
                let whole = panel10(&mut f, w[0], w[1]);
                heap.push(Self::segment(&mut f, w[0], w[1], whole));
            }
        }
        loop {
            let (value, error) = heap
                .iter()
                .fold((0.0, 0.0), |(v, e), s: &Segment| (v + s.left + s.right, e + s.err));
            let est = Integral { value, error };
            if !value.is_finite() {
                return (est, false);
            }
            if error <= self.abs_tol.max(self.rel_tol * value.abs()) {
                return (est, true);
            }
            if heap.len() >= self.max_segments {
                return (est, false);
            }
            let worst = heap.pop().expect("heap is non-empty");
            let m = 0.5 * (worst.a + worst.b);
            if m <= worst.a || m >= worst.b {
                // The worst segment cannot be split further in floating point.
                return (est, error <= 1e3 * self.abs_tol.max(self.rel_tol * value.abs()));
            }
            heap.push(Self::segment(&mut f, worst.a, m, worst.left));
            heap.push(Self::segment(&mut f, m, worst.b, worst.right));
        }
    }
}

/// Integrate a function over the unit sphere `S^{d-1}` against surface
/// measure (counting measure on `{-1, +1}` when `d = 1`).
pub fn sphere_integral<F: FnMut(&[f64]) -> f64>(d: usize, mut f: F, tol: f64) -> Result<Integral> {
    let quad = Adaptive::with_tol(tol * 1e-3, tol);
    match d {
        1 => {
            let v = f(&[1.0]) + f(&[-1.0]);
            Ok(Integral { value: v, error: 0.0 })
        }
        2 => {
            let breaks: Vec<f64> = (0..=8).map(|k| k as f64 * PI / 4.0).collect();
            quad.integrate_breaks(|phi| f(&[phi.cos(), phi.sin()]), &breaks)
        }
        3 => {
            let inner = Adaptive::with_tol(tol * 1e-4, tol * 0.1);
            let breaks_phi: Vec<f64> = (0..=8).map(|k| k as f64 * PI / 4.0).collect();
            let mut failure = None;
            let outer = quad.integrate_breaks(
                |z| {
                    let s = (1.0 - z * z).max(0.0).sqrt();
                    match inner.integrate_breaks(|phi| f(&[s * phi.cos(), s * phi.sin(), z]), &breaks_phi) {
                        Ok(v) => v.value,
                        Err(e) => {
                            failure = Some(e);
                            0.0
                        }
                    }
                },
                &[-1.0, -0.5, 0.0, 0.5, 1.0],
            )?;
            match failure {
                Some(e) => Err(e),
                None => Ok(outer),
            }
        }
        _ => crate::error::argument(format!("sphere integrals are supported for d <= 3, got d = {d}")),
    }
}

/// Surface area of the unit sphere `S^{d-1}`.
pub fn sphere_area(d: usize) -> f64 {
    let d = d as f64;
    2.0 * PI.powf(d / 2.0) / libm::tgamma(d / 2.0)
}

/// Volume of the unit ball in `R^d`.
pub fn ball_volume(d: usize) -> f64 {
    let d = d as f64;
    PI.powf(d / 2.0) / libm::tgamma(d / 2.0 + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = gauss_panel(|x| x.powi(7) - 3.0 * x * x, -1.0, 2.0);
        let exact = (2f64.powi(8) - 1.0) / 8.0 - (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity() {
        let v = Adaptive::default().integrate(|x| x.powf(-0.5), 0.0, 1.0).unwrap();
        assert!((v.value - 2.0).abs() < 1e-9, "{v:?}");
    }

    #[test]
    fn kink_in_the_interior() {
        let v = Adaptive::default().integrate(|x| (x - 0.3).abs(), 0.0, 1.0).unwrap();
        assert!((v.value - (0.045 + 0.245)).abs() < 1e-12);
    }

    #[test]
    fn sphere_areas() {
        for d in 1..=3 {
            let v = sphere_integral(d, |_| 1.0, 1e-10).unwrap();
            assert!((v.value - sphere_area(d)).abs() < 1e-9);
        }
        let m = sphere_integral(3, |x| x[0] * x[0], 1e-10).unwrap();
        assert!((m.value - 4.0 * PI / 3.0).abs() < 1e-9);
    }
}
