//! Property suites run with a deterministic proptest runner, so the same
//! cases are drawn on every run.
//!
//! Each suite returns `Err` with the failing input (after shrinking) when a
//! property is violated.

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestError, TestRng, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use levyheat::density::{transition_density, GridSpec, Sampler};
use levyheat::geometry::{cross_covariance, SetGeometry};
use levyheat::levy_models::{
    generalized_inverse, FnScalar, InverseOptions, JumpMeasure, LevyModel, PowerLaw, PowerTerm, RadialProfile,
    ScalarFunction, SphereMeasure,
};

use crate::oracles::ks_distance;

fn runner(cases: u32) -> TestRunner {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn outcome<T: std::fmt::Debug>(name: &str, r: Result<(), TestError<T>>) -> Result<(), String> {
    r.map_err(|e| format!("{name}: {e}"))
}

// ---------------------------------------------------------------------------
// Generalized inverse

/// The non-decreasing test functions: a power law, a slowly varying
/// perturbation of one and a step function with flat pieces.
#[derive(Clone, Debug)]
pub enum TestFunction {
    Power { coef: f64, index: f64 },
    LogPower { index: f64 },
    Staircase { coef: f64 },
}

impl TestFunction {
    fn build(&self) -> Box<dyn ScalarFunction> {
        match *self {
            TestFunction::Power { coef, index } => Box::new(PowerLaw { coef, index }),
            TestFunction::LogPower { index } => {
                Box::new(FnScalar(move |x: f64| x.powf(index) * (std::f64::consts::E + x).ln()))
            }
            TestFunction::Staircase { coef } => Box::new(FnScalar(move |x: f64| coef * (4.0 * x).floor() / 4.0)),
        }
    }

    /// Exact inverse where one is known.
    fn exact_inverse(&self, u: f64) -> Option<f64> {
        match *self {
            TestFunction::Power { coef, index } => Some((u / coef).powf(1.0 / index)),
            TestFunction::Staircase { coef } => Some((4.0 * u / coef).ceil() / 4.0),
            TestFunction::LogPower { .. } => None,
        }
    }
}

fn test_function() -> impl Strategy<Value = TestFunction> {
    prop_oneof![
        (0.1f64..10.0, 0.2f64..3.0).prop_map(|(coef, index)| TestFunction::Power { coef, index }),
        (0.2f64..3.0).prop_map(|index| TestFunction::LogPower { index }),
        (0.5f64..4.0).prop_map(|coef| TestFunction::Staircase { coef }),
    ]
}

/// `V(V⁻(u)) ≥ u`, `V < u` just below `V⁻(u)`, monotonicity in `u`, and
/// `V⁻(V(x)) ≤ x`.
pub fn generalized_inverse_laws(cases: u32) -> Result<(), String> {
    let opts = InverseOptions::default();
    let strat = (test_function(), -3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0);
    let r = runner(cases).run(&strat, |(f, lu1, lu2, lx)| {
        let v = f.build();
        let (u1, u2) = (10f64.powf(lu1.min(lu2)), 10f64.powf(lu1.max(lu2)));
        let w1 = generalized_inverse(v.as_ref(), u1, &opts).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let w2 = generalized_inverse(v.as_ref(), u2, &opts).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(v.eval(w1) >= u1 * (1.0 - 1e-12), "V(V⁻(u)) < u");
        prop_assert!(v.eval(w1 * (1.0 - 1e-9)) < u1, "V⁻(u) is not the infimum");
        prop_assert!(w1 <= w2, "V⁻ is not monotone");
        if let Some(e) = f.exact_inverse(u1) {
            prop_assert!((w1 - e).abs() <= 1e-12 * e, "inverse {w1} differs from {e}");
        }
        let x = 10f64.powf(lx);
        let back = generalized_inverse(v.as_ref(), v.eval(x), &opts).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(back <= x * (1.0 + 1e-12), "V⁻(V(x)) = {back} > x = {x}");
        Ok(())
    });
    outcome("generalized inverse", r)
}

// ---------------------------------------------------------------------------
// Symmetric models

/// Descriptor of a random symmetric model.
#[derive(Clone, Debug)]
pub enum ModelCase {
    Brownian { dim: usize, lambda: f64 },
    Isotropic { dim: usize, alpha: f64, scale: f64 },
    Product { alphas: Vec<f64> },
    AtomicSphere { angle: f64, weight: f64, alpha: f64 },
    StablePlusJumps { alpha: f64, rate: f64, std: f64 },
}

impl ModelCase {
    pub fn build(&self) -> LevyModel {
        match self {
            ModelCase::Brownian { dim, lambda } => LevyModel::brownian(*dim, *lambda),
            ModelCase::Isotropic { dim, alpha, scale } => LevyModel::isotropic_stable(*dim, *alpha, *scale),
            ModelCase::Product { alphas } => LevyModel::product_of_stables(alphas.clone()),
            ModelCase::AtomicSphere { angle, weight, alpha } => LevyModel::spherical_stable_like(
                2,
                SphereMeasure::symmetric_atoms(vec![vec![1.0, 0.0], vec![angle.cos(), angle.sin()]], vec![1.0, *weight])
                    .expect("valid atoms"),
                RadialProfile { terms: vec![PowerTerm { coef: 1.0, alpha: *alpha }] },
            ),
            ModelCase::StablePlusJumps { alpha, rate, std } => LevyModel::superposition(vec![
                LevyModel::isotropic_stable(1, *alpha, 1.0).expect("valid stable"),
                LevyModel::compound_poisson_without_drift(
                    1,
                    JumpMeasure::Gaussian { rate: *rate, mean: vec![0.0], std: *std },
                )
                .expect("valid jumps"),
            ]),
        }
        .expect("valid model")
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelCase::Brownian { dim, .. } | ModelCase::Isotropic { dim, .. } => *dim,
            ModelCase::Product { alphas } => alphas.len(),
            ModelCase::AtomicSphere { .. } => 2,
            ModelCase::StablePlusJumps { .. } => 1,
        }
    }
}

pub fn model_case() -> impl Strategy<Value = ModelCase> {
    prop_oneof![
        (1usize..=3, 0.1f64..5.0).prop_map(|(dim, lambda)| ModelCase::Brownian { dim, lambda }),
        (1usize..=3, 0.2f64..1.99, 0.2f64..3.0).prop_map(|(dim, alpha, scale)| ModelCase::Isotropic { dim, alpha, scale }),
        proptest::collection::vec(0.3f64..1.95, 2..=3).prop_map(|alphas| ModelCase::Product { alphas }),
        (0.3f64..2.8, 0.1f64..3.0, 0.3f64..1.9)
            .prop_map(|(angle, weight, alpha)| ModelCase::AtomicSphere { angle, weight, alpha }),
        (0.3f64..1.9, 0.1f64..5.0, 0.1f64..3.0)
            .prop_map(|(alpha, rate, std)| ModelCase::StablePlusJumps { alpha, rate, std }),
    ]
}

/// `ψ*` is non-decreasing and dominates `ψ` on the ball.
pub fn psi_star_monotone(cases: u32) -> Result<(), String> {
    let strat = (model_case(), -3.0f64..3.0, -3.0f64..3.0, proptest::collection::vec(-1.0f64..1.0, 3));
    let r = runner(cases).run(&strat, |(m, l1, l2, dir)| {
        let model = m.build();
        let (u1, u2) = (10f64.powf(l1.min(l2)), 10f64.powf(l1.max(l2)));
        let s1 = model.psi_star(u1).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let s2 = model.psi_star(u2).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(s1 <= s2 * (1.0 + 1e-9), "ψ*({u1}) = {s1} > ψ*({u2}) = {s2}");
        let d = m.dim();
        let norm = dir[..d].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-3 {
            let x: Vec<f64> = dir[..d].iter().map(|v| v / norm * u1).collect();
            let psi = model.psi(&x).map_err(|e| TestCaseError::fail(e.to_string()))?.re;
            prop_assert!(psi <= s1 * (1.0 + 1e-9), "ψ(x) = {psi} exceeds ψ*(|x|) = {s1}");
        }
        Ok(())
    });
    outcome("psi* monotonicity", r)
}

/// `½ ψ*(1/r) ≤ h(r) ≤ 8(1+2d) ψ*(1/r)`.
pub fn pruitt_sandwich(cases: u32) -> Result<(), String> {
    let strat = (model_case(), -3.0f64..3.0);
    let r = runner(cases).run(&strat, |(m, lr)| {
        let model = m.build();
        let r = 10f64.powf(lr);
        let h = model.pruitt_h(r).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let s = model.psi_star(1.0 / r).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let d = m.dim() as f64;
        prop_assert!(0.5 * s <= h * (1.0 + 1e-9), "h({r}) = {h} below ψ*/2 = {}", 0.5 * s);
        prop_assert!(h <= 8.0 * (1.0 + 2.0 * d) * s * (1.0 + 1e-9), "h({r}) = {h} above the upper bound");
        Ok(())
    });
    outcome("Pruitt sandwich", r)
}

// ---------------------------------------------------------------------------
// Covariance

#[derive(Clone, Debug)]
pub enum SetCase {
    Interval(f64, f64),
    TwoIntervals(f64, f64, f64),
    Box(f64, f64, f64),
    Disk(f64, f64, f64),
    Annulus(f64, f64),
}

impl SetCase {
    pub fn build(&self) -> SetGeometry {
        match *self {
            SetCase::Interval(a, l) => SetGeometry::interval(a, a + l),
            SetCase::TwoIntervals(a, l, gap) => SetGeometry::disjoint_union(vec![
                SetGeometry::interval(a, a + l).expect("interval"),
                SetGeometry::interval(a + l + gap, a + 2.0 * l + gap).expect("interval"),
            ]),
            SetCase::Box(cx, w, h) => SetGeometry::cube_box(vec![cx, 0.0], vec![w / 2.0, h / 2.0]),
            SetCase::Disk(cx, cy, r) => SetGeometry::ball(vec![cx, cy], r),
            SetCase::Annulus(ri, width) => SetGeometry::annulus(vec![0.0, 0.0], ri, ri + width),
        }
        .expect("valid set")
    }

    pub fn dim(&self) -> usize {
        match self {
            SetCase::Interval(..) | SetCase::TwoIntervals(..) => 1,
            _ => 2,
        }
    }
}

fn set_case(dim: usize) -> BoxedStrategy<SetCase> {
    if dim == 1 {
        prop_oneof![
            (-1.0f64..1.0, 0.1f64..2.0).prop_map(|(a, l)| SetCase::Interval(a, l)),
            (-1.0f64..1.0, 0.1f64..1.0, 0.05f64..1.0).prop_map(|(a, l, g)| SetCase::TwoIntervals(a, l, g)),
        ]
        .boxed()
    } else {
        prop_oneof![
            (-0.5f64..0.5, 0.1f64..2.0, 0.1f64..2.0).prop_map(|(c, w, h)| SetCase::Box(c, w, h)),
            (-0.5f64..0.5, -0.5f64..0.5, 0.1f64..1.5).prop_map(|(x, y, r)| SetCase::Disk(x, y, r)),
            (0.1f64..1.0, 0.05f64..1.0).prop_map(|(r, w)| SetCase::Annulus(r, w)),
        ]
        .boxed()
    }
}

/// `r(x) = r(-x)`, `0 ≤ r ≤ r(0) = |Ω|`, and for two sets
/// `r_{Ω,Ω₀}(x) = r_{Ω₀,Ω}(-x) ≤ min(|Ω|, |Ω₀|)`.
pub fn covariance_symmetry_domination(cases: u32) -> Result<(), String> {
    let strat = (1usize..=2).prop_flat_map(|d| (set_case(d), set_case(d), proptest::collection::vec(-2.0f64..2.0, d)));
    let r = runner(cases).run(&strat, |(a, b, x)| {
        let (sa, sb) = (a.build(), b.build());
        let minus: Vec<f64> = x.iter().map(|v| -v).collect();
        let zero = vec![0.0; x.len()];
        let (m, m0) = (sa.measure(), sb.measure());
        let tol = 1e-10 * m.max(m0).max(1.0);
        let r = sa.covariance(&x);
        prop_assert!((r - sa.covariance(&minus)).abs() <= tol, "r is not even");
        prop_assert!((sa.covariance(&zero) - m).abs() <= tol, "r(0) ≠ |Ω|");
        prop_assert!(r >= -tol && r <= m + tol, "r(x) = {r} outside [0, |Ω|]");
        let c = cross_covariance(&sa, &sb, &x).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let c_rev = cross_covariance(&sb, &sa, &minus).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!((c - c_rev).abs() <= tol, "cross covariance symmetry: {c} vs {c_rev}");
        prop_assert!(c >= -tol && c <= m.min(m0) + tol, "cross covariance {c} not dominated");
        Ok(())
    });
    outcome("covariance symmetry/domination", r)
}

// ---------------------------------------------------------------------------
// Densities

/// `p_t(x) = t^{-1/α} p_1(x t^{-1/α})` for `ψ = |ξ|^α`, compared node by
/// node on lattices whose spacings differ by exactly `t^{1/α}`.
pub fn stable_self_similarity(cases: u32) -> Result<(), String> {
    let strat = (1.0f64..2.0, -1.0f64..1.0);
    let r = runner(cases).run(&strat, |(alpha, lt)| {
        let model = LevyModel::isotropic_stable(1, alpha, 1.0).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let t = 10f64.powf(lt);
        let s = t.powf(1.0 / alpha);
        let spec = |k: f64| GridSpec {
            half_extent: Some(200.0 * k),
            spacing: Some(0.02 * k),
            mass_tol: Some(1e-2),
            ..GridSpec::default()
        };
        let p1 = transition_density(&model, 1.0, &spec(1.0)).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let pt = transition_density(&model, t, &spec(s)).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(p1.points, pt.points);
        let peak = p1.values.iter().copied().fold(0.0, f64::max);
        let sup = p1.values.iter().zip(&pt.values).map(|(a, b)| (b * s - a).abs()).fold(0.0, f64::max);
        prop_assert!(sup <= 1e-8 * peak, "self-similarity defect {sup:e}");
        Ok(())
    });
    outcome("stable self-similarity", r)
}

/// KS distance between `n` sampler draws and the distribution function of
/// the inverted density, for a few one-dimensional models. The distribution
/// function integrates the piecewise-linear interpolant of the lattice
/// density exactly.
pub fn sampler_ks(n: usize) -> Result<Vec<(String, f64)>, String> {
    let models = [
        ("isotropic_stable(1.5)", LevyModel::isotropic_stable(1, 1.5, 1.0)),
        ("cauchy", LevyModel::isotropic_stable(1, 1.0, 1.0)),
        ("brownian(1)", LevyModel::brownian(1, 1.0)),
    ];
    let mut out = Vec::new();
    for (k, (name, m)) in models.into_iter().enumerate() {
        let m = m.map_err(|e| e.to_string())?;
        let spec = GridSpec { mass_tol: Some(1e-4), spacing: Some(0.02), ..GridSpec::default() };
        let grid = transition_density(&m, 1.0, &spec).map_err(|e| format!("{name}: {e}"))?;
        let table = grid.cdf_1d().map_err(|e| e.to_string())?;
        let (x_lo, h) = (grid.coordinate(0), grid.spacing);
        let cdf = |x: f64| {
            let u = (x - x_lo) / h;
            if u <= 0.0 {
                return table[0].1;
            }
            let j = u.floor() as usize;
            if j + 1 >= table.len() {
                return table[table.len() - 1].1;
            }
            let (p0, p1) = (grid.values[j], grid.values[j + 1]);
            let delta = (u - j as f64) * h;
            table[j].1 + p0 * delta + (p1 - p0) * delta * delta / (2.0 * h)
        };
        let sampler = Sampler::new(&m).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed + k as u64);
        let mut xs: Vec<f64> = (0..n).map(|_| sampler.sample(1.0, &mut rng)[0]).collect();
        out.push((name.to_string(), ks_distance(&mut xs, cdf)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generalized_inverse() {
        generalized_inverse_laws(256).unwrap();
    }

    #[test]
    fn psi_star_is_non_decreasing() {
        psi_star_monotone(64).unwrap();
    }

    #[test]
    fn pruitt_function_is_sandwiched() {
        pruitt_sandwich(64).unwrap();
    }

    #[test]
    fn covariance_is_even_and_dominated() {
        covariance_symmetry_domination(256).unwrap();
    }

    #[test]
    fn stable_densities_are_self_similar() {
        stable_self_similarity(12).unwrap();
    }

    #[test]
    fn sampler_matches_density() {
        for (name, ks) in sampler_ks(1_000_000).unwrap() {
            println!("{name}: KS = {ks:.5}");
            assert!(ks <= 0.002, "{name}: KS = {ks}");
        }
    }
}
