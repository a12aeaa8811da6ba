//! Small-time sweeps against limit constants, with reference values
//! recomputed here by elementary quadrature.

use levyheat::asymptotics::{convergence_report, derive_law, Theorem};
use levyheat::geometry::{GFunction, InitialData, MuMeasure, SetGeometry};
use levyheat::heatcontent::{geometric_grid, heat_deficit_sweep, Estimator, HeatScenario};
use levyheat::levy_models::{JumpMeasure, LevyModel};
use levyheat::special::normal_cdf;

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|k| f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(a) + f(b) + inner) * h / 3.0
}

fn run(theorem: Theorem, sc: &HeatScenario, beta: f64) -> (f64, f64) {
    let law = derive_law(theorem, &sc.model, &sc.r, beta).unwrap();
    let table = heat_deficit_sweep(sc, &law.scaling).unwrap();
    let report = convergence_report(&table, &law, "quadrature", 0.02).unwrap();
    assert!(report.pass, "{report}");
    (law.limit, report.final_error())
}

#[test]
fn interior_set_loses_mass_to_jumps_leaving_the_outer_set() {
    let (rate, sd) = (1.5, 0.6);
    let model = LevyModel::compound_poisson_without_drift(
        1,
        JumpMeasure::Gaussian { rate, mean: vec![0.0], std: sd },
    )
    .unwrap();
    let data = InitialData::new(
        GFunction::Indicator(SetGeometry::interval(0.25, 0.75).unwrap()),
        MuMeasure::LebesgueOnSet(SetGeometry::interval(0.0, 1.0).unwrap()),
    );
    let sc = HeatScenario::new("interior", model, data, geometric_grid(1e-2, 1e-6, 5), Estimator::Quadrature).unwrap();
    // -∫_Ω [ν((-∞, y - 1)) + ν((y, ∞))] dy for Ω = [1/4, 3/4], Ω₀ = [0, 1].
    let oracle = -simpson(
        |y| rate * (normal_cdf((y - 1.0) / sd) + 1.0 - normal_cdf(y / sd)),
        0.25,
        0.75,
        2000,
    );
    let (limit, _) = run(Theorem::Ex2Case2, &sc, 1.0);
    assert!((limit - oracle).abs() < 1e-9, "{limit} {oracle}");
}

#[test]
fn disk_limit_constant_under_isotropic_stable() {
    let model = LevyModel::isotropic_stable(2, 1.5, 1.0).unwrap();
    let sc = HeatScenario::new(
        "disk",
        model,
        InitialData::classical(SetGeometry::ball(vec![0.0, 0.0], 1.0).unwrap()),
        vec![1e-3, 1e-4],
        Estimator::Quadrature,
    )
    .unwrap();
    // A shift by x uncovers |x| times the width 2 of the disk, so the limit is
    // -2 E‖X₁‖ = -2 (π/2) E|⟨X₁, e₁⟩| with a 1.5-stable marginal.
    let marginal = 2.0 * libm::tgamma(1.0 / 3.0) / std::f64::consts::PI;
    let law = derive_law(Theorem::Corollary1, &sc.model, &sc.r, 1.0).unwrap();
    let oracle = -std::f64::consts::PI * marginal;
    assert!((law.limit / oracle - 1.0).abs() < 1e-6, "{} {oracle}", law.limit);
}

#[test]
fn anisotropic_product_on_a_rectangle() {
    let model = LevyModel::product_of_stables(vec![1.5, 1.5]).unwrap();
    let sc = HeatScenario::new(
        "rect",
        model,
        InitialData::classical(SetGeometry::centered_box(&[1.0, 2.0]).unwrap()),
        geometric_grid(1e-2, 1e-6, 5),
        Estimator::Quadrature,
    )
    .unwrap();
    // Edges of length 2 move with the first coordinate, edges of length 1 with the second.
    let marginal = 2.0 * libm::tgamma(1.0 / 3.0) / std::f64::consts::PI;
    let (limit, err) = run(Theorem::T2, &sc, 1.0);
    assert!((limit + 3.0 * marginal).abs() < 1e-6, "{limit}");
    assert!(err < 0.01, "{err}");
}

#[test]
fn drifting_compound_poisson_with_gaussian_initial_measure() {
    let model = LevyModel::compound_poisson(
        1,
        JumpMeasure::Gaussian { rate: 2.0, mean: vec![0.2], std: 0.5 },
        vec![0.3],
    )
    .unwrap();
    let data = InitialData::new(
        GFunction::Indicator(SetGeometry::interval(-0.5, 1.0).unwrap()),
        MuMeasure::Gaussian { mean: vec![0.0], std: 0.7 },
    );
    let sc = HeatScenario::new("drift", model, data, geometric_grid(1e-2, 1e-6, 5), Estimator::Quadrature).unwrap();
    let (_, err) = run(Theorem::T1Case2ii, &sc, 1.0);
    assert!(err < 1e-4, "{err}");
}
