//! Structural invariants of heat contents and convergence reports.

use std::sync::Arc;

use levyheat::asymptotics::{convergence_report, derive_law, Theorem};
use levyheat::geometry::{InitialData, SetGeometry};
use levyheat::heatcontent::{heat_content_quadrature, heat_deficit_sweep, Estimator, HeatScenario, Scaling};
use levyheat::levy_models::{LevyModel, PowerLaw};
use proptest::prelude::*;

fn interval_scenario(model: LevyModel, len: f64, scale: f64, t_grid: Vec<f64>) -> HeatScenario {
    let data = InitialData::classical(SetGeometry::interval(0.0, len).unwrap()).with_scale(scale);
    HeatScenario::new("prop", model, data, t_grid, Estimator::Quadrature).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    /// For symmetric processes the classical heat content is `∫|1̂_Ω|² e^{-tψ}`,
    /// so it never increases and never exceeds `|Ω|`.
    #[test]
    fn classical_heat_content_is_non_increasing(alpha in 0.6f64..2.0, len in 0.3f64..3.0, lt in -4.0f64..-0.5) {
        let model = LevyModel::isotropic_stable(1, alpha, 1.0).unwrap();
        let (t1, t2) = (10f64.powf(lt), 10f64.powf(lt + 0.3));
        let sc = interval_scenario(model, len, 1.0, vec![t2, t1]);
        let a = heat_content_quadrature(&sc, t1).unwrap();
        let b = heat_content_quadrature(&sc, t2).unwrap();
        prop_assert!(a.deficit <= a.tail_bound);
        prop_assert!(b.deficit <= a.deficit + a.tail_bound + b.tail_bound, "{a:?} {b:?}");
    }

    /// `ψ = c|ξ|^α` runs the unit-scale process at speed `c`: `H_c(t) = H_1(ct)`.
    #[test]
    fn time_change_of_the_stable_scale(alpha in 0.8f64..2.0, c in 0.2f64..5.0, lt in -4.0f64..-1.0) {
        let t = 10f64.powf(lt);
        let fast = interval_scenario(LevyModel::isotropic_stable(1, alpha, c).unwrap(), 1.0, 1.0, vec![t]);
        let unit = interval_scenario(LevyModel::isotropic_stable(1, alpha, 1.0).unwrap(), 1.0, 1.0, vec![c * t]);
        let a = heat_content_quadrature(&fast, t).unwrap();
        let b = heat_content_quadrature(&unit, c * t).unwrap();
        prop_assert!((a.deficit - b.deficit).abs() <= 1e-8 * b.deficit.abs() + a.tail_bound + b.tail_bound);
    }

    /// Multiplying `g` by `k` multiplies deficits and the limit constant by
    /// `k`, leaving the relative errors of the report unchanged.
    #[test]
    fn reports_are_invariant_under_data_scaling(k in 0.1f64..10.0) {
        let grid = vec![1e-2, 1e-3, 1e-4];
        let model = LevyModel::isotropic_stable(1, 1.5, 1.0).unwrap();
        let base = interval_scenario(model.clone(), 1.0, 1.0, grid.clone());
        let scaled = interval_scenario(model, 1.0, k, grid);
        let mut reports = Vec::new();
        for sc in [&base, &scaled] {
            let law = derive_law(Theorem::Corollary1, &sc.model, &sc.r, 1.0).unwrap();
            let table = heat_deficit_sweep(sc, &law.scaling).unwrap();
            reports.push((law.limit, convergence_report(&table, &law, "quadrature", 0.02).unwrap()));
        }
        prop_assert!((reports[1].0 / reports[0].0 - k).abs() < 1e-9 * k);
        for (a, b) in reports[0].1.rows.iter().zip(&reports[1].1.rows) {
            prop_assert!((a.error - b.error).abs() < 1e-8, "{a:?} {b:?}");
            prop_assert!((b.scaled / a.scaled - k).abs() < 1e-8 * k);
        }
    }
}

#[test]
fn regular_scaling_of_a_power_law_is_a_power_of_t() {
    let s = Scaling::Regular { v: Arc::new(PowerLaw { coef: 1.0, index: 1.5 }), beta: 1.0 };
    for &t in &[1e-1, 1e-4, 1e-8] {
        let f: f64 = s.factor(t).unwrap();
        assert!((f / t.powf(-1.0 / 1.5) - 1.0).abs() < 1e-13);
    }
}
