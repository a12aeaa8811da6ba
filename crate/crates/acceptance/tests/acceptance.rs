//! Acceptance criteria 1 to 8. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any criterion fails. Tolerances are pinned below.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use levyheat::asymptotics::{
    derive_law, limit_corollary1, limit_t1_case1, limit_t1_general, limit_t1_symmetric, limit_t2, RBeta, Theorem,
};
use levyheat::density::{transition_density, GridSpec};
use levyheat::geometry::{build_r, GFunction, InitialData, MuMeasure, SetGeometry};
use levyheat::heatcontent::{
    geometric_grid, heat_content_mc_n, heat_content_quadrature, heat_deficit_sweep, Estimator, HeatScenario, Scaling,
};
use levyheat::levy_models::{JumpMeasure, LevyModel, PowerLaw, SphereFunction};
use levyheat_acceptance::oracles::{
    cauchy_density, gaussian_density, gaussian_interval_deficit, gaussian_jumps_between_intervals,
    interval_power_levy_integral, interval_stable_limit,
};
use levyheat_acceptance::properties::{
    covariance_symmetry_domination, generalized_inverse_laws, psi_star_monotone, pruitt_sandwich, sampler_ks,
    stable_self_similarity,
};
use levyheat_acceptance::Verdict;

// Pinned tolerances and budgets.
const C1_REL_TOL: f64 = 0.02;
const C1_BUDGET: Duration = Duration::from_secs(60);
const C2_REL_TOL: f64 = 0.01;
const C2_BUDGET: Duration = Duration::from_secs(30);
const C3_REL_TOL: f64 = 0.01;
const C3_SIGMAS: f64 = 4.0;
const C3_T: f64 = 1e-3;
const C3_DRAWS: usize = 2_000_000;
const C3_BUDGET: Duration = Duration::from_secs(60);
const C4_REL_TOL: f64 = 0.02;
const C4_T_MIN: f64 = 1e-9;
const C4_BUDGET: Duration = Duration::from_secs(60);
const C5_REL_TOL: f64 = 0.05;
const C5_DRAWS: usize = 10_000_000;
const C5_BUDGET: Duration = Duration::from_secs(300);
const C6_SUP_TOL: f64 = 1e-8;
const C6_MASS_TOL: f64 = 1e-6;
const C6_BUDGET: Duration = Duration::from_secs(10);
const C7_LIMIT_REL_TOL: f64 = 1e-6;
const C7_CHAIN_REL_TOL: f64 = 1e-7;
const C7_CORPUS_SIZE: usize = 20;
const C7_CORPUS_SEED: u64 = 20_240_601;
const C7_SIGMAS: f64 = 4.0;
const C7_DRAWS: usize = 400_000;
const C7_BUDGET: Duration = Duration::from_secs(600);
const C8_KS_TOL: f64 = 0.002;
const C8_KS_DRAWS: usize = 1_000_000;
const C8_BUDGET: Duration = Duration::from_secs(300);

type Outcome = Result<(bool, String), String>;
type Suite = fn(u32) -> Result<(), String>;
type Criterion = fn() -> Outcome;

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn classical(omega: SetGeometry) -> InitialData {
    InitialData::classical(omega)
}

fn unit_interval() -> SetGeometry {
    SetGeometry::interval(0.0, 1.0).expect("interval")
}

fn e<T>(r: levyheat::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn c1_stable_interval() -> Outcome {
    let alpha = 1.5;
    let model = e(LevyModel::isotropic_stable(1, alpha, 1.0))?;
    let sc = e(HeatScenario::new("c1", model, classical(unit_interval()), HeatScenario::default_t_grid(), Estimator::Quadrature))?;
    let scaling = Scaling::Regular { v: Arc::new(PowerLaw { coef: 1.0, index: alpha }), beta: 1.0 };
    let table = e(heat_deficit_sweep(&sc, &scaling))?;
    let oracle = interval_stable_limit(alpha);
    let errs: Vec<f64> = table.rows.iter().map(|r| rel(r.scaled, oracle)).collect();
    let last = table.rows.last().ok_or("empty sweep")?;
    let law = e(derive_law(Theorem::Corollary1, &sc.model, &sc.r, 1.0))?;
    let converging = errs.windows(2).filter(|w| w[1] < w[0]).count() >= errs.len() - 2;
    let ok = errs[errs.len() - 1] <= C1_REL_TOL && converging && rel(law.limit, oracle) < 1e-10;
    Ok((
        ok,
        format!(
            "t={:.3e} scaled={:.6} oracle={:.6} rel.err={:.2e} (tol {C1_REL_TOL}); law constant {:.10} ; errors decrease along the sweep: {converging}",
            last.t, last.scaled, oracle, errs[errs.len() - 1], law.limit
        ),
    ))
}

fn c2_brownian_interval() -> Outcome {
    let model = e(LevyModel::brownian(1, 1.0))?;
    let sc = e(HeatScenario::new("c2", model, classical(unit_interval()), HeatScenario::default_t_grid(), Estimator::Quadrature))?;
    let scaling = Scaling::Regular { v: Arc::new(PowerLaw { coef: 1.0, index: 2.0 }), beta: 1.0 };
    let table = e(heat_deficit_sweep(&sc, &scaling))?;
    let oracle = -2.0 / PI.sqrt();
    let closed_form_gap =
        table.rows.iter().map(|r| (r.deficit - gaussian_interval_deficit(1.0, r.t)).abs()).fold(0.0, f64::max);
    let last = table.rows.last().ok_or("empty sweep")?;
    let err = rel(last.scaled, oracle);
    Ok((
        err <= C2_REL_TOL && closed_form_gap < 1e-10,
        format!(
            "t={:.3e} scaled={:.6} oracle={:.6} rel.err={:.2e} (tol {C2_REL_TOL}); max gap to truncated-moment closed form {:.1e}",
            last.t, last.scaled, oracle, err, closed_form_gap
        ),
    ))
}

fn c3_disjoint_compound_poisson() -> Outcome {
    let (rate, mean, std) = (2.0, 2.0, 0.5);
    let model = e(LevyModel::compound_poisson_without_drift(
        1,
        JumpMeasure::Gaussian { rate, mean: vec![mean], std },
    ))?;
    let data = InitialData::new(
        GFunction::Indicator(e(SetGeometry::interval(2.0, 3.0))?),
        MuMeasure::LebesgueOnSet(unit_interval()),
    );
    let sc = e(HeatScenario::new("c3", model, data, vec![C3_T], Estimator::Both { n: C3_DRAWS }))?.with_seed(3);
    let oracle = gaussian_jumps_between_intervals(rate, mean, std, (2.0, 3.0), (0.0, 1.0));
    let law = e(derive_law(Theorem::Ex2Case1, &sc.model, &sc.r, 1.0))?;
    let q = e(heat_content_quadrature(&sc, C3_T))?;
    let mc = e(heat_content_mc_n(&sc, C3_T, C3_DRAWS))?;
    let (qs, ms, msd) = (q.h / C3_T, mc.h / C3_T, mc.stderr / C3_T);
    let q_ok = (qs - oracle).abs() <= C3_REL_TOL * oracle.abs();
    let m_ok = (ms - oracle).abs() <= C3_REL_TOL * oracle.abs() + C3_SIGMAS * msd;
    let law_ok = rel(law.limit, oracle) < 1e-6;
    Ok((
        q_ok && m_ok && law_ok,
        format!(
            "nested-quadrature oracle {oracle:.6}; quadrature t⁻¹H={qs:.6}; Monte Carlo t⁻¹H={ms:.6} ± {msd:.4}; law constant {:.8}",
            law.limit
        ),
    ))
}

fn c4_stable08_interval() -> Outcome {
    let alpha = 0.8;
    let model = e(LevyModel::stable_from_levy_density(1, alpha, 1.0))?;
    let sc = e(HeatScenario::new(
        "c4",
        model,
        classical(unit_interval()),
        geometric_grid(1e-5, C4_T_MIN, 5),
        Estimator::Quadrature,
    ))?;
    let table = e(heat_deficit_sweep(&sc, &Scaling::Linear))?;
    let oracle = interval_power_levy_integral(alpha);
    let law = e(derive_law(Theorem::T1Case2i, &sc.model, &sc.r, 1.0))?;
    let last = table.rows.last().ok_or("empty sweep")?;
    let err = rel(last.scaled, oracle);
    Ok((
        err <= C4_REL_TOL && rel(law.limit, oracle) < 1e-7,
        format!(
            "t={:.1e} scaled={:.5} oracle={oracle} rel.err={err:.2e} (tol {C4_REL_TOL}); law constant {:.9}",
            last.t, last.scaled, law.limit
        ),
    ))
}

fn c5_example5_rectangle() -> Outcome {
    let (alpha, rho, a) = (0.7, 1.5, 1.0);
    let model = e(LevyModel::product_of_stables(vec![alpha, rho]))?;
    let omega = e(SetGeometry::centered_box(&[a, 2.0]))?;
    let sc = e(HeatScenario::new("c5", model, classical(omega), vec![1e-4, 1e-5, 1e-6], Estimator::MonteCarlo { n: C5_DRAWS }))?
        .with_seed(5);
    let stated = e(derive_law(Theorem::Ex5Rectangle, &sc.model, &sc.r, 1.0))?;
    let t3 = e(derive_law(Theorem::T3, &sc.model, &sc.r, 1.0))?;
    let table = e(heat_deficit_sweep(&sc, &stated.scaling))?;
    let target = interval_stable_limit(rho) * a;
    let last = table.estimator_rows("montecarlo").last().ok_or("empty sweep")?.clone();
    let err = rel(last.scaled, target);
    let sd = last.stderr.unwrap_or(0.0) * last.scale;
    Ok((
        err <= C5_REL_TOL && rel(stated.limit, target) < 1e-10,
        format!(
            "t={:.0e} Monte Carlo scaled={:.4} ± {:.4}, target {target:.5}, rel.err={err:.3} (tol {C5_REL_TOL}); \
             the normalised limit measure gives {:.5} (rel.err {:.3})",
            last.t,
            last.scaled,
            sd,
            t3.limit,
            rel(last.scaled, t3.limit)
        ),
    ))
}

fn c6_density_fidelity() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, model, exact) in [
        ("gaussian", e(LevyModel::brownian(1, 1.0))?, &(|x: f64| gaussian_density(1.0, x)) as &dyn Fn(f64) -> f64),
        ("cauchy", e(LevyModel::isotropic_stable(1, 1.0, 1.0))?, &|x: f64| cauchy_density(1.0, x)),
    ] {
        let start = Instant::now();
        let g = e(transition_density(&model, 1.0, &GridSpec::default()))?;
        let sup = g.nodes().map(|(x, p)| (p - exact(x[0])).abs()).fold(0.0, f64::max);
        let elapsed = start.elapsed();
        ok &= sup <= C6_SUP_TOL && (g.mass - 1.0).abs() <= C6_MASS_TOL && elapsed <= C6_BUDGET;
        parts.push(format!(
            "{name}: sup.err={sup:.1e} |mass-1|={:.1e} ({:.2}s)",
            (g.mass - 1.0).abs(),
            elapsed.as_secs_f64()
        ));
    }
    Ok((ok, parts.join("; ")))
}

/// A random scenario of the cross-check corpus.
fn random_scenario(rng: &mut ChaCha8Rng, k: usize) -> Result<(String, HeatScenario, f64), String> {
    let t = 10f64.powf(rng.gen_range(-3.0..-1.0));
    let len = rng.gen_range(0.5..2.0);
    let interval = e(SetGeometry::interval(0.0, len))?;
    let (label, model, omega) = match k % 5 {
        0 => {
            let a = rng.gen_range(0.5..1.99);
            (format!("stable({a:.2})"), e(LevyModel::isotropic_stable(1, a, rng.gen_range(0.5..2.0)))?, interval)
        }
        1 => {
            let l = rng.gen_range(0.2..3.0);
            (format!("brownian({l:.2})"), e(LevyModel::brownian(1, l))?, interval)
        }
        2 => {
            let (rate, s) = (rng.gen_range(1.0..8.0), rng.gen_range(0.1..1.0));
            let m = e(LevyModel::compound_poisson_without_drift(
                1,
                JumpMeasure::Gaussian { rate, mean: vec![0.0], std: s },
            ))?;
            (format!("cp(rate {rate:.1}, std {s:.2})"), m, interval)
        }
        3 => {
            let a = rng.gen_range(0.6..1.9);
            let m = e(LevyModel::superposition(vec![
                e(LevyModel::isotropic_stable(1, a, 1.0))?,
                e(LevyModel::compound_poisson_without_drift(
                    1,
                    JumpMeasure::Gaussian { rate: 3.0, mean: vec![0.0], std: 0.5 },
                ))?,
            ]))?;
            (format!("stable({a:.2})+cp"), m, interval)
        }
        _ => {
            let (a1, a2) = (rng.gen_range(0.8..1.95), rng.gen_range(0.8..1.95));
            let sides = [len, rng.gen_range(0.5..2.0)];
            (format!("product({a1:.2},{a2:.2})"), e(LevyModel::product_of_stables(vec![a1, a2]))?, e(SetGeometry::centered_box(&sides))?)
        }
    };
    let sc = e(HeatScenario::new(format!("corpus{k}"), model, classical(omega), vec![t], Estimator::Both { n: C7_DRAWS }))?
        .with_seed(C7_CORPUS_SEED + k as u64);
    Ok((label, sc, t))
}

fn c7_cross_checks() -> Outcome {
    // Theorem-2 limit with constant exponent against the closed form.
    let mut worst_limit: f64 = 0.0;
    for &(d, alpha) in &[(1usize, 1.5), (1, 1.2), (2, 1.7), (2, 1.3), (3, 1.5)] {
        let omega = if d == 1 { unit_interval() } else { e(SetGeometry::ball(vec![0.0; d], 1.0))? };
        let rf = e(build_r(&classical(omega)))?;
        let rb = e(RBeta::from_r(&rf, 1.0))?;
        let a = e(limit_t2(&SphereFunction::constant(d, 1.0, alpha), alpha, &rb))?.value;
        let b = e(limit_corollary1(d, alpha, &rb))?.value;
        worst_limit = worst_limit.max(rel(a, b));
    }
    // The three forms of the linear limit on symmetric models with even data.
    let mut worst_chain: f64 = 0.0;
    let chain_models = [
        e(LevyModel::stable_from_levy_density(1, 0.3, 1.0))?,
        e(LevyModel::stable_from_levy_density(1, 0.5, 2.0))?,
        e(LevyModel::stable_from_levy_density(1, 0.8, 1.0))?,
        e(LevyModel::compound_poisson_without_drift(1, JumpMeasure::Gaussian { rate: 2.0, mean: vec![0.0], std: 0.7 }))?,
        e(LevyModel::compound_poisson_without_drift(
            1,
            JumpMeasure::Atoms { points: vec![vec![0.4], vec![-0.4], vec![1.5], vec![-1.5]], weights: vec![1.0, 1.0, 0.5, 0.5] },
        ))?,
    ];
    for (k, m) in chain_models.iter().enumerate() {
        let omega = if k % 2 == 0 { unit_interval() } else { e(SetGeometry::interval(-0.3, 1.7))? };
        let rf = e(build_r(&classical(omega)))?;
        let a = e(limit_t1_case1(m, &rf))?;
        let b = e(limit_t1_symmetric(m, &rf))?;
        let c = e(limit_t1_general(m, &rf))?;
        let bound = a.error + b.error + c.error;
        let gap = (a.value - b.value).abs().max((b.value - c.value).abs());
        worst_chain = worst_chain.max((gap - bound).max(0.0) / a.value.abs());
    }
    // Randomised quadrature-versus-Monte-Carlo corpus.
    let mut rng = ChaCha8Rng::seed_from_u64(C7_CORPUS_SEED);
    let mut worst_z: f64 = 0.0;
    let mut worst_label = String::new();
    let mut failures = 0;
    for k in 0..C7_CORPUS_SIZE {
        let (label, sc, t) = random_scenario(&mut rng, k)?;
        let q = heat_content_quadrature(&sc, t).map_err(|err| format!("{label} at t={t:.1e}: {err}"))?;
        let mc = heat_content_mc_n(&sc, t, C7_DRAWS).map_err(|err| format!("{label} at t={t:.1e}: {err}"))?;
        let gap = (q.deficit - mc.deficit).abs();
        let allowed = C7_SIGMAS * mc.stderr + q.tail_bound;
        if gap > allowed {
            failures += 1;
        }
        let z = gap / mc.stderr.max(1e-300);
        if z > worst_z {
            worst_z = z;
            worst_label = format!("{label} at t={t:.1e}");
        }
    }
    let ok = worst_limit <= C7_LIMIT_REL_TOL && worst_chain <= C7_CHAIN_REL_TOL && failures == 0;
    Ok((
        ok,
        format!(
            "T2 vs Corollary worst rel.gap {worst_limit:.1e} (tol {C7_LIMIT_REL_TOL:e}); linear-limit chain worst excess {worst_chain:.1e} (tol {C7_CHAIN_REL_TOL:e}); \
             corpus {failures}/{C7_CORPUS_SIZE} outside {C7_SIGMAS}σ+tail bound, largest |gap|/σ = {worst_z:.2} ({worst_label})"
        ),
    ))
}

fn c8_property_suites() -> Outcome {
    let suites: [(&str, Suite, u32); 5] = [
        ("generalized inverse", generalized_inverse_laws, 256),
        ("psi* monotone", psi_star_monotone, 64),
        ("Pruitt sandwich", pruitt_sandwich, 64),
        ("covariance", covariance_symmetry_domination, 256),
        ("self-similarity", stable_self_similarity, 12),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, suite, cases) in suites {
        match suite(cases) {
            Ok(()) => parts.push(format!("{name} ({cases} cases) ok")),
            Err(msg) => {
                ok = false;
                parts.push(format!("{name} FAILED: {msg}"));
            }
        }
    }
    let ks = sampler_ks(C8_KS_DRAWS)?;
    let worst = ks.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    ok &= worst <= C8_KS_TOL;
    parts.push(format!("sampler KS max {worst:.5} over {} laws (tol {C8_KS_TOL})", ks.len()));
    Ok((ok, parts.join("; ")))
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, Criterion, Duration); 8] = [
        (1, "Corollary 1, stable interval", c1_stable_interval, C1_BUDGET),
        (2, "Gaussian endpoint", c2_brownian_interval, C2_BUDGET),
        (3, "disjoint sets, compound Poisson", c3_disjoint_compound_poisson, C3_BUDGET),
        (4, "linear law, symmetric 0.8-stable", c4_stable08_interval, C4_BUDGET),
        (5, "axis-concentrated limit, rectangle", c5_example5_rectangle, C5_BUDGET),
        (6, "density fidelity", c6_density_fidelity, C6_BUDGET * 2),
        (7, "internal cross-checks", c7_cross_checks, C7_BUDGET),
        (8, "property suites", c8_property_suites, C8_BUDGET),
    ];
    let mut all = true;
    for (id, title, run, budget) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let verdict = match outcome {
            Ok((pass, detail)) => {
                let in_time = elapsed <= budget;
                Verdict::new(
                    id,
                    title,
                    pass && in_time,
                    format!("{detail} [{:.1}s of {}s]", elapsed.as_secs_f64(), budget.as_secs()),
                )
            }
            Err(msg) => Verdict::new(id, title, false, format!("error: {msg}")),
        };
        all &= verdict.pass;
        println!("{}", verdict.line());
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
