//! Acceptance criteria, one test each. Every test prints a `PASS`/`FAIL` line
//! before asserting.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::{Duration, Instant};

use pdm_core::demand::{
    bass_mean, bass_variance, demand_moments, effective_spec_at, sbm_replications, PdmParams,
};
use pdm_core::experiment::{
    gap_study, perturb_params, run_study, validate_surface, MisestimationCell, StudyRow, Target,
};
use pdm_core::io::RunConfig;
use pdm_core::solver::{
    chance_bound, draw_samples, optimal_order, saa_objective, solve, solve_by_code_enumeration,
    solve_fixed_price, Scenario, SolveResult,
};
use pdm_core::stats::{exact_expected_profit, DispersionConvention};
use pdm_core::surface::{refine_surface, Domain, Surface};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: &str, ok: bool, detail: &str, elapsed: Duration, limit: Duration) -> bool {
    let in_time = elapsed <= limit;
    let verdict = if ok && in_time { "PASS" } else { "FAIL" };
    // straight to the handle so the verdict shows even when libtest captures output
    let _ = writeln!(
        std::io::stderr(),
        "criterion {id}: {verdict} | {detail} | {:.2}s (limit {}s)",
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    ok && in_time
}

fn bundled_surface() -> Surface {
    refine_surface(&PdmParams::bundled(), Domain::default(), 10).unwrap()
}

fn scenarios() -> Vec<Scenario> {
    RunConfig::default().scenarios()
}

/// Every returned order meets the chance bound under the moments it was
/// planned with.
fn meets_bound(surface: &Surface, scenario: &Scenario, r: &SolveResult) -> bool {
    let (mu, sigma) = surface.eval(r.p_star as f64, r.v_star).unwrap();
    r.o_star >= chance_bound(mu, sigma, scenario.theta).unwrap()
}

#[test]
fn criterion_1_binomial_reduction() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for m in [10.0, 100.0, 1_000.0, 10_000.0, 100_000.0] {
        for alpha in [0.01, 0.1, 0.5, 1.0, 3.0] {
            for t in [0.1, 0.5, 1.0, 2.0, 5.0] {
                let q = -f64::exp_m1(-alpha * t);
                let mean = bass_mean(t, m, alpha, 0.0).unwrap();
                let var = bass_variance(t, m, alpha, 0.0).unwrap();
                worst = worst
                    .max(((mean - m * q) / (m * q)).abs())
                    .max(((var - m * q * (1.0 - q)) / (m * q * (1.0 - q))).abs());
            }
        }
    }
    let ok = report(
        "1",
        worst < 1e-10,
        &format!("125 grid points, worst relative error {worst:.2e} (tol 1e-10)"),
        start.elapsed(),
        Duration::from_secs(1),
    );
    assert!(ok);
}

#[test]
fn criterion_2_clt_validation() {
    let start = Instant::now();
    let mut spec = effective_spec_at(410.0, 0.0, &PdmParams::bundled()).unwrap();
    spec.m_hat = 500.0;
    let draws = sbm_replications(&spec, 1.0, 10_000, 2_024);
    let n = draws.len() as f64;
    let mean = draws.iter().map(|&d| d as f64).sum::<f64>() / n;
    let var = draws
        .iter()
        .map(|&d| (d as f64 - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    let mu = bass_mean(1.0, 500.0, spec.alpha_hat, spec.beta_hat).unwrap();
    let psi = bass_variance(1.0, 500.0, spec.alpha_hat, spec.beta_hat).unwrap();
    let mean_err = ((mean - mu) / mu).abs();
    let var_err = ((var - psi) / psi).abs();
    let ok = report(
        "2",
        mean_err < 0.01 && var_err < 0.10,
        &format!("mean {mean:.3} vs {mu:.3} ({mean_err:.4}), variance {var:.3} vs {psi:.3} ({var_err:.4})"),
        start.elapsed(),
        Duration::from_secs(30),
    );
    assert!(ok);
}

#[test]
fn criterion_3_surface_quality() {
    let start = Instant::now();
    let params = PdmParams::bundled();
    let surface = bundled_surface();
    let v = validate_surface(&surface, &params, 20_000, 7, 0.014).unwrap();
    let factor_ok = (v.dkw_factor - (1.0 - (-7.84f64).exp())).abs() < 1e-12
        && (v.dkw_factor - 0.999606).abs() < 5e-7;
    let _ = writeln!(
        std::io::stderr(),
        "  DKW: P(|mu error| <= {:.6}) >= {:.4}; P(|sigma error| <= {:.6}) >= {:.4}; factor 1 - e^-7.84 = {:.6}",
        v.mu.q95, v.mu.dkw_confidence, v.sigma.q95, v.sigma.dkw_confidence, v.dkw_factor
    );
    let ok = report(
        "3",
        v.mu.q95 <= 0.01 && v.sigma.q95 <= 0.005 && factor_ok && surface.code_width == 10,
        &format!(
            "{} triangles, q95 |mu err| {:.5} (tol 0.01), q95 |sigma err| {:.5} (tol 0.005)",
            surface.triangles.len(),
            v.mu.q95,
            v.sigma.q95
        ),
        start.elapsed(),
        Duration::from_secs(300),
    );
    assert!(ok);
}

#[test]
fn criterion_4_route_equivalence() {
    let start = Instant::now();
    let truth = PdmParams::bundled();
    let biased = perturb_params(
        &truth,
        MisestimationCell {
            target: Target::Gamma,
            multiplier: 0.4,
        },
    );
    let surfaces = [
        bundled_surface(),
        refine_surface(&biased, Domain::default(), 10).unwrap(),
    ];
    let sample = draw_samples(15_000, 1).unwrap();
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    let mut bound_ok = true;
    for surface in &surfaces {
        for sc in scenarios() {
            let a = solve(surface, &sc, &sample).unwrap();
            let b = solve_by_code_enumeration(surface, &sc, &sample).unwrap();
            worst = worst.max(((a.objective - b.objective) / a.objective).abs());
            bound_ok &= meets_bound(surface, &sc, &a) && meets_bound(surface, &sc, &b);
            pairs += 1;
        }
    }
    let ok = report(
        "4",
        pairs == 16 && worst <= 1e-9 && bound_ok,
        &format!("{pairs} pairs, worst relative objective difference {worst:.2e} (tol 1e-9)"),
        start.elapsed(),
        Duration::from_secs(120),
    );
    assert!(ok);
}

#[test]
fn criterion_5_inner_solver_exactness() {
    let start = Instant::now();
    let surface = bundled_surface();
    let sample = draw_samples(15_000, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let all = scenarios();
    let mut worst_shortfall: f64 = f64::NEG_INFINITY;
    for _ in 0..20 {
        let sc = all[rng.random_range(0..all.len())];
        let p = rng.random_range(350..=450);
        let row = solve_fixed_price(p, &surface, &sc, &sample).unwrap();
        let mut best = f64::NEG_INFINITY;
        for i in 0..=10_000 {
            let v = 100.0 * i as f64 / 10_000.0;
            let (mu, sigma) = surface.eval(p as f64, v).unwrap();
            let o = optimal_order(mu, sigma, p as f64, &sc, &sample).unwrap();
            best = best.max(saa_objective(p as f64, v, o, mu, sigma, &sc, &sample));
        }
        worst_shortfall = worst_shortfall.max((best - row.objective) / best.abs());
    }
    let ok = report(
        "5",
        worst_shortfall <= 1e-6,
        &format!("20 instances, worst grid excess over solver {worst_shortfall:.2e} (tol 1e-6)"),
        start.elapsed(),
        Duration::from_secs(60),
    );
    assert!(ok);
}

#[test]
fn criterion_6_gap_study() {
    let start = Instant::now();
    let surface = bundled_surface();
    let sc = Scenario::new(328.0, 0.05);
    let g = gap_study(&surface, &sc, 20, 0.05, DispersionConvention::StandardError).unwrap();
    let first = g.solutions[0].p_star;
    let same = g.solutions.iter().all(|s| s.p_star == first);
    let bound_ok = g.solutions.iter().all(|r| meets_bound(&surface, &sc, r));
    let ok = report(
        "6",
        g.interval.gap_fraction <= 0.05 && same && bound_ok,
        &format!(
            "gap fraction {:.5} (tol 0.05), interval [{:.1}, {:.1}], all p* = {first}: {same}",
            g.interval.gap_fraction, g.interval.lower, g.interval.upper
        ),
        start.elapsed(),
        Duration::from_secs(600),
    );
    assert!(ok);
}

fn study() -> Vec<StudyRow> {
    run_study(&PdmParams::bundled(), &RunConfig::default()).unwrap()
}

fn profit_at(rows: &[StudyRow], id: usize, target: Target, m: f64) -> f64 {
    rows.iter()
        .find(|r| r.scenario_id == id && r.target == target && r.multiplier == m)
        .unwrap()
        .truth
        .expected_profit
}

#[test]
fn criterion_7_misestimation_study() {
    let start = Instant::now();
    let rows = study();
    let constrained = |r: &&StudyRow| r.theta < 1.0;

    let eta_bad: Vec<String> = rows
        .iter()
        .filter(constrained)
        .filter(|r| r.target == Target::Eta && !r.truth.feasible)
        .map(|r| {
            format!(
                "c={} theta={} x{} margin {:.3}%",
                r.cost,
                r.theta,
                r.multiplier,
                r.truth.feasibility_margin_pct.unwrap_or(f64::NAN)
            )
        })
        .collect();
    let gamma_bad: Vec<String> = rows
        .iter()
        .filter(constrained)
        .filter(|r| r.target == Target::Gamma && r.multiplier != 1.0)
        .filter(|r| (r.multiplier < 1.0) == r.truth.feasible)
        .map(|r| format!("c={} theta={} x{}", r.cost, r.theta, r.multiplier))
        .collect();

    let mut series: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    for r in &rows {
        series.insert(r.scenario_id, (r.cost, r.theta));
    }
    let eta_order_bad: Vec<String> = series
        .iter()
        .filter(|(&id, _)| {
            profit_at(&rows, id, Target::Eta, 1.6) <= profit_at(&rows, id, Target::Eta, 0.4)
        })
        .map(|(_, (c, t))| format!("c={c} theta={t}"))
        .collect();
    let gamma_order_bad: Vec<String> = series
        .iter()
        .filter(|(_, (_, t))| *t == 1.0)
        .filter(|(&id, _)| {
            profit_at(&rows, id, Target::Gamma, 0.4) <= profit_at(&rows, id, Target::Gamma, 1.6)
        })
        .map(|(&id, (c, _))| {
            format!(
                "c={c}: x0.4 {:.0} vs x1.6 {:.0}",
                profit_at(&rows, id, Target::Gamma, 0.4),
                profit_at(&rows, id, Target::Gamma, 1.6)
            )
        })
        .collect();

    let elapsed = start.elapsed();
    let limit = Duration::from_secs(1_800);
    let a = report(
        "7a",
        eta_bad.is_empty(),
        &format!("eta rows infeasible: {eta_bad:?}"),
        elapsed,
        limit,
    );
    let b = report(
        "7b",
        gamma_bad.is_empty(),
        &format!("gamma rows on the wrong side: {gamma_bad:?}"),
        elapsed,
        limit,
    );
    let c = report(
        "7c",
        eta_order_bad.is_empty(),
        &format!("series where eta x1.6 <= x0.4: {eta_order_bad:?}"),
        elapsed,
        limit,
    );
    let d = report(
        "7d",
        gamma_order_bad.is_empty(),
        &format!("theta=1 series where gamma x0.4 <= x1.6: {gamma_order_bad:?}"),
        elapsed,
        limit,
    );
    assert_eq!(rows.len(), 80);
    assert!(a && b && c && d, "misestimation orderings not reproduced");
}

#[test]
fn criterion_8_exact_profit_matches_saa() {
    let start = Instant::now();
    let sample = draw_samples(1_000_000, 8).unwrap();
    let params = PdmParams::bundled();
    // decisions with material profit; a relative tolerance means nothing near zero
    let decisions = [
        (350.0, 60.0, 246.0, 1.0),
        (370.0, 25.0, 246.0, 0.5),
        (392.0, 100.0, 246.0, 0.05),
        (400.0, 50.0, 246.0, 0.25),
        (410.0, 40.0, 328.0, 1.0),
        (416.0, 100.0, 328.0, 0.5),
        (425.0, 10.0, 328.0, 0.25),
        (435.0, 100.0, 328.0, 0.05),
        (445.0, 75.0, 328.0, 1.0),
        (450.0, 100.0, 246.0, 0.05),
    ];
    let mut worst: f64 = 0.0;
    for (p, v, cost, theta) in decisions {
        let sc = Scenario::new(cost, theta);
        let d = demand_moments(p, v, &params).unwrap();
        let o = optimal_order(d.mu, d.sigma, p, &sc, &sample).unwrap();
        let exact = exact_expected_profit(p, v, o, d.mu, d.sigma, &sc).unwrap();
        let saa = saa_objective(p, v, o, d.mu, d.sigma, &sc, &sample);
        worst = worst.max(((exact - saa) / exact).abs());
    }
    let ok = report(
        "8",
        worst < 0.005,
        &format!("10 decision points, N = 1e6, worst relative difference {worst:.2e} (tol 5e-3)"),
        start.elapsed(),
        Duration::from_secs(60),
    );
    assert!(ok);
}

#[test]
fn criterion_9_feasibility_is_constructed() {
    let start = Instant::now();
    let truth = PdmParams::bundled();
    let config = RunConfig::default();
    let rows = study();
    let sign_ok = rows.iter().all(|r| match r.truth.feasibility_margin_pct {
        Some(m) => (m >= 0.0) == r.truth.feasible,
        None => r.truth.feasible,
    });
    // re-solve every study cell and check the bound under the planning surface
    let mut surfaces: Vec<((Target, f64), Surface)> = Vec::new();
    let mut bound_ok = true;
    let sample = draw_samples(config.samples, config.seed).unwrap();
    for target in [Target::Eta, Target::Gamma] {
        for &m in &config.multipliers {
            let biased = perturb_params(
                &truth,
                MisestimationCell {
                    target,
                    multiplier: m,
                },
            );
            surfaces.push((
                (target, m),
                refine_surface(&biased, config.domain(), config.bits).unwrap(),
            ));
        }
    }
    for r in &rows {
        let surface = &surfaces
            .iter()
            .find(|s| s.0 == (r.target, r.multiplier))
            .unwrap()
            .1;
        let sc = config.scenarios()[r.scenario_id];
        let result = SolveResult {
            p_star: r.p_star,
            v_star: r.v_star,
            o_star: r.o_star,
            objective: r.saa_objective,
            per_price: vec![],
        };
        bound_ok &= meets_bound(surface, &sc, &result);
        bound_ok &= solve(surface, &sc, &sample).unwrap().o_star == r.o_star;
    }
    let ok = report(
        "9",
        sign_ok && bound_ok,
        &format!("80 rows: margin sign matches flag {sign_ok}, planned orders meet planned bound {bound_ok}"),
        start.elapsed(),
        Duration::from_secs(1_800),
    );
    assert!(ok);
}
