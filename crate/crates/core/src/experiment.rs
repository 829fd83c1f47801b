//! Parameter-misestimation study and the validation drivers.
//!
//! A study cell scales either the price sensitivity or both advertising
//! responses, rebuilds the surface under those biased beliefs, solves, and
//! scores the decision with the exact moments of the unscaled parameters.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::demand::{demand_moments, PdmParams};
use crate::error::{Error, Result};
use crate::io::{params_hash, RunConfig};
use crate::solver::{chance_bound, draw_samples, solve, Scenario, SolveResult};
use crate::stats::{
    dkw_lower_bound, exact_expected_profit, optimality_gap_ci, DispersionConvention, EmpiricalCdf,
    GapInterval, GapStudy,
};
use crate::surface::{refine_surface, Domain, Surface};

pub const DEFAULT_MULTIPLIERS: [f64; 5] = [0.4, 0.7, 1.0, 1.3, 1.6];

/// Which belief is misestimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// Price sensitivity exponent.
    Eta,
    /// Advertising effect on participation and on induction, scaled together.
    Gamma,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::Eta => "eta",
            Target::Gamma => "gamma",
        })
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eta" => Ok(Target::Eta),
            "gamma" => Ok(Target::Gamma),
            _ => Err(Error::InvalidArgument(format!("unknown target '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MisestimationCell {
    pub target: Target,
    pub multiplier: f64,
}

pub fn perturb_params(true_params: &PdmParams, cell: MisestimationCell) -> PdmParams {
    let mut p = *true_params;
    match cell.target {
        Target::Eta => p.eta *= cell.multiplier,
        Target::Gamma => {
            p.gamma_p *= cell.multiplier;
            p.gamma_b *= cell.multiplier;
        }
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthEvaluation {
    pub expected_profit: f64,
    /// Chance bound under the true moments; absent without a service level.
    pub min_feasible_order: Option<f64>,
    pub feasibility_margin_pct: Option<f64>,
    pub feasible: bool,
}

/// Margin of `order` over `min_order` in percent.
pub fn margin_pct(order: f64, min_order: f64) -> f64 {
    (order - min_order) / min_order * 100.0
}

/// Exact profit and service-level check of a decision under `true_params`.
pub fn evaluate_under_truth(
    result: &SolveResult,
    true_params: &PdmParams,
    scenario: &Scenario,
) -> Result<TruthEvaluation> {
    let p = result.p_star as f64;
    let d = demand_moments(p, result.v_star, true_params)?;
    let expected_profit =
        exact_expected_profit(p, result.v_star, result.o_star, d.mu, d.sigma, scenario)?;
    if scenario.theta >= 1.0 {
        return Ok(TruthEvaluation {
            expected_profit,
            min_feasible_order: None,
            feasibility_margin_pct: None,
            feasible: true,
        });
    }
    let min_order = chance_bound(d.mu, d.sigma, scenario.theta)?;
    let margin = (min_order > 0.0).then(|| margin_pct(result.o_star, min_order));
    Ok(TruthEvaluation {
        expected_profit,
        min_feasible_order: Some(min_order),
        feasibility_margin_pct: margin,
        feasible: margin.map_or(result.o_star >= min_order, |m| m >= 0.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub scenario_id: usize,
    pub cost: f64,
    pub theta: f64,
    pub target: Target,
    pub multiplier: f64,
    pub p_star: i64,
    pub v_star: f64,
    pub o_star: f64,
    pub saa_objective: f64,
    pub truth: TruthEvaluation,
}

fn cell_name(id: usize, s: &Scenario, cell: &MisestimationCell) -> String {
    format!(
        "scenario {id} (cost {}, theta {}), {} x{}",
        s.cost, s.theta, cell.target, cell.multiplier
    )
}

/// Every scenario against every target and multiplier, ordered by scenario,
/// then target, then multiplier as configured.
pub fn run_study(true_params: &PdmParams, config: &RunConfig) -> Result<Vec<StudyRow>> {
    config.validate()?;
    true_params.validate()?;
    let scenarios = config.scenarios();
    let cells: Vec<MisestimationCell> = config
        .targets
        .iter()
        .flat_map(|&target| {
            config
                .multipliers
                .iter()
                .map(move |&multiplier| MisestimationCell { target, multiplier })
        })
        .collect();

    // cells with identical biased parameters share one surface
    let mut beliefs: HashMap<String, PdmParams> = HashMap::new();
    for cell in &cells {
        let p = perturb_params(true_params, *cell);
        beliefs.entry(params_hash(&p)).or_insert(p);
    }
    let mut keys: Vec<&String> = beliefs.keys().collect();
    keys.sort();
    let domain = config.domain();
    let built = keys
        .par_iter()
        .map(|&k| refine_surface(&beliefs[k], domain, config.bits).map(|s| (k.clone(), s)))
        .collect::<Result<Vec<_>>>()?;
    let surfaces: HashMap<String, Surface> = built.into_iter().collect();

    let mut samples = HashMap::new();
    for s in &scenarios {
        if let Entry::Vacant(slot) = samples.entry((s.samples, s.seed)) {
            slot.insert(draw_samples(s.samples, s.seed)?);
        }
    }

    let jobs: Vec<(usize, &Scenario, &MisestimationCell)> = scenarios
        .iter()
        .enumerate()
        .flat_map(|(id, s)| cells.iter().map(move |c| (id, s, c)))
        .collect();
    jobs.par_iter()
        .map(|&(id, scenario, cell)| {
            let wrap = |e: Error| Error::Cell {
                cell: cell_name(id, scenario, cell),
                source: Box::new(e),
            };
            let surface = &surfaces[&params_hash(&perturb_params(true_params, *cell))];
            let sample = &samples[&(scenario.samples, scenario.seed)];
            let result = solve(surface, scenario, sample).map_err(wrap)?;
            let truth = evaluate_under_truth(&result, true_params, scenario).map_err(wrap)?;
            Ok(StudyRow {
                scenario_id: id,
                cost: scenario.cost,
                theta: scenario.theta,
                target: cell.target,
                multiplier: cell.multiplier,
                p_star: result.p_star,
                v_star: result.v_star,
                o_star: result.o_star,
                saa_objective: result.objective,
                truth,
            })
        })
        .collect()
}

fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| v.to_string())
}

pub const STUDY_CSV_HEADER: &str = "scenario_id,cost,theta,target,multiplier,p_star,v_star,o_star,saa_objective,true_profit,min_feasible_order,margin_pct,feasible";

pub fn study_csv(rows: &[StudyRow]) -> String {
    let mut out = String::from(STUDY_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.scenario_id,
            r.cost,
            r.theta,
            r.target,
            r.multiplier,
            r.p_star,
            r.v_star,
            r.o_star,
            r.saa_objective,
            r.truth.expected_profit,
            opt(r.truth.min_feasible_order),
            opt(r.truth.feasibility_margin_pct),
            r.truth.feasible
        );
    }
    out
}

/// One line of a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Profit,
    Margin,
}

/// One series per (cost, theta) for `target`; margin charts leave out
/// scenarios without a service level.
pub fn figure_series(rows: &[StudyRow], target: Target, metric: Metric) -> Vec<Series> {
    let mut order: Vec<(usize, f64, f64)> = Vec::new();
    for r in rows {
        if !order.iter().any(|o| o.0 == r.scenario_id) {
            order.push((r.scenario_id, r.cost, r.theta));
        }
    }
    order
        .into_iter()
        .filter_map(|(id, cost, theta)| {
            let mut points: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.scenario_id == id && r.target == target)
                .filter_map(|r| match metric {
                    Metric::Profit => Some((r.multiplier, r.truth.expected_profit)),
                    Metric::Margin => r.truth.feasibility_margin_pct.map(|m| (r.multiplier, m)),
                })
                .collect();
            if points.is_empty() {
                return None;
            }
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Some(Series {
                label: format!("c={cost}, theta={theta}"),
                points,
            })
        })
        .collect()
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Line chart as a standalone SVG document.
pub fn render_line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h) = (720.0, 460.0);
    let (left, right, top, bottom) = (90.0, 200.0, 40.0, 60.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        w / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        h - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{}" text-anchor="middle" transform="rotate(-90 20 {})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        escape(y_label)
    );

    let pts = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="16">no data</text>"#,
            left + pw / 2.0,
            top + ph / 2.0
        );
        svg.push_str("</svg>\n");
        return svg;
    }
    if x1 == x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let pad = if y1 > y0 {
        0.05 * (y1 - y0)
    } else {
        y0.abs().max(1.0) * 0.05
    };
    y0 -= pad;
    y1 += pad;
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + ph - (y - y0) / (y1 - y0) * ph;

    for k in 0..=4 {
        let y = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(
            svg,
            r##"<line x1="{left}" y1="{py:.2}" x2="{}" y2="{py:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
            left + pw,
            left - 6.0,
            sy(y) + 4.0,
            format_tick(y),
            py = sy(y)
        );
    }
    let mut xs: Vec<f64> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    for x in xs {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            sx(x),
            top + ph + 18.0,
            x
        );
    }
    if y0 < 0.0 && y1 > 0.0 {
        let _ = writeln!(
            svg,
            r##"<line x1="{left}" y1="{py:.2}" x2="{}" y2="{py:.2}" stroke="#333" stroke-dasharray="4 3"/>"##,
            left + pw,
            py = sy(0.0)
        );
    }
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            path.join(" ")
        );
        for &(x, y) in &s.points {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                sx(x),
                sy(y)
            );
        }
        let ly = top + 10.0 + 18.0 * i as f64;
        let lx = left + pw + 15.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn format_tick(y: f64) -> String {
    if y.abs() >= 1000.0 {
        format!("{y:.0}")
    } else {
        format!("{y:.2}")
    }
}

/// Paths and series counts of the written report.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureReport {
    pub csv: PathBuf,
    pub figures: Vec<(PathBuf, usize)>,
}

/// Write `study.csv` and four charts into `out_dir`.
pub fn emit_figures(rows: &[StudyRow], out_dir: &Path) -> Result<FigureReport> {
    fs::create_dir_all(out_dir)?;
    let csv = out_dir.join("study.csv");
    fs::write(&csv, study_csv(rows))?;
    let specs = [
        (
            "profit_eta.svg",
            Target::Eta,
            Metric::Profit,
            "Expected profit when optimizing over different values of eta",
        ),
        (
            "margin_eta.svg",
            Target::Eta,
            Metric::Margin,
            "Percentage from minimum feasible order, eta misestimated",
        ),
        (
            "profit_gamma.svg",
            Target::Gamma,
            Metric::Profit,
            "Expected profit when optimizing over different values of gamma",
        ),
        (
            "margin_gamma.svg",
            Target::Gamma,
            Metric::Margin,
            "Percentage from minimum feasible order, gamma misestimated",
        ),
    ];
    let mut figures = Vec::new();
    for (name, target, metric, title) in specs {
        let series = figure_series(rows, target, metric);
        let y_label = match metric {
            Metric::Profit => "expected profit under true parameters",
            Metric::Margin => "(o* - min order) / min order x 100",
        };
        let svg = render_line_chart(title, &format!("{target} multiplier"), y_label, &series);
        let path = out_dir.join(name);
        fs::write(&path, svg)?;
        figures.push((path, series.len()));
    }
    Ok(FigureReport { csv, figures })
}

/// Replicated SAA solves of one scenario and the resulting gap interval.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub solutions: Vec<SolveResult>,
    pub saa_values: Vec<f64>,
    pub true_values: Vec<f64>,
    pub interval: GapInterval,
}

/// Solve `replications` independent SAA instances (seeds `seed + i`) and
/// score each decision with the normal-model profit on the surface.
pub fn gap_study(
    surface: &Surface,
    scenario: &Scenario,
    replications: usize,
    alpha: f64,
    convention: DispersionConvention,
) -> Result<GapReport> {
    if replications < 2 {
        return Err(Error::InvalidArgument(
            "need at least 2 replications".into(),
        ));
    }
    let solutions = (0..replications as u64)
        .into_par_iter()
        .map(|i| {
            let sample = draw_samples(scenario.samples, scenario.seed.wrapping_add(i))?;
            solve(surface, scenario, &sample)
        })
        .collect::<Result<Vec<_>>>()?;
    // scored with the surface moments the solver saw, so only sampling error remains
    let mut true_values = Vec::with_capacity(replications);
    for r in &solutions {
        let (mu, sigma) = surface.eval(r.p_star as f64, r.v_star)?;
        true_values.push(exact_expected_profit(
            r.p_star as f64,
            r.v_star,
            r.o_star,
            mu,
            sigma,
            scenario,
        )?);
    }
    let saa_values: Vec<f64> = solutions.iter().map(|r| r.objective).collect();
    let interval = optimality_gap_ci(
        &GapStudy {
            saa_values: saa_values.clone(),
            true_values: true_values.clone(),
            alpha,
        },
        convention,
    )?;
    Ok(GapReport {
        solutions,
        saa_values,
        true_values,
        interval,
    })
}

/// Percentage-error distribution of one moment over the validation sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSummary {
    pub q95: f64,
    pub max: f64,
    /// DKW lower bound on `P(|error| <= q95)`.
    pub dkw_confidence: f64,
    /// Smallest error level certified with probability 0.95 by DKW, if any.
    pub dkw_threshold_95: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceValidation {
    pub samples: usize,
    pub epsilon: f64,
    /// `1 - exp(-2 n epsilon^2)`.
    pub dkw_factor: f64,
    pub mu: ErrorSummary,
    pub sigma: ErrorSummary,
}

pub const VALIDATION_EPSILON: f64 = 0.014;

fn summarize(errors: Vec<f64>, epsilon: f64) -> Result<ErrorSummary> {
    let cdf = EmpiricalCdf::new(errors)?;
    let q95 = cdf.quantile(0.95);
    Ok(ErrorSummary {
        q95,
        max: *cdf.samples().last().expect("non-empty"),
        dkw_confidence: dkw_lower_bound(cdf.eval(q95), cdf.len(), epsilon)?,
        dkw_threshold_95: cdf.dkw_threshold(0.95, epsilon)?,
    })
}

/// Absolute relative errors of the surface at `samples` uniform points of the
/// domain.
pub fn validate_surface(
    surface: &Surface,
    params: &PdmParams,
    samples: usize,
    seed: u64,
    epsilon: f64,
) -> Result<SurfaceValidation> {
    if samples == 0 {
        return Err(Error::InvalidArgument(
            "need at least one validation sample".into(),
        ));
    }
    let Domain {
        p_min,
        p_max,
        v_max,
    } = surface.domain;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<(f64, f64)> = (0..samples)
        .map(|_| {
            (
                rng.random_range(p_min..=p_max),
                rng.random_range(0.0..=v_max),
            )
        })
        .collect();
    let errors = points
        .par_iter()
        .map(|&(p, v)| surface.percentage_error(params, p, v))
        .collect::<Result<Vec<_>>>()?;
    let mu = summarize(errors.iter().map(|e| e.0.abs()).collect(), epsilon)?;
    let sigma = summarize(errors.iter().map(|e| e.1.abs()).collect(), epsilon)?;
    Ok(SurfaceValidation {
        samples,
        epsilon,
        dkw_factor: -(-2.0 * samples as f64 * epsilon * epsilon).exp_m1(),
        mu,
        sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: usize, theta: f64, target: Target, m: f64, margin: Option<f64>) -> StudyRow {
        StudyRow {
            scenario_id: id,
            cost: 246.0,
            theta,
            target,
            multiplier: m,
            p_star: 400,
            v_star: 10.0,
            o_star: 100.0,
            saa_objective: 1.0,
            truth: TruthEvaluation {
                expected_profit: 1000.0 * m,
                min_feasible_order: margin.map(|_| 90.0),
                feasibility_margin_pct: margin,
                feasible: margin.is_none_or(|x| x >= 0.0),
            },
        }
    }

    #[test]
    fn perturbation_examples() {
        let t = PdmParams::bundled();
        assert_eq!(
            perturb_params(
                &t,
                MisestimationCell {
                    target: Target::Eta,
                    multiplier: 1.0
                }
            ),
            t
        );
        let e = perturb_params(
            &t,
            MisestimationCell {
                target: Target::Eta,
                multiplier: 0.4,
            },
        );
        assert!((e.eta - 2.4872).abs() < 1e-12);
        assert_eq!(PdmParams { eta: t.eta, ..e }, t);
        let g = perturb_params(
            &t,
            MisestimationCell {
                target: Target::Gamma,
                multiplier: 1.6,
            },
        );
        assert!((g.gamma_p - 0.0155936).abs() < 1e-12);
        assert!((g.gamma_b - 0.59264).abs() < 1e-12);
        assert_eq!(
            PdmParams {
                gamma_p: t.gamma_p,
                gamma_b: t.gamma_b,
                ..g
            },
            t
        );
    }

    #[test]
    fn margin_arithmetic() {
        assert_eq!(margin_pct(100.0, 100.0), 0.0);
        assert!((margin_pct(110.0, 100.0) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn truth_evaluation_of_exact_bound_is_feasible() {
        let params = PdmParams::bundled();
        let sc = Scenario::new(246.0, 0.05);
        let d = demand_moments(400.0, 20.0, &params).unwrap();
        let o = chance_bound(d.mu, d.sigma, 0.05).unwrap();
        let r = SolveResult {
            p_star: 400,
            v_star: 20.0,
            o_star: o,
            objective: 0.0,
            per_price: vec![],
        };
        let t = evaluate_under_truth(&r, &params, &sc).unwrap();
        assert_eq!(t.feasibility_margin_pct, Some(0.0));
        assert!(t.feasible);
        let sc1 = Scenario::new(246.0, 1.0);
        let t1 = evaluate_under_truth(&r, &params, &sc1).unwrap();
        assert_eq!(
            (
                t1.min_feasible_order,
                t1.feasibility_margin_pct,
                t1.feasible
            ),
            (None, None, true)
        );
        assert_eq!(t1.expected_profit, t.expected_profit);
    }

    #[test]
    fn series_counts_and_no_data() {
        let mut rows = Vec::new();
        for (id, theta) in [(0, 1.0), (1, 0.05)] {
            for target in [Target::Eta, Target::Gamma] {
                for m in DEFAULT_MULTIPLIERS {
                    let margin = (theta < 1.0).then_some(5.0 - m);
                    rows.push(row(id, theta, target, m, margin));
                }
            }
        }
        assert_eq!(figure_series(&rows, Target::Eta, Metric::Profit).len(), 2);
        let margin = figure_series(&rows, Target::Eta, Metric::Margin);
        assert_eq!(margin.len(), 1);
        assert_eq!(margin[0].points.len(), 5);
        let only_free: Vec<StudyRow> = rows.iter().filter(|r| r.theta == 1.0).cloned().collect();
        assert!(figure_series(&only_free, Target::Gamma, Metric::Margin).is_empty());
        let svg = render_line_chart("t", "x", "y", &[]);
        assert!(svg.contains("no data"));
        let svg = render_line_chart(
            "a < b",
            "x",
            "y",
            &figure_series(&rows, Target::Eta, Metric::Profit),
        );
        assert!(svg.contains("a &lt; b") && svg.matches("<polyline").count() == 2);
    }

    #[test]
    fn csv_leaves_missing_margins_empty() {
        let rows = vec![
            row(0, 1.0, Target::Eta, 0.4, None),
            row(1, 0.5, Target::Gamma, 1.6, Some(-2.5)),
        ];
        let csv = study_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], STUDY_CSV_HEADER);
        assert!(lines[1].ends_with(",,,true"));
        assert!(lines[2].ends_with(",90,-2.5,false"));
    }

    #[test]
    fn emitted_report_is_reproducible() {
        let rows = vec![
            row(0, 0.5, Target::Eta, 0.4, Some(1.0)),
            row(0, 0.5, Target::Eta, 1.6, Some(2.0)),
        ];
        let dir = tempfile::tempdir().unwrap();
        let a = emit_figures(&rows, dir.path()).unwrap();
        let first = fs::read(&a.csv).unwrap();
        let b = emit_figures(&rows, dir.path()).unwrap();
        assert_eq!(first, fs::read(&b.csv).unwrap());
        assert_eq!(
            a.figures.iter().map(|f| f.1).collect::<Vec<_>>(),
            vec![1, 1, 0, 0]
        );
        assert!(fs::read_to_string(&a.figures[2].0)
            .unwrap()
            .contains("no data"));
    }

    #[test]
    fn unit_grid_study_is_feasible() {
        let config = RunConfig {
            multipliers: vec![1.0],
            ..RunConfig::default()
        };
        let rows = run_study(&PdmParams::bundled(), &config).unwrap();
        assert_eq!(rows.len(), 8 * 2);
        for r in &rows {
            if r.theta < 1.0 {
                assert!(r.truth.feasibility_margin_pct.unwrap() > -0.5, "{r:?}");
            }
        }
        assert_eq!(rows, run_study(&PdmParams::bundled(), &config).unwrap());
    }

    #[test]
    fn target_names_round_trip() {
        for t in [Target::Eta, Target::Gamma] {
            assert_eq!(t.to_string().parse::<Target>().unwrap(), t);
        }
        assert!("pi".parse::<Target>().is_err());
    }
}
