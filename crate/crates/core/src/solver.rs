//! Sample average approximation of the chance-constrained planning problem.
//!
//! For a fixed integer price the SAA problem separates: the order that
//! maximizes the sample objective is a fixed multiple `w*` of `sigma` above
//! `mu`, where `w*` is the larger of the service-level quantile and the
//! critical-ratio order statistic of the normal sample. With `mu_hat` and
//! `sigma_hat` affine inside each surface triangle, the objective along the
//! line `price = p` is piecewise affine in advertising, so its maximum sits at
//! a triangle-slice endpoint. The only exception is a stretch where the order
//! clamps at zero; there the objective is concave and is maximized by
//! golden-section search.
//!
//! [`solve`] sweeps prices and locates breakpoints through the surface;
//! [`solve_by_code_enumeration`] walks the triangle codes and evaluates each
//! affine patch directly. The two must agree.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::normal_quantile;
use crate::surface::Surface;

/// One economic instance of the planning problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub cost: f64,
    pub salvage: f64,
    pub theta: f64,
    pub p_min: i64,
    pub p_max: i64,
    pub v_max: f64,
    pub samples: usize,
    pub seed: u64,
    /// Money units charged per unit of advertising in the objective.
    pub ad_cost_scale: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            cost: 246.0,
            salvage: 24.6,
            theta: 0.05,
            p_min: 350,
            p_max: 450,
            v_max: 100.0,
            samples: 15_000,
            seed: 1,
            ad_cost_scale: 1.0,
        }
    }
}

impl Scenario {
    /// Default bounds with salvage at a tenth of the unit cost.
    pub fn new(cost: f64, theta: f64) -> Self {
        Scenario {
            cost,
            salvage: 0.1 * cost,
            theta,
            ..Scenario::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.salvage >= 0.0
            && self.salvage < self.cost
            && self.cost < self.p_max as f64
            && self.p_min <= self.p_max
            && self.p_min > 0
            && self.v_max > 0.0
            && self.samples >= 1
            && self.theta > 0.0
            && self.theta <= 1.0
            && self.ad_cost_scale >= 0.0;
        if self.theta == 0.0 {
            return Err(Error::InfeasibleServiceLevel);
        }
        if !ok {
            return Err(Error::InvalidArgument(format!("invalid scenario {self:?}")));
        }
        Ok(())
    }
}

/// Sorted standard-normal draws shared by every candidate of one SAA instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SaaSample {
    pub seed: u64,
    z: Vec<f64>,
    prefix: Vec<f64>,
}

impl SaaSample {
    pub fn from_draws(seed: u64, mut z: Vec<f64>) -> Self {
        z.sort_by(f64::total_cmp);
        let mut prefix = Vec::with_capacity(z.len() + 1);
        let mut acc = 0.0;
        prefix.push(acc);
        for &x in &z {
            acc += x;
            prefix.push(acc);
        }
        SaaSample { seed, z, prefix }
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.z
    }

    /// `k`-th order statistic, 1-based.
    pub fn order_statistic(&self, k: usize) -> f64 {
        self.z[k - 1]
    }

    /// Sample mean of `min(w, z_j)`.
    pub fn mean_min(&self, w: f64) -> f64 {
        let n = self.z.len();
        let k = self.z.partition_point(|&z| z < w);
        let capped = if k < n { w * (n - k) as f64 } else { 0.0 };
        (self.prefix[k] + capped) / n as f64
    }
}

/// `n` seeded standard-normal draws, sorted.
pub fn draw_samples(n: usize, seed: u64) -> Result<SaaSample> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample size must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    Ok(SaaSample::from_draws(seed, z))
}

/// Smallest order meeting demand with probability `1 - theta`; zero when
/// `theta = 1` leaves only `o >= 0`.
pub fn chance_bound(mu: f64, sigma: f64, theta: f64) -> Result<f64> {
    if theta == 0.0 {
        return Err(Error::InfeasibleServiceLevel);
    }
    if !(theta > 0.0 && theta <= 1.0) || sigma < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "chance bound needs theta in (0, 1] and sigma >= 0 (theta = {theta}, sigma = {sigma})"
        )));
    }
    if theta == 1.0 {
        return Ok(0.0);
    }
    Ok(mu + sigma * normal_quantile(1.0 - theta)?)
}

/// Index `k = ceil(N (p - c) / (p - s))`, clamped to `[1, N]`, of the order
/// statistic at the newsvendor critical ratio.
pub fn critical_index(p: f64, scenario: &Scenario, n: usize) -> usize {
    let ratio = (p - scenario.cost) / (p - scenario.salvage);
    ((n as f64 * ratio).ceil() as usize).clamp(1, n)
}

/// Standardized optimal order `w*`: the order is `max(0, mu + sigma w*)`, or
/// zero when neither the service level nor the margin asks for stock.
pub fn order_multiplier(p: f64, scenario: &Scenario, sample: &SaaSample) -> Result<Option<f64>> {
    let service = if scenario.theta < 1.0 {
        Some(chance_bound(0.0, 1.0, scenario.theta)?)
    } else if scenario.theta == 1.0 {
        None
    } else {
        return Err(Error::InvalidArgument(format!(
            "theta = {}",
            scenario.theta
        )));
    };
    let newsvendor = (p > scenario.cost)
        .then(|| sample.order_statistic(critical_index(p, scenario, sample.len())));
    Ok(match (service, newsvendor) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (a, b) => a.or(b),
    })
}

fn order_from_multiplier(mu: f64, sigma: f64, w: Option<f64>) -> f64 {
    w.map_or(0.0, |w| (mu + sigma * w).max(0.0))
}

/// Order maximizing the SAA objective at fixed price and moments, subject to
/// the chance constraint.
pub fn optimal_order(
    mu: f64,
    sigma: f64,
    p: f64,
    scenario: &Scenario,
    sample: &SaaSample,
) -> Result<f64> {
    if sigma < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "sigma = {sigma} is negative"
        )));
    }
    Ok(order_from_multiplier(
        mu,
        sigma,
        order_multiplier(p, scenario, sample)?,
    ))
}

/// SAA objective with every `r_j` at its optimum `min(o, mu + sigma z_j)`.
pub fn saa_objective(
    p: f64,
    v: f64,
    o: f64,
    mu_hat: f64,
    sigma_hat: f64,
    scenario: &Scenario,
    sample: &SaaSample,
) -> f64 {
    let sales = if sigma_hat > 0.0 {
        mu_hat + sigma_hat * sample.mean_min((o - mu_hat) / sigma_hat)
    } else {
        o.min(mu_hat)
    };
    (p - scenario.salvage) * sales + (scenario.salvage - scenario.cost) * o
        - scenario.ad_cost_scale * v
}

/// Best advertising and order at one price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceRow {
    pub p: i64,
    pub v: f64,
    pub o: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub p_star: i64,
    pub v_star: f64,
    pub o_star: f64,
    pub objective: f64,
    pub per_price: Vec<PriceRow>,
}

fn better(a: &PriceRow, b: &PriceRow) -> bool {
    a.objective > b.objective
        || (a.objective == b.objective && (a.p < b.p || (a.p == b.p && a.v < b.v)))
}

struct Evaluator<'a> {
    p: f64,
    pi: i64,
    w: Option<f64>,
    scenario: &'a Scenario,
    sample: &'a SaaSample,
}

impl Evaluator<'_> {
    fn row(&self, v: f64, mu: f64, sigma: f64) -> PriceRow {
        let o = order_from_multiplier(mu, sigma, self.w);
        PriceRow {
            p: self.pi,
            v,
            o,
            objective: saa_objective(self.p, v, o, mu, sigma, self.scenario, self.sample),
        }
    }

    /// Best row on `[a, b]`, given moments along the segment are affine.
    /// Endpoints always compete; a stretch where the order clamps at zero is
    /// searched because the objective is concave, not affine, there.
    fn segment(
        &self,
        a: f64,
        b: f64,
        moments: impl Fn(f64) -> (f64, f64),
        best: &mut Option<PriceRow>,
    ) {
        let mut offer = |row: PriceRow| {
            if best.as_ref().is_none_or(|cur| better(&row, cur)) {
                *best = Some(row);
            }
        };
        let (mu_a, s_a) = moments(a);
        let (mu_b, s_b) = moments(b);
        offer(self.row(a, mu_a, s_a));
        offer(self.row(b, mu_b, s_b));
        if b <= a {
            return;
        }
        let (lo, hi) = match self.w {
            None => (a, b),
            Some(w) => {
                let ga = mu_a + s_a * w;
                let gb = mu_b + s_b * w;
                if ga >= 0.0 && gb >= 0.0 {
                    return;
                }
                if ga < 0.0 && gb < 0.0 {
                    (a, b)
                } else {
                    let cross = a + (b - a) * ga / (ga - gb);
                    if ga < 0.0 {
                        (a, cross)
                    } else {
                        (cross, b)
                    }
                }
            }
        };
        let f = |v: f64| {
            let (mu, sigma) = moments(v);
            self.row(v, mu, sigma)
        };
        offer(f(lo));
        offer(f(hi));
        let v = golden_max(lo, hi, |v| f(v).objective);
        offer(f(v));
    }
}

fn golden_max(mut a: f64, mut b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..120 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
        if b - a <= 1e-12 * b.abs().max(1.0) {
            break;
        }
    }
    0.5 * (a + b)
}

fn check_inputs(surface: &Surface, scenario: &Scenario, sample: &SaaSample) -> Result<()> {
    scenario.validate()?;
    if sample.is_empty() {
        return Err(Error::InvalidArgument("empty SAA sample".into()));
    }
    let d = &surface.domain;
    if (scenario.p_min as f64) < d.p_min
        || (scenario.p_max as f64) > d.p_max
        || scenario.v_max > d.v_max
    {
        return Err(Error::InvalidArgument(format!(
            "scenario bounds exceed the surface domain {d:?}"
        )));
    }
    Ok(())
}

/// Exact maximizer over advertising and order at one integer price, by
/// evaluating every triangle-slice endpoint along `price = p` through point
/// location.
pub fn solve_fixed_price(
    p: i64,
    surface: &Surface,
    scenario: &Scenario,
    sample: &SaaSample,
) -> Result<PriceRow> {
    if p < scenario.p_min || p > scenario.p_max {
        return Err(Error::InvalidArgument(format!(
            "price {p} outside [{}, {}]",
            scenario.p_min, scenario.p_max
        )));
    }
    let pf = p as f64;
    let mut breaks: Vec<f64> = (0..surface.triangles.len())
        .filter_map(|t| surface.slice_at_price(t, pf))
        .flat_map(|(lo, hi)| [lo, hi])
        // slices are clipped to the advertising bound of the scenario
        .filter(|&v| v <= scenario.v_max)
        .collect();
    breaks.push(scenario.v_max);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let eval = Evaluator {
        p: pf,
        pi: p,
        w: order_multiplier(pf, scenario, sample)?,
        scenario,
        sample,
    };
    let mut located = Vec::with_capacity(breaks.len());
    for &v in &breaks {
        located.push(surface.eval(pf, v)?);
    }
    let mut best = None;
    if breaks.len() == 1 {
        eval.segment(breaks[0], breaks[0], |_| located[0], &mut best);
    }
    for k in 1..breaks.len() {
        let (a, b) = (breaks[k - 1], breaks[k]);
        let (ma, mb) = (located[k - 1], located[k]);
        // the surface is affine between consecutive breakpoints
        let moments = |v: f64| {
            if b == a {
                return ma;
            }
            let t = (v - a) / (b - a);
            (ma.0 + t * (mb.0 - ma.0), ma.1 + t * (mb.1 - ma.1))
        };
        eval.segment(a, b, moments, &mut best);
    }
    best.ok_or_else(|| Error::Invariant(format!("no breakpoints on price line {p}")))
}

fn finish(per_price: Vec<PriceRow>) -> Result<SolveResult> {
    let best = per_price
        .iter()
        .copied()
        .reduce(|a, b| if better(&b, &a) { b } else { a })
        .ok_or_else(|| Error::Invariant("empty price grid".into()))?;
    Ok(SolveResult {
        p_star: best.p,
        v_star: best.v,
        o_star: best.o,
        objective: best.objective,
        per_price,
    })
}

/// Best solution over every integer price in the scenario range.
pub fn solve(surface: &Surface, scenario: &Scenario, sample: &SaaSample) -> Result<SolveResult> {
    check_inputs(surface, scenario, sample)?;
    let per_price = (scenario.p_min..=scenario.p_max)
        .into_par_iter()
        .map(|p| solve_fixed_price(p, surface, scenario, sample))
        .collect::<Result<Vec<_>>>()?;
    finish(per_price)
}

/// Largest code width accepted by [`solve_by_code_enumeration`].
pub const MAX_ENUMERATION_BITS: u32 = 20;

/// Enumerate every binary code, restrict the moments to that code's triangle
/// patch, and optimize each integer price crossing the patch.
pub fn solve_by_code_enumeration(
    surface: &Surface,
    scenario: &Scenario,
    sample: &SaaSample,
) -> Result<SolveResult> {
    if surface.code_width > MAX_ENUMERATION_BITS {
        return Err(Error::CodeWidth(surface.code_width));
    }
    check_inputs(surface, scenario, sample)?;
    let owner: HashMap<u32, usize> = surface
        .codes
        .iter()
        .enumerate()
        .map(|(tri, &code)| (code, tri))
        .collect();
    let mut best_at: Vec<Option<PriceRow>> =
        vec![None; (scenario.p_max - scenario.p_min + 1) as usize];
    let mut multipliers = HashMap::new();

    for code in 0..(1u32 << surface.code_width) {
        let Some(&tri) = owner.get(&code) else {
            continue;
        };
        let corners = surface.corners_of(tri);
        let lo_p = corners.iter().map(|c| c.p).fold(f64::INFINITY, f64::min);
        let hi_p = corners
            .iter()
            .map(|c| c.p)
            .fold(f64::NEG_INFINITY, f64::max);
        let first = (lo_p.ceil() as i64).max(scenario.p_min);
        let last = (hi_p.floor() as i64).min(scenario.p_max);
        for p in first..=last {
            let pf = p as f64;
            let Some((a, b)) = surface.slice_at_price(tri, pf) else {
                continue;
            };
            if a > scenario.v_max {
                continue;
            }
            let b = b.min(scenario.v_max);
            let w = match multipliers.get(&p) {
                Some(&w) => w,
                None => {
                    let w = order_multiplier(pf, scenario, sample)?;
                    multipliers.insert(p, w);
                    w
                }
            };
            let eval = Evaluator {
                p: pf,
                pi: p,
                w,
                scenario,
                sample,
            };
            let slot = &mut best_at[(p - scenario.p_min) as usize];
            eval.segment(a, b, |v| surface.affine_at(tri, pf, v), slot);
        }
    }
    let per_price = best_at
        .into_iter()
        .enumerate()
        .map(|(k, row)| {
            row.ok_or_else(|| {
                Error::Invariant(format!(
                    "price {} met no triangle",
                    scenario.p_min + k as i64
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    finish(per_price)
}
