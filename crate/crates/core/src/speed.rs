//! Analytic speeds.
//!
//! The walk on the infinite cluster is a delayed walk on the backbone: each
//! backbone visit is followed by excursions into the bushes hanging there.
//! With backbone speed `S(p)` and mean delay `2 rho / (1 - rho)` per backbone
//! step, the cluster speed is `(1 - rho) / (1 + rho) * S(p)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::offspring::OffspringLaw;
use crate::percolation::{PercolatedModel, DEFAULT_TOL, SERIES_TAIL};

/// Agreement required between the two routes to `S(p)`.
pub const ROUTE_TOL: f64 = 1e-10;

/// Slack on successive differences in [`check_condition`].
pub const CONDITION_SLACK: f64 = 1e-9;

pub const DEFAULT_CONDITION_GRID: usize = 10_000;

/// Points closer to 1 than this use the value at `1 - NEAR_ONE`.
const NEAR_ONE: f64 = 1e-6;

/// One row of a speed curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedCurvePoint {
    pub p: f64,
    pub rho: f64,
    pub lambda: f64,
    pub backbone_speed: f64,
    pub cluster_speed: f64,
    pub mean_delay: f64,
    pub condition_ok: bool,
}

/// `sum_{k>=1} p_k (k-1)/(k+1)`, the speed on a Galton-Watson tree without leaves.
pub fn eq1_speed(law: &OffspringLaw) -> Result<f64> {
    let p0 = law.p0();
    if p0 > 0.0 {
        return Err(Error::PositiveP0 { p0 });
    }
    let k_max = law.tail_cutoff(SERIES_TAIL);
    Ok((1..=k_max)
        .map(|k| law.pmf(k) * (k as f64 - 1.0) / (k as f64 + 1.0))
        .sum())
}

/// `S(p)` through the series `sum_k p̃_k (k-1)/(k+1)`.
pub fn backbone_speed_series(model: &PercolatedModel) -> f64 {
    (1..=model.series_cutoff())
        .map(|k| model.backbone_pmf(k) * (k as f64 - 1.0) / (k as f64 + 1.0))
        .sum()
}

/// `S(p)` through the closed form
/// `(1+rho)/(1-rho) - 2/((1-rho)^2 p) * sum_n p_n (1 - lambda^(n+1))/(n+1)`.
pub fn backbone_speed_closed(model: &PercolatedModel) -> f64 {
    let rho = model.rho();
    let gap = 1.0 - rho;
    (1.0 + rho) / gap
        - 2.0 / (gap * gap * model.p()) * model.law().pgf_integral_to_one(model.lambda())
}

/// Backbone speed, cross-checked between the closed form and the `p̃` series.
pub fn backbone_speed(model: &PercolatedModel) -> Result<f64> {
    let closed = backbone_speed_closed(model);
    let series = backbone_speed_series(model);
    let gap = 1.0 - model.rho();
    // the closed form cancels two terms of size ~2/(1-rho)^2
    let scale = (2.0 / (gap * gap * model.p())).max(1.0);
    if (closed - series).abs() > ROUTE_TOL * scale {
        return Err(Error::RouteMismatch {
            what: "backbone speed",
            a: closed,
            b: series,
        });
    }
    Ok(closed)
}

/// `sum_k p̃_k 2 M N(p, k)`, the mean bush delay per backbone step.
pub fn delay_sum(model: &PercolatedModel) -> Result<f64> {
    if model.rho() == 0.0 {
        return Ok(0.0);
    }
    let bush = model.bush_mean_size()?;
    let mut total = 0.0;
    for k in 1..=model.series_cutoff() {
        let w = model.backbone_pmf(k);
        if w == 0.0 {
            continue;
        }
        total += w * 2.0 * bush * model.mean_excursions(k)?;
    }
    Ok(total)
}

/// `2 rho / (1 - rho)`.
pub fn mean_delay(model: &PercolatedModel) -> f64 {
    2.0 * model.rho() / (1.0 - model.rho())
}

/// Speed of the walk on the infinite cluster, `(1-rho)/(1+rho) S(p)`.
pub fn cluster_speed(model: &PercolatedModel) -> Result<f64> {
    let rho = model.rho();
    Ok((1.0 - rho) / (1.0 + rho) * backbone_speed(model)?)
}

/// [`cluster_speed`] as a function of `p`, extended by 0 at `p = 1/m`.
pub fn cluster_speed_at(law: &OffspringLaw, p: f64, tol: f64) -> Result<f64> {
    if law.mean() > 1.0 && p * law.mean() == 1.0 {
        return Ok(0.0);
    }
    cluster_speed(&PercolatedModel::with_tol(law.clone(), p, tol)?)
}

/// `h(s) = (1-s) f'(s) / (1 - f(s))`.
fn condition_ratio(law: &OffspringLaw, s: f64) -> f64 {
    let s = s.min(1.0 - NEAR_ONE);
    (1.0 - s) * law.taylor_coefficient(s, 1) / (1.0 - law.pgf(s))
}

/// Checks on a grid whether `(1-s) f'(s) / (1 - f(s))` is nondecreasing on
/// `(1/m, 1)`; returns the verdict and the minimum successive difference.
///
/// For `m <= 1` the range is empty and the whole of `(0, 1)` is scanned.
pub fn check_condition(law: &OffspringLaw, grid_size: usize) -> Result<(bool, f64)> {
    if grid_size < 3 {
        return Err(Error::InvalidArgument {
            name: "grid_size",
            value: grid_size as f64,
            reason: "need at least 3 grid points",
        });
    }
    if law.is_degenerate() {
        return Err(Error::DegenerateLaw);
    }
    let m = law.mean();
    let lo = if m > 1.0 { 1.0 / m } else { 0.0 };
    // open at 1/m, closed at 1 through the one-sided value
    let step = (1.0 - lo) / grid_size as f64;
    let values: Vec<f64> = (1..=grid_size)
        .map(|i| condition_ratio(law, lo + step * i as f64))
        .collect();
    let worst = values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    Ok((worst >= -CONDITION_SLACK, worst))
}

/// Closed-form speed on the binary tree with a pipe at every vertex.
pub fn pipes_speed(p: f64) -> Result<f64> {
    if !(0.5..=1.0).contains(&p) {
        return Err(Error::InvalidArgument {
            name: "p",
            value: p,
            reason: "pipes speed needs 1/2 <= p <= 1",
        });
    }
    let q = 1.0 - p;
    let tilt = (2.0 * p - 1.0).powi(2) / (p * p + q * q);
    Ok(tilt * q / (3.0 * (2.0 * p.powi(3) - 6.0 * p * p + 3.0 * p + 3.0)))
}

fn curve_point(law: &OffspringLaw, p: f64, tol: f64, condition_ok: bool) -> Result<SpeedCurvePoint> {
    let model = PercolatedModel::with_tol(law.clone(), p, tol)?;
    let backbone = backbone_speed(&model)?;
    let rho = model.rho();
    Ok(SpeedCurvePoint {
        p,
        rho,
        lambda: model.lambda(),
        backbone_speed: backbone,
        cluster_speed: (1.0 - rho) / (1.0 + rho) * backbone,
        mean_delay: mean_delay(&model),
        condition_ok,
    })
}

/// A single curve point with the condition flag evaluated for `law`.
pub fn speed_point(law: &OffspringLaw, p: f64, tol: f64) -> Result<SpeedCurvePoint> {
    let (ok, _) = check_condition(law, DEFAULT_CONDITION_GRID)?;
    curve_point(law, p, tol, ok)
}

/// Evaluates the speed curve on a strictly increasing grid in `(1/m, 1]`.
pub fn sweep(law: &OffspringLaw, p_grid: &[f64]) -> Result<Vec<SpeedCurvePoint>> {
    sweep_with_tol(law, p_grid, DEFAULT_TOL)
}

pub fn sweep_with_tol(law: &OffspringLaw, p_grid: &[f64], tol: f64) -> Result<Vec<SpeedCurvePoint>> {
    if let Some(w) = p_grid.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument {
            name: "p_grid",
            value: w[1],
            reason: "grid must be strictly increasing",
        });
    }
    let (ok, _) = check_condition(law, DEFAULT_CONDITION_GRID)?;
    p_grid
        .par_iter()
        .map(|&p| curve_point(law, p, tol, ok))
        .collect()
}
