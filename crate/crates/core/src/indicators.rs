//! Front quality indicators, requirement filtering, significance testing
//! and knee-point selection. Two-objective points are `(success, cost)`
//! with success maximised and cost minimised.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::mc::Sense;
use crate::synthesis::ParetoFront;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum IndicatorError {
    #[error("all points of the front coincide")]
    DegenerateFront,
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RequirementSetting {
    pub min_success: f64,
    pub max_cost: f64,
}

impl RequirementSetting {
    pub fn new(min_success: f64, max_cost: f64) -> Result<Self, IndicatorError> {
        if !(min_success > 0.0 && min_success <= 1.0) || max_cost <= 0.0 || max_cost.is_nan() {
            return Err(IndicatorError::Invalid(format!(
                "requirement ({min_success}, {max_cost}) needs min_success in (0,1] and max_cost > 0"
            )));
        }
        Ok(Self { min_success, max_cost })
    }

    /// Setting that accepts everything.
    pub fn any() -> Self {
        Self {
            min_success: 0.0,
            max_cost: f64::INFINITY,
        }
    }

    pub fn accepts(&self, (success, cost): (f64, f64)) -> bool {
        success >= self.min_success && cost <= self.max_cost
    }

    /// Hypervolume reference point.
    pub fn reference(&self) -> (f64, f64) {
        (self.min_success, self.max_cost)
    }

    /// The nine settings crossing three success floors with three cost caps.
    pub fn grid() -> Vec<Self> {
        let mut out = Vec::new();
        for s in [0.6, 0.7, 0.8] {
            for c in [100.0, 80.0, 60.0] {
                out.push(Self {
                    min_success: s,
                    max_cost: c,
                });
            }
        }
        out
    }
}

impl std::fmt::Display for RequirementSetting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "s{}_c{}", self.min_success, self.max_cost)
    }
}

/// `(success, cost)` pairs of a front whose first two objectives are a
/// maximised probability and a minimised cost.
pub fn success_cost(front: &ParetoFront) -> Vec<(f64, f64)> {
    front.points.iter().map(|p| (p.objectives[0], p.objectives[1])).collect()
}

pub fn filter_by_requirements(front: &ParetoFront, req: &RequirementSetting) -> ParetoFront {
    ParetoFront {
        objectives: front.objectives.clone(),
        points: front
            .points
            .iter()
            .filter(|p| req.accepts((p.objectives[0], p.objectives[1])))
            .cloned()
            .collect(),
    }
}

pub fn filter_points(points: &[(f64, f64)], req: &RequirementSetting) -> Vec<(f64, f64)> {
    points.iter().copied().filter(|&p| req.accepts(p)).collect()
}

/// Area dominated by `points` and bounded by `reference`, success
/// maximised and cost minimised. Points that do not weakly dominate the
/// reference are ignored.
pub fn hypervolume_2d(points: &[(f64, f64)], reference: (f64, f64)) -> f64 {
    let (rs, rc) = reference;
    let mut pts: Vec<(f64, f64)> = points.iter().copied().filter(|&(s, c)| s >= rs && c <= rc).collect();
    let dropped = points.len() - pts.len();
    if dropped > 0 {
        tracing::warn!(dropped, "points outside the reference box ignored for hypervolume");
    }
    pts.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));
    let mut area = 0.0;
    let mut best_cost = rc;
    for (i, &(s, c)) in pts.iter().enumerate() {
        best_cost = best_cost.min(c);
        let next = pts.get(i + 1).map_or(rs, |p| p.0);
        area += (s - next) * (rc - best_cost);
    }
    area
}

/// Two-objective hypervolume for any pair of senses.
pub fn hypervolume(points: &[Vec<f64>], senses: [Sense; 2], reference: [f64; 2]) -> f64 {
    let orient = |v: f64, axis: usize| match (axis, senses[axis]) {
        (0, Sense::Maximize) | (1, Sense::Minimize) => v,
        _ => -v,
    };
    let pts: Vec<(f64, f64)> = points.iter().map(|p| (orient(p[0], 0), orient(p[1], 1))).collect();
    hypervolume_2d(&pts, (orient(reference[0], 0), orient(reference[1], 1)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub value: f64,
    /// Set when the front had fewer than three points and `value` is the
    /// fixed sentinel 1.
    pub sentinel: bool,
}

fn normalise(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let span = |f: fn(&(f64, f64)) -> f64| {
        let lo = points.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi - lo)
    };
    let (s0, sw) = span(|p| p.0);
    let (c0, cw) = span(|p| p.1);
    let scale = |v: f64, lo: f64, w: f64| if w > 0.0 { (v - lo) / w } else { 0.0 };
    points.iter().map(|&(s, c)| (scale(s, s0, sw), scale(c, c0, cw))).collect()
}

/// Deb's spread with the front's own extremes, on min-max normalised axes.
pub fn spread(points: &[(f64, f64)]) -> Result<Spread, IndicatorError> {
    if points.len() < 3 {
        return Ok(Spread {
            value: 1.0,
            sentinel: true,
        });
    }
    let mut pts = normalise(points);
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    let d: Vec<f64> = pts.windows(2).map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1)).collect();
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    if mean == 0.0 {
        return Err(IndicatorError::DegenerateFront);
    }
    let dev: f64 = d.iter().map(|x| (x - mean).abs()).sum();
    Ok(Spread {
        value: dev / (d.len() as f64 * mean),
        sentinel: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U statistic of the first sample.
    pub u: f64,
    pub p_two_sided: f64,
    /// Probability of a U this small under the null: the first sample
    /// tends to be smaller.
    pub p_less: f64,
    /// The first sample tends to be larger.
    pub p_greater: f64,
    pub exact: bool,
}

fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

/// Null distribution of the doubled rank sum of `n1` items drawn from
/// `doubled` (every size-`n1` subset equally likely), as probabilities
/// indexed by sum.
fn rank_sum_distribution(doubled: &[usize], n1: usize) -> Vec<f64> {
    let total: usize = doubled.iter().sum();
    let mut ways = vec![vec![0.0f64; total + 1]; n1 + 1];
    ways[0][0] = 1.0;
    for &r in doubled {
        for k in (1..=n1).rev() {
            let (lower, upper) = ways.split_at_mut(k);
            for s in (r..=total).rev() {
                let w = lower[k - 1][s - r];
                if w != 0.0 {
                    upper[0][s] += w;
                }
            }
        }
    }
    let count: f64 = ways[n1].iter().sum();
    ways.swap_remove(n1).into_iter().map(|w| w / count).collect()
}

fn u_statistic(a: &[f64], b: &[f64]) -> Result<(f64, Vec<f64>, Vec<usize>), IndicatorError> {
    if a.is_empty() || b.is_empty() {
        return Err(IndicatorError::Invalid("both samples must be non-empty".into()));
    }
    let n1 = a.len();
    let all: Vec<f64> = a.iter().chain(b).copied().collect();
    if all.iter().any(|v| v.is_nan()) {
        return Err(IndicatorError::Invalid("samples contain NaN".into()));
    }
    let (ranks, ties) = midranks(&all);
    let r1: f64 = ranks[..n1].iter().sum();
    Ok((r1 - (n1 * (n1 + 1)) as f64 / 2.0, ranks, ties))
}

/// Mann-Whitney U test with midranks for ties. Exact when
/// `n1 * n2 <= 400`, otherwise the tie-corrected normal approximation
/// with continuity correction.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney, IndicatorError> {
    match a.len() * b.len() <= 400 {
        true => mann_whitney_exact(a, b),
        false => mann_whitney_normal(a, b),
    }
}

/// Exact null distribution over all equally likely splits of the pooled
/// midranks.
pub fn mann_whitney_exact(a: &[f64], b: &[f64]) -> Result<MannWhitney, IndicatorError> {
    let (u, ranks, _) = u_statistic(a, b)?;
    let n1 = a.len();
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let dist = rank_sum_distribution(&doubled, n1);
    let observed: usize = doubled[..n1].iter().sum();
    let p_less: f64 = dist[..=observed].iter().sum::<f64>().min(1.0);
    let p_greater: f64 = dist[observed..].iter().sum::<f64>().min(1.0);
    Ok(MannWhitney {
        u,
        p_two_sided: (2.0 * p_less.min(p_greater)).min(1.0),
        p_less,
        p_greater,
        exact: true,
    })
}

pub fn mann_whitney_normal(a: &[f64], b: &[f64]) -> Result<MannWhitney, IndicatorError> {
    let (u, _, ties) = u_statistic(a, b)?;
    let (f1, f2) = (a.len() as f64, b.len() as f64);
    let n = f1 + f2;
    let mean = f1 * f2 / 2.0;
    let tie: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum();
    let var = match n > 1.0 {
        true => f1 * f2 / 12.0 * ((n + 1.0) - tie / (n * (n - 1.0))),
        false => 0.0,
    };
    if var <= 0.0 {
        return Ok(MannWhitney {
            u,
            p_two_sided: 1.0,
            p_less: 1.0,
            p_greater: 1.0,
            exact: false,
        });
    }
    let sd = var.sqrt();
    let phi = Normal::standard();
    let p_less = phi.cdf((u + 0.5 - mean) / sd).min(1.0);
    let p_greater = (1.0 - phi.cdf((u - 0.5 - mean) / sd)).min(1.0);
    Ok(MannWhitney {
        u,
        p_two_sided: (2.0 * p_less.min(p_greater)).min(1.0),
        p_less,
        p_greater,
        exact: false,
    })
}

/// Index of the point farthest from the chord between the two extremes on
/// min-max normalised axes. Ties go to the point with higher success.
pub fn knee_point(points: &[(f64, f64)]) -> Option<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[b].0.total_cmp(&points[a].0).then(points[a].1.total_cmp(&points[b].1)));
    let first = *order.first()?;
    let norm = normalise(points);
    let (a, b) = (norm[first], norm[*order.last()?]);
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len = dx.hypot(dy);
    let dist = |p: (f64, f64)| match len {
        0.0 => 0.0,
        _ => (dx * (a.1 - p.1) - dy * (a.0 - p.0)).abs() / len,
    };
    let mut best = first;
    let mut best_d = dist(norm[first]);
    for &i in &order[1..] {
        let d = dist(norm[i]);
        if d > best_d + 1e-12 {
            best = i;
            best_d = d;
        }
    }
    Some(best)
}
