//! Unbounded reachability and expected cumulative reward.

use super::{ExplicitDtmc, McError};

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Stop once no value changes by more than this in a sweep.
    pub eps: f64,
    pub max_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            eps: 1e-8,
            max_iters: 1_000_000,
        }
    }
}

fn predecessors(d: &ExplicitDtmc) -> (Vec<u32>, Vec<u32>) {
    let n = d.num_states();
    let mut count = vec![0u32; n + 1];
    for &c in &d.cols {
        count[c as usize + 1] += 1;
    }
    for i in 0..n {
        count[i + 1] += count[i];
    }
    let mut fill = count.clone();
    let mut preds = vec![0u32; d.cols.len()];
    for s in 0..n {
        for (t, p) in d.row(s) {
            if p > 0.0 {
                preds[fill[t] as usize] = s as u32;
                fill[t] += 1;
            }
        }
    }
    (count, preds)
}

/// Backward search from `seeds`, only expanding into states where `through` holds.
fn backward(d: &ExplicitDtmc, seeds: &[bool], through: impl Fn(usize) -> bool) -> Vec<bool> {
    let (ptr, preds) = predecessors(d);
    let mut seen = seeds.to_vec();
    let mut stack: Vec<usize> = (0..seen.len()).filter(|&s| seen[s]).collect();
    while let Some(t) = stack.pop() {
        for &s in &preds[ptr[t] as usize..ptr[t + 1] as usize] {
            let s = s as usize;
            if !seen[s] && through(s) {
                seen[s] = true;
                stack.push(s);
            }
        }
    }
    seen
}

/// States from which `target` is unreachable.
pub fn prob0(d: &ExplicitDtmc, target: &[bool]) -> Vec<bool> {
    backward(d, target, |_| true).into_iter().map(|r| !r).collect()
}

/// States that reach `target` with probability exactly 1.
pub fn prob1(d: &ExplicitDtmc, target: &[bool]) -> Vec<bool> {
    let zero = prob0(d, target);
    let bad = backward(d, &zero, |s| !target[s]);
    bad.into_iter().map(|b| !b).collect()
}

fn gauss_seidel(
    d: &ExplicitDtmc,
    x: &mut [f64],
    unknown: &[usize],
    constant: impl Fn(usize) -> f64,
    opts: &SolverOptions,
) -> Result<usize, McError> {
    for it in 1..=opts.max_iters {
        let mut delta = 0.0f64;
        for &s in unknown {
            let mut acc = constant(s);
            let mut stay = 0.0;
            for (t, p) in d.row(s) {
                if t == s {
                    stay += p;
                } else {
                    acc += p * x[t];
                }
            }
            let v = acc / (1.0 - stay);
            delta = delta.max((v - x[s]).abs());
            x[s] = v;
        }
        if delta < opts.eps {
            return Ok(it);
        }
    }
    Err(McError::NonConvergence {
        iterations: opts.max_iters,
    })
}

/// `P=? [F target]` for every state.
pub fn prob_reach_vector(d: &ExplicitDtmc, target: &[bool], opts: &SolverOptions) -> Result<Vec<f64>, McError> {
    let zero = prob0(d, target);
    let one = prob1(d, target);
    let mut x: Vec<f64> = one.iter().map(|&o| if o { 1.0 } else { 0.0 }).collect();
    // Reverse exploration order carries values back from the targets quickly.
    let unknown: Vec<usize> = (0..d.num_states()).rev().filter(|&s| !zero[s] && !one[s]).collect();
    gauss_seidel(d, &mut x, &unknown, |_| 0.0, opts)?;
    Ok(x)
}

/// Probability of eventually reaching `label` from the initial state.
pub fn prob_reach(d: &ExplicitDtmc, label: &str, opts: &SolverOptions) -> Result<f64, McError> {
    let target = d.label(label).ok_or_else(|| McError::UnknownLabel(label.into()))?;
    Ok(prob_reach_vector(d, target, opts)?[d.initial as usize])
}

/// `R=? [F target]` for every state; infinite where `target` is not
/// reached almost surely.
pub fn expected_reward_vector(
    d: &ExplicitDtmc,
    reward: &[f64],
    target: &[bool],
    opts: &SolverOptions,
) -> Result<Vec<f64>, McError> {
    let one = prob1(d, target);
    let mut x: Vec<f64> = one.iter().map(|&o| if o { 0.0 } else { f64::INFINITY }).collect();
    let unknown: Vec<usize> = (0..d.num_states()).rev().filter(|&s| one[s] && !target[s]).collect();
    gauss_seidel(d, &mut x, &unknown, |s| reward[s], opts)?;
    Ok(x)
}

/// Expected reward accumulated before first reaching `label`.
pub fn expected_reward(d: &ExplicitDtmc, reward: &str, label: &str, opts: &SolverOptions) -> Result<f64, McError> {
    let r = d.reward(reward).ok_or_else(|| McError::UnknownReward(reward.into()))?;
    let target = d.label(label).ok_or_else(|| McError::UnknownLabel(label.into()))?;
    let x = expected_reward_vector(d, r, target, opts)?;
    let v = x[d.initial as usize];
    if v.is_infinite() {
        return Err(McError::DivergentReward {
            reward: reward.into(),
            target: label.into(),
        });
    }
    Ok(v)
}
