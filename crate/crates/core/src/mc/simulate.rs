use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ExplicitDtmc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    pub state: u32,
    /// Action taken from `state`, `None` for private or self-loop steps.
    pub action: Option<u32>,
}

/// Random walk from the initial state. Stops after `max_steps` transitions
/// or on entering an absorbing state, which is the last entry of the trace.
pub fn simulate(d: &ExplicitDtmc, seed: u64, max_steps: usize) -> Vec<Step> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    walk(d, &mut rng, max_steps, |_| false)
}

/// Like [`simulate`] with a caller-owned generator, also stopping at the
/// first state where `stop` holds.
pub fn walk(d: &ExplicitDtmc, rng: &mut impl Rng, max_steps: usize, stop: impl Fn(usize) -> bool) -> Vec<Step> {
    let mut s = d.initial as usize;
    let mut trace = Vec::new();
    for _ in 0..max_steps {
        if stop(s) || d.is_absorbing(s) {
            break;
        }
        trace.push(Step {
            state: s as u32,
            action: d.actions[s],
        });
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut next = None;
        for (t, p) in d.row(s) {
            acc += p;
            next = Some(t);
            if u < acc {
                break;
            }
        }
        s = next.expect("rows are non-empty");
    }
    trace.push(Step {
        state: s as u32,
        action: d.actions[s],
    });
    trace
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::import;

    #[test]
    fn deterministic_chain_has_one_trace() {
        let d = import("STATES 3 INITIAL 0\n0 1 1 a\n1 2 1 b\n2 2 1\n").unwrap();
        let states: Vec<u32> = simulate(&d, 9, 100).iter().map(|s| s.state).collect();
        assert_eq!(states, vec![0, 1, 2]);
    }

    #[test]
    fn same_seed_same_trace() {
        let d = import("STATES 2 INITIAL 0\n0 0 0.5\n0 1 0.5\n1 0 0.5\n1 1 0.5\n").unwrap();
        assert_eq!(simulate(&d, 42, 50), simulate(&d, 42, 50));
        assert_ne!(simulate(&d, 42, 50), simulate(&d, 43, 50));
    }
}
