use std::fmt::Write;

/// Bit layout of one variable inside a packed state.
#[derive(Debug, Clone, PartialEq)]
pub struct VarLayout {
    pub name: String,
    pub lo: i64,
    pub hi: i64,
    pub is_bool: bool,
    pub shift: u32,
    pub width: u32,
}

/// Reachable state space with one action per state and sparse rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitDtmc {
    pub vars: Vec<VarLayout>,
    pub(crate) states: Vec<u128>,
    pub initial: u32,
    pub(crate) row_ptr: Vec<u32>,
    pub(crate) cols: Vec<u32>,
    pub(crate) probs: Vec<f64>,
    /// Action taken in each state, as an index into `action_names`.
    /// Private commands and implicit self-loops have `None`.
    pub(crate) actions: Vec<Option<u32>>,
    pub action_names: Vec<String>,
    /// Per reward structure, the reward of the action taken in each state.
    pub(crate) rewards: Vec<(String, Vec<f64>)>,
    pub(crate) labels: Vec<(String, Vec<bool>)>,
}

impl ExplicitDtmc {
    pub fn num_states(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn num_transitions(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, s: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[s] as usize..self.row_ptr[s + 1] as usize;
        self.cols[range.clone()]
            .iter()
            .zip(&self.probs[range])
            .map(|(&c, &p)| (c as usize, p))
    }

    pub fn action(&self, s: usize) -> Option<&str> {
        self.actions[s].map(|a| self.action_names[a as usize].as_str())
    }

    pub fn label(&self, name: &str) -> Option<&[bool]> {
        self.labels.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn label_names(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(|(n, _)| n.as_str())
    }

    pub fn reward(&self, name: &str) -> Option<&[f64]> {
        self.rewards.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn reward_names(&self) -> impl Iterator<Item = &str> {
        self.rewards.iter().map(|(n, _)| n.as_str())
    }

    /// A state whose only transition is a probability-1 self-loop.
    pub fn is_absorbing(&self, s: usize) -> bool {
        let mut row = self.row(s);
        matches!((row.next(), row.next()), (Some((t, _)), None) if t == s)
    }

    /// Variable values of state `s` in canonical order. Empty for chains
    /// imported without a variable layout.
    pub fn valuation(&self, s: usize) -> Vec<i64> {
        self.vars.iter().map(|v| decode(self.states[s], v)).collect()
    }

    pub fn value(&self, s: usize, var: &str) -> Option<i64> {
        self.vars.iter().find(|v| v.name == var).map(|v| decode(self.states[s], v))
    }

    /// `(x=1,y=0,ready=true)`
    pub fn describe(&self, s: usize) -> String {
        describe(&self.vars, &self.valuation(s))
    }
}

pub(crate) fn decode(key: u128, v: &VarLayout) -> i64 {
    let mask = if v.width == 0 { 0 } else { (1u128 << v.width) - 1 };
    ((key >> v.shift) & mask) as i64 + v.lo
}

pub(crate) fn describe(vars: &[VarLayout], vals: &[i64]) -> String {
    let mut s = String::from("(");
    for (i, (v, x)) in vars.iter().zip(vals).enumerate() {
        if i > 0 {
            s.push(',');
        }
        if v.is_bool {
            let _ = write!(s, "{}={}", v.name, *x != 0);
        } else {
            let _ = write!(s, "{}={x}", v.name);
        }
    }
    s.push(')');
    s
}
