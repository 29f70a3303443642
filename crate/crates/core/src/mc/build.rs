use parley_prism::Model;
use rustc_hash::FxHashMap;

use super::compile::{compile, CompiledModel};
use super::dtmc::{describe, ExplicitDtmc, VarLayout};
use super::McError;

const PROB_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct BuildOptions {
    /// States satisfying any of these labels get a self-loop when no
    /// command is enabled.
    pub absorbing_labels: Vec<String>,
    /// Give every deadlocked state a self-loop instead of failing.
    pub fix_deadlocks: bool,
    pub max_states: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            absorbing_labels: ["goal", "crash", "done"].map(String::from).to_vec(),
            fix_deadlocks: false,
            max_states: 5_000_000,
        }
    }
}

impl BuildOptions {
    pub fn permissive() -> Self {
        Self {
            fix_deadlocks: true,
            ..Self::default()
        }
    }
}

/// Builds a model without parameters.
pub fn build(model: &Model, opts: &BuildOptions) -> Result<ExplicitDtmc, McError> {
    let unbound: Vec<String> = model.unbound_constants().map(|c| c.name.clone()).collect();
    if !unbound.is_empty() {
        return Err(McError::UnboundConstants(unbound));
    }
    build_compiled(&compile(model)?, &[], opts)
}

fn layout(cm: &CompiledModel) -> Result<Vec<VarLayout>, McError> {
    let mut shift = 0u32;
    let mut out = Vec::with_capacity(cm.vars.len());
    for v in &cm.vars {
        let span = (v.hi - v.lo) as u128;
        let width = 128 - span.leading_zeros();
        out.push(VarLayout {
            name: v.name.clone(),
            lo: v.lo,
            hi: v.hi,
            is_bool: v.is_bool,
            shift,
            width,
        });
        shift += width;
        if shift > 128 {
            return Err(McError::TooLarge("variables need more than 128 bits".into()));
        }
    }
    Ok(out)
}

fn pack(layout: &[VarLayout], vals: &[i64]) -> u128 {
    layout
        .iter()
        .zip(vals)
        .fold(0u128, |acc, (v, &x)| acc | (((x - v.lo) as u128) << v.shift))
}

struct Explorer<'a> {
    cm: &'a CompiledModel,
    params: &'a [i64],
    layout: Vec<VarLayout>,
    /// Enabled labelled commands per action, as (module, command).
    hits: Vec<Vec<(usize, u32)>>,
    touched: Vec<u32>,
    private: Vec<(usize, u32)>,
}

impl Explorer<'_> {
    fn state_err(&self, vals: &[i64], e: impl std::fmt::Display) -> McError {
        McError::Eval {
            state: describe(&self.layout, vals),
            message: e.to_string(),
        }
    }

    /// Commands taking part in the single enabled action of `vals`, or
    /// `None` when nothing is enabled.
    fn enabled(&mut self, vals: &[i64]) -> Result<Option<(Option<u32>, Vec<(usize, u32)>)>, McError> {
        for a in self.touched.drain(..) {
            self.hits[a as usize].clear();
        }
        self.private.clear();
        for (mi, m) in self.cm.modules.iter().enumerate() {
            for ci in m.candidates(vals) {
                let c = &m.commands[ci as usize];
                let on = c.guard.eval_bool(vals, self.params).map_err(|e| self.state_err(vals, e))?;
                if !on {
                    continue;
                }
                match c.action {
                    None => self.private.push((mi, ci)),
                    Some(a) => {
                        if self.hits[a as usize].is_empty() {
                            self.touched.push(a);
                        }
                        self.hits[a as usize].push((mi, ci));
                    }
                }
            }
        }
        let mut fired: Vec<(Option<u32>, Vec<(usize, u32)>)> = self.private.iter().map(|&c| (None, vec![c])).collect();
        for &a in &self.touched {
            let hits = &self.hits[a as usize];
            let participants = &self.cm.action_modules[a as usize];
            let all_present = participants.iter().all(|m| hits.iter().any(|(hm, _)| hm == m));
            if !all_present {
                continue;
            }
            if hits.len() > participants.len() {
                let m = hits.iter().find(|(hm, _)| hits.iter().filter(|(x, _)| x == hm).count() > 1).unwrap().0;
                return Err(McError::Nondeterminism {
                    state: describe(&self.layout, vals),
                    actions: vec![format!(
                        "{} (twice in module {})",
                        self.cm.actions[a as usize], self.cm.modules[m].name
                    )],
                });
            }
            fired.push((Some(a), hits.clone()));
        }
        if fired.len() > 1 {
            let mut actions: Vec<String> = fired
                .iter()
                .map(|(a, cmds)| match a {
                    Some(a) => self.cm.actions[*a as usize].clone(),
                    None => {
                        let (m, c) = cmds[0];
                        format!("[] at {} in module {}", self.cm.modules[m].commands[c as usize].span, self.cm.modules[m].name)
                    }
                })
                .collect();
            actions.sort();
            return Err(McError::Nondeterminism {
                state: describe(&self.layout, vals),
                actions,
            });
        }
        Ok(fired.pop())
    }

    /// Joint successor distribution of the given commands.
    fn successors(&self, vals: &[i64], cmds: &[(usize, u32)], out: &mut Vec<(u128, f64)>) -> Result<(), McError> {
        let mut partial: Vec<(Vec<i64>, f64)> = vec![(vals.to_vec(), 1.0)];
        for &(mi, ci) in cmds {
            let c = &self.cm.modules[mi].commands[ci as usize];
            let mut next = Vec::with_capacity(partial.len() * c.updates.len());
            let mut sum = 0.0;
            for u in &c.updates {
                let p = u.prob.eval_f64(vals, self.params).map_err(|e| self.state_err(vals, e))?;
                if !(-PROB_TOLERANCE..=1.0 + PROB_TOLERANCE).contains(&p) || p.is_nan() {
                    return Err(McError::Probability {
                        state: describe(&self.layout, vals),
                        message: format!("probability {p} at {}", c.span),
                    });
                }
                sum += p;
                if p <= 0.0 {
                    continue;
                }
                for (base, q) in &partial {
                    let mut s = base.clone();
                    for (slot, e) in &u.assigns {
                        let var = &self.cm.vars[*slot as usize];
                        let x = if var.is_bool {
                            e.eval_bool(vals, self.params).map(i64::from)
                        } else {
                            e.eval_int(vals, self.params)
                        }
                        .map_err(|e| self.state_err(vals, e))?;
                        if x < var.lo || x > var.hi {
                            return Err(McError::OutOfRange {
                                state: describe(&self.layout, vals),
                                var: var.name.clone(),
                                value: x,
                            });
                        }
                        s[*slot as usize] = x;
                    }
                    next.push((s, q * p));
                }
            }
            if (sum - 1.0).abs() > PROB_TOLERANCE {
                return Err(McError::Probability {
                    state: describe(&self.layout, vals),
                    message: format!("command at {} has probabilities summing to {sum}", c.span),
                });
            }
            partial = next;
        }
        out.clear();
        for (s, p) in partial {
            let key = pack(&self.layout, &s);
            match out.iter_mut().find(|(k, _)| *k == key) {
                Some((_, q)) => *q += p,
                None => out.push((key, p)),
            }
        }
        Ok(())
    }
}

/// Explores the reachable states of `cm` under parameter values `params`.
pub fn build_compiled(cm: &CompiledModel, params: &[i64], opts: &BuildOptions) -> Result<ExplicitDtmc, McError> {
    if params.len() != cm.params.len() {
        return Err(McError::ParamCount {
            expected: cm.params.len(),
            found: params.len(),
        });
    }
    let layout = layout(cm)?;
    let mut ex = Explorer {
        cm,
        params,
        layout,
        hits: vec![Vec::new(); cm.actions.len()],
        touched: Vec::new(),
        private: Vec::new(),
    };

    let zeros = vec![0i64; cm.vars.len()];
    let mut init = Vec::with_capacity(cm.vars.len());
    for v in &cm.vars {
        let x = if v.is_bool {
            v.init.eval_bool(&zeros, params).map(i64::from)
        } else {
            v.init.eval_int(&zeros, params)
        }
        .map_err(|e| McError::Model(format!("initial value of `{}`: {e}", v.name)))?;
        if x < v.lo || x > v.hi {
            return Err(McError::OutOfRange {
                state: "initial".into(),
                var: v.name.clone(),
                value: x,
            });
        }
        init.push(x);
    }

    let absorbing: Vec<usize> = cm
        .labels
        .iter()
        .enumerate()
        .filter(|(_, (n, _))| opts.absorbing_labels.iter().any(|a| a == n))
        .map(|(i, _)| i)
        .collect();

    let mut states = vec![pack(&ex.layout, &init)];
    let mut index: FxHashMap<u128, u32> = FxHashMap::default();
    index.insert(states[0], 0);
    let mut row_ptr = vec![0u32];
    let mut cols = Vec::new();
    let mut probs = Vec::new();
    let mut actions = Vec::new();
    let mut rewards: Vec<Vec<f64>> = vec![Vec::new(); cm.rewards.len()];
    let mut labels: Vec<Vec<bool>> = vec![Vec::new(); cm.labels.len()];
    let mut vals = vec![0i64; cm.vars.len()];
    let mut succ = Vec::new();

    let mut s = 0usize;
    while s < states.len() {
        let key = states[s];
        for (i, v) in ex.layout.iter().enumerate() {
            vals[i] = super::dtmc::decode(key, v);
        }
        for (li, (_, e)) in cm.labels.iter().enumerate() {
            labels[li].push(e.eval_bool(&vals, params).map_err(|e| ex.state_err(&vals, e))?);
        }
        match ex.enabled(&vals)? {
            Some((action, cmds)) => {
                ex.successors(&vals, &cmds, &mut succ)?;
                for (ri, (_, items)) in cm.rewards.iter().enumerate() {
                    let mut r = 0.0;
                    for item in items.iter().filter(|i| i.action == action) {
                        if item.guard.eval_bool(&vals, params).map_err(|e| ex.state_err(&vals, e))? {
                            let v = item.value.eval_f64(&vals, params).map_err(|e| ex.state_err(&vals, e))?;
                            if v < 0.0 {
                                return Err(ex.state_err(&vals, format!("negative reward {v}")));
                            }
                            r += v;
                        }
                    }
                    rewards[ri].push(r);
                }
                actions.push(action);
            }
            None => {
                let absorbing_here = absorbing.iter().any(|&li| labels[li][s]);
                if !absorbing_here && !opts.fix_deadlocks {
                    return Err(McError::Deadlock {
                        state: describe(&ex.layout, &vals),
                    });
                }
                succ.clear();
                succ.push((key, 1.0));
                for r in &mut rewards {
                    r.push(0.0);
                }
                actions.push(None);
            }
        }
        for &(t, p) in &succ {
            let next = states.len() as u32;
            let id = *index.entry(t).or_insert(next);
            if id == next {
                if states.len() >= opts.max_states {
                    return Err(McError::TooLarge(format!("more than {} states", opts.max_states)));
                }
                states.push(t);
            }
            cols.push(id);
            probs.push(p);
        }
        row_ptr.push(cols.len() as u32);
        s += 1;
    }

    Ok(ExplicitDtmc {
        vars: ex.layout,
        states,
        initial: 0,
        row_ptr,
        cols,
        probs,
        actions,
        action_names: cm.actions.clone(),
        rewards: cm.rewards.iter().map(|(n, _)| n.clone()).zip(rewards).collect(),
        labels: cm.labels.iter().map(|(n, _)| n.clone()).zip(labels).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use parley_prism::parse;

    const MINIMAL: &str = "dtmc module M x:[0..1] init 0; [a] x=0 -> 1.0:(x'=1); endmodule";

    #[test]
    fn minimal_model() {
        let d = build(&parse(MINIMAL).unwrap(), &BuildOptions::permissive()).unwrap();
        assert_eq!(d.num_states(), 2);
        assert_eq!(d.row(0).collect::<Vec<_>>(), vec![(1, 1.0)]);
        assert_eq!(d.action(0), Some("a"));
        assert!(d.is_absorbing(1));
    }

    #[test]
    fn strict_mode_reports_deadlock() {
        let err = build(&parse(MINIMAL).unwrap(), &BuildOptions::default()).unwrap_err();
        assert_eq!(err, McError::Deadlock { state: "(x=1)".into() });
        let labelled = format!("{MINIMAL} label \"done\" = x=1;");
        assert!(build(&parse(&labelled).unwrap(), &BuildOptions::default()).is_ok());
    }

    #[test]
    fn synchronisation_multiplies_distributions() {
        let src = "dtmc
            module A a:[0..1] init 0; [go] a=0 -> 0.5:(a'=1) + 0.5:true; endmodule
            module B b:[0..1] init 0; [go] b=0 -> 0.25:(b'=1) + 0.75:true; endmodule";
        let d = build(&parse(src).unwrap(), &BuildOptions::permissive()).unwrap();
        let mut row: Vec<_> = d.row(0).map(|(t, p)| (d.valuation(t), p)).collect();
        row.sort_by(|x, y| x.0.cmp(&y.0));
        assert_eq!(
            row,
            vec![(vec![0, 0], 0.375), (vec![0, 1], 0.125), (vec![1, 0], 0.375), (vec![1, 1], 0.125)]
        );
    }

    #[test]
    fn missing_partner_blocks_action() {
        let src = "dtmc
            module A a:[0..1] init 0; [go] true -> (a'=1); endmodule
            module B b:[0..1] init 0; [go] b=1 -> true; [] b=0 -> (b'=1); endmodule";
        let d = build(&parse(src).unwrap(), &BuildOptions::permissive()).unwrap();
        assert_eq!(d.action(0), None);
        assert_eq!(d.valuation(1), vec![0, 1]);
        assert_eq!(d.action(1), Some("go"));
    }

    #[test]
    fn two_enabled_actions_are_nondeterministic() {
        let src = "dtmc module C x:[0..1] init 0; [east] x=0 -> true; [north] x=0 -> true; endmodule";
        let err = build(&parse(src).unwrap(), &BuildOptions::default()).unwrap_err();
        assert!(matches!(err, McError::Nondeterminism { ref actions, .. } if actions == &["east", "north"]));
    }

    #[test]
    fn clamped_branches_merge() {
        let src = "dtmc const int N = 9; const double p = 0.01;
            module Robot x:[0..N] init 0; y:[0..N] init 0;
            [east] true -> (1-3*p):(x'=min(x+1,N)) + p:(y'=min(y+1,N)) + p:(y'=max(y-1,0)) + p:(x'=max(x-1,0));
            endmodule";
        let d = build(&parse(src).unwrap(), &BuildOptions::permissive()).unwrap();
        let row: Vec<_> = d.row(0).map(|(t, p)| (d.valuation(t), p)).collect();
        assert_eq!(row.len(), 3);
        let find = |v: [i64; 2]| row.iter().find(|(s, _)| s[..] == v[..]).unwrap().1;
        assert!((find([1, 0]) - 0.97).abs() < 1e-12);
        assert!((find([0, 1]) - 0.01).abs() < 1e-12);
        assert!((find([0, 0]) - 0.02).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_update_is_an_error() {
        let src = "dtmc module M x:[0..1] init 0; [] true -> (x'=x+1); endmodule";
        assert!(matches!(
            build(&parse(src).unwrap(), &BuildOptions::default()),
            Err(McError::OutOfRange { value: 2, .. })
        ));
    }

    #[test]
    fn rows_are_stochastic_and_parameters_apply() {
        let src = "dtmc const int k; module M x:[0..5] init k; [] x<5 -> 0.5:(x'=x+1) + 0.5:true; endmodule label \"done\" = x=5;";
        let cm = compile(&parse(src).unwrap()).unwrap();
        let d = build_compiled(&cm, &[2], &BuildOptions::default()).unwrap();
        assert_eq!(d.num_states(), 4);
        for s in 0..d.num_states() {
            let sum: f64 = d.row(s).map(|(_, p)| p).sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
        assert!(matches!(
            build_compiled(&cm, &[], &BuildOptions::default()),
            Err(McError::ParamCount { expected: 1, found: 0 })
        ));
    }
}
