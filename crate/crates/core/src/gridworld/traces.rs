use std::collections::BTreeMap;
use std::fmt::Write;

use parley_prism::{parse, Model};
use serde_json::Value as Json;

use super::GridError;

/// One observed transition; states are valuations over a shared schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub state: Vec<i64>,
    pub action: String,
    pub next: Vec<i64>,
}

/// Maximum-likelihood transition estimates keyed by (state, action).
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable {
    /// Variable names and whether each is boolean.
    pub schema: Vec<(String, bool)>,
    pub initial: Vec<i64>,
    counts: BTreeMap<(Vec<i64>, String), BTreeMap<Vec<i64>, u64>>,
}

fn state_of(v: &Json, line: usize, schema: &mut Option<Vec<(String, bool)>>) -> Result<Vec<i64>, GridError> {
    let err = |message: String| GridError::Trace { line, message };
    let obj = v.as_object().ok_or_else(|| err("state must be a JSON object".into()))?;
    let mut fields = Vec::with_capacity(obj.len());
    let mut values = Vec::with_capacity(obj.len());
    for (k, v) in obj {
        let (val, is_bool) = match v {
            Json::Bool(b) => (*b as i64, true),
            Json::Number(n) => (n.as_i64().ok_or_else(|| err(format!("`{k}` is not an integer")))?, false),
            _ => return Err(err(format!("`{k}` must be an integer or boolean"))),
        };
        fields.push((k.clone(), is_bool));
        values.push(val);
    }
    match schema {
        Some(s) if *s != fields => Err(err("state schema differs from the first record".into())),
        Some(_) => Ok(values),
        None => {
            *schema = Some(fields);
            Ok(values)
        }
    }
}

/// Parses `state_json TAB action TAB state_json` lines. Blank lines and
/// lines starting with `#` are ignored.
pub fn parse_traces(text: &str) -> Result<(Vec<(String, bool)>, Vec<TraceRecord>), GridError> {
    let mut schema = None;
    let mut records = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = raw.split('\t').collect();
        let [s, a, t] = parts[..] else {
            return Err(GridError::Trace {
                line,
                message: format!("expected 3 tab-separated fields, found {}", parts.len()),
            });
        };
        let json = |s: &str| {
            serde_json::from_str::<Json>(s).map_err(|e| GridError::Trace { line, message: e.to_string() })
        };
        let action = a.trim();
        if !action.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') || action.is_empty() {
            return Err(GridError::Trace { line, message: format!("invalid action name `{action}`") });
        }
        records.push(TraceRecord {
            state: state_of(&json(s)?, line, &mut schema)?,
            action: action.to_string(),
            next: state_of(&json(t)?, line, &mut schema)?,
        });
    }
    let schema = schema.ok_or(GridError::Trace { line: 0, message: "no records".into() })?;
    Ok((schema, records))
}

/// Counts transitions; the first record's state is the initial state.
pub fn estimate_transitions_from_traces(
    schema: Vec<(String, bool)>,
    records: &[TraceRecord],
) -> Result<TransitionTable, GridError> {
    let first = records.first().ok_or(GridError::Trace { line: 0, message: "no records".into() })?;
    let mut counts: BTreeMap<(Vec<i64>, String), BTreeMap<Vec<i64>, u64>> = BTreeMap::new();
    for r in records {
        if r.state.len() != schema.len() || r.next.len() != schema.len() {
            return Err(GridError::Trace { line: 0, message: "record does not match the schema".into() });
        }
        *counts
            .entry((r.state.clone(), r.action.clone()))
            .or_default()
            .entry(r.next.clone())
            .or_default() += 1;
    }
    Ok(TransitionTable {
        schema,
        initial: first.state.clone(),
        counts,
    })
}

impl TransitionTable {
    fn show(&self, s: &[i64]) -> String {
        let parts: Vec<String> = self
            .schema
            .iter()
            .zip(s)
            .map(|((n, b), v)| if *b { format!("{n}={}", *v != 0) } else { format!("{n}={v}") })
            .collect();
        format!("({})", parts.join(", "))
    }

    /// Estimated distribution over successors of `(state, action)`.
    pub fn distribution(&self, state: &[i64], action: &str) -> Result<Vec<(Vec<i64>, f64)>, GridError> {
        let row = self
            .counts
            .get(&(state.to_vec(), action.to_string()))
            .ok_or_else(|| GridError::EmptyCell { state: self.show(state), action: action.into() })?;
        let total: u64 = row.values().sum();
        Ok(row.iter().map(|(t, &n)| (t.clone(), n as f64 / total as f64)).collect())
    }

    pub fn probability(&self, state: &[i64], action: &str, next: &[i64]) -> Result<f64, GridError> {
        Ok(self
            .distribution(state, action)?
            .into_iter()
            .find(|(t, _)| t == next)
            .map_or(0.0, |(_, p)| p))
    }

    /// Observed (state, action) pairs.
    pub fn cells(&self) -> impl Iterator<Item = (&[i64], &str)> {
        self.counts.keys().map(|(s, a)| (s.as_slice(), a.as_str()))
    }

    /// States that appear only as successors.
    pub fn terminal_states(&self) -> Vec<Vec<i64>> {
        let mut all: Vec<Vec<i64>> = self.counts.values().flat_map(|r| r.keys().cloned()).collect();
        all.sort();
        all.dedup();
        all.retain(|t| !self.counts.keys().any(|(s, _)| s == t));
        all
    }

    /// Single-module model with one command per observed (state, action).
    /// Terminal states are labelled "done" and become absorbing when built.
    pub fn to_model(&self) -> Result<Model, GridError> {
        let n = self.schema.len();
        let mut lo = vec![i64::MAX; n];
        let mut hi = vec![i64::MIN; n];
        for ((s, _), row) in &self.counts {
            for v in std::iter::once(s).chain(row.keys()) {
                for i in 0..n {
                    lo[i] = lo[i].min(v[i]);
                    hi[i] = hi[i].max(v[i]);
                }
            }
        }
        let atom = |i: usize, v: i64| {
            let (name, b) = &self.schema[i];
            match (b, v != 0) {
                (true, true) => name.clone(),
                (true, false) => format!("!{name}"),
                _ => format!("{name}={v}"),
            }
        };
        let guard = |s: &[i64]| (0..n).map(|i| atom(i, s[i])).collect::<Vec<_>>().join(" & ");
        let mut text = String::from("dtmc\n\nmodule Traces\n");
        for (i, (name, b)) in self.schema.iter().enumerate() {
            if *b {
                let _ = writeln!(text, "  {name} : bool init {};", self.initial[i] != 0);
            } else {
                let _ = writeln!(text, "  {name} : [{}..{}] init {};", lo[i], hi[i], self.initial[i]);
            }
        }
        for ((s, a), _) in &self.counts {
            let branches: Vec<String> = self
                .distribution(s, a)?
                .into_iter()
                .map(|(t, p)| {
                    let upd: Vec<String> = (0..n)
                        .map(|i| match self.schema[i].1 {
                            true => format!("({}'={})", self.schema[i].0, t[i] != 0),
                            false => format!("({}'={})", self.schema[i].0, t[i]),
                        })
                        .collect();
                    format!("{p:?}:{}", upd.join("&"))
                })
                .collect();
            let _ = writeln!(text, "  [{a}] {} -> {};", guard(s), branches.join(" + "));
        }
        text.push_str("endmodule\n\n");
        let terminal = self.terminal_states();
        let done = match terminal.is_empty() {
            true => "false".to_string(),
            false => terminal.iter().map(|t| format!("({})", guard(t))).collect::<Vec<_>>().join(" | "),
        };
        let _ = writeln!(text, "label \"done\" = {done};");
        parse(&text).map_err(|e| GridError::Invalid(format!("trace model does not parse: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(text: &str) -> TransitionTable {
        let (schema, recs) = parse_traces(text).unwrap();
        estimate_transitions_from_traces(schema, &recs).unwrap()
    }

    #[test]
    fn deterministic_action_gets_probability_one() {
        let t = table("{\"x\":0}\tgo\t{\"x\":1}\n{\"x\":0}\tgo\t{\"x\":1}\n");
        assert_eq!(t.probability(&[0], "go", &[1]).unwrap(), 1.0);
    }

    #[test]
    fn even_split() {
        let t = table("{\"x\":0}\tgo\t{\"x\":1}\n{\"x\":0}\tgo\t{\"x\":2}\n");
        assert_eq!(t.distribution(&[0], "go").unwrap(), vec![(vec![1], 0.5), (vec![2], 0.5)]);
    }

    #[test]
    fn frequency_counts() {
        let mut text = String::new();
        for (n, k) in [(97, 1), (1, 2), (1, 3), (1, 4)] {
            for _ in 0..n {
                text.push_str(&format!("{{\"x\":0}}\tgo\t{{\"x\":{k}}}\n"));
            }
        }
        let t = table(&text);
        let p: Vec<f64> = t.distribution(&[0], "go").unwrap().into_iter().map(|x| x.1).collect();
        assert_eq!(p, vec![0.97, 0.01, 0.01, 0.01]);
    }

    #[test]
    fn unobserved_pairs_are_reported() {
        let t = table("{\"x\":0}\tgo\t{\"x\":1}\n");
        assert!(matches!(t.distribution(&[1], "go"), Err(GridError::EmptyCell { .. })));
        assert!(matches!(t.distribution(&[0], "stop"), Err(GridError::EmptyCell { .. })));
    }

    #[test]
    fn schema_mismatch_is_rejected() {
        assert!(parse_traces("{\"x\":0}\tgo\t{\"y\":1}\n").is_err());
        assert!(parse_traces("{\"x\":0}\tgo\t{\"x\":true}\n").is_err());
        assert!(parse_traces("{\"x\":0}\tgo\n").is_err());
    }

    #[test]
    fn emitted_model_builds() {
        let t = table(
            "{\"x\":0,\"ok\":true}\tgo\t{\"x\":1,\"ok\":true}\n\
             {\"x\":0,\"ok\":true}\tgo\t{\"x\":2,\"ok\":false}\n\
             {\"x\":1,\"ok\":true}\tgo\t{\"x\":2,\"ok\":true}\n",
        );
        let m = t.to_model().unwrap();
        assert!(parley_prism::is_well_formed(&m));
        let d = crate::mc::build(&m, &crate::mc::BuildOptions::default()).unwrap();
        assert_eq!(d.num_states(), 4);
        let p = crate::mc::prob_reach(&d, "done", &Default::default()).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }
}
