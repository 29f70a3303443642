//! Plain-text chain format:
//!
//! ```text
//! STATES 3 INITIAL 0
//! 0 1 0.5 go
//! 0 2 0.5 go
//! 1 1 1
//! 2 2 1
//! LABEL goal: 1
//! REWARD cost: 0=1
//! ```
//!
//! `REWARD` lines list the nonzero per-state rewards. Imported chains have
//! no variable layout.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::{ExplicitDtmc, McError};

pub fn export(d: &ExplicitDtmc) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "STATES {} INITIAL {}", d.num_states(), d.initial);
    for s in 0..d.num_states() {
        for (t, p) in d.row(s) {
            let _ = write!(out, "{s} {t} {p}");
            if let Some(a) = d.action(s) {
                let _ = write!(out, " {a}");
            }
            out.push('\n');
        }
    }
    for (name, set) in &d.labels {
        let _ = write!(out, "LABEL {name}:");
        for (s, _) in set.iter().enumerate().filter(|(_, &b)| b) {
            let _ = write!(out, " {s}");
        }
        out.push('\n');
    }
    for (name, r) in &d.rewards {
        let _ = write!(out, "REWARD {name}:");
        for (s, v) in r.iter().enumerate().filter(|(_, &v)| v != 0.0) {
            let _ = write!(out, " {s}={v}");
        }
        out.push('\n');
    }
    out
}

pub fn import(text: &str) -> Result<ExplicitDtmc, McError> {
    let err = |line: usize, message: &str| McError::Import {
        line,
        message: message.to_string(),
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let (ln, header) = lines.next().ok_or_else(|| err(1, "empty file"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    let (n, initial) = match h.as_slice() {
        ["STATES", n, "INITIAL", i] => (
            n.parse::<usize>().map_err(|_| err(ln, "bad state count"))?,
            i.parse::<u32>().map_err(|_| err(ln, "bad initial state"))?,
        ),
        _ => return Err(err(ln, "expected `STATES n INITIAL i`")),
    };
    if initial as usize >= n {
        return Err(err(ln, "initial state out of range"));
    }

    let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    let mut actions: Vec<Option<u32>> = vec![None; n];
    let mut action_names: Vec<String> = Vec::new();
    let mut labels: Vec<(String, Vec<bool>)> = Vec::new();
    let mut rewards: Vec<(String, Vec<f64>)> = Vec::new();
    let mut action_ids: BTreeMap<String, u32> = BTreeMap::new();

    for (ln, line) in lines {
        if let Some(rest) = line.strip_prefix("LABEL ") {
            let (name, members) = rest.split_once(':').ok_or_else(|| err(ln, "expected `LABEL name: ...`"))?;
            let mut set = vec![false; n];
            for m in members.split_whitespace() {
                let s: usize = m.parse().map_err(|_| err(ln, "bad state index"))?;
                *set.get_mut(s).ok_or_else(|| err(ln, "state index out of range"))? = true;
            }
            labels.push((name.trim().to_string(), set));
        } else if let Some(rest) = line.strip_prefix("REWARD ") {
            let (name, items) = rest.split_once(':').ok_or_else(|| err(ln, "expected `REWARD name: ...`"))?;
            let mut r = vec![0.0; n];
            for item in items.split_whitespace() {
                let (s, v) = item.split_once('=').ok_or_else(|| err(ln, "expected `state=value`"))?;
                let s: usize = s.parse().map_err(|_| err(ln, "bad state index"))?;
                let v: f64 = v.parse().map_err(|_| err(ln, "bad reward value"))?;
                *r.get_mut(s).ok_or_else(|| err(ln, "state index out of range"))? = v;
            }
            rewards.push((name.trim().to_string(), r));
        } else {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() < 3 || f.len() > 4 {
                return Err(err(ln, "expected `src dst prob [action]`"));
            }
            let s: usize = f[0].parse().map_err(|_| err(ln, "bad source"))?;
            let t: u32 = f[1].parse().map_err(|_| err(ln, "bad target"))?;
            let p: f64 = f[2].parse().map_err(|_| err(ln, "bad probability"))?;
            if s >= n || t as usize >= n {
                return Err(err(ln, "state index out of range"));
            }
            let action = f.get(3).map(|a| {
                let next = action_ids.len() as u32;
                *action_ids.entry(a.to_string()).or_insert_with(|| {
                    action_names.push(a.to_string());
                    next
                })
            });
            if !rows[s].is_empty() && actions[s] != action {
                return Err(err(ln, "a state may take only one action"));
            }
            actions[s] = action;
            rows[s].push((t, p));
        }
    }

    let mut row_ptr = vec![0u32];
    let mut cols = Vec::new();
    let mut probs = Vec::new();
    for (s, row) in rows.iter().enumerate() {
        if row.is_empty() {
            return Err(err(0, &format!("state {s} has no transitions")));
        }
        let sum: f64 = row.iter().map(|(_, p)| p).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(err(0, &format!("row {s} sums to {sum}")));
        }
        for &(t, p) in row {
            cols.push(t);
            probs.push(p);
        }
        row_ptr.push(cols.len() as u32);
    }
    Ok(ExplicitDtmc {
        vars: Vec::new(),
        states: (0..n as u128).collect(),
        initial,
        row_ptr,
        cols,
        probs,
        actions,
        action_names,
        rewards,
        labels,
    })
}
