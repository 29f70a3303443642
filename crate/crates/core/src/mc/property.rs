use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::solve::{expected_reward, prob_reach, SolverOptions};
use super::{ExplicitDtmc, McError};

/// The unnested PCTL fragment: `P=? [F "l"]` and `R{"r"}=? [F "l"]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Property {
    ReachProbability { target: String },
    ExpectedReward { reward: String, target: String },
}

impl Property {
    pub fn reach(target: &str) -> Self {
        Property::ReachProbability { target: target.into() }
    }

    pub fn reward(reward: &str, target: &str) -> Self {
        Property::ExpectedReward {
            reward: reward.into(),
            target: target.into(),
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Property::ReachProbability { target } => write!(f, "P=? [F \"{target}\"]"),
            Property::ExpectedReward { reward, target } => write!(f, "R{{\"{reward}\"}}=? [F \"{target}\"]"),
        }
    }
}

fn quoted(s: &str) -> Option<&str> {
    let inner = s.strip_prefix('"')?.strip_suffix('"')?;
    (!inner.is_empty() && !inner.contains('"')).then_some(inner)
}

impl FromStr for Property {
    type Err = McError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || McError::BadProperty(s.to_string());
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let (head, body) = compact.split_once("=?").ok_or_else(bad)?;
        let target = body
            .strip_prefix("[F")
            .and_then(|b| b.strip_suffix(']'))
            .and_then(quoted)
            .ok_or_else(bad)?
            .to_string();
        if head == "P" {
            return Ok(Property::ReachProbability { target });
        }
        let reward = head
            .strip_prefix("R{")
            .and_then(|h| h.strip_suffix('}'))
            .and_then(quoted)
            .ok_or_else(bad)?
            .to_string();
        Ok(Property::ExpectedReward { reward, target })
    }
}

impl Serialize for Property {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Property {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    #[serde(alias = "max")]
    Maximize,
    #[serde(alias = "min")]
    Minimize,
}

/// A named property together with its optimisation direction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Objective {
    pub name: String,
    pub property: Property,
    pub sense: Sense,
}

impl Objective {
    pub fn new(name: &str, property: Property, sense: Sense) -> Self {
        Self {
            name: name.into(),
            property,
            sense,
        }
    }
}

pub fn check(d: &ExplicitDtmc, property: &Property) -> Result<f64, McError> {
    check_with(d, property, &SolverOptions::default())
}

pub fn check_with(d: &ExplicitDtmc, property: &Property, opts: &SolverOptions) -> Result<f64, McError> {
    match property {
        Property::ReachProbability { target } => prob_reach(d, target, opts),
        Property::ExpectedReward { reward, target } => expected_reward(d, reward, target, opts),
    }
}
