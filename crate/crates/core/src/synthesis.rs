//! Policy search over an augmented model: fixed-period baselines, NSGA-II
//! with model-checked fitness and an exhaustive oracle for small spaces.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::Arc;

use dashmap::DashMap;
use parley_prism::Model;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::{check_policy, enumerate_params, AugmentError, ParamInfo, Policy};
use crate::mc::{build_compiled, check_with, compile, BuildOptions, CompiledModel, McError, Objective, Sense, SolverOptions};

/// Objective value given to policies whose expected reward diverges.
pub const DIVERGENT_SENTINEL: f64 = 1e9;

/// Default cap on the number of policies `exhaustive` will evaluate.
pub const EXHAUSTIVE_CAP: u128 = 100_000;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Mc(#[from] McError),
    #[error("search space of {size} policies exceeds the cap of {cap}")]
    SearchSpaceTooLarge { size: String, cap: u128 },
    #[error("invalid search configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedPolicy {
    pub policy: Policy,
    /// One value per objective, in objective order.
    pub objectives: Vec<f64>,
    pub states: usize,
    pub transitions: usize,
    /// Whether some reward objective diverged and was replaced by the sentinel.
    pub diverged: bool,
}

/// `a` dominates `b`: no worse on every axis and strictly better on one.
pub fn dominates(a: &[f64], b: &[f64], senses: &[Sense]) -> bool {
    let mut strict = false;
    for ((&x, &y), s) in a.iter().zip(b).zip(senses) {
        let (x, y) = match s {
            Sense::Maximize => (x, y),
            Sense::Minimize => (-x, -y),
        };
        if x < y {
            return false;
        }
        strict |= x > y;
    }
    strict
}

/// `a` is no worse than `b` on every axis.
pub fn weakly_dominates(a: &[f64], b: &[f64], senses: &[Sense]) -> bool {
    a.iter().zip(b).zip(senses).all(|((&x, &y), s)| match s {
        Sense::Maximize => x >= y,
        Sense::Minimize => x <= y,
    })
}

/// Cache shared between evaluators, keyed by model hash and policy.
pub type EvalCache = DashMap<([u8; 32], Vec<i64>), EvaluatedPolicy>;

/// Instantiates, builds and checks policies of one augmented model.
pub struct Evaluator {
    compiled: CompiledModel,
    params: Vec<ParamInfo>,
    objectives: Vec<Objective>,
    pub build_options: BuildOptions,
    pub solver: SolverOptions,
    cache: Arc<EvalCache>,
    evaluations: AtomicUsize,
    hits: AtomicUsize,
}

impl Evaluator {
    pub fn new(model: &Model, objectives: Vec<Objective>) -> Result<Self, SynthError> {
        Self::with_cache(model, objectives, Arc::default())
    }

    pub fn with_cache(model: &Model, objectives: Vec<Objective>, cache: Arc<EvalCache>) -> Result<Self, SynthError> {
        if objectives.is_empty() {
            return Err(SynthError::Config("no objectives".into()));
        }
        Ok(Self {
            compiled: compile(model)?,
            params: enumerate_params(model)?,
            objectives,
            build_options: BuildOptions::default(),
            solver: SolverOptions::default(),
            cache,
            evaluations: AtomicUsize::new(0),
            hits: AtomicUsize::new(0),
        })
    }

    pub fn params(&self) -> &[ParamInfo] {
        &self.params
    }

    pub fn objectives(&self) -> &[Objective] {
        &self.objectives
    }

    pub fn senses(&self) -> Vec<Sense> {
        self.objectives.iter().map(|o| o.sense).collect()
    }

    /// Model checker runs so far, excluding cache hits.
    pub fn evaluations(&self) -> usize {
        self.evaluations.load(AtomicOrdering::Relaxed)
    }

    pub fn cache_hits(&self) -> usize {
        self.hits.load(AtomicOrdering::Relaxed)
    }

    /// Number of policies, saturating.
    pub fn space_size(&self) -> u128 {
        self.params.iter().fold(1u128, |acc, p| acc.saturating_mul(p.size() as u128))
    }

    pub fn evaluate(&self, policy: &Policy) -> Result<EvaluatedPolicy, SynthError> {
        let key = (self.compiled.hash, policy.0.clone());
        if let Some(hit) = self.cache.get(&key) {
            self.hits.fetch_add(1, AtomicOrdering::Relaxed);
            return Ok(hit.clone());
        }
        check_policy(&self.params, policy)?;
        let d = build_compiled(&self.compiled, &policy.0, &self.build_options)?;
        self.evaluations.fetch_add(1, AtomicOrdering::Relaxed);
        let mut diverged = false;
        let mut objectives = Vec::with_capacity(self.objectives.len());
        for o in &self.objectives {
            let v = match check_with(&d, &o.property, &self.solver) {
                Ok(v) => v,
                Err(McError::DivergentReward { .. }) => {
                    diverged = true;
                    match o.sense {
                        Sense::Minimize => DIVERGENT_SENTINEL,
                        Sense::Maximize => -DIVERGENT_SENTINEL,
                    }
                }
                Err(e) => return Err(e.into()),
            };
            objectives.push(v);
        }
        let out = EvaluatedPolicy {
            policy: policy.clone(),
            objectives,
            states: d.num_states(),
            transitions: d.num_transitions(),
            diverged,
        };
        self.cache.insert(key, out.clone());
        Ok(out)
    }

    /// Evaluates in parallel, preserving input order.
    pub fn evaluate_all(&self, policies: &[Policy]) -> Result<Vec<EvaluatedPolicy>, SynthError> {
        policies.par_iter().map(|p| self.evaluate(p)).collect()
    }
}

/// Policies setting every parameter to the same value, one per value of
/// the common domain (the fixed-period baseline).
pub fn baseline_policies(params: &[ParamInfo]) -> Vec<Policy> {
    let lo = params.iter().map(|p| p.lo).max().unwrap_or(0);
    let hi = params.iter().map(|p| p.hi).min().unwrap_or(-1);
    (lo..=hi).map(|k| Policy::uniform(params.len(), k)).collect()
}

/// Mutually non-dominated evaluated policies, one per objective vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoFront {
    pub objectives: Vec<Objective>,
    pub points: Vec<EvaluatedPolicy>,
}

impl ParetoFront {
    /// Non-dominated subset of `points`; among policies with identical
    /// objective vectors the first is kept. Sorted by the first objective,
    /// best first.
    pub fn from_points(objectives: Vec<Objective>, points: impl IntoIterator<Item = EvaluatedPolicy>) -> Self {
        let senses: Vec<Sense> = objectives.iter().map(|o| o.sense).collect();
        let mut all: Vec<EvaluatedPolicy> = Vec::new();
        for p in points {
            if !all.iter().any(|q| q.objectives == p.objectives) {
                all.push(p);
            }
        }
        let mut keep: Vec<EvaluatedPolicy> = all
            .iter()
            .filter(|p| !all.iter().any(|q| dominates(&q.objectives, &p.objectives, &senses)))
            .cloned()
            .collect();
        let first = senses.first().copied().unwrap_or(Sense::Maximize);
        keep.sort_by(|a, b| {
            let o = a.objectives.partial_cmp(&b.objectives).unwrap_or(Ordering::Equal);
            match first {
                Sense::Maximize => o.reverse(),
                Sense::Minimize => o,
            }
        });
        Self { objectives, points: keep }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn senses(&self) -> Vec<Sense> {
        self.objectives.iter().map(|o| o.sense).collect()
    }

    pub fn vectors(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| p.objectives.clone()).collect()
    }

    /// Whether every point of `other` is weakly dominated by some point here.
    pub fn covers(&self, other: &ParetoFront) -> bool {
        let senses = self.senses();
        other
            .points
            .iter()
            .all(|o| self.points.iter().any(|p| weakly_dominates(&p.objectives, &o.objectives, &senses)))
    }

    /// CSV with `policy_id` followed by one column per objective.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("policy_id");
        for o in &self.objectives {
            s.push(',');
            s.push_str(&o.name);
        }
        s.push('\n');
        for (i, p) in self.points.iter().enumerate() {
            s.push_str(&i.to_string());
            for v in &p.objectives {
                s.push_str(&format!(",{v}"));
            }
            s.push('\n');
        }
        s
    }

    /// JSON object mapping each CSV `policy_id` to its parameter vector.
    pub fn policies_json(&self) -> serde_json::Value {
        self.points
            .iter()
            .enumerate()
            .map(|(i, p)| (i.to_string(), serde_json::json!(p.policy.0)))
            .collect::<serde_json::Map<_, _>>()
            .into()
    }
}

/// Partition into successive non-dominated fronts (indices into `points`).
pub fn fast_non_dominated_sort(points: &[Vec<f64>], senses: &[Sense]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut count = vec![0usize; n];
    for i in 0..n {
        for j in i + 1..n {
            if dominates(&points[i], &points[j], senses) {
                dominated_by[i].push(j);
                count[j] += 1;
            } else if dominates(&points[j], &points[i], senses) {
                dominated_by[j].push(i);
                count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by[i] {
                count[j] -= 1;
                if count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of one front; boundary points get +inf.
pub fn crowding_distance(points: &[Vec<f64>], front: &[usize]) -> Vec<f64> {
    let m = front.len();
    let mut dist = vec![0.0; m];
    if m <= 2 {
        return vec![f64::INFINITY; m];
    }
    let dims = points[front[0]].len();
    for k in 0..dims {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| points[front[a]][k].total_cmp(&points[front[b]][k]));
        let lo = points[front[order[0]]][k];
        let hi = points[front[order[m - 1]]][k];
        dist[order[0]] = f64::INFINITY;
        dist[order[m - 1]] = f64::INFINITY;
        if hi > lo {
            for w in 1..m - 1 {
                let gap = points[front[order[w + 1]]][k] - points[front[order[w - 1]]][k];
                dist[order[w]] += gap / (hi - lo);
            }
        }
    }
    dist
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    /// Per-gene reset probability; `None` means one over the policy length.
    pub mutation_rate: Option<f64>,
    pub tournament: usize,
    pub seed: u64,
    /// Put the baseline policies into the initial population.
    pub seed_baseline: bool,
    /// Give a child that repeats a current policy a further gene reset.
    pub eliminate_duplicates: bool,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 100,
            generations: 40,
            crossover_rate: 0.9,
            mutation_rate: None,
            tournament: 2,
            seed: 0,
            seed_baseline: true,
            eliminate_duplicates: true,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::Config(m.into()));
        if self.population < 4 || self.population % 2 != 0 {
            return bad("population must be even and at least 4");
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return bad("crossover rate must lie in [0,1]");
        }
        if self.mutation_rate.is_some_and(|r| !(0.0..=1.0).contains(&r)) {
            return bad("mutation rate must lie in [0,1]");
        }
        if self.tournament < 1 {
            return bad("tournament size must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GaOutcome {
    /// Non-dominated set of every policy evaluated during the run.
    pub front: ParetoFront,
    /// Final population, best ranks first.
    pub population: Vec<EvaluatedPolicy>,
    pub evaluated: usize,
}

const DUPLICATE_RETRIES: usize = 16;

/// Sets one gene with more than one admissible value to a different value.
fn reset_one_gene(rng: &mut ChaCha8Rng, genes: &mut [i64], params: &[ParamInfo]) {
    let free: Vec<usize> = (0..params.len()).filter(|&i| params[i].size() > 1).collect();
    if let Some(&i) = free.choose(rng) {
        let p = &params[i];
        let mut v = rng.random_range(p.lo..p.hi);
        if v >= genes[i] {
            v += 1;
        }
        genes[i] = v;
    }
}

fn random_policy(rng: &mut ChaCha8Rng, params: &[ParamInfo]) -> Policy {
    Policy(params.iter().map(|p| rng.random_range(p.lo..=p.hi)).collect())
}

/// Rank and crowding of every member of `pop`.
fn rank_and_crowd(pop: &[EvaluatedPolicy], senses: &[Sense]) -> (Vec<Vec<usize>>, Vec<usize>, Vec<f64>) {
    let vecs: Vec<Vec<f64>> = pop.iter().map(|p| p.objectives.clone()).collect();
    let fronts = fast_non_dominated_sort(&vecs, senses);
    let mut rank = vec![0; pop.len()];
    let mut crowd = vec![0.0; pop.len()];
    for (r, f) in fronts.iter().enumerate() {
        for (&i, d) in f.iter().zip(crowding_distance(&vecs, f)) {
            rank[i] = r;
            crowd[i] = d;
        }
    }
    (fronts, rank, crowd)
}

pub fn nsga2(eval: &Evaluator, cfg: &GaConfig) -> Result<GaOutcome, SynthError> {
    cfg.validate()?;
    let params = eval.params();
    if params.is_empty() {
        return Err(SynthError::Config("model has no decision parameters".into()));
    }
    let senses = eval.senses();
    let len = params.len();
    let mutation = cfg.mutation_rate.unwrap_or(1.0 / len as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut initial: Vec<Policy> = Vec::with_capacity(cfg.population);
    if cfg.seed_baseline {
        initial.extend(baseline_policies(params).into_iter().take(cfg.population));
    }
    while initial.len() < cfg.population {
        initial.push(random_policy(&mut rng, params));
    }
    let mut pop = eval.evaluate_all(&initial)?;
    let mut archive: Vec<EvaluatedPolicy> = pop.clone();

    for _ in 0..cfg.generations {
        let (_, rank, crowd) = rank_and_crowd(&pop, &senses);
        let better = |a: usize, b: usize| rank[a] < rank[b] || (rank[a] == rank[b] && crowd[a] > crowd[b]);
        let idx: Vec<usize> = (0..pop.len()).collect();
        let select = |rng: &mut ChaCha8Rng| {
            let mut best = *idx.choose(rng).expect("population is non-empty");
            for _ in 1..cfg.tournament {
                let c = *idx.choose(rng).expect("population is non-empty");
                if better(c, best) {
                    best = c;
                }
            }
            best
        };
        let mut seen: HashSet<Vec<i64>> = pop.iter().map(|p| p.policy.0.clone()).collect();
        let mut offspring: Vec<Policy> = Vec::with_capacity(cfg.population);
        while offspring.len() < cfg.population {
            let (a, b) = (select(&mut rng), select(&mut rng));
            let (mut x, mut y) = (pop[a].policy.0.clone(), pop[b].policy.0.clone());
            if len > 1 && rng.random_bool(cfg.crossover_rate) {
                let cut = rng.random_range(1..len);
                x[cut..].swap_with_slice(&mut y[cut..]);
            }
            for child in [&mut x, &mut y] {
                for (g, p) in child.iter_mut().zip(params) {
                    if rng.random_bool(mutation) {
                        *g = rng.random_range(p.lo..=p.hi);
                    }
                }
            }
            for mut child in [x, y] {
                if cfg.eliminate_duplicates {
                    for _ in 0..DUPLICATE_RETRIES {
                        if !seen.contains(&child) {
                            break;
                        }
                        reset_one_gene(&mut rng, &mut child, params);
                    }
                    seen.insert(child.clone());
                }
                offspring.push(Policy(child));
            }
        }
        let children = eval.evaluate_all(&offspring)?;
        archive.extend(children.iter().cloned());

        let mut merged = pop;
        merged.extend(children);
        let (fronts, _, _) = rank_and_crowd(&merged, &senses);
        let vecs: Vec<Vec<f64>> = merged.iter().map(|p| p.objectives.clone()).collect();
        let mut chosen: Vec<usize> = Vec::with_capacity(cfg.population);
        for f in fronts {
            if chosen.len() + f.len() <= cfg.population {
                chosen.extend(&f);
            } else {
                let d = crowding_distance(&vecs, &f);
                let mut order: Vec<usize> = (0..f.len()).collect();
                order.sort_by(|&a, &b| d[b].total_cmp(&d[a]));
                chosen.extend(order.into_iter().take(cfg.population - chosen.len()).map(|k| f[k]));
            }
            if chosen.len() == cfg.population {
                break;
            }
        }
        pop = chosen.into_iter().map(|i| merged[i].clone()).collect();
    }

    let evaluated = archive.len();
    Ok(GaOutcome {
        front: ParetoFront::from_points(eval.objectives().to_vec(), archive),
        population: pop,
        evaluated,
    })
}

/// Evaluates every policy and returns the exact Pareto front.
pub fn exhaustive(eval: &Evaluator, cap: u128) -> Result<ParetoFront, SynthError> {
    let size = eval.space_size();
    if size > cap {
        let size = match size {
            u128::MAX => "more than 2^128".to_string(),
            s => s.to_string(),
        };
        return Err(SynthError::SearchSpaceTooLarge { size, cap });
    }
    let params = eval.params();
    let policies: Vec<Policy> = (0..size)
        .map(|mut i| {
            let mut v = vec![0; params.len()];
            for (k, p) in params.iter().enumerate().rev() {
                let r = p.size() as u128;
                v[k] = p.lo + (i % r) as i64;
                i /= r;
            }
            Policy(v)
        })
        .collect();
    let all = eval.evaluate_all(&policies)?;
    Ok(ParetoFront::from_points(eval.objectives().to_vec(), all))
}
