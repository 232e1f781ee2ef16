//! Genetic search over forests.
//!
//! Each generation scores the population, breeds crossover children from the
//! best half, keeps the best `population` of parents and children, then
//! mutates and regrows trees in every member except the single best. The best
//! candidate therefore never gets worse, and the search stops as soon as its
//! AIC reaches `aic_threshold`.

mod cache;
mod log;
mod operators;

pub use cache::TermCache;
pub use log::{read_evolution_log, write_evolution_log, EVOLUTION_LOG_HEADER};
pub use operators::{cross, crossover_step, init_population, mutate_forest, replace_tree};

use std::cmp::Ordering;
use std::collections::HashSet;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ConfigError;
use crate::eval::{evaluate_tree, ut_vector, Dataset, FeatureMatrix, FieldColumn};
use crate::expr::{canonical_key, to_computable_string, to_display_string, Forest, GenConfig};
use crate::regress::{score, CandidateScore, RegressionParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GAConfig {
    pub generations: usize,
    /// Population size, an even number `2n`; the best `n` breed.
    pub population: usize,
    pub p_operand: f64,
    pub p_mutate_node: f64,
    pub p_cross: f64,
    pub p_replace_tree: f64,
    pub max_width: usize,
    pub max_depth: usize,
    pub aic_threshold: f64,
    pub rng_seed: u64,
    pub regression: RegressionParams,
}

impl Default for GAConfig {
    fn default() -> Self {
        GAConfig {
            generations: 100,
            population: 20,
            p_operand: 0.5,
            p_mutate_node: 0.3,
            p_cross: 0.5,
            p_replace_tree: 0.3,
            max_width: 5,
            max_depth: 4,
            aic_threshold: -10.0,
            rng_seed: 0,
            regression: RegressionParams::default(),
        }
    }
}

impl GAConfig {
    pub fn gen_config(&self) -> GenConfig {
        GenConfig {
            max_depth: self.max_depth,
            max_width: self.max_width,
            p_operand: self.p_operand,
            rng_seed: self.rng_seed,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.generations < 1 {
            return Err(ConfigError::invalid("generations", "must be at least 1"));
        }
        if self.population < 4 || !self.population.is_multiple_of(2) {
            return Err(ConfigError::invalid(
                "population",
                "must be even and at least 4",
            ));
        }
        for (name, p) in [
            ("p_mutate_node", self.p_mutate_node),
            ("p_cross", self.p_cross),
            ("p_replace_tree", self.p_replace_tree),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(ConfigError::invalid(name, "must lie in [0, 1]"));
            }
        }
        if self.aic_threshold.is_nan() {
            return Err(ConfigError::invalid("aic_threshold", "must not be NaN"));
        }
        self.gen_config().validate()?;
        self.regression.validate()
    }
}

/// A forest with its canonical key and, once evaluated, its score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    #[serde(with = "forest_string")]
    pub forest: Forest,
    pub key: String,
    pub score: Option<CandidateScore>,
}

mod forest_string {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::expr::{parse_forest, Forest};

    pub fn serialize<S: Serializer>(f: &Forest, s: S) -> Result<S::Ok, S::Error> {
        f.to_string().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Forest, D::Error> {
        let s = String::deserialize(d)?;
        parse_forest(&s).map_err(serde::de::Error::custom)
    }
}

impl Candidate {
    pub fn new(forest: Forest) -> Self {
        let key = canonical_key(&forest);
        Candidate {
            forest,
            key,
            score: None,
        }
    }

    /// Replaces the forest, keeping the score only if the forest is unchanged.
    pub fn with_forest(&self, forest: Forest) -> Candidate {
        if forest == self.forest {
            return self.clone();
        }
        Candidate::new(forest)
    }

    fn rank(&self) -> (f64, usize) {
        match &self.score {
            Some(s) if s.valid => (s.aic, s.k),
            _ => (f64::INFINITY, usize::MAX),
        }
    }

    /// Fitted equation `u_t = c1 * term1 + ...` over the non-zero terms.
    pub fn equation(&self) -> String {
        match &self.score {
            Some(s) if s.valid => format_equation(&self.forest, &s.xi),
            _ => "u_t = 0".to_string(),
        }
    }
}

/// Ascending AIC, invalid last; ties go to fewer terms, then to the key.
pub fn compare_candidates(a: &Candidate, b: &Candidate) -> Ordering {
    let (aa, ak) = a.rank();
    let (ba, bk) = b.rank();
    aa.total_cmp(&ba)
        .then(ak.cmp(&bk))
        .then_with(|| a.key.cmp(&b.key))
}

/// Four significant digits.
pub fn format_coefficient(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let mag = v.abs().log10().floor() as i32;
    if !(-5..6).contains(&mag) {
        return format!("{v:.3e}");
    }
    let decimals = (3 - mag).max(0) as usize;
    format!("{v:.decimals$}")
}

pub fn format_equation(forest: &Forest, xi: &[f64]) -> String {
    let mut out = String::from("u_t =");
    let mut first = true;
    for (tree, &c) in forest.trees().iter().zip(xi) {
        if c == 0.0 {
            continue;
        }
        let term = to_display_string(tree);
        let mag = format_coefficient(c.abs());
        match (first, c < 0.0) {
            (true, false) => out.push_str(&format!(" {mag} * {term}")),
            (true, true) => out.push_str(&format!(" -{mag} * {term}")),
            (false, false) => out.push_str(&format!(" + {mag} * {term}")),
            (false, true) => out.push_str(&format!(" - {mag} * {term}")),
        }
        first = false;
    }
    if first {
        out.push_str(" 0");
    }
    out
}

/// Best candidate of one generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    /// 1-based generation index.
    pub generation: usize,
    pub aic: f64,
    pub mse: f64,
    pub k: usize,
    pub equation: String,
}

/// What [`evolve_with`] reports while it runs.
#[derive(Debug, Clone, Copy)]
pub enum GenerationEvent<'a> {
    /// The scored population of a generation, best first.
    Population {
        generation: usize,
        members: &'a [Candidate],
    },
    /// Best candidate after scoring a generation.
    Best(&'a GenerationRecord),
    /// Crossover children admitted in a generation, after the `seen` filter.
    Children {
        generation: usize,
        children: &'a [Candidate],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryResult {
    pub best: Candidate,
    pub equation_display: String,
    pub generations_run: usize,
    pub converged: bool,
    pub history: Vec<GenerationRecord>,
}

#[derive(Debug, Error)]
pub enum EvolveError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("dataset unusable: {0}")]
    Dataset(String),
}

/// Settings that change how a run executes but not what it computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads for scoring; 0 or 1 scores on the calling thread.
    pub threads: usize,
    /// Memory budget for cached term columns.
    pub cache_bytes: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            threads: 1,
            cache_bytes: 256 << 20,
        }
    }
}

/// Scores candidates against one dataset, reusing evaluated term columns.
pub struct Scorer<'a> {
    data: &'a Dataset,
    y: FieldColumn,
    params: RegressionParams,
    cache: TermCache,
    pool: Option<rayon::ThreadPool>,
}

impl<'a> Scorer<'a> {
    pub fn new(
        data: &'a Dataset,
        params: RegressionParams,
        opts: RunOptions,
    ) -> Result<Self, EvolveError> {
        let y = ut_vector(data);
        if y.is_empty() {
            return Err(EvolveError::Dataset(
                "no rows left after boundary trim".into(),
            ));
        }
        if !y.is_finite() {
            return Err(EvolveError::Dataset(
                "u_t contains non-finite values".into(),
            ));
        }
        let pool = if opts.threads > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(opts.threads)
                    .build()
                    .map_err(|e| EvolveError::Dataset(format!("thread pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(Scorer {
            cache: TermCache::with_budget(opts.cache_bytes, y.len()),
            data,
            y,
            params,
            pool,
        })
    }

    pub fn target(&self) -> &FieldColumn {
        &self.y
    }

    pub fn cache(&self) -> &TermCache {
        &self.cache
    }

    fn run<T: Send, F: FnOnce() -> T + Send>(&self, f: F) -> T {
        match &self.pool {
            Some(pool) => pool.install(f),
            None => f(),
        }
    }

    /// Fills in the score of every candidate that lacks one.
    pub fn score_all(&mut self, cands: &mut [Candidate]) {
        self.cache.tick();
        let mut missing = Vec::new();
        let mut queued = HashSet::new();
        for c in cands.iter().filter(|c| c.score.is_none()) {
            for t in c.forest.trees() {
                let key = to_computable_string(t);
                if self.cache.get(&key).is_none() && queued.insert(key.clone()) {
                    missing.push((key, t.clone()));
                }
            }
        }
        let data = self.data;
        let fresh: Vec<(String, Arc<FieldColumn>)> = self.run(|| {
            missing
                .into_par_iter()
                .map(|(key, t)| (key, Arc::new(evaluate_tree(&t, data))))
                .collect()
        });
        let mut pending: Vec<(usize, FeatureMatrix)> = Vec::new();
        let fresh_cols: std::collections::HashMap<String, Arc<FieldColumn>> =
            fresh.into_iter().collect();
        for (i, c) in cands.iter().enumerate().filter(|(_, c)| c.score.is_none()) {
            let columns = c
                .forest
                .trees()
                .iter()
                .map(|t| {
                    let key = to_computable_string(t);
                    fresh_cols
                        .get(&key)
                        .cloned()
                        .or_else(|| self.cache.get(&key))
                        .expect("evaluated above")
                })
                .collect();
            let labels = c.forest.trees().iter().map(to_display_string).collect();
            pending.push((i, FeatureMatrix::new(columns, labels)));
        }
        for (k, col) in fresh_cols {
            self.cache.insert(k, col);
        }
        let y = &self.y;
        let params = &self.params;
        let scores: Vec<(usize, CandidateScore)> = self.run(|| {
            pending
                .into_par_iter()
                .map(|(i, phi)| (i, score(&phi, y, params)))
                .collect()
        });
        for (i, s) in scores {
            cands[i].score = Some(s);
        }
    }
}

fn sort(pop: &mut [Candidate]) {
    pop.sort_by(compare_candidates);
}

/// Keeps the best `size`, preferring distinct keys and topping up with
/// repeats only when there are too few.
pub fn select(mut merged: Vec<Candidate>, size: usize) -> Vec<Candidate> {
    sort(&mut merged);
    let mut keys = HashSet::new();
    let (mut unique, mut dupes): (Vec<_>, Vec<_>) =
        merged.into_iter().partition(|c| keys.insert(c.key.clone()));
    unique.truncate(size);
    let short = size.saturating_sub(unique.len());
    unique.extend(dupes.drain(..short.min(dupes.len())));
    sort(&mut unique);
    unique
}

fn record(generation: usize, best: &Candidate) -> GenerationRecord {
    let s = best
        .score
        .clone()
        .unwrap_or_else(|| CandidateScore::invalid(best.forest.len()));
    GenerationRecord {
        generation,
        aic: s.aic,
        mse: s.mse,
        k: s.k,
        equation: best.equation(),
    }
}

/// Runs the genetic search on one dataset, single-threaded.
pub fn evolve(cfg: &GAConfig, d: &Dataset) -> Result<DiscoveryResult, EvolveError> {
    evolve_with(cfg, d, RunOptions::default(), |_| {})
}

/// Runs the genetic search, reporting progress to `observe`.
///
/// Results depend only on `cfg` and `d`; `opts` never changes them.
pub fn evolve_with(
    cfg: &GAConfig,
    d: &Dataset,
    opts: RunOptions,
    mut observe: impl FnMut(GenerationEvent<'_>),
) -> Result<DiscoveryResult, EvolveError> {
    cfg.validate()?;
    let mut scorer = Scorer::new(d, cfg.regression, opts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut pop = init_population(cfg, &mut rng);
    let mut seen: HashSet<String> = pop.iter().map(|c| c.key.clone()).collect();
    let mut history = Vec::new();

    for generation in 1..=cfg.generations {
        scorer.score_all(&mut pop);
        sort(&mut pop);
        observe(GenerationEvent::Population {
            generation,
            members: &pop,
        });
        let rec = record(generation, &pop[0]);
        observe(GenerationEvent::Best(&rec));
        history.push(rec);
        if pop[0].rank().0 <= cfg.aic_threshold || generation == cfg.generations {
            break;
        }

        let mut children = crossover_step(&pop, &mut seen, cfg, &mut rng);
        observe(GenerationEvent::Children {
            generation,
            children: &children,
        });
        scorer.score_all(&mut children);
        pop.extend(children);
        pop = select(pop, cfg.population);

        for c in pop.iter_mut().skip(1) {
            let m = mutate_forest(c, cfg, &mut rng);
            *c = replace_tree(&m, cfg, &mut rng);
            seen.insert(c.key.clone());
        }
    }

    let best = pop.swap_remove(0);
    let converged = best.rank().0 <= cfg.aic_threshold;
    Ok(DiscoveryResult {
        equation_display: best.equation(),
        generations_run: history.len(),
        converged,
        history,
        best,
    })
}
