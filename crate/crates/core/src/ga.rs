//! Genetic search over edge-spreading splits.
//!
//! Individuals are splits of one fixed base. Fitness is
//! `N_c * N_max - sum(N_it)` over a descending PEXIT ladder that stops at
//! the first failure.

use std::collections::HashMap;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pexit::{descend, Level, PexitConfig};
use crate::protograph::{CodeDesign, Protomatrix, SplitSet};

/// Search parameters. Field names double as the TOML keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population: usize,
    pub elites: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub width: usize,
    pub coupling_length: usize,
    pub start_db: f64,
    /// Cap on ladder rungs per fitness evaluation.
    pub max_levels: usize,
    pub max_generations: usize,
    /// Stop after this many generations without a better best-ever
    /// fitness. Zero disables the rule.
    pub patience: usize,
    pub seed: u64,
    pub pexit: PexitConfig,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 30,
            elites: 4,
            crossover_prob: 0.8,
            mutation_prob: 0.6,
            width: 1,
            coupling_length: 10,
            start_db: -0.30,
            max_levels: 40,
            max_generations: 100,
            patience: 0,
            seed: 0,
            pexit: PexitConfig::default(),
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.elites == 0 {
            return bad("need at least one elite");
        }
        if self.elites > self.population || (self.population - self.elites) % 2 == 1 {
            return bad("population minus elites must be a nonnegative even number");
        }
        for p in [self.crossover_prob, self.mutation_prob] {
            if !(0.0..=1.0).contains(&p) {
                return bad("probabilities must lie in [0, 1]");
            }
        }
        if self.coupling_length == 0 {
            return bad("coupling length must be positive");
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: GaConfig = toml::from_str(text).map_err(|e| Error::Parse {
            line: e.span().map_or(0, |s| text[..s.start].lines().count().max(1)),
            message: e.message().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// `N_c * N_max - sum(N_it)` over the converged prefix of a ladder.
pub fn fitness_value(max_iter: usize, iterations: &[usize]) -> u64 {
    iterations.iter().map(|&n| max_iter.saturating_sub(n) as u64).sum()
}

/// Fitness of a ladder as produced by [`descend`].
pub fn ladder_fitness(max_iter: usize, levels: &[Level]) -> u64 {
    let its: Vec<usize> = levels
        .iter()
        .take_while(|l| l.outcome.converged)
        .map(|l| l.outcome.iterations)
        .collect();
    fitness_value(max_iter, &its)
}

/// Anything that scores a split.
pub trait Fitness: Sync {
    fn score(&self, split: &SplitSet) -> Result<u64>;
}

/// The layered-PEXIT fitness.
#[derive(Clone, Debug)]
pub struct PexitFitness {
    pub order: u32,
    pub coupling_length: usize,
    pub start_db: f64,
    pub max_levels: usize,
    pub pexit: PexitConfig,
}

impl PexitFitness {
    pub fn new(order: u32, cfg: &GaConfig) -> Self {
        PexitFitness {
            order,
            coupling_length: cfg.coupling_length,
            start_db: cfg.start_db,
            max_levels: cfg.max_levels,
            pexit: cfg.pexit,
        }
    }

    pub fn ladder(&self, split: &SplitSet) -> Result<Vec<Level>> {
        let design = CodeDesign::new(self.order, split.clone());
        descend(&design, self.coupling_length, self.start_db, &self.pexit, self.max_levels)
    }
}

impl Fitness for PexitFitness {
    fn score(&self, split: &SplitSet) -> Result<u64> {
        Ok(ladder_fitness(self.pexit.max_iter, &self.ladder(split)?))
    }
}

/// All ways to write `total` as an ordered sum of `parts` nonnegative terms.
pub fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    fn rec(left: u32, slots: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if slots == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for v in 0..=left {
            cur.push(v);
            rec(left - v, slots - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if parts > 0 {
        rec(total, parts, &mut Vec::with_capacity(parts), &mut out);
    }
    out
}

fn set_composition(split: &mut SplitSet, u: usize, v: usize, comp: &[u32]) {
    for (p, &x) in split.parts_mut().iter_mut().zip(comp) {
        p.set(u, v, x).expect("composition entry fits a cell");
    }
}

/// A split whose every cell takes a uniformly random composition.
pub fn random_split<R: Rng>(base: &Protomatrix, width: usize, rng: &mut R) -> SplitSet {
    let mut split = SplitSet::trivial(base.clone(), width);
    for u in 0..base.rows() {
        for v in 0..base.cols() {
            let b = base.get(u, v);
            if b > 0 {
                let all = compositions(b, width + 1);
                let pick = &all[rng.random_range(0..all.len())];
                set_composition(&mut split, u, v, pick);
            }
        }
    }
    split
}

/// Roulette probabilities `f_k / sum f`, uniform when every fitness is 0.
pub fn selection_probabilities(fitness: &[u64]) -> Vec<f64> {
    let total: u64 = fitness.iter().sum();
    if total == 0 {
        return vec![1.0 / fitness.len() as f64; fitness.len()];
    }
    fitness.iter().map(|&f| f as f64 / total as f64).collect()
}

/// Indices of the parents filling the offspring slots: the `elites` fittest
/// first (ties by index), then roulette draws with replacement.
pub fn select<R: Rng>(fitness: &[u64], cfg: &GaConfig, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitness.len()).collect();
    order.sort_by(|&a, &b| fitness[b].cmp(&fitness[a]).then(a.cmp(&b)));
    let mut out: Vec<usize> = order[..cfg.elites.min(fitness.len())].to_vec();
    let probs = selection_probabilities(fitness);
    let wheel = WeightedIndex::new(&probs).expect("probabilities are positive somewhere");
    while out.len() < cfg.population {
        out.push(wheel.sample(rng));
    }
    out
}

/// Exchanges, in every part, the column-major run of cells from
/// `(u1, v1)` to `(u2, v2)` between two splits of one base.
pub fn swap_interval(a: &mut SplitSet, b: &mut SplitSet, from: (usize, usize), to: (usize, usize)) {
    let m = a.base().rows();
    let start = from.1 * m + from.0;
    let end = to.1 * m + to.0;
    for (pa, pb) in a.parts_mut().iter_mut().zip(b.parts_mut().iter_mut()) {
        for idx in start..=end {
            let (u, v) = (idx % m, idx / m);
            let (x, y) = (pa.get(u, v), pb.get(u, v));
            pa.set(u, v, y).expect("entry fits");
            pb.set(u, v, x).expect("entry fits");
        }
    }
}

/// Column-wise interval crossover, applied with probability `p_c`.
/// Returns the swapped interval, if any.
pub fn crossover<R: Rng>(a: &mut SplitSet, b: &mut SplitSet, cfg: &GaConfig, rng: &mut R) -> Option<((usize, usize), (usize, usize))> {
    let (m, n) = (a.base().rows(), a.base().cols());
    let (mut u1, mut u2) = (rng.random_range(0..m), rng.random_range(0..m));
    let (mut v1, mut v2) = (rng.random_range(0..n), rng.random_range(0..n));
    if u1 > u2 {
        std::mem::swap(&mut u1, &mut u2);
    }
    if v1 > v2 {
        std::mem::swap(&mut v1, &mut v2);
    }
    if !rng.random_bool(cfg.crossover_prob) {
        return None;
    }
    swap_interval(a, b, (u1, v1), (u2, v2));
    Some(((u1, v1), (u2, v2)))
}

/// With probability `p_m`, picks a random nonzero base cell and moves it to
/// a different composition drawn uniformly. Returns the mutated cell.
pub fn mutate<R: Rng>(split: &mut SplitSet, cfg: &GaConfig, rng: &mut R) -> Option<(usize, usize)> {
    let base = split.base().clone();
    let cells: Vec<(usize, usize)> = (0..base.rows())
        .flat_map(|u| (0..base.cols()).map(move |v| (u, v)))
        .filter(|&(u, v)| base.get(u, v) > 0)
        .collect();
    if cells.is_empty() {
        return None;
    }
    let (u, v) = cells[rng.random_range(0..cells.len())];
    if !rng.random_bool(cfg.mutation_prob) {
        return None;
    }
    let current = split.composition(u, v);
    let others: Vec<Vec<u32>> = compositions(base.get(u, v), split.parts().len())
        .into_iter()
        .filter(|c| *c != current)
        .collect();
    if others.is_empty() {
        return None;
    }
    let pick = &others[rng.random_range(0..others.len())];
    set_composition(split, u, v, pick);
    Some((u, v))
}

/// Best and mean fitness of one evaluated generation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: u64,
    pub mean: f64,
}

/// Everything needed to continue a search exactly where it stopped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config: GaConfig,
    pub order: u32,
    /// Generation about to be evaluated.
    pub generation: usize,
    pub population: Vec<SplitSet>,
    pub rng: ChaCha8Rng,
    pub best: Option<(SplitSet, u64)>,
    pub since_improvement: usize,
    pub log: Vec<GenerationStats>,
    pub memo: Vec<(SplitSet, u64)>,
}

impl Checkpoint {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string(self).map_err(|e| Error::Io(e.to_string()))?;
        let tmp = path.as_ref().with_extension("tmp");
        std::fs::write(&tmp, text)?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })
    }
}

/// Outcome of [`Search::run`].
#[derive(Clone, Debug, PartialEq)]
pub struct Evolution {
    pub best: SplitSet,
    pub best_fitness: u64,
    pub log: Vec<GenerationStats>,
}

/// A resumable genetic search.
pub struct Search {
    state: Checkpoint,
    memo: HashMap<SplitSet, u64>,
}

impl Search {
    /// Fresh search over `base` with a random initial population.
    pub fn new(base: &Protomatrix, order: u32, cfg: &GaConfig) -> Result<Self> {
        cfg.validate()?;
        if base.is_zero() {
            return Err(Error::InvalidParameter("base matrix has no edges".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let population = (0..cfg.population).map(|_| random_split(base, cfg.width, &mut rng)).collect();
        Ok(Search {
            state: Checkpoint {
                config: cfg.clone(),
                order,
                generation: 0,
                population,
                rng,
                best: None,
                since_improvement: 0,
                log: Vec::new(),
                memo: Vec::new(),
            },
            memo: HashMap::new(),
        })
    }

    /// Fresh search whose initial population starts with `seeds`.
    pub fn with_population(base: &Protomatrix, order: u32, cfg: &GaConfig, seeds: Vec<SplitSet>) -> Result<Self> {
        let mut s = Self::new(base, order, cfg)?;
        for (slot, split) in s.state.population.iter_mut().zip(seeds) {
            split.validate()?;
            if split.base() != base || split.width() != cfg.width {
                return Err(Error::InvalidParameter("seed individual has a different base or width".into()));
            }
            *slot = split;
        }
        Ok(s)
    }

    pub fn resume(checkpoint: Checkpoint) -> Result<Self> {
        checkpoint.config.validate()?;
        let memo = checkpoint.memo.iter().cloned().collect();
        Ok(Search { state: checkpoint, memo })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let mut c = self.state.clone();
        let mut memo: Vec<(SplitSet, u64)> = self.memo.iter().map(|(k, v)| (k.clone(), *v)).collect();
        memo.sort_by(|a, b| format!("{:?}", a.0.parts()).cmp(&format!("{:?}", b.0.parts())));
        c.memo = memo;
        c
    }

    pub fn generation(&self) -> usize {
        self.state.generation
    }

    pub fn population(&self) -> &[SplitSet] {
        &self.state.population
    }

    pub fn is_done(&self) -> bool {
        let cfg = &self.state.config;
        self.state.generation >= cfg.max_generations || (cfg.patience > 0 && self.state.since_improvement >= cfg.patience)
    }

    /// Scores the current population, memoizing by split.
    pub fn evaluate<F: Fitness>(&mut self, fitness: &F) -> Result<Vec<u64>> {
        let todo: Vec<SplitSet> = {
            let mut seen = std::collections::HashSet::new();
            self.state
                .population
                .iter()
                .filter(|s| !self.memo.contains_key(*s) && seen.insert((*s).clone()))
                .cloned()
                .collect()
        };
        let scored: Vec<Result<u64>> = todo.par_iter().map(|s| fitness.score(s)).collect();
        for (s, f) in todo.into_iter().zip(scored) {
            self.memo.insert(s, f?);
        }
        Ok(self.state.population.iter().map(|s| self.memo[s]).collect())
    }

    /// Evaluates the current generation, logs it and breeds the next.
    pub fn step<F: Fitness>(&mut self, fitness: &F) -> Result<GenerationStats> {
        let scores = self.evaluate(fitness)?;
        let cfg = self.state.config.clone();
        let (best_idx, &best) = scores
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("population is not empty");
        let stats = GenerationStats {
            generation: self.state.generation,
            best,
            mean: scores.iter().sum::<u64>() as f64 / scores.len() as f64,
        };
        match &self.state.best {
            Some((_, f)) if *f >= best => self.state.since_improvement += 1,
            _ => {
                self.state.best = Some((self.state.population[best_idx].clone(), best));
                self.state.since_improvement = 0;
            }
        }
        self.state.log.push(stats.clone());

        let rng = &mut self.state.rng;
        let picks = select(&scores, &cfg, rng);
        let mut next: Vec<SplitSet> = picks.iter().map(|&i| self.state.population[i].clone()).collect();
        let mut pairs: Vec<usize> = (cfg.elites..cfg.population).collect();
        pairs.shuffle(rng);
        for pair in pairs.chunks_exact(2) {
            let (i, j) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            let (lo, hi) = next.split_at_mut(j);
            crossover(&mut lo[i], &mut hi[0], &cfg, rng);
        }
        for ind in &mut next[cfg.elites..] {
            mutate(ind, &cfg, rng);
        }
        self.state.population = next;
        self.state.generation += 1;
        Ok(stats)
    }

    /// Runs until the generation budget or the plateau rule stops it,
    /// calling `on_generation` after every generation.
    pub fn run<F: Fitness>(
        &mut self,
        fitness: &F,
        mut on_generation: impl FnMut(&Search, &GenerationStats) -> Result<()>,
    ) -> Result<Evolution> {
        while !self.is_done() {
            let stats = self.step(fitness)?;
            on_generation(self, &stats)?;
        }
        let (best, best_fitness) = self.state.best.clone().ok_or_else(|| Error::InvalidParameter("no generation was evaluated".into()))?;
        Ok(Evolution {
            best,
            best_fitness,
            log: self.state.log.clone(),
        })
    }
}
