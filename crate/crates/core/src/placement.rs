//! Choosing `L` of `M` candidate positions to maximize effective rank.
//!
//! [`ga_optimize`] is a seeded subset genetic algorithm (population 20,
//! tournament-2 selection, uniform crossover with duplicate repair, per-gene
//! mutation, elitism) that stops once the best fitness has gained less than
//! `stall_tolerance` per generation over `stall_generations` generations.
//! [`exhaustive_search`] enumerates every combination and serves as the
//! reference for small problems.

use std::collections::HashMap;
use std::sync::Mutex;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ghrtf::{stack_ghrtf, validate_indices, validate_selection, GhrtfDatabase};
use crate::par;
use crate::rank::effective_rank;

/// Upper bound on the number of subsets [`exhaustive_search`] will enumerate.
pub const EXHAUSTIVE_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArraySelection {
    /// Distinct candidate indices in ascending order.
    pub indices: Vec<usize>,
    /// Objective value (higher is better).
    pub fitness: f64,
    pub effective_rank: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// Fitness is `R(H_L)`.
    Maximize,
    /// Fitness is `−|R(H_L) − r|`.
    TargetRank(f64),
}

impl Target {
    pub fn score(&self, effective_rank: f64) -> f64 {
        match *self {
            Target::Maximize => effective_rank,
            Target::TargetRank(r) => -(effective_rank - r).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub stall_generations: usize,
    pub stall_tolerance: f64,
    pub max_generations: usize,
    /// Per-gene mutation probability; `None` means `1/L`.
    pub mutation_rate: Option<f64>,
    pub elitism_count: usize,
    pub rng_seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 20,
            stall_generations: 50,
            stall_tolerance: 1e-6,
            max_generations: 500,
            mutation_rate: None,
            elitism_count: 1,
            rng_seed: 0,
        }
    }
}

impl GaConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::invalid("population size must be ≥ 2"));
        }
        if self.elitism_count >= self.population_size {
            return Err(Error::invalid("elitism count must be below the population size"));
        }
        let positive_tolerance = self.stall_tolerance > 0.0;
        if self.stall_generations == 0 || !positive_tolerance {
            return Err(Error::invalid("stall generations and tolerance must be > 0"));
        }
        if let Some(p) = self.mutation_rate {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("mutation rate {p} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaResult {
    pub selection: ArraySelection,
    /// Best-ever fitness after each generation (entry 0 is the initial population).
    pub trace: Vec<f64>,
    pub generations: usize,
    /// Distinct subsets whose effective rank was computed.
    pub evaluations: usize,
}

/// The matrices and objective shared by every evaluation of one problem.
pub struct Problem<'a> {
    pub db: &'a GhrtfDatabase,
    pub frequency_indices: &'a [usize],
    pub direction_indices: &'a [usize],
    pub target: Target,
}

impl<'a> Problem<'a> {
    pub fn new(
        db: &'a GhrtfDatabase,
        frequency_indices: &'a [usize],
        direction_indices: &'a [usize],
        target: Target,
    ) -> Result<Self> {
        validate_indices(frequency_indices, db.num_frequencies(), "frequency")?;
        validate_indices(direction_indices, db.num_directions(), "direction")?;
        Ok(Problem {
            db,
            frequency_indices,
            direction_indices,
            target,
        })
    }

    pub fn effective_rank(&self, indices: &[usize]) -> Result<f64> {
        let h = stack_ghrtf(self.db, indices, self.frequency_indices, self.direction_indices)?;
        Ok(effective_rank(&h)?.effective_rank)
    }

    pub fn selection(&self, indices: &[usize]) -> Result<ArraySelection> {
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        let r = self.effective_rank(&sorted)?;
        Ok(ArraySelection {
            indices: sorted,
            fitness: self.target.score(r),
            effective_rank: r,
        })
    }
}

/// Objective value of one selection. Duplicates are an error, not repaired.
pub fn fitness(
    db: &GhrtfDatabase,
    indices: &[usize],
    frequency_indices: &[usize],
    direction_indices: &[usize],
    target: Target,
) -> Result<f64> {
    validate_selection(indices, db.num_candidates())?;
    let p = Problem::new(db, frequency_indices, direction_indices, target)?;
    Ok(target.score(p.effective_rank(indices)?))
}

/// Effective ranks memoized by sorted index set; the rank does not depend on row order.
struct RankCache<'p, 'a> {
    problem: &'p Problem<'a>,
    ranks: Mutex<HashMap<Vec<usize>, f64>>,
}

impl<'p, 'a> RankCache<'p, 'a> {
    fn new(problem: &'p Problem<'a>) -> Self {
        RankCache {
            problem,
            ranks: Mutex::new(HashMap::new()),
        }
    }

    fn len(&self) -> usize {
        self.ranks.lock().expect("cache lock").len()
    }

    /// Fitness of every genome, computing missing ranks in parallel.
    fn fitness_of(&self, genomes: &[Vec<usize>]) -> Result<Vec<f64>> {
        let missing: Vec<Vec<usize>> = {
            let ranks = self.ranks.lock().expect("cache lock");
            let mut seen = std::collections::BTreeSet::new();
            genomes
                .iter()
                .filter(|g| !ranks.contains_key(*g) && seen.insert((*g).clone()))
                .cloned()
                .collect()
        };
        let computed = par::map_slice(&missing, |g| self.problem.effective_rank(g));
        {
            let mut ranks = self.ranks.lock().expect("cache lock");
            for (g, r) in missing.into_iter().zip(computed) {
                ranks.insert(g, r?);
            }
        }
        let ranks = self.ranks.lock().expect("cache lock");
        Ok(genomes
            .iter()
            .map(|g| self.problem.target.score(ranks[g]))
            .collect())
    }

    fn rank_of(&self, genome: &[usize]) -> f64 {
        self.ranks.lock().expect("cache lock")[genome]
    }
}

/// `true` if `(fa, a)` ranks ahead of `(fb, b)`: higher fitness, then lexicographically smaller.
fn ahead(fa: f64, a: &[usize], fb: f64, b: &[usize]) -> bool {
    fa > fb || (fa == fb && a < b)
}

pub fn random_selection<R: Rng + ?Sized>(rng: &mut R, m: usize, l: usize) -> Vec<usize> {
    let mut v = index::sample(rng, m, l).into_vec();
    v.sort_unstable();
    v
}

fn random_unused<R: Rng + ?Sized>(rng: &mut R, m: usize, used: &[usize]) -> usize {
    let free: Vec<usize> = (0..m).filter(|c| !used.contains(c)).collect();
    free[rng.random_range(0..free.len())]
}

fn tournament<R: Rng + ?Sized>(rng: &mut R, pop: &[Vec<usize>], fit: &[f64]) -> usize {
    let a = rng.random_range(0..pop.len());
    let b = rng.random_range(0..pop.len());
    if ahead(fit[b], &pop[b], fit[a], &pop[a]) {
        b
    } else {
        a
    }
}

fn offspring<R: Rng + ?Sized>(
    rng: &mut R,
    m: usize,
    mother: &[usize],
    father: &[usize],
    mutation_rate: f64,
) -> Vec<usize> {
    let l = mother.len();
    let mut child: Vec<usize> = (0..l)
        .map(|g| if rng.random_bool(0.5) { mother[g] } else { father[g] })
        .collect();
    // repair duplicates, preferring parental genes the child does not carry yet
    for g in 0..l {
        if child[..g].contains(&child[g]) {
            let spare = mother
                .iter()
                .chain(father)
                .copied()
                .find(|c| !child.contains(c));
            child[g] = match spare {
                Some(c) => c,
                None => random_unused(rng, m, &child),
            };
        }
    }
    for g in 0..l {
        if rng.random_bool(mutation_rate) {
            child[g] = random_unused(rng, m, &child);
        }
    }
    child.sort_unstable();
    child
}

fn best_of(pop: &[Vec<usize>], fit: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..pop.len() {
        if ahead(fit[i], &pop[i], fit[best], &pop[best]) {
            best = i;
        }
    }
    best
}

pub fn ga_optimize(
    db: &GhrtfDatabase,
    l: usize,
    frequency_indices: &[usize],
    direction_indices: &[usize],
    target: Target,
    config: &GaConfig,
) -> Result<GaResult> {
    let problem = Problem::new(db, frequency_indices, direction_indices, target)?;
    ga_optimize_problem(&problem, l, config)
}

pub fn ga_optimize_problem(problem: &Problem<'_>, l: usize, config: &GaConfig) -> Result<GaResult> {
    config.validate()?;
    let m = problem.db.num_candidates();
    if l == 0 || l > m {
        return Err(Error::invalid(format!("cannot choose {l} of {m} candidates")));
    }
    if l == m {
        let selection = problem.selection(&(0..m).collect::<Vec<_>>())?;
        return Ok(GaResult {
            trace: vec![selection.fitness],
            selection,
            generations: 0,
            evaluations: 1,
        });
    }

    let mutation_rate = config.mutation_rate.unwrap_or(1.0 / l as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let cache = RankCache::new(problem);

    let mut pop: Vec<Vec<usize>> = (0..config.population_size)
        .map(|_| random_selection(&mut rng, m, l))
        .collect();
    let mut fit = cache.fitness_of(&pop)?;
    let b = best_of(&pop, &fit);
    let (mut best, mut best_fit) = (pop[b].clone(), fit[b]);
    let mut trace = vec![best_fit];

    let mut generations = 0;
    while generations < config.max_generations {
        generations += 1;
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| {
            fit[b]
                .total_cmp(&fit[a])
                .then_with(|| pop[a].cmp(&pop[b]))
        });
        let mut next: Vec<Vec<usize>> = order[..config.elitism_count]
            .iter()
            .map(|&i| pop[i].clone())
            .collect();
        while next.len() < config.population_size {
            let mother = tournament(&mut rng, &pop, &fit);
            let father = tournament(&mut rng, &pop, &fit);
            next.push(offspring(&mut rng, m, &pop[mother], &pop[father], mutation_rate));
        }
        pop = next;
        fit = cache.fitness_of(&pop)?;
        let b = best_of(&pop, &fit);
        if ahead(fit[b], &pop[b], best_fit, &best) {
            best = pop[b].clone();
            best_fit = fit[b];
        }
        trace.push(best_fit);

        let s = config.stall_generations;
        if generations >= s {
            let gain = (trace[generations] - trace[generations - s]).abs() / s as f64;
            if gain < config.stall_tolerance {
                break;
            }
        }
    }

    let effective_rank = cache.rank_of(&best);
    Ok(GaResult {
        selection: ArraySelection {
            indices: best,
            fitness: best_fit,
            effective_rank,
        },
        trace,
        generations,
        evaluations: cache.len(),
    })
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        out.push(c.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if c[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        c[i] += 1;
        for j in i + 1..k {
            c[j] = c[j - 1] + 1;
        }
    }
}

/// Exact optimum over all `C(M, L)` subsets; ties go to the lexicographically first.
pub fn exhaustive_search(
    db: &GhrtfDatabase,
    l: usize,
    frequency_indices: &[usize],
    direction_indices: &[usize],
    target: Target,
) -> Result<ArraySelection> {
    let problem = Problem::new(db, frequency_indices, direction_indices, target)?;
    let m = db.num_candidates();
    if l == 0 || l > m {
        return Err(Error::invalid(format!("cannot choose {l} of {m} candidates")));
    }
    let count = binomial(m, l);
    if count > EXHAUSTIVE_LIMIT {
        return Err(Error::Capacity {
            count,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let combos = combinations(m, l);
    let ranks = par::map_slice(&combos, |c| problem.effective_rank(c))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for i in 1..combos.len() {
        if target.score(ranks[i]) > target.score(ranks[best]) {
            best = i;
        }
    }
    Ok(ArraySelection {
        indices: combos[best].clone(),
        fitness: target.score(ranks[best]),
        effective_rank: ranks[best],
    })
}
