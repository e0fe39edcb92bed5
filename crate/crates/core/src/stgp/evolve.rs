use std::io::{self, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::expr::ExprTree;
use super::ops::{crossover, point_mutate};
use crate::rng::stream;
use crate::session::{run_session_indexed, ConfigError, SessionConfig};
use crate::traders::StrategySpec;

#[derive(Debug, Error, PartialEq)]
pub enum GpError {
    #[error("cannot select from an empty population")]
    EmptyPopulation,
    #[error("individual {0} has no fitness yet")]
    Unevaluated(u64),
    #[error("template has {seats} STGP seats but the population has {individuals} individuals")]
    SeatMismatch { seats: usize, individuals: usize },
    #[error("invalid GP parameters: {0}")]
    Params(&'static str),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub id: u64,
    pub genome: ExprTree,
    /// Session profit; `None` until evaluated.
    pub fitness: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    /// 1-based generation index.
    pub generation: u32,
    pub individuals: Vec<Individual>,
}

impl Population {
    pub fn seeded(n: usize, genome: &ExprTree) -> Self {
        let individuals = (0..n as u64).map(|id| Individual { id, genome: genome.clone(), fitness: None }).collect();
        Population { generation: 1, individuals }
    }

    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }
}

fn default_generations() -> u32 {
    40
}
fn default_p_crossover() -> f64 {
    0.9
}
fn default_p_mutation() -> f64 {
    0.05
}
fn default_max_depth() -> usize {
    8
}
fn default_const_pool() -> Vec<i64> {
    vec![1, 7]
}
fn default_epsilon_sel() -> f64 {
    1e-6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpParams {
    #[serde(default = "default_generations")]
    pub generations: u32,
    #[serde(default = "default_p_crossover")]
    pub p_crossover: f64,
    /// Per-node point-mutation probability.
    #[serde(default = "default_p_mutation")]
    pub p_mutation: f64,
    #[serde(default = "default_max_depth")]
    pub max_depth: usize,
    #[serde(default = "default_const_pool")]
    pub const_pool: Vec<i64>,
    #[serde(default = "default_epsilon_sel")]
    pub epsilon_sel: f64,
}

impl Default for GpParams {
    fn default() -> Self {
        GpParams {
            generations: default_generations(),
            p_crossover: default_p_crossover(),
            p_mutation: default_p_mutation(),
            max_depth: default_max_depth(),
            const_pool: default_const_pool(),
            epsilon_sel: default_epsilon_sel(),
        }
    }
}

impl GpParams {
    pub fn validate(&self) -> Result<(), GpError> {
        if !(0.0..=1.0).contains(&self.p_crossover) {
            return Err(GpError::Params("p_crossover must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.p_mutation) {
            return Err(GpError::Params("p_mutation must lie in [0, 1]"));
        }
        if self.max_depth < 1 {
            return Err(GpError::Params("max_depth must be at least 1"));
        }
        if self.const_pool.is_empty() {
            return Err(GpError::Params("const_pool must not be empty"));
        }
        if !(self.epsilon_sel > 0.0) || !self.epsilon_sel.is_finite() {
            return Err(GpError::Params("epsilon_sel must be positive"));
        }
        Ok(())
    }
}

/// Roulette wheel over `f - min(f) + epsilon`.
pub fn select_parent<'a, R: Rng + ?Sized>(
    pop: &'a Population,
    epsilon: f64,
    rng: &mut R,
) -> Result<&'a Individual, GpError> {
    let weights = shifted_fitness(pop, epsilon)?;
    let total: f64 = weights.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (ind, w) in pop.individuals.iter().zip(&weights) {
        if x < *w {
            return Ok(ind);
        }
        x -= w;
    }
    // rounding can leave x a hair above the last weight
    Ok(pop.individuals.last().expect("non-empty"))
}

fn shifted_fitness(pop: &Population, epsilon: f64) -> Result<Vec<f64>, GpError> {
    if pop.is_empty() {
        return Err(GpError::EmptyPopulation);
    }
    let f: Vec<f64> = pop.individuals.iter().map(|i| i.fitness.ok_or(GpError::Unevaluated(i.id))).collect::<Result<_, _>>()?;
    let min = f.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(f.iter().map(|x| x - min + epsilon).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenStats {
    pub generation: u32,
    pub max_fitness: f64,
    pub mean_fitness: f64,
    /// Population standard deviation.
    pub std_fitness: f64,
    pub mean_size: f64,
    pub elite: ExprTree,
}

impl GenStats {
    fn of(pop: &Population) -> Result<Self, GpError> {
        let n = pop.len() as f64;
        let f: Vec<f64> = pop.individuals.iter().map(|i| i.fitness.ok_or(GpError::Unevaluated(i.id))).collect::<Result<_, _>>()?;
        let mean = f.iter().sum::<f64>() / n;
        let var = f.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        // first individual wins ties for elite
        let mut best = 0;
        for (k, &x) in f.iter().enumerate() {
            if x > f[best] {
                best = k;
            }
        }
        Ok(GenStats {
            generation: pop.generation,
            max_fitness: f[best],
            mean_fitness: mean,
            std_fitness: var.sqrt(),
            mean_size: pop.individuals.iter().map(|i| i.genome.size() as f64).sum::<f64>() / n,
            elite: pop.individuals[best].genome.clone(),
        })
    }
}

/// `gen,max_fitness,mean_fitness,std_fitness,mean_size`
pub fn write_gen_stats_csv<W: Write>(mut w: W, stats: &[GenStats]) -> io::Result<()> {
    writeln!(w, "gen,max_fitness,mean_fitness,std_fitness,mean_size")?;
    for s in stats {
        writeln!(w, "{},{},{},{},{}", s.generation, s.max_fitness, s.mean_fitness, s.std_fitness, s.mean_size)?;
    }
    Ok(())
}

/// One line per generation: `gen=<g> fitness=<f> <genome>`.
pub fn write_elites<W: Write>(mut w: W, stats: &[GenStats]) -> io::Result<()> {
    for s in stats {
        writeln!(w, "gen={} fitness={} {}", s.generation, s.max_fitness, s.elite)?;
    }
    Ok(())
}

/// Expanded-roster seat ids that hold STGP traders, in id order.
pub fn stgp_seats(template: &SessionConfig) -> Vec<usize> {
    template
        .expanded_roster()
        .iter()
        .enumerate()
        .filter(|(_, e)| matches!(e.strategy, StrategySpec::Stgp(_)))
        .map(|(i, _)| i)
        .collect()
}

/// The first STGP genome in the template, used to seed generation 1.
pub fn template_genome(template: &SessionConfig) -> Option<ExprTree> {
    template.roster.iter().find_map(|e| match &e.strategy {
        StrategySpec::Stgp(g) => Some(g.clone()),
        _ => None,
    })
}

/// Seats each individual in one STGP seat of `template` and runs one session.
/// Fitness is the individual's total profit in that session.
pub fn evaluate(pop: &mut Population, template: &SessionConfig, seed: u64) -> Result<(), GpError> {
    let seats = stgp_seats(template);
    if seats.len() != pop.len() {
        return Err(GpError::SeatMismatch { seats: seats.len(), individuals: pop.len() });
    }
    let mut cfg = template.clone();
    cfg.roster = template.expanded_roster();
    for (seat, ind) in seats.iter().zip(&pop.individuals) {
        cfg.roster[*seat].strategy = StrategySpec::Stgp(ind.genome.clone());
    }
    cfg.seed = seed;
    let result = run_session_indexed(&cfg, pop.generation as u64)?;
    for (seat, ind) in seats.iter().zip(pop.individuals.iter_mut()) {
        ind.fitness = Some(result.profits[*seat] as f64);
    }
    Ok(())
}

/// Breeds a full child population from an evaluated one.
pub fn breed<R: Rng + ?Sized>(pop: &Population, params: &GpParams, rng: &mut R) -> Result<Population, GpError> {
    params.validate()?;
    let n = pop.len();
    let mut genomes = Vec::with_capacity(n + 1);
    while genomes.len() < n {
        let a = &select_parent(pop, params.epsilon_sel, rng)?.genome;
        let b = &select_parent(pop, params.epsilon_sel, rng)?.genome;
        let (c1, c2) = if rng.random_bool(params.p_crossover) {
            crossover(a, b, params.max_depth, rng)
        } else {
            (a.clone(), b.clone())
        };
        genomes.push(point_mutate(&c1, &params.const_pool, params.p_mutation, rng));
        genomes.push(point_mutate(&c2, &params.const_pool, params.p_mutation, rng));
    }
    genomes.truncate(n);
    let base = pop.generation as u64 * n as u64;
    let individuals = genomes
        .into_iter()
        .enumerate()
        .map(|(k, genome)| Individual { id: base + k as u64, genome, fitness: None })
        .collect();
    Ok(Population { generation: pop.generation + 1, individuals })
}

/// Evaluates `pop` in a fresh session and breeds its successor. The
/// returned stats describe the evaluated (parent) population.
pub fn run_generation(
    pop: &Population,
    template: &SessionConfig,
    params: &GpParams,
    seed: u64,
) -> Result<(Population, GenStats), GpError> {
    let mut evaluated = pop.clone();
    evaluate(&mut evaluated, template, seed)?;
    let stats = GenStats::of(&evaluated)?;
    let mut rng = stream(seed, &[pop.generation as u64, 2]);
    let next = breed(&evaluated, params, &mut rng)?;
    Ok((next, stats))
}

/// Runs `params.generations` generations from a population seeded with the
/// template's STGP genome.
pub fn run_evolution(template: &SessionConfig, params: &GpParams, seed: u64) -> Result<Vec<GenStats>, GpError> {
    params.validate()?;
    let seats = stgp_seats(template).len();
    let genome = template_genome(template).ok_or(GpError::SeatMismatch { seats: 0, individuals: 0 })?;
    let mut pop = Population::seeded(seats, &genome);
    let mut out = Vec::with_capacity(params.generations as usize);
    for _ in 0..params.generations {
        let (next, stats) = run_generation(&pop, template, params, seed)?;
        out.push(stats);
        pop = next;
    }
    Ok(out)
}
