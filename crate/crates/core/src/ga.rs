//! Real-coded genetic algorithm over symmetry-folded chromosomes.
//!
//! Each generation keeps the best members unchanged (capped by
//! `elite_fraction_cap`) and fills the rest with tournament-selected,
//! two-point-crossed, mutated and repaired offspring. Fitness is `1/MSE`
//! evaluated against a frozen sample bank, so it is a deterministic function
//! of the genes and the best fitness can never decrease.
//!
//! All random choices are drawn sequentially from one seeded stream; only
//! fitness evaluation runs in parallel.

use std::fmt::Write;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::channel::ChannelModel;
use crate::distortion::SampleBank;
use crate::geometry::{
    decode, repair, Chromosome, Constellation, GeneKind, GeneLayout, Mapping, SymmetryClass,
};
use crate::rng::derive_seed;
use crate::{Error, Result};

/// Floor applied to MSE before inversion.
pub const MSE_FLOOR: f64 = 1e-9;

const SELECTION_STREAM: u64 = 0x005E_1EC7;

#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    pub population: usize,
    pub p_mut: f64,
    pub p_cross: f64,
    /// Fraction of genes perturbed when a mutation fires.
    pub gene_vary_fraction: f64,
    /// Upper bound on the share of the next generation copied unchanged.
    pub elite_fraction_cap: f64,
    pub max_generations: usize,
    pub tournament_size: usize,
    pub fitness_samples: u64,
    pub seed: u64,
    /// Relative fitness spread `(max − min)/max` regarded as converged.
    pub convergence_epsilon: f64,
    /// Consecutive converged generations before stopping.
    pub convergence_patience: usize,
    /// Mutation standard deviation for radius genes (amplitude).
    pub radius_sigma: f64,
    /// Mutation standard deviation for angle genes (radians).
    pub angle_sigma: f64,
    /// Evaluation threads; 0 uses the global pool.
    pub workers: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 100,
            p_mut: 0.3,
            p_cross: 0.5,
            gene_vary_fraction: 0.1,
            elite_fraction_cap: 0.4,
            max_generations: 200,
            tournament_size: 2,
            fitness_samples: 100_000,
            seed: 1,
            convergence_epsilon: 1e-6,
            convergence_patience: 10,
            radius_sigma: 0.05,
            angle_sigma: 0.05,
            workers: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::GaConfig(msg));
        if self.population < 4 || !self.population.is_multiple_of(2) {
            return fail(format!(
                "population must be even and at least 4, got {}",
                self.population
            ));
        }
        for (name, p) in [("p_mut", self.p_mut), ("p_cross", self.p_cross)] {
            if !(0.0..=1.0).contains(&p) {
                return fail(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        for (name, f) in [
            ("gene_vary_fraction", self.gene_vary_fraction),
            ("elite_fraction_cap", self.elite_fraction_cap),
        ] {
            if !(f > 0.0 && f <= 1.0) {
                return fail(format!("{name} must lie in (0, 1], got {f}"));
            }
        }
        if self.tournament_size == 0 || self.tournament_size > self.population {
            return fail(format!(
                "tournament_size must lie in 1..={}, got {}",
                self.population, self.tournament_size
            ));
        }
        if self.fitness_samples == 0 {
            return fail("fitness_samples must be at least 1".into());
        }
        if self.convergence_epsilon.is_nan() || self.convergence_epsilon < 0.0 {
            return fail(format!(
                "convergence_epsilon must be non-negative, got {}",
                self.convergence_epsilon
            ));
        }
        for (name, s) in [
            ("radius_sigma", self.radius_sigma),
            ("angle_sigma", self.angle_sigma),
        ] {
            if !(s > 0.0 && s.is_finite()) {
                return fail(format!("{name} must be positive, got {s}"));
            }
        }
        Ok(())
    }

    /// Members carried over unchanged: `⌊cap · population⌋`, at least one.
    pub fn elite_count(&self) -> usize {
        ((self.elite_fraction_cap * self.population as f64 + 1e-9).floor() as usize)
            .clamp(1, self.population)
    }

    /// Gene positions perturbed per mutation: `⌈fraction · len⌉`.
    pub fn mutated_genes(&self, len: usize) -> usize {
        ((self.gene_vary_fraction * len as f64 - 1e-9).ceil() as usize).clamp(1, len.max(1))
    }
}

/// `1/MSE` with the MSE floored at [`MSE_FLOOR`].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Fitness(f64);

impl Fitness {
    pub fn from_mse(mse: f64) -> Self {
        Fitness(1.0 / mse.max(MSE_FLOOR))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// What the GA minimizes.
pub trait Objective: Sync {
    fn gene_layout(&self) -> &Arc<GeneLayout>;

    /// Deterministic cost of a repaired chromosome.
    fn mse(&self, chromosome: &Chromosome) -> Result<f64>;
}

/// Mean-square label distortion of the decoded constellation over a frozen
/// sample bank.
#[derive(Debug, Clone)]
pub struct ConstellationObjective {
    gene_layout: Arc<GeneLayout>,
    mapping: Mapping,
    model: ChannelModel,
    bank: SampleBank,
}

impl ConstellationObjective {
    pub fn new(
        mapping: Mapping,
        symmetry: SymmetryClass,
        model: ChannelModel,
        samples: u64,
        seed: u64,
    ) -> Result<Self> {
        let gene_layout = Arc::new(GeneLayout::new(mapping.layout().clone(), symmetry)?);
        let bank = SampleBank::new(mapping.layout().size(), samples, seed)?;
        Ok(ConstellationObjective {
            gene_layout,
            mapping,
            model,
            bank,
        })
    }

    pub fn decode(&self, chromosome: &Chromosome) -> Result<Constellation> {
        decode(chromosome, &self.mapping)
    }
}

impl Objective for ConstellationObjective {
    fn gene_layout(&self) -> &Arc<GeneLayout> {
        &self.gene_layout
    }

    fn mse(&self, chromosome: &Chromosome) -> Result<f64> {
        Ok(self
            .bank
            .evaluate(&self.decode(chromosome)?, &self.model)?
            .mse)
    }
}

pub fn evaluate_fitness(chromosome: &Chromosome, objective: &dyn Objective) -> Result<Fitness> {
    Ok(Fitness::from_mse(objective.mse(chromosome)?))
}

/// Draw `k` distinct members uniformly and return the index of the fittest;
/// ties go to the lower index.
pub fn tournament_select<R: Rng + ?Sized>(
    scores: &[Fitness],
    k: usize,
    rng: &mut R,
) -> Result<usize> {
    if k == 0 || k > scores.len() {
        return Err(Error::Tournament {
            k,
            population: scores.len(),
        });
    }
    let mut best = usize::MAX;
    for i in sample(rng, scores.len(), k) {
        if best == usize::MAX || scores[i] > scores[best] || (scores[i] == scores[best] && i < best)
        {
            best = i;
        }
    }
    Ok(best)
}

/// Swap the gene span `[i, j)` between two parents, without repair.
pub fn crossover_at(
    a: &Chromosome,
    b: &Chromosome,
    i: usize,
    j: usize,
) -> Result<(Chromosome, Chromosome)> {
    if a.len() != b.len() || a.gene_layout() != b.gene_layout() {
        return Err(Error::LengthMismatch(format!(
            "crossover of {} and {} genes",
            a.len(),
            b.len()
        )));
    }
    let (i, j) = (i.min(j), i.max(j).min(a.len()));
    let mut ga = a.genes().to_vec();
    let mut gb = b.genes().to_vec();
    ga[i..j].swap_with_slice(&mut gb[i..j]);
    Ok((a.with_genes(ga)?, b.with_genes(gb)?))
}

/// Two-point crossover with cut points drawn uniformly from `0..=len`;
/// both children are repaired.
pub fn two_point_crossover<R: Rng + ?Sized>(
    a: &Chromosome,
    b: &Chromosome,
    rng: &mut R,
) -> Result<(Chromosome, Chromosome)> {
    let len = a.len();
    let (x, y) = (rng.random_range(0..=len), rng.random_range(0..=len));
    let (c1, c2) = crossover_at(a, b, x.min(y), x.max(y))?;
    Ok((repair(&c1), repair(&c2)))
}

/// With probability `p_mut`, [`perturb`] and repair; otherwise a copy.
pub fn mutate<R: Rng + ?Sized>(c: &Chromosome, rng: &mut R, config: &GaConfig) -> Chromosome {
    if c.is_empty() || rng.random::<f64>() >= config.p_mut {
        return c.clone();
    }
    repair(&perturb(c, rng, config))
}

/// Add Gaussian noise to [`GaConfig::mutated_genes`] distinct positions,
/// without repair.
pub fn perturb<R: Rng + ?Sized>(c: &Chromosome, rng: &mut R, config: &GaConfig) -> Chromosome {
    let layout = c.gene_layout();
    let radius = Normal::new(0.0, config.radius_sigma).expect("validated sigma");
    let angle = Normal::new(0.0, config.angle_sigma).expect("validated sigma");
    let mut genes = c.genes().to_vec();
    for pos in sample(rng, genes.len(), config.mutated_genes(genes.len())) {
        genes[pos] += match layout.kind(pos) {
            GeneKind::Radius(_) => radius.sample(rng),
            GeneKind::Angle { .. } => angle.sample(rng),
        };
    }
    c.with_genes(genes).expect("same length")
}

/// Radii uniform in `(0, 1)` then sorted, angles uniform in the symmetry
/// sector, then repaired.
pub fn random_chromosome<R: Rng + ?Sized>(layout: &Arc<GeneLayout>, rng: &mut R) -> Chromosome {
    let mut genes: Vec<f64> = (0..layout.len())
        .map(|g| {
            let (lo, hi) = layout.gene_range(layout.kind(g));
            lo + (hi - lo) * rng.random::<f64>()
        })
        .collect();
    genes[..layout.radius_genes()].sort_by(f64::total_cmp);
    repair(&Chromosome::new(genes, Arc::clone(layout)).expect("length from layout"))
}

/// `size` chromosomes around `center`: the first is `center` itself, the
/// rest add independent `N(0, jitter²)` noise to every gene before repair.
pub fn jittered_population(
    center: &Chromosome,
    size: usize,
    jitter: f64,
    seed: u64,
) -> Result<Vec<Chromosome>> {
    if !(jitter.is_finite() && jitter >= 0.0) {
        return Err(Error::GaConfig(format!(
            "init jitter must be finite and non-negative, got {jitter}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, jitter).expect("checked jitter");
    Ok((0..size)
        .map(|k| {
            if k == 0 {
                return repair(center);
            }
            let genes = center
                .genes()
                .iter()
                .map(|g| g + noise.sample(&mut rng))
                .collect();
            repair(&center.with_genes(genes).expect("same length"))
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub chromosome: Chromosome,
    pub mse: f64,
    pub fitness: Fitness,
}

/// Population between generations.
#[derive(Debug, Clone)]
pub struct GaState {
    generation: usize,
    members: Vec<Individual>,
    elites: usize,
    rng: ChaCha8Rng,
}

impl GaState {
    /// Random initial population, evaluated.
    pub fn initial(objective: &dyn Objective, config: &GaConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, SELECTION_STREAM));
        let chromosomes: Vec<Chromosome> = (0..config.population)
            .map(|_| random_chromosome(objective.gene_layout(), &mut rng))
            .collect();
        Self::evaluated(chromosomes, objective, rng)
    }

    /// Caller-supplied initial population, repaired and evaluated.
    pub fn seeded(
        chromosomes: Vec<Chromosome>,
        objective: &dyn Objective,
        config: &GaConfig,
    ) -> Result<Self> {
        config.validate()?;
        if chromosomes.len() != config.population {
            return Err(Error::GaConfig(format!(
                "{} initial chromosomes for a population of {}",
                chromosomes.len(),
                config.population
            )));
        }
        if let Some(c) = chromosomes
            .iter()
            .find(|c| c.gene_layout() != objective.gene_layout())
        {
            return Err(Error::Chromosome(format!(
                "initial chromosome with {} genes does not match the objective's layout",
                c.len()
            )));
        }
        let rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, SELECTION_STREAM));
        Self::evaluated(chromosomes.iter().map(repair).collect(), objective, rng)
    }

    fn evaluated(
        chromosomes: Vec<Chromosome>,
        objective: &dyn Objective,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        Ok(GaState {
            generation: 0,
            members: evaluate_all(chromosomes, objective)?,
            elites: 0,
            rng,
        })
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn members(&self) -> &[Individual] {
        &self.members
    }

    /// Members copied unchanged into this generation.
    pub fn elites(&self) -> usize {
        self.elites
    }

    /// Fittest member; ties go to the lower index.
    pub fn best(&self) -> &Individual {
        let mut best = &self.members[0];
        for m in &self.members[1..] {
            if m.fitness > best.fitness {
                best = m;
            }
        }
        best
    }

    fn record(&self) -> GenerationRecord {
        let best = self.best();
        let n = self.members.len() as f64;
        GenerationRecord {
            generation: self.generation,
            best_fitness: best.fitness.value(),
            mean_fitness: self.members.iter().map(|m| m.fitness.value()).sum::<f64>() / n,
            best_mse: best.mse,
            mean_mse: self.members.iter().map(|m| m.mse).sum::<f64>() / n,
            best_chromosome: best.chromosome.clone(),
            population: self.members.len(),
            elites: self.elites,
        }
    }

    fn relative_spread(&self) -> f64 {
        let (lo, hi) = self
            .members
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), m| {
                (lo.min(m.fitness.value()), hi.max(m.fitness.value()))
            });
        (hi - lo) / hi
    }
}

fn evaluate_all(
    chromosomes: Vec<Chromosome>,
    objective: &dyn Objective,
) -> Result<Vec<Individual>> {
    chromosomes
        .into_par_iter()
        .map(|chromosome| {
            let mse = objective.mse(&chromosome)?;
            Ok(Individual {
                chromosome,
                mse,
                fitness: Fitness::from_mse(mse),
            })
        })
        .collect()
}

/// Rank, keep the elites, breed the remainder, evaluate the offspring.
pub fn step_generation(
    state: GaState,
    config: &GaConfig,
    objective: &dyn Objective,
) -> Result<GaState> {
    let GaState {
        generation,
        members,
        mut rng,
        ..
    } = state;
    let mut order: Vec<usize> = (0..members.len()).collect();
    // stable: equal fitness keeps population order
    order.sort_by(|&a, &b| {
        members[b]
            .fitness
            .value()
            .total_cmp(&members[a].fitness.value())
    });
    let elites = config.elite_count();
    let scores: Vec<Fitness> = members.iter().map(|m| m.fitness).collect();
    let mut offspring = Vec::with_capacity(config.population - elites);
    while offspring.len() < config.population - elites {
        let a = &members[tournament_select(&scores, config.tournament_size, &mut rng)?].chromosome;
        let b = &members[tournament_select(&scores, config.tournament_size, &mut rng)?].chromosome;
        let (c1, c2) = if rng.random::<f64>() < config.p_cross {
            two_point_crossover(a, b, &mut rng)?
        } else {
            (a.clone(), b.clone())
        };
        offspring.push(mutate(&c1, &mut rng, config));
        offspring.push(mutate(&c2, &mut rng, config));
    }
    offspring.truncate(config.population - elites);
    let mut next: Vec<Individual> = order[..elites]
        .iter()
        .map(|&i| members[i].clone())
        .collect();
    next.extend(evaluate_all(offspring, objective)?);
    Ok(GaState {
        generation: generation + 1,
        members: next,
        elites,
        rng,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_mse: f64,
    pub mean_mse: f64,
    pub best_chromosome: Chromosome,
    pub population: usize,
    pub elites: usize,
}

/// Per-generation history, starting with the initial population.
#[derive(Debug, Clone, PartialEq)]
pub struct GaTrace {
    pub records: Vec<GenerationRecord>,
    pub converged: bool,
}

impl GaTrace {
    pub fn best(&self) -> &GenerationRecord {
        self.records
            .last()
            .expect("trace holds the initial generation")
    }

    /// Comma-separated `generation,best_mse,mean_mse,best_fitness` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("generation,best_mse,mean_mse,best_fitness\n");
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{}",
                r.generation, r.best_mse, r.mean_mse, r.best_fitness
            )
            .unwrap();
        }
        out
    }
}

/// Run until the population fitness spread stays below
/// `convergence_epsilon` for `convergence_patience` generations, or
/// `max_generations` steps.
pub fn optimize(objective: &dyn Objective, config: &GaConfig) -> Result<GaTrace> {
    in_pool(config, || {
        run(GaState::initial(objective, config)?, objective, config)
    })
}

/// [`optimize`] starting from the given population instead of a random one.
pub fn optimize_from(
    initial: Vec<Chromosome>,
    objective: &dyn Objective,
    config: &GaConfig,
) -> Result<GaTrace> {
    in_pool(config, || {
        run(
            GaState::seeded(initial, objective, config)?,
            objective,
            config,
        )
    })
}

fn in_pool<T: Send>(config: &GaConfig, job: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    config.validate()?;
    if config.workers == 0 {
        return job();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::GaConfig(format!("cannot start {} workers: {e}", config.workers)))?
        .install(job)
}

fn run(mut state: GaState, objective: &dyn Objective, config: &GaConfig) -> Result<GaTrace> {
    let mut records = vec![state.record()];
    let mut calm = 0;
    let mut converged = false;
    while state.generation() < config.max_generations {
        state = step_generation(state, config, objective)?;
        records.push(state.record());
        calm = if state.relative_spread() < config.convergence_epsilon {
            calm + 1
        } else {
            0
        };
        if calm >= config.convergence_patience {
            converged = true;
            break;
        }
    }
    Ok(GaTrace { records, converged })
}
