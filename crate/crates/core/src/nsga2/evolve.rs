use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::archive::ParetoArchive;
use super::operators::{resample_mutation, swap_mutation, two_point_crossover};
use super::selection::{binary_tournament, environmental_selection, rank_population};
use super::{EvolutionConfig, RankedCandidate};
use crate::census_data::EntityDataset;
use crate::error::Result;
use crate::fitness::{ObjectiveSet, ObjectiveSpec, ObjectiveVector};
use crate::population_model::{generate_candidate, CandidatePopulation, EntitySampler, RuleSet, SamplingMode};
use crate::rng::{tag, StreamSeed};

/// Everything the generation loop needs to know about one kind of entity.
#[derive(Debug, Clone)]
pub struct EntityProblem {
    pub sampler: EntitySampler,
    pub objectives: ObjectiveSet,
    pub rules: RuleSet,
    pub roster_len: usize,
}

impl EntityProblem {
    pub fn new(
        data: &EntityDataset,
        specs: &[ObjectiveSpec],
        rules: RuleSet,
        sampling: SamplingMode,
        weight_sources: &BTreeMap<String, String>,
    ) -> Result<Self> {
        Ok(EntityProblem {
            sampler: EntitySampler::new(data, sampling, weight_sources)?,
            objectives: ObjectiveSet::new(data, specs)?,
            rules,
            roster_len: data.target_count,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    /// Archive minimum of each objective.
    pub best: Vec<f64>,
    /// Population mean of each objective.
    pub mean: Vec<f64>,
    pub best_normalized: Vec<f64>,
    pub mean_normalized: Vec<f64>,
}

/// Per-generation convergence log.
///
/// Normalised values are raw values divided by the largest value of the
/// same objective in the initial population, so 0 is a perfect fit and the
/// worst initial candidate sits at 1. The scale is fixed for the whole run,
/// which keeps generations comparable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationHistory {
    pub objective_names: Vec<String>,
    pub reference: Vec<f64>,
    pub records: Vec<GenerationRecord>,
}

impl GenerationHistory {
    fn new(objective_names: Vec<String>, initial: &[RankedCandidate]) -> Self {
        let reference = (0..objective_names.len())
            .map(|i| {
                let max = initial.iter().map(|c| c.objectives[i]).fold(0.0, f64::max);
                if max > 0.0 {
                    max
                } else {
                    1.0
                }
            })
            .collect();
        GenerationHistory {
            objective_names,
            reference,
            records: Vec::new(),
        }
    }

    fn record(
        &mut self,
        generation: usize,
        archive: &ParetoArchive,
        population: &[RankedCandidate],
    ) -> &GenerationRecord {
        let k = self.reference.len();
        let best: Vec<f64> = (0..k).map(|i| archive.best(i).unwrap_or(f64::NAN)).collect();
        let mean: Vec<f64> = (0..k)
            .map(|i| population.iter().map(|c| c.objectives[i]).sum::<f64>() / population.len() as f64)
            .collect();
        let scale = |v: &[f64]| v.iter().zip(&self.reference).map(|(x, r)| x / r).collect();
        let record = GenerationRecord {
            generation,
            best_normalized: scale(&best),
            mean_normalized: scale(&mean),
            best,
            mean,
        };
        self.records.push(record);
        self.records.last().expect("just pushed")
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionOutcome {
    pub archive: ParetoArchive,
    pub history: GenerationHistory,
    pub population: Vec<RankedCandidate>,
    /// Wall-clock seconds per generation, generation 0 being initialisation.
    pub generation_seconds: Vec<f64>,
}

pub fn evolve(problem: &EntityProblem, config: &EvolutionConfig) -> Result<EvolutionOutcome> {
    evolve_with(problem, config, |_, _| {})
}

/// Runs the NSGA-II loop, calling `observer` after every generation with
/// the generation's record and its wall-clock seconds.
///
/// Streams: initial candidate `i` uses `seed/INIT/i`; mating pair `k` of
/// generation `g` uses `seed/MATE/g/k` for both tournaments, the crossover
/// and the mutation of its two offspring.
pub fn evolve_with<F>(problem: &EntityProblem, config: &EvolutionConfig, mut observer: F) -> Result<EvolutionOutcome>
where
    F: FnMut(&GenerationRecord, f64),
{
    config.validate()?;
    let root = StreamSeed::new(config.seed);
    let started = Instant::now();

    let initial = (0..config.population_size)
        .into_par_iter()
        .map(|i| {
            let seed = root.child(tag::INIT).child(i as u64);
            let candidate = generate_candidate(
                &problem.sampler,
                problem.roster_len,
                &problem.rules,
                seed,
                config.max_retries,
            )?;
            let objectives = problem.objectives.evaluate(&candidate)?;
            Ok((Arc::new(candidate), objectives))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut population = rank_population(initial);

    let mut archive = ParetoArchive::new(config.archive_capacity());
    update_archive(&mut archive, &population);
    let mut history = GenerationHistory::new(problem.objectives.names(), &population);
    let mut generation_seconds = Vec::with_capacity(config.generations + 1);
    let elapsed = started.elapsed().as_secs_f64();
    generation_seconds.push(elapsed);
    observer(history.record(0, &archive, &population), elapsed);

    for generation in 1..=config.generations {
        let started = Instant::now();
        let mate_seed = root.child(tag::MATE).child(generation as u64);
        let offspring = (0..config.population_size / 2)
            .into_par_iter()
            .map(|k| breed(problem, config, &population, mate_seed.child(k as u64)))
            .collect::<Result<Vec<_>>>()?;

        let mut combined: Vec<(Arc<CandidatePopulation>, ObjectiveVector)> =
            population.drain(..).map(|r| (r.candidate, r.objectives)).collect();
        combined.extend(offspring.into_iter().flatten());
        let ranked = rank_population(combined);
        let survivors = environmental_selection(&ranked, config.population_size);
        population = survivors.into_iter().map(|i| ranked[i].clone()).collect();

        update_archive(&mut archive, &population);
        let elapsed = started.elapsed().as_secs_f64();
        generation_seconds.push(elapsed);
        observer(history.record(generation, &archive, &population), elapsed);
    }

    Ok(EvolutionOutcome {
        archive,
        history,
        population,
        generation_seconds,
    })
}

type Offspring = [(Arc<CandidatePopulation>, ObjectiveVector); 2];

fn breed(
    problem: &EntityProblem,
    config: &EvolutionConfig,
    population: &[RankedCandidate],
    seed: StreamSeed,
) -> Result<Offspring> {
    let mut rng = seed.rng();
    let a = binary_tournament(population, &mut rng);
    let b = binary_tournament(population, &mut rng);
    let (p1, p2) = (&population[a].candidate, &population[b].candidate);
    let (mut c1, mut c2) = if rng.gen_bool(config.crossover_probability) {
        two_point_crossover(p1, p2, &mut rng)
    } else {
        (CandidatePopulation::clone(p1), CandidatePopulation::clone(p2))
    };
    for child in [&mut c1, &mut c2] {
        swap_mutation(child, config.mutation_probability, &mut rng, &problem.rules);
        if config.resample_mutation {
            resample_mutation(
                child,
                config.mutation_probability,
                problem.sampler.weights(),
                &mut rng,
                &problem.rules,
            );
        }
    }
    let o1 = problem.objectives.evaluate(&c1)?;
    let o2 = problem.objectives.evaluate(&c2)?;
    Ok([(Arc::new(c1), o1), (Arc::new(c2), o2)])
}

fn update_archive(archive: &mut ParetoArchive, population: &[RankedCandidate]) {
    for member in population.iter().filter(|m| m.rank == 1) {
        archive.insert(Arc::clone(&member.candidate), member.objectives.clone());
    }
}
