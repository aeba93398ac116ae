//! The NSGA-II evolutionary core.

mod archive;
mod crowding;
mod dominance;
mod evolve;
mod operators;
mod selection;
mod sort;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitness::ObjectiveVector;
use crate::population_model::CandidatePopulation;

pub use archive::{ArchiveMember, ParetoArchive};
pub use crowding::crowding_distance;
pub use dominance::{dominates, dominates_unchecked};
pub use evolve::{evolve, evolve_with, EntityProblem, EvolutionOutcome, GenerationHistory, GenerationRecord};
pub use operators::{crossover_at, resample_mutation, swap_at, swap_mutation, two_point_crossover, MutationOutcome};
pub use selection::{binary_tournament, environmental_selection, rank_population};
pub use sort::fast_nondominated_sort;

/// A population member with its NSGA-II rank (1 = first front) and
/// crowding distance.
#[derive(Debug, Clone)]
pub struct RankedCandidate {
    pub candidate: Arc<CandidatePopulation>,
    pub objectives: ObjectiveVector,
    pub rank: usize,
    pub crowding: f64,
}

/// Missing fields take their defaults when read from a config file. The
/// seed is never read from a file; the pipeline derives it from the run's
/// master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_probability: f64,
    /// Chance that an offspring receives one swap event.
    pub mutation_probability: f64,
    #[serde(skip)]
    pub seed: u64,
    pub max_retries: usize,
    /// Defaults to ten times the population size.
    pub archive_capacity: Option<usize>,
    /// Adds a marginal-changing mutation that redraws one attribute of one
    /// entity from its sampling weights.
    pub resample_mutation: bool,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            population_size: 100,
            generations: 500,
            crossover_probability: 0.9,
            mutation_probability: 0.2,
            seed: 0,
            max_retries: 100,
            archive_capacity: None,
            resample_mutation: false,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 || !self.population_size.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "population size must be even and at least 2, got {}",
                self.population_size
            )));
        }
        for (name, p) in [
            ("crossover probability", self.crossover_probability),
            ("mutation probability", self.mutation_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if self.max_retries == 0 {
            return Err(Error::Config("max_retries must be at least 1".into()));
        }
        if self.archive_capacity == Some(0) {
            return Err(Error::Config("archive capacity must be positive".into()));
        }
        Ok(())
    }

    pub fn archive_capacity(&self) -> usize {
        self.archive_capacity.unwrap_or(10 * self.population_size)
    }
}
