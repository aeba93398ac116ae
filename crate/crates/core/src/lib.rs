//! Multi-objective evolutionary synthesis of hierarchical populations.
//!
//! Persons are sampled from census contingency tables, evolved with an
//! NSGA-II loop against per-attribute reconstruction error, and then nested
//! into households that are synthesised the same way and filled by
//! composition code.
//!
//! The modules follow the pipeline order:
//!
//! * [`census_data`]: schemas, contingency tables, marginals, dataset checks.
//! * [`population_model`]: candidate rosters, weighted sampling, rule validation.
//! * [`fitness`]: L1 / trapezoid-area objectives, RMSE, normalisation.
//! * [`nsga2`]: dominance, sorting, crowding, operators, archive, generation loop.
//! * [`household_synthesis`]: composition codes and person-to-household allocation.
//! * [`reporting`]: weighted-sum selection, CSV exports, run manifest.
//! * [`pipeline`]: the run configuration and the two-stage batch driver.

pub mod census_data;
pub mod error;
pub mod fitness;
pub mod household_synthesis;
pub mod nsga2;
pub mod pipeline;
pub mod population_model;
pub mod reporting;
pub mod rng;

pub use census_data::{AttributeSchema, CategoryId, ContingencyTable, EntityDataset, FrequencyVector, RegionDataset};
pub use error::{Error, ErrorKind, Result};
pub use fitness::{Metric, ObjectiveSpec, ObjectiveVector};
pub use nsga2::{EvolutionConfig, GenerationHistory, ParetoArchive};
pub use population_model::{CandidatePopulation, RuleSet, SamplingMode, SyntheticPerson};
