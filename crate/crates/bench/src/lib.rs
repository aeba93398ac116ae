//! Shared setup for the benchmarks: the persons stage of the shipped MSOA
//! fixture.

use std::path::PathBuf;

use popsynth_core::nsga2::EntityProblem;
use popsynth_core::pipeline::RunConfig;
use popsynth_core::{EvolutionConfig, Result, RuleSet};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/msoa")
}

pub fn fixture_config() -> Result<RunConfig> {
    RunConfig::load(fixture_dir().join("config.toml"))
}

/// The fixture's persons problem and its evolution settings.
pub fn persons_problem() -> Result<(EntityProblem, EvolutionConfig)> {
    let config = fixture_config()?;
    let dataset = config.load_dataset()?;
    let stage = &config.persons;
    let rules = match &stage.rules {
        Some(path) => RuleSet::load(config.resolve(path), &dataset.persons.schema)?,
        None => RuleSet::empty(),
    };
    let problem = EntityProblem::new(
        &dataset.persons,
        &stage.objectives,
        rules,
        stage.sampling,
        &stage.weight_sources,
    )?;
    let evolution = EvolutionConfig {
        seed: config.seed,
        ..stage.evolution.clone()
    };
    Ok((problem, evolution))
}
