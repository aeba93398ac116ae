//! The run configuration and the two-stage batch driver.
//!
//! A run reads one TOML file. Relative paths in it resolve against the
//! file's directory:
//!
//! ```toml
//! region = "E02000001"
//! seed = 42
//! output_dir = "out"
//!
//! [persons]
//! schema = "person_schema.toml"
//! rules = "person_rules.toml"
//! target_count = 7000
//! tables = [{ name = "sex_age", path = "tables/sex_age.csv" }]
//! objectives = [{ name = "sex", table = "sex_age", attribute = "sex" }]
//!
//! [persons.evolution]
//! population_size = 100
//! generations = 100
//! ```
//!
//! An optional `[households]` section has the same shape, and
//! `[allocation]` names the age and composition attributes.
//!
//! Each stage seeds its evolution from the master `seed` and the stage tag,
//! so `generate-households` on its own reproduces the household stage of a
//! full `run`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::census_data::{
    load_named_table, validate_dataset, AttributeSchema, Entity, EntityDataset, RegionDataset, ValidationReport,
};
use crate::error::{Error, Result};
use crate::fitness::ObjectiveSpec;
use crate::household_synthesis::{allocate, classify_roster, household_slots, AllocationOrder, AllocationResult};
use crate::nsga2::{
    evolve_with, EntityProblem, EvolutionConfig, EvolutionOutcome, GenerationHistory, GenerationRecord, ParetoArchive,
};
use crate::population_model::{CandidatePopulation, RuleSet, SamplingMode};
use crate::reporting::{
    export_convergence, export_households, export_pareto_pairs, export_persons, export_rmse, export_roster,
    load_archive, load_persons, rmse_summary, save_archive, select_best, sha256_file, write_json, AllocationSummary,
    FileChecksum, RunManifest, StageSummary,
};
use crate::rng::{tag, StreamSeed};

pub const PERSONS_CSV: &str = "persons.csv";
pub const HOUSEHOLDS_CSV: &str = "households.csv";
pub const HOUSEHOLD_ATTRIBUTES_CSV: &str = "household_attributes.csv";
pub const VALIDATION_REPORT: &str = "validation_report.json";
pub const MANIFEST: &str = "manifest.json";
pub const TIMINGS_CSV: &str = "timings.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableRef {
    pub name: String,
    pub path: PathBuf,
}

/// Inputs and search settings for one entity kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    pub schema: PathBuf,
    #[serde(default)]
    pub rules: Option<PathBuf>,
    pub target_count: usize,
    #[serde(default)]
    pub sampling: SamplingMode,
    /// Attribute name to the table its sampling weights come from.
    #[serde(default)]
    pub weight_sources: BTreeMap<String, String>,
    pub tables: Vec<TableRef>,
    pub objectives: Vec<ObjectiveSpec>,
    #[serde(default)]
    pub evolution: EvolutionConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AllocationConfig {
    /// Person attribute whose grouping carries the ch/ad/el classes.
    pub age_attribute: String,
    /// Household attribute holding composition codes such as `2A 1C`.
    pub composition_attribute: String,
    pub order: AllocationOrder,
}

impl Default for AllocationConfig {
    fn default() -> Self {
        AllocationConfig {
            age_attribute: "age".into(),
            composition_attribute: "composition".into(),
            order: AllocationOrder::default(),
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_tolerance() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub region: String,
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads; the rayon default when unset.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub strict_validation: bool,
    #[serde(default = "default_tolerance")]
    pub validation_tolerance: f64,
    pub persons: StageConfig,
    #[serde(default)]
    pub households: Option<StageConfig>,
    #[serde(default)]
    pub allocation: AllocationConfig,
    #[serde(skip)]
    base_dir: PathBuf,
}

/// Command-line values that replace their config counterparts.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub generations: Option<usize>,
    pub population_size: Option<usize>,
    pub workers: Option<usize>,
    /// Taken relative to the current directory, not the config file.
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    /// Parses and validates a config whose relative paths resolve against
    /// `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.base_dir = base_dir.into();
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::input(path, e))?;
        let mut config: RunConfig = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_owned(),
            message: e.to_string(),
        })?;
        config.base_dir = path.parent().map(Path::to_owned).unwrap_or_default();
        config.validate()?;
        Ok(config)
    }

    /// Rebuilds the config recorded in a run manifest, resolving inputs
    /// against `data_dir` and checking them against the recorded checksums.
    pub fn from_manifest(path: impl AsRef<Path>, data_dir: impl Into<PathBuf>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::input(path, e))?;
        let parse = |message: String| Error::Parse {
            path: path.to_owned(),
            message,
        };
        let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| parse(e.to_string()))?;
        let mut config: RunConfig = serde_json::from_value(manifest.config).map_err(|e| parse(e.to_string()))?;
        config.base_dir = data_dir.into();
        config.validate()?;
        let recorded = manifest.inputs;
        let current = config.input_checksums()?;
        if recorded != current {
            let changed: Vec<&str> = current
                .iter()
                .filter(|c| !recorded.contains(c))
                .map(|c| c.path.as_str())
                .collect();
            return Err(Error::Config(format!(
                "inputs differ from the manifest: {}",
                if changed.is_empty() {
                    "file list changed".to_owned()
                } else {
                    changed.join(", ")
                }
            )));
        }
        Ok(config)
    }

    pub fn apply(&mut self, overrides: &Overrides) -> Result<()> {
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        let stages = std::iter::once(&mut self.persons).chain(self.households.as_mut());
        for stage in stages {
            if let Some(g) = overrides.generations {
                stage.evolution.generations = g;
            }
            if let Some(n) = overrides.population_size {
                stage.evolution.population_size = n;
            }
        }
        if let Some(w) = overrides.workers {
            self.workers = Some(w);
        }
        if let Some(dir) = &overrides.out_dir {
            self.output_dir = if dir.is_absolute() {
                dir.clone()
            } else {
                std::env::current_dir().map_err(|e| Error::input(".", e))?.join(dir)
            };
        }
        self.validate()
    }

    fn validate(&self) -> Result<()> {
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.validation_tolerance.is_nan() || self.validation_tolerance < 0.0 {
            return Err(Error::Config("validation_tolerance must be non-negative".into()));
        }
        for stage in self.stages() {
            stage.evolution.validate()?;
        }
        for path in self.input_paths() {
            let resolved = self.resolve(path);
            if !resolved.is_file() {
                return Err(Error::input(
                    resolved,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
                ));
            }
        }
        Ok(())
    }

    fn stages(&self) -> impl Iterator<Item = &StageConfig> {
        std::iter::once(&self.persons).chain(self.households.as_ref())
    }

    fn input_paths(&self) -> Vec<&Path> {
        let mut paths = Vec::new();
        for stage in self.stages() {
            paths.push(stage.schema.as_path());
            paths.extend(stage.rules.as_deref());
            paths.extend(stage.tables.iter().map(|t| t.path.as_path()));
        }
        paths
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        self.base_dir.join(path)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    /// Checksums of every input file, keyed by the path as written in the
    /// config.
    pub fn input_checksums(&self) -> Result<Vec<FileChecksum>> {
        self.input_paths()
            .into_iter()
            .map(|p| {
                Ok(FileChecksum {
                    path: p.to_string_lossy().into_owned(),
                    sha256: sha256_file(self.resolve(p))?,
                })
            })
            .collect()
    }

    /// The config as recorded in the manifest: everything that affects the
    /// results, and nothing that doesn't (worker count, output location).
    pub fn snapshot(&self) -> Result<serde_json::Value> {
        let mut value = serde_json::to_value(self).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(map) = value.as_object_mut() {
            map.remove("workers");
            map.remove("output_dir");
        }
        Ok(value)
    }

    pub fn stage_seed(&self, entity: Entity) -> u64 {
        let t = match entity {
            Entity::Persons => tag::PERSONS,
            Entity::Households => tag::HOUSEHOLDS,
        };
        StreamSeed::new(self.seed).child(t).value()
    }

    fn stage(&self, entity: Entity) -> Result<&StageConfig> {
        match entity {
            Entity::Persons => Ok(&self.persons),
            Entity::Households => self
                .households
                .as_ref()
                .ok_or_else(|| Error::Config("config has no [households] section".into())),
        }
    }

    pub fn load_dataset(&self) -> Result<RegionDataset> {
        let households = match &self.households {
            Some(stage) => Some(self.load_stage(stage)?),
            None => None,
        };
        Ok(RegionDataset {
            region_id: self.region.clone(),
            persons: self.load_stage(&self.persons)?,
            households,
        })
    }

    fn load_stage(&self, stage: &StageConfig) -> Result<EntityDataset> {
        let schema = AttributeSchema::load(self.resolve(&stage.schema))?;
        let tables = stage
            .tables
            .iter()
            .map(|t| load_named_table(&t.name, self.resolve(&t.path), &schema))
            .collect::<Result<Vec<_>>>()?;
        EntityDataset::new(schema, tables, stage.target_count)
    }

    fn load_rules(&self, stage: &StageConfig, schema: &AttributeSchema) -> Result<RuleSet> {
        match &stage.rules {
            Some(path) => RuleSet::load(self.resolve(path), schema),
            None => Ok(RuleSet::empty()),
        }
    }
}

/// Runs `f` on a rayon pool of `workers` threads, or on the global pool.
pub fn with_workers<T, F>(workers: Option<usize>, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Called after every generation with the stage, its record and the
/// generation's wall-clock seconds.
pub type Progress<'a> = dyn FnMut(Entity, &GenerationRecord, f64) + 'a;

fn create_output_dir(config: &RunConfig) -> Result<PathBuf> {
    let dir = config.output_dir();
    std::fs::create_dir_all(&dir).map_err(|e| Error::output(&dir, e))?;
    Ok(dir)
}

/// Checks the dataset and writes the report into the output directory.
/// In strict mode any flagged discrepancy is an error, after the report is
/// written.
pub fn validate_data(config: &RunConfig) -> Result<ValidationReport> {
    let dataset = config.load_dataset()?;
    let report = validate_dataset(&dataset, config.validation_tolerance);
    let dir = create_output_dir(config)?;
    write_json(&report, dir.join(VALIDATION_REPORT))?;
    if config.strict_validation && report.has_flags() {
        return Err(Error::StrictValidation(report.flag_summary().join("; ")));
    }
    Ok(report)
}

/// One finished evolutionary stage.
#[derive(Debug, Clone)]
pub struct StageRun {
    pub entity: Entity,
    pub outcome: EvolutionOutcome,
    pub selected: usize,
    pub summary: StageSummary,
}

impl StageRun {
    pub fn selected_candidate(&self) -> &CandidatePopulation {
        &self.outcome.archive.members()[self.selected].candidate
    }
}

fn file_stem(entity: Entity, what: &str) -> String {
    format!("{entity}_{what}")
}

/// Writes the per-stage files shared by `run`, the stage commands and
/// `report`, and returns the stage summary.
fn export_stage(
    dir: &Path,
    entity: Entity,
    data: &EntityDataset,
    weights: &[f64],
    archive: &ParetoArchive,
    history: &GenerationHistory,
) -> Result<(usize, StageSummary)> {
    let selected = select_best(archive, weights)?;
    let candidate = &archive.members()[selected].candidate;
    let rmse = rmse_summary(candidate, data)?;
    export_convergence(history, dir.join(file_stem(entity, "convergence.csv")))?;
    export_pareto_pairs(
        archive,
        selected,
        &history.objective_names,
        dir.join(file_stem(entity, "pareto.csv")),
    )?;
    export_rmse(&rmse, dir.join(file_stem(entity, "rmse.csv")))?;
    match entity {
        Entity::Persons => export_persons(candidate, &data.schema, dir.join(PERSONS_CSV))?,
        Entity::Households => export_roster(
            candidate,
            &data.schema,
            "household_id",
            dir.join(HOUSEHOLD_ATTRIBUTES_CSV),
        )?,
    }
    let summary = StageSummary::new(&entity.to_string(), archive, history, selected, weights, rmse);
    Ok((selected, summary))
}

fn run_stage(
    config: &RunConfig,
    dataset: &RegionDataset,
    entity: Entity,
    progress: &mut Progress<'_>,
) -> Result<StageRun> {
    let stage = config.stage(entity)?;
    let data = match entity {
        Entity::Persons => &dataset.persons,
        Entity::Households => dataset
            .households
            .as_ref()
            .ok_or_else(|| Error::Config("dataset has no household tables".into()))?,
    };
    let rules = config.load_rules(stage, &data.schema)?;
    let problem = EntityProblem::new(data, &stage.objectives, rules, stage.sampling, &stage.weight_sources)?;
    let evolution = EvolutionConfig {
        seed: config.stage_seed(entity),
        ..stage.evolution.clone()
    };
    let outcome = evolve_with(&problem, &evolution, |record, seconds| {
        progress(entity, record, seconds)
    })?;

    let dir = create_output_dir(config)?;
    save_archive(
        &outcome.archive,
        &outcome.history,
        dir.join(file_stem(entity, "archive.json")),
    )?;
    let (selected, summary) = export_stage(
        &dir,
        entity,
        data,
        &problem.objectives.weights(),
        &outcome.archive,
        &outcome.history,
    )?;
    Ok(StageRun {
        entity,
        outcome,
        selected,
        summary,
    })
}

/// Evolves the person roster and writes its files.
pub fn generate_persons(config: &RunConfig, progress: &mut Progress<'_>) -> Result<StageRun> {
    let dataset = config.load_dataset()?;
    run_stage(config, &dataset, Entity::Persons, progress)
}

fn allocate_persons(
    config: &RunConfig,
    dataset: &RegionDataset,
    persons: &CandidatePopulation,
    households: &CandidatePopulation,
) -> Result<AllocationResult> {
    let household_schema = &dataset
        .households
        .as_ref()
        .ok_or_else(|| Error::Config("dataset has no household tables".into()))?
        .schema;
    let classes = classify_roster(persons, &dataset.persons.schema, &config.allocation.age_attribute)?;
    let slots = household_slots(households, household_schema, &config.allocation.composition_attribute)?;
    let result = allocate(&classes, &slots, config.allocation.order);
    export_households(&result, config.output_dir().join(HOUSEHOLDS_CSV))?;
    Ok(result)
}

/// Evolves the household roster and fills it from the persons CSV already
/// in the output directory.
pub fn generate_households(config: &RunConfig, progress: &mut Progress<'_>) -> Result<(StageRun, AllocationResult)> {
    let dataset = config.load_dataset()?;
    let persons = load_persons(config.output_dir().join(PERSONS_CSV), &dataset.persons.schema)?;
    let stage = run_stage(config, &dataset, Entity::Households, progress)?;
    let result = allocate_persons(config, &dataset, &persons, stage.selected_candidate())?;
    Ok((stage, result))
}

fn write_timings(path: &Path, stages: &[&StageRun]) -> Result<()> {
    let mut out = String::from("stage,generation,seconds\n");
    for stage in stages {
        for (g, s) in stage.outcome.generation_seconds.iter().enumerate() {
            out.push_str(&format!("{},{g},{s}\n", stage.entity));
        }
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| Error::output(path, e))
}

fn output_checksums(dir: &Path, names: &[String]) -> Result<Vec<FileChecksum>> {
    names
        .iter()
        .map(|name| {
            Ok(FileChecksum {
                path: name.clone(),
                sha256: sha256_file(dir.join(name))?,
            })
        })
        .collect()
}

fn stage_outputs(entity: Entity) -> Vec<String> {
    ["archive.json", "convergence.csv", "pareto.csv", "rmse.csv"]
        .iter()
        .map(|w| file_stem(entity, w))
        .collect()
}

/// The full pipeline: validation, persons, households, allocation, and the
/// manifest.
pub fn run(config: &RunConfig, progress: &mut Progress<'_>) -> Result<RunManifest> {
    validate_data(config)?;
    let dataset = config.load_dataset()?;
    let dir = config.output_dir();

    let persons = run_stage(config, &dataset, Entity::Persons, progress)?;
    let mut outputs = vec![VALIDATION_REPORT.to_owned(), PERSONS_CSV.to_owned()];
    outputs.extend(stage_outputs(Entity::Persons));
    let mut stages = vec![persons.summary.clone()];
    let mut timed = vec![&persons];

    let households = match config.households {
        Some(_) => {
            let stage = run_stage(config, &dataset, Entity::Households, progress)?;
            let result = allocate_persons(
                config,
                &dataset,
                persons.selected_candidate(),
                stage.selected_candidate(),
            )?;
            Some((stage, result))
        }
        None => None,
    };
    let mut allocation = None;
    if let Some((stage, result)) = &households {
        outputs.extend([HOUSEHOLDS_CSV.to_owned(), HOUSEHOLD_ATTRIBUTES_CSV.to_owned()]);
        outputs.extend(stage_outputs(Entity::Households));
        stages.push(stage.summary.clone());
        timed.push(stage);
        allocation = Some(AllocationSummary::from(result));
    }
    write_timings(&dir.join(TIMINGS_CSV), &timed)?;

    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        region: config.region.clone(),
        seed: config.seed,
        config: config.snapshot()?,
        inputs: config.input_checksums()?,
        stages,
        allocation,
        outputs: output_checksums(&dir, &outputs)?,
        timings_file: TIMINGS_CSV.to_owned(),
    };
    write_json(&manifest, dir.join(MANIFEST))?;
    Ok(manifest)
}

/// Re-exports selection, rosters, convergence, Pareto and RMSE files from
/// the archives saved in the output directory. Returns the stage summaries.
pub fn report(config: &RunConfig) -> Result<Vec<StageSummary>> {
    let dataset = config.load_dataset()?;
    let dir = create_output_dir(config)?;
    let mut summaries = Vec::new();
    let mut selected_rosters = Vec::new();
    for entity in [Entity::Persons, Entity::Households] {
        let Ok(stage) = config.stage(entity) else {
            continue;
        };
        let data = match entity {
            Entity::Persons => &dataset.persons,
            Entity::Households => dataset.households.as_ref().expect("stage implies dataset"),
        };
        let (archive, history) = load_archive(dir.join(file_stem(entity, "archive.json")))?;
        let weights: Vec<f64> = stage.objectives.iter().map(|o| o.weight).collect();
        let (selected, summary) = export_stage(&dir, entity, data, &weights, &archive, &history)?;
        selected_rosters.push(archive.members()[selected].candidate.clone());
        summaries.push(summary);
    }
    if let [persons, households] = selected_rosters.as_slice() {
        allocate_persons(config, &dataset, persons, households)?;
    }
    Ok(summaries)
}
