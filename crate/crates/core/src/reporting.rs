//! Final selection and everything written to disk at the end of a run.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::census_data::{marginalize, AttributeSchema, EntityDataset};
use crate::error::{Error, Result};
use crate::fitness::{normalize_objectives, rmse, ObjectiveVector};
use crate::household_synthesis::AllocationResult;
use crate::nsga2::{ArchiveMember, GenerationHistory, ParetoArchive};
use crate::population_model::CandidatePopulation;

/// Index of the archive member minimising the weighted sum of min-max
/// normalised objectives. Ties go to the earlier member.
pub fn select_best(archive: &ParetoArchive, weights: &[f64]) -> Result<usize> {
    if archive.is_empty() {
        return Err(Error::EmptyArchive);
    }
    let vectors = archive.objective_vectors();
    if weights.len() != vectors[0].len() {
        return Err(Error::LengthMismatch {
            left: weights.len(),
            right: vectors[0].len(),
        });
    }
    select_normalized(&normalize_objectives(&vectors), weights)
}

/// [`select_best`] over already-normalised rows.
pub fn select_normalized(rows: &[Vec<f64>], weights: &[f64]) -> Result<usize> {
    if rows.is_empty() {
        return Err(Error::EmptyArchive);
    }
    if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
        return Err(Error::Config(
            "selection weights must be finite and non-negative".into(),
        ));
    }
    if !weights.iter().any(|&w| w > 0.0) {
        return Err(Error::ZeroWeights);
    }
    let score = |row: &[f64]| row.iter().zip(weights).map(|(x, w)| x * w).sum::<f64>();
    let mut best = 0;
    let mut best_score = score(&rows[0]);
    for (i, row) in rows.iter().enumerate().skip(1) {
        let s = score(row);
        if s < best_score {
            best = i;
            best_score = s;
        }
    }
    Ok(best)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::output(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(create(path)?))
}

fn csv_out(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::output(path, io),
        other => Error::output(path, std::io::Error::other(format!("{other:?}"))),
    }
}

fn flush<W: Write>(mut w: csv::Writer<W>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::output(path, e))
}

/// Writes `person_id` followed by one column per schema attribute.
pub fn export_persons(candidate: &CandidatePopulation, schema: &AttributeSchema, path: impl AsRef<Path>) -> Result<()> {
    export_roster(candidate, schema, "person_id", path)
}

/// Writes an id column named `id_column` followed by one column of category
/// codes per schema attribute, in roster order.
pub fn export_roster(
    candidate: &CandidatePopulation,
    schema: &AttributeSchema,
    id_column: &str,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    let err = csv_out(path);
    let mut header = vec![id_column.to_owned()];
    header.extend(schema.attributes().iter().map(|a| a.name().to_owned()));
    w.write_record(&header).map_err(&err)?;
    for (id, entity) in candidate.entities().enumerate() {
        let mut row = vec![id.to_string()];
        row.extend(
            entity
                .iter()
                .zip(schema.attributes())
                .map(|(&c, a)| a.category(c).to_owned()),
        );
        w.write_record(&row).map_err(&err)?;
    }
    flush(w, path)
}

/// Reads a persons CSV written by [`export_persons`] back into a roster.
pub fn load_persons(path: impl AsRef<Path>, schema: &AttributeSchema) -> Result<CandidatePopulation> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::input(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let malformed = |line: u64, message: String| Error::MalformedRow {
        path: path.to_owned(),
        line,
        message,
    };
    let header = reader.headers().map_err(|e| malformed(1, e.to_string()))?.clone();
    let expected: Vec<&str> = std::iter::once("person_id")
        .chain(schema.attributes().iter().map(|a| a.name()))
        .collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(malformed(1, format!("expected header {}", expected.join(","))));
    }
    let mut genes = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let record = record.map_err(|e| malformed(line, e.to_string()))?;
        if record.get(0) != Some(i.to_string().as_str()) {
            return Err(malformed(line, "person ids must be 0, 1, 2, ... in order".into()));
        }
        for (field, attr) in record.iter().skip(1).zip(schema.attributes()) {
            genes.push(attr.category_id(field)?);
        }
    }
    if genes.is_empty() {
        return Err(malformed(2, "no persons".into()));
    }
    CandidatePopulation::from_genes(schema.len(), genes)
}

/// Writes `household_id,size,composition,member_ids` with member ids
/// joined by `;`.
pub fn export_households(result: &AllocationResult, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    let err = csv_out(path);
    w.write_record(["household_id", "size", "composition", "member_ids"])
        .map_err(&err)?;
    for h in &result.households {
        let members: Vec<String> = h.members.iter().map(usize::to_string).collect();
        w.write_record([
            h.id.to_string(),
            h.composition.total_size().to_string(),
            h.code.clone(),
            members.join(";"),
        ])
        .map_err(&err)?;
    }
    flush(w, path)
}

/// One row per (generation, objective) with the normalised archive best and
/// population mean, exactly as recorded.
pub fn export_convergence(history: &GenerationHistory, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    let err = csv_out(path);
    w.write_record(["generation", "objective", "best", "mean"])
        .map_err(&err)?;
    for record in &history.records {
        for (i, name) in history.objective_names.iter().enumerate() {
            w.write_record([
                record.generation.to_string(),
                name.clone(),
                record.best_normalized[i].to_string(),
                record.mean_normalized[i].to_string(),
            ])
            .map_err(&err)?;
        }
    }
    flush(w, path)
}

/// Archive members with min-max normalised objectives and a `selected`
/// flag set on exactly one row.
pub fn export_pareto_pairs(
    archive: &ParetoArchive,
    selected: usize,
    objective_names: &[String],
    path: impl AsRef<Path>,
) -> Result<()> {
    if archive.is_empty() {
        return Err(Error::EmptyArchive);
    }
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    let err = csv_out(path);
    let mut header = vec!["member_id".to_owned()];
    header.extend(objective_names.iter().cloned());
    header.push("selected".into());
    w.write_record(&header).map_err(&err)?;
    let normalized = normalize_objectives(&archive.objective_vectors());
    for (i, (member, row)) in archive.members().iter().zip(&normalized).enumerate() {
        let mut out = vec![member.id.to_string()];
        out.extend(row.iter().map(f64::to_string));
        out.push((i == selected).to_string());
        w.write_record(&out).map_err(&err)?;
    }
    flush(w, path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseRow {
    pub attribute: String,
    pub table: String,
    pub bins: f64,
    /// Over the attribute's coarse groups, when it has a grouping.
    pub groups: Option<f64>,
}

/// RMSE of every tabulated attribute, over raw category bins and over the
/// coarse groups. The target vector is the first table listing the
/// attribute, rescaled to the roster length.
pub fn rmse_summary(candidate: &CandidatePopulation, data: &EntityDataset) -> Result<Vec<RmseRow>> {
    let n = candidate.len() as f64;
    let mut rows = Vec::new();
    for (index, attr) in data.schema.attributes().iter().enumerate() {
        let Some(table) = data.first_table_with(attr.name()) else {
            continue;
        };
        let actual = marginalize(table, attr.name())?.scaled(n / table.total() as f64);
        let observed: Vec<f64> = candidate
            .category_counts(index, attr.len())
            .into_iter()
            .map(|c| c as f64)
            .collect();
        let groups = match attr.grouping() {
            Some(g) => Some(rmse(&g.aggregate(&actual.values), &g.aggregate(&observed))?),
            None => None,
        };
        rows.push(RmseRow {
            attribute: attr.name().to_owned(),
            table: table.name().to_owned(),
            bins: rmse(&actual.values, &observed)?,
            groups,
        });
    }
    Ok(rows)
}

pub fn export_rmse(rows: &[RmseRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    let err = csv_out(path);
    w.write_record(["attribute", "table", "rmse_bins", "rmse_groups"])
        .map_err(&err)?;
    for r in rows {
        w.write_record([
            r.attribute.clone(),
            r.table.clone(),
            r.bins.to_string(),
            r.groups.map(|g| g.to_string()).unwrap_or_default(),
        ])
        .map_err(&err)?;
    }
    flush(w, path)
}

#[derive(Debug, Serialize, Deserialize)]
struct SavedMember {
    id: u64,
    objectives: ObjectiveVector,
    /// Little-endian `u16` category ids, base64.
    roster: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct SavedArchive {
    capacity: usize,
    width: usize,
    history: GenerationHistory,
    members: Vec<SavedMember>,
}

/// Persists an archive and its run history as JSON.
pub fn save_archive(archive: &ParetoArchive, history: &GenerationHistory, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let width = archive.members().first().map_or(0, |m| m.candidate.width());
    let saved = SavedArchive {
        capacity: archive.capacity(),
        width,
        history: history.clone(),
        members: archive
            .members()
            .iter()
            .map(|m| {
                let bytes: Vec<u8> = m.candidate.genes().iter().flat_map(|g| g.to_le_bytes()).collect();
                SavedMember {
                    id: m.id,
                    objectives: m.objectives.clone(),
                    roster: BASE64.encode(bytes),
                }
            })
            .collect(),
    };
    write_json(&saved, path)
}

pub fn load_archive(path: impl AsRef<Path>) -> Result<(ParetoArchive, GenerationHistory)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::input(path, e))?;
    let parse = |message: String| Error::Parse {
        path: path.to_owned(),
        message,
    };
    let saved: SavedArchive = serde_json::from_str(&text).map_err(|e| parse(e.to_string()))?;
    let members = saved
        .members
        .into_iter()
        .map(|m| {
            let bytes = BASE64.decode(&m.roster).map_err(|e| parse(e.to_string()))?;
            if bytes.len() % 2 != 0 {
                return Err(parse(format!("member {}: odd roster byte count", m.id)));
            }
            let genes = bytes
                .chunks_exact(2)
                .map(|b| u16::from_le_bytes([b[0], b[1]]))
                .collect();
            Ok(ArchiveMember {
                id: m.id,
                candidate: Arc::new(CandidatePopulation::from_genes(saved.width, genes)?),
                objectives: m.objectives,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if saved.capacity == 0 {
        return Err(parse("archive capacity must be positive".into()));
    }
    Ok((ParetoArchive::from_members(saved.capacity, members), saved.history))
}

/// Pretty JSON with a trailing newline. Field order follows the type.
pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::output(path, std::io::Error::other(e)))?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| Error::output(path, e))
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::input(path, e))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileChecksum {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub entity: String,
    pub generations: usize,
    pub archive_size: usize,
    pub selected_member_id: u64,
    pub objective_names: Vec<String>,
    pub weights: Vec<f64>,
    pub raw: Vec<f64>,
    /// Min-max over the final archive.
    pub normalized: Vec<f64>,
    pub rmse: Vec<RmseRow>,
}

impl StageSummary {
    pub fn new(
        entity: &str,
        archive: &ParetoArchive,
        history: &GenerationHistory,
        selected: usize,
        weights: &[f64],
        rmse: Vec<RmseRow>,
    ) -> Self {
        let normalized = normalize_objectives(&archive.objective_vectors());
        let member = &archive.members()[selected];
        StageSummary {
            entity: entity.to_owned(),
            generations: history.records.len().saturating_sub(1),
            archive_size: archive.len(),
            selected_member_id: member.id,
            objective_names: history.objective_names.clone(),
            weights: weights.to_vec(),
            raw: member.objectives.0.clone(),
            normalized: normalized[selected].clone(),
            rmse,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationSummary {
    pub households: usize,
    pub complete: usize,
    pub complete_rate: f64,
    pub unallocated_persons: usize,
}

impl From<&AllocationResult> for AllocationSummary {
    fn from(r: &AllocationResult) -> Self {
        AllocationSummary {
            households: r.households.len(),
            complete: r.complete_count(),
            complete_rate: r.complete_rate(),
            unallocated_persons: r.unallocated.len(),
        }
    }
}

/// Reproducibility record of one pipeline run. Holds nothing that varies
/// between identical runs; per-generation wall-clock times live in the
/// separate file named by `timings_file`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub region: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: Vec<FileChecksum>,
    pub stages: Vec<StageSummary>,
    pub allocation: Option<AllocationSummary>,
    pub outputs: Vec<FileChecksum>,
    pub timings_file: String,
}
