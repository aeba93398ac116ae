//! Reconstruction-error objectives.
//!
//! Every objective compares a target frequency vector, taken from a
//! contingency table and rescaled to the roster size, with the counts
//! observed in a candidate roster.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::census_data::{marginalize, EntityDataset};
use crate::error::{Error, Result};
use crate::population_model::CandidatePopulation;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Sum of absolute per-category differences.
    L1,
    /// Composite trapezoid area under the absolute difference curve.
    #[default]
    Trapezoid,
}

impl Metric {
    pub fn apply(self, actual: &[f64], observed: &[f64]) -> Result<f64> {
        match self {
            Metric::L1 => l1_objective(actual, observed),
            Metric::Trapezoid => trapezoid_area(actual, observed),
        }
    }
}

fn default_weight() -> f64 {
    1.0
}

/// One optimisation objective, as declared in the run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    pub name: String,
    pub table: String,
    /// Marginal axis to compare. Mutually exclusive with `full_cells`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute: Option<String>,
    /// Compare every cell of the table (row-major) instead of one marginal.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub full_cells: bool,
    #[serde(default)]
    pub metric: Metric,
    /// Only used when picking the final solution from the archive.
    #[serde(default = "default_weight")]
    pub weight: f64,
}

impl ObjectiveSpec {
    pub fn marginal(name: &str, table: &str, attribute: &str, metric: Metric) -> Self {
        ObjectiveSpec {
            name: name.to_owned(),
            table: table.to_owned(),
            attribute: Some(attribute.to_owned()),
            full_cells: false,
            metric,
            weight: 1.0,
        }
    }
}

/// Per-objective error values for one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectiveVector(pub Vec<f64>);

impl Deref for ObjectiveVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ObjectiveVector {
    fn from(v: Vec<f64>) -> Self {
        ObjectiveVector(v)
    }
}

fn check_lengths(actual: &[f64], observed: &[f64]) -> Result<()> {
    if actual.len() != observed.len() {
        return Err(Error::LengthMismatch {
            left: actual.len(),
            right: observed.len(),
        });
    }
    Ok(())
}

/// `Σ_j |f_j − f'_j|`.
pub fn l1_objective(actual: &[f64], observed: &[f64]) -> Result<f64> {
    check_lengths(actual, observed)?;
    Ok(actual.iter().zip(observed).map(|(a, o)| (a - o).abs()).sum())
}

/// Trapezoid rule over unit-spaced categories applied to `d_j = |f_j − f'_j|`.
/// A single category yields `d_1`.
pub fn trapezoid_area(actual: &[f64], observed: &[f64]) -> Result<f64> {
    check_lengths(actual, observed)?;
    if actual.is_empty() {
        return Err(Error::LengthMismatch { left: 0, right: 1 });
    }
    let d: Vec<f64> = actual.iter().zip(observed).map(|(a, o)| (a - o).abs()).collect();
    if d.len() == 1 {
        return Ok(d[0]);
    }
    Ok(d.windows(2).map(|w| (w[0] + w[1]) / 2.0).sum())
}

/// Root mean square error between two frequency vectors.
pub fn rmse(actual: &[f64], observed: &[f64]) -> Result<f64> {
    check_lengths(actual, observed)?;
    if actual.is_empty() {
        return Err(Error::LengthMismatch { left: 0, right: 1 });
    }
    let sq: f64 = actual.iter().zip(observed).map(|(a, o)| (a - o) * (a - o)).sum();
    Ok((sq / actual.len() as f64).sqrt())
}

/// Per-objective min-max scaling to `[0, 1]` over the given set. Constant
/// objectives (including any single-vector set) map to 0.
pub fn normalize_objectives(vectors: &[ObjectiveVector]) -> Vec<Vec<f64>> {
    let Some(first) = vectors.first() else {
        return Vec::new();
    };
    let k = first.len();
    let mut lo = vec![f64::INFINITY; k];
    let mut hi = vec![f64::NEG_INFINITY; k];
    for v in vectors {
        for i in 0..k {
            lo[i] = lo[i].min(v[i]);
            hi[i] = hi[i].max(v[i]);
        }
    }
    vectors
        .iter()
        .map(|v| {
            (0..k)
                .map(|i| {
                    let range = hi[i] - lo[i];
                    if range > 0.0 {
                        (v[i] - lo[i]) / range
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone)]
enum Projection {
    Attribute(usize),
    Cells { axes: Vec<usize>, shape: Vec<usize> },
}

#[derive(Debug, Clone)]
struct ResolvedObjective {
    projection: Projection,
    /// Target distribution (cell or category shares summing to one).
    shares: Vec<f64>,
    metric: Metric,
}

/// Objective specs resolved against one entity dataset, ready for repeated
/// evaluation.
#[derive(Debug, Clone)]
pub struct ObjectiveSet {
    specs: Vec<ObjectiveSpec>,
    resolved: Vec<ResolvedObjective>,
    /// Schema attributes whose category counts are needed.
    counted: Vec<usize>,
    categories: Vec<usize>,
}

impl ObjectiveSet {
    pub fn new(data: &EntityDataset, specs: &[ObjectiveSpec]) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Config("at least one objective is required".into()));
        }
        if specs.iter().any(|s| !s.weight.is_finite() || s.weight < 0.0) {
            return Err(Error::Config(
                "objective weights must be finite and non-negative".into(),
            ));
        }
        if !specs.iter().any(|s| s.weight > 0.0) {
            return Err(Error::Config("at least one objective weight must be positive".into()));
        }
        let mut resolved = Vec::with_capacity(specs.len());
        let mut counted = Vec::new();
        for spec in specs {
            let table = data.table(&spec.table)?;
            let total = table.total() as f64;
            let r = match (&spec.attribute, spec.full_cells) {
                (Some(attr), false) => {
                    let index = data.schema.index_of(attr)?;
                    let marginal = marginalize(table, attr)?;
                    if !counted.contains(&index) {
                        counted.push(index);
                    }
                    ResolvedObjective {
                        projection: Projection::Attribute(index),
                        shares: marginal.values.iter().map(|v| v / total).collect(),
                        metric: spec.metric,
                    }
                }
                (None, true) => ResolvedObjective {
                    projection: Projection::Cells {
                        axes: table.axis_attributes().to_vec(),
                        shape: table.shape().to_vec(),
                    },
                    shares: table.counts().iter().map(|&c| c as f64 / total).collect(),
                    metric: spec.metric,
                },
                _ => {
                    return Err(Error::Config(format!(
                        "objective {:?} must set exactly one of `attribute` or `full_cells`",
                        spec.name
                    )))
                }
            };
            resolved.push(r);
        }
        let categories = (0..data.schema.len()).map(|a| data.schema.at(a).len()).collect();
        Ok(ObjectiveSet {
            specs: specs.to_vec(),
            resolved,
            counted,
            categories,
        })
    }

    pub fn specs(&self) -> &[ObjectiveSpec] {
        &self.specs
    }

    pub fn names(&self) -> Vec<String> {
        self.specs.iter().map(|s| s.name.clone()).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.specs.iter().map(|s| s.weight).collect()
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    /// Target vector of objective `i`, rescaled to a roster of `roster_len`.
    pub fn actual(&self, i: usize, roster_len: usize) -> Vec<f64> {
        self.resolved[i].shares.iter().map(|s| s * roster_len as f64).collect()
    }

    /// Observed vector of objective `i` in `candidate`.
    pub fn observed(&self, i: usize, candidate: &CandidatePopulation) -> Vec<f64> {
        match &self.resolved[i].projection {
            Projection::Attribute(a) => candidate
                .category_counts(*a, self.categories[*a])
                .into_iter()
                .map(|c| c as f64)
                .collect(),
            Projection::Cells { axes, shape } => cell_counts(candidate, axes, shape),
        }
    }

    pub fn evaluate(&self, candidate: &CandidatePopulation) -> Result<ObjectiveVector> {
        if candidate.is_empty() {
            return Err(Error::Config("cannot evaluate an empty roster".into()));
        }
        let n = candidate.len();
        // One pass over the roster for every marginal that is needed.
        let mut counts: Vec<Vec<u64>> = self.counted.iter().map(|&a| vec![0; self.categories[a]]).collect();
        for entity in candidate.entities() {
            for (slot, &a) in counts.iter_mut().zip(&self.counted) {
                slot[entity[a] as usize] += 1;
            }
        }
        let mut values = Vec::with_capacity(self.resolved.len());
        for (i, r) in self.resolved.iter().enumerate() {
            let observed = match &r.projection {
                Projection::Attribute(a) => {
                    let slot = self.counted.iter().position(|c| c == a).expect("counted attribute");
                    counts[slot].iter().map(|&c| c as f64).collect()
                }
                Projection::Cells { axes, shape } => cell_counts(candidate, axes, shape),
            };
            values.push(r.metric.apply(&self.actual(i, n), &observed)?);
        }
        Ok(ObjectiveVector(values))
    }
}

fn cell_counts(candidate: &CandidatePopulation, axes: &[usize], shape: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; shape.iter().product()];
    for entity in candidate.entities() {
        let offset = axes
            .iter()
            .zip(shape)
            .fold(0, |acc, (&a, &n)| acc * n + entity[a] as usize);
        out[offset] += 1.0;
    }
    out
}

/// Evaluates `candidate` against `specs` in one call.
pub fn evaluate(
    candidate: &CandidatePopulation,
    data: &EntityDataset,
    specs: &[ObjectiveSpec],
) -> Result<ObjectiveVector> {
    ObjectiveSet::new(data, specs)?.evaluate(candidate)
}
