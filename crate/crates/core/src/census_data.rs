//! Attribute schemas, contingency tables and the marginals derived from them.
//!
//! # Schema file
//!
//! A schema is a TOML document with one `[[attribute]]` table per attribute,
//! in the order they appear on every synthetic entity:
//!
//! ```toml
//! [[attribute]]
//! name = "age"
//! categories = ["0-4", "5-9", "65+"]          # order is significant
//! groups = [                                  # optional coarse grouping
//!     { code = "ch", members = ["0-4", "5-9"] },
//!     { code = "el", members = ["65+"] },
//! ]
//! ```
//!
//! Category order defines the axis of every frequency vector and therefore
//! the integration axis of trapezoid fitness. A category may belong to at
//! most one group; categories left out of every group are simply ungrouped.
//!
//! # Table CSV
//!
//! Header: the axis attribute names in order, then `count`. One row per
//! cell. Cells that are not listed count as zero.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a category within its attribute's declared order.
pub type CategoryId = u16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grouping {
    codes: Vec<String>,
    /// Group index of each category, `None` when ungrouped.
    of_category: Vec<Option<usize>>,
}

impl Grouping {
    pub fn codes(&self) -> &[String] {
        &self.codes
    }

    pub fn group_of(&self, category: CategoryId) -> Option<usize> {
        self.of_category.get(category as usize).copied().flatten()
    }

    /// Sums `values` (in category order) into group order. Ungrouped
    /// categories are dropped.
    pub fn aggregate(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.codes.len()];
        for (cat, v) in values.iter().enumerate() {
            if let Some(g) = self.of_category[cat] {
                out[g] += v;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    name: String,
    categories: Vec<String>,
    index: HashMap<String, CategoryId>,
    grouping: Option<Grouping>,
}

impl Attribute {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn category_id(&self, code: &str) -> Result<CategoryId> {
        self.index.get(code).copied().ok_or_else(|| Error::UnknownCategory {
            attribute: self.name.clone(),
            code: code.to_owned(),
        })
    }

    pub fn category(&self, id: CategoryId) -> &str {
        &self.categories[id as usize]
    }

    pub fn grouping(&self) -> Option<&Grouping> {
        self.grouping.as_ref()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemaFile {
    #[serde(default)]
    attribute: Vec<AttributeDecl>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeDecl {
    pub name: String,
    pub categories: Vec<String>,
    #[serde(default)]
    pub groups: Vec<GroupDecl>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GroupDecl {
    pub code: String,
    pub members: Vec<String>,
}

/// Ordered attribute descriptors for one kind of entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeSchema {
    attributes: Vec<Attribute>,
    by_name: HashMap<String, usize>,
}

impl AttributeSchema {
    pub fn new(decls: Vec<AttributeDecl>) -> Result<Self> {
        if decls.is_empty() {
            return Err(Error::Schema("no attributes declared".into()));
        }
        let mut attributes = Vec::with_capacity(decls.len());
        let mut by_name = HashMap::new();
        for decl in decls {
            if by_name.insert(decl.name.clone(), attributes.len()).is_some() {
                return Err(Error::Schema(format!("duplicate attribute {:?}", decl.name)));
            }
            if decl.categories.is_empty() {
                return Err(Error::Schema(format!("attribute {:?} has no categories", decl.name)));
            }
            if decl.categories.len() > CategoryId::MAX as usize {
                return Err(Error::Schema(format!(
                    "attribute {:?} has too many categories",
                    decl.name
                )));
            }
            let mut index = HashMap::new();
            for (i, code) in decl.categories.iter().enumerate() {
                if index.insert(code.clone(), i as CategoryId).is_some() {
                    return Err(Error::Schema(format!(
                        "duplicate category {code:?} in attribute {:?}",
                        decl.name
                    )));
                }
            }
            let grouping = if decl.groups.is_empty() {
                None
            } else {
                let mut of_category = vec![None; decl.categories.len()];
                let mut codes = Vec::with_capacity(decl.groups.len());
                for (g, group) in decl.groups.iter().enumerate() {
                    if codes.contains(&group.code) {
                        return Err(Error::Schema(format!(
                            "duplicate group {:?} in attribute {:?}",
                            group.code, decl.name
                        )));
                    }
                    codes.push(group.code.clone());
                    for member in &group.members {
                        let id = *index.get(member).ok_or_else(|| {
                            Error::Schema(format!(
                                "group {:?} of attribute {:?} names undeclared category {member:?}",
                                group.code, decl.name
                            ))
                        })?;
                        if of_category[id as usize].replace(g).is_some() {
                            return Err(Error::Schema(format!(
                                "category {member:?} of attribute {:?} is in two groups",
                                decl.name
                            )));
                        }
                    }
                }
                Some(Grouping { codes, of_category })
            };
            attributes.push(Attribute {
                name: decl.name,
                categories: decl.categories,
                index,
                grouping,
            });
        }
        Ok(AttributeSchema { attributes, by_name })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SchemaFile = toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        Self::new(file.attribute)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::input(path, e))?;
        let file: SchemaFile = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_owned(),
            message: e.to_string(),
        })?;
        Self::new(file.attribute)
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownAttribute(name.to_owned()))
    }

    pub fn attribute(&self, name: &str) -> Result<&Attribute> {
        Ok(&self.attributes[self.index_of(name)?])
    }

    pub fn at(&self, index: usize) -> &Attribute {
        &self.attributes[index]
    }
}

/// Observed joint counts over one to three attributes, stored densely in
/// row-major order over the axes' category orders.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyTable {
    name: String,
    axes: Vec<String>,
    /// Schema index of each axis.
    axis_attributes: Vec<usize>,
    shape: Vec<usize>,
    counts: Vec<u64>,
    total: u64,
}

impl ContingencyTable {
    /// Builds a table from explicit cells. Cells may appear in any order;
    /// repeated cells are rejected.
    pub fn from_cells<'a, I>(name: &str, axes: &[&str], schema: &AttributeSchema, cells: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a [&'a str], u64)>,
    {
        let mut table = Self::empty(name, axes.iter().map(|s| s.to_string()).collect(), schema)?;
        for (codes, count) in cells {
            let offset = table.offset_of_codes(schema, codes)?;
            if table.counts[offset] != 0 {
                return Err(Error::Schema(format!("table {name:?}: duplicate cell {codes:?}")));
            }
            table.counts[offset] = count;
        }
        table.finish()
    }

    fn empty(name: &str, axes: Vec<String>, schema: &AttributeSchema) -> Result<Self> {
        if axes.is_empty() || axes.len() > 3 {
            return Err(Error::Schema(format!(
                "table {name:?} must have between 1 and 3 axes, found {}",
                axes.len()
            )));
        }
        let mut axis_attributes = Vec::with_capacity(axes.len());
        for axis in &axes {
            let idx = schema.index_of(axis)?;
            if axis_attributes.contains(&idx) {
                return Err(Error::Schema(format!("table {name:?}: repeated axis {axis:?}")));
            }
            axis_attributes.push(idx);
        }
        let shape: Vec<usize> = axis_attributes.iter().map(|&a| schema.at(a).len()).collect();
        let cells = shape.iter().product();
        Ok(ContingencyTable {
            name: name.to_owned(),
            axes,
            axis_attributes,
            shape,
            counts: vec![0; cells],
            total: 0,
        })
    }

    fn finish(mut self) -> Result<Self> {
        self.total = self.counts.iter().sum();
        if self.total == 0 {
            return Err(Error::NoPositiveCell(self.name));
        }
        Ok(self)
    }

    fn offset_of_codes(&self, schema: &AttributeSchema, codes: &[&str]) -> Result<usize> {
        if codes.len() != self.axes.len() {
            return Err(Error::LengthMismatch {
                left: codes.len(),
                right: self.axes.len(),
            });
        }
        let mut ids = Vec::with_capacity(codes.len());
        for (code, &attr) in codes.iter().zip(&self.axis_attributes) {
            ids.push(schema.at(attr).category_id(code)?);
        }
        Ok(self.offset(&ids))
    }

    fn offset(&self, ids: &[CategoryId]) -> usize {
        ids.iter()
            .zip(&self.shape)
            .fold(0, |acc, (&id, &n)| acc * n + id as usize)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn axes(&self) -> &[String] {
        &self.axes
    }

    /// Schema indices of the axes, in axis order.
    pub fn axis_attributes(&self) -> &[usize] {
        &self.axis_attributes
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// All cell counts in row-major order (including zero cells).
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, ids: &[CategoryId]) -> u64 {
        self.counts[self.offset(ids)]
    }

    /// Decodes a row-major cell offset into per-axis category ids.
    pub fn cell_ids(&self, mut offset: usize) -> Vec<CategoryId> {
        let mut ids = vec![0; self.shape.len()];
        for (slot, &n) in ids.iter_mut().zip(&self.shape).rev() {
            *slot = (offset % n) as CategoryId;
            offset /= n;
        }
        ids
    }

    pub fn has_axis(&self, attribute: &str) -> bool {
        self.axes.iter().any(|a| a == attribute)
    }
}

/// Parses a table CSV against `schema`.
pub fn load_contingency_table(path: impl AsRef<Path>, schema: &AttributeSchema) -> Result<ContingencyTable> {
    let path = path.as_ref();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    load_named_table(&name, path, schema)
}

/// Like [`load_contingency_table`] but with an explicit table name.
pub fn load_named_table(name: &str, path: impl AsRef<Path>, schema: &AttributeSchema) -> Result<ContingencyTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::input(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let csv_err = |line: u64, e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::input(path, io),
        other => Error::MalformedRow {
            path: path.to_owned(),
            line,
            message: format!("{other:?}"),
        },
    };
    let header = reader.headers().map_err(|e| csv_err(1, e))?.clone();
    let columns: Vec<&str> = header.iter().map(str::trim).collect();
    if columns.len() < 2 || columns.last() != Some(&"count") {
        return Err(Error::Parse {
            path: path.to_owned(),
            message: "header must list the axis attributes followed by `count`".into(),
        });
    }
    let axes: Vec<String> = columns[..columns.len() - 1].iter().map(|s| s.to_string()).collect();
    let mut table = ContingencyTable::empty(name, axes, schema)?;
    let mut seen = vec![false; table.counts.len()];

    for (row, record) in reader.records().enumerate() {
        let line = row as u64 + 2;
        let record = record.map_err(|e| csv_err(line, e))?;
        if record.len() != columns.len() {
            return Err(Error::MalformedRow {
                path: path.to_owned(),
                line,
                message: format!("expected {} fields, found {}", columns.len(), record.len()),
            });
        }
        let fields: Vec<&str> = record.iter().map(str::trim).collect();
        let (codes, count) = fields.split_at(fields.len() - 1);
        let count: i64 = count[0].parse().map_err(|_| Error::MalformedRow {
            path: path.to_owned(),
            line,
            message: format!("count {:?} is not an integer", count[0]),
        })?;
        if count < 0 {
            return Err(Error::NegativeCount {
                path: path.to_owned(),
                line,
                count,
            });
        }
        let offset = table.offset_of_codes(schema, codes)?;
        if std::mem::replace(&mut seen[offset], true) {
            return Err(Error::MalformedRow {
                path: path.to_owned(),
                line,
                message: format!("duplicate cell {codes:?}"),
            });
        }
        table.counts[offset] = count as u64;
    }
    table.finish()
}

/// Counts (or scaled counts) aligned with an attribute's category order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyVector {
    pub attribute: String,
    pub values: Vec<f64>,
}

impl FrequencyVector {
    pub fn new(attribute: impl Into<String>, values: Vec<f64>) -> Self {
        FrequencyVector {
            attribute: attribute.into(),
            values,
        }
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> FrequencyVector {
        FrequencyVector {
            attribute: self.attribute.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Sums `table` over every axis except `attribute`.
pub fn marginalize(table: &ContingencyTable, attribute: &str) -> Result<FrequencyVector> {
    let axis = table
        .axes
        .iter()
        .position(|a| a == attribute)
        .ok_or_else(|| Error::NotAnAxis {
            table: table.name.clone(),
            attribute: attribute.to_owned(),
        })?;
    let mut counts = vec![0u64; table.shape[axis]];
    // stride of `axis` in row-major order
    let inner: usize = table.shape[axis + 1..].iter().product();
    let n = table.shape[axis];
    for (offset, &c) in table.counts.iter().enumerate() {
        counts[(offset / inner) % n] += c;
    }
    Ok(FrequencyVector::new(
        attribute,
        counts.into_iter().map(|c| c as f64).collect(),
    ))
}

/// Normalises a frequency vector into categorical sampling probabilities.
pub fn attribute_weights(vector: &FrequencyVector) -> Result<Vec<f64>> {
    let sum = vector.sum();
    if sum.is_nan() || sum <= 0.0 || vector.values.iter().any(|v| *v < 0.0) {
        return Err(Error::ZeroVector(vector.attribute.clone()));
    }
    Ok(vector.values.iter().map(|v| v / sum).collect())
}

/// Schema, tables and target count for one kind of entity.
#[derive(Debug, Clone)]
pub struct EntityDataset {
    pub schema: AttributeSchema,
    pub tables: Vec<ContingencyTable>,
    pub target_count: usize,
}

impl EntityDataset {
    pub fn new(schema: AttributeSchema, tables: Vec<ContingencyTable>, target_count: usize) -> Result<Self> {
        if target_count == 0 {
            return Err(Error::Config("target count must be positive".into()));
        }
        for table in &tables {
            for axis in &table.axes {
                schema.index_of(axis)?;
            }
            if tables.iter().filter(|t| t.name == table.name).count() > 1 {
                return Err(Error::Config(format!("duplicate table name {:?}", table.name)));
            }
        }
        Ok(EntityDataset {
            schema,
            tables,
            target_count,
        })
    }

    pub fn table(&self, name: &str) -> Result<&ContingencyTable> {
        self.tables
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::Config(format!("unknown table {name:?}")))
    }

    /// First table listing `attribute` as an axis.
    pub fn first_table_with(&self, attribute: &str) -> Option<&ContingencyTable> {
        self.tables.iter().find(|t| t.has_axis(attribute))
    }
}

/// Everything known about one region: persons and, optionally, households.
#[derive(Debug, Clone)]
pub struct RegionDataset {
    pub region_id: String,
    pub persons: EntityDataset,
    pub households: Option<EntityDataset>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Entity {
    Persons,
    Households,
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Entity::Persons => "persons",
            Entity::Households => "households",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalCheck {
    pub entity: Entity,
    pub attribute: String,
    /// `(table name, table total)` for every table listing the attribute.
    pub totals: Vec<(String, u64)>,
    /// `(max - min) / max` over the totals.
    pub discrepancy: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetCheck {
    pub entity: Entity,
    pub table: String,
    pub table_total: u64,
    pub target: usize,
    pub discrepancy: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub tolerance: f64,
    pub marginals: Vec<MarginalCheck>,
    pub targets: Vec<TargetCheck>,
}

impl ValidationReport {
    pub fn has_flags(&self) -> bool {
        self.marginals.iter().any(|m| m.flagged) || self.targets.iter().any(|t| t.flagged)
    }

    pub fn flag_summary(&self) -> Vec<String> {
        let mut out = Vec::new();
        for m in self.marginals.iter().filter(|m| m.flagged) {
            out.push(format!(
                "{} attribute {:?}: table totals differ by {:.4}",
                m.entity, m.attribute, m.discrepancy
            ));
        }
        for t in self.targets.iter().filter(|t| t.flagged) {
            out.push(format!(
                "{} table {:?}: total {} vs target {} (discrepancy {:.4})",
                t.entity, t.table, t.table_total, t.target, t.discrepancy
            ));
        }
        out
    }
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == 0.0 {
        0.0
    } else {
        (a - b).abs() / hi
    }
}

/// Cross-checks table totals against each other and against the target
/// counts. Never fails; discrepancies above `tolerance` are flagged.
pub fn validate_dataset(dataset: &RegionDataset, tolerance: f64) -> ValidationReport {
    let mut report = ValidationReport {
        tolerance,
        marginals: Vec::new(),
        targets: Vec::new(),
    };
    let stages = std::iter::once((Entity::Persons, &dataset.persons))
        .chain(dataset.households.as_ref().map(|h| (Entity::Households, h)));
    for (entity, data) in stages {
        for attr in data.schema.attributes() {
            let totals: Vec<(String, u64)> = data
                .tables
                .iter()
                .filter(|t| t.has_axis(attr.name()))
                .map(|t| (t.name.clone(), t.total))
                .collect();
            if totals.len() < 2 {
                continue;
            }
            let max = totals.iter().map(|t| t.1).max().unwrap_or(0) as f64;
            let min = totals.iter().map(|t| t.1).min().unwrap_or(0) as f64;
            let discrepancy = relative_gap(max, min);
            report.marginals.push(MarginalCheck {
                entity,
                attribute: attr.name().to_owned(),
                totals,
                discrepancy,
                flagged: discrepancy > tolerance,
            });
        }
        for table in &data.tables {
            let discrepancy = relative_gap(table.total as f64, data.target_count as f64);
            report.targets.push(TargetCheck {
                entity,
                table: table.name.clone(),
                table_total: table.total,
                target: data.target_count,
                discrepancy,
                flagged: discrepancy > tolerance,
            });
        }
    }
    report
}
