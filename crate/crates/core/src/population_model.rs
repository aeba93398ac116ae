//! Candidate rosters, weighted entity sampling and rule-based validation.
//!
//! A [`CandidatePopulation`] is one GA individual: a fixed-length roster of
//! entities, each entity being one category id per schema attribute. The
//! roster is stored flat (row-major, one row per entity) so that cloning and
//! segment exchange stay cheap for rosters of thousands of entities.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::census_data::{attribute_weights, marginalize, AttributeSchema, CategoryId, EntityDataset, FrequencyVector};
use crate::error::{Error, Result};
use crate::rng::StreamSeed;

/// One synthetic entity: a category id for every schema attribute, in
/// schema order. Household rosters use the same representation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SyntheticPerson {
    pub assignments: Vec<CategoryId>,
}

impl SyntheticPerson {
    pub fn new(assignments: Vec<CategoryId>) -> Self {
        SyntheticPerson { assignments }
    }

    /// Builds a person from category codes given in schema order.
    pub fn from_codes(schema: &AttributeSchema, codes: &[&str]) -> Result<Self> {
        if codes.len() != schema.len() {
            return Err(Error::LengthMismatch {
                left: codes.len(),
                right: schema.len(),
            });
        }
        let assignments = codes
            .iter()
            .zip(schema.attributes())
            .map(|(code, attr)| attr.category_id(code))
            .collect::<Result<_>>()?;
        Ok(SyntheticPerson { assignments })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CandidatePopulation {
    width: usize,
    genes: Vec<CategoryId>,
}

impl CandidatePopulation {
    /// `genes` holds `width` category ids per entity, entity after entity.
    pub fn from_genes(width: usize, genes: Vec<CategoryId>) -> Result<Self> {
        if width == 0 || !genes.len().is_multiple_of(width) {
            return Err(Error::LengthMismatch {
                left: genes.len(),
                right: width,
            });
        }
        Ok(CandidatePopulation { width, genes })
    }

    pub fn from_entities(width: usize, entities: &[SyntheticPerson]) -> Result<Self> {
        let mut genes = Vec::with_capacity(width * entities.len());
        for e in entities {
            if e.assignments.len() != width {
                return Err(Error::LengthMismatch {
                    left: e.assignments.len(),
                    right: width,
                });
            }
            genes.extend_from_slice(&e.assignments);
        }
        Self::from_genes(width, genes)
    }

    /// Number of entities in the roster.
    pub fn len(&self) -> usize {
        self.genes.len() / self.width
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    /// Attributes per entity.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn genes(&self) -> &[CategoryId] {
        &self.genes
    }

    pub fn entity(&self, index: usize) -> &[CategoryId] {
        &self.genes[index * self.width..(index + 1) * self.width]
    }

    pub fn entities(&self) -> impl ExactSizeIterator<Item = &[CategoryId]> + '_ {
        self.genes.chunks_exact(self.width)
    }

    pub fn person(&self, index: usize) -> SyntheticPerson {
        SyntheticPerson::new(self.entity(index).to_vec())
    }

    pub(crate) fn genes_mut(&mut self) -> &mut [CategoryId] {
        &mut self.genes
    }

    pub(crate) fn set(&mut self, entity: usize, attribute: usize, value: CategoryId) {
        self.genes[entity * self.width + attribute] = value;
    }

    pub(crate) fn get(&self, entity: usize, attribute: usize) -> CategoryId {
        self.genes[entity * self.width + attribute]
    }

    /// Occurrences of each category of `attribute` (schema index) among the
    /// roster's entities.
    pub fn category_counts(&self, attribute: usize, categories: usize) -> Vec<u64> {
        let mut counts = vec![0u64; categories];
        for entity in self.entities() {
            counts[entity[attribute] as usize] += 1;
        }
        counts
    }
}

/// Counts of each category of `attribute` in the roster, in category order.
pub fn observed_frequencies(
    candidate: &CandidatePopulation,
    schema: &AttributeSchema,
    attribute: &str,
) -> Result<FrequencyVector> {
    let index = schema.index_of(attribute)?;
    let counts = candidate.category_counts(index, schema.at(index).len());
    Ok(FrequencyVector::new(
        attribute,
        counts.into_iter().map(|c| c as f64).collect(),
    ))
}

#[derive(Debug, Clone, PartialEq)]
struct RuleClause {
    attribute: usize,
    forbidden: Vec<bool>,
}

/// A forbidden combination: the rule is violated when every clause matches,
/// i.e. each clause's attribute takes one of its listed categories.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationRule {
    pub name: String,
    pub message: String,
    clauses: Vec<RuleClause>,
}

impl ValidationRule {
    pub fn new(schema: &AttributeSchema, name: &str, message: &str, clauses: &[(&str, &[&str])]) -> Result<Self> {
        if clauses.is_empty() {
            return Err(Error::Config(format!("rule {name:?} has no clauses")));
        }
        let clauses = clauses
            .iter()
            .map(|(attribute, categories)| {
                let index = schema.index_of(attribute)?;
                let attr = schema.at(index);
                let mut forbidden = vec![false; attr.len()];
                for code in categories.iter() {
                    forbidden[attr.category_id(code)? as usize] = true;
                }
                Ok(RuleClause {
                    attribute: index,
                    forbidden,
                })
            })
            .collect::<Result<_>>()?;
        Ok(ValidationRule {
            name: name.to_owned(),
            message: message.to_owned(),
            clauses,
        })
    }

    pub fn is_violated_by(&self, entity: &[CategoryId]) -> bool {
        self.clauses.iter().all(|c| c.forbidden[entity[c.attribute] as usize])
    }

    /// Schema indices this rule reads.
    pub fn attributes(&self) -> impl Iterator<Item = usize> + '_ {
        self.clauses.iter().map(|c| c.attribute)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleFile {
    #[serde(default)]
    rule: Vec<RuleDecl>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleDecl {
    name: String,
    #[serde(default)]
    message: Option<String>,
    when: Vec<ClauseDecl>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClauseDecl {
    attribute: String,
    categories: Vec<String>,
}

/// Validation rules for one kind of entity.
///
/// Rule file grammar (TOML):
///
/// ```toml
/// [[rule]]
/// name = "under-18-married"
/// message = "a person aged under 18 cannot be married"
/// [[rule.when]]
/// attribute = "age"
/// categories = ["0-4", "5-9", "10-15", "16-17"]
/// [[rule.when]]
/// attribute = "marital"
/// categories = ["married"]
/// ```
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RuleSet {
    rules: Vec<ValidationRule>,
}

impl RuleSet {
    pub fn new(rules: Vec<ValidationRule>) -> Self {
        RuleSet { rules }
    }

    pub fn empty() -> Self {
        RuleSet::default()
    }

    pub fn from_toml_str(text: &str, schema: &AttributeSchema) -> Result<Self> {
        let file: RuleFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_decls(file, schema)
    }

    pub fn load(path: impl AsRef<Path>, schema: &AttributeSchema) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::input(path, e))?;
        let file: RuleFile = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_owned(),
            message: e.to_string(),
        })?;
        Self::from_decls(file, schema)
    }

    fn from_decls(file: RuleFile, schema: &AttributeSchema) -> Result<Self> {
        let rules = file
            .rule
            .iter()
            .map(|decl| {
                let cats: Vec<Vec<&str>> = decl
                    .when
                    .iter()
                    .map(|c| c.categories.iter().map(String::as_str).collect())
                    .collect();
                let clauses: Vec<(&str, &[&str])> = decl
                    .when
                    .iter()
                    .zip(&cats)
                    .map(|(c, cats)| (c.attribute.as_str(), cats.as_slice()))
                    .collect();
                let message = decl.message.clone().unwrap_or_else(|| decl.name.clone());
                ValidationRule::new(schema, &decl.name, &message, &clauses)
            })
            .collect::<Result<_>>()?;
        Ok(RuleSet { rules })
    }

    pub fn rules(&self) -> &[ValidationRule] {
        &self.rules
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn is_valid(&self, entity: &[CategoryId]) -> bool {
        !self.rules.iter().any(|r| r.is_violated_by(entity))
    }

    pub fn violations<'a>(&'a self, entity: &[CategoryId]) -> Vec<&'a ValidationRule> {
        self.rules.iter().filter(|r| r.is_violated_by(entity)).collect()
    }
}

/// All rules `person` violates; empty means valid.
pub fn validate_person<'a>(person: &SyntheticPerson, rules: &'a RuleSet) -> Vec<&'a ValidationRule> {
    rules.violations(&person.assignments)
}

/// Per-attribute categorical sampling distributions.
#[derive(Debug, Clone)]
pub struct AttributeWeights {
    probabilities: Vec<Vec<f64>>,
    distributions: Vec<WeightedIndex<f64>>,
}

impl AttributeWeights {
    pub fn new(probabilities: Vec<Vec<f64>>) -> Result<Self> {
        let distributions = probabilities
            .iter()
            .enumerate()
            .map(|(i, p)| WeightedIndex::new(p).map_err(|_| Error::ZeroVector(format!("attribute #{i}"))))
            .collect::<Result<_>>()?;
        Ok(AttributeWeights {
            probabilities,
            distributions,
        })
    }

    /// Weights from the marginal of each attribute's source table: the one
    /// named in `sources`, else the first table listing the attribute.
    pub fn from_dataset(data: &EntityDataset, sources: &BTreeMap<String, String>) -> Result<Self> {
        for attr in sources.keys() {
            data.schema.index_of(attr)?;
        }
        let probabilities = data
            .schema
            .attributes()
            .iter()
            .map(|attr| {
                let table = match sources.get(attr.name()) {
                    Some(name) => data.table(name)?,
                    None => data.first_table_with(attr.name()).ok_or_else(|| {
                        Error::Config(format!(
                            "attribute {:?} appears in no table; cannot derive sampling weights",
                            attr.name()
                        ))
                    })?,
                };
                attribute_weights(&marginalize(table, attr.name())?)
            })
            .collect::<Result<_>>()?;
        Self::new(probabilities)
    }

    pub fn probabilities(&self) -> &[Vec<f64>] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.distributions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distributions.is_empty()
    }

    pub fn sample_attribute<R: Rng + ?Sized>(&self, attribute: usize, rng: &mut R) -> CategoryId {
        self.distributions[attribute].sample(rng) as CategoryId
    }
}

/// Draws every attribute independently from its categorical distribution.
/// The result is not rule-checked.
pub fn sample_person<R: Rng + ?Sized>(weights: &AttributeWeights, rng: &mut R) -> SyntheticPerson {
    SyntheticPerson::new((0..weights.len()).map(|a| weights.sample_attribute(a, rng)).collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    /// Each attribute drawn from its own marginal.
    #[default]
    Independent,
    /// Attributes drawn cell-wise from the tables, each table conditioned
    /// on the attributes already fixed by earlier tables.
    Joint,
}

/// Cells of one table grouped by the values of a subset of its axes.
#[derive(Debug, Clone)]
struct Conditional {
    cells: Vec<usize>,
    dist: WeightedIndex<f64>,
}

#[derive(Debug, Clone)]
struct JointTable {
    axes: Vec<usize>,
    cell_ids: Vec<Vec<CategoryId>>,
    /// Indexed by bitmask of already-assigned axes, then by their values.
    conditionals: Vec<HashMap<Vec<CategoryId>, Conditional>>,
}

impl JointTable {
    fn new(table: &crate::census_data::ContingencyTable) -> Self {
        let axes = table.axis_attributes().to_vec();
        let mut cell_ids = Vec::new();
        let mut weights = Vec::new();
        for (offset, &count) in table.counts().iter().enumerate() {
            if count > 0 {
                cell_ids.push(table.cell_ids(offset));
                weights.push(count as f64);
            }
        }
        let masks = 1usize << axes.len();
        let mut conditionals = Vec::with_capacity(masks);
        for mask in 0..masks {
            let mut groups: HashMap<Vec<CategoryId>, (Vec<usize>, Vec<f64>)> = HashMap::new();
            for (i, ids) in cell_ids.iter().enumerate() {
                let key: Vec<CategoryId> = (0..axes.len())
                    .filter(|b| mask & (1 << b) != 0)
                    .map(|b| ids[b])
                    .collect();
                let entry = groups.entry(key).or_default();
                entry.0.push(i);
                entry.1.push(weights[i]);
            }
            conditionals.push(
                groups
                    .into_iter()
                    .map(|(k, (cells, w))| {
                        let dist = WeightedIndex::new(&w).expect("positive cell weights");
                        (k, Conditional { cells, dist })
                    })
                    .collect(),
            );
        }
        JointTable {
            axes,
            cell_ids,
            conditionals,
        }
    }
}

/// Draws candidate entities for one entity kind.
#[derive(Debug, Clone)]
pub struct EntitySampler {
    weights: AttributeWeights,
    mode: SamplingMode,
    joint: Vec<JointTable>,
}

impl EntitySampler {
    pub fn new(data: &EntityDataset, mode: SamplingMode, sources: &BTreeMap<String, String>) -> Result<Self> {
        let weights = AttributeWeights::from_dataset(data, sources)?;
        let joint = match mode {
            SamplingMode::Independent => Vec::new(),
            SamplingMode::Joint => data.tables.iter().map(JointTable::new).collect(),
        };
        Ok(EntitySampler { weights, mode, joint })
    }

    pub fn from_weights(weights: AttributeWeights) -> Self {
        EntitySampler {
            weights,
            mode: SamplingMode::Independent,
            joint: Vec::new(),
        }
    }

    pub fn weights(&self) -> &AttributeWeights {
        &self.weights
    }

    pub fn mode(&self) -> SamplingMode {
        self.mode
    }

    pub fn width(&self) -> usize {
        self.weights.len()
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [CategoryId]) {
        match self.mode {
            SamplingMode::Independent => {
                for (a, slot) in out.iter_mut().enumerate() {
                    *slot = self.weights.sample_attribute(a, rng);
                }
            }
            SamplingMode::Joint => {
                let mut assigned = vec![false; out.len()];
                for table in &self.joint {
                    let mut mask = 0usize;
                    let mut key = Vec::with_capacity(table.axes.len());
                    for (b, &attr) in table.axes.iter().enumerate() {
                        if assigned[attr] {
                            mask |= 1 << b;
                            key.push(out[attr]);
                        }
                    }
                    if mask == (1 << table.axes.len()) - 1 {
                        continue;
                    }
                    // No compatible cell: leave the free axes to the marginals.
                    let Some(cond) = table.conditionals[mask].get(&key) else {
                        continue;
                    };
                    let cell = &table.cell_ids[cond.cells[cond.dist.sample(rng)]];
                    for (b, &attr) in table.axes.iter().enumerate() {
                        if !assigned[attr] {
                            out[attr] = cell[b];
                            assigned[attr] = true;
                        }
                    }
                }
                for (a, slot) in out.iter_mut().enumerate() {
                    if !assigned[a] {
                        *slot = self.weights.sample_attribute(a, rng);
                    }
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SyntheticPerson {
        let mut out = vec![0; self.width()];
        self.sample_into(rng, &mut out);
        SyntheticPerson::new(out)
    }
}

/// Builds a roster of `size` valid entities by rejection sampling.
///
/// Slot `i` draws from the stream `seed.child(i)`, so the roster does not
/// depend on the number of worker threads.
pub fn generate_candidate(
    sampler: &EntitySampler,
    size: usize,
    rules: &RuleSet,
    seed: StreamSeed,
    max_retries: usize,
) -> Result<CandidatePopulation> {
    if size == 0 {
        return Err(Error::Config("candidate size must be positive".into()));
    }
    if max_retries == 0 {
        return Err(Error::Config("max_retries must be at least 1".into()));
    }
    let width = sampler.width();
    let mut genes = vec![0 as CategoryId; size * width];
    let failed = genes
        .par_chunks_mut(width)
        .enumerate()
        .filter_map(|(slot, out)| {
            let mut rng = seed.child(slot as u64).rng();
            for _ in 0..max_retries {
                sampler.sample_into(&mut rng, out);
                if rules.is_valid(out) {
                    return None;
                }
            }
            Some(slot)
        })
        .min();
    if let Some(slot) = failed {
        return Err(Error::RetriesExhausted {
            slot,
            retries: max_retries,
        });
    }
    CandidatePopulation::from_genes(width, genes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::census_data::ContingencyTable;
    use proptest::prelude::*;

    fn schema() -> AttributeSchema {
        AttributeSchema::from_toml_str(
            r#"
            [[attribute]]
            name = "sex"
            categories = ["m", "f"]

            [[attribute]]
            name = "age"
            categories = ["ch", "ad", "el"]

            [[attribute]]
            name = "marital"
            categories = ["single", "married"]
            "#,
        )
        .unwrap()
    }

    fn marriage_rule(schema: &AttributeSchema) -> RuleSet {
        RuleSet::new(vec![ValidationRule::new(
            schema,
            "under-18-married",
            "cannot be married",
            &[("age", &["ch"]), ("marital", &["married"])],
        )
        .unwrap()])
    }

    #[test]
    fn degenerate_weights_fix_the_person() {
        let w = AttributeWeights::new(vec![vec![0.0, 1.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let mut rng = StreamSeed::new(1).rng();
        for _ in 0..200 {
            assert_eq!(sample_person(&w, &mut rng).assignments, vec![1, 2, 0]);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let w = AttributeWeights::new(vec![vec![0.5, 0.5], vec![0.2, 0.3, 0.5], vec![0.4, 0.6]]).unwrap();
        let a = sample_person(&w, &mut StreamSeed::new(9).rng());
        let b = sample_person(&w, &mut StreamSeed::new(9).rng());
        assert_eq!(a, b);
    }

    #[test]
    fn sampled_frequency_within_three_sigma() {
        let w = AttributeWeights::new(vec![vec![0.2, 0.8]]).unwrap();
        let mut rng = StreamSeed::new(2024).rng();
        let n = 10_000;
        let hits = (0..n)
            .filter(|_| sample_person(&w, &mut rng).assignments[0] == 0)
            .count();
        let p = hits as f64 / n as f64;
        let sigma = (0.2f64 * 0.8 / n as f64).sqrt();
        assert!((p - 0.2).abs() <= 3.0 * sigma, "p = {p}");
    }

    #[test]
    fn rule_validation() {
        let schema = schema();
        let rules = marriage_rule(&schema);
        let child = SyntheticPerson::from_codes(&schema, &["m", "ch", "married"]).unwrap();
        let adult = SyntheticPerson::from_codes(&schema, &["m", "ad", "married"]).unwrap();
        assert_eq!(validate_person(&child, &rules).len(), 1);
        assert!(validate_person(&adult, &rules).is_empty());
        assert!(validate_person(&child, &RuleSet::empty()).is_empty());
    }

    #[test]
    fn rule_file_parses() {
        let schema = schema();
        let rules = RuleSet::from_toml_str(
            r#"
            [[rule]]
            name = "r"
            [[rule.when]]
            attribute = "age"
            categories = ["ch"]
            [[rule.when]]
            attribute = "marital"
            categories = ["married"]
            "#,
            &schema,
        )
        .unwrap();
        assert_eq!(rules.rules().len(), 1);
        assert_eq!(rules.rules()[0].message, "r");
        let child = SyntheticPerson::from_codes(&schema, &["f", "ch", "married"]).unwrap();
        assert_eq!(validate_person(&child, &rules).len(), 1);

        let bad = r#"
            [[rule]]
            name = "r"
            [[rule.when]]
            attribute = "age"
            categories = ["teen"]
        "#;
        assert!(RuleSet::from_toml_str(bad, &schema).is_err());
    }

    fn uniform_sampler() -> EntitySampler {
        EntitySampler::from_weights(
            AttributeWeights::new(vec![vec![0.5, 0.5], vec![0.3, 0.5, 0.2], vec![0.5, 0.5]]).unwrap(),
        )
    }

    #[test]
    fn generated_candidates_are_valid() {
        let schema = schema();
        let rules = marriage_rule(&schema);
        let c = generate_candidate(&uniform_sampler(), 100, &rules, StreamSeed::new(3), 100).unwrap();
        assert_eq!(c.len(), 100);
        assert!(c.entities().all(|e| rules.is_valid(e)));
    }

    #[test]
    fn contradictory_rules_exhaust_retries() {
        let schema = schema();
        let rules = RuleSet::new(vec![ValidationRule::new(
            &schema,
            "no-sex",
            "impossible",
            &[("sex", &["m", "f"])],
        )
        .unwrap()]);
        let err = generate_candidate(&uniform_sampler(), 10, &rules, StreamSeed::new(3), 50).unwrap_err();
        assert!(matches!(err, Error::RetriesExhausted { slot: 0, retries: 50 }));
    }

    #[test]
    fn zero_size_is_rejected() {
        let err = generate_candidate(&uniform_sampler(), 0, &RuleSet::empty(), StreamSeed::new(3), 5);
        assert!(err.is_err());
    }

    #[test]
    fn generation_ignores_thread_count() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| generate_candidate(&uniform_sampler(), 500, &RuleSet::empty(), StreamSeed::new(11), 10))
                .unwrap()
        };
        assert_eq!(run(1), run(6));
    }

    #[test]
    fn observed_counts() {
        let schema = schema();
        let people: Vec<_> = [["m", "ad", "single"], ["m", "el", "single"], ["f", "ad", "single"]]
            .iter()
            .map(|c| SyntheticPerson::from_codes(&schema, c).unwrap())
            .collect();
        let c = CandidatePopulation::from_entities(3, &people).unwrap();
        assert_eq!(observed_frequencies(&c, &schema, "sex").unwrap().values, vec![2.0, 1.0]);
        assert_eq!(
            observed_frequencies(&c, &schema, "age").unwrap().values,
            vec![0.0, 2.0, 1.0]
        );
        assert!(observed_frequencies(&c, &schema, "height").is_err());

        let adults = vec![SyntheticPerson::from_codes(&schema, &["f", "ad", "single"]).unwrap(); 10];
        let c = CandidatePopulation::from_entities(3, &adults).unwrap();
        assert_eq!(
            observed_frequencies(&c, &schema, "age").unwrap().values,
            vec![0.0, 10.0, 0.0]
        );
    }

    #[test]
    fn joint_sampling_respects_table_support() {
        let schema = schema();
        let cells: [(&[&str], u64); 3] = [(&["m", "ch"], 5), (&["f", "el"], 5), (&["f", "ad"], 1)];
        let sex_age = ContingencyTable::from_cells("sa", &["sex", "age"], &schema, cells).unwrap();
        let cells: [(&[&str], u64); 3] = [(&["ch", "single"], 5), (&["ad", "married"], 1), (&["el", "married"], 5)];
        let age_mar = ContingencyTable::from_cells("am", &["age", "marital"], &schema, cells).unwrap();
        let data = EntityDataset::new(schema, vec![sex_age, age_mar], 10).unwrap();
        let sampler = EntitySampler::new(&data, SamplingMode::Joint, &BTreeMap::new()).unwrap();
        let mut rng = StreamSeed::new(5).rng();
        for _ in 0..500 {
            let p = sampler.sample(&mut rng).assignments;
            let ok = matches!((p[0], p[1], p[2]), (0, 0, 0) | (1, 2, 1) | (1, 1, 1));
            assert!(ok, "{p:?}");
        }
    }

    proptest! {
        #[test]
        fn frequencies_sum_to_roster_length(genes in proptest::collection::vec((0u16..2, 0u16..3, 0u16..2), 1..200)) {
            let schema = schema();
            let flat: Vec<u16> = genes.iter().flat_map(|&(a, b, c)| [a, b, c]).collect();
            let c = CandidatePopulation::from_genes(3, flat).unwrap();
            for attr in ["sex", "age", "marital"] {
                let v = observed_frequencies(&c, &schema, attr).unwrap();
                prop_assert_eq!(v.sum() as usize, c.len());
            }
        }
    }
}
