//! Second pipeline stage: households and the allocation of persons to them.
//!
//! Households are evolved exactly like persons, against the household
//! tables. Each household carries a composition code such as `"2A 3C"`
//! (two adults, three children) that is then filled from the person roster
//! by age class.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::census_data::{AttributeSchema, RegionDataset};
use crate::error::{Error, Result};
use crate::fitness::ObjectiveSpec;
use crate::nsga2::{evolve, EntityProblem, EvolutionConfig, EvolutionOutcome};
use crate::population_model::{CandidatePopulation, RuleSet, SamplingMode, SyntheticPerson};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum AgeClass {
    Adult,
    Child,
    Elder,
}

impl AgeClass {
    pub const ALL: [AgeClass; 3] = [AgeClass::Adult, AgeClass::Child, AgeClass::Elder];

    pub fn letter(self) -> char {
        match self {
            AgeClass::Adult => 'A',
            AgeClass::Child => 'C',
            AgeClass::Elder => 'E',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'A' => Some(AgeClass::Adult),
            'C' => Some(AgeClass::Child),
            'E' => Some(AgeClass::Elder),
            _ => None,
        }
    }

    /// Maps an age grouping code (`ad`, `ch`, `el`) to its class.
    pub fn from_group_code(code: &str) -> Option<Self> {
        match code {
            "ad" => Some(AgeClass::Adult),
            "ch" => Some(AgeClass::Child),
            "el" => Some(AgeClass::Elder),
            _ => None,
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

/// Required number of members per age class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct CompositionSpec {
    required: [u32; 3],
}

impl CompositionSpec {
    pub fn new(adults: u32, children: u32, elders: u32) -> Self {
        CompositionSpec {
            required: [adults, children, elders],
        }
    }

    pub fn required(&self, class: AgeClass) -> u32 {
        self.required[class.slot()]
    }

    pub fn total_size(&self) -> u32 {
        self.required.iter().sum()
    }
}

impl fmt::Display for CompositionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for class in AgeClass::ALL {
            let n = self.required(class);
            if n > 0 {
                if !first {
                    f.write_str(" ")?;
                }
                write!(f, "{n}{}", class.letter())?;
                first = false;
            }
        }
        Ok(())
    }
}

/// Parses a code of whitespace-separated `<count><class>` tokens, e.g.
/// `"2A 3C"`. Repeated classes add up.
pub fn parse_composition(code: &str) -> Result<CompositionSpec> {
    let mut spec = CompositionSpec::default();
    let mut tokens = 0;
    for token in code.split_whitespace() {
        tokens += 1;
        let letter = token.chars().last().expect("split_whitespace yields non-empty tokens");
        let digits = &token[..token.len() - letter.len_utf8()];
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || !letter.is_alphabetic() {
            return Err(Error::MalformedComposition(token.to_owned()));
        }
        let class = AgeClass::from_letter(letter).ok_or(Error::UnknownClassLetter(letter))?;
        let count: u32 = digits
            .parse()
            .map_err(|_| Error::MalformedComposition(token.to_owned()))?;
        spec.required[class.slot()] += count;
    }
    if tokens == 0 {
        return Err(Error::EmptyComposition);
    }
    if spec.total_size() == 0 {
        return Err(Error::MalformedComposition(code.to_owned()));
    }
    Ok(spec)
}

/// Resolves a person's age class through the grouping of `age_attribute`.
pub fn classify_person(person: &SyntheticPerson, schema: &AttributeSchema, age_attribute: &str) -> Result<AgeClass> {
    let index = schema.index_of(age_attribute)?;
    classify_entity(&person.assignments, schema, index)
}

fn classify_entity(entity: &[u16], schema: &AttributeSchema, age_index: usize) -> Result<AgeClass> {
    let attr = schema.at(age_index);
    let category = entity[age_index];
    let unmapped = || Error::UnmappedAgeBin(attr.category(category).to_owned());
    let grouping = attr.grouping().ok_or_else(unmapped)?;
    let group = grouping.group_of(category).ok_or_else(unmapped)?;
    AgeClass::from_group_code(&grouping.codes()[group]).ok_or_else(unmapped)
}

/// Age class of every person in the roster.
pub fn classify_roster(
    roster: &CandidatePopulation,
    schema: &AttributeSchema,
    age_attribute: &str,
) -> Result<Vec<AgeClass>> {
    let index = schema.index_of(age_attribute)?;
    roster.entities().map(|e| classify_entity(e, schema, index)).collect()
}

/// Runs the evolutionary loop on the household entities of `dataset`.
pub fn generate_households(
    dataset: &RegionDataset,
    specs: &[ObjectiveSpec],
    config: &EvolutionConfig,
    rules: &RuleSet,
    sampling: SamplingMode,
) -> Result<EvolutionOutcome> {
    let data = dataset
        .households
        .as_ref()
        .ok_or_else(|| Error::Config("dataset has no household tables".into()))?;
    let problem = EntityProblem::new(data, specs, rules.clone(), sampling, &BTreeMap::new())?;
    evolve(&problem, config)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HouseholdSlot {
    pub id: usize,
    pub code: String,
    pub composition: CompositionSpec,
}

impl Serialize for CompositionSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Household slots from a household roster, reading the composition code
/// from `composition_attribute`.
pub fn household_slots(
    roster: &CandidatePopulation,
    schema: &AttributeSchema,
    composition_attribute: &str,
) -> Result<Vec<HouseholdSlot>> {
    let index = schema.index_of(composition_attribute)?;
    let attr = schema.at(index);
    let parsed = attr
        .categories()
        .iter()
        .map(|c| parse_composition(c))
        .collect::<Result<Vec<_>>>()?;
    Ok(roster
        .entities()
        .enumerate()
        .map(|(id, e)| HouseholdSlot {
            id,
            code: attr.category(e[index]).to_owned(),
            composition: parsed[e[index] as usize],
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FillStatus {
    Complete,
    Partial,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SyntheticHousehold {
    pub id: usize,
    pub code: String,
    pub composition: CompositionSpec,
    /// Person indices in the person roster.
    pub members: Vec<usize>,
    pub status: FillStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AllocationResult {
    /// In household roster order.
    pub households: Vec<SyntheticHousehold>,
    pub unallocated: Vec<usize>,
}

impl AllocationResult {
    pub fn complete_count(&self) -> usize {
        self.households
            .iter()
            .filter(|h| h.status == FillStatus::Complete)
            .count()
    }

    pub fn complete_rate(&self) -> f64 {
        if self.households.is_empty() {
            return 0.0;
        }
        self.complete_count() as f64 / self.households.len() as f64
    }

    /// Members still missing, per class, summed over partial households.
    pub fn shortage(&self, classes: &[AgeClass]) -> BTreeMap<AgeClass, u32> {
        let mut out = BTreeMap::new();
        for h in &self.households {
            for class in AgeClass::ALL {
                let have = h.members.iter().filter(|&&p| classes[p] == class).count() as u32;
                let missing = h.composition.required(class).saturating_sub(have);
                if missing > 0 {
                    *out.entry(class).or_insert(0) += missing;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationOrder {
    /// Households are filled in roster order.
    RosterOrder,
    /// Larger compositions first (stable among equal sizes).
    #[default]
    LargestFirst,
}

/// Greedy first-fit allocation. Each household takes the required number of
/// persons of each age class from the unused pool, earliest roster index
/// first; a household that cannot be filled keeps what it got and is marked
/// partial.
pub fn allocate(persons: &[AgeClass], households: &[HouseholdSlot], order: AllocationOrder) -> AllocationResult {
    let mut pools: [VecDeque<usize>; 3] = Default::default();
    for (i, class) in persons.iter().enumerate() {
        pools[class.slot()].push_back(i);
    }
    let mut visit: Vec<usize> = (0..households.len()).collect();
    if order == AllocationOrder::LargestFirst {
        visit.sort_by_key(|&h| std::cmp::Reverse(households[h].composition.total_size()));
    }
    let mut filled: Vec<Option<SyntheticHousehold>> = vec![None; households.len()];
    for h in visit {
        let slot = &households[h];
        let mut members = Vec::with_capacity(slot.composition.total_size() as usize);
        let mut complete = true;
        for class in AgeClass::ALL {
            for _ in 0..slot.composition.required(class) {
                match pools[class.slot()].pop_front() {
                    Some(p) => members.push(p),
                    None => complete = false,
                }
            }
        }
        filled[h] = Some(SyntheticHousehold {
            id: slot.id,
            code: slot.code.clone(),
            composition: slot.composition,
            members,
            status: if complete {
                FillStatus::Complete
            } else {
                FillStatus::Partial
            },
        });
    }
    let mut unallocated: Vec<usize> = pools.into_iter().flatten().collect();
    unallocated.sort_unstable();
    AllocationResult {
        households: filled
            .into_iter()
            .map(|h| h.expect("every household visited"))
            .collect(),
        unallocated,
    }
}
