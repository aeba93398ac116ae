#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use popsynth_core::census_data::ContingencyTable;
use popsynth_core::nsga2::EntityProblem;
use popsynth_core::{AttributeSchema, EntityDataset, Metric, ObjectiveSpec, RuleSet, SamplingMode};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/msoa")
}

pub fn small_schema() -> AttributeSchema {
    AttributeSchema::from_toml_str(
        r#"
        [[attribute]]
        name = "sex"
        categories = ["m", "f"]

        [[attribute]]
        name = "age"
        categories = ["0-15", "16-64", "65+"]
        groups = [
            { code = "ch", members = ["0-15"] },
            { code = "ad", members = ["16-64"] },
            { code = "el", members = ["65+"] },
        ]

        [[attribute]]
        name = "marital"
        categories = ["single", "married", "widowed"]
        "#,
    )
    .unwrap()
}

pub fn small_rules(schema: &AttributeSchema) -> RuleSet {
    RuleSet::from_toml_str(
        r#"
        [[rule]]
        name = "child-married"
        [[rule.when]]
        attribute = "age"
        categories = ["0-15"]
        [[rule.when]]
        attribute = "marital"
        categories = ["married", "widowed"]
        "#,
        schema,
    )
    .unwrap()
}

/// 200 persons over sex x age and age x marital tables.
pub fn small_dataset() -> EntityDataset {
    let schema = small_schema();
    let sex_age: [(&[&str], u64); 6] = [
        (&["m", "0-15"], 20),
        (&["m", "16-64"], 60),
        (&["m", "65+"], 18),
        (&["f", "0-15"], 22),
        (&["f", "16-64"], 55),
        (&["f", "65+"], 25),
    ];
    let age_marital: [(&[&str], u64); 7] = [
        (&["0-15", "single"], 42),
        (&["16-64", "single"], 50),
        (&["16-64", "married"], 60),
        (&["16-64", "widowed"], 5),
        (&["65+", "single"], 8),
        (&["65+", "married"], 20),
        (&["65+", "widowed"], 15),
    ];
    let t1 = ContingencyTable::from_cells("sex_age", &["sex", "age"], &schema, sex_age).unwrap();
    let t2 = ContingencyTable::from_cells("age_marital", &["age", "marital"], &schema, age_marital).unwrap();
    EntityDataset::new(schema, vec![t1, t2], 200).unwrap()
}

pub fn small_specs() -> Vec<ObjectiveSpec> {
    vec![
        ObjectiveSpec::marginal("sex", "sex_age", "sex", Metric::Trapezoid),
        ObjectiveSpec::marginal("age", "sex_age", "age", Metric::Trapezoid),
        ObjectiveSpec::marginal("marital", "age_marital", "marital", Metric::L1),
    ]
}

pub fn small_problem(mode: SamplingMode) -> EntityProblem {
    let data = small_dataset();
    let rules = small_rules(&data.schema);
    EntityProblem::new(&data, &small_specs(), rules, mode, &BTreeMap::new()).unwrap()
}
