//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.
//!
//! Run with `cargo test --release -p popsynth-cli --test acceptance`.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use popsynth_core::census_data::AttributeSchema;
use popsynth_core::fitness::{l1_objective, rmse, trapezoid_area};
use popsynth_core::household_synthesis::{
    allocate, parse_composition, AgeClass, AllocationOrder, CompositionSpec, HouseholdSlot,
};
use popsynth_core::nsga2::{crowding_distance, dominates, fast_nondominated_sort, swap_mutation, EntityProblem};
use popsynth_core::pipeline::RunConfig;
use popsynth_core::population_model::generate_candidate;
use popsynth_core::reporting::{load_archive, load_persons};
use popsynth_core::rng::StreamSeed;
use popsynth_core::{CandidatePopulation, RuleSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/msoa")
}

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

struct Run {
    dir: tempfile::TempDir,
    wall: Duration,
}

fn full_run(workers: usize) -> Result<Run, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let started = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_popsynth"))
        .args(["run", "--config"])
        .arg(fixture_dir().join("config.toml"))
        .args(["--workers", &workers.to_string(), "--out-dir"])
        .arg(dir.path())
        .output()
        .map_err(|e| e.to_string())?;
    let wall = started.elapsed();
    if !out.status.success() {
        return Err(format!(
            "run with {workers} workers exited {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(Run { dir, wall })
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

/// Rows of a simple CSV (no quoting), header first.
fn rows(path: &Path) -> Result<Vec<Vec<String>>, String> {
    Ok(read(path)?
        .lines()
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect())
}

fn brute_force_fronts(points: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let mut remaining: Vec<usize> = (0..points.len()).collect();
    let mut fronts = Vec::new();
    while !remaining.is_empty() {
        let front: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| !remaining.iter().any(|&j| dominates(&points[j], &points[i]).unwrap()))
            .collect();
        remaining.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..200 {
        let n = rng.gen_range(1..=50);
        let k = rng.gen_range(2..=4);
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..k).map(|_| rng.gen_range(0..8) as f64).collect())
            .collect();
        check(
            fast_nondominated_sort(&points) == brute_force_fronts(&points),
            format!("instance {case} differs from the oracle"),
        )?;
    }
    let secs = started.elapsed().as_secs_f64();
    check(secs < 5.0, format!("took {secs:.2}s"))?;
    Ok(format!("200 instances match the pairwise oracle in {secs:.3}s"))
}

fn close(a: f64, b: f64, what: &str) -> Result<(), String> {
    check((a - b).abs() <= 1e-9, format!("{what}: got {a}, expected {b}"))
}

fn criterion_2() -> Outcome {
    let e = |r: popsynth_core::Result<f64>| r.map_err(|e| e.to_string());
    close(
        e(l1_objective(&[10.0, 20.0, 30.0], &[12.0, 18.0, 30.0]))?,
        4.0,
        "l1 (10,20,30)",
    )?;
    close(e(l1_objective(&[0.0, 0.0], &[5.0, 5.0]))?, 10.0, "l1 (0,0)")?;
    close(
        e(trapezoid_area(&[4.0, 2.0, 0.0], &[0.0, 2.0, 4.0]))?,
        4.0,
        "trapezoid (4,2,0)",
    )?;
    close(e(trapezoid_area(&[5.0], &[2.0]))?, 3.0, "trapezoid single")?;
    close(e(rmse(&[1.0, 2.0], &[1.0, 4.0]))?, 2f64.sqrt(), "rmse (1,2)")?;
    close(e(rmse(&[0.0, 0.0, 0.0], &[2.0, 2.0, 2.0]))?, 2.0, "rmse (0,0,0)")?;
    let d = crowding_distance(&[vec![1.0, 3.0], vec![2.0, 2.0], vec![3.0, 1.0]]);
    check(
        d[0].is_infinite() && d[2].is_infinite(),
        format!("crowding boundaries {d:?}"),
    )?;
    close(d[1], 2.0, "crowding interior")?;
    let parse = |c: &str| parse_composition(c).map_err(|e| format!("{c}: {e}"));
    check(parse("2A 3C")? == CompositionSpec::new(2, 3, 0), "2A 3C")?;
    check(parse("2A 3C")?.total_size() == 5, "2A 3C size")?;
    check(
        parse("1E")? == CompositionSpec::new(0, 0, 1) && parse("1E")?.total_size() == 1,
        "1E",
    )?;
    let err = parse_composition("2Q").map(|_| ()).map_err(|e| e.to_string());
    check(
        matches!(&err, Err(m) if m.contains("unknown class letter")),
        format!("2Q gave {err:?}"),
    )?;
    Ok("l1, trapezoid, rmse, crowding and composition examples reproduced".into())
}

fn fixture_problem() -> Result<EntityProblem, String> {
    let config = RunConfig::load(fixture_dir().join("config.toml")).map_err(|e| e.to_string())?;
    let dataset = config.load_dataset().map_err(|e| e.to_string())?;
    let rules =
        RuleSet::load(fixture_dir().join("person_rules.toml"), &dataset.persons.schema).map_err(|e| e.to_string())?;
    EntityProblem::new(
        &dataset.persons,
        &config.persons.objectives,
        rules,
        config.persons.sampling,
        &config.persons.weight_sources,
    )
    .map_err(|e| e.to_string())
}

const CLASSES: [AgeClass; 3] = [AgeClass::Adult, AgeClass::Child, AgeClass::Elder];

fn criterion_3() -> Outcome {
    let problem = fixture_problem()?;
    let mut candidate = generate_candidate(&problem.sampler, 500, &problem.rules, StreamSeed::new(3), 100)
        .map_err(|e| e.to_string())?;
    let widths: Vec<usize> = problem.sampler.weights().probabilities().iter().map(Vec::len).collect();
    let counts = |c: &CandidatePopulation| -> Vec<Vec<u64>> {
        widths
            .iter()
            .enumerate()
            .map(|(a, &w)| c.category_counts(a, w))
            .collect()
    };
    let before = counts(&candidate);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut deviations = 0;
    for _ in 0..1000 {
        swap_mutation(&mut candidate, 1.0, &mut rng, &problem.rules);
        if counts(&candidate) != before {
            deviations += 1;
        }
    }
    check(deviations == 0, format!("{deviations} mutations changed a marginal"))?;

    for case in 0..100 {
        let persons: Vec<AgeClass> = (0..rng.gen_range(0..200))
            .map(|_| CLASSES[rng.gen_range(0..3)])
            .collect();
        let slots: Vec<HouseholdSlot> = (0..rng.gen_range(1..60))
            .map(|id| {
                let spec = CompositionSpec::new(rng.gen_range(1..4), rng.gen_range(0..4), rng.gen_range(0..3));
                HouseholdSlot {
                    id,
                    code: spec.to_string(),
                    composition: spec,
                }
            })
            .collect();
        let result = allocate(&persons, &slots, AllocationOrder::LargestFirst);
        let mut seen = HashSet::new();
        let placed: usize = result.households.iter().map(|h| h.members.len()).sum();
        for m in result
            .households
            .iter()
            .flat_map(|h| &h.members)
            .chain(&result.unallocated)
        {
            check(seen.insert(*m), format!("pool {case}: person {m} used twice"))?;
        }
        check(
            placed + result.unallocated.len() == persons.len() && seen.len() == persons.len(),
            format!("pool {case}: partition broken"),
        )?;
    }
    Ok("1000 swaps with zero marginal deviations; 100 allocations partition their pools".into())
}

/// Summed archive-best normalised error per generation.
fn convergence_totals(dir: &Path) -> Result<(Vec<Vec<f64>>, Vec<String>), String> {
    let table = rows(&dir.join("persons_convergence.csv"))?;
    let mut names = Vec::new();
    let mut best: Vec<Vec<f64>> = Vec::new();
    for row in &table[1..] {
        let g: usize = row[0].parse().map_err(|_| "bad generation")?;
        if best.len() <= g {
            best.push(Vec::new());
        }
        if g == 0 {
            names.push(row[1].clone());
        }
        best[g].push(row[2].parse().map_err(|_| "bad value")?);
    }
    Ok((best, names))
}

fn criterion_4(run: &Run) -> Outcome {
    let (best, names) = convergence_totals(run.dir.path())?;
    check(best.len() == 101, format!("{} generations recorded", best.len()))?;
    for g in 1..best.len() {
        for (i, name) in names.iter().enumerate() {
            check(
                best[g][i] <= best[g - 1][i],
                format!("{name} rose at generation {g}: {} -> {}", best[g - 1][i], best[g][i]),
            )?;
        }
    }
    let first: f64 = best[0].iter().sum();
    let last: f64 = best[100].iter().sum();
    let ratio = last / first;
    let detail = format!("archive bests non-increasing; total {first:.4} -> {last:.4} (ratio {ratio:.3}, limit 0.20)");
    check(ratio <= 0.20, detail.clone())?;
    Ok(detail)
}

fn roster_csv(path: &Path, schema: &AttributeSchema) -> Result<CandidatePopulation, String> {
    let table = rows(path)?;
    let mut genes = Vec::new();
    for row in &table[1..] {
        for (field, attr) in row[1..].iter().zip(schema.attributes()) {
            genes.push(attr.category_id(field).map_err(|e| e.to_string())?);
        }
    }
    CandidatePopulation::from_genes(schema.len(), genes).map_err(|e| e.to_string())
}

fn criterion_5(run: &Run) -> Outcome {
    let dir = fixture_dir();
    let person_schema = AttributeSchema::load(dir.join("person_schema.toml")).map_err(|e| e.to_string())?;
    let household_schema = AttributeSchema::load(dir.join("household_schema.toml")).map_err(|e| e.to_string())?;
    let person_rules = RuleSet::load(dir.join("person_rules.toml"), &person_schema).map_err(|e| e.to_string())?;
    let household_rules =
        RuleSet::load(dir.join("household_rules.toml"), &household_schema).map_err(|e| e.to_string())?;
    let out = run.dir.path();

    let mut rosters = vec![
        (
            "persons.csv".to_owned(),
            load_persons(out.join("persons.csv"), &person_schema).map_err(|e| e.to_string())?,
            &person_rules,
        ),
        (
            "household_attributes.csv".to_owned(),
            roster_csv(&out.join("household_attributes.csv"), &household_schema)?,
            &household_rules,
        ),
    ];
    for (file, rules) in [
        ("persons_archive.json", &person_rules),
        ("households_archive.json", &household_rules),
    ] {
        let (archive, _) = load_archive(out.join(file)).map_err(|e| e.to_string())?;
        for m in archive.members() {
            rosters.push((format!("{file} member {}", m.id), m.candidate.as_ref().clone(), rules));
        }
    }
    let mut checked = 0usize;
    for (name, roster, rules) in &rosters {
        let bad = roster.entities().filter(|e| !rules.is_valid(e)).count();
        check(bad == 0, format!("{name}: {bad} violations"))?;
        checked += roster.len();
    }
    Ok(format!(
        "{} rosters, {checked} entities, zero violations",
        rosters.len()
    ))
}

fn criterion_6(a: &Run, b: &Run) -> Outcome {
    for name in ["persons.csv", "households.csv", "manifest.json"] {
        let x = std::fs::read(a.dir.path().join(name)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.dir.path().join(name)).map_err(|e| e.to_string())?;
        check(x == y, format!("{name} differs between 1 and 8 workers"))?;
    }
    Ok("persons, households and manifest byte-identical at 1 and 8 workers".into())
}

fn criterion_7(run: &Run) -> Outcome {
    let table = rows(&run.dir.path().join("timings.csv"))?;
    let mut slowest = 0.0f64;
    for row in table[1..].iter().filter(|r| r[0] == "persons" && r[1] != "0") {
        slowest = slowest.max(row[2].parse().map_err(|_| "bad timing")?);
    }
    let total = run.wall.as_secs_f64();
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let detail = format!(
        "slowest persons generation {slowest:.3}s (limit 7s); full run {total:.1}s (limit 720s); {cores} cores"
    );
    check(slowest <= 7.0 && total <= 720.0, detail.clone())?;
    Ok(detail)
}

fn criterion_8(run: &Run) -> Outcome {
    let out = run.dir.path();
    for name in [
        "persons.csv",
        "households.csv",
        "persons_convergence.csv",
        "persons_pareto.csv",
        "manifest.json",
    ] {
        check(out.join(name).is_file(), format!("{name} missing"))?;
    }
    let person_schema = AttributeSchema::load(fixture_dir().join("person_schema.toml")).map_err(|e| e.to_string())?;
    let age = person_schema.attribute("age").map_err(|e| e.to_string())?;
    let grouping = age.grouping().ok_or("age has no grouping")?;
    let persons = rows(&out.join("persons.csv"))?;
    let age_col = persons[0].iter().position(|c| c == "age").ok_or("no age column")?;
    let class_of: Vec<char> = persons[1..]
        .iter()
        .map(|r| {
            let id = age.category_id(&r[age_col]).unwrap();
            match grouping.codes()[grouping.group_of(id).unwrap()].as_str() {
                "ch" => 'C',
                "el" => 'E',
                _ => 'A',
            }
        })
        .collect();

    let households = rows(&out.join("households.csv"))?;
    let mut complete = 0usize;
    for h in &households[1..] {
        let spec = parse_composition(&h[2]).map_err(|e| e.to_string())?;
        let members: Vec<usize> = h[3]
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().unwrap())
            .collect();
        let count = |c: char| members.iter().filter(|&&m| class_of[m] == c).count() as u32;
        if count('A') == spec.required(AgeClass::Adult)
            && count('C') == spec.required(AgeClass::Child)
            && count('E') == spec.required(AgeClass::Elder)
        {
            complete += 1;
        }
    }
    let rate = complete as f64 / (households.len() - 1) as f64;
    check(rate >= 0.9, format!("composition-complete rate {rate:.3}"))?;

    let pareto = rows(&out.join("persons_pareto.csv"))?;
    let selected = pareto[1..]
        .iter()
        .filter(|r| r.last().map(String::as_str) == Some("true"))
        .count();
    check(selected == 1, format!("{selected} selected Pareto members"))?;

    let replay = tempfile::tempdir().map_err(|e| e.to_string())?;
    let status = Command::new(env!("CARGO_BIN_EXE_popsynth"))
        .args(["run", "--manifest"])
        .arg(out.join("manifest.json"))
        .arg("--data-dir")
        .arg(fixture_dir())
        .arg("--out-dir")
        .arg(replay.path())
        .output()
        .map_err(|e| e.to_string())?;
    check(
        status.status.success(),
        format!("replay failed: {}", String::from_utf8_lossy(&status.stderr)),
    )?;
    for name in ["persons.csv", "households.csv", "manifest.json"] {
        let x = std::fs::read(out.join(name)).map_err(|e| e.to_string())?;
        let y = std::fs::read(replay.path().join(name)).map_err(|e| e.to_string())?;
        check(x == y, format!("replay from manifest changed {name}"))?;
    }
    Ok(format!(
        "all files present; {complete}/{} households complete ({:.1}%); one selected member; manifest replay identical",
        households.len() - 1,
        100.0 * rate
    ))
}

fn main() -> ExitCode {
    let runs = full_run(1).and_then(|a| full_run(8).map(|b| (a, b)));
    let needs_runs = |f: &dyn Fn(&Run, &Run) -> Outcome| match &runs {
        Ok((a, b)) => f(a, b),
        Err(e) => Err(e.clone()),
    };
    let results: Vec<(&str, Outcome)> = vec![
        ("1 sort matches brute-force oracle", criterion_1()),
        ("2 hand-oracle kernels", criterion_2()),
        ("3 conservation", criterion_3()),
        ("4 elitist monotonicity and descent", needs_runs(&|a, _| criterion_4(a))),
        ("5 rule compliance", needs_runs(&|a, _| criterion_5(a))),
        ("6 determinism across worker counts", needs_runs(&criterion_6)),
        ("7 runtime envelope", needs_runs(&|a, _| criterion_7(a))),
        ("8 two-stage pipeline", needs_runs(&|a, _| criterion_8(a))),
    ];
    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
