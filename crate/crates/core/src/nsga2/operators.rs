use rand::Rng;

use crate::population_model::{AttributeWeights, CandidatePopulation, RuleSet};

/// Exchanges the entity segment `[c1, c2)` between two rosters.
pub fn crossover_at(
    p1: &CandidatePopulation,
    p2: &CandidatePopulation,
    c1: usize,
    c2: usize,
) -> (CandidatePopulation, CandidatePopulation) {
    assert_eq!(p1.len(), p2.len(), "crossover parents differ in length");
    assert_eq!(p1.width(), p2.width(), "crossover parents differ in width");
    assert!(c1 <= c2 && c2 <= p1.len(), "invalid cut points ({c1}, {c2})");
    let w = p1.width();
    let (mut o1, mut o2) = (p1.clone(), p2.clone());
    let range = c1 * w..c2 * w;
    o1.genes_mut()[range.clone()].copy_from_slice(&p2.genes()[range.clone()]);
    o2.genes_mut()[range.clone()].copy_from_slice(&p1.genes()[range]);
    (o1, o2)
}

/// Two-point crossover over the roster axis with uniformly drawn cuts.
pub fn two_point_crossover<R: Rng + ?Sized>(
    p1: &CandidatePopulation,
    p2: &CandidatePopulation,
    rng: &mut R,
) -> (CandidatePopulation, CandidatePopulation) {
    let len = p1.len();
    let a = rng.gen_range(0..=len);
    let b = rng.gen_range(0..=len);
    crossover_at(p1, p2, a.min(b), a.max(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutationOutcome {
    Skipped,
    Applied,
    /// The change broke a validation rule and was undone.
    Reverted,
}

/// Exchanges `attribute` between entities `i` and `j`, undoing the
/// exchange if either entity then violates a rule. Returns whether the
/// exchange was kept.
pub fn swap_at(candidate: &mut CandidatePopulation, i: usize, j: usize, attribute: usize, rules: &RuleSet) -> bool {
    let (a, b) = (candidate.get(i, attribute), candidate.get(j, attribute));
    candidate.set(i, attribute, b);
    candidate.set(j, attribute, a);
    if rules.is_valid(candidate.entity(i)) && rules.is_valid(candidate.entity(j)) {
        true
    } else {
        candidate.set(i, attribute, a);
        candidate.set(j, attribute, b);
        false
    }
}

/// With `probability`, performs one swap event: two distinct entities and
/// one attribute chosen uniformly. Every attribute's category multiset is
/// unchanged whatever happens.
pub fn swap_mutation<R: Rng + ?Sized>(
    candidate: &mut CandidatePopulation,
    probability: f64,
    rng: &mut R,
    rules: &RuleSet,
) -> MutationOutcome {
    if !rng.gen_bool(probability) || candidate.len() < 2 {
        return MutationOutcome::Skipped;
    }
    let n = candidate.len();
    let i = rng.gen_range(0..n);
    let mut j = rng.gen_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    let attribute = rng.gen_range(0..candidate.width());
    if swap_at(candidate, i, j, attribute, rules) {
        MutationOutcome::Applied
    } else {
        MutationOutcome::Reverted
    }
}

/// With `probability`, redraws one attribute of one entity from `weights`,
/// reverting on a rule violation.
pub fn resample_mutation<R: Rng + ?Sized>(
    candidate: &mut CandidatePopulation,
    probability: f64,
    weights: &AttributeWeights,
    rng: &mut R,
    rules: &RuleSet,
) -> MutationOutcome {
    if !rng.gen_bool(probability) || candidate.is_empty() {
        return MutationOutcome::Skipped;
    }
    let i = rng.gen_range(0..candidate.len());
    let attribute = rng.gen_range(0..candidate.width());
    let old = candidate.get(i, attribute);
    candidate.set(i, attribute, weights.sample_attribute(attribute, rng));
    if rules.is_valid(candidate.entity(i)) {
        MutationOutcome::Applied
    } else {
        candidate.set(i, attribute, old);
        MutationOutcome::Reverted
    }
}
