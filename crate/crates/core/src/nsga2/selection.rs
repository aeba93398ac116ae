use std::cmp::Ordering;
use std::sync::Arc;

use rand::Rng;

use super::crowding::crowding_distance;
use super::sort::fast_nondominated_sort;
use super::RankedCandidate;
use crate::fitness::ObjectiveVector;
use crate::population_model::CandidatePopulation;

/// Assigns front rank and crowding distance to every member, keeping the
/// input order.
pub fn rank_population(members: Vec<(Arc<CandidatePopulation>, ObjectiveVector)>) -> Vec<RankedCandidate> {
    let vectors: Vec<&[f64]> = members.iter().map(|(_, o)| o.as_ref()).collect();
    let fronts = fast_nondominated_sort(&vectors);
    let mut rank = vec![0usize; members.len()];
    let mut crowding = vec![0.0; members.len()];
    for (r, front) in fronts.iter().enumerate() {
        let points: Vec<&[f64]> = front.iter().map(|&i| vectors[i]).collect();
        for (&i, d) in front.iter().zip(crowding_distance(&points)) {
            rank[i] = r + 1;
            crowding[i] = d;
        }
    }
    members
        .into_iter()
        .zip(rank.into_iter().zip(crowding))
        .map(|((candidate, objectives), (rank, crowding))| RankedCandidate {
            candidate,
            objectives,
            rank,
            crowding,
        })
        .collect()
}

/// `Less` when `a` is preferred: lower rank, then larger crowding distance.
fn crowded_comparison(a: &RankedCandidate, b: &RankedCandidate) -> Ordering {
    a.rank.cmp(&b.rank).then_with(|| b.crowding.total_cmp(&a.crowding))
}

/// Draws two distinct members uniformly and returns the index of the winner
/// under the crowded comparison; full ties are settled by a coin flip.
pub fn binary_tournament<R: Rng + ?Sized>(population: &[RankedCandidate], rng: &mut R) -> usize {
    assert!(!population.is_empty(), "tournament on an empty population");
    let n = population.len();
    if n == 1 {
        return 0;
    }
    let a = rng.gen_range(0..n);
    let mut b = rng.gen_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    match crowded_comparison(&population[a], &population[b]) {
        Ordering::Less => a,
        Ordering::Greater => b,
        Ordering::Equal => {
            if rng.gen_bool(0.5) {
                a
            } else {
                b
            }
        }
    }
}

/// Indices of the `target` survivors of a ranked combined population:
/// whole fronts while they fit, then the split front by descending crowding
/// distance (stable in input order).
pub fn environmental_selection(combined: &[RankedCandidate], target: usize) -> Vec<usize> {
    assert!(combined.len() >= target, "not enough candidates to select from");
    let mut order: Vec<usize> = (0..combined.len()).collect();
    order.sort_by(|&a, &b| crowded_comparison(&combined[a], &combined[b]));
    // Fronts are admitted whole unless they straddle the cut, so sorting by
    // (rank, -crowding) and truncating is equivalent.
    order.truncate(target);
    order
}
