use std::sync::Arc;

use super::crowding::crowding_distance;
use super::dominance::dominates_unchecked;
use crate::fitness::ObjectiveVector;
use crate::population_model::CandidatePopulation;

#[derive(Debug, Clone)]
pub struct ArchiveMember {
    /// Insertion sequence number, unique within one archive.
    pub id: u64,
    pub candidate: Arc<CandidatePopulation>,
    pub objectives: ObjectiveVector,
}

/// Mutually non-dominated candidates collected across generations.
///
/// When the bound is exceeded the most crowded member is dropped; the
/// best member of every objective is never dropped.
#[derive(Debug, Clone)]
pub struct ParetoArchive {
    members: Vec<ArchiveMember>,
    capacity: usize,
    next_id: u64,
}

impl ParetoArchive {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "archive capacity must be positive");
        ParetoArchive {
            members: Vec::new(),
            capacity,
            next_id: 0,
        }
    }

    /// Rebuilds an archive from saved members, keeping their ids.
    pub fn from_members(capacity: usize, members: Vec<ArchiveMember>) -> Self {
        let next_id = members.iter().map(|m| m.id + 1).max().unwrap_or(0);
        ParetoArchive {
            members,
            capacity,
            next_id,
        }
    }

    pub fn members(&self) -> &[ArchiveMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn objective_vectors(&self) -> Vec<ObjectiveVector> {
        self.members.iter().map(|m| m.objectives.clone()).collect()
    }

    /// Lowest value of objective `i` over the archive.
    pub fn best(&self, i: usize) -> Option<f64> {
        self.members.iter().map(|m| m.objectives[i]).min_by(f64::total_cmp)
    }

    /// Inserts unless an existing member dominates or equals the newcomer.
    /// Members the newcomer dominates are removed. Returns whether the
    /// newcomer was kept.
    pub fn insert(&mut self, candidate: Arc<CandidatePopulation>, objectives: ObjectiveVector) -> bool {
        if self
            .members
            .iter()
            .any(|m| m.objectives == objectives || dominates_unchecked(&m.objectives, &objectives))
        {
            return false;
        }
        self.members
            .retain(|m| !dominates_unchecked(&objectives, &m.objectives));
        self.members.push(ArchiveMember {
            id: self.next_id,
            candidate,
            objectives,
        });
        self.next_id += 1;
        while self.members.len() > self.capacity {
            self.drop_most_crowded();
        }
        self.members.last().map(|m| m.id) == Some(self.next_id - 1)
    }

    fn drop_most_crowded(&mut self) {
        let k = self.members[0].objectives.len();
        let mut protected = vec![false; self.members.len()];
        for i in 0..k {
            let best = (0..self.members.len())
                .min_by(|&a, &b| self.members[a].objectives[i].total_cmp(&self.members[b].objectives[i]))
                .expect("non-empty archive");
            protected[best] = true;
        }
        let vectors: Vec<&[f64]> = self.members.iter().map(|m| m.objectives.as_ref()).collect();
        let distance = crowding_distance(&vectors);
        // Smallest distance goes; among equals the newest goes.
        let victim = (0..self.members.len())
            .filter(|&i| !protected[i])
            .min_by(|&a, &b| distance[a].total_cmp(&distance[b]).then(b.cmp(&a)));
        if let Some(victim) = victim {
            self.members.remove(victim);
        } else {
            // every member is some objective's best; capacity < objectives
            self.members.pop();
        }
    }
}
