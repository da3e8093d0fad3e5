//! Meetup assignment.
//!
//! Registered participants are split into simultaneous meetups under four
//! constraints, applied in this order of authority:
//!
//! 1. people who met last ceremony should be spread apart (minimized, never
//!    guaranteed — one meetup can't avoid repeats),
//! 2. every meetup seats 3 to 12,
//! 3. newcomers fill at most a quarter of any meetup,
//! 4. locations are drawn at random from the currency's site set.
//!
//! Admission is the fixed point of the newcomer cap: newbies beyond what the
//! seat quotas of the resulting partition can host are deferred to the next
//! ceremony. All randomness comes from a caller-supplied seed; identical
//! inputs and seed reproduce the assignment bit for bit.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::PublicKey;
use crate::geo::{Location, LocationSet};
use crate::rng;

pub const MIN_MEETUP_SIZE: usize = 3;
pub const MAX_MEETUP_SIZE: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum AssignError {
    #[error("{admissible} admissible participants; a meetup needs at least {MIN_MEETUP_SIZE}")]
    TooFewParticipants { admissible: usize },
    #[error("{needed} meetups but only {available} locations")]
    TooFewLocations { needed: usize, available: usize },
}

/// One registered participant as the assigner sees them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Registrant {
    pub key: PublicKey,
    pub reputable: bool,
    /// Meetup index attended last ceremony, from the redeemed reputation
    /// token. `None` for newcomers.
    pub last_meetup: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExclusionReason {
    /// Deferred: this ceremony's newcomer quota was already full.
    NewbieQuota,
    /// Too few admissible participants to seat even one meetup; the whole
    /// ceremony passes with nobody assigned.
    NoViableMeetup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignedMeetup {
    pub index: u32,
    pub location: Location,
    pub members: Vec<PublicKey>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub ceremony: u64,
    pub meetups: Vec<AssignedMeetup>,
    pub excluded: Vec<(PublicKey, ExclusionReason)>,
}

impl Assignment {
    pub fn meetup_of(&self, key: PublicKey) -> Option<u32> {
        self.meetups
            .iter()
            .find(|m| m.members.contains(&key))
            .map(|m| m.index)
    }

    pub fn assigned_count(&self) -> usize {
        self.meetups.iter().map(|m| m.members.len()).sum()
    }
}

/// Splits `n` participants into as few meetups as possible with sizes as
/// equal as possible. For any n ≥ 3 every size lands in `[3, 12]` and sizes
/// differ by at most one.
pub fn partition_sizes(n: usize) -> Vec<usize> {
    assert!(n >= MIN_MEETUP_SIZE, "cannot partition {n} participants");
    let k = n.div_ceil(MAX_MEETUP_SIZE);
    let base = n / k;
    let rem = n % k;
    let mut sizes = vec![base + 1; rem];
    sizes.extend(std::iter::repeat(base).take(k - rem));
    sizes
}

/// Largest newcomer admission compatible with the per-meetup quarter quota:
/// the fixed point of `x ← min(x, Σ ⌊size/4⌋ over partition(R + x))`,
/// starting from the aggregate one-third growth bound.
pub fn admissible_newbies(reputables: usize, newbie_demand: usize) -> usize {
    let mut x = newbie_demand.min(reputables / 3);
    loop {
        let n = reputables + x;
        if n < MIN_MEETUP_SIZE {
            return 0;
        }
        let cap: usize = partition_sizes(n).iter().map(|s| s / 4).sum();
        if x <= cap {
            return x;
        }
        x = cap;
    }
}

/// Assigns registrants to meetups and locations. Deterministic in
/// `(registrants, locations, seed)`; the ceremony index both salts the
/// randomness and tags the output.
pub fn assign(
    ceremony: u64,
    registrants: &[Registrant],
    locations: &LocationSet,
    seed: u64,
) -> Result<Assignment, AssignError> {
    let mut rng = rng::derive(seed, "assign", ceremony);

    let reputables: Vec<&Registrant> = registrants.iter().filter(|r| r.reputable).collect();
    let newbies: Vec<&Registrant> = registrants.iter().filter(|r| !r.reputable).collect();

    let admitted_newbies = admissible_newbies(reputables.len(), newbies.len());
    let total = reputables.len() + admitted_newbies;
    if total < MIN_MEETUP_SIZE {
        return Err(AssignError::TooFewParticipants { admissible: total });
    }
    let sizes = partition_sizes(total);
    if sizes.len() > locations.len() {
        return Err(AssignError::TooFewLocations {
            needed: sizes.len(),
            available: locations.len(),
        });
    }

    // Which newbies get in this time is a fair draw.
    let mut newbie_order: Vec<usize> = (0..newbies.len()).collect();
    rng::shuffle(&mut rng, &mut newbie_order);
    let (admitted, deferred) = newbie_order.split_at(admitted_newbies);

    // Seat admitted newbies round-robin under each meetup's quarter quota.
    let quotas: Vec<usize> = sizes.iter().map(|s| s / 4).collect();
    let mut members: Vec<Vec<PublicKey>> = vec![Vec::new(); sizes.len()];
    let mut newbie_counts = vec![0usize; sizes.len()];
    let mut slot = 0;
    for &idx in admitted {
        while newbie_counts[slot % sizes.len()] >= quotas[slot % sizes.len()] {
            slot += 1;
        }
        members[slot % sizes.len()].push(newbies[idx].key);
        newbie_counts[slot % sizes.len()] += 1;
        slot += 1;
    }

    // Seat reputables greedily: each goes to an open meetup holding the
    // fewest people they sat with last ceremony, ties broken uniformly.
    // `prev_counts[m]` maps last-ceremony meetup id → how many of its
    // members already sit in meetup m.
    let mut reputable_order: Vec<usize> = (0..reputables.len()).collect();
    rng::shuffle(&mut rng, &mut reputable_order);
    let mut prev_counts: Vec<HashMap<u32, usize>> = vec![HashMap::new(); sizes.len()];
    let mut candidates = Vec::with_capacity(sizes.len());
    for &idx in &reputable_order {
        let r = reputables[idx];
        let mut best = usize::MAX;
        candidates.clear();
        for m in 0..sizes.len() {
            if members[m].len() >= sizes[m] {
                continue;
            }
            let repeats = match r.last_meetup {
                Some(prev) => prev_counts[m].get(&prev).copied().unwrap_or(0),
                None => 0,
            };
            if repeats < best {
                best = repeats;
                candidates.clear();
            }
            if repeats == best {
                candidates.push(m);
            }
        }
        let m = candidates[rng::sample_indices(&mut rng, candidates.len(), 1)[0]];
        members[m].push(r.key);
        if let Some(prev) = r.last_meetup {
            *prev_counts[m].entry(prev).or_insert(0) += 1;
        }
    }
    debug_assert!(members.iter().zip(&sizes).all(|(m, &s)| m.len() == s));

    // Locations: a uniform draw without replacement.
    let site_picks = rng::sample_indices(&mut rng, locations.len(), sizes.len());
    let meetups = members
        .into_iter()
        .enumerate()
        .map(|(i, members)| AssignedMeetup {
            index: i as u32,
            location: locations.as_slice()[site_picks[i]],
            members,
        })
        .collect();

    Ok(Assignment {
        ceremony,
        meetups,
        excluded: deferred
            .iter()
            .map(|&idx| (newbies[idx].key, ExclusionReason::NewbieQuota))
            .collect(),
    })
}

/// Unordered pairs sharing a meetup in both assignments — the quantity the
/// seating greedily minimizes across consecutive ceremonies.
pub fn repeat_pair_count(current: &Assignment, previous: &Assignment) -> usize {
    let mut prev_of: HashMap<PublicKey, u32> = HashMap::new();
    for m in &previous.meetups {
        for &k in &m.members {
            prev_of.insert(k, m.index);
        }
    }
    let mut repeats = 0;
    for m in &current.meetups {
        let mut group: HashMap<u32, usize> = HashMap::new();
        for k in &m.members {
            if let Some(&p) = prev_of.get(k) {
                *group.entry(p).or_insert(0) += 1;
            }
        }
        repeats += group.values().map(|&c| c * (c - 1) / 2).sum::<usize>();
    }
    repeats
}

// ---------------------------------------------------------------------------
// Rule audit
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RuleViolation {
    SizeOutOfRange { meetup: u32, size: usize },
    NewbieQuotaExceeded { meetup: u32, newbies: usize, size: usize },
    LocationReused { location: u32 },
    LocationUnknown { location: u32 },
    ParticipantDuplicated { key: PublicKey },
    ParticipantUnregistered { key: PublicKey },
    ExcludedButSeated { key: PublicKey },
}

/// Structural check of an assignment against its inputs. An empty result
/// means every hard rule holds; the repeat-minimization objective is
/// statistical and measured separately via [`repeat_pair_count`].
pub fn audit(
    assignment: &Assignment,
    registrants: &[Registrant],
    locations: &LocationSet,
) -> Vec<RuleViolation> {
    let mut violations = Vec::new();
    let by_key: HashMap<PublicKey, &Registrant> =
        registrants.iter().map(|r| (r.key, r)).collect();

    let mut seen_locations = std::collections::HashSet::new();
    let mut seen_keys = std::collections::HashSet::new();
    for m in &assignment.meetups {
        let size = m.members.len();
        if !(MIN_MEETUP_SIZE..=MAX_MEETUP_SIZE).contains(&size) {
            violations.push(RuleViolation::SizeOutOfRange { meetup: m.index, size });
        }
        let newbies = m
            .members
            .iter()
            .filter(|k| by_key.get(k).is_some_and(|r| !r.reputable))
            .count();
        if newbies * 4 > size {
            violations.push(RuleViolation::NewbieQuotaExceeded { meetup: m.index, newbies, size });
        }
        if locations.get(m.location.id) != Some(&m.location) {
            violations.push(RuleViolation::LocationUnknown { location: m.location.id });
        }
        if !seen_locations.insert(m.location.id) {
            violations.push(RuleViolation::LocationReused { location: m.location.id });
        }
        for &k in &m.members {
            if !by_key.contains_key(&k) {
                violations.push(RuleViolation::ParticipantUnregistered { key: k });
            }
            if !seen_keys.insert(k) {
                violations.push(RuleViolation::ParticipantDuplicated { key: k });
            }
        }
    }
    for (k, _) in &assignment.excluded {
        if seen_keys.contains(k) {
            violations.push(RuleViolation::ExcludedButSeated { key: *k });
        }
    }
    violations
}
