//! Meetup validation: who minted their reward, and why.
//!
//! From the submitted bundles two nested attestation cores are computed as
//! greatest fixed points: the *core* (every member vouched for by another
//! core member) and the *reputable core* (the same, restricted to reputable
//! participants). The reputable core's size sets the evidence thresholds and
//! its vote count ν̂ is the official head count. A participant is paid iff
//!
//! * their vote equals ν̂,
//! * at least `|reputable core| − 2` distinct members attested them,
//! * they attested at least that many and at most ν̂ members themselves.
//!
//! With a tiny reputable core the thresholds degrade gracefully — a
//! two-member core demands zero attestations — which is the documented
//! trade-off for keeping the rules local and deterministic. A core of one
//! cannot exist: fixed-point membership needs a distinct supporter, so the
//! reputable core is empty or has at least two members, and an empty core
//! (no quorum) validates nobody.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::amount::Amount;
use crate::ceremony::{ReputationToken, TokenStore};
use crate::crypto::{CurrencyId, PublicKey};
use crate::event::{Event, EventKind, EventSink};
use crate::ledger::Ledger;
use crate::meetup::{Attestation, Claim, MeetupTranscript};
use crate::time::Timestamp;

#[derive(Debug, Error, PartialEq)]
pub enum ValidationError {
    #[error("participant {0} is not assigned to this meetup")]
    UnknownParticipant(PublicKey),
    #[error("participant {0} already submitted")]
    DuplicateSubmission(PublicKey),
}

/// Whether attestation signatures are checked cryptographically or taken on
/// faith. Simulations that fabricate their own attestations in-process may
/// trust provenance; anything ingested from outside must verify.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyPolicy {
    VerifySignatures,
    TrustProvenance,
}

/// What the intake filter did with one submission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SubmitStats {
    pub accepted: usize,
    /// Attestations dropped at intake: foreign meetup or ceremony, attester
    /// or claimant not on the roster, or self-attestation.
    pub dropped: usize,
    /// True when the bundle's own claim was malformed (wrong key, meetup or
    /// ceremony), in which case the submitter casts no vote.
    pub vote_discarded: bool,
}

#[derive(Debug, Clone)]
struct Submission {
    vote: Option<u32>,
    attestations: Vec<Attestation>,
}

/// The witnessing registry of one meetup: the assigned roster plus whatever
/// was submitted. Attestations are pre-filtered at intake; everything that
/// remains names two distinct roster members.
#[derive(Debug, Clone)]
pub struct MeetupRegistry {
    pub ceremony: u64,
    pub meetup: u32,
    members: Vec<(PublicKey, bool)>,
    submissions: BTreeMap<PublicKey, Submission>,
}

impl MeetupRegistry {
    pub fn new(ceremony: u64, meetup: u32, members: Vec<(PublicKey, bool)>) -> Self {
        MeetupRegistry { ceremony, meetup, members, submissions: BTreeMap::new() }
    }

    pub fn members(&self) -> &[(PublicKey, bool)] {
        &self.members
    }

    pub fn is_member(&self, key: PublicKey) -> bool {
        self.members.iter().any(|(k, _)| *k == key)
    }

    pub fn submission_count(&self) -> usize {
        self.submissions.len()
    }

    /// The intake predicate: an attestation counts only if it stays inside
    /// this meetup and ceremony, names two distinct roster members, and is
    /// not a self-attestation.
    pub fn admits(&self, a: &Attestation) -> bool {
        a.claim.ceremony == self.ceremony
            && a.claim.meetup == self.meetup
            && a.attester != a.claim.key
            && self.is_member(a.attester)
            && self.is_member(a.claim.key)
    }

    /// Registers one participant's claim and collected attestations,
    /// dropping at intake anything from outside this meetup and ceremony:
    /// foreign claims, non-member attesters or claimants, self-attestations.
    pub fn submit(
        &mut self,
        participant: PublicKey,
        claim: Claim,
        attestations: Vec<Attestation>,
    ) -> Result<SubmitStats, ValidationError> {
        if !self.is_member(participant) {
            return Err(ValidationError::UnknownParticipant(participant));
        }
        if self.submissions.contains_key(&participant) {
            return Err(ValidationError::DuplicateSubmission(participant));
        }
        let mut stats = SubmitStats::default();
        let vote = if claim.key == participant
            && claim.ceremony == self.ceremony
            && claim.meetup == self.meetup
        {
            Some(claim.vote)
        } else {
            stats.vote_discarded = true;
            None
        };
        let kept: Vec<Attestation> = attestations
            .into_iter()
            .filter(|a| {
                let ok = self.admits(a);
                if ok {
                    stats.accepted += 1;
                } else {
                    stats.dropped += 1;
                }
                ok
            })
            .collect();
        self.submissions.insert(participant, Submission { vote, attestations: kept });
        Ok(stats)
    }

    /// Rebuilds a registry from an exported transcript, returning it with
    /// the per-bundle intake stats.
    pub fn from_transcript(
        t: &MeetupTranscript,
    ) -> Result<(Self, Vec<SubmitStats>), ValidationError> {
        let members = t.members.iter().map(|m| (m.key, m.reputable)).collect();
        let mut registry = MeetupRegistry::new(t.ceremony, t.meetup, members);
        let mut stats = Vec::with_capacity(t.bundles.len());
        for bundle in &t.bundles {
            stats.push(registry.submit(
                bundle.participant,
                bundle.claim,
                bundle.attestations.clone(),
            )?);
        }
        Ok((registry, stats))
    }

    /// Runs the full rule cascade. Pure: can be called repeatedly, under
    /// either signature policy.
    pub fn validate(&self, policy: VerifyPolicy) -> ValidationOutcome {
        // Distinct (attester → claimant) edges surviving the signature policy.
        let mut edges: BTreeSet<(PublicKey, PublicKey)> = BTreeSet::new();
        for sub in self.submissions.values() {
            for att in &sub.attestations {
                if policy == VerifyPolicy::VerifySignatures && !att.verify() {
                    continue;
                }
                edges.insert((att.attester, att.claim.key));
            }
        }

        let everyone: Vec<PublicKey> = self.members.iter().map(|(k, _)| *k).collect();
        let reputable: Vec<PublicKey> =
            self.members.iter().filter(|(_, r)| *r).map(|(k, _)| *k).collect();
        let core = greatest_fixed_point(&everyone, &edges);
        let reputable_core = greatest_fixed_point(&reputable, &edges);
        debug_assert!(reputable_core.is_subset(&core));
        debug_assert!(reputable_core.len() != 1);

        let majority_vote = majority_vote(
            self.submissions
                .iter()
                .filter(|(k, _)| reputable_core.contains(*k))
                .filter_map(|(_, s)| s.vote),
        );
        let need = reputable_core.len().saturating_sub(2);

        let mut received: BTreeMap<PublicKey, BTreeSet<PublicKey>> = BTreeMap::new();
        let mut attested: BTreeMap<PublicKey, BTreeSet<PublicKey>> = BTreeMap::new();
        for (attester, claimant) in &edges {
            received.entry(*claimant).or_default().insert(*attester);
            attested.entry(*attester).or_default().insert(*claimant);
        }

        let verdicts: Vec<ParticipantVerdict> = self
            .members
            .iter()
            .map(|&(key, reputable)| {
                let submission = self.submissions.get(&key);
                let vote = submission.and_then(|s| s.vote);
                let received = received.get(&key).map_or(0, |s| s.len());
                let attested = attested.get(&key).map_or(0, |s| s.len());
                let mut failures = Vec::new();
                if submission.is_none() {
                    failures.push(RuleFailure::NoSubmission);
                }
                match majority_vote {
                    None => failures.push(RuleFailure::NoQuorum),
                    Some(expected) => {
                        if vote != Some(expected) {
                            failures.push(RuleFailure::VoteMismatch { vote, expected });
                        }
                        if attested > expected as usize {
                            failures.push(RuleFailure::AttestedTooMany {
                                attested,
                                max: expected as usize,
                            });
                        }
                    }
                }
                if received < need {
                    failures.push(RuleFailure::TooFewAttestations { received, need });
                }
                if attested < need {
                    failures.push(RuleFailure::AttestedTooFew { attested, need });
                }
                ParticipantVerdict {
                    key,
                    reputable,
                    submitted: submission.is_some(),
                    vote,
                    received,
                    attested,
                    in_core: core.contains(&key),
                    in_reputable_core: reputable_core.contains(&key),
                    valid: failures.is_empty(),
                    failures,
                }
            })
            .collect();

        ValidationOutcome {
            ceremony: self.ceremony,
            meetup: self.meetup,
            core: core.into_iter().collect(),
            reputable_core: reputable_core.into_iter().collect(),
            majority_vote,
            verdicts,
        }
    }
}

/// Largest subset of `members` in which everyone is attested by some other
/// member of the subset, computed by pruning unsupported members until
/// stable. Monotone in the edge set: removing attestations can only shrink
/// it.
fn greatest_fixed_point(
    members: &[PublicKey],
    edges: &BTreeSet<(PublicKey, PublicKey)>,
) -> BTreeSet<PublicKey> {
    let mut alive: BTreeSet<PublicKey> = members.iter().copied().collect();
    loop {
        let dead: Vec<PublicKey> = alive
            .iter()
            .filter(|&&p| !alive.iter().any(|&a| a != p && edges.contains(&(a, p))))
            .copied()
            .collect();
        if dead.is_empty() {
            return alive;
        }
        for p in dead {
            alive.remove(&p);
        }
    }
}

/// Strict-majority vote: the value cast by more than half the voters, if
/// any. Ties and empty ballots yield none.
fn majority_vote(votes: impl Iterator<Item = u32>) -> Option<u32> {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    let mut total = 0;
    for v in votes {
        *counts.entry(v).or_insert(0) += 1;
        total += 1;
    }
    counts.into_iter().find(|&(_, c)| 2 * c > total).map(|(v, _)| v)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum RuleFailure {
    /// Never registered a bundle — unreachable evidence, no vote.
    NoSubmission,
    /// No strict majority among the reputable core's votes; nobody is paid.
    NoQuorum,
    /// Vote differs from the official head count ν̂.
    VoteMismatch { vote: Option<u32>, expected: u32 },
    /// Fewer than `|reputable core| − 2` members attested this participant.
    TooFewAttestations { received: usize, need: usize },
    /// Attested fewer than `|reputable core| − 2` members.
    AttestedTooFew { attested: usize, need: usize },
    /// Attested more members than the official head count — the oversigner
    /// signature.
    AttestedTooMany { attested: usize, max: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParticipantVerdict {
    pub key: PublicKey,
    pub reputable: bool,
    pub submitted: bool,
    pub vote: Option<u32>,
    /// Distinct members who attested this participant.
    pub received: usize,
    /// Distinct members this participant attested.
    pub attested: usize,
    pub in_core: bool,
    pub in_reputable_core: bool,
    pub valid: bool,
    pub failures: Vec<RuleFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationOutcome {
    pub ceremony: u64,
    pub meetup: u32,
    /// Mutually-attested set over all members, sorted by key.
    pub core: Vec<PublicKey>,
    /// The same over reputable members only; always a subset of `core`.
    pub reputable_core: Vec<PublicKey>,
    /// ν̂ — the head count the reputable core agrees on.
    pub majority_vote: Option<u32>,
    pub verdicts: Vec<ParticipantVerdict>,
}

impl ValidationOutcome {
    pub fn valid_keys(&self) -> impl Iterator<Item = PublicKey> + '_ {
        self.verdicts.iter().filter(|v| v.valid).map(|v| v.key)
    }

    pub fn valid_count(&self) -> usize {
        self.verdicts.iter().filter(|v| v.valid).count()
    }
}

/// Pays out one validated meetup: mints the ceremony reward to every valid
/// participant and hands them a reputation token for the next registration.
/// Emits the validation event followed by one mint per reward.
#[allow(clippy::too_many_arguments)]
pub fn issue_rewards(
    outcome: &ValidationOutcome,
    currency: CurrencyId,
    reward: Amount,
    now: Timestamp,
    ledger: &mut Ledger,
    tokens: &mut TokenStore,
    sink: &mut dyn EventSink,
) {
    sink.record(Event {
        t: now,
        ceremony: outcome.ceremony,
        currency,
        kind: EventKind::Validate {
            meetup: outcome.meetup,
            valid: outcome.valid_count() as u32,
            invalid: (outcome.verdicts.len() - outcome.valid_count()) as u32,
        },
    });
    for key in outcome.valid_keys() {
        ledger.mint(key, reward, now, outcome.ceremony, sink);
        tokens.issue(ReputationToken {
            currency,
            ceremony: outcome.ceremony,
            meetup: outcome.meetup,
            holder: key,
        });
    }
}
