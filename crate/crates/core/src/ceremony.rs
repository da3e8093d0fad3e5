//! Ceremony lifecycle: registration, phase transitions, witnessing intake,
//! and single-use reputation tokens.
//!
//! Every ceremony lives on a fixed calendar — one per `meetup_interval_days`,
//! counted from the currency's bootstrap day (the virtual ceremony 0). All
//! meetups of one ceremony happen at local solar noon of the ceremony day,
//! so the global phase boundaries are set by the easternmost and westernmost
//! sites:
//!
//! * registration closes 24 h before the earliest local noon,
//! * witnessing ends 24 h after the latest local noon,
//! * registration for ceremony `i` opens when witnessing for `i − 1` ends.
//!
//! Participants submit their evidence against their *own* meetup's clock:
//! the deadline is 24 h after local noon at their assigned site. Advancing
//! past a boundary is idempotent and timestamped with the boundary itself,
//! so the emitted event stream is independent of how often the clock is
//! polled.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::{assign, AssignError, Assignment, ExclusionReason, Registrant};
use crate::crypto::{CurrencyId, PublicKey};
use crate::event::{Event, EventKind, EventSink};
use crate::geo::{solar_noon, LocationSet};
use crate::ledger::Ledger;
use crate::meetup::{Attestation, Claim};
use crate::registry::CurrencyParams;
use crate::rng;
use crate::time::{ceremony_date, Timestamp};
use crate::validation::{
    issue_rewards, MeetupRegistry, SubmitStats, ValidationError, ValidationOutcome,
    VerifyPolicy,
};

// ---------------------------------------------------------------------------
// Reputation tokens
// ---------------------------------------------------------------------------

/// Proof of validated attendance, bound to one currency, ceremony and
/// meetup. Bearer-style and single-use: redeemed at the next registration,
/// and worthless after that.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReputationToken {
    pub currency: CurrencyId,
    pub ceremony: u64,
    pub meetup: u32,
    pub holder: PublicKey,
}

/// Issued-token book. One token per (currency, ceremony, holder); redeeming
/// consumes it.
#[derive(Debug, Default)]
pub struct TokenStore {
    live: BTreeMap<(CurrencyId, u64, PublicKey), u32>,
    redeemed: BTreeMap<(CurrencyId, u64, PublicKey), u32>,
}

impl TokenStore {
    pub fn issue(&mut self, token: ReputationToken) {
        let key = (token.currency, token.ceremony, token.holder);
        debug_assert!(
            !self.live.contains_key(&key) && !self.redeemed.contains_key(&key),
            "token issued twice"
        );
        self.live.insert(key, token.meetup);
    }

    /// Consumes the holder's token for `ceremony`, returning the meetup it
    /// attests. `None` if no live token exists (unknown or already spent).
    pub fn redeem(
        &mut self,
        currency: CurrencyId,
        ceremony: u64,
        holder: PublicKey,
    ) -> Option<u32> {
        let key = (currency, ceremony, holder);
        let meetup = self.live.remove(&key)?;
        self.redeemed.insert(key, meetup);
        Some(meetup)
    }

    pub fn has_live(&self, currency: CurrencyId, ceremony: u64, holder: PublicKey) -> bool {
        self.live.contains_key(&(currency, ceremony, holder))
    }

    pub fn live_count(&self, currency: CurrencyId, ceremony: u64) -> usize {
        self.live.keys().filter(|(c, i, _)| *c == currency && *i == ceremony).count()
    }
}

// ---------------------------------------------------------------------------
// Schedule
// ---------------------------------------------------------------------------

#[derive(Debug, Error, PartialEq)]
pub enum CeremonyError {
    #[error("registration opens at {opens}")]
    NotYetOpen { opens: Timestamp },
    #[error("registration closed at {closed}")]
    RegistrationClosed { closed: Timestamp },
    #[error("{0} is already registered")]
    AlreadyRegistered(PublicKey),
    #[error("reputation proof is for ceremony {presented}; only ceremony {required} counts")]
    StaleReputation { presented: u64, required: u64 },
    #[error("ceremony is not in its witnessing phase")]
    NotWitnessing,
    #[error("{0} is not assigned to any meetup")]
    NotAssigned(PublicKey),
    #[error("submission at {at} is past the local deadline {deadline}")]
    PastDeadline { at: Timestamp, deadline: Timestamp },
    #[error(transparent)]
    Assignment(#[from] AssignError),
    #[error(transparent)]
    Submission(#[from] ValidationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Registering,
    Witnessing,
    Validated,
}

/// The global clock boundaries of one ceremony over a given site set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CeremonySchedule {
    pub index: u64,
    pub date: NaiveDate,
    /// Witnessing end of the previous ceremony.
    pub open: Timestamp,
    /// 24 h before the earliest local noon; registration closes, seats are
    /// assigned.
    pub close: Timestamp,
    /// 24 h after the latest local noon; meetups are validated, rewards
    /// minted.
    pub witnessing_end: Timestamp,
}

fn noon_span(date: NaiveDate, locations: &LocationSet) -> (Timestamp, Timestamp) {
    let noons = locations.as_slice().iter().map(|l| solar_noon(date, l.lon));
    let min = noons.clone().min().expect("location sets are never empty");
    let max = noons.max().expect("location sets are never empty");
    (min, max)
}

impl CeremonySchedule {
    /// Boundaries for ceremony `index ≥ 1`. Ceremony 0 is the bootstrap
    /// event itself and has no schedule.
    pub fn compute(
        index: u64,
        genesis: NaiveDate,
        interval_days: u32,
        locations: &LocationSet,
    ) -> CeremonySchedule {
        assert!(index >= 1, "ceremony 0 is the bootstrap event");
        let date = ceremony_date(genesis, index, interval_days);
        let prev_date = ceremony_date(genesis, index - 1, interval_days);
        let (min_noon, _) = noon_span(date, locations);
        let (_, prev_max_noon) = noon_span(prev_date, locations);
        let (_, max_noon) = noon_span(date, locations);
        CeremonySchedule {
            index,
            date,
            open: prev_max_noon.add_hours(24),
            close: min_noon.add_hours(-24),
            witnessing_end: max_noon.add_hours(24),
        }
    }
}

// ---------------------------------------------------------------------------
// State machine
// ---------------------------------------------------------------------------

/// How a registration was classified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegistrationStatus {
    /// Redeemed a live token from the previous ceremony.
    Reputable { last_meetup: u32 },
    Newbie,
    /// Presented a proof that didn't check out — unknown, already spent, or
    /// bound to someone else. Admitted as a newcomer anyway.
    InvalidProof,
}

/// Everything a ceremony needs from its surroundings to advance: monetary
/// parameters, the site set, and the mutable books it settles into.
pub struct CeremonyCtx<'a> {
    pub params: &'a CurrencyParams,
    pub locations: &'a LocationSet,
    pub ledger: &'a mut Ledger,
    pub tokens: &'a mut TokenStore,
    pub events: &'a mut dyn EventSink,
    pub master_seed: u64,
    pub policy: VerifyPolicy,
}

/// One ceremony of one currency, from registration through validation.
#[derive(Debug)]
pub struct CeremonyState {
    pub currency: CurrencyId,
    pub schedule: CeremonySchedule,
    phase: Phase,
    registrants: Vec<Registrant>,
    registered: BTreeSet<PublicKey>,
    assignment: Option<Assignment>,
    registries: Vec<MeetupRegistry>,
    outcomes: Vec<ValidationOutcome>,
}

/// Folds a currency id into the master seed so currencies sharing one
/// simulation draw independent randomness.
pub fn currency_seed(master_seed: u64, currency: CurrencyId) -> u64 {
    let salt = u64::from_be_bytes(currency.as_bytes()[..8].try_into().expect("8 bytes"));
    rng::derive(master_seed, "currency-lane", salt).next_u64()
}

impl CeremonyState {
    pub fn new(
        currency: CurrencyId,
        index: u64,
        genesis: NaiveDate,
        interval_days: u32,
        locations: &LocationSet,
    ) -> CeremonyState {
        CeremonyState {
            currency,
            schedule: CeremonySchedule::compute(index, genesis, interval_days, locations),
            phase: Phase::Registering,
            registrants: Vec::new(),
            registered: BTreeSet::new(),
            assignment: None,
            registries: Vec::new(),
            outcomes: Vec::new(),
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn registrant_count(&self) -> usize {
        self.registrants.len()
    }

    pub fn assignment(&self) -> Option<&Assignment> {
        self.assignment.as_ref()
    }

    pub fn registries(&self) -> &[MeetupRegistry] {
        &self.registries
    }

    pub fn outcomes(&self) -> &[ValidationOutcome] {
        &self.outcomes
    }

    /// Signs a participant up, classifying them by the proof they present.
    /// A missing proof makes a newcomer; a live previous-ceremony token
    /// makes a reputable; a dead or foreign proof is recorded as invalid and
    /// the participant queues as a newcomer. Proofs from older ceremonies
    /// are rejected outright — they expired and can never count again.
    pub fn register(
        &mut self,
        key: PublicKey,
        proof: Option<ReputationToken>,
        now: Timestamp,
        tokens: &mut TokenStore,
        sink: &mut dyn EventSink,
    ) -> Result<RegistrationStatus, CeremonyError> {
        if now < self.schedule.open {
            return Err(CeremonyError::NotYetOpen { opens: self.schedule.open });
        }
        if now >= self.schedule.close {
            return Err(CeremonyError::RegistrationClosed { closed: self.schedule.close });
        }
        debug_assert_eq!(self.phase, Phase::Registering);
        if !self.registered.insert(key) {
            return Err(CeremonyError::AlreadyRegistered(key));
        }
        let required = self.schedule.index - 1;
        let status = match proof {
            None => RegistrationStatus::Newbie,
            Some(token) => {
                if token.ceremony < required {
                    self.registered.remove(&key);
                    return Err(CeremonyError::StaleReputation {
                        presented: token.ceremony,
                        required,
                    });
                }
                match tokens.redeem(self.currency, required, key) {
                    Some(last_meetup) => RegistrationStatus::Reputable { last_meetup },
                    None => RegistrationStatus::InvalidProof,
                }
            }
        };
        let (reputable, last_meetup) = match status {
            RegistrationStatus::Reputable { last_meetup } => (true, Some(last_meetup)),
            _ => (false, None),
        };
        self.registrants.push(Registrant { key, reputable, last_meetup });
        sink.record(Event {
            t: now,
            ceremony: self.schedule.index,
            currency: self.currency,
            kind: EventKind::Register { key, reputable },
        });
        Ok(status)
    }

    /// Fires every phase boundary that `now` has reached, in order, and
    /// returns the phase afterwards. Idempotent: boundaries fire once, and
    /// their events are stamped with the boundary time, not `now`.
    pub fn advance(
        &mut self,
        now: Timestamp,
        ctx: &mut CeremonyCtx,
    ) -> Result<Phase, CeremonyError> {
        if self.phase == Phase::Registering && now >= self.schedule.close {
            self.close_registration(ctx)?;
        }
        if self.phase == Phase::Witnessing && now >= self.schedule.witnessing_end {
            self.finalize(ctx);
        }
        Ok(self.phase)
    }

    fn close_registration(&mut self, ctx: &mut CeremonyCtx) -> Result<(), CeremonyError> {
        let seed = currency_seed(ctx.master_seed, self.currency);
        let assignment =
            match assign(self.schedule.index, &self.registrants, ctx.locations, seed) {
                Ok(a) => a,
                // Nobody can meet this time; the ceremony still completes.
                Err(AssignError::TooFewParticipants { .. }) => Assignment {
                    ceremony: self.schedule.index,
                    meetups: Vec::new(),
                    excluded: self
                        .registrants
                        .iter()
                        .map(|r| (r.key, ExclusionReason::NoViableMeetup))
                        .collect(),
                },
                Err(e) => return Err(e.into()),
            };
        ctx.events.record(Event {
            t: self.schedule.close,
            ceremony: self.schedule.index,
            currency: self.currency,
            kind: EventKind::Assign {
                meetups: assignment.meetups.len() as u32,
                assigned: assignment.assigned_count() as u32,
                excluded: assignment.excluded.len() as u32,
            },
        });
        let reputable: BTreeSet<PublicKey> =
            self.registrants.iter().filter(|r| r.reputable).map(|r| r.key).collect();
        self.registries = assignment
            .meetups
            .iter()
            .map(|m| {
                MeetupRegistry::new(
                    self.schedule.index,
                    m.index,
                    m.members.iter().map(|&k| (k, reputable.contains(&k))).collect(),
                )
            })
            .collect();
        self.assignment = Some(assignment);
        self.phase = Phase::Witnessing;
        Ok(())
    }

    fn finalize(&mut self, ctx: &mut CeremonyCtx) {
        let t = self.schedule.witnessing_end;
        for registry in &self.registries {
            let outcome = registry.validate(ctx.policy);
            issue_rewards(
                &outcome,
                self.currency,
                ctx.params.reward,
                t,
                ctx.ledger,
                ctx.tokens,
                ctx.events,
            );
            self.outcomes.push(outcome);
        }
        self.phase = Phase::Validated;
    }

    /// Local solar noon at a meetup's assigned site — when it is scheduled
    /// to start.
    pub fn scheduled_noon(&self, meetup: u32) -> Option<Timestamp> {
        let a = self.assignment.as_ref()?;
        let m = a.meetups.iter().find(|m| m.index == meetup)?;
        Some(solar_noon(self.schedule.date, m.location.lon))
    }

    /// A participant's personal submission deadline: 24 h past local noon at
    /// their assigned site. `None` while unassigned.
    pub fn submission_deadline(&self, participant: PublicKey) -> Option<Timestamp> {
        let meetup = self.assignment.as_ref()?.meetup_of(participant)?;
        Some(self.scheduled_noon(meetup)?.add_hours(24))
    }

    /// Takes in one participant's evidence during witnessing, enforcing
    /// their local deadline, and emits the surviving claim and attestation
    /// events.
    pub fn submit(
        &mut self,
        participant: PublicKey,
        claim: Claim,
        attestations: Vec<Attestation>,
        now: Timestamp,
        sink: &mut dyn EventSink,
    ) -> Result<SubmitStats, CeremonyError> {
        if self.phase != Phase::Witnessing {
            return Err(CeremonyError::NotWitnessing);
        }
        let meetup = self
            .assignment
            .as_ref()
            .and_then(|a| a.meetup_of(participant))
            .ok_or(CeremonyError::NotAssigned(participant))?;
        let deadline = self.submission_deadline(participant).expect("assigned above");
        if now > deadline {
            return Err(CeremonyError::PastDeadline { at: now, deadline });
        }
        let registry = &mut self.registries[meetup as usize];
        for a in attestations.iter().filter(|a| registry.admits(a)) {
            sink.record(Event {
                t: now,
                ceremony: self.schedule.index,
                currency: self.currency,
                kind: EventKind::Attest {
                    attester: a.attester,
                    claimant: a.claim.key,
                    meetup,
                },
            });
        }
        let stats = registry.submit(participant, claim, attestations)?;
        if !stats.vote_discarded {
            sink.record(Event {
                t: now,
                ceremony: self.schedule.index,
                currency: self.currency,
                kind: EventKind::Claim { key: participant, meetup, vote: claim.vote },
            });
        }
        Ok(stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amount::Amount;
    use crate::crypto::{currency_id, KeyPair};
    use crate::event::MemorySink;
    use crate::geo::Location;
    use crate::registry::Registry;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    static PARAMS: CurrencyParams = CurrencyParams {
        reward: Amount::from_whole(1),
        demurrage_rate_per_month: 0.07,
        fee_fraction_of_reward: 0.0,
        meetup_interval_days: 41,
    };

    struct World {
        currency: CurrencyId,
        keys: Vec<KeyPair>,
        locations: LocationSet,
        ledger: Ledger,
        tokens: TokenStore,
        events: MemorySink,
    }

    /// Five founders, one site at Greenwich, genesis 2026-01-01.
    fn world() -> World {
        let keys: Vec<KeyPair> = (0..5u8).map(|i| KeyPair::from_seed(&[i + 1; 32])).collect();
        let locations =
            LocationSet::new(vec![Location::new(0, 51.48, 0.0).unwrap()], 1.0).unwrap();
        let mut registry = Registry::new();
        let mut tokens = TokenStore::default();
        let currency = registry
            .bootstrap_currency(
                keys.iter().map(|k| k.public()).collect(),
                locations.clone(),
                d("2026-01-01"),
                PARAMS,
                &mut tokens,
            )
            .unwrap();
        let ledger = Ledger::new(currency, 0.07).unwrap();
        World { currency, keys, locations, ledger, tokens, events: MemorySink::default() }
    }

    impl World {
        fn ceremony(&self, index: u64) -> CeremonyState {
            CeremonyState::new(self.currency, index, d("2026-01-01"), 41, &self.locations)
        }

        fn ctx(&mut self) -> CeremonyCtx<'_> {
            CeremonyCtx {
                params: &PARAMS,
                locations: &self.locations,
                ledger: &mut self.ledger,
                tokens: &mut self.tokens,
                events: &mut self.events,
                master_seed: 7,
                policy: VerifyPolicy::VerifySignatures,
            }
        }

        fn token(&self, index: u64, who: &KeyPair) -> ReputationToken {
            ReputationToken {
                currency: self.currency,
                ceremony: index,
                meetup: 0,
                holder: who.public(),
            }
        }
    }

    #[test]
    fn schedule_hinges_on_extreme_longitudes() {
        // Sites 16 solar hours apart: noon at +120° is 8 h before UTC noon,
        // at -120° it is 8 h after.
        let spread = LocationSet::new(
            vec![
                Location::new(0, 10.0, 120.0).unwrap(),
                Location::new(1, 10.0, -120.0).unwrap(),
            ],
            1.0,
        )
        .unwrap();
        let s = CeremonySchedule::compute(1, d("2026-01-01"), 41, &spread);
        assert_eq!(s.date, d("2026-02-11"));
        let noon = Timestamp::utc_noon(d("2026-02-11"));
        assert_eq!(s.close, noon.add_hours(-8).add_hours(-24));
        assert_eq!(s.witnessing_end, noon.add_hours(8).add_hours(24));
        assert_eq!(s.open, Timestamp::utc_noon(d("2026-01-01")).add_hours(8 + 24));
        // Even at the minimum interval the windows can't collide.
        let tight = CeremonySchedule::compute(1, d("2026-01-01"), 4, &spread);
        assert!(tight.open < tight.close);
    }

    #[test]
    fn registration_window_is_enforced() {
        let mut w = world();
        let mut c = w.ceremony(1);
        let key = w.keys[0].public();

        let before = c.schedule.open.add_ms(-1);
        assert_eq!(
            c.register(key, None, before, &mut w.tokens, &mut w.events),
            Err(CeremonyError::NotYetOpen { opens: c.schedule.open })
        );
        let after = c.schedule.close;
        assert_eq!(
            c.register(key, None, after, &mut w.tokens, &mut w.events),
            Err(CeremonyError::RegistrationClosed { closed: c.schedule.close })
        );

        let ok = c.schedule.open;
        assert_eq!(
            c.register(key, None, ok, &mut w.tokens, &mut w.events),
            Ok(RegistrationStatus::Newbie)
        );
        assert_eq!(
            c.register(key, None, ok.add_hours(1), &mut w.tokens, &mut w.events),
            Err(CeremonyError::AlreadyRegistered(key))
        );
        assert_eq!(c.registrant_count(), 1);
    }

    #[test]
    fn proof_classification() {
        let mut w = world();
        let mut c = w.ceremony(1);
        let now = c.schedule.open.add_hours(1);

        // A founder redeems their bootstrap token.
        let founder = &w.keys[0];
        let proof = w.token(0, founder);
        let status = c
            .register(founder.public(), Some(proof), now, &mut w.tokens, &mut w.events)
            .unwrap();
        assert_eq!(status, RegistrationStatus::Reputable { last_meetup: 0 });
        assert!(!w.tokens.has_live(w.currency, 0, founder.public()));

        // A stranger with a fabricated proof queues as a newcomer.
        let stranger = KeyPair::from_seed(&[77; 32]);
        let fake = ReputationToken {
            currency: w.currency,
            ceremony: 0,
            meetup: 3,
            holder: stranger.public(),
        };
        let status = c
            .register(stranger.public(), Some(fake), now, &mut w.tokens, &mut w.events)
            .unwrap();
        assert_eq!(status, RegistrationStatus::InvalidProof);

        // A founder whose token was already consumed: invalid, not an error.
        let reused = w.token(0, founder);
        let other = KeyPair::from_seed(&[78; 32]);
        let status = c
            .register(other.public(), Some(reused), now, &mut w.tokens, &mut w.events)
            .unwrap();
        assert_eq!(status, RegistrationStatus::InvalidProof);

        // An expired proof from two ceremonies back is refused outright.
        let mut c3 = w.ceremony(3);
        let stale = w.token(0, &w.keys[1]);
        assert_eq!(
            c3.register(
                w.keys[1].public(),
                Some(stale),
                c3.schedule.open,
                &mut w.tokens,
                &mut w.events
            ),
            Err(CeremonyError::StaleReputation { presented: 0, required: 2 })
        );
        // …and the key may immediately re-register as a newcomer.
        assert_eq!(
            c3.register(w.keys[1].public(), None, c3.schedule.open, &mut w.tokens, &mut w.events),
            Ok(RegistrationStatus::Newbie)
        );
    }

    #[test]
    fn full_lifecycle_mints_rewards_and_tokens() {
        let mut w = world();
        let mut c = w.ceremony(1);
        let now = c.schedule.open.add_hours(2);
        for kp in &w.keys.clone() {
            let proof = w.token(0, kp);
            let status = c
                .register(kp.public(), Some(proof), now, &mut w.tokens, &mut w.events)
                .unwrap();
            assert_eq!(status, RegistrationStatus::Reputable { last_meetup: 0 });
        }

        let close = c.schedule.close;
        assert_eq!(c.advance(close, &mut w.ctx()).unwrap(), Phase::Witnessing);
        let assignment = c.assignment().unwrap();
        assert_eq!(assignment.meetups.len(), 1);
        assert_eq!(assignment.meetups[0].members.len(), 5);
        assert!(assignment.excluded.is_empty());

        // Everyone shows up at local noon, claims five heads, collects
        // signatures from the other four, and submits an hour later.
        let noon = c.scheduled_noon(0).unwrap();
        let keys = w.keys.clone();
        for kp in &keys {
            let claim = Claim {
                key: kp.public(),
                ceremony: 1,
                meetup: 0,
                vote: 5,
                broadcast_at: noon,
            };
            let atts: Vec<Attestation> = keys
                .iter()
                .filter(|o| o.public() != kp.public())
                .map(|o| Attestation::sign(claim, o))
                .collect();
            let stats = c
                .submit(kp.public(), claim, atts, noon.add_hours(1), &mut w.events)
                .unwrap();
            assert_eq!(stats.accepted, 4);
            assert_eq!(stats.dropped, 0);
        }

        let end = c.schedule.witnessing_end;
        assert_eq!(c.advance(end, &mut w.ctx()).unwrap(), Phase::Validated);
        assert_eq!(c.outcomes().len(), 1);
        assert_eq!(c.outcomes()[0].valid_count(), 5);

        for kp in &keys {
            assert_eq!(w.ledger.principal(kp.public()), Amount::from_whole(1));
            assert!(w.tokens.has_live(w.currency, 1, kp.public()));
        }

        // 5 register + 1 assign + 20 attest + 5 claim + 1 validate + 5 mint
        assert_eq!(w.events.events.len(), 37);
        let minted: u32 = w
            .events
            .events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::Mint { .. }))
            .count() as u32;
        assert_eq!(minted, 5);
        // Boundary events carry the boundary clock, not the polling clock.
        let validate = w
            .events
            .events
            .iter()
            .find(|e| matches!(e.kind, EventKind::Validate { .. }))
            .unwrap();
        assert_eq!(validate.t, end);
    }

    #[test]
    fn advance_is_idempotent_and_catches_up() {
        let mut w = world();
        let mut c = w.ceremony(1);
        let now = c.schedule.open;
        for kp in &w.keys.clone() {
            let proof = w.token(0, kp);
            c.register(kp.public(), Some(proof), now, &mut w.tokens, &mut w.events).unwrap();
        }

        // Early polls change nothing.
        assert_eq!(c.advance(now, &mut w.ctx()).unwrap(), Phase::Registering);
        // One late poll fires both boundaries…
        let late = c.schedule.witnessing_end.add_hours(5);
        assert_eq!(c.advance(late, &mut w.ctx()).unwrap(), Phase::Validated);
        let total = w.ledger.principal_sum();
        // …and repeating it mints nothing further.
        assert_eq!(c.advance(late, &mut w.ctx()).unwrap(), Phase::Validated);
        assert_eq!(w.ledger.principal_sum(), total);
        assert_eq!(c.outcomes().len(), 1);
    }

    #[test]
    fn submissions_respect_the_local_deadline() {
        let mut w = world();
        let mut c = w.ceremony(1);
        let now = c.schedule.open;
        let keys = w.keys.clone();
        for kp in &keys {
            let proof = w.token(0, kp);
            c.register(kp.public(), Some(proof), now, &mut w.tokens, &mut w.events).unwrap();
        }

        // Submitting while registration is still open is refused.
        let noon = Timestamp::utc_noon(c.schedule.date);
        let claim =
            Claim { key: keys[0].public(), ceremony: 1, meetup: 0, vote: 5, broadcast_at: noon };
        assert_eq!(
            c.submit(keys[0].public(), claim, vec![], now, &mut w.events),
            Err(CeremonyError::NotWitnessing)
        );

        c.advance(c.schedule.close, &mut w.ctx()).unwrap();
        let deadline = c.submission_deadline(keys[0].public()).unwrap();
        assert_eq!(deadline, c.scheduled_noon(0).unwrap().add_hours(24));

        // On the deadline: in. A millisecond past: out.
        c.submit(keys[0].public(), claim, vec![], deadline, &mut w.events).unwrap();
        let claim1 = Claim { key: keys[1].public(), ..claim };
        assert_eq!(
            c.submit(keys[1].public(), claim1, vec![], deadline.add_ms(1), &mut w.events),
            Err(CeremonyError::PastDeadline { at: deadline.add_ms(1), deadline })
        );

        // Unassigned strangers are turned away.
        let stranger = KeyPair::from_seed(&[90; 32]);
        let sclaim = Claim { key: stranger.public(), ..claim };
        assert_eq!(
            c.submit(stranger.public(), sclaim, vec![], deadline, &mut w.events),
            Err(CeremonyError::NotAssigned(stranger.public()))
        );
    }

    #[test]
    fn empty_ceremony_completes_without_meetups() {
        let mut w = world();
        let mut c = w.ceremony(1);
        // Two registrants can't form a meetup.
        let now = c.schedule.open;
        for kp in &w.keys.clone()[..2] {
            let proof = w.token(0, kp);
            c.register(kp.public(), Some(proof), now, &mut w.tokens, &mut w.events).unwrap();
        }
        let end = c.schedule.witnessing_end;
        assert_eq!(c.advance(end, &mut w.ctx()).unwrap(), Phase::Validated);
        assert!(c.assignment().unwrap().meetups.is_empty());
        assert_eq!(c.assignment().unwrap().excluded.len(), 2);
        assert_eq!(w.ledger.principal_sum(), Amount::ZERO);
    }

    #[test]
    fn currency_seed_separates_currencies() {
        let a = currency_id(&(0..3u8).map(|i| KeyPair::from_seed(&[i + 1; 32]).public()).collect::<Vec<_>>())
            .unwrap();
        let b = currency_id(&(0..3u8).map(|i| KeyPair::from_seed(&[i + 50; 32]).public()).collect::<Vec<_>>())
            .unwrap();
        assert_eq!(currency_seed(9, a), currency_seed(9, a));
        assert_ne!(currency_seed(9, a), currency_seed(9, b));
        assert_ne!(currency_seed(9, a), currency_seed(10, a));
    }
}
