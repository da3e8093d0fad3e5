//! Individual-agent scenario engine. Every participant is played through
//! the real protocol stack — registration, assignment, claims, attestation
//! bundles, validation, minting, demurrage, spending — with ground truth
//! about who was physically where kept on the side. The attack tables in
//! the report are the difference between what the protocol paid and what
//! the ground truth says it should have.
//!
//! Behavior semantics, briefly: honest agents attend, vote the head count
//! they saw and attest everyone present. No-shows are honest but flaky.
//! Oversigners attend and run `ghosts` persistent fake identities: the
//! ghosts register every ceremony, and whenever one is seated with its
//! owner, the owner votes it into the head count, countersigns its claim
//! with every key they hold, and pads their own bundle the same way. Ring
//! members never attend; they claim the full roster showed up and
//! countersign whichever ring colleagues share their meetup. Flooders attend
//! honestly but spray fresh throwaway registrations into every ceremony.
//! Each adversary acts alone — there is no cross-behavior collusion.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::amount::Amount;
use crate::assignment::{repeat_pair_count, Assignment};
use crate::ceremony::{CeremonyCtx, CeremonyState, RegistrationStatus, ReputationToken, TokenStore};
use crate::crypto::{KeyPair, PublicKey};
use crate::event::{CountingSink, EventSink, TeeSink};
use crate::geo::solar_noon;
use crate::ledger::{equilibrium_supply, Ledger};
use crate::meetup::{Attestation, Claim};
use crate::registry::Registry;
use crate::rng;
use crate::validation::VerifyPolicy;

use super::{
    AdversaryRow, AttackRow, BehaviorKind, BehaviorSpec, CeremonyRow, CryptoMode,
    EquilibriumReport, Mode, PopulationPoint, ReputationSeed, ScenarioConfig, ScenarioReport,
    SimError, SupplyPoint,
};

struct Actor {
    kp: KeyPair,
    kind: Kind,
}

enum Kind {
    Honest,
    NoShow { probability: f64 },
    Oversigner { ghosts: Vec<KeyPair> },
    Ring,
    Flooder { fakes: u32 },
}

impl Kind {
    fn behavior(&self) -> BehaviorKind {
        match self {
            Kind::Honest => BehaviorKind::Honest,
            Kind::NoShow { .. } => BehaviorKind::NoShow,
            Kind::Oversigner { .. } => BehaviorKind::Oversigner,
            Kind::Ring => BehaviorKind::VideoconfRing,
            Kind::Flooder { .. } => BehaviorKind::Flooder,
        }
    }

    /// Whether this agent's votes and attestations can be taken at face
    /// value. Flakiness and registration spam don't falsify testimony;
    /// ghost-counting and remote collusion do.
    fn truthful(&self) -> bool {
        matches!(self, Kind::Honest | Kind::NoShow { .. } | Kind::Flooder { .. })
    }
}

fn attest(fast: bool, claim: Claim, signer: &KeyPair) -> Attestation {
    if fast {
        Attestation::stub(claim, signer.public())
    } else {
        Attestation::sign(claim, signer)
    }
}

/// Signs one identity up, presenting its previous-ceremony token when the
/// book holds a live one, and tracks who counts as reputable this round.
#[allow(clippy::too_many_arguments)]
fn register_one(
    ceremony: &mut CeremonyState,
    tokens: &mut TokenStore,
    reputable_now: &mut BTreeSet<PublicKey>,
    sink: &mut dyn EventSink,
    currency: crate::crypto::CurrencyId,
    at: crate::time::Timestamp,
    key: PublicKey,
) -> Result<(), SimError> {
    let previous = ceremony.schedule.index - 1;
    let proof = tokens.has_live(currency, previous, key).then_some(ReputationToken {
        currency,
        ceremony: previous,
        meetup: 0,
        holder: key,
    });
    let status = ceremony.register(key, proof, at, tokens, sink)?;
    if matches!(status, RegistrationStatus::Reputable { .. }) {
        reputable_now.insert(key);
    }
    Ok(())
}

pub(super) fn run(
    config: &ScenarioConfig,
    seed: u64,
    caller_sink: &mut dyn EventSink,
) -> Result<ScenarioReport, SimError> {
    let pop = config.population.as_ref().expect("validated agents config");
    let params = config.currency.params();
    let interval = params.meetup_interval_days;
    let genesis = config.currency.genesis_date;
    let locations = config.currency.locations.build()?;
    let fast = config.crypto == CryptoMode::Fast;
    let policy =
        if fast { VerifyPolicy::TrustProvenance } else { VerifyPolicy::VerifySignatures };
    let fee = params.transfer_fee();
    let reward = params.reward;

    let mut counting = CountingSink::default();
    let mut tee = TeeSink(&mut counting, caller_sink);

    // Roster. Adversarial blocks fill from the end so the founders — the
    // first agents — stay honest unless the counts force overlap.
    let n = pop.agents as usize;
    let mut key_rng = rng::derive(seed, "agent-keys", 0);
    let mut actors: Vec<Actor> = (0..n)
        .map(|_| Actor { kp: KeyPair::generate(&mut key_rng), kind: Kind::Honest })
        .collect();
    let mut ghost_rng = rng::derive(seed, "ghost-keys", 0);
    let mut cursor = n;
    for spec in &pop.behaviors {
        cursor -= spec.count() as usize;
        for actor in &mut actors[cursor..cursor + spec.count() as usize] {
            actor.kind = match *spec {
                BehaviorSpec::NoShow { probability, .. } => Kind::NoShow { probability },
                BehaviorSpec::Oversigner { ghosts, .. } => Kind::Oversigner {
                    ghosts: (0..ghosts).map(|_| KeyPair::generate(&mut ghost_rng)).collect(),
                },
                BehaviorSpec::VideoconfRing { .. } => Kind::Ring,
                BehaviorSpec::Flooder { fakes, .. } => Kind::Flooder { fakes },
            };
        }
    }
    let index_of: BTreeMap<PublicKey, usize> =
        actors.iter().enumerate().map(|(i, a)| (a.kp.public(), i)).collect();
    let mut ghost_owner: BTreeMap<PublicKey, usize> = BTreeMap::new();
    for (i, actor) in actors.iter().enumerate() {
        if let Kind::Oversigner { ghosts } = &actor.kind {
            for g in ghosts {
                ghost_owner.insert(g.public(), i);
            }
        }
    }

    let founders: Vec<PublicKey> =
        actors[..config.currency.founders as usize].iter().map(|a| a.kp.public()).collect();
    let mut tokens = TokenStore::default();
    let mut registry = Registry::new();
    let currency =
        registry.bootstrap_currency(founders, locations.clone(), genesis, params, &mut tokens)?;
    if pop.reputation == ReputationSeed::Established {
        // Backdate a validated ceremony 0 for everyone, spread over
        // synthetic meetups so assignment sees a varied history.
        for (i, actor) in actors.iter().enumerate().skip(config.currency.founders as usize) {
            tokens.issue(ReputationToken {
                currency,
                ceremony: 0,
                meetup: (i / 12) as u32,
                holder: actor.kp.public(),
            });
        }
    }
    let mut ledger = Ledger::new(currency, params.demurrage_rate_per_month)?;

    let genesis_noon = solar_noon(genesis, 0.0);
    let mut rewards_raw = vec![0u128; n];
    let mut attack_order: Vec<BehaviorKind> = Vec::new();
    let mut attack_rows: BTreeMap<BehaviorKind, AttackRow> = BTreeMap::new();
    for spec in &pop.behaviors {
        let kind = spec.kind();
        let row = attack_rows.entry(kind).or_insert_with(|| {
            attack_order.push(kind);
            AttackRow {
                behavior: kind,
                agents: 0,
                attempted: 0,
                succeeded: 0,
                excess: Amount::ZERO,
                honest_collateral: 0,
            }
        });
        row.agents += spec.count();
    }
    let mut premise_held = true;
    let mut prev_assignment: Option<Assignment> = None;
    let mut ceremony_rows: Vec<CeremonyRow> = Vec::new();
    let mut supply_series: Vec<SupplyPoint> = Vec::new();
    let mut population_series: Vec<PopulationPoint> = Vec::new();

    for c in 1..=config.ceremonies {
        let mut ceremony = CeremonyState::new(currency, c, genesis, interval, &locations);
        let open = ceremony.schedule.open;
        let close = ceremony.schedule.close;
        let end = ceremony.schedule.witnessing_end;

        // Registration, agents first, then each oversigner's ghosts, then
        // the flooders' throwaways — all in roster order.
        let mut reputable_now: BTreeSet<PublicKey> = BTreeSet::new();
        for actor in &actors {
            register_one(&mut ceremony, &mut tokens, &mut reputable_now, &mut tee, currency, open, actor.kp.public())?;
        }
        for actor in &actors {
            let Kind::Oversigner { ghosts } = &actor.kind else { continue };
            for g in ghosts {
                register_one(&mut ceremony, &mut tokens, &mut reputable_now, &mut tee, currency, open, g.public())?;
                attack_rows.get_mut(&BehaviorKind::Oversigner).expect("row").attempted += 1;
            }
        }
        let mut fakes_now: BTreeMap<PublicKey, usize> = BTreeMap::new();
        let mut fake_rng = rng::derive(seed, "fake-keys", c);
        for (i, actor) in actors.iter().enumerate() {
            let Kind::Flooder { fakes } = actor.kind else { continue };
            for _ in 0..fakes {
                let key = KeyPair::generate(&mut fake_rng).public();
                register_one(&mut ceremony, &mut tokens, &mut reputable_now, &mut tee, currency, open, key)?;
                fakes_now.insert(key, i);
                attack_rows.get_mut(&BehaviorKind::Flooder).expect("row").attempted += 1;
            }
        }
        let registered = ceremony.registrant_count() as u32;

        {
            let mut ctx = CeremonyCtx {
                params: &params,
                locations: &locations,
                ledger: &mut ledger,
                tokens: &mut tokens,
                events: &mut tee,
                master_seed: seed,
                policy,
            };
            ceremony.advance(close, &mut ctx)?;
        }
        let assignment = ceremony.assignment().expect("past registration").clone();
        let mut seat_of: BTreeMap<PublicKey, u32> = BTreeMap::new();
        for m in &assignment.meetups {
            for &k in &m.members {
                seat_of.insert(k, m.index);
            }
        }
        let assigned_reputable =
            seat_of.keys().filter(|k| reputable_now.contains(k)).count() as u32;
        let newcomers_admitted = assignment.assigned_count() as u32 - assigned_reputable;
        let repeat_pairs =
            prev_assignment.as_ref().map_or(0, |p| repeat_pair_count(&assignment, p) as u32);

        // Ground-truth attendance. The no-show coin is tossed in roster
        // order whether or not the agent got a seat, so one agent's
        // exclusion never reshuffles everyone else's luck.
        let mut att_rng = rng::derive(seed, "attendance", c);
        let mut present: BTreeSet<PublicKey> = BTreeSet::new();
        for actor in &actors {
            let key = actor.kp.public();
            let skip = match actor.kind {
                Kind::NoShow { probability } => att_rng.random::<f64>() < probability,
                Kind::Ring => true,
                _ => false,
            };
            if seat_of.contains_key(&key) {
                match actor.kind {
                    Kind::NoShow { .. } if skip => {
                        attack_rows.get_mut(&BehaviorKind::NoShow).expect("row").attempted += 1;
                    }
                    Kind::Ring => {
                        attack_rows
                            .get_mut(&BehaviorKind::VideoconfRing)
                            .expect("row")
                            .attempted += 1;
                    }
                    _ => {}
                }
                if !skip {
                    present.insert(key);
                }
            }
        }

        // Meetups gather at their site's local noon; bundles land two hours
        // later, well inside every personal deadline.
        for m in &assignment.meetups {
            let noon = ceremony.scheduled_noon(m.index).expect("assigned meetup");
            let submit_at = noon.add_hours(2);
            let present_here: Vec<usize> = m
                .members
                .iter()
                .filter(|k| present.contains(k))
                .map(|k| index_of[k])
                .collect();
            let physical = present_here.len() as u32;
            let mut ring_here: Vec<usize> = Vec::new();
            let mut ghosts_here: Vec<(PublicKey, usize)> = Vec::new();
            for k in &m.members {
                if let Some(&i) = index_of.get(k) {
                    if matches!(actors[i].kind, Kind::Ring) {
                        ring_here.push(i);
                    }
                } else if let Some(&owner) = ghost_owner.get(k) {
                    let owner_key = actors[owner].kp.public();
                    if present.contains(&owner_key) && seat_of.get(&owner_key) == Some(&m.index) {
                        ghosts_here.push((*k, owner));
                    }
                }
            }
            let mut ghost_count: BTreeMap<usize, u32> = BTreeMap::new();
            for &(_, owner) in &ghosts_here {
                *ghost_count.entry(owner).or_insert(0) += 1;
            }

            for &member in &m.members {
                if let Some(&i) = index_of.get(&member) {
                    if present.contains(&member) {
                        let vote = physical + ghost_count.get(&i).copied().unwrap_or(0);
                        let claim =
                            Claim { key: member, ceremony: c, meetup: m.index, vote, broadcast_at: noon };
                        let mut atts: Vec<Attestation> = present_here
                            .iter()
                            .filter(|&&j| j != i)
                            .map(|&j| attest(fast, claim, &actors[j].kp))
                            .collect();
                        if let Kind::Oversigner { ghosts } = &actors[i].kind {
                            for &(gk, owner) in &ghosts_here {
                                if owner == i {
                                    let gkp = ghosts.iter().find(|g| g.public() == gk).expect("own ghost");
                                    atts.push(attest(fast, claim, gkp));
                                }
                            }
                        }
                        ceremony.submit(member, claim, atts, submit_at, &mut tee)?;
                    } else if matches!(actors[i].kind, Kind::Ring) {
                        let claim = Claim {
                            key: member,
                            ceremony: c,
                            meetup: m.index,
                            vote: m.members.len() as u32,
                            broadcast_at: noon,
                        };
                        let atts: Vec<Attestation> = ring_here
                            .iter()
                            .filter(|&&j| j != i)
                            .map(|&j| attest(fast, claim, &actors[j].kp))
                            .collect();
                        ceremony.submit(member, claim, atts, submit_at, &mut tee)?;
                    }
                } else if let Some(&(_, owner)) =
                    ghosts_here.iter().find(|(gk, _)| *gk == member)
                {
                    let vote = physical + ghost_count[&owner];
                    let claim =
                        Claim { key: member, ceremony: c, meetup: m.index, vote, broadcast_at: noon };
                    let Kind::Oversigner { ghosts } = &actors[owner].kind else { unreachable!() };
                    let mut atts = vec![attest(fast, claim, &actors[owner].kp)];
                    for &(other, o2) in &ghosts_here {
                        if o2 == owner && other != member {
                            let gkp = ghosts.iter().find(|g| g.public() == other).expect("own ghost");
                            atts.push(attest(fast, claim, gkp));
                        }
                    }
                    ceremony.submit(member, claim, atts, submit_at, &mut tee)?;
                }
                // Fakes and ghosts without their owner stay silent.
            }
        }

        {
            let mut ctx = CeremonyCtx {
                params: &params,
                locations: &locations,
                ledger: &mut ledger,
                tokens: &mut tokens,
                events: &mut tee,
                master_seed: seed,
                policy,
            };
            ceremony.advance(end, &mut ctx)?;
        }

        // Score the outcomes against ground truth.
        let classify = |key: PublicKey| -> BehaviorKind {
            if let Some(&i) = index_of.get(&key) {
                actors[i].kind.behavior()
            } else if ghost_owner.contains_key(&key) {
                BehaviorKind::Oversigner
            } else {
                debug_assert!(fakes_now.contains_key(&key));
                BehaviorKind::Flooder
            }
        };
        let owner_index = |key: PublicKey| -> Option<usize> {
            index_of
                .get(&key)
                .or_else(|| ghost_owner.get(&key))
                .or_else(|| fakes_now.get(&key))
                .copied()
        };
        let mut valid = 0u32;
        let mut invalid = 0u32;
        let mut minted = Amount::ZERO;
        for outcome in ceremony.outcomes() {
            let core = &outcome.reputable_core;
            let truthful_core = core
                .iter()
                .filter(|k| {
                    present.contains(*k)
                        && index_of.get(*k).is_some_and(|&i| actors[i].kind.truthful())
                })
                .count();
            if !core.is_empty() && 2 * truthful_core <= core.len() {
                premise_held = false;
            }
            let kinds_here: BTreeSet<BehaviorKind> =
                outcome.verdicts.iter().map(|v| classify(v.key)).collect();
            for v in &outcome.verdicts {
                let kind = classify(v.key);
                let was_present = present.contains(&v.key);
                if v.valid {
                    valid += 1;
                    minted += reward;
                    if let Some(i) = owner_index(v.key) {
                        rewards_raw[i] += reward.raw();
                    }
                    if !was_present {
                        debug_assert!(kind != BehaviorKind::Honest, "honest absentee minted");
                        if let Some(row) = attack_rows.get_mut(&kind) {
                            row.succeeded += 1;
                            row.excess += reward;
                        }
                    }
                } else {
                    invalid += 1;
                    let truthful_loss = was_present
                        && index_of.get(&v.key).is_some_and(|&i| actors[i].kind.truthful());
                    if truthful_loss {
                        // Blame every falsifying behavior with an identity in
                        // this meetup; flakiness and spam don't void verdicts.
                        for k in &kinds_here {
                            if matches!(k, BehaviorKind::Oversigner | BehaviorKind::VideoconfRing) {
                                if let Some(row) = attack_rows.get_mut(k) {
                                    row.honest_collateral += 1;
                                }
                            }
                        }
                    }
                }
            }
        }

        let t_days = end.days_since(genesis_noon);
        supply_series.push(SupplyPoint {
            ceremony: c,
            t_days,
            total_supply: ledger.total_supply(end),
        });
        population_series.push(PopulationPoint { ceremony: c, t_days, participants: registered as u64 });
        ceremony_rows.push(CeremonyRow {
            index: c,
            registered,
            reputable: reputable_now.len() as u32,
            newcomers_admitted,
            deferred: assignment.excluded.len() as u32,
            meetups: assignment.meetups.len() as u32,
            attended: present.len() as u32,
            valid,
            invalid,
            repeat_pairs,
            minted,
        });
        prev_assignment = Some(assignment);

        // Spending: everyone turns over `spend_velocity` of their balance to
        // a uniformly random counterparty, against a snapshot so the order
        // of transfers can't compound. Velocity one moves whole balances.
        let velocity = config.economy.spend_velocity;
        if velocity > 0.0 && n > 1 {
            let t = end.add_hours(1);
            let mut spend_rng = rng::derive(seed, "spending", c);
            let balances: Vec<Amount> =
                actors.iter().map(|a| ledger.balance(a.kp.public(), t)).collect();
            for (i, actor) in actors.iter().enumerate() {
                let available = balances[i];
                if available <= fee {
                    continue;
                }
                let want = if velocity >= 1.0 {
                    available - fee
                } else {
                    Amount::from_raw((available.raw() as f64 * velocity).round() as u128)
                };
                let amount = want.min(available - fee);
                if amount.is_zero() {
                    continue;
                }
                let mut j = spend_rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                ledger.transfer(actor.kp.public(), actors[j].kp.public(), amount, fee, t, c, &mut tee)?;
            }
        }
    }

    drop(tee);
    let conservation_ok = ledger.principal_sum().raw() as i128 == counting.totals.supply_delta_raw();

    let honest: Vec<usize> = actors
        .iter()
        .enumerate()
        .filter(|(_, a)| matches!(a.kind, Kind::Honest))
        .map(|(i, _)| i)
        .collect();
    let honest_mean = if honest.is_empty() {
        0.0
    } else {
        let total: u128 = honest.iter().map(|&i| rewards_raw[i]).sum();
        Amount::from_raw(total).as_tokens() / honest.len() as f64
    };
    let attack_ledger: Vec<AdversaryRow> = actors
        .iter()
        .enumerate()
        .filter(|(_, a)| !matches!(a.kind, Kind::Honest))
        .map(|(i, a)| AdversaryRow {
            key: a.kp.public(),
            behavior: a.kind.behavior(),
            rewards_obtained: Amount::from_raw(rewards_raw[i]),
            honest_mean,
        })
        .collect();
    let attacks: Vec<AttackRow> = attack_order.iter().map(|k| attack_rows[k]).collect();

    let equilibrium = if params.demurrage_rate_per_month > 0.0 {
        let predicted = equilibrium_supply(pop.agents as u64, reward, params.demurrage_rate_per_month, interval)?;
        let final_supply = supply_series.last().map_or(0.0, |p| p.total_supply.as_tokens());
        Some(EquilibriumReport {
            predicted_supply: predicted,
            final_supply,
            relative_gap: (final_supply - predicted).abs() / predicted,
        })
    } else {
        None
    };

    Ok(ScenarioReport {
        name: config.name.clone(),
        mode: Mode::Agents,
        seed,
        currency,
        ceremonies: ceremony_rows,
        supply: supply_series,
        population: population_series,
        equilibrium,
        adoption: None,
        attacks,
        attack_ledger,
        premise_held,
        conservation_ok,
    })
}
