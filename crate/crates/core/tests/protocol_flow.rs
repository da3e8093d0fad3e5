//! End-to-end runs through the whole stack. Real signatures on the wire,
//! newcomer admission from a founder nucleus, the stubbed-crypto fast path
//! agreeing bit for bit with the verified one, and the supply series
//! obeying the mint/melt recurrence step by step.

use meridian::amount::Amount;
use meridian::event::MemorySink;
use meridian::ledger::decay_factor;
use meridian::meetup::{CeremonyTranscript, MeetupTranscript};
use meridian::sim::{run_scenario, ScenarioConfig};
use meridian::validation::{MeetupRegistry, VerifyPolicy};

fn config(crypto: &str, agents: u32, ceremonies: u64, reputation: &str) -> ScenarioConfig {
    let toml = format!(
        r#"
        name = "flow"
        mode = "agents"
        ceremonies = {ceremonies}
        crypto = "{crypto}"

        [currency]
        reward = "1"
        demurrage_rate_per_month = 0.07
        meetup_interval_days = 41
        genesis_date = "2026-01-01"
        founders = 12

        [currency.locations.grid]
        lat = 47.37
        lon = 8.54
        count = 10
        spacing_deg = 0.01

        [population]
        agents = {agents}
        reputation = "{reputation}"
    "#
    );
    ScenarioConfig::from_toml(&toml).unwrap()
}

#[test]
fn founder_nucleus_admits_newcomers_under_the_quarter_quota() {
    // Twelve founders, nineteen hopefuls. Verified signatures end to end.
    let report = run_scenario(&config("real", 31, 4, "founders"), 3, &mut MemorySink::default())
        .unwrap();
    assert!(report.premise_held);
    assert!(report.conservation_ok);

    let c1 = &report.ceremonies[0];
    assert_eq!(c1.reputable, 12);
    // Twelve reputables admit four newcomers at most; the rest wait.
    assert_eq!(c1.newcomers_admitted, 4);
    assert_eq!(c1.deferred, 19 - 4);
    assert_eq!(c1.valid, 16);

    let c2 = &report.ceremonies[1];
    assert_eq!(c2.reputable, 16);
    // Twenty seats split into two tens: each meetup carries two newcomers.
    assert_eq!(c2.newcomers_admitted, 4);

    // Everyone who validated holds exactly the rewards the rows claim.
    let total_minted: Amount =
        report.ceremonies.iter().fold(Amount::ZERO, |acc, row| acc + row.minted);
    assert!(total_minted > Amount::from_whole(4 * 16));
}

#[test]
fn stubbed_crypto_reproduces_the_verified_run_exactly() {
    let mut real_events = MemorySink::default();
    let mut fast_events = MemorySink::default();
    let real = run_scenario(&config("real", 20, 3, "established"), 8, &mut real_events).unwrap();
    let fast = run_scenario(&config("fast", 20, 3, "established"), 8, &mut fast_events).unwrap();
    // Same seed, same world: the only difference is whether signatures are
    // made and checked, which an all-honest run can never surface.
    assert_eq!(real, fast);
    assert_eq!(real_events.events, fast_events.events);
}

#[test]
fn supply_follows_the_recurrence_step_by_step() {
    let report = run_scenario(&config("fast", 36, 6, "established"), 21, &mut MemorySink::default())
        .unwrap();
    let q = decay_factor(41.0, 0.07);
    let mut expected = 0.0f64;
    for (row, point) in report.ceremonies.iter().zip(&report.supply) {
        expected = expected * q + row.minted.as_tokens();
        let got = point.total_supply.as_tokens();
        assert!(
            (got - expected).abs() <= 1e-6 * expected.max(1.0),
            "ceremony {}: {got} vs {expected}",
            row.index
        );
    }
    let eq = report.equilibrium.unwrap();
    assert!((eq.predicted_supply - 36.0 / (1.0 - q)).abs() < 1e-9);
}

#[test]
fn transcripts_round_trip_through_json_to_the_same_verdicts() {
    // A transcript assembled elsewhere must validate identically after a
    // serialization round trip — the contract the CLI's validate command
    // rests on.
    use meridian::crypto::KeyPair;
    use meridian::meetup::{Attestation, AttestationBundle, Claim, TranscriptMember};
    use meridian::time::Timestamp;

    let keys: Vec<KeyPair> = (0..5u8).map(|i| KeyPair::from_seed(&[i + 10; 32])).collect();
    let currency = meridian::crypto::currency_id(
        &keys.iter().map(|k| k.public()).collect::<Vec<_>>()[..3],
    )
    .unwrap();
    let members: Vec<TranscriptMember> =
        keys.iter().map(|k| TranscriptMember { key: k.public(), reputable: true }).collect();
    let bundles: Vec<AttestationBundle> = keys
        .iter()
        .map(|k| {
            let claim = Claim {
                key: k.public(),
                ceremony: 7,
                meetup: 0,
                vote: 5,
                broadcast_at: Timestamp::from_ms(1_000),
            };
            let attestations: Vec<Attestation> = keys
                .iter()
                .filter(|other| other.public() != k.public())
                .map(|other| Attestation::sign(claim, other))
                .collect();
            AttestationBundle { participant: k.public(), claim, attestations }
        })
        .collect();
    let transcript = CeremonyTranscript {
        currency,
        ceremony: 7,
        meetups: vec![MeetupTranscript { currency, ceremony: 7, meetup: 0, members, bundles }],
    };

    let json = serde_json::to_string_pretty(&transcript).unwrap();
    let back: CeremonyTranscript = serde_json::from_str(&json).unwrap();
    let (registry, stats) = MeetupRegistry::from_transcript(&back.meetups[0]).unwrap();
    assert_eq!(stats.iter().map(|s| s.accepted).sum::<usize>(), 20);
    let outcome = registry.validate(VerifyPolicy::VerifySignatures);
    assert_eq!(outcome.valid_count(), 5);

    // Tampering with one signature must surface under verification.
    let mut tampered = back;
    tampered.meetups[0].bundles[0].attestations[0].signature =
        meridian::crypto::Signature::from_bytes([7u8; 64]);
    let (registry, _) = MeetupRegistry::from_transcript(&tampered.meetups[0]).unwrap();
    let outcome = registry.validate(VerifyPolicy::VerifySignatures);
    let victim = tampered.meetups[0].bundles[0].participant;
    let verdict = outcome.verdicts.iter().find(|v| v.key == victim).unwrap();
    assert_eq!(verdict.received, 3, "the forged voice must not count");
    assert_eq!(outcome.valid_count(), 5, "three honest attesters still carry the claim");
}
