//! A physical gathering: attendance claims, the local broadcast window, and
//! attestation exchange.
//!
//! At the scheduled moment everyone present broadcasts a claim of attendance
//! carrying their count of heads — their vote — and collects the others'
//! signatures over their own claim. A claim arriving later than the minimum
//! travel time between any two sites could come from someone hopping
//! meetups, so honest participants ignore it.

use serde::{Deserialize, Serialize};

use crate::crypto::{CurrencyId, KeyPair, PublicKey, Signature};
use crate::time::Timestamp;

/// Byte length of [`Claim::canonical_bytes`]: key ‖ ceremony ‖ meetup ‖
/// vote ‖ broadcast time.
pub const CLAIM_BYTES: usize = 32 + 8 + 4 + 4 + 8;

/// One participant's claim to be standing at meetup `meetup` of ceremony
/// `ceremony`, seeing `vote` people (themselves included).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub key: PublicKey,
    pub ceremony: u64,
    pub meetup: u32,
    pub vote: u32,
    pub broadcast_at: Timestamp,
}

impl Claim {
    /// Fixed-layout encoding signed by attesters. The broadcast time is part
    /// of the signed payload so a recorded claim can't be replayed later
    /// with a fresher timestamp.
    pub fn canonical_bytes(&self) -> [u8; CLAIM_BYTES] {
        let mut out = [0u8; CLAIM_BYTES];
        out[..32].copy_from_slice(self.key.as_bytes());
        out[32..40].copy_from_slice(&self.ceremony.to_be_bytes());
        out[40..44].copy_from_slice(&self.meetup.to_be_bytes());
        out[44..48].copy_from_slice(&self.vote.to_be_bytes());
        out[48..56].copy_from_slice(&self.broadcast_at.ms().to_be_bytes());
        out
    }

    /// True if the claim was broadcast no later than `window_s` seconds
    /// after the scheduled start — the latecomer rule.
    pub fn within_window(&self, scheduled: Timestamp, window_s: f64) -> bool {
        let deadline = scheduled.add_ms((window_s * 1000.0).round() as i64);
        self.broadcast_at <= deadline
    }
}

/// A counterparty's signature over someone's claim.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Attestation {
    pub claim: Claim,
    pub attester: PublicKey,
    pub signature: Signature,
}

impl Attestation {
    pub fn sign(claim: Claim, attester: &KeyPair) -> Attestation {
        Attestation {
            claim,
            attester: attester.public(),
            signature: attester.sign(&claim.canonical_bytes()),
        }
    }

    /// Placeholder attestation carrying no real signature; only meaningful
    /// under a validation policy that trusts provenance (see the simulator's
    /// crypto modes).
    pub fn stub(claim: Claim, attester: PublicKey) -> Attestation {
        Attestation { claim, attester, signature: Signature::stub() }
    }

    pub fn verify(&self) -> bool {
        self.attester.verify(&self.claim.canonical_bytes(), &self.signature)
    }
}

/// What one participant submits after the gathering: their own claim plus
/// every attestation they gathered (normally all over that claim).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttestationBundle {
    pub participant: PublicKey,
    pub claim: Claim,
    pub attestations: Vec<Attestation>,
}

// ---------------------------------------------------------------------------
// Transcripts
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TranscriptMember {
    pub key: PublicKey,
    pub reputable: bool,
}

/// Everything needed to re-validate one meetup offline: the assigned roster
/// with reputation flags, and the submitted bundles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeetupTranscript {
    pub currency: CurrencyId,
    pub ceremony: u64,
    pub meetup: u32,
    pub members: Vec<TranscriptMember>,
    pub bundles: Vec<AttestationBundle>,
}

/// A ceremony's worth of meetup transcripts, as exported by the simulator
/// and consumed by the standalone validator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CeremonyTranscript {
    pub currency: CurrencyId,
    pub ceremony: u64,
    pub meetups: Vec<MeetupTranscript>,
}
