//! Append-only event records.
//!
//! Every state transition the engine makes is emitted as an event, so any
//! run is replayable from `(seed, event log)` and supply movements can be
//! audited by summing deltas. Ledger-touching events carry exact raw-unit
//! amounts; the conservation tests compare their sum against the ledger
//! with integer equality.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::amount::Amount;
use crate::crypto::{CurrencyId, PublicKey};
use crate::time::Timestamp;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventKind {
    Register {
        key: PublicKey,
        reputable: bool,
    },
    Assign {
        meetups: u32,
        assigned: u32,
        excluded: u32,
    },
    Claim {
        key: PublicKey,
        meetup: u32,
        vote: u32,
    },
    Attest {
        attester: PublicKey,
        claimant: PublicKey,
        meetup: u32,
    },
    Validate {
        meetup: u32,
        valid: u32,
        invalid: u32,
    },
    Mint {
        key: PublicKey,
        amount: Amount,
    },
    Transfer {
        from: PublicKey,
        to: PublicKey,
        amount: Amount,
        fee: Amount,
    },
    /// Lazy demurrage applied to one account; `decayed` is the principal
    /// removed.
    Demurrage {
        key: PublicKey,
        decayed: Amount,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub t: Timestamp,
    pub ceremony: u64,
    pub currency: CurrencyId,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl Event {
    /// Signed change to total supply in raw units: mints add, fees and
    /// demurrage remove, plain moves are neutral.
    pub fn supply_delta_raw(&self) -> i128 {
        match &self.kind {
            EventKind::Mint { amount, .. } => amount.raw() as i128,
            EventKind::Transfer { fee, .. } => -(fee.raw() as i128),
            EventKind::Demurrage { decayed, .. } => -(decayed.raw() as i128),
            _ => 0,
        }
    }
}

pub trait EventSink {
    fn record(&mut self, event: Event);
}

/// Discards everything.
pub struct NullSink;

impl EventSink for NullSink {
    fn record(&mut self, _event: Event) {}
}

/// Buffers events in memory; the workhorse for tests.
#[derive(Default)]
pub struct MemorySink {
    pub events: Vec<Event>,
}

impl EventSink for MemorySink {
    fn record(&mut self, event: Event) {
        self.events.push(event);
    }
}

/// Streams events as JSON lines.
pub struct JsonlSink<W: Write> {
    writer: W,
}

impl<W: Write> JsonlSink<W> {
    pub fn new(writer: W) -> Self {
        JsonlSink { writer }
    }

    pub fn into_inner(self) -> W {
        self.writer
    }
}

impl<W: Write> EventSink for JsonlSink<W> {
    fn record(&mut self, event: Event) {
        serde_json::to_writer(&mut self.writer, &event).expect("event serializes");
        self.writer.write_all(b"\n").expect("event log writable");
    }
}

/// Keeps running totals instead of the events themselves — cheap enough to
/// leave on during million-event simulations, and sufficient for supply
/// conservation checks.
#[derive(Default, Debug, Clone, Copy, PartialEq, Eq)]
pub struct LedgerTotals {
    pub minted_raw: u128,
    pub fees_raw: u128,
    pub decayed_raw: u128,
    pub transfers: u64,
    pub mints: u64,
}

impl LedgerTotals {
    pub fn supply_delta_raw(&self) -> i128 {
        self.minted_raw as i128 - self.fees_raw as i128 - self.decayed_raw as i128
    }
}

#[derive(Default)]
pub struct CountingSink {
    pub totals: LedgerTotals,
}

impl EventSink for CountingSink {
    fn record(&mut self, event: Event) {
        match &event.kind {
            EventKind::Mint { amount, .. } => {
                self.totals.minted_raw += amount.raw();
                self.totals.mints += 1;
            }
            EventKind::Transfer { fee, .. } => {
                self.totals.fees_raw += fee.raw();
                self.totals.transfers += 1;
            }
            EventKind::Demurrage { decayed, .. } => self.totals.decayed_raw += decayed.raw(),
            _ => {}
        }
    }
}

impl<T: EventSink + ?Sized> EventSink for &mut T {
    fn record(&mut self, event: Event) {
        (**self).record(event);
    }
}

/// Forwards to two sinks; lets a run keep totals while also streaming JSONL.
pub struct TeeSink<A: EventSink, B: EventSink>(pub A, pub B);

impl<A: EventSink, B: EventSink> EventSink for TeeSink<A, B> {
    fn record(&mut self, event: Event) {
        self.0.record(event.clone());
        self.1.record(event);
    }
}
