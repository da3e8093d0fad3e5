//! Engine for proof-of-personhood meetup ceremonies and the local
//! currencies they mint.
//!
//! Communities gather in small simultaneous meetups at local solar noon,
//! attest each other's presence, and mint a fixed per-person reward into a
//! demurrage-charged ledger. The crate provides the protocol pieces —
//! location registries, key handling, registration, meetup assignment,
//! attestation exchange and validation, the ledger — plus a deterministic,
//! seedable simulator for studying monetary dynamics and attack behaviour.
//!
//! Everything is reproducible: one master seed drives all randomness, and
//! every state transition is emitted to an event log.

pub mod amount;
pub mod assignment;
pub mod ceremony;
pub mod crypto;
pub mod event;
pub mod geo;
pub mod ledger;
pub mod meetup;
pub mod registry;
pub mod rng;
pub mod sim;
pub mod time;
pub mod validation;

pub use amount::Amount;
pub use crypto::{CurrencyId, KeyPair, PublicKey, Signature};
pub use time::Timestamp;
