//! Keys, signatures and currency identifiers.
//!
//! Participants are Ed25519 keypairs; attestations are detached signatures
//! over canonical claim bytes. A currency's identifier is a SHA-256 digest
//! of its bootstrap keys in sorted order, so the same founding group always
//! derives the same id no matter how the keys were listed.

use std::fmt;

use ed25519_dalek::{Signer as _, SigningKey, Verifier as _, VerifyingKey};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const PUBLIC_KEY_LEN: usize = 32;
pub const SIGNATURE_LEN: usize = 64;
pub const SEED_LEN: usize = 32;

/// Founding groups must be a plausible physical gathering.
pub const MIN_BOOTSTRAP_KEYS: usize = 3;
pub const MAX_BOOTSTRAP_KEYS: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum CryptoError {
    #[error("{0} bootstrap keys; a founding meetup needs {MIN_BOOTSTRAP_KEYS} to {MAX_BOOTSTRAP_KEYS}")]
    BadBootstrapSize(usize),
    #[error("bootstrap keys contain a duplicate")]
    DuplicateBootstrapKey,
    #[error("bytes do not encode a valid public key")]
    MalformedKey,
    #[error("bad hex: {0}")]
    BadHex(String),
}

// ---------------------------------------------------------------------------
// Public keys
// ---------------------------------------------------------------------------

/// A participant's verification key. Keeps the parsed curve point alongside
/// the raw bytes so repeated signature checks skip decompression.
#[derive(Clone, Copy)]
pub struct PublicKey {
    bytes: [u8; PUBLIC_KEY_LEN],
    point: VerifyingKey,
}

impl PublicKey {
    pub fn from_bytes(bytes: &[u8; PUBLIC_KEY_LEN]) -> Result<Self, CryptoError> {
        let point = VerifyingKey::from_bytes(bytes).map_err(|_| CryptoError::MalformedKey)?;
        Ok(PublicKey { bytes: *bytes, point })
    }

    pub fn from_hex(s: &str) -> Result<Self, CryptoError> {
        let mut bytes = [0u8; PUBLIC_KEY_LEN];
        hex::decode_to_slice(s, &mut bytes).map_err(|e| CryptoError::BadHex(e.to_string()))?;
        Self::from_bytes(&bytes)
    }

    pub fn as_bytes(&self) -> &[u8; PUBLIC_KEY_LEN] {
        &self.bytes
    }

    /// Checks `sig` over `msg`. Never panics; malformed signatures are
    /// simply invalid.
    pub fn verify(&self, msg: &[u8], sig: &Signature) -> bool {
        let sig = ed25519_dalek::Signature::from_bytes(&sig.0);
        self.point.verify(msg, &sig).is_ok()
    }
}

impl PartialEq for PublicKey {
    fn eq(&self, other: &Self) -> bool {
        self.bytes == other.bytes
    }
}
impl Eq for PublicKey {}
impl PartialOrd for PublicKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for PublicKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.bytes.cmp(&other.bytes)
    }
}
impl std::hash::Hash for PublicKey {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.bytes.hash(state);
    }
}

impl fmt::Display for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.bytes))
    }
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey({}…)", &hex::encode(self.bytes)[..8])
    }
}

impl Serialize for PublicKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PublicKey {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        PublicKey::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Keypairs and signatures
// ---------------------------------------------------------------------------

#[derive(Clone)]
pub struct KeyPair {
    signing: SigningKey,
    public: PublicKey,
}

impl KeyPair {
    pub fn from_seed(seed: &[u8; SEED_LEN]) -> Self {
        let signing = SigningKey::from_bytes(seed);
        let vk = signing.verifying_key();
        let public = PublicKey { bytes: vk.to_bytes(), point: vk };
        KeyPair { signing, public }
    }

    pub fn generate<R: rand::RngCore>(rng: &mut R) -> Self {
        let mut seed = [0u8; SEED_LEN];
        rng.fill_bytes(&mut seed);
        Self::from_seed(&seed)
    }

    pub fn public(&self) -> PublicKey {
        self.public
    }

    pub fn sign(&self, msg: &[u8]) -> Signature {
        Signature(self.signing.sign(msg).to_bytes())
    }
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KeyPair({:?})", self.public)
    }
}

/// A detached Ed25519 signature. Any 64 bytes are representable; validity
/// is decided at verification time.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Signature(pub(crate) [u8; SIGNATURE_LEN]);

impl Signature {
    pub fn from_bytes(bytes: [u8; SIGNATURE_LEN]) -> Self {
        Signature(bytes)
    }

    pub fn to_bytes(self) -> [u8; SIGNATURE_LEN] {
        self.0
    }

    /// All-zero placeholder used where signing is skipped by policy (see the
    /// simulator's crypto modes). Never verifies.
    pub fn stub() -> Self {
        Signature([0u8; SIGNATURE_LEN])
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({}…)", &hex::encode(self.0)[..8])
    }
}

impl Serialize for Signature {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(&hex::encode(self.0))
    }
}

impl<'de> Deserialize<'de> for Signature {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        let mut bytes = [0u8; SIGNATURE_LEN];
        hex::decode_to_slice(&s, &mut bytes)
            .map_err(|e| serde::de::Error::custom(format!("bad hex: {e}")))?;
        Ok(Signature(bytes))
    }
}

// ---------------------------------------------------------------------------
// Currency identifiers
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CurrencyId([u8; 32]);

impl CurrencyId {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn from_hex(s: &str) -> Result<Self, CryptoError> {
        let mut bytes = [0u8; 32];
        hex::decode_to_slice(s, &mut bytes).map_err(|e| CryptoError::BadHex(e.to_string()))?;
        Ok(CurrencyId(bytes))
    }
}

impl fmt::Display for CurrencyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for CurrencyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CurrencyId({}…)", &hex::encode(self.0)[..8])
    }
}

impl Serialize for CurrencyId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CurrencyId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        CurrencyId::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Digest of the founding keys in byte order. Order-independent: permuting
/// the input yields the same id.
pub fn currency_id(bootstrap_keys: &[PublicKey]) -> Result<CurrencyId, CryptoError> {
    if !(MIN_BOOTSTRAP_KEYS..=MAX_BOOTSTRAP_KEYS).contains(&bootstrap_keys.len()) {
        return Err(CryptoError::BadBootstrapSize(bootstrap_keys.len()));
    }
    let mut sorted: Vec<&[u8; PUBLIC_KEY_LEN]> =
        bootstrap_keys.iter().map(|k| k.as_bytes()).collect();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(CryptoError::DuplicateBootstrapKey);
    }
    let mut hasher = Sha256::new();
    for key in sorted {
        hasher.update(key);
    }
    Ok(CurrencyId(hasher.finalize().into()))
}
