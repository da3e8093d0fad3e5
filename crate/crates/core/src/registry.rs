//! Currency bootstrapping, the per-currency parameter store, and the
//! referendum rules that gate parameter changes.
//!
//! A currency is founded by a trusted-setup meetup of 3–12 keyholders; its
//! identifier is derived from those keys alone, so anyone can recompute it.
//! Parameters are versioned by ceremony index and only ever change at a
//! ceremony boundary.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amount::Amount;
use crate::ceremony::{ReputationToken, TokenStore};
use crate::crypto::{currency_id, CryptoError, CurrencyId, PublicKey};
use crate::geo::{GeoError, LocationSet};

#[derive(Debug, Error, PartialEq)]
pub enum RegistryError {
    #[error(transparent)]
    BadBootstrap(#[from] CryptoError),
    #[error("currency {0} already registered")]
    DuplicateCurrency(CurrencyId),
    #[error("invalid location set: {0}")]
    InvalidLocations(#[from] GeoError),
    #[error("unknown currency {0}")]
    UnknownCurrency(CurrencyId),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("update must take effect at a future ceremony (requested {requested}, next is {next})")]
    BadSchedule { requested: u64, next: u64 },
    #[error("proposal rejected by referendum")]
    RejectedByReferendum,
    #[error("referendum received no votes")]
    NoVotes,
}

/// The adjustable monetary knobs. Everything else about a currency is fixed
/// at bootstrap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurrencyParams {
    pub reward: Amount,
    pub demurrage_rate_per_month: f64,
    pub fee_fraction_of_reward: f64,
    pub meetup_interval_days: u32,
}

impl CurrencyParams {
    pub fn validate(&self) -> Result<(), RegistryError> {
        if self.reward.is_zero() {
            return Err(RegistryError::OutOfRange("reward must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.demurrage_rate_per_month) {
            return Err(RegistryError::OutOfRange(format!(
                "demurrage_rate_per_month {} outside [0, 1)",
                self.demurrage_rate_per_month
            )));
        }
        if !(0.0..=1.0).contains(&self.fee_fraction_of_reward) {
            return Err(RegistryError::OutOfRange(format!(
                "fee_fraction_of_reward {} outside [0, 1]",
                self.fee_fraction_of_reward
            )));
        }
        // Registration and witnessing windows span ±24h around local noon;
        // shorter intervals would overlap adjacent ceremonies.
        if self.meetup_interval_days < 4 {
            return Err(RegistryError::OutOfRange(format!(
                "meetup_interval_days {} below minimum 4",
                self.meetup_interval_days
            )));
        }
        Ok(())
    }

    /// Flat per-transfer fee: `fee_fraction_of_reward × reward`, quantized.
    pub fn transfer_fee(&self) -> Amount {
        Amount::from_tokens(self.fee_fraction_of_reward * self.reward.as_tokens())
    }
}

#[derive(Debug, Clone)]
pub struct CurrencyConfig {
    pub id: CurrencyId,
    pub bootstrap_keys: Vec<PublicKey>,
    pub genesis_date: NaiveDate,
    pub locations: LocationSet,
    /// `(effective_from_ceremony, params)`, ascending, first entry at 0.
    versions: Vec<(u64, CurrencyParams)>,
}

impl CurrencyConfig {
    /// Parameters in force for ceremony `index`.
    pub fn params_at(&self, index: u64) -> &CurrencyParams {
        let pos = self.versions.partition_point(|(from, _)| *from <= index);
        &self.versions[pos - 1].1
    }

    pub fn versions(&self) -> &[(u64, CurrencyParams)] {
        &self.versions
    }

    fn latest_scheduled(&self) -> u64 {
        self.versions.last().expect("never empty").0
    }
}

#[derive(Debug, Default)]
pub struct Registry {
    currencies: BTreeMap<CurrencyId, CurrencyConfig>,
}

impl Registry {
    pub fn new() -> Self {
        Registry::default()
    }

    /// Founds a currency: derives its id from the bootstrap keys, pins the
    /// location set and initial parameters, and hands every founder a
    /// ceremony-0 reputation token (the trusted setup counts as meetup 0).
    pub fn bootstrap_currency(
        &mut self,
        bootstrap_keys: Vec<PublicKey>,
        locations: LocationSet,
        genesis_date: NaiveDate,
        params: CurrencyParams,
        tokens: &mut TokenStore,
    ) -> Result<CurrencyId, RegistryError> {
        params.validate()?;
        let id = currency_id(&bootstrap_keys)?;
        if self.currencies.contains_key(&id) {
            return Err(RegistryError::DuplicateCurrency(id));
        }
        for &holder in &bootstrap_keys {
            tokens.issue(ReputationToken { currency: id, ceremony: 0, meetup: 0, holder });
        }
        self.currencies.insert(
            id,
            CurrencyConfig {
                id,
                bootstrap_keys,
                genesis_date,
                locations,
                versions: vec![(0, params)],
            },
        );
        Ok(id)
    }

    pub fn get(&self, id: CurrencyId) -> Option<&CurrencyConfig> {
        self.currencies.get(&id)
    }

    pub fn ids(&self) -> impl Iterator<Item = CurrencyId> + '_ {
        self.currencies.keys().copied()
    }

    /// Schedules new parameters from ceremony `effective_from` onward,
    /// gated by a community referendum over the supplied votes. Changes are
    /// atomic at ceremony boundaries: `params_at` flips exactly at
    /// `effective_from`.
    pub fn schedule_update(
        &mut self,
        id: CurrencyId,
        effective_from: u64,
        params: CurrencyParams,
        votes: &[(Amount, Ballot)],
    ) -> Result<(), RegistryError> {
        params.validate()?;
        let config =
            self.currencies.get_mut(&id).ok_or(RegistryError::UnknownCurrency(id))?;
        let next = config.latest_scheduled() + 1;
        if effective_from < next {
            return Err(RegistryError::BadSchedule { requested: effective_from, next });
        }
        if community_referendum(votes)? == ReferendumOutcome::Rejected {
            return Err(RegistryError::RejectedByReferendum);
        }
        config.versions.push((effective_from, params));
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Referendums
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ballot {
    For,
    Against,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferendumOutcome {
    Accepted,
    Rejected,
}

/// Association-level rule: a proposal passes unless at least two thirds of
/// the votes oppose it. Thresholds compare exactly in integers; precisely
/// two thirds against already blocks.
pub fn association_referendum(
    votes_for: u64,
    votes_against: u64,
) -> Result<ReferendumOutcome, RegistryError> {
    let total = votes_for + votes_against;
    if total == 0 {
        return Err(RegistryError::NoVotes);
    }
    if 3 * votes_against >= 2 * total {
        Ok(ReferendumOutcome::Rejected)
    } else {
        Ok(ReferendumOutcome::Accepted)
    }
}

/// Community-level rule: passing needs at least two thirds of the voters
/// *and* two thirds of the voting stake. Stake compares in raw units, so no
/// rounding can nudge a result.
pub fn community_referendum(
    votes: &[(Amount, Ballot)],
) -> Result<ReferendumOutcome, RegistryError> {
    if votes.is_empty() {
        return Err(RegistryError::NoVotes);
    }
    let voters = votes.len() as u128;
    let voters_for = votes.iter().filter(|(_, b)| *b == Ballot::For).count() as u128;
    let stake_total: u128 = votes.iter().map(|(s, _)| s.raw()).sum();
    let stake_for: u128 =
        votes.iter().filter(|(_, b)| *b == Ballot::For).map(|(s, _)| s.raw()).sum();
    let ok = 3 * voters_for >= 2 * voters && 3 * stake_for >= 2 * stake_total;
    Ok(if ok { ReferendumOutcome::Accepted } else { ReferendumOutcome::Rejected })
}
