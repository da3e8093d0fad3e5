//! The demurrage ledger: one per currency.
//!
//! Balances melt: a holding loses `demurrage_rate_per_month` of itself every
//! 30 days, continuously compounded per the closed form
//! `principal × (1 - d)^(days/30)`. Decay is applied lazily — an account is
//! settled whenever it is touched — and read paths never mutate.
//!
//! All balance arithmetic is exact in raw 1e-12 units. The decay *factor* is
//! the one floating-point step; it is rounded onto the raw grid once per
//! settlement, and every principal change is mirrored to the event log with
//! its exact integer delta so supply can be audited by replay. Factor
//! computation uses `powf`, so bit-level reproducibility is per
//! platform/toolchain, which is what the determinism contract promises.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::amount::Amount;
use crate::crypto::{CurrencyId, PublicKey};
use crate::event::{Event, EventKind, EventSink};
use crate::time::Timestamp;

const DAYS_PER_MONTH: f64 = 30.0;

#[derive(Debug, Error, PartialEq)]
pub enum LedgerError {
    #[error("balance {available} cannot cover {required} (amount plus fee)")]
    InsufficientBalance { available: Amount, required: Amount },
    #[error("demurrage rate must be positive")]
    ZeroDemurrage,
    #[error("demurrage rate {0} outside [0, 1)")]
    RateOutOfRange(f64),
}

/// Multiplier surviving after `elapsed_days` at `rate_per_month` demurrage.
pub fn decay_factor(elapsed_days: f64, rate_per_month: f64) -> f64 {
    debug_assert!((0.0..1.0).contains(&rate_per_month));
    if elapsed_days <= 0.0 {
        return 1.0;
    }
    (1.0 - rate_per_month).powf(elapsed_days / DAYS_PER_MONTH)
}

/// `amount` after `elapsed_days` of demurrage, rounded to the raw grid.
pub fn decay(amount: Amount, elapsed_days: f64, rate_per_month: f64) -> Amount {
    let factor = decay_factor(elapsed_days, rate_per_month);
    Amount::from_raw((amount.raw() as f64 * factor).round() as u128)
}

/// Stationary total supply for a population that all mint `reward` every
/// `interval_days`: issuance exactly offsets melt at
/// `population × reward / (1 - (1-d)^(interval/30))`.
pub fn equilibrium_supply(
    population: u64,
    reward: Amount,
    rate_per_month: f64,
    interval_days: u32,
) -> Result<f64, LedgerError> {
    if rate_per_month <= 0.0 {
        return Err(LedgerError::ZeroDemurrage);
    }
    if rate_per_month >= 1.0 {
        return Err(LedgerError::RateOutOfRange(rate_per_month));
    }
    let q = decay_factor(interval_days as f64, rate_per_month);
    Ok(population as f64 * reward.as_tokens() / (1.0 - q))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Account {
    pub principal: Amount,
    pub last_touched: Timestamp,
}

#[derive(Debug)]
pub struct Ledger {
    currency: CurrencyId,
    rate_per_month: f64,
    accounts: BTreeMap<PublicKey, Account>,
    /// Σ principals, maintained incrementally; equals replayed event deltas.
    supply_raw: u128,
}

impl Ledger {
    pub fn new(currency: CurrencyId, rate_per_month: f64) -> Result<Self, LedgerError> {
        if !(0.0..1.0).contains(&rate_per_month) {
            return Err(LedgerError::RateOutOfRange(rate_per_month));
        }
        Ok(Ledger { currency, rate_per_month, accounts: BTreeMap::new(), supply_raw: 0 })
    }

    pub fn currency(&self) -> CurrencyId {
        self.currency
    }

    pub fn rate_per_month(&self) -> f64 {
        self.rate_per_month
    }

    pub fn len(&self) -> usize {
        self.accounts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accounts.is_empty()
    }

    /// Settles demurrage on one account up to `now`. No-op for unknown
    /// accounts, zero elapsed time, or a zero decay delta.
    fn touch(&mut self, key: PublicKey, now: Timestamp, ceremony: u64, sink: &mut dyn EventSink) {
        let Some(account) = self.accounts.get_mut(&key) else {
            return;
        };
        let elapsed = now.days_since(account.last_touched);
        debug_assert!(elapsed >= 0.0, "ledger time went backwards");
        if elapsed <= 0.0 {
            return;
        }
        let decayed_to = decay(account.principal, elapsed, self.rate_per_month);
        let delta = account.principal - decayed_to;
        account.principal = decayed_to;
        account.last_touched = now;
        if !delta.is_zero() {
            self.supply_raw -= delta.raw();
            sink.record(Event {
                t: now,
                ceremony,
                currency: self.currency,
                kind: EventKind::Demurrage { key, decayed: delta },
            });
        }
    }

    /// Settles every account up to `now` — used before a demurrage-rate
    /// change so past spans decay at the old rate.
    pub fn touch_all(&mut self, now: Timestamp, ceremony: u64, sink: &mut dyn EventSink) {
        let keys: Vec<PublicKey> = self.accounts.keys().copied().collect();
        for key in keys {
            self.touch(key, now, ceremony, sink);
        }
    }

    /// Swaps the demurrage rate, settling all accounts first so the new rate
    /// only governs time after `now`.
    pub fn set_rate(
        &mut self,
        rate_per_month: f64,
        now: Timestamp,
        ceremony: u64,
        sink: &mut dyn EventSink,
    ) -> Result<(), LedgerError> {
        if !(0.0..1.0).contains(&rate_per_month) {
            return Err(LedgerError::RateOutOfRange(rate_per_month));
        }
        self.touch_all(now, ceremony, sink);
        self.rate_per_month = rate_per_month;
        Ok(())
    }

    pub fn mint(
        &mut self,
        key: PublicKey,
        amount: Amount,
        now: Timestamp,
        ceremony: u64,
        sink: &mut dyn EventSink,
    ) {
        self.touch(key, now, ceremony, sink);
        let account = self
            .accounts
            .entry(key)
            .or_insert(Account { principal: Amount::ZERO, last_touched: now });
        account.principal += amount;
        self.supply_raw += amount.raw();
        sink.record(Event {
            t: now,
            ceremony,
            currency: self.currency,
            kind: EventKind::Mint { key, amount },
        });
    }

    /// Moves `amount` and burns `fee` from the sender. The fee is charged
    /// even on self-transfers; a transfer of the full effective balance
    /// fails because the fee cannot be paid on top.
    pub fn transfer(
        &mut self,
        from: PublicKey,
        to: PublicKey,
        amount: Amount,
        fee: Amount,
        now: Timestamp,
        ceremony: u64,
        sink: &mut dyn EventSink,
    ) -> Result<(), LedgerError> {
        self.touch(from, now, ceremony, sink);
        self.touch(to, now, ceremony, sink);
        let required = amount + fee;
        let available = self.accounts.get(&from).map_or(Amount::ZERO, |a| a.principal);
        if available < required {
            return Err(LedgerError::InsufficientBalance { available, required });
        }
        {
            let sender = self.accounts.get_mut(&from).expect("checked above");
            sender.principal = sender.principal - required;
        }
        let receiver = self
            .accounts
            .entry(to)
            .or_insert(Account { principal: Amount::ZERO, last_touched: now });
        receiver.principal += amount;
        self.supply_raw -= fee.raw();
        sink.record(Event {
            t: now,
            ceremony,
            currency: self.currency,
            kind: EventKind::Transfer { from, to, amount, fee },
        });
        Ok(())
    }

    /// Effective balance at `now`: stored principal with pending decay
    /// projected, nothing mutated.
    pub fn balance(&self, key: PublicKey, now: Timestamp) -> Amount {
        match self.accounts.get(&key) {
            None => Amount::ZERO,
            Some(a) => decay(a.principal, now.days_since(a.last_touched), self.rate_per_month),
        }
    }

    pub fn principal(&self, key: PublicKey) -> Amount {
        self.accounts.get(&key).map_or(Amount::ZERO, |a| a.principal)
    }

    /// Σ of all effective balances at `now`; read-only scan.
    pub fn total_supply(&self, now: Timestamp) -> Amount {
        let raw = self
            .accounts
            .values()
            .map(|a| decay(a.principal, now.days_since(a.last_touched), self.rate_per_month).raw())
            .sum();
        Amount::from_raw(raw)
    }

    /// Σ of stored principals — the number the event log must reproduce.
    pub fn principal_sum(&self) -> Amount {
        Amount::from_raw(self.supply_raw)
    }

    pub fn accounts(&self) -> impl Iterator<Item = (&PublicKey, &Account)> {
        self.accounts.iter()
    }
}
