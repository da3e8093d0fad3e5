//! Fixed-point token amounts.
//!
//! Balances are kept as integer multiples of 1e-12 tokens so that ledger
//! arithmetic (transfers, fees, conservation checks) is exact. Only the
//! demurrage factor itself is computed in floating point; the result is
//! rounded back onto the grid once per application.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Raw units per whole token.
pub const SCALE: u128 = 1_000_000_000_000;

const FRAC_DIGITS: usize = 12;

/// A non-negative token amount in raw 1e-12 units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Amount(u128);

impl Amount {
    pub const ZERO: Amount = Amount(0);

    pub const fn from_raw(raw: u128) -> Self {
        Amount(raw)
    }

    pub const fn raw(self) -> u128 {
        self.0
    }

    pub const fn from_whole(tokens: u64) -> Self {
        Amount(tokens as u128 * SCALE)
    }

    /// Quantizes a floating-point token count to the nearest raw unit.
    /// Negative inputs clamp to zero.
    pub fn from_tokens(tokens: f64) -> Self {
        if !(tokens > 0.0) {
            return Amount::ZERO;
        }
        Amount((tokens * SCALE as f64).round() as u128)
    }

    pub fn as_tokens(self) -> f64 {
        self.0 as f64 / SCALE as f64
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn checked_sub(self, rhs: Amount) -> Option<Amount> {
        self.0.checked_sub(rhs.0).map(Amount)
    }

    pub fn saturating_sub(self, rhs: Amount) -> Amount {
        Amount(self.0.saturating_sub(rhs.0))
    }
}

impl std::ops::Add for Amount {
    type Output = Amount;
    fn add(self, rhs: Amount) -> Amount {
        Amount(self.0.checked_add(rhs.0).expect("amount overflow"))
    }
}

impl std::ops::AddAssign for Amount {
    fn add_assign(&mut self, rhs: Amount) {
        *self = *self + rhs;
    }
}

impl std::ops::Sub for Amount {
    type Output = Amount;
    fn sub(self, rhs: Amount) -> Amount {
        Amount(self.0.checked_sub(rhs.0).expect("amount underflow"))
    }
}

impl std::iter::Sum for Amount {
    fn sum<I: Iterator<Item = Amount>>(iter: I) -> Amount {
        iter.fold(Amount::ZERO, |acc, a| acc + a)
    }
}

// Canonical text form: integer part, dot, exactly twelve fraction digits.
// Used by Display, serde and the CSV exports, so every surface shows the
// same exact value.
impl fmt::Display for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}.{:0width$}",
            self.0 / SCALE,
            self.0 % SCALE,
            width = FRAC_DIGITS
        )
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("malformed amount {0:?}")]
pub struct ParseAmountError(String);

impl FromStr for Amount {
    type Err = ParseAmountError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParseAmountError(s.to_owned());
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if frac_part.len() > FRAC_DIGITS {
            return Err(bad());
        }
        let int: u128 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| bad())?
        };
        let mut frac: u128 = 0;
        if !frac_part.is_empty() {
            frac = frac_part.parse().map_err(|_| bad())?;
            frac *= 10u128.pow((FRAC_DIGITS - frac_part.len()) as u32);
        }
        int.checked_mul(SCALE)
            .and_then(|r| r.checked_add(frac))
            .map(Amount)
            .ok_or_else(bad)
    }
}

impl Serialize for Amount {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Amount {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
