//! Scenario engine: populations of honest and adversarial agents running
//! repeated ceremonies over simulated time.
//!
//! A scenario is a TOML document naming a currency, a population with a
//! behavior mix, a spending model and a ceremony count. Running it produces
//! a [`ScenarioReport`]: the money-supply trajectory, per-ceremony counts,
//! an attack table, and two global verdicts — whether supply movements
//! reconcile with the event log exactly, and whether the honest-majority
//! premise held in every meetup's reputable core. Identical `(config, seed)`
//! always produce identical reports.
//!
//! Two modes share the format. `agents` plays every participant
//! individually through the full engine. `growth` models pure adoption with
//! aggregate population counters: each ceremony admits one newcomer per
//! three reputables (the idealized ceiling of the per-meetup quarter quota),
//! which is what makes "twelve founders to a million people" a question of
//! ceremony arithmetic rather than agent bookkeeping.

pub mod agents;
pub mod growth;

use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amount::Amount;
use crate::ceremony::CeremonyError;
use crate::crypto::{CurrencyId, PublicKey};
use crate::event::EventSink;
use crate::geo::{read_locations_csv, GeoError, LocationSet, DEFAULT_MIN_SPACING_M};
use crate::ledger::LedgerError;
use crate::registry::{CurrencyParams, RegistryError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scenario config: {0}")]
    BadConfig(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario file: {0}")]
    BadToml(#[from] toml::de::Error),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Crypto(#[from] crate::crypto::CryptoError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Ceremony(#[from] CeremonyError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Agents,
    Growth,
}

/// Whether attestations carry real signatures. `Fast` stubs them out and
/// validates on provenance instead — reports are identical either way (the
/// equivalence is tested), but large populations run orders of magnitude
/// quicker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CryptoMode {
    #[default]
    Real,
    Fast,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub mode: Mode,
    /// Default seed; a runner may override it.
    pub seed: Option<u64>,
    pub ceremonies: u64,
    #[serde(default)]
    pub crypto: CryptoMode,
    pub currency: CurrencySpec,
    pub population: Option<PopulationSpec>,
    #[serde(default)]
    pub economy: EconomySpec,
    pub growth: Option<GrowthSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurrencySpec {
    pub reward: Amount,
    pub demurrage_rate_per_month: f64,
    #[serde(default)]
    pub fee_fraction_of_reward: f64,
    pub meetup_interval_days: u32,
    pub genesis_date: NaiveDate,
    /// How many of the first agents double as bootstrap keyholders.
    #[serde(default = "default_founders")]
    pub founders: u32,
    pub locations: LocationSpec,
}

fn default_founders() -> u32 {
    12
}

impl CurrencySpec {
    pub fn params(&self) -> CurrencyParams {
        CurrencyParams {
            reward: self.reward,
            demurrage_rate_per_month: self.demurrage_rate_per_month,
            fee_fraction_of_reward: self.fee_fraction_of_reward,
            meetup_interval_days: self.meetup_interval_days,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocationSpec {
    Grid { lat: f64, lon: f64, count: u32, spacing_deg: f64 },
    Csv { path: String },
}

impl LocationSpec {
    pub fn build(&self) -> Result<LocationSet, SimError> {
        match self {
            LocationSpec::Grid { lat, lon, count, spacing_deg } => {
                Ok(LocationSet::grid(*lat, *lon, *count, *spacing_deg)?)
            }
            LocationSpec::Csv { path } => {
                let file = std::fs::File::open(path)
                    .map_err(|source| SimError::Io { path: path.clone(), source })?;
                Ok(LocationSet::new(read_locations_csv(file)?, DEFAULT_MIN_SPACING_M)?)
            }
        }
    }
}

/// How the opening population acquired reputation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReputationSeed {
    /// Only the bootstrap keyholders start reputable; everyone else joins
    /// as a newcomer under the growth quotas.
    #[default]
    Founders,
    /// Everyone starts with a validated previous ceremony, as a long-lived
    /// community would.
    Established,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSpec {
    pub agents: u32,
    #[serde(default)]
    pub reputation: ReputationSeed,
    /// Adversarial blocks, carved off the *end* of the roster in the order
    /// listed; the remainder (including all founders) behaves honestly.
    #[serde(default)]
    pub behaviors: Vec<BehaviorSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BehaviorSpec {
    /// Registers every ceremony but skips attendance with the given
    /// probability.
    NoShow { count: u32, probability: f64 },
    /// Attends, but also registers `ghosts` persistent fake identities,
    /// votes them into the head count and signs their claims.
    Oversigner { count: u32, ghosts: u32 },
    /// A collusion ring that never attends in person: members register,
    /// claim the full roster showed up, and attest co-assigned ring members
    /// over a video call.
    VideoconfRing { count: u32 },
    /// Attends honestly while spraying `fakes` fresh no-show registrations
    /// into every ceremony to clog the newcomer quota.
    Flooder { count: u32, fakes: u32 },
}

impl BehaviorSpec {
    pub fn count(&self) -> u32 {
        match *self {
            BehaviorSpec::NoShow { count, .. }
            | BehaviorSpec::Oversigner { count, .. }
            | BehaviorSpec::VideoconfRing { count }
            | BehaviorSpec::Flooder { count, .. } => count,
        }
    }

    pub fn kind(&self) -> BehaviorKind {
        match self {
            BehaviorSpec::NoShow { .. } => BehaviorKind::NoShow,
            BehaviorSpec::Oversigner { .. } => BehaviorKind::Oversigner,
            BehaviorSpec::VideoconfRing { .. } => BehaviorKind::VideoconfRing,
            BehaviorSpec::Flooder { .. } => BehaviorKind::Flooder,
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::BadConfig(msg));
        match *self {
            BehaviorSpec::NoShow { probability, .. } => {
                if !(0.0..=1.0).contains(&probability) {
                    return bad(format!("no_show probability {probability} outside [0, 1]"));
                }
            }
            BehaviorSpec::Oversigner { ghosts, .. } => {
                if ghosts < 1 {
                    return bad("oversigner needs at least one ghost".into());
                }
            }
            BehaviorSpec::VideoconfRing { count } => {
                if count < 2 {
                    return bad("videoconf_ring needs at least two members".into());
                }
            }
            BehaviorSpec::Flooder { fakes, .. } => {
                if fakes < 1 {
                    return bad("flooder needs at least one fake per ceremony".into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BehaviorKind {
    Honest,
    NoShow,
    Oversigner,
    VideoconfRing,
    Flooder,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconomySpec {
    /// Fraction of each holder's balance transferred to a random
    /// counterparty once per ceremony. The default of 1 — everyone's whole
    /// balance changes hands each interval — is the unit-velocity stationary
    /// economy.
    #[serde(default = "default_velocity")]
    pub spend_velocity: f64,
}

fn default_velocity() -> f64 {
    1.0
}

impl Default for EconomySpec {
    fn default() -> Self {
        EconomySpec { spend_velocity: default_velocity() }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthSpec {
    #[serde(default = "default_growth_start")]
    pub start: u64,
    pub target: u64,
}

fn default_growth_start() -> u64 {
    12
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<ScenarioConfig, SimError> {
        let config: ScenarioConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Parses a scenario file, resolving a relative locations CSV path
    /// against the file's own directory.
    pub fn load(path: &Path) -> Result<ScenarioConfig, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| SimError::Io { path: path.display().to_string(), source })?;
        let mut config = ScenarioConfig::from_toml(&text)?;
        if let LocationSpec::Csv { path: csv } = &mut config.currency.locations {
            let resolved = path.parent().unwrap_or(Path::new(".")).join(&csv);
            *csv = resolved.display().to_string();
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::BadConfig(msg));
        if self.ceremonies < 1 {
            return bad("ceremonies must be at least 1".into());
        }
        self.currency.params().validate()?;
        if !(3..=12).contains(&self.currency.founders) {
            return bad(format!("founders {} outside 3..=12", self.currency.founders));
        }
        if !(0.0..=f64::MAX).contains(&self.economy.spend_velocity) {
            return bad(format!("spend_velocity {} is negative", self.economy.spend_velocity));
        }
        match self.mode {
            Mode::Agents => {
                let Some(pop) = &self.population else {
                    return bad("agents mode needs a [population] table".into());
                };
                if self.growth.is_some() {
                    return bad("agents mode does not take a [growth] table".into());
                }
                if pop.agents < self.currency.founders {
                    return bad(format!(
                        "population {} smaller than the {} founders",
                        pop.agents, self.currency.founders
                    ));
                }
                let mut special = 0u64;
                for b in &pop.behaviors {
                    b.validate()?;
                    special += b.count() as u64;
                }
                if special > pop.agents as u64 {
                    return bad(format!(
                        "behavior blocks claim {special} agents but the population is {}",
                        pop.agents
                    ));
                }
            }
            Mode::Growth => {
                let Some(growth) = &self.growth else {
                    return bad("growth mode needs a [growth] table".into());
                };
                if self.population.is_some() {
                    return bad("growth mode does not take a [population] table".into());
                }
                if growth.start < 3 {
                    return bad(format!("growth start {} below minimum 3", growth.start));
                }
                if growth.target <= growth.start {
                    return bad("growth target must exceed the start".into());
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupplyPoint {
    pub ceremony: u64,
    /// Days since genesis noon UTC.
    pub t_days: f64,
    pub total_supply: Amount,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationPoint {
    pub ceremony: u64,
    pub t_days: f64,
    pub participants: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CeremonyRow {
    pub index: u64,
    pub registered: u32,
    pub reputable: u32,
    pub newcomers_admitted: u32,
    pub deferred: u32,
    pub meetups: u32,
    /// Physically present participants, ground truth.
    pub attended: u32,
    pub valid: u32,
    pub invalid: u32,
    /// Pairs who already shared a meetup in the previous ceremony.
    pub repeat_pairs: u32,
    pub minted: Amount,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub predicted_supply: f64,
    pub final_supply: f64,
    pub relative_gap: f64,
}

/// One behavior's aggregate outcome across the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackRow {
    pub behavior: BehaviorKind,
    pub agents: u32,
    /// Identity-ceremony instances where the behavior tried to mint
    /// without a person present (registrations of ghosts and fakes,
    /// assignments of absent ring members).
    pub attempted: u64,
    /// Of those, the ones that were actually paid.
    pub succeeded: u64,
    /// Tokens minted to identities with nobody behind them.
    pub excess: Amount,
    /// Truthful, physically present participants denied a reward in meetups
    /// this behavior touched.
    pub honest_collateral: u64,
}

/// Per-adversary earnings against the honest norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryRow {
    pub key: PublicKey,
    pub behavior: BehaviorKind,
    /// Everything minted to this agent plus any ghost or fake identities it
    /// operated.
    pub rewards_obtained: Amount,
    /// Mean total minted to one honest agent over the same run.
    pub honest_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub name: String,
    pub mode: Mode,
    pub seed: u64,
    pub currency: CurrencyId,
    pub ceremonies: Vec<CeremonyRow>,
    pub supply: Vec<SupplyPoint>,
    pub population: Vec<PopulationPoint>,
    pub equilibrium: Option<EquilibriumReport>,
    pub adoption: Option<AdoptionReport>,
    pub attacks: Vec<AttackRow>,
    pub attack_ledger: Vec<AdversaryRow>,
    /// True iff in every meetup of every ceremony, truthful physically
    /// present members made up a strict majority of the reputable core.
    /// When this is false the protocol's no-counterfeit guarantee is void
    /// by its own premise — the attack table shows what happened instead.
    pub premise_held: bool,
    /// Exact reconciliation: final ledger principal equals minted − fees −
    /// decayed from the event stream, in raw units.
    pub conservation_ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdoptionReport {
    pub start: u64,
    pub target: u64,
    pub reached: bool,
    pub ceremonies_to_target: Option<u64>,
    pub days_to_target: Option<u64>,
}

/// Runs a validated scenario to completion. Every engine event is forwarded
/// to `sink`; the report carries the aggregates.
pub fn run_scenario(
    config: &ScenarioConfig,
    seed: u64,
    sink: &mut dyn EventSink,
) -> Result<ScenarioReport, SimError> {
    config.validate()?;
    match config.mode {
        Mode::Agents => agents::run(config, seed, sink),
        Mode::Growth => growth::run(config, seed),
    }
}

/// The supply series in the exchange format `t_days,currency,total_supply`.
pub fn write_supply_csv<W: Write>(
    writer: W,
    currency: CurrencyId,
    series: &[SupplyPoint],
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t_days", "currency", "total_supply"])?;
    for p in series {
        w.write_record([
            format!("{}", p.t_days),
            currency.to_string(),
            p.total_supply.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
