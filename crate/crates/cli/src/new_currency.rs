//! `meridian new-currency` — bootstrap a currency from a founding meetup's
//! public keys and a curated site list, writing the currency document.

use std::fs;
use std::path::PathBuf;

use chrono::NaiveDate;
use clap::Args;
use meridian::amount::Amount;
use meridian::ceremony::TokenStore;
use meridian::crypto::{CryptoError, CurrencyId, PublicKey, PUBLIC_KEY_LEN};
use meridian::geo::{read_locations_csv, Location, LocationSet, DEFAULT_MIN_SPACING_M};
use meridian::registry::{CurrencyParams, Registry, RegistryError};
use serde::{Deserialize, Serialize};

use crate::manifest::Manifest;
use crate::{input, CmdError};

#[derive(Args)]
pub struct NewCurrencyArgs {
    /// TOML file with a `keys` array of hex-encoded founder public keys.
    #[arg(long)]
    founders: PathBuf,

    /// CSV of meetup sites with columns id,lat,lon.
    #[arg(long)]
    locations: PathBuf,

    /// Ceremony reward per attested participant, in tokens.
    #[arg(long, default_value_t = 1.0)]
    reward: f64,

    /// Demurrage rate per 30 days, e.g. 0.07 for 7%.
    #[arg(long, default_value_t = 0.07)]
    demurrage: f64,

    /// Transfer fee as a fraction of the reward.
    #[arg(long, default_value_t = 0.0)]
    fee: f64,

    /// Days between ceremonies.
    #[arg(long, default_value_t = 41)]
    interval_days: u32,

    /// Genesis date, ISO `YYYY-MM-DD`.
    #[arg(long)]
    genesis: NaiveDate,

    /// Minimum pairwise site distance in metres.
    #[arg(long, default_value_t = DEFAULT_MIN_SPACING_M)]
    min_spacing_m: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FoundersFile {
    keys: Vec<String>,
}

/// The written artifact: everything needed to recognize and parameterize
/// the currency, but no private material.
#[derive(Serialize)]
struct CurrencyDoc<'a> {
    currency: CurrencyId,
    bootstrap_keys: &'a [PublicKey],
    genesis_date: NaiveDate,
    params: CurrencyParams,
    locations: &'a [Location],
}

pub fn cmd(args: NewCurrencyArgs, out: Option<PathBuf>) -> Result<(), CmdError> {
    let founders_text = fs::read_to_string(&args.founders)
        .map_err(|e| input(&args.founders.display().to_string(), e))?;
    let founders: FoundersFile =
        toml::from_str(&founders_text).map_err(|e| input("founders file", e))?;
    let keys = founders
        .keys
        .iter()
        .map(|h| parse_key(h))
        .collect::<Result<Vec<_>, _>>()?;

    let locations_file = fs::File::open(&args.locations)
        .map_err(|e| input(&args.locations.display().to_string(), e))?;
    let sites = read_locations_csv(locations_file).map_err(|e| input("locations file", e))?;
    let locations =
        LocationSet::new(sites, args.min_spacing_m).map_err(|e| input("locations file", e))?;

    let params = CurrencyParams {
        reward: Amount::from_tokens(args.reward),
        demurrage_rate_per_month: args.demurrage,
        fee_fraction_of_reward: args.fee,
        meetup_interval_days: args.interval_days,
    };
    let mut registry = Registry::new();
    let mut tokens = TokenStore::default();
    let currency = registry
        .bootstrap_currency(keys.clone(), locations.clone(), args.genesis, params, &mut tokens)
        .map_err(bootstrap_error)?;

    let dir = out.unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| input(&format!("cannot create {}", dir.display()), e))?;
    let doc = CurrencyDoc {
        currency,
        bootstrap_keys: &keys,
        genesis_date: args.genesis,
        params,
        locations: locations.as_slice(),
    };
    let json = serde_json::to_string_pretty(&doc).expect("document serializes");
    fs::write(dir.join("currency.json"), json + "\n").map_err(|e| input("currency.json", e))?;

    let mut manifest = Manifest::new("new-currency");
    manifest
        .arg("founders", args.founders.display())
        .arg("locations", args.locations.display())
        .arg("reward", args.reward)
        .arg("demurrage", args.demurrage)
        .arg("fee", args.fee)
        .arg("interval_days", args.interval_days)
        .arg("genesis", args.genesis)
        .arg("min_spacing_m", args.min_spacing_m);
    manifest.input(&args.founders).map_err(|e| input("founders digest", e))?;
    manifest.input(&args.locations).map_err(|e| input("locations digest", e))?;
    manifest.output(&dir, "currency.json").map_err(|e| input("currency.json", e))?;
    manifest.write(&dir).map_err(|e| input("manifest.json", e))?;

    let _ = crate::emit(&format!(
        "currency {currency}: {} founders, {} sites → {}",
        keys.len(),
        locations.len(),
        dir.join("currency.json").display()
    ));
    Ok(())
}

fn parse_key(hex_key: &str) -> Result<PublicKey, CmdError> {
    let bytes = hex::decode(hex_key).map_err(|e| input("founder key", e))?;
    let bytes: [u8; PUBLIC_KEY_LEN] = bytes
        .try_into()
        .map_err(|_| CmdError::Input(format!("founder key {hex_key} is not 32 bytes")))?;
    PublicKey::from_bytes(&bytes).map_err(|e| input("founder key", e))
}

/// Names the size violation explicitly — the one bootstrap failure a user
/// hits by bringing the wrong number of people.
fn bootstrap_error(e: RegistryError) -> CmdError {
    match &e {
        RegistryError::BadBootstrap(CryptoError::BadBootstrapSize(_)) => {
            CmdError::Input(format!("BadBootstrapSize: {e}"))
        }
        _ => CmdError::Input(e.to_string()),
    }
}
