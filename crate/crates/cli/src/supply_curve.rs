//! `meridian supply-curve` — the analytic money-supply recurrence, no
//! simulation: M ← M·decay + reward·population each interval. Useful as the
//! closed-form reference to plot against a simulated supply.csv.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use meridian::ledger::decay_factor;

use crate::manifest::Manifest;
use crate::{input, CmdError};

#[derive(Args)]
pub struct SupplyCurveArgs {
    /// Participants minting each ceremony.
    #[arg(long)]
    population: u64,

    /// Ceremony reward per participant, in tokens.
    #[arg(long, default_value_t = 1.0)]
    reward: f64,

    /// Demurrage rate per 30 days.
    #[arg(long, default_value_t = 0.07)]
    demurrage: f64,

    /// Days between ceremonies.
    #[arg(long, default_value_t = 41)]
    interval_days: u32,

    /// How many ceremonies to tabulate.
    #[arg(long)]
    ceremonies: u64,
}

pub fn cmd(args: SupplyCurveArgs, out: Option<PathBuf>) -> Result<(), CmdError> {
    if args.population == 0 || args.ceremonies == 0 {
        return Err(CmdError::Input("population and ceremonies must be positive".into()));
    }
    if !(0.0..1.0).contains(&args.demurrage) {
        return Err(CmdError::Input(format!("demurrage {} outside [0, 1)", args.demurrage)));
    }
    if !(args.reward > 0.0) || args.interval_days == 0 {
        return Err(CmdError::Input("reward and interval_days must be positive".into()));
    }

    let q = decay_factor(args.interval_days as f64, args.demurrage);
    let minted = args.reward * args.population as f64;
    let mut csv = String::from("ceremony,t_days,total_supply\n");
    let mut supply = 0.0f64;
    for k in 1..=args.ceremonies {
        supply = supply * q + minted;
        let t_days = k * args.interval_days as u64;
        csv.push_str(&format!("{k},{t_days},{supply}\n"));
    }

    match out {
        None => {
            let _ = crate::emit(csv.trim_end_matches('\n'));
        }
        Some(dir) => {
            fs::create_dir_all(&dir)
                .map_err(|e| input(&format!("cannot create {}", dir.display()), e))?;
            fs::write(dir.join("supply_curve.csv"), csv)
                .map_err(|e| input("supply_curve.csv", e))?;
            let mut manifest = Manifest::new("supply-curve");
            manifest
                .arg("population", args.population)
                .arg("reward", args.reward)
                .arg("demurrage", args.demurrage)
                .arg("interval_days", args.interval_days)
                .arg("ceremonies", args.ceremonies);
            manifest.output(&dir, "supply_curve.csv").map_err(|e| input("supply_curve.csv", e))?;
            manifest.write(&dir).map_err(|e| input("manifest.json", e))?;
        }
    }
    Ok(())
}
