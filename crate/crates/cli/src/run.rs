//! `meridian run` — execute scenario files. Each scenario gets its own
//! output directory with report.json, supply.csv, attacks.csv (agent mode),
//! optionally events.jsonl, and a manifest that reproduces the run.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::Args;
use meridian::event::{JsonlSink, NullSink};
use meridian::sim::{
    run_scenario, write_supply_csv, LocationSpec, Mode, ScenarioConfig, ScenarioReport, SimError,
};

use crate::manifest::Manifest;
use crate::{input, CmdError};

#[derive(Args)]
pub struct RunArgs {
    /// Scenario TOML files.
    #[arg(required = true)]
    scenarios: Vec<PathBuf>,

    /// Also stream every engine event to events.jsonl.
    #[arg(long)]
    events: bool,
}

pub fn cmd(
    args: RunArgs,
    seed_flag: Option<u64>,
    out: Option<PathBuf>,
    jobs: usize,
) -> Result<(), CmdError> {
    let single = args.scenarios.len() == 1;
    let tasks: Vec<(PathBuf, PathBuf)> = args
        .scenarios
        .iter()
        .map(|path| {
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned());
            let stem = stem.unwrap_or_else(|| "scenario".to_string());
            let dir = match &out {
                Some(dir) if single => dir.clone(),
                Some(dir) => dir.join(&stem),
                None => PathBuf::from("runs").join(&stem),
            };
            (path.clone(), dir)
        })
        .collect();

    let jobs = jobs.clamp(1, tasks.len());
    let results: Mutex<Vec<Option<Result<String, CmdError>>>> =
        Mutex::new((0..tasks.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some((scenario, dir)) = tasks.get(i) else { break };
                let outcome = run_one(scenario, dir, seed_flag, args.events);
                results.lock().unwrap()[i] = Some(outcome);
            });
        }
    });

    // Summaries print in input order; the first failure decides the exit
    // code (main prints it), later ones are reported here so none is lost.
    let mut first_error = None;
    for slot in results.into_inner().unwrap() {
        match slot.expect("every task ran") {
            Ok(line) => {
                let _ = crate::emit(&line);
            }
            Err(e) if first_error.is_none() => first_error = Some(e),
            Err(e) => eprintln!("error: {}", e.message()),
        }
    }
    first_error.map_or(Ok(()), Err)
}

fn run_one(
    scenario: &Path,
    dir: &Path,
    seed_flag: Option<u64>,
    events: bool,
) -> Result<String, CmdError> {
    let config = ScenarioConfig::load(scenario).map_err(sim_error)?;
    let seed = seed_flag.or(config.seed).unwrap_or_else(rand::random);
    fs::create_dir_all(dir).map_err(|e| input(&format!("cannot create {}", dir.display()), e))?;

    let report = if events {
        let file = File::create(dir.join("events.jsonl"))
            .map_err(|e| input("cannot write events.jsonl", e))?;
        let mut sink = JsonlSink::new(BufWriter::new(file));
        let report = run_scenario(&config, seed, &mut sink).map_err(sim_error)?;
        sink.into_inner().flush().map_err(|e| input("events.jsonl", e))?;
        report
    } else {
        run_scenario(&config, seed, &mut NullSink).map_err(sim_error)?
    };

    write_outputs(scenario, dir, &config, &report, events)?;

    if !report.conservation_ok {
        return Err(CmdError::Invariant(format!(
            "{}: ledger does not reconcile with the event stream; see {}/report.json",
            report.name,
            dir.display()
        )));
    }
    Ok(summary_line(&report, dir))
}

fn write_outputs(
    scenario: &Path,
    dir: &Path,
    config: &ScenarioConfig,
    report: &ScenarioReport,
    events: bool,
) -> Result<(), CmdError> {
    let write_err = |name: &str| {
        let name = name.to_string();
        move |e: std::io::Error| input(&name, e)
    };

    let json = serde_json::to_string_pretty(report).expect("report serializes");
    fs::write(dir.join("report.json"), json + "\n").map_err(write_err("report.json"))?;

    let file = File::create(dir.join("supply.csv")).map_err(write_err("supply.csv"))?;
    write_supply_csv(BufWriter::new(file), report.currency, &report.supply)
        .map_err(|e| input("supply.csv", e))?;

    if report.mode == Mode::Agents {
        write_attacks_csv(&dir.join("attacks.csv"), report)?;
    }

    let mut manifest = Manifest::new("run");
    manifest.arg("scenario", scenario.display());
    if events {
        manifest.arg("events", "true");
    }
    manifest.seed = Some(report.seed);
    manifest.input(scenario).map_err(|e| input("scenario digest", e))?;
    if let LocationSpec::Csv { path } = &config.currency.locations {
        manifest.input(Path::new(path)).map_err(|e| input("locations digest", e))?;
    }
    for name in ["report.json", "supply.csv"] {
        manifest.output(dir, name).map_err(|e| input(name, e))?;
    }
    if report.mode == Mode::Agents {
        manifest.output(dir, "attacks.csv").map_err(|e| input("attacks.csv", e))?;
    }
    if events {
        manifest.output(dir, "events.jsonl").map_err(|e| input("events.jsonl", e))?;
    }
    manifest.write(dir).map_err(|e| input("manifest.json", e))
}

fn write_attacks_csv(path: &Path, report: &ScenarioReport) -> Result<(), CmdError> {
    let file = File::create(path).map_err(|e| input("attacks.csv", e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let map_err = |e: csv::Error| input("attacks.csv", e);
    w.write_record(["behavior", "agents", "attempted", "succeeded", "excess", "honest_collateral"])
        .map_err(map_err)?;
    for row in &report.attacks {
        let behavior = serde_json::to_value(row.behavior).expect("kind serializes");
        w.write_record([
            behavior.as_str().expect("kind is a string").to_string(),
            row.agents.to_string(),
            row.attempted.to_string(),
            row.succeeded.to_string(),
            row.excess.to_string(),
            row.honest_collateral.to_string(),
        ])
        .map_err(map_err)?;
    }
    w.flush().map_err(|e| input("attacks.csv", e))
}

fn summary_line(report: &ScenarioReport, dir: &Path) -> String {
    let final_supply = report
        .supply
        .last()
        .map_or_else(|| "0".to_string(), |p| p.total_supply.to_string());
    let mut line = format!(
        "{}: seed {}, {} ceremonies, final supply {} → {}",
        report.name,
        report.seed,
        report.ceremonies.len(),
        final_supply,
        dir.display()
    );
    if !report.premise_held {
        line.push_str(" [honest-majority premise violated]");
    }
    let counterfeit: u64 = report.attacks.iter().map(|a| a.succeeded).sum();
    if counterfeit > 0 {
        line.push_str(&format!(" [{counterfeit} counterfeit rewards paid]"));
    }
    line
}

/// Config mistakes are the caller's problem; anything the engine raises
/// after static validation passed means a guarantee broke mid-run.
fn sim_error(e: SimError) -> CmdError {
    match &e {
        SimError::BadConfig(_) | SimError::BadToml(_) | SimError::Io { .. } | SimError::Geo(_) => {
            CmdError::Input(e.to_string())
        }
        _ => CmdError::Invariant(e.to_string()),
    }
}
