//! `meridian assign-dry-run` — seat a registrant file into meetups exactly
//! as a ceremony would, then audit the result against the hard rules.

use std::fs::{self, File};
use std::path::PathBuf;

use clap::Args;
use meridian::assignment::{assign, audit, Assignment, ExclusionReason, Registrant, RuleViolation};
use meridian::crypto::{PublicKey, PUBLIC_KEY_LEN};
use meridian::geo::{read_locations_csv, LocationSet, DEFAULT_MIN_SPACING_M};
use serde::Serialize;

use crate::manifest::Manifest;
use crate::{input, CmdError};

#[derive(Args)]
pub struct AssignArgs {
    /// Registrant CSV with columns key,reputable,last_meetup
    /// (last_meetup empty for newcomers).
    #[arg(long)]
    registrants: PathBuf,

    /// CSV of meetup sites with columns id,lat,lon.
    #[arg(long)]
    locations: PathBuf,

    /// Ceremony index; salts the draw and tags the output.
    #[arg(long, default_value_t = 1)]
    ceremony: u64,

    /// Minimum pairwise site distance in metres.
    #[arg(long, default_value_t = DEFAULT_MIN_SPACING_M)]
    min_spacing_m: f64,
}

#[derive(Serialize)]
struct AssignmentDoc {
    seed: u64,
    assignment: Assignment,
    admitted_newcomers: usize,
    deferred_newcomers: usize,
    violations: Vec<RuleViolation>,
}

pub fn cmd(args: AssignArgs, seed_flag: Option<u64>, out: Option<PathBuf>) -> Result<(), CmdError> {
    let registrants = read_registrants(&args.registrants)?;
    let locations_file = File::open(&args.locations)
        .map_err(|e| input(&args.locations.display().to_string(), e))?;
    let sites = read_locations_csv(locations_file).map_err(|e| input("locations file", e))?;
    let locations =
        LocationSet::new(sites, args.min_spacing_m).map_err(|e| input("locations file", e))?;

    let seed = seed_flag.unwrap_or_else(rand::random);
    let assignment = assign(args.ceremony, &registrants, &locations, seed)
        .map_err(|e| input("cannot seat registrants", e))?;
    let violations = audit(&assignment, &registrants, &locations);

    let reputable: std::collections::HashSet<PublicKey> =
        registrants.iter().filter(|r| r.reputable).map(|r| r.key).collect();
    let admitted_newcomers = assignment
        .meetups
        .iter()
        .flat_map(|m| &m.members)
        .filter(|k| !reputable.contains(k))
        .count();
    let deferred_newcomers = assignment
        .excluded
        .iter()
        .filter(|(_, why)| *why == ExclusionReason::NewbieQuota)
        .count();

    let _ = crate::emit(&format!(
        "ceremony {}: seed {seed}, {} seated in {} meetups, {} newcomers admitted, {} deferred, audit {}",
        args.ceremony,
        assignment.assigned_count(),
        assignment.meetups.len(),
        admitted_newcomers,
        deferred_newcomers,
        if violations.is_empty() { "clean" } else { "FAILED" },
    ));

    let doc = AssignmentDoc {
        seed,
        assignment,
        admitted_newcomers,
        deferred_newcomers,
        violations,
    };
    if let Some(dir) = out {
        fs::create_dir_all(&dir)
            .map_err(|e| input(&format!("cannot create {}", dir.display()), e))?;
        let json = serde_json::to_string_pretty(&doc).expect("assignment serializes");
        fs::write(dir.join("assignment.json"), json + "\n")
            .map_err(|e| input("assignment.json", e))?;

        let mut manifest = Manifest::new("assign-dry-run");
        manifest
            .arg("registrants", args.registrants.display())
            .arg("locations", args.locations.display())
            .arg("ceremony", args.ceremony)
            .arg("min_spacing_m", args.min_spacing_m);
        manifest.seed = Some(seed);
        manifest.input(&args.registrants).map_err(|e| input("registrants digest", e))?;
        manifest.input(&args.locations).map_err(|e| input("locations digest", e))?;
        manifest.output(&dir, "assignment.json").map_err(|e| input("assignment.json", e))?;
        manifest.write(&dir).map_err(|e| input("manifest.json", e))?;
    }

    if !doc.violations.is_empty() {
        return Err(CmdError::Invariant(format!(
            "assignment breaks {} hard rule(s); this is an engine bug",
            doc.violations.len()
        )));
    }
    Ok(())
}

fn read_registrants(path: &PathBuf) -> Result<Vec<Registrant>, CmdError> {
    #[derive(serde::Deserialize)]
    struct Row {
        key: String,
        reputable: bool,
        last_meetup: Option<u32>,
    }
    let file = File::open(path).map_err(|e| input(&path.display().to_string(), e))?;
    let mut out = Vec::new();
    for row in csv::Reader::from_reader(file).deserialize::<Row>() {
        let row = row.map_err(|e| input("registrant file", e))?;
        let bytes = hex::decode(&row.key).map_err(|e| input("registrant key", e))?;
        let bytes: [u8; PUBLIC_KEY_LEN] = bytes
            .try_into()
            .map_err(|_| CmdError::Input(format!("registrant key {} is not 32 bytes", row.key)))?;
        let key = PublicKey::from_bytes(&bytes).map_err(|e| input("registrant key", e))?;
        out.push(Registrant { key, reputable: row.reputable, last_meetup: row.last_meetup });
    }
    Ok(out)
}
