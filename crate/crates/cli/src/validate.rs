//! `meridian validate` — re-run validation over an exported meetup
//! transcript and print one JSON verdict per participant. No state is
//! consulted beyond the file: the same evidence always yields the same
//! verdicts, which is what lets anyone audit a ceremony offline.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use meridian::meetup::{CeremonyTranscript, MeetupTranscript};
use meridian::validation::{MeetupRegistry, VerifyPolicy};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::manifest::Manifest;
use crate::{input, CmdError};

#[derive(Args)]
pub struct ValidateArgs {
    /// Transcript JSON: a whole ceremony or a single meetup.
    transcript: PathBuf,

    /// Accept placeholder signatures (transcripts from fast-mode runs).
    #[arg(long)]
    trust_provenance: bool,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TranscriptFile {
    Ceremony(CeremonyTranscript),
    Meetup(MeetupTranscript),
}

pub fn cmd(args: ValidateArgs, out: Option<PathBuf>) -> Result<(), CmdError> {
    let text = fs::read_to_string(&args.transcript)
        .map_err(|e| input(&args.transcript.display().to_string(), e))?;
    let parsed: TranscriptFile =
        serde_json::from_str(&text).map_err(|e| input("transcript", e))?;
    let meetups = match parsed {
        TranscriptFile::Ceremony(c) => c.meetups,
        TranscriptFile::Meetup(m) => vec![m],
    };
    let policy = if args.trust_provenance {
        VerifyPolicy::TrustProvenance
    } else {
        VerifyPolicy::VerifySignatures
    };

    let mut lines = Vec::new();
    let mut valid = 0usize;
    let mut total = 0usize;
    for meetup in &meetups {
        let (registry, _) =
            MeetupRegistry::from_transcript(meetup).map_err(|e| input("transcript", e))?;
        let outcome = registry.validate(policy);
        for verdict in &outcome.verdicts {
            let mut line = serde_json::to_value(verdict).expect("verdict serializes");
            let obj = line.as_object_mut().expect("verdict is an object");
            obj.insert("ceremony".into(), json!(outcome.ceremony));
            obj.insert("meetup".into(), json!(outcome.meetup));
            obj.insert("majority_vote".into(), json!(outcome.majority_vote));
            total += 1;
            valid += verdict.valid as usize;
            lines.push(Value::Object(std::mem::take(obj)).to_string());
        }
    }

    for line in &lines {
        if !crate::emit(line) {
            break;
        }
    }
    eprintln!("{valid}/{total} participants valid across {} meetup(s)", meetups.len());

    if let Some(dir) = out {
        fs::create_dir_all(&dir)
            .map_err(|e| input(&format!("cannot create {}", dir.display()), e))?;
        fs::write(dir.join("verdicts.jsonl"), lines.join("\n") + "\n")
            .map_err(|e| input("verdicts.jsonl", e))?;
        let mut manifest = Manifest::new("validate");
        manifest
            .arg("transcript", args.transcript.display())
            .arg("trust_provenance", args.trust_provenance);
        manifest.input(&args.transcript).map_err(|e| input("transcript digest", e))?;
        manifest.output(&dir, "verdicts.jsonl").map_err(|e| input("verdicts.jsonl", e))?;
        manifest.write(&dir).map_err(|e| input("manifest.json", e))?;
    }
    Ok(())
}
