//! Every command that writes files leaves a `manifest.json` beside them:
//! the normalized arguments, the effective seed, and SHA-256 digests of all
//! inputs and outputs. Re-invoking the command with the manifest's arguments
//! reproduces every output byte for byte — the manifest deliberately records
//! no clocks, hostnames or absolute output paths.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    /// Tool name and version that produced the outputs.
    pub tool: String,
    pub command: String,
    /// Flag values, normalized. The output directory is omitted on purpose:
    /// the manifest's own location is the output directory, and recording
    /// it would make otherwise identical runs differ.
    pub args: BTreeMap<String, String>,
    /// The seed actually used, whether given or drawn from entropy.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Input path as given → SHA-256 of its content.
    pub inputs: BTreeMap<String, String>,
    /// Output file name → SHA-256 of its content.
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str) -> Manifest {
        Manifest {
            tool: format!("meridian {}", env!("CARGO_PKG_VERSION")),
            command: command.to_string(),
            args: BTreeMap::new(),
            seed: None,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn arg(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.args.insert(key.to_string(), value.to_string());
        self
    }

    pub fn input(&mut self, path: &Path) -> io::Result<&mut Self> {
        let digest = sha256_file(path)?;
        self.inputs.insert(path.display().to_string(), digest);
        Ok(self)
    }

    /// Digests `dir/name`, which must already be written.
    pub fn output(&mut self, dir: &Path, name: &str) -> io::Result<&mut Self> {
        let digest = sha256_file(&dir.join(name))?;
        self.outputs.insert(name.to_string(), digest);
        Ok(self)
    }

    pub fn write(&self, dir: &Path) -> io::Result<()> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(dir.join(MANIFEST_FILE), json + "\n")
    }
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let mut file = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}
