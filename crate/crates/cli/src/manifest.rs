use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{Command, Failure};

#[derive(Serialize, Deserialize)]
struct Manifest {
    tool: String,
    version: String,
    jobs: Option<usize>,
    command: Command,
}

pub fn default_path(cmd: &Command) -> PathBuf {
    let out = match cmd {
        Command::Lift(a) => Some(&a.out),
        Command::Encode(a) => Some(&a.out),
        Command::Decode(a) => Some(&a.out),
        Command::Ga(a) => Some(&a.out),
        Command::Ber(a) => Some(&a.csv),
        Command::Pexit(_) | Command::Rerun { .. } => None,
    };
    match out {
        Some(p) => {
            let mut s = p.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        }
        None => PathBuf::from(format!("pldpch-{}.manifest.json", name(cmd))),
    }
}

fn name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Lift(_) => "lift",
        Command::Encode(_) => "encode",
        Command::Decode(_) => "decode",
        Command::Pexit(_) => "pexit",
        Command::Ga(_) => "ga",
        Command::Ber(_) => "ber",
        Command::Rerun { .. } => "rerun",
    }
}

pub fn write(path: &Path, cmd: &Command, jobs: Option<usize>) -> Result<(), Failure> {
    let m = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        jobs,
        command: cmd.clone(),
    };
    let text = serde_json::to_string_pretty(&m).map_err(|e| Failure::runtime(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Command, Failure> {
    let text = std::fs::read_to_string(path)?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| Failure::validation(format!("bad manifest: {e}")))?;
    Ok(m.command)
}
