use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use hermite_lab::io::{read_json, write_json};

use crate::commands::{Summary, Verdict};
use crate::{Failure, EXIT_MISSING_INPUT};

const COMMANDS: [&str; 6] = ["simulate", "constants", "decompose", "oscillate", "tails", "check-s"];

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Directory holding earlier command outputs.
    #[arg(long, default_value = "hermite-out")]
    pub dir: PathBuf,
}

pub fn report(a: ReportArgs) -> Result<(), Failure> {
    let mut found = Vec::new();
    for c in COMMANDS {
        let p = a.dir.join(format!("{c}.json"));
        if p.exists() {
            found.push(read_json::<Summary>(&p)?);
        }
    }
    if found.is_empty() {
        return Err(Failure {
            code: EXIT_MISSING_INPUT,
            message: format!("no command summaries in {}", a.dir.display()),
        });
    }
    let mut merged: BTreeMap<u32, Vec<serde_json::Value>> = BTreeMap::new();
    for s in &found {
        for (k, vs) in &s.criteria {
            let k: u32 = k.parse().map_err(|_| Failure::config(format!("bad criterion key {k:?}")))?;
            for Verdict { pass, note } in vs {
                merged.entry(k).or_default().push(json!({ "command": s.command, "pass": pass, "note": note }));
            }
        }
    }
    let criteria: BTreeMap<String, serde_json::Value> = (1..=9)
        .map(|k| {
            let entries = merged.remove(&k).unwrap_or_default();
            let status = if entries.is_empty() {
                "not_run"
            } else if entries.iter().all(|e| e["pass"] == true) {
                "pass"
            } else {
                "fail"
            };
            println!("criterion {k}: {status}");
            (k.to_string(), json!({ "status": status, "checks": entries }))
        })
        .collect();
    let out = a.dir.join("report.json");
    write_json(
        &out,
        &json!({ "commands": found.iter().map(|s| s.command.clone()).collect::<Vec<_>>(), "criteria": criteria }),
    )?;
    println!("wrote {}", out.display());
    Ok(())
}
