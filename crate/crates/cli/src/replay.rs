//! Scenario files: a JSON list of steps run in order against one session.
//!
//! Progress is saved in the datadir after every step, so re-running the
//! same scenario after an interruption continues where it stopped.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tunechain_core::canonical::{from_canonical_str, to_canonical_string};
use tunechain_core::hash::sha256;

use crate::command::{Command, Step};
use crate::exec::{code, store_error, Outcome, Session};
use crate::store::write_atomic;

const PROGRESS_FILE: &str = "replay.json";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Progress {
    scenario: String,
    next: usize,
    vars: BTreeMap<String, String>,
}

pub fn load_scenario(path: &Path) -> Result<(Vec<Step>, String), Outcome> {
    let bytes = fs::read(path).map_err(|e| Outcome::fail(code::NO_INPUT, format!("{}: {e}", path.display())))?;
    let steps: Vec<Step> = serde_json::from_slice(&bytes)
        .map_err(|e| Outcome::fail(code::USAGE, format!("{}: not a scenario: {e}", path.display())))?;
    Ok((steps, sha256(&bytes).to_hex()))
}

fn substitute(
    args: &BTreeMap<String, String>,
    vars: &BTreeMap<String, String>,
) -> Result<BTreeMap<String, String>, String> {
    args.iter()
        .map(|(k, v)| {
            let v = match v.strip_prefix('$') {
                Some(name) if !name.starts_with('$') => {
                    vars.get(name).cloned().ok_or_else(|| format!("unbound variable `${name}`"))?
                }
                // `$$x` is a literal `$x`
                Some(rest) => rest.to_string(),
                None => v.clone(),
            };
            Ok((k.clone(), v))
        })
        .collect()
}

/// Runs `path` from its saved position, at most `limit` steps.
pub fn replay(session: &mut Session, path: &Path, limit: Option<usize>) -> Outcome {
    let (steps, digest) = match load_scenario(path) {
        Ok(s) => s,
        Err(o) => return o,
    };
    let base = path.parent().unwrap_or(Path::new("."));
    let progress_path = session.dir.path(PROGRESS_FILE);
    let mut progress = fs::read_to_string(&progress_path)
        .ok()
        .and_then(|t| from_canonical_str::<Progress>(t.trim_end()).ok())
        .filter(|p| p.scenario == digest)
        .unwrap_or(Progress { scenario: digest, ..Progress::default() });

    let mut report = Outcome::default();
    let end = limit.map_or(steps.len(), |l| steps.len().min(progress.next.saturating_add(l)));
    while progress.next < end {
        let i = progress.next;
        let step = &steps[i];
        let cmd = substitute(&step.args, &progress.vars).and_then(|args| Command::from_step(&step.op, &args, base));
        let out = match cmd {
            Ok(cmd) => session.execute(&cmd),
            Err(e) => {
                report.code = code::USAGE;
                report.stderr.push_str(&format!("step {i} ({}): {e}\n", step.op));
                return report;
            }
        };
        report.stdout.push_str(&out.stdout);
        report.stderr.push_str(&out.stderr);

        progress.next = i + 1;
        let expected = step.expect.unwrap_or(code::OK);
        let mut failed = None;
        if out.code != expected {
            failed = Some(format!("step {i} ({}): exit {} where {expected} was expected", step.op, out.code));
        } else if let Some(name) = &step.bind {
            match &out.value {
                Some(v) => {
                    progress.vars.insert(name.clone(), v.clone());
                }
                None => failed = Some(format!("step {i} ({}): nothing to bind to `{name}`", step.op)),
            }
        }
        if let Err(e) = write_atomic(&progress_path, format!("{}\n", to_canonical_string(&progress)).as_bytes()) {
            let mut o = store_error(&e);
            o.stdout = report.stdout;
            return o;
        }
        if let Some(msg) = failed {
            report.code = code::SCENARIO_MISMATCH;
            report.stderr.push_str(&msg);
            report.stderr.push('\n');
            return report;
        }
    }
    report.stderr.push_str(&format!("replayed {} of {} steps\n", progress.next, steps.len()));
    report
}

/// Appends `step` to the scenario at `path`, creating it if needed.
pub fn record(path: &Path, step: Step) -> Result<(), String> {
    let mut steps: Vec<Step> = match fs::read(path) {
        Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| format!("{}: {e}", path.display()))?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(format!("{}: {e}", path.display())),
    };
    steps.push(step);
    write_atomic(path, format!("{}\n", to_canonical_string(&steps)).as_bytes()).map_err(|e| e.to_string())
}
