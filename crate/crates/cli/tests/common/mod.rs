//! Helpers for driving the `tunechain` binary from tests.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};
use tunechain_core::fingerprint::encode_wav;

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn tunechain(datadir: &Path, args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_tunechain"))
        .arg("--datadir")
        .arg(datadir)
        .args(args)
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

/// A sine at `freq` Hz, mono 16-bit 44.1 kHz.
pub fn tone_samples(freq: f64, amplitude: f64, seconds: f64) -> Vec<i16> {
    let n = (seconds * 44_100.0) as usize;
    (0..n)
        .map(|i| (amplitude * 32767.0 * (2.0 * std::f64::consts::PI * freq * i as f64 / 44_100.0).sin()).round() as i16)
        .collect()
}

pub fn write_tone(dir: &Path, name: &str, freq: f64, seconds: f64) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, encode_wav(&tone_samples(freq, 0.5, seconds), 1, 44_100)).unwrap();
    p
}

pub fn step(op: &str, args: &[(&str, &str)]) -> Value {
    let args: serde_json::Map<String, Value> = args.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
    json!({"op": op, "args": args})
}

pub fn bind(mut step: Value, name: &str) -> Value {
    step["bind"] = json!(name);
    step
}

pub fn expect(mut step: Value, code: u8) -> Value {
    step["expect"] = json!(code);
    step
}

pub fn write_scenario(path: &Path, steps: &[Value]) {
    std::fs::write(path, serde_json::to_string_pretty(steps).unwrap()).unwrap();
}

/// (author, title, date, downloads, revenue) rows of the revenue report.
pub const REVENUE_ROWS: [(&str, &str, &str, u64, &str); 5] = [
    ("Johnson", "Against all odds-Westlife", "26-Feb-2020 06:03:12am", 5, "$6.85"),
    ("Sean Kingston", "WHY YOU WANNA GO", "21-Feb-2020 17:15:11pm", 1, "$1.37"),
    ("Wydef", "Perfect Gentleman", "21-Feb-2020 11:32:24am", 3, "$4.11"),
    ("Stonebwoy", "Tuff Seed", "21-Feb-2020 11:13:11am", 22, "$30.14"),
    ("Michael", "Street Hustle", "20-Feb-2020 17:51:56pm", 602, "$824.74"),
];

/// Registers the five authors and a listener, uploads one tone per author in
/// table order reversed (oldest first), then buys each file the given
/// number of times.
pub fn revenue_scenario(dir: &Path, downloads: &[u64; 5]) -> Vec<Value> {
    let mut steps = Vec::new();
    steps.push(bind(step("register", &[("email", "fan@example.com"), ("password", "listen")]), "fan"));
    for (i, (author, title, date, _, _)) in REVENUE_ROWS.iter().enumerate().rev() {
        let email = format!("author{i}@example.com");
        let user = format!("author{i}");
        let wav = format!("song{i}.wav");
        write_tone(dir, &wav, 300.0 + 170.0 * i as f64, 1.0);
        steps.push(bind(step("register", &[("email", &email), ("password", "pw")]), &user));
        steps.push(bind(
            step(
                "upload",
                &[("as", &format!("${user}")), ("file", &wav), ("author", author), ("title", title), ("date", date)],
            ),
            &format!("song{i}"),
        ));
    }
    for (i, n) in downloads.iter().enumerate() {
        for _ in 0..*n {
            steps.push(step("download", &[("as", "$fan"), ("root", &format!("$song{i}")), ("out", "last.wav")]));
        }
    }
    steps
}

/// Splits a revenue report into cells; columns are separated by two or more
/// spaces.
pub fn table_rows(report: &str) -> Vec<Vec<String>> {
    report.lines().map(|l| l.split("  ").map(str::trim).filter(|c| !c.is_empty()).map(String::from).collect()).collect()
}
