//! Date rendering and the revenue table.

use chrono::{DateTime, NaiveDateTime};
use tunechain_core::contract::{format_cents, RevenueRow};

const DATE_FORMAT: &str = "%d-%b-%Y %H:%M:%S";

/// Renders UTC seconds as `26-Feb-2020 06:03:12am`. The hour stays on the
/// 24-hour clock with the am/pm suffix appended, as in the catalog screens.
pub fn format_date(secs: u64) -> String {
    match DateTime::from_timestamp(secs as i64, 0) {
        Some(t) => t.format("%d-%b-%Y %H:%M:%S%P").to_string(),
        None => secs.to_string(),
    }
}

/// Accepts either UTC seconds or the [`format_date`] rendering. The am/pm
/// suffix is optional and must agree with the hour when present.
pub fn parse_date(text: &str) -> Option<u64> {
    let text = text.trim();
    if let Ok(secs) = text.parse::<u64>() {
        return Some(secs);
    }
    let lower = text.to_ascii_lowercase();
    let (body, suffix) = match lower.strip_suffix("am").or_else(|| lower.strip_suffix("pm")) {
        Some(body) => (body.trim_end(), Some(&lower[lower.len() - 2..])),
        None => (lower.as_str(), None),
    };
    let t = NaiveDateTime::parse_from_str(body, DATE_FORMAT).ok()?.and_utc();
    if let Some(s) = suffix {
        let pm = t.format("%P").to_string();
        if pm != s {
            return None;
        }
    }
    u64::try_from(t.timestamp()).ok()
}

pub fn revenue_table(rows: &[RevenueRow]) -> String {
    let header = ["#", "Author", "Title", "Date Uploaded", "Downloads", "Revenue"].map(String::from);
    let mut cells = vec![header.to_vec()];
    for (i, r) in rows.iter().enumerate() {
        cells.push(vec![
            (i + 1).to_string(),
            r.author.clone(),
            r.title.clone(),
            format_date(r.uploaded_at),
            r.downloads.to_string(),
            format_cents(r.revenue_cents),
        ]);
    }
    let mut widths = [0usize; 6];
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    for row in &cells {
        let mut line = String::new();
        for (i, (c, w)) in row.iter().zip(widths).enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            // numbers right-aligned
            if i == 0 || i >= 4 {
                line.push_str(&format!("{c:>w$}"));
            } else {
                line.push_str(&format!("{c:<w$}"));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}
