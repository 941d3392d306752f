//! Deterministic CSV/JSON rendering and all-or-nothing file writes.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use squid_core::scenarios::MeasureRow;

use crate::config::RunConfig;

pub const VERSION: &str = concat!("squid-sim ", env!("CARGO_PKG_VERSION"));

pub const CSV_HEADER: &str = "t,P1,P2,P3,P4,EF1,EF2,EF3,EF_squid,EF_ab,Cl1_squid,Cl1_ab,norm_drift";

/// Allowed deviation of `P1 + P2 + P3 + P4` from 1 in a written row.
pub const ROW_SUM_TOL: f64 = 1e-8;

/// `%.12g`: 12 significant digits, trailing zeros dropped, exponent form
/// outside `1e-4 ≤ |x| < 1e12`.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.11e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{}{:02}", trim_zeros(mant), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Render the time-series table. Fails on the first row whose populations
/// do not sum to one within [`ROW_SUM_TOL`].
pub fn timeseries_csv(rows: &[MeasureRow]) -> Result<String, String> {
    let mut out = String::with_capacity(rows.len() * 160);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let sum: f64 = r.populations.iter().sum();
        if !((sum - 1.0).abs() <= ROW_SUM_TOL) {
            return Err(format!("populations at t = {} sum to {sum}, outside 1 ± {ROW_SUM_TOL:e}", r.t));
        }
        let fields = [
            r.t,
            r.populations[0],
            r.populations[1],
            r.populations[2],
            r.populations[3],
            r.ef[0],
            r.ef[1],
            r.ef[2],
            r.ef_squid,
            r.ef_ab,
            r.cl1_squid,
            r.cl1_ab,
            r.norm_drift,
        ];
        let line: Vec<String> = fields.iter().map(|&x| format_sig(x)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    Ok(out)
}

#[derive(Serialize)]
pub struct ReportDocument<'a, R: Serialize> {
    pub version: &'static str,
    pub complete: bool,
    pub scenario: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub report: &'a R,
    pub config: &'a RunConfig,
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report is serializable");
    s.push('\n');
    s
}

/// Write every file or none: contents go to hidden temporaries in `dir`
/// first and are renamed into place only after all of them were written.
pub fn write_all_or_nothing(dir: &Path, files: &[(&str, String)]) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let pid = std::process::id();
    let mut temps: Vec<(PathBuf, PathBuf)> = Vec::new();
    let result = (|| -> io::Result<()> {
        for (name, body) in files {
            let tmp = dir.join(format!(".{name}.{pid}.tmp"));
            temps.push((tmp.clone(), dir.join(name)));
            let mut f = fs::File::create(&tmp)?;
            f.write_all(body.as_bytes())?;
            f.sync_all()?;
        }
        Ok(())
    })();
    if let Err(e) = result {
        for (tmp, _) in &temps {
            let _ = fs::remove_file(tmp);
        }
        return Err(e);
    }
    let mut written = Vec::new();
    for (tmp, dest) in &temps {
        if let Err(e) = fs::rename(tmp, dest) {
            for (t, _) in &temps {
                let _ = fs::remove_file(t);
            }
            for d in &written {
                let _ = fs::remove_file(d);
            }
            return Err(e);
        }
        written.push(dest.clone());
    }
    Ok(written)
}
