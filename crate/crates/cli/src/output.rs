//! Artifact writers.
//!
//! Output is deterministic byte for byte: floats are rendered with Rust's
//! shortest round-trip formatting and every table has a fixed column
//! order, so re-running a config reproduces identical files.

use std::path::{Path, PathBuf};

use ccsim_core::evolve::TimeSeries;
use ccsim_core::{CancellationRow, ExpansionErrorReport};
use serde::Serialize;

use crate::CliError;

/// Directory all artifacts go to. Precedence: `--output-dir` flag, then
/// the `CCSIM_OUTPUT_DIR` environment variable, then `output.directory`
/// from the config, then the working directory.
pub fn resolve_dir(flag: Option<&Path>, config_dir: Option<&Path>) -> Result<PathBuf, CliError> {
    let dir = if let Some(d) = flag {
        d.to_path_buf()
    } else if let Some(d) = std::env::var_os("CCSIM_OUTPUT_DIR") {
        PathBuf::from(d)
    } else if let Some(d) = config_dir {
        d.to_path_buf()
    } else {
        PathBuf::from(".")
    };
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Config(format!("cannot serialize {name}: {e}")))?;
    text.push('\n');
    std::fs::write(&path, text)?;
    Ok(path)
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    std::fs::write(&path, text)?;
    Ok(path)
}

/// Fixed-contract trajectory table:
/// `t_ns,p1_site1..N,na_site1..N,nb_site1..N,norm,mz`.
pub fn trajectory_csv(series: &TimeSeries) -> String {
    let n = series.n_sites;
    let mut out = String::from("t_ns");
    for prefix in ["p1", "na", "nb"] {
        for site in 1..=n {
            out.push_str(&format!(",{prefix}_site{site}"));
        }
    }
    out.push_str(",norm,mz\n");
    for i in 0..series.len() {
        out.push_str(&format!("{}", series.times[i]));
        for columns in [&series.p1, &series.na, &series.nb] {
            for value in &columns[i] {
                out.push_str(&format!(",{value}"));
            }
        }
        out.push_str(&format!(",{},{}\n", series.norms[i], series.mz[i]));
    }
    out
}

pub fn scan_csv(rows: &[CancellationRow]) -> String {
    let mut out = String::from("ratio,j1,j2,j2_over_j1,lambda1,lambda2\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.ratio, r.j1, r.j2, r.j2_over_j1, r.lambda1, r.lambda2
        ));
    }
    out
}

pub fn expansion_csv(report: &ExpansionErrorReport) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out =
        String::from("separation,exact_pm,exact_zz,closed_pm,closed_zz,rel_err_pm,rel_err_zz\n");
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.separation,
            r.exact_pm,
            r.exact_zz,
            opt(r.closed_pm),
            opt(r.closed_zz),
            opt(r.rel_err_pm),
            opt(r.rel_err_zz)
        ));
    }
    out
}
