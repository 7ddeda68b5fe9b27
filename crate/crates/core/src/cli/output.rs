//! CSV and manifest writers.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sim::{Aggregate, SimConfig, TrialResult};

/// Shortest-form rendering with `digits` significant digits, `%g` style:
/// trailing zeros dropped, scientific notation outside `[1e-5, 10^digits)`.
pub fn fmt_sig(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Lossless float field.
pub fn fmt17(v: f64) -> String {
    fmt_sig(v, 17)
}

pub const QOS_HEADER: &str = "policy,t,mean_sinr_db,mean_db_of_trials,std_db,n_trials";
pub const TRAJECTORY_HEADER: &str = "trial,policy,relay,t,x,y";

pub fn qos_csv(agg: &Aggregate) -> String {
    let mut out = String::from(QOS_HEADER);
    out.push('\n');
    for (p, rows) in agg.policies.iter().zip(&agg.stats) {
        for s in rows {
            let _ = writeln!(
                out,
                "{p},{},{},{},{},{}",
                s.t,
                fmt17(s.mean_sinr_db),
                fmt17(s.mean_db_of_trials),
                fmt17(s.std_db),
                s.n_trials
            );
        }
    }
    out
}

pub fn trajectories_csv(cfg: &SimConfig, trials: &[TrialResult]) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for tr in trials {
        for trace in &tr.traces {
            for relay in 0..cfg.sim.n_relays {
                for (s, cells) in trace.cells.iter().enumerate() {
                    let p = cfg.workspace.center(cells[relay]);
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        tr.index,
                        trace.policy,
                        relay,
                        s + 1,
                        fmt17(p.x),
                        fmt17(p.y)
                    );
                }
            }
        }
    }
    out
}

/// Record of one `simulate` invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub digest: String,
    pub seed: u64,
    pub version: String,
    pub runtime_seconds: f64,
    pub qos: PathBuf,
    pub trajectories: PathBuf,
    /// Effective configuration after overrides.
    pub config: SimConfig,
}

pub fn write_manifest(path: &Path, m: &RunManifest) -> Result<()> {
    let mut text = serde_json::to_string_pretty(m)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
