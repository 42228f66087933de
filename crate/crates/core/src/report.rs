//! Output formatting and run manifests.
//!
//! Numbers in reports are rounded to 6 significant digits and printed
//! with Rust's locale-independent formatting. Tree documents are exempt:
//! they keep full precision so they round-trip.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::experiments::Curve;
use crate::ingest::sha256_hex;
use crate::stability::{AggregateRow, Stat};

pub const SIGNIFICANT_DIGITS: usize = 6;

/// `x` rounded to 6 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Shortest text that reads back as `round_sig(x)`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    let r = round_sig(x);
    if r == r.trunc() && r.abs() < 1e15 {
        format!("{}", r as i64)
    } else {
        format!("{r}")
    }
}

/// Rounds every non-integer number in a JSON tree.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64()
                && let Some(r) = serde_json::Number::from_f64(round_sig(x))
            {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Pretty JSON with rounded numbers and a trailing newline.
pub fn report_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_json(&mut v);
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

pub fn curve_csv(curve: &Curve) -> String {
    let mut out = String::from("theta,mean_scaled_distance,std_scaled_distance,n\n");
    for i in 0..curve.theta.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_num(curve.theta[i]),
            fmt_num(curve.mean[i]),
            fmt_num(curve.std[i]),
            curve.n[i]
        );
    }
    out
}

fn mean_paren_std(s: &Stat) -> String {
    format!("{} ({})", fmt_num(s.mean), fmt_num(s.std))
}

pub const TABLE_COLUMNS: [&str; 7] = [
    "method",
    "AUC",
    "Distance (%)",
    "Feat. Import. Std",
    "Feat. in Top-3",
    "Nodes",
    "Tree Depth",
];

fn table_cells(r: &AggregateRow) -> [String; 7] {
    [
        r.method.label().to_string(),
        mean_paren_std(&r.auc),
        r.distance_pct.as_ref().map_or("n/a".into(), mean_paren_std),
        fmt_num(r.importance_std),
        r.top3_features.to_string(),
        mean_paren_std(&r.nodes),
        mean_paren_std(&r.depth),
    ]
}

/// Summary table as CSV, cells formatted `mean (std)`.
pub fn aggregate_csv(rows: &[AggregateRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TABLE_COLUMNS)?;
    for r in rows {
        w.write_record(table_cells(r))?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Report(e.to_string()))?)
        .map_err(|e| Error::Report(e.to_string()))
}

/// Summary table as Markdown.
pub fn aggregate_markdown(rows: &[AggregateRow]) -> String {
    let mut out = format!("| {} |\n", TABLE_COLUMNS.join(" | "));
    out += &format!("|{}\n", "---|".repeat(TABLE_COLUMNS.len()));
    for r in rows {
        out += &format!("| {} |\n", table_cells(r).join(" | "));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<FileDigest> {
        let bytes = std::fs::read(path).map_err(|e| Error::Report(format!("cannot read {}: {e}", path.display())))?;
        Ok(FileDigest {
            path: path.to_path_buf(),
            sha256: sha256_hex(&bytes),
        })
    }

    /// Fails with a report error if the file is missing or has changed.
    pub fn verify(&self) -> Result<()> {
        let now = FileDigest::of(&self.path)?;
        if now.sha256 != self.sha256 {
            return Err(Error::Report(format!(
                "{} changed since the run (digest {} recorded, {} now); refusing to report on stale inputs",
                self.path.display(),
                self.sha256,
                now.sha256
            )));
        }
        Ok(())
    }
}

/// Written beside a command's outputs as `manifest.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub seed: u64,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub tool_version: String,
    /// Excluded from reproducibility comparisons.
    pub wall_clock_seconds: f64,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl RunManifest {
    pub fn read(dir: &Path) -> Result<RunManifest> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::Report(format!("cannot read {}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::write(dir.join(MANIFEST_FILE), report_json(self)?)?;
        Ok(())
    }

    /// True when two manifests describe the same run up to timing.
    pub fn same_run(&self, other: &RunManifest) -> bool {
        self.command == other.command
            && self.config == other.config
            && self.seed == other.seed
            && self.inputs == other.inputs
            && self.tool_version == other.tool_version
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stability::Method;

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt_num(0.123456789), "0.123457");
        assert_eq!(fmt_num(123456789.0), "123457000");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(-0.000012345678), "-0.0000123457");
        assert_eq!(fmt_num(0.35000000000000003), "0.35");
        assert_eq!(round_sig(0.0), 0.0);
    }

    #[test]
    fn json_rounding_leaves_integers() {
        let mut v = serde_json::json!({"a": 0.1234567, "b": [2, 3.99999999], "c": "x"});
        round_json(&mut v);
        assert_eq!(v.to_string(), r#"{"a":0.123457,"b":[2,4.0],"c":"x"}"#);
    }

    #[test]
    fn table_layout() {
        let s = Stat { mean: 0.5, std: 0.0 };
        let row = AggregateRow {
            method: Method::Cv,
            repetitions: 1,
            auc: s,
            distance_pct: None,
            importance_std: 0.0,
            top3_features: 3,
            nodes: Stat { mean: 7.0, std: 0.0 },
            depth: Stat { mean: 2.0, std: 0.0 },
        };
        let csv = aggregate_csv(std::slice::from_ref(&row)).unwrap();
        assert_eq!(
            csv,
            "method,AUC,Distance (%),Feat. Import. Std,Feat. in Top-3,Nodes,Tree Depth\ncv,0.5 (0),n/a,0,3,7 (0),2 (0)\n"
        );
        assert!(aggregate_markdown(&[row]).starts_with("| method | AUC |"));
    }
}
