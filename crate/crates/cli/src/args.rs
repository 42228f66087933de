use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use treestab_core::SelectionRule;
use treestab_core::experiments::PerturbationReading;

#[derive(Debug, Parser)]
#[command(
    name = "treestab",
    version,
    about = "Structural distance and stability-aware selection for decision trees"
)]
pub struct Cli {
    /// Master seed; every random step derives its own stream from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Directory receiving outputs and manifest.json.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one CART tree and write it as a JSON document.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 5)]
        max_depth: usize,
        #[arg(long, default_value_t = 5)]
        min_leaf: usize,
        #[arg(long, default_value = "tree.json")]
        out: PathBuf,
    },
    /// Distance between two tree documents.
    Distance {
        first: PathBuf,
        second: PathBuf,
        /// Fixed label-mismatch weight.
        #[arg(long, conflicts_with = "lambda_policy")]
        lambda: Option<f64>,
        /// `2d`: twice the scaling depth (the default).
        #[arg(long, value_enum)]
        lambda_policy: Option<LambdaArg>,
        /// Depth used for the bound; defaults to the deeper tree.
        #[arg(long)]
        scale_depth: Option<usize>,
        /// `matching` adds the per-pair matching table to the report.
        #[arg(long, value_enum, default_value_t = Emit::Summary)]
        emit: Emit,
        #[arg(long, default_value = "distance.json")]
        out: PathBuf,
    },
    /// Run the stability-aware selection procedure.
    Stabilize {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        /// Bootstrap samples per grid cell.
        #[arg(long, default_value_t = 2)]
        bootstraps: usize,
        /// max_auc, min_distance, balanced or epsilon:<ε>.
        #[arg(long, default_value = "epsilon:0.05")]
        selection: SelectionRule,
        /// 2 for (distance, AUC); 3 adds node count.
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(2..=3))]
        objectives: u8,
        /// Share of rows in the first batch.
        #[arg(long, default_value_t = 0.5)]
        batch_fraction: f64,
        #[arg(long, default_value_t = 0.33)]
        holdout: f64,
        /// Carve out a validation split of this share for scoring.
        #[arg(long)]
        validation: Option<f64>,
        /// Members of the bagging baseline.
        #[arg(long, default_value_t = 100)]
        forest_trees: usize,
        #[arg(long, default_value = "report.json")]
        out: PathBuf,
    },
    /// Grid-searched k-fold cross-validated CART.
    CvBaseline {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value = "tree.json")]
        out: PathBuf,
    },
    /// Distance between a tree and randomly perturbed copies of it.
    PerturbDirect {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// start:end:step or a comma list.
        #[arg(long, default_value = "0.1:1.0:0.1")]
        theta: String,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, value_enum, default_value_t = Reading::Symmetric)]
        reading: Reading,
        #[arg(long, default_value = "curve.csv")]
        out: PathBuf,
    },
    /// Distance between a tree and trees refit on partly replaced data.
    PerturbIndirect {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value = "0.2:1.0:0.2")]
        theta: String,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[arg(long, default_value = "curve.csv")]
        out: PathBuf,
    },
    /// Check a finished run against its manifest and print its summary.
    Report { run_dir: PathBuf },
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file, or `builtin:breast-cancer` for the bundled data.
    pub data: String,
    /// JSON schema describing the CSV columns.
    #[arg(long)]
    pub schema: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Depth grid, `a:b` (inclusive) or a comma list.
    #[arg(long, default_value = "3:12")]
    pub depths: String,
    /// Minimum leaf size grid.
    #[arg(long, default_value = "3,5,10,30,50")]
    pub min_leaf: String,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum LambdaArg {
    #[value(name = "2d")]
    TwiceDepth,
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
pub enum Emit {
    Summary,
    Matching,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Reading {
    Symmetric,
    Literal,
}

impl From<Reading> for PerturbationReading {
    fn from(r: Reading) -> Self {
        match r {
            Reading::Symmetric => PerturbationReading::Symmetric,
            Reading::Literal => PerturbationReading::Literal,
        }
    }
}

pub fn parse_int_grid(s: &str) -> Result<Vec<usize>, String> {
    if let Some((a, b)) = s.split_once(':') {
        let a: usize = a.trim().parse().map_err(|_| format!("bad grid '{s}'"))?;
        let b: usize = b.trim().parse().map_err(|_| format!("bad grid '{s}'"))?;
        if a > b {
            return Err(format!("empty grid '{s}'"));
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| format!("bad grid value '{x}'")))
        .collect()
}

/// `start:end:step` (inclusive, values snapped to 1e-9) or a comma list.
pub fn parse_real_grid(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |x: &str| {
        x.trim()
            .parse::<f64>()
            .map_err(|_| format!("bad number '{x}' in '{s}'"))
    };
    match parts.as_slice() {
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if step.is_nan() || step <= 0.0 || b < a {
                return Err(format!("bad range '{s}'"));
            }
            let n = ((b - a) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| ((a + i as f64 * step) * 1e9).round() / 1e9).collect())
        }
        [_] => s.split(',').map(num).collect(),
        _ => Err(format!("expected start:end:step or a comma list, got '{s}'")),
    }
}
