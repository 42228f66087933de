use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{Value, json};
use treestab_core::experiments::{Curve, PerturbationConfig, direct_sensitivity, indirect_sensitivity};
use treestab_core::ingest::{self, breast_cancer, sha256_hex};
use treestab_core::metrics::auc;
use treestab_core::report::{
    FileDigest, RunManifest, aggregate_csv, aggregate_markdown, curve_csv, fmt_num, report_json,
};
use treestab_core::stability::{Grid, aggregate, cv_baseline};
use treestab_core::{
    Dataset, DistanceConfig, Error, LambdaPolicy, PipelineConfig, PipelineReport, TrainConfig, run_pipeline, serialize,
    train_tree, tree_distance,
};

use crate::Failure;
use crate::args::{Cli, Command, DataArgs, Emit, GridArgs, parse_int_grid, parse_real_grid};

const BUILTIN: &str = "builtin:breast-cancer";

fn builtin_digest() -> String {
    sha256_hex(format!("{}{}", breast_cancer::CSV, breast_cancer::SCHEMA).as_bytes())
}

fn load(data: &DataArgs) -> Result<(Dataset, Vec<FileDigest>), Failure> {
    if data.data == BUILTIN {
        let digest = FileDigest {
            path: PathBuf::from(BUILTIN),
            sha256: builtin_digest(),
        };
        return Ok((breast_cancer::load()?, vec![digest]));
    }
    let schema = data
        .schema
        .as_ref()
        .ok_or_else(|| Failure::Usage(format!("--schema is required for {}", data.data)))?;
    let csv = PathBuf::from(&data.data);
    let got = ingest::ingest(&csv, schema)?;
    if got.clamped > 0 {
        eprintln!("warning: {} values clamped to their schema range", got.clamped);
    }
    Ok((got.dataset, vec![FileDigest::of(&csv)?, FileDigest::of(schema)?]))
}

fn grid(args: &GridArgs) -> Result<(Vec<usize>, Vec<usize>), Failure> {
    Ok((
        parse_int_grid(&args.depths).map_err(Failure::Usage)?,
        parse_int_grid(&args.min_leaf).map_err(Failure::Usage)?,
    ))
}

/// Files a command produces, written together with the manifest.
struct Run<'a> {
    cli: &'a Cli,
    command: &'static str,
    start: Instant,
    outputs: Vec<(PathBuf, String)>,
}

impl Run<'_> {
    fn add(&mut self, name: impl Into<PathBuf>, content: String) {
        self.outputs.push((name.into(), content));
    }

    fn finish(self, config: Value, inputs: Vec<FileDigest>) -> Result<(), Failure> {
        let dir = &self.cli.out_dir;
        fs::create_dir_all(dir)?;
        let mut digests = Vec::new();
        for (name, content) in &self.outputs {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(&path, content)?;
            digests.push(FileDigest {
                path: name.clone(),
                sha256: sha256_hex(content.as_bytes()),
            });
        }
        RunManifest {
            command: self.command.to_string(),
            config,
            seed: self.cli.seed,
            inputs,
            outputs: digests,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds: self.start.elapsed().as_secs_f64(),
        }
        .write(dir)?;
        Ok(())
    }
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    let mut run = Run {
        cli,
        command: "",
        start: Instant::now(),
        outputs: Vec::new(),
    };
    match &cli.command {
        Command::Train {
            data,
            max_depth,
            min_leaf,
            out,
        } => {
            run.command = "train";
            let (ds, inputs) = load(data)?;
            let cfg = TrainConfig {
                max_depth: *max_depth,
                min_samples_leaf: *min_leaf,
                seed: cli.seed,
                max_features: None,
            };
            let tree = train_tree(&ds, &cfg)?;
            print!(
                "depth {}, nodes {}, leaves {}",
                tree.depth(),
                tree.node_count(),
                tree.leaf_count()
            );
            if ds.class_count() == 2 {
                print!(", training AUC {}", fmt_num(auc(&tree, &ds)?));
            }
            println!();
            run.add(out, serialize::to_json(&tree, ds.space())?);
            run.finish(json!({"train": cfg, "out": out}), inputs)
        }
        Command::Distance {
            first,
            second,
            lambda,
            lambda_policy: _,
            scale_depth,
            emit,
            out,
        } => {
            run.command = "distance";
            let read = |p: &Path| -> Result<_, Failure> {
                let text = fs::read_to_string(p)
                    .map_err(|e| Failure::Data(Error::Input(format!("cannot read {}: {e}", p.display()))))?;
                Ok(serialize::from_json(&text)?)
            };
            let (t1, s1) = read(first)?;
            let (t2, s2) = read(second)?;
            if s1 != s2 {
                return Err(Failure::Data(Error::Input(
                    "the two trees were built against different feature spaces".into(),
                )));
            }
            let cfg = DistanceConfig {
                lambda: lambda.map_or(LambdaPolicy::TwiceScaleDepth, LambdaPolicy::Fixed),
                scale_depth: *scale_depth,
            };
            let m = tree_distance(&t1, &t2, &s1, &cfg)?;
            println!(
                "scaled distance {} (raw {}, bound {}, depth {}, lambda {})",
                fmt_num(m.scaled_distance),
                fmt_num(m.raw_distance),
                fmt_num(m.upper_bound),
                m.scale_depth,
                fmt_num(m.lambda)
            );
            let mut doc = json!({
                "raw_distance": m.raw_distance,
                "scaled_distance": m.scaled_distance,
                "upper_bound": m.upper_bound,
                "scale_depth": m.scale_depth,
                "lambda": m.lambda,
                "matched_pairs": m.matched.len(),
                "unmatched_paths": m.unmatched.len(),
            });
            if *emit == Emit::Matching {
                doc["matched"] = json!(m.matched);
                doc["unmatched"] = json!(m.unmatched);
            }
            run.add(out, report_json(&doc)?);
            let inputs = vec![FileDigest::of(first)?, FileDigest::of(second)?];
            run.finish(
                json!({"distance": cfg, "emit": format!("{emit:?}").to_lowercase(), "out": out}),
                inputs,
            )
        }
        Command::Stabilize {
            data,
            grid: g,
            reps,
            bootstraps,
            selection,
            objectives,
            batch_fraction,
            holdout,
            validation,
            forest_trees,
            out,
        } => {
            run.command = "stabilize";
            let (depths, min_leaf) = grid(g)?;
            let cfg = PipelineConfig {
                batch_fraction: *batch_fraction,
                grid: Grid {
                    depths,
                    min_leaf,
                    bootstraps: *bootstraps,
                },
                holdout_fraction: *holdout,
                validation_fraction: *validation,
                repetitions: *reps,
                seed: cli.seed,
                distance: DistanceConfig {
                    scale_depth: None,
                    ..Default::default()
                },
                selection: *selection,
                three_objectives: *objectives == 3,
                cv_folds: g.folds,
                forest_trees: *forest_trees,
            };
            cfg.validate()?;
            let (ds, inputs) = load(data)?;
            let report = run_pipeline(&ds, &cfg)?;
            print!("{}", aggregate_markdown(&report.aggregate));
            for s in &report.skipped {
                println!("repetition {} skipped: {}", s.rep, s.reason);
            }
            run.add(out, report_json(&report)?);
            run.add("table.csv", aggregate_csv(&report.aggregate)?);
            run.add("repetitions.csv", repetitions_csv(&report));
            for (r, t) in report.repetitions.iter().zip(&report.selected_trees) {
                run.add(
                    format!("trees/selected-rep{:02}.json", r.rep),
                    serialize::to_json(t, ds.space())?,
                );
            }
            run.finish(json!({"pipeline": cfg, "out": out}), inputs)
        }
        Command::CvBaseline { data, grid: g, out } => {
            run.command = "cv-baseline";
            let (depths, min_leaf) = grid(g)?;
            let (ds, inputs) = load(data)?;
            let r = cv_baseline(&ds, &depths, &min_leaf, g.folds, cli.seed)?;
            println!(
                "best max_depth {}, min_leaf {} (mean fold AUC {})",
                r.best.0,
                r.best.1,
                fmt_num(r.cells.iter().map(|c| c.mean_auc).fold(f64::MIN, f64::max))
            );
            run.add(out, serialize::to_json(&r.tree, ds.space())?);
            run.add("cv.json", report_json(&json!({"best": r.best, "cells": r.cells}))?);
            run.finish(
                json!({"depths": depths, "min_leaf": min_leaf, "folds": g.folds, "out": out}),
                inputs,
            )
        }
        Command::PerturbDirect {
            data,
            grid: g,
            theta,
            reps,
            reading,
            out,
        } => {
            run.command = "perturb-direct";
            let cfg = PerturbationConfig {
                reading: (*reading).into(),
                ..experiment_config(PerturbationConfig::direct(), cli, g, theta, *reps)?
            };
            let (ds, inputs) = load(data)?;
            let curve = direct_sensitivity(&ds, &cfg)?;
            emit_curve(run, &curve, cfg, out, inputs)
        }
        Command::PerturbIndirect {
            data,
            grid: g,
            theta,
            reps,
            out,
        } => {
            run.command = "perturb-indirect";
            let cfg = experiment_config(PerturbationConfig::indirect(), cli, g, theta, *reps)?;
            let (ds, inputs) = load(data)?;
            let curve = indirect_sensitivity(&ds, &cfg)?;
            emit_curve(run, &curve, cfg, out, inputs)
        }
        Command::Report { run_dir } => report(run_dir),
    }
}

fn experiment_config(
    base: PerturbationConfig,
    cli: &Cli,
    g: &GridArgs,
    theta: &str,
    reps: usize,
) -> Result<PerturbationConfig, Failure> {
    let (depths, min_leaf) = grid(g)?;
    let mut distance = base.distance;
    if distance.scale_depth.is_some() {
        distance.scale_depth = depths.iter().copied().max();
    }
    let cfg = PerturbationConfig {
        grid: parse_real_grid(theta).map_err(Failure::Usage)?,
        repetitions: reps,
        seed: cli.seed,
        distance,
        depths,
        min_leaf,
        cv_folds: g.folds,
        ..base
    };
    cfg.validate()?;
    Ok(cfg)
}

const SAMPLES_FILE: &str = "samples.json";

fn emit_curve(
    mut run: Run<'_>,
    curve: &Curve,
    cfg: PerturbationConfig,
    out: &Path,
    inputs: Vec<FileDigest>,
) -> Result<(), Failure> {
    print!("{}", curve_csv(curve));
    println!("spearman(theta, mean) = {}", fmt_num(curve.trend()));
    run.add(out, curve_csv(curve));
    run.add(
        SAMPLES_FILE,
        report_json(&json!({"theta": curve.theta, "samples": curve.samples}))?,
    );
    run.finish(json!({"experiment": cfg, "out": out}), inputs)
}

fn repetitions_csv(report: &PipelineReport) -> String {
    let mut out = String::from("rep,method,auc,distance,nodes,depth,frontier_size\n");
    for r in &report.repetitions {
        for m in &r.methods {
            out += &format!(
                "{},{},{},{},{},{},{}\n",
                r.rep,
                m.method.label(),
                fmt_num(m.auc),
                m.distance.map_or(String::new(), fmt_num),
                m.nodes,
                m.depth,
                r.frontier.len()
            );
        }
    }
    out
}

fn report(dir: &Path) -> Result<(), Failure> {
    let manifest = RunManifest::read(dir)?;
    for input in &manifest.inputs {
        if input.path == Path::new(BUILTIN) {
            if input.sha256 != builtin_digest() {
                return Err(Error::Report("bundled dataset differs from the one used by this run".into()).into());
            }
        } else {
            input.verify()?;
        }
    }
    for output in &manifest.outputs {
        FileDigest {
            path: dir.join(&output.path),
            sha256: output.sha256.clone(),
        }
        .verify()?;
    }
    let out = manifest.config["out"]
        .as_str()
        .ok_or_else(|| Error::Report("manifest does not name the primary output".into()))?;
    let read = |name: &str| -> Result<String, Failure> { Ok(fs::read_to_string(dir.join(name))?) };
    println!(
        "{} run verified ({} inputs, {} outputs)",
        manifest.command,
        manifest.inputs.len(),
        manifest.outputs.len()
    );
    match manifest.command.as_str() {
        "stabilize" => {
            let report: PipelineReport = serde_json::from_str(&read(out)?).map_err(Error::from)?;
            let recomputed = aggregate(&report.repetitions);
            let stored = serde_json::to_value(&report.aggregate).map_err(Error::from)?;
            let fresh = serde_json::to_value(&recomputed).map_err(Error::from)?;
            if let Some(diff) = mismatch(&stored, &fresh, "aggregate") {
                return Err(Failure::Internal(format!(
                    "aggregate table does not match the per-repetition details ({diff})"
                )));
            }
            print!("{}", aggregate_markdown(&report.aggregate));
            if !report.skipped.is_empty() {
                println!("{} repetition(s) skipped", report.skipped.len());
            }
        }
        "perturb-direct" | "perturb-indirect" => {
            let samples: Value = serde_json::from_str(&read(SAMPLES_FILE)?).map_err(Error::from)?;
            let curve_text = read(out)?;
            let rows: Vec<Vec<f64>> = curve_text
                .lines()
                .skip(1)
                .map(|l| l.split(',').map(|x| x.parse().unwrap_or(f64::NAN)).collect())
                .collect();
            let samples: Vec<Vec<f64>> = serde_json::from_value(samples["samples"].clone()).map_err(Error::from)?;
            for (g, row) in rows.iter().enumerate() {
                let col: Vec<f64> = samples.iter().map(|s| s[g]).collect();
                let (mean, std) = treestab_core::metrics::mean_std(&col);
                if let Some(diff) = mismatch(&json!([row[1], row[2]]), &json!([mean, std]), &format!("row {g}")) {
                    return Err(Failure::Internal(format!("curve does not match its samples ({diff})")));
                }
            }
            print!("{curve_text}");
        }
        _ => {
            for o in &manifest.outputs {
                println!("{}", o.path.display());
            }
        }
    }
    Ok(())
}

/// First location where two JSON trees differ, numbers compared with
/// 6-significant-digit slack.
fn mismatch(a: &Value, b: &Value, at: &str) -> Option<String> {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap_or(f64::NAN), y.as_f64().unwrap_or(f64::NAN));
            ((x - y).abs() > 1e-4 * x.abs().max(y.abs()) + 1e-5).then(|| format!("{at}: {x} vs {y}"))
        }
        (Value::Array(x), Value::Array(y)) if x.len() == y.len() => x
            .iter()
            .zip(y)
            .enumerate()
            .find_map(|(i, (p, q))| mismatch(p, q, &format!("{at}[{i}]"))),
        (Value::Object(x), Value::Object(y)) if x.len() == y.len() => x.iter().find_map(|(k, v)| match y.get(k) {
            Some(w) => mismatch(v, w, &format!("{at}.{k}")),
            None => Some(format!("{at}.{k}: missing")),
        }),
        _ => (a != b).then(|| format!("{at}: {a} vs {b}")),
    }
}
