//! Scenario runner behind the `naeq` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod manifest;
pub mod table;
pub mod tasks;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::Value;

use crate::config::{field, ScenarioConfig, Task};
use crate::error::CliError;
use crate::manifest::{OutputFile, RunManifest};
use crate::table::{Cell, Table};
use crate::tasks::{Output, Prepared};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    /// Reject configs without a sweep block.
    pub require_sweep: bool,
}

/// One grid point: the override values and the prepared task.
struct Point {
    values: Vec<Value>,
    prepared: Prepared,
}

fn grid_points(cfg: &ScenarioConfig, seed: Option<u64>) -> Result<(Vec<String>, Vec<Point>), CliError> {
    let Some(sweep) = &cfg.sweep else {
        return Err(field("sweep", "task sweep needs a sweep block"));
    };
    if sweep.grid.is_empty() || sweep.grid.len() > 2 {
        return Err(field("sweep.grid", "need one or two grid axes"));
    }
    let Value::Object(base) = &cfg.game else {
        return Err(field("game", "expected an object"));
    };
    for (k, axis) in sweep.grid.iter().enumerate() {
        if axis.values.is_empty() {
            return Err(field(format!("sweep.grid[{k}].values"), "grid is empty"));
        }
        if axis.param == "kind" {
            return Err(field(format!("sweep.grid[{k}].param"), "the game kind cannot be swept"));
        }
    }
    let names: Vec<String> = sweep.grid.iter().map(|a| a.param.clone()).collect();
    let mut combos: Vec<Vec<Value>> = vec![Vec::new()];
    for axis in &sweep.grid {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                axis.values.iter().map(move |v| {
                    let mut c = c.clone();
                    c.push(v.clone());
                    c
                })
            })
            .collect();
    }
    let mut points = Vec::with_capacity(combos.len());
    for (k, values) in combos.into_iter().enumerate() {
        let mut game = base.clone();
        for (name, v) in names.iter().zip(&values) {
            game.insert(name.clone(), v.clone());
        }
        let at = format!("sweep point {k} ({})", describe(&names, &values));
        let prepared = tasks::prepare(cfg, sweep.task, &Value::Object(game), &at, seed)?;
        points.push(Point { values, prepared });
    }
    Ok((names, points))
}

fn describe(names: &[String], values: &[Value]) -> String {
    names
        .iter()
        .zip(values)
        .map(|(n, v)| format!("{n}={v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn value_cell(v: &Value) -> Cell {
    match v {
        Value::Number(n) => n.as_f64().map_or(Cell::Empty, Cell::Num),
        Value::String(s) => Cell::Text(s.clone()),
        Value::Bool(b) => Cell::Bool(*b),
        other => Cell::Text(other.to_string()),
    }
}

/// Stacks per-point tables, prefixing grid values and a status column.
/// Failed points keep their row with the error as status.
fn stack(names: &[String], points: &[Point], results: Vec<Result<Output, CliError>>) -> Output {
    let mut out = Output::default();
    let mut status_header = names.to_vec();
    status_header.push("status".into());
    let mut status = Table::with_header("points", status_header);
    let mut order: Vec<String> = Vec::new();
    let mut stacked: Vec<Table> = Vec::new();
    for res in results.iter().flatten() {
        for t in &res.tables {
            if !order.contains(&t.name) {
                let mut h = names.to_vec();
                h.push("status".into());
                h.extend(t.header.iter().cloned());
                order.push(t.name.clone());
                stacked.push(Table::with_header(&t.name, h));
            }
        }
    }
    for (p, res) in points.iter().zip(&results) {
        let prefix: Vec<Cell> = p.values.iter().map(value_cell).collect();
        match res {
            Ok(o) => {
                let mut row = prefix.clone();
                row.push("ok".into());
                status.push(row);
                for t in &o.tables {
                    let k = order.iter().position(|n| n == &t.name).expect("collected above");
                    for r in &t.rows {
                        let mut row = prefix.clone();
                        row.push("ok".into());
                        row.extend(r.iter().cloned());
                        stacked[k].push(row);
                    }
                }
                let d = describe(names, &p.values);
                out.warnings.extend(o.warnings.iter().map(|w| format!("{d}: {w}")));
            }
            Err(e) => {
                let mut row = prefix.clone();
                row.push(e.to_string().into());
                status.push(row.clone());
                for t in &mut stacked {
                    let mut r = row.clone();
                    r.resize(t.header.len(), Cell::Empty);
                    t.push(r);
                }
                out.warnings.push(format!("{}: {e}", describe(names, &p.values)));
            }
        }
    }
    out.tables.push(status);
    out.tables.extend(stacked);
    out
}

fn write_file(dir: &Path, name: &str, body: &[u8]) -> Result<OutputFile, CliError> {
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    Ok(OutputFile::describe(name, body))
}

/// Loads, validates and executes a scenario file.
pub fn run_scenario(path: &Path, opts: &RunOptions) -> Result<RunManifest, CliError> {
    let started = chrono::Utc::now();
    let bytes = fs::read(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| field("<file>", "config is not UTF-8"))?;
    let mut cfg = config::parse(&text, path)?;
    if let Some(s) = opts.seed {
        cfg.seed = Some(s);
    }
    if opts.require_sweep && cfg.task != Task::Sweep {
        return Err(field("task", "`sweep` needs a config with task \"sweep\""));
    }
    if cfg.name.is_empty() || cfg.name.contains(['/', '\\']) {
        return Err(field("name", "must be a non-empty file-name-safe string"));
    }
    if opts.workers == Some(0) {
        return Err(field("--workers", "must be at least 1"));
    }
    let seed = cfg.seed;

    // Everything is validated before the first solve.
    let sweep = if cfg.task == Task::Sweep {
        Some(grid_points(&cfg, seed)?)
    } else {
        None
    };
    let single = match &sweep {
        None => Some(tasks::prepare(&cfg, cfg.task, &cfg.game, "game", seed)?),
        Some(_) => None,
    };

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = opts.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::io("starting worker pool", std::io::Error::other(e.to_string())))?;

    let output = pool.install(|| -> Result<Output, CliError> {
        match (&sweep, &single) {
            (Some((names, points)), _) => {
                let results: Vec<Result<Output, CliError>> =
                    points.par_iter().map(|p| tasks::run(&cfg, &p.prepared)).collect();
                Ok(stack(names, points, results))
            }
            (None, Some(p)) => tasks::run(&cfg, p),
            (None, None) => unreachable!("either a sweep or a single task is prepared"),
        }
    })?;

    let dir = opts
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
    fs::create_dir_all(&dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;

    let mut files = Vec::new();
    for t in &output.tables {
        files.push(write_file(&dir, &format!("{}.csv", t.name), t.to_csv().as_bytes())?);
    }
    for (name, v) in &output.json {
        let body = serde_json::to_vec_pretty(v).expect("JSON values serialize");
        files.push(write_file(&dir, &format!("{name}.json"), &body)?);
    }
    let resolved = serde_json::to_vec_pretty(&cfg).expect("config serializes");
    files.push(write_file(&dir, "resolved_config.json", &resolved)?);

    let manifest = RunManifest::new(&cfg, &bytes, started, files, output.warnings);
    let body = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    fs::write(dir.join("manifest.json"), body)
        .map_err(|e| CliError::io(format!("writing manifest in {}", dir.display()), e))?;
    manifest.check(&dir)?;
    Ok(manifest)
}
