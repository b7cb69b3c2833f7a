//! Per-run files: evaluation CSV, metadata JSON and PRESS traces.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::{IterationMeta, Proposal, RunRecord};
use crate::space::MixedSpace;

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let name = path.file_name().ok_or_else(|| Error::Config(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn run_stem(problem: &str, method: &str, seed: u64) -> String {
    format!("{problem}__{method}__seed{seed}")
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn opt_int(v: Option<usize>) -> String {
    v.map(|d| d.to_string()).unwrap_or_default()
}

pub fn run_csv_header(space: &MixedSpace, n_constraints: usize) -> String {
    let mut cols = vec!["eval_index".to_string(), "iter".to_string()];
    cols.extend((0..space.n_continuous()).map(|i| format!("x{i}")));
    cols.extend((0..space.n_integer()).map(|i| format!("z{i}")));
    cols.extend((0..space.n_categorical()).map(|i| format!("c{i}")));
    cols.push("f".into());
    cols.extend((0..n_constraints).map(|i| format!("g{i}")));
    cols.extend(["violation", "feasible", "incumbent", "d_f"].map(String::from));
    cols.extend((0..n_constraints).map(|i| format!("d_g{i}")));
    cols.extend(["acq_value", "wall_ms"].map(String::from));
    cols.join(",")
}

/// One row per evaluation; floats with 17 significant digits, empty cells
/// for missing values.
pub fn run_csv(record: &RunRecord, space: &MixedSpace) -> String {
    let m = record.n_constraints;
    let mut out = run_csv_header(space, m);
    out.push('\n');
    for e in &record.entries {
        let mut row: Vec<String> = vec![e.eval_index.to_string(), e.iter.to_string()];
        row.extend(e.point.x.iter().map(|&v| num(v)));
        row.extend(e.point.z.iter().map(|v| v.to_string()));
        row.extend(e.point.c.iter().map(|v| v.to_string()));
        row.push(opt_num(e.f));
        row.extend((0..m).map(|j| opt_num(e.g.get(j).copied())));
        row.push(opt_num(e.violation));
        row.push(if e.feasible { "1" } else { "0" }.into());
        row.push(opt_num(e.incumbent));
        row.push(opt_int(e.notes.d_f));
        row.extend((0..m).map(|j| opt_int(e.notes.d_g.get(j).copied().flatten())));
        row.push(opt_num(e.notes.acq_value));
        row.push(opt_num(e.notes.wall_ms));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Cross-validation traces of adaptive component selection.
pub fn press_csv(record: &RunRecord) -> String {
    let mut out = String::from("iter,output,d,press,ratio,reused_previous,selected_d,rank_exhausted\n");
    for meta in &record.iterations {
        for (j, sel) in meta.selections.iter().enumerate() {
            let Some(sel) = sel else { continue };
            let output = if j == 0 { "f".to_string() } else { format!("g{}", j - 1) };
            for t in &sel.trace {
                let _ = writeln!(
                    out,
                    "{},{output},{},{},{},{},{},{}",
                    meta.iter,
                    t.d,
                    num(t.press),
                    opt_num(t.ratio),
                    t.reused_previous as u8,
                    sel.d,
                    sel.rank_exhausted as u8
                );
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationSummary {
    pub iter: usize,
    pub d: Vec<Option<usize>>,
    pub log_likelihood: Vec<f64>,
    pub f_min: Option<f64>,
    pub f_min_infeasible: bool,
    pub scale: Option<f64>,
    pub acq_value: Option<f64>,
    pub fallback: bool,
    pub proposal: Proposal,
}

impl From<&IterationMeta> for IterationSummary {
    fn from(m: &IterationMeta) -> Self {
        Self {
            iter: m.iter,
            d: m.d.clone(),
            log_likelihood: m.log_likelihood.clone(),
            f_min: m.f_min,
            f_min_infeasible: m.f_min_infeasible,
            scale: m.scale,
            acq_value: m.acq_value,
            fallback: m.fallback,
            proposal: m.proposal.clone(),
        }
    }
}

/// Run-level facts not in the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub problem: String,
    pub method: String,
    pub seed: u64,
    pub reference: Option<f64>,
    pub n_constraints: usize,
    pub violation_tol: f64,
    pub n_evaluations: usize,
    pub n_failed: usize,
    pub best_feasible: Option<f64>,
    pub iterations: Vec<IterationSummary>,
}

impl RunMeta {
    pub fn new(record: &RunRecord, reference: Option<f64>) -> Self {
        Self {
            problem: record.problem.clone(),
            method: record.method.clone(),
            seed: record.seed,
            reference,
            n_constraints: record.n_constraints,
            violation_tol: record.violation_tol,
            n_evaluations: record.entries.len(),
            n_failed: record.entries.iter().filter(|e| e.failed()).count(),
            best_feasible: record.final_incumbent(),
            iterations: record.iterations.iter().map(IterationSummary::from).collect(),
        }
    }
}

/// Writes `<stem>.csv`, `<stem>.meta.json` and `<stem>.press.csv` into `dir`
/// and returns the CSV path. `method` names the files.
pub fn write_run(dir: &Path, record: &RunRecord, method: &str, space: &MixedSpace, reference: Option<f64>) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let stem = run_stem(&record.problem, method, record.seed);
    let csv = dir.join(format!("{stem}.csv"));
    write_atomic(&csv, run_csv(record, space).as_bytes())?;
    let meta = serde_json::to_string_pretty(&RunMeta::new(record, reference))?;
    write_atomic(&dir.join(format!("{stem}.meta.json")), meta.as_bytes())?;
    write_atomic(&dir.join(format!("{stem}.press.csv")), press_csv(record).as_bytes())?;
    Ok(csv)
}

/// Columns of a run CSV needed by the statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRun {
    /// Objective per evaluation when feasible.
    pub feasible_f: Vec<Option<f64>>,
    pub incumbent: Vec<Option<f64>>,
}

pub fn parse_run_csv(text: &str) -> Result<ParsedRun> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or_else(|| Error::Config("empty run CSV".into()))?.split(',').collect();
    let col = |name: &str| {
        header.iter().position(|h| *h == name).ok_or_else(|| Error::Config(format!("run CSV lacks column {name}")))
    };
    let (fi, feas, inc) = (col("f")?, col("feasible")?, col("incumbent")?);
    let cell = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| Error::Config(format!("bad number {s:?} in run CSV")))
        }
    };
    let mut out = ParsedRun { feasible_f: Vec::new(), incumbent: Vec::new() };
    for line in lines.filter(|l| !l.is_empty()) {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.len() {
            return Err(Error::Config(format!("row has {} cells, header {}", cells.len(), header.len())));
        }
        let f = cell(cells[fi])?;
        out.feasible_f.push(if cells[feas] == "1" { f } else { None });
        out.incumbent.push(cell(cells[inc])?);
    }
    Ok(out)
}

/// A run read back from disk.
#[derive(Debug, Clone)]
pub struct StoredRun {
    pub meta: RunMeta,
    pub data: ParsedRun,
}

/// Reads every `<stem>.csv` with a `<stem>.meta.json` sibling, sorted by file name.
pub fn read_runs(dir: &Path) -> Result<Vec<StoredRun>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            name.ends_with(".csv") && !name.ends_with(".press.csv") && !name.starts_with('.')
        })
        .collect();
    paths.sort();
    let mut runs = Vec::new();
    for csv in paths {
        let meta_path = csv.with_extension("meta.json");
        if !meta_path.exists() {
            continue;
        }
        let meta: RunMeta = serde_json::from_str(&fs::read_to_string(&meta_path)?)?;
        let data = parse_run_csv(&fs::read_to_string(&csv)?)?;
        runs.push(StoredRun { meta, data });
    }
    Ok(runs)
}
