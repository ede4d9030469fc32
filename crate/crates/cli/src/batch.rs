//! Directory mode: one JSON report per image plus a roll-up `summary.csv`.

use std::path::{Path, PathBuf};

use anyhow::Context;
use dropmeter_core::report::{summary_row, to_json, SUMMARY_COLUMNS};
use dropmeter_core::{decode_image, CardAnalysisReport};
use rayon::prelude::*;

use crate::pipeline::{analyze_image, CardOptions};

pub const SUMMARY_FILE: &str = "summary.csv";
pub const IMAGE_EXTENSIONS: [&str; 4] = ["png", "ppm", "pgm", "pnm"];

/// Result of one file in a batch.
#[derive(Debug)]
pub struct BatchItem {
    pub file: String,
    pub outcome: Result<CardAnalysisReport, String>,
}

#[derive(Debug)]
pub struct BatchSummary {
    pub items: Vec<BatchItem>,
}

impl BatchSummary {
    pub fn failures(&self) -> impl Iterator<Item = &BatchItem> {
        self.items.iter().filter(|i| i.outcome.is_err())
    }
}

/// Supported images directly inside `dir`, sorted by file name.
pub fn list_images(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        let supported = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
        if supported && path.is_file() {
            paths.push(path);
        }
    }
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(paths)
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Analyzes every image in `dir` on `jobs` threads (0 = one per core) and
/// writes `<stem>.json` for each success and `summary.csv` for all of them.
/// Files that fail are reported in the returned summary and skipped.
pub fn run_batch(
    dir: &Path,
    out_dir: &Path,
    opts: &CardOptions,
    jobs: usize,
    timestamp: Option<String>,
) -> anyhow::Result<BatchSummary> {
    opts.params.validate()?;
    let paths = list_images(dir)?;
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;

    let analyze = |path: &PathBuf| {
        let file = file_name(path);
        let outcome = decode_image(path)
            .and_then(|img| analyze_image(&img, opts, Some(&file), timestamp.clone()))
            .map(|a| a.report)
            .map_err(|e| e.to_string());
        BatchItem { file, outcome }
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    let items: Vec<BatchItem> = pool.install(|| paths.par_iter().map(analyze).collect());

    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(std::iter::once("file").chain(SUMMARY_COLUMNS))?;
    for item in &items {
        let Ok(report) = &item.outcome else { continue };
        let stem = Path::new(&item.file)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| item.file.clone());
        let json_path = out_dir.join(format!("{stem}.json"));
        std::fs::write(&json_path, to_json(report)?)
            .with_context(|| format!("writing {}", json_path.display()))?;
        csv.write_record(std::iter::once(item.file.clone()).chain(summary_row(report)))?;
    }
    let summary_path = out_dir.join(SUMMARY_FILE);
    std::fs::write(&summary_path, csv.into_inner()?)
        .with_context(|| format!("writing {}", summary_path.display()))?;
    Ok(BatchSummary { items })
}
