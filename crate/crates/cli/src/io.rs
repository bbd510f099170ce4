//! File loading and saving shared by the subcommands. All errors carry the
//! offending path.

use anyhow::{bail, Context, Result};
use faid_core::diversity::{DiversitySchedule, ScheduleEntry};
use faid_core::graph::{build_qc, load_alist, ShiftMatrix, TannerGraph};
use faid_core::landscape::{read_pattern_file, ErrorPattern, FailureSet};
use faid_core::lut::{CoefficientSet, FaidLut};
use faid_core::sim::FloorCounts;
use faid_core::trainer::TrainerConfig;
use std::path::Path;

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create directory {}", dir.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

/// Loads a code from either representation: `.alist` files hold the explicit
/// parity-check structure, anything else is parsed as a circulant shift grid.
pub fn load_code(path: &Path) -> Result<TannerGraph> {
    let text = read(path)?;
    let graph = if path.extension().is_some_and(|e| e == "alist") {
        load_alist(&text)
    } else {
        ShiftMatrix::parse(&text).map(|sm| build_qc(&sm))
    };
    graph.with_context(|| format!("invalid code file {}", path.display()))
}

pub fn load_lut(path: &Path) -> Result<FaidLut> {
    FaidLut::from_text(&read(path)?)
        .with_context(|| format!("invalid lookup table {}", path.display()))
}

pub fn load_coeffs(path: &Path) -> Result<CoefficientSet> {
    CoefficientSet::from_text(&read(path)?)
        .with_context(|| format!("invalid coefficient file {}", path.display()))
}

pub fn load_patterns(path: &Path) -> Result<(FailureSet, usize, String)> {
    read_pattern_file(&read(path)?)
        .with_context(|| format!("invalid pattern file {}", path.display()))
}

pub fn load_counts(path: &Path) -> Result<FloorCounts> {
    FloorCounts::from_text(&read(path)?)
        .with_context(|| format!("invalid census file {}", path.display()))
}

pub fn load_train_config(path: &Path) -> Result<TrainerConfig> {
    TrainerConfig::from_toml_str(&read(path)?)
        .with_context(|| format!("invalid trainer config {}", path.display()))
}

pub fn load_schedule(path: &Path) -> Result<DiversitySchedule> {
    DiversitySchedule::load_manifest(path)
        .with_context(|| format!("invalid schedule manifest {}", path.display()))
}

/// Wraps one table file in a single-decoder schedule, its id the file stem.
pub fn single_schedule(lut_path: &Path, max_iters: usize) -> Result<DiversitySchedule> {
    let lut = load_lut(lut_path)?;
    let id = file_stem(lut_path);
    Ok(DiversitySchedule::new(vec![ScheduleEntry { id, lut, max_iters }])?)
}

pub fn file_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "decoder".into())
}

/// Parses a pattern given as comma-separated 1-based variable indices, or
/// `-` for the all-zero pattern. The same convention as pattern files.
pub fn parse_support(text: &str, n: usize) -> Result<ErrorPattern> {
    let text = text.trim();
    if text == "-" || text.is_empty() {
        return Ok(ErrorPattern::empty());
    }
    let mut support = Vec::new();
    for tok in text.split(',') {
        let idx: u64 = tok.trim().parse().with_context(|| {
            format!("`{}` is not a variable index", tok.trim())
        })?;
        if idx < 1 || idx > n as u64 {
            bail!("index {idx} outside [1, {n}]");
        }
        support.push((idx - 1) as u32);
    }
    let pattern = ErrorPattern::new(support.clone());
    if pattern.weight() != support.len() {
        bail!("pattern lists an index twice");
    }
    Ok(pattern)
}

/// Renders a support as 1-based comma-separated indices, `-` when empty.
pub fn format_support(pattern: &ErrorPattern) -> String {
    if pattern.weight() == 0 {
        return "-".into();
    }
    pattern
        .support()
        .iter()
        .map(|&v| (v + 1).to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Parses a comma-separated list of crossover probabilities.
pub fn parse_alphas(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .with_context(|| format!("`{}` is not a probability", tok.trim()))
        })
        .collect()
}

/// Parses `lo:hi:points` into a log-spaced grid, inclusive of both ends.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi, points] = parts[..] else {
        bail!("expected `lo:hi:points`, got `{text}`");
    };
    let lo: f64 = lo.parse().with_context(|| format!("`{lo}` is not a probability"))?;
    let hi: f64 = hi.parse().with_context(|| format!("`{hi}` is not a probability"))?;
    let points: usize = points.parse().with_context(|| format!("`{points}` is not a count"))?;
    if !(lo > 0.0 && hi > lo) {
        bail!("grid needs 0 < lo < hi");
    }
    if points < 2 {
        bail!("grid needs at least two points");
    }
    Ok((0..points)
        .map(|i| {
            let t = i as f64 / (points - 1) as f64;
            lo * (hi / lo).powf(t)
        })
        .collect())
}
