//! Sequential decoder diversity: an ordered list of lookup tables tried one
//! after another on the same received word, each re-initialized from the
//! channel values, the frame settling at the first zero syndrome. The
//! design loop grows such a schedule one trained decoder per round, always
//! training on the patterns everything so far still gets wrong.

use crate::decoder::decode;
use crate::graph::TannerGraph;
use crate::landscape::{failure_set_difference, ErrorPattern, FailureSet};
use crate::lut::{coefficients_from_lut, derive_lut, CoefficientSet, FaidLut, Picker};
use crate::trainer::{train_round, EpochStats, TrainerConfig};
use crate::{Error, Result};
use rayon::prelude::*;
use std::path::Path;

/// One decoder in a schedule: its table and its iteration budget.
#[derive(Debug, Clone)]
pub struct ScheduleEntry {
    pub id: String,
    pub lut: FaidLut,
    pub max_iters: usize,
}

/// A validated, non-empty sequence of decoders sharing one alphabet and
/// variable degree.
#[derive(Debug, Clone)]
pub struct DiversitySchedule {
    entries: Vec<ScheduleEntry>,
}

impl DiversitySchedule {
    pub fn new(entries: Vec<ScheduleEntry>) -> Result<DiversitySchedule> {
        if entries.is_empty() {
            return Err(Error::InvalidConfig("a schedule needs at least one decoder".into()));
        }
        let mut s = DiversitySchedule { entries: Vec::with_capacity(entries.len()) };
        for e in entries {
            s.push(e)?;
        }
        Ok(s)
    }

    /// Appends a decoder, enforcing the shared alphabet, degree, and a
    /// positive budget.
    pub fn push(&mut self, entry: ScheduleEntry) -> Result<()> {
        if entry.max_iters == 0 {
            return Err(Error::InvalidConfig(format!(
                "decoder `{}` has a zero iteration budget",
                entry.id
            )));
        }
        if let Some(first) = self.entries.first() {
            if entry.lut.alphabet() != first.lut.alphabet() || entry.lut.d_v() != first.lut.d_v() {
                return Err(Error::Mismatch(format!(
                    "decoder `{}` uses a different alphabet or degree than `{}`",
                    entry.id, first.id
                )));
            }
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn entries(&self) -> &[ScheduleEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false // the constructor rejects empty schedules
    }

    /// Total iteration budget across the schedule.
    pub fn budget(&self) -> usize {
        self.entries.iter().map(|e| e.max_iters).sum()
    }

    /// Loads a schedule manifest: one `<table-path> <max-iters>` pair per
    /// non-comment line, `#` starting a comment, paths resolved relative to
    /// the manifest's directory. Each decoder's id is its file stem.
    pub fn load_manifest(path: &Path) -> Result<DiversitySchedule> {
        let text = std::fs::read_to_string(path)?;
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let ln = idx + 1;
            let Some((file, iters)) = line.rsplit_once(|c: char| c.is_whitespace()) else {
                return Err(Error::Parse {
                    line: ln,
                    detail: "expected `<table-path> <max-iters>`".into(),
                });
            };
            let max_iters: usize = iters.trim().parse().map_err(|_| Error::Parse {
                line: ln,
                detail: format!("`{}` is not an iteration count", iters.trim()),
            })?;
            let file = file.trim();
            let full = dir.join(file);
            let text = std::fs::read_to_string(&full).map_err(|e| Error::InvalidConfig(
                format!("schedule line {ln}: cannot read `{}`: {e}", full.display()),
            ))?;
            let lut = FaidLut::from_text(&text)?;
            let id = full
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| format!("decoder-{ln}"));
            entries.push(ScheduleEntry { id, lut, max_iters });
        }
        DiversitySchedule::new(entries)
    }
}

/// Outcome of running a schedule on one received word.
#[derive(Debug, Clone, PartialEq)]
pub struct DiversityDecode {
    /// Some decoder reached a zero syndrome.
    pub success: bool,
    /// The settling decoder's output was the transmitted all-zero word.
    pub corrected: bool,
    /// Decoders actually run: the position of the one that settled the
    /// frame, or the full schedule length when none did.
    pub decoders_tried: usize,
    /// Iterations spent across all decoders run.
    pub total_iterations: usize,
    /// Hard decision of the settling decoder, else of the last one.
    pub hard_decision: Vec<u8>,
}

/// Runs the schedule in order, each decoder re-initialized from the channel
/// word, stopping at the first zero syndrome. Failure is declared only
/// after every decoder has exhausted its budget.
pub fn decode_with_diversity(
    graph: &TannerGraph,
    schedule: &DiversitySchedule,
    pattern: &ErrorPattern,
) -> Result<DiversityDecode> {
    let mut total = 0usize;
    let mut last_hard = Vec::new();
    for (i, e) in schedule.entries().iter().enumerate() {
        let r = decode(graph, &e.lut, pattern, e.max_iters)?;
        total += r.iterations_used;
        if r.success {
            return Ok(DiversityDecode {
                success: true,
                corrected: r.corrects_all_zero(),
                decoders_tried: i + 1,
                total_iterations: total,
                hard_decision: r.hard_decision,
            });
        }
        last_hard = r.hard_decision;
    }
    Ok(DiversityDecode {
        success: false,
        corrected: false,
        decoders_tried: schedule.len(),
        total_iterations: total,
        hard_decision: last_hard,
    })
}

/// Decodes every pattern with the schedule; returns the patterns it fails
/// to correct and, per decoder, how many patterns that decoder was the
/// first to correct.
pub fn evaluate_schedule(
    graph: &TannerGraph,
    schedule: &DiversitySchedule,
    patterns: &FailureSet,
) -> Result<(FailureSet, Vec<usize>)> {
    let rows: Vec<(Option<usize>, &ErrorPattern)> = patterns
        .iter()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|p| -> Result<(Option<usize>, &ErrorPattern)> {
            let r = decode_with_diversity(graph, schedule, p)?;
            Ok((r.corrected.then_some(r.decoders_tried - 1), p))
        })
        .collect::<Result<_>>()?;
    let mut residual = FailureSet::new(patterns.weight());
    let mut counts = vec![0usize; schedule.len()];
    for (settled, p) in rows {
        match settled {
            Some(i) => counts[i] += 1,
            None => {
                residual.insert((*p).clone()).expect("weights match the source set");
            }
        }
    }
    Ok((residual, counts))
}

/// Where each design round gets its starting coefficients.
#[derive(Debug, Clone)]
pub enum InitPolicy {
    /// Explicit starting points, one per round in order; must cover
    /// `max_rounds`.
    Sequence(Vec<CoefficientSet>),
    /// Sample fresh coefficients from the most recently appended decoder's
    /// table (the first round samples from the seed decoder), using
    /// `seed + round` for the draw.
    Resample { seed: u64 },
}

/// What one design round did.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundReport {
    /// 1-based round index.
    pub round: usize,
    /// Patterns still uncorrected going into the round.
    pub training_patterns: usize,
    /// Patterns the round's trained decoder corrects on its own.
    pub corrected: usize,
    pub epochs_run: usize,
    /// False when the round corrected nothing and its decoder was dropped.
    pub appended: bool,
}

/// Final state of a design run.
#[derive(Debug, Clone)]
pub struct DesignState {
    pub schedule: DiversitySchedule,
    /// Patterns no decoder in the schedule corrects on its own.
    pub residual: FailureSet,
    pub reports: Vec<RoundReport>,
    /// Per-round training histories, aligned with `reports`.
    pub histories: Vec<Vec<EpochStats>>,
}

/// Grows a diversity from a first decoder: each round trains fresh
/// coefficients on the still-uncorrected patterns, keeps the trained
/// decoder only if it corrects at least one of them, and removes what it
/// corrects from the working set. Stops after `max_rounds` rounds or once
/// nothing is left. The appended decoders inherit the training unroll depth
/// as their iteration budget.
pub fn design_diversity(
    graph: &TannerGraph,
    d1: (FaidLut, usize),
    initial_failures: &FailureSet,
    config: &TrainerConfig,
    policy: &InitPolicy,
    max_rounds: usize,
) -> Result<DesignState> {
    config.validate()?;
    let (d1_lut, d1_iters) = d1;
    let mut schedule = DiversitySchedule::new(vec![ScheduleEntry {
        id: "d1".into(),
        lut: d1_lut,
        max_iters: d1_iters,
    }])?;
    if let InitPolicy::Sequence(list) = policy {
        if list.len() < max_rounds {
            return Err(Error::InvalidConfig(format!(
                "{} starting points for {max_rounds} rounds",
                list.len()
            )));
        }
    }

    let mut working = initial_failures.clone();
    let mut reports = Vec::new();
    let mut histories = Vec::new();

    for round in 1..=max_rounds {
        if working.is_empty() {
            break;
        }
        let init = match policy {
            InitPolicy::Sequence(list) => list[round - 1].clone(),
            InitPolicy::Resample { seed } => {
                let source = &schedule.entries().last().expect("schedule is non-empty").lut;
                coefficients_from_lut(source, Picker::Uniform { seed: seed + round as u64 })?
            }
        };
        let outcome = train_round(graph, &init, &working, config, None)?;
        let corrected = outcome.corrected;
        let appended = !corrected.is_empty();
        reports.push(RoundReport {
            round,
            training_patterns: working.len(),
            corrected: corrected.len(),
            epochs_run: outcome.epochs_run,
            appended,
        });
        histories.push(outcome.history);
        if appended {
            schedule.push(ScheduleEntry {
                id: format!("d{}", schedule.len() + 1),
                lut: derive_lut(&outcome.coeffs),
                max_iters: config.unroll_iterations,
            })?;
            working = failure_set_difference(&working, &corrected)?;
        }
    }

    Ok(DesignState { schedule, residual: working, reports, histories })
}
