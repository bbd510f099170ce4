//! Monte-Carlo frame-error simulation on the binary symmetric channel and
//! the analytic lower bound on the error floor from a census of known
//! uncorrectable patterns.
//!
//! Everything transmits the all-zero codeword, so a channel draw IS an error
//! pattern and decoder output is scored by literal comparison with zero.

use crate::diversity::{decode_with_diversity, DiversitySchedule};
use crate::graph::TannerGraph;
use crate::landscape::{ErrorPattern, FailureSet};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::time::Instant;

/// Stopping rules and channel quality for one simulation run.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SimConfig {
    /// Crossover probability, in [0, 0.5]. Zero is allowed so that a noiseless
    /// run can serve as a smoke test.
    pub alpha: f64,
    /// Stop after this many frames.
    pub max_frames: u64,
    /// Stop early once this many frame errors have been seen.
    pub max_frame_errors: u64,
    /// Base seed; frame `i` always uses stream `i` of this seed, so results
    /// do not depend on thread count.
    pub rng_seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || !(0.0..=0.5).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!(
                "crossover probability {} is outside [0, 0.5]",
                self.alpha
            )));
        }
        if self.max_frames == 0 {
            return Err(Error::InvalidConfig("max_frames must be positive".into()));
        }
        if self.max_frame_errors == 0 {
            return Err(Error::InvalidConfig("max_frame_errors must be positive".into()));
        }
        Ok(())
    }
}

/// Counts accumulated by a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimStats {
    pub frames: u64,
    pub frame_errors: u64,
    /// Bits that differ from the transmitted word, summed over all frames.
    pub bit_errors: u64,
    pub fer: f64,
    pub ber: f64,
    /// Seconds of wall time. Not part of equality comparisons in tests.
    pub wall_time: f64,
}

impl SimStats {
    fn from_counts(frames: u64, frame_errors: u64, bit_errors: u64, n: usize, t0: Instant) -> SimStats {
        SimStats {
            frames,
            frame_errors,
            bit_errors,
            fer: frame_errors as f64 / frames as f64,
            ber: bit_errors as f64 / (frames as f64 * n as f64),
            wall_time: t0.elapsed().as_secs_f64(),
        }
    }

    /// Binomial standard error of the FER estimate.
    pub fn fer_std_error(&self) -> f64 {
        (self.fer * (1.0 - self.fer) / self.frames as f64).sqrt()
    }
}

/// Flips each of `n` positions independently with probability `alpha`.
pub fn bsc_sample(n: usize, alpha: f64, rng: &mut impl Rng) -> ErrorPattern {
    debug_assert!((0.0..=1.0).contains(&alpha));
    let mut support = Vec::new();
    for v in 0..n {
        if rng.random::<f64>() < alpha {
            support.push(v as u32);
        }
    }
    ErrorPattern::new(support)
}

fn frame_rng(seed: u64, frame: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(frame);
    rng
}

const SHARD: u64 = 1024;

/// Draws channel noise frame by frame and runs the schedule on each draw
/// until a stopping count is reached. Frame `i` is always decoded from the
/// same noise regardless of parallelism, and the early stop cuts at the
/// same frame a sequential run would, so two runs with one config are
/// identical except for wall time.
pub fn monte_carlo(
    graph: &TannerGraph,
    schedule: &DiversitySchedule,
    config: &SimConfig,
) -> Result<SimStats> {
    config.validate()?;
    let t0 = Instant::now();
    let n = graph.n_vars();
    let mut frames = 0u64;
    let mut frame_errors = 0u64;
    let mut bit_errors = 0u64;
    'outer: while frames < config.max_frames && frame_errors < config.max_frame_errors {
        let todo = SHARD.min(config.max_frames - frames);
        let shard: Vec<(bool, u64)> = (frames..frames + todo)
            .into_par_iter()
            .map(|i| -> Result<(bool, u64)> {
                let mut rng = frame_rng(config.rng_seed, i);
                let e = bsc_sample(n, config.alpha, &mut rng);
                let r = decode_with_diversity(graph, schedule, &e)?;
                let bits = r.hard_decision.iter().filter(|&&b| b == 1).count() as u64;
                Ok((!r.corrected, bits))
            })
            .collect::<Result<_>>()?;
        for (err, bits) in shard {
            frames += 1;
            bit_errors += bits;
            if err {
                frame_errors += 1;
                if frame_errors >= config.max_frame_errors {
                    break 'outer;
                }
            }
        }
    }
    Ok(SimStats::from_counts(frames, frame_errors, bit_errors, n, t0))
}

/// Scores the schedule on an explicit list of patterns instead of channel
/// draws: every pattern is one frame. Useful for replaying failure fixtures.
pub fn injected_stats(
    graph: &TannerGraph,
    schedule: &DiversitySchedule,
    patterns: &FailureSet,
) -> Result<SimStats> {
    if patterns.is_empty() {
        return Err(Error::InvalidConfig("nothing to inject: the pattern set is empty".into()));
    }
    let t0 = Instant::now();
    let list: Vec<&ErrorPattern> = patterns.iter().collect();
    let rows: Vec<(bool, u64)> = list
        .par_iter()
        .map(|p| -> Result<(bool, u64)> {
            let r = decode_with_diversity(graph, schedule, p)?;
            let bits = r.hard_decision.iter().filter(|&&b| b == 1).count() as u64;
            Ok((!r.corrected, bits))
        })
        .collect::<Result<_>>()?;
    let frame_errors = rows.iter().filter(|r| r.0).count() as u64;
    let bit_errors = rows.iter().map(|r| r.1).sum();
    Ok(SimStats::from_counts(list.len() as u64, frame_errors, bit_errors, graph.n_vars(), t0))
}

/// A census of uncorrectable error patterns by weight: `count(w)` patterns
/// of weight `w` are known to defeat some decoder on a length-`n` code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FloorCounts {
    n: usize,
    counts: BTreeMap<usize, u64>,
}

impl FloorCounts {
    pub fn new(n: usize) -> Result<FloorCounts> {
        if n == 0 {
            return Err(Error::InvalidConfig("block length must be positive".into()));
        }
        Ok(FloorCounts { n, counts: BTreeMap::new() })
    }

    pub fn block_length(&self) -> usize {
        self.n
    }

    /// Records the census count for one weight, replacing any prior value.
    pub fn set(&mut self, weight: usize, count: u64) -> Result<()> {
        if weight > self.n {
            return Err(Error::InvalidConfig(format!(
                "weight {weight} exceeds the block length {}",
                self.n
            )));
        }
        self.counts.insert(weight, count);
        Ok(())
    }

    pub fn count(&self, weight: usize) -> u64 {
        self.counts.get(&weight).copied().unwrap_or(0)
    }

    /// Weights in increasing order with their counts.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.counts.iter().map(|(&w, &c)| (w, c))
    }

    pub fn is_empty(&self) -> bool {
        self.counts.values().all(|&c| c == 0)
    }

    /// Text form: `N <block-length>` then one `<weight> <count>` line per
    /// weight, `#` starting a comment.
    pub fn to_text(&self) -> String {
        let mut out = format!("N {}\n", self.n);
        for (w, c) in self.iter() {
            out.push_str(&format!("{w} {c}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<FloorCounts> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, raw)| (i + 1, raw.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (ln, header) = lines
            .next()
            .ok_or(Error::Parse { line: 1, detail: "empty census file".into() })?;
        let n = header
            .strip_prefix("N ")
            .and_then(|s| s.trim().parse::<usize>().ok())
            .ok_or_else(|| Error::Parse {
                line: ln,
                detail: "expected `N <block-length>`".into(),
            })?;
        let mut out = FloorCounts::new(n)?;
        for (ln, line) in lines {
            let mut tok = line.split_whitespace();
            let pair = (tok.next(), tok.next(), tok.next());
            let (Some(w), Some(c), None) = pair else {
                return Err(Error::Parse { line: ln, detail: "expected `<weight> <count>`".into() });
            };
            let w: usize = w.parse().map_err(|_| Error::Parse {
                line: ln,
                detail: format!("`{w}` is not a weight"),
            })?;
            let c: u64 = c.parse().map_err(|_| Error::Parse {
                line: ln,
                detail: format!("`{c}` is not a count"),
            })?;
            if out.counts.contains_key(&w) {
                return Err(Error::Parse { line: ln, detail: format!("weight {w} repeats") });
            }
            out.set(w, c).map_err(|e| Error::Parse { line: ln, detail: e.to_string() })?;
        }
        Ok(out)
    }
}

/// Probability that at least one censused pattern is the channel draw,
/// bounded from below by the union sum `sum over w of count(w) * alpha^w *
/// (1 - alpha)^(n - w)`. A valid frame-error-rate lower bound whenever the
/// census only contains genuinely uncorrectable patterns.
///
/// Evaluated in the log domain with compensated summation: at small alpha
/// the individual products underflow long before the sum does.
pub fn floor_bound(counts: &FloorCounts, alpha: f64) -> f64 {
    let term_logs: Vec<f64> = counts
        .iter()
        .filter(|&(_, c)| c > 0)
        .map(|(w, c)| {
            let mut t = (c as f64).ln();
            if w > 0 {
                t += w as f64 * alpha.ln();
            }
            if counts.n > w {
                t += (counts.n - w) as f64 * (-alpha).ln_1p();
            }
            t
        })
        .collect();
    let Some(m) = term_logs.iter().copied().reduce(f64::max) else {
        return 0.0;
    };
    if m == f64::NEG_INFINITY {
        return 0.0;
    }
    // Neumaier summation of the rescaled terms
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for t in term_logs {
        let x = (t - m).exp();
        let next = sum + x;
        comp += if sum.abs() >= x.abs() { (sum - next) + x } else { (x - next) + sum };
        sum = next;
    }
    m.exp() * (sum + comp)
}

/// Evaluates the bound over a grid, returned sorted by alpha.
pub fn bound_curve(counts: &FloorCounts, alphas: &[f64]) -> Vec<(f64, f64)> {
    let mut rows: Vec<(f64, f64)> = alphas.iter().map(|&a| (a, floor_bound(counts, a))).collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    rows
}

/// CSV rendering of a bound curve, header `alpha,bound`.
pub fn bound_curve_csv(counts: &FloorCounts, alphas: &[f64]) -> String {
    let mut out = String::from("alpha,bound\n");
    for (a, b) in bound_curve(counts, alphas) {
        out.push_str(&format!("{a},{b}\n"));
    }
    out
}

/// Runs `monte_carlo` at each alpha of a grid with otherwise identical
/// settings, returned sorted by alpha. Frame `i` reuses the same noise
/// stream at every alpha, which makes neighboring points positively
/// correlated and the whole curve reproducible.
pub fn fer_curve(
    graph: &TannerGraph,
    schedule: &DiversitySchedule,
    base: &SimConfig,
    alphas: &[f64],
) -> Result<Vec<(f64, SimStats)>> {
    let mut sorted = alphas.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .into_iter()
        .map(|alpha| {
            let stats = monte_carlo(graph, schedule, &SimConfig { alpha, ..*base })?;
            Ok((alpha, stats))
        })
        .collect()
}

/// CSV rendering of a measured curve, header
/// `alpha,fer,ber,frames,frame_errors`.
pub fn fer_curve_csv(rows: &[(f64, SimStats)]) -> String {
    let mut out = String::from("alpha,fer,ber,frames,frame_errors\n");
    for (a, s) in rows {
        out.push_str(&format!("{a},{},{},{},{}\n", s.fer, s.ber, s.frames, s.frame_errors));
    }
    out
}
