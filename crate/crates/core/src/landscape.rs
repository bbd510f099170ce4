//! Low-weight error patterns and where decoders fail on them.
//!
//! Iterative decoders at high signal quality fail almost exclusively on a
//! small family of patterns concentrated around short cycles of the graph.
//! This module provides the pattern and failure-set types, girth and short
//! cycle search, neighborhood expansion around cycles, trapping-set labels,
//! and the exhaustive enumeration that decodes every candidate pattern of a
//! given weight inside the expanded neighborhoods.

use std::collections::{BTreeSet, HashSet};
use std::path::PathBuf;

use rayon::prelude::*;

use crate::decoder::{decode, validate_decode_inputs};
use crate::graph::TannerGraph;
use crate::lut::FaidLut;
use crate::{Error, Result};

// --- patterns and failure sets ----------------------------------------

/// A set of flipped bit positions, stored sorted and 0-based. Files and
/// display use 1-based indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ErrorPattern {
    support: Vec<u32>,
}

impl ErrorPattern {
    /// Builds a pattern from positions in any order; duplicates collapse.
    pub fn new(mut support: Vec<u32>) -> ErrorPattern {
        support.sort_unstable();
        support.dedup();
        ErrorPattern { support }
    }

    pub fn empty() -> ErrorPattern {
        ErrorPattern { support: Vec::new() }
    }

    pub fn from_bits(bits: &[u8]) -> ErrorPattern {
        ErrorPattern {
            support: bits
                .iter()
                .enumerate()
                .filter(|(_, &b)| b & 1 == 1)
                .map(|(i, _)| i as u32)
                .collect(),
        }
    }

    /// Flipped positions, sorted ascending, 0-based.
    pub fn support(&self) -> &[u32] {
        &self.support
    }

    pub fn weight(&self) -> usize {
        self.support.len()
    }

    pub fn contains(&self, v: u32) -> bool {
        self.support.binary_search(&v).is_ok()
    }

    pub fn to_bits(&self, n: usize) -> Vec<u8> {
        let mut bits = vec![0u8; n];
        for &v in &self.support {
            bits[v as usize] = 1;
        }
        bits
    }
}

impl std::fmt::Display for ErrorPattern {
    /// 1-based comma-separated support; `-` for the zero pattern.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.support.is_empty() {
            return write!(f, "-");
        }
        let parts: Vec<String> = self.support.iter().map(|v| (v + 1).to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// All known failing patterns of one weight, deduplicated and ordered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailureSet {
    weight: usize,
    patterns: BTreeSet<ErrorPattern>,
}

impl FailureSet {
    pub fn new(weight: usize) -> FailureSet {
        FailureSet { weight, patterns: BTreeSet::new() }
    }

    pub fn from_patterns(
        weight: usize,
        patterns: impl IntoIterator<Item = ErrorPattern>,
    ) -> Result<FailureSet> {
        let mut set = FailureSet::new(weight);
        for p in patterns {
            set.insert(p)?;
        }
        Ok(set)
    }

    /// Adds a pattern; `Ok(true)` when newly inserted. Patterns of any other
    /// weight are rejected.
    pub fn insert(&mut self, p: ErrorPattern) -> Result<bool> {
        if p.weight() != self.weight {
            return Err(Error::Mismatch(format!(
                "pattern weight {} does not match set weight {}",
                p.weight(),
                self.weight
            )));
        }
        Ok(self.patterns.insert(p))
    }

    pub fn weight(&self) -> usize {
        self.weight
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn contains(&self, p: &ErrorPattern) -> bool {
        self.patterns.contains(p)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ErrorPattern> {
        self.patterns.iter()
    }
}

/// Set difference `current \ corrected`; both sides must share one weight.
pub fn failure_set_difference(current: &FailureSet, corrected: &FailureSet) -> Result<FailureSet> {
    if current.weight() != corrected.weight() {
        return Err(Error::Mismatch(format!(
            "cannot subtract weight-{} patterns from a weight-{} set",
            corrected.weight(),
            current.weight()
        )));
    }
    let mut out = FailureSet::new(current.weight());
    for p in current.iter() {
        if !corrected.contains(p) {
            out.insert(p.clone())?;
        }
    }
    Ok(out)
}

// --- pattern files ------------------------------------------------------

/// Renders a failure set in the pattern file format: a header line
/// `# N=<n> weight=<w> decoder=<id>`, then one pattern per line as
/// comma-separated 1-based indices (`-` for the zero pattern).
pub fn write_pattern_file(set: &FailureSet, n: usize, decoder_id: &str) -> String {
    let mut out = format!("# N={} weight={} decoder={}\n", n, set.weight(), decoder_id);
    for p in set.iter() {
        out.push_str(&format!("{p}\n"));
    }
    out
}

/// Parses the pattern file format; returns the set, the block length and
/// the decoder id from the header.
pub fn read_pattern_file(text: &str) -> Result<(FailureSet, usize, String)> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (ln, header) = lines
        .next()
        .ok_or(Error::Parse { line: 1, detail: "empty pattern file".into() })?;
    let rest = header.strip_prefix('#').ok_or_else(|| Error::MalformedHeader {
        line: ln,
        detail: "expected `# N=<n> weight=<w> decoder=<id>`".into(),
    })?;
    let mut n: Option<usize> = None;
    let mut weight: Option<usize> = None;
    let mut decoder: Option<String> = None;
    for tok in rest.split_whitespace() {
        let Some((k, v)) = tok.split_once('=') else {
            return Err(Error::MalformedHeader {
                line: ln,
                detail: format!("`{tok}` is not a key=value field"),
            });
        };
        match k {
            "N" => {
                n = Some(v.parse().map_err(|_| Error::MalformedHeader {
                    line: ln,
                    detail: format!("`{v}` is not a block length"),
                })?)
            }
            "weight" => {
                weight = Some(v.parse().map_err(|_| Error::MalformedHeader {
                    line: ln,
                    detail: format!("`{v}` is not a weight"),
                })?)
            }
            "decoder" => decoder = Some(v.to_string()),
            other => {
                return Err(Error::MalformedHeader {
                    line: ln,
                    detail: format!("unknown header field `{other}`"),
                })
            }
        }
    }
    let (Some(n), Some(weight), Some(decoder)) = (n, weight, decoder) else {
        return Err(Error::MalformedHeader {
            line: ln,
            detail: "header must define N, weight and decoder".into(),
        });
    };

    let mut set = FailureSet::new(weight);
    for (ln, line) in lines {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let support = if line == "-" {
            Vec::new()
        } else {
            let mut support = Vec::new();
            for tok in line.split(',') {
                let idx: u64 = tok.trim().parse().map_err(|_| Error::Parse {
                    line: ln,
                    detail: format!("`{}` is not a variable index", tok.trim()),
                })?;
                if idx < 1 || idx > n as u64 {
                    return Err(Error::OutOfRange {
                        line: ln,
                        detail: format!("index {idx} outside [1, {n}]"),
                    });
                }
                let zero_based = (idx - 1) as u32;
                if support.contains(&zero_based) {
                    return Err(Error::DuplicateNeighbor {
                        line: ln,
                        detail: format!("index {idx} listed twice"),
                    });
                }
                support.push(zero_based);
            }
            support
        };
        if support.len() != weight {
            return Err(Error::Parse {
                line: ln,
                detail: format!("pattern has weight {}, header says {weight}", support.len()),
            });
        }
        set.insert(ErrorPattern::new(support))
            .expect("weight was checked against the header");
    }
    Ok((set, n, decoder))
}

// --- cycles and trapping sets -------------------------------------------

/// Length of the shortest cycle, or `None` for an acyclic graph. Cycle
/// lengths count edges, so they are even and at least 4.
pub fn girth(g: &TannerGraph) -> Option<usize> {
    let n = g.n_vars();
    let total = n + g.n_checks();
    let mut best = usize::MAX;
    let mut dist = vec![usize::MAX; total];
    let mut parent_edge = vec![u32::MAX; total];
    let mut queue = std::collections::VecDeque::new();

    // Every cycle alternates sides, so starts on the variable side suffice.
    for start in 0..n {
        dist.fill(usize::MAX);
        queue.clear();
        dist[start] = 0;
        parent_edge[start] = u32::MAX;
        queue.push_back(start);
        while let Some(node) = queue.pop_front() {
            if 2 * dist[node] + 2 > best {
                continue;
            }
            let edges = if node < n {
                g.vn_edges(node as u32)
            } else {
                g.cn_edges((node - n) as u32)
            };
            for &e in edges {
                if e == parent_edge[node] {
                    continue;
                }
                let other = if node < n {
                    g.edge_cn(e) as usize + n
                } else {
                    g.edge_vn(e) as usize
                };
                if dist[other] == usize::MAX {
                    dist[other] = dist[node] + 1;
                    parent_edge[other] = e;
                    queue.push_back(other);
                } else {
                    best = best.min(dist[node] + dist[other] + 1);
                }
            }
        }
    }
    (best != usize::MAX).then_some(best)
}

/// Finds all simple cycles of the requested (even) lengths and returns
/// their variable-node sets, deduplicated and in canonical order. Distinct
/// cycles sharing a VN set collapse to one entry.
pub fn enumerate_cycles(g: &TannerGraph, lengths: &[usize]) -> Vec<Vec<u32>> {
    let mut found: BTreeSet<Vec<u32>> = BTreeSet::new();
    for &len in lengths {
        assert!(len >= 4 && len % 2 == 0, "cycle length must be even and at least 4");
        let k = len / 2;
        let mut path_vns: Vec<u32> = Vec::with_capacity(k);
        let mut path_cns: Vec<u32> = Vec::with_capacity(k);
        for v0 in 0..g.n_vars() as u32 {
            path_vns.push(v0);
            extend_cycle(g, v0, k, &mut path_vns, &mut path_cns, &mut found);
            path_vns.pop();
        }
    }
    found.into_iter().collect()
}

/// Depth-first extension of an alternating path rooted at its minimum VN.
/// Each cycle is generated once: rotations are excluded by keeping `v0`
/// strictly minimal, the two directions by ordering first vs closing check.
fn extend_cycle(
    g: &TannerGraph,
    v0: u32,
    k: usize,
    path_vns: &mut Vec<u32>,
    path_cns: &mut Vec<u32>,
    found: &mut BTreeSet<Vec<u32>>,
) {
    let cur = *path_vns.last().unwrap();
    if path_vns.len() == k {
        for c in g.vn_neighbors(cur) {
            if path_cns.contains(&c) || path_cns[0] >= c {
                continue;
            }
            if g.cn_neighbors(c).any(|v| v == v0) {
                let mut vns = path_vns.clone();
                vns.sort_unstable();
                found.insert(vns);
            }
        }
        return;
    }
    for c in g.vn_neighbors(cur) {
        if path_cns.contains(&c) {
            continue;
        }
        path_cns.push(c);
        for v in g.cn_neighbors(c) {
            if v <= v0 || path_vns.contains(&v) {
                continue;
            }
            path_vns.push(v);
            extend_cycle(g, v0, k, path_vns, path_cns, found);
            path_vns.pop();
        }
        path_cns.pop();
    }
}

/// Grows a VN set by `radius` rounds, each adding every variable that
/// shares a check with the current set. Returns a sorted set.
pub fn expand(g: &TannerGraph, vns: &[u32], radius: usize) -> Vec<u32> {
    let mut set: BTreeSet<u32> = vns.iter().copied().collect();
    for _ in 0..radius {
        let mut next = set.clone();
        for &v in &set {
            for c in g.vn_neighbors(v) {
                next.extend(g.cn_neighbors(c));
            }
        }
        if next.len() == set.len() {
            break;
        }
        set = next;
    }
    set.into_iter().collect()
}

/// An (a, b) trapping-set label: a variables inducing b odd-degree checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrappingSetLabel {
    pub a: usize,
    pub b: usize,
}

impl std::fmt::Display for TrappingSetLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.a, self.b)
    }
}

/// Labels a variable set: a = set size, b = number of checks with an odd
/// number of neighbors inside the set.
pub fn classify_trapping_set(g: &TannerGraph, vns: &[u32]) -> Result<TrappingSetLabel> {
    let set: BTreeSet<u32> = vns.iter().copied().collect();
    if set.is_empty() {
        return Err(Error::Mismatch("cannot classify an empty variable set".into()));
    }
    if let Some(&v) = set.iter().find(|&&v| v as usize >= g.n_vars()) {
        return Err(Error::Mismatch(format!(
            "variable index {v} outside code length {}",
            g.n_vars()
        )));
    }
    let mut odd = 0usize;
    let mut checks: BTreeSet<u32> = BTreeSet::new();
    for &v in &set {
        checks.extend(g.vn_neighbors(v));
    }
    for &c in &checks {
        let inside = g.cn_neighbors(c).filter(|v| set.contains(v)).count();
        if inside % 2 == 1 {
            odd += 1;
        }
    }
    Ok(TrappingSetLabel { a: set.len(), b: odd })
}

// --- expanded search regions ---------------------------------------------

/// One region to search for failing patterns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpandedSet {
    /// Sorted variable set.
    pub vns: Vec<u32>,
    /// Cycle length the region grew from; `None` for the whole graph.
    pub source_len: Option<usize>,
}

/// Ordered list of search regions for [`find_failures`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpansionList {
    pub sets: Vec<ExpandedSet>,
}

impl ExpansionList {
    /// Regions grown from every cycle of length g and g+2 (g the girth),
    /// each expanded by `radius`. An acyclic graph yields an empty list.
    pub fn from_short_cycles(g: &TannerGraph, radius: usize) -> ExpansionList {
        let Some(girth) = girth(g) else {
            return ExpansionList { sets: Vec::new() };
        };
        let mut sets = Vec::new();
        for len in [girth, girth + 2] {
            for vns in enumerate_cycles(g, &[len]) {
                sets.push(ExpandedSet { vns: expand(g, &vns, radius), source_len: Some(len) });
            }
        }
        ExpansionList { sets }
    }

    /// A single region covering every variable: exhaustive search.
    pub fn whole_graph(g: &TannerGraph) -> ExpansionList {
        ExpansionList {
            sets: vec![ExpandedSet { vns: (0..g.n_vars() as u32).collect(), source_len: None }],
        }
    }
}

// --- failure enumeration ---------------------------------------------

/// Knobs for [`find_failures`].
#[derive(Debug, Clone, Default)]
pub struct EnumerationOptions {
    /// Stop after this many failing patterns.
    pub max_patterns: Option<usize>,
    /// Rewrite this file with the partial set after each finished region.
    pub checkpoint_path: Option<PathBuf>,
    /// Decoder id recorded in checkpoint headers.
    pub decoder_id: String,
}

/// Decodes every weight-`weight` pattern inside each search region and
/// collects those that no decoder corrects.
///
/// Decoders run sequentially per candidate: the first to reach a zero
/// syndrome settles the outcome, and the pattern counts as failing when
/// that output is not the all-zero word or no decoder converges. Candidates
/// seen in earlier regions are not decoded again; the result is independent
/// of thread count.
pub fn find_failures(
    graph: &TannerGraph,
    decoders: &[(&FaidLut, usize)],
    weight: usize,
    expansion: &ExpansionList,
    opts: &EnumerationOptions,
) -> Result<FailureSet> {
    if decoders.is_empty() {
        return Err(Error::InvalidConfig("need at least one decoder".into()));
    }
    for &(lut, iters) in decoders {
        validate_decode_inputs(graph, lut, &ErrorPattern::empty(), iters)?;
    }

    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    let mut failures = FailureSet::new(weight);
    'regions: for region in &expansion.sets {
        let mut candidates: Vec<Vec<u32>> = Vec::new();
        let mut prefix = Vec::with_capacity(weight);
        push_combinations(&region.vns, weight, &mut prefix, &mut |supp| {
            if !seen.contains(supp) {
                seen.insert(supp.to_vec());
                candidates.push(supp.to_vec());
            }
        });

        let fails: Vec<bool> = candidates
            .par_iter()
            .map(|supp| !sequential_corrects(graph, decoders, &ErrorPattern::new(supp.clone())))
            .collect();
        for (supp, failed) in candidates.into_iter().zip(fails) {
            if !failed {
                continue;
            }
            failures.insert(ErrorPattern::new(supp))?;
            if opts.max_patterns.is_some_and(|m| failures.len() >= m) {
                checkpoint(&failures, graph.n_vars(), opts)?;
                break 'regions;
            }
        }
        checkpoint(&failures, graph.n_vars(), opts)?;
    }
    Ok(failures)
}

/// True when the decoder sequence corrects the pattern: decoders run in
/// order and the first zero-syndrome output is final.
pub fn sequential_corrects(
    graph: &TannerGraph,
    decoders: &[(&FaidLut, usize)],
    pattern: &ErrorPattern,
) -> bool {
    for &(lut, iters) in decoders {
        let r = decode(graph, lut, pattern, iters).expect("decoder inputs were validated");
        if r.success {
            return r.corrects_all_zero();
        }
    }
    false
}

fn checkpoint(failures: &FailureSet, n: usize, opts: &EnumerationOptions) -> Result<()> {
    if let Some(path) = &opts.checkpoint_path {
        std::fs::write(path, write_pattern_file(failures, n, &opts.decoder_id))?;
    }
    Ok(())
}

/// Lexicographic k-subsets of a sorted slice, visited in order.
fn push_combinations(items: &[u32], k: usize, prefix: &mut Vec<u32>, f: &mut impl FnMut(&[u32])) {
    if k == 0 {
        f(prefix);
        return;
    }
    if items.len() < k {
        return;
    }
    for i in 0..=items.len() - k {
        prefix.push(items[i]);
        push_combinations(&items[i + 1..], k - 1, prefix, f);
        prefix.pop();
    }
}

/// 3x4 blocks of size 5: N = 20, M = 15, d_v = 3, d_c = 4, girth 6.
/// Shared across test modules as a desk-scale stand-in code.
#[cfg(test)]
pub(crate) fn small_code_shifts() -> crate::graph::ShiftMatrix {
    let grid: [[u32; 4]; 3] = [[0, 1, 2, 3], [0, 2, 4, 1], [0, 3, 1, 4]];
    let shifts = grid.iter().flatten().map(|&s| Some(s)).collect();
    crate::graph::ShiftMatrix::new(3, 4, 5, shifts).unwrap()
}
