//! Tanner graphs and the file formats that carry them.
//!
//! A Tanner graph is the bipartite graph of a parity-check matrix: variable
//! nodes (VNs) on one side, check nodes (CNs) on the other, one edge per
//! nonzero entry. Edges carry dense ids assigned in (check, variable)
//! lexicographic order; decoders index their message buffers by edge id, so
//! this ordering is part of the contract and survives alist round trips.

use crate::{Error, Result};

/// Bipartite graph of an LDPC code. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TannerGraph {
    n_vars: usize,
    n_checks: usize,
    /// (vn, cn) per edge, sorted by (cn, vn); the position is the edge id.
    edges: Vec<(u32, u32)>,
    /// Edge ids incident to each VN, ascending.
    vn_adj: Vec<Vec<u32>>,
    /// Edge ids incident to each CN, ascending (contiguous by construction).
    cn_adj: Vec<Vec<u32>>,
    /// Common VN degree, recorded only when every VN has it.
    d_v: Option<usize>,
    /// Common CN degree, recorded only when every CN has it.
    d_c: Option<usize>,
}

impl TannerGraph {
    /// Builds a graph from an edge list of (vn, cn) pairs, in any order.
    ///
    /// Rejects empty sides, out-of-range endpoints and parallel edges.
    pub fn from_edges(
        n_vars: usize,
        n_checks: usize,
        edges: impl IntoIterator<Item = (u32, u32)>,
    ) -> Result<Self> {
        if n_vars == 0 || n_checks == 0 {
            return Err(Error::InvalidGraph(format!(
                "need at least one variable and one check node, got {n_vars} x {n_checks}"
            )));
        }
        let mut edges: Vec<(u32, u32)> = edges.into_iter().collect();
        for &(v, c) in &edges {
            if v as usize >= n_vars {
                return Err(Error::InvalidGraph(format!(
                    "edge ({v}, {c}): variable index {v} out of range (N = {n_vars})"
                )));
            }
            if c as usize >= n_checks {
                return Err(Error::InvalidGraph(format!(
                    "edge ({v}, {c}): check index {c} out of range (M = {n_checks})"
                )));
            }
        }
        edges.sort_by_key(|&(v, c)| (c, v));
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!(
                "parallel edge ({}, {})",
                w[0].0, w[0].1
            )));
        }

        let mut vn_adj = vec![Vec::new(); n_vars];
        let mut cn_adj = vec![Vec::new(); n_checks];
        for (e, &(v, c)) in edges.iter().enumerate() {
            vn_adj[v as usize].push(e as u32);
            cn_adj[c as usize].push(e as u32);
        }
        let d_v = common_degree(&vn_adj);
        let d_c = common_degree(&cn_adj);

        Ok(TannerGraph { n_vars, n_checks, edges, vn_adj, cn_adj, d_v, d_c })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_checks(&self) -> usize {
        self.n_checks
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// All edges as (vn, cn), indexed by edge id.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn edge_vn(&self, e: u32) -> u32 {
        self.edges[e as usize].0
    }

    pub fn edge_cn(&self, e: u32) -> u32 {
        self.edges[e as usize].1
    }

    /// Edge ids incident to variable node `v`, ascending.
    pub fn vn_edges(&self, v: u32) -> &[u32] {
        &self.vn_adj[v as usize]
    }

    /// Edge ids incident to check node `c`, ascending.
    pub fn cn_edges(&self, c: u32) -> &[u32] {
        &self.cn_adj[c as usize]
    }

    /// Check nodes adjacent to variable node `v`.
    pub fn vn_neighbors(&self, v: u32) -> impl Iterator<Item = u32> + '_ {
        self.vn_adj[v as usize].iter().map(|&e| self.edge_cn(e))
    }

    /// Variable nodes adjacent to check node `c`.
    pub fn cn_neighbors(&self, c: u32) -> impl Iterator<Item = u32> + '_ {
        self.cn_adj[c as usize].iter().map(|&e| self.edge_vn(e))
    }

    /// Common variable degree, if the code is left-regular.
    pub fn d_v(&self) -> Option<usize> {
        self.d_v
    }

    /// Common check degree, if the code is right-regular.
    pub fn d_c(&self) -> Option<usize> {
        self.d_c
    }

    pub fn is_regular(&self) -> bool {
        self.d_v.is_some() && self.d_c.is_some()
    }

    /// Syndrome weight of a binary word (number of unsatisfied checks).
    pub fn syndrome_weight(&self, word: &[u8]) -> usize {
        assert_eq!(word.len(), self.n_vars, "word length must equal N");
        self.cn_adj
            .iter()
            .filter(|edges| {
                edges.iter().fold(0u8, |p, &e| p ^ (word[self.edge_vn(e) as usize] & 1)) == 1
            })
            .count()
    }
}

fn common_degree(adj: &[Vec<u32>]) -> Option<usize> {
    let d = adj.first().map(Vec::len)?;
    adj.iter().all(|a| a.len() == d).then_some(d)
}

// --- alist ------------------------------------------------------------

/// Parses the alist text format.
///
/// Layout: `N M`; `max_dv max_dc`; N column degrees; M row degrees; N column
/// neighbor lists (1-based check indices); M row neighbor lists (1-based
/// variable indices). Lists may be zero-padded up to the declared maximum
/// degree. Row and column lists must describe the same edge set.
pub fn load_alist(text: &str) -> Result<TannerGraph> {
    let rows: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    let total = text.lines().count();
    let mut cur = 0usize;
    let mut next_line = move |what: &str| -> Result<(usize, &str)> {
        let Some(&row) = rows.get(cur) else {
            return Err(Error::Parse {
                line: total,
                detail: format!("unexpected end of file, expected {what}"),
            });
        };
        cur += 1;
        Ok(row)
    };

    let (ln, header) = next_line("size header")?;
    let dims = parse_ints(header, ln, "size header").map_err(as_header)?;
    let [n, m] = dims[..] else {
        return Err(Error::MalformedHeader {
            line: ln,
            detail: format!("expected `N M`, got {} values", dims.len()),
        });
    };
    if n < 1 || m < 1 {
        return Err(Error::MalformedHeader {
            line: ln,
            detail: format!("N and M must be at least 1, got {n} {m}"),
        });
    }
    let (n, m) = (n as usize, m as usize);

    let (ln, maxdeg) = next_line("maximum degree header")?;
    let maxes = parse_ints(maxdeg, ln, "maximum degree header").map_err(as_header)?;
    let [max_dv, max_dc] = maxes[..] else {
        return Err(Error::MalformedHeader {
            line: ln,
            detail: format!("expected `max_dv max_dc`, got {} values", maxes.len()),
        });
    };

    let (ln, col_deg_line) = next_line("column degree list")?;
    let col_deg = parse_degrees(col_deg_line, ln, n, max_dv, "column")?;
    let (ln, row_deg_line) = next_line("row degree list")?;
    let row_deg = parse_degrees(row_deg_line, ln, m, max_dc, "row")?;

    let mut col_edges: Vec<(u32, u32)> = Vec::new();
    for (v, &deg) in col_deg.iter().enumerate() {
        let (ln, list) = next_line("column neighbor list")?;
        for c in parse_neighbor_list(list, ln, deg, max_dv, m, "check")? {
            col_edges.push((v as u32, c));
        }
    }
    let mut row_edges: Vec<(u32, u32)> = Vec::new();
    for (c, &deg) in row_deg.iter().enumerate() {
        let (ln, list) = next_line("row neighbor list")?;
        for v in parse_neighbor_list(list, ln, deg, max_dc, n, "variable")? {
            row_edges.push((v, c as u32));
        }
    }
    if let Ok((ln, _)) = next_line("nothing") {
        return Err(Error::Parse { line: ln, detail: "unexpected trailing content".into() });
    }

    let mut a = col_edges.clone();
    let mut b = row_edges;
    a.sort_unstable();
    b.sort_unstable();
    if a != b {
        let only_cols = a.iter().find(|e| b.binary_search(e).is_err());
        let only_rows = b.iter().find(|e| a.binary_search(e).is_err());
        let mut detail = String::new();
        if let Some((v, c)) = only_cols {
            detail = format!("column {} lists check {}, row does not", v + 1, c + 1);
        } else if let Some((v, c)) = only_rows {
            detail = format!("row {} lists variable {}, column does not", c + 1, v + 1);
        }
        return Err(Error::Inconsistent(detail));
    }

    TannerGraph::from_edges(n, m, col_edges)
}

/// Renders a graph back to alist text; neighbor lists are zero-padded to the
/// maximum degree and written ascending. `load_alist` inverts this exactly.
pub fn save_alist(g: &TannerGraph) -> String {
    use std::fmt::Write;

    let max_dv = (0..g.n_vars()).map(|v| g.vn_edges(v as u32).len()).max().unwrap_or(0);
    let max_dc = (0..g.n_checks()).map(|c| g.cn_edges(c as u32).len()).max().unwrap_or(0);
    let mut out = String::new();
    writeln!(out, "{} {}", g.n_vars(), g.n_checks()).unwrap();
    writeln!(out, "{max_dv} {max_dc}").unwrap();
    let join = |it: &mut dyn Iterator<Item = usize>| {
        it.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
    };
    writeln!(out, "{}", join(&mut (0..g.n_vars()).map(|v| g.vn_edges(v as u32).len()))).unwrap();
    writeln!(out, "{}", join(&mut (0..g.n_checks()).map(|c| g.cn_edges(c as u32).len()))).unwrap();
    for v in 0..g.n_vars() {
        let mut ids: Vec<usize> =
            g.vn_neighbors(v as u32).map(|c| c as usize + 1).collect();
        ids.sort_unstable();
        ids.resize(max_dv, 0);
        writeln!(out, "{}", join(&mut ids.into_iter())).unwrap();
    }
    for c in 0..g.n_checks() {
        let mut ids: Vec<usize> =
            g.cn_neighbors(c as u32).map(|v| v as usize + 1).collect();
        ids.sort_unstable();
        ids.resize(max_dc, 0);
        writeln!(out, "{}", join(&mut ids.into_iter())).unwrap();
    }
    out
}

fn parse_ints(line: &str, ln: usize, what: &str) -> Result<Vec<i64>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<i64>().map_err(|_| Error::Parse {
                line: ln,
                detail: format!("{what}: `{tok}` is not an integer"),
            })
        })
        .collect()
}

/// Reclassifies a generic parse error on a header line.
fn as_header(e: Error) -> Error {
    match e {
        Error::Parse { line, detail } => Error::MalformedHeader { line, detail },
        e => e,
    }
}

fn parse_degrees(line: &str, ln: usize, count: usize, max: i64, side: &str) -> Result<Vec<usize>> {
    let vals = parse_ints(line, ln, "degree list")?;
    if vals.len() != count {
        return Err(Error::DegreeMismatch {
            line: ln,
            detail: format!("expected {count} {side} degrees, got {}", vals.len()),
        });
    }
    vals.iter()
        .map(|&d| {
            if d < 0 || d > max {
                Err(Error::DegreeMismatch {
                    line: ln,
                    detail: format!("{side} degree {d} outside [0, {max}]"),
                })
            } else {
                Ok(d as usize)
            }
        })
        .collect()
}

/// Parses one neighbor list line: `deg` 1-based indices, optionally padded
/// with zeros up to `max`. Returns 0-based indices in file order.
fn parse_neighbor_list(
    line: &str,
    ln: usize,
    deg: usize,
    max: i64,
    other_side: usize,
    kind: &str,
) -> Result<Vec<u32>> {
    let vals = parse_ints(line, ln, "neighbor list")?;
    if vals.len() != deg && vals.len() != max as usize {
        return Err(Error::DegreeMismatch {
            line: ln,
            detail: format!(
                "expected {deg} neighbors (or {max} zero-padded), got {} values",
                vals.len()
            ),
        });
    }
    let (entries, padding) = vals.split_at(deg.min(vals.len()));
    if let Some(&z) = padding.iter().find(|&&x| x != 0) {
        return Err(Error::DegreeMismatch {
            line: ln,
            detail: format!("nonzero entry {z} beyond declared degree {deg}"),
        });
    }
    let mut out = Vec::with_capacity(deg);
    for &x in entries {
        if x < 1 || x > other_side as i64 {
            return Err(Error::OutOfRange {
                line: ln,
                detail: format!("{kind} index {x} outside [1, {other_side}]"),
            });
        }
        let idx = (x - 1) as u32;
        if out.contains(&idx) {
            return Err(Error::DuplicateNeighbor {
                line: ln,
                detail: format!("{kind} {x} listed twice"),
            });
        }
        out.push(idx);
    }
    Ok(out)
}

// --- quasi-cyclic construction ----------------------------------------

/// Block description of a quasi-cyclic code: a rows x cols grid of p x p
/// blocks, each either zero (`None`) or the identity cyclically shifted by
/// the stored amount.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftMatrix {
    rows: usize,
    cols: usize,
    p: usize,
    shifts: Vec<Option<u32>>,
}

impl ShiftMatrix {
    pub fn new(rows: usize, cols: usize, p: usize, shifts: Vec<Option<u32>>) -> Result<Self> {
        if rows == 0 || cols == 0 || p == 0 {
            return Err(Error::InvalidGraph(format!(
                "shift matrix dimensions must be positive, got {rows} x {cols}, p = {p}"
            )));
        }
        if shifts.len() != rows * cols {
            return Err(Error::InvalidGraph(format!(
                "expected {} shift entries, got {}",
                rows * cols,
                shifts.len()
            )));
        }
        if let Some(s) = shifts.iter().flatten().find(|&&s| s as usize >= p) {
            return Err(Error::InvalidGraph(format!("shift {s} outside [0, {p})")));
        }
        Ok(ShiftMatrix { rows, cols, p, shifts })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn shift(&self, j: usize, l: usize) -> Option<u32> {
        self.shifts[j * self.cols + l]
    }

    /// Parses the shift file format: a `rows cols p` header line, then one
    /// line per block row with `cols` entries, each a shift or `-` for a
    /// zero block. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("")))
            .filter(|(_, l)| !l.trim().is_empty());

        let (ln, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            detail: "empty shift file".into(),
        })?;
        let vals = parse_ints(header, ln, "shift header").map_err(as_header)?;
        let [rows, cols, p] = vals[..] else {
            return Err(Error::MalformedHeader {
                line: ln,
                detail: format!("expected `rows cols p`, got {} values", vals.len()),
            });
        };
        if rows < 1 || cols < 1 || p < 1 {
            return Err(Error::MalformedHeader {
                line: ln,
                detail: format!("rows, cols, p must be positive, got {rows} {cols} {p}"),
            });
        }

        let mut shifts = Vec::with_capacity((rows * cols) as usize);
        for _ in 0..rows {
            let (ln, row) = lines.next().ok_or(Error::Parse {
                line: text.lines().count(),
                detail: "unexpected end of file in shift grid".into(),
            })?;
            let toks: Vec<&str> = row.split_whitespace().collect();
            if toks.len() != cols as usize {
                return Err(Error::Parse {
                    line: ln,
                    detail: format!("expected {cols} entries, got {}", toks.len()),
                });
            }
            for tok in toks {
                if tok == "-" {
                    shifts.push(None);
                    continue;
                }
                let s: i64 = tok.parse().map_err(|_| Error::Parse {
                    line: ln,
                    detail: format!("`{tok}` is neither a shift nor `-`"),
                })?;
                if s < 0 || s >= p {
                    return Err(Error::OutOfRange {
                        line: ln,
                        detail: format!("shift {s} outside [0, {p})"),
                    });
                }
                shifts.push(Some(s as u32));
            }
        }
        if let Some((ln, _)) = lines.next() {
            return Err(Error::Parse { line: ln, detail: "unexpected trailing content".into() });
        }
        ShiftMatrix::new(rows as usize, cols as usize, p as usize, shifts)
    }

    pub fn format(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        writeln!(out, "{} {} {}", self.rows, self.cols, self.p).unwrap();
        for j in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|l| match self.shift(j, l) {
                    Some(s) => s.to_string(),
                    None => "-".into(),
                })
                .collect();
            writeln!(out, "{}", row.join(" ")).unwrap();
        }
        out
    }
}

/// Expands a shift matrix into its Tanner graph. Block (j, l) with shift s
/// connects variable l*p + ((r+s) mod p) to check j*p + r for r in [0, p).
pub fn build_qc(sm: &ShiftMatrix) -> TannerGraph {
    let p = sm.p() as u32;
    let mut edges = Vec::new();
    for j in 0..sm.rows() {
        for l in 0..sm.cols() {
            if let Some(s) = sm.shift(j, l) {
                for r in 0..p {
                    edges.push((l as u32 * p + (r + s) % p, j as u32 * p + r));
                }
            }
        }
    }
    TannerGraph::from_edges(sm.cols() * sm.p(), sm.rows() * sm.p(), edges)
        .expect("shift matrix expansion cannot produce an invalid graph")
}

// --- GF(2) rank --------------------------------------------------------

/// Rank of the parity-check matrix over GF(2), by Gaussian elimination on
/// bit-packed rows. The code dimension is `n_vars - gf2_rank(g)`.
pub fn gf2_rank(g: &TannerGraph) -> usize {
    let words = g.n_vars().div_ceil(64);
    let mut rows: Vec<Vec<u64>> = (0..g.n_checks())
        .map(|c| {
            let mut row = vec![0u64; words];
            for v in g.cn_neighbors(c as u32) {
                row[v as usize / 64] ^= 1 << (v % 64);
            }
            row
        })
        .collect();

    let mut rank = 0;
    for col in 0..g.n_vars() {
        let (w, bit) = (col / 64, 1u64 << (col % 64));
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r][w] & bit != 0) else {
            continue;
        };
        rows.swap(rank, pivot);
        let (head, tail) = rows.split_at_mut(rank + 1);
        let pivot_row = &head[rank];
        for row in tail.iter_mut() {
            if row[w] & bit != 0 {
                for (a, b) in row.iter_mut().zip(pivot_row) {
                    *a ^= b;
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

/// Shift grid of the (155, 64) quasi-cyclic code used throughout the test
/// suite: 3 x 5 blocks of size 31.
#[cfg(test)]
pub(crate) fn tanner_155_shifts() -> ShiftMatrix {
    let grid: [[u32; 5]; 3] = [[1, 2, 4, 8, 16], [5, 10, 20, 9, 18], [25, 19, 7, 14, 28]];
    let shifts = grid.iter().flatten().map(|&s| Some(s)).collect();
    ShiftMatrix::new(3, 5, 31, shifts).unwrap()
}
