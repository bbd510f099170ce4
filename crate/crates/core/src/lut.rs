//! Variable-node update tables and their coefficient representation.
//!
//! A symmetric variable-node rule for degree d_v can be written two ways:
//!
//! * as a lookup table over the (2s+1)^(d_v−1) tuples of incoming messages
//!   (stored here for channel input −C; the +C side follows by negation
//!   symmetry), or
//! * as one real weight ω per unordered message tuple, with the output
//!   Q(sum of messages + ω·z) for channel value z.
//!
//! The two are exactly interconvertible: for a target output μ at a tuple
//! with value sum s̄, the set of weights realizing it is an interval with
//! closure determined by the quantizer's half-open cells. [`derive_lut`]
//! goes weights → table, [`coefficients_from_lut`] picks a weight inside
//! each interval to go back. With the midpoint picker the round trip
//! table → weights → table is the identity.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::alphabet::{Alphabet, Message};
use crate::{Error, Result};

// --- lookup table --------------------------------------------------------

/// Dense variable-node lookup table for the −C channel value.
///
/// The table is indexed by the full cartesian product of d_v−1 incoming
/// messages, so lookups need no sorting; construction from files or
/// coefficients always produces a permutation-symmetric table.
#[derive(Debug, Clone, PartialEq)]
pub struct FaidLut {
    alphabet: Alphabet,
    d_v: usize,
    table: Vec<i8>,
}

impl FaidLut {
    /// Builds a table by evaluating `f` on every tuple of d_v−1 messages.
    pub fn from_fn(
        alphabet: Alphabet,
        d_v: usize,
        mut f: impl FnMut(&[Message]) -> Message,
    ) -> Result<FaidLut> {
        check_degree(&alphabet, d_v)?;
        let arity = d_v - 1;
        let size = alphabet.size().pow(arity as u32);
        let mut table = Vec::with_capacity(size);
        let mut err = None;
        for_each_tuple(&alphabet, arity, |tuple| {
            let out = f(tuple);
            if out.magnitude() as usize > alphabet.s() {
                err.get_or_insert_with(|| {
                    Error::InvalidAlphabet(format!(
                        "table output {} outside alphabet at tuple {:?}",
                        out.index(),
                        tuple.iter().map(|m| m.index()).collect::<Vec<_>>()
                    ))
                });
            }
            table.push(out.index());
        });
        if let Some(e) = err {
            return Err(e);
        }
        Ok(FaidLut { alphabet, d_v, table })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn d_v(&self) -> usize {
        self.d_v
    }

    /// Number of table inputs, d_v − 1.
    pub fn arity(&self) -> usize {
        self.d_v - 1
    }

    /// Table value for channel input −C. `extrinsic` may be in any order.
    pub fn entry(&self, extrinsic: &[Message]) -> Message {
        assert_eq!(extrinsic.len(), self.arity(), "wrong extrinsic arity");
        Message::new(self.table[flat_index(&self.alphabet, extrinsic)])
    }

    /// Table value for either channel sign. The +C side is the reflection
    /// Φ(+C, n) = −Φ(−C, −n), which keeps the rule odd in all inputs.
    pub fn lookup(&self, channel_sign: i8, extrinsic: &[Message]) -> Message {
        assert!(channel_sign == 1 || channel_sign == -1, "channel sign must be ±1");
        assert_eq!(extrinsic.len(), self.arity(), "wrong extrinsic arity");
        if channel_sign < 0 {
            Message::new(self.table[flat_index(&self.alphabet, extrinsic)])
        } else {
            let flipped: Vec<Message> = extrinsic.iter().map(|&m| -m).collect();
            -Message::new(self.table[flat_index(&self.alphabet, &flipped)])
        }
    }

    /// True when the table is invariant under permutation of its inputs.
    pub fn is_symmetric(&self) -> bool {
        let mut ok = true;
        for_each_tuple(&self.alphabet, self.arity(), |tuple| {
            if !ok {
                return;
            }
            let mut sorted: Vec<Message> = tuple.to_vec();
            sorted.sort();
            if self.entry(tuple) != self.entry(&sorted) {
                ok = false;
            }
        });
        ok
    }

    /// Renders the table in its text format: header `s d_v C`, thresholds,
    /// levels, then one `i_1 … i_{d_v−1} -> value` line per sorted tuple.
    pub fn to_text(&self) -> String {
        let mut out = format_header(&self.alphabet, self.d_v);
        for key in canonical_keys(&self.alphabet, self.arity()) {
            let tuple: Vec<Message> = key.iter().map(|&i| Message::new(i)).collect();
            let lhs: Vec<String> = key.iter().map(|i| i.to_string()).collect();
            out.push_str(&format!("{} -> {}\n", lhs.join(" "), self.entry(&tuple).index()));
        }
        out
    }

    /// Parses the text format written by [`FaidLut::to_text`]. Every sorted
    /// tuple must appear exactly once; `#` lines are comments.
    pub fn from_text(text: &str) -> Result<FaidLut> {
        let (alphabet, d_v, entries) = parse_table_text(text, "->")?;
        let arity = d_v - 1;
        let keys = canonical_keys(&alphabet, arity);
        let mut by_key: Vec<Option<i8>> = vec![None; keys.len()];
        for (ln, key, value) in entries {
            let v = value.parse::<i64>().map_err(|_| Error::Parse {
                line: ln,
                detail: format!("`{value}` is not an integer table value"),
            })?;
            if v.unsigned_abs() as usize > alphabet.s() {
                return Err(Error::OutOfRange {
                    line: ln,
                    detail: format!("table value {v} outside [-{0}, {0}]", alphabet.s()),
                });
            }
            let slot = key_slot(&keys, &key).ok_or_else(|| Error::Parse {
                line: ln,
                detail: format!("tuple {key:?} is not in non-decreasing order"),
            })?;
            if by_key[slot].replace(v as i8).is_some() {
                return Err(Error::Parse {
                    line: ln,
                    detail: format!("duplicate entry for tuple {key:?}"),
                });
            }
        }
        let total = text.lines().count();
        if let Some(slot) = by_key.iter().position(Option::is_none) {
            return Err(Error::Parse {
                line: total,
                detail: format!("missing entry for tuple {:?}", keys[slot]),
            });
        }

        let lut = FaidLut::from_fn(alphabet, d_v, |tuple| {
            let mut sorted: Vec<i8> = tuple.iter().map(|m| m.index()).collect();
            sorted.sort_unstable();
            let slot = key_slot(&keys, &sorted).expect("sorted tuple is canonical");
            Message::new(by_key[slot].expect("all slots filled"))
        })?;
        Ok(lut)
    }
}

// --- coefficient sets -----------------------------------------------------

/// One weight per unordered tuple of d_v−1 messages, keyed canonically by
/// the non-decreasing tuple of signed level indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    alphabet: Alphabet,
    d_v: usize,
    keys: Vec<Vec<i8>>,
    values: Vec<f64>,
    /// Full-tuple flat index → key slot, so unordered lookups need no sort.
    slot_of: Vec<u32>,
}

impl CoefficientSet {
    /// Builds a set from values listed in canonical key order.
    pub fn from_values(alphabet: Alphabet, d_v: usize, values: Vec<f64>) -> Result<CoefficientSet> {
        check_degree(&alphabet, d_v)?;
        let arity = d_v - 1;
        let keys = canonical_keys(&alphabet, arity);
        if values.len() != keys.len() {
            return Err(Error::Mismatch(format!(
                "expected {} coefficients, got {}",
                keys.len(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Mismatch(format!("coefficient {v} is not finite")));
        }
        let mut slot_of = vec![0u32; alphabet.size().pow(arity as u32)];
        let mut flat = 0usize;
        for_each_tuple(&alphabet, arity, |tuple| {
            let mut sorted: Vec<i8> = tuple.iter().map(|m| m.index()).collect();
            sorted.sort_unstable();
            slot_of[flat] = key_slot(&keys, &sorted).expect("sorted tuple is canonical") as u32;
            flat += 1;
        });
        Ok(CoefficientSet { alphabet, d_v, keys, values, slot_of })
    }

    /// The constant-weight set: every tuple shares one ω, which makes the
    /// derived rule a quantized offset-style linear update.
    pub fn constant(alphabet: Alphabet, d_v: usize, omega: f64) -> Result<CoefficientSet> {
        check_degree(&alphabet, d_v)?;
        let n = canonical_keys(&alphabet, d_v - 1).len();
        CoefficientSet::from_values(alphabet, d_v, vec![omega; n])
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn d_v(&self) -> usize {
        self.d_v
    }

    pub fn arity(&self) -> usize {
        self.d_v - 1
    }

    /// Number of keys: the number of multisets of size d_v−1 over 2s+1
    /// symbols.
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Canonical keys, lexicographically ascending.
    pub fn keys(&self) -> &[Vec<i8>] {
        &self.keys
    }

    pub fn key(&self, slot: usize) -> &[i8] {
        &self.keys[slot]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Key slot for an unordered extrinsic tuple and a channel sign. The +C
    /// side keys on the negated tuple, mirroring the table reflection.
    pub fn slot(&self, channel_sign: i8, extrinsic: &[Message]) -> usize {
        assert!(channel_sign == 1 || channel_sign == -1, "channel sign must be ±1");
        assert_eq!(extrinsic.len(), self.arity(), "wrong extrinsic arity");
        let flat = if channel_sign < 0 {
            flat_index(&self.alphabet, extrinsic)
        } else {
            let flipped: Vec<Message> = extrinsic.iter().map(|&m| -m).collect();
            flat_index(&self.alphabet, &flipped)
        };
        self.slot_of[flat] as usize
    }

    /// Weight for an unordered extrinsic tuple and a channel sign.
    pub fn omega(&self, channel_sign: i8, extrinsic: &[Message]) -> f64 {
        self.values[self.slot(channel_sign, extrinsic)]
    }

    /// Renders the set in its text format: same header as the table format,
    /// then one `i_1 … i_{d_v−1} : ω` line per key.
    pub fn to_text(&self) -> String {
        let mut out = format_header(&self.alphabet, self.d_v);
        for (key, value) in self.keys.iter().zip(&self.values) {
            let lhs: Vec<String> = key.iter().map(|i| i.to_string()).collect();
            out.push_str(&format!("{} : {}\n", lhs.join(" "), value));
        }
        out
    }

    /// Parses the text format written by [`CoefficientSet::to_text`]. Every
    /// key must appear exactly once; `#` lines are comments.
    pub fn from_text(text: &str) -> Result<CoefficientSet> {
        let (alphabet, d_v, entries) = parse_table_text(text, ":")?;
        let keys = canonical_keys(&alphabet, d_v - 1);
        let mut by_key: Vec<Option<f64>> = vec![None; keys.len()];
        for (ln, key, value) in entries {
            let v = value.parse::<f64>().map_err(|_| Error::Parse {
                line: ln,
                detail: format!("`{value}` is not a real coefficient"),
            })?;
            if !v.is_finite() {
                return Err(Error::OutOfRange {
                    line: ln,
                    detail: format!("coefficient {v} is not finite"),
                });
            }
            let slot = key_slot(&keys, &key).ok_or_else(|| Error::Parse {
                line: ln,
                detail: format!("tuple {key:?} is not in non-decreasing order"),
            })?;
            if by_key[slot].replace(v).is_some() {
                return Err(Error::Parse {
                    line: ln,
                    detail: format!("duplicate entry for tuple {key:?}"),
                });
            }
        }
        let total = text.lines().count();
        if let Some(slot) = by_key.iter().position(Option::is_none) {
            return Err(Error::Parse {
                line: total,
                detail: format!("missing entry for tuple {:?}", keys[slot]),
            });
        }
        let values = by_key.into_iter().map(|v| v.expect("all slots filled")).collect();
        CoefficientSet::from_values(alphabet, d_v, values)
    }
}

// --- conversions ----------------------------------------------------------

/// Expands a coefficient set into its lookup table: each −C entry is
/// Q(sum of tuple values − ω·C).
pub fn derive_lut(coeffs: &CoefficientSet) -> FaidLut {
    let a = coeffs.alphabet().clone();
    let c = a.channel();
    FaidLut::from_fn(a.clone(), coeffs.d_v(), |tuple| {
        let sum: f64 = tuple.iter().map(|&m| a.value(m)).sum();
        a.quantize(sum - coeffs.omega(-1, tuple) * c)
    })
    .expect("quantizer output is always in the alphabet")
}

/// A (possibly half-open, possibly unbounded) interval of channel weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffInterval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl CoeffInterval {
    pub fn contains(&self, w: f64) -> bool {
        (w > self.lo || (self.lo_closed && w == self.lo))
            && (w < self.hi || (self.hi_closed && w == self.hi))
    }

    /// A canonical interior point: the midpoint when bounded, otherwise the
    /// finite endpoint moved `pad` into the interval.
    pub fn midpoint(&self, pad: f64) -> f64 {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => 0.5 * (self.lo + self.hi),
            (true, false) => self.lo + pad,
            (false, true) => self.hi - pad,
            (false, false) => 0.0,
        }
    }

    /// Uniform draw from the interval; unbounded sides are truncated `2·pad`
    /// past the finite endpoint. Rejection keeps open endpoints excluded.
    pub fn sample(&self, pad: f64, rng: &mut impl Rng) -> f64 {
        loop {
            let w = match (self.lo.is_finite(), self.hi.is_finite()) {
                (true, true) => self.lo + rng.random::<f64>() * (self.hi - self.lo),
                (true, false) => self.lo + rng.random::<f64>() * 2.0 * pad,
                (false, true) => self.hi - rng.random::<f64>() * 2.0 * pad,
                (false, false) => return 0.0,
            };
            if self.contains(w) {
                return w;
            }
        }
    }
}

/// The exact set of weights ω for which Q(tuple_sum + ω·(−C)) equals `mu`:
///
/// * μ = 0:     ((s̄ − T_1)/C, (s̄ + T_1)/C), both ends open;
/// * μ = +L_j:  ((s̄ − T_{j+1})/C, (s̄ − T_j)/C], with T_{s+1} = ∞;
/// * μ = −L_j:  [(s̄ + T_j)/C, (s̄ + T_{j+1})/C).
///
/// Membership is iff, so realizing a whole table is one independent interval
/// per key.
pub fn coefficient_ranges(mu: Message, tuple_sum: f64, alphabet: &Alphabet) -> CoeffInterval {
    let s = alphabet.s();
    let j = mu.magnitude() as usize;
    assert!(j <= s, "target level outside alphabet");
    let c = alphabet.channel();
    let t = alphabet.thresholds();
    if j == 0 {
        return CoeffInterval {
            lo: (tuple_sum - t[0]) / c,
            hi: (tuple_sum + t[0]) / c,
            lo_closed: false,
            hi_closed: false,
        };
    }
    if mu.signum() > 0 {
        CoeffInterval {
            lo: if j == s { f64::NEG_INFINITY } else { (tuple_sum - t[j]) / c },
            hi: (tuple_sum - t[j - 1]) / c,
            lo_closed: false,
            hi_closed: true,
        }
    } else {
        CoeffInterval {
            lo: (tuple_sum + t[j - 1]) / c,
            hi: if j == s { f64::INFINITY } else { (tuple_sum + t[j]) / c },
            lo_closed: true,
            hi_closed: false,
        }
    }
}

/// How [`coefficients_from_lut`] picks a weight inside each valid interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Picker {
    /// Deterministic interior point; makes the round trip reproducible.
    Midpoint,
    /// Seeded uniform draw from each interval.
    Uniform { seed: u64 },
}

/// Inverts [`derive_lut`]: picks one weight per key realizing the table's
/// entry for that key. Requires a permutation-symmetric table.
pub fn coefficients_from_lut(lut: &FaidLut, picker: Picker) -> Result<CoefficientSet> {
    if !lut.is_symmetric() {
        return Err(Error::Mismatch(
            "table is not permutation-symmetric, no unordered weight set can realize it".into(),
        ));
    }
    let a = lut.alphabet();
    let pad = a.thresholds()[0] / a.channel();
    let mut rng = match picker {
        Picker::Midpoint => None,
        Picker::Uniform { seed } => Some(ChaCha12Rng::seed_from_u64(seed)),
    };
    let values = canonical_keys(a, lut.arity())
        .into_iter()
        .map(|key| {
            let tuple: Vec<Message> = key.iter().map(|&i| Message::new(i)).collect();
            let sum: f64 = tuple.iter().map(|&m| a.value(m)).sum();
            let iv = coefficient_ranges(lut.entry(&tuple), sum, a);
            match &mut rng {
                None => iv.midpoint(pad),
                Some(rng) => iv.sample(pad, rng),
            }
        })
        .collect();
    CoefficientSet::from_values(a.clone(), lut.d_v(), values)
}

// --- shared helpers ---------------------------------------------------

fn check_degree(alphabet: &Alphabet, d_v: usize) -> Result<()> {
    if d_v < 2 {
        return Err(Error::InvalidConfig(format!(
            "variable degree must be at least 2, got {d_v}"
        )));
    }
    let size = (alphabet.size() as f64).powi(d_v as i32 - 1);
    if size > 1e8 {
        return Err(Error::InvalidConfig(format!(
            "table would need {size:.0} entries; refusing above 1e8"
        )));
    }
    Ok(())
}

/// Flat index of an ordered tuple in the dense cartesian-product table.
fn flat_index(alphabet: &Alphabet, tuple: &[Message]) -> usize {
    let base = alphabet.size();
    tuple.iter().fold(0usize, |acc, &m| acc * base + alphabet.offset(m))
}

/// Calls `f` on every ordered tuple of the given arity, in flat-index order.
fn for_each_tuple(alphabet: &Alphabet, arity: usize, mut f: impl FnMut(&[Message])) {
    let size = alphabet.size();
    let mut offsets = vec![0usize; arity];
    let mut tuple: Vec<Message> = offsets.iter().map(|&o| alphabet.from_offset(o)).collect();
    loop {
        f(&tuple);
        // odometer increment, least significant position last
        let mut pos = arity;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            offsets[pos] += 1;
            if offsets[pos] < size {
                tuple[pos] = alphabet.from_offset(offsets[pos]);
                break;
            }
            offsets[pos] = 0;
            tuple[pos] = alphabet.from_offset(0);
        }
    }
}

/// All non-decreasing tuples of signed level indices, lexicographically
/// ascending. These are the canonical keys for unordered lookups.
pub fn canonical_keys(alphabet: &Alphabet, arity: usize) -> Vec<Vec<i8>> {
    let s = alphabet.s() as i8;
    let mut keys = Vec::new();
    let mut current = Vec::with_capacity(arity);
    fn rec(keys: &mut Vec<Vec<i8>>, current: &mut Vec<i8>, from: i8, s: i8, left: usize) {
        if left == 0 {
            keys.push(current.clone());
            return;
        }
        for i in from..=s {
            current.push(i);
            rec(keys, current, i, s, left - 1);
            current.pop();
        }
    }
    rec(&mut keys, &mut current, -s, s, arity);
    keys
}

/// Binary search for a sorted tuple among the canonical keys.
fn key_slot(keys: &[Vec<i8>], key: &[i8]) -> Option<usize> {
    keys.binary_search_by(|k| k.as_slice().cmp(key)).ok()
}

fn format_header(alphabet: &Alphabet, d_v: usize) -> String {
    let join = |xs: &[f64]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    format!(
        "{} {} {}\n{}\n{}\n",
        alphabet.s(),
        d_v,
        alphabet.channel(),
        join(alphabet.thresholds()),
        join(alphabet.levels()),
    )
}

/// Shared parser for the table and coefficient formats: three header lines,
/// then `i_1 … i_k <sep> value` entry lines. Returns the alphabet, d_v and
/// the raw entries as (line, sorted key, value text).
#[allow(clippy::type_complexity)]
fn parse_table_text<'a>(
    text: &'a str,
    sep: &str,
) -> Result<(Alphabet, usize, Vec<(usize, Vec<i8>, &'a str)>)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (ln, header) = lines.next().ok_or(Error::Parse { line: 1, detail: "empty file".into() })?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    let [s_tok, dv_tok, c_tok] = toks[..] else {
        return Err(Error::MalformedHeader {
            line: ln,
            detail: format!("expected `s d_v C`, got {} values", toks.len()),
        });
    };
    let s: usize = s_tok.parse().map_err(|_| Error::MalformedHeader {
        line: ln,
        detail: format!("`{s_tok}` is not a level count"),
    })?;
    let d_v: usize = dv_tok.parse().map_err(|_| Error::MalformedHeader {
        line: ln,
        detail: format!("`{dv_tok}` is not a degree"),
    })?;
    let c: f64 = c_tok.parse().map_err(|_| Error::MalformedHeader {
        line: ln,
        detail: format!("`{c_tok}` is not a channel magnitude"),
    })?;

    let parse_reals = |ln: usize, line: &str, what: &str| -> Result<Vec<f64>> {
        let vals: std::result::Result<Vec<f64>, _> =
            line.split_whitespace().map(str::parse::<f64>).collect();
        let vals = vals.map_err(|_| Error::Parse {
            line: ln,
            detail: format!("{what} line contains a non-real token"),
        })?;
        if vals.len() != s {
            return Err(Error::Parse {
                line: ln,
                detail: format!("expected {s} {what} values, got {}", vals.len()),
            });
        }
        Ok(vals)
    };
    let (ln_t, t_line) = lines.next().ok_or(Error::Parse {
        line: text.lines().count(),
        detail: "missing threshold line".into(),
    })?;
    let thresholds = parse_reals(ln_t, t_line, "threshold")?;
    let (ln_l, l_line) = lines.next().ok_or(Error::Parse {
        line: text.lines().count(),
        detail: "missing level line".into(),
    })?;
    let levels = parse_reals(ln_l, l_line, "level")?;
    let alphabet = Alphabet::new(levels, thresholds, c)?;
    if d_v < 2 {
        return Err(Error::MalformedHeader {
            line: ln,
            detail: format!("variable degree must be at least 2, got {d_v}"),
        });
    }

    let mut entries = Vec::new();
    for (ln, line) in lines {
        let Some((lhs, rhs)) = line.split_once(sep) else {
            return Err(Error::Parse {
                line: ln,
                detail: format!("expected `i_1 … i_{} {sep} value`", d_v - 1),
            });
        };
        let key: std::result::Result<Vec<i8>, _> =
            lhs.split_whitespace().map(str::parse::<i8>).collect();
        let key = key.map_err(|_| Error::Parse {
            line: ln,
            detail: "tuple contains a non-integer index".into(),
        })?;
        if key.len() != d_v - 1 {
            return Err(Error::Parse {
                line: ln,
                detail: format!("expected {} tuple indices, got {}", d_v - 1, key.len()),
            });
        }
        if let Some(&i) = key.iter().find(|i| i.unsigned_abs() as usize > s) {
            return Err(Error::OutOfRange {
                line: ln,
                detail: format!("tuple index {i} outside [-{s}, {s}]"),
            });
        }
        entries.push((ln, key, rhs.trim()));
    }
    Ok((alphabet, d_v, entries))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msg_tuple(idx: &[i8]) -> Vec<Message> {
        idx.iter().map(|&i| Message::new(i)).collect()
    }

    #[test]
    fn canonical_key_enumeration() {
        let a = Alphabet::uniform(3);
        let keys = canonical_keys(&a, 2);
        assert_eq!(keys.len(), 28);
        assert_eq!(keys.first().unwrap(), &vec![-3, -3]);
        assert_eq!(keys.last().unwrap(), &vec![3, 3]);
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
        assert!(keys.iter().all(|k| k[0] <= k[1]));

        assert_eq!(canonical_keys(&Alphabet::uniform(1), 3).len(), 10);
    }

    #[test]
    fn constant_weight_set_derives_linear_rule() {
        let a = Alphabet::uniform(3);
        let coeffs = CoefficientSet::constant(a.clone(), 3, 1.0).unwrap();
        let lut = derive_lut(&coeffs);
        // Q(0 + 0 - 1) = -L_1, Q(3 + 3 - 1) = +L_3, Q(1 - 2 - 1) = -L_2.
        assert_eq!(lut.entry(&msg_tuple(&[0, 0])).index(), -1);
        assert_eq!(lut.entry(&msg_tuple(&[3, 3])).index(), 3);
        assert_eq!(lut.entry(&msg_tuple(&[1, -2])).index(), -2);
    }

    #[test]
    fn trained_weights_reproduce_documented_entries() {
        let a = Alphabet::uniform(3);
        let mut coeffs = CoefficientSet::constant(a.clone(), 3, 1.0).unwrap();
        let set = |cs: &mut CoefficientSet, key: &[i8], w: f64| {
            let slot = cs.slot(-1, &msg_tuple(key));
            cs.values_mut()[slot] = w;
        };
        set(&mut coeffs, &[-3, -3], -1.4994);
        set(&mut coeffs, &[-3, 0], 0.5944);
        set(&mut coeffs, &[3, 3], 3.0184);

        let lut = derive_lut(&coeffs);
        // Q(-6 + 1.4994) = -3; Q(-3 - 0.5944) = -3; Q(6 - 3.0184) = +3.
        assert_eq!(lut.entry(&msg_tuple(&[-3, -3])).index(), -3);
        assert_eq!(lut.entry(&msg_tuple(&[-3, 0])).index(), -3);
        assert_eq!(lut.entry(&msg_tuple(&[0, -3])).index(), -3);
        assert_eq!(lut.entry(&msg_tuple(&[3, 3])).index(), 3);
        // +C side by reflection: lookup(+1, (3,3)) = -entry(-3,-3) = +3.
        assert_eq!(lut.lookup(1, &msg_tuple(&[3, 3])).index(), 3);
        assert_eq!(lut.lookup(-1, &msg_tuple(&[-3, -3])).index(), -3);
    }

    #[test]
    fn lookup_obeys_negation_symmetry() {
        let a = Alphabet::uniform(3);
        let coeffs = random_coeffs(&a, 3, 7);
        let lut = derive_lut(&coeffs);
        for_each_tuple(&a, 2, |tuple| {
            let flipped: Vec<Message> = tuple.iter().map(|&m| -m).collect();
            assert_eq!(lut.lookup(1, tuple), -lut.lookup(-1, &flipped));
        });
    }

    #[test]
    fn lookup_matches_weighted_sum_for_both_channel_signs() {
        let a = Alphabet::uniform(3);
        let coeffs = random_coeffs(&a, 3, 11);
        let lut = derive_lut(&coeffs);
        for sign in [-1i8, 1] {
            for_each_tuple(&a, 2, |tuple| {
                let sum: f64 = tuple.iter().map(|&m| a.value(m)).sum();
                let z = sign as f64 * a.channel();
                let expect = a.quantize(sum + coeffs.omega(sign, tuple) * z);
                assert_eq!(lut.lookup(sign, tuple), expect);
            });
        }
    }

    #[test]
    fn range_examples() {
        let a = Alphabet::uniform(3);
        let iv = coefficient_ranges(Message::new(0), 2.0, &a);
        assert_eq!((iv.lo, iv.hi, iv.lo_closed, iv.hi_closed), (1.5, 2.5, false, false));

        let iv = coefficient_ranges(Message::new(2), 0.0, &a);
        assert_eq!((iv.lo, iv.hi, iv.lo_closed, iv.hi_closed), (-2.5, -1.5, false, true));

        let iv = coefficient_ranges(Message::new(-1), 0.0, &a);
        assert_eq!((iv.lo, iv.hi, iv.lo_closed, iv.hi_closed), (0.5, 1.5, true, false));

        let iv = coefficient_ranges(Message::new(3), 0.0, &a);
        assert!(iv.lo.is_infinite() && iv.lo < 0.0);
        assert_eq!((iv.hi, iv.hi_closed), (-2.5, true));

        let iv = coefficient_ranges(Message::new(-3), 0.0, &a);
        assert!(iv.hi.is_infinite() && iv.hi > 0.0);
        assert_eq!((iv.lo, iv.lo_closed), (2.5, true));
    }

    #[test]
    fn range_membership_is_iff() {
        // With C = 1 and dyadic levels all arithmetic below is exact, so
        // endpoint cases are decided exactly.
        let a = Alphabet::uniform(3);
        let sums = [-6.0, -3.0, -1.0, 0.0, 2.0, 5.0, 6.0];
        let omegas: Vec<f64> = (-56..=56).map(|i| i as f64 * 0.25).collect();
        for m in a.messages() {
            for &sum in &sums {
                let iv = coefficient_ranges(m, sum, &a);
                for &w in &omegas {
                    let realized = a.quantize(sum - w * a.channel());
                    assert_eq!(
                        realized == m,
                        iv.contains(w),
                        "mu = {m}, sum = {sum}, omega = {w}"
                    );
                }
            }
        }
    }

    #[test]
    fn midpoint_round_trip_is_identity() {
        let a = Alphabet::uniform(3);
        for seed in 0..20 {
            let lut = derive_lut(&random_coeffs(&a, 3, seed));
            let back = coefficients_from_lut(&lut, Picker::Midpoint).unwrap();
            assert_eq!(derive_lut(&back), lut, "seed {seed}");
        }
        // Random tables, not only coefficient-derived ones.
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        for _ in 0..20 {
            let lut = random_symmetric_lut(&a, 3, &mut rng);
            let back = coefficients_from_lut(&lut, Picker::Midpoint).unwrap();
            assert_eq!(derive_lut(&back), lut);
        }
    }

    #[test]
    fn random_picker_round_trips_and_is_seeded() {
        let a = Alphabet::uniform(3);
        let lut = derive_lut(&random_coeffs(&a, 3, 5));
        let one = coefficients_from_lut(&lut, Picker::Uniform { seed: 42 }).unwrap();
        let two = coefficients_from_lut(&lut, Picker::Uniform { seed: 42 }).unwrap();
        let other = coefficients_from_lut(&lut, Picker::Uniform { seed: 43 }).unwrap();
        assert_eq!(one, two);
        assert_ne!(one, other);
        assert_eq!(derive_lut(&one), lut);
        assert_eq!(derive_lut(&other), lut);
    }

    #[test]
    fn asymmetric_table_is_rejected() {
        let a = Alphabet::uniform(1);
        let lut = FaidLut::from_fn(a, 3, |t| t[0]).unwrap();
        assert!(!lut.is_symmetric());
        assert!(matches!(
            coefficients_from_lut(&lut, Picker::Midpoint),
            Err(Error::Mismatch(_))
        ));
    }

    #[test]
    fn lut_text_round_trip() {
        let a = Alphabet::uniform(3);
        let lut = derive_lut(&random_coeffs(&a, 3, 3));
        let text = lut.to_text();
        assert_eq!(FaidLut::from_text(&text).unwrap(), lut);
        assert!(text.starts_with("3 3 1\n0.5 1.5 2.5\n1 2 3\n"));
    }

    #[test]
    fn coeff_text_round_trip() {
        let a = Alphabet::uniform(3);
        let coeffs = random_coeffs(&a, 3, 4);
        let text = coeffs.to_text();
        assert_eq!(CoefficientSet::from_text(&text).unwrap(), coeffs);
    }

    #[test]
    fn table_text_errors() {
        // Missing one tuple line.
        let a = Alphabet::uniform(1);
        let lut = derive_lut(&CoefficientSet::constant(a.clone(), 2, 1.0).unwrap());
        let text = lut.to_text();
        let missing: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
        assert!(matches!(FaidLut::from_text(&missing), Err(Error::Parse { .. })));

        // Duplicate tuple line.
        let dup = format!("{text}-1 -> 0\n");
        assert!(matches!(FaidLut::from_text(&dup), Err(Error::Parse { .. })));

        // Unsorted tuple.
        let bad = "1 3 1\n0.5\n1\n1 -1 -> 0\n-1 -1 -> 0\n-1 0 -> 0\n-1 1 -> 0\n0 0 -> 0\n0 1 -> 0\n1 1 -> 0\n";
        assert!(matches!(FaidLut::from_text(bad), Err(Error::Parse { line: 4, .. })));

        // Out-of-range table value.
        let big = text.replace("-1 -> -1", "-1 -> -2");
        assert!(matches!(FaidLut::from_text(&big), Err(Error::OutOfRange { .. })));

        // Malformed header.
        assert!(matches!(
            FaidLut::from_text("3 3\n0.5 1.5 2.5\n1 2 3\n"),
            Err(Error::MalformedHeader { line: 1, .. })
        ));
    }

    #[test]
    fn wrong_coefficient_count_is_rejected() {
        let a = Alphabet::uniform(3);
        assert!(matches!(
            CoefficientSet::from_values(a, 3, vec![1.0; 27]),
            Err(Error::Mismatch(_))
        ));
    }

    fn random_coeffs(a: &Alphabet, d_v: usize, seed: u64) -> CoefficientSet {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let n = canonical_keys(a, d_v - 1).len();
        let values = (0..n).map(|_| rng.random::<f64>() * 8.0 - 4.0).collect();
        CoefficientSet::from_values(a.clone(), d_v, values).unwrap()
    }

    fn random_symmetric_lut(a: &Alphabet, d_v: usize, rng: &mut ChaCha12Rng) -> FaidLut {
        let keys = canonical_keys(a, d_v - 1);
        let s = a.s() as i8;
        let outs: Vec<i8> = keys.iter().map(|_| rng.random_range(-s..=s)).collect();
        FaidLut::from_fn(a.clone(), d_v, |tuple| {
            let mut key: Vec<i8> = tuple.iter().map(|m| m.index()).collect();
            key.sort_unstable();
            let slot = keys.binary_search(&key).unwrap();
            Message::new(outs[slot])
        })
        .unwrap()
    }
}
