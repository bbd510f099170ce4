//! Hard message-passing decoding on the binary symmetric channel.
//!
//! The all-zero codeword is transmitted throughout (the rules are odd, so
//! performance is codeword-independent); the received word is therefore the
//! error pattern itself, mapped bipolar: bit 0 → +C, bit 1 → −C. Messages
//! live on the edges. One iteration is a check pass, a bit-estimate pass
//! with a syndrome check, and (unless stopping) a variable pass through the
//! lookup table. Decoding succeeds when the syndrome reaches zero; success
//! does not by itself mean the error was corrected, so [`DecodeResult`]
//! keeps the hard decision for the caller to inspect.

use crate::alphabet::{Alphabet, Message};
use crate::graph::TannerGraph;
use crate::landscape::ErrorPattern;
use crate::lut::FaidLut;
use crate::{Error, Result};

/// Check-node rule: the product of the input signs times the minimum input
/// magnitude. Any zero input forces a zero output. Panics on an empty
/// input slice.
pub fn cn_update(extrinsic: &[Message]) -> Message {
    assert!(!extrinsic.is_empty(), "check update needs at least one input");
    let mut sign = 1i8;
    let mut mag = u8::MAX;
    for &m in extrinsic {
        sign *= m.signum();
        mag = mag.min(m.magnitude());
    }
    Message::new(sign * mag as i8)
}

/// Variable-node rule: the lookup table applied to the d_v−1 extrinsic
/// inputs and the sign of the channel value. Panics on wrong arity.
pub fn vn_update(lut: &FaidLut, channel_sign: i8, extrinsic: &[Message]) -> Message {
    lut.lookup(channel_sign, extrinsic)
}

/// Bit estimate for one variable node: the channel value plus all d_v
/// incoming message values, thresholded at zero. An exact zero keeps the
/// received bit (the sign of the channel value).
pub fn bit_estimate(alphabet: &Alphabet, channel_value: f64, incoming: &[Message]) -> (f64, u8) {
    let u = channel_value + incoming.iter().map(|&m| alphabet.value(m)).sum::<f64>();
    let bit = if u > 0.0 {
        0
    } else if u < 0.0 {
        1
    } else if channel_value < 0.0 {
        1
    } else {
        0
    };
    (u, bit)
}

/// Outcome of a decoding attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// The syndrome reached zero within the iteration budget.
    pub success: bool,
    /// Iteration at which the syndrome became zero, else the budget.
    pub iterations_used: usize,
    /// Hard decision at the stopping iteration.
    pub hard_decision: Vec<u8>,
    /// Bit-estimate sums at the stopping iteration.
    pub final_likelihoods: Vec<f64>,
}

impl DecodeResult {
    /// True when decoding converged to the transmitted all-zero word;
    /// distinguishes correction from convergence to a wrong codeword.
    pub fn corrects_all_zero(&self) -> bool {
        self.success && self.hard_decision.iter().all(|&b| b == 0)
    }
}

/// Runs the decoder on a received error pattern.
pub fn decode(
    graph: &TannerGraph,
    lut: &FaidLut,
    pattern: &ErrorPattern,
    max_iters: usize,
) -> Result<DecodeResult> {
    decode_observed(graph, lut, pattern, max_iters, |_, _, _| {})
}

/// Same as [`decode`], invoking `observer(t, likelihoods, hard)` after the
/// bit-estimate pass of every executed iteration. The last invocation
/// matches the returned result.
pub fn decode_observed(
    graph: &TannerGraph,
    lut: &FaidLut,
    pattern: &ErrorPattern,
    max_iters: usize,
    mut observer: impl FnMut(usize, &[f64], &[u8]),
) -> Result<DecodeResult> {
    let n = graph.n_vars();
    let d_v = validate_decode_inputs(graph, lut, pattern, max_iters)?;
    let alphabet = lut.alphabet();

    // Received word under the bipolar map; the sign of z drives the VN rule.
    let mut z = vec![alphabet.channel(); n];
    for &v in pattern.support() {
        z[v as usize] = -alphabet.channel();
    }

    let e = graph.n_edges();
    let mut vn_to_cn = vec![Message::ZERO; e];
    let mut cn_to_vn = vec![Message::ZERO; e];
    for (i, m) in vn_to_cn.iter_mut().enumerate() {
        let v = graph.edge_vn(i as u32) as usize;
        *m = Message::new(if z[v] > 0.0 { 1 } else { -1 });
    }

    let mut u = vec![0.0f64; n];
    let mut hard = vec![0u8; n];
    let mut tuple: Vec<Message> = Vec::with_capacity(d_v - 1);

    for t in 1..=max_iters {
        // Check pass: sign product and two smallest magnitudes per check.
        for c in 0..graph.n_checks() {
            let edges = graph.cn_edges(c as u32);
            let mut sign_nz = 1i8;
            let mut zeros = 0usize;
            let mut min1 = u8::MAX;
            let mut min2 = u8::MAX;
            let mut argmin = usize::MAX;
            for (pos, &e) in edges.iter().enumerate() {
                let m = vn_to_cn[e as usize];
                if m.is_zero() {
                    zeros += 1;
                } else {
                    sign_nz *= m.signum();
                }
                let mag = m.magnitude();
                if mag < min1 {
                    min2 = min1;
                    min1 = mag;
                    argmin = pos;
                } else if mag < min2 {
                    min2 = mag;
                }
            }
            for (pos, &e) in edges.iter().enumerate() {
                let m = vn_to_cn[e as usize];
                let sign = if m.is_zero() {
                    if zeros == 1 { sign_nz } else { 0 }
                } else if zeros > 0 {
                    0
                } else {
                    sign_nz * m.signum()
                };
                let mag = if pos == argmin { min2 } else { min1 };
                cn_to_vn[e as usize] = Message::new(sign * mag as i8);
            }
        }

        // Bit estimates and syndrome.
        for v in 0..n {
            let mut sum = z[v];
            for &e in graph.vn_edges(v as u32) {
                sum += alphabet.value(cn_to_vn[e as usize]);
            }
            u[v] = sum;
            hard[v] = if sum > 0.0 {
                0
            } else if sum < 0.0 {
                1
            } else if z[v] < 0.0 {
                1
            } else {
                0
            };
        }
        observer(t, &u, &hard);
        if graph.syndrome_weight(&hard) == 0 {
            return Ok(DecodeResult {
                success: true,
                iterations_used: t,
                hard_decision: hard,
                final_likelihoods: u,
            });
        }
        if t == max_iters {
            break;
        }

        // Variable pass through the table.
        for v in 0..n {
            let edges = graph.vn_edges(v as u32);
            let channel_sign = if z[v] > 0.0 { 1i8 } else { -1 };
            for (pos, &e) in edges.iter().enumerate() {
                tuple.clear();
                for (q, &o) in edges.iter().enumerate() {
                    if q != pos {
                        tuple.push(cn_to_vn[o as usize]);
                    }
                }
                vn_to_cn[e as usize] = lut.lookup(channel_sign, &tuple);
            }
        }
    }

    Ok(DecodeResult {
        success: false,
        iterations_used: max_iters,
        hard_decision: hard,
        final_likelihoods: u,
    })
}

/// Shared validation for the decoder entry points: left-regular graph whose
/// degree matches the table, a positive budget, and in-range pattern support.
pub(crate) fn validate_decode_inputs(
    graph: &TannerGraph,
    lut: &FaidLut,
    pattern: &ErrorPattern,
    max_iters: usize,
) -> Result<usize> {
    validate_run_inputs(graph, lut.d_v(), pattern, max_iters)
}

/// The same checks keyed on a bare variable degree, shared with the trainer
/// which runs from a coefficient set rather than a table.
pub(crate) fn validate_run_inputs(
    graph: &TannerGraph,
    table_d_v: usize,
    pattern: &ErrorPattern,
    max_iters: usize,
) -> Result<usize> {
    let Some(d_v) = graph.d_v() else {
        return Err(Error::Mismatch(
            "graph is not left-regular; a single table cannot serve all variable degrees".into(),
        ));
    };
    if d_v != table_d_v {
        return Err(Error::Mismatch(format!(
            "graph has variable degree {d_v} but table expects {table_d_v}"
        )));
    }
    if max_iters == 0 {
        return Err(Error::InvalidConfig("iteration budget must be at least 1".into()));
    }
    // degree-1 checks have no extrinsic inputs for the check rule
    for c in 0..graph.n_checks() {
        if graph.cn_edges(c as u32).len() < 2 {
            return Err(Error::InvalidGraph(format!("check {c} has fewer than two edges")));
        }
    }
    if let Some(&v) = pattern.support().last() {
        if v as usize >= graph.n_vars() {
            return Err(Error::Mismatch(format!(
                "pattern index {} outside code length {}",
                v + 1,
                graph.n_vars()
            )));
        }
    }
    Ok(d_v)
}
