//! Randomized invariant checks: algebraic laws of the message alphabet and
//! check rule, text-format round trips, the coefficient/table correspondence
//! and the quasi-cyclic builder, each over generated inputs.

use proptest::prelude::*;

use faid_core::alphabet::{Alphabet, Message};
use faid_core::decoder::cn_update;
use faid_core::graph::{build_qc, load_alist, save_alist, ShiftMatrix};
use faid_core::landscape::{read_pattern_file, write_pattern_file, ErrorPattern, FailureSet};
use faid_core::lut::{canonical_keys, coefficients_from_lut, derive_lut, FaidLut, Picker};
use faid_core::sim::{floor_bound, FloorCounts};

fn symmetric_lut(values: &[i8]) -> FaidLut {
    let a = Alphabet::uniform(3);
    let keys = canonical_keys(&a, 2);
    assert_eq!(keys.len(), values.len());
    let assign: std::collections::HashMap<Vec<i8>, i8> =
        keys.into_iter().zip(values.iter().copied()).collect();
    FaidLut::from_fn(a, 3, |tuple| {
        let mut key: Vec<i8> = tuple.iter().map(|m| m.index()).collect();
        key.sort_unstable();
        Message::new(assign[&key])
    })
    .unwrap()
}

proptest! {
    /// The quantizer is odd, monotone, alphabet-valued and fixes the levels.
    #[test]
    fn quantizer_laws(x in -10.0f64..10.0, y in -10.0f64..10.0) {
        let a = Alphabet::uniform(3);
        let q = a.quantize(x);
        prop_assert!((q.magnitude() as usize) <= a.s());
        prop_assert_eq!(a.quantize(-x), -q);
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        prop_assert!(a.quantize(lo) <= a.quantize(hi));
        prop_assert_eq!(a.quantize(a.value(q)), q);
    }

    /// The check rule is sign-product times magnitude-minimum, independent
    /// of input order, and zero-absorbing.
    #[test]
    fn check_rule_laws(idx in prop::collection::vec(-3i8..=3, 1..=6), swap in any::<u64>()) {
        let msgs: Vec<Message> = idx.iter().copied().map(Message::new).collect();
        let out = cn_update(&msgs);

        let min_mag = idx.iter().map(|i| i.unsigned_abs()).min().unwrap();
        prop_assert_eq!(out.magnitude(), min_mag);
        if idx.iter().any(|&i| i == 0) {
            prop_assert!(out.is_zero());
        } else {
            let sign: i8 = idx.iter().map(|i| i.signum()).product();
            prop_assert_eq!(out.signum(), sign);
        }

        let mut shuffled = msgs.clone();
        if shuffled.len() > 1 {
            let k = (swap as usize) % shuffled.len();
            shuffled.swap(0, k);
        }
        prop_assert_eq!(cn_update(&shuffled), out);
    }

    /// Any symmetric table is realizable: midpoint coefficients reproduce it
    /// exactly and every in-interval pick derives the same table back.
    #[test]
    fn any_symmetric_table_round_trips(
        values in prop::collection::vec(-3i8..=3, 28),
        seed in any::<u64>(),
    ) {
        let lut = symmetric_lut(&values);
        let mid = coefficients_from_lut(&lut, Picker::Midpoint).unwrap();
        prop_assert_eq!(derive_lut(&mid).to_text(), lut.to_text());
        let picked = coefficients_from_lut(&lut, Picker::Uniform { seed }).unwrap();
        prop_assert_eq!(derive_lut(&picked).to_text(), lut.to_text());
    }

    /// The table text format parses back to the same table.
    #[test]
    fn lut_text_round_trips(values in prop::collection::vec(-3i8..=3, 28)) {
        let lut = symmetric_lut(&values);
        let back = FaidLut::from_text(&lut.to_text()).unwrap();
        prop_assert_eq!(back.to_text(), lut.to_text());
    }

    /// Pattern files survive a write/read cycle with their metadata.
    #[test]
    fn pattern_files_round_trip(
        weight in 1usize..=4,
        picks in prop::collection::vec(prop::collection::btree_set(0u32..60, 4), 0..10),
    ) {
        let patterns = picks.iter().map(|s| {
            ErrorPattern::new(s.iter().copied().take(weight).collect())
        });
        let set = FailureSet::from_patterns(weight, patterns).unwrap();
        let text = write_pattern_file(&set, 60, "prop");
        let (back, n, id) = read_pattern_file(&text).unwrap();
        prop_assert_eq!(n, 60);
        prop_assert_eq!(id.as_str(), "prop");
        prop_assert_eq!(back.len(), set.len());
        for p in set.iter() {
            prop_assert!(back.contains(p));
        }
    }

    /// The log-domain bound agrees with direct summation wherever the
    /// latter is representable.
    #[test]
    fn floor_bound_matches_direct_summation(
        n in 10usize..=40,
        entries in prop::collection::btree_map(0usize..=10, 1u64..1_000_000, 1..4),
        alpha in 1e-6f64..=0.5,
    ) {
        let mut counts = FloorCounts::new(n).unwrap();
        let mut direct = 0.0f64;
        for (&w, &c) in &entries {
            counts.set(w, c).unwrap();
            direct += c as f64 * alpha.powi(w as i32) * (1.0 - alpha).powi((n - w) as i32);
        }
        let got = floor_bound(&counts, alpha);
        prop_assert!(
            (got - direct).abs() <= 1e-9 * direct.abs().max(f64::MIN_POSITIVE),
            "log-domain {} vs direct {}", got, direct
        );
    }

    /// Circulant expansion: block structure fixes every node degree and the
    /// alist text format reproduces the expanded graph.
    #[test]
    fn qc_expansion_and_alist_round_trip(
        rows in 1usize..=3,
        cols in 1usize..=4,
        p in 2usize..=7,
        raw in prop::collection::vec(prop::option::of(0u32..7), 12),
    ) {
        let shifts: Vec<Option<u32>> = raw
            .iter()
            .take(rows * cols)
            .map(|s| s.map(|x| x % p as u32))
            .collect();
        if shifts.iter().all(|s| s.is_none()) {
            return Ok(()); // skip the degenerate edgeless expansion
        }
        let sm = ShiftMatrix::new(rows, cols, p, shifts.clone()).unwrap();
        let g = build_qc(&sm);
        prop_assert_eq!(g.n_vars(), cols * p);
        prop_assert_eq!(g.n_checks(), rows * p);
        let filled = shifts.iter().filter(|s| s.is_some()).count();
        prop_assert_eq!(g.n_edges(), filled * p);
        for v in 0..g.n_vars() {
            let col = v / p;
            let want = (0..rows).filter(|&j| shifts[j * cols + col].is_some()).count();
            prop_assert_eq!(g.vn_edges(v as u32).len(), want);
        }

        let back = load_alist(&save_alist(&g)).unwrap();
        prop_assert_eq!(back.n_vars(), g.n_vars());
        prop_assert_eq!(back.n_checks(), g.n_checks());
        prop_assert_eq!(back.edges(), g.edges());
    }
}
