//! One function per subcommand. Human-readable tables go to stdout; the
//! `--json` flags switch to machine-readable output, and curve commands can
//! additionally write CSV files.

use crate::args::*;
use crate::io;
use anyhow::{bail, Context, Result};
use faid_core::decoder::decode;
use faid_core::diversity::{design_diversity, DiversitySchedule, InitPolicy};
use faid_core::graph::{build_qc, gf2_rank, save_alist, ShiftMatrix};
use faid_core::landscape::{
    classify_trapping_set, enumerate_cycles, find_failures, girth, write_pattern_file,
    EnumerationOptions, ExpansionList,
};
use faid_core::lut::{coefficients_from_lut, derive_lut, Picker};
use faid_core::sim::{
    bound_curve, bound_curve_csv, fer_curve_csv, injected_stats, monte_carlo, SimConfig, SimStats,
};
use faid_core::trainer::{history_csv, train_round};
use serde_json::json;

pub fn decode_cmd(args: &DecodeArgs) -> Result<()> {
    let graph = io::load_code(&args.code)?;
    let lut = io::load_lut(&args.lut)?;
    let pattern = io::parse_support(&args.pattern, graph.n_vars())?;
    let r = decode(&graph, &lut, &pattern, args.max_iters)?;
    let residual: Vec<u32> = r
        .hard_decision
        .iter()
        .enumerate()
        .filter(|(_, &b)| b == 1)
        .map(|(v, _)| v as u32 + 1)
        .collect();
    if args.json {
        println!(
            "{}",
            json!({
                "pattern": io::format_support(&pattern),
                "weight": pattern.weight(),
                "success": r.success,
                "corrected": r.corrects_all_zero(),
                "iterations_used": r.iterations_used,
                "max_iters": args.max_iters,
                "wrong_bits": residual,
            })
        );
        return Ok(());
    }
    println!("pattern:    {} (weight {})", io::format_support(&pattern), pattern.weight());
    let verdict = if r.corrects_all_zero() {
        "converged to the transmitted word"
    } else if r.success {
        "converged to a wrong codeword"
    } else {
        "did not converge"
    };
    println!("outcome:    {verdict}");
    println!("iterations: {} of {}", r.iterations_used, args.max_iters);
    println!("bits still wrong: {}", residual.len());
    Ok(())
}

pub fn simulate_cmd(args: &SimulateArgs) -> Result<()> {
    let graph = io::load_code(&args.code)?;
    let schedule = load_decoders(&args.schedule, &args.lut, args.max_iters)?;

    if let Some(patterns_path) = &args.inject {
        let (set, n, _) = io::load_patterns(patterns_path)?;
        if n != graph.n_vars() {
            bail!("pattern file is for length {n}, the code has length {}", graph.n_vars());
        }
        let stats = injected_stats(&graph, &schedule, &set)?;
        return report_stats(&[(f64::NAN, stats)], args.json, true, &args.csv);
    }

    let alphas = io::parse_alphas(&args.alpha)?;
    let base = SimConfig {
        alpha: 0.0,
        max_frames: args.max_frames,
        max_frame_errors: args.max_frame_errors,
        rng_seed: args.seed,
    };
    let mut rows = Vec::new();
    for &alpha in &alphas {
        let stats = monte_carlo(&graph, &schedule, &SimConfig { alpha, ..base })?;
        rows.push((alpha, stats));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    report_stats(&rows, args.json, false, &args.csv)
}

fn report_stats(
    rows: &[(f64, SimStats)],
    json: bool,
    injected: bool,
    csv: &Option<std::path::PathBuf>,
) -> Result<()> {
    if json {
        for (alpha, s) in rows {
            let mut obj = json!({
                "frames": s.frames,
                "frame_errors": s.frame_errors,
                "bit_errors": s.bit_errors,
                "fer": s.fer,
                "ber": s.ber,
                "fer_std_error": s.fer_std_error(),
                "seconds": s.wall_time,
            });
            if !injected {
                obj["alpha"] = json!(alpha);
            }
            println!("{obj}");
        }
    } else {
        println!(
            "{:>10} {:>10} {:>12} {:>10} {:>12} {:>12} {:>8}",
            "alpha", "frames", "frame_errs", "bit_errs", "FER", "BER", "seconds"
        );
        for (alpha, s) in rows {
            let a = if injected { "injected".to_string() } else { format!("{alpha}") };
            println!(
                "{:>10} {:>10} {:>12} {:>10} {:>12.4e} {:>12.4e} {:>8.2}",
                a, s.frames, s.frame_errors, s.bit_errors, s.fer, s.ber, s.wall_time
            );
        }
    }
    if let Some(path) = csv {
        io::write(path, &fer_curve_csv(rows))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

pub fn enumerate_cmd(args: &EnumerateArgs) -> Result<()> {
    let graph = io::load_code(&args.code)?;
    let luts: Vec<_> = args.lut.iter().map(|p| io::load_lut(p)).collect::<Result<_>>()?;
    if args.max_iters.len() != luts.len() {
        bail!(
            "{} tables but {} iteration budgets; pass --max-iters once per --lut",
            luts.len(),
            args.max_iters.len()
        );
    }
    let decoders: Vec<_> = luts.iter().zip(args.max_iters.iter().copied()).collect();
    let expansion = if args.exhaustive {
        ExpansionList::whole_graph(&graph)
    } else {
        ExpansionList::from_short_cycles(&graph, args.radius)
    };
    if expansion.sets.is_empty() {
        bail!("the code has no cycles to expand; rerun with --exhaustive");
    }
    let id = args
        .id
        .clone()
        .unwrap_or_else(|| io::file_stem(&args.lut[0]));
    let opts = EnumerationOptions {
        max_patterns: args.max_patterns,
        checkpoint_path: args.checkpoint.clone(),
        decoder_id: id.clone(),
    };
    let failures = find_failures(&graph, &decoders, args.weight, &expansion, &opts)?;
    println!(
        "searched {} regions at weight {}: {} uncorrectable patterns",
        expansion.sets.len(),
        args.weight,
        failures.len()
    );
    if let Some(out) = &args.out {
        io::write(out, &write_pattern_file(&failures, graph.n_vars(), &id))?;
        eprintln!("wrote {}", out.display());
    }
    Ok(())
}

pub fn train_cmd(args: &TrainArgs) -> Result<()> {
    let graph = io::load_code(&args.code)?;
    let init = io::load_coeffs(&args.init)?;
    let (patterns, n, _) = io::load_patterns(&args.patterns)?;
    if n != graph.n_vars() {
        bail!("pattern file is for length {n}, the code has length {}", graph.n_vars());
    }
    let config = io::load_train_config(&args.config)?;
    let rates = args.rates.as_deref().map(io::load_coeffs).transpose()?;

    let outcome = train_round(&graph, &init, &patterns, &config, rates.as_ref())?;
    io::write(&args.out_coeffs, &outcome.coeffs.to_text())?;
    io::write(&args.out_lut, &derive_lut(&outcome.coeffs).to_text())?;
    if let Some(path) = &args.history {
        io::write(path, &history_csv(&outcome.history))?;
    }

    println!(
        "trained on {} patterns for {} epochs (best at epoch {})",
        patterns.len(),
        outcome.epochs_run,
        outcome.best_epoch
    );
    println!(
        "corrected {} of {}, residual {}",
        outcome.corrected.len(),
        patterns.len(),
        patterns.len() - outcome.corrected.len()
    );
    println!("wrote {} and {}", args.out_coeffs.display(), args.out_lut.display());
    Ok(())
}

pub fn design_cmd(args: &DesignArgs) -> Result<()> {
    let graph = io::load_code(&args.code)?;
    let d1 = io::load_lut(&args.d1)?;
    let (failures, n, _) = io::load_patterns(&args.failures)?;
    if n != graph.n_vars() {
        bail!("pattern file is for length {n}, the code has length {}", graph.n_vars());
    }
    let config = io::load_train_config(&args.config)?;
    let policy = if args.init.is_empty() {
        InitPolicy::Resample { seed: args.seed }
    } else {
        let list = args.init.iter().map(|p| io::load_coeffs(p)).collect::<Result<_>>()?;
        InitPolicy::Sequence(list)
    };

    let state =
        design_diversity(&graph, (d1, args.d1_iters), &failures, &config, &policy, args.rounds)?;

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create directory {}", args.out.display()))?;
    let mut manifest = String::from("# decoders in firing order\n");
    for entry in state.schedule.entries() {
        let file = format!("{}.lut", entry.id);
        io::write(&args.out.join(&file), &entry.lut.to_text())?;
        manifest.push_str(&format!("{file} {}\n", entry.max_iters));
    }
    io::write(&args.out.join("schedule.txt"), &manifest)?;
    io::write(
        &args.out.join("residual.patterns"),
        &write_pattern_file(&state.residual, graph.n_vars(), "schedule"),
    )?;

    let mut report = String::new();
    for r in &state.reports {
        let fate = if r.appended { "appended" } else { "discarded" };
        report.push_str(&format!(
            "round {}: trained on {} patterns, corrected {}, {} epochs, {}\n",
            r.round, r.training_patterns, r.corrected, r.epochs_run, fate
        ));
    }
    io::write(&args.out.join("report.txt"), &report)?;
    for (r, history) in state.reports.iter().zip(&state.histories) {
        io::write(&args.out.join(format!("history_round{}.csv", r.round)), &history_csv(history))?;
    }

    print!("{report}");
    println!(
        "schedule now has {} decoders; {} of {} patterns remain",
        state.schedule.len(),
        state.residual.len(),
        failures.len()
    );
    println!("wrote {}", args.out.display());
    Ok(())
}

pub fn bound_cmd(args: &BoundArgs) -> Result<()> {
    let counts = io::load_counts(&args.counts)?;
    let alphas = match (&args.alpha, &args.grid) {
        (Some(list), None) => io::parse_alphas(list)?,
        (None, Some(grid)) => io::parse_grid(grid)?,
        _ => bail!("pass exactly one of --alpha or --grid"),
    };
    let rows = bound_curve(&counts, &alphas);
    if args.json {
        for (alpha, bound) in &rows {
            println!("{}", json!({ "alpha": alpha, "bound": bound }));
        }
    } else {
        println!("{:>12} {:>14}", "alpha", "FER bound");
        for (alpha, bound) in &rows {
            println!("{alpha:>12.6e} {bound:>14.6e}");
        }
    }
    if let Some(path) = &args.csv {
        io::write(path, &bound_curve_csv(&counts, &alphas))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

pub fn derive_lut_cmd(args: &DeriveLutArgs) -> Result<()> {
    let coeffs = io::load_coeffs(&args.coeffs)?;
    let lut = derive_lut(&coeffs);
    io::write(&args.out, &lut.to_text())?;
    println!("wrote {} ({} table rows)", args.out.display(), coeffs.len());
    Ok(())
}

pub fn lut_to_coeffs_cmd(args: &LutToCoeffsArgs) -> Result<()> {
    let lut = io::load_lut(&args.lut)?;
    let picker = match args.picker {
        PickerArg::Midpoint => Picker::Midpoint,
        PickerArg::Uniform => Picker::Uniform { seed: args.seed },
    };
    let coeffs = coefficients_from_lut(&lut, picker)?;
    io::write(&args.out, &coeffs.to_text())?;
    println!("wrote {} ({} weights)", args.out.display(), coeffs.len());
    Ok(())
}

pub fn build_qc_cmd(args: &BuildQcArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.shifts)
        .with_context(|| format!("cannot read {}", args.shifts.display()))?;
    let sm = ShiftMatrix::parse(&text)
        .with_context(|| format!("invalid shift file {}", args.shifts.display()))?;
    let graph = build_qc(&sm);
    io::write(&args.out, &save_alist(&graph))?;
    println!(
        "wrote {}: {} variables, {} checks, {} edges",
        args.out.display(),
        graph.n_vars(),
        graph.n_checks(),
        graph.n_edges()
    );
    Ok(())
}

pub fn info_cmd(args: &InfoArgs) -> Result<()> {
    let graph = io::load_code(&args.code)?;
    let rank = gf2_rank(&graph);
    let dimension = graph.n_vars() - rank;
    let rate = dimension as f64 / graph.n_vars() as f64;
    let g = girth(&graph);

    let cycles = if args.cycles {
        g.map(|len| {
            [len, len + 2].map(|l| {
                let sets = enumerate_cycles(&graph, &[l]);
                let label = sets.first().map(|vns| {
                    classify_trapping_set(&graph, vns).expect("cycle sets are valid").to_string()
                });
                (l, sets.len(), label)
            })
        })
    } else {
        None
    };

    if args.json {
        let mut obj = json!({
            "variables": graph.n_vars(),
            "checks": graph.n_checks(),
            "edges": graph.n_edges(),
            "regular": graph.is_regular(),
            "d_v": graph.d_v(),
            "d_c": graph.d_c(),
            "rank": rank,
            "dimension": dimension,
            "rate": rate,
            "girth": g,
        });
        if let Some(rows) = &cycles {
            obj["cycles"] = rows
                .iter()
                .map(|(l, count, label)| json!({ "length": l, "count": count, "label": label }))
                .collect();
        }
        println!("{obj}");
        return Ok(());
    }

    println!("variables: {}   checks: {}   edges: {}", graph.n_vars(), graph.n_checks(), graph.n_edges());
    match (graph.d_v(), graph.d_c()) {
        (Some(dv), Some(dc)) => println!("regular: d_v = {dv}, d_c = {dc}"),
        (dv, dc) => println!("irregular: d_v = {dv:?}, d_c = {dc:?}"),
    }
    println!("rank: {rank}   dimension: {dimension}   rate: {rate:.4}");
    match g {
        Some(len) => println!("girth: {len}"),
        None => println!("girth: none (acyclic)"),
    }
    if let Some(rows) = &cycles {
        for (l, count, label) in rows {
            match label {
                Some(lab) => println!("cycles of length {l}: {count} variable sets, e.g. a {lab} trapping set"),
                None => println!("cycles of length {l}: 0"),
            }
        }
    }
    Ok(())
}

fn load_decoders(
    schedule: &Option<std::path::PathBuf>,
    lut: &Option<std::path::PathBuf>,
    max_iters: usize,
) -> Result<DiversitySchedule> {
    match (schedule, lut) {
        (Some(path), None) => io::load_schedule(path),
        (None, Some(path)) => io::single_schedule(path, max_iters),
        _ => bail!("pass exactly one of --schedule or --lut"),
    }
}
