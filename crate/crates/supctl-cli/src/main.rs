//! Command-line front end: synthesize supervisors, verify certificates,
//! cross-check against the explicit oracle and run the benchmark families.
//!
//! Exit codes: 0 controlled / checks passed, 1 uncontrollable, 2 invalid
//! input, 3 budget exhausted, 4 internal invariant failure, 5 certificate
//! invalid, 6 oracle mismatch.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use supctl::bench::{gen_cmt, gen_edp, gen_fig1};
use supctl::encode::{encode, EncodeLimits, SymbolicSystem};
use supctl::extract::{annotate_redundancy, check_certificate, extract_guards};
use supctl::files;
use supctl::model::System;
use supctl::oracle::{compare, rw_synthesize, DEFAULT_STATE_LIMIT};
use supctl::pdrc::{synthesize, Budget, Controlled, SynthOptions, SynthesisResult};
use supctl::randsys::random_system;

const EXIT_CONTROLLED: u8 = 0;
const EXIT_UNCONTROLLABLE: u8 = 1;
const EXIT_INVALID_INPUT: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_INTERNAL: u8 = 4;
const EXIT_CERT_INVALID: u8 = 5;
const EXIT_MISMATCH: u8 = 6;

#[derive(Parser)]
#[command(name = "supctl", version, about = "Supervisor synthesis for discrete event systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Model: a file path or a builtin (`fig1`, `edp:N,K`, `cmt:N,K`).
    #[arg(long)]
    model: Option<String>,
    /// Stop after this many frames.
    #[arg(long)]
    max_frames: Option<usize>,
    /// Total solver conflict budget.
    #[arg(long)]
    max_conflicts: Option<u64>,
    /// Wall clock budget in seconds.
    #[arg(long)]
    max_seconds: Option<f64>,
    /// Disable inductive generalization of blocked clauses.
    #[arg(long)]
    no_ind_gen: bool,
    /// Re-verify the trace invariants after every phase.
    #[arg(long)]
    debug_invariants: bool,
    /// Write one record per solver query to this file.
    #[arg(long)]
    run_log: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a supervisor and emit the controlled model.
    Synth {
        #[command(flatten)]
        common: CommonOpts,
        /// Write the controlled model here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the inductive certificate here.
        #[arg(long)]
        certificate: Option<PathBuf>,
        /// Write the strengthening report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Re-encode a controlled model and check its certificate.
    Verify {
        /// The controlled model file.
        #[arg(long)]
        model: String,
        /// The certificate file to check.
        #[arg(long)]
        certificate: PathBuf,
    },
    /// Compare synthesis against the explicit fixpoint construction.
    Oracle {
        #[command(flatten)]
        common: CommonOpts,
        /// Run a seeded random sweep of this many instances instead.
        #[arg(long)]
        sweep: Option<u64>,
        /// Seed for the random sweep.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Write the comparison report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Generate a benchmark family instance and synthesize it.
    Bench {
        /// Family: `edp`, `cmt` or `fig1`.
        #[arg(long)]
        family: String,
        /// Parameters `n,k`.
        #[arg(long)]
        params: Option<String>,
        /// Cross-check against the explicit oracle (small instances only).
        #[arg(long)]
        oracle_check: bool,
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Synth {
            common,
            out,
            certificate,
            report,
        } => cmd_synth(common, out, certificate, report),
        Command::Verify { model, certificate } => cmd_verify(&model, &certificate),
        Command::Oracle {
            common,
            sweep,
            seed,
            report,
        } => cmd_oracle(common, sweep, seed, report),
        Command::Bench {
            family,
            params,
            oracle_check,
            common,
        } => cmd_bench(&family, params.as_deref(), oracle_check, common),
    };
    ExitCode::from(code)
}

fn load_model(spec: &str) -> Result<System, String> {
    if let Some(params) = spec.strip_prefix("edp:") {
        let (n, k) = parse_params(params)?;
        return gen_edp(n, k).map_err(|e| e.to_string());
    }
    if let Some(params) = spec.strip_prefix("cmt:") {
        let (n, k) = parse_params(params)?;
        return gen_cmt(n, k).map_err(|e| e.to_string());
    }
    if spec == "fig1" {
        return Ok(gen_fig1());
    }
    let text = fs::read_to_string(spec).map_err(|e| format!("cannot read {spec}: {e}"))?;
    files::system_from_str(&text).map_err(|e| e.to_string())
}

fn parse_params(text: &str) -> Result<(usize, usize), String> {
    let (n, k) = text
        .split_once(',')
        .ok_or_else(|| format!("expected n,k, got '{text}'"))?;
    Ok((
        n.trim().parse().map_err(|e| format!("bad n: {e}"))?,
        k.trim().parse().map_err(|e| format!("bad k: {e}"))?,
    ))
}

/// Parse, validate and encode, reporting invalid input on stderr.
fn prepare(spec: &str) -> Result<SymbolicSystem, u8> {
    let sys = match load_model(spec) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return Err(EXIT_INVALID_INPUT);
        }
    };
    let diags = sys.validate();
    if !diags.is_empty() {
        for d in &diags {
            eprintln!("invalid model: {d}");
        }
        return Err(EXIT_INVALID_INPUT);
    }
    match encode(&sys, &EncodeLimits::default()) {
        Ok(sym) => Ok(sym),
        Err(e) => {
            eprintln!("error: {e}");
            Err(EXIT_INVALID_INPUT)
        }
    }
}

fn options_from(common: &CommonOpts) -> Result<SynthOptions, u8> {
    if common.max_seconds.map_or(false, |s| s < 0.0)
        || common.max_conflicts.map_or(false, |c| c == u64::MAX)
    {
        eprintln!("error: budgets must be non-negative");
        return Err(EXIT_INVALID_INPUT);
    }
    let run_log: Option<Box<dyn std::io::Write + Send>> = match &common.run_log {
        None => None,
        Some(path) => match fs::File::create(path) {
            Ok(f) => Some(Box::new(std::io::BufWriter::new(f))),
            Err(e) => {
                eprintln!("error: cannot create run log {}: {e}", path.display());
                return Err(EXIT_INVALID_INPUT);
            }
        },
    };
    Ok(SynthOptions {
        inductive_generalization: !common.no_ind_gen,
        debug_invariants: common.debug_invariants,
        budget: Budget {
            max_frames: common.max_frames,
            max_conflicts: common.max_conflicts,
            max_seconds: common.max_seconds,
        },
        run_log,
    })
}

fn print_stats(stats: &supctl::pdrc::SynthStats) {
    println!(
        "stats: frames={} iterations={} clauses={} supervisor_cubes={} solver_calls={} conflicts={} wall={:?}",
        stats.frames,
        stats.iterations,
        stats.clauses_learned,
        stats.supervisor_cubes,
        stats.solver_calls,
        stats.conflicts,
        stats.wall
    );
}

fn run_synthesis(sym: &SymbolicSystem, common: &CommonOpts) -> Result<SynthesisResult, u8> {
    let opts = options_from(common)?;
    match synthesize(sym, opts) {
        Ok(result) => Ok(result),
        Err(e) => {
            eprintln!("internal error: {e}");
            Err(EXIT_INTERNAL)
        }
    }
}

fn write_or_die(path: &Path, contents: &str) -> Result<(), u8> {
    if let Err(e) = fs::write(path, contents) {
        eprintln!("error: cannot write {}: {e}", path.display());
        return Err(EXIT_INVALID_INPUT);
    }
    Ok(())
}

fn emit_controlled(
    sym: &SymbolicSystem,
    controlled: &Controlled,
    out: Option<&Path>,
    certificate: Option<&Path>,
    report: Option<&Path>,
) -> Result<(), u8> {
    let mut extraction = match extract_guards(&controlled.supervisor, sym) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("internal error: {e}");
            return Err(EXIT_INTERNAL);
        }
    };
    let _ = annotate_redundancy(&mut extraction, sym, &controlled.supervisor, DEFAULT_STATE_LIMIT);
    if let Some(path) = out {
        write_or_die(path, &files::system_to_string(&extraction.controlled))?;
    }
    if let Some(path) = certificate {
        let doc = match files::certificate_to_doc(sym.bitmap(), &controlled.invariant) {
            Ok(d) => d,
            Err(e) => {
                eprintln!("internal error: {e}");
                return Err(EXIT_INTERNAL);
            }
        };
        let text = serde_json::to_string_pretty(&doc).expect("certificate serialization") + "\n";
        write_or_die(path, &text)?;
    }
    if let Some(path) = report {
        write_or_die(path, &files::strengthening_report(&extraction))?;
    }
    println!(
        "controlled: {} strengthenings on {} transitions",
        controlled.supervisor.cubes.len(),
        extraction.strengthenings.len()
    );
    Ok(())
}

fn cmd_synth(
    common: CommonOpts,
    out: Option<PathBuf>,
    certificate: Option<PathBuf>,
    report: Option<PathBuf>,
) -> u8 {
    let model = match &common.model {
        Some(m) => m.clone(),
        None => {
            eprintln!("error: --model is required");
            return EXIT_INVALID_INPUT;
        }
    };
    let sym = match prepare(&model) {
        Ok(s) => s,
        Err(code) => return code,
    };
    match run_synthesis(&sym, &common) {
        Err(code) => code,
        Ok(SynthesisResult::Controlled(controlled)) => {
            print_stats(&controlled.stats);
            match emit_controlled(
                &sym,
                &controlled,
                out.as_deref(),
                certificate.as_deref(),
                report.as_deref(),
            ) {
                Ok(()) => EXIT_CONTROLLED,
                Err(code) => code,
            }
        }
        Ok(SynthesisResult::Uncontrollable(path, stats)) => {
            print_stats(&stats);
            println!("uncontrollable: {}-step counterexample", path.events.len());
            if let Some(p) = out {
                let text = files::trace_report(&sym.system, &path.to_state_path());
                if write_or_die(&p, &text).is_err() {
                    return EXIT_INVALID_INPUT;
                }
            }
            EXIT_UNCONTROLLABLE
        }
        Ok(SynthesisResult::Inconclusive(inc)) => {
            print_stats(&inc.stats);
            println!("inconclusive: {}", inc.reason);
            EXIT_BUDGET
        }
    }
}

fn cmd_verify(model: &str, certificate: &Path) -> u8 {
    let sym = match prepare(model) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let text = match fs::read_to_string(certificate) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", certificate.display());
            return EXIT_INVALID_INPUT;
        }
    };
    let doc: files::CertificateDoc = match serde_json::from_str(&text) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: bad certificate file: {e}");
            return EXIT_INVALID_INPUT;
        }
    };
    let invariant = match files::certificate_from_doc(sym.bitmap(), &doc) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("certificate does not fit this model: {e}");
            return EXIT_CERT_INVALID;
        }
    };
    match check_certificate(&invariant, &sym, &[]) {
        Err(e) => {
            eprintln!("internal error: {e}");
            EXIT_INTERNAL
        }
        Ok(verdict) => {
            if verdict.passed() {
                println!("certificate: initiation ok, consecution ok, safety ok");
                EXIT_CONTROLLED
            } else {
                for f in &verdict.failures {
                    println!("certificate: {} FAILS, witness {}", f.check, f.witness);
                }
                EXIT_CERT_INVALID
            }
        }
    }
}

/// One synthesis-vs-oracle comparison. `Ok(true)` means full agreement.
fn oracle_one(sym: &SymbolicSystem, common: &CommonOpts, log: &mut String) -> Result<bool, u8> {
    let sys = &sym.system;
    let oracle = match rw_synthesize(sys, DEFAULT_STATE_LIMIT) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return Err(EXIT_INVALID_INPUT);
        }
    };
    let report = match run_synthesis(sym, common)? {
        SynthesisResult::Controlled(c) => {
            let ctrl = match c.supervisor.to_controller(sym, DEFAULT_STATE_LIMIT) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return Err(EXIT_INVALID_INPUT);
                }
            };
            compare(sys, Some(&ctrl), None, &oracle, DEFAULT_STATE_LIMIT)
        }
        SynthesisResult::Uncontrollable(path, _) => {
            let sp = path.to_state_path();
            compare(sys, None, Some(&sp), &oracle, DEFAULT_STATE_LIMIT)
        }
        SynthesisResult::Inconclusive(inc) => {
            eprintln!("inconclusive: {}", inc.reason);
            return Err(EXIT_BUDGET);
        }
    };
    let report = match report {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return Err(EXIT_INVALID_INPUT);
        }
    };
    log.push_str(&format!(
        "verdicts_agree={} reachable_equal={:?} synth_states={:?} oracle_states={:?}\n",
        report.verdicts_agree, report.reachable_equal, report.synth_reachable, report.oracle_reachable
    ));
    for f in &report.findings {
        log.push_str(&format!("finding: {f}\n"));
    }
    Ok(report.passed())
}

fn cmd_oracle(
    common: CommonOpts,
    sweep: Option<u64>,
    seed: u64,
    report_path: Option<PathBuf>,
) -> u8 {
    let mut log = String::new();
    let outcome = match sweep {
        None => {
            let model = match &common.model {
                Some(m) => m.clone(),
                None => {
                    eprintln!("error: --model or --sweep is required");
                    return EXIT_INVALID_INPUT;
                }
            };
            let sym = match prepare(&model) {
                Ok(s) => s,
                Err(code) => return code,
            };
            oracle_one(&sym, &common, &mut log)
        }
        Some(n) => {
            let mut all_ok = true;
            let mut failed = Vec::new();
            for i in 0..n {
                let sys = random_system(seed.wrapping_add(i));
                let sym = match encode(&sys, &EncodeLimits::default()) {
                    Ok(s) => s,
                    Err(e) => {
                        eprintln!("error: {e}");
                        return EXIT_INVALID_INPUT;
                    }
                };
                log.push_str(&format!("instance {i} (seed {}): ", seed.wrapping_add(i)));
                match oracle_one(&sym, &common, &mut log) {
                    Ok(true) => {}
                    Ok(false) => {
                        all_ok = false;
                        failed.push(i);
                    }
                    Err(code) => return code,
                }
            }
            log.push_str(&format!("sweep: {n} instances, {} mismatches\n", failed.len()));
            Ok(all_ok)
        }
    };
    if let Some(p) = report_path {
        if write_or_die(&p, &log).is_err() {
            return EXIT_INVALID_INPUT;
        }
    }
    print!("{log}");
    match outcome {
        Ok(true) => {
            println!("oracle: agreement");
            EXIT_CONTROLLED
        }
        Ok(false) => {
            println!("oracle: MISMATCH");
            EXIT_MISMATCH
        }
        Err(code) => code,
    }
}

fn cmd_bench(family: &str, params: Option<&str>, oracle_check: bool, common: CommonOpts) -> u8 {
    let (sys, label) = match family {
        "fig1" => (Ok(gen_fig1()), "fig1".to_string()),
        "edp" | "cmt" => {
            let params = match params {
                Some(p) => p,
                None => {
                    eprintln!("error: --params n,k is required for {family}");
                    return EXIT_INVALID_INPUT;
                }
            };
            let (n, k) = match parse_params(params) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_INVALID_INPUT;
                }
            };
            let sys = if family == "edp" {
                gen_edp(n, k).map_err(|e| e.to_string())
            } else {
                gen_cmt(n, k).map_err(|e| e.to_string())
            };
            (sys, format!("{family}({n},{k})"))
        }
        other => {
            eprintln!("error: unknown family '{other}'");
            return EXIT_INVALID_INPUT;
        }
    };
    let sys = match sys {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID_INPUT;
        }
    };
    let sym = match encode(&sys, &EncodeLimits::default()) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID_INPUT;
        }
    };
    let started = Instant::now();
    let result = match run_synthesis(&sym, &common) {
        Ok(r) => r,
        Err(code) => return code,
    };
    let elapsed = started.elapsed();
    let verdict = match &result {
        SynthesisResult::Controlled(_) => "controlled",
        SynthesisResult::Uncontrollable(..) => "uncontrollable",
        SynthesisResult::Inconclusive(_) => "inconclusive",
    };
    println!("{label}\t{:.3}s\t{verdict}", elapsed.as_secs_f64());
    print_stats(result.stats());
    if oracle_check {
        let mut log = String::new();
        match oracle_one(&sym, &common, &mut log) {
            Ok(true) => println!("oracle: agreement"),
            Ok(false) => {
                print!("{log}");
                println!("oracle: MISMATCH");
                return EXIT_MISMATCH;
            }
            Err(code) => return code,
        }
    }
    match result {
        SynthesisResult::Controlled(_) => EXIT_CONTROLLED,
        SynthesisResult::Uncontrollable(..) => EXIT_UNCONTROLLABLE,
        SynthesisResult::Inconclusive(_) => EXIT_BUDGET,
    }
}
