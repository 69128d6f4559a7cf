use ccopf::dcopf::ArgminCaseSplit;
use ccopf::scenario::{builtin, emit_figure_data, load_scenario, run_scenario, Scenario};
use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Price-of-uncertainty analysis for DC optimal power flow.
#[derive(Parser)]
#[command(name = "ccopf", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write figure data and a summary.
    Run {
        /// Built-in name (c1, c1b, c2) or path to a scenario JSON file.
        scenario: String,
        /// Output directory for CSV grids and summary.json.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the tightening multipliers (repeatable).
        #[arg(long = "delta")]
        deltas: Vec<f64>,
        /// Override the Monte-Carlo sample count (0 skips sampling).
        #[arg(long)]
        samples: Option<usize>,
        /// Override the sampling seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the result tables for a scenario without writing files.
    Tables {
        scenario: String,
        #[arg(long = "delta")]
        deltas: Vec<f64>,
    },
    /// Cross-check the sampled in-hindsight law against the analytic one.
    Check {
        scenario: String,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn resolve(name: &str) -> Result<Scenario, ccopf::Error> {
    if let Some(sc) = builtin(name) {
        return Ok(sc);
    }
    load_scenario(Path::new(name))
}

fn apply_overrides(
    sc: &mut Scenario,
    deltas: &[f64],
    samples: Option<usize>,
    seed: Option<u64>,
) {
    if !deltas.is_empty() {
        sc.deltas = deltas.to_vec();
    }
    if let Some(n) = samples {
        sc.samples = n;
    }
    if let Some(s) = seed {
        sc.seed = s;
    }
}

fn print_tables(res: &ccopf::scenario::ScenarioResult) {
    println!("scenario: {}", res.scenario.name);
    if let Ok(cs) = ArgminCaseSplit::for_network(&res.scenario.network) {
        println!(
            "case split: beta = {:.6}, gamma = {:.6}, switch point = {:.6}",
            cs.beta, cs.gamma, cs.switch_point
        );
    }
    for (bus, law) in res.hopf.iter().enumerate() {
        let (lo, hi) = law.support();
        print!(
            "hindsight law, generator {}: support [{:.4}, {:.4}]",
            bus + 1,
            lo,
            hi
        );
        for a in &law.atoms {
            print!(", atom {:.4} at {:.4}", a.mass, a.location);
        }
        println!();
    }
    println!();
    println!("delta     p_sat    tvd_g1   tvd_g2   alpha0_g1  alpha1_g1");
    for c in &res.cases {
        println!(
            "{:<8} {:.4}   {:.4}   {:.4}   {:>9.6}  {:>9.6}",
            c.delta,
            c.p_sat,
            c.tvd[0].value,
            c.tvd.get(1).map_or(f64::NAN, |t| t.value),
            c.policy.alpha[0][0],
            c.policy.alpha[1][0],
        );
    }
    for rep in res.empirical.iter().take(1) {
        println!();
        println!(
            "sampling check (generator 1): KS = {:.4} (1% critical {:.4})",
            rep.ks_statistic, rep.ks_critical_1pct
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            scenario,
            out,
            deltas,
            samples,
            seed,
        } => resolve(&scenario).and_then(|mut sc| {
            apply_overrides(&mut sc, &deltas, samples, seed);
            let res = run_scenario(&sc)?;
            let written = emit_figure_data(&res, &out)?;
            print_tables(&res);
            println!();
            println!("wrote {} files to {}", written.len(), out.display());
            Ok(true)
        }),
        Command::Tables { scenario, deltas } => resolve(&scenario).and_then(|mut sc| {
            apply_overrides(&mut sc, &deltas, None, None);
            sc.samples = 0;
            let res = run_scenario(&sc)?;
            print_tables(&res);
            Ok(true)
        }),
        Command::Check {
            scenario,
            samples,
            seed,
        } => resolve(&scenario).and_then(|mut sc| {
            apply_overrides(&mut sc, &[], samples, seed);
            sc.deltas = Vec::new();
            let res = run_scenario(&sc)?;
            let mut ok = true;
            for (bus, rep) in res.empirical.iter().enumerate() {
                let pass = rep.ks_statistic <= rep.ks_critical_1pct;
                ok &= pass;
                println!(
                    "generator {}: KS = {:.4}, 1% critical = {:.4} -> {}",
                    bus + 1,
                    rep.ks_statistic,
                    rep.ks_critical_1pct,
                    if pass { "ok" } else { "FAIL" }
                );
                for (loc, freq, mass, z) in &rep.atoms {
                    let apass = z.abs() <= 3.0;
                    ok &= apass;
                    println!(
                        "  atom at {:.4}: frequency {:.4} vs mass {:.4} (z = {:+.2}) -> {}",
                        loc,
                        freq,
                        mass,
                        z,
                        if apass { "ok" } else { "FAIL" }
                    );
                }
            }
            Ok(ok)
        }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
