use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fracsym_cli::{default_cache_dir, emit_report, kernel_sweep, parse_config, run};

/// Exit codes: 0 success, 1 a check failed or a solver did not converge,
/// 2 invalid configuration or arguments, 3 a task or I/O error.
#[derive(Parser)]
#[command(name = "fracsym", version, about = "Fractional Laplacian symmetry experiments")]
struct Cli {
    /// Worker threads for parallel kernels (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task of a configuration and write the reports.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed (overrides `seed` in the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Weight-table cache directory.
        #[arg(long, env = "FRACSYM_CACHE_DIR")]
        cache_dir: Option<PathBuf>,
        /// Build weight tables without reading or writing the cache.
        #[arg(long)]
        no_cache: bool,
    },
    /// Validate a configuration without running it.
    Check { config: PathBuf },
    /// Sweep the surrogate and the four-point deficit over N ∈ {1,2,3} and a set of s.
    KernelSweep {
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.25,0.5,0.75,0.9")]
        s: Vec<f64>,
        #[arg(long, default_value_t = 200)]
        points: usize,
        /// Random point pairs per (N, s).
        #[arg(long, default_value_t = 100_000)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-12)]
        tolerance: f64,
        /// Directory for sweep.json; printed only when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match cli.command {
        Command::Check { config } => match parse_config(&config) {
            Ok(c) => {
                println!("{}: valid ({} task(s))", config.display(), c.tasks.len());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprint!("{e}");
                ExitCode::from(2)
            }
        },
        Command::Run {
            config,
            out,
            seed,
            cache_dir,
            no_cache,
        } => {
            let mut cfg = match parse_config(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprint!("{e}");
                    return ExitCode::from(2);
                }
            };
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(out) = out {
                cfg.output = out;
            }
            let cache = (!no_cache).then(|| cache_dir.unwrap_or_else(default_cache_dir));
            let mut report = match run(&cfg, cache.as_deref()) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(3);
                }
            };
            if let Err(e) = emit_report(&mut report, &cfg.output) {
                eprintln!("error: writing {}: {e}", cfg.output.display());
                return ExitCode::from(3);
            }
            let summary = std::fs::read_to_string(cfg.output.join(fracsym_cli::report::SUMMARY_TXT)).unwrap_or_default();
            print!("{summary}");
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::KernelSweep {
            s,
            points,
            pairs,
            seed,
            tolerance,
            out,
        } => {
            let mut outcomes = Vec::new();
            let mut failed = false;
            for dim in 1..=3 {
                for &sv in &s {
                    let res = match kernel_sweep(dim, sv, points, pairs, seed, tolerance) {
                        Ok(r) => r,
                        Err(e) => {
                            eprintln!("error: N = {dim}, s = {sv}: {e}");
                            return ExitCode::from(2);
                        }
                    };
                    let ok = res.reports(tolerance).iter().all(|r| r.passed);
                    failed |= !ok;
                    println!(
                        "N={dim} s={sv}: {} surrogate min {:e}, deficit min {:e}, {} violations in {} pairs",
                        if ok { "PASS" } else { "FAIL" },
                        res.surrogate_min,
                        res.deficit_min,
                        res.violations,
                        res.pairs
                    );
                    outcomes.push(res);
                }
            }
            if let Some(dir) = out {
                let write = std::fs::create_dir_all(&dir)
                    .map_err(anyhow::Error::from)
                    .and_then(|_| Ok(serde_json::to_vec_pretty(&outcomes)?))
                    .and_then(|json| Ok(std::fs::write(dir.join("sweep.json"), json)?));
                if let Err(e) = write {
                    eprintln!("error: writing {}: {e}", dir.display());
                    return ExitCode::from(3);
                }
            }
            if failed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
    }
}
