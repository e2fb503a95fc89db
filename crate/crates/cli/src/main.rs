use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use walsh_noise::{ChiRequest, Scheme};
use walsh_noise_cli::commands::{self, BudgetOptions, MatrixKind, Named};
use walsh_noise_cli::model::{NoiseSpec, OuSpec, SpinSpec};
use walsh_noise_cli::output::{resolve, OutputGuard, OUT_DIR_ENV};
use walsh_noise_cli::run::{run, RunConfig};

#[derive(Parser)]
#[command(
    name = "walsh-noise",
    version,
    about = "Walsh and CPMG qubit noise spectroscopy"
)]
struct Cli {
    /// Default directory for output files.
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Walsh,
    Cpmg,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Walsh => Scheme::Walsh,
            SchemeArg::Cpmg => Scheme::CpmgComparison,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Walsh,
    Shuffling,
    ShufflingInverse,
    Dyadic,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Bilinear,
    Quadrature,
    Mc,
}

#[derive(clap::Args)]
struct SetArgs {
    #[arg(long, value_enum)]
    scheme: SchemeArg,
    /// Order exponent; the set has 2^n members (2^n + 1 for CPMG).
    #[arg(short, long)]
    n: u32,
    /// Total evolution time in µs.
    #[arg(short = 't', long)]
    total_time: f64,
}

#[derive(clap::Args)]
struct NoiseArgs {
    /// OU component `b2,tau_c[,shift_mhz]`; repeat for a mixture.
    #[arg(long = "ou")]
    ou: Vec<OuSpec>,
    /// Nuclear spin `larmor_mhz,a_par_mhz,a_perp_mhz`; repeatable.
    #[arg(long = "spin")]
    spins: Vec<SpinSpec>,
}

impl NoiseArgs {
    fn spec(&self) -> NoiseSpec {
        NoiseSpec {
            ou: self.ou.clone(),
            spins: self.spins.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Walsh matrix, shuffling matrix (or inverse) or dyadic diagonal.
    WalshMatrix {
        #[arg(short, long)]
        n: u32,
        #[arg(long, value_enum, default_value = "walsh")]
        kind: KindArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Segments of every sequence in a Walsh or CPMG comparison set.
    Sequences {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seeded OU trajectories.
    SimulateOu {
        #[arg(long = "ou", required = true)]
        ou: Vec<OuSpec>,
        #[arg(long)]
        dt: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decay exponents for a sequence set.
    Chi {
        #[command(flatten)]
        set: SetArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long, value_enum, default_value = "quadrature")]
        method: MethodArg,
        #[arg(long, default_value_t = 4096)]
        reps: usize,
        #[arg(long, default_value_t = 8)]
        oversample: usize,
        /// Required for `--method mc`.
        #[arg(long, required_if_eq("method", "mc"))]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reconstruct G and S from a chi table.
    Reconstruct {
        #[arg(long)]
        chis: PathBuf,
        /// Scheme for tables without a scheme column.
        #[arg(long, value_enum)]
        scheme: Option<SchemeArg>,
        #[arg(short = 't', long)]
        total_time: f64,
        #[arg(long)]
        cpmg_limit: Option<usize>,
        #[arg(long)]
        out_g: Option<PathBuf>,
        #[arg(long)]
        out_s: Option<PathBuf>,
    },
    /// Error metrics of reconstructed G and S against a classical model.
    Compare {
        #[arg(long)]
        g: PathBuf,
        #[arg(long)]
        s: PathBuf,
        #[arg(long = "ou", required = true)]
        ou: Vec<OuSpec>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Signal of a qubit under classical noise plus nuclear spins.
    QcSignal {
        #[command(flatten)]
        set: SetArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert raw two-projection readouts to decay exponents.
    Ingest {
        #[arg(long)]
        raw: PathBuf,
        #[arg(long)]
        contrast: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Propagate chi uncertainties to G (Walsh) or S (CPMG).
    ErrorBudget {
        #[arg(long)]
        chis: PathBuf,
        #[arg(long, value_enum)]
        scheme: Option<SchemeArg>,
        #[arg(short = 't', long)]
        total_time: f64,
        /// Use this sigma for every chi instead of the table's column.
        #[arg(long)]
        uniform_sigma: Option<f64>,
        #[arg(long)]
        cpmg_limit: Option<usize>,
        /// Monte Carlo draws for a cross-check (0 disables).
        #[arg(long, default_value_t = 0)]
        mc_draws: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full pipeline from a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

fn emit(
    guard: &mut OutputGuard,
    named: Named,
    out: Option<&Path>,
    out_dir: Option<&Path>,
) -> Result<()> {
    let (name, table) = named;
    let bytes = table.to_bytes()?;
    match resolve(out, out_dir, name) {
        Some(path) => {
            guard.write(&path, &bytes)?;
        }
        None => std::io::stdout().lock().write_all(&bytes)?,
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    let out_dir = cli.out_dir.as_deref();
    let mut guard = OutputGuard::new();
    match cli.cmd {
        Cmd::WalshMatrix { n, kind, out } => {
            let kind = match kind {
                KindArg::Walsh => MatrixKind::Walsh,
                KindArg::Shuffling => MatrixKind::Shuffling,
                KindArg::ShufflingInverse => MatrixKind::ShufflingInverse,
                KindArg::Dyadic => MatrixKind::Dyadic,
            };
            emit(
                &mut guard,
                commands::walsh_matrix(n, kind)?,
                out.as_deref(),
                out_dir,
            )?;
        }
        Cmd::Sequences { set, out } => {
            let t = commands::sequences(set.scheme.into(), set.n, set.total_time)?;
            emit(&mut guard, t, out.as_deref(), out_dir)?;
        }
        Cmd::SimulateOu {
            ou,
            dt,
            steps,
            reps,
            seed,
            out,
        } => {
            emit(
                &mut guard,
                commands::simulate_ou(&ou, dt, steps, reps, seed)?,
                out.as_deref(),
                out_dir,
            )?;
        }
        Cmd::Chi {
            set,
            noise,
            method,
            reps,
            oversample,
            seed,
            out,
        } => {
            let request = match method {
                MethodArg::Bilinear => ChiRequest::Bilinear,
                MethodArg::Quadrature => ChiRequest::Quadrature,
                MethodArg::Mc => ChiRequest::MonteCarlo {
                    reps,
                    oversample,
                    seed: seed.context("--seed is required for Monte Carlo")?,
                },
            };
            let t = commands::chi(
                set.scheme.into(),
                set.n,
                set.total_time,
                &noise.spec(),
                request,
            )?;
            emit(&mut guard, t, out.as_deref(), out_dir)?;
        }
        Cmd::Reconstruct {
            chis,
            scheme,
            total_time,
            cpmg_limit,
            out_g,
            out_s,
        } => {
            let (g, s) =
                commands::reconstruct_file(&chis, scheme.map(Into::into), total_time, cpmg_limit)?;
            emit(&mut guard, g, out_g.as_deref(), out_dir)?;
            emit(&mut guard, s, out_s.as_deref(), out_dir)?;
        }
        Cmd::Compare { g, s, ou, out } => {
            let noise = NoiseSpec {
                ou,
                spins: Vec::new(),
            };
            emit(
                &mut guard,
                commands::compare_files(&g, &s, &noise)?,
                out.as_deref(),
                out_dir,
            )?;
        }
        Cmd::QcSignal { set, noise, out } => {
            let t = commands::qc_signal(set.scheme.into(), set.n, set.total_time, &noise.spec())?;
            emit(&mut guard, t, out.as_deref(), out_dir)?;
        }
        Cmd::Ingest { raw, contrast, out } => {
            emit(
                &mut guard,
                commands::ingest(&raw, contrast)?,
                out.as_deref(),
                out_dir,
            )?;
        }
        Cmd::ErrorBudget {
            chis,
            scheme,
            total_time,
            uniform_sigma,
            cpmg_limit,
            mc_draws,
            seed,
            out,
        } => {
            let opts = BudgetOptions {
                uniform_sigma,
                cpmg_limit,
                mc_draws,
                seed,
            };
            let t = commands::error_budget(&chis, scheme.map(Into::into), total_time, &opts)?;
            emit(&mut guard, t, out.as_deref(), out_dir)?;
        }
        Cmd::Run { config } => {
            let cfg = RunConfig::load(&config)?;
            let manifest = run(&cfg, out_dir)?;
            for a in &manifest.outputs {
                println!("{}  {}", a.sha256, a.file);
            }
        }
    }
    guard.commit();
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
