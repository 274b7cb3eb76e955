use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mercer_eigen::discrete_l2::write_matrix_csv;
use mercer_eigen::experiments::{
    self, trace_rows, write_csv, DecayRow, EigenRow, PowerRow, TraceRow,
};
use mercer_eigen::{
    disk_grid, greedy_select, newton_l2_gramian, power_l2_norm, random_interval_points, Criterion,
    Domain, GramianMode, Method, ZooKernel,
};

#[derive(Parser)]
#[command(
    name = "mercer-eigen",
    version,
    about = "Greedy Newton-basis approximation of Mercer eigensystems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decay of λ_{j,n} for a Matérn kernel on the unit disk.
    MaternDecay(Shared),
    /// Decay of π − Σ λ_{j,n} along the greedy sequence on the unit disk.
    MaternGap(Shared),
    /// Brownian bridge power-function decay: direct and greedy methods vs. the optimum.
    BbPower(Shared),
    /// Brownian bridge eigencouples against the exact eigensystem.
    BbEigs(Shared),
    /// Greedy selection trace for any zoo kernel.
    GreedyTrace(TraceArgs),
}

#[derive(Args, Clone)]
struct Shared {
    #[arg(long, default_value_t = 1)]
    beta: u32,
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    /// Target size of the disk grid.
    #[arg(long, default_value_t = 10_000)]
    grid_m: usize,
    /// Number of random candidate points in (0, 1); defaults to 500 (bb-power) or 100 (bb-eigs).
    #[arg(long)]
    points: Option<usize>,
    /// Basis size; defaults to 200 on the disk and 50 on the interval.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = CriterionArg::Linf)]
    criterion: CriterionArg,
    #[arg(long, value_enum, default_value_t = MethodArg::Newton)]
    method: MethodArg,
    #[arg(long, value_enum, default_value_t = GramianArg::Exact)]
    gramian: GramianArg,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a gnuplot script next to the CSV.
    #[arg(long, requires = "out")]
    gnuplot: bool,
}

#[derive(Args)]
struct TraceArgs {
    /// Zoo id: matern0..matern3 or bb.
    #[arg(long, default_value = "bb")]
    kernel: String,
    #[arg(long, value_enum)]
    domain: Option<DomainArg>,
    #[command(flatten)]
    shared: Shared,
    /// Optional CSV dump of the Newton L2 Gramian.
    #[arg(long)]
    gramian_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CriterionArg {
    Linf,
    L2,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Direct,
    Newton,
}

#[derive(Clone, Copy, ValueEnum)]
enum GramianArg {
    Discrete,
    Exact,
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    Disk,
    Interval,
}

impl From<CriterionArg> for Criterion {
    fn from(c: CriterionArg) -> Self {
        match c {
            CriterionArg::Linf => Criterion::Linf,
            CriterionArg::L2 => Criterion::L2,
        }
    }
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Direct => Method::Direct,
            MethodArg::Newton => Method::Newton,
        }
    }
}

impl From<GramianArg> for GramianMode {
    fn from(g: GramianArg) -> Self {
        match g {
            GramianArg::Discrete => GramianMode::Discrete,
            GramianArg::Exact => GramianMode::Exact,
        }
    }
}

fn emit<T: serde::Serialize>(rows: &[T], out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            let file =
                File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_csv(rows, file)?;
        }
        None => write_csv(rows, io::stdout().lock())?,
    }
    Ok(())
}

fn gnuplot(out: &Path, xlabel: &str, columns: &[(usize, &str)]) -> Result<()> {
    let script = out.with_extension("gp");
    let mut f = File::create(&script)?;
    writeln!(f, "set datafile separator ','")?;
    writeln!(f, "set key autotitle columnhead")?;
    writeln!(f, "set logscale xy")?;
    writeln!(f, "set xlabel '{xlabel}'")?;
    let plots: Vec<String> = columns
        .iter()
        .map(|(c, title)| {
            format!(
                "'{}' using 1:{c} with linespoints title '{title}'",
                out.display()
            )
        })
        .collect();
    writeln!(f, "plot {}", plots.join(", \\\n     "))?;
    Ok(())
}

fn check(label: &str, ok: bool) -> bool {
    eprintln!("{} {label}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::MaternDecay(a) => {
            let n = a.n.unwrap_or(200);
            let r = experiments::run_matern_decay(a.beta, a.grid_m, n)?;
            emit::<DecayRow>(&r.report.rows(), a.out.as_deref())?;
            if a.gnuplot {
                gnuplot(a.out.as_deref().unwrap(), "j", &[(2, "lambda_jn")])?;
            }
            eprintln!(
                "m = {}, n = {}/{}, slope = {:.4} (reference {:.4}), trace residual = {:.2e}{}",
                r.grid_m,
                r.achieved_n,
                r.requested_n,
                r.report.fit_slope,
                r.report.reference_slope,
                r.trace_residual,
                if r.breakdown { ", breakdown" } else { "" }
            );
            Ok(check("eigenvalue decay slope", r.report.passed)
                & check("trace identity", r.trace_residual <= 1e-2))
        }
        Command::MaternGap(a) => {
            let n = a.n.unwrap_or(200);
            let r = experiments::run_matern_sum_gap(a.beta, a.grid_m, n)?;
            emit::<DecayRow>(&r.report.rows(), a.out.as_deref())?;
            if a.gnuplot {
                gnuplot(a.out.as_deref().unwrap(), "n", &[(2, "gap")])?;
            }
            eprintln!(
                "m = {}, n = {}, slope = {:.4} (proven {:.2}, observed {:.2}), closer to observed: {}",
                r.grid_m,
                r.achieved_n,
                r.report.fit_slope,
                r.proven_slope,
                r.observed_slope,
                r.closer_to_observed
            );
            Ok(check("gap slope in band", r.in_band) & check("gap nonnegative", !r.negative_gap))
        }
        Command::BbPower(a) => {
            let points = a.points.unwrap_or(500);
            let n = a.n.unwrap_or(50);
            let r = experiments::run_bb_power_decay(a.beta, a.eps, points, n, a.seed)?;
            emit::<PowerRow>(&r.rows(), a.out.as_deref())?;
            if a.gnuplot {
                gnuplot(
                    a.out.as_deref().unwrap(),
                    "n",
                    &[
                        (2, "optimal"),
                        (3, "direct"),
                        (4, "greedy linf"),
                        (5, "greedy l2"),
                    ],
                )?;
            }
            for c in [&r.direct, &r.greedy_linf, &r.greedy_l2] {
                eprintln!(
                    "{:>12}: instability = {}{}",
                    c.label,
                    c.instability,
                    c.failure
                        .as_deref()
                        .map(|f| format!(" ({f})"))
                        .unwrap_or_default()
                );
            }
            eprintln!("trace residual = {:.2e}", r.trace_residual);
            let mut ok = check("greedy power above optimum", r.greedy_above_optimum(1e-6));
            if a.beta == 1 {
                let frac = r.envelope_fraction(5, n.min(50), 1e-6);
                ok &= check(
                    &format!("greedy within [opt(n), opt(n/2)] for {:.0}%", 100.0 * frac),
                    frac >= 0.8,
                );
            }
            Ok(ok)
        }
        Command::BbEigs(a) => {
            let points = a.points.unwrap_or(100);
            let n = a.n.unwrap_or(50);
            let r = experiments::run_bb_eigencouples_with(
                a.beta,
                a.eps,
                points,
                n,
                a.seed,
                a.criterion.into(),
                a.method.into(),
                a.gramian.into(),
            )?;
            emit::<EigenRow>(&r.rows, a.out.as_deref())?;
            if a.gnuplot {
                gnuplot(
                    a.out.as_deref().unwrap(),
                    "j",
                    &[(2, "lambda_jn"), (3, "lambda_j")],
                )?;
            }
            eprintln!(
                "n = {}, min gap = {:.3e}, trace residual = {:.2e}, instability = {}",
                r.achieved_n,
                r.min_gap(),
                r.trace_residual,
                r.instability()
            );
            let positive = r.rows.iter().all(|row| row.lambda_jn > 0.0);
            // The upper bound holds for the exact L2 operator only; a discrete
            // Gramian approximates a different operator.
            let bounded = match a.gramian {
                GramianArg::Exact => check("lambda_jn <= lambda_j + 1e-10", r.min_gap() >= -1e-10),
                GramianArg::Discrete => true,
            };
            Ok(bounded & check("lambda_jn > 0", positive))
        }
        Command::GreedyTrace(t) => {
            let a = &t.shared;
            let kernel = ZooKernel::from_id(&t.kernel, a.beta, a.eps)?;
            let domain = match t.domain {
                Some(DomainArg::Disk) => Domain::UnitDisk,
                Some(DomainArg::Interval) => Domain::UnitInterval,
                None => kernel.domain(),
            };
            anyhow::ensure!(
                domain == kernel.domain(),
                "kernel {} lives on the {}",
                t.kernel,
                kernel.domain()
            );
            let quad = match domain {
                Domain::UnitDisk => disk_grid(a.grid_m),
                Domain::UnitInterval => random_interval_points(a.points.unwrap_or(500), a.seed),
            };
            let n = a.n.unwrap_or(50);
            let basis = greedy_select(&kernel, &quad, n, a.criterion.into())?;
            emit::<TraceRow>(&trace_rows(&basis), a.out.as_deref())?;
            if a.gnuplot {
                gnuplot(a.out.as_deref().unwrap(), "step", &[(6, "max P^2")])?;
            }
            if let Some(path) = &t.gramian_out {
                let g = newton_l2_gramian(&basis, &quad, a.gramian.into(), &kernel)?;
                write_matrix_csv(&g, File::create(path)?)?;
            }
            let p = power_l2_norm(&basis, &quad)?;
            eprintln!(
                "selected {}/{} of {} candidates, discrete ||P||_L2 = {:.4e}, min P^2 = {:.3e}{}",
                basis.len(),
                n,
                quad.len(),
                p.norm,
                p.min_residual,
                if basis.breakdown() { ", breakdown" } else { "" }
            );
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
