//! Eigenvalue-decay experiments: Matérn kernels on the unit disk and iterated
//! Brownian bridge kernels on the unit interval, with log-log slope fits and
//! CSV reports.

use std::io::{Read, Write};
use std::ops::Range;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::discrete_l2::{
    assemble_pencil, cross_kernel_matrix, exact_translate_gramian, kernel_matrix,
    newton_l2_gramian, GramianMode, GramianPair, Provenance,
};
use crate::eigensolve::{
    eigs_direct, eigs_newton, eval_eigenfunction, BasisTag, EigenApproximation, Method,
};
use crate::error::{Error, Result};
use crate::kernels::{kernel_trace, BrownianBridgeSpec, Domain, Kernel, MaternSpec};
use crate::newton::{greedy_select, power_l2_norm, Criterion, NewtonBasis};
use crate::pointsets::{disk_grid, random_interval_points, QuadratureSet};

/// Slope tolerance for the Matérn decay comparisons.
pub const SLOPE_TOLERANCE: f64 = 0.25;

/// Points of the equispaced evaluation grid for eigenfunction errors.
pub const EVAL_GRID: usize = 1001;

// ---------------------------------------------------------------------------
// Slope fitting

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub used: usize,
    pub excluded: usize,
}

/// Least-squares slope of `log y` against `log x` over the index window.
/// Nonpositive `y` inside the window are skipped and counted.
pub fn fit_decay_rate(xs: &[f64], ys: &[f64], window: Range<usize>) -> Result<Fit> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    let window = window.start.min(xs.len())..window.end.min(xs.len());
    let (mut logs, mut excluded) = (Vec::new(), 0);
    for i in window {
        if ys[i] > 0.0 && xs[i] > 0.0 {
            logs.push((xs[i].ln(), ys[i].ln()));
        } else {
            excluded += 1;
        }
    }
    if logs.len() < 2 {
        return Err(Error::WindowTooSmall {
            usable: logs.len(),
            excluded,
        });
    }
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::WindowTooSmall {
            usable: 1,
            excluded,
        });
    }
    let slope = sxy / sxx;
    Ok(Fit {
        slope,
        intercept: my - slope * mx,
        used: logs.len(),
        excluded,
    })
}

/// Indices of `xs` falling in `[lo, hi]`, as a range (`xs` increasing).
pub fn index_window(xs: &[f64], lo: f64, hi: f64) -> Range<usize> {
    let start = xs.iter().position(|&x| x >= lo).unwrap_or(xs.len());
    let end = xs.iter().rposition(|&x| x <= hi).map_or(start, |e| e + 1);
    start..end.max(start)
}

/// Measured decay of one quantity with its fitted log-log slope.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub fit_slope: f64,
    pub fit_range: Range<usize>,
    pub excluded: usize,
    pub reference_slope: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl DecayReport {
    fn fit(xs: Vec<f64>, ys: Vec<f64>, lo: f64, hi: f64, reference_slope: f64) -> Result<Self> {
        let fit_range = index_window(&xs, lo, hi);
        let fit = fit_decay_rate(&xs, &ys, fit_range.clone())?;
        Ok(Self {
            passed: (fit.slope - reference_slope).abs() <= SLOPE_TOLERANCE,
            xs,
            ys,
            fit_slope: fit.slope,
            fit_range,
            excluded: fit.excluded,
            reference_slope,
            tolerance: SLOPE_TOLERANCE,
        })
    }

    pub fn rows(&self) -> Vec<DecayRow> {
        self.xs
            .iter()
            .zip(&self.ys)
            .enumerate()
            .map(|(i, (&x, &y))| DecayRow {
                x,
                y,
                in_window: self.fit_range.contains(&i),
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Matérn on the unit disk

/// Eigenvalue decay of a Matérn kernel from a greedy Newton basis on a disk grid.
#[derive(Debug, Clone)]
pub struct MaternDecay {
    pub beta: u32,
    pub grid_m: usize,
    pub requested_n: usize,
    pub achieved_n: usize,
    pub breakdown: bool,
    pub eigenvalues: Vec<f64>,
    pub unstable: bool,
    /// `|Σ λ_{j,n} + ‖P_n‖² − π| / π` under the discrete rule.
    pub trace_residual: f64,
    pub report: DecayReport,
}

struct DiskRun {
    kernel: MaternSpec,
    quad: QuadratureSet,
    basis: NewtonBasis,
    gramian: nalgebra::DMatrix<f64>,
}

fn disk_run(beta: u32, grid_m: usize, n: usize) -> Result<DiskRun> {
    let kernel = MaternSpec::new(beta)?;
    let quad = disk_grid(grid_m);
    let basis = greedy_select(&kernel, &quad, n, Criterion::Linf)?;
    let gramian = newton_l2_gramian(&basis, &quad, GramianMode::Discrete, &kernel)?;
    Ok(DiskRun {
        kernel,
        quad,
        basis,
        gramian,
    })
}

/// `−(β + d)/d`.
pub fn eigenvalue_decay_slope(beta: u32, dim: usize) -> f64 {
    -(f64::from(beta) + dim as f64) / dim as f64
}

/// Greedy-`L∞` selection of `n` points on a disk grid of about `grid_m` nodes,
/// `λ_{j,n}` from the discrete Newton Gramian, slope fitted over `j ∈ [10, n/2]`.
pub fn run_matern_decay(beta: u32, grid_m: usize, n: usize) -> Result<MaternDecay> {
    let run = disk_run(beta, grid_m, n)?;
    let dim = run.kernel.dim();
    let eig = eigs_newton(&run.gramian);
    let power = power_l2_norm(&run.basis, &run.quad)?;
    let total = kernel_trace(&run.kernel, Domain::UnitDisk)?;
    let trace_residual = (eig.eigenvalue_sum() + power.norm.powi(2) - total).abs() / total;

    let achieved = run.basis.len();
    let xs: Vec<f64> = (1..=achieved).map(|j| j as f64).collect();
    let report = DecayReport::fit(
        xs,
        eig.eigenvalues.clone(),
        10.0,
        (n / 2) as f64,
        eigenvalue_decay_slope(beta, dim),
    )?;
    Ok(MaternDecay {
        beta,
        grid_m: run.quad.len(),
        requested_n: n,
        achieved_n: achieved,
        breakdown: run.basis.breakdown(),
        unstable: eig.any_unstable(),
        eigenvalues: eig.eigenvalues,
        trace_residual,
        report,
    })
}

/// Decay of `Σ λ_j − Σ_{j≤n} λ_{j,n}` along the greedy sequence.
#[derive(Debug, Clone)]
pub struct MaternGap {
    pub beta: u32,
    pub grid_m: usize,
    pub achieved_n: usize,
    /// `−β/d`.
    pub proven_slope: f64,
    /// `−(β + d/2)/d`.
    pub observed_slope: f64,
    pub in_band: bool,
    pub closer_to_observed: bool,
    /// Set when some gap fell below `−10⁻⁸ π`.
    pub negative_gap: bool,
    pub report: DecayReport,
}

/// `gap(k) = π − Σ_{j≤k} λ_{j,k}` for `k = 1..=n`; passes when the fitted slope lies
/// in `[−(β+d)/d − 0.25, −β/d + 0.25]`.
///
/// The eigenvalue sum of the nested `k`-point space is the trace of the leading
/// `k × k` block of the Newton Gramian.
pub fn run_matern_sum_gap(beta: u32, grid_m: usize, n: usize) -> Result<MaternGap> {
    let run = disk_run(beta, grid_m, n)?;
    let d = run.kernel.dim() as f64;
    let total = kernel_trace(&run.kernel, Domain::UnitDisk)?;
    let achieved = run.basis.len();
    let mut sum = 0.0;
    let gaps: Vec<f64> = (0..achieved)
        .map(|k| {
            sum += run.gramian[(k, k)];
            total - sum
        })
        .collect();
    let negative_gap = gaps.iter().any(|&g| g < -1e-8 * total);
    let b = f64::from(beta);
    let proven_slope = -b / d;
    let observed_slope = -(b + d / 2.0) / d;
    let xs: Vec<f64> = (1..=achieved).map(|k| k as f64).collect();
    let mut report = DecayReport::fit(xs, gaps, 10.0, (n / 2) as f64, observed_slope)?;
    let lower = eigenvalue_decay_slope(beta, run.kernel.dim()) - SLOPE_TOLERANCE;
    let upper = proven_slope + SLOPE_TOLERANCE;
    let in_band = (lower..=upper).contains(&report.fit_slope);
    report.passed = in_band;
    Ok(MaternGap {
        beta,
        grid_m: run.quad.len(),
        achieved_n: achieved,
        proven_slope,
        observed_slope,
        in_band,
        closer_to_observed: (report.fit_slope - observed_slope).abs()
            < (report.fit_slope - proven_slope).abs(),
        negative_gap,
        report,
    })
}

// ---------------------------------------------------------------------------
// Brownian bridge on the unit interval

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    use std::f64::consts::PI;
    (0..n)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// `∫₀¹ P_n(x)² dx` by composite 10-point Gauss–Legendre on the panels cut by
/// the centers, each split into `subpanels` pieces.
///
/// Exact up to round-off for `ε = 0` bridge kernels of order `β ≤ 4`, whose
/// squared Power Function is a polynomial of degree `4β` between centers.
pub fn integrate_power_squared<K: Kernel + ?Sized>(
    kernel: &K,
    basis: &NewtonBasis,
    subpanels: usize,
) -> f64 {
    let rule = gauss_legendre(10);
    let mut cuts: Vec<f64> = basis.centers().iter().map(|c| c[0]).collect();
    cuts.extend([0.0, 1.0]);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let subpanels = subpanels.max(1);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for w in cuts.windows(2) {
        let h = (w[1] - w[0]) / subpanels as f64;
        for s in 0..subpanels {
            let a = w[0] + s as f64 * h;
            for &(t, wt) in &rule {
                nodes.push([a + 0.5 * h * (t + 1.0)]);
                weights.push(0.5 * h * wt);
            }
        }
    }
    let values = basis.eval_many(kernel, &nodes);
    nodes
        .iter()
        .zip(&weights)
        .zip(&values)
        .map(|((x, wt), v)| wt * (kernel.diag(x) - v.iter().map(|v| v * v).sum::<f64>()))
        .sum()
}

/// One curve of `‖P_k‖_{L2}`, `k = 0..=n`; `None` where the squared power came
/// out negative.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerCurve {
    pub label: String,
    pub values: Vec<Option<f64>>,
    pub negative: bool,
    pub instability: bool,
    /// Message of an error that stopped the method.
    pub failure: Option<String>,
}

impl PowerCurve {
    fn from_sums(label: &str, total: f64, partial: impl IntoIterator<Item = f64>) -> Self {
        let mut values = vec![Some(total.sqrt())];
        let mut negative = false;
        let mut acc = 0.0;
        for s in partial {
            acc += s;
            let p2 = total - acc;
            negative |= p2 < 0.0;
            values.push((p2 >= 0.0).then(|| p2.sqrt()));
        }
        Self {
            label: label.to_string(),
            values,
            negative,
            instability: negative,
            failure: None,
        }
    }

    fn failed(label: &str, err: &Error) -> Self {
        Self {
            label: label.to_string(),
            values: Vec::new(),
            negative: false,
            instability: true,
            failure: Some(err.to_string()),
        }
    }
}

/// Brownian bridge power-function decay for the direct and both greedy methods.
#[derive(Debug, Clone)]
pub struct BbPowerDecay {
    pub beta: u32,
    pub eps: f64,
    pub points: usize,
    pub n: usize,
    pub seed: u64,
    /// `√(Σ_{j>k} λ_j)`, the optimal `k`-dimensional L2 power.
    pub theory: Vec<f64>,
    /// Direct method: `√(Σ λ_j − Σ_{j≤k} λ_{j,N})`, the optimal subspace of `V(X_N)`.
    pub direct: PowerCurve,
    pub greedy_linf: PowerCurve,
    pub greedy_l2: PowerCurve,
    /// Greedy-`L∞` trace identity residual with independently integrated `‖P_n‖²`.
    pub trace_residual: f64,
}

impl BbPowerDecay {
    pub fn rows(&self) -> Vec<PowerRow> {
        let at = |c: &PowerCurve, k: usize| c.values.get(k).copied().flatten();
        (0..=self.n)
            .map(|k| PowerRow {
                n: k,
                theory: self.theory[k],
                direct: at(&self.direct, k),
                greedy_linf: at(&self.greedy_linf, k),
                greedy_l2: at(&self.greedy_l2, k),
            })
            .collect()
    }

    /// Any method lost positivity, broke down or failed.
    pub fn instability(&self) -> bool {
        [&self.direct, &self.greedy_linf, &self.greedy_l2]
            .iter()
            .any(|c| c.instability)
    }

    /// Greedy curves never beat the optimum by more than `slack`.
    pub fn greedy_above_optimum(&self, slack: f64) -> bool {
        [&self.greedy_linf, &self.greedy_l2].iter().all(|c| {
            c.values
                .iter()
                .zip(&self.theory)
                .all(|(v, t)| v.is_none_or(|v| v >= t - slack))
        })
    }

    /// Fraction of `k ∈ [lo, hi]` where `optimum(k) ≤ greedy(k) ≤ optimum(⌊k/2⌋)`,
    /// the worse of the two greedy curves.
    pub fn envelope_fraction(&self, lo: usize, hi: usize, slack: f64) -> f64 {
        let frac = |c: &PowerCurve| {
            let hits = (lo..=hi)
                .filter(|&k| {
                    c.values
                        .get(k)
                        .copied()
                        .flatten()
                        .is_some_and(|v| v >= self.theory[k] - slack && v <= self.theory[k / 2])
                })
                .count();
            hits as f64 / (hi - lo + 1) as f64
        };
        frac(&self.greedy_linf).min(frac(&self.greedy_l2))
    }
}

fn check_bb(beta: u32, n: usize, points: usize) -> Result<()> {
    if !(1..=4).contains(&beta) {
        return Err(Error::InvalidParameter(format!(
            "beta must be in 1..=4, got {beta}"
        )));
    }
    if n > points {
        return Err(Error::InvalidParameter(format!(
            "cannot select {n} points from {points}"
        )));
    }
    Ok(())
}

/// Kernel matrix and exact L2 Gramian of all translates, without a definiteness check.
fn full_pencil(kernel: &BrownianBridgeSpec, quad: &QuadratureSet) -> Result<GramianPair> {
    let pts: Vec<&[f64]> = quad.points().collect();
    Ok(GramianPair {
        a: kernel_matrix(kernel, &pts),
        b: exact_translate_gramian(kernel, &pts)?,
        provenance: Provenance::ExactExpansion,
    })
}

fn greedy_curve(
    label: &str,
    kernel: &BrownianBridgeSpec,
    quad: &QuadratureSet,
    n: usize,
    criterion: Criterion,
    total: f64,
) -> Result<(PowerCurve, Option<(NewtonBasis, nalgebra::DMatrix<f64>)>)> {
    let basis = greedy_select(kernel, quad, n, criterion)?;
    let g = match newton_l2_gramian(&basis, quad, GramianMode::Exact, kernel) {
        Ok(g) => g,
        Err(e @ Error::SingularConfiguration { .. }) => {
            return Ok((PowerCurve::failed(label, &e), None))
        }
        Err(e) => return Err(e),
    };
    let mut curve = PowerCurve::from_sums(label, total, (0..basis.len()).map(|k| g[(k, k)]));
    let eig = eigs_newton(&g);
    curve.instability |=
        basis.breakdown() || eig.any_unstable() || basis.residual_min() < -basis.threshold();
    Ok((curve, Some((basis, g))))
}

/// Power-function decay for `N` seeded random points and `n` basis functions,
/// with exact L2 Gramians after selection.
pub fn run_bb_power_decay(
    beta: u32,
    eps: f64,
    points: usize,
    n: usize,
    seed: u64,
) -> Result<BbPowerDecay> {
    check_bb(beta, n, points)?;
    let kernel = BrownianBridgeSpec::new(beta, eps)?;
    let quad = random_interval_points(points, seed);
    let total = kernel_trace(&kernel, Domain::UnitInterval)?;
    let theory = (0..=n).map(|k| kernel.eigenvalue_tail(k).sqrt()).collect();

    let direct = match full_pencil(&kernel, &quad).and_then(|pair| eigs_direct(&pair)) {
        Ok(eig) => {
            let mut c =
                PowerCurve::from_sums("direct", total, eig.eigenvalues.iter().take(n).copied());
            c.instability |= eig.any_unstable();
            c
        }
        Err(e @ Error::IllConditionedGramian { .. }) => PowerCurve::failed("direct", &e),
        Err(e) => return Err(e),
    };
    let (greedy_linf, linf_run) =
        greedy_curve("greedy-linf", &kernel, &quad, n, Criterion::Linf, total)?;
    let (greedy_l2, _) = greedy_curve("greedy-l2", &kernel, &quad, n, Criterion::L2, total)?;
    let trace_residual = match linf_run {
        Some((basis, g)) => {
            let power = integrate_power_squared(&kernel, &basis, 4);
            (g.trace() + power - total).abs() / total
        }
        None => f64::NAN,
    };
    Ok(BbPowerDecay {
        beta,
        eps,
        points,
        n,
        seed,
        theory,
        direct,
        greedy_linf,
        greedy_l2,
        trace_residual,
    })
}

/// Approximate eigencouples against the exact bridge eigensystem.
#[derive(Debug, Clone)]
pub struct BbEigencouples {
    pub beta: u32,
    pub eps: f64,
    pub points: usize,
    pub achieved_n: usize,
    pub seed: u64,
    pub breakdown: bool,
    pub rows: Vec<EigenRow>,
    /// `Σ λ_{j,n} + ∫ P_n² − Σ λ_j`, relative.
    pub trace_residual: f64,
}

impl BbEigencouples {
    pub fn min_gap(&self) -> f64 {
        self.rows
            .iter()
            .filter_map(|r| r.gap)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn instability(&self) -> bool {
        self.breakdown || self.rows.iter().any(|r| r.unstable)
    }
}

/// Greedy-`L∞` Newton basis of `n` of `N` random points, exact Gramian, and per-`j`
/// comparison with `λ_j` and `|√λ_j φ_j|` on a 1001-point grid.
pub fn run_bb_eigencouples(
    beta: u32,
    eps: f64,
    points: usize,
    n: usize,
    seed: u64,
) -> Result<BbEigencouples> {
    run_bb_eigencouples_with(
        beta,
        eps,
        points,
        n,
        seed,
        Criterion::Linf,
        Method::Newton,
        GramianMode::Exact,
    )
}

/// As [`run_bb_eigencouples`] with explicit selection criterion, eigen method and
/// L2 inner product. `Method::Direct` diagonalizes the translate pencil on the
/// greedily selected points.
#[allow(clippy::too_many_arguments)]
pub fn run_bb_eigencouples_with(
    beta: u32,
    eps: f64,
    points: usize,
    n: usize,
    seed: u64,
    criterion: Criterion,
    method: Method,
    gramian: GramianMode,
) -> Result<BbEigencouples> {
    check_bb(beta, n, points)?;
    let kernel = BrownianBridgeSpec::new(beta, eps)?;
    let quad = random_interval_points(points, seed);
    let basis = greedy_select(&kernel, &quad, n, criterion)?;
    let eig = match method {
        Method::Newton => eigs_newton(&newton_l2_gramian(&basis, &quad, gramian, &kernel)?),
        Method::Direct => eigs_direct(&assemble_pencil(&kernel, basis.centers(), &quad, gramian)?)?,
    };
    let total = kernel_trace(&kernel, Domain::UnitInterval)?;
    let power = integrate_power_squared(&kernel, &basis, 4);
    let trace_residual = (eig.eigenvalue_sum() + power - total).abs() / total;
    let rows = eigen_rows(&kernel, &basis, &eig);
    Ok(BbEigencouples {
        beta,
        eps,
        points,
        achieved_n: basis.len(),
        seed,
        breakdown: basis.breakdown(),
        rows,
        trace_residual,
    })
}

/// Per-eigenvalue rows; eigenfunction errors need an exact eigensystem.
pub fn eigen_rows<K: Kernel + ?Sized>(
    kernel: &K,
    basis: &NewtonBasis,
    eig: &EigenApproximation,
) -> Vec<EigenRow> {
    let h = 1.0 / (EVAL_GRID - 1) as f64;
    let grid: Vec<f64> = (0..EVAL_GRID).map(|i| i as f64 * h).collect();
    // Newton values on the grid, reused across all j.
    let basis_on_grid: Option<Vec<Vec<f64>>> =
        (kernel.dim() == 1 && kernel.eigenfunction(1, &[0.5]).is_some()).then(|| {
            let pts: Vec<[f64; 1]> = grid.iter().map(|&x| [x]).collect();
            match eig.basis {
                BasisTag::Newton => basis.eval_many(kernel, &pts),
                BasisTag::Translates => {
                    let k = cross_kernel_matrix(kernel, &pts, basis.centers());
                    k.row_iter().map(|r| r.iter().copied().collect()).collect()
                }
            }
        });
    (1..=eig.n())
        .map(|j| {
            let lambda_jn = eig.eigenvalues[j - 1];
            let lambda_exact = kernel.eigenvalue(j);
            let eigenfunction_error = basis_on_grid.as_ref().map(|vals| {
                let col = eig.coefficients.column(j - 1);
                let scale = lambda_exact.unwrap_or(0.0).sqrt();
                let sq: f64 = grid
                    .iter()
                    .zip(vals)
                    .enumerate()
                    .map(|(i, (&x, v))| {
                        let approx: f64 = col.iter().zip(v).map(|(q, v)| q * v).sum();
                        let exact = scale * kernel.eigenfunction(j, &[x]).unwrap_or(0.0);
                        let w = if i == 0 || i + 1 == EVAL_GRID {
                            0.5 * h
                        } else {
                            h
                        };
                        w * (approx.abs() - exact.abs()).powi(2)
                    })
                    .sum();
                sq.sqrt()
            });
            EigenRow {
                j,
                lambda_jn,
                lambda_exact,
                gap: lambda_exact.map(|l| l - lambda_jn),
                eigenfunction_error,
                unstable: eig.is_unstable(j),
            }
        })
        .collect()
}

/// Convenience: `√λ_{j,n} φ_{j,n}` sampled on the evaluation grid.
pub fn sample_eigenfunction<K: Kernel + ?Sized>(
    kernel: &K,
    basis: &NewtonBasis,
    eig: &EigenApproximation,
    j: usize,
) -> Vec<f64> {
    (0..EVAL_GRID)
        .map(|i| {
            let x = i as f64 / (EVAL_GRID - 1) as f64;
            eval_eigenfunction(eig, basis, j, &[x], kernel)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// CSV

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub x: f64,
    pub y: f64,
    pub in_window: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub n: usize,
    pub theory: f64,
    pub direct: Option<f64>,
    pub greedy_linf: Option<f64>,
    pub greedy_l2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenRow {
    pub j: usize,
    pub lambda_jn: f64,
    pub lambda_exact: Option<f64>,
    pub gap: Option<f64>,
    pub eigenfunction_error: Option<f64>,
    pub unstable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub index: usize,
    pub x: f64,
    pub y: Option<f64>,
    pub score: f64,
    pub residual_max: f64,
}

pub fn trace_rows(basis: &NewtonBasis) -> Vec<TraceRow> {
    basis
        .selection_trace()
        .iter()
        .map(|s| TraceRow {
            step: s.step,
            index: s.index,
            x: s.coords[0],
            y: s.coords.get(1).copied(),
            score: s.score,
            residual_max: s.residual_max,
        })
        .collect()
}

/// Header row plus one record per row; floats in shortest round-trip form.
pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned, R: Read>(input: R) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}
