//! Newton basis of kernel translates, built column by column as a pivoted
//! Cholesky factorization over a candidate set, with P-greedy pivoting.
//!
//! After `n` steps the stored quantities are
//!
//! * `values[i][j] = v_i(c_j)` for every candidate `c_j`,
//! * `residual[j] = K(c_j, c_j) − Σ_i v_i(c_j)² = P_n(c_j)²`,
//!
//! and the Newton functions are `H`-orthonormal with `v_i(x_k) = 0` for `k < i`.

use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::discrete_l2::{cross_kernel_matrix, kernel_matrix};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::pointsets::QuadratureSet;

/// Pivot residuals at or below `τ · max diag` stop the construction.
pub const BREAKDOWN_TAU: f64 = 1e-13;

/// Kernel matrices on candidate sets up to this size are cached by the L2 criterion.
const KERNEL_CACHE_LIMIT: usize = 4096;

/// Norm in which the next Newton function is maximized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Linf,
    L2,
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linf" => Ok(Self::Linf),
            "l2" => Ok(Self::L2),
            other => Err(Error::InvalidParameter(format!(
                "unknown criterion `{other}`"
            ))),
        }
    }
}

/// One greedy step.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionStep {
    pub step: usize,
    pub index: usize,
    pub coords: Vec<f64>,
    pub score: f64,
    /// `max_j P²(c_j)` after the step.
    pub residual_max: f64,
}

#[derive(Debug, Clone)]
pub struct NewtonBasis {
    selected: Vec<usize>,
    centers: Vec<Vec<f64>>,
    values: Vec<Vec<f64>>,
    residual: Vec<f64>,
    threshold: f64,
    breakdown: bool,
    trace: Vec<SelectionStep>,
}

impl NewtonBasis {
    /// The empty basis: `P_0² = K(x, x)`.
    pub fn empty<K: Kernel + ?Sized>(kernel: &K, candidates: &QuadratureSet) -> Self {
        let residual: Vec<f64> = candidates.points().map(|c| kernel.diag(c)).collect();
        let max_diag = residual.iter().copied().fold(0.0, f64::max);
        Self {
            selected: Vec::new(),
            centers: Vec::new(),
            values: Vec::new(),
            residual,
            threshold: BREAKDOWN_TAU * max_diag,
            breakdown: false,
            trace: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn candidate_count(&self) -> usize {
        self.residual.len()
    }

    pub fn selected_indices(&self) -> &[usize] {
        &self.selected
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    /// Rows `v_i(c_·)`.
    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// `n × m` matrix of Newton values on the candidates.
    pub fn values_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.len(), self.candidate_count(), |i, j| self.values[i][j])
    }

    /// Lower-triangular `T` with `T[k, i] = v_i(x_k)`, so that `A = T Tᵀ`.
    pub fn triangular_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |k, i| {
            if i <= k {
                self.values[i][self.selected[k]]
            } else {
                0.0
            }
        })
    }

    /// Squared Power Function on the candidates (raw, may hold negative round-off).
    pub fn residual(&self) -> &[f64] {
        &self.residual
    }

    /// Absolute breakdown threshold `τ · max_j K(c_j, c_j)`.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Set when greedy selection stopped before the requested size.
    pub fn breakdown(&self) -> bool {
        self.breakdown
    }

    pub fn selection_trace(&self) -> &[SelectionStep] {
        &self.trace
    }

    pub fn residual_max(&self) -> f64 {
        self.residual
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn residual_min(&self) -> f64 {
        self.residual.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Appends the Newton function pivoted at candidate `new_index`:
    /// `v_{n+1} = (K(·, x) − Σ_i v_i(x) v_i(·)) / √r(x)`.
    pub fn extend<K: Kernel + ?Sized>(
        &mut self,
        new_index: usize,
        kernel: &K,
        candidates: &QuadratureSet,
    ) -> Result<()> {
        let column: Vec<f64> = {
            let x = candidates.point(new_index);
            (0..candidates.len())
                .into_par_iter()
                .map(|j| kernel.eval(candidates.point(j), x))
                .collect()
        };
        self.extend_with_column(new_index, column, candidates)
    }

    fn extend_with_column(
        &mut self,
        new_index: usize,
        mut column: Vec<f64>,
        candidates: &QuadratureSet,
    ) -> Result<()> {
        let m = self.candidate_count();
        if new_index >= m {
            return Err(Error::InvalidParameter(format!(
                "candidate index {new_index} out of range 0..{m}"
            )));
        }
        if candidates.len() != m {
            return Err(Error::LengthMismatch {
                expected: m,
                found: candidates.len(),
            });
        }
        let pivot = self.residual[new_index];
        if !(pivot > self.threshold) {
            return Err(Error::Breakdown {
                step: self.len() + 1,
                residual: pivot,
                threshold: self.threshold,
            });
        }
        let coefs: Vec<f64> = self.values.iter().map(|row| row[new_index]).collect();
        let scale = pivot.sqrt().recip();
        column.par_iter_mut().enumerate().for_each(|(j, c)| {
            let mut s = *c;
            for (coef, row) in coefs.iter().zip(&self.values) {
                s -= coef * row[j];
            }
            *c = s * scale;
        });
        self.push_column(new_index, column, candidates);
        Ok(())
    }

    fn push_column(&mut self, new_index: usize, column: Vec<f64>, candidates: &QuadratureSet) {
        for (r, v) in self.residual.iter_mut().zip(&column) {
            *r -= v * v;
        }
        self.values.push(column);
        self.selected.push(new_index);
        self.centers.push(candidates.point(new_index).to_vec());
    }

    /// `(v_1(x), …, v_n(x))` at an arbitrary point, by the Newton recursion
    /// `v_i(x) = (K(x, x_i) − Σ_{k<i} v_k(x_i) v_k(x)) / v_i(x_i)`.
    pub fn eval_at<K: Kernel + ?Sized>(&self, kernel: &K, x: &[f64]) -> Vec<f64> {
        self.newton_values(self.centers.iter().map(|c| kernel.eval(x, c)))
    }

    /// [`eval_at`](Self::eval_at) over many points, with the translates
    /// assembled as one matrix.
    pub fn eval_many<K, P>(&self, kernel: &K, points: &[P]) -> Vec<Vec<f64>>
    where
        K: Kernel + ?Sized,
        P: AsRef<[f64]> + Sync,
    {
        let k = cross_kernel_matrix(kernel, points, &self.centers);
        (0..points.len())
            .into_par_iter()
            .map(|p| self.newton_values(k.row(p).iter().copied()))
            .collect()
    }

    fn newton_values(&self, translates: impl Iterator<Item = f64>) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for (i, (&sel, kx)) in self.selected.iter().zip(translates).enumerate() {
            let mut s = kx;
            for (k, vk) in out.iter().enumerate() {
                s -= self.values[k][sel] * vk;
            }
            out.push(s / self.values[i][sel]);
        }
        out
    }
}

fn argmax_excluding(scores: &[f64], taken: &[bool]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (j, &s) in scores.iter().enumerate() {
        if taken[j] || s.is_nan() {
            continue;
        }
        // Strict comparison: ties go to the lowest index.
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((j, s));
        }
    }
    best
}

/// `K v` on the candidates without storing `K`.
fn lazy_apply<K: Kernel + ?Sized>(kernel: &K, v: &[f64], candidates: &QuadratureSet) -> Vec<f64> {
    (0..candidates.len())
        .into_par_iter()
        .map(|i| {
            let x = candidates.point(i);
            candidates
                .points()
                .zip(v)
                .map(|(y, b)| kernel.eval(x, y) * b)
                .sum()
        })
        .collect()
}

/// State of the `L2` scores: the residual kernel itself when it fits in
/// memory, else running column norms `‖R(·, x)‖²`.
enum L2State {
    Residual(Vec<f64>),
    Recursive(Vec<f64>),
}

/// Selects up to `n` points by P-greedy maximization of the next Newton function.
///
/// The first point maximizes `‖K(·, x) / √K(x, x)‖` over the candidates. Later
/// points maximize `‖v_{i+1}‖²`: for `Linf` this is the residual `r` itself; for
/// `L2` it is `w ‖R(·, x)‖² / R(x, x)` with `R = K − Σ v_i v_iᵀ` the residual
/// kernel on the candidates. Up to [`KERNEL_CACHE_LIMIT`] candidates `R` is kept
/// and downdated explicitly; beyond that its column norms follow a recursion
/// driven by one kernel product per step, which loses accuracy once `R(x, x)`
/// nears round-off.
///
/// Stops early, with [`NewtonBasis::breakdown`] set, once no admissible pivot exceeds
/// the breakdown threshold.
pub fn greedy_select<K: Kernel + ?Sized>(
    kernel: &K,
    candidates: &QuadratureSet,
    n: usize,
    criterion: Criterion,
) -> Result<NewtonBasis> {
    select(kernel, candidates, n, criterion, KERNEL_CACHE_LIMIT)
}

fn select<K: Kernel + ?Sized>(
    kernel: &K,
    candidates: &QuadratureSet,
    n: usize,
    criterion: Criterion,
    cache_limit: usize,
) -> Result<NewtonBasis> {
    let m = candidates.len();
    if n > m {
        return Err(Error::InvalidParameter(format!(
            "cannot select {n} points from {m} candidates"
        )));
    }
    let mut basis = NewtonBasis::empty(kernel, candidates);
    let mut taken = vec![false; m];
    let w = candidates.weight();
    // Small candidate sets keep the kernel matrix (symmetric, so row- and
    // column-major agree).
    let cached: Option<Vec<f64>> = (m <= cache_limit).then(|| {
        let pts: Vec<&[f64]> = candidates.points().collect();
        kernel_matrix(kernel, &pts).as_slice().to_vec()
    });

    if let Some(k) = &cached {
        // Keep the residual consistent with the cached columns.
        for (j, r) in basis.residual.iter_mut().enumerate() {
            *r = k[j * m + j];
        }
    }

    // Column statistics of K for the first step: sup |K(·, x)| and Σ K(·, x)².
    let (col_sup, mut col_sq): (Vec<f64>, Vec<f64>) = match &cached {
        Some(k) => k
            .par_chunks(m)
            .map(|col| {
                col.iter().fold((0.0f64, 0.0f64), |(sup, sq), &k| {
                    (sup.max(k.abs()), sq + k * k)
                })
            })
            .unzip(),
        None => (0..m)
            .into_par_iter()
            .map(|j| {
                let x = candidates.point(j);
                candidates.points().fold((0.0f64, 0.0f64), |(sup, sq), y| {
                    let k = kernel.eval(y, x);
                    (sup.max(k.abs()), sq + k * k)
                })
            })
            .unzip(),
    };

    let (cached, mut l2) = match criterion {
        Criterion::L2 => (
            None,
            Some(match cached {
                Some(k) => L2State::Residual(k),
                None => L2State::Recursive(Vec::new()),
            }),
        ),
        Criterion::Linf => (cached, None),
    };

    if let Some(L2State::Recursive(norms)) = &mut l2 {
        *norms = col_sq.clone();
    }

    for step in 0..n {
        if let Some(L2State::Residual(r)) = &l2 {
            col_sq = (0..m)
                .into_par_iter()
                .map(|j| r[j * m..(j + 1) * m].iter().map(|v| v * v).sum())
                .collect();
        } else if let Some(L2State::Recursive(norms)) = &l2 {
            col_sq.clone_from(norms);
        }
        let scores: Vec<f64> = if step == 0 {
            (0..m)
                .map(|j| {
                    let d = basis.residual[j];
                    match criterion {
                        Criterion::Linf => col_sup[j] / d.sqrt(),
                        Criterion::L2 => w * col_sq[j] / d,
                    }
                })
                .collect()
        } else {
            (0..m)
                .map(|j| {
                    let r = basis.residual[j];
                    match criterion {
                        Criterion::Linf => r,
                        Criterion::L2 if r > basis.threshold => w * col_sq[j] / r,
                        Criterion::L2 => f64::NEG_INFINITY,
                    }
                })
                .collect()
        };
        let Some((index, score)) = argmax_excluding(&scores, &taken) else {
            basis.breakdown = true;
            break;
        };
        if !(basis.residual[index] > basis.threshold) {
            basis.breakdown = true;
            break;
        }

        match &mut l2 {
            None => match &cached {
                Some(k) => {
                    let column = k[index * m..(index + 1) * m].to_vec();
                    basis.extend_with_column(index, column, candidates)?
                }
                None => basis.extend(index, kernel, candidates)?,
            },
            Some(L2State::Residual(r)) => {
                // R is symmetric, so row `index` is the residual column at x.
                let pivot = basis.residual[index];
                let scale = pivot.sqrt().recip();
                let v: Vec<f64> = r[index * m..(index + 1) * m]
                    .iter()
                    .map(|x| x * scale)
                    .collect();
                r.par_chunks_mut(m).zip(&v).for_each(|(row, vi)| {
                    row.iter_mut().zip(&v).for_each(|(x, vj)| *x -= vi * vj);
                });
                basis.push_column(index, v, candidates);
            }
            Some(L2State::Recursive(norms)) => {
                // R v = K v − Σ_i v_i (v_i · v), evaluated before v is appended.
                basis.extend(index, kernel, candidates)?;
                let (new, old) = basis.values.split_last().expect("just extended");
                let mut rv = lazy_apply(kernel, new, candidates);
                for row in old {
                    let dot: f64 = row.iter().zip(new).map(|(a, b)| a * b).sum();
                    rv.iter_mut().zip(row).for_each(|(r, vi)| *r -= dot * vi);
                }
                let norm_sq: f64 = new.iter().map(|v| v * v).sum();
                for ((s, v), r) in norms.iter_mut().zip(new).zip(&rv) {
                    *s += v * (v * norm_sq - 2.0 * r);
                }
            }
        }
        taken[index] = true;
        basis.trace.push(SelectionStep {
            step: step + 1,
            index,
            coords: candidates.point(index).to_vec(),
            score,
            residual_max: basis.residual_max(),
        });
    }
    Ok(basis)
}

/// Discrete L2 norm of the Power Function, with its most negative raw value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerNorm {
    pub norm: f64,
    pub min_residual: f64,
}

impl PowerNorm {
    /// Negative squared power values signal loss of positivity to round-off.
    pub fn has_negative(&self) -> bool {
        self.min_residual < 0.0
    }
}

/// `√(w Σ_j max(r_j, 0))`.
pub fn power_l2_norm(state: &NewtonBasis, quad: &QuadratureSet) -> Result<PowerNorm> {
    if state.candidate_count() != quad.len() {
        return Err(Error::LengthMismatch {
            expected: state.candidate_count(),
            found: quad.len(),
        });
    }
    let sum: f64 = state.residual.iter().map(|r| r.max(0.0)).sum();
    Ok(PowerNorm {
        norm: (quad.weight() * sum).sqrt(),
        min_residual: state.residual_min(),
    })
}
