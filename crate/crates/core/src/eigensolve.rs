//! Discrete eigenpairs `(λ_{j,n}, φ_{j,n})` of the integral operator restricted
//! to a kernel-translate space.

use std::str::FromStr;

use nalgebra::DMatrix;

use crate::discrete_l2::GramianPair;
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::linalg::{cholesky_lower, sorted_symmetric_eigen, symmetrize};
use crate::newton::NewtonBasis;

/// Eigenvalues below `SOLVER_FLOOR · λ_{1,n}` are reported but flagged unstable.
pub const SOLVER_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    Newton,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Self::Direct),
            "newton" => Ok(Self::Newton),
            other => Err(Error::InvalidParameter(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisTag {
    Newton,
    Translates,
}

/// Column `j` of `coefficients` expresses `√λ_{j,n} φ_{j,n}` in the basis named by `basis`.
#[derive(Debug, Clone)]
pub struct EigenApproximation {
    pub eigenvalues: Vec<f64>,
    pub coefficients: DMatrix<f64>,
    pub basis: BasisTag,
    unstable: Vec<bool>,
}

impl EigenApproximation {
    fn new(eigenvalues: Vec<f64>, mut coefficients: DMatrix<f64>, basis: BasisTag) -> Self {
        fix_signs(&mut coefficients);
        let top = eigenvalues.first().copied().unwrap_or(0.0);
        let unstable = eigenvalues
            .iter()
            .map(|&l| !(l > 0.0) || l < SOLVER_FLOOR * top)
            .collect();
        Self {
            eigenvalues,
            coefficients,
            basis,
            unstable,
        }
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Whether `λ_{j,n}` (1-based) is nonpositive or below the solver floor.
    pub fn is_unstable(&self, j: usize) -> bool {
        self.unstable[j - 1]
    }

    pub fn any_unstable(&self) -> bool {
        self.unstable.iter().any(|&u| u)
    }

    pub fn eigenvalue_sum(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }
}

/// Largest-magnitude entry of every column made positive.
fn fix_signs(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let pivot = col.iter().copied().fold(
            0.0f64,
            |best, v| if v.abs() > best.abs() { v } else { best },
        );
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
}

/// Simultaneously diagonalizes the pencil: returns `C_V` and the diagonal of `Σ`
/// (descending) with `C_Vᵀ A C_V = Σ` and `C_Vᵀ B C_V = I`.
///
/// `B = L Lᵀ`, `C = L⁻¹ A L⁻ᵀ = U Γ Uᵀ`, `C_V = L⁻ᵀ U`.
pub fn simultaneous_diagonalize(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let l = cholesky_lower(b).map_err(|minor| Error::IllConditionedGramian { minor })?;
    let n = l.nrows();
    let bad = || Error::IllConditionedGramian { minor: n };
    let left = l.solve_lower_triangular(a).ok_or_else(bad)?;
    let mut c = l
        .solve_lower_triangular(&left.transpose())
        .ok_or_else(bad)?;
    symmetrize(&mut c);
    let (gamma, u) = sorted_symmetric_eigen(c);
    let cv = l.transpose().solve_upper_triangular(&u).ok_or_else(bad)?;
    Ok((cv, gamma))
}

/// Eigenpairs from the translate pencil, whitening by the kernel matrix so the
/// output basis is `H`-orthonormal and `Σ` holds `λ_{j,N}` directly.
pub fn eigs_direct(pair: &GramianPair) -> Result<EigenApproximation> {
    let (cv, sigma) = simultaneous_diagonalize(&pair.b, &pair.a)?;
    Ok(EigenApproximation::new(sigma, cv, BasisTag::Translates))
}

/// Eigenpairs from the L2 Gramian `G` of the Newton basis: `G = Q Λ Qᵀ`.
pub fn eigs_newton(gramian: &DMatrix<f64>) -> EigenApproximation {
    let mut g = gramian.clone();
    symmetrize(&mut g);
    let (values, vectors) = sorted_symmetric_eigen(g);
    EigenApproximation::new(values, vectors, BasisTag::Newton)
}

/// `√λ_{j,n} φ_{j,n}(x)` for 1-based `j`.
pub fn eval_eigenfunction<K: Kernel + ?Sized>(
    approx: &EigenApproximation,
    newton: &NewtonBasis,
    j: usize,
    x: &[f64],
    kernel: &K,
) -> f64 {
    let basis_values = match approx.basis {
        BasisTag::Newton => newton.eval_at(kernel, x),
        BasisTag::Translates => newton.centers().iter().map(|c| kernel.eval(x, c)).collect(),
    };
    approx
        .coefficients
        .column(j - 1)
        .iter()
        .zip(&basis_values)
        .map(|(q, v)| q * v)
        .sum()
}
