//! Kernel matrices and L2 Gramians of translate and Newton bases.
//!
//! L2 inner products are either discrete, via the uniform quadrature rule of
//! the candidate set, or exact, via the expansion of the squared kernel.

use std::io::Write;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::linalg::{cholesky_lower, symmetrize};
use crate::newton::NewtonBasis;
use crate::pointsets::QuadratureSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GramianMode {
    Discrete,
    Exact,
}

impl FromStr for GramianMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "discrete" => Ok(Self::Discrete),
            "exact" => Ok(Self::Exact),
            other => Err(Error::InvalidParameter(format!(
                "unknown Gramian mode `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Provenance {
    Discrete { weight: f64 },
    ExactExpansion,
}

/// Kernel matrix `A` and L2 Gramian `B` of the translates `K(·, x_i)`.
#[derive(Debug, Clone)]
pub struct GramianPair {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub provenance: Provenance,
}

/// `w Σ_j f(x_j) g(x_j)`.
pub fn discrete_inner(f_values: &[f64], g_values: &[f64], quad: &QuadratureSet) -> Result<f64> {
    for v in [f_values, g_values] {
        if v.len() != quad.len() {
            return Err(Error::LengthMismatch {
                expected: quad.len(),
                found: v.len(),
            });
        }
    }
    Ok(quad.weight()
        * f_values
            .iter()
            .zip(g_values)
            .map(|(f, g)| f * g)
            .sum::<f64>())
}

/// `A_ij = K(x_i, x_j)`, symmetrized.
pub fn kernel_matrix<K, P>(kernel: &K, points: &[P]) -> DMatrix<f64>
where
    K: Kernel + ?Sized,
    P: AsRef<[f64]> + Sync,
{
    let n = points.len();
    let mut a = match expansion_product(kernel, points, points, 1) {
        Some(a) => a,
        None => {
            let rows: Vec<Vec<f64>> = (0..n)
                .into_par_iter()
                .map(|i| {
                    (0..n)
                        .map(|j| kernel.eval(points[i].as_ref(), points[j].as_ref()))
                        .collect()
                })
                .collect();
            DMatrix::from_fn(n, n, |i, j| rows[i][j])
        }
    };
    symmetrize(&mut a);
    a
}

/// `K(x_i, y_j)` over `xs × ys`.
pub fn cross_kernel_matrix<K, P, Q>(kernel: &K, xs: &[P], ys: &[Q]) -> DMatrix<f64>
where
    K: Kernel + ?Sized,
    P: AsRef<[f64]> + Sync,
    Q: AsRef<[f64]> + Sync,
{
    if let Some(k) = expansion_product(kernel, xs, ys, 1) {
        return k;
    }
    let rows: Vec<Vec<f64>> = xs
        .par_iter()
        .map(|x| {
            ys.iter()
                .map(|y| kernel.eval(x.as_ref(), y.as_ref()))
                .collect()
        })
        .collect();
    DMatrix::from_fn(xs.len(), ys.len(), |i, j| rows[i][j])
}

/// `Σ_j λ_j^power φ_j(x) φ_j(y)` over `xs × ys` as one matrix product, for
/// kernels that would otherwise sum their truncated expansion per entry.
fn expansion_product<K, P, Q>(kernel: &K, xs: &[P], ys: &[Q], power: i32) -> Option<DMatrix<f64>>
where
    K: Kernel + ?Sized,
    P: AsRef<[f64]> + Sync,
    Q: AsRef<[f64]> + Sync,
{
    if !kernel.is_truncated_expansion() {
        return None;
    }
    let terms = kernel.expansion_len()?;
    let lambdas = (1..=terms)
        .map(|j| kernel.eigenvalue(j).map(|l| l.powi(power)))
        .collect::<Option<Vec<f64>>>()?;
    let phi = |pts: &[&[f64]], scale: bool| -> Option<DMatrix<f64>> {
        let rows: Option<Vec<Vec<f64>>> = pts
            .par_iter()
            .map(|x| {
                lambdas
                    .iter()
                    .enumerate()
                    .map(|(j, l)| {
                        let f = kernel.eigenfunction(j + 1, x)?;
                        Some(if scale { l * f } else { f })
                    })
                    .collect()
            })
            .collect();
        let rows = rows?;
        Some(DMatrix::from_fn(pts.len(), terms, |i, j| rows[i][j]))
    };
    let xs: Vec<&[f64]> = xs.iter().map(AsRef::as_ref).collect();
    let ys: Vec<&[f64]> = ys.iter().map(AsRef::as_ref).collect();
    Some(phi(&xs, true)? * phi(&ys, false)?.transpose())
}

/// `V_iq = K(x_i, q)` over the quadrature nodes.
fn translate_values<K, P>(kernel: &K, points: &[P], quad: &QuadratureSet) -> DMatrix<f64>
where
    K: Kernel + ?Sized,
    P: AsRef<[f64]> + Sync,
{
    let nodes: Vec<&[f64]> = quad.points().collect();
    cross_kernel_matrix(kernel, points, &nodes)
}

/// `w V Vᵀ`, symmetrized.
fn weighted_gram(values: &DMatrix<f64>, weight: f64) -> DMatrix<f64> {
    let mut g = values * values.transpose() * weight;
    symmetrize(&mut g);
    g
}

/// Exact `(K(·, x_i), K(·, x_j))_{L2}` from the squared-kernel expansion.
pub fn exact_translate_gramian<K, P>(kernel: &K, points: &[P]) -> Result<DMatrix<f64>>
where
    K: Kernel + ?Sized,
    P: AsRef<[f64]> + Sync,
{
    let n = points.len();
    let mut b = match expansion_product(kernel, points, points, 2) {
        Some(b) => b,
        None => {
            let rows: Option<Vec<Vec<f64>>> = (0..n)
                .into_par_iter()
                .map(|i| {
                    (0..n)
                        .map(|j| kernel.l2_product(points[i].as_ref(), points[j].as_ref()))
                        .collect()
                })
                .collect();
            let rows = rows.ok_or_else(|| Error::MissingExpansion(kernel.id()))?;
            DMatrix::from_fn(n, n, |i, j| rows[i][j])
        }
    };
    symmetrize(&mut b);
    Ok(b)
}

/// Assembles the pencil `(A, B)` for the translates centred at `selected`.
pub fn assemble_pencil<K, P>(
    kernel: &K,
    selected: &[P],
    quad: &QuadratureSet,
    mode: GramianMode,
) -> Result<GramianPair>
where
    K: Kernel + ?Sized,
    P: AsRef<[f64]> + Sync,
{
    let a = kernel_matrix(kernel, selected);
    cholesky_lower(&a).map_err(|minor| Error::SingularConfiguration { minor })?;
    let (b, provenance) = match mode {
        GramianMode::Discrete => {
            let v = translate_values(kernel, selected, quad);
            let w = quad.weight();
            (weighted_gram(&v, w), Provenance::Discrete { weight: w })
        }
        GramianMode::Exact => (
            exact_translate_gramian(kernel, selected)?,
            Provenance::ExactExpansion,
        ),
    };
    Ok(GramianPair { a, b, provenance })
}

/// `G_ik = (v_i, v_k)_{L2}` for the Newton basis.
///
/// Discrete mode uses the stored values on the candidate set; exact mode
/// pushes the truncated Mercer expansion through the triangular factor,
/// `G = (T⁻¹E)(T⁻¹E)ᵀ = T⁻¹ B T⁻ᵀ`, which keeps `G` positive semidefinite.
pub fn newton_l2_gramian<K: Kernel + ?Sized>(
    newton: &NewtonBasis,
    quad: &QuadratureSet,
    mode: GramianMode,
    kernel: &K,
) -> Result<DMatrix<f64>> {
    match mode {
        GramianMode::Discrete => {
            if newton.candidate_count() != quad.len() {
                return Err(Error::LengthMismatch {
                    expected: newton.candidate_count(),
                    found: quad.len(),
                });
            }
            Ok(weighted_gram(&newton.values_matrix(), quad.weight()))
        }
        GramianMode::Exact => {
            let n = newton.len();
            if n == 0 {
                return Ok(DMatrix::zeros(0, 0));
            }
            let e = expansion_coefficients(kernel, newton.centers())?;
            let m = newton
                .triangular_matrix()
                .solve_lower_triangular(&e)
                .ok_or(Error::SingularConfiguration { minor: n })?;
            let mut g = &m * m.transpose();
            symmetrize(&mut g);
            Ok(g)
        }
    }
}

// E_kj = λ_j φ_j(x_k): row k holds the L2 expansion of K(·, x_k), so
// E Eᵀ is the translate Gramian and T⁻¹E that of the Newton basis.
fn expansion_coefficients<K: Kernel + ?Sized>(
    kernel: &K,
    centers: &[Vec<f64>],
) -> Result<DMatrix<f64>> {
    let missing = || Error::MissingExpansion(kernel.id());
    let terms = kernel.expansion_len().ok_or_else(missing)?;
    let lambdas = (1..=terms)
        .map(|j| kernel.eigenvalue(j))
        .collect::<Option<Vec<f64>>>()
        .ok_or_else(missing)?;
    let rows: Vec<Vec<f64>> = centers
        .par_iter()
        .map(|x| {
            lambdas
                .iter()
                .enumerate()
                .map(|(j, l)| l * kernel.eigenfunction(j + 1, x).unwrap_or(f64::NAN))
                .collect()
        })
        .collect();
    if rows.iter().flatten().any(|v| v.is_nan()) {
        return Err(missing());
    }
    Ok(DMatrix::from_fn(centers.len(), terms, |k, j| rows[k][j]))
}

/// Writes a matrix as CSV, one row per line, full symmetric storage.
pub fn write_matrix_csv<W: Write>(m: &DMatrix<f64>, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    for i in 0..m.nrows() {
        w.write_record((0..m.ncols()).map(|j| m[(i, j)].to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{
        bb_eigenvalue, bb_eval, bb_squared_kernel_eval, BrownianBridgeSpec, MaternSpec,
    };
    use crate::pointsets::{disk_grid, random_interval_points};
    use std::f64::consts::PI;

    #[test]
    fn constant_functions_integrate_to_measure() {
        let disk = disk_grid(200);
        let ones = vec![1.0; disk.len()];
        assert!((discrete_inner(&ones, &ones, &disk).unwrap() - PI).abs() < 1e-12);
        let line = random_interval_points(37, 1);
        let ones = vec![1.0; 37];
        assert!((discrete_inner(&ones, &ones, &line).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn discrete_inner_rejects_mismatch() {
        let line = random_interval_points(4, 1);
        assert!(matches!(
            discrete_inner(&[1.0; 3], &[1.0; 4], &line),
            Err(Error::LengthMismatch {
                expected: 4,
                found: 3
            })
        ));
    }

    #[test]
    fn sines_are_nearly_orthogonal_under_random_quadrature() {
        let q = random_interval_points(10_000, 3);
        let f: Vec<f64> = q.coords().iter().map(|x| (PI * x).sin()).collect();
        let g: Vec<f64> = q.coords().iter().map(|x| (2.0 * PI * x).sin()).collect();
        assert!(discrete_inner(&f, &g, &q).unwrap().abs() < 0.02);
    }

    #[test]
    fn single_point_pencil() {
        let k = BrownianBridgeSpec::new(1, 0.0).unwrap();
        let q = random_interval_points(50, 2);
        let pair = assemble_pencil(&k, &[[0.5]], &q, GramianMode::Exact).unwrap();
        assert!((pair.a[(0, 0)] - 0.25).abs() < 1e-15);
        // Series oracle: Σ_j λ_j(0, 2) · 2 sin²(jπ/2).
        let k2 = BrownianBridgeSpec::new(2, 0.0).unwrap();
        let series: f64 = (1..=200_000)
            .rev()
            .map(|j| bb_eigenvalue(&k2, j) * 2.0 * (j as f64 * PI / 2.0).sin().powi(2))
            .sum();
        assert!(
            (pair.b[(0, 0)] - series).abs() < 1e-15,
            "{} {}",
            pair.b[(0, 0)],
            series
        );

        let pair = assemble_pencil(&k, &[[0.3]], &q, GramianMode::Discrete).unwrap();
        let unrolled = q.weight() * q.points().map(|p| k.eval(p, &[0.3]).powi(2)).sum::<f64>();
        assert!((pair.b[(0, 0)] - unrolled).abs() < 1e-15);
    }

    #[test]
    fn discrete_b_is_weighted_outer_product() {
        let k = MaternSpec::new(1).unwrap();
        let q = disk_grid(30);
        let sel = [[0.0, 0.0], [0.5, 0.0], [0.0, -0.5]];
        let pair = assemble_pencil(&k, &sel, &q, GramianMode::Discrete).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let direct: f64 = q
                    .points()
                    .map(|p| k.eval(&sel[i], p) * k.eval(p, &sel[j]))
                    .sum::<f64>()
                    * q.weight();
                assert!((pair.b[(i, j)] - direct).abs() < 1e-13);
            }
        }
        assert_eq!(pair.b, pair.b.transpose());
    }

    #[test]
    fn exact_b_matches_trapezoid_oracle() {
        // Trapezoid rule on 10⁶ panels of the closed form min(x, t) − xt, which is
        // piecewise linear in t, so the rule has only kink and round-off error.
        let k = BrownianBridgeSpec::new(1, 0.0).unwrap();
        let pts = [[0.1], [0.45], [0.8]];
        let b = exact_translate_gramian(&k, &pts).unwrap();
        let bridge = |x: f64, t: f64| x.min(t) - x * t;
        let panels = 1_000_000;
        let h = 1.0 / panels as f64;
        for i in 0..3 {
            for j in 0..3 {
                let (x, y) = (pts[i][0], pts[j][0]);
                let mut s = 0.0;
                for p in 0..=panels {
                    let t = p as f64 * h;
                    let w = if p == 0 || p == panels { 0.5 } else { 1.0 };
                    s += w * bridge(x, t) * bridge(t, y);
                }
                assert!((b[(i, j)] - s * h).abs() < 1e-8, "{i}{j}");
            }
        }
    }

    #[test]
    fn exact_and_discrete_b_agree_on_random_quadrature() {
        let k = BrownianBridgeSpec::new(1, 0.0).unwrap();
        let q = random_interval_points(500, 0);
        let sel = [[0.2], [0.5], [0.9]];
        let d = assemble_pencil(&k, &sel, &q, GramianMode::Discrete).unwrap();
        let e = assemble_pencil(&k, &sel, &q, GramianMode::Exact).unwrap();
        assert!((d.b - e.b).abs().max() <= 5e-3);
    }

    #[test]
    fn expansion_matrices_match_entrywise_series() {
        let k = BrownianBridgeSpec::new(1, 1.0).unwrap();
        let pts = [[0.05], [0.3], [0.71], [0.98]];
        let a = kernel_matrix(&k, &pts);
        let b = exact_translate_gramian(&k, &pts).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let kij = bb_eval(&k, pts[i][0], pts[j][0]);
                let k2 = bb_squared_kernel_eval(&k, pts[i][0], pts[j][0]);
                assert!((a[(i, j)] - kij).abs() < 1e-14 * kij.abs().max(1e-3));
                assert!((b[(i, j)] - k2).abs() < 1e-14 * k2.abs().max(1e-5));
            }
        }
    }

    #[test]
    fn repeated_points_are_singular() {
        let k = MaternSpec::new(0).unwrap();
        let q = disk_grid(10);
        let err = assemble_pencil(&k, &[[0.1, 0.1], [0.1, 0.1]], &q, GramianMode::Discrete);
        assert!(matches!(
            err,
            Err(Error::SingularConfiguration { minor: 2 })
        ));
    }

    #[test]
    fn exact_mode_needs_expansion() {
        let k = MaternSpec::new(2).unwrap();
        let q = disk_grid(10);
        assert!(matches!(
            assemble_pencil(&k, &[[0.0, 0.0]], &q, GramianMode::Exact),
            Err(Error::MissingExpansion(_))
        ));
    }

    #[test]
    fn matrix_csv_layout() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0]);
        let mut buf = Vec::new();
        write_matrix_csv(&m, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "1,0.5\n0.5,2\n");
    }
}
