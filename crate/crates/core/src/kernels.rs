//! Kernel zoo: closed-form Matérn kernels on the plane and iterated Brownian
//! bridge kernels on `[0, 1]` defined through their sine expansion.
//!
//! Brownian bridge kernels use the L2-orthonormal eigenfunctions
//! `φ_j(x) = √2 sin(jπx)`, so that `K(x, y) = Σ_j λ_j φ_j(x) φ_j(y)` has Mercer
//! eigenvalues exactly `λ_j = (j²π² + ε²)^(−β)` and reduces to `min(x, y) − xy`
//! for `β = 1, ε = 0`.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use crate::error::{Error, Result};

/// Compact domains on which experiments are run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    UnitDisk,
    UnitInterval,
}

impl Domain {
    pub fn dim(self) -> usize {
        match self {
            Domain::UnitDisk => 2,
            Domain::UnitInterval => 1,
        }
    }

    /// Lebesgue measure of the domain.
    pub fn measure(self) -> f64 {
        match self {
            Domain::UnitDisk => PI,
            Domain::UnitInterval => 1.0,
        }
    }

    /// Closed-domain membership test.
    pub fn contains(self, p: &[f64]) -> bool {
        match self {
            // Rounding slack for points placed exactly on the circle.
            Domain::UnitDisk => {
                p.len() == 2 && p[0] * p[0] + p[1] * p[1] <= 1.0 + 4.0 * f64::EPSILON
            }
            Domain::UnitInterval => p.len() == 1 && (0.0..=1.0).contains(&p[0]),
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::UnitDisk => f.write_str("disk"),
            Domain::UnitInterval => f.write_str("interval"),
        }
    }
}

/// A symmetric positive definite kernel on a subset of `R^d`.
///
/// Implementations must be symmetric bit-for-bit: `eval(x, y) == eval(y, x)`.
pub trait Kernel: Send + Sync {
    fn id(&self) -> String;

    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64], y: &[f64]) -> f64;

    fn diag(&self, x: &[f64]) -> f64 {
        self.eval(x, x)
    }

    /// `∫_Ω K(x, x) dx` when analytically known.
    fn trace_over(&self, domain: Domain) -> Option<f64>;

    /// Exact Mercer eigenvalue `λ_j`, `j ≥ 1`, when the expansion is known.
    fn eigenvalue(&self, _j: usize) -> Option<f64> {
        None
    }

    /// Exact L2-normalized eigenfunction `φ_j(x)`.
    fn eigenfunction(&self, _j: usize, _x: &[f64]) -> Option<f64> {
        None
    }

    /// Exact `(K(x, ·), K(·, y))_{L2}` when the expansion is known.
    fn l2_product(&self, _x: &[f64], _y: &[f64]) -> Option<f64> {
        None
    }

    /// Number of expansion terms that resolve the kernel to double precision.
    fn expansion_len(&self) -> Option<usize> {
        None
    }

    /// Whether `eval` sums the truncated expansion term by term, so that
    /// matrices are cheaper to assemble as `Φ Λ Φᵀ`.
    fn is_truncated_expansion(&self) -> bool {
        false
    }
}

/// `∫_Ω K(x, x) dx`, rejecting kernels without a closed form or expansion there.
pub fn kernel_trace<K: Kernel + ?Sized>(kernel: &K, domain: Domain) -> Result<f64> {
    kernel
        .trace_over(domain)
        .ok_or_else(|| Error::MissingTrace(kernel.id()))
}

// ---------------------------------------------------------------------------
// Matérn

/// Half-integer Matérn kernel of order `β ∈ {0, 1, 2, 3}`, normalized to `k(0) = 1`.
///
/// Its native space on `R^d` is norm equivalent to `H^{(β + d)/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaternSpec {
    beta: u32,
    scale: f64,
}

impl MaternSpec {
    pub fn new(beta: u32) -> Result<Self> {
        Self::with_scale(beta, 1.0)
    }

    /// `scale` divides the distance: `k(‖x − y‖ / scale)`.
    pub fn with_scale(beta: u32, scale: f64) -> Result<Self> {
        if beta > 3 {
            return Err(Error::InvalidParameter(format!(
                "Matérn order must be in 0..=3, got {beta}"
            )));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Matérn scale must be positive, got {scale}"
            )));
        }
        Ok(Self { beta, scale })
    }

    pub fn beta(&self) -> u32 {
        self.beta
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Radial profile `k(r)`.
    pub fn profile(&self, r: f64) -> f64 {
        let r = r / self.scale;
        let poly = match self.beta {
            0 => 1.0,
            1 => 1.0 + r,
            2 => (3.0 + r * (3.0 + r)) / 3.0,
            _ => (15.0 + r * (15.0 + r * (6.0 + r))) / 15.0,
        };
        poly * (-r).exp()
    }
}

/// `k(‖x − y‖)` for the order-β Matérn profile.
pub fn matern_eval(spec: &MaternSpec, x: &[f64], y: &[f64]) -> f64 {
    let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    spec.profile(r2.sqrt())
}

impl Kernel for MaternSpec {
    fn id(&self) -> String {
        format!("matern{}", self.beta)
    }

    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        matern_eval(self, x, y)
    }

    fn diag(&self, _x: &[f64]) -> f64 {
        1.0
    }

    fn trace_over(&self, domain: Domain) -> Option<f64> {
        (domain.dim() == self.dim()).then(|| domain.measure())
    }
}

// ---------------------------------------------------------------------------
// Iterated Brownian bridge

const TRUNCATION_RATIO: f64 = 1e-16;
const MAX_TRUNCATION: usize = 10_000;

/// Iterated Brownian bridge kernel `K_{β,ε}` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianBridgeSpec {
    beta: u32,
    epsilon: f64,
    truncation: usize,
    // λ_j(ε, β) and λ_j(ε, 2β) for j = 1..=truncation.
    lambdas: Vec<f64>,
    lambdas_sq: Vec<f64>,
    closed: Option<(BernoulliForm, BernoulliForm)>,
}

impl BrownianBridgeSpec {
    /// Truncation index chosen as the smallest `J` with `λ_J ≤ 1e-16 λ_1`, capped at `10⁴`.
    pub fn new(beta: u32, epsilon: f64) -> Result<Self> {
        Self::check(beta, epsilon)?;
        let ratio = |j: usize| bb_lambda(beta, epsilon, j) / bb_lambda(beta, epsilon, 1);
        let mut truncation = 1;
        while truncation < MAX_TRUNCATION && ratio(truncation) > TRUNCATION_RATIO {
            truncation += 1;
        }
        Self::with_truncation(beta, epsilon, truncation)
    }

    pub fn with_truncation(beta: u32, epsilon: f64, truncation: usize) -> Result<Self> {
        Self::check(beta, epsilon)?;
        if truncation == 0 {
            return Err(Error::InvalidParameter(
                "truncation index must be positive".into(),
            ));
        }
        let lambdas = (1..=truncation)
            .map(|j| bb_lambda(beta, epsilon, j))
            .collect();
        let lambdas_sq = (1..=truncation)
            .map(|j| bb_lambda(2 * beta, epsilon, j))
            .collect();
        // The bridge series has a Bernoulli-polynomial closed form when ε = 0.
        let closed =
            (epsilon == 0.0).then(|| (BernoulliForm::new(beta), BernoulliForm::new(2 * beta)));
        Ok(Self {
            beta,
            epsilon,
            truncation,
            lambdas,
            lambdas_sq,
            closed,
        })
    }

    fn check(beta: u32, epsilon: f64) -> Result<()> {
        if beta == 0 || 4 * beta as usize > MAX_BERNOULLI {
            return Err(Error::InvalidParameter(format!(
                "Brownian bridge order must be in 1..=4, got {beta}"
            )));
        }
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Brownian bridge epsilon must be nonnegative, got {epsilon}"
            )));
        }
        Ok(())
    }

    pub fn beta(&self) -> u32 {
        self.beta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn truncation_index(&self) -> usize {
        self.truncation
    }

    /// Whether kernel evaluation uses the exact series sum rather than the truncation.
    pub fn has_closed_form(&self) -> bool {
        self.closed.is_some()
    }

    /// `Σ_{j ≥ 1} λ_j`, exact for `ε = 0`, truncated otherwise.
    pub fn eigenvalue_sum(&self) -> f64 {
        match self.epsilon == 0.0 {
            true => zeta_over_pi(self.beta),
            false => self.lambdas.iter().rev().sum(),
        }
    }

    /// `Σ_{j > n} λ_j`, the squared optimal L2 power at dimension `n`.
    pub fn eigenvalue_tail(&self, n: usize) -> f64 {
        if self.epsilon > 0.0 {
            return self.lambdas.iter().skip(n).rev().sum();
        }
        // Explicit block plus a midpoint-corrected integral for the remainder;
        // avoids the cancellation in `sum − head`.
        let last = n + MAX_TRUNCATION;
        let explicit: f64 = (n + 1..=last).rev().map(|j| bb_eigenvalue(self, j)).sum();
        let b = 2.0 * f64::from(self.beta);
        let t = last as f64 + 0.5;
        explicit + (PI * t).powf(-b) * t / (b - 1.0)
    }
}

/// `λ_j(ε, β) = (j²π² + ε²)^(−β)`.
pub fn bb_eigenvalue(spec: &BrownianBridgeSpec, j: usize) -> f64 {
    bb_lambda(spec.beta, spec.epsilon, j)
}

fn bb_lambda(beta: u32, epsilon: f64, j: usize) -> f64 {
    let jp = j as f64 * PI;
    (jp * jp + epsilon * epsilon).powi(-(beta as i32))
}

/// `Σ_{j ≤ J} λ_j(ε, β) φ_j(x) φ_j(y)`.
pub fn bb_eval(spec: &BrownianBridgeSpec, x: f64, y: f64) -> f64 {
    sine_series(&spec.lambdas, x, y)
}

/// `Σ_{j ≤ J} λ_j(ε, 2β) φ_j(x) φ_j(y) = (K(x, ·), K(·, y))_{L2}` for the truncated kernel.
pub fn bb_squared_kernel_eval(spec: &BrownianBridgeSpec, x: f64, y: f64) -> f64 {
    sine_series(&spec.lambdas_sq, x, y)
}

/// `Σ_j w_j · 2 sin(jπx) sin(jπy) = Σ_j w_j [cos(jπ|x−y|) − cos(jπ(x+y))]`.
fn sine_series(weights: &[f64], x: f64, y: f64) -> f64 {
    const RESYNC: usize = 32;
    let a = PI * (x - y).abs();
    let b = PI * (x + y);
    let (sa, ca) = a.sin_cos();
    let (sb, cb) = b.sin_cos();
    let (mut s1, mut c1) = (sa, ca);
    let (mut s2, mut c2) = (sb, cb);
    let mut sum = 0.0;
    for (k, w) in weights.iter().enumerate() {
        let j = k + 1;
        if j % RESYNC == 0 {
            (s1, c1) = (j as f64 * a).sin_cos();
            (s2, c2) = (j as f64 * b).sin_cos();
        }
        sum += w * (c1 - c2);
        (s1, c1) = (s1 * ca + c1 * sa, c1 * ca - s1 * sa);
        (s2, c2) = (s2 * cb + c2 * sb, c2 * cb - s2 * sb);
    }
    sum
}

impl Kernel for BrownianBridgeSpec {
    fn id(&self) -> String {
        format!("bb(beta={},eps={})", self.beta, self.epsilon)
    }

    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match &self.closed {
            Some((k, _)) => k.eval(x[0], y[0]),
            None => bb_eval(self, x[0], y[0]),
        }
    }

    fn trace_over(&self, domain: Domain) -> Option<f64> {
        (domain == Domain::UnitInterval).then(|| self.eigenvalue_sum())
    }

    fn eigenvalue(&self, j: usize) -> Option<f64> {
        if j == 0 {
            return None;
        }
        // Past the truncation the kernel in use has no spectrum when ε > 0.
        Some(match self.closed.is_some() || j <= self.truncation {
            true => bb_eigenvalue(self, j),
            false => 0.0,
        })
    }

    fn eigenfunction(&self, j: usize, x: &[f64]) -> Option<f64> {
        (j > 0).then(|| SQRT_2 * (j as f64 * PI * x[0]).sin())
    }

    fn l2_product(&self, x: &[f64], y: &[f64]) -> Option<f64> {
        Some(match &self.closed {
            Some((_, k2)) => k2.eval(x[0], y[0]),
            None => bb_squared_kernel_eval(self, x[0], y[0]),
        })
    }

    fn expansion_len(&self) -> Option<usize> {
        Some(self.truncation)
    }

    fn is_truncated_expansion(&self) -> bool {
        self.closed.is_none()
    }
}

// Bernoulli numbers B_0..=B_16.
const MAX_BERNOULLI: usize = 16;
const BERNOULLI: [f64; MAX_BERNOULLI + 1] = [
    1.0,
    -0.5,
    1.0 / 6.0,
    0.0,
    -1.0 / 30.0,
    0.0,
    1.0 / 42.0,
    0.0,
    -1.0 / 30.0,
    0.0,
    5.0 / 66.0,
    0.0,
    -691.0 / 2730.0,
    0.0,
    7.0 / 6.0,
    0.0,
    -3617.0 / 510.0,
];

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `Σ_{j ≥ 1} (jπ)^{−2β} = ζ(2β) / π^{2β} = |B_{2β}| 2^{2β−1} / (2β)!`.
fn zeta_over_pi(beta: u32) -> f64 {
    let n = 2 * beta as usize;
    BERNOULLI[n].abs() * 2f64.powi(n as i32 - 1) / factorial(n)
}

/// Exact sum `Σ_{j ≥ 1} (jπ)^{−2b} · 2 sin(jπx) sin(jπy)` through
/// `Σ_j cos(2πjt) / j^{2b} = (−1)^{b−1} (2π)^{2b} B_{2b}(t) / (2 (2b)!)`.
#[derive(Debug, Clone, PartialEq)]
struct BernoulliForm {
    // Coefficients of B_{2b} in ascending powers.
    coeffs: Vec<f64>,
    scale: f64,
}

impl BernoulliForm {
    fn new(b: u32) -> Self {
        let n = 2 * b as usize;
        let mut coeffs = vec![0.0; n + 1];
        for (k, bk) in BERNOULLI.iter().enumerate().take(n + 1) {
            coeffs[n - k] = binomial(n, k) * bk;
        }
        let sign = if b % 2 == 1 { 1.0 } else { -1.0 };
        let scale = sign * 2f64.powi(n as i32) / (2.0 * factorial(n));
        Self { coeffs, scale }
    }

    fn poly(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        self.scale * (self.poly(0.5 * (x - y).abs()) - self.poly(0.5 * (x + y)))
    }
}

// ---------------------------------------------------------------------------
// Zoo

/// Kernels addressable by string id: `matern0`..`matern3` and `bb`.
#[derive(Debug, Clone, PartialEq)]
pub enum ZooKernel {
    Matern(MaternSpec),
    BrownianBridge(BrownianBridgeSpec),
}

impl ZooKernel {
    /// Resolves a zoo id. `beta` and `eps` are only read for `bb`.
    pub fn from_id(id: &str, beta: u32, eps: f64) -> Result<Self> {
        match id {
            "bb" => Ok(Self::BrownianBridge(BrownianBridgeSpec::new(beta, eps)?)),
            _ => {
                let order = id
                    .strip_prefix("matern")
                    .and_then(|s| s.parse::<u32>().ok())
                    .filter(|b| *b <= 3)
                    .ok_or_else(|| Error::UnknownKernel(id.to_string()))?;
                Ok(Self::Matern(MaternSpec::new(order)?))
            }
        }
    }

    /// Natural domain of the kernel in the experiments.
    pub fn domain(&self) -> Domain {
        match self {
            Self::Matern(_) => Domain::UnitDisk,
            Self::BrownianBridge(_) => Domain::UnitInterval,
        }
    }

    fn inner(&self) -> &dyn Kernel {
        match self {
            Self::Matern(k) => k,
            Self::BrownianBridge(k) => k,
        }
    }
}

impl Kernel for ZooKernel {
    fn id(&self) -> String {
        self.inner().id()
    }
    fn dim(&self) -> usize {
        self.inner().dim()
    }
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        self.inner().eval(x, y)
    }
    fn diag(&self, x: &[f64]) -> f64 {
        self.inner().diag(x)
    }
    fn trace_over(&self, domain: Domain) -> Option<f64> {
        self.inner().trace_over(domain)
    }
    fn eigenvalue(&self, j: usize) -> Option<f64> {
        self.inner().eigenvalue(j)
    }
    fn eigenfunction(&self, j: usize, x: &[f64]) -> Option<f64> {
        self.inner().eigenfunction(j, x)
    }
    fn l2_product(&self, x: &[f64], y: &[f64]) -> Option<f64> {
        self.inner().l2_product(x, y)
    }
    fn expansion_len(&self) -> Option<usize> {
        self.inner().expansion_len()
    }
    fn is_truncated_expansion(&self) -> bool {
        self.inner().is_truncated_expansion()
    }
}
