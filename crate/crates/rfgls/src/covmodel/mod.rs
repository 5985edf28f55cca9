//! Covariance models: the isotropic Matern family with nugget, dense
//! covariance matrices, autoregressive precision factors, and diagonal
//! dominance checks on working precision matrices.

mod bessel;

pub use bessel::{bessel_k, ln_bessel_k, ln_gamma};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cholfactor::PrecisionFactor;
use crate::error::{Error, Result};

/// Distances below this are treated as zero; C(d) -> sigma2 in that limit.
pub const ZERO_DISTANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovKind {
    Exponential,
    Matern,
    Ar,
}

/// A parametrized covariance model. `sigma2`/`phi`/`nu`/`tau2` drive the
/// Matern and exponential kinds; `ar_coeffs`/`innovation_var` drive the
/// autoregressive kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    pub kind: CovKind,
    pub sigma2: f64,
    pub phi: f64,
    pub nu: f64,
    pub tau2: f64,
    pub ar_coeffs: Vec<f64>,
    pub innovation_var: f64,
}

impl CovarianceSpec {
    pub fn exponential(sigma2: f64, phi: f64, tau2: f64) -> Self {
        CovarianceSpec {
            kind: CovKind::Exponential,
            sigma2,
            phi,
            nu: 0.5,
            tau2,
            ar_coeffs: Vec::new(),
            innovation_var: 1.0,
        }
    }

    pub fn matern(sigma2: f64, phi: f64, nu: f64, tau2: f64) -> Self {
        CovarianceSpec {
            kind: CovKind::Matern,
            sigma2,
            phi,
            nu,
            tau2,
            ar_coeffs: Vec::new(),
            innovation_var: 1.0,
        }
    }

    pub fn ar(coeffs: Vec<f64>, innovation_var: f64) -> Self {
        CovarianceSpec {
            kind: CovKind::Ar,
            sigma2: 0.0,
            phi: 1.0,
            nu: 0.5,
            tau2: 0.0,
            ar_coeffs: coeffs,
            innovation_var,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            CovKind::Exponential | CovKind::Matern => {
                if !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
                    return Err(Error::InvalidParameter(format!("sigma2 = {}", self.sigma2)));
                }
                if !(self.tau2 >= 0.0 && self.tau2.is_finite()) {
                    return Err(Error::InvalidParameter(format!("tau2 = {}", self.tau2)));
                }
                if !(self.phi > 0.0 && self.phi.is_finite()) {
                    return Err(Error::InvalidParameter(format!("phi = {}", self.phi)));
                }
                if !(self.nu > 0.0 && self.nu.is_finite()) {
                    return Err(Error::InvalidParameter(format!("nu = {}", self.nu)));
                }
            }
            CovKind::Ar => {
                if !(self.innovation_var > 0.0 && self.innovation_var.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "innovation_var = {}",
                        self.innovation_var
                    )));
                }
                if self.ar_coeffs.iter().any(|a| !a.is_finite()) {
                    return Err(Error::InvalidParameter("non-finite AR coefficient".into()));
                }
                if !ar_is_stable(&self.ar_coeffs) {
                    return Err(Error::InvalidParameter(
                        "AR coefficients are not stable (characteristic root on or inside the unit circle)"
                            .into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Marginal variance sigma2 + tau2 of the Matern/exponential kinds.
    pub fn marginal_var(&self) -> f64 {
        self.sigma2 + self.tau2
    }
}

/// Stability of 1 - a_1 z - ... - a_q z^q: all roots outside the unit circle,
/// i.e. the companion matrix of the recursion has spectral radius < 1.
pub fn ar_is_stable(coeffs: &[f64]) -> bool {
    let q = coeffs.len();
    if q == 0 {
        return true;
    }
    if coeffs.iter().any(|a| !a.is_finite()) {
        return false;
    }
    let mut companion = DMatrix::<f64>::zeros(q, q);
    for (j, &a) in coeffs.iter().enumerate() {
        companion[(0, j)] = a;
    }
    for i in 1..q {
        companion[(i, i - 1)] = 1.0;
    }
    companion
        .complex_eigenvalues()
        .iter()
        .all(|z| z.norm() < 1.0 - 1e-10)
}

/// GP-part covariance at distance `d` (no nugget):
/// sigma2 * 2^{1-nu} (sqrt(2) phi d)^nu K_nu(sqrt(2) phi d) / Gamma(nu).
/// The exponential kind is the nu = 1/2 closed form sigma2 * exp(-sqrt(2) phi d).
pub fn matern_cov(d: f64, spec: &CovarianceSpec) -> Result<f64> {
    if !d.is_finite() || d < 0.0 {
        return Err(Error::InvalidInput(format!("distance = {d}")));
    }
    spec.validate()?;
    match spec.kind {
        CovKind::Ar => Err(Error::InvalidParameter(
            "matern_cov requires a matern or exponential spec".into(),
        )),
        CovKind::Exponential => {
            if d < ZERO_DISTANCE {
                return Ok(spec.sigma2);
            }
            Ok(spec.sigma2 * (-std::f64::consts::SQRT_2 * spec.phi * d).exp())
        }
        CovKind::Matern => {
            if d < ZERO_DISTANCE || spec.sigma2 == 0.0 {
                return Ok(spec.sigma2);
            }
            let x = std::f64::consts::SQRT_2 * spec.phi * d;
            if bessel::is_half_integer(spec.nu) && spec.nu < 40.0 {
                Ok(spec.sigma2 * matern_half_integer_corr((spec.nu - 0.5).round() as u32, x))
            } else {
                let ln_corr = (1.0 - spec.nu) * std::f64::consts::LN_2 + spec.nu * x.ln()
                    - ln_gamma(spec.nu)
                    + ln_bessel_k(spec.nu, x);
                // correlations cannot exceed one; clamp rounding noise at tiny x
                Ok(spec.sigma2 * ln_corr.exp().min(1.0))
            }
        }
    }
}

/// Correlation 2^{1-nu} x^nu K_nu(x) / Gamma(nu) at half-integer nu = m + 1/2,
/// expanded to e^{-x} sum_k c_k x^{m-k} which is finite at x -> 0.
fn matern_half_integer_corr(m: u32, x: f64) -> f64 {
    // c_0 = 2^m m! / (2m)!, c_k = c_{k-1} (m+k)(m-k+1) / (2k)
    let mf = m as f64;
    let mut c = 1.0_f64;
    for k in 1..=m {
        c *= 2.0 * k as f64 / (mf + k as f64);
    }
    let mut sum = 0.0;
    for k in 0..=m {
        if k > 0 {
            let kf = k as f64;
            c *= (mf + kf) * (mf - kf + 1.0) / (2.0 * kf);
        }
        sum += c * x.powi((m - k) as i32);
    }
    ((-x).exp() * sum).min(1.0)
}

/// A dense symmetric covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseCov {
    n: usize,
    entries: Vec<f64>,
    /// Set when duplicate locations occur with tau2 = 0 (matrix is singular).
    pub singular_warning: bool,
}

impl DenseCov {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn as_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.entries)
    }
}

/// Dense covariance over a location set: entry (i, j) is the GP covariance at
/// their distance plus tau2 on the diagonal.
pub fn build_cov_matrix(locations: &[crate::dataset::Location], spec: &CovarianceSpec) -> Result<DenseCov> {
    spec.validate()?;
    if matches!(spec.kind, CovKind::Ar) {
        return Err(Error::InvalidParameter(
            "build_cov_matrix requires a matern or exponential spec".into(),
        ));
    }
    if locations.iter().any(|l| !l.is_finite()) {
        return Err(Error::InvalidInput("non-finite location".into()));
    }
    let n = locations.len();
    let mut entries = vec![0.0; n * n];
    let mut dup = false;
    for i in 0..n {
        entries[i * n + i] = spec.sigma2 + spec.tau2;
        for j in 0..i {
            let d = locations[i].dist(&locations[j]);
            if d < ZERO_DISTANCE {
                dup = true;
            }
            let c = matern_cov(d, spec)?;
            entries[i * n + j] = c;
            entries[j * n + i] = c;
        }
    }
    Ok(DenseCov { n, entries, singular_warning: dup && spec.tau2 == 0.0 })
}

/// Stationary autocovariances gamma(0..=max_lag) of an AR(q) process with the
/// given coefficients and innovation variance, from the Yule-Walker equations.
pub fn ar_autocovariances(coeffs: &[f64], innovation_var: f64, max_lag: usize) -> Result<Vec<f64>> {
    if !ar_is_stable(coeffs) {
        return Err(Error::InvalidParameter("unstable AR coefficients".into()));
    }
    let q = coeffs.len();
    if q == 0 {
        let mut g = vec![0.0; max_lag + 1];
        g[0] = innovation_var;
        return Ok(g);
    }
    // rows k = 0..=q: gamma_k - sum_j a_j gamma_{|k-j|} = innovation_var * 1(k=0)
    let mut a = DMatrix::<f64>::zeros(q + 1, q + 1);
    let mut b = nalgebra::DVector::<f64>::zeros(q + 1);
    b[0] = innovation_var;
    for k in 0..=q {
        a[(k, k)] += 1.0;
        for (jm1, &cj) in coeffs.iter().enumerate() {
            let lag = (k as i64 - (jm1 + 1) as i64).unsigned_abs() as usize;
            a[(k, lag)] -= cj;
        }
    }
    let sol = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::InvalidParameter("Yule-Walker system is singular".into()))?;
    let mut gamma: Vec<f64> = sol.iter().copied().collect();
    for k in q + 1..=max_lag {
        let mut g = 0.0;
        for (jm1, &cj) in coeffs.iter().enumerate() {
            g += cj * gamma[k - jm1 - 1];
        }
        gamma.push(g);
    }
    gamma.truncate(max_lag + 1);
    Ok(gamma)
}

/// Sparse lower-triangular factor B of the AR(q) precision matrix: rows past
/// q hold (-a_q, ..., -a_1, 1) / sigma_eta, and the top-left q x q block L
/// satisfies L^T L = M^{-1} with M the stationary covariance of the first q
/// values, so B^T B is the precision of the stationary AR covariance.
pub fn ar_cholesky_factor(n: usize, spec: &CovarianceSpec) -> Result<PrecisionFactor> {
    spec.validate()?;
    if !matches!(spec.kind, CovKind::Ar) {
        return Err(Error::InvalidParameter("ar_cholesky_factor requires an AR spec".into()));
    }
    let q = spec.ar_coeffs.len();
    if n <= q {
        return Err(Error::InvalidParameter(format!("n = {n} must exceed the AR order {q}")));
    }
    // unit innovation variance internally; innovation_var enters as 1/sigma_eta
    let inv_sigma = 1.0 / spec.innovation_var.sqrt();
    let mut rows: Vec<(Vec<u32>, Vec<f64>)> = Vec::with_capacity(n);
    if q > 0 {
        let gamma = ar_autocovariances(&spec.ar_coeffs, 1.0, q - 1)?;
        let mut m = DMatrix::<f64>::zeros(q, q);
        for i in 0..q {
            for j in 0..q {
                m[(i, j)] = gamma[(i as i64 - j as i64).unsigned_abs() as usize];
            }
        }
        let chol = m
            .cholesky()
            .ok_or_else(|| Error::InvalidParameter("AR initial covariance not positive definite".into()))?;
        let l_block = lower_triangular_inverse(&chol.l());
        for i in 0..q {
            let mut cols = Vec::new();
            let mut coeffs = Vec::new();
            for j in 0..=i {
                let v = l_block[(i, j)] * inv_sigma;
                if v != 0.0 {
                    cols.push(j as u32);
                    coeffs.push(v);
                }
            }
            rows.push((cols, coeffs));
        }
    }
    for i in q..n {
        let mut cols = Vec::new();
        let mut coeffs = Vec::new();
        // stationary row (-a_q, ..., -a_1, 1) / sigma_eta at columns i-q..=i
        for k in 0..q {
            let coef = -spec.ar_coeffs[q - 1 - k] * inv_sigma;
            if coef != 0.0 {
                cols.push((i - q + k) as u32);
                coeffs.push(coef);
            }
        }
        cols.push(i as u32);
        coeffs.push(inv_sigma);
        rows.push((cols, coeffs));
    }
    PrecisionFactor::from_rows(n, q, rows)
}

fn lower_triangular_inverse(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut inv = DMatrix::<f64>::zeros(n, n);
    for col in 0..n {
        // forward substitution on the col-th identity column
        for i in col..n {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for j in col..i {
                s -= l[(i, j)] * inv[(j, col)];
            }
            inv[(i, col)] = s / l[(i, i)];
        }
    }
    inv
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DominanceMode {
    Weak,
    Strong,
}

/// Outcome of the diagonal dominance checks on a working precision matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    /// Q_ii - sum_{j != i} |Q_ij| > 0 on every checked row.
    pub passes_weak: bool,
    /// min_i Q_ii > sqrt(2) max_i sum_{j != i} |Q_ij|.
    pub passes_strong: bool,
    /// Weak-dominance margin min_i (Q_ii - sum_{j != i} |Q_ij|).
    pub xi: f64,
}

impl DominanceReport {
    pub fn passes(&self, mode: DominanceMode) -> bool {
        match mode {
            DominanceMode::Weak => self.passes_weak,
            DominanceMode::Strong => self.passes_strong,
        }
    }

    fn from_rows(diags: &[f64], offsums: &[f64]) -> DominanceReport {
        let xi = diags
            .iter()
            .zip(offsums)
            .map(|(d, o)| d - o)
            .fold(f64::INFINITY, f64::min);
        let min_diag = diags.iter().copied().fold(f64::INFINITY, f64::min);
        let max_off = offsums.iter().copied().fold(0.0_f64, f64::max);
        DominanceReport {
            passes_weak: xi > 0.0,
            passes_strong: min_diag > std::f64::consts::SQRT_2 * max_off,
            xi,
        }
    }
}

/// Dominance checks on an explicit symmetric matrix (all rows inspected).
pub fn check_diag_dominance_dense(q: &DMatrix<f64>) -> DominanceReport {
    let n = q.nrows();
    assert_eq!(n, q.ncols(), "dominance check needs a square matrix");
    let mut diags = Vec::with_capacity(n);
    let mut offs = Vec::with_capacity(n);
    for i in 0..n {
        diags.push(q[(i, i)]);
        let mut o = 0.0;
        for j in 0..n {
            if j != i {
                o += q[(i, j)].abs();
            }
        }
        offs.push(o);
    }
    DominanceReport::from_rows(&diags, &offs)
}

/// Dominance checks on the precision implied by a sparse factor, inspecting
/// the first q+1 rows of B^T B (the distinct row patterns of a stationary
/// banded factor).
pub fn check_diag_dominance_factor(factor: &PrecisionFactor) -> DominanceReport {
    let n = factor.n();
    let rows_to_check = (factor.q() + 1).min(n);
    let mut diags = Vec::with_capacity(rows_to_check);
    let mut offs = Vec::with_capacity(rows_to_check);
    for i in 0..rows_to_check {
        let mut entries = std::collections::BTreeMap::<usize, f64>::new();
        for &(k, bki) in factor.col(i) {
            let (cols, coeffs) = factor.row(k as usize);
            for (jj, &j) in cols.iter().enumerate() {
                *entries.entry(j as usize).or_insert(0.0) += bki * coeffs[jj];
            }
        }
        let diag = entries.get(&i).copied().unwrap_or(0.0);
        let off: f64 = entries.iter().filter(|(j, _)| **j != i).map(|(_, v)| v.abs()).sum();
        diags.push(diag);
        offs.push(off);
    }
    DominanceReport::from_rows(&diags, &offs)
}

/// Convenience wrapper matching the report-valued check on a factor.
pub fn check_diag_dominance(factor: &PrecisionFactor, mode: DominanceMode) -> (DominanceReport, bool) {
    let report = check_diag_dominance_factor(factor);
    let pass = report.passes(mode);
    (report, pass)
}
