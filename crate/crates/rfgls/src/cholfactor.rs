//! Row-sparse lower-triangular working-precision factors B (so that B^T B is
//! the working precision), nearest-neighbor GP construction, decorrelation,
//! and resampled precision operators.

use nalgebra::DMatrix;

use crate::covmodel::{matern_cov, CovKind, CovarianceSpec};
use crate::dataset::Location;
use crate::error::{Error, Result};

/// A sparse lower-triangular factor: row i holds coefficients on a sorted
/// index set N(i) ⊆ {0..=i} that always contains i itself with a positive
/// coefficient, and no row has more than q+1 entries.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionFactor {
    n: usize,
    q: usize,
    alpha: f64,
    row_cols: Vec<Vec<u32>>,
    row_coeffs: Vec<Vec<f64>>,
    /// column view: for each column i, the (row, coefficient) pairs touching it
    cols: Vec<Vec<(u32, f64)>>,
    /// set when a singular conditioning covariance needed a diagonal jitter
    pub jittered: bool,
}

impl PrecisionFactor {
    pub fn from_rows(n: usize, q: usize, rows: Vec<(Vec<u32>, Vec<f64>)>) -> Result<Self> {
        if rows.len() != n {
            return Err(Error::InvalidInput(format!("{} rows for n = {n}", rows.len())));
        }
        let mut row_cols = Vec::with_capacity(n);
        let mut row_coeffs = Vec::with_capacity(n);
        for (i, (cols, coeffs)) in rows.into_iter().enumerate() {
            if cols.len() != coeffs.len() || cols.is_empty() {
                return Err(Error::InvalidInput(format!("malformed row {i}")));
            }
            if cols.len() > q + 1 {
                return Err(Error::InvalidInput(format!(
                    "row {i} has {} entries, limit is q+1 = {}",
                    cols.len(),
                    q + 1
                )));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidInput(format!("row {i} columns not sorted")));
            }
            let last = *cols.last().unwrap() as usize;
            if last != i {
                return Err(Error::InvalidInput(format!(
                    "row {i} must end at its diagonal entry, found column {last}"
                )));
            }
            let diag = *coeffs.last().unwrap();
            if !(diag > 0.0) || coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidInput(format!("row {i} diagonal must be positive and finite")));
            }
            row_cols.push(cols);
            row_coeffs.push(coeffs);
        }
        let mut cols: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for (k, (rc, rv)) in row_cols.iter().zip(&row_coeffs).enumerate() {
            for (j, &c) in rc.iter().enumerate() {
                cols[c as usize].push((k as u32, rv[j]));
            }
        }
        // the stationary coefficient row is the first fully-conditioned one
        let alpha_row = q.min(n - 1);
        let alpha = row_coeffs[alpha_row].iter().map(|c| c * c).sum();
        Ok(PrecisionFactor { n, q, alpha, row_cols, row_coeffs, cols, jittered: false })
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n).map(|i| (vec![i as u32], vec![1.0])).collect();
        PrecisionFactor::from_rows(n, 0, rows).expect("identity factor is always valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Squared Euclidean norm of the stationary coefficient row.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        (&self.row_cols[i], &self.row_coeffs[i])
    }

    /// Rows touching column `i`, as (row index, coefficient) pairs.
    pub fn col(&self, i: usize) -> &[(u32, f64)] {
        &self.cols[i]
    }

    /// B^T B as a dense matrix; test and small-n tooling only.
    pub fn dense_precision(&self) -> DMatrix<f64> {
        let n = self.n;
        let mut q = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            let (cols, coeffs) = self.row(k);
            for (a, &ca) in cols.iter().enumerate() {
                for (b, &cb) in cols.iter().enumerate() {
                    q[(ca as usize, cb as usize)] += coeffs[a] * coeffs[b];
                }
            }
        }
        q
    }

    /// B as a dense matrix; test and small-n tooling only.
    pub fn dense_factor(&self) -> DMatrix<f64> {
        let n = self.n;
        let mut b = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            let (cols, coeffs) = self.row(k);
            for (j, &c) in cols.iter().enumerate() {
                b[(k, c as usize)] = coeffs[j];
            }
        }
        b
    }

    /// True when every fully-conditioned row repeats the stationary pattern
    /// (same column offsets and coefficients as the row at index q), the shape
    /// required of a regular banded factor.
    pub fn is_stationary_pattern(&self, tol: f64) -> bool {
        if self.n <= self.q + 1 {
            return true;
        }
        let (ref_cols, ref_coeffs) = self.row(self.q);
        for i in self.q..self.n {
            let (cols, coeffs) = self.row(i);
            if cols.len() != ref_cols.len() {
                return false;
            }
            let shift = i as i64 - self.q as i64;
            for (j, &c) in cols.iter().enumerate() {
                if c as i64 != ref_cols[j] as i64 + shift {
                    return false;
                }
                if (coeffs[j] - ref_coeffs[j]).abs() > tol {
                    return false;
                }
            }
        }
        true
    }
}

/// Ordering used before a nearest-neighbor factor is built: 1-d points sort
/// ascending, 2-d points sort by coordinate sum with first-coordinate
/// tie-break. Returns `perm` such that position k of the ordered arrangement
/// holds original index `perm[k]`.
pub fn order_locations(locations: &[Location]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..locations.len()).collect();
    idx.sort_by(|&a, &b| {
        let (ax, ay) = locations[a].coords();
        let (bx, by) = locations[b].coords();
        let ka = ax + ay;
        let kb = bx + by;
        ka.partial_cmp(&kb)
            .unwrap()
            .then(ax.partial_cmp(&bx).unwrap())
            .then(a.cmp(&b))
    });
    idx
}

/// Nearest-neighbor GP factor over already-ordered locations: row i
/// conditions on the q nearest earlier locations. Row coefficients are
/// (-c^T C^{-1}, 1) / sqrt(v) with C the conditioning covariance (nugget on
/// its diagonal), c the cross-covariance to point i, and
/// v = (sigma2 + tau2) - c^T C^{-1} c, so B Sigma~ B^T = I for the implied
/// covariance Sigma~.
pub fn nngp_factor(locations: &[Location], spec: &CovarianceSpec, q: usize) -> Result<PrecisionFactor> {
    spec.validate()?;
    if matches!(spec.kind, CovKind::Ar) {
        return Err(Error::InvalidParameter("nngp_factor requires a matern or exponential spec".into()));
    }
    let n = locations.len();
    if n == 0 {
        return Err(Error::InvalidInput("no locations".into()));
    }
    if q == 0 || q >= n {
        return Err(Error::InvalidParameter(format!("neighbor count q = {q} must satisfy 1 <= q < n = {n}")));
    }
    let marg = spec.marginal_var();
    if !(marg > 0.0) {
        return Err(Error::InvalidParameter("marginal variance sigma2 + tau2 must be positive".into()));
    }
    if locations.iter().any(|l| !l.is_finite()) {
        return Err(Error::InvalidInput("non-finite location".into()));
    }

    let jitter = 1e-10 * marg;
    let mut jittered = false;
    let mut rows: Vec<(Vec<u32>, Vec<f64>)> = Vec::with_capacity(n);
    rows.push((vec![0], vec![1.0 / marg.sqrt()]));

    for i in 1..n {
        let s = q.min(i);
        // q nearest earlier-ordered points, ties broken by lower index
        let mut cand: Vec<(f64, usize)> =
            (0..i).map(|j| (locations[i].dist(&locations[j]), j)).collect();
        cand.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let mut nbrs: Vec<usize> = cand[..s].iter().map(|&(_, j)| j).collect();
        nbrs.sort_unstable();

        let mut c_mat = DMatrix::<f64>::zeros(s, s);
        for a in 0..s {
            c_mat[(a, a)] = marg;
            for b in 0..a {
                let v = matern_cov(locations[nbrs[a]].dist(&locations[nbrs[b]]), spec)?;
                c_mat[(a, b)] = v;
                c_mat[(b, a)] = v;
            }
        }
        let cross = nalgebra::DVector::from_iterator(
            s,
            nbrs.iter().map(|&j| matern_cov(locations[i].dist(&locations[j]), spec).unwrap()),
        );
        let chol = match c_mat.clone().cholesky() {
            Some(ch) => ch,
            None => {
                jittered = true;
                for a in 0..s {
                    c_mat[(a, a)] += jitter;
                }
                c_mat.clone().cholesky().ok_or_else(|| {
                    Error::InvalidParameter("conditioning covariance singular even after jitter".into())
                })?
            }
        };
        let weights = chol.solve(&cross);
        let mut v = marg - cross.dot(&weights);
        if v <= jitter {
            jittered = true;
            v = jitter;
        }
        let scale = 1.0 / v.sqrt();
        let mut cols: Vec<u32> = nbrs.iter().map(|&j| j as u32).collect();
        let mut coeffs: Vec<f64> = weights.iter().map(|&w| -w * scale).collect();
        cols.push(i as u32);
        coeffs.push(scale);
        rows.push((cols, coeffs));
    }

    let mut factor = PrecisionFactor::from_rows(n, q, rows)?;
    factor.jittered = jittered;
    Ok(factor)
}

/// Sigma^{-1/2} v, computed row-sparsely in O(nq).
pub fn apply_factor(factor: &PrecisionFactor, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != factor.n() {
        return Err(Error::InvalidInput(format!(
            "vector length {} does not match factor size {}",
            v.len(),
            factor.n()
        )));
    }
    let mut out = Vec::with_capacity(factor.n());
    for k in 0..factor.n() {
        let (cols, coeffs) = factor.row(k);
        let mut acc = 0.0;
        for (j, &c) in cols.iter().enumerate() {
            acc += coeffs[j] * v[c as usize];
        }
        out.push(acc);
    }
    Ok(out)
}

/// The resampled working precision Q_t = B^T diag(counts) B. Counts of one
/// recover Q = B^T B.
#[derive(Debug, Clone)]
pub struct PrecisionOperator<'a> {
    factor: &'a PrecisionFactor,
    counts: Vec<u32>,
}

impl<'a> PrecisionOperator<'a> {
    pub fn factor(&self) -> &'a PrecisionFactor {
        self.factor
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.factor.n()
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.counts[k] as f64
    }

    /// Q_t as a dense matrix; test and small-n tooling only.
    pub fn dense(&self) -> DMatrix<f64> {
        let b = self.factor.dense_factor();
        let w = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.n(),
            self.counts.iter().map(|&c| c as f64),
        ));
        b.transpose() * w * b
    }
}

/// Wrap a factor and per-contrast resample counts into the operator
/// Q_t = Sigma^{-T/2} diag(counts) Sigma^{-1/2}.
pub fn resampled_precision<'a>(factor: &'a PrecisionFactor, counts: Vec<u32>) -> PrecisionOperator<'a> {
    assert_eq!(counts.len(), factor.n(), "counts length must equal factor size");
    PrecisionOperator { factor, counts }
}

/// Unit-count operator, Q = Sigma^{-1}.
pub fn unit_precision(factor: &PrecisionFactor) -> PrecisionOperator<'_> {
    resampled_precision(factor, vec![1; factor.n()])
}

/// a^T Q_t b = sum_k counts_k (Ba)_k (Bb)_k; symmetric in (a, b).
pub fn quad_form(op: &PrecisionOperator<'_>, a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != op.n() || b.len() != op.n() {
        return Err(Error::InvalidInput(format!(
            "quad_form length mismatch: {} and {} for n = {}",
            a.len(),
            b.len(),
            op.n()
        )));
    }
    let fa = apply_factor(op.factor, a)?;
    let fb = apply_factor(op.factor, b)?;
    let mut acc = 0.0;
    for k in 0..op.n() {
        acc += op.weight(k) * fa[k] * fb[k];
    }
    Ok(acc)
}

/// Plain-text factor serialization, one row per line "i: j1 c1 j2 c2 ..."
/// with 1-based indices and 17-significant-digit coefficients; round-trips
/// bit-exactly.
pub fn factor_to_string(factor: &PrecisionFactor) -> String {
    let mut out = format!(
        "PRECISION-FACTOR v1 n={} q={} jittered={}\n",
        factor.n(),
        factor.q(),
        factor.jittered as u8
    );
    for i in 0..factor.n() {
        let (cols, coeffs) = factor.row(i);
        out.push_str(&format!("{}:", i + 1));
        for (j, &c) in cols.iter().enumerate() {
            out.push_str(&format!(" {} {:.16e}", c + 1, coeffs[j]));
        }
        out.push('\n');
    }
    out
}

pub fn factor_from_str(text: &str) -> Result<PrecisionFactor> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::InvalidInput("empty factor text".into()))?;
    let mut n = None;
    let mut q = None;
    let mut jittered = false;
    for tok in header.split_whitespace() {
        if let Some(v) = tok.strip_prefix("n=") {
            n = v.parse::<usize>().ok();
        } else if let Some(v) = tok.strip_prefix("q=") {
            q = v.parse::<usize>().ok();
        } else if let Some(v) = tok.strip_prefix("jittered=") {
            jittered = v == "1";
        }
    }
    let (n, q) = match (n, q) {
        (Some(n), Some(q)) if header.starts_with("PRECISION-FACTOR v1") => (n, q),
        _ => return Err(Error::InvalidInput("malformed factor header".into())),
    };
    let mut rows = Vec::with_capacity(n);
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (label, rest) = line
            .split_once(':')
            .ok_or_else(|| Error::InvalidInput(format!("factor line {} missing ':'", lineno + 2)))?;
        let i: usize = label
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("factor line {} bad row index", lineno + 2)))?;
        if i != rows.len() + 1 {
            return Err(Error::InvalidInput(format!("factor rows out of order at line {}", lineno + 2)));
        }
        let toks: Vec<&str> = rest.split_whitespace().collect();
        if toks.len() % 2 != 0 || toks.is_empty() {
            return Err(Error::InvalidInput(format!("factor line {} malformed", lineno + 2)));
        }
        let mut cols = Vec::with_capacity(toks.len() / 2);
        let mut coeffs = Vec::with_capacity(toks.len() / 2);
        for pair in toks.chunks(2) {
            let j: u32 = pair[0]
                .parse()
                .map_err(|_| Error::InvalidInput(format!("factor line {} bad column", lineno + 2)))?;
            let c: f64 = pair[1]
                .parse()
                .map_err(|_| Error::InvalidInput(format!("factor line {} bad coefficient", lineno + 2)))?;
            cols.push(j - 1);
            coeffs.push(c);
        }
        rows.push((cols, coeffs));
    }
    let mut factor = PrecisionFactor::from_rows(n, q, rows)?;
    factor.jittered = jittered;
    Ok(factor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covmodel::ar_cholesky_factor;
    use rand::Rng;

    #[test]
    fn ordering_examples() {
        let locs = [Location::One(0.3), Location::One(0.1), Location::One(0.2)];
        assert_eq!(order_locations(&locs), vec![1, 2, 0]);
        let locs = [Location::Two(0.0, 1.0), Location::Two(1.0, 0.0), Location::Two(0.0, 0.0)];
        assert_eq!(order_locations(&locs), vec![2, 0, 1]);
        let locs: Vec<Location> = (0..5).map(|i| Location::One(i as f64)).collect();
        assert_eq!(order_locations(&locs), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn nngp_lattice_ar1_rows() {
        // exponential on the integer lattice: rows i >= 1 are (-r, 1)/sqrt(1-r^2)
        let phi = 0.7;
        let spec = CovarianceSpec::exponential(1.0, phi, 0.0);
        let locs: Vec<Location> = (0..12).map(|i| Location::One(i as f64)).collect();
        let f = nngp_factor(&locs, &spec, 1).unwrap();
        let r = (-std::f64::consts::SQRT_2 * phi).exp();
        let scale = 1.0 / (1.0 - r * r).sqrt();
        for i in 1..12 {
            let (cols, coeffs) = f.row(i);
            assert_eq!(cols, &[(i - 1) as u32, i as u32]);
            assert!((coeffs[0] + r * scale).abs() < 1e-12);
            assert!((coeffs[1] - scale).abs() < 1e-12);
        }
        let (cols, coeffs) = f.row(0);
        assert_eq!(cols, &[0]);
        assert!((coeffs[0] - 1.0).abs() < 1e-12);
        assert!(f.is_stationary_pattern(1e-9));
    }

    #[test]
    fn nngp_row_one_uses_marginal_variance() {
        let spec = CovarianceSpec::exponential(2.0, 1.0, 0.5);
        let locs: Vec<Location> = (0..4).map(|i| Location::One(i as f64)).collect();
        let f = nngp_factor(&locs, &spec, 2).unwrap();
        let (_, coeffs) = f.row(0);
        assert!((coeffs[0] - 1.0 / 2.5_f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn nngp_full_conditioning_matches_dense_inverse() {
        let mut rng = crate::rng::stream(3, 0);
        for _ in 0..5 {
            let n = rng.gen_range(10..40);
            let locs: Vec<Location> = (0..n)
                .map(|_| Location::Two(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)))
                .collect();
            let spec = CovarianceSpec::exponential(
                rng.gen_range(0.5..3.0),
                rng.gen_range(1.0..6.0),
                rng.gen_range(0.05..0.5),
            );
            let f = nngp_factor(&locs, &spec, n - 1).unwrap();
            let q = f.dense_precision();
            let qref = crate::covmodel::build_cov_matrix(&locs, &spec)
                .unwrap()
                .as_dmatrix()
                .try_inverse()
                .unwrap();
            let rel = (&q - &qref).norm() / qref.norm();
            assert!(rel < 1e-6, "rel = {rel}");
        }
    }

    #[test]
    fn nngp_duplicate_locations_jitter_flag() {
        let locs = vec![Location::One(0.0), Location::One(0.0), Location::One(0.0), Location::One(1.0)];
        let spec = CovarianceSpec::exponential(1.0, 1.0, 0.0);
        let f = nngp_factor(&locs, &spec, 2).unwrap();
        assert!(f.jittered);
    }

    #[test]
    fn apply_factor_examples() {
        let id = PrecisionFactor::identity(3);
        let v = vec![1.0, -2.0, 0.5];
        assert_eq!(apply_factor(&id, &v).unwrap(), v);

        let spec = CovarianceSpec::ar(vec![0.5], 1.0);
        let b = ar_cholesky_factor(3, &spec).unwrap();
        let out = apply_factor(&b, &[1.0, 1.0, 1.0]).unwrap();
        assert!((out[0] - 0.75_f64.sqrt()).abs() < 1e-14);
        assert!((out[1] - 0.5).abs() < 1e-14);
        assert!((out[2] - 0.5).abs() < 1e-14);

        assert_eq!(apply_factor(&b, &[0.0, 0.0, 0.0]).unwrap(), vec![0.0; 3]);
        assert!(apply_factor(&b, &[1.0]).is_err());
    }

    #[test]
    fn apply_factor_is_linear() {
        let spec = CovarianceSpec::ar(vec![0.4, 0.2], 1.3);
        let b = ar_cholesky_factor(20, &spec).unwrap();
        let mut rng = crate::rng::stream(5, 0);
        let u: Vec<f64> = (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (a, c) = (0.7, -1.9);
        let combo: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + c * y).collect();
        let lhs = apply_factor(&b, &combo).unwrap();
        let fu = apply_factor(&b, &u).unwrap();
        let fv = apply_factor(&b, &v).unwrap();
        for k in 0..20 {
            assert!((lhs[k] - (a * fu[k] + c * fv[k])).abs() < 1e-12);
        }
    }

    #[test]
    fn quad_form_examples() {
        let id = PrecisionFactor::identity(2);
        let op = unit_precision(&id);
        assert!((quad_form(&op, &[1.0, 2.0], &[3.0, 4.0]).unwrap() - 11.0).abs() < 1e-14);

        let counts = vec![2, 0];
        let op = resampled_precision(&id, counts);
        let y = [3.0, 5.0];
        assert!((quad_form(&op, &y, &y).unwrap() - 2.0 * 9.0).abs() < 1e-14);

        let spec = CovarianceSpec::ar(vec![0.5], 1.0);
        let b = ar_cholesky_factor(6, &spec).unwrap();
        let op = unit_precision(&b);
        let mut rng = crate::rng::stream(9, 0);
        let a: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let dense = op.dense();
        let mut expect = 0.0;
        for i in 0..6 {
            for j in 0..6 {
                expect += a[i] * dense[(i, j)] * c[j];
            }
        }
        let got = quad_form(&op, &a, &c).unwrap();
        assert!((got - expect).abs() < 1e-12);
        // symmetry under identical summation order
        assert_eq!(got.to_bits(), quad_form(&op, &c, &a).unwrap().to_bits());
    }

    #[test]
    fn zero_counts_give_zero_form() {
        let id = PrecisionFactor::identity(4);
        let op = resampled_precision(&id, vec![0; 4]);
        assert_eq!(quad_form(&op, &[1.0; 4], &[1.0; 4]).unwrap(), 0.0);
    }

    #[test]
    fn var_roundtrip_identity() {
        // B (B^T B)^{-1} B^T = I within 1e-8, dense check
        let spec = CovarianceSpec::exponential(1.5, 2.0, 0.2);
        let mut rng = crate::rng::stream(13, 0);
        let n = 60;
        let locs: Vec<Location> = (0..n)
            .map(|_| Location::Two(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)))
            .collect();
        let ordered: Vec<Location> = order_locations(&locs).into_iter().map(|i| locs[i]).collect();
        let f = nngp_factor(&ordered, &spec, 5).unwrap();
        let b = f.dense_factor();
        let sigma_tilde = f.dense_precision().try_inverse().unwrap();
        let prod = &b * sigma_tilde * b.transpose();
        let err = (&prod - DMatrix::<f64>::identity(n, n)).norm();
        assert!(err < 1e-8, "roundtrip err {err}");
    }

    #[test]
    fn alpha_matches_precision_diagonal() {
        let spec = CovarianceSpec::ar(vec![0.5, 0.1], 1.0);
        let b = ar_cholesky_factor(30, &spec).unwrap();
        let q = b.dense_precision();
        // on a stationary design alpha equals the (q+1)-th diagonal of B^T B
        assert!((b.alpha() - q[(b.q(), b.q())]).abs() < 1e-12);

        let spec = CovarianceSpec::exponential(1.0, 0.9, 0.0);
        let locs: Vec<Location> = (0..25).map(|i| Location::One(i as f64)).collect();
        let f = nngp_factor(&locs, &spec, 3).unwrap();
        let q = f.dense_precision();
        assert!((f.alpha() - q[(3, 3)]).abs() < 1e-10);
    }

    #[test]
    fn factor_serialization_roundtrip_is_bit_stable() {
        let spec = CovarianceSpec::exponential(1.7, 1.1, 0.03);
        let mut rng = crate::rng::stream(17, 0);
        let locs: Vec<Location> = (0..30)
            .map(|_| Location::Two(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)))
            .collect();
        let ordered: Vec<Location> = order_locations(&locs).into_iter().map(|i| locs[i]).collect();
        let f = nngp_factor(&ordered, &spec, 4).unwrap();
        let text = factor_to_string(&f);
        let back = factor_from_str(&text).unwrap();
        assert_eq!(f.n(), back.n());
        assert_eq!(f.q(), back.q());
        assert_eq!(f.jittered, back.jittered);
        for i in 0..f.n() {
            let (c1, v1) = f.row(i);
            let (c2, v2) = back.row(i);
            assert_eq!(c1, c2);
            for (a, b) in v1.iter().zip(v2) {
                assert_eq!(a.to_bits(), b.to_bits(), "row {i}");
            }
        }
        assert_eq!(text, factor_to_string(&back));
    }
}
