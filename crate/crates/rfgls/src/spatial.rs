//! Kriging prediction, latent-surface recovery, ML covariance-parameter
//! estimation from residuals, and the two-stage pipeline (plain forest first,
//! estimate the working covariance from its residuals, then refit with the
//! GLS forest).

use nalgebra::{DMatrix, DVector};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::cholfactor::nngp_factor;
use crate::covmodel::{build_cov_matrix, matern_cov, CovarianceSpec};
use crate::dataset::{Location, SpatialDataset};
use crate::error::{Error, Result};
use crate::forest::{fit_forest, predict_forest_row, ForestModel, ForestParams};
use crate::glstree::predict_tree;

/// Dense covariance work is capped at this size.
pub const DENSE_CAP: usize = 5000;

/// Optimizer-safe large value returned when the covariance is not positive
/// definite at the queried parameters.
pub const NLL_SENTINEL: f64 = 1e30;

/// Box bounds applied to every variance/decay parameter during estimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamBounds {
    pub lo: f64,
    pub hi: f64,
}

impl Default for ParamBounds {
    fn default() -> Self {
        ParamBounds { lo: 1e-6, hi: 1e4 }
    }
}

/// Outcome of covariance-parameter estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub spec_hat: CovarianceSpec,
    pub nll: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl Serialize for FitReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("FitReport", 6)?;
        s.serialize_field("sigma2", &self.spec_hat.sigma2)?;
        s.serialize_field("phi", &self.spec_hat.phi)?;
        s.serialize_field("tau2", &self.spec_hat.tau2)?;
        s.serialize_field("nll", &self.nll)?;
        s.serialize_field("iterations", &self.iterations)?;
        s.serialize_field("converged", &self.converged)?;
        s.end()
    }
}

fn dense_sigma(locations: &[Location], spec: &CovarianceSpec) -> Result<DMatrix<f64>> {
    if locations.len() > DENSE_CAP {
        return Err(Error::InvalidInput(format!(
            "dense covariance operations capped at n = {DENSE_CAP}, got {}",
            locations.len()
        )));
    }
    Ok(build_cov_matrix(locations, spec)?.as_dmatrix())
}

/// Gaussian negative log-likelihood of residuals under the covariance spec:
/// (1/2)[log det Sigma + r' Sigma^{-1} r + n log 2 pi], dense Cholesky. A
/// non-positive-definite Sigma yields the sentinel value instead of an error.
pub fn neg_log_likelihood(spec: &CovarianceSpec, r: &[f64], locations: &[Location]) -> Result<f64> {
    if r.len() != locations.len() {
        return Err(Error::InvalidInput(format!(
            "{} residuals for {} locations",
            r.len(),
            locations.len()
        )));
    }
    let n = r.len();
    let sigma = dense_sigma(locations, spec)?;
    let chol = match sigma.cholesky() {
        Some(c) => c,
        None => return Ok(NLL_SENTINEL),
    };
    let logdet = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let rv = DVector::from_column_slice(r);
    let solved = chol.solve(&rv);
    let quad = rv.dot(&solved);
    Ok(0.5 * (logdet + quad + n as f64 * (2.0 * std::f64::consts::PI).ln()))
}

/// Reflect x into [lo, hi] (triangle wave), the box rule used in log space.
fn reflect_into(x: f64, lo: f64, hi: f64) -> f64 {
    if x >= lo && x <= hi {
        return x;
    }
    let w = hi - lo;
    if w <= 0.0 {
        return lo;
    }
    let t = (x - lo).rem_euclid(2.0 * w);
    lo + if t <= w { t } else { 2.0 * w - t }
}

const NM_TOL: f64 = 1e-8;
const NM_MAX_ITER: usize = 500;

/// Nelder-Mead over (log sigma2, log phi, log tau2) of the exponential
/// working family; bounds enforced by reflection in log space; converges when
/// the simplex value spread falls below 1e-8 or after 500 iterations.
pub fn estimate_params(
    r: &[f64],
    locations: &[Location],
    init: &CovarianceSpec,
    bounds: &ParamBounds,
) -> Result<FitReport> {
    if r.len() < 10 {
        return Err(Error::Estimation(format!("need at least 10 residuals, got {}", r.len())));
    }
    if r.len() != locations.len() {
        return Err(Error::InvalidInput("residual/location length mismatch".into()));
    }
    let mean = r.iter().sum::<f64>() / r.len() as f64;
    let var = r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / r.len() as f64;
    if var <= 0.0 {
        return Err(Error::Estimation("residuals are constant".into()));
    }
    if !(bounds.lo > 0.0 && bounds.hi > bounds.lo) {
        return Err(Error::InvalidParameter("bounds must satisfy 0 < lo < hi".into()));
    }
    let (lo, hi) = (bounds.lo.ln(), bounds.hi.ln());
    let clamp = |v: f64| reflect_into(v, lo, hi);
    let theta0 = [
        clamp(init.sigma2.max(bounds.lo).min(bounds.hi).ln()),
        clamp(init.phi.max(bounds.lo).min(bounds.hi).ln()),
        clamp(init.tau2.max(bounds.lo).min(bounds.hi).ln()),
    ];
    let spec_of = |theta: &[f64; 3]| {
        CovarianceSpec::exponential(clamp(theta[0]).exp(), clamp(theta[1]).exp(), clamp(theta[2]).exp())
    };
    let objective =
        |theta: &[f64; 3]| neg_log_likelihood(&spec_of(theta), r, locations).unwrap_or(NLL_SENTINEL);

    // standard Nelder-Mead with reflection/expansion/contraction/shrink
    let mut simplex: Vec<[f64; 3]> = vec![theta0];
    for i in 0..3 {
        let mut v = theta0;
        v[i] += 0.6;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(&objective).collect();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < NM_MAX_ITER {
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let sorted: Vec<[f64; 3]> = order.iter().map(|&i| simplex[i]).collect();
        let sorted_vals: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        simplex = sorted;
        values = sorted_vals;
        if values[3] - values[0] < NM_TOL {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = [0.0; 3];
        for v in simplex.iter().take(3) {
            for i in 0..3 {
                centroid[i] += v[i] / 3.0;
            }
        }
        let worst = simplex[3];
        let mut refl = [0.0; 3];
        for i in 0..3 {
            refl[i] = centroid[i] + (centroid[i] - worst[i]);
        }
        let f_refl = objective(&refl);
        if f_refl < values[0] {
            let mut exp_pt = [0.0; 3];
            for i in 0..3 {
                exp_pt[i] = centroid[i] + 2.0 * (centroid[i] - worst[i]);
            }
            let f_exp = objective(&exp_pt);
            if f_exp < f_refl {
                simplex[3] = exp_pt;
                values[3] = f_exp;
            } else {
                simplex[3] = refl;
                values[3] = f_refl;
            }
        } else if f_refl < values[2] {
            simplex[3] = refl;
            values[3] = f_refl;
        } else {
            let mut contr = [0.0; 3];
            let (base, f_base) = if f_refl < values[3] { (refl, f_refl) } else { (worst, values[3]) };
            for i in 0..3 {
                contr[i] = centroid[i] + 0.5 * (base[i] - centroid[i]);
            }
            let f_contr = objective(&contr);
            if f_contr < f_base {
                simplex[3] = contr;
                values[3] = f_contr;
            } else {
                for j in 1..4 {
                    for i in 0..3 {
                        simplex[j][i] = simplex[0][i] + 0.5 * (simplex[j][i] - simplex[0][i]);
                    }
                    values[j] = objective(&simplex[j]);
                }
            }
        }
    }
    let best = simplex
        .iter()
        .zip(&values)
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(s, v)| (*s, *v))
        .unwrap();
    Ok(FitReport { spec_hat: spec_of(&best.0), nll: best.1, iterations, converged })
}

/// Training-side state needed for kriging: the working spec, residuals
/// y - m_hat at the training points, and the cached solve Sigma^{-1} (y - m_hat).
#[derive(Debug, Clone, PartialEq)]
pub struct KrigingContext {
    pub train_locations: Vec<Location>,
    pub spec: CovarianceSpec,
    pub residuals: Vec<f64>,
    solved: Vec<f64>,
}

impl KrigingContext {
    pub fn new(train_locations: Vec<Location>, spec: CovarianceSpec, residuals: Vec<f64>) -> Result<Self> {
        if residuals.len() != train_locations.len() {
            return Err(Error::InvalidInput("residual/location length mismatch".into()));
        }
        let sigma = dense_sigma(&train_locations, &spec)?;
        let chol = sigma.cholesky().ok_or_else(|| {
            Error::InvalidParameter("kriging covariance is not positive definite".into())
        })?;
        let solved = chol.solve(&DVector::from_column_slice(&residuals));
        Ok(KrigingContext {
            train_locations,
            spec,
            residuals,
            solved: solved.iter().copied().collect(),
        })
    }

    /// Cached Sigma^{-1} (y - m_hat).
    pub fn solved(&self) -> &[f64] {
        &self.solved
    }
}

/// Kriging prediction at new (covariates, location) pairs:
/// y_hat = m_hat(x_new) + v' Sigma^{-1} (y - m_hat), where v is the GP-part
/// cross-covariance (no nugget) to the training locations.
pub fn krige_predict(
    forest: &ForestModel,
    ctx: &KrigingContext,
    new_points: &[(Vec<f64>, Location)],
) -> Result<Vec<f64>> {
    let gp_spec = CovarianceSpec { tau2: 0.0, ..ctx.spec.clone() };
    let mut out = Vec::with_capacity(new_points.len());
    for (x, loc) in new_points {
        if x.iter().any(|v| !v.is_finite()) || !loc.is_finite() {
            return Err(Error::InvalidInput("non-finite prediction input".into()));
        }
        let mut correction = 0.0;
        for (i, tl) in ctx.train_locations.iter().enumerate() {
            correction += matern_cov(loc.dist(tl), &gp_spec)? * ctx.solved[i];
        }
        out.push(predict_forest_row(forest, x) + correction);
    }
    Ok(out)
}

/// Conditional mean of the latent GP surface at the training locations under
/// the working model: w_hat = C Sigma^{-1} (y - m_hat) with C the GP-part
/// covariance (no nugget) among training locations.
pub fn recover_latent(ctx: &KrigingContext) -> Result<Vec<f64>> {
    let gp_spec = CovarianceSpec { tau2: 0.0, ..ctx.spec.clone() };
    let n = ctx.train_locations.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for (j, tl) in ctx.train_locations.iter().enumerate() {
            let c = if i == j {
                ctx.spec.sigma2
            } else {
                matern_cov(ctx.train_locations[i].dist(tl), &gp_spec)?
            };
            acc += c * ctx.solved[j];
        }
        out[i] = acc;
    }
    Ok(out)
}

/// Configuration of the two-stage pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// parameters of the final GLS forest
    pub forest: ForestParams,
    /// parameters of the first-pass plain forest used for residuals
    pub stage1: ForestParams,
    pub bounds: ParamBounds,
    /// nearest-neighbor count of the working factor
    pub neighbors: usize,
    /// skip estimation and use this spec directly ("oracle" mode)
    pub oracle_spec: Option<CovarianceSpec>,
}

impl PipelineConfig {
    pub fn new(forest: ForestParams, stage1: ForestParams) -> Self {
        PipelineConfig {
            forest,
            stage1,
            bounds: ParamBounds::default(),
            neighbors: 20,
            oracle_spec: None,
        }
    }
}

/// Predictions of a forest at the covariate rows of a dataset.
pub fn predict_rows(forest: &ForestModel, data: &SpatialDataset) -> Vec<f64> {
    (0..data.len())
        .map(|i| {
            let row = data.row(i);
            forest.trees.iter().map(|t| predict_tree(t, row)).sum::<f64>() / forest.trees.len() as f64
        })
        .collect()
}

/// Default estimation start: half the residual variance to the GP part, half
/// to the nugget, mid-grid decay.
pub fn default_estimation_init(residuals: &[f64], bounds: &ParamBounds) -> CovarianceSpec {
    let n = residuals.len().max(1) as f64;
    let mean = residuals.iter().sum::<f64>() / n;
    let var = (residuals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).max(bounds.lo * 2.0);
    let mid_phi = 3.0 / (0.5 * std::f64::consts::SQRT_2);
    CovarianceSpec::exponential(
        (var / 2.0).clamp(bounds.lo, bounds.hi),
        mid_phi.clamp(bounds.lo, bounds.hi),
        (var / 2.0).clamp(bounds.lo, bounds.hi),
    )
}

/// Two-stage fit: (1) plain forest with the identity factor, (2) covariance
/// parameters estimated from its residuals (or taken from `oracle_spec`),
/// (3) nearest-neighbor factor built from the estimate and the GLS forest
/// fitted against it. The kriging context holds the GLS-forest residuals.
/// Data are reordered by `order_locations` before the factor is built.
pub fn fit_pipeline(
    data: &SpatialDataset,
    cfg: &PipelineConfig,
) -> Result<(ForestModel, FitReport, KrigingContext)> {
    let perm = crate::cholfactor::order_locations(&data.locations);
    let ordered = data.permuted(&perm);
    let n = ordered.len();

    let identity = crate::cholfactor::PrecisionFactor::identity(n);
    let rf = fit_forest(&ordered, identity, &cfg.stage1)?;
    let m1 = predict_rows(&rf, &ordered);
    let r1: Vec<f64> = ordered.y.iter().zip(&m1).map(|(y, m)| y - m).collect();

    let report = match &cfg.oracle_spec {
        Some(spec) => FitReport {
            spec_hat: spec.clone(),
            nll: neg_log_likelihood(spec, &r1, &ordered.locations)?,
            iterations: 0,
            converged: true,
        },
        None => {
            let init = default_estimation_init(&r1, &cfg.bounds);
            estimate_params(&r1, &ordered.locations, &init, &cfg.bounds)?
        }
    };

    let q = cfg.neighbors.clamp(1, n - 1);
    let factor = nngp_factor(&ordered.locations, &report.spec_hat, q)?;
    let gls_forest = fit_forest(&ordered, factor, &cfg.forest)?;
    let m2 = predict_rows(&gls_forest, &ordered);
    let r2: Vec<f64> = ordered.y.iter().zip(&m2).map(|(y, m)| y - m).collect();
    let ctx = KrigingContext::new(ordered.locations.clone(), report.spec_hat.clone(), r2)?;
    Ok((gls_forest, report, ctx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::Resample;
    use rand::Rng;
    use rayon::prelude::*;

    #[test]
    fn nll_univariate_standard_normal() {
        let spec = CovarianceSpec::exponential(0.5, 1.0, 0.5);
        let v = neg_log_likelihood(&spec, &[0.0], &[Location::One(0.0)]).unwrap();
        let expect = 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((v - expect).abs() < 1e-12);
        assert!((expect - 0.9189385).abs() < 1e-7);
    }

    #[test]
    fn nll_diagonal_limit_sums_univariate_terms() {
        // locations so far apart the correlation underflows to zero
        let locs: Vec<Location> = (0..6).map(|i| Location::One(i as f64 * 1e6)).collect();
        let spec = CovarianceSpec::exponential(1.3, 1.0, 0.4);
        let r: Vec<f64> = (0..6).map(|i| 0.3 * i as f64 - 0.9).collect();
        let v = neg_log_likelihood(&spec, &r, &locs).unwrap();
        let s2 = spec.marginal_var();
        let expect: f64 = r
            .iter()
            .map(|ri| 0.5 * (s2.ln() + ri * ri / s2 + (2.0 * std::f64::consts::PI).ln()))
            .sum();
        assert!((v - expect).abs() < 1e-9);
    }

    #[test]
    fn nll_quadratic_term_scales_with_residuals() {
        let mut rng = crate::rng::stream(61, 0);
        let locs: Vec<Location> = (0..15).map(|i| Location::One(i as f64)).collect();
        let spec = CovarianceSpec::exponential(1.0, 0.8, 0.3);
        let r: Vec<f64> = (0..15).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r2: Vec<f64> = r.iter().map(|v| 2.0 * v).collect();
        let zero = vec![0.0; 15];
        let base = neg_log_likelihood(&spec, &zero, &locs).unwrap();
        let quad = 2.0 * (neg_log_likelihood(&spec, &r, &locs).unwrap() - base);
        let quad2 = 2.0 * (neg_log_likelihood(&spec, &r2, &locs).unwrap() - base);
        assert!((quad2 - 4.0 * quad).abs() < 1e-8 * quad.abs().max(1.0));
    }

    #[test]
    fn nll_surface_is_smooth_in_log_parameters() {
        // Richardson consistency of central differences at two step sizes
        let mut rng = crate::rng::stream(67, 0);
        let locs: Vec<Location> = (0..40).map(|i| Location::One(i as f64)).collect();
        let r: Vec<f64> = (0..40).map(|_| rng.gen_range(-2.0..2.0)).collect();
        for _ in 0..10 {
            let theta = [
                rng.gen_range(-1.0..1.5),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-2.0..0.0),
            ];
            let f = |t: &[f64; 3]| {
                let spec = CovarianceSpec::exponential(t[0].exp(), t[1].exp(), t[2].exp());
                neg_log_likelihood(&spec, &r, &locs).unwrap()
            };
            for i in 0..3 {
                let diff = |h: f64| {
                    let mut up = theta;
                    up[i] += h;
                    let mut dn = theta;
                    dn[i] -= h;
                    (f(&up) - f(&dn)) / (2.0 * h)
                };
                let d1 = diff(1e-4);
                let d2 = diff(5e-5);
                assert!(
                    (d1 - d2).abs() <= 1e-4 * d2.abs().max(1.0),
                    "coordinate {i}: {d1} vs {d2}"
                );
            }
        }
    }

    // lattice spacing 0.02: neighbor correlation ~0.9 under the mid-grid
    // decay, domain several correlation ranges wide so sigma2 and phi stay
    // individually identifiable
    fn simulate_exp_lattice(n: usize, spec: &CovarianceSpec, seed: u64) -> (Vec<f64>, Vec<Location>) {
        use rand_distr::{Distribution, StandardNormal};
        let locs: Vec<Location> = (0..n).map(|i| Location::One(i as f64 * 0.02)).collect();
        let mut rng = crate::rng::stream(seed, 0);
        let w = crate::simbench::sample_gp(&locs, spec, &mut rng).unwrap();
        let tau = spec.tau2.sqrt();
        let r: Vec<f64> = w
            .iter()
            .map(|wi| {
                let z: f64 = StandardNormal.sample(&mut rng);
                wi + tau * z
            })
            .collect();
        (r, locs)
    }

    #[test]
    fn estimation_recovers_exponential_parameters() {
        // Monte-Carlo acceptance: sigma2 and phi each within 50% of truth in
        // at least 80% of 20 seeded replicates
        let truth = CovarianceSpec::exponential(5.0, 3.0 / (0.5 * std::f64::consts::SQRT_2), 0.5);
        let hits: usize = (0..20u64)
            .into_par_iter()
            .map(|seed| {
                let (r, locs) = simulate_exp_lattice(500, &truth, 1000 + seed);
                let init = CovarianceSpec::exponential(2.0, 2.0, 1.0);
                let report = estimate_params(&r, &locs, &init, &ParamBounds::default()).unwrap();
                let s_ok = (report.spec_hat.sigma2 - truth.sigma2).abs() <= 0.5 * truth.sigma2;
                let p_ok = (report.spec_hat.phi - truth.phi).abs() <= 0.5 * truth.phi;
                usize::from(s_ok && p_ok)
            })
            .sum();
        assert!(hits >= 16, "parameter recovery hits: {hits}/20");
    }

    #[test]
    fn estimation_pure_nugget() {
        let hits: usize = (0..10u64)
            .into_par_iter()
            .map(|seed| {
                use rand_distr::{Distribution, StandardNormal};
                let mut rng = crate::rng::stream(2000 + seed, 0);
                let n = 400;
                let locs: Vec<Location> = (0..n).map(|i| Location::One(i as f64 * 0.02)).collect();
                let tau2 = 2.0_f64;
                let r: Vec<f64> = (0..n)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        tau2.sqrt() * z
                    })
                    .collect();
                let mean = r.iter().sum::<f64>() / n as f64;
                let sample_var = r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
                let init = CovarianceSpec::exponential(1.0, 4.0, 1.0);
                let report = estimate_params(&r, &locs, &init, &ParamBounds::default()).unwrap();
                // total variance must be recovered, and the GP share must be small
                let total = report.spec_hat.sigma2 + report.spec_hat.tau2;
                let total_ok = (total - sample_var).abs() <= 0.2 * sample_var;
                let nugget_ok = report.spec_hat.tau2 >= 0.8 * total || report.spec_hat.sigma2 <= 0.1 * sample_var;
                usize::from(total_ok && nugget_ok)
            })
            .sum();
        assert!(hits >= 8, "pure-nugget hits: {hits}/10");
    }

    #[test]
    fn estimation_descends_from_truth() {
        let truth = CovarianceSpec::exponential(2.0, 1.5, 0.4);
        let (r, locs) = simulate_exp_lattice(120, &truth, 77);
        let report = estimate_params(&r, &locs, &truth, &ParamBounds::default()).unwrap();
        let init_nll = neg_log_likelihood(&truth, &r, &locs).unwrap();
        assert!(report.nll <= init_nll + 1e-12);
        assert!(report.converged);
    }

    #[test]
    fn estimation_invariant_to_sign_flip() {
        let truth = CovarianceSpec::exponential(1.5, 2.0, 0.3);
        let (r, locs) = simulate_exp_lattice(80, &truth, 91);
        let flipped: Vec<f64> = r.iter().map(|v| -v).collect();
        let init = CovarianceSpec::exponential(1.0, 1.0, 1.0);
        let a = estimate_params(&r, &locs, &init, &ParamBounds::default()).unwrap();
        let b = estimate_params(&flipped, &locs, &init, &ParamBounds::default()).unwrap();
        assert!((a.spec_hat.sigma2 - b.spec_hat.sigma2).abs() < 1e-10);
        assert!((a.spec_hat.phi - b.spec_hat.phi).abs() < 1e-10);
        assert!((a.spec_hat.tau2 - b.spec_hat.tau2).abs() < 1e-10);
    }

    #[test]
    fn estimation_rejects_constant_residuals() {
        let locs: Vec<Location> = (0..20).map(|i| Location::One(i as f64)).collect();
        let r = vec![1.0; 20];
        let init = CovarianceSpec::exponential(1.0, 1.0, 1.0);
        assert!(matches!(
            estimate_params(&r, &locs, &init, &ParamBounds::default()),
            Err(Error::Estimation(_))
        ));
    }

    fn tiny_forest(data: &SpatialDataset, seed: u64) -> ForestModel {
        let params = ForestParams {
            n_tree: 5,
            t_n: usize::MAX,
            t_c: 4,
            m_try: 1,
            seed,
            resample: Resample::Bootstrap,
        };
        fit_forest(data, crate::cholfactor::PrecisionFactor::identity(data.len()), &params).unwrap()
    }

    fn toy_spatial(n: usize, seed: u64, tau2: f64) -> SpatialDataset {
        let mut rng = crate::rng::stream(seed, 0);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let locs: Vec<Location> =
            (0..n).map(|_| Location::Two(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0))).collect();
        let y: Vec<f64> = (0..n).map(|i| x[i] + rng.gen_range(-0.5..0.5)).collect();
        let _ = tau2;
        SpatialDataset::new(y, x, 1, locs).unwrap()
    }

    #[test]
    fn kriging_interpolates_at_zero_nugget() {
        let data = toy_spatial(40, 101, 0.0);
        let forest = tiny_forest(&data, 3);
        let m: Vec<f64> = predict_rows(&forest, &data);
        let resid: Vec<f64> = data.y.iter().zip(&m).map(|(y, m)| y - m).collect();
        let spec = CovarianceSpec::exponential(1.2, 2.5, 0.0);
        let ctx = KrigingContext::new(data.locations.clone(), spec, resid).unwrap();
        let queries: Vec<(Vec<f64>, Location)> =
            (0..10).map(|i| (data.row(i).to_vec(), data.locations[i])).collect();
        let preds = krige_predict(&forest, &ctx, &queries).unwrap();
        for (i, p) in preds.iter().enumerate() {
            assert!((p - data.y[i]).abs() < 1e-6, "point {i}: {p} vs {}", data.y[i]);
        }
    }

    #[test]
    fn kriging_correction_vanishes_far_away() {
        let data = toy_spatial(30, 103, 0.0);
        let forest = tiny_forest(&data, 5);
        let m = predict_rows(&forest, &data);
        let resid: Vec<f64> = data.y.iter().zip(&m).map(|(y, m)| y - m).collect();
        let spec = CovarianceSpec::exponential(1.0, 3.0, 0.1);
        let ctx = KrigingContext::new(data.locations.clone(), spec, resid).unwrap();
        let x = vec![0.5];
        let far = Location::Two(1e5, 1e5);
        let pred = krige_predict(&forest, &ctx, &[(x.clone(), far)]).unwrap()[0];
        assert!((pred - predict_forest_row(&forest, &x)).abs() < 1e-10);
    }

    #[test]
    fn kriging_matches_dense_formula_small_case() {
        let locs = vec![Location::One(0.0), Location::One(1.0), Location::One(2.5)];
        let resid = vec![0.7, -0.2, 0.4];
        let spec = CovarianceSpec::exponential(1.0, 1.0, 0.3);
        let data = SpatialDataset::new(vec![1.0, 2.0, 3.0], vec![0.1, 0.5, 0.9], 1, locs.clone()).unwrap();
        let forest = tiny_forest(&data, 7);
        let ctx = KrigingContext::new(locs.clone(), spec.clone(), resid.clone()).unwrap();
        let new_loc = Location::One(1.7);
        let x = vec![0.4];
        let got = krige_predict(&forest, &ctx, &[(x.clone(), new_loc)]).unwrap()[0];

        let sigma = build_cov_matrix(&locs, &spec).unwrap().as_dmatrix();
        let gp = CovarianceSpec { tau2: 0.0, ..spec };
        let v = DVector::from_iterator(3, locs.iter().map(|l| matern_cov(new_loc.dist(l), &gp).unwrap()));
        let rv = DVector::from_column_slice(&resid);
        let expect = predict_forest_row(&forest, &x) + v.dot(&(sigma.try_inverse().unwrap() * rv));
        assert!((got - expect).abs() < 1e-10);
    }

    #[test]
    fn kriging_linear_in_residuals() {
        let locs: Vec<Location> = (0..12).map(|i| Location::One(i as f64 * 0.3)).collect();
        let resid: Vec<f64> = (0..12).map(|i| (i as f64 * 0.77).sin()).collect();
        let doubled: Vec<f64> = resid.iter().map(|v| 2.0 * v).collect();
        let spec = CovarianceSpec::exponential(1.0, 2.0, 0.2);
        let c1 = KrigingContext::new(locs.clone(), spec.clone(), resid).unwrap();
        let c2 = KrigingContext::new(locs.clone(), spec.clone(), doubled).unwrap();
        for i in 0..12 {
            assert!((2.0 * c1.solved()[i] - c2.solved()[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn latent_surface_limits() {
        let locs: Vec<Location> = (0..10).map(|i| Location::One(i as f64)).collect();
        let resid: Vec<f64> = (0..10).map(|i| (i as f64).cos()).collect();

        // sigma2 = 0: no GP part, w_hat = 0
        let spec = CovarianceSpec::exponential(0.0, 1.0, 1.0);
        let ctx = KrigingContext::new(locs.clone(), spec, resid.clone()).unwrap();
        for w in recover_latent(&ctx).unwrap() {
            assert!(w.abs() < 1e-12);
        }

        // tau2 = 0: C = Sigma, w_hat reproduces the residuals
        let spec = CovarianceSpec::exponential(1.4, 1.0, 0.0);
        let ctx = KrigingContext::new(locs.clone(), spec, resid.clone()).unwrap();
        let w = recover_latent(&ctx).unwrap();
        for i in 0..10 {
            assert!((w[i] - resid[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn latent_plus_nugget_component_reconstructs_residuals() {
        let locs: Vec<Location> = (0..15).map(|i| Location::One(i as f64 * 0.5)).collect();
        let resid: Vec<f64> = (0..15).map(|i| (i as f64 * 0.3).sin() + 0.1).collect();
        let spec = CovarianceSpec::exponential(1.1, 1.3, 0.6);
        let ctx = KrigingContext::new(locs.clone(), spec.clone(), resid.clone()).unwrap();
        let w = recover_latent(&ctx).unwrap();
        for i in 0..15 {
            let reconstructed = w[i] + spec.tau2 * ctx.solved()[i];
            assert!((reconstructed - resid[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn latent_generic_matches_dense_formula() {
        let locs: Vec<Location> = (0..8).map(|i| Location::Two(0.1 * i as f64, (0.2 * i as f64).fract())).collect();
        let resid: Vec<f64> = (0..8).map(|i| 0.4 * i as f64 - 1.1).collect();
        let spec = CovarianceSpec::exponential(0.9, 2.2, 0.25);
        let ctx = KrigingContext::new(locs.clone(), spec.clone(), resid.clone()).unwrap();
        let w = recover_latent(&ctx).unwrap();

        let sigma = build_cov_matrix(&locs, &spec).unwrap().as_dmatrix();
        let mut c = sigma.clone();
        for i in 0..8 {
            c[(i, i)] -= spec.tau2;
        }
        let expect = c * sigma.try_inverse().unwrap() * DVector::from_column_slice(&resid);
        for i in 0..8 {
            assert!((w[i] - expect[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn pipeline_is_deterministic() {
        let data = toy_spatial(60, 113, 0.1);
        let params = ForestParams {
            n_tree: 8,
            t_n: usize::MAX,
            t_c: 6,
            m_try: 1,
            seed: 21,
            resample: Resample::Bootstrap,
        };
        let cfg = PipelineConfig::new(params, params);
        let (f1, r1, c1) = fit_pipeline(&data, &cfg).unwrap();
        let (f2, r2, c2) = fit_pipeline(&data, &cfg).unwrap();
        assert_eq!(f1, f2);
        assert_eq!(r1, r2);
        assert_eq!(c1, c2);
    }

    #[test]
    fn pipeline_oracle_mode_skips_estimation() {
        let data = toy_spatial(50, 117, 0.1);
        let params = ForestParams {
            n_tree: 5,
            t_n: usize::MAX,
            t_c: 6,
            m_try: 1,
            seed: 2,
            resample: Resample::Bootstrap,
        };
        let mut cfg = PipelineConfig::new(params, params);
        let oracle = CovarianceSpec::exponential(1.0, 4.0, 0.2);
        cfg.oracle_spec = Some(oracle.clone());
        let (_, report, _) = fit_pipeline(&data, &cfg).unwrap();
        assert_eq!(report.spec_hat, oracle);
        assert_eq!(report.iterations, 0);
        assert!(report.converged);
    }

    #[test]
    fn fit_report_serializes_with_flat_keys() {
        let report = FitReport {
            spec_hat: CovarianceSpec::exponential(2.0, 3.0, 0.5),
            nll: 12.25,
            iterations: 31,
            converged: true,
        };
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["sigma2"], 2.0);
        assert_eq!(json["phi"], 3.0);
        assert_eq!(json["tau2"], 0.5);
        assert_eq!(json["nll"], 12.25);
        assert_eq!(json["iterations"], 31);
        assert_eq!(json["converged"], true);
    }
}
