//! Thickness transform, per-layer and complete log-likelihoods, thickness
//! moments and the thickness cumulative distribution.
//!
//! Each parent layer `j` carries a standardized Gaussian field `W_j`. The
//! layer is present at a site when `W_j > τ_j` and its thickness is then
//! `φ_j(W_j − τ_j)` with `φ_j(x) = μ_j x^β_j`. The probability of presence is
//! `p_j = 1 − Φ(τ_j)`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gauss::{self, CdfOptions, CovMatrix, Matern, Smoothness};
use crate::normal;
use crate::sequence::{AugmentedConfiguration, Point};

/// Lower and upper limits of the flat prior support for `β`.
pub const BETA_SUPPORT: (f64, f64) = (0.25, 4.0);

/// Orthant probabilities are floored here before taking logarithms.
pub const PROBABILITY_FLOOR: f64 = 1e-300;

/// Parameters of one parent layer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayerParams {
    p: f64,
    mu: f64,
    beta: f64,
    range: f64,
    nu: Smoothness,
}

impl LayerParams {
    pub fn new(p: f64, mu: f64, beta: f64, range: f64, nu: Smoothness) -> Result<Self> {
        check_p(p)?;
        check_mu(mu)?;
        check_beta(beta)?;
        if !(range > 0.0) || !range.is_finite() {
            return Err(Error::param("alpha", range, "range must be positive"));
        }
        Ok(LayerParams {
            p,
            mu,
            beta,
            range,
            nu,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn nu(&self) -> Smoothness {
        self.nu
    }

    /// Truncation threshold `τ = Φ⁻¹(1 − p)`.
    pub fn tau(&self) -> f64 {
        normal::quantile(1.0 - self.p)
    }

    pub fn matern(&self) -> Matern {
        Matern::new(self.nu, self.range).expect("range validated at construction")
    }

    pub fn with_p(self, p: f64) -> Result<Self> {
        Self::new(p, self.mu, self.beta, self.range, self.nu)
    }

    pub fn with_mu(self, mu: f64) -> Result<Self> {
        Self::new(self.p, mu, self.beta, self.range, self.nu)
    }

    pub fn with_beta(self, beta: f64) -> Result<Self> {
        Self::new(self.p, self.mu, beta, self.range, self.nu)
    }

    pub fn with_range(self, range: f64) -> Result<Self> {
        Self::new(self.p, self.mu, self.beta, range, self.nu)
    }
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::param("p", p, "must lie in (0, 1)"))
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if mu > 0.0 && mu.is_finite() {
        Ok(())
    } else {
        Err(Error::param("mu", mu, "must be positive"))
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > BETA_SUPPORT.0 && beta < BETA_SUPPORT.1 {
        Ok(())
    } else {
        Err(Error::param("beta", beta, "must lie in (0.25, 4)"))
    }
}

/// `φ(w) = μ w^β` for `w ≥ 0`.
pub fn phi_transform(w: f64, mu: f64, beta: f64) -> Result<f64> {
    check_mu(mu)?;
    check_beta(beta)?;
    if !(w >= 0.0) {
        return Err(Error::param("w", w, "must be non-negative"));
    }
    Ok(mu * w.powf(beta))
}

/// `φ⁻¹(z) = (z/μ)^(1/β)`.
pub fn phi_inverse(z: f64, mu: f64, beta: f64) -> Result<f64> {
    check_mu(mu)?;
    check_beta(beta)?;
    if !(z >= 0.0) {
        return Err(Error::param("z", z, "must be non-negative"));
    }
    Ok((z / mu).powf(1.0 / beta))
}

/// Derivative of `φ⁻¹` at `z > 0`: `(1/(μβ)) (z/μ)^(1/β − 1)`.
pub fn jacobian_inv(z: f64, mu: f64, beta: f64) -> Result<f64> {
    Ok(ln_jacobian_inv(z, mu, beta)?.exp())
}

pub fn ln_jacobian_inv(z: f64, mu: f64, beta: f64) -> Result<f64> {
    check_mu(mu)?;
    check_beta(beta)?;
    if !(z > 0.0) {
        return Err(Error::param("z", z, "must be positive"));
    }
    Ok(-(mu * beta).ln() + (1.0 / beta - 1.0) * (z / mu).ln())
}

/// Thicknesses of one layer across all boreholes, split into positive and
/// zero sites.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct LayerData {
    pub positive: Vec<(Point, f64)>,
    pub zero: Vec<Point>,
}

impl LayerData {
    pub fn new(positive: Vec<(Point, f64)>, zero: Vec<Point>) -> Result<Self> {
        for &(_, z) in &positive {
            if !(z > 0.0) || !z.is_finite() {
                return Err(Error::param("z", z, "positive thickness expected"));
            }
        }
        Ok(LayerData { positive, zero })
    }

    /// Collects layer `layer` from one configuration per borehole.
    pub fn from_configs(
        configs: &[AugmentedConfiguration],
        locations: &[Point],
        layer: usize,
    ) -> Result<Self> {
        if configs.len() != locations.len() {
            return Err(Error::DimensionMismatch {
                expected: locations.len(),
                got: configs.len(),
            });
        }
        let mut data = LayerData::default();
        for (cfg, loc) in configs.iter().zip(locations) {
            let z = *cfg.thickness().get(layer).ok_or(Error::DimensionMismatch {
                expected: layer + 1,
                got: cfg.len(),
            })?;
            if z > 0.0 {
                data.positive.push((*loc, z));
            } else {
                data.zero.push(*loc);
            }
        }
        Ok(data)
    }

    pub fn sites(&self) -> usize {
        self.positive.len() + self.zero.len()
    }
}

/// Numerical controls for likelihood evaluation.
///
/// Every orthant probability is estimated with a fresh generator seeded from
/// `qmc_seed`, so the log-likelihood is a deterministic function of its inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct LikelihoodOptions {
    pub cdf: CdfOptions,
    pub qmc_seed: u64,
}

impl Default for LikelihoodOptions {
    fn default() -> Self {
        LikelihoodOptions {
            cdf: CdfOptions::default(),
            qmc_seed: 0x5_eed0_f0a7,
        }
    }
}

impl LikelihoodOptions {
    pub fn with_tol(tol: f64) -> Self {
        LikelihoodOptions {
            cdf: CdfOptions::with_tol(tol),
            ..Self::default()
        }
    }

    fn orthant(
        &self,
        tau: f64,
        mean: &DVector<f64>,
        cov: &DMatrix<f64>,
    ) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.qmc_seed);
        let upper = DVector::from_element(mean.len(), tau);
        let est = gauss::mvn_cdf_below(&upper, mean, cov, &self.cdf, &mut rng)?;
        if !est.converged {
            return Err(Error::NotConverged {
                layer: 0,
                error: est.error,
                tolerance: self.cdf.abs_tol,
            });
        }
        Ok(est.probability.max(PROBABILITY_FLOOR).ln())
    }
}

/// Complete-data log-likelihood of one layer.
///
/// With `n_j` positive and `ℓ_j` zero sites this is the Gaussian log density
/// of the back-transformed positives, their log Jacobians, and the log
/// probability that the zero sites fall below `τ` given the positives.
pub fn layer_loglik(data: &LayerData, params: &LayerParams, opts: &LikelihoodOptions) -> Result<f64> {
    let tau = params.tau();
    let spec = params.matern();
    // a canonical site order makes the value independent of borehole order
    let mut positive = data.positive.clone();
    positive.sort_by(|a, b| {
        (a.0.x, a.0.y, a.1)
            .partial_cmp(&(b.0.x, b.0.y, b.1))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut zeros = data.zero.clone();
    zeros.sort_by(|a, b| (a.x, a.y).partial_cmp(&(b.x, b.y)).unwrap_or(std::cmp::Ordering::Equal));
    let n_pos = positive.len();
    if n_pos == 0 {
        if zeros.is_empty() {
            return Ok(0.0);
        }
        let cov = gauss::correlation_matrix(&zeros, &spec);
        return opts.orthant(tau, &DVector::zeros(zeros.len()), &cov);
    }

    let mut points: Vec<Point> = positive.iter().map(|&(p, _)| p).collect();
    points.extend_from_slice(&zeros);
    let joint = gauss::correlation_matrix(&points, &spec);

    let mut w = DVector::zeros(n_pos);
    let mut ln_jac = 0.0;
    for (i, &(_, z)) in positive.iter().enumerate() {
        w[i] = phi_inverse(z, params.mu, params.beta)? + tau;
        ln_jac += ln_jacobian_inv(z, params.mu, params.beta)?;
    }
    let pos_idx: Vec<usize> = (0..n_pos).collect();
    let s_pp = CovMatrix::new(joint.view((0, 0), (n_pos, n_pos)).into_owned())?;
    let density = gauss::mvn_logpdf(&w, &DVector::zeros(n_pos), &s_pp)?;
    if zeros.is_empty() {
        return Ok(density + ln_jac);
    }
    let zero_idx: Vec<usize> = (n_pos..points.len()).collect();
    let cond = gauss::condition(&joint, &pos_idx, &w, &zero_idx)?;
    let orthant = opts.orthant(tau, &cond.mean, &cond.cov)?;
    Ok(density + ln_jac + orthant)
}

/// Per-layer log-likelihoods for all parent layers.
pub fn layer_logliks(
    configs: &[AugmentedConfiguration],
    locations: &[Point],
    params: &[LayerParams],
    opts: &LikelihoodOptions,
) -> Result<Vec<f64>> {
    let m = params.len();
    if let Some(c) = configs.iter().find(|c| c.len() != m) {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: c.len(),
        });
    }
    (0..m)
        .map(|j| {
            let data = LayerData::from_configs(configs, locations, j)?;
            layer_loglik(&data, &params[j], opts).map_err(|e| with_layer(e, j))
        })
        .collect()
}

/// Sum of the layer log-likelihoods, accumulated in layer order.
pub fn complete_loglik(
    configs: &[AugmentedConfiguration],
    locations: &[Point],
    params: &[LayerParams],
    opts: &LikelihoodOptions,
) -> Result<f64> {
    Ok(layer_logliks(configs, locations, params, opts)?.iter().sum())
}

/// Attaches a layer index to an error.
pub fn with_layer(e: Error, layer: usize) -> Error {
    match e {
        Error::NotConverged {
            error, tolerance, ..
        } => Error::NotConverged {
            layer,
            error,
            tolerance,
        },
        Error::Layer { .. } => e,
        other if other.is_numeric() => Error::Layer {
            layer,
            source: Box::new(other),
        },
        other => other,
    }
}

/// Mean and variance of a positive thickness for `β = 1`.
pub fn thickness_moments(params: &LayerParams) -> Result<(f64, f64)> {
    if params.beta != 1.0 {
        return Err(Error::Unsupported(format!(
            "closed-form thickness moments require beta = 1 (got {})",
            params.beta
        )));
    }
    let tau = params.tau();
    let lambda = normal::pdf(tau) / normal::sf(tau);
    let mean = params.mu * (lambda - tau);
    let var = params.mu * params.mu * (1.0 + lambda * (tau - lambda));
    Ok((mean, var))
}

/// `P(Z ≤ z | Z > 0) = [Φ(τ + (z/μ)^(1/β)) − Φ(τ)] / p`.
pub fn tcd(z: f64, params: &LayerParams) -> f64 {
    if !(z > 0.0) {
        return 0.0;
    }
    let tau = params.tau();
    let w = (z / params.mu).powf(1.0 / params.beta);
    // 1 − Φ(τ) − (1 − Φ(τ + w)) keeps precision when τ is large
    let num = normal::sf(tau) - normal::sf(tau + w);
    (num / params.p).clamp(0.0, 1.0)
}

/// Starting values `(τ₀, μ₀)` from an empirical presence rate and mean
/// observed thickness, inverting the `β = 1` mean.
pub fn init_from_empirical(presence: f64, mean_thickness: f64) -> Result<(f64, f64)> {
    check_p(presence)?;
    if !(mean_thickness > 0.0) || !mean_thickness.is_finite() {
        return Err(Error::param(
            "mean_thickness",
            mean_thickness,
            "must be positive",
        ));
    }
    let tau = normal::quantile(1.0 - presence);
    let denom = normal::pdf(tau) / presence - tau;
    if !(denom > 0.0) {
        return Err(Error::param("p0", presence, "inverse Mills denominator not positive"));
    }
    Ok((tau, mean_thickness / denom))
}

/// One thickness at an isolated site: zero with probability `1 − p`.
pub fn sample_thickness<R: Rng + ?Sized>(params: &LayerParams, rng: &mut R) -> f64 {
    let w: f64 = rng.sample(rand_distr::StandardNormal);
    let tau = params.tau();
    if w > tau {
        params.mu * (w - tau).powf(params.beta)
    } else {
        0.0
    }
}
