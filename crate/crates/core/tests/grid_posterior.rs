//! Single-parameter chains against posteriors integrated directly from the
//! model density.

mod common;

use statrs::distribution::{ChiSquared, ContinuousCDF};
use strata::gauss::Smoothness;
use strata::likelihood::LayerParams;
use strata::mcmc::{ChainSettings, Model, Param, PriorSpec, ProposalSpec, Sampler};
use strata::sequence::{BoreholeObservation, ParentSequence, Point, Record};

use common::{big_phi_inv, integrate, phi};

fn one_layer_model(sites: &[(Point, f64)]) -> Model {
    let parent = ParentSequence::parse("A").unwrap();
    let boreholes = sites
        .iter()
        .enumerate()
        .map(|(i, &(loc, z))| {
            BoreholeObservation::new(format!("B{i}"), loc, 0.0, vec![Record::new("A", z)]).unwrap()
        })
        .collect();
    Model::new(parent, boreholes).unwrap()
}

/// Thinned draws of one parameter with everything else pinned.
fn draws(model: &Model, start: LayerParams, which: Param, n_iter: usize, thin: usize, seed: u64) -> Vec<f64> {
    let mut update = [false; 4];
    update[which.index()] = true;
    let settings = ChainSettings {
        n_iter,
        burn_in: 1_000,
        thin,
        seed,
        update_params: update,
        update_configurations: false,
        audit_every: 0,
        ..ChainSettings::default()
    };
    let mut sampler =
        Sampler::new(model, vec![start], PriorSpec::default(), ProposalSpec::default(), settings).unwrap();
    let mut out = Vec::new();
    for t in 1..=n_iter {
        sampler.step().unwrap();
        if t > 1_000 && (t - 1_000) % thin == 0 {
            out.push(which.get(&sampler.state().params[0]));
        }
    }
    out
}

/// Chi-square p-value of binned draws against bin probabilities proportional
/// to the integral of `density` over each bin; the last edge may be infinite.
fn chi_square(samples: &[f64], edges: &[f64], density: impl Fn(f64) -> f64) -> f64 {
    let mass: Vec<f64> = edges
        .windows(2)
        .map(|w| {
            if w[1].is_finite() {
                integrate(&density, w[0], w[1], 1e-14)
            } else {
                let a = w[0];
                integrate(|t| if t > 0.0 { density(a + (1.0 - t) / t) / (t * t) } else { 0.0 }, 0.0, 1.0, 1e-14)
            }
        })
        .collect();
    let total: f64 = mass.iter().sum();
    let mut counts = vec![0.0; mass.len()];
    for &x in samples {
        let k = edges.partition_point(|&e| e <= x).saturating_sub(1).min(mass.len() - 1);
        counts[k] += 1.0;
    }
    let n = samples.len() as f64;
    let stat: f64 = counts
        .iter()
        .zip(&mass)
        .map(|(o, m)| {
            let e = n * m / total;
            (o - e).powi(2) / e
        })
        .sum();
    1.0 - ChiSquared::new((mass.len() - 1) as f64).unwrap().cdf(stat)
}

fn params(p: f64, mu: f64, beta: f64, alpha: f64) -> LayerParams {
    LayerParams::new(p, mu, beta, alpha, Smoothness::ThreeHalves).unwrap()
}

#[test]
fn thickness_scale_posterior() {
    let z = 1.25;
    let model = one_layer_model(&[(Point::new(0.0, 0.0), z)]);
    let samples = draws(&model, params(0.5, 1.0, 1.0, 10.0), Param::Mu, 600_000, 200, 31);
    let lambda = -(0.01f64).ln() / 10.0;
    let density = |mu: f64| if mu > 0.0 { (-lambda * mu).exp() * phi(z / mu) / mu } else { 0.0 };
    let mut edges: Vec<f64> = (0..=20).map(|k| k as f64 * 0.3).collect();
    edges.push(f64::INFINITY);
    let pval = chi_square(&samples, &edges, density);
    assert!(pval > 0.001, "p-value {pval}");
}

#[test]
fn shape_posterior() {
    let z = 1.7;
    let model = one_layer_model(&[(Point::new(0.0, 0.0), z)]);
    let samples = draws(&model, params(0.5, 1.0, 1.0, 10.0), Param::Beta, 300_000, 100, 32);
    let density = |b: f64| {
        let w = z.powf(1.0 / b);
        phi(w) * w / (b * z)
    };
    let edges: Vec<f64> = (0..=15).map(|k| 0.25 + k as f64 * 0.25).collect();
    let pval = chi_square(&samples, &edges, density);
    assert!(pval > 0.001, "p-value {pval}");
}

#[test]
fn presence_posterior_with_two_sites() {
    let (z1, z2, h) = (0.3, 2.0, 8.0);
    let model = one_layer_model(&[(Point::new(0.0, 0.0), z1), (Point::new(h, 0.0), z2)]);
    let alpha = 10.0;
    let samples = draws(&model, params(0.5, 1.0, 1.0, alpha), Param::P, 200_000, 50, 33);
    let r = (1.0 + h / alpha) * (-h / alpha).exp();
    let density = |p: f64| {
        if p <= 0.0 || p >= 1.0 {
            return 0.0;
        }
        let tau = big_phi_inv(1.0 - p);
        let (a, b) = (tau + z1, tau + z2);
        let q = (a * a - 2.0 * r * a * b + b * b) / (1.0 - r * r);
        (-0.5 * q).exp()
    };
    let edges: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
    let pval = chi_square(&samples, &edges, density);
    assert!(pval > 0.001, "p-value {pval}");
}

#[test]
fn range_posterior_with_two_sites() {
    let (z1, z2, h) = (0.3, 2.0, 10.0);
    let model = one_layer_model(&[(Point::new(0.0, 0.0), z1), (Point::new(0.0, h), z2)]);
    let samples = draws(&model, params(0.5, 1.0, 1.0, 10.0), Param::Alpha, 600_000, 200, 34);
    let lambda = -(0.01f64).ln() * 3.0;
    let density = |a: f64| {
        if a <= 0.0 {
            return 0.0;
        }
        let r = (1.0 + h / a) * (-h / a).exp();
        let q = (z1 * z1 - 2.0 * r * z1 * z2 + z2 * z2) / (1.0 - r * r);
        let lik = (-0.5 * q).exp() / (1.0 - r * r).sqrt();
        lambda / (a * a) * (-lambda / a).exp() * lik
    };
    let mut edges: Vec<f64> = (0..=16).map(|k| k as f64 * 2.5).collect();
    edges.push(f64::INFINITY);
    let pval = chi_square(&samples, &edges, density);
    assert!(pval > 0.001, "p-value {pval}");
}
