//! Orthant probabilities of correlated Gaussians by randomized lattice
//! integration, checked against closed forms, and draws from the truncated
//! distribution.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use strata::gauss::{mvn_cdf_below, CdfOptions, GibbsSchedule, TruncatedMvn};

pub fn run_example() -> strata::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let opts = CdfOptions::with_tol(1e-4);

    for rho in [-0.6, 0.0, 0.3, 0.9] {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
        let est = mvn_cdf_below(&DVector::zeros(2), &DVector::zeros(2), &cov, &opts, &mut rng)?;
        let exact = 0.25 + f64::asin(rho) / (2.0 * std::f64::consts::PI);
        println!(
            "d=2 rho={rho:+.1}: P={:.6} exact={exact:.6} err={:.1e} points={}",
            est.probability, est.error, est.evaluations
        );
    }

    let d = 6;
    let cov = DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { 0.5 });
    let est = mvn_cdf_below(&DVector::zeros(d), &DVector::zeros(d), &cov, &opts, &mut rng)?;
    println!(
        "d={d} equicorrelated 0.5: P={:.6} exact={:.6} converged={}",
        est.probability,
        1.0 / (d as f64 + 1.0),
        est.converged
    );

    let cov = DMatrix::from_fn(3, 3, |i, j| (-(i as f64 - j as f64).abs() / 2.0).exp());
    let tmvn = TruncatedMvn::new(DVector::from_element(3, 0.5), &cov, 0.0, GibbsSchedule::default(), &mut rng)?;
    println!("P(all components below 0) = {:.5}", tmvn.region_probability());
    for _ in 0..3 {
        let x = tmvn.draw(&mut rng);
        println!("  truncated draw {:?}", x.as_slice());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
