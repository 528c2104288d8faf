//! Likelihood of one layer's thicknesses across boreholes, the positive
//! thickness distribution, its moments, and starting values from data.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use strata::gauss::Smoothness;
use strata::likelihood::{
    init_from_empirical, layer_loglik, sample_thickness, tcd, thickness_moments, LayerData,
    LayerParams, LikelihoodOptions,
};
use strata::sequence::Point;

pub fn run_example() -> strata::Result<()> {
    let params = LayerParams::new(0.6, 2.0, 1.0, 20.0, Smoothness::ThreeHalves)?;
    println!("tau = {:.4}", params.tau());

    let data = LayerData::new(
        vec![(Point::new(0.0, 0.0), 1.2), (Point::new(8.0, 3.0), 0.4), (Point::new(30.0, 10.0), 2.7)],
        vec![Point::new(15.0, 15.0), Point::new(60.0, 5.0)],
    )?;
    let opts = LikelihoodOptions::with_tol(1e-4);
    let ll = layer_loglik(&data, &params, &opts)?;
    println!("log-likelihood of {} sites: {ll:.5}", data.sites());
    for alpha in [5.0, 20.0, 80.0] {
        let ll = layer_loglik(&data, &params.with_range(alpha)?, &opts)?;
        println!("  range {alpha:>4}: {ll:.5}");
    }

    let (mean, var) = thickness_moments(&params)?;
    println!("positive thickness: mean {mean:.4}, sd {:.4}", var.sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let draws: Vec<f64> = (0..20_000).map(|_| sample_thickness(&params, &mut rng)).collect();
    let pos: Vec<f64> = draws.iter().copied().filter(|&z| z > 0.0).collect();
    println!(
        "simulated: presence {:.3}, mean {:.4}",
        pos.len() as f64 / draws.len() as f64,
        pos.iter().sum::<f64>() / pos.len() as f64
    );
    for z in [0.5, 1.0, 2.0, 4.0] {
        println!("  P(Z <= {z} | Z > 0) = {:.4}", tcd(z, &params));
    }

    let (tau0, mu0) = init_from_empirical(0.6, mean)?;
    println!("starting values from presence 0.6 and mean {mean:.4}: tau0 {tau0:.4}, mu0 {mu0:.4}");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
