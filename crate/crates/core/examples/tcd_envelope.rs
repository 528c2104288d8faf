//! Posterior envelope of the thickness distribution of one facies against the
//! distribution of its recorded thicknesses.

use strata::io::quantile_sorted;
use strata::likelihood::tcd;
use strata::mcmc::{run_chain, ChainSettings, Model, PriorSpec, ProposalSpec};
use strata::sequence::Facies;
use strata::synth::SyntheticScenario;

pub fn run_example() -> strata::Result<()> {
    let scenario = SyntheticScenario {
        n_boreholes: 6,
        ..SyntheticScenario::default()
    }
    .with_seed(9);
    let data = scenario.generate()?;
    let model = Model::new(scenario.parent.clone(), data.boreholes)?;
    let params = model.initial_params(&|_| scenario.nu, 10.0)?;
    let settings = ChainSettings {
        n_iter: 80,
        burn_in: 20,
        thin: 4,
        seed: 2,
        tie_by_facies: true,
        ..ChainSettings::default()
    };
    let chain = run_chain(&model, params, PriorSpec::default(), ProposalSpec::default(), settings)?;

    let facies = Facies::from("Green");
    let j = scenario.parent.layers_of(&facies)[0];
    let mut observed: Vec<f64> = model
        .boreholes
        .iter()
        .flat_map(|b| b.records().iter())
        .filter(|r| r.facies == facies)
        .map(|r| r.thickness)
        .collect();
    observed.sort_by(|a, b| a.total_cmp(b));
    let truth = &data.params[j];

    println!("{:>6} {:>7} {:>7} {:>7} {:>7} {:>9}", "z", "q05", "median", "q95", "truth", "observed");
    for k in 0..=10 {
        let z = 0.4 * k as f64;
        let mut v: Vec<f64> = chain.samples.iter().map(|s| tcd(z, &s.params[j])).collect();
        v.sort_by(|a, b| a.total_cmp(b));
        let emp = observed.partition_point(|&t| t <= z) as f64 / observed.len().max(1) as f64;
        println!(
            "{z:>6.2} {:>7.3} {:>7.3} {:>7.3} {:>7.3} {emp:>9.3}",
            quantile_sorted(&v, 0.05),
            quantile_sorted(&v, 0.5),
            quantile_sorted(&v, 0.95),
            tcd(z, truth)
        );
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
