//! Fits the posterior sampler to a small synthetic data set and compares the
//! posterior medians with the true parameters.

use strata::io::quantile_sorted;
use strata::mcmc::{run_chain, ChainSettings, Model, Param, PriorSpec, ProposalSpec};
use strata::synth::SyntheticScenario;

pub fn run_example() -> strata::Result<()> {
    let scenario = SyntheticScenario {
        n_boreholes: 5,
        ..SyntheticScenario::default()
    }
    .with_seed(21);
    let data = scenario.generate()?;
    let model = Model::new(scenario.parent.clone(), data.boreholes.clone())?;

    let params = model.initial_params(&|_| scenario.nu, 10.0)?;
    let settings = ChainSettings {
        n_iter: 120,
        burn_in: 20,
        thin: 5,
        seed: 5,
        tie_by_facies: true,
        ..ChainSettings::default()
    };
    let chain = run_chain(&model, params, PriorSpec::default(), ProposalSpec::default(), settings)?;
    let diag = &chain.diagnostics;
    println!(
        "{} samples, log-likelihood {:.2} -> {:.2}",
        chain.samples.len(),
        diag.initial_log_likelihood,
        diag.log_likelihood_trace.last().copied().unwrap_or(f64::NAN)
    );
    for p in Param::ALL {
        println!("acceptance {:>5}: {:.2}", p.name(), diag.params[p.index()].rate());
    }
    for (k, name) in ["split", "merge", "displace"].iter().enumerate() {
        println!("acceptance {name:>8}: {:.2}", diag.moves[k].rate());
    }

    println!("{:>6} {:>5} {:>8} {:>8}", "facies", "param", "truth", "median");
    for (f, truth) in &scenario.truth {
        let j = scenario.parent.layers_of(f)[0];
        for (p, t) in [(Param::P, truth.p), (Param::Mu, truth.mu), (Param::Alpha, truth.alpha)] {
            let mut v: Vec<f64> = chain.samples.iter().map(|s| p.get(&s.params[j])).collect();
            v.sort_by(|a, b| a.total_cmp(b));
            println!("{f:>6} {:>5} {t:>8.3} {:>8.3}", p.name(), quantile_sorted(&v, 0.5));
        }
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
