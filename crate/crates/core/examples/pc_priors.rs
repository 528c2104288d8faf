//! Penalized-complexity priors on the correlation range and thickness scale.

use strata::mcmc::{pc_log_prior, PriorSpec};

pub fn run_example() -> strata::Result<()> {
    let spec = PriorSpec::default();
    println!(
        "P(range < {}) = {}, P(mu > {}) = {}",
        spec.alpha0, spec.eps_alpha, spec.mu0, spec.eps_mu
    );
    println!("rates: lambda_alpha {:.4}, lambda_mu {:.5}", spec.lambda_alpha(), spec.lambda_mu());

    println!("{:>6} {:>12}", "alpha", "log prior");
    for alpha in [1.0, 3.0, 10.0, 30.0, 100.0] {
        println!("{alpha:>6} {:>12.5}", spec.ln_prior_alpha(alpha));
    }
    println!("{:>6} {:>12}", "mu", "log prior");
    for mu in [0.1, 1.0, 10.0, 50.0] {
        println!("{mu:>6} {:>12.5}", spec.ln_prior_mu(mu));
    }

    let tight = PriorSpec::new(0.05, 10.0, 0.05, 2.0)?;
    println!(
        "joint log prior at (alpha 20, mu 1): default {:.4}, tighter {:.4}",
        pc_log_prior(20.0, 1.0, &spec),
        pc_log_prior(20.0, 1.0, &tight)
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
