//! Unconditional simulation of all layers on a rectangular grid, written in
//! the gridded text format.

use strata::fieldsim::{simulate_unconditional, SimGrid};
use strata::io;
use strata::sequence::Point;
use strata::synth::SyntheticScenario;

pub fn run_example() -> strata::Result<()> {
    let scenario = SyntheticScenario::default();
    let params = scenario.layer_params()?;
    let grid = SimGrid::rectangular(Point::new(0.0, 0.0), 5.0, 5.0, 21, 21)?;
    let stack = simulate_unconditional(&grid, &params, 17)?;

    for (j, layer) in stack.thickness.iter().enumerate() {
        let present = layer.iter().filter(|&&z| z > 0.0).count() as f64 / layer.len() as f64;
        let mean = layer.iter().sum::<f64>() / layer.len() as f64;
        println!(
            "layer {:>2} {:>5}: present at {:>5.1}% of nodes (p = {:.1}), mean {:.3} m",
            j + 1,
            scenario.parent.facies(j),
            100.0 * present,
            params[j].p(),
            mean
        );
    }
    let base = stack.base(stack.layers() - 1);
    let deepest = base.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    println!("deepest base: {deepest:.2} m");

    let text = io::format_grid(&grid, &stack, &scenario.parent);
    for line in text.lines().take(6) {
        println!("{line}");
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
