//! Conditional simulation through the most likely posterior state, drawn on a
//! transect that passes through two boreholes, and the resulting
//! cross-section.

use strata::fieldsim::{cross_section, Cell, GroundLevel, SimGrid, Simulator};
use strata::mcmc::{run_chain, select_most_likely, ChainSettings, Model, PriorSpec, ProposalSpec};
use strata::sequence::Point;
use strata::synth::SyntheticScenario;

pub fn run_example() -> strata::Result<()> {
    let scenario = SyntheticScenario {
        n_boreholes: 4,
        ground_level: 5.0,
        ..SyntheticScenario::default()
    }
    .with_seed(3);
    let data = scenario.generate()?;
    let model = Model::new(scenario.parent.clone(), data.boreholes)?;
    let params = model.initial_params(&|_| scenario.nu, 10.0)?;
    let settings = ChainSettings {
        n_iter: 60,
        burn_in: 10,
        thin: 10,
        seed: 8,
        ..ChainSettings::default()
    };
    let chain = run_chain(&model, params, PriorSpec::default(), ProposalSpec::default(), settings)?;
    let best = select_most_likely(&chain.samples)?;
    println!("most likely sample: iteration {}, log-likelihood {:.3}", best.iteration, best.log_likelihood);

    let transect = SimGrid::transect(Point::new(25.0, 25.0), Point::new(75.0, 75.0), 50)?
        .with_ground(GroundLevel::InverseDistance { power: 2.0 })?;
    let locations = model.locations();
    let ground: Vec<f64> = model.boreholes.iter().map(|b| b.ground_level).collect();
    let mut sim = Simulator::new(transect.clone());
    let stack = sim.conditional(&best.params, &best.configs, &locations, &ground, 13)?;

    for (k, b) in model.boreholes.iter().enumerate() {
        let simulated: Vec<f64> = stack.at_boreholes.iter().map(|layer| layer[k]).collect();
        assert_eq!(simulated, best.configs[k].thickness());
        println!("borehole {} honoured ({} records)", b.id, b.records().len());
    }

    let section = cross_section(&stack, &transect, 40)?;
    println!(
        "section: {} stations, depth {:.2} to {:.2} m",
        section.stations.len(),
        section.depths[0],
        section.depths[section.depths.len() - 1]
    );
    for row in section.cells.iter().step_by(5) {
        let line: String = row
            .iter()
            .step_by(2)
            .map(|c| match c {
                Cell::Above => ' ',
                Cell::Layer(j) => scenario.parent.facies(*j).as_str().chars().next().unwrap_or('?'),
                Cell::Undefined => '.',
            })
            .collect();
        println!("  |{line}|");
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
