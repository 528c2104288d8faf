//! Generates the synthetic benchmark, writes it in the standard file formats
//! and reads it back.

use strata::io;
use strata::synth::{presence_by_facies, SyntheticScenario};

pub fn run_example() -> strata::Result<()> {
    let scenario = SyntheticScenario::default().with_seed(42);
    let data = scenario.generate()?;
    println!("parent: {:?}", scenario.parent.layers().iter().map(|f| f.as_str()).collect::<Vec<_>>());
    for b in data.boreholes.iter().take(4) {
        println!(
            "{} at ({:5.1}, {:5.1}): {} records, {:.2} m",
            b.id,
            b.location.x,
            b.location.y,
            b.records().len(),
            b.total_thickness()
        );
    }
    for (f, rate) in presence_by_facies(&scenario.parent, &data.truth) {
        println!("presence {f:>5}: {rate:.3} (truth {:.1})", scenario.truth[&f].p);
    }

    let dir = std::env::temp_dir().join(format!("strata-synthetic-{}", std::process::id()));
    io::write_boreholes(&dir.join("boreholes.csv"), &data.boreholes)?;
    io::write_parent(&dir.join("parent.txt"), &scenario.parent)?;
    io::write_truth(&dir.join("truth.csv"), &scenario.parent, &data.truth)?;
    let boreholes = io::read_boreholes(&dir.join("boreholes.csv"))?;
    let parent = io::read_parent(&dir.join("parent.txt"))?;
    let truth = io::read_truth(&dir.join("truth.csv"), &parent)?;
    assert_eq!(boreholes, data.boreholes);
    assert_eq!(truth, data.truth);
    println!("round trip through {} is exact", dir.display());
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
