//! Aligns a borehole log to a parent sequence and walks its augmented
//! configuration with the three thickness-preserving moves.

use strata::sequence::{
    apply_move, enumerate_moves, initial_augmentation, observe, BoreholeObservation, MoveKind,
    ParentSequence, Point, Record,
};

pub fn run_example() -> strata::Result<()> {
    let parent = ParentSequence::parse("Sand Clay Sand Silt Clay Sand")?;
    let borehole = BoreholeObservation::new(
        "BH1",
        Point::new(10.0, 4.0),
        12.5,
        vec![Record::new("Sand", 3.0), Record::new("Clay", 1.5), Record::new("Sand", 2.0)],
    )?;

    let mut cfg = initial_augmentation(&borehole, &parent)?;
    println!("initial thickness vector: {:?}", cfg.thickness());
    println!("layer bases (depth, m): {:?}", cfg.depths(-borehole.ground_level));

    for kind in MoveKind::ALL {
        let sites = enumerate_moves(&cfg, &parent, kind);
        println!("{:>8}: {} candidate(s)", kind.name(), sites.len());
        if let Some(site) = sites.first() {
            let mv = match site.interval(&cfg) {
                Some(len) => site.with_split(0.5 * len),
                None => site.with_split(0.0),
            };
            cfg = apply_move(&cfg, &parent, &mv)?;
            println!("          applied {mv:?} -> {:?}", cfg.thickness());
        }
    }

    assert_eq!(observe(&cfg, &parent)?, borehole.records());
    println!("observed log unchanged: {:?}", borehole.facies_sequence());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
