//! Matérn correlation, Cholesky-based field simulation and kriging-corrected
//! conditional fields along a line.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use strata::gauss::{condition, correlation_matrix, FieldSampler, Matern, Smoothness, FIELD_BUDGET};
use strata::sequence::Point;

pub fn run_example() -> strata::Result<()> {
    println!("{:>6} {:>8} {:>8} {:>8}", "h", "nu=1/2", "nu=3/2", "nu=5/2");
    for h in [0.0, 2.5, 5.0, 10.0, 20.0] {
        let r: Vec<f64> = [Smoothness::Half, Smoothness::ThreeHalves, Smoothness::FiveHalves]
            .into_iter()
            .map(|nu| Matern::new(nu, 10.0).map(|m| m.correlation(h)))
            .collect::<strata::Result<_>>()?;
        println!("{h:>6.1} {:>8.4} {:>8.4} {:>8.4}", r[0], r[1], r[2]);
    }

    let spec = Matern::new(Smoothness::ThreeHalves, 15.0)?;
    let points: Vec<Point> = (0..=40).map(|i| Point::new(i as f64 * 2.5, 0.0)).collect();
    let sampler = FieldSampler::new(points.clone(), spec, FIELD_BUDGET)?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);

    let free = sampler.unconditional(&mut rng);
    println!("unconditional field, first nodes: {:?}", &free.as_slice()[..4]);

    let data_nodes = [0, 20, 40];
    let values = [1.0, -0.5, 0.8];
    let field = sampler.conditional(&data_nodes, &values, &mut rng)?;
    for (&k, &v) in data_nodes.iter().zip(&values) {
        println!("node {k:>2} at x={:>5.1}: simulated {:+.6}, datum {v:+.6}", points[k].x, field[k]);
    }

    let joint = correlation_matrix(&points, &spec);
    let unknown: Vec<usize> = (0..points.len()).filter(|i| !data_nodes.contains(i)).collect();
    let krig = condition(&joint, &data_nodes, &DVector::from_column_slice(&values), &unknown)?;
    let mid = unknown.iter().position(|&i| i == 10).expect("node 10 is unknown");
    println!(
        "kriging at x=25: mean {:+.4}, sd {:.4}; simulated {:+.4}",
        krig.mean[mid],
        krig.cov[(mid, mid)].sqrt(),
        field[10]
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
