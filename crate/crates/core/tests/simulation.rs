use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use strata::fieldsim::{simulate_conditional, simulate_unconditional, SimGrid, Simulator};
use strata::gauss::{FieldSampler, Matern, Smoothness, FIELD_BUDGET};
use strata::likelihood::LayerParams;
use strata::sequence::{AugmentedConfiguration, Point};
use strata::synth::SyntheticScenario;
use strata::Error;

fn presence(layer: &[f64]) -> f64 {
    layer.iter().filter(|&&z| z > 0.0).count() as f64 / layer.len() as f64
}

/// Mean and standard error over seeds of every layer's node presence rate.
fn presence_over_seeds(sim: &mut Simulator, params: &[LayerParams], seeds: u64, conditional: bool) -> Vec<(f64, f64)> {
    let mut rates = vec![Vec::new(); params.len()];
    for seed in 0..seeds {
        let stack = if conditional {
            sim.conditional(params, &[], &[], &[], seed).unwrap()
        } else {
            sim.unconditional(params, seed).unwrap()
        };
        for (j, layer) in stack.thickness.iter().enumerate() {
            rates[j].push(presence(layer));
        }
    }
    rates
        .iter()
        .map(|r| {
            let n = r.len() as f64;
            let m = r.iter().sum::<f64>() / n;
            let v = r.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
            (m, (v / n).sqrt())
        })
        .collect()
}

#[test]
fn unconditional_presence_tracks_p() {
    let scenario = SyntheticScenario::default();
    let params = scenario.layer_params().unwrap();
    let grid = SimGrid::rectangular(Point::new(0.0, 0.0), 5.0, 5.0, 21, 21).unwrap();
    let mut sim = Simulator::new(grid);
    for (j, (m, se)) in presence_over_seeds(&mut sim, &params, 50, false).into_iter().enumerate() {
        let p = params[j].p();
        assert!((m - p).abs() < 4.0 * se, "layer {}: presence {m:.3} ± {se:.3}, p {p}", j + 1);
    }
}

#[test]
fn conditioning_on_nothing_matches_unconditional() {
    let scenario = SyntheticScenario::default();
    let params = scenario.layer_params().unwrap();
    let grid = SimGrid::rectangular(Point::new(0.0, 0.0), 10.0, 10.0, 11, 11).unwrap();
    let mut sim = Simulator::new(grid);
    let free = presence_over_seeds(&mut sim, &params, 50, false);
    let empty = presence_over_seeds(&mut sim, &params, 50, true);
    for (j, ((a, _), (b, _))) in free.iter().zip(&empty).enumerate() {
        assert!((a - b).abs() <= 0.05, "layer {}: {a:.3} vs {b:.3}", j + 1);
    }
}

#[test]
#[ignore = "dense Cholesky of 10,000 nodes: several minutes and ~2 GB"]
fn presence_on_full_grid() {
    let scenario = SyntheticScenario::default();
    let params = scenario.layer_params().unwrap();
    let grid = SimGrid::rectangular(Point::new(0.5, 0.5), 1.0, 1.0, 100, 100).unwrap();
    let mut sim = Simulator::new(grid);
    for (j, (m, _)) in presence_over_seeds(&mut sim, &params, 50, false).into_iter().enumerate() {
        let p = params[j].p();
        assert!((m - p).abs() <= 0.05, "layer {}: presence {m:.3}, p {p}", j + 1);
    }
}

#[test]
fn near_certain_layer_covers_every_node() {
    let th = LayerParams::new(1.0 - 1e-12, 1.0, 1.0, 10.0, Smoothness::ThreeHalves).unwrap();
    let grid = SimGrid::rectangular(Point::new(0.0, 0.0), 4.0, 4.0, 15, 15).unwrap();
    for seed in 0..5 {
        let stack = simulate_unconditional(&grid, &[th], seed).unwrap();
        assert!(stack.thickness[0].iter().all(|&z| z > 0.0));
    }
}

#[test]
fn same_seed_same_stack() {
    let scenario = SyntheticScenario::default();
    let params = scenario.layer_params().unwrap();
    let grid = SimGrid::transect(Point::new(0.0, 0.0), Point::new(100.0, 40.0), 60).unwrap();
    assert_eq!(
        simulate_unconditional(&grid, &params, 9).unwrap(),
        simulate_unconditional(&grid, &params, 9).unwrap()
    );
    assert_ne!(
        simulate_unconditional(&grid, &params, 9).unwrap(),
        simulate_unconditional(&grid, &params, 10).unwrap()
    );
}

#[test]
fn empirical_variogram_matches_model() {
    let alpha = 10.0;
    let spec = Matern::new(Smoothness::ThreeHalves, alpha).unwrap();
    let points: Vec<Point> = (0..=200).map(|i| Point::new(i as f64, 0.0)).collect();
    let sampler = FieldSampler::new(points.clone(), spec, FIELD_BUDGET).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let max_lag = alpha as usize;
    let mut gamma = vec![0.0; max_lag + 1];
    let mut pairs = vec![0usize; max_lag + 1];
    for _ in 0..200 {
        let w = sampler.unconditional(&mut rng);
        for h in 1..=max_lag {
            for i in 0..points.len() - h {
                gamma[h] += 0.5 * (w[i + h] - w[i]).powi(2);
                pairs[h] += 1;
            }
        }
    }
    for h in 1..=max_lag {
        let emp = gamma[h] / pairs[h] as f64;
        let r = h as f64 / alpha;
        let model = 1.0 - (1.0 + r) * (-r).exp();
        assert!((emp - model).abs() <= 0.1 * model, "lag {h}: {emp:.5} vs {model:.5}");
    }
}

#[test]
fn zero_conditioning_stays_zero() {
    let th = LayerParams::new(0.7, 1.0, 1.0, 15.0, Smoothness::ThreeHalves).unwrap();
    let grid = SimGrid::rectangular(Point::new(0.0, 0.0), 10.0, 10.0, 6, 6).unwrap();
    let locations = [Point::new(20.0, 20.0), Point::new(23.0, 31.0), Point::new(47.5, 12.0)];
    let configs = [
        AugmentedConfiguration::new("a", vec![0.0]).unwrap(),
        AugmentedConfiguration::new("b", vec![1.5]).unwrap(),
        AugmentedConfiguration::new("c", vec![0.0]).unwrap(),
    ];
    for seed in 0..100 {
        let stack = simulate_conditional(&grid, &[th], &configs, &locations, &[0.0; 3], seed).unwrap();
        assert_eq!(stack.at_boreholes[0], vec![0.0, 1.5, 0.0], "seed {seed}");
    }
}

#[test]
fn oversized_grid_is_a_capacity_error() {
    let th = LayerParams::new(0.5, 1.0, 1.0, 10.0, Smoothness::ThreeHalves).unwrap();
    let grid = SimGrid::rectangular(Point::new(0.0, 0.0), 1.0, 1.0, 20, 20).unwrap();
    let err = Simulator::with_budget(grid, 100).unconditional(&[th], 0).unwrap_err();
    assert!(matches!(err, Error::Capacity { .. } | Error::Layer { .. }), "{err:?}");
}

#[test]
fn reported_presence_lies_in_synthetic_envelope() {
    let scenario = SyntheticScenario::default();
    let mut by_facies: std::collections::BTreeMap<String, Vec<f64>> = Default::default();
    for seed in 0..200 {
        let data = scenario.clone().with_seed(seed).generate().unwrap();
        for (f, v) in strata::synth::presence_by_facies(&scenario.parent, &data.truth) {
            by_facies.entry(f.as_str().to_string()).or_default().push(v);
        }
    }
    let reported = [("Black", 0.58), ("Red", 0.83), ("Blue", 0.28), ("Green", 0.80)];
    let mut outside = Vec::new();
    for (code, value) in reported {
        let v = by_facies.get_mut(code).unwrap();
        v.sort_by(|a, b| a.total_cmp(b));
        let (lo, hi) = (strata::io::quantile_sorted(v, 0.025), strata::io::quantile_sorted(v, 0.975));
        println!("{code}: reported {value}, 95% envelope [{lo:.3}, {hi:.3}]");
        if !(lo <= value && value <= hi) {
            outside.push(code);
        }
    }
    assert!(outside.is_empty(), "outside the envelope: {outside:?}");
}
