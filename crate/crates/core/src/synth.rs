//! Synthetic benchmark: a 15-layer, four-facies parent sequence, known layer
//! parameters and a set of boreholes drawn from one unconditional realization.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gauss::{FieldSampler, Smoothness, FIELD_BUDGET};
use crate::likelihood::LayerParams;
use crate::sequence::{
    observe, AugmentedConfiguration, BoreholeObservation, Facies, ParentSequence, Point,
    MIN_THICKNESS,
};

/// True `(p, μ, β, α)` of one facies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FaciesTruth {
    pub p: f64,
    pub mu: f64,
    pub beta: f64,
    pub alpha: f64,
}

/// Everything needed to regenerate a synthetic data set.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticScenario {
    pub parent: ParentSequence,
    pub truth: BTreeMap<Facies, FaciesTruth>,
    pub nu: Smoothness,
    /// Boreholes placed before the random ones.
    pub fixed_locations: Vec<Point>,
    pub n_boreholes: usize,
    /// Square domain `[lo, hi]²` in km for the random boreholes.
    pub domain: (f64, f64),
    pub ground_level: f64,
    pub seed: u64,
}

/// The default 15-layer parent, top-down.
pub const DEFAULT_PARENT: [&str; 15] = [
    "Green", "Red", "Black", "Blue", "Black", "Green", "Red", "Green", "Blue", "Green", "Blue",
    "Green", "Blue", "Red", "Blue",
];

impl Default for SyntheticScenario {
    fn default() -> Self {
        let parent = ParentSequence::new(DEFAULT_PARENT.iter().map(|&c| Facies::from(c)).collect())
            .expect("non-empty")
            .with_color(Facies::from("Black"), "black")
            .with_color(Facies::from("Red"), "red")
            .with_color(Facies::from("Blue"), "blue")
            .with_color(Facies::from("Green"), "green");
        let mut truth = BTreeMap::new();
        for (code, p, alpha) in [
            ("Black", 0.3, 20.0),
            ("Red", 0.8, 20.0),
            ("Blue", 0.3, 10.0),
            ("Green", 0.8, 10.0),
        ] {
            truth.insert(
                Facies::from(code),
                FaciesTruth {
                    p,
                    mu: 1.0,
                    beta: 1.0,
                    alpha,
                },
            );
        }
        SyntheticScenario {
            parent,
            truth,
            nu: Smoothness::ThreeHalves,
            fixed_locations: vec![
                Point::new(25.0, 25.0),
                Point::new(50.0, 50.0),
                Point::new(75.0, 75.0),
            ],
            n_boreholes: 12,
            domain: (0.0, 100.0),
            ground_level: 0.0,
            seed: 0,
        }
    }
}

/// Generated boreholes with the true thickness vectors and parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticData {
    pub boreholes: Vec<BoreholeObservation>,
    pub truth: Vec<AugmentedConfiguration>,
    pub params: Vec<LayerParams>,
}

impl SyntheticScenario {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Per-layer parameters in parent order.
    pub fn layer_params(&self) -> Result<Vec<LayerParams>> {
        self.parent
            .layers()
            .iter()
            .map(|f| {
                let t = self.truth.get(f).ok_or_else(|| {
                    Error::InvalidConfiguration(format!("no true parameters for facies {f}"))
                })?;
                LayerParams::new(t.p, t.mu, t.beta, t.alpha, self.nu)
            })
            .collect()
    }

    /// Fixed locations first, then uniform draws in the domain.
    pub fn locations(&self) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (lo, hi) = self.domain;
        let mut out: Vec<Point> = self
            .fixed_locations
            .iter()
            .take(self.n_boreholes)
            .cloned()
            .collect();
        while out.len() < self.n_boreholes {
            out.push(Point::new(rng.random_range(lo..hi), rng.random_range(lo..hi)));
        }
        out
    }

    /// Simulates every layer directly at the borehole locations and records
    /// both the true thickness vectors and their observed images. True
    /// thicknesses below the observation floor are set to zero.
    pub fn generate(&self) -> Result<SyntheticData> {
        let params = self.layer_params()?;
        let locations = self.locations();
        let n = locations.len();
        let mut z = vec![vec![0.0; params.len()]; n];
        for (j, th) in params.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            rng.set_stream(j as u64 + 1);
            let sampler = FieldSampler::new(locations.clone(), th.matern(), FIELD_BUDGET)?;
            let w = sampler.unconditional(&mut rng);
            let tau = th.tau();
            for i in 0..n {
                if w[i] > tau {
                    let t = th.mu() * (w[i] - tau).powf(th.beta());
                    if t >= MIN_THICKNESS {
                        z[i][j] = t;
                    }
                }
            }
        }
        let mut boreholes = Vec::with_capacity(n);
        let mut truth = Vec::with_capacity(n);
        for (i, (zi, loc)) in z.into_iter().zip(&locations).enumerate() {
            let id = format!("S{:02}", i + 1);
            let cfg = AugmentedConfiguration::new(id.clone(), zi)?;
            let records = observe(&cfg, &self.parent)?;
            boreholes.push(BoreholeObservation::new(id, *loc, self.ground_level, records)?);
            truth.push(cfg);
        }
        Ok(SyntheticData {
            boreholes,
            truth,
            params,
        })
    }
}

/// Convenience wrapper for [`SyntheticScenario::generate`].
pub fn generate(scenario: &SyntheticScenario) -> Result<SyntheticData> {
    scenario.generate()
}

/// Fraction of (borehole, layer) slots of each facies with positive true thickness.
pub fn presence_by_facies(parent: &ParentSequence, truth: &[AugmentedConfiguration]) -> BTreeMap<Facies, f64> {
    parent
        .alphabet()
        .into_iter()
        .map(|f| {
            let layers = parent.layers_of(&f);
            let slots = layers.len() * truth.len();
            let present = truth
                .iter()
                .map(|c| layers.iter().filter(|&&j| c.thickness()[j] > 0.0).count())
                .sum::<usize>();
            (f, present as f64 / slots.max(1) as f64)
        })
        .collect()
}
