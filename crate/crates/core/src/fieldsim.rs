//! Unconditional and conditional simulation of stacked layers on a grid or a
//! transect, and cross-section extraction.
//!
//! Depths are positive downward from a datum: the ground surface sits at
//! `T₀ = −ground_level` and the base of layer `j` at `T_j = T_{j−1} + Z_j`.

use std::collections::HashMap;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gauss::{self, FieldSampler, GibbsSchedule, TruncatedMvn, FIELD_BUDGET};
use crate::likelihood::{phi_inverse, LayerParams};
use crate::sequence::{AugmentedConfiguration, ParentSequence, Point};

/// Ground elevation over the simulation nodes.
#[derive(Clone, Debug, PartialEq)]
pub enum GroundLevel {
    Constant(f64),
    /// One value per grid node, in node order.
    PerNode(Vec<f64>),
    /// Inverse-distance weighting of borehole ground levels with this power.
    InverseDistance { power: f64 },
}

/// Layout of the simulation nodes.
#[derive(Clone, Debug, PartialEq)]
pub enum Geometry {
    /// `nx × ny` nodes, x varying fastest.
    Grid {
        origin: Point,
        dx: f64,
        dy: f64,
        nx: usize,
        ny: usize,
    },
    /// `steps + 1` equally spaced nodes from `start` to `end`.
    Transect { start: Point, end: Point, steps: usize },
}

/// Simulation nodes with their ground level.
#[derive(Clone, Debug, PartialEq)]
pub struct SimGrid {
    geometry: Geometry,
    nodes: Vec<Point>,
    pub ground: GroundLevel,
}

impl SimGrid {
    pub fn rectangular(origin: Point, dx: f64, dy: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(dx > 0.0) || !(dy > 0.0) {
            return Err(Error::param("spacing", dx.min(dy), "must be positive"));
        }
        if nx == 0 || ny == 0 {
            return Err(Error::param("dims", 0.0, "grid needs at least one node"));
        }
        let nodes = (0..ny)
            .flat_map(|j| {
                (0..nx).map(move |i| Point::new(origin.x + i as f64 * dx, origin.y + j as f64 * dy))
            })
            .collect();
        Ok(SimGrid {
            geometry: Geometry::Grid {
                origin,
                dx,
                dy,
                nx,
                ny,
            },
            nodes,
            ground: GroundLevel::Constant(0.0),
        })
    }

    pub fn transect(start: Point, end: Point, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::param("steps", 0.0, "transect needs at least one step"));
        }
        if start.distance(&end) == 0.0 {
            return Err(Error::param("transect", 0.0, "end points coincide"));
        }
        let nodes = (0..=steps)
            .map(|k| {
                let t = k as f64 / steps as f64;
                Point::new(
                    start.x + t * (end.x - start.x),
                    start.y + t * (end.y - start.y),
                )
            })
            .collect();
        Ok(SimGrid {
            geometry: Geometry::Transect { start, end, steps },
            nodes,
            ground: GroundLevel::Constant(0.0),
        })
    }

    pub fn with_ground(mut self, ground: GroundLevel) -> Result<Self> {
        if let GroundLevel::PerNode(v) = &ground {
            if v.len() != self.nodes.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.nodes.len(),
                    got: v.len(),
                });
            }
        }
        self.ground = ground;
        Ok(self)
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Distance along the transect of each node (x coordinate for grids).
    pub fn stations(&self) -> Vec<f64> {
        match &self.geometry {
            Geometry::Transect { start, .. } => self.nodes.iter().map(|p| start.distance(p)).collect(),
            Geometry::Grid { .. } => self.nodes.iter().map(|p| p.x).collect(),
        }
    }

    /// Index of the node that a borehole at `p` conditions: the nearest node
    /// when it lies within half a cell.
    fn snap(&self, p: &Point) -> Option<usize> {
        match &self.geometry {
            Geometry::Grid {
                origin,
                dx,
                dy,
                nx,
                ny,
            } => {
                let fi = ((p.x - origin.x) / dx).round();
                let fj = ((p.y - origin.y) / dy).round();
                if fi < 0.0 || fj < 0.0 || fi >= *nx as f64 || fj >= *ny as f64 {
                    return None;
                }
                let (i, j) = (fi as usize, fj as usize);
                let node = self.nodes[j * nx + i];
                let ok = (node.x - p.x).abs() <= 0.5 * dx && (node.y - p.y).abs() <= 0.5 * dy;
                ok.then_some(j * nx + i)
            }
            Geometry::Transect { steps, .. } => {
                let step = self.nodes[0].distance(&self.nodes[1.min(*steps)]);
                let (k, d) = self
                    .nodes
                    .iter()
                    .enumerate()
                    .map(|(k, q)| (k, q.distance(p)))
                    .min_by(|a, b| a.1.total_cmp(&b.1))?;
                (d <= 0.5 * step).then_some(k)
            }
        }
    }

    /// Ground elevation at each node, interpolating borehole ground levels
    /// when the policy asks for it.
    pub fn ground_levels(&self, boreholes: &[(Point, f64)]) -> Result<Vec<f64>> {
        match &self.ground {
            GroundLevel::Constant(g) => Ok(vec![*g; self.nodes.len()]),
            GroundLevel::PerNode(v) => Ok(v.clone()),
            GroundLevel::InverseDistance { power } => {
                if boreholes.is_empty() {
                    return Err(Error::InvalidConfiguration(
                        "inverse-distance ground level needs at least one borehole".into(),
                    ));
                }
                Ok(self
                    .nodes
                    .iter()
                    .map(|p| {
                        let mut num = 0.0;
                        let mut den = 0.0;
                        for (q, g) in boreholes {
                            let d = p.distance(q);
                            if d < 1e-12 {
                                return *g;
                            }
                            let w = d.powf(-power);
                            num += w * g;
                            den += w;
                        }
                        num / den
                    })
                    .collect())
            }
        }
    }
}

/// Simulated thickness of every layer at every grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerStack {
    pub nodes: Vec<Point>,
    /// Ground surface depth `T₀` per node.
    pub top: Vec<f64>,
    /// `thickness[j][i]` is layer `j` at node `i`.
    pub thickness: Vec<Vec<f64>>,
    /// `at_boreholes[j][k]` is layer `j` at the point conditioning borehole
    /// `k` (empty for unconditional stacks).
    pub at_boreholes: Vec<Vec<f64>>,
}

impl LayerStack {
    pub fn layers(&self) -> usize {
        self.thickness.len()
    }

    /// Base depth of layer `j` at each node.
    pub fn base(&self, j: usize) -> Vec<f64> {
        let mut t = self.top.clone();
        for layer in &self.thickness[..=j] {
            for (ti, z) in t.iter_mut().zip(layer) {
                *ti += z;
            }
        }
        t
    }

    /// Depth surfaces `T₀, T₁, …, T_M` per node.
    pub fn surfaces(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.thickness.len() + 1);
        let mut t = self.top.clone();
        out.push(t.clone());
        for layer in &self.thickness {
            for (ti, z) in t.iter_mut().zip(layer) {
                *ti += z;
            }
            out.push(t.clone());
        }
        out
    }
}

fn layer_rng(seed: u64, layer: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(layer as u64 + 1);
    rng
}

fn thickness_of(w: f64, params: &LayerParams, tau: f64) -> f64 {
    if w > tau {
        params.mu() * (w - tau).powf(params.beta())
    } else {
        0.0
    }
}

/// Reusable simulator: caches one Cholesky factor per distinct covariance.
pub struct Simulator {
    grid: SimGrid,
    points: Vec<Point>,
    budget: usize,
    cache: HashMap<(u8, u64), FieldSampler>,
}

impl Simulator {
    pub fn new(grid: SimGrid) -> Self {
        Self::with_budget(grid, FIELD_BUDGET)
    }

    pub fn with_budget(grid: SimGrid, budget: usize) -> Self {
        let points = grid.nodes().to_vec();
        Simulator {
            grid,
            points,
            budget,
            cache: HashMap::new(),
        }
    }

    pub fn grid(&self) -> &SimGrid {
        &self.grid
    }

    /// Maps boreholes to simulation points, appending the ones that do not
    /// snap onto a free grid node. Changing the point set drops the cache.
    fn place(&mut self, locations: &[Point]) -> Result<Vec<usize>> {
        let mut points = self.grid.nodes().to_vec();
        let mut used = vec![false; points.len()];
        let mut idx = Vec::with_capacity(locations.len());
        for p in locations {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(Error::InvalidConfiguration(format!(
                    "borehole location ({}, {}) is not finite",
                    p.x, p.y
                )));
            }
            match self.grid.snap(p) {
                Some(k) if !used[k] => {
                    used[k] = true;
                    idx.push(k);
                }
                _ => {
                    points.push(*p);
                    idx.push(points.len() - 1);
                }
            }
        }
        if points != self.points {
            self.points = points;
            self.cache.clear();
        }
        Ok(idx)
    }

    fn sampler(&mut self, params: &LayerParams) -> Result<&FieldSampler> {
        let key = (params.nu() as u8, params.range().to_bits());
        if !self.cache.contains_key(&key) {
            let s = FieldSampler::new(self.points.clone(), params.matern(), self.budget)?;
            self.cache.insert(key, s);
        }
        Ok(&self.cache[&key])
    }

    fn ground(&self, boreholes: &[(Point, f64)]) -> Result<Vec<f64>> {
        Ok(self
            .grid
            .ground_levels(boreholes)?
            .into_iter()
            .map(|g| 0.0 - g)
            .collect())
    }

    /// Independent layers: `Z_j = φ_j(W_j − τ_j)` where `W_j > τ_j`, else 0.
    pub fn unconditional(&mut self, params: &[LayerParams], seed: u64) -> Result<LayerStack> {
        self.place(&[])?;
        let n = self.grid.len();
        let mut thickness = Vec::with_capacity(params.len());
        for (j, th) in params.iter().enumerate() {
            let mut rng = layer_rng(seed, j);
            let tau = th.tau();
            let w = self.sampler(th)?.unconditional(&mut rng);
            thickness.push(w.iter().take(n).map(|&w| thickness_of(w, th, tau)).collect());
        }
        Ok(LayerStack {
            nodes: self.grid.nodes().to_vec(),
            top: self.ground(&[])?,
            thickness,
            at_boreholes: Vec::new(),
        })
    }

    /// Simulation honouring the given thickness vectors at the borehole
    /// locations. `ground` holds each borehole's ground level, used only by the
    /// inverse-distance ground policy.
    pub fn conditional(
        &mut self,
        params: &[LayerParams],
        configs: &[AugmentedConfiguration],
        locations: &[Point],
        ground: &[f64],
        seed: u64,
    ) -> Result<LayerStack> {
        if configs.len() != locations.len() {
            return Err(Error::DimensionMismatch {
                expected: locations.len(),
                got: configs.len(),
            });
        }
        if let Some(c) = configs.iter().find(|c| c.len() != params.len()) {
            return Err(Error::DimensionMismatch {
                expected: params.len(),
                got: c.len(),
            });
        }
        let nodes = self.place(locations)?;
        let n = self.grid.len();
        let mut thickness = Vec::with_capacity(params.len());
        let mut at_boreholes = Vec::with_capacity(params.len());
        for (j, th) in params.iter().enumerate() {
            let layer = self
                .conditional_layer(j, th, configs, locations, &nodes, seed)
                .map_err(|e| crate::likelihood::with_layer(e, j))?;
            at_boreholes.push(nodes.iter().map(|&k| layer[k]).collect());
            thickness.push(layer.into_iter().take(n).collect());
        }
        let bh: Vec<(Point, f64)> = locations
            .iter()
            .cloned()
            .zip(ground.iter().cloned().chain(std::iter::repeat(0.0)))
            .collect();
        let top = self.ground(&bh)?;
        Ok(LayerStack {
            nodes: self.grid.nodes().to_vec(),
            top,
            thickness,
            at_boreholes,
        })
    }

    fn conditional_layer(
        &mut self,
        j: usize,
        th: &LayerParams,
        configs: &[AugmentedConfiguration],
        locations: &[Point],
        nodes: &[usize],
        seed: u64,
    ) -> Result<Vec<f64>> {
        let mut rng = layer_rng(seed, j);
        let tau = th.tau();
        let spec = th.matern();
        let z: Vec<f64> = configs.iter().map(|c| c.thickness()[j]).collect();
        let pos: Vec<usize> = (0..z.len()).filter(|&i| z[i] > 0.0).collect();
        let zer: Vec<usize> = (0..z.len()).filter(|&i| z[i] == 0.0).collect();

        // latent values at the positive boreholes
        let mut w = vec![0.0; z.len()];
        for &i in &pos {
            w[i] = phi_inverse(z[i], th.mu(), th.beta())? + tau;
        }
        // latent values at the empty boreholes, below τ given the positives
        if !zer.is_empty() {
            let joint = gauss::correlation_matrix(locations, &spec);
            let wp = DVector::from_iterator(pos.len(), pos.iter().map(|&i| w[i]));
            let cond = gauss::condition(&joint, &pos, &wp, &zer)?;
            let tmvn = TruncatedMvn::new(cond.mean, &cond.cov, tau, GibbsSchedule::default(), &mut rng)?;
            let draw = tmvn.draw(&mut rng);
            for (k, &i) in zer.iter().enumerate() {
                w[i] = draw[k];
            }
        }
        let field = self.sampler(th)?.conditional(nodes, &w, &mut rng)?;
        let mut out: Vec<f64> = field.iter().map(|&v| thickness_of(v, th, tau)).collect();
        for (&k, &zi) in nodes.iter().zip(&z) {
            out[k] = zi;
        }
        Ok(out)
    }
}

/// Single unconditional realization on `grid`.
pub fn simulate_unconditional(grid: &SimGrid, params: &[LayerParams], seed: u64) -> Result<LayerStack> {
    Simulator::new(grid.clone()).unconditional(params, seed)
}

/// Single realization honouring the configurations at the borehole locations.
pub fn simulate_conditional(
    grid: &SimGrid,
    params: &[LayerParams],
    configs: &[AugmentedConfiguration],
    locations: &[Point],
    ground: &[f64],
    seed: u64,
) -> Result<LayerStack> {
    Simulator::new(grid.clone()).conditional(params, configs, locations, ground, seed)
}

/// Content of one raster cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cell {
    /// Above the ground surface.
    Above,
    /// Inside parent layer `j`.
    Layer(usize),
    /// Below the last simulated layer.
    Undefined,
}

/// Vertical section along a line of stations.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossSection {
    pub stations: Vec<f64>,
    /// Depth of each raster row centre, increasing downward.
    pub depths: Vec<f64>,
    /// `cells[row][column]`.
    pub cells: Vec<Vec<Cell>>,
    /// `boundaries[j][column]` is `T_j`, for `j = 0..=M`.
    pub boundaries: Vec<Vec<f64>>,
    /// Thickness of every layer at every column.
    pub thickness: Vec<Vec<f64>>,
}

/// Extracts a section along `transect` from `stack`, taking the nearest stack
/// node for each station and `rows` equal depth cells between the shallowest
/// surface and the deepest base.
pub fn cross_section(stack: &LayerStack, transect: &SimGrid, rows: usize) -> Result<CrossSection> {
    if rows == 0 {
        return Err(Error::param("rows", 0.0, "need at least one raster row"));
    }
    let stations = transect.stations();
    let cols: Vec<usize> = transect
        .nodes()
        .iter()
        .map(|p| {
            stack
                .nodes
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.distance(p).total_cmp(&b.1.distance(p)))
                .map(|(i, _)| i)
                .ok_or_else(|| Error::InvalidConfiguration("empty stack".into()))
        })
        .collect::<Result<_>>()?;
    let surfaces = stack.surfaces();
    let boundaries: Vec<Vec<f64>> = surfaces
        .iter()
        .map(|s| cols.iter().map(|&c| s[c]).collect())
        .collect();
    let thickness: Vec<Vec<f64>> = stack
        .thickness
        .iter()
        .map(|z| cols.iter().map(|&c| z[c]).collect())
        .collect();
    let lo = boundaries[0].iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = boundaries
        .last()
        .expect("at least the ground surface")
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let dz = span / rows as f64;
    let depths: Vec<f64> = (0..rows).map(|r| lo + (r as f64 + 0.5) * dz).collect();
    let m = stack.layers();
    let cells = depths
        .iter()
        .map(|&d| {
            (0..cols.len())
                .map(|c| {
                    if d < boundaries[0][c] {
                        return Cell::Above;
                    }
                    (0..m)
                        .find(|&j| d >= boundaries[j][c] && d < boundaries[j + 1][c])
                        .map_or(Cell::Undefined, Cell::Layer)
                })
                .collect()
        })
        .collect();
    Ok(CrossSection {
        stations,
        depths,
        cells,
        boundaries,
        thickness,
    })
}

impl CrossSection {
    /// Facies code of a cell, `None` above ground or below the last layer.
    pub fn facies<'p>(&self, parent: &'p ParentSequence, row: usize, col: usize) -> Option<&'p str> {
        match self.cells[row][col] {
            Cell::Layer(j) => Some(parent.facies(j).as_str()),
            _ => None,
        }
    }
}
