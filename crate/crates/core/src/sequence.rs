//! Parent sequences, borehole observations and augmented configurations.
//!
//! A borehole records a top-down list of facies runs with their thicknesses.
//! The regional parent sequence lists every layer that can occur; an augmented
//! configuration assigns a thickness (possibly zero) to each parent layer at one
//! borehole. The observation map [`observe`] drops empty layers and merges
//! adjacent runs of identical facies, so several configurations usually map to
//! the same observed record list. The Split/Merge/Displace moves walk between
//! them without changing the observed image.
//!
//! Thicknesses are stored on a dyadic lattice of [`THICKNESS_QUANTUM`] metres.
//! Sums and differences of lattice values are exact in `f64`, so the observed
//! image of a configuration is bit-identical under any sequence of moves.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Resolution of stored thicknesses, 2^-32 m.
pub const THICKNESS_QUANTUM: f64 = 1.0 / 4_294_967_296.0;

/// Smallest admissible observed thickness. Anything below is rejected at ingestion.
pub const MIN_THICKNESS: f64 = 1e-9;

/// Largest admissible thickness of a single record.
pub const MAX_THICKNESS: f64 = 1e5;

/// Rounds a thickness onto the storage lattice.
#[inline]
pub fn snap_thickness(z: f64) -> f64 {
    (z * 4_294_967_296.0).round() * THICKNESS_QUANTUM
}

/// A lithofacies code such as `Blue` or `L`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Facies(String);

impl Facies {
    pub fn new(code: impl Into<String>) -> Self {
        Facies(code.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Facies {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Facies {
    fn from(s: &str) -> Self {
        Facies::new(s)
    }
}

/// Parses a whitespace-separated list such as `"Blue Red Blue"`.
pub fn facies_list(codes: &str) -> Vec<Facies> {
    codes.split_whitespace().map(Facies::from).collect()
}

/// Planar location in km.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// The regional top-down ordering of layers.
#[derive(Clone, Debug, PartialEq)]
pub struct ParentSequence {
    layers: Vec<Facies>,
    colors: BTreeMap<Facies, String>,
}

impl ParentSequence {
    pub fn new(layers: Vec<Facies>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidConfiguration(
                "parent sequence must contain at least one layer".into(),
            ));
        }
        Ok(ParentSequence {
            layers,
            colors: BTreeMap::new(),
        })
    }

    pub fn parse(codes: &str) -> Result<Self> {
        Self::new(facies_list(codes))
    }

    /// Attaches a display color to a facies code.
    pub fn with_color(mut self, facies: Facies, color: impl Into<String>) -> Self {
        self.colors.insert(facies, color.into());
        self
    }

    pub fn color(&self, facies: &Facies) -> Option<&str> {
        self.colors.get(facies).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn layers(&self) -> &[Facies] {
        &self.layers
    }

    pub fn facies(&self, layer: usize) -> &Facies {
        &self.layers[layer]
    }

    /// Distinct facies in order of first appearance.
    pub fn alphabet(&self) -> Vec<Facies> {
        let mut out: Vec<Facies> = Vec::new();
        for f in &self.layers {
            if !out.contains(f) {
                out.push(f.clone());
            }
        }
        out
    }

    /// Indices of the layers carrying `facies`.
    pub fn layers_of(&self, facies: &Facies) -> Vec<usize> {
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, f)| *f == facies)
            .map(|(j, _)| j)
            .collect()
    }
}

/// One observed run of a single facies.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub facies: Facies,
    pub thickness: f64,
}

impl Record {
    pub fn new(facies: impl Into<Facies>, thickness: f64) -> Self {
        Record {
            facies: facies.into(),
            thickness,
        }
    }
}

impl From<(&str, f64)> for Record {
    fn from((f, z): (&str, f64)) -> Self {
        Record::new(f, z)
    }
}

/// Observed borehole log: top-down facies runs with positive thicknesses.
#[derive(Clone, Debug, PartialEq)]
pub struct BoreholeObservation {
    pub id: String,
    pub location: Point,
    /// Ground elevation in m.
    pub ground_level: f64,
    records: Vec<Record>,
}

impl BoreholeObservation {
    /// Validates and snaps the records. Thicknesses below [`MIN_THICKNESS`]
    /// and consecutive records of the same facies are rejected.
    pub fn new(
        id: impl Into<String>,
        location: Point,
        ground_level: f64,
        records: Vec<Record>,
    ) -> Result<Self> {
        let id = id.into();
        let mut snapped = Vec::with_capacity(records.len());
        for (k, r) in records.into_iter().enumerate() {
            if !r.thickness.is_finite() || r.thickness < MIN_THICKNESS {
                return Err(Error::InvalidObservation(format!(
                    "borehole `{id}` record {k}: thickness {} must be at least {MIN_THICKNESS:e} m",
                    r.thickness
                )));
            }
            if r.thickness > MAX_THICKNESS {
                return Err(Error::InvalidObservation(format!(
                    "borehole `{id}` record {k}: thickness {} exceeds {MAX_THICKNESS} m",
                    r.thickness
                )));
            }
            if let Some(prev) = snapped.last() {
                let prev: &Record = prev;
                if prev.facies == r.facies {
                    return Err(Error::InvalidObservation(format!(
                        "borehole `{id}` records {} and {k} repeat facies {}; adjacent runs must be merged",
                        k - 1,
                        r.facies
                    )));
                }
            }
            snapped.push(Record {
                facies: r.facies,
                thickness: snap_thickness(r.thickness),
            });
        }
        Ok(BoreholeObservation {
            id,
            location,
            ground_level,
            records: snapped,
        })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn facies_sequence(&self) -> Vec<Facies> {
        self.records.iter().map(|r| r.facies.clone()).collect()
    }

    pub fn total_thickness(&self) -> f64 {
        self.records.iter().map(|r| r.thickness).sum()
    }
}

/// Complete thickness vector over the parent layers at one borehole.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedConfiguration {
    pub borehole_id: String,
    thickness: Vec<f64>,
}

impl AugmentedConfiguration {
    /// Builds a configuration, snapping every thickness onto the lattice.
    pub fn new(borehole_id: impl Into<String>, thickness: Vec<f64>) -> Result<Self> {
        let borehole_id = borehole_id.into();
        let mut z = thickness;
        for (j, v) in z.iter_mut().enumerate() {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::InvalidConfiguration(format!(
                    "borehole `{borehole_id}` layer {j}: thickness {v} must be finite and nonnegative"
                )));
            }
            *v = snap_thickness(*v);
        }
        Ok(AugmentedConfiguration {
            borehole_id,
            thickness: z,
        })
    }

    pub fn thickness(&self) -> &[f64] {
        &self.thickness
    }

    pub fn len(&self) -> usize {
        self.thickness.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thickness.is_empty()
    }

    /// Sum over layers; exact on the storage lattice.
    pub fn total(&self) -> f64 {
        self.thickness.iter().sum()
    }

    /// Layers with positive thickness.
    pub fn support(&self) -> Vec<usize> {
        self.thickness
            .iter()
            .enumerate()
            .filter(|(_, z)| **z > 0.0)
            .map(|(j, _)| j)
            .collect()
    }

    /// Top-down depth of the base of each layer, starting from `top`.
    pub fn depths(&self, top: f64) -> Vec<f64> {
        self.thickness
            .iter()
            .scan(top, |t, z| {
                *t += z;
                Some(*t)
            })
            .collect()
    }
}

/// True iff `observed` is an order-preserving (not necessarily contiguous)
/// subsequence of the parent.
pub fn is_compatible(observed: &[Facies], parent: &ParentSequence) -> bool {
    let mut layers = parent.layers().iter();
    observed.iter().all(|f| layers.any(|p| p == f))
}

/// The observation map: drop empty layers, then merge adjacent runs of the
/// same facies by summing their thickness.
pub fn observe(cfg: &AugmentedConfiguration, parent: &ParentSequence) -> Result<Vec<Record>> {
    if cfg.len() != parent.len() {
        return Err(Error::DimensionMismatch {
            expected: parent.len(),
            got: cfg.len(),
        });
    }
    let mut out: Vec<Record> = Vec::new();
    for (j, &z) in cfg.thickness.iter().enumerate() {
        if z < 0.0 || !z.is_finite() {
            return Err(Error::InvalidConfiguration(format!(
                "layer {j} has invalid thickness {z}"
            )));
        }
        if z == 0.0 {
            continue;
        }
        let facies = parent.facies(j);
        match out.last_mut() {
            Some(last) if &last.facies == facies => last.thickness += z,
            _ => out.push(Record {
                facies: facies.clone(),
                thickness: z,
            }),
        }
    }
    Ok(out)
}

/// Greedy leftmost alignment: each record goes entirely to the earliest
/// unused parent layer of its facies that keeps the order.
pub fn initial_augmentation(
    obs: &BoreholeObservation,
    parent: &ParentSequence,
) -> Result<AugmentedConfiguration> {
    let mut z = vec![0.0; parent.len()];
    let mut next = 0;
    for (k, rec) in obs.records().iter().enumerate() {
        let found = (next..parent.len()).find(|&j| parent.facies(j) == &rec.facies);
        match found {
            Some(j) => {
                z[j] = rec.thickness;
                next = j + 1;
            }
            None => {
                return Err(Error::Incompatible {
                    borehole: obs.id.clone(),
                    position: k,
                    facies: rec.facies.to_string(),
                })
            }
        }
    }
    AugmentedConfiguration::new(obs.id.clone(), z)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MoveKind {
    Split,
    Merge,
    Displace,
}

impl MoveKind {
    pub const ALL: [MoveKind; 3] = [MoveKind::Split, MoveKind::Merge, MoveKind::Displace];

    pub fn name(self) -> &'static str {
        match self {
            MoveKind::Split => "split",
            MoveKind::Merge => "merge",
            MoveKind::Displace => "displace",
        }
    }
}

/// A feasible move location, before the caller has chosen a split point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MoveSite {
    /// Share the thickness of `source` with the empty layer `target`.
    Split { source: usize, target: usize },
    /// Move all of `from` into `into`, emptying `from`.
    Merge { into: usize, from: usize },
    /// Move the boundary between two adjacent positive layers of one facies.
    Displace { upper: usize, lower: usize },
}

impl MoveSite {
    pub fn kind(&self) -> MoveKind {
        match self {
            MoveSite::Split { .. } => MoveKind::Split,
            MoveSite::Merge { .. } => MoveKind::Merge,
            MoveSite::Displace { .. } => MoveKind::Displace,
        }
    }

    /// The two layers involved, lower index first.
    pub fn layers(&self) -> (usize, usize) {
        let (a, b) = match *self {
            MoveSite::Split { source, target } => (source, target),
            MoveSite::Merge { into, from } => (into, from),
            MoveSite::Displace { upper, lower } => (upper, lower),
        };
        (a.min(b), a.max(b))
    }

    /// Width of the open interval the split point is drawn from
    /// (`None` for merges).
    pub fn interval(&self, cfg: &AugmentedConfiguration) -> Option<f64> {
        let z = cfg.thickness();
        match *self {
            MoveSite::Split { source, .. } => Some(z[source]),
            MoveSite::Merge { .. } => None,
            MoveSite::Displace { upper, lower } => Some(z[upper] + z[lower]),
        }
    }

    /// Completes the site with a split point. For `Split`, `split` is the
    /// thickness kept by the source; for `Displace`, the new thickness of the
    /// upper layer. Ignored for `Merge`.
    pub fn with_split(self, split: f64) -> Move {
        match self {
            MoveSite::Split { source, target } => Move::Split {
                source,
                target,
                keep: split,
            },
            MoveSite::Merge { into, from } => Move::Merge { into, from },
            MoveSite::Displace { upper, lower } => Move::Displace {
                upper,
                lower,
                upper_thickness: split,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Move {
    Split {
        source: usize,
        target: usize,
        keep: f64,
    },
    Merge {
        into: usize,
        from: usize,
    },
    Displace {
        upper: usize,
        lower: usize,
        upper_thickness: f64,
    },
}

impl Move {
    pub fn kind(&self) -> MoveKind {
        self.site().kind()
    }

    pub fn site(&self) -> MoveSite {
        match *self {
            Move::Split { source, target, .. } => MoveSite::Split { source, target },
            Move::Merge { into, from } => MoveSite::Merge { into, from },
            Move::Displace { upper, lower, .. } => MoveSite::Displace { upper, lower },
        }
    }
}

/// Lists every feasible move of the requested kind. Two layers can exchange
/// thickness only if they share a facies and every layer between them is
/// empty, so the observed image cannot change.
pub fn enumerate_moves(
    cfg: &AugmentedConfiguration,
    parent: &ParentSequence,
    kind: MoveKind,
) -> Vec<MoveSite> {
    let z = cfg.thickness();
    let m = z.len().min(parent.len());
    let mut out = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            if parent.facies(b) == parent.facies(a) {
                let (pa, pb) = (z[a] > 0.0, z[b] > 0.0);
                match kind {
                    MoveKind::Split if pa != pb => {
                        let (source, target) = if pa { (a, b) } else { (b, a) };
                        out.push(MoveSite::Split { source, target });
                    }
                    MoveKind::Merge if pa && pb => {
                        out.push(MoveSite::Merge { into: a, from: b });
                        out.push(MoveSite::Merge { into: b, from: a });
                    }
                    MoveKind::Displace if pa && pb => {
                        out.push(MoveSite::Displace { upper: a, lower: b });
                    }
                    _ => {}
                }
            }
            if z[b] > 0.0 {
                break;
            }
        }
    }
    out
}

fn check_pair(
    cfg: &AugmentedConfiguration,
    parent: &ParentSequence,
    a: usize,
    b: usize,
) -> Result<()> {
    let m = parent.len();
    if cfg.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: cfg.len(),
        });
    }
    if a == b || a >= m || b >= m {
        return Err(Error::InfeasibleMove(format!(
            "layer pair ({a}, {b}) is invalid for a parent of length {m}"
        )));
    }
    if parent.facies(a) != parent.facies(b) {
        return Err(Error::InfeasibleMove(format!(
            "layers {a} and {b} carry different facies"
        )));
    }
    let (lo, hi) = (a.min(b), a.max(b));
    if let Some(j) = (lo + 1..hi).find(|&j| cfg.thickness[j] > 0.0) {
        return Err(Error::InfeasibleMove(format!(
            "layer {j} between {lo} and {hi} is not empty"
        )));
    }
    Ok(())
}

/// Snaps `split` into the interior of `(0, total)`, keeping both parts on
/// the lattice so that they add up to `total` exactly.
fn split_point(split: f64, total: f64) -> Result<f64> {
    if !(split > 0.0 && split < total) {
        return Err(Error::InfeasibleMove(format!(
            "split point {split} is outside the open interval (0, {total})"
        )));
    }
    if total < 2.0 * THICKNESS_QUANTUM {
        return Err(Error::InfeasibleMove(format!(
            "thickness {total} is too small to split"
        )));
    }
    Ok(snap_thickness(split).clamp(THICKNESS_QUANTUM, total - THICKNESS_QUANTUM))
}

/// Applies a move and verifies that the observed image is unchanged.
pub fn apply_move(
    cfg: &AugmentedConfiguration,
    parent: &ParentSequence,
    mv: &Move,
) -> Result<AugmentedConfiguration> {
    let mut next = cfg.clone();
    let z = &mut next.thickness;
    match *mv {
        Move::Split {
            source,
            target,
            keep,
        } => {
            check_pair(cfg, parent, source, target)?;
            if !(z[source] > 0.0 && z[target] == 0.0) {
                return Err(Error::InfeasibleMove(format!(
                    "split needs layer {source} positive and layer {target} empty"
                )));
            }
            let total = z[source];
            let keep = split_point(keep, total)?;
            z[source] = keep;
            z[target] = total - keep;
        }
        Move::Merge { into, from } => {
            check_pair(cfg, parent, into, from)?;
            if !(z[into] > 0.0 && z[from] > 0.0) {
                return Err(Error::InfeasibleMove(format!(
                    "merge needs layers {into} and {from} both positive"
                )));
            }
            z[into] += z[from];
            z[from] = 0.0;
        }
        Move::Displace {
            upper,
            lower,
            upper_thickness,
        } => {
            check_pair(cfg, parent, upper, lower)?;
            if !(z[upper] > 0.0 && z[lower] > 0.0) {
                return Err(Error::InfeasibleMove(format!(
                    "displace needs layers {upper} and {lower} both positive"
                )));
            }
            let total = z[upper] + z[lower];
            let u = split_point(upper_thickness, total)?;
            z[upper] = u;
            z[lower] = total - u;
        }
    }
    if observe(&next, parent)? != observe(cfg, parent)? {
        return Err(Error::InfeasibleMove(format!(
            "{mv:?} changes the observed sequence"
        )));
    }
    Ok(next)
}
