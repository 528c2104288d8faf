//! Flat `key = value` run configuration shared by the command-line tools.
//!
//! ```text
//! # inputs, relative to this file
//! boreholes = boreholes.csv
//! parent = parent.txt
//! output = out
//!
//! nu = 3/2
//! nu.Red = 1/2
//! tie_by_facies = false
//! priors = 0.01 3 0.01 10        # eps_alpha alpha0 eps_mu mu0
//! widths = 0.15 0.4 0.4 3        # p mu beta alpha
//! move_probs = 0.3333 0.3333 0.3334
//! n_iter = 30000
//! burn_in = 2500
//! thin = 50
//! seed = 1
//! cdf_tol = 1e-3
//! audit_every = 1000
//! initial_range = 10
//!
//! grid = 0 0 1 1 101 101         # x0 y0 dx dy nx ny
//! transect = 0 0 100 100 200     # x0 y0 x1 y1 steps
//! ground = idw 2                 # or: constant <metres>
//! section_rows = 200
//! params.Red = 0.8 1 1 20        # p mu beta alpha
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fieldsim::{GroundLevel, SimGrid};
use crate::gauss::Smoothness;
use crate::likelihood::LayerParams;
use crate::mcmc::{ChainSettings, PriorSpec, ProposalSpec};
use crate::sequence::{Facies, ParentSequence, Point};

/// Grid specification as written in the file.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub origin: Point,
    pub dx: f64,
    pub dy: f64,
    pub nx: usize,
    pub ny: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransectSpec {
    pub start: Point,
    pub end: Point,
    pub steps: usize,
}

/// Parsed configuration. Paths are already resolved against the file's
/// directory.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub boreholes: Option<PathBuf>,
    pub parent: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub nu: Smoothness,
    pub nu_by_facies: BTreeMap<Facies, Smoothness>,
    pub priors: PriorSpec,
    pub proposals: ProposalSpec,
    pub chain: ChainSettings,
    pub initial_range: f64,
    pub grid: Option<GridSpec>,
    pub transect: Option<TransectSpec>,
    pub ground: Option<GroundLevel>,
    pub section_rows: usize,
    /// Fixed `(p, μ, β, α)` per facies, used by unconditional simulation.
    pub params: BTreeMap<Facies, [f64; 4]>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            boreholes: None,
            parent: None,
            output: None,
            nu: Smoothness::ThreeHalves,
            nu_by_facies: BTreeMap::new(),
            priors: PriorSpec::default(),
            proposals: ProposalSpec::default(),
            chain: ChainSettings::default(),
            initial_range: 10.0,
            grid: None,
            transect: None,
            ground: None,
            section_rows: 200,
            params: BTreeMap::new(),
        }
    }
}

struct Ctx<'a> {
    path: &'a Path,
    line: usize,
    key: &'a str,
}

impl Ctx<'_> {
    fn err(&self, message: impl std::fmt::Display) -> Error {
        Error::Parse {
            path: self.path.display().to_string(),
            line: self.line,
            message: format!("{}: {message}", self.key),
        }
    }

    fn f64(&self, s: &str) -> Result<f64> {
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.err(format!("`{s}` is not a finite number"))),
        }
    }

    fn usize(&self, s: &str) -> Result<usize> {
        s.parse().map_err(|_| self.err(format!("`{s}` is not a nonnegative integer")))
    }

    fn u64(&self, s: &str) -> Result<u64> {
        s.parse().map_err(|_| self.err(format!("`{s}` is not a nonnegative integer")))
    }

    fn bool(&self, s: &str) -> Result<bool> {
        match s {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(self.err(format!("`{s}` is not a boolean"))),
        }
    }

    fn floats<const N: usize>(&self, s: &str) -> Result<[f64; N]> {
        let parts: Vec<&str> = s.split_whitespace().collect();
        if parts.len() != N {
            return Err(self.err(format!("expected {N} numbers, found {}", parts.len())));
        }
        let mut out = [0.0; N];
        for (o, p) in out.iter_mut().zip(parts) {
            *o = self.f64(p)?;
        }
        Ok(out)
    }

    fn nu(&self, s: &str) -> Result<Smoothness> {
        s.parse().map_err(|e: Error| self.err(e))
    }

    fn check(&self, r: Result<()>) -> Result<()> {
        r.map_err(|e| self.err(e))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, path, base)
    }

    /// Parses `text`; `path` is used in error messages and `base` to resolve
    /// relative paths.
    pub fn parse(text: &str, path: &Path, base: &Path) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: i + 1,
                    message: format!("expected `key = value`, found `{line}`"),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            let ctx = Ctx {
                path,
                line: i + 1,
                key,
            };
            if let Some(prev) = seen.insert(key.to_string(), i + 1) {
                return Err(ctx.err(format!("duplicate key, first set on line {prev}")));
            }
            if value.is_empty() {
                return Err(ctx.err("missing value"));
            }
            cfg.set(&ctx, key, value, base)?;
        }
        if cfg.chain.burn_in > cfg.chain.n_iter {
            return Err(Error::InvalidConfiguration(format!(
                "burn_in ({}) exceeds n_iter ({})",
                cfg.chain.burn_in, cfg.chain.n_iter
            )));
        }
        Ok(cfg)
    }

    fn set(&mut self, ctx: &Ctx, key: &str, value: &str, base: &Path) -> Result<()> {
        if let Some(f) = key.strip_prefix("nu.") {
            self.nu_by_facies.insert(Facies::from(f), ctx.nu(value)?);
            return Ok(());
        }
        if let Some(f) = key.strip_prefix("params.") {
            let v: [f64; 4] = ctx.floats(value)?;
            ctx.check(LayerParams::new(v[0], v[1], v[2], v[3], self.nu).map(|_| ()))?;
            self.params.insert(Facies::from(f), v);
            return Ok(());
        }
        match key {
            "boreholes" => self.boreholes = Some(base.join(value)),
            "parent" => self.parent = Some(base.join(value)),
            "output" => self.output = Some(base.join(value)),
            "nu" => self.nu = ctx.nu(value)?,
            "tie_by_facies" => self.chain.tie_by_facies = ctx.bool(value)?,
            "priors" => {
                let [a, b, c, d] = ctx.floats(value)?;
                self.priors = PriorSpec::new(a, b, c, d).map_err(|e| ctx.err(e))?;
            }
            "widths" => {
                let [p, mu, beta, alpha] = ctx.floats(value)?;
                self.proposals.width_p = p;
                self.proposals.width_mu = mu;
                self.proposals.width_beta = beta;
                self.proposals.width_alpha = alpha;
                ctx.check(self.proposals.validate())?;
            }
            "move_probs" => {
                self.proposals.move_probs = ctx.floats(value)?;
                ctx.check(self.proposals.validate())?;
            }
            "n_iter" => self.chain.n_iter = ctx.usize(value)?,
            "burn_in" => self.chain.burn_in = ctx.usize(value)?,
            "thin" => {
                self.chain.thin = ctx.usize(value)?;
                ctx.check(self.chain.validate())?;
            }
            "seed" => self.chain.seed = ctx.u64(value)?,
            "cdf_tol" => {
                self.chain.cdf_tol = ctx.f64(value)?;
                ctx.check(self.chain.validate())?;
            }
            "audit_every" => self.chain.audit_every = ctx.usize(value)?,
            "initial_range" => {
                let r = ctx.f64(value)?;
                if !(r > 0.0) {
                    return Err(ctx.err("must be positive"));
                }
                self.initial_range = r;
            }
            "grid" => {
                let [x0, y0, dx, dy, nx, ny] = ctx.floats(value)?;
                let spec = GridSpec {
                    origin: Point::new(x0, y0),
                    dx,
                    dy,
                    nx: whole(ctx, nx)?,
                    ny: whole(ctx, ny)?,
                };
                ctx.check(SimGrid::rectangular(spec.origin, dx, dy, spec.nx, spec.ny).map(|_| ()))?;
                self.grid = Some(spec);
            }
            "transect" => {
                let [x0, y0, x1, y1, steps] = ctx.floats(value)?;
                let spec = TransectSpec {
                    start: Point::new(x0, y0),
                    end: Point::new(x1, y1),
                    steps: whole(ctx, steps)?,
                };
                ctx.check(SimGrid::transect(spec.start, spec.end, spec.steps).map(|_| ()))?;
                self.transect = Some(spec);
            }
            "ground" => self.ground = Some(parse_ground(ctx, value)?),
            "section_rows" => {
                self.section_rows = ctx.usize(value)?;
                if self.section_rows < 2 {
                    return Err(ctx.err("need at least 2 rows"));
                }
            }
            _ => return Err(ctx.err("unknown key")),
        }
        Ok(())
    }

    /// Smoothness of `facies`, falling back to the global value.
    pub fn nu_for(&self, facies: &Facies) -> Smoothness {
        self.nu_by_facies.get(facies).copied().unwrap_or(self.nu)
    }

    /// Checks that every facies-keyed entry names a facies of the parent.
    pub fn check_facies(&self, parent: &ParentSequence) -> Result<()> {
        let alphabet = parent.alphabet();
        for f in self.nu_by_facies.keys().chain(self.params.keys()) {
            if !alphabet.contains(f) {
                return Err(Error::InvalidConfiguration(format!(
                    "facies {f} is configured but not in the parent sequence"
                )));
            }
        }
        Ok(())
    }

    /// Per-layer parameters from the `params.<facies>` entries.
    pub fn fixed_params(&self, parent: &ParentSequence) -> Result<Vec<LayerParams>> {
        parent
            .layers()
            .iter()
            .map(|f| {
                let v = self.params.get(f).ok_or_else(|| {
                    Error::InvalidConfiguration(format!("missing `params.{f} = p mu beta alpha`"))
                })?;
                LayerParams::new(v[0], v[1], v[2], v[3], self.nu_for(f))
            })
            .collect()
    }

    /// The configured rectangular grid with its ground policy.
    pub fn sim_grid(&self) -> Result<Option<SimGrid>> {
        self.grid
            .map(|g| {
                SimGrid::rectangular(g.origin, g.dx, g.dy, g.nx, g.ny)?
                    .with_ground(self.ground.clone().unwrap_or(GroundLevel::Constant(0.0)))
            })
            .transpose()
    }

    pub fn sim_transect(&self) -> Result<Option<SimGrid>> {
        self.transect
            .map(|t| {
                SimGrid::transect(t.start, t.end, t.steps)?
                    .with_ground(self.ground.clone().unwrap_or(GroundLevel::Constant(0.0)))
            })
            .transpose()
    }
}

fn whole(ctx: &Ctx, v: f64) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(ctx.err(format!("`{v}` is not a nonnegative integer")))
    }
}

fn parse_ground(ctx: &Ctx, value: &str) -> Result<GroundLevel> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    match parts.as_slice() {
        ["constant", v] => Ok(GroundLevel::Constant(ctx.f64(v)?)),
        ["idw", p] => {
            let power = ctx.f64(p)?;
            if !(power > 0.0) {
                return Err(ctx.err("idw power must be positive"));
            }
            Ok(GroundLevel::InverseDistance { power })
        }
        _ => Err(ctx.err("expected `constant <metres>` or `idw <power>`")),
    }
}
