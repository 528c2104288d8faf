//! Metropolis-within-Gibbs sampler over layer parameters and augmented
//! configurations.
//!
//! One iteration updates every parameter of every layer (or facies group) by a
//! uniform random walk, then proposes one Split, Merge or Displace move per
//! borehole. Configuration moves are accepted by the plain likelihood ratio.
//! Per-layer log-likelihood terms are cached, so a proposal only recomputes the
//! layers it touches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gauss::Smoothness;
use crate::likelihood::{self, LayerData, LayerParams, LikelihoodOptions, BETA_SUPPORT};
use crate::sequence::{
    apply_move, enumerate_moves, initial_augmentation, observe, AugmentedConfiguration,
    BoreholeObservation, Facies, MoveKind, MoveSite, ParentSequence, Point,
};

/// Penalized-complexity priors on the range and the thickness scale, with
/// flat priors on `p ∈ (0, 1)` and `β ∈ (0.25, 4)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriorSpec {
    /// Prior probability that the range falls below `alpha0`.
    pub eps_alpha: f64,
    pub alpha0: f64,
    /// Prior probability that the thickness scale exceeds `mu0`.
    pub eps_mu: f64,
    pub mu0: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec {
            eps_alpha: 0.01,
            alpha0: 3.0,
            eps_mu: 0.01,
            mu0: 10.0,
        }
    }
}

impl PriorSpec {
    pub fn new(eps_alpha: f64, alpha0: f64, eps_mu: f64, mu0: f64) -> Result<Self> {
        let spec = PriorSpec {
            eps_alpha,
            alpha0,
            eps_mu,
            mu0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_alpha > 0.0 && self.eps_alpha < 1.0) {
            return Err(Error::param("eps_alpha", self.eps_alpha, "must lie in (0, 1)"));
        }
        if !(self.eps_mu > 0.0 && self.eps_mu < 1.0) {
            return Err(Error::param("eps_mu", self.eps_mu, "must lie in (0, 1)"));
        }
        if !(self.alpha0 > 0.0 && self.alpha0.is_finite()) {
            return Err(Error::param("alpha0", self.alpha0, "must be positive"));
        }
        if !(self.mu0 > 0.0 && self.mu0.is_finite()) {
            return Err(Error::param("mu0", self.mu0, "must be positive"));
        }
        Ok(())
    }

    /// `λ_α = −ln(ε_α) α₀`, so that `P(α < α₀) = ε_α`.
    pub fn lambda_alpha(&self) -> f64 {
        -self.eps_alpha.ln() * self.alpha0
    }

    /// `λ_μ = −ln(ε_μ) / μ₀`, so that `P(μ > μ₀) = ε_μ`.
    pub fn lambda_mu(&self) -> f64 {
        -self.eps_mu.ln() / self.mu0
    }

    /// Log prior density of the range alone.
    pub fn ln_prior_alpha(&self, alpha: f64) -> f64 {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return f64::NEG_INFINITY;
        }
        let l = self.lambda_alpha();
        l.ln() - 2.0 * alpha.ln() - l / alpha
    }

    /// Log prior density of the thickness scale alone.
    pub fn ln_prior_mu(&self, mu: f64) -> f64 {
        if !(mu > 0.0) || !mu.is_finite() {
            return f64::NEG_INFINITY;
        }
        let l = self.lambda_mu();
        l.ln() - l * mu
    }

    /// Log prior of a full layer parameter set, `−∞` outside the support.
    pub fn ln_prior(&self, params: &LayerParams) -> f64 {
        if !(params.p() > 0.0 && params.p() < 1.0)
            || !(params.beta() > BETA_SUPPORT.0 && params.beta() < BETA_SUPPORT.1)
        {
            return f64::NEG_INFINITY;
        }
        pc_log_prior(params.range(), params.mu(), self)
    }
}

/// Joint log density of the range and thickness-scale priors.
pub fn pc_log_prior(alpha: f64, mu: f64, spec: &PriorSpec) -> f64 {
    spec.ln_prior_alpha(alpha) + spec.ln_prior_mu(mu)
}

/// The four updated parameters of a layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Param {
    P,
    Mu,
    Beta,
    Alpha,
}

impl Param {
    pub const ALL: [Param; 4] = [Param::P, Param::Mu, Param::Beta, Param::Alpha];

    pub fn name(self) -> &'static str {
        match self {
            Param::P => "p",
            Param::Mu => "mu",
            Param::Beta => "beta",
            Param::Alpha => "alpha",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn get(self, params: &LayerParams) -> f64 {
        match self {
            Param::P => params.p(),
            Param::Mu => params.mu(),
            Param::Beta => params.beta(),
            Param::Alpha => params.range(),
        }
    }

    /// Replaces this parameter, or `None` when the value is outside the support.
    pub fn set(self, params: &LayerParams, value: f64) -> Option<LayerParams> {
        match self {
            Param::P => params.with_p(value),
            Param::Mu => params.with_mu(value),
            Param::Beta => params.with_beta(value),
            Param::Alpha => params.with_range(value),
        }
        .ok()
    }
}

/// Random-walk half-widths and move-kind probabilities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProposalSpec {
    pub width_p: f64,
    pub width_mu: f64,
    pub width_beta: f64,
    pub width_alpha: f64,
    /// Probabilities of Split, Merge and Displace.
    pub move_probs: [f64; 3],
}

impl Default for ProposalSpec {
    fn default() -> Self {
        ProposalSpec {
            width_p: 0.15,
            width_mu: 0.4,
            width_beta: 0.4,
            width_alpha: 3.0,
            move_probs: [1.0 / 3.0; 3],
        }
    }
}

impl ProposalSpec {
    pub fn width(&self, param: Param) -> f64 {
        match param {
            Param::P => self.width_p,
            Param::Mu => self.width_mu,
            Param::Beta => self.width_beta,
            Param::Alpha => self.width_alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for p in Param::ALL {
            let w = self.width(p);
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::param(p.name(), w, "proposal width must be positive"));
            }
        }
        if self.move_probs.iter().any(|&q| !(q >= 0.0)) {
            return Err(Error::param("move_probs", f64::NAN, "must be nonnegative"));
        }
        let s: f64 = self.move_probs.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::param("move_probs", s, "must sum to 1"));
        }
        Ok(())
    }
}

/// Run-length and bookkeeping options.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainSettings {
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub cdf_tol: f64,
    /// Layers of one facies share a single parameter set.
    pub tie_by_facies: bool,
    /// Which parameters are updated; the others stay at their initial values.
    pub update_params: [bool; 4],
    pub update_configurations: bool,
    /// Full likelihood recomputation every this many iterations (0 disables).
    pub audit_every: usize,
}

impl Default for ChainSettings {
    fn default() -> Self {
        ChainSettings {
            n_iter: 30_000,
            burn_in: 2_500,
            thin: 50,
            seed: 0,
            cdf_tol: 1e-3,
            tie_by_facies: false,
            update_params: [true; 4],
            update_configurations: true,
            audit_every: 1_000,
        }
    }
}

impl ChainSettings {
    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::param("thin", 0.0, "must be at least 1"));
        }
        if !(self.cdf_tol > 0.0) {
            return Err(Error::param("cdf_tol", self.cdf_tol, "must be positive"));
        }
        Ok(())
    }
}

/// Boreholes and the parent sequence they are aligned to.
#[derive(Clone, Debug)]
pub struct Model {
    pub parent: ParentSequence,
    pub boreholes: Vec<BoreholeObservation>,
}

impl Model {
    /// Checks every borehole against the parent; the error lists all offenders.
    pub fn new(parent: ParentSequence, boreholes: Vec<BoreholeObservation>) -> Result<Self> {
        let model = Model { parent, boreholes };
        model.initial_configurations()?;
        Ok(model)
    }

    pub fn locations(&self) -> Vec<Point> {
        self.boreholes.iter().map(|b| b.location).collect()
    }

    pub fn initial_configurations(&self) -> Result<Vec<AugmentedConfiguration>> {
        let mut configs = Vec::with_capacity(self.boreholes.len());
        let mut offenders = Vec::new();
        for b in &self.boreholes {
            match initial_augmentation(b, &self.parent) {
                Ok(c) => configs.push(c),
                Err(e) => offenders.push(e.to_string()),
            }
        }
        if offenders.len() == 1 && self.boreholes.len() == 1 {
            return Err(initial_augmentation(&self.boreholes[0], &self.parent).unwrap_err());
        }
        if !offenders.is_empty() {
            return Err(Error::Dataset(format!(
                "{} incompatible borehole(s): {}",
                offenders.len(),
                offenders.join("; ")
            )));
        }
        Ok(configs)
    }

    /// Empirical presence rate and mean record thickness per facies. The rate
    /// is the number of records of the facies over the number of
    /// (borehole, parent layer) slots it could occupy.
    pub fn empirical_summary(&self) -> Vec<EmpiricalFacies> {
        let n = self.boreholes.len();
        self.parent
            .alphabet()
            .into_iter()
            .map(|f| {
                let slots = n * self.parent.layers_of(&f).len();
                let thick: Vec<f64> = self
                    .boreholes
                    .iter()
                    .flat_map(|b| b.records().iter())
                    .filter(|r| r.facies == f)
                    .map(|r| r.thickness)
                    .collect();
                let mean = if thick.is_empty() {
                    f64::NAN
                } else {
                    thick.iter().sum::<f64>() / thick.len() as f64
                };
                EmpiricalFacies {
                    facies: f,
                    records: thick.len(),
                    slots,
                    mean_thickness: mean,
                }
            })
            .collect()
    }

    /// Starting parameters: `(τ₀, μ₀)` from the empirical summary with `β = 1`
    /// and the given range. Presence rates are clamped to [0.01, 0.99]; a facies
    /// without records starts at `μ = 1`.
    pub fn initial_params(
        &self,
        nu: &dyn Fn(&Facies) -> Smoothness,
        range: f64,
    ) -> Result<Vec<LayerParams>> {
        let summary = self.empirical_summary();
        self.parent
            .layers()
            .iter()
            .map(|f| {
                let s = summary.iter().find(|s| &s.facies == f).expect("facies in alphabet");
                let (p, mu) = s.initial_values()?;
                LayerParams::new(p, mu, 1.0, range, nu(f))
            })
            .collect()
    }
}

/// Presence and thickness statistics of one facies across boreholes.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalFacies {
    pub facies: Facies,
    pub records: usize,
    pub slots: usize,
    pub mean_thickness: f64,
}

impl EmpiricalFacies {
    pub fn presence(&self) -> f64 {
        if self.slots == 0 {
            0.0
        } else {
            self.records as f64 / self.slots as f64
        }
    }

    /// Starting `(p₀, μ₀)` used by [`Model::initial_params`].
    pub fn initial_values(&self) -> Result<(f64, f64)> {
        let p0 = self.presence().clamp(0.01, 0.99);
        if self.records == 0 {
            return Ok((p0, 1.0));
        }
        let (_, mu0) = likelihood::init_from_empirical(p0, self.mean_thickness)?;
        Ok((p0, mu0))
    }

    pub fn initial_tau(&self) -> Result<f64> {
        let (p0, _) = self.initial_values()?;
        Ok(crate::normal::quantile(1.0 - p0))
    }
}

/// Current parameters, configurations and cached layer terms.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub iteration: usize,
    pub params: Vec<LayerParams>,
    pub configs: Vec<AugmentedConfiguration>,
    pub layer_loglik: Vec<f64>,
}

impl ChainState {
    pub fn log_likelihood(&self) -> f64 {
        self.layer_loglik.iter().sum()
    }
}

/// A thinned copy of the chain state.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorSample {
    pub iteration: usize,
    pub params: Vec<LayerParams>,
    pub configs: Vec<AugmentedConfiguration>,
    pub log_likelihood: f64,
}

/// Proposal and acceptance counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counter {
    pub proposed: u64,
    pub accepted: u64,
}

impl Counter {
    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            f64::NAN
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        if accepted {
            self.accepted += 1;
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub initial_log_likelihood: f64,
    /// Indexed by [`Param::index`].
    pub params: [Counter; 4],
    /// Indexed by layer, then [`Param::index`]; tied groups count on their first layer.
    pub params_by_layer: Vec<[Counter; 4]>,
    /// Indexed by Split, Merge, Displace.
    pub moves: [Counter; 3],
    /// Iterations where the drawn move kind had no candidate.
    pub moves_without_candidates: [u64; 3],
    /// Proposals rejected because the likelihood could not be evaluated.
    pub numeric_rejections: u64,
    /// Total log-likelihood after each iteration, starting with the initial value.
    pub log_likelihood_trace: Vec<f64>,
    pub audits: usize,
    pub max_audit_discrepancy: f64,
    /// Configurations found with an observed image different from the data.
    pub observation_violations: usize,
}

fn kind_index(kind: MoveKind) -> usize {
    match kind {
        MoveKind::Split => 0,
        MoveKind::Merge => 1,
        MoveKind::Displace => 2,
    }
}

/// Outcome of one configuration update.
#[derive(Clone, Debug, PartialEq)]
pub enum MoveOutcome {
    NoCandidate(MoveKind),
    Rejected(MoveSite),
    Accepted(MoveSite),
}

/// Stateful sampler; [`run_chain`] drives it for a fixed number of iterations.
pub struct Sampler<'a> {
    model: &'a Model,
    locations: Vec<Point>,
    priors: PriorSpec,
    proposals: ProposalSpec,
    settings: ChainSettings,
    groups: Vec<Vec<usize>>,
    state: ChainState,
    rng: ChaCha8Rng,
    lik: LikelihoodOptions,
    diag: Diagnostics,
}

impl<'a> Sampler<'a> {
    pub fn new(
        model: &'a Model,
        params: Vec<LayerParams>,
        priors: PriorSpec,
        proposals: ProposalSpec,
        settings: ChainSettings,
    ) -> Result<Self> {
        let configs = model.initial_configurations()?;
        Self::with_configurations(model, params, configs, priors, proposals, settings)
    }

    pub fn with_configurations(
        model: &'a Model,
        params: Vec<LayerParams>,
        configs: Vec<AugmentedConfiguration>,
        priors: PriorSpec,
        proposals: ProposalSpec,
        settings: ChainSettings,
    ) -> Result<Self> {
        priors.validate()?;
        proposals.validate()?;
        settings.validate()?;
        let m = model.parent.len();
        if params.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: params.len(),
            });
        }
        for (cfg, b) in configs.iter().zip(&model.boreholes) {
            if observe(cfg, &model.parent)? != b.records() {
                return Err(Error::InvalidConfiguration(format!(
                    "configuration of borehole `{}` does not reproduce its records",
                    b.id
                )));
            }
        }
        let groups: Vec<Vec<usize>> = if settings.tie_by_facies {
            model
                .parent
                .alphabet()
                .iter()
                .map(|f| model.parent.layers_of(f))
                .collect()
        } else {
            (0..m).map(|j| vec![j]).collect()
        };
        let mut params = params;
        if settings.tie_by_facies {
            for g in &groups {
                let first = params[g[0]];
                for &j in g {
                    params[j] = first;
                }
            }
        }
        let locations = model.locations();
        let lik = LikelihoodOptions {
            cdf: crate::gauss::CdfOptions::with_tol(settings.cdf_tol),
            qmc_seed: settings.seed ^ 0x9e37_79b9_7f4a_7c15,
        };
        let layer_loglik = likelihood::layer_logliks(&configs, &locations, &params, &lik)?;
        let state = ChainState {
            iteration: 0,
            params,
            configs,
            layer_loglik,
        };
        let diag = Diagnostics {
            initial_log_likelihood: state.log_likelihood(),
            params_by_layer: vec![[Counter::default(); 4]; m],
            log_likelihood_trace: vec![state.log_likelihood()],
            ..Diagnostics::default()
        };
        Ok(Sampler {
            model,
            locations,
            priors,
            proposals,
            rng: ChaCha8Rng::seed_from_u64(settings.seed),
            settings,
            groups,
            state,
            lik,
            diag,
        })
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diag
    }

    /// Parameter groups: one per layer, or one per facies when tied.
    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    fn layer_term(&self, layer: usize, configs: &[AugmentedConfiguration], params: &LayerParams) -> Result<f64> {
        let data = LayerData::from_configs(configs, &self.locations, layer)?;
        likelihood::layer_loglik(&data, params, &self.lik).map_err(|e| likelihood::with_layer(e, layer))
    }

    /// One random-walk update of `param` for parameter group `group`.
    pub fn update_parameter(&mut self, group: usize, param: Param) -> Result<bool> {
        let layers = self.groups[group].clone();
        let lead = layers[0];
        let current = self.state.params[lead];
        let width = self.proposals.width(param);
        let step = self.rng.random_range(-width..=width);
        let proposal = param.set(&current, param.get(&current) + step);
        let accepted = match proposal {
            None => false,
            Some(new) => {
                let mut new_terms = Vec::with_capacity(layers.len());
                let mut failed = None;
                for &j in &layers {
                    match self.layer_term(j, &self.state.configs, &new) {
                        Ok(v) => new_terms.push(v),
                        Err(e) => {
                            failed = Some(e);
                            break;
                        }
                    }
                }
                let u: f64 = self.rng.random();
                match failed {
                    Some(e) => {
                        log::warn!("parameter proposal rejected: {e}");
                        self.diag.numeric_rejections += 1;
                        false
                    }
                    None => {
                        let old: f64 = layers.iter().map(|&j| self.state.layer_loglik[j]).sum();
                        let new_sum: f64 = new_terms.iter().sum();
                        let ratio = new_sum - old + self.priors.ln_prior(&new)
                            - self.priors.ln_prior(&current);
                        if u.ln() < ratio {
                            for (&j, &t) in layers.iter().zip(&new_terms) {
                                self.state.params[j] = new;
                                self.state.layer_loglik[j] = t;
                            }
                            true
                        } else {
                            false
                        }
                    }
                }
            }
        };
        self.diag.params[param.index()].record(accepted);
        self.diag.params_by_layer[lead][param.index()].record(accepted);
        Ok(accepted)
    }

    fn draw_kind(&mut self) -> MoveKind {
        let u: f64 = self.rng.random();
        let q = self.proposals.move_probs;
        if u < q[0] {
            MoveKind::Split
        } else if u < q[0] + q[1] {
            MoveKind::Merge
        } else {
            MoveKind::Displace
        }
    }

    /// One Split, Merge or Displace proposal at borehole `k`.
    pub fn update_configuration(&mut self, k: usize) -> Result<MoveOutcome> {
        let kind = self.draw_kind();
        let parent = &self.model.parent;
        let sites = enumerate_moves(&self.state.configs[k], parent, kind);
        if sites.is_empty() {
            self.diag.moves_without_candidates[kind_index(kind)] += 1;
            return Ok(MoveOutcome::NoCandidate(kind));
        }
        let site = sites[self.rng.random_range(0..sites.len())];
        let mv = match site.interval(&self.state.configs[k]) {
            Some(total) => {
                let mut u: f64 = self.rng.random::<f64>() * total;
                while !(u > 0.0 && u < total) {
                    u = self.rng.random::<f64>() * total;
                }
                site.with_split(u)
            }
            None => site.with_split(0.0),
        };
        let new_cfg = match apply_move(&self.state.configs[k], parent, &mv) {
            Ok(c) => c,
            Err(Error::InfeasibleMove(msg)) => {
                // the split point rounded onto an end of the interval
                log::debug!("move skipped: {msg}");
                self.diag.moves[kind_index(kind)].record(false);
                return Ok(MoveOutcome::Rejected(site));
            }
            Err(e) => return Err(e),
        };
        let (a, b) = site.layers();
        let mut configs = self.state.configs.clone();
        configs[k] = new_cfg;
        let mut terms = [0.0; 2];
        let mut failed = None;
        for (t, &j) in terms.iter_mut().zip(&[a, b]) {
            match self.layer_term(j, &configs, &self.state.params[j]) {
                Ok(v) => *t = v,
                Err(e) => {
                    failed = Some(e);
                    break;
                }
            }
        }
        let u: f64 = self.rng.random();
        let accepted = match failed {
            Some(e) => {
                log::warn!("configuration proposal rejected: {e}");
                self.diag.numeric_rejections += 1;
                false
            }
            None => {
                let ratio = terms[0] + terms[1] - self.state.layer_loglik[a] - self.state.layer_loglik[b];
                u.ln() < ratio
            }
        };
        self.diag.moves[kind_index(kind)].record(accepted);
        if accepted {
            self.state.configs = configs;
            self.state.layer_loglik[a] = terms[0];
            self.state.layer_loglik[b] = terms[1];
            Ok(MoveOutcome::Accepted(site))
        } else {
            Ok(MoveOutcome::Rejected(site))
        }
    }

    /// Recomputes every layer term and records the largest cache discrepancy.
    pub fn audit(&mut self) -> Result<f64> {
        let fresh = likelihood::layer_logliks(
            &self.state.configs,
            &self.locations,
            &self.state.params,
            &self.lik,
        )?;
        let worst = fresh
            .iter()
            .zip(&self.state.layer_loglik)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        self.diag.audits += 1;
        self.diag.max_audit_discrepancy = self.diag.max_audit_discrepancy.max(worst);
        if worst > 1e-6 {
            log::warn!("cached log-likelihood drifted by {worst:e}; resetting cache");
            self.state.layer_loglik = fresh;
        }
        Ok(worst)
    }

    fn check_observations(&mut self) -> Result<()> {
        for (cfg, b) in self.state.configs.iter().zip(&self.model.boreholes) {
            if observe(cfg, &self.model.parent)? != b.records() {
                self.diag.observation_violations += 1;
            }
        }
        Ok(())
    }

    /// One full iteration: all parameters of all groups, then one move per borehole.
    pub fn step(&mut self) -> Result<()> {
        for g in 0..self.groups.len() {
            for param in Param::ALL {
                if self.settings.update_params[param.index()] {
                    self.update_parameter(g, param)?;
                }
            }
        }
        if self.settings.update_configurations {
            for k in 0..self.state.configs.len() {
                self.update_configuration(k)?;
            }
            self.check_observations()?;
        }
        self.state.iteration += 1;
        self.diag.log_likelihood_trace.push(self.state.log_likelihood());
        if self.settings.audit_every > 0 && self.state.iteration.is_multiple_of(self.settings.audit_every) {
            self.audit()?;
        }
        Ok(())
    }

    pub fn sample(&self) -> PosteriorSample {
        PosteriorSample {
            iteration: self.state.iteration,
            params: self.state.params.clone(),
            configs: self.state.configs.clone(),
            log_likelihood: self.state.log_likelihood(),
        }
    }

    pub fn into_diagnostics(self) -> Diagnostics {
        self.diag
    }
}

/// Samples and diagnostics of a finished chain.
#[derive(Clone, Debug)]
pub struct ChainOutput {
    pub samples: Vec<PosteriorSample>,
    pub diagnostics: Diagnostics,
}

/// Runs `settings.n_iter` iterations and keeps every `thin`-th state after burn-in.
pub fn run_chain(
    model: &Model,
    params: Vec<LayerParams>,
    priors: PriorSpec,
    proposals: ProposalSpec,
    settings: ChainSettings,
) -> Result<ChainOutput> {
    let n_iter = settings.n_iter;
    let burn_in = settings.burn_in;
    let thin = settings.thin;
    let mut sampler = Sampler::new(model, params, priors, proposals, settings)?;
    let mut samples = Vec::new();
    for t in 1..=n_iter {
        sampler.step()?;
        if t > burn_in && (t - burn_in).is_multiple_of(thin) {
            samples.push(sampler.sample());
        }
        if t % 1000 == 0 {
            log::info!(
                "iteration {t}/{n_iter}, log-likelihood {:.4}",
                sampler.state().log_likelihood()
            );
        }
    }
    Ok(ChainOutput {
        samples,
        diagnostics: sampler.into_diagnostics(),
    })
}

/// Sample with the highest log-likelihood; ties go to the earliest iteration.
pub fn select_most_likely(samples: &[PosteriorSample]) -> Result<&PosteriorSample> {
    select_most_likely_where(samples, |_| true)
}

/// Highest-likelihood sample among those satisfying `pred`.
pub fn select_most_likely_where<F>(samples: &[PosteriorSample], pred: F) -> Result<&PosteriorSample>
where
    F: Fn(&PosteriorSample) -> bool,
{
    let mut best: Option<&PosteriorSample> = None;
    for s in samples.iter().filter(|s| pred(s)) {
        match best {
            Some(b) if s.log_likelihood < b.log_likelihood => {}
            Some(b) if s.log_likelihood == b.log_likelihood && s.iteration >= b.iteration => {}
            _ => best = Some(s),
        }
    }
    best.ok_or_else(|| Error::Dataset("no posterior sample matches the selection".into()))
}
