//! Gaussian kernels: Matérn correlations, jittered Cholesky factors, simple
//! kriging, multivariate normal densities, orthant probabilities by randomized
//! lattice quasi-Monte Carlo, truncated multivariate normal draws and dense
//! random field simulation.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::normal;
use crate::sequence::Point;

/// Matérn smoothness restricted to the half-integer closed forms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Smoothness {
    Half,
    ThreeHalves,
    FiveHalves,
}

impl Smoothness {
    pub fn value(self) -> f64 {
        match self {
            Smoothness::Half => 0.5,
            Smoothness::ThreeHalves => 1.5,
            Smoothness::FiveHalves => 2.5,
        }
    }

    pub fn from_value(nu: f64) -> Result<Self> {
        match nu {
            0.5 => Ok(Smoothness::Half),
            1.5 => Ok(Smoothness::ThreeHalves),
            2.5 => Ok(Smoothness::FiveHalves),
            _ => Err(Error::param("nu", nu, "must be one of 0.5, 1.5, 2.5")),
        }
    }
}

impl std::str::FromStr for Smoothness {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1/2" => Ok(Smoothness::Half),
            "3/2" => Ok(Smoothness::ThreeHalves),
            "5/2" => Ok(Smoothness::FiveHalves),
            other => {
                let v: f64 = other
                    .parse()
                    .map_err(|_| Error::param("nu", f64::NAN, "not a number"))?;
                Smoothness::from_value(v)
            }
        }
    }
}

/// Unit-sill Matérn correlation with range `alpha` in km.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matern {
    nu: Smoothness,
    range: f64,
}

impl Matern {
    pub fn new(nu: Smoothness, range: f64) -> Result<Self> {
        if !(range > 0.0) || !range.is_finite() {
            return Err(Error::param("alpha", range, "range must be positive"));
        }
        Ok(Matern { nu, range })
    }

    pub fn nu(&self) -> Smoothness {
        self.nu
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    #[inline]
    pub fn correlation(&self, h: f64) -> f64 {
        let r = h.abs() / self.range;
        let e = (-r).exp();
        match self.nu {
            Smoothness::Half => e,
            Smoothness::ThreeHalves => (1.0 + r) * e,
            Smoothness::FiveHalves => (1.0 + r + r * r / 3.0) * e,
        }
    }
}

/// Matérn correlation at lag `h`.
pub fn matern(h: f64, spec: &Matern) -> f64 {
    spec.correlation(h)
}

/// Pairwise Euclidean distances.
pub fn distance_matrix(points: &[Point]) -> DMatrix<f64> {
    let n = points.len();
    DMatrix::from_fn(n, n, |i, j| points[i].distance(&points[j]))
}

pub fn correlation_matrix(points: &[Point], spec: &Matern) -> DMatrix<f64> {
    let n = points.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            spec.correlation(points[i].distance(&points[j]))
        }
    })
}

/// First diagonal jitter tried when a plain factorization fails.
pub const JITTER_START: f64 = 1e-10;
/// Largest jitter before giving up.
pub const JITTER_MAX: f64 = 1e-6;
/// Squared pivots below this count as a failed factorization.
const PIVOT_FLOOR: f64 = 1e-12;

/// Symmetric positive-definite matrix with its Cholesky factor.
#[derive(Clone, Debug)]
pub struct CovMatrix {
    matrix: DMatrix<f64>,
    factor: Cholesky<f64, Dyn>,
    jitter: f64,
}

impl CovMatrix {
    /// Factorizes `matrix`. A plain factorization is tried first; on failure
    /// a diagonal jitter of 1e-10 is added and escalated ×10 up to 1e-6.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let (factor, jitter) = factorize(&matrix)?;
        Ok(CovMatrix {
            matrix,
            factor,
            jitter,
        })
    }

    pub fn from_points(points: &[Point], spec: &Matern) -> Result<Self> {
        Self::new(correlation_matrix(points, spec))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn factor(&self) -> &Cholesky<f64, Dyn> {
        &self.factor
    }

    /// Lower triangular factor L with L Lᵀ = Σ + jitter·I.
    pub fn lower(&self) -> DMatrix<f64> {
        self.factor.l()
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn ln_det(&self) -> f64 {
        2.0 * self
            .factor
            .l_dirty()
            .diagonal()
            .iter()
            .map(|d| d.ln())
            .sum::<f64>()
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.factor.solve(b)
    }

    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.factor.solve(b)
    }
}

fn pivot_ratio(factor: &Cholesky<f64, Dyn>) -> (f64, f64) {
    let d = factor.l_dirty().diagonal();
    let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = d.iter().cloned().fold(0.0, f64::max);
    (min, max)
}

fn factorize(matrix: &DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, f64)> {
    if !matrix.is_square() {
        return Err(Error::DimensionMismatch {
            expected: matrix.nrows(),
            got: matrix.ncols(),
        });
    }
    let scale = matrix
        .diagonal()
        .iter()
        .cloned()
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let accept = |f: &Cholesky<f64, Dyn>| {
        let (min, _) = pivot_ratio(f);
        min * min >= PIVOT_FLOOR * scale
    };
    if matrix.nrows() == 0 {
        return Ok((Cholesky::new(matrix.clone()).expect("empty"), 0.0));
    }
    if let Some(f) = Cholesky::new(matrix.clone()) {
        if accept(&f) {
            return Ok((f, 0.0));
        }
    }
    let mut jitter = JITTER_START;
    while jitter <= JITTER_MAX * (1.0 + 1e-9) {
        let mut m = matrix.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += jitter * scale;
        }
        if let Some(f) = Cholesky::new(m) {
            if accept(&f) {
                return Ok((f, jitter));
            }
        }
        jitter *= 10.0;
    }
    Err(Error::NotPositiveDefinite { jitter: JITTER_MAX })
}

fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Moments of the unknown coordinates given the known ones.
#[derive(Clone, Debug)]
pub struct Conditional {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// Simple kriging of a zero-mean Gaussian vector: returns the conditional
/// mean and covariance of `joint[unknown]` given `joint[known] = values`.
pub fn condition(
    joint: &DMatrix<f64>,
    known: &[usize],
    values: &DVector<f64>,
    unknown: &[usize],
) -> Result<Conditional> {
    if values.len() != known.len() {
        return Err(Error::DimensionMismatch {
            expected: known.len(),
            got: values.len(),
        });
    }
    let s_uu = submatrix(joint, unknown, unknown);
    if unknown.is_empty() || known.is_empty() {
        return Ok(Conditional {
            mean: DVector::zeros(unknown.len()),
            cov: s_uu,
        });
    }
    let s_kk = submatrix(joint, known, known);
    let s_uk = submatrix(joint, unknown, known);
    let chol = CovMatrix::new(s_kk).map_err(|e| match e {
        Error::NotPositiveDefinite { .. } => Error::SingularConditioning {
            condition_estimate: f64::INFINITY,
        },
        other => other,
    })?;
    let (min, max) = pivot_ratio(chol.factor());
    if !(min > 0.0) {
        return Err(Error::SingularConditioning {
            condition_estimate: (max / min).powi(2),
        });
    }
    let mean = &s_uk * chol.solve(values);
    let weights_t = chol.solve_matrix(&s_uk.transpose());
    let mut cov = s_uu - &s_uk * weights_t;
    symmetrize(&mut cov);
    Ok(Conditional { mean, cov })
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Log density of N(mean, cov) at `x`.
pub fn mvn_logpdf(x: &DVector<f64>, mean: &DVector<f64>, cov: &CovMatrix) -> Result<f64> {
    let d = cov.dim();
    if x.len() != d || mean.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len().max(mean.len()),
        });
    }
    if d == 0 {
        return Ok(0.0);
    }
    let r = x - mean;
    let mut z = r.clone();
    cov.factor().l_dirty().solve_lower_triangular_mut(&mut z);
    let quad = z.norm_squared();
    Ok(-(d as f64) * normal::HALF_LN_2PI - 0.5 * cov.ln_det() - 0.5 * quad)
}

/// Controls for the randomized lattice estimator of orthant probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct CdfOptions {
    /// Target absolute error (three standard errors across randomizations).
    pub abs_tol: f64,
    /// Number of independent random shifts of the lattice.
    pub randomizations: usize,
    /// Lattice points per shift in the first round; doubled each round.
    pub min_points: usize,
    /// Cap on lattice points per shift.
    pub max_points: usize,
    /// Largest supported dimension.
    pub max_dim: usize,
}

impl Default for CdfOptions {
    fn default() -> Self {
        CdfOptions {
            abs_tol: 1e-4,
            randomizations: 10,
            min_points: 64,
            max_points: 50_000,
            max_dim: 100,
        }
    }
}

impl CdfOptions {
    pub fn with_tol(tol: f64) -> Self {
        CdfOptions {
            abs_tol: tol,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CdfEstimate {
    pub probability: f64,
    /// Three standard errors across randomizations; zero for exact cases.
    pub error: f64,
    pub converged: bool,
    /// Integrand evaluations used.
    pub evaluations: usize,
}

impl CdfEstimate {
    fn exact(p: f64) -> Self {
        CdfEstimate {
            probability: p,
            error: 0.0,
            converged: true,
            evaluations: 0,
        }
    }
}

/// Separation-of-variables form of P(X < b) after variable reordering.
struct GenzIntegrand {
    /// Row-major lower triangle, `lower[i * d + k]`.
    lower: Vec<f64>,
    bounds: Vec<f64>,
    d: usize,
    first: f64,
}

impl GenzIntegrand {
    /// Cholesky with greedy reordering: at each step pick the remaining
    /// variable with the smallest conditional probability of lying below
    /// its bound, given the truncated expectations of those already placed.
    fn new(bounds: &[f64], cov: &DMatrix<f64>) -> Result<Self> {
        let d = bounds.len();
        let mut c = cov.clone();
        let mut a = bounds.to_vec();
        let mut lower = vec![0.0f64; d * d];
        let mut y = vec![0.0f64; d];
        let scale = (0..d).map(|i| c[(i, i)]).fold(0.0f64, f64::max).max(1e-300);
        let eps = 1e-12 * scale;
        for i in 0..d {
            let mut best = i;
            let mut best_p = f64::INFINITY;
            for j in i..d {
                let s2 = c[(j, j)] - (0..i).map(|k| lower[j * d + k].powi(2)).sum::<f64>();
                let shift: f64 = (0..i).map(|k| lower[j * d + k] * y[k]).sum();
                let p = if s2 > eps {
                    normal::cdf((a[j] - shift) / s2.sqrt())
                } else {
                    2.0
                };
                if p < best_p {
                    best_p = p;
                    best = j;
                }
            }
            if best != i {
                c.swap_rows(i, best);
                c.swap_columns(i, best);
                a.swap(i, best);
                for k in 0..i {
                    lower.swap(i * d + k, best * d + k);
                }
            }
            let s2 = c[(i, i)] - (0..i).map(|k| lower[i * d + k].powi(2)).sum::<f64>();
            if s2 < -1e-8 * scale {
                return Err(Error::NotPositiveDefinite { jitter: 0.0 });
            }
            let lii = if s2 > eps { s2.sqrt() } else { 0.0 };
            lower[i * d + i] = lii;
            for j in i + 1..d {
                lower[j * d + i] = if lii > 0.0 {
                    (c[(j, i)] - (0..i).map(|k| lower[j * d + k] * lower[i * d + k]).sum::<f64>())
                        / lii
                } else {
                    0.0
                };
            }
            let shift: f64 = (0..i).map(|k| lower[i * d + k] * y[k]).sum();
            y[i] = if lii > 0.0 {
                let ci = (a[i] - shift) / lii;
                -normal::lower_mills(ci)
            } else {
                0.0
            };
        }
        let first = if lower[0] > 0.0 {
            normal::cdf(a[0] / lower[0])
        } else if a[0] >= 0.0 {
            1.0
        } else {
            0.0
        };
        Ok(GenzIntegrand {
            lower,
            bounds: a,
            d,
            first,
        })
    }

    #[inline]
    fn eval(&self, w: &[f64], z: &mut [f64]) -> f64 {
        let d = self.d;
        let mut f = self.first;
        let mut e = self.first;
        for i in 0..d {
            if i > 0 {
                let row = &self.lower[i * d..i * d + i];
                let shift: f64 = row.iter().zip(z.iter()).map(|(l, y)| l * y).sum();
                let lii = self.lower[i * d + i];
                e = if lii > 0.0 {
                    normal::cdf((self.bounds[i] - shift) / lii)
                } else if self.bounds[i] - shift >= 0.0 {
                    1.0
                } else {
                    0.0
                };
                f *= e;
                if f == 0.0 {
                    return 0.0;
                }
            }
            if i + 1 < d {
                let q = (w[i] * e).clamp(1e-300, 1.0 - 1e-16);
                z[i] = normal::quantile(q);
            }
        }
        f
    }
}

const PRIMES: [u32; 100] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191,
    193, 197, 199, 211, 223, 227, 229, 233, 239, 241, 251, 257, 263, 269, 271, 277, 281, 283, 293,
    307, 311, 313, 317, 331, 337, 347, 349, 353, 359, 367, 373, 379, 383, 389, 397, 401, 409, 419,
    421, 431, 433, 439, 443, 449, 457, 461, 463, 467, 479, 487, 491, 499, 503, 509, 521, 523, 541,
];

/// P(X₁ < b₁, …, X_d < b_d) for X ~ N(mean, cov).
///
/// One dimension is evaluated exactly. Higher dimensions use the
/// separation-of-variables transform with a randomly shifted Richtmyer
/// lattice (square roots of primes) and the baker's periodization; the
/// number of points per shift doubles until three standard errors across
/// shifts fall below `opts.abs_tol` or `opts.max_points` is reached.
pub fn mvn_cdf_below<R: Rng + ?Sized>(
    upper: &DVector<f64>,
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    opts: &CdfOptions,
    rng: &mut R,
) -> Result<CdfEstimate> {
    let d = upper.len();
    if mean.len() != d || cov.nrows() != d || cov.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: mean.len().max(cov.nrows()),
        });
    }
    if !(opts.abs_tol > 0.0) {
        return Err(Error::param("tol", opts.abs_tol, "must be positive"));
    }
    if d > opts.max_dim || d > PRIMES.len() + 1 {
        return Err(Error::Capacity {
            what: "orthant probability dimension",
            requested: d,
            limit: opts.max_dim.min(PRIMES.len() + 1),
            hint: "reduce the number of boreholes with zero thickness",
        });
    }
    if d == 0 {
        return Ok(CdfEstimate::exact(1.0));
    }
    let bounds: Vec<f64> = (0..d).map(|i| upper[i] - mean[i]).collect();
    if d == 1 {
        let v = cov[(0, 0)];
        if v < 0.0 {
            return Err(Error::NotPositiveDefinite { jitter: 0.0 });
        }
        let p = if v > 0.0 {
            normal::cdf(bounds[0] / v.sqrt())
        } else if bounds[0] >= 0.0 {
            1.0
        } else {
            0.0
        };
        return Ok(CdfEstimate::exact(p));
    }
    let integrand = GenzIntegrand::new(&bounds, cov)?;
    if integrand.first == 0.0 {
        return Ok(CdfEstimate::exact(0.0));
    }

    let dims = d - 1;
    let generator: Vec<f64> = PRIMES[..dims]
        .iter()
        .map(|&p| (p as f64).sqrt().fract())
        .collect();
    let shifts: Vec<Vec<f64>> = (0..opts.randomizations.max(2))
        .map(|_| (0..dims).map(|_| rng.random::<f64>()).collect())
        .collect();
    let r = shifts.len();
    let mut sums = vec![0.0; r];
    let mut w = vec![0.0; dims];
    let mut z = vec![0.0; d];
    let mut done = 0usize;
    let mut target = opts.min_points.max(1);
    loop {
        for (s, shift) in shifts.iter().enumerate() {
            let mut acc = 0.0;
            for k in done + 1..=target {
                let kf = k as f64;
                for i in 0..dims {
                    let x = (kf * generator[i] + shift[i]).fract();
                    w[i] = (2.0 * x - 1.0).abs();
                }
                acc += integrand.eval(&w, &mut z);
            }
            sums[s] += acc;
        }
        done = target;
        let means: Vec<f64> = sums.iter().map(|s| s / done as f64).collect();
        let mean_p = means.iter().sum::<f64>() / r as f64;
        let var = means.iter().map(|m| (m - mean_p).powi(2)).sum::<f64>() / ((r - 1) * r) as f64;
        let error = 3.0 * var.sqrt();
        let converged = error <= opts.abs_tol;
        if converged || done >= opts.max_points {
            return Ok(CdfEstimate {
                probability: mean_p.clamp(0.0, 1.0),
                error,
                converged,
                evaluations: done * r,
            });
        }
        target = (2 * done).min(opts.max_points);
    }
}

/// Gibbs sweeps used by [`TruncatedMvn`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GibbsSchedule {
    pub burn_in: usize,
    pub sweeps: usize,
}

impl Default for GibbsSchedule {
    fn default() -> Self {
        GibbsSchedule {
            burn_in: 20,
            sweeps: 50,
        }
    }
}

/// N(mean, cov) truncated to the orthant below a common bound.
#[derive(Clone, Debug)]
pub struct TruncatedMvn {
    mean: DVector<f64>,
    upper: f64,
    /// Conditional standard deviations 1/sqrt(Q_ii).
    cond_sd: Vec<f64>,
    /// Precision matrix scaled row-wise by 1/Q_ii, diagonal zeroed.
    regress: DMatrix<f64>,
    schedule: GibbsSchedule,
    region_probability: f64,
}

impl TruncatedMvn {
    /// Validates the region (probability at least 1e-300) and precomputes the
    /// full conditionals.
    pub fn new<R: Rng + ?Sized>(
        mean: DVector<f64>,
        cov: &DMatrix<f64>,
        upper: f64,
        schedule: GibbsSchedule,
        rng: &mut R,
    ) -> Result<Self> {
        let d = mean.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: cov.nrows(),
            });
        }
        let bounds = DVector::from_element(d, upper);
        let region = if d == 0 {
            1.0
        } else {
            mvn_cdf_below(&bounds, &mean, cov, &CdfOptions::with_tol(1e-3), rng)?.probability
        };
        if !(region >= 1e-300) {
            return Err(Error::DegenerateRegion {
                probability: region,
            });
        }
        let chol = CovMatrix::new(cov.clone())?;
        let precision = chol.factor().inverse();
        let mut regress = DMatrix::zeros(d, d);
        let mut cond_sd = vec![0.0; d];
        for i in 0..d {
            let qii = precision[(i, i)];
            cond_sd[i] = (1.0 / qii).sqrt();
            for k in 0..d {
                if k != i {
                    regress[(i, k)] = precision[(i, k)] / qii;
                }
            }
        }
        Ok(TruncatedMvn {
            mean,
            upper,
            cond_sd,
            regress,
            schedule,
            region_probability: region,
        })
    }

    pub fn region_probability(&self) -> f64 {
        self.region_probability
    }

    /// One draw: start from independent marginal truncated draws, then run
    /// `burn_in + sweeps` systematic Gibbs sweeps.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let d = self.mean.len();
        let mut x = DVector::zeros(d);
        if d == 1 {
            x[0] = normal::sample_below(self.mean[0], self.cond_sd[0], self.upper, rng);
            return x;
        }
        for i in 0..d {
            // marginal sd is at least the conditional one; using the
            // conditional sd is enough for a feasible start
            x[i] = normal::sample_below(self.mean[i], self.cond_sd[i], self.upper, rng);
        }
        for _ in 0..self.schedule.burn_in + self.schedule.sweeps {
            for i in 0..d {
                let mut m = self.mean[i];
                for k in 0..d {
                    if k != i {
                        m -= self.regress[(i, k)] * (x[k] - self.mean[k]);
                    }
                }
                x[i] = normal::sample_below(m, self.cond_sd[i], self.upper, rng);
            }
        }
        x
    }
}

/// Single draw from N(mean, cov) restricted to every coordinate < `upper`.
pub fn sample_truncated_mvn<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    upper: f64,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let sampler = TruncatedMvn::new(mean.clone(), cov, upper, GibbsSchedule::default(), rng)?;
    Ok(sampler.draw(rng))
}

/// Default cap on the number of simulated field nodes.
pub const FIELD_BUDGET: usize = 20_000;

/// Dense-Cholesky sampler for a unit-variance Matérn field on a fixed point set.
#[derive(Clone, Debug)]
pub struct FieldSampler {
    points: Vec<Point>,
    spec: Matern,
    lower: DMatrix<f64>,
}

impl FieldSampler {
    pub fn new(points: Vec<Point>, spec: Matern, budget: usize) -> Result<Self> {
        if points.len() > budget {
            return Err(Error::Capacity {
                what: "field simulation nodes",
                requested: points.len(),
                limit: budget,
                hint: "coarsen the simulation grid",
            });
        }
        let cov = CovMatrix::from_points(&points, &spec)?;
        let lower = cov.lower();
        Ok(FieldSampler {
            points,
            spec,
            lower,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn spec(&self) -> &Matern {
        &self.spec
    }

    pub fn unconditional<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let n = self.points.len();
        let eps = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.lower * eps
    }

    /// Conditioning by kriging: an unconditional draw corrected by the simple
    /// kriging of its residuals at the data nodes. Data nodes are indices into
    /// the sampler's point set and are returned with exactly the given values.
    pub fn conditional<R: Rng + ?Sized>(
        &self,
        data_nodes: &[usize],
        values: &[f64],
        rng: &mut R,
    ) -> Result<DVector<f64>> {
        if data_nodes.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: data_nodes.len(),
                got: values.len(),
            });
        }
        let mut field = self.unconditional(rng);
        if data_nodes.is_empty() {
            return Ok(field);
        }
        let data_pts: Vec<Point> = data_nodes.iter().map(|&i| self.points[i]).collect();
        let s_dd = CovMatrix::from_points(&data_pts, &self.spec)?;
        let resid = DVector::from_fn(data_nodes.len(), |k, _| values[k] - field[data_nodes[k]]);
        let coef = s_dd.solve(&resid);
        for (i, p) in self.points.iter().enumerate() {
            let corr: f64 = data_pts
                .iter()
                .zip(coef.iter())
                .map(|(q, c)| self.spec.correlation(p.distance(q)) * c)
                .sum();
            field[i] += corr;
        }
        for (&i, &v) in data_nodes.iter().zip(values) {
            field[i] = v;
        }
        Ok(field)
    }
}

/// Draws a Matérn field at `points`, optionally conditioned on values at other
/// locations. Conditioning points coinciding with a field point (within 1e-9
/// km) reuse that node; others are simulated jointly and then dropped.
pub fn sample_gaussian_field<R: Rng + ?Sized>(
    points: &[Point],
    spec: &Matern,
    conditioning: Option<(&[Point], &[f64])>,
    budget: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut all = points.to_vec();
    let mut nodes = Vec::new();
    let mut values = Vec::new();
    if let Some((cpts, cvals)) = conditioning {
        if cpts.len() != cvals.len() {
            return Err(Error::DimensionMismatch {
                expected: cpts.len(),
                got: cvals.len(),
            });
        }
        for (p, &v) in cpts.iter().zip(cvals) {
            let idx = match all.iter().position(|q| q.distance(p) <= 1e-9) {
                Some(i) => i,
                None => {
                    all.push(*p);
                    all.len() - 1
                }
            };
            nodes.push(idx);
            values.push(v);
        }
    }
    let sampler = FieldSampler::new(all, *spec, budget)?;
    let field = sampler.conditional(&nodes, &values, rng)?;
    Ok(field.iter().take(points.len()).cloned().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn matern_closed_forms() {
        for nu in [Smoothness::Half, Smoothness::ThreeHalves, Smoothness::FiveHalves] {
            assert_eq!(Matern::new(nu, 2.0).unwrap().correlation(0.0), 1.0);
        }
        let m = Matern::new(Smoothness::ThreeHalves, 3.0).unwrap();
        assert!((m.correlation(3.0) - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert!((m.correlation(3.0) - 0.735759).abs() < 1e-6);
        let m = Matern::new(Smoothness::Half, 3.0).unwrap();
        assert!((m.correlation(3.0) - 0.367879).abs() < 1e-6);
        assert!(Matern::new(Smoothness::Half, 0.0).is_err());
        assert!(Matern::new(Smoothness::Half, -1.0).is_err());
        assert!(Smoothness::from_value(1.0).is_err());
        assert_eq!("3/2".parse::<Smoothness>().unwrap(), Smoothness::ThreeHalves);
        assert_eq!("2.5".parse::<Smoothness>().unwrap(), Smoothness::FiveHalves);
    }

    #[test]
    fn condition_single_zero_datum() {
        let m = Matern::new(Smoothness::ThreeHalves, 1.0).unwrap();
        let pts = [Point::new(0.0, 0.0), Point::new(0.5, 0.0), Point::new(2.0, 0.0)];
        let joint = correlation_matrix(&pts, &m);
        let c = condition(&joint, &[0], &DVector::from_vec(vec![0.0]), &[1, 2]).unwrap();
        assert!(c.mean.iter().all(|v| v.abs() < 1e-15));
        for (k, h) in [0.5, 2.0].iter().enumerate() {
            let r = m.correlation(*h);
            assert!((c.cov[(k, k)] - (1.0 - r * r)).abs() < 1e-12);
        }
    }

    #[test]
    fn condition_far_point_is_independent() {
        let m = Matern::new(Smoothness::Half, 1.0).unwrap();
        let pts = [Point::new(0.0, 0.0), Point::new(1e4, 0.0)];
        let joint = correlation_matrix(&pts, &m);
        let c = condition(&joint, &[0], &DVector::from_vec(vec![1.3]), &[1]).unwrap();
        assert_eq!(c.mean[0], 0.0);
        assert_eq!(c.cov[(0, 0)], 1.0);
    }

    #[test]
    fn condition_without_unknowns_is_empty() {
        let joint = DMatrix::identity(2, 2);
        let c = condition(&joint, &[0, 1], &DVector::from_vec(vec![1.0, 2.0]), &[]).unwrap();
        assert_eq!(c.mean.len(), 0);
        assert_eq!(c.cov.nrows(), 0);
    }

    #[test]
    fn logpdf_examples() {
        let one = CovMatrix::new(DMatrix::identity(1, 1)).unwrap();
        let lp = mvn_logpdf(&DVector::zeros(1), &DVector::zeros(1), &one).unwrap();
        assert!((lp + 0.918939).abs() < 1e-6);

        let x = DVector::from_vec(vec![0.3, -1.2]);
        let two = CovMatrix::new(DMatrix::identity(2, 2)).unwrap();
        let lp = mvn_logpdf(&x, &DVector::zeros(2), &two).unwrap();
        assert!((lp - normal::ln_pdf(0.3) - normal::ln_pdf(-1.2)).abs() < 1e-12);

        let rho: f64 = 0.5;
        let cov = CovMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0])).unwrap();
        let x = DVector::from_vec(vec![1.0, 1.0]);
        let expect = -(2.0 * std::f64::consts::PI).ln()
            - 0.5 * (1.0 - rho * rho).ln()
            - (1.0 - 2.0 * rho + 1.0) / (2.0 * (1.0 - rho * rho));
        assert!((mvn_logpdf(&x, &DVector::zeros(2), &cov).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn jitter_rescues_duplicate_points() {
        let m = Matern::new(Smoothness::ThreeHalves, 1.0).unwrap();
        let pts = [Point::new(0.0, 0.0), Point::new(0.0, 0.0), Point::new(1.0, 0.0)];
        let cov = CovMatrix::from_points(&pts, &m).unwrap();
        assert!(cov.jitter() >= JITTER_START && cov.jitter() <= JITTER_MAX);
        let plain = CovMatrix::new(DMatrix::identity(3, 3)).unwrap();
        assert_eq!(plain.jitter(), 0.0);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            CovMatrix::new(bad),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn cdf_simple_cases() {
        let mut r = rng(3);
        let opts = CdfOptions::default();
        let p = mvn_cdf_below(
            &DVector::zeros(1),
            &DVector::zeros(1),
            &DMatrix::identity(1, 1),
            &opts,
            &mut r,
        )
        .unwrap();
        assert_eq!(p.probability, 0.5);
        assert_eq!(p.error, 0.0);

        let p = mvn_cdf_below(
            &DVector::zeros(3),
            &DVector::zeros(3),
            &DMatrix::identity(3, 3),
            &opts,
            &mut r,
        )
        .unwrap();
        assert!((p.probability - 0.125).abs() < 1e-4, "{p:?}");
        assert!(p.converged);
    }

    #[test]
    fn cdf_capacity_and_dimension_errors() {
        let mut r = rng(0);
        let opts = CdfOptions {
            max_dim: 3,
            ..CdfOptions::default()
        };
        let err = mvn_cdf_below(
            &DVector::zeros(4),
            &DVector::zeros(4),
            &DMatrix::identity(4, 4),
            &opts,
            &mut r,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Capacity { .. }));
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(mvn_cdf_below(&DVector::zeros(2), &DVector::zeros(2), &bad, &opts, &mut r).is_err());
    }

    #[test]
    fn cdf_monotone_in_each_bound() {
        let mut r = rng(9);
        let cov = DMatrix::from_row_slice(3, 3, &[1.0, 0.4, 0.2, 0.4, 1.0, 0.5, 0.2, 0.5, 1.0]);
        let mean = DVector::zeros(3);
        let base = [0.1, -0.3, 0.5];
        let opts = CdfOptions::with_tol(1e-5);
        let p0 = mvn_cdf_below(&DVector::from_row_slice(&base), &mean, &cov, &opts, &mut r)
            .unwrap()
            .probability;
        for i in 0..3 {
            let mut b = base;
            b[i] += 0.3;
            let p1 = mvn_cdf_below(&DVector::from_row_slice(&b), &mean, &cov, &opts, &mut r)
                .unwrap()
                .probability;
            assert!(p1 > p0, "coordinate {i}: {p1} <= {p0}");
        }
    }

    #[test]
    fn truncated_univariate_mean() {
        let mut r = rng(11);
        let s = TruncatedMvn::new(
            DVector::zeros(1),
            &DMatrix::identity(1, 1),
            0.0,
            GibbsSchedule::default(),
            &mut r,
        )
        .unwrap();
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let x = s.draw(&mut r)[0];
            assert!(x < 0.0);
            sum += x;
            sum2 += x * x;
        }
        let mean = sum / n as f64;
        let se = ((sum2 / n as f64 - mean * mean) / n as f64).sqrt();
        let expect = -normal::pdf(0.0) / normal::cdf(0.0);
        assert!((expect + 0.7979).abs() < 1e-4);
        assert!((mean - expect).abs() < 3.0 * se, "{mean} vs {expect}");
    }

    #[test]
    fn truncated_independent_coordinates_uncorrelated() {
        let mut r = rng(12);
        let s = TruncatedMvn::new(
            DVector::zeros(2),
            &DMatrix::identity(2, 2),
            0.5,
            GibbsSchedule::default(),
            &mut r,
        )
        .unwrap();
        let n = 20_000;
        let draws: Vec<DVector<f64>> = (0..n).map(|_| s.draw(&mut r)).collect();
        let m0 = draws.iter().map(|x| x[0]).sum::<f64>() / n as f64;
        let m1 = draws.iter().map(|x| x[1]).sum::<f64>() / n as f64;
        let cov = draws.iter().map(|x| (x[0] - m0) * (x[1] - m1)).sum::<f64>() / n as f64;
        let v0 = draws.iter().map(|x| (x[0] - m0).powi(2)).sum::<f64>() / n as f64;
        let v1 = draws.iter().map(|x| (x[1] - m1).powi(2)).sum::<f64>() / n as f64;
        let corr = cov / (v0 * v1).sqrt();
        // SE of a sample correlation near zero is 1/sqrt(n)
        assert!(corr.abs() < 3.0 / (n as f64).sqrt(), "corr {corr}");
    }

    #[test]
    fn truncated_support_is_respected() {
        let mut r = rng(13);
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.8, 0.8, 1.0]);
        let s = TruncatedMvn::new(DVector::zeros(2), &cov, -1.0, GibbsSchedule::default(), &mut r)
            .unwrap();
        for _ in 0..100_000 {
            let x = s.draw(&mut r);
            assert!(x[0] < -1.0 && x[1] < -1.0);
        }
    }

    #[test]
    fn truncated_degenerate_region() {
        let mut r = rng(14);
        let err = sample_truncated_mvn(
            &DVector::from_element(2, 60.0),
            &DMatrix::identity(2, 2),
            0.0,
            &mut r,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateRegion { .. }));
    }

    #[test]
    fn field_interpolates_and_is_deterministic() {
        let m = Matern::new(Smoothness::ThreeHalves, 5.0).unwrap();
        let pts: Vec<Point> = (0..30).map(|i| Point::new(i as f64, 0.0)).collect();
        let cpts = [Point::new(10.0, 0.0), Point::new(12.5, 0.0)];
        let vals = [0.0, 0.0];
        let f = sample_gaussian_field(&pts, &m, Some((&cpts, &vals)), FIELD_BUDGET, &mut rng(1))
            .unwrap();
        assert_eq!(f[10], 0.0);
        let a = sample_gaussian_field(&pts, &m, None, FIELD_BUDGET, &mut rng(5)).unwrap();
        let b = sample_gaussian_field(&pts, &m, None, FIELD_BUDGET, &mut rng(5)).unwrap();
        assert_eq!(a, b);

        let err = sample_gaussian_field(&pts, &m, None, 10, &mut rng(5)).unwrap_err();
        assert!(matches!(err, Error::Capacity { .. }));
    }

    #[test]
    fn conditional_field_reproduces_offgrid_data() {
        let m = Matern::new(Smoothness::FiveHalves, 4.0).unwrap();
        let pts: Vec<Point> = (0..20).map(|i| Point::new(i as f64, 1.0)).collect();
        let mut all = pts.clone();
        all.push(Point::new(3.3, 0.2));
        let sampler = FieldSampler::new(all, m, FIELD_BUDGET).unwrap();
        let f = sampler.conditional(&[20, 7], &[1.7, -0.4], &mut rng(2)).unwrap();
        assert_eq!(f[20], 1.7);
        assert_eq!(f[7], -0.4);
        // kriging correction alone already interpolates to high accuracy
        let g = sampler.unconditional(&mut rng(2));
        assert_ne!(g[7], -0.4);
    }

    #[test]
    fn variogram_matches_correlation() {
        let alpha = 10.0;
        let m = Matern::new(Smoothness::ThreeHalves, alpha).unwrap();
        let pts: Vec<Point> = (0..60).map(|i| Point::new(i as f64 * 0.5, 0.0)).collect();
        let sampler = FieldSampler::new(pts, m, FIELD_BUDGET).unwrap();
        let mut r = rng(77);
        let lags = [2usize, 6, 12, 20]; // h = 1, 3, 6, 10 km
        let mut gamma = vec![0.0; lags.len()];
        let mut counts = vec![0usize; lags.len()];
        for _ in 0..200 {
            let f = sampler.unconditional(&mut r);
            for (k, &lag) in lags.iter().enumerate() {
                for i in 0..f.len() - lag {
                    gamma[k] += 0.5 * (f[i + lag] - f[i]).powi(2);
                    counts[k] += 1;
                }
            }
        }
        for (k, &lag) in lags.iter().enumerate() {
            let emp = gamma[k] / counts[k] as f64;
            let theory = 1.0 - m.correlation(lag as f64 * 0.5);
            assert!(
                (emp - theory).abs() <= 0.1 * theory,
                "h={}: {emp} vs {theory}",
                lag as f64 * 0.5
            );
        }
    }

    #[test]
    fn condition_matches_direct_trivariate_inversion() {
        // points on a line with ρ(1) = 0.5 and ρ(2) = 0.25
        let joint = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.5, 0.25, 0.5, 1.0, 0.5, 0.25, 0.5, 1.0],
        );
        let w = DVector::from_vec(vec![1.0, -1.0]);
        let c = condition(&joint, &[0, 2], &w, &[1]).unwrap();
        // conditional of x2 from the precision matrix: mean = -Q21 x1/Q22 - Q23 x3/Q22
        let q = joint.clone().try_inverse().unwrap();
        let mean = (q[(1, 2)] - q[(1, 0)]) / q[(1, 1)];
        let var = 1.0 / q[(1, 1)];
        assert!((c.mean[0] - mean).abs() < 1e-10);
        assert!((c.cov[(0, 0)] - var).abs() < 1e-10);
    }

    #[test]
    fn cdf_bivariate_orthant_closed_form() {
        let mut r = rng(21);
        for rho in [-0.9f64, -0.5, 0.0, 0.5, 0.9] {
            let cov = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
            let est = mvn_cdf_below(
                &DVector::zeros(2),
                &DVector::zeros(2),
                &cov,
                &CdfOptions::default(),
                &mut r,
            )
            .unwrap();
            let exact = 0.25 + rho.asin() / (2.0 * std::f64::consts::PI);
            assert!((est.probability - exact).abs() < 1e-3, "rho {rho}: {est:?}");
        }
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let est = mvn_cdf_below(
            &DVector::zeros(2),
            &DVector::zeros(2),
            &cov,
            &CdfOptions::default(),
            &mut r,
        )
        .unwrap();
        assert!((est.probability - 1.0 / 3.0).abs() < 1e-4, "{est:?}");
    }

    #[test]
    fn cdf_high_dimension_product() {
        // independent coordinates: the estimator is exact for a product integrand
        let mut r = rng(22);
        let d = 12;
        let b = DVector::from_fn(d, |i, _| -0.5 + 0.1 * i as f64);
        let est = mvn_cdf_below(
            &b,
            &DVector::zeros(d),
            &DMatrix::identity(d, d),
            &CdfOptions::default(),
            &mut r,
        )
        .unwrap();
        let exact: f64 = b.iter().map(|&x| normal::cdf(x)).product();
        assert!((est.probability - exact).abs() < 1e-4, "{est:?} vs {exact}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn nu() -> impl Strategy<Value = Smoothness> {
            prop_oneof![
                Just(Smoothness::Half),
                Just(Smoothness::ThreeHalves),
                Just(Smoothness::FiveHalves)
            ]
        }

        proptest! {
            #[test]
            fn matern_is_nonincreasing(nu in nu(), alpha in 0.01f64..100.0, h in 0.0f64..500.0, dh in 0.0f64..50.0) {
                let m = Matern::new(nu, alpha).unwrap();
                prop_assert_eq!(m.correlation(0.0), 1.0);
                let a = m.correlation(h);
                let b = m.correlation(h + dh);
                prop_assert!((0.0..=1.0).contains(&a));
                prop_assert!(b <= a + 1e-15);
                // continuity
                prop_assert!((m.correlation(h + 1e-9) - a).abs() < 1e-6);
            }

            #[test]
            fn conditional_variance_never_exceeds_prior(
                nu in nu(),
                alpha in 0.5f64..50.0,
                coords in proptest::collection::vec((0.0f64..100.0, 0.0f64..100.0), 3..9),
                nknown in 1usize..3,
            ) {
                let pts: Vec<Point> = coords.iter().map(|&(x, y)| Point::new(x, y)).collect();
                let m = Matern::new(nu, alpha).unwrap();
                let joint = correlation_matrix(&pts, &m);
                let known: Vec<usize> = (0..nknown).collect();
                let unknown: Vec<usize> = (nknown..pts.len()).collect();
                let vals = DVector::from_element(nknown, 0.7);
                if let Ok(c) = condition(&joint, &known, &vals, &unknown) {
                    for i in 0..unknown.len() {
                        prop_assert!(c.cov[(i, i)] <= 1.0 + 1e-10);
                        prop_assert!((c.cov[(i, 0)] - c.cov[(0, i)]).abs() <= 1e-12);
                    }
                }
            }

            #[test]
            fn kriging_reproduces_data(
                seed in 0u64..1000,
                coords in proptest::collection::vec((0.0f64..50.0, 0.0f64..50.0), 2..6),
                vals in proptest::collection::vec(-3.0f64..3.0, 6),
            ) {
                let m = Matern::new(Smoothness::ThreeHalves, 8.0).unwrap();
                let mut pts: Vec<Point> = (0..10).map(|i| Point::new(5.0 * i as f64, 25.0)).collect();
                let start = pts.len();
                pts.extend(coords.iter().map(|&(x, y)| Point::new(x, y)));
                let nodes: Vec<usize> = (start..pts.len()).collect();
                let v = &vals[..nodes.len()];
                let s = FieldSampler::new(pts, m, FIELD_BUDGET).unwrap();
                let f = s.conditional(&nodes, v, &mut rng(seed)).unwrap();
                for (&i, &x) in nodes.iter().zip(v) {
                    prop_assert!((f[i] - x).abs() <= 1e-8);
                }
            }
        }
    }
}
