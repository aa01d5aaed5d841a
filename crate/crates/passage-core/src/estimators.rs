//! Monte Carlo and analytic estimators for passage probabilities, tail
//! constants, sharp approximations, and explicit bounds.
//!
//! Every sampling estimator splits its budget into independently seeded
//! chunks and reduces them in a fixed order, so a run is bit-reproducible
//! for a given `(seed, stream, n_chunks)` and statistically equivalent
//! across chunk counts. The [`Executor`] decides whether chunks run
//! sequentially or in parallel; results do not depend on the choice.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::cgf::{cgf_profile, regime_report, solve_slope, solve_xi, summarize, Regime};
use crate::error::{Error, Result};
use crate::model::{Family, PairLaw, TableAtom};
use crate::process::{passage_unchecked, Comparison, PathState};
use crate::rng::stream_rng;
use crate::tilt::{tilt, TiltedLaw};

/// Chunk scheduler. Implementations must return the chunk results in
/// chunk-index order; the provided sequential executor does, and a
/// parallel executor collecting into an indexed vector does too.
pub trait Executor {
    fn run_chunks<A, F>(&self, n_chunks: u32, f: F) -> Vec<A>
    where
        A: Send,
        F: Fn(u32) -> A + Sync + Send;
}

/// Runs chunks one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct SeqExecutor;

impl Executor for SeqExecutor {
    fn run_chunks<A, F>(&self, n_chunks: u32, f: F) -> Vec<A>
    where
        A: Send,
        F: Fn(u32) -> A + Sync + Send,
    {
        (0..n_chunks).map(f).collect()
    }
}

/// Default number of independently seeded chunks per estimator call.
pub const DEFAULT_CHUNKS: u32 = 64;

/// Seeding plan for one estimator call: chunk i draws from stream
/// `stream + i` under the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleCfg {
    pub seed: u64,
    pub stream: u64,
    pub n_chunks: u32,
}

impl SampleCfg {
    pub fn new(seed: u64) -> Self {
        SampleCfg {
            seed,
            stream: 0,
            n_chunks: DEFAULT_CHUNKS,
        }
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn with_chunks(mut self, n_chunks: u32) -> Self {
        self.n_chunks = n_chunks.max(1);
        self
    }

    fn rng(&self, chunk: u32) -> rand_chacha::ChaCha8Rng {
        stream_rng(self.seed, self.stream.wrapping_add(chunk as u64))
    }

    fn effective_chunks(&self, total: u64) -> u32 {
        (self.n_chunks as u64).min(total).max(1) as u32
    }
}

fn chunk_len(total: u64, n_chunks: u32, chunk: u32) -> u64 {
    let n = n_chunks as u64;
    total / n + u64::from((chunk as u64) < total % n)
}

fn run_fallible<A, F, E>(exec: &E, n_chunks: u32, f: F) -> Result<Vec<A>>
where
    A: Send,
    E: Executor,
    F: Fn(u32) -> Result<A> + Sync + Send,
{
    exec.run_chunks(n_chunks, f).into_iter().collect()
}

/// Estimation method tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Crude,
    Importance,
    Enumeration,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Crude => "crude",
            Method::Importance => "importance",
            Method::Enumeration => "enumeration",
        }
    }
}

/// A Monte Carlo (or exact) estimate with its sampling diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub method: Method,
    pub ci95: (f64, f64),
    /// (Σw)²/Σw² for importance weights; the nominal sample count
    /// otherwise. Values below ~100 signal unreliable weighting.
    pub ess: f64,
    /// Number of likelihood-ratio exponents clamped at ±700.
    pub weight_clamps: u64,
}

impl Estimate {
    fn new(
        value: f64,
        stderr: f64,
        n_samples: u64,
        method: Method,
        ess: f64,
        weight_clamps: u64,
    ) -> Self {
        Estimate {
            value,
            stderr,
            n_samples,
            method,
            ci95: (value - 1.96 * stderr, value + 1.96 * stderr),
            ess,
            weight_clamps,
        }
    }
}

/// An estimate of a series limit, with the dyadic truncation ladder used
/// to judge convergence.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesEstimate {
    pub estimate: Estimate,
    /// (truncation depth, estimate at that depth), at powers of two up to
    /// the requested depth.
    pub ladder: Vec<(u32, f64)>,
    /// |value(n) - value(n/2)| relative to the standard error.
    pub half_shift_over_stderr: f64,
}

/// An estimate of a tail constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantEstimate {
    pub estimate: Estimate,
    /// Set when the law of log A is flagged arithmetic: the sharp-constant
    /// asymptotics assume a nonarithmetic law.
    pub lattice_warning: bool,
}

/// Number of initial steps discarded when the forward chain must be near
/// stationarity.
pub const STATIONARY_BURN_IN: u64 = 1000;

/// Minimum number of exceedances for a tail grid point to enter the fit.
pub const MIN_EXCEEDANCES: u64 = 30;

/// The horizon n_u = ⌊τ log u⌋ of the scaled time window [0, τ].
pub fn scaled_horizon(u: f64, tau: f64) -> u64 {
    (tau * u.ln()).floor() as u64
}

fn validate_u_tau(operation: &'static str, u: f64, tau: f64) -> Result<()> {
    if !(u > 1.0) {
        return Err(Error::Precondition {
            operation,
            detail: format!("level must exceed 1, got {u}"),
        });
    }
    if !(tau > 0.0) {
        return Err(Error::Precondition {
            operation,
            detail: format!("horizon must be positive, got {tau}"),
        });
    }
    Ok(())
}

#[derive(Default)]
struct HitAcc {
    n: u64,
    hits: u64,
}

#[derive(Default)]
struct WeightAcc {
    n: u64,
    hits: u64,
    sum_w: f64,
    sum_w2: f64,
    clamps: u64,
}

/// Estimate P{T_u ≤ τ}, the probability that the perpetuity passes the
/// level u within the scaled time window, by the requested method.
///
/// Crude sampling runs the backward recursion to the horizon n_u;
/// importance sampling draws from the tilt matching the target regime
/// (α(τ) before the concentration time, ξ at or beyond it) and averages
/// stopped likelihood ratios over hits; enumeration sums exact path
/// probabilities for small atomic laws.
///
/// The estimator stays unbiased for every horizon, but past the
/// concentration time no single tilt is variance-optimal; when the drift
/// condition of [`crate::cgf::RegimeReport::count1_holds`] is in force
/// the weights can degrade badly — watch the reported effective sample
/// size.
pub fn prob_passage<E: Executor>(
    law: &PairLaw,
    u: f64,
    tau: f64,
    n_samples: u64,
    method: Method,
    cfg: &SampleCfg,
    exec: &E,
) -> Result<Estimate> {
    validate_u_tau("prob_passage", u, tau)?;
    let n_u = scaled_horizon(u, tau);
    match method {
        Method::Enumeration => enumerate_passage(law, u, n_u),
        Method::Crude => {
            if n_samples == 0 {
                return Err(Error::Precondition {
                    operation: "prob_passage",
                    detail: String::from("need at least one sample"),
                });
            }
            let n_chunks = cfg.effective_chunks(n_samples);
            let accs = run_fallible(exec, n_chunks, |chunk| {
                let mut rng = cfg.rng(chunk);
                let len = chunk_len(n_samples, n_chunks, chunk);
                let mut acc = HitAcc::default();
                for _ in 0..len {
                    let out = passage_unchecked(law, u, n_u, &mut rng, Comparison::Strict)?;
                    acc.n += 1;
                    acc.hits += u64::from(out.hit);
                }
                Ok(acc)
            })?;
            let (mut n, mut hits) = (0u64, 0u64);
            for a in &accs {
                n += a.n;
                hits += a.hits;
            }
            let p = hits as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            Ok(Estimate::new(p, se, n, Method::Crude, n as f64, 0))
        }
        Method::Importance => {
            if n_samples == 0 {
                return Err(Error::Precondition {
                    operation: "prob_passage",
                    detail: String::from("need at least one sample"),
                });
            }
            let summary = summarize(law, tau)?;
            let tilt_point = if summary.tau < summary.rho * (1.0 - 1e-12) {
                summary.alpha
            } else {
                summary.xi
            };
            let tilted = tilt(law, tilt_point)?;
            let acc = importance_passage(&tilted, u, n_u, n_samples, cfg, exec)?;
            Ok(weighted_estimate(&acc))
        }
    }
}

fn importance_passage<E: Executor>(
    tilted: &TiltedLaw,
    u: f64,
    horizon: u64,
    n_samples: u64,
    cfg: &SampleCfg,
    exec: &E,
) -> Result<WeightAcc> {
    let n_chunks = cfg.effective_chunks(n_samples);
    let accs = run_fallible(exec, n_chunks, |chunk| {
        let mut rng = cfg.rng(chunk);
        let len = chunk_len(n_samples, n_chunks, chunk);
        let mut acc = WeightAcc::default();
        for _ in 0..len {
            let out = passage_unchecked(tilted, u, horizon, &mut rng, Comparison::Strict)?;
            acc.n += 1;
            if out.hit {
                acc.hits += 1;
                acc.sum_w += out.weight;
                acc.sum_w2 += out.weight * out.weight;
                acc.clamps += u64::from(out.weight_clamped);
            }
        }
        Ok(acc)
    })?;
    let mut total = WeightAcc::default();
    for a in &accs {
        total.n += a.n;
        total.hits += a.hits;
        total.sum_w += a.sum_w;
        total.sum_w2 += a.sum_w2;
        total.clamps += a.clamps;
    }
    Ok(total)
}

fn weighted_estimate(acc: &WeightAcc) -> Estimate {
    let n = acc.n as f64;
    let mean = acc.sum_w / n;
    let var = ((acc.sum_w2 - acc.sum_w * acc.sum_w / n) / (n - 1.0).max(1.0)).max(0.0);
    let se = (var / n).sqrt();
    let ess = if acc.sum_w2 > 0.0 {
        acc.sum_w * acc.sum_w / acc.sum_w2
    } else {
        0.0
    };
    Estimate::new(mean, se, acc.n, Method::Importance, ess, acc.clamps)
}

/// Exact P{T_u ≤ n_u steps} for atomic laws with at most two atoms and a
/// horizon of at most 24, by depth-first enumeration with pruning at the
/// first crossing.
fn enumerate_passage(law: &PairLaw, u: f64, n_u: u64) -> Result<Estimate> {
    let atoms: Vec<TableAtom> = match law.family() {
        Family::TwoPointA { a1, a2, p1, p2, b } => vec![
            TableAtom {
                a: *a1,
                b: *b,
                p: *p1,
            },
            TableAtom {
                a: *a2,
                b: *b,
                p: *p2,
            },
        ],
        Family::Table { atoms } => atoms.clone(),
        _ => {
            return Err(Error::Precondition {
                operation: "prob_passage",
                detail: String::from("enumeration requires an atomic law"),
            })
        }
    };
    let atoms: Vec<TableAtom> = atoms.into_iter().filter(|t| t.p > 0.0).collect();
    if atoms.len() > 2 || n_u > 24 {
        return Err(Error::EnumerationTooLarge {
            n_atoms: atoms.len(),
            horizon: n_u,
        });
    }
    fn dfs(atoms: &[TableAtom], u: f64, steps_left: u64, state: PathState, prob: f64) -> f64 {
        if steps_left == 0 {
            return 0.0;
        }
        let mut total = 0.0;
        for atom in atoms {
            let mut next = state;
            next.step(atom.a, atom.b);
            if next.backward() > u {
                total += prob * atom.p;
            } else {
                total += dfs(atoms, u, steps_left - 1, next, prob * atom.p);
            }
        }
        total
    }
    let value = dfs(&atoms, u, n_u, PathState::new(), 1.0);
    let paths = (atoms.len() as u64).pow(n_u.min(24) as u32);
    Ok(Estimate::new(
        value,
        0.0,
        paths,
        Method::Enumeration,
        paths as f64,
        0,
    ))
}

/// Estimate P{M*_{n_u} > u} for the forward reflected chain by crude
/// Monte Carlo — the duality partner of [`prob_passage`].
pub fn prob_exceedance_forward<E: Executor>(
    law: &PairLaw,
    u: f64,
    tau: f64,
    n_samples: u64,
    cfg: &SampleCfg,
    exec: &E,
) -> Result<Estimate> {
    validate_u_tau("prob_exceedance_forward", u, tau)?;
    if n_samples == 0 {
        return Err(Error::Precondition {
            operation: "prob_exceedance_forward",
            detail: String::from("need at least one sample"),
        });
    }
    let n_u = scaled_horizon(u, tau);
    let n_chunks = cfg.effective_chunks(n_samples);
    let accs = run_fallible(exec, n_chunks, |chunk| {
        let mut rng = cfg.rng(chunk);
        let len = chunk_len(n_samples, n_chunks, chunk);
        let mut acc = HitAcc::default();
        for _ in 0..len {
            let mut m = 0.0f64;
            for _ in 0..n_u {
                let (a, b) = law.sample_pair(&mut rng);
                m = (a * m + b).max(0.0);
            }
            acc.n += 1;
            acc.hits += u64::from(m > u);
        }
        Ok(acc)
    })?;
    let (mut n, mut hits) = (0u64, 0u64);
    for a in &accs {
        n += a.n;
        hits += a.hits;
    }
    let p = hits as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    Ok(Estimate::new(p, se, n, Method::Crude, n as f64, 0))
}

fn dyadic_levels(n_terms: u32) -> Vec<u32> {
    let mut levels = Vec::new();
    let mut k = 1u32;
    while k <= n_terms {
        levels.push(k);
        if k > n_terms / 2 {
            break;
        }
        k *= 2;
    }
    if *levels.last().unwrap() != n_terms {
        levels.push(n_terms);
    }
    levels
}

/// Running suffix maximum of the reciprocal pair sequence: with
/// (Ã, B̃) = (1/A, B/A), the increments d_n = Ã_1⋯Ã_{n-1} B̃_n drive the
/// reflected recursion X_n = (X_{n-1} + d_n)⁺. Returns X_1, …, X_n for the
/// given base-coordinate pairs.
pub fn suffix_max_path(pairs: &[(f64, f64)]) -> Vec<f64> {
    let mut walk = SuffixMax::new();
    pairs.iter().map(|&(a, b)| walk.step(a, b)).collect()
}

struct SuffixMax {
    prod_recip: f64,
    x: f64,
}

impl SuffixMax {
    fn new() -> Self {
        SuffixMax {
            prod_recip: 1.0,
            x: 0.0,
        }
    }

    #[inline]
    fn step(&mut self, a: f64, b: f64) -> f64 {
        let d = self.prod_recip * (b / a);
        self.prod_recip /= a;
        self.x = (self.x + d).max(0.0);
        self.x
    }
}

/// Estimate the small-time prefactor constant C(τ).
///
/// Under the α(τ)-tilted measure the normalized maximum functional has the
/// dual representation as the running suffix maximum X_n of the reciprocal
/// pair sequence (Ã, B̃) = (1/A, B/A); X_n obeys the reflected recursion
/// X_n = (X_{n-1} + Ã_1⋯Ã_{n-1} B̃_n)⁺ and converges absolutely. The
/// estimate is E_α[X_n^α] scaled by 1/(α σ(α) √(2πτ)).
pub fn estimate_c_tau<E: Executor>(
    law: &PairLaw,
    tau: f64,
    n_terms: u32,
    n_samples: u64,
    cfg: &SampleCfg,
    exec: &E,
) -> Result<SeriesEstimate> {
    if n_terms == 0 || n_samples == 0 {
        return Err(Error::Precondition {
            operation: "estimate_c_tau",
            detail: String::from("need at least one term and one sample"),
        });
    }
    let summary = summarize(law, tau)?;
    if summary.regime != Regime::SmallTime {
        return Err(Error::Precondition {
            operation: "estimate_c_tau",
            detail: format!(
                "the prefactor is a small-time constant; τ = {tau} is {} (ρ = {})",
                summary.regime.as_str(),
                summary.rho
            ),
        });
    }
    let alpha = summary.alpha;
    let profile = cgf_profile(law, alpha)?;
    let prefactor =
        1.0 / (alpha * profile.variance.sqrt() * (2.0 * core::f64::consts::PI * tau).sqrt());
    let tilted = tilt(law, alpha)?;
    let levels = dyadic_levels(n_terms);

    struct Acc {
        n: u64,
        level_sums: Vec<f64>,
        final_sum: f64,
        final_sumsq: f64,
    }
    let n_chunks = cfg.effective_chunks(n_samples);
    let accs = run_fallible(exec, n_chunks, |chunk| {
        let mut rng = cfg.rng(chunk);
        let len = chunk_len(n_samples, n_chunks, chunk);
        let mut acc = Acc {
            n: 0,
            level_sums: vec![0.0; levels.len()],
            final_sum: 0.0,
            final_sumsq: 0.0,
        };
        for _ in 0..len {
            let mut walk = SuffixMax::new();
            let mut x = 0.0f64;
            let mut level_idx = 0;
            for j in 1..=n_terms {
                let (a, b) = tilted.sample_pair(&mut rng)?;
                x = walk.step(a, b);
                if level_idx < levels.len() && levels[level_idx] == j {
                    acc.level_sums[level_idx] += x.powf(alpha);
                    level_idx += 1;
                }
            }
            let v = x.powf(alpha);
            acc.final_sum += v;
            acc.final_sumsq += v * v;
            acc.n += 1;
        }
        Ok(acc)
    })?;
    let mut n = 0u64;
    let mut level_sums = vec![0.0; levels.len()];
    let mut final_sum = 0.0;
    let mut final_sumsq = 0.0;
    for a in &accs {
        n += a.n;
        for (s, v) in level_sums.iter_mut().zip(&a.level_sums) {
            *s += v;
        }
        final_sum += a.final_sum;
        final_sumsq += a.final_sumsq;
    }
    let nf = n as f64;
    let mean = final_sum / nf;
    let var = ((final_sumsq - final_sum * final_sum / nf) / (nf - 1.0).max(1.0)).max(0.0);
    let stderr = prefactor * (var / nf).sqrt();
    let value = prefactor * mean;
    let ladder: Vec<(u32, f64)> = levels
        .iter()
        .zip(&level_sums)
        .map(|(&k, &s)| (k, prefactor * s / nf))
        .collect();
    let half_value = ladder
        .iter()
        .rev()
        .find(|(k, _)| *k <= n_terms / 2)
        .map(|(_, v)| *v)
        .unwrap_or(value);
    let half_shift_over_stderr = if stderr > 0.0 {
        (value - half_value).abs() / stderr
    } else {
        0.0
    };
    Ok(SeriesEstimate {
        estimate: Estimate::new(value, stderr, n, Method::Importance, nf, 0),
        ladder,
        half_shift_over_stderr,
    })
}

/// Estimate the stationary-tail constant by Goldie's implicit-renewal
/// characterization: E[((AM+B)⁺)^ξ - (AM)^ξ] / (ξ μ(ξ)), with M drawn
/// near-stationary by burning in the forward reflected chain.
///
/// The chain samples are serially dependent, so the standard error comes
/// from between-chunk variation of independent chains.
pub fn estimate_cm_goldie<E: Executor>(
    law: &PairLaw,
    burn_in: u64,
    n_samples: u64,
    cfg: &SampleCfg,
    exec: &E,
) -> Result<ConstantEstimate> {
    if n_samples == 0 {
        return Err(Error::Precondition {
            operation: "estimate_cm_goldie",
            detail: String::from("need at least one sample"),
        });
    }
    let xi = solve_xi(law)?;
    let mu_xi = cgf_profile(law, xi)?.mean;
    let scale = 1.0 / (xi * mu_xi);
    struct Acc {
        n: u64,
        sum: f64,
    }
    let n_chunks = cfg.effective_chunks(n_samples);
    let accs = run_fallible(exec, n_chunks, |chunk| {
        let mut rng = cfg.rng(chunk);
        let len = chunk_len(n_samples, n_chunks, chunk);
        let mut m = 0.0f64;
        for _ in 0..burn_in {
            let (a, b) = law.sample_pair(&mut rng);
            m = (a * m + b).max(0.0);
        }
        let mut acc = Acc { n: 0, sum: 0.0 };
        for _ in 0..len {
            let (a, b) = law.sample_pair(&mut rng);
            let next = (a * m + b).max(0.0);
            acc.sum += next.powf(xi) - (a * m).powf(xi);
            acc.n += 1;
            m = next;
        }
        Ok(acc)
    })?;
    let mut n = 0u64;
    let mut total = 0.0;
    for a in &accs {
        n += a.n;
        total += a.sum;
    }
    let value = scale * total / n as f64;
    // between-chunk variance of per-chain means
    let k = accs.len() as f64;
    let mut between = 0.0;
    for a in &accs {
        if a.n > 0 {
            let mean_c = scale * a.sum / a.n as f64;
            between += (mean_c - value) * (mean_c - value);
        }
    }
    let stderr = if accs.len() > 1 {
        (between / (k * (k - 1.0))).sqrt()
    } else {
        0.0
    };
    Ok(ConstantEstimate {
        estimate: Estimate::new(value, stderr, n, Method::Crude, n as f64, 0),
        lattice_warning: !law.nonarithmetic_log_a(),
    })
}

/// Estimate the stationary-tail constant by the Cesàro form
/// (ξ μ(ξ))⁻¹ (1/n) E[M_n^ξ] from independent backward paths.
pub fn estimate_cm_cesaro<E: Executor>(
    law: &PairLaw,
    n_terms: u32,
    n_samples: u64,
    cfg: &SampleCfg,
    exec: &E,
) -> Result<SeriesEstimate> {
    if n_terms == 0 || n_samples == 0 {
        return Err(Error::Precondition {
            operation: "estimate_cm_cesaro",
            detail: String::from("need at least one term and one sample"),
        });
    }
    let xi = solve_xi(law)?;
    let mu_xi = cgf_profile(law, xi)?.mean;
    let scale = 1.0 / (xi * mu_xi);
    let levels = dyadic_levels(n_terms);
    struct Acc {
        n: u64,
        level_sums: Vec<f64>,
        final_sum: f64,
        final_sumsq: f64,
    }
    let n_chunks = cfg.effective_chunks(n_samples);
    let accs = run_fallible(exec, n_chunks, |chunk| {
        let mut rng = cfg.rng(chunk);
        let len = chunk_len(n_samples, n_chunks, chunk);
        let mut acc = Acc {
            n: 0,
            level_sums: vec![0.0; levels.len()],
            final_sum: 0.0,
            final_sumsq: 0.0,
        };
        for _ in 0..len {
            let mut state = PathState::new();
            let mut level_idx = 0;
            for j in 1..=n_terms {
                let (a, b) = law.sample_pair(&mut rng);
                state.step(a, b);
                if level_idx < levels.len() && levels[level_idx] == j {
                    acc.level_sums[level_idx] += state.max_backward().powf(xi);
                    level_idx += 1;
                }
            }
            let v = state.max_backward().powf(xi);
            acc.final_sum += v;
            acc.final_sumsq += v * v;
            acc.n += 1;
        }
        Ok(acc)
    })?;
    let mut n = 0u64;
    let mut level_sums = vec![0.0; levels.len()];
    let mut final_sum = 0.0;
    let mut final_sumsq = 0.0;
    for a in &accs {
        n += a.n;
        for (s, v) in level_sums.iter_mut().zip(&a.level_sums) {
            *s += v;
        }
        final_sum += a.final_sum;
        final_sumsq += a.final_sumsq;
    }
    let nf = n as f64;
    let mean = final_sum / nf;
    let var = ((final_sumsq - final_sum * final_sum / nf) / (nf - 1.0).max(1.0)).max(0.0);
    let value = scale * mean / n_terms as f64;
    let stderr = scale * (var / nf).sqrt() / n_terms as f64;
    let ladder: Vec<(u32, f64)> = levels
        .iter()
        .zip(&level_sums)
        .map(|(&k, &s)| (k, scale * s / nf / k as f64))
        .collect();
    let half_value = ladder
        .iter()
        .rev()
        .find(|(k, _)| *k <= n_terms / 2)
        .map(|(_, v)| *v)
        .unwrap_or(value);
    let half_shift_over_stderr = if stderr > 0.0 {
        (value - half_value).abs() / stderr
    } else {
        0.0
    };
    Ok(SeriesEstimate {
        estimate: Estimate::new(value, stderr, n, Method::Crude, nf, 0),
        ladder,
        half_shift_over_stderr,
    })
}

/// One grid point of a tail fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailPoint {
    pub u: f64,
    pub survival: f64,
    pub exceedances: u64,
    /// False when the point had fewer than [`MIN_EXCEEDANCES`] hits and
    /// was dropped from the regression (widened-confidence warning).
    pub in_fit: bool,
}

/// Power-law fit of the stationary tail from a long forward run.
#[derive(Debug, Clone, PartialEq)]
pub struct TailFit {
    /// Fitted tail exponent (negated log-log slope).
    pub xi_hat: f64,
    /// Geometric mean of u^ξ̂ · P̂{M > u} over the fitted points.
    pub c_hat: f64,
    pub points: Vec<TailPoint>,
    pub n_run: u64,
    pub lattice_warning: bool,
}

/// Long-run simulation of the forward reflected chain and a least-squares
/// fit of log P̂{M > u} against log u over the grid.
pub fn tail_fit<E: Executor>(
    law: &PairLaw,
    n_run: u64,
    u_grid: &[f64],
    cfg: &SampleCfg,
    exec: &E,
) -> Result<TailFit> {
    if u_grid.len() < 3 {
        return Err(Error::Precondition {
            operation: "tail_fit",
            detail: format!("need at least 3 grid points, got {}", u_grid.len()),
        });
    }
    if !u_grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Precondition {
            operation: "tail_fit",
            detail: String::from("grid must be strictly increasing"),
        });
    }
    if n_run == 0 {
        return Err(Error::Precondition {
            operation: "tail_fit",
            detail: String::from("need at least one step"),
        });
    }
    let n_chunks = cfg.effective_chunks(n_run);
    let accs = run_fallible(exec, n_chunks, |chunk| {
        let mut rng = cfg.rng(chunk);
        let len = chunk_len(n_run, n_chunks, chunk);
        let mut m = 0.0f64;
        for _ in 0..STATIONARY_BURN_IN {
            let (a, b) = law.sample_pair(&mut rng);
            m = (a * m + b).max(0.0);
        }
        // hist[k] counts steps with exactly k grid points below m
        let mut hist = vec![0u64; u_grid.len() + 1];
        for _ in 0..len {
            let (a, b) = law.sample_pair(&mut rng);
            m = (a * m + b).max(0.0);
            let idx = u_grid.partition_point(|&g| g < m);
            hist[idx] += 1;
        }
        Ok((len, hist))
    })?;
    let mut total = 0u64;
    let mut hist = vec![0u64; u_grid.len() + 1];
    for (len, h) in &accs {
        total += len;
        for (a, b) in hist.iter_mut().zip(h) {
            *a += b;
        }
    }
    // steps exceeding u_grid[j] are those with more than j grid points below m
    let mut exceed = vec![0u64; u_grid.len()];
    let mut running = 0u64;
    for j in (0..u_grid.len()).rev() {
        running += hist[j + 1];
        exceed[j] = running;
    }
    let points: Vec<TailPoint> = u_grid
        .iter()
        .zip(&exceed)
        .map(|(&u, &count)| TailPoint {
            u,
            survival: count as f64 / total as f64,
            exceedances: count,
            in_fit: count >= MIN_EXCEEDANCES,
        })
        .collect();
    let xs: Vec<f64> = points
        .iter()
        .filter(|p| p.in_fit)
        .map(|p| p.u.ln())
        .collect();
    let ys: Vec<f64> = points
        .iter()
        .filter(|p| p.in_fit)
        .map(|p| p.survival.ln())
        .collect();
    if xs.len() < 2 {
        return Err(Error::DegenerateFit {
            detail: format!(
                "only {} grid points reached {MIN_EXCEEDANCES} exceedances",
                xs.len()
            ),
        });
    }
    let (slope, _) = crate::numerics::fit_line(&xs, &ys)?;
    let xi_hat = -slope;
    let log_c_mean = xs.iter().zip(&ys).map(|(x, y)| xi_hat * x + y).sum::<f64>() / xs.len() as f64;
    Ok(TailFit {
        xi_hat,
        c_hat: log_c_mean.exp(),
        points,
        n_run: total,
        lattice_warning: !law.nonarithmetic_log_a(),
    })
}

/// Sharp large-deviation approximation of P{S_n > n(c+γ)} for the
/// log-multiplier walk, after Petrov: the leading term
/// (α σ(α) √(2πn))⁻¹ exp{-n(α(c+γ) - Λ(α) + γ²/(2σ²(α)))} with Λ'(α) = c,
/// the O(|γ|³) correction dropped.
pub fn petrov_tail(law: &PairLaw, n: u64, c: f64, gamma: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Precondition {
            operation: "petrov_tail",
            detail: String::from("need at least one step"),
        });
    }
    let alpha = solve_slope(law, c)?;
    if alpha <= 0.0 {
        // The approximation needs a positive tilt: c must exceed the drift.
        return Err(Error::SlopeOutOfRange {
            target: c,
            attainable: (law.e_log_a(), crate::cgf::attainable_slopes(law)?.1),
        });
    }
    let p = cgf_profile(law, alpha)?;
    let sigma = p.variance.sqrt();
    let nf = n as f64;
    let log_value = -(alpha * sigma).ln()
        - 0.5 * (2.0 * core::f64::consts::PI * nf).ln()
        - nf * (alpha * (c + gamma) - p.cgf + gamma * gamma / (2.0 * p.variance));
    Ok(log_value.exp())
}

/// Exponential-Chebyshev upper bound on P{Ȳ_n > u} for the absolute-term
/// majorant: C̄_n λ(α)^n u^{-(α+ε)} with
/// C̄_n = b n (n-1)^{2(α+ε)} exp{(n-1)(ε μ(α) + ε² σ²(α))} and
/// b = (π²/6)^{α+ε} λ_B(α+ε)/λ(α).
///
/// At n = 1 the formula degenerates to 0, which cannot bound P{|B| > u};
/// apply it from n ≥ 2.
pub fn chebyshev_bound(law: &PairLaw, alpha: f64, epsilon: f64, n: u64, u: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Precondition {
            operation: "chebyshev_bound",
            detail: String::from("need at least one step"),
        });
    }
    if !(epsilon > 0.0) {
        return Err(Error::Precondition {
            operation: "chebyshev_bound",
            detail: format!("epsilon must be positive, got {epsilon}"),
        });
    }
    if !(u > 0.0) {
        return Err(Error::Precondition {
            operation: "chebyshev_bound",
            detail: format!("level must be positive, got {u}"),
        });
    }
    let xi = solve_xi(law)?;
    if alpha < xi - 1e-9 {
        return Err(Error::Precondition {
            operation: "chebyshev_bound",
            detail: format!("exponent {alpha} below the root {xi}"),
        });
    }
    let p = cgf_profile(law, alpha)?;
    let p_eps = cgf_profile(law, alpha + epsilon)?;
    if !p_eps.cgf.is_finite() || !p_eps.cgf_b.is_finite() {
        return Err(Error::OutOfDomain {
            alpha: alpha + epsilon,
        });
    }
    let ae = alpha + epsilon;
    let nf = n as f64;
    let log_b =
        ae * (core::f64::consts::PI * core::f64::consts::PI / 6.0).ln() + p_eps.cgf_b - p.cgf;
    let log_cbar = log_b
        + nf.ln()
        + 2.0 * ae * (nf - 1.0).ln()
        + (nf - 1.0) * (epsilon * p.mean + epsilon * epsilon * p.variance);
    let log_bound = log_cbar + nf * p.cgf - ae * u.ln();
    Ok(log_bound.exp())
}

/// Prefactor constants feeding [`predict`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Constants {
    /// Small-time constant C(τ) from [`estimate_c_tau`].
    pub c_tau: Option<f64>,
    /// Stationary tail constant from [`estimate_cm_goldie`] or
    /// [`estimate_cm_cesaro`].
    pub c_m: Option<f64>,
}

/// Geometric interval-bound shape for the large-time regime: each unit of
/// lateness beyond the horizon contributes another factor ϱ on top of
/// `base` = u^{-I(τ)}/√(log u) (the overall constant is nonconstructive).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LargeTimeBound {
    pub varrho: f64,
    pub base: f64,
}

/// Regime-appropriate theoretical prediction of P{T_u ≤ τ}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub regime: Regime,
    pub value: f64,
    /// Polynomial decay exponent used: I(τ) in small time, ξ otherwise.
    pub rate: f64,
    /// Emitted in the large-time regime when a witness for the geometric
    /// bound exists.
    pub bound: Option<LargeTimeBound>,
    /// Set in the large-time regime when the drift condition holds: the
    /// decay can then be strictly slower than the rate function suggests
    /// and no sharp asymptotic is available.
    pub no_sharp_asymptotic: bool,
}

/// Evaluate the regime-appropriate asymptotic formula at (u, τ).
pub fn predict(law: &PairLaw, u: f64, tau: f64, constants: &Constants) -> Result<Prediction> {
    validate_u_tau("predict", u, tau)?;
    let summary = summarize(law, tau)?;
    let log_u = u.ln();
    match summary.regime {
        Regime::SmallTime => {
            let c_tau = constants.c_tau.ok_or(Error::Precondition {
                operation: "predict",
                detail: String::from("small-time prediction needs the C(τ) constant"),
            })?;
            Ok(Prediction {
                regime: summary.regime,
                value: c_tau * (-summary.rate * log_u).exp() / log_u.sqrt(),
                rate: summary.rate,
                bound: None,
                no_sharp_asymptotic: false,
            })
        }
        Regime::Critical => {
            let c_m = constants.c_m.ok_or(Error::Precondition {
                operation: "predict",
                detail: String::from("critical prediction needs the tail constant"),
            })?;
            Ok(Prediction {
                regime: summary.regime,
                value: 0.5 * c_m * (-summary.xi * log_u).exp(),
                rate: summary.xi,
                bound: None,
                no_sharp_asymptotic: false,
            })
        }
        Regime::LargeTime => {
            let c_m = constants.c_m.ok_or(Error::Precondition {
                operation: "predict",
                detail: String::from("large-time prediction needs the tail constant"),
            })?;
            let report = regime_report(law, tau)?;
            let bound = if report.count2_holds {
                Some(LargeTimeBound {
                    varrho: report.varrho,
                    base: (-summary.rate * log_u).exp() / log_u.sqrt(),
                })
            } else {
                None
            };
            Ok(Prediction {
                regime: summary.regime,
                value: c_m * (-summary.xi * log_u).exp(),
                rate: summary.xi,
                bound,
                no_sharp_asymptotic: report.count1_holds,
            })
        }
    }
}

/// Weighted conditional profile of the scaled passage time under the
/// ξ-tilt: the stopped likelihood ratios restore the base-measure law of
/// T_u given a hit, which concentrates at ρ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassageProfile {
    pub rho: f64,
    /// Weighted median of T_u over hitting paths.
    pub median: f64,
    /// Weighted share of hits with |T_u - ρ| beyond the window.
    pub out_of_window_mass: f64,
    pub window: f64,
    pub hits: u64,
    pub total_weight: f64,
    pub n_samples: u64,
}

/// Simulate passage under the ξ-tilt and summarize the weighted
/// conditional distribution of the scaled passage time.
pub fn passage_profile<E: Executor>(
    law: &PairLaw,
    u: f64,
    window: f64,
    horizon_mult: f64,
    n_samples: u64,
    cfg: &SampleCfg,
    exec: &E,
) -> Result<PassageProfile> {
    if !(u > 1.0) {
        return Err(Error::Precondition {
            operation: "passage_profile",
            detail: format!("level must exceed 1, got {u}"),
        });
    }
    if n_samples == 0 {
        return Err(Error::Precondition {
            operation: "passage_profile",
            detail: String::from("need at least one sample"),
        });
    }
    let xi = solve_xi(law)?;
    let rho = 1.0 / cgf_profile(law, xi)?.mean;
    let horizon = crate::process::default_horizon(rho, u, horizon_mult);
    let tilted = tilt(law, xi)?;
    let n_chunks = cfg.effective_chunks(n_samples);
    let accs = run_fallible(exec, n_chunks, |chunk| {
        let mut rng = cfg.rng(chunk);
        let len = chunk_len(n_samples, n_chunks, chunk);
        let mut out: Vec<(f64, f64)> = Vec::new();
        for _ in 0..len {
            let o = passage_unchecked(&tilted, u, horizon, &mut rng, Comparison::Strict)?;
            if o.hit {
                out.push((o.scaled_time.unwrap(), o.weight));
            }
        }
        Ok(out)
    })?;
    let mut samples: Vec<(f64, f64)> = accs.into_iter().flatten().collect();
    if samples.is_empty() {
        return Err(Error::DegenerateFit {
            detail: String::from("no passage within the horizon"),
        });
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total_weight: f64 = samples.iter().map(|s| s.1).sum();
    let mut cum = 0.0;
    let mut median = samples[samples.len() - 1].0;
    for &(t, w) in &samples {
        cum += w;
        if cum >= 0.5 * total_weight {
            median = t;
            break;
        }
    }
    let out_mass: f64 = samples
        .iter()
        .filter(|(t, _)| (t - rho).abs() > window)
        .map(|s| s.1)
        .sum();
    Ok(PassageProfile {
        rho,
        median,
        out_of_window_mass: out_mass / total_weight,
        window,
        hits: samples.len() as u64,
        total_weight,
        n_samples,
    })
}
