//! Path simulation of the backward perpetuity, its running maximum, the
//! forward affine and reflected recursions, and the dual risk process.
//!
//! One pass over an i.i.d. pair stream maintains every tracked quantity in
//! O(1) memory: the running product Π_n, its logarithm S_n, the perpetuity
//! Y_n = Σ Π_{k-1} B_k, the absolute-term majorant Ȳ_n = Σ Π_{k-1}|B_k|,
//! the maximum M_n = max(0, Y_1, …, Y_n), and the forward chains
//! Y*_n = A_n Y*_{n-1} + B_n and M*_n = (A_n M*_{n-1} + B_n)⁺.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::format;
use alloc::vec::Vec;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::PairLaw;
use crate::tilt::{TiltedLaw, LOG_WEIGHT_CLAMP};

/// Either a base law or a tilted law, as a pair source for simulation.
pub trait PairSampler {
    fn try_sample_pair(&self, rng: &mut ChaCha8Rng) -> Result<(f64, f64)>;
    /// `(α, Λ(α))` when sampling under a tilt, to weight stopped paths.
    fn tilt_exponent(&self) -> Option<(f64, f64)>;
}

impl PairSampler for PairLaw {
    fn try_sample_pair(&self, rng: &mut ChaCha8Rng) -> Result<(f64, f64)> {
        Ok(self.sample_pair(rng))
    }
    fn tilt_exponent(&self) -> Option<(f64, f64)> {
        None
    }
}

impl PairSampler for TiltedLaw {
    fn try_sample_pair(&self, rng: &mut ChaCha8Rng) -> Result<(f64, f64)> {
        self.sample_pair(rng)
    }
    fn tilt_exponent(&self) -> Option<(f64, f64)> {
        Some((self.alpha(), self.log_normalizer()))
    }
}

/// Snapshot of every tracked path quantity after `n` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathRecord {
    pub n: u64,
    /// Π_n = A_1 ⋯ A_n.
    pub product: f64,
    /// S_n = log Π_n, accumulated additively.
    pub log_product: f64,
    /// Y_n, the backward perpetuity.
    pub backward: f64,
    /// Ȳ_n = Σ Π_{k-1} |B_k| ≥ |Y_n|, nondecreasing.
    pub backward_abs: f64,
    /// M_n = max(0, Y_1, …, Y_n).
    pub max_backward: f64,
    /// Y*_n, the forward affine chain.
    pub forward: f64,
    /// M*_n, the forward reflected chain.
    pub forward_reflected: f64,
}

/// Incremental path state. Conventions: Y_0 = 0, Π_0 = 1, M_0 = 0,
/// Y*_0 = 0, M*_0 = 0. Accumulation order is fixed left-to-right so runs
/// are bit-reproducible.
#[derive(Debug, Clone, Copy)]
pub struct PathState {
    n: u64,
    product: f64,
    log_product: f64,
    backward: f64,
    backward_abs: f64,
    max_backward: f64,
    forward: f64,
    forward_reflected: f64,
}

impl Default for PathState {
    fn default() -> Self {
        Self::new()
    }
}

impl PathState {
    pub fn new() -> Self {
        PathState {
            n: 0,
            product: 1.0,
            log_product: 0.0,
            backward: 0.0,
            backward_abs: 0.0,
            max_backward: 0.0,
            forward: 0.0,
            forward_reflected: 0.0,
        }
    }

    /// Absorb the next pair.
    #[inline]
    pub fn step(&mut self, a: f64, b: f64) {
        // Y_n = Y_{n-1} + Π_{n-1} B_n, with the product updated afterwards.
        self.backward += self.product * b;
        self.backward_abs += self.product * b.abs();
        self.product *= a;
        self.log_product += a.ln();
        if self.backward > self.max_backward {
            self.max_backward = self.backward;
        }
        self.forward = a * self.forward + b;
        self.forward_reflected = (a * self.forward_reflected + b).max(0.0);
        self.n += 1;
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn backward(&self) -> f64 {
        self.backward
    }

    pub fn backward_abs(&self) -> f64 {
        self.backward_abs
    }

    pub fn log_product(&self) -> f64 {
        self.log_product
    }

    pub fn forward_reflected(&self) -> f64 {
        self.forward_reflected
    }

    pub fn max_backward(&self) -> f64 {
        self.max_backward
    }

    pub fn record(&self) -> PathRecord {
        PathRecord {
            n: self.n,
            product: self.product,
            log_product: self.log_product,
            backward: self.backward,
            backward_abs: self.backward_abs,
            max_backward: self.max_backward,
            forward: self.forward,
            forward_reflected: self.forward_reflected,
        }
    }
}

/// Simulate `n_steps` steps, returning the records for n = 0, …, n_steps.
pub fn simulate_path(
    sampler: &impl PairSampler,
    n_steps: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<PathRecord>> {
    let mut state = PathState::new();
    let mut out = Vec::with_capacity(n_steps as usize + 1);
    out.push(state.record());
    for _ in 0..n_steps {
        let (a, b) = sampler.try_sample_pair(rng)?;
        state.step(a, b);
        out.push(state.record());
    }
    Ok(out)
}

/// Strictness of a boundary comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    /// Strict inequality (the passage default: Y_n > u).
    Strict,
    /// Weak inequality (the ruin default: U_k ≤ 0).
    Weak,
}

/// Outcome of a first-passage simulation over the level u.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassageOutcome {
    pub hit: bool,
    /// Raw hitting index n, when the level was crossed.
    pub hit_index: Option<u64>,
    /// T_u = n / log u at the hitting index.
    pub scaled_time: Option<f64>,
    /// The same scaled time for the majorant Ȳ; never later than
    /// `scaled_time` when both are defined.
    pub scaled_time_abs: Option<f64>,
    /// Stopped likelihood ratio at the index where simulation stopped
    /// (the hitting index, or the horizon when no hit); 1 when untilted.
    pub weight: f64,
    /// True when the weight exponent was clamped before exponentiation.
    pub weight_clamped: bool,
    pub horizon: u64,
}

/// Run until Y_n crosses u or the horizon is exhausted.
pub fn first_passage(
    sampler: &impl PairSampler,
    u: f64,
    horizon: u64,
    rng: &mut ChaCha8Rng,
) -> Result<PassageOutcome> {
    if !(u > 1.0) {
        return Err(Error::Precondition {
            operation: "first_passage",
            detail: format!("level must exceed 1, got {u}"),
        });
    }
    if horizon == 0 {
        return Err(Error::Precondition {
            operation: "first_passage",
            detail: alloc::string::String::from("horizon must be at least 1"),
        });
    }
    passage_unchecked(sampler, u, horizon, rng, Comparison::Strict)
}

/// As [`first_passage`] with an explicit boundary comparison.
pub fn first_passage_with(
    sampler: &impl PairSampler,
    u: f64,
    horizon: u64,
    rng: &mut ChaCha8Rng,
    comparison: Comparison,
) -> Result<PassageOutcome> {
    if !(u > 1.0) {
        return Err(Error::Precondition {
            operation: "first_passage",
            detail: format!("level must exceed 1, got {u}"),
        });
    }
    passage_unchecked(sampler, u, horizon, rng, comparison)
}

pub(crate) fn passage_unchecked(
    sampler: &impl PairSampler,
    u: f64,
    horizon: u64,
    rng: &mut ChaCha8Rng,
    comparison: Comparison,
) -> Result<PassageOutcome> {
    let log_u = u.ln();
    let crossed = |x: f64| match comparison {
        Comparison::Strict => x > u,
        Comparison::Weak => x >= u,
    };
    let mut state = PathState::new();
    let mut abs_index: Option<u64> = None;
    let mut hit_index: Option<u64> = None;
    for _ in 0..horizon {
        let (a, b) = sampler.try_sample_pair(rng)?;
        state.step(a, b);
        if abs_index.is_none() && crossed(state.backward_abs) {
            abs_index = Some(state.n);
        }
        if crossed(state.backward) {
            hit_index = Some(state.n);
            break;
        }
    }
    let (weight, weight_clamped) = match sampler.tilt_exponent() {
        Some((alpha, log_norm)) => {
            let log_w = state.n as f64 * log_norm - alpha * state.log_product;
            (
                log_w.clamp(-LOG_WEIGHT_CLAMP, LOG_WEIGHT_CLAMP).exp(),
                log_w.abs() > LOG_WEIGHT_CLAMP,
            )
        }
        None => (1.0, false),
    };
    Ok(PassageOutcome {
        hit: hit_index.is_some(),
        hit_index,
        scaled_time: hit_index.map(|n| n as f64 / log_u),
        scaled_time_abs: abs_index.map(|n| n as f64 / log_u),
        weight,
        weight_clamped,
        horizon,
    })
}

/// Outcome of a finite-horizon ruin simulation of the dual risk process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuinOutcome {
    pub ruined: bool,
    pub ruin_index: Option<u64>,
}

/// Iterate the risk process U_k = (U_{k-1}/A_k - B_k/A_k)⁺ from U_0 = u.
///
/// Ruin is declared from the pre-reflection value: U_k ≤ 0 under the
/// default weak comparison, U_k < 0 under the strict one.
pub fn simulate_risk(
    law: &PairLaw,
    u: f64,
    n_steps: u64,
    rng: &mut ChaCha8Rng,
) -> Result<RuinOutcome> {
    simulate_risk_with(law, u, n_steps, rng, Comparison::Weak)
}

/// As [`simulate_risk`] with an explicit boundary comparison.
pub fn simulate_risk_with(
    law: &PairLaw,
    u: f64,
    n_steps: u64,
    rng: &mut ChaCha8Rng,
    comparison: Comparison,
) -> Result<RuinOutcome> {
    if n_steps == 0 {
        return Err(Error::Precondition {
            operation: "simulate_risk",
            detail: alloc::string::String::from("need at least one step"),
        });
    }
    let mut capital = u;
    for k in 1..=n_steps {
        let (a, b) = law.sample_pair(rng);
        let inner = (capital - b) / a;
        let ruined = match comparison {
            Comparison::Weak => inner <= 0.0,
            Comparison::Strict => inner < 0.0,
        };
        if ruined {
            return Ok(RuinOutcome {
                ruined: true,
                ruin_index: Some(k),
            });
        }
        capital = inner.max(0.0);
    }
    Ok(RuinOutcome {
        ruined: false,
        ruin_index: None,
    })
}

/// Endpoint of the forward reflected recursion M*_n = (A_n M*_{n-1} + B_n)⁺
/// over the given pairs, iterated directly.
pub fn forward_reflected_max(pairs: &[(f64, f64)]) -> f64 {
    let mut m = 0.0f64;
    for &(a, b) in pairs {
        m = (a * m + b).max(0.0);
    }
    m
}

/// Pathwise time-reversal identity behind the duality of first passage
/// and finite-time exceedance: the forward reflected maximum M*_n of a
/// pair sequence equals the backward maximum M_n of the reversed sequence.
///
/// Both sides are evaluated in the same canonical left-to-right
/// accumulation order, so the comparison is exact (bitwise), pinning the
/// index bookkeeping of the reversal. The reflected recursion itself
/// reproduces the same value up to roundoff; see the module tests.
pub fn reversal_duality_check(pairs: &[(f64, f64)]) -> bool {
    // Backward maximum of the reversed sequence, via the standard state.
    let mut reversed: Vec<(f64, f64)> = pairs.to_vec();
    reversed.reverse();
    let mut state = PathState::new();
    for &(a, b) in &reversed {
        state.step(a, b);
    }
    let backward_of_reversed = state.max_backward;

    // Forward reflected maximum via its suffix-sum form, consuming the
    // original sequence from the end with the same accumulation order.
    let mut y = 0.0f64;
    let mut prod = 1.0f64;
    let mut m = 0.0f64;
    for &(a, b) in pairs.iter().rev() {
        y += prod * b;
        prod *= a;
        if y > m {
            m = y;
        }
    }
    backward_of_reversed == m
}

/// Default simulation horizon for open-ended passage runs: ⌈mult·ρ·log u⌉
/// steps. Mass beyond a few multiples of ρ log u is negligible at the
/// u^{-ξ} scale.
pub fn default_horizon(rho: f64, u: f64, mult: f64) -> u64 {
    (mult * rho * u.ln()).ceil().max(1.0) as u64
}
