//! Exponential change of measure on the multiplier coordinate.
//!
//! The α-tilted law reweights the joint law of (log A, B) by
//! e^{α log A} / λ(α). Only the marginal of log A moves; the conditional
//! law of B given A is untouched. Sampling under the tilt and the stopped
//! likelihood ratio λ(α)^n e^{-α S_n} together restore base-measure
//! expectations from tilted simulation.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::cgf::cgf_profile;
use crate::error::{Error, Result};
use crate::model::{BoundedB, Family, PairLaw, TableAtom};
use crate::rng::stream_rng;

/// Cap on consecutive rejections before the density sampler gives up.
pub const REJECTION_CAP: u64 = 1_000_000;

/// Log-likelihood-ratio exponents are clamped to this magnitude before
/// exponentiation; clamp events are counted by the estimators.
pub const LOG_WEIGHT_CLAMP: f64 = 700.0;

/// How a tilted law is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    /// Closed-form parameter shift (lognormal A: mean moves by α·var).
    ClosedFormShift,
    /// Atom masses reweighted by a^α / λ(α).
    AtomReweight,
    /// Rejection from the base density with envelope e^{α(log a - log a*)}
    /// anchored at the dominating support endpoint.
    Rejection,
}

/// The α-tilted law of (A, B).
#[derive(Debug, Clone, PartialEq)]
pub struct TiltedLaw {
    base: PairLaw,
    alpha: f64,
    /// λ(α).
    normalizer: f64,
    /// Λ(α), kept in log form for the likelihood ratio.
    log_normalizer: f64,
    kind: SamplerKind,
    sampler: TiltedSampler,
}

#[derive(Debug, Clone, PartialEq)]
enum TiltedSampler {
    LognormalShift {
        mean: f64,
        sd: f64,
        b: crate::model::BLaw,
    },
    Atoms {
        atoms: Vec<TableAtom>,
    },
    UniformRejection {
        lo: f64,
        hi: f64,
        alpha: f64,
        b: BoundedB,
    },
}

/// Tilt the law by the exponent α.
pub fn tilt(law: &PairLaw, alpha: f64) -> Result<TiltedLaw> {
    let profile = cgf_profile(law, alpha)?;
    if !profile.in_domain {
        return Err(Error::OutOfDomain { alpha });
    }
    let (kind, sampler) = match law.family() {
        Family::LognormalA { mean, var, b } => (
            SamplerKind::ClosedFormShift,
            TiltedSampler::LognormalShift {
                mean: mean + alpha * var,
                sd: var.sqrt(),
                b: *b,
            },
        ),
        Family::TwoPointA { a1, a2, p1, p2, b } => {
            let atoms = alloc::vec![
                TableAtom {
                    a: *a1,
                    b: *b,
                    p: *p1
                },
                TableAtom {
                    a: *a2,
                    b: *b,
                    p: *p2
                },
            ];
            (
                SamplerKind::AtomReweight,
                TiltedSampler::Atoms {
                    atoms: reweight(&atoms, alpha, profile.cgf),
                },
            )
        }
        Family::Table { atoms } => (
            SamplerKind::AtomReweight,
            TiltedSampler::Atoms {
                atoms: reweight(atoms, alpha, profile.cgf),
            },
        ),
        Family::UniformA { lo, hi, b } => (
            SamplerKind::Rejection,
            TiltedSampler::UniformRejection {
                lo: *lo,
                hi: *hi,
                alpha,
                b: *b,
            },
        ),
    };
    Ok(TiltedLaw {
        base: law.clone(),
        alpha,
        normalizer: profile.moment,
        log_normalizer: profile.cgf,
        kind,
        sampler,
    })
}

/// Atom i keeps its pair and gets mass pᵢ aᵢ^α / λ(α).
fn reweight(atoms: &[TableAtom], alpha: f64, log_normalizer: f64) -> Vec<TableAtom> {
    let mut out: Vec<TableAtom> = atoms
        .iter()
        .map(|t| TableAtom {
            a: t.a,
            b: t.b,
            p: if t.p > 0.0 {
                (t.p.ln() + alpha * t.a.ln() - log_normalizer).exp()
            } else {
                0.0
            },
        })
        .collect();
    let total: f64 = out.iter().map(|t| t.p).sum();
    for t in &mut out {
        t.p /= total;
    }
    out
}

impl TiltedLaw {
    pub fn base(&self) -> &PairLaw {
        &self.base
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// λ(α).
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// Λ(α).
    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    pub fn sampler_kind(&self) -> SamplerKind {
        self.kind
    }

    /// Tilted atom table, when the law is atomic.
    pub fn atoms(&self) -> Option<&[TableAtom]> {
        match &self.sampler {
            TiltedSampler::Atoms { atoms } => Some(atoms),
            _ => None,
        }
    }

    /// Draw one pair under the tilted measure.
    pub fn sample_pair(&self, rng: &mut ChaCha8Rng) -> Result<(f64, f64)> {
        match &self.sampler {
            TiltedSampler::LognormalShift { mean, sd, b } => {
                let a = Normal::new(*mean, *sd)
                    .expect("validated variance")
                    .sample(rng)
                    .exp();
                let b = match b {
                    crate::model::BLaw::Const(v) => *v,
                    crate::model::BLaw::Lognormal { mean, var } => Normal::new(*mean, var.sqrt())
                        .expect("validated variance")
                        .sample(rng)
                        .exp(),
                };
                Ok((a, b))
            }
            TiltedSampler::Atoms { atoms } => {
                let mut x = rng.random::<f64>();
                for t in atoms {
                    if x < t.p {
                        return Ok((t.a, t.b));
                    }
                    x -= t.p;
                }
                let last = atoms.last().expect("nonempty table");
                Ok((last.a, last.b))
            }
            TiltedSampler::UniformRejection { lo, hi, alpha, b } => {
                let anchor = if *alpha >= 0.0 { hi.ln() } else { lo.ln() };
                let mut rejections = 0u64;
                let a = loop {
                    let a = lo + (hi - lo) * rng.random::<f64>();
                    let accept = (alpha * (a.ln() - anchor)).exp();
                    if rng.random::<f64>() < accept {
                        break a;
                    }
                    rejections += 1;
                    if rejections >= REJECTION_CAP {
                        return Err(Error::SamplerStall { rejections });
                    }
                };
                let b = match b {
                    BoundedB::Const(v) => *v,
                    BoundedB::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
                };
                Ok((a, b))
            }
        }
    }

    /// Log of the likelihood ratio restoring the base measure on an n-step
    /// path with log-multiplier sum `s_n`: n Λ(α) - α s_n.
    pub fn log_likelihood_ratio(&self, n: u64, s_n: f64) -> f64 {
        n as f64 * self.log_normalizer - self.alpha * s_n
    }
}

/// Draw `count` pairs under the tilted measure on the given stream.
pub fn tilted_sample(
    tilted: &TiltedLaw,
    count: usize,
    seed: u64,
    stream: u64,
) -> Result<Vec<(f64, f64)>> {
    let mut rng = stream_rng(seed, stream);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(tilted.sample_pair(&mut rng)?);
    }
    Ok(out)
}

/// The stopped likelihood ratio λ(α)^n e^{-α S_n}, exponentiated once
/// with the exponent clamped to ±[`LOG_WEIGHT_CLAMP`].
pub fn likelihood_ratio(tilted: &TiltedLaw, n: u64, s_n: f64) -> f64 {
    let log_w = tilted.log_likelihood_ratio(n, s_n);
    log_w.clamp(-LOG_WEIGHT_CLAMP, LOG_WEIGHT_CLAMP).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_law, LawSpec};

    fn ln_law() -> PairLaw {
        build_law(LawSpec::LognormalAConstB {
            log_a_mean: -0.25,
            log_a_var: 1.0,
            b: 1.0,
        })
        .unwrap()
    }

    fn two_point_law() -> PairLaw {
        build_law(LawSpec::TwoPointAConstB {
            a1: 2.0,
            a2: 0.5,
            p1: 0.25,
            p2: 0.75,
            b: 1.0,
        })
        .unwrap()
    }

    const XI_TWO_POINT: f64 = 1.584_962_500_721_156_2;

    #[test]
    fn lognormal_shift() {
        let tilted = tilt(&ln_law(), 0.5).unwrap();
        assert_eq!(tilted.sampler_kind(), SamplerKind::ClosedFormShift);
        // lambda(xi) = 1 at the root
        assert!((tilted.normalizer() - 1.0).abs() < 1e-12);
        assert!(tilted.log_normalizer().abs() < 1e-12);
        // tilted mean of log A is mean + alpha var = 0.25
        match &tilted.sampler {
            TiltedSampler::LognormalShift { mean, .. } => assert!((mean - 0.25).abs() < 1e-15),
            _ => panic!("wrong sampler"),
        }
    }

    #[test]
    fn atom_reweighting_at_the_root() {
        let tilted = tilt(&two_point_law(), XI_TWO_POINT).unwrap();
        assert_eq!(tilted.sampler_kind(), SamplerKind::AtomReweight);
        let atoms = tilted.atoms().unwrap();
        assert!((atoms[0].p - 0.75).abs() < 1e-12);
        assert!((atoms[1].p - 0.25).abs() < 1e-12);
        let total: f64 = atoms.iter().map(|t| t.p).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_tilt_is_identity() {
        let tilted = tilt(&two_point_law(), 0.0).unwrap();
        let atoms = tilted.atoms().unwrap();
        assert!((atoms[0].p - 0.25).abs() < 1e-15);
        assert!((atoms[1].p - 0.75).abs() < 1e-15);
        assert_eq!(tilted.normalizer(), 1.0);
    }

    #[test]
    fn likelihood_ratio_values() {
        let tilted = tilt(&ln_law(), 0.5).unwrap();
        assert_eq!(likelihood_ratio(&tilted, 0, 0.0), 1.0);
        assert!((likelihood_ratio(&tilted, 10, 2.0) - (-1.0f64).exp()).abs() < 1e-12);

        // path (2, 2, 2) under the two-point root tilt: weight 3^-3
        let tilted = tilt(&two_point_law(), XI_TWO_POINT).unwrap();
        let s3 = 3.0 * core::f64::consts::LN_2;
        assert!((likelihood_ratio(&tilted, 3, s3) - 1.0 / 27.0).abs() < 1e-12);
    }

    #[test]
    fn clamped_exponent() {
        let tilted = tilt(&ln_law(), 0.5).unwrap();
        // -0.5 * s = -1000 would underflow; the clamp keeps it at e^-700.
        let w = likelihood_ratio(&tilted, 0, 2000.0);
        assert_eq!(w, (-700.0f64).exp());
    }
}
