//! Input laws for the pair (A, B) driving the affine recursion x -> Ax + B.
//!
//! A law is built once, validated, and then shared immutably across workers;
//! all sampling state lives in caller-provided RNG streams.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::format;
use alloc::vec::Vec;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::numerics::normal_sf;
use crate::rng::stream_rng;

/// Tolerance for atomic probabilities summing to one.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// Law of B when it is bounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundedB {
    Const(f64),
    Uniform { lo: f64, hi: f64 },
}

/// One row of a user-supplied joint atom table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableAtom {
    pub a: f64,
    pub b: f64,
    pub p: f64,
}

/// Constructor input for [`build_law`].
#[derive(Debug, Clone, PartialEq)]
pub enum LawSpec {
    /// log A ~ Normal(mean, var), B constant.
    LognormalAConstB {
        log_a_mean: f64,
        log_a_var: f64,
        b: f64,
    },
    /// log A ~ Normal, log B ~ Normal, independent.
    LognormalALognormalB {
        log_a_mean: f64,
        log_a_var: f64,
        log_b_mean: f64,
        log_b_var: f64,
    },
    /// A ∈ {a1, a2} with P{A=a1} = p1, B constant.
    TwoPointAConstB {
        a1: f64,
        a2: f64,
        p1: f64,
        p2: f64,
        b: f64,
    },
    /// A uniform on [a_lo, a_hi] ⊂ (0, ∞), B bounded.
    BoundedDensityABoundedB { a_lo: f64, a_hi: f64, b: BoundedB },
    /// Finite joint atom table for (A, B).
    UserTable {
        atoms: Vec<TableAtom>,
        /// Whether the law of log A avoids every lattice hZ. Lattice
        /// detection for general tables is not attempted; the caller
        /// declares it.
        nonarithmetic_log_a: bool,
    },
}

/// Law of B when A is lognormal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BLaw {
    Const(f64),
    Lognormal { mean: f64, var: f64 },
}

/// Validated family parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    LognormalA {
        mean: f64,
        var: f64,
        b: BLaw,
    },
    TwoPointA {
        a1: f64,
        a2: f64,
        p1: f64,
        p2: f64,
        b: f64,
    },
    UniformA {
        lo: f64,
        hi: f64,
        b: BoundedB,
    },
    Table {
        atoms: Vec<TableAtom>,
    },
}

/// A validated, sampleable joint law of (A, B) with A > 0 almost surely.
#[derive(Debug, Clone, PartialEq)]
pub struct PairLaw {
    family: Family,
    b_positive: bool,
    nonarithmetic_log_a: bool,
    closed_form_cgf: bool,
}

/// Standing-assumption report: drift of log A, integrability of log⁺|B|,
/// and absence of a common fixed point of the affine maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionReport {
    pub e_log_a: f64,
    pub e_logplus_abs_b: f64,
    /// Monte Carlo standard errors; zero when evaluated in closed form.
    pub e_log_a_stderr: f64,
    pub e_logplus_abs_b_stderr: f64,
    pub no_fixed_point: bool,
    pub passes: bool,
}

impl AssumptionReport {
    fn finish(mut self) -> Self {
        self.passes = self.e_log_a.is_finite()
            && self.e_log_a < 0.0
            && self.e_logplus_abs_b.is_finite()
            && self.no_fixed_point;
        self
    }
}

/// Round a probability sum for display so accumulated float noise does
/// not obscure the actual mistake ("sum to 0.9", not "sum to 0.8999…9").
fn display_sum(total: f64) -> f64 {
    (total * 1e9).round() / 1e9
}

fn require_finite(field: &'static str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParam {
            field,
            detail: format!("must be finite, got {x}"),
        })
    }
}

fn require_pos_var(field: &'static str, v: f64) -> Result<()> {
    require_finite(field, v)?;
    if v <= 0.0 {
        return Err(Error::InvalidParam {
            field,
            detail: format!("variance must be positive, got {v}"),
        });
    }
    Ok(())
}

fn require_atom(field: &'static str, a: f64) -> Result<()> {
    require_finite(field, a)?;
    if a <= 0.0 {
        return Err(Error::InvalidParam {
            field,
            detail: format!("atom {a} outside (0, inf)"),
        });
    }
    Ok(())
}

fn require_nonzero_b(field: &'static str, b: f64) -> Result<()> {
    require_finite(field, b)?;
    if b == 0.0 {
        return Err(Error::InvalidParam {
            field,
            detail: alloc::string::String::from("B = 0 almost surely admits the fixed point x = 0"),
        });
    }
    Ok(())
}

/// Validate the family parameters and derive the law's flags.
pub fn build_law(spec: LawSpec) -> Result<PairLaw> {
    let family = match spec {
        LawSpec::LognormalAConstB {
            log_a_mean,
            log_a_var,
            b,
        } => {
            require_finite("log_a_mean", log_a_mean)?;
            require_pos_var("log_a_var", log_a_var)?;
            require_nonzero_b("b", b)?;
            Family::LognormalA {
                mean: log_a_mean,
                var: log_a_var,
                b: BLaw::Const(b),
            }
        }
        LawSpec::LognormalALognormalB {
            log_a_mean,
            log_a_var,
            log_b_mean,
            log_b_var,
        } => {
            require_finite("log_a_mean", log_a_mean)?;
            require_pos_var("log_a_var", log_a_var)?;
            require_finite("log_b_mean", log_b_mean)?;
            require_pos_var("log_b_var", log_b_var)?;
            Family::LognormalA {
                mean: log_a_mean,
                var: log_a_var,
                b: BLaw::Lognormal {
                    mean: log_b_mean,
                    var: log_b_var,
                },
            }
        }
        LawSpec::TwoPointAConstB { a1, a2, p1, p2, b } => {
            require_atom("a1", a1)?;
            require_atom("a2", a2)?;
            if a1 == a2 {
                return Err(Error::InvalidParam {
                    field: "a2",
                    detail: format!("atoms must be distinct, both are {a1}"),
                });
            }
            for (field, p) in [("p1", p1), ("p2", p2)] {
                require_finite(field, p)?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidParam {
                        field,
                        detail: format!("probability {p} outside [0, 1]"),
                    });
                }
            }
            if (p1 + p2 - 1.0).abs() > PROB_SUM_TOL {
                return Err(Error::InvalidParam {
                    field: "p1",
                    detail: format!("probabilities sum to {}", display_sum(p1 + p2)),
                });
            }
            require_nonzero_b("b", b)?;
            Family::TwoPointA { a1, a2, p1, p2, b }
        }
        LawSpec::BoundedDensityABoundedB { a_lo, a_hi, b } => {
            require_atom("a_lo", a_lo)?;
            require_atom("a_hi", a_hi)?;
            if a_lo >= a_hi {
                return Err(Error::InvalidParam {
                    field: "a_hi",
                    detail: format!("support [{a_lo}, {a_hi}] is empty"),
                });
            }
            match b {
                BoundedB::Const(v) => require_nonzero_b("b", v)?,
                BoundedB::Uniform { lo, hi } => {
                    require_finite("b_lo", lo)?;
                    require_finite("b_hi", hi)?;
                    if lo >= hi {
                        return Err(Error::InvalidParam {
                            field: "b_hi",
                            detail: format!("support [{lo}, {hi}] is empty"),
                        });
                    }
                }
            }
            Family::UniformA {
                lo: a_lo,
                hi: a_hi,
                b,
            }
        }
        LawSpec::UserTable {
            atoms,
            nonarithmetic_log_a,
        } => {
            if atoms.is_empty() {
                return Err(Error::InvalidParam {
                    field: "atoms",
                    detail: alloc::string::String::from("table must contain at least one atom"),
                });
            }
            let mut total = 0.0;
            for atom in &atoms {
                require_atom("atoms.a", atom.a)?;
                require_finite("atoms.b", atom.b)?;
                require_finite("atoms.p", atom.p)?;
                if atom.p < 0.0 {
                    return Err(Error::InvalidParam {
                        field: "atoms.p",
                        detail: format!("probability {} is negative", atom.p),
                    });
                }
                total += atom.p;
            }
            if (total - 1.0).abs() > PROB_SUM_TOL {
                return Err(Error::InvalidParam {
                    field: "atoms.p",
                    detail: format!("probabilities sum to {}", display_sum(total)),
                });
            }
            return Ok(PairLaw {
                b_positive: atoms.iter().all(|t| t.p == 0.0 || t.b > 0.0),
                nonarithmetic_log_a,
                closed_form_cgf: true,
                family: Family::Table { atoms },
            });
        }
    };

    let b_positive = match &family {
        Family::LognormalA {
            b: BLaw::Const(v), ..
        } => *v > 0.0,
        Family::LognormalA { .. } => true,
        Family::TwoPointA { b, .. } => *b > 0.0,
        Family::UniformA {
            b: BoundedB::Const(v),
            ..
        } => *v > 0.0,
        Family::UniformA {
            b: BoundedB::Uniform { lo, .. },
            ..
        } => *lo >= 0.0,
        Family::Table { .. } => unreachable!(),
    };
    let nonarithmetic_log_a = match &family {
        Family::TwoPointA { a1, a2, .. } => !log_ratio_is_lattice(*a1, *a2),
        _ => true,
    };
    let closed_form_cgf = !matches!(family, Family::UniformA { .. });
    Ok(PairLaw {
        family,
        b_positive,
        nonarithmetic_log_a,
        closed_form_cgf,
    })
}

/// Lattice test for a two-atom law of log A: the support {log a1, log a2}
/// lies on a lattice hZ exactly when log a1 / log a2 is rational. Only
/// ratios p/q with |p|, |q| ≤ 64 are recognized; beyond that the law is
/// treated as nonarithmetic.
fn log_ratio_is_lattice(a1: f64, a2: f64) -> bool {
    let l1 = a1.ln();
    let l2 = a2.ln();
    // An atom at 1 contributes log A = 0, which lies on every lattice.
    if l1 == 0.0 || l2 == 0.0 {
        return true;
    }
    let r = l1 / l2;
    small_rational(r, 64)
}

fn small_rational(r: f64, max_den: i64) -> bool {
    for q in 1..=max_den {
        let p = (r * q as f64).round();
        if p.abs() <= max_den as f64 && (r - p / q as f64).abs() <= 1e-9 * r.abs().max(1.0) {
            return true;
        }
    }
    false
}

impl PairLaw {
    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn family_tag(&self) -> &'static str {
        match &self.family {
            Family::LognormalA {
                b: BLaw::Const(_), ..
            } => "lognormal_a_const_b",
            Family::LognormalA { .. } => "lognormal_a_lognormal_b",
            Family::TwoPointA { .. } => "two_point_a_const_b",
            Family::UniformA { .. } => "bounded_density_a_bounded_b",
            Family::Table { .. } => "user_table",
        }
    }

    /// Whether B > 0 almost surely.
    pub fn b_positive(&self) -> bool {
        self.b_positive
    }

    /// Whether the law of log A is nonarithmetic (no lattice support).
    pub fn nonarithmetic_log_a(&self) -> bool {
        self.nonarithmetic_log_a
    }

    /// Whether the generating functions are evaluated analytically.
    pub fn closed_form_cgf(&self) -> bool {
        self.closed_form_cgf
    }

    /// Draw one pair (A, B).
    pub fn sample_pair(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        match &self.family {
            Family::LognormalA { mean, var, b } => {
                let normal = Normal::new(*mean, var.sqrt()).expect("validated variance");
                let a = normal.sample(rng).exp();
                let b = match b {
                    BLaw::Const(v) => *v,
                    BLaw::Lognormal { mean, var } => Normal::new(*mean, var.sqrt())
                        .expect("validated variance")
                        .sample(rng)
                        .exp(),
                };
                (a, b)
            }
            Family::TwoPointA { a1, a2, p1, b, .. } => {
                let a = if rng.random::<f64>() < *p1 { *a1 } else { *a2 };
                (a, *b)
            }
            Family::UniformA { lo, hi, b } => {
                let a = lo + (hi - lo) * rng.random::<f64>();
                let b = match b {
                    BoundedB::Const(v) => *v,
                    BoundedB::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
                };
                (a, b)
            }
            Family::Table { atoms } => {
                let mut x = rng.random::<f64>();
                for atom in atoms {
                    if x < atom.p {
                        return (atom.a, atom.b);
                    }
                    x -= atom.p;
                }
                let last = atoms.last().expect("validated nonempty");
                (last.a, last.b)
            }
        }
    }

    /// E[log A], in closed form.
    pub fn e_log_a(&self) -> f64 {
        match &self.family {
            Family::LognormalA { mean, .. } => *mean,
            Family::TwoPointA { a1, a2, p1, p2, .. } => p1 * a1.ln() + p2 * a2.ln(),
            Family::UniformA { lo, hi, .. } => (hi * hi.ln() - hi - lo * lo.ln() + lo) / (hi - lo),
            Family::Table { atoms } => atoms.iter().map(|t| t.p * t.a.ln()).sum(),
        }
    }

    /// Var[log A], in closed form.
    pub fn var_log_a(&self) -> f64 {
        let m = self.e_log_a();
        let second = match &self.family {
            Family::LognormalA { var, .. } => return *var,
            Family::TwoPointA { a1, a2, p1, p2, .. } => p1 * a1.ln().powi(2) + p2 * a2.ln().powi(2),
            Family::UniformA { lo, hi, .. } => {
                // primitive of ln(a)^2 is a (ln(a)^2 - 2 ln a + 2)
                let g = |x: f64| x * (x.ln().powi(2) - 2.0 * x.ln() + 2.0);
                (g(*hi) - g(*lo)) / (hi - lo)
            }
            Family::Table { atoms } => atoms.iter().map(|t| t.p * t.a.ln().powi(2)).sum(),
        };
        second - m * m
    }

    /// E[log⁺|B|], in closed form.
    pub fn e_logplus_abs_b(&self) -> f64 {
        fn const_b(v: f64) -> f64 {
            v.abs().ln().max(0.0)
        }
        match &self.family {
            Family::LognormalA {
                b: BLaw::Const(v), ..
            } => const_b(*v),
            Family::LognormalA {
                b: BLaw::Lognormal { mean, var },
                ..
            } => {
                // E[max(0, N(mean, var))] = mean * Phi(mean/sd) + sd * phi(mean/sd)
                let sd = var.sqrt();
                let z = mean / sd;
                mean * (1.0 - normal_sf(z)) + sd * crate::numerics::normal_pdf(z)
            }
            Family::TwoPointA { b, .. } => const_b(*b),
            Family::UniformA {
                b: BoundedB::Const(v),
                ..
            } => const_b(*v),
            Family::UniformA {
                b: BoundedB::Uniform { lo, hi },
                ..
            } => {
                // ln|b| integrated over the parts of [lo, hi] with |b| > 1,
                // via the primitive x ln x - x.
                let g = |x: f64| x * x.ln() - x;
                let pos = if *hi > 1.0 {
                    g(*hi) - g(lo.max(1.0))
                } else {
                    0.0
                };
                let neg = if *lo < -1.0 {
                    g(-lo) - g((-hi).max(1.0))
                } else {
                    0.0
                };
                (pos + neg) / (hi - lo)
            }
            Family::Table { atoms } => atoms.iter().map(|t| t.p * const_b(t.b)).sum(),
        }
    }

    /// P{Ax + B = x} < 1 for every x: true unless the atoms share a common
    /// fixed point. Density families cannot concentrate on a single map.
    pub fn no_fixed_point(&self) -> bool {
        let atoms: Vec<(f64, f64, f64)> = match &self.family {
            Family::LognormalA { .. } => return true,
            Family::UniformA { .. } => return true,
            Family::TwoPointA { a1, a2, p1, p2, b } => {
                alloc::vec![(*a1, *b, *p1), (*a2, *b, *p2)]
            }
            Family::Table { atoms } => atoms.iter().map(|t| (t.a, t.b, t.p)).collect(),
        };
        let live: Vec<(f64, f64)> = atoms
            .into_iter()
            .filter(|&(_, _, p)| p > 0.0)
            .map(|(a, b, _)| (a, b))
            .collect();
        // A common fixed point x0 requires a*x0 + b = x0 for every atom.
        let mut x0 = None;
        for &(a, b) in &live {
            if a == 1.0 {
                if b != 0.0 {
                    return true;
                }
            } else {
                let x = b / (1.0 - a);
                match x0 {
                    None => x0 = Some(x),
                    Some(prev) if (prev - x).abs() > 1e-12 * prev.abs().max(1.0) => {
                        return true;
                    }
                    _ => {}
                }
            }
        }
        false
    }
}

/// Check the standing assumptions. Closed-form families evaluate the
/// moments exactly (`mc_budget` and `seed` are unused for the shipped
/// families, which all have analytic log-moments); see
/// [`check_assumptions_mc`] for the Monte Carlo route.
pub fn check_assumptions(law: &PairLaw, _mc_budget: u64, _seed: u64) -> AssumptionReport {
    AssumptionReport {
        e_log_a: law.e_log_a(),
        e_logplus_abs_b: law.e_logplus_abs_b(),
        e_log_a_stderr: 0.0,
        e_logplus_abs_b_stderr: 0.0,
        no_fixed_point: law.no_fixed_point(),
        passes: false,
    }
    .finish()
}

/// Monte Carlo variant of [`check_assumptions`] with reported standard
/// errors. Boundary cases (drift near zero) are statistically undecidable;
/// the report carries the standard errors so callers can judge.
pub fn check_assumptions_mc(law: &PairLaw, mc_budget: u64, seed: u64) -> AssumptionReport {
    let mut rng = stream_rng(seed, 0);
    let n = mc_budget.max(1);
    let mut sum_a = 0.0;
    let mut sumsq_a = 0.0;
    let mut sum_b = 0.0;
    let mut sumsq_b = 0.0;
    for _ in 0..n {
        let (a, b) = law.sample_pair(&mut rng);
        let la = a.ln();
        let lb = b.abs().ln().max(0.0);
        sum_a += la;
        sumsq_a += la * la;
        sum_b += lb;
        sumsq_b += lb * lb;
    }
    let nf = n as f64;
    let mean_a = sum_a / nf;
    let mean_b = sum_b / nf;
    let var_a = (sumsq_a / nf - mean_a * mean_a).max(0.0);
    let var_b = (sumsq_b / nf - mean_b * mean_b).max(0.0);
    AssumptionReport {
        e_log_a: mean_a,
        e_logplus_abs_b: mean_b,
        e_log_a_stderr: (var_a / nf).sqrt(),
        e_logplus_abs_b_stderr: (var_b / nf).sqrt(),
        no_fixed_point: law.no_fixed_point(),
        passes: false,
    }
    .finish()
}

/// Draw `count` i.i.d. pairs on the given stream.
pub fn sample_pairs(law: &PairLaw, count: usize, seed: u64, stream: u64) -> Vec<(f64, f64)> {
    let mut rng = stream_rng(seed, stream);
    (0..count).map(|_| law.sample_pair(&mut rng)).collect()
}

/// Rescale the law of A by 1/t: the returned law draws A/t, leaving B
/// untouched, so the cumulant function shifts by -alpha log t and the
/// drift by -log t. Only density families support this.
pub fn scale_law(law: &PairLaw, t: f64) -> Result<PairLaw> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParam {
            field: "t",
            detail: format!("scale must be a positive real, got {t}"),
        });
    }
    let family = match &law.family {
        Family::LognormalA { mean, var, b } => Family::LognormalA {
            mean: mean - t.ln(),
            var: *var,
            b: *b,
        },
        Family::UniformA { lo, hi, b } => Family::UniformA {
            lo: lo / t,
            hi: hi / t,
            b: *b,
        },
        Family::TwoPointA { .. } => {
            return Err(Error::UnsupportedFamily {
                operation: "scale_law",
                family: "two_point_a_const_b",
            })
        }
        Family::Table { .. } => {
            return Err(Error::UnsupportedFamily {
                operation: "scale_law",
                family: "user_table",
            })
        }
    };
    Ok(PairLaw {
        family,
        ..law.clone()
    })
}
