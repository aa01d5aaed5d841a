//! Experiment configuration: one TOML file per run, strict schema, with
//! scalar overrides from the command line.

use serde::{Deserialize, Serialize};

use passage_core::model::{build_law, BoundedB, LawSpec, TableAtom};
use passage_core::PairLaw;

use crate::CliError;

/// Thread-count selection: a fixed count or "auto" (one per core).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "ThreadsRepr", into = "ThreadsRepr")]
pub enum Threads {
    #[default]
    Auto,
    Count(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ThreadsRepr {
    Num(u64),
    Str(String),
}

impl TryFrom<ThreadsRepr> for Threads {
    type Error = String;
    fn try_from(repr: ThreadsRepr) -> Result<Self, String> {
        match repr {
            ThreadsRepr::Num(0) => Err(String::from("threads must be at least 1")),
            ThreadsRepr::Num(n) => Ok(Threads::Count(n as usize)),
            ThreadsRepr::Str(s) if s == "auto" => Ok(Threads::Auto),
            ThreadsRepr::Str(s) => {
                Err(format!("threads must be an integer or \"auto\", got {s:?}"))
            }
        }
    }
}

impl From<Threads> for ThreadsRepr {
    fn from(t: Threads) -> ThreadsRepr {
        match t {
            Threads::Auto => ThreadsRepr::Str(String::from("auto")),
            Threads::Count(n) => ThreadsRepr::Num(n as u64),
        }
    }
}

impl std::str::FromStr for Threads {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(Threads::Auto);
        }
        match s.parse::<usize>() {
            Ok(0) => Err(String::from("threads must be at least 1")),
            Ok(n) => Ok(Threads::Count(n)),
            Err(_) => Err(format!("threads must be an integer or \"auto\", got {s:?}")),
        }
    }
}

/// Top-level configuration. Unknown keys anywhere are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default)]
    pub threads: Threads,
    pub law: LawConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn parse_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config parse error: {e}")))
    }

    pub fn build_law(&self) -> Result<PairLaw, CliError> {
        self.law.build()
    }

    /// Cross-field validation shared by every subcommand.
    pub fn validate(&self) -> Result<(), CliError> {
        for &u in self.run.u.iter().chain(&self.run.u_grid) {
            if !(u > 1.0) {
                return Err(CliError::Config(format!("u must exceed 1, got {u}")));
            }
        }
        for &tau in &self.run.tau {
            if !(tau > 0.0) {
                return Err(CliError::Config(format!("tau must be positive, got {tau}")));
            }
        }
        if self.run.n_samples == 0 {
            return Err(CliError::Config(String::from(
                "n_samples must be at least 1",
            )));
        }
        if self.run.n_chunks == 0 {
            return Err(CliError::Config(String::from(
                "n_chunks must be at least 1",
            )));
        }
        Ok(())
    }
}

/// The `[law]` section: a family tag plus its parameters. Parameters
/// belonging to other families are rejected.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LawConfig {
    pub family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_a_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_a_var: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_b_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_b_var: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_atoms: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_atoms: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_atoms: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nonarithmetic_log_a: Option<bool>,
    /// Divide A by this factor after construction (density families).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale_t: Option<f64>,
}

impl LawConfig {
    fn require(&self, field: &str, value: Option<f64>) -> Result<f64, CliError> {
        value.ok_or_else(|| {
            CliError::Config(format!(
                "law family {:?} requires field `{field}`",
                self.family
            ))
        })
    }

    fn forbid_outside(&self, allowed: &[&str]) -> Result<(), CliError> {
        let present: &[(&str, bool)] = &[
            ("log_a_mean", self.log_a_mean.is_some()),
            ("log_a_var", self.log_a_var.is_some()),
            ("log_b_mean", self.log_b_mean.is_some()),
            ("log_b_var", self.log_b_var.is_some()),
            ("a1", self.a1.is_some()),
            ("a2", self.a2.is_some()),
            ("p1", self.p1.is_some()),
            ("p2", self.p2.is_some()),
            ("b", self.b.is_some()),
            ("a_lo", self.a_lo.is_some()),
            ("a_hi", self.a_hi.is_some()),
            ("b_lo", self.b_lo.is_some()),
            ("b_hi", self.b_hi.is_some()),
            ("a_atoms", self.a_atoms.is_some()),
            ("b_atoms", self.b_atoms.is_some()),
            ("p_atoms", self.p_atoms.is_some()),
            ("nonarithmetic_log_a", self.nonarithmetic_log_a.is_some()),
            ("scale_t", self.scale_t.is_some()),
        ];
        for (name, is_set) in present {
            if *is_set && !allowed.contains(name) && *name != "scale_t" {
                return Err(CliError::Config(format!(
                    "field `{name}` does not belong to law family {:?}",
                    self.family
                )));
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<PairLaw, CliError> {
        let spec = match self.family.as_str() {
            "lognormal_a_const_b" => {
                self.forbid_outside(&["log_a_mean", "log_a_var", "b"])?;
                LawSpec::LognormalAConstB {
                    log_a_mean: self.require("log_a_mean", self.log_a_mean)?,
                    log_a_var: self.require("log_a_var", self.log_a_var)?,
                    b: self.require("b", self.b)?,
                }
            }
            "lognormal_a_lognormal_b" => {
                self.forbid_outside(&["log_a_mean", "log_a_var", "log_b_mean", "log_b_var"])?;
                LawSpec::LognormalALognormalB {
                    log_a_mean: self.require("log_a_mean", self.log_a_mean)?,
                    log_a_var: self.require("log_a_var", self.log_a_var)?,
                    log_b_mean: self.require("log_b_mean", self.log_b_mean)?,
                    log_b_var: self.require("log_b_var", self.log_b_var)?,
                }
            }
            "two_point_a_const_b" => {
                self.forbid_outside(&["a1", "a2", "p1", "p2", "b"])?;
                LawSpec::TwoPointAConstB {
                    a1: self.require("a1", self.a1)?,
                    a2: self.require("a2", self.a2)?,
                    p1: self.require("p1", self.p1)?,
                    p2: self.require("p2", self.p2)?,
                    b: self.require("b", self.b)?,
                }
            }
            "bounded_density_a_bounded_b" => {
                self.forbid_outside(&["a_lo", "a_hi", "b", "b_lo", "b_hi"])?;
                let b = match (self.b, self.b_lo, self.b_hi) {
                    (Some(v), None, None) => BoundedB::Const(v),
                    (None, Some(lo), Some(hi)) => BoundedB::Uniform { lo, hi },
                    _ => {
                        return Err(CliError::Config(String::from(
                            "bounded density family needs either `b` or both `b_lo` and `b_hi`",
                        )))
                    }
                };
                LawSpec::BoundedDensityABoundedB {
                    a_lo: self.require("a_lo", self.a_lo)?,
                    a_hi: self.require("a_hi", self.a_hi)?,
                    b,
                }
            }
            "user_table" => {
                self.forbid_outside(&["a_atoms", "b_atoms", "p_atoms", "nonarithmetic_log_a"])?;
                let a = self.a_atoms.as_deref().ok_or_else(|| {
                    CliError::Config(String::from("user_table requires `a_atoms`"))
                })?;
                let b = self.b_atoms.as_deref().ok_or_else(|| {
                    CliError::Config(String::from("user_table requires `b_atoms`"))
                })?;
                let p = self.p_atoms.as_deref().ok_or_else(|| {
                    CliError::Config(String::from("user_table requires `p_atoms`"))
                })?;
                if a.len() != b.len() || a.len() != p.len() {
                    return Err(CliError::Config(format!(
                        "atom arrays must have equal lengths, got {}/{}/{}",
                        a.len(),
                        b.len(),
                        p.len()
                    )));
                }
                LawSpec::UserTable {
                    atoms: a
                        .iter()
                        .zip(b)
                        .zip(p)
                        .map(|((&a, &b), &p)| TableAtom { a, b, p })
                        .collect(),
                    nonarithmetic_log_a: self.nonarithmetic_log_a.unwrap_or(true),
                }
            }
            other => {
                return Err(CliError::Config(format!("unknown law family {other:?}")));
            }
        };
        let law = build_law(spec).map_err(CliError::Module)?;
        match self.scale_t {
            Some(t) => passage_core::model::scale_law(&law, t).map_err(CliError::Module),
            None => Ok(law),
        }
    }
}

/// The `[run]` section. Subcommands read the fields they need; defaults
/// cover the rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Passage levels.
    pub u: Vec<f64>,
    /// Scaled time horizons.
    pub tau: Vec<f64>,
    pub n_samples: u64,
    /// Estimation method for `estimate`/`compare`.
    pub method: String,
    /// Horizon multiplier for open-ended runs: ⌈mult·ρ·log u⌉ steps.
    pub horizon_multiplier: f64,
    pub burn_in: u64,
    /// Series truncation depth for the constant estimators.
    pub n_terms: u32,
    /// Steps of the long forward run in `tail`.
    pub n_run: u64,
    /// Level grid for `tail`.
    pub u_grid: Vec<f64>,
    /// Walk lengths for `petrov`.
    pub n_steps: Vec<u64>,
    /// Slope for `petrov`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    pub gamma: f64,
    /// Paths drawn by `simulate`.
    pub n_paths: u64,
    /// Steps per path in `simulate`.
    pub path_steps: u64,
    pub n_chunks: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            u: Vec::new(),
            tau: Vec::new(),
            n_samples: 100_000,
            method: String::from("importance"),
            horizon_multiplier: 3.0,
            burn_in: 1000,
            n_terms: 512,
            n_run: 1_000_000,
            u_grid: Vec::new(),
            n_steps: Vec::new(),
            c: None,
            gamma: 0.0,
            n_paths: 1,
            path_steps: 64,
            n_chunks: passage_core::estimators::DEFAULT_CHUNKS,
        }
    }
}

impl RunConfig {
    pub fn method(&self) -> Result<passage_core::Method, CliError> {
        match self.method.as_str() {
            "crude" => Ok(passage_core::Method::Crude),
            "importance" => Ok(passage_core::Method::Importance),
            "enumeration" => Ok(passage_core::Method::Enumeration),
            other => Err(CliError::Config(format!(
                "method must be crude, importance or enumeration, got {other:?}"
            ))),
        }
    }
}

/// The `[output]` section: artifact paths, resolved under `--out-dir`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<String>,
}
