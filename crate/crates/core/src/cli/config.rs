//! Experiment configuration: a flat TOML schema whose keys may also be given
//! as command-line flags. Layers merge as preset < file < flags.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::presets::SourceTerm;
use crate::discretization::{ObservationMask, Region, SpaceGrid};
use crate::error::{Error, Result};
use crate::inversion::DEFAULT_MAX_ITER;

/// Stopping tolerance, either given directly or derived from the noise level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Tolerance {
    Value(f64),
    /// Parsed from strings like `"delta/3"`.
    Rule(#[serde(with = "rule_string")] f64),
}

mod rule_string {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(div: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("delta/{div}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let s = String::deserialize(d)?;
        super::parse_rule(&s).map_err(D::Error::custom)
    }
}

fn parse_rule(s: &str) -> std::result::Result<f64, String> {
    let rest = s
        .trim()
        .strip_prefix("delta/")
        .ok_or_else(|| format!("tolerance rule `{s}` must look like `delta/3`"))?;
    match rest.trim().parse::<f64>() {
        Ok(d) if d > 0.0 && d.is_finite() => Ok(d),
        _ => Err(format!("tolerance rule `{s}` needs a positive divisor")),
    }
}

impl Tolerance {
    pub fn resolve(self, delta: f64) -> f64 {
        match self {
            Tolerance::Value(v) => v,
            Tolerance::Rule(div) => delta / div,
        }
    }
}

impl std::str::FromStr for Tolerance {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().parse::<f64>() {
            Ok(v) => Ok(Tolerance::Value(v)),
            Err(_) => parse_rule(s).map(Tolerance::Rule),
        }
    }
}

/// Observation subdomain: a union of boxes, or the unit cube minus one box.
#[derive(Debug, Clone, PartialEq)]
pub enum Subdomain {
    Union(Vec<Region>),
    Complement(Region),
}

impl Subdomain {
    pub fn intervals(pairs: &[(f64, f64)]) -> Self {
        Subdomain::Union(pairs.iter().map(|&(a, b)| Region::interval(a, b)).collect())
    }

    pub fn boxes(&self, dim: usize) -> Vec<Region> {
        match self {
            Subdomain::Union(b) => b.clone(),
            Subdomain::Complement(inner) => Region::complement(dim, *inner),
        }
    }

    pub fn mask(&self, grid: SpaceGrid) -> Result<ObservationMask> {
        ObservationMask::from_boxes(grid, &self.boxes(grid.dim()))
    }

    /// Short ASCII label used in CSV output.
    pub fn label(&self, dim: usize) -> String {
        fn axis(lo: f64, hi: f64) -> String {
            format!("[{lo},{hi}]")
        }
        fn region(r: &Region, dim: usize) -> String {
            (0..dim).map(|d| axis(r.lo[d], r.hi[d])).collect::<Vec<_>>().join("x")
        }
        match self {
            Subdomain::Union(b) => b.iter().map(|r| region(r, dim)).collect::<Vec<_>>().join("+"),
            Subdomain::Complement(r) => format!("complement {}", region(r, dim)),
        }
    }
}

/// Box given as `[a, b]` in 1D or `[a1, b1, a2, b2]` in 2D.
fn region_from_list(v: &[f64], dim: usize, key: &str) -> Result<Region> {
    match (dim, v.len()) {
        (1, 2) => Ok(Region::interval(v[0], v[1])),
        (2, 4) => Ok(Region::rect([v[0], v[1]], [v[2], v[3]])),
        _ => Err(Error::Config(format!(
            "`{key}`: a box needs {} numbers in {dim}D, got {}",
            2 * dim,
            v.len()
        ))),
    }
}

/// Partially specified configuration; every key is optional so layers can be
/// merged before validation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub dim: Option<usize>,
    /// Nodes per axis, boundary included.
    pub nodes: Option<usize>,
    /// Number of time steps on `[0, t_end]`.
    pub steps: Option<usize>,
    pub t_end: Option<f64>,
    pub alpha: Option<f64>,
    /// Preset name or expression in `x` (1D) or `x1`, `x2` (2D).
    pub f_true: Option<String>,
    /// Union of boxes.
    pub omega: Option<Vec<Vec<f64>>>,
    /// Alternative to `omega`: everything outside this box.
    pub omega_complement: Option<Vec<f64>>,
    pub delta: Option<f64>,
    pub seed: Option<u64>,
    pub rho: Option<f64>,
    pub m: Option<f64>,
    /// Raise `m` to `1.2 × estimate_m` when it is smaller.
    pub m_safeguard: Option<bool>,
    pub eps: Option<Tolerance>,
    pub f0: Option<f64>,
    pub max_iter: Option<usize>,
    /// Directory receiving the CSV artifacts.
    pub output: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )*
    };
}

impl ConfigLayer {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// `self` with every key set in `top` replaced.
    pub fn merged(mut self, top: &ConfigLayer) -> Self {
        if top.omega.is_some() || top.omega_complement.is_some() {
            self.omega = None;
            self.omega_complement = None;
        }
        overlay!(self, top; dim, nodes, steps, t_end, alpha, f_true, omega, omega_complement,
            delta, seed, rho, m, m_safeguard, eps, f0, max_iter, output);
        self
    }

    /// Fills defaults and validates.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let dim = self.dim.unwrap_or(1);
        if dim != 1 && dim != 2 {
            return Err(Error::Config(format!("`dim` must be 1 or 2, got {dim}")));
        }
        let alpha = self.alpha.ok_or_else(|| Error::Config("`alpha` is required".into()))?;
        let f_true = match &self.f_true {
            Some(s) => SourceTerm::parse(s, dim)?,
            None => return Err(Error::Config("`f_true` is required".into())),
        };
        let omega = match (&self.omega, &self.omega_complement) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give either `omega` or `omega_complement`, not both".into(),
                ))
            }
            (Some(list), None) => Subdomain::Union(
                list.iter()
                    .map(|b| region_from_list(b, dim, "omega"))
                    .collect::<Result<_>>()?,
            ),
            (None, Some(b)) => Subdomain::Complement(region_from_list(b, dim, "omega_complement")?),
            (None, None) => return Err(Error::Config("`omega` is required".into())),
        };
        let cfg = ExperimentConfig {
            dim,
            nodes: self.nodes.unwrap_or(41),
            steps: self.steps.unwrap_or(40),
            t_end: self.t_end.unwrap_or(1.0),
            alpha,
            f_true,
            omega,
            delta: self.delta.unwrap_or(0.0),
            seed: self.seed.unwrap_or(0),
            rho: self.rho.unwrap_or(1e-5),
            m: self.m.ok_or_else(|| Error::Config("`m` is required".into()))?,
            m_safeguard: self.m_safeguard.unwrap_or(true),
            eps: self.eps.unwrap_or(Tolerance::Value(1e-3)),
            f0: self.f0.unwrap_or(2.0),
            max_iter: self.max_iter.unwrap_or(DEFAULT_MAX_ITER),
            output: self.output.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Fully resolved experiment settings.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub nodes: usize,
    pub steps: usize,
    pub t_end: f64,
    pub alpha: f64,
    pub f_true: SourceTerm,
    pub omega: Subdomain,
    pub delta: f64,
    pub seed: u64,
    pub rho: f64,
    pub m: f64,
    pub m_safeguard: bool,
    pub eps: Tolerance,
    pub f0: f64,
    pub max_iter: usize,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("`{name}` must be positive, got {v}")))
            }
        };
        if self.nodes < 3 {
            return Err(Error::Config(format!("`nodes` must be at least 3, got {}", self.nodes)));
        }
        if self.steps == 0 {
            return Err(Error::Config("`steps` must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("`alpha` must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::Config(format!("`delta` must be non-negative, got {}", self.delta)));
        }
        positive("t_end", self.t_end)?;
        positive("rho", self.rho)?;
        positive("m", self.m)?;
        positive("eps", self.tolerance())?;
        if !self.f0.is_finite() {
            return Err(Error::Config("`f0` must be finite".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("`max_iter` must be at least 1".into()));
        }
        let declared = match &self.omega {
            Subdomain::Union(b) => b.clone(),
            Subdomain::Complement(inner) => vec![*inner],
        };
        for b in declared {
            for d in 0..self.dim {
                let (lo, hi) = (b.lo[d], b.hi[d]);
                if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
                    return Err(Error::Config(format!(
                        "`omega`: box [{lo}, {hi}] on axis {d} is not inside [0, 1]"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn tolerance(&self) -> f64 {
        self.eps.resolve(self.delta)
    }

    pub fn grid(&self) -> Result<SpaceGrid> {
        SpaceGrid::new(self.dim, self.nodes)
    }
}
