//! Catalog of true sources, single experiments and table rows with their
//! reference results.

use std::f64::consts::PI;
use std::fmt;

use evalexpr::{ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Node, Value};

use super::config::{ConfigLayer, Subdomain, Tolerance};
use crate::discretization::{Field, Region, SpaceGrid};
use crate::error::{Error, Result};

/// Named true sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// `sin(πx) + x - 3`
    Ex51a,
    /// `sin(πx) - 3/2`
    Ex51b,
    /// `-sin(πx/2) - x² + 3`
    Ex52,
    /// `x₁ + x₂ + 1`
    Ex53a,
    /// `cos(πx₁) cos(πx₂) + 2`
    Ex53b,
    /// `exp((x₁ + x₂)/2) + 1`
    Ex54,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::Ex51a,
        Preset::Ex51b,
        Preset::Ex52,
        Preset::Ex53a,
        Preset::Ex53b,
        Preset::Ex54,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Ex51a => "ex51a",
            Preset::Ex51b => "ex51b",
            Preset::Ex52 => "ex52",
            Preset::Ex53a => "ex53a",
            Preset::Ex53b => "ex53b",
            Preset::Ex54 => "ex54",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Preset::Ex51a | Preset::Ex51b | Preset::Ex52 => 1,
            _ => 2,
        }
    }

    pub fn eval(self, x: [f64; 2]) -> f64 {
        let [x1, x2] = x;
        match self {
            Preset::Ex51a => (PI * x1).sin() + x1 - 3.0,
            Preset::Ex51b => (PI * x1).sin() - 1.5,
            Preset::Ex52 => -(PI * x1 / 2.0).sin() - x1 * x1 + 3.0,
            Preset::Ex53a => x1 + x2 + 1.0,
            Preset::Ex53b => (PI * x1).cos() * (PI * x2).cos() + 2.0,
            Preset::Ex54 => ((x1 + x2) / 2.0).exp() + 1.0,
        }
    }
}

/// True source: a preset or a user expression.
#[derive(Clone)]
pub enum SourceTerm {
    Preset(Preset),
    Expression { text: String, tree: Node<DefaultNumericTypes> },
}

impl fmt::Debug for SourceTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceTerm::Preset(p) => write!(f, "Preset({})", p.name()),
            SourceTerm::Expression { text, .. } => write!(f, "Expression({text:?})"),
        }
    }
}

impl SourceTerm {
    /// Preset name, or an expression over `x` (1D) / `x1`, `x2` (2D) with the
    /// constants `pi`, `e` and functions such as `math::sin`.
    pub fn parse(text: &str, dim: usize) -> Result<Self> {
        if let Some(p) = Preset::ALL.iter().find(|p| p.name() == text.trim()) {
            if p.dim() != dim {
                return Err(Error::Config(format!(
                    "`f_true` preset {} is {}D but `dim` is {dim}",
                    p.name(),
                    p.dim()
                )));
            }
            return Ok(SourceTerm::Preset(*p));
        }
        let tree = evalexpr::build_operator_tree::<DefaultNumericTypes>(text)
            .map_err(|e| Error::Config(format!("`f_true` = {text:?}: {e}")))?;
        let term = SourceTerm::Expression {
            text: text.to_string(),
            tree,
        };
        // reject unknown identifiers up front
        term.eval([0.5, 0.5], dim)?;
        Ok(term)
    }

    pub fn name(&self) -> &str {
        match self {
            SourceTerm::Preset(p) => p.name(),
            SourceTerm::Expression { text, .. } => text,
        }
    }

    pub fn eval(&self, x: [f64; 2], dim: usize) -> Result<f64> {
        match self {
            SourceTerm::Preset(p) => Ok(p.eval(x)),
            SourceTerm::Expression { text, tree } => {
                let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
                let mut set = |k: &str, v: f64| {
                    ctx.set_value(k.into(), Value::Float(v))
                        .map_err(|e| Error::Config(e.to_string()))
                };
                set("pi", PI)?;
                set("e", std::f64::consts::E)?;
                if dim == 1 {
                    set("x", x[0])?;
                } else {
                    set("x1", x[0])?;
                    set("x2", x[1])?;
                }
                tree.eval_number_with_context(&ctx)
                    .map_err(|e| Error::Config(format!("`f_true` = {text:?}: {e}")))
            }
        }
    }

    pub fn sample(&self, grid: SpaceGrid) -> Result<Field> {
        let values = (0..grid.len())
            .map(|k| self.eval(grid.coords(k), grid.dim()))
            .collect::<Result<Vec<_>>>()?;
        Field::new(grid, values)
    }
}

fn layer(dim: usize, alpha: f64, f_true: Preset, m: f64) -> ConfigLayer {
    ConfigLayer {
        dim: Some(dim),
        alpha: Some(alpha),
        f_true: Some(f_true.name().into()),
        m: Some(m),
        ..Default::default()
    }
}

fn with_omega(mut l: ConfigLayer, omega: &Subdomain, dim: usize) -> ConfigLayer {
    match omega {
        Subdomain::Union(boxes) => {
            l.omega = Some(
                boxes
                    .iter()
                    .map(|b| {
                        if dim == 1 {
                            vec![b.lo[0], b.hi[0]]
                        } else {
                            vec![b.lo[0], b.hi[0], b.lo[1], b.hi[1]]
                        }
                    })
                    .collect(),
            );
        }
        Subdomain::Complement(b) => {
            l.omega_complement = Some(vec![b.lo[0], b.hi[0], b.lo[1], b.hi[1]]);
        }
    }
    l
}

fn edges() -> Subdomain {
    Subdomain::intervals(&[(0.0, 0.05), (0.95, 1.0)])
}

fn frame(a: f64, b: f64) -> Subdomain {
    Subdomain::Complement(Region::rect([a, b], [a, b]))
}

/// Settings of a named single experiment together with its reference
/// `(err %, K)`.
pub fn experiment(name: &str) -> Option<(ConfigLayer, f64, usize)> {
    let (l, omega, delta, eps, err, k) = match name {
        "ex51a" => (layer(1, 0.3, Preset::Ex51a, 2.0), edges(), 0.02, None, 4.56, 16),
        "ex51b" => (layer(1, 0.5, Preset::Ex51b, 1.0), edges(), 0.02, None, 4.92, 49),
        "ex52" => (layer(1, 0.8, Preset::Ex52, 1.0), edges(), 0.005, None, 2.87, 51),
        "ex53a" => (layer(2, 0.3, Preset::Ex53a, 2.0), frame(0.1, 0.9), 0.01, Some(3.0), 6.21, 21),
        "ex53b" => (layer(2, 0.5, Preset::Ex53b, 2.0), frame(0.1, 0.9), 0.01, Some(3.0), 7.17, 36),
        "ex54" => (layer(2, 0.8, Preset::Ex54, 2.0), frame(0.1, 0.9), 0.005, Some(5.0), 3.25, 35),
        _ => return None,
    };
    let dim = l.dim.unwrap_or(1);
    let mut l = with_omega(l, &omega, dim);
    l.delta = Some(delta);
    l.eps = eps.map(Tolerance::Rule);
    Some((l, err, k))
}

pub const EXPERIMENTS: [&str; 6] = ["ex51a", "ex51b", "ex52", "ex53a", "ex53b", "ex54"];

/// One row of a reference table.
#[derive(Debug, Clone)]
pub struct TableRow {
    pub delta: f64,
    pub omega: Subdomain,
    pub paper_err_percent: f64,
    pub paper_k: usize,
}

/// Shared settings and rows of table 1 (1D) or table 2 (2D).
pub fn table(id: u8) -> Result<(ConfigLayer, Vec<TableRow>)> {
    let row = |delta: f64, omega: Subdomain, err: f64, k: usize| TableRow {
        delta,
        omega,
        paper_err_percent: err,
        paper_k: k,
    };
    match id {
        1 => {
            let base = layer(1, 0.8, Preset::Ex52, 1.0);
            let band = |w: f64| Subdomain::intervals(&[(0.0, w), (1.0 - w, 1.0)]);
            Ok((
                base,
                vec![
                    row(0.005, band(0.05), 2.87, 51),
                    row(0.01, band(0.05), 3.61, 51),
                    row(0.02, band(0.05), 5.38, 51),
                    row(0.04, band(0.05), 9.35, 50),
                    row(0.02, band(0.2), 4.11, 20),
                    row(0.02, band(0.1), 4.05, 31),
                    row(0.02, band(0.025), 9.89, 79),
                ],
            ))
        }
        2 => {
            let mut base = layer(2, 0.8, Preset::Ex54, 2.0);
            base.eps = Some(Tolerance::Rule(5.0));
            Ok((
                base,
                vec![
                    row(0.005, frame(0.1, 0.9), 3.25, 35),
                    row(0.01, frame(0.1, 0.9), 4.69, 26),
                    row(0.02, frame(0.1, 0.9), 7.11, 17),
                    row(0.04, frame(0.1, 0.9), 10.31, 8),
                    row(0.01, frame(0.1, 0.8), 3.63, 21),
                    row(0.01, frame(0.05, 0.95), 6.70, 42),
                    row(0.01, Subdomain::Complement(Region::rect([0.0, 0.9], [0.1, 0.9])), 5.46, 22),
                ],
            ))
        }
        _ => Err(Error::Config(format!("unknown table id {id}; expected 1 or 2"))),
    }
}

/// Full settings layer of one table row.
pub fn table_row_layer(base: &ConfigLayer, row: &TableRow) -> ConfigLayer {
    let dim = base.dim.unwrap_or(1);
    let mut l = with_omega(base.clone(), &row.omega, dim);
    l.delta = Some(row.delta);
    l
}
