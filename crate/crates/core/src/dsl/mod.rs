//! The theory description language.
//!
//! ```text
//! theory stueckelberg5d {
//!   dim 5;
//!   metric(+,-,-,-,-);
//!   compact y on S1/Z2 radius R;
//!   param m;
//!   field A vector parity(mu: even, 5: odd);
//!   field theta scalar parity(even);
//!   lagrangian = -1/4*F[M,N]*F[M,N] + m^2*(A[M] + d[M] theta)*(A[M] + d[M] theta);
//!   gauge_fixing coulomb { d[i] A{0}[i] = 0; A{0}[0] = 0; }
//! }
//! ```
//!
//! Index names `i j k l` run over spatial components, greek names over
//! `0..=3`, single upper-case letters over every component (including `5`
//! in five dimensions). A repeated index is summed; two lower (or two upper)
//! occurrences pick up the metric sign, a lower/upper pair does not. Field
//! indices are lower, momentum indices (`pi(A)[i]`) upper. `d[..]`, `lap` and
//! `invlap` are prefix operators acting on the following factor, and `F`
//! abbreviates the field strength of the theory's vector field. Mode labels
//! `{0}` and `{n}` select harmonics after compactification.

mod lexer;
mod parser;
mod resolve;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::symbolic::{Component, Expr};

pub use resolve::parse_expr;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl Diagnostic {
    pub fn new(line: usize, col: usize, message: impl Into<String>) -> Self {
        Diagnostic {
            line,
            col,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub diagnostics: Vec<Diagnostic>,
}

impl ParseError {
    pub fn single(d: Diagnostic) -> Self {
        ParseError {
            diagnostics: vec![d],
        }
    }

    pub fn mentions(&self, needle: &str) -> bool {
        self.diagnostics.iter().any(|d| d.message.contains(needle))
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.diagnostics.iter().map(|d| d.to_string()).collect();
        write!(f, "{}", lines.join("\n"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Rank {
    Scalar,
    Vector,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDecl {
    pub name: String,
    pub rank: Rank,
    pub parity: BTreeMap<Component, Parity>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Compactification {
    pub coordinate: String,
    pub radius: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaugeSet {
    pub name: String,
    pub conditions: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TheorySpec {
    pub name: String,
    pub dim: u8,
    pub metric: Vec<i8>,
    pub compact: Option<Compactification>,
    pub params: BTreeSet<String>,
    pub fields: Vec<FieldDecl>,
    pub lagrangian: Expr,
    pub gauge_sets: Vec<GaugeSet>,
}

/// Symbol used for the excited-mode label after compactification.
pub const MODE_SYMBOL: &str = "n";

impl TheorySpec {
    pub fn components(&self) -> Vec<Component> {
        let mut v = vec![
            Component::Time,
            Component::Space(1),
            Component::Space(2),
            Component::Space(3),
        ];
        if self.dim == 5 {
            v.push(Component::Fifth);
        }
        v
    }

    pub fn metric_sign(&self, c: Component) -> i64 {
        let slot = match c {
            Component::Time | Component::Scalar => 0,
            Component::Space(i) => i as usize,
            Component::Fifth => 4,
        };
        self.metric.get(slot).copied().unwrap_or(1) as i64
    }

    pub fn field(&self, name: &str) -> Option<&FieldDecl> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn field_components(&self, f: &FieldDecl) -> Vec<Component> {
        match f.rank {
            Rank::Scalar => vec![Component::Scalar],
            Rank::Vector => self.components(),
        }
    }

    pub fn gauge_set(&self, name: &str) -> Option<&GaugeSet> {
        self.gauge_sets.iter().find(|g| g.name == name)
    }

    /// Parameters that are declared with `param` (the radius is implied by
    /// the compactification line).
    fn declared_params(&self) -> Vec<&String> {
        let radius = self.compact.as_ref().map(|c| c.radius.as_str());
        self.params
            .iter()
            .filter(|p| Some(p.as_str()) != radius)
            .collect()
    }
}

pub fn parse_theory(src: &str) -> Result<TheorySpec, ParseError> {
    let raw = parser::parse_raw(src).map_err(ParseError::single)?;
    resolve::resolve(raw)
}

fn render_parity(spec: &TheorySpec, f: &FieldDecl) -> String {
    if f.parity.is_empty() {
        return String::new();
    }
    match f.rank {
        Rank::Scalar => {
            let p = f.parity.values().next().unwrap();
            format!(" parity({})", parity_word(*p))
        }
        Rank::Vector => {
            let parts: Vec<String> = spec
                .components()
                .into_iter()
                .filter_map(|c| {
                    f.parity
                        .get(&c)
                        .map(|p| format!("{}: {}", c.index().unwrap(), parity_word(*p)))
                })
                .collect();
            format!(" parity({})", parts.join(", "))
        }
    }
}

fn parity_word(p: Parity) -> &'static str {
    match p {
        Parity::Even => "even",
        Parity::Odd => "odd",
    }
}

/// Deterministic pretty-print in the concrete syntax, with all indices
/// written out as explicit components.
pub fn render_theory(spec: &TheorySpec) -> String {
    let mut s = format!("theory {} {{\n", spec.name);
    s.push_str(&format!("  dim {};\n", spec.dim));
    let sig: Vec<&str> = spec
        .metric
        .iter()
        .map(|&x| if x > 0 { "+" } else { "-" })
        .collect();
    s.push_str(&format!("  metric({});\n", sig.join(",")));
    if let Some(c) = &spec.compact {
        s.push_str(&format!("  compact {} on S1/Z2 radius {};\n", c.coordinate, c.radius));
    }
    let params = spec.declared_params();
    if !params.is_empty() {
        let names: Vec<&str> = params.iter().map(|p| p.as_str()).collect();
        s.push_str(&format!("  param {};\n", names.join(", ")));
    }
    for f in &spec.fields {
        let rank = match f.rank {
            Rank::Scalar => "scalar",
            Rank::Vector => "vector",
        };
        s.push_str(&format!("  field {} {}{};\n", f.name, rank, render_parity(spec, f)));
    }
    s.push_str(&format!("  lagrangian = {};\n", spec.lagrangian.render_dsl()));
    for g in &spec.gauge_sets {
        s.push_str(&format!("  gauge_fixing {} {{\n", g.name));
        for c in &g.conditions {
            s.push_str(&format!("    {} = 0;\n", c.render_dsl()));
        }
        s.push_str("  }\n");
    }
    s.push_str("}\n");
    s
}
