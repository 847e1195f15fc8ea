//! Harmonic expansion on the S¹/Z₂ orbifold and integration over the
//! compact coordinate.
//!
//! Even components expand as `X⁽⁰⁾/√(2πR) + Σ X⁽ⁿ⁾ cos(ny/R)/√(πR)`, odd ones
//! as `Σ X⁽ⁿ⁾ sin(ny/R)/√(πR)`. Products of two harmonics are integrated
//! over `(0, 2πR)` with an orthogonality table; the two summation labels
//! collapse to one, so a quadratic density comes out as a zero-mode block
//! plus a single representative excited block labelled `n`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::One;
use serde::Serialize;

use crate::dsl::{Parity, Rank, TheorySpec, MODE_SYMBOL};
use crate::symbolic::{
    equal_mod_divergence, Atom, AtomKind, Axis, Component, Expr, Mode, Monomial, Params, Q,
};

/// Second summation label used while two expansions are multiplied.
const PARTNER: &str = "l";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KkError {
    #[error("theory declares no compactification")]
    NoCompactification,
    #[error("component {comp} of `{field}` has no parity")]
    MissingParity { field: String, comp: String },
    #[error("unresolved dependence on the compact coordinate: {0}")]
    Unresolved(String),
    #[error("truncation must be at least 1")]
    BadTruncation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Basis {
    One,
    Cos,
    Sin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentExpansion {
    pub field: String,
    pub component: Option<u8>,
    pub parity: Parity,
    pub zero_mode: bool,
    pub basis: Basis,
    pub zero_norm: Option<String>,
    pub kk_norm: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModeExpansion {
    pub radius: String,
    /// Number of retained modes `k` (zero mode plus `k − 1` excited ones);
    /// `None` keeps it symbolic.
    pub truncation: Option<u32>,
    pub components: Vec<ComponentExpansion>,
}

impl ModeExpansion {
    fn lookup(&self, field: &str, comp: Component) -> Option<&ComponentExpansion> {
        self.components
            .iter()
            .find(|c| c.field == field && c.component == comp.index())
    }
}

pub fn expand_on_orbifold(spec: &TheorySpec, k: Option<u32>) -> Result<ModeExpansion, KkError> {
    let compact = spec.compact.as_ref().ok_or(KkError::NoCompactification)?;
    if k == Some(0) {
        return Err(KkError::BadTruncation);
    }
    let r = &compact.radius;
    let mut components = Vec::new();
    for f in &spec.fields {
        for comp in spec.field_components(f) {
            let parity = *f.parity.get(&comp).ok_or_else(|| KkError::MissingParity {
                field: f.name.clone(),
                comp: comp.index().map_or("scalar".into(), |i| i.to_string()),
            })?;
            let even = parity == Parity::Even;
            components.push(ComponentExpansion {
                field: f.name.clone(),
                component: comp.index(),
                parity,
                zero_mode: even,
                basis: if even { Basis::Cos } else { Basis::Sin },
                zero_norm: even.then(|| format!("1/√(2π{r})")),
                kk_norm: format!("1/√(π{r})"),
            });
        }
    }
    Ok(ModeExpansion {
        radius: r.clone(),
        truncation: k,
        components,
    })
}

/// Exact factor `q · 2^(t/2) · π^(p/2) · R^(r/2)`; exponents are stored
/// doubled so the square-root normalizations stay exact.
#[derive(Debug, Clone, PartialEq, Eq)]
struct YScalar {
    q: Q,
    two2: i32,
    pi2: i32,
    r2: i32,
}

impl YScalar {
    fn mul(&self, o: &YScalar) -> YScalar {
        YScalar {
            q: &self.q * &o.q,
            two2: self.two2 + o.two2,
            pi2: self.pi2 + o.pi2,
            r2: self.r2 + o.r2,
        }
    }

    fn zero_norm() -> Self {
        YScalar {
            q: Q::one(),
            two2: -1,
            pi2: -1,
            r2: -1,
        }
    }

    fn kk_norm() -> Self {
        YScalar {
            q: Q::one(),
            two2: 0,
            pi2: -1,
            r2: -1,
        }
    }

    /// Collapses to a rational times a power of the radius, if exact.
    fn resolve(&self, radius: &str) -> Option<(Q, Params)> {
        if self.pi2 != 0 || self.two2 % 2 != 0 || self.r2 % 2 != 0 {
            return None;
        }
        let mut q = self.q.clone();
        let two = Q::from_integer(2.into());
        for _ in 0..self.two2.abs() / 2 {
            q = if self.two2 > 0 { q * &two } else { q / &two };
        }
        Some((q, Params::symbol(radius, self.r2 / 2)))
    }
}

/// Result of `∫₀^{2πR} b₁(n y/R) b₂(l y/R) dy` for labels `n, l ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Overlap {
    Zero,
    /// `πR δ_{nl}`
    PiRDelta,
    /// `2πR`
    TwoPiR,
}

/// The orthogonality table. `One` stands for the constant zero-mode
/// profile.
pub fn overlap(a: Basis, b: Basis) -> Overlap {
    use Basis::*;
    match (a, b) {
        (One, One) => Overlap::TwoPiR,
        (Cos, Cos) | (Sin, Sin) => Overlap::PiRDelta,
        _ => Overlap::Zero,
    }
}

/// Numerical value of the table entry for concrete labels.
pub fn overlap_value(a: Basis, b: Basis, n: u32, l: u32, radius: f64) -> f64 {
    match overlap(a, b) {
        Overlap::Zero => 0.0,
        Overlap::TwoPiR => 2.0 * std::f64::consts::PI * radius,
        Overlap::PiRDelta if n == l => std::f64::consts::PI * radius,
        Overlap::PiRDelta => 0.0,
    }
}

/// One piece of a field's expansion: `coeff · X⁽mode⁾(x) · basis(label y/R)`.
#[derive(Debug, Clone)]
struct Piece {
    atom: Atom,
    basis: Basis,
    sign: i64,
    params: Params,
    norm: YScalar,
}

fn expand_atom(
    exp: &ModeExpansion,
    a: &Atom,
    label: &str,
) -> Result<Vec<Piece>, KkError> {
    let ce = exp.lookup(&a.name, a.comp).ok_or_else(|| KkError::MissingParity {
        field: a.name.clone(),
        comp: a.comp.index().map_or("scalar".into(), |i| i.to_string()),
    })?;
    let mut base_deriv = a.deriv.clone();
    let fifth = base_deriv.fifth;
    base_deriv.fifth = 0;
    let mut out = Vec::new();
    if ce.zero_mode && fifth == 0 {
        let atom = Atom {
            mode: Mode::Zero,
            deriv: base_deriv.clone(),
            ..a.clone()
        };
        out.push(Piece {
            atom,
            basis: Basis::One,
            sign: 1,
            params: Params::one(),
            norm: YScalar::zero_norm(),
        });
    }
    // ∂₅ cos = −(n/R) sin, ∂₅ sin = (n/R) cos
    let mut basis = ce.basis;
    let mut sign = 1;
    for _ in 0..fifth {
        match basis {
            Basis::Cos => {
                sign = -sign;
                basis = Basis::Sin;
            }
            Basis::Sin => basis = Basis::Cos,
            Basis::One => unreachable!(),
        }
    }
    let ratio = Params::symbol(label, 1).mul(&Params::symbol(&exp.radius, -1));
    out.push(Piece {
        atom: Atom {
            mode: Mode::kk(label),
            deriv: base_deriv,
            ..a.clone()
        },
        basis,
        sign,
        params: ratio.pow(fifth as i32),
        norm: YScalar::kk_norm(),
    });
    Ok(out)
}

fn integrate_term(exp: &ModeExpansion, m: &Monomial, c: &Q) -> Result<Expr, KkError> {
    let fields: Vec<&Atom> = m.atoms.iter().filter(|a| a.kind == AtomKind::Field).collect();
    if fields.len() != m.atoms.len() {
        return Err(KkError::Unresolved(format!(
            "non-field atom in a 5D density term {}",
            Expr::term(c.clone(), m.clone())
        )));
    }
    let [a, b] = fields.as_slice() else {
        return Err(KkError::Unresolved(format!(
            "term of degree {} is outside the orthogonality table",
            fields.len()
        )));
    };
    let mut out = Expr::zero();
    for pa in expand_atom(exp, a, MODE_SYMBOL)? {
        for pb in expand_atom(exp, b, PARTNER)? {
            let integral = match overlap(pa.basis, pb.basis) {
                Overlap::Zero => continue,
                Overlap::TwoPiR => YScalar {
                    q: Q::one(),
                    two2: 2,
                    pi2: 2,
                    r2: 2,
                },
                Overlap::PiRDelta => YScalar {
                    q: Q::one(),
                    two2: 0,
                    pi2: 2,
                    r2: 2,
                },
            };
            let y = integral.mul(&pa.norm).mul(&pb.norm);
            let (q, rp) = y.resolve(&exp.radius).ok_or_else(|| {
                KkError::Unresolved(format!("{} {}", pa.atom, pb.atom))
            })?;
            let params = m.params.mul(&pa.params).mul(&pb.params).mul(&rp);
            let coeff = c * q * Q::from_integer((pa.sign * pb.sign).into());
            let mono = Monomial::new(vec![pa.atom.clone(), pb.atom.clone()], params);
            // δ_{nl} identifies the partner label with n
            out = out.add(&Expr::term(coeff, mono).relabel_mode(PARTNER, MODE_SYMBOL));
        }
    }
    Ok(out)
}

/// Substitutes the expansions and integrates the density over the compact
/// coordinate.
pub fn integrate_extra_dimension(spec: &TheorySpec, exp: &ModeExpansion) -> Result<Expr, KkError> {
    let mut out = Expr::zero();
    for (m, c) in spec.lagrangian.terms() {
        out = out.add(&integrate_term(exp, m, c)?);
    }
    Ok(out)
}

/// Splits a 4D density into its zero-mode and excited blocks.
pub fn split_sectors(l4: &Expr) -> (Expr, Expr) {
    l4.split_by(|m| m.atoms.iter().all(|a| a.mode == Mode::Zero))
}

/// True if no term mixes atoms of different modes.
pub fn is_decoupled(l4: &Expr) -> bool {
    l4.terms().all(|(m, _)| {
        m.atoms
            .windows(2)
            .all(|w| w[0].mode == w[1].mode)
    })
}

/// Exponent of the radius in every term, keyed by the term's atoms.
pub fn radius_powers(l4: &Expr, radius: &str) -> BTreeMap<String, i32> {
    l4.terms()
        .map(|(m, _)| {
            let key: Vec<String> = m.atoms.iter().map(|a| a.to_string()).collect();
            (key.join(" "), m.params.exponent(radius))
        })
        .collect()
}

impl fmt::Display for ModeExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.components {
            let name = match c.component {
                Some(i) => format!("{}_{}", c.field, i),
                None => c.field.clone(),
            };
            let trig = match c.basis {
                Basis::Cos => "cos",
                Basis::Sin => "sin",
                Basis::One => "1",
            };
            let zero = match &c.zero_norm {
                Some(z) => format!("{z} {name}(0) + "),
                None => String::new(),
            };
            writeln!(
                f,
                "{name} = {zero}Σₙ {} {name}(n) {trig}(ny/{})",
                c.kk_norm, self.radius
            )?;
        }
        Ok(())
    }
}

/// Harmonic-basis sanity: a component without zero mode must be odd.
pub fn zero_modes(exp: &ModeExpansion) -> Vec<(String, Option<u8>)> {
    exp.components
        .iter()
        .filter(|c| c.zero_mode)
        .map(|c| (c.field.clone(), c.component))
        .collect()
}

/// The compactified Stueckelberg shift `δA_μ = −∂_μ ε`, `δA₅⁽ⁿ⁾ = (n/R) ε⁽ⁿ⁾`,
/// `δθ = ε`, with the gauge parameter of the same mode as the shifted atom.
pub fn stueckelberg_shift(spec: &TheorySpec, atom: &Atom) -> Option<Expr> {
    let radius = &spec.compact.as_ref()?.radius;
    let field = spec.field(&atom.name)?;
    if atom.kind != AtomKind::Field {
        return None;
    }
    let eps = Expr::atom(Atom::new(
        AtomKind::GaugeParam,
        "eps",
        atom.mode.clone(),
        Component::Scalar,
    ));
    let here = Expr::atom(atom.clone());
    let delta = match (field.rank, atom.comp) {
        (Rank::Scalar, _) => eps,
        (Rank::Vector, Component::Fifth) => match atom.mode.label() {
            Some(label) => eps.scale_params(
                &Params::symbol(label, 1).mul(&Params::symbol(radius, -1)),
            ),
            None => Expr::zero(),
        },
        (Rank::Vector, c) => eps.differentiate(Axis::from_index(c.index()?)?).neg(),
    };
    Some(here.add(&delta))
}

/// True if the density changes by a total derivative under the shift.
pub fn is_gauge_covariant(spec: &TheorySpec, l4: &Expr) -> bool {
    match l4.substitute(|a| stueckelberg_shift(spec, a)) {
        Ok(shifted) => equal_mod_divergence(&shifted, l4),
        Err(_) => false,
    }
}
