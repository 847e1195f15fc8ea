//! Canonical polynomial expressions over atoms and parameters.
//!
//! An [`Expr`] is a map from [`Monomial`] to a nonzero rational
//! coefficient. Because the map is ordered and zero coefficients are never
//! stored, structural equality of two `Expr`s is symbolic equality.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::atom::{Atom, AtomKind, Component, Deriv, Mode};
use super::op::SpatialOp;
use super::params::{fmt_q, q, render_coeff_dsl, Params, Q};
use super::SymError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Axis {
    Time,
    Space(u8),
    Fifth,
}

impl Axis {
    pub fn from_index(i: u8) -> Option<Axis> {
        match i {
            0 => Some(Axis::Time),
            1..=3 => Some(Axis::Space(i)),
            5 => Some(Axis::Fifth),
            _ => None,
        }
    }
}

/// Product of atoms (sorted multiset) times a parameter monomial.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    pub atoms: Vec<Atom>,
    pub params: Params,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn new(mut atoms: Vec<Atom>, params: Params) -> Self {
        atoms.sort();
        Monomial { atoms, params }
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        Monomial::new(atoms, self.params.mul(&other.params))
    }

    pub fn degree(&self) -> usize {
        self.atoms.len()
    }

    fn without(&self, idx: usize) -> Monomial {
        let mut atoms = self.atoms.clone();
        atoms.remove(idx);
        Monomial {
            atoms,
            params: self.params.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr {
    terms: BTreeMap<Monomial, Q>,
}

impl Expr {
    pub fn zero() -> Self {
        Expr::default()
    }

    pub fn constant(c: Q) -> Self {
        Self::term(c, Monomial::one())
    }

    pub fn int(n: i64) -> Self {
        Self::constant(q(n))
    }

    pub fn scalar(c: Q, params: Params) -> Self {
        Self::term(c, Monomial::new(vec![], params))
    }

    pub fn param(name: &str, exp: i32) -> Self {
        Self::scalar(Q::one(), Params::symbol(name, exp))
    }

    pub fn atom(a: Atom) -> Self {
        Self::term(Q::one(), Monomial::new(vec![a], Params::one()))
    }

    pub fn term(c: Q, m: Monomial) -> Self {
        let mut e = Expr::zero();
        e.add_term(m, c);
        e
    }

    pub fn add_term(&mut self, m: Monomial, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Q)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True if no atoms occur.
    pub fn is_scalar(&self) -> bool {
        self.terms.keys().all(|m| m.atoms.is_empty())
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    /// Every term has at most one atom.
    pub fn is_affine(&self) -> bool {
        self.degree() <= 1
    }

    pub fn add(&self, other: &Expr) -> Expr {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Expr {
        self.scale(&-Q::one())
    }

    pub fn scale(&self, c: &Q) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        Expr {
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    pub fn scale_params(&self, p: &Params) -> Expr {
        let mut out = Expr::zero();
        for (m, c) in &self.terms {
            out.add_term(
                Monomial {
                    atoms: m.atoms.clone(),
                    params: m.params.mul(p),
                },
                c.clone(),
            );
        }
        out
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        let mut out = Expr::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Expr {
        let mut out = Expr::int(1);
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    pub fn sum<'a>(items: impl IntoIterator<Item = &'a Expr>) -> Expr {
        let mut out = Expr::zero();
        for e in items {
            out = out.add(e);
        }
        out
    }

    /// All atoms occurring, with derivatives.
    pub fn atoms(&self) -> BTreeSet<Atom> {
        self.terms
            .keys()
            .flat_map(|m| m.atoms.iter().cloned())
            .collect()
    }

    /// All underived atoms whose derivatives occur.
    pub fn base_atoms(&self) -> BTreeSet<Atom> {
        self.terms
            .keys()
            .flat_map(|m| m.atoms.iter().map(|a| a.base()))
            .collect()
    }

    pub fn contains_kind(&self, kind: AtomKind) -> bool {
        self.terms
            .keys()
            .any(|m| m.atoms.iter().any(|a| a.kind == kind))
    }

    pub fn contains_base(&self, base: &Atom) -> bool {
        self.terms
            .keys()
            .any(|m| m.atoms.iter().any(|a| a.base() == *base))
    }

    pub fn param_symbols(&self) -> BTreeSet<String> {
        self.terms
            .keys()
            .flat_map(|m| m.params.symbols().cloned())
            .collect()
    }

    /// Leading term (first in canonical order).
    pub fn leading(&self) -> Option<(&Monomial, &Q)> {
        self.terms.iter().next()
    }

    /// Rescales so the leading coefficient is positive.
    pub fn with_positive_lead(&self) -> Expr {
        match self.leading() {
            Some((_, c)) if c.is_negative() => self.neg(),
            _ => self.clone(),
        }
    }

    /// Total derivative along one axis (Leibniz rule).
    pub fn differentiate(&self, axis: Axis) -> Expr {
        let mut out = Expr::zero();
        for (m, c) in &self.terms {
            for (i, a) in m.atoms.iter().enumerate() {
                let rest = m.without(i);
                for (k, da) in differentiate_atom(a, axis) {
                    let mut atoms = rest.atoms.clone();
                    atoms.push(da);
                    out.add_term(Monomial::new(atoms, rest.params.clone()), c * q(k));
                }
            }
        }
        out
    }

    /// Applies a spatial operator. Affine expressions accept any operator;
    /// nonlinear ones need a non-negative Laplacian power.
    pub fn apply_op(&self, op: &SpatialOp) -> Result<Expr, SymError> {
        if op.is_identity() {
            return Ok(self.clone());
        }
        if self.is_affine() {
            let mut out = Expr::zero();
            for (m, c) in &self.terms {
                match m.atoms.first() {
                    None => {
                        if op.lap < 0 {
                            return Err(SymError::NonInvertibleMode(self.to_string()));
                        }
                    }
                    Some(a) => {
                        for (k, o) in a.deriv.space.mul(op) {
                            let mut na = a.clone();
                            na.deriv.space = o;
                            out.add_term(Monomial::new(vec![na], m.params.clone()), c * q(k));
                        }
                    }
                }
            }
            return Ok(out);
        }
        let expansion = op
            .unreduced()
            .ok_or_else(|| SymError::Nonlinear(format!("∇⁻² applied to {self}")))?;
        let mut out = Expr::zero();
        for (k, exps) in expansion {
            let mut e = self.clone();
            for (axis, &n) in exps.iter().enumerate() {
                for _ in 0..n {
                    e = e.differentiate(Axis::Space(axis as u8 + 1));
                }
            }
            out = out.add(&e.scale(&q(k)));
        }
        Ok(out)
    }

    pub fn apply_deriv(&self, d: &Deriv) -> Result<Expr, SymError> {
        let mut e = self.clone();
        for _ in 0..d.time {
            e = e.differentiate(Axis::Time);
        }
        for _ in 0..d.fifth {
            e = e.differentiate(Axis::Fifth);
        }
        e.apply_op(&d.space)
    }

    /// Replaces every occurrence of a base atom (and its derivatives) by an
    /// expression, propagating the derivatives into the replacement.
    pub fn substitute<F>(&self, f: F) -> Result<Expr, SymError>
    where
        F: Fn(&Atom) -> Option<Expr>,
    {
        let mut out = Expr::zero();
        for (m, c) in &self.terms {
            let mut acc = Expr::scalar(c.clone(), m.params.clone());
            for a in &m.atoms {
                let factor = match f(&a.base()) {
                    Some(rep) => rep.apply_deriv(&a.deriv)?,
                    None => Expr::atom(a.clone()),
                };
                acc = acc.mul(&factor);
                if acc.is_zero() {
                    break;
                }
            }
            out = out.add(&acc);
        }
        Ok(out)
    }

    /// Ordinary partial derivative with respect to one exact atom
    /// (derivatives included), treating all other atoms as independent.
    pub fn partial(&self, target: &Atom) -> Expr {
        let mut out = Expr::zero();
        for (m, c) in &self.terms {
            let count = m.atoms.iter().filter(|a| *a == target).count();
            if count == 0 {
                continue;
            }
            let idx = m.atoms.iter().position(|a| a == target).unwrap();
            out.add_term(m.without(idx), c * q(count as i64));
        }
        out
    }

    /// Euler-Lagrange derivative of `∫ self` with respect to a base atom;
    /// derivatives on the target are moved onto the cofactor by parts.
    ///
    /// Fails when an inverse Laplacian would have to act on a nonlinear
    /// cofactor, whose result has no local form.
    pub fn functional_derivative(&self, target: &Atom) -> Result<Expr, SymError> {
        let base = target.base();
        let mut out = Expr::zero();
        for (m, c) in &self.terms {
            for (i, a) in m.atoms.iter().enumerate() {
                if a.base() != base {
                    continue;
                }
                let rest = Expr::term(c.clone(), m.without(i));
                let moved = rest.apply_deriv(&a.deriv)?;
                out = out.add(&moved.scale(&q(a.deriv.adjoint_sign())));
            }
        }
        Ok(out)
    }

    /// Splits off the part of the expression that does not contain any of
    /// the given atoms (exactly) and the remainder.
    pub fn split_by<F: Fn(&Monomial) -> bool>(&self, pred: F) -> (Expr, Expr) {
        let mut yes = Expr::zero();
        let mut no = Expr::zero();
        for (m, c) in &self.terms {
            if pred(m) {
                yes.add_term(m.clone(), c.clone());
            } else {
                no.add_term(m.clone(), c.clone());
            }
        }
        (yes, no)
    }

    pub fn map_atoms<F: Fn(&Atom) -> Atom>(&self, f: F) -> Expr {
        let mut out = Expr::zero();
        for (m, c) in &self.terms {
            let atoms = m.atoms.iter().map(&f).collect();
            out.add_term(Monomial::new(atoms, m.params.clone()), c.clone());
        }
        out
    }

    pub fn map_params<F: Fn(&Params) -> Params>(&self, f: F) -> Expr {
        let mut out = Expr::zero();
        for (m, c) in &self.terms {
            out.add_term(Monomial::new(m.atoms.clone(), f(&m.params)), c.clone());
        }
        out
    }

    /// Renames a Kaluza-Klein label in both the atoms and the parameters.
    pub fn relabel_mode(&self, from: &str, to: &str) -> Expr {
        self.map_atoms(|a| a.relabel_mode(from, to))
            .map_params(|p| p.rename(from, to))
    }

    /// Sets every atom matching `pred` (by base) to zero.
    pub fn drop_atoms<F: Fn(&Atom) -> bool>(&self, pred: F) -> Expr {
        let mut out = Expr::zero();
        for (m, c) in &self.terms {
            if !m.atoms.iter().any(|a| pred(&a.base())) {
                out.add_term(m.clone(), c.clone());
            }
        }
        out
    }

    /// Expression rendered in the DSL's concrete syntax.
    pub fn render_dsl(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut s = String::new();
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            if i == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            let mag = c.abs();
            let mut parts = Vec::new();
            if !mag.is_one() || !m.params.is_one() || m.atoms.is_empty() {
                parts.push(render_coeff_dsl(&mag, &m.params));
            }
            for a in &m.atoms {
                parts.push(render_atom_dsl(a));
            }
            s.push_str(&parts.join("*"));
        }
        s
    }

    /// Lossless tree form, used to feed expressions back through
    /// [`normalize`](super::normalize).
    pub fn to_raw(&self) -> RawExpr {
        RawExpr::Sum(
            self.terms
                .iter()
                .map(|(m, c)| {
                    let mut factors = vec![RawExpr::Num(c.clone())];
                    for (k, v) in &m.params.0 {
                        factors.push(RawExpr::Param(k.clone(), *v));
                    }
                    for a in &m.atoms {
                        factors.push(RawExpr::Atom(a.clone()));
                    }
                    RawExpr::Prod(factors)
                })
                .collect(),
        )
    }
}

pub(crate) fn render_atom_dsl(a: &Atom) -> String {
    let mut s = String::new();
    for _ in 0..a.deriv.time {
        s.push_str("d[0] ");
    }
    for _ in 0..a.deriv.fifth {
        s.push_str("d[5] ");
    }
    for (axis, &e) in a.deriv.space.d.iter().enumerate() {
        for _ in 0..e {
            s.push_str(&format!("d[{}] ", axis + 1));
        }
    }
    match a.deriv.space.lap {
        0 => {}
        k if k > 0 => {
            for _ in 0..k {
                s.push_str("lap ");
            }
        }
        k => {
            for _ in 0..(-k) {
                s.push_str("invlap ");
            }
        }
    }
    let head = match a.kind {
        AtomKind::Field => a.name.clone(),
        AtomKind::Momentum => format!("pi({})", a.name),
        AtomKind::Multiplier => format!("mult({})", a.name),
        AtomKind::GaugeParam => format!("gauge({})", a.name),
    };
    s.push_str(&head);
    match &a.mode {
        Mode::Bare => {}
        Mode::Zero => s.push_str("{0}"),
        Mode::Kk(l) => s.push_str(&format!("{{{l}}}")),
    }
    if let Some(i) = a.comp.index() {
        s.push_str(&format!("[{i}]"));
    }
    s
}

/// Derivative of one atom along an axis as a signed combination of
/// canonical atoms.
pub fn differentiate_atom(a: &Atom, axis: Axis) -> Vec<(i64, Atom)> {
    match axis {
        Axis::Time => {
            let mut b = a.clone();
            b.deriv.time += 1;
            vec![(1, b)]
        }
        Axis::Fifth => {
            let mut b = a.clone();
            b.deriv.fifth += 1;
            vec![(1, b)]
        }
        Axis::Space(k) => a
            .deriv
            .space
            .mul(&SpatialOp::partial(k))
            .into_iter()
            .map(|(c, o)| {
                let mut b = a.clone();
                b.deriv.space = o;
                (c, b)
            })
            .collect(),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            let mag = c.abs();
            let mut parts: Vec<String> = Vec::new();
            if !mag.is_one() || (m.atoms.is_empty() && m.params.is_one()) {
                parts.push(fmt_q(&mag));
            }
            if !m.params.is_one() {
                parts.push(m.params.to_string());
            }
            for a in &m.atoms {
                parts.push(a.to_string());
            }
            write!(f, "{}", parts.join(" "))?;
        }
        Ok(())
    }
}

/// Unnormalized expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum RawExpr {
    Num(Q),
    Param(String, i32),
    Atom(Atom),
    Sum(Vec<RawExpr>),
    Prod(Vec<RawExpr>),
    Pow(Box<RawExpr>, u32),
    D(Axis, Box<RawExpr>),
    /// `(∇²)^k` applied to the operand; negative `k` is the formal inverse.
    Lap(i32, Box<RawExpr>),
}

impl RawExpr {
    pub fn evaluate(&self) -> Result<Expr, SymError> {
        Ok(match self {
            RawExpr::Num(c) => Expr::constant(c.clone()),
            RawExpr::Param(p, e) => Expr::param(p, *e),
            RawExpr::Atom(a) => {
                // atoms may arrive with non-canonical derivative data
                let base = Expr::atom(a.base());
                base.apply_deriv(&a.deriv)?
            }
            RawExpr::Sum(items) => {
                let mut out = Expr::zero();
                for it in items {
                    out = out.add(&it.evaluate()?);
                }
                out
            }
            RawExpr::Prod(items) => {
                let mut out = Expr::int(1);
                for it in items {
                    out = out.mul(&it.evaluate()?);
                }
                out
            }
            RawExpr::Pow(b, e) => b.evaluate()?.pow(*e),
            RawExpr::D(axis, inner) => inner.evaluate()?.differentiate(*axis),
            RawExpr::Lap(k, inner) => inner.evaluate()?.apply_op(&SpatialOp::laplacian(*k))?,
        })
    }
}

/// Convenience constructors for spatial-component atoms.
pub fn comp(i: u8) -> Component {
    Component::from_index(i).expect("component index")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::params::qr;

    fn a(i: u8) -> Atom {
        Atom::field("A", Mode::Bare, comp(i))
    }

    fn theta() -> Atom {
        Atom::field("theta", Mode::Bare, Component::Scalar)
    }

    #[test]
    fn cancellation_gives_zero() {
        let e = Expr::atom(a(2)).differentiate(Axis::Space(1));
        assert!(e.sub(&e).is_zero());
    }

    #[test]
    fn square_expansion() {
        // m²(A0 + ∂0θ)(A0 + ∂0θ)
        let s = Expr::atom(a(0)).add(&Expr::atom(theta()).differentiate(Axis::Time));
        let e = s.mul(&s).scale_params(&Params::symbol("m", 2));
        let dth = Expr::atom(theta()).differentiate(Axis::Time);
        let expected = Expr::atom(a(0))
            .mul(&Expr::atom(a(0)))
            .add(&Expr::atom(a(0)).mul(&dth).scale(&q(2)))
            .add(&dth.mul(&dth))
            .scale_params(&Params::symbol("m", 2));
        assert_eq!(e, expected);
        assert_eq!(e.len(), 3);
    }

    #[test]
    fn inverse_laplacian_of_laplacian() {
        let lap = Expr::atom(theta()).apply_op(&SpatialOp::laplacian(1)).unwrap();
        let back = lap.apply_op(&SpatialOp::laplacian(-1)).unwrap();
        assert_eq!(back, Expr::atom(theta()));
    }

    #[test]
    fn sum_of_second_partials_is_laplacian() {
        let mut e = Expr::zero();
        for i in 1..=3 {
            e = e.add(
                &Expr::atom(a(2))
                    .differentiate(Axis::Space(i))
                    .differentiate(Axis::Space(i)),
            );
        }
        let expected = Expr::atom(a(2)).apply_op(&SpatialOp::laplacian(1)).unwrap();
        assert_eq!(e, expected);
        assert_eq!(e.len(), 1);
    }

    #[test]
    fn functional_derivative_of_gradient_energy() {
        // δ/δφ ½(∂iφ)(∂iφ) = -∇²φ
        let phi = Atom::field("phi", Mode::Bare, Component::Scalar);
        let mut dens = Expr::zero();
        for i in 1..=3 {
            let d = Expr::atom(phi.clone()).differentiate(Axis::Space(i));
            dens = dens.add(&d.mul(&d).scale(&qr(1, 2)));
        }
        let got = dens.functional_derivative(&phi).unwrap();
        let expected = Expr::atom(phi)
            .apply_op(&SpatialOp::laplacian(1))
            .unwrap()
            .neg();
        assert_eq!(got, expected);
    }

    #[test]
    fn constant_under_inverse_laplacian_fails() {
        let err = Expr::int(1).apply_op(&SpatialOp::laplacian(-1));
        assert!(matches!(err, Err(SymError::NonInvertibleMode(_))));
    }

    #[test]
    fn substitution_carries_derivatives() {
        let e = Expr::atom(theta()).differentiate(Axis::Space(1));
        let out = e
            .substitute(|b| (*b == theta()).then(|| Expr::atom(a(0)).scale(&q(3))))
            .unwrap();
        assert_eq!(out, Expr::atom(a(0)).differentiate(Axis::Space(1)).scale(&q(3)));
    }
}
