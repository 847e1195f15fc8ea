//! Poisson brackets of local phase-space expressions, weak equality on a
//! constraint surface, and bracket tables.
//!
//! A bracket `{F(x), G(y)}` of two local expressions is returned as a kernel
//! `K(∂ₓ) δ³(x − y)`. For expressions linear in the canonical atoms this is
//! `Σ_q K^F_q ∘ (K^G_p)† − K^F_p ∘ (K^G_q)†`, where `K^F_a` is the gradient
//! kernel of `F` with respect to the atom `a`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::One;

use crate::symbolic::{
    Atom, AtomKind, Expr, Kernel, KernelTerm, Monomial, Params, SpatialOp, SymError, Q,
};

fn canonical_bases(e: &Expr) -> BTreeSet<Atom> {
    e.base_atoms()
        .into_iter()
        .filter(|a| matches!(a.kind, AtomKind::Field | AtomKind::Momentum))
        .collect()
}

/// Gradient kernel `δF(x)/δa(z) = K(∂ₓ) δ³(x − z)`.
pub fn gradient(f: &Expr, base: &Atom) -> Result<Kernel, SymError> {
    let mut k = Kernel::zero();
    for x in f.atoms() {
        if x.base() != *base {
            continue;
        }
        if x.deriv.time != 0 || x.deriv.fifth != 0 {
            return Err(SymError::Unsupported(format!("time derivative `{x}` in a phase-space expression")));
        }
        k = k.add(&Kernel::with_coeff(&f.partial(&x), x.deriv.space));
    }
    Ok(k)
}

/// `{F(x), G(y)}` as a kernel acting on `δ³(x − y)`.
pub fn bracket(f: &Expr, g: &Expr) -> Result<Kernel, SymError> {
    let mut fields = BTreeSet::new();
    for a in canonical_bases(f).into_iter().chain(canonical_bases(g)) {
        fields.insert(a.conjugate_field());
    }
    let mut out = Kernel::zero();
    for q in &fields {
        let p = q.conjugate_momentum();
        let fq = gradient(f, q)?;
        let fp = gradient(f, &p)?;
        let gq = gradient(g, q)?;
        let gp = gradient(g, &p)?;
        if !fq.is_zero() && !gp.is_zero() {
            out = out.add(&fq.compose(&gp.adjoint()?)?);
        }
        if !fp.is_zero() && !gq.is_zero() {
            out = out.sub(&fp.compose(&gq.adjoint()?)?);
        }
    }
    Ok(out)
}

fn variation(f: &Expr, base: &Atom, by: &Expr) -> Result<Expr, SymError> {
    let mut out = Expr::zero();
    for x in f.atoms() {
        if x.base() == *base {
            out = out.add(&f.partial(&x).mul(&by.apply_deriv(&x.deriv)?));
        }
    }
    Ok(out)
}

/// `{F(x), ∫h}`: the change of a local expression generated by a functional.
pub fn evolve(f: &Expr, h: &Expr) -> Result<Expr, SymError> {
    let mut out = Expr::zero();
    for a in canonical_bases(f) {
        let (q, p) = (a.conjugate_field(), a.conjugate_momentum());
        let rate = if a.kind == AtomKind::Field {
            h.functional_derivative(&p)?
        } else {
            h.functional_derivative(&q)?.neg()
        };
        out = out.add(&variation(f, &a, &rate)?);
    }
    Ok(out)
}

/// The constraint surface, kept as a list of solved atoms.
///
/// Each inserted constraint is reduced by the earlier ones and then solved
/// for an atom that occurs in it only undifferentiated and linearly with a
/// unit coefficient; reducing an expression substitutes these solutions in
/// insertion order.
#[derive(Debug, Clone, Default)]
pub struct Surface {
    pivots: Vec<(Atom, Expr)>,
    /// Constraints without a solvable atom, such as `∂ᵢΠⁱ` or `∂ᵢΠⁱ + θ²`;
    /// they are removed from an expression by exact operator division.
    opaque: Vec<Expr>,
}

impl Surface {
    pub fn new() -> Self {
        Surface::default()
    }

    pub fn len(&self) -> usize {
        self.pivots.len() + self.opaque.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn solved_atoms(&self) -> impl Iterator<Item = &Atom> {
        self.pivots.iter().map(|(a, _)| a)
    }

    pub fn reduce(&self, e: &Expr) -> Result<Expr, SymError> {
        let mut out = e.clone();
        for (a, rep) in &self.pivots {
            out = out.substitute(|b| (b == a).then(|| rep.clone()))?;
        }
        for c in &self.opaque {
            if let Some(k) = operator_quotient(&out, c)? {
                out = out.sub(&k.apply(c)?);
            }
        }
        Ok(out)
    }

    pub fn is_weakly_zero(&self, e: &Expr) -> Result<bool, SymError> {
        Ok(self.reduce(e)?.is_zero())
    }

    /// Adds a constraint; returns `false` if it already vanishes on the
    /// surface.
    pub fn insert(&mut self, c: &Expr) -> Result<bool, SymError> {
        let r = self.reduce(c)?;
        if r.is_zero() {
            return Ok(false);
        }
        let Some((pivot, coeff)) = choose_pivot(&r) else {
            self.opaque.push(r);
            return Ok(true);
        };
        let (m, q) = coeff.terms().next().expect("single-term coefficient");
        let inv_q = Q::one() / q;
        let inv_p: Params = m.params.inv();
        let rest = r.sub(&Expr::atom(pivot.clone()).mul(&coeff));
        let rep = rest.neg().scale(&inv_q).scale_params(&inv_p);
        // keep earlier solutions free of the new pivot
        for (_, earlier) in &mut self.pivots {
            *earlier = earlier.substitute(|b| (*b == pivot).then(|| rep.clone()))?;
        }
        for earlier in &mut self.opaque {
            *earlier = earlier.substitute(|b| (*b == pivot).then(|| rep.clone()))?;
        }
        self.pivots.push((pivot, rep));
        Ok(true)
    }
}

/// `K` with `e = K c + (terms free of c's atoms)`, found by dividing a
/// gradient of `e` by a single-term gradient of `c`.
fn operator_quotient(e: &Expr, c: &Expr) -> Result<Option<Kernel>, SymError> {
    for a in canonical_bases(c) {
        let g = gradient(c, &a)?;
        let mut gt = g.terms();
        let (Some((den, dc)), None) = (gt.next(), gt.next()) else {
            continue;
        };
        if !den.coeff.atoms.is_empty() {
            continue;
        }
        let num = gradient(e, &a)?;
        if num.is_zero() {
            return Ok(None);
        }
        let mut k = Kernel::zero();
        let mut exact = true;
        for (t, tc) in num.terms() {
            let mut d = [0u8; 3];
            for i in 0..3 {
                match t.op.d[i].checked_sub(den.op.d[i]) {
                    Some(x) => d[i] = x,
                    None => exact = false,
                }
            }
            if !exact || !t.coeff.atoms.is_empty() {
                exact = false;
                break;
            }
            let op = SpatialOp {
                d,
                lap: t.op.lap - den.op.lap,
            };
            k.add_term(
                KernelTerm {
                    op,
                    coeff: Monomial::new(vec![], t.coeff.params.mul(&den.coeff.params.inv())),
                },
                tc / dc,
            );
        }
        if exact {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

fn choose_pivot(r: &Expr) -> Option<(Atom, Expr)> {
    let atoms = r.atoms();
    let mut best: Option<(bool, Atom, Expr)> = None;
    for a in atoms.iter().filter(|a| a.is_base()) {
        if !matches!(a.kind, AtomKind::Field | AtomKind::Momentum) {
            continue;
        }
        if atoms.iter().any(|b| b.base() == *a && !b.is_base()) {
            continue;
        }
        let coeff = r.partial(a);
        if coeff.len() != 1 || !coeff.is_scalar() {
            continue;
        }
        let plain = coeff.terms().all(|(m, _)| m.params.is_one());
        let better = match &best {
            None => true,
            Some((bp, ba, _)) => (plain && !bp) || (plain == *bp && a > ba),
        };
        if better {
            best = Some((plain, a.clone(), coeff));
        }
    }
    best.map(|(_, a, c)| (a, c))
}

/// Non-vanishing brackets between ordered pairs of atoms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BracketTable {
    entries: BTreeMap<(Atom, Atom), Kernel>,
}

impl BracketTable {
    pub fn new() -> Self {
        BracketTable::default()
    }

    pub fn insert(&mut self, a: Atom, b: Atom, k: Kernel) {
        if k.is_zero() {
            self.entries.remove(&(a, b));
        } else {
            self.entries.insert((a, b), k);
        }
    }

    pub fn get(&self, a: &Atom, b: &Atom) -> Kernel {
        self.entries
            .get(&(a.clone(), b.clone()))
            .cloned()
            .unwrap_or_else(Kernel::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Atom, &Atom, &Kernel)> {
        self.entries.iter().map(|((a, b), k)| (a, b, k))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Fills the table from a bracket function over all ordered pairs.
    pub fn build<F>(atoms: &[Atom], mut f: F) -> Result<Self, SymError>
    where
        F: FnMut(&Atom, &Atom) -> Result<Kernel, SymError>,
    {
        let mut t = BracketTable::new();
        for a in atoms {
            for b in atoms {
                t.insert(a.clone(), b.clone(), f(a, b)?);
            }
        }
        Ok(t)
    }

    /// Pairs whose entries are not the negative adjoint of their mirror.
    pub fn antisymmetry_defects(&self) -> Result<Vec<(Atom, Atom)>, SymError> {
        let mut bad = Vec::new();
        for ((a, b), k) in &self.entries {
            if !k.add(&self.get(b, a).adjoint()?).is_zero() {
                bad.push((a.clone(), b.clone()));
            }
        }
        Ok(bad)
    }

    /// Restriction to pairs of the given atoms.
    pub fn restrict(&self, atoms: &[Atom]) -> BracketTable {
        let keep: BTreeSet<&Atom> = atoms.iter().collect();
        BracketTable {
            entries: self
                .entries
                .iter()
                .filter(|((a, b), _)| keep.contains(a) && keep.contains(b))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }
}

impl fmt::Display for BracketTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for ((a, b), k) in &self.entries {
            writeln!(f, "{{{a}, {b}}} = {k}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Mismatch {
    pub left_atom: String,
    pub right_atom: String,
    pub left: String,
    pub right: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct BracketDiff {
    pub matches: usize,
    pub mismatches: Vec<Mismatch>,
}

impl BracketDiff {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Entry-by-entry comparison of two tables over the union of their keys.
pub fn compare_brackets(left: &BracketTable, right: &BracketTable) -> BracketDiff {
    let keys: BTreeSet<&(Atom, Atom)> = left.entries.keys().chain(right.entries.keys()).collect();
    let mut diff = BracketDiff::default();
    for (a, b) in keys {
        let (l, r) = (left.get(a, b), right.get(a, b));
        if l == r {
            diff.matches += 1;
        } else {
            diff.mismatches.push(Mismatch {
                left_atom: a.to_string(),
                right_atom: b.to_string(),
                left: l.to_string(),
                right: r.to_string(),
            });
        }
    }
    diff
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::{q, Axis, Component, Mode, SpatialOp};

    fn a(i: u8) -> Atom {
        Atom::field("A", Mode::Bare, Component::Space(i))
    }

    fn pi(i: u8) -> Atom {
        Atom::momentum("A", Mode::Bare, Component::Space(i))
    }

    #[test]
    fn fundamental_brackets() {
        assert_eq!(bracket(&Expr::atom(a(1)), &Expr::atom(pi(1))).unwrap(), Kernel::one());
        assert_eq!(bracket(&Expr::atom(pi(1)), &Expr::atom(a(1))).unwrap(), Kernel::int(-1));
        assert!(bracket(&Expr::atom(a(1)), &Expr::atom(pi(2))).unwrap().is_zero());
    }

    #[test]
    fn gauss_law_generates_gradient() {
        let gauss = Expr::sum(
            (1..=3).map(|i| Expr::atom(pi(i)).differentiate(Axis::Space(i))).collect::<Vec<_>>().iter(),
        );
        // {A_1(x), ∂_jΠ^j(y)} = −∂₁ δ acting on x after moving the derivative
        assert_eq!(bracket(&Expr::atom(a(1)), &gauss).unwrap(), Kernel::partial(1).neg());
        let div = Expr::sum(
            (1..=3).map(|i| Expr::atom(a(i)).differentiate(Axis::Space(i))).collect::<Vec<_>>().iter(),
        );
        assert_eq!(bracket(&div, &gauss).unwrap(), Kernel::laplacian(1).neg());
    }

    #[test]
    fn evolution_of_a_field() {
        let h = Expr::atom(pi(1)).mul(&Expr::atom(pi(1)));
        let rate = evolve(&Expr::atom(a(1)), &h).unwrap();
        assert_eq!(rate, Expr::atom(pi(1)).scale(&q(2)));
        let lap = Expr::atom(a(1)).apply_op(&SpatialOp::laplacian(1)).unwrap();
        assert_eq!(evolve(&lap, &h).unwrap(), Expr::atom(pi(1)).apply_op(&SpatialOp::laplacian(1)).unwrap().scale(&q(2)));
    }

    #[test]
    fn surface_reduction() {
        let p = Atom::momentum("theta", Mode::Bare, Component::Scalar);
        let gauss = Expr::sum(
            (1..=3)
                .map(|i| Expr::atom(pi(i)).differentiate(Axis::Space(i)))
                .chain([Expr::atom(p.clone())])
                .collect::<Vec<_>>()
                .iter(),
        );
        let mut s = Surface::new();
        assert!(s.insert(&gauss).unwrap());
        assert!(!s.insert(&gauss.scale(&q(3))).unwrap());
        assert_eq!(s.solved_atoms().next(), Some(&p));
        assert!(s.is_weakly_zero(&gauss.differentiate(Axis::Space(2))).unwrap());
        assert!(!s.is_weakly_zero(&Expr::atom(p)).unwrap());
    }

    #[test]
    fn diff_reports_mismatch() {
        let mut t = BracketTable::new();
        t.insert(a(1), pi(1), Kernel::one());
        let mut u = t.clone();
        assert!(compare_brackets(&t, &u).is_clean());
        u.insert(a(1), pi(1), Kernel::int(2));
        let d = compare_brackets(&t, &u);
        assert_eq!(d.mismatches.len(), 1);
        assert_eq!(d.matches, 0);
    }
}
