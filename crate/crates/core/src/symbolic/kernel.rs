//! Operator kernels `K(∂ˣ) δ³(x − y)`.
//!
//! A kernel is a finite sum `Σ cₜ(x) Oₜ` where `Oₜ` is a canonical
//! [`SpatialOp`] and `cₜ` a monomial (rational × parameters × optional field
//! atoms). Coefficients stand to the left of the operator. Composition of
//! kernels with `δ³` collapses to operator composition, so a field-independent
//! kernel algebra is the commutative ring `Q(params)[∂, ∇⁻²]`.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use super::expr::{Axis, Expr, Monomial};
use super::op::SpatialOp;
use super::params::{fmt_q, q, Params, Q};
use super::SymError;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KernelTerm {
    pub op: SpatialOp,
    pub coeff: Monomial,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Kernel {
    terms: BTreeMap<KernelTerm, Q>,
}

fn binom(n: u32, k: u32) -> i64 {
    let mut r: i64 = 1;
    for i in 0..k {
        r = r * (n - i) as i64 / (i + 1) as i64;
    }
    r
}

impl Kernel {
    pub fn zero() -> Self {
        Kernel::default()
    }

    pub fn one() -> Self {
        Self::from_op(SpatialOp::IDENTITY)
    }

    pub fn int(n: i64) -> Self {
        Self::scalar(q(n), Params::one())
    }

    pub fn scalar(c: Q, p: Params) -> Self {
        let mut k = Kernel::zero();
        k.add_term(
            KernelTerm {
                op: SpatialOp::IDENTITY,
                coeff: Monomial::new(vec![], p),
            },
            c,
        );
        k
    }

    pub fn from_op(op: SpatialOp) -> Self {
        let mut k = Kernel::zero();
        k.add_term(
            KernelTerm {
                op,
                coeff: Monomial::one(),
            },
            Q::one(),
        );
        k
    }

    pub fn partial(axis: u8) -> Self {
        Self::from_op(SpatialOp::partial(axis))
    }

    pub fn laplacian(power: i32) -> Self {
        Self::from_op(SpatialOp::laplacian(power))
    }

    /// Kernel `c(x) O` from an expression coefficient and a canonical op.
    pub fn with_coeff(coeff: &Expr, op: SpatialOp) -> Self {
        let mut k = Kernel::zero();
        for (m, c) in coeff.terms() {
            k.add_term(
                KernelTerm {
                    op,
                    coeff: m.clone(),
                },
                c.clone(),
            );
        }
        k
    }

    pub fn add_term(&mut self, t: KernelTerm, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(t) {
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

    pub fn terms(&self) -> impl Iterator<Item = (&KernelTerm, &Q)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_field_independent(&self) -> bool {
        self.terms.keys().all(|t| t.coeff.atoms.is_empty())
    }

    /// True if the kernel is a pure (rational × parameter) multiple of the
    /// identity, without any derivative.
    pub fn is_constant(&self) -> bool {
        self.terms
            .keys()
            .all(|t| t.coeff.atoms.is_empty() && t.op.is_identity())
    }

    /// Units of the ring: a single term `c · params · (∇²)^k`.
    pub fn is_unit(&self) -> bool {
        self.terms.len() == 1 && {
            let t = self.terms.keys().next().unwrap();
            t.coeff.atoms.is_empty() && t.op.d == [0, 0, 0]
        }
    }

    pub fn unit_inverse(&self) -> Option<Kernel> {
        if !self.is_unit() {
            return None;
        }
        let (t, c) = self.terms.iter().next().unwrap();
        let mut k = Kernel::zero();
        k.add_term(
            KernelTerm {
                op: SpatialOp::laplacian(-t.op.lap),
                coeff: Monomial::new(vec![], t.coeff.params.inv()),
            },
            c.recip(),
        );
        Some(k)
    }

    pub fn add(&self, other: &Kernel) -> Kernel {
        let mut out = self.clone();
        for (t, c) in &other.terms {
            out.add_term(t.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Kernel) -> Kernel {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Kernel {
        self.scale(&-Q::one())
    }

    pub fn scale(&self, c: &Q) -> Kernel {
        let mut out = Kernel::zero();
        for (t, v) in &self.terms {
            out.add_term(t.clone(), v * c);
        }
        out
    }

    /// Operator composition `self ∘ other`.
    pub fn compose(&self, other: &Kernel) -> Result<Kernel, SymError> {
        let mut out = Kernel::zero();
        for (t1, c1) in &self.terms {
            for (t2, c2) in &other.terms {
                // c1 O1 ∘ c2 O2 = c1 (O1 ∘ c2) O2
                let moved = if t2.coeff.atoms.is_empty() {
                    Kernel::with_coeff(&Expr::term(c2.clone(), t2.coeff.clone()), t1.op)
                } else {
                    op_after_coefficient(&t1.op, &Expr::term(c2.clone(), t2.coeff.clone()))?
                };
                for (tm, cm) in &moved.terms {
                    for (k, op) in tm.op.mul(&t2.op) {
                        out.add_term(
                            KernelTerm {
                                op,
                                coeff: t1.coeff.mul(&tm.coeff),
                            },
                            c1 * cm * q(k),
                        );
                    }
                }
            }
        }
        Ok(out)
    }

    /// Composition for field-independent kernels, which never fails.
    pub fn mul(&self, other: &Kernel) -> Kernel {
        self.compose(other)
            .expect("composition of field-independent kernels")
    }

    /// Formal adjoint: `(c O)† = O† ∘ c`, with `∂† = −∂`.
    pub fn adjoint(&self) -> Result<Kernel, SymError> {
        let mut out = Kernel::zero();
        for (t, c) in &self.terms {
            let sign = q(t.op.adjoint_sign());
            if t.coeff.atoms.is_empty() {
                out.add_term(t.clone(), c * &sign);
            } else {
                let k = op_after_coefficient(&t.op, &Expr::term(c.clone(), t.coeff.clone()))?;
                out = out.add(&k.scale(&sign));
            }
        }
        Ok(out)
    }

    /// Applies the kernel to a local expression: `Σ c(x) O(∂) e(x)`.
    pub fn apply(&self, e: &Expr) -> Result<Expr, SymError> {
        let mut out = Expr::zero();
        for (t, c) in &self.terms {
            let applied = e.apply_op(&t.op)?;
            out = out.add(&applied.mul(&Expr::term(c.clone(), t.coeff.clone())));
        }
        Ok(out)
    }

    pub fn scale_params(&self, p: &Params) -> Kernel {
        let mut out = Kernel::zero();
        for (t, c) in &self.terms {
            out.add_term(
                KernelTerm {
                    op: t.op,
                    coeff: Monomial::new(t.coeff.atoms.clone(), t.coeff.params.mul(p)),
                },
                c.clone(),
            );
        }
        out
    }

    pub fn map_params<F: Fn(&Params) -> Params>(&self, f: F) -> Kernel {
        let mut out = Kernel::zero();
        for (t, c) in &self.terms {
            out.add_term(
                KernelTerm {
                    op: t.op,
                    coeff: Monomial::new(t.coeff.atoms.clone(), f(&t.coeff.params)),
                },
                c.clone(),
            );
        }
        out
    }

    /// The kernel written as a DSL-like string, e.g. `-n*R^-1*d[1]`.
    pub fn render(&self) -> String {
        self.to_string()
    }
}

/// `O ∘ c` for an operator `O` with non-negative Laplacian power and a
/// field-dependent coefficient `c`: `Σ_β C(α,β) (∂^β c) ∂^{α−β}`.
pub fn op_after_coefficient(op: &SpatialOp, c: &Expr) -> Result<Kernel, SymError> {
    if c.is_scalar() {
        return Ok(Kernel::with_coeff(c, *op));
    }
    let expansion = op
        .unreduced()
        .ok_or_else(|| SymError::Nonlinear(format!("∇⁻² composed with field coefficient {c}")))?;
    let mut out = Kernel::zero();
    for (mult, alpha) in expansion {
        for b0 in 0..=alpha[0] {
            for b1 in 0..=alpha[1] {
                for b2 in 0..=alpha[2] {
                    let weight = mult * binom(alpha[0], b0) * binom(alpha[1], b1) * binom(alpha[2], b2);
                    let mut dc = c.clone();
                    for (axis, n) in [(1u8, b0), (2, b1), (3, b2)] {
                        for _ in 0..n {
                            dc = dc.differentiate(Axis::Space(axis));
                        }
                    }
                    if dc.is_zero() {
                        continue;
                    }
                    for (k, rest) in
                        SpatialOp::from_exponents(alpha[0] - b0, alpha[1] - b1, alpha[2] - b2, 0)
                    {
                        out = out.add(&Kernel::with_coeff(&dc, rest).scale(&q(weight * k)));
                    }
                }
            }
        }
    }
    Ok(out)
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (t, c)) in self.terms.iter().enumerate() {
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
            let bare = t.coeff.atoms.is_empty() && t.coeff.params.is_one() && t.op.is_identity();
            if !mag.is_one() || bare {
                parts.push(fmt_q(&mag));
            }
            if !t.coeff.params.is_one() {
                parts.push(t.coeff.params.to_string());
            }
            for a in &t.coeff.atoms {
                parts.push(a.to_string());
            }
            if !t.op.is_identity() {
                parts.push(t.op.to_string());
            }
            write!(f, "{}", parts.join(" "))?;
        }
        Ok(())
    }
}
