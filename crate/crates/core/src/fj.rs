//! Faddeev-Jackiw symplectic reduction.
//!
//! A first-order density `a_j(ξ) ξ̇^j − V(ξ)` is turned into the symplectic
//! kernel matrix `f_ij = D_jiᵀ† − D_ij` with `D_jk = δa_j/δξ^k`. Left null
//! modes of `f` contracted with `δV/δξ` give constraints, which are embedded
//! with fresh multipliers until `f` inverts; the inverse holds the brackets.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::brackets::{gradient, BracketTable, Surface};
use crate::dirac::{DiracAnalysis, Stage};
use crate::symbolic::{Atom, AtomKind, Component, Expr, Kernel, KernelMatrix, Mode, SymError};

pub const DEFAULT_LEVEL_CAP: usize = 8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FjError {
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error("symplectic matrix at level {level} is singular (rank {rank} of {size}) and no gauge condition applies; residual null modes: {}", render_modes(variables, null_modes).join("; "))]
    GaugeNeeded {
        level: usize,
        rank: usize,
        size: usize,
        variables: Vec<Atom>,
        null_modes: Vec<Vec<Kernel>>,
    },
    #[error("no invertible symplectic matrix after {0} levels")]
    CapExceeded(usize),
}

/// Where an embedded constraint came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Origin {
    NullMode,
    Gauge,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FjConstraint {
    pub expr: Expr,
    pub origin: Origin,
    pub multiplier: Atom,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymplecticState {
    pub level: usize,
    pub variables: Vec<Atom>,
    pub one_forms: Vec<Expr>,
    pub potential: Expr,
    pub constraints: Vec<FjConstraint>,
}

fn component_class(c: Component) -> u8 {
    match c {
        Component::Space(_) => 0,
        Component::Fifth => 1,
        Component::Scalar => 2,
        Component::Time => 3,
    }
}

/// Level-0 state read off `L = Π q̇ − H_c` on the primary surface.
///
/// Fields with an independent momentum come first as `(q…, Π…)` groups
/// (spatial vector components together); fields whose momentum is fixed
/// by a primary constraint follow, with that solution as one-form.
pub fn first_order_form(analysis: &DiracAnalysis) -> Result<SymplecticState, FjError> {
    let primaries: Vec<Expr> = analysis
        .constraints
        .of_stage(Stage::Primary)
        .map(|c| c.expr.clone())
        .collect();
    let fields: Vec<Atom> = analysis.momenta.iter().map(|m| m.field.clone()).collect();
    first_order_from(&fields, &primaries, &analysis.h_canonical)
}

pub fn first_order_from(fields: &[Atom], primaries: &[Expr], h_c: &Expr) -> Result<SymplecticState, FjError> {
    let mut surface = Surface::new();
    for p in primaries {
        surface.insert(p)?;
    }
    let mut free = Vec::new();
    let mut fixed = Vec::new();
    for q in fields {
        let p = q.conjugate_momentum();
        let solved = surface.reduce(&Expr::atom(p.clone()))?;
        if solved == Expr::atom(p) {
            free.push(q.clone());
        } else {
            fixed.push((q.clone(), solved));
        }
    }
    free.sort_by_key(|q| (component_class(q.comp), q.name.clone(), q.comp));
    let mut variables = Vec::new();
    let mut one_forms = Vec::new();
    let mut i = 0;
    while i < free.len() {
        let key = (component_class(free[i].comp), free[i].name.clone());
        let mut j = i;
        while j < free.len() && (component_class(free[j].comp), free[j].name.clone()) == key {
            j += 1;
        }
        for q in &free[i..j] {
            variables.push(q.clone());
            one_forms.push(Expr::atom(q.conjugate_momentum()));
        }
        for q in &free[i..j] {
            variables.push(q.conjugate_momentum());
            one_forms.push(Expr::zero());
        }
        i = j;
    }
    fixed.sort_by_key(|(q, _)| (component_class(q.comp), q.name.clone(), q.comp));
    for (q, a) in fixed {
        variables.push(q);
        one_forms.push(a);
    }
    Ok(SymplecticState {
        level: 0,
        variables,
        one_forms,
        potential: surface.reduce(h_c)?,
        constraints: Vec::new(),
    })
}

impl SymplecticState {
    fn one_form_gradients(&self) -> Result<Vec<Vec<Kernel>>, SymError> {
        self.one_forms
            .iter()
            .map(|a| self.variables.iter().map(|x| gradient(a, x)).collect())
            .collect()
    }

    /// `f_ij = D_ji† − D_ij`: the kernel of `δ/δξ^i` applied to the
    /// action's kinetic part, acting on `ξ̇^j`.
    pub fn symplectic_matrix(&self) -> Result<KernelMatrix, SymError> {
        let d = self.one_form_gradients()?;
        let n = self.variables.len();
        let mut f = KernelMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                f.set(i, j, d[j][i].adjoint()?.sub(&d[i][j]));
            }
        }
        Ok(f)
    }

    /// The same matrix with both derivatives read as acting on the first
    /// point, `D_ji − D_ij`; this is the form usually printed by hand.
    pub fn literal_matrix(&self) -> Result<KernelMatrix, SymError> {
        let d = self.one_form_gradients()?;
        let n = self.variables.len();
        let mut f = KernelMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                f.set(i, j, d[j][i].sub(&d[i][j]));
            }
        }
        Ok(f)
    }

    /// `Z_i = δV/δξ^i`.
    pub fn potential_gradient(&self) -> Result<Vec<Expr>, SymError> {
        self.variables
            .iter()
            .map(|x| self.potential.functional_derivative(x))
            .collect()
    }

    /// Rows `δΩ/δξ^j` for the given expressions.
    pub fn gradient_rows(&self, exprs: &[Expr]) -> Result<KernelMatrix, SymError> {
        Ok(KernelMatrix::from_rows(
            exprs
                .iter()
                .map(|e| self.variables.iter().map(|x| gradient(e, x)).collect())
                .collect::<Result<_, _>>()?,
        ))
    }

    pub fn surface(&self) -> Result<Surface, SymError> {
        let mut s = Surface::new();
        for c in &self.constraints {
            s.insert(&c.expr)?;
        }
        Ok(s)
    }

    pub fn index_of(&self, a: &Atom) -> Option<usize> {
        self.variables.iter().position(|x| x == a)
    }

    /// Canonical field and momentum atoms among the variables.
    pub fn physical_variables(&self) -> Vec<Atom> {
        self.variables
            .iter()
            .filter(|a| matches!(a.kind, AtomKind::Field | AtomKind::Momentum))
            .cloned()
            .collect()
    }

    fn mode(&self) -> Mode {
        self.variables
            .first()
            .map(|a| a.mode.clone())
            .unwrap_or(Mode::Bare)
    }

    fn fresh_multiplier(&self, stem: &str) -> Atom {
        let taken: BTreeSet<&str> = self
            .variables
            .iter()
            .filter(|a| a.kind == AtomKind::Multiplier)
            .map(|a| a.name.as_str())
            .collect();
        let name = std::iter::once(stem.to_string())
            .chain((2..).map(|k| format!("{stem}{k}")))
            .find(|n| !taken.contains(n.as_str()))
            .expect("unbounded name supply");
        Atom::multiplier(&name, self.mode())
    }
}

/// Generators of the left null space, `Σᵢ vᵢ† ∘ f_ij = 0`; each entry is
/// an operator acting on an arbitrary function `ω`.
pub fn null_modes(f: &KernelMatrix) -> Result<Vec<Vec<Kernel>>, SymError> {
    f.left_null_space()
}

/// `∫ v_i(ω) Z_i` with `ω` stripped: `Σ vᵢ†(Zᵢ)`.
pub fn contract(mode: &[Kernel], z: &[Expr]) -> Result<Expr, SymError> {
    let mut out = Expr::zero();
    for (v, zi) in mode.iter().zip(z) {
        if !v.is_zero() {
            out = out.add(&v.adjoint()?.apply(zi)?);
        }
    }
    Ok(out)
}

/// `Ω = v·δV/δξ` per mode, reduced on the current surface; vanishing ones
/// are dropped and the rest are sign-normalized.
pub fn fj_constraint_generation(state: &SymplecticState, modes: &[Vec<Kernel>]) -> Result<Vec<Expr>, SymError> {
    let z = state.potential_gradient()?;
    let mut surface = state.surface()?;
    let mut out = Vec::new();
    for m in modes {
        let c = surface.reduce(&contract(m, &z)?)?;
        if !c.is_zero() && surface.insert(&c)? {
            out.push(c.with_positive_lead());
        }
    }
    Ok(out)
}

/// Outcome of contracting the modes of `(f; δΩ/δξ)` with `(δV/δξ; 0)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractionTest {
    pub extended: KernelMatrix,
    pub modes: Vec<Vec<Kernel>>,
    pub contractions: Vec<Expr>,
    pub identity: bool,
}

pub fn no_new_constraints_test(state: &SymplecticState, new: &[Expr]) -> Result<ContractionTest, SymError> {
    let extended = state.symplectic_matrix()?.vstack(&state.gradient_rows(new)?);
    let modes = extended.left_null_space()?;
    let mut z = state.potential_gradient()?;
    z.extend(new.iter().map(|_| Expr::zero()));
    let mut surface = state.surface()?;
    for c in new {
        surface.insert(c)?;
    }
    let mut contractions = Vec::new();
    let mut identity = true;
    for m in &modes {
        let c = surface.reduce(&contract(m, &z)?)?;
        identity &= c.is_zero();
        contractions.push(c);
    }
    Ok(ContractionTest {
        extended,
        modes,
        contractions,
        identity,
    })
}

/// Embeds `Ω` through `−Ω·μ̇` for a fresh multiplier `μ`. If `replaces`
/// names a variable that entered `V` only as a multiplier of `Ω`, it is
/// removed from `ξ` and set to zero in `V`; otherwise `V` is reduced on
/// `Ω = 0`.
pub fn augment_lagrangian(
    state: &SymplecticState,
    omega: &Expr,
    origin: Origin,
    replaces: Option<&Atom>,
) -> Result<SymplecticState, SymError> {
    let stem = match origin {
        Origin::NullMode => "rho",
        Origin::Gauge => "eta",
    };
    let multiplier = state.fresh_multiplier(stem);
    let mut next = state.clone();
    next.level += 1;
    match replaces.and_then(|a| state.index_of(a).map(|i| (a, i))) {
        Some((a, i)) => {
            next.variables.remove(i);
            next.one_forms.remove(i);
            next.potential = state.potential.substitute(|b| (b == a).then(Expr::zero))?;
        }
        None => {
            let mut s = Surface::new();
            s.insert(omega)?;
            next.potential = s.reduce(&state.potential)?;
        }
    }
    next.variables.push(multiplier.clone());
    next.one_forms.push(omega.neg());
    next.constraints.push(FjConstraint {
        expr: omega.clone(),
        origin,
        multiplier,
    });
    Ok(next)
}

/// The variable a mode points along when it is a bare Lagrange multiplier:
/// a single unit entry, zero one-form, and `V` affine in it.
fn multiplier_direction(state: &SymplecticState, mode: &[Kernel]) -> Option<Atom> {
    let mut nz = mode.iter().enumerate().filter(|(_, k)| !k.is_zero());
    let (i, k) = nz.next()?;
    if nz.next().is_some() || !k.is_constant() || !state.one_forms[i].is_zero() {
        return None;
    }
    let a = &state.variables[i];
    let dv = state.potential.functional_derivative(a).ok()?;
    (!dv.contains_base(a)).then(|| a.clone())
}

/// `{F(x), G(y)}` from the inverse symplectic matrix.
pub fn fj_bracket(state: &SymplecticState, inverse: &KernelMatrix, f: &Expr, g: &Expr) -> Result<Kernel, SymError> {
    let gf: Vec<Kernel> = state.variables.iter().map(|x| gradient(f, x)).collect::<Result<_, _>>()?;
    let gg: Vec<Kernel> = state.variables.iter().map(|x| gradient(g, x)).collect::<Result<_, _>>()?;
    let mut out = Kernel::zero();
    for (i, fi) in gf.iter().enumerate() {
        if fi.is_zero() {
            continue;
        }
        for (j, gj) in gg.iter().enumerate() {
            let m = inverse.get(i, j);
            if gj.is_zero() || m.is_zero() {
                continue;
            }
            out = out.add(&fi.compose(m)?.compose(&gj.adjoint()?)?);
        }
    }
    Ok(out)
}

/// Inverse of the symplectic matrix and the brackets among the canonical
/// variables it contains.
pub fn extract_fj_brackets(state: &SymplecticState) -> Result<(KernelMatrix, BracketTable), FjError> {
    let f = state.symplectic_matrix()?;
    let inverse = match f.invert() {
        Ok(inv) => inv,
        Err(SymError::Singular { rank, size }) => {
            return Err(FjError::GaugeNeeded {
                level: state.level,
                rank,
                size,
                variables: state.variables.clone(),
                null_modes: null_modes(&f)?,
            })
        }
        Err(e) => return Err(e.into()),
    };
    let mut table = BracketTable::new();
    for (i, a) in state.variables.iter().enumerate() {
        for (j, b) in state.variables.iter().enumerate() {
            if matches!(a.kind, AtomKind::Field | AtomKind::Momentum)
                && matches!(b.kind, AtomKind::Field | AtomKind::Momentum)
            {
                table.insert(a.clone(), b.clone(), inverse.get(i, j).clone());
            }
        }
    }
    Ok((inverse, table))
}

/// One pass of the algorithm, kept for reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Level {
    pub state: SymplecticState,
    pub matrix: KernelMatrix,
    pub rank: usize,
    pub null_modes: Vec<Vec<Kernel>>,
    pub new_constraints: Vec<Expr>,
    pub contraction: Option<ContractionTest>,
    pub gauge: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FjOutcome {
    pub levels: Vec<Level>,
    pub state: SymplecticState,
    pub inverse: KernelMatrix,
    pub brackets: BracketTable,
    /// Gauge conditions that mention atoms absent from the symplectic
    /// variables (such as a temporal component traded for a multiplier).
    pub skipped_gauge: Vec<Expr>,
}

impl FjOutcome {
    pub fn constraints(&self) -> Vec<Expr> {
        self.state.constraints.iter().map(|c| c.expr.clone()).collect()
    }
}

fn applicable(state: &SymplecticState, cond: &Expr) -> bool {
    let vars: BTreeSet<&Atom> = state.variables.iter().collect();
    cond.base_atoms().iter().all(|a| vars.contains(a))
}

/// Runs the full reduction from a level-0 state, embedding gauge
/// conditions (in order) whenever the remaining null modes produce no new
/// constraint.
pub fn faddeev_jackiw(initial: SymplecticState, gauge: &[Expr], cap: usize) -> Result<FjOutcome, FjError> {
    let mut state = initial;
    let mut levels = Vec::new();
    let mut pending: Vec<Expr> = gauge.to_vec();
    let mut skipped = Vec::new();
    for _ in 0..=cap {
        let f = state.symplectic_matrix()?;
        let rank = f.rank()?;
        if rank == state.variables.len() {
            let (inverse, brackets) = extract_fj_brackets(&state)?;
            levels.push(Level {
                state: state.clone(),
                matrix: f,
                rank,
                null_modes: Vec::new(),
                new_constraints: Vec::new(),
                contraction: None,
                gauge: Vec::new(),
            });
            return Ok(FjOutcome {
                levels,
                state,
                inverse,
                brackets,
                skipped_gauge: skipped,
            });
        }
        let modes = null_modes(&f)?;
        let mut found: Vec<(Expr, Option<Atom>)> = Vec::new();
        {
            let z = state.potential_gradient()?;
            let mut surface = state.surface()?;
            for m in &modes {
                let c = surface.reduce(&contract(m, &z)?)?;
                if !c.is_zero() && surface.insert(&c)? {
                    found.push((c.with_positive_lead(), multiplier_direction(&state, m)));
                }
            }
        }
        let mut record = Level {
            state: state.clone(),
            matrix: f,
            rank,
            null_modes: modes.clone(),
            new_constraints: found.iter().map(|(c, _)| c.clone()).collect(),
            contraction: None,
            gauge: Vec::new(),
        };
        if !found.is_empty() {
            let exprs: Vec<Expr> = found.iter().map(|(c, _)| c.clone()).collect();
            let test = no_new_constraints_test(&state, &exprs)?;
            let mut surface = state.surface()?;
            for c in &exprs {
                surface.insert(c)?;
            }
            for c in &test.contractions {
                if !c.is_zero() && surface.insert(c)? {
                    found.push((c.with_positive_lead(), None));
                }
            }
            record.contraction = Some(test);
            let mut next = state.clone();
            for (c, replaces) in &found {
                next = augment_lagrangian(&next, c, Origin::NullMode, replaces.as_ref())?;
            }
            next.level = state.level + 1;
            levels.push(record);
            state = next;
            continue;
        }
        let mut chosen = Vec::new();
        let surface = state.surface()?;
        pending.retain(|g| {
            if !applicable(&state, g) {
                skipped.push(g.clone());
                return false;
            }
            true
        });
        for g in pending.drain(..) {
            if !surface.is_weakly_zero(&g)? {
                chosen.push(g.with_positive_lead());
            }
        }
        if chosen.is_empty() {
            return Err(FjError::GaugeNeeded {
                level: state.level,
                rank,
                size: state.variables.len(),
                variables: state.variables.clone(),
                null_modes: modes,
            });
        }
        let mut next = state.clone();
        for g in &chosen {
            next = augment_lagrangian(&next, g, Origin::Gauge, None)?;
        }
        next.level = state.level + 1;
        record.gauge = chosen;
        levels.push(record);
        state = next;
    }
    Err(FjError::CapExceeded(cap))
}

/// `(0, 0, −∂1 ω, …)` style rendering of null modes.
pub fn render_modes(variables: &[Atom], modes: &[Vec<Kernel>]) -> Vec<String> {
    modes
        .iter()
        .map(|m| {
            let cells: Vec<String> = m
                .iter()
                .map(|k| {
                    if k.is_zero() {
                        "0".to_string()
                    } else if *k == Kernel::one() {
                        "ω".to_string()
                    } else {
                        format!("({k})ω")
                    }
                })
                .collect();
            let along: Vec<String> = variables.iter().map(|v| v.to_string()).collect();
            format!("({}) along ({})", cells.join(", "), along.join(", "))
        })
        .collect()
}

impl fmt::Display for SymplecticState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vars: Vec<String> = self.variables.iter().map(|v| v.to_string()).collect();
        let forms: Vec<String> = self.one_forms.iter().map(|a| a.to_string()).collect();
        writeln!(f, "level {}", self.level)?;
        writeln!(f, "  ξ = ({})", vars.join(", "))?;
        writeln!(f, "  a = ({})", forms.join(", "))?;
        writeln!(f, "  V = {}", self.potential)
    }
}
