//! Dirac's constraint algorithm on a 4D density, one sector at a time.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::brackets::{bracket, evolve, BracketTable, Surface};
use crate::symbolic::{
    Atom, AtomKind, Component, Expr, Kernel, KernelMatrix, Mode, SpatialOp, SymError,
};

pub const DEFAULT_ITERATION_CAP: usize = 10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiracError {
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error("velocity `{0}` cannot be eliminated")]
    Unsolvable(String),
    #[error("constraint algorithm did not close within {0} rounds")]
    CapExceeded(usize),
    #[error("invalid count: {0}")]
    BadCount(String),
    #[error("gauge generator needs first-class input; `{0}` is second class")]
    SecondClassInput(String),
    #[error("incomplete gauge `{name}`: constraint matrix has rank {rank} of {size}")]
    IncompleteGauge {
        name: String,
        rank: usize,
        size: usize,
        null_space: Vec<Vec<String>>,
    },
}

/// A block of the density sharing one mode label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sector {
    pub name: String,
    pub mode: Mode,
    pub density: Expr,
}

pub fn sector_name(mode: &Mode) -> &'static str {
    match mode {
        Mode::Bare => "main",
        Mode::Zero => "zero_mode",
        Mode::Kk(_) => "kk_mode",
    }
}

/// Splits a decoupled density by the mode of its atoms.
pub fn sectors(density: &Expr) -> Vec<Sector> {
    let mut by_mode: BTreeMap<Mode, Expr> = BTreeMap::new();
    for (m, c) in density.terms() {
        let mode = m.atoms.first().map(|a| a.mode.clone()).unwrap_or(Mode::Bare);
        by_mode
            .entry(mode)
            .or_default()
            .add_term(m.clone(), c.clone());
    }
    by_mode
        .into_iter()
        .map(|(mode, density)| Sector {
            name: sector_name(&mode).to_string(),
            mode,
            density,
        })
        .collect()
}

/// Undifferentiated field atoms of a density, in canonical order.
pub fn configuration_fields(density: &Expr) -> Vec<Atom> {
    density
        .base_atoms()
        .into_iter()
        .filter(|a| a.kind == AtomKind::Field)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentumDef {
    pub field: Atom,
    pub momentum: Atom,
    pub definition: Expr,
}

fn check_velocities(l: &Expr) -> Result<(), DiracError> {
    for a in l.atoms() {
        if a.deriv.time > 1 || (a.deriv.time == 1 && (a.deriv.fifth > 0 || !a.deriv.space.is_identity())) {
            return Err(SymError::Unsupported(format!("higher or mixed time derivative `{a}`")).into());
        }
    }
    Ok(())
}

pub fn conjugate_momenta(l: &Expr) -> Result<Vec<MomentumDef>, DiracError> {
    check_velocities(l)?;
    Ok(configuration_fields(l)
        .into_iter()
        .map(|q| MomentumDef {
            momentum: q.conjugate_momentum(),
            definition: l.partial(&q.dot()),
            field: q,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Stage {
    Primary,
    Secondary,
    Gauge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Class {
    First,
    Second,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub name: String,
    pub expr: Expr,
    pub stage: Stage,
    pub class: Class,
    /// Constraint whose consistency produced this one.
    pub parent: Option<String>,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {} ≈ 0", self.name, self.expr)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstraintSet {
    pub items: Vec<Constraint>,
}

impl ConstraintSet {
    pub fn exprs(&self) -> Vec<Expr> {
        self.items.iter().map(|c| c.expr.clone()).collect()
    }

    pub fn of_stage(&self, s: Stage) -> impl Iterator<Item = &Constraint> {
        self.items.iter().filter(move |c| c.stage == s)
    }

    pub fn of_class(&self, c: Class) -> impl Iterator<Item = &Constraint> {
        self.items.iter().filter(move |x| x.class == c)
    }

    pub fn count(&self, c: Class) -> usize {
        self.of_class(c).count()
    }

    pub fn get(&self, name: &str) -> Option<&Constraint> {
        self.items.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hessian {
    pub velocities: Vec<Atom>,
    pub matrix: KernelMatrix,
    pub rank: usize,
    pub null_vectors: Vec<Vec<Kernel>>,
    pub primaries: Vec<Constraint>,
}

pub fn hessian_primaries(l: &Expr) -> Result<Hessian, DiracError> {
    let momenta = conjugate_momenta(l)?;
    let velocities: Vec<Atom> = momenta.iter().map(|m| m.field.dot()).collect();
    let n = velocities.len();
    let mut w = KernelMatrix::zeros(n, n);
    for (i, vi) in velocities.iter().enumerate() {
        for (j, vj) in velocities.iter().enumerate() {
            let e = l.partial(vi).partial(vj);
            if !e.is_scalar() {
                return Err(SymError::Nonlinear(format!("Hessian entry {e} depends on the fields")).into());
            }
            w.set(i, j, Kernel::with_coeff(&e, SpatialOp::IDENTITY));
        }
    }
    let rank = w.rank()?;
    let null_vectors = w.null_space()?;
    let mut primaries = Vec::new();
    for (k, v) in null_vectors.iter().enumerate() {
        let mut phi = Expr::zero();
        for (vi, m) in v.iter().zip(&momenta) {
            let diff = Expr::atom(m.momentum.clone()).sub(&m.definition);
            phi = phi.add(&vi.apply(&diff)?);
        }
        if phi.atoms().iter().any(|a| a.deriv.time > 0) {
            return Err(DiracError::Unsolvable(phi.to_string()));
        }
        primaries.push(Constraint {
            name: format!("phi{}", k + 1),
            expr: phi,
            stage: Stage::Primary,
            class: Class::Undetermined,
            parent: None,
        });
    }
    Ok(Hessian {
        velocities,
        matrix: w,
        rank,
        null_vectors,
        primaries,
    })
}

fn substitute_velocity(e: &Expr, q: &Atom, sol: &Expr) -> Result<Expr, SymError> {
    let mut out = Expr::zero();
    for (m, c) in e.terms() {
        let mut acc = Expr::scalar(c.clone(), m.params.clone());
        for a in &m.atoms {
            let factor = if a.base() == *q && a.deriv.time == 1 {
                sol.apply_op(&a.deriv.space)?
            } else {
                Expr::atom(a.clone())
            };
            acc = acc.mul(&factor);
        }
        out = out.add(&acc);
    }
    Ok(out)
}

/// Legendre transform on the primary surface: velocities along the
/// Hessian's invertible block are solved for, the null directions drop out.
pub fn canonical_hamiltonian(l: &Expr, hessian: &Hessian) -> Result<Expr, DiracError> {
    let momenta = conjugate_momenta(l)?;
    let n = momenta.len();
    let solvable: Vec<usize> = (0..n)
        .filter(|&i| (0..n).any(|j| !hessian.matrix.get(i, j).is_zero()))
        .collect();
    let frozen: Vec<usize> = (0..n).filter(|i| !solvable.contains(i)).collect();
    for &i in &solvable {
        for &j in &frozen {
            if !hessian.matrix.get(i, j).is_zero() {
                return Err(DiracError::Unsolvable(hessian.velocities[j].to_string()));
            }
        }
    }
    let block = hessian.matrix.minor(&frozen, &frozen);
    let inv = block.invert().map_err(|_| {
        DiracError::Unsolvable(
            solvable
                .iter()
                .map(|&i| hessian.velocities[i].to_string())
                .collect::<Vec<_>>()
                .join(", "),
        )
    })?;
    // p_a − (∂L/∂q̇_a − W_ab q̇_b)
    let mut shifted = Vec::new();
    for &a in &solvable {
        let mut rest = momenta[a].definition.clone();
        for &b in &solvable {
            let v = Expr::atom(hessian.velocities[b].clone());
            rest = rest.sub(&hessian.matrix.get(a, b).apply(&v)?);
        }
        shifted.push(Expr::atom(momenta[a].momentum.clone()).sub(&rest));
    }
    let mut h = l.neg();
    for &a in &solvable {
        let v = Expr::atom(hessian.velocities[a].clone());
        h = h.add(&Expr::atom(momenta[a].momentum.clone()).mul(&v));
    }
    for &a in &frozen {
        let v = Expr::atom(hessian.velocities[a].clone());
        h = h.add(&momenta[a].definition.mul(&v));
    }
    let mut sols = Vec::new();
    for (r, _) in solvable.iter().enumerate() {
        let mut s = Expr::zero();
        for (c, sh) in shifted.iter().enumerate() {
            s = s.add(&inv.get(r, c).apply(sh)?);
        }
        sols.push(s);
    }
    for (&a, s) in solvable.iter().zip(&sols) {
        h = substitute_velocity(&h, &momenta[a].field, s)?;
    }
    if let Some(v) = h.atoms().into_iter().find(|a| a.deriv.time > 0) {
        return Err(DiracError::Unsolvable(v.to_string()));
    }
    Ok(h)
}

fn multiplier(prefix: &str, k: usize, total: usize, mode: &Mode) -> Atom {
    let name = if total == 1 {
        prefix.to_string()
    } else {
        format!("{prefix}{}", k + 1)
    };
    Atom::multiplier(&name, mode.clone())
}

fn sector_mode(e: &Expr) -> Mode {
    e.atoms().into_iter().next().map(|a| a.mode).unwrap_or(Mode::Bare)
}

/// `H_P = H_c + Σ λ_k φ_k`.
pub fn primary_hamiltonian(h_c: &Expr, primaries: &[Constraint]) -> (Expr, Vec<Atom>) {
    let mode = sector_mode(h_c);
    let mut h = h_c.clone();
    let mut lambdas = Vec::new();
    for (k, p) in primaries.iter().enumerate() {
        let l = multiplier("lambda", k, primaries.len(), &mode);
        h = h.add(&Expr::atom(l.clone()).mul(&p.expr));
        lambdas.push(l);
    }
    (h, lambdas)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Closure {
    pub constraints: ConstraintSet,
    /// Consistency rounds that produced new constraints.
    pub productive_rounds: usize,
    /// Consistency equations that fix a multiplier instead of constraining.
    pub multiplier_conditions: Vec<(String, Expr)>,
}

pub fn consistency_closure(
    h_p: &Expr,
    primaries: &[Constraint],
    cap: usize,
) -> Result<Closure, DiracError> {
    let mut surface = Surface::new();
    let mut set = ConstraintSet::default();
    for p in primaries {
        if surface.insert(&p.expr)? {
            set.items.push(p.clone());
        }
    }
    let mut frontier: Vec<Constraint> = set.items.clone();
    let mut productive = 0;
    let mut rounds = 0;
    let mut fixes = Vec::new();
    let mut secondaries = 0;
    while !frontier.is_empty() {
        if rounds == cap {
            return Err(DiracError::CapExceeded(cap));
        }
        rounds += 1;
        let mut fresh = Vec::new();
        for phi in &frontier {
            let rate = surface.reduce(&evolve(&phi.expr, h_p)?)?;
            if rate.is_zero() {
                continue;
            }
            if rate.contains_kind(AtomKind::Multiplier) {
                fixes.push((phi.name.clone(), rate));
                continue;
            }
            if surface.insert(&rate)? {
                secondaries += 1;
                fresh.push(Constraint {
                    name: format!("psi{secondaries}"),
                    expr: rate,
                    stage: Stage::Secondary,
                    class: Class::Undetermined,
                    parent: Some(phi.name.clone()),
                });
            }
        }
        if !fresh.is_empty() {
            productive += 1;
        }
        set.items.extend(fresh.iter().cloned());
        frontier = fresh;
    }
    Ok(Closure {
        constraints: set,
        productive_rounds: productive,
        multiplier_conditions: fixes,
    })
}

fn surface_of(exprs: &[Expr]) -> Result<Surface, SymError> {
    let mut s = Surface::new();
    for e in exprs {
        s.insert(e)?;
    }
    Ok(s)
}

fn weakly_zero_kernel(k: &Kernel, surface: &Surface) -> Result<bool, SymError> {
    if k.is_field_independent() {
        return Ok(k.is_zero());
    }
    let mut by_op: BTreeMap<SpatialOp, Expr> = BTreeMap::new();
    for (t, c) in k.terms() {
        by_op
            .entry(t.op)
            .or_default()
            .add_term(t.coeff.clone(), c.clone());
    }
    for e in by_op.values() {
        if !surface.is_weakly_zero(e)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Mutual bracket matrix `{χ_α(x), χ_β(y)}`.
pub fn constraint_matrix(exprs: &[Expr]) -> Result<KernelMatrix, SymError> {
    let n = exprs.len();
    let mut m = KernelMatrix::zeros(n, n);
    for (i, a) in exprs.iter().enumerate() {
        for (j, b) in exprs.iter().enumerate() {
            m.set(i, j, bracket(a, b)?);
        }
    }
    Ok(m)
}

/// First class iff the constraint's row of the bracket matrix vanishes
/// weakly.
pub fn classify(set: &ConstraintSet) -> Result<ConstraintSet, DiracError> {
    let exprs = set.exprs();
    let surface = surface_of(&exprs)?;
    let m = constraint_matrix(&exprs)?;
    let mut out = set.clone();
    for (i, c) in out.items.iter_mut().enumerate() {
        let mut first = true;
        for j in 0..exprs.len() {
            if !weakly_zero_kernel(m.get(i, j), &surface)? {
                first = false;
                break;
            }
        }
        c.class = if first { Class::First } else { Class::Second };
    }
    Ok(out)
}

/// `c₀ + c₁ k`, for counts that grow with the number of retained modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Affine {
    pub constant: i64,
    pub per_k: i64,
}

impl Affine {
    pub const fn new(constant: i64, per_k: i64) -> Self {
        Affine { constant, per_k }
    }

    pub const fn fixed(n: i64) -> Self {
        Affine::new(n, 0)
    }

    /// Count for a zero-mode sector plus `k − 1` copies of an excited one.
    pub fn tower(zero: i64, excited: i64) -> Self {
        Affine::new(zero - excited, excited)
    }

    pub fn at(&self, k: i64) -> i64 {
        self.constant + self.per_k * k
    }

    fn lin(&self, a: i64, o: &Affine, b: i64) -> Affine {
        Affine::new(a * self.constant + b * o.constant, a * self.per_k + b * o.per_k)
    }
}

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.per_k, self.constant) {
            (0, c) => write!(f, "{c}"),
            (p, 0) => write!(f, "{p}k"),
            (p, c) if c < 0 => write!(f, "{p}k - {}", -c),
            (p, c) => write!(f, "{p}k + {c}"),
        }
    }
}

/// `(phase − 2·first − second) / 2`, valid for every `k ≥ 1`.
pub fn count_dof(phase: Affine, first: Affine, second: Affine) -> Result<Affine, DiracError> {
    let twice = phase.lin(1, &first, -2).lin(1, &second, -1);
    if twice.constant % 2 != 0 || twice.per_k % 2 != 0 {
        return Err(DiracError::BadCount(format!("odd reduced phase space {twice}")));
    }
    let dof = Affine::new(twice.constant / 2, twice.per_k / 2);
    if dof.at(1) < 0 || dof.per_k < 0 {
        return Err(DiracError::BadCount(format!("negative count {dof}")));
    }
    Ok(dof)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaugeGenerator {
    pub parameters: Vec<Atom>,
    pub density: Expr,
    /// `δX = {X, G}` for every canonical atom with a nonzero change.
    pub transformations: Vec<(Atom, Expr)>,
}

/// Castellani chains `primary → secondary` give `G = ∫ (ε ψ − ε̇ φ)`.
pub fn gauge_generator(set: &ConstraintSet, atoms: &[Atom]) -> Result<GaugeGenerator, DiracError> {
    if let Some(c) = set.items.iter().find(|c| c.class != Class::First) {
        return Err(DiracError::SecondClassInput(c.name.clone()));
    }
    let primaries: Vec<&Constraint> = set.of_stage(Stage::Primary).collect();
    let mode = set
        .items
        .first()
        .map(|c| sector_mode(&c.expr))
        .unwrap_or(Mode::Bare);
    let mut density = Expr::zero();
    let mut params = Vec::new();
    for (k, phi) in primaries.iter().enumerate() {
        let eps = Atom::new(
            AtomKind::GaugeParam,
            &if primaries.len() == 1 { "eps".to_string() } else { format!("eps{}", k + 1) },
            mode.clone(),
            Component::Scalar,
        );
        let e = Expr::atom(eps.clone());
        let chain: Vec<&Constraint> = set
            .items
            .iter()
            .filter(|c| c.parent.as_deref() == Some(&phi.name))
            .collect();
        match chain.as_slice() {
            [] => density = density.add(&e.mul(&phi.expr)),
            [psi] => {
                let edot = Expr::atom(eps.dot());
                density = density.add(&e.mul(&psi.expr)).sub(&edot.mul(&phi.expr));
            }
            _ => {
                return Err(SymError::Unsupported(format!(
                    "constraint chain of length {} from {}",
                    chain.len() + 1,
                    phi.name
                ))
                .into())
            }
        }
        params.push(eps);
    }
    let mut transformations = Vec::new();
    for a in atoms {
        let d = evolve(&Expr::atom(a.clone()), &density)?;
        if !d.is_zero() {
            transformations.push((a.clone(), d));
        }
    }
    Ok(GaugeGenerator {
        parameters: params,
        density,
        transformations,
    })
}

/// `H_E = H_c + Σ λ φ + Σ β ψ` over the first-class constraints.
pub fn extended_hamiltonian(h_c: &Expr, set: &ConstraintSet) -> Expr {
    let mode = sector_mode(h_c);
    let mut h = h_c.clone();
    for (stage, prefix) in [(Stage::Primary, "lambda"), (Stage::Secondary, "beta")] {
        let cs: Vec<&Constraint> = set
            .of_stage(stage)
            .filter(|c| c.class == Class::First)
            .collect();
        for (k, c) in cs.iter().enumerate() {
            let u = multiplier(prefix, k, cs.len(), &mode);
            h = h.add(&Expr::atom(u).mul(&c.expr));
        }
    }
    h
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaugeFixing {
    pub name: String,
    pub constraints: ConstraintSet,
    pub c_matrix: KernelMatrix,
    pub c_inverse: KernelMatrix,
}

/// Adds gauge conditions and inverts the full bracket matrix. The first
/// condition is listed before the dynamical constraints, the rest after, so
/// each condition sits across from the constraint it fixes.
pub fn impose_gauge(
    set: &ConstraintSet,
    name: &str,
    conditions: &[Expr],
) -> Result<GaugeFixing, DiracError> {
    let gauge = |k: usize, e: &Expr| Constraint {
        name: format!("chi{}", k + 1),
        expr: e.clone(),
        stage: Stage::Gauge,
        class: Class::Second,
        parent: None,
    };
    let mut items = Vec::new();
    if let Some(first) = conditions.first() {
        items.push(gauge(0, first));
    }
    let mut dynamical: Vec<Constraint> = set.items.clone();
    dynamical.sort_by_key(|c| std::cmp::Reverse(c.stage));
    items.extend(dynamical.into_iter().map(|mut c| {
        c.class = Class::Second;
        c
    }));
    for (k, e) in conditions.iter().enumerate().skip(1) {
        items.push(gauge(k, e));
    }
    let exprs: Vec<Expr> = items.iter().map(|c| c.expr.clone()).collect();
    let c = constraint_matrix(&exprs)?;
    let inv = match c.invert() {
        Ok(inv) => inv,
        Err(SymError::Singular { rank, size }) => {
            let null = c.left_null_space()?;
            return Err(DiracError::IncompleteGauge {
                name: name.to_string(),
                rank,
                size,
                null_space: null
                    .iter()
                    .map(|v| v.iter().map(|k| k.to_string()).collect())
                    .collect(),
            });
        }
        Err(e) => return Err(e.into()),
    };
    Ok(GaugeFixing {
        name: name.to_string(),
        constraints: ConstraintSet { items },
        c_matrix: c,
        c_inverse: inv,
    })
}

/// `{a, b}_D = {a, b} − {a, χ_α} C^{αβ} {χ_β, b}`.
pub fn dirac_bracket(a: &Expr, b: &Expr, gf: &GaugeFixing) -> Result<Kernel, SymError> {
    let chis = gf.constraints.exprs();
    let left: Vec<Kernel> = chis.iter().map(|c| bracket(a, c)).collect::<Result<_, _>>()?;
    let right: Vec<Kernel> = chis.iter().map(|c| bracket(c, b)).collect::<Result<_, _>>()?;
    let mut out = bracket(a, b)?;
    for (i, l) in left.iter().enumerate() {
        if l.is_zero() {
            continue;
        }
        for (j, r) in right.iter().enumerate() {
            let cij = gf.c_inverse.get(i, j);
            if r.is_zero() || cij.is_zero() {
                continue;
            }
            out = out.sub(&l.compose(cij)?.compose(r)?);
        }
    }
    Ok(out)
}

pub fn dirac_table(atoms: &[Atom], gf: &GaugeFixing) -> Result<BracketTable, SymError> {
    BracketTable::build(atoms, |a, b| {
        dirac_bracket(&Expr::atom(a.clone()), &Expr::atom(b.clone()), gf)
    })
}

/// Canonical atoms of a sector: every configuration field and its momentum.
pub fn phase_space(density: &Expr) -> Vec<Atom> {
    let fields = configuration_fields(density);
    let momenta: Vec<Atom> = fields.iter().map(|f| f.conjugate_momentum()).collect();
    fields.into_iter().chain(momenta).collect()
}

/// Mass term read off a reduced density: `+c` in `c V_μV^μ` for vectors,
/// `c` in `−c φφ` for scalars.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpectrumEntry {
    pub field: Atom,
    pub coefficient: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unitary {
    pub absorbed: Atom,
    pub density: Expr,
    pub spectrum: Vec<SpectrumEntry>,
}

fn coefficient_of(e: &Expr, atoms: &[Atom]) -> Expr {
    let mut want = atoms.to_vec();
    want.sort();
    let mut out = Expr::zero();
    for (m, c) in e.terms() {
        if m.atoms == want {
            out = out.add(&Expr::scalar(c.clone(), m.params.clone()));
        }
    }
    out
}

/// Gauges away the fifth component by the finite transformation whose
/// parameter cancels it, and reads off the masses.
pub fn unitary_gauge_reduce(density: &Expr, gen: &GaugeGenerator) -> Result<Option<Unitary>, DiracError> {
    let Some(eps) = gen.parameters.first() else {
        return Ok(None);
    };
    let shift_of = |a: &Atom| gen.transformations.iter().find(|(x, _)| x == a).map(|(_, d)| d.clone());
    let absorbed = gen.transformations.iter().find_map(|(a, d)| {
        let ratio = d.partial(eps);
        (a.kind == AtomKind::Field
            && a.comp == Component::Fifth
            && ratio.is_scalar()
            && ratio.len() == 1
            && d == &Expr::atom(eps.clone()).mul(&ratio))
        .then(|| a.clone())
    });
    let Some(absorbed) = absorbed else {
        return Ok(None);
    };
    // old fields in terms of gauge-transformed ones with the absorbed
    // component set to zero; the parameter must drop out
    let mut finite: BTreeMap<Atom, Expr> = BTreeMap::new();
    for a in configuration_fields(density) {
        let kept = if a == absorbed { Expr::zero() } else { Expr::atom(a.clone()) };
        let d = shift_of(&a).unwrap_or_default();
        finite.insert(a, kept.sub(&d));
    }
    let reduced = density.substitute(|b| finite.get(b).cloned())?;
    if reduced.contains_kind(AtomKind::GaugeParam) {
        return Err(SymError::Unsupported("density is not invariant under its gauge generator".into()).into());
    }
    let mut spectrum = Vec::new();
    for f in configuration_fields(&reduced) {
        let entry = match f.comp {
            Component::Time => Some(coefficient_of(&reduced, &[f.clone(), f.clone()])),
            Component::Scalar => Some(coefficient_of(&reduced, &[f.clone(), f.clone()]).neg()),
            _ => None,
        };
        if let Some(coefficient) = entry {
            spectrum.push(SpectrumEntry { field: f, coefficient });
        }
    }
    Ok(Some(Unitary {
        absorbed,
        density: reduced,
        spectrum,
    }))
}

/// Everything Dirac's algorithm produces for one sector before gauge fixing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiracAnalysis {
    pub sector: Sector,
    pub momenta: Vec<MomentumDef>,
    pub hessian: Hessian,
    pub h_canonical: Expr,
    pub h_primary: Expr,
    pub closure: Closure,
    pub constraints: ConstraintSet,
    pub phase_dim: usize,
    pub dof: i64,
    pub generator: Option<GaugeGenerator>,
    pub h_extended: Option<Expr>,
}

impl DiracAnalysis {
    pub fn first_class(&self) -> usize {
        self.constraints.count(Class::First)
    }

    pub fn second_class(&self) -> usize {
        self.constraints.count(Class::Second)
    }

    pub fn phase_atoms(&self) -> Vec<Atom> {
        phase_space(&self.sector.density)
    }
}

pub fn analyze_sector(sector: &Sector, cap: usize) -> Result<DiracAnalysis, DiracError> {
    let l = &sector.density;
    let momenta = conjugate_momenta(l)?;
    let hessian = hessian_primaries(l)?;
    let h_c = canonical_hamiltonian(l, &hessian)?;
    let (h_p, _) = primary_hamiltonian(&h_c, &hessian.primaries);
    let closure = consistency_closure(&h_p, &hessian.primaries, cap)?;
    let constraints = classify(&closure.constraints)?;
    let phase_dim = 2 * momenta.len();
    let first = constraints.count(Class::First) as i64;
    let second = constraints.count(Class::Second) as i64;
    let dof = count_dof(
        Affine::fixed(phase_dim as i64),
        Affine::fixed(first),
        Affine::fixed(second),
    )?
    .constant;
    let all_first = second == 0 && first > 0;
    let generator = if all_first {
        Some(gauge_generator(&constraints, &phase_space(l))?)
    } else {
        None
    };
    let h_extended = all_first.then(|| extended_hamiltonian(&h_c, &constraints));
    Ok(DiracAnalysis {
        sector: sector.clone(),
        momenta,
        hessian,
        h_canonical: h_c,
        h_primary: h_p,
        closure,
        constraints,
        phase_dim,
        dof,
        generator,
        h_extended,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_expr, parse_theory};
    use crate::fixtures;
    use crate::symbolic::{equal_mod_divergence, Axis};

    fn main_sector(src: &str) -> (crate::dsl::TheorySpec, Sector) {
        let spec = parse_theory(src).unwrap();
        let s = sectors(&spec.lagrangian).remove(0);
        (spec, s)
    }

    #[test]
    fn free_scalar() {
        let src = "theory s { dim 4; metric(+,-,-,-); field phi scalar; lagrangian = 1/2*d[mu] phi*d[mu] phi; }";
        let (spec, s) = main_sector(src);
        let a = analyze_sector(&s, DEFAULT_ITERATION_CAP).unwrap();
        assert_eq!(a.momenta[0].definition, parse_expr("d[0] phi", &spec).unwrap());
        assert!(a.hessian.primaries.is_empty());
        let want = parse_expr("1/2*pi(phi)*pi(phi) - 1/2*d[i] phi*d[i] phi", &spec).unwrap();
        assert_eq!(a.h_canonical, want);
        assert_eq!(a.h_primary, a.h_canonical);
        assert_eq!(a.dof, 1);
    }

    #[test]
    fn maxwell() {
        let (spec, s) = main_sector(fixtures::MAXWELL_4D);
        let a = analyze_sector(&s, DEFAULT_ITERATION_CAP).unwrap();
        let p0 = parse_expr("pi(A)[0]", &spec).unwrap();
        assert_eq!(a.hessian.primaries[0].expr, p0);
        let gauss = parse_expr("d[i] pi(A)[i]", &spec).unwrap();
        let psi = &a.constraints.get("psi1").unwrap().expr;
        assert_eq!(*psi, gauss);
        assert_eq!(a.first_class(), 2);
        assert_eq!(a.dof, 2);
        let g = a.generator.unwrap();
        let eps = Expr::atom(g.parameters[0].clone());
        assert_eq!(g.transformations.len(), 4);
        for (atom, d) in &g.transformations {
            let axis = Axis::from_index(atom.comp.index().unwrap()).unwrap();
            assert_eq!(*d, eps.differentiate(axis).neg(), "{atom}");
        }
    }

    #[test]
    fn proca_second_class_pair() {
        let (spec, s) = main_sector(fixtures::PROCA_4D);
        let a = analyze_sector(&s, DEFAULT_ITERATION_CAP).unwrap();
        let psi = &a.constraints.get("psi1").unwrap().expr;
        assert_eq!(*psi, parse_expr("d[i] pi(A)[i] + 2*m^2*A[0]", &spec).unwrap());
        assert_eq!(a.second_class(), 2);
        assert_eq!(a.closure.multiplier_conditions.len(), 1);
        assert_eq!(a.dof, 3);
        assert!(a.generator.is_none());
        let want = parse_expr(
            "-1/2*pi(A)[i]*pi(A)[i] - A[0]*d[i] pi(A)[i] + 1/4*(d[i] A[j] - d[j] A[i])*(d[i] A[j] - d[j] A[i]) - m^2*A[0]*A[0] - m^2*A[i]*A[i]",
            &spec,
        )
        .unwrap();
        assert!(equal_mod_divergence(&a.h_canonical, &want), "{}", a.h_canonical);
    }

    #[test]
    fn dof_counts() {
        let dof = count_dof(Affine::new(-2, 12), Affine::new(0, 2), Affine::fixed(0)).unwrap();
        assert_eq!(dof, Affine::new(-1, 4));
        assert_eq!(dof.to_string(), "4k - 1");
        assert_eq!(dof.at(1), 3);
        assert_eq!(count_dof(Affine::fixed(8), Affine::fixed(2), Affine::fixed(0)).unwrap().at(1), 2);
        assert!(count_dof(Affine::fixed(7), Affine::fixed(0), Affine::fixed(0)).is_err());
        assert!(count_dof(Affine::fixed(2), Affine::fixed(2), Affine::fixed(0)).is_err());
    }
}
