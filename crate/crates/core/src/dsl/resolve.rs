//! Name resolution, index analysis and evaluation into canonical [`Expr`]s.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::Zero;

use super::parser::{parse_expr_raw, Ast, Index, IndexRef, ModeLabel, Node, RawParity, RawTheory};
use super::{
    Compactification, Diagnostic, FieldDecl, GaugeSet, ParseError, Parity, Rank, TheorySpec,
    MODE_SYMBOL,
};
use crate::symbolic::{Atom, AtomKind, Axis, Component, Expr, Mode, Q};

const RESERVED: &[&str] = &["d", "lap", "invlap", "F", "pi", "mult", "gauge"];
const GREEK: &[&str] = &[
    "alpha", "beta", "gamma", "delta", "mu", "nu", "rho", "sigma", "tau", "kappa", "lambda",
];

type Env = BTreeMap<String, u8>;

#[derive(Debug, Clone)]
struct Occ {
    name: String,
    upper: bool,
    line: usize,
    col: usize,
}

struct Ctx<'a> {
    spec: &'a TheorySpec,
}

fn index_range(spec: &TheorySpec, name: &str) -> Option<Vec<u8>> {
    if ["i", "j", "k", "l"].contains(&name) {
        Some(vec![1, 2, 3])
    } else if GREEK.contains(&name) {
        Some(vec![0, 1, 2, 3])
    } else if name.len() == 1 && name.chars().all(|c| c.is_ascii_uppercase()) {
        Some(spec.components().iter().filter_map(|c| c.index()).collect())
    } else {
        None
    }
}

fn component_of(v: u8) -> Component {
    Component::from_index(v).expect("validated component")
}

fn axis_of(v: u8) -> Axis {
    Axis::from_index(v).expect("validated axis")
}

impl<'a> Ctx<'a> {
    fn check_index(&self, idx: &Index) -> Result<(), Diagnostic> {
        match &idx.r {
            IndexRef::Fixed(v) => {
                let ok = self.spec.components().iter().any(|c| c.index() == Some(*v));
                if ok {
                    Ok(())
                } else {
                    Err(Diagnostic::new(
                        idx.line,
                        idx.col,
                        format!("component {v} does not exist in {} dimensions", self.spec.dim),
                    ))
                }
            }
            IndexRef::Named(n) => {
                if index_range(self.spec, n).is_some() {
                    Ok(())
                } else {
                    Err(Diagnostic::new(idx.line, idx.col, format!("unknown index `{n}`")))
                }
            }
        }
    }

    fn index_occ(&self, idx: &Index, upper: bool, env: &Env) -> Result<Vec<Occ>, Diagnostic> {
        self.check_index(idx)?;
        Ok(match &idx.r {
            IndexRef::Named(n) if !env.contains_key(n) => vec![Occ {
                name: n.clone(),
                upper,
                line: idx.line,
                col: idx.col,
            }],
            _ => vec![],
        })
    }

    /// Removes contracted pairs, rejecting triple occurrences.
    fn contract(list: Vec<Occ>) -> Result<Vec<Occ>, Diagnostic> {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for o in &list {
            let c = counts.entry(o.name.as_str()).or_insert(0);
            *c += 1;
            if *c > 2 {
                return Err(Diagnostic::new(
                    o.line,
                    o.col,
                    format!("index `{}` appears more than twice in a product", o.name),
                ));
            }
        }
        let free: Vec<Occ> = list
            .iter()
            .filter(|o| counts[o.name.as_str()] == 1)
            .cloned()
            .collect();
        Ok(free)
    }

    fn is_strength(&self, name: &str) -> bool {
        name == "F" && self.spec.field("F").is_none()
    }

    /// Free index occurrences of a subtree under an environment of bound
    /// indices.
    fn free(&self, ast: &Ast, env: &Env) -> Result<Vec<Occ>, Diagnostic> {
        match &ast.node {
            Node::Num(_) | Node::Multiplier { .. } | Node::GaugeParam { .. } => Ok(vec![]),
            Node::Ident { indices, .. } => {
                let mut occ = Vec::new();
                for idx in indices {
                    occ.extend(self.index_occ(idx, false, env)?);
                }
                Self::contract(occ)
            }
            Node::Momentum { indices, .. } => {
                let mut occ = Vec::new();
                for idx in indices {
                    occ.extend(self.index_occ(idx, true, env)?);
                }
                Self::contract(occ)
            }
            Node::Neg(a) | Node::Lap(_, a) => self.free(a, env),
            Node::Add(a, b) | Node::Sub(a, b) => {
                let fa = self.free(a, env)?;
                let fb = self.free(b, env)?;
                let na: BTreeSet<&str> = fa.iter().map(|o| o.name.as_str()).collect();
                let nb: BTreeSet<&str> = fb.iter().map(|o| o.name.as_str()).collect();
                if na != nb {
                    return Err(Diagnostic::new(
                        ast.line,
                        ast.col,
                        format!(
                            "inconsistent free indices across a sum: {{{}}} vs {{{}}}",
                            na.into_iter().collect::<Vec<_>>().join(","),
                            nb.into_iter().collect::<Vec<_>>().join(",")
                        ),
                    ));
                }
                Ok(fa)
            }
            Node::Mul(..) => {
                let mut occ = Vec::new();
                for f in factors(ast) {
                    occ.extend(self.free(f, env)?);
                }
                Self::contract(occ)
            }
            Node::Div(a, b) => {
                let fb = self.free(b, env)?;
                if let Some(o) = fb.first() {
                    return Err(Diagnostic::new(o.line, o.col, "free index in a divisor"));
                }
                self.free(a, env)
            }
            Node::Pow(b, e) => {
                let fb = self.free(b, env)?;
                if fb.is_empty() {
                    Ok(vec![])
                } else if *e == 2 {
                    let mut occ = fb.clone();
                    occ.extend(fb);
                    Self::contract(occ)
                } else {
                    Err(Diagnostic::new(
                        ast.line,
                        ast.col,
                        "only squares of indexed expressions are contracted",
                    ))
                }
            }
            Node::Deriv(idx, inner) => {
                let mut occ = self.index_occ(idx, false, env)?;
                occ.extend(self.free(inner, env)?);
                Self::contract(occ)
            }
        }
    }

    /// Sums `body` over every index that occurs twice in `occ`, with the
    /// metric sign for like-variance pairs.
    fn contracted<F>(&self, occ: Vec<Occ>, env: &Env, body: F) -> Result<Expr, Diagnostic>
    where
        F: Fn(&Env) -> Result<Expr, Diagnostic>,
    {
        let mut by_name: BTreeMap<String, Vec<bool>> = BTreeMap::new();
        for o in occ {
            by_name.entry(o.name).or_default().push(o.upper);
        }
        let pairs: Vec<(String, bool)> = by_name
            .into_iter()
            .filter(|(_, v)| v.len() == 2)
            .map(|(n, v)| (n, v[0] == v[1]))
            .collect();
        self.sum_over(&pairs, env.clone(), &body)
    }

    fn sum_over<F>(&self, pairs: &[(String, bool)], env: Env, body: &F) -> Result<Expr, Diagnostic>
    where
        F: Fn(&Env) -> Result<Expr, Diagnostic>,
    {
        let Some(((name, metric), rest)) = pairs.split_first() else {
            return body(&env);
        };
        let mut out = Expr::zero();
        for v in index_range(self.spec, name).expect("checked index") {
            let mut e = env.clone();
            e.insert(name.clone(), v);
            let term = self.sum_over(rest, e, body)?;
            let sign = if *metric {
                self.spec.metric_sign(component_of(v))
            } else {
                1
            };
            out = out.add(&term.scale(&Q::from_integer(BigInt::from(sign))));
        }
        Ok(out)
    }

    fn value(&self, idx: &Index, env: &Env) -> u8 {
        match &idx.r {
            IndexRef::Fixed(v) => *v,
            IndexRef::Named(n) => env[n],
        }
    }

    fn mode(&self, m: &Option<ModeLabel>, ast: &Ast) -> Result<Mode, Diagnostic> {
        match m {
            None => Ok(Mode::Bare),
            Some(_) if self.spec.compact.is_none() => Err(Diagnostic::new(
                ast.line,
                ast.col,
                "mode label used without a compactification",
            )),
            Some(ModeLabel::Zero) => Ok(Mode::Zero),
            Some(ModeLabel::Label(l)) => Ok(Mode::kk(l)),
        }
    }

    fn vector_field(&self, ast: &Ast) -> Result<&FieldDecl, Diagnostic> {
        let vs: Vec<&FieldDecl> = self
            .spec
            .fields
            .iter()
            .filter(|f| f.rank == Rank::Vector)
            .collect();
        match vs.as_slice() {
            [f] => Ok(f),
            [] => Err(Diagnostic::new(ast.line, ast.col, "`F` needs a vector field")),
            _ => Err(Diagnostic::new(
                ast.line,
                ast.col,
                "`F` is ambiguous with several vector fields",
            )),
        }
    }

    fn field_atom(
        &self,
        kind: AtomKind,
        f: &FieldDecl,
        mode: Mode,
        indices: &[Index],
        env: &Env,
        ast: &Ast,
    ) -> Result<Expr, Diagnostic> {
        let comp = match (f.rank, indices) {
            (Rank::Scalar, []) => Component::Scalar,
            (Rank::Vector, [idx]) => component_of(self.value(idx, env)),
            (Rank::Scalar, _) => {
                return Err(Diagnostic::new(
                    ast.line,
                    ast.col,
                    format!("scalar `{}` takes no index", f.name),
                ))
            }
            (Rank::Vector, _) => {
                return Err(Diagnostic::new(
                    ast.line,
                    ast.col,
                    format!("vector `{}` takes exactly one index", f.name),
                ))
            }
        };
        Ok(Expr::atom(Atom::new(kind, &f.name, mode, comp)))
    }

    fn eval(&self, ast: &Ast, env: &Env) -> Result<Expr, Diagnostic> {
        match &ast.node {
            Node::Num(n) => Ok(Expr::constant(Q::from_integer(BigInt::from(*n)))),
            Node::Ident {
                name,
                mode,
                indices,
            } => self.eval_ident(ast, name, mode, indices, env),
            Node::Momentum {
                field,
                mode,
                indices,
            } => {
                let f = self.spec.field(field).ok_or_else(|| {
                    Diagnostic::new(ast.line, ast.col, format!("momentum of undeclared field `{field}`"))
                })?;
                let mode = self.mode(mode, ast)?;
                let mut occ = Vec::new();
                for idx in indices {
                    occ.extend(self.index_occ(idx, true, env)?);
                }
                self.contracted(occ, env, |e| {
                    self.field_atom(AtomKind::Momentum, f, mode.clone(), indices, e, ast)
                })
            }
            Node::Multiplier { name, mode } => Ok(Expr::atom(Atom::new(
                AtomKind::Multiplier,
                name,
                self.mode(mode, ast)?,
                Component::Scalar,
            ))),
            Node::GaugeParam { name, mode } => Ok(Expr::atom(Atom::new(
                AtomKind::GaugeParam,
                name,
                self.mode(mode, ast)?,
                Component::Scalar,
            ))),
            Node::Neg(a) => Ok(self.eval(a, env)?.neg()),
            Node::Add(a, b) => Ok(self.eval(a, env)?.add(&self.eval(b, env)?)),
            Node::Sub(a, b) => Ok(self.eval(a, env)?.sub(&self.eval(b, env)?)),
            Node::Mul(..) => {
                let fs = factors(ast);
                let mut occ = Vec::new();
                for f in &fs {
                    occ.extend(self.free(f, env)?);
                }
                self.contracted(occ, env, |e| {
                    let mut acc = Expr::int(1);
                    for f in &fs {
                        acc = acc.mul(&self.eval(f, e)?);
                    }
                    Ok(acc)
                })
            }
            Node::Div(a, b) => {
                let num = self.eval(a, env)?;
                let den = self.eval(b, env)?;
                let inv = scalar_inverse(&den).ok_or_else(|| {
                    Diagnostic::new(b.line, b.col, "division by a non-constant expression")
                })?;
                Ok(num.mul(&inv))
            }
            Node::Pow(b, e) => {
                let fb = self.free(b, env)?;
                if !fb.is_empty() {
                    let mut occ = fb.clone();
                    occ.extend(fb);
                    return self.contracted(occ, env, |en| Ok(self.eval(b, en)?.pow(2)));
                }
                let base = self.eval(b, env)?;
                if *e >= 0 {
                    Ok(base.pow(*e as u32))
                } else {
                    let inv = scalar_inverse(&base).ok_or_else(|| {
                        Diagnostic::new(ast.line, ast.col, "negative power of a non-constant expression")
                    })?;
                    Ok(inv.pow((-*e) as u32))
                }
            }
            Node::Deriv(idx, inner) => {
                let mut occ = self.index_occ(idx, false, env)?;
                occ.extend(self.free(inner, env)?);
                self.contracted(occ, env, |e| {
                    Ok(self.eval(inner, e)?.differentiate(axis_of(self.value(idx, e))))
                })
            }
            Node::Lap(k, inner) => {
                let e = self.eval(inner, env)?;
                e.apply_op(&crate::symbolic::SpatialOp::laplacian(*k))
                    .map_err(|err| Diagnostic::new(ast.line, ast.col, err.to_string()))
            }
        }
    }

    fn eval_ident(
        &self,
        ast: &Ast,
        name: &str,
        mode: &Option<ModeLabel>,
        indices: &[Index],
        env: &Env,
    ) -> Result<Expr, Diagnostic> {
        if let Some(f) = self.spec.field(name) {
            let mode = self.mode(mode, ast)?;
            let occ = {
                let mut v = Vec::new();
                for idx in indices {
                    v.extend(self.index_occ(idx, false, env)?);
                }
                v
            };
            return self.contracted(occ, env, |e| {
                self.field_atom(AtomKind::Field, f, mode.clone(), indices, e, ast)
            });
        }
        if self.is_strength(name) {
            let a = self.vector_field(ast)?;
            let mode = self.mode(mode, ast)?;
            let [m, n] = indices else {
                return Err(Diagnostic::new(ast.line, ast.col, "`F` takes exactly two indices"));
            };
            let mut occ = self.index_occ(m, false, env)?;
            occ.extend(self.index_occ(n, false, env)?);
            return self.contracted(occ, env, |e| {
                let (vm, vn) = (self.value(m, e), self.value(n, e));
                let am = Expr::atom(Atom::new(AtomKind::Field, &a.name, mode.clone(), component_of(vm)));
                let an = Expr::atom(Atom::new(AtomKind::Field, &a.name, mode.clone(), component_of(vn)));
                Ok(an.differentiate(axis_of(vm)).sub(&am.differentiate(axis_of(vn))))
            });
        }
        let is_param = self.spec.params.contains(name)
            || (self.spec.compact.is_some() && name == MODE_SYMBOL);
        if is_param {
            if !indices.is_empty() || mode.is_some() {
                return Err(Diagnostic::new(
                    ast.line,
                    ast.col,
                    format!("parameter `{name}` takes no index or mode"),
                ));
            }
            return Ok(Expr::param(name, 1));
        }
        Err(Diagnostic::new(ast.line, ast.col, format!("undeclared symbol `{name}`")))
    }

    fn density(&self, ast: &Ast, what: &str) -> Result<Expr, Diagnostic> {
        let env = Env::new();
        let free = self.free(ast, &env)?;
        if let Some(o) = free.first() {
            return Err(Diagnostic::new(
                o.line,
                o.col,
                format!("free index `{}` in {what}", o.name),
            ));
        }
        self.eval(ast, &env)
    }
}

/// Operands of a chain of multiplications, so index counting sees the
/// whole product at once.
fn factors(ast: &Ast) -> Vec<&Ast> {
    match &ast.node {
        Node::Mul(a, b) => {
            let mut v = factors(a);
            v.extend(factors(b));
            v
        }
        _ => vec![ast],
    }
}

fn scalar_inverse(e: &Expr) -> Option<Expr> {
    if e.len() != 1 || !e.is_scalar() {
        return None;
    }
    let (m, c) = e.terms().next().unwrap();
    if c.is_zero() {
        return None;
    }
    Some(Expr::scalar(c.recip(), m.params.inv()))
}

fn resolve_parity(
    spec: &TheorySpec,
    rank: Rank,
    raw: &[(Option<Index>, RawParity)],
) -> Result<BTreeMap<Component, Parity>, Diagnostic> {
    let mut out = BTreeMap::new();
    for (sel, p) in raw {
        let p = match p {
            RawParity::Even => Parity::Even,
            RawParity::Odd => Parity::Odd,
        };
        let comps: Vec<Component> = match (rank, sel) {
            (Rank::Scalar, None) => vec![Component::Scalar],
            (Rank::Scalar, Some(idx)) => {
                return Err(Diagnostic::new(idx.line, idx.col, "scalar parity takes no component"))
            }
            (Rank::Vector, None) => spec.components(),
            (Rank::Vector, Some(idx)) => match &idx.r {
                IndexRef::Fixed(v) => {
                    let c = Component::from_index(*v)
                        .filter(|c| spec.components().contains(c))
                        .ok_or_else(|| Diagnostic::new(idx.line, idx.col, format!("no component {v}")))?;
                    vec![c]
                }
                IndexRef::Named(n) => index_range(spec, n)
                    .ok_or_else(|| Diagnostic::new(idx.line, idx.col, format!("unknown index `{n}`")))?
                    .into_iter()
                    .map(component_of)
                    .collect(),
            },
        };
        for c in comps {
            out.insert(c, p);
        }
    }
    Ok(out)
}

pub(super) fn resolve(raw: RawTheory) -> Result<TheorySpec, ParseError> {
    let mut diags = Vec::new();
    let dim = match raw.dim {
        Some((d @ (4 | 5), _, _)) => d as u8,
        Some((d, l, c)) => {
            diags.push(Diagnostic::new(l, c, format!("dimension must be 4 or 5, got {d}")));
            5
        }
        None => {
            diags.push(Diagnostic::new(1, 1, "missing `dim` declaration"));
            5
        }
    };
    let metric = match raw.metric {
        Some(m) if m.len() == dim as usize => m,
        Some(m) => {
            diags.push(Diagnostic::new(
                1,
                1,
                format!("metric has {} entries for dimension {dim}", m.len()),
            ));
            m
        }
        None => {
            diags.push(Diagnostic::new(1, 1, "missing `metric` declaration"));
            vec![1; dim as usize]
        }
    };
    let compact = raw.compact.map(|(coordinate, radius)| Compactification { coordinate, radius });
    if compact.is_some() && dim != 5 {
        diags.push(Diagnostic::new(1, 1, "compactification needs a five-dimensional theory"));
    }
    let mut params = BTreeSet::new();
    for (p, l, c) in &raw.params {
        if RESERVED.contains(&p.as_str()) {
            diags.push(Diagnostic::new(*l, *c, format!("`{p}` is reserved")));
        }
        params.insert(p.clone());
    }
    if let Some(c) = &compact {
        params.insert(c.radius.clone());
    }
    let mut spec = TheorySpec {
        name: raw.name,
        dim,
        metric,
        compact,
        params,
        fields: Vec::new(),
        lagrangian: Expr::zero(),
        gauge_sets: Vec::new(),
    };
    for f in &raw.fields {
        if RESERVED.contains(&f.name.as_str()) {
            diags.push(Diagnostic::new(f.line, f.col, format!("`{}` is reserved", f.name)));
        }
        if spec.params.contains(&f.name) || spec.field(&f.name).is_some() {
            diags.push(Diagnostic::new(f.line, f.col, format!("`{}` declared twice", f.name)));
        }
        let rank = if f.vector { Rank::Vector } else { Rank::Scalar };
        let parity = match resolve_parity(&spec, rank, &f.parity) {
            Ok(p) => p,
            Err(d) => {
                diags.push(d);
                BTreeMap::new()
            }
        };
        let decl = FieldDecl {
            name: f.name.clone(),
            rank,
            parity,
        };
        if spec.compact.is_some() {
            for c in spec.field_components(&decl) {
                if !decl.parity.contains_key(&c) {
                    let what = c.index().map_or(String::new(), |i| format!(" component {i}"));
                    diags.push(Diagnostic::new(
                        f.line,
                        f.col,
                        format!("missing parity for{what} of `{}`", f.name),
                    ));
                }
            }
        }
        spec.fields.push(decl);
    }
    if spec.fields.is_empty() {
        diags.push(Diagnostic::new(1, 1, "no fields declared"));
    }
    if !diags.is_empty() {
        return Err(ParseError { diagnostics: diags });
    }
    let ctx = Ctx { spec: &spec };
    let lagrangian = match &raw.lagrangian {
        None => {
            diags.push(Diagnostic::new(raw.lagrangian_pos.0.max(1), 1, "missing lagrangian"));
            Expr::zero()
        }
        Some(ast) => ctx.density(ast, "density").unwrap_or_else(|d| {
            diags.push(d);
            Expr::zero()
        }),
    };
    let mut gauge_sets = Vec::new();
    for (name, conds) in &raw.gauges {
        let mut out = Vec::new();
        for c in conds {
            match ctx.density(c, "gauge condition") {
                Ok(e) if e.is_zero() => {
                    diags.push(Diagnostic::new(c.line, c.col, "gauge condition is identically zero"))
                }
                Ok(e) => out.push(e),
                Err(d) => diags.push(d),
            }
        }
        gauge_sets.push(GaugeSet {
            name: name.clone(),
            conditions: out,
        });
    }
    if !diags.is_empty() {
        return Err(ParseError { diagnostics: diags });
    }
    spec.lagrangian = lagrangian;
    spec.gauge_sets = gauge_sets;
    Ok(spec)
}

/// Parses a single expression against the declarations of a theory.
pub fn parse_expr(src: &str, spec: &TheorySpec) -> Result<Expr, ParseError> {
    let ast = parse_expr_raw(src).map_err(ParseError::single)?;
    Ctx { spec }.density(&ast, "expression").map_err(ParseError::single)
}
