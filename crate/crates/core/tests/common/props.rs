//! Random low-degree expressions and the algebraic identities checked on them.
//!
//! Every suite runs through a [`TestRunner`] seeded from `HAMFORGE_SEED`, so a
//! failing case can be replayed by exporting the seed printed with it.

use std::collections::BTreeMap;

use proptest::prelude::*;
use proptest::sample::subsequence;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestError, TestRng, TestRunner};

use hamforge_core::brackets::{bracket, evolve};
use hamforge_core::dirac::{classify, Class, Constraint, ConstraintSet, Stage};
use hamforge_core::dsl::{parse_expr, parse_theory, render_theory, TheorySpec};
use hamforge_core::report::{kernel_from_dsl, kernel_to_dsl};
use hamforge_core::symbolic::{
    is_total_derivative, normalize, qr, Atom, Axis, Expr, Kernel, KernelMatrix, Params, RawExpr, SpatialOp,
};

pub const CASES: u32 = 256;
const DEFAULT_SEED: u64 = 0x4841_4d46;

pub const THEORY: &str = "theory gen { dim 4; metric(+,-,-,-); param m, R, n; \
    field A vector; field theta scalar; lagrangian = 0; }";

const ATOMS: [&str; 10] = [
    "A[0]",
    "A[1]",
    "A[2]",
    "A[3]",
    "theta",
    "pi(A)[0]",
    "pi(A)[1]",
    "pi(A)[2]",
    "pi(A)[3]",
    "pi(theta)",
];

pub fn seed() -> u64 {
    std::env::var("HAMFORGE_SEED")
        .ok()
        .and_then(|s| {
            let s = s.trim();
            match s.strip_prefix("0x") {
                Some(hex) => u64::from_str_radix(hex, 16).ok(),
                None => s.parse().ok(),
            }
        })
        .unwrap_or(DEFAULT_SEED)
}

fn runner(salt: u64) -> TestRunner {
    let mut bytes = [0u8; 32];
    for (i, chunk) in bytes.chunks_mut(8).enumerate() {
        let word = seed() ^ salt.rotate_left(16 * i as u32) ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    let config = Config {
        cases: CASES,
        max_global_rejects: 20 * CASES,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &bytes))
}

/// Outcome of one suite: number of accepted cases, or the shrunk failure.
pub type Outcome = Result<u32, String>;

fn run<S: Strategy>(name: &str, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Outcome
where
    S::Value: std::fmt::Debug,
{
    let salt = name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    let mut r = runner(salt);
    match r.run(&strategy, test) {
        Ok(()) => Ok(CASES),
        Err(TestError::Fail(why, value)) => Err(format!("{name} (seed {:#x}): {why}; minimal input {value:?}", seed())),
        Err(TestError::Abort(why)) => Err(format!("{name} (seed {:#x}): aborted: {why}", seed())),
    }
}

pub fn spec() -> TheorySpec {
    parse_theory(THEORY).unwrap()
}

fn atom_table(spec: &TheorySpec) -> Vec<Atom> {
    ATOMS
        .iter()
        .map(|s| parse_expr(s, spec).unwrap().atoms().into_iter().next().unwrap())
        .collect()
}

fn rational() -> impl Strategy<Value = (i64, i64)> {
    (-4i64..=4, 1i64..=3)
}

fn param() -> impl Strategy<Value = (&'static str, i32)> {
    (prop::sample::select(vec!["m", "R", "n"]), -2i32..=2)
}

fn leaf(atoms: Vec<Atom>) -> impl Strategy<Value = RawExpr> {
    prop_oneof![
        1 => rational().prop_map(|(a, b)| RawExpr::Num(qr(a, b))),
        1 => param().prop_map(|(p, e)| RawExpr::Param(p.to_string(), e)),
        3 => prop::sample::select(atoms).prop_map(RawExpr::Atom),
    ]
}

/// Raw trees built from sums, products, small powers, time and space
/// derivatives, Laplacians, and inverse Laplacians of single atoms.
pub fn raw_expr(atoms: Vec<Atom>) -> impl Strategy<Value = RawExpr> {
    let bare = atoms.clone();
    leaf(atoms).prop_recursive(3, 24, 3, move |inner| {
        let bare = bare.clone();
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..=3).prop_map(RawExpr::Sum),
            prop::collection::vec(inner.clone(), 1..=3).prop_map(RawExpr::Prod),
            (inner.clone(), 0u32..=2).prop_map(|(e, k)| RawExpr::Pow(Box::new(e), k)),
            (1u8..=3, inner.clone()).prop_map(|(i, e)| RawExpr::D(Axis::Space(i), Box::new(e))),
            inner.clone().prop_map(|e| RawExpr::D(Axis::Time, Box::new(e))),
            inner.prop_map(|e| RawExpr::Lap(1, Box::new(e))),
            prop::sample::select(bare).prop_map(|a| RawExpr::Lap(-1, Box::new(RawExpr::Atom(a)))),
        ]
    })
}

fn scalar_expr() -> impl Strategy<Value = Expr> {
    (rational(), param()).prop_map(|((a, b), (p, e))| Expr::scalar(qr(a, b), Params::symbol(p, e)))
}

fn spatial_op() -> impl Strategy<Value = SpatialOp> {
    (0u8..=2, 0u8..=1, 0u8..=1, -1i32..=1).prop_map(|(a, b, c, lap)| SpatialOp { d: [a, b, c], lap })
}

/// Field-independent kernels: sums of parameter monomials times canonical ops.
pub fn const_kernel() -> impl Strategy<Value = Kernel> {
    prop::collection::vec((scalar_expr(), spatial_op()), 1..=3).prop_map(|terms| {
        terms
            .iter()
            .fold(Kernel::zero(), |k, (c, op)| k.add(&Kernel::with_coeff(c, *op)))
    })
}

/// Phase-space polynomial of degree ≤ `degree` with up to two spatial
/// derivatives per atom and no time derivatives.
pub fn phase_poly(atoms: Vec<Atom>, degree: usize) -> impl Strategy<Value = Expr> {
    let factor = (prop::sample::select(atoms), prop::collection::vec(1u8..=3, 0..=2)).prop_map(|(a, ds)| {
        ds.iter()
            .fold(Expr::atom(a), |e, &i| e.differentiate(Axis::Space(i)))
    });
    let term = (scalar_expr(), prop::collection::vec(factor, 1..=degree))
        .prop_map(|(c, fs)| fs.iter().fold(c, |acc, f| acc.mul(f)));
    prop::collection::vec(term, 1..=3).prop_map(|ts| Expr::sum(&ts))
}

fn evaluated(raw: &RawExpr) -> Result<Expr, TestCaseError> {
    normalize(raw).map_err(|e| TestCaseError::reject(e.to_string()))
}

pub fn normalize_idempotent() -> Outcome {
    let atoms = atom_table(&spec());
    run("normalize idempotence", raw_expr(atoms), |raw| {
        let once = evaluated(&raw)?;
        let twice = normalize(&once.to_raw()).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(&twice, &once);
        let thrice = normalize(&twice.to_raw()).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(thrice, once);
        Ok(())
    })
}

pub fn functional_derivative_linear() -> Outcome {
    let atoms = atom_table(&spec());
    let strat = (
        raw_expr(atoms.clone()),
        raw_expr(atoms.clone()),
        scalar_expr(),
        scalar_expr(),
        prop::sample::select(atoms),
    );
    run("functional derivative linearity", strat, |(f, g, a, b, target)| {
        let (f, g) = (evaluated(&f)?, evaluated(&g)?);
        let fd = |e: &Expr| e.functional_derivative(&target);
        match (fd(&a.mul(&f).add(&b.mul(&g))), fd(&f), fd(&g)) {
            (Ok(lhs), Ok(df), Ok(dg)) => prop_assert_eq!(lhs, a.mul(&df).add(&b.mul(&dg))),
            // a nonlocal part of f or g stays nonlocal in the combination
            (Err(_), df, dg) => prop_assert!(df.is_err() || dg.is_err()),
            _ => {}
        }
        Ok(())
    })
}

/// `{F(x), G(y)} = −{G(y), F(x)}`: the kernel of one order is minus the
/// adjoint of the other, for linear local expressions.
pub fn bracket_antisymmetry() -> Outcome {
    let atoms = atom_table(&spec());
    let strat = (phase_poly(atoms.clone(), 1), phase_poly(atoms, 1));
    run("local bracket antisymmetry", strat, |(f, g)| {
        let fg = bracket(&f, &g).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let gf = bracket(&g, &f).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let adj = gf.adjoint().map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(fg.add(&adj).is_zero(), "{{f,g}} = {fg}, {{g,f}}† = {adj}");
        Ok(())
    })
}

/// `{∫F, ∫G} + {∫G, ∫F}` integrates to zero for quadratic functionals.
pub fn functional_antisymmetry() -> Outcome {
    let atoms = atom_table(&spec());
    let strat = (phase_poly(atoms.clone(), 2), phase_poly(atoms, 2));
    run("functional bracket antisymmetry", strat, |(f, g)| {
        let fg = evolve(&f, &g).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let gf = evolve(&g, &f).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(is_total_derivative(&fg.add(&gf)), "{{F,G}} = {fg}, {{G,F}} = {gf}");
        Ok(())
    })
}

pub fn jacobi() -> Outcome {
    let atoms = atom_table(&spec());
    let strat = (
        phase_poly(atoms.clone(), 2),
        phase_poly(atoms.clone(), 2),
        phase_poly(atoms, 2),
    );
    run("Jacobi identity", strat, |(f, g, h)| {
        let br = |a: &Expr, b: &Expr| evolve(a, b).map_err(|e| TestCaseError::fail(e.to_string()));
        let total = br(&br(&f, &g)?, &h)?
            .add(&br(&br(&g, &h)?, &f)?)
            .add(&br(&br(&h, &f)?, &g)?);
        prop_assert!(is_total_derivative(&total), "cyclic sum {total}");
        Ok(())
    })
}

const CONSTRAINT_POOL: [&str; 7] = [
    "pi(A)[0]",
    "d[i] pi(A)[i] + pi(theta)",
    "d[i] A[i]",
    "A[0]",
    "theta",
    "pi(theta) - theta*theta",
    "pi(A)[0] + m^2*A[0]",
];

fn constraint_set(spec: &TheorySpec, picks: &[usize]) -> ConstraintSet {
    ConstraintSet {
        items: picks
            .iter()
            .map(|&i| Constraint {
                name: format!("c{i}"),
                expr: parse_expr(CONSTRAINT_POOL[i], spec).unwrap(),
                stage: Stage::Primary,
                class: Class::Undetermined,
                parent: None,
            })
            .collect(),
    }
}

fn classes(set: &ConstraintSet) -> Result<BTreeMap<String, Class>, String> {
    let out = classify(set).map_err(|e| e.to_string())?;
    Ok(out.items.into_iter().map(|c| (c.name, c.class)).collect())
}

pub fn classify_order_independent() -> Outcome {
    let spec = spec();
    let strat = subsequence((0..CONSTRAINT_POOL.len()).collect::<Vec<_>>(), 1..=CONSTRAINT_POOL.len())
        .prop_flat_map(|picks| (Just(picks.clone()), Just(picks).prop_shuffle()));
    run("classify order independence", strat, |(picks, shuffled)| {
        let a = classes(&constraint_set(&spec, &picks));
        let b = classes(&constraint_set(&spec, &shuffled));
        prop_assert_eq!(a, b);
        Ok(())
    })
}

pub fn expr_round_trip() -> Outcome {
    let spec = spec();
    let atoms = atom_table(&spec);
    run("expression render/parse round trip", raw_expr(atoms), |raw| {
        let e = evaluated(&raw)?;
        let text = e.render_dsl();
        let back = parse_expr(&text, &spec).map_err(|err| TestCaseError::fail(format!("`{text}`: {err}")))?;
        prop_assert_eq!(back, e);
        Ok(())
    })
}

pub fn kernel_round_trip() -> Outcome {
    run("kernel render/parse round trip", const_kernel(), |k| {
        let text = kernel_to_dsl(&k);
        let back = kernel_from_dsl(&text).map_err(|e| TestCaseError::fail(format!("`{text}`: {e}")))?;
        prop_assert_eq!(back, k);
        Ok(())
    })
}

fn theory_source() -> impl Strategy<Value = String> {
    let atoms = atom_table(&spec());
    (
        prop::bool::ANY,
        subsequence(vec!["m", "R", "n"], 0..=3),
        prop::bool::ANY,
        raw_expr(atoms.clone()),
        prop::collection::vec(raw_expr(atoms), 0..=2),
    )
        .prop_filter_map("unevaluable tree", |(plus, params, extra, l, gauge)| {
            // expressions may use any parameter, so undeclared ones are dropped
            let l = normalize(&l).ok()?;
            let gauge: Vec<Expr> = gauge.iter().map(normalize).collect::<Result<_, _>>().ok()?;
            let metric = if plus { "+,-,-,-" } else { "-,+,+,+" };
            let mut src = format!("theory random {{\n  dim 4;\n  metric({metric});\n");
            let all = ["m", "R", "n"];
            if !params.is_empty() || extra {
                src.push_str(&format!("  param {};\n", if extra { all.join(", ") } else { params.join(", ") }));
            }
            src.push_str("  field A vector;\n  field theta scalar;\n");
            src.push_str(&format!("  lagrangian = {};\n", l.render_dsl()));
            if !gauge.is_empty() {
                src.push_str("  gauge_fixing g {\n");
                for c in &gauge {
                    src.push_str(&format!("    {} = 0;\n", c.render_dsl()));
                }
                src.push_str("  }\n");
            }
            src.push('}');
            Some(src)
        })
}

pub fn theory_round_trip() -> Outcome {
    run("theory render/parse round trip", theory_source(), |src| {
        // sources mentioning undeclared parameters are invalid and skipped
        let spec = parse_theory(&src).map_err(|e| TestCaseError::reject(e.to_string()))?;
        let text = render_theory(&spec);
        let back = parse_theory(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&back, &spec);
        prop_assert_eq!(render_theory(&back), text);
        Ok(())
    })
}

fn unit_kernel() -> impl Strategy<Value = Kernel> {
    prop_oneof![
        Just(Kernel::laplacian(1)),
        Just(Kernel::laplacian(-1)),
        Just(Kernel::scalar(qr(-1, 1), Params::symbol("n", 1).mul(&Params::symbol("R", -1)))),
        rational()
            .prop_filter("nonzero", |(a, _)| *a != 0)
            .prop_map(|(a, b)| Kernel::scalar(qr(a, b), Params::one())),
        param().prop_map(|(p, e)| Kernel::scalar(qr(1, 1), Params::symbol(p, e))),
    ]
}

/// `L·S` with `L` unit lower triangular over the operator ring and `S`
/// block diagonal with antisymmetric 2×2 blocks of units.
fn triangular_symplectic() -> impl Strategy<Value = KernelMatrix> {
    (1usize..=2).prop_flat_map(|blocks| {
        let n = 2 * blocks;
        (
            prop::collection::vec(unit_kernel(), blocks),
            prop::collection::vec(const_kernel(), n * (n - 1) / 2),
        )
            .prop_map(move |(units, lower)| {
                let mut s = KernelMatrix::zeros(n, n);
                for (b, u) in units.iter().enumerate() {
                    s.set(2 * b, 2 * b + 1, u.clone());
                    s.set(2 * b + 1, 2 * b, u.neg());
                }
                let mut l = KernelMatrix::identity(n);
                let mut it = lower.into_iter();
                for i in 0..n {
                    for j in 0..i {
                        l.set(i, j, it.next().unwrap());
                    }
                }
                l.mul(&s).unwrap()
            })
    })
}

pub fn inverse_products() -> Outcome {
    run("operator matrix inversion", triangular_symplectic(), |m| {
        let inv = m.invert().map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(m.mul(&inv).unwrap().is_identity());
        prop_assert!(inv.mul(&m).unwrap().is_identity());
        Ok(())
    })
}

/// Every suite with its display name, in report order.
pub fn suites() -> Vec<(&'static str, fn() -> Outcome)> {
    vec![
        ("normalize idempotence", normalize_idempotent),
        ("functional derivative linearity", functional_derivative_linear),
        ("local bracket antisymmetry", bracket_antisymmetry),
        ("functional bracket antisymmetry", functional_antisymmetry),
        ("Jacobi identity", jacobi),
        ("classify order independence", classify_order_independent),
        ("expression round trip", expr_round_trip),
        ("kernel round trip", kernel_round_trip),
        ("theory round trip", theory_round_trip),
        ("operator matrix inversion", inverse_products),
    ]
}
