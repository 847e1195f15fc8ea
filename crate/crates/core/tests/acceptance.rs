//! One PASS/FAIL line per acceptance criterion. Run with
//! `cargo test -p hamforge-core --test acceptance -- --nocapture`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::{atom, expr, gauge, props, stueckelberg, Compactified};
use hamforge_core::brackets::compare_brackets;
use hamforge_core::dirac::{
    count_dof, dirac_bracket, dirac_table, impose_gauge, unitary_gauge_reduce, Affine, Class, Stage,
};
use hamforge_core::dsl::parse_theory;
use hamforge_core::fixtures::{self, golden};
use hamforge_core::fj::{
    faddeev_jackiw, first_order_form, fj_constraint_generation, no_new_constraints_test, null_modes, FjError,
    FjOutcome, DEFAULT_LEVEL_CAP,
};
use hamforge_core::kk::{expand_on_orbifold, integrate_extra_dimension, is_decoupled, split_sectors};
use hamforge_core::lattice::{verify_inverse, LatticeConfig};
use hamforge_core::report::{run_pipeline, Method, PipelineOptions};
use hamforge_core::symbolic::{Atom, AtomKind, Component, Expr};

type Verdict = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Verdict + 'a>);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        match $cond {
            true => {}
            false => return Err(format!($($msg)+)),
        }
    };
}

fn fj_run(c: &Compactified, kk: bool, gauge_name: &str) -> Result<FjOutcome, FjError> {
    let a = if kk { &c.kk.1 } else { &c.zero.1 };
    faddeev_jackiw(first_order_form(a)?, &gauge(&c.spec, gauge_name), DEFAULT_LEVEL_CAP)
}

fn compactification() -> Verdict {
    let spec = parse_theory(fixtures::STUECKELBERG_5D).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let exp = expand_on_orbifold(&spec, None).map_err(|e| e.to_string())?;
    let l4 = integrate_extra_dimension(&spec, &exp).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let (zero, kk) = split_sectors(&l4);
    ensure!(zero == expr(&spec, fixtures::STUECKELBERG_4D_ZERO), "zero-mode block differs: {zero}");
    ensure!(kk == expr(&spec, fixtures::STUECKELBERG_4D_KK), "excited block differs: {kk}");
    ensure!(is_decoupled(&l4), "modes do not decouple");
    ensure!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    Ok(format!("{} terms, {:.1} ms", l4.len(), elapsed.as_secs_f64() * 1e3))
}

fn constraints(c: &Compactified) -> Verdict {
    for (a, primary, gauss) in [
        (&c.zero.1, fixtures::PRIMARY_ZERO, fixtures::GAUSS_ZERO),
        (&c.kk.1, fixtures::PRIMARY_KK, fixtures::GAUSS_KK),
    ] {
        let prim: Vec<Expr> = a.constraints.of_stage(Stage::Primary).map(|x| x.expr.clone()).collect();
        ensure!(prim == vec![expr(&c.spec, primary)], "primaries {prim:?}");
        let sec: Vec<Expr> = a.constraints.of_stage(Stage::Secondary).map(|x| x.expr.clone()).collect();
        ensure!(sec == vec![expr(&c.spec, gauss)], "secondaries {sec:?}");
        ensure!(a.constraints.items.iter().all(|x| x.class == Class::First), "not all first class");
        ensure!(a.closure.productive_rounds == 1, "{} consistency rounds", a.closure.productive_rounds);
    }
    Ok("2 primaries, 2 Gauss laws, all first class, one round".into())
}

fn dof(c: &Compactified) -> Verdict {
    let total = count_dof(Affine::tower(10, 12), Affine::tower(2, 2), Affine::fixed(0)).map_err(|e| e.to_string())?;
    ensure!(total.to_string() == "4k - 1", "symbolic count {total}");
    ensure!(total.at(1) == 3, "k = 1 gives {}", total.at(1));
    ensure!((c.zero.1.dof, c.kk.1.dof) == (3, 4), "per-sector counts {} and {}", c.zero.1.dof, c.kk.1.dof);
    let opts = PipelineOptions {
        method: Method::Dirac,
        ..PipelineOptions::default()
    };
    let maxwell = run_pipeline(fixtures::MAXWELL_4D, &opts).map_err(|e| e.to_string())?;
    ensure!(maxwell.totals.dof == "2", "Maxwell {}", maxwell.totals.dof);
    let proca = run_pipeline(fixtures::PROCA_4D, &opts).map_err(|e| e.to_string())?;
    ensure!(proca.totals.dof == "3", "Proca {}", proca.totals.dof);
    ensure!(proca.totals.second_class == "2", "Proca second class {}", proca.totals.second_class);
    Ok("4k - 1 (3 at k = 1), Maxwell 2, Proca 3".into())
}

fn gauge_transformations(c: &Compactified) -> Verdict {
    for (a, table) in [(&c.zero.1, fixtures::GAUGE_ZERO), (&c.kk.1, fixtures::GAUGE_KK)] {
        let g = a.generator.as_ref().ok_or("no generator")?;
        let nonzero = g
            .transformations
            .iter()
            .filter(|(x, d)| x.kind == AtomKind::Field && !d.is_zero())
            .count();
        ensure!(nonzero == table.len(), "{nonzero} transformed fields, expected {}", table.len());
        for (field, delta) in table.iter() {
            let x = atom(&c.spec, field);
            let got = g.transformations.iter().find(|(y, _)| *y == x).map(|(_, d)| d.clone());
            ensure!(got == Some(expr(&c.spec, delta)), "δ{x} = {got:?}");
        }
    }
    let g = c.kk.1.generator.as_ref().unwrap();
    let a5 = atom(&c.spec, "A{n}[5]");
    let d5 = &g.transformations.iter().find(|(y, _)| *y == a5).unwrap().1;
    Ok(format!("δA_5(n) = {d5}"))
}

fn dirac_brackets(c: &Compactified) -> Verdict {
    let mut checked = 0;
    for (a, name, golden) in [
        (&c.zero.1, "coulomb", golden::zero_brackets()),
        (&c.kk.1, "axial", golden::kk_brackets()),
    ] {
        let gf = impose_gauge(&a.constraints, name, &gauge(&c.spec, name)).map_err(|e| e.to_string())?;
        let atoms = a.phase_atoms();
        let t = dirac_table(&atoms, &gf).map_err(|e| e.to_string())?;
        for (x, y, k) in golden {
            ensure!(t.get(&x, &y) == k, "{name}: {{{x}, {y}}} = {}", t.get(&x, &y));
        }
        for chi in gf.constraints.of_class(Class::Second) {
            for x in &atoms {
                let k = dirac_bracket(&chi.expr, &Expr::atom(x.clone()), &gf).map_err(|e| e.to_string())?;
                ensure!(k.is_zero(), "{name}: {{{}, {x}}}_D = {k}", chi.expr);
                checked += 1;
            }
        }
    }
    Ok(format!("reference tables match; {checked} strong zeros"))
}

fn fj(c: &Compactified) -> Verdict {
    for (kk, g, v0, gauss, f2, f2_inv) in [
        (false, "coulomb", golden::zero_v0(), fixtures::GAUSS_ZERO, golden::zero_f2_literal(), golden::zero_f2_inverse_literal()),
        (true, "axial", golden::kk_v0(), fixtures::GAUSS_KK, golden::kk_f2_literal(), golden::kk_f2_inverse_literal()),
    ] {
        let a = if kk { &c.kk.1 } else { &c.zero.1 };
        let s = first_order_form(a).map_err(|e| e.to_string())?;
        let modes = null_modes(&s.symplectic_matrix().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        ensure!(modes == vec![v0], "{g}: level-0 null modes differ");
        let generated = fj_constraint_generation(&s, &modes).map_err(|e| e.to_string())?;
        ensure!(generated == vec![expr(&c.spec, gauss)], "{g}: generated {generated:?}");
        let t = no_new_constraints_test(&s, &generated).map_err(|e| e.to_string())?;
        ensure!(t.identity, "{g}: contraction test is not an identity");

        let o = fj_run(c, kk, g).map_err(|e| e.to_string())?;
        let f = o.state.symplectic_matrix().map_err(|e| e.to_string())?;
        ensure!(f.mul(&o.inverse).map_err(|e| e.to_string())?.is_identity(), "{g}: f·f⁻¹ ≠ 1");
        let lit = o.state.literal_matrix().map_err(|e| e.to_string())?;
        ensure!(lit == f2, "{g}: final matrix differs from the reference");
        ensure!(lit.invert().map_err(|e| e.to_string())? == f2_inv, "{g}: final inverse differs");
        let golden = if kk { golden::kk_brackets() } else { golden::zero_brackets() };
        for (x, y, k) in golden {
            ensure!(o.brackets.get(&x, &y) == k, "{g}: {{{x}, {y}}} = {}", o.brackets.get(&x, &y));
        }
    }
    Ok("null modes, constraints, contraction identity, inverses and brackets match".into())
}

fn equivalence(c: &Compactified) -> Verdict {
    let mut matches = Vec::new();
    for (kk, name) in [(false, "coulomb"), (true, "axial")] {
        let a = if kk { &c.kk.1 } else { &c.zero.1 };
        let o = fj_run(c, kk, name).map_err(|e| e.to_string())?;
        let gf = impose_gauge(&a.constraints, name, &gauge(&c.spec, name)).map_err(|e| e.to_string())?;
        let phys = o.state.physical_variables();
        let dirac = dirac_table(&phys, &gf).map_err(|e| e.to_string())?;
        let diff = compare_brackets(&dirac, &o.brackets.restrict(&phys));
        ensure!(diff.is_clean(), "{name}: {} mismatches", diff.mismatches.len());
        matches.push(diff.matches);
    }
    match fj_run(c, true, "dirac_axial_pair") {
        Err(FjError::GaugeNeeded { level, rank, size, .. }) => Ok(format!(
            "{} and {} matching entries; wrong gauge singular at level {level} (rank {rank} of {size})",
            matches[0], matches[1]
        )),
        Ok(_) => Err("wrong gauge produced an invertible matrix".into()),
        Err(e) => Err(format!("wrong gauge: {e}")),
    }
}

fn unitary(c: &Compactified) -> Verdict {
    let g = c.kk.1.generator.as_ref().ok_or("no generator")?;
    let u = unitary_gauge_reduce(&c.kk.0.density, g)
        .map_err(|e| e.to_string())?
        .ok_or("nothing to absorb")?;
    ensure!(u.absorbed == atom(&c.spec, "A{n}[5]"), "absorbed {}", u.absorbed);
    ensure!(
        u.density.base_atoms().iter().all(|a| a.comp != Component::Fifth),
        "A_5 survives"
    );
    ensure!(
        hamforge_core::symbolic::equal_mod_divergence(&u.density, &expr(&c.spec, fixtures::UNITARY_KK)),
        "density differs: {}",
        u.density
    );
    let coefficient = |f: &str| -> Option<Expr> {
        let a: Atom = atom(&c.spec, f);
        u.spectrum.iter().find(|e| e.field == a).map(|e| e.coefficient.clone())
    };
    ensure!(coefficient("A{n}[0]") == Some(expr(&c.spec, "m^2 + 1/2*n^2*R^(-2)")), "vector mass");
    ensure!(coefficient("theta{n}") == Some(expr(&c.spec, "m^2*n^2*R^(-2)")), "scalar mass");
    Ok("masses m² + n²/2R² and m²n²/R², no A_5".into())
}

fn lattice() -> Verdict {
    let start = Instant::now();
    let points = [
        LatticeConfig::new(8, 1.0, 1.0, 1).map_err(|e| e.to_string())?,
        LatticeConfig::new(8, 2.0, 3.0, 2).map_err(|e| e.to_string())?,
    ];
    let pairs = [
        ("coulomb C", golden::coulomb_c(), golden::coulomb_c_inverse()),
        ("axial C", golden::axial_c(), golden::axial_c_inverse()),
        ("zero-mode f", golden::zero_f2_literal(), golden::zero_f2_inverse_literal()),
        ("excited f", golden::kk_f2_literal(), golden::kk_f2_inverse_literal()),
    ];
    let mut worst = 0.0f64;
    for cfg in &points {
        for (name, m, inv) in &pairs {
            let cert = verify_inverse(m, inv, cfg, 1e-10).map_err(|e| format!("{name}: {e}"))?;
            worst = worst.max(cert.residual);
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed.as_secs() < 60, "took {elapsed:?}");
    Ok(format!("8³, 2 points, worst residual {worst:.1e}, {:.2} s", elapsed.as_secs_f64()))
}

fn properties() -> Verdict {
    let mut total = 0;
    for (name, suite) in props::suites() {
        let n = suite()?;
        ensure!(n >= 200, "{name}: only {n} cases");
        total += n;
    }
    Ok(format!("{} suites, {total} cases, seed {:#x}", props::suites().len(), props::seed()))
}

#[test]
fn acceptance_criteria() {
    let c = stueckelberg();
    let criteria: Vec<Criterion> = vec![
        ("compactification", Box::new(compactification)),
        ("constraints", Box::new(|| constraints(&c))),
        ("degrees of freedom", Box::new(|| dof(&c))),
        ("gauge transformations", Box::new(|| gauge_transformations(&c))),
        ("Dirac brackets", Box::new(|| dirac_brackets(&c))),
        ("Faddeev-Jackiw reduction", Box::new(|| fj(&c))),
        ("Dirac/FJ equivalence", Box::new(|| equivalence(&c))),
        ("unitary gauge", Box::new(|| unitary(&c))),
        ("lattice certification", Box::new(lattice)),
        ("property suites", Box::new(properties)),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let verdict = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        match verdict {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                println!("FAIL {:>2} {name}: {why}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
