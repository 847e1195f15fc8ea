#![allow(dead_code)]

pub mod props;

use hamforge_core::dirac::{analyze_sector, sectors, DiracAnalysis, Sector, DEFAULT_ITERATION_CAP};
use hamforge_core::dsl::{parse_expr, parse_theory, TheorySpec};
use hamforge_core::fixtures;
use hamforge_core::kk::{expand_on_orbifold, integrate_extra_dimension};
use hamforge_core::symbolic::{Atom, Expr};

pub struct Compactified {
    pub spec: TheorySpec,
    pub zero: (Sector, DiracAnalysis),
    pub kk: (Sector, DiracAnalysis),
}

pub fn stueckelberg() -> Compactified {
    let spec = parse_theory(fixtures::STUECKELBERG_5D).unwrap();
    let exp = expand_on_orbifold(&spec, None).unwrap();
    let l4 = integrate_extra_dimension(&spec, &exp).unwrap();
    let mut secs = sectors(&l4).into_iter();
    let z = secs.next().unwrap();
    let k = secs.next().unwrap();
    assert_eq!(z.name, "zero_mode");
    assert_eq!(k.name, "kk_mode");
    let za = analyze_sector(&z, DEFAULT_ITERATION_CAP).unwrap();
    let ka = analyze_sector(&k, DEFAULT_ITERATION_CAP).unwrap();
    Compactified {
        spec,
        zero: (z, za),
        kk: (k, ka),
    }
}

pub fn expr(spec: &TheorySpec, src: &str) -> Expr {
    parse_expr(src, spec).unwrap_or_else(|e| panic!("`{src}`: {e}"))
}

pub fn atom(spec: &TheorySpec, src: &str) -> Atom {
    let e = expr(spec, src);
    let atoms = e.atoms();
    assert_eq!(atoms.len(), 1, "`{src}` is not a single atom");
    atoms.into_iter().next().unwrap()
}

pub fn gauge(spec: &TheorySpec, name: &str) -> Vec<Expr> {
    spec.gauge_set(name).unwrap().conditions.clone()
}
