mod common;

use common::{atom, expr, gauge, stueckelberg};
use hamforge_core::dirac::*;
use hamforge_core::fixtures::{self, golden};
use hamforge_core::symbolic::{equal_mod_divergence, Atom, AtomKind, KernelMatrix};

fn momenta_match(a: &DiracAnalysis, spec: &hamforge_core::dsl::TheorySpec, table: &[(&str, &str)]) {
    assert_eq!(a.momenta.len(), table.len());
    for (mom, def) in table {
        let p = atom(spec, mom);
        let got = a.momenta.iter().find(|m| m.momentum == p).unwrap_or_else(|| panic!("no momentum {p}"));
        assert_eq!(got.definition, expr(spec, def), "momentum {p}");
    }
}

#[test]
fn momenta_of_both_sectors() {
    let c = stueckelberg();
    momenta_match(&c.zero.1, &c.spec, fixtures::MOMENTA_ZERO);
    momenta_match(&c.kk.1, &c.spec, fixtures::MOMENTA_KK);
}

#[test]
fn hessian_rank_and_primaries() {
    let c = stueckelberg();
    for (a, rank, size, primary) in [
        (&c.zero.1, 4, 5, fixtures::PRIMARY_ZERO),
        (&c.kk.1, 5, 6, fixtures::PRIMARY_KK),
    ] {
        assert_eq!(a.hessian.rank, rank);
        assert_eq!(a.hessian.velocities.len(), size);
        assert_eq!(a.hessian.null_vectors.len(), 1);
        let prims: Vec<_> = a.hessian.primaries.iter().map(|p| p.expr.clone()).collect();
        assert_eq!(prims, vec![expr(&c.spec, primary)]);
    }
    // summed over the zero mode and k − 1 excited modes
    let rank = Affine::tower(4, 5);
    assert_eq!(rank.to_string(), "5k - 1");
}

#[test]
fn canonical_hamiltonians_agree_up_to_divergence() {
    let c = stueckelberg();
    assert!(equal_mod_divergence(&c.zero.1.h_canonical, &expr(&c.spec, fixtures::HC_ZERO)));
    assert!(equal_mod_divergence(&c.kk.1.h_canonical, &expr(&c.spec, fixtures::HC_KK)));
    // the literal density differs from the printed one by ∂ᵢ(A₀Πⁱ) only
    assert_ne!(c.zero.1.h_canonical, expr(&c.spec, fixtures::HC_ZERO));
}

#[test]
fn primary_hamiltonian_adds_multiplier_terms() {
    let c = stueckelberg();
    for a in [&c.zero.1, &c.kk.1] {
        let extra = a.h_primary.sub(&a.h_canonical);
        assert!(extra.contains_kind(AtomKind::Multiplier));
        assert_eq!(extra.len(), 1);
    }
}

#[test]
fn secondary_constraints_are_gauss_laws() {
    let c = stueckelberg();
    for (a, gauss) in [(&c.zero.1, fixtures::GAUSS_ZERO), (&c.kk.1, fixtures::GAUSS_KK)] {
        let sec: Vec<_> = a.constraints.of_stage(Stage::Secondary).collect();
        assert_eq!(sec.len(), 1);
        assert_eq!(sec[0].expr, expr(&c.spec, gauss));
        assert_eq!(a.closure.productive_rounds, 1);
        assert!(a.closure.multiplier_conditions.is_empty());
    }
}

#[test]
fn all_constraints_first_class() {
    let c = stueckelberg();
    for a in [&c.zero.1, &c.kk.1] {
        assert_eq!(a.constraints.items.len(), 2);
        assert_eq!(a.first_class(), 2);
        assert_eq!(a.second_class(), 0);
        let m = constraint_matrix(&a.constraints.exprs()).unwrap();
        assert!(m.is_zero());
    }
}

#[test]
fn degrees_of_freedom() {
    let c = stueckelberg();
    assert_eq!(c.zero.1.dof, 3);
    assert_eq!(c.kk.1.dof, 4);
    let total = count_dof(Affine::tower(10, 12), Affine::tower(2, 2), Affine::fixed(0)).unwrap();
    assert_eq!(Affine::tower(10, 12).to_string(), "12k - 2");
    assert_eq!(Affine::tower(2, 2).to_string(), "2k");
    assert_eq!(total.to_string(), "4k - 1");
    assert_eq!(total.at(1), 3);
}

#[test]
fn gauge_transformations() {
    let c = stueckelberg();
    for (a, table) in [(&c.zero.1, fixtures::GAUGE_ZERO), (&c.kk.1, fixtures::GAUGE_KK)] {
        let g = a.generator.as_ref().unwrap();
        let fields: Vec<&(Atom, _)> = g
            .transformations
            .iter()
            .filter(|(x, d)| x.kind == AtomKind::Field && !d.is_zero())
            .collect();
        assert_eq!(fields.len(), table.len());
        for (f, d) in table {
            let x = atom(&c.spec, f);
            let got = &g.transformations.iter().find(|(y, _)| *y == x).unwrap().1;
            assert_eq!(*got, expr(&c.spec, d), "δ{x}");
        }
    }
}

#[test]
fn extended_hamiltonian_carries_one_multiplier_per_first_class_constraint() {
    let c = stueckelberg();
    let h = c.kk.1.h_extended.as_ref().unwrap();
    let mults: std::collections::BTreeSet<_> = h
        .base_atoms()
        .into_iter()
        .filter(|a| a.kind == AtomKind::Multiplier)
        .collect();
    assert_eq!(mults.len(), 2);
}

#[test]
fn unitary_gauge_spectrum() {
    let c = stueckelberg();
    let g = c.kk.1.generator.as_ref().unwrap();
    let u = unitary_gauge_reduce(&c.kk.0.density, g).unwrap().unwrap();
    assert_eq!(u.absorbed, atom(&c.spec, "A{n}[5]"));
    assert!(u.density.base_atoms().iter().all(|a| a.comp != hamforge_core::symbolic::Component::Fifth));
    assert!(equal_mod_divergence(&u.density, &expr(&c.spec, fixtures::UNITARY_KK)));
    let vector = u.spectrum.iter().find(|e| e.field == atom(&c.spec, "A{n}[0]")).unwrap();
    assert_eq!(vector.coefficient, expr(&c.spec, "m^2 + 1/2*n^2*R^(-2)"));
    let scalar = u.spectrum.iter().find(|e| e.field == atom(&c.spec, "theta{n}")).unwrap();
    assert_eq!(scalar.coefficient, expr(&c.spec, "m^2*n^2*R^(-2)"));
    // the zero mode has no fifth component to absorb
    let g0 = c.zero.1.generator.as_ref().unwrap();
    assert!(unitary_gauge_reduce(&c.zero.0.density, g0).unwrap().is_none());
}

fn check_c(gf: &GaugeFixing, c: &KernelMatrix, printed_inverse: &KernelMatrix, inverse: &KernelMatrix) {
    assert_eq!(&gf.c_matrix, c);
    assert_eq!(&gf.c_inverse, inverse);
    assert!(c.mul(inverse).unwrap().is_identity());
    assert!(inverse.mul(c).unwrap().is_identity());
    assert!(!c.mul(printed_inverse).unwrap().is_identity());
}

#[test]
fn coulomb_gauge_matrix_and_inverse() {
    let c = stueckelberg();
    let gf = impose_gauge(&c.zero.1.constraints, "coulomb", &gauge(&c.spec, "coulomb")).unwrap();
    assert_eq!(gf.constraints.count(Class::Second), 4);
    check_c(&gf, &golden::coulomb_c(), &golden::coulomb_c_inverse_printed(), &golden::coulomb_c_inverse());
}

#[test]
fn axial_gauge_matrix_and_inverse() {
    let c = stueckelberg();
    let gf = impose_gauge(&c.kk.1.constraints, "axial", &gauge(&c.spec, "axial")).unwrap();
    check_c(&gf, &golden::axial_c(), &golden::axial_c_inverse_printed(), &golden::axial_c_inverse());
}

#[test]
fn incomplete_gauge_is_rejected() {
    let c = stueckelberg();
    let err = impose_gauge(&c.kk.1.constraints, "dirac_axial_pair", &gauge(&c.spec, "dirac_axial_pair")).unwrap_err();
    assert!(matches!(err, DiracError::IncompleteGauge { .. }), "{err}");
}

#[test]
fn dirac_brackets_zero_mode() {
    let c = stueckelberg();
    let gf = impose_gauge(&c.zero.1.constraints, "coulomb", &gauge(&c.spec, "coulomb")).unwrap();
    let t = dirac_table(&c.zero.1.phase_atoms(), &gf).unwrap();
    for (a, b, k) in golden::zero_brackets() {
        assert_eq!(t.get(&a, &b), k, "{{{a}, {b}}}");
    }
    assert!(t.antisymmetry_defects().unwrap().is_empty());
}

#[test]
fn dirac_brackets_kk_mode() {
    let c = stueckelberg();
    let gf = impose_gauge(&c.kk.1.constraints, "axial", &gauge(&c.spec, "axial")).unwrap();
    let t = dirac_table(&c.kk.1.phase_atoms(), &gf).unwrap();
    for (a, b, k) in golden::kk_brackets() {
        assert_eq!(t.get(&a, &b), k, "{{{a}, {b}}}");
    }
    assert!(t.antisymmetry_defects().unwrap().is_empty());
}
