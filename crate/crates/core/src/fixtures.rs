//! Shipped theory files and reference results used by tests and the CLI.

pub const STUECKELBERG_5D: &str = include_str!("../../../fixtures/stueckelberg5d.thy");
pub const MAXWELL_4D: &str = include_str!("../../../fixtures/maxwell4d.thy");
pub const PROCA_4D: &str = include_str!("../../../fixtures/proca4d.thy");

/// Reference 4D effective density of the compactified Stueckelberg theory,
/// zero-mode block followed by the representative excited block.
pub const STUECKELBERG_4D_ZERO: &str = "-1/4*(d[mu] A{0}[nu] - d[nu] A{0}[mu])*(d[mu] A{0}[nu] - d[nu] A{0}[mu]) \
     + m^2*(A{0}[mu] + d[mu] theta{0})*(A{0}[mu] + d[mu] theta{0})";
pub const STUECKELBERG_4D_KK: &str = "-1/4*(d[mu] A{n}[nu] - d[nu] A{n}[mu])*(d[mu] A{n}[nu] - d[nu] A{n}[mu]) \
     + m^2*(A{n}[mu] + d[mu] theta{n})*(A{n}[mu] + d[mu] theta{n}) \
     + 1/2*(d[mu] A{n}[5] + n/R*A{n}[mu])*(d[mu] A{n}[5] + n/R*A{n}[mu]) \
     - m^2*(A{n}[5] - n/R*theta{n})*(A{n}[5] - n/R*theta{n})";

/// Canonical Hamiltonian densities as printed, per sector. Contractions
/// follow the DSL variance rule, so Euclidean squares of like-variance
/// pairs appear with an explicit minus sign.
pub const HC_ZERO: &str = "-1/2*pi(A){0}[i]*pi(A){0}[i] + 1/4*m^(-2)*pi(theta){0}*pi(theta){0} \
     + 1/4*(d[i] A{0}[j] - d[j] A{0}[i])*(d[i] A{0}[j] - d[j] A{0}[i]) \
     - A{0}[0]*(d[i] pi(A){0}[i] + pi(theta){0}) \
     - m^2*(A{0}[i] + d[i] theta{0})*(A{0}[i] + d[i] theta{0})";
pub const HC_KK: &str = "-1/2*pi(A){n}[i]*pi(A){n}[i] + 1/4*m^(-2)*pi(theta){n}*pi(theta){n} \
     + 1/4*(d[i] A{n}[j] - d[j] A{n}[i])*(d[i] A{n}[j] - d[j] A{n}[i]) \
     - A{n}[0]*(d[i] pi(A){n}[i] + n/R*pi(A){n}[5] + pi(theta){n}) \
     - m^2*(A{n}[i] + d[i] theta{n})*(A{n}[i] + d[i] theta{n}) \
     + 1/2*pi(A){n}[5]*pi(A){n}[5] \
     - 1/2*(d[i] A{n}[5] + n/R*A{n}[i])*(d[i] A{n}[5] + n/R*A{n}[i]) \
     + m^2*(A{n}[5] - n/R*theta{n})*(A{n}[5] - n/R*theta{n})";

/// Momentum definitions `(momentum, definition)` per sector.
pub const MOMENTA_ZERO: &[(&str, &str)] = &[
    ("pi(A){0}[0]", "0"),
    ("pi(A){0}[1]", "d[0] A{0}[1] - d[1] A{0}[0]"),
    ("pi(A){0}[2]", "d[0] A{0}[2] - d[2] A{0}[0]"),
    ("pi(A){0}[3]", "d[0] A{0}[3] - d[3] A{0}[0]"),
    ("pi(theta){0}", "2*m^2*(A{0}[0] + d[0] theta{0})"),
];
pub const MOMENTA_KK: &[(&str, &str)] = &[
    ("pi(A){n}[0]", "0"),
    ("pi(A){n}[1]", "d[0] A{n}[1] - d[1] A{n}[0]"),
    ("pi(A){n}[2]", "d[0] A{n}[2] - d[2] A{n}[0]"),
    ("pi(A){n}[3]", "d[0] A{n}[3] - d[3] A{n}[0]"),
    ("pi(A){n}[5]", "d[0] A{n}[5] + n/R*A{n}[0]"),
    ("pi(theta){n}", "2*m^2*(A{n}[0] + d[0] theta{n})"),
];

pub const PRIMARY_ZERO: &str = "pi(A){0}[0]";
pub const PRIMARY_KK: &str = "pi(A){n}[0]";
pub const GAUSS_ZERO: &str = "d[i] pi(A){0}[i] + pi(theta){0}";
pub const GAUSS_KK: &str = "d[i] pi(A){n}[i] + n/R*pi(A){n}[5] + pi(theta){n}";

/// Excited-mode density after absorbing A₅ into the gauge parameter.
pub const UNITARY_KK: &str = "-1/4*(d[mu] A{n}[nu] - d[nu] A{n}[mu])*(d[mu] A{n}[nu] - d[nu] A{n}[mu]) \
     + (m^2 + 1/2*n^2*R^(-2))*A{n}[mu]*A{n}[mu] + 2*m^2*A{n}[mu]*d[mu] theta{n} \
     + m^2*d[mu] theta{n}*d[mu] theta{n} - m^2*n^2*R^(-2)*theta{n}*theta{n}";

/// FJ constraint lists at the final level, gauge condition last.
pub const FJ_CONSTRAINTS_ZERO: &[&str] = &[GAUSS_ZERO, "-d[i] A{0}[i]"];
pub const FJ_CONSTRAINTS_KK: &[&str] = &[GAUSS_KK, "A{n}[5]"];

pub mod golden {
    //! Reference operator matrices and bracket tables written in block
    //! form, with vector blocks expanded to their three spatial components.

    use crate::symbolic::{q, Atom, Component, Kernel, KernelMatrix, Mode, Params};

    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub enum Block {
        Vector,
        Scalar,
    }

    /// A block entry; the vector index of `Grad` sits on whichever side is
    /// the vector block.
    #[derive(Debug, Clone)]
    pub enum Entry {
        S(Kernel),
        Delta(Kernel),
        Transverse(Kernel),
        Grad(Kernel),
    }

    fn width(b: Block) -> usize {
        match b {
            Block::Vector => 3,
            Block::Scalar => 1,
        }
    }

    fn offsets(blocks: &[Block]) -> Vec<usize> {
        blocks
            .iter()
            .scan(0, |acc, b| {
                let o = *acc;
                *acc += width(*b);
                Some(o)
            })
            .collect()
    }

    fn cell(e: &Entry, i: usize, j: usize, rb: Block, cb: Block) -> Kernel {
        let d = |a: usize| Kernel::partial(a as u8 + 1);
        match e {
            Entry::S(k) => k.clone(),
            Entry::Delta(k) => {
                if i == j {
                    k.clone()
                } else {
                    Kernel::zero()
                }
            }
            Entry::Transverse(k) => {
                let dd = d(i).mul(&d(j)).mul(&Kernel::laplacian(-1));
                let base = if i == j { Kernel::one().sub(&dd) } else { dd.neg() };
                k.mul(&base)
            }
            Entry::Grad(k) => {
                let idx = if rb == Block::Vector { i } else { j };
                debug_assert!(rb == Block::Vector || cb == Block::Vector);
                k.mul(&d(idx))
            }
        }
    }

    pub fn expand(blocks: &[Block], entries: &[(usize, usize, Entry)]) -> KernelMatrix {
        let off = offsets(blocks);
        let n: usize = blocks.iter().map(|b| width(*b)).sum();
        let mut m = KernelMatrix::zeros(n, n);
        for (r, c, e) in entries {
            for i in 0..width(blocks[*r]) {
                for j in 0..width(blocks[*c]) {
                    m.set(off[*r] + i, off[*c] + j, cell(e, i, j, blocks[*r], blocks[*c]));
                }
            }
        }
        m
    }

    /// A mode `(v_1 ω, v_2 ω, …)` in block form; `Grad` entries expand to
    /// `k ∂_i` per component.
    pub fn expand_mode(blocks: &[Block], entries: &[(usize, Entry)]) -> Vec<Kernel> {
        let off = offsets(blocks);
        let n: usize = blocks.iter().map(|b| width(*b)).sum();
        let mut v = vec![Kernel::zero(); n];
        for (r, e) in entries {
            for i in 0..width(blocks[*r]) {
                v[off[*r] + i] = cell(e, i, 0, blocks[*r], Block::Scalar);
            }
        }
        v
    }

    fn k(n: i64) -> Kernel {
        Kernel::int(n)
    }

    /// `c · n^a · R^b`.
    fn nr(c: i64, a: i32, b: i32) -> Kernel {
        Kernel::scalar(q(c), Params::symbol("n", a).mul(&Params::symbol("R", b)))
    }

    fn lap(p: i32) -> Kernel {
        Kernel::laplacian(p)
    }

    use Block::{Scalar as S_, Vector as V_};
    use Entry::*;

    // ---- zero mode: ξ = (A_i, Π^i, θ, P, A₀ | ρ, η)

    pub fn zero_f0() -> KernelMatrix {
        expand(
            &[V_, V_, S_, S_, S_],
            &[(0, 1, Delta(k(-1))), (1, 0, Delta(k(1))), (2, 3, S(k(-1))), (3, 2, S(k(1)))],
        )
    }

    pub fn zero_v0() -> Vec<Kernel> {
        expand_mode(&[V_, V_, S_, S_, S_], &[(4, S(k(1)))])
    }

    /// Mode of the level-0 matrix extended by the Gauss-law gradient row.
    pub fn zero_v1() -> Vec<Kernel> {
        expand_mode(&[V_, V_, S_, S_, S_, S_], &[(0, Grad(k(-1))), (2, S(k(1))), (5, S(k(1)))])
    }

    pub fn zero_f1_literal() -> KernelMatrix {
        expand(
            &[V_, V_, S_, S_, S_],
            &[
                (0, 1, Delta(k(-1))),
                (1, 0, Delta(k(1))),
                (1, 4, Grad(k(-1))),
                (2, 3, S(k(-1))),
                (3, 2, S(k(1))),
                (3, 4, S(k(-1))),
                (4, 1, Grad(k(1))),
                (4, 3, S(k(1))),
            ],
        )
    }

    pub fn zero_f2_literal() -> KernelMatrix {
        expand(
            &[V_, V_, S_, S_, S_, S_],
            &[
                (0, 1, Delta(k(-1))),
                (0, 5, Grad(k(-1))),
                (1, 0, Delta(k(1))),
                (1, 4, Grad(k(-1))),
                (2, 3, S(k(-1))),
                (3, 2, S(k(1))),
                (3, 4, S(k(-1))),
                (4, 1, Grad(k(1))),
                (4, 3, S(k(1))),
                (5, 0, Grad(k(1))),
            ],
        )
    }

    pub fn zero_f2_inverse_literal() -> KernelMatrix {
        expand(
            &[V_, V_, S_, S_, S_, S_],
            &[
                (0, 1, Transverse(k(1))),
                (0, 5, Grad(lap(-1))),
                (1, 0, Transverse(k(-1))),
                (1, 2, Grad(lap(-1))),
                (1, 4, Grad(lap(-1))),
                (2, 1, Grad(lap(-1).neg())),
                (2, 3, S(k(1))),
                (2, 5, S(lap(-1))),
                (3, 2, S(k(-1))),
                (4, 1, Grad(lap(-1).neg())),
                (4, 5, S(lap(-1))),
                (5, 0, Grad(lap(-1).neg())),
                (5, 2, S(lap(-1).neg())),
                (5, 4, S(lap(-1).neg())),
            ],
        )
    }

    // ---- excited modes: ξ = (A_i, Π^i, A₅, Π⁵, θ, P, A₀ | ρ, η)

    pub fn kk_f0() -> KernelMatrix {
        expand(
            &[V_, V_, S_, S_, S_, S_, S_],
            &[
                (0, 1, Delta(k(-1))),
                (1, 0, Delta(k(1))),
                (2, 3, S(k(-1))),
                (3, 2, S(k(1))),
                (4, 5, S(k(-1))),
                (5, 4, S(k(1))),
            ],
        )
    }

    pub fn kk_v0() -> Vec<Kernel> {
        expand_mode(&[V_, V_, S_, S_, S_, S_, S_], &[(6, S(k(1)))])
    }

    /// The mode as printed, `(−∂ᵢω, 0, −(n/R)ω, 0, −ω, 0, 0, −ω)`.
    pub fn kk_v1_printed() -> Vec<Kernel> {
        expand_mode(
            &[V_, V_, S_, S_, S_, S_, S_, S_],
            &[(0, Grad(k(-1))), (2, S(nr(-1, 1, -1))), (4, S(k(-1))), (7, S(k(-1)))],
        )
    }

    pub fn kk_f1_literal() -> KernelMatrix {
        expand(
            &[V_, V_, S_, S_, S_, S_, S_],
            &[
                (0, 1, Delta(k(-1))),
                (1, 0, Delta(k(1))),
                (1, 6, Grad(k(-1))),
                (2, 3, S(k(-1))),
                (3, 2, S(k(1))),
                (3, 6, S(nr(-1, 1, -1))),
                (4, 5, S(k(-1))),
                (5, 4, S(k(1))),
                (5, 6, S(k(-1))),
                (6, 1, Grad(k(1))),
                (6, 3, S(nr(1, 1, -1))),
                (6, 5, S(k(1))),
            ],
        )
    }

    /// Reconstructed from the variables and one-forms; agrees with every
    /// legible printed entry.
    pub fn kk_f2_literal() -> KernelMatrix {
        expand(
            &[V_, V_, S_, S_, S_, S_, S_, S_],
            &[
                (0, 1, Delta(k(-1))),
                (1, 0, Delta(k(1))),
                (1, 6, Grad(k(-1))),
                (2, 3, S(k(-1))),
                (2, 7, S(k(-1))),
                (3, 2, S(k(1))),
                (3, 6, S(nr(-1, 1, -1))),
                (4, 5, S(k(-1))),
                (5, 4, S(k(1))),
                (5, 6, S(k(-1))),
                (6, 1, Grad(k(1))),
                (6, 3, S(nr(1, 1, -1))),
                (6, 5, S(k(1))),
                (7, 2, S(k(1))),
            ],
        )
    }

    pub fn kk_f2_inverse_literal() -> KernelMatrix {
        let rn = |c| nr(c, -1, 1);
        expand(
            &[V_, V_, S_, S_, S_, S_, S_, S_],
            &[
                (0, 1, Delta(k(1))),
                (0, 3, Grad(rn(-1))),
                (0, 7, Grad(rn(1))),
                (1, 0, Delta(k(-1))),
                (2, 7, S(k(1))),
                (3, 0, Grad(rn(1))),
                (3, 4, S(rn(1))),
                (3, 6, S(rn(1))),
                (4, 3, S(rn(-1))),
                (4, 5, S(k(1))),
                (4, 7, S(rn(1))),
                (5, 4, S(k(-1))),
                (6, 3, S(rn(-1))),
                (6, 7, S(rn(1))),
                (7, 0, Grad(rn(-1))),
                (7, 2, S(k(-1))),
                (7, 4, S(rn(-1))),
                (7, 6, S(rn(-1))),
            ],
        )
    }

    // ---- Dirac constraint matrices, rows in the order
    // (gauge₁, Gauss, Π⁰, gauge₂)

    pub fn coulomb_c() -> KernelMatrix {
        KernelMatrix::from_rows(vec![
            vec![k(0), lap(1), k(0), k(0)],
            vec![lap(1).neg(), k(0), k(0), k(0)],
            vec![k(0), k(0), k(0), k(-1)],
            vec![k(0), k(0), k(1), k(0)],
        ])
    }

    pub fn coulomb_c_inverse_printed() -> KernelMatrix {
        KernelMatrix::from_rows(vec![
            vec![k(0), lap(-1).neg(), k(0), k(0)],
            vec![lap(-1), k(0), k(0), k(0)],
            vec![k(0), k(0), k(1), k(0)],
            vec![k(0), k(0), k(0), k(-1)],
        ])
    }

    pub fn coulomb_c_inverse() -> KernelMatrix {
        KernelMatrix::from_rows(vec![
            vec![k(0), lap(-1).neg(), k(0), k(0)],
            vec![lap(-1), k(0), k(0), k(0)],
            vec![k(0), k(0), k(0), k(1)],
            vec![k(0), k(0), k(-1), k(0)],
        ])
    }

    pub fn axial_c() -> KernelMatrix {
        KernelMatrix::from_rows(vec![
            vec![k(0), nr(1, 1, -1), k(0), k(1)],
            vec![nr(-1, 1, -1), k(0), k(0), k(0)],
            vec![k(0), k(0), k(0), nr(-1, 1, -1)],
            vec![k(-1), k(0), nr(1, 1, -1), k(0)],
        ])
    }

    pub fn axial_c_inverse_printed() -> KernelMatrix {
        KernelMatrix::from_rows(vec![
            vec![k(0), nr(-1, -1, 1), k(0), k(0)],
            vec![nr(1, -1, 1), k(0), k(1), k(0)],
            vec![k(0), k(-1), k(0), nr(1, -1, 1)],
            vec![k(0), k(0), nr(-1, -1, 1), k(0)],
        ])
    }

    pub fn axial_c_inverse() -> KernelMatrix {
        KernelMatrix::from_rows(vec![
            vec![k(0), nr(-1, -1, 1), k(0), k(0)],
            vec![nr(1, -1, 1), k(0), nr(1, -2, 2), k(0)],
            vec![k(0), nr(-1, -2, 2), k(0), nr(1, -1, 1)],
            vec![k(0), k(0), nr(-1, -1, 1), k(0)],
        ])
    }

    // ---- brackets among physical fields, as listed

    fn a(mode: &Mode, i: u8) -> Atom {
        Atom::field("A", mode.clone(), Component::Space(i))
    }
    fn pi(mode: &Mode, i: u8) -> Atom {
        Atom::momentum("A", mode.clone(), Component::Space(i))
    }

    /// `{A_i, Π^j} = δ − ∂_i∂_j∇⁻²`, `{P, θ} = −1`, `{Π^i, θ} = ∂_i∇⁻²`.
    pub fn zero_brackets() -> Vec<(Atom, Atom, Kernel)> {
        let m = Mode::Zero;
        let th = Atom::field("theta", m.clone(), Component::Scalar);
        let p = th.conjugate_momentum();
        let mut out = Vec::new();
        for i in 1..=3u8 {
            for j in 1..=3u8 {
                let dd = Kernel::partial(i).mul(&Kernel::partial(j)).mul(&lap(-1));
                let delta = if i == j { Kernel::one() } else { Kernel::zero() };
                out.push((a(&m, i), pi(&m, j), delta.sub(&dd)));
            }
        }
        out.push((p, th.clone(), k(-1)));
        for i in 1..=3u8 {
            out.push((pi(&m, i), th.clone(), Kernel::partial(i).mul(&lap(-1))));
        }
        out
    }

    /// `{A_i, Π^j} = δ`, `{Π⁵, A_i} = (R/n)∂_i`, `{θ, P} = 1`.
    pub fn kk_brackets() -> Vec<(Atom, Atom, Kernel)> {
        let m = Mode::kk("n");
        let th = Atom::field("theta", m.clone(), Component::Scalar);
        let p5 = Atom::momentum("A", m.clone(), Component::Fifth);
        let mut out = Vec::new();
        for i in 1..=3u8 {
            for j in 1..=3u8 {
                out.push((a(&m, i), pi(&m, j), if i == j { Kernel::one() } else { Kernel::zero() }));
            }
        }
        for i in 1..=3u8 {
            out.push((p5.clone(), a(&m, i), nr(1, -1, 1).mul(&Kernel::partial(i))));
        }
        out.push((th.clone(), th.conjugate_momentum(), Kernel::one()));
        out
    }
}

/// Gauge transformations of the configuration fields, `(field, δfield)`.
pub const GAUGE_ZERO: &[(&str, &str)] = &[
    ("A{0}[0]", "-d[0] gauge(eps){0}"),
    ("A{0}[1]", "-d[1] gauge(eps){0}"),
    ("A{0}[2]", "-d[2] gauge(eps){0}"),
    ("A{0}[3]", "-d[3] gauge(eps){0}"),
    ("theta{0}", "gauge(eps){0}"),
];
pub const GAUGE_KK: &[(&str, &str)] = &[
    ("A{n}[0]", "-d[0] gauge(eps){n}"),
    ("A{n}[1]", "-d[1] gauge(eps){n}"),
    ("A{n}[2]", "-d[2] gauge(eps){n}"),
    ("A{n}[3]", "-d[3] gauge(eps){n}"),
    ("A{n}[5]", "n/R*gauge(eps){n}"),
    ("theta{n}", "gauge(eps){n}"),
];

/// Reference analysis values that the engine does not reproduce; the report
/// prints them next to the computed ones as warnings.
pub const REFERENCE_HESSIAN_RANK: &str = "5k - 6";

/// Bracket tables with a known closed form, keyed by theory, sector and
/// gauge.
pub fn reference_brackets(theory: &str, sector: &str, gauge: &str) -> Option<Vec<(crate::symbolic::Atom, crate::symbolic::Atom, crate::symbolic::Kernel)>> {
    match (theory, sector, gauge) {
        ("stueckelberg5d", "zero_mode", "coulomb") => Some(golden::zero_brackets()),
        ("stueckelberg5d", "kk_mode", "axial") => Some(golden::kk_brackets()),
        _ => None,
    }
}
