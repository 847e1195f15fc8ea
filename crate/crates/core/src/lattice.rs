//! Numerical certification of operator identities on a periodic cubic lattice.
//!
//! Field-independent kernels are translation invariant, so on a periodic
//! lattice they discretize to (block) circulant operators. Circulants are
//! diagonal in the plane-wave basis, which is how products and residuals are
//! evaluated here: a [`Circulant`] stores its eigenvalue at each of the `N³`
//! lattice wave vectors. [`Stencil`] is the exact real-space counterpart for
//! polynomial kernels, with rational taps.
//!
//! Two difference schemes are available. [`Scheme::Staggered`] (the default)
//! maps `∂ᵢ` to the one-cell central difference `(f(x + h/2) − f(x − h/2))/h`
//! on the staggered grid, so that `Σ ∂ᵢ²` is exactly the 7-point Laplacian
//! and the only zero mode of `∇²` is the constant. [`Scheme::Central`] maps
//! `∂ᵢ` to the two-cell difference `(f(x + h) − f(x − h))/2h`; its `Σ ∂ᵢ²` is
//! the wide Laplacian, whose zero modes are the eight wave vectors with every
//! component in `{0, π/h}`.
//!
//! `∇⁻²` is the inverse of the discrete Laplacian off its zero modes and zero
//! on them. All checks are made on the complement of those modes, the lattice
//! analogue of mean-zero functions.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::brackets::BracketTable;
use crate::symbolic::{Atom, Kernel, KernelMatrix, Q};

const ZERO_MODE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    Staggered,
    Central,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeConfig {
    pub n: usize,
    pub h: f64,
    pub scheme: Scheme,
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error("invalid lattice configuration: {0}")]
    InvalidConfig(String),
    #[error("kernel {0} depends on fields; only field-independent kernels can be discretized")]
    FieldDependent(String),
    #[error("no value assigned to parameter {0}")]
    Unassigned(String),
    #[error("kernel {0} contains ∇⁻² and has no finite stencil")]
    NotPolynomial(String),
    #[error("matrix shapes do not allow the product: {0}")]
    Shape(String),
    #[error("residual {residual:.3e} exceeds tolerance {tolerance:.1e} in block ({row}, {col})")]
    ToleranceExceeded {
        residual: f64,
        tolerance: f64,
        row: usize,
        col: usize,
    },
}

impl LatticeConfig {
    /// `N` points per axis, unit spacing, and the parameter point `(m, R, n)`.
    pub fn new(n: usize, m: f64, r: f64, mode: u32) -> Result<Self, LatticeError> {
        let mut params = BTreeMap::new();
        params.insert("m".to_string(), m);
        params.insert("R".to_string(), r);
        params.insert("n".to_string(), mode as f64);
        let cfg = LatticeConfig {
            n,
            h: 1.0,
            scheme: Scheme::Staggered,
            params,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_spacing(mut self, h: f64) -> Result<Self, LatticeError> {
        self.h = h;
        self.validate()?;
        Ok(self)
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Result<Self, LatticeError> {
        self.params.insert(name.to_string(), value);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        let bad = |s: String| Err(LatticeError::InvalidConfig(s));
        if self.n < 4 || !self.n.is_multiple_of(2) {
            return bad(format!("N = {} must be even and at least 4", self.n));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return bad(format!("spacing h = {} must be positive", self.h));
        }
        for (k, v) in &self.params {
            if !(*v > 0.0 && v.is_finite()) {
                return bad(format!("parameter {k} = {v} must be positive"));
            }
        }
        if let Some(&mode) = self.params.get("n") {
            if mode.fract() != 0.0 || mode < 1.0 {
                return bad(format!("mode number n = {mode} must be a positive integer"));
            }
        }
        Ok(())
    }

    /// Number of lattice sites, `N³`.
    pub fn sites(&self) -> usize {
        self.n * self.n * self.n
    }

    fn wave_index(&self, flat: usize) -> [i64; 3] {
        let n = self.n;
        let wrap = |k: usize| if k <= n / 2 { k as i64 } else { k as i64 - n as i64 };
        [wrap(flat / (n * n)), wrap((flat / n) % n), wrap(flat % n)]
    }

    fn wave_vector(&self, flat: usize) -> [f64; 3] {
        let k = self.wave_index(flat);
        let scale = 2.0 * PI / (self.n as f64 * self.h);
        [k[0] as f64 * scale, k[1] as f64 * scale, k[2] as f64 * scale]
    }

    fn partial_symbol(&self, q: f64) -> Complex64 {
        match self.scheme {
            Scheme::Staggered => Complex64::new(0.0, 2.0 * (q * self.h / 2.0).sin() / self.h),
            Scheme::Central => Complex64::new(0.0, (q * self.h).sin() / self.h),
        }
    }

    fn h_exact(&self) -> Q {
        BigRational::from_float(self.h).expect("finite spacing")
    }
}

#[derive(Debug, Clone, Copy)]
struct Symbols {
    partial: [Complex64; 3],
    laplacian: f64,
}

impl Symbols {
    fn at(cfg: &LatticeConfig, flat: usize) -> Self {
        let q = cfg.wave_vector(flat);
        let partial = [cfg.partial_symbol(q[0]), cfg.partial_symbol(q[1]), cfg.partial_symbol(q[2])];
        let laplacian = partial.iter().map(|s| (s * s).re).sum();
        Symbols { partial, laplacian }
    }

    fn is_zero_mode(&self) -> bool {
        self.laplacian.abs() < ZERO_MODE_EPS
    }
}

fn coefficient(t: &crate::symbolic::KernelTerm, c: &Q, cfg: &LatticeConfig, k: &Kernel) -> Result<f64, LatticeError> {
    if !t.coeff.atoms.is_empty() {
        return Err(LatticeError::FieldDependent(k.to_string()));
    }
    let p = t
        .coeff
        .params
        .eval(&cfg.params)
        .ok_or_else(|| LatticeError::Unassigned(t.coeff.params.symbols().find(|s| !cfg.params.contains_key(*s)).cloned().unwrap_or_default()))?;
    Ok(c.to_f64().unwrap_or(f64::NAN) * p)
}

/// A translation-invariant operator on the `N³` lattice, stored as its
/// eigenvalue at each wave vector (flattened `k₁N² + k₂N + k₃`).
#[derive(Debug, Clone, PartialEq)]
pub struct Circulant {
    pub n: usize,
    pub symbol: Vec<Complex64>,
}

impl Circulant {
    pub fn zero(n: usize) -> Self {
        Circulant {
            n,
            symbol: vec![Complex64::zero(); n * n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Circulant {
            n,
            symbol: vec![Complex64::one(); n * n * n],
        }
    }

    pub fn mul(&self, other: &Circulant) -> Circulant {
        Circulant {
            n: self.n,
            symbol: self.symbol.iter().zip(&other.symbol).map(|(a, b)| a * b).collect(),
        }
    }

    pub fn add(&self, other: &Circulant) -> Circulant {
        Circulant {
            n: self.n,
            symbol: self.symbol.iter().zip(&other.symbol).map(|(a, b)| a + b).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Circulant {
        Circulant {
            n: self.n,
            symbol: self.symbol.iter().map(|a| a.conj()).collect(),
        }
    }

    /// The `N³ × N³` matrix in the site basis (sites flattened like wave
    /// vectors). Entry `(x, y)` is `N⁻³ Σ_q σ(q) e^{i q·(x − y)}`.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.n;
        let sites = n * n * n;
        let site = |s: usize| [(s / (n * n)) as i64, ((s / n) % n) as i64, (s % n) as i64];
        let wrap = |k: usize| if k <= n / 2 { k as i64 } else { k as i64 - n as i64 };
        // the column depends only on x − y, so build it once
        let mut column = vec![Complex64::zero(); sites];
        for (d, out) in column.iter_mut().enumerate() {
            let x = site(d);
            let mut acc = Complex64::zero();
            for (f, s) in self.symbol.iter().enumerate() {
                let k = [wrap(f / (n * n)), wrap((f / n) % n), wrap(f % n)];
                let phase = 2.0 * PI * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2]) as f64 / n as f64;
                acc += s * Complex64::from_polar(1.0, phase);
            }
            *out = acc / sites as f64;
        }
        DMatrix::from_fn(sites, sites, |r, c| {
            let (a, b) = (site(r), site(c));
            let d = [(a[0] - b[0]).rem_euclid(n as i64), (a[1] - b[1]).rem_euclid(n as i64), (a[2] - b[2]).rem_euclid(n as i64)];
            column[(d[0] as usize * n + d[1] as usize) * n + d[2] as usize]
        })
    }
}

/// Discretizes a field-independent kernel.
pub fn discretize_kernel(k: &Kernel, cfg: &LatticeConfig) -> Result<Circulant, LatticeError> {
    let sym: Vec<Symbols> = (0..cfg.sites()).map(|f| Symbols::at(cfg, f)).collect();
    discretize_with(k, cfg, &sym)
}

fn discretize_with(k: &Kernel, cfg: &LatticeConfig, sym: &[Symbols]) -> Result<Circulant, LatticeError> {
    let mut out = Circulant::zero(cfg.n);
    for (t, c) in k.terms() {
        let coeff = coefficient(t, c, cfg, k)?;
        for (slot, s) in out.symbol.iter_mut().zip(sym) {
            let mut v = Complex64::new(coeff, 0.0);
            for axis in 0..3 {
                v *= s.partial[axis].powu(t.op.d[axis] as u32);
            }
            if t.op.lap < 0 && s.is_zero_mode() {
                v = Complex64::zero();
            } else if t.op.lap != 0 {
                v *= s.laplacian.powi(t.op.lap);
            }
            *slot += v;
        }
    }
    Ok(out)
}

/// A matrix of circulant blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCirculant {
    pub rows: usize,
    pub cols: usize,
    pub blocks: Vec<Circulant>,
}

impl BlockCirculant {
    pub fn block(&self, i: usize, j: usize) -> &Circulant {
        &self.blocks[i * self.cols + j]
    }

    pub fn identity(size: usize, n: usize) -> Self {
        let blocks = (0..size * size)
            .map(|b| if b / size == b % size { Circulant::identity(n) } else { Circulant::zero(n) })
            .collect();
        BlockCirculant { rows: size, cols: size, blocks }
    }

    pub fn mul(&self, other: &BlockCirculant) -> Result<BlockCirculant, LatticeError> {
        if self.cols != other.rows {
            return Err(LatticeError::Shape(format!(
                "{}×{} times {}×{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let n = self.blocks.first().map(|b| b.n).unwrap_or(0);
        let mut blocks = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = Circulant::zero(n);
                for k in 0..self.cols {
                    let (a, b) = (self.block(i, k), other.block(k, j));
                    for (s, (x, y)) in acc.symbol.iter_mut().zip(a.symbol.iter().zip(&b.symbol)) {
                        *s += x * y;
                    }
                }
                blocks.push(acc);
            }
        }
        Ok(BlockCirculant {
            rows: self.rows,
            cols: other.cols,
            blocks,
        })
    }

    /// Largest entrywise deviation from `other` over the non-zero modes,
    /// with the block where it occurs.
    pub fn max_deviation(&self, other: &BlockCirculant, cfg: &LatticeConfig) -> (f64, (usize, usize)) {
        let live: Vec<bool> = (0..cfg.sites()).map(|f| !Symbols::at(cfg, f).is_zero_mode()).collect();
        let mut worst = (0.0, (0, 0));
        for i in 0..self.rows {
            for j in 0..self.cols {
                for (f, (a, b)) in self.block(i, j).symbol.iter().zip(&other.block(i, j).symbol).enumerate() {
                    if live[f] {
                        let d = (a - b).norm();
                        if d > worst.0 || d.is_nan() {
                            worst = (d, (i, j));
                        }
                    }
                }
            }
        }
        worst
    }
}

pub fn discretize_matrix(m: &KernelMatrix, cfg: &LatticeConfig) -> Result<BlockCirculant, LatticeError> {
    cfg.validate()?;
    let sym: Vec<Symbols> = (0..cfg.sites()).map(|f| Symbols::at(cfg, f)).collect();
    let mut blocks = Vec::with_capacity(m.rows * m.cols);
    for i in 0..m.rows {
        for j in 0..m.cols {
            blocks.push(discretize_with(m.get(i, j), cfg, &sym)?);
        }
    }
    Ok(BlockCirculant {
        rows: m.rows,
        cols: m.cols,
        blocks,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub residual: f64,
    pub block: (usize, usize),
    pub tolerance: f64,
}

/// Discretizes `m` and `inv`, multiplies them and measures the deviation of
/// the product from the block identity on the non-zero modes.
///
/// The residual is the largest deviation of any block eigenvalue. It bounds
/// every entry of the real-space residual matrix, which is the inverse
/// transform of those eigenvalues averaged over `N³` wave vectors.
pub fn verify_inverse(m: &KernelMatrix, inv: &KernelMatrix, cfg: &LatticeConfig, tol: f64) -> Result<Certificate, LatticeError> {
    if m.rows != inv.cols || m.cols != inv.rows || !m.is_square() {
        return Err(LatticeError::Shape(format!(
            "{}×{} against {}×{}",
            m.rows, m.cols, inv.rows, inv.cols
        )));
    }
    let a = discretize_matrix(m, cfg)?;
    let b = discretize_matrix(inv, cfg)?;
    let prod = a.mul(&b)?;
    let (residual, block) = prod.max_deviation(&BlockCirculant::identity(m.rows, cfg.n), cfg);
    if residual.is_nan() || residual > tol {
        return Err(LatticeError::ToleranceExceeded {
            residual,
            tolerance: tol,
            row: block.0,
            col: block.1,
        });
    }
    Ok(Certificate {
        residual,
        block,
        tolerance: tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BracketResiduals {
    pub antisymmetry: f64,
    pub jacobi: f64,
    pub entries: usize,
}

/// Checks `B(a, b) = −B(b, a)†` for every pair of atoms in the table.
/// Brackets between field-independent kernels are c-numbers, so every
/// double bracket vanishes and the Jacobi residual of such a table is zero
/// by construction; a field-dependent entry is an error.
pub fn verify_bracket_properties(t: &BracketTable, cfg: &LatticeConfig) -> Result<BracketResiduals, LatticeError> {
    cfg.validate()?;
    let sym: Vec<Symbols> = (0..cfg.sites()).map(|f| Symbols::at(cfg, f)).collect();
    let mut atoms: Vec<Atom> = Vec::new();
    for (a, b, _) in t.iter() {
        for x in [a, b] {
            if !atoms.contains(x) {
                atoms.push(x.clone());
            }
        }
    }
    let mut out = BracketResiduals::default();
    for (i, a) in atoms.iter().enumerate() {
        for b in &atoms[i..] {
            let ab = discretize_with(&t.get(a, b), cfg, &sym)?;
            let ba = discretize_with(&t.get(b, a), cfg, &sym)?;
            let sum = ab.add(&ba.adjoint());
            for (s, v) in sym.iter().zip(&sum.symbol) {
                if !s.is_zero_mode() {
                    out.antisymmetry = out.antisymmetry.max(v.norm());
                }
            }
            out.entries += 1;
        }
    }
    Ok(out)
}

/// Exact real-space stencil of a polynomial kernel. Offsets are stored in
/// half cells (so the staggered difference has taps at `±1`) and reduced
/// modulo `2N`; taps are exact rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stencil {
    pub n: usize,
    pub taps: BTreeMap<[i64; 3], Q>,
}

impl Stencil {
    pub fn zero(n: usize) -> Self {
        Stencil { n, taps: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: Q) -> Self {
        let mut s = Stencil::zero(n);
        s.add_tap([0, 0, 0], c);
        s
    }

    fn add_tap(&mut self, at: [i64; 3], c: Q) {
        let m = 2 * self.n as i64;
        let key = [at[0].rem_euclid(m), at[1].rem_euclid(m), at[2].rem_euclid(m)];
        let e = self.taps.entry(key).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            self.taps.remove(&key);
        }
    }

    pub fn partial(axis: usize, cfg: &LatticeConfig) -> Self {
        let h = cfg.h_exact();
        let mut s = Stencil::zero(cfg.n);
        let (step, weight) = match cfg.scheme {
            Scheme::Staggered => (1, h.recip()),
            Scheme::Central => (2, (h * Q::from_integer(2.into())).recip()),
        };
        let mut e = [0i64; 3];
        e[axis] = step;
        s.add_tap(e, weight.clone());
        e[axis] = -step;
        s.add_tap(e, -weight);
        s
    }

    pub fn mul(&self, other: &Stencil) -> Stencil {
        let mut out = Stencil::zero(self.n);
        for (a, x) in &self.taps {
            for (b, y) in &other.taps {
                out.add_tap([a[0] + b[0], a[1] + b[1], a[2] + b[2]], x * y);
            }
        }
        out
    }

    pub fn add(&self, other: &Stencil) -> Stencil {
        let mut out = self.clone();
        for (a, x) in &other.taps {
            out.add_tap(*a, x.clone());
        }
        out
    }

    fn pow(&self, e: u32) -> Stencil {
        let mut out = Stencil::constant(self.n, Q::one());
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    pub fn to_circulant(&self, cfg: &LatticeConfig) -> Circulant {
        let mut out = Circulant::zero(self.n);
        for (f, slot) in out.symbol.iter_mut().enumerate() {
            let q = cfg.wave_vector(f);
            for (o, c) in &self.taps {
                let phase = (q[0] * o[0] as f64 + q[1] * o[1] as f64 + q[2] * o[2] as f64) * cfg.h / 2.0;
                *slot += Complex64::from_polar(c.to_f64().unwrap_or(f64::NAN), phase);
            }
        }
        out
    }
}

/// Exact stencil of a polynomial, field-independent kernel, with parameter
/// values converted to the rationals they represent in binary.
pub fn discretize_stencil(k: &Kernel, cfg: &LatticeConfig) -> Result<Stencil, LatticeError> {
    let d: Vec<Stencil> = (0..3).map(|a| Stencil::partial(a, cfg)).collect();
    let lap = d.iter().fold(Stencil::zero(cfg.n), |acc, s| acc.add(&s.mul(s)));
    let mut out = Stencil::zero(cfg.n);
    for (t, c) in k.terms() {
        if !t.coeff.atoms.is_empty() {
            return Err(LatticeError::FieldDependent(k.to_string()));
        }
        if t.op.lap < 0 {
            return Err(LatticeError::NotPolynomial(k.to_string()));
        }
        let mut coeff = c.clone();
        for (name, &e) in &t.coeff.params.0 {
            let v = cfg.params.get(name).ok_or_else(|| LatticeError::Unassigned(name.clone()))?;
            let v = BigRational::from_float(*v).expect("validated parameter");
            let p = if e >= 0 { num_traits::pow(v, e as usize) } else { num_traits::pow(v.recip(), (-e) as usize) };
            coeff *= p;
        }
        let mut s = Stencil::constant(cfg.n, coeff);
        for (axis, &e) in t.op.d.iter().enumerate() {
            s = s.mul(&d[axis].pow(e as u32));
        }
        s = s.mul(&lap.pow(t.op.lap as u32));
        out = out.add(&s);
    }
    Ok(out)
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "residual {:.3e} (tolerance {:.1e}, block {:?})",
            self.residual, self.tolerance, self.block
        )
    }
}
