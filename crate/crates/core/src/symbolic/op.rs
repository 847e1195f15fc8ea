//! Canonical monomials in the commutative spatial-derivative ring
//! `Q[∂1, ∂2, ∂3, ∇⁻²]` with the relation `∂1² + ∂2² + ∂3² = ∇²`.
//!
//! A monomial is `∂1^a ∂2^b ∂3^c (∇²)^k` with `c ∈ {0, 1}` and `k ∈ Z`.
//! Every polynomial in the ring has exactly one expansion over these
//! monomials, because `Q[∂1,∂2,∂3]` is free over `Q[∂1,∂2,∇²]` with basis
//! `{1, ∂3}`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SpatialOp {
    pub d: [u8; 3],
    pub lap: i32,
}

fn factorial(n: u32) -> i64 {
    (1..=n as i64).product()
}

impl SpatialOp {
    pub const IDENTITY: SpatialOp = SpatialOp { d: [0, 0, 0], lap: 0 };

    pub fn partial(axis: u8) -> Self {
        let mut d = [0u8; 3];
        d[(axis - 1) as usize] = 1;
        SpatialOp { d, lap: 0 }
    }

    pub fn laplacian(power: i32) -> Self {
        SpatialOp { d: [0; 3], lap: power }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }

    /// Order as a differential operator (∇² counts as two).
    pub fn order(&self) -> i64 {
        self.d.iter().map(|&x| x as i64).sum::<i64>() + 2 * self.lap as i64
    }

    /// `(-1)^order`: the sign of the formal adjoint.
    pub fn adjoint_sign(&self) -> i64 {
        if self.order().rem_euclid(2) == 0 {
            1
        } else {
            -1
        }
    }

    /// Canonical expansion of `∂1^a ∂2^b ∂3^c (∇²)^k` for arbitrary `c`.
    pub fn from_exponents(a: u32, b: u32, c: u32, lap: i32) -> Vec<(i64, SpatialOp)> {
        let q = c / 2;
        let r = (c % 2) as u8;
        let mut out: BTreeMap<SpatialOp, i64> = BTreeMap::new();
        // ∂3^(2q) = (∇² - ∂1² - ∂2²)^q
        for i in 0..=q {
            for j in 0..=(q - i) {
                let k = q - i - j;
                let mult = factorial(q) / (factorial(i) * factorial(j) * factorial(k));
                let sign = if (j + k).is_multiple_of(2) { 1 } else { -1 };
                let op = SpatialOp {
                    d: [(a + 2 * j) as u8, (b + 2 * k) as u8, r],
                    lap: lap + i as i32,
                };
                *out.entry(op).or_insert(0) += sign * mult;
            }
        }
        out.into_iter().filter(|(_, c)| *c != 0).map(|(o, c)| (c, o)).collect()
    }

    /// Product of two canonical monomials, re-canonicalized.
    pub fn mul(&self, other: &SpatialOp) -> Vec<(i64, SpatialOp)> {
        Self::from_exponents(
            (self.d[0] + other.d[0]) as u32,
            (self.d[1] + other.d[1]) as u32,
            (self.d[2] + other.d[2]) as u32,
            self.lap + other.lap,
        )
    }

    /// Expansion into plain partial-derivative exponent vectors, replacing
    /// `∇²` by `∂1² + ∂2² + ∂3²`. Only defined for non-negative Laplacian
    /// powers.
    pub fn unreduced(&self) -> Option<Vec<(i64, [u32; 3])>> {
        if self.lap < 0 {
            return None;
        }
        let k = self.lap as u32;
        let mut out = Vec::new();
        for i in 0..=k {
            for j in 0..=(k - i) {
                let l = k - i - j;
                let mult = factorial(k) / (factorial(i) * factorial(j) * factorial(l));
                out.push((
                    mult,
                    [
                        self.d[0] as u32 + 2 * i,
                        self.d[1] as u32 + 2 * j,
                        self.d[2] as u32 + 2 * l,
                    ],
                ));
            }
        }
        Some(out)
    }
}

impl fmt::Display for SpatialOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (axis, &e) in self.d.iter().enumerate() {
            for _ in 0..e {
                write!(f, "∂{}", axis + 1)?;
            }
        }
        match self.lap {
            0 => Ok(()),
            1 => write!(f, "∇²"),
            -1 => write!(f, "∇⁻²"),
            k if k > 0 => write!(f, "(∇²)^{k}"),
            k => write!(f, "(∇⁻²)^{}", -k),
        }
    }
}
