//! Exact rational coefficients and parameter monomials such as `m² n R⁻¹`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn q_to_f64(x: &Q) -> f64 {
    x.numer().to_f64().unwrap_or(f64::NAN) / x.denom().to_f64().unwrap_or(f64::NAN)
}

/// Formats a rational as `3`, `-1/4`, ...
pub fn fmt_q(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Product of parameter symbols with integer (possibly negative) exponents.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Params(pub BTreeMap<String, i32>);

impl Params {
    pub fn one() -> Self {
        Params(BTreeMap::new())
    }

    pub fn symbol(name: &str, exp: i32) -> Self {
        let mut m = BTreeMap::new();
        if exp != 0 {
            m.insert(name.to_string(), exp);
        }
        Params(m)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mul(&self, other: &Params) -> Params {
        let mut m = self.0.clone();
        for (k, v) in &other.0 {
            let e = m.entry(k.clone()).or_insert(0);
            *e += v;
            if *e == 0 {
                m.remove(k);
            }
        }
        Params(m)
    }

    pub fn inv(&self) -> Params {
        Params(self.0.iter().map(|(k, v)| (k.clone(), -v)).collect())
    }

    pub fn pow(&self, e: i32) -> Params {
        if e == 0 {
            return Params::one();
        }
        Params(self.0.iter().map(|(k, v)| (k.clone(), v * e)).collect())
    }

    pub fn exponent(&self, name: &str) -> i32 {
        self.0.get(name).copied().unwrap_or(0)
    }

    pub fn rename(&self, from: &str, to: &str) -> Params {
        let mut out = Params::one();
        for (k, v) in &self.0 {
            let key = if k == from { to } else { k.as_str() };
            out = out.mul(&Params::symbol(key, *v));
        }
        out
    }

    pub fn symbols(&self) -> impl Iterator<Item = &String> {
        self.0.keys()
    }

    /// Numeric value under a parameter assignment; `None` if a symbol is
    /// unassigned.
    pub fn eval(&self, values: &BTreeMap<String, f64>) -> Option<f64> {
        let mut acc = 1.0;
        for (k, v) in &self.0 {
            acc *= values.get(k)?.powi(*v);
        }
        Some(acc)
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, v) in &self.0 {
            if !first {
                write!(f, "·")?;
            }
            first = false;
            if *v == 1 {
                write!(f, "{k}")?;
            } else {
                write!(f, "{k}^{v}")?;
            }
        }
        Ok(())
    }
}

/// Coefficient of a term rendered in DSL syntax: `-1/4*m^2*R^-1`.
pub(crate) fn render_coeff_dsl(c: &Q, p: &Params) -> String {
    let mut parts = Vec::new();
    if !c.is_one() || p.is_one() {
        parts.push(fmt_q(c));
    }
    for (k, v) in &p.0 {
        if *v == 1 {
            parts.push(k.clone());
        } else {
            parts.push(format!("{k}^({v})"));
        }
    }
    parts.join("*")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_cancels() {
        let p = Params::symbol("n", 1).mul(&Params::symbol("R", -1));
        assert!(p.mul(&p.inv()).is_one());
    }

    #[test]
    fn eval_negative_powers() {
        let p = Params::symbol("R", -2).mul(&Params::symbol("m", 2));
        let vals = BTreeMap::from([("R".to_string(), 2.0), ("m".to_string(), 3.0)]);
        assert!((p.eval(&vals).unwrap() - 9.0 / 4.0).abs() < 1e-15);
    }
}
