//! Phase-space atoms: fields, momenta, multipliers and gauge parameters,
//! each carrying a mode label, a tensor component and a derivative monomial.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::op::SpatialOp;

/// What kind of object an atom is. The declaration order is the term order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AtomKind {
    Field,
    Momentum,
    Multiplier,
    GaugeParam,
}

/// Harmonic label of a compactified field.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Uncompactified field.
    Bare,
    Zero,
    /// Excited mode with a symbolic integer label (usually `n`).
    Kk(String),
}

impl Mode {
    pub fn kk(label: &str) -> Self {
        Mode::Kk(label.to_string())
    }

    /// Symbol of the mode index, if any.
    pub fn label(&self) -> Option<&str> {
        match self {
            Mode::Kk(l) => Some(l),
            _ => None,
        }
    }
}

/// Tensor component of a field. Spatial components are numbered 1..=3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Component {
    Scalar,
    Time,
    Space(u8),
    Fifth,
}

impl Component {
    pub fn from_index(i: u8) -> Option<Self> {
        match i {
            0 => Some(Component::Time),
            1..=3 => Some(Component::Space(i)),
            5 => Some(Component::Fifth),
            _ => None,
        }
    }

    pub fn index(self) -> Option<u8> {
        match self {
            Component::Scalar => None,
            Component::Time => Some(0),
            Component::Space(i) => Some(i),
            Component::Fifth => Some(5),
        }
    }
}

/// Derivative monomial carried by an atom: time and fifth-dimension
/// derivative counts plus a canonical spatial operator.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Deriv {
    pub time: u8,
    pub fifth: u8,
    pub space: SpatialOp,
}

impl Deriv {
    pub fn is_none(&self) -> bool {
        self.time == 0 && self.fifth == 0 && self.space.is_identity()
    }

    /// Total derivative order, counting the Laplacian power twice.
    pub fn order(&self) -> i64 {
        self.time as i64 + self.fifth as i64 + self.space.order()
    }

    /// Sign picked up when the derivative is moved across an integral.
    pub fn adjoint_sign(&self) -> i64 {
        if self.order().rem_euclid(2) == 0 {
            1
        } else {
            -1
        }
    }
}

/// A single symbolic variable, possibly differentiated.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub kind: AtomKind,
    pub name: String,
    pub mode: Mode,
    pub comp: Component,
    pub deriv: Deriv,
}

impl Atom {
    pub fn new(kind: AtomKind, name: &str, mode: Mode, comp: Component) -> Self {
        Atom {
            kind,
            name: name.to_string(),
            mode,
            comp,
            deriv: Deriv::default(),
        }
    }

    pub fn field(name: &str, mode: Mode, comp: Component) -> Self {
        Self::new(AtomKind::Field, name, mode, comp)
    }

    pub fn momentum(name: &str, mode: Mode, comp: Component) -> Self {
        Self::new(AtomKind::Momentum, name, mode, comp)
    }

    pub fn multiplier(name: &str, mode: Mode) -> Self {
        Self::new(AtomKind::Multiplier, name, mode, Component::Scalar)
    }

    /// The atom with its derivatives stripped.
    pub fn base(&self) -> Atom {
        Atom {
            deriv: Deriv::default(),
            ..self.clone()
        }
    }

    pub fn is_base(&self) -> bool {
        self.deriv.is_none()
    }

    pub fn with_deriv(&self, deriv: Deriv) -> Atom {
        Atom {
            deriv,
            ..self.clone()
        }
    }

    /// Velocity of a field: one time derivative, nothing else.
    pub fn dot(&self) -> Atom {
        let mut a = self.base();
        a.deriv.time = 1;
        a
    }

    pub fn is_velocity(&self) -> bool {
        self.deriv.time == 1 && self.deriv.fifth == 0 && self.deriv.space.is_identity()
    }

    /// Momentum conjugate to this field atom.
    pub fn conjugate_momentum(&self) -> Atom {
        Atom {
            kind: AtomKind::Momentum,
            deriv: Deriv::default(),
            ..self.clone()
        }
    }

    /// Field conjugate to this momentum atom.
    pub fn conjugate_field(&self) -> Atom {
        Atom {
            kind: AtomKind::Field,
            deriv: Deriv::default(),
            ..self.clone()
        }
    }

    pub fn relabel_mode(&self, from: &str, to: &str) -> Atom {
        let mut a = self.clone();
        if a.mode == Mode::kk(from) {
            a.mode = Mode::kk(to);
        }
        a
    }
}

/// Greek/latin display of atom names used in reports.
pub(crate) fn display_name(kind: AtomKind, name: &str) -> String {
    match (kind, name) {
        (AtomKind::Field, "theta") => "θ".into(),
        (AtomKind::Field, "phi") => "φ".into(),
        (AtomKind::Momentum, "A") => "Π".into(),
        (AtomKind::Momentum, "theta") => "P".into(),
        (AtomKind::Momentum, "phi") => "π".into(),
        (AtomKind::Momentum, other) => format!("π[{other}]"),
        (AtomKind::Multiplier, "lambda") => "λ".into(),
        (AtomKind::Multiplier, "rho") => "ρ".into(),
        (AtomKind::Multiplier, "eta") => "η".into(),
        (AtomKind::Multiplier, "beta") => "β".into(),
        (AtomKind::GaugeParam, "eps") => "ε".into(),
        (_, other) => other.to_string(),
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for _ in 0..self.deriv.time {
            write!(f, "∂0")?;
        }
        for _ in 0..self.deriv.fifth {
            write!(f, "∂5")?;
        }
        if !self.deriv.space.is_identity() {
            write!(f, "{}", self.deriv.space)?;
        }
        write!(f, "{}", display_name(self.kind, &self.name))?;
        if let Some(i) = self.comp.index() {
            if self.kind == AtomKind::Momentum {
                write!(f, "^{i}")?;
            } else {
                write!(f, "_{i}")?;
            }
        }
        match &self.mode {
            Mode::Bare => {}
            Mode::Zero => write!(f, "(0)")?,
            Mode::Kk(l) => write!(f, "({l})")?,
        }
        Ok(())
    }
}
