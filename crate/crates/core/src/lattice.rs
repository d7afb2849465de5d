//! Geometry of the width-2 square lattice `Z x Z2`.
//!
//! Vertices are exact integer points; there is no boundary in `x`, so every
//! vertex has exactly three neighbours: left, right and the vertex in the
//! other row.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("row must be 0 or 1, got {0}")]
    InvalidRow(i64),
    #[error("direction ({dx}, {dy}) is not a coprime non-zero pair")]
    InvalidDirection { dx: i64, dy: i64 },
}

/// A point `(x, y)` of the lattice with `y` in `{0, 1}`.
///
/// Ordered lexicographically by `(x, y)`; this order is translation
/// invariant and is used to enumerate option sets deterministically.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "(i64, i64)", into = "(i64, i64)")]
pub struct Vertex {
    x: i64,
    y: u8,
}

impl Vertex {
    /// Panics if `y` is not a valid row. Use [`Vertex::try_new`] for
    /// untrusted input.
    pub fn new(x: i64, y: i64) -> Self {
        Self::try_new(x, y).expect("vertex row out of range")
    }

    pub fn try_new(x: i64, y: i64) -> Result<Self, LatticeError> {
        match y {
            0 | 1 => Ok(Self { x, y: y as u8 }),
            _ => Err(LatticeError::InvalidRow(y)),
        }
    }

    pub fn x(self) -> i64 {
        self.x
    }

    pub fn y(self) -> i64 {
        i64::from(self.y)
    }

    /// The three neighbours, in ascending vertex order.
    pub fn neighbors(self) -> [Vertex; 3] {
        let mut n = [
            Vertex {
                x: self.x - 1,
                y: self.y,
            },
            Vertex {
                x: self.x + 1,
                y: self.y,
            },
            Vertex {
                x: self.x,
                y: 1 - self.y,
            },
        ];
        n.sort();
        n
    }

    pub fn is_neighbor(self, other: Vertex) -> bool {
        manhattan(self, other) == 1
    }

    pub fn translated(self, dx: i64) -> Vertex {
        Vertex {
            x: self.x + dx,
            y: self.y,
        }
    }
}

impl fmt::Debug for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

impl TryFrom<(i64, i64)> for Vertex {
    type Error = LatticeError;

    fn try_from((x, y): (i64, i64)) -> Result<Self, Self::Error> {
        Vertex::try_new(x, y)
    }
}

impl From<Vertex> for (i64, i64) {
    fn from(v: Vertex) -> Self {
        (v.x(), v.y())
    }
}

pub fn manhattan(a: Vertex, b: Vertex) -> i64 {
    (a.x - b.x).abs() + (a.y() - b.y()).abs()
}

/// All vertices at Manhattan distance one from `v`.
pub fn neighbors(v: Vertex) -> [Vertex; 3] {
    v.neighbors()
}

/// A direction in `Z^2`: a non-zero pair of coprime integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Direction {
    dx: i64,
    dy: i64,
}

impl Direction {
    pub fn new(dx: i64, dy: i64) -> Result<Self, LatticeError> {
        if gcd(dx.unsigned_abs(), dy.unsigned_abs()) != 1 {
            return Err(LatticeError::InvalidDirection { dx, dy });
        }
        Ok(Self { dx, dy })
    }

    pub fn dx(self) -> i64 {
        self.dx
    }

    pub fn dy(self) -> i64 {
        self.dy
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// True iff `to = from + k * d` for some integer `k >= 1`.
pub fn in_direction(from: Vertex, to: Vertex, d: Direction) -> bool {
    let ex = to.x() - from.x();
    let ey = to.y() - from.y();
    let k = if d.dx != 0 {
        if ex % d.dx != 0 {
            return false;
        }
        ex / d.dx
    } else {
        if ey % d.dy != 0 {
            return false;
        }
        ey / d.dy
    };
    k >= 1 && k * d.dx == ex && k * d.dy == ey
}

/// An automorphism of the lattice graph, kept in normal form
/// `(x, y) -> (s*x + shift, y or 1-y)` with `s = -1` when `flip_x`.
///
/// Every finite composition of translations and reflections reduces to this
/// form, so composition is closed and cheap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Symmetry {
    flip_x: bool,
    shift: i64,
    flip_y: bool,
}

impl Symmetry {
    pub const IDENTITY: Symmetry = Symmetry {
        flip_x: false,
        shift: 0,
        flip_y: false,
    };

    pub fn translation(k: i64) -> Self {
        Symmetry {
            shift: k,
            ..Self::IDENTITY
        }
    }

    pub fn x_reflection() -> Self {
        Symmetry {
            flip_x: true,
            ..Self::IDENTITY
        }
    }

    pub fn y_reflection() -> Self {
        Symmetry {
            flip_y: true,
            ..Self::IDENTITY
        }
    }

    /// The three generator kinds, with a fixed non-trivial translation.
    pub fn generators() -> [Symmetry; 3] {
        [
            Self::translation(1),
            Self::x_reflection(),
            Self::y_reflection(),
        ]
    }

    /// The four reflection combinations (identity included).
    pub fn reflections() -> [Symmetry; 4] {
        [
            Self::IDENTITY,
            Self::x_reflection(),
            Self::y_reflection(),
            Self::x_reflection().then(Self::y_reflection()),
        ]
    }

    /// `self` first, then `next`.
    pub fn then(self, next: Symmetry) -> Symmetry {
        let s = if next.flip_x { -1 } else { 1 };
        Symmetry {
            flip_x: self.flip_x ^ next.flip_x,
            shift: s * self.shift + next.shift,
            flip_y: self.flip_y ^ next.flip_y,
        }
    }

    pub fn compose(parts: &[Symmetry]) -> Symmetry {
        parts.iter().fold(Self::IDENTITY, |acc, s| acc.then(*s))
    }

    pub fn inverse(self) -> Symmetry {
        let shift = if self.flip_x { self.shift } else { -self.shift };
        Symmetry {
            flip_x: self.flip_x,
            shift,
            flip_y: self.flip_y,
        }
    }

    pub fn flips_x(self) -> bool {
        self.flip_x
    }

    pub fn apply(self, v: Vertex) -> Vertex {
        let x = if self.flip_x { -v.x } else { v.x } + self.shift;
        let y = if self.flip_y { 1 - v.y } else { v.y };
        Vertex { x, y }
    }
}

pub fn apply_symmetry(s: Symmetry, v: Vertex) -> Vertex {
    s.apply(v)
}
