//! Points of the integer lattice Z^d and the averaging boxes B(T) = (-T, T]^d.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A point t of Z^d.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeIndex(Vec<i64>);

impl LatticeIndex {
    pub fn new(coords: Vec<i64>) -> Self {
        assert!(!coords.is_empty(), "lattice dimension must be at least 1");
        LatticeIndex(coords)
    }

    pub fn zero(d: usize) -> Self {
        Self::new(vec![0; d])
    }

    /// The unit vector e_i (0-based axis).
    pub fn unit(d: usize, axis: usize) -> Self {
        let mut c = vec![0; d];
        c[axis] = 1;
        Self::new(c)
    }

    pub fn splat(d: usize, v: i64) -> Self {
        Self::new(vec![v; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// Sup norm max_i |t_i|.
    pub fn norm(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    /// l1 norm, used for default test-function weights.
    pub fn l1(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).sum()
    }

    pub fn scale(&self, k: i64) -> Self {
        LatticeIndex(self.0.iter().map(|c| c * k).collect())
    }
}

impl fmt::Debug for LatticeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for LatticeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl Add for &LatticeIndex {
    type Output = LatticeIndex;
    fn add(self, rhs: &LatticeIndex) -> LatticeIndex {
        assert_eq!(self.dim(), rhs.dim());
        LatticeIndex(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &LatticeIndex {
    type Output = LatticeIndex;
    fn sub(self, rhs: &LatticeIndex) -> LatticeIndex {
        assert_eq!(self.dim(), rhs.dim());
        LatticeIndex(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &LatticeIndex {
    type Output = LatticeIndex;
    fn neg(self) -> LatticeIndex {
        LatticeIndex(self.0.iter().map(|c| -c).collect())
    }
}

/// The box B(T) = (-T, T]^d ∩ Z^d with C(T) = (2T)^d points.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub t: u32,
    pub d: usize,
}

impl Window {
    pub fn new(t: u32, d: usize) -> Self {
        assert!(t >= 1 && d >= 1, "window needs T >= 1 and d >= 1");
        Window { t, d }
    }

    pub fn side(&self) -> usize {
        2 * self.t as usize
    }

    /// C(T) = (2T)^d.
    pub fn size(&self) -> usize {
        self.side().pow(self.d as u32)
    }

    /// Row-major position of `idx` inside the box, or `None` if outside.
    pub fn position(&self, idx: &LatticeIndex) -> Option<usize> {
        if idx.dim() != self.d {
            return None;
        }
        let t = self.t as i64;
        let side = self.side();
        let mut pos = 0usize;
        for &c in idx.coords() {
            if c <= -t || c > t {
                return None;
            }
            pos = pos * side + (c + t - 1) as usize;
        }
        Some(pos)
    }

    pub fn index_at(&self, mut pos: usize) -> LatticeIndex {
        let side = self.side();
        let t = self.t as i64;
        let mut coords = vec![0i64; self.d];
        for k in (0..self.d).rev() {
            coords[k] = (pos % side) as i64 - t + 1;
            pos /= side;
        }
        LatticeIndex::new(coords)
    }

    /// All points in row-major order (last coordinate fastest).
    pub fn indices(&self) -> impl Iterator<Item = LatticeIndex> + '_ {
        (0..self.size()).map(move |p| self.index_at(p))
    }

    pub fn contains(&self, idx: &LatticeIndex) -> bool {
        self.position(idx).is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_enumerates_half_open_box() {
        let w = Window::new(2, 1);
        let pts: Vec<i64> = w.indices().map(|i| i.coords()[0]).collect();
        assert_eq!(pts, vec![-1, 0, 1, 2]);
        assert_eq!(w.size(), 4);
        let w2 = Window::new(3, 2);
        assert_eq!(w2.size(), 36);
        for (p, idx) in w2.indices().enumerate() {
            assert_eq!(w2.position(&idx), Some(p));
        }
        assert!(!w2.contains(&LatticeIndex::new(vec![-3, 0])));
        assert!(w2.contains(&LatticeIndex::new(vec![3, -2])));
    }

    #[test]
    fn arithmetic_and_norms() {
        let a = LatticeIndex::new(vec![1, -3]);
        let b = LatticeIndex::new(vec![2, 2]);
        assert_eq!(&a + &b, LatticeIndex::new(vec![3, -1]));
        assert_eq!(&a - &b, LatticeIndex::new(vec![-1, -5]));
        assert_eq!(a.norm(), 3);
        assert_eq!(a.l1(), 4);
        assert_eq!(format!("{a}"), "(1,-3)");
    }
}
