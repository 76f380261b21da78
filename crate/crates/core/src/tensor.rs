//! Dense complex tensors indexed by named, integer lattice axes.

use crate::error::{Error, Result};
use crate::grid::C64;

/// One lattice axis: indices `start..start+len`, physical coordinate `index·step`.
#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub name: String,
    pub start: i64,
    pub len: usize,
    pub step: f64,
}

impl Axis {
    pub fn new(name: impl Into<String>, start: i64, len: usize, step: f64) -> Self {
        Self { name: name.into(), start, len, step }
    }

    /// Symmetric axis `-radius..=radius`.
    pub fn symmetric(name: impl Into<String>, radius: usize, step: f64) -> Self {
        Self::new(name, -(radius as i64), 2 * radius + 1, step)
    }

    pub fn end(&self) -> i64 {
        self.start + self.len as i64
    }

    pub fn contains(&self, k: i64) -> bool {
        k >= self.start && k < self.end()
    }

    pub fn index(&self, pos: usize) -> i64 {
        self.start + pos as i64
    }

    pub fn coordinate(&self, pos: usize) -> f64 {
        self.index(pos) as f64 * self.step
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> {
        self.start..self.end()
    }
}

/// Row-major tensor: the last axis varies fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientTensor {
    axes: Vec<Axis>,
    data: Vec<C64>,
}

impl CoefficientTensor {
    pub fn new(axes: Vec<Axis>, data: Vec<C64>) -> Result<Self> {
        for (i, a) in axes.iter().enumerate() {
            if a.len == 0 {
                return Err(Error::ShapeMismatch(format!("axis `{}` is empty", a.name)));
            }
            if axes[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::ShapeMismatch(format!("duplicate axis name `{}`", a.name)));
            }
        }
        let len: usize = axes.iter().map(|a| a.len).product();
        if data.len() != len {
            return Err(Error::DimensionMismatch { expected: len, found: data.len() });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("coefficient tensor entry".into()));
        }
        Ok(Self { axes, data })
    }

    pub fn zeros(axes: Vec<Axis>) -> Result<Self> {
        let len = axes.iter().map(|a| a.len).product();
        Self::new(axes, vec![C64::new(0.0, 0.0); len])
    }

    /// Fills every entry from its lattice indices.
    pub fn from_fn(axes: Vec<Axis>, mut f: impl FnMut(&[i64]) -> C64) -> Result<Self> {
        let mut t = Self::zeros(axes)?;
        let mut idx: Vec<i64> = t.axes.iter().map(|a| a.start).collect();
        for k in 0..t.data.len() {
            t.data[k] = f(&idx);
            t.advance(&mut idx);
        }
        if t.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("coefficient tensor entry".into()));
        }
        Ok(t)
    }

    fn advance(&self, idx: &mut [i64]) {
        for (i, a) in self.axes.iter().enumerate().rev() {
            idx[i] += 1;
            if idx[i] < a.end() {
                return;
            }
            idx[i] = a.start;
        }
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn rank(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.len).collect()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn axis_position(&self, name: &str) -> Option<usize> {
        self.axes.iter().position(|a| a.name == name)
    }

    /// Flat offset of a lattice multi-index, or `None` if out of range.
    pub fn offset(&self, idx: &[i64]) -> Option<usize> {
        if idx.len() != self.axes.len() {
            return None;
        }
        let mut off = 0usize;
        for (a, &k) in self.axes.iter().zip(idx) {
            if !a.contains(k) {
                return None;
            }
            off = off * a.len + (k - a.start) as usize;
        }
        Some(off)
    }

    pub fn get(&self, idx: &[i64]) -> Option<C64> {
        self.offset(idx).map(|o| self.data[o])
    }

    pub fn set(&mut self, idx: &[i64], value: C64) -> Result<()> {
        let o = self.offset(idx).ok_or_else(|| Error::ShapeMismatch(format!("index {idx:?} outside tensor")))?;
        self.data[o] = value;
        Ok(())
    }

    /// Calls `f(indices, value)` for every entry in storage order.
    pub fn for_each(&self, mut f: impl FnMut(&[i64], C64)) {
        let mut idx: Vec<i64> = self.axes.iter().map(|a| a.start).collect();
        for &z in &self.data {
            f(&idx, z);
            self.advance(&mut idx);
        }
    }

    /// Copies the tensor with axes reordered so that `order[k]` becomes axis `k`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let r = self.rank();
        let mut seen = vec![false; r];
        if order.len() != r || order.iter().any(|&k| k >= r || std::mem::replace(&mut seen[k], true)) {
            return Err(Error::ShapeMismatch(format!("{order:?} is not a permutation of {r} axes")));
        }
        let axes: Vec<Axis> = order.iter().map(|&k| self.axes[k].clone()).collect();
        let old_strides = strides(&self.shape());
        let mut data = Vec::with_capacity(self.data.len());
        let mut pos = vec![0usize; r];
        let new_shape: Vec<usize> = axes.iter().map(|a| a.len).collect();
        for _ in 0..self.data.len() {
            let off: usize = pos.iter().zip(order).map(|(&p, &k)| p * old_strides[k]).sum();
            data.push(self.data[off]);
            for i in (0..r).rev() {
                pos[i] += 1;
                if pos[i] < new_shape[i] {
                    break;
                }
                pos[i] = 0;
            }
        }
        Ok(Self { axes, data })
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", self.shape(), other.shape())));
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CoefficientTensor {
        CoefficientTensor::from_fn(
            vec![Axis::symmetric("m", 1, 0.5), Axis::new("n", 0, 2, 0.5), Axis::symmetric("k", 2, 1.0)],
            |i| C64::new(i[0] as f64 + 10.0 * i[1] as f64, i[2] as f64),
        )
        .unwrap()
    }

    #[test]
    fn indexing_round_trip() {
        let t = sample();
        assert_eq!(t.shape(), vec![3, 2, 5]);
        assert_eq!(t.get(&[-1, 1, 2]), Some(C64::new(9.0, 2.0)));
        assert_eq!(t.get(&[2, 0, 0]), None);
        let mut count = 0;
        t.for_each(|i, z| {
            assert_eq!(z, C64::new(i[0] as f64 + 10.0 * i[1] as f64, i[2] as f64));
            count += 1;
        });
        assert_eq!(count, t.len());
    }

    #[test]
    fn permutation_moves_entries() {
        let t = sample();
        let p = t.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(p.axes()[0].name, "k");
        t.for_each(|i, z| assert_eq!(p.get(&[i[2], i[0], i[1]]), Some(z)));
        assert!(t.permuted(&[0, 0, 1]).is_err());
    }

    #[test]
    fn rejects_duplicate_names() {
        let axes = vec![Axis::symmetric("m", 1, 1.0), Axis::symmetric("m", 1, 1.0)];
        assert!(CoefficientTensor::zeros(axes).is_err());
    }
}
