//! Uniform grids, sampled fields, Riemann-sum Fourier transforms and
//! time-frequency shifts.
//!
//! A [`UniformGrid`] samples `[-R, R)^d` with `N` points per axis and spacing
//! `h = 2R / N`. A [`SampledField`] is a complex tensor over an ordered list of
//! such grids ("blocks"), stored row-major with the last axis fastest.
//!
//! The transform convention is `f̂(ξ) = ∫ f(x) e^{-2πi x·ξ} dx`, realised as a
//! Riemann sum with weight `h^d`. The frequency grid of a block with `(N, R)`
//! has `N` points, spacing `1 / (2R)` and half-width `N / (4R)`; transforming
//! that grid again returns the original grid, so forward and inverse
//! transforms are exact inverses of each other.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub type C64 = Complex64;

const TAU: f64 = std::f64::consts::TAU;

/// Tolerance used when deciding whether a real number sits on a lattice.
pub(crate) const ON_GRID_TOL: f64 = 1e-9;

/// Returns `Some(k)` when `value / step` is within [`ON_GRID_TOL`] of the integer `k`.
pub(crate) fn integer_ratio(value: f64, step: f64) -> Option<i64> {
    let q = value / step;
    let k = q.round();
    ((q - k).abs() <= ON_GRID_TOL * q.abs().max(1.0)).then_some(k as i64)
}

/// `⟨t⟩ = (1 + t²)^{1/2}`.
#[inline]
pub fn bracket(t: f64) -> f64 {
    (1.0 + t * t).sqrt()
}

/// `⟨z⟩ = (1 + |z|²)^{1/2}` for a vector.
#[inline]
pub fn bracket_vec(z: &[f64]) -> f64 {
    (1.0 + z.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformGrid {
    dim: usize,
    n: usize,
    half_width: f64,
}

impl UniformGrid {
    pub fn new(dim: usize, n: usize, half_width: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidGrid("dimension must be positive".into()));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points per axis, got {n}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half-width must be positive, got {half_width}")));
        }
        Ok(Self { dim, n, half_width })
    }

    /// One-dimensional grid on `[-R, R)`.
    pub fn line(n: usize, half_width: f64) -> Result<Self> {
        Self::new(1, n, half_width)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Total number of samples, `N^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of index `j` along any axis.
    #[inline]
    pub fn point(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Cell measure `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// The grid on which the Riemann-sum Fourier transform of this grid lives.
    pub fn dual(&self) -> Self {
        Self {
            dim: self.dim,
            n: self.n,
            half_width: self.n as f64 / (4.0 * self.half_width),
        }
    }

    /// Index of the grid point equal to `x`, if `x` is on the grid.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let k = integer_ratio(x + self.half_width, self.spacing())?;
        (0..self.n as i64).contains(&k).then_some(k as usize)
    }

    /// True when both grids carry the same samples (up to round-off in `R`).
    pub fn same_as(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.n == other.n
            && (self.half_width - other.half_width).abs() <= 1e-12 * self.half_width.max(1.0)
    }
}

/// Complex samples over one or several grid blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledField {
    blocks: Vec<UniformGrid>,
    data: Vec<C64>,
}

impl SampledField {
    pub fn new(blocks: Vec<UniformGrid>, data: Vec<C64>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::ShapeMismatch("a field needs at least one block".into()));
        }
        let expected: usize = blocks.iter().map(UniformGrid::len).product();
        if data.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "data has {} entries, blocks require {expected}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite(format!("entry {pos}")));
        }
        Ok(Self { blocks, data })
    }

    pub fn zeros(blocks: Vec<UniformGrid>) -> Self {
        let len = blocks.iter().map(UniformGrid::len).product();
        Self { blocks, data: vec![C64::new(0.0, 0.0); len] }
    }

    /// Samples `f` on a single block.
    pub fn from_fn(grid: UniformGrid, f: impl Fn(&[f64]) -> C64) -> Self {
        let pts = grid.points();
        let mut coord = vec![0.0; grid.dim()];
        let data = (0..grid.len())
            .map(|flat| {
                let mut rest = flat;
                for a in (0..grid.dim()).rev() {
                    coord[a] = pts[rest % grid.n];
                    rest /= grid.n;
                }
                f(&coord)
            })
            .collect();
        Self { blocks: vec![grid], data }
    }

    /// Samples a function of one real variable on a line grid.
    pub fn from_fn_1d(grid: UniformGrid, f: impl Fn(f64) -> C64) -> Self {
        Self::from_fn(grid, |x| f(x[0]))
    }

    pub fn blocks(&self) -> &[UniformGrid] {
        &self.blocks
    }

    /// The only block of a single-block field.
    pub fn grid(&self) -> &UniformGrid {
        &self.blocks[0]
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

    /// Per-axis lengths, blocks flattened in order.
    pub fn shape(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .flat_map(|g| std::iter::repeat(g.n).take(g.dim))
            .collect()
    }

    /// Product of the cell volumes of all blocks.
    pub fn cell_volume(&self) -> f64 {
        self.blocks.iter().map(UniformGrid::cell_volume).product()
    }

    /// `L²` norm with the Riemann weight of every block.
    pub fn l2_norm(&self) -> f64 {
        (self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.cell_volume()).sqrt()
    }

    /// `⟨self, other⟩ = Σ self · conj(other) · cell`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        self.check_same_grids(other)?;
        let s: C64 = self.data.iter().zip(&other.data).map(|(a, b)| a * b.conj()).sum();
        Ok(s * self.cell_volume())
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_grids(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { blocks: self.blocks.clone(), data: self.data.iter().map(|z| z * c).collect() }
    }

    /// `self + c · other`.
    pub fn add_scaled(&self, other: &Self, c: C64) -> Result<Self> {
        self.check_same_grids(other)?;
        Ok(Self {
            blocks: self.blocks.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + c * b).collect(),
        })
    }

    pub fn check_same_grids(&self, other: &Self) -> Result<()> {
        let same = self.blocks.len() == other.blocks.len()
            && self.blocks.iter().zip(&other.blocks).all(|(a, b)| a.same_as(b));
        if same {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{:?} vs {:?}", self.blocks, other.blocks)))
        }
    }

    pub(crate) fn require_single_block(&self) -> Result<&UniformGrid> {
        if self.blocks.len() != 1 {
            return Err(Error::ShapeMismatch(format!(
                "expected a single-block field, got {} blocks",
                self.blocks.len()
            )));
        }
        Ok(&self.blocks[0])
    }

    pub(crate) fn require_line(&self) -> Result<&UniformGrid> {
        let g = self.require_single_block()?;
        if g.dim != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: g.dim });
        }
        Ok(g)
    }

    /// First axis index (in the flattened axis list) of `block`.
    fn first_axis_of(&self, block: usize) -> usize {
        self.blocks[..block].iter().map(|g| g.dim).sum()
    }
}

/// Direction of the Riemann-sum Fourier transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    /// Kernel `e^{-2πi x·ξ}`.
    Forward,
    /// Kernel `e^{+2πi x·ξ}`.
    Inverse,
}

impl Sign {
    fn value(self) -> f64 {
        match self {
            Sign::Forward => -1.0,
            Sign::Inverse => 1.0,
        }
    }
}

/// Cached FFT plans for repeated transforms of the same size.
pub(crate) struct LineTransform {
    fft: Arc<dyn Fft<f64>>,
    n: usize,
    /// `h · e^{sign·iπN/2} · (-1)^k` output twiddles.
    post: Vec<C64>,
    scratch_len: usize,
}

impl LineTransform {
    pub(crate) fn new(grid: &UniformGrid, sign: Sign) -> Self {
        let n = grid.n;
        let mut planner = FftPlanner::new();
        let fft = match sign {
            Sign::Forward => planner.plan_fft_forward(n),
            Sign::Inverse => planner.plan_fft_inverse(n),
        };
        let global = C64::from_polar(grid.spacing(), sign.value() * std::f64::consts::PI * n as f64 / 2.0);
        let post = (0..n)
            .map(|k| if k % 2 == 0 { global } else { -global })
            .collect();
        let scratch_len = fft.get_inplace_scratch_len();
        Self { fft, n, post, scratch_len }
    }

    /// Transforms one contiguous lane in place.
    pub(crate) fn apply(&self, lane: &mut [C64], scratch: &mut Vec<C64>) {
        debug_assert_eq!(lane.len(), self.n);
        for (j, z) in lane.iter_mut().enumerate() {
            if j % 2 == 1 {
                *z = -*z;
            }
        }
        if scratch.len() < self.scratch_len {
            scratch.resize(self.scratch_len, C64::new(0.0, 0.0));
        }
        self.fft.process_with_scratch(lane, &mut scratch[..self.scratch_len]);
        for (z, p) in lane.iter_mut().zip(&self.post) {
            *z *= p;
        }
    }
}

/// Applies `op` to every lane of `data` along `axis` of a row-major tensor.
fn for_each_lane(data: &mut [C64], shape: &[usize], axis: usize, mut op: impl FnMut(&mut [C64])) {
    let n = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut lane = vec![C64::new(0.0, 0.0); n];
    for o in 0..outer {
        let base = o * n * inner;
        for i in 0..inner {
            for (k, z) in lane.iter_mut().enumerate() {
                *z = data[base + k * inner + i];
            }
            op(&mut lane);
            for (k, z) in lane.iter().enumerate() {
                data[base + k * inner + i] = *z;
            }
        }
    }
}

/// Riemann-sum Fourier transform over the listed blocks.
///
/// Each transformed block is replaced by its [`UniformGrid::dual`]. Forward
/// followed by inverse is the identity up to round-off.
pub fn dft(field: &SampledField, blocks: &[usize], sign: Sign) -> Result<SampledField> {
    for &b in blocks {
        if b >= field.blocks.len() {
            return Err(Error::AxisOutOfRange { axis: b, blocks: field.blocks.len() });
        }
    }
    let shape = field.shape();
    let mut data = field.data.clone();
    let mut out_blocks = field.blocks.clone();
    let mut scratch = Vec::new();
    let mut seen = vec![false; field.blocks.len()];
    for &b in blocks {
        if std::mem::replace(&mut seen[b], true) {
            continue;
        }
        let grid = field.blocks[b];
        let t = LineTransform::new(&grid, sign);
        let first = field.first_axis_of(b);
        for axis in first..first + grid.dim {
            for_each_lane(&mut data, &shape, axis, |lane| t.apply(lane, &mut scratch));
        }
        out_blocks[b] = grid.dual();
    }
    Ok(SampledField { blocks: out_blocks, data })
}

/// A time-frequency shift `M_ξ T_x`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeFrequencyShift {
    pub translation: Vec<f64>,
    pub modulation: Vec<f64>,
}

impl TimeFrequencyShift {
    pub fn new(translation: Vec<f64>, modulation: Vec<f64>) -> Result<Self> {
        if translation.len() != modulation.len() {
            return Err(Error::DimensionMismatch {
                expected: translation.len(),
                found: modulation.len(),
            });
        }
        Ok(Self { translation, modulation })
    }

    pub fn line(x: f64, xi: f64) -> Self {
        Self { translation: vec![x], modulation: vec![xi] }
    }
}

/// `(M_ξ T_x f)(t) = e^{2πi ξ·t} f(t - x)` on the same grid, zero-filled
/// outside the truncation window. Off-grid translations are rejected.
pub fn apply_shift(field: &SampledField, shift: &TimeFrequencyShift) -> Result<SampledField> {
    let grid = *field.require_single_block()?;
    let d = grid.dim;
    if shift.translation.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: shift.translation.len() });
    }
    if shift.modulation.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: shift.modulation.len() });
    }
    let h = grid.spacing();
    let steps: Vec<i64> = shift
        .translation
        .iter()
        .map(|&x| integer_ratio(x, h).ok_or(Error::OffGridTranslation { value: x, spacing: h }))
        .collect::<Result<_>>()?;
    let n = grid.n as i64;
    let pts = grid.points();
    let mut out = vec![C64::new(0.0, 0.0); grid.len()];
    let mut idx = vec![0i64; d];
    for (flat, slot) in out.iter_mut().enumerate() {
        let mut rest = flat;
        for a in (0..d).rev() {
            idx[a] = (rest % grid.n) as i64;
            rest /= grid.n;
        }
        let mut src = 0usize;
        let mut inside = true;
        for a in 0..d {
            let s = idx[a] - steps[a];
            if !(0..n).contains(&s) {
                inside = false;
                break;
            }
            src = src * grid.n + s as usize;
        }
        if inside {
            let phase: f64 = (0..d).map(|a| shift.modulation[a] * pts[idx[a] as usize]).sum();
            *slot = field.data[src] * C64::from_polar(1.0, TAU * phase);
        }
    }
    Ok(SampledField { blocks: vec![grid], data: out })
}
