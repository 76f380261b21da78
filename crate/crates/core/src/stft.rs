//! Short-time Fourier transform on one-dimensional grids and its inversion.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{integer_ratio, LineTransform, SampledField, Sign, UniformGrid, C64};

/// Samples of `V_g f(x, ξ)`, row-major with time as the slow index.
#[derive(Clone, Debug, PartialEq)]
pub struct StftField {
    values: Vec<C64>,
    time_grid: UniformGrid,
    freq_grid: UniformGrid,
    window_norm: f64,
}

impl StftField {
    pub fn new(values: Vec<C64>, time_grid: UniformGrid, freq_grid: UniformGrid, window_norm: f64) -> Result<Self> {
        if time_grid.dim() != 1 || freq_grid.dim() != 1 {
            return Err(Error::InvalidGrid("short-time Fourier transforms are one-dimensional".into()));
        }
        let len = time_grid.len() * freq_grid.len();
        if values.len() != len {
            return Err(Error::DimensionMismatch { expected: len, found: values.len() });
        }
        if !(window_norm > 0.0 && window_norm.is_finite()) {
            return Err(Error::ZeroWindow);
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("STFT sample".into()));
        }
        Ok(Self { values, time_grid, freq_grid, window_norm })
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn time_grid(&self) -> &UniformGrid {
        &self.time_grid
    }

    pub fn freq_grid(&self) -> &UniformGrid {
        &self.freq_grid
    }

    pub fn window_norm(&self) -> f64 {
        self.window_norm
    }

    pub fn get(&self, time: usize, freq: usize) -> C64 {
        self.values[time * self.freq_grid.len() + freq]
    }

    /// Value at a physical point, if both coordinates are grid points.
    pub fn at(&self, x: f64, xi: f64) -> Option<C64> {
        Some(self.get(self.time_grid.index_of(x)?, self.freq_grid.index_of(xi)?))
    }

    pub fn cell_area(&self) -> f64 {
        self.time_grid.spacing() * self.freq_grid.spacing()
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if !self.time_grid.same_as(&other.time_grid) || !self.freq_grid.same_as(&other.freq_grid) {
            return Err(Error::GridMismatch("STFT grids differ".into()));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }
}

/// The translation indices `x / h` of every output time point.
fn time_shifts(signal: &UniformGrid, times: &UniformGrid) -> Result<Vec<i64>> {
    let h = signal.spacing();
    times
        .points()
        .into_iter()
        .map(|x| integer_ratio(x, h).ok_or(Error::OffGridTranslation { value: x, spacing: h }))
        .collect()
}

fn check_inputs<'a>(f: &'a SampledField, g: &SampledField) -> Result<&'a UniformGrid> {
    let grid = f.require_line()?;
    let wg = g.require_line()?;
    if !grid.same_as(wg) {
        return Err(Error::GridMismatch("signal and window live on different grids".into()));
    }
    if g.l2_norm() == 0.0 {
        return Err(Error::ZeroWindow);
    }
    Ok(grid)
}

/// Fills `lane[j] = f(t_j) · conj(g(t_j - x))` with `x = shift·h`.
fn correlate(f: &[C64], g: &[C64], shift: i64, lane: &mut [C64]) {
    let n = f.len() as i64;
    for (j, z) in lane.iter_mut().enumerate() {
        let k = j as i64 - shift;
        *z = if (0..n).contains(&k) { f[j] * g[k as usize].conj() } else { C64::new(0.0, 0.0) };
    }
}

/// `V_g f(x, ξ) = Σ_t f(t) conj(g(t-x)) e^{-2πiξt} h` on the requested grids.
///
/// Uses one FFT per time shift when `freq_grid` is the dual of the signal
/// grid and direct summation otherwise.
pub fn stft(f: &SampledField, g: &SampledField, time_grid: &UniformGrid, freq_grid: &UniformGrid) -> Result<StftField> {
    let grid = check_inputs(f, g)?;
    if !freq_grid.same_as(&grid.dual()) {
        return stft_direct(f, g, time_grid, freq_grid);
    }
    let shifts = time_shifts(grid, time_grid)?;
    let n = grid.len();
    let transform = LineTransform::new(grid, Sign::Forward);
    let mut values = vec![C64::new(0.0, 0.0); shifts.len() * n];
    values.par_chunks_mut(n).zip(shifts.par_iter()).for_each_init(Vec::new, |scratch, (row, &s)| {
        correlate(f.data(), g.data(), s, row);
        transform.apply(row, scratch);
    });
    StftField::new(values, *time_grid, *freq_grid, g.l2_norm())
}

/// Direct evaluation of the defining sum; the reference for [`stft`].
pub fn stft_direct(f: &SampledField, g: &SampledField, time_grid: &UniformGrid, freq_grid: &UniformGrid) -> Result<StftField> {
    let grid = check_inputs(f, g)?;
    let shifts = time_shifts(grid, time_grid)?;
    let h = grid.spacing();
    let t = grid.points();
    let xis = freq_grid.points();
    let nf = xis.len();
    let mut values = vec![C64::new(0.0, 0.0); shifts.len() * nf];
    values.par_chunks_mut(nf).zip(shifts.par_iter()).for_each(|(row, &s)| {
        let mut lane = vec![C64::new(0.0, 0.0); t.len()];
        correlate(f.data(), g.data(), s, &mut lane);
        for (out, &xi) in row.iter_mut().zip(&xis) {
            let mut acc = C64::new(0.0, 0.0);
            for (z, &tj) in lane.iter().zip(&t) {
                if *z != C64::new(0.0, 0.0) {
                    acc += z * C64::from_polar(1.0, -2.0 * std::f64::consts::PI * xi * tj);
                }
            }
            *out = acc * h;
        }
    });
    StftField::new(values, *time_grid, *freq_grid, g.l2_norm())
}

/// `f(t) = ‖g‖⁻² Σ_{x,ξ} F(x,ξ) e^{2πiξt} g(t-x) Δx Δξ`.
pub fn stft_invert(field: &StftField, g: &SampledField) -> Result<SampledField> {
    let grid = *g.require_line()?;
    let norm = g.l2_norm();
    if norm == 0.0 {
        return Err(Error::ZeroWindow);
    }
    let shifts = time_shifts(&grid, &field.time_grid)?;
    let n = grid.len();
    let nf = field.freq_grid.len();
    let dx = field.time_grid.spacing();
    let fast = field.freq_grid.same_as(&grid.dual());
    let transform = LineTransform::new(&grid.dual(), Sign::Inverse);
    let t = grid.points();
    let xis = field.freq_grid.points();
    let dxi = field.freq_grid.spacing();

    let mut out = vec![C64::new(0.0, 0.0); n];
    let mut lane = vec![C64::new(0.0, 0.0); n];
    let mut scratch = Vec::new();
    for (row, &s) in field.values.chunks(nf).zip(&shifts) {
        if fast {
            lane.copy_from_slice(row);
            transform.apply(&mut lane, &mut scratch);
        } else {
            for (z, &tj) in lane.iter_mut().zip(&t) {
                *z = row
                    .iter()
                    .zip(&xis)
                    .map(|(v, &xi)| v * C64::from_polar(1.0, 2.0 * std::f64::consts::PI * xi * tj))
                    .sum::<C64>()
                    * dxi;
            }
        }
        for (j, o) in out.iter_mut().enumerate() {
            let k = j as i64 - s;
            if (0..n as i64).contains(&k) {
                *o += lane[j] * g.data()[k as usize] * dx;
            }
        }
    }
    let scale = 1.0 / (norm * norm);
    for z in &mut out {
        *z *= scale;
    }
    SampledField::new(vec![grid], out)
}
