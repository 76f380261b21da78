//! Periodic operators: trigonometric polynomials on the circle, periodic
//! multilinear FIOs with integer frequencies, their kernels, and modulation
//! norms on `T × Z`.
//!
//! Points of the circle are sampled on `UniformGrid::line(n, 0.5)`, i.e. at
//! `-1/2 + j/n`; its dual grid is the integers `-n/2 ≤ m < n/2`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fio::KernelField;
use crate::gabor::mode_product;
use crate::grid::{dft, SampledField, Sign, UniformGrid, C64};
use crate::norms::{lp, Exponent};
use crate::phases::PhaseSpec;
use crate::symbols::SymbolSpec;

const TAU: f64 = std::f64::consts::TAU;
const ZERO: C64 = C64::new(0.0, 0.0);

/// `n` equispaced points on the circle.
pub fn torus_grid(n: usize) -> Result<UniformGrid> {
    UniformGrid::line(n, 0.5)
}

/// `f(x) = Σ_{|k| ≤ F} c_k e^{2πikx}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusSignal {
    cutoff: usize,
    coeffs: Vec<C64>,
}

impl TorusSignal {
    /// Coefficients listed from `k = -F` to `k = F`.
    pub fn new(cutoff: usize, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != 2 * cutoff + 1 {
            return Err(Error::ShapeMismatch(format!("cutoff {cutoff} needs {} coefficients, got {}", 2 * cutoff + 1, coeffs.len())));
        }
        if coeffs.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("torus coefficient".into()));
        }
        Ok(Self { cutoff, coeffs })
    }

    pub fn zeros(cutoff: usize) -> Self {
        Self { cutoff, coeffs: vec![ZERO; 2 * cutoff + 1] }
    }

    pub fn from_fn(cutoff: usize, f: impl FnMut(i64) -> C64) -> Result<Self> {
        let f_ = cutoff as i64;
        Self::new(cutoff, (-f_..=f_).map(f).collect())
    }

    /// `e^{2πikx}`.
    pub fn pure(cutoff: usize, k: i64) -> Result<Self> {
        if k.unsigned_abs() as usize > cutoff {
            return Err(Error::ShapeMismatch(format!("frequency {k} exceeds cutoff {cutoff}")));
        }
        Self::from_fn(cutoff, |j| if j == k { C64::new(1.0, 0.0) } else { ZERO })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn frequencies(&self) -> impl Iterator<Item = i64> {
        let f = self.cutoff as i64;
        -f..=f
    }

    pub fn coeff(&self, k: i64) -> C64 {
        let f = self.cutoff as i64;
        if k.abs() > f {
            ZERO
        } else {
            self.coeffs[(k + f) as usize]
        }
    }

    pub fn eval(&self, x: f64) -> C64 {
        self.frequencies().zip(&self.coeffs).map(|(k, c)| c * C64::from_polar(1.0, TAU * k as f64 * x)).sum()
    }

    pub fn sample(&self, grid: &UniformGrid) -> SampledField {
        SampledField::from_fn_1d(*grid, |x| self.eval(x))
    }

    /// `‖f‖_{L²(T)}` by Parseval.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { cutoff: self.cutoff, coeffs: self.coeffs.iter().map(|z| z * c).collect() }
    }
}

fn check_phases(phases: &[PhaseSpec]) -> Result<()> {
    if let Some(p) = phases.iter().find(|p| !p.is_linear_in_second()) {
        return Err(Error::NonLinearPhase(format!("{} must be linear in its frequency argument on the torus", p.name())));
    }
    Ok(())
}

fn check_signals(symbol: &SymbolSpec, phases: &[PhaseSpec], inputs: &[&TorusSignal]) -> Result<usize> {
    if phases.len() != symbol.arity() || inputs.len() != symbol.arity() {
        return Err(Error::ArityMismatch { expected: symbol.arity(), found: phases.len().min(inputs.len()) });
    }
    check_phases(phases)?;
    let f = inputs[0].cutoff;
    if let Some(s) = inputs.iter().find(|s| s.cutoff != f) {
        return Err(Error::ShapeMismatch(format!("cutoff mismatch: {f} vs {}", s.cutoff)));
    }
    Ok(f)
}

/// Exact sum `Σ_{|k_i| ≤ F} e^{2πiΣΦ_i(x, k_i)} σ(x, k) ∏ f̂_i(k_i)` at arbitrary points.
pub fn torus_fio_eval(symbol: &SymbolSpec, phases: &[PhaseSpec], inputs: &[&TorusSignal], xs: &[f64]) -> Result<Vec<C64>> {
    let f = check_signals(symbol, phases, inputs)?;
    let r = inputs.len();
    let width = 2 * f + 1;
    let ks: Vec<f64> = (-(f as i64)..=f as i64).map(|k| k as f64).collect();
    Ok(xs
        .par_iter()
        .map(|&x| {
            let w: Vec<Vec<C64>> = phases
                .iter()
                .zip(inputs)
                .map(|(p, s)| ks.iter().zip(&s.coeffs).map(|(&k, c)| c * C64::from_polar(1.0, TAU * p.eval(x, k))).collect())
                .collect();
            let mut z = vec![x; r + 1];
            let mut idx = vec![0usize; r];
            let mut acc = ZERO;
            loop {
                let mut prod = C64::new(1.0, 0.0);
                for s in 0..r {
                    z[s + 1] = ks[idx[s]];
                    prod *= w[s][idx[s]];
                }
                if prod != ZERO {
                    acc += symbol.eval(&z) * prod;
                }
                let mut s = r;
                loop {
                    if s == 0 {
                        return acc;
                    }
                    s -= 1;
                    idx[s] += 1;
                    if idx[s] < width {
                        break;
                    }
                    idx[s] = 0;
                }
            }
        })
        .collect())
}

/// [`torus_fio_eval`] on the points of a circle grid.
pub fn torus_fio_apply(symbol: &SymbolSpec, phases: &[PhaseSpec], inputs: &[&TorusSignal], grid: &UniformGrid) -> Result<SampledField> {
    let data = torus_fio_eval(symbol, phases, inputs, &grid.points())?;
    SampledField::new(vec![*grid], data)
}

/// `K(x, y) = Σ_{|k_i| ≤ F} e^{2πi[ΣΦ_i(x, k_i) - Σ k_i y_i]} σ(x, k)` on
/// `grid^{r+1}`; `grid` must have at least `2F + 1` points so that `B_K`
/// reproduces the operator on trigonometric polynomials of degree `F`.
pub fn torus_kernel(symbol: &SymbolSpec, phases: &[PhaseSpec], cutoff: usize, grid: &UniformGrid) -> Result<KernelField> {
    check_phases(phases)?;
    let r = symbol.arity();
    if phases.len() != r {
        return Err(Error::ArityMismatch { expected: r, found: phases.len() });
    }
    let n = grid.len();
    if n < 2 * cutoff + 1 {
        return Err(Error::UnderResolved(format!("{n} points cannot resolve cutoff {cutoff}; need {}", 2 * cutoff + 1)));
    }
    let width = 2 * cutoff + 1;
    let ks: Vec<f64> = (-(cutoff as i64)..=cutoff as i64).map(|k| k as f64).collect();
    let ys = grid.points();
    // M[y, k] = e^{-2πi k y}
    let m: Vec<C64> = ys.iter().flat_map(|&y| ks.iter().map(move |&k| C64::from_polar(1.0, -TAU * k * y))).collect();
    let inner = n.pow(r as u32);
    let mut data = vec![ZERO; n * inner];
    let xs = grid.points();
    data.par_chunks_mut(inner).enumerate().for_each(|(i, chunk)| {
        let x = xs[i];
        let e: Vec<Vec<C64>> = phases.iter().map(|p| ks.iter().map(|&k| C64::from_polar(1.0, TAU * p.eval(x, k))).collect()).collect();
        let mut a = vec![ZERO; width.pow(r as u32)];
        let mut z = vec![x; r + 1];
        for (off, v) in a.iter_mut().enumerate() {
            let mut rem = off;
            let mut prod = C64::new(1.0, 0.0);
            for s in (0..r).rev() {
                z[s + 1] = ks[rem % width];
                prod *= e[s][rem % width];
                rem /= width;
            }
            *v = symbol.eval(&z) * prod;
        }
        let mut shape = vec![width; r];
        for axis in 0..r {
            a = mode_product(&a, &shape, axis, &m, n);
            shape[axis] = n;
        }
        chunk.copy_from_slice(&a);
    });
    KernelField::new(SampledField::new(vec![*grid; r + 1], data)?)
}

/// `Σ_{|k| ≤ F} e^{2πikt}`.
pub fn dirichlet(cutoff: usize, t: f64) -> f64 {
    let s = (std::f64::consts::PI * t).sin();
    if s.abs() < 1e-12 {
        (2 * cutoff + 1) as f64
    } else {
        (std::f64::consts::PI * t * (2 * cutoff + 1) as f64).sin() / s
    }
}

/// `V_g f(x, m) = Σ_l f̂(m + l) conj(ĝ(l)) e^{2πilx}` on `grid × {m}`, with
/// `m` running over the support `|m| ≤ F_f + F_g`. Rows are frequencies.
fn torus_stft(f: &TorusSignal, g: &TorusSignal, grid: &UniformGrid) -> Vec<Vec<C64>> {
    let fm = (f.cutoff + g.cutoff) as i64;
    let xs = grid.points();
    (-fm..=fm)
        .into_par_iter()
        .map(|m| {
            xs.iter()
                .map(|&x| g.frequencies().zip(&g.coeffs).map(|(l, gl)| f.coeff(m + l) * gl.conj() * C64::from_polar(1.0, TAU * l as f64 * x)).sum())
                .collect()
        })
        .collect()
}

/// `‖V_g f‖_{L^{p,q}(T × Z)}`: `L^p` in `x` by the Riemann sum on `grid`,
/// `ℓ^q` over the frequencies.
pub fn torus_modulation_norm(f: &TorusSignal, g: &TorusSignal, p: Exponent, q: Exponent, grid: &UniformGrid) -> Result<f64> {
    if g.l2_norm() == 0.0 {
        return Err(Error::ZeroWindow);
    }
    let h = grid.spacing();
    let rows: Vec<f64> = torus_stft(f, g, grid)
        .iter()
        .map(|row| lp(&row.iter().map(|z| z.norm()).collect::<Vec<_>>(), p, h))
        .collect();
    Ok(lp(&rows, q, 1.0))
}

/// `M¹`-type norms of `σ₀` on `T × Z^r` and of its kernel on `T^{1+r}`, with
/// matched Gaussian-coefficient windows.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelNormReport {
    pub cutoff: usize,
    pub points: usize,
    pub sigma0_norm: f64,
    pub kernel_norm: f64,
}

impl KernelNormReport {
    pub fn ratio(&self) -> f64 {
        if self.sigma0_norm == 0.0 && self.kernel_norm == 0.0 {
            1.0
        } else {
            self.kernel_norm / self.sigma0_norm
        }
    }

    pub fn finite(&self) -> bool {
        self.sigma0_norm.is_finite() && self.kernel_norm.is_finite()
    }
}

const WINDOW_RADIUS: i64 = 2;

/// Window coefficients `γ_l = e^{-πl²/4}`, `|l| ≤ 2`.
fn window_coeff(l: i64) -> f64 {
    if l.abs() > WINDOW_RADIUS {
        0.0
    } else {
        (-std::f64::consts::PI * (l * l) as f64 / 4.0).exp()
    }
}

/// Computes both norms of [`KernelNormReport`] on `points` samples per circle
/// axis. `points` must exceed `2(F + 2) + 1` so that the kernel side is exact.
pub fn compare_kernel_norms(symbol: &SymbolSpec, phases: &[PhaseSpec], cutoff: usize, points: usize) -> Result<KernelNormReport> {
    let r = symbol.arity();
    let need = 2 * (cutoff + WINDOW_RADIUS as usize) + 2;
    if points < need {
        return Err(Error::UnderResolved(format!("{points} points per axis, need {need}")));
    }
    let grid = torus_grid(points)?;
    let n = points;
    let ts = grid.points();
    let window = TorusSignal::from_fn(WINDOW_RADIUS as usize, |l| C64::new(window_coeff(l), 0.0))?;
    // g(t_a - t_b) depends on a - b only
    let g: Vec<C64> = (0..n).map(|d| window.eval(d as f64 / n as f64)).collect();
    let g_shift = |a: usize, b: usize| g[(a + n - b) % n];

    // kernel side: V(u; m) = n^{-(1+r)} Σ_t K(t) conj(G(t - u)) e^{-2πi m·t}
    let kernel = torus_kernel(symbol, phases, cutoff, &grid)?;
    let kd = kernel.field().data().to_vec();
    let total = n.pow(r as u32 + 1);
    let positions: Vec<usize> = (0..total).collect();
    let kernel_norm: f64 = positions
        .par_iter()
        .map(|&u| -> Result<f64> {
            let uu = unflatten(u, n, r + 1);
            let data: Vec<C64> = (0..total)
                .map(|t| {
                    let tt = unflatten(t, n, r + 1);
                    let w: f64 = tt.iter().zip(&uu).map(|(&a, &b)| g_shift(a, b).re).product();
                    kd[t] * w
                })
                .collect();
            let f = SampledField::new(vec![grid; r + 1], data)?;
            let v = dft(&f, &(0..=r).collect::<Vec<_>>(), Sign::Forward)?;
            Ok(v.data().iter().map(|z| z.norm()).sum())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .sum::<f64>()
        / total as f64;

    // symbol side: positions (u, j), frequencies (m, θ)
    let width = 2 * cutoff + 1;
    let ks: Vec<f64> = (-(cutoff as i64)..=cutoff as i64).map(|k| k as f64).collect();
    let mut s0 = vec![ZERO; n * width.pow(r as u32)];
    let inner = width.pow(r as u32);
    s0.par_chunks_mut(inner).enumerate().for_each(|(i, chunk)| {
        let x = ts[i];
        let mut z = vec![x; r + 1];
        for (off, v) in chunk.iter_mut().enumerate() {
            let mut rem = off;
            let mut phase = 0.0;
            for s in (0..r).rev() {
                z[s + 1] = ks[rem % width];
                phase += phases[s].eval(x, ks[rem % width]);
                rem /= width;
            }
            *v = symbol.eval(&z) * C64::from_polar(1.0, TAU * phase);
        }
    });
    // θ-transform matrix: E[θ, k] = e^{-2πiθk}
    let e: Vec<C64> = ts.iter().flat_map(|&th| ks.iter().map(move |&k| C64::from_polar(1.0, -TAU * th * k))).collect();
    let jr = cutoff as i64 + WINDOW_RADIUS;
    let jwidth = (2 * jr + 1) as usize;
    let sym_positions: Vec<(usize, usize)> = (0..n).flat_map(|u| (0..jwidth.pow(r as u32)).map(move |j| (u, j))).collect();
    let sigma0_norm: f64 = sym_positions
        .par_iter()
        .map(|&(u, jflat)| -> Result<f64> {
            let jj: Vec<i64> = unflatten(jflat, jwidth, r).into_iter().map(|j| j as i64 - jr).collect();
            let mut a = vec![ZERO; n * inner];
            for t in 0..n {
                let gt = g_shift(t, u).re / n as f64;
                for off in 0..inner {
                    let kk = unflatten(off, width, r);
                    let w: f64 = kk.iter().zip(&jj).map(|(&k, &j)| window_coeff(-(k as i64 - cutoff as i64 - j))).product();
                    if w != 0.0 {
                        a[t * inner + off] = s0[t * inner + off] * gt * w;
                    }
                }
            }
            // t → m by FFT over the first axis (weight 1/n already applied)
            let mut shape = vec![n];
            shape.extend(std::iter::repeat(width).take(r));
            let mut data = transform_first_axis(&a, n, inner)?;
            for axis in 1..=r {
                data = mode_product(&data, &shape, axis, &e, n);
                shape[axis] = n;
            }
            Ok(data.iter().map(|z| z.norm()).sum())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .sum::<f64>()
        / (n as f64).powi(r as i32 + 1);
    Ok(KernelNormReport { cutoff, points, sigma0_norm, kernel_norm })
}

/// `Σ_t a[t, ·] e^{-2πimt}` for the circle grid, `m` on the integer dual grid.
fn transform_first_axis(a: &[C64], n: usize, inner: usize) -> Result<Vec<C64>> {
    let grid = torus_grid(n)?;
    let mut out = vec![ZERO; a.len()];
    let mut lane = vec![ZERO; n];
    for c in 0..inner {
        for t in 0..n {
            lane[t] = a[t * inner + c];
        }
        // dft carries the weight 1/n; undo it, the caller applied its own
        let f = SampledField::new(vec![grid], lane.clone())?;
        let v = dft(&f, &[0], Sign::Forward)?;
        for (m, z) in v.data().iter().enumerate() {
            out[m * inner + c] = z * n as f64;
        }
    }
    Ok(out)
}

fn unflatten(mut flat: usize, n: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for a in (0..len).rev() {
        out[a] = flat % n;
        flat /= n;
    }
    out
}
