//! Gabor systems `M_{βn} T_{αm} g` on a one-dimensional grid: analysis,
//! synthesis, frame operator, dense frame bounds, dual and tight windows.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{integer_ratio, SampledField, UniformGrid, C64};
use crate::tensor::{Axis, CoefficientTensor};

/// Smallest admissible lower frame bound relative to `‖g‖²`.
pub const FRAME_LOWER_FLOOR: f64 = 1e-6;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// How translated windows treat the ends of the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// Samples shifted past the grid are dropped.
    ZeroFill,
    /// Translations wrap around the grid period `2R`.
    Periodic,
}

#[derive(Clone, Debug)]
pub struct GaborSystem {
    window: SampledField,
    alpha: f64,
    beta: f64,
    m_axis: (i64, usize),
    n_axis: (i64, usize),
    boundary: Boundary,
    /// Translation step in grid points.
    a_steps: i64,
    /// Atom samples, one atom per row, ordered `(m, n)` with `n` fastest.
    atoms: Vec<C64>,
}

impl GaborSystem {
    /// Symmetric truncation `|m| ≤ m_radius`, `|n| ≤ n_radius`.
    pub fn new(window: SampledField, alpha: f64, beta: f64, m_radius: usize, n_radius: usize) -> Result<Self> {
        Self::with_ranges(
            window,
            alpha,
            beta,
            (-(m_radius as i64), 2 * m_radius + 1),
            (-(n_radius as i64), 2 * n_radius + 1),
        )
    }

    /// Index ranges `m ∈ [-R/α, R/α)` and `n ∈ [-W/β, W/β)` with `W = N/(4R)`:
    /// the lattice tiles the time interval and one frequency period exactly once.
    pub fn covering(window: SampledField, alpha: f64, beta: f64) -> Result<Self> {
        let grid = *window.require_line()?;
        let m = integer_ratio(grid.half_width(), alpha)
            .ok_or_else(|| Error::InvalidLattice(format!("alpha = {alpha} does not divide R = {}", grid.half_width())))?;
        let w = grid.dual().half_width();
        let n = integer_ratio(w, beta).ok_or_else(|| Error::InvalidLattice(format!("beta = {beta} does not divide N/(4R) = {w}")))?;
        let mut sys = Self::with_ranges(window, alpha, beta, (-m, 2 * m as usize), (-n, 2 * n as usize))?;
        sys.boundary = Boundary::Periodic;
        sys.atoms = sys.build_atoms();
        Ok(sys)
    }

    /// Explicit index ranges `(start, len)` for `m` and `n`.
    pub fn with_ranges(window: SampledField, alpha: f64, beta: f64, m_axis: (i64, usize), n_axis: (i64, usize)) -> Result<Self> {
        if m_axis.1 == 0 || n_axis.1 == 0 {
            return Err(Error::InvalidLattice("empty index range".into()));
        }
        let grid = *window.require_line()?;
        if !(alpha > 0.0 && beta > 0.0) {
            return Err(Error::InvalidLattice(format!("alpha = {alpha}, beta = {beta} must be positive")));
        }
        let a_steps = integer_ratio(alpha, grid.spacing())
            .ok_or_else(|| Error::InvalidLattice(format!("alpha = {alpha} is not a multiple of h = {}", grid.spacing())))?;
        let dual_step = grid.dual().spacing();
        integer_ratio(beta, dual_step)
            .ok_or_else(|| Error::InvalidLattice(format!("beta = {beta} is not a multiple of 1/(2R) = {dual_step}")))?;
        if window.l2_norm() == 0.0 {
            return Err(Error::ZeroWindow);
        }
        let mut sys = Self { window, alpha, beta, m_axis, n_axis, boundary: Boundary::ZeroFill, a_steps, atoms: Vec::new() };
        sys.atoms = sys.build_atoms();
        Ok(sys)
    }

    fn build_atoms(&self) -> Vec<C64> {
        let grid = self.grid();
        let n = grid.len();
        let t = grid.points();
        let g = self.window.data();
        let mut atoms = vec![C64::new(0.0, 0.0); self.atom_count() * n];
        let nn = self.n_axis.1;
        atoms.par_chunks_mut(n).enumerate().for_each(|(k, row)| {
            let m = (k / nn) as i64 + self.m_axis.0;
            let nk = (k % nn) as i64 + self.n_axis.0;
            let shift = m * self.a_steps;
            let xi = self.beta * nk as f64;
            for (j, z) in row.iter_mut().enumerate() {
                let mut s = j as i64 - shift;
                if self.boundary == Boundary::Periodic {
                    s = s.rem_euclid(n as i64);
                }
                if (0..n as i64).contains(&s) {
                    *z = g[s as usize] * C64::from_polar(1.0, TWO_PI * xi * t[j]);
                }
            }
        });
        atoms
    }

    pub fn window(&self) -> &SampledField {
        &self.window
    }

    pub fn grid(&self) -> &UniformGrid {
        self.window.grid()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `(start, len)` of the `m` indices.
    pub fn m_range(&self) -> (i64, usize) {
        self.m_axis
    }

    /// `(start, len)` of the `n` indices.
    pub fn n_range(&self) -> (i64, usize) {
        self.n_axis
    }

    pub fn atom_count(&self) -> usize {
        self.m_axis.1 * self.n_axis.1
    }

    /// Samples of `g_{m,n}`.
    pub fn atom(&self, m: i64, n: i64) -> Option<&[C64]> {
        let k = self.atom_index(m, n)?;
        let len = self.grid().len();
        Some(&self.atoms[k * len..(k + 1) * len])
    }

    /// All atoms, one per row, `(m, n)` order with `n` fastest.
    pub(crate) fn atom_rows(&self) -> &[C64] {
        &self.atoms
    }

    fn atom_index(&self, m: i64, n: i64) -> Option<usize> {
        let (m0, ml) = self.m_axis;
        let (n0, nl) = self.n_axis;
        if !(m0..m0 + ml as i64).contains(&m) || !(n0..n0 + nl as i64).contains(&n) {
            return None;
        }
        Some(((m - m0) as usize) * nl + (n - n0) as usize)
    }

    /// Same lattice and truncation with a different window.
    pub fn with_window(&self, window: SampledField) -> Result<Self> {
        if !window.grid().same_as(self.grid()) {
            return Err(Error::GridMismatch("replacement window lives on another grid".into()));
        }
        let mut sys = Self::with_ranges(window, self.alpha, self.beta, self.m_axis, self.n_axis)?;
        if self.boundary != sys.boundary {
            sys.boundary = self.boundary;
            sys.atoms = sys.build_atoms();
        }
        Ok(sys)
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// `(m, n)` axes for argument `slot` of a tensor with `arity` arguments.
    fn axes(&self, slot: usize, arity: usize) -> [Axis; 2] {
        let suffix = if arity == 1 { String::new() } else { (slot + 1).to_string() };
        [
            Axis::new(format!("m{suffix}"), self.m_axis.0, self.m_axis.1, self.alpha),
            Axis::new(format!("n{suffix}"), self.n_axis.0, self.n_axis.1, self.beta),
        ]
    }

    fn lattice_axes(&self, arity: usize) -> Vec<Axis> {
        (0..arity).flat_map(|s| self.axes(s, arity)).collect()
    }

    /// `c_k = ⟨f, g_k⟩` for a bare sample vector.
    fn analyze_raw(&self, f: &[C64]) -> Vec<C64> {
        let n = f.len();
        let h = self.grid().spacing();
        self.atoms
            .par_chunks(n)
            .map(|a| a.iter().zip(f).map(|(a, x)| x * a.conj()).sum::<C64>() * h)
            .collect()
    }

    fn synthesize_raw(&self, c: &[C64]) -> Vec<C64> {
        let n = self.grid().len();
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (a, &ck) in self.atoms.chunks(n).zip(c) {
            if ck != C64::new(0.0, 0.0) {
                for (o, z) in out.iter_mut().zip(a) {
                    *o += ck * z;
                }
            }
        }
        out
    }

    fn check_field(&self, f: &SampledField) -> Result<()> {
        for b in f.blocks() {
            if !b.same_as(self.grid()) {
                return Err(Error::GridMismatch("field is not on the system grid".into()));
            }
        }
        Ok(())
    }

    /// `(C_g f)_{m,n} = ⟨f, M_{βn} T_{αm} g⟩`.
    pub fn analyze(&self, f: &SampledField) -> Result<CoefficientTensor> {
        f.require_line()?;
        self.check_field(f)?;
        CoefficientTensor::new(self.lattice_axes(1).to_vec(), self.analyze_raw(f.data()))
    }

    /// Coefficients of an `r`-block field against the tensor atoms
    /// `g_{m₁,n₁} ⊗ ⋯ ⊗ g_{m_r,n_r}`; axes `(m1, n1, m2, n2, …)`.
    pub fn analyze_tensor(&self, f: &SampledField) -> Result<CoefficientTensor> {
        self.check_field(f)?;
        if f.blocks().iter().any(|b| b.dim() != 1) {
            return Err(Error::DimensionMismatch { expected: 1, found: f.grid().dim() });
        }
        let r = f.blocks().len();
        let n = self.grid().len();
        let k = self.atom_count();
        let h = self.grid().spacing();
        let conj_atoms: Vec<C64> = self.atoms.iter().map(|z| z.conj() * h).collect();
        let mut data = f.data().to_vec();
        let mut shape = vec![n; r];
        for axis in 0..r {
            data = mode_product(&data, &shape, axis, &conj_atoms, k);
            shape[axis] = k;
        }
        CoefficientTensor::new(self.lattice_axes(r), data)
    }

    /// Outer product `⟨f₁, g_{m₁,n₁}⟩ ⋯ ⟨f_r, g_{m_r,n_r}⟩` of per-argument coefficients.
    pub fn analyze_multi(&self, fields: &[&SampledField]) -> Result<CoefficientTensor> {
        if fields.is_empty() {
            return Err(Error::ArityMismatch { expected: 1, found: 0 });
        }
        let mut parts = Vec::with_capacity(fields.len());
        for f in fields {
            f.require_line()?;
            self.check_field(f)?;
            parts.push(self.analyze_raw(f.data()));
        }
        let data = outer_product(&parts);
        CoefficientTensor::new(self.lattice_axes(fields.len()), data)
    }

    /// `D_g c = Σ c_{m,n} M_{βn} T_{αm} g`.
    pub fn synthesize(&self, c: &CoefficientTensor) -> Result<SampledField> {
        self.check_tensor(c, 1)?;
        SampledField::new(vec![*self.grid()], self.synthesize_raw(c.data()))
    }

    /// `Σ c_{m₁,n₁,…} g_{m₁,n₁} ⊗ ⋯ ⊗ g_{m_r,n_r}` as an `r`-block field.
    pub fn synthesize_tensor(&self, c: &CoefficientTensor) -> Result<SampledField> {
        let r = c.rank() / 2;
        self.check_tensor(c, r)?;
        let n = self.grid().len();
        let k = self.atom_count();
        // transpose atoms to N × K so the mode product maps K → N
        let mut atoms_t = vec![C64::new(0.0, 0.0); n * k];
        for a in 0..k {
            for j in 0..n {
                atoms_t[j * k + a] = self.atoms[a * n + j];
            }
        }
        let mut data = c.data().to_vec();
        let mut shape = vec![k; r];
        for axis in 0..r {
            data = mode_product(&data, &shape, axis, &atoms_t, n);
            shape[axis] = n;
        }
        SampledField::new(vec![*self.grid(); r], data)
    }

    fn check_tensor(&self, c: &CoefficientTensor, arity: usize) -> Result<()> {
        let want = self.lattice_axes(arity);
        if arity == 0 || c.rank() != 2 * arity {
            return Err(Error::ArityMismatch { expected: 2 * arity.max(1), found: c.rank() });
        }
        for (a, b) in c.axes().iter().zip(&want) {
            if a.start != b.start || a.len != b.len {
                return Err(Error::ShapeMismatch(format!(
                    "axis `{}` covers {}..{}, system expects {}..{}",
                    a.name,
                    a.start,
                    a.end(),
                    b.start,
                    b.end()
                )));
            }
        }
        Ok(())
    }

    /// `S_g f = D_g C_g f`.
    pub fn frame_operator(&self, f: &SampledField) -> Result<SampledField> {
        f.require_line()?;
        self.check_field(f)?;
        SampledField::new(vec![*self.grid()], self.synthesize_raw(&self.analyze_raw(f.data())))
    }

    /// Dense matrix of `S_g` on the grid: `S[t, t'] = h Σ_k g_k(t) conj(g_k(t'))`.
    pub fn frame_matrix(&self) -> DMatrix<C64> {
        let n = self.grid().len();
        let k = self.atom_count();
        let a = DMatrix::from_row_slice(k, n, &self.atoms);
        let mut s = a.transpose() * a.conjugate();
        s *= C64::new(self.grid().spacing(), 0.0);
        // exact Hermitian symmetry before the eigensolver
        for i in 0..n {
            for j in i + 1..n {
                let z = (s[(i, j)] + s[(j, i)].conj()) * 0.5;
                s[(i, j)] = z;
                s[(j, i)] = z.conj();
            }
            s[(i, i)] = C64::new(s[(i, i)].re, 0.0);
        }
        s
    }

    /// Extreme eigenvalues `(A, B)` of the dense frame matrix.
    pub fn frame_bounds(&self) -> FrameBounds {
        let eig = SymmetricEigen::new(self.frame_matrix());
        let lower = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let upper = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        FrameBounds { lower, upper }
    }

    /// Extremal Rayleigh quotients `⟨S f, f⟩ / ‖f‖²` over random test signals.
    pub fn rayleigh_bounds(&self, trials: usize, seed: u64) -> Result<FrameBounds> {
        if trials == 0 {
            return Err(Error::InsufficientSamples { needed: 1, have: 0 });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut lower = f64::INFINITY;
        let mut upper: f64 = 0.0;
        for _ in 0..trials {
            let f = central_random_signal(*self.grid(), &mut rng);
            let q = self.frame_operator(&f)?.inner(&f)?.re / f.inner(&f)?.re;
            lower = lower.min(q);
            upper = upper.max(q);
        }
        Ok(FrameBounds { lower, upper })
    }

    fn require_frame(&self) -> Result<FrameBounds> {
        let b = self.frame_bounds();
        let g2 = self.window.l2_norm().powi(2);
        if !(b.lower >= FRAME_LOWER_FLOOR * g2) {
            return Err(Error::NotAFrame { lower: b.lower });
        }
        Ok(b)
    }

    /// `γ = S_g⁻¹ g` by conjugate gradients, stopping at `‖S γ - g‖₂ ≤ tol`.
    pub fn dual_window(&self, tol: f64, max_iter: usize) -> Result<SampledField> {
        self.require_frame()?;
        conjugate_gradient(|x| self.frame_operator(x), &self.window, tol, max_iter)
    }

    /// The system with window `S_g^{-1/2} g`, so that `D C = I` at this truncation.
    pub fn tighten(&self) -> Result<Self> {
        self.require_frame()?;
        let eig = SymmetricEigen::new(self.frame_matrix());
        let inv_sqrt = eig.eigenvalues.map(|l| C64::new(1.0 / l.sqrt(), 0.0));
        let v = &eig.eigenvectors;
        let g = nalgebra::DVector::from_column_slice(self.window.data());
        let coords = v.adjoint() * g;
        let scaled = coords.component_mul(&inv_sqrt);
        let w = v * scaled;
        self.with_window(SampledField::new(vec![*self.grid()], w.as_slice().to_vec())?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
}

impl FrameBounds {
    pub fn ratio(&self) -> f64 {
        self.upper / self.lower
    }
}

/// Contracts axis `axis` of a row-major tensor with a `rows × shape[axis]` matrix.
pub(crate) fn mode_product(data: &[C64], shape: &[usize], axis: usize, matrix: &[C64], rows: usize) -> Vec<C64> {
    let cols = shape[axis];
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = vec![C64::new(0.0, 0.0); outer * rows * inner];
    out.par_chunks_mut(rows * inner).enumerate().for_each(|(o, block)| {
        let src = &data[o * cols * inner..(o + 1) * cols * inner];
        for r in 0..rows {
            let mrow = &matrix[r * cols..(r + 1) * cols];
            let dst = &mut block[r * inner..(r + 1) * inner];
            for (c, &a) in mrow.iter().enumerate() {
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for (d, s) in dst.iter_mut().zip(&src[c * inner..(c + 1) * inner]) {
                    *d += a * s;
                }
            }
        }
    });
    out
}

pub(crate) fn outer_product(parts: &[Vec<C64>]) -> Vec<C64> {
    let mut data = vec![C64::new(1.0, 0.0)];
    for p in parts {
        data = data.iter().flat_map(|a| p.iter().map(move |b| a * b)).collect();
    }
    data
}

/// Random sum of modulated Gaussians confined to the central half of the grid
/// in time and frequency.
pub fn central_random_signal(grid: UniformGrid, rng: &mut impl rand::Rng) -> SampledField {
    let r = grid.half_width() / 2.0;
    let w = grid.dual().half_width() / 2.0;
    let width = (r.min(w) / 4.0).clamp(0.3, 1.0);
    let terms: Vec<(f64, f64, C64)> = (0..6)
        .map(|_| {
            (
                rng.gen_range(-r * 0.6..r * 0.6),
                rng.gen_range(-w * 0.6..w * 0.6),
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            )
        })
        .collect();
    SampledField::from_fn_1d(grid, |t| {
        terms
            .iter()
            .map(|&(c, xi, a)| a * (-std::f64::consts::PI * ((t - c) / width).powi(2)).exp() * C64::from_polar(1.0, TWO_PI * xi * t))
            .sum()
    })
}

/// Conjugate gradients for a Hermitian positive operator.
pub fn conjugate_gradient(
    op: impl Fn(&SampledField) -> Result<SampledField>,
    rhs: &SampledField,
    tol: f64,
    max_iter: usize,
) -> Result<SampledField> {
    let mut x = SampledField::zeros(rhs.blocks().to_vec());
    let mut r = rhs.clone();
    let mut p = r.clone();
    let mut rr = r.inner(&r)?.re;
    for _ in 0..max_iter {
        if rr.sqrt() <= tol {
            return Ok(x);
        }
        let ap = op(&p)?;
        let pap = p.inner(&ap)?.re;
        if !(pap > 0.0) {
            return Err(Error::NotAFrame { lower: pap / p.inner(&p)?.re });
        }
        let a = rr / pap;
        x = x.add_scaled(&p, C64::new(a, 0.0))?;
        r = r.add_scaled(&ap, C64::new(-a, 0.0))?;
        let rr_new = r.inner(&r)?.re;
        p = r.add_scaled(&p, C64::new(rr_new / rr, 0.0))?;
        rr = rr_new;
    }
    // report the true residual
    let res = op(&x)?.add_scaled(rhs, C64::new(-1.0, 0.0))?.l2_norm();
    if res <= tol {
        Ok(x)
    } else {
        Err(Error::NoConvergence { iterations: max_iter, residual: res })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn gaussian(grid: UniformGrid) -> SampledField {
        SampledField::from_fn_1d(grid, |t| C64::new(2f64.sqrt().sqrt() * (-std::f64::consts::PI * t * t).exp(), 0.0))
    }

    fn small() -> GaborSystem {
        let grid = UniformGrid::line(64, 4.0).unwrap();
        GaborSystem::new(gaussian(grid), 0.5, 0.5, 8, 8).unwrap()
    }

    fn rel_err(a: &SampledField, b: &SampledField) -> f64 {
        a.add_scaled(b, C64::new(-1.0, 0.0)).unwrap().l2_norm() / b.l2_norm()
    }

    #[test]
    fn lattice_validation() {
        let grid = UniformGrid::line(64, 4.0).unwrap();
        let g = gaussian(grid);
        assert!(matches!(GaborSystem::new(g.clone(), 0.3, 0.5, 2, 2), Err(Error::InvalidLattice(_))));
        assert!(matches!(GaborSystem::new(g.clone(), 0.5, 0.1, 2, 2), Err(Error::InvalidLattice(_))));
        assert!(matches!(GaborSystem::new(SampledField::zeros(vec![grid]), 0.5, 0.5, 2, 2), Err(Error::ZeroWindow)));
    }

    #[test]
    fn trivial_cases() {
        let sys = small();
        let zero = SampledField::zeros(vec![*sys.grid()]);
        assert_eq!(sys.analyze(&zero).unwrap().max_abs(), 0.0);
        assert_eq!(sys.frame_operator(&zero).unwrap().l2_norm(), 0.0);
        let c = sys.analyze(sys.window()).unwrap();
        assert!((c.get(&[0, 0]).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-12);

        let mut delta = CoefficientTensor::zeros(c.axes().to_vec()).unwrap();
        delta.set(&[0, 0], C64::new(1.0, 0.0)).unwrap();
        assert!(sys.synthesize(&delta).unwrap().max_abs_diff(sys.window()).unwrap() < 1e-15);
    }

    #[test]
    fn coefficient_decay() {
        let grid = UniformGrid::line(256, 8.0).unwrap();
        let sys = GaborSystem::new(gaussian(grid), 0.5, 0.5, 16, 16).unwrap();
        let c = sys.analyze(sys.window()).unwrap();
        c.for_each(|i, z| {
            if (i[0] as f64 * 0.5).abs() >= 6.0 || (i[1] as f64 * 0.5).abs() >= 6.0 {
                assert!(z.norm() < 1e-8, "{i:?}: {}", z.norm());
            }
        });
    }

    #[test]
    fn analysis_synthesis_duality() {
        let sys = small();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = central_random_signal(*sys.grid(), &mut rng);
        let c = CoefficientTensor::from_fn(sys.lattice_axes(1), |i| C64::new((i[0] as f64).sin(), (i[1] as f64 * 0.3).cos())).unwrap();
        let lhs = sys.synthesize(&c).unwrap().inner(&f).unwrap();
        let cf = sys.analyze(&f).unwrap();
        let rhs: C64 = c.data().iter().zip(cf.data()).map(|(a, b)| a * b.conj()).sum();
        assert!((lhs - rhs).norm() < 1e-10 * lhs.norm().max(1.0));
    }

    #[test]
    fn frame_operator_self_adjoint_and_bounded() {
        let sys = small();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let f1 = central_random_signal(*sys.grid(), &mut rng);
            let f2 = central_random_signal(*sys.grid(), &mut rng);
            let a = sys.frame_operator(&f1).unwrap().inner(&f2).unwrap();
            let b = f1.inner(&sys.frame_operator(&f2).unwrap()).unwrap();
            assert!((a - b).norm() < 1e-10 * a.norm().max(1.0));
        }
        let dense = sys.frame_bounds();
        let est = sys.rayleigh_bounds(50, 3).unwrap();
        assert!(dense.lower > 0.0);
        assert!(dense.lower <= est.lower + 1e-12 && est.upper <= dense.upper + 1e-12);
    }

    #[test]
    fn dual_window_reconstructs() {
        let grid = UniformGrid::line(128, 4.0).unwrap();
        let sys = GaborSystem::covering(gaussian(grid), 0.5, 0.5).unwrap();
        let gamma = sys.dual_window(1e-12, 500).unwrap();
        let dual = sys.with_window(gamma).unwrap();

        // dense solve oracle
        let s = sys.frame_matrix();
        let direct = s.lu().solve(&nalgebra::DVector::from_column_slice(sys.window().data())).unwrap();
        let dense = SampledField::new(vec![grid], direct.as_slice().to_vec()).unwrap();
        assert!(rel_err(dual.window(), &dense) < 1e-9);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..3 {
            let f = central_random_signal(grid, &mut rng);
            let back = dual.synthesize(&sys.analyze(&f).unwrap()).unwrap();
            assert!(rel_err(&back, &f) < 1e-8);
            let back = sys.synthesize(&dual.analyze(&f).unwrap()).unwrap();
            assert!(rel_err(&back, &f) < 1e-8);
        }
    }

    #[test]
    fn tight_window_round_trip() {
        let grid = UniformGrid::line(128, 4.0).unwrap();
        let sys = GaborSystem::covering(gaussian(grid), 0.5, 0.5).unwrap();
        let tight = sys.tighten().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..3 {
            let f = central_random_signal(grid, &mut rng);
            let back = tight.synthesize(&tight.analyze(&f).unwrap()).unwrap();
            assert!(rel_err(&back, &f) < 1e-8, "{}", rel_err(&back, &f));
        }
        let again = tight.tighten().unwrap();
        assert!(again.window().max_abs_diff(tight.window()).unwrap() < 1e-10);
        let gamma = tight.dual_window(1e-12, 100).unwrap();
        assert!(gamma.max_abs_diff(tight.window()).unwrap() < 1e-10);
    }

    #[test]
    fn critical_density_is_not_a_frame() {
        for (n, r) in [(64, 4.0), (256, 8.0)] {
            let sys = GaborSystem::covering(gaussian(UniformGrid::line(n, r).unwrap()), 1.0, 1.0).unwrap();
            let lower = sys.frame_bounds().lower;
            assert!(lower < FRAME_LOWER_FLOOR, "{lower}");
            assert!(matches!(sys.dual_window(1e-10, 200), Err(Error::NotAFrame { .. })));
            assert!(matches!(sys.tighten(), Err(Error::NotAFrame { .. })));
        }
    }

    #[test]
    fn bilinear_expansion_both_orders() {
        let grid = UniformGrid::line(64, 4.0).unwrap();
        let sys = GaborSystem::covering(gaussian(grid), 0.5, 0.5).unwrap();
        let dual = sys.with_window(sys.dual_window(1e-12, 500).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let f1 = central_random_signal(grid, &mut rng);
        let f2 = central_random_signal(grid, &mut rng);
        let product = SampledField::new(vec![grid, grid], outer_product(&[f1.data().to_vec(), f2.data().to_vec()])).unwrap();

        let c = sys.analyze_multi(&[&f1, &f2]).unwrap();
        let c_field = sys.analyze_tensor(&product).unwrap();
        assert!(c.max_abs_diff(&c_field).unwrap() < 1e-12);

        for (an, syn) in [(&sys, &dual), (&dual, &sys)] {
            let back = syn.synthesize_tensor(&an.analyze_tensor(&product).unwrap()).unwrap();
            assert!(rel_err(&back, &product) < 1e-8, "{}", rel_err(&back, &product));
        }
    }
}
