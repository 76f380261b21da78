//! Multilinear Fourier integral operators on the line
//!
//! `T_σ(f₁, …, f_r)(x) = Σ_ξ e^{2πi Σ Φ_i(x, ξ_i)} σ(x, ξ) ∏ f̂_i(ξ_i) Δξ^r`,
//! their kernels `K(x, y) = Σ_ξ σ₀(x, ξ) e^{-2πi ξ·y} Δξ^r` with
//! `σ₀ = σ ∏ e^{2πiΦ_i}`, the integral operators `B_K`, Gabor matrices and the
//! operators those matrices define on coefficient sequences.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gabor::{mode_product, GaborSystem};
use crate::grid::{dft, SampledField, Sign, UniformGrid, C64};
use crate::phases::PhaseSpec;
use crate::symbols::{SymbolSpec, Term};
use crate::tensor::{Axis, CoefficientTensor};

const TAU: f64 = std::f64::consts::TAU;
const ZERO: C64 = C64::new(0.0, 0.0);

/// A multilinear map from `r` signals on one grid to a signal on the same grid.
pub trait MultilinearOperator: Sync {
    fn arity(&self) -> usize;
    fn grid(&self) -> &UniformGrid;
    fn apply(&self, inputs: &[&SampledField]) -> Result<SampledField>;
}

/// Amplitude, one phase per input, and the working grid. Frequencies live on
/// the dual grid, where the transforms of the inputs are sampled.
#[derive(Clone, Debug)]
pub struct FioProblem {
    symbol: SymbolSpec,
    phases: Vec<PhaseSpec>,
    grid: UniformGrid,
}

/// How [`fio_apply_with`] evaluates the frequency sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Evaluation {
    /// Fastest applicable path.
    Auto,
    /// Full sum over all frequency tuples.
    Direct,
    /// Term by term for separable symbols, one dense phase matrix per input.
    Factorized,
    /// Inverse FFTs; separable symbols with `Φ_i = x·ξ_i` only.
    Fast,
}

impl FioProblem {
    pub fn new(symbol: SymbolSpec, phases: Vec<PhaseSpec>, grid: UniformGrid) -> Result<Self> {
        if phases.len() != symbol.arity() {
            return Err(Error::ArityMismatch { expected: symbol.arity(), found: phases.len() });
        }
        if grid.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: grid.dim() });
        }
        Ok(Self { symbol, phases, grid })
    }

    /// Bilinear problem with `Φ(x, ξ, η) = x·(ξ + η)`.
    pub fn bilinear_pdo(symbol: SymbolSpec, grid: UniformGrid) -> Result<Self> {
        Self::new(symbol, vec![PhaseSpec::linear(), PhaseSpec::linear()], grid)
    }

    pub fn symbol(&self) -> &SymbolSpec {
        &self.symbol
    }

    pub fn phases(&self) -> &[PhaseSpec] {
        &self.phases
    }

    pub fn arity(&self) -> usize {
        self.phases.len()
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn freq_grid(&self) -> UniformGrid {
        self.grid.dual()
    }

    fn blocks(&self) -> Vec<UniformGrid> {
        let mut b = vec![self.grid];
        b.extend(std::iter::repeat(self.freq_grid()).take(self.arity()));
        b
    }

    /// `σ₀(x, ξ) = σ(x, ξ) ∏ e^{2πiΦ_i(x, ξ_i)}` on `(x, ξ₁, …, ξ_r)`.
    pub fn sigma0(&self) -> Result<SampledField> {
        let mut s = self.symbol.sample(&self.blocks())?;
        let xs = self.grid.points();
        let ks = self.freq_grid().points();
        let n = ks.len();
        let r = self.arity();
        let inner = n.pow(r as u32);
        s.data_mut().par_chunks_mut(inner).enumerate().for_each(|(i, chunk)| {
            let x = xs[i];
            let e: Vec<Vec<C64>> = self
                .phases
                .iter()
                .map(|p| ks.iter().map(|&k| C64::from_polar(1.0, TAU * p.eval(x, k))).collect())
                .collect();
            for (off, v) in chunk.iter_mut().enumerate() {
                let mut rem = off;
                for slot in (0..r).rev() {
                    *v *= e[slot][rem % n];
                    rem /= n;
                }
            }
        });
        Ok(s)
    }

    fn check_inputs(&self, inputs: &[&SampledField]) -> Result<()> {
        if inputs.len() != self.arity() {
            return Err(Error::ArityMismatch { expected: self.arity(), found: inputs.len() });
        }
        for f in inputs {
            if !f.require_line()?.same_as(&self.grid) {
                return Err(Error::GridMismatch("input is not on the operator grid".into()));
            }
        }
        Ok(())
    }

    fn fast_applicable(&self) -> bool {
        self.symbol.terms().is_some() && self.phases.iter().all(PhaseSpec::is_standard)
    }
}

impl MultilinearOperator for FioProblem {
    fn arity(&self) -> usize {
        self.phases.len()
    }

    fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    fn apply(&self, inputs: &[&SampledField]) -> Result<SampledField> {
        fio_apply(self, inputs)
    }
}

pub fn fio_apply(p: &FioProblem, inputs: &[&SampledField]) -> Result<SampledField> {
    fio_apply_with(p, inputs, Evaluation::Auto)
}

pub fn fio_apply_with(p: &FioProblem, inputs: &[&SampledField], how: Evaluation) -> Result<SampledField> {
    p.check_inputs(inputs)?;
    let how = match how {
        Evaluation::Auto if p.fast_applicable() => Evaluation::Fast,
        Evaluation::Auto if p.symbol.terms().is_some() => Evaluation::Factorized,
        Evaluation::Auto => Evaluation::Direct,
        other => other,
    };
    let hats = inputs
        .iter()
        .map(|f| dft(f, &[0], Sign::Forward).map(SampledField::into_data))
        .collect::<Result<Vec<_>>>()?;
    let data = match how {
        Evaluation::Direct => direct(p, &hats),
        Evaluation::Factorized | Evaluation::Fast => {
            if how == Evaluation::Fast && !p.fast_applicable() {
                return Err(Error::Domain("the FFT path needs a separable symbol and phases x·ξ".into()));
            }
            let terms = p
                .symbol
                .terms()
                .ok_or_else(|| Error::Domain(format!("`{}` is not separable", p.symbol.name())))?;
            let transform = if how == Evaluation::Fast {
                SlotTransform::Fft
            } else {
                SlotTransform::Matrices(phase_matrices(p))
            };
            by_terms(p, terms, &hats, &transform)?
        }
        Evaluation::Auto => unreachable!(),
    };
    SampledField::new(vec![p.grid], data)
}

/// Bilinear pseudo-differential operator with `Φ = x·(ξ + η)`, evaluated
/// without the FFT shortcut.
pub fn pdo_apply(symbol: &SymbolSpec, f: &SampledField, g: &SampledField) -> Result<SampledField> {
    if symbol.arity() != 2 {
        return Err(Error::ArityMismatch { expected: 2, found: symbol.arity() });
    }
    let p = FioProblem::bilinear_pdo(symbol.clone(), *f.require_line()?)?;
    let how = if symbol.terms().is_some() { Evaluation::Factorized } else { Evaluation::Direct };
    fio_apply_with(&p, &[f, g], how)
}

fn direct(p: &FioProblem, hats: &[Vec<C64>]) -> Vec<C64> {
    let xs = p.grid.points();
    let ks = p.freq_grid().points();
    let n = ks.len();
    let r = p.arity();
    let dk = p.freq_grid().spacing();
    xs.par_iter()
        .map(|&x| {
            let w: Vec<Vec<C64>> = p
                .phases
                .iter()
                .zip(hats)
                .map(|(ph, fh)| ks.iter().zip(fh).map(|(&k, &v)| C64::from_polar(dk, TAU * ph.eval(x, k)) * v).collect())
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
                    acc += p.symbol.eval(&z) * prod;
                }
                let mut s = r;
                loop {
                    if s == 0 {
                        return acc;
                    }
                    s -= 1;
                    idx[s] += 1;
                    if idx[s] < n {
                        break;
                    }
                    idx[s] = 0;
                }
            }
        })
        .collect()
}

enum SlotTransform {
    Fft,
    /// `E_i[x, ξ] = e^{2πiΦ_i(x, ξ)} Δξ`, row-major `N × N`.
    Matrices(Vec<Vec<C64>>),
}

fn phase_matrices(p: &FioProblem) -> Vec<Vec<C64>> {
    let xs = p.grid.points();
    let ks = p.freq_grid().points();
    let dk = p.freq_grid().spacing();
    p.phases
        .iter()
        .map(|ph| {
            xs.par_iter()
                .flat_map_iter(|&x| ks.iter().map(move |&k| C64::from_polar(dk, TAU * ph.eval(x, k))))
                .collect()
        })
        .collect()
}

impl SlotTransform {
    /// `u(x) = Σ_ξ e^{2πiΦ_slot(x, ξ)} v(ξ) Δξ`.
    fn apply(&self, slot: usize, v: &[C64], freq: UniformGrid) -> Result<Vec<C64>> {
        match self {
            SlotTransform::Fft => {
                let f = SampledField::new(vec![freq], v.to_vec())?;
                Ok(dft(&f, &[0], Sign::Inverse)?.into_data())
            }
            SlotTransform::Matrices(e) => {
                let n = v.len();
                Ok(e[slot].par_chunks(n).map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect())
            }
        }
    }
}

fn by_terms(p: &FioProblem, terms: &[Term], hats: &[Vec<C64>], transform: &SlotTransform) -> Result<Vec<C64>> {
    let xs = p.grid.points();
    let ks = p.freq_grid().points();
    let mut out = vec![ZERO; xs.len()];
    for t in terms {
        let mut acc: Vec<C64> = xs.iter().map(|&x| t.coeff * t.factors[0].value(x)).collect();
        for (slot, fh) in hats.iter().enumerate() {
            let factor = &t.factors[slot + 1];
            let v: Vec<C64> = ks.iter().zip(fh).map(|(&k, &z)| z * factor.value(k)).collect();
            let u = transform.apply(slot, &v, p.freq_grid())?;
            for (a, b) in acc.iter_mut().zip(&u) {
                *a *= b;
            }
        }
        for (o, a) in out.iter_mut().zip(&acc) {
            *o += a;
        }
    }
    Ok(out)
}

/// `K(x, y₁, …, y_r)` sampled on the working grid in every variable.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelField {
    data: SampledField,
}

impl KernelField {
    pub fn new(data: SampledField) -> Result<Self> {
        let blocks = data.blocks();
        if blocks.len() < 2 {
            return Err(Error::ArityMismatch { expected: 2, found: blocks.len() });
        }
        if blocks.iter().any(|b| b.dim() != 1 || !b.same_as(&blocks[0])) {
            return Err(Error::GridMismatch("kernel blocks must share one line grid".into()));
        }
        Ok(Self { data })
    }

    /// Samples `k(x, y₁, …, y_r)` on `grid^{r+1}`.
    pub fn from_fn(grid: UniformGrid, arity: usize, k: impl Fn(&[f64]) -> C64 + Sync) -> Result<Self> {
        let pts = grid.points();
        let n = pts.len();
        let inner = n.pow(arity as u32);
        let mut data = vec![ZERO; n * inner];
        data.par_chunks_mut(inner).enumerate().for_each(|(i, chunk)| {
            let mut z = vec![pts[i]; arity + 1];
            for (off, v) in chunk.iter_mut().enumerate() {
                let mut rem = off;
                for a in (1..=arity).rev() {
                    z[a] = pts[rem % n];
                    rem /= n;
                }
                *v = k(&z);
            }
        });
        Self::new(SampledField::new(vec![grid; arity + 1], data)?)
    }

    pub fn field(&self) -> &SampledField {
        &self.data
    }

    pub fn into_field(self) -> SampledField {
        self.data
    }
}

impl MultilinearOperator for KernelField {
    fn arity(&self) -> usize {
        self.data.blocks().len() - 1
    }

    fn grid(&self) -> &UniformGrid {
        &self.data.blocks()[0]
    }

    fn apply(&self, inputs: &[&SampledField]) -> Result<SampledField> {
        bk_apply(self, inputs)
    }
}

/// Forward transform of `σ₀` over the frequency blocks.
pub fn kernel_from_symbol(p: &FioProblem) -> Result<KernelField> {
    let s0 = p.sigma0()?;
    let blocks: Vec<usize> = (1..=p.arity()).collect();
    KernelField::new(dft(&s0, &blocks, Sign::Forward)?)
}

/// `B_K(f₁, …, f_r)(x) = Σ_y K(x, y) ∏ f_i(y_i) h^r`.
pub fn bk_apply(k: &KernelField, inputs: &[&SampledField]) -> Result<SampledField> {
    let r = k.arity();
    if inputs.len() != r {
        return Err(Error::ArityMismatch { expected: r, found: inputs.len() });
    }
    let grid = *k.grid();
    for f in inputs {
        if !f.require_line()?.same_as(&grid) {
            return Err(Error::GridMismatch("input is not on the kernel grid".into()));
        }
    }
    let n = grid.len();
    let h = grid.spacing();
    // contract y_r, then y_{r-1}, …; each step folds the trailing axis
    let mut data = k.data.data().to_vec();
    for f in inputs.iter().rev() {
        let v = f.data();
        data = data.par_chunks(n).map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum::<C64>() * h).collect();
    }
    SampledField::new(vec![grid], data)
}

/// `K(x, y) = φ₀(x) φ₁(y₁) ⋯ φ_r(y_r)`, applied without forming `K`.
#[derive(Clone, Debug)]
pub struct RankOneKernel {
    factors: Vec<SampledField>,
}

impl RankOneKernel {
    pub fn new(factors: Vec<SampledField>) -> Result<Self> {
        if factors.len() < 2 {
            return Err(Error::ArityMismatch { expected: 2, found: factors.len() });
        }
        let g = *factors[0].require_line()?;
        for f in &factors {
            if !f.require_line()?.same_as(&g) {
                return Err(Error::GridMismatch("rank-one factors on different grids".into()));
            }
        }
        Ok(Self { factors })
    }

    pub fn to_kernel(&self) -> Result<KernelField> {
        let parts: Vec<Vec<C64>> = self.factors.iter().map(|f| f.data().to_vec()).collect();
        let data = crate::gabor::outer_product(&parts);
        KernelField::new(SampledField::new(vec![*self.grid(); self.factors.len()], data)?)
    }
}

impl MultilinearOperator for RankOneKernel {
    fn arity(&self) -> usize {
        self.factors.len() - 1
    }

    fn grid(&self) -> &UniformGrid {
        self.factors[0].grid()
    }

    fn apply(&self, inputs: &[&SampledField]) -> Result<SampledField> {
        if inputs.len() != self.arity() {
            return Err(Error::ArityMismatch { expected: self.arity(), found: inputs.len() });
        }
        let h = self.grid().spacing();
        let mut c = C64::new(1.0, 0.0);
        for (phi, f) in self.factors[1..].iter().zip(inputs) {
            phi.check_same_grids(f)?;
            c *= phi.data().iter().zip(f.data()).map(|(a, b)| a * b).sum::<C64>() * h;
        }
        Ok(self.factors[0].scale(c))
    }
}

fn matrix_axes(sys: &GaborSystem, r: usize) -> Vec<Axis> {
    let (m0, ml) = sys.m_range();
    let (n0, nl) = sys.n_range();
    let mut axes = vec![Axis::new("i", m0, ml, sys.alpha()), Axis::new("j", n0, nl, sys.beta())];
    for k in 1..=r {
        axes.push(Axis::new(format!("m{k}"), m0, ml, sys.alpha()));
        axes.push(Axis::new(format!("n{k}"), n0, nl, sys.beta()));
    }
    axes
}

fn check_system(sys: &GaborSystem, grid: &UniformGrid) -> Result<()> {
    if !sys.grid().same_as(grid) {
        return Err(Error::GridMismatch("Gabor system and operator use different grids".into()));
    }
    Ok(())
}

/// `b_{ij, m₁n₁, …} = ⟨T(g_{m₁,n₁}, …, g_{m_r,n_r}), g_{i,j}⟩` over the system's
/// index ranges; axes `(i, j, m1, n1, …)`.
pub fn gabor_matrix(p: &FioProblem, sys: &GaborSystem) -> Result<CoefficientTensor> {
    check_system(sys, &p.grid)?;
    let Some(terms) = p.symbol.terms() else {
        return gabor_matrix_kernel(&kernel_from_symbol(p)?, sys);
    };
    let r = p.arity();
    let n = p.grid.len();
    let k = sys.atom_count();
    let atoms = sys.atom_rows();
    let h = p.grid.spacing();
    let xs = p.grid.points();
    let ks = p.freq_grid().points();
    let transform = if p.fast_applicable() { SlotTransform::Fft } else { SlotTransform::Matrices(phase_matrices(p)) };
    let hats: Vec<Vec<C64>> = atoms
        .par_chunks(n)
        .map(|a| Ok(dft(&SampledField::new(vec![p.grid], a.to_vec())?, &[0], Sign::Forward)?.into_data()))
        .collect::<Result<_>>()?;
    let mut out = vec![ZERO; k.pow(r as u32 + 1)];
    for t in terms {
        // test atoms weighted by the x factor
        let mut front: Vec<C64> = atoms
            .chunks(n)
            .flat_map(|a| a.iter().zip(&xs).map(|(z, &x)| z.conj() * t.factors[0].value(x) * h * t.coeff).collect::<Vec<_>>())
            .collect();
        for slot in 0..r {
            let factor = &t.factors[slot + 1];
            let u: Vec<Vec<C64>> = hats
                .iter()
                .map(|fh| {
                    let v: Vec<C64> = ks.iter().zip(fh).map(|(&kk, &z)| z * factor.value(kk)).collect();
                    transform.apply(slot, &v, p.freq_grid())
                })
                .collect::<Result<_>>()?;
            if slot + 1 < r {
                // rows (…, s) ← front row × u_s pointwise
                front = front
                    .par_chunks(n)
                    .flat_map_iter(|row| {
                        u.iter()
                            .flat_map(move |us| row.iter().zip(us).map(|(a, b)| a * b))
                            .collect::<Vec<_>>()
                    })
                    .collect();
            } else {
                let part: Vec<C64> = front
                    .par_chunks(n)
                    .flat_map_iter(|row| u.iter().map(move |us| row.iter().zip(us).map(|(a, b)| a * b).sum::<C64>()))
                    .collect();
                for (o, v) in out.iter_mut().zip(&part) {
                    *o += v;
                }
            }
        }
    }
    CoefficientTensor::new(matrix_axes(sys, r), out)
}

/// Gabor matrix of `B_K` by contracting the kernel with atoms in every slot.
pub fn gabor_matrix_kernel(k: &KernelField, sys: &GaborSystem) -> Result<CoefficientTensor> {
    check_system(sys, k.grid())?;
    let r = k.arity();
    let n = k.grid().len();
    let count = sys.atom_count();
    let h = k.grid().spacing();
    let atoms = sys.atom_rows();
    let conj: Vec<C64> = atoms.iter().map(|z| z.conj() * h).collect();
    let plain: Vec<C64> = atoms.iter().map(|z| z * h).collect();
    let mut data = k.data.data().to_vec();
    let mut shape = vec![n; r + 1];
    for axis in 0..=r {
        let m = if axis == 0 { &conj } else { &plain };
        data = mode_product(&data, &shape, axis, m, count);
        shape[axis] = count;
    }
    CoefficientTensor::new(matrix_axes(sys, r), data)
}

/// One Gabor-matrix entry by applying the operator to atoms: the reference
/// for [`gabor_matrix`].
pub fn gabor_entry(op: &dyn MultilinearOperator, sys: &GaborSystem, out: (i64, i64), inputs: &[(i64, i64)]) -> Result<C64> {
    check_system(sys, op.grid())?;
    let grid = *op.grid();
    let atom = |(m, n): (i64, i64)| -> Result<SampledField> {
        let a = sys.atom(m, n).ok_or_else(|| Error::ShapeMismatch(format!("atom ({m}, {n}) outside the system")))?;
        SampledField::new(vec![grid], a.to_vec())
    };
    let fields = inputs.iter().map(|&mn| atom(mn)).collect::<Result<Vec<_>>>()?;
    let refs: Vec<&SampledField> = fields.iter().collect();
    op.apply(&refs)?.inner(&atom(out)?)
}

/// `(𝒪c)_{ij} = Σ a_{ij, m₁n₁, …} ∏ (c_k)_{m_k n_k}`; output axes `(m, n)`
/// cover the `(i, j)` ranges of `a`.
pub fn matrix_apply(a: &CoefficientTensor, inputs: &[&CoefficientTensor]) -> Result<CoefficientTensor> {
    let r = inputs.len();
    if r == 0 || a.rank() != 2 * (r + 1) {
        return Err(Error::ArityMismatch { expected: 2 * (r + 1), found: a.rank() });
    }
    for (k, c) in inputs.iter().enumerate() {
        if c.rank() != 2 {
            return Err(Error::ArityMismatch { expected: 2, found: c.rank() });
        }
        for (ax, want) in c.axes().iter().zip(&a.axes()[2 + 2 * k..4 + 2 * k]) {
            if ax.start != want.start || ax.len != want.len {
                return Err(Error::ShapeMismatch(format!(
                    "coefficient axis `{}` covers {}..{}, matrix axis `{}` covers {}..{}",
                    ax.name,
                    ax.start,
                    ax.end(),
                    want.name,
                    want.start,
                    want.end()
                )));
            }
        }
    }
    let mut data = a.data().to_vec();
    for c in inputs.iter().rev() {
        let v = c.data();
        let len = v.len();
        data = data.par_chunks(len).map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect();
    }
    let ax = a.axes();
    let axes = vec![
        Axis::new("m", ax[0].start, ax[0].len, ax[0].step),
        Axis::new("n", ax[1].start, ax[1].len, ax[1].step),
    ];
    CoefficientTensor::new(axes, data)
}
