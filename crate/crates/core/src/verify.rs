//! Numerical checks of the kernel/amplitude STFT relation, of boundedness
//! ratios on modulation spaces, and of Gabor-matrix decay.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fio::{gabor_matrix, kernel_from_symbol, FioProblem, MultilinearOperator};
use crate::gabor::GaborSystem;
use crate::grid::{bracket, bracket_vec, SampledField, UniformGrid, C64};
use crate::norms::{modulation_norm, Exponent};
use crate::symbols::{SymbolClass, SymbolSpec};
use crate::tensor::{Axis, CoefficientTensor};
use crate::weights::WeightSpec;

const PI: f64 = std::f64::consts::PI;
const TAU: f64 = std::f64::consts::TAU;

/// Magnitudes below this are treated as round-off in fits.
pub const ROUND_OFF_FLOOR: f64 = 1e-14;

/// Least-squares line through `(log distance, log magnitude)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    pub used: usize,
}

pub fn fit_decay_exponent(samples: &[(f64, f64)]) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|&&(d, m)| d > 0.0 && m >= ROUND_OFF_FLOOR && d.is_finite() && m.is_finite())
        .map(|&(d, m)| (d.ln(), m.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientSamples { needed: 3, have: pts.len() });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all distances coincide".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(DecayFit { slope, intercept, residual, used: pts.len() })
}

/// Maximum of `|V_G K(u, v)|` against `|V_G σ₀(A(u, v))|` over sampled points,
/// with the Gaussian window `G(t) = e^{-π|t|²}` on both sides.
#[derive(Clone, Debug, PartialEq)]
pub struct StftRelationReport {
    pub max_deviation: f64,
    pub max_magnitude: f64,
    pub samples: usize,
    pub seed: u64,
}

/// A phase-space point `(u, v)` of the product domain `ℝ^{1+r}`.
pub type PhaseSpacePoint = (Vec<f64>, Vec<f64>);

/// Random points in the central half of the time and frequency ranges.
pub fn relation_points(grid: &UniformGrid, arity: usize, count: usize, seed: u64) -> Vec<PhaseSpacePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = grid.half_width() / 2.0;
    let w = grid.dual().half_width() / 2.0;
    let span = r.min(w);
    (0..count)
        .map(|_| {
            let u = (0..=arity).map(|_| rng.gen_range(-span..span)).collect();
            let v = (0..=arity).map(|_| rng.gen_range(-span..span)).collect();
            (u, v)
        })
        .collect()
}

/// `Σ_t F(t) ∏_a conj(G(t_a - c_a)) e^{-2πi w_a t_a} ∏ cell_a` for a field
/// sampled on a product of line grids.
fn separable_stft(f: &SampledField, center: &[f64], freq: &[f64]) -> C64 {
    let blocks = f.blocks();
    let vecs: Vec<Vec<C64>> = blocks
        .iter()
        .zip(center.iter().zip(freq))
        .map(|(g, (&c, &w))| {
            g.points()
                .into_iter()
                .map(|t| C64::from_polar((-PI * (t - c).powi(2)).exp() * g.spacing(), -TAU * w * t))
                .collect()
        })
        .collect();
    let mut data = f.data().to_vec();
    for v in vecs.iter().rev() {
        let n = v.len();
        data = data.chunks(n).map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect();
    }
    data[0]
}

/// `(|V_G K(u, v)|, |V_G σ₀(A(u, v))|)` with `A(u, v) = ((u₁, -v₂, …), (v₁, u₂, …))`.
pub fn stft_relation_values(p: &FioProblem, points: &[PhaseSpacePoint]) -> Result<Vec<(f64, f64)>> {
    let k = kernel_from_symbol(p)?.into_field();
    let s0 = p.sigma0()?;
    let r = p.arity();
    for (u, v) in points {
        if u.len() != r + 1 || v.len() != r + 1 {
            return Err(Error::DimensionMismatch { expected: r + 1, found: u.len().min(v.len()) });
        }
    }
    Ok(points
        .par_iter()
        .map(|(u, v)| {
            let lhs = separable_stft(&k, u, v).norm();
            let mut a = vec![u[0]];
            a.extend(v[1..].iter().map(|x| -x));
            let mut b = vec![v[0]];
            b.extend_from_slice(&u[1..]);
            let rhs = separable_stft(&s0, &a, &b).norm();
            (lhs, rhs)
        })
        .collect())
}

pub fn verify_kernel_symbol_stft(p: &FioProblem, samples: usize, seed: u64) -> Result<StftRelationReport> {
    let pts = relation_points(p.grid(), p.arity(), samples, seed);
    let vals = stft_relation_values(p, &pts)?;
    Ok(StftRelationReport {
        max_deviation: vals.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
        max_magnitude: vals.iter().map(|(a, b)| a.max(*b)).fold(0.0, f64::max),
        samples,
        seed,
    })
}

/// Exponents `(p_i, q_i) → (s₁, s₂)` with `1/s₁ = Σ 1/p_i`, `1/s₂ = Σ 1/q_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentTuple {
    pub p: Vec<Exponent>,
    pub q: Vec<Exponent>,
    pub s1: Exponent,
    pub s2: Exponent,
}

fn reciprocal(e: Exponent) -> f64 {
    if e.is_infinite() {
        0.0
    } else {
        1.0 / e.value()
    }
}

fn from_reciprocal(r: f64) -> Result<Exponent> {
    if r == 0.0 {
        Ok(Exponent::INF)
    } else {
        Exponent::new(1.0 / r)
    }
}

impl ExponentTuple {
    /// Targets from the Hölder relations; targets below 1 are rejected.
    pub fn holder(p: Vec<Exponent>, q: Vec<Exponent>) -> Result<Self> {
        if p.len() != q.len() || p.is_empty() {
            return Err(Error::ArityMismatch { expected: p.len().max(1), found: q.len() });
        }
        let s1 = from_reciprocal(p.iter().map(|&e| reciprocal(e)).sum())?;
        let s2 = from_reciprocal(q.iter().map(|&e| reciprocal(e)).sum())?;
        Ok(Self { p, q, s1, s2 })
    }

    pub fn arity(&self) -> usize {
        self.p.len()
    }

    pub fn holder_gap(&self) -> f64 {
        let a = (reciprocal(self.s1) - self.p.iter().map(|&e| reciprocal(e)).sum::<f64>()).abs();
        let b = (reciprocal(self.s2) - self.q.iter().map(|&e| reciprocal(e)).sum::<f64>()).abs();
        a.max(b)
    }

    pub fn label(&self) -> String {
        let list = |v: &[Exponent]| v.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(";");
        format!("p=[{}] q=[{}] s=({},{})", list(&self.p), list(&self.q), self.s1, self.s2)
    }
}

/// Random Gabor series `Σ c_{m,n} g_{m,n}` over `|m|, |n| ≤ radius` with
/// `c_{m,n} = z_{m,n} ⟨(m, n)⟩^{-decay}`, `z` complex Gaussian. Every
/// coefficient has its own seed, so draws at a larger radius extend draws at
/// a smaller one.
#[derive(Clone, Debug)]
pub struct InputFamily {
    pub window: SampledField,
    pub alpha: f64,
    pub beta: f64,
    pub decay: f64,
}

impl InputFamily {
    pub fn describe(&self) -> String {
        format!("gabor-series(alpha={}, beta={}, decay={})", self.alpha, self.beta, self.decay)
    }

    fn system(&self, radius: usize) -> Result<GaborSystem> {
        GaborSystem::new(self.window.clone(), self.alpha, self.beta, radius, radius)
    }

    pub fn draw(&self, sys: &GaborSystem, seed: u64, trial: u64, slot: u64) -> Result<SampledField> {
        sys.synthesize(&self.coefficients(sys, seed, trial, slot)?)
    }

    pub fn coefficients(&self, sys: &GaborSystem, seed: u64, trial: u64, slot: u64) -> Result<CoefficientTensor> {
        let decay = self.decay;
        let (m0, mlen) = sys.m_range();
        let (n0, nlen) = sys.n_range();
        let axes = vec![Axis::new("m", m0, mlen, sys.alpha()), Axis::new("n", n0, nlen, sys.beta())];
        CoefficientTensor::from_fn(axes, |idx| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix(&[seed, trial, slot, idx[0] as u64, idx[1] as u64]));
            let (a, b): (f64, f64) = (rng.gen(), rng.gen());
            // Box-Muller
            let rad = (-2.0 * (1.0 - a).ln()).sqrt();
            let z = C64::from_polar(rad, TAU * b) / 2f64.sqrt();
            z * bracket(((idx[0] * idx[0] + idx[1] * idx[1]) as f64).sqrt()).powf(-decay)
        })
    }
}

/// SplitMix64 over a list of words.
fn mix(words: &[u64]) -> u64 {
    let mut h: u64 = 0x9E37_79B9_7F4A_7C15;
    for &w in words {
        h ^= w.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(h << 6).wrapping_add(h >> 2);
        let mut z = h;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    h
}

/// Sampled `max ‖T(f₁, …, f_r)‖ / ∏ ‖f_i‖` over random inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundednessReport {
    pub exponents: ExponentTuple,
    pub weight: String,
    pub max_ratio: f64,
    pub min_ratio: f64,
    pub trials: usize,
    pub radius: usize,
    pub family: String,
    pub seed: u64,
}

/// Norms of inputs and output for one boundedness experiment.
pub struct BoundednessSetup<'a> {
    pub exponents: ExponentTuple,
    /// Norm window on the operator grid.
    pub window: &'a SampledField,
    pub input_weight: WeightSpec,
    pub target_weight: WeightSpec,
    pub weight_name: String,
}

pub fn verify_boundedness(
    op: &dyn MultilinearOperator,
    setup: &BoundednessSetup<'_>,
    family: &InputFamily,
    trials: usize,
    radius: usize,
    seed: u64,
) -> Result<BoundednessReport> {
    let e = &setup.exponents;
    if e.arity() != op.arity() {
        return Err(Error::ArityMismatch { expected: op.arity(), found: e.arity() });
    }
    if e.holder_gap() > 1e-12 {
        return Err(Error::Domain(format!("exponents {} violate the Hölder relations", e.label())));
    }
    let sys = family.system(radius)?;
    let ratios = (0..trials as u64)
        .into_par_iter()
        .map(|trial| -> Result<f64> {
            // a zero draw has probability zero; redraw under a fresh stream if it happens
            for attempt in 0..8u64 {
                let t = trial + attempt * trials as u64;
                let inputs = (0..op.arity() as u64).map(|slot| family.draw(&sys, seed, t, slot)).collect::<Result<Vec<_>>>()?;
                let mut denom = 1.0;
                for (f, (&p, &q)) in inputs.iter().zip(e.p.iter().zip(&e.q)) {
                    denom *= modulation_norm(f, setup.window, p, q, &setup.input_weight)?;
                }
                if denom == 0.0 {
                    continue;
                }
                let refs: Vec<&SampledField> = inputs.iter().collect();
                let out = op.apply(&refs)?;
                return Ok(modulation_norm(&out, setup.window, e.s1, e.s2, &setup.target_weight)? / denom);
            }
            Err(Error::Degenerate("every draw had zero norm".into()))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(BoundednessReport {
        exponents: e.clone(),
        weight: setup.weight_name.clone(),
        max_ratio: ratios.iter().copied().fold(0.0, f64::max),
        min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        trials,
        radius,
        family: family.describe(),
        seed,
    })
}

/// Lattice truncation `|m| ≤ m_radius`, `|n| ≤ n_radius` of the test system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Truncation {
    pub m_radius: usize,
    pub n_radius: usize,
}

/// One decay constant at two truncations.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayRow {
    pub orders: Vec<u32>,
    pub constants: [f64; 2],
}

/// Relative change of a constant between truncations above which it is flagged.
pub const STABILITY_TOL: f64 = 0.05;

impl DecayRow {
    pub fn constant(&self) -> f64 {
        self.constants[1]
    }

    pub fn stability(&self) -> f64 {
        let [a, b] = self.constants;
        if a == b {
            0.0
        } else {
            (a - b).abs() / a.abs().max(b.abs())
        }
    }

    pub fn stable(&self) -> bool {
        self.constants.iter().all(|c| c.is_finite()) && self.stability() < STABILITY_TOL
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayReport {
    pub rows: Vec<DecayRow>,
    /// Fits of the envelope against each displacement direction, larger truncation.
    pub slopes: Vec<Option<DecayFit>>,
    /// Fits of diagonal entries against `⟨βn⟩`, `⟨βn₀⟩`, `⟨αm′⟩` (amplitude growth).
    pub growth: Vec<Option<DecayFit>>,
    pub truncations: [Truncation; 2],
}

/// Index labels and coordinates of one Gabor-matrix entry `(i, j, m₁, n₁, …)`.
struct Entry {
    value: f64,
    /// `(αi, βj, αm₁, βn₁, …)`.
    coords: Vec<f64>,
}

/// Relative level below which Gabor-matrix entries are treated as zero. The
/// tight window is computed to about this accuracy, so smaller entries are
/// noise and would only be amplified by the polynomial weights.
pub const ENTRY_FLOOR: f64 = 1e-12;

fn entries(b: &CoefficientTensor) -> Vec<Entry> {
    let steps: Vec<f64> = b.axes().iter().map(|a| a.step).collect();
    let floor = ENTRY_FLOOR * b.max_abs();
    let mut out = Vec::new();
    b.for_each(|idx, v| {
        let value = v.norm();
        if value > floor {
            out.push(Entry { value, coords: idx.iter().zip(&steps).map(|(&k, s)| k as f64 * s).collect() })
        }
    });
    out
}

fn matrices(
    p: &FioProblem,
    window: &SampledField,
    alpha: f64,
    beta: f64,
    truncations: [Truncation; 2],
) -> Result<Vec<CoefficientTensor>> {
    truncations
        .iter()
        .map(|t| gabor_matrix(p, &GaborSystem::new(window.clone(), alpha, beta, t.m_radius, t.n_radius)?))
        .collect()
}

/// `∇_zΦ(αi, βn₁, …, βn_r) − (βj, αm₁, …, αm_r)`.
fn displacement(p: &FioProblem, c: &[f64]) -> Vec<f64> {
    let r = p.arity();
    let x = c[0];
    let mut gx = 0.0;
    let mut d = vec![0.0; r + 1];
    for (k, ph) in p.phases().iter().enumerate() {
        let g = ph.gradient(x, c[3 + 2 * k]);
        gx += g[0];
        d[k + 1] = g[1] - c[2 + 2 * k];
    }
    d[0] = gx - c[1];
    d
}

/// Envelope `D ↦ max{|b| : |d_a| = D}` per direction, fitted on log-log axes.
fn direction_fits(data: &[(Vec<f64>, f64)], dims: usize) -> Vec<Option<DecayFit>> {
    (0..dims)
        .map(|a| {
            let mut env: Vec<(f64, f64)> = Vec::new();
            for (d, v) in data {
                let key = bracket(d[a]);
                match env.iter_mut().find(|(k, _)| (k - key).abs() <= 1e-9 * key) {
                    Some(slot) => slot.1 = slot.1.max(*v),
                    None => env.push((key, *v)),
                }
            }
            env.sort_by(|x, y| x.0.total_cmp(&y.0));
            fit_decay_exponent(&env).ok()
        })
        .collect()
}

/// `C_N = max |b| ⟨∇_zΦ(m′, n, n₀) − (n′, m, m₀)⟩^{2N}` for each `N`, at two
/// truncations, with lattice points `(αm, βn)` as coordinates.
pub fn verify_decay_fio(
    p: &FioProblem,
    window: &SampledField,
    alpha: f64,
    beta: f64,
    truncations: [Truncation; 2],
    orders: &[u32],
) -> Result<DecayReport> {
    let mats = matrices(p, window, alpha, beta, truncations)?;
    let mut per_trunc: Vec<Vec<(Vec<f64>, f64)>> = Vec::new();
    for b in &mats {
        per_trunc.push(entries(b).into_iter().map(|e| (displacement(p, &e.coords), e.value)).collect());
    }
    let rows = orders
        .iter()
        .map(|&n| {
            let mut constants = [0.0; 2];
            for (c, data) in constants.iter_mut().zip(&per_trunc) {
                *c = data
                    .iter()
                    .map(|(d, v)| v * bracket_vec(d).powi(2 * n as i32))
                    .fold(0.0, f64::max);
            }
            DecayRow { orders: vec![n], constants }
        })
        .collect();
    let slopes = direction_fits(&per_trunc[1], p.arity() + 1);
    Ok(DecayReport { rows, slopes, growth: Vec::new(), truncations })
}

/// `(m₁, m₂, m₃)` of a bilinear symbol class.
fn growth_orders(class: &SymbolClass) -> Result<[f64; 3]> {
    match *class {
        SymbolClass::Sg { m1, m2, m3 } | SymbolClass::Rough { m1, m2, m3, .. } => Ok([m1, m2, m3]),
        _ => Err(Error::Domain("decay bounds need an SG or rough bilinear class".into())),
    }
}

/// `C = max |b| / bound` with bound
/// `⟨n⟩^{m₁}⟨n₀⟩^{m₂}⟨m′⟩^{m₃} / (⟨n+n₀−n′⟩^{2N₃}⟨m−m′⟩^{2N₁}⟨m₀−m′⟩^{2N₂})`.
pub fn verify_decay_pdo(
    symbol: &SymbolSpec,
    window: &SampledField,
    alpha: f64,
    beta: f64,
    truncations: [Truncation; 2],
    orders: &[[u32; 3]],
) -> Result<DecayReport> {
    if symbol.arity() != 2 {
        return Err(Error::ArityMismatch { expected: 2, found: symbol.arity() });
    }
    let [m1, m2, m3] = growth_orders(symbol.class())?;
    let p = FioProblem::bilinear_pdo(symbol.clone(), *window.grid())?;
    let mats = matrices(&p, window, alpha, beta, truncations)?;
    // (differences (n+n₀−n′, m−m′, m₀−m′), growth weight, |b|, (n, n₀, m′) coordinates)
    type Row = ([f64; 3], f64, f64, [f64; 3]);
    let per_trunc: Vec<Vec<Row>> = mats
        .iter()
        .map(|b| {
            entries(b)
                .into_iter()
                .map(|e| {
                    let c = &e.coords;
                    let (mp, np, m, n, m0, n0) = (c[0], c[1], c[2], c[3], c[4], c[5]);
                    let growth = bracket(n).powf(m1) * bracket(n0).powf(m2) * bracket(mp).powf(m3);
                    ([n + n0 - np, m - mp, m0 - mp], growth, e.value, [n, n0, mp])
                })
                .collect()
        })
        .collect();
    let rows = orders
        .iter()
        .map(|&[n1, n2, n3]| {
            let mut constants = [0.0; 2];
            for (c, data) in constants.iter_mut().zip(&per_trunc) {
                *c = data
                    .iter()
                    .map(|(d, g, v, _)| {
                        let decay = bracket(d[0]).powi(2 * n3 as i32) * bracket(d[1]).powi(2 * n1 as i32) * bracket(d[2]).powi(2 * n2 as i32);
                        v * decay / g
                    })
                    .fold(0.0, f64::max)
            }
            DecayRow { orders: vec![n1, n2, n3], constants }
        })
        .collect();
    let big = &per_trunc[1];
    let normalized: Vec<(Vec<f64>, f64)> = big.iter().map(|(d, g, v, _)| (d.to_vec(), v / g)).collect();
    let slopes = direction_fits(&normalized, 3);
    // growth along the diagonal d = 0
    let diagonal: Vec<(Vec<f64>, f64)> = big
        .iter()
        .filter(|(d, ..)| d.iter().all(|x| x.abs() < 1e-12))
        .map(|(_, _, v, at)| (at.to_vec(), *v))
        .collect();
    let growth = (0..3)
        .map(|a| {
            let mut env: Vec<(f64, f64)> = Vec::new();
            for (at, v) in &diagonal {
                let key = bracket(at[a]);
                match env.iter_mut().find(|(k, _)| (k - key).abs() <= 1e-9 * key) {
                    Some(slot) => slot.1 = slot.1.max(*v),
                    None => env.push((key, *v)),
                }
            }
            env.sort_by(|x, y| x.0.total_cmp(&y.0));
            fit_decay_exponent(&env).ok()
        })
        .collect();
    Ok(DecayReport { rows, slopes, growth, truncations })
}
