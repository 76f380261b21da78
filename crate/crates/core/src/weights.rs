//! Polynomial weights, tensor products, linear pullbacks and the
//! `v_{s₁,s₂}` weight, with sampled s-moderateness certification.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Direction of the phase-space transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransformDirection {
    /// `A(u, v) = ((u₁, -v₂, …, -v_{r+1}), (v₁, u₂, …, u_{r+1}))`.
    Forward,
    /// `B = A⁻¹`.
    Inverse,
}

/// The linear map `A` (or its inverse `B`) on `ℝ^{2d(r+1)}`, acting on
/// vectors laid out as `(u₁, …, u_{r+1}, v₁, …, v_{r+1})` with `u_k, v_k ∈ ℝ^d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PhaseSpaceTransform {
    pub r: usize,
    pub d: usize,
    pub direction: TransformDirection,
}

impl PhaseSpaceTransform {
    pub fn forward(r: usize, d: usize) -> Self {
        Self { r, d, direction: TransformDirection::Forward }
    }

    pub fn inverse(r: usize, d: usize) -> Self {
        Self { r, d, direction: TransformDirection::Inverse }
    }

    pub fn dim(&self) -> usize {
        2 * self.d * (self.r + 1)
    }

    pub fn inverted(&self) -> Self {
        let direction = match self.direction {
            TransformDirection::Forward => TransformDirection::Inverse,
            TransformDirection::Inverse => TransformDirection::Forward,
        };
        Self { direction, ..*self }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        let d = self.d;
        let half = self.dim() / 2;
        let (a, b) = x.split_at(half);
        let mut out = vec![0.0; self.dim()];
        let (oa, ob) = out.split_at_mut(half);
        oa[..d].copy_from_slice(&a[..d]);
        ob[..d].copy_from_slice(&b[..d]);
        match self.direction {
            TransformDirection::Forward => {
                for k in d..half {
                    oa[k] = -b[k];
                    ob[k] = a[k];
                }
            }
            TransformDirection::Inverse => {
                for k in d..half {
                    oa[k] = b[k];
                    ob[k] = -a[k];
                }
            }
        }
        Ok(out)
    }
}

/// A linear map used to pull a weight back.
#[derive(Clone, Debug, PartialEq)]
pub enum LinearMap {
    Transform(PhaseSpaceTransform),
    /// Row-major `rows × cols` matrix, mapping `ℝ^cols → ℝ^rows`.
    Matrix { rows: usize, cols: usize, entries: Vec<f64> },
}

impl LinearMap {
    pub fn input_dim(&self) -> usize {
        match self {
            LinearMap::Transform(t) => t.dim(),
            LinearMap::Matrix { cols, .. } => *cols,
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            LinearMap::Transform(t) => t.dim(),
            LinearMap::Matrix { rows, .. } => *rows,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            LinearMap::Transform(t) => t.apply(x),
            LinearMap::Matrix { rows, cols, entries } => {
                if x.len() != *cols {
                    return Err(Error::DimensionMismatch { expected: *cols, found: x.len() });
                }
                Ok((0..*rows)
                    .map(|i| entries[i * cols..(i + 1) * cols].iter().zip(x).map(|(a, b)| a * b).sum())
                    .collect())
            }
        }
    }
}

/// An evaluable, strictly positive weight function.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightSpec {
    /// `w ≡ 1` on `ℝ^dim`.
    Constant { dim: usize },
    /// `ω_s(z) = (1 + |z|²)^{s/2}` on `ℝ^dim`.
    Polynomial { s: f64, dim: usize },
    /// Product of weights acting on consecutive coordinate slices.
    Tensor(Vec<WeightSpec>),
    /// `w ∘ L`.
    Pullback { inner: Box<WeightSpec>, map: LinearMap },
    /// `v_{s₁,s₂}(x, ξ, η) = ⟨x⟩^{s₂} ⟨ξ⟩^{s₁} ⟨η⟩^{s₂}` on `ℝ^{3d}`.
    Mixed { s1: f64, s2: f64, d: usize },
}

impl WeightSpec {
    pub fn constant(dim: usize) -> Self {
        WeightSpec::Constant { dim }
    }

    pub fn omega(s: f64, dim: usize) -> Self {
        WeightSpec::Polynomial { s, dim }
    }

    /// `Ω_s = ω_s ⊗ ⋯ ⊗ ω_s` with `r + 1` factors, each on `ℝ^{2d}`.
    pub fn big_omega(s: f64, r: usize, d: usize) -> Self {
        WeightSpec::Tensor(vec![WeightSpec::omega(s, 2 * d); r + 1])
    }

    pub fn pullback(inner: WeightSpec, map: LinearMap) -> Result<Self> {
        if map.output_dim() != inner.domain_dim() {
            return Err(Error::DimensionMismatch { expected: inner.domain_dim(), found: map.output_dim() });
        }
        Ok(WeightSpec::Pullback { inner: Box::new(inner), map })
    }

    /// The two-argument section `(x, ξ) ↦ v_{s₁,s₂}(x, ξ, 0) = ⟨x⟩^{s₂}⟨ξ⟩^{s₁}`
    /// of the mixed weight, as a weight on `ℝ^{2d}`.
    pub fn mixed_section(s1: f64, s2: f64, d: usize) -> Self {
        let mut entries = vec![0.0; 3 * d * 2 * d];
        for k in 0..2 * d {
            entries[k * 2 * d + k] = 1.0;
        }
        WeightSpec::Pullback {
            inner: Box::new(WeightSpec::Mixed { s1, s2, d }),
            map: LinearMap::Matrix { rows: 3 * d, cols: 2 * d, entries },
        }
    }

    pub fn domain_dim(&self) -> usize {
        match self {
            WeightSpec::Constant { dim } | WeightSpec::Polynomial { dim, .. } => *dim,
            WeightSpec::Tensor(parts) => parts.iter().map(WeightSpec::domain_dim).sum(),
            WeightSpec::Pullback { map, .. } => map.input_dim(),
            WeightSpec::Mixed { d, .. } => 3 * d,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.domain_dim() {
            return Err(Error::DimensionMismatch { expected: self.domain_dim(), found: x.len() });
        }
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            WeightSpec::Constant { .. } => 1.0,
            WeightSpec::Polynomial { s, .. } => {
                if *s == 0.0 {
                    1.0
                } else {
                    (1.0 + x.iter().map(|v| v * v).sum::<f64>()).powf(s / 2.0)
                }
            }
            WeightSpec::Tensor(parts) => {
                let mut offset = 0;
                let mut acc = 1.0;
                for p in parts {
                    let n = p.domain_dim();
                    acc *= p.eval_unchecked(&x[offset..offset + n]);
                    offset += n;
                }
                acc
            }
            WeightSpec::Pullback { inner, map } => {
                let y = map.apply(x).expect("pullback dimensions validated at construction");
                inner.eval_unchecked(&y)
            }
            WeightSpec::Mixed { s1, s2, d } => {
                let sq = |v: &[f64]| 1.0 + v.iter().map(|t| t * t).sum::<f64>();
                let (xs, rest) = x.split_at(*d);
                let (xi, eta) = rest.split_at(*d);
                sq(xs).powf(s2 / 2.0) * sq(xi).powf(s1 / 2.0) * sq(eta).powf(s2 / 2.0)
            }
        }
    }
}

/// Result of a sampled s-moderateness check.
#[derive(Clone, Debug, PartialEq)]
pub struct ModerateReport {
    /// Largest sampled `w(x+y) / ((1+|x|²)^{s/2} w(y))`.
    pub constant: f64,
    pub samples: usize,
    pub seed: u64,
    pub pass: bool,
}

/// `w(x+y) / ((1+|x|²)^{s/2} w(y))` for one pair.
pub fn moderate_ratio(w: &WeightSpec, s: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    let sum: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
    let num = w.eval(&sum)?;
    let den = (1.0 + x.iter().map(|v| v * v).sum::<f64>()).powf(s / 2.0) * w.eval(y)?;
    Ok(num / den)
}

/// Samples pairs `(x, y)` uniformly in `[-box, box]^{2·dim}` and reports the
/// largest moderateness ratio. Passing means every sampled ratio was finite.
pub fn check_s_moderate(w: &WeightSpec, s: f64, sample_count: usize, half_box: f64, seed: u64) -> Result<ModerateReport> {
    if sample_count == 0 {
        return Err(Error::InsufficientSamples { needed: 1, have: 0 });
    }
    let dim = w.domain_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; dim];
    let mut y = vec![0.0; dim];
    let mut constant: f64 = 0.0;
    let mut finite = true;
    for _ in 0..sample_count {
        for v in x.iter_mut().chain(y.iter_mut()) {
            *v = rng.gen_range(-half_box..=half_box);
        }
        let r = moderate_ratio(w, s, &x, &y)?;
        finite &= r.is_finite();
        constant = constant.max(r);
    }
    Ok(ModerateReport { constant, samples: sample_count, seed, pass: finite && constant.is_finite() })
}
