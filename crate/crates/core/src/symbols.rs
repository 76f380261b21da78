//! Amplitudes `σ(x, ξ₁, …, ξ_r)` on the line: a built-in separable library
//! with exact derivatives, arbitrary closures, torus forward differences and
//! sampled class certification.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{bracket, SampledField, UniformGrid, C64};
use crate::jet;

/// A univariate factor.
#[derive(Clone, Debug, PartialEq)]
pub enum Profile {
    One,
    /// `⟨t⟩^s`.
    Bracket(f64),
    /// `e^{-π a t²}`.
    Gaussian(f64),
    /// `t^k`.
    Monomial(u32),
    /// `cos(2π ω t)`.
    Cosine(f64),
}

impl Profile {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Profile::One => 1.0,
            Profile::Bracket(s) => bracket(t).powf(s),
            Profile::Gaussian(a) => (-std::f64::consts::PI * a * t * t).exp(),
            Profile::Monomial(k) => t.powi(k as i32),
            Profile::Cosine(w) => (2.0 * std::f64::consts::PI * w * t).cos(),
        }
    }

    /// The `k`-th derivative at `t`.
    pub fn derivative(&self, t: f64, k: usize) -> f64 {
        if k == 0 {
            return self.value(t);
        }
        match *self {
            Profile::One => 0.0,
            Profile::Bracket(s) => {
                let mut u = jet::mul(&jet::variable(t, k + 1), &jet::variable(t, k + 1));
                u[0] += 1.0;
                jet::pow(&u, s / 2.0)[k] * jet::factorial(k)
            }
            Profile::Gaussian(a) => {
                let mut v = vec![0.0; k + 1];
                v[0] = -std::f64::consts::PI * a * t * t;
                v[1] = -2.0 * std::f64::consts::PI * a * t;
                if k >= 2 {
                    v[2] = -std::f64::consts::PI * a;
                }
                jet::exp(&v)[k] * jet::factorial(k)
            }
            Profile::Monomial(p) => {
                if k as u32 > p {
                    0.0
                } else {
                    let falling: f64 = (0..k).map(|i| (p as usize - i) as f64).product();
                    falling * t.powi((p as usize - k) as i32)
                }
            }
            Profile::Cosine(w) => {
                let om = 2.0 * std::f64::consts::PI * w;
                om.powi(k as i32) * (om * t + k as f64 * std::f64::consts::FRAC_PI_2).cos()
            }
        }
    }
}

/// `profile(t - center)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    pub profile: Profile,
    pub center: f64,
}

impl Factor {
    pub fn new(profile: Profile) -> Self {
        Self { profile, center: 0.0 }
    }

    pub fn centered(profile: Profile, center: f64) -> Self {
        Self { profile, center }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.profile.value(t - self.center)
    }

    pub fn derivative(&self, t: f64, k: usize) -> f64 {
        self.profile.derivative(t - self.center, k)
    }
}

/// `coeff · ∏_j factors[j](z_j)`, one factor per variable `(x, ξ₁, …, ξ_r)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coeff: C64,
    pub factors: Vec<Factor>,
}

pub type SymbolFn = Arc<dyn Fn(&[f64]) -> C64 + Send + Sync>;

/// Declared symbol class. Bounds are evaluated with unit constants.
#[derive(Clone, Debug, PartialEq)]
pub enum SymbolClass {
    /// `|∂_x^α ∂^β σ| ≲ ∏_k ⟨ξ_k⟩^{m_k - ρ|β_k| + δ|α|}`.
    Hormander { orders: Vec<f64>, rho: f64, delta: f64 },
    /// `|∂_x^α ∂_ξ^β ∂_η^γ σ| ≲ ⟨x⟩^{m₃-|α|} ⟨ξ⟩^{m₁-|β|} ⟨η⟩^{m₂-|γ|}`.
    Sg { m1: f64, m2: f64, m3: f64 },
    /// `|∂_x^α ∂_ξ^β ∂_η^γ σ| ≲ ⟨x⟩^{m₃} ⟨ξ⟩^{m₁} ⟨η⟩^{m₂}` for `|α| ≤ 2N₃`, `|β| ≤ 2N₁`, `|γ| ≤ 2N₂`.
    Rough { m1: f64, m2: f64, m3: f64, n1: u32, n2: u32, n3: u32 },
    /// Hörmander bounds with forward differences in the integer frequencies.
    TorusHormander { orders: Vec<f64>, rho: f64, delta: f64 },
    Unspecified,
}

impl SymbolClass {
    fn arity_ok(&self, r: usize) -> bool {
        match self {
            SymbolClass::Hormander { orders, .. } | SymbolClass::TorusHormander { orders, .. } => orders.len() == r,
            SymbolClass::Sg { .. } | SymbolClass::Rough { .. } => r == 2,
            SymbolClass::Unspecified => true,
        }
    }

    pub fn is_torus(&self) -> bool {
        matches!(self, SymbolClass::TorusHormander { .. })
    }

    /// Bound at `z` for the multi-index `idx = (α, β₁, …, β_r)`, or `None` if
    /// the class says nothing about that order.
    pub fn bound(&self, idx: &[u32], z: &[f64]) -> Option<f64> {
        match self {
            SymbolClass::Hormander { orders, rho, delta } | SymbolClass::TorusHormander { orders, rho, delta } => {
                let a = idx[0] as f64;
                Some(
                    orders
                        .iter()
                        .enumerate()
                        .map(|(k, m)| bracket(z[k + 1]).powf(m - rho * idx[k + 1] as f64 + delta * a))
                        .product(),
                )
            }
            SymbolClass::Sg { m1, m2, m3 } => Some(
                bracket(z[0]).powf(m3 - idx[0] as f64)
                    * bracket(z[1]).powf(m1 - idx[1] as f64)
                    * bracket(z[2]).powf(m2 - idx[2] as f64),
            ),
            SymbolClass::Rough { m1, m2, m3, n1, n2, n3 } => {
                if idx[0] > 2 * n3 || idx[1] > 2 * n1 || idx[2] > 2 * n2 {
                    None
                } else {
                    Some(bracket(z[0]).powf(*m3) * bracket(z[1]).powf(*m1) * bracket(z[2]).powf(*m2))
                }
            }
            SymbolClass::Unspecified => None,
        }
    }

    /// How the class display is read; carried into certification reports.
    pub fn reading_notes(&self) -> Vec<&'static str> {
        match self {
            SymbolClass::Hormander { .. } | SymbolClass::TorusHormander { .. } => vec![
                "exponent read as m_k - rho|beta_k| + delta|alpha|",
                "product read as k = 1..r",
            ],
            _ => Vec::new(),
        }
    }
}

#[derive(Clone)]
pub enum SymbolKind {
    Separable(Vec<Term>),
    Custom(SymbolFn),
    /// `Δ^β σ` with unit forward differences in the frequency variables.
    Difference { inner: Box<SymbolSpec>, beta: Vec<u32> },
}

/// How a derivative value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeMethod {
    Analytic,
    FiniteDifference,
}

#[derive(Clone)]
pub struct SymbolSpec {
    arity: usize,
    kind: SymbolKind,
    class: SymbolClass,
    name: String,
}

impl fmt::Debug for SymbolSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            SymbolKind::Separable(t) => format!("separable({} terms)", t.len()),
            SymbolKind::Custom(_) => "custom".to_string(),
            SymbolKind::Difference { beta, .. } => format!("difference{beta:?}"),
        };
        f.debug_struct("SymbolSpec")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .field("kind", &kind)
            .field("class", &self.class)
            .finish()
    }
}

impl SymbolSpec {
    pub fn separable(arity: usize, terms: Vec<Term>, class: SymbolClass, name: impl Into<String>) -> Result<Self> {
        if arity == 0 {
            return Err(Error::ArityMismatch { expected: 1, found: 0 });
        }
        for t in &terms {
            if t.factors.len() != arity + 1 {
                return Err(Error::ArityMismatch { expected: arity + 1, found: t.factors.len() });
            }
        }
        Self::with_kind(arity, SymbolKind::Separable(terms), class, name)
    }

    pub fn custom(arity: usize, f: SymbolFn, class: SymbolClass, name: impl Into<String>) -> Result<Self> {
        if arity == 0 {
            return Err(Error::ArityMismatch { expected: 1, found: 0 });
        }
        Self::with_kind(arity, SymbolKind::Custom(f), class, name)
    }

    fn with_kind(arity: usize, kind: SymbolKind, class: SymbolClass, name: impl Into<String>) -> Result<Self> {
        if !class.arity_ok(arity) {
            return Err(Error::ArityMismatch { expected: arity, found: class_arity(&class) });
        }
        Ok(Self { arity, kind, class, name: name.into() })
    }

    /// A single separable product.
    pub fn product(arity: usize, factors: Vec<Factor>, class: SymbolClass, name: impl Into<String>) -> Result<Self> {
        Self::separable(arity, vec![Term { coeff: C64::new(1.0, 0.0), factors }], class, name)
    }

    /// `σ ≡ 1`.
    pub fn one(arity: usize) -> Self {
        let class = if arity == 2 {
            SymbolClass::Sg { m1: 0.0, m2: 0.0, m3: 0.0 }
        } else {
            SymbolClass::Hormander { orders: vec![0.0; arity], rho: 1.0, delta: 0.0 }
        };
        Self::product(arity, vec![Factor::new(Profile::One); arity + 1], class, "one").expect("valid arity")
    }

    /// `σ = 0`.
    pub fn zero(arity: usize) -> Self {
        Self::separable(arity, Vec::new(), SymbolClass::Unspecified, "zero").expect("valid arity")
    }

    /// `⟨ξ⟩^{m₁} ⟨η⟩^{m₂} ⟨x⟩^{m₃}`, declared `SG(m₁, m₂, m₃)`.
    pub fn sg(m1: f64, m2: f64, m3: f64) -> Self {
        Self::product(
            2,
            vec![Factor::new(Profile::Bracket(m3)), Factor::new(Profile::Bracket(m1)), Factor::new(Profile::Bracket(m2))],
            SymbolClass::Sg { m1, m2, m3 },
            format!("sg({m1},{m2},{m3})"),
        )
        .expect("bilinear")
    }

    /// `e^{-π a (x² + ξ₁² + ⋯ + ξ_r²)}`.
    pub fn peaked(a: f64, arity: usize) -> Self {
        let class = if arity == 2 {
            SymbolClass::Sg { m1: 0.0, m2: 0.0, m3: 0.0 }
        } else {
            SymbolClass::Hormander { orders: vec![0.0; arity], rho: 1.0, delta: 0.0 }
        };
        Self::product(arity, vec![Factor::new(Profile::Gaussian(a)); arity + 1], class, format!("peaked({a})")).expect("valid arity")
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn class(&self) -> &SymbolClass {
        &self.class
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &SymbolKind {
        &self.kind
    }

    /// Terms of a separable symbol.
    pub fn terms(&self) -> Option<&[Term]> {
        match &self.kind {
            SymbolKind::Separable(t) => Some(t),
            _ => None,
        }
    }

    pub fn with_class(mut self, class: SymbolClass) -> Result<Self> {
        if !class.arity_ok(self.arity) {
            return Err(Error::ArityMismatch { expected: self.arity, found: class_arity(&class) });
        }
        self.class = class;
        Ok(self)
    }

    /// `σ(z)` with `z = (x, ξ₁, …, ξ_r)`.
    pub fn eval(&self, z: &[f64]) -> C64 {
        debug_assert_eq!(z.len(), self.arity + 1);
        match &self.kind {
            SymbolKind::Separable(terms) => terms
                .iter()
                .map(|t| t.coeff * t.factors.iter().zip(z).map(|(f, &v)| f.value(v)).product::<f64>())
                .sum(),
            SymbolKind::Custom(f) => f(z),
            SymbolKind::Difference { inner, beta } => difference_sum(beta, z, |w| inner.eval(w)),
        }
    }

    /// `∂^idx σ(z)`, exact for the built-in library and by Richardson-extrapolated
    /// central differences for closures.
    pub fn derivative(&self, z: &[f64], idx: &[u32]) -> Result<(C64, DerivativeMethod)> {
        if z.len() != self.arity + 1 || idx.len() != self.arity + 1 {
            return Err(Error::ArityMismatch { expected: self.arity + 1, found: z.len().min(idx.len()) });
        }
        match &self.kind {
            SymbolKind::Separable(terms) => {
                let v = terms
                    .iter()
                    .map(|t| {
                        t.coeff
                            * t.factors
                                .iter()
                                .zip(z)
                                .zip(idx)
                                .map(|((f, &v), &k)| f.derivative(v, k as usize))
                                .product::<f64>()
                    })
                    .sum();
                Ok((v, DerivativeMethod::Analytic))
            }
            SymbolKind::Custom(f) => Ok((richardson_derivative(|w| f(w), z, idx)?, DerivativeMethod::FiniteDifference)),
            SymbolKind::Difference { inner, beta } => {
                let mut method = DerivativeMethod::Analytic;
                let mut err = None;
                let v = difference_sum(beta, z, |w| match inner.derivative(w, idx) {
                    Ok((v, m)) => {
                        if m == DerivativeMethod::FiniteDifference {
                            method = m;
                        }
                        v
                    }
                    Err(e) => {
                        err = Some(e);
                        C64::new(0.0, 0.0)
                    }
                });
                match err {
                    Some(e) => Err(e),
                    None => Ok((v, method)),
                }
            }
        }
    }

    /// `Δ_{ξ₁}^{β₁} ⋯ Δ_{ξ_r}^{β_r} σ` for torus symbols.
    pub fn forward_difference(&self, beta: &[u32]) -> Result<SymbolSpec> {
        if !self.class.is_torus() {
            return Err(Error::Domain(format!(
                "forward differences need integer frequencies; `{}` is not a torus symbol",
                self.name
            )));
        }
        if beta.len() != self.arity {
            return Err(Error::ArityMismatch { expected: self.arity, found: beta.len() });
        }
        if beta.iter().all(|&b| b == 0) {
            return Ok(self.clone());
        }
        Ok(SymbolSpec {
            arity: self.arity,
            kind: SymbolKind::Difference { inner: Box::new(self.clone()), beta: beta.to_vec() },
            class: SymbolClass::Unspecified,
            name: format!("diff{beta:?}({})", self.name),
        })
    }

    /// Samples `σ` on `grids = (x-grid, ξ₁-grid, …)` as an `(r+1)`-block field.
    pub fn sample(&self, grids: &[UniformGrid]) -> Result<SampledField> {
        if grids.len() != self.arity + 1 {
            return Err(Error::ArityMismatch { expected: self.arity + 1, found: grids.len() });
        }
        if let Some(g) = grids.iter().find(|g| g.dim() != 1) {
            return Err(Error::DimensionMismatch { expected: 1, found: g.dim() });
        }
        let pts: Vec<Vec<f64>> = grids.iter().map(UniformGrid::points).collect();
        let shape: Vec<usize> = pts.iter().map(Vec::len).collect();
        let inner: usize = shape[1..].iter().product();
        let mut data = vec![C64::new(0.0, 0.0); shape[0] * inner];
        data.par_chunks_mut(inner).enumerate().for_each(|(i, chunk)| {
            let mut z = vec![0.0; shape.len()];
            z[0] = pts[0][i];
            for (off, v) in chunk.iter_mut().enumerate() {
                let mut rem = off;
                for a in (1..shape.len()).rev() {
                    z[a] = pts[a][rem % shape[a]];
                    rem /= shape[a];
                }
                *v = self.eval(&z);
            }
        });
        if data.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite(format!("symbol `{}` on the working grid", self.name)));
        }
        SampledField::new(grids.to_vec(), data)
    }
}

fn class_arity(c: &SymbolClass) -> usize {
    match c {
        SymbolClass::Hormander { orders, .. } | SymbolClass::TorusHormander { orders, .. } => orders.len(),
        SymbolClass::Sg { .. } | SymbolClass::Rough { .. } => 2,
        SymbolClass::Unspecified => 0,
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `Σ_j ∏_k (-1)^{β_k - j_k} C(β_k, j_k) f(z + j)` over frequency slots.
fn difference_sum(beta: &[u32], z: &[f64], mut f: impl FnMut(&[f64]) -> C64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    let mut j = vec![0u32; beta.len()];
    let mut w = z.to_vec();
    loop {
        let mut c = 1.0;
        for (k, (&b, &jk)) in beta.iter().zip(&j).enumerate() {
            c *= binomial(b, jk) * if (b - jk) % 2 == 0 { 1.0 } else { -1.0 };
            w[k + 1] = z[k + 1] + jk as f64;
        }
        acc += f(&w) * c;
        let mut k = 0;
        loop {
            if k == beta.len() {
                return acc;
            }
            if j[k] < beta[k] {
                j[k] += 1;
                break;
            }
            j[k] = 0;
            k += 1;
        }
    }
}

/// Mixed central difference with per-axis step `h[a]`; also returns the
/// largest `|f|` on the stencil.
fn central_difference(f: &impl Fn(&[f64]) -> C64, z: &[f64], idx: &[u32], h: &[f64]) -> (C64, f64) {
    let axes: Vec<usize> = (0..idx.len()).filter(|&a| idx[a] > 0).collect();
    let mut j = vec![0u32; axes.len()];
    let mut w = z.to_vec();
    let mut acc = C64::new(0.0, 0.0);
    let mut peak: f64 = 0.0;
    loop {
        let mut c = 1.0;
        for (slot, &a) in axes.iter().enumerate() {
            let k = idx[a];
            c *= binomial(k, j[slot]) * if j[slot] % 2 == 0 { 1.0 } else { -1.0 };
            w[a] = z[a] + (k as f64 / 2.0 - j[slot] as f64) * h[a];
        }
        let v = f(&w);
        peak = peak.max(v.norm());
        acc += v * c;
        let mut s = 0;
        loop {
            if s == axes.len() {
                let scale: f64 = axes.iter().map(|&a| h[a].powi(idx[a] as i32)).product();
                return (acc / scale, peak);
            }
            if j[s] < idx[axes[s]] {
                j[s] += 1;
                break;
            }
            j[s] = 0;
            s += 1;
        }
    }
}

/// Step used for a `k`-th order central difference on unit-scale data.
pub(crate) fn fd_step(order: u32) -> f64 {
    if order <= 2 {
        1e-4
    } else {
        f64::EPSILON.powf(1.0 / (order as f64 + 4.0))
    }
}

fn richardson_derivative(f: impl Fn(&[f64]) -> C64, z: &[f64], idx: &[u32]) -> Result<C64> {
    if idx.iter().all(|&k| k == 0) {
        return Ok(f(z));
    }
    let step = fd_step(idx.iter().sum());
    let h = vec![step; idx.len()];
    let half: Vec<f64> = h.iter().map(|v| v / 2.0).collect();
    let (coarse, peak) = central_difference(&f, z, idx, &h);
    let (fine, _) = central_difference(&f, z, idx, &half);
    let v = (fine * 4.0 - coarse) / 3.0;
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::FiniteDifference(format!("non-finite derivative {idx:?} at {z:?}")));
    }
    let order: u32 = idx.iter().sum();
    // round-off of the fine stencil: eps · max|f| · Σ|weights| / h^k
    let floor = 8.0 * f64::EPSILON * peak * 2f64.powi(order as i32) / (step / 2.0).powi(order as i32);
    let spread = (fine - coarse).norm();
    if v.norm() <= floor.max(spread) {
        return Ok(C64::new(0.0, 0.0));
    }
    // the two estimates must agree to within their own truncation scale
    if spread > 1e-2 * fine.norm().max(coarse.norm()) {
        return Err(Error::FiniteDifference(format!(
            "unstable derivative {idx:?} at {z:?}: estimates differ by {spread:e}"
        )));
    }
    Ok(v)
}

/// One multi-index row of a certification report.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassRow {
    pub multi_index: Vec<u32>,
    /// `sup |∂σ| / bound` over the box.
    pub ratio: f64,
    /// The same over the doubled box.
    pub ratio_doubled: f64,
    pub method: DerivativeMethod,
    pub error: Option<String>,
}

impl ClassRow {
    pub fn growth(&self) -> f64 {
        if self.ratio == 0.0 {
            if self.ratio_doubled == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            self.ratio_doubled / self.ratio
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassReport {
    pub rows: Vec<ClassRow>,
    pub half_box: f64,
    pub tol: f64,
    pub notes: Vec<&'static str>,
    pub pass: bool,
}

impl ClassReport {
    pub fn max_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio_doubled).fold(0.0, f64::max)
    }
}

/// Sample points on `[-b, b]`: quadratically clustered at the origin, with
/// both endpoints. Integer points when `integer` is set.
fn box_points(b: f64, per_axis: usize, integer: bool) -> Vec<f64> {
    if integer {
        let k = b.floor() as i64;
        return (-k..=k).map(|v| v as f64).collect();
    }
    let half = per_axis.max(3) / 2;
    let mut pts: Vec<f64> = (0..=half).map(|i| b * (i as f64 / half as f64).powi(2)).collect();
    let neg: Vec<f64> = pts[1..].iter().map(|v| -v).collect();
    pts.extend(neg);
    pts.sort_by(f64::total_cmp);
    pts
}

/// Checks the declared class on `[-B, B]^{r+1}` and `[-2B, 2B]^{r+1}` for every
/// multi-index `≤ order_limit`. A row passes when both ratios are finite and
/// the doubled-box ratio exceeds the box ratio by at most the factor `1 + tol`.
pub fn certify_class(s: &SymbolSpec, order_limit: &[u32], half_box: f64, per_axis: usize, tol: f64) -> Result<ClassReport> {
    if order_limit.len() != s.arity + 1 {
        return Err(Error::ArityMismatch { expected: s.arity + 1, found: order_limit.len() });
    }
    if matches!(s.class, SymbolClass::Unspecified) {
        return Err(Error::Domain(format!("symbol `{}` declares no class", s.name)));
    }
    let torus = s.class.is_torus();
    let mut indices = vec![Vec::new()];
    for &lim in order_limit {
        indices = indices
            .into_iter()
            .flat_map(|p: Vec<u32>| {
                (0..=lim).map(move |k| {
                    let mut q = p.clone();
                    q.push(k);
                    q
                })
            })
            .collect();
    }
    let rows: Vec<ClassRow> = indices
        .par_iter()
        .filter(|idx| s.class.bound(idx, &vec![0.0; idx.len()]).is_some())
        .map(|idx| {
            let mut row = ClassRow {
                multi_index: idx.clone(),
                ratio: 0.0,
                ratio_doubled: 0.0,
                method: DerivativeMethod::Analytic,
                error: None,
            };
            for (slot, b) in [(0, half_box), (1, 2.0 * half_box)] {
                match sup_ratio(s, idx, b, per_axis, torus) {
                    Ok((r, m)) => {
                        if slot == 0 {
                            row.ratio = r;
                        } else {
                            row.ratio_doubled = r;
                        }
                        if m == DerivativeMethod::FiniteDifference {
                            row.method = m;
                        }
                    }
                    Err(e) => row.error = Some(e.to_string()),
                }
            }
            row
        })
        .collect();
    let pass = rows.iter().all(|r| {
        r.error.is_none() && r.ratio.is_finite() && r.ratio_doubled.is_finite() && r.growth() <= 1.0 + tol
    });
    Ok(ClassReport { rows, half_box, tol, notes: s.class.reading_notes(), pass })
}

fn sup_ratio(s: &SymbolSpec, idx: &[u32], b: f64, per_axis: usize, torus: bool) -> Result<(f64, DerivativeMethod)> {
    let x_pts = box_points(b, per_axis, false);
    let f_pts = box_points(b, per_axis, torus);
    let dim = idx.len();
    // torus symbols: x-derivatives of forward differences in the frequencies
    let (target, deriv_idx) = if torus {
        let mut d = vec![0u32; dim];
        d[0] = idx[0];
        (s.forward_difference(&idx[1..])?, d)
    } else {
        (s.clone(), idx.to_vec())
    };
    let total: usize = x_pts.len() * f_pts.len().pow((dim - 1) as u32);
    let mut z = vec![0.0; dim];
    let mut sup: f64 = 0.0;
    let mut method = DerivativeMethod::Analytic;
    for k in 0..total {
        let mut rem = k;
        for a in (1..dim).rev() {
            z[a] = f_pts[rem % f_pts.len()];
            rem /= f_pts.len();
        }
        z[0] = x_pts[rem];
        let (v, m) = target.derivative(&z, &deriv_idx)?;
        if m == DerivativeMethod::FiniteDifference {
            method = m;
        }
        let bound = s.class.bound(idx, &z).expect("filtered to covered indices");
        sup = sup.max(v.norm() / bound);
    }
    Ok((sup, method))
}
