//! Phase functions `Φ(x, ξ)` on the line with analytic gradients, and
//! sampled checks of smoothness, linearity and nondegeneracy.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type PhaseFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type PhaseGradFn = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;

#[derive(Clone)]
pub enum PhaseKind {
    Zero,
    /// `x·ξ`.
    Linear,
    /// `(x + c)·ξ`.
    Shifted(f64),
    /// `(x + ε sin x)·ξ`.
    Perturbed(f64),
    Custom { value: PhaseFn, gradient: PhaseGradFn, linear_in_second: bool },
}

#[derive(Clone)]
pub struct PhaseSpec {
    kind: PhaseKind,
    name: String,
}

impl fmt::Debug for PhaseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhaseSpec").field("name", &self.name).finish()
    }
}

impl PhaseSpec {
    pub fn zero() -> Self {
        Self { kind: PhaseKind::Zero, name: "phase.zero".into() }
    }

    pub fn linear() -> Self {
        Self { kind: PhaseKind::Linear, name: "phase.linear".into() }
    }

    pub fn shifted(c: f64) -> Self {
        Self { kind: PhaseKind::Shifted(c), name: format!("phase.shifted({c})") }
    }

    pub fn perturbed(eps: f64) -> Self {
        Self { kind: PhaseKind::Perturbed(eps), name: format!("phase.perturbed({eps})") }
    }

    pub fn custom(value: PhaseFn, gradient: PhaseGradFn, linear_in_second: bool, name: impl Into<String>) -> Self {
        Self { kind: PhaseKind::Custom { value, gradient, linear_in_second }, name: name.into() }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &PhaseKind {
        &self.kind
    }

    pub fn is_linear_in_second(&self) -> bool {
        match &self.kind {
            PhaseKind::Custom { linear_in_second, .. } => *linear_in_second,
            _ => true,
        }
    }

    /// For built-in phases of the form `a(x)·ξ`, the coefficient `a(x)`.
    pub fn coefficient(&self, x: f64) -> Option<f64> {
        match self.kind {
            PhaseKind::Zero => Some(0.0),
            PhaseKind::Linear => Some(x),
            PhaseKind::Shifted(c) => Some(x + c),
            PhaseKind::Perturbed(e) => Some(x + e * x.sin()),
            PhaseKind::Custom { .. } => None,
        }
    }

    /// True for `Φ(x, ξ) = x·ξ`.
    pub fn is_standard(&self) -> bool {
        matches!(self.kind, PhaseKind::Linear)
    }

    pub fn eval(&self, x: f64, xi: f64) -> f64 {
        match &self.kind {
            PhaseKind::Custom { value, .. } => value(x, xi),
            _ => self.coefficient(x).expect("built-in") * xi,
        }
    }

    /// `(∂_x Φ, ∂_ξ Φ)`.
    pub fn gradient(&self, x: f64, xi: f64) -> [f64; 2] {
        match &self.kind {
            PhaseKind::Zero => [0.0, 0.0],
            PhaseKind::Linear => [xi, x],
            PhaseKind::Shifted(c) => [xi, x + c],
            PhaseKind::Perturbed(e) => [(1.0 + e * x.cos()) * xi, x + e * x.sin()],
            PhaseKind::Custom { gradient, .. } => gradient(x, xi),
        }
    }
}

/// Sampled properties of the total phase `Φ(x, ξ₁, …, ξ_r) = Σ Φ_i(x, ξ_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseReport {
    /// Largest relative mismatch between analytic and finite-difference gradients.
    pub gradient_mismatch: f64,
    /// `max |∂^α Φ|` over `|α| = 2` on the box and on the doubled box.
    pub second_order: (f64, f64),
    /// `max |∂^α Φ|` over `|α| = 3` on the box.
    pub third_order: f64,
    /// `min_i min |∂_x ∂_{ξ_i} Φ|` over the samples.
    pub delta: f64,
    pub degenerate: bool,
    /// Second derivatives grow with the box, so they are not uniformly bounded.
    pub second_order_unbounded: bool,
    pub samples: usize,
    pub seed: u64,
}

const GRADIENT_TOL: f64 = 1e-6;

/// Checks the phases on `[-B, B]^{r+1}` with `samples` seeded random points.
pub fn phase_checks(phases: &[PhaseSpec], half_box: f64, samples: usize, seed: u64) -> Result<PhaseReport> {
    if phases.is_empty() {
        return Err(Error::ArityMismatch { expected: 1, found: 0 });
    }
    if samples == 0 {
        return Err(Error::InsufficientSamples { needed: 1, have: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatch: f64 = 0.0;
    let mut second = (0.0f64, 0.0f64);
    let mut third: f64 = 0.0;
    let mut delta = f64::INFINITY;
    let h = 1e-4;
    for _ in 0..samples {
        for (slot, scale) in [(0, 1.0), (1, 2.0)] {
            let x = rng.gen_range(-half_box..=half_box) * scale;
            for p in phases {
                let xi = rng.gen_range(-half_box..=half_box) * scale;
                if p.is_linear_in_second() {
                    check_linear(p, x, xi, rng.gen_range(-half_box..=half_box))?;
                }
                let g = p.gradient(x, xi);
                if slot == 0 {
                    let fd = [
                        (p.eval(x + h, xi) - p.eval(x - h, xi)) / (2.0 * h),
                        (p.eval(x, xi + h) - p.eval(x, xi - h)) / (2.0 * h),
                    ];
                    for k in 0..2 {
                        let scale = g[k].abs().max(fd[k].abs()).max(1.0);
                        mismatch = mismatch.max((g[k] - fd[k]).abs() / scale);
                    }
                }
                // Hessian of Φ_i from the analytic gradient
                let gx = p.gradient(x + h, xi);
                let gx_ = p.gradient(x - h, xi);
                let gk = p.gradient(x, xi + h);
                let gk_ = p.gradient(x, xi - h);
                let hxx = (gx[0] - gx_[0]) / (2.0 * h);
                let hxk = (gx[1] - gx_[1]) / (2.0 * h);
                let hkk = (gk[1] - gk_[1]) / (2.0 * h);
                let hkx = (gk[0] - gk_[0]) / (2.0 * h);
                let mixed = 0.5 * (hxk + hkx);
                let m2 = hxx.abs().max(hkk.abs()).max(mixed.abs());
                if slot == 0 {
                    second.0 = second.0.max(m2);
                    delta = delta.min(mixed.abs());
                    third = third.max(third_order(p, x, xi));
                } else {
                    second.1 = second.1.max(m2);
                }
            }
        }
    }
    if mismatch > GRADIENT_TOL {
        return Err(Error::FiniteDifference(format!(
            "analytic phase gradient disagrees with finite differences (relative {mismatch:e})"
        )));
    }
    Ok(PhaseReport {
        gradient_mismatch: mismatch,
        second_order: second,
        third_order: third,
        delta,
        degenerate: delta < 1e-12,
        second_order_unbounded: second.1 > 1.25 * second.0 + 1e-9,
        samples,
        seed,
    })
}

/// Largest third derivative of `Φ_i` from second differences of its gradient.
fn third_order(p: &PhaseSpec, x: f64, xi: f64) -> f64 {
    let h = 1e-3;
    let mut m: f64 = 0.0;
    for (dx, dk) in [(h, 0.0), (0.0, h)] {
        let a = p.gradient(x + dx, xi + dk);
        let b = p.gradient(x, xi);
        let c = p.gradient(x - dx, xi - dk);
        for k in 0..2 {
            m = m.max(((a[k] - 2.0 * b[k] + c[k]) / (h * h)).abs());
        }
    }
    m
}

fn check_linear(p: &PhaseSpec, x: f64, a: f64, b: f64) -> Result<()> {
    let base = p.eval(x, 0.0);
    let lhs = p.eval(x, a + b) - base;
    let rhs = (p.eval(x, a) - base) + (p.eval(x, b) - base);
    let lhs2 = p.eval(x, 2.5 * a) - base;
    let rhs2 = 2.5 * (p.eval(x, a) - base);
    let scale = lhs.abs().max(rhs.abs()).max(lhs2.abs()).max(1.0);
    if (lhs - rhs).abs() > 1e-9 * scale || (lhs2 - rhs2).abs() > 1e-9 * scale {
        return Err(Error::NonLinearPhase(format!("{} at x = {x}", p.name())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_phase_report() {
        let r = phase_checks(&[PhaseSpec::linear(), PhaseSpec::linear()], 5.0, 100, 1).unwrap();
        assert!((r.delta - 1.0).abs() < 1e-8);
        assert!(r.third_order < 1e-6);
        assert!(!r.degenerate && !r.second_order_unbounded);
    }

    #[test]
    fn perturbed_phase_delta() {
        for b in [1.0, 10.0, 100.0] {
            let r = phase_checks(&[PhaseSpec::perturbed(0.1)], b, 100, 2).unwrap();
            assert!(r.delta >= 0.9 - 1e-8);
        }
        // ∂²_x Φ = -ε sin(x) ξ grows with ξ
        let r = phase_checks(&[PhaseSpec::perturbed(0.1), PhaseSpec::perturbed(0.1)], 20.0, 200, 3).unwrap();
        assert!(r.second_order_unbounded);
    }

    #[test]
    fn zero_phase_is_degenerate() {
        let r = phase_checks(&[PhaseSpec::zero()], 3.0, 20, 0).unwrap();
        assert_eq!(r.delta, 0.0);
        assert!(r.degenerate);
    }

    #[test]
    fn gradients_agree_with_differences() {
        let phases = [PhaseSpec::linear(), PhaseSpec::shifted(0.75), PhaseSpec::perturbed(0.1), PhaseSpec::zero()];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = 1e-5;
        for p in &phases {
            for _ in 0..100 {
                let (x, xi) = (rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
                let g = p.gradient(x, xi);
                let fx = (p.eval(x + h, xi) - p.eval(x - h, xi)) / (2.0 * h);
                let fk = (p.eval(x, xi + h) - p.eval(x, xi - h)) / (2.0 * h);
                assert!((g[0] - fx).abs() <= 1e-6 * g[0].abs().max(1.0));
                assert!((g[1] - fk).abs() <= 1e-6 * g[1].abs().max(1.0));
            }
        }
    }

    #[test]
    fn wrong_gradient_and_nonlinearity_detected() {
        let bad = PhaseSpec::custom(Arc::new(|x, k| x * k), Arc::new(|_, k| [k, 0.0]), true, "bad");
        assert!(matches!(phase_checks(&[bad], 2.0, 10, 0), Err(Error::FiniteDifference(_))));
        let quad = PhaseSpec::custom(Arc::new(|x, k| x * k * k), Arc::new(|x, k| [k * k, 2.0 * x * k]), true, "quad");
        assert!(matches!(phase_checks(&[quad], 2.0, 10, 0), Err(Error::NonLinearPhase(_))));
    }
}
