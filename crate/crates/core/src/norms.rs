//! Weighted mixed norms of STFT samples and coefficient tensors, the
//! discrete modulation norm and iterated (nested) sequence norms.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{SampledField, UniformGrid};
use crate::stft::{stft, StftField};
use crate::tensor::CoefficientTensor;
use crate::weights::WeightSpec;

/// A Lebesgue exponent in `[1, ∞]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Exponent(f64);

impl Exponent {
    pub const ONE: Exponent = Exponent(1.0);
    pub const TWO: Exponent = Exponent(2.0);
    pub const INF: Exponent = Exponent(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p >= 1.0 {
            Ok(Self(p))
        } else {
            Err(Error::InvalidExponent(p))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Self::INF),
            t => {
                let p: f64 = t.parse().map_err(|_| Error::MalformedNormSpec(format!("bad exponent `{t}`")))?;
                Self::new(p)
            }
        }
    }
}

/// `(Σ |a_k|^p · cell)^{1/p}`, or `max |a_k|` when `p = ∞`. Summation runs in
/// slice order.
pub fn lp(values: &[f64], p: Exponent, cell: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().fold(0.0, |m, &v| m.max(v.abs()));
    }
    let p = p.value();
    if p == 1.0 {
        return values.iter().map(|v| v.abs()).sum::<f64>() * cell;
    }
    (values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * cell).powf(1.0 / p)
}

/// Weighted mixed norm: inner `p`-norm over time, outer `q`-norm over
/// frequency, with Riemann cell factors on each axis.
pub fn mixed_norm(field: &StftField, p: Exponent, q: Exponent, v: &WeightSpec) -> Result<f64> {
    if v.domain_dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: v.domain_dim() });
    }
    let xs = field.time_grid().points();
    let xis = field.freq_grid().points();
    let mut column = vec![0.0; xs.len()];
    let mut outer = Vec::with_capacity(xis.len());
    for (k, &xi) in xis.iter().enumerate() {
        for (i, &x) in xs.iter().enumerate() {
            column[i] = field.get(i, k).norm() * v.eval(&[x, xi])?;
        }
        outer.push(lp(&column, p, field.time_grid().spacing()));
    }
    Ok(lp(&outer, q, field.freq_grid().spacing()))
}

/// `ℓ^{p,q}_v` norm of a coefficient tensor with axes `(m, n)`; the weight is
/// evaluated at the lattice point `(αm, βn)`.
pub fn sequence_norm(c: &CoefficientTensor, p: Exponent, q: Exponent, v: &WeightSpec) -> Result<f64> {
    if c.rank() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: c.rank() });
    }
    if v.domain_dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: v.domain_dim() });
    }
    let (am, an) = (&c.axes()[0], &c.axes()[1]);
    let mut column = vec![0.0; am.len];
    let mut outer = Vec::with_capacity(an.len);
    for j in 0..an.len {
        for (i, slot) in column.iter_mut().enumerate() {
            *slot = c.data()[i * an.len + j].norm() * v.eval(&[am.coordinate(i), an.coordinate(j)])?;
        }
        outer.push(lp(&column, p, 1.0));
    }
    Ok(lp(&outer, q, 1.0))
}

/// Discrete surrogate of `‖f‖_{M^{p,q}_v}`: the mixed norm of `V_g f` sampled
/// on the full signal grid and its dual.
pub fn modulation_norm(f: &SampledField, g: &SampledField, p: Exponent, q: Exponent, v: &WeightSpec) -> Result<f64> {
    let grid: UniformGrid = *f.grid();
    mixed_norm(&stft(f, g, &grid, &grid.dual())?, p, q, v)
}

/// An iterated norm over named tensor axes, outermost first.
#[derive(Clone, Debug, PartialEq)]
pub struct NestedNormSpec {
    pub index_order: Vec<String>,
    pub exponents: Vec<Exponent>,
    /// Optional one-dimensional weight per index, evaluated at the axis coordinate.
    pub weights: Vec<Option<WeightSpec>>,
}

impl NestedNormSpec {
    pub fn new(index_order: Vec<String>, exponents: Vec<Exponent>) -> Result<Self> {
        if index_order.len() != exponents.len() {
            return Err(Error::MalformedNormSpec(format!(
                "{} indices but {} exponents",
                index_order.len(),
                exponents.len()
            )));
        }
        for (i, name) in index_order.iter().enumerate() {
            if index_order[..i].contains(name) {
                return Err(Error::MalformedNormSpec(format!("index `{name}` listed twice")));
            }
        }
        let weights = vec![None; index_order.len()];
        Ok(Self { index_order, exponents, weights })
    }

    pub fn with_weight(mut self, index: &str, w: WeightSpec) -> Result<Self> {
        if w.domain_dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: w.domain_dim() });
        }
        let k = self
            .index_order
            .iter()
            .position(|n| n == index)
            .ok_or_else(|| Error::MalformedNormSpec(format!("no index `{index}`")))?;
        self.weights[k] = Some(w);
        Ok(self)
    }

    /// Axis permutation mapping spec position to tensor axis.
    fn permutation(&self, t: &CoefficientTensor) -> Result<Vec<usize>> {
        if self.index_order.len() != t.rank() {
            return Err(Error::MalformedNormSpec(format!(
                "spec has {} indices, tensor has {}",
                self.index_order.len(),
                t.rank()
            )));
        }
        self.index_order
            .iter()
            .map(|n| t.axis_position(n).ok_or_else(|| Error::MalformedNormSpec(format!("tensor has no index `{n}`"))))
            .collect()
    }
}

/// Evaluates the iterated norm, reducing the innermost (last listed) index first.
pub fn nested_mixed_norm(t: &CoefficientTensor, spec: &NestedNormSpec) -> Result<f64> {
    let order = spec.permutation(t)?;
    let p = t.permuted(&order)?;
    let shape = p.shape();
    let mut work: Vec<f64> = p.data().iter().map(|z| z.norm()).collect();
    // weights factor through each axis independently
    for (k, w) in spec.weights.iter().enumerate() {
        let Some(w) = w else { continue };
        let axis = &p.axes()[k];
        let factors: Vec<f64> = (0..axis.len).map(|i| w.eval(&[axis.coordinate(i)])).collect::<Result<_>>()?;
        let inner: usize = shape[k + 1..].iter().product();
        for (off, v) in work.iter_mut().enumerate() {
            *v *= factors[(off / inner) % axis.len];
        }
    }
    for k in (0..shape.len()).rev() {
        let n = shape[k];
        work = work.chunks(n).map(|c| lp(c, spec.exponents[k], 1.0)).collect();
    }
    Ok(work[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::C64;
    use crate::tensor::Axis;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn axes6() -> Vec<Axis> {
        ["m", "n", "m0", "n0", "mp", "np"].iter().map(|n| Axis::new(*n, 0, 2, 1.0)).collect()
    }

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    /// Reference: recurse over spec positions, looking entries up by name.
    fn naive(t: &CoefficientTensor, spec: &NestedNormSpec, level: usize, fixed: &mut Vec<(usize, i64)>) -> f64 {
        if level == spec.index_order.len() {
            let mut idx = vec![0i64; t.rank()];
            for &(a, k) in fixed.iter() {
                idx[a] = k;
            }
            return t.get(&idx).unwrap().norm();
        }
        let a = t.axis_position(&spec.index_order[level]).unwrap();
        let axis = t.axes()[a].clone();
        let mut vals = Vec::new();
        for k in axis.indices() {
            fixed.push((a, k));
            let w = spec.weights[level].as_ref().map_or(1.0, |w| w.eval(&[k as f64 * axis.step]).unwrap());
            vals.push(naive(t, spec, level + 1, fixed) * w);
            fixed.pop();
        }
        let p = spec.exponents[level];
        if p.is_infinite() {
            vals.into_iter().fold(0.0, f64::max)
        } else {
            vals.iter().map(|v| v.powf(p.value())).sum::<f64>().powf(1.0 / p.value())
        }
    }

    #[test]
    fn exponent_parsing() {
        assert_eq!("inf".parse::<Exponent>().unwrap(), Exponent::INF);
        assert_eq!("2".parse::<Exponent>().unwrap(), Exponent::TWO);
        assert!(matches!("0.5".parse::<Exponent>(), Err(Error::InvalidExponent(_))));
        assert!("x".parse::<Exponent>().is_err());
    }

    #[test]
    fn single_cell_mixed_norm() {
        let tg = UniformGrid::line(8, 2.0).unwrap();
        let fg = tg.dual();
        let mut vals = vec![C64::new(0.0, 0.0); 64];
        vals[3 * 8 + 5] = C64::new(2.0, 0.0);
        let f = StftField::new(vals, tg, fg, 1.0).unwrap();
        let got = mixed_norm(&f, Exponent::ONE, Exponent::ONE, &WeightSpec::constant(2)).unwrap();
        assert!((got - 2.0 * tg.spacing() / (2.0 * 2.0)).abs() < 1e-15);
    }

    #[test]
    fn all_ones_six_index() {
        let t = CoefficientTensor::from_fn(axes6(), |_| C64::new(1.0, 0.0)).unwrap();
        let spec = NestedNormSpec::new(
            names(&["n", "n0", "np", "mp", "m", "m0"]),
            vec![Exponent::INF, Exponent::INF, Exponent::ONE, Exponent::INF, Exponent::ONE, Exponent::ONE],
        )
        .unwrap();
        assert_eq!(nested_mixed_norm(&t, &spec).unwrap(), 8.0);
    }

    #[test]
    fn one_nonzero_entry() {
        let mut t = CoefficientTensor::zeros(axes6()).unwrap();
        t.set(&[1, 0, 1, 1, 0, 1], C64::new(3.0, -4.0)).unwrap();
        for exps in [[Exponent::ONE; 6], [Exponent::INF; 6], [Exponent::TWO; 6]] {
            let spec = NestedNormSpec::new(names(&["np", "m", "n", "m0", "mp", "n0"]), exps.to_vec()).unwrap();
            assert!((nested_mixed_norm(&t, &spec).unwrap() - 5.0).abs() < 1e-14);
        }
    }

    #[test]
    fn malformed_specs() {
        let t = CoefficientTensor::zeros(axes6()).unwrap();
        assert!(NestedNormSpec::new(names(&["m", "m"]), vec![Exponent::ONE; 2]).is_err());
        assert!(NestedNormSpec::new(names(&["m"]), vec![Exponent::ONE; 2]).is_err());
        let short = NestedNormSpec::new(names(&["m", "n"]), vec![Exponent::ONE; 2]).unwrap();
        assert!(matches!(nested_mixed_norm(&t, &short), Err(Error::MalformedNormSpec(_))));
    }

    #[test]
    fn monotone_in_p_on_probability_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let vals: Vec<f64> = (0..50).map(|_| rng.gen_range(0.0..3.0)).collect();
        let cell = 1.0 / vals.len() as f64;
        let ps = [1.0, 1.5, 2.0, 4.0, 10.0];
        let norms: Vec<f64> = ps.iter().map(|&p| lp(&vals, Exponent::new(p).unwrap(), cell)).collect();
        assert!(norms.windows(2).all(|w| w[0] <= w[1] + 1e-12));
        assert!(*norms.last().unwrap() <= lp(&vals, Exponent::INF, cell) + 1e-12);
    }

    fn exponent_strategy() -> impl Strategy<Value = Exponent> {
        prop_oneof![Just(Exponent::ONE), Just(Exponent::TWO), Just(Exponent::INF), (1.0f64..6.0).prop_map(|p| Exponent::new(p).unwrap())]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn nested_matches_naive(seed in 0u64..1000, exps in prop::collection::vec(exponent_strategy(), 6), perm in Just((0..6).collect::<Vec<usize>>()).prop_shuffle()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let axes: Vec<Axis> = ["m", "n", "m0", "n0", "mp", "np"].iter().map(|n| Axis::new(*n, -1, rng.gen_range(1..4), 0.5)).collect();
            let t = CoefficientTensor::from_fn(axes, |_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).unwrap();
            let order: Vec<String> = perm.iter().map(|&k| t.axes()[k].name.clone()).collect();
            let spec = NestedNormSpec::new(order.clone(), exps).unwrap()
                .with_weight(&order[2], WeightSpec::omega(1.5, 1)).unwrap();
            let fast = nested_mixed_norm(&t, &spec).unwrap();
            let slow = naive(&t, &spec, 0, &mut Vec::new());
            prop_assert!((fast - slow).abs() <= 1e-12 * slow.max(1.0));
        }

        #[test]
        fn equal_exponents_flatten(seed in 0u64..1000, p in exponent_strategy()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = CoefficientTensor::from_fn(axes6(), |_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).unwrap();
            let spec = NestedNormSpec::new(names(&["np", "m", "n", "m0", "mp", "n0"]), vec![p; 6]).unwrap();
            let flat: Vec<f64> = t.data().iter().map(|z| z.norm()).collect();
            let want = lp(&flat, p, 1.0);
            prop_assert!((nested_mixed_norm(&t, &spec).unwrap() - want).abs() <= 1e-12 * want.max(1.0));
        }
    }
}
