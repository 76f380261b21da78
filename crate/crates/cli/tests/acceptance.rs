//! Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned below.
//! Run with `cargo test -p tfio-cli --test acceptance`.

use std::f64::consts::{PI, TAU};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tfio::verify::{relation_points, stft_relation_values};
use tfio::{
    bk_apply, central_random_signal, fio_apply, gabor_matrix, kernel_from_symbol, matrix_apply, nested_mixed_norm, sequence_norm,
    torus_fio_apply, torus_grid, torus_kernel, verify_boundedness, verify_decay_fio, verify_decay_pdo, Axis, BoundednessSetup,
    CoefficientTensor, Exponent, ExponentTuple, Factor, FioProblem, GaborSystem, InputFamily, KernelField, MultilinearOperator,
    NestedNormSpec, PhaseSpec, Profile, RankOneKernel, SampledField, SymbolClass, SymbolSpec, TorusSignal, Truncation, UniformGrid,
    WeightSpec, C64,
};
use tfio_cli::run::gaussian;

const IDENTITY_TOL: f64 = 1e-10;
const FRAME_RECONSTRUCTION_TOL: f64 = 1e-8;
const FRAME_LOWER_STABILITY: f64 = 1e-2;
const NON_FRAME_LOWER: f64 = 1e-6;
const ROUND_OFF: f64 = 1e-12;
const KERNEL_EQUIVALENCE_TOL: f64 = 1e-6;
const STFT_RELATION_TOL: f64 = 1e-5;
const REDUCTION_TOL: f64 = 1e-6;
const SEQUENCE_BOUND_TOL: f64 = 1e-10;
const BOUND_STABILITY: f64 = 0.10;
const DECAY_STABILITY: f64 = 0.05;
const GROWTH_WINDOW: (f64, f64) = (0.75, 1.25);
const TORUS_EXACT_TOL: f64 = 1e-12;
const TORUS_KERNEL_TOL: f64 = 1e-10;
const ORACLE_TOL: f64 = 1e-12;
const DUAL_SOLVE_TOL: f64 = 1e-8;

/// Criteria that are reported but cannot be met by a correct implementation;
/// each has an entry in the decisions ledger.
const KNOWN_FAILURES: &[(u32, &str)] = &[(
    9,
    "the perturbed phase has x-derivatives growing like |ξ+η|, so C_2 keeps growing with the truncation",
)];

type Check = Result<(bool, String), String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn rel(a: &SampledField, b: &SampledField) -> f64 {
    a.add_scaled(b, C64::new(-1.0, 0.0)).unwrap().l2_norm() / b.l2_norm()
}

fn tight_window(grid: UniformGrid, alpha: f64, beta: f64) -> Result<SampledField, String> {
    let sys = GaborSystem::covering(gaussian(grid, 1.0, 0.0, 0.0), alpha, beta).map_err(err)?;
    Ok(sys.tighten().map_err(err)?.window().clone())
}

fn identity_suite() -> Check {
    let grid = UniformGrid::line(256, 8.0).map_err(err)?;
    let f = gaussian(grid, 1.0, 0.5, 1.25);
    let g = gaussian(grid, 1.0, -1.0, -0.5);
    let mut worst: f64 = 0.0;
    let id = FioProblem::new(SymbolSpec::one(1), vec![PhaseSpec::linear()], grid).map_err(err)?;
    worst = worst.max(fio_apply(&id, &[&f]).map_err(err)?.max_abs_diff(&f).map_err(err)?);
    let prod = FioProblem::bilinear_pdo(SymbolSpec::one(2), grid).map_err(err)?;
    let want = SampledField::new(vec![grid], f.data().iter().zip(g.data()).map(|(a, b)| a * b).collect()).map_err(err)?;
    worst = worst.max(fio_apply(&prod, &[&f, &g]).map_err(err)?.max_abs_diff(&want).map_err(err)?);
    for c in [0.75, -1.5] {
        let shift = FioProblem::new(SymbolSpec::one(1), vec![PhaseSpec::shifted(c)], grid).map_err(err)?;
        let want = SampledField::from_fn_1d(grid, |t| first_input(t + c));
        worst = worst.max(fio_apply(&shift, &[&f]).map_err(err)?.max_abs_diff(&want).map_err(err)?);
    }
    Ok((worst < IDENTITY_TOL, format!("max abs error {worst:.2e} (identity, product, two shifts)")))
}

/// The first input of the identity suite evaluated at `t`.
fn first_input(t: f64) -> C64 {
    C64::from_polar(2f64.powf(0.25) * (-PI * (t - 0.5).powi(2)).exp(), TAU * 1.25 * t)
}

fn frame_suite() -> Check {
    let mut lowers = Vec::new();
    let mut recon: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (n, r) in [(128, 8.0), (256, 8.0)] {
        let grid = UniformGrid::line(n, r).map_err(err)?;
        let sys = GaborSystem::covering(gaussian(grid, 1.0, 0.0, 0.0), 0.5, 0.5).map_err(err)?;
        lowers.push(sys.frame_bounds().lower);
        let dual = sys.with_window(sys.dual_window(1e-13, 5000).map_err(err)?).map_err(err)?;
        for _ in 0..3 {
            let f = central_random_signal(grid, &mut rng);
            recon = recon.max(rel(&dual.synthesize(&sys.analyze(&f).map_err(err)?).map_err(err)?, &f));
        }
    }
    let spread = (lowers[0] - lowers[1]).abs() / lowers[0];
    let mut critical = Vec::new();
    for (n, r) in [(64, 4.0), (128, 8.0), (256, 8.0)] {
        let grid = UniformGrid::line(n, r).map_err(err)?;
        critical.push(GaborSystem::covering(gaussian(grid, 1.0, 0.0, 0.0), 1.0, 1.0).map_err(err)?.frame_bounds().lower);
    }
    let non_frame = critical.iter().all(|&a| a < NON_FRAME_LOWER) && critical.windows(2).all(|w| w[1] <= w[0] + ROUND_OFF);
    let pass = lowers[0] > 0.0 && spread < FRAME_LOWER_STABILITY && recon < FRAME_RECONSTRUCTION_TOL && non_frame;
    Ok((
        pass,
        format!(
            "A(1/2) = {:.4} / {:.4}, reconstruction {recon:.1e}; A(1) = {}",
            lowers[0],
            lowers[1],
            critical.iter().map(|a| format!("{a:.1e}")).collect::<Vec<_>>().join(" / ")
        ),
    ))
}

fn random_phase(rng: &mut ChaCha8Rng) -> PhaseSpec {
    match rng.gen_range(0..3) {
        0 => PhaseSpec::linear(),
        1 => PhaseSpec::shifted(rng.gen_range(-1.0..1.0)),
        _ => PhaseSpec::perturbed(rng.gen_range(-0.2..0.2)),
    }
}

fn kernel_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for trial in 0..20 {
        let r = 1 + trial % 2;
        let grid = if r == 1 { UniformGrid::line(64, 4.0) } else { UniformGrid::line(32, 2.0) }.map_err(err)?;
        let symbol = if r == 2 && rng.gen_bool(0.5) {
            SymbolSpec::sg(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..0.0))
        } else {
            SymbolSpec::peaked(rng.gen_range(0.25..2.0), r)
        };
        let phases = (0..r).map(|_| random_phase(&mut rng)).collect();
        let p = FioProblem::new(symbol, phases, grid).map_err(err)?;
        let f: Vec<SampledField> = (0..r).map(|_| central_random_signal(grid, &mut rng)).collect();
        let refs: Vec<&SampledField> = f.iter().collect();
        let direct = fio_apply(&p, &refs).map_err(err)?;
        let via_kernel = bk_apply(&kernel_from_symbol(&p).map_err(err)?, &refs).map_err(err)?;
        worst = worst.max(rel(&via_kernel, &direct));
    }
    Ok((worst < KERNEL_EQUIVALENCE_TOL, format!("20 problems, worst relative difference {worst:.1e}")))
}

fn stft_relation() -> Check {
    let mut worst: f64 = 0.0;
    let mut cross: f64 = 0.0;
    for (r, n, half) in [(1, 128, 8.0), (2, 64, 6.0)] {
        let coarse = UniformGrid::line(n, half).map_err(err)?;
        let fine = UniformGrid::line(2 * n, half).map_err(err)?;
        let make = |g| FioProblem::new(SymbolSpec::peaked(1.0, r), vec![PhaseSpec::linear(); r], g).map_err(err);
        let pts = relation_points(&coarse, r, 100, 7);
        let a = stft_relation_values(&make(coarse)?, &pts).map_err(err)?;
        let b = stft_relation_values(&make(fine)?, &pts).map_err(err)?;
        worst = worst.max(a.iter().map(|(l, r)| (l - r).abs()).fold(0.0, f64::max));
        cross = cross.max(a.iter().zip(&b).map(|(x, y)| (x.0 - y.0).abs().max((x.1 - y.1).abs())).fold(0.0, f64::max));
    }
    Ok((worst < STFT_RELATION_TOL && cross < STFT_RELATION_TOL, format!("100 points, r = 1, 2: deviation {worst:.1e}, 2x-resolution change {cross:.1e}")))
}

fn reduction() -> Check {
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cases: Vec<(UniformGrid, SymbolSpec, Vec<PhaseSpec>)> = vec![
        (UniformGrid::line(64, 4.0).map_err(err)?, SymbolSpec::peaked(0.25, 1), vec![PhaseSpec::shifted(0.25)]),
        (UniformGrid::line(64, 4.0).map_err(err)?, SymbolSpec::one(1), vec![PhaseSpec::perturbed(0.1)]),
        (UniformGrid::line(32, 2.0).map_err(err)?, SymbolSpec::sg(0.5, 0.0, -0.5), vec![PhaseSpec::perturbed(0.1), PhaseSpec::linear()]),
        (UniformGrid::line(32, 2.0).map_err(err)?, SymbolSpec::one(2), vec![PhaseSpec::linear(); 2]),
    ];
    for (grid, s, phases) in cases {
        let sys = GaborSystem::covering(gaussian(grid, 1.0, 0.0, 0.0), 0.5, 0.5).map_err(err)?.tighten().map_err(err)?;
        let p = FioProblem::new(s, phases, grid).map_err(err)?;
        let f: Vec<SampledField> = (0..p.arity()).map(|_| central_random_signal(grid, &mut rng)).collect();
        let refs: Vec<&SampledField> = f.iter().collect();
        let lhs = sys.analyze(&fio_apply(&p, &refs).map_err(err)?).map_err(err)?;
        let cs: Vec<CoefficientTensor> = f.iter().map(|x| sys.analyze(x)).collect::<Result<_, _>>().map_err(err)?;
        let crefs: Vec<&CoefficientTensor> = cs.iter().collect();
        let rhs = matrix_apply(&gabor_matrix(&p, &sys).map_err(err)?, &crefs).map_err(err)?;
        worst = worst.max(lhs.max_abs_diff(&rhs).map_err(err)? / lhs.max_abs());
    }
    Ok((worst < REDUCTION_TOL, format!("4 operators on tight systems, worst relative difference {worst:.1e}")))
}

fn random_tensor(axes: Vec<Axis>, rng: &mut ChaCha8Rng) -> CoefficientTensor {
    CoefficientTensor::from_fn(axes, |_| {
        let scale = 10f64.powf(rng.gen_range(-3.0..0.0));
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale
    })
    .expect("axes are valid")
}

fn sequence_bound() -> Check {
    let ax = |name: &str| Axis::new(name, -2, 5, 1.0);
    let one = WeightSpec::constant(2);
    let e = |v: f64| Exponent::new(v).unwrap();
    let inf = Exponent::INF;
    let tuples = [
        ExponentTuple::holder(vec![e(2.0), e(2.0)], vec![e(2.0), e(2.0)]),
        ExponentTuple::holder(vec![e(4.0), e(4.0)], vec![e(4.0), e(4.0)]),
        ExponentTuple::holder(vec![inf], vec![e(1.0)]),
        ExponentTuple::holder(vec![inf, inf], vec![e(1.0), inf]),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = f64::NEG_INFINITY;
    let mut labels = Vec::new();
    for t in tuples {
        let t = t.map_err(err)?;
        labels.push(t.label());
        let r = t.arity();
        let mut axes = vec![ax("i"), ax("j")];
        for k in 1..=r {
            axes.extend([ax(&format!("m{k}")), ax(&format!("n{k}"))]);
        }
        for _ in 0..100 {
            let a = random_tensor(axes.clone(), &mut rng);
            let cs: Vec<CoefficientTensor> = (0..r).map(|_| random_tensor(vec![ax("m"), ax("n")], &mut rng)).collect();
            let crefs: Vec<&CoefficientTensor> = cs.iter().collect();
            let out = matrix_apply(&a, &crefs).map_err(err)?;
            let lhs = sequence_norm(&out, t.s1, t.s2, &one).map_err(err)?;
            let mut rhs: f64 = a.data().iter().map(|z| z.norm()).sum();
            for (k, c) in cs.iter().enumerate() {
                rhs *= sequence_norm(c, t.p[k], t.q[k], &one).map_err(err)?;
            }
            worst = worst.max((lhs - rhs) / rhs);
        }
    }
    Ok((worst <= SEQUENCE_BOUND_TOL, format!("{} tuples x 100 draws, max (lhs - rhs)/rhs = {worst:.2e}", labels.len())))
}

fn boundedness() -> Check {
    let grid = UniformGrid::line(256, 8.0).map_err(err)?;
    let family = InputFamily { window: tight_window(grid, 0.25, 0.25)?, alpha: 0.25, beta: 0.25, decay: 2.0 };
    let norm_window = gaussian(grid, 1.0, 0.0, 0.0);
    let e = |v: f64| Exponent::new(v).unwrap();
    let tuples = [
        ExponentTuple::holder(vec![e(2.0), e(2.0)], vec![e(2.0), e(2.0)]),
        ExponentTuple::holder(vec![e(4.0), e(4.0)], vec![e(4.0), e(4.0)]),
        ExponentTuple::holder(vec![e(1.0), Exponent::INF], vec![e(2.0), e(2.0)]),
    ];
    let rank_one = RankOneKernel::new(vec![gaussian(grid, 1.0, 0.0, 0.0); 3]).map_err(err)?;
    let pdo = FioProblem::bilinear_pdo(SymbolSpec::sg(0.0, 0.0, 0.0), grid).map_err(err)?;
    let ops: [(&str, &dyn MultilinearOperator); 2] = [("rank-one", &rank_one), ("sg(0,0,0)", &pdo)];
    let mut worst: f64 = 0.0;
    let mut finite = true;
    for (_, op) in ops {
        for t in &tuples {
            let setup = BoundednessSetup {
                exponents: t.clone().map_err(err)?,
                window: &norm_window,
                input_weight: WeightSpec::constant(2),
                target_weight: WeightSpec::constant(2),
                weight_name: "one".into(),
            };
            let a = verify_boundedness(op, &setup, &family, 100, 8, 11).map_err(err)?;
            let b = verify_boundedness(op, &setup, &family, 100, 16, 11).map_err(err)?;
            finite &= a.max_ratio.is_finite() && b.max_ratio.is_finite() && a.max_ratio > 0.0;
            worst = worst.max((a.max_ratio - b.max_ratio).abs() / a.max_ratio.max(b.max_ratio));
        }
    }
    Ok((finite && worst < BOUND_STABILITY, format!("2 operators x 3 tuples x 100 trials, radii 8/16: worst change {:.1}%", 100.0 * worst)))
}

fn decay_grid() -> Result<(UniformGrid, SampledField, [Truncation; 2]), String> {
    let grid = UniformGrid::line(512, 8.0).map_err(err)?;
    let t = [Truncation { m_radius: 4, n_radius: 4 }, Truncation { m_radius: 8, n_radius: 8 }];
    Ok((grid, tight_window(grid, 0.5, 0.5)?, t))
}

fn pdo_decay(pdo_constants: &mut Vec<f64>) -> Check {
    let (_, window, t) = decay_grid()?;
    let orders = [[1, 1, 1], [2, 2, 2], [3, 3, 3]];
    let report = verify_decay_pdo(&SymbolSpec::one(2), &window, 0.5, 0.5, t, &orders).map_err(err)?;
    let slopes: Vec<f64> = report.slopes.iter().map(|s| s.map_or(f64::NAN, |f| f.slope)).collect();
    let mut pass = slopes.iter().all(|s| *s <= -6.0);
    let mut notes = Vec::new();
    for row in &report.rows {
        pass &= row.constants.iter().all(|c| c.is_finite()) && row.stability() < DECAY_STABILITY;
        notes.push(format!("C{} = {:.3e} ({:.1e})", row.orders[0], row.constant(), row.stability()));
        pdo_constants.push(row.constant());
    }
    let growth = verify_decay_pdo(&SymbolSpec::sg(1.0, 0.0, 0.0), &window, 0.5, 0.5, t, &[[1, 1, 1]]).map_err(err)?;
    let g = growth.growth[0].map_or(f64::NAN, |f| f.slope);
    pass &= (GROWTH_WINDOW.0..=GROWTH_WINDOW.1).contains(&g);
    Ok((
        pass,
        format!(
            "slopes {} (need <= -6); {}; n-growth for <xi>: {g:.3}",
            slopes.iter().map(|s| format!("{s:.1}")).collect::<Vec<_>>().join(", "),
            notes.join(", ")
        ),
    ))
}

fn fio_decay(pdo_constants: &[f64]) -> Check {
    let (grid, window, t) = decay_grid()?;
    let pert = FioProblem::new(SymbolSpec::one(2), vec![PhaseSpec::perturbed(0.1); 2], grid).map_err(err)?;
    let report = verify_decay_fio(&pert, &window, 0.5, 0.5, t, &[1, 2]).map_err(err)?;
    let mut pass = true;
    let mut notes = Vec::new();
    for row in &report.rows {
        let ok = row.constants.iter().all(|c| c.is_finite()) && row.stability() < DECAY_STABILITY;
        pass &= ok;
        notes.push(format!("C{} = {:.4} -> {:.4} ({:.1}%)", row.orders[0], row.constants[0], row.constants[1], 100.0 * row.stability()));
    }
    let linear = FioProblem::new(SymbolSpec::one(2), vec![PhaseSpec::linear(); 2], grid).map_err(err)?;
    let lin = verify_decay_fio(&linear, &window, 0.5, 0.5, t, &[1, 2]).map_err(err)?;
    for (k, row) in lin.rows.iter().enumerate() {
        let n = row.orders[0] as i32;
        let other = pdo_constants.get(k).copied().unwrap_or(f64::NAN);
        let ratio = (row.constant() / other).max(other / row.constant());
        pass &= ratio <= 3f64.powi(n);
        notes.push(format!("linear ratio N={n}: {ratio:.2}"));
    }
    Ok((pass, notes.join(", ")))
}

fn random_poly(cutoff: usize, rng: &mut ChaCha8Rng) -> TorusSignal {
    TorusSignal::from_fn(cutoff, |_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).expect("valid cutoff")
}

fn torus_bracket(power: f64, r: usize) -> SymbolSpec {
    let mut f = vec![Factor::new(Profile::One)];
    f.extend(std::iter::repeat_n(Factor::new(Profile::Bracket(power)), r));
    let class = SymbolClass::TorusHormander { orders: vec![power; r], rho: 1.0, delta: 0.0 };
    SymbolSpec::product(r, f, class, "bracket").expect("valid arity")
}

fn torus_exactness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let grid = torus_grid(130).map_err(err)?;
    let f = random_poly(32, &mut rng);
    let g = random_poly(32, &mut rng);
    let lin1 = [PhaseSpec::linear()];
    let lin2 = [PhaseSpec::linear(), PhaseSpec::linear()];
    let id = torus_fio_apply(&SymbolSpec::one(1), &lin1, &[&f], &grid).map_err(err)?;
    let mut exact = id.max_abs_diff(&f.sample(&grid)).map_err(err)?;
    let prod = torus_fio_apply(&SymbolSpec::one(2), &lin2, &[&f, &g], &grid).map_err(err)?;
    let (fs, gs) = (f.sample(&grid), g.sample(&grid));
    let want = SampledField::new(vec![grid], fs.data().iter().zip(gs.data()).map(|(a, b)| a * b).collect()).map_err(err)?;
    exact = exact.max(prod.max_abs_diff(&want).map_err(err)? / want.data().iter().map(|z| z.norm()).fold(1.0, f64::max));

    let mut kernel: f64 = 0.0;
    let cases: [(SymbolSpec, Vec<PhaseSpec>); 3] = [
        (torus_bracket(-1.0, 1), vec![PhaseSpec::shifted(0.125)]),
        (torus_bracket(1.0, 1), vec![PhaseSpec::linear()]),
        (torus_bracket(0.5, 2), vec![PhaseSpec::linear(), PhaseSpec::shifted(0.25)]),
    ];
    for (s, phases) in cases {
        let r = phases.len();
        let grid = torus_grid(65).map_err(err)?;
        let inputs: Vec<TorusSignal> = (0..r).map(|_| random_poly(32, &mut rng)).collect();
        let refs: Vec<&TorusSignal> = inputs.iter().collect();
        let k: KernelField = torus_kernel(&s, &phases, 32, &grid).map_err(err)?;
        let samples: Vec<SampledField> = inputs.iter().map(|p| p.sample(&grid)).collect();
        let srefs: Vec<&SampledField> = samples.iter().collect();
        let a = bk_apply(&k, &srefs).map_err(err)?;
        let b = torus_fio_apply(&s, &phases, &refs, &grid).map_err(err)?;
        kernel = kernel.max(a.max_abs_diff(&b).map_err(err)? / b.data().iter().map(|z| z.norm()).fold(1.0, f64::max));
    }
    Ok((exact <= TORUS_EXACT_TOL && kernel <= TORUS_KERNEL_TOL, format!("identity/product {exact:.1e}, kernel vs operator at F = 32: {kernel:.1e}")))
}

/// Nested norm by explicit recursion over named indices.
fn naive_norm(t: &CoefficientTensor, order: &[&str], exps: &[Exponent], fixed: &mut Vec<(usize, i64)>) -> f64 {
    if fixed.len() == order.len() {
        let mut idx = vec![0; t.rank()];
        for &(a, k) in fixed.iter() {
            idx[a] = k;
        }
        return t.get(&idx).unwrap().norm();
    }
    let level = fixed.len();
    let a = t.axis_position(order[level]).unwrap();
    let vals: Vec<f64> = t.axes()[a]
        .indices()
        .map(|k| {
            fixed.push((a, k));
            let v = naive_norm(t, order, exps, fixed);
            fixed.pop();
            v
        })
        .collect();
    let p = exps[level];
    if p.is_infinite() {
        vals.into_iter().fold(0.0, f64::max)
    } else {
        vals.iter().map(|v| v.powf(p.value())).sum::<f64>().powf(1.0 / p.value())
    }
}

fn oracles() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let names = ["i", "j", "m1", "n1", "m2", "n2"];
    let mut nested: f64 = 0.0;
    for _ in 0..20 {
        let axes: Vec<Axis> = names.iter().map(|n| Axis::new(*n, -1, rng.gen_range(1..4), 1.0)).collect();
        let t = random_tensor(axes, &mut rng);
        let mut order = names.to_vec();
        for k in (1..order.len()).rev() {
            order.swap(k, rng.gen_range(0..=k));
        }
        let exps: Vec<Exponent> = (0..6)
            .map(|_| match rng.gen_range(0..4) {
                0 => Exponent::INF,
                1 => Exponent::ONE,
                _ => Exponent::new(rng.gen_range(1.0..5.0)).unwrap(),
            })
            .collect();
        let spec = NestedNormSpec::new(order.iter().map(|s| s.to_string()).collect(), exps.clone()).map_err(err)?;
        let fast = nested_mixed_norm(&t, &spec).map_err(err)?;
        let slow = naive_norm(&t, &order, &exps, &mut Vec::new());
        nested = nested.max((fast - slow).abs() / slow.max(1.0));
    }

    let grid = UniformGrid::line(16, 2.0).map_err(err)?;
    let n = grid.len();
    let h = grid.spacing();
    let data: Vec<C64> = (0..n * n * n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let k = KernelField::new(SampledField::new(vec![grid; 3], data.clone()).map_err(err)?).map_err(err)?;
    let f = central_random_signal(grid, &mut rng);
    let g = central_random_signal(grid, &mut rng);
    let out = bk_apply(&k, &[&f, &g]).map_err(err)?;
    let mut loops: f64 = 0.0;
    for x in 0..n {
        let mut s = C64::new(0.0, 0.0);
        for y1 in 0..n {
            for y2 in 0..n {
                s += data[(x * n + y1) * n + y2] * f.data()[y1] * g.data()[y2];
            }
        }
        loops = loops.max((out.data()[x] - s * h * h).norm());
    }

    let grid = UniformGrid::line(128, 4.0).map_err(err)?;
    let sys = GaborSystem::covering(gaussian(grid, 1.0, 0.0, 0.0), 0.5, 0.5).map_err(err)?;
    let gamma = sys.dual_window(1e-13, 5000).map_err(err)?;
    let direct = sys.frame_matrix().lu().solve(&nalgebra::DVector::from_column_slice(sys.window().data())).ok_or("singular frame matrix")?;
    let dense = SampledField::new(vec![grid], direct.as_slice().to_vec()).map_err(err)?;
    let dual = rel(&gamma, &dense);

    Ok((
        nested <= ORACLE_TOL && loops <= ORACLE_TOL && dual <= DUAL_SOLVE_TOL,
        format!("nested norm {nested:.1e}, kernel loops {loops:.1e}, dual window vs dense solve {dual:.1e}"),
    ))
}

const DETERMINISM_CONFIGS: &[(&str, &[&str], &str)] = &[
    ("fio", &["fio", "apply"], "inputs = [\"random\", \"random\"]\n[grid]\npoints = 64\nhalf_width = 4.0\n[operator]\nsymbol = \"sg(0.5, 0, -1)\"\nphases = [\"phase.perturbed(0.1)\", \"phase.linear\"]\n"),
    ("stft", &["stft"], "inputs = [\"random\"]\n[grid]\npoints = 32\nhalf_width = 2.0\n"),
    ("torus", &["torus", "apply"], "inputs = [\"random\", \"random\"]\n[operator]\nsymbol = \"one\"\nphases = [\"phase.linear\", \"phase.shifted(0.25)\"]\n[torus]\ncutoff = 6\n"),
    ("matrix", &["fio", "matrix"], "[grid]\npoints = 32\nhalf_width = 2.0\n[gabor]\ntruncations = [[2, 2]]\n[operator]\nsymbol = \"sg(0, 0, 0)\"\n"),
    ("bound", &["verify", "bound"], "[grid]\npoints = 64\nhalf_width = 4.0\n[gabor]\nalpha = 0.5\nbeta = 0.5\n[operator]\nsymbol = \"sg(0, 0, 0)\"\n[verify]\ntuples = [\"holder(p=[2, 2], q=[2, 2])\"]\ntrials = 10\nradii = [4, 6]\n"),
    ("decay", &["verify", "decay-fio"], "[grid]\npoints = 64\nhalf_width = 4.0\n[gabor]\ntruncations = [[2, 2], [3, 3]]\n[operator]\nsymbol = \"one\"\nphases = [\"phase.perturbed(0.1)\"]\n[verify]\norders = [[1]]\n"),
];

fn strip_wall_time(json: &str) -> String {
    json.lines().filter(|l| !l.contains("wall_time_seconds")).collect::<Vec<_>>().join("\n")
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(err)?;
    let mut files = 0;
    let mut mismatches = Vec::new();
    for (name, op, text) in DETERMINISM_CONFIGS {
        let cfg = dir.path().join(format!("{name}.toml"));
        std::fs::write(&cfg, text).map_err(err)?;
        let mut outs = Vec::new();
        for (run, threads) in [(0, "1"), (1, "4")] {
            let out = dir.path().join(format!("{name}-{run}"));
            let status = Command::new(env!("CARGO_BIN_EXE_tfio"))
                .arg("--config")
                .arg(&cfg)
                .args(["--seed", "17", "--threads", threads, "--out"])
                .arg(&out)
                .args(*op)
                .output()
                .map_err(err)?;
            if status.status.code().is_none_or(|c| c > 1) {
                return Err(format!("{name}: {}", String::from_utf8_lossy(&status.stderr)));
            }
            outs.push(out);
        }
        for entry in std::fs::read_dir(&outs[0]).map_err(err)? {
            let file = entry.map_err(err)?.file_name();
            let read = |d: &Path| std::fs::read(d.join(&file)).unwrap_or_default();
            let (a, b) = (read(&outs[0]), read(&outs[1]));
            let same = if file == "manifest.json" {
                strip_wall_time(&String::from_utf8_lossy(&a)).replace("\"threads\": 1", "") == strip_wall_time(&String::from_utf8_lossy(&b)).replace("\"threads\": 4", "")
            } else {
                a == b
            };
            files += 1;
            if !same {
                mismatches.push(format!("{name}/{}", file.to_string_lossy()));
            }
        }
    }
    Ok((mismatches.is_empty(), format!("{} experiments, {files} artifacts compared across 1 and 4 threads; differing: {mismatches:?}", DETERMINISM_CONFIGS.len())))
}

fn main() {
    let mut pdo_constants = Vec::new();
    let mut lines = Vec::new();
    let mut unexpected = Vec::new();
    let mut record = |id: u32, title: &str, check: &mut dyn FnMut() -> Check| {
        let start = Instant::now();
        let (pass, detail) = match check() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        let known = KNOWN_FAILURES.iter().find(|(k, _)| *k == id);
        let status = if pass { "PASS" } else { "FAIL" };
        let line = format!("criterion {id:>2} {status} [{title}] {detail} ({:.1}s)", start.elapsed().as_secs_f64());
        println!("{line}");
        if !pass {
            match known {
                Some((_, why)) => println!("             known: {why}"),
                None => unexpected.push(id),
            }
        }
        lines.push(line);
    };
    record(1, "identity suite", &mut identity_suite);
    record(2, "frame suite", &mut frame_suite);
    record(3, "kernel equivalence", &mut kernel_equivalence);
    record(4, "kernel/symbol STFT relation", &mut stft_relation);
    record(5, "reduction to the Gabor matrix", &mut reduction);
    record(6, "sequence operator bound", &mut sequence_bound);
    record(7, "boundedness stability", &mut boundedness);
    record(8, "bilinear decay and growth", &mut || pdo_decay(&mut pdo_constants));
    let constants = pdo_constants.clone();
    record(9, "FIO decay, perturbed phase", &mut || fio_decay(&constants));
    record(10, "torus exactness", &mut torus_exactness);
    record(11, "oracle equivalences", &mut oracles);
    record(12, "determinism", &mut determinism);
    let passed = lines.iter().filter(|l| l.contains(" PASS ")).count();
    println!("acceptance: {passed}/{} criteria pass", lines.len());
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
