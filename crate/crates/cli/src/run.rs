//! Operations behind the subcommands. Every term is resolved before any
//! computation starts, so name errors never leave partial artifacts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tfio::gabor::FRAME_LOWER_FLOOR;
use tfio::terms::{Expr, ExprKind};
use tfio::verify::{relation_points, stft_relation_values};
use tfio::{
    central_random_signal, gabor_matrix, gabor_matrix_kernel, kernel_from_symbol, nested_mixed_norm,
    resolve_norm, resolve_phase, resolve_symbol, resolve_weight, stft, torus_fio_eval, torus_grid, torus_kernel,
    verify_boundedness, verify_decay_fio, verify_decay_pdo, BoundednessSetup, CoefficientTensor, ExponentTuple,
    FioProblem, GaborSystem, InputFamily, MultilinearOperator, PhaseSpec, RankOneKernel, SampledField, SymbolSpec,
    TorusSignal, Truncation, UniformGrid, WeightSpec, C64,
};

use crate::config::{term, ExperimentConfig, TermText};
use crate::error::CliError;
use crate::output::{num, Artifact, Csv};

pub const DEFAULT_STFT_RELATION_TOL: f64 = 1e-5;
pub const DEFAULT_BOUND_STABILITY: f64 = 0.10;
pub const DEFAULT_DECAY_STABILITY: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    Stft,
    CheckFrame,
    FioApply,
    FioKernel,
    FioMatrix,
    TorusApply,
    TorusKernel,
    VerifyStftRelation,
    VerifyBound,
    VerifyDecayFio,
    VerifyDecayPdo,
    Norm,
}

impl Op {
    pub fn name(self) -> &'static str {
        match self {
            Op::Stft => "stft",
            Op::CheckFrame => "gabor check-frame",
            Op::FioApply => "fio apply",
            Op::FioKernel => "fio kernel",
            Op::FioMatrix => "fio matrix",
            Op::TorusApply => "torus apply",
            Op::TorusKernel => "torus kernel",
            Op::VerifyStftRelation => "verify stft-relation",
            Op::VerifyBound => "verify bound",
            Op::VerifyDecayFio => "verify decay-fio",
            Op::VerifyDecayPdo => "verify decay-pdo",
            Op::Norm => "norm",
        }
    }

    /// Stem of the artifact file names.
    pub fn stem(self) -> &'static str {
        match self {
            Op::Stft => "stft",
            Op::CheckFrame => "check-frame",
            Op::FioApply => "fio-apply",
            Op::FioKernel => "fio-kernel",
            Op::FioMatrix => "fio-matrix",
            Op::TorusApply => "torus-apply",
            Op::TorusKernel => "torus-kernel",
            Op::VerifyStftRelation => "stft-relation",
            Op::VerifyBound => "bound",
            Op::VerifyDecayFio => "decay-fio",
            Op::VerifyDecayPdo => "decay-pdo",
            Op::Norm => "norm",
        }
    }
}

pub struct Outcome {
    pub artifacts: Vec<(String, Artifact)>,
    pub passed: bool,
}

impl Outcome {
    fn table(op: Op, csv: Csv, passed: bool) -> Self {
        Self { artifacts: vec![(format!("{}.csv", op.stem()), Artifact::Table(csv))], passed }
    }

    fn with_field(mut self, op: Op, f: SampledField) -> Self {
        self.artifacts.push((format!("{}.field", op.stem()), Artifact::Field(f)));
        self
    }
}

/// Configuration plus its source text, for error positions.
pub struct Job<'a> {
    pub config: &'a ExperimentConfig,
    pub source: &'a str,
    pub seed: u64,
}

enum Operator {
    Fio(FioProblem),
    RankOne(RankOneKernel),
}

impl Operator {
    fn as_dyn(&self) -> &dyn MultilinearOperator {
        match self {
            Operator::Fio(p) => p,
            Operator::RankOne(k) => k,
        }
    }

    fn arity(&self) -> usize {
        self.as_dyn().arity()
    }

    fn fio(&self) -> Result<&FioProblem, CliError> {
        match self {
            Operator::Fio(p) => Ok(p),
            Operator::RankOne(_) => Err(CliError::usage("this operation needs a symbol and phases, not a rank-one kernel")),
        }
    }
}

fn bool_str(b: bool) -> String {
    b.to_string()
}

/// Deterministic generator for input slot `slot`.
fn slot_rng(seed: u64, slot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(slot + 1);
    rng
}

impl<'a> Job<'a> {
    fn expr(&self, t: &TermText) -> Result<Expr, CliError> {
        term(self.source, t)
    }

    fn grid(&self) -> Result<UniformGrid, CliError> {
        Ok(UniformGrid::line(self.config.grid.points, self.config.grid.half_width)?)
    }

    /// `gaussian` or `gaussian(a)`: `(2a)^{1/4} e^{-πat²}`, unit norm.
    fn window_on(&self, grid: UniformGrid) -> Result<SampledField, CliError> {
        let e = self.expr(&self.config.gabor.window)?;
        let a = match (&e.kind, e.name()) {
            (ExprKind::Ident(_), Some("gaussian")) => 1.0,
            (ExprKind::Call { args, .. }, Some("gaussian")) if args.len() == 1 && args[0].key.as_deref().is_none_or(|k| k == "a") => {
                args[0].value.as_number()?
            }
            _ => return Err(located(&e, "unknown window (expected `gaussian` or `gaussian(a)`)")),
        };
        if a <= 0.0 {
            return Err(located(&e, "window parameter must be positive"));
        }
        Ok(gaussian(grid, a, 0.0, 0.0))
    }

    /// The analysis window: tight window of the covering system, or the plain window.
    fn analysis_window(&self, grid: UniformGrid) -> Result<SampledField, CliError> {
        let g = self.window_on(grid)?;
        if !self.config.gabor.tight {
            return Ok(g);
        }
        let c = &self.config.gabor;
        Ok(GaborSystem::covering(g, c.alpha, c.beta)?.tighten()?.window().clone())
    }

    fn truncation(&self, k: usize) -> Result<Truncation, CliError> {
        let t = self
            .config
            .gabor
            .truncations
            .get(k)
            .ok_or_else(|| CliError::usage(format!("gabor.truncations needs at least {} entries", k + 1)))?;
        Ok(Truncation { m_radius: t[0], n_radius: t[1] })
    }

    fn two_truncations(&self) -> Result<[Truncation; 2], CliError> {
        if self.config.gabor.truncations.len() != 2 {
            return Err(CliError::usage("gabor.truncations must list exactly two truncations"));
        }
        Ok([self.truncation(0)?, self.truncation(1)?])
    }

    fn system(&self, window: SampledField) -> Result<GaborSystem, CliError> {
        let t = self.truncation(0)?;
        let c = &self.config.gabor;
        Ok(GaborSystem::new(window, c.alpha, c.beta, t.m_radius, t.n_radius)?)
    }

    fn signal(&self, t: &TermText, grid: UniformGrid, slot: u64) -> Result<SampledField, CliError> {
        let e = self.expr(t)?;
        match e.name() {
            Some("random") if matches!(e.kind, ExprKind::Ident(_)) => Ok(central_random_signal(grid, &mut slot_rng(self.seed, slot))),
            Some("gaussian") => {
                let (mut a, mut x, mut xi) = (1.0, 0.0, 0.0);
                if let ExprKind::Call { args, .. } = &e.kind {
                    for (k, arg) in args.iter().enumerate() {
                        let v = arg.value.as_number()?;
                        match (arg.key.as_deref(), k) {
                            (Some("a"), _) | (None, 0) => a = v,
                            (Some("x"), _) | (None, 1) => x = v,
                            (Some("xi"), _) | (None, 2) => xi = v,
                            _ => return Err(located(&arg.value, "gaussian takes a, x, xi")),
                        }
                    }
                }
                Ok(gaussian(grid, a, x, xi))
            }
            _ => Err(located(&e, &format!("unknown signal `{}`", e.name().unwrap_or("?")))),
        }
    }

    fn inputs(&self, grid: UniformGrid, arity: usize) -> Result<Vec<SampledField>, CliError> {
        if self.config.inputs.len() != arity {
            return Err(CliError::usage(format!("the operator takes {arity} inputs but {} are configured", self.config.inputs.len())));
        }
        self.config.inputs.iter().enumerate().map(|(k, t)| self.signal(t, grid, k as u64)).collect()
    }

    /// Symbol and phases; missing phases default to `phase.linear`.
    fn symbol_and_phases(&self) -> Result<(SymbolSpec, Vec<PhaseSpec>), CliError> {
        let op = self.config.operator.as_ref().ok_or_else(|| CliError::usage("missing [operator] section"))?;
        let st = op.symbol.as_ref().ok_or_else(|| CliError::usage("operator.symbol is required"))?;
        let sym = self.expr(st)?;
        let phases = op.phases.iter().map(|p| Ok(resolve_phase(&self.expr(p)?)?)).collect::<Result<Vec<_>, CliError>>()?;
        let arity = if !phases.is_empty() {
            phases.len()
        } else if matches!(sym.name(), Some("sg" | "bracket")) {
            2
        } else if !self.config.inputs.is_empty() {
            self.config.inputs.len()
        } else {
            1
        };
        let symbol = resolve_symbol(&sym, arity)?;
        let phases = if phases.is_empty() { vec![PhaseSpec::linear(); arity] } else { phases };
        Ok((symbol, phases))
    }

    fn operator(&self, grid: UniformGrid) -> Result<Operator, CliError> {
        let op = self.config.operator.as_ref().ok_or_else(|| CliError::usage("missing [operator] section"))?;
        if !op.rank_one.is_empty() {
            if op.symbol.is_some() || !op.phases.is_empty() {
                return Err(CliError::usage("operator.rank_one excludes symbol and phases"));
            }
            let factors = op.rank_one.iter().enumerate().map(|(k, t)| self.signal(t, grid, 1000 + k as u64)).collect::<Result<Vec<_>, _>>()?;
            return Ok(Operator::RankOne(RankOneKernel::new(factors)?));
        }
        let (symbol, phases) = self.symbol_and_phases()?;
        Ok(Operator::Fio(FioProblem::new(symbol, phases, grid)?))
    }

    fn weight(&self, t: Option<&TermText>) -> Result<WeightSpec, CliError> {
        match t {
            Some(t) => Ok(resolve_weight(&self.expr(t)?, 2)?),
            None => Ok(WeightSpec::constant(2)),
        }
    }
}

fn located(e: &Expr, message: &str) -> CliError {
    CliError::Core(tfio::Error::Parse { line: e.at.0, column: e.at.1, message: message.to_owned() })
}

/// `(2a)^{1/4} e^{-πa(t-x)²} e^{2πiξt}`.
pub fn gaussian(grid: UniformGrid, a: f64, x: f64, xi: f64) -> SampledField {
    let c = (2.0 * a).powf(0.25);
    SampledField::from_fn_1d(grid, |t| C64::from_polar(c * (-std::f64::consts::PI * a * (t - x).powi(2)).exp(), std::f64::consts::TAU * xi * t))
}

pub fn run(op: Op, job: &Job<'_>) -> Result<Outcome, CliError> {
    match op {
        Op::Stft => run_stft(job),
        Op::CheckFrame => run_check_frame(job),
        Op::FioApply => run_fio_apply(job),
        Op::FioKernel => run_fio_kernel(job),
        Op::FioMatrix => run_fio_matrix(job),
        Op::TorusApply => run_torus_apply(job),
        Op::TorusKernel => run_torus_kernel(job),
        Op::VerifyStftRelation => run_stft_relation(job),
        Op::VerifyBound => run_bound(job),
        Op::VerifyDecayFio => run_decay_fio(job),
        Op::VerifyDecayPdo => run_decay_pdo(job),
        Op::Norm => run_norm(job),
    }
}

fn run_stft(job: &Job<'_>) -> Result<Outcome, CliError> {
    let grid = job.grid()?;
    let f = job.inputs(grid, 1)?.remove(0);
    let g = job.window_on(grid)?;
    let v = stft(&f, &g, &grid, &grid.dual())?;
    let xs = grid.points();
    let ks = grid.dual().points();
    let mut csv = Csv::new(&["x", "xi", "re", "im"]);
    let mut data = Vec::with_capacity(xs.len() * ks.len());
    for (i, &x) in xs.iter().enumerate() {
        for (j, &k) in ks.iter().enumerate() {
            let z = v.get(i, j);
            data.push(z);
            csv.push(vec![num(x), num(k), num(z.re), num(z.im)]);
        }
    }
    let field = SampledField::new(vec![grid, grid.dual()], data)?;
    Ok(Outcome::table(Op::Stft, csv, true).with_field(Op::Stft, field))
}

fn run_check_frame(job: &Job<'_>) -> Result<Outcome, CliError> {
    let grid = job.grid()?;
    let c = &job.config.gabor;
    let sys = GaborSystem::covering(job.window_on(grid)?, c.alpha, c.beta)?;
    let b = sys.frame_bounds();
    let frame = b.lower > FRAME_LOWER_FLOOR;
    let residual = if frame {
        let dual = sys.with_window(sys.dual_window(1e-13, 5000)?)?;
        let f = central_random_signal(grid, &mut slot_rng(job.seed, 0));
        let back = dual.synthesize(&sys.analyze(&f)?)?;
        back.add_scaled(&f, C64::new(-1.0, 0.0))?.l2_norm() / f.l2_norm()
    } else {
        f64::NAN
    };
    let mut csv = Csv::new(&["alpha", "beta", "points", "half_width", "atoms", "lower", "upper", "ratio", "frame", "dual_residual"]);
    csv.push(vec![
        num(c.alpha),
        num(c.beta),
        grid.points_per_axis().to_string(),
        num(grid.half_width()),
        sys.atom_count().to_string(),
        num(b.lower),
        num(b.upper),
        num(b.ratio()),
        bool_str(frame),
        num(residual),
    ]);
    let expected = job.config.checks.as_ref().and_then(|k| k.frame);
    Ok(Outcome::table(Op::CheckFrame, csv, expected.is_none_or(|e| e == frame)))
}

fn run_fio_apply(job: &Job<'_>) -> Result<Outcome, CliError> {
    let grid = job.grid()?;
    let op = job.operator(grid)?;
    let inputs = job.inputs(grid, op.arity())?;
    let refs: Vec<&SampledField> = inputs.iter().collect();
    let out = op.as_dyn().apply(&refs)?;
    let product: Vec<C64> = (0..grid.len()).map(|j| inputs.iter().map(|f| f.data()[j]).product()).collect();
    let deviation = out.data().iter().zip(&product).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let tol = job.config.checks.as_ref().and_then(|k| k.product);
    let pass = tol.is_none_or(|t| deviation <= t);
    let max_abs = out.data().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut csv = Csv::new(&["l2_norm", "max_abs", "product_deviation", "tolerance", "pass"]);
    csv.push(vec![num(out.l2_norm()), num(max_abs), num(deviation), tol.map(num).unwrap_or_default(), bool_str(pass)]);
    Ok(Outcome::table(Op::FioApply, csv, pass).with_field(Op::FioApply, out))
}

fn field_summary(f: &SampledField) -> Csv {
    let mut csv = Csv::new(&["blocks", "points", "l2_norm", "max_abs"]);
    csv.push(vec![
        f.blocks().len().to_string(),
        f.data().len().to_string(),
        num(f.l2_norm()),
        num(f.data().iter().map(|z| z.norm()).fold(0.0, f64::max)),
    ]);
    csv
}

fn run_fio_kernel(job: &Job<'_>) -> Result<Outcome, CliError> {
    let grid = job.grid()?;
    let k = match job.operator(grid)? {
        Operator::Fio(p) => kernel_from_symbol(&p)?,
        Operator::RankOne(r) => r.to_kernel()?,
    };
    let f = k.into_field();
    Ok(Outcome::table(Op::FioKernel, field_summary(&f), true).with_field(Op::FioKernel, f))
}

fn matrix(job: &Job<'_>) -> Result<CoefficientTensor, CliError> {
    let grid = job.grid()?;
    let sys = job.system(job.analysis_window(grid)?)?;
    Ok(match job.operator(grid)? {
        Operator::Fio(p) => gabor_matrix(&p, &sys)?,
        Operator::RankOne(r) => gabor_matrix_kernel(&r.to_kernel()?, &sys)?,
    })
}

fn run_fio_matrix(job: &Job<'_>) -> Result<Outcome, CliError> {
    let b = matrix(job)?;
    let mut header: Vec<String> = b.axes().iter().map(|a| a.name.clone()).collect();
    header.extend(["re".to_string(), "im".to_string()]);
    let mut csv = Csv::with_header(header);
    b.for_each(|idx, z| {
        let mut row: Vec<String> = idx.iter().map(i64::to_string).collect();
        row.extend([num(z.re), num(z.im)]);
        csv.push(row);
    });
    Ok(Outcome::table(Op::FioMatrix, csv, true))
}

fn run_norm(job: &Job<'_>) -> Result<Outcome, CliError> {
    let nc = job.config.norm.as_ref().ok_or_else(|| CliError::usage("missing [norm] section"))?;
    let e = job.expr(&nc.spec)?;
    let spec = resolve_norm(&e)?;
    let b = matrix(job)?;
    let v = nested_mixed_norm(&b, &spec)?;
    let mut csv = Csv::new(&["spec", "value"]);
    csv.push(vec![format!("\"{e}\""), num(v)]);
    Ok(Outcome::table(Op::Norm, csv, v.is_finite()))
}

fn cutoff(job: &Job<'_>) -> Result<usize, CliError> {
    Ok(job.config.torus.as_ref().ok_or_else(|| CliError::usage("missing [torus] section or --cutoff"))?.cutoff)
}

fn torus_signal(job: &Job<'_>, t: &TermText, cutoff: usize, slot: u64) -> Result<TorusSignal, CliError> {
    use rand::Rng;
    let e = job.expr(t)?;
    match (e.name(), &e.kind) {
        (Some("random"), ExprKind::Ident(_)) => {
            let mut rng = slot_rng(job.seed, slot);
            Ok(TorusSignal::from_fn(cutoff, |_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))?)
        }
        (Some("pure"), ExprKind::Call { args, .. }) if args.len() == 1 => {
            let k = args[0].value.as_number()?;
            Ok(TorusSignal::pure(cutoff, k as i64)?)
        }
        (Some("one"), ExprKind::Ident(_)) => Ok(TorusSignal::pure(cutoff, 0)?),
        _ => Err(located(&e, &format!("unknown torus signal `{}`", e.name().unwrap_or("?")))),
    }
}

fn run_torus_apply(job: &Job<'_>) -> Result<Outcome, CliError> {
    let f = cutoff(job)?;
    let (symbol, phases) = job.symbol_and_phases()?;
    let r = phases.len();
    if job.config.inputs.len() != r {
        return Err(CliError::usage(format!("the operator takes {r} inputs but {} are configured", job.config.inputs.len())));
    }
    let inputs = job.config.inputs.iter().enumerate().map(|(k, t)| torus_signal(job, t, f, k as u64)).collect::<Result<Vec<_>, _>>()?;
    let refs: Vec<&TorusSignal> = inputs.iter().collect();
    // the output is a trigonometric polynomial of degree ≤ rF; sample and transform exactly
    let top = r * f;
    let n = 2 * top + 2;
    let xs = torus_grid(n)?.points();
    let values = torus_fio_eval(&symbol, &phases, &refs, &xs)?;
    let mut csv = Csv::new(&["k", "re", "im"]);
    for k in -(top as i64)..=top as i64 {
        let c: C64 = xs.iter().zip(&values).map(|(&x, v)| v * C64::from_polar(1.0, -std::f64::consts::TAU * k as f64 * x)).sum::<C64>() / n as f64;
        csv.push(vec![k.to_string(), num(c.re), num(c.im)]);
    }
    Ok(Outcome::table(Op::TorusApply, csv, true))
}

fn run_torus_kernel(job: &Job<'_>) -> Result<Outcome, CliError> {
    let f = cutoff(job)?;
    let n = job.config.torus.as_ref().and_then(|t| t.points).unwrap_or(2 * f + 2);
    let (symbol, phases) = job.symbol_and_phases()?;
    let k = torus_kernel(&symbol, &phases, f, &torus_grid(n)?)?.into_field();
    Ok(Outcome::table(Op::TorusKernel, field_summary(&k), true).with_field(Op::TorusKernel, k))
}

fn run_stft_relation(job: &Job<'_>) -> Result<Outcome, CliError> {
    let grid = job.grid()?;
    let (symbol, phases) = job.symbol_and_phases()?;
    let p = FioProblem::new(symbol.clone(), phases.clone(), grid)?;
    let fine = FioProblem::new(symbol, phases, UniformGrid::line(2 * grid.points_per_axis(), grid.half_width())?)?;
    let samples = job.config.verify.as_ref().and_then(|v| v.samples).unwrap_or(100);
    let pts = relation_points(&grid, p.arity(), samples, job.seed);
    let coarse = stft_relation_values(&p, &pts)?;
    let refined = stft_relation_values(&fine, &pts)?;
    let deviation = coarse.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let magnitude = coarse.iter().map(|(a, b)| a.max(*b)).fold(0.0, f64::max);
    let cross = coarse.iter().zip(&refined).map(|(a, b)| (a.0 - b.0).abs().max((a.1 - b.1).abs())).fold(0.0, f64::max);
    let tol = job.config.checks.as_ref().and_then(|k| k.stft_relation).unwrap_or(DEFAULT_STFT_RELATION_TOL);
    let pass = deviation < tol && cross < tol;
    let mut csv = Csv::new(&["arity", "points", "samples", "max_deviation", "max_magnitude", "refined_change", "tolerance", "pass"]);
    csv.push(vec![
        p.arity().to_string(),
        grid.points_per_axis().to_string(),
        samples.to_string(),
        num(deviation),
        num(magnitude),
        num(cross),
        num(tol),
        bool_str(pass),
    ]);
    Ok(Outcome::table(Op::VerifyStftRelation, csv, pass))
}

/// `holder(p=[…], q=[…])`.
fn tuple(job: &Job<'_>, t: &TermText) -> Result<ExponentTuple, CliError> {
    let e = job.expr(t)?;
    let ExprKind::Call { name, args } = &e.kind else {
        return Err(located(&e, "expected holder(p=[...], q=[...])"));
    };
    if name != "holder" || args.len() != 2 {
        return Err(located(&e, "expected holder(p=[...], q=[...])"));
    }
    let list = |key: &str| -> Result<Vec<tfio::Exponent>, CliError> {
        let a = args.iter().find(|a| a.key.as_deref() == Some(key)).ok_or_else(|| located(&e, &format!("holder needs {key}=[...]")))?;
        Ok(a.value.as_list()?.iter().map(Expr::as_exponent).collect::<Result<_, _>>()?)
    };
    ExponentTuple::holder(list("p")?, list("q")?).map_err(|err| located(&e, &err.to_string()))
}

fn run_bound(job: &Job<'_>) -> Result<Outcome, CliError> {
    let grid = job.grid()?;
    let v = job.config.verify.as_ref().ok_or_else(|| CliError::usage("missing [verify] section"))?;
    let tuples = v.tuples.iter().map(|t| tuple(job, t)).collect::<Result<Vec<_>, _>>()?;
    if tuples.is_empty() {
        return Err(CliError::usage("verify.tuples is empty"));
    }
    let input_weight = job.weight(v.input_weight.as_ref())?;
    let target_weight = job.weight(v.target_weight.as_ref())?;
    let op = job.operator(grid)?;
    let c = &job.config.gabor;
    let family = InputFamily {
        window: job.analysis_window(grid)?,
        alpha: c.alpha,
        beta: c.beta,
        decay: v.input_decay.unwrap_or(2.0),
    };
    let norm_window = job.window_on(grid)?;
    let [ra, rb] = v.radii.unwrap_or([8, 16]);
    let trials = v.trials.unwrap_or(100);
    let tol = job.config.checks.as_ref().and_then(|k| k.stability).unwrap_or(DEFAULT_BOUND_STABILITY);
    let weight_name = format!(
        "{}->{}",
        v.input_weight.as_ref().map_or("one".into(), |t| t.get_ref().clone()),
        v.target_weight.as_ref().map_or("one".into(), |t| t.get_ref().clone())
    );
    let mut csv = Csv::new(&[
        "p", "q", "s1", "s2", "radius_a", "radius_b", "max_ratio_a", "max_ratio_b", "min_ratio_b", "relative_change", "tolerance", "pass",
    ]);
    let mut all = true;
    for e in tuples {
        let setup = BoundednessSetup {
            exponents: e.clone(),
            window: &norm_window,
            input_weight: input_weight.clone(),
            target_weight: target_weight.clone(),
            weight_name: weight_name.clone(),
        };
        log::info!("bound {}", e.label());
        let a = verify_boundedness(op.as_dyn(), &setup, &family, trials, ra, job.seed)?;
        let b = verify_boundedness(op.as_dyn(), &setup, &family, trials, rb, job.seed)?;
        let rel = (a.max_ratio - b.max_ratio).abs() / a.max_ratio.max(b.max_ratio);
        let pass = a.max_ratio.is_finite() && b.max_ratio.is_finite() && rel < tol;
        all &= pass;
        let list = |v: &[tfio::Exponent]| format!("\"{}\"", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";"));
        csv.push(vec![
            list(&e.p),
            list(&e.q),
            e.s1.to_string(),
            e.s2.to_string(),
            ra.to_string(),
            rb.to_string(),
            num(a.max_ratio),
            num(b.max_ratio),
            num(b.min_ratio),
            num(rel),
            num(tol),
            bool_str(pass),
        ]);
    }
    Ok(Outcome::table(Op::VerifyBound, csv, all))
}

fn orders(job: &Job<'_>, len: usize) -> Result<Vec<Vec<u32>>, CliError> {
    let v = job.config.verify.as_ref().ok_or_else(|| CliError::usage("missing [verify] section"))?;
    if v.orders.is_empty() || v.orders.iter().any(|o| o.len() != len) {
        return Err(CliError::usage(format!("verify.orders must be a non-empty list of {len}-element lists")));
    }
    Ok(v.orders.clone())
}

fn slope(f: &Option<tfio::DecayFit>) -> f64 {
    f.map_or(f64::NAN, |f| f.slope)
}

fn run_decay_fio(job: &Job<'_>) -> Result<Outcome, CliError> {
    let grid = job.grid()?;
    let ords = orders(job, 1)?;
    let p = match job.operator(grid)? {
        Operator::Fio(p) => p,
        o => o.fio()?.clone(),
    };
    let t = job.two_truncations()?;
    let c = &job.config.gabor;
    let list: Vec<u32> = ords.iter().map(|o| o[0]).collect();
    let report = verify_decay_fio(&p, &job.analysis_window(grid)?, c.alpha, c.beta, t, &list)?;
    let tol = job.config.checks.as_ref().and_then(|k| k.stability).unwrap_or(DEFAULT_DECAY_STABILITY);
    let check_slopes = job.config.verify.as_ref().is_some_and(|v| v.check_slopes);
    let mut header = vec!["N", "c_a", "c_b", "stability"].into_iter().map(String::from).collect::<Vec<_>>();
    header.extend((0..report.slopes.len()).map(|k| format!("slope_{k}")));
    header.extend(["stable", "slopes_ok", "pass"].map(String::from));
    let mut csv = Csv::with_header(header);
    let mut all = true;
    for row in &report.rows {
        let n = row.orders[0];
        let stable = row.constants.iter().all(|c| c.is_finite()) && row.stability() < tol;
        let slopes_ok = !check_slopes || report.slopes.iter().all(|s| slope(s) <= -2.0 * n as f64);
        let pass = stable && slopes_ok;
        all &= pass;
        let mut r = vec![n.to_string(), num(row.constants[0]), num(row.constants[1]), num(row.stability())];
        r.extend(report.slopes.iter().map(|s| num(slope(s))));
        r.extend([bool_str(stable), bool_str(slopes_ok), bool_str(pass)]);
        csv.push(r);
    }
    Ok(Outcome::table(Op::VerifyDecayFio, csv, all))
}

fn run_decay_pdo(job: &Job<'_>) -> Result<Outcome, CliError> {
    let grid = job.grid()?;
    let ords = orders(job, 3)?;
    let (symbol, phases) = job.symbol_and_phases()?;
    if phases.len() != 2 || phases.iter().any(|p| !p.is_standard()) {
        return Err(CliError::usage("decay-pdo needs a bilinear symbol with standard phases"));
    }
    let t = job.two_truncations()?;
    let c = &job.config.gabor;
    let list: Vec<[u32; 3]> = ords.iter().map(|o| [o[0], o[1], o[2]]).collect();
    let report = verify_decay_pdo(&symbol, &job.analysis_window(grid)?, c.alpha, c.beta, t, &list)?;
    let tol = job.config.checks.as_ref().and_then(|k| k.stability).unwrap_or(DEFAULT_DECAY_STABILITY);
    let check_slopes = job.config.verify.as_ref().is_some_and(|v| v.check_slopes);
    let mut csv = Csv::new(&[
        "N1", "N2", "N3", "c_a", "c_b", "stability", "slope_n", "slope_m", "slope_m0", "growth_n", "growth_n0", "growth_mp", "stable",
        "slopes_ok", "pass",
    ]);
    let mut all = true;
    for row in &report.rows {
        let [n1, n2, n3] = [row.orders[0], row.orders[1], row.orders[2]];
        let stable = row.constants.iter().all(|c| c.is_finite()) && row.stability() < tol;
        // directions: n+n0−n′ (order N3), m−m′ (N1), m0−m′ (N2)
        let need = [n3, n1, n2];
        let slopes_ok = !check_slopes || report.slopes.iter().zip(need).all(|(s, n)| slope(s) <= -2.0 * n as f64);
        let pass = stable && slopes_ok;
        all &= pass;
        let mut r = vec![n1.to_string(), n2.to_string(), n3.to_string(), num(row.constants[0]), num(row.constants[1]), num(row.stability())];
        r.extend(report.slopes.iter().map(|s| num(slope(s))));
        r.extend(report.growth.iter().map(|s| num(slope(s))));
        r.extend([bool_str(stable), bool_str(slopes_ok), bool_str(pass)]);
        csv.push(r);
    }
    Ok(Outcome::table(Op::VerifyDecayPdo, csv, all))
}

