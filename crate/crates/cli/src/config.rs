//! Experiment configuration: a TOML document whose string values in term
//! positions are parsed with the term language of [`tfio::terms`].

use serde::{Deserialize, Serialize};
use toml::Spanned;

use tfio::terms::Expr;

use crate::error::CliError;

/// A term-valued string together with its location in the source.
pub type TermText = Spanned<String>;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional operation name, e.g. `verify decay-pdo`; must match the subcommand when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operation: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub gabor: GaborConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<TermText>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub torus: Option<TorusConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm: Option<NormConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checks: Option<ChecksConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub points: usize,
    pub half_width: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { points: 256, half_width: 8.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaborConfig {
    /// `gaussian` or `gaussian(a)`.
    pub window: TermText,
    pub alpha: f64,
    pub beta: f64,
    /// Replace the window by the tight window of the covering system.
    pub tight: bool,
    /// Lattice truncations `[m_radius, n_radius]`; the first is used by
    /// single-truncation operations.
    pub truncations: Vec<[usize; 2]>,
}

impl Default for GaborConfig {
    fn default() -> Self {
        Self {
            window: Spanned::new(0..0, "gaussian".into()),
            alpha: 0.5,
            beta: 0.5,
            tight: true,
            truncations: vec![[4, 4]],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symbol: Option<TermText>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub phases: Vec<TermText>,
    /// Factors `φ₀, φ₁, …` of a rank-one kernel; replaces `symbol`/`phases`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rank_one: Vec<TermText>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusConfig {
    pub cutoff: usize,
    /// Sample count for kernels; defaults to `2F + 2`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Decay orders: `[N]` for `decay-fio`, `[N₁, N₂, N₃]` for `decay-pdo`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub orders: Vec<Vec<u32>>,
    /// Require fitted decay slopes of at most `-2N` per direction.
    #[serde(default)]
    pub check_slopes: bool,
    /// Sample points for `stft-relation`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Exponent tuples `holder(p=[…], q=[…])` for `bound`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tuples: Vec<TermText>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// Two lattice radii for the input family of `bound`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radii: Option<[usize; 2]>,
    /// Coefficient decay `⟨(m, n)⟩^{-decay}` of the random inputs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_decay: Option<f64>,
    /// Weights on the time-frequency plane for inputs and output.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_weight: Option<TermText>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_weight: Option<TermText>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormConfig {
    pub spec: TermText,
}

/// Declared tolerances. Unset entries fall back to the defaults in
/// [`crate::run`]; the exit code is nonzero when any check fails.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    /// `fio apply`: maximum deviation of the output from the product of the inputs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub product: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stft_relation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability: Option<f64>,
    /// `gabor check-frame`: whether the system is expected to be a frame.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame: Option<bool>,
}

/// 1-based line and column of byte `offset` in `src`.
pub fn line_column(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

impl ExperimentConfig {
    pub fn parse(src: &str) -> Result<Self, CliError> {
        toml::from_str(src).map_err(|e| {
            let (line, column) = e.span().map_or((1, 1), |s| line_column(src, s.start));
            CliError::Config { line, column, message: e.message().to_owned() }
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

/// Parses a term-valued string, reporting positions in `src`. Terms built
/// in code (empty span) are reported relative to themselves.
pub fn term(src: &str, t: &TermText) -> Result<Expr, CliError> {
    let span = t.span();
    let (line, column) = if span.is_empty() { (1, 1) } else { line_column(src, span.start + 1) };
    Ok(Expr::parse_at(t.get_ref(), line, column)?)
}
