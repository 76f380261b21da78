pub mod error;
pub mod fio;
pub mod gabor;
pub mod grid;
pub mod io;
mod jet;
pub mod norms;
pub mod phases;
pub mod stft;
pub mod symbols;
pub mod tensor;
pub mod terms;
pub mod torus;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
pub use fio::{bk_apply, fio_apply, fio_apply_with, gabor_entry, gabor_matrix, gabor_matrix_kernel, kernel_from_symbol, matrix_apply, pdo_apply, Evaluation, FioProblem, KernelField, MultilinearOperator, RankOneKernel};
pub use gabor::{Boundary, central_random_signal, conjugate_gradient, FrameBounds, GaborSystem};
pub use grid::{apply_shift, dft, SampledField, Sign, TimeFrequencyShift, UniformGrid, C64};
pub use norms::{lp, mixed_norm, modulation_norm, nested_mixed_norm, sequence_norm, Exponent, NestedNormSpec};
pub use phases::{phase_checks, PhaseKind, PhaseReport, PhaseSpec};
pub use stft::{stft, stft_direct, stft_invert, StftField};
pub use symbols::{certify_class, ClassReport, ClassRow, DerivativeMethod, Factor, Profile, SymbolClass, SymbolKind, SymbolSpec, Term};
pub use tensor::{Axis, CoefficientTensor};
pub use torus::{compare_kernel_norms, dirichlet, torus_fio_apply, torus_fio_eval, torus_grid, torus_kernel, torus_modulation_norm, KernelNormReport, TorusSignal};
pub use weights::{check_s_moderate, LinearMap, ModerateReport, PhaseSpaceTransform, WeightSpec};
pub use verify::{
    fit_decay_exponent, verify_boundedness, verify_decay_fio, verify_decay_pdo, verify_kernel_symbol_stft, BoundednessReport,
    BoundednessSetup, DecayFit, DecayReport, DecayRow, ExponentTuple, InputFamily, StftRelationReport, Truncation,
};
pub use io::{read_field, write_field};
pub use terms::{resolve_norm, resolve_phase, resolve_symbol, resolve_weight, Expr};
