//! Lebeau–Robbiano control of the heat equation from Σ on a finite spectral model.

pub mod control;
pub mod gramian;
pub mod kernel;
pub mod miller;
pub mod model;

use thiserror::Error;

use crate::mp::MpError;

pub use control::{
    apply_control, duality_check, lr_control, min_norm_control, ControlPiece, ControlResult, ControlStage, LrPlan, LrSchedule,
    StageMode,
};
pub use gramian::{observability_gramian, GramianFactor, ObservabilityGramian};
pub use kernel::{g1_derivatives, kernel_verify, transmutation_eval, KernelReport, TransmutationKernel};
pub use miller::{admissibility_check, miller_check, AdmissibilityTable, CostFit, MillerReport};
pub use model::{Factor, RealLabel, SpectralModel};

#[derive(Debug, Error)]
pub enum LrError {
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("time must be positive, got {0}")]
    NegativeTime(f64),
    #[error("no eigenvalues below cutoff {0}")]
    EmptyTruncation(f64),
    #[error("Gramian on E_{cutoff} not invertible in extended precision: {detail}")]
    GramianSingular { cutoff: f64, detail: String },
    #[error("stage {stage} Gramian singular: {source}")]
    StageGramianSingular {
        stage: usize,
        #[source]
        source: Box<LrError>,
    },
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
    #[error("kernel series did not converge within {terms} terms (last term {last:e})")]
    SeriesNotConverged { terms: usize, last: f64 },
    #[error("point {0} outside the admissible interval")]
    OutOfInterval(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Mp(#[from] MpError),
}

/// e^{−tΛ²} v on the model basis.
pub fn heat_evolve(model: &SpectralModel, v: &[f64], t: f64) -> Result<Vec<f64>, LrError> {
    if t < 0.0 {
        return Err(LrError::NegativeTime(t));
    }
    check_len(model, v)?;
    Ok(v.iter().zip(&model.lambda2).map(|(x, l2)| x * (-t * l2).exp()).collect())
}

/// Solution of v'' = −Av with v(0) = v0, v'(0) = v1 at elliptic time s:
/// cosh(sλ_j)v0_j + sinh(sλ_j)/λ_j·v1_j, extended by continuity at λ_j = 0.
pub fn elliptic_evolve(model: &SpectralModel, v0: &[f64], v1: &[f64], s: f64) -> Result<Vec<f64>, LrError> {
    check_len(model, v0)?;
    check_len(model, v1)?;
    Ok(model
        .lambda2
        .iter()
        .zip(v0.iter().zip(v1))
        .map(|(&l2, (&a, &b))| {
            let l = l2.sqrt();
            let sinhc = if l * s.abs() < 1e-8 { s } else { (s * l).sinh() / l };
            (s * l).cosh() * a + sinhc * b
        })
        .collect())
}

pub(crate) fn check_len(model: &SpectralModel, v: &[f64]) -> Result<(), LrError> {
    if v.len() != model.len() {
        return Err(LrError::ModelMismatch(format!(
            "vector of length {} for a model of dimension {}",
            v.len(),
            model.len()
        )));
    }
    Ok(())
}
