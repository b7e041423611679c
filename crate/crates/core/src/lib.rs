//! Single-channel adaptive noise reduction.
//!
//! A linear prediction error filter whitens the noisy observation, adapting
//! taps near the pitch lag quickly and all others slowly. A second adaptive
//! filter, driven by the whitened residual, identifies the system that colors
//! the background noise and reconstructs it; the reconstruction is subtracted
//! from the observation.
//!
//! Every numeric type is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the double-precision variants the CLI and experiments use.

pub mod error;
pub mod eval;
pub mod filters;
pub mod oracle;
pub mod pipeline;
pub mod pitch;
pub mod scalar;
pub mod signals;

pub use error::{Error, Result};
pub use eval::{
    segmental_snr, snr_db, snr_improvement, whiteness, write_report, ReportFormat, SnrMeasurement,
    SnrReport,
};
pub use filters::{FilterState, LpefOutput, StepSizeProfile};
pub use pipeline::{
    process_signal, ConvergenceTrace, PipelineConfig, PipelineOutput, PipelineState, StepOutput,
    TracePoint,
};
pub use pitch::{estimate_pitch, make_step_profile, PitchEstimate};
pub use scalar::Real;
pub use signals::wav::{read_wav, write_wav, WavError};
pub use signals::{
    gen_voiced, gen_white_noise, mix_at_snr, shape_noise, NoiseShaper, Scenario, ScenarioSignals,
    Signal,
};

pub type FilterState64 = FilterState<f64>;
pub type FilterState32 = FilterState<f32>;
pub type StepSizeProfile64 = StepSizeProfile<f64>;
pub type StepSizeProfile32 = StepSizeProfile<f32>;
pub type Signal64 = Signal<f64>;
pub type Signal32 = Signal<f32>;
pub type PipelineState64 = PipelineState<f64>;
pub type PipelineState32 = PipelineState<f32>;
pub type PipelineOutput64 = PipelineOutput<f64>;
