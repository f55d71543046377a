//! Anisotropic quantum Rabi model: parity-blocked spectra, position-space
//! spin textures and their topological counters.
//!
//! Numerics are generic over [`Real`] (`f32` or `f64`); the `*F64` aliases
//! below are the usual entry points.

pub mod hamiltonian;
pub mod linalg;
pub mod pipeline;
pub mod realspace;
pub mod scalar;
pub mod scan;
pub mod topology;

use thiserror::Error;

pub use hamiltonian::{
    build_block, critical_coupling, dual_params, jcm_energy, jcm_levels, solve_spectrum, Branch, EigenLevel, Gaps,
    ModelError, ModelParams, Parity, Spectrum,
};
pub use linalg::{diagonalize, diagonalize_tridiagonal, EigenPair, Matrix, SolverError};
pub use pipeline::{analyze_levels, analyze_point, PipelineConfig};
pub use realspace::{hermite_basis, spin_texture, to_position, Grid, RealSpaceError, RealSpaceState, SpinTexture};
pub use scalar::Real;
pub use scan::{
    classify_gap_events, phase_diagram, phase_diagrams, sweep_line, AxisRange, Boundary, EventKind, GapEvent, GapSide,
    PhaseDiagram, Quantity, ScanConfig, ScanRecord, SweepAxis, SweepSpec,
};
pub use topology::{analyze, TopoAnalysis, TopoConfig, TopoError, TopoSummary};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    RealSpace(#[from] RealSpaceError),
    #[error(transparent)]
    Topology(#[from] TopoError),
    #[error(transparent)]
    Code(#[from] topology::CodeError),
    #[error("level j_e = {j_e} is outside the computed range 1..={n_levels}")]
    LevelOutOfRange { j_e: usize, n_levels: usize },
    #[error("invalid sweep: {0}")]
    Sweep(String),
}

impl Error {
    /// True for bad inputs, false for failures inside the numerics.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Model(ModelError::Solver(_)) => false,
            Error::Model(_) | Error::Code(_) | Error::LevelOutOfRange { .. } | Error::Sweep(_) => true,
            Error::RealSpace(RealSpaceError::BadPointCount(_) | RealSpaceError::BadHalfWidth(_) | RealSpaceError::OrderTooHigh(_)) => true,
            Error::RealSpace(_) | Error::Topology(_) => false,
        }
    }
}

pub type ModelParamsF64 = ModelParams<f64>;
pub type ModelParamsF32 = ModelParams<f32>;
pub type SpectrumF64 = Spectrum<f64>;
pub type SpectrumF32 = Spectrum<f32>;
pub type EigenLevelF64 = EigenLevel<f64>;
pub type GridF64 = Grid<f64>;
pub type RealSpaceStateF64 = RealSpaceState<f64>;
pub type SpinTextureF64 = SpinTexture<f64>;
pub type TopoSummaryF64 = TopoSummary<f64>;
pub type TopoConfigF64 = TopoConfig<f64>;
pub type TopoAnalysisF64 = TopoAnalysis<f64>;
pub type PipelineConfigF64 = PipelineConfig<f64>;
pub type ScanConfigF64 = ScanConfig<f64>;
pub type ScanRecordF64 = ScanRecord<f64>;
