//! Deterministic constructions of frames with small coherence, thin sets with
//! small Fourier coefficients and point sets with small power sums, together
//! with the exact verifiers that certify them.

pub mod additive;
pub mod arith;
pub mod error;
pub mod matrix;
pub mod ripmat;
pub mod thinsets;
pub mod turan;

pub use additive::{
    additive_energy, set_combine, CombineMode, EnergyMode, EnergyReport, ResidueSet,
};
pub use arith::{PrimeModulus, Residue};
pub use error::{Error, Result};
pub use matrix::{ComplexMatrix, MatrixFormat};
pub use ripmat::{
    build_frame, build_frame_from_params, ConstructionParams, FlatRipMode, FrameMetadata,
    QuadPhaseFrame, RipReport,
};
pub use thinsets::{
    construct_thin_set, FourierProfile, ResidueMultiset, ScanMode, StageVariant, ThinSet,
    ThinSetCertificate, ThinSetParams,
};
pub use turan::{
    construct_turan, PowerSumMethod, TuranCertificate, TuranConstruction, TuranParams,
    TuranPointSet,
};
