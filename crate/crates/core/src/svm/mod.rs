//! Evaluation of the dual function at fixed multipliers: SDCA over `w`
//! wrapped in a cutting plane over the bias.

mod bias;
mod sdca;

pub use bias::{
    bias_cut_chooser_centroid, bias_cut_chooser_min, svm_optimize, BiasChooser, BiasCut, BiasCutStore, BiasMode,
    SvmOptions, SvmSolution,
};
pub use sdca::{conjugate, objectives, sdca_optimize, DualState, SdcaOptions, SdcaReport};
