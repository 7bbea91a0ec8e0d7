//! Minimal dense-array numerical core with reverse-mode differentiation.
//!
//! All training math runs in f64 so that gradients can be checked against
//! central finite differences at tight tolerances.

mod adam;
mod array;
mod gradcheck;
pub mod layers;
mod params;
mod tape;

pub use adam::{adam_step, AdamHyper};
pub use array::Array;
pub use gradcheck::{grad_check, CoordSample};
pub use layers::{
    attend, cgru_step, cross_entropy, gru_cell, hier_fuse, register_attention, register_cgru,
    register_fuse, register_gru, run_bigru, softmax, AttnParamIds, CgruParamIds, FuseParamIds,
    GruParamIds,
};
pub use params::{ParamStore, INIT_SCALE};
pub use tape::{softmax_slice, Gradients, NodeId, Tape};
