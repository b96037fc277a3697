//! Threshold-approval matching: elicitation, the `f_t`/`R_t` and `g_t`/`GR_t`
//! mechanisms, an exact min-cost flow solver, an exact small-scale distortion
//! oracle and lower-bound instance generators.

pub mod adversary;
pub mod bipartite;
pub mod elicitation;
pub mod error;
pub mod flow;
pub mod generalized;
pub mod io;
pub mod model;
pub mod onesided;
pub mod oracle;
pub mod sampling;

pub use error::{Error, Result};
pub use model::{
    allocation_welfare, social_welfare, validate_generalized, validate_profile, Allocation,
    CopySlot, GeneralizedDims, GeneralizedInput, GeneralizedInstance, InputProfile, Matching,
    OneSidedInput, OneSidedInstance, ThresholdVector, UtilityProfile, Violation,
};
