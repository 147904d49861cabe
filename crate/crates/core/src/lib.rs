//! Precoder design for MIMO links with finite QAM inputs.
//!
//! The mutual information between the transmitted symbol vector and the
//! received signal is evaluated with Gauss-Hermite quadrature, differentiated
//! with respect to the precoder, and maximized with a two-stage projected
//! gradient method. Large arrays are handled by splitting the channel's
//! singular modes into independently precoded groups.

pub mod channels;
pub mod constellation;
pub mod error;
pub mod gradients;
pub mod linalg;
pub mod mi;
pub mod optimizer;
pub mod pgp;
pub mod quadrature;

pub use channels::{ChannelEnsemble, ChannelMatrix, NoiseModel};
pub use constellation::Constellation;
pub use error::{Error, Result};
pub use gradients::Gradients;
pub use mi::{mi_gh, mi_mc, Budget, EffectiveChannel, MiEstimate, Method};
pub use optimizer::{optimize, OptimizerParams, PrecoderResult, PrecoderState};
pub use pgp::{optimize_pgp, plan_groups, GroupPlan, Pairing, PgpResult};
pub use quadrature::QuadratureRule;
