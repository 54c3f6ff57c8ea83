//! Differential-privacy primitives and accounting.

mod above_threshold;
mod binary_tree;
mod exponential;
mod noise;
mod params;
mod sampling;

pub use above_threshold::{AboveThreshold, SvtOutcome};
pub use binary_tree::{BinaryTree, TreeMode, TreeRelease};
pub use exponential::{exponential_mechanism, exponential_mechanism_probabilities, sample_from_log_weights};
pub use noise::NoiseMode;
pub use params::{
    compose_advanced_heterogeneous, compose_advanced_homogeneous, compose_basic, PrivacyLedger,
    PrivacyLoss, PrivacyParams,
};
pub use sampling::{sample_bernoulli, sample_gaussian, sample_geometric, sample_laplace, uniform_open};
