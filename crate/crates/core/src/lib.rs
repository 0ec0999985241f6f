//! # mlpr
//!
//! Machine-learning guided problem reduction for travelling-salesman-type
//! problems (symmetric TSP, asymmetric TSP and the sequential ordering
//! problem).
//!
//! The pipeline:
//!
//! 1. sample random feasible tours ([`sampling`]),
//! 2. describe every edge with four cost-matrix features and two
//!    sample-derived statistical measures ([`features`]),
//! 3. train a cost-sensitive SVM on optimally solved instances ([`svm`]),
//! 4. prune the edges predicted negative on unseen instances, always keeping
//!    the edges of the best sampled tour ([`reduction`]),
//! 5. measure the optimality gap with the built-in exact solvers
//!    ([`solvers`]) and report it ([`harness`]).

pub mod error;
pub mod features;
pub mod harness;
pub mod instance;
pub mod reduction;
pub mod sampling;
pub mod solvers;
pub mod svm;

mod rng;

pub use error::{Error, Result};
pub use features::{EdgeFeatureTable, MeasureAccumulator, NUM_FEATURES};
pub use instance::{EdgeMask, Instance, ProblemKind, Tour};
pub use reduction::{ReductionMethod, ReductionResult};
pub use sampling::SampleBatch;
pub use solvers::SolveReport;
pub use svm::{Kernel, SvmModel, TrainConfig};
