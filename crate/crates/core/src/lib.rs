//! Kernel geometry toolkit for screening quantum prediction advantage.
//!
//! Statevector embeddings feed fidelity, projected and shadow kernels; the
//! resulting Gram matrices are compared against classical kernels through
//! model complexity, effective dimension and geometric difference.

pub mod data;
pub mod engineer;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod learn;
pub mod linalg;
pub mod pipeline;
pub mod rng;
pub mod shadows;
pub mod statevec;

pub use error::{Error, Result};
pub use linalg::{EigDecomp, SymMatrix, DEFAULT_RCOND};
pub use data::{Dataset, DatasetMeta, DlogTask, EngineeredDataset};
pub use engineer::{BinarizeMode, Engineered, EngineeredLabels};
pub use geometry::{GeometryReport, PairGeometry, ScreenConfig, Verdict};
pub use kernels::{ClassicalKernel, GramMatrix, KernelId};
pub use learn::{Metric, Task, TrainedModel};
pub use shadows::ShadowSet;
pub use statevec::{Embedding, EmbeddingSpec, QnnSpec, StateVector};
