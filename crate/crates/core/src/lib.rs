pub mod cli;
pub mod clustering;
pub mod error;
pub mod fem;
pub mod history;
pub mod reference;
pub mod sink;
pub mod stepper;
pub mod taylor;
pub mod time_mesh;
pub mod weights;

pub use clustering::{ClusterTree, Cover};
pub use error::{Error, Result};
pub use fem::{FieldVector, SpatialGrid};
pub use history::{Counters, DirectHistory, HistoryEngine, HistorySum};
pub use stepper::{fast_run, slow_run, Mode, RunConfig, RunOptions, RunOutput, RunReport};
pub use taylor::ExpansionParams;
pub use time_mesh::TimeMesh;
pub use weights::{KernelParams, SeriesControl, WeightEngine, WeightTable};
