//! Stochastic simulation of chemical reaction networks with segment reuse.
//!
//! Alongside an exact direct-method SSA ([`ssa`]), the [`segmental`] engine
//! memoizes short SSA segments per abstract state of an exponential
//! population abstraction ([`abstraction`]) and stitches runs together from
//! their summaries. [`analysis`] compares ensembles by transient histograms
//! and earth-mover distance.

pub mod abstract_engine;
pub mod abstraction;
pub mod analysis;
pub mod crn;
pub mod ensemble;
pub mod error;
pub mod model_io;
pub mod rng;
pub mod segmental;
pub mod ssa;
pub mod trajectory;

pub use abstract_engine::{
    abstract_simulate, abstract_transient_histogram, concretize_histogram, concretize_uniform, project, AbstractRun,
    Configuration,
};
pub use abstraction::{boundaries, AbstractState, Abstraction};
pub use analysis::{control_pair_emd, emd, state_at, stats_over_time, transient_histogram, Histogram, TimeSeriesStat};
pub use crn::{apply_reaction, enabled, propensity, CrnModel, Reaction, State};
pub use ensemble::{run_segmental_ensemble, run_ssa_ensemble, EnsembleConfig};
pub use error::{Error, Result};
pub use model_io::{builtin, builtin_models, builtin_source, parse_model, serialize_model};
pub use rng::{rng_from_seed, run_rng, run_seed, SimRng};
pub use segmental::{
    export_memory, import_memory, lookup_or_generate, memory_stats, segmental_simulate, DenselyConcreteRun,
    MemoryStats, Segment, SegmentMemory, SegmentalRunStats, SegmentalSimulator, Source, Summary,
};
pub use ssa::{simulate_until_leaving, ssa_simulate, ssa_step, Run, RunStats, Ssa, Step};
pub use trajectory::{Recording, Seam, Terminal, Trajectory};
