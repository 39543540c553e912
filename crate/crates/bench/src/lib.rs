//! Workloads shared by the criterion benches.

use segsim::{builtin, run_segmental_ensemble, Abstraction, CrnModel, EnsembleConfig, Recording, SegmentMemory};

/// Horizons for the reduced TS and RP workloads; the full horizons take hours of SSA.
pub const TS_REDUCED_T_END: f64 = 20.0;
pub const RP_REDUCED_T_END: f64 = 20.0;

/// Built-in `name` with its horizon cut to `t_end`.
pub fn reduced(name: &str, t_end: f64) -> CrnModel {
    builtin(name)
        .unwrap_or_else(|| panic!("unknown built-in model {name}"))
        .with_t_end(t_end)
        .expect("positive horizon")
}

/// A memory filled by `runs` simulations, so timings measure reuse rather than generation.
pub fn warmed_memory(model: &CrnModel, c: f64, k: usize, runs: usize, seed: u64) -> SegmentMemory {
    let memory = SegmentMemory::new(model, Abstraction::new(c).expect("valid c"), k).expect("valid k");
    let config = EnsembleConfig::new(runs, seed, model.t_end, Recording::SeamsOnly);
    run_segmental_ensemble(model, &memory, &config).expect("warm-up runs");
    memory
}
