//! Stochastic feedforward networks with integer weights, evaluated both in
//! max-plus form (`ν = F − G`) and directly.

mod dist;
mod io;
mod network;
mod spec;
mod symbolic;

pub use dist::{DistributionSpec, Sampler};
pub use io::{write_runs_csv, write_runs_json, RUN_CSV_HEADER};
pub use network::{
    forward_fg, forward_relu_direct, propagate, propagate_direct, run_network,
    run_network_indexed, sample_init, sample_input, sample_input_tagged, sample_layer,
    sample_network, sample_network_tagged, simulate, simulate_at, simulate_nu,
    simulate_outputs_at, propagate_nu, StreamTags, InitSample, LayerSample, LayerState, NetworkRun, NetworkSample,
};
pub use spec::{
    ExponentSpec, InitSpec, InputSpec, LayerOverride, MatrixSpec, NetworkSpec, RandomInit,
    ThresholdSpec, VectorSpec,
};
pub use symbolic::{run_symbolic, run_symbolic_indexed, symbolic_layers, SymbolicLayer, SymbolicRun};
