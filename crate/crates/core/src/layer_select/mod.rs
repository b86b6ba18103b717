//! Choosing the number of layers by optimal stopping of the reward
//! process `γ^(L) = 𝔤(LOSS(L))·𝔥(L)`.

mod exact;
mod gamma;
mod instances;
mod lsmc;
mod oracle;
mod process;
mod select;
mod shape;
mod stopping;

pub use exact::{
    backward_induction_exact, backward_induction_exact_eps, rule_value, stopped_envelope_means,
    ExactSolution,
};
pub use gamma::{gamma_value, log_over_sqrt, loss_mse, GammaSpec, Penalty, ProcessSpec, Utility};
pub use instances::random_markov_instance;
pub use lsmc::{backward_induction_lsmc, lsmc_with_holdout, LsmcOptions, LsmcRule, MIN_LSMC_PATHS};
pub use oracle::{exhaustive_stopping_oracle, rule_count, OracleResult, DEFAULT_RULE_LIMIT};
pub use process::{FiniteSupportProcess, Node, WeightedPath, MAX_ATOMS};
pub use select::{network_gamma, select_layers, GammaRun, SelectMethod, SelectOptions, Selection};
pub use shape::{check_local_monotonicity, Shape, ShapeReport};
pub use stopping::{
    attains, deterministic_envelope, solve_deterministic, stopping_time, stopping_time_batched,
    Method, StoppingSolution, EPS_EXACT, EPS_LSMC,
};
