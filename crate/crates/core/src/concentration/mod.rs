//! Analytic tail bounds, Monte Carlo tail estimates and convex-order checks.

mod bounds;
mod convex;
mod martingale;
mod tail;
mod verify;
mod xi;

pub use bounds::{
    hoeffding_bound, mgale_bound, nsg_bound, region_count_bound, verdict, write_reports_csv,
    write_reports_json, BoundKind, BoundReport, Verdict, ANALYTIC_CAP, BOUND_CSV_HEADER,
};
pub use convex::{convex_order_check, ConvexOptions, ConvexOrderReport, OrderVerdict, TestOutcome};
pub use martingale::{
    martingale_bound_reports, martingale_grade_check, random_walks, GradeCheck, MartingaleReport,
    PairCheck,
};
pub use tail::{distance, estimate_tail, euclidean, mean_vector, scalar_tail, TailEstimate, MIN_TAIL_SAMPLES};
pub use verify::{
    default_t_grid, lattice_region_bound, region_count_concentration, sample_region_counts,
    verify_concentration, verify_layer_concentration, ConcentrationOptions,
};
pub use xi::{xi_certificate, xi_certificates, Interval, XiCertificate};
