//! Max-plus arithmetic, tropical polynomials and linear-region counting.

mod poly;
mod regions;
mod value;

pub use poly::{
    poly_weighted_combine, TropicalMonomial, TropicalPolynomial, TropicalRational,
    DEFAULT_MONOMIAL_CAP,
};
pub(crate) use poly::enforce_cap;
pub use regions::{count_linear_regions, GridSpec, RegionCount, RegionMethod, REGION_SLACK};
pub use value::{trop_add, trop_div, trop_mul, trop_pow, TropicalValue};
