//! Scalar functions routed through `libm` so results are identical with and
//! without `std`.

pub(crate) use libm::{atanh, exp, expm1, fabs, log, log1p, pow, sqrt};
