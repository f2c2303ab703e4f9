// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod apps;
pub mod correct;
pub mod deform;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod kinematics;
pub mod scenario;
pub mod trajectory;

pub use error::{Error, Result};
