pub mod cli;
pub mod epfunc;
pub mod error;
pub mod limits;
pub mod logic;
pub mod ordinal;
pub mod periodic;
pub mod rkorder;
pub mod skewlimit;
pub mod terms;
pub mod ultrafilter;

pub use error::{Error, Result};
