#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cosmo;
pub mod error;
pub mod fermion;
pub mod io;
pub mod mode;
pub mod ode;
pub mod optimize;
pub mod oracles;
pub mod profiles;
pub mod quadrature;
pub mod search;
pub mod sigma;

pub use error::{Result, VacuaError};
