//! Numerical toolkit for quantum steering: assemblages, their realizations and
//! GNS representations, the steering moment hierarchy, Bell functionals and
//! random-reflection experiments.

pub mod assemblage;
pub mod cli;
pub mod error;
pub mod freeprob;
pub mod freeword;
pub mod functionals;
pub mod gns;
pub mod hierarchy;
pub mod io;
pub mod numkernel;
pub mod realization;

pub use error::{Error, Result};
