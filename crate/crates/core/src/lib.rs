//! Extreme-value statistics of observables evaluated along chaotic orbits.
//!
//! The crate is `no_std` (it needs `alloc`) and holds every numerical piece:
//! map simulation, the observable catalog, block-maxima GEV fitting, extremal
//! index estimators and closed forms, visit-count laws and generalized
//! dimension spectra. File formats, parallel ensembles and the command line
//! live in the `evtobs` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod dimensions;
pub mod dynsys;
mod error;
pub mod evt;
pub mod extremal;
pub mod observables;
pub mod rng;
pub mod special;
pub mod visits;

pub use error::{Error, Result};
pub use rng::SimRng;
