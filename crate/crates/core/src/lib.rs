//! One-dimensional laboratory for the parabolic Navier–Stokes–Korteweg
//! two-phase model and its homogenized effective system.

pub mod effective;
pub mod error;
pub mod grid;
pub mod hydro;
pub mod lab;
pub mod measure;
pub mod pnsk;
pub mod pressure;
pub mod tridiag;

pub use error::{Error, Result};
