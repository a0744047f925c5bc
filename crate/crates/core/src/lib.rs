//! Robin functions, discrete mean field energies and blow-up diagnostics
//! for the Moser–Trudinger type functional on bounded plane domains.

pub mod blowup;
pub mod cli;
pub mod discretization;
pub mod error;
pub mod functional;
pub mod geometry;
pub mod greens;
pub mod rearrangement;
pub mod report;
pub mod suite;
pub mod testfn;

pub use error::{Error, Result};
pub use geometry::{Domain, DomainKind, Point, Vector};
