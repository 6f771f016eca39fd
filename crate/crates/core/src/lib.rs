//! Model reduction for finite-dimensional Markovian open quantum dynamics.
//!
//! The pipeline: build a Lindblad generator ([`operator`], [`models`]),
//! find its center manifold and spectral projector ([`spectral`]), read off
//! the block structure of the projector's image ([`algebra`]), factor the
//! projector into CPTP reduction/injection maps and certify the reduced
//! generator ([`reduction`]). Perturbed generators are reduced either with
//! the unperturbed maps ([`perturbation`]) or by first-order adiabatic
//! elimination ([`adiabatic`]).

pub mod error;
pub mod linalg;
pub mod operator;
pub mod dynamics;
pub mod spectral;
pub mod algebra;
pub mod reduction;
pub mod perturbation;
pub mod adiabatic;
pub mod models;
pub mod model_io;
pub mod cli;

pub use error::{Error, Result};
