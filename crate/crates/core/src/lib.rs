//! Allen–Cahn dynamics with maximal monotone potentials and dynamic boundary
//! conditions on a periodic strip.

pub mod compat;
pub mod graphs;
pub mod potentials;
pub mod quadrature;
pub mod properties;
pub mod mesh;
pub mod closed_form;
pub mod config;
pub mod evolution;
pub mod experiments;
