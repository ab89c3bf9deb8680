//! Spectra and eigenfunctions of a point scatterer on flat 2D and 3D tori.
//!
//! The pipeline is: enumerate the Laplace spectrum of the torus ([`lattice`]),
//! solve the quantisation condition for the new eigenvalues ([`spectrum`]),
//! build the corresponding Green's-function eigenstates ([`greens`]) and
//! compare spectral statistics against reference distributions ([`stats`]).

pub mod greens;
pub mod lattice;
pub mod spectrum;
pub mod stats;
pub mod util;
pub mod verify;
