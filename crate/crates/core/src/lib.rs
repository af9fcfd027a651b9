//! Finite-dimensional theory models and the resource theories of purity.
//!
//! The crate provides:
//!
//! - [`numerics`]: dense complex linear algebra (Hermitian eigendecomposition,
//!   seeded Haar-random unitaries, doubly-stochastic predicates) and the
//!   global [`numerics::Tolerance`] policy;
//! - [`models`]: concrete finite theory models (classical, quantum, doubled
//!   quantum, square bit, half disk) behind one interface of states, effects,
//!   reversible transformations, pairing, composition and diagonalisation;
//! - [`microcanonical`]: microcanonical states, twirl channels and
//!   informational-equilibrium checks;
//! - [`majorisation`]: the majorisation preorder with constructive
//!   doubly-stochastic witnesses, Birkhoff decomposition and Schur-convex
//!   purity monotones;
//! - [`channels`]: channel representations, the unital/doubly-stochastic
//!   correspondence, random-reversible channels from Birkhoff terms, noisy
//!   realizations of rational mixtures, and the Landau-Streater channel;
//! - [`convertibility`]: decision procedures for the RaRe / Noisy / Unital
//!   preorders with witnesses and the doubled-quantum counterexample;
//! - [`duality`]: Schmidt spectra, LOCC convertibility of pure bipartite
//!   states, symmetric purification and local-exchangeability witnesses;
//! - [`audit`]: property checks separating Permutability from Strong
//!   Symmetry on the square bit, half-disk non-uniqueness, and the
//!   noisy-implies-unital inclusion.

pub mod audit;
pub mod channels;
pub mod convertibility;
pub mod duality;
pub mod majorisation;
pub mod microcanonical;
pub mod models;
pub mod numerics;
