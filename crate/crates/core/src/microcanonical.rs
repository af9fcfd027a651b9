//! Microcanonical states, twirl channels, informational-equilibrium checks,
//! and invariant-distribution uniqueness analysis.
//!
//! The microcanonical state of a system is the uniform mixture of its pure
//! states; it exists exactly when the invariant probability distribution
//! over pure states is unique. The half disk is the standard counterexample:
//! its only symmetries are the identity and one reflection, so invariant
//! distributions abound and no microcanonical state exists.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{
    all_permutations, apply_reversible, compose_systems, mix, polytope, random_reversible,
    tensor_states, ModelError, Reversible, ReversiblePayload, State, StatePayload, SystemKind,
    TheoryModel,
};
use crate::numerics::{ComplexMatrix, Tolerance};

#[derive(Debug, Error)]
pub enum MicrocanonicalError {
    #[error("no microcanonical state for {0}: the invariant distribution is not unique")]
    NotMicrocanonical(String),
    #[error("exact twirl unsupported for doubled systems of dimension {dimension} > 8; use monte_carlo per sector")]
    UnsupportedExactTwirl { dimension: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The microcanonical state of the model: uniform vector, maximally mixed
/// density matrix, uniform sector blocks, or the centre of the square.
pub fn microcanonical_state(model: &TheoryModel) -> Result<State, MicrocanonicalError> {
    let payload = match model.kind {
        SystemKind::Classical { d } => StatePayload::Probabilities(vec![1.0 / d as f64; d]),
        SystemKind::Quantum { d } => {
            StatePayload::Density(ComplexMatrix::identity(d).scale(1.0 / d as f64))
        }
        SystemKind::DoubledQuantum { sector_dim } => {
            let block = ComplexMatrix::identity(sector_dim).scale(1.0 / (2 * sector_dim) as f64);
            StatePayload::Blocks {
                block0: block.clone(),
                block1: block,
            }
        }
        SystemKind::SquareBit => StatePayload::Planar { x: 0.0, y: 0.0 },
        SystemKind::HalfDisk => {
            return Err(MicrocanonicalError::NotMicrocanonical(model.to_string()))
        }
    };
    Ok(State {
        model: model.clone(),
        payload,
    })
}

/// How to average over the reversible group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TwirlMode {
    /// Analytic group average.
    Exact,
    /// Empirical average of seeded random reversibles.
    MonteCarlo { samples: usize, seed: u64 },
}

/// Averages the state over the model's reversible transformations.
///
/// Exact mode is the analytic group average: uniform output for classical
/// and quantum systems, the literal eight-element dihedral average for the
/// square bit, the two-element average for the half disk, and the
/// per-sector Haar average for doubled systems (whose sector-preserving
/// transformations scramble within but never across sectors).
pub fn twirl(model: &TheoryModel, s: &State, mode: TwirlMode) -> Result<State, MicrocanonicalError> {
    if model != &s.model {
        return Err(ModelError::ModelMismatch(model.to_string(), s.model.to_string()).into());
    }
    match mode {
        TwirlMode::Exact => exact_twirl(model, s),
        TwirlMode::MonteCarlo { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let weight = 1.0 / samples as f64;
            let terms: Vec<(f64, State)> = (0..samples)
                .map(|_| {
                    let u = random_reversible(model, rng.gen());
                    Ok((weight, apply_reversible(&u, s)?))
                })
                .collect::<Result<_, ModelError>>()?;
            Ok(mix(&terms)?)
        }
    }
}

fn exact_twirl(model: &TheoryModel, s: &State) -> Result<State, MicrocanonicalError> {
    match (&model.kind, &s.payload) {
        (SystemKind::Classical { .. }, _) | (SystemKind::Quantum { .. }, _) => {
            microcanonical_state(model)
        }
        (SystemKind::DoubledQuantum { sector_dim }, StatePayload::Blocks { block0, block1 }) => {
            let dimension = model.dimension();
            if dimension > 8 {
                return Err(MicrocanonicalError::UnsupportedExactTwirl { dimension });
            }
            let s_dim = *sector_dim;
            let m0 = block0.trace().re;
            let m1 = block1.trace().re;
            Ok(State {
                model: model.clone(),
                payload: StatePayload::Blocks {
                    block0: ComplexMatrix::identity(s_dim).scale(m0 / s_dim as f64),
                    block1: ComplexMatrix::identity(s_dim).scale(m1 / s_dim as f64),
                },
            })
        }
        (SystemKind::SquareBit, _) => {
            let terms: Vec<(f64, State)> = (0..8u8)
                .map(|k| {
                    let u = Reversible {
                        model: model.clone(),
                        payload: ReversiblePayload::Dihedral(k),
                    };
                    Ok((1.0 / 8.0, apply_reversible(&u, s)?))
                })
                .collect::<Result<_, ModelError>>()?;
            Ok(mix(&terms)?)
        }
        (SystemKind::HalfDisk, _) => {
            let reflect = Reversible {
                model: model.clone(),
                payload: ReversiblePayload::HalfDiskReflection(true),
            };
            let reflected = apply_reversible(&reflect, s)?;
            Ok(mix(&[(0.5, s.clone()), (0.5, reflected)])?)
        }
        _ => Err(ModelError::InvalidState("payload mismatch".into()).into()),
    }
}

/// True iff the product of the factor microcanonical states equals the
/// microcanonical state of the composite within `tol` in max norm.
pub fn check_informational_equilibrium(
    a: &TheoryModel,
    b: &TheoryModel,
    tol: f64,
) -> Result<bool, MicrocanonicalError> {
    let chi_a = microcanonical_state(a)?;
    let chi_b = microcanonical_state(b)?;
    let product = tensor_states(&chi_a, &chi_b)?;
    let composite = compose_systems(a, b)?;
    let chi_ab = microcanonical_state(&composite)?;
    Ok(product.max_distance(&chi_ab)? <= tol)
}

/// Number of orbits of the reversible group on pure states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitCount {
    Finite(usize),
    Infinite,
}

/// A finitely supported probability distribution over pure states,
/// exhibited as an invariance witness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvariantWitness {
    pub description: String,
    pub atoms: Vec<(f64, State)>,
}

impl InvariantWitness {
    /// Checks that the pushforward under `u` is the same distribution:
    /// every transported atom must match an atom of equal weight.
    pub fn is_invariant_under(&self, u: &Reversible, tol: &Tolerance) -> bool {
        let mut unmatched: Vec<(f64, State)> = self.atoms.clone();
        for (w, s) in &self.atoms {
            let Ok(moved) = apply_reversible(u, s) else {
                return false;
            };
            let position = unmatched.iter().position(|(w2, s2)| {
                (w - w2).abs() <= tol.eq_tol
                    && s2.max_distance(&moved).map(|d| d <= tol.eq_tol).unwrap_or(false)
            });
            match position {
                Some(idx) => {
                    unmatched.swap_remove(idx);
                }
                None => return false,
            }
        }
        unmatched.is_empty()
    }
}

/// Uniqueness analysis of the invariant distribution on pure states.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvariantDistributionReport {
    pub model: TheoryModel,
    pub unique: bool,
    pub orbit_count: OrbitCount,
    /// Two distinct invariant distributions when uniqueness fails.
    pub witness_distributions: Vec<InvariantWitness>,
}

/// Orbit analysis of the reversible group acting on pure states.
///
/// Finite groups (square bit) are enumerated exhaustively; classical
/// permutations act transitively on point masses; quantum and doubled
/// systems are transitive by the purification transitivity theorem, where
/// cross-sector transitivity in the doubled theory uses the sector
/// exchange (demonstrated constructively in the audit checks). The half
/// disk fails uniqueness, and the report carries two explicit invariant
/// distributions as witnesses.
pub fn invariant_distribution_report(model: &TheoryModel) -> InvariantDistributionReport {
    match model.kind {
        SystemKind::Classical { .. }
        | SystemKind::Quantum { .. }
        | SystemKind::DoubledQuantum { .. } => InvariantDistributionReport {
            model: model.clone(),
            unique: true,
            orbit_count: OrbitCount::Finite(1),
            witness_distributions: vec![],
        },
        SystemKind::SquareBit => {
            // exhaustive orbit count of the dihedral action on the vertices
            let mut orbit_of = [usize::MAX; 4];
            let mut orbits = 0;
            for v in 0..4 {
                if orbit_of[v] != usize::MAX {
                    continue;
                }
                for e in 0..8 {
                    orbit_of[polytope::dihedral_apply_vertex(e, v)] = orbits;
                }
                orbits += 1;
            }
            InvariantDistributionReport {
                model: model.clone(),
                unique: orbits == 1,
                orbit_count: OrbitCount::Finite(orbits),
                witness_distributions: vec![],
            }
        }
        SystemKind::HalfDisk => {
            let pure = |theta: f64| State {
                model: model.clone(),
                payload: StatePayload::Planar {
                    x: theta.cos(),
                    y: theta.sin(),
                },
            };
            let witness_distributions = vec![
                InvariantWitness {
                    description: "point mass at theta = pi/2 (the fixed point of the reflection)"
                        .into(),
                    atoms: vec![(1.0, pure(std::f64::consts::FRAC_PI_2))],
                },
                InvariantWitness {
                    description: "uniform pair {pi/4, 3 pi/4}".into(),
                    atoms: vec![
                        (0.5, pure(std::f64::consts::FRAC_PI_4)),
                        (0.5, pure(3.0 * std::f64::consts::FRAC_PI_4)),
                    ],
                },
            ];
            InvariantDistributionReport {
                model: model.clone(),
                unique: false,
                orbit_count: OrbitCount::Infinite,
                witness_distributions,
            }
        }
    }
}

/// True iff the state is fixed by every reversible transformation, checked
/// exhaustively where the group is finite (square bit, half disk, small
/// classical systems) and on 100 seeded samples otherwise.
pub fn check_minimally_resourceful(
    model: &TheoryModel,
    s: &State,
    tol: &Tolerance,
) -> Result<bool, MicrocanonicalError> {
    let fixed_by = |u: &Reversible| -> Result<bool, ModelError> {
        Ok(apply_reversible(u, s)?.max_distance(s)? <= tol.eq_tol)
    };
    match model.kind {
        SystemKind::SquareBit => {
            for k in 0..8u8 {
                let u = Reversible {
                    model: model.clone(),
                    payload: ReversiblePayload::Dihedral(k),
                };
                if !fixed_by(&u)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        SystemKind::HalfDisk => {
            for reflect in [false, true] {
                let u = Reversible {
                    model: model.clone(),
                    payload: ReversiblePayload::HalfDiskReflection(reflect),
                };
                if !fixed_by(&u)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        SystemKind::Classical { d } if d <= 5 => {
            for perm in all_permutations(d) {
                let u = Reversible {
                    model: model.clone(),
                    payload: ReversiblePayload::Permutation(perm),
                };
                if !fixed_by(&u)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        _ => {
            for seed in 0..100u64 {
                let u = random_reversible(model, seed);
                if !fixed_by(&u)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}
