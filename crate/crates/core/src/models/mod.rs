//! Concrete finite theory models behind one interface: classical and
//! quantum systems, Doubled Quantum Theory (quantum theory with a total
//! parity superselection rule), the square bit, and the half disk.
//!
//! States, effects and reversible transformations are tagged with their
//! [`TheoryModel`]; the module provides pairing, composition, marginals,
//! diagonalisation and pure maximal sets for the models that support them.

pub mod dqt;
pub mod polytope;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::majorisation::Spectrum;
use crate::numerics::{
    haar_random_unitary, hermitian_eigendecomposition, random_density_matrix, ComplexMatrix,
    Tolerance,
};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model mismatch: {0} vs {1}")]
    ModelMismatch(String, String),
    #[error("composition unsupported for {0} and {1}")]
    UnsupportedComposition(String, String),
    #[error("state lives on a non-composite model")]
    NotComposite,
    #[error("state is not pure: {0}")]
    NotPure(String),
    #[error("operation unsupported for {0}: {1}")]
    Unsupported(String, String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid reversible: {0}")]
    InvalidReversible(String),
}

/// Which concrete theory a value lives in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemKind {
    Classical { d: usize },
    Quantum { d: usize },
    DoubledQuantum { sector_dim: usize },
    SquareBit,
    HalfDisk,
}

impl std::fmt::Display for SystemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SystemKind::Classical { d } => write!(f, "classical({d})"),
            SystemKind::Quantum { d } => write!(f, "quantum({d})"),
            SystemKind::DoubledQuantum { sector_dim } => write!(f, "doubled_quantum({sector_dim})"),
            SystemKind::SquareBit => write!(f, "square_bit"),
            SystemKind::HalfDisk => write!(f, "half_disk"),
        }
    }
}

/// A system kind plus, for composites, the pair of factors it was built
/// from. Payload compatibility is decided on the kind alone; the factors
/// only drive `marginal`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoryModel {
    pub kind: SystemKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<Box<(TheoryModel, TheoryModel)>>,
}

impl PartialEq for TheoryModel {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl TheoryModel {
    pub fn classical(d: usize) -> Self {
        assert!(d >= 1);
        Self {
            kind: SystemKind::Classical { d },
            factors: None,
        }
    }

    pub fn quantum(d: usize) -> Self {
        assert!(d >= 1);
        Self {
            kind: SystemKind::Quantum { d },
            factors: None,
        }
    }

    pub fn doubled_quantum(sector_dim: usize) -> Self {
        assert!(sector_dim >= 1);
        Self {
            kind: SystemKind::DoubledQuantum { sector_dim },
            factors: None,
        }
    }

    pub fn square_bit() -> Self {
        Self {
            kind: SystemKind::SquareBit,
            factors: None,
        }
    }

    pub fn half_disk() -> Self {
        Self {
            kind: SystemKind::HalfDisk,
            factors: None,
        }
    }

    /// Cardinality of the pure maximal sets.
    pub fn dimension(&self) -> usize {
        match self.kind {
            SystemKind::Classical { d } | SystemKind::Quantum { d } => d,
            SystemKind::DoubledQuantum { sector_dim } => 2 * sector_dim,
            SystemKind::SquareBit | SystemKind::HalfDisk => 2,
        }
    }

    pub fn is_composite(&self) -> bool {
        self.factors.is_some()
    }
}

impl std::fmt::Display for TheoryModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.kind.fmt(f)
    }
}

/// Parallel composition of two systems. Classical and quantum composites
/// multiply dimensions; doubled quantum composites pair the factor sectors
/// by total parity, giving sector dimension `2 * s_a * s_b`.
pub fn compose_systems(a: &TheoryModel, b: &TheoryModel) -> Result<TheoryModel, ModelError> {
    let kind = match (&a.kind, &b.kind) {
        (SystemKind::Classical { d: da }, SystemKind::Classical { d: db }) => {
            SystemKind::Classical { d: da * db }
        }
        (SystemKind::Quantum { d: da }, SystemKind::Quantum { d: db }) => {
            SystemKind::Quantum { d: da * db }
        }
        (
            SystemKind::DoubledQuantum { sector_dim: sa },
            SystemKind::DoubledQuantum { sector_dim: sb },
        ) => SystemKind::DoubledQuantum {
            sector_dim: 2 * sa * sb,
        },
        _ => {
            return Err(ModelError::UnsupportedComposition(
                a.kind.to_string(),
                b.kind.to_string(),
            ))
        }
    };
    Ok(TheoryModel {
        kind,
        factors: Some(Box::new((a.clone(), b.clone()))),
    })
}

/// Normalized state of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub model: TheoryModel,
    pub payload: StatePayload,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatePayload {
    /// Probability vector.
    Probabilities(Vec<f64>),
    /// Density matrix.
    Density(ComplexMatrix),
    /// Sector blocks `(b0, b1)` with `tr b0 + tr b1 = 1`.
    Blocks {
        block0: ComplexMatrix,
        block1: ComplexMatrix,
    },
    /// Planar coordinates `(x, y)` of the affine point `(x, y, 1)`.
    Planar { x: f64, y: f64 },
}

impl State {
    pub fn new(model: TheoryModel, payload: StatePayload, tol: &Tolerance) -> Result<Self, ModelError> {
        let state = Self { model, payload };
        state.validate(tol)?;
        Ok(state)
    }

    /// Checks shape, normalization, positivity, and region constraints.
    pub fn validate(&self, tol: &Tolerance) -> Result<(), ModelError> {
        // Validation tolerances are slightly looser than eq_tol so that
        // states assembled from long float pipelines still pass.
        let slack = 100.0 * tol.eq_tol;
        match (&self.model.kind, &self.payload) {
            (SystemKind::Classical { d }, StatePayload::Probabilities(p)) => {
                if p.len() != *d {
                    return Err(ModelError::InvalidState(format!(
                        "expected {d} probabilities, got {}",
                        p.len()
                    )));
                }
                if p.iter().any(|x| !x.is_finite() || *x < -tol.psd_tol) {
                    return Err(ModelError::InvalidState("negative probability".into()));
                }
                let sum: f64 = p.iter().sum();
                if (sum - 1.0).abs() > slack {
                    return Err(ModelError::InvalidState(format!("sum {sum} != 1")));
                }
            }
            (SystemKind::Quantum { d }, StatePayload::Density(rho)) => {
                if rho.rows() != *d || rho.cols() != *d {
                    return Err(ModelError::InvalidState("density matrix shape".into()));
                }
                check_psd_trace(rho, 1.0, tol)?;
            }
            (SystemKind::DoubledQuantum { sector_dim }, StatePayload::Blocks { block0, block1 }) => {
                if block0.rows() != *sector_dim || block1.rows() != *sector_dim {
                    return Err(ModelError::InvalidState("sector block shape".into()));
                }
                let mass = block0.trace().re + block1.trace().re;
                if (mass - 1.0).abs() > slack {
                    return Err(ModelError::InvalidState(format!("total mass {mass} != 1")));
                }
                check_psd(block0, tol)?;
                check_psd(block1, tol)?;
            }
            (SystemKind::SquareBit, StatePayload::Planar { x, y }) => {
                if !polytope::in_square(*x, *y, slack) {
                    return Err(ModelError::InvalidState(format!("({x}, {y}) outside square")));
                }
            }
            (SystemKind::HalfDisk, StatePayload::Planar { x, y }) => {
                if !polytope::in_half_disk(*x, *y, slack) {
                    return Err(ModelError::InvalidState(format!(
                        "({x}, {y}) outside half disk"
                    )));
                }
            }
            _ => {
                return Err(ModelError::InvalidState(format!(
                    "payload does not match model {}",
                    self.model
                )))
            }
        }
        Ok(())
    }

    /// Entrywise max-norm distance between payloads of the same shape.
    pub fn max_distance(&self, other: &State) -> Result<f64, ModelError> {
        same_model(&self.model, &other.model)?;
        Ok(match (&self.payload, &other.payload) {
            (StatePayload::Probabilities(p), StatePayload::Probabilities(q)) => p
                .iter()
                .zip(q)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
            (StatePayload::Density(a), StatePayload::Density(b)) => a.max_distance(b),
            (
                StatePayload::Blocks { block0, block1 },
                StatePayload::Blocks {
                    block0: c0,
                    block1: c1,
                },
            ) => block0.max_distance(c0).max(block1.max_distance(c1)),
            (StatePayload::Planar { x, y }, StatePayload::Planar { x: a, y: b }) => {
                (x - a).abs().max((y - b).abs())
            }
            _ => unreachable!("same model implies same payload shape"),
        })
    }
}

/// Effect of a model, in the dual representation of the state payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Effect {
    pub model: TheoryModel,
    pub payload: EffectPayload,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectPayload {
    Row(Vec<f64>),
    Operator(ComplexMatrix),
    Blocks {
        e0: ComplexMatrix,
        e1: ComplexMatrix,
    },
    /// Affine functional `a x + b y + c` on planar states.
    Affine { a: f64, b: f64, c: f64 },
}

/// Reversible transformation of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reversible {
    pub model: TheoryModel,
    pub payload: ReversiblePayload,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReversiblePayload {
    /// Coordinate permutation: entry `i` moves to `perm[i]`.
    Permutation(Vec<usize>),
    Unitary(ComplexMatrix),
    /// Sector-preserving pair `U = U0 + U1` acting blockwise.
    SectorUnitaries { u0: ComplexMatrix, u1: ComplexMatrix },
    /// Index into the eight dihedral elements of the square.
    Dihedral(u8),
    /// Half-disk symmetry: identity or the reflection through the axis.
    HalfDiskReflection(bool),
}

impl Reversible {
    pub fn identity(model: &TheoryModel) -> Self {
        let payload = match model.kind {
            SystemKind::Classical { d } => ReversiblePayload::Permutation((0..d).collect()),
            SystemKind::Quantum { d } => ReversiblePayload::Unitary(ComplexMatrix::identity(d)),
            SystemKind::DoubledQuantum { sector_dim } => ReversiblePayload::SectorUnitaries {
                u0: ComplexMatrix::identity(sector_dim),
                u1: ComplexMatrix::identity(sector_dim),
            },
            SystemKind::SquareBit => ReversiblePayload::Dihedral(0),
            SystemKind::HalfDisk => ReversiblePayload::HalfDiskReflection(false),
        };
        Self {
            model: model.clone(),
            payload,
        }
    }

    pub fn inverse(&self) -> Self {
        let payload = match &self.payload {
            ReversiblePayload::Permutation(p) => {
                let mut inv = vec![0; p.len()];
                for (i, &j) in p.iter().enumerate() {
                    inv[j] = i;
                }
                ReversiblePayload::Permutation(inv)
            }
            ReversiblePayload::Unitary(u) => ReversiblePayload::Unitary(u.adjoint()),
            ReversiblePayload::SectorUnitaries { u0, u1 } => ReversiblePayload::SectorUnitaries {
                u0: u0.adjoint(),
                u1: u1.adjoint(),
            },
            ReversiblePayload::Dihedral(k) => {
                ReversiblePayload::Dihedral(polytope::DIHEDRAL_INVERSE[*k as usize] as u8)
            }
            ReversiblePayload::HalfDiskReflection(r) => ReversiblePayload::HalfDiskReflection(*r),
        };
        Self {
            model: self.model.clone(),
            payload,
        }
    }
}

fn same_model(a: &TheoryModel, b: &TheoryModel) -> Result<(), ModelError> {
    if a.kind == b.kind {
        Ok(())
    } else {
        Err(ModelError::ModelMismatch(a.to_string(), b.to_string()))
    }
}

/// Probability of an effect on a state, clamped to `[0, 1]`.
pub fn pair(effect: &Effect, state: &State) -> Result<f64, ModelError> {
    same_model(&effect.model, &state.model)?;
    let raw = match (&effect.payload, &state.payload) {
        (EffectPayload::Row(e), StatePayload::Probabilities(p)) => {
            e.iter().zip(p).map(|(a, b)| a * b).sum()
        }
        (EffectPayload::Operator(e), StatePayload::Density(rho)) => (&e.0 * &rho.0).trace().re,
        (
            EffectPayload::Blocks { e0, e1 },
            StatePayload::Blocks { block0, block1 },
        ) => (&e0.0 * &block0.0).trace().re + (&e1.0 * &block1.0).trace().re,
        (EffectPayload::Affine { a, b, c }, StatePayload::Planar { x, y }) => a * x + b * y + c,
        _ => {
            return Err(ModelError::InvalidState(
                "effect/state payload shapes differ".into(),
            ))
        }
    };
    Ok(raw.clamp(0.0, 1.0))
}

/// The unique deterministic effect of the model (unit on all states).
pub fn deterministic_effect(model: &TheoryModel) -> Effect {
    let payload = match model.kind {
        SystemKind::Classical { d } => EffectPayload::Row(vec![1.0; d]),
        SystemKind::Quantum { d } => EffectPayload::Operator(ComplexMatrix::identity(d)),
        SystemKind::DoubledQuantum { sector_dim } => EffectPayload::Blocks {
            e0: ComplexMatrix::identity(sector_dim),
            e1: ComplexMatrix::identity(sector_dim),
        },
        SystemKind::SquareBit | SystemKind::HalfDisk => EffectPayload::Affine {
            a: 0.0,
            b: 0.0,
            c: 1.0,
        },
    };
    Effect {
        model: model.clone(),
        payload,
    }
}

/// Product state on the composite system.
pub fn tensor_states(s: &State, t: &State) -> Result<State, ModelError> {
    let model = compose_systems(&s.model, &t.model)?;
    let payload = match (&s.payload, &t.payload) {
        (StatePayload::Probabilities(p), StatePayload::Probabilities(q)) => {
            let mut out = Vec::with_capacity(p.len() * q.len());
            for a in p {
                for b in q {
                    out.push(a * b);
                }
            }
            StatePayload::Probabilities(out)
        }
        (StatePayload::Density(a), StatePayload::Density(b)) => {
            StatePayload::Density(a.kronecker(b))
        }
        (
            StatePayload::Blocks { block0: a0, block1: a1 },
            StatePayload::Blocks { block0: b0, block1: b1 },
        ) => {
            let (block0, block1) = dqt::tensor_blocks(a0, a1, b0, b1);
            StatePayload::Blocks { block0, block1 }
        }
        _ => unreachable!("compose_systems only accepts matching kinds"),
    };
    Ok(State { model, payload })
}

/// Product effect on the composite system; pairs factorize against
/// [`tensor_states`].
pub fn tensor_effects(e: &Effect, f: &Effect) -> Result<Effect, ModelError> {
    let model = compose_systems(&e.model, &f.model)?;
    let payload = match (&e.payload, &f.payload) {
        (EffectPayload::Row(a), EffectPayload::Row(b)) => {
            let mut out = Vec::with_capacity(a.len() * b.len());
            for x in a {
                for y in b {
                    out.push(x * y);
                }
            }
            EffectPayload::Row(out)
        }
        (EffectPayload::Operator(a), EffectPayload::Operator(b)) => {
            EffectPayload::Operator(a.kronecker(b))
        }
        (
            EffectPayload::Blocks { e0: a0, e1: a1 },
            EffectPayload::Blocks { e0: b0, e1: b1 },
        ) => {
            let (e0, e1) = dqt::tensor_blocks(a0, a1, b0, b1);
            EffectPayload::Blocks { e0, e1 }
        }
        _ => unreachable!("compose_systems only accepts matching kinds"),
    };
    Ok(Effect { model, payload })
}

/// Applies a reversible transformation to a state of the same model.
pub fn apply_reversible(u: &Reversible, s: &State) -> Result<State, ModelError> {
    same_model(&u.model, &s.model)?;
    let payload = match (&u.payload, &s.payload) {
        (ReversiblePayload::Permutation(perm), StatePayload::Probabilities(p)) => {
            let mut out = vec![0.0; p.len()];
            for (i, &target) in perm.iter().enumerate() {
                out[target] = p[i];
            }
            StatePayload::Probabilities(out)
        }
        (ReversiblePayload::Unitary(m), StatePayload::Density(rho)) => {
            StatePayload::Density(ComplexMatrix(&m.0 * &rho.0 * m.0.adjoint()))
        }
        (
            ReversiblePayload::SectorUnitaries { u0, u1 },
            StatePayload::Blocks { block0, block1 },
        ) => StatePayload::Blocks {
            block0: ComplexMatrix(&u0.0 * &block0.0 * u0.0.adjoint()),
            block1: ComplexMatrix(&u1.0 * &block1.0 * u1.0.adjoint()),
        },
        (ReversiblePayload::Dihedral(k), StatePayload::Planar { x, y }) => {
            let (nx, ny) = polytope::dihedral_apply(*k as usize, *x, *y);
            StatePayload::Planar { x: nx, y: ny }
        }
        (ReversiblePayload::HalfDiskReflection(reflect), StatePayload::Planar { x, y }) => {
            if *reflect {
                let (nx, ny) = polytope::half_disk_reflect(*x, *y);
                StatePayload::Planar { x: nx, y: ny }
            } else {
                StatePayload::Planar { x: *x, y: *y }
            }
        }
        _ => {
            return Err(ModelError::InvalidReversible(
                "reversible/state payload shapes differ".into(),
            ))
        }
    };
    Ok(State {
        model: s.model.clone(),
        payload,
    })
}

/// A maximal set of perfectly distinguishable pure states together with
/// the dagger effects that distinguish them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PureMaximalSet {
    pub model: TheoryModel,
    pub states: Vec<State>,
    pub dagger_effects: Vec<Effect>,
    pub basis: BasisData,
}

/// Model-specific coordinates of the set elements, used when assembling
/// reversible transformations between bases.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisData {
    /// Point-mass positions.
    Positions(Vec<usize>),
    /// Kets as matrix columns.
    Kets(ComplexMatrix),
    /// Per-element sector tag and in-sector ket (as a column matrix).
    SectorKets {
        sectors: Vec<u8>,
        kets: Vec<ComplexMatrix>,
    },
    /// Vertex indices into the square.
    Vertices(Vec<usize>),
}

impl PureMaximalSet {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Pure maximal set of the model, seeded where there is a continuum of
/// choices. Classical sets are the point masses; quantum and doubled
/// quantum sets are seeded random orthonormal bases (per sector for the
/// doubled theory); the square bit returns a seed-selected vertex pair.
pub fn pure_maximal_set(model: &TheoryModel, choice_seed: u64) -> Result<PureMaximalSet, ModelError> {
    match model.kind {
        SystemKind::Classical { d } => {
            let positions: Vec<usize> = (0..d).collect();
            let states = positions
                .iter()
                .map(|&i| {
                    let mut p = vec![0.0; d];
                    p[i] = 1.0;
                    State {
                        model: model.clone(),
                        payload: StatePayload::Probabilities(p),
                    }
                })
                .collect();
            let dagger_effects = positions
                .iter()
                .map(|&i| {
                    let mut e = vec![0.0; d];
                    e[i] = 1.0;
                    Effect {
                        model: model.clone(),
                        payload: EffectPayload::Row(e),
                    }
                })
                .collect();
            Ok(PureMaximalSet {
                model: model.clone(),
                states,
                dagger_effects,
                basis: BasisData::Positions(positions),
            })
        }
        SystemKind::Quantum { d } => {
            let kets = haar_random_unitary(d, choice_seed);
            Ok(quantum_set_from_kets(model, kets))
        }
        SystemKind::DoubledQuantum { sector_dim } => {
            let kets0 = haar_random_unitary(sector_dim, choice_seed.wrapping_mul(2));
            let kets1 = haar_random_unitary(sector_dim, choice_seed.wrapping_mul(2).wrapping_add(1));
            let mut sectors = Vec::with_capacity(2 * sector_dim);
            let mut kets = Vec::with_capacity(2 * sector_dim);
            for source in [&kets0, &kets1] {
                for j in 0..sector_dim {
                    sectors.push(if std::ptr::eq(source, &kets0) { 0 } else { 1 });
                    kets.push(source.column(j));
                }
            }
            Ok(dqt_set_from_kets(model, sectors, kets))
        }
        SystemKind::SquareBit => {
            const PAIRS: [(usize, usize); 6] = [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (1, 3)];
            let (i, j) = PAIRS[(choice_seed % 6) as usize];
            Ok(square_bit_set(model, i, j))
        }
        SystemKind::HalfDisk => Err(ModelError::Unsupported(
            model.to_string(),
            "half-disk pure states form a continuum with no maximal structure here".into(),
        )),
    }
}

/// Assembles the quantum maximal set whose elements are the columns of `kets`.
pub fn quantum_set_from_kets(model: &TheoryModel, kets: ComplexMatrix) -> PureMaximalSet {
    let d = kets.rows();
    let mut states = Vec::with_capacity(d);
    let mut dagger_effects = Vec::with_capacity(d);
    for j in 0..d {
        let ket = kets.0.column(j);
        let projector = ComplexMatrix(ket * ket.adjoint());
        states.push(State {
            model: model.clone(),
            payload: StatePayload::Density(projector.clone()),
        });
        dagger_effects.push(Effect {
            model: model.clone(),
            payload: EffectPayload::Operator(projector),
        });
    }
    PureMaximalSet {
        model: model.clone(),
        states,
        dagger_effects,
        basis: BasisData::Kets(kets),
    }
}

/// Assembles the doubled-quantum maximal set from per-element sector tags
/// and in-sector kets.
pub fn dqt_set_from_kets(
    model: &TheoryModel,
    sectors: Vec<u8>,
    kets: Vec<ComplexMatrix>,
) -> PureMaximalSet {
    let s = match model.kind {
        SystemKind::DoubledQuantum { sector_dim } => sector_dim,
        _ => unreachable!(),
    };
    let mut states = Vec::with_capacity(kets.len());
    let mut dagger_effects = Vec::with_capacity(kets.len());
    for (sector, ket) in sectors.iter().zip(&kets) {
        let projector = ComplexMatrix(&ket.0 * ket.0.adjoint());
        let zero = ComplexMatrix::zeros(s, s);
        let (block0, block1) = if *sector == 0 {
            (projector.clone(), zero.clone())
        } else {
            (zero.clone(), projector.clone())
        };
        states.push(State {
            model: model.clone(),
            payload: StatePayload::Blocks {
                block0: block0.clone(),
                block1: block1.clone(),
            },
        });
        dagger_effects.push(Effect {
            model: model.clone(),
            payload: EffectPayload::Blocks {
                e0: block0,
                e1: block1,
            },
        });
    }
    PureMaximalSet {
        model: model.clone(),
        states,
        dagger_effects,
        basis: BasisData::SectorKets { sectors, kets },
    }
}

fn square_bit_set(model: &TheoryModel, i: usize, j: usize) -> PureMaximalSet {
    let make_state = |v: usize| {
        let (x, y) = polytope::SQUARE_VERTICES[v];
        State {
            model: model.clone(),
            payload: StatePayload::Planar { x, y },
        }
    };
    let make_effect = |coeffs: [f64; 3]| Effect {
        model: model.clone(),
        payload: EffectPayload::Affine {
            a: coeffs[0],
            b: coeffs[1],
            c: coeffs[2],
        },
    };
    PureMaximalSet {
        model: model.clone(),
        states: vec![make_state(i), make_state(j)],
        dagger_effects: vec![
            make_effect(polytope::separating_effect(i, j)),
            make_effect(polytope::separating_effect(j, i)),
        ],
        basis: BasisData::Vertices(vec![i, j]),
    }
}

/// Certifying pure effect of a pure state. For the square bit and the half
/// disk the certifying effect is not unique; a canonical one is returned.
pub fn dagger(alpha: &State, tol: &Tolerance) -> Result<Effect, ModelError> {
    let model = alpha.model.clone();
    let payload = match (&model.kind, &alpha.payload) {
        (SystemKind::Classical { .. }, StatePayload::Probabilities(p)) => {
            let i = p
                .iter()
                .position(|&x| (x - 1.0).abs() <= tol.eq_tol)
                .ok_or_else(|| ModelError::NotPure("no unit coordinate".into()))?;
            let mut e = vec![0.0; p.len()];
            e[i] = 1.0;
            EffectPayload::Row(e)
        }
        (SystemKind::Quantum { .. }, StatePayload::Density(rho)) => {
            ensure_rank_one(rho, tol)?;
            EffectPayload::Operator(rho.clone())
        }
        (SystemKind::DoubledQuantum { sector_dim }, StatePayload::Blocks { block0, block1 }) => {
            let (m0, m1) = (block0.trace().re, block1.trace().re);
            let zero = ComplexMatrix::zeros(*sector_dim, *sector_dim);
            if m1 <= tol.psd_tol.max(1e-9) {
                ensure_rank_one(block0, tol)?;
                EffectPayload::Blocks {
                    e0: block0.clone(),
                    e1: zero,
                }
            } else if m0 <= tol.psd_tol.max(1e-9) {
                ensure_rank_one(block1, tol)?;
                EffectPayload::Blocks {
                    e0: zero,
                    e1: block1.clone(),
                }
            } else {
                return Err(ModelError::NotPure("mass in both sectors".into()));
            }
        }
        (SystemKind::SquareBit, StatePayload::Planar { x, y }) => {
            let v = polytope::vertex_index(*x, *y)
                .ok_or_else(|| ModelError::NotPure("not a vertex".into()))?;
            let [a, b, c] = polytope::vertex_dagger(v);
            EffectPayload::Affine { a, b, c }
        }
        (SystemKind::HalfDisk, StatePayload::Planar { x, y }) => {
            if !polytope::on_half_circle(*x, *y, tol.eq_tol.max(1e-9)) {
                return Err(ModelError::NotPure("not on the half circle".into()));
            }
            EffectPayload::Affine {
                a: x / 2.0,
                b: y / 2.0,
                c: 0.5,
            }
        }
        _ => return Err(ModelError::InvalidState("payload mismatch".into())),
    };
    Ok(Effect { model, payload })
}

fn ensure_rank_one(m: &ComplexMatrix, tol: &Tolerance) -> Result<(), ModelError> {
    let (values, _) = hermitian_eigendecomposition(m, tol)
        .map_err(|e| ModelError::InvalidState(e.to_string()))?;
    let second = values.get(1).copied().unwrap_or(0.0);
    if second.abs() > tol.psd_tol.max(1e-9) {
        return Err(ModelError::NotPure(format!(
            "second eigenvalue {second:.3e} beyond psd_tol"
        )));
    }
    Ok(())
}

/// A diagonalisation `s = sum_i p_i alpha_i`.
///
/// For classical, quantum and doubled quantum states `eigenbasis` carries a
/// full pure maximal set aligned with the (zero-padded) spectrum, and the
/// decomposition is unique. For the square bit and the half disk the
/// decomposition is a flagged canonical choice (`non_unique = true`),
/// `eigenbasis` is absent, and the components need not be distinguishable.
#[derive(Debug, Clone)]
pub struct Diagonalisation {
    pub spectrum: Spectrum,
    pub eigenstates: Vec<State>,
    pub eigenbasis: Option<PureMaximalSet>,
    pub non_unique: bool,
}

/// Decomposes a state as a random mixture of pure states.
pub fn diagonalise(s: &State, tol: &Tolerance) -> Result<Diagonalisation, ModelError> {
    match (&s.model.kind, &s.payload) {
        (SystemKind::Classical { d }, StatePayload::Probabilities(p)) => {
            let mut order: Vec<usize> = (0..*d).collect();
            order.sort_by(|&a, &b| p[b].partial_cmp(&p[a]).unwrap().then(a.cmp(&b)));
            let sorted: Vec<f64> = order.iter().map(|&i| p[i]).collect();
            let spectrum = Spectrum::new(&sorted, tol)
                .map_err(|e| ModelError::InvalidState(e.to_string()))?;
            let set = classical_set_with_positions(&s.model, &order);
            Ok(Diagonalisation {
                spectrum,
                eigenstates: set.states.clone(),
                eigenbasis: Some(set),
                non_unique: false,
            })
        }
        (SystemKind::Quantum { .. }, StatePayload::Density(rho)) => {
            let (values, vectors) = hermitian_eigendecomposition(rho, tol)
                .map_err(|e| ModelError::InvalidState(e.to_string()))?;
            let spectrum = Spectrum::new(&values, tol)
                .map_err(|e| ModelError::InvalidState(e.to_string()))?;
            let set = quantum_set_from_kets(&s.model, vectors);
            Ok(Diagonalisation {
                spectrum,
                eigenstates: set.states.clone(),
                eigenbasis: Some(set),
                non_unique: false,
            })
        }
        (SystemKind::DoubledQuantum { .. }, StatePayload::Blocks { block0, block1 }) => {
            let (v0, vec0) = hermitian_eigendecomposition(block0, tol)
                .map_err(|e| ModelError::InvalidState(e.to_string()))?;
            let (v1, vec1) = hermitian_eigendecomposition(block1, tol)
                .map_err(|e| ModelError::InvalidState(e.to_string()))?;
            // merge, sorting by eigenvalue descending, then sector, then index
            let mut entries: Vec<(f64, u8, usize)> = Vec::new();
            for (i, &v) in v0.iter().enumerate() {
                entries.push((v, 0, i));
            }
            for (i, &v) in v1.iter().enumerate() {
                entries.push((v, 1, i));
            }
            entries.sort_by(|a, b| {
                b.0.partial_cmp(&a.0)
                    .unwrap()
                    .then(a.1.cmp(&b.1))
                    .then(a.2.cmp(&b.2))
            });
            let values: Vec<f64> = entries.iter().map(|e| e.0).collect();
            let spectrum = Spectrum::new(&values, tol)
                .map_err(|e| ModelError::InvalidState(e.to_string()))?;
            let sectors: Vec<u8> = entries.iter().map(|e| e.1).collect();
            let kets: Vec<ComplexMatrix> = entries
                .iter()
                .map(|&(_, sector, idx)| {
                    let source = if sector == 0 { &vec0 } else { &vec1 };
                    source.column(idx)
                })
                .collect();
            let set = dqt_set_from_kets(&s.model, sectors, kets);
            Ok(Diagonalisation {
                spectrum,
                eigenstates: set.states.clone(),
                eigenbasis: Some(set),
                non_unique: false,
            })
        }
        (SystemKind::SquareBit, StatePayload::Planar { x, y }) => {
            if let Some(v) = polytope::vertex_index(*x, *y) {
                let (vx, vy) = polytope::SQUARE_VERTICES[v];
                return Ok(Diagonalisation {
                    spectrum: Spectrum::new(&[1.0], tol).unwrap(),
                    eigenstates: vec![State {
                        model: s.model.clone(),
                        payload: StatePayload::Planar { x: vx, y: vy },
                    }],
                    eigenbasis: None,
                    non_unique: false,
                });
            }
            let mut terms = polytope::square_decomposition(*x, *y);
            terms.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
            let weights: Vec<f64> = terms.iter().map(|t| t.0).collect();
            let spectrum = Spectrum::new(&weights, tol)
                .map_err(|e| ModelError::InvalidState(e.to_string()))?;
            let eigenstates = terms
                .iter()
                .map(|&(_, v)| {
                    let (vx, vy) = polytope::SQUARE_VERTICES[v];
                    State {
                        model: s.model.clone(),
                        payload: StatePayload::Planar { x: vx, y: vy },
                    }
                })
                .collect();
            Ok(Diagonalisation {
                spectrum,
                eigenstates,
                eigenbasis: None,
                non_unique: true,
            })
        }
        (SystemKind::HalfDisk, StatePayload::Planar { x, y }) => {
            if polytope::on_half_circle(*x, *y, tol.eq_tol) {
                return Ok(Diagonalisation {
                    spectrum: Spectrum::new(&[1.0], tol).unwrap(),
                    eigenstates: vec![s.clone()],
                    eigenbasis: None,
                    non_unique: false,
                });
            }
            let mut terms = polytope::half_disk_decomposition(*x, *y);
            terms.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
            let weights: Vec<f64> = terms.iter().map(|t| t.0).collect();
            let spectrum = Spectrum::new(&weights, tol)
                .map_err(|e| ModelError::InvalidState(e.to_string()))?;
            let eigenstates = terms
                .iter()
                .map(|&(_, (px, py))| State {
                    model: s.model.clone(),
                    payload: StatePayload::Planar { x: px, y: py },
                })
                .collect();
            Ok(Diagonalisation {
                spectrum,
                eigenstates,
                eigenbasis: None,
                non_unique: true,
            })
        }
        _ => Err(ModelError::InvalidState("payload mismatch".into())),
    }
}

fn classical_set_with_positions(model: &TheoryModel, positions: &[usize]) -> PureMaximalSet {
    let d = model.dimension();
    let states = positions
        .iter()
        .map(|&i| {
            let mut p = vec![0.0; d];
            p[i] = 1.0;
            State {
                model: model.clone(),
                payload: StatePayload::Probabilities(p),
            }
        })
        .collect();
    let dagger_effects = positions
        .iter()
        .map(|&i| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            Effect {
                model: model.clone(),
                payload: EffectPayload::Row(e),
            }
        })
        .collect();
    PureMaximalSet {
        model: model.clone(),
        states,
        dagger_effects,
        basis: BasisData::Positions(positions.to_vec()),
    }
}

/// Which factor of a composite state to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Factor {
    Left,
    Right,
}

/// Marginal of a state on a composite model.
pub fn marginal(s: &State, keep: Factor) -> Result<State, ModelError> {
    let Some(factors) = &s.model.factors else {
        return Err(ModelError::NotComposite);
    };
    let (left, right) = factors.as_ref();
    let kept_model = match keep {
        Factor::Left => left.clone(),
        Factor::Right => right.clone(),
    };
    let payload = match (&s.payload, &left.kind, &right.kind) {
        (
            StatePayload::Probabilities(p),
            SystemKind::Classical { d: da },
            SystemKind::Classical { d: db },
        ) => {
            let (da, db) = (*da, *db);
            let mut out = match keep {
                Factor::Left => vec![0.0; da],
                Factor::Right => vec![0.0; db],
            };
            for ia in 0..da {
                for ib in 0..db {
                    match keep {
                        Factor::Left => out[ia] += p[ia * db + ib],
                        Factor::Right => out[ib] += p[ia * db + ib],
                    }
                }
            }
            StatePayload::Probabilities(out)
        }
        (
            StatePayload::Density(rho),
            SystemKind::Quantum { d: da },
            SystemKind::Quantum { d: db },
        ) => StatePayload::Density(match keep {
            Factor::Left => dqt::partial_trace_right(rho, *da, *db),
            Factor::Right => dqt::partial_trace_left(rho, *da, *db),
        }),
        (
            StatePayload::Blocks { block0, block1 },
            SystemKind::DoubledQuantum { sector_dim: sa },
            SystemKind::DoubledQuantum { sector_dim: sb },
        ) => {
            let (b0, b1) = match keep {
                Factor::Left => dqt::marginal_left(block0, block1, *sa, *sb),
                Factor::Right => dqt::marginal_right(block0, block1, *sa, *sb),
            };
            StatePayload::Blocks {
                block0: b0,
                block1: b1,
            }
        }
        _ => return Err(ModelError::InvalidState("payload mismatch".into())),
    };
    Ok(State {
        model: kept_model,
        payload,
    })
}

/// Convex combination of states of one model. Weights must sum to 1 for
/// the result to be normalized; no renormalization is applied.
pub fn mix(terms: &[(f64, State)]) -> Result<State, ModelError> {
    let first = &terms.first().expect("non-empty mixture").1;
    for (_, s) in terms.iter().skip(1) {
        same_model(&first.model, &s.model)?;
    }
    let payload = match &first.payload {
        StatePayload::Probabilities(p0) => {
            let mut acc = vec![0.0; p0.len()];
            for (w, s) in terms {
                let StatePayload::Probabilities(p) = &s.payload else {
                    unreachable!()
                };
                for (a, b) in acc.iter_mut().zip(p) {
                    *a += w * b;
                }
            }
            StatePayload::Probabilities(acc)
        }
        StatePayload::Density(d0) => {
            let mut acc = ComplexMatrix::zeros(d0.rows(), d0.cols());
            for (w, s) in terms {
                let StatePayload::Density(d) = &s.payload else {
                    unreachable!()
                };
                acc = &acc + &d.scale(*w);
            }
            StatePayload::Density(acc)
        }
        StatePayload::Blocks { block0, .. } => {
            let n = block0.rows();
            let mut acc0 = ComplexMatrix::zeros(n, n);
            let mut acc1 = ComplexMatrix::zeros(n, n);
            for (w, s) in terms {
                let StatePayload::Blocks { block0, block1 } = &s.payload else {
                    unreachable!()
                };
                acc0 = &acc0 + &block0.scale(*w);
                acc1 = &acc1 + &block1.scale(*w);
            }
            StatePayload::Blocks {
                block0: acc0,
                block1: acc1,
            }
        }
        StatePayload::Planar { .. } => {
            let (mut ax, mut ay) = (0.0, 0.0);
            for (w, s) in terms {
                let StatePayload::Planar { x, y } = &s.payload else {
                    unreachable!()
                };
                ax += w * x;
                ay += w * y;
            }
            StatePayload::Planar { x: ax, y: ay }
        }
    };
    Ok(State {
        model: first.model.clone(),
        payload,
    })
}

/// Seeded random state of the model.
pub fn random_state(model: &TheoryModel, seed: u64) -> State {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let payload = match model.kind {
        SystemKind::Classical { d } => {
            let mut p: Vec<f64> = (0..d).map(|_| -rng.gen::<f64>().max(1e-16).ln()).collect();
            let sum: f64 = p.iter().sum();
            for x in &mut p {
                *x /= sum;
            }
            StatePayload::Probabilities(p)
        }
        SystemKind::Quantum { d } => StatePayload::Density(random_density_matrix(d, rng.gen())),
        SystemKind::DoubledQuantum { sector_dim } => {
            let mass0: f64 = rng.gen();
            let b0 = random_density_matrix(sector_dim, rng.gen());
            let b1 = random_density_matrix(sector_dim, rng.gen());
            StatePayload::Blocks {
                block0: b0.scale(mass0),
                block1: b1.scale(1.0 - mass0),
            }
        }
        SystemKind::SquareBit => StatePayload::Planar {
            x: rng.gen::<f64>() * 2.0 - 1.0,
            y: rng.gen::<f64>() * 2.0 - 1.0,
        },
        SystemKind::HalfDisk => loop {
            let x = rng.gen::<f64>() * 2.0 - 1.0;
            let y = rng.gen::<f64>();
            if polytope::in_half_disk(x, y, 0.0) {
                break StatePayload::Planar { x, y };
            }
        },
    };
    State {
        model: model.clone(),
        payload,
    }
}

/// Seeded random reversible transformation of the model. For the doubled
/// theory this samples the sector-preserving group.
pub fn random_reversible(model: &TheoryModel, seed: u64) -> Reversible {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let payload = match model.kind {
        SystemKind::Classical { d } => {
            let mut perm: Vec<usize> = (0..d).collect();
            for i in (1..d).rev() {
                perm.swap(i, rng.gen_range(0..=i));
            }
            ReversiblePayload::Permutation(perm)
        }
        SystemKind::Quantum { d } => ReversiblePayload::Unitary(haar_random_unitary(d, rng.gen())),
        SystemKind::DoubledQuantum { sector_dim } => ReversiblePayload::SectorUnitaries {
            u0: haar_random_unitary(sector_dim, rng.gen()),
            u1: haar_random_unitary(sector_dim, rng.gen()),
        },
        SystemKind::SquareBit => ReversiblePayload::Dihedral(rng.gen_range(0..8)),
        SystemKind::HalfDisk => ReversiblePayload::HalfDiskReflection(rng.gen()),
    };
    Reversible {
        model: model.clone(),
        payload,
    }
}

fn check_psd(m: &ComplexMatrix, tol: &Tolerance) -> Result<(), ModelError> {
    if !m.is_square() {
        return Err(ModelError::InvalidState("non-square block".into()));
    }
    if m.hermitian_deviation() > 100.0 * tol.eq_tol {
        return Err(ModelError::InvalidState("block not Hermitian".into()));
    }
    let loose = Tolerance {
        eq_tol: 1e-6,
        ..*tol
    };
    let (values, _) = hermitian_eigendecomposition(m, &loose)
        .map_err(|e| ModelError::InvalidState(e.to_string()))?;
    if let Some(&min) = values.last() {
        if min < -100.0 * tol.psd_tol {
            return Err(ModelError::InvalidState(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
    }
    Ok(())
}

fn check_psd_trace(m: &ComplexMatrix, expected: f64, tol: &Tolerance) -> Result<(), ModelError> {
    check_psd(m, tol)?;
    let tr = m.trace().re;
    if (tr - expected).abs() > 100.0 * tol.eq_tol {
        return Err(ModelError::InvalidState(format!(
            "trace {tr} != {expected}"
        )));
    }
    Ok(())
}

/// All permutations of `0..d` (Heap's algorithm).
pub fn all_permutations(d: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, arr: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(arr.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, arr, out);
            if k.is_multiple_of(2) {
                arr.swap(i, k - 1);
            } else {
                arr.swap(0, k - 1);
            }
        }
    }
    let mut out = Vec::new();
    let mut arr: Vec<usize> = (0..d).collect();
    heap(d, &mut arr, &mut out);
    out
}

/// Haar-random ket (first column of a seeded Haar unitary).
pub fn haar_ket(d: usize, seed: u64) -> ComplexMatrix {
    haar_random_unitary(d, seed).column(0)
}

/// Standard basis ket as a column matrix.
pub fn basis_ket(d: usize, i: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, 1);
    m.0[(i, 0)] = Complex64::new(1.0, 0.0);
    m
}

/// Unitary mapping `from[j] -> to[perm[j]]`, given kets as matrix columns.
pub fn basis_map_unitary(from: &ComplexMatrix, to: &ComplexMatrix, perm: &[usize]) -> ComplexMatrix {
    let d = from.rows();
    let mut u = DMatrix::<Complex64>::zeros(d, d);
    for (j, &target) in perm.iter().enumerate() {
        let col_from = from.0.column(j);
        let col_to = to.0.column(target);
        u += col_to * col_from.adjoint();
    }
    ComplexMatrix(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn quantum_state(entries: &[f64], d: usize) -> State {
        State {
            model: TheoryModel::quantum(d),
            payload: StatePayload::Density(ComplexMatrix::from_real(d, d, entries)),
        }
    }

    #[test]
    fn value_types_are_send_and_sync() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<TheoryModel>();
        assert_send_sync::<State>();
        assert_send_sync::<Effect>();
        assert_send_sync::<Reversible>();
        assert_send_sync::<PureMaximalSet>();
    }

    #[test]
    fn validation_rejects_malformed_states() {
        // trace two
        let bad_trace = State {
            model: TheoryModel::quantum(2),
            payload: StatePayload::Density(ComplexMatrix::identity(2)),
        };
        assert!(bad_trace.validate(&tol()).is_err());
        // negative eigenvalue
        let not_psd = State {
            model: TheoryModel::quantum(2),
            payload: StatePayload::Density(ComplexMatrix::from_real(2, 2, &[1.5, 0.0, 0.0, -0.5])),
        };
        assert!(not_psd.validate(&tol()).is_err());
        // outside the square
        let outside = State {
            model: TheoryModel::square_bit(),
            payload: StatePayload::Planar { x: 1.5, y: 0.0 },
        };
        assert!(outside.validate(&tol()).is_err());
        // negative sector mass
        let bad_blocks = State {
            model: TheoryModel::doubled_quantum(2),
            payload: StatePayload::Blocks {
                block0: ComplexMatrix::from_real(2, 2, &[1.5, 0.0, 0.0, 0.0]),
                block1: ComplexMatrix::from_real(2, 2, &[-0.5, 0.0, 0.0, 0.0]),
            },
        };
        assert!(bad_blocks.validate(&tol()).is_err());
        // wrong payload shape for the model
        let mismatched = State {
            model: TheoryModel::classical(2),
            payload: StatePayload::Planar { x: 0.0, y: 0.0 },
        };
        assert!(mismatched.validate(&tol()).is_err());
        // random valid states pass
        for (i, model) in [
            TheoryModel::classical(3),
            TheoryModel::quantum(3),
            TheoryModel::doubled_quantum(2),
            TheoryModel::square_bit(),
            TheoryModel::half_disk(),
        ]
        .iter()
        .enumerate()
        {
            for seed in 0..10u64 {
                random_state(model, seed + i as u64 * 50).validate(&tol()).unwrap();
            }
        }
    }

    #[test]
    fn pair_quantum_projector_on_itself_is_one() {
        let s = quantum_state(&[1.0, 0.0, 0.0, 0.0], 2);
        let e = dagger(&s, &tol()).unwrap();
        assert_abs_diff_eq!(pair(&e, &s).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pair_square_bit_edge_functional() {
        // a1 = (0, 1, 1)/2 on alpha_2 = (-1, -1, 1) gives zero
        let model = TheoryModel::square_bit();
        let a1 = Effect {
            model: model.clone(),
            payload: EffectPayload::Affine {
                a: 0.0,
                b: 0.5,
                c: 0.5,
            },
        };
        let alpha2 = State {
            model,
            payload: StatePayload::Planar { x: -1.0, y: -1.0 },
        };
        assert_abs_diff_eq!(pair(&a1, &alpha2).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn pair_classical_picks_coordinate() {
        let model = TheoryModel::classical(3);
        let e = Effect {
            model: model.clone(),
            payload: EffectPayload::Row(vec![0.0, 1.0, 0.0]),
        };
        let s = State {
            model,
            payload: StatePayload::Probabilities(vec![0.2, 0.5, 0.3]),
        };
        assert_abs_diff_eq!(pair(&e, &s).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn pair_rejects_model_mismatch() {
        let e = deterministic_effect(&TheoryModel::quantum(2));
        let s = State {
            model: TheoryModel::classical(2),
            payload: StatePayload::Probabilities(vec![0.5, 0.5]),
        };
        assert!(matches!(pair(&e, &s), Err(ModelError::ModelMismatch(..))));
    }

    #[test]
    fn deterministic_effect_is_unit_on_random_states() {
        for (i, model) in [
            TheoryModel::classical(4),
            TheoryModel::quantum(3),
            TheoryModel::doubled_quantum(2),
            TheoryModel::square_bit(),
            TheoryModel::half_disk(),
        ]
        .iter()
        .enumerate()
        {
            let u = deterministic_effect(model);
            for seed in 0..20u64 {
                let s = random_state(model, seed * 31 + i as u64);
                assert_abs_diff_eq!(pair(&u, &s).unwrap(), 1.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn compose_dimensions_multiply() {
        let q6 = compose_systems(&TheoryModel::quantum(2), &TheoryModel::quantum(3)).unwrap();
        assert_eq!(q6.kind, SystemKind::Quantum { d: 6 });
        assert_eq!(q6.dimension(), 6);

        let dd = compose_systems(
            &TheoryModel::doubled_quantum(2),
            &TheoryModel::doubled_quantum(2),
        )
        .unwrap();
        assert_eq!(dd.kind, SystemKind::DoubledQuantum { sector_dim: 8 });
        assert_eq!(dd.dimension(), 16);
        assert_eq!(
            dd.dimension(),
            TheoryModel::doubled_quantum(2).dimension() * TheoryModel::doubled_quantum(2).dimension()
        );

        assert!(matches!(
            compose_systems(&TheoryModel::square_bit(), &TheoryModel::quantum(2)),
            Err(ModelError::UnsupportedComposition(..))
        ));
    }

    #[test]
    fn information_locality_for_all_supported_pairs() {
        let pairs = [
            (TheoryModel::classical(2), TheoryModel::classical(5)),
            (TheoryModel::quantum(3), TheoryModel::quantum(4)),
            (TheoryModel::doubled_quantum(2), TheoryModel::doubled_quantum(3)),
        ];
        for (a, b) in pairs {
            let c = compose_systems(&a, &b).unwrap();
            assert_eq!(c.dimension(), a.dimension() * b.dimension());
        }
    }

    #[test]
    fn tensor_classical_states() {
        let a = State {
            model: TheoryModel::classical(2),
            payload: StatePayload::Probabilities(vec![1.0, 0.0]),
        };
        let b = State {
            model: TheoryModel::classical(2),
            payload: StatePayload::Probabilities(vec![0.5, 0.5]),
        };
        let ab = tensor_states(&a, &b).unwrap();
        let StatePayload::Probabilities(p) = &ab.payload else {
            panic!()
        };
        assert_eq!(p, &vec![0.5, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn tensor_quantum_rank_one() {
        let zero = quantum_state(&[1.0, 0.0, 0.0, 0.0], 2);
        let one = quantum_state(&[0.0, 0.0, 0.0, 1.0], 2);
        let prod = tensor_states(&zero, &one).unwrap();
        let StatePayload::Density(rho) = &prod.payload else {
            panic!()
        };
        assert_abs_diff_eq!(rho.0[(1, 1)].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.trace().re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn product_pairs_factorize() {
        for seed in 0..30u64 {
            for (a_model, b_model) in [
                (TheoryModel::classical(2), TheoryModel::classical(3)),
                (TheoryModel::quantum(2), TheoryModel::quantum(3)),
                (TheoryModel::doubled_quantum(2), TheoryModel::doubled_quantum(2)),
            ] {
                let s = random_state(&a_model, seed);
                let t = random_state(&b_model, seed + 1000);
                let ea = dagger_of_random_pure(&a_model, seed + 2000);
                let eb = dagger_of_random_pure(&b_model, seed + 3000);
                let joint = pair(
                    &tensor_effects(&ea, &eb).unwrap(),
                    &tensor_states(&s, &t).unwrap(),
                )
                .unwrap();
                let split = pair(&ea, &s).unwrap() * pair(&eb, &t).unwrap();
                assert_abs_diff_eq!(joint, split, epsilon = 1e-9);
            }
        }
    }

    fn dagger_of_random_pure(model: &TheoryModel, seed: u64) -> Effect {
        let set = pure_maximal_set(model, seed).unwrap();
        set.dagger_effects[0].clone()
    }

    #[test]
    fn dqt_product_sector_bookkeeping() {
        let model = TheoryModel::doubled_quantum(2);
        let set = pure_maximal_set(&model, 5).unwrap();
        // element 0 lives in sector 0, element 2 in sector 1
        let s0 = &set.states[0];
        let s1 = &set.states[2];
        let prod = tensor_states(&s0.clone(), &s1.clone()).unwrap();
        let StatePayload::Blocks { block0, block1 } = &prod.payload else {
            panic!()
        };
        // sector-0 x sector-1 lands in composite sector 1
        assert_abs_diff_eq!(block0.trace().re, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(block1.trace().re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn apply_reversible_quantum_bit_flip() {
        let x = Reversible {
            model: TheoryModel::quantum(2),
            payload: ReversiblePayload::Unitary(ComplexMatrix::from_real(
                2,
                2,
                &[0.0, 1.0, 1.0, 0.0],
            )),
        };
        let zero = quantum_state(&[1.0, 0.0, 0.0, 0.0], 2);
        let one = apply_reversible(&x, &zero).unwrap();
        let expected = quantum_state(&[0.0, 0.0, 0.0, 1.0], 2);
        assert!(one.max_distance(&expected).unwrap() < 1e-12);
    }

    #[test]
    fn apply_reversible_round_trips() {
        for (i, model) in [
            TheoryModel::classical(4),
            TheoryModel::quantum(3),
            TheoryModel::doubled_quantum(2),
            TheoryModel::square_bit(),
            TheoryModel::half_disk(),
        ]
        .iter()
        .enumerate()
        {
            for seed in 0..20u64 {
                let s = random_state(model, seed + i as u64 * 100);
                let u = random_reversible(model, seed + i as u64 * 1000);
                let back = apply_reversible(&u.inverse(), &apply_reversible(&u, &s).unwrap()).unwrap();
                assert!(back.max_distance(&s).unwrap() <= 1e-9);
            }
        }
    }

    #[test]
    fn square_bit_reflection_maps_alpha1_to_alpha2() {
        let model = TheoryModel::square_bit();
        let reflect_x = Reversible {
            model: model.clone(),
            payload: ReversiblePayload::Dihedral(4),
        };
        let alpha1 = State {
            model: model.clone(),
            payload: StatePayload::Planar { x: -1.0, y: 1.0 },
        };
        let image = apply_reversible(&reflect_x, &alpha1).unwrap();
        let StatePayload::Planar { x, y } = image.payload else {
            panic!()
        };
        assert_eq!((x, y), (-1.0, -1.0));
    }

    #[test]
    fn dqt_reversibles_preserve_sector_masses_exactly() {
        let model = TheoryModel::doubled_quantum(3);
        for seed in 0..50u64 {
            let s = random_state(&model, seed);
            let StatePayload::Blocks { block0, block1 } = &s.payload else {
                panic!()
            };
            let (m0, m1) = (block0.trace().re, block1.trace().re);
            let u = random_reversible(&model, seed + 999);
            let t = apply_reversible(&u, &s).unwrap();
            let StatePayload::Blocks { block0, block1 } = &t.payload else {
                panic!()
            };
            assert_abs_diff_eq!(block0.trace().re, m0, epsilon = 1e-13);
            assert_abs_diff_eq!(block1.trace().re, m1, epsilon = 1e-13);
        }
    }

    #[test]
    fn biorthogonality_of_maximal_sets() {
        for (m_idx, model) in [
            TheoryModel::classical(3),
            TheoryModel::quantum(2),
            TheoryModel::quantum(4),
            TheoryModel::doubled_quantum(2),
            TheoryModel::square_bit(),
        ]
        .iter()
        .enumerate()
        {
            for seed in 0..100u64 {
                let set = pure_maximal_set(model, seed + m_idx as u64 * 7919).unwrap();
                for (i, e) in set.dagger_effects.iter().enumerate() {
                    for (j, s) in set.states.iter().enumerate() {
                        let expected = if i == j { 1.0 } else { 0.0 };
                        let got = pair(e, s).unwrap();
                        assert!(
                            (got - expected).abs() <= 1e-9,
                            "{model} seed={seed} ({i},{j}): {got}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn quantum_maximal_set_has_orthonormal_kets() {
        let set = pure_maximal_set(&TheoryModel::quantum(2), 77).unwrap();
        let BasisData::Kets(kets) = &set.basis else {
            panic!()
        };
        let gram = kets.adjoint().0 * &kets.0;
        let dev = (gram - DMatrix::<Complex64>::identity(2, 2))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(dev <= 1e-10);
    }

    #[test]
    fn dqt_maximal_set_splits_sectors() {
        let set = pure_maximal_set(&TheoryModel::doubled_quantum(2), 3).unwrap();
        assert_eq!(set.len(), 4);
        let BasisData::SectorKets { sectors, .. } = &set.basis else {
            panic!()
        };
        assert_eq!(sectors, &vec![0, 0, 1, 1]);
    }

    #[test]
    fn half_disk_has_no_maximal_set() {
        assert!(matches!(
            pure_maximal_set(&TheoryModel::half_disk(), 0),
            Err(ModelError::Unsupported(..))
        ));
    }

    #[test]
    fn dagger_classical_and_dqt() {
        let e2 = State {
            model: TheoryModel::classical(3),
            payload: StatePayload::Probabilities(vec![0.0, 1.0, 0.0]),
        };
        let d = dagger(&e2, &tol()).unwrap();
        let EffectPayload::Row(row) = &d.payload else {
            panic!()
        };
        assert_eq!(row, &vec![0.0, 1.0, 0.0]);

        let model = TheoryModel::doubled_quantum(2);
        let sector1_pure = State {
            model: model.clone(),
            payload: StatePayload::Blocks {
                block0: ComplexMatrix::zeros(2, 2),
                block1: ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            },
        };
        let d = dagger(&sector1_pure, &tol()).unwrap();
        let EffectPayload::Blocks { e0, e1 } = &d.payload else {
            panic!()
        };
        assert_abs_diff_eq!(e0.trace().re, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e1.0[(0, 0)].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dagger_rejects_mixed_states() {
        let chi = quantum_state(&[0.5, 0.0, 0.0, 0.5], 2);
        assert!(matches!(dagger(&chi, &tol()), Err(ModelError::NotPure(_))));
    }

    #[test]
    fn diagonalise_quantum_diagonal_matrix() {
        let s = quantum_state(&[0.7, 0.0, 0.0, 0.3], 2);
        let diag = diagonalise(&s, &tol()).unwrap();
        assert_abs_diff_eq!(diag.spectrum.values()[0], 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(diag.spectrum.values()[1], 0.3, epsilon = 1e-12);
        assert!(!diag.non_unique);
    }

    #[test]
    fn diagonalise_classical_sorts() {
        let s = State {
            model: TheoryModel::classical(3),
            payload: StatePayload::Probabilities(vec![0.2, 0.5, 0.3]),
        };
        let diag = diagonalise(&s, &tol()).unwrap();
        assert_eq!(diag.spectrum.values(), &[0.5, 0.3, 0.2]);
    }

    #[test]
    fn diagonalise_reconstructs_all_models() {
        for (i, model) in [
            TheoryModel::classical(4),
            TheoryModel::quantum(3),
            TheoryModel::doubled_quantum(2),
            TheoryModel::square_bit(),
            TheoryModel::half_disk(),
        ]
        .iter()
        .enumerate()
        {
            for seed in 0..20u64 {
                let s = random_state(model, seed + i as u64 * 333);
                let diag = diagonalise(&s, &tol()).unwrap();
                let terms: Vec<(f64, State)> = diag
                    .spectrum
                    .values()
                    .iter()
                    .zip(&diag.eigenstates)
                    .map(|(&w, st)| (w, st.clone()))
                    .collect();
                let rebuilt = mix(&terms).unwrap();
                assert!(
                    rebuilt.max_distance(&s).unwrap() <= 1e-9,
                    "{model} seed={seed}"
                );
            }
        }
    }

    #[test]
    fn polytope_diagonalisations_are_flagged_and_pure() {
        // interior square-bit point: canonical vertex mixture, flagged
        let interior = State {
            model: TheoryModel::square_bit(),
            payload: StatePayload::Planar { x: 0.2, y: -0.4 },
        };
        let diag = diagonalise(&interior, &tol()).unwrap();
        assert!(diag.non_unique);
        assert!(diag.eigenbasis.is_none());
        for state in &diag.eigenstates {
            let StatePayload::Planar { x, y } = state.payload else {
                panic!()
            };
            assert!(polytope::vertex_index(x, y).is_some());
        }
        // half-disk interior point: two pure chord endpoints, flagged
        let inner = State {
            model: TheoryModel::half_disk(),
            payload: StatePayload::Planar { x: 0.3, y: 0.4 },
        };
        let diag = diagonalise(&inner, &tol()).unwrap();
        assert!(diag.non_unique);
        assert_eq!(diag.eigenstates.len(), 2);
        // a pure half-disk state diagonalises to itself without the flag
        let pure = State {
            model: TheoryModel::half_disk(),
            payload: StatePayload::Planar { x: 0.6, y: 0.8 },
        };
        let diag = diagonalise(&pure, &tol()).unwrap();
        assert!(!diag.non_unique);
        assert_eq!(diag.spectrum.values(), &[1.0]);
    }

    #[test]
    fn spectrum_invariant_under_reversibles() {
        for (i, model) in [
            TheoryModel::classical(4),
            TheoryModel::quantum(3),
            TheoryModel::doubled_quantum(2),
        ]
        .iter()
        .enumerate()
        {
            for seed in 0..20u64 {
                let s = random_state(model, seed + i as u64 * 17);
                let u = random_reversible(model, seed + i as u64 * 71);
                let moved = apply_reversible(&u, &s).unwrap();
                let a = diagonalise(&s, &tol()).unwrap().spectrum;
                let b = diagonalise(&moved, &tol()).unwrap().spectrum;
                for (x, y) in a.values().iter().zip(b.values()) {
                    assert_abs_diff_eq!(x, y, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn marginal_of_bell_state_is_maximally_mixed() {
        let q2 = TheoryModel::quantum(2);
        let model = compose_systems(&q2, &q2).unwrap();
        // |00> + |11> up to normalization
        let mut amp = ComplexMatrix::zeros(4, 1);
        amp.0[(0, 0)] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amp.0[(3, 0)] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let bell = State {
            model: model.clone(),
            payload: StatePayload::Density(ComplexMatrix(&amp.0 * amp.0.adjoint())),
        };
        let reduced = marginal(&bell, Factor::Left).unwrap();
        let expected = quantum_state(&[0.5, 0.0, 0.0, 0.5], 2);
        assert!(reduced.max_distance(&expected).unwrap() <= 1e-12);
    }

    #[test]
    fn marginal_of_product_recovers_factor() {
        for seed in 0..10u64 {
            let a = random_state(&TheoryModel::quantum(2), seed);
            let b = random_state(&TheoryModel::quantum(3), seed + 50);
            let ab = tensor_states(&a, &b).unwrap();
            assert!(marginal(&ab, Factor::Left).unwrap().max_distance(&a).unwrap() <= 1e-12);
            assert!(marginal(&ab, Factor::Right).unwrap().max_distance(&b).unwrap() <= 1e-12);

            let da = random_state(&TheoryModel::doubled_quantum(2), seed);
            let db = random_state(&TheoryModel::doubled_quantum(2), seed + 99);
            let dab = tensor_states(&da, &db).unwrap();
            assert!(marginal(&dab, Factor::Left).unwrap().max_distance(&da).unwrap() <= 1e-12);
            assert!(marginal(&dab, Factor::Right).unwrap().max_distance(&db).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn marginal_requires_composite() {
        let s = random_state(&TheoryModel::quantum(4), 0);
        assert!(matches!(
            marginal(&s, Factor::Left),
            Err(ModelError::NotComposite)
        ));
    }

    #[test]
    fn dqt_entangled_marginal_is_block_diagonal() {
        // (|0,0>|0,0> + |1,0>|1,0>)/sqrt(2) on two doubled qubits:
        // composite sector 0 carries coherence between its two summands,
        // invisible in the marginal.
        let d2 = TheoryModel::doubled_quantum(2);
        let model = compose_systems(&d2, &d2).unwrap();
        let mut amp = ComplexMatrix::zeros(8, 1);
        // first summand H0xH0 index (0,0) -> 0; second summand H1xH1 index (0,0) -> 4
        amp.0[(0, 0)] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amp.0[(4, 0)] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let psi = State {
            model: model.clone(),
            payload: StatePayload::Blocks {
                block0: ComplexMatrix(&amp.0 * amp.0.adjoint()),
                block1: ComplexMatrix::zeros(8, 8),
            },
        };
        psi.validate(&tol()).unwrap();
        let reduced = marginal(&psi, Factor::Left).unwrap();
        let StatePayload::Blocks { block0, block1 } = &reduced.payload else {
            panic!()
        };
        assert_abs_diff_eq!(block0.0[(0, 0)].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(block1.0[(0, 0)].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(block0.0[(0, 1)].norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn dqt_local_tomography_violation_ranks() {
        // span of product states: 64; span of all composite states: 128
        let d2 = TheoryModel::doubled_quantum(2);
        let model = compose_systems(&d2, &d2).unwrap();

        let singles = dqt_spanning_states(&d2);
        assert_eq!(singles.len(), 8);
        let mut product_vecs = Vec::new();
        for a in &singles {
            for b in &singles {
                product_vecs.push(vectorize_blocks(&tensor_states(a, b).unwrap()));
            }
        }
        assert_eq!(rank_of(&product_vecs), 64);

        let mut composite_vecs = Vec::new();
        for s in dqt_spanning_states(&model) {
            composite_vecs.push(vectorize_blocks(&s));
        }
        assert_eq!(rank_of(&composite_vecs), 128);
    }

    /// States spanning the full block-pair space of a doubled system:
    /// projector states plus coherent pair states within each sector.
    fn dqt_spanning_states(model: &TheoryModel) -> Vec<State> {
        let SystemKind::DoubledQuantum { sector_dim: s } = model.kind else {
            panic!()
        };
        let mut out = Vec::new();
        for sector in 0..2u8 {
            let embed = |m: ComplexMatrix| {
                let zero = ComplexMatrix::zeros(s, s);
                let (block0, block1) = if sector == 0 {
                    (m.clone(), zero.clone())
                } else {
                    (zero.clone(), m.clone())
                };
                State {
                    model: model.clone(),
                    payload: StatePayload::Blocks { block0, block1 },
                }
            };
            for i in 0..s {
                let ket = basis_ket(s, i);
                out.push(embed(ComplexMatrix(&ket.0 * ket.0.adjoint())));
            }
            for i in 0..s {
                for j in (i + 1)..s {
                    for phase in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
                        let mut ket = ComplexMatrix::zeros(s, 1);
                        ket.0[(i, 0)] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                        ket.0[(j, 0)] = phase * std::f64::consts::FRAC_1_SQRT_2;
                        out.push(embed(ComplexMatrix(&ket.0 * ket.0.adjoint())));
                    }
                }
            }
        }
        out
    }

    fn vectorize_blocks(s: &State) -> Vec<f64> {
        let StatePayload::Blocks { block0, block1 } = &s.payload else {
            panic!()
        };
        let mut v = Vec::new();
        for b in [block0, block1] {
            for i in 0..b.rows() {
                for j in 0..b.cols() {
                    v.push(b.0[(i, j)].re);
                    v.push(b.0[(i, j)].im);
                }
            }
        }
        v
    }

    fn rank_of(vectors: &[Vec<f64>]) -> usize {
        let rows = vectors.len();
        let cols = vectors[0].len();
        let m = DMatrix::from_fn(rows, cols, |i, j| vectors[i][j]);
        m.svd(false, false)
            .singular_values
            .iter()
            .filter(|&&s| s > 1e-8)
            .count()
    }
}
