//! Channel representations and the constructive channel machinery: the
//! unital/doubly-stochastic correspondence, random-reversible channels from
//! Birkhoff terms, control-unitary realizations of rational mixtures, and
//! the Landau-Streater channel.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::majorisation::{birkhoff_decompose, DoublyStochasticMatrix, MajorisationError};
use crate::microcanonical::{microcanonical_state, MicrocanonicalError};
use crate::models::{
    apply_reversible, basis_map_unitary, dqt, mix, pair, pure_maximal_set, random_state,
    BasisData, Effect, ModelError, PureMaximalSet, Reversible, ReversiblePayload, State,
    StatePayload, SystemKind, TheoryModel,
};
use crate::numerics::{ComplexMatrix, Tolerance};

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("channel input model {expected} does not match state model {got}")]
    ModelMismatch { expected: String, got: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("channel is not unital; extracted matrix has non-unit sums")]
    NotUnital { matrix: Vec<Vec<f64>> },
    #[error("unsupported model for this construction: {0}")]
    UnsupportedModel(String),
    #[error("mixture weights are not rational with denominator <= {max_denominator}: {detail}")]
    IrrationalWeights {
        max_denominator: usize,
        detail: String,
    },
    #[error("mixture weights do not form a probability vector (sum {0})")]
    BadWeights(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Microcanonical(#[from] MicrocanonicalError),
    #[error(transparent)]
    Majorisation(#[from] MajorisationError),
}

/// A deterministic transformation in one of four representations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Channel {
    pub input: TheoryModel,
    pub output: TheoryModel,
    pub repr: ChannelRepr,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelRepr {
    /// Convex mixture of reversible transformations (a RaRe channel).
    MixtureOfReversibles { terms: Vec<(f64, Reversible)> },
    /// Measure with `effects[j]`, prepare `preparations[j]`.
    MeasureAndPrepare {
        effects: Vec<Effect>,
        preparations: Vec<State>,
    },
    /// Kraus operators on a quantum system.
    OperatorSum { kraus: Vec<ComplexMatrix> },
    /// Blockwise Kraus operators on a doubled quantum system.
    SectorOperatorSum {
        kraus0: Vec<ComplexMatrix>,
        kraus1: Vec<ComplexMatrix>,
    },
    /// The measure-and-prepare channel induced by a doubly stochastic
    /// matrix over two pure maximal sets: measure with the daggers of
    /// `basis_in`, prepare column mixtures of `basis_out`.
    DoublyStochasticInduced {
        matrix: DoublyStochasticMatrix,
        basis_in: Box<PureMaximalSet>,
        basis_out: Box<PureMaximalSet>,
    },
}

impl Channel {
    pub fn identity(model: &TheoryModel) -> Self {
        Self {
            input: model.clone(),
            output: model.clone(),
            repr: ChannelRepr::MixtureOfReversibles {
                terms: vec![(1.0, Reversible::identity(model))],
            },
        }
    }

    /// Mixture of reversibles with validated probability weights.
    pub fn mixture(model: &TheoryModel, terms: Vec<(f64, Reversible)>) -> Result<Self, ChannelError> {
        let sum: f64 = terms.iter().map(|(w, _)| w).sum();
        if (sum - 1.0).abs() > 1e-9 || terms.iter().any(|(w, _)| *w < 0.0) {
            return Err(ChannelError::BadWeights(sum));
        }
        for (_, u) in &terms {
            if &u.model != model {
                return Err(ChannelError::ModelMismatch {
                    expected: model.to_string(),
                    got: u.model.to_string(),
                });
            }
        }
        Ok(Self {
            input: model.clone(),
            output: model.clone(),
            repr: ChannelRepr::MixtureOfReversibles { terms },
        })
    }
}

/// Applies a channel to a state of the input model.
pub fn apply_channel(channel: &Channel, s: &State) -> Result<State, ChannelError> {
    if s.model != channel.input {
        return Err(ChannelError::ModelMismatch {
            expected: channel.input.to_string(),
            got: s.model.to_string(),
        });
    }
    match &channel.repr {
        ChannelRepr::MixtureOfReversibles { terms } => {
            let parts: Vec<(f64, State)> = terms
                .iter()
                .map(|(w, u)| Ok((*w, apply_reversible(u, s)?)))
                .collect::<Result<_, ModelError>>()?;
            Ok(mix(&parts)?)
        }
        ChannelRepr::MeasureAndPrepare {
            effects,
            preparations,
        } => {
            let parts: Vec<(f64, State)> = effects
                .iter()
                .zip(preparations)
                .map(|(e, prep)| Ok((pair(e, s)?, prep.clone())))
                .collect::<Result<_, ModelError>>()?;
            Ok(mix(&parts)?)
        }
        ChannelRepr::OperatorSum { kraus } => {
            let StatePayload::Density(rho) = &s.payload else {
                return Err(ChannelError::UnsupportedModel(
                    "operator-sum channels act on density matrices".into(),
                ));
            };
            let mut acc = ComplexMatrix::zeros(rho.rows(), rho.cols());
            for k in kraus {
                acc = &acc + &ComplexMatrix(&k.0 * &rho.0 * k.0.adjoint());
            }
            Ok(State {
                model: channel.output.clone(),
                payload: StatePayload::Density(acc),
            })
        }
        ChannelRepr::SectorOperatorSum { kraus0, kraus1 } => {
            let StatePayload::Blocks { block0, block1 } = &s.payload else {
                return Err(ChannelError::UnsupportedModel(
                    "sector operator-sum channels act on block pairs".into(),
                ));
            };
            let apply_list = |ks: &[ComplexMatrix], b: &ComplexMatrix| {
                let mut acc = ComplexMatrix::zeros(b.rows(), b.cols());
                for k in ks {
                    acc = &acc + &ComplexMatrix(&k.0 * &b.0 * k.0.adjoint());
                }
                acc
            };
            Ok(State {
                model: channel.output.clone(),
                payload: StatePayload::Blocks {
                    block0: apply_list(kraus0, block0),
                    block1: apply_list(kraus1, block1),
                },
            })
        }
        ChannelRepr::DoublyStochasticInduced {
            matrix,
            basis_in,
            basis_out,
        } => {
            let d = matrix.dim();
            let m = matrix.matrix();
            let parts: Vec<(f64, State)> = (0..d)
                .map(|j| {
                    let weight = pair(&basis_in.dagger_effects[j], s)?;
                    let column: Vec<(f64, State)> = (0..d)
                        .map(|i| (m[(i, j)], basis_out.states[i].clone()))
                        .collect();
                    Ok((weight, mix(&column)?))
                })
                .collect::<Result<_, ModelError>>()?;
            Ok(mix(&parts)?)
        }
    }
}

/// True iff the channel maps the input microcanonical state to the output
/// microcanonical state within `tol` in max norm.
pub fn is_unital(channel: &Channel, tol: f64) -> Result<bool, ChannelError> {
    let chi_in = microcanonical_state(&channel.input)?;
    let chi_out = microcanonical_state(&channel.output)?;
    let image = apply_channel(channel, &chi_in)?;
    Ok(image.max_distance(&chi_out)? <= tol)
}

/// The unital channel induced by a doubly stochastic matrix over two pure
/// maximal sets: measure with the daggers of `basis_in` and prepare, on
/// outcome `j`, the mixture of `basis_out` with weights from column `j`.
pub fn unital_from_doubly_stochastic(
    model: &TheoryModel,
    matrix: DoublyStochasticMatrix,
    basis_in: PureMaximalSet,
    basis_out: PureMaximalSet,
) -> Result<Channel, ChannelError> {
    let d = model.dimension();
    if matrix.dim() != d || basis_in.len() != d || basis_out.len() != d {
        return Err(ChannelError::DimensionMismatch(format!(
            "model dimension {d}, matrix {}, bases {} and {}",
            matrix.dim(),
            basis_in.len(),
            basis_out.len()
        )));
    }
    if &basis_in.model != model || &basis_out.model != model {
        return Err(ChannelError::ModelMismatch {
            expected: model.to_string(),
            got: basis_in.model.to_string(),
        });
    }
    Ok(Channel {
        input: model.clone(),
        output: model.clone(),
        repr: ChannelRepr::DoublyStochasticInduced {
            matrix,
            basis_in: Box::new(basis_in),
            basis_out: Box::new(basis_out),
        },
    })
}

/// Matrix elements of a channel between two pure maximal sets,
/// `M[i][j] = (dagger(out_i) | C | in_j)`. Doubly stochastic iff the
/// channel is unital; otherwise the raw matrix is returned in the error.
pub fn doubly_stochastic_from_channel(
    channel: &Channel,
    basis_in: &PureMaximalSet,
    basis_out: &PureMaximalSet,
    tol: &Tolerance,
) -> Result<DoublyStochasticMatrix, ChannelError> {
    let d = basis_in.len();
    let mut m = nalgebra::DMatrix::<f64>::zeros(d, d);
    for j in 0..d {
        let image = apply_channel(channel, &basis_in.states[j])?;
        for i in 0..d {
            m[(i, j)] = pair(&basis_out.dagger_effects[i], &image)?;
        }
    }
    DoublyStochasticMatrix::new(m.clone(), tol).map_err(|_| ChannelError::NotUnital {
        matrix: (0..d)
            .map(|i| (0..d).map(|j| m[(i, j)]).collect())
            .collect(),
    })
}

/// Random-reversible channel realizing a doubly stochastic matrix: each
/// Birkhoff term `(w, perm)` becomes weight `w` on a reversible mapping
/// `basis_in[j] -> basis_out[perm[j]]`.
///
/// For doubled systems every permutation must respect the sector split of
/// the two bases, because the sector-preserving reversibles cannot move a
/// state across sectors; a violating permutation is reported as
/// unsupported rather than silently repaired.
pub fn rare_from_birkhoff(
    model: &TheoryModel,
    basis_in: &PureMaximalSet,
    basis_out: &PureMaximalSet,
    matrix: &DoublyStochasticMatrix,
    tol: &Tolerance,
) -> Result<Channel, ChannelError> {
    let d = model.dimension();
    if matrix.dim() != d || basis_in.len() != d || basis_out.len() != d {
        return Err(ChannelError::DimensionMismatch(format!(
            "model dimension {d}, matrix {}, bases {} and {}",
            matrix.dim(),
            basis_in.len(),
            basis_out.len()
        )));
    }
    let decomposition = birkhoff_decompose(matrix, tol)?;
    let terms: Vec<(f64, Reversible)> = decomposition
        .terms
        .iter()
        .map(|(w, perm)| Ok((*w, reversible_mapping_bases(model, basis_in, basis_out, perm)?)))
        .collect::<Result<_, ChannelError>>()?;
    Channel::mixture(model, terms)
}

/// A reversible transformation sending `basis_in[j]` to `basis_out[perm[j]]`.
fn reversible_mapping_bases(
    model: &TheoryModel,
    basis_in: &PureMaximalSet,
    basis_out: &PureMaximalSet,
    perm: &[usize],
) -> Result<Reversible, ChannelError> {
    let payload = match (&basis_in.basis, &basis_out.basis) {
        (BasisData::Positions(from), BasisData::Positions(to)) => {
            let d = from.len();
            let mut table = vec![0usize; d];
            for (j, &target) in perm.iter().enumerate() {
                table[from[j]] = to[target];
            }
            ReversiblePayload::Permutation(table)
        }
        (BasisData::Kets(from), BasisData::Kets(to)) => {
            ReversiblePayload::Unitary(basis_map_unitary(from, to, perm))
        }
        (
            BasisData::SectorKets {
                sectors: sec_in,
                kets: kets_in,
            },
            BasisData::SectorKets {
                sectors: sec_out,
                kets: kets_out,
            },
        ) => {
            for (j, &target) in perm.iter().enumerate() {
                if sec_in[j] != sec_out[target] {
                    return Err(ChannelError::UnsupportedModel(format!(
                        "permutation maps element {j} (sector {}) across sectors to {target} \
                         (sector {}); sector-preserving reversibles cannot realize it",
                        sec_in[j], sec_out[target]
                    )));
                }
            }
            let s = match model.kind {
                SystemKind::DoubledQuantum { sector_dim } => sector_dim,
                _ => unreachable!(),
            };
            let mut u0 = nalgebra::DMatrix::<Complex64>::zeros(s, s);
            let mut u1 = nalgebra::DMatrix::<Complex64>::zeros(s, s);
            for (j, &target) in perm.iter().enumerate() {
                let from = &kets_in[j].0;
                let to = &kets_out[target].0;
                let outer = to * from.adjoint();
                if sec_in[j] == 0 {
                    u0 += outer;
                } else {
                    u1 += outer;
                }
            }
            ReversiblePayload::SectorUnitaries {
                u0: ComplexMatrix(u0),
                u1: ComplexMatrix(u1),
            }
        }
        _ => {
            return Err(ChannelError::UnsupportedModel(format!(
                "no strong-symmetry reversibles between maximal sets of {model}"
            )))
        }
    };
    Ok(Reversible {
        model: model.clone(),
        payload,
    })
}

/// Ancilla-assisted realization of a channel: adjoin an ancilla in its
/// microcanonical state, apply a single reversible transformation, and
/// discard the ancilla.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoisyRealization {
    pub system: TheoryModel,
    pub ancilla_model: TheoryModel,
    pub ancilla_state: State,
    pub global_reversible: Reversible,
    pub discarded_effect: Effect,
}

impl NoisyRealization {
    /// The channel induced by the realization on a system state.
    pub fn induced(&self, s: &State) -> Result<State, ChannelError> {
        let (SystemKind::Quantum { d }, SystemKind::Quantum { d: n }) =
            (&self.system.kind, &self.ancilla_model.kind)
        else {
            return Err(ChannelError::UnsupportedModel(
                "realization is quantum-only".into(),
            ));
        };
        let StatePayload::Density(rho) = &s.payload else {
            return Err(ChannelError::ModelMismatch {
                expected: self.system.to_string(),
                got: s.model.to_string(),
            });
        };
        let StatePayload::Density(anc) = &self.ancilla_state.payload else {
            unreachable!("quantum ancilla state");
        };
        let ReversiblePayload::Unitary(u) = &self.global_reversible.payload else {
            unreachable!("quantum global reversible");
        };
        let joint = rho.kronecker(anc);
        let moved = ComplexMatrix(&u.0 * &joint.0 * u.0.adjoint());
        let reduced = dqt::partial_trace_right(&moved, *d, *n);
        Ok(State {
            model: self.system.clone(),
            payload: StatePayload::Density(reduced),
        })
    }
}

/// Exact rationalization `w_i = n_i / n` of mixture weights.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalWeights {
    pub numerators: Vec<usize>,
    pub denominator: usize,
}

/// Best common-denominator approximation of `weights` with denominator at
/// most `max_denominator`, together with its max error. Numerators are
/// fixed up by largest remainders so they always sum to the denominator.
pub fn rationalize_weights(weights: &[f64], max_denominator: usize) -> (RationalWeights, f64) {
    let mut best: Option<(RationalWeights, f64)> = None;
    for n in 1..=max_denominator {
        let mut numerators: Vec<usize> = weights
            .iter()
            .map(|w| (w * n as f64).round().max(0.0) as usize)
            .collect();
        let mut total: isize = numerators.iter().sum::<usize>() as isize - n as isize;
        // largest-remainder fixup so the numerators sum to n
        while total != 0 {
            let step = if total > 0 { -1isize } else { 1isize };
            let idx = (0..weights.len())
                .filter(|&i| step > 0 || numerators[i] > 0)
                .min_by(|&a, &b| {
                    let ea = (numerators[a] as f64 + step as f64) / n as f64 - weights[a];
                    let eb = (numerators[b] as f64 + step as f64) / n as f64 - weights[b];
                    ea.abs().partial_cmp(&eb.abs()).unwrap()
                })
                .expect("non-empty weights");
            numerators[idx] = (numerators[idx] as isize + step) as usize;
            total += step;
        }
        let error = weights
            .iter()
            .zip(&numerators)
            .map(|(w, &k)| (w - k as f64 / n as f64).abs())
            .fold(0.0, f64::max);
        if best.as_ref().is_none_or(|(_, e)| error < *e - 1e-15) {
            best = Some((
                RationalWeights {
                    numerators,
                    denominator: n,
                },
                error,
            ));
            if error <= 1e-12 {
                break;
            }
        }
    }
    best.expect("max_denominator >= 1")
}

/// Denominator bound for the exact rational search: past this the control
/// unitary would not fit in memory anyway.
const EXACT_DENOMINATOR_CAP: usize = 512;
/// Largest global dimension `d * n` the construction will materialize.
const GLOBAL_DIMENSION_CAP: usize = 2048;

/// Control-unitary realization of a rational random-unitary channel: for
/// weights `n_i / n` the ancilla is an `n`-dimensional system in its
/// microcanonical state, and the global unitary is `sum_k V_k x |k><k|`
/// with `n_1` of the `V_k` equal to `U_1`, `n_2` equal to `U_2`, and so on.
///
/// Weights must be exactly rational (reproduced to within `1e-12` by a
/// denominator of at most 512); otherwise the caller should rationalize
/// first via [`rationalize_weights`] and rebuild the mixture.
pub fn noisy_realization(channel: &Channel) -> Result<NoisyRealization, ChannelError> {
    let ChannelRepr::MixtureOfReversibles { terms } = &channel.repr else {
        return Err(ChannelError::UnsupportedModel(
            "noisy realization needs a mixture of reversibles".into(),
        ));
    };
    let SystemKind::Quantum { d } = channel.input.kind else {
        return Err(ChannelError::UnsupportedModel(format!(
            "control-unitary construction is quantum-only, got {}",
            channel.input
        )));
    };
    let weights: Vec<f64> = terms.iter().map(|(w, _)| *w).collect();
    let (rational, error) = rationalize_weights(&weights, EXACT_DENOMINATOR_CAP);
    if error > 1e-12 {
        return Err(ChannelError::IrrationalWeights {
            max_denominator: EXACT_DENOMINATOR_CAP,
            detail: format!("best approximation error {error:.3e}"),
        });
    }
    if d * rational.denominator > GLOBAL_DIMENSION_CAP {
        return Err(ChannelError::DimensionMismatch(format!(
            "global dimension {} exceeds the {GLOBAL_DIMENSION_CAP} construction cap",
            d * rational.denominator
        )));
    }
    let n = rational.denominator;
    let mut controlled = nalgebra::DMatrix::<Complex64>::zeros(d * n, d * n);
    let mut slot = 0usize;
    for ((_, reversible), &count) in terms.iter().zip(&rational.numerators) {
        let ReversiblePayload::Unitary(u) = &reversible.payload else {
            return Err(ChannelError::UnsupportedModel(
                "mixture terms must be unitary".into(),
            ));
        };
        for _ in 0..count {
            // V_slot x |slot><slot| block of the control unitary
            for i in 0..d {
                for j in 0..d {
                    controlled[(i * n + slot, j * n + slot)] = u.0[(i, j)];
                }
            }
            slot += 1;
        }
    }
    debug_assert_eq!(slot, n);
    let ancilla_model = TheoryModel::quantum(n);
    let system = TheoryModel::quantum(d);
    let global_model = TheoryModel::quantum(d * n);
    Ok(NoisyRealization {
        ancilla_state: microcanonical_state(&ancilla_model)?,
        discarded_effect: crate::models::deterministic_effect(&ancilla_model),
        global_reversible: Reversible {
            model: global_model,
            payload: ReversiblePayload::Unitary(ComplexMatrix(controlled)),
        },
        system,
        ancilla_model,
    })
}

/// The spin-j Landau-Streater channel
/// `rho -> (Jx rho Jx + Jy rho Jy + Jz rho Jz) / (j (j + 1))`,
/// a unital channel that is not a mixture of unitaries for `j > 1/2`.
/// `two_j` is twice the spin, so `two_j = 2` is the spin-1 channel on
/// a three-level system.
pub fn landau_streater(two_j: u32) -> Channel {
    assert!(two_j >= 1, "spin must be at least 1/2");
    let d = two_j as usize + 1;
    let (jx, jy, jz) = spin_operators(two_j);
    let j = two_j as f64 / 2.0;
    let norm = 1.0 / (j * (j + 1.0)).sqrt();
    let model = TheoryModel::quantum(d);
    Channel {
        input: model.clone(),
        output: model,
        repr: ChannelRepr::OperatorSum {
            kraus: vec![jx.scale(norm), jy.scale(norm), jz.scale(norm)],
        },
    }
}

/// Spin operators in the `|j, m>` basis with `m` descending.
pub fn spin_operators(two_j: u32) -> (ComplexMatrix, ComplexMatrix, ComplexMatrix) {
    let d = two_j as usize + 1;
    let j = two_j as f64 / 2.0;
    let mut raising = ComplexMatrix::zeros(d, d);
    for k in 1..d {
        let m = j - k as f64;
        let amp = (j * (j + 1.0) - m * (m + 1.0)).sqrt();
        raising.0[(k - 1, k)] = Complex64::new(amp, 0.0);
    }
    let lowering = raising.adjoint();
    let jx = (&raising + &lowering).scale(0.5);
    let jy = ComplexMatrix((&raising.0 - &lowering.0) * Complex64::new(0.0, -0.5));
    let mut jz = ComplexMatrix::zeros(d, d);
    for k in 0..d {
        jz.0[(k, k)] = Complex64::new(j - k as f64, 0.0);
    }
    (jx, jy, jz)
}

/// True iff the realization's induced channel fixes the microcanonical
/// state within `eq_tol`, and preserves trace on `trials` random states.
pub fn noisy_is_unital_check(
    realization: &NoisyRealization,
    trials: usize,
    tol: &Tolerance,
) -> Result<bool, ChannelError> {
    let chi = microcanonical_state(&realization.system)?;
    let image = realization.induced(&chi)?;
    if image.max_distance(&chi)? > tol.eq_tol {
        return Ok(false);
    }
    let unit = crate::models::deterministic_effect(&realization.system);
    for seed in 0..trials as u64 {
        let s = random_state(&realization.system, 0x5eed ^ seed);
        let out = realization.induced(&s)?;
        if (pair(&unit, &out)? - 1.0).abs() > 1e-10 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Spanning family for channel-equality checks: the states of a seeded
/// pure maximal set, the microcanonical state when it exists, and twenty
/// seeded random states.
pub fn spanning_states(model: &TheoryModel, seed: u64) -> Vec<State> {
    let mut out = Vec::new();
    if let Ok(set) = pure_maximal_set(model, seed) {
        out.extend(set.states);
    }
    if let Ok(chi) = microcanonical_state(model) {
        out.push(chi);
    }
    for k in 0..20u64 {
        out.push(random_state(model, seed.wrapping_add(1000 + k)));
    }
    out
}
