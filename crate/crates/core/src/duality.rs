//! Entanglement-thermodynamics duality at desk scale for quantum systems:
//! Schmidt spectra, LOCC convertibility of pure bipartite states, symmetric
//! purification, entanglement entropy, and local-exchangeability witnesses.
//!
//! The duality identifies LOCC convertibility of pure bipartite states with
//! reverse random-reversible convertibility of their marginals, which in
//! turn is Schmidt-spectrum majorisation. [`locc_convertible`] decides the
//! question along two independent code paths and insists they agree.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channels::{Channel, ChannelRepr};
use crate::convertibility::{rare_convertible, Answer, ConvertibilityError};
use crate::majorisation::{majorises, shannon_monotone, MajorisationError, Spectrum};
use crate::models::{
    compose_systems, diagonalise, marginal, BasisData, Factor, ModelError, Reversible,
    ReversiblePayload, State, StatePayload, SystemKind, TheoryModel,
};
use crate::numerics::{
    complete_orthonormal_basis, hermitian_eigendecomposition, ComplexMatrix, Tolerance,
};

#[derive(Debug, Error)]
pub enum DualityError {
    #[error("amplitude matrix has Frobenius norm {0}, expected 1")]
    NotNormalized(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(
        "internal inconsistency: Schmidt path says {schmidt_path}, marginal path says \
         {marginal_path}"
    )]
    PathDisagreement {
        schmidt_path: bool,
        marginal_path: bool,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Convertibility(#[from] ConvertibilityError),
    #[error(transparent)]
    Majorisation(#[from] MajorisationError),
}

/// Pure state of a bipartite quantum system, stored as the amplitude
/// matrix `M` of `Psi = sum_ij M_ij |i>|j>` with unit Frobenius norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureBipartiteState {
    pub dim_a: usize,
    pub dim_b: usize,
    pub amplitudes: ComplexMatrix,
}

impl PureBipartiteState {
    pub fn new(amplitudes: ComplexMatrix) -> Result<Self, DualityError> {
        let norm: f64 = amplitudes.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(DualityError::NotNormalized(norm));
        }
        Ok(Self {
            dim_a: amplitudes.rows(),
            dim_b: amplitudes.cols(),
            amplitudes,
        })
    }

    /// Product state with the given local kets.
    pub fn product(ket_a: &ComplexMatrix, ket_b: &ComplexMatrix) -> Result<Self, DualityError> {
        Self::new(ComplexMatrix(&ket_a.0 * ket_b.0.transpose()))
    }

    /// Maximally entangled state on `d x d`.
    pub fn maximally_entangled(d: usize) -> Self {
        let amp = ComplexMatrix::identity(d).scale(1.0 / (d as f64).sqrt());
        Self {
            dim_a: d,
            dim_b: d,
            amplitudes: amp,
        }
    }

    /// The rank-one density matrix on the composite quantum system, with
    /// the factor structure recorded for marginals.
    pub fn to_density(&self) -> Result<State, DualityError> {
        let model = compose_systems(
            &TheoryModel::quantum(self.dim_a),
            &TheoryModel::quantum(self.dim_b),
        )?;
        let d = self.dim_a * self.dim_b;
        let mut ket = ComplexMatrix::zeros(d, 1);
        for i in 0..self.dim_a {
            for j in 0..self.dim_b {
                ket.0[(i * self.dim_b + j, 0)] = self.amplitudes.0[(i, j)];
            }
        }
        Ok(State {
            model,
            payload: StatePayload::Density(ComplexMatrix(&ket.0 * ket.0.adjoint())),
        })
    }

    /// Marginal density state on the requested factor, computed through
    /// the general composite-state machinery.
    pub fn marginal_state(&self, keep: Factor) -> Result<State, DualityError> {
        Ok(marginal(&self.to_density()?, keep)?)
    }

    /// Entrywise distance to another amplitude matrix after aligning the
    /// global phase on the largest-magnitude entry.
    pub fn phase_aligned_distance(&self, other: &PureBipartiteState) -> f64 {
        let m = &self.amplitudes.0;
        let n = &other.amplitudes.0;
        let mut best = Complex64::new(0.0, 0.0);
        let mut best_mag = -1.0;
        for (a, b) in m.iter().zip(n.iter()) {
            if a.norm() > best_mag && b.norm() > 1e-12 {
                best_mag = a.norm();
                best = a / b;
            }
        }
        let phase = if best.norm() > 1e-12 {
            best / best.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        m.iter()
            .zip(n.iter())
            .map(|(a, b)| (a - b * phase).norm())
            .fold(0.0, f64::max)
    }
}

/// Descending squared Schmidt coefficients of a pure bipartite state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchmidtVector(pub Spectrum);

/// Full Schmidt data: squared coefficients plus matching orthonormal local
/// bases (completed beyond the rank).
pub struct SchmidtDecomposition {
    pub squared: Vec<f64>,
    /// Columns are the A-side Schmidt vectors.
    pub basis_a: ComplexMatrix,
    /// Columns are the B-side Schmidt vectors.
    pub basis_b: ComplexMatrix,
}

/// Squared singular values of the amplitude matrix, descending; equal to
/// the spectrum of either marginal.
pub fn schmidt(psi: &PureBipartiteState, tol: &Tolerance) -> Result<SchmidtVector, DualityError> {
    let gram = ComplexMatrix(&psi.amplitudes.0 * psi.amplitudes.0.adjoint());
    let (values, _) = hermitian_eigendecomposition(&gram, tol)
        .map_err(|e| DualityError::DimensionMismatch(e.to_string()))?;
    let keep = values
        .iter()
        .take(psi.dim_a.min(psi.dim_b))
        .copied()
        .collect::<Vec<_>>();
    Ok(SchmidtVector(Spectrum::new(&keep, tol)?))
}

/// Schmidt decomposition with completed bases, for witness construction.
pub fn schmidt_decomposition(
    psi: &PureBipartiteState,
    seed: u64,
    tol: &Tolerance,
) -> Result<SchmidtDecomposition, DualityError> {
    let gram = ComplexMatrix(&psi.amplitudes.0 * psi.amplitudes.0.adjoint());
    let (values, basis_a) = hermitian_eigendecomposition(&gram, tol)
        .map_err(|e| DualityError::DimensionMismatch(e.to_string()))?;
    let rank_tol = 1e-8;
    let mut b_columns: Vec<nalgebra::DVector<Complex64>> = Vec::new();
    for (i, &lambda) in values.iter().enumerate() {
        let sigma = lambda.max(0.0).sqrt();
        if sigma <= rank_tol || i >= psi.dim_b {
            break;
        }
        // b_i = M^T conj(a_i) / sigma_i
        let a_col = basis_a.0.column(i);
        let conj_a = nalgebra::DVector::from_iterator(psi.dim_a, a_col.iter().map(|z| z.conj()));
        let b = (psi.amplitudes.0.transpose() * conj_a) / Complex64::new(sigma, 0.0);
        b_columns.push(b);
    }
    let basis_b = complete_orthonormal_basis(b_columns, psi.dim_b, seed);
    Ok(SchmidtDecomposition {
        squared: values,
        basis_a,
        basis_b,
    })
}

/// Whether `phi` converts to `psi` by local operations and classical
/// communication, decided two independent ways: Schmidt majorisation of
/// the target over the source, and random-reversible convertibility of the
/// target's marginal into the source's marginal. Disagreement is an
/// internal error, not a physics outcome.
pub fn locc_convertible(
    phi: &PureBipartiteState,
    psi: &PureBipartiteState,
    tol: &Tolerance,
) -> Result<bool, DualityError> {
    let schmidt_phi = schmidt(phi, tol)?;
    let schmidt_psi = schmidt(psi, tol)?;
    let schmidt_path = majorises(&schmidt_psi.0, &schmidt_phi.0, tol);

    let marginal_phi = phi.marginal_state(Factor::Left)?;
    let marginal_psi = psi.marginal_state(Factor::Left)?;
    let marginal_path = rare_convertible(&marginal_psi, &marginal_phi, tol)?.answer == Answer::Yes;

    if schmidt_path != marginal_path {
        return Err(DualityError::PathDisagreement {
            schmidt_path,
            marginal_path,
        });
    }
    Ok(schmidt_path)
}

/// A purification of `rho` both of whose marginals equal `rho`:
/// `Psi = sum_i sqrt(p_i) |alpha_i>|alpha_i>` in the eigenbasis.
pub fn symmetric_purification(
    rho: &State,
    tol: &Tolerance,
) -> Result<PureBipartiteState, DualityError> {
    let SystemKind::Quantum { d } = rho.model.kind else {
        return Err(DualityError::DimensionMismatch(format!(
            "symmetric purification is built for quantum states, got {}",
            rho.model
        )));
    };
    let diag = diagonalise(rho, tol)?;
    let basis = diag.eigenbasis.expect("quantum states carry an eigenbasis");
    let BasisData::Kets(kets) = &basis.basis else {
        unreachable!()
    };
    let mut amp = nalgebra::DMatrix::<Complex64>::zeros(d, d);
    for (i, &p) in diag.spectrum.values().iter().enumerate() {
        let ket = kets.0.column(i);
        // outer product without conjugation: sqrt(p) |a_i> (a_i)^T
        amp += (ket * ket.transpose()) * Complex64::new(p.sqrt(), 0.0);
    }
    PureBipartiteState::new(ComplexMatrix(amp))
}

/// Shannon entropy of the Schmidt spectrum, in nats.
pub fn entanglement_entropy(psi: &PureBipartiteState, tol: &Tolerance) -> Result<f64, DualityError> {
    Ok(-shannon_monotone(&schmidt(psi, tol)?.0))
}

/// Local channels `(C: A -> B, D: B -> A)` whose product reproduces the
/// swap on `psi`: unitaries exchanging the two Schmidt bases. Requires
/// equal local dimensions; rank-deficient Schmidt data is completed with
/// seeded orthonormal vectors.
pub fn local_exchangeability_witness(
    psi: &PureBipartiteState,
    seed: u64,
    tol: &Tolerance,
) -> Result<(Channel, Channel), DualityError> {
    if psi.dim_a != psi.dim_b {
        return Err(DualityError::DimensionMismatch(format!(
            "witness construction requires equal local dimensions, got {} and {}",
            psi.dim_a, psi.dim_b
        )));
    }
    let d = psi.dim_a;
    let decomposition = schmidt_decomposition(psi, seed, tol)?;
    let a = &decomposition.basis_a;
    let b = &decomposition.basis_b;
    // C maps a_i -> b_i, D maps b_i -> a_i
    let mut c = nalgebra::DMatrix::<Complex64>::zeros(d, d);
    let mut dm = nalgebra::DMatrix::<Complex64>::zeros(d, d);
    for i in 0..d {
        let ai = a.0.column(i);
        let bi = b.0.column(i);
        c += bi * ai.adjoint();
        dm += ai * bi.adjoint();
    }
    let model = TheoryModel::quantum(d);
    let as_channel = |u: nalgebra::DMatrix<Complex64>| Channel {
        input: model.clone(),
        output: model.clone(),
        repr: ChannelRepr::MixtureOfReversibles {
            terms: vec![(
                1.0,
                Reversible {
                    model: model.clone(),
                    payload: ReversiblePayload::Unitary(ComplexMatrix(u)),
                },
            )],
        },
    };
    Ok((as_channel(c), as_channel(dm)))
}

/// Residual `||(C x D) Psi - SWAP Psi||` up to global phase, for witnesses
/// made of single unitaries.
pub fn exchange_residual(
    psi: &PureBipartiteState,
    c: &Channel,
    d: &Channel,
) -> Result<f64, DualityError> {
    let unitary_of = |ch: &Channel| -> Result<ComplexMatrix, DualityError> {
        if let ChannelRepr::MixtureOfReversibles { terms } = &ch.repr {
            if terms.len() == 1 {
                if let ReversiblePayload::Unitary(u) = &terms[0].1.payload {
                    return Ok(u.clone());
                }
            }
        }
        Err(DualityError::DimensionMismatch(
            "exchange residual needs single-unitary channels".into(),
        ))
    };
    let uc = unitary_of(c)?;
    let ud = unitary_of(d)?;
    // (C x D) Psi has amplitude matrix C M D^T; SWAP Psi has M^T
    let moved = &uc.0 * &psi.amplitudes.0 * ud.0.transpose();
    let swapped = PureBipartiteState::new(ComplexMatrix(psi.amplitudes.0.transpose()))?;
    let moved_state = PureBipartiteState::new(ComplexMatrix(moved))?;
    Ok(swapped.phase_aligned_distance(&moved_state))
}

/// Seeded random pure bipartite state (Gaussian amplitudes, normalized).
pub fn random_pure_bipartite(dim_a: usize, dim_b: usize, seed: u64) -> PureBipartiteState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut amp = ComplexMatrix::zeros(dim_a, dim_b);
    for i in 0..dim_a {
        for j in 0..dim_b {
            amp.0[(i, j)] = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        }
    }
    let norm: f64 = amp.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    PureBipartiteState::new(amp.scale(1.0 / norm)).expect("normalized by construction")
}
