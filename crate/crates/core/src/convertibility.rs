//! Decision procedures for state convertibility under random-reversible,
//! noisy, and unital operations, with constructive witnesses.
//!
//! For classical and quantum systems all three relations coincide with
//! majorisation of spectra, and every positive answer carries an explicit
//! witness channel. For doubled quantum systems the sector masses are an
//! invariant of every modeled reversible (and hence of every mixture), so
//! unequal masses refute random-reversible convertibility; when masses
//! agree, a sector-respecting witness is searched for, and absent one the
//! answer is reported as unknown rather than guessed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channels::{
    noisy_realization, rare_from_birkhoff, unital_from_doubly_stochastic, Channel, ChannelError,
    NoisyRealization,
};
use crate::majorisation::{
    first_violated_prefix, hlp_witness, majorises, MajorisationError, Spectrum,
};
use crate::models::{
    diagonalise, dqt_set_from_kets, ModelError, State, StatePayload, SystemKind, TheoryModel,
};
use crate::numerics::{hermitian_eigendecomposition, ComplexMatrix, Tolerance};

#[derive(Debug, Error)]
pub enum ConvertibilityError {
    #[error("spectra are not unique for {0}; convertibility undefined")]
    NonUniqueSpectrum(String),
    #[error("convertibility unsupported for {0}")]
    Unsupported(String),
    #[error("states live on different models: {0} vs {1}")]
    ModelMismatch(String, String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Majorisation(#[from] MajorisationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    RaRe,
    Noisy,
    Unital,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Answer {
    Yes,
    No,
    Unknown,
}

/// Outcome of a convertibility decision. A positive answer carries a
/// witness channel mapping the source to the target; a negative one
/// carries the violated invariant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvertibilityVerdict {
    pub relation: Relation,
    pub answer: Answer,
    pub witness: Option<Channel>,
    /// Ancilla realization of the witness, when the relation is noisy and
    /// the witness weights rationalize.
    pub realization: Option<NoisyRealization>,
    pub obstruction: Option<String>,
}

impl ConvertibilityVerdict {
    fn yes(relation: Relation, witness: Channel) -> Self {
        Self {
            relation,
            answer: Answer::Yes,
            witness: Some(witness),
            realization: None,
            obstruction: None,
        }
    }

    fn no(relation: Relation, obstruction: String) -> Self {
        Self {
            relation,
            answer: Answer::No,
            witness: None,
            realization: None,
            obstruction: Some(obstruction),
        }
    }

    fn unknown(relation: Relation, note: String) -> Self {
        Self {
            relation,
            answer: Answer::Unknown,
            witness: None,
            realization: None,
            obstruction: Some(note),
        }
    }
}

fn require_same_model(rho: &State, sigma: &State) -> Result<(), ConvertibilityError> {
    if rho.model != sigma.model {
        return Err(ConvertibilityError::ModelMismatch(
            rho.model.to_string(),
            sigma.model.to_string(),
        ));
    }
    Ok(())
}

fn require_unique_spectra(model: &TheoryModel) -> Result<(), ConvertibilityError> {
    match model.kind {
        SystemKind::Classical { .. }
        | SystemKind::Quantum { .. }
        | SystemKind::DoubledQuantum { .. } => Ok(()),
        _ => Err(ConvertibilityError::NonUniqueSpectrum(model.to_string())),
    }
}

/// Convertibility by a unital channel: decided by majorisation of the
/// spectra, with the measure-and-prepare witness built over the eigenbases.
pub fn unital_convertible(
    rho: &State,
    sigma: &State,
    tol: &Tolerance,
) -> Result<ConvertibilityVerdict, ConvertibilityError> {
    require_same_model(rho, sigma)?;
    require_unique_spectra(&rho.model)?;
    let diag_rho = diagonalise(rho, tol)?;
    let diag_sigma = diagonalise(sigma, tol)?;
    let p = &diag_rho.spectrum;
    let q = &diag_sigma.spectrum;
    if !majorises(p, q, tol) {
        let prefix = first_violated_prefix(p, q, tol).unwrap_or(p.len());
        return Ok(ConvertibilityVerdict::no(
            Relation::Unital,
            format!("majorisation fails at prefix {prefix}"),
        ));
    }
    let witness_matrix = hlp_witness(p, q, tol)?;
    let witness = unital_from_doubly_stochastic(
        &rho.model,
        witness_matrix,
        diag_rho.eigenbasis.expect("unique-spectrum models carry a basis"),
        diag_sigma.eigenbasis.expect("unique-spectrum models carry a basis"),
    )?;
    Ok(ConvertibilityVerdict::yes(Relation::Unital, witness))
}

/// Convertibility by a random-reversible channel.
///
/// Classical and quantum systems mirror majorisation (with the Birkhoff
/// witness); doubled systems first check the sector-mass invariant, then
/// look for a sector-respecting witness, and otherwise answer unknown.
pub fn rare_convertible(
    rho: &State,
    sigma: &State,
    tol: &Tolerance,
) -> Result<ConvertibilityVerdict, ConvertibilityError> {
    require_same_model(rho, sigma)?;
    match rho.model.kind {
        SystemKind::Classical { .. } | SystemKind::Quantum { .. } => {
            let diag_rho = diagonalise(rho, tol)?;
            let diag_sigma = diagonalise(sigma, tol)?;
            let p = &diag_rho.spectrum;
            let q = &diag_sigma.spectrum;
            if !majorises(p, q, tol) {
                let prefix = first_violated_prefix(p, q, tol).unwrap_or(p.len());
                return Ok(ConvertibilityVerdict::no(
                    Relation::RaRe,
                    format!("majorisation fails at prefix {prefix}"),
                ));
            }
            let matrix = hlp_witness(p, q, tol)?;
            let witness = rare_from_birkhoff(
                &rho.model,
                diag_rho.eigenbasis.as_ref().expect("basis"),
                diag_sigma.eigenbasis.as_ref().expect("basis"),
                &matrix,
                tol,
            )?;
            Ok(ConvertibilityVerdict::yes(Relation::RaRe, witness))
        }
        SystemKind::DoubledQuantum { .. } => dqt_rare_convertible(rho, sigma, tol),
        _ => Err(ConvertibilityError::Unsupported(rho.model.to_string())),
    }
}

fn dqt_rare_convertible(
    rho: &State,
    sigma: &State,
    tol: &Tolerance,
) -> Result<ConvertibilityVerdict, ConvertibilityError> {
    let (rho_m0, rho_m1) = dqt_sector_mass(rho)?;
    let (sigma_m0, sigma_m1) = dqt_sector_mass(sigma)?;
    if (rho_m0 - sigma_m0).abs() > tol.eq_tol {
        return Ok(ConvertibilityVerdict::no(
            Relation::RaRe,
            format!(
                "sector mass ({rho_m0:.6}, {rho_m1:.6}) != ({sigma_m0:.6}, {sigma_m1:.6}); \
                 every reversible preserves it, hence every mixture does"
            ),
        ));
    }
    // per-sector spectra and eigenbases
    let (StatePayload::Blocks { block0: r0, block1: r1 }, StatePayload::Blocks { block0: s0, block1: s1 }) =
        (&rho.payload, &sigma.payload)
    else {
        return Err(ConvertibilityError::Model(ModelError::InvalidState(
            "expected sector blocks".into(),
        )));
    };
    let (pv0, rvec0) = hermitian_eigendecomposition(r0, tol)
        .map_err(|e| ModelError::InvalidState(e.to_string()))?;
    let (pv1, rvec1) = hermitian_eigendecomposition(r1, tol)
        .map_err(|e| ModelError::InvalidState(e.to_string()))?;
    let (qv0, svec0) = hermitian_eigendecomposition(s0, tol)
        .map_err(|e| ModelError::InvalidState(e.to_string()))?;
    let (qv1, svec1) = hermitian_eigendecomposition(s1, tol)
        .map_err(|e| ModelError::InvalidState(e.to_string()))?;
    if !prefix_dominates(&pv0, &qv0, tol) || !prefix_dominates(&pv1, &qv1, tol) {
        return Ok(ConvertibilityVerdict::unknown(
            Relation::RaRe,
            "sector masses agree but no sector-respecting witness exists; \
             convertibility beyond sector-preserving mixtures is not decided"
                .into(),
        ));
    }
    // sector-respecting witness: per-sector matrices and a product mixture
    let witness = dqt_sector_witness(
        &rho.model,
        (&pv0, &rvec0, &qv0, &svec0),
        (&pv1, &rvec1, &qv1, &svec1),
        tol,
    )?;
    Ok(ConvertibilityVerdict::yes(Relation::RaRe, witness))
}

/// Prefix domination of unnormalized descending vectors with equal totals.
fn prefix_dominates(p: &[f64], q: &[f64], tol: &Tolerance) -> bool {
    let d = p.len().max(q.len());
    let (mut sp, mut sq) = (0.0, 0.0);
    for k in 0..d {
        sp += p.get(k).copied().unwrap_or(0.0);
        sq += q.get(k).copied().unwrap_or(0.0);
        if k + 1 < d && sp < sq - tol.eq_tol {
            return false;
        }
    }
    (sp - sq).abs() <= tol.eq_tol
}

type SectorData<'a> = (&'a [f64], &'a ComplexMatrix, &'a [f64], &'a ComplexMatrix);

/// Builds the product mixture of sector-preserving reversibles realizing
/// per-sector doubly stochastic witnesses.
fn dqt_sector_witness(
    model: &TheoryModel,
    sector0: SectorData,
    sector1: SectorData,
    tol: &Tolerance,
) -> Result<Channel, ConvertibilityError> {
    let SystemKind::DoubledQuantum { sector_dim } = model.kind else {
        unreachable!()
    };
    let columns = |kets: &ComplexMatrix| -> Vec<ComplexMatrix> {
        (0..sector_dim).map(|j| kets.column(j)).collect()
    };
    // basis ordering: sector-0 eigenvectors then sector-1 eigenvectors,
    // each aligned with its own descending sector spectrum
    let (p0, rvec0, q0, svec0) = sector0;
    let (p1, rvec1, q1, svec1) = sector1;
    let sectors: Vec<u8> = std::iter::repeat_n(0u8, sector_dim)
        .chain(std::iter::repeat_n(1u8, sector_dim))
        .collect();
    let mut in_kets = columns(rvec0);
    in_kets.extend(columns(rvec1));
    let mut out_kets = columns(svec0);
    out_kets.extend(columns(svec1));
    let basis_in = dqt_set_from_kets(model, sectors.clone(), in_kets);
    let basis_out = dqt_set_from_kets(model, sectors, out_kets);
    // block-diagonal doubly stochastic matrix from per-sector witnesses
    let mass0: f64 = p0.iter().sum();
    let mass1: f64 = p1.iter().sum();
    let d = 2 * sector_dim;
    let mut combined = nalgebra::DMatrix::<f64>::zeros(d, d);
    for (offset, (mass, pv, qv)) in [(0usize, (mass0, p0, q0)), (sector_dim, (mass1, p1, q1))] {
        let block = if mass > tol.eq_tol {
            let pn: Vec<f64> = pv.iter().map(|x| x / mass).collect();
            let qn: Vec<f64> = qv.iter().map(|x| x / mass).collect();
            let ps = Spectrum::new(&pn, tol)?;
            let qs = Spectrum::new(&qn, tol)?;
            hlp_witness(&ps, &qs, tol)?.matrix()
        } else {
            nalgebra::DMatrix::identity(sector_dim, sector_dim)
        };
        for i in 0..sector_dim {
            for j in 0..sector_dim {
                combined[(offset + i, offset + j)] = block[(i, j)];
            }
        }
    }
    let matrix = crate::majorisation::DoublyStochasticMatrix::new(combined, tol)?;
    Ok(rare_from_birkhoff(model, &basis_in, &basis_out, &matrix, tol)?)
}

/// Convertibility by a noisy operation. Classical and quantum verdicts
/// collapse onto the random-reversible ones; the quantum witness is
/// additionally realized through the control-unitary construction when its
/// weights rationalize. For doubled systems the verdict is sandwiched:
/// refuted by unital, certified by random-reversible, otherwise unknown.
pub fn noisy_convertible(
    rho: &State,
    sigma: &State,
    tol: &Tolerance,
) -> Result<ConvertibilityVerdict, ConvertibilityError> {
    require_same_model(rho, sigma)?;
    match rho.model.kind {
        SystemKind::Classical { .. } | SystemKind::Quantum { .. } => {
            let rare = rare_convertible(rho, sigma, tol)?;
            let mut verdict = ConvertibilityVerdict {
                relation: Relation::Noisy,
                ..rare
            };
            if verdict.answer == Answer::Yes {
                if let Some(witness) = &verdict.witness {
                    verdict.realization = noisy_realization(witness).ok();
                }
            }
            Ok(verdict)
        }
        SystemKind::DoubledQuantum { .. } => {
            let unital = unital_convertible(rho, sigma, tol)?;
            if unital.answer == Answer::No {
                return Ok(ConvertibilityVerdict::no(
                    Relation::Noisy,
                    unital
                        .obstruction
                        .unwrap_or_else(|| "unital refutation".into()),
                ));
            }
            let rare = rare_convertible(rho, sigma, tol)?;
            match rare.answer {
                Answer::Yes => Ok(ConvertibilityVerdict {
                    relation: Relation::Noisy,
                    ..rare
                }),
                _ => Ok(ConvertibilityVerdict::unknown(
                    Relation::Noisy,
                    "between the unital and random-reversible relations; \
                     not settled for doubled systems"
                        .into(),
                )),
            }
        }
        _ => Err(ConvertibilityError::Unsupported(rho.model.to_string())),
    }
}

/// Sector masses `(tr block0, tr block1)` of a doubled-quantum state; an
/// exact invariant of every sector-preserving reversible and mixture.
pub fn dqt_sector_mass(s: &State) -> Result<(f64, f64), ConvertibilityError> {
    match (&s.model.kind, &s.payload) {
        (SystemKind::DoubledQuantum { .. }, StatePayload::Blocks { block0, block1 }) => {
            Ok((block0.trace().re, block1.trace().re))
        }
        _ => Err(ConvertibilityError::ModelMismatch(
            s.model.to_string(),
            "doubled_quantum".into(),
        )),
    }
}

/// The doubled-qubit pair separating majorisation from random-reversible
/// convertibility, with every intermediate quantity recorded.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub model: TheoryModel,
    pub rho: State,
    pub sigma: State,
    /// Nonzero spectra; both are the half-half pair.
    pub rho_spectrum: Vec<f64>,
    pub sigma_spectrum: Vec<f64>,
    pub rho_sector_mass: (f64, f64),
    pub sigma_sector_mass: (f64, f64),
    pub unital_forward: Answer,
    pub unital_backward: Answer,
    pub rare_forward: Answer,
    pub rare_obstruction: Option<String>,
    pub noisy_forward: Answer,
    /// Whether the asserted separation reproduced: equal spectra, unital
    /// convertibility both ways, unequal sector masses, and a refuted
    /// random-reversible conversion.
    pub reproduced: bool,
}

/// Builds the doubled-qubit states `rho` (an even-sector half-half
/// mixture) and `sigma` (one half in each sector), and decides all three
/// relations between them.
pub fn counterexample_report(tol: &Tolerance) -> Result<CounterexampleReport, ConvertibilityError> {
    let model = TheoryModel::doubled_quantum(2);
    let rho = State {
        model: model.clone(),
        payload: StatePayload::Blocks {
            block0: ComplexMatrix::from_real(2, 2, &[0.5, 0.0, 0.0, 0.5]),
            block1: ComplexMatrix::zeros(2, 2),
        },
    };
    let sigma = State {
        model: model.clone(),
        payload: StatePayload::Blocks {
            block0: ComplexMatrix::from_real(2, 2, &[0.5, 0.0, 0.0, 0.0]),
            block1: ComplexMatrix::from_real(2, 2, &[0.5, 0.0, 0.0, 0.0]),
        },
    };
    let rho_spectrum = diagonalise(&rho, tol)?.spectrum.trimmed(tol.psd_tol);
    let sigma_spectrum = diagonalise(&sigma, tol)?.spectrum.trimmed(tol.psd_tol);
    let rho_sector_mass = dqt_sector_mass(&rho)?;
    let sigma_sector_mass = dqt_sector_mass(&sigma)?;
    let unital_forward = unital_convertible(&rho, &sigma, tol)?;
    let unital_backward = unital_convertible(&sigma, &rho, tol)?;
    let rare_forward = rare_convertible(&rho, &sigma, tol)?;
    let noisy_forward = noisy_convertible(&rho, &sigma, tol)?;

    let spectra_match = rho_spectrum == vec![0.5, 0.5] && sigma_spectrum == vec![0.5, 0.5];
    let masses_differ = (rho_sector_mass.0 - sigma_sector_mass.0).abs() > tol.eq_tol;
    let reproduced = spectra_match
        && unital_forward.answer == Answer::Yes
        && unital_backward.answer == Answer::Yes
        && masses_differ
        && rare_forward.answer == Answer::No;

    Ok(CounterexampleReport {
        model,
        rho,
        sigma,
        rho_spectrum,
        sigma_spectrum,
        rho_sector_mass,
        sigma_sector_mass,
        unital_forward: unital_forward.answer,
        unital_backward: unital_backward.answer,
        rare_forward: rare_forward.answer,
        rare_obstruction: rare_forward.obstruction,
        noisy_forward: noisy_forward.answer,
        reproduced,
    })
}
