//! JSON wire formats for states, bipartite states and channels.
//!
//! Complex matrices travel as parallel real/imaginary row-major arrays, so
//! every payload is language-neutral and bit-exact:
//!
//! ```json
//! {"model": {"kind": "quantum", "d": 2},
//!  "payload": {"re": [[1.0, 0.0], [0.0, 0.0]], "im": [[0.0, 0.0], [0.0, 0.0]]}}
//! ```
//!
//! Doubled-quantum payloads carry `block0`/`block1`, classical payloads
//! `probs`, and the planar models `xy`.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use microtherm_core::models::{State, StatePayload, SystemKind, TheoryModel};
use microtherm_core::numerics::ComplexMatrix;

#[derive(Debug, Serialize, Deserialize)]
pub struct WireState {
    pub model: WireModel,
    pub payload: WirePayload,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WireModel {
    Classical { d: usize },
    Quantum { d: usize },
    DoubledQuantum { sector_dim: usize },
    SquareBit,
    HalfDisk,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReIm {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl ReIm {
    fn to_matrix(&self) -> Result<ComplexMatrix> {
        ComplexMatrix::from_re_im(&self.re, &self.im).map_err(|e| anyhow::anyhow!(e))
    }

    fn from_matrix(m: &ComplexMatrix) -> Self {
        let (re, im) = m.to_re_im();
        Self { re, im }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WirePayload {
    Blocks { block0: ReIm, block1: ReIm },
    Matrix { re: Vec<Vec<f64>>, im: Vec<Vec<f64>> },
    Probs { probs: Vec<f64> },
    Planar { xy: [f64; 2] },
}

impl WireState {
    pub fn into_state(self) -> Result<State> {
        let model = match self.model {
            WireModel::Classical { d } => TheoryModel::classical(d),
            WireModel::Quantum { d } => TheoryModel::quantum(d),
            WireModel::DoubledQuantum { sector_dim } => TheoryModel::doubled_quantum(sector_dim),
            WireModel::SquareBit => TheoryModel::square_bit(),
            WireModel::HalfDisk => TheoryModel::half_disk(),
        };
        let payload = match (&model.kind, self.payload) {
            (SystemKind::Classical { .. }, WirePayload::Probs { probs }) => {
                StatePayload::Probabilities(probs)
            }
            (SystemKind::Quantum { .. }, WirePayload::Matrix { re, im }) => StatePayload::Density(
                ComplexMatrix::from_re_im(&re, &im).map_err(|e| anyhow::anyhow!(e))?,
            ),
            (SystemKind::DoubledQuantum { .. }, WirePayload::Blocks { block0, block1 }) => {
                StatePayload::Blocks {
                    block0: block0.to_matrix()?,
                    block1: block1.to_matrix()?,
                }
            }
            (SystemKind::SquareBit | SystemKind::HalfDisk, WirePayload::Planar { xy }) => {
                StatePayload::Planar { x: xy[0], y: xy[1] }
            }
            (kind, _) => bail!("payload shape does not match model kind {kind}"),
        };
        Ok(State { model, payload })
    }

    pub fn from_state(state: &State) -> Result<Self> {
        let model = match state.model.kind {
            SystemKind::Classical { d } => WireModel::Classical { d },
            SystemKind::Quantum { d } => WireModel::Quantum { d },
            SystemKind::DoubledQuantum { sector_dim } => WireModel::DoubledQuantum { sector_dim },
            SystemKind::SquareBit => WireModel::SquareBit,
            SystemKind::HalfDisk => WireModel::HalfDisk,
        };
        let payload = match &state.payload {
            StatePayload::Probabilities(p) => WirePayload::Probs { probs: p.clone() },
            StatePayload::Density(m) => {
                let (re, im) = m.to_re_im();
                WirePayload::Matrix { re, im }
            }
            StatePayload::Blocks { block0, block1 } => WirePayload::Blocks {
                block0: ReIm::from_matrix(block0),
                block1: ReIm::from_matrix(block1),
            },
            StatePayload::Planar { x, y } => WirePayload::Planar { xy: [*x, *y] },
        };
        Ok(Self { model, payload })
    }
}

/// Pure bipartite states travel as dims plus row-major flat amplitudes.
#[derive(Debug, Serialize, Deserialize)]
pub struct WireBipartite {
    pub dims: [usize; 2],
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl WireBipartite {
    pub fn into_state(self) -> Result<microtherm_core::duality::PureBipartiteState> {
        let [da, db] = self.dims;
        if self.re.len() != da * db || self.im.len() != da * db {
            bail!(
                "amplitude list has {} entries, expected {}",
                self.re.len(),
                da * db
            );
        }
        let entries: Vec<num_complex::Complex64> = self
            .re
            .iter()
            .zip(&self.im)
            .map(|(&r, &i)| num_complex::Complex64::new(r, i))
            .collect();
        microtherm_core::duality::PureBipartiteState::new(ComplexMatrix::from_rows(
            da, db, &entries,
        ))
        .context("amplitudes do not form a normalized pure state")
    }
}

pub fn read_state(path: &std::path::Path) -> Result<State> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read state file {}", path.display()))?;
    let wire: WireState = serde_json::from_str(&text)
        .with_context(|| format!("cannot parse state file {}", path.display()))?;
    let state = wire.into_state()?;
    state
        .validate(&microtherm_core::numerics::Tolerance::default())
        .with_context(|| format!("invalid state in {}", path.display()))?;
    Ok(state)
}

pub fn read_bipartite(path: &std::path::Path) -> Result<microtherm_core::duality::PureBipartiteState> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read state file {}", path.display()))?;
    let wire: WireBipartite = serde_json::from_str(&text)
        .with_context(|| format!("cannot parse bipartite state file {}", path.display()))?;
    wire.into_state()
}
