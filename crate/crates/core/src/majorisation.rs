//! The majorisation preorder, constructive doubly-stochastic witnesses,
//! Birkhoff decomposition, and Schur-convex purity monotones.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{is_doubly_stochastic, Tolerance};

#[derive(Debug, Error)]
pub enum MajorisationError {
    #[error("spectra have different lengths ({0} vs {1}) and padding is disabled")]
    LengthMismatch(usize, usize),
    #[error("spectrum entry {value} at index {index} is negative beyond psd_tol")]
    NegativeEntry { index: usize, value: f64 },
    #[error("spectrum sums to {sum}, expected 1 within eq_tol")]
    NotNormalized { sum: f64 },
    #[error("non-finite spectrum entry")]
    NonFinite,
    #[error("p does not majorise q (first violated prefix: {prefix})")]
    NotMajorised { prefix: usize },
    #[error("matrix is not doubly stochastic")]
    NotDoublyStochastic,
    #[error("invalid Renyi order alpha = {0}; need alpha > 0 and alpha != 1")]
    InvalidAlpha(f64),
}

/// Descending vector of eigenvalues summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    values: Vec<f64>,
}

impl Spectrum {
    /// Sorts descending, clamps entries within `psd_tol` of zero, and
    /// renormalizes. Rejects entries below `-psd_tol` and sums off by more
    /// than `eq_tol`.
    pub fn new(raw: &[f64], tol: &Tolerance) -> Result<Self, MajorisationError> {
        if raw.iter().any(|x| !x.is_finite()) {
            return Err(MajorisationError::NonFinite);
        }
        let mut values = Vec::with_capacity(raw.len());
        for (index, &value) in raw.iter().enumerate() {
            if value < -tol.psd_tol {
                return Err(MajorisationError::NegativeEntry { index, value });
            }
            values.push(value.max(0.0));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > tol.eq_tol {
            return Err(MajorisationError::NotNormalized { sum });
        }
        for v in &mut values {
            *v /= sum;
        }
        values.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
        Ok(Self { values })
    }

    pub fn uniform(d: usize) -> Self {
        Self {
            values: vec![1.0 / d as f64; d],
        }
    }

    pub fn pure(d: usize) -> Self {
        let mut values = vec![0.0; d];
        values[0] = 1.0;
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Copy with trailing entries below `tol` dropped (never empty).
    pub fn trimmed(&self, tol: f64) -> Vec<f64> {
        let mut v = self.values.clone();
        while v.len() > 1 && *v.last().unwrap() <= tol {
            v.pop();
        }
        v
    }

    fn padded(&self, len: usize) -> Vec<f64> {
        let mut v = self.values.clone();
        v.resize(len.max(v.len()), 0.0);
        v
    }
}

/// Nonnegative square matrix with unit row and column sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublyStochasticMatrix {
    entries: Vec<Vec<f64>>,
}

impl DoublyStochasticMatrix {
    pub fn new(m: DMatrix<f64>, tol: &Tolerance) -> Result<Self, MajorisationError> {
        match is_doubly_stochastic(&m, tol) {
            Ok(true) => Ok(Self::from_matrix_unchecked(&m)),
            _ => Err(MajorisationError::NotDoublyStochastic),
        }
    }

    fn from_matrix_unchecked(m: &DMatrix<f64>) -> Self {
        let entries = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
            .collect();
        Self { entries }
    }

    pub fn identity(d: usize) -> Self {
        Self::from_matrix_unchecked(&DMatrix::identity(d, d))
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| self.entries[i][j])
    }

    /// Matrix-vector product `D x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.entries
            .iter()
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Convex combination of permutation matrices reproducing a doubly
/// stochastic matrix. Permutations are stored as column-to-row maps:
/// term `(w, perm)` contributes `w` to entry `(perm[j], j)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BirkhoffDecomposition {
    pub terms: Vec<(f64, Vec<usize>)>,
}

impl BirkhoffDecomposition {
    pub fn reconstruct(&self, d: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(d, d);
        for (w, perm) in &self.terms {
            for (j, &i) in perm.iter().enumerate() {
                m[(i, j)] += w;
            }
        }
        m
    }
}

/// True iff every prefix sum of `p` dominates that of `q` within `eq_tol`
/// and the totals agree. Spectra of different lengths are zero-padded.
pub fn majorises(p: &Spectrum, q: &Spectrum, tol: &Tolerance) -> bool {
    majorises_with(p, q, true, tol).expect("padding enabled")
}

/// Padding-controlled variant; fails with `LengthMismatch` when lengths
/// differ and `pad` is false.
pub fn majorises_with(
    p: &Spectrum,
    q: &Spectrum,
    pad: bool,
    tol: &Tolerance,
) -> Result<bool, MajorisationError> {
    if !pad && p.len() != q.len() {
        return Err(MajorisationError::LengthMismatch(p.len(), q.len()));
    }
    let d = p.len().max(q.len());
    let pv = p.padded(d);
    let qv = q.padded(d);
    let mut sp = 0.0;
    let mut sq = 0.0;
    for k in 0..d {
        sp += pv[k];
        sq += qv[k];
        if k + 1 < d && sp < sq - tol.eq_tol {
            return Ok(false);
        }
    }
    Ok((sp - sq).abs() <= tol.eq_tol)
}

/// Index of the first prefix where domination fails, for obstruction reports.
pub fn first_violated_prefix(p: &Spectrum, q: &Spectrum, tol: &Tolerance) -> Option<usize> {
    let d = p.len().max(q.len());
    let pv = p.padded(d);
    let qv = q.padded(d);
    let mut sp = 0.0;
    let mut sq = 0.0;
    for k in 0..d {
        sp += pv[k];
        sq += qv[k];
        if sp < sq - tol.eq_tol {
            return Some(k + 1);
        }
    }
    None
}

/// Constructive Hardy-Littlewood-Polya witness: a doubly stochastic `D`
/// with `D p = q`, built as a product of at most `d - 1` T-transforms.
///
/// Pair selection is deterministic (lowest indices first), so witnesses are
/// reproducible.
pub fn hlp_witness(
    p: &Spectrum,
    q: &Spectrum,
    tol: &Tolerance,
) -> Result<DoublyStochasticMatrix, MajorisationError> {
    if !majorises(p, q, tol) {
        let prefix = first_violated_prefix(p, q, tol).unwrap_or(p.len().max(q.len()));
        return Err(MajorisationError::NotMajorised { prefix });
    }
    let d = p.len().max(q.len());
    let mut x = p.padded(d);
    let target = q.padded(d);
    let mut witness = DMatrix::<f64>::identity(d, d);
    // Entries matched to the target are never touched again, so each
    // transform settles at least one coordinate and the chain stops after
    // at most d - 1 steps.
    let settle_tol = 1e-13;
    let mut transforms = 0usize;
    while let Some(j) = (0..d).find(|&j| x[j] - target[j] > settle_tol) {
        let k = ((j + 1)..d)
            .find(|&k| target[k] - x[k] > settle_tol)
            .expect("majorisation guarantees a receiving coordinate");
        let give = x[j] - target[j];
        let take = target[k] - x[k];
        let delta = give.min(take);
        let t = delta / (x[j] - x[k]);
        let mut transform = DMatrix::<f64>::identity(d, d);
        transform[(j, j)] = 1.0 - t;
        transform[(j, k)] = t;
        transform[(k, j)] = t;
        transform[(k, k)] = 1.0 - t;
        if give <= take {
            x[k] += delta;
            x[j] = target[j];
        } else {
            x[j] -= delta;
            x[k] = target[k];
        }
        witness = transform * witness;
        transforms += 1;
    }
    debug_assert!(transforms < d.max(1), "T-transform chain exceeded d - 1 steps");
    DoublyStochasticMatrix::new(witness, tol)
}

/// Birkhoff decomposition by greedy peeling of perfect matchings on the
/// positive support, followed by Caratheodory pruning so that the term
/// count never exceeds `(d - 1)^2 + 1`.
pub fn birkhoff_decompose(
    ds: &DoublyStochasticMatrix,
    tol: &Tolerance,
) -> Result<BirkhoffDecomposition, MajorisationError> {
    let d = ds.dim();
    let mut residual = ds.matrix();
    let mut terms: Vec<(f64, Vec<usize>)> = Vec::new();
    loop {
        // Remaining mass read off the residual itself, so tolerance-level
        // deficits in the input cannot drive peeling past the actual mass.
        let remaining = residual.sum() / d as f64;
        if remaining <= 1e-11 {
            break;
        }
        let support_tol = (remaining * 1e-6 / d as f64).max(1e-13);
        let perm = perfect_matching(&residual, support_tol)
            .or_else(|| perfect_matching(&residual, 0.0))
            .ok_or(MajorisationError::NotDoublyStochastic)?;
        let weight = perm
            .iter()
            .enumerate()
            .map(|(j, &i)| residual[(i, j)])
            .fold(f64::INFINITY, f64::min);
        if weight <= 0.0 {
            return Err(MajorisationError::NotDoublyStochastic);
        }
        for (j, &i) in perm.iter().enumerate() {
            residual[(i, j)] = (residual[(i, j)] - weight).max(0.0);
        }
        terms.push((weight, perm));
    }
    // Distribute leftover float mass over the collected weights.
    let total: f64 = terms.iter().map(|(w, _)| w).sum();
    for (w, _) in &mut terms {
        *w /= total;
    }
    let max_terms = (d - 1) * (d - 1) + 1;
    if terms.len() > max_terms {
        caratheodory_prune(&mut terms, d, max_terms);
    }
    let decomposition = BirkhoffDecomposition { terms };
    debug_assert!(
        (decomposition.reconstruct(d) - ds.matrix())
            .iter()
            .all(|x| x.abs() <= 10.0 * tol.eq_tol),
        "Birkhoff reconstruction drifted"
    );
    Ok(decomposition)
}

/// Kuhn's augmenting-path perfect matching of columns to rows on entries
/// strictly above `threshold`. Returns `perm` with `perm[j] = matched row`.
fn perfect_matching(m: &DMatrix<f64>, threshold: f64) -> Option<Vec<usize>> {
    let d = m.nrows();
    let mut row_match: Vec<Option<usize>> = vec![None; d];
    fn try_assign(
        m: &DMatrix<f64>,
        threshold: f64,
        col: usize,
        seen: &mut [bool],
        row_match: &mut [Option<usize>],
    ) -> bool {
        let d = m.nrows();
        for row in 0..d {
            if m[(row, col)] > threshold && !seen[row] {
                seen[row] = true;
                if row_match[row].is_none()
                    || try_assign(m, threshold, row_match[row].unwrap(), seen, row_match)
                {
                    row_match[row] = Some(col);
                    return true;
                }
            }
        }
        false
    }
    for col in 0..d {
        let mut seen = vec![false; d];
        if !try_assign(m, threshold, col, &mut seen, &mut row_match) {
            return None;
        }
    }
    let mut perm = vec![0; d];
    for (row, col) in row_match.iter().enumerate() {
        perm[col.expect("perfect matching")] = row;
    }
    Some(perm)
}

/// Removes terms while preserving the convex combination, using affine
/// dependences among the vectorized permutation matrices. The Birkhoff
/// polytope has dimension `(d - 1)^2`, so any family larger than
/// `(d - 1)^2 + 1` admits a dependence.
fn caratheodory_prune(terms: &mut Vec<(f64, Vec<usize>)>, d: usize, max_terms: usize) {
    while terms.len() > max_terms {
        let m = terms.len();
        let rows = d * d + 1;
        let mut a = DMatrix::<f64>::zeros(rows, m);
        for (k, (_, perm)) in terms.iter().enumerate() {
            for (j, &i) in perm.iter().enumerate() {
                a[(i * d + j, k)] = 1.0;
            }
            a[(rows - 1, k)] = 1.0;
        }
        let svd = a.svd(false, true);
        let v_t = svd.v_t.expect("requested");
        let mut lambda: Option<Vec<f64>> = None;
        for r in 0..v_t.nrows() {
            let sv = if r < svd.singular_values.len() {
                svd.singular_values[r]
            } else {
                0.0
            };
            if sv < 1e-9 {
                lambda = Some((0..m).map(|k| v_t[(r, k)]).collect());
                break;
            }
        }
        let Some(mut lambda) = lambda else { break };
        if lambda.iter().all(|x| x.abs() < 1e-12) {
            break;
        }
        if !lambda.iter().any(|&x| x > 1e-12) {
            for x in &mut lambda {
                *x = -*x;
            }
        }
        let step = terms
            .iter()
            .zip(&lambda)
            .filter(|(_, &l)| l > 1e-12)
            .map(|((w, _), &l)| w / l)
            .fold(f64::INFINITY, f64::min);
        if !step.is_finite() {
            break;
        }
        for ((w, _), l) in terms.iter_mut().zip(&lambda) {
            *w = (*w - step * l).max(0.0);
        }
        terms.retain(|(w, _)| *w > 1e-12);
        let total: f64 = terms.iter().map(|(w, _)| w).sum();
        for (w, _) in terms.iter_mut() {
            *w /= total;
        }
    }
}

/// Negative Shannon entropy, `sum p_i ln p_i` with `0 ln 0 = 0`.
pub fn shannon_monotone(p: &Spectrum) -> f64 {
    p.values()
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum()
}

/// Order parameter for [`renyi_monotone`]; infinity selects `ln p_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RenyiOrder {
    Finite(f64),
    Infinity,
}

/// Negative Renyi entropy `-(1/(1-alpha)) ln sum p_i^alpha`.
pub fn renyi_monotone(p: &Spectrum, alpha: RenyiOrder) -> Result<f64, MajorisationError> {
    match alpha {
        RenyiOrder::Infinity => Ok(p.values()[0].ln()),
        RenyiOrder::Finite(a) => {
            if a <= 0.0 || a == 1.0 {
                return Err(MajorisationError::InvalidAlpha(a));
            }
            let sum: f64 = p
                .values()
                .iter()
                .filter(|&&x| x > 0.0)
                .map(|&x| x.powf(a))
                .sum();
            Ok(-(1.0 / (1.0 - a)) * sum.ln())
        }
    }
}

/// Samples `trials` majorisation-ordered pairs `p >= q` (with `q` produced
/// from `p` by random T-transforms) and checks that `monotone` never
/// increases along the order beyond `eq_tol` slack.
pub fn schur_convexity_probe<F: Fn(&Spectrum) -> f64>(
    monotone: F,
    d: usize,
    trials: usize,
    seed: u64,
    tol: &Tolerance,
) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let p = random_spectrum(d, &mut rng);
        let q = t_transformed(&p, d, &mut rng, tol);
        debug_assert!(majorises(&p, &q, tol));
        if monotone(&p) < monotone(&q) - tol.eq_tol {
            return false;
        }
    }
    true
}

/// Flat-Dirichlet random spectrum.
pub fn random_spectrum<R: Rng>(d: usize, rng: &mut R) -> Spectrum {
    let mut values: Vec<f64> = (0..d).map(|_| -rng.gen::<f64>().max(1e-16).ln()).collect();
    let sum: f64 = values.iter().sum();
    for v in &mut values {
        *v /= sum;
    }
    values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Spectrum { values }
}

/// Applies `d` random T-transforms to `p`, producing a spectrum it majorises.
pub fn t_transformed<R: Rng>(p: &Spectrum, d: usize, rng: &mut R, tol: &Tolerance) -> Spectrum {
    let mut x = p.values().to_vec();
    for _ in 0..d {
        let j = rng.gen_range(0..d);
        let k = rng.gen_range(0..d);
        if j == k {
            continue;
        }
        let t = rng.gen::<f64>() * 0.5;
        let (xj, xk) = (x[j], x[k]);
        x[j] = (1.0 - t) * xj + t * xk;
        x[k] = t * xj + (1.0 - t) * xk;
    }
    Spectrum::new(&x, tol).expect("T-transforms preserve the simplex")
}
