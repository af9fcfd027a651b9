//! Independent linear-feasibility oracle for majorisation, used only by
//! the acceptance suite.
//!
//! `q = D p` is solvable over doubly stochastic `D` exactly when `q` lies
//! in the convex hull of the coordinate permutations of `p` (the images of
//! `p` under the Birkhoff-polytope vertices). Feasibility of
//! `sum_k lambda_k P_k p = q, sum_k lambda_k = 1, lambda >= 0` is decided
//! by a phase-1 simplex with Bland's rule. Enumerating all `d!` vertices
//! is viable for `d <= 5` (120 permutations).

/// Decides whether some doubly stochastic matrix maps `p` to `q`.
pub fn doubly_stochastic_feasible(p: &[f64], q: &[f64]) -> bool {
    let d = p.len().max(q.len());
    let mut pv = p.to_vec();
    pv.resize(d, 0.0);
    let mut qv = q.to_vec();
    qv.resize(d, 0.0);
    // columns: permuted copies of p, plus the convexity row of ones
    let mut columns: Vec<Vec<f64>> = Vec::new();
    permute_all(&pv, &mut columns);
    let mut a = vec![vec![0.0; columns.len()]; d + 1];
    for (k, column) in columns.iter().enumerate() {
        for i in 0..d {
            a[i][k] = column[i];
        }
        a[d][k] = 1.0;
    }
    let mut b = qv;
    b.push(1.0);
    phase_one_feasible(&a, &b, 1e-9)
}

fn permute_all(p: &[f64], out: &mut Vec<Vec<f64>>) {
    fn heap(k: usize, arr: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if k <= 1 {
            out.push(arr.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, arr, out);
            if k % 2 == 0 {
                arr.swap(i, k - 1);
            } else {
                arr.swap(0, k - 1);
            }
        }
    }
    let mut arr = p.to_vec();
    heap(arr.len(), &mut arr, out);
}

/// Phase-1 simplex: is `A x = b, x >= 0` feasible? Assumes `b >= 0`.
fn phase_one_feasible(a: &[Vec<f64>], b: &[f64], tol: f64) -> bool {
    let rows = a.len();
    let cols = a[0].len();
    let width = cols + rows + 1; // real vars, artificials, rhs
    let mut tableau = vec![vec![0.0; width]; rows + 1];
    for i in 0..rows {
        for j in 0..cols {
            tableau[i][j] = a[i][j];
        }
        tableau[i][cols + i] = 1.0;
        tableau[i][width - 1] = b[i];
    }
    // objective row: minimize the artificial sum; reduced costs start as
    // the negated column sums over the constraint rows
    for j in 0..cols {
        tableau[rows][j] = -(0..rows).map(|i| tableau[i][j]).sum::<f64>();
    }
    tableau[rows][width - 1] = -b.iter().sum::<f64>();

    let mut basis: Vec<usize> = (cols..cols + rows).collect();
    for _pivot in 0..10_000 {
        // Bland's rule: lowest-index improving column
        let entering = (0..cols + rows).find(|&j| tableau[rows][j] < -1e-11);
        let Some(entering) = entering else { break };
        let mut leaving: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..rows {
            if tableau[i][entering] > 1e-11 {
                let ratio = tableau[i][width - 1] / tableau[i][entering];
                if ratio < best_ratio - 1e-12
                    || (ratio < best_ratio + 1e-12
                        && leaving.map_or(true, |l| basis[i] < basis[l]))
                {
                    best_ratio = ratio;
                    leaving = Some(i);
                }
            }
        }
        let Some(leaving) = leaving else {
            break; // unbounded cannot happen for phase 1, defensive exit
        };
        // pivot
        let scale = tableau[leaving][entering];
        for j in 0..width {
            tableau[leaving][j] /= scale;
        }
        for i in 0..=rows {
            if i != leaving {
                let factor = tableau[i][entering];
                if factor.abs() > 0.0 {
                    for j in 0..width {
                        tableau[i][j] -= factor * tableau[leaving][j];
                    }
                }
            }
        }
        basis[leaving] = entering;
    }
    // feasible iff the artificial objective reached zero
    (-tableau[rows][width - 1]) <= tol
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_agrees_on_hand_cases() {
        // pure majorises uniform, not the reverse
        assert!(doubly_stochastic_feasible(&[1.0, 0.0], &[0.5, 0.5]));
        assert!(!doubly_stochastic_feasible(&[0.5, 0.5], &[1.0, 0.0]));
        // worked three-dimensional example
        assert!(doubly_stochastic_feasible(
            &[0.6, 0.3, 0.1],
            &[0.5, 0.25, 0.25]
        ));
        assert!(!doubly_stochastic_feasible(
            &[0.5, 0.25, 0.25],
            &[0.6, 0.3, 0.1]
        ));
        // reflexivity and permutation invariance
        assert!(doubly_stochastic_feasible(&[0.4, 0.35, 0.25], &[0.25, 0.4, 0.35]));
    }
}
