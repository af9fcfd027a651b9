//! Geometry of the two polytope toy models: the square bit (dihedral group
//! of order 8 acting on the vertices of a square) and the half disk
//! (identity and reflection only).

/// Square-bit vertices, counterclockwise from the upper-left corner; the
/// normalisation coordinate is implicit, so `alpha_1 = (-1, 1)`, `alpha_2 = (-1, -1)`, `alpha_3 = (1, -1)`,
/// `alpha_4 = (1, 1)`.
pub const SQUARE_VERTICES: [(f64, f64); 4] = [(-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (1.0, 1.0)];

/// The eight symmetries of the square as integer 2x2 matrices acting on
/// `(x, y)`: rotations by `0, 90, 180, 270` degrees, then reflections
/// across the x axis, the y axis, the diagonal `y = x`, and the
/// anti-diagonal `y = -x`.
pub const DIHEDRAL_ELEMENTS: [[[i32; 2]; 2]; 8] = [
    [[1, 0], [0, 1]],
    [[0, -1], [1, 0]],
    [[-1, 0], [0, -1]],
    [[0, 1], [-1, 0]],
    [[1, 0], [0, -1]],
    [[-1, 0], [0, 1]],
    [[0, 1], [1, 0]],
    [[0, -1], [-1, 0]],
];

/// Inverse element index in [`DIHEDRAL_ELEMENTS`].
pub const DIHEDRAL_INVERSE: [usize; 8] = [0, 3, 2, 1, 4, 5, 6, 7];

pub fn dihedral_apply(element: usize, x: f64, y: f64) -> (f64, f64) {
    let m = &DIHEDRAL_ELEMENTS[element];
    (
        m[0][0] as f64 * x + m[0][1] as f64 * y,
        m[1][0] as f64 * x + m[1][1] as f64 * y,
    )
}

/// Image of a vertex index under a dihedral element, computed exactly.
pub fn dihedral_apply_vertex(element: usize, vertex: usize) -> usize {
    let (x, y) = SQUARE_VERTICES[vertex];
    let (xx, yy) = dihedral_apply(element, x, y);
    vertex_index(xx, yy).expect("dihedral elements permute the vertices")
}

pub fn vertex_index(x: f64, y: f64) -> Option<usize> {
    SQUARE_VERTICES
        .iter()
        .position(|&(vx, vy)| (vx - x).abs() < 1e-9 && (vy - y).abs() < 1e-9)
}

/// Canonical certifying effect for a square-bit vertex: the edge functional
/// `(v_y * y + 1) / 2`, which is 1 on the vertex and 0 on any vertex with
/// opposite `y` coordinate. Vertex daggers are not unique in this model.
pub fn vertex_dagger(vertex: usize) -> [f64; 3] {
    let (_, vy) = SQUARE_VERTICES[vertex];
    [0.0, vy / 2.0, 0.5]
}

/// Distinguishing effect separating vertex `i` (value 1) from vertex `j`
/// (value 0); prefers the `y` edge functional when the pair differs in `y`.
pub fn separating_effect(i: usize, j: usize) -> [f64; 3] {
    let (ix, iy) = SQUARE_VERTICES[i];
    let (_, jy) = SQUARE_VERTICES[j];
    if (iy - jy).abs() > 1e-9 {
        [0.0, iy / 2.0, 0.5]
    } else {
        [ix / 2.0, 0.0, 0.5]
    }
}

/// Whether `(x, y)` lies in the square `|x| <= 1, |y| <= 1`.
pub fn in_square(x: f64, y: f64, tol: f64) -> bool {
    x.abs() <= 1.0 + tol && y.abs() <= 1.0 + tol
}

/// Whether `(x, y)` lies in the half disk `x^2 + y^2 <= 1, y >= 0`.
pub fn in_half_disk(x: f64, y: f64, tol: f64) -> bool {
    x * x + y * y <= 1.0 + tol && y >= -tol
}

/// Whether `(x, y)` is a pure half-disk state, i.e. on the half circle.
pub fn on_half_circle(x: f64, y: f64, tol: f64) -> bool {
    (x * x + y * y - 1.0).abs() <= tol && y >= -tol
}

/// Half-disk reflection through the symmetry axis, `theta -> pi - theta`.
pub fn half_disk_reflect(x: f64, y: f64) -> (f64, f64) {
    (-x, y)
}

/// Canonical two-point decomposition of a half-disk state along the chord
/// perpendicular to the symmetry axis: `(x, y)` is a mixture of the pure
/// states `(+sqrt(1-y^2), y)` and `(-sqrt(1-y^2), y)`.
pub fn half_disk_decomposition(x: f64, y: f64) -> Vec<(f64, (f64, f64))> {
    let reach = (1.0 - y * y).max(0.0).sqrt();
    if reach < 1e-12 {
        return vec![(1.0, (0.0, 1.0))];
    }
    let lambda = ((x / reach) + 1.0) / 2.0;
    vec![
        (lambda, (reach, y)),
        (1.0 - lambda, (-reach, y)),
    ]
}

/// Canonical vertex decomposition of a square-bit state: barycentric
/// coordinates in one of the two triangles of the fan through the diagonal
/// `alpha_1 alpha_3` (the line `x + y = 0`).
pub fn square_decomposition(x: f64, y: f64) -> Vec<(f64, usize)> {
    // triangle (a1, a2, a3) below the diagonal, (a1, a3, a4) above
    let (va, vb, vc) = if x + y <= 0.0 { (0, 1, 2) } else { (0, 2, 3) };
    let (ax, ay) = SQUARE_VERTICES[va];
    let (bx, by) = SQUARE_VERTICES[vb];
    let (cx, cy) = SQUARE_VERTICES[vc];
    let det = (bx - ax) * (cy - ay) - (cx - ax) * (by - ay);
    let wb = ((x - ax) * (cy - ay) - (cx - ax) * (y - ay)) / det;
    let wc = ((bx - ax) * (y - ay) - (x - ax) * (by - ay)) / det;
    let wa = 1.0 - wb - wc;
    [(wa, va), (wb, vb), (wc, vc)]
        .into_iter()
        .filter(|(w, _)| *w > 1e-12)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dihedral_is_a_group_of_eight_distinct_permutations() {
        let mut seen = std::collections::BTreeSet::new();
        for e in 0..8 {
            let perm: Vec<usize> = (0..4).map(|v| dihedral_apply_vertex(e, v)).collect();
            seen.insert(perm);
        }
        assert_eq!(seen.len(), 8);
    }

    #[test]
    fn dihedral_inverses_compose_to_identity() {
        for e in 0..8 {
            for v in 0..4 {
                let w = dihedral_apply_vertex(e, v);
                assert_eq!(dihedral_apply_vertex(DIHEDRAL_INVERSE[e], w), v);
            }
        }
    }

    #[test]
    fn x_axis_reflection_swaps_alpha1_alpha2() {
        // (x, y) -> (x, -y) is element 4
        assert_eq!(dihedral_apply_vertex(4, 0), 1);
        assert_eq!(dihedral_apply_vertex(4, 1), 0);
    }

    #[test]
    fn square_decomposition_reconstructs() {
        for &(x, y) in &[(0.0, 0.0), (0.3, -0.7), (-0.2, 0.9), (1.0, 1.0), (0.5, 0.5)] {
            let terms = square_decomposition(x, y);
            let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
            for (w, v) in &terms {
                let (vx, vy) = SQUARE_VERTICES[*v];
                sx += w * vx;
                sy += w * vy;
                sw += w;
            }
            assert!((sx - x).abs() < 1e-12 && (sy - y).abs() < 1e-12);
            assert!((sw - 1.0).abs() < 1e-12);
            assert!(terms.iter().all(|(w, _)| *w >= 0.0));
        }
    }

    #[test]
    fn half_disk_decomposition_reconstructs_on_pure_states() {
        for &(x, y) in &[(0.0, 0.0), (0.5, 0.2), (-0.3, 0.6), (0.0, 1.0)] {
            let terms = half_disk_decomposition(x, y);
            let (mut sx, mut sy) = (0.0, 0.0);
            for (w, (px, py)) in &terms {
                assert!(on_half_circle(*px, *py, 1e-9));
                sx += w * px;
                sy += w * py;
            }
            assert!((sx - x).abs() < 1e-12 && (sy - y).abs() < 1e-12);
        }
    }
}
