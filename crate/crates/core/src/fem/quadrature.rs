//! Triangle quadrature.

/// Seven-point rule exact for polynomials of degree 5, as
/// `(barycentric coordinates, weight)` with weights summing to one.
pub fn degree5_rule() -> [([f64; 3], f64); 7] {
    let s15 = 15f64.sqrt();
    let a1 = (6.0 - s15) / 21.0;
    let b1 = (9.0 + 2.0 * s15) / 21.0;
    let w1 = (155.0 - s15) / 1200.0;
    let a2 = (6.0 + s15) / 21.0;
    let b2 = (9.0 - 2.0 * s15) / 21.0;
    let w2 = (155.0 + s15) / 1200.0;
    let third = 1.0 / 3.0;
    [
        ([third, third, third], 9.0 / 40.0),
        ([b1, a1, a1], w1),
        ([a1, b1, a1], w1),
        ([a1, a1, b1], w1),
        ([b2, a2, a2], w2),
        ([a2, b2, a2], w2),
        ([a2, a2, b2], w2),
    ]
}

pub(crate) fn map_point(v: &[[f64; 2]; 3], bary: &[f64; 3]) -> [f64; 2] {
    [
        bary[0] * v[0][0] + bary[1] * v[1][0] + bary[2] * v[2][0],
        bary[0] * v[0][1] + bary[1] * v[1][1] + bary[2] * v[2][1],
    ]
}

pub(crate) fn signed_area(v: &[[f64; 2]; 3]) -> f64 {
    0.5 * ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]))
}

/// Constant gradients of the three barycentric hat functions.
pub(crate) fn hat_gradients(v: &[[f64; 2]; 3]) -> [[f64; 2]; 3] {
    let two_area = 2.0 * signed_area(v);
    let mut g = [[0.0; 2]; 3];
    for a in 0..3 {
        let b = v[(a + 1) % 3];
        let c = v[(a + 2) % 3];
        g[a] = [(b[1] - c[1]) / two_area, (c[0] - b[0]) / two_area];
    }
    g
}
