//! Input, output and weighting operators of the test control problem.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::quadrature::{map_point, signed_area};
use crate::fem::{
    assemble_mass, assemble_stiffness, load_vector, FemField, FemGrid, RitzProjector, SmoothField,
};
use crate::linalg::SparseMatrix;

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSetup {
    pub grid: FemGrid,
    pub diffusion: f64,
    pub lambda: f64,
    pub input_points: Vec<[f64; 2]>,
    pub output_regions: Vec<Rect>,
    pub r_scalar: f64,
    pub rb_scalar: f64,
    pub output_scale: f64,
}

impl ProblemSetup {
    /// Nine Gaussian heat sources on `{0.2, 0.5, 0.8}²`, three square output
    /// windows of side 0.1.
    pub fn default_for(grid: FemGrid) -> Self {
        let ticks = [0.2, 0.5, 0.8];
        let input_points = ticks.iter().flat_map(|&y| ticks.iter().map(move |&x| [x, y])).collect();
        Self {
            grid,
            diffusion: 1e-2,
            lambda: 1.0,
            input_points,
            output_regions: vec![
                Rect::new(0.3, 0.4, 0.3, 0.4),
                Rect::new(0.5, 0.6, 0.5, 0.6),
                Rect::new(0.9, 1.0, 0.3, 0.4),
            ],
            r_scalar: 1e-2,
            rb_scalar: 25.0,
            output_scale: 1e2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("diffusion", self.diffusion),
            ("lambda", self.lambda),
            ("r_scalar", self.r_scalar),
            ("rb_scalar", self.rb_scalar),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        let inside = |v: f64| (0.0..=1.0).contains(&v);
        if let Some(p) = self.input_points.iter().find(|p| !inside(p[0]) || !inside(p[1])) {
            return Err(Error::InvalidArgument(format!("input point {p:?} outside the unit square")));
        }
        for r in &self.output_regions {
            let ok = inside(r.x0) && inside(r.x1) && inside(r.y0) && inside(r.y1) && r.x1 > r.x0 && r.y1 > r.y0;
            if !ok {
                return Err(Error::InvalidArgument(format!("output region {r:?} is not a proper subset")));
            }
        }
        Ok(())
    }
}

/// Gaussian source `exp(−200 |x − p|²)`.
pub fn gaussian_source(p: [f64; 2]) -> impl Fn([f64; 2]) -> f64 {
    move |x| (-200.0 * ((x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2))).exp()
}

/// Column `j` holds `∫ Ψ_j φ_i`.
pub fn build_distributed_input(setup: &ProblemSetup) -> Result<SparseMatrix> {
    let grid = &setup.grid;
    let mut triplets = Vec::new();
    for (j, &p) in setup.input_points.iter().enumerate() {
        let col = load_vector(grid, gaussian_source(p))?;
        triplets.extend(col.iter().enumerate().filter(|(_, v)| v.abs() >= 1e-14).map(|(i, &v)| (i, j, v)));
    }
    SparseMatrix::from_triplets(grid.n_nodes(), setup.input_points.len(), &triplets)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Edge {
    Bottom,
    Top,
    Left,
    Right,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::Bottom, Edge::Top, Edge::Left, Edge::Right];
}

/// Closed-form solution of `Δρ = λρ` with derivative `cos(kπs)` along the
/// inward normal of `edge` and zero normal derivative on the other edges:
/// `ρ = −cos(kπs) cosh(c d) / (c sinh c)`, `c = √(λ + k²π²)`, where `s` runs
/// along the edge and `d` is the distance to the opposite edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicExtension {
    pub edge: Edge,
    pub mode: u32,
    pub lambda: f64,
}

impl HarmonicExtension {
    pub fn new(edge: Edge, mode: u32, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self { edge, mode, lambda })
    }

    fn wavenumber(&self) -> f64 {
        self.mode as f64 * PI
    }

    fn decay(&self) -> f64 {
        (self.lambda + self.wavenumber().powi(2)).sqrt()
    }

    /// Tangential coordinate, distance to the opposite edge, and the sign
    /// of `∂d/∂x` along the normal axis.
    fn local(&self, x: [f64; 2]) -> (f64, f64, f64) {
        match self.edge {
            Edge::Bottom => (x[0], 1.0 - x[1], -1.0),
            Edge::Top => (x[0], x[1], 1.0),
            Edge::Left => (x[1], 1.0 - x[0], -1.0),
            Edge::Right => (x[1], x[0], 1.0),
        }
    }

    /// Derivative along the inward unit normal of `at`, evaluated at
    /// parameter `s ∈ [0, 1]` on that edge.
    pub fn inward_normal_derivative(&self, at: Edge, s: f64) -> f64 {
        let (x, inward) = match at {
            Edge::Bottom => ([s, 0.0], [0.0, 1.0]),
            Edge::Top => ([s, 1.0], [0.0, -1.0]),
            Edge::Left => ([0.0, s], [1.0, 0.0]),
            Edge::Right => ([1.0, s], [-1.0, 0.0]),
        };
        let g = self.gradient(x);
        g[0] * inward[0] + g[1] * inward[1]
    }

    pub fn laplacian(&self, x: [f64; 2]) -> f64 {
        let (s, d, _) = self.local(x);
        let (k, c) = (self.wavenumber(), self.decay());
        let tangential = (k * s).cos();
        let scale = -1.0 / (c * c.sinh());
        scale * tangential * (d * c).cosh() * (c * c - k * k)
    }
}

impl SmoothField for HarmonicExtension {
    fn value(&self, x: [f64; 2]) -> f64 {
        let (s, d, _) = self.local(x);
        let c = self.decay();
        -(self.wavenumber() * s).cos() * (c * d).cosh() / (c * c.sinh())
    }

    fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        let (s, d, sign) = self.local(x);
        let (k, c) = (self.wavenumber(), self.decay());
        let scale = -1.0 / (c * c.sinh());
        let along = scale * -k * (k * s).sin() * (c * d).cosh();
        let across = scale * (k * s).cos() * c * (c * d).sinh() * sign;
        match self.edge {
            Edge::Bottom | Edge::Top => [along, across],
            Edge::Left | Edge::Right => [across, along],
        }
    }
}

/// Sum of extensions; the constant-mode control lift is the sum over all four edges.
pub struct ExtensionSum(pub Vec<HarmonicExtension>);

impl SmoothField for ExtensionSum {
    fn value(&self, x: [f64; 2]) -> f64 {
        self.0.iter().map(|e| e.value(x)).sum()
    }

    fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        self.0.iter().fold([0.0, 0.0], |acc, e| {
            let g = e.gradient(x);
            [acc[0] + g[0], acc[1] + g[1]]
        })
    }
}

/// Ritz projection of the extension for `(edge, mode)`.
pub fn neumann_extension(mode: u32, edge: Edge, lambda: f64, diffusion: f64, grid: FemGrid) -> Result<FemField> {
    let rho = HarmonicExtension::new(edge, mode, lambda)?;
    RitzProjector::new(grid, lambda, diffusion)?.project(&rho)
}

/// `(λM − A) R_h ρ`, which equals the energy load of `ρ` by the definition
/// of the Ritz projection.
fn lifted_column(projector: &RitzProjector, rho: &dyn SmoothField) -> Result<DVector<f64>> {
    projector.energy_load(rho)
}

/// Single boundary-control column: the constant mode on all four edges.
pub fn build_boundary_control(setup: &ProblemSetup) -> Result<DVector<f64>> {
    let projector = RitzProjector::new(setup.grid, setup.lambda, setup.diffusion)?;
    let lift = ExtensionSum(
        Edge::ALL.iter().map(|&e| HarmonicExtension::new(e, 0, setup.lambda)).collect::<Result<_>>()?,
    );
    lifted_column(&projector, &lift)
}

/// Boundary-noise columns for modes `1..=modes` on each edge, ordered edge
/// by edge as in [`Edge::ALL`].
pub fn build_boundary_input(setup: &ProblemSetup, modes: usize) -> Result<DMatrix<f64>> {
    if modes == 0 {
        return Err(Error::InvalidArgument("at least one boundary mode is required".into()));
    }
    let projector = RitzProjector::new(setup.grid, setup.lambda, setup.diffusion)?;
    let mut out = DMatrix::zeros(setup.grid.n_nodes(), 4 * modes);
    for (e, &edge) in Edge::ALL.iter().enumerate() {
        for k in 1..=modes {
            let rho = HarmonicExtension::new(edge, k as u32, setup.lambda)?;
            out.set_column(e * modes + k - 1, &lifted_column(&projector, &rho)?);
        }
    }
    Ok(out)
}

/// Sutherland–Hodgman clip of a convex polygon against a rectangle.
fn clip(poly: Vec<[f64; 2]>, r: &Rect) -> Vec<[f64; 2]> {
    let planes: [(usize, f64, bool); 4] = [(0, r.x0, true), (0, r.x1, false), (1, r.y0, true), (1, r.y1, false)];
    let mut out = poly;
    for (axis, bound, lower) in planes {
        if out.is_empty() {
            break;
        }
        let inside = |p: &[f64; 2]| if lower { p[axis] >= bound } else { p[axis] <= bound };
        let input = std::mem::take(&mut out);
        for i in 0..input.len() {
            let cur = input[i];
            let prev = input[(i + input.len() - 1) % input.len()];
            let cross = |a: [f64; 2], b: [f64; 2]| {
                let t = (bound - a[axis]) / (b[axis] - a[axis]);
                let mut p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                p[axis] = bound;
                p
            };
            match (inside(&prev), inside(&cur)) {
                (true, true) => out.push(cur),
                (true, false) => out.push(cross(prev, cur)),
                (false, true) => {
                    out.push(cross(prev, cur));
                    out.push(cur);
                }
                (false, false) => {}
            }
        }
    }
    out
}

/// Barycentric coordinates of `x` in triangle `v`.
fn barycentric(v: &[[f64; 2]; 3], x: [f64; 2]) -> [f64; 3] {
    let area = signed_area(v);
    let l1 = signed_area(&[v[0], x, v[2]]) / area;
    let l2 = signed_area(&[v[0], v[1], x]) / area;
    [1.0 - l1 - l2, l1, l2]
}

/// `∫_{T ∩ region} φ_a` for the three hats of triangle `v`, exact: hats are
/// linear, so the centroid rule on a fan triangulation of the clipped
/// polygon integrates them without error.
fn clipped_hat_integrals(v: &[[f64; 2]; 3], region: &Rect) -> [f64; 3] {
    let poly = clip(v.to_vec(), region);
    let mut acc = [0.0; 3];
    for i in 1..poly.len().saturating_sub(1) {
        let t = [poly[0], poly[i], poly[i + 1]];
        let area = signed_area(&t).abs();
        if area == 0.0 {
            continue;
        }
        let centroid = map_point(&t, &[1.0 / 3.0; 3]);
        let b = barycentric(v, centroid);
        for a in 0..3 {
            acc[a] += area * b[a];
        }
    }
    acc
}

/// Row `j` holds `scale · ∫_{T_j} φ_i`.
pub fn build_output(setup: &ProblemSetup) -> DMatrix<f64> {
    let grid = &setup.grid;
    let mut c = DMatrix::zeros(setup.output_regions.len(), grid.n_nodes());
    for (j, region) in setup.output_regions.iter().enumerate() {
        for t in grid.triangles() {
            let v = t.map(|k| grid.node(k));
            let lo = [v[0][0].min(v[1][0]).min(v[2][0]), v[0][1].min(v[1][1]).min(v[2][1])];
            let hi = [v[0][0].max(v[1][0]).max(v[2][0]), v[0][1].max(v[1][1]).max(v[2][1])];
            if hi[0] <= region.x0 || lo[0] >= region.x1 || hi[1] <= region.y0 || lo[1] >= region.y1 {
                continue;
            }
            let w = clipped_hat_integrals(&v, region);
            for a in 0..3 {
                c[(j, t[a])] += setup.output_scale * w[a];
            }
        }
    }
    c
}

/// All matrices of the control problem on one grid.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub mass: SparseMatrix,
    pub stiffness: SparseMatrix,
    pub input: SparseMatrix,
    pub boundary_input: DVector<f64>,
    pub output: DMatrix<f64>,
    pub input_weight: DMatrix<f64>,
    pub boundary_weight: DMatrix<f64>,
    pub output_weight: DMatrix<f64>,
}

impl OperatorSet {
    pub fn assemble(setup: &ProblemSetup) -> Result<Self> {
        setup.validate()?;
        let n_u = setup.input_points.len();
        let n_z = setup.output_regions.len();
        Ok(Self {
            mass: assemble_mass(&setup.grid),
            stiffness: assemble_stiffness(&setup.grid, setup.diffusion)?,
            input: build_distributed_input(setup)?,
            boundary_input: build_boundary_control(setup)?,
            output: build_output(setup),
            input_weight: DMatrix::identity(n_u, n_u) * setup.r_scalar,
            boundary_weight: DMatrix::identity(1, 1) * setup.rb_scalar,
            output_weight: DMatrix::identity(n_z, n_z),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{l2_error, ritz_project};

    fn setup(level: u32) -> ProblemSetup {
        ProblemSetup::default_for(FemGrid::new(level).unwrap())
    }

    /// Gauss–Legendre nodes and weights on [0, 1] by Newton iteration.
    fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
                let mut dp = 0.0;
                for _ in 0..100 {
                    let (mut p0, mut p1) = (1.0, x);
                    for k in 2..=n {
                        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                        p0 = p1;
                        p1 = p2;
                    }
                    dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                    let step = p1 / dp;
                    x -= step;
                    if step.abs() < 1e-16 {
                        break;
                    }
                }
                ((1.0 - x) / 2.0, 1.0 / ((1.0 - x * x) * dp * dp))
            })
            .collect()
    }

    fn integrate_square(f: impl Fn([f64; 2]) -> f64) -> f64 {
        let gl = gauss_legendre(40);
        gl.iter().flat_map(|&(x, wx)| gl.iter().map(move |&(y, wy)| (x, y, wx * wy))).map(|(x, y, w)| w * f([x, y])).sum()
    }

    #[test]
    fn gauss_legendre_oracle_is_sound() {
        assert!((integrate_square(|x| x[0].powi(7) * x[1].powi(3)) - 1.0 / 32.0).abs() < 1e-15);
    }

    #[test]
    fn distributed_input_column_sums() {
        let s = setup(6);
        let b = build_distributed_input(&s).unwrap();
        assert_eq!((b.n_rows(), b.n_cols()), (s.grid.n_nodes(), 9));
        let ones = DVector::from_element(s.grid.n_nodes(), 1.0);
        let sums = b.tr_mul_vec(&ones);
        let centre = sums[4];
        assert!((centre - PI / 200.0).abs() < 1e-5 * PI / 200.0, "{centre}");
        for j in 0..9 {
            let oracle = integrate_square(gaussian_source(s.input_points[j]));
            assert!((sums[j] - oracle).abs() < 1e-4 * oracle);
        }
        assert!((0..b.n_rows()).all(|i| b.row(i).all(|(_, v)| v >= 0.0)));
    }

    #[test]
    fn distributed_input_is_negligible_far_away() {
        let s = setup(4);
        let b = build_distributed_input(&s).unwrap();
        let p = s.input_points[0];
        for k in 0..s.grid.n_nodes() {
            let x = s.grid.node(k);
            if ((x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2)).sqrt() > 0.5 + 2.0 * s.grid.h() {
                assert!(b.get(k, 0) < 1e-14);
            }
        }
    }

    #[test]
    fn extension_closed_form_values() {
        let rho = HarmonicExtension::new(Edge::Bottom, 0, 1.0).unwrap();
        for x1 in [0.0, 0.3, 1.0] {
            assert!((rho.value([x1, 1.0]) + 1.0 / 1f64.sinh()).abs() < 1e-15);
        }
        assert!((rho.value([0.4, 1.0]) + 0.850_918).abs() < 1e-6);
    }

    #[test]
    fn extension_normal_derivatives_on_every_edge() {
        for edge in Edge::ALL {
            for k in 0..4u32 {
                let rho = HarmonicExtension::new(edge, k, 1.3).unwrap();
                for s in [0.0, 0.17, 0.5, 0.91, 1.0] {
                    for at in Edge::ALL {
                        let want = if at == edge { (k as f64 * PI * s).cos() } else { 0.0 };
                        let got = rho.inward_normal_derivative(at, s);
                        assert!((got - want).abs() < 1e-12, "{edge:?} k={k} at {at:?} s={s}: {got}");
                    }
                }
            }
        }
    }

    #[test]
    fn extension_gradient_and_laplacian_match_finite_differences() {
        let step = 1e-4;
        for edge in Edge::ALL {
            let rho = HarmonicExtension::new(edge, 2, 0.7).unwrap();
            let x = [0.37, 0.61];
            let f = |p: [f64; 2]| rho.value(p);
            let g = rho.gradient(x);
            let fd = [
                (f([x[0] + step, x[1]]) - f([x[0] - step, x[1]])) / (2.0 * step),
                (f([x[0], x[1] + step]) - f([x[0], x[1] - step])) / (2.0 * step),
            ];
            assert!((g[0] - fd[0]).abs() < 1e-6 && (g[1] - fd[1]).abs() < 1e-6, "{edge:?}");
            let lap_fd = (f([x[0] + step, x[1]]) + f([x[0] - step, x[1]]) + f([x[0], x[1] + step])
                + f([x[0], x[1] - step])
                - 4.0 * f(x))
                / (step * step);
            assert!((rho.laplacian(x) - lap_fd).abs() < 1e-4 * rho.laplacian(x).abs().max(1.0));
            assert!((rho.laplacian(x) - 0.7 * rho.value(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_control_mean_matches_quadrature_oracle() {
        let s = setup(5);
        let col = build_boundary_control(&s).unwrap();
        // four edges, ∫ρ = −λ/c² each with c² = λ
        assert!((col.sum() - (-4.0)).abs() < 1e-8, "{}", col.sum());
        let lift = ExtensionSum(Edge::ALL.iter().map(|&e| HarmonicExtension::new(e, 0, 1.0).unwrap()).collect());
        let oracle = s.lambda * integrate_square(|x| lift.value(x));
        assert!((col.sum() - oracle).abs() < 1e-6);
    }

    #[test]
    fn boundary_column_equals_shifted_ritz_coefficients() {
        let s = setup(3);
        let rho = HarmonicExtension::new(Edge::Left, 2, s.lambda).unwrap();
        let projector = RitzProjector::new(s.grid, s.lambda, s.diffusion).unwrap();
        let via_ritz = projector.shifted_operator().mul_vec(projector.project(&rho).unwrap().values());
        let cols = build_boundary_input(&s, 3).unwrap();
        assert!((cols.column(2 * 3 + 1) - via_ritz).amax() < 1e-12);
    }

    #[test]
    fn boundary_input_tracks_lambda() {
        let mut s = setup(3);
        let a = build_boundary_input(&s, 2).unwrap();
        s.lambda = 2.0;
        let b = build_boundary_input(&s, 2).unwrap();
        let b_again = build_boundary_input(&s, 2).unwrap();
        assert_eq!(b, b_again);
        assert!((a - &b).amax() > 1e-3);
        assert!(build_boundary_input(&s, 0).is_err());
    }

    #[test]
    fn extension_ritz_error_is_second_order() {
        let rho = HarmonicExtension::new(Edge::Bottom, 1, 1.0).unwrap();
        let pts: Vec<_> = (3..=6)
            .map(|l| {
                let g = FemGrid::new(l).unwrap();
                let r = ritz_project(&g, &rho, 1.0, 1e-2).unwrap();
                (g.h(), l2_error(&r, &|x| rho.value(x)))
            })
            .collect();
        let order = crate::harness::fit_order(&pts).unwrap();
        assert!((order - 2.0).abs() <= 0.4, "{order}");
    }

    #[test]
    fn output_of_constant_is_scaled_area() {
        for level in 1..=5 {
            let s = setup(level);
            let c = build_output(&s);
            let ones = DVector::from_element(s.grid.n_nodes(), 1.0);
            let y = &c * ones;
            for j in 0..3 {
                assert!((y[j] - 1.0).abs() < 1e-12, "level {level} region {j}: {}", y[j]);
            }
            assert!(c.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn output_integrates_linears_exactly_on_misaligned_regions() {
        // region edges cut through triangles at every level
        let mut s = setup(2);
        s.output_regions = vec![Rect::new(0.13, 0.71, 0.05, 0.44)];
        let f = |x: [f64; 2]| 2.0 + x[0] - 3.0 * x[1];
        let c = build_output(&s);
        let got = (&c * s.grid.interpolate(f).values())[0];
        let r = s.output_regions[0];
        let exact = 100.0
            * (2.0 * r.area() + 0.5 * (r.x1 * r.x1 - r.x0 * r.x0) * (r.y1 - r.y0)
                - 1.5 * (r.y1 * r.y1 - r.y0 * r.y0) * (r.x1 - r.x0));
        assert!((got - exact).abs() < 1e-11 * exact.abs());
    }

    #[test]
    fn output_of_smooth_field_converges_at_second_order() {
        let f = |x: [f64; 2]| (3.0 * x[0]).sin() * (2.0 * x[1]).cos();
        let exact_row0 = {
            // ∫_{0.3}^{0.4} sin 3x dx · ∫_{0.3}^{0.4} cos 2y dy
            let ix = ((3.0f64 * 0.3).cos() - (3.0f64 * 0.4).cos()) / 3.0;
            let iy = ((2.0f64 * 0.4).sin() - (2.0f64 * 0.3).sin()) / 2.0;
            100.0 * ix * iy
        };
        let pts: Vec<_> = (2..=6)
            .map(|l| {
                let s = setup(l);
                let y = &build_output(&s) * s.grid.interpolate(f).values();
                (s.grid.h(), (y[0] - exact_row0).abs())
            })
            .collect();
        let order = crate::harness::fit_order(&pts).unwrap();
        assert!((order - 2.0).abs() < 0.3, "{order}");
    }

    #[test]
    fn operator_set_dimensions_and_weights() {
        for level in 1..=3 {
            let ops = OperatorSet::assemble(&setup(level)).unwrap();
            let n = FemGrid::new(level).unwrap().n_nodes();
            assert_eq!((ops.input.n_rows(), ops.input.n_cols()), (n, 9));
            assert_eq!(ops.boundary_input.len(), n);
            assert_eq!(ops.output.shape(), (3, n));
            assert_eq!(ops.input_weight, DMatrix::identity(9, 9) * 1e-2);
            assert_eq!(ops.boundary_weight[(0, 0)], 25.0);
            assert_eq!(ops.output_weight, DMatrix::identity(3, 3));
        }
        let again = OperatorSet::assemble(&setup(3)).unwrap();
        let first = OperatorSet::assemble(&setup(3)).unwrap();
        assert_eq!(again.boundary_input, first.boundary_input);
        assert_eq!(again.output, first.output);
    }

    #[test]
    fn invalid_setups_are_rejected() {
        let mut s = setup(2);
        s.rb_scalar = 0.0;
        assert!(s.validate().is_err());
        let mut s = setup(2);
        s.input_points.push([1.2, 0.5]);
        assert!(s.validate().is_err());
        let mut s = setup(2);
        s.output_regions.push(Rect::new(0.5, 0.5, 0.1, 0.2));
        assert!(s.validate().is_err());
    }
}
