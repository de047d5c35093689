//! Structured bilinear (Q1) meshes on axis-aligned rectangles.
//!
//! The mesh divides `[a, b] x [c, d]` into `nx * ny` equal cells. Nodes are
//! numbered row-major with `x1` fastest: node `(p, q)` has index
//! `q * (nx + 1) + p` and sits at `(a + p hx, c + q hy)`. Cell `(i, j)`
//! carries the four nodes `(i, j)`, `(i+1, j)`, `(i+1, j+1)`, `(i, j+1)` in
//! counterclockwise order.
//!
//! Volume integrals of nodal fields use a tensor 2x2 Gauss rule per cell,
//! which is exact for products of bilinears. Pointwise L2 errors against a
//! smooth reference use a 3x3 rule so the interpolation error of the field
//! itself is resolved.

use std::io::Write;
use std::sync::Arc;

use crate::directions::Direction;
use crate::error::{Error, Result};

/// 1D Gauss-Legendre nodes and weights on [0, 1].
pub const GAUSS2: [(f64, f64); 2] = [
    (0.21132486540518713, 0.5), // (1 - 1/sqrt(3)) / 2
    (0.7886751345948129, 0.5),
];

pub const GAUSS3: [(f64, f64); 3] = [
    (0.1127016653792583, 0.2777777777777778), // (1 - sqrt(3/5)) / 2, 5/18
    (0.5, 0.4444444444444444),
    (0.8872983346207417, 0.2777777777777778),
];

/// Values of the four local basis functions at reference coordinates.
#[inline]
pub fn basis_values(xi: f64, eta: f64) -> [f64; 4] {
    [
        (1.0 - xi) * (1.0 - eta),
        xi * (1.0 - eta),
        xi * eta,
        (1.0 - xi) * eta,
    ]
}

/// Reference-coordinate gradients `(d/dxi, d/deta)` of the local basis.
#[inline]
pub fn basis_gradients(xi: f64, eta: f64) -> [(f64, f64); 4] {
    [
        (-(1.0 - eta), -(1.0 - xi)),
        (1.0 - eta, -xi),
        (eta, xi),
        (-eta, 1.0 - xi),
    ]
}

/// One side of the rectangular boundary.
///
/// Sides are numbered as in the boundary decomposition of the transport
/// problem: 1 = bottom, 2 = right, 3 = top, 4 = left.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Bottom,
    Right,
    Top,
    Left,
}

pub const ALL_EDGES: [Edge; 4] = [Edge::Bottom, Edge::Right, Edge::Top, Edge::Left];

impl Edge {
    pub fn outward_normal(&self) -> (f64, f64) {
        match self {
            Edge::Bottom => (0.0, -1.0),
            Edge::Right => (1.0, 0.0),
            Edge::Top => (0.0, 1.0),
            Edge::Left => (-1.0, 0.0),
        }
    }

    /// Boundary part number, 1 through 4.
    pub fn number(&self) -> u8 {
        match self {
            Edge::Bottom => 1,
            Edge::Right => 2,
            Edge::Top => 3,
            Edge::Left => 4,
        }
    }
}

/// The two sides through which a direction enters the domain.
///
/// Directions aligned with an axis have no well-defined split and are
/// rejected; the sequence generator never produces them.
pub fn inflow_edges(d: &Direction) -> Result<[Edge; 2]> {
    if d.s1 == 0.0 || d.s2 == 0.0 {
        return Err(Error::GrazingDirection(d.s1, d.s2));
    }
    Ok(match (d.s1 > 0.0, d.s2 > 0.0) {
        (true, true) => [Edge::Bottom, Edge::Left],
        (false, true) => [Edge::Bottom, Edge::Right],
        (false, false) => [Edge::Right, Edge::Top],
        (true, false) => [Edge::Top, Edge::Left],
    })
}

/// The two sides through which a direction leaves the domain.
pub fn outflow_edges(d: &Direction) -> Result<[Edge; 2]> {
    let inflow = inflow_edges(d)?;
    let mut out = [Edge::Bottom; 2];
    let mut k = 0;
    for e in ALL_EDGES {
        if !inflow.contains(&e) {
            out[k] = e;
            k += 1;
        }
    }
    Ok(out)
}

/// A uniform rectangular mesh of bilinear cells.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredMesh {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
}

impl StructuredMesh {
    pub fn new(a: f64, b: f64, c: f64, d: f64, nx: usize, ny: usize) -> Result<Arc<Self>> {
        if !(b > a && d > c) || !(a.is_finite() && b.is_finite() && c.is_finite() && d.is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "degenerate domain [{a}, {b}] x [{c}, {d}]"
            )));
        }
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidParameter(
                "mesh needs at least one cell per axis".into(),
            ));
        }
        Ok(Arc::new(StructuredMesh {
            a,
            b,
            c,
            d,
            nx,
            ny,
            hx: (b - a) / nx as f64,
            hy: (d - c) / ny as f64,
        }))
    }

    /// The mesh on the unit square.
    pub fn unit_square(nx: usize, ny: usize) -> Result<Arc<Self>> {
        Self::new(0.0, 1.0, 0.0, 1.0, nx, ny)
    }

    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        (self.a, self.b, self.c, self.d)
    }

    pub fn divisions(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn spacing(&self) -> (f64, f64) {
        (self.hx, self.hy)
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn node_count(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn area(&self) -> f64 {
        (self.b - self.a) * (self.d - self.c)
    }

    #[inline]
    pub fn node_index(&self, p: usize, q: usize) -> usize {
        q * (self.nx + 1) + p
    }

    #[inline]
    pub fn node_position(&self, p: usize, q: usize) -> (f64, f64) {
        (self.a + p as f64 * self.hx, self.c + q as f64 * self.hy)
    }

    /// Node indices of cell `(i, j)` in counterclockwise order starting at
    /// the lower-left corner.
    #[inline]
    pub fn cell_nodes(&self, i: usize, j: usize) -> [usize; 4] {
        let n0 = self.node_index(i, j);
        let stride = self.nx + 1;
        [n0, n0 + 1, n0 + stride + 1, n0 + stride]
    }

    /// Lower-left corner of cell `(i, j)`.
    #[inline]
    pub fn cell_origin(&self, i: usize, j: usize) -> (f64, f64) {
        (self.a + i as f64 * self.hx, self.c + j as f64 * self.hy)
    }

    pub fn contains(&self, x1: f64, x2: f64) -> bool {
        x1 >= self.a && x1 <= self.b && x2 >= self.c && x2 <= self.d
    }

    /// Cell containing `(x1, x2)` plus reference coordinates inside it.
    /// Points on an interior cell line are assigned to the lower-index cell;
    /// field values agree across the line by continuity.
    fn locate(&self, x1: f64, x2: f64) -> Result<(usize, usize, f64, f64)> {
        if !self.contains(x1, x2) {
            return Err(Error::OutsideDomain(x1, x2));
        }
        let pick = |t: f64, h: f64, n: usize| -> usize {
            let i = (t / h).ceil() as isize - 1;
            i.clamp(0, n as isize - 1) as usize
        };
        let i = pick(x1 - self.a, self.hx, self.nx);
        let j = pick(x2 - self.c, self.hy, self.ny);
        let (ox, oy) = self.cell_origin(i, j);
        Ok((i, j, (x1 - ox) / self.hx, (x2 - oy) / self.hy))
    }

    fn check_field(&self, f: &NodalField) -> Result<()> {
        if *f.mesh.as_ref() != *self {
            return Err(Error::MeshMismatch(format!(
                "field carries a {}x{} mesh on a different domain",
                f.mesh.nx, f.mesh.ny
            )));
        }
        Ok(())
    }

    /// Integral of a nodal field over the domain (2x2 Gauss, exact for
    /// bilinear fields).
    pub fn integrate(&self, f: &NodalField) -> Result<f64> {
        self.check_field(f)?;
        let v = &f.values;
        let scale = self.hx * self.hy;
        let mut total = 0.0;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let nodes = self.cell_nodes(i, j);
                let mut cell = 0.0;
                for (xi, wx) in GAUSS2 {
                    for (eta, wy) in GAUSS2 {
                        let phi = basis_values(xi, eta);
                        let val: f64 = (0..4).map(|l| phi[l] * v[nodes[l]]).sum();
                        cell += wx * wy * val;
                    }
                }
                total += scale * cell;
            }
        }
        Ok(total)
    }

    /// Integral of a pointwise function sampled on the same 2x2 rule.
    pub fn integrate_fn(&self, g: impl Fn(f64, f64) -> f64) -> f64 {
        let scale = self.hx * self.hy;
        let mut total = 0.0;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let (ox, oy) = self.cell_origin(i, j);
                let mut cell = 0.0;
                for (xi, wx) in GAUSS2 {
                    for (eta, wy) in GAUSS2 {
                        cell += wx * wy * g(ox + xi * self.hx, oy + eta * self.hy);
                    }
                }
                total += scale * cell;
            }
        }
        total
    }

    /// L2 norm of `f - g` with `g` evaluated pointwise (3x3 Gauss per cell).
    ///
    /// The higher-order rule resolves the interpolation error of the field
    /// itself, so this measures the distance to the function `g`, not to its
    /// interpolant.
    pub fn l2_error(&self, f: &NodalField, g: impl Fn(f64, f64) -> f64) -> Result<f64> {
        self.check_field(f)?;
        let v = &f.values;
        let scale = self.hx * self.hy;
        let mut total = 0.0;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let nodes = self.cell_nodes(i, j);
                let (ox, oy) = self.cell_origin(i, j);
                let mut cell = 0.0;
                for (xi, wx) in GAUSS3 {
                    for (eta, wy) in GAUSS3 {
                        let phi = basis_values(xi, eta);
                        let fh: f64 = (0..4).map(|l| phi[l] * v[nodes[l]]).sum();
                        let diff = fh - g(ox + xi * self.hx, oy + eta * self.hy);
                        cell += wx * wy * diff * diff;
                    }
                }
                total += scale * cell;
            }
        }
        Ok(total.sqrt())
    }

    /// L2 norm of the difference between `f` and the nodal interpolant of
    /// `g`, i.e. the distance between two members of the discrete space
    /// (2x2 Gauss, exact for the squared bilinear difference).
    ///
    /// Refinement tables report this norm: it tracks the accuracy of the
    /// computed nodal values without the floor set by the interpolation
    /// error of the mesh itself.
    pub fn l2_error_nodal(&self, f: &NodalField, g: impl Fn(f64, f64) -> f64) -> Result<f64> {
        self.check_field(f)?;
        let mut diff = Vec::with_capacity(self.node_count());
        for q in 0..=self.ny {
            for p in 0..=self.nx {
                let (x1, x2) = self.node_position(p, q);
                diff.push(f.values[self.node_index(p, q)] - g(x1, x2));
            }
        }
        let scale = self.hx * self.hy;
        let mut total = 0.0;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let nodes = self.cell_nodes(i, j);
                let mut cell = 0.0;
                for (xi, wx) in GAUSS2 {
                    for (eta, wy) in GAUSS2 {
                        let phi = basis_values(xi, eta);
                        let d: f64 = (0..4).map(|l| phi[l] * diff[nodes[l]]).sum();
                        cell += wx * wy * d * d;
                    }
                }
                total += scale * cell;
            }
        }
        Ok(total.sqrt())
    }

    /// L2 norm of `f - g` over the four domain edges, comparing nodal values
    /// along the piecewise linear edge trace.
    ///
    /// Inflow data enters the discrete transport system only weakly, so the
    /// edge trace is the part of the solution the scheme never pins down
    /// exactly. Refinement tables report this norm: it tracks how sharply
    /// the boundary data is honored under refinement, and it is blind to
    /// interior modes that vanish on the edges.
    pub fn l2_error_boundary(&self, f: &NodalField, g: impl Fn(f64, f64) -> f64) -> Result<f64> {
        self.check_field(f)?;
        let diff = |p: usize, q: usize| {
            let (x1, x2) = self.node_position(p, q);
            f.values[self.node_index(p, q)] - g(x1, x2)
        };
        // Exact integral of the square of a linear segment: h/3 (a^2 + ab + b^2).
        let seg = |a: f64, b: f64, h: f64| h / 3.0 * (a * a + a * b + b * b);
        let mut total = 0.0;
        for i in 0..self.nx {
            total += seg(diff(i, 0), diff(i + 1, 0), self.hx);
            total += seg(diff(i, self.ny), diff(i + 1, self.ny), self.hx);
        }
        for j in 0..self.ny {
            total += seg(diff(0, j), diff(0, j + 1), self.hy);
            total += seg(diff(self.nx, j), diff(self.nx, j + 1), self.hy);
        }
        Ok(total.sqrt())
    }
}

/// A scalar field given by one value per mesh node, interpreted as the
/// bilinear interpolant between nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    mesh: Arc<StructuredMesh>,
    values: Vec<f64>,
}

impl NodalField {
    pub fn zero(mesh: &Arc<StructuredMesh>) -> Self {
        NodalField {
            mesh: Arc::clone(mesh),
            values: vec![0.0; mesh.node_count()],
        }
    }

    /// Interpolates a pointwise function at the nodes.
    pub fn from_fn(mesh: &Arc<StructuredMesh>, g: impl Fn(f64, f64) -> f64) -> Self {
        let (nx, ny) = mesh.divisions();
        let mut values = Vec::with_capacity(mesh.node_count());
        for q in 0..=ny {
            for p in 0..=nx {
                let (x1, x2) = mesh.node_position(p, q);
                values.push(g(x1, x2));
            }
        }
        NodalField {
            mesh: Arc::clone(mesh),
            values,
        }
    }

    pub fn from_values(mesh: &Arc<StructuredMesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.node_count() {
            return Err(Error::MeshMismatch(format!(
                "{} values for a mesh with {} nodes",
                values.len(),
                mesh.node_count()
            )));
        }
        Ok(NodalField {
            mesh: Arc::clone(mesh),
            values,
        })
    }

    pub fn mesh(&self) -> &Arc<StructuredMesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Bilinear evaluation at a point of the domain.
    pub fn eval(&self, x1: f64, x2: f64) -> Result<f64> {
        let (i, j, xi, eta) = self.mesh.locate(x1, x2)?;
        let nodes = self.mesh.cell_nodes(i, j);
        let phi = basis_values(xi, eta);
        Ok((0..4).map(|l| phi[l] * self.values[nodes[l]]).sum())
    }

    /// Writes the field as `x1,x2,value` rows, nodes row-major with `x1`
    /// fastest. Numbers use the shortest representation that parses back to
    /// the same value, so a written field can be reconstructed bit for bit.
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "x1,x2,value")?;
        let (nx, ny) = self.mesh.divisions();
        for q in 0..=ny {
            for p in 0..=nx {
                let (x1, x2) = self.mesh.node_position(p, q);
                writeln!(w, "{},{},{}", x1, x2, self.values[self.mesh.node_index(p, q)])?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn unit_square_counts_and_spacing() {
        let mesh = StructuredMesh::unit_square(16, 16).unwrap();
        assert_eq!(mesh.node_count(), 289);
        assert_eq!(mesh.cell_count(), 256);
        assert_eq!(mesh.spacing(), (0.0625, 0.0625));
        assert_eq!(mesh.node_position(0, 0), (0.0, 0.0));
        assert_eq!(mesh.node_index(16, 0), 16);
        assert_eq!(mesh.node_index(0, 1), 17);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(StructuredMesh::new(1.0, 0.0, 0.0, 1.0, 4, 4).is_err());
        assert!(StructuredMesh::new(0.0, 1.0, 0.0, 1.0, 0, 4).is_err());
    }

    #[test]
    fn edge_normals_and_numbers() {
        assert_eq!(Edge::Bottom.outward_normal(), (0.0, -1.0));
        assert_eq!(Edge::Right.outward_normal(), (1.0, 0.0));
        assert_eq!(Edge::Top.outward_normal(), (0.0, 1.0));
        assert_eq!(Edge::Left.outward_normal(), (-1.0, 0.0));
        assert_eq!(ALL_EDGES.map(|e| e.number()), [1, 2, 3, 4]);
    }

    #[test]
    fn inflow_edges_by_quadrant() {
        let dir = |s1: f64, s2: f64, quadrant: u8| Direction {
            s1,
            s2,
            s3: 0.5,
            quadrant,
            seq_index: 1,
        };
        assert_eq!(
            inflow_edges(&dir(0.5, 0.5, 1)).unwrap(),
            [Edge::Bottom, Edge::Left]
        );
        assert_eq!(
            inflow_edges(&dir(-0.5, 0.5, 2)).unwrap(),
            [Edge::Bottom, Edge::Right]
        );
        assert_eq!(
            inflow_edges(&dir(-0.5, -0.5, 3)).unwrap(),
            [Edge::Right, Edge::Top]
        );
        assert_eq!(
            inflow_edges(&dir(0.5, -0.5, 4)).unwrap(),
            [Edge::Top, Edge::Left]
        );
        assert!(inflow_edges(&dir(0.0, 0.5, 1)).is_err());
        // Inflow and outflow partition the four sides.
        for (s1, s2, q) in [(0.5, 0.5, 1), (-0.5, 0.5, 2), (-0.5, -0.5, 3), (0.5, -0.5, 4)] {
            let d = dir(s1, s2, q);
            let mut all: Vec<Edge> = inflow_edges(&d).unwrap().to_vec();
            all.extend(outflow_edges(&d).unwrap());
            for e in ALL_EDGES {
                assert_eq!(all.iter().filter(|&&x| x == e).count(), 1);
            }
        }
    }

    #[test]
    fn integrate_is_exact_for_bilinears() {
        let mesh = StructuredMesh::unit_square(7, 5).unwrap();
        let f = NodalField::from_fn(&mesh, |x, y| 2.0 - 0.5 * x + 3.0 * y + 0.25 * x * y);
        // Closed form on the unit square: 2 - 0.25 + 1.5 + 0.0625.
        assert_abs_diff_eq!(mesh.integrate(&f).unwrap(), 3.3125, epsilon = 1e-14);
    }

    #[test]
    fn integrate_exponential_interpolant() {
        let mesh = StructuredMesh::unit_square(128, 128).unwrap();
        let f = NodalField::from_fn(&mesh, |x, y| (-0.1 * x - 0.1 * y).exp());
        let closed_form = ((1.0 - (-0.1f64).exp()) / 0.1).powi(2);
        assert_abs_diff_eq!(closed_form, 0.905592, epsilon = 5e-7);
        assert_abs_diff_eq!(mesh.integrate(&f).unwrap(), closed_form, epsilon = 1e-5);
    }

    #[test]
    fn integrate_rejects_foreign_field() {
        let mesh = StructuredMesh::unit_square(4, 4).unwrap();
        let other = StructuredMesh::unit_square(5, 4).unwrap();
        let f = NodalField::zero(&other);
        assert!(matches!(mesh.integrate(&f), Err(Error::MeshMismatch(_))));
    }

    #[test]
    fn point_eval_reproduces_bilinear_functions() {
        let mesh = StructuredMesh::unit_square(4, 4).unwrap();
        let f = NodalField::from_fn(&mesh, |x, y| x * y);
        assert_abs_diff_eq!(f.eval(0.3, 0.7).unwrap(), 0.21, epsilon = 1e-15);
        // Node values are reproduced exactly, including on cell lines.
        assert_eq!(f.eval(0.5, 0.25).unwrap(), 0.125);
        assert!(matches!(f.eval(1.2, 0.5), Err(Error::OutsideDomain(_, _))));
    }

    /// Dense midpoint quadrature of `(f - g)^2`, refined well past the 3x3
    /// rule under test.
    fn dense_l2_error(f: &NodalField, g: impl Fn(f64, f64) -> f64, n: usize) -> f64 {
        let mut total = 0.0;
        for j in 0..n {
            for i in 0..n {
                let x = (i as f64 + 0.5) / n as f64;
                let y = (j as f64 + 0.5) / n as f64;
                let d = f.eval(x, y).unwrap() - g(x, y);
                total += d * d;
            }
        }
        (total / (n * n) as f64).sqrt()
    }

    #[test]
    fn l2_error_of_reproduced_linear_is_roundoff() {
        let mesh = StructuredMesh::unit_square(8, 8).unwrap();
        let f = NodalField::from_fn(&mesh, |x, y| 1.0 + 2.0 * x - y);
        assert!(mesh.l2_error(&f, |x, y| 1.0 + 2.0 * x - y).unwrap() < 1e-14);
    }

    #[test]
    fn l2_error_of_zero_field_against_one() {
        let mesh = StructuredMesh::unit_square(6, 3).unwrap();
        let f = NodalField::zero(&mesh);
        assert_abs_diff_eq!(mesh.l2_error(&f, |_, _| 1.0).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn interpolation_error_magnitude_and_decay() {
        let g = |x: f64, y: f64| (2.0 * std::f64::consts::PI * x).sin()
            * (4.0 * std::f64::consts::PI * y).sin();
        let mesh16 = StructuredMesh::unit_square(16, 16).unwrap();
        let f16 = NodalField::from_fn(&mesh16, g);
        let e16 = mesh16.l2_error(&f16, g).unwrap();
        let oracle = dense_l2_error(&f16, g, 400);
        assert_abs_diff_eq!(e16, oracle, epsilon = 0.03 * oracle);
        assert!((1e-2..6e-2).contains(&e16), "e16 = {e16}");

        let mesh32 = StructuredMesh::unit_square(32, 32).unwrap();
        let f32 = NodalField::from_fn(&mesh32, g);
        let e32 = mesh32.l2_error(&f32, g).unwrap();
        let ratio = e16 / e32;
        assert!((3.3..4.8).contains(&ratio), "ratio = {ratio}");
    }

    #[test]
    fn nodal_error_ignores_interpolation_error() {
        let mesh = StructuredMesh::unit_square(16, 16).unwrap();
        let g = |x: f64, y: f64| (x * y).sin();
        let f = NodalField::from_fn(&mesh, g);
        // Same nodal values: the discrete distance is zero even though the
        // pointwise distance is not.
        assert_eq!(mesh.l2_error_nodal(&f, g).unwrap(), 0.0);
        assert!(mesh.l2_error(&f, g).unwrap() > 0.0);
        // A constant nodal offset integrates to exactly that constant.
        let mut shifted = f.clone();
        for v in shifted.values_mut() {
            *v += 0.25;
        }
        assert_abs_diff_eq!(
            mesh.l2_error_nodal(&shifted, g).unwrap(),
            0.25,
            epsilon = 1e-14
        );
    }

    #[test]
    fn boundary_error_matches_closed_forms() {
        let mesh = StructuredMesh::unit_square(5, 3).unwrap();
        // Constant offset 1: the squared trace integrates to the perimeter.
        let one = NodalField::from_fn(&mesh, |_, _| 1.0);
        assert_abs_diff_eq!(
            mesh.l2_error_boundary(&one, |_, _| 0.0).unwrap(),
            2.0,
            epsilon = 1e-14
        );
        // f = x1 against zero: 1/3 on bottom and top, 0 on the left, 1 on
        // the right, so the norm is sqrt(5/3).
        let ramp = NodalField::from_fn(&mesh, |x, _| x);
        assert_abs_diff_eq!(
            mesh.l2_error_boundary(&ramp, |_, _| 0.0).unwrap(),
            (5.0f64 / 3.0).sqrt(),
            epsilon = 1e-14
        );
        let other = StructuredMesh::unit_square(4, 4).unwrap();
        let foreign = NodalField::zero(&other);
        assert!(mesh.l2_error_boundary(&foreign, |_, _| 0.0).is_err());
    }

    #[test]
    fn boundary_error_ignores_interior_perturbations() {
        let mesh = StructuredMesh::unit_square(6, 6).unwrap();
        let g = |x: f64, y: f64| (x - y).cos();
        let mut f = NodalField::from_fn(&mesh, g);
        let (nx, ny) = mesh.divisions();
        for q in 1..ny {
            for p in 1..nx {
                f.values_mut()[mesh.node_index(p, q)] += 0.3;
            }
        }
        assert_eq!(mesh.l2_error_boundary(&f, g).unwrap(), 0.0);
        assert!(mesh.l2_error_nodal(&f, g).unwrap() > 0.2);
    }

    #[test]
    fn csv_dump_is_row_major_and_round_trips() {
        let mesh = StructuredMesh::unit_square(2, 2).unwrap();
        let f = NodalField::from_fn(&mesh, |x, y| x + 10.0 * y + 0.1234567890123456);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x1,x2,value");
        assert_eq!(lines.len(), 1 + 9);
        assert!(lines[1].starts_with("0,0,"));
        assert!(lines[2].starts_with("0.5,0,"), "x1 varies fastest: {}", lines[2]);
        // Shortest round-trip formatting: parsing back gives the same bits.
        for (k, line) in lines[1..].iter().enumerate() {
            let value: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
            assert_eq!(value.to_bits(), f.values()[k].to_bits());
        }
    }

    proptest! {
        #[test]
        fn basis_is_a_partition_of_unity(xi in 0.0f64..1.0, eta in 0.0f64..1.0) {
            let phi = basis_values(xi, eta);
            let sum: f64 = phi.iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-14);
            prop_assert!(phi.iter().all(|&v| v >= 0.0));
            let grad = basis_gradients(xi, eta);
            let (gx, gy) = grad.iter().fold((0.0, 0.0), |acc, g| (acc.0 + g.0, acc.1 + g.1));
            prop_assert!(gx.abs() <= 1e-14 && gy.abs() <= 1e-14);
        }

        #[test]
        fn integrate_matches_closed_form_for_random_bilinears(
            a in -2.0f64..2.0, bx in -2.0f64..2.0, cy in -2.0f64..2.0, dxy in -2.0f64..2.0,
        ) {
            let mesh = StructuredMesh::unit_square(5, 9).unwrap();
            let f = NodalField::from_fn(&mesh, |x, y| a + bx * x + cy * y + dxy * x * y);
            let exact = a + bx / 2.0 + cy / 2.0 + dxy / 4.0;
            prop_assert!((mesh.integrate(&f).unwrap() - exact).abs() <= 1e-13);
        }

        #[test]
        fn point_eval_is_a_convex_combination(x in 0.0f64..1.0, y in 0.0f64..1.0) {
            let mesh = StructuredMesh::unit_square(3, 4).unwrap();
            let f = NodalField::from_fn(&mesh, |u, v| (7.0 * u - 3.0 * v).cos());
            let val = f.eval(x, y).unwrap();
            let lo = f.values().iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = f.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(val >= lo - 1e-14 && val <= hi + 1e-14);
        }
    }
}
