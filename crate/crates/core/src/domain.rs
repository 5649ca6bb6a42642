//! Cross-section geometry, the period cell grid and the Poincare constant.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::MagneticPotential;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Rectangle { half_width_2: f64, half_width_3: f64 },
    Disk { radius: f64 },
}

impl Shape {
    /// Closed-set membership of a cross-section point.
    pub fn contains(&self, x: [f64; 2]) -> bool {
        match *self {
            Shape::Rectangle { half_width_2, half_width_3 } => {
                x[0].abs() <= half_width_2 + 1e-14 && x[1].abs() <= half_width_3 + 1e-14
            }
            Shape::Disk { radius } => x[0] * x[0] + x[1] * x[1] <= radius * radius * (1.0 + 1e-14),
        }
    }

    /// Half extents of the bounding box.
    pub fn half_extent(&self) -> [f64; 2] {
        match *self {
            Shape::Rectangle { half_width_2, half_width_3 } => [half_width_2, half_width_3],
            Shape::Disk { radius } => [radius, radius],
        }
    }

    pub fn scaled(&self, s: f64) -> Shape {
        match *self {
            Shape::Rectangle { half_width_2, half_width_3 } => {
                Shape::Rectangle { half_width_2: s * half_width_2, half_width_3: s * half_width_3 }
            }
            Shape::Disk { radius } => Shape::Disk { radius: s * radius },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    Boundary,
    Exterior,
}

/// How the outward normal derivative is formed at a boundary node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormalStencil {
    /// Second order one-sided: `(3 u_b - 4 u_1 + u_2) / 2h` along the inward axis.
    ThreePoint { first: usize, second: usize },
    /// First order along the grid axis best aligned with the normal; `cos` is
    /// the cosine between that axis and the normal.
    Axis { inner: usize, cos: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryNode {
    pub node: usize,
    pub normal: [f64; 2],
    /// Arc-length quadrature weight.
    pub weight: f64,
    pub stencil: NormalStencil,
}

/// A uniform Cartesian discretization of the cross-section.
#[derive(Debug, Clone)]
pub struct CrossSection {
    shape: Shape,
    h: f64,
    n2: usize,
    n3: usize,
    origin: [f64; 2],
    kinds: Vec<NodeKind>,
    interior: Vec<usize>,
    boundary: Vec<BoundaryNode>,
    weights: Vec<f64>,
    r_enc: f64,
}

fn integer_ratio(x: f64, h: f64, what: &str) -> Result<usize> {
    let r = x / h;
    let n = r.round();
    if n < 1.0 || (r - n).abs() > 1e-9 * r.max(1.0) {
        return Err(Error::Geometry(format!("{what} = {x} is not an integer multiple of h = {h}")));
    }
    Ok(n as usize)
}

impl CrossSection {
    /// Rectangle `[-a, a] x [-b, b]` with spacing `h`; `a/h` and `b/h` must be integers
    /// so that the origin is a grid node.
    pub fn rectangle(half_width_2: f64, half_width_3: f64, h: f64) -> Result<Self> {
        if !(half_width_2 > 0.0 && half_width_3 > 0.0 && h > 0.0) {
            return Err(Error::Geometry("rectangle sizes and spacing must be positive".into()));
        }
        let m2 = integer_ratio(half_width_2, h, "half_width_2")?;
        let m3 = integer_ratio(half_width_3, h, "half_width_3")?;
        let n2 = 2 * m2 + 1;
        let n3 = 2 * m3 + 1;
        if n2 < 5 || n3 < 5 {
            return Err(Error::Geometry("rectangle needs at least 4 intervals per side".into()));
        }
        let mut kinds = vec![NodeKind::Interior; n2 * n3];
        let mut weights = vec![h * h; n2 * n3];
        for i3 in 0..n3 {
            for i2 in 0..n2 {
                let j = i2 + n2 * i3;
                let edge2 = i2 == 0 || i2 == n2 - 1;
                let edge3 = i3 == 0 || i3 == n3 - 1;
                if edge2 || edge3 {
                    kinds[j] = NodeKind::Boundary;
                }
                if edge2 {
                    weights[j] *= 0.5;
                }
                if edge3 {
                    weights[j] *= 0.5;
                }
            }
        }
        let mut boundary = Vec::new();
        let edge_weight = |i: usize, n: usize| if i == 0 || i == n - 1 { 0.5 * h } else { h };
        for i3 in 0..n3 {
            let w = edge_weight(i3, n3);
            boundary.push(BoundaryNode {
                node: n2 * i3,
                normal: [-1.0, 0.0],
                weight: w,
                stencil: NormalStencil::ThreePoint { first: 1 + n2 * i3, second: 2 + n2 * i3 },
            });
            boundary.push(BoundaryNode {
                node: n2 - 1 + n2 * i3,
                normal: [1.0, 0.0],
                weight: w,
                stencil: NormalStencil::ThreePoint { first: n2 - 2 + n2 * i3, second: n2 - 3 + n2 * i3 },
            });
        }
        for i2 in 0..n2 {
            let w = edge_weight(i2, n2);
            boundary.push(BoundaryNode {
                node: i2,
                normal: [0.0, -1.0],
                weight: w,
                stencil: NormalStencil::ThreePoint { first: i2 + n2, second: i2 + 2 * n2 },
            });
            boundary.push(BoundaryNode {
                node: i2 + n2 * (n3 - 1),
                normal: [0.0, 1.0],
                weight: w,
                stencil: NormalStencil::ThreePoint { first: i2 + n2 * (n3 - 2), second: i2 + n2 * (n3 - 3) },
            });
        }
        let interior = (0..n2 * n3).filter(|&j| kinds[j] == NodeKind::Interior).collect();
        Ok(CrossSection {
            shape: Shape::Rectangle { half_width_2, half_width_3 },
            h,
            n2,
            n3,
            origin: [-half_width_2, -half_width_3],
            kinds,
            interior,
            boundary,
            weights,
            r_enc: half_width_2.hypot(half_width_3),
        })
    }

    /// Disk of the given radius, discretized by masking: nodes strictly inside are
    /// interior, and grid nodes outside that touch an interior node carry the
    /// Dirichlet data. Boundary accuracy is first order.
    pub fn disk(radius: f64, h: f64) -> Result<Self> {
        if !(radius > 0.0 && h > 0.0) {
            return Err(Error::Geometry("disk radius and spacing must be positive".into()));
        }
        let m = integer_ratio(radius, h, "radius")?;
        if m < 3 {
            return Err(Error::Geometry("disk needs at least 3 intervals per radius".into()));
        }
        let n = 2 * (m + 1) + 1;
        let origin = [-(radius + h), -(radius + h)];
        let coord = |i: usize| origin[0] + i as f64 * h;
        let mut kinds = vec![NodeKind::Exterior; n * n];
        for i3 in 0..n {
            for i2 in 0..n {
                let (x, y) = (coord(i2), coord(i3));
                if x * x + y * y < radius * radius * (1.0 - 1e-12) {
                    kinds[i2 + n * i3] = NodeKind::Interior;
                }
            }
        }
        let mut bnodes = Vec::new();
        for i3 in 1..n - 1 {
            for i2 in 1..n - 1 {
                let j = i2 + n * i3;
                if kinds[j] != NodeKind::Exterior {
                    continue;
                }
                let touches = [j - 1, j + 1, j - n, j + n].iter().any(|&q| kinds[q] == NodeKind::Interior);
                if touches {
                    bnodes.push(j);
                }
            }
        }
        for &j in &bnodes {
            kinds[j] = NodeKind::Boundary;
        }
        let mut boundary: Vec<BoundaryNode> = bnodes
            .iter()
            .map(|&j| {
                let (x, y) = (coord(j % n), coord(j / n));
                let r = x.hypot(y);
                let normal = [x / r, y / r];
                // inward neighbour along the axis best aligned with the normal
                let (inner, cos) = if normal[0].abs() >= normal[1].abs() {
                    (if normal[0] > 0.0 { j - 1 } else { j + 1 }, normal[0].abs())
                } else {
                    (if normal[1] > 0.0 { j - n } else { j + n }, normal[1].abs())
                };
                BoundaryNode { node: j, normal, weight: 0.0, stencil: NormalStencil::Axis { inner, cos } }
            })
            .collect();
        boundary.sort_by(|a, b| {
            let ta = a.normal[1].atan2(a.normal[0]);
            let tb = b.normal[1].atan2(b.normal[0]);
            ta.partial_cmp(&tb).unwrap()
        });
        let nb = boundary.len();
        let angles: Vec<f64> = boundary.iter().map(|b| b.normal[1].atan2(b.normal[0])).collect();
        for i in 0..nb {
            let prev = angles[(i + nb - 1) % nb];
            let next = angles[(i + 1) % nb];
            let mut gap = next - prev;
            if gap <= 0.0 {
                gap += 2.0 * std::f64::consts::PI;
            }
            boundary[i].weight = 0.5 * gap * radius;
        }
        let weights = kinds.iter().map(|k| if *k == NodeKind::Interior { h * h } else { 0.0 }).collect();
        let interior = (0..n * n).filter(|&j| kinds[j] == NodeKind::Interior).collect();
        let r_enc = bnodes.iter().map(|&j| coord(j % n).hypot(coord(j / n))).fold(radius, f64::max);
        Ok(CrossSection {
            shape: Shape::Disk { radius },
            h,
            n2: n,
            n3: n,
            origin,
            kinds,
            interior,
            boundary,
            weights,
            r_enc,
        })
    }

    pub fn new(shape: Shape, h: f64) -> Result<Self> {
        match shape {
            Shape::Rectangle { half_width_2, half_width_3 } => Self::rectangle(half_width_2, half_width_3, h),
            Shape::Disk { radius } => Self::disk(radius, h),
        }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    /// Node counts along x2 and x3.
    pub fn dims(&self) -> (usize, usize) {
        (self.n2, self.n3)
    }
    pub fn len(&self) -> usize {
        self.n2 * self.n3
    }
    pub fn is_empty(&self) -> bool {
        self.interior.is_empty()
    }
    pub fn kind(&self, j: usize) -> NodeKind {
        self.kinds[j]
    }
    pub fn kinds(&self) -> &[NodeKind] {
        &self.kinds
    }
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }
    pub fn boundary(&self) -> &[BoundaryNode] {
        &self.boundary
    }
    /// Volume quadrature weights (trapezoid on the rectangle, interior cells on the disk).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    /// Smallest radius R with every used node and the shape inside the closed ball B(0, R).
    pub fn r_enc(&self) -> f64 {
        self.r_enc
    }
    pub fn is_rectangle(&self) -> bool {
        matches!(self.shape, Shape::Rectangle { .. })
    }

    pub fn coords(&self, j: usize) -> [f64; 2] {
        [self.origin[0] + (j % self.n2) as f64 * self.h, self.origin[1] + (j / self.n2) as f64 * self.h]
    }

    pub fn index(&self, i2: usize, i3: usize) -> usize {
        i2 + self.n2 * i3
    }

    /// Index of the node at the origin.
    pub fn origin_node(&self) -> Option<usize> {
        let i2 = (-self.origin[0] / self.h).round() as usize;
        let i3 = (-self.origin[1] / self.h).round() as usize;
        let j = self.index(i2, i3);
        let c = self.coords(j);
        (c[0].abs() < 1e-12 && c[1].abs() < 1e-12).then_some(j)
    }

    /// Outward normal derivative at a boundary node from node values `u`.
    pub fn normal_derivative(&self, b: &BoundaryNode, u: &[Complex64]) -> Complex64 {
        match b.stencil {
            NormalStencil::ThreePoint { first, second } => {
                (u[b.node] * 3.0 - u[first] * 4.0 + u[second]) / (2.0 * self.h)
            }
            NormalStencil::Axis { inner, cos } => (u[b.node] - u[inner]) / (self.h * cos),
        }
    }
}

/// Uniform grid on the period cell `(0,T) x [0,1) x cross-section`.
#[derive(Debug, Clone)]
pub struct WaveguideGrid {
    pub cs: CrossSection,
    pub n1: usize,
    pub n_t: usize,
    pub t_final: f64,
}

impl WaveguideGrid {
    pub fn new(cs: CrossSection, n1: usize, n_t: usize, t_final: f64) -> Result<Self> {
        if n1 < 3 {
            return Err(Error::Geometry("need at least 3 nodes along x1".into()));
        }
        if n_t == 0 || t_final.is_nan() || t_final <= 0.0 {
            return Err(Error::Geometry("time grid needs n_t >= 1 and T > 0".into()));
        }
        Ok(WaveguideGrid { cs, n1, n_t, t_final })
    }

    pub fn h1(&self) -> f64 {
        1.0 / self.n1 as f64
    }
    pub fn dt(&self) -> f64 {
        self.t_final / self.n_t as f64
    }
    pub fn time(&self, n: usize) -> f64 {
        if n == self.n_t {
            self.t_final
        } else {
            n as f64 * self.dt()
        }
    }
    pub fn x1(&self, i1: usize) -> f64 {
        i1 as f64 * self.h1()
    }
    /// Unknowns per time level.
    pub fn level_len(&self) -> usize {
        self.n1 * self.cs.len()
    }
    pub fn point(&self, i1: usize, j: usize) -> [f64; 3] {
        let c = self.cs.coords(j);
        [self.x1(i1), c[0], c[1]]
    }
    /// Same grid with another time resolution.
    pub fn with_steps(&self, n_t: usize) -> Self {
        WaveguideGrid { n_t, ..self.clone() }
    }
}

fn apply_dirichlet_laplacian(cs: &CrossSection, map: &[usize], x: &[f64], out: &mut [f64]) {
    // -Delta_h on interior nodes, zero Dirichlet data
    let (n2, _) = cs.dims();
    let inv_h2 = 1.0 / (cs.h() * cs.h());
    let get = |j: usize| if map[j] == usize::MAX { 0.0 } else { x[map[j]] };
    for (k, &j) in cs.interior().iter().enumerate() {
        let s = get(j - 1) + get(j + 1) + get(j - n2) + get(j + n2);
        out[k] = (4.0 * x[k] - s) * inv_h2;
    }
}

fn interior_map(cs: &CrossSection) -> Vec<usize> {
    let mut map = vec![usize::MAX; cs.len()];
    for (k, &j) in cs.interior().iter().enumerate() {
        map[j] = k;
    }
    map
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cg_solve(cs: &CrossSection, map: &[usize], b: &[f64], tol: f64) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let bnorm = rr.sqrt();
    for _ in 0..10 * n + 100 {
        if rr.sqrt() <= tol * bnorm {
            break;
        }
        apply_dirichlet_laplacian(cs, map, &p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    x
}

pub const EIGEN_TOL: f64 = 1e-10;
pub const EIGEN_MAX_ITER: usize = 10_000;

/// Smallest Dirichlet eigenvalue of the discrete cross-section Laplacian,
/// by inverse power iteration.
pub fn dirichlet_ground_state(cs: &CrossSection) -> Result<(f64, Vec<f64>)> {
    let map = interior_map(cs);
    let n = cs.interior().len();
    if n == 0 {
        return Err(Error::Geometry("cross-section has no interior nodes".into()));
    }
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut lx = vec![0.0; n];
    let mut lambda = f64::INFINITY;
    let mut change = f64::INFINITY;
    for it in 0..EIGEN_MAX_ITER {
        let mut y = cg_solve(cs, &map, &x, 1e-14);
        let norm = dot(&y, &y).sqrt();
        y.iter_mut().for_each(|v| *v /= norm);
        apply_dirichlet_laplacian(cs, &map, &y, &mut lx);
        let next = dot(&y, &lx);
        change = ((next - lambda) / next).abs();
        lambda = next;
        x = y;
        if change < EIGEN_TOL && it > 2 {
            return Ok((lambda, x));
        }
    }
    Err(Error::EigenNonConvergence { iterations: EIGEN_MAX_ITER, residual: change })
}

/// Poincare constant `C = 1 / lambda_1` of the discretized cross-section.
pub fn poincare_constant(cs: &CrossSection) -> Result<f64> {
    dirichlet_ground_state(cs).map(|(l, _)| 1.0 / l)
}

/// Sampled sup-norm of `|A|` over `[0,1) x` cross-section, on a grid four times
/// finer than the cross-section grid. It is a lower bound of the true sup-norm.
pub fn sampled_sup_norm(a: &MagneticPotential, cs: &CrossSection) -> f64 {
    let [e2, e3] = cs.shape().half_extent();
    let hs = cs.h() / 4.0;
    let m2 = (2.0 * e2 / hs).round() as usize;
    let m3 = (2.0 * e3 / hs).round() as usize;
    let mut sup: f64 = 0.0;
    for k in 0..32 {
        let x1 = k as f64 / 32.0;
        for i3 in 0..=m3 {
            for i2 in 0..=m2 {
                let x = [-e2 + i2 as f64 * hs, -e3 + i3 as f64 * hs];
                if !cs.shape().contains(x) {
                    continue;
                }
                let v = a.eval([x1, x[0], x[1]]);
                sup = sup.max((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt());
            }
        }
    }
    sup
}

/// `(sqrt 2 - 1) / sqrt C - ||A||_inf`: positive iff `A` is admissible at sampling resolution.
pub fn admissibility_bound(poincare: f64) -> f64 {
    (2f64.sqrt() - 1.0) / poincare.sqrt()
}

pub fn admissibility_margin(a: &MagneticPotential, cs: &CrossSection) -> Result<f64> {
    let c = poincare_constant(cs)?;
    Ok(admissibility_bound(c) - sampled_sup_norm(a, cs))
}

/// Squared discrete L2 norm of a cross-section field (zero Dirichlet data assumed).
pub fn discrete_l2_sq(cs: &CrossSection, u: &[Complex64]) -> f64 {
    cs.interior().iter().map(|&j| u[j].norm_sqr() * cs.h() * cs.h()).sum()
}

/// Squared norm of the forward-difference gradient over all grid links.
pub fn discrete_gradient_sq(cs: &CrossSection, u: &[Complex64]) -> f64 {
    discrete_magnetic_gradient_sq(cs, u, |_| [0.0, 0.0])
}

/// Squared norm of the link-wise magnetic gradient
/// `(u_+ - u)/h + i a_mid (u_+ + u)/2`, with `a_mid` the potential at the link midpoint.
pub fn discrete_magnetic_gradient_sq<F: Fn([f64; 2]) -> [f64; 2]>(cs: &CrossSection, u: &[Complex64], a: F) -> f64 {
    let (n2, n3) = cs.dims();
    let h = cs.h();
    let i = Complex64::new(0.0, 1.0);
    let mut acc = 0.0;
    for i3 in 0..n3 {
        for i2 in 0..n2 {
            let j = cs.index(i2, i3);
            if cs.kind(j) == NodeKind::Exterior {
                continue;
            }
            let x = cs.coords(j);
            if i2 + 1 < n2 && cs.kind(j + 1) != NodeKind::Exterior {
                let am = a([x[0] + 0.5 * h, x[1]])[0];
                let d = (u[j + 1] - u[j]) / h + i * am * (u[j + 1] + u[j]) * 0.5;
                acc += d.norm_sqr() * h * h;
            }
            if i3 + 1 < n3 && cs.kind(j + n2) != NodeKind::Exterior {
                let am = a([x[0], x[1] + 0.5 * h])[1];
                let d = (u[j + n2] - u[j]) / h + i * am * (u[j + n2] + u[j]) * 0.5;
                acc += d.norm_sqr() * h * h;
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rectangle_invariants() {
        let cs = CrossSection::rectangle(0.5, 0.25, 1.0 / 16.0).unwrap();
        assert_eq!(cs.dims(), (17, 9));
        let o = cs.origin_node().expect("origin is a node");
        assert_eq!(cs.kind(o), NodeKind::Interior);
        for b in cs.boundary() {
            assert!(((b.normal[0].hypot(b.normal[1])) - 1.0).abs() < 1e-12);
            assert_eq!(cs.kind(b.node), NodeKind::Boundary);
        }
        let perimeter: f64 = cs.boundary().iter().map(|b| b.weight).sum();
        assert!((perimeter - 3.0).abs() < 1e-12);
        for j in 0..cs.len() {
            let c = cs.coords(j);
            assert!(c[0].hypot(c[1]) <= cs.r_enc() + 1e-12);
        }
        let area: f64 = cs.weights().iter().sum();
        assert!((area - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rectangle_rejects_misaligned_spacing() {
        assert!(CrossSection::rectangle(0.5, 0.5, 0.3).is_err());
        assert!(CrossSection::rectangle(0.5, 0.5, 0.5).is_err());
    }

    #[test]
    fn disk_invariants() {
        let cs = CrossSection::disk(1.0, 1.0 / 16.0).unwrap();
        assert_eq!(cs.kind(cs.origin_node().unwrap()), NodeKind::Interior);
        let perimeter: f64 = cs.boundary().iter().map(|b| b.weight).sum();
        assert!((perimeter - 2.0 * PI).abs() < 1e-9);
        for b in cs.boundary() {
            assert!(((b.normal[0].hypot(b.normal[1])) - 1.0).abs() < 1e-12);
            let c = cs.coords(b.node);
            assert!(c[0].hypot(c[1]) <= cs.r_enc() + 1e-12);
        }
    }

    #[test]
    fn waveguide_grid_steps() {
        let cs = CrossSection::rectangle(0.25, 0.25, 1.0 / 16.0).unwrap();
        let g = WaveguideGrid::new(cs, 8, 7, 0.7).unwrap();
        assert_eq!(g.h1(), 1.0 / 8.0);
        assert!((g.dt() * g.n_t as f64 - g.t_final).abs() < 1e-12);
        assert_eq!(g.time(7), 0.7);
    }

    #[test]
    fn discrete_ground_state_matches_symbol() {
        let h = 1.0 / 16.0;
        let cs = CrossSection::rectangle(0.5, 0.5, h).unwrap();
        let lambda = 1.0 / poincare_constant(&cs).unwrap();
        let symbol = 2.0 * 4.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
        assert!((lambda - symbol).abs() < 1e-8 * symbol);
    }

    #[test]
    fn normal_derivative_of_linear_profile() {
        let cs = CrossSection::rectangle(0.5, 0.5, 1.0 / 8.0).unwrap();
        let u: Vec<Complex64> = (0..cs.len()).map(|j| Complex64::new(0.5 - cs.coords(j)[0], 0.0)).collect();
        for b in cs.boundary() {
            let d = cs.normal_derivative(b, &u);
            assert!((d.re - (-b.normal[0])).abs() < 1e-12);
        }
    }
}
