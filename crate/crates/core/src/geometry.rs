//! Geometry maps, multi-patch topology and the global DOF numbering.
//!
//! Sides of the parameter square are numbered `0: x = 0`, `1: x = 1`,
//! `2: y = 0`, `3: y = 1`; corners `0: (0,0)`, `1: (1,0)`, `2: (0,1)`, `3: (1,1)`.

use std::collections::BTreeMap;

use crate::bspline::KnotVector;
use crate::error::{Error, Result};
use crate::quadrature::gauss_rule;
use crate::tensor::TensorSpace;

/// Marker for local DOFs eliminated by the Dirichlet condition.
pub const BOUNDARY: usize = usize::MAX;

pub type Point = [f64; 2];

/// One of the four sides of the parameter square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    West,
    East,
    South,
    North,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::West, Side::East, Side::South, Side::North];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Side> {
        Side::ALL
            .get(i)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("side index {i} outside 0..4")))
    }

    /// Parameter point at position `t` along the side.
    pub fn param(self, t: f64) -> Point {
        match self {
            Side::West => [0.0, t],
            Side::East => [1.0, t],
            Side::South => [t, 0.0],
            Side::North => [t, 1.0],
        }
    }

    /// Local tensor index `(i, j)` of the `t`-th DOF along the side.
    pub fn local_dof(self, t: usize, n: usize) -> (usize, usize) {
        match self {
            Side::West => (0, t),
            Side::East => (n - 1, t),
            Side::South => (t, 0),
            Side::North => (t, n - 1),
        }
    }

    /// Corners at `t = 0` and `t = 1`.
    pub fn corners(self) -> [usize; 2] {
        match self {
            Side::West => [0, 2],
            Side::East => [1, 3],
            Side::South => [0, 1],
            Side::North => [2, 3],
        }
    }
}

fn corner_param(c: usize) -> Point {
    [(c & 1) as f64, (c >> 1) as f64]
}

/// First and second derivatives of a geometry map at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryDerivs {
    pub point: Point,
    /// `jac[i][k] = ∂G_i / ∂x_k`.
    pub jac: [[f64; 2]; 2],
    /// `hess[i][k][l] = ∂²G_i / ∂x_k ∂x_l`.
    pub hess: [[[f64; 2]; 2]; 2],
}

impl GeometryDerivs {
    pub fn det(&self) -> f64 {
        self.jac[0][0] * self.jac[1][1] - self.jac[0][1] * self.jac[1][0]
    }
}

/// `G(x, y) = origin + (sx x, sy y)` with `sx, sy > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAligned {
    pub origin: Point,
    pub scale: [f64; 2],
}

/// Tensor B-spline map from the unit square to the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryMap {
    ku: KnotVector,
    kv: KnotVector,
    /// Control points, `u`-fastest.
    control: Vec<Point>,
}

impl GeometryMap {
    pub fn new(ku: KnotVector, kv: KnotVector, control: Vec<Point>) -> Result<Self> {
        let expected = ku.num_basis() * kv.num_basis();
        if control.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: control.len() });
        }
        if control.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("control points must be finite".into()));
        }
        Ok(Self { ku, kv, control })
    }

    /// Bilinear map through the corners `(0,0), (1,0), (0,1), (1,1)`.
    pub fn bilinear(c00: Point, c10: Point, c01: Point, c11: Point) -> Self {
        let k = KnotVector::uniform(1, 1).expect("degree-1 single interval");
        Self::new(k.clone(), k, vec![c00, c10, c01, c11]).expect("four control points")
    }

    /// Axis-aligned rectangle `[x0, x0 + w] × [y0, y0 + h]`.
    pub fn rectangle(x0: f64, y0: f64, w: f64, h: f64) -> Self {
        Self::bilinear([x0, y0], [x0 + w, y0], [x0, y0 + h], [x0 + w, y0 + h])
    }

    /// Unit square translated by `(dx, dy)`.
    pub fn translated_unit_square(dx: f64, dy: f64) -> Self {
        Self::rectangle(dx, dy, 1.0, 1.0)
    }

    pub fn knots_u(&self) -> &KnotVector {
        &self.ku
    }

    pub fn knots_v(&self) -> &KnotVector {
        &self.kv
    }

    pub fn control_points(&self) -> &[Point] {
        &self.control
    }

    pub fn control_dims(&self) -> (usize, usize) {
        (self.ku.num_basis(), self.kv.num_basis())
    }

    /// Point, Jacobian and second derivatives at `(x, y)` in the closed square.
    pub fn derivs(&self, x: f64, y: f64) -> GeometryDerivs {
        let (pu, pv) = (self.ku.degree(), self.kv.degree());
        let su = self.ku.find_span(x);
        let sv = self.kv.find_span(y);
        let bu = self.ku.basis_ders(su, x, 2);
        let bv = self.kv.basis_ders(sv, y, 2);
        let nu = self.ku.num_basis();
        let mut d = [[[0.0; 2]; 3]; 3];
        for b in 0..=pv {
            for a in 0..=pu {
                let c = self.control[(su - pu + a) + nu * (sv - pv + b)];
                for (ru, du) in bu.iter().enumerate() {
                    for (rv, dv) in bv.iter().enumerate() {
                        if ru + rv > 2 {
                            continue;
                        }
                        let w = du[a] * dv[b];
                        d[ru][rv][0] += w * c[0];
                        d[ru][rv][1] += w * c[1];
                    }
                }
            }
        }
        let mut out = GeometryDerivs { point: d[0][0], jac: [[0.0; 2]; 2], hess: [[[0.0; 2]; 2]; 2] };
        for i in 0..2 {
            out.jac[i] = [d[1][0][i], d[0][1][i]];
            out.hess[i] = [[d[2][0][i], d[1][1][i]], [d[1][1][i], d[0][2][i]]];
        }
        out
    }

    pub fn eval(&self, x: f64, y: f64) -> Point {
        self.derivs(x, y).point
    }

    pub fn jacobian(&self, x: f64, y: f64) -> [[f64; 2]; 2] {
        self.derivs(x, y).jac
    }

    /// Physical point and Jacobian.
    pub fn eval_geometry(&self, x: f64, y: f64) -> (Point, [[f64; 2]; 2]) {
        let d = self.derivs(x, y);
        (d.point, d.jac)
    }

    /// Tabulates the spans and basis derivatives of one parameter direction
    /// (`0`: x, `1`: y) at the given points.
    pub fn tabulate_axis(&self, dir: usize, points: &[f64]) -> AxisTable {
        let kv = if dir == 0 { &self.ku } else { &self.kv };
        let w = kv.degree() + 1;
        let mut table = AxisTable { width: w, first: Vec::new(), ders: Vec::new() };
        for &t in points {
            let span = kv.find_span(t);
            let d = kv.basis_ders(span, t, 2);
            table.first.push(span - kv.degree());
            for r in 0..3 {
                table.ders.extend_from_slice(&d[r]);
            }
        }
        table
    }

    /// Same as [`GeometryMap::derivs`] at the tabulated point `(tx[ix], ty[iy])`.
    pub fn derivs_tabulated(&self, tx: &AxisTable, ix: usize, ty: &AxisTable, iy: usize) -> GeometryDerivs {
        let nu = self.ku.num_basis();
        let (wu, wv) = (tx.width, ty.width);
        let bu = &tx.ders[ix * 3 * wu..(ix + 1) * 3 * wu];
        let bv = &ty.ders[iy * 3 * wv..(iy + 1) * 3 * wv];
        let (fu, fv) = (tx.first[ix], ty.first[iy]);
        // combos (ru, rv): 00 10 01 20 11 02
        let combos = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];
        let mut acc = [[0.0; 2]; 6];
        for b in 0..wv {
            for a in 0..wu {
                let c = self.control[(fu + a) + nu * (fv + b)];
                for (s, &(ru, rv)) in combos.iter().enumerate() {
                    let w = bu[ru * wu + a] * bv[rv * wv + b];
                    acc[s][0] += w * c[0];
                    acc[s][1] += w * c[1];
                }
            }
        }
        let mut out = GeometryDerivs { point: acc[0], jac: [[0.0; 2]; 2], hess: [[[0.0; 2]; 2]; 2] };
        for i in 0..2 {
            out.jac[i] = [acc[1][i], acc[2][i]];
            out.hess[i] = [[acc[3][i], acc[4][i]], [acc[4][i], acc[5][i]]];
        }
        out
    }

    /// Detects maps of the form `origin + diag(sx, sy) (x, y)`.
    pub fn axis_aligned(&self) -> Option<AxisAligned> {
        let (nu, nv) = self.control_dims();
        let o = self.control[0];
        let ex = self.control[nu - 1];
        let ey = self.control[nu * (nv - 1)];
        let scale = [ex[0] - o[0], ey[1] - o[1]];
        let size = scale[0].abs().max(scale[1].abs());
        let tol = 1e-13 * (size + o[0].abs() + o[1].abs());
        if (ex[1] - o[1]).abs() > tol || (ey[0] - o[0]).abs() > tol || scale[0] <= 0.0 || scale[1] <= 0.0 {
            return None;
        }
        // splines reproduce linears, so the map is affine iff the control net is
        let gu = self.ku.greville();
        let gv = self.kv.greville();
        for b in 0..nv {
            for a in 0..nu {
                let c = self.control[a + nu * b];
                let e = [o[0] + scale[0] * gu[a], o[1] + scale[1] * gv[b]];
                if (c[0] - e[0]).abs() > tol || (c[1] - e[1]).abs() > tol {
                    return None;
                }
            }
        }
        Some(AxisAligned { origin: o, scale })
    }

    /// Checks `det J > 0` at Gauss nodes on every element of the geometry
    /// knot grid and at the four corners.
    pub fn validate(&self, patch: usize) -> Result<()> {
        let q = gauss_rule(self.ku.degree().max(self.kv.degree()) + 2);
        let bu = self.ku.breakpoints();
        let bv = self.kv.breakpoints();
        let mut pts: Vec<Point> = (0..4).map(corner_param).collect();
        for wu in bu.windows(2) {
            for wv in bv.windows(2) {
                for &s in &q.nodes {
                    for &t in &q.nodes {
                        pts.push([wu[0] + s * (wu[1] - wu[0]), wv[0] + t * (wv[1] - wv[0])]);
                    }
                }
            }
        }
        for [x, y] in pts {
            let det = self.derivs(x, y).det();
            if !(det > 0.0) {
                return Err(Error::SingularJacobian { patch, x, y, det });
            }
        }
        Ok(())
    }

    /// Physical bounding box `(min, max)` of the control net (contains the patch).
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for c in &self.control {
            for i in 0..2 {
                lo[i] = lo[i].min(c[i]);
                hi[i] = hi[i].max(c[i]);
            }
        }
        (lo, hi)
    }
}

/// Basis data of one geometry direction at a fixed list of points.
#[derive(Debug, Clone)]
pub struct AxisTable {
    width: usize,
    first: Vec<usize>,
    /// `[point][order 0..3][local]`.
    ders: Vec<f64>,
}

/// Two patch sides identified as one interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interface {
    pub patch_a: usize,
    pub side_a: Side,
    pub patch_b: usize,
    pub side_b: Side,
    /// Side `b` is traversed in the opposite parameter direction.
    pub reversed: bool,
}

/// Physical vertex shared by one or more patch corners.
#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub point: Point,
    /// `(patch, corner)` pairs meeting at the vertex.
    pub corners: Vec<(usize, usize)>,
    pub on_boundary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiPatchTopology {
    num_patches: usize,
    interfaces: Vec<Interface>,
    /// `side_interface[patch][side]` is the interface index or `None` for a boundary side.
    side_interface: Vec<[Option<usize>; 4]>,
    vertices: Vec<Vertex>,
    tol: f64,
}

impl MultiPatchTopology {
    pub fn num_patches(&self) -> usize {
        self.num_patches
    }

    pub fn interfaces(&self) -> &[Interface] {
        &self.interfaces
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn side_interface(&self, patch: usize, side: Side) -> Option<usize> {
        self.side_interface[patch][side.index()]
    }

    pub fn is_boundary_side(&self, patch: usize, side: Side) -> bool {
        self.side_interface(patch, side).is_none()
    }

    pub fn boundary_sides(&self) -> Vec<(usize, Side)> {
        (0..self.num_patches)
            .flat_map(|k| Side::ALL.into_iter().map(move |s| (k, s)))
            .filter(|&(k, s)| self.is_boundary_side(k, s))
            .collect()
    }

    /// Vertices not on the domain boundary.
    pub fn interior_vertices(&self) -> Vec<usize> {
        (0..self.vertices.len()).filter(|&v| !self.vertices[v].on_boundary).collect()
    }
}

/// Default matching tolerance: `1e-8` times the diameter of the domain's bounding box.
pub fn default_tolerance(patches: &[GeometryMap]) -> f64 {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for g in patches {
        let (a, b) = g.bounding_box();
        for i in 0..2 {
            lo[i] = lo[i].min(a[i]);
            hi[i] = hi[i].max(b[i]);
        }
    }
    1e-8 * ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt()
}

fn close(a: Point, b: Point, tol: f64) -> bool {
    (a[0] - b[0]).hypot(a[1] - b[1]) <= tol
}

/// Identifies interfaces by matching mapped Greville points along patch sides.
pub fn build_topology(
    patches: &[GeometryMap],
    space: &TensorSpace,
    tol: Option<f64>,
) -> Result<MultiPatchTopology> {
    if patches.is_empty() {
        return Err(Error::InvalidArgument("at least one patch is required".into()));
    }
    for (k, g) in patches.iter().enumerate() {
        g.validate(k)?;
    }
    let tol = tol.unwrap_or_else(|| default_tolerance(patches));
    let grev = space.univariate().greville_points();
    let n = grev.len();
    let side_points: Vec<[Vec<Point>; 4]> = patches
        .iter()
        .map(|g| {
            Side::ALL.map(|s| {
                grev.iter()
                    .map(|&t| {
                        let [x, y] = s.param(t);
                        g.eval(x, y)
                    })
                    .collect()
            })
        })
        .collect();

    let mut interfaces = Vec::new();
    let mut side_interface = vec![[None; 4]; patches.len()];
    for ka in 0..patches.len() {
        for sa in Side::ALL {
            for kb in ka + 1..patches.len() {
                for sb in Side::ALL {
                    let pa = &side_points[ka][sa.index()];
                    let pb = &side_points[kb][sb.index()];
                    let forward = (0..n).all(|t| close(pa[t], pb[t], tol));
                    let backward = !forward && (0..n).all(|t| close(pa[t], pb[n - 1 - t], tol));
                    if forward || backward {
                        for (k, s) in [(ka, sa), (kb, sb)] {
                            if side_interface[k][s.index()].is_some() {
                                return Err(Error::NonConforming(format!(
                                    "side {} of patch {k} matches more than one side",
                                    s.index()
                                )));
                            }
                        }
                        side_interface[ka][sa.index()] = Some(interfaces.len());
                        side_interface[kb][sb.index()] = Some(interfaces.len());
                        interfaces.push(Interface {
                            patch_a: ka,
                            side_a: sa,
                            patch_b: kb,
                            side_b: sb,
                            reversed: backward,
                        });
                        continue;
                    }
                    // anything beyond sharing one endpoint violates full matching
                    let shared: Vec<usize> = (0..n)
                        .filter(|&t| pb.iter().any(|y| close(pa[t], *y, tol)))
                        .collect();
                    let interior_hit = shared.iter().any(|&t| t != 0 && t != n - 1)
                        || pb.iter().enumerate().any(|(u, y)| {
                            u != 0 && u != n - 1 && pa.iter().any(|x| close(*x, *y, tol))
                        });
                    if shared.len() > 1 || interior_hit {
                        return Err(Error::PartialMatch {
                            patch_a: ka,
                            side_a: sa.index(),
                            patch_b: kb,
                            side_b: sb.index(),
                        });
                    }
                }
            }
        }
    }

    // group patch corners by physical position
    let mut vertices: Vec<Vertex> = Vec::new();
    for (k, g) in patches.iter().enumerate() {
        for c in 0..4 {
            let [x, y] = corner_param(c);
            let p = g.eval(x, y);
            match vertices.iter_mut().find(|v| close(v.point, p, tol)) {
                Some(v) => v.corners.push((k, c)),
                None => vertices.push(Vertex { point: p, corners: vec![(k, c)], on_boundary: false }),
            }
        }
    }
    for v in &mut vertices {
        v.on_boundary = v.corners.iter().any(|&(k, c)| {
            Side::ALL
                .iter()
                .any(|s| s.corners().contains(&c) && side_interface[k][s.index()].is_none())
        });
    }
    Ok(MultiPatchTopology { num_patches: patches.len(), interfaces, side_interface, vertices, tol })
}

/// Kind of a piece of the DOF partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PieceKind {
    /// DOFs strictly inside a patch.
    Interior { patch: usize },
    /// DOFs on an interface, endpoints excluded.
    Edge { interface: usize },
    /// A single DOF at a non-boundary vertex.
    Vertex { vertex: usize },
}

/// A piece described through local DOFs of a representative patch.
#[derive(Debug, Clone, PartialEq)]
pub struct PieceSpec {
    pub kind: PieceKind,
    pub patch: usize,
    /// Local flat indices in `patch`.
    pub local: Vec<usize>,
}

/// Pieces in the order interiors, edges, vertices.
pub fn classify_pieces(topology: &MultiPatchTopology, space: &TensorSpace) -> Vec<PieceSpec> {
    let n = space.n();
    let mut pieces = Vec::new();
    for k in 0..topology.num_patches() {
        let local = (1..n - 1).flat_map(|j| (1..n - 1).map(move |i| i + n * j)).collect::<Vec<_>>();
        if !local.is_empty() {
            pieces.push(PieceSpec { kind: PieceKind::Interior { patch: k }, patch: k, local });
        }
    }
    for (e, itf) in topology.interfaces().iter().enumerate() {
        let local: Vec<usize> = (1..n - 1)
            .map(|t| {
                let (i, j) = itf.side_a.local_dof(t, n);
                i + n * j
            })
            .collect();
        if !local.is_empty() {
            pieces.push(PieceSpec { kind: PieceKind::Edge { interface: e }, patch: itf.patch_a, local });
        }
    }
    for v in topology.interior_vertices() {
        let (k, c) = topology.vertices()[v].corners[0];
        let (i, j) = ((c & 1) * (n - 1), (c >> 1) * (n - 1));
        pieces.push(PieceSpec { kind: PieceKind::Vertex { vertex: v }, patch: k, local: vec![i + n * j] });
    }
    pieces
}

/// A piece with its global DOFs; the DOF list is the embedding `P_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub kind: PieceKind,
    pub patch: usize,
    pub local: Vec<usize>,
    pub dofs: Vec<usize>,
}

/// Local-to-global numbering for all patches and the piece partition.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    n: usize,
    local_to_global: Vec<Vec<usize>>,
    num_dofs: usize,
    pieces: Vec<Piece>,
}

impl DofMap {
    /// Global DOF count `N`.
    pub fn num_dofs(&self) -> usize {
        self.num_dofs
    }

    pub fn num_patches(&self) -> usize {
        self.local_to_global.len()
    }

    /// Univariate dimension per patch.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Global id of each local DOF of `patch`, or [`BOUNDARY`].
    pub fn patch_map(&self, patch: usize) -> &[usize] {
        &self.local_to_global[patch]
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Copies patch-local values of the global vector (boundary entries set to 0).
    pub fn gather(&self, patch: usize, global: &[f64], local: &mut [f64]) {
        for (l, &g) in local.iter_mut().zip(&self.local_to_global[patch]) {
            *l = if g == BOUNDARY { 0.0 } else { global[g] };
        }
    }

    /// Adds patch-local values into the global vector, skipping boundary entries.
    pub fn scatter_add(&self, patch: usize, local: &[f64], global: &mut [f64]) {
        for (&l, &g) in local.iter().zip(&self.local_to_global[patch]) {
            if g != BOUNDARY {
                global[g] += l;
            }
        }
    }

    /// Number of patches that share each global DOF.
    pub fn multiplicity(&self) -> Vec<usize> {
        let mut m = vec![0; self.num_dofs];
        for map in &self.local_to_global {
            for &g in map {
                if g != BOUNDARY {
                    m[g] += 1;
                }
            }
        }
        m
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Numbers DOFs by identifying coinciding interface and vertex DOFs.
pub fn build_dof_map(topology: &MultiPatchTopology, space: &TensorSpace) -> Result<DofMap> {
    let n = space.n();
    let nloc = n * n;
    let kp = topology.num_patches();
    let mut uf = UnionFind::new(kp * nloc);
    for itf in topology.interfaces() {
        for t in 0..n {
            let (ia, ja) = itf.side_a.local_dof(t, n);
            let tb = if itf.reversed { n - 1 - t } else { t };
            let (ib, jb) = itf.side_b.local_dof(tb, n);
            uf.union(itf.patch_a * nloc + ia + n * ja, itf.patch_b * nloc + ib + n * jb);
        }
    }
    for v in topology.vertices() {
        let ids: Vec<usize> = v
            .corners
            .iter()
            .map(|&(k, c)| k * nloc + (c & 1) * (n - 1) + n * ((c >> 1) * (n - 1)))
            .collect();
        for w in ids.windows(2) {
            uf.union(w[0], w[1]);
        }
    }

    let mut boundary_root = vec![false; kp * nloc];
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for k in 0..kp {
        for l in 0..nloc {
            let root = uf.find(k * nloc + l);
            let (i, j) = (l % n, l / n);
            let on_boundary_side = (i == 0 && topology.is_boundary_side(k, Side::West))
                || (i == n - 1 && topology.is_boundary_side(k, Side::East))
                || (j == 0 && topology.is_boundary_side(k, Side::South))
                || (j == n - 1 && topology.is_boundary_side(k, Side::North));
            boundary_root[root] |= on_boundary_side;
            members.entry(root).or_default().push(k);
        }
    }
    for (root, patches) in &members {
        let mut sorted = patches.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::NonConforming(format!(
                "local DOF {} of patch {} is identified with another DOF of the same patch",
                root % nloc,
                root / nloc
            )));
        }
    }

    let mut global_of_root = vec![BOUNDARY; kp * nloc];
    let mut local_to_global = vec![vec![BOUNDARY; nloc]; kp];
    let mut next = 0;
    for k in 0..kp {
        for l in 0..nloc {
            let root = uf.find(k * nloc + l);
            if boundary_root[root] {
                continue;
            }
            if global_of_root[root] == BOUNDARY {
                global_of_root[root] = next;
                next += 1;
            }
            local_to_global[k][l] = global_of_root[root];
        }
    }

    let pieces = classify_pieces(topology, space)
        .into_iter()
        .map(|s| {
            let dofs = s.local.iter().map(|&l| local_to_global[s.patch][l]).collect::<Vec<_>>();
            Piece { kind: s.kind, patch: s.patch, local: s.local, dofs }
        })
        .filter(|p| p.dofs.iter().all(|&d| d != BOUNDARY))
        .collect::<Vec<_>>();
    let covered: usize = pieces.iter().map(|p| p.dofs.len()).sum();
    if covered != next {
        return Err(Error::NonConforming(format!(
            "pieces cover {covered} of {next} degrees of freedom"
        )));
    }
    Ok(DofMap { n, local_to_global, num_dofs: next, pieces })
}
