//! Triangular meshes of the disk and the square with an ordered,
//! arc-length parameterized boundary loop.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Shape of the computational domain. The disk is centered at the origin,
/// the square occupies `[0, side]²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainKind {
    Disk { radius: f64 },
    Square { side: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub kind: DomainKind,
    /// Number of boundary segments of the coarsest mesh.
    pub n_boundary: usize,
    /// Uniform refinement passes applied after construction.
    pub refinements: usize,
}

impl DomainSpec {
    pub fn disk(radius: f64, n_boundary: usize, refinements: usize) -> Self {
        Self {
            kind: DomainKind::Disk { radius },
            n_boundary,
            refinements,
        }
    }

    pub fn square(side: f64, n_boundary: usize, refinements: usize) -> Self {
        Self {
            kind: DomainKind::Square { side },
            n_boundary,
            refinements,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            DomainKind::Disk { radius } if !(radius > 0.0 && radius.is_finite()) => {
                return Err(Error::Config(format!(
                    "disk radius must be positive, got {radius}"
                )));
            }
            DomainKind::Square { side } if !(side > 0.0 && side.is_finite()) => {
                return Err(Error::Config(format!("square side must be positive, got {side}")));
            }
            DomainKind::Square { .. } if self.n_boundary % 4 != 0 => {
                return Err(Error::Config(format!(
                    "square meshes need n_boundary divisible by 4, got {}",
                    self.n_boundary
                )));
            }
            _ => {}
        }
        if self.n_boundary < 3 {
            return Err(Error::Config(format!(
                "n_boundary must be at least 3, got {}",
                self.n_boundary
            )));
        }
        Ok(())
    }
}

/// One segment of the boundary loop, oriented counterclockwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
    /// Arc-length coordinate of `a`.
    pub s_start: f64,
    pub normal: Point,
}

impl BoundaryEdge {
    pub fn s_end(&self) -> f64 {
        self.s_start + self.length
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<BoundaryEdge>,
    perimeter: f64,
    kind: DomainKind,
}

/// Builds the coarse mesh described by `spec` and refines it uniformly.
pub fn build_mesh(spec: &DomainSpec) -> Result<Mesh> {
    spec.validate()?;
    let mut mesh = match spec.kind {
        DomainKind::Disk { radius } => disk_mesh(radius, spec.n_boundary),
        DomainKind::Square { side } => square_mesh(side, spec.n_boundary / 4),
    };
    for _ in 0..spec.refinements {
        mesh = refine_uniform(&mesh);
    }
    Ok(mesh)
}

/// Splits every triangle into four. Boundary midpoints of disk meshes are
/// projected back onto the circle.
pub fn refine_uniform(mesh: &Mesh) -> Mesh {
    let mut vertices = mesh.vertices.clone();
    let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();

    let mut midpoint = |i: usize, j: usize, vertices: &mut Vec<Point>| -> usize {
        let key = (i.min(j), i.max(j));
        *midpoints.entry(key).or_insert_with(|| {
            let (p, q) = (vertices[i], vertices[j]);
            vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
            vertices.len() - 1
        })
    };

    let mut loop_vertices = Vec::with_capacity(2 * mesh.boundary.len());
    for edge in &mesh.boundary {
        let m = midpoint(edge.a, edge.b, &mut vertices);
        if let DomainKind::Disk { radius } = mesh.kind {
            let [x, y] = vertices[m];
            let r = x.hypot(y);
            vertices[m] = [radius * x / r, radius * y / r];
        }
        loop_vertices.push(edge.a);
        loop_vertices.push(m);
    }

    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    for &[a, b, c] in &mesh.triangles {
        let ab = midpoint(a, b, &mut vertices);
        let bc = midpoint(b, c, &mut vertices);
        let ca = midpoint(c, a, &mut vertices);
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }

    Mesh::assemble(vertices, triangles, &loop_vertices, mesh.kind)
}

fn signed_area(p: Point, q: Point, r: Point) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
}

/// Concentric rings with equally spaced boundary vertices starting at angle 0.
/// For even `n` the upper half is triangulated and mirrored, so the mesh is
/// symmetric under `y ↦ -y`.
fn disk_mesh(radius: f64, n: usize) -> Mesh {
    let rings = ((n as f64 / (2.0 * PI)).round() as usize).max(1);
    let symmetric = n % 2 == 0;
    let ring_count = |k: usize| -> usize {
        if k == rings {
            return n;
        }
        let raw = (n as f64 * k as f64 / rings as f64).round() as usize;
        if symmetric {
            (2 * ((raw + 1) / 2)).max(4)
        } else {
            raw.max(3)
        }
    };

    let mut vertices = vec![[0.0, 0.0]];
    // ring_ids[k - 1][j] is the vertex at angle 2πj/n_k on ring k.
    let mut ring_ids: Vec<Vec<usize>> = Vec::with_capacity(rings);
    for k in 1..=rings {
        let count = ring_count(k);
        let r = radius * k as f64 / rings as f64;
        let ids = (0..count)
            .map(|j| {
                let theta = 2.0 * PI * j as f64 / count as f64;
                vertices.push([r * theta.cos(), r * theta.sin()]);
                vertices.len() - 1
            })
            .collect();
        ring_ids.push(ids);
    }

    let mut triangles = Vec::new();
    let first = &ring_ids[0];
    for j in 0..first.len() {
        triangles.push([0, first[j], first[(j + 1) % first.len()]]);
    }

    for k in 1..rings {
        let (inner, outer) = (&ring_ids[k - 1], &ring_ids[k]);
        if symmetric {
            let half = |ids: &[usize]| -> (Vec<usize>, Vec<f64>) {
                let count = ids.len();
                (0..=count / 2)
                    .map(|j| (ids[j], 2.0 * PI * j as f64 / count as f64))
                    .unzip()
            };
            let (ia, aa) = half(inner);
            let (ib, ab) = half(outer);
            let upper = zipper(&ia, &aa, &ib, &ab);
            let mirror = |ids: &[usize], v: usize| -> usize {
                let j = ids.iter().position(|&x| x == v).expect("ring vertex");
                ids[(ids.len() - j) % ids.len()]
            };
            for &[a, b, c] in &upper {
                triangles.push([a, b, c]);
                let m = |v: usize| {
                    if inner.contains(&v) {
                        mirror(inner, v)
                    } else {
                        mirror(outer, v)
                    }
                };
                triangles.push([m(a), m(c), m(b)]);
            }
        } else {
            let full = |ids: &[usize]| -> (Vec<usize>, Vec<f64>) {
                let count = ids.len();
                (0..=count)
                    .map(|j| (ids[j % count], 2.0 * PI * j as f64 / count as f64))
                    .unzip()
            };
            let (ia, aa) = full(inner);
            let (ib, ab) = full(outer);
            triangles.extend(zipper(&ia, &aa, &ib, &ab));
        }
    }

    for tri in &mut triangles {
        if signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]) < 0.0 {
            tri.swap(1, 2);
        }
    }

    let loop_vertices = ring_ids[rings - 1].clone();
    Mesh::assemble(vertices, triangles, &loop_vertices, DomainKind::Disk { radius })
}

/// Triangulates the strip between two angle-sorted vertex chains that share
/// their first and last angles.
fn zipper(ia: &[usize], aa: &[f64], ib: &[usize], ab: &[f64]) -> Vec<[usize; 3]> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(ia.len() + ib.len());
    while i + 1 < ia.len() || j + 1 < ib.len() {
        let advance_inner = if i + 1 == ia.len() {
            false
        } else if j + 1 == ib.len() {
            true
        } else {
            aa[i + 1] <= ab[j + 1]
        };
        if advance_inner {
            out.push([ia[i], ia[i + 1], ib[j]]);
            i += 1;
        } else {
            out.push([ia[i], ib[j + 1], ib[j]]);
            j += 1;
        }
    }
    out
}

fn square_mesh(side: f64, m: usize) -> Mesh {
    let id = |i: usize, j: usize| j * (m + 1) + i;
    let h = side / m as f64;
    let mut vertices = Vec::with_capacity((m + 1) * (m + 1));
    for j in 0..=m {
        for i in 0..=m {
            vertices.push([i as f64 * h, j as f64 * h]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * m * m);
    for j in 0..m {
        for i in 0..m {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let mut loop_vertices = Vec::with_capacity(4 * m);
    loop_vertices.extend((0..m).map(|i| id(i, 0)));
    loop_vertices.extend((0..m).map(|j| id(m, j)));
    loop_vertices.extend((1..=m).rev().map(|i| id(i, m)));
    loop_vertices.extend((1..=m).rev().map(|j| id(0, j)));
    Mesh::assemble(vertices, triangles, &loop_vertices, DomainKind::Square { side })
}

impl Mesh {
    fn assemble(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        loop_vertices: &[usize],
        kind: DomainKind,
    ) -> Self {
        let n = loop_vertices.len();
        let mut boundary = Vec::with_capacity(n);
        let mut s = 0.0;
        for k in 0..n {
            let (a, b) = (loop_vertices[k], loop_vertices[(k + 1) % n]);
            let (p, q) = (vertices[a], vertices[b]);
            let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
            let length = dx.hypot(dy);
            boundary.push(BoundaryEdge {
                a,
                b,
                length,
                s_start: s,
                normal: [dy / length, -dx / length],
            });
            s += length;
        }
        Self {
            vertices,
            triangles,
            boundary,
            perimeter: s,
            kind,
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        self.boundary.iter().map(|e| e.length).collect()
    }

    /// Boundary loop vertices in arc-length order (the start vertex of each edge).
    pub fn boundary_vertices(&self) -> Vec<usize> {
        self.boundary.iter().map(|e| e.a).collect()
    }

    /// Arc-length coordinate of each boundary loop vertex.
    pub fn boundary_coordinates(&self) -> Vec<f64> {
        self.boundary.iter().map(|e| e.s_start).collect()
    }

    /// Restriction of a nodal field to the boundary loop vertices.
    pub fn boundary_trace(&self, u: &[f64]) -> Vec<f64> {
        self.boundary.iter().map(|e| u[e.a]).collect()
    }

    /// Mean of a nodal field over each boundary edge.
    pub fn edge_means(&self, u: &[f64]) -> Vec<f64> {
        self.boundary.iter().map(|e| 0.5 * (u[e.a] + u[e.b])).collect()
    }

    /// Edge index and local offset of arc-length coordinate `s` (taken modulo the perimeter).
    pub fn locate(&self, s: f64) -> (usize, f64) {
        let s = s.rem_euclid(self.perimeter);
        let k = self
            .boundary
            .partition_point(|e| e.s_start <= s)
            .saturating_sub(1);
        let edge = &self.boundary[k];
        (k, (s - edge.s_start).clamp(0.0, edge.length))
    }

    /// Linear interpolation of a nodal field along the boundary at coordinate `s`.
    pub fn trace_at(&self, u: &[f64], s: f64) -> f64 {
        let (k, x) = self.locate(s);
        let e = &self.boundary[k];
        let w = x / e.length;
        (1.0 - w) * u[e.a] + w * u[e.b]
    }

    /// Whether all boundary edges have the same length within `rel_tol`.
    pub fn has_uniform_boundary(&self, rel_tol: f64) -> bool {
        let (lo, hi) = self
            .boundary
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), e| {
                (lo.min(e.length), hi.max(e.length))
            });
        hi - lo <= rel_tol * hi
    }

    /// Checks the structural invariants: positive triangles, one closed
    /// boundary loop, each boundary edge owned by exactly one triangle.
    pub fn validate(&self) -> Result<()> {
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= self.vertices.len()) {
                return Err(Error::Internal(format!(
                    "triangle {t} references a missing vertex"
                )));
            }
            if self.triangle_area(t) <= 0.0 {
                return Err(Error::Internal(format!(
                    "triangle {t} is not positively oriented"
                )));
            }
        }
        let n = self.boundary.len();
        let mut total = 0.0;
        for k in 0..n {
            let (e, next) = (&self.boundary[k], &self.boundary[(k + 1) % n]);
            if e.b != next.a {
                return Err(Error::Internal(format!("boundary loop broken after edge {k}")));
            }
            if k + 1 < n && next.s_start <= e.s_start {
                return Err(Error::Internal(format!("arc length not increasing at edge {k}")));
            }
            total += e.length;
        }
        if (total - self.perimeter).abs() > 1e-12 * self.perimeter {
            return Err(Error::Internal("perimeter does not match edge lengths".into()));
        }

        let mut owners: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *owners.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        for (k, e) in self.boundary.iter().enumerate() {
            let key = (e.a.min(e.b), e.a.max(e.b));
            if owners.get(&key) != Some(&1) {
                return Err(Error::Internal(format!(
                    "boundary edge {k} is not owned by exactly one triangle"
                )));
            }
        }
        let boundary_keys: std::collections::HashSet<_> = self
            .boundary
            .iter()
            .map(|e| (e.a.min(e.b), e.a.max(e.b)))
            .collect();
        if let Some((key, _)) = owners
            .iter()
            .find(|(key, &count)| count == 1 && !boundary_keys.contains(key))
        {
            return Err(Error::Internal(format!(
                "edge {key:?} is on the hull but not in the loop"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_two_triangles() {
        let mesh = build_mesh(&DomainSpec::square(1.0, 4, 0)).unwrap();
        assert_eq!(mesh.n_vertices(), 4);
        assert_eq!(mesh.triangles().len(), 2);
        assert_eq!(mesh.perimeter(), 4.0);
        assert_eq!(mesh.area(), 1.0);
        mesh.validate().unwrap();

        let fine = refine_uniform(&mesh);
        assert_eq!(fine.triangles().len(), 8);
        // V' = V + E with 5 edges in the two-triangle split.
        assert_eq!(fine.n_vertices(), 4 + 5);
        fine.validate().unwrap();
    }

    #[test]
    fn disk_perimeter_within_inscribed_polygon_bound() {
        let mesh = build_mesh(&DomainSpec::disk(1.0, 64, 0)).unwrap();
        mesh.validate().unwrap();
        let bound = 2.0 * PI.powi(3) / 64.0_f64.powi(2);
        assert!((mesh.perimeter() - 2.0 * PI).abs() <= bound);
        assert!((mesh.area() - PI).abs() <= 0.01 * PI);
        let first = mesh.vertices()[mesh.boundary_edges()[0].a];
        assert!((first[0] - 1.0).abs() < 1e-15 && first[1].abs() < 1e-15);
    }

    #[test]
    fn disk_refinement_combinatorics() {
        let coarse = build_mesh(&DomainSpec::disk(1.0, 64, 0)).unwrap();
        let fine = build_mesh(&DomainSpec::disk(1.0, 64, 1)).unwrap();
        fine.validate().unwrap();
        assert_eq!(fine.triangles().len(), 4 * coarse.triangles().len());
        assert_eq!(fine.boundary_edges().len(), 2 * coarse.boundary_edges().len());
        assert!((fine.perimeter() - 2.0 * PI).abs() < (coarse.perimeter() - 2.0 * PI).abs());
        for e in fine.boundary_edges() {
            let [x, y] = fine.vertices()[e.a];
            assert!((x.hypot(y) - 1.0).abs() < 1e-14);
        }
        assert!(fine.has_uniform_boundary(1e-9));
    }

    #[test]
    fn odd_disk_is_valid() {
        let mesh = build_mesh(&DomainSpec::disk(2.0, 37, 1)).unwrap();
        mesh.validate().unwrap();
        assert!((mesh.area() - 4.0 * PI).abs() < 0.02 * 4.0 * PI);
    }

    #[test]
    fn even_disk_is_mirror_symmetric() {
        let mesh = build_mesh(&DomainSpec::disk(1.0, 32, 1)).unwrap();
        let key = |p: Point| ((p[0] * 1e9).round() as i64, (p[1] * 1e9).round() as i64);
        let lookup: HashMap<_, _> = mesh
            .vertices()
            .iter()
            .enumerate()
            .map(|(i, &p)| (key(p), i))
            .collect();
        let reflect: Vec<usize> = mesh
            .vertices()
            .iter()
            .map(|&[x, y]| lookup[&key([x, -y])])
            .collect();
        let mut tris: Vec<[usize; 3]> = mesh
            .triangles()
            .iter()
            .map(|t| {
                let mut s = *t;
                s.sort_unstable();
                s
            })
            .collect();
        tris.sort_unstable();
        let mut mirrored: Vec<[usize; 3]> = mesh
            .triangles()
            .iter()
            .map(|t| {
                let mut s = [reflect[t[0]], reflect[t[1]], reflect[t[2]]];
                s.sort_unstable();
                s
            })
            .collect();
        mirrored.sort_unstable();
        assert_eq!(tris, mirrored);
    }

    #[test]
    fn outward_normals_point_away_from_centroid() {
        for spec in [DomainSpec::disk(1.0, 24, 1), DomainSpec::square(2.0, 8, 1)] {
            let mesh = build_mesh(&spec).unwrap();
            let n = mesh.n_vertices() as f64;
            let c = mesh
                .vertices()
                .iter()
                .fold([0.0, 0.0], |acc, p| [acc[0] + p[0] / n, acc[1] + p[1] / n]);
            for e in mesh.boundary_edges() {
                let p = mesh.vertices()[e.a];
                assert!((p[0] - c[0]) * e.normal[0] + (p[1] - c[1]) * e.normal[1] > 0.0);
            }
        }
    }

    #[test]
    fn rejects_invalid_specs() {
        assert!(matches!(
            build_mesh(&DomainSpec::disk(0.0, 16, 0)),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            build_mesh(&DomainSpec::disk(1.0, 2, 0)),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            build_mesh(&DomainSpec::square(-1.0, 8, 0)),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            build_mesh(&DomainSpec::square(1.0, 6, 0)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn trace_interpolation() {
        let mesh = build_mesh(&DomainSpec::square(1.0, 4, 0)).unwrap();
        let u: Vec<f64> = mesh.vertices().iter().map(|p| p[0] + 2.0 * p[1]).collect();
        assert!((mesh.trace_at(&u, 0.25) - 0.25).abs() < 1e-15);
        assert!((mesh.trace_at(&u, 1.5) - 2.0).abs() < 1e-15);
        assert!((mesh.trace_at(&u, 4.25) - 0.25).abs() < 1e-15);
    }
}
