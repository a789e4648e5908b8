use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::region::BoundaryRegion;

/// A load on the boundary loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryLoad {
    /// One constant per boundary edge, in loop order.
    PerEdge(Vec<f64>),
    /// Indicator of a union of arcs; need not align with mesh vertices.
    Region(BoundaryRegion),
    /// Values at the boundary loop vertices, linear along each edge.
    NodalTrace(Vec<f64>),
}

impl BoundaryLoad {
    pub fn constant(mesh: &Mesh, value: f64) -> Self {
        Self::PerEdge(vec![value; mesh.boundary_edges().len()])
    }

    /// Samples `f(s)` at the boundary loop vertices.
    pub fn from_fn(mesh: &Mesh, f: impl Fn(f64) -> f64) -> Self {
        Self::NodalTrace(mesh.boundary_coordinates().into_iter().map(f).collect())
    }

    /// Samples `f(θ)` on a disk boundary using the angle of each loop vertex.
    pub fn from_angle_fn(mesh: &Mesh, f: impl Fn(f64) -> f64) -> Self {
        let values = mesh
            .boundary_edges()
            .iter()
            .map(|e| {
                let [x, y] = mesh.vertices()[e.a];
                f(y.atan2(x))
            })
            .collect();
        Self::NodalTrace(values)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        match self {
            Self::PerEdge(v) => Ok(Self::PerEdge(v.iter().map(|x| factor * x).collect())),
            Self::NodalTrace(v) => Ok(Self::NodalTrace(v.iter().map(|x| factor * x).collect())),
            Self::Region(_) => Err(Error::Config("region indicators cannot be rescaled".into())),
        }
    }

    pub fn check(&self, mesh: &Mesh) -> Result<()> {
        let edges = mesh.boundary_edges().len();
        match self {
            Self::PerEdge(v) | Self::NodalTrace(v) if v.len() != edges => Err(Error::Config(format!(
                "load has {} values but the boundary has {edges} edges",
                v.len()
            ))),
            Self::Region(r) if (r.perimeter() - mesh.perimeter()).abs() > 1e-12 * mesh.perimeter() => {
                Err(Error::Config(format!(
                    "region perimeter {} differs from mesh perimeter {}",
                    r.perimeter(),
                    mesh.perimeter()
                )))
            }
            _ => Ok(()),
        }
    }

    /// Pointwise value at arc-length `s` (for plots and trace exports).
    pub fn value_at(&self, mesh: &Mesh, s: f64) -> f64 {
        let (k, x) = mesh.locate(s);
        match self {
            Self::PerEdge(v) => v[k],
            Self::Region(r) => {
                if r.contains(s) {
                    1.0
                } else {
                    0.0
                }
            }
            Self::NodalTrace(v) => {
                let n = v.len();
                let w = x / mesh.boundary_edges()[k].length;
                (1.0 - w) * v[k] + w * v[(k + 1) % n]
            }
        }
    }
}

/// Exact boundary integrals of the load against each hat function.
pub fn assemble_load(mesh: &Mesh, load: &BoundaryLoad) -> Result<Vec<f64>> {
    load.check(mesh)?;
    let mut rhs = vec![0.0; mesh.n_vertices()];
    let edges = mesh.boundary_edges();
    match load {
        BoundaryLoad::PerEdge(values) => {
            for (e, &f) in edges.iter().zip(values) {
                rhs[e.a] += 0.5 * f * e.length;
                rhs[e.b] += 0.5 * f * e.length;
            }
        }
        BoundaryLoad::NodalTrace(values) => {
            let n = values.len();
            for (k, e) in edges.iter().enumerate() {
                let (fa, fb) = (values[k], values[(k + 1) % n]);
                rhs[e.a] += e.length * (2.0 * fa + fb) / 6.0;
                rhs[e.b] += e.length * (fa + 2.0 * fb) / 6.0;
            }
        }
        BoundaryLoad::Region(region) => {
            for e in edges {
                for (lo, hi) in region.overlaps(e.s_start, e.s_end()) {
                    let (x0, x1) = (lo - e.s_start, hi - e.s_start);
                    let towards_b = (x1 * x1 - x0 * x0) / (2.0 * e.length);
                    rhs[e.a] += (x1 - x0) - towards_b;
                    rhs[e.b] += towards_b;
                }
            }
        }
    }
    Ok(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, DomainSpec};

    /// Composite Gauss–Legendre (5 points) on `[a, b]`, used as an
    /// independent quadrature oracle.
    fn gauss(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        const X: [f64; 5] = [
            0.0,
            -0.538_469_310_105_683_1,
            0.538_469_310_105_683_1,
            -0.906_179_845_938_664,
            0.906_179_845_938_664,
        ];
        const W: [f64; 5] = [
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
            0.236_926_885_056_189_1,
        ];
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
                let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
                X.iter()
                    .zip(&W)
                    .map(|(x, w)| w * half * f(mid + half * x))
                    .sum::<f64>()
            })
            .sum()
    }

    #[test]
    fn unit_load_gives_half_adjacent_lengths() {
        let mesh = build_mesh(&DomainSpec::disk(1.0, 16, 1)).unwrap();
        let rhs = assemble_load(&mesh, &BoundaryLoad::constant(&mesh, 1.0)).unwrap();
        let edges = mesh.boundary_edges();
        let n = edges.len();
        let mut on_boundary = vec![false; mesh.n_vertices()];
        for k in 0..n {
            let expected = 0.5 * (edges[k].length + edges[(k + n - 1) % n].length);
            assert!((rhs[edges[k].a] - expected).abs() < 1e-15);
            on_boundary[edges[k].a] = true;
        }
        for (i, &b) in on_boundary.iter().enumerate() {
            if !b {
                assert_eq!(rhs[i], 0.0);
            }
        }
        let total: f64 = rhs.iter().sum();
        assert!((total - mesh.perimeter()).abs() < 1e-13);
    }

    #[test]
    fn empty_region_is_zero() {
        let mesh = build_mesh(&DomainSpec::square(1.0, 8, 0)).unwrap();
        let load = BoundaryLoad::Region(BoundaryRegion::empty(mesh.perimeter()));
        assert!(assemble_load(&mesh, &load).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn sub_edge_region_matches_quadrature() {
        let mesh = build_mesh(&DomainSpec::disk(1.0, 12, 0)).unwrap();
        let e = mesh.boundary_edges()[3];
        let (a, b) = (0.17 * e.length, 0.71 * e.length);
        let region =
            BoundaryRegion::from_intervals(&[(e.s_start + a, e.s_start + b)], mesh.perimeter()).unwrap();
        let rhs = assemble_load(&mesh, &BoundaryLoad::Region(region)).unwrap();
        let hat_a = gauss(|x| 1.0 - x / e.length, a, b, 8);
        let hat_b = gauss(|x| x / e.length, a, b, 8);
        assert!((rhs[e.a] - hat_a).abs() < 1e-15);
        assert!((rhs[e.b] - hat_b).abs() < 1e-15);
        let nonzero = rhs.iter().filter(|&&x| x != 0.0).count();
        assert_eq!(nonzero, 2);
    }

    #[test]
    fn nodal_trace_matches_quadrature() {
        let mesh = build_mesh(&DomainSpec::square(2.0, 8, 0)).unwrap();
        let values: Vec<f64> = (0..8).map(|k| (k as f64 * 0.7).sin() + 2.0).collect();
        let load = BoundaryLoad::NodalTrace(values.clone());
        let rhs = assemble_load(&mesh, &load).unwrap();
        let e = mesh.boundary_edges()[2];
        let f = |x: f64| values[2] + (values[3] - values[2]) * x / e.length;
        let from_edge = gauss(|x| f(x) * x / e.length, 0.0, e.length, 4);
        let prev = mesh.boundary_edges()[3];
        let g = |x: f64| values[3] + (values[4] - values[3]) * x / prev.length;
        let from_next = gauss(|x| g(x) * (1.0 - x / prev.length), 0.0, prev.length, 4);
        assert!((rhs[e.b] - from_edge - from_next).abs() < 1e-14);
    }

    #[test]
    fn size_mismatch_is_config_error() {
        let mesh = build_mesh(&DomainSpec::square(1.0, 8, 0)).unwrap();
        let load = BoundaryLoad::PerEdge(vec![1.0; 3]);
        assert!(matches!(assemble_load(&mesh, &load), Err(Error::Config(_))));
    }
}
