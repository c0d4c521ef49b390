//! Bowyer–Watson Delaunay triangulation with exact predicates and point
//! location by visibility walk.

use std::collections::HashMap;

use robust::{incircle, orient2d, Coord};
use serde::{Deserialize, Serialize};

use super::DeployError;

fn c(p: [f64; 2]) -> Coord<f64> {
    Coord { x: p[0], y: p[1] }
}

/// `> 0` when `a, b, p` turn counter-clockwise.
pub fn orient(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    orient2d(c(a), c(b), c(p))
}

/// `> 0` when `p` lies strictly inside the circumcircle of the CCW triangle
/// `a, b, c`.
pub fn in_circle(a: [f64; 2], b: [f64; 2], cc: [f64; 2], p: [f64; 2]) -> f64 {
    incircle(c(a), c(b), c(cc), c(p))
}

/// Triangles are counter-clockwise. `adjacency[t][i]` is the triangle across
/// the edge opposite vertex `i` of `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triangulation {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub adjacency: Vec<[Option<usize>; 3]>,
}

/// Result of a point-location query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Location {
    pub triangle: usize,
    /// `false` when the point lies outside the hull and the nearest triangle
    /// was returned instead.
    pub inside: bool,
}

fn validate_points(points: &[[f64; 2]]) -> Result<(), DeployError> {
    if points.len() < 3 {
        return Err(DeployError::TooFewPoints(points.len()));
    }
    if let Some(i) = points
        .iter()
        .position(|p| !(p[0].is_finite() && p[1].is_finite()))
    {
        return Err(DeployError::NonFinite(i));
    }
    let mut sorted: Vec<usize> = (0..points.len()).collect();
    sorted.sort_by(|&i, &j| {
        points[i][0]
            .total_cmp(&points[j][0])
            .then(points[i][1].total_cmp(&points[j][1]))
    });
    for w in sorted.windows(2) {
        if points[w[0]] == points[w[1]] {
            return Err(DeployError::DuplicatePoint(w[0].min(w[1]), w[0].max(w[1])));
        }
    }
    let (a, b) = (points[0], points[1]);
    if points.iter().all(|&p| orient(a, b, p) == 0.0) {
        return Err(DeployError::Collinear);
    }
    Ok(())
}

fn ccw(t: [usize; 3], v: &[[f64; 2]]) -> [usize; 3] {
    if orient(v[t[0]], v[t[1]], v[t[2]]) < 0.0 {
        [t[0], t[2], t[1]]
    } else {
        t
    }
}

fn bowyer_watson(points: &[[f64; 2]], scale: f64) -> Vec<[usize; 3]> {
    let n = points.len();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let mid = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    let d = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12) * scale;
    let mut v = points.to_vec();
    v.push([mid[0] - 2.0 * d, mid[1] - d]);
    v.push([mid[0] + 2.0 * d, mid[1] - d]);
    v.push([mid[0], mid[1] + 2.0 * d]);
    let mut tris: Vec<[usize; 3]> = vec![ccw([n, n + 1, n + 2], &v)];
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
    for (i, &p) in points.iter().enumerate() {
        let (bad, keep): (Vec<[usize; 3]>, Vec<[usize; 3]>) = tris
            .into_iter()
            .partition(|t| in_circle(v[t[0]], v[t[1]], v[t[2]], p) > 0.0);
        tris = keep;
        edges.clear();
        for t in &bad {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        for t in &bad {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if edges[&(a.min(b), a.max(b))] == 1 {
                    tris.push(ccw([a, b, i], &v));
                }
            }
        }
    }
    tris.retain(|t| t.iter().all(|&k| k < n));
    tris.sort_unstable_by_key(|t| {
        let mut s = *t;
        s.sort_unstable();
        s
    });
    tris
}

fn build_adjacency(tris: &[[usize; 3]]) -> Vec<[Option<usize>; 3]> {
    let mut owner: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    let mut adj = vec![[None; 3]; tris.len()];
    for (ti, t) in tris.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (t[(k + 1) % 3], t[(k + 2) % 3]);
            let key = (a.min(b), a.max(b));
            if let Some(&(tj, kj)) = owner.get(&key) {
                adj[ti][k] = Some(tj);
                adj[tj][kj] = Some(ti);
            } else {
                owner.insert(key, (ti, k));
            }
        }
    }
    adj
}

impl Triangulation {
    fn assemble(points: &[[f64; 2]], triangles: Vec<[usize; 3]>) -> Self {
        let adjacency = build_adjacency(&triangles);
        Self {
            vertices: points.to_vec(),
            triangles,
            adjacency,
        }
    }

    /// Boundary edges must be convex-hull edges: every vertex on or to the
    /// left of each CCW boundary edge.
    fn hull_is_convex(&self) -> bool {
        if self.triangles.is_empty() {
            return false;
        }
        for (ti, t) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                if self.adjacency[ti][k].is_none() {
                    let (a, b) = (self.vertices[t[(k + 1) % 3]], self.vertices[t[(k + 2) % 3]]);
                    if self.vertices.iter().any(|&p| orient(a, b, p) < 0.0) {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn contains(&self, t: usize, p: [f64; 2]) -> bool {
        let [a, b, cc] = self.triangles[t].map(|i| self.vertices[i]);
        orient(a, b, p) >= 0.0 && orient(b, cc, p) >= 0.0 && orient(cc, a, p) >= 0.0
    }

    /// Lowest-index triangle containing `p` (closed), by exhaustive scan.
    pub fn locate_brute(&self, p: [f64; 2]) -> Option<usize> {
        (0..self.triangles.len()).find(|&t| self.contains(t, p))
    }

    fn nearest_triangle(&self, p: [f64; 2]) -> usize {
        let seg = |a: [f64; 2], b: [f64; 2]| {
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            let t =
                (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
            (a[0] + t * dx - p[0]).hypot(a[1] + t * dy - p[1])
        };
        let dist = |t: &[usize; 3]| {
            let [a, b, cc] = t.map(|i| self.vertices[i]);
            seg(a, b).min(seg(b, cc)).min(seg(cc, a))
        };
        let mut best = (f64::INFINITY, 0);
        for (i, t) in self.triangles.iter().enumerate() {
            let d = dist(t);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    /// Visibility walk from triangle 0. Points on shared edges or vertices
    /// resolve to the lowest containing triangle index; points outside the
    /// hull fall back to the nearest triangle.
    pub fn locate(&self, p: [f64; 2]) -> Location {
        let mut t = 0;
        let mut steps = 0;
        loop {
            let tri = self.triangles[t];
            let mut next = None;
            let mut on_edge = false;
            for k in 0..3 {
                let o = orient(
                    self.vertices[tri[(k + 1) % 3]],
                    self.vertices[tri[(k + 2) % 3]],
                    p,
                );
                if o < 0.0 {
                    next = Some(k);
                    break;
                }
                on_edge |= o == 0.0;
            }
            match next {
                None => {
                    let triangle = if on_edge {
                        self.locate_brute(p).unwrap_or(t)
                    } else {
                        t
                    };
                    return Location {
                        triangle,
                        inside: true,
                    };
                }
                Some(k) => match self.adjacency[t][k] {
                    Some(n) => t = n,
                    None => {
                        // a non-convex walk path can hit the hull early; confirm
                        return match self.locate_brute(p) {
                            Some(triangle) => Location {
                                triangle,
                                inside: true,
                            },
                            None => Location {
                                triangle: self.nearest_triangle(p),
                                inside: false,
                            },
                        };
                    }
                },
            }
            steps += 1;
            if steps > self.triangles.len() + 8 {
                return match self.locate_brute(p) {
                    Some(triangle) => Location {
                        triangle,
                        inside: true,
                    },
                    None => Location {
                        triangle: self.nearest_triangle(p),
                        inside: false,
                    },
                };
            }
        }
    }

    /// Triangles as sorted vertex triples, sorted: a canonical form for
    /// comparing triangulations.
    pub fn canonical(&self) -> Vec<[usize; 3]> {
        let mut v: Vec<[usize; 3]> = self
            .triangles
            .iter()
            .map(|t| {
                let mut s = *t;
                s.sort_unstable();
                s
            })
            .collect();
        v.sort_unstable();
        v
    }

    /// Exhaustive empty-circumcircle check.
    pub fn is_delaunay(&self) -> bool {
        self.triangles.iter().all(|t| {
            let [a, b, cc] = t.map(|i| self.vertices[i]);
            self.vertices
                .iter()
                .enumerate()
                .all(|(i, &p)| t.contains(&i) || in_circle(a, b, cc, p) <= 0.0)
        })
    }
}

/// Delaunay triangulation of at least three non-collinear distinct points.
pub fn delaunay(points: &[[f64; 2]]) -> Result<Triangulation, DeployError> {
    validate_points(points)?;
    let mut scale = 20.0;
    for _ in 0..6 {
        let tri = Triangulation::assemble(points, bowyer_watson(points, scale));
        if tri.hull_is_convex() {
            return Ok(tri);
        }
        scale *= 100.0;
    }
    Err(DeployError::HullNotRecovered)
}

/// CoMP cluster of a user: the vertices of its containing triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterLookup {
    pub vertices: [usize; 3],
    pub triangle: usize,
    /// Set when the user was outside the hull and the nearest triangle was used.
    pub fallback: bool,
}

pub fn comp_cluster_for_user(user_xy: [f64; 2], tri: &Triangulation) -> ClusterLookup {
    let loc = tri.locate(user_xy);
    ClusterLookup {
        vertices: tri.triangles[loc.triangle],
        triangle: loc.triangle,
        fallback: !loc.inside,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;
    use rand::RngExt;

    fn random_points(n: usize, seed: u64) -> Vec<[f64; 2]> {
        let mut r = RngStream::new(seed, 0).rng();
        (0..n)
            .map(|_| [r.random::<f64>() * 1000.0, r.random::<f64>() * 1000.0])
            .collect()
    }

    #[test]
    fn three_points() {
        let t = delaunay(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(t.triangles.len(), 1);
        assert_eq!(t.adjacency[0], [None; 3]);
    }

    #[test]
    fn square_has_two_triangles() {
        let t = delaunay(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        assert_eq!(t.triangles.len(), 2);
        let shared: Vec<usize> = (0..4)
            .filter(|v| t.triangles.iter().all(|tr| tr.contains(v)))
            .collect();
        assert_eq!(shared.len(), 2);
        assert!(t.is_delaunay());
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            delaunay(&[[0.0, 0.0], [1.0, 1.0]]),
            Err(DeployError::TooFewPoints(2))
        ));
        assert!(matches!(
            delaunay(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [5.0, 5.0]]),
            Err(DeployError::Collinear)
        ));
        assert!(matches!(
            delaunay(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 0.0]]),
            Err(DeployError::DuplicatePoint(1, 3))
        ));
        assert!(delaunay(&[[0.0, 0.0], [f64::NAN, 0.0], [0.0, 1.0]]).is_err());
    }

    #[test]
    fn triangle_count_and_delaunay() {
        let p = random_points(200, 1);
        let t = delaunay(&p).unwrap();
        assert!(t.is_delaunay());
        let hull = t.adjacency.iter().flatten().filter(|a| a.is_none()).count();
        assert_eq!(t.triangles.len(), 2 * p.len() - 2 - hull);
        for (i, tr) in t.triangles.iter().enumerate() {
            assert!(orient(p[tr[0]], p[tr[1]], p[tr[2]]) > 0.0);
            for k in 0..3 {
                if let Some(j) = t.adjacency[i][k] {
                    assert!(t.adjacency[j].contains(&Some(i)));
                }
            }
        }
    }

    #[test]
    fn grid_points_cocircular() {
        let p: Vec<[f64; 2]> = (0..36).map(|i| [(i % 6) as f64, (i / 6) as f64]).collect();
        let t = delaunay(&p).unwrap();
        assert_eq!(t.triangles.len(), 50);
        assert!(t.is_delaunay());
    }

    #[test]
    fn centroid_and_edges() {
        let p = random_points(50, 2);
        let t = delaunay(&p).unwrap();
        for (i, tr) in t.triangles.iter().enumerate() {
            let cx = (p[tr[0]][0] + p[tr[1]][0] + p[tr[2]][0]) / 3.0;
            let cy = (p[tr[0]][1] + p[tr[1]][1] + p[tr[2]][1]) / 3.0;
            assert_eq!(
                t.locate([cx, cy]),
                Location {
                    triangle: i,
                    inside: true
                }
            );
        }
        // shared vertex: lowest incident triangle
        let v = t.triangles[5][0];
        let lowest = (0..t.triangles.len())
            .find(|&k| t.triangles[k].contains(&v))
            .unwrap();
        assert_eq!(t.locate(p[v]).triangle, lowest);
        let out = comp_cluster_for_user([-500.0, -500.0], &t);
        assert!(out.fallback);
    }

    #[test]
    fn permutation_invariant() {
        let p = random_points(60, 3);
        let t = delaunay(&p).unwrap();
        let perm: Vec<usize> = (0..60).rev().collect();
        let q: Vec<[f64; 2]> = perm.iter().map(|&i| p[i]).collect();
        let u = delaunay(&q).unwrap();
        let mapped: Vec<[usize; 3]> = u
            .canonical()
            .iter()
            .map(|t| {
                let mut s = t.map(|k| perm[k]);
                s.sort_unstable();
                s
            })
            .collect();
        let mut mapped = mapped;
        mapped.sort_unstable();
        assert_eq!(mapped, t.canonical());
    }
}
