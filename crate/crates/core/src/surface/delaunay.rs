//! Incremental Bowyer-Watson Delaunay triangulation.
//!
//! The hull is closed by a single vertex at infinity: every hull edge carries a
//! ghost triangle `[a, b, GHOST]` whose edge `a -> b` has the exterior on its
//! left. A ghost conflicts with a point strictly outside its edge, or lying on
//! the open edge segment. Points are inserted in lexicographic order, so
//! cocircular ties resolve by that order and every insertion starts from a
//! conflicting ghost. Orientation and in-circle tests are exact.

use std::collections::{HashMap, HashSet};

use robust::{incircle, orient2d, Coord};

use crate::error::{Error, Result};

const GHOST: usize = usize::MAX;

/// Real triangles over the input points, counter-clockwise, canonically
/// ordered.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation {
    pub points: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
}

fn coord(p: [f64; 2]) -> Coord<f64> {
    Coord { x: p[0], y: p[1] }
}

pub(crate) fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    orient2d(coord(a), coord(b), coord(c))
}

pub(crate) fn in_circle(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> f64 {
    incircle(coord(a), coord(b), coord(c), coord(d))
}

fn strictly_between(a: [f64; 2], b: [f64; 2], x: [f64; 2]) -> bool {
    let dot = (x[0] - a[0]) * (b[0] - a[0]) + (x[1] - a[1]) * (b[1] - a[1]);
    let len2 = (b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2);
    dot > 0.0 && dot < len2
}

struct Builder<'a> {
    pts: &'a [[f64; 2]],
    slots: Vec<Option<[usize; 3]>>,
    edges: HashMap<(usize, usize), usize>,
}

impl Builder<'_> {
    fn add(&mut self, tri: [usize; 3]) {
        let id = self.slots.len();
        for k in 0..3 {
            self.edges.insert((tri[k], tri[(k + 1) % 3]), id);
        }
        self.slots.push(Some(tri));
    }

    fn remove(&mut self, id: usize) {
        if let Some(tri) = self.slots[id].take() {
            for k in 0..3 {
                self.edges.remove(&(tri[k], tri[(k + 1) % 3]));
            }
        }
    }

    fn conflicts(&self, tri: [usize; 3], x: [f64; 2]) -> bool {
        if tri[2] == GHOST {
            let (a, b) = (self.pts[tri[0]], self.pts[tri[1]]);
            let o = orient(a, b, x);
            o > 0.0 || (o == 0.0 && strictly_between(a, b, x))
        } else {
            in_circle(self.pts[tri[0]], self.pts[tri[1]], self.pts[tri[2]], x) > 0.0
        }
    }

    fn insert(&mut self, i: usize) -> Result<()> {
        let x = self.pts[i];
        let start = self
            .slots
            .iter()
            .position(|s| matches!(s, Some(t) if t[2] == GHOST && self.conflicts(*t, x)))
            .ok_or_else(|| Error::Invariant(format!("no conflicting hull edge for point {i}")))?;

        let mut in_cavity = HashSet::new();
        in_cavity.insert(start);
        let mut stack = vec![start];
        let mut boundary = Vec::new();
        while let Some(id) = stack.pop() {
            let tri = self.slots[id].expect("live triangle");
            for k in 0..3 {
                let (u, v) = (tri[k], tri[(k + 1) % 3]);
                match self.edges.get(&(v, u)) {
                    Some(&nb) if in_cavity.contains(&nb) => {}
                    Some(&nb) if self.conflicts(self.slots[nb].expect("live"), x) => {
                        in_cavity.insert(nb);
                        stack.push(nb);
                    }
                    _ => boundary.push((u, v)),
                }
            }
        }
        let cavity: Vec<usize> = in_cavity.into_iter().collect();
        for id in cavity {
            self.remove(id);
        }
        for (u, v) in boundary {
            let tri = if u == GHOST {
                [v, i, GHOST]
            } else if v == GHOST {
                [i, u, GHOST]
            } else {
                if orient(self.pts[u], self.pts[v], x) <= 0.0 {
                    return Err(Error::Invariant(format!(
                        "cavity of point {i} is not star-shaped"
                    )));
                }
                [u, v, i]
            };
            self.add(tri);
        }
        Ok(())
    }
}

/// Delaunay triangulation of a planar point set.
///
/// Fails on fewer than three points, duplicates, or an all-collinear input.
pub fn build_delaunay(points: &[[f64; 2]]) -> Result<Triangulation> {
    if points
        .iter()
        .any(|p| !p[0].is_finite() || !p[1].is_finite())
    {
        return Err(Error::Triangulation("non-finite coordinate".into()));
    }
    if points.len() < 3 {
        return Err(Error::Triangulation(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a][0]
            .total_cmp(&points[b][0])
            .then(points[a][1].total_cmp(&points[b][1]))
    });
    for w in order.windows(2) {
        if points[w[0]] == points[w[1]] {
            let p = points[w[0]];
            return Err(Error::DuplicatePoint(p[0], p[1]));
        }
    }

    let (a, b) = (order[0], order[1]);
    let k = (2..order.len())
        .find(|&k| orient(points[a], points[b], points[order[k]]) != 0.0)
        .ok_or_else(|| Error::Triangulation("all points are collinear".into()))?;
    let c = order[k];

    let mut builder = Builder {
        pts: points,
        slots: Vec::with_capacity(4 * points.len()),
        edges: HashMap::with_capacity(12 * points.len()),
    };
    let first = if orient(points[a], points[b], points[c]) > 0.0 {
        [a, b, c]
    } else {
        [a, c, b]
    };
    builder.add(first);
    for e in 0..3 {
        builder.add([first[(e + 1) % 3], first[e], GHOST]);
    }
    for (pos, &i) in order.iter().enumerate() {
        if pos < 2 || pos == k {
            continue;
        }
        builder.insert(i)?;
    }

    let mut triangles: Vec<[usize; 3]> = builder
        .slots
        .into_iter()
        .flatten()
        .filter(|t| t[2] != GHOST)
        .map(|t| {
            let r = (0..3).min_by_key(|&j| t[j]).unwrap();
            [t[r], t[(r + 1) % 3], t[(r + 2) % 3]]
        })
        .collect();
    triangles.sort_unstable();
    Ok(Triangulation {
        points: points.to_vec(),
        triangles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn area2(t: &Triangulation, tri: [usize; 3]) -> f64 {
        let [a, b, c] = tri.map(|i| t.points[i]);
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    }

    /// Floating-point in-circle determinant, independent of the exact predicate.
    fn naive_incircle(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> f64 {
        let (adx, ady) = (a[0] - d[0], a[1] - d[1]);
        let (bdx, bdy) = (b[0] - d[0], b[1] - d[1]);
        let (cdx, cdy) = (c[0] - d[0], c[1] - d[1]);
        let ad = adx * adx + ady * ady;
        let bd = bdx * bdx + bdy * bdy;
        let cd = cdx * cdx + cdy * cdy;
        adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx)
    }

    #[test]
    fn rectangle_corners_give_two_triangles() {
        let pts = [[350.0, 0.0], [450.0, 0.0], [350.0, 100.0], [450.0, 100.0]];
        let t = build_delaunay(&pts).unwrap();
        assert_eq!(t.triangles.len(), 2);
        let total: f64 = t.triangles.iter().map(|&tri| area2(&t, tri) / 2.0).sum();
        assert!((total - 100.0 * 100.0).abs() < 1e-9);
        assert!(t.triangles.iter().all(|&tri| area2(&t, tri) > 0.0));
    }

    #[test]
    fn random_points_satisfy_empty_circumcircle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut pts = vec![[350.0, 0.0], [450.0, 0.0], [350.0, 100.0], [450.0, 100.0]];
        for _ in 0..50 {
            pts.push([rng.random_range(350.0..450.0), rng.random_range(0.0..100.0)]);
        }
        let t = build_delaunay(&pts).unwrap();
        let scale = 100.0f64.powi(4);
        for &tri in &t.triangles {
            let [a, b, c] = tri.map(|i| pts[i]);
            for (j, &d) in pts.iter().enumerate() {
                if tri.contains(&j) {
                    continue;
                }
                assert!(
                    naive_incircle(a, b, c, d) <= 1e-9 * scale,
                    "point {j} inside {tri:?}"
                );
            }
        }
        // Euler count for a point set whose hull holds only the four corners
        assert_eq!(t.triangles.len(), 2 * pts.len() - 4 - 2);
        let total: f64 = t.triangles.iter().map(|&tri| area2(&t, tri) / 2.0).sum();
        assert!((total - 1e4).abs() < 1e-9 * 1e4);
    }

    #[test]
    fn grid_with_cocircular_points_tiles_square() {
        let mut pts = Vec::new();
        for i in 0..6 {
            for j in 0..6 {
                pts.push([i as f64, j as f64 * 2.0]);
            }
        }
        let t = build_delaunay(&pts).unwrap();
        // 2n - h - 2 with 20 boundary points
        assert_eq!(t.triangles.len(), 2 * 36 - 20 - 2);
        let total: f64 = t.triangles.iter().map(|&tri| area2(&t, tri) / 2.0).sum();
        assert!((total - 50.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_and_duplicate_inputs_fail() {
        let line = [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]];
        assert!(matches!(
            build_delaunay(&line),
            Err(Error::Triangulation(_))
        ));
        let dup = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 0.0]];
        assert!(matches!(
            build_delaunay(&dup),
            Err(Error::DuplicatePoint(..))
        ));
        assert!(build_delaunay(&[[0.0, 0.0], [1.0, 0.0]]).is_err());
    }

    #[test]
    fn leading_collinear_points_are_handled() {
        let pts = [
            [0.0, 0.0],
            [1.0, 0.0],
            [2.0, 0.0],
            [3.0, 0.0],
            [4.0, 1.0],
            [4.0, -1.0],
        ];
        let t = build_delaunay(&pts).unwrap();
        assert!(t.triangles.iter().all(|&tri| area2(&t, tri) > 0.0));
        assert_eq!(t.triangles.len(), 2 * 6 - 3 - 2);
        let hull_area = 4.0;
        let total: f64 = t.triangles.iter().map(|&tri| area2(&t, tri) / 2.0).sum();
        assert!((total - hull_area).abs() < 1e-12);
    }
}
