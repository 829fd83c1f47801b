//! Piecewise-linear approximation of the demand moments over the
//! (price, advertising) rectangle.
//!
//! Vertices carry exact moments; inside a triangle `mu` and `sigma` are the
//! barycentric interpolation of its three vertices. Every triangle gets a
//! distinct binary code of width `ceil(log2 |T|)`, the selector a logarithmic
//! convex-combination model would branch on.

mod delaunay;

pub use delaunay::{build_delaunay, Triangulation};

use serde::{Deserialize, Serialize};

use crate::demand::{demand_moments, PdmParams};
use crate::error::{Error, Result};
use delaunay::orient;

/// The rectangle `[p_min, p_max] x [0, v_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub p_min: f64,
    pub p_max: f64,
    pub v_max: f64,
}

impl Default for Domain {
    fn default() -> Self {
        Domain {
            p_min: 350.0,
            p_max: 450.0,
            v_max: 100.0,
        }
    }
}

impl Domain {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_min > 0.0 && self.p_min < self.p_max && self.v_max > 0.0)
            || !self.p_max.is_finite()
            || !self.v_max.is_finite()
        {
            return Err(Error::InvalidArgument(format!("invalid domain {self:?}")));
        }
        Ok(())
    }

    pub fn contains(&self, p: f64, v: f64) -> bool {
        (self.p_min..=self.p_max).contains(&p) && (0.0..=self.v_max).contains(&v)
    }

    pub fn corners(&self) -> [[f64; 2]; 4] {
        [
            [self.p_min, 0.0],
            [self.p_max, 0.0],
            [self.p_min, self.v_max],
            [self.p_max, self.v_max],
        ]
    }

    pub fn area(&self) -> f64 {
        (self.p_max - self.p_min) * self.v_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub p: f64,
    pub v: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl Vertex {
    pub fn exact(p: f64, v: f64, params: &PdmParams) -> Result<Self> {
        let d = demand_moments(p, v, params)?;
        Ok(Vertex {
            p,
            v,
            mu: d.mu,
            sigma: d.sigma,
        })
    }

    fn xy(&self) -> [f64; 2] {
        [self.p, self.v]
    }
}

/// Counter-clockwise vertex indices plus twice the signed area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub vertices: [usize; 3],
    pub area2: f64,
}

/// Owner triangle and barycentric weights of a located point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub triangle: usize,
    pub weights: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub domain: Domain,
    pub bit_budget: u32,
    pub vertices: Vec<Vertex>,
    pub triangles: Vec<Triangle>,
    pub code_width: u32,
    pub codes: Vec<u32>,
    pub params_hash: String,
}

/// `ceil(log2 n)`, with zero bits for a single triangle.
pub fn code_width(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

/// Injective binary codes for `n` triangles: triangle `i` gets `i` written in
/// `ceil(log2 n)` bits.
pub fn assign_dlog_codes(n: usize) -> (u32, Vec<u32>) {
    (code_width(n), (0..n as u32).collect())
}

pub fn format_code(code: u32, width: u32) -> String {
    (0..width)
        .rev()
        .map(|b| if code >> b & 1 == 1 { '1' } else { '0' })
        .collect()
}

fn triangulate(vertices: &[Vertex]) -> Result<Vec<Triangle>> {
    let points: Vec<[f64; 2]> = vertices.iter().map(Vertex::xy).collect();
    let t = build_delaunay(&points)?;
    Ok(t.triangles
        .into_iter()
        .map(|tri| Triangle {
            vertices: tri,
            area2: orient(points[tri[0]], points[tri[1]], points[tri[2]]),
        })
        .collect())
}

impl Surface {
    /// Triangulate a vertex set that includes the domain corners.
    pub fn from_vertices(
        domain: Domain,
        bit_budget: u32,
        vertices: Vec<Vertex>,
        params_hash: String,
    ) -> Result<Self> {
        domain.validate()?;
        if let Some(v) = vertices.iter().find(|v| !domain.contains(v.p, v.v)) {
            return Err(Error::OutsideDomain { p: v.p, v: v.v });
        }
        let triangles = triangulate(&vertices)?;
        let (code_width, codes) = assign_dlog_codes(triangles.len());
        if code_width > bit_budget {
            return Err(Error::InvalidArgument(format!(
                "{} triangles need {code_width} bits, budget is {bit_budget}",
                triangles.len()
            )));
        }
        let surface = Surface {
            domain,
            bit_budget,
            vertices,
            triangles,
            code_width,
            codes,
            params_hash,
        };
        surface.check_tiling()?;
        Ok(surface)
    }

    /// Rebuild from stored tables, recomputing only the triangle areas.
    pub fn from_parts(
        domain: Domain,
        bit_budget: u32,
        vertices: Vec<Vertex>,
        triangles: Vec<[usize; 3]>,
        codes: Vec<u32>,
        params_hash: String,
    ) -> Result<Self> {
        domain.validate()?;
        let n = vertices.len();
        let mut tris = Vec::with_capacity(triangles.len());
        for tri in triangles {
            if tri.iter().any(|&i| i >= n) {
                return Err(Error::InvalidArgument(format!(
                    "triangle {tri:?} references a missing vertex"
                )));
            }
            let area2 = orient(
                vertices[tri[0]].xy(),
                vertices[tri[1]].xy(),
                vertices[tri[2]].xy(),
            );
            if area2 <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "triangle {tri:?} is not counter-clockwise"
                )));
            }
            tris.push(Triangle {
                vertices: tri,
                area2,
            });
        }
        let width = code_width(tris.len());
        let mut seen = std::collections::HashSet::new();
        if codes.len() != tris.len()
            || codes
                .iter()
                .any(|&c| (width < 32 && c >> width != 0) || !seen.insert(c))
            || width > bit_budget
        {
            return Err(Error::InvalidArgument(
                "triangle codes are not an injective map of the expected width".into(),
            ));
        }
        let surface = Surface {
            domain,
            bit_budget,
            vertices,
            triangles: tris,
            code_width: width,
            codes,
            params_hash,
        };
        surface.check_tiling()?;
        Ok(surface)
    }

    fn check_tiling(&self) -> Result<()> {
        let area: f64 = self.triangles.iter().map(|t| 0.5 * t.area2).sum();
        let target = self.domain.area();
        if ((area - target) / target).abs() > 1e-9 {
            return Err(Error::Invariant(format!(
                "triangles cover area {area}, domain has {target}"
            )));
        }
        Ok(())
    }

    pub fn corners_of(&self, tri: usize) -> [Vertex; 3] {
        self.triangles[tri].vertices.map(|i| self.vertices[i])
    }

    /// Barycentric weights of `(p, v)` with respect to triangle `tri`, without
    /// any containment check.
    pub fn barycentric(&self, tri: usize, p: f64, v: f64) -> [f64; 3] {
        let t = &self.triangles[tri];
        let [a, b, c] = t.vertices.map(|i| self.vertices[i].xy());
        let x = [p, v];
        [
            orient(b, c, x) / t.area2,
            orient(c, a, x) / t.area2,
            orient(a, b, x) / t.area2,
        ]
    }

    /// Value of triangle `tri`'s affine patch at `(p, v)`.
    pub fn affine_at(&self, tri: usize, p: f64, v: f64) -> (f64, f64) {
        let w = self.barycentric(tri, p, v);
        interpolate(&self.corners_of(tri), w)
    }

    /// Owner triangle of `(p, v)`: the lowest-index triangle containing it.
    pub fn locate_point(&self, p: f64, v: f64) -> Result<Location> {
        if !self.domain.contains(p, v) {
            return Err(Error::OutsideDomain { p, v });
        }
        let x = [p, v];
        for (idx, t) in self.triangles.iter().enumerate() {
            let [a, b, c] = t.vertices.map(|i| self.vertices[i].xy());
            let o = [orient(b, c, x), orient(c, a, x), orient(a, b, x)];
            if o.iter().all(|&s| s >= 0.0) {
                return Ok(Location {
                    triangle: idx,
                    weights: o.map(|s| s / t.area2),
                });
            }
        }
        Err(Error::Invariant(format!("no triangle contains ({p}, {v})")))
    }

    /// Interpolated `(mu_hat, sigma_hat)` at `(p, v)`.
    pub fn eval(&self, p: f64, v: f64) -> Result<(f64, f64)> {
        let loc = self.locate_point(p, v)?;
        Ok(interpolate(&self.corners_of(loc.triangle), loc.weights))
    }

    /// Relative errors `((mu - mu_hat) / mu, (sigma - sigma_hat) / sigma)`.
    pub fn percentage_error(&self, params: &PdmParams, p: f64, v: f64) -> Result<(f64, f64)> {
        let (mu_hat, sigma_hat) = self.eval(p, v)?;
        let exact = demand_moments(p, v, params)?;
        relative_errors(exact.mu, exact.sigma, mu_hat, sigma_hat)
    }

    /// Closed interval of `v` where the line `price = p` meets triangle `tri`.
    pub fn slice_at_price(&self, tri: usize, p: f64) -> Option<(f64, f64)> {
        let c = self.corners_of(tri);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..3 {
            let (a, b) = (c[k], c[(k + 1) % 3]);
            if a.p == p {
                lo = lo.min(a.v);
                hi = hi.max(a.v);
            }
            if (a.p - p) * (b.p - p) < 0.0 {
                let v = a.v + (p - a.p) / (b.p - a.p) * (b.v - a.v);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo <= hi).then_some((lo, hi))
    }
}

fn interpolate(c: &[Vertex; 3], w: [f64; 3]) -> (f64, f64) {
    (
        w[0] * c[0].mu + w[1] * c[1].mu + w[2] * c[2].mu,
        w[0] * c[0].sigma + w[1] * c[1].sigma + w[2] * c[2].sigma,
    )
}

fn relative_errors(mu: f64, sigma: f64, mu_hat: f64, sigma_hat: f64) -> Result<(f64, f64)> {
    if mu == 0.0 || sigma == 0.0 {
        return Err(Error::UndefinedError);
    }
    Ok(((mu - mu_hat) / mu, (sigma - sigma_hat) / sigma))
}

/// Free-function form of [`Surface::locate_point`].
pub fn locate_point(surface: &Surface, p: f64, v: f64) -> Result<Location> {
    surface.locate_point(p, v)
}

/// Free-function form of [`Surface::eval`].
pub fn eval_surface(surface: &Surface, p: f64, v: f64) -> Result<(f64, f64)> {
    surface.eval(p, v)
}

/// Free-function form of [`Surface::percentage_error`].
pub fn surface_percentage_error(
    surface: &Surface,
    params: &PdmParams,
    p: f64,
    v: f64,
) -> Result<(f64, f64)> {
    surface.percentage_error(params, p, v)
}

struct Candidate {
    p: f64,
    v: f64,
    norm: f64,
}

fn error_norm(params: &PdmParams, p: f64, v: f64, mu_hat: f64, sigma_hat: f64) -> Result<f64> {
    let exact = demand_moments(p, v, params)?;
    let (e_mu, e_sigma) = relative_errors(exact.mu, exact.sigma, mu_hat, sigma_hat)?;
    Ok(e_mu.hypot(e_sigma))
}

/// Centroid first, then the midpoints of edges 0-1, 1-2, 2-0, ordered by
/// descending error norm; the stable sort keeps that order among ties.
fn ranked_candidates(params: &PdmParams, c: &[Vertex; 3]) -> Result<Vec<Candidate>> {
    let mut out = Vec::with_capacity(4);
    let third = 1.0 / 3.0;
    let centroid = (
        (c[0].p + c[1].p + c[2].p) * third,
        (c[0].v + c[1].v + c[2].v) * third,
        (c[0].mu + c[1].mu + c[2].mu) * third,
        (c[0].sigma + c[1].sigma + c[2].sigma) * third,
    );
    let mut pts = vec![centroid];
    for k in 0..3 {
        let (a, b) = (c[k], c[(k + 1) % 3]);
        pts.push((
            0.5 * (a.p + b.p),
            0.5 * (a.v + b.v),
            0.5 * (a.mu + b.mu),
            0.5 * (a.sigma + b.sigma),
        ));
    }
    for (p, v, mu_hat, sigma_hat) in pts {
        out.push(Candidate {
            p,
            v,
            norm: error_norm(params, p, v, mu_hat, sigma_hat)?,
        });
    }
    out.sort_by(|a, b| b.norm.total_cmp(&a.norm));
    Ok(out)
}

/// Adaptive refinement from the domain corners.
///
/// Each round ranks triangles by the error norm at their centroid, compares
/// the worst triangle's centroid with its edge midpoints and inserts the worst
/// of those four points with its price rounded to the nearest integer. A
/// candidate that duplicates an existing vertex after rounding falls through
/// to the next candidate, then to the next triangle. Refinement stops before
/// an insertion that would need more than `bit_budget` code bits.
pub fn refine_surface(params: &PdmParams, domain: Domain, bit_budget: u32) -> Result<Surface> {
    params.validate()?;
    domain.validate()?;
    if bit_budget == 0 {
        return Err(Error::InvalidArgument(
            "bit budget must be at least 1".into(),
        ));
    }
    let hash = crate::io::params_hash(params);
    let vertices = domain
        .corners()
        .iter()
        .map(|c| Vertex::exact(c[0], c[1], params))
        .collect::<Result<Vec<_>>>()?;
    let mut surface = Surface::from_vertices(domain, bit_budget, vertices, hash)?;
    let mut occupied: std::collections::HashSet<(u64, u64)> = surface
        .vertices
        .iter()
        .map(|v| (v.p.to_bits(), v.v.to_bits()))
        .collect();

    loop {
        let mut ranked = Vec::with_capacity(surface.triangles.len());
        for idx in 0..surface.triangles.len() {
            let c = surface.corners_of(idx);
            let third = 1.0 / 3.0;
            let p = (c[0].p + c[1].p + c[2].p) * third;
            let v = (c[0].v + c[1].v + c[2].v) * third;
            let mu_hat = (c[0].mu + c[1].mu + c[2].mu) * third;
            let sigma_hat = (c[0].sigma + c[1].sigma + c[2].sigma) * third;
            ranked.push((error_norm(params, p, v, mu_hat, sigma_hat)?, idx));
        }
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

        let mut next = None;
        'triangles: for &(_, idx) in &ranked {
            for cand in ranked_candidates(params, &surface.corners_of(idx))? {
                let p = cand.p.round().clamp(domain.p_min, domain.p_max);
                if occupied.contains(&(p.to_bits(), cand.v.to_bits())) {
                    continue;
                }
                next = Some((p, cand.v));
                break 'triangles;
            }
        }
        let Some((p, v)) = next else {
            return Ok(surface);
        };

        let mut vertices = surface.vertices.clone();
        vertices.push(Vertex::exact(p, v, params)?);
        let triangles = triangulate(&vertices)?;
        if code_width(triangles.len()) > bit_budget {
            return Ok(surface);
        }
        let (width, codes) = assign_dlog_codes(triangles.len());
        occupied.insert((p.to_bits(), v.to_bits()));
        surface = Surface {
            vertices,
            triangles,
            code_width: width,
            codes,
            ..surface
        };
    }
}
