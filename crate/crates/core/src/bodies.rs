//! Convex bodies containing the origin: gauges, polars, volumes and the
//! Mahler product, plus the balanced log-gauges used on C^n.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Volume of the unit ball in R^d.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * PI / d as f64,
    }
}

/// Serializable description of a body. Validation happens when it is
/// turned into a [`ConvexBody`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    Ball {
        dim: usize,
        radius: f64,
    },
    Ellipsoid {
        matrix: Vec<Vec<f64>>,
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    Halfspaces {
        normals: Vec<Vec<f64>>,
        offsets: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Ball {
        radius: f64,
    },
    Ellipsoid {
        a: DMatrix<f64>,
        a_inv: DMatrix<f64>,
        det: f64,
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
        normals: Vec<[f64; 2]>,
        offsets: Vec<f64>,
    },
    Halfspaces {
        normals: Vec<Vec<f64>>,
        offsets: Vec<f64>,
    },
}

/// A validated convex body with the origin strictly inside. Immutable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BodySpec", into = "BodySpec")]
pub struct ConvexBody {
    dim: usize,
    shape: Shape,
}

/// Monte-Carlo volume record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub value: f64,
    /// Zero for exact branches.
    pub std_error: f64,
    /// Zero for exact branches.
    pub samples: usize,
}

const DEFAULT_MC_SAMPLES: usize = 200_000;

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn shoelace(v: &[[f64; 2]]) -> f64 {
    let k = v.len();
    (0..k).map(|i| cross(v[i], v[(i + 1) % k])).sum::<f64>() / 2.0
}

/// Andrew's monotone chain; returns the strictly convex hull in CCW order.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut p: Vec<[f64; 2]> = points.to_vec();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let turn = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        cross([a[0] - o[0], a[1] - o[1]], [b[0] - o[0], b[1] - o[1]])
    };
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &q in &p {
        while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], q) <= 0.0 {
            lower.pop();
        }
        lower.push(q);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &q in p.iter().rev() {
        while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], q) <= 0.0 {
            upper.pop();
        }
        upper.push(q);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

impl ConvexBody {
    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidBody("dimension must be positive".into()));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidBody(format!(
                "radius {radius} must be positive"
            )));
        }
        Ok(Self {
            dim,
            shape: Shape::Ball { radius },
        })
    }

    /// The body {x : xᵀAx ≤ 1}.
    pub fn ellipsoid(a: DMatrix<f64>) -> Result<Self> {
        let d = a.nrows();
        if d == 0 || a.ncols() != d {
            return Err(Error::InvalidBody("ellipsoid matrix must be square".into()));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidBody("ellipsoid matrix not finite".into()));
        }
        let scale = a.amax().max(f64::MIN_POSITIVE);
        if (&a - a.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidBody("ellipsoid matrix not symmetric".into()));
        }
        let eig = a.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
            return Err(Error::InvalidBody(
                "ellipsoid matrix not positive definite".into(),
            ));
        }
        let det = eig.eigenvalues.iter().product();
        let a_inv = a
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidBody("ellipsoid matrix singular".into()))?;
        let a_inv = (&a_inv + a_inv.transpose()) * 0.5;
        Ok(Self {
            dim: d,
            shape: Shape::Ellipsoid { a, a_inv, det },
        })
    }

    pub fn ellipsoid_diag(diag: &[f64]) -> Result<Self> {
        Self::ellipsoid(DMatrix::from_diagonal(
            &nalgebra::DVector::from_column_slice(diag),
        ))
    }

    /// Counter-clockwise, strictly convex vertex list with the origin inside.
    pub fn polygon(vertices: Vec<[f64; 2]>) -> Result<Self> {
        let k = vertices.len();
        if k < 3 {
            return Err(Error::InvalidBody(
                "polygon needs at least 3 vertices".into(),
            ));
        }
        if vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidBody("polygon vertex not finite".into()));
        }
        let scale = vertices
            .iter()
            .map(|v| v[0].abs().max(v[1].abs()))
            .fold(0.0, f64::max);
        let eps = 1e-13 * scale * scale;
        let mut turning = 0.0;
        let mut normals = Vec::with_capacity(k);
        let mut offsets = Vec::with_capacity(k);
        for i in 0..k {
            let a = vertices[i];
            let b = vertices[(i + 1) % k];
            let c = vertices[(i + 2) % k];
            let e1 = [b[0] - a[0], b[1] - a[1]];
            let e2 = [c[0] - b[0], c[1] - b[1]];
            let cr = cross(e1, e2);
            if cr <= eps {
                return Err(Error::InvalidBody(
                    "polygon not strictly convex and counter-clockwise".into(),
                ));
            }
            turning += cr.atan2(e1[0] * e2[0] + e1[1] * e2[1]);
            let n = [e1[1], -e1[0]];
            let off = n[0] * a[0] + n[1] * a[1];
            if off <= eps {
                return Err(Error::InvalidBody("origin not strictly interior".into()));
            }
            normals.push(n);
            offsets.push(off);
        }
        if (turning - 2.0 * PI).abs() > 1e-6 {
            return Err(Error::InvalidBody("polygon winds more than once".into()));
        }
        Ok(Self {
            dim: 2,
            shape: Shape::Polygon {
                vertices,
                normals,
                offsets,
            },
        })
    }

    /// Convex hull of a point cloud as a polygon body.
    pub fn hull(points: &[[f64; 2]]) -> Result<Self> {
        Self::polygon(convex_hull(points))
    }

    pub fn regular_polygon(k: usize, circumradius: f64) -> Result<Self> {
        let v = (0..k)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / k as f64;
                [circumradius * a.cos(), circumradius * a.sin()]
            })
            .collect();
        Self::polygon(v)
    }

    /// The square [-s, s]².
    pub fn square(s: f64) -> Result<Self> {
        Self::polygon(vec![[-s, -s], [s, -s], [s, s], [-s, s]])
    }

    /// The body {x : aᵢ·x ≤ bᵢ}.
    pub fn halfspaces(normals: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        if normals.is_empty() || normals.len() != offsets.len() {
            return Err(Error::InvalidBody(
                "need matching, non-empty normals and offsets".into(),
            ));
        }
        let dim = normals[0].len();
        if dim == 0 {
            return Err(Error::InvalidBody("dimension must be positive".into()));
        }
        for (a, &b) in normals.iter().zip(&offsets) {
            if a.len() != dim {
                return Err(Error::InvalidBody("normals of mixed dimension".into()));
            }
            if a.iter().any(|x| !x.is_finite()) || !b.is_finite() {
                return Err(Error::InvalidBody("non-finite constraint".into()));
            }
            if a.iter().all(|&x| x == 0.0) {
                return Err(Error::InvalidBody("zero normal".into()));
            }
            if b <= 0.0 {
                return Err(Error::InvalidBody("origin not strictly interior".into()));
            }
        }
        Ok(Self {
            dim,
            shape: Shape::Halfspaces { normals, offsets },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spec(&self) -> BodySpec {
        self.clone().into()
    }

    pub fn is_ball(&self) -> bool {
        matches!(self.shape, Shape::Ball { .. })
    }

    /// Minkowski functional inf{t > 0 : x/t ∈ body}.
    pub fn minkowski(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match &self.shape {
            Shape::Ball { radius } => dot(x, x).sqrt() / radius,
            Shape::Ellipsoid { a, .. } => quad_form(a, x).max(0.0).sqrt(),
            Shape::Polygon {
                normals, offsets, ..
            } => normals
                .iter()
                .zip(offsets)
                .map(|(n, b)| (n[0] * x[0] + n[1] * x[1]) / b)
                .fold(0.0, f64::max),
            Shape::Halfspaces { normals, offsets } => normals
                .iter()
                .zip(offsets)
                .map(|(n, b)| dot(n, x) / b)
                .fold(0.0, f64::max),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.minkowski(x) <= 1.0 + 1e-12
    }

    /// Support function sup_{x ∈ body} y·x.
    pub fn support(&self, y: &[f64]) -> Result<f64> {
        match &self.shape {
            Shape::Ball { radius } => Ok(radius * dot(y, y).sqrt()),
            Shape::Ellipsoid { a_inv, .. } => Ok(quad_form(a_inv, y).max(0.0).sqrt()),
            Shape::Polygon { vertices, .. } => Ok(vertices
                .iter()
                .map(|v| v[0] * y[0] + v[1] * y[1])
                .fold(f64::NEG_INFINITY, f64::max)),
            Shape::Halfspaces { .. } => {
                let v = self.vertices_2d()?;
                Ok(v.iter()
                    .map(|v| v[0] * y[0] + v[1] * y[1])
                    .fold(f64::NEG_INFINITY, f64::max))
            }
        }
    }

    /// Vertices in CCW order (polygons and 2-D halfspace bodies).
    pub fn vertices_2d(&self) -> Result<Vec<[f64; 2]>> {
        match &self.shape {
            Shape::Polygon { vertices, .. } => Ok(vertices.clone()),
            Shape::Halfspaces { normals, offsets } if self.dim == 2 => {
                enumerate_vertices(normals, offsets)
            }
            _ => Err(Error::Unsupported(
                "vertex list only for 2-D polyhedral bodies".into(),
            )),
        }
    }

    /// Polar body {y : y·x ≤ 1 for all x in body}.
    pub fn polar(&self) -> Result<ConvexBody> {
        match &self.shape {
            Shape::Ball { radius } => ConvexBody::ball(self.dim, 1.0 / radius),
            Shape::Ellipsoid { a_inv, .. } => ConvexBody::ellipsoid(a_inv.clone()),
            Shape::Polygon { vertices, .. } => ConvexBody::halfspaces(
                vertices.iter().map(|v| v.to_vec()).collect(),
                vec![1.0; vertices.len()],
            ),
            Shape::Halfspaces { normals, offsets } => {
                if self.dim != 2 {
                    return Err(Error::Unsupported(
                        "polar of a halfspace body needs d = 2".into(),
                    ));
                }
                let pts: Vec<[f64; 2]> = normals
                    .iter()
                    .zip(offsets)
                    .map(|(a, b)| [a[0] / b, a[1] / b])
                    .collect();
                let hull = convex_hull(&pts);
                if hull.len() < 3 {
                    return Err(Error::UnboundedBody);
                }
                ConvexBody::polygon(hull).map_err(|_| Error::UnboundedBody)
            }
        }
    }

    /// Volume. Exact except for halfspace bodies in d ≥ 3, which use a
    /// seeded Monte-Carlo estimate (see [`ConvexBody::volume_estimate`]).
    pub fn volume(&self) -> Result<f64> {
        Ok(self.volume_estimate(0, DEFAULT_MC_SAMPLES)?.value)
    }

    pub fn volume_estimate(&self, seed: u64, samples: usize) -> Result<VolumeEstimate> {
        let exact = |value| {
            Ok(VolumeEstimate {
                value,
                std_error: 0.0,
                samples: 0,
            })
        };
        match &self.shape {
            Shape::Ball { radius } => {
                exact(unit_ball_volume(self.dim) * radius.powi(self.dim as i32))
            }
            Shape::Ellipsoid { det, .. } => exact(unit_ball_volume(self.dim) / det.sqrt()),
            Shape::Polygon { vertices, .. } => exact(shoelace(vertices)),
            Shape::Halfspaces { normals, offsets } => match self.dim {
                1 => {
                    let mut hi = f64::INFINITY;
                    let mut lo = f64::NEG_INFINITY;
                    for (a, b) in normals.iter().zip(offsets) {
                        if a[0] > 0.0 {
                            hi = hi.min(b / a[0]);
                        } else {
                            lo = lo.max(b / a[0]);
                        }
                    }
                    if !(hi.is_finite() && lo.is_finite()) {
                        return Err(Error::UnboundedBody);
                    }
                    exact(hi - lo)
                }
                2 => exact(shoelace(&enumerate_vertices(normals, offsets)?)),
                _ => self.monte_carlo_volume(seed, samples),
            },
        }
    }

    // vol = c_d E[ρ(θ)^d] over uniform directions, ρ = 1/μ.
    fn monte_carlo_volume(&self, seed: u64, samples: usize) -> Result<VolumeEstimate> {
        if samples < 2 {
            return Err(Error::InvalidBody("need at least two samples".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = self.dim;
        let mut theta = vec![0.0; d];
        let (mut sum, mut sum2) = (0.0, 0.0);
        for _ in 0..samples {
            let mut norm: f64 = 0.0;
            for t in theta.iter_mut() {
                *t = StandardNormal.sample(&mut rng);
                norm += *t * *t;
            }
            let norm = norm.sqrt();
            theta.iter_mut().for_each(|t| *t /= norm);
            let mu = self.minkowski(&theta);
            if mu <= 0.0 {
                return Err(Error::UnboundedBody);
            }
            let r = mu.powi(-(d as i32));
            sum += r;
            sum2 += r * r;
        }
        let n = samples as f64;
        let mean = sum / n;
        let var = (sum2 / n - mean * mean).max(0.0) * n / (n - 1.0);
        let c = unit_ball_volume(d);
        Ok(VolumeEstimate {
            value: c * mean,
            std_error: c * (var / n).sqrt(),
            samples,
        })
    }

    /// Mahler volume |K|·|K°|.
    pub fn mahler(&self) -> Result<f64> {
        Ok(self.volume()? * self.polar()?.volume()?)
    }

    /// Image {Tx : x ∈ body} for invertible T.
    pub fn linear_image(&self, t: &DMatrix<f64>) -> Result<ConvexBody> {
        let d = self.dim;
        if t.nrows() != d || t.ncols() != d {
            return Err(Error::InvalidBody("map dimension mismatch".into()));
        }
        let t_inv = t
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidBody("map not invertible".into()))?;
        match &self.shape {
            Shape::Ball { radius } => {
                let g = t.transpose() * t;
                let s2 = g[(0, 0)];
                let conformal = (&g - DMatrix::identity(d, d) * s2).amax() <= 1e-12 * s2;
                if conformal {
                    ConvexBody::ball(d, radius * s2.sqrt())
                } else {
                    let a = t_inv.transpose() * &t_inv / (radius * radius);
                    ConvexBody::ellipsoid((&a + a.transpose()) * 0.5)
                }
            }
            Shape::Ellipsoid { a, .. } => {
                let m = t_inv.transpose() * a * &t_inv;
                ConvexBody::ellipsoid((&m + m.transpose()) * 0.5)
            }
            Shape::Polygon { vertices, .. } => {
                let mut v: Vec<[f64; 2]> = vertices
                    .iter()
                    .map(|p| {
                        [
                            t[(0, 0)] * p[0] + t[(0, 1)] * p[1],
                            t[(1, 0)] * p[0] + t[(1, 1)] * p[1],
                        ]
                    })
                    .collect();
                if t.determinant() < 0.0 {
                    v.reverse();
                }
                ConvexBody::polygon(v)
            }
            Shape::Halfspaces { normals, offsets } => {
                let tt = t_inv.transpose();
                let normals = normals
                    .iter()
                    .map(|a| {
                        (0..d)
                            .map(|i| (0..d).map(|j| tt[(i, j)] * a[j]).sum())
                            .collect()
                    })
                    .collect();
                ConvexBody::halfspaces(normals, offsets.clone())
            }
        }
    }

    pub fn scaled(&self, s: f64) -> Result<ConvexBody> {
        self.linear_image(&(DMatrix::identity(self.dim, self.dim) * s))
    }

    /// The dilate of this body with the given volume.
    pub fn scaled_to_volume(&self, volume: f64) -> Result<ConvexBody> {
        let v = self.volume()?;
        self.scaled((volume / v).powf(1.0 / self.dim as f64))
    }

    /// Radius of the smallest origin-centred ball containing the body.
    pub fn bounding_radius(&self) -> Result<f64> {
        match &self.shape {
            Shape::Ball { radius } => Ok(*radius),
            Shape::Ellipsoid { a, .. } => {
                let lmin = a.clone().symmetric_eigen().eigenvalues.min();
                Ok(1.0 / lmin.sqrt())
            }
            _ => {
                let v = self.vertices_2d()?;
                Ok(v.iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max))
            }
        }
    }

    /// Largest |x_k| over the body, per axis.
    pub fn extent(&self) -> Result<Vec<f64>> {
        match &self.shape {
            Shape::Ball { radius } => Ok(vec![*radius; self.dim]),
            Shape::Ellipsoid { a_inv, .. } => {
                Ok((0..self.dim).map(|k| a_inv[(k, k)].sqrt()).collect())
            }
            _ => {
                let v = self.vertices_2d()?;
                Ok((0..2)
                    .map(|k| v.iter().map(|p| p[k].abs()).fold(0.0, f64::max))
                    .collect())
            }
        }
    }

    pub fn is_origin_symmetric(&self) -> bool {
        match &self.shape {
            Shape::Ball { .. } | Shape::Ellipsoid { .. } => true,
            Shape::Polygon { vertices, .. } => {
                let scale = vertices
                    .iter()
                    .map(|v| v[0].hypot(v[1]))
                    .fold(0.0, f64::max);
                vertices.iter().all(|v| {
                    vertices
                        .iter()
                        .any(|w| (v[0] + w[0]).abs() + (v[1] + w[1]).abs() <= 1e-9 * scale)
                })
            }
            Shape::Halfspaces { normals, offsets } => {
                let p: Vec<Vec<f64>> = normals
                    .iter()
                    .zip(offsets)
                    .map(|(a, b)| a.iter().map(|x| x / b).collect())
                    .collect();
                let scale = p.iter().map(|q| dot(q, q).sqrt()).fold(0.0, f64::max);
                p.iter().all(|q| {
                    p.iter().any(|r| {
                        q.iter().zip(r).map(|(x, y)| (x + y).abs()).sum::<f64>() <= 1e-9 * scale
                    })
                })
            }
        }
    }

    /// Centroid (polygons, 2-D halfspace bodies; zero for centred quadrics).
    pub fn centroid(&self) -> Result<Vec<f64>> {
        match &self.shape {
            Shape::Ball { .. } | Shape::Ellipsoid { .. } => Ok(vec![0.0; self.dim]),
            _ => {
                let v = self.vertices_2d()?;
                let k = v.len();
                let (mut cx, mut cy, mut a2) = (0.0, 0.0, 0.0);
                for i in 0..k {
                    let (p, q) = (v[i], v[(i + 1) % k]);
                    let c = cross(p, q);
                    a2 += c;
                    cx += (p[0] + q[0]) * c;
                    cy += (p[1] + q[1]) * c;
                }
                Ok(vec![cx / (3.0 * a2), cy / (3.0 * a2)])
            }
        }
    }

    /// The body moved by -c, i.e. {x - c : x ∈ body}.
    pub fn translated(&self, c: &[f64]) -> Result<ConvexBody> {
        match &self.shape {
            Shape::Polygon { vertices, .. } => ConvexBody::polygon(
                vertices
                    .iter()
                    .map(|v| [v[0] - c[0], v[1] - c[1]])
                    .collect(),
            ),
            Shape::Halfspaces { normals, offsets } => ConvexBody::halfspaces(
                normals.clone(),
                normals
                    .iter()
                    .zip(offsets)
                    .map(|(a, b)| b - dot(a, c))
                    .collect(),
            ),
            _ => {
                if c.iter().all(|&x| x == 0.0) {
                    Ok(self.clone())
                } else {
                    Err(Error::Unsupported(
                        "only polyhedral bodies can be translated".into(),
                    ))
                }
            }
        }
    }

    /// Translate so that the centroid sits at the origin.
    pub fn centered(&self) -> Result<ConvexBody> {
        self.translated(&self.centroid()?)
    }
}

fn quad_form(a: &DMatrix<f64>, x: &[f64]) -> f64 {
    let d = x.len();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            s += x[i] * a[(i, j)] * x[j];
        }
    }
    s
}

// Pairwise line intersections, feasibility filter, angular sort.
fn enumerate_vertices(normals: &[Vec<f64>], offsets: &[f64]) -> Result<Vec<[f64; 2]>> {
    let pts: Vec<[f64; 2]> = normals
        .iter()
        .zip(offsets)
        .map(|(a, b)| [a[0] / b, a[1] / b])
        .collect();
    let hull = convex_hull(&pts);
    let bounded = hull.len() >= 3
        && (0..hull.len()).all(|i| cross(hull[i], hull[(i + 1) % hull.len()]) > 1e-14);
    if !bounded {
        return Err(Error::UnboundedBody);
    }
    let k = normals.len();
    let mut verts: Vec<[f64; 2]> = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let (a, b) = (&normals[i], &normals[j]);
            let det = a[0] * b[1] - a[1] * b[0];
            let scale = dot(a, a).sqrt() * dot(b, b).sqrt();
            if det.abs() <= 1e-14 * scale {
                continue;
            }
            let x = [
                (offsets[i] * b[1] - offsets[j] * a[1]) / det,
                (a[0] * offsets[j] - b[0] * offsets[i]) / det,
            ];
            let feasible = normals
                .iter()
                .zip(offsets)
                .all(|(n, o)| n[0] * x[0] + n[1] * x[1] <= o + 1e-10 * o.abs().max(1.0));
            if feasible {
                verts.push(x);
            }
        }
    }
    verts.sort_by(|p, q| p[1].atan2(p[0]).total_cmp(&q[1].atan2(q[0])));
    let scale = verts.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max);
    let mut out: Vec<[f64; 2]> = Vec::new();
    for v in verts {
        if out.last().map_or(true, |w: &[f64; 2]| {
            (v[0] - w[0]).hypot(v[1] - w[1]) > 1e-11 * scale
        }) {
            out.push(v);
        }
    }
    while out.len() > 1 {
        let (f, l) = (out[0], out[out.len() - 1]);
        if (f[0] - l[0]).hypot(f[1] - l[1]) <= 1e-11 * scale {
            out.pop();
        } else {
            break;
        }
    }
    if out.len() < 3 {
        return Err(Error::UnboundedBody);
    }
    Ok(out)
}

impl TryFrom<BodySpec> for ConvexBody {
    type Error = Error;
    fn try_from(s: BodySpec) -> Result<Self> {
        match s {
            BodySpec::Ball { dim, radius } => ConvexBody::ball(dim, radius),
            BodySpec::Ellipsoid { matrix } => {
                let d = matrix.len();
                if matrix.iter().any(|r| r.len() != d) {
                    return Err(Error::InvalidBody("ellipsoid matrix must be square".into()));
                }
                ConvexBody::ellipsoid(DMatrix::from_fn(d, d, |i, j| matrix[i][j]))
            }
            BodySpec::Polygon { vertices } => ConvexBody::polygon(vertices),
            BodySpec::Halfspaces { normals, offsets } => ConvexBody::halfspaces(normals, offsets),
        }
    }
}

impl From<ConvexBody> for BodySpec {
    fn from(b: ConvexBody) -> Self {
        match b.shape {
            Shape::Ball { radius } => BodySpec::Ball { dim: b.dim, radius },
            Shape::Ellipsoid { a, .. } => BodySpec::Ellipsoid {
                matrix: (0..b.dim)
                    .map(|i| (0..b.dim).map(|j| a[(i, j)]).collect())
                    .collect(),
            },
            Shape::Polygon { vertices, .. } => BodySpec::Polygon { vertices },
            Shape::Halfspaces { normals, offsets } => BodySpec::Halfspaces { normals, offsets },
        }
    }
}

/// u_Ω = log μ_Ω for a balanced (circled) domain in C^n, read as R^{2n}
/// with z_j = x_{2j} + i x_{2j+1}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BalancedLog {
    /// log|z|.
    Ball { n: usize },
    /// log|Az| for an invertible complex matrix A = re + i·im.
    ComplexEllipsoid {
        re: Vec<Vec<f64>>,
        im: Vec<Vec<f64>>,
    },
    /// (1/p) log Σ|z_j|^p.
    ModulusPower { n: usize, p: f64 },
    /// log μ of a circled convex body.
    Body { body: ConvexBody },
}

impl BalancedLog {
    pub fn ball(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidBody("n must be positive".into()));
        }
        Ok(BalancedLog::Ball { n })
    }

    pub fn complex_ellipsoid(re: Vec<Vec<f64>>, im: Vec<Vec<f64>>) -> Result<Self> {
        let n = re.len();
        if n == 0 || im.len() != n || re.iter().chain(&im).any(|r| r.len() != n) {
            return Err(Error::InvalidBody("complex matrix must be square".into()));
        }
        let u = BalancedLog::ComplexEllipsoid { re, im };
        // invertibility through the real form
        if u.real_gram().map(|g| g.determinant()).unwrap_or(0.0) <= 0.0 {
            return Err(Error::InvalidBody("complex matrix not invertible".into()));
        }
        Ok(u)
    }

    pub fn modulus_power(n: usize, p: f64) -> Result<Self> {
        if n == 0 || !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidBody("need n ≥ 1 and p ≥ 1".into()));
        }
        Ok(BalancedLog::ModulusPower { n, p })
    }

    /// Accepts a body only if it is invariant under z ↦ e^{iθ}z.
    pub fn from_body(body: ConvexBody) -> Result<Self> {
        if body.dim() % 2 != 0 {
            return Err(Error::InvalidBody("body dimension must be even".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let d = body.dim();
        for _ in 0..64 {
            let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let m0 = body.minkowski(&z);
            for k in 1..8 {
                let w = rotate(&z, 2.0 * PI * k as f64 / 8.0);
                if (body.minkowski(&w) - m0).abs() > 1e-9 * m0.max(1.0) {
                    return Err(Error::InvalidBody("body is not circled".into()));
                }
            }
        }
        Ok(BalancedLog::Body { body })
    }

    pub fn n(&self) -> usize {
        match self {
            BalancedLog::Ball { n } | BalancedLog::ModulusPower { n, .. } => *n,
            BalancedLog::ComplexEllipsoid { re, .. } => re.len(),
            BalancedLog::Body { body } => body.dim() / 2,
        }
    }

    pub fn mu(&self, z: &[f64]) -> f64 {
        match self {
            BalancedLog::Ball { .. } => dot(z, z).sqrt(),
            BalancedLog::ComplexEllipsoid { re, im } => {
                let n = re.len();
                let mut s = 0.0;
                for k in 0..n {
                    let mut w = Complex64::new(0.0, 0.0);
                    for j in 0..n {
                        w += Complex64::new(re[k][j], im[k][j])
                            * Complex64::new(z[2 * j], z[2 * j + 1]);
                    }
                    s += w.norm_sqr();
                }
                s.sqrt()
            }
            BalancedLog::ModulusPower { p, .. } => z
                .chunks(2)
                .map(|c| c[0].hypot(c[1]).powf(*p))
                .sum::<f64>()
                .powf(1.0 / p),
            BalancedLog::Body { body } => body.minkowski(z),
        }
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        self.mu(z).ln()
    }

    /// Real Gram matrix of the ellipsoid variant, |Az|² = xᵀMx.
    fn real_gram(&self) -> Option<DMatrix<f64>> {
        match self {
            BalancedLog::ComplexEllipsoid { re, im } => {
                let n = re.len();
                let r = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
                    let (k, a) = (i / 2, i % 2);
                    let (l, b) = (j / 2, j % 2);
                    let (x, y) = (re[k][l], im[k][l]);
                    match (a, b) {
                        (0, 0) | (1, 1) => x,
                        (0, 1) => -y,
                        _ => y,
                    }
                });
                Some(r.transpose() * r)
            }
            _ => None,
        }
    }

    /// The unit sublevel set as a body, when representable.
    pub fn to_body(&self) -> Result<ConvexBody> {
        match self {
            BalancedLog::Ball { n } => ConvexBody::ball(2 * n, 1.0),
            BalancedLog::ComplexEllipsoid { .. } => {
                ConvexBody::ellipsoid(self.real_gram().unwrap())
            }
            BalancedLog::Body { body } => Ok(body.clone()),
            BalancedLog::ModulusPower { .. } => Err(Error::Unsupported(
                "modulus-power body has no exact representation".into(),
            )),
        }
    }
}

/// Multiply every complex coordinate by e^{iθ}.
pub fn rotate(z: &[f64], theta: f64) -> Vec<f64> {
    let (s, c) = theta.sin_cos();
    z.chunks(2)
        .flat_map(|p| [c * p[0] - s * p[1], s * p[0] + c * p[1]])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_ball_volumes() {
        assert_relative_eq!(unit_ball_volume(2), PI, epsilon = 1e-15);
        assert_relative_eq!(unit_ball_volume(3), 4.0 * PI / 3.0, epsilon = 1e-14);
        assert_relative_eq!(unit_ball_volume(4), PI * PI / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn gauges() {
        let sq = ConvexBody::square(1.0).unwrap();
        assert_relative_eq!(sq.minkowski(&[0.5, 0.25]), 0.5);
        let b = ConvexBody::ball(2, 2.0).unwrap();
        assert_relative_eq!(b.minkowski(&[1.0, 1.0]), 2f64.sqrt() / 2.0, epsilon = 1e-15);
        let e = ConvexBody::ellipsoid_diag(&[1.0, 4.0]).unwrap();
        assert_relative_eq!(e.minkowski(&[1.0, 0.0]), 1.0);
    }

    #[test]
    fn rejects_bad_bodies() {
        assert!(ConvexBody::polygon(vec![[1.0, 1.0], [2.0, 1.0], [2.0, 2.0]]).is_err());
        assert!(
            ConvexBody::polygon(vec![[-1.0, -1.0], [-1.0, 1.0], [1.0, 1.0], [1.0, -1.0]]).is_err()
        );
        assert!(ConvexBody::ellipsoid_diag(&[1.0, -1.0]).is_err());
        assert!(ConvexBody::halfspaces(vec![vec![1.0, 0.0]], vec![0.0]).is_err());
        assert!(ConvexBody::ball(2, 0.0).is_err());
    }

    #[test]
    fn hull_drops_interior_and_collinear() {
        let h = convex_hull(&[
            [0.0, 0.0],
            [1.0, 0.0],
            [2.0, 0.0],
            [2.0, 2.0],
            [0.0, 2.0],
            [1.0, 1.0],
        ]);
        assert_eq!(h.len(), 4);
    }

    #[test]
    fn unbounded_halfspaces() {
        let h =
            ConvexBody::halfspaces(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 1.0]).unwrap();
        assert_eq!(h.volume(), Err(Error::UnboundedBody));
    }

    #[test]
    fn translation_and_centroid() {
        let t = ConvexBody::polygon(vec![[-1.0, -1.0], [2.0, -1.0], [-1.0, 2.0]]).unwrap();
        let c = t.centroid().unwrap();
        assert_relative_eq!(c[0], 0.0, epsilon = 1e-15);
        let moved = t.translated(&[0.5, 0.0]).unwrap();
        assert_relative_eq!(moved.centroid().unwrap()[0], -0.5, epsilon = 1e-14);
    }

    #[test]
    fn serde_roundtrip_validates() {
        let b = ConvexBody::square(1.0).unwrap();
        let s = serde_json::to_string(&b).unwrap();
        let back: ConvexBody = serde_json::from_str(&s).unwrap();
        assert_eq!(b, back);
        let bad = r#"{"type":"ball","dim":2,"radius":-1}"#;
        assert!(serde_json::from_str::<ConvexBody>(bad).is_err());
    }

    #[test]
    fn circled_check() {
        assert!(BalancedLog::from_body(ConvexBody::ball(4, 1.0).unwrap()).is_ok());
        assert!(
            BalancedLog::from_body(ConvexBody::ellipsoid_diag(&[1.0, 2.0, 1.0, 1.0]).unwrap())
                .is_err()
        );
        let u = BalancedLog::complex_ellipsoid(
            vec![vec![1.0, 0.0], vec![0.0, 2.0]],
            vec![vec![0.0; 2]; 2],
        )
        .unwrap();
        assert!(BalancedLog::from_body(u.to_body().unwrap()).is_ok());
    }
}
