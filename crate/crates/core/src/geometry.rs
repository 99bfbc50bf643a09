//! Anisotropic perimeter of planar polygons and of level sets of sampled
//! fields, Wulff polygons, the isoperimetric deficit and a coarea check.

use std::f64::consts::TAU;
use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::norms::NormSpec;
use crate::numerics::pairwise_sum;
use crate::rearrangement::{format_f64, ScalarField};

/// A simple closed polygon with counterclockwise vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<[f64; 2]>,
}

impl Polygon {
    /// Validates and orients the vertex loop. Clockwise input is reversed;
    /// repeated consecutive vertices are dropped.
    pub fn new(vertices: Vec<[f64; 2]>) -> Result<Self> {
        let poly = Polygon::normalized(vertices)?;
        if !poly.is_simple() {
            return Err(Error::invalid("polygon is self-intersecting"));
        }
        Ok(poly)
    }

    fn normalized(mut vertices: Vec<[f64; 2]>) -> Result<Self> {
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::invalid("polygon vertex is not finite"));
        }
        vertices.dedup();
        while vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(Error::invalid("polygon needs at least 3 distinct vertices"));
        }
        let mut poly = Polygon { vertices };
        let a = poly.signed_area();
        if a == 0.0 {
            return Err(Error::invalid("polygon has zero area"));
        }
        if a < 0.0 {
            poly.vertices.reverse();
        }
        Ok(poly)
    }

    /// Convex hull (Andrew's monotone chain) of at least three non-collinear
    /// points.
    pub fn convex_hull(points: &[[f64; 2]]) -> Result<Self> {
        let mut pts = points.to_vec();
        pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        pts.dedup();
        if pts.len() < 3 {
            return Err(Error::invalid("convex hull needs 3 distinct points"));
        }
        let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
            (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
        };
        let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
        for pass in 0..2 {
            let start = hull.len();
            let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
                Box::new(pts.iter())
            } else {
                Box::new(pts.iter().rev())
            };
            for &p in iter {
                while hull.len() >= start + 2
                    && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
                {
                    hull.pop();
                }
                hull.push(p);
            }
            hull.pop();
        }
        Polygon::normalized(hull)
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    fn edges(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    fn signed_area(&self) -> f64 {
        let mut parts: Vec<f64> = self
            .edges()
            .map(|(a, b)| 0.5 * (a[0] * b[1] - a[1] * b[0]))
            .collect();
        pairwise_sum(&mut parts)
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// Euclidean perimeter.
    pub fn perimeter(&self) -> f64 {
        self.edges()
            .map(|(a, b)| (b[0] - a[0]).hypot(b[1] - a[1]))
            .sum()
    }

    /// No two non-adjacent edges meet. Quadratic in the vertex count.
    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        let v = &self.vertices;
        for i in 0..n {
            let (a, b) = (v[i], v[(i + 1) % n]);
            for j in i + 1..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (c, d) = (v[j], v[(j + 1) % n]);
                if segments_intersect(a, b, c, d) {
                    return false;
                }
            }
        }
        true
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x", "y"]).map_err(|e| Error::parse(e.to_string()))?;
        for p in &self.vertices {
            wr.write_record([format_f64(p[0]), format_f64(p[1])])
                .map_err(|e| Error::parse(e.to_string()))?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let header = rd.headers().map_err(|e| Error::parse(e.to_string()))?.clone();
        if header.len() != 2 || &header[0] != "x" || &header[1] != "y" {
            return Err(Error::parse("polygon CSV header must be 'x,y'"));
        }
        let mut vertices = Vec::new();
        for rec in rd.records() {
            let rec = rec.map_err(|e| Error::parse(e.to_string()))?;
            if rec.len() != 2 {
                return Err(Error::parse("polygon CSV rows need two columns"));
            }
            let mut xy = [0.0; 2];
            for (k, cell) in rec.iter().enumerate() {
                xy[k] = cell
                    .parse()
                    .map_err(|_| Error::parse(format!("not a number: {cell:?}")))?;
            }
            vertices.push(xy);
            if vertices.len() > MAX_CSV_VERTICES {
                return Err(Error::parse("too many polygon vertices"));
            }
        }
        Polygon::new(vertices).map_err(|e| Error::parse(e.to_string()))
    }
}

/// Largest polygon accepted from a file (the simplicity check is quadratic).
pub const MAX_CSV_VERTICES: usize = 20_000;

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

fn require_planar(norm: &NormSpec) -> Result<()> {
    if norm.dim() != 2 {
        return Err(Error::invalid(format!(
            "planar geometry needs a 2-D norm, got dimension {}",
            norm.dim()
        )));
    }
    Ok(())
}

/// `Σ_edges H(ν)·|edge|`, i.e. `Σ H((dy, −dx))` by homogeneity. `H` is
/// even, so the result does not depend on orientation.
pub fn anisotropic_perimeter(poly: &Polygon, norm: &NormSpec) -> Result<f64> {
    require_planar(norm)?;
    Ok(segment_perimeter(poly.edges(), norm))
}

fn segment_perimeter<I: Iterator<Item = ([f64; 2], [f64; 2])>>(segs: I, norm: &NormSpec) -> f64 {
    let mut parts: Vec<f64> = segs
        .filter(|(a, b)| a != b)
        .map(|(a, b)| norm.value(&[b[1] - a[1], a[0] - b[0]]))
        .collect();
    pairwise_sum(&mut parts)
}

/// Polygon with vertices `ω_k / H°(ω_k)`, `ω_k` at angles `2πk/n`.
pub fn wulff_polygon(norm: &NormSpec, n: usize) -> Result<Polygon> {
    require_planar(norm)?;
    if n < 3 {
        return Err(Error::invalid("a Wulff polygon needs at least 3 vertices"));
    }
    let vertices = (0..n)
        .map(|k| {
            let t = TAU * k as f64 / n as f64;
            let d = [t.cos(), t.sin()];
            let r = 1.0 / norm.polar_value(&d);
            [r * d[0], r * d[1]]
        })
        .collect();
    // star-shaped about the origin, hence simple
    Polygon::normalized(vertices)
}

/// `P_H(E) − 2 κ^{1/2} |E|^{1/2}`.
pub fn isoperimetric_deficit(poly: &Polygon, norm: &NormSpec) -> Result<f64> {
    let perimeter = anisotropic_perimeter(poly, norm)?;
    let kappa = norm.kappa()?;
    Ok(perimeter - 2.0 * (kappa * poly.area()).sqrt())
}

/// Line segments of `{u = s}` by marching squares over cell centers.
/// Cells outside the mask, and the ring around the grid, count as below
/// every level, so superlevel sets close up.
pub fn level_set_segments(field: &ScalarField, s: f64) -> Result<Vec<([f64; 2], [f64; 2])>> {
    if field.ndim() != 2 {
        return Err(Error::invalid("level sets are extracted from 2-D fields"));
    }
    let (nx, ny) = (field.dims()[0], field.dims()[1]);
    let (hx, hy) = (field.spacing()[0], field.spacing()[1]);
    let (ox, oy) = (field.origin()[0], field.origin()[1]);
    // node (i, j) for i in -1..=nx, j in -1..=ny; outside nodes are None
    let value = |i: isize, j: isize| -> Option<f64> {
        if i < 0 || j < 0 || i >= nx as isize || j >= ny as isize {
            return None;
        }
        let k = i as usize * ny + j as usize;
        field.mask()[k].then(|| field.values()[k])
    };
    let pos = |i: isize, j: isize| [ox + (i as f64 + 0.5) * hx, oy + (j as f64 + 0.5) * hy];
    let crossing = |p: [f64; 2], vp: Option<f64>, q: [f64; 2], vq: Option<f64>| -> [f64; 2] {
        let t = match (vp, vq) {
            (Some(a), Some(b)) => ((s - a) / (b - a)).clamp(0.0, 1.0),
            // the inside endpoint carries the boundary
            (Some(_), None) => 0.0,
            (None, Some(_)) => 1.0,
            (None, None) => 0.5,
        };
        [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
    };
    let mut segs = Vec::new();
    for i in -1..nx as isize {
        for j in -1..ny as isize {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let vals: Vec<Option<f64>> = corners.iter().map(|&(a, b)| value(a, b)).collect();
            let above: Vec<bool> = vals.iter().map(|v| v.is_some_and(|x| x > s)).collect();
            let code = above
                .iter()
                .enumerate()
                .fold(0u8, |acc, (k, b)| acc | ((*b as u8) << k));
            if code == 0 || code == 15 {
                continue;
            }
            // edge k joins corner k and corner k+1
            let edge_point = |k: usize| {
                let (a, b) = (k, (k + 1) % 4);
                let pa = pos(corners[a].0, corners[a].1);
                let pb = pos(corners[b].0, corners[b].1);
                crossing(pa, vals[a], pb, vals[b])
            };
            let cut: Vec<usize> = (0..4).filter(|&k| above[k] != above[(k + 1) % 4]).collect();
            if cut.len() == 2 {
                segs.push((edge_point(cut[0]), edge_point(cut[1])));
            } else {
                // saddle: resolve by the cell average
                let known: Vec<f64> = vals.iter().flatten().copied().collect();
                let mean = known.iter().sum::<f64>() / known.len() as f64;
                let center_above = mean > s;
                if above[0] == center_above {
                    segs.push((edge_point(0), edge_point(1)));
                    segs.push((edge_point(2), edge_point(3)));
                } else {
                    segs.push((edge_point(3), edge_point(0)));
                    segs.push((edge_point(1), edge_point(2)));
                }
            }
        }
    }
    Ok(segs)
}

/// `P_H({u > s})` from the marching-squares boundary.
pub fn level_set_perimeter(field: &ScalarField, norm: &NormSpec, s: f64) -> Result<f64> {
    require_planar(norm)?;
    let segs = level_set_segments(field, s)?;
    Ok(segment_perimeter(segs.into_iter(), norm))
}

/// `∫_Ω H(Du) dx` with centered differences, one-sided at the mask boundary.
pub fn total_variation(field: &ScalarField, norm: &NormSpec) -> Result<f64> {
    require_planar(norm)?;
    if field.ndim() != 2 {
        return Err(Error::invalid("total variation is computed for 2-D fields"));
    }
    let (nx, ny) = (field.dims()[0], field.dims()[1]);
    let h = field.spacing();
    let mask = field.mask();
    let vals = field.values();
    let at = |i: isize, j: isize| -> Option<f64> {
        if i < 0 || j < 0 || i >= nx as isize || j >= ny as isize {
            return None;
        }
        let k = i as usize * ny + j as usize;
        mask[k].then(|| vals[k])
    };
    let diff = |minus: Option<f64>, here: f64, plus: Option<f64>, step: f64| match (minus, plus) {
        (Some(a), Some(b)) => (b - a) / (2.0 * step),
        (None, Some(b)) => (b - here) / step,
        (Some(a), None) => (here - a) / step,
        (None, None) => 0.0,
    };
    let mut parts = Vec::with_capacity(field.masked_count());
    for i in 0..nx as isize {
        for j in 0..ny as isize {
            let Some(u) = at(i, j) else { continue };
            let gx = diff(at(i - 1, j), u, at(i + 1, j), h[0]);
            let gy = diff(at(i, j - 1), u, at(i, j + 1), h[1]);
            parts.push(norm.value(&[gx, gy]));
        }
    }
    Ok(pairwise_sum(&mut parts) * field.cell_measure())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoareaReport {
    pub total_variation: f64,
    pub level_integral: f64,
    /// `|TV − Σ P_H Δs| / TV`; 0 when both sides vanish.
    pub residual: f64,
    /// `(s_k, P_H({u > s_k}), P_H Δs_k)` per level.
    pub levels: Vec<(f64, f64, f64)>,
}

/// Compares `∫ H(Du)` with `Σ_k P_H({u > s_k}) Δs_k`, where `Δs_k` is the
/// width of the midpoint cell around `s_k` in the sorted level list.
pub fn coarea_residual(field: &ScalarField, norm: &NormSpec, level_grid: &[f64]) -> Result<CoareaReport> {
    let tv = total_variation(field, norm)?;
    let mut s: Vec<f64> = level_grid.to_vec();
    if s.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("levels must be finite"));
    }
    s.sort_by(f64::total_cmp);
    s.dedup();
    let k = s.len();
    let mut levels = Vec::with_capacity(k);
    for i in 0..k {
        let width = match k {
            1 => 0.0,
            _ if i == 0 => s[1] - s[0],
            _ if i == k - 1 => s[k - 1] - s[k - 2],
            _ => 0.5 * (s[i + 1] - s[i - 1]),
        };
        let p = level_set_perimeter(field, norm, s[i])?;
        levels.push((s[i], p, p * width));
    }
    let mut parts: Vec<f64> = levels.iter().map(|l| l.2).collect();
    let level_integral = pairwise_sum(&mut parts);
    let residual = if tv == 0.0 && level_integral == 0.0 {
        0.0
    } else {
        (tv - level_integral).abs() / tv
    };
    Ok(CoareaReport {
        total_variation: tv,
        level_integral,
        residual,
        levels,
    })
}

/// `K` midpoint levels spanning the range of the field on `Ω`.
pub fn midpoint_levels(field: &ScalarField, k: usize) -> Vec<f64> {
    let (lo, hi) = field
        .masked_values()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !(hi > lo) || k == 0 {
        return Vec::new();
    }
    let ds = (hi - lo) / k as f64;
    (0..k).map(|i| lo + (i as f64 + 0.5) * ds).collect()
}
