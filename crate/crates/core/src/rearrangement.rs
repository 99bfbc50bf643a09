//! Distribution functions, decreasing rearrangements, convex symmetrization,
//! maximal functions and Lorentz (quasi-)norms.
//!
//! Grid data rearranges to an exact step function. All one-dimensional
//! profiles are stored as [`PiecewisePower`] functions, i.e. finite sums
//! `Σ c t^e` on consecutive intervals, so that the Lorentz integrands
//! `t^{σ/m-1} u(t)^σ` are power functions piece by piece and integrate in
//! closed form. Pieces with several terms (which appear in `u**`) fall back
//! to adaptive quadrature.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::NormSpec;
use crate::numerics::{
    golden_max, integrate, integrate_to_infinity, pairwise_sum, Quadrature, Tolerance,
};
use crate::serde_ext::extended;

const QUAD_TOL: Tolerance = Tolerance::new(0.0, 1e-13).with_max_intervals(4000);

// ---------------------------------------------------------------------------
// Scalar fields

/// A function sampled at the cell centers of a uniform Cartesian grid, with
/// a mask selecting the cells that belong to the domain `Ω`.
///
/// Cells are stored in row-major order: the last axis varies fastest. Cell
/// `(i_0, .., i_{d-1})` has center `origin_k + (i_k + 1/2) spacing_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    dims: Vec<usize>,
    spacing: Vec<f64>,
    origin: Vec<f64>,
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl ScalarField {
    pub fn new(
        dims: Vec<usize>,
        spacing: Vec<f64>,
        origin: Vec<f64>,
        values: Vec<f64>,
        mask: Vec<bool>,
    ) -> Result<Self> {
        let d = dims.len();
        if d == 0 || spacing.len() != d || origin.len() != d {
            return Err(Error::invalid("grid dims, spacing and origin must share one length"));
        }
        if dims.contains(&0) {
            return Err(Error::invalid("every grid axis needs at least one cell"));
        }
        let total = dims
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .ok_or_else(|| Error::invalid("grid size overflows"))?;
        if values.len() != total || mask.len() != total {
            return Err(Error::invalid(format!(
                "expected {total} values and mask entries, got {} and {}",
                values.len(),
                mask.len()
            )));
        }
        if spacing.iter().any(|h| !h.is_finite() || *h <= 0.0) {
            return Err(Error::invalid("grid spacing must be positive and finite"));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::invalid("grid origin must be finite"));
        }
        if !mask.iter().any(|m| *m) {
            return Err(Error::invalid("domain mask is empty"));
        }
        if values.iter().zip(&mask).any(|(v, m)| *m && !v.is_finite()) {
            return Err(Error::invalid("non-finite value on a domain cell"));
        }
        Ok(ScalarField {
            dims,
            spacing,
            origin,
            values,
            mask,
        })
    }

    /// Samples `f` at every cell center; cells where `f` returns `None` lie
    /// outside the domain.
    pub fn from_fn<F>(dims: Vec<usize>, spacing: Vec<f64>, origin: Vec<f64>, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Option<f64>,
    {
        let total = dims
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .ok_or_else(|| Error::invalid("grid size overflows"))?;
        let mut values = Vec::with_capacity(total);
        let mut mask = Vec::with_capacity(total);
        let mut x = vec![0.0; dims.len()];
        let probe = ScalarField {
            dims: dims.clone(),
            spacing: spacing.clone(),
            origin: origin.clone(),
            values: Vec::new(),
            mask: Vec::new(),
        };
        if spacing.len() != dims.len() || origin.len() != dims.len() {
            return Err(Error::invalid("grid dims, spacing and origin must share one length"));
        }
        for i in 0..total {
            probe.center_into(i, &mut x);
            match f(&x) {
                Some(v) => {
                    values.push(v);
                    mask.push(true);
                }
                None => {
                    values.push(0.0);
                    mask.push(false);
                }
            }
        }
        ScalarField::new(dims, spacing, origin, values, mask)
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn cell_measure(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// `|Ω|` as the number of domain cells times the cell measure.
    pub fn domain_measure(&self) -> f64 {
        self.masked_count() as f64 * self.cell_measure()
    }

    /// Values on domain cells, in storage order.
    pub fn masked_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values
            .iter()
            .zip(&self.mask)
            .filter(|(_, m)| **m)
            .map(|(v, _)| *v)
    }

    /// Multi-index of the flat cell index `i`.
    pub fn unravel(&self, mut i: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            idx[k] = i % self.dims[k];
            i /= self.dims[k];
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.dims)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn center(&self, i: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dims.len()];
        self.center_into(i, &mut x);
        x
    }

    fn center_into(&self, mut i: usize, x: &mut [f64]) {
        for k in (0..self.dims.len()).rev() {
            let ik = i % self.dims[k];
            i /= self.dims[k];
            x[k] = self.origin[k] + (ik as f64 + 0.5) * self.spacing[k];
        }
    }

    /// Same grid and mask, values mapped through `f`.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<Self> {
        ScalarField::new(
            self.dims.clone(),
            self.spacing.clone(),
            self.origin.clone(),
            self.values.iter().map(|v| f(*v)).collect(),
            self.mask.clone(),
        )
    }

    /// `∫_Ω |u|^p dx` with the cell (midpoint) rule.
    pub fn lp_integral(&self, p: f64) -> f64 {
        let mut terms: Vec<f64> = self.masked_values().map(|v| v.abs().powf(p)).collect();
        pairwise_sum(&mut terms) * self.cell_measure()
    }

    // -- CSV ---------------------------------------------------------------

    /// Writes one row per domain cell: center coordinates, then the value.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (0..self.ndim()).map(axis_name).collect();
        header.push("value".into());
        wr.write_record(&header).map_err(csv_err)?;
        for i in 0..self.len() {
            if !self.mask[i] {
                continue;
            }
            let mut row: Vec<String> = self.center(i).iter().map(|x| format_f64(*x)).collect();
            row.push(format_f64(self.values[i]));
            wr.write_record(&row).map_err(csv_err)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads the CSV layout of [`ScalarField::write_csv`]. The grid is
    /// inferred from the coordinates: spacing is the minimal gap between
    /// distinct coordinates on each axis (1 if an axis has a single value),
    /// and every coordinate must sit on that lattice.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let header = rd.headers().map_err(csv_err)?.clone();
        if header.len() < 2 {
            return Err(Error::parse("field CSV needs at least one coordinate column and a value"));
        }
        if header.get(header.len() - 1) != Some("value") {
            return Err(Error::parse("last field CSV column must be named 'value'"));
        }
        let d = header.len() - 1;
        if d > MAX_DIMS {
            return Err(Error::parse(format!("at most {MAX_DIMS} axes are supported")));
        }
        let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
        for rec in rd.records() {
            let rec = rec.map_err(csv_err)?;
            if rec.len() != d + 1 {
                return Err(Error::parse("ragged field CSV row"));
            }
            let mut nums = Vec::with_capacity(d + 1);
            for cell in rec.iter() {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| Error::parse(format!("not a number: {cell:?}")))?;
                if !v.is_finite() {
                    return Err(Error::parse("non-finite entry in field CSV"));
                }
                nums.push(v);
            }
            let value = nums.pop().unwrap_or(0.0);
            rows.push((nums, value));
        }
        if rows.is_empty() {
            return Err(Error::parse("field CSV has no rows"));
        }
        let mut spacing = Vec::with_capacity(d);
        let mut origin = Vec::with_capacity(d);
        let mut dims = Vec::with_capacity(d);
        for k in 0..d {
            let mut xs: Vec<f64> = rows.iter().map(|r| r.0[k]).collect();
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            let lo = xs[0];
            let hi = xs[xs.len() - 1];
            let h = xs
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::INFINITY, f64::min);
            let h = if h.is_finite() { h } else { 1.0 };
            if h <= 1e-12 * (1.0 + lo.abs().max(hi.abs())) {
                return Err(Error::parse("coordinates too close together to form a grid"));
            }
            let n = ((hi - lo) / h).round();
            if !(n >= 0.0 && n < MAX_CELLS as f64) {
                return Err(Error::parse("inferred grid is too large"));
            }
            spacing.push(h);
            origin.push(lo - 0.5 * h);
            dims.push(n as usize + 1);
        }
        let total = dims
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .filter(|t| *t <= MAX_CELLS)
            .ok_or_else(|| Error::parse("inferred grid is too large"))?;
        let mut values = vec![0.0; total];
        let mut mask = vec![false; total];
        for (x, v) in rows {
            let mut flat = 0usize;
            for k in 0..d {
                let t = (x[k] - origin[k]) / spacing[k] - 0.5;
                let i = t.round();
                if (t - i).abs() > 1e-6 {
                    return Err(Error::parse(format!(
                        "coordinate {} is off the inferred grid on axis {k}",
                        x[k]
                    )));
                }
                flat = flat * dims[k] + i as usize;
            }
            if mask[flat] {
                return Err(Error::parse("duplicate cell in field CSV"));
            }
            mask[flat] = true;
            values[flat] = v;
        }
        ScalarField::new(dims, spacing, origin, values, mask)
    }

    // -- binary ------------------------------------------------------------

    /// Little-endian layout: magic `WHSF`, `u32` axis count `d`, `d × u64`
    /// dims, `d × f64` spacing, `d × f64` origin, one `f64` per cell
    /// (row-major), then the mask as an LSB-first bitset.
    pub fn to_bytes(&self) -> Vec<u8> {
        let d = self.ndim();
        let mut out = Vec::with_capacity(8 + 24 * d + 8 * self.len() + self.len() / 8 + 1);
        out.extend_from_slice(BINARY_MAGIC);
        out.extend_from_slice(&(d as u32).to_le_bytes());
        for &n in &self.dims {
            out.extend_from_slice(&(n as u64).to_le_bytes());
        }
        for v in self.spacing.iter().chain(&self.origin).chain(&self.values) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let mut bits = vec![0u8; self.len().div_ceil(8)];
        for (i, m) in self.mask.iter().enumerate() {
            if *m {
                bits[i / 8] |= 1 << (i % 8);
            }
        }
        out.extend_from_slice(&bits);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = ByteCursor { buf: bytes, pos: 0 };
        if cur.take(4)? != BINARY_MAGIC {
            return Err(Error::parse("bad magic, expected WHSF"));
        }
        let d = cur.u32()? as usize;
        if d == 0 || d > MAX_DIMS {
            return Err(Error::parse(format!("axis count {d} outside 1..={MAX_DIMS}")));
        }
        let mut dims = Vec::with_capacity(d);
        for _ in 0..d {
            let n = cur.u64()?;
            let n = usize::try_from(n).map_err(|_| Error::parse("dimension overflows usize"))?;
            dims.push(n);
        }
        let total = dims
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .filter(|t| *t <= MAX_CELLS)
            .ok_or_else(|| Error::parse("grid too large"))?;
        let need = total
            .checked_mul(8)
            .and_then(|v| v.checked_add(total.div_ceil(8)))
            .and_then(|v| v.checked_add(16 * d))
            .ok_or_else(|| Error::parse("grid too large"))?;
        if cur.remaining() != need {
            return Err(Error::parse(format!(
                "payload has {} bytes, header implies {need}",
                cur.remaining()
            )));
        }
        let spacing = (0..d).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
        let origin = (0..d).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
        let values = (0..total).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
        let bits = cur.take(total.div_ceil(8))?;
        let mask = (0..total).map(|i| bits[i / 8] >> (i % 8) & 1 == 1).collect();
        ScalarField::new(dims, spacing, origin, values, mask)
    }
}

const BINARY_MAGIC: &[u8; 4] = b"WHSF";
const MAX_DIMS: usize = 8;
/// Upper bound on cells accepted from files.
pub const MAX_CELLS: usize = 1 << 28;

struct ByteCursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteCursor<'a> {
    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::parse("truncated input"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn axis_name(k: usize) -> String {
    match k {
        0 => "x".into(),
        1 => "y".into(),
        2 => "z".into(),
        _ => format!("x{k}"),
    }
}

pub(crate) fn format_f64(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::parse(e.to_string())
}

// ---------------------------------------------------------------------------
// Piecewise power functions and monotone profiles

/// The power function `coef · t^exp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    pub exp: f64,
}

impl Term {
    pub fn new(coef: f64, exp: f64) -> Self {
        Term { coef, exp }
    }

    pub fn constant(c: f64) -> Self {
        Term { coef: c, exp: 0.0 }
    }

    fn eval(&self, t: f64) -> f64 {
        if self.coef == 0.0 {
            0.0
        } else if self.exp == 0.0 {
            self.coef
        } else {
            self.coef * t.powf(self.exp)
        }
    }
}

/// Sum of power terms on `[start, end)`; `end` may be `+∞`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub start: f64,
    #[serde(with = "extended")]
    pub end: f64,
    pub terms: Vec<Term>,
}

impl Piece {
    pub fn eval(&self, t: f64) -> f64 {
        self.terms.iter().map(|term| term.eval(t)).sum()
    }

    fn single(&self) -> Option<Term> {
        match self.terms.as_slice() {
            [] => Some(Term::constant(0.0)),
            [t] => Some(*t),
            _ => None,
        }
    }

    fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coef == 0.0)
    }
}

/// A nonnegative function on `(0, ∞)` given by consecutive power pieces
/// starting at `0`; it vanishes beyond the last piece.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePower {
    pieces: Vec<Piece>,
}

impl PiecewisePower {
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        let mut prev = 0.0;
        for (k, p) in pieces.iter().enumerate() {
            if p.start != prev {
                return Err(Error::invalid(format!(
                    "piece {k} starts at {} but the previous one ends at {prev}",
                    p.start
                )));
            }
            if !(p.end > p.start) {
                return Err(Error::invalid(format!("piece {k} is empty")));
            }
            if p.end.is_infinite() && k + 1 != pieces.len() {
                return Err(Error::invalid("only the last piece may be unbounded"));
            }
            if p.terms.iter().any(|t| !t.coef.is_finite() || !t.exp.is_finite()) {
                return Err(Error::invalid(format!("piece {k} has a non-finite term")));
            }
            prev = p.end;
        }
        Ok(PiecewisePower { pieces })
    }

    /// Right-continuous step function: `values[k]` on `[breaks[k-1], breaks[k])`
    /// with `breaks[-1] = 0`.
    pub fn steps(breaks: &[f64], values: &[f64]) -> Result<Self> {
        if breaks.len() != values.len() {
            return Err(Error::invalid("steps: breaks and values differ in length"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("steps: values must be finite and nonnegative"));
        }
        let mut start = 0.0;
        let mut pieces = Vec::with_capacity(values.len());
        for (&b, &v) in breaks.iter().zip(values) {
            if b.is_nan() {
                return Err(Error::invalid("steps: NaN breakpoint"));
            }
            pieces.push(Piece {
                start,
                end: b,
                terms: vec![Term::constant(v)],
            });
            start = b;
        }
        PiecewisePower::new(pieces)
    }

    /// Continuous interpolant of `(s_k, v_k)` with `s_0 = 0`.
    pub fn piecewise_linear(s: &[f64], v: &[f64]) -> Result<Self> {
        if s.len() != v.len() || s.len() < 2 {
            return Err(Error::invalid("piecewise_linear: need matching nodes, at least 2"));
        }
        if s[0] != 0.0 {
            return Err(Error::invalid("piecewise_linear: first node must be 0"));
        }
        let mut pieces = Vec::with_capacity(s.len() - 1);
        for k in 0..s.len() - 1 {
            let slope = (v[k + 1] - v[k]) / (s[k + 1] - s[k]);
            pieces.push(Piece {
                start: s[k],
                end: s[k + 1],
                terms: vec![Term::constant(v[k] - slope * s[k]), Term::new(slope, 1.0)],
            });
        }
        PiecewisePower::new(pieces)
    }

    /// `c t^e` on `(0, end)`.
    pub fn power(c: f64, e: f64, end: f64) -> Result<Self> {
        PiecewisePower::new(vec![Piece {
            start: 0.0,
            end,
            terms: vec![Term::new(c, e)],
        }])
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// End of the support (`0` for the empty function).
    pub fn length(&self) -> f64 {
        self.pieces.last().map_or(0.0, |p| p.end)
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t < 0.0 {
            return f64::NAN;
        }
        let k = self.pieces.partition_point(|p| p.end <= t);
        match self.pieces.get(k) {
            Some(p) => p.eval(t),
            None => 0.0,
        }
    }

    /// True when every piece is a single constant.
    pub fn is_step(&self) -> bool {
        self.pieces
            .iter()
            .all(|p| p.terms.iter().all(|t| t.exp == 0.0 || t.coef == 0.0) && p.terms.len() <= 1)
    }

    /// `u^k` for functions whose pieces are single terms.
    pub fn powf(&self, k: f64) -> Result<Self> {
        let mut pieces = Vec::with_capacity(self.pieces.len());
        for p in &self.pieces {
            let t = p
                .single()
                .ok_or_else(|| Error::invalid("powf needs single-term pieces"))?;
            pieces.push(Piece {
                start: p.start,
                end: p.end,
                terms: vec![Term::new(t.coef.abs().powf(k), t.exp * k)],
            });
        }
        PiecewisePower::new(pieces)
    }

    /// `c · u`.
    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        for p in &mut out.pieces {
            for t in &mut p.terms {
                t.coef *= c;
            }
        }
        out
    }

    /// `∫_0^∞ u`.
    pub fn integral(&self) -> f64 {
        let mut parts: Vec<f64> = self
            .pieces
            .iter()
            .map(|p| {
                p.terms
                    .iter()
                    .map(|t| power_integral(t.coef, t.exp, p.start, p.end))
                    .sum()
            })
            .collect();
        pairwise_sum(&mut parts)
    }

    /// `∫_0^∞ t^{w-1} u(t)^γ dt`, closed form on single-term pieces.
    pub fn weighted_power_integral(&self, w: f64, gamma: f64) -> f64 {
        let mut parts = Vec::with_capacity(self.pieces.len());
        for p in &self.pieces {
            if p.is_zero() {
                continue;
            }
            let v = match p.single() {
                Some(t) => power_integral(t.coef.powf(gamma), w - 1.0 + gamma * t.exp, p.start, p.end),
                None => {
                    let f = |t: f64| t.powf(w - 1.0) * p.eval(t).max(0.0).powf(gamma);
                    piece_quadrature(f, p.start, p.end).value
                }
            };
            parts.push(v);
        }
        pairwise_sum(&mut parts)
    }
}

/// `∫_a^b c t^e dt` for `0 ≤ a < b ≤ ∞`, `+∞` (with the sign of `c`) when
/// divergent.
pub fn power_integral(c: f64, e: f64, a: f64, b: f64) -> f64 {
    if c == 0.0 || a == b {
        return 0.0;
    }
    let k = e + 1.0;
    if k == 0.0 {
        if a == 0.0 || b.is_infinite() {
            return c.signum() * f64::INFINITY;
        }
        return c * (b / a).ln();
    }
    if (k > 0.0 && b.is_infinite()) || (k < 0.0 && a == 0.0) {
        return c.signum() * f64::INFINITY;
    }
    c * (b.powf(k) - a.powf(k)) / k
}

fn piece_quadrature<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Quadrature {
    if b.is_infinite() {
        integrate_to_infinity(f, a, QUAD_TOL)
    } else {
        integrate(f, a, b, QUAD_TOL)
    }
}

/// A nonincreasing, nonnegative [`PiecewisePower`]; the type of `u*`, `u**`
/// and radial profiles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneProfile {
    inner: PiecewisePower,
}

impl std::ops::Deref for MonotoneProfile {
    type Target = PiecewisePower;
    fn deref(&self) -> &PiecewisePower {
        &self.inner
    }
}

impl MonotoneProfile {
    /// Checks monotonicity at piece ends and on a few interior points.
    pub fn new(inner: PiecewisePower) -> Result<Self> {
        let mut prev = f64::INFINITY;
        for (k, p) in inner.pieces.iter().enumerate() {
            let hi = if p.end.is_infinite() { p.start.max(1.0) * 1e6 } else { p.end };
            let samples = 9;
            for j in 0..=samples {
                let t = if j == 0 {
                    p.start
                } else {
                    p.start + (hi - p.start) * j as f64 / samples as f64
                };
                if t == 0.0 {
                    continue;
                }
                // left limit at the right end of a bounded piece
                let t = if j == samples && !p.end.is_infinite() {
                    t - 1e-12 * (t - p.start)
                } else {
                    t
                };
                let v = p.eval(t);
                if v.is_nan() || v < -1e-12 * prev.abs().min(1.0) {
                    return Err(Error::invalid(format!("profile negative or NaN on piece {k}")));
                }
                if v > prev * (1.0 + 1e-10) + 1e-300 {
                    return Err(Error::invalid(format!("profile increases on piece {k}")));
                }
                prev = v;
            }
        }
        Ok(MonotoneProfile { inner })
    }

    pub fn steps(breaks: &[f64], values: &[f64]) -> Result<Self> {
        MonotoneProfile::new(PiecewisePower::steps(breaks, values)?)
    }

    pub fn piecewise_linear(s: &[f64], v: &[f64]) -> Result<Self> {
        MonotoneProfile::new(PiecewisePower::piecewise_linear(s, v)?)
    }

    pub fn power(c: f64, e: f64, end: f64) -> Result<Self> {
        if c < 0.0 || e > 0.0 {
            return Err(Error::invalid("power profile needs c ≥ 0 and e ≤ 0"));
        }
        MonotoneProfile::new(PiecewisePower::power(c, e, end)?)
    }

    pub fn as_piecewise(&self) -> &PiecewisePower {
        &self.inner
    }

    pub fn powf(&self, k: f64) -> Result<Self> {
        if k < 0.0 {
            return Err(Error::invalid("negative powers reverse monotonicity"));
        }
        Ok(MonotoneProfile {
            inner: self.inner.powf(k)?,
        })
    }

    /// `|{s : u(s) > t}|`.
    pub fn distribution(&self, t: f64) -> f64 {
        let mut measure = 0.0;
        for p in &self.inner.pieces {
            if p.eval(p.start.max(f64::MIN_POSITIVE)) <= t {
                break;
            }
            if p.single().is_some_and(|term| term.exp == 0.0) {
                measure = p.end;
                continue;
            }
            let end_val = if p.end.is_infinite() {
                0.0
            } else {
                p.eval(p.end - 1e-15 * p.end)
            };
            if end_val > t {
                measure = p.end;
                continue;
            }
            // crossing inside the piece
            let (mut lo, mut hi) = (p.start, if p.end.is_infinite() { p.start.max(1.0) } else { p.end });
            while p.eval(hi) > t {
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if p.eval(mid) > t {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return hi;
        }
        measure
    }

    /// Writes `s,value` rows; row `(s_k, v_k)` holds on `[s_k, s_{k+1})` and
    /// the last row is `(length, 0)`. Only step profiles have this form.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        if !self.is_step() {
            return Err(Error::invalid("only step profiles can be written as CSV"));
        }
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["s", "value"]).map_err(csv_err)?;
        for p in &self.inner.pieces {
            wr.write_record([format_f64(p.start), format_f64(p.eval(p.start))])
                .map_err(csv_err)?;
        }
        wr.write_record([format_f64(self.length()), "0".to_string()])
            .map_err(csv_err)?;
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let header = rd.headers().map_err(csv_err)?.clone();
        if header.len() != 2 || &header[0] != "s" || &header[1] != "value" {
            return Err(Error::parse("profile CSV header must be 's,value'"));
        }
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec.map_err(csv_err)?;
            if rec.len() != 2 {
                return Err(Error::parse("profile CSV rows need two columns"));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|_| Error::parse(format!("not a number: {s:?}")))
            };
            rows.push((parse(&rec[0])?, parse(&rec[1])?));
        }
        if rows.len() < 2 {
            return Err(Error::parse("profile CSV needs at least two rows"));
        }
        if rows[0].0 != 0.0 {
            return Err(Error::parse("profile CSV must start at s = 0"));
        }
        let breaks: Vec<f64> = rows[1..].iter().map(|r| r.0).collect();
        let values: Vec<f64> = rows[..rows.len() - 1].iter().map(|r| r.1).collect();
        if breaks.iter().any(|b| !b.is_finite()) {
            return Err(Error::parse("profile breakpoints must be finite"));
        }
        MonotoneProfile::steps(&breaks, &values).map_err(|e| Error::parse(e.to_string()))
    }
}

/// Lorentz index `(m, σ)` with `1 < m < ∞`, `1 ≤ σ ≤ ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzIndex {
    pub m: f64,
    #[serde(with = "extended")]
    pub sigma: f64,
}

impl LorentzIndex {
    pub fn new(m: f64, sigma: f64) -> Result<Self> {
        if !(m > 1.0 && m.is_finite()) {
            return Err(Error::invalid(format!("Lorentz exponent m = {m} must lie in (1, inf)")));
        }
        if !(sigma >= 1.0) {
            return Err(Error::invalid(format!("Lorentz exponent sigma = {sigma} must be ≥ 1")));
        }
        Ok(LorentzIndex { m, sigma })
    }
}

// ---------------------------------------------------------------------------
// Operations

/// `μ_u(t) = |{x ∈ Ω : |u(x)| > t}|`.
pub fn distribution_function(field: &ScalarField, t: f64) -> f64 {
    let count = field.masked_values().filter(|v| v.abs() > t).count();
    count as f64 * field.cell_measure()
}

/// Exact step rearrangement of `|u|` on `[0, |Ω|]`.
pub fn decreasing_rearrangement(field: &ScalarField) -> MonotoneProfile {
    let mut vals: Vec<f64> = field.masked_values().map(f64::abs).collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    let cell = field.cell_measure();
    let mut breaks = Vec::new();
    let mut values = Vec::new();
    let mut i = 0;
    while i < vals.len() {
        let v = vals[i];
        let mut j = i;
        while j < vals.len() && vals[j] == v {
            j += 1;
        }
        breaks.push(j as f64 * cell);
        values.push(v);
        i = j;
    }
    let pieces = PiecewisePower::steps(&breaks, &values).expect("sorted finite steps");
    MonotoneProfile { inner: pieces }
}

/// `u⋆(x) = u*(κ_N H°(x)^N)` on a grid of the input spacing covering the
/// Wulff ball `W_R`, `R = (|Ω|/κ_N)^{1/N}`.
pub fn convex_symmetrize(field: &ScalarField, norm: &NormSpec) -> Result<ScalarField> {
    let n = field.ndim();
    if norm.dim() != n {
        return Err(Error::invalid(format!(
            "norm dimension {} differs from field dimension {n}",
            norm.dim()
        )));
    }
    let kappa = norm.kappa()?;
    let measure = field.domain_measure();
    let radius = (measure / kappa).powf(1.0 / n as f64);
    let ustar = decreasing_rearrangement(field);
    let half = norm.wulff_half_widths();
    let mut dims = Vec::with_capacity(n);
    let mut origin = Vec::with_capacity(n);
    for (&h, &w) in field.spacing().iter().zip(&half) {
        let cells = (2.0 * radius * w / h).ceil() as usize + 2;
        dims.push(cells);
        origin.push(-0.5 * cells as f64 * h);
    }
    ScalarField::from_fn(dims, field.spacing().to_vec(), origin, |x| {
        let hp = norm.polar_value(x);
        (hp < radius).then(|| ustar.eval(kappa * hp.powi(n as i32)))
    })
}

/// `u**(t) = t^{-1} ∫_0^t u*`, exact on every piece.
///
/// On a piece `[s_k, s_{k+1})` with `u* = Σ c t^e` the result is
/// `Σ c/(e+1) t^e + (A_k − Σ c s_k^{e+1}/(e+1)) / t`, `A_k = ∫_0^{s_k} u*`;
/// past the support it is `A/t`.
pub fn maximal_profile(u_star: &MonotoneProfile) -> Result<MonotoneProfile> {
    let mut pieces = Vec::with_capacity(u_star.pieces.len() + 1);
    let mut acc = 0.0;
    for p in &u_star.pieces {
        let mut terms = Vec::with_capacity(p.terms.len() + 1);
        let mut inv = acc;
        for t in &p.terms {
            if t.coef == 0.0 {
                continue;
            }
            if t.exp <= -1.0 {
                if p.start == 0.0 {
                    return Err(Error::domain("profile is not integrable at 0"));
                }
                if t.exp == -1.0 {
                    return Err(Error::invalid("log terms are not representable"));
                }
            }
            let k = t.exp + 1.0;
            terms.push(Term::new(t.coef / k, t.exp));
            inv -= t.coef * p.start.powf(k) / k;
        }
        if p.start > 0.0 && inv != 0.0 {
            terms.push(Term::new(inv, -1.0));
        }
        acc += p
            .terms
            .iter()
            .map(|t| power_integral(t.coef, t.exp, p.start, p.end))
            .sum::<f64>();
        pieces.push(Piece {
            start: p.start,
            end: p.end,
            terms,
        });
    }
    let len = u_star.length();
    if len.is_finite() && len > 0.0 && acc > 0.0 {
        pieces.push(Piece {
            start: len,
            end: f64::INFINITY,
            terms: vec![Term::new(acc, -1.0)],
        });
    }
    Ok(MonotoneProfile {
        inner: PiecewisePower::new(pieces)?,
    })
}

/// `‖u‖_{m,σ} = (∫_0^∞ [t^{1/m} u*(t)]^σ dt/t)^{1/σ}`, or
/// `sup_t t^{1/m} u*(t)` for `σ = ∞`. Divergence gives `+∞`.
pub fn lorentz_quasinorm(u_star: &MonotoneProfile, idx: LorentzIndex) -> f64 {
    let LorentzIndex { m, sigma } = idx;
    if sigma.is_infinite() {
        return lorentz_sup(u_star.as_piecewise(), 1.0 / m);
    }
    let total = u_star.weighted_power_integral(sigma / m, sigma);
    total.powf(1.0 / sigma)
}

fn lorentz_sup(u: &PiecewisePower, a: f64) -> f64 {
    let mut best: f64 = 0.0;
    for p in &u.pieces {
        if p.is_zero() {
            continue;
        }
        let g = |t: f64| t.powf(a) * p.eval(t).max(0.0);
        if let Some(term) = p.single() {
            let k = a + term.exp;
            let c = term.coef;
            if c <= 0.0 {
                continue;
            }
            if (k > 0.0 && p.end.is_infinite()) || (k < 0.0 && p.start == 0.0) {
                return f64::INFINITY;
            }
            if k == 0.0 {
                best = best.max(c);
            } else if k > 0.0 {
                best = best.max(c * p.end.powf(k));
            } else {
                best = best.max(c * p.start.powf(k));
            }
            continue;
        }
        // leading growth at infinity decides divergence
        let (lo, hi) = if p.end.is_infinite() {
            let lead = p
                .terms
                .iter()
                .filter(|t| t.coef != 0.0)
                .max_by(|x, y| x.exp.total_cmp(&y.exp))
                .copied()
                .unwrap_or(Term::constant(0.0));
            if lead.coef > 0.0 && a + lead.exp > 0.0 {
                return f64::INFINITY;
            }
            (p.start, p.start.max(1e-300) * 1e12)
        } else {
            (p.start, p.end)
        };
        // log-spaced sweep, then golden refinement around the best sample
        let samples = 128;
        let (la, lb) = (lo.max(1e-300).ln(), hi.ln());
        let mut k_best = 0;
        let mut v_best = f64::NEG_INFINITY;
        for j in 0..=samples {
            let t = (la + (lb - la) * j as f64 / samples as f64).exp().clamp(lo, hi);
            let v = g(t);
            if v > v_best {
                v_best = v;
                k_best = j;
            }
        }
        let step = (lb - la) / samples as f64;
        let c = la + step * k_best as f64;
        let (_, refined) = golden_max(|s| g(s.exp().clamp(lo, hi)), c - step, c + step, 1e-14);
        best = best.max(v_best).max(refined);
    }
    best
}

/// `‖u‖_{(m,σ)} = ‖u**‖_{m,σ}`.
pub fn lorentz_norm_maximal(u_star: &MonotoneProfile, idx: LorentzIndex) -> Result<f64> {
    Ok(lorentz_quasinorm(&maximal_profile(u_star)?, idx))
}

/// Both sides of the two one-dimensional Hardy inequalities:
/// head `∫(t^{-λ}∫_0^t ψ)^γ dt/t ≤ λ^{-γ}∫(t^{1-λ}ψ)^γ dt/t` and
/// tail `∫(t^{λ}∫_t^∞ ψ)^γ dt/t ≤ λ^{-γ}∫(t^{1+λ}ψ)^γ dt/t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardyBounds {
    pub head_lhs: f64,
    pub head_rhs: f64,
    pub tail_lhs: f64,
    pub tail_rhs: f64,
}

impl HardyBounds {
    /// `lhs ≤ rhs·(1 + rel)` for both inequalities (vacuous when `rhs = ∞`).
    pub fn holds(&self, rel: f64) -> bool {
        self.head_lhs <= self.head_rhs * (1.0 + rel) && self.tail_lhs <= self.tail_rhs * (1.0 + rel)
    }
}

pub fn hardy_1d_bounds(psi: &PiecewisePower, lambda: f64, gamma: f64) -> Result<HardyBounds> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid("lambda must be positive"));
    }
    if !(gamma >= 1.0 && gamma.is_finite()) {
        return Err(Error::invalid("gamma must lie in [1, inf)"));
    }
    if psi.pieces.iter().any(|p| p.eval(0.5 * (p.start + p.end.min(p.start + 1.0))) < 0.0) {
        return Err(Error::invalid("psi must be nonnegative"));
    }
    let scale = lambda.powf(-gamma);
    let head_rhs = scale * psi.weighted_power_integral((1.0 - lambda) * gamma, gamma);
    let tail_rhs = scale * psi.weighted_power_integral((1.0 + lambda) * gamma, gamma);

    // running integrals Ψ(t) = ∫_0^t ψ as pieces A_k + Σ c/(e+1)(t^{e+1} − s_k^{e+1})
    let mut head_parts = Vec::new();
    let mut prims = Vec::with_capacity(psi.pieces.len());
    let mut acc = 0.0;
    for p in &psi.pieces {
        let mut terms = Vec::new();
        let mut constant = acc;
        for t in &p.terms {
            if t.coef == 0.0 {
                continue;
            }
            let k = t.exp + 1.0;
            if k <= 0.0 && p.start == 0.0 {
                return Ok(HardyBounds {
                    head_lhs: f64::INFINITY,
                    head_rhs,
                    tail_lhs: f64::INFINITY,
                    tail_rhs,
                });
            }
            if k == 0.0 {
                return Err(Error::invalid("log terms are not representable"));
            }
            terms.push(Term::new(t.coef / k, k));
            constant -= t.coef * p.start.powf(k) / k;
        }
        if constant != 0.0 {
            terms.push(Term::constant(constant));
        }
        acc += p
            .terms
            .iter()
            .map(|t| power_integral(t.coef, t.exp, p.start, p.end))
            .sum::<f64>();
        prims.push(Piece {
            start: p.start,
            end: p.end,
            terms,
        });
    }
    let total = acc;
    let w_head = -lambda * gamma;
    for q in &prims {
        head_parts.push(weighted_piece(q, w_head, gamma));
    }
    let len = psi.length();
    if len.is_finite() && total > 0.0 {
        head_parts.push(power_integral(total.powf(gamma), w_head - 1.0, len, f64::INFINITY));
    }
    let head_lhs = pairwise_sum(&mut head_parts);

    // tail integral ∫_t^∞ ψ = total − Ψ(t)
    let mut tail_parts = Vec::new();
    let w_tail = lambda * gamma;
    if total.is_infinite() {
        return Ok(HardyBounds {
            head_lhs,
            head_rhs,
            tail_lhs: f64::INFINITY,
            tail_rhs,
        });
    }
    for q in &prims {
        let mut terms: Vec<Term> = q.terms.iter().map(|t| Term::new(-t.coef, t.exp)).collect();
        terms.push(Term::constant(total));
        let tail = Piece {
            start: q.start,
            end: q.end,
            terms: merge_terms(terms),
        };
        tail_parts.push(weighted_piece(&tail, w_tail, gamma));
    }
    let tail_lhs = pairwise_sum(&mut tail_parts);
    Ok(HardyBounds {
        head_lhs,
        head_rhs,
        tail_lhs,
        tail_rhs,
    })
}

fn merge_terms(terms: Vec<Term>) -> Vec<Term> {
    let mut out: Vec<Term> = Vec::new();
    for t in terms {
        match out.iter_mut().find(|o| o.exp == t.exp) {
            Some(o) => o.coef += t.coef,
            None => out.push(t),
        }
    }
    out.retain(|t| t.coef != 0.0);
    out
}

/// `∫ t^{w-1} G(t)^γ dt` on one piece; closed form for a single term,
/// otherwise quadrature with `t = b y^{1/w}` on pieces touching 0.
fn weighted_piece(q: &Piece, w: f64, gamma: f64) -> f64 {
    if q.is_zero() {
        return 0.0;
    }
    if let Some(t) = q.single() {
        return power_integral(t.coef.abs().powf(gamma), w - 1.0 + gamma * t.exp, q.start, q.end);
    }
    if q.start == 0.0 && w > 0.0 && q.end.is_finite() {
        let b = q.end;
        let f = |y: f64| q.eval(b * y.powf(1.0 / w)).max(0.0).powf(gamma);
        return b.powf(w) / w * integrate(f, 0.0, 1.0, QUAD_TOL).value;
    }
    let f = |t: f64| t.powf(w - 1.0) * q.eval(t).max(0.0).powf(gamma);
    piece_quadrature(f, q.start, q.end).value
}

/// Both sides of the discrete Pólya–Szegő comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolyaSzego {
    /// `∫_Ω H(Du)^p dx` with one-sided differences.
    pub field_energy: f64,
    /// `∫_0^{|Ω|} (N κ_N^{1/N} s^{1-1/N})^p (−du*/ds)^p ds` from a binned `u*`.
    pub symmetrized_energy: f64,
}

/// `∫ H(Du)^p` on the grid against the one-dimensional energy of `u*`.
///
/// The field gradient uses forward differences, switching to backward
/// differences (or 0) at the mask boundary; first-order accurate. `u*` is
/// averaged over `⌊√n⌋` bins of equal measure before differencing.
pub fn polya_szego(field: &ScalarField, norm: &NormSpec, p: f64) -> Result<PolyaSzego> {
    let n = field.ndim();
    if norm.dim() != n {
        return Err(Error::invalid("norm and field dimensions differ"));
    }
    if !(p > 1.0) {
        return Err(Error::invalid("p must exceed 1"));
    }
    let mut energy = Vec::with_capacity(field.masked_count());
    let cell = field.cell_measure();
    let mut grad = vec![0.0; n];
    for i in 0..field.len() {
        if !field.mask[i] {
            continue;
        }
        let idx = field.unravel(i);
        for k in 0..n {
            let h = field.spacing[k];
            let mut up = idx.clone();
            let mut down = idx.clone();
            let fwd = (idx[k] + 1 < field.dims[k]).then(|| {
                up[k] += 1;
                field.ravel(&up)
            });
            let bwd = (idx[k] > 0).then(|| {
                down[k] -= 1;
                field.ravel(&down)
            });
            grad[k] = match (fwd.filter(|j| field.mask[*j]), bwd.filter(|j| field.mask[*j])) {
                (Some(j), _) => (field.values[j] - field.values[i]) / h,
                (None, Some(j)) => (field.values[i] - field.values[j]) / h,
                (None, None) => 0.0,
            };
        }
        energy.push(norm.value(&grad).powf(p) * cell);
    }
    let field_energy = pairwise_sum(&mut energy);

    let kappa = norm.kappa()?;
    let mut vals: Vec<f64> = field.masked_values().map(f64::abs).collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    let count = vals.len();
    let bins = ((count as f64).sqrt().floor() as usize).max(2).min(count);
    let mut centers = Vec::with_capacity(bins);
    let mut means = Vec::with_capacity(bins);
    for b in 0..bins {
        let lo = b * count / bins;
        let hi = (b + 1) * count / bins;
        if hi == lo {
            continue;
        }
        let mean = vals[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
        centers.push(0.5 * (lo + hi) as f64 * cell);
        means.push(mean);
    }
    let nf = n as f64;
    let mut parts = Vec::with_capacity(centers.len());
    for j in 0..centers.len().saturating_sub(1) {
        let ds = centers[j + 1] - centers[j];
        let slope = (means[j] - means[j + 1]) / ds;
        let s = 0.5 * (centers[j] + centers[j + 1]);
        let weight = nf * kappa.powf(1.0 / nf) * s.powf(1.0 - 1.0 / nf);
        parts.push((weight * slope).powf(p) * ds);
    }
    Ok(PolyaSzego {
        field_energy,
        symmetrized_energy: pairwise_sum(&mut parts),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_cells() -> ScalarField {
        ScalarField::new(vec![3], vec![1.0], vec![0.0], vec![3.0, 1.0, 2.0], vec![true; 3]).unwrap()
    }

    #[test]
    fn distribution_examples() {
        let f = three_cells();
        assert_eq!(distribution_function(&f, 1.5), 2.0);
        let zero = f.map(|_| 0.0).unwrap();
        assert_eq!(distribution_function(&zero, 0.0), 0.0);
    }

    #[test]
    fn rearrangement_of_three_cells() {
        let u = decreasing_rearrangement(&three_cells());
        assert_eq!(u.eval(0.5), 3.0);
        assert_eq!(u.eval(1.0), 2.0);
        assert_eq!(u.eval(2.5), 1.0);
        assert_eq!(u.eval(3.0), 0.0);
        assert_eq!(u.length(), 3.0);
    }

    #[test]
    fn characteristic_function_rearranges_to_interval() {
        let f = ScalarField::new(
            vec![2, 3],
            vec![0.5, 0.5],
            vec![0.0, 0.0],
            vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0],
            vec![true; 6],
        )
        .unwrap();
        let u = decreasing_rearrangement(&f);
        assert_eq!(u.distribution(0.5), 0.75);
        assert_eq!(u.eval(0.7), 1.0);
        assert_eq!(u.eval(0.8), 0.0);
    }

    #[test]
    fn maximal_examples() {
        let chi = MonotoneProfile::steps(&[1.0], &[1.0]).unwrap();
        let m = maximal_profile(&chi).unwrap();
        assert_eq!(m.eval(2.0), 0.5);
        let c = MonotoneProfile::steps(&[5.0], &[2.5]).unwrap();
        let m = maximal_profile(&c).unwrap();
        assert!((m.eval(3.3) - 2.5).abs() < 1e-15);
        let s = MonotoneProfile::steps(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap();
        let m = maximal_profile(&s).unwrap();
        assert!((m.eval(3.0) - 2.0).abs() < 1e-15);
        assert!((m.eval(2.999_999) - (6.0 - 1e-6) / 2.999_999).abs() < 1e-12);
    }

    #[test]
    fn lorentz_examples() {
        let chi = MonotoneProfile::steps(&[4.0], &[1.0]).unwrap();
        let v = lorentz_quasinorm(&chi, LorentzIndex::new(2.0, 1.0).unwrap());
        assert!((v - 4.0).abs() < 1e-14);
        let v = lorentz_quasinorm(&chi, LorentzIndex::new(3.0, 3.0).unwrap());
        assert!((v - 4f64.powf(1.0 / 3.0)).abs() < 1e-14);
        let p = MonotoneProfile::power(1.0, -1.0 / 3.0, 1.0).unwrap();
        let v = lorentz_quasinorm(&p, LorentzIndex::new(3.0, f64::INFINITY).unwrap());
        assert!((v - 1.0).abs() < 1e-14);
        // divergent: t^{-1/3} is not in L(3, 2)
        let v = lorentz_quasinorm(&p, LorentzIndex::new(3.0, 2.0).unwrap());
        assert!(v.is_infinite());
    }

    #[test]
    fn lorentz_maximal_examples() {
        let one = MonotoneProfile::steps(&[1.0], &[1.0]).unwrap();
        let idx = LorentzIndex::new(2.0, 2.0).unwrap();
        // ∫_0^∞ min(1, 1/t)^2 dt = 2
        let v = lorentz_norm_maximal(&one, idx).unwrap();
        assert!((v - 2f64.sqrt()).abs() < 1e-13);
        let idx1 = LorentzIndex::new(2.0, 1.0).unwrap();
        assert!(lorentz_norm_maximal(&one, idx1).unwrap() >= lorentz_quasinorm(&one, idx1));
        let sup = lorentz_norm_maximal(&one, LorentzIndex::new(2.0, f64::INFINITY).unwrap()).unwrap();
        assert!((sup - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hardy_examples() {
        let chi = PiecewisePower::steps(&[1.0], &[1.0]).unwrap();
        let b = hardy_1d_bounds(&chi, 0.5, 2.0).unwrap();
        assert!((b.head_lhs - 2.0).abs() < 1e-14);
        assert!((b.head_rhs - 4.0).abs() < 1e-14);
        let b = hardy_1d_bounds(&chi, 1.0, 1.0).unwrap();
        assert!((b.tail_lhs - 0.5).abs() < 1e-14);
        assert!((b.tail_rhs - 0.5).abs() < 1e-14);
        let zero = PiecewisePower::steps(&[1.0], &[0.0]).unwrap();
        let b = hardy_1d_bounds(&zero, 0.7, 1.5).unwrap();
        assert_eq!((b.head_lhs, b.head_rhs, b.tail_lhs, b.tail_rhs), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn hardy_tail_with_singular_weight() {
        // ψ = χ_(0,1), λ = 1/4, γ = 2: ∫_0^1 t^{-1/2}(1−t)^2 dt = 16/15
        let chi = PiecewisePower::steps(&[1.0], &[1.0]).unwrap();
        let b = hardy_1d_bounds(&chi, 0.25, 2.0).unwrap();
        assert!((b.tail_lhs - 16.0 / 15.0).abs() < 1e-12, "{}", b.tail_lhs);
        assert!((b.tail_rhs - 16.0 * 1.0 / 2.5).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let f = three_cells();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,value\n0.5,3\n"));
        let g = ScalarField::read_csv(buf.as_slice()).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn binary_round_trip_and_guards() {
        let f = ScalarField::from_fn(vec![3, 5], vec![0.1, 0.2], vec![-1.0, 2.0], |x| {
            (x[0] + x[1] > 1.2).then(|| x[0] * x[1])
        })
        .unwrap();
        let bytes = f.to_bytes();
        assert_eq!(ScalarField::from_bytes(&bytes).unwrap(), f);
        assert!(ScalarField::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut huge = bytes.clone();
        huge[8..16].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(ScalarField::from_bytes(&huge).is_err());
        assert!(ScalarField::from_bytes(b"WHSX").is_err());
    }

    #[test]
    fn profile_csv_round_trip() {
        let u = decreasing_rearrangement(&three_cells());
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "s,value\n0,3\n1,2\n2,1\n3,0\n");
        assert_eq!(MonotoneProfile::read_csv(buf.as_slice()).unwrap(), u);
        assert!(MonotoneProfile::read_csv("s,value\n0,1\n1,2\n2,0\n".as_bytes()).is_err());
    }

    #[test]
    fn symmetrization_of_a_characteristic_function() {
        let h = 0.02;
        let n = 100;
        let f = ScalarField::from_fn(vec![n, n], vec![h, h], vec![0.0, 0.0], |x| {
            Some(if x[0] < 1.0 && x[1] < 0.5 { 1.0 } else { 0.0 })
        })
        .unwrap();
        let l1 = NormSpec::power(1.0, 2).unwrap();
        let s = convex_symmetrize(&f, &l1).unwrap();
        // W_R is the square of area |Ω| = 4; the ones fill a square of area 1/2
        assert!((s.domain_measure() - 4.0).abs() < 0.1);
        let ones = s.masked_values().filter(|v| *v == 1.0).count() as f64 * s.cell_measure();
        assert!((ones - 0.5).abs() < 0.02);
    }
}
