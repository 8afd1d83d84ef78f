//! Piecewise continuous strictly monotone functions `T`.
//!
//! Piece `k` (0-based) owns the half-open interval `(t_k, t_{k+1}]`; the left
//! endpoint `t_0` belongs to piece 0.

use std::borrow::Cow;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user-supplied monotone piece. Its inverse is found by bisection.
#[derive(Clone)]
pub struct GenericPiece {
    f: RealFn,
    increasing: bool,
}

impl GenericPiece {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static, increasing: bool) -> Self {
        Self {
            f: Arc::new(f),
            increasing,
        }
    }
}

impl fmt::Debug for GenericPiece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GenericPiece")
            .field("increasing", &self.increasing)
            .finish_non_exhaustive()
    }
}

/// Closed-form piece shapes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Piece {
    /// `slope * x + intercept`
    Linear { slope: f64, intercept: f64 },
    /// `scale * |x - center| + offset`
    Abs { center: f64, scale: f64, offset: f64 },
    /// `exp(scale * (x - center)^2)`
    ExpQuad { scale: f64, center: f64 },
    /// `scale / x`
    Reciprocal { scale: f64 },
    /// `c + d * sqrt(a * x + b)`
    Sqrt { a: f64, b: f64, c: f64, d: f64 },
    /// `x^2 - n`
    FracSquare { n: f64 },
    #[serde(skip)]
    Generic(GenericPiece),
}

impl Piece {
    pub fn linear(slope: f64, intercept: f64) -> Self {
        Piece::Linear { slope, intercept }
    }

    pub fn generic(f: impl Fn(f64) -> f64 + Send + Sync + 'static, increasing: bool) -> Self {
        Piece::Generic(GenericPiece::new(f, increasing))
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Piece::Linear { slope, intercept } => {
                if x.is_infinite() {
                    slope * x
                } else {
                    slope * x + intercept
                }
            }
            Piece::Abs { center, scale, offset } => scale * (x - center).abs() + offset,
            Piece::ExpQuad { scale, center } => (scale * (x - center) * (x - center)).exp(),
            Piece::Reciprocal { scale } => scale / x,
            Piece::Sqrt { a, b, c, d } => c + d * (a * x + b).max(0.0).sqrt(),
            Piece::FracSquare { n } => x * x - n,
            Piece::Generic(g) => (g.f)(x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Piece::Linear { slope, .. } => *slope,
            Piece::Abs { center, scale, .. } => {
                if x >= *center {
                    *scale
                } else {
                    -scale
                }
            }
            Piece::ExpQuad { scale, center } => 2.0 * scale * (x - center) * self.value(x),
            Piece::Reciprocal { scale } => -scale / (x * x),
            Piece::Sqrt { a, b, d, .. } => d * a / (2.0 * (a * x + b).sqrt()),
            Piece::FracSquare { .. } => 2.0 * x,
            Piece::Generic(g) => {
                let h = 1e-6 * x.abs().max(1.0);
                ((g.f)(x + h) - (g.f)(x - h)) / (2.0 * h)
            }
        }
    }

    /// Direction on `(lo, hi)`; `None` when the form is constant or turns
    /// inside the interval.
    fn increasing_on(&self, lo: f64, hi: f64) -> Option<bool> {
        let sign = |v: f64| {
            if v > 0.0 {
                Some(true)
            } else if v < 0.0 {
                Some(false)
            } else {
                None
            }
        };
        match self {
            Piece::Linear { slope, .. } => sign(*slope),
            Piece::Abs { center, scale, .. } => {
                if lo >= *center {
                    sign(*scale)
                } else if hi <= *center {
                    sign(-scale)
                } else {
                    None
                }
            }
            Piece::ExpQuad { scale, center } => {
                if lo >= *center {
                    sign(*scale)
                } else if hi <= *center {
                    sign(-scale)
                } else {
                    None
                }
            }
            Piece::Reciprocal { scale } => {
                if lo >= 0.0 || hi <= 0.0 {
                    sign(-scale)
                } else {
                    None
                }
            }
            Piece::Sqrt { a, d, .. } => sign(a * d),
            Piece::FracSquare { .. } => {
                if lo >= 0.0 {
                    Some(true)
                } else if hi <= 0.0 {
                    Some(false)
                } else {
                    None
                }
            }
            Piece::Generic(g) => Some(g.increasing),
        }
    }

    /// Solution of `value(x) = y` on `[lo, hi]`, clamped to the interval.
    fn inverse(&self, y: f64, lo: f64, hi: f64, increasing: bool) -> f64 {
        let x = match self {
            Piece::Linear { slope, intercept } => (y - intercept) / slope,
            Piece::Abs { center, scale, offset } => {
                let r = (y - offset) / scale;
                if lo >= *center {
                    center + r
                } else {
                    center - r
                }
            }
            Piece::ExpQuad { scale, center } => {
                let r = (y.ln() / scale).max(0.0).sqrt();
                if lo >= *center {
                    center + r
                } else {
                    center - r
                }
            }
            Piece::Reciprocal { scale } => scale / y,
            Piece::Sqrt { a, b, c, d } => {
                let s = (y - c) / d;
                (s * s - b) / a
            }
            Piece::FracSquare { n } => {
                let r = (y + n).max(0.0).sqrt();
                if lo >= 0.0 {
                    r
                } else {
                    -r
                }
            }
            Piece::Generic(g) => bisect(&*g.f, y, lo, hi, increasing),
        };
        x.clamp(lo, hi)
    }
}

fn bisect(f: &dyn Fn(f64) -> f64, y: f64, lo: f64, hi: f64, increasing: bool) -> f64 {
    let (mut a, mut b) = (lo, hi);
    if !a.is_finite() || !b.is_finite() {
        // bracket on a finite window first
        let mut w = 1.0;
        if !a.is_finite() {
            a = b.min(0.0) - w;
            while (f(a) > y) == increasing && w < 1e300 {
                w *= 2.0;
                a = b.min(0.0) - w;
            }
        }
        w = 1.0;
        if !b.is_finite() {
            b = a.max(0.0) + w;
            while (f(b) < y) == increasing && w < 1e300 {
                w *= 2.0;
                b = a.max(0.0) + w;
            }
        }
    }
    let tol = 1e-12 * (b - a).abs().max(1.0);
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        let below = if increasing { f(m) < y } else { f(m) > y };
        if below {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone)]
enum Layout {
    Finite {
        change_points: Vec<f64>,
        pieces: Vec<Piece>,
        increasing: Vec<Option<bool>>,
    },
    /// `x^2 - ceil(x^2) + 1` on `[1, inf)` with change points `sqrt(n)`.
    FracSquare,
}

/// JSON form of a [`PcsmFunction`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PcsmDescriptor {
    Countable {
        countable: String,
    },
    Finite {
        change_points: Vec<f64>,
        pieces: Vec<Piece>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        overrides: Vec<(f64, f64)>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "PcsmDescriptor", into = "PcsmDescriptor")]
pub struct PcsmFunction {
    layout: Layout,
    overrides: Vec<(f64, f64)>,
}

impl TryFrom<PcsmDescriptor> for PcsmFunction {
    type Error = Error;

    fn try_from(d: PcsmDescriptor) -> Result<Self> {
        match d {
            PcsmDescriptor::Countable { countable } if countable == "frac_square" => {
                Ok(Self::frac_square())
            }
            PcsmDescriptor::Countable { countable } => Err(Error::Construction(format!(
                "unknown countable family {countable:?}"
            ))),
            PcsmDescriptor::Finite {
                change_points,
                pieces,
                overrides,
            } => {
                let mut t = Self::new(change_points, pieces)?;
                for (x, y) in overrides {
                    t = t.with_override(x, y);
                }
                Ok(t)
            }
        }
    }
}

impl From<PcsmFunction> for PcsmDescriptor {
    fn from(t: PcsmFunction) -> Self {
        match t.layout {
            Layout::FracSquare => PcsmDescriptor::Countable {
                countable: "frac_square".into(),
            },
            Layout::Finite {
                change_points,
                pieces,
                ..
            } => PcsmDescriptor::Finite {
                change_points,
                pieces,
                overrides: t.overrides,
            },
        }
    }
}

/// Outcome of [`PcsmFunction::validate`]; empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Countable layouts are scanned up to this many pieces.
const VALIDATE_COUNTABLE_PIECES: usize = 64;

impl PcsmFunction {
    pub fn new(change_points: Vec<f64>, pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() || change_points.len() != pieces.len() + 1 {
            return Err(Error::Construction(format!(
                "{} change points for {} pieces",
                change_points.len(),
                pieces.len()
            )));
        }
        if change_points.iter().any(|t| t.is_nan())
            || change_points.windows(2).any(|w| !(w[0] < w[1]))
        {
            return Err(Error::Construction(
                "change points must be strictly increasing".into(),
            ));
        }
        let increasing = pieces
            .iter()
            .zip(change_points.windows(2))
            .map(|(p, w)| p.increasing_on(w[0], w[1]))
            .collect();
        Ok(Self {
            layout: Layout::Finite {
                change_points,
                pieces,
                increasing,
            },
            overrides: vec![],
        })
    }

    /// The countable family `x^2 - ceil(x^2) + 1` on `[1, inf)`.
    pub fn frac_square() -> Self {
        Self {
            layout: Layout::FracSquare,
            overrides: vec![],
        }
    }

    /// Replace the value at a single point (used for atoms of the base).
    pub fn with_override(mut self, x: f64, y: f64) -> Self {
        self.overrides.retain(|(a, _)| *a != x);
        self.overrides.push((x, y));
        self
    }

    pub fn overrides(&self) -> &[(f64, f64)] {
        &self.overrides
    }

    /// `None` for countably many pieces.
    pub fn num_pieces(&self) -> Option<usize> {
        match &self.layout {
            Layout::Finite { pieces, .. } => Some(pieces.len()),
            Layout::FracSquare => None,
        }
    }

    /// `t_i` for `i` in `0..=K`.
    pub fn change_point(&self, i: usize) -> f64 {
        match &self.layout {
            Layout::Finite { change_points, .. } => change_points[i],
            Layout::FracSquare => ((i + 1) as f64).sqrt(),
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        match &self.layout {
            Layout::Finite { change_points, .. } => {
                (change_points[0], change_points[change_points.len() - 1])
            }
            Layout::FracSquare => (1.0, f64::INFINITY),
        }
    }

    pub fn piece(&self, k: usize) -> Cow<'_, Piece> {
        match &self.layout {
            Layout::Finite { pieces, .. } => Cow::Borrowed(&pieces[k]),
            Layout::FracSquare => Cow::Owned(Piece::FracSquare { n: (k + 1) as f64 }),
        }
    }

    pub fn is_increasing(&self, k: usize) -> bool {
        match &self.layout {
            Layout::Finite { increasing, .. } => increasing[k].unwrap_or(true),
            Layout::FracSquare => true,
        }
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        let (lo, hi) = self.domain();
        if x.is_nan() || x < lo || x > hi {
            return Err(Error::Domain {
                value: x,
                domain: format!("[{lo}, {hi}]"),
            });
        }
        Ok(())
    }

    pub fn piece_of(&self, x: f64) -> Result<usize> {
        self.check_domain(x)?;
        Ok(match &self.layout {
            Layout::Finite { change_points, .. } => {
                let below = change_points.partition_point(|&t| t < x);
                below.saturating_sub(1).min(change_points.len() - 2)
            }
            Layout::FracSquare => {
                let x2 = x * x;
                if x2 <= 2.0 {
                    0
                } else {
                    let mut k = (x2.ceil() as usize).saturating_sub(2);
                    while k > 0 && x <= self.change_point(k) {
                        k -= 1;
                    }
                    while x > self.change_point(k + 1) {
                        k += 1;
                    }
                    k
                }
            }
        })
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if let Some((_, y)) = self.overrides.iter().find(|(a, _)| *a == x) {
            return Ok(*y);
        }
        let k = self.piece_of(x)?;
        Ok(self.piece(k).value(x))
    }

    /// Piece formula at `x`, ignoring point overrides.
    pub fn eval_piece(&self, k: usize, x: f64) -> f64 {
        self.piece(k).value(x)
    }

    pub fn piece_derivative(&self, k: usize, x: f64) -> f64 {
        self.piece(k).derivative(x)
    }

    /// Limits of the piece at its left and right endpoint.
    pub fn piece_endpoints(&self, k: usize) -> (f64, f64) {
        let p = self.piece(k);
        (
            p.value(self.change_point(k)),
            p.value(self.change_point(k + 1)),
        )
    }

    /// Closure of the range of piece `k` as `(min, max)`.
    pub fn piece_range(&self, k: usize) -> (f64, f64) {
        let (l, r) = self.piece_endpoints(k);
        (l.min(r), l.max(r))
    }

    /// Inverse of piece `k`, assuming `y` already lies in its range closure.
    pub(crate) fn piece_inverse_unchecked(&self, k: usize, y: f64) -> f64 {
        let (lo, hi) = (self.change_point(k), self.change_point(k + 1));
        self.piece(k).inverse(y, lo, hi, self.is_increasing(k))
    }

    /// The unique `x` in `[t_k, t_{k+1}]` with `T_k(x) = y`.
    pub fn piece_inverse(&self, k: usize, y: f64) -> Result<f64> {
        if let Some(n) = self.num_pieces() {
            if k >= n {
                return Err(Error::Domain {
                    value: k as f64,
                    domain: format!("piece index < {n}"),
                });
            }
        }
        let (lo, hi) = self.piece_range(k);
        let slack = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
        if !(y >= lo - slack && y <= hi + slack) {
            return Err(Error::Range {
                value: y,
                lo,
                hi,
                piece: k,
            });
        }
        Ok(self.piece_inverse_unchecked(k, y))
    }

    /// Sample-based check of strict monotonicity on every piece.
    pub fn validate(&self) -> ValidationReport {
        let mut issues = vec![];
        let n = self.num_pieces().unwrap_or(VALIDATE_COUNTABLE_PIECES);
        for k in 0..n {
            let (lo, hi) = (self.change_point(k), self.change_point(k + 1));
            let declared = match &self.layout {
                Layout::Finite { increasing, .. } => increasing[k],
                Layout::FracSquare => Some(true),
            };
            let Some(inc) = declared else {
                issues.push(format!(
                    "piece {k} on ({lo}, {hi}] has no strict direction (constant or turning)"
                ));
                continue;
            };
            let piece = self.piece(k);
            let xs: Vec<f64> = (1..=257)
                .map(|i| interior_point(lo, hi, i as f64 / 258.0))
                .collect();
            let ys: Vec<f64> = xs.iter().map(|&x| piece.value(x)).collect();
            for (w, x) in ys.windows(2).zip(xs.windows(2)) {
                if w[0] == w[1] {
                    issues.push(format!(
                        "piece {k} has a plateau between x = {} and x = {}",
                        x[0], x[1]
                    ));
                    break;
                }
                if (w[1] > w[0]) != inc || w[0].is_nan() || w[1].is_nan() {
                    issues.push(format!(
                        "piece {k} is not {} at x = {} and x = {}",
                        if inc { "increasing" } else { "decreasing" },
                        x[0],
                        x[1]
                    ));
                    break;
                }
            }
        }
        ValidationReport { issues }
    }
}

/// Point at relative position `s` in `(lo, hi)`, also for infinite ends.
pub(crate) fn interior_point(lo: f64, hi: f64, s: f64) -> f64 {
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => lo + s * (hi - lo),
        (true, false) => lo + s / (1.0 - s),
        (false, true) => hi - (1.0 - s) / s,
        (false, false) => (std::f64::consts::PI * (s - 0.5)).tan(),
    }
}

/// Piecewise linear self-map of `[0, 1]`; piece `k` owns `(b_k, b_{k+1}]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearMap {
    breaks: Vec<f64>,
    slopes: Vec<f64>,
    intercepts: Vec<f64>,
}

impl PiecewiseLinearMap {
    pub fn new(breaks: Vec<f64>, slopes: Vec<f64>, intercepts: Vec<f64>) -> Result<Self> {
        let k = slopes.len();
        if k == 0 || breaks.len() != k + 1 || intercepts.len() != k {
            return Err(Error::Construction("mismatched piecewise-linear arrays".into()));
        }
        if breaks[0] != 0.0 || breaks[k] != 1.0 || breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Construction(
                "breaks must run strictly from 0 to 1".into(),
            ));
        }
        if slopes.iter().any(|s| *s == 0.0 || !s.is_finite()) {
            return Err(Error::Construction("slopes must be finite and nonzero".into()));
        }
        Ok(Self {
            breaks,
            slopes,
            intercepts,
        })
    }

    pub fn identity() -> Self {
        Self::new(vec![0.0, 1.0], vec![1.0], vec![0.0]).expect("valid")
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn intercepts(&self) -> &[f64] {
        &self.intercepts
    }

    pub fn num_pieces(&self) -> usize {
        self.slopes.len()
    }

    pub fn piece_of(&self, u: f64) -> usize {
        let below = self.breaks.partition_point(|&b| b < u);
        below.saturating_sub(1).min(self.slopes.len() - 1)
    }

    pub fn eval(&self, u: f64) -> f64 {
        let k = self.piece_of(u);
        self.slopes[k] * u + self.intercepts[k]
    }

    /// As a pcsm function on `[0, 1]`.
    pub fn to_pcsm(&self) -> PcsmFunction {
        let pieces = self
            .slopes
            .iter()
            .zip(&self.intercepts)
            .map(|(&s, &c)| Piece::linear(s, c))
            .collect();
        PcsmFunction::new(self.breaks.clone(), pieces).expect("valid layout")
    }

    /// `self ∘ inner`, i.e. `u -> self(inner(u))`.
    pub fn compose(&self, inner: &PiecewiseLinearMap) -> Result<PiecewiseLinearMap> {
        let mut cuts: Vec<f64> = inner.breaks.clone();
        for k in 0..inner.num_pieces() {
            let (a, b) = (inner.breaks[k], inner.breaks[k + 1]);
            let (s, c) = (inner.slopes[k], inner.intercepts[k]);
            for &outer_break in &self.breaks[1..self.breaks.len() - 1] {
                let x = (outer_break - c) / s;
                if x > a && x < b {
                    cuts.push(x);
                }
            }
        }
        cuts.retain(|&x| x > 1e-12 && x < 1.0 - 1e-12);
        cuts.push(0.0);
        cuts.push(1.0);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let n = cuts.len();
        cuts[n - 1] = 1.0;
        let mut slopes = vec![];
        let mut intercepts = vec![];
        for w in cuts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let k = inner.piece_of(mid);
            let y = inner.eval(mid);
            let j = self.piece_of(y);
            slopes.push(self.slopes[j] * inner.slopes[k]);
            intercepts.push(self.slopes[j] * inner.intercepts[k] + self.intercepts[j]);
        }
        PiecewiseLinearMap::new(cuts, slopes, intercepts)
    }
}

/// Least `p <= p_max` with `W^p = id` off the breakpoints, or `None`.
///
/// Requires unit absolute slopes and images tiling `[0, 1]`.
pub fn periodicity(w: &PiecewiseLinearMap, p_max: usize) -> Result<Option<usize>> {
    if let Some(s) = w.slopes.iter().find(|s| (s.abs() - 1.0).abs() > 1e-12) {
        return Err(Error::Precondition(format!(
            "a periodic W-transform must be a bijective piecewise linear map with unit slopes; found slope {s}"
        )));
    }
    let mut images: Vec<(f64, f64)> = (0..w.num_pieces())
        .map(|k| {
            let a = w.slopes[k] * w.breaks[k] + w.intercepts[k];
            let b = w.slopes[k] * w.breaks[k + 1] + w.intercepts[k];
            (a.min(b), a.max(b))
        })
        .collect();
    images.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut edge = 0.0;
    for (lo, hi) in &images {
        if (lo - edge).abs() > 1e-12 {
            return Err(Error::Precondition(
                "a periodic W-transform must be bijective; piece images do not tile [0, 1]".into(),
            ));
        }
        edge = *hi;
    }
    if (edge - 1.0).abs() > 1e-12 {
        return Err(Error::Precondition(
            "a periodic W-transform must be bijective; piece images do not cover [0, 1]".into(),
        ));
    }

    const GRID: usize = 10_007;
    let start: Vec<f64> = (0..GRID)
        .map(|i| {
            let mut u = (i as f64 + 0.5) / GRID as f64;
            for &b in &w.breaks {
                if (u - b).abs() < 1e-9 {
                    u = b + 1e-9;
                }
            }
            u
        })
        .collect();
    let mut cur = start.clone();
    for p in 1..=p_max {
        for u in cur.iter_mut() {
            *u = w.eval(*u);
        }
        if cur.iter().zip(&start).all(|(a, b)| (a - b).abs() <= 1e-8) {
            return Ok(Some(p));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn shuffle_eval_and_pieces() {
        let t = fixtures::shuffle_t();
        assert!(t.validate().is_valid());
        assert_eq!(t.num_pieces(), Some(3));
        assert!((t.eval(0.2).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(t.piece_of(1.0 / 3.0).unwrap(), 0);
        assert_eq!(t.piece_of(0.0).unwrap(), 0);
        assert!((t.piece_inverse(0, 0.8).unwrap() - 0.2).abs() < 1e-15);
        assert!(t.eval(1.5).is_err());
        assert!(t.piece_of(-0.1).is_err());
    }

    #[test]
    fn zigzag_layout() {
        let t = fixtures::zigzag_t();
        let report = t.validate();
        assert!(report.is_valid(), "{report:?}");
        assert_eq!(t.num_pieces(), Some(4));
        let dirs: Vec<bool> = (0..4).map(|k| t.is_increasing(k)).collect();
        assert_eq!(dirs, vec![false, true, false, false]);
        assert_eq!(t.eval(0.5).unwrap(), 1.0);
        assert_eq!(t.piece_of(0.7).unwrap(), 3);
        assert!((t.piece_inverse(2, 1.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zigzag_exp_piece_inverse_by_log() {
        let t = fixtures::zigzag_t();
        // increasing exp piece on (1/4, 1/3]
        let x = t.piece_inverse(1, 1.01).unwrap();
        assert!((t.eval(x).unwrap() - 1.01).abs() < 1e-10);
        let closed = 0.25 + (1.01f64.ln() / 3.0).sqrt();
        assert!((x - closed).abs() < 1e-12);
        // decreasing exp piece on (0, 1/4]
        let x = t.piece_inverse(0, 1.1).unwrap();
        assert!(x < 0.25);
        assert!((t.eval(x).unwrap() - 1.1).abs() < 1e-10);
        assert!(t.piece_inverse(1, 1.1).is_err());
    }

    #[test]
    fn constant_rejected() {
        let t = PcsmFunction::new(vec![0.0, 1.0], vec![Piece::linear(0.0, 0.5)]).unwrap();
        assert!(!t.validate().is_valid());
        let g = PcsmFunction::new(vec![0.0, 1.0], vec![Piece::generic(|_| 0.5, true)]).unwrap();
        assert!(g.validate().issues[0].contains("plateau"));
    }

    #[test]
    fn generic_direction_cross_checked() {
        let wrong = PcsmFunction::new(vec![0.0, 1.0], vec![Piece::generic(|x| -x, true)]).unwrap();
        assert!(!wrong.validate().is_valid());
        let right = PcsmFunction::new(vec![0.0, 1.0], vec![Piece::generic(|x| x * x * x, true)]).unwrap();
        assert!(right.validate().is_valid());
        let x = right.piece_inverse(0, 0.125).unwrap();
        assert!((x - 0.5).abs() < 1e-11);
    }

    #[test]
    fn countable_pieces() {
        let t = PcsmFunction::frac_square();
        assert_eq!(t.num_pieces(), None);
        assert_eq!(t.piece_of(1.5).unwrap(), 1); // 1.5^2 = 2.25 in (2, 3]
        assert_eq!(t.piece_of(2f64.sqrt()).unwrap(), 0);
        assert_eq!(t.piece_of(1.0).unwrap(), 0);
        assert_eq!(t.piece_of(10.0).unwrap(), 98); // 100 in (99, 100]
        assert!((t.eval(1.5).unwrap() - 0.25).abs() < 1e-15);
        assert!((t.eval(3f64.sqrt()).unwrap() - 1.0).abs() < 1e-14);
        assert!(t.validate().is_valid());
    }

    #[test]
    fn json_round_trip() {
        let json = r#"{"change_points":[0.0,0.5,1.0],"pieces":[{"form":"linear","slope":-2.0,"intercept":1.0},{"form":"linear","slope":2.0,"intercept":-1.0}]}"#;
        let t: PcsmFunction = serde_json::from_str(json).unwrap();
        assert_eq!(t.num_pieces(), Some(2));
        assert_eq!(serde_json::to_string(&t).unwrap(), json);
        let c: PcsmFunction = serde_json::from_str(r#"{"countable":"frac_square"}"#).unwrap();
        assert_eq!(c.num_pieces(), None);
    }

    #[test]
    fn periodicity_examples() {
        assert_eq!(periodicity(&fixtures::shuffle_map(), 64).unwrap(), Some(4));
        assert_eq!(periodicity(&PiecewiseLinearMap::identity(), 64).unwrap(), Some(1));
        assert_eq!(periodicity(&fixtures::nogueira_map(), 64).unwrap(), None);
        let tent = PiecewiseLinearMap::new(vec![0.0, 0.5, 1.0], vec![2.0, -2.0], vec![0.0, 2.0]).unwrap();
        assert!(matches!(periodicity(&tent, 8), Err(Error::Precondition(_))));
    }

    #[test]
    fn composition_of_shuffles() {
        let s = fixtures::shuffle_map();
        let s2 = s.compose(&s).unwrap();
        let s4 = s2.compose(&s2).unwrap();
        for i in 0..100 {
            let u = (i as f64 + 0.37) / 100.0;
            assert!((s2.eval(u) - s.eval(s.eval(u))).abs() < 1e-14);
            assert!((s4.eval(u) - u).abs() < 1e-12);
        }
        assert!(s2.to_pcsm().validate().is_valid());
    }
}
