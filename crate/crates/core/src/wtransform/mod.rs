//! W-transforms `W(u) = F_{T(X)}(T(F_X^{-1}(u)))` and the maps sharing their
//! piecewise interface.
//!
//! All piece indices are 0-based: piece `k` owns `(delta_k, delta_{k+1}]`.

mod generalised;
mod maps;
mod pssm;
mod transform;

use std::fmt;

use serde::Serialize;

pub use generalised::{GenWTransform, JumpInterval};
pub use maps::{InnTransform, VGenerator, VTransform};
pub use pssm::{BoundaryDerivative, PssmWTransform};
pub use transform::Transform;

use crate::dist::BaseDistribution;
use crate::error::{Error, Result};
use crate::pcsm::PcsmFunction;

/// Values closer than this to a critical value are treated as exceptional.
pub const CRITICAL_TOL: f64 = 1e-12;

/// Offset used when nudging an exceptional value off the critical set.
pub const NUDGE: f64 = 1e-9;

/// A preimage of `v` under one monotone piece.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Preimage {
    pub piece: usize,
    pub u: f64,
    /// `|d/dv W_k^{-1}(v)| = 1 / |W'(u)|`.
    pub weight: f64,
}

/// Sum of `f(k)` over countably many pieces: partial sums at
/// `N = 256, 512, 1024, 2048` extrapolated as a power series in `1/N`.
pub fn countable_sum(f: impl Fn(usize) -> f64) -> f64 {
    const LEVELS: usize = 4;
    const N0: usize = 256;
    let mut table = [[0.0f64; LEVELS]; LEVELS];
    let mut acc = 0.0;
    let mut level = 0;
    for k in 0..N0 << (LEVELS - 1) {
        acc += f(k);
        if k + 1 == N0 << level {
            table[level][0] = acc;
            for j in 1..=level {
                let p = (1u64 << j) as f64;
                table[level][j] = (p * table[level][j - 1] - table[level - 1][j - 1]) / (p - 1.0);
            }
            level += 1;
        }
    }
    table[LEVELS - 1][LEVELS - 1]
}

/// Interface shared by every piecewise strictly monotone, uniformity
/// preserving self-map of `[0, 1]`.
pub trait WMap: Send + Sync + fmt::Debug {
    /// `None` for countably many pieces.
    fn num_pieces(&self) -> Option<usize>;

    /// Change point `delta_i`, `i` in `0..=K`.
    fn delta(&self, i: usize) -> f64;

    fn is_increasing(&self, k: usize) -> bool;

    /// Formula of piece `k`, extended continuously to `[delta_k, delta_{k+1}]`.
    fn eval_piece(&self, k: usize, u: f64) -> f64;

    fn piece_of(&self, u: f64) -> usize {
        match self.num_pieces() {
            Some(n) => {
                let mut lo = 0;
                let mut hi = n - 1;
                while lo < hi {
                    let mid = (lo + hi) / 2;
                    if u > self.delta(mid + 1) {
                        lo = mid + 1;
                    } else {
                        hi = mid;
                    }
                }
                lo
            }
            None => {
                let mut hi = 1;
                while u > self.delta(hi) && hi < 1 << 30 {
                    hi *= 2;
                }
                let mut lo = 0;
                hi -= 1;
                while lo < hi {
                    let mid = (lo + hi) / 2;
                    if u > self.delta(mid + 1) {
                        lo = mid + 1;
                    } else {
                        hi = mid;
                    }
                }
                lo
            }
        }
    }

    /// `W(u)`. The value at 0 is the right limit `W(0+)`.
    fn eval(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        if u == 0.0 {
            return self.eval_piece(0, 0.0);
        }
        if u == 1.0 && self.num_pieces().is_none() {
            return 1.0;
        }
        self.eval_piece(self.piece_of(u), u)
    }

    /// `(W(delta_k+), W(delta_{k+1}))`.
    fn piece_limits(&self, k: usize) -> (f64, f64) {
        (
            self.eval_piece(k, self.delta(k)),
            self.eval_piece(k, self.delta(k + 1)),
        )
    }

    /// `inf{u in D_k : W(u) >= v}` on increasing and `sup{...}` on decreasing
    /// pieces, with `inf ∅ = delta_{k+1}` and `sup ∅ = delta_k`.
    fn piece_inverse(&self, k: usize, v: f64) -> f64 {
        bisect_piece_inverse(self, k, v)
    }

    /// `W_k'(u)`, central difference with `h = 1e-6` kept inside the piece.
    fn piece_derivative(&self, k: usize, u: f64) -> f64 {
        numeric_piece_derivative(self, k, u)
    }

    fn derivative(&self, u: f64) -> f64 {
        self.piece_derivative(self.piece_of(u), u)
    }

    /// `sum_k lambda(S_k(v))`, the Lebesgue measure of `{u : W(u) <= v}`
    /// assembled piece by piece.
    fn partition_measure(&self, v: f64) -> f64 {
        let term = |k: usize| {
            let x = self.piece_inverse(k, v);
            if self.is_increasing(k) {
                x - self.delta(k)
            } else {
                self.delta(k + 1) - x
            }
        };
        match self.num_pieces() {
            Some(n) => (0..n).map(term).sum(),
            None => countable_sum(term),
        }
    }

    /// Values `v` at which some preimage is a point of nondifferentiability.
    fn critical_values(&self) -> Vec<f64> {
        let n = self.num_pieces().unwrap_or(64);
        let mut out = vec![];
        for k in 0..n {
            let (a, b) = self.piece_limits(k);
            out.push(a);
            out.push(b);
        }
        sort_dedup(out)
    }
}

pub(crate) fn sort_dedup(mut v: Vec<f64>) -> Vec<f64> {
    v.retain(|x| x.is_finite());
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    v
}

pub(crate) fn bisect_piece_inverse<W: WMap + ?Sized>(w: &W, k: usize, v: f64) -> f64 {
    let (a, b) = (w.delta(k), w.delta(k + 1));
    let (wa, wb) = w.piece_limits(k);
    if w.is_increasing(k) {
        if v <= wa {
            return a;
        }
        if v > wb {
            return b;
        }
        let (mut lo, mut hi) = (a, b);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if w.eval_piece(k, mid) >= v {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    } else {
        if v <= wb {
            return b;
        }
        if v > wa {
            return a;
        }
        let (mut lo, mut hi) = (a, b);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if w.eval_piece(k, mid) >= v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

pub(crate) fn numeric_piece_derivative<W: WMap + ?Sized>(w: &W, k: usize, u: f64) -> f64 {
    let (a, b) = (w.delta(k), w.delta(k + 1));
    let h = 1e-6f64.min(0.25 * (b - a));
    let lo = (u - h).max(a);
    let hi = (u + h).min(b);
    (w.eval_piece(k, hi) - w.eval_piece(k, lo)) / (hi - lo)
}

fn finite_pieces(w: &dyn WMap) -> Result<usize> {
    w.num_pieces().ok_or_else(|| {
        Error::Unsupported("preimage weights need finitely many pieces".into())
    })
}

/// Preimages of `v` lying strictly inside their pieces (farther than
/// [`CRITICAL_TOL`] from the change points), with weights.
pub fn preimages(w: &dyn WMap, v: f64) -> Result<Vec<Preimage>> {
    let n = finite_pieces(w)?;
    let mut out = vec![];
    for k in 0..n {
        let u = w.piece_inverse(k, v);
        if u > w.delta(k) + CRITICAL_TOL && u < w.delta(k + 1) - CRITICAL_TOL {
            let weight = 1.0 / w.piece_derivative(k, u).abs();
            out.push(Preimage { piece: k, u, weight });
        }
    }
    Ok(out)
}

/// Distance from `v` to the nearest critical value, and that value.
fn nearest_critical(w: &dyn WMap, v: f64) -> Option<(f64, f64)> {
    w.critical_values()
        .into_iter()
        .map(|c| ((c - v).abs(), c))
        .min_by(|a, b| a.0.total_cmp(&b.0))
}

/// Whether `v` lies (within [`CRITICAL_TOL`]) in the exception set.
pub fn is_exceptional(w: &dyn WMap, v: f64) -> bool {
    nearest_critical(w, v).is_some_and(|(d, _)| d <= CRITICAL_TOL)
}

/// Stochastic inverse `W^{-1}(v, u')`: the preimage whose cumulative weight
/// interval contains `u_aux`.
pub fn stochastic_inverse(w: &dyn WMap, v: f64, u_aux: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&v) || !(0.0..=1.0).contains(&u_aux) {
        return Err(Error::Domain {
            value: if (0.0..=1.0).contains(&v) { u_aux } else { v },
            domain: "[0, 1]".into(),
        });
    }
    if let Some((d, c)) = nearest_critical(w, v) {
        if d <= CRITICAL_TOL {
            let up = c + NUDGE;
            let nearest_valid = if up <= 1.0 && !is_exceptional(w, up) {
                up
            } else {
                c - NUDGE
            };
            return Err(Error::NonDifferentiable { v, nearest_valid });
        }
    }
    let mut last = None;
    let mut cum = 0.0;
    for p in preimages(w, v)? {
        cum += p.weight;
        last = Some(p.u);
        if u_aux <= cum {
            return Ok(p.u);
        }
    }
    last.ok_or_else(|| Error::Precondition(format!("no interior preimage of v = {v}")))
}

/// `W'(0+)` (`end = 0`) or `W'(1-)` (`end = 1`) as the Richardson limit of
/// one-sided difference quotients.
pub fn boundary_derivative(w: &dyn WMap, end: u8) -> f64 {
    let (edge, k) = if end == 0 {
        (0.0, 0)
    } else {
        let k = w
            .num_pieces()
            .expect("right boundary needs finitely many pieces")
            - 1;
        (1.0, k)
    };
    let limit = w.eval_piece(k, edge);
    let quotient = |h: f64| {
        if end == 0 {
            (w.eval_piece(k, h) - limit) / h
        } else {
            (limit - w.eval_piece(k, 1.0 - h)) / h
        }
    };
    // Neville table on h_i = 1e-3 / 2^i
    const LEVELS: usize = 8;
    let mut table = [[0.0f64; LEVELS]; LEVELS];
    for i in 0..LEVELS {
        table[i][0] = quotient(1e-3 / (1u64 << i) as f64);
        for j in 1..=i {
            let f = (1u64 << j) as f64;
            table[i][j] = (f * table[i][j - 1] - table[i - 1][j - 1]) / (f - 1.0);
        }
    }
    // pick the diagonal entry whose successor changed least
    let mut best = table[1][1];
    let mut best_change = f64::INFINITY;
    for i in 2..LEVELS {
        let change = (table[i][i] - table[i - 1][i - 1]).abs();
        if change < best_change {
            best_change = change;
            best = table[i][i];
        }
    }
    best
}

/// Generic W-transform built from a continuous base `F_X` and a pcsm `T`.
#[derive(Debug, Clone)]
pub struct WTransform {
    base: BaseDistribution,
    t: PcsmFunction,
    deltas: Vec<f64>,
    critical: Vec<f64>,
    y_range: (f64, f64),
}

impl WTransform {
    pub fn build(base: BaseDistribution, t: PcsmFunction) -> Result<Self> {
        if !base.is_continuous() {
            return Err(Error::Construction(
                "base distribution has atoms; use GenWTransform::build for the generalised W-transform"
                    .into(),
            ));
        }
        let (lo, hi) = base.support();
        let (t0, tk) = t.domain();
        let close = |a: f64, b: f64| a == b || (a - b).abs() <= 1e-12 * a.abs().max(1.0);
        if !close(lo, t0) || !close(hi, tk) {
            return Err(Error::Construction(format!(
                "support [{lo}, {hi}] of F_X does not match the change points [{t0}, {tk}] of T"
            )));
        }
        let report = t.validate();
        if !report.is_valid() {
            return Err(Error::Construction(format!(
                "T is not pcsm: {}",
                report.issues.join("; ")
            )));
        }
        let deltas = match t.num_pieces() {
            Some(n) => {
                let mut d: Vec<f64> = (0..=n).map(|i| base.cdf(t.change_point(i))).collect();
                d[0] = 0.0;
                d[n] = 1.0;
                d
            }
            None => vec![],
        };
        let scan = t.num_pieces().unwrap_or(64);
        let y_range = (0..scan).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), k| {
            let (a, b) = t.piece_range(k);
            (lo.min(a), hi.max(b))
        });
        let mut w = Self {
            base,
            t,
            deltas,
            critical: vec![],
            y_range,
        };
        let mut crit = vec![];
        for k in 0..scan {
            let (a, b) = w.piece_limits(k);
            let (lo, hi) = w.t.piece_range(k);
            crit.extend([a, b, w.transformed_cdf(lo), w.transformed_cdf(hi)]);
        }
        w.critical = sort_dedup(crit);
        Ok(w)
    }

    pub fn base(&self) -> &BaseDistribution {
        &self.base
    }

    pub fn transform(&self) -> &PcsmFunction {
        &self.t
    }

    /// Contribution `P(X in piece k, T(X) <= y)`.
    fn piece_mass_below(&self, k: usize, y: f64) -> f64 {
        let (lo, hi) = self.t.piece_range(k);
        let (a, b) = (self.t.change_point(k), self.t.change_point(k + 1));
        if y < lo {
            return 0.0;
        }
        if y >= hi {
            return self.base.mass(a, b);
        }
        let x = self.t.piece_inverse_unchecked(k, y);
        if self.t.is_increasing(k) {
            self.base.mass(a, x)
        } else {
            self.base.mass(x, b)
        }
    }

    /// Distribution function of `T(X)`.
    pub fn transformed_cdf(&self, y: f64) -> f64 {
        match self.t.num_pieces() {
            Some(n) => (0..n).map(|k| self.piece_mass_below(k, y)).sum::<f64>().min(1.0),
            None => countable_sum(|k| self.piece_mass_below(k, y)).clamp(0.0, 1.0),
        }
    }

    /// `inf{y : F_{T(X)}(y) >= v}` by bisection.
    pub fn transformed_quantile(&self, v: f64) -> f64 {
        let (mut lo, mut hi) = self.y_range;
        if v <= 0.0 {
            return lo;
        }
        if v >= 1.0 || !hi.is_finite() {
            if !hi.is_finite() {
                let mut span = 1.0;
                hi = lo.max(0.0) + span;
                while self.transformed_cdf(hi) < v && span < 1e300 {
                    span *= 2.0;
                    hi = lo.max(0.0) + span;
                }
            }
            if v >= 1.0 {
                return hi;
            }
        }
        if !lo.is_finite() {
            let mut span = 1.0;
            lo = hi.min(0.0) - span;
            while self.transformed_cdf(lo) >= v && span < 1e300 {
                span *= 2.0;
                lo = hi.min(0.0) - span;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.transformed_cdf(mid) >= v {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// `W_k^{-1}` given the level `y = F_{T(X)}^{-1}(v)`.
    fn piece_inverse_at_level(&self, k: usize, y: f64) -> f64 {
        let (lo, hi) = self.t.piece_range(k);
        let inc = self.t.is_increasing(k);
        let (a, b) = (self.delta(k), self.delta(k + 1));
        if y <= lo {
            return if inc { a } else { b };
        }
        if y >= hi {
            return if inc { b } else { a };
        }
        let x = self.t.piece_inverse_unchecked(k, y);
        self.base.cdf(x).clamp(a, b)
    }

    /// Density of `T(X)` at `y` from every piece except `skip` whose closed
    /// range contains `y`; range endpoints count, giving the left-sided
    /// convention at kinks.
    fn transformed_density_terms(&self, y: f64, skip: usize) -> f64 {
        let term = |j: usize| {
            if j == skip {
                return 0.0;
            }
            let (lo, hi) = self.t.piece_range(j);
            let slack = CRITICAL_TOL * lo.abs().max(hi.abs()).max(1.0);
            if y < lo - slack || y > hi + slack {
                return 0.0;
            }
            let x = self.t.piece_inverse_unchecked(j, y);
            let f = self.base.pdf(x).unwrap_or(0.0);
            f / self.t.piece_derivative(j, x).abs()
        };
        match self.t.num_pieces() {
            Some(n) => (0..n).map(term).sum(),
            None => countable_sum(term),
        }
    }

    fn x_in_piece(&self, k: usize, u: f64) -> f64 {
        let x = self.base.quantile(u.clamp(0.0, 1.0)).unwrap_or(f64::NAN);
        x.clamp(self.t.change_point(k), self.t.change_point(k + 1))
    }
}

impl WMap for WTransform {
    fn num_pieces(&self) -> Option<usize> {
        self.t.num_pieces()
    }

    fn delta(&self, i: usize) -> f64 {
        match self.t.num_pieces() {
            Some(_) => self.deltas[i],
            None if i == 0 => 0.0,
            None => self.base.cdf(self.t.change_point(i)),
        }
    }

    fn is_increasing(&self, k: usize) -> bool {
        self.t.is_increasing(k)
    }

    fn eval_piece(&self, k: usize, u: f64) -> f64 {
        let x = self.x_in_piece(k, u);
        let y = self.t.eval_piece(k, x);
        match self.t.num_pieces() {
            Some(n) => {
                // the own piece contributes exactly u - delta_k (or its mirror)
                let own = if self.t.is_increasing(k) {
                    u - self.deltas[k]
                } else {
                    self.deltas[k + 1] - u
                };
                let others: f64 = (0..n)
                    .filter(|&j| j != k)
                    .map(|j| self.piece_mass_below(j, y))
                    .sum();
                (own.max(0.0) + others).clamp(0.0, 1.0)
            }
            None => self.transformed_cdf(y),
        }
    }

    fn piece_inverse(&self, k: usize, v: f64) -> f64 {
        let (wa, wb) = self.piece_limits(k);
        let inc = self.t.is_increasing(k);
        let (a, b) = (self.delta(k), self.delta(k + 1));
        let (low, high) = if inc { (wa, wb) } else { (wb, wa) };
        if v <= low {
            return if inc { a } else { b };
        }
        if v > high {
            return if inc { b } else { a };
        }
        self.piece_inverse_at_level(k, self.transformed_quantile(v))
    }

    fn piece_derivative(&self, k: usize, u: f64) -> f64 {
        let x = self.x_in_piece(k, u);
        let tp = self.t.piece_derivative(k, x);
        let sign = if self.t.is_increasing(k) { 1.0 } else { -1.0 };
        let fx = self.base.pdf(x).unwrap_or(f64::NAN);
        if fx.is_nan() || !tp.is_finite() || tp == 0.0 {
            return numeric_piece_derivative(self, k, u);
        }
        if fx.is_infinite() {
            return sign;
        }
        let y = self.t.eval_piece(k, x);
        let others = self.transformed_density_terms(y, k);
        sign * (1.0 + others * tp.abs() / fx)
    }

    fn partition_measure(&self, v: f64) -> f64 {
        let y = self.transformed_quantile(v);
        let term = |k: usize| {
            let x = self.piece_inverse_at_level(k, y);
            if self.t.is_increasing(k) {
                x - self.delta(k)
            } else {
                self.delta(k + 1) - x
            }
        };
        match self.t.num_pieces() {
            Some(n) => (0..n).map(term).sum(),
            None => countable_sum(term),
        }
    }

    fn critical_values(&self) -> Vec<f64> {
        self.critical.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::DistKind;
    use crate::fixtures;
    use crate::pcsm::Piece;

    #[test]
    fn v_transform_from_abs() {
        let base = BaseDistribution::new(DistKind::Uniform { a: -1.0, b: 1.0 }).unwrap();
        let t = PcsmFunction::new(
            vec![-1.0, 0.0, 1.0],
            vec![Piece::linear(-1.0, 0.0), Piece::linear(1.0, 0.0)],
        )
        .unwrap();
        let w = WTransform::build(base.clone(), t).unwrap();
        for i in 0..=100 {
            let u = i as f64 / 100.0;
            assert!((w.eval(u) - (2.0 * u - 1.0).abs()).abs() < 1e-12, "u={u}");
        }
        // folding identity F(q) - F(-q)
        for q in [0.1, 0.5, 0.9] {
            let expect = base.cdf(q) - base.cdf(-q);
            assert!((w.transformed_cdf(q) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn t_equal_to_cdf_gives_identity() {
        let base = BaseDistribution::new(DistKind::KumaraswamyLike { a: 0.5 }).unwrap();
        let b2 = base.clone();
        let t = PcsmFunction::new(vec![0.0, 1.0], vec![Piece::generic(move |x| b2.cdf(x), true)]).unwrap();
        let w = WTransform::build(base, t).unwrap();
        for i in 1..1000 {
            let u = i as f64 / 1000.0;
            assert!((w.eval(u) - u).abs() <= 1e-12);
        }
    }

    #[test]
    fn shuffle_reproduces_t() {
        let w = fixtures::shuffle();
        let t = fixtures::shuffle_t();
        for i in 0..=300 {
            let u = i as f64 / 300.0;
            assert!((w.eval(u) - t.eval(u).unwrap()).abs() < 1e-14, "u={u}");
        }
    }

    #[test]
    fn increasing_bijection_median() {
        let base = BaseDistribution::new(DistKind::PowerLaw { exponent: 2.0 }).unwrap();
        let t = PcsmFunction::new(vec![0.0, 1.0], vec![Piece::linear(3.0, 1.0)]).unwrap();
        let w = WTransform::build(base.clone(), t).unwrap();
        let median = base.quantile(0.5).unwrap();
        assert!((w.transformed_cdf(3.0 * median + 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn piecewise_increasing_example() {
        let w = fixtures::piecewise_increasing(0.3);
        let half = 2.0 * 4f64.powf(-0.7);
        assert!((w.eval(0.5) - half).abs() < 1e-12);
        assert!((half - 0.7579).abs() < 1e-4);
        let branch = |u: f64| {
            let c = 4f64.powf(-0.7);
            let e = 0.25f64.powf(0.2);
            if u <= 1.0 - e || u > e {
                u
            } else if u <= 0.5 {
                u + c / (1.0 - u) - 0.5
            } else {
                u - c / u + 0.5
            }
        };
        for i in 0..=1000 {
            let u = i as f64 / 1000.0;
            assert!((w.eval(u) - branch(u)).abs() < 1e-12, "u={u}");
        }
        assert_eq!(w.delta(1), 0.5);
    }

    #[test]
    fn piecewise_increasing_other_alpha() {
        let neg = fixtures::piecewise_increasing(-0.2);
        let big = fixtures::piecewise_increasing(0.7);
        for i in 0..=100 {
            let u = i as f64 / 100.0;
            assert!((neg.eval(u) - u).abs() < 1e-12);
            let c = 4f64.powf(-0.3);
            let expect = if u <= 0.5 {
                if -(1.0 - u).ln() / 4f64.ln() < 0.3 {
                    u + c / (1.0 - u) - 0.5
                } else {
                    u + 0.5
                }
            } else if u >= c {
                u + 0.5 - c / u
            } else {
                u - 0.5
            };
            if u > 0.0 {
                assert!((big.eval(u) - expect).abs() < 1e-12, "u={u}");
            }
        }
    }

    #[test]
    fn zigzag_inverses_at_level() {
        // oracle: bisection for the T-level y with P(T(X) <= y) = 0.6, then
        // x = 1/4 - sqrt(ln(y)/3), 1/3, 3/2 - y, 1/y
        let w = fixtures::zigzag();
        let expect = [0.077_914_446_223_050_96, 1.0 / 3.0, 0.407_093_880_009_896_44, 0.914_991_673_767_052_5];
        for (k, e) in expect.iter().enumerate() {
            let x = w.piece_inverse(k, 0.6);
            assert!((x - e).abs() < 1e-9, "piece {k}: {x}");
        }
        assert!((w.partition_measure(0.6) - 0.6).abs() < 1e-9);
    }

    #[test]
    fn zigzag_published_anchors_share_a_lower_level() {
        // the three published anchors sit on one T-level whose W-value is
        // about 0.2732, not 0.6
        let w = fixtures::zigzag();
        for a in [0.20328, 0.29672, 0.49343] {
            assert!((w.eval(a) - 0.273_203).abs() < 5e-5, "{}", w.eval(a));
        }
    }

    #[test]
    fn pathology_at_kink() {
        let w = fixtures::piecewise_increasing(0.3);
        let v = 4f64.powf(-0.2);
        assert!(is_exceptional(&w, v));
        let err = stochastic_inverse(&w, v, 0.3).unwrap_err();
        assert!(matches!(err, Error::NonDifferentiable { .. }));
        let p = preimages(&w, v).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].piece, 1);
        assert!((p[0].weight - 0.6025).abs() < 5e-3, "{}", p[0].weight);
    }

    #[test]
    fn stochastic_inverse_abs() {
        let w = fixtures::v_abs();
        for (v, aux) in [(0.3, 0.2), (0.3, 0.8), (0.9, 0.49), (0.9, 0.51)] {
            let x = stochastic_inverse(&w, v, aux).unwrap();
            let expect = (1.0 - v) / 2.0 + if aux > 0.5 { v } else { 0.0 };
            assert!((x - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn bernoulli_rejected() {
        let base = BaseDistribution::new(DistKind::Bernoulli { p: 0.3 }).unwrap();
        let t = PcsmFunction::new(vec![0.0, 1.0], vec![Piece::linear(1.0, 0.0)]).unwrap();
        assert!(matches!(WTransform::build(base, t), Err(Error::Construction(_))));
    }

    #[test]
    fn support_mismatch_rejected() {
        let base = BaseDistribution::uniform01();
        let t = PcsmFunction::new(vec![0.0, 2.0], vec![Piece::linear(1.0, 0.0)]).unwrap();
        assert!(WTransform::build(base, t).is_err());
    }

    #[test]
    fn countable_matches_digamma_oracle() {
        // F_{T(X)}(y) = sum_n (1/n - 1/(n+y)) = digamma(1+y) + euler_gamma
        let w = fixtures::countable();
        let gamma = 0.577_215_664_901_532_9;
        for y in [0.05, 0.3, 0.5, 0.77, 0.99] {
            let oracle = statrs::function::gamma::digamma(1.0 + y) + gamma;
            assert!((w.transformed_cdf(y) - oracle).abs() < 1e-9, "y={y}");
        }
        let u = 0.87;
        let x = 1.0 / (1.0f64 - u).sqrt();
        let y = x * x - (x * x).ceil() + 1.0;
        let oracle = statrs::function::gamma::digamma(1.0 + y) + gamma;
        assert!((w.eval(u) - oracle).abs() < 1e-9);
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        for w in [fixtures::zigzag(), fixtures::piecewise_increasing(0.3)] {
            for i in 1..50 {
                let u = i as f64 / 50.0 + 0.0031;
                if is_exceptional(&w, w.eval(u)) {
                    continue;
                }
                let k = w.piece_of(u);
                let analytic = w.piece_derivative(k, u);
                let numeric = numeric_piece_derivative(&w, k, u);
                assert!((analytic - numeric).abs() < 1e-4 * analytic.abs().max(1.0), "u={u}");
            }
        }
    }
}
