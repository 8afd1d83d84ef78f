//! Piecewise surjective strictly monotone (pssm) W-transforms.

use serde::Serialize;

use super::{boundary_derivative, numeric_piece_derivative, WMap, WTransform};
use crate::dist::BaseDistribution;
use crate::error::{Error, Result};
use crate::pcsm::{PcsmFunction, Piece};

/// `W_{t, r, F_X}`: every piece of `T` maps its interval linearly onto
/// `[0, 1]`, increasing when `r_k = 1`.
#[derive(Debug, Clone)]
pub struct PssmWTransform {
    t: Vec<f64>,
    r: Vec<u8>,
    base: BaseDistribution,
    deltas: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryDerivative {
    pub value: f64,
    /// Whether `r = 1` and the density diverges at the endpoint, so that the
    /// limit is known to be one.
    pub lemma_applies: bool,
}

impl PssmWTransform {
    pub fn new(t: Vec<f64>, r: Vec<u8>, base: BaseDistribution) -> Result<Self> {
        let k = r.len();
        if k == 0 || t.len() != k + 1 {
            return Err(Error::Construction(format!(
                "{} knots for {} direction flags",
                t.len(),
                k
            )));
        }
        if t[0] != 0.0 || t[k] != 1.0 || t.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Construction(
                "pssm knots must increase strictly from 0 to 1".into(),
            ));
        }
        if r.iter().any(|&x| x > 1) {
            return Err(Error::Construction("direction flags must be 0 or 1".into()));
        }
        if !base.is_continuous() || base.support() != (0.0, 1.0) {
            return Err(Error::Construction(
                "pssm needs a continuous base on [0, 1]".into(),
            ));
        }
        let mut deltas: Vec<f64> = t.iter().map(|&x| base.cdf(x)).collect();
        deltas[0] = 0.0;
        deltas[k] = 1.0;
        Ok(Self { t, r, base, deltas })
    }

    pub fn knots(&self) -> &[f64] {
        &self.t
    }

    pub fn directions(&self) -> &[u8] {
        &self.r
    }

    pub fn base(&self) -> &BaseDistribution {
        &self.base
    }

    fn len(&self, k: usize) -> f64 {
        self.t[k + 1] - self.t[k]
    }

    /// Point of piece `j` at level `s` of `T`.
    fn point_at_level(&self, j: usize, s: f64) -> f64 {
        if self.r[j] == 1 {
            self.t[j] + s * self.len(j)
        } else {
            self.t[j + 1] - s * self.len(j)
        }
    }

    /// `P(T(X) <= s, X in piece j)`.
    fn term(&self, j: usize, s: f64) -> f64 {
        let x = self.point_at_level(j, s);
        if self.r[j] == 1 {
            self.base.mass(self.t[j], x)
        } else {
            self.base.mass(x, self.t[j + 1])
        }
    }

    /// `F_{T(X)}(s)` for `s` in `[0, 1]`.
    pub fn level_cdf(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        (0..self.r.len()).map(|j| self.term(j, s)).sum::<f64>().min(1.0)
    }

    fn level_of(&self, k: usize, u: f64) -> f64 {
        let x = self
            .base
            .quantile(u.clamp(0.0, 1.0))
            .unwrap_or(f64::NAN)
            .clamp(self.t[k], self.t[k + 1]);
        let s = if self.r[k] == 1 {
            (x - self.t[k]) / self.len(k)
        } else {
            (self.t[k + 1] - x) / self.len(k)
        };
        s.clamp(0.0, 1.0)
    }

    /// The same map through the generic (F_X, T) construction.
    pub fn to_generic(&self) -> Result<WTransform> {
        let pieces = (0..self.r.len())
            .map(|k| {
                let l = self.len(k);
                if self.r[k] == 1 {
                    Piece::linear(1.0 / l, -self.t[k] / l)
                } else {
                    Piece::linear(-1.0 / l, self.t[k + 1] / l)
                }
            })
            .collect();
        WTransform::build(self.base.clone(), PcsmFunction::new(self.t.clone(), pieces)?)
    }

    /// One-sided derivative at `end` (0 or 1).
    pub fn boundary_derivative(&self, end: u8) -> BoundaryDerivative {
        let edge = if end == 0 { 0.0 } else { 1.0 };
        let lemma_applies = self.r.iter().all(|&x| x == 1)
            && self.base.pdf(edge).is_ok_and(|d| d.is_infinite());
        BoundaryDerivative {
            value: boundary_derivative(self, end),
            lemma_applies,
        }
    }
}

impl WMap for PssmWTransform {
    fn num_pieces(&self) -> Option<usize> {
        Some(self.r.len())
    }

    fn delta(&self, i: usize) -> f64 {
        self.deltas[i]
    }

    fn is_increasing(&self, k: usize) -> bool {
        self.r[k] == 1
    }

    fn eval_piece(&self, k: usize, u: f64) -> f64 {
        let s = self.level_of(k, u);
        let own = if self.r[k] == 1 {
            u - self.deltas[k]
        } else {
            self.deltas[k + 1] - u
        };
        let others: f64 = (0..self.r.len())
            .filter(|&j| j != k)
            .map(|j| self.term(j, s))
            .sum();
        (own.max(0.0) + others).clamp(0.0, 1.0)
    }

    fn piece_inverse(&self, k: usize, v: f64) -> f64 {
        let (a, b) = (self.deltas[k], self.deltas[k + 1]);
        let inc = self.r[k] == 1;
        if v <= 0.0 {
            return if inc { a } else { b };
        }
        if v >= 1.0 {
            return if inc { b } else { a };
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.level_cdf(mid) >= v {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        self.base.cdf(self.point_at_level(k, hi)).clamp(a, b)
    }

    fn piece_derivative(&self, k: usize, u: f64) -> f64 {
        let s = self.level_of(k, u);
        let x = self.point_at_level(k, s);
        let sign = if self.r[k] == 1 { 1.0 } else { -1.0 };
        let Ok(fx) = self.base.pdf(x) else {
            return numeric_piece_derivative(self, k, u);
        };
        if fx.is_infinite() {
            return sign;
        }
        let others: f64 = (0..self.r.len())
            .filter(|&j| j != k)
            .map(|j| self.len(j) * self.base.pdf(self.point_at_level(j, s)).unwrap_or(0.0))
            .sum();
        let d = sign * (1.0 + others / (self.len(k) * fx));
        if d.is_finite() {
            d
        } else {
            numeric_piece_derivative(self, k, u)
        }
    }
}
