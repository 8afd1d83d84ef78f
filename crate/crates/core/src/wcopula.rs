//! Copulas of `(W_1(U_1), ..., W_d(U_d))` for `U ~ C`.
//!
//! Distribution function, box volumes and density are exact sums over the
//! monotone pieces of the margins; sampling pushes base draws forward.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::copula::{box_volume, Copula, Family, UnitBox};
use crate::error::{Error, Result};
use crate::sample::Sample;
use crate::wtransform::{is_exceptional, preimages, Preimage, Transform, WMap, CRITICAL_TOL, NUDGE};

/// Largest number of pieces per margin accepted by the volume sums.
pub const MAX_PIECES: usize = 64;

/// Finite-difference step of the fallback conditional.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct WTransformedCopula {
    base: Copula,
    margins: Vec<Transform>,
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    base: Copula,
    margins: Vec<Transform>,
}

impl TryFrom<ModelRepr> for WTransformedCopula {
    type Error = Error;

    fn try_from(m: ModelRepr) -> Result<Self> {
        WTransformedCopula::new(m.base, m.margins)
    }
}

impl From<WTransformedCopula> for ModelRepr {
    fn from(m: WTransformedCopula) -> Self {
        ModelRepr {
            base: m.base,
            margins: m.margins,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionalMethod {
    /// Weighted component conditionals of a W-transformed ordinal sum.
    Mixture,
    /// Preimage-weighted base conditionals.
    Analytic,
    /// Central difference of the cdf in `u1`.
    FiniteDifference,
}

/// Preimages and weights of one query level `v`.
#[derive(Debug, Clone)]
pub struct StochasticInverse {
    pub v: f64,
    pub preimages: Vec<Preimage>,
}

impl StochasticInverse {
    pub fn new(w: &dyn WMap, v: f64) -> Result<Self> {
        if is_exceptional(w, v) {
            return Err(nondifferentiable(w, v));
        }
        Ok(Self {
            v,
            preimages: preimages(w, v)?,
        })
    }

    pub fn total_weight(&self) -> f64 {
        self.preimages.iter().map(|p| p.weight).sum()
    }

    /// Preimage whose cumulative weight interval contains `u_aux`.
    pub fn select(&self, u_aux: f64) -> f64 {
        let mut cum = 0.0;
        for p in &self.preimages {
            cum += p.weight;
            if u_aux <= cum {
                return p.u;
            }
        }
        self.preimages.last().map_or(f64::NAN, |p| p.u)
    }
}

fn nondifferentiable(w: &dyn WMap, v: f64) -> Error {
    let up = v + NUDGE;
    let nearest_valid = if up <= 1.0 && !is_exceptional(w, up) { up } else { v - NUDGE };
    Error::NonDifferentiable { v, nearest_valid }
}

/// `{u : W(u) <= v}` as a union of disjoint intervals `(lo, hi]`.
pub fn sublevel_intervals(w: &dyn WMap, v: f64) -> Vec<(f64, f64)> {
    if v >= 1.0 {
        return vec![(0.0, 1.0)];
    }
    if v <= 0.0 {
        return vec![];
    }
    let n = w.num_pieces().expect("finite margin");
    let pieces = (0..n).map(|k| {
        let x = w.piece_inverse(k, v);
        if w.is_increasing(k) {
            (w.delta(k), x)
        } else {
            (x, w.delta(k + 1))
        }
    });
    merge(pieces)
}

/// `{u : a < W(u) <= b}` as a union of disjoint intervals.
pub fn band_intervals(w: &dyn WMap, a: f64, b: f64) -> Vec<(f64, f64)> {
    let n = w.num_pieces().expect("finite margin");
    let pieces = (0..n).map(|k| {
        let (xa, xb) = (w.piece_inverse(k, a), w.piece_inverse(k, b));
        if w.is_increasing(k) {
            (xa, xb)
        } else {
            (xb, xa)
        }
    });
    merge(pieces)
}

fn merge(pieces: impl Iterator<Item = (f64, f64)>) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = vec![];
    for (lo, hi) in pieces {
        if hi <= lo {
            continue;
        }
        match out.last_mut() {
            Some(last) if last.1 == lo => last.1 = hi,
            _ => out.push((lo, hi)),
        }
    }
    out
}

/// Sum of `f(box)` over the product of per-coordinate interval lists.
fn sum_over_products(lists: &[Vec<(f64, f64)>], f: impl Fn(&[f64], &[f64]) -> f64) -> f64 {
    if lists.iter().any(Vec::is_empty) {
        return 0.0;
    }
    let d = lists.len();
    let mut idx = vec![0usize; d];
    let (mut a, mut b) = (vec![0.0; d], vec![0.0; d]);
    let mut total = 0.0;
    loop {
        for j in 0..d {
            let (lo, hi) = lists[j][idx[j]];
            a[j] = lo;
            b[j] = hi;
        }
        total += f(&a, &b);
        let mut j = 0;
        loop {
            idx[j] += 1;
            if idx[j] < lists[j].len() {
                break;
            }
            idx[j] = 0;
            j += 1;
            if j == d {
                return total;
            }
        }
    }
}

impl WTransformedCopula {
    pub fn new(base: Copula, margins: Vec<Transform>) -> Result<Self> {
        if margins.len() != base.dim() {
            return Err(Error::Construction(format!(
                "{} margins for a {}-dimensional base copula",
                margins.len(),
                base.dim()
            )));
        }
        for (j, m) in margins.iter().enumerate() {
            let Some(w) = m.as_map() else {
                return Err(Error::Unsupported(format!(
                    "margin {} is a generalised W-transform; copulas need continuous margins",
                    j + 1
                )));
            };
            match w.num_pieces() {
                Some(k) if k <= MAX_PIECES => {}
                Some(k) => {
                    return Err(Error::Unsupported(format!(
                        "margin {} has {k} pieces; at most {MAX_PIECES} are supported",
                        j + 1
                    )))
                }
                None => {
                    return Err(Error::Unsupported(format!(
                        "margin {} has countably many pieces",
                        j + 1
                    )))
                }
            }
        }
        Ok(Self { base, margins })
    }

    /// The same transform on every margin.
    pub fn homogeneous(base: Copula, w: Transform, d: usize) -> Result<Self> {
        let base = if base.dim() == d { base } else { base.with_dim(d)? };
        Self::new(base, vec![w; d])
    }

    pub fn base(&self) -> &Copula {
        &self.base
    }

    pub fn margins(&self) -> &[Transform] {
        &self.margins
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn margin(&self, j: usize) -> &dyn WMap {
        self.margins[j].as_map().expect("checked at construction")
    }

    /// Indices of the increasing pieces of margin `j`.
    pub fn increasing_pieces(&self, j: usize) -> Vec<usize> {
        let w = self.margin(j);
        (0..w.num_pieces().expect("finite")).filter(|&k| w.is_increasing(k)).collect()
    }

    fn base_volume(&self, a: &[f64], b: &[f64]) -> f64 {
        box_volume(|x| self.base.cdf(x), a, b)
    }

    pub fn cdf(&self, u: &[f64]) -> f64 {
        assert_eq!(u.len(), self.dim(), "point dimension");
        let lists: Vec<_> = (0..self.dim())
            .map(|j| sublevel_intervals(self.margin(j), u[j]))
            .collect();
        let c = sum_over_products(&lists, |a, b| self.base_volume(a, b));
        c.clamp(0.0, 1.0)
    }

    /// Volume of `(a, b]`, assembled from preimage boxes of the band
    /// `a_j < W_j <= b_j` rather than from the cdf.
    pub fn volume(&self, b: &UnitBox) -> f64 {
        let lists: Vec<_> = (0..self.dim())
            .map(|j| band_intervals(self.margin(j), b.lower()[j], b.upper()[j]))
            .collect();
        sum_over_products(&lists, |lo, hi| self.base_volume(lo, hi)).max(0.0)
    }

    /// Density; errors when some `u_j` is a nondifferentiable level.
    pub fn density(&self, u: &[f64]) -> Result<f64> {
        assert_eq!(u.len(), self.dim(), "point dimension");
        let mut lists = Vec::with_capacity(self.dim());
        for (j, &v) in u.iter().enumerate() {
            lists.push(StochasticInverse::new(self.margin(j), v)?.preimages);
        }
        if lists.iter().any(Vec::is_empty) {
            return Ok(0.0);
        }
        let d = self.dim();
        let mut idx = vec![0usize; d];
        let mut x = vec![0.0; d];
        let mut total = 0.0;
        loop {
            let mut weight = 1.0;
            for j in 0..d {
                let p = lists[j][idx[j]];
                x[j] = p.u;
                weight *= p.weight;
            }
            total += self.base.density(&x)? * weight;
            let mut j = 0;
            loop {
                idx[j] += 1;
                if idx[j] < lists[j].len() {
                    break;
                }
                idx[j] = 0;
                j += 1;
                if j == d {
                    return Ok(total);
                }
            }
        }
    }

    /// Log-density with levels on a change point nudged by `1e-9`.
    pub fn log_density_nudged(&self, u: &[f64]) -> Result<f64> {
        match self.density(u) {
            Ok(c) => Ok(c.ln()),
            Err(Error::NonDifferentiable { .. }) => {
                let v: Vec<f64> = u
                    .iter()
                    .enumerate()
                    .map(|(j, &x)| {
                        if is_exceptional(self.margin(j), x) {
                            let step = if x + NUDGE <= 1.0 { NUDGE } else { -NUDGE };
                            x + step
                        } else {
                            x
                        }
                    })
                    .collect();
                self.density(&v).map(f64::ln)
            }
            Err(e) => Err(e),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        self.base.draw(rng, out);
        for (x, m) in out.iter_mut().zip(&self.margins) {
            *x = m.eval(*x);
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Sample {
        let mut s = Sample::with_capacity(self.dim(), n);
        let mut row = vec![0.0; self.dim()];
        for _ in 0..n {
            self.draw(rng, &mut row);
            s.push(&row);
        }
        s
    }

    /// Whether the mixture representation applies: an ordinal-sum base whose
    /// breaks are the change points of every margin, all pieces increasing.
    pub fn is_mixture(&self) -> bool {
        let Family::OrdinalSum { deltas, .. } = self.base.family() else {
            return false;
        };
        (0..self.dim()).all(|j| {
            let w = self.margin(j);
            w.num_pieces() == Some(deltas.len() - 1)
                && deltas
                    .iter()
                    .enumerate()
                    .all(|(i, d)| (w.delta(i) - d).abs() <= CRITICAL_TOL)
                && (0..deltas.len() - 1).all(|k| w.is_increasing(k))
        })
    }

    /// `G_{j,k}(u) = (W_{j|k}^{-1}(u) - delta_{k-1}) / (delta_k - delta_{k-1})`.
    pub fn mixture_margin(&self, j: usize, k: usize, u: f64) -> f64 {
        let w = self.margin(j);
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        let (lo, hi) = (w.delta(k), w.delta(k + 1));
        ((w.piece_inverse(k, u) - lo) / (hi - lo)).clamp(0.0, 1.0)
    }

    /// Mixture weights `(delta_k - delta_{k-1}) g_{1,k}(u1)`.
    pub fn mixture_weights(&self, u1: f64) -> Result<Vec<f64>> {
        let w = self.margin(0);
        let inv = StochasticInverse::new(w, u1)?;
        let mut out = vec![0.0; w.num_pieces().expect("finite")];
        for p in inv.preimages {
            out[p.piece] = p.weight;
        }
        Ok(out)
    }

    /// `P(V2 <= u2 | V1 = u1)` by the best available route.
    pub fn conditional(&self, u2: f64, u1: f64) -> Result<f64> {
        if self.dim() != 2 {
            return Err(Error::Unsupported("conditionals are bivariate".into()));
        }
        if is_exceptional(self.margin(0), u1) {
            return self.conditional_with(ConditionalMethod::FiniteDifference, u2, u1);
        }
        if self.is_mixture() {
            self.conditional_with(ConditionalMethod::Mixture, u2, u1)
        } else {
            self.conditional_with(ConditionalMethod::Analytic, u2, u1)
        }
    }

    pub fn conditional_with(&self, method: ConditionalMethod, u2: f64, u1: f64) -> Result<f64> {
        if self.dim() != 2 {
            return Err(Error::Unsupported("conditionals are bivariate".into()));
        }
        let value = match method {
            ConditionalMethod::Mixture => {
                if !self.is_mixture() {
                    return Err(Error::Precondition(
                        "mixture rule needs an ordinal-sum base matching increasing margins".into(),
                    ));
                }
                let Family::OrdinalSum { components, .. } = self.base.family() else {
                    unreachable!()
                };
                let weights = self.mixture_weights(u1)?;
                let mut total = 0.0;
                for (k, wk) in weights.iter().enumerate() {
                    if *wk == 0.0 {
                        continue;
                    }
                    let g1 = self.mixture_margin(0, k, u1);
                    let g2 = self.mixture_margin(1, k, u2);
                    total += wk * components[k].conditional(g2, g1)?;
                }
                total
            }
            ConditionalMethod::Analytic => {
                let inv = StochasticInverse::new(self.margin(0), u1)?;
                let set = sublevel_intervals(self.margin(1), u2);
                let mut total = 0.0;
                for p in &inv.preimages {
                    let mut mass = 0.0;
                    for &(lo, hi) in &set {
                        mass += self.base.partial(0, &[p.u, hi])? - self.base.partial(0, &[p.u, lo])?;
                    }
                    total += p.weight * mass;
                }
                total
            }
            ConditionalMethod::FiniteDifference => {
                let h = FD_STEP;
                let (a, b) = ((u1 - h).max(0.0), (u1 + h).min(1.0));
                (self.cdf(&[b, u2]) - self.cdf(&[a, u2])) / (b - a)
            }
        };
        Ok(value.clamp(0.0, 1.0))
    }
}
