//! Tail dependence, the maximal tail concordance measure, Spearman's rho and
//! Kendall's tau.

use serde::Serialize;

use crate::copula::{Copula, Family};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::sample::Sample;
use crate::wcopula::WTransformedCopula;
use crate::wtransform::{boundary_derivative, WMap};

/// Anything with a bivariate distribution function on `[0, 1]^2`.
pub trait BivariateCdf {
    fn cdf2(&self, u1: f64, u2: f64) -> f64;
}

impl BivariateCdf for Copula {
    fn cdf2(&self, u1: f64, u2: f64) -> f64 {
        self.cdf(&[u1, u2])
    }
}

impl BivariateCdf for WTransformedCopula {
    fn cdf2(&self, u1: f64, u2: f64) -> f64 {
        self.cdf(&[u1, u2])
    }
}

/// The empirical copula of the first two columns.
impl BivariateCdf for Sample {
    fn cdf2(&self, u1: f64, u2: f64) -> f64 {
        let n = self.n();
        if n == 0 {
            return 0.0;
        }
        let hits = self.rows().filter(|r| r[0] <= u1 && r[1] <= u2).count();
        hits as f64 / n as f64
    }
}

impl<T: BivariateCdf + ?Sized> BivariateCdf for &T {
    fn cdf2(&self, u1: f64, u2: f64) -> f64 {
        (**self).cdf2(u1, u2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailMethod {
    Analytic,
    EmpiricalLimit,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailEstimate {
    pub side: Side,
    pub value: f64,
    pub method: TailMethod,
    /// Distances `t` (lower) or `1 - t` (upper) that entered the estimate.
    pub grid: Vec<f64>,
    pub warning: Option<String>,
}

impl TailEstimate {
    fn analytic(side: Side, value: f64) -> Self {
        Self {
            side,
            value: value.clamp(0.0, 1.0),
            method: TailMethod::Analytic,
            grid: vec![],
            warning: None,
        }
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

const TAIL_GRID: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

/// Richardson table for samples `f(h0 / r^i)` assuming an expansion in
/// integer powers of `h`. Returns the last diagonal entry and whether the
/// diagonal settled (successive corrections shrink).
fn richardson(values: &[f64], ratio: f64) -> (f64, bool) {
    let n = values.len();
    let mut table = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        table[i][0] = values[i];
        for j in 1..=i {
            let f = ratio.powi(j as i32);
            table[i][j] = (f * table[i][j - 1] - table[i - 1][j - 1]) / (f - 1.0);
        }
    }
    let diag: Vec<f64> = (0..n).map(|i| table[i][i]).collect();
    let steps: Vec<f64> = diag.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let settled = steps.windows(2).all(|s| s[1] <= s[0] + 1e-12);
    (diag[n - 1], settled)
}

/// Limit of `f(h)` as `h -> 0+` from `h = 1e-1 .. 1e-4`. Falls back to the
/// smallest-`h` value when the extrapolation oscillates or leaves `[0, 1]`.
fn tail_limit(f: impl Fn(f64) -> f64) -> (f64, Option<String>) {
    let values: Vec<f64> = TAIL_GRID.iter().map(|&h| f(h)).collect();
    let (extrap, settled) = richardson(&values, 10.0);
    let last = values[values.len() - 1];
    if settled && (-1e-3..=1.0 + 1e-3).contains(&extrap) {
        (extrap, None)
    } else {
        (
            last,
            Some(format!(
                "extrapolation did not settle (got {extrap:.6}); reporting the value at t = 1e-4"
            )),
        )
    }
}

/// Tail coefficient from the limit definition, Richardson-extrapolated.
pub fn tail_coeff_limit(c: &dyn BivariateCdf, side: Side) -> TailEstimate {
    let (value, warning) = match side {
        Side::Lower => tail_limit(|t| c.cdf2(t, t) / t),
        Side::Upper => tail_limit(|s| {
            let t = 1.0 - s;
            (1.0 - 2.0 * t + c.cdf2(t, t)) / s
        }),
    };
    TailEstimate {
        side,
        value: value.clamp(0.0, 1.0),
        method: TailMethod::EmpiricalLimit,
        grid: TAIL_GRID.to_vec(),
        warning,
    }
}

/// Nonparametric tail coefficient of a sample at `t = k / n`, `k = ceil(sqrt n)`.
pub fn tail_coeff_sample(s: &Sample, side: Side) -> Result<TailEstimate> {
    let n = s.n();
    if n < 2 || s.d() < 2 {
        return Err(Error::Data("need at least two bivariate observations".into()));
    }
    let t = (n as f64).sqrt().ceil() / n as f64;
    let hits = s
        .rows()
        .filter(|r| match side {
            Side::Lower => r[0] <= t && r[1] <= t,
            Side::Upper => r[0] > 1.0 - t && r[1] > 1.0 - t,
        })
        .count();
    Ok(TailEstimate {
        side,
        value: (hits as f64 / (n as f64 * t)).clamp(0.0, 1.0),
        method: TailMethod::EmpiricalLimit,
        grid: vec![t],
        warning: None,
    })
}

/// Closed-form tail coefficient of a base copula.
pub fn copula_tail(c: &Copula, side: Side, method: TailMethod) -> Result<TailEstimate> {
    match method {
        TailMethod::EmpiricalLimit => {
            if c.dim() != 2 {
                return Err(Error::Precondition("tail coefficients need d = 2".into()));
            }
            Ok(tail_coeff_limit(c, side))
        }
        TailMethod::Analytic => {
            let (l, u) = c.tail_coefficients().ok_or_else(|| {
                Error::Unsupported(format!("no closed-form tail coefficients for {:?}", c.family()))
            })?;
            Ok(TailEstimate::analytic(side, if side == Side::Lower { l } else { u }))
        }
    }
}

/// Tail coefficient of a W-transformed copula. The analytic route handles
/// identity margins, homogeneous ordinal sums with increasing pieces, and
/// the upper tail under homogeneous v-transforms.
pub fn tail_coeff(model: &WTransformedCopula, side: Side, method: TailMethod) -> Result<TailEstimate> {
    if model.dim() != 2 {
        return Err(Error::Precondition("tail coefficients need d = 2".into()));
    }
    if method == TailMethod::EmpiricalLimit {
        return Ok(tail_coeff_limit(model, side));
    }
    if model.margins().iter().all(|m| m.is_identity()) {
        return copula_tail(model.base(), side, method);
    }
    if !is_homogeneous(model) {
        return Err(Error::Unsupported(
            "no analytic tail coefficients for heterogeneous margins".into(),
        ));
    }
    let w = model.margin(0);
    if matches!(model.base().family(), Family::OrdinalSum { .. }) {
        return ordinal_sum_tail(model, side);
    }
    if side == Side::Upper && is_v_shaped(w) {
        return vtransform_upper_tail(model.base(), w);
    }
    Err(Error::Unsupported(
        "no analytic tail coefficients for this base and margin".into(),
    ))
}

fn is_homogeneous(model: &WTransformedCopula) -> bool {
    let first = serde_json::to_value(&model.margins()[0]).ok();
    model
        .margins()
        .iter()
        .all(|m| serde_json::to_value(m).ok() == first)
}

fn is_v_shaped(w: &dyn WMap) -> bool {
    w.num_pieces() == Some(2) && !w.is_increasing(0) && w.is_increasing(1)
}

/// `lim_{v -> 0+} |W_k^{-1}(v) - W_k^{-1}(0)| / v` (`end = 0`) or the
/// analogue as `v -> 1-` (`end = 1`).
fn inverse_slope(w: &dyn WMap, k: usize, end: u8) -> f64 {
    let (edge, sign) = if end == 0 { (0.0, 1.0) } else { (1.0, -1.0) };
    let anchor = w.piece_inverse(k, edge);
    // the inverse loses digits below h ~ 1e-5, so start coarse
    const LEVELS: usize = 8;
    let mut table = [[0.0f64; LEVELS]; LEVELS];
    for i in 0..LEVELS {
        let h = 1e-2 / (1u64 << i) as f64;
        table[i][0] = (w.piece_inverse(k, edge + sign * h) - anchor).abs() / h;
        for j in 1..=i {
            let f = (1u64 << j) as f64;
            table[i][j] = (f * table[i][j - 1] - table[i - 1][j - 1]) / (f - 1.0);
        }
    }
    // the diagonal entry whose successor changed least
    let mut best = table[1][1];
    let mut best_change = f64::INFINITY;
    for i in 2..LEVELS {
        let change = (table[i][i] - table[i - 1][i - 1]).abs();
        if change < best_change {
            best_change = change;
            best = table[i][i];
        }
    }
    best.max(0.0)
}

/// Weights `alpha_k = (W_k^{-1})'(0+)` and `beta_k = (W_k^{-1})'(1-)` of a
/// piecewise increasing map.
pub fn ordinal_sum_weights(w: &dyn WMap) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = w
        .num_pieces()
        .ok_or_else(|| Error::Precondition("ordinal-sum weights need finitely many pieces".into()))?;
    if (0..k).any(|i| !w.is_increasing(i)) {
        return Err(Error::Unsupported(
            "decreasing pieces swap the tails a component feeds; only piecewise increasing maps are handled"
                .into(),
        ));
    }
    let alpha: Vec<f64> = (0..k).map(|i| inverse_slope(w, i, 0)).collect();
    let beta: Vec<f64> = (0..k).map(|i| inverse_slope(w, i, 1)).collect();
    for (name, ws) in [("alpha", &alpha), ("beta", &beta)] {
        let s: f64 = ws.iter().sum();
        if (s - 1.0).abs() > 1e-6 {
            return Err(Error::Precondition(format!(
                "{name} weights sum to {s}, not 1"
            )));
        }
    }
    Ok((alpha, beta))
}

/// Tail coefficient of a homogeneous W-transformed ordinal sum whose
/// change points match the ordinal-sum partition.
pub fn ordinal_sum_tail(model: &WTransformedCopula, side: Side) -> Result<TailEstimate> {
    let Family::OrdinalSum { deltas, components } = model.base().family() else {
        return Err(Error::Precondition("base copula is not an ordinal sum".into()));
    };
    if model.dim() != 2 || !is_homogeneous(model) {
        return Err(Error::Precondition(
            "ordinal-sum tails need a bivariate homogeneous model".into(),
        ));
    }
    let w = model.margin(0);
    if w.num_pieces() != Some(components.len())
        || deltas
            .iter()
            .enumerate()
            .any(|(i, &d)| (w.delta(i) - d).abs() > 1e-9)
    {
        return Err(Error::Precondition(
            "margin change points differ from the ordinal-sum partition".into(),
        ));
    }
    let (alpha, beta) = ordinal_sum_weights(w)?;
    let mut value = 0.0;
    for (k, c) in components.iter().enumerate() {
        let (l, u) = c.tail_coefficients().ok_or_else(|| {
            Error::Unsupported(format!("component {} has no closed-form tails", k + 1))
        })?;
        value += match side {
            Side::Lower => alpha[k] * l,
            Side::Upper => beta[k] * u,
        };
    }
    Ok(TailEstimate::analytic(side, value))
}

/// Whether the upper-left and lower-right corners carry no tail mass.
fn corners_independent(c: &Copula) -> bool {
    match c.family() {
        Family::Independence
        | Family::Clayton { .. }
        | Family::Gumbel { .. }
        | Family::SurvivalGumbel { .. } => true,
        Family::Gaussian { rho } => *rho > -1.0,
        _ => false,
    }
}

/// Upper tail coefficient of the homogeneous v-transformed copula `C_V`.
/// When `C` may have corner tail mass the corner limit is evaluated
/// numerically.
pub fn vtransform_upper_tail(c: &Copula, v: &dyn WMap) -> Result<TailEstimate> {
    if c.dim() != 2 || !is_v_shaped(v) {
        return Err(Error::Precondition(
            "need a bivariate copula and a decreasing-then-increasing map".into(),
        ));
    }
    let slope = -boundary_derivative(v, 0);
    let (l, u) = match c.tail_coefficients() {
        Some(lu) => lu,
        None => (
            tail_coeff_limit(c, Side::Lower).value,
            tail_coeff_limit(c, Side::Upper).value,
        ),
    };
    let mut value = l / slope + (1.0 - 1.0 / slope) * u;
    let mut warning = None;
    let mut grid = vec![];
    if !corners_independent(c) {
        let (corner, w) = tail_limit(|s| {
            let t = 1.0 - s;
            let a = v.piece_inverse(0, t);
            let b = (a + t).min(1.0);
            (c.cdf(&[b, a]) + c.cdf(&[a, b])) / s
        });
        value += 2.0 / slope - corner;
        warning = w;
        grid = TAIL_GRID.to_vec();
    }
    Ok(TailEstimate {
        side: Side::Upper,
        value: value.clamp(0.0, 1.0),
        method: TailMethod::Analytic,
        grid,
        warning,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MtcmEstimate {
    pub lambda: f64,
    pub b: f64,
    pub p: f64,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

/// `b` on 101 log-spaced points over `[1/50, 50]`.
pub fn mtcm_grid() -> Vec<f64> {
    (0..101)
        .map(|i| (50f64.ln() * (2.0 * i as f64 / 100.0 - 1.0)).exp())
        .collect()
}

/// Maximal tail concordance: the maximum of `C(pb, p/b) / p` over the grid.
pub fn mtcm(c: &dyn BivariateCdf, p: f64) -> MtcmEstimate {
    let grid = mtcm_grid();
    let values: Vec<f64> = grid
        .iter()
        .map(|&b| c.cdf2((p * b).min(1.0), (p / b).min(1.0)) / p)
        .collect();
    let (i, &lambda) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty grid");
    MtcmEstimate {
        lambda,
        b: grid[i],
        p,
        grid,
        values,
    }
}

/// MTCM of a sample with `p = ceil(sqrt n) / n`.
pub fn mtcm_sample(s: &Sample) -> MtcmEstimate {
    let n = s.n() as f64;
    let p = n.sqrt().ceil() / n;
    // sort once so each grid point only scans the rows with u1 <= 50p
    let cap = (50.0 * p).min(1.0);
    let mut low: Vec<(f64, f64)> = s
        .rows()
        .filter(|r| r[0] <= cap)
        .map(|r| (r[0], r[1]))
        .collect();
    low.sort_by(|a, b| a.0.total_cmp(&b.0));
    let cdf = |x: f64, y: f64| {
        let end = low.partition_point(|r| r.0 <= x);
        low[..end].iter().filter(|r| r.1 <= y).count() as f64 / n
    };
    struct Ecdf<F>(F);
    impl<F: Fn(f64, f64) -> f64> BivariateCdf for Ecdf<F> {
        fn cdf2(&self, u1: f64, u2: f64) -> f64 {
            (self.0)(u1, u2)
        }
    }
    mtcm(&Ecdf(cdf), p)
}

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && x[idx[j]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j + 1) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

fn spearman_pairs(x: &[f64], y: &[f64]) -> f64 {
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Number of adjacent-swap inversions needed to sort `v`, sorting it.
fn merge_count(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], buf) + merge_count(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            swaps += (mid - i) as u64;
            buf.push(v[j]);
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

fn tie_pairs(sorted: &[f64]) -> u64 {
    let mut total = 0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as u64;
        total += t * (t - 1) / 2;
        i = j;
    }
    total
}

/// Kendall's tau-b by Knight's merge-count algorithm.
fn kendall_pairs(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as u64;
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let n0 = n * (n - 1) / 2;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let n1 = tie_pairs(&xs);
    let mut n3 = 0;
    let mut i = 0;
    while i < pairs.len() {
        let mut j = i + 1;
        while j < pairs.len() && pairs[j] == pairs[i] {
            j += 1;
        }
        let t = (j - i) as u64;
        n3 += t * (t - 1) / 2;
        i = j;
    }
    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = Vec::with_capacity(ys.len());
    let swaps = merge_count(&mut ys, &mut buf);
    let n2 = tie_pairs(&ys);
    let s = n0 as f64 - n1 as f64 - n2 as f64 + n3 as f64 - 2.0 * swaps as f64;
    s / (((n0 - n1) as f64) * ((n0 - n2) as f64)).sqrt()
}

const BATCHES: usize = 10;

/// Full-sample statistic with a batch-means standard error.
fn with_batches(s: &Sample, stat: impl Fn(&[f64], &[f64]) -> f64) -> Result<McEstimate> {
    if s.n() < 2 || s.d() < 2 {
        return Err(Error::Data("need at least two bivariate observations".into()));
    }
    let x = s.column(0);
    let y = s.column(1);
    let estimate = stat(&x, &y);
    let m = s.n() / BATCHES;
    let stderr = if m >= 10 {
        let b: Vec<f64> = (0..BATCHES)
            .map(|i| stat(&x[i * m..(i + 1) * m], &y[i * m..(i + 1) * m]))
            .collect();
        let mean = b.iter().sum::<f64>() / BATCHES as f64;
        let var = b.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
        (var / BATCHES as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(McEstimate { estimate, stderr })
}

/// Sample Spearman's rho of the first two columns.
pub fn spearman_rho_sample(s: &Sample) -> Result<McEstimate> {
    with_batches(s, spearman_pairs)
}

/// Sample Kendall's tau-b of the first two columns.
pub fn kendall_tau_sample(s: &Sample) -> Result<McEstimate> {
    with_batches(s, kendall_pairs)
}

/// Something that can be sampled for Monte Carlo measures.
pub trait Sampler {
    fn draw_sample(&self, n: usize, rng: &mut Rng) -> Sample;
}

impl Sampler for Copula {
    fn draw_sample(&self, n: usize, rng: &mut Rng) -> Sample {
        self.sample(n, rng)
    }
}

impl Sampler for WTransformedCopula {
    fn draw_sample(&self, n: usize, rng: &mut Rng) -> Sample {
        self.sample(n, rng)
    }
}

fn check_mc(n_mc: usize) -> Result<()> {
    if n_mc < 10_000 {
        return Err(Error::Precondition(format!("n_mc = {n_mc} is below 10^4")));
    }
    Ok(())
}

pub fn spearman_rho(model: &dyn Sampler, n_mc: usize, rng: &mut Rng) -> Result<McEstimate> {
    check_mc(n_mc)?;
    spearman_rho_sample(&model.draw_sample(n_mc, rng))
}

pub fn kendall_tau(model: &dyn Sampler, n_mc: usize, rng: &mut Rng) -> Result<McEstimate> {
    check_mc(n_mc)?;
    kendall_tau_sample(&model.draw_sample(n_mc, rng))
}

/// `12 * int C - 3` by the midpoint rule on an `m x m` grid.
pub fn spearman_rho_grid(c: &dyn BivariateCdf, m: usize) -> f64 {
    let h = 1.0 / m as f64;
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..m {
            total += c.cdf2((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
        }
    }
    12.0 * total * h * h - 3.0
}

#[derive(Debug, Clone, Serialize)]
pub struct PieceBoundsReport {
    pub points_checked: usize,
    /// Largest excess over the bound: `(piece, point, excess)`.
    pub worst: Option<(usize, f64, f64)>,
}

/// Checks on `1000` points per piece that increasing pieces satisfy
/// `W_k(u) <= u / delta_{k+1}` with `W_k^{-1}(v) >= delta_{k+1} v`, and
/// decreasing pieces `W_k(u) <= (1 - u) / (1 - delta_k)` with
/// `W_k^{-1}(v) <= 1 - (1 - delta_k) v`.
pub fn piece_bounds_check(w: &dyn WMap) -> Result<PieceBoundsReport> {
    const POINTS: usize = 1000;
    const TOL: f64 = 1e-9;
    let k = w
        .num_pieces()
        .ok_or_else(|| Error::Precondition("bounds check needs finitely many pieces".into()))?;
    let mut worst: Option<(usize, f64, f64)> = None;
    let mut note = |piece: usize, x: f64, excess: f64| {
        if excess > worst.map_or(TOL, |w| w.2) {
            worst = Some((piece, x, excess));
        }
    };
    for p in 0..k {
        let (a, b) = (w.delta(p), w.delta(p + 1));
        for i in 1..=POINTS {
            let s = i as f64 / POINTS as f64;
            let u = a + (b - a) * s;
            let v = s;
            let wu = w.eval_piece(p, u);
            let inv = w.piece_inverse(p, v);
            if w.is_increasing(p) {
                note(p, u, wu - u / b);
                note(p, v, b * v - inv);
            } else {
                note(p, u, wu - (1.0 - u) / (1.0 - a));
                note(p, v, inv - (1.0 - (1.0 - a) * v));
            }
        }
    }
    match worst {
        None => Ok(PieceBoundsReport {
            points_checked: 2 * POINTS * k,
            worst: None,
        }),
        Some((piece, x, excess)) => Err(Error::Precondition(format!(
            "piece {piece} exceeds its bound by {excess:.3e} at {x}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rng;
    use crate::wtransform::Transform;

    #[test]
    fn closed_forms_match_limits() {
        for theta in [1.0, 2.0, 14.0 / 3.0] {
            let c = Copula::clayton(theta).unwrap();
            let lim = tail_coeff_limit(&c, Side::Lower);
            assert!((lim.value - 2f64.powf(-1.0 / theta)).abs() < 0.01, "{lim:?}");
            let g = Copula::gumbel(theta.max(1.5)).unwrap();
            let lim = tail_coeff_limit(&g, Side::Upper);
            let exact = 2.0 - 2f64.powf(1.0 / theta.max(1.5));
            assert!((lim.value - exact).abs() < 0.01, "{lim:?}");
        }
        let ind = Copula::independence(2);
        for side in [Side::Lower, Side::Upper] {
            assert!(tail_coeff_limit(&ind, side).value.abs() < 1e-9);
            assert_eq!(copula_tail(&ind, side, TailMethod::Analytic).unwrap().value, 0.0);
        }
    }

    #[test]
    fn tail_designer_weights() {
        let model = fixtures::tail_designer();
        let (alpha, beta) = ordinal_sum_weights(model.margin(0)).unwrap();
        for (a, e) in alpha.iter().zip([1.0, 0.0, 0.0]) {
            assert!((a - e).abs() < 1e-6, "{alpha:?}");
        }
        for (b, e) in beta.iter().zip([0.0, 0.0, 1.0]) {
            assert!((b - e).abs() < 1e-6, "{beta:?}");
        }
        let l = tail_coeff(&model, Side::Lower, TailMethod::Analytic).unwrap();
        let u = tail_coeff(&model, Side::Upper, TailMethod::Analytic).unwrap();
        assert!((l.value - 0.5).abs() < 1e-6);
        assert!((u.value - 0.8).abs() < 1e-6);
    }

    #[test]
    fn uniform_base_equal_pieces_weights_are_lengths() {
        let w = fixtures::sawtooth(3);
        let (alpha, beta) = ordinal_sum_weights(&w).unwrap();
        for k in 0..3 {
            assert!((alpha[k] - 1.0 / 3.0).abs() < 1e-9);
            assert!((beta[k] - 1.0 / 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn decreasing_pieces_are_rejected() {
        assert!(matches!(
            ordinal_sum_weights(&fixtures::v_abs()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn vtransform_upper_tail_halves() {
        let v = fixtures::v_abs();
        let c = Copula::clayton(2.0).unwrap();
        let est = vtransform_upper_tail(&c, &v).unwrap();
        assert!((est.value - 2f64.powf(-0.5) / 2.0).abs() < 1e-6);
        let ind = vtransform_upper_tail(&Copula::independence(2), &v).unwrap();
        assert_eq!(ind.value, 0.0);
    }

    #[test]
    fn vtransform_corner_term_matches_limit() {
        let v = fixtures::v_abs();
        let c = Copula::student_t(0.5, 4.0).unwrap();
        let est = vtransform_upper_tail(&c, &v).unwrap();
        let model =
            WTransformedCopula::homogeneous(c, Transform::Linear(v), 2).unwrap();
        let lim = tail_coeff_limit(&model, Side::Upper);
        assert!((est.value - lim.value).abs() < 0.05, "{est:?} vs {lim:?}");
    }

    #[test]
    fn mtcm_of_near_comonotone_and_flipped_v() {
        let m = mtcm(&Copula::gaussian(0.999).unwrap(), 1e-4);
        assert!(m.lambda > 0.9 && (m.b - 1.0).abs() < 0.1, "{m:?}");

        let theta = Copula::clayton_theta_from_tau(0.7);
        let c = Copula::clayton(theta).unwrap();
        let base = mtcm(&c, 1e-6);
        assert!((base.b - 1.0).abs() < 1e-9);
        let model = WTransformedCopula::new(
            c,
            vec![
                Transform::Linear(fixtures::flipped_v(0.2)),
                Transform::Linear(fixtures::flipped_v(0.8)),
            ],
        )
        .unwrap();
        let flipped = mtcm(&model, 1e-6);
        assert!((flipped.b - 2.0).abs() < 0.1, "{flipped:?}");
        assert!((flipped.lambda - 0.4 * base.lambda).abs() < 0.01);
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 2.0]), vec![3.0, 1.0, 2.0]);
        assert_eq!(average_ranks(&[1.0, 1.0, 2.0]), vec![1.5, 1.5, 3.0]);
    }

    fn kendall_brute(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len();
        let (mut s, mut tx, mut ty) = (0.0, 0.0, 0.0);
        let mut n0 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let a = (x[i] - x[j]).signum() * ((x[i] != x[j]) as i32 as f64);
                let b = (y[i] - y[j]).signum() * ((y[i] != y[j]) as i32 as f64);
                s += a * b;
                n0 += 1.0;
                tx += (a == 0.0) as i32 as f64;
                ty += (b == 0.0) as i32 as f64;
            }
        }
        s / ((n0 - tx) * (n0 - ty)).sqrt()
    }

    #[test]
    fn merge_count_matches_brute_force() {
        let mut r = rng::seeded(5);
        let s = Copula::clayton(2.0).unwrap().sample(300, &mut r);
        let (x, y) = (s.column(0), s.column(1));
        assert!((kendall_pairs(&x, &y) - kendall_brute(&x, &y)).abs() < 1e-12);
        let xr: Vec<f64> = x.iter().map(|v| (v * 5.0).floor()).collect();
        let yr: Vec<f64> = y.iter().map(|v| (v * 4.0).floor()).collect();
        assert!((kendall_pairs(&xr, &yr) - kendall_brute(&xr, &yr)).abs() < 1e-12);
    }

    #[test]
    fn sampled_rank_correlations() {
        let mut r = rng::seeded(11);
        let ind = Copula::independence(2);
        let rho = spearman_rho(&ind, 20_000, &mut r).unwrap();
        assert!(rho.estimate.abs() < 3.0 * rho.stderr + 1e-3, "{rho:?}");
        let c = Copula::clayton(14.0 / 3.0).unwrap();
        let tau = kendall_tau(&c, 20_000, &mut r).unwrap();
        assert!((tau.estimate - 0.7).abs() < 0.02);
        let g = Copula::gumbel(2.1383).unwrap();
        let tau = kendall_tau(&g, 20_000, &mut r).unwrap();
        assert!((tau.estimate - (1.0 - 1.0 / 2.1383)).abs() < 0.02);
        assert!(spearman_rho(&ind, 100, &mut r).is_err());
    }

    #[test]
    fn grid_spearman_of_independence() {
        let rho = spearman_rho_grid(&Copula::independence(2), 201);
        assert!(rho.abs() < 1e-4);
    }

    #[derive(Debug)]
    struct HalfSlope;

    impl WMap for HalfSlope {
        fn num_pieces(&self) -> Option<usize> {
            Some(1)
        }
        fn delta(&self, i: usize) -> f64 {
            i as f64
        }
        fn is_increasing(&self, _: usize) -> bool {
            true
        }
        fn eval_piece(&self, _: usize, u: f64) -> f64 {
            0.5 * u + 0.5
        }
    }

    #[test]
    fn piece_bounds() {
        assert!(piece_bounds_check(&fixtures::v_abs()).is_ok());
        assert!(piece_bounds_check(&fixtures::piecewise_increasing(0.3)).is_ok());
        let err = piece_bounds_check(&HalfSlope).unwrap_err();
        assert!(err.to_string().contains("piece 0"));
        assert!(piece_bounds_check(&fixtures::countable()).is_err());
    }

    #[test]
    fn piece_bound_fails_without_surjective_pieces() {
        // swapping halves: W(0.1) = 0.6 exceeds 0.1 / 0.5 on the first piece
        let swap = crate::pcsm::PiecewiseLinearMap::new(
            vec![0.0, 0.5, 1.0],
            vec![1.0, 1.0],
            vec![0.5, -0.5],
        )
        .unwrap();
        assert!(piece_bounds_check(&swap).is_err());
        assert!(piece_bounds_check(&fixtures::shuffle()).is_ok());
        assert!(piece_bounds_check(&fixtures::zigzag()).is_err());
        assert!(piece_bounds_check(&fixtures::sawtooth(3)).is_ok());
    }
}
