//! Pseudo-observations, maximum pseudo-likelihood fits, and the tests used
//! on the river-flow data.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::copula::Copula;
use crate::error::{Error, Result};
use crate::measures::average_ranks;
use crate::rng::{self, Rng};
use crate::sample::Sample;
use crate::wcopula::WTransformedCopula;
use crate::wtransform::{InnTransform, Transform};
use crate::pcsm::PiecewiseLinearMap;

#[derive(Debug, Clone, Serialize)]
pub struct PseudoSample {
    pub data: Sample,
    /// Whether any column had ties (resolved by average ranks).
    pub ties: bool,
}

impl PseudoSample {
    pub fn n(&self) -> usize {
        self.data.n()
    }

    pub fn swapped(&self) -> Self {
        Self {
            data: self.data.swapped(),
            ties: self.ties,
        }
    }
}

/// Componentwise ranks over `n + 1`, ties sharing their average rank.
pub fn pseudo_obs(data: &Sample) -> Result<PseudoSample> {
    let n = data.n();
    if n < 2 {
        return Err(Error::Data(format!("need at least 2 observations, got {n}")));
    }
    let mut ties = false;
    let mut cols = Vec::with_capacity(data.d());
    for j in 0..data.d() {
        let x = data.column(j);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data(format!("column {} has non-finite values", j + 1)));
        }
        if x.iter().all(|&v| v == x[0]) {
            return Err(Error::Data(format!("column {} is constant", j + 1)));
        }
        let r = average_ranks(&x);
        ties |= r.iter().any(|v| v.fract() != 0.0);
        cols.push(r);
    }
    let scale = 1.0 / (n as f64 + 1.0);
    let mut out = Sample::with_capacity(data.d(), n);
    let mut row = vec![0.0; data.d()];
    for i in 0..n {
        for (j, c) in cols.iter().enumerate() {
            row[j] = c[i] * scale;
        }
        out.push(&row);
    }
    Ok(PseudoSample { data: out, ties })
}

/// A fitted copula of either kind.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum FittedModel {
    Copula(Copula),
    W(WTransformedCopula),
}

impl FittedModel {
    pub fn cdf(&self, u: &[f64]) -> f64 {
        match self {
            FittedModel::Copula(c) => c.cdf(u),
            FittedModel::W(w) => w.cdf(u),
        }
    }

    pub fn log_density(&self, u: &[f64]) -> Result<f64> {
        match self {
            FittedModel::Copula(c) => c.density(u).map(f64::ln),
            FittedModel::W(w) => w.log_density_nudged(u),
        }
    }

    pub fn sample(&self, n: usize, rng: &mut Rng) -> Sample {
        match self {
            FittedModel::Copula(c) => c.sample(n, rng),
            FittedModel::W(w) => w.sample(n, rng),
        }
    }

    /// `C(u2 | u1)`.
    pub fn conditional(&self, u2: f64, u1: f64) -> Result<f64> {
        match self {
            FittedModel::Copula(c) => c.conditional(u2, u1),
            FittedModel::W(w) => w.conditional(u2, u1),
        }
    }

    pub fn log_likelihood(&self, p: &PseudoSample) -> f64 {
        let mut total = 0.0;
        for r in p.data.rows() {
            match self.log_density(r) {
                Ok(l) if l.is_finite() => total += l,
                _ => return f64::NEG_INFINITY,
            }
        }
        total
    }
}

/// Ordinal sum of two Gumbels on `(0, 1/2], (1/2, 1]` with margins
/// `2u - ceil(2u - 1)` and the Inn transform.
pub fn w_ordinal_sum(alpha1: f64, alpha2: f64, theta: f64) -> Result<WTransformedCopula> {
    let base = Copula::ordinal_sum(
        vec![0.0, 0.5, 1.0],
        vec![Copula::gumbel(alpha1)?, Copula::gumbel(alpha2)?],
    )?;
    let saw = PiecewiseLinearMap::new(vec![0.0, 0.5, 1.0], vec![2.0, 2.0], vec![0.0, -1.0])?;
    WTransformedCopula::new(
        base,
        vec![Transform::Linear(saw), Transform::Inn(InnTransform::new(theta)?)],
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitFamily {
    Gumbel,
    KhoudrajiGumbel,
    WOrdinalSum,
}

impl FitFamily {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "gumbel" => Ok(Self::Gumbel),
            "khoudraji" | "khoudraji_gumbel" => Ok(Self::KhoudrajiGumbel),
            "wos" | "w_ordinal_sum" => Ok(Self::WOrdinalSum),
            _ => Err(Error::Construction(format!(
                "unknown model family {name:?} (gumbel, khoudraji, wos)"
            ))),
        }
    }

    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            Self::Gumbel => &["theta"],
            Self::KhoudrajiGumbel => &["theta", "s1", "s2"],
            Self::WOrdinalSum => &["alpha1", "alpha2", "theta"],
        }
    }

    pub fn model(&self, params: &[f64]) -> Result<FittedModel> {
        Ok(match self {
            Self::Gumbel => FittedModel::Copula(Copula::gumbel(params[0])?),
            Self::KhoudrajiGumbel => FittedModel::Copula(Copula::khoudraji(
                Copula::gumbel(params[0])?,
                params[1],
                params[2],
            )?),
            Self::WOrdinalSum => FittedModel::W(w_ordinal_sum(params[0], params[1], params[2])?),
        })
    }

    pub fn fit(&self, p: &PseudoSample, seed: u64) -> Result<FitResult> {
        match self {
            Self::Gumbel => fit_gumbel_mple(p),
            Self::KhoudrajiGumbel => fit_khoudraji_gumbel(p, seed),
            Self::WOrdinalSum => fit_wos(p, seed),
        }
    }

    /// Refit used inside the bootstrap: one run from the original estimate
    /// and one from a random start instead of the full restart set.
    fn refit(&self, p: &PseudoSample, from: &[f64], seed: u64) -> Result<FitResult> {
        match self {
            Self::Gumbel => fit_gumbel_mple(p),
            _ => {
                let param = self.parametrisation();
                let mut starts = vec![(param.to_free)(from)];
                starts.extend(latin_hypercube(&param.start_box, 1, seed));
                run_restarts(*self, p, &param, starts, seed)
            }
        }
    }

    fn parametrisation(&self) -> Param {
        match self {
            Self::Gumbel => unreachable!("gumbel uses the scalar search"),
            Self::KhoudrajiGumbel => Param {
                to_model: |z| vec![1.0 + z[0].exp(), (-z[1] * z[1]).exp(), (-z[2] * z[2]).exp()],
                to_free: |x| {
                    vec![(x[0] - 1.0).max(1e-12).ln(), (-x[1].ln()).max(0.0).sqrt(), (-x[2].ln()).max(0.0).sqrt()]
                },
                start_box: vec![(-1.0, 1.5), (0.1, 1.5), (0.1, 1.5)],
            },
            Self::WOrdinalSum => Param {
                to_model: |z| vec![1.0 + z[0].exp(), 1.0 + z[1].exp(), z[2].exp()],
                to_free: |x| vec![(x[0] - 1.0).max(1e-12).ln(), (x[1] - 1.0).max(1e-12).ln(), x[2].ln()],
                start_box: vec![(-1.5, 1.5), (-1.5, 1.5), (-1.0, 4.0)],
            },
        }
    }
}

/// Free coordinates for Nelder-Mead and the box the restarts are drawn from.
struct Param {
    to_model: fn(&[f64]) -> Vec<f64>,
    to_free: fn(&[f64]) -> Vec<f64>,
    start_box: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimTrace {
    pub iterations: usize,
    pub converged: bool,
    /// Best log-likelihood after each iteration.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub family: FitFamily,
    pub params: Vec<f64>,
    pub param_names: Vec<String>,
    pub loglik: f64,
    /// Whether the estimate sits on the boundary of the parameter space.
    pub at_boundary: bool,
    pub trace: OptimTrace,
    /// Traces of the other restarts, best first excluded.
    pub restarts: Vec<OptimTrace>,
    pub seed: u64,
    pub model: FittedModel,
}

impl FitResult {
    fn new(family: FitFamily, params: Vec<f64>, loglik: f64, trace: OptimTrace, seed: u64) -> Result<Self> {
        let model = family.model(&params)?;
        Ok(Self {
            family,
            param_names: family.param_names().iter().map(|s| s.to_string()).collect(),
            at_boundary: false,
            params,
            loglik,
            trace,
            restarts: vec![],
            seed,
            model,
        })
    }
}

const GUMBEL_MAX: f64 = 50.0;
const GOLDEN_MAX_ITER: usize = 200;

fn check_bivariate(p: &PseudoSample) -> Result<()> {
    if p.data.d() != 2 {
        return Err(Error::Data(format!("need two columns, got {}", p.data.d())));
    }
    Ok(())
}

/// Golden-section search for the Gumbel parameter on `(1, 50]`.
pub fn fit_gumbel_mple(p: &PseudoSample) -> Result<FitResult> {
    check_bivariate(p)?;
    let loglik = |t: f64| {
        Copula::gumbel(t).map_or(f64::NEG_INFINITY, |c| FittedModel::Copula(c).log_likelihood(p))
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (1.0 + 1e-9, GUMBEL_MAX);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (loglik(c), loglik(d));
    let mut history = vec![];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < GOLDEN_MAX_ITER {
        iterations += 1;
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = loglik(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = loglik(d);
        }
        history.push(fc.max(fd));
        if b - a < 1e-9 * (1.0 + a) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence(format!(
            "golden section stopped at [{a}, {b}] after {iterations} iterations"
        )));
    }
    // refine: keep whichever of the bracket points is better
    let (theta, ll) = [(c, fc), (d, fd), (0.5 * (a + b), loglik(0.5 * (a + b)))]
        .into_iter()
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .expect("three candidates");
    let trace = OptimTrace {
        iterations,
        converged,
        history,
    };
    let mut fit = FitResult::new(FitFamily::Gumbel, vec![theta], ll, trace, 0)?;
    fit.at_boundary = theta < 1.0 + 1e-4 || theta > GUMBEL_MAX - 1e-4;
    Ok(fit)
}

const NM_MAX_ITER: usize = 5000;
const NM_DIAMETER: f64 = 1e-6;

/// Nelder-Mead minimisation from `x0` with initial step `step`.
fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64) -> (Vec<f64>, f64, OptimTrace) {
    let n = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() { f64::INFINITY } else { v }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = (0..=n)
        .map(|i| {
            let mut x = x0.to_vec();
            if i > 0 {
                x[i - 1] += step;
            }
            let v = eval(&x);
            (x, v)
        })
        .collect();
    let mut history = vec![];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < NM_MAX_ITER {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < NM_DIAMETER {
            converged = true;
            break;
        }
        iterations += 1;
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let towards = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect()
        };
        let xr = towards(1.0);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = towards(2.0);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let x = towards(0.5);
                let v = eval(&x);
                (x, v)
            } else {
                let x = towards(-0.5);
                let v = eval(&x);
                (x, v)
            };
            if fc < worst.1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for (x, v) in simplex.iter_mut().skip(1) {
                    for (xi, bi) in x.iter_mut().zip(&best) {
                        *xi = bi + 0.5 * (*xi - bi);
                    }
                    *v = eval(x);
                }
            }
        }
        let best = simplex.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        history.push(-best);
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, v) = simplex.swap_remove(0);
    (
        x,
        v,
        OptimTrace {
            iterations,
            converged,
            history,
        },
    )
}

/// `count` stratified starting points in the box.
fn latin_hypercube(bounds: &[(f64, f64)], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng::stream(seed, 0x1a7);
    let mut points = vec![vec![0.0; bounds.len()]; count];
    for (j, &(lo, hi)) in bounds.iter().enumerate() {
        let mut strata: Vec<usize> = (0..count).collect();
        strata.shuffle(&mut r);
        for (i, s) in strata.into_iter().enumerate() {
            let t = (s as f64 + r.random::<f64>()) / count as f64;
            points[i][j] = lo + t * (hi - lo);
        }
    }
    points
}

const RESTARTS: usize = 5;

fn run_restarts(
    family: FitFamily,
    p: &PseudoSample,
    param: &Param,
    starts: Vec<Vec<f64>>,
    seed: u64,
) -> Result<FitResult> {
    let objective = |z: &[f64]| {
        let x = (param.to_model)(z);
        match family.model(&x) {
            Ok(m) => -m.log_likelihood(p),
            Err(_) => f64::INFINITY,
        }
    };
    let runs: Vec<_> = starts
        .par_iter()
        .map(|z0| nelder_mead(&objective, z0, 0.5))
        .collect();
    let best = runs
        .iter()
        .enumerate()
        .filter(|(_, r)| r.2.converged && r.1.is_finite())
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i);
    let Some(best) = best else {
        let detail: Vec<String> = runs
            .iter()
            .map(|r| format!("{} iterations, -loglik {}", r.2.iterations, r.1))
            .collect();
        return Err(Error::NoConvergence(format!(
            "all {} restarts failed: {}",
            runs.len(),
            detail.join("; ")
        )));
    };
    let mut traces: Vec<OptimTrace> = vec![];
    let mut chosen = None;
    for (i, (z, v, t)) in runs.into_iter().enumerate() {
        if i == best {
            chosen = Some((z, v, t));
        } else {
            traces.push(t);
        }
    }
    let (z, v, trace) = chosen.expect("best run");
    let mut fit = FitResult::new(family, (param.to_model)(&z), -v, trace, seed)?;
    fit.restarts = traces;
    Ok(fit)
}

fn fit_restarts(family: FitFamily, p: &PseudoSample, seed: u64) -> Result<FitResult> {
    check_bivariate(p)?;
    let param = family.parametrisation();
    let starts = latin_hypercube(&param.start_box, RESTARTS, seed);
    run_restarts(family, p, &param, starts, seed)
}

/// Khoudraji-Gumbel MPLE over `(theta, s1, s2)`, `theta > 1`, `s_j` in `(0, 1]`.
pub fn fit_khoudraji_gumbel(p: &PseudoSample, seed: u64) -> Result<FitResult> {
    let mut fit = fit_restarts(FitFamily::KhoudrajiGumbel, p, seed)?;
    fit.at_boundary = fit.params[1] > 1.0 - 1e-6 || fit.params[2] > 1.0 - 1e-6;
    Ok(fit)
}

/// MLE of the W-transformed ordinal sum over `(alpha1, alpha2, theta)`.
pub fn fit_wos(p: &PseudoSample, seed: u64) -> Result<FitResult> {
    fit_restarts(FitFamily::WOrdinalSum, p, seed)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LrTest {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Likelihood ratio test from two log-likelihoods.
pub fn lr_test_logliks(full: f64, nested: f64, df: usize) -> Result<LrTest> {
    let statistic = 2.0 * (full - nested);
    if statistic < 0.0 {
        return Err(Error::Precondition(format!(
            "full model log-likelihood {full} is below the nested {nested}"
        )));
    }
    Ok(LrTest {
        statistic,
        df,
        p_value: chi2_sf(statistic, df),
    })
}

pub fn lr_test(full: &FitResult, nested: &FitResult, df: usize) -> Result<LrTest> {
    lr_test_logliks(full.loglik, nested.loglik, df)
}

fn chi2_sf(x: f64, df: usize) -> f64 {
    let chi = ChiSquared::new(df as f64).expect("positive degrees of freedom");
    chi.sf(x)
}

#[derive(Debug, Clone, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    #[serde(rename = "N")]
    pub replicates: usize,
    pub seed: u64,
}

/// Empirical copula of `p` at each of its own points.
fn empirical_at_points(p: &Sample) -> Vec<f64> {
    let n = p.n();
    // sort by the first coordinate; a Fenwick tree over second-coordinate
    // ranks counts dominated points
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| p.row(a)[0].total_cmp(&p.row(b)[0]).then(p.row(a)[1].total_cmp(&p.row(b)[1])));
    let mut ys: Vec<f64> = (0..n).map(|i| p.row(i)[1]).collect();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let mut tree = vec![0usize; ys.len() + 1];
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        // insert every point sharing this first coordinate before querying
        let x = p.row(order[i])[0];
        let mut j = i;
        while j < n && p.row(order[j])[0] == x {
            let r = ys.partition_point(|&y| y < p.row(order[j])[1]) + 1;
            let mut k = r;
            while k < tree.len() {
                tree[k] += 1;
                k += k & k.wrapping_neg();
            }
            j += 1;
        }
        for &idx in &order[i..j] {
            let mut k = ys.partition_point(|&y| y <= p.row(idx)[1]);
            let mut count = 0;
            while k > 0 {
                count += tree[k];
                k -= k & k.wrapping_neg();
            }
            out[idx] = count as f64 / n as f64;
        }
        i = j;
    }
    out
}

/// Cramér-von Mises distance between the empirical copula and the model.
pub fn cvm_statistic(p: &PseudoSample, model: &FittedModel) -> f64 {
    empirical_at_points(&p.data)
        .iter()
        .zip(p.data.rows())
        .map(|(e, r)| (e - model.cdf(r)).powi(2))
        .sum()
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Precondition(format!("thread pool: {e}")))
}

/// Parametric bootstrap goodness-of-fit test with a refit per replicate.
/// Replicate `b` draws from RNG stream `b + 1` of `seed`, so the p-value
/// does not depend on `threads`.
pub fn gof_bootstrap(
    family: FitFamily,
    p: &PseudoSample,
    replicates: usize,
    seed: u64,
    threads: usize,
) -> Result<(FitResult, TestResult)> {
    if replicates < 100 {
        return Err(Error::Precondition(format!("{replicates} replicates; need at least 100")));
    }
    let pool = pool(threads)?;
    pool.install(|| {
        let fit = family.fit(p, seed)?;
        let s = cvm_statistic(p, &fit.model);
        let n = p.n();
        let stats: Vec<Result<f64>> = (0..replicates)
            .into_par_iter()
            .map(|b| {
                let mut r = rng::stream(seed, b as u64 + 1);
                let sim = pseudo_obs(&fit.model.sample(n, &mut r))?;
                let refit = family.refit(&sim, &fit.params, seed.wrapping_add(b as u64 + 1))?;
                Ok(cvm_statistic(&sim, &refit.model))
            })
            .collect();
        let mut exceed = 0;
        for st in stats {
            if st? >= s {
                exceed += 1;
            }
        }
        let result = TestResult {
            statistic: s,
            p_value: (1.0 + exceed as f64) / (replicates as f64 + 1.0),
            replicates,
            seed,
        };
        Ok((fit, result))
    })
}

const EXCH_GRID: usize = 32;

/// `sum over the 32^2 grid (i/32, j/32) of (C_n(u, v) - C_n(v, u))^2 / 32^2`.
fn exch_statistic(rows: &[[f64; 2]]) -> f64 {
    let m = EXCH_GRID;
    let mut counts = vec![0usize; (m + 1) * (m + 1)];
    let cell = |u: f64| ((u * m as f64).ceil() as usize).min(m);
    for r in rows {
        counts[cell(r[0]) * (m + 1) + cell(r[1])] += 1;
    }
    // cumulative counts: cum[i][j] = #{cell_1 <= i, cell_2 <= j}
    for i in 0..=m {
        for j in 1..=m {
            counts[i * (m + 1) + j] += counts[i * (m + 1) + j - 1];
        }
    }
    for i in 1..=m {
        for j in 0..=m {
            counts[i * (m + 1) + j] += counts[(i - 1) * (m + 1) + j];
        }
    }
    let n = rows.len() as f64;
    let mut t = 0.0;
    for i in 1..=m {
        for j in 1..=m {
            let d = (counts[i * (m + 1) + j] as f64 - counts[j * (m + 1) + i] as f64) / n;
            t += d * d;
        }
    }
    t / (m * m) as f64
}

/// Permutation test of exchangeability: the null resamples swap each row's
/// coordinates independently with probability 1/2 and are then re-ranked.
pub fn exch_test(p: &PseudoSample, permutations: usize, seed: u64, threads: usize) -> Result<TestResult> {
    check_bivariate(p)?;
    let rows: Vec<[f64; 2]> = p.data.rows().map(|r| [r[0], r[1]]).collect();
    let t = exch_statistic(&rows);
    let pool = pool(threads)?;
    let exceed: usize = pool.install(|| {
        (0..permutations)
            .into_par_iter()
            .map(|b| {
                let mut r = rng::stream(seed, b as u64 + 1);
                let (x, y): (Vec<f64>, Vec<f64>) = rows
                    .iter()
                    .map(|&[a, c]| if r.random::<bool>() { (c, a) } else { (a, c) })
                    .unzip();
                // re-rank so the resample has equal margins like the data
                let scale = 1.0 / (x.len() as f64 + 1.0);
                let (rx, ry) = (average_ranks(&x), average_ranks(&y));
                let perm: Vec<[f64; 2]> = rx
                    .iter()
                    .zip(&ry)
                    .map(|(a, c)| [a * scale, c * scale])
                    .collect();
                usize::from(exch_statistic(&perm) >= t)
            })
            .sum()
    });
    Ok(TestResult {
        statistic: t,
        p_value: (1.0 + exceed as f64) / (permutations as f64 + 1.0),
        replicates: permutations,
        seed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Rosenblatt {
    /// `(U1', U2') = (u1, C(u2 | u1))` per row.
    pub transformed: Sample,
    /// Sorted `Phi^{-1}(U1')^2 + Phi^{-1}(U2')^2` against chi-square(2)
    /// quantiles at `(i - 1/2) / n`.
    pub qq: Vec<(f64, f64)>,
}

pub fn rosenblatt(model: &FittedModel, p: &PseudoSample) -> Result<Rosenblatt> {
    check_bivariate(p)?;
    let normal = Normal::standard();
    let mut transformed = Sample::with_capacity(2, p.n());
    let mut radii = Vec::with_capacity(p.n());
    for r in p.data.rows() {
        let v = model.conditional(r[1], r[0])?.clamp(1e-300, 1.0 - 1e-16);
        transformed.push(&[r[0], v]);
        radii.push(normal.inverse_cdf(r[0]).powi(2) + normal.inverse_cdf(v).powi(2));
    }
    radii.sort_by(f64::total_cmp);
    let n = radii.len() as f64;
    let qq = radii
        .into_iter()
        .enumerate()
        .map(|(i, e)| (e, -2.0 * (1.0 - (i as f64 + 0.5) / n).ln()))
        .collect();
    Ok(Rosenblatt { transformed, qq })
}
