//! Base copulas: Archimedean, elliptical, the Maltese fixture, ordinal sums
//! and Khoudraji composites.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quad::integrate;
use crate::sample::Sample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Independence,
    Clayton { theta: f64 },
    Gumbel { theta: f64 },
    SurvivalGumbel { theta: f64 },
    Gaussian { rho: f64 },
    /// `nu = 1` is the Cauchy copula.
    StudentT { rho: f64, nu: f64 },
    /// Uniform mass on `[0, 3/4] x [1/4, 1]` and `[3/4, 1] x [0, 1/4]`.
    Maltese,
    OrdinalSum {
        deltas: Vec<f64>,
        components: Vec<Copula>,
    },
    /// `u1^(1-s1) u2^(1-s2) C(u1^s1, u2^s2)`
    Khoudraji { base: Box<Copula>, shapes: [f64; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CopulaRepr", into = "CopulaRepr")]
pub struct Copula {
    family: Family,
    dim: usize,
}

#[derive(Serialize, Deserialize)]
struct CopulaRepr {
    #[serde(flatten)]
    family: Family,
    #[serde(default = "two")]
    dim: usize,
}

fn two() -> usize {
    2
}

impl TryFrom<CopulaRepr> for Copula {
    type Error = Error;

    fn try_from(r: CopulaRepr) -> Result<Self> {
        Copula::new(r.family, r.dim)
    }
}

impl From<Copula> for CopulaRepr {
    fn from(c: Copula) -> Self {
        CopulaRepr {
            family: c.family,
            dim: c.dim,
        }
    }
}

/// Axis-aligned box `(a, b]` in the unit cube.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl UnitBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Precondition("box corners differ in dimension".into()));
        }
        for (a, b) in lower.iter().zip(&upper) {
            if !(0.0 <= *a && a <= b && *b <= 1.0) {
                return Err(Error::Precondition(format!(
                    "box side ({a}, {b}] is not inside [0, 1]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }
}

/// Inclusion-exclusion sum of `cdf` over the corners of `(a, b]`.
pub fn box_volume(cdf: impl Fn(&[f64]) -> f64, a: &[f64], b: &[f64]) -> f64 {
    let d = a.len();
    let mut corner = vec![0.0; d];
    let mut total = 0.0;
    for mask in 0..(1usize << d) {
        let mut lows = 0;
        for j in 0..d {
            if mask >> j & 1 == 1 {
                corner[j] = a[j];
                lows += 1;
            } else {
                corner[j] = b[j];
            }
        }
        if lows % 2 == 0 {
            total += cdf(&corner);
        } else {
            total -= cdf(&corner);
        }
    }
    total
}

fn std_normal() -> Normal {
    Normal::standard()
}

/// Student t distribution function, closed form for `nu = 1, 2`.
fn t_cdf(x: f64, nu: f64) -> f64 {
    if nu == 1.0 {
        0.5 + x.atan() / PI
    } else if nu == 2.0 {
        0.5 + 0.5 * x / (2.0 + x * x).sqrt()
    } else {
        StudentsT::new(0.0, 1.0, nu).expect("nu > 0").cdf(x)
    }
}

fn t_quantile(p: f64, nu: f64) -> f64 {
    if nu == 1.0 {
        (PI * (p - 0.5)).tan()
    } else if nu == 2.0 {
        let a = 4.0 * p * (1.0 - p);
        (2.0 * p - 1.0) * (2.0 / a).sqrt()
    } else {
        StudentsT::new(0.0, 1.0, nu).expect("nu > 0").inverse_cdf(p)
    }
}

fn t_log_pdf(x: f64, nu: f64) -> f64 {
    ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (nu * PI).ln()
        - 0.5 * (nu + 1.0) * (x * x / nu).ln_1p()
}

/// `P(X <= x, Y <= y)` for standard normals with correlation `rho`.
pub fn bivariate_normal_cdf(x: f64, y: f64, rho: f64) -> f64 {
    let nd = std_normal();
    if x == f64::NEG_INFINITY || y == f64::NEG_INFINITY {
        return 0.0;
    }
    if x == f64::INFINITY {
        return nd.cdf(y);
    }
    if y == f64::INFINITY {
        return nd.cdf(x);
    }
    let kernel = |r: f64| {
        let s = 1.0 - r * r;
        (-(x * x - 2.0 * r * x * y + y * y) / (2.0 * s)).exp() / s.sqrt()
    };
    let extra = integrate(kernel, 0.0, rho, 1e-13) / (2.0 * PI);
    (nd.cdf(x) * nd.cdf(y) + extra).clamp(0.0, 1.0)
}

/// Positive stable variable with Laplace transform `exp(-s^alpha)`.
fn positive_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    if alpha >= 1.0 {
        return 1.0;
    }
    let theta: f64 = PI * rng.random::<f64>();
    let w: f64 = Exp1.sample(rng);
    let a = (alpha * theta).sin() / theta.sin().powf(1.0 / alpha);
    a * ((1.0 - alpha) * theta).sin().powf((1.0 - alpha) / alpha) / w.powf((1.0 - alpha) / alpha)
}

/// Open unit draw, never exactly 0.
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

impl Copula {
    pub fn new(family: Family, dim: usize) -> Result<Self> {
        let bad = |msg: String| Err(Error::Construction(msg));
        if dim < 2 {
            return bad(format!("copula dimension must be at least 2, got {dim}"));
        }
        let bivariate_only = matches!(
            family,
            Family::Gaussian { .. }
                | Family::StudentT { .. }
                | Family::Maltese
                | Family::Khoudraji { .. }
        );
        if bivariate_only && dim != 2 {
            return bad("elliptical, Maltese and Khoudraji copulas are bivariate".into());
        }
        match &family {
            Family::Independence | Family::Maltese => {}
            Family::Clayton { theta } => {
                if !(*theta > 0.0 && theta.is_finite()) {
                    return bad(format!("Clayton theta must be positive, got {theta}"));
                }
            }
            Family::Gumbel { theta } | Family::SurvivalGumbel { theta } => {
                if !(*theta >= 1.0 && theta.is_finite()) {
                    return bad(format!("Gumbel theta must be at least 1, got {theta}"));
                }
            }
            Family::Gaussian { rho } => {
                if !(rho.abs() < 1.0) {
                    return bad(format!("correlation must lie in (-1, 1), got {rho}"));
                }
            }
            Family::StudentT { rho, nu } => {
                if !(rho.abs() < 1.0) || !(*nu > 0.0 && nu.is_finite()) {
                    return bad(format!("invalid t copula parameters rho={rho}, nu={nu}"));
                }
            }
            Family::OrdinalSum { deltas, components } => {
                let k = components.len();
                if k == 0 || deltas.len() != k + 1 {
                    return bad(format!("{} breaks for {} components", deltas.len(), k));
                }
                if deltas[0] != 0.0 || deltas[k] != 1.0 || deltas.windows(2).any(|w| !(w[0] < w[1])) {
                    return bad("ordinal-sum breaks must increase strictly from 0 to 1".into());
                }
                if components.iter().any(|c| c.dim != dim) {
                    return bad("ordinal-sum components must share the dimension".into());
                }
            }
            Family::Khoudraji { base, shapes } => {
                if base.dim != 2 || shapes.iter().any(|s| !(0.0..=1.0).contains(s)) {
                    return bad(format!("Khoudraji shapes {shapes:?} must lie in [0, 1]"));
                }
            }
        }
        Ok(Self { family, dim })
    }

    pub fn independence(dim: usize) -> Self {
        Self::new(Family::Independence, dim).expect("valid")
    }

    pub fn clayton(theta: f64) -> Result<Self> {
        Self::new(Family::Clayton { theta }, 2)
    }

    pub fn gumbel(theta: f64) -> Result<Self> {
        Self::new(Family::Gumbel { theta }, 2)
    }

    pub fn survival_gumbel(theta: f64) -> Result<Self> {
        Self::new(Family::SurvivalGumbel { theta }, 2)
    }

    pub fn gaussian(rho: f64) -> Result<Self> {
        Self::new(Family::Gaussian { rho }, 2)
    }

    pub fn student_t(rho: f64, nu: f64) -> Result<Self> {
        Self::new(Family::StudentT { rho, nu }, 2)
    }

    pub fn cauchy(rho: f64) -> Result<Self> {
        Self::student_t(rho, 1.0)
    }

    pub fn maltese() -> Self {
        Self::new(Family::Maltese, 2).expect("valid")
    }

    pub fn ordinal_sum(deltas: Vec<f64>, components: Vec<Copula>) -> Result<Self> {
        let dim = components.first().map_or(2, |c| c.dim);
        Self::new(Family::OrdinalSum { deltas, components }, dim)
    }

    pub fn khoudraji(base: Copula, s1: f64, s2: f64) -> Result<Self> {
        Self::new(
            Family::Khoudraji {
                base: Box::new(base),
                shapes: [s1, s2],
            },
            2,
        )
    }

    /// Same family in dimension `dim`.
    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        let family = match &self.family {
            Family::OrdinalSum { deltas, components } => Family::OrdinalSum {
                deltas: deltas.clone(),
                components: components
                    .iter()
                    .map(|c| c.with_dim(dim))
                    .collect::<Result<_>>()?,
            },
            f => f.clone(),
        };
        Self::new(family, dim)
    }

    pub fn clayton_theta_from_tau(tau: f64) -> f64 {
        2.0 * tau / (1.0 - tau)
    }

    pub fn gumbel_theta_from_tau(tau: f64) -> f64 {
        1.0 / (1.0 - tau)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check_point(&self, u: &[f64]) {
        assert_eq!(u.len(), self.dim, "point dimension");
    }

    fn require_bivariate(&self, what: &str) -> Result<()> {
        if self.dim == 2 {
            Ok(())
        } else {
            Err(Error::Unsupported(format!("{what} is implemented for d = 2 only")))
        }
    }

    pub fn cdf(&self, u: &[f64]) -> f64 {
        self.check_point(u);
        let u: Vec<f64> = u.iter().map(|x| x.clamp(0.0, 1.0)).collect();
        if u.iter().any(|&x| x == 0.0) {
            return 0.0;
        }
        let c = match &self.family {
            Family::Independence => u.iter().product(),
            Family::Clayton { theta } => {
                let s: f64 = u.iter().map(|x| x.powf(-theta) - 1.0).sum::<f64>() + 1.0;
                s.powf(-1.0 / theta)
            }
            Family::Gumbel { theta } => {
                let s: f64 = u.iter().map(|x| (-x.ln()).powf(*theta)).sum();
                (-s.powf(1.0 / theta)).exp()
            }
            Family::SurvivalGumbel { theta } => {
                let g = Family::Gumbel { theta: *theta };
                let inner = Copula { family: g, dim: self.dim };
                // P(U > 1 - u) by inclusion-exclusion over the coordinates
                let d = self.dim;
                let mut total = 0.0;
                let mut w = vec![1.0; d];
                for mask in 0..(1usize << d) {
                    let mut bits = 0;
                    for j in 0..d {
                        if mask >> j & 1 == 1 {
                            w[j] = 1.0 - u[j];
                            bits += 1;
                        } else {
                            w[j] = 1.0;
                        }
                    }
                    let v = inner.cdf(&w);
                    total += if bits % 2 == 0 { v } else { -v };
                }
                total
            }
            Family::Gaussian { rho } => {
                if u[0] == 1.0 || u[1] == 1.0 {
                    u[0].min(u[1])
                } else {
                    let nd = std_normal();
                    bivariate_normal_cdf(nd.inverse_cdf(u[0]), nd.inverse_cdf(u[1]), *rho)
                }
            }
            Family::StudentT { .. } => {
                if u[0] == 1.0 {
                    u[1]
                } else if u[1] == 1.0 {
                    u[0]
                } else {
                    integrate(|s| self.partial_unchecked(0, &[s, u[1]]), 0.0, u[0], 1e-11)
                }
            }
            Family::Maltese => {
                let (a, b) = (u[0], u[1]);
                if b <= 0.25 {
                    (4.0 * a * b - 3.0 * b).max(0.0)
                } else {
                    (4.0 / 3.0 * a * b - a / 3.0).min(b - 0.25) + (a - 0.75).max(0.0)
                }
            }
            Family::OrdinalSum { deltas, components } => {
                let mut total = 0.0;
                let mut v = vec![0.0; self.dim];
                for (k, comp) in components.iter().enumerate() {
                    let (lo, hi) = (deltas[k], deltas[k + 1]);
                    let len = hi - lo;
                    for j in 0..self.dim {
                        v[j] = ((u[j] - lo) / len).clamp(0.0, 1.0);
                    }
                    total += len * comp.cdf(&v);
                }
                total
            }
            Family::Khoudraji { base, shapes } => {
                let [s1, s2] = *shapes;
                u[0].powf(1.0 - s1) * u[1].powf(1.0 - s2) * base.cdf(&[u[0].powf(s1), u[1].powf(s2)])
            }
        };
        c.clamp(0.0, u.iter().cloned().fold(1.0, f64::min))
    }

    pub fn volume(&self, b: &UnitBox) -> f64 {
        box_volume(|x| self.cdf(x), &b.lower, &b.upper)
    }

    /// `dC/du_j` for bivariate copulas, with the other argument held fixed.
    pub fn partial(&self, j: usize, u: &[f64]) -> Result<f64> {
        self.require_bivariate("partial derivative")?;
        Ok(self.partial_unchecked(j, u))
    }

    /// `P(U2 <= u2 | U1 = u1)`.
    pub fn conditional(&self, u2: f64, u1: f64) -> Result<f64> {
        self.partial(0, &[u1, u2])
    }

    fn partial_unchecked(&self, j: usize, u: &[f64]) -> f64 {
        let (a, b) = if j == 0 { (u[0], u[1]) } else { (u[1], u[0]) };
        let a = a.clamp(1e-300, 1.0);
        let b = b.clamp(0.0, 1.0);
        let p = match &self.family {
            Family::Independence => b,
            Family::Clayton { theta } => {
                if b == 0.0 {
                    0.0
                } else {
                    let s = a.powf(-theta) + b.powf(-theta) - 1.0;
                    (-(theta + 1.0) * a.ln() - (1.0 / theta + 1.0) * s.ln()).exp()
                }
            }
            Family::Gumbel { theta } => gumbel_partial(*theta, a, b),
            Family::SurvivalGumbel { theta } => {
                if a >= 1.0 {
                    b
                } else {
                    1.0 - gumbel_partial(*theta, 1.0 - a, 1.0 - b)
                }
            }
            Family::Gaussian { rho } => {
                let nd = std_normal();
                let (x, y) = (nd.inverse_cdf(a.min(1.0 - 1e-16)), nd.inverse_cdf(b));
                nd.cdf((y - rho * x) / (1.0 - rho * rho).sqrt())
            }
            Family::StudentT { rho, nu } => {
                if b == 0.0 || b == 1.0 {
                    b
                } else {
                    let (x, y) = (t_quantile(a.min(1.0 - 1e-16), *nu), t_quantile(b, *nu));
                    let scale = ((nu + x * x) * (1.0 - rho * rho) / (nu + 1.0)).sqrt();
                    t_cdf((y - rho * x) / scale, nu + 1.0)
                }
            }
            Family::Maltese => {
                if j == 0 {
                    if b <= 0.25 {
                        if a > 0.75 {
                            4.0 * b
                        } else {
                            0.0
                        }
                    } else if a > 0.75 {
                        1.0
                    } else {
                        4.0 / 3.0 * (b - 0.25)
                    }
                } else if a <= 0.25 {
                    (4.0 * b - 3.0).max(0.0)
                } else {
                    (4.0 * b / 3.0).min(1.0)
                }
            }
            Family::OrdinalSum { deltas, components } => {
                let k = block_of(deltas, a);
                let (lo, hi) = (deltas[k], deltas[k + 1]);
                if b <= lo {
                    0.0
                } else if b >= hi {
                    1.0
                } else {
                    let len = hi - lo;
                    let v = [(a - lo) / len, (b - lo) / len];
                    let w = if j == 0 { v } else { [v[1], v[0]] };
                    components[k].partial_unchecked(j, &w)
                }
            }
            Family::Khoudraji { base, shapes } => {
                let (s, t) = if j == 0 { (shapes[0], shapes[1]) } else { (shapes[1], shapes[0]) };
                let (x, y) = (a.powf(s), b.powf(t));
                let arg = if j == 0 { [x, y] } else { [y, x] };
                let bc = base.cdf(&arg);
                let b1 = base.partial_unchecked(j, &arg);
                let q = b.powf(1.0 - t);
                (1.0 - s) * a.powf(-s) * q * bc + a.powf(1.0 - s) * q * b1 * s * a.powf(s - 1.0)
            }
        };
        p.clamp(0.0, 1.0)
    }

    /// Density, an error where it does not exist.
    pub fn density(&self, u: &[f64]) -> Result<f64> {
        self.check_point(u);
        if u.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Ok(0.0);
        }
        match &self.family {
            Family::Independence => Ok(1.0),
            Family::Clayton { theta } => {
                let d = self.dim as f64;
                let s: f64 = u.iter().map(|x| x.powf(-theta) - 1.0).sum::<f64>() + 1.0;
                let mut log = (0..self.dim).map(|k| (k as f64 * theta).ln_1p()).sum::<f64>();
                log += u.iter().map(|x| -(theta + 1.0) * x.ln()).sum::<f64>();
                log -= (1.0 / theta + d) * s.ln();
                Ok(log.exp())
            }
            Family::Gumbel { theta } => {
                self.require_bivariate("Gumbel density")?;
                Ok(gumbel_density(*theta, u[0], u[1]))
            }
            Family::SurvivalGumbel { theta } => {
                self.require_bivariate("survival Gumbel density")?;
                Ok(gumbel_density(*theta, 1.0 - u[0], 1.0 - u[1]))
            }
            Family::Gaussian { rho } => {
                let nd = std_normal();
                let (x, y) = (nd.inverse_cdf(u[0]), nd.inverse_cdf(u[1]));
                let s = 1.0 - rho * rho;
                Ok((-(rho * rho * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * s)).exp() / s.sqrt())
            }
            Family::StudentT { rho, nu } => {
                let (x, y) = (t_quantile(u[0], *nu), t_quantile(u[1], *nu));
                let s = 1.0 - rho * rho;
                let q = (x * x - 2.0 * rho * x * y + y * y) / (nu * s);
                let log2 = ln_gamma(0.5 * (nu + 2.0)) - ln_gamma(0.5 * nu) - (nu * PI).ln()
                    - 0.5 * s.ln()
                    - 0.5 * (nu + 2.0) * q.ln_1p();
                Ok((log2 - t_log_pdf(x, *nu) - t_log_pdf(y, *nu)).exp())
            }
            Family::Maltese => {
                let (a, b) = (u[0], u[1]);
                if a == 0.75 || b == 0.25 {
                    return Err(Error::Precondition(format!(
                        "Maltese density is undefined on the lines u1 = 3/4, u2 = 1/4 (got {a}, {b})"
                    )));
                }
                Ok(match (a < 0.75, b > 0.25) {
                    (true, true) => 4.0 / 3.0,
                    (false, false) => 4.0,
                    _ => 0.0,
                })
            }
            Family::OrdinalSum { deltas, components } => {
                let interior = &deltas[1..deltas.len() - 1];
                if u.iter().any(|x| interior.contains(x)) {
                    return Err(Error::Precondition(format!(
                        "ordinal-sum density is undefined on block boundaries (u = {u:?})"
                    )));
                }
                let k = block_of(deltas, u[0]);
                if u.iter().any(|&x| block_of(deltas, x) != k) {
                    return Ok(0.0);
                }
                let (lo, hi) = (deltas[k], deltas[k + 1]);
                let len = hi - lo;
                let v: Vec<f64> = u.iter().map(|x| (x - lo) / len).collect();
                Ok(components[k].density(&v)? / len.powi(self.dim as i32 - 1))
            }
            Family::Khoudraji { base, shapes } => {
                let [s1, s2] = *shapes;
                let (u1, u2) = (u[0], u[1]);
                let (x, y) = (u1.powf(s1), u2.powf(s2));
                let (p, q) = (u1.powf(1.0 - s1), u2.powf(1.0 - s2));
                let (dp, dq) = ((1.0 - s1) * u1.powf(-s1), (1.0 - s2) * u2.powf(-s2));
                let (dx, dy) = (s1 * u1.powf(s1 - 1.0), s2 * u2.powf(s2 - 1.0));
                let arg = [x, y];
                let bc = base.cdf(&arg);
                let b1 = base.partial_unchecked(0, &arg);
                let b2 = base.partial_unchecked(1, &arg);
                let b12 = if s1 == 0.0 || s2 == 0.0 { 0.0 } else { base.density(&arg)? };
                Ok(dp * dq * bc + dp * q * b2 * dy + p * dq * b1 * dx + p * q * b12 * dx * dy)
            }
        }
    }

    /// One draw into `out`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match &self.family {
            Family::Independence => out.iter_mut().for_each(|x| *x = open_unit(rng)),
            Family::Clayton { theta } => {
                let v: f64 = Gamma::new(1.0 / theta, 1.0).expect("shape > 0").sample(rng);
                for x in out.iter_mut() {
                    let e: f64 = Exp1.sample(rng);
                    *x = (-(e / v).ln_1p() / theta).exp();
                }
            }
            Family::Gumbel { theta } => gumbel_draw(*theta, rng, out),
            Family::SurvivalGumbel { theta } => {
                gumbel_draw(*theta, rng, out);
                out.iter_mut().for_each(|x| *x = 1.0 - *x);
            }
            Family::Gaussian { rho } => {
                let nd = std_normal();
                let z1: f64 = StandardNormal.sample(rng);
                let z2: f64 = StandardNormal.sample(rng);
                out[0] = nd.cdf(z1);
                out[1] = nd.cdf(rho * z1 + (1.0 - rho * rho).sqrt() * z2);
            }
            Family::StudentT { rho, nu } => {
                let z1: f64 = StandardNormal.sample(rng);
                let z2: f64 = StandardNormal.sample(rng);
                let w: f64 = ChiSquared::new(*nu).expect("nu > 0").sample(rng);
                let s = (w / nu).sqrt();
                out[0] = t_cdf(z1 / s, *nu);
                out[1] = t_cdf((rho * z1 + (1.0 - rho * rho).sqrt() * z2) / s, *nu);
            }
            Family::Maltese => {
                let (a, b): (f64, f64) = (rng.random(), rng.random());
                if rng.random::<f64>() < 0.75 {
                    out[0] = 0.75 * a;
                    out[1] = 0.25 + 0.75 * b;
                } else {
                    out[0] = 0.75 + 0.25 * a;
                    out[1] = 0.25 * b;
                }
            }
            Family::OrdinalSum { deltas, components } => {
                let r: f64 = rng.random();
                let k = block_of(deltas, r.max(f64::MIN_POSITIVE));
                components[k].draw(rng, out);
                let (lo, len) = (deltas[k], deltas[k + 1] - deltas[k]);
                out.iter_mut().for_each(|x| *x = lo + len * *x);
            }
            Family::Khoudraji { base, shapes } => {
                base.draw(rng, out);
                for (x, s) in out.iter_mut().zip(shapes) {
                    let w = open_unit(rng);
                    let from_base = if *s > 0.0 { x.powf(1.0 / s) } else { 0.0 };
                    let from_indep = if *s < 1.0 { w.powf(1.0 / (1.0 - s)) } else { 0.0 };
                    *x = from_base.max(from_indep);
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Sample {
        let mut s = Sample::with_capacity(self.dim, n);
        let mut row = vec![0.0; self.dim];
        for _ in 0..n {
            self.draw(rng, &mut row);
            s.push(&row);
        }
        s
    }

    /// Closed-form `(lambda_l, lambda_u)` for bivariate families where known.
    pub fn tail_coefficients(&self) -> Option<(f64, f64)> {
        if self.dim != 2 {
            return None;
        }
        match &self.family {
            Family::Independence | Family::Gaussian { .. } | Family::Maltese => Some((0.0, 0.0)),
            Family::Clayton { theta } => Some((2f64.powf(-1.0 / theta), 0.0)),
            Family::Gumbel { theta } => Some((0.0, 2.0 - 2f64.powf(1.0 / theta))),
            Family::SurvivalGumbel { theta } => Some((2.0 - 2f64.powf(1.0 / theta), 0.0)),
            Family::StudentT { rho, nu } => {
                let arg = -((nu + 1.0) * (1.0 - rho) / (1.0 + rho)).sqrt();
                let l = 2.0 * t_cdf(arg, nu + 1.0);
                Some((l, l))
            }
            Family::OrdinalSum { components, .. } => {
                let l = components.first()?.tail_coefficients()?.0;
                let u = components.last()?.tail_coefficients()?.1;
                Some((l, u))
            }
            Family::Khoudraji { base, shapes } => {
                let [s1, s2] = *shapes;
                match base.family {
                    Family::Gumbel { theta } => {
                        let u = s1 + s2 - (s1.powf(theta) + s2.powf(theta)).powf(1.0 / theta);
                        Some((0.0, u))
                    }
                    _ => None,
                }
            }
        }
    }

    /// Kendall's tau where a closed form is known.
    pub fn kendall_tau(&self) -> Option<f64> {
        match &self.family {
            Family::Independence => Some(0.0),
            Family::Clayton { theta } if self.dim == 2 => Some(theta / (theta + 2.0)),
            Family::Gumbel { theta } | Family::SurvivalGumbel { theta } if self.dim == 2 => {
                Some(1.0 - 1.0 / theta)
            }
            Family::Gaussian { rho } | Family::StudentT { rho, .. } => {
                Some(2.0 / PI * rho.asin())
            }
            _ => None,
        }
    }

    pub fn is_exchangeable(&self) -> bool {
        match &self.family {
            Family::Maltese => false,
            Family::OrdinalSum { components, .. } => components.iter().all(Copula::is_exchangeable),
            Family::Khoudraji { base, shapes } => shapes[0] == shapes[1] && base.is_exchangeable(),
            _ => true,
        }
    }
}

/// Index `k` with `x` in `(delta_k, delta_{k+1}]`; 0 maps to the first block.
pub(crate) fn block_of(deltas: &[f64], x: f64) -> usize {
    let k = deltas.len() - 1;
    deltas[1..k].partition_point(|&d| d < x).min(k - 1)
}

fn gumbel_partial(theta: f64, a: f64, b: f64) -> f64 {
    if b <= 0.0 {
        return 0.0;
    }
    if b >= 1.0 || a >= 1.0 {
        return if a >= 1.0 { if b >= 1.0 { 1.0 } else { 0.0 } } else { 1.0 };
    }
    let (x, y) = (-a.ln(), -b.ln());
    let s = x.powf(theta) + y.powf(theta);
    let big_a = s.powf(1.0 / theta);
    // C * S^(1/theta - 1) * x^(theta - 1) / a
    (-big_a + (1.0 / theta - 1.0) * s.ln() + (theta - 1.0) * x.ln() - a.ln()).exp()
}

fn gumbel_density(theta: f64, a: f64, b: f64) -> f64 {
    let (x, y) = (-a.ln(), -b.ln());
    let s = x.powf(theta) + y.powf(theta);
    let big_a = s.powf(1.0 / theta);
    let log = -big_a + (theta - 1.0) * (x.ln() + y.ln()) + (1.0 / theta - 2.0) * s.ln()
        + (big_a + theta - 1.0).ln()
        + x
        + y;
    log.exp()
}

fn gumbel_draw<R: Rng + ?Sized>(theta: f64, rng: &mut R, out: &mut [f64]) {
    let v = positive_stable(1.0 / theta, rng);
    for x in out.iter_mut() {
        let e: f64 = Exp1.sample(rng);
        *x = (-(e / v).powf(1.0 / theta)).exp();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate2;
    use crate::rng;

    fn families() -> Vec<Copula> {
        vec![
            Copula::independence(2),
            Copula::clayton(14.0 / 3.0).unwrap(),
            Copula::gumbel(2.1383).unwrap(),
            Copula::survival_gumbel(1.0 / 0.3).unwrap(),
            Copula::gaussian(0.7).unwrap(),
            Copula::gaussian(-0.4).unwrap(),
            Copula::cauchy(0.0).unwrap(),
            Copula::student_t(0.5, 4.0).unwrap(),
            Copula::maltese(),
            Copula::ordinal_sum(
                vec![0.0, 0.5, 1.0],
                vec![Copula::gumbel(2.0).unwrap(), Copula::gumbel(3.0).unwrap()],
            )
            .unwrap(),
            Copula::khoudraji(Copula::gumbel(3.0).unwrap(), 0.6, 0.9).unwrap(),
        ]
    }

    #[test]
    fn documented_values() {
        assert!((Copula::independence(2).cdf(&[0.3, 0.4]) - 0.12).abs() < 1e-15);
        let m = Copula::maltese();
        assert!((m.cdf(&[1.0 / 3.0, 0.5]) - 1.0 / 9.0).abs() < 1e-15);
        // mass 4/3 on [0, 3/4] x [1/4, 1] gives 4/3 * 1/2 * 1/12
        assert!((m.cdf(&[0.5, 1.0 / 3.0]) - 1.0 / 18.0).abs() < 1e-15);
        let b = UnitBox::new(vec![0.0, 0.0], vec![0.75, 0.25]).unwrap();
        assert!(m.volume(&b).abs() < 1e-15);
        let b = UnitBox::new(vec![0.25, 0.75], vec![1.0, 1.0]).unwrap();
        assert!((m.volume(&b) - 1.0 / 6.0).abs() < 1e-15);
        let os = &families()[9];
        assert!((os.cdf(&[0.25, 0.75]) - 0.25).abs() < 1e-15);
        let i = Copula::independence(2);
        let b = UnitBox::new(vec![0.2, 0.1], vec![0.5, 0.4]).unwrap();
        assert!((i.volume(&b) - 0.09).abs() < 1e-15);
        let c = Copula::clayton(14.0 / 3.0).unwrap();
        let unit = UnitBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert!((c.volume(&unit) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grounded_with_uniform_margins() {
        for c in families() {
            for i in 0..=20 {
                let u = i as f64 / 20.0;
                assert_eq!(c.cdf(&[0.0, u]), 0.0);
                assert_eq!(c.cdf(&[u, 0.0]), 0.0);
                assert!((c.cdf(&[u, 1.0]) - u).abs() < 1e-9, "{c:?} u={u}");
                assert!((c.cdf(&[1.0, u]) - u).abs() < 1e-9, "{c:?} u={u}");
            }
        }
    }

    #[test]
    fn frechet_bounds_on_grid() {
        for c in families() {
            for i in 0..=100 {
                for j in 0..=100 {
                    let (a, b) = (i as f64 / 100.0, j as f64 / 100.0);
                    let v = c.cdf(&[a, b]);
                    assert!(v >= (a + b - 1.0).max(0.0) - 1e-9 && v <= a.min(b) + 1e-9);
                }
            }
        }
    }

    #[test]
    fn gaussian_density_at_median() {
        let c = Copula::gaussian(0.7).unwrap();
        let expect = 1.0 / (1.0f64 - 0.49).sqrt();
        assert!((c.density(&[0.5, 0.5]).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn density_matches_mixed_difference() {
        let h = 1e-4;
        for c in families() {
            if matches!(c.family(), Family::Maltese) {
                continue;
            }
            for (a, b) in [(0.5, 0.5), (0.3, 0.7), (0.8, 0.6), (0.2, 0.15)] {
                if matches!(c.family(), Family::OrdinalSum { .. }) && (a - 0.5f64).abs() < 2.0 * h {
                    continue;
                }
                let fd = (c.cdf(&[a + h, b + h]) - c.cdf(&[a + h, b - h]) - c.cdf(&[a - h, b + h])
                    + c.cdf(&[a - h, b - h]))
                    / (4.0 * h * h);
                let d = c.density(&[a, b]).unwrap();
                assert!((d - fd).abs() <= 1e-3 * d.max(1.0), "{c:?} ({a},{b}): {d} vs {fd}");
            }
        }
    }

    #[test]
    fn density_integrates_to_one() {
        for c in [
            Copula::clayton(2.0).unwrap(),
            Copula::gumbel(2.0).unwrap(),
            Copula::gaussian(0.5).unwrap(),
            Copula::khoudraji(Copula::gumbel(2.0).unwrap(), 0.5, 0.8).unwrap(),
        ] {
            let total = integrate2(|a, b| c.density(&[a, b]).unwrap(), 0.0, 1.0, 0.0, 1.0, 1e-6);
            assert!((total - 1.0).abs() < 1e-3, "{c:?}: {total}");
        }
        assert!(Copula::maltese().density(&[0.75, 0.5]).is_err());
    }

    #[test]
    fn conditional_matches_difference_quotient() {
        let h = 1e-6;
        for c in families() {
            for (a, b) in [(0.5, 0.5), (0.3, 0.7), (0.6, 0.2), (0.1, 0.9)] {
                if matches!(c.family(), Family::Maltese | Family::OrdinalSum { .. }) && a == 0.5 {
                    continue;
                }
                let fd = (c.cdf(&[a + h, b]) - c.cdf(&[a - h, b])) / (2.0 * h);
                let h1 = c.conditional(b, a).unwrap();
                assert!((h1 - fd).abs() < 1e-4, "{c:?} ({a},{b}): {h1} vs {fd}");
                let fd2 = (c.cdf(&[b, a + h]) - c.cdf(&[b, a - h])) / (2.0 * h);
                let h2 = c.partial(1, &[b, a]).unwrap();
                assert!((h2 - fd2).abs() < 1e-4, "{c:?} ({b},{a}): {h2} vs {fd2}");
            }
        }
    }

    #[test]
    fn khoudraji_limits() {
        let g = Copula::gumbel(2.5).unwrap();
        let same = Copula::khoudraji(g.clone(), 1.0, 1.0).unwrap();
        let indep = Copula::khoudraji(g.clone(), 0.0, 0.0).unwrap();
        for (a, b) in [(0.2, 0.3), (0.7, 0.4), (0.9, 0.95)] {
            assert!((same.cdf(&[a, b]) - g.cdf(&[a, b])).abs() < 1e-15);
            assert!((indep.cdf(&[a, b]) - a * b).abs() < 1e-15);
        }
    }

    #[test]
    fn sampled_kendall_tau() {
        let mut r = rng::seeded(11);
        for (c, tau) in [
            (Copula::clayton(Copula::clayton_theta_from_tau(0.7)).unwrap(), 0.7),
            (Copula::gumbel(2.1383).unwrap(), 1.0 - 1.0 / 2.1383),
        ] {
            assert!((c.kendall_tau().unwrap() - tau).abs() < 1e-12);
            let s = c.sample(4000, &mut r);
            let (x, y) = (s.column(0), s.column(1));
            let mut conc = 0i64;
            for i in 0..x.len() {
                for j in 0..i {
                    conc += ((x[i] - x[j]) * (y[i] - y[j])).signum() as i64;
                }
            }
            let n = x.len() as f64;
            let est = conc as f64 / (n * (n - 1.0) / 2.0);
            assert!((est - tau).abs() < 0.02, "{c:?}: {est}");
        }
    }

    #[test]
    fn samples_match_cdf() {
        let n = 20_000;
        let tol = 3.0 / (n as f64).sqrt();
        let mut r = rng::seeded(5);
        for c in families() {
            let s = c.sample(n, &mut r);
            for &a in &[0.1, 0.3, 0.5, 0.7, 0.9] {
                let marg = s.column(0).iter().filter(|&&x| x <= a).count() as f64 / n as f64;
                assert!((marg - a).abs() < tol, "{c:?}");
                for &b in &[0.2, 0.5, 0.8] {
                    assert!((s.ecdf(&[a, b]) - c.cdf(&[a, b])).abs() < tol, "{c:?} ({a},{b})");
                }
            }
        }
    }

    #[test]
    fn higher_dimensional_archimedean() {
        let c = Copula::new(Family::Clayton { theta: 2.0 }, 3).unwrap();
        assert!((c.cdf(&[0.4, 1.0, 1.0]) - 0.4).abs() < 1e-15);
        let g = Copula::new(Family::SurvivalGumbel { theta: 2.0 }, 3).unwrap();
        assert!((g.cdf(&[1.0, 0.3, 1.0]) - 0.3).abs() < 1e-12);
        let unit = UnitBox::new(vec![0.0; 3], vec![1.0; 3]).unwrap();
        assert!((c.volume(&unit) - 1.0).abs() < 1e-15);
        assert!(Copula::new(Family::Gaussian { rho: 0.2 }, 3).is_err());
    }

    #[test]
    fn json_descriptor() {
        let c: Copula = serde_json::from_str(r#"{"family":"gumbel","theta":2.0}"#).unwrap();
        assert_eq!(c, Copula::gumbel(2.0).unwrap());
        let os: Copula = serde_json::from_str(
            r#"{"family":"ordinal_sum","deltas":[0,0.5,1],
                "components":[{"family":"clayton","theta":1.0},{"family":"independence"}]}"#,
        )
        .unwrap();
        assert_eq!(os.dim(), 2);
        assert!(serde_json::from_str::<Copula>(r#"{"family":"gumbel","theta":0.5}"#).is_err());
    }

    #[test]
    fn tail_closed_forms_match_diagonal() {
        for c in [Copula::clayton(2.0).unwrap(), Copula::gumbel(2.0).unwrap(), Copula::cauchy(0.3).unwrap()] {
            let (l, u) = c.tail_coefficients().unwrap();
            let t = 1e-5;
            let lo = c.cdf(&[t, t]) / t;
            let s = 1.0 - t;
            let hi = (1.0 - 2.0 * s + c.cdf(&[s, s])) / t;
            assert!((lo - l).abs() < 0.01, "{c:?} lower {lo} vs {l}");
            assert!((hi - u).abs() < 0.01, "{c:?} upper {hi} vs {u}");
        }
    }
}
