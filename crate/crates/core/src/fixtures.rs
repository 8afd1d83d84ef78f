//! Ready-made transforms and models from the worked examples.

use std::f64::consts::SQRT_2;

use crate::copula::Copula;
use crate::dist::{BaseDistribution, DistKind};
use crate::pcsm::{PcsmFunction, Piece, PiecewiseLinearMap};
use crate::wcopula::WTransformedCopula;
use crate::wtransform::{
    GenWTransform, InnTransform, PssmWTransform, Transform, VGenerator, VTransform, WTransform,
};

fn dist(kind: DistKind) -> BaseDistribution {
    BaseDistribution::new(kind).expect("fixture distribution")
}

fn pl(breaks: &[f64], slopes: &[f64], intercepts: &[f64]) -> PiecewiseLinearMap {
    PiecewiseLinearMap::new(breaks.to_vec(), slopes.to_vec(), intercepts.to_vec())
        .expect("fixture map")
}

/// Shuffle of the identity on thirds.
pub fn shuffle_t() -> PcsmFunction {
    PcsmFunction::new(
        vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0],
        vec![
            Piece::linear(-1.0, 1.0),
            Piece::linear(1.0, 0.0),
            Piece::linear(1.0, -2.0 / 3.0),
        ],
    )
    .expect("fixture")
}

pub fn shuffle() -> WTransform {
    WTransform::build(BaseDistribution::uniform01(), shuffle_t()).expect("fixture")
}

pub fn shuffle_map() -> PiecewiseLinearMap {
    pl(
        &[0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0],
        &[-1.0, 1.0, 1.0],
        &[1.0, 0.0, -2.0 / 3.0],
    )
}

/// Interval exchange with irrational rotation `alpha = sqrt(2)/6`.
pub fn nogueira_map() -> PiecewiseLinearMap {
    let a = SQRT_2 / 6.0;
    pl(
        &[0.0, a, 1.0 / 3.0, 2.0 / 3.0, 1.0],
        &[1.0, 1.0, -1.0, -1.0],
        &[2.0 / 3.0 - a, 1.0 / 3.0 - a, 4.0 / 3.0, 1.0],
    )
}

/// Two-sided exponential base with `T = x` then `x - alpha`.
pub fn piecewise_increasing(alpha: f64) -> WTransform {
    let t = PcsmFunction::new(
        vec![0.0, 0.5, 1.0],
        vec![Piece::linear(1.0, 0.0), Piece::linear(1.0, -alpha)],
    )
    .expect("fixture");
    WTransform::build(dist(DistKind::TwoSidedExp), t).expect("fixture")
}

/// `exp(3(x - 1/4)^2)` split at 1/4, then `3/2 - x`, then `1/x`.
pub fn zigzag_t() -> PcsmFunction {
    let bump = Piece::ExpQuad {
        scale: 3.0,
        center: 0.25,
    };
    PcsmFunction::new(
        vec![0.0, 0.25, 1.0 / 3.0, 2.0 / 3.0, 1.0],
        vec![
            bump.clone(),
            bump,
            Piece::linear(-1.0, 1.5),
            Piece::Reciprocal { scale: 1.0 },
        ],
    )
    .expect("fixture")
}

pub fn zigzag() -> WTransform {
    WTransform::build(BaseDistribution::uniform01(), zigzag_t()).expect("fixture")
}

/// Pareto(2) base with `T(x) = x^2 - ceil(x^2) + 1`.
pub fn countable() -> WTransform {
    WTransform::build(
        dist(DistKind::ParetoI { shape: 2.0 }),
        PcsmFunction::frac_square(),
    )
    .expect("fixture")
}

/// `|2u - 1|`
pub fn v_abs() -> PiecewiseLinearMap {
    pl(&[0.0, 0.5, 1.0], &[-2.0, 2.0], &[1.0, -1.0])
}

/// `1 - |2u - 1|`
pub fn tent() -> PiecewiseLinearMap {
    pl(&[0.0, 0.5, 1.0], &[2.0, -2.0], &[0.0, 2.0])
}

/// `|3|u - 2/3| - 1|`
pub fn triple_fold() -> PiecewiseLinearMap {
    pl(
        &[0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0],
        &[-3.0, 3.0, -3.0],
        &[1.0, -1.0, 3.0],
    )
}

/// `u / delta` then `(1 - u) / (1 - delta)`.
pub fn flipped_v(delta: f64) -> PiecewiseLinearMap {
    pl(
        &[0.0, delta, 1.0],
        &[1.0 / delta, -1.0 / (1.0 - delta)],
        &[0.0, 1.0 / (1.0 - delta)],
    )
}

/// Linear v-transform `1 - u/delta` then `(u - delta)/(1 - delta)`.
pub fn linear_v(delta: f64) -> PiecewiseLinearMap {
    pl(
        &[0.0, delta, 1.0],
        &[-1.0 / delta, 1.0 / (1.0 - delta)],
        &[1.0, -delta / (1.0 - delta)],
    )
}

/// `n u - ceil(n u) + 1` with change points `k/n`.
pub fn sawtooth(n: usize) -> PiecewiseLinearMap {
    let breaks: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
    let slopes = vec![n as f64; n];
    let intercepts = (0..n).map(|k| -(k as f64)).collect();
    PiecewiseLinearMap::new(breaks, slopes, intercepts).expect("fixture")
}

/// Three linear pieces with breaks at `theta` and `1 - theta`.
pub fn asymmetric(theta: f64) -> PiecewiseLinearMap {
    pl(
        &[0.0, theta, 1.0 - theta, 1.0],
        &[0.5 / theta, 1.0 / (1.0 - 2.0 * theta), 0.5 / theta],
        &[0.0, -theta / (1.0 - 2.0 * theta), (2.0 * theta - 1.0) / (2.0 * theta)],
    )
}

/// `-4u + 1` then `(4u - 1)/3`.
pub fn maltese_w() -> PiecewiseLinearMap {
    pl(&[0.0, 0.25, 1.0], &[-4.0, 4.0 / 3.0], &[1.0, -1.0 / 3.0])
}

/// Two square-root pieces followed by the identity on `(0.9, 1]`.
pub fn tail_remover() -> WTransform {
    let t = PcsmFunction::new(
        vec![0.0, 0.45, 0.9, 1.0],
        vec![
            Piece::Sqrt {
                a: 5.0,
                b: 0.0,
                c: 0.9,
                d: -0.6,
            },
            Piece::Sqrt {
                a: 20.0,
                b: -9.0,
                c: 0.0,
                d: 0.3,
            },
            Piece::linear(1.0, 0.0),
        ],
    )
    .expect("fixture");
    WTransform::build(BaseDistribution::uniform01(), t).expect("fixture")
}

/// v-transform from the power-law base `x^2` with fulcrum 1/4.
pub fn pssm_v() -> PssmWTransform {
    PssmWTransform::new(
        vec![0.0, 0.5, 1.0],
        vec![0, 1],
        dist(DistKind::PowerLaw { exponent: 2.0 }),
    )
    .expect("fixture")
}

/// Uniform base, five pieces.
pub fn pssm_linear() -> PssmWTransform {
    PssmWTransform::new(
        vec![0.0, 0.1, 0.3, 0.5, 0.7, 1.0],
        vec![0, 1, 0, 0, 1],
        BaseDistribution::uniform01(),
    )
    .expect("fixture")
}

/// Piecewise increasing with unit slope at both ends.
pub fn pssm_kumaraswamy() -> PssmWTransform {
    PssmWTransform::new(
        vec![0.0, 0.1, 0.9, 1.0],
        vec![1, 1, 1],
        dist(DistKind::KumaraswamyLike { a: 0.5 }),
    )
    .expect("fixture")
}

/// McNeil form with generator `(4 sqrt(x) - x) / 3`, fulcrum 1/4.
pub fn v_root() -> VTransform {
    VTransform::new(0.25, VGenerator::Root).expect("fixture")
}

/// McNeil form with generator `exp(-2 sqrt(-ln x))`, fulcrum 0.4.
pub fn v_mcneil() -> VTransform {
    VTransform::new(0.4, VGenerator::ExpPower { kappa: 2.0, xi: 0.5 }).expect("fixture")
}

pub fn inn(theta: f64) -> InnTransform {
    InnTransform::new(theta).expect("fixture")
}

/// `2u - ceil(2u - 1)`
pub fn danube_first_margin() -> PiecewiseLinearMap {
    sawtooth(2)
}

pub fn bernoulli(p: f64) -> BaseDistribution {
    dist(DistKind::Bernoulli { p })
}

/// Bernoulli base, `T(1) < T(0)`.
pub fn bernoulli_reversed(p: f64) -> GenWTransform {
    let t = PcsmFunction::new(vec![0.0, 1.0], vec![Piece::linear(-1.0, 1.0)]).expect("fixture");
    GenWTransform::build(bernoulli(p), t).expect("fixture")
}

/// Bernoulli base, `T(1) = T(0)`.
pub fn bernoulli_tied(p: f64) -> GenWTransform {
    let t = PcsmFunction::new(
        vec![0.0, 0.5, 1.0],
        vec![Piece::linear(-2.0, 1.0), Piece::linear(2.0, -1.0)],
    )
    .expect("fixture");
    GenWTransform::build(bernoulli(p), t).expect("fixture")
}

/// Mixed-type base with `T = |x|` except `T(0) = alpha`.
pub fn mixed_exp(alpha: f64) -> GenWTransform {
    let t = PcsmFunction::new(
        vec![-1.0, 0.0, 1.0],
        vec![Piece::linear(-1.0, 0.0), Piece::linear(1.0, 0.0)],
    )
    .expect("fixture")
    .with_override(0.0, alpha);
    GenWTransform::build(dist(DistKind::MixedExp), t).expect("fixture")
}

/// Atoms 0, 1, 2 with masses 0.2, 0.3, 0.5; `T(0) = T(2)`.
pub fn three_atoms() -> GenWTransform {
    let base = dist(DistKind::Discrete {
        points: vec![0.0, 1.0, 2.0],
        masses: vec![0.2, 0.3, 0.5],
    });
    let t = PcsmFunction::new(
        vec![0.0, 1.0, 2.0],
        vec![Piece::linear(1.0, 0.0), Piece::linear(-1.0, 2.0)],
    )
    .expect("fixture");
    GenWTransform::build(base, t).expect("fixture")
}

/// The ten transforms checked for uniformity preservation.
pub fn uniformity_suite() -> Vec<(&'static str, Transform)> {
    vec![
        ("shuffle", Transform::Generic(shuffle())),
        ("piecewise increasing", Transform::Generic(piecewise_increasing(0.3))),
        ("zig-zag", Transform::Generic(zigzag())),
        ("countable", Transform::Generic(countable())),
        ("pssm v-transform", Transform::Pssm(pssm_v())),
        ("pssm linear", Transform::Pssm(pssm_linear())),
        ("tail remover", Transform::Generic(tail_remover())),
        ("asymmetric 0.45", Transform::Linear(asymmetric(0.45))),
        ("inn 20", Transform::Inn(inn(20.0))),
        ("mixed-type 0.5", Transform::Generalised(mixed_exp(0.5))),
    ]
}

/// Gumbel parameter with upper tail coefficient `lambda`.
pub fn gumbel_for_upper_tail(lambda: f64) -> f64 {
    std::f64::consts::LN_2 / (2.0 - lambda).ln()
}

/// Ordinal sum of Clayton (lower tail 0.5), Gaussian(0.7) and Gumbel (upper
/// tail 0.8) under the Kumaraswamy pssm margins.
pub fn tail_designer() -> WTransformedCopula {
    let w = pssm_kumaraswamy();
    let deltas = vec![0.0, 0.25, 0.75, 1.0];
    let base = Copula::ordinal_sum(
        deltas,
        vec![
            Copula::clayton(1.0).expect("fixture"),
            Copula::gaussian(0.7).expect("fixture"),
            Copula::gumbel(gumbel_for_upper_tail(0.8)).expect("fixture"),
        ],
    )
    .expect("fixture");
    WTransformedCopula::homogeneous(base, Transform::Pssm(w), 2).expect("fixture")
}

/// W-transformed ordinal sum of two Gumbels used for the river data.
pub fn danube_model(alpha1: f64, alpha2: f64, theta: f64) -> WTransformedCopula {
    let base = Copula::ordinal_sum(
        vec![0.0, 0.5, 1.0],
        vec![
            Copula::gumbel(alpha1).expect("fixture"),
            Copula::gumbel(alpha2).expect("fixture"),
        ],
    )
    .expect("fixture");
    WTransformedCopula::new(
        base,
        vec![
            Transform::Linear(danube_first_margin()),
            Transform::Inn(inn(theta)),
        ],
    )
    .expect("fixture")
}
