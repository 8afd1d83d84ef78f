//! Closed-form maps sharing the [`WMap`] interface.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::WMap;
use crate::error::{Error, Result};
use crate::pcsm::PiecewiseLinearMap;

impl WMap for PiecewiseLinearMap {
    fn num_pieces(&self) -> Option<usize> {
        Some(PiecewiseLinearMap::num_pieces(self))
    }

    fn delta(&self, i: usize) -> f64 {
        self.breaks()[i]
    }

    fn is_increasing(&self, k: usize) -> bool {
        self.slopes()[k] > 0.0
    }

    fn eval_piece(&self, k: usize, u: f64) -> f64 {
        self.slopes()[k] * u + self.intercepts()[k]
    }

    fn piece_of(&self, u: f64) -> usize {
        PiecewiseLinearMap::piece_of(self, u)
    }

    fn piece_inverse(&self, k: usize, v: f64) -> f64 {
        let (a, b) = (self.breaks()[k], self.breaks()[k + 1]);
        let (s, c) = (self.slopes()[k], self.intercepts()[k]);
        let (wa, wb) = (s * a + c, s * b + c);
        if s > 0.0 {
            if v <= wa {
                return a;
            }
            if v > wb {
                return b;
            }
        } else {
            if v <= wb {
                return b;
            }
            if v > wa {
                return a;
            }
        }
        ((v - c) / s).clamp(a, b)
    }

    fn piece_derivative(&self, k: usize, _u: f64) -> f64 {
        self.slopes()[k]
    }
}

/// The two-piece map `theta` of the Inn margin: concave increasing on
/// `[0, 1/2]`, then increasing on `(1/2, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InnParams", into = "InnParams")]
pub struct InnTransform {
    theta: f64,
    d: f64,
    a: f64,
}

#[derive(Serialize, Deserialize)]
struct InnParams {
    theta: f64,
}

impl TryFrom<InnParams> for InnTransform {
    type Error = Error;

    fn try_from(p: InnParams) -> Result<Self> {
        InnTransform::new(p.theta)
    }
}

impl From<InnTransform> for InnParams {
    fn from(w: InnTransform) -> Self {
        InnParams { theta: w.theta }
    }
}

impl InnTransform {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::Construction(format!("theta must be positive, got {theta}")));
        }
        // sqrt(theta/2 + 1) - 1 without cancellation
        let d = 0.5 * theta / ((0.5 * theta + 1.0).sqrt() + 1.0);
        Ok(Self {
            theta,
            d,
            a: theta - 2.0 * d,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn d(&self) -> f64 {
        self.d
    }
}

impl WMap for InnTransform {
    fn num_pieces(&self) -> Option<usize> {
        Some(2)
    }

    fn delta(&self, i: usize) -> f64 {
        [0.0, 0.5, 1.0][i]
    }

    fn is_increasing(&self, _k: usize) -> bool {
        true
    }

    fn eval_piece(&self, k: usize, u: f64) -> f64 {
        let (t, d, a) = (self.theta, self.d, self.a);
        let w = if k == 0 {
            t * u / (d * ((t * u + 1.0).sqrt() + 1.0))
        } else {
            let q = a * a + 2.0 * t * d * d * (1.0 - 2.0 * u);
            t * (2.0 * u - 1.0) / (a + q.max(0.0).sqrt())
        };
        w.clamp(0.0, 1.0)
    }

    fn piece_inverse(&self, k: usize, v: f64) -> f64 {
        let v = v.clamp(0.0, 1.0);
        let (t, d, a) = (self.theta, self.d, self.a);
        if k == 0 {
            (d * v * (d * v + 2.0) / t).clamp(0.0, 0.5)
        } else {
            (0.5 + v * (a - d * d * v) / t).clamp(0.5, 1.0)
        }
    }

    fn piece_derivative(&self, k: usize, u: f64) -> f64 {
        let (t, d, a) = (self.theta, self.d, self.a);
        if k == 0 {
            t / (2.0 * d * (t * u + 1.0).sqrt())
        } else {
            t / (a - 2.0 * d * d * self.eval_piece(1, u))
        }
    }
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Generator `G` of a v-transform: increasing, `G(0) = 0`, `G(1) = 1`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum VGenerator {
    /// `G(x) = x`
    Linear,
    /// `G(x) = (4 sqrt(x) - x) / 3`
    Root,
    /// `G(x) = exp(-kappa (-ln x)^xi)`
    ExpPower { kappa: f64, xi: f64 },
    #[serde(skip)]
    Custom { g: RealFn, g_inv: RealFn },
}

impl fmt::Debug for VGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VGenerator::Linear => write!(f, "Linear"),
            VGenerator::Root => write!(f, "Root"),
            VGenerator::ExpPower { kappa, xi } => write!(f, "ExpPower({kappa}, {xi})"),
            VGenerator::Custom { .. } => write!(f, "Custom"),
        }
    }
}

impl VGenerator {
    pub fn custom(
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g_inv: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        VGenerator::Custom {
            g: Arc::new(g),
            g_inv: Arc::new(g_inv),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            VGenerator::Linear => x,
            VGenerator::Root => (4.0 * x.sqrt() - x) / 3.0,
            VGenerator::ExpPower { kappa, xi } => {
                if x <= 0.0 {
                    0.0
                } else {
                    (-kappa * (-x.ln()).powf(*xi)).exp()
                }
            }
            VGenerator::Custom { g, .. } => g(x),
        }
    }

    pub fn inverse(&self, y: f64) -> f64 {
        match self {
            VGenerator::Linear => y,
            VGenerator::Root => (2.0 - (4.0 - 3.0 * y).max(0.0).sqrt()).powi(2),
            VGenerator::ExpPower { kappa, xi } => {
                if y <= 0.0 {
                    0.0
                } else {
                    (-(-y.ln() / kappa).powf(1.0 / xi)).exp()
                }
            }
            VGenerator::Custom { g_inv, .. } => g_inv(y),
        }
    }
}

/// v-transform with fulcrum `delta`: decreasing on `[0, delta]`, increasing
/// after.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VTransform {
    delta: f64,
    generator: VGenerator,
}

impl VTransform {
    pub fn new(delta: f64, generator: VGenerator) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Construction(format!("fulcrum must lie in (0, 1), got {delta}")));
        }
        if let VGenerator::ExpPower { kappa, xi } = generator {
            if !(kappa > 0.0 && xi > 0.0) {
                return Err(Error::Construction(
                    "exp-power generator needs positive kappa and xi".into(),
                ));
            }
        }
        Ok(Self { delta, generator })
    }

    pub fn fulcrum(&self) -> f64 {
        self.delta
    }

    pub fn generator(&self) -> &VGenerator {
        &self.generator
    }
}

impl WMap for VTransform {
    fn num_pieces(&self) -> Option<usize> {
        Some(2)
    }

    fn delta(&self, i: usize) -> f64 {
        [0.0, self.delta, 1.0][i]
    }

    fn is_increasing(&self, k: usize) -> bool {
        k == 1
    }

    fn eval_piece(&self, k: usize, u: f64) -> f64 {
        let d = self.delta;
        let v = if k == 0 {
            (1.0 - u) - (1.0 - d) * self.generator.eval((u / d).clamp(0.0, 1.0))
        } else {
            u - d * self.generator.inverse(((1.0 - u) / (1.0 - d)).clamp(0.0, 1.0))
        };
        v.clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn inn_is_continuous_and_surjective() {
        for theta in [0.5, 20.0, 21.2635, 300.0] {
            let w = InnTransform::new(theta).unwrap();
            assert!((w.eval_piece(0, 0.5) - 1.0).abs() < 1e-12);
            assert!(w.eval_piece(1, 0.5).abs() < 1e-12);
            assert!((w.eval(1.0) - 1.0).abs() < 1e-12);
            for i in 1..100 {
                let u = i as f64 / 100.0;
                let k = w.piece_of(u);
                let v = w.eval(u);
                assert!((w.piece_inverse(k, v) - u).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn inn_matches_displayed_form() {
        let theta: f64 = 20.0;
        let d = (0.5 * theta + 1.0).sqrt() - 1.0;
        let w = InnTransform::new(theta).unwrap();
        for i in 0..=100 {
            let u = i as f64 / 100.0;
            let expect = if u <= 0.5 {
                ((theta * u + 1.0).sqrt() - 1.0) / d
            } else {
                let q = theta * theta - 4.0 * theta * d + 4.0 * d * d + 2.0 * theta * d * d
                    - 4.0 * theta * d * d * u;
                (theta - 2.0 * d - q.sqrt()) / (2.0 * d * d)
            };
            assert!((w.eval(u) - expect).abs() < 1e-12, "u={u}");
        }
    }

    #[test]
    fn inn_small_theta_limit() {
        let w = InnTransform::new(1e-6).unwrap();
        for i in 1..100 {
            let u = i as f64 / 100.0;
            let lin = 2.0 * u - (2.0 * u - 1.0).ceil();
            assert!((w.eval(u) - lin).abs() < 1e-4);
        }
    }

    #[test]
    fn inn_derivative_matches_quotient() {
        let w = InnTransform::new(20.0).unwrap();
        for u in [0.1, 0.3, 0.49, 0.6, 0.9] {
            let k = w.piece_of(u);
            let num = super::super::numeric_piece_derivative(&w, k, u);
            assert!((w.piece_derivative(k, u) - num).abs() < 1e-5 * num.abs());
        }
    }

    #[test]
    fn root_generator_v_transform() {
        let v = fixtures::v_root();
        let p = fixtures::pssm_v();
        for i in 1..=200 {
            let u = i as f64 / 200.0;
            assert!((v.eval(u) - p.eval(u)).abs() < 1e-12, "u={u}");
        }
        assert!((VGenerator::Root.inverse(VGenerator::Root.eval(0.3)) - 0.3).abs() < 1e-14);
    }

    #[test]
    fn linear_map_inverse_conventions() {
        let w = fixtures::v_abs();
        assert_eq!(w.piece_inverse(0, 0.3), 0.35);
        assert_eq!(w.piece_inverse(1, 0.3), 0.65);
        assert_eq!(w.piece_inverse(1, 0.0), 0.5);
        assert_eq!(w.piece_inverse(0, 1.5), 0.0);
    }
}
