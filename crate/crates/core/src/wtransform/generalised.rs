//! Generalised W-transforms for bases with atoms, through the modified
//! distribution function `F(x, v) = P(X < x) + v P(X = x)`.

use serde::Serialize;

use crate::dist::BaseDistribution;
use crate::error::{Error, Result};
use crate::pcsm::PcsmFunction;

/// Image of an atom's jump `(F(x-), F(x)]`; the map is affine there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpInterval {
    pub atom: f64,
    pub lo: f64,
    pub hi: f64,
    pub slope: f64,
}

#[derive(Debug, Clone)]
pub struct GenWTransform {
    base: BaseDistribution,
    t: PcsmFunction,
    /// `(location, mass, T(location))`
    atoms: Vec<(f64, f64, f64)>,
}

const TIE: f64 = 1e-14;

impl GenWTransform {
    pub fn build(base: BaseDistribution, t: PcsmFunction) -> Result<Self> {
        let (lo, hi) = base.support();
        let (t0, tk) = t.domain();
        if (lo - t0).abs() > 1e-12 || (hi - tk).abs() > 1e-12 {
            return Err(Error::Construction(format!(
                "support [{lo}, {hi}] of F_X does not match the change points [{t0}, {tk}] of T"
            )));
        }
        if t.num_pieces().is_none() {
            return Err(Error::Unsupported(
                "generalised W-transforms need finitely many pieces".into(),
            ));
        }
        let report = t.validate();
        if !report.is_valid() {
            return Err(Error::Construction(format!(
                "T is not pcsm: {}",
                report.issues.join("; ")
            )));
        }
        let atoms = base
            .atoms()
            .iter()
            .map(|a| Ok((a.location, a.mass, t.eval(a.location)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { base, t, atoms })
    }

    pub fn base(&self) -> &BaseDistribution {
        &self.base
    }

    pub fn transform(&self) -> &PcsmFunction {
        &self.t
    }

    /// Mass of the atomless part on `(a, b]`.
    fn continuous_mass(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let atoms: f64 = self
            .atoms
            .iter()
            .filter(|(x, _, _)| *x > a && *x <= b)
            .map(|(_, m, _)| m)
            .sum();
        (self.base.mass(a, b) - atoms).max(0.0)
    }

    /// `P(T(X) <= y)` restricted to the atomless part of `X`.
    fn continuous_below(&self, y: f64) -> f64 {
        let n = self.t.num_pieces().expect("finite");
        (0..n)
            .map(|k| {
                let (lo, hi) = self.t.piece_range(k);
                let (a, b) = (self.t.change_point(k), self.t.change_point(k + 1));
                if y < lo {
                    0.0
                } else if y >= hi {
                    self.continuous_mass(a, b)
                } else {
                    let x = self.t.piece_inverse_unchecked(k, y);
                    if self.t.is_increasing(k) {
                        self.continuous_mass(a, x)
                    } else {
                        self.continuous_mass(x, b)
                    }
                }
            })
            .sum()
    }

    fn ties(y: f64, z: f64) -> bool {
        (y - z).abs() <= TIE * y.abs().max(1.0)
    }

    /// `(P(T(X) < y), P(T(X) = y))`.
    fn split_at(&self, y: f64) -> (f64, f64) {
        let mut below = self.continuous_below(y);
        let mut at = 0.0;
        for &(_, m, ty) in &self.atoms {
            if Self::ties(ty, y) {
                at += m;
            } else if ty < y {
                below += m;
            }
        }
        (below, at)
    }

    /// Modified distribution function of `T(X)`.
    pub fn transformed_cdf_modified(&self, y: f64, v: f64) -> f64 {
        let (below, at) = self.split_at(y);
        (below + v * at).clamp(0.0, 1.0)
    }

    /// `W_g(u)`; the value at 0 is taken as `W_g(1e-12)`.
    pub fn eval(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        if u == 0.0 {
            return self.eval(1e-12);
        }
        for &(x, m, ty) in &self.atoms {
            let left = self.base.cdf_left(x);
            if left <= u && u <= left + m {
                let v = ((u - left) / m).clamp(0.0, 1.0);
                return self.transformed_cdf_modified(ty, v);
            }
        }
        let x = self.base.quantile(u).unwrap_or(f64::NAN);
        let y = self.t.eval(x).unwrap_or(f64::NAN);
        self.transformed_cdf_modified(y, 1.0)
    }

    pub fn jump_intervals(&self) -> Vec<JumpInterval> {
        self.atoms
            .iter()
            .map(|&(x, m, ty)| {
                let shared: f64 = self
                    .atoms
                    .iter()
                    .filter(|(_, _, tz)| Self::ties(ty, *tz))
                    .map(|(_, mz, _)| mz)
                    .sum();
                let lo = self.base.cdf_left(x);
                JumpInterval {
                    atom: x,
                    lo,
                    hi: lo + m,
                    slope: shared / m,
                }
            })
            .collect()
    }
}
