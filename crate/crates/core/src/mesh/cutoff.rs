use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::CylinderSpec;

/// Smoothstep `3s^2 - 2s^3` has slope at most 3/2 on `[0, 1]`.
pub const SLOPE: f64 = 1.5;

fn smoothstep(s: f64) -> (f64, f64) {
    let s = s.clamp(0.0, 1.0);
    (s * s * (3.0 - 2.0 * s), 6.0 * s * (1.0 - s))
}

/// Cutoff `eta(x, t) = phi(|x - x0|) chi(t)`, equal to 1 on `Q_rho` and
/// vanishing near the lateral and bottom boundary of `Q_R`.
///
/// With `e >= 1`, `R^e - rho^e >= (R - rho)^e`, so `|grad eta| <= 1.5/(R - rho)` and
/// `|eta_t| <= 1.5/(R - rho)^e`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffFn {
    pub center: Vec<f64>,
    pub t0: f64,
    pub rho: f64,
    pub radius: f64,
    pub time_exponent: f64,
}

impl CutoffFn {
    pub fn new(outer: &CylinderSpec, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < outer.radius) {
            return Err(Error::InvalidParams(format!(
                "inner radius {rho} must lie in (0, {})",
                outer.radius
            )));
        }
        Ok(CutoffFn {
            center: outer.center.clone(),
            t0: outer.t0,
            rho,
            radius: outer.radius,
            time_exponent: outer.time_exponent,
        })
    }

    fn spatial(&self, r: f64) -> (f64, f64) {
        let w = self.radius - self.rho;
        let (q, dq) = smoothstep((r - self.rho) / w);
        (1.0 - q, -dq / w)
    }

    fn temporal(&self, t: f64) -> (f64, f64) {
        let a = self.t0 - self.radius.powf(self.time_exponent);
        let b = self.t0 - self.rho.powf(self.time_exponent);
        let (q, dq) = smoothstep((t - a) / (b - a));
        (q, dq / (b - a))
    }

    fn radius_of(&self, x: &[f64; 3]) -> f64 {
        self.center
            .iter()
            .enumerate()
            .map(|(a, c)| (x[a] - c).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn value(&self, x: &[f64; 3], t: f64) -> f64 {
        self.spatial(self.radius_of(x)).0 * self.temporal(t).0
    }

    pub fn gradient(&self, x: &[f64; 3], t: f64) -> [f64; 3] {
        let r = self.radius_of(x);
        let mut g = [0.0; 3];
        if r == 0.0 {
            return g;
        }
        let s = self.spatial(r).1 * self.temporal(t).0 / r;
        for (a, c) in self.center.iter().enumerate() {
            g[a] = s * (x[a] - c);
        }
        g
    }

    pub fn time_derivative(&self, x: &[f64; 3], t: f64) -> f64 {
        self.spatial(self.radius_of(x)).0 * self.temporal(t).1
    }

    /// `1.5/(R - rho)`.
    pub fn gradient_bound(&self) -> f64 {
        SLOPE / (self.radius - self.rho)
    }

    /// `1.5/(R - rho)^e`.
    pub fn time_derivative_bound(&self) -> f64 {
        SLOPE / (self.radius - self.rho).powf(self.time_exponent)
    }
}
