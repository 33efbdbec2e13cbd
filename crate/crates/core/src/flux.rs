//! Radial fluxes `A(Q) = F'(|Q|) Q/|Q|` and right-hand sides `f(u, grad u)`.
//!
//! `Q` is an `N x n` gradient sample flattened component-major, `|Q|` its
//! Frobenius norm. The derivative of a radial flux has two eigenvalues:
//! `F''(|Q|)` along `Q` and `F'(|Q|)/|Q|` on the orthogonal complement.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Grid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FluxKind {
    PurePLaplace,
    DoublePower,
    RegularizedPLaplace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxSpec {
    pub kind: FluxKind,
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default)]
    pub eps: f64,
}

impl FluxSpec {
    pub fn p_laplace(p: f64) -> Self {
        FluxSpec {
            kind: FluxKind::PurePLaplace,
            p,
            q: None,
            eps: 0.0,
        }
    }

    pub fn double_power(p: f64, q: f64) -> Self {
        FluxSpec {
            kind: FluxKind::DoublePower,
            p,
            q: Some(q),
            eps: 0.0,
        }
    }

    pub fn regularized(p: f64, eps: f64) -> Self {
        FluxSpec {
            kind: FluxKind::RegularizedPLaplace,
            p,
            q: None,
            eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(self.p > 1.0) || !self.p.is_finite() {
            return bad(format!("flux exponent p = {} must exceed 1", self.p));
        }
        match self.kind {
            FluxKind::DoublePower => match self.q {
                Some(q) if q > 1.0 && q.is_finite() => {}
                Some(q) => return bad(format!("flux exponent q = {q} must exceed 1")),
                None => return bad("DoublePower needs q".into()),
            },
            _ if self.q.is_some() => return bad(format!("{:?} takes no q", self.kind)),
            _ => {}
        }
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return bad(format!("eps = {} must be >= 0", self.eps));
        }
        if self.kind != FluxKind::RegularizedPLaplace && self.eps != 0.0 {
            return bad(format!("{:?} takes no eps", self.kind));
        }
        if self.kind == FluxKind::RegularizedPLaplace && self.p < 2.0 && self.eps == 0.0 {
            return bad("RegularizedPLaplace with p < 2 needs eps > 0".into());
        }
        Ok(())
    }

    /// The `q` of the growth window; `p` for the single-power kinds.
    pub fn q_or_p(&self) -> f64 {
        self.q.unwrap_or(self.p)
    }

    /// True when the flux is defined at `Q = 0`.
    pub fn regular_at_zero(&self) -> bool {
        match self.kind {
            FluxKind::PurePLaplace => self.p >= 2.0,
            FluxKind::DoublePower => self.p >= 2.0 && self.q_or_p() >= 2.0,
            FluxKind::RegularizedPLaplace => self.eps > 0.0 || self.p >= 2.0,
        }
    }

    /// Ellipticity constants `(lambda, Lambda)` of the window this flux realizes.
    pub fn ellipticity(&self) -> (f64, f64) {
        let p1 = self.p - 1.0;
        match self.kind {
            FluxKind::PurePLaplace | FluxKind::RegularizedPLaplace => (p1.min(1.0), p1.max(1.0)),
            FluxKind::DoublePower => {
                let q1 = self.q_or_p() - 1.0;
                let l = p1.min(1.0).min(1.0 / p1.max(1.0)).min(1.0 / q1.max(1.0));
                (l, 1.0 / l)
            }
        }
    }

    fn singular(&self) -> Error {
        Error::Singular { p: self.p }
    }

    /// `F'(t)/t` as a function of `t^2`.
    pub fn tangential(&self, t2: f64) -> Result<f64> {
        if t2 == 0.0 && !self.regular_at_zero() {
            return Err(self.singular());
        }
        Ok(match self.kind {
            FluxKind::PurePLaplace => pow_half(t2, self.p - 2.0),
            FluxKind::DoublePower => pow_half(t2, self.p - 2.0) + pow_half(t2, self.q_or_p() - 2.0),
            FluxKind::RegularizedPLaplace => pow_half(self.eps * self.eps + t2, self.p - 2.0),
        })
    }

    /// `(F''(t), F'(t)/t)` as functions of `t^2`.
    pub fn eigenvalues(&self, t2: f64) -> Result<(f64, f64)> {
        let tan = self.tangential(t2)?;
        let rad = match self.kind {
            FluxKind::PurePLaplace => (self.p - 1.0) * tan,
            FluxKind::DoublePower => {
                let q = self.q_or_p();
                (self.p - 1.0) * pow_half(t2, self.p - 2.0) + (q - 1.0) * pow_half(t2, q - 2.0)
            }
            FluxKind::RegularizedPLaplace => {
                let e2 = self.eps * self.eps;
                pow_half(e2 + t2, self.p - 4.0) * (e2 + (self.p - 1.0) * t2)
            }
        };
        Ok((rad, tan))
    }

    /// Writes `A(Q)` into `out` and returns the largest eigenvalue of `dA/dQ` at `Q`.
    pub fn apply(&self, q: &[f64], out: &mut [f64]) -> Result<f64> {
        let t2: f64 = q.iter().map(|v| v * v).sum();
        let (rad, tan) = self.eigenvalues(t2)?;
        for (o, v) in out.iter_mut().zip(q) {
            *o = tan * v;
        }
        Ok(if q.len() > 1 { rad.max(tan) } else { rad })
    }
}

/// `s^(e/2)` with `0^0 = 1`.
fn pow_half(s: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if e == 2.0 {
        s
    } else {
        s.powf(0.5 * e)
    }
}

/// `A(Q)`.
pub fn flux_eval(spec: &FluxSpec, q: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; q.len()];
    spec.apply(q, &mut out)?;
    Ok(out)
}

/// Analytic `dA_a/dQ_b`, row-major `m x m` with `m = q.len()`.
pub fn jacobian(spec: &FluxSpec, q: &[f64]) -> Result<Vec<f64>> {
    let m = q.len();
    let t2: f64 = q.iter().map(|v| v * v).sum();
    let (rad, tan) = spec.eigenvalues(t2)?;
    let mut j = vec![0.0; m * m];
    for a in 0..m {
        j[a * m + a] = tan;
        if t2 > 0.0 {
            for b in 0..m {
                j[a * m + b] += (rad - tan) * q[a] * q[b] / t2;
            }
        }
    }
    Ok(j)
}

/// Extreme Rayleigh quotients of `dA/dQ` at `Q`.
pub fn flux_jacobian_bounds(spec: &FluxSpec, q: &[f64]) -> Result<(f64, f64)> {
    let t2: f64 = q.iter().map(|v| v * v).sum();
    let (rad, tan) = spec.eigenvalues(t2)?;
    if q.len() == 1 {
        return Ok((rad, rad));
    }
    Ok((rad.min(tan), rad.max(tan)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RhsKind {
    PowerAligned,
    PowerFixedDir,
    StruweCoupling,
    Zero,
    Manufactured,
}

/// Nodal source values on a grid at a list of times, interpolated linearly in time.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceTable {
    pub grid: Arc<Grid>,
    pub components: usize,
    pub times: Vec<f64>,
    /// One node-major, component-minor array per time.
    pub values: Vec<Vec<f64>>,
}

impl SourceTable {
    pub fn new(grid: Arc<Grid>, components: usize, times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        let len = grid.node_count() * components;
        if times.is_empty() || times.len() != values.len() || values.iter().any(|v| v.len() != len) {
            return Err(Error::InvalidParams("source table shape mismatch".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParams("source table times must increase".into()));
        }
        Ok(SourceTable {
            grid,
            components,
            times,
            values,
        })
    }

    pub fn eval_node(&self, node: usize, t: f64, out: &mut [f64]) {
        let n = self.times.len();
        let (k, s) = if n == 1 || t <= self.times[0] {
            (0, 0.0)
        } else if t >= self.times[n - 1] {
            (n - 2, 1.0)
        } else {
            let k = self.times.partition_point(|&tk| tk <= t) - 1;
            (k, (t - self.times[k]) / (self.times[k + 1] - self.times[k]))
        };
        let c = self.components;
        let a = &self.values[k][node * c..(node + 1) * c];
        if s == 0.0 {
            out.copy_from_slice(a);
            return;
        }
        let b = &self.values[k + 1][node * c..(node + 1) * c];
        for i in 0..c {
            out[i] = (1.0 - s) * a[i] + s * b[i];
        }
    }

    fn node_at(&self, x: &[f64; 3]) -> usize {
        let shape = self.grid.shape();
        let mut c = [0usize; 3];
        for a in 0..self.grid.dim() {
            let i = (x[a] / self.grid.h(a)).round().max(0.0) as usize;
            c[a] = i % shape[a];
        }
        self.grid.index_of(c)
    }
}

pub const DEFAULT_DELTA_U: f64 = 1e-8;

fn default_delta_u() -> f64 {
    DEFAULT_DELTA_U
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhsSpec {
    pub kind: RhsKind,
    #[serde(default)]
    pub w: f64,
    #[serde(default)]
    pub c1: f64,
    #[serde(default)]
    pub c2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
    #[serde(default = "default_delta_u")]
    pub delta_u: f64,
    #[serde(skip)]
    pub source: Option<Arc<SourceTable>>,
}

impl RhsSpec {
    pub fn zero() -> Self {
        RhsSpec {
            kind: RhsKind::Zero,
            w: 0.0,
            c1: 0.0,
            c2: 0.0,
            direction: None,
            delta_u: DEFAULT_DELTA_U,
            source: None,
        }
    }

    pub fn power_aligned(w: f64, c1: f64, c2: f64) -> Self {
        RhsSpec {
            kind: RhsKind::PowerAligned,
            w,
            c1,
            c2,
            ..RhsSpec::zero()
        }
    }

    pub fn power_fixed_dir(w: f64, c1: f64, c2: f64, direction: Vec<f64>) -> Self {
        RhsSpec {
            kind: RhsKind::PowerFixedDir,
            w,
            c1,
            c2,
            direction: Some(direction),
            ..RhsSpec::zero()
        }
    }

    pub fn struwe() -> Self {
        RhsSpec {
            kind: RhsKind::StruweCoupling,
            w: 2.0,
            ..RhsSpec::zero()
        }
    }

    pub fn manufactured(source: SourceTable) -> Self {
        RhsSpec {
            kind: RhsKind::Manufactured,
            source: Some(Arc::new(source)),
            ..RhsSpec::zero()
        }
    }

    pub fn validate(&self, components: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(self.c1 >= 0.0 && self.c2 >= 0.0) || !self.c1.is_finite() || !self.c2.is_finite() {
            return bad("rhs amplitudes c1, c2 must be finite and >= 0".into());
        }
        if !(self.w >= 0.0) || !self.w.is_finite() {
            return bad(format!("rhs exponent w = {} must be >= 0", self.w));
        }
        if !(self.delta_u > 0.0) {
            return bad("delta_u must be positive".into());
        }
        match self.kind {
            RhsKind::PowerFixedDir => {
                let d = self
                    .direction
                    .as_ref()
                    .ok_or_else(|| Error::InvalidParams("PowerFixedDir needs a direction".into()))?;
                let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                if d.len() != components || (norm - 1.0).abs() > 1e-12 {
                    return bad(format!("direction must be a unit {components}-vector"));
                }
            }
            RhsKind::Manufactured => match &self.source {
                Some(s) if s.components == components => {}
                Some(_) => return bad("source table has the wrong component count".into()),
                None => return bad("Manufactured rhs needs a source table".into()),
            },
            _ => {}
        }
        Ok(())
    }

    /// Evaluates `f` at one node. `grad_sq` is `|grad u|^2`; `node` indexes the
    /// source table when there is one.
    pub fn eval_into(&self, node: Option<usize>, u: &[f64], grad_sq: f64, x: &[f64; 3], t: f64, out: &mut [f64]) {
        match self.kind {
            RhsKind::Zero => out.fill(0.0),
            RhsKind::PowerAligned => {
                let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt().max(self.delta_u);
                let g = self.c1 * pow_half(grad_sq, self.w) / norm;
                for (o, ui) in out.iter_mut().zip(u) {
                    *o = g * ui + self.c2;
                }
            }
            RhsKind::PowerFixedDir => {
                let g = self.c1 * pow_half(grad_sq, self.w);
                let d = self.direction.as_deref().unwrap_or(&[]);
                for (o, di) in out.iter_mut().zip(d) {
                    *o = g * di + self.c2;
                }
            }
            RhsKind::StruweCoupling => {
                for (o, ui) in out.iter_mut().zip(u) {
                    *o = ui * grad_sq;
                }
            }
            RhsKind::Manufactured => match &self.source {
                Some(s) => s.eval_node(node.unwrap_or_else(|| s.node_at(x)), t, out),
                None => out.fill(0.0),
            },
        }
    }
}

/// `f(u, grad u, x, t)`; `grad` is the `N x n` sample.
pub fn rhs_eval(spec: &RhsSpec, u: &[f64], grad: &[f64], x: &[f64; 3], t: f64) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    let g2 = grad.iter().map(|v| v * v).sum();
    spec.eval_into(None, u, g2, x, t, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * y.abs().max(1.0))
    }

    #[test]
    fn flux_examples() {
        let q = [0.3, -1.2, 0.7, 2.0, 0.1, -0.4];
        assert_eq!(flux_eval(&FluxSpec::p_laplace(2.0), &q).unwrap(), q.to_vec());
        let q2 = [2.0, 0.0, 0.0];
        let v = flux_eval(&FluxSpec::p_laplace(3.0), &q2).unwrap();
        assert!(close(&v, &[4.0, 0.0, 0.0], 1e-15));
        let q1 = [0.6, 0.0, 0.8];
        let v = flux_eval(&FluxSpec::double_power(2.0, 3.0), &q1).unwrap();
        assert!(close(&v, &[1.2, 0.0, 1.6], 1e-15));
        assert_eq!(flux_eval(&FluxSpec::p_laplace(3.0), &[0.0; 3]).unwrap(), vec![0.0; 3]);
        assert!(matches!(flux_eval(&FluxSpec::p_laplace(1.5), &[0.0; 3]), Err(Error::Singular { .. })));
        assert!(flux_eval(&FluxSpec::regularized(1.5, 0.1), &[0.0; 3]).is_ok());
    }

    /// Hand differentiation of `F(t) = t^p/p` and `t^p/p + t^q/q`.
    #[test]
    fn jacobian_bound_examples() {
        for &p in &[1.5, 2.0, 2.5, 4.0] {
            let q = [0.3, 0.4, 1.2];
            let t: f64 = 1.3;
            let (lo, hi) = flux_jacobian_bounds(&FluxSpec::p_laplace(p), &q).unwrap();
            let s = t.powf(p - 2.0);
            assert!((lo - (p - 1.0).min(1.0) * s).abs() < 1e-14 * s);
            assert!((hi - (p - 1.0).max(1.0) * s).abs() < 1e-14 * s);
        }
        assert_eq!(flux_jacobian_bounds(&FluxSpec::p_laplace(2.0), &[0.1, 0.2]).unwrap(), (1.0, 1.0));
        let b = flux_jacobian_bounds(&FluxSpec::double_power(2.0, 4.0), &[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(b, (2.0, 4.0));
    }

    #[test]
    fn regularized_eigenvalues_at_zero() {
        let f = FluxSpec::regularized(1.5, 0.2);
        let (r, t) = f.eigenvalues(0.0).unwrap();
        let e = 0.2f64.powf(-0.5);
        assert!((r - e).abs() < 1e-14 && (t - e).abs() < 1e-14);
    }

    #[test]
    fn rhs_examples() {
        let x = [0.0; 3];
        assert_eq!(rhs_eval(&RhsSpec::zero(), &[1.0, 2.0], &[3.0; 6], &x, 0.0), vec![0.0, 0.0]);
        let r = RhsSpec::power_fixed_dir(1.5, 1.0, 0.0, vec![1.0, 0.0, 0.0]);
        let g = [4.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(rhs_eval(&r, &[0.1, 0.2, 0.3], &g, &x, 0.0), vec![8.0, 0.0, 0.0]);
        // u = x/|x| at |x| = 1: grad u = I - x x^T, |grad u|^2 = n - 1.
        let xs = [0.48, 0.6, 0.64];
        let mut grad = [0.0; 9];
        for i in 0..3 {
            for a in 0..3 {
                grad[i * 3 + a] = if i == a { 1.0 } else { 0.0 } - xs[i] * xs[a];
            }
        }
        let f = rhs_eval(&RhsSpec::struwe(), &xs, &grad, &xs, 0.0);
        assert!(close(&f, &[0.96, 1.2, 1.28], 1e-14), "{f:?}");
    }

    #[test]
    fn power_aligned_is_finite_at_zero() {
        let r = RhsSpec::power_aligned(1.3, 2.0, 0.5);
        let f = rhs_eval(&r, &[0.0, 0.0], &[1.0; 6], &[0.0; 3], 0.0);
        assert_eq!(f, vec![0.5, 0.5]);
    }

    #[test]
    fn validation() {
        assert!(FluxSpec::regularized(1.5, 0.0).validate().is_err());
        assert!(FluxSpec::p_laplace(1.0).validate().is_err());
        assert!(FluxSpec::double_power(2.0, 0.5).validate().is_err());
        assert!(FluxSpec::p_laplace(1.5).validate().is_ok());
        assert!(RhsSpec::power_fixed_dir(1.0, 1.0, 0.0, vec![1.0, 1.0]).validate(2).is_err());
        assert!(RhsSpec::power_aligned(1.0, -1.0, 0.0).validate(1).is_err());
        assert!(RhsSpec { kind: RhsKind::Manufactured, ..RhsSpec::zero() }.validate(1).is_err());
    }

    fn any_flux() -> impl Strategy<Value = FluxSpec> {
        prop_oneof![
            (1.2f64..4.0).prop_map(FluxSpec::p_laplace),
            (1.2f64..4.0, 1.2f64..4.0).prop_map(|(p, q)| FluxSpec::double_power(p, q)),
            (1.2f64..4.0, 0.0f64..1.0).prop_map(|(p, e)| FluxSpec::regularized(p, if p < 2.0 { e + 0.05 } else { e })),
        ]
    }

    fn sample(m: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-2.0f64..2.0, m).prop_filter("away from 0", |q| q.iter().map(|v| v * v).sum::<f64>() > 1e-2)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn jacobian_matches_finite_differences(spec in any_flux(), q in sample(6)) {
            let j = jacobian(&spec, &q).unwrap();
            let scale = j.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            // central differences: error ~ h^2 |A'''|, h ~ cbrt(eps) balances rounding
            let h = 6e-6;
            for b in 0..6 {
                let (mut qp, mut qm) = (q.clone(), q.clone());
                qp[b] += h;
                qm[b] -= h;
                let (fp, fm) = (flux_eval(&spec, &qp).unwrap(), flux_eval(&spec, &qm).unwrap());
                for a in 0..6 {
                    let fd = (fp[a] - fm[a]) / (2.0 * h);
                    prop_assert!((fd - j[a * 6 + b]).abs() <= 1e-6 * scale, "entry ({a},{b}): {fd} vs {}", j[a * 6 + b]);
                }
            }
        }

        #[test]
        fn rayleigh_bounds_match_eigen_decomposition(spec in any_flux(), q in sample(6)) {
            let j = DMatrix::from_row_slice(6, 6, &jacobian(&spec, &q).unwrap());
            let eig = j.symmetric_eigen().eigenvalues;
            let (lo, hi) = flux_jacobian_bounds(&spec, &q).unwrap();
            let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!((min - lo).abs() <= 1e-10 * hi && (max - hi).abs() <= 1e-10 * hi);
        }

        #[test]
        fn p_laplace_window_is_exact(p in 1.1f64..5.0, q in sample(9)) {
            let spec = FluxSpec::p_laplace(p);
            let (l, big_l) = spec.ellipticity();
            let s = q.iter().map(|v| v * v).sum::<f64>().powf(0.5 * (p - 2.0));
            let (lo, hi) = flux_jacobian_bounds(&spec, &q).unwrap();
            prop_assert!((lo - l * s).abs() <= 1e-13 * s && (hi - big_l * s).abs() <= 1e-13 * s);
        }

        #[test]
        fn double_power_lies_in_growth_window(p in 1.2f64..4.0, qq in 1.2f64..4.0, q in sample(4)) {
            let spec = FluxSpec::double_power(p, qq);
            let (l, _) = spec.ellipticity();
            let t2: f64 = q.iter().map(|v| v * v).sum();
            let (lo, hi) = flux_jacobian_bounds(&spec, &q).unwrap();
            let sp = t2.powf(0.5 * (p - 2.0));
            let sq = t2.powf(0.5 * (qq - 2.0));
            prop_assert!(lo >= l * sp * (1.0 - 1e-12));
            prop_assert!(hi <= (sp + sq) / l * (1.0 + 1e-12));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn flux_is_monotone(
            spec in prop_oneof![
                (1.2f64..4.0).prop_map(FluxSpec::p_laplace),
                (1.2f64..4.0, 1.2f64..4.0).prop_map(|(p, q)| FluxSpec::double_power(p, q)),
                (1.2f64..4.0, 0.0f64..1.0).prop_map(|(p, e)| FluxSpec::regularized(p.max(2.0), e)),
                (1.2f64..2.0, 0.01f64..1.0).prop_map(|(p, e)| FluxSpec::regularized(p, e)),
            ],
            a in sample(6),
            b in sample(6),
        ) {
            let (fa, fb) = (flux_eval(&spec, &a).unwrap(), flux_eval(&spec, &b).unwrap());
            let dot: f64 = (0..6).map(|i| (fa[i] - fb[i]) * (a[i] - b[i])).sum();
            let scale: f64 = (0..6).map(|i| (fa[i] - fb[i]).abs() * (a[i] - b[i]).abs()).sum();
            prop_assert!(dot >= -1e-12 * scale);
        }

        #[test]
        fn rhs_respects_growth_bound(
            kind in 0usize..4,
            w in 0.0f64..3.0,
            c1 in 0.0f64..3.0,
            c2 in 0.0f64..2.0,
            u in prop::collection::vec(-2.0f64..2.0, 3),
            grad in prop::collection::vec(-3.0f64..3.0, 9),
            dir in prop::collection::vec(-1.0f64..1.0, 3).prop_filter("nonzero", |d| d.iter().map(|v| v * v).sum::<f64>() > 1e-3),
        ) {
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            let dir: Vec<f64> = dir.iter().map(|v| v / norm).collect();
            let (spec, c1, w) = match kind {
                0 => (RhsSpec::power_aligned(w, c1, c2), c1, w),
                1 => (RhsSpec::power_fixed_dir(w, c1, c2, dir), c1, w),
                2 => (RhsSpec::struwe(), u.iter().fold(0.0f64, |m, v| m.max(v.abs())), 2.0),
                _ => (RhsSpec::zero(), 0.0, 0.0),
            };
            let c2 = if kind >= 2 { 0.0 } else { c2 };
            let f = rhs_eval(&spec, &u, &grad, &[0.0; 3], 0.0);
            let g = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
            let bound = c1 * g.powf(w) + c2;
            for fi in f {
                prop_assert!(fi.is_finite());
                prop_assert!(fi.abs() <= bound * (1.0 + 1e-12) + 1e-300);
            }
        }
    }

    #[test]
    fn source_table_interpolates_in_time() {
        let g = Arc::new(Grid::cube(2, 4, 1.0, crate::mesh::Boundary::Periodic).unwrap());
        let n = g.node_count();
        let t = SourceTable::new(g, 1, vec![0.0, 1.0], vec![vec![1.0; n], vec![3.0; n]]).unwrap();
        let r = RhsSpec::manufactured(t);
        assert_eq!(rhs_eval(&r, &[0.0], &[0.0, 0.0], &[0.25, 0.5, 0.0], 0.25), vec![1.5]);
        assert_eq!(rhs_eval(&r, &[0.0], &[0.0, 0.0], &[0.25, 0.5, 0.0], 2.0), vec![3.0]);
    }
}
