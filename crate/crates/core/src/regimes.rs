//! Admissibility arithmetic for the gradient-bound theorems.
//!
//! Everything here is plain double-precision arithmetic on user-supplied
//! exponents. Boundary comparisons are exact: a strict inequality rejects its
//! boundary value with no epsilon slack.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponents and constants that decide which theorem (if any) applies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    /// Spatial dimension.
    pub n: usize,
    /// Number of system components.
    pub components: usize,
    /// Growth exponent of the main part.
    pub p: f64,
    /// Upper ellipticity exponent; equal to `p` for p-Laplacian-like fluxes.
    pub q: f64,
    /// Gradient growth exponent of the right-hand side.
    pub w: f64,
    /// Known integrability exponent of the gradient.
    pub p_tilde: f64,
    /// Seed exponent of the iteration.
    pub s0: f64,
    /// Lower ellipticity constant.
    pub lambda: f64,
    /// Upper ellipticity constant.
    #[serde(rename = "Lambda")]
    pub lambda_upper: f64,
    /// Whether the additive constant of the growth bound vanishes.
    pub c2_zero: bool,
}

impl ProblemParams {
    /// p-Laplacian defaults: `q = p`, `p_tilde = p`, `s0 = 0`, ellipticity
    /// constants of `|Q|^{p-2} Q`, and a purely power-law right-hand side.
    pub fn p_laplace(n: usize, components: usize, p: f64, w: f64) -> Self {
        ProblemParams {
            n,
            components,
            p,
            q: p,
            w,
            p_tilde: p,
            s0: 0.0,
            lambda: (p - 1.0).min(1.0),
            lambda_upper: (p - 1.0).max(1.0),
            c2_zero: true,
        }
    }

    pub fn with_q(mut self, q: f64) -> Self {
        self.q = q;
        self
    }

    pub fn with_s0(mut self, s0: f64) -> Self {
        self.s0 = s0;
        self
    }

    pub fn with_p_tilde(mut self, p_tilde: f64) -> Self {
        self.p_tilde = p_tilde;
        self
    }

    pub fn with_ellipticity(mut self, lambda: f64, lambda_upper: f64) -> Self {
        self.lambda = lambda;
        self.lambda_upper = lambda_upper;
        self
    }

    pub fn with_c2_zero(mut self, c2_zero: bool) -> Self {
        self.c2_zero = c2_zero;
        self
    }

    /// Checks the structural invariants. Theorem windows (`q < p + 1`,
    /// `w <= p`, `n >= 3`) are not checked here; they are reported as
    /// violated conditions by the theorem checks.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        let reals = [
            self.p,
            self.q,
            self.w,
            self.p_tilde,
            self.s0,
            self.lambda,
            self.lambda_upper,
        ];
        if reals.iter().any(|v| !v.is_finite()) {
            return bad("all exponents and constants must be finite");
        }
        if self.n < 2 {
            return bad("n must be at least 2");
        }
        if self.components < 1 {
            return bad("need at least one component");
        }
        if self.p <= 1.0 {
            return bad("p must exceed 1");
        }
        if self.q < self.p {
            return bad("q must be at least p");
        }
        if self.w < 0.0 {
            return bad("w must be nonnegative");
        }
        if self.p_tilde < self.p {
            return bad("p_tilde must be at least p");
        }
        if self.lambda <= 0.0 {
            return bad("lambda must be positive");
        }
        if self.lambda > self.lambda_upper {
            return bad("lambda must not exceed Lambda");
        }
        Ok(())
    }
}

/// Which theorem covers a parameter set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    Thm1Case1,
    Thm1Case2,
    Thm1Case3,
    Thm2,
    Thm3,
    NotCovered,
}

impl Theorem {
    pub fn is_covered(self) -> bool {
        self != Theorem::NotCovered
    }
}

/// A named hypothesis that can fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// `n >= 3`, needed by the critical Sobolev exponent `2n/(n-2)`.
    Dimension,
    /// `s0 >= 0`.
    S0Nonneg,
    /// `s0 + 2 + n(p - M)/2 > 0`.
    KappaPositive,
    /// `s0 > p - 2` when `c2 != 0`, `s0 > p - 2w - 2` otherwise.
    S0VsC2,
    /// `q < p + 1`.
    QWindow,
    /// `w <= p`.
    WLeP,
    /// `s0 > -lambda/Lambda`.
    S0VsEllipticity,
    /// `s0 > p - 2w - 2`.
    S0VsGrowth,
    /// None of the three cases of the headline theorem applies.
    Thm1Cases,
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::Dimension => "dimension",
            Condition::S0Nonneg => "s0_nonneg",
            Condition::KappaPositive => "kappa_positive",
            Condition::S0VsC2 => "s0_vs_c2",
            Condition::QWindow => "q_window",
            Condition::WLeP => "w_le_p",
            Condition::S0VsEllipticity => "s0_vs_ellipticity",
            Condition::S0VsGrowth => "s0_vs_growth",
            Condition::Thm1Cases => "thm1_cases",
        }
    }
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub theorem_applied: Theorem,
    #[serde(rename = "M")]
    pub m: f64,
    pub s0_effective: f64,
    pub kappa: f64,
    pub violated_conditions: Vec<Condition>,
}

impl RegimeReport {
    fn from_checks(theorem: Theorem, m: f64, s0: f64, kappa: f64, checks: &[(Condition, bool)]) -> Self {
        let violated: Vec<Condition> = checks
            .iter()
            .filter(|(_, ok)| !ok)
            .map(|(c, _)| *c)
            .collect();
        RegimeReport {
            theorem_applied: if violated.is_empty() {
                theorem
            } else {
                Theorem::NotCovered
            },
            m,
            s0_effective: s0,
            kappa,
            violated_conditions: violated,
        }
    }

    pub fn is_covered(&self) -> bool {
        self.theorem_applied.is_covered()
    }
}

/// `s0 + 2 + n(p - M)/2`, the denominator of the final bound exponent.
pub fn kappa(s0: f64, p: f64, m: f64, n: usize) -> f64 {
    s0 + 2.0 + n as f64 * (p - m) / 2.0
}

/// `max(2, p, 2q - p, w + 1, 2w - p + 2)`.
pub fn compute_m_general(params: &ProblemParams) -> f64 {
    let ProblemParams { p, q, w, .. } = *params;
    [2.0, p, 2.0 * q - p, w + 1.0, 2.0 * w - p + 2.0]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `max(2, p, w + 1, 2w - p + 2)`; only meaningful for `q = p`.
pub fn compute_m_plaplace(params: &ProblemParams) -> Result<f64> {
    if params.q != params.p {
        return Err(Error::InvalidParams(format!(
            "p-Laplacian exponent needs q = p (got p = {}, q = {})",
            params.p, params.q
        )));
    }
    Ok(m_plaplace(params.p, params.w))
}

fn m_plaplace(p: f64, w: f64) -> f64 {
    [2.0, p, w + 1.0, 2.0 * w - p + 2.0]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// General-flux theorem with the `q`-term in the ellipticity window.
pub fn check_thm2(params: &ProblemParams) -> RegimeReport {
    let ProblemParams {
        n, p, q, w, s0, c2_zero, ..
    } = *params;
    let m = compute_m_general(params);
    let k = kappa(s0, p, m, n);
    let c2_ok = if c2_zero {
        s0 > p - 2.0 * w - 2.0
    } else {
        s0 > p - 2.0
    };
    let checks = [
        (Condition::Dimension, n >= 3),
        (Condition::QWindow, q < p + 1.0),
        (Condition::WLeP, w <= p),
        (Condition::S0Nonneg, s0 >= 0.0),
        (Condition::KappaPositive, k > 0.0),
        (Condition::S0VsC2, c2_ok),
    ];
    RegimeReport::from_checks(Theorem::Thm2, m, s0, k, &checks)
}

/// p-Laplacian-window theorem; admits negative seeds down to `-lambda/Lambda`.
pub fn check_thm3(params: &ProblemParams) -> Result<RegimeReport> {
    let m = compute_m_plaplace(params)?;
    let ProblemParams {
        n, p, w, s0, lambda, lambda_upper, ..
    } = *params;
    let k = kappa(s0, p, m, n);
    let checks = [
        (Condition::Dimension, n >= 3),
        (Condition::WLeP, w <= p),
        (Condition::S0VsEllipticity, s0 > -lambda / lambda_upper),
        (Condition::S0VsGrowth, s0 > p - 2.0 * w - 2.0),
        (Condition::KappaPositive, k > 0.0),
    ];
    Ok(RegimeReport::from_checks(Theorem::Thm3, m, s0, k, &checks))
}

/// Three-dimensional p-Laplace system with `|f| <= |grad u|^w`.
///
/// Cases are tried in order 1, 2, 3; the first match wins. Cases 2 and 3 use
/// the seed `s0 = p_tilde - M` with `M = max(2, 2w - p + 2)`. Case 1 rests on
/// the homogeneous-growth theory and is reported with `s0 = 0` and
/// `M = max(2, p, w + 1, 2w - p + 2)`.
pub fn classify_thm1(p: f64, w: f64, p_tilde: f64) -> RegimeReport {
    const N: usize = 3;
    let m_red = 2.0f64.max(2.0 * w - p + 2.0);
    let s0_red = p_tilde - m_red;

    if w <= p - 1.0 && p_tilde == p {
        let m = m_plaplace(p, w);
        return RegimeReport {
            theorem_applied: Theorem::Thm1Case1,
            m,
            s0_effective: 0.0,
            kappa: kappa(0.0, p, m, N),
            violated_conditions: vec![],
        };
    }

    // kappa = s0 + 2 + 3(p - M)/2 reduces to 5 (threshold - w) in case 2 and
    // to 3/2 (p - threshold) in case 3; evaluating it through the threshold
    // difference keeps its sign consistent with the case test.
    let case2_threshold = (p_tilde + 4.0 * p - 3.0) / 5.0;
    if w >= p / 2.0 && w < case2_threshold {
        return RegimeReport {
            theorem_applied: Theorem::Thm1Case2,
            m: m_red,
            s0_effective: s0_red,
            kappa: 5.0 * (case2_threshold - w),
            violated_conditions: vec![],
        };
    }

    let case3_threshold = 2.0 - 2.0 * p_tilde / 3.0;
    if w <= p / 2.0 && p > case3_threshold {
        return RegimeReport {
            theorem_applied: Theorem::Thm1Case3,
            m: m_red,
            s0_effective: s0_red,
            kappa: 1.5 * (p - case3_threshold),
            violated_conditions: vec![],
        };
    }

    RegimeReport {
        theorem_applied: Theorem::NotCovered,
        m: m_red,
        s0_effective: s0_red,
        kappa: kappa(s0_red, p, m_red, N),
        violated_conditions: vec![Condition::Thm1Cases],
    }
}

/// Supremum of case-2 growth exponents: `(p_tilde + 4p - 3)/5`.
pub fn thm1_case2_threshold(p: f64, p_tilde: f64) -> f64 {
    (p_tilde + 4.0 * p - 3.0) / 5.0
}

/// Applies the p-Laplacian-window theorem when `q = p`, then the general one.
///
/// Returns the first covering report; if neither covers, returns the failed
/// report of the first theorem tried.
pub fn assess(params: &ProblemParams) -> RegimeReport {
    if params.q == params.p {
        let r3 = check_thm3(params).expect("q = p checked");
        if r3.is_covered() {
            return r3;
        }
        let r2 = check_thm2(params);
        if r2.is_covered() {
            return r2;
        }
        r3
    } else {
        check_thm2(params)
    }
}

/// Moser exponent ladder `s_{i+1} + M = p + s_i + (s_i + 2) 2/n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentLadder {
    pub beta: f64,
    pub s: Vec<f64>,
    pub ratios: Vec<f64>,
    pub limit: f64,
    #[serde(rename = "I")]
    pub len: usize,
    #[serde(skip)]
    m: f64,
}

impl ExponentLadder {
    /// `s_i + M`, the integrability exponent at level `i`.
    pub fn exponent(&self, i: usize) -> f64 {
        self.s[i] + self.m
    }

    /// `beta^i / (s_i + M)` for `i = 0..=I`; tends to `1/kappa`.
    pub fn bound_exponents(&self) -> Vec<f64> {
        self.s
            .iter()
            .enumerate()
            .map(|(i, s)| self.beta.powi(i as i32) / (s + self.m))
            .collect()
    }
}

fn ladder_pre(s0: f64, p: f64, m: f64, n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidParams(format!("ladder needs n >= 3, got {n}")));
    }
    let k = kappa(s0, p, m, n);
    if !(k > 0.0) {
        return Err(Error::KappaNonPositive(k));
    }
    Ok(k)
}

/// Iterates the recursion `levels` times starting from `s0`.
pub fn build_ladder(s0: f64, p: f64, m: f64, n: usize, levels: usize) -> Result<ExponentLadder> {
    let k = ladder_pre(s0, p, m, n)?;
    if levels < 1 {
        return Err(Error::InvalidParams("ladder length must be at least 1".into()));
    }
    let step = 2.0 / n as f64;
    let beta = 1.0 + step;
    let mut s = Vec::with_capacity(levels + 1);
    s.push(s0);
    for i in 0..levels {
        let si = s[i];
        s.push(p + si + (si + 2.0) * step - m);
    }
    let ratios = s
        .iter()
        .enumerate()
        .map(|(i, si)| si / beta.powi(i as i32))
        .collect();
    Ok(ExponentLadder {
        beta,
        s,
        ratios,
        limit: k,
        len: levels,
        m,
    })
}

/// Closed form of the ladder: `beta^i (s0 + k') - k'` with `k' = 2 + n(p - M)/2`.
pub fn ladder_closed_form(s0: f64, p: f64, m: f64, n: usize, i: usize) -> f64 {
    let beta = 1.0 + 2.0 / n as f64;
    let kp = 2.0 + n as f64 * (p - m) / 2.0;
    beta.powi(i as i32) * (s0 + kp) - kp
}

/// Exponent `1/kappa` of the integral in the final gradient bound.
pub fn bound_exponent(s0: f64, p: f64, m: f64, n: usize) -> Result<f64> {
    let k = kappa(s0, p, m, n);
    if !(k > 0.0) {
        return Err(Error::KappaNonPositive(k));
    }
    Ok(1.0 / k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(n: usize, p: f64, q: f64, w: f64, s0: f64) -> ProblemParams {
        ProblemParams::p_laplace(n, 3, p, w).with_q(q).with_s0(s0)
    }

    #[test]
    fn m_general_examples() {
        assert_eq!(compute_m_general(&params(3, 2.0, 2.0, 1.0, 0.0)), 2.0);
        assert_eq!(compute_m_general(&params(3, 2.0, 2.5, 2.0, 0.0)), 4.0);
        assert_eq!(compute_m_general(&params(3, 3.0, 3.5, 1.0, 0.0)), 4.0);
    }

    #[test]
    fn m_plaplace_examples() {
        assert_eq!(compute_m_plaplace(&params(3, 2.0, 2.0, 1.0, 0.0)).unwrap(), 2.0);
        assert_eq!(compute_m_plaplace(&params(3, 2.0, 2.0, 1.8, 0.0)).unwrap(), 2.0 * 1.8);
        assert_eq!(compute_m_plaplace(&params(3, 2.5, 2.5, 0.5, 0.0)).unwrap(), 2.5);
        assert!(compute_m_plaplace(&params(3, 2.0, 2.5, 1.0, 0.0)).is_err());
    }

    #[test]
    fn m_plaplace_reduces_for_small_p() {
        for &(p, w) in &[(1.5, 0.2), (1.5, 1.5), (2.0, 1.3), (1.2, 0.9)] {
            let m = compute_m_plaplace(&params(3, p, p, w, 0.0)).unwrap();
            assert_eq!(m, 2.0f64.max(2.0 * w - p + 2.0));
        }
    }

    #[test]
    fn thm2_examples() {
        let r = check_thm2(&params(3, 2.0, 2.0, 1.0, 0.0).with_c2_zero(false));
        assert_eq!(r.theorem_applied, Theorem::NotCovered);
        assert_eq!(r.violated_conditions, vec![Condition::S0VsC2]);

        let r = check_thm2(&params(3, 2.0, 2.0, 1.0, 0.5));
        assert_eq!(r.theorem_applied, Theorem::Thm2);
        assert_eq!(r.m, 2.0);
        assert_eq!(r.kappa, 2.5);

        let r = check_thm2(&params(3, 2.0, 2.9, 1.0, 0.0));
        assert!((r.m - 3.8).abs() < 1e-15);
        assert!((r.kappa + 0.7).abs() < 1e-12);
        assert_eq!(r.theorem_applied, Theorem::NotCovered);
        assert!(r.violated_conditions.contains(&Condition::KappaPositive));
    }

    #[test]
    fn thm2_rejects_two_dimensions_and_wide_q() {
        let r = check_thm2(&params(2, 2.0, 2.0, 1.0, 0.5));
        assert_eq!(r.violated_conditions, vec![Condition::Dimension]);
        let r = check_thm2(&params(3, 2.0, 3.0, 0.0, 10.0));
        assert!(r.violated_conditions.contains(&Condition::QWindow));
    }

    #[test]
    fn thm3_examples() {
        let r = check_thm3(&params(3, 2.0, 2.0, 2.0, -0.5)).unwrap();
        assert!(!r.violated_conditions.contains(&Condition::S0VsEllipticity));
        assert!(!r.violated_conditions.contains(&Condition::S0VsGrowth));

        let r = check_thm3(&params(3, 2.0, 2.0, 2.0, -1.0)).unwrap();
        assert_eq!(r.theorem_applied, Theorem::NotCovered);
        assert!(r.violated_conditions.contains(&Condition::S0VsEllipticity));

        let r = check_thm3(&params(3, 2.0, 2.0, 1.5, 0.0)).unwrap();
        assert_eq!(r.theorem_applied, Theorem::Thm3);
        assert_eq!(r.m, 3.0);
        assert_eq!(r.kappa, 0.5);

        assert!(check_thm3(&params(3, 2.0, 2.5, 1.0, 0.0)).is_err());
    }

    #[test]
    fn thm1_examples() {
        assert_eq!(classify_thm1(2.0, 1.0, 2.0).theorem_applied, Theorem::Thm1Case1);
        let r = classify_thm1(2.0, 1.39, 2.0);
        assert_eq!(r.theorem_applied, Theorem::Thm1Case2);
        assert!(r.kappa > 0.0);
        assert_eq!(thm1_case2_threshold(2.0, 2.0), 1.4);
        assert_eq!(classify_thm1(2.0, 1.4, 2.0).theorem_applied, Theorem::NotCovered);
        assert_eq!(classify_thm1(1.2, 0.5, 1.2).theorem_applied, Theorem::NotCovered);
        assert_eq!(classify_thm1(1.3, 0.5, 1.3).theorem_applied, Theorem::Thm1Case3);
    }

    #[test]
    fn thm1_case2_reports_seed_and_kappa() {
        let r = classify_thm1(2.0, 1.3, 2.0);
        assert_eq!(r.theorem_applied, Theorem::Thm1Case2);
        assert!((r.m - 2.6).abs() < 1e-15);
        assert!((r.s0_effective + 0.6).abs() < 1e-15);
        assert!((r.kappa - 0.5).abs() < 1e-14);
        // The same seed through the general p-Laplacian check.
        let r3 = check_thm3(&params(3, 2.0, 2.0, 1.3, r.s0_effective)).unwrap();
        assert_eq!(r3.theorem_applied, Theorem::Thm3);
        assert!((r3.kappa - r.kappa).abs() < 1e-14);
    }

    #[test]
    fn thm1_just_below_threshold_is_case2_with_positive_kappa() {
        for &p in &[1.6, 2.0, 2.5, 3.0] {
            let thr = thm1_case2_threshold(p, p);
            let below = f64::from_bits(thr.to_bits() - 1);
            let r = classify_thm1(p, below, p);
            assert_eq!(r.theorem_applied, Theorem::Thm1Case2, "p = {p}");
            assert!(r.kappa > 0.0);
            assert_eq!(classify_thm1(p, thr, p).theorem_applied, Theorem::NotCovered);
        }
    }

    #[test]
    fn boundary_strictness() {
        // s0 >= 0 admits 0, kappa > 0 rejects 0.
        let r = check_thm2(&params(3, 2.0, 2.0, 1.0, 0.0));
        assert_eq!(r.theorem_applied, Theorem::Thm2);
        // kappa exactly zero: s0 = 1, p = 2, M = 4 (q = 3 excluded) use w: M = 2w = 4 at w = 2.
        let r = check_thm2(&params(3, 2.0, 2.0, 2.0, 1.0));
        assert_eq!(r.kappa, 0.0);
        assert!(r.violated_conditions.contains(&Condition::KappaPositive));
        // c2 = 0 branch boundary: s0 = p - 2w - 2 with s0 = 0 needs w = 0, p = 2.
        let r = check_thm2(&params(3, 2.0, 2.0, 0.0, 0.0));
        assert!(r.violated_conditions.contains(&Condition::S0VsC2));
        // q = p + 1 is excluded.
        let r = check_thm2(&params(3, 2.0, 3.0, 1.0, 0.5));
        assert!(r.violated_conditions.contains(&Condition::QWindow));
        // Negative seed exactly at -lambda/Lambda.
        let pr = params(3, 2.5, 2.5, 2.0, 0.0);
        let pr = pr.clone().with_s0(-pr.lambda / pr.lambda_upper);
        let r = check_thm3(&pr).unwrap();
        assert!(r.violated_conditions.contains(&Condition::S0VsEllipticity));
        // Seed exactly at p - 2w - 2.
        let r = check_thm3(&params(3, 2.0, 2.0, 0.2, 2.0 - 2.0 * 0.2 - 2.0)).unwrap();
        assert!(r.violated_conditions.contains(&Condition::S0VsGrowth));
        // Case 3 at p = 2 - 2/3 p_tilde.
        assert_eq!(classify_thm1(1.2, 0.5, 1.2).theorem_applied, Theorem::NotCovered);
    }

    #[test]
    fn assess_prefers_thm3_then_thm2() {
        let r = assess(&params(3, 2.0, 2.0, 1.3, -0.6));
        assert_eq!(r.theorem_applied, Theorem::Thm3);
        let r = assess(&params(3, 2.0, 2.4, 1.0, 0.5));
        assert_eq!(r.theorem_applied, Theorem::Thm2);
        let r = assess(&params(2, 2.0, 2.0, 1.0, 0.5));
        assert_eq!(r.violated_conditions, vec![Condition::Dimension]);
    }

    #[test]
    fn ladder_small_example() {
        let l = build_ladder(0.0, 2.0, 2.0, 3, 3).unwrap();
        let expect = [0.0, 4.0 / 3.0, 32.0 / 9.0, 196.0 / 27.0];
        for (a, b) in l.s.iter().zip(expect) {
            assert!((a - b).abs() <= 1e-15 * b.abs().max(1.0));
        }
        assert_eq!(l.limit, 2.0);
        assert!((l.beta - 5.0 / 3.0).abs() < 1e-15);
        assert!(build_ladder(0.0, 2.0, 4.0, 3, 3).is_err());
        assert!(build_ladder(0.0, 2.0, 2.0, 2, 3).is_err());
    }

    #[test]
    fn ladder_first_step() {
        for &(s0, p, m, n) in &[(0.3, 2.0, 2.0, 3), (1.0, 2.5, 3.0, 4), (-0.5, 2.0, 2.4, 3)] {
            let l = build_ladder(s0, p, m, n, 1).unwrap();
            let kp = 2.0 + n as f64 * (p - m) / 2.0;
            let d = l.s[1] - l.s[0];
            assert!((d - 2.0 / n as f64 * (s0 + kp)).abs() < 1e-14);
        }
    }

    #[test]
    fn bound_exponent_examples() {
        assert_eq!(bound_exponent(0.0, 2.0, 2.0, 3).unwrap(), 0.5);
        for n in 3..8 {
            assert!((bound_exponent(1.0, 2.7, 2.7, n).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(bound_exponent(0.5, 2.0, 3.0, 3).unwrap(), 1.0);
        assert!(bound_exponent(0.0, 2.0, 4.0, 3).is_err());
    }

    #[test]
    fn report_serializes_with_expected_keys() {
        let r = check_thm3(&params(3, 2.0, 2.0, 1.5, 0.0)).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        for k in ["theorem_applied", "M", "kappa", "s0_effective", "violated_conditions"] {
            assert!(v.get(k).is_some(), "{k}");
        }
        assert_eq!(v["theorem_applied"], "Thm3");
    }

    proptest! {
        #[test]
        fn general_m_dominates_plaplace_m(p in 1.01f64..4.0, dq in 0.0f64..0.99, w in 0.0f64..4.0) {
            let w = w.min(p);
            let pr = params(3, p, p + dq, w, 0.0);
            let pl = params(3, p, p, w, 0.0);
            prop_assert!(compute_m_general(&pr) >= compute_m_plaplace(&pl).unwrap());
            prop_assert!(compute_m_general(&pr) >= 2.0);
        }

        #[test]
        fn case2_is_downward_closed(p in 1.1f64..4.0, extra in 0.0f64..3.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let pt = p + extra;
            let lo = p / 2.0;
            let hi = thm1_case2_threshold(p, pt);
            prop_assume!(hi > lo);
            let w = lo + a * (hi - lo);
            let w2 = lo + b * (w - lo);
            let r = classify_thm1(p, w, pt);
            let r2 = classify_thm1(p, w2, pt);
            if r.theorem_applied == Theorem::Thm1Case2 {
                prop_assert!(r2.is_covered());
            }
        }

        #[test]
        fn covered_reports_have_positive_kappa(p in 1.01f64..4.0, w in 0.0f64..4.0, extra in 0.0f64..3.0, s0 in -1.0f64..3.0) {
            let w = w.min(p);
            let r = classify_thm1(p, w, p + extra);
            if r.is_covered() {
                prop_assert!(r.kappa > 0.0);
                prop_assert!(r.violated_conditions.is_empty());
            }
            let r = assess(&params(3, p, p, w, s0));
            if r.is_covered() {
                prop_assert!(r.kappa > 0.0);
            }
        }
    }
}
