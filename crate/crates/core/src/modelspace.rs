//! Radial geometry of the model spaces of constant curvature −κ².
//!
//! Every radial function `u(ρ)` on the model space, with `ρ` the geodesic
//! distance from a fixed point, satisfies `|∇ρ| = 1` and
//! `Δρ = (n−1)·ct_κ(ρ)`. All radial calculus below is built on those two
//! identities.
//!
//! Radial profiles carry an exponential envelope `e^{−σt}` that is stripped
//! from the stored derivatives, so that profiles such as `φ(t)e^{−st}` can be
//! evaluated at radii where `e^{−st}` underflows and `sinh^{n−1}` overflows.

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::error::{invalid, GapError, Result};

/// The model space 𝐌ⁿ with sectional curvature −κ².
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelSpace {
    n: usize,
    kappa: f64,
}

impl ModelSpace {
    pub fn new(n: usize, kappa: f64) -> Result<Self> {
        if n < 2 {
            return Err(invalid("n", format!("dimension must be at least 2, got {n}")));
        }
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(invalid("kappa", format!("must be finite and >= 0, got {kappa}")));
        }
        Ok(Self { n, kappa })
    }

    pub fn euclidean(n: usize) -> Result<Self> {
        Self::new(n, 0.0)
    }

    pub fn hyperbolic(n: usize, kappa: f64) -> Result<Self> {
        if kappa <= 0.0 {
            return Err(invalid("kappa", "hyperbolic space needs kappa > 0"));
        }
        Self::new(n, kappa)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn is_euclidean(&self) -> bool {
        self.kappa == 0.0
    }

    /// Dimension as a float, convenient in formulas.
    pub fn dim(&self) -> f64 {
        self.n as f64
    }

    /// `Δρ = (n−1)·ct_κ(t)`, the radial drift of the Laplacian.
    pub fn drift(&self, t: f64) -> Result<f64> {
        Ok((self.dim() - 1.0) * ct_kappa(t, self.kappa)?)
    }

    /// Derivatives `L^{(i)}(t)`, `i = 0..=order`, of the drift `L = (n−1)ct_κ`.
    pub fn drift_derivatives(&self, t: f64, out: &mut [f64]) -> Result<()> {
        if !(t > 0.0) {
            return Err(GapError::NonPositiveRadius(t));
        }
        let m = self.dim() - 1.0;
        if self.kappa == 0.0 {
            // d^i/dt^i (1/t) = (−1)^i i! / t^{i+1}
            let mut factor = m / t;
            for (i, slot) in out.iter_mut().enumerate() {
                *slot = factor;
                factor *= -((i + 1) as f64) / t;
            }
            return Ok(());
        }
        let k = self.kappa;
        let x = k * t;
        let c = 1.0 / x.tanh();
        let q = if x > 350.0 { 0.0 } else { (1.0 / x.sinh()).powi(2) };
        let table = coth_derivative_table();
        let mut scale = m * k;
        for (i, slot) in out.iter_mut().enumerate() {
            let terms = table.get(i).ok_or(GapError::Smoothness {
                needed: i,
                available: table.len() - 1,
            })?;
            let mut acc = 0.0;
            for &(a, b, coef) in terms {
                acc += coef * c.powi(a) * q.powi(b);
            }
            *slot = scale * acc;
            scale *= k;
        }
        Ok(())
    }

    /// Polar-coordinate density: `t^{n−1}` or `sinh^{n−1}(κt)/κ^{n−1}`.
    pub fn volume_weight(&self, t: f64) -> Result<f64> {
        volume_weight(t, self)
    }

    /// Natural log of the volume weight, finite for all `t > 0`.
    pub fn ln_volume_weight(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(GapError::NonPositiveRadius(t));
        }
        let m = self.dim() - 1.0;
        if self.kappa == 0.0 {
            Ok(m * t.ln())
        } else {
            Ok(m * (ln_sinh(self.kappa * t) - self.kappa.ln()))
        }
    }
}

impl fmt::Display for ModelSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_euclidean() {
            write!(f, "R^{}", self.n)
        } else {
            write!(f, "H^{}(kappa={})", self.n, self.kappa)
        }
    }
}

/// `ln sinh(x)` for `x > 0` without overflow.
pub(crate) fn ln_sinh(x: f64) -> f64 {
    if x < 20.0 {
        x.sinh().ln()
    } else {
        x - std::f64::consts::LN_2 + (-(-2.0 * x).exp()).ln_1p()
    }
}

/// Derivatives of `coth(x)` as polynomials in `c = coth x` and `q = csch² x`.
/// Entry `i` lists `(a, b, coef)` with `coth^{(i)} = Σ coef·c^a·q^b`.
fn coth_derivative_table() -> &'static [Vec<(i32, i32, f64)>] {
    static TABLE: OnceLock<Vec<Vec<(i32, i32, f64)>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // dc/dx = −q, dq/dx = −2cq
        let mut table = vec![vec![(1, 0, 1.0)]];
        for _ in 0..24 {
            let prev = table.last().unwrap();
            let mut next: Vec<(i32, i32, f64)> = Vec::new();
            let mut push = |a: i32, b: i32, coef: f64| {
                if coef == 0.0 {
                    return;
                }
                match next.iter_mut().find(|(x, y, _)| *x == a && *y == b) {
                    Some(entry) => entry.2 += coef,
                    None => next.push((a, b, coef)),
                }
            };
            for &(a, b, coef) in prev {
                if a > 0 {
                    push(a - 1, b + 1, -(a as f64) * coef);
                }
                if b > 0 {
                    push(a + 1, b, -2.0 * (b as f64) * coef);
                }
            }
            table.push(next);
        }
        table
    })
}

/// The comparison function: `1/t` for κ = 0 and `κ·coth(κt)` for κ > 0.
pub fn ct_kappa(t: f64, kappa: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(GapError::NonPositiveRadius(t));
    }
    if kappa < 0.0 {
        return Err(invalid("kappa", "must be >= 0"));
    }
    if kappa == 0.0 {
        Ok(1.0 / t)
    } else {
        Ok(kappa / (kappa * t).tanh())
    }
}

pub fn volume_weight(t: f64, space: &ModelSpace) -> Result<f64> {
    if !(t > 0.0) {
        return Err(GapError::NonPositiveRadius(t));
    }
    let e = (space.n - 1) as i32;
    if space.kappa == 0.0 {
        Ok(t.powi(e))
    } else {
        Ok(((space.kappa * t).sinh() / space.kappa).powi(e))
    }
}

/// Evaluator filling `out[j] = e^{σt}·u^{(j)}(t)` for `j < out.len()`.
pub type DerivEval = dyn Fn(f64, &mut [f64]) + Send + Sync;

/// A radial function `u(t)` with closed-form derivatives.
///
/// Stored derivatives are scaled by `e^{σt}` where `σ` is [`Self::decay`];
/// [`Self::derivatives`] undoes the scaling.
#[derive(Clone)]
pub struct RadialProfile {
    eval: Arc<DerivEval>,
    max_order: Option<usize>,
    breakpoints: Vec<f64>,
    support: (f64, f64),
    decay: f64,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProfile")
            .field("max_order", &self.max_order)
            .field("breakpoints", &self.breakpoints)
            .field("support", &self.support)
            .field("decay", &self.decay)
            .finish()
    }
}

impl RadialProfile {
    /// Builds a profile from a scaled-derivative evaluator.
    ///
    /// `max_order = None` means derivatives of every order exist between
    /// breakpoints.
    pub fn new(
        support: (f64, f64),
        decay: f64,
        max_order: Option<usize>,
        mut breakpoints: Vec<f64>,
        eval: Arc<DerivEval>,
    ) -> Result<Self> {
        let (lo, hi) = support;
        if !(lo >= 0.0 && hi > lo) {
            return Err(invalid("support", format!("need 0 <= lo < hi, got [{lo}, {hi}]")));
        }
        if !decay.is_finite() {
            return Err(invalid("decay", "must be finite"));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(invalid("breakpoints", "must be finite"));
        }
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        Ok(Self {
            eval,
            max_order,
            breakpoints,
            support,
            decay,
        })
    }

    /// `u ≡ c` on `[0, ∞)`.
    pub fn constant(c: f64) -> Self {
        Self {
            eval: Arc::new(move |_, out: &mut [f64]| {
                out.fill(0.0);
                if let Some(v) = out.first_mut() {
                    *v = c;
                }
            }),
            max_order: None,
            breakpoints: Vec::new(),
            support: (0.0, f64::INFINITY),
            decay: 0.0,
        }
    }

    /// `u(t) = e^{−st}` on `[0, ∞)`.
    pub fn exponential(s: f64) -> Self {
        Self {
            eval: Arc::new(move |_, out: &mut [f64]| {
                let mut f = 1.0;
                for slot in out.iter_mut() {
                    *slot = f;
                    f *= -s;
                }
            }),
            max_order: None,
            breakpoints: Vec::new(),
            support: (0.0, f64::INFINITY),
            decay: s,
        }
    }

    /// `u(t) = Σ coeffs[i]·t^i` on `[0, end]`, zero beyond.
    pub fn polynomial(coeffs: Vec<f64>, end: f64) -> Result<Self> {
        if !(end > 0.0) {
            return Err(invalid("end", "support end must be positive"));
        }
        let mut derived = vec![coeffs];
        while derived.last().unwrap().len() > 1 {
            let prev = derived.last().unwrap();
            let next: Vec<f64> = prev
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * i as f64)
                .collect();
            derived.push(next);
        }
        let eval = move |t: f64, out: &mut [f64]| {
            for (j, slot) in out.iter_mut().enumerate() {
                *slot = derived
                    .get(j)
                    .map(|c| c.iter().rev().fold(0.0, |acc, &ci| acc * t + ci))
                    .unwrap_or(0.0);
            }
        };
        Self::new((0.0, end), 0.0, None, Vec::new(), Arc::new(eval))
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn max_order(&self) -> Option<usize> {
        self.max_order
    }

    pub fn is_breakpoint(&self, t: f64) -> bool {
        self.breakpoints.iter().any(|&b| b == t)
    }

    fn check_order(&self, order: usize) -> Result<()> {
        match self.max_order {
            Some(max) if order > max => Err(GapError::Smoothness {
                needed: order,
                available: max,
            }),
            _ => Ok(()),
        }
    }

    /// Fills `out[j] = e^{σt}·u^{(j)}(t)`. Zero outside the support.
    pub fn fill_scaled(&self, t: f64, out: &mut [f64]) -> Result<()> {
        if out.is_empty() {
            return Ok(());
        }
        self.check_order(out.len() - 1)?;
        if out.len() > 1 && self.is_breakpoint(t) {
            return Err(GapError::AtBreakpoint(t));
        }
        let (lo, hi) = self.support;
        if t < lo || t > hi {
            out.fill(0.0);
            return Ok(());
        }
        (self.eval)(t, out);
        Ok(())
    }

    /// Scaled derivatives `e^{σt}·u^{(j)}(t)` for `j = 0..=order`.
    pub fn scaled_derivatives(&self, t: f64, order: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; order + 1];
        self.fill_scaled(t, &mut out)?;
        Ok(out)
    }

    /// True derivatives `u^{(j)}(t)` for `j = 0..=order`.
    pub fn derivatives(&self, t: f64, order: usize) -> Result<Vec<f64>> {
        let mut out = self.scaled_derivatives(t, order)?;
        let env = (-self.decay * t).exp();
        out.iter_mut().for_each(|v| *v *= env);
        Ok(out)
    }

    pub fn value(&self, t: f64) -> f64 {
        // order 0 never fails
        self.derivatives(t, 0).map(|d| d[0]).unwrap_or(f64::NAN)
    }

    pub fn d1(&self, t: f64) -> Result<f64> {
        Ok(self.derivatives(t, 1)?[1])
    }

    pub fn d2(&self, t: f64) -> Result<f64> {
        Ok(self.derivatives(t, 2)?[2])
    }

    /// The profile `t ↦ u(c·t)` for `c > 0`.
    pub fn rescaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid("c", "scale factor must be positive"));
        }
        let inner = self.eval.clone();
        let eval = move |t: f64, out: &mut [f64]| {
            inner(c * t, out);
            let mut f = 1.0;
            for slot in out.iter_mut() {
                *slot *= f;
                f *= c;
            }
        };
        Self::new(
            (self.support.0 / c, self.support.1 / c),
            self.decay * c,
            self.max_order,
            self.breakpoints.iter().map(|b| b / c).collect(),
            Arc::new(eval),
        )
    }
}

/// Applies `Δ` to a jet of scaled derivatives: `(Δv)^{(j)} = v^{(j+2)} + Σ C(j,i) L^{(i)} v^{(j−i+1)}`.
fn apply_laplacian(v: &[f64], drift: &[f64]) -> Vec<f64> {
    let m = v.len() - 2;
    let mut out = vec![0.0; m];
    for (j, slot) in out.iter_mut().enumerate() {
        let mut acc = v[j + 2];
        let mut binom = 1.0;
        for i in 0..=j {
            acc += binom * drift[i] * v[j - i + 1];
            binom = binom * (j - i) as f64 / (i + 1) as f64;
        }
        *slot = acc;
    }
    out
}

/// `Δu(t) = u″(t) + (n−1)ct_κ(t)·u′(t)`.
pub fn radial_laplacian(u: &RadialProfile, t: f64, space: &ModelSpace) -> Result<f64> {
    if !(t > 0.0) {
        return Err(GapError::NonPositiveRadius(t));
    }
    if u.is_breakpoint(t) {
        return Err(GapError::AtBreakpoint(t));
    }
    let d = u.derivatives(t, 2)?;
    Ok(d[2] + space.drift(t)? * d[1])
}

/// The profile `Δ^k u`, with derivatives computed from the jets of `u` and of
/// the drift. Needs `2k` derivatives of `u`.
pub fn radial_laplacian_iter(u: &RadialProfile, k: usize, space: &ModelSpace) -> Result<RadialProfile> {
    if k == 0 {
        return Ok(u.clone());
    }
    let needed = 2 * k;
    u.check_order(needed)?;
    let inner = u.clone();
    let space = *space;
    let eval = move |t: f64, out: &mut [f64]| {
        let top = out.len() - 1 + needed;
        let mut jet = vec![0.0; top + 1];
        (inner.eval)(t, &mut jet);
        let mut drift = vec![0.0; top.saturating_sub(1).max(1)];
        if space.drift_derivatives(t, &mut drift).is_err() {
            out.fill(f64::NAN);
            return;
        }
        for _ in 0..k {
            jet = apply_laplacian(&jet, &drift);
        }
        out.copy_from_slice(&jet[..out.len()]);
    };
    RadialProfile::new(
        u.support,
        u.decay,
        u.max_order.map(|m| m - needed),
        u.breakpoints.clone(),
        Arc::new(eval),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub t: f64,
    /// `Δρ` on the model space, `(n−1)ct_κ(t)`.
    pub laplacian_distance: f64,
    /// `(n−1)κ`.
    pub lower_bound: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub space: ModelSpace,
    pub rows: Vec<ComparisonRow>,
    pub pass: bool,
}

/// Tabulates `Δρ = (n−1)ct_κ(ρ)` against its asymptotic floor `(n−1)κ`.
pub fn laplace_comparison_check(space: &ModelSpace, grid: &[f64]) -> Result<ComparisonReport> {
    let lower = (space.dim() - 1.0) * space.kappa;
    let rows = grid
        .iter()
        .map(|&t| {
            let lap = space.drift(t)?;
            Ok(ComparisonRow {
                t,
                laplacian_distance: lap,
                lower_bound: lower,
                margin: lap - lower,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pass = rows
        .iter()
        .all(|r| r.margin >= -1e-12 * r.lower_bound.max(1.0));
    Ok(ComparisonReport {
        space: *space,
        rows,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ct_kappa_values() {
        assert_eq!(ct_kappa(2.0, 0.0).unwrap(), 0.5);
        assert!((ct_kappa(1.0, 1.0).unwrap() - 1.3130352854993312).abs() < 1e-15);
        assert!((ct_kappa(1e6, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(ct_kappa(0.0, 1.0), Err(GapError::NonPositiveRadius(_))));
        assert!(ct_kappa(-1.0, 0.0).is_err());
    }

    #[test]
    fn volume_weight_values() {
        let e2 = ModelSpace::euclidean(2).unwrap();
        assert_eq!(volume_weight(3.0, &e2).unwrap(), 3.0);
        let h2 = ModelSpace::hyperbolic(2, 1.0).unwrap();
        assert!((volume_weight(1.0, &h2).unwrap() - 1.1752011936438014).abs() < 1e-15);
        let h3 = ModelSpace::hyperbolic(3, 2.0).unwrap();
        let t = 1e-6;
        assert!((volume_weight(t, &h3).unwrap() / (t * t) - 1.0).abs() < 1e-10);
        let lw = h3.ln_volume_weight(400.0).unwrap();
        // 2·(ln sinh(800) − ln 2) with ln sinh(800) = 800 − ln 2
        assert!((lw - 2.0 * (800.0 - 2.0 * std::f64::consts::LN_2)).abs() < 1e-12);
    }

    #[test]
    fn model_space_rejects_bad_parameters() {
        assert!(ModelSpace::new(1, 0.0).is_err());
        assert!(ModelSpace::new(3, -1.0).is_err());
        assert!(ModelSpace::hyperbolic(3, 0.0).is_err());
    }

    #[test]
    fn drift_derivatives_match_finite_differences() {
        for space in [
            ModelSpace::euclidean(3).unwrap(),
            ModelSpace::hyperbolic(4, 0.7).unwrap(),
        ] {
            for &t in &[0.3, 1.1, 4.0] {
                let mut d = [0.0; 4];
                space.drift_derivatives(t, &mut d).unwrap();
                let h = 1e-4;
                let mut dp = [0.0; 4];
                let mut dm = [0.0; 4];
                space.drift_derivatives(t + h, &mut dp).unwrap();
                space.drift_derivatives(t - h, &mut dm).unwrap();
                for i in 0..3 {
                    let fd = (dp[i] - dm[i]) / (2.0 * h);
                    assert!(
                        (fd - d[i + 1]).abs() < 1e-6 * d[i + 1].abs().max(1.0),
                        "order {} at t={t}: fd {fd} vs {}",
                        i + 1,
                        d[i + 1]
                    );
                }
            }
        }
    }

    #[test]
    fn laplacian_of_t_squared_is_2n() {
        let u = RadialProfile::polynomial(vec![0.0, 0.0, 1.0], 10.0).unwrap();
        let e3 = ModelSpace::euclidean(3).unwrap();
        assert!((radial_laplacian(&u, 1.0, &e3).unwrap() - 6.0).abs() < 1e-14);
    }

    #[test]
    fn laplacian_of_exponential_matches_closed_form() {
        let h2 = ModelSpace::hyperbolic(2, 1.0).unwrap();
        let s = 0.5;
        let u = RadialProfile::exponential(s);
        let t: f64 = 5.0;
        let expected = s * (s - 2.0 * s / t.tanh()) * (-s * t).exp();
        assert!((radial_laplacian(&u, t, &h2).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn constants_are_harmonic() {
        let u = RadialProfile::constant(3.0);
        let h = ModelSpace::hyperbolic(5, 1.3).unwrap();
        for &t in &[0.01, 1.0, 50.0] {
            assert_eq!(radial_laplacian(&u, t, &h).unwrap(), 0.0);
        }
    }

    #[test]
    fn breakpoint_evaluation_is_rejected() {
        let eval = Arc::new(|t: f64, out: &mut [f64]| {
            out.fill(0.0);
            out[0] = (t - 1.0).abs();
        });
        let u = RadialProfile::new((0.0, 2.0), 0.0, Some(2), vec![1.0], eval).unwrap();
        let e = ModelSpace::euclidean(2).unwrap();
        assert_eq!(radial_laplacian(&u, 1.0, &e), Err(GapError::AtBreakpoint(1.0)));
        assert!(radial_laplacian(&u, 1.5, &e).is_ok());
    }

    #[test]
    fn iterated_laplacian_first_step_agrees() {
        let h = ModelSpace::hyperbolic(3, 1.0).unwrap();
        let u = RadialProfile::exponential(1.0);
        let lap = radial_laplacian_iter(&u, 1, &h).unwrap();
        for &t in &[0.5, 2.0, 7.0] {
            let direct = radial_laplacian(&u, t, &h).unwrap();
            assert!((lap.value(t) - direct).abs() < 1e-15 * direct.abs().max(1e-300));
        }
    }

    #[test]
    fn iterated_laplacian_smoothness_error() {
        let eval = Arc::new(|_t: f64, out: &mut [f64]| out.fill(1.0));
        let u = RadialProfile::new((0.0, 1.0), 0.0, Some(3), vec![], eval).unwrap();
        let e = ModelSpace::euclidean(3).unwrap();
        assert!(radial_laplacian_iter(&u, 1, &e).is_ok());
        assert_eq!(
            radial_laplacian_iter(&u, 2, &e).unwrap_err(),
            GapError::Smoothness { needed: 4, available: 3 }
        );
    }

    #[test]
    fn iterated_laplacian_asymptotics() {
        // Δ^k e^{−st} ~ s^{2k}(1−p)^k e^{−st} with s = (n−1)κ/p
        let (n, kappa, p) = (3usize, 1.0, 2.0);
        let s = (n as f64 - 1.0) * kappa / p;
        let h = ModelSpace::hyperbolic(n, kappa).unwrap();
        let u = RadialProfile::exponential(s);
        for k in 1..=3 {
            let lap = radial_laplacian_iter(&u, k, &h).unwrap();
            let t = 40.0;
            let scaled = lap.scaled_derivatives(t, 0).unwrap()[0];
            let expected = s.powi(2 * k as i32) * (1.0 - p).powi(k as i32);
            assert!((scaled / expected - 1.0).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn comparison_report() {
        let h4 = ModelSpace::hyperbolic(4, 1.0).unwrap();
        let r = laplace_comparison_check(&h4, &[2.0]).unwrap();
        assert!((r.rows[0].laplacian_distance - 3.0 / 2f64.tanh()).abs() < 1e-14);
        assert!(r.pass);
        let h2 = ModelSpace::hyperbolic(2, 3.0).unwrap();
        let r = laplace_comparison_check(&h2, &[100.0]).unwrap();
        assert!(r.rows[0].margin.abs() < 1e-12 && r.pass);
        let e = ModelSpace::euclidean(5).unwrap();
        let r = laplace_comparison_check(&e, &[0.1, 1.0, 10.0]).unwrap();
        assert!(r.pass && r.rows.iter().all(|row| row.laplacian_distance > 0.0));
    }

    #[test]
    fn rescaled_profile_chain_rule() {
        let u = RadialProfile::polynomial(vec![1.0, 0.0, -2.0, 0.0, 1.0], 1.0).unwrap();
        let v = u.rescaled(2.0).unwrap();
        assert_eq!(v.support(), (0.0, 0.5));
        let t = 0.2;
        let du = u.derivatives(0.4, 2).unwrap();
        let dv = v.derivatives(t, 2).unwrap();
        assert!((dv[0] - du[0]).abs() < 1e-15);
        assert!((dv[1] - 2.0 * du[1]).abs() < 1e-14);
        assert!((dv[2] - 4.0 * du[2]).abs() < 1e-14);
    }
}
