//! Truncated exponentials `u_δ = φ(ρ)e^{−sρ}`, `s = (n−1)κ/p`, and the sweeps
//! that drive their Rayleigh quotients to the sharp gap constants as δ grows.

use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, GapError, Result};
use crate::modelspace::{ModelSpace, RadialProfile};
use crate::quadrature::{lp_functional, Functional};
use crate::report::{SweepReport, SweepRow};

/// Default sweep radii.
pub const DEFAULT_DELTAS: [f64; 7] = [8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 500.0];

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 4.0 && delta.is_finite()) {
        return Err(invalid("delta", format!("need delta > 4, got {delta}")));
    }
    Ok(())
}

/// `(φ, φ′)` for the plateau function: rises on `[δ/2, δ/2+1]`, equals 1 on
/// `[δ/2+1, δ−1]`, falls on `[δ−1, δ]`, zero elsewhere.
fn phi_jet(t: f64, delta: f64) -> (f64, f64) {
    let h = 0.5 * delta;
    if t < h || t > delta {
        (0.0, 0.0)
    } else if t <= h + 1.0 {
        (t - h, 1.0)
    } else if t <= delta - 1.0 {
        (1.0, 0.0)
    } else {
        (delta - t, -1.0)
    }
}

/// The truncation function `φ(t)` for a given `δ > 4`.
pub fn truncation_phi(t: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(phi_jet(t, delta).0)
}

/// Shape of the cut-off `φ` in `u_δ = φ(ρ)e^{−sρ}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Truncation {
    /// Piecewise-linear ramps of width 1. `u_δ` is only Lipschitz and its
    /// quotients are taken branchwise.
    Linear,
    /// Smoothstep ramps of width `δ/8` with `order` continuous derivatives,
    /// so `u_δ` lies in the energy space and the quotients are true Rayleigh
    /// quotients.
    Smooth { order: usize },
}

impl Truncation {
    fn ramp_width(self, delta: f64) -> f64 {
        match self {
            Truncation::Linear => 1.0,
            Truncation::Smooth { .. } => delta / 8.0,
        }
    }
}

impl std::fmt::Display for Truncation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Truncation::Linear => write!(f, "linear"),
            Truncation::Smooth { order } => write!(f, "smooth(C{order})"),
        }
    }
}

/// Coefficients of the smoothstep `S_N` of degree `2N+1`: `S(0) = 0`,
/// `S(1) = 1`, and derivatives `1..=N` vanish at both ends.
fn smoothstep_coeffs(order: usize) -> Vec<f64> {
    let binom = |n: usize, k: usize| (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
    let mut c = vec![0.0; 2 * order + 2];
    for i in 0..=order {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        c[order + 1 + i] = sign * binom(order + i, i) * binom(2 * order + 1, order - i);
    }
    c
}

/// Derivatives `S^{(j)}(x)`, `j < out.len()`, by Horner on each derivative.
fn smoothstep_jet(coeffs: &[f64], x: f64, out: &mut [f64]) {
    let mut c = coeffs.to_vec();
    for slot in out.iter_mut() {
        *slot = c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci);
        c = c.iter().enumerate().skip(1).map(|(i, ci)| ci * i as f64).collect();
        if c.is_empty() {
            c.push(0.0);
        }
    }
}

/// Parameters of a sharpness test function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationProfile {
    pub delta: f64,
    pub s: f64,
    pub p: f64,
    pub space: ModelSpace,
    pub truncation: Truncation,
}

impl TruncationProfile {
    /// `s = (n−1)κ/p`; needs `κ > 0`.
    pub fn new(delta: f64, space: ModelSpace, p: f64) -> Result<Self> {
        Self::with_truncation(delta, space, p, Truncation::Linear)
    }

    pub fn with_truncation(delta: f64, space: ModelSpace, p: f64, truncation: Truncation) -> Result<Self> {
        check_delta(delta)?;
        if space.is_euclidean() {
            return Err(invalid("kappa", "sharpness constructions need kappa > 0"));
        }
        if !(p > 1.0 && p.is_finite()) {
            return Err(invalid("p", format!("need p > 1, got {p}")));
        }
        if let Truncation::Smooth { order } = truncation {
            if !(1..=12).contains(&order) {
                return Err(invalid("order", format!("smoothstep order must be in 1..=12, got {order}")));
            }
        }
        Ok(Self {
            delta,
            s: (space.dim() - 1.0) * space.kappa() / p,
            p,
            space,
            truncation,
        })
    }

    pub fn breakpoints(&self) -> [f64; 4] {
        let h = 0.5 * self.delta;
        let w = self.truncation.ramp_width(self.delta);
        [h, h + w, self.delta - w, self.delta]
    }

    /// `u_δ` with scaled derivatives `e^{st}u^{(j)} = Σᵢ C(j,i)(−s)^{j−i}φ^{(i)}`.
    pub fn profile(&self) -> RadialProfile {
        let (delta, s) = (self.delta, self.s);
        let eval: Arc<dyn Fn(f64, &mut [f64]) + Send + Sync> = match self.truncation {
            Truncation::Linear => Arc::new(move |t: f64, out: &mut [f64]| {
                let (phi, dphi) = phi_jet(t, delta);
                // pow = (−s)^j, lower = j(−s)^{j−1}
                let (mut pow, mut lower) = (1.0, 0.0);
                for (j, slot) in out.iter_mut().enumerate() {
                    *slot = pow * phi + lower * dphi;
                    lower = (j + 1) as f64 * pow;
                    pow *= -s;
                }
            }),
            Truncation::Smooth { order } => {
                let coeffs = smoothstep_coeffs(order);
                let w = delta / 8.0;
                let h = 0.5 * delta;
                Arc::new(move |t: f64, out: &mut [f64]| {
                    let m = out.len();
                    let mut phi = vec![0.0; m];
                    if t >= h && t <= delta {
                        if t <= h + w {
                            smoothstep_jet(&coeffs, (t - h) / w, &mut phi);
                            for (i, v) in phi.iter_mut().enumerate() {
                                *v /= w.powi(i as i32);
                            }
                        } else if t < delta - w {
                            phi[0] = 1.0;
                        } else {
                            smoothstep_jet(&coeffs, (delta - t) / w, &mut phi);
                            for (i, v) in phi.iter_mut().enumerate() {
                                *v *= (-1.0 / w).powi(i as i32);
                            }
                        }
                    }
                    for j in 0..m {
                        let mut acc = 0.0;
                        let mut binom = 1.0;
                        for (i, f) in phi.iter().enumerate().take(j + 1) {
                            acc += binom * (-s).powi((j - i) as i32) * f;
                            binom *= (j - i) as f64 / (i + 1) as f64;
                        }
                        out[j] = acc;
                    }
                })
            }
        };
        RadialProfile::new((0.5 * delta, delta), s, None, self.breakpoints().to_vec(), eval)
            .expect("truncation profile parameters are validated")
    }
}

/// `u_δ = φ(ρ)e^{−sρ}` with `s = (n−1)κ/p` and the piecewise-linear `φ`.
pub fn make_u_delta(delta: f64, space: &ModelSpace, p: f64) -> Result<RadialProfile> {
    TruncationProfile::new(delta, *space, p).map(|t| t.profile())
}

fn check_bound_args(delta: f64, n: usize, kappa: f64, p: f64) -> Result<()> {
    check_delta(delta)?;
    if n < 2 {
        return Err(invalid("n", "dimension must be at least 2"));
    }
    if !(kappa > 0.0) {
        return Err(invalid("kappa", "bounds need kappa > 0"));
    }
    if !(p > 1.0) {
        return Err(invalid("p", "need p > 1"));
    }
    Ok(())
}

/// Lower bound for `∫|u_δ|^p dv`:
/// `κ^{1−n}(δ/2 − 2)(1/2 − e^{−κδ−2κ}/2)^{n−1}`.
pub fn bound_e1(delta: f64, n: usize, kappa: f64, p: f64) -> Result<f64> {
    check_bound_args(delta, n, kappa, p)?;
    let m = n as f64 - 1.0;
    Ok(kappa.powf(-m) * (0.5 * delta - 2.0) * (0.5 - 0.5 * (-kappa * delta - 2.0 * kappa).exp()).powf(m))
}

/// Lower bound for `∫|u_δ′|² dv`, the buckling denominator: `s²·E₁` at `p = 2`.
pub fn bound_e1_gradient(delta: f64, n: usize, kappa: f64) -> Result<f64> {
    let s = (n as f64 - 1.0) * kappa / 2.0;
    Ok(s * s * bound_e1(delta, n, kappa, 2.0)?)
}

/// `Φ(t) = |s(p coth κt − 2)φ′ + s²(1 − p coth κt)φ|^p·((1 − e^{−2κt})/2)^{n−1}`.
fn big_phi(t: f64, delta: f64, n: usize, kappa: f64, p: f64) -> f64 {
    let s = (n as f64 - 1.0) * kappa / p;
    let (phi, dphi) = phi_jet(t, delta);
    let c = 1.0 / (kappa * t).tanh();
    let lap = s * (p * c - 2.0) * dphi + s * s * (1.0 - p * c) * phi;
    lap.abs().powf(p) * (0.5 - 0.5 * (-2.0 * kappa * t).exp()).powf(n as f64 - 1.0)
}

/// Maximum of `f` on `[a, b]` by dense sampling and golden refinement.
fn sampled_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    const SAMPLES: usize = 2001;
    let step = (b - a) / (SAMPLES - 1) as f64;
    let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
    for i in 0..SAMPLES {
        let v = f(a + i as f64 * step);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let lo = a + best_i.saturating_sub(1) as f64 * step;
    let hi = (a + (best_i + 1) as f64 * step).min(b);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut x0, mut x1) = (lo, hi);
    for _ in 0..60 {
        let c = x1 - r * (x1 - x0);
        let d = x0 + r * (x1 - x0);
        if f(c) > f(d) {
            x1 = d;
        } else {
            x0 = c;
        }
    }
    best.max(f(0.5 * (x0 + x1)))
}

/// Boundary-layer maxima `(M₁, M₂)` of `Φ` on `[δ/2, δ/2+1]` and `[δ−1, δ]`.
pub fn boundary_maxima(delta: f64, n: usize, kappa: f64, p: f64) -> Result<(f64, f64)> {
    check_bound_args(delta, n, kappa, p)?;
    let f = |t| big_phi(t, delta, n, kappa, p);
    let h = 0.5 * delta;
    Ok((sampled_max(f, h, h + 1.0), sampled_max(f, delta - 1.0, delta)))
}

/// Upper bound for `∫|Δu_δ|^p dv`:
/// `κ^{1−n}(M₁ + M₂) + (s^{2p}/κ^{n−1})(δ/2 − 2)(p coth((δ/2+1)κ) − 1)^p(1/2 − e^{−2κ(δ−1)}/2)^{n−1}`.
pub fn bound_e2(delta: f64, n: usize, kappa: f64, p: f64) -> Result<f64> {
    let (m1, m2) = boundary_maxima(delta, n, kappa, p)?;
    let m = n as f64 - 1.0;
    let s = m * kappa / p;
    let c = 1.0 / ((0.5 * delta + 1.0) * kappa).tanh();
    let plateau = s.powf(2.0 * p) * kappa.powf(-m)
        * (0.5 * delta - 2.0)
        * (p * c - 1.0).powf(p)
        * (0.5 - 0.5 * (-2.0 * kappa * (delta - 1.0)).exp()).powf(m);
    Ok(kappa.powf(-m) * (m1 + m2) + plateau)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepKind {
    /// `∫|Δu|^p / ∫|u|^p`
    Clamped,
    /// `∫|Δu|² / ∫|u′|²`
    Buckling,
    /// `∫|Δ^k u|^p / ∫|u|^p`
    HigherOrderClamped(usize),
    /// `∫|∇Δ^k u|^p / ∫|u|^p`
    HigherOrderClampedGradient(usize),
    /// `∫|Δ^k u|² / ∫|u′|²`
    HigherOrderBuckling(usize),
    /// `∫|∇Δ^k u|² / ∫|u′|²`
    HigherOrderBucklingGradient(usize),
}

impl SweepKind {
    /// Parses `clamped`, `buckling`, `higher_order_clamped`,
    /// `higher_order_buckling` and the `*_gradient` variants, with `k` used by
    /// the higher-order kinds.
    pub fn parse(name: &str, k: usize) -> Result<Self> {
        let kind = match name {
            "clamped" => SweepKind::Clamped,
            "buckling" => SweepKind::Buckling,
            "higher_order_clamped" => SweepKind::HigherOrderClamped(k),
            "higher_order_clamped_gradient" => SweepKind::HigherOrderClampedGradient(k),
            "higher_order_buckling" => SweepKind::HigherOrderBuckling(k),
            "higher_order_buckling_gradient" => SweepKind::HigherOrderBucklingGradient(k),
            other => return Err(invalid("kind", format!("unknown sweep kind `{other}`"))),
        };
        if kind.k() == 0 {
            return Err(invalid("k", "higher-order sweeps need k >= 1"));
        }
        Ok(kind)
    }

    pub fn k(self) -> usize {
        match self {
            SweepKind::Clamped | SweepKind::Buckling => 1,
            SweepKind::HigherOrderClamped(k)
            | SweepKind::HigherOrderClampedGradient(k)
            | SweepKind::HigherOrderBuckling(k)
            | SweepKind::HigherOrderBucklingGradient(k) => k,
        }
    }

    /// The smooth cut-off needed for `u_δ` to lie in the energy space of
    /// this quotient: `C^{2k+1}` ramps.
    pub fn smooth_truncation(self) -> Truncation {
        Truncation::Smooth { order: 2 * self.k() + 1 }
    }

    fn is_buckling(self) -> bool {
        matches!(
            self,
            SweepKind::Buckling | SweepKind::HigherOrderBuckling(_) | SweepKind::HigherOrderBucklingGradient(_)
        )
    }

    pub fn theorem(self) -> &'static str {
        match self {
            SweepKind::Clamped => "T1.1",
            SweepKind::Buckling => "T1.2",
            SweepKind::HigherOrderClamped(_) | SweepKind::HigherOrderClampedGradient(_) => "T4.3",
            SweepKind::HigherOrderBuckling(_) | SweepKind::HigherOrderBucklingGradient(_) => "T4.4",
        }
    }

    fn functionals(self) -> (Functional, Functional) {
        let k = self.k();
        let num = match self {
            SweepKind::Clamped | SweepKind::Buckling => Functional::Laplacian,
            SweepKind::HigherOrderClamped(_) | SweepKind::HigherOrderBuckling(_) => Functional::IteratedLaplacian(k),
            SweepKind::HigherOrderClampedGradient(_) | SweepKind::HigherOrderBucklingGradient(_) => {
                Functional::GradientOfIteratedLaplacian(k)
            }
        };
        let den = if self.is_buckling() {
            Functional::Gradient
        } else {
            Functional::Value
        };
        (num, den)
    }

    /// The sharp constant the quotient tends to.
    pub fn limit(self, n: usize, kappa: f64, p: f64) -> f64 {
        let s = (n as f64 - 1.0) * kappa / p;
        let x = s * s * (p - 1.0);
        let k = self.k() as f64;
        match self {
            SweepKind::Clamped => x.powf(p),
            SweepKind::Buckling => s * s,
            SweepKind::HigherOrderClamped(_) => x.powf(k * p),
            SweepKind::HigherOrderClampedGradient(_) => s.powf(p) * x.powf(k * p),
            SweepKind::HigherOrderBuckling(_) => s.powf(4.0 * k - 2.0),
            SweepKind::HigherOrderBucklingGradient(_) => s.powf(4.0 * k),
        }
    }
}

impl FromStr for SweepKind {
    type Err = GapError;

    fn from_str(s: &str) -> Result<Self> {
        SweepKind::parse(s, 1)
    }
}

/// The Rayleigh quotient of `u_δ` selected by `kind`.
pub fn sweep_quotient(kind: SweepKind, delta: f64, space: &ModelSpace, p: f64) -> Result<f64> {
    sweep_quotient_with(kind, Truncation::Linear, delta, space, p)
}

/// [`sweep_quotient`] for a chosen cut-off shape.
pub fn sweep_quotient_with(
    kind: SweepKind,
    truncation: Truncation,
    delta: f64,
    space: &ModelSpace,
    p: f64,
) -> Result<f64> {
    let u = TruncationProfile::with_truncation(delta, *space, p, truncation)?.profile();
    let (num, den) = kind.functionals();
    let d = lp_functional(&u, p, den, space, None)?;
    if !(d > 0.0) {
        return Err(GapError::Degenerate(format!("{den:?} integral vanishes")));
    }
    Ok(lp_functional(&u, p, num, space, None)? / d)
}

/// `E₂/E₁` for the clamped quotient, or `E₂/(s²E₁)` for buckling at `k = 1`.
pub fn envelope(kind: SweepKind, delta: f64, n: usize, kappa: f64, p: f64) -> Result<Option<f64>> {
    match kind {
        SweepKind::Clamped => Ok(Some(bound_e2(delta, n, kappa, p)? / bound_e1(delta, n, kappa, p)?)),
        SweepKind::Buckling => Ok(Some(bound_e2(delta, n, kappa, 2.0)? / bound_e1_gradient(delta, n, kappa)?)),
        _ => Ok(None),
    }
}

/// Rows `(δ, quotient, limit, rel_gap)` for the piecewise-linear cut-off,
/// plus the `E₂/E₁` envelope where one is defined.
pub fn sharpness_sweep(kind: SweepKind, n: usize, kappa: f64, p: f64, deltas: &[f64]) -> Result<SweepReport> {
    sharpness_sweep_with(kind, Truncation::Linear, n, kappa, p, deltas)
}

/// Sweep for a chosen cut-off shape.
///
/// Linear rows assert `quotient ≤ envelope` only: the branchwise quotient of
/// a Lipschitz `u_δ` is not a Rayleigh quotient and may sit below the
/// limit. Smooth rows assert `limit ≤ quotient` with zero tolerance. Both
/// assert that the final row has the smallest `|rel_gap|`.
pub fn sharpness_sweep_with(
    kind: SweepKind,
    truncation: Truncation,
    n: usize,
    kappa: f64,
    p: f64,
    deltas: &[f64],
) -> Result<SweepReport> {
    if deltas.is_empty() {
        return Err(invalid("deltas", "need at least one delta"));
    }
    if deltas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("deltas", "must be strictly increasing"));
    }
    if let Some(d) = deltas.iter().find(|d| !(**d >= 8.0)) {
        return Err(invalid("deltas", format!("sweeps need delta >= 8, got {d}")));
    }
    if kind.is_buckling() && p != 2.0 {
        return Err(invalid("p", "buckling sweeps are defined for p = 2 only"));
    }
    let space = ModelSpace::hyperbolic(n, kappa)?;
    if !(p > 1.0) {
        return Err(invalid("p", "need p > 1"));
    }
    let limit = kind.limit(n, kappa, p);
    let with_envelope = truncation == Truncation::Linear && matches!(kind, SweepKind::Clamped | SweepKind::Buckling);
    let mut report = SweepReport::new(
        kind.theorem(),
        format!("{kind:?} sharpness ({truncation} cut-off), n={n}, kappa={kappa}, p={p}"),
        ["delta", "quotient", "limit", "rel_gap"],
        if with_envelope { &["envelope"] } else { &[] },
    );
    for &delta in deltas {
        let row = sweep_quotient_with(kind, truncation, delta, &space, p).and_then(|q| {
            let env = if with_envelope { envelope(kind, delta, n, kappa, p)? } else { None };
            Ok((q, env))
        });
        match row {
            Ok((q, env)) => {
                let (pass, what) = match truncation {
                    Truncation::Linear => (env.is_none_or(|e| q <= e), "above the envelope"),
                    Truncation::Smooth { .. } => (q >= limit, "below the limit"),
                };
                report.rows.push(SweepRow {
                    parameter: delta,
                    computed: q,
                    reference: limit,
                    residual: (q - limit) / limit,
                    extra: env.into_iter().collect(),
                    pass,
                    error: None,
                });
                if !pass {
                    report.fail(format!("delta={delta}: quotient {q} {what}"));
                }
            }
            Err(e) => {
                report.rows.push(SweepRow {
                    parameter: delta,
                    computed: f64::NAN,
                    reference: limit,
                    residual: f64::NAN,
                    extra: if with_envelope { vec![f64::NAN] } else { Vec::new() },
                    pass: false,
                    error: Some(e.to_string()),
                });
                report.fail(format!("delta={delta}: {e}"));
            }
        }
    }
    let last = report.rows.last().map(|r| r.residual.abs()).unwrap_or(f64::NAN);
    if !report.rows.iter().all(|r| r.residual.abs() >= last) {
        report.fail("final row does not have the smallest relative gap");
    }
    Ok(report)
}

/// Whether the envelope column decreases from the first row with `δ ≥ 32`
/// onward.
pub fn envelope_decreasing(report: &SweepReport) -> bool {
    let env: Vec<f64> = report
        .rows
        .iter()
        .filter(|r| r.parameter >= 32.0)
        .filter_map(|r| r.extra.first().copied())
        .collect();
    env.windows(2).all(|w| w[1] < w[0])
}

/// Ratio of the clamped quotient of `t ↦ u_δ(2t)` on curvature `2κ` to the
/// clamped quotient of `u_δ` on curvature `κ`; exactly `2^{2p}` in theory.
pub fn scale_covariance_ratio(n: usize, kappa: f64, p: f64, delta: f64) -> Result<f64> {
    let space = ModelSpace::hyperbolic(n, kappa)?;
    let doubled = ModelSpace::hyperbolic(n, 2.0 * kappa)?;
    let u = make_u_delta(delta, &space, p)?;
    let v = u.rescaled(2.0)?;
    let q = |u: &RadialProfile, sp: &ModelSpace| -> Result<f64> {
        Ok(lp_functional(u, p, Functional::Laplacian, sp, None)? / lp_functional(u, p, Functional::Value, sp, None)?)
    };
    Ok(q(&v, &doubled)? / q(&u, &space)?)
}
