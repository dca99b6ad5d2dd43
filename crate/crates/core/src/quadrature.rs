//! Adaptive Gauss–Kronrod integration of radial integrands against the
//! model-space volume element, and the `L^p` functionals built on it.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{invalid, GapError, Result};
use crate::modelspace::{radial_laplacian_iter, ModelSpace, RadialProfile};

pub const DEFAULT_REL_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_PANELS: usize = 100_000;

// 15-point Kronrod extension of the 7-point Gauss rule (abscissae in
// decreasing order, the last one is the centre).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs_value: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn kronrod_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_k = fc.abs() * WGK[7];
    let mut fv = [0.0; 15];
    fv[7] = fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        fv[j] = f1;
        fv[14 - j] = f2;
        kron += WGK[j] * (f1 + f2);
        abs_k += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kron;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }
    let value = kron * h;
    let res_abs = abs_k * h.abs();
    let res_asc = asc * h.abs();
    let mut err = ((kron - gauss) * h).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Panel {
        a,
        b,
        value,
        error: err,
        abs_value: res_abs,
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

/// Globally adaptive Gauss–Kronrod quadrature over `[a, b]` with forced panel
/// boundaries at `splits`. `b` may be `+∞`, in which case the tail is
/// truncated once successive doubling panels stop contributing.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    splits: &[f64],
    rel_tol: f64,
    max_panels: usize,
) -> Result<Estimate> {
    if !(rel_tol > 0.0 && rel_tol <= 1e-2) {
        return Err(invalid("rel_tol", format!("must lie in (0, 1e-2], got {rel_tol}")));
    }
    if !(a.is_finite() && b > a) {
        if a == b {
            return Ok(Estimate {
                value: 0.0,
                error: 0.0,
                panels: 0,
            });
        }
        return Err(invalid("interval", format!("need finite a < b, got [{a}, {b}]")));
    }
    if b.is_infinite() {
        let finite_end = splits
            .iter()
            .copied()
            .filter(|s| s.is_finite() && *s > a)
            .fold(a + 1.0, f64::max);
        let head = integrate_finite(&f, a, finite_end, splits, rel_tol, max_panels)?;
        let mut total = head.value;
        let mut error = head.error;
        let mut panels = head.panels;
        let mut lo = finite_end;
        let mut width = (finite_end - a).max(1.0);
        let mut quiet = 0;
        for _ in 0..200 {
            let hi = lo + width;
            let piece = integrate_finite(&f, lo, hi, &[], rel_tol, max_panels - panels.min(max_panels))?;
            total += piece.value;
            error += piece.error;
            panels += piece.panels;
            if piece.value.abs() <= 1e-2 * rel_tol * total.abs() || piece.value == 0.0 {
                quiet += 1;
                if quiet >= 2 {
                    return Ok(Estimate {
                        value: total,
                        error,
                        panels,
                    });
                }
            } else {
                quiet = 0;
            }
            lo = hi;
            width *= 2.0;
        }
        return Err(GapError::Accuracy {
            estimate: total,
            error,
            panels,
        });
    }
    integrate_finite(&f, a, b, splits, rel_tol, max_panels)
}

fn integrate_finite<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    splits: &[f64],
    rel_tol: f64,
    max_panels: usize,
) -> Result<Estimate> {
    let mut edges: Vec<f64> = std::iter::once(a)
        .chain(splits.iter().copied().filter(|s| *s > a && *s < b))
        .chain(std::iter::once(b))
        .collect();
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let mut heap: BinaryHeap<Panel> = edges.windows(2).map(|w| kronrod_panel(f, w[0], w[1])).collect();
    let mut frozen: Vec<Panel> = Vec::new();
    let mut count = heap.len();
    let (mut value, mut error, mut abs_value) = heap
        .iter()
        .fold((0.0, 0.0, 0.0), |(v, e, s), p| (v + p.value, e + p.error, s + p.abs_value));

    loop {
        let target = (rel_tol * value.abs()).max(50.0 * f64::EPSILON * abs_value);
        let frozen_error: f64 = frozen.iter().map(|p| p.error).sum();
        if error <= target || error - frozen_error <= target || heap.is_empty() {
            break;
        }
        if count >= max_panels {
            return Err(GapError::Accuracy {
                estimate: value,
                error,
                panels: count,
            });
        }
        let worst = heap.pop().unwrap();
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) || (worst.b - worst.a) < 1e-13 * worst.a.abs().max(1e-300) {
            frozen.push(worst);
            continue;
        }
        let left = kronrod_panel(f, worst.a, mid);
        let right = kronrod_panel(f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error = (error + left.error + right.error - worst.error).max(0.0);
        abs_value += left.abs_value + right.abs_value - worst.abs_value;
        heap.push(left);
        heap.push(right);
        count += 1;
        if count % 256 == 0 {
            // refresh running sums against drift
            let (v, e, s) = heap
                .iter()
                .chain(frozen.iter())
                .fold((0.0, 0.0, 0.0), |(v, e, s), p| (v + p.value, e + p.error, s + p.abs_value));
            value = v;
            error = e;
            abs_value = s;
        }
    }

    let mut all: Vec<Panel> = heap.into_vec();
    all.extend(frozen);
    all.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = all.iter().map(|p| p.value).sum();
    let error = all.iter().map(|p| p.error).sum();
    Ok(Estimate {
        value,
        error,
        panels: count,
    })
}

/// Integrator for `∫ f(t)·e^{−λt}·w(t) dt` with `w` the volume weight of a
/// model space and `λ` an optional exponential tilt.
#[derive(Debug, Clone, Copy)]
pub struct RadialIntegrator {
    pub space: ModelSpace,
    pub rel_tol: f64,
    pub max_panels: usize,
    pub tilt: f64,
}

impl RadialIntegrator {
    pub fn new(space: ModelSpace) -> Self {
        Self {
            space,
            rel_tol: DEFAULT_REL_TOL,
            max_panels: DEFAULT_MAX_PANELS,
            tilt: 0.0,
        }
    }

    pub fn rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn tilt(mut self, tilt: f64) -> Self {
        self.tilt = tilt;
        self
    }

    /// `e^{−λt}·w(t)`, evaluated in log space.
    pub fn weight(&self, t: f64) -> f64 {
        match self.space.ln_volume_weight(t) {
            Ok(lw) => (lw - self.tilt * t).exp(),
            Err(_) => 0.0,
        }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64, splits: &[f64]) -> Result<Estimate> {
        if a < 0.0 {
            return Err(invalid("interval", "radial integrals start at t >= 0"));
        }
        integrate(
            |t| {
                let g = f(t);
                if g == 0.0 {
                    0.0
                } else {
                    g * self.weight(t)
                }
            },
            a,
            b,
            splits,
            self.rel_tol,
            self.max_panels,
        )
    }
}

/// `∫_a^b f(t)·w(t) dt` against the volume weight of `space`.
pub fn integrate_radial<F: Fn(f64) -> f64>(
    f: F,
    interval: (f64, f64),
    space: &ModelSpace,
    splits: &[f64],
    rel_tol: f64,
) -> Result<f64> {
    RadialIntegrator::new(*space)
        .rel_tol(rel_tol)
        .integrate(f, interval.0, interval.1, splits)
        .map(|e| e.value)
}

/// Which radial quantity an `L^p` functional integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Functional {
    /// `u`
    Value,
    /// `u′`, the radial gradient
    Gradient,
    /// `Δu`
    Laplacian,
    /// `Δ^k u`
    IteratedLaplacian(usize),
    /// `(Δ^k u)′`
    GradientOfIteratedLaplacian(usize),
}

impl Functional {
    fn split(self) -> (usize, usize) {
        match self {
            Functional::Value => (0, 0),
            Functional::Gradient => (0, 1),
            Functional::Laplacian => (1, 0),
            Functional::IteratedLaplacian(k) => (k, 0),
            Functional::GradientOfIteratedLaplacian(k) => (k, 1),
        }
    }
}

/// Scaled evaluator for the quantity a functional integrates, with its decay rate.
pub(crate) struct Quantity {
    profile: RadialProfile,
    order: usize,
}

impl Quantity {
    pub(crate) fn new(u: &RadialProfile, kind: Functional, space: &ModelSpace) -> Result<Self> {
        let (k, order) = kind.split();
        let profile = radial_laplacian_iter(u, k, space)?;
        if let Some(max) = profile.max_order() {
            if order > max {
                return Err(GapError::Smoothness {
                    needed: 2 * k + order,
                    available: max + 2 * k,
                });
            }
        }
        Ok(Self { profile, order })
    }

    pub(crate) fn decay(&self) -> f64 {
        self.profile.decay()
    }

    /// Scaled value at `t`; breakpoints are measure-zero and evaluate to 0.
    pub(crate) fn scaled(&self, t: f64) -> f64 {
        let mut buf = [0.0; 2];
        match self.profile.fill_scaled(t, &mut buf[..=self.order]) {
            Ok(()) => buf[self.order],
            Err(_) => 0.0,
        }
    }
}

fn is_even_integer(p: f64) -> bool {
    p.fract() == 0.0 && (p as i64) % 2 == 0
}

/// Extra split points at sign changes of `g`, located by bisection on a
/// sampling grid laid over each sub-interval.
pub(crate) fn sign_change_splits<F: Fn(f64) -> f64>(g: &F, edges: &[f64]) -> Vec<f64> {
    const SAMPLES: usize = 64;
    let mut roots = Vec::new();
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if !(hi > lo) || !hi.is_finite() {
            continue;
        }
        let step = (hi - lo) / SAMPLES as f64;
        // stay off the edges, where one-sided values may jump
        let mut prev_t = lo + 1e-9 * step;
        let mut prev = g(prev_t);
        for i in 1..=SAMPLES {
            let t = if i == SAMPLES { hi - 1e-9 * step } else { lo + i as f64 * step };
            let cur = g(t);
            if prev != 0.0 && cur != 0.0 && prev.signum() != cur.signum() {
                let (mut a, mut b) = (prev_t, t);
                let fa_sign = prev.signum();
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if !(m > a && m < b) {
                        break;
                    }
                    if g(m).signum() == fa_sign {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                roots.push(0.5 * (a + b));
            }
            prev_t = t;
            prev = cur;
        }
    }
    roots
}

/// Options for a weighted `L^p` integral beyond the plain volume element.
#[derive(Clone, Copy)]
pub(crate) struct LpOptions<'a> {
    pub domain: Option<(f64, f64)>,
    pub extra_weight: Option<&'a dyn Fn(f64) -> f64>,
    pub rel_tol: f64,
}

impl Default for LpOptions<'_> {
    fn default() -> Self {
        Self {
            domain: None,
            extra_weight: None,
            rel_tol: DEFAULT_REL_TOL,
        }
    }
}

/// `∫ |X(t)|^p·ω(t)·w(t) dt` for the quantity `X` selected by `kind`.
pub(crate) fn lp_integral(
    u: &RadialProfile,
    p: f64,
    kind: Functional,
    space: &ModelSpace,
    opts: LpOptions<'_>,
) -> Result<f64> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(invalid("p", format!("exponent must be positive, got {p}")));
    }
    let q = Quantity::new(u, kind, space)?;
    let (lo, hi) = opts.domain.unwrap_or(u.support());
    let (lo, hi) = (lo.max(u.support().0), hi.min(u.support().1));
    if !(hi > lo) {
        return Ok(0.0);
    }
    let mut edges: Vec<f64> = std::iter::once(lo)
        .chain(u.breakpoints().iter().copied().filter(|b| *b > lo && *b < hi))
        .chain(std::iter::once(hi))
        .collect();
    edges.dedup();
    let mut splits: Vec<f64> = edges[1..edges.len() - 1].to_vec();
    if !is_even_integer(p) {
        let g = |t: f64| q.scaled(t);
        splits.extend(sign_change_splits(&g, &edges));
        splits.sort_by(f64::total_cmp);
    }
    let integrator = RadialIntegrator::new(*space)
        .rel_tol(opts.rel_tol)
        .tilt(p * q.decay());
    let est = integrator.integrate(
        |t| {
            let x = q.scaled(t);
            if x == 0.0 {
                return 0.0;
            }
            let base = if p == 2.0 { x * x } else { x.abs().powf(p) };
            match opts.extra_weight {
                Some(wf) => base * wf(t),
                None => base,
            }
        },
        lo,
        hi,
        &splits,
    )?;
    Ok(est.value)
}

/// `∫ |X|^p dv` where `X` is `u`, `u′`, `Δu` (or iterates), over the
/// profile support intersected with `domain`.
pub fn lp_functional(
    u: &RadialProfile,
    p: f64,
    kind: Functional,
    space: &ModelSpace,
    domain: Option<(f64, f64)>,
) -> Result<f64> {
    if !(p > 1.0) && p != 1.0 {
        return Err(invalid("p", "exponent must be >= 1"));
    }
    lp_integral(
        u,
        p,
        kind,
        space,
        LpOptions {
            domain,
            ..Default::default()
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum QuotientKind {
    /// `∫|Δu|^p / ∫|u|^p`
    Clamped,
    /// `∫|Δu|² / ∫|u′|²`
    Buckling,
    /// `∫|u′|^p / ∫|u|^p`
    Membrane,
}

pub fn rayleigh_quotient(u: &RadialProfile, p: f64, kind: QuotientKind, space: &ModelSpace) -> Result<f64> {
    if !(p > 1.0) {
        return Err(invalid("p", "exponent must exceed 1"));
    }
    let (num, den) = match kind {
        QuotientKind::Clamped => (Functional::Laplacian, Functional::Value),
        QuotientKind::Buckling => {
            if p != 2.0 {
                return Err(invalid("p", "buckling quotient is defined for p = 2 only"));
            }
            (Functional::Laplacian, Functional::Gradient)
        }
        QuotientKind::Membrane => (Functional::Gradient, Functional::Value),
    };
    let denominator = lp_functional(u, p, den, space, None)?;
    if !(denominator > 0.0) {
        return Err(GapError::Degenerate(format!("{den:?} integral vanishes")));
    }
    Ok(lp_functional(u, p, num, space, None)? / denominator)
}

/// Two integrals that an identity says should agree.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

impl IdentityCheck {
    pub fn relative(&self) -> f64 {
        let scale = self.lhs.abs().max(self.rhs.abs());
        if scale == 0.0 {
            0.0
        } else {
            self.residual / scale
        }
    }
}

fn shared_window(u: &RadialProfile, v: &RadialProfile) -> Option<((f64, f64), Vec<f64>)> {
    let lo = u.support().0.max(v.support().0);
    let hi = u.support().1.min(v.support().1);
    if !(hi > lo) {
        return None;
    }
    let mut splits: Vec<f64> = u
        .breakpoints()
        .iter()
        .chain(v.breakpoints())
        .copied()
        .filter(|b| *b > lo && *b < hi)
        .collect();
    splits.sort_by(f64::total_cmp);
    splits.dedup();
    Some(((lo, hi), splits))
}

fn product_integral(
    a: &RadialProfile,
    a_order: usize,
    b: &RadialProfile,
    b_order: usize,
    window: (f64, f64),
    splits: &[f64],
    space: &ModelSpace,
) -> Result<f64> {
    let integrator = RadialIntegrator::new(*space).tilt(a.decay() + b.decay());
    let pick = |prof: &RadialProfile, order: usize, t: f64| {
        let mut buf = [0.0; 2];
        match prof.fill_scaled(t, &mut buf[..=order]) {
            Ok(()) => buf[order],
            Err(_) => 0.0,
        }
    };
    integrator
        .integrate(|t| pick(a, a_order, t) * pick(b, b_order, t), window.0, window.1, splits)
        .map(|e| e.value)
}

/// Green's second identity: `∫uΔv dv` against `∫vΔu dv`.
pub fn green_identity(u: &RadialProfile, v: &RadialProfile, space: &ModelSpace) -> Result<IdentityCheck> {
    let Some((window, splits)) = shared_window(u, v) else {
        return Ok(IdentityCheck {
            lhs: 0.0,
            rhs: 0.0,
            residual: 0.0,
        });
    };
    let lap_u = radial_laplacian_iter(u, 1, space)?;
    let lap_v = radial_laplacian_iter(v, 1, space)?;
    let lhs = product_integral(u, 0, &lap_v, 0, window, &splits, space)?;
    let rhs = product_integral(v, 0, &lap_u, 0, window, &splits, space)?;
    Ok(IdentityCheck {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}

/// `|∫uΔv dv − ∫vΔu dv|`.
pub fn green_identity_residual(u: &RadialProfile, v: &RadialProfile, space: &ModelSpace) -> Result<f64> {
    green_identity(u, v, space).map(|c| c.residual)
}

/// Integration by parts: `∫uΔv dv` against `−∫u′v′ dv`.
pub fn integration_by_parts(u: &RadialProfile, v: &RadialProfile, space: &ModelSpace) -> Result<IdentityCheck> {
    let Some((window, splits)) = shared_window(u, v) else {
        return Ok(IdentityCheck {
            lhs: 0.0,
            rhs: 0.0,
            residual: 0.0,
        });
    };
    let lap_v = radial_laplacian_iter(v, 1, space)?;
    let lhs = product_integral(u, 0, &lap_v, 0, window, &splits, space)?;
    let rhs = -product_integral(u, 1, v, 1, window, &splits, space)?;
    Ok(IdentityCheck {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize) -> ModelSpace {
        ModelSpace::euclidean(n).unwrap()
    }
    fn h(n: usize, k: f64) -> ModelSpace {
        ModelSpace::hyperbolic(n, k).unwrap()
    }

    #[test]
    fn kronrod_weights_sum_to_two() {
        let k: f64 = 2.0 * WGK[..7].iter().sum::<f64>() + WGK[7];
        let g: f64 = 2.0 * WG[..3].iter().sum::<f64>() + WG[3];
        assert!((k - 2.0).abs() < 1e-15);
        assert!((g - 2.0).abs() < 1e-15);
    }

    #[test]
    fn integrate_radial_examples() {
        let v = integrate_radial(|_| 1.0, (0.0, 1.0), &e(2), &[], 1e-9).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        let v = integrate_radial(|_| 1.0, (0.0, 1.0), &h(2, 1.0), &[], 1e-9).unwrap();
        assert!((v - 0.5430806348152437).abs() < 1e-12);
        let v = integrate_radial(|t| (-2.0 * t).exp(), (0.0, f64::INFINITY), &h(2, 1.0), &[], 1e-9).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn polynomial_exactness() {
        // ∫_0^2 t^d · t^{n−1} dt = 2^{d+n}/(d+n)
        for n in 2..=12 {
            for d in 0..=10 {
                let v = integrate_radial(|t| t.powi(d as i32), (0.0, 2.0), &e(n), &[], 1e-9).unwrap();
                let exact = 2f64.powi((d + n) as i32) / (d + n) as f64;
                assert!((v - exact).abs() < 1e-12 * exact, "n={n} d={d}");
            }
        }
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(integrate_radial(|_| 1.0, (0.0, 1.0), &e(2), &[], 0.1).is_err());
        assert!(integrate_radial(|_| 1.0, (0.0, 1.0), &e(2), &[], 0.0).is_err());
    }

    #[test]
    fn panel_budget_exhaustion_reports_estimate() {
        let err = integrate(|t: f64| t.sin() / t.powf(0.999), 0.0, 1.0, &[], 1e-12, 20).unwrap_err();
        match err {
            GapError::Accuracy { estimate, panels, .. } => {
                assert!(estimate > 0.0);
                assert_eq!(panels, 20);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn membrane_quotient_of_parabola() {
        let u = RadialProfile::polynomial(vec![1.0, 0.0, -1.0], 1.0).unwrap();
        let q = rayleigh_quotient(&u, 2.0, QuotientKind::Membrane, &e(3)).unwrap();
        assert!((q - 10.5).abs() < 1e-10);
    }

    #[test]
    fn gradient_functional_of_tent() {
        let u = RadialProfile::polynomial(vec![1.0, -1.0], 1.0).unwrap();
        let v = lp_functional(&u, 2.0, Functional::Gradient, &e(2), None).unwrap();
        assert!((v - 0.5).abs() < 1e-14);
    }

    #[test]
    fn buckling_requires_p_two() {
        let u = RadialProfile::polynomial(vec![1.0, 0.0, -2.0, 0.0, 1.0], 1.0).unwrap();
        assert!(rayleigh_quotient(&u, 3.0, QuotientKind::Buckling, &e(3)).is_err());
        assert!(rayleigh_quotient(&u, 2.0, QuotientKind::Buckling, &e(3)).is_ok());
    }

    #[test]
    fn degenerate_denominator() {
        let u = RadialProfile::polynomial(vec![0.0], 1.0).unwrap();
        assert!(matches!(
            rayleigh_quotient(&u, 2.0, QuotientKind::Clamped, &e(3)),
            Err(GapError::Degenerate(_))
        ));
    }

    #[test]
    fn green_identity_for_bumps() {
        // (1−t²)² and (1−t²)³
        let u = RadialProfile::polynomial(vec![1.0, 0.0, -2.0, 0.0, 1.0], 1.0).unwrap();
        let v = RadialProfile::polynomial(vec![1.0, 0.0, -3.0, 0.0, 3.0, 0.0, -1.0], 1.0).unwrap();
        for space in [e(3), h(2, 1.0)] {
            assert!(green_identity_residual(&u, &v, &space).unwrap() < 1e-9);
            let ibp = integration_by_parts(&u, &v, &space).unwrap();
            assert!(ibp.relative() < 1e-8, "{ibp:?}");
        }
    }

    #[test]
    fn green_identity_disjoint_supports() {
        let u = RadialProfile::polynomial(vec![1.0, 0.0, -1.0], 1.0).unwrap();
        let v = RadialProfile::new(
            (2.0, 3.0),
            0.0,
            None,
            vec![],
            std::sync::Arc::new(|t: f64, out: &mut [f64]| {
                out.fill(0.0);
                out[0] = (t - 2.0) * (3.0 - t);
            }),
        )
        .unwrap();
        assert_eq!(green_identity_residual(&u, &v, &e(3)).unwrap(), 0.0);
    }

    #[test]
    fn sign_changes_are_located() {
        let g = |t: f64| (t - 0.3) * (t - 0.71);
        let roots = sign_change_splits(&g, &[0.0, 1.0]);
        assert_eq!(roots.len(), 2);
        assert!((roots[0] - 0.3).abs() < 1e-12 && (roots[1] - 0.71).abs() < 1e-12);
    }

    #[test]
    fn non_even_exponent_integrates_through_zero_crossings() {
        // ∫_0^1 |1−2t|^3 t dt = 1/8
        let u = RadialProfile::polynomial(vec![1.0, -2.0], 1.0).unwrap();
        let v = lp_functional(&u, 3.0, Functional::Value, &e(2), None).unwrap();
        let m = 200_000;
        let hstep = 1.0 / m as f64;
        let reference: f64 = (0..m)
            .map(|i| {
                let t = (i as f64 + 0.5) * hstep;
                (1.0 - 2.0 * t).abs().powi(3) * t * hstep
            })
            .sum();
        assert!((v - reference).abs() < 1e-9);
        assert!((v - 0.125).abs() < 1e-12);
    }
}
