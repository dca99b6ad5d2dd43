//! Side conditions for the Riccati-pair method.
//!
//! An ODI system `(L, W, w, G, H, p)` yields
//! `∫|Δu|^p w ≥ ∫ W |u|^p` when `(wG)′ ≤ 0` and the ordinary inequality
//! `(p−1)[2(wGH)′ + 2wGHL − pwGH² − wG^{p′}] − (wG)″ − (wG)′L ≥ W` hold.
//! A PDI system yields `∫|Δu|² ≥ ∫ (2G − W)|∇u|²` when
//! `(WH)′ + WHL − WH² ≥ Δ_g G + G²`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, GapError, Result};
use crate::modelspace::ModelSpace;
use crate::specialfn::{bessel_j, first_zero_j, BesselOrder};

/// Relative slack on residual signs, scaled by the magnitude of the terms.
pub const RESIDUAL_SLACK: f64 = 1e-10;
/// Default log-grid size for residual sweeps.
pub const DEFAULT_GRID: usize = 2048;

type Jet = dyn Fn(f64) -> [f64; 3] + Send + Sync;

/// A positive scalar function of `t > 0` with closed-form `f, f′` and
/// optionally `f″`.
#[derive(Clone)]
pub struct ParamFn {
    jet: Arc<Jet>,
    has_d2: bool,
}

impl fmt::Debug for ParamFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParamFn").field("has_d2", &self.has_d2).finish()
    }
}

impl ParamFn {
    /// `jet(t) = [f(t), f′(t), f″(t)]`; the last slot is ignored unless `has_d2`.
    pub fn new(has_d2: bool, jet: impl Fn(f64) -> [f64; 3] + Send + Sync + 'static) -> Self {
        Self {
            jet: Arc::new(jet),
            has_d2,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(true, move |_| [c, 0.0, 0.0])
    }

    /// `c·t^e`.
    pub fn power(c: f64, e: f64) -> Self {
        Self::new(true, move |t| {
            let v = c * t.powf(e);
            [v, e * v / t, e * (e - 1.0) * v / (t * t)]
        })
    }

    pub fn has_d2(&self) -> bool {
        self.has_d2
    }

    pub fn value(&self, t: f64) -> f64 {
        (self.jet)(t)[0]
    }

    pub fn d1(&self, t: f64) -> f64 {
        (self.jet)(t)[1]
    }

    pub fn d2(&self, t: f64) -> Result<f64> {
        if !self.has_d2 {
            return Err(GapError::UnderSpecified("second derivative not provided".into()));
        }
        Ok((self.jet)(t)[2])
    }

    /// Largest relative disagreement between the closed-form derivatives and
    /// centered differences at `samples` log-uniform points of `interval`.
    pub fn derivative_error(&self, interval: (f64, f64), samples: usize, seed: u64) -> f64 {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = (interval.0.ln(), interval.1.ln());
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let t = rng.random_range(lo..hi).exp();
            let [f, f1, f2] = (self.jet)(t);
            let h = 1e-3 * t;
            let fd1 = crate::oracle::central_difference(|x| (self.jet)(x)[0], t, h);
            worst = worst.max((f1 - fd1).abs() / f1.abs().max(f.abs() / t).max(1e-300));
            if self.has_d2 {
                let fd2 = crate::oracle::central_difference(|x| (self.jet)(x)[1], t, h);
                worst = worst.max((f2 - fd2).abs() / f2.abs().max(f1.abs() / t).max(1e-300));
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Mode {
    /// Ordinary differential inequality, conditions on `(wG)′` and `(wG)″`.
    Odi,
    /// Partial differential inequality for the buckling form, `p = 2`.
    Pdi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    ClampedConstant,
    BucklingConstant,
    WeightedRellich,
    RellichBessel,
    RellichHyperbolic,
    RellichGradient,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::ClampedConstant,
        Family::BucklingConstant,
        Family::WeightedRellich,
        Family::RellichBessel,
        Family::RellichHyperbolic,
        Family::RellichGradient,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Family::ClampedConstant => "clamped_constant",
            Family::BucklingConstant => "buckling_constant",
            Family::WeightedRellich => "weighted_rellich",
            Family::RellichBessel => "rellich_bessel",
            Family::RellichHyperbolic => "rellich_hyperbolic",
            Family::RellichGradient => "rellich_gradient",
        }
    }

    /// Identifier of the result the family certifies.
    pub fn theorem(self) -> &'static str {
        match self {
            Family::ClampedConstant => "T1.1",
            Family::BucklingConstant => "T1.2",
            Family::WeightedRellich => "T5.1",
            Family::RellichBessel => "T5.4",
            Family::RellichHyperbolic => "T5.5",
            Family::RellichGradient => "T5.6",
        }
    }

    pub fn mode(self) -> Mode {
        match self {
            Family::BucklingConstant | Family::RellichGradient => Mode::Pdi,
            _ => Mode::Odi,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Family {
    type Err = GapError;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.id() == s)
            .ok_or_else(|| invalid("family", format!("unknown family `{s}`")))
    }
}

/// Inputs to [`catalog`]. `None` for `a`, `b`, `c` selects the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyParams {
    pub n: usize,
    pub kappa: f64,
    pub p: f64,
    pub gamma: f64,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
}

impl Default for FamilyParams {
    fn default() -> Self {
        Self {
            n: 3,
            kappa: 1.0,
            p: 2.0,
            gamma: 0.0,
            a: None,
            b: None,
            c: None,
        }
    }
}

impl FamilyParams {
    pub fn new(n: usize, kappa: f64, p: f64) -> Self {
        Self {
            n,
            kappa,
            p,
            ..Default::default()
        }
    }

    pub fn gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_abc(mut self, a: Option<f64>, b: Option<f64>, c: Option<f64>) -> Self {
        self.a = a;
        self.b = b;
        self.c = c;
        self
    }
}

/// The tuple `(L, W, w, G, H, p)` together with the geometry it is checked on.
#[derive(Debug, Clone)]
pub struct RiccatiSystem {
    pub l: ParamFn,
    pub big_w: ParamFn,
    pub w: ParamFn,
    pub g: ParamFn,
    pub h: ParamFn,
    pub p: f64,
    pub space: ModelSpace,
    pub mode: Mode,
    /// Closed radial window on which the family is defined.
    pub domain: (f64, f64),
    pub family: Option<Family>,
    pub params: Option<FamilyParams>,
}

impl RiccatiSystem {
    pub fn p_conjugate(&self) -> f64 {
        self.p / (self.p - 1.0)
    }
}

/// A residual with the sum of absolute values of its terms, for roundoff
/// aware sign tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub value: f64,
    pub scale: f64,
}

impl Residual {
    fn from_terms(terms: &[f64]) -> Self {
        Self {
            value: terms.iter().sum(),
            scale: terms.iter().map(|x| x.abs()).sum(),
        }
    }

    /// Residual divided by `max(1, scale)`.
    pub fn margin(&self) -> f64 {
        self.value / self.scale.max(1.0)
    }

    pub fn holds(&self) -> bool {
        self.margin() >= -RESIDUAL_SLACK
    }
}

fn require_mode(sys: &RiccatiSystem, mode: Mode) -> Result<()> {
    if sys.mode != mode {
        return Err(GapError::Mode(format!("system is {:?}, {mode:?} residual requested", sys.mode)));
    }
    Ok(())
}

fn check_radius(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(GapError::NonPositiveRadius(t));
    }
    Ok(())
}

/// The ordinary residual split into terms.
pub fn odi_residual_terms(sys: &RiccatiSystem, t: f64) -> Result<Residual> {
    require_mode(sys, Mode::Odi)?;
    check_radius(t)?;
    let p = sys.p;
    let [w, w1, _] = (sys.w.jet)(t);
    let [g, g1, _] = (sys.g.jet)(t);
    let [h, h1, _] = (sys.h.jet)(t);
    let w2 = sys.w.d2(t)?;
    let g2 = sys.g.d2(t)?;
    let l = sys.l.value(t);
    let big_w = sys.big_w.value(t);
    let wgh1 = w1 * g * h + w * g1 * h + w * g * h1;
    let wg1 = w1 * g + w * g1;
    let wg2 = w2 * g + 2.0 * w1 * g1 + w * g2;
    let q = p - 1.0;
    Ok(Residual::from_terms(&[
        q * 2.0 * wgh1,
        q * 2.0 * w * g * h * l,
        -q * p * w * g * h * h,
        -q * w * g.powf(sys.p_conjugate()),
        -wg2,
        -wg1 * l,
        -big_w,
    ]))
}

/// `(p−1)[2(wGH)′ + 2wGHL − pwGH² − wG^{p′}] − (wG)″ − (wG)′L − W` at `t`.
pub fn odi_residual_clamped(sys: &RiccatiSystem, t: f64) -> Result<f64> {
    odi_residual_terms(sys, t).map(|r| r.value)
}

fn pdi_terms(sys: &RiccatiSystem, t: f64, exact: bool) -> Result<Residual> {
    require_mode(sys, Mode::Pdi)?;
    check_radius(t)?;
    let [big_w, big_w1, _] = (sys.big_w.jet)(t);
    let [h, h1, _] = (sys.h.jet)(t);
    let [g, g1, _] = (sys.g.jet)(t);
    let g2 = sys.g.d2(t)?;
    let l = sys.l.value(t);
    // Δ_g G on the model space, or the comparison bound G″ + G′L
    let drift = if exact { sys.space.drift(t)? } else { l };
    Ok(Residual::from_terms(&[
        big_w1 * h,
        big_w * h1,
        big_w * h * l,
        -big_w * h * h,
        -g2,
        -drift * g1,
        -g * g,
    ]))
}

/// The partial residual with `Δ_g G` evaluated exactly on the model space.
pub fn pdi_residual_terms(sys: &RiccatiSystem, t: f64) -> Result<Residual> {
    pdi_terms(sys, t, true)
}

/// `(WH)′ + WHL − WH² − Δ_g G − G²` at `t`.
pub fn pdi_residual_buckling(sys: &RiccatiSystem, t: f64) -> Result<f64> {
    pdi_terms(sys, t, true).map(|r| r.value)
}

/// The partial residual with `Δ_g G` replaced by its comparison bound
/// `G″ + G′L`, valid on any manifold where `Δρ ≥ L` provided `G′ ≤ 0`.
pub fn pdi_residual_bound(sys: &RiccatiSystem, t: f64) -> Result<f64> {
    if sys.g.d1(t) > 0.0 {
        return Err(GapError::Hypothesis(format!("G is increasing at t = {t}; the bound path needs G′ ≤ 0")));
    }
    pdi_terms(sys, t, false).map(|r| r.value)
}

fn residual_for(sys: &RiccatiSystem, t: f64) -> Result<Residual> {
    match sys.mode {
        Mode::Odi => odi_residual_terms(sys, t),
        Mode::Pdi => pdi_residual_terms(sys, t),
    }
}

/// `n` log-spaced points covering `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

fn clip_interval(sys: &RiccatiSystem, interval: (f64, f64)) -> Result<(f64, f64)> {
    let lo = interval.0.max(sys.domain.0);
    let hi = interval.1.min(sys.domain.1);
    if !(lo > 0.0 && hi > lo) {
        return Err(invalid(
            "interval",
            format!("[{}, {}] does not meet the family domain", interval.0, interval.1),
        ));
    }
    Ok((lo, hi))
}

#[derive(Debug, Clone, Serialize)]
pub struct C2Report {
    /// `max (wG)′` over the grid.
    pub max_derivative: f64,
    pub argmax: f64,
    pub grid_size: usize,
    pub pass: bool,
}

/// Samples `(wG)′` on a log grid; passes iff its maximum is at most `1e-12`.
pub fn check_condition_c2(sys: &RiccatiSystem, interval: (f64, f64), grid_size: usize) -> Result<C2Report> {
    require_mode(sys, Mode::Odi)?;
    let (lo, hi) = clip_interval(sys, interval)?;
    let mut best = (f64::NEG_INFINITY, lo);
    for t in log_grid(lo, hi, grid_size.max(2)) {
        let v = sys.w.d1(t) * sys.g.value(t) + sys.w.value(t) * sys.g.d1(t);
        if v > best.0 {
            best = (v, t);
        }
    }
    Ok(C2Report {
        max_derivative: best.0,
        argmax: best.1,
        grid_size: grid_size.max(2),
        pass: best.0 <= 1e-12,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub family: Option<Family>,
    pub mode: Mode,
    pub interval: (f64, f64),
    pub grid_size: usize,
    /// Residual at the point of smallest margin.
    pub min_residual: f64,
    pub argmin: f64,
    /// Smallest `residual / max(1, Σ|terms|)`.
    pub min_margin: f64,
    pub max_abs_residual: f64,
    pub positive: bool,
    pub c2: Option<C2Report>,
    pub pass: bool,
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Sweeps the residual of the system's mode over a log grid of `interval`
/// (clipped to the family domain) and refines around the five smallest
/// margins with golden-section search.
pub fn verify_system(sys: &RiccatiSystem, interval: (f64, f64), grid_size: usize) -> Result<VerifyReport> {
    let (lo, hi) = clip_interval(sys, interval)?;
    let grid = log_grid(lo, hi, grid_size.max(3));
    let mut samples = Vec::with_capacity(grid.len());
    let mut positive = true;
    let mut max_abs: f64 = 0.0;
    for &t in &grid {
        let r = residual_for(sys, t)?;
        samples.push((r.margin(), t));
        max_abs = max_abs.max(r.value.abs());
        let vals = [sys.l.value(t), sys.w.value(t), sys.g.value(t), sys.h.value(t)];
        // W may vanish identically (gradient family at n = 8)
        if vals.iter().any(|v| !(*v > 0.0)) || !(sys.big_w.value(t) >= 0.0) {
            positive = false;
        }
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&i, &j| samples[i].0.total_cmp(&samples[j].0));
    let (mut best_margin, mut best_t) = samples[order[0]];
    for &i in order.iter().take(5) {
        let a = grid[i.saturating_sub(1)];
        let b = grid[(i + 1).min(grid.len() - 1)];
        let (s, m) = golden_min(
            |s| residual_for(sys, s.exp()).map(|r| r.margin()).unwrap_or(f64::INFINITY),
            a.ln(),
            b.ln(),
            80,
        );
        if m < best_margin {
            best_margin = m;
            best_t = s.exp();
        }
    }
    let at_min = residual_for(sys, best_t)?;
    let c2 = match sys.mode {
        Mode::Odi => Some(check_condition_c2(sys, (lo, hi), grid_size)?),
        Mode::Pdi => None,
    };
    let pass = best_margin >= -RESIDUAL_SLACK && positive && c2.as_ref().is_none_or(|c| c.pass);
    Ok(VerifyReport {
        family: sys.family,
        mode: sys.mode,
        interval: (lo, hi),
        grid_size: grid.len(),
        min_residual: at_min.value,
        argmin: best_t,
        min_margin: best_margin,
        max_abs_residual: max_abs.max(at_min.value.abs()),
        positive,
        c2,
        pass,
    })
}

/// Closed-form maximizer of a two-parameter objective, with the result of a
/// brute-force grid confirmation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Maximizer {
    pub a: f64,
    pub b: f64,
    pub value: f64,
    /// Largest objective value found on the confirmation grid.
    pub grid_max: f64,
    pub confirmed: bool,
}

const CONFIRM_GRID: usize = 201;

fn confirm_on_grid<F: Fn(f64, f64) -> Option<f64>>(f: F, x: (f64, f64), y: (f64, f64)) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for i in 0..CONFIRM_GRID {
        let a = x.0 + (x.1 - x.0) * i as f64 / (CONFIRM_GRID - 1) as f64;
        for j in 0..CONFIRM_GRID {
            let b = y.0 + (y.1 - y.0) * j as f64 / (CONFIRM_GRID - 1) as f64;
            if let Some(v) = f(a, b) {
                best = best.max(v);
            }
        }
    }
    best
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(invalid("p", format!("need p > 1, got {p}")));
    }
    Ok(())
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(invalid("n", "dimension must be at least 2"));
    }
    Ok(())
}

fn check_kappa_positive(kappa: f64) -> Result<()> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(invalid("kappa", format!("family needs kappa > 0, got {kappa}")));
    }
    Ok(())
}

/// `f(a, b) = (p−1)(2abκ(n−1) − a^{p′} − ab²p)`.
pub fn clamped_f(a: f64, b: f64, n: usize, kappa: f64, p: f64) -> f64 {
    let pc = p / (p - 1.0);
    (p - 1.0) * (2.0 * a * b * kappa * (n as f64 - 1.0) - a.powf(pc) - a * b * b * p)
}

/// Maximizer of [`clamped_f`]: `a* = X^{p−1}`, `b* = (n−1)κ/p`, value `X^p`
/// with `X = (n−1)²(p−1)κ²/p²`.
pub fn maximize_clamped_f(n: usize, kappa: f64, p: f64) -> Result<Maximizer> {
    check_n(n)?;
    check_kappa_positive(kappa)?;
    check_p(p)?;
    let m = (n as f64 - 1.0) * kappa;
    let x = m * m * (p - 1.0) / (p * p);
    let (a, b, value) = (x.powf(p - 1.0), m / p, x.powf(p));
    let grid_max = confirm_on_grid(
        |aa, bb| Some(clamped_f(aa, bb, n, kappa, p)),
        (a / 4.0, 4.0 * a),
        (b / 4.0, 4.0 * b),
    );
    Ok(Maximizer {
        a,
        b,
        value,
        grid_max,
        confirmed: grid_max <= value + 1e-8,
    })
}

/// `2a − C` with `a = √(Cb(n−1)κ − Cb²)`, or `None` where the root is imaginary.
pub fn buckling_f(b: f64, c: f64, n: usize, kappa: f64) -> Option<f64> {
    let rad = c * b * (n as f64 - 1.0) * kappa - c * b * b;
    (rad >= 0.0).then(|| 2.0 * rad.sqrt() - c)
}

/// Maximizer of [`buckling_f`] over `(b, C)`: `b* = (n−1)κ/2`,
/// `C* = (n−1)²κ²/4`, gap `(n−1)²κ²/4`. In the returned record `a` holds
/// `b*` and `b` holds `C*`.
pub fn maximize_buckling_f(n: usize, kappa: f64) -> Result<Maximizer> {
    check_n(n)?;
    check_kappa_positive(kappa)?;
    let m = (n as f64 - 1.0) * kappa;
    let (b, c) = (m / 2.0, m * m / 4.0);
    let value = m * m / 4.0;
    let grid_max = confirm_on_grid(|bb, cc| buckling_f(bb, cc, n, kappa), (b / 4.0, 4.0 * b), (c / 4.0, 4.0 * c));
    Ok(Maximizer {
        a: b,
        b: c,
        value,
        grid_max,
        confirmed: grid_max <= value + 1e-8,
    })
}

fn check_weighted_hypotheses(n: usize, p: f64, gamma: f64) -> Result<()> {
    check_p(p)?;
    let nf = n as f64;
    if !(p < nf / 2.0) {
        return Err(GapError::Hypothesis(format!("need p < n/2, got p = {p}, n = {n}")));
    }
    let lo = 2.0 - nf / p;
    let hi = nf * (p - 1.0) / p;
    if !(gamma > lo && gamma < hi) {
        return Err(GapError::Hypothesis(format!(
            "need 2 − n/p < γ < n(p−1)/p, i.e. {lo} < γ < {hi}, got γ = {gamma}"
        )));
    }
    Ok(())
}

/// The weighted Rellich objective derived from the ordinary residual with
/// `w = t^{γp}`, `G = a/t^{2p−2}`, `H = b/t`, `L = (n−1)/t`:
/// `(p−1)[2ab(e+n−2) − pab² − a^{p′}] − a·e(e+n−2)` with `e = γp − 2p + 2`.
pub fn weighted_rellich_f(a: f64, b: f64, n: usize, p: f64, gamma: f64) -> f64 {
    let e = gamma * p - 2.0 * p + 2.0;
    let nf = n as f64;
    let pc = p / (p - 1.0);
    (p - 1.0) * (2.0 * a * b * (e + nf - 2.0) - p * a * b * b - a.powf(pc)) - a * e * (e + nf - 2.0)
}

/// The same objective in the expanded form
/// `a(p−1)(2(b+1)n − (2+b)²p) + ap(2b(p−1) + 4p − n − 2)γ − ap²γ² − (p−1)a^{p′}`.
pub fn weighted_rellich_f_expanded(a: f64, b: f64, n: usize, p: f64, gamma: f64) -> f64 {
    let nf = n as f64;
    let pc = p / (p - 1.0);
    a * (p - 1.0) * (2.0 * (b + 1.0) * nf - (2.0 + b).powi(2) * p)
        + a * p * (2.0 * b * (p - 1.0) + 4.0 * p - nf - 2.0) * gamma
        - a * p * p * gamma * gamma
        - (p - 1.0) * a.powf(pc)
}

/// Maximizer of [`weighted_rellich_f`]: `b* = n/p − 2 + γ`,
/// `a* = (b*(n−2−b*))^{p−1}`, value `(b*(n−2−b*))^p`.
pub fn maximize_weighted_rellich_f(n: usize, p: f64, gamma: f64) -> Result<Maximizer> {
    check_weighted_hypotheses(n, p, gamma)?;
    let nf = n as f64;
    let b = nf / p - 2.0 + gamma;
    let y = b * (nf - 2.0 - b);
    let (a, value) = (y.powf(p - 1.0), y.powf(p));
    let grid_max = confirm_on_grid(
        |aa, bb| Some(weighted_rellich_f(aa, bb, n, p, gamma)),
        (a / 4.0, 4.0 * a),
        (b / 4.0, 4.0 * b),
    );
    Ok(Maximizer {
        a,
        b,
        value,
        grid_max,
        confirmed: grid_max <= value + 1e-8 * value.max(1.0),
    })
}

fn reject_free(family: Family, params: &FamilyParams) -> Result<()> {
    if params.a.is_some() || params.b.is_some() || params.c.is_some() {
        return Err(invalid(
            "a/b/C",
            format!("family {family} has no free parameters"),
        ));
    }
    Ok(())
}

/// `csch²(x)` without overflow for large `x`.
fn csch2(x: f64) -> f64 {
    let e = (-2.0 * x).exp();
    4.0 * e / ((1.0 - e) * (1.0 - e))
}

/// Assembles a named parameter family. Unset `a`, `b`, `C` take their
/// optimal values.
pub fn catalog(family: Family, params: FamilyParams) -> Result<RiccatiSystem> {
    let FamilyParams { n, kappa, p, gamma, .. } = params;
    check_n(n)?;
    let nf = n as f64;
    let m = (nf - 1.0) * kappa;
    let full = (0.0, f64::INFINITY);
    let sys = |l, big_w, w, g, h, p, space, domain| RiccatiSystem {
        l,
        big_w,
        w,
        g,
        h,
        p,
        space,
        mode: family.mode(),
        domain,
        family: Some(family),
        params: Some(params),
    };
    match family {
        Family::ClampedConstant => {
            check_kappa_positive(kappa)?;
            check_p(p)?;
            let opt = maximize_clamped_f(n, kappa, p)?;
            let a = params.a.unwrap_or(opt.a);
            let b = params.b.unwrap_or(opt.b);
            let c = params.c.unwrap_or(opt.value);
            Ok(sys(
                ParamFn::constant(m),
                ParamFn::constant(c),
                ParamFn::constant(1.0),
                ParamFn::constant(a),
                ParamFn::constant(b),
                p,
                ModelSpace::hyperbolic(n, kappa)?,
                full,
            ))
        }
        Family::BucklingConstant => {
            check_kappa_positive(kappa)?;
            if p != 2.0 {
                return Err(invalid("p", "buckling families are defined for p = 2 only"));
            }
            let opt = maximize_buckling_f(n, kappa)?;
            let b = params.b.unwrap_or(opt.a);
            let c = params.c.unwrap_or(opt.b);
            let a = params.a.unwrap_or_else(|| (c * b * m - c * b * b).max(0.0).sqrt());
            Ok(sys(
                ParamFn::constant(m),
                ParamFn::constant(c),
                ParamFn::constant(1.0),
                ParamFn::constant(a),
                ParamFn::constant(b),
                2.0,
                ModelSpace::hyperbolic(n, kappa)?,
                full,
            ))
        }
        Family::WeightedRellich => {
            check_weighted_hypotheses(n, p, gamma)?;
            let opt = maximize_weighted_rellich_f(n, p, gamma)?;
            let a = params.a.unwrap_or(opt.a);
            let b = params.b.unwrap_or(opt.b);
            let c = params.c.unwrap_or(opt.value);
            Ok(sys(
                ParamFn::power(nf - 1.0, -1.0),
                ParamFn::power(c, -(2.0 - gamma) * p),
                ParamFn::power(1.0, gamma * p),
                ParamFn::power(a, 2.0 - 2.0 * p),
                ParamFn::power(b, -1.0),
                p,
                ModelSpace::euclidean(n)?,
                full,
            ))
        }
        Family::RellichBessel => {
            reject_free(family, &params)?;
            if n < 5 {
                return Err(GapError::Hypothesis(format!("Bessel-improved Rellich needs n ≥ 5, got {n}")));
            }
            let (o0, o1) = (BesselOrder::new(0.0)?, BesselOrder::new(1.0)?);
            let j = first_zero_j(o0)?;
            let big_a = nf * (nf - 4.0) / 4.0;
            let c0 = big_a * big_a;
            let c1 = 2.0 * big_a * j * j;
            let big_b = move |t: f64| -> f64 {
                let x = j * t;
                let j0 = bessel_j(o0, x).unwrap_or(f64::NAN);
                let j1 = bessel_j(o1, x).unwrap_or(f64::NAN);
                j * j1 / j0
            };
            let half = (nf - 4.0) / 2.0;
            let h = ParamFn::new(false, move |t| {
                let bb = big_b(t);
                [half / t + bb, -half / (t * t) + j * j + bb * bb - bb / t, f64::NAN]
            });
            let big_w = ParamFn::new(true, move |t| {
                let t2 = t * t;
                [
                    c0 / (t2 * t2) + c1 / t2,
                    -4.0 * c0 / (t2 * t2 * t) - 2.0 * c1 / (t2 * t),
                    20.0 * c0 / (t2 * t2 * t2) + 6.0 * c1 / (t2 * t2),
                ]
            });
            Ok(sys(
                ParamFn::power(nf - 1.0, -1.0),
                big_w,
                ParamFn::constant(1.0),
                ParamFn::power(big_a, -2.0),
                h,
                2.0,
                ModelSpace::euclidean(n)?,
                (0.0, 0.99),
            ))
        }
        Family::RellichHyperbolic => {
            reject_free(family, &params)?;
            check_kappa_positive(kappa)?;
            if n < 5 {
                return Err(GapError::Hypothesis(format!("hyperbolic Rellich family needs n ≥ 5, got {n}")));
            }
            let k = kappa;
            let l = ParamFn::new(true, move |t| {
                let c = 1.0 / (k * t).tanh();
                let q = csch2(k * t);
                [m * c, -m * k * q, 2.0 * m * k * k * c * q]
            });
            let h = ParamFn::new(true, move |t| {
                let c = 1.0 / (k * t).tanh();
                let q = csch2(k * t);
                [
                    0.5 * m * c - 0.5 / t,
                    -0.5 * m * k * q + 0.5 / (t * t),
                    m * k * k * c * q - 1.0 / (t * t * t),
                ]
            });
            let (c0, c1, c2) = (m.powi(4) / 16.0, m * m / 8.0, m.powi(3) * (m - 2.0 * k) / 8.0);
            let big_w = ParamFn::new(true, move |t| {
                let c = 1.0 / (k * t).tanh();
                let q = csch2(k * t);
                let t2 = t * t;
                [
                    c0 + c1 / t2 + c2 * q,
                    -2.0 * c1 / (t2 * t) - 2.0 * c2 * k * c * q,
                    6.0 * c1 / (t2 * t2) + c2 * k * k * (2.0 * q * q + 4.0 * c * c * q),
                ]
            });
            Ok(sys(
                l,
                big_w,
                ParamFn::constant(1.0),
                ParamFn::constant(m * m / 4.0),
                h,
                2.0,
                ModelSpace::hyperbolic(n, kappa)?,
                full,
            ))
        }
        Family::RellichGradient => {
            reject_free(family, &params)?;
            if n < 8 {
                return Err(GapError::Hypothesis(format!("gradient Rellich needs n ≥ 8, got {n}")));
            }
            Ok(sys(
                ParamFn::power(nf - 1.0, -1.0),
                ParamFn::power(nf * (nf - 8.0) / 4.0, -2.0),
                ParamFn::constant(1.0),
                ParamFn::power(nf * (nf - 4.0) / 4.0, -2.0),
                ParamFn::power((nf - 4.0) / 2.0, -1.0),
                2.0,
                ModelSpace::euclidean(n)?,
                full,
            ))
        }
    }
}

/// The constant a verified family certifies, as printed in its inequality.
pub fn sharp_constant(family: Family, params: &FamilyParams) -> Result<f64> {
    let nf = params.n as f64;
    match family {
        Family::ClampedConstant => maximize_clamped_f(params.n, params.kappa, params.p).map(|m| m.value),
        Family::BucklingConstant => maximize_buckling_f(params.n, params.kappa).map(|m| m.value),
        Family::WeightedRellich => maximize_weighted_rellich_f(params.n, params.p, params.gamma).map(|m| m.value),
        Family::RellichBessel => Ok(nf * nf * (nf - 4.0).powi(2) / 16.0),
        Family::RellichHyperbolic => Ok(((nf - 1.0) * params.kappa).powi(4) / 16.0),
        Family::RellichGradient => Ok(nf * nf / 4.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, kappa: f64, p: f64) -> FamilyParams {
        FamilyParams::new(n, kappa, p)
    }

    #[test]
    fn family_ids_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.id().parse::<Family>().unwrap(), f);
        }
        assert!("nope".parse::<Family>().is_err());
    }

    #[test]
    fn clamped_constant_saturates() {
        let sys = catalog(Family::ClampedConstant, params(3, 1.0, 2.0)).unwrap();
        assert_eq!(sys.g.value(1.0), 1.0);
        assert_eq!(sys.h.value(1.0), 1.0);
        assert_eq!(sys.big_w.value(1.0), 1.0);
        for t in [1e-3, 0.7, 5.0, 1e3] {
            assert!(odi_residual_clamped(&sys, t).unwrap().abs() < 1e-12);
        }
        let half = catalog(Family::ClampedConstant, params(3, 1.0, 2.0).with_abc(None, None, Some(0.5))).unwrap();
        assert!((odi_residual_clamped(&half, 2.0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn weighted_rellich_saturates() {
        let sys = catalog(Family::WeightedRellich, params(5, 0.0, 2.0)).unwrap();
        assert!((sys.big_w.value(1.0) - 25.0 / 16.0).abs() < 1e-14);
        assert!(odi_residual_clamped(&sys, 1.0).unwrap().abs() < 1e-9);
        let report = verify_system(&sys, (1e-3, 1e3), DEFAULT_GRID).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn condition_c2_examples() {
        let sys = catalog(Family::ClampedConstant, params(3, 1.0, 2.0)).unwrap();
        assert!(check_condition_c2(&sys, (1e-3, 1e3), 256).unwrap().pass);
        let sys = catalog(Family::WeightedRellich, params(5, 0.0, 2.0)).unwrap();
        let a = sys.g.value(1.0);
        assert!((sys.w.d1(1.0) * a + sys.g.d1(1.0) + 2.0 * a).abs() < 1e-12);
        assert!(check_condition_c2(&sys, (1e-3, 1e3), 256).unwrap().pass);
        let mut bad = catalog(Family::ClampedConstant, params(3, 1.0, 2.0)).unwrap();
        bad.w = ParamFn::power(1.0, 1.0);
        bad.g = ParamFn::constant(1.0);
        let r = check_condition_c2(&bad, (1e-3, 1e3), 256).unwrap();
        assert!(!r.pass);
        assert!((r.max_derivative - 1.0).abs() < 1e-12);
    }

    #[test]
    fn buckling_constant_saturates() {
        let sys = catalog(Family::BucklingConstant, params(3, 1.0, 2.0)).unwrap();
        for t in [1e-3, 1.0, 1e3] {
            assert!(pdi_residual_buckling(&sys, t).unwrap().abs() < 1e-12);
        }
        assert!(odi_residual_clamped(&sys, 1.0).is_err());
    }

    #[test]
    fn hand_built_pdi_system() {
        let space = ModelSpace::hyperbolic(4, 1.0).unwrap();
        let sys = RiccatiSystem {
            l: ParamFn::constant(3.0),
            big_w: ParamFn::constant(1.0),
            w: ParamFn::constant(1.0),
            g: ParamFn::constant(0.0),
            h: ParamFn::constant(1.0),
            p: 2.0,
            space,
            mode: Mode::Pdi,
            domain: (0.0, f64::INFINITY),
            family: None,
            params: None,
        };
        assert!((pdi_residual_buckling(&sys, 2.0).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn gradient_family_at_n9() {
        let sys = catalog(Family::RellichGradient, params(9, 0.0, 2.0)).unwrap();
        assert!(pdi_residual_buckling(&sys, 1.0).unwrap() >= -1e-12);
        assert!(verify_system(&sys, (1e-3, 1e3), DEFAULT_GRID).unwrap().pass);
        let bound = pdi_residual_bound(&sys, 1.0).unwrap();
        assert!(bound.abs() < 1e-12);
        assert!(catalog(Family::RellichGradient, params(7, 0.0, 2.0)).is_err());
    }

    #[test]
    fn rellich_bessel_family() {
        let sys = catalog(Family::RellichBessel, params(5, 0.0, 2.0)).unwrap();
        let j = 2.404_825_557_695_773_f64;
        let j0 = bessel_j(BesselOrder::new(0.0).unwrap(), j / 2.0).unwrap();
        let j1 = bessel_j(BesselOrder::new(1.0).unwrap(), j / 2.0).unwrap();
        assert!((sys.h.value(0.5) - (1.0 + j * j1 / j0)).abs() < 1e-12);
        for t in [1e-3, 0.1, 0.5, 0.9] {
            let r = odi_residual_terms(&sys, t).unwrap();
            assert!(r.margin().abs() < 1e-12, "t={t} {r:?}");
        }
        let report = verify_system(&sys, (1e-3, 1e3), DEFAULT_GRID).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.interval.1 < 1.0);
    }

    #[test]
    fn rellich_hyperbolic_family() {
        let sys = catalog(Family::RellichHyperbolic, params(5, 1.0, 2.0)).unwrap();
        let report = verify_system(&sys, (1e-3, 1e2), DEFAULT_GRID).unwrap();
        assert!(report.pass, "{report:?}");
        for t in log_grid(1e-3, 1e2, 50) {
            assert!(odi_residual_terms(&sys, t).unwrap().margin().abs() < 1e-13);
        }
    }

    #[test]
    fn perturbed_constant_fails() {
        let opt = maximize_clamped_f(3, 1.0, 2.0).unwrap();
        let sys = catalog(
            Family::ClampedConstant,
            params(3, 1.0, 2.0).with_abc(None, None, Some(opt.value + 1e-3)),
        )
        .unwrap();
        let report = verify_system(&sys, (1e-3, 1e3), DEFAULT_GRID).unwrap();
        assert!(!report.pass);
        assert!((report.min_residual + 1e-3).abs() < 1e-12);
    }

    #[test]
    fn missing_second_derivative_is_reported() {
        let mut sys = catalog(Family::ClampedConstant, params(3, 1.0, 2.0)).unwrap();
        sys.g = ParamFn::new(false, |_| [1.0, 0.0, 0.0]);
        assert!(matches!(
            odi_residual_clamped(&sys, 1.0),
            Err(GapError::UnderSpecified(_))
        ));
    }

    #[test]
    fn maximizer_examples() {
        assert!((maximize_clamped_f(3, 1.0, 2.0).unwrap().value - 1.0).abs() < 1e-15);
        assert!((maximize_clamped_f(2, 1.0, 2.0).unwrap().value - 1.0 / 16.0).abs() < 1e-15);
        let m = maximize_clamped_f(5, 2.0, 3.0).unwrap();
        assert!((m.value / (128.0f64 / 9.0).powi(3) - 1.0).abs() < 1e-14);
        assert!(m.confirmed);
        assert!((maximize_buckling_f(3, 1.0).unwrap().value - 1.0).abs() < 1e-15);
        assert!((maximize_buckling_f(2, 2.0).unwrap().value - 1.0).abs() < 1e-15);
        assert!(maximize_buckling_f(7, 0.5).unwrap().confirmed);
        assert!((maximize_weighted_rellich_f(5, 2.0, 0.0).unwrap().value - 25.0 / 16.0).abs() < 1e-14);
        assert!((maximize_weighted_rellich_f(6, 2.0, 0.0).unwrap().value - 9.0).abs() < 1e-13);
        let w = maximize_weighted_rellich_f(8, 2.0, 1.0).unwrap();
        assert!((w.value - 81.0).abs() < 1e-12);
        assert!(w.confirmed);
    }

    #[test]
    fn weighted_objective_matches_expanded_form() {
        for (n, p, gamma) in [(5, 2.0, 0.0), (8, 2.0, 1.0), (7, 1.5, -0.5), (12, 3.0, 0.7)] {
            for (a, b) in [(0.3, 0.4), (2.0, 1.5), (5.0, 0.1)] {
                let x = weighted_rellich_f(a, b, n, p, gamma);
                let y = weighted_rellich_f_expanded(a, b, n, p, gamma);
                assert!((x - y).abs() < 1e-12 * x.abs().max(1.0), "{x} vs {y}");
            }
        }
    }

    #[test]
    fn hypotheses_are_enforced() {
        let err = catalog(Family::WeightedRellich, params(5, 0.0, 2.0).gamma(3.0)).unwrap_err();
        assert!(matches!(err, GapError::Hypothesis(msg) if msg.contains("γ")));
        assert!(catalog(Family::ClampedConstant, params(3, 0.0, 2.0)).is_err());
        assert!(catalog(Family::BucklingConstant, params(3, 1.0, 3.0)).is_err());
    }

    #[test]
    fn param_fn_derivatives_agree_with_differences() {
        for f in Family::ALL {
            let pr = match f {
                Family::RellichGradient => params(9, 0.0, 2.0),
                Family::WeightedRellich | Family::RellichBessel => params(5, 0.0, 2.0),
                _ => params(5, 1.0, 2.0),
            };
            let sys = catalog(f, pr).unwrap();
            let window = (1e-2_f64.max(sys.domain.0), 10f64.min(sys.domain.1 * 0.95));
            for (name, pf) in [("L", &sys.l), ("W", &sys.big_w), ("w", &sys.w), ("G", &sys.g), ("H", &sys.h)] {
                let err = pf.derivative_error(window, 20, 11);
                assert!(err < 1e-6, "{f} {name}: {err}");
            }
        }
    }

    #[test]
    fn clamped_constant_scales_homogeneously() {
        for (n, p) in [(2, 1.5), (3, 2.0), (5, 3.0)] {
            let unit = maximize_clamped_f(n, 1.0, p).unwrap().value;
            for kappa in [0.5, 2.0, 3.0] {
                let c = maximize_clamped_f(n, kappa, p).unwrap().value;
                assert!((c - kappa.powf(2.0 * p) * unit).abs() < 1e-12 * c.max(1.0));
            }
        }
    }
}
