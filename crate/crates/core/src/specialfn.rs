//! Bessel functions `J_μ`, `I_μ` of real nonnegative order, the first positive
//! zero `j_{μ,1}` of `J_μ`, and the first positive zero `h_μ` of the
//! clamped-plate cross product `W_μ = J_μ I_{μ+1} + I_μ J_{μ+1}`.

use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, GapError, Result};

/// Largest order for which zeros are bracketed.
pub const MAX_ZERO_ORDER: f64 = 50.0;

const SERIES_CAP: usize = 200;
/// Above this argument `J_μ` switches from the ascending series to Miller's
/// backward recurrence.
const SERIES_LIMIT: f64 = 12.0;

/// A finite, nonnegative Bessel order.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BesselOrder(f64);

impl BesselOrder {
    pub fn new(mu: f64) -> Result<Self> {
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(invalid("mu", format!("Bessel order must be finite and >= 0, got {mu}")));
        }
        Ok(Self(mu))
    }

    /// The order `n/2 − 1` attached to dimension `n ≥ 2`.
    pub fn for_dimension(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid("n", "dimension must be at least 2"));
        }
        Self::new(n as f64 / 2.0 - 1.0)
    }

    pub fn mu(self) -> f64 {
        self.0
    }

    fn shifted(self) -> Self {
        Self(self.0 + 1.0)
    }
}

/// `Σ_k sign^k (x/2)^{2k+μ} / (k! Γ(k+μ+1))`.
fn ascending_series(mu: f64, x: f64, alternating: bool) -> f64 {
    if x == 0.0 {
        return if mu == 0.0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * x;
    let mut term = (mu * half.ln() - ln_gamma(mu + 1.0)).exp();
    let q = if alternating { -half * half } else { half * half };
    let mut sum = term;
    for k in 1..SERIES_CAP {
        let kf = k as f64;
        term *= q / (kf * (kf + mu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Miller's backward recurrence, normalized with
/// `(x/2)^α = Σ_i (α+2i)Γ(α+i)/i! · J_{α+2i}(x)`, `α = μ − ⌊μ⌋`.
fn j_miller(mu: f64, x: f64) -> f64 {
    let m = mu.floor() as usize;
    let alpha = mu - m as f64;
    let start = m + x.ceil() as usize + 60;
    let start = start + start % 2;
    let coef = |i: usize| -> f64 {
        if i == 0 {
            if alpha == 0.0 {
                1.0
            } else {
                ln_gamma(alpha + 1.0).exp()
            }
        } else {
            let i_f = i as f64;
            (alpha + 2.0 * i_f) * (ln_gamma(alpha + i_f) - ln_gamma(i_f + 1.0)).exp()
        }
    };
    let mut next = 0.0;
    let mut cur = 1e-30;
    let mut norm = coef(start / 2) * cur;
    let mut target = if start == m { cur } else { 0.0 };
    for nu in (1..=start).rev() {
        let prev = 2.0 * (alpha + nu as f64) / x * cur - next;
        next = cur;
        cur = prev;
        let idx = nu - 1;
        if idx == m {
            target = cur;
        }
        if idx % 2 == 0 {
            norm += coef(idx / 2) * cur;
        }
        if cur.abs() > 1e200 {
            cur *= 1e-200;
            next *= 1e-200;
            norm *= 1e-200;
            target *= 1e-200;
        }
    }
    target * (0.5 * x).powf(alpha) / norm
}

/// `J_μ(x)`; absolute accuracy about `1e-12` for `x ≤ 50`.
pub fn bessel_j(mu: BesselOrder, x: f64) -> Result<f64> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(invalid("x", format!("argument must be finite and >= 0, got {x}")));
    }
    if x <= SERIES_LIMIT {
        Ok(ascending_series(mu.0, x, true))
    } else {
        Ok(j_miller(mu.0, x))
    }
}

/// `I_μ(x)` from its ascending series.
pub fn bessel_i(mu: BesselOrder, x: f64) -> Result<f64> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(invalid("x", format!("argument must be finite and >= 0, got {x}")));
    }
    Ok(ascending_series(mu.0, x, false))
}

/// Value at 0 of `J_μ′` and `I_μ′`, which coincide.
fn derivative_at_origin(mu: f64) -> f64 {
    if mu == 1.0 {
        0.5
    } else if mu > 0.0 && mu < 1.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// `J_μ′(x) = −J_{μ+1}(x) + (μ/x)J_μ(x)`.
pub fn bessel_j_derivative(mu: BesselOrder, x: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(derivative_at_origin(mu.0));
    }
    Ok(-bessel_j(mu.shifted(), x)? + mu.0 / x * bessel_j(mu, x)?)
}

/// `I_μ′(x) = I_{μ+1}(x) + (μ/x)I_μ(x)`.
pub fn bessel_i_derivative(mu: BesselOrder, x: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(derivative_at_origin(mu.0));
    }
    Ok(bessel_i(mu.shifted(), x)? + mu.0 / x * bessel_i(mu, x)?)
}

/// `W_μ(x) = J_μ(x)I_{μ+1}(x) + I_μ(x)J_{μ+1}(x)`.
pub fn cross_product(mu: BesselOrder, x: f64) -> Result<f64> {
    let up = mu.shifted();
    Ok(bessel_j(mu, x)? * bessel_i(up, x)? + bessel_i(mu, x)? * bessel_j(up, x)?)
}

/// First sign change of `f` scanning right from `start`, refined by bisection
/// until the bracket is below `tol`.
fn first_root<F: Fn(f64) -> Result<f64>>(f: F, start: f64, limit: f64, tol: f64, order: f64) -> Result<f64> {
    const STEP: f64 = 0.25;
    let mut a = start;
    let mut fa = f(a)?;
    while a < limit {
        let b = a + STEP;
        let fb = f(b)?;
        if fb == 0.0 {
            return Ok(b);
        }
        if fa.signum() != fb.signum() {
            let (mut lo, mut hi) = (a, b);
            for _ in 0..200 {
                if hi - lo <= tol {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                let fm = f(mid)?;
                if fm.signum() == fa.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    Err(GapError::BracketFailure { order })
}

/// `j_{μ,1}`, the first positive zero of `J_μ`, to `1e-12` absolute.
pub fn first_zero_j(mu: BesselOrder) -> Result<f64> {
    if mu.0 > MAX_ZERO_ORDER {
        return Err(GapError::BracketFailure { order: mu.0 });
    }
    // J_μ > 0 on (0, μ]
    let start = mu.0.max(0.5);
    first_root(|x| bessel_j(mu, x), start, 2.0 * MAX_ZERO_ORDER + 20.0, 1e-13, mu.0)
}

/// `h_μ`, the first positive zero of the cross product `W_μ`.
pub fn cross_product_zero(mu: BesselOrder) -> Result<f64> {
    if mu.0 > MAX_ZERO_ORDER {
        return Err(GapError::BracketFailure { order: mu.0 });
    }
    first_root(|x| cross_product(mu, x), 0.5, 2.0 * MAX_ZERO_ORDER + 20.0, 1e-13, mu.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn o(mu: f64) -> BesselOrder {
        BesselOrder::new(mu).unwrap()
    }

    #[test]
    fn values_at_origin() {
        assert_eq!(bessel_j(o(0.0), 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(o(1.0), 0.0).unwrap(), 0.0);
        assert_eq!(bessel_i(o(0.0), 0.0).unwrap(), 1.0);
        assert_eq!(bessel_i(o(1.0), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn reference_values() {
        let cases = [
            (0.0, 50.0, 0.0558123276692518150),
            (2.5, 30.0, 0.141202858799282120),
            (1.0, 20.0, 0.0668331241758500456),
            (3.5, 12.5, 0.210631109511264604),
        ];
        for (mu, x, want) in cases {
            let got = bessel_j(o(mu), x).unwrap();
            assert!((got - want).abs() < 1e-11, "J_{mu}({x}) = {got}, want {want}");
        }
        let i0 = bessel_i(o(0.0), 1.0).unwrap();
        assert!((i0 - 1.266_065_877_752_008_4).abs() < 1e-15);
        let i1 = bessel_i(o(1.0), 10.0).unwrap();
        assert!((i1 / 2670.98830370125465434 - 1.0).abs() < 1e-12);
        let i = bessel_i(o(2.5), 20.0).unwrap();
        assert!((i / 37112382.4286078057643 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn series_and_recurrence_overlap() {
        for mu in [0.0, 0.5, 1.0, 1.5, 3.0, 5.5] {
            for x in [6.0, 8.0, 10.0, 12.0] {
                let a = ascending_series(mu, x, true);
                let b = j_miller(mu, x);
                assert!((a - b).abs() < 1e-11, "mu={mu} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn half_integer_closed_forms() {
        for x in [0.3, 2.0, 7.0, 15.0, 40.0] {
            let norm = (2.0 / (std::f64::consts::PI * x)).sqrt();
            let j = bessel_j(o(0.5), x).unwrap();
            assert!((j - norm * x.sin()).abs() < 1e-12);
            let i = bessel_i(o(0.5), x).unwrap();
            assert!((i / (norm * x.sinh()) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn recurrences_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let mu = o(rng.random_range(0.0..5.0));
            let x: f64 = rng.random_range(0.5..30.0);
            let h = 1e-5;
            let fd_j = (bessel_j(mu, x + h).unwrap() - bessel_j(mu, x - h).unwrap()) / (2.0 * h);
            assert!((fd_j - bessel_j_derivative(mu, x).unwrap()).abs() < 1e-7);
            let fd_i = (bessel_i(mu, x + h).unwrap() - bessel_i(mu, x - h).unwrap()) / (2.0 * h);
            let di = bessel_i_derivative(mu, x).unwrap();
            assert!((fd_i - di).abs() < 1e-7 * di.abs().max(1.0));
        }
    }

    #[test]
    fn first_zeros() {
        let j0 = first_zero_j(o(0.0)).unwrap();
        assert!((j0 - 2.404_825_557_695_773).abs() < 1e-12);
        assert!(bessel_j(o(0.0), 2.404825557695773).unwrap().abs() < 1e-9);
        let jh = first_zero_j(o(0.5)).unwrap();
        assert!((jh - std::f64::consts::PI).abs() < 1e-12);
        let j1 = first_zero_j(o(1.0)).unwrap();
        assert!((j1 - 3.831_705_970_207_512).abs() < 1e-12);
        let j5 = first_zero_j(o(5.0)).unwrap();
        assert!((j5 - 8.771_483_815_959_954).abs() < 1e-11);
        let j50 = first_zero_j(o(50.0)).unwrap();
        assert!((j50 - 57.116_899_160_119_17).abs() < 1e-10);
    }

    #[test]
    fn first_zero_increases_with_order() {
        let mut prev = 0.0;
        for i in 0..=20 {
            let z = first_zero_j(o(i as f64 * 0.5)).unwrap();
            assert!(z > prev);
            prev = z;
        }
    }

    #[test]
    fn order_out_of_range_fails_to_bracket() {
        assert!(matches!(
            first_zero_j(o(60.0)),
            Err(GapError::BracketFailure { .. })
        ));
        assert!(BesselOrder::new(-1.0).is_err());
    }

    #[test]
    fn cross_product_zeros() {
        let h0 = cross_product_zero(o(0.0)).unwrap();
        assert!((h0 - 3.196_220_616_582_541).abs() < 1e-11);
        let hh = cross_product_zero(o(0.5)).unwrap();
        assert!((hh - 3.926_602_312_047_919).abs() < 1e-11);
        assert!((hh.tan() - hh.tanh()).abs() < 1e-9);
        let h1 = cross_product_zero(o(1.0)).unwrap();
        assert!((h1 - 4.610_899_879_049_056).abs() < 1e-11);
        let h32 = cross_product_zero(o(1.5)).unwrap();
        assert!((h32 - 5.267_657_530_336_815).abs() < 1e-11);
    }

    #[test]
    fn cross_product_is_positive_before_its_zero() {
        for mu in [0.0, 0.5, 1.0, 2.0, 5.0] {
            let h = cross_product_zero(o(mu)).unwrap();
            for i in 1..100 {
                let x = h * i as f64 / 100.0;
                assert!(cross_product(o(mu), x).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn cross_product_matches_wronskian_form() {
        for mu in [0.0, 1.0, 2.5] {
            for x in [0.7, 2.0, 5.0] {
                let m = o(mu);
                let w = bessel_j(m, x).unwrap() * bessel_i_derivative(m, x).unwrap()
                    - bessel_j_derivative(m, x).unwrap() * bessel_i(m, x).unwrap();
                let c = cross_product(m, x).unwrap();
                assert!((w - c).abs() < 1e-12 * c.abs().max(1.0));
            }
        }
    }
}
