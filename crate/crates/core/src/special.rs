//! Legendre polynomials and Riccati-Bessel functions.

use crate::error::{Error, Result};

/// Legendre polynomial `P_l(x)` by the three-term recurrence
/// `(k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}`.
///
/// `P_l(1) = 1` and `P_l(-1) = (-1)^l` hold exactly in floating point.
pub fn legendre(l: usize, x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!(
            "legendre argument {x} outside [-1, 1]"
        )));
    }
    Ok(legendre_unchecked(l, x))
}

pub(crate) fn legendre_unchecked(l: usize, x: f64) -> f64 {
    let mut p_prev = 1.0;
    if l == 0 {
        return p_prev;
    }
    let mut p = x;
    for k in 1..l {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = next;
    }
    p
}

/// `[P_0(x), ..., P_{l_max}(x)]` in a single recurrence pass.
pub fn legendre_table(l_max: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(l_max + 1);
    out.push(1.0);
    if l_max == 0 {
        return out;
    }
    out.push(x);
    for k in 1..l_max {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * out[k] - kf * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

/// Riccati-Bessel functions `ĵ_l(x) = x j_l(x)` and `ŷ_l(x) = x y_l(x)`.
///
/// Asymptotically `ĵ_l -> sin(x - lπ/2)` and `ŷ_l -> -cos(x - lπ/2)`.
/// `ŷ_l` uses upward recurrence, which is stable for the irregular solution.
/// `ĵ_l` uses upward recurrence when `x > l` and Miller's downward recurrence otherwise.
pub fn riccati_bessel(l: usize, x: f64) -> (f64, f64) {
    debug_assert!(x > 0.0);
    (riccati_j(l, x), riccati_y(l, x))
}

pub fn riccati_y(l: usize, x: f64) -> f64 {
    let mut y0 = -x.cos();
    if l == 0 {
        return y0;
    }
    let mut y1 = y0 / x - x.sin();
    for k in 1..l {
        let y2 = (2 * k + 1) as f64 / x * y1 - y0;
        y0 = y1;
        y1 = y2;
    }
    y1
}

pub fn riccati_j(l: usize, x: f64) -> f64 {
    let j0 = x.sin();
    if l == 0 {
        return j0;
    }
    if x > l as f64 {
        let mut a = j0;
        let mut b = j0 / x - x.cos();
        for k in 1..l {
            let c = (2 * k + 1) as f64 / x * b - a;
            a = b;
            b = c;
        }
        return b;
    }
    // Miller: start well above l and recur downward, then normalise.
    let start = l + 20 + (x as usize) + ((40.0 * (l as f64 + 1.0)).sqrt() as usize);
    let mut above = 0.0;
    let mut cur = 1e-30;
    let mut at_l = 0.0;
    for k in (1..=start).rev() {
        let below = (2 * k + 1) as f64 / x * cur - above;
        above = cur;
        cur = below;
        if k - 1 == l {
            at_l = cur;
        }
        if cur.abs() > 1e250 {
            above *= 1e-250;
            cur *= 1e-250;
            at_l *= 1e-250;
        }
    }
    // `cur` is now proportional to ĵ_0, `above` to ĵ_1.
    let j1 = j0 / x - x.cos();
    if j0.abs() >= j1.abs() {
        at_l * j0 / cur
    } else {
        at_l * j1 / above
    }
}
