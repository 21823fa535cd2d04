//! Bessel and Hankel functions of integer order and real argument.
//!
//! `J_n` comes from Miller's backward recurrence normalised with the Neumann
//! sum `J_0 + 2 Σ J_{2k} = 1`. `Y_0`, `Y_1` come from the Neumann series in
//! the `J_{2k}` for `x <= 30` and from the Hankel asymptotic expansion above;
//! higher `Y_n` follow by forward recurrence, which is stable for `Y`.
//! Above `x = 30` the Miller ratios for `J` are pinned to the asymptotic
//! `J_0`/`J_1`; above `x = 200` every supported order is below `x`, where
//! forward recurrence is stable for `J` as well, so Miller is skipped.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest order accepted by the public evaluators.
pub const N_MAX: usize = 120;
/// Smallest accepted argument.
pub const X_MIN: f64 = 1e-6;
/// Largest accepted argument.
pub const X_MAX: f64 = 1e4;

const ASYMPTOTIC_Y_FROM: f64 = 30.0;
const ASYMPTOTIC_J_FROM: f64 = 200.0;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Values of `J_n(x)`, `Y_n(x)` and `H_n^{(1)}(x)` for one order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cyl {
    pub j: f64,
    pub y: f64,
    pub h1: Complex64,
}

impl Cyl {
    fn new(j: f64, y: f64) -> Self {
        Cyl {
            j,
            y,
            h1: Complex64::new(j, y),
        }
    }
}

/// Integer order `n`; negative orders are folded with `Z_{-n} = (-1)^n Z_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CylinderOrder(pub i32);

impl CylinderOrder {
    pub fn abs(self) -> usize {
        self.0.unsigned_abs() as usize
    }

    /// Sign picked up when reflecting to `|n|`.
    pub fn reflection_sign(self) -> f64 {
        if self.0 < 0 && self.0 % 2 != 0 {
            -1.0
        } else {
            1.0
        }
    }
}

impl From<i32> for CylinderOrder {
    fn from(n: i32) -> Self {
        CylinderOrder(n)
    }
}

fn check_x(x: f64) -> Result<()> {
    if !(X_MIN..=X_MAX).contains(&x) {
        return Err(Error::Domain(format!(
            "Bessel argument {x} outside [{X_MIN}, {X_MAX}]"
        )));
    }
    Ok(())
}

fn check_order(n: usize) -> Result<()> {
    if n > N_MAX {
        return Err(Error::Domain(format!("order {n} exceeds N_MAX = {N_MAX}")));
    }
    Ok(())
}

/// `J_n(x)` and `Y_n(x)` for one (possibly negative) order.
pub fn bessel_jy(n: impl Into<CylinderOrder>, x: f64) -> Result<Cyl> {
    let order = n.into();
    check_order(order.abs())?;
    let all = bessel_jy_all(order.abs(), x)?;
    let c = all[order.abs()];
    let s = order.reflection_sign();
    Ok(Cyl::new(s * c.j, s * c.y))
}

/// `H_n^{(1)}(x) = J_n(x) + i Y_n(x)`.
pub fn hankel1(n: impl Into<CylinderOrder>, x: f64) -> Result<Complex64> {
    bessel_jy(n, x).map(|c| c.h1)
}

/// `d/dx H_n^{(1)}(x) = (H_{n-1} - H_{n+1}) / 2`.
pub fn hankel1_deriv(n: impl Into<CylinderOrder>, x: f64) -> Result<Complex64> {
    let order = n.into();
    check_order(order.abs())?;
    let all = jy_table(order.abs() + 1, x)?;
    let at = |m: i32| {
        let o = CylinderOrder(m);
        all[o.abs()].h1 * o.reflection_sign()
    };
    Ok((at(order.0 - 1) - at(order.0 + 1)) * 0.5)
}

/// `J_n(x)`, `Y_n(x)` for every order `0..=n_max`.
pub fn bessel_jy_all(n_max: usize, x: f64) -> Result<Vec<Cyl>> {
    check_order(n_max)?;
    jy_table(n_max, x)
}

/// Same as [`bessel_jy_all`] but allows one order past [`N_MAX`], which the
/// derivative formulas need internally.
pub(crate) fn jy_table(n_max: usize, x: f64) -> Result<Vec<Cyl>> {
    check_x(x)?;
    if n_max > N_MAX + 1 {
        return Err(Error::Domain(format!(
            "order {n_max} exceeds N_MAX = {N_MAX}"
        )));
    }
    let top = n_max.max(1);
    let j = j_values(top, x);
    let y = if x > ASYMPTOTIC_Y_FROM {
        let (_, _, y0, y1) = hankel_asymptotic01(x);
        forward_recurrence(y0, y1, top, x)
    } else {
        let (y0, y1) = neumann_y01(x)?;
        forward_recurrence(y0, y1, top, x)
    };
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        if !y[n].is_finite() {
            return Err(Error::Domain(format!(
                "Y_{n}({x}) overflows double precision"
            )));
        }
        out.push(Cyl::new(j[n], y[n]));
    }
    Ok(out)
}

fn j_values(top: usize, x: f64) -> Vec<f64> {
    if x > ASYMPTOTIC_J_FROM {
        let (j0, j1, _, _) = hankel_asymptotic01(x);
        forward_recurrence(j0, j1, top, x)
    } else if x > ASYMPTOTIC_Y_FROM {
        // Miller ratios, rescaled onto whichever asymptotic value is larger
        let (j0, j1, _, _) = hankel_asymptotic01(x);
        let mut m = miller_j(top, x);
        let scale = if j0.abs() > j1.abs() { j0 / m[0] } else { j1 / m[1] };
        m.iter_mut().for_each(|v| *v *= scale);
        m
    } else {
        miller_j(top, x)
    }
}

/// `J_n(x)` for `0..=n_max` on `[0, X_MAX]`; below `X_MIN` the first two
/// terms of the power series are used.
pub(crate) fn j_table(n_max: usize, x: f64) -> Result<Vec<f64>> {
    if !(0.0..=X_MAX).contains(&x) || n_max > N_MAX + 1 {
        return Err(Error::Domain(format!(
            "J table of order {n_max} at {x} is out of range"
        )));
    }
    if x >= X_MIN {
        let mut j = j_values(n_max.max(1), x);
        j.truncate(n_max + 1);
        return Ok(j);
    }
    let h = x / 2.0;
    let mut out = Vec::with_capacity(n_max + 1);
    let mut lead = 1.0;
    for n in 0..=n_max {
        if n > 0 {
            lead *= h / n as f64;
        }
        out.push(lead * (1.0 - h * h / (n as f64 + 1.0)));
    }
    Ok(out)
}

/// Complex `H_n^{(1)}(x)` for `0..=n_max`, allowing one order past `N_MAX`.
pub(crate) fn hankel_table(n_max: usize, x: f64) -> Result<Vec<Complex64>> {
    Ok(jy_table(n_max, x)?.into_iter().map(|c| c.h1).collect())
}

fn forward_recurrence(z0: f64, z1: f64, n_max: usize, x: f64) -> Vec<f64> {
    let mut z = Vec::with_capacity(n_max + 1);
    z.push(z0);
    z.push(z1);
    for n in 1..n_max {
        let next = (2.0 * n as f64 / x) * z[n] - z[n - 1];
        z.push(next);
    }
    z.truncate(n_max + 1);
    z
}

fn miller_start(n_max: usize, x: f64) -> usize {
    let m = n_max.max(x.ceil() as usize);
    let start = m + 20 + (40.0 * m as f64).sqrt().ceil() as usize;
    start + start % 2
}

/// Backward recurrence for `J_0..=J_{n_max}` (plus enough even orders for the
/// normalisation sum). Returns at least `n_max + 1` values.
fn miller_j(n_max: usize, x: f64) -> Vec<f64> {
    let start = miller_start(n_max, x);
    let mut vals = vec![0.0; start + 2];
    vals[start + 1] = 0.0;
    vals[start] = 1e-300;
    for n in (1..=start).rev() {
        vals[n - 1] = (2.0 * n as f64 / x) * vals[n] - vals[n + 1];
        if vals[n - 1].abs() > 1e250 {
            for v in vals[n - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let mut norm = vals[0];
    let mut k = 2;
    while k <= start {
        norm += 2.0 * vals[k];
        k += 2;
    }
    for v in vals.iter_mut() {
        *v /= norm;
    }
    vals
}

/// Neumann series for `Y_0` and `Y_1` in terms of the Miller `J` table.
fn neumann_y01(x: f64) -> Result<(f64, f64)> {
    let j = miller_j(2, x);
    let log_term = (x / 2.0).ln() + EULER_GAMMA;
    let mut sum0 = 0.0;
    let mut sum1 = 0.0;
    let mut k = 1;
    while 2 * k + 1 < j.len() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum0 += sign * j[2 * k] / k as f64;
        sum1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / k as f64;
        k += 1;
    }
    let y0 = (2.0 / PI) * (log_term * j[0] - 2.0 * sum0);
    let y1 = (2.0 / PI) * (-j[0] / x + log_term * j[1] + sum1);
    Ok((y0, y1))
}

/// Hankel asymptotic expansion of `J_0, J_1, Y_0, Y_1` for large `x`.
fn hankel_asymptotic01(x: f64) -> (f64, f64, f64, f64) {
    let (p0, q0) = hankel_pq(0.0, x);
    let (p1, q1) = hankel_pq(1.0, x);
    let amp = (2.0 / (PI * x)).sqrt();
    let chi0 = x - FRAC_PI_4;
    let chi1 = x - FRAC_PI_2 - FRAC_PI_4;
    let j0 = amp * (p0 * chi0.cos() - q0 * chi0.sin());
    let y0 = amp * (p0 * chi0.sin() + q0 * chi0.cos());
    let j1 = amp * (p1 * chi1.cos() - q1 * chi1.sin());
    let y1 = amp * (p1 * chi1.sin() + q1 * chi1.cos());
    (j0, j1, y0, y1)
}

/// The `P(nu, x)`, `Q(nu, x)` series, summed until the terms stop shrinking.
fn hankel_pq(nu: f64, x: f64) -> (f64, f64) {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        if term.abs() >= last || term == 0.0 {
            break;
        }
        last = term.abs();
        // a_k / x^k enters P with sign (-1)^{k/2} for even k, Q with (-1)^{(k-1)/2} for odd k
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 * p.abs().max(q.abs()) {
            break;
        }
    }
    (p, q)
}
