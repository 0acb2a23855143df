//! One-dimensional interpolation and root bracketing.

use crate::error::{ensure, Error, Result};

/// Piecewise-linear interpolation on strictly increasing abscissae.
#[derive(Debug, Clone)]
pub struct Linear {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Linear {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        ensure(x.len() == y.len() && x.len() >= 2, || "need at least two matching points".into())?;
        ensure(x.windows(2).all(|w| w[1] > w[0]), || "abscissae must increase strictly".into())?;
        Ok(Self { x, y })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    pub fn eval(&self, xq: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        if !(lo..=hi).contains(&xq) {
            return Err(Error::Range(format!("{xq:e} outside [{lo:e}, {hi:e}]")));
        }
        let k = self.x.partition_point(|&v| v <= xq).clamp(1, self.x.len() - 1);
        let t = (xq - self.x[k - 1]) / (self.x[k] - self.x[k - 1]);
        Ok(self.y[k - 1] + t * (self.y[k] - self.y[k - 1]))
    }
}

/// Monotone piecewise-cubic Hermite interpolation (Fritsch-Carlson slopes).
#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        ensure(x.len() == y.len() && x.len() >= 2, || "need at least two matching points".into())?;
        ensure(x.windows(2).all(|w| w[1] > w[0]), || "abscissae must increase strictly".into())?;
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
        } else {
            for k in 1..n - 1 {
                if delta[k - 1] * delta[k] > 0.0 {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
                }
            }
            d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Self { x, y, d })
    }

    pub fn eval(&self, xq: f64) -> Result<f64> {
        let n = self.x.len();
        let (lo, hi) = (self.x[0], self.x[n - 1]);
        if !(lo..=hi).contains(&xq) {
            return Err(Error::Range(format!("{xq} outside [{lo}, {hi}]")));
        }
        let k = self.x.partition_point(|&v| v <= xq).clamp(1, n - 1) - 1;
        let h = self.x[k + 1] - self.x[k];
        let t = (xq - self.x[k]) / h;
        let (t2, t3) = (t * t, t * t * t);
        Ok((2.0 * t3 - 3.0 * t2 + 1.0) * self.y[k]
            + (t3 - 2.0 * t2 + t) * h * self.d[k]
            + (-2.0 * t3 + 3.0 * t2) * self.y[k + 1]
            + (t3 - t2) * h * self.d[k + 1])
    }
}

// Three-point end condition, limited so the interpolant stays monotone.
fn end_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

/// Bisection for a sign change of `f` on [a, b].
pub fn bisect<F: FnMut(f64) -> Result<f64>>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> Result<f64> {
    let mut fa = f(a)?;
    let fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Range(format!("no sign change on [{a:e}, {b:e}]")));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= xtol {
            return Ok(m);
        }
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}
