//! Derivative-free one-dimensional search.

use crate::error::Result;
use crate::game::ActionInterval;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// First grid point attaining the maximum (ties go to the smaller action).
pub fn grid_argmax<F>(f: &mut F, interval: ActionInterval, n: usize) -> Result<(usize, f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut best = (0, interval.lo, f64::NEG_INFINITY);
    for (k, x) in interval.grid(n).enumerate() {
        let v = f(x)?;
        if v > best.2 {
            best = (k, x, v);
        }
    }
    Ok(best)
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
pub fn golden_max<F>(f: &mut F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        // `>=` keeps the left section on ties.
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
        if c >= d {
            break;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

/// Grid scan with golden refinement on the bracketing cells.
///
/// Returns the refined point only when it improves on the best grid value,
/// so plateaus resolve toward the smaller action.
pub fn maximize<F>(f: &mut F, interval: ActionInterval, n: usize, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    if interval.width() == 0.0 {
        let v = f(interval.lo)?;
        return Ok((interval.lo, v));
    }
    let n = n.max(3);
    let (k, xk, vk) = grid_argmax(f, interval, n)?;
    let step = interval.width() / (n - 1) as f64;
    let a = if k == 0 { interval.lo } else { xk - step };
    let b = if k + 1 == n { interval.hi } else { xk + step };
    let (xr, vr) = golden_max(f, a.max(interval.lo), b.min(interval.hi), tol)?;
    Ok(if vr > vk { (xr, vr) } else { (xk, vk) })
}

/// `a x² + b x + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Quadratic {
    /// Interpolates `f` at `lo`, the midpoint and `hi` (`lo < hi`).
    pub fn fit<F>(f: &mut F, lo: f64, hi: f64) -> Result<Self>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let m = 0.5 * (lo + hi);
        let (f0, f1, f2) = (f(lo)?, f(m)?, f(hi)?);
        Ok(Self::through([lo, m, hi], [f0, f1, f2]))
    }

    /// Interpolant through three points with equally spaced abscissae.
    pub fn through(x: [f64; 3], y: [f64; 3]) -> Self {
        let h = x[1] - x[0];
        let a = (y[0] - 2.0 * y[1] + y[2]) / (2.0 * h * h);
        let slope_mid = (y[2] - y[0]) / (2.0 * h);
        let b = slope_mid - 2.0 * a * x[1];
        let c = y[1] - a * x[1] * x[1] - b * x[1];
        Self { a, b, c }
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.a * x + self.b) * x + self.c
    }

    pub fn slope(&self, x: f64) -> f64 {
        2.0 * self.a * x + self.b
    }

    pub fn sub(&self, o: &Quadratic) -> Quadratic {
        Quadratic {
            a: self.a - o.a,
            b: self.b - o.b,
            c: self.c - o.c,
        }
    }

    /// Maximizer on `[lo, hi]`: the vertex projected onto the interval when
    /// concave, otherwise the better end (ties to `lo`).
    pub fn argmax_on(&self, lo: f64, hi: f64) -> f64 {
        if self.a < 0.0 {
            (-self.b / (2.0 * self.a)).clamp(lo, hi)
        } else if self.value(hi) > self.value(lo) {
            hi
        } else {
            lo
        }
    }

    /// Real roots, ascending. A vanishing polynomial has none reported.
    pub fn roots(&self) -> Vec<f64> {
        let scale = self.a.abs().max(self.b.abs()).max(self.c.abs());
        if scale == 0.0 {
            return Vec::new();
        }
        let (a, b, c) = (self.a / scale, self.b / scale, self.c / scale);
        if a.abs() < 1e-14 {
            if b.abs() < 1e-14 {
                return Vec::new();
            }
            return vec![-c / b];
        }
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return Vec::new();
        }
        let sq = disc.sqrt();
        let sign = if b >= 0.0 { 1.0 } else { -1.0 };
        let q = -0.5 * (b + sign * sq);
        let mut r = if q == 0.0 {
            vec![0.0]
        } else {
            vec![q / a, c / q]
        };
        r.sort_by(f64::total_cmp);
        r
    }
}

/// Bisection for a sign change of `f` on `[a, b]`; `fa` is `f(a)`.
pub fn bisect<F>(f: &mut F, mut a: f64, mut b: f64, mut fa: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}
