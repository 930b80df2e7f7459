//! Numerical integration and root bracketing.
//!
//! Integrals use double-exponential rules (tanh-sinh, exp-sinh, sinh-sinh)
//! refined by halving the step until successive estimates agree. These handle
//! integrable endpoint singularities and algebraic tails, which is what the
//! Lomax and gamma marginals need.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Integration range. Infinite ranges carry a centre/scale used to place the
/// nodes where the mass is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Range {
    Finite { lo: f64, hi: f64 },
    /// `[lo, +inf)`
    Upper { lo: f64, scale: f64 },
    /// `(-inf, hi]`
    Lower { hi: f64, scale: f64 },
    /// `(-inf, +inf)`
    Whole { center: f64, scale: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_level: u32,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            rel_tol: 1e-11,
            abs_tol: 1e-15,
            max_level: 11,
        }
    }
}

// Abscissa/weight pair for a node at parameter t, or None when the node
// collapses onto an endpoint or overflows.
type NodeMap = dyn Fn(f64) -> Option<(f64, f64)>;

impl Quadrature {
    pub fn with_tol(rel_tol: f64) -> Self {
        Quadrature {
            rel_tol,
            ..Default::default()
        }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, range: Range) -> Result<f64> {
        match range {
            Range::Finite { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite()) {
                    return Err(Error::Contract("finite range needs finite ends".into()));
                }
                if hi == lo {
                    return Ok(0.0);
                }
                if hi < lo {
                    return Ok(-self.integrate(f, Range::Finite { lo: hi, hi: lo })?);
                }
                let d = 0.5 * (hi - lo);
                let map = move |t: f64| {
                    let u = FRAC_PI_2 * t.sinh();
                    let ch = u.cosh();
                    // distance to the nearer end, computed without cancellation
                    let gap = d / (u.abs().exp() * ch);
                    let x = if t >= 0.0 { hi - gap } else { lo + gap };
                    if x <= lo || x >= hi {
                        return None;
                    }
                    let w = d * FRAC_PI_2 * t.cosh() / (ch * ch);
                    Some((x, w))
                };
                self.run(&f, &map, -6.5, 6.5)
            }
            Range::Upper { lo, scale } => {
                check_scale(scale)?;
                let map = move |t: f64| {
                    let e = (FRAC_PI_2 * t.sinh()).exp();
                    let x = lo + scale * e;
                    if !x.is_finite() || x <= lo {
                        return None;
                    }
                    Some((x, scale * FRAC_PI_2 * t.cosh() * e))
                };
                self.run(&f, &map, -6.5, 6.5)
            }
            Range::Lower { hi, scale } => {
                check_scale(scale)?;
                let map = move |t: f64| {
                    let e = (FRAC_PI_2 * t.sinh()).exp();
                    let x = hi - scale * e;
                    if !x.is_finite() || x >= hi {
                        return None;
                    }
                    Some((x, scale * FRAC_PI_2 * t.cosh() * e))
                };
                self.run(&f, &map, -6.5, 6.5)
            }
            Range::Whole { center, scale } => {
                check_scale(scale)?;
                let map = move |t: f64| {
                    let u = FRAC_PI_2 * t.sinh();
                    let x = center + scale * u.sinh();
                    if !x.is_finite() {
                        return None;
                    }
                    Some((x, scale * FRAC_PI_2 * t.cosh() * u.cosh()))
                };
                self.run(&f, &map, -6.5, 6.5)
            }
        }
    }

    fn run<F: Fn(f64) -> f64>(&self, f: &F, map: &NodeMap, t_lo: f64, t_hi: f64) -> Result<f64> {
        let eval = |t: f64| -> Result<f64> {
            match map(t) {
                None => Ok(0.0),
                Some((x, w)) => {
                    if w == 0.0 || !w.is_finite() {
                        return Ok(0.0);
                    }
                    let v = f(x);
                    if v.is_nan() {
                        return Err(Error::Numeric(format!("integrand is NaN at x = {x}")));
                    }
                    if v == 0.0 {
                        return Ok(0.0);
                    }
                    let term = v * w;
                    if !term.is_finite() {
                        return Err(Error::Numeric(format!(
                            "integrand not finite at x = {x}"
                        )));
                    }
                    Ok(term)
                }
            }
        };

        // level 0: unit step
        let mut h = 1.0;
        let mut sum = 0.0;
        let mut k = t_lo.ceil() as i64;
        while (k as f64) <= t_hi {
            sum += eval(k as f64)?;
            k += 1;
        }
        let mut estimate = h * sum;
        for level in 1..=self.max_level {
            h *= 0.5;
            // odd multiples of h inside [t_lo, t_hi]
            let j_lo = ((t_lo / h - 1.0) / 2.0).ceil() as i64;
            let j_hi = ((t_hi / h - 1.0) / 2.0).floor() as i64;
            let mut fresh = 0.0;
            for j in j_lo..=j_hi {
                fresh += eval((2 * j + 1) as f64 * h)?;
            }
            sum += fresh;
            let next = h * sum;
            let diff = (next - estimate).abs();
            estimate = next;
            if level >= 3 && diff <= self.abs_tol.max(self.rel_tol * next.abs()) {
                return Ok(next);
            }
        }
        Err(Error::Numeric(format!(
            "quadrature did not converge after {} halvings (estimate {estimate})",
            self.max_level
        )))
    }
}

fn check_scale(scale: f64) -> Result<()> {
    if scale > 0.0 && scale.is_finite() {
        Ok(())
    } else {
        Err(Error::Contract(format!("quadrature scale must be positive, got {scale}")))
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Solve `g(x) = target` for nondecreasing `g` on a bracket `[lo, hi]`
/// with `g(lo) <= target <= g(hi)`. Illinois regula falsi with a bisection
/// fallback.
pub fn solve_increasing<G: Fn(f64) -> f64>(g: G, target: f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut flo = g(lo) - target;
    let mut fhi = g(hi) - target;
    if flo > 0.0 || fhi < 0.0 || flo.is_nan() || fhi.is_nan() {
        return Err(Error::Numeric(format!(
            "root not bracketed on [{lo}, {hi}] for target {target}"
        )));
    }
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    let mut side = 0i8;
    for iter in 0..400 {
        let width = hi - lo;
        if width <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        let mut x = if iter % 3 == 2 {
            0.5 * (lo + hi)
        } else {
            (lo * fhi - hi * flo) / (fhi - flo)
        };
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = g(x) - target;
        if fx.is_nan() {
            return Err(Error::Numeric(format!("NaN while solving at x = {x}")));
        }
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
            flo = fx;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    Ok(if -flo < fhi { lo } else { hi })
}
