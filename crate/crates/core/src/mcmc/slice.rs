//! Univariate slice sampling with stepping out and shrinkage on a bounded
//! interval.

use rand::Rng;

use crate::error::{Error, Result};

pub const WIDTH: f64 = 0.5;
pub const MAX_STEPS: usize = 50;
const MAX_SHRINK: usize = 500;

/// One slice-sampling update of `x0` for log density `ln_f` on `(lo, hi)`.
pub fn slice_step<R, F>(x0: f64, ln_f: F, lo: f64, hi: f64, width: f64, max_steps: usize, rng: &mut R) -> Result<f64>
where
    R: Rng + ?Sized,
    F: Fn(f64) -> f64,
{
    let f = |x: f64| if x > lo && x < hi { ln_f(x) } else { f64::NEG_INFINITY };
    let f0 = f(x0);
    if !f0.is_finite() {
        return Err(Error::Numeric(format!("slice sampler started at {x0} with log density {f0}")));
    }
    let level = f0 + (1.0 - rng.random::<f64>()).ln();
    let mut left = x0 - width * rng.random::<f64>();
    let mut right = left + width;
    let mut j = (max_steps as f64 * rng.random::<f64>()) as usize;
    let mut k = (max_steps - 1).saturating_sub(j);
    while j > 0 && left > lo && f(left) > level {
        left -= width;
        j -= 1;
    }
    while k > 0 && right < hi && f(right) > level {
        right += width;
        k -= 1;
    }
    left = left.max(lo);
    right = right.min(hi);
    for _ in 0..MAX_SHRINK {
        let x1 = left + rng.random::<f64>() * (right - left);
        if f(x1) > level {
            return Ok(x1);
        }
        if x1 < x0 {
            left = x1;
        } else {
            right = x1;
        }
    }
    Err(Error::Numeric(format!("slice shrinkage did not terminate around {x0}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn truncated_normal_moments() {
        // N(0.3, 0.2^2) restricted to (-1, 1)
        let ln_f = |x: f64| -0.5 * ((x - 0.3) / 0.2).powi(2);
        let mut rng = seeded(1);
        let mut x = 0.0;
        let n = 100_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            x = slice_step(x, ln_f, -1.0, 1.0, WIDTH, MAX_STEPS, &mut rng).unwrap();
            s1 += x;
            s2 += x * x;
        }
        let m = s1 / n as f64;
        let sd = (s2 / n as f64 - m * m).sqrt();
        assert!((m - 0.3).abs() < 0.005, "{m}");
        assert!((sd - 0.2).abs() < 0.005, "{sd}");
    }

    #[test]
    fn flat_density_is_uniform() {
        let mut rng = seeded(2);
        let mut x = 0.9;
        let n = 50_000;
        let mut below = 0;
        for _ in 0..n {
            x = slice_step(x, |_| 0.0, -1.0, 1.0, WIDTH, MAX_STEPS, &mut rng).unwrap();
            assert!(x > -1.0 && x < 1.0);
            below += (x < -0.5) as usize;
        }
        assert!((below as f64 / n as f64 - 0.25).abs() < 0.01);
    }
}
