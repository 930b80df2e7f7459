//! Stationary transition components.
//!
//! Each [`Transition`] is one lag's conditional law `f(u | v)` together with
//! the marginal `f_X` it leaves invariant. Every family here comes from an
//! exchangeable bivariate law, so `f(u | v) f_X(v) = f(v | u) f_X(u)`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dists::{
    binomial_variate, gamma_variate, ln_binomial, ln_gamma_pdf, ln_lomax, ln_neg_binomial,
    ln_normal, ln_poisson, ln_student_t, log_sum_exp, poisson_variate, std_normal, Dist,
};
use crate::error::{require, Error, Result};
use crate::quad::{gauss_legendre, solve_increasing, Quadrature, Range};

/// Family names used in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTag {
    Gaussian,
    StudentT,
    Poisson,
    Negbin,
    Bernoulli,
    Binomial,
    Lomax,
    Gamma,
}

impl FamilyTag {
    pub const ALL: [FamilyTag; 8] = [
        FamilyTag::Gaussian,
        FamilyTag::StudentT,
        FamilyTag::Poisson,
        FamilyTag::Negbin,
        FamilyTag::Bernoulli,
        FamilyTag::Binomial,
        FamilyTag::Lomax,
        FamilyTag::Gamma,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FamilyTag::Gaussian => "gaussian",
            FamilyTag::StudentT => "student_t",
            FamilyTag::Poisson => "poisson",
            FamilyTag::Negbin => "negbin",
            FamilyTag::Bernoulli => "bernoulli",
            FamilyTag::Binomial => "binomial",
            FamilyTag::Lomax => "lomax",
            FamilyTag::Gamma => "gamma",
        }
    }

    pub fn is_discrete(self) -> bool {
        matches!(
            self,
            FamilyTag::Poisson | FamilyTag::Negbin | FamilyTag::Bernoulli | FamilyTag::Binomial
        )
    }
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FamilyTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FamilyTag::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown family '{s}'")))
    }
}

/// Family parameters. In configuration files the variant is selected by a
/// `"family"` key holding the [`FamilyTag`] name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    /// `N((1-rho) mu + rho v, sigma2 (1 - rho^2))`, marginal `N(mu, sigma2)`.
    Gaussian { mu: f64, sigma2: f64, rho: f64 },
    /// Conditional of a bivariate t with correlation `rho`; marginal `t(mu, sigma, nu)`.
    StudentT { mu: f64, sigma: f64, nu: f64, rho: f64 },
    /// Binomial thinning plus Poisson innovation; marginal `Pois(lambda + gamma)`.
    Poisson { lambda: f64, gamma: f64 },
    /// Gamma-mixed bivariate Poisson; marginal `NB(k, eta / (lambda + gamma + eta))`.
    #[serde(rename = "negbin")]
    NegBin { lambda: f64, gamma: f64, k: f64, eta: f64 },
    /// Four-cell bivariate Bernoulli; marginal `Ber(p1 + p2)`.
    Bernoulli { p1: f64, p2: f64 },
    /// Sum of `n` bivariate Bernoulli pairs; marginal `Bin(n, p1 + p2)`.
    Binomial { n: u64, p1: f64, p2: f64 },
    /// Lomax conditionals with scale `(l0 + l1 v) / (l1 + l2 v)` and shape `alpha`.
    Lomax { lambda0: f64, lambda1: f64, lambda2: f64, alpha: f64 },
    /// `Ga(m0, m1 + m2 v)` conditionals.
    Gamma { m0: f64, m1: f64, m2: f64 },
}

/// A validated transition component.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    family: Family,
    // log normalizer of the unnormalized marginal (numeric families only)
    ln_norm: f64,
}

/// Result of [`Transition::check_invariance`].
#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    /// Largest discrepancy over the test grid. For continuous families it is
    /// measured relative to `max(1, f_X(u))`.
    pub residual: f64,
    pub passed: bool,
    pub grid_points: usize,
    /// Largest state used by a truncated discrete sum.
    pub truncation: Option<u64>,
}

const GRID_TAIL: f64 = 9.865_876_450_376_98e-10; // Phi(-6)
const TAIL_MASS: f64 = 1e-12;

fn pos(name: &str, v: f64) -> Result<()> {
    require(v > 0.0 && v.is_finite(), || format!("{name} must be positive, got {v}"))
}

impl Transition {
    pub fn new(family: Family) -> Result<Self> {
        use Family::*;
        match family {
            Gaussian { mu, sigma2, rho } => {
                require(mu.is_finite(), || format!("mu must be finite, got {mu}"))?;
                pos("sigma2", sigma2)?;
                require(rho > -1.0 && rho < 1.0, || format!("rho must lie in (-1, 1), got {rho}"))?;
            }
            StudentT { mu, sigma, nu, rho } => {
                require(mu.is_finite(), || format!("mu must be finite, got {mu}"))?;
                pos("sigma", sigma)?;
                pos("nu", nu)?;
                require(rho > -1.0 && rho < 1.0, || format!("rho must lie in (-1, 1), got {rho}"))?;
            }
            Poisson { lambda, gamma } => {
                pos("lambda", lambda)?;
                pos("gamma", gamma)?;
            }
            NegBin { lambda, gamma, k, eta } => {
                pos("lambda", lambda)?;
                pos("gamma", gamma)?;
                pos("k", k)?;
                pos("eta", eta)?;
            }
            Bernoulli { p1, p2 } | Binomial { p1, p2, .. } => {
                pos("p1", p1)?;
                pos("p2", p2)?;
                require(p1 + 2.0 * p2 < 1.0, || format!("need p1 + 2 p2 < 1, got {p1} + 2*{p2}"))?;
                if let Binomial { n, .. } = family {
                    require(n >= 1, || "binomial trials must be at least 1".into())?;
                }
            }
            Lomax { lambda0, lambda1, lambda2, alpha } => {
                pos("alpha", alpha)?;
                for (name, v) in [("lambda0", lambda0), ("lambda1", lambda1), ("lambda2", lambda2)] {
                    require(v.is_finite() && v >= 0.0, || format!("{name} must be nonnegative, got {v}"))?;
                }
                let ok = if alpha == 1.0 {
                    lambda0 > 0.0 && lambda1 > 0.0 && lambda2 > 0.0
                } else if alpha < 1.0 {
                    lambda1 > 0.0 && lambda2 > 0.0
                } else {
                    lambda0 > 0.0 && lambda1 > 0.0
                };
                require(ok, || {
                    format!(
                        "Lomax parameters (lambda0={lambda0}, lambda1={lambda1}, lambda2={lambda2}) \
                         are not admissible for alpha={alpha}"
                    )
                })?;
            }
            Gamma { m0, m1, m2 } => {
                pos("m0", m0)?;
                pos("m1", m1)?;
                pos("m2", m2)?;
            }
        }
        let mut t = Transition { family, ln_norm: 0.0 };
        if t.numeric_marginal() {
            t.ln_norm = t.compute_ln_norm()?;
        }
        Ok(t)
    }

    pub fn gaussian(mu: f64, sigma2: f64, rho: f64) -> Result<Self> {
        Self::new(Family::Gaussian { mu, sigma2, rho })
    }

    pub fn student_t(mu: f64, sigma: f64, nu: f64, rho: f64) -> Result<Self> {
        Self::new(Family::StudentT { mu, sigma, nu, rho })
    }

    pub fn poisson(lambda: f64, gamma: f64) -> Result<Self> {
        Self::new(Family::Poisson { lambda, gamma })
    }

    pub fn negbin(lambda: f64, gamma: f64, k: f64, eta: f64) -> Result<Self> {
        Self::new(Family::NegBin { lambda, gamma, k, eta })
    }

    pub fn bernoulli(p1: f64, p2: f64) -> Result<Self> {
        Self::new(Family::Bernoulli { p1, p2 })
    }

    pub fn binomial(n: u64, p1: f64, p2: f64) -> Result<Self> {
        Self::new(Family::Binomial { n, p1, p2 })
    }

    pub fn lomax(lambda0: f64, lambda1: f64, lambda2: f64, alpha: f64) -> Result<Self> {
        Self::new(Family::Lomax { lambda0, lambda1, lambda2, alpha })
    }

    /// The `lambda2 = 0` case: transition `Lomax(phi + v, alpha)`, marginal
    /// `Lomax(phi, alpha - 1)`. Requires `alpha > 1`.
    pub fn lomax_shifted(phi: f64, alpha: f64) -> Result<Self> {
        require(alpha > 1.0, || format!("shifted Lomax needs alpha > 1, got {alpha}"))?;
        Self::lomax(phi, 1.0, 0.0, alpha)
    }

    pub fn gamma(m0: f64, m1: f64, m2: f64) -> Result<Self> {
        Self::new(Family::Gamma { m0, m1, m2 })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn tag(&self) -> FamilyTag {
        match self.family {
            Family::Gaussian { .. } => FamilyTag::Gaussian,
            Family::StudentT { .. } => FamilyTag::StudentT,
            Family::Poisson { .. } => FamilyTag::Poisson,
            Family::NegBin { .. } => FamilyTag::Negbin,
            Family::Bernoulli { .. } => FamilyTag::Bernoulli,
            Family::Binomial { .. } => FamilyTag::Binomial,
            Family::Lomax { .. } => FamilyTag::Lomax,
            Family::Gamma { .. } => FamilyTag::Gamma,
        }
    }

    pub fn is_discrete(&self) -> bool {
        self.tag().is_discrete()
    }

    /// True for the Lomax family with `lambda2 = 0`.
    pub fn is_shifted_lomax(&self) -> bool {
        matches!(self.family, Family::Lomax { lambda2, .. } if lambda2 == 0.0)
    }

    fn numeric_marginal(&self) -> bool {
        match self.family {
            Family::Gamma { .. } => true,
            Family::Lomax { lambda2, .. } => lambda2 != 0.0,
            _ => false,
        }
    }

    /// Whether `x` is a valid state.
    pub fn in_state_space(&self, x: f64) -> bool {
        if !x.is_finite() {
            return false;
        }
        let count = x >= 0.0 && x.fract() == 0.0;
        match self.family {
            Family::Gaussian { .. } | Family::StudentT { .. } => true,
            Family::Poisson { .. } | Family::NegBin { .. } => count,
            Family::Bernoulli { .. } => x == 0.0 || x == 1.0,
            Family::Binomial { n, .. } => count && x <= n as f64,
            Family::Lomax { lambda0, .. } => {
                if lambda0 > 0.0 {
                    x >= 0.0
                } else {
                    x > 0.0
                }
            }
            Family::Gamma { .. } => x >= 0.0,
        }
    }

    fn check_lag(&self, v: f64) -> Result<()> {
        if self.in_state_space(v) {
            Ok(())
        } else {
            Err(Error::OutOfSupport(format!(
                "conditioning value {v} is outside the {} state space",
                self.tag()
            )))
        }
    }

    /// Log conditional density `ln f(u | v)`. Returns `-inf` when `u` is off
    /// the state space; errors when `v` is.
    pub fn ln_trans_pdf(&self, u: f64, v: f64) -> Result<f64> {
        self.check_lag(v)?;
        Ok(self.ln_trans(u, v))
    }

    pub fn trans_pdf(&self, u: f64, v: f64) -> Result<f64> {
        Ok(self.ln_trans_pdf(u, v)?.exp())
    }

    /// Unchecked `ln f(u | v)`; `v` must be a valid state.
    pub(crate) fn ln_trans(&self, u: f64, v: f64) -> f64 {
        if !self.in_state_space(u) {
            return f64::NEG_INFINITY;
        }
        match self.family {
            Family::Gaussian { mu, sigma2, rho } => {
                ln_normal(u, (1.0 - rho) * mu + rho * v, (sigma2 * (1.0 - rho * rho)).sqrt())
            }
            Family::StudentT { .. } => {
                let (loc, scale, df) = self.t_conditional(v);
                ln_student_t(u, loc, scale, df)
            }
            Family::Poisson { lambda, gamma } => {
                let pi = gamma / (lambda + gamma);
                let (x, n) = (u as u64, v as u64);
                let terms: Vec<f64> = (0..=x.min(n))
                    .map(|z| ln_binomial(z, n, pi) + ln_poisson(x - z, lambda))
                    .collect();
                log_sum_exp(&terms)
            }
            Family::NegBin { .. } => {
                let (pi, r, p) = self.negbin_parts(v);
                let (x, n) = (u as u64, v as u64);
                let terms: Vec<f64> = (0..=x.min(n))
                    .map(|z| ln_binomial(z, n, pi) + ln_neg_binomial(x - z, r, p))
                    .collect();
                log_sum_exp(&terms)
            }
            Family::Bernoulli { .. } => {
                let p = self.bernoulli_prob(v);
                if u == 1.0 {
                    p.ln()
                } else {
                    (-p).ln_1p()
                }
            }
            Family::Binomial { n, p1, p2 } => {
                let (x, v) = (u as u64, v as u64);
                let keep = p1 / (p1 + p2);
                let fresh = p2 / (1.0 - p1 - p2);
                let lo = x.saturating_sub(n - v);
                let hi = x.min(v);
                if lo > hi {
                    return f64::NEG_INFINITY;
                }
                let terms: Vec<f64> = (lo..=hi)
                    .map(|z| ln_binomial(z, v, keep) + ln_binomial(x - z, n - v, fresh))
                    .collect();
                log_sum_exp(&terms)
            }
            Family::Lomax { alpha, .. } => ln_lomax(u, self.lomax_scale(v), alpha),
            Family::Gamma { m0, m1, m2 } => ln_gamma_pdf(u, m0, m1 + m2 * v),
        }
    }

    /// Conditional cdf `P(U <= u | V = v)`.
    pub fn trans_cdf(&self, u: f64, v: f64) -> Result<f64> {
        self.check_lag(v)?;
        Ok(self.cdf_unchecked(u, v))
    }

    pub(crate) fn cdf_unchecked(&self, u: f64, v: f64) -> f64 {
        if u.is_nan() {
            return f64::NAN;
        }
        match self.family {
            Family::Gaussian { .. } | Family::StudentT { .. } | Family::Lomax { .. } | Family::Gamma { .. } => {
                self.continuous_conditional(v).cdf(u)
            }
            Family::Bernoulli { .. } => {
                let p = self.bernoulli_prob(v);
                if u < 0.0 {
                    0.0
                } else if u < 1.0 {
                    1.0 - p
                } else {
                    1.0
                }
            }
            Family::Poisson { lambda, gamma } => {
                if u < 0.0 {
                    return 0.0;
                }
                if u.is_infinite() {
                    return 1.0;
                }
                let x = u.floor() as u64;
                let n = v as u64;
                let pi = gamma / (lambda + gamma);
                let inno = Dist::poisson(lambda).expect("validated");
                let s: f64 = (0..=x.min(n))
                    .map(|z| ln_binomial(z, n, pi).exp() * inno.cdf((x - z) as f64))
                    .sum();
                s.min(1.0)
            }
            Family::NegBin { .. } => {
                if u < 0.0 {
                    return 0.0;
                }
                if u.is_infinite() {
                    return 1.0;
                }
                let (pi, r, p) = self.negbin_parts(v);
                let x = u.floor() as u64;
                let n = v as u64;
                let inno = Dist::neg_binomial(r, p).expect("validated");
                let s: f64 = (0..=x.min(n))
                    .map(|z| ln_binomial(z, n, pi).exp() * inno.cdf((x - z) as f64))
                    .sum();
                s.min(1.0)
            }
            Family::Binomial { n, p1, p2 } => {
                if u < 0.0 {
                    return 0.0;
                }
                let x = u.floor();
                if x >= n as f64 {
                    return 1.0;
                }
                let x = x as u64;
                let v = v as u64;
                let keep = p1 / (p1 + p2);
                let fresh = Dist::binomial(n - v, p2 / (1.0 - p1 - p2)).expect("validated");
                let s: f64 = (0..=x.min(v))
                    .map(|z| ln_binomial(z, v, keep).exp() * fresh.cdf((x - z) as f64))
                    .sum();
                s.min(1.0)
            }
        }
    }

    // conditional law for the continuous families
    fn continuous_conditional(&self, v: f64) -> Dist {
        match self.family {
            Family::Gaussian { mu, sigma2, rho } => {
                Dist::normal((1.0 - rho) * mu + rho * v, (sigma2 * (1.0 - rho * rho)).sqrt())
                    .expect("validated")
            }
            Family::StudentT { .. } => {
                let (loc, scale, df) = self.t_conditional(v);
                Dist::student_t(loc, scale, df).expect("validated")
            }
            Family::Lomax { alpha, .. } => Dist::lomax(self.lomax_scale(v), alpha).expect("validated"),
            Family::Gamma { m0, m1, m2 } => Dist::gamma(m0, m1 + m2 * v).expect("validated"),
            _ => unreachable!("discrete family"),
        }
    }

    /// Draw `u ~ f(. | v)`.
    pub fn sample_trans<R: Rng + ?Sized>(&self, v: f64, rng: &mut R) -> Result<f64> {
        self.check_lag(v)?;
        Ok(self.draw(v, rng))
    }

    pub(crate) fn draw<R: Rng + ?Sized>(&self, v: f64, rng: &mut R) -> f64 {
        match self.family {
            Family::Gaussian { mu, sigma2, rho } => {
                (1.0 - rho) * mu + rho * v + (sigma2 * (1.0 - rho * rho)).sqrt() * std_normal(rng)
            }
            Family::Poisson { lambda, gamma } => {
                poisson_variate(lambda, rng) + binomial_variate(v as u64, gamma / (lambda + gamma), rng)
            }
            Family::NegBin { .. } => {
                let (pi, r, p) = self.negbin_parts(v);
                binomial_variate(v as u64, pi, rng) + Dist::neg_binomial(r, p).expect("validated").sample(rng)
            }
            Family::Bernoulli { .. } => {
                if rng.random::<f64>() < self.bernoulli_prob(v) {
                    1.0
                } else {
                    0.0
                }
            }
            Family::Binomial { n, p1, p2 } => {
                let v = v as u64;
                binomial_variate(n - v, p2 / (1.0 - p1 - p2), rng) + binomial_variate(v, p1 / (p1 + p2), rng)
            }
            Family::Gamma { m0, m1, m2 } => gamma_variate(m0, m1 + m2 * v, rng),
            Family::StudentT { .. } | Family::Lomax { .. } => self.continuous_conditional(v).sample(rng),
        }
    }

    fn t_conditional(&self, v: f64) -> (f64, f64, f64) {
        let Family::StudentT { mu, sigma, nu, rho } = self.family else {
            unreachable!()
        };
        let d = ((v - mu) / sigma).powi(2);
        let scale = sigma * ((1.0 - rho * rho) * (nu + d) / (nu + 1.0)).sqrt();
        (mu + rho * (v - mu), scale, nu + 1.0)
    }

    // (thinning probability, innovation successes, innovation success prob)
    fn negbin_parts(&self, v: f64) -> (f64, f64, f64) {
        let Family::NegBin { lambda, gamma, k, eta } = self.family else {
            unreachable!()
        };
        let phi = lambda + gamma;
        (gamma / phi, k + v, (phi + eta) / (phi + eta + lambda))
    }

    fn bernoulli_prob(&self, v: f64) -> f64 {
        let Family::Bernoulli { p1, p2 } = self.family else {
            unreachable!()
        };
        if v == 1.0 {
            p1 / (p1 + p2)
        } else {
            p2 / (1.0 - p1 - p2)
        }
    }

    fn lomax_scale(&self, v: f64) -> f64 {
        let Family::Lomax { lambda0, lambda1, lambda2, .. } = self.family else {
            unreachable!()
        };
        (lambda0 + lambda1 * v) / (lambda1 + lambda2 * v)
    }

    /// The marginal as a standard distribution, when it is one.
    pub fn marginal_dist(&self) -> Option<Dist> {
        let d = match self.family {
            Family::Gaussian { mu, sigma2, .. } => Dist::normal(mu, sigma2.sqrt()),
            Family::StudentT { mu, sigma, nu, .. } => Dist::student_t(mu, sigma, nu),
            Family::Poisson { lambda, gamma } => Dist::poisson(lambda + gamma),
            Family::NegBin { lambda, gamma, k, eta } => Dist::neg_binomial(k, eta / (lambda + gamma + eta)),
            Family::Bernoulli { p1, p2 } => Dist::bernoulli(p1 + p2),
            Family::Binomial { n, p1, p2 } => Dist::binomial(n, p1 + p2),
            Family::Lomax { lambda0, lambda1, lambda2, alpha } if lambda2 == 0.0 => {
                Dist::lomax(lambda0 / lambda1, alpha - 1.0)
            }
            Family::Lomax { .. } | Family::Gamma { .. } => return None,
        };
        Some(d.expect("validated"))
    }

    // unnormalized log marginal for the numeric families
    fn ln_marginal_kernel(&self, x: f64) -> f64 {
        match self.family {
            Family::Lomax { lambda0, lambda1, lambda2, alpha } => {
                if x < 0.0 {
                    return f64::NEG_INFINITY;
                }
                -(lambda1 + lambda2 * x).ln() - alpha * (lambda0 + lambda1 * x).ln()
            }
            Family::Gamma { m0, m1, m2 } => {
                if x < 0.0 {
                    return f64::NEG_INFINITY;
                }
                (m0 - 1.0) * x.ln() - m1 * x - m0 * (m1 + m2 * x).ln()
            }
            _ => unreachable!(),
        }
    }

    fn numeric_scale(&self) -> f64 {
        match self.family {
            Family::Lomax { lambda0, lambda1, lambda2, .. } => {
                if lambda0 > 0.0 {
                    lambda0 / lambda1
                } else {
                    lambda1 / lambda2
                }
            }
            Family::Gamma { m0, m1, m2 } => m0 / (m1 + m2 * m0 / m1).max(m1),
            _ => 1.0,
        }
    }

    fn compute_ln_norm(&self) -> Result<f64> {
        // shift by the kernel at the scale point so the integrand is O(1)
        let s = self.numeric_scale();
        let shift = self.ln_marginal_kernel(s);
        let quad = Quadrature::with_tol(1e-12);
        let z = quad.integrate(
            |x| (self.ln_marginal_kernel(x) - shift).exp(),
            Range::Upper { lo: 0.0, scale: s },
        )?;
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::Numeric(format!("marginal normalizer is {z}")));
        }
        Ok(z.ln() + shift)
    }

    /// Log invariant marginal density (or pmf).
    pub fn ln_marginal_pdf(&self, x: f64) -> f64 {
        match self.marginal_dist() {
            Some(d) => d.ln_pdf(x),
            None => {
                if !self.in_state_space(x) {
                    return f64::NEG_INFINITY;
                }
                self.ln_marginal_kernel(x) - self.ln_norm
            }
        }
    }

    pub fn marginal_pdf(&self, x: f64) -> f64 {
        self.ln_marginal_pdf(x).exp()
    }

    /// Marginal cdf; numeric families integrate the normalized kernel.
    pub fn marginal_cdf(&self, x: f64) -> Result<f64> {
        if let Some(d) = self.marginal_dist() {
            return Ok(d.cdf(x));
        }
        if x <= 0.0 {
            return Ok(0.0);
        }
        if x.is_infinite() {
            return Ok(1.0);
        }
        let quad = Quadrature::with_tol(1e-12);
        let f = |t: f64| (self.ln_marginal_kernel(t) - self.ln_norm).exp();
        let lower = quad.integrate(f, Range::Finite { lo: 0.0, hi: x })?;
        if lower <= 0.5 {
            return Ok(lower.clamp(0.0, 1.0));
        }
        let upper = quad.integrate(f, Range::Upper { lo: x, scale: x.max(self.numeric_scale()) })?;
        Ok((1.0 - upper).clamp(0.0, 1.0))
    }

    pub fn marginal_quantile(&self, u: f64) -> Result<f64> {
        if let Some(d) = self.marginal_dist() {
            return d.quantile(u);
        }
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::OutOfSupport(format!("quantile level must lie in (0, 1), got {u}")));
        }
        let mut hi = self.numeric_scale();
        let mut n = 0;
        while self.marginal_cdf(hi)? < u {
            hi *= 4.0;
            n += 1;
            if n > 500 {
                return Err(Error::Numeric(format!("cannot bracket marginal quantile {u}")));
            }
        }
        let cdf = |x: f64| self.marginal_cdf(x).unwrap_or(f64::NAN);
        solve_increasing(cdf, u, 0.0, hi)
    }

    /// Draw from the invariant marginal.
    pub fn sample_marginal<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        if let Some(d) = self.marginal_dist() {
            return Ok(d.sample(rng));
        }
        match self.family {
            Family::Gamma { m0, m1, m2 } => loop {
                // propose Ga(m0, m1), accept with (m1 / (m1 + m2 x))^m0
                let x = gamma_variate(m0, m1, rng);
                let ln_acc = m0 * (m1 / (m1 + m2 * x)).ln();
                if rng.random::<f64>().ln() < ln_acc {
                    return Ok(x);
                }
            },
            _ => {
                let u = loop {
                    let u = rng.random::<f64>();
                    if u > 0.0 {
                        break u;
                    }
                };
                self.marginal_quantile(u)
            }
        }
    }

    /// `(E X, E X^2)` under the marginal, for families with closed forms.
    /// `None` when a moment is infinite or not available in closed form.
    pub fn marginal_moments(&self) -> Option<(f64, f64)> {
        let d = self.marginal_dist()?;
        let m = d.mean()?;
        let v = d.variance()?;
        Some((m, v + m * m))
    }

    /// `E(U | V = y)`; infinite when the conditional mean does not exist.
    pub fn cond_mean(&self, y: f64) -> Result<f64> {
        self.check_lag(y)?;
        Ok(match self.family {
            Family::Bernoulli { .. } => self.bernoulli_prob(y),
            Family::Gamma { m0, m1, m2 } => m0 / (m1 + m2 * y),
            Family::Lomax { alpha, .. } => {
                if alpha > 1.0 {
                    self.lomax_scale(y) / (alpha - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            _ => {
                let (a, b) = self.linear_coeffs().expect("linear family");
                a + b * y
            }
        })
    }

    /// `(a, b)` with `E(U | V = y) = a + b y`, for the linear families.
    pub fn linear_coeffs(&self) -> Option<(f64, f64)> {
        match self.family {
            Family::Gaussian { mu, rho, .. } | Family::StudentT { mu, rho, .. } => Some(((1.0 - rho) * mu, rho)),
            Family::Poisson { lambda, gamma } => Some((lambda, gamma / (lambda + gamma))),
            Family::NegBin { lambda, gamma, k, eta } => {
                let phi = lambda + gamma;
                Some((k * lambda / (phi + eta), gamma / phi + lambda / (phi + eta)))
            }
            Family::Binomial { n, p1, p2 } => {
                let fresh = p2 / (1.0 - p1 - p2);
                Some((n as f64 * fresh, p1 / (p1 + p2) - fresh))
            }
            Family::Lomax { lambda0, lambda1, lambda2, alpha } if lambda2 == 0.0 => {
                Some((lambda0 / lambda1 / (alpha - 1.0), 1.0 / (alpha - 1.0)))
            }
            Family::Bernoulli { .. } | Family::Lomax { .. } | Family::Gamma { .. } => None,
        }
    }

    /// Largest state with non-negligible marginal mass: the smallest `T` with
    /// tail mass beyond `T` below `1e-12`.
    pub fn truncation_point(&self) -> Option<u64> {
        let d = self.marginal_dist()?;
        if !self.is_discrete() {
            return None;
        }
        let (_, hi) = d.support();
        let mut t = d.mean().unwrap_or(1.0).ceil();
        while 1.0 - d.cdf(t) >= TAIL_MASS && t < hi {
            t += 1.0;
        }
        Some(t as u64)
    }

    /// Location and scale of `f(. | u)`, used to place quadrature nodes when
    /// integrating over the conditioning value.
    fn integration_range(&self, u: f64) -> Vec<Range> {
        match self.family {
            Family::Gaussian { mu, sigma2, rho } => {
                let c = (1.0 - rho) * mu + rho * u;
                let s = (sigma2 * (1.0 - rho * rho)).sqrt();
                vec![Range::Lower { hi: c, scale: s }, Range::Upper { lo: c, scale: s }]
            }
            Family::StudentT { .. } => {
                let (c, s, _) = self.t_conditional(u);
                vec![Range::Lower { hi: c, scale: s }, Range::Upper { lo: c, scale: s }]
            }
            Family::Lomax { .. } => vec![Range::Upper { lo: 0.0, scale: self.lomax_scale(u).max(1e-300) }],
            Family::Gamma { m0, m1, m2 } => vec![Range::Upper { lo: 0.0, scale: m0 / (m1 + m2 * u) }],
            _ => unreachable!(),
        }
    }

    /// Sup over a test grid of `|sum_v f(u|v) f_X(v) - f_X(u)|` (discrete) or
    /// of the same discrepancy with an integral, relative to `max(1, f_X(u))`
    /// (continuous). Quadrature failures surface as errors.
    pub fn check_invariance(&self, tol: f64) -> Result<InvarianceReport> {
        require(tol > 0.0, || format!("tolerance must be positive, got {tol}"))?;
        if self.is_discrete() {
            let t = self.truncation_point().expect("discrete marginal");
            let marg: Vec<f64> = (0..=t).map(|v| self.marginal_pdf(v as f64)).collect();
            let mut worst: f64 = 0.0;
            for u in 0..=t {
                let s: f64 = (0..=t)
                    .map(|v| self.ln_trans(u as f64, v as f64).exp() * marg[v as usize])
                    .sum();
                worst = worst.max((s - marg[u as usize]).abs());
            }
            return Ok(InvarianceReport {
                residual: worst,
                passed: worst < tol,
                grid_points: (t + 1) as usize,
                truncation: Some(t),
            });
        }
        let (nodes, _) = gauss_legendre(200);
        let quad = Quadrature::with_tol(1e-12);
        let mut worst: f64 = 0.0;
        for x in nodes {
            let level = GRID_TAIL + 0.5 * (x + 1.0) * (1.0 - 2.0 * GRID_TAIL);
            let u = self.marginal_quantile(level)?;
            let mut total = 0.0;
            for range in self.integration_range(u) {
                total += quad.integrate(
                    |v| {
                        if !self.in_state_space(v) {
                            return 0.0;
                        }
                        (self.ln_trans(u, v) + self.ln_marginal_pdf(v)).exp()
                    },
                    range,
                )?;
            }
            let target = self.marginal_pdf(u);
            worst = worst.max((total - target).abs() / target.max(1.0));
        }
        Ok(InvarianceReport {
            residual: worst,
            passed: worst < tol,
            grid_points: 200,
            truncation: None,
        })
    }
}

/// A random admissible parameter set for `tag`, for property testing.
pub fn arbitrary<R: Rng + ?Sized>(tag: FamilyTag, rng: &mut R) -> Transition {
    let mut unif = |lo: f64, hi: f64| lo + (hi - lo) * rng.random::<f64>();
    let fam = match tag {
        FamilyTag::Gaussian => Family::Gaussian {
            mu: unif(-20.0, 20.0),
            sigma2: unif(-2.0, 4.6).exp(),
            rho: unif(-0.95, 0.95),
        },
        FamilyTag::StudentT => Family::StudentT {
            mu: unif(-5.0, 5.0),
            sigma: unif(0.3, 5.0),
            nu: unif(0.5, 30.0),
            rho: unif(-0.9, 0.9),
        },
        FamilyTag::Poisson => Family::Poisson {
            lambda: unif(0.1, 10.0),
            gamma: unif(0.1, 10.0),
        },
        FamilyTag::Negbin => Family::NegBin {
            lambda: unif(0.1, 4.0),
            gamma: unif(0.1, 4.0),
            k: unif(0.5, 5.0),
            eta: unif(0.5, 5.0),
        },
        FamilyTag::Bernoulli | FamilyTag::Binomial => {
            let p1 = unif(0.02, 0.9);
            let p2 = unif(0.01, 0.98) * (1.0 - p1) / 2.0;
            if tag == FamilyTag::Bernoulli {
                Family::Bernoulli { p1, p2 }
            } else {
                Family::Binomial { n: unif(1.0, 31.0) as u64, p1, p2 }
            }
        }
        FamilyTag::Lomax => {
            let regime = unif(0.0, 3.0) as u32;
            let l1 = unif(0.2, 5.0);
            match regime {
                0 => Family::Lomax {
                    lambda0: unif(0.2, 10.0),
                    lambda1: l1,
                    lambda2: unif(0.05, 2.0),
                    alpha: 1.0,
                },
                1 => Family::Lomax {
                    lambda0: if unif(0.0, 1.0) < 0.25 { 0.0 } else { unif(0.2, 10.0) },
                    lambda1: l1,
                    lambda2: unif(0.05, 2.0),
                    alpha: unif(0.2, 0.95),
                },
                _ => Family::Lomax {
                    lambda0: unif(0.2, 10.0),
                    lambda1: l1,
                    lambda2: if unif(0.0, 1.0) < 0.5 { 0.0 } else { unif(0.05, 2.0) },
                    alpha: unif(1.1, 8.0),
                },
            }
        }
        FamilyTag::Gamma => Family::Gamma {
            m0: unif(0.3, 6.0),
            m1: unif(0.2, 5.0),
            m2: unif(0.05, 5.0),
        },
    };
    Transition::new(fam).expect("generated parameters are admissible")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;

    #[test]
    fn family_json_round_trip() {
        let f: Family = serde_json::from_str(r#"{"family":"negbin","lambda":1,"gamma":2,"k":3,"eta":4}"#).unwrap();
        assert_eq!(f, Family::NegBin { lambda: 1.0, gamma: 2.0, k: 3.0, eta: 4.0 });
        let g = Family::Gaussian { mu: 1.0, sigma2: 2.0, rho: 0.5 };
        let back: Family = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
        assert!(serde_json::from_str::<Family>(r#"{"family":"poisson","lambda":1,"gamma":2,"mu":0}"#).is_err());
        assert!(serde_json::from_str::<Family>(r#"{"family":"weibull","k":1}"#).is_err());
    }

    #[test]
    fn gaussian_with_zero_rho_ignores_the_lag() {
        let t = Transition::gaussian(10.0, 100.0, 0.0).unwrap();
        let n = Dist::normal(10.0, 10.0).unwrap();
        for v in [-50.0, 0.0, 3.0, 1e3] {
            assert!((t.trans_pdf(7.5, v).unwrap() - n.pdf(7.5)).abs() < 1e-16);
        }
    }

    #[test]
    fn poisson_from_zero_lag_is_pure_innovation() {
        let t = Transition::poisson(2.0, 3.0).unwrap();
        let p = Dist::poisson(2.0).unwrap();
        for x in 0..15 {
            let x = x as f64;
            assert!((t.trans_pdf(x, 0.0).unwrap() - p.pdf(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn shifted_lomax_conditional_and_marginal() {
        let t = Transition::lomax_shifted(10.0, 3.0).unwrap();
        // Lomax(15, 3) at x = 2: 3/15 (1 + 2/15)^-4
        let want = 3.0 / 15.0 * (1.0f64 + 2.0 / 15.0).powf(-4.0);
        assert!((t.trans_pdf(2.0, 5.0).unwrap() - want).abs() < 1e-15);
        assert!((t.marginal_pdf(0.0) - 0.2).abs() < 1e-15);
        assert!((t.cond_mean(5.0).unwrap() - 7.5).abs() < 1e-14);
        let (a, b) = t.linear_coeffs().unwrap();
        assert!((a - 5.0).abs() < 1e-14 && (b - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bernoulli_conditional_probability() {
        let t = Transition::bernoulli(0.3, 0.2).unwrap();
        assert!((t.trans_pdf(1.0, 1.0).unwrap() - 0.6).abs() < 1e-15);
        // p(1,0) / (p(1,0) + p(0,0)) = 0.2 / 0.5
        assert!((t.trans_pdf(1.0, 0.0).unwrap() - 0.4).abs() < 1e-15);
        assert!(t.linear_coeffs().is_none());
    }

    #[test]
    fn conditional_means_closed_form() {
        let g = Transition::gaussian(10.0, 4.0, 0.7).unwrap();
        // (1 - 0.7) * 10 + 0.7 * 20
        assert!((g.cond_mean(20.0).unwrap() - 17.0).abs() < 1e-12);
        let p = Transition::poisson(2.0, 3.0).unwrap();
        assert!((p.cond_mean(5.0).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(p.linear_coeffs(), Some((2.0, 0.6)));
        let gm = Transition::gamma(2.0, 1.0, 0.5).unwrap();
        assert!(gm.linear_coeffs().is_none());
        // not affine: the slope between consecutive points changes
        let y = [0.0, 1.0, 4.0];
        let m: Vec<f64> = y.iter().map(|&v| gm.cond_mean(v).unwrap()).collect();
        let s1 = (m[1] - m[0]) / (y[1] - y[0]);
        let s2 = (m[2] - m[1]) / (y[2] - y[1]);
        assert!((s1 - s2).abs() > 0.05);
    }

    #[test]
    fn named_marginals() {
        let g = Transition::gaussian(1.0, 4.0, 0.4).unwrap();
        let n = Dist::normal(1.0, 2.0).unwrap();
        assert!((g.marginal_pdf(0.3) - n.pdf(0.3)).abs() < 1e-16);
        let p = Transition::poisson(2.0, 3.0).unwrap();
        let p5 = Dist::poisson(5.0).unwrap();
        for x in 0..20 {
            assert_eq!(p.marginal_pdf(x as f64), p5.pdf(x as f64));
        }
    }

    #[test]
    fn rejects_inadmissible_parameters() {
        assert!(Transition::gaussian(0.0, 1.0, 1.0).is_err());
        assert!(Transition::bernoulli(0.5, 0.3).is_err());
        assert!(Transition::lomax(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(Transition::lomax(1.0, 1.0, 0.0, 0.5).is_err());
        assert!(Transition::lomax(0.0, 1.0, 1.0, 0.5).is_ok());
        assert!(Transition::lomax_shifted(1.0, 1.0).is_err());
        assert!(Transition::binomial(0, 0.2, 0.1).is_err());
    }

    #[test]
    fn lag_outside_state_space_is_an_error() {
        let p = Transition::poisson(1.0, 1.0).unwrap();
        assert!(p.trans_pdf(1.0, -1.0).is_err());
        assert!(p.trans_pdf(1.0, 0.5).is_err());
        assert_eq!(p.trans_pdf(-1.0, 2.0).unwrap(), 0.0);
        let b = Transition::binomial(3, 0.2, 0.1).unwrap();
        assert!(b.trans_cdf(1.0, 4.0).is_err());
    }

    #[test]
    fn poisson_innovation_draws_match_poisson_pmf() {
        let t = Transition::poisson(2.0, 3.0).unwrap();
        let mut rng = seeded(21);
        let n = 100_000;
        let mut counts = vec![0usize; 40];
        for _ in 0..n {
            counts[t.sample_trans(0.0, &mut rng).unwrap() as usize] += 1;
        }
        let p = Dist::poisson(2.0).unwrap();
        // bins 0..=7 and a pooled tail
        let mut stat = 0.0;
        let mut tail_obs = n as f64;
        let mut tail_p = 1.0;
        for k in 0..8 {
            let e = n as f64 * p.pdf(k as f64);
            stat += (counts[k] as f64 - e).powi(2) / e;
            tail_obs -= counts[k] as f64;
            tail_p -= p.pdf(k as f64);
        }
        let e = n as f64 * tail_p;
        stat += (tail_obs - e).powi(2) / e;
        // chi-square(8) upper 1% point
        assert!(stat < 20.090, "{stat}");
    }

    #[test]
    fn gaussian_near_unit_correlation_concentrates() {
        let t = Transition::gaussian(3.0, 1.0, 1.0 - 1e-10).unwrap();
        let mut rng = seeded(2);
        for _ in 0..100 {
            assert!((t.sample_trans(3.0, &mut rng).unwrap() - 3.0).abs() < 1e-3);
        }
    }

    #[test]
    fn perturbed_marginal_fails_invariance() {
        // conditional built around mean 10, marginal evaluated at mean 11
        let good = Transition::gaussian(10.0, 4.0, 0.6).unwrap();
        let shifted = Transition::gaussian(11.0, 4.0, 0.6).unwrap();
        let quad = Quadrature::default();
        let mut worst: f64 = 0.0;
        for i in 0..41 {
            let u = 2.0 + 0.4 * i as f64;
            let s = quad
                .integrate(
                    |v| good.trans_pdf(u, v).unwrap() * shifted.marginal_pdf(v),
                    Range::Whole { center: 10.0, scale: 2.0 },
                )
                .unwrap();
            worst = worst.max((s - shifted.marginal_pdf(u)).abs());
        }
        assert!(worst > 0.01, "{worst}");
    }

    #[test]
    fn gaussian_invariance_matches_bivariate_normal_oracle() {
        let t = Transition::gaussian(-3.0, 2.5, -0.8).unwrap();
        let r = t.check_invariance(1e-8).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn poisson_invariance_truncated_sum() {
        let t = Transition::poisson(2.0, 3.0).unwrap();
        let r = t.check_invariance(1e-10).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.truncation.unwrap() < 60);
    }

    #[test]
    fn numeric_marginals_normalize() {
        let quad = Quadrature::with_tol(1e-12);
        for t in [
            Transition::gamma(0.5, 1.0, 2.0).unwrap(),
            Transition::gamma(3.0, 0.5, 0.2).unwrap(),
            Transition::lomax(2.0, 1.0, 0.5, 1.0).unwrap(),
            Transition::lomax(0.0, 1.0, 0.5, 0.4).unwrap(),
            Transition::lomax(1.0, 2.0, 0.5, 3.0).unwrap(),
        ] {
            let z = quad
                .integrate(|x| t.marginal_pdf(x), Range::Upper { lo: 0.0, scale: 1.0 })
                .unwrap();
            assert!((z - 1.0).abs() < 1e-9, "{t:?}: {z}");
        }
    }

    #[test]
    fn numeric_marginal_quantile_inverts_cdf() {
        let t = Transition::gamma(1.5, 1.0, 0.7).unwrap();
        for u in [0.01, 0.3, 0.5, 0.9, 0.999] {
            let x = t.marginal_quantile(u).unwrap();
            assert!((t.marginal_cdf(x).unwrap() - u).abs() < 1e-10);
        }
    }

    #[test]
    fn gamma_marginal_sampler_matches_cdf() {
        let t = Transition::gamma(2.0, 1.0, 1.5).unwrap();
        let mut rng = seeded(8);
        let n = 20_000;
        let mut xs: Vec<f64> = (0..n).map(|_| t.sample_marginal(&mut rng).unwrap()).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut d: f64 = 0.0;
        for (i, &x) in xs.iter().enumerate().step_by(50) {
            let f = t.marginal_cdf(x).unwrap();
            d = d.max((f - i as f64 / n as f64).abs()).max((f - (i + 1) as f64 / n as f64).abs());
        }
        assert!(d < 1.6276 / (n as f64).sqrt(), "{d}");
    }

    #[test]
    fn discrete_conditional_cdf_is_running_sum() {
        for t in [
            Transition::poisson(1.5, 2.0).unwrap(),
            Transition::negbin(1.0, 2.0, 1.5, 2.0).unwrap(),
            Transition::binomial(8, 0.3, 0.2).unwrap(),
            Transition::bernoulli(0.3, 0.2).unwrap(),
        ] {
            let hi = if let Family::Binomial { n, .. } = t.family() { n } else { 6 };
            for v in 0..=hi.min(6) {
                let v = if t.tag() == FamilyTag::Bernoulli { (v % 2) as f64 } else { v as f64 };
                let mut run = 0.0;
                for x in 0..12 {
                    run += t.trans_pdf(x as f64, v).unwrap();
                    assert!((t.trans_cdf(x as f64, v).unwrap() - run).abs() < 1e-12, "{t:?}");
                }
            }
        }
    }

    fn family_strategy() -> impl Strategy<Value = (FamilyTag, u64)> {
        (0usize..8, any::<u64>()).prop_map(|(i, s)| (FamilyTag::ALL[i], s))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn pairwise_symmetry((tag, seed) in family_strategy()) {
            let t = arbitrary(tag, &mut seeded(seed));
            let grid: Vec<f64> = if t.is_discrete() {
                let top = t.truncation_point().unwrap().min(25);
                (0..=top).map(|k| k as f64).collect()
            } else {
                [0.05, 0.2, 0.4, 0.6, 0.8, 0.95].iter().map(|&p| t.marginal_quantile(p).unwrap()).collect()
            };
            for &u in &grid {
                for &v in &grid {
                    let lhs = t.trans_pdf(u, v).unwrap() * t.marginal_pdf(v);
                    let rhs = t.trans_pdf(v, u).unwrap() * t.marginal_pdf(u);
                    prop_assert!((lhs - rhs).abs() <= 1e-8 * lhs.abs().max(1.0), "{:?} u={} v={}: {} vs {}", t, u, v, lhs, rhs);
                }
            }
        }

        #[test]
        fn conditional_mean_matches_first_moment((tag, seed) in family_strategy()) {
            let t = arbitrary(tag, &mut seeded(seed));
            let y = t.marginal_quantile(0.6).unwrap();
            let m = t.cond_mean(y).unwrap();
            if !m.is_finite() {
                return Ok(());
            }
            if t.is_discrete() {
                let mut s = 0.0;
                let mut x = 0.0;
                let mut mass = 0.0;
                while mass < 1.0 - 1e-14 && x < 1e5 {
                    let p = t.trans_pdf(x, y).unwrap();
                    s += x * p;
                    mass += p;
                    x += 1.0;
                }
                prop_assert!((s - m).abs() < 1e-9 * m.abs().max(1.0), "{:?}: {} vs {}", t, s, m);
            } else if let Family::Lomax { alpha, .. } = t.family() {
                // first moment of a Lomax converges too slowly for quadrature near alpha = 1
                if alpha > 1.5 {
                    let q = Quadrature::with_tol(1e-10);
                    let s = q.integrate(|x| x * t.trans_pdf(x, y).unwrap(), t.integration_range(y)[0]).unwrap();
                    prop_assert!((s - m).abs() < 1e-6 * m.abs().max(1.0), "{:?}: {} vs {}", t, s, m);
                }
            } else {
                let q = Quadrature::with_tol(1e-10);
                let s: f64 = t.integration_range(y).into_iter()
                    .map(|r| q.integrate(|x| if t.in_state_space(x) { x * t.trans_pdf(x, y).unwrap() } else { 0.0 }, r).unwrap())
                    .sum();
                prop_assert!((s - m).abs() < 1e-6 * m.abs().max(1.0), "{:?}: {} vs {}", t, s, m);
            }
        }

        #[test]
        fn linear_coefficients_reproduce_conditional_mean((tag, seed) in family_strategy()) {
            let t = arbitrary(tag, &mut seeded(seed));
            if let Some((a, b)) = t.linear_coeffs() {
                for p in [0.1, 0.3, 0.5, 0.7, 0.9] {
                    let y = t.marginal_quantile(p).unwrap();
                    let m = t.cond_mean(y).unwrap();
                    prop_assert!((a + b * y - m).abs() <= 1e-12 * m.abs().max(1.0));
                }
            }
        }

        #[test]
        fn conditional_normalizes((tag, seed) in family_strategy()) {
            let t = arbitrary(tag, &mut seeded(seed));
            let v = t.marginal_quantile(0.7).unwrap();
            if t.is_discrete() {
                let mut s = 0.0;
                let mut x = 0.0;
                while t.trans_cdf(x, v).unwrap() < 1.0 - 1e-13 && x < 1e5 {
                    s += t.trans_pdf(x, v).unwrap();
                    x += 1.0;
                }
                s += t.trans_pdf(x, v).unwrap();
                prop_assert!((s - 1.0).abs() < 1e-12 || s >= 1.0 - 1e-12, "{}", s);
            } else {
                let q = Quadrature::with_tol(1e-11);
                let s: f64 = t.integration_range(v).into_iter()
                    .map(|r| q.integrate(|x| if t.in_state_space(x) { t.trans_pdf(x, v).unwrap() } else { 0.0 }, r).unwrap())
                    .sum();
                prop_assert!((s - 1.0).abs() < 1e-8, "{:?}: {}", t, s);
            }
        }
    }
}
