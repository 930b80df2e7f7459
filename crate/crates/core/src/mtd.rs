//! The MTD process: mixture transition density and cdf, simulation,
//! conditional likelihood, autocorrelation and the weak-stationarity check.
//!
//! Histories are passed most-recent-first: `history[0]` is `x_{t-1}`.

use nalgebra::DMatrix;
use rand::Rng;

use crate::dists::log_sum_exp;
use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::transitions::{FamilyTag, Transition};

const WEIGHT_TOL: f64 = 1e-12;
const ROOT_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MtdModel {
    weights: Vec<f64>,
    comps: Vec<Transition>,
}

/// How the first values of a simulated path are produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// `x_1` from the invariant marginal, then the start-up mixture for
    /// `t <= L`. The path is stationary from the first value.
    FromMarginal,
    /// The first `L` values, in time order. No stationarity guarantee.
    Fixed(Vec<f64>),
}

impl MtdModel {
    /// `weights[l]` pairs with `components[l]` (lag `l + 1`).
    pub fn new(weights: Vec<f64>, components: Vec<Transition>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter("model order must be at least 1".into()));
        }
        if weights.len() != components.len() {
            return Err(Error::Contract(format!(
                "{} weights but {} components",
                weights.len(),
                components.len()
            )));
        }
        check_simplex(&weights)?;
        let tag = components[0].tag();
        if components.iter().any(|c| c.tag() != tag) {
            return Err(Error::InvalidParameter("components must share one family".into()));
        }
        check_common_marginal(&components)?;
        Ok(MtdModel { weights, comps: components })
    }

    /// All lags share one component.
    pub fn shared(weights: Vec<f64>, component: Transition) -> Result<Self> {
        let comps = vec![component; weights.len()];
        Self::new(weights, comps)
    }

    pub fn order(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[Transition] {
        &self.comps
    }

    pub fn tag(&self) -> FamilyTag {
        self.comps[0].tag()
    }

    /// The component whose marginal is the process marginal.
    pub fn marginal(&self) -> &Transition {
        &self.comps[0]
    }

    fn check_history(&self, history: &[f64]) -> Result<()> {
        if history.len() != self.order() {
            return Err(Error::Contract(format!(
                "history has {} values, model order is {}",
                history.len(),
                self.order()
            )));
        }
        for &h in history {
            if !self.comps[0].in_state_space(h) {
                return Err(Error::OutOfSupport(format!("history value {h} is outside the state space")));
            }
        }
        Ok(())
    }

    pub fn ln_transition_pdf(&self, x: f64, history: &[f64]) -> Result<f64> {
        self.check_history(history)?;
        Ok(self.ln_mix(x, history))
    }

    pub fn transition_pdf(&self, x: f64, history: &[f64]) -> Result<f64> {
        Ok(self.ln_transition_pdf(x, history)?.exp())
    }

    fn ln_mix(&self, x: f64, history: &[f64]) -> f64 {
        let terms: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.comps)
            .zip(history)
            .filter(|((w, _), _)| **w > 0.0)
            .map(|((w, c), &v)| w.ln() + c.ln_trans(x, v))
            .collect();
        log_sum_exp(&terms)
    }

    pub fn transition_cdf(&self, x: f64, history: &[f64]) -> Result<f64> {
        self.check_history(history)?;
        Ok(self.cdf_mix(x, history))
    }

    pub(crate) fn cdf_mix(&self, x: f64, history: &[f64]) -> f64 {
        let s: f64 = self
            .weights
            .iter()
            .zip(&self.comps)
            .zip(history)
            .filter(|((w, _), _)| **w > 0.0)
            .map(|((w, c), &v)| w * c.cdf_unchecked(x, v))
            .sum();
        s.clamp(0.0, 1.0)
    }

    /// Simulate `n` values.
    pub fn simulate<R: Rng + ?Sized>(&self, n: usize, rng: &mut R, init: &Init) -> Result<Vec<f64>> {
        let l = self.order();
        let mut x = Vec::with_capacity(n);
        match init {
            Init::Fixed(vals) => {
                if vals.len() != l {
                    return Err(Error::Contract(format!(
                        "fixed start needs {l} values, got {}",
                        vals.len()
                    )));
                }
                for &v in vals {
                    if !self.comps[0].in_state_space(v) {
                        return Err(Error::OutOfSupport(format!("start value {v} is outside the state space")));
                    }
                }
                x.extend(vals.iter().take(n));
            }
            Init::FromMarginal => {
                if n > 0 {
                    x.push(self.marginal().sample_marginal(rng)?);
                }
                // start-up: lags 1..t-2 keep their weights, the rest of the
                // mass goes to lag t-1, which conditions on x_1
                for t in 2..=l.min(n) {
                    let u: f64 = rng.random();
                    let mut lag = t - 1;
                    let mut acc = 0.0;
                    for k in 1..t - 1 {
                        acc += self.weights[k - 1];
                        if u < acc {
                            lag = k;
                            break;
                        }
                    }
                    let v = x[t - 1 - lag];
                    x.push(self.comps[lag - 1].draw(v, rng));
                }
            }
        }
        while x.len() < n {
            let t = x.len();
            let lag = self.draw_lag(rng);
            let v = x[t - lag];
            x.push(self.comps[lag - 1].draw(v, rng));
        }
        Ok(x)
    }

    /// A lag in `1..=L` drawn from the weights.
    pub(crate) fn draw_lag<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i + 1;
            }
        }
        // rounding left u above the running sum: take the last positive weight
        self.weights.iter().rposition(|&w| w > 0.0).unwrap_or(0) + 1
    }

    /// First index (0-based) whose value is outside the state space.
    pub fn support_violation(&self, data: &[f64]) -> Option<(usize, f64)> {
        data.iter()
            .copied()
            .enumerate()
            .find(|&(_, v)| !self.comps[0].in_state_space(v))
    }

    /// `sum_{t > L} ln f(x_t | x_{t-1}, ..., x_{t-L})`, conditional on the
    /// first `L` values. Data outside the state space give `-inf`; use
    /// [`MtdModel::support_violation`] to locate the offending value.
    pub fn log_cond_likelihood(&self, data: &[f64]) -> Result<f64> {
        let l = self.order();
        if data.len() <= l {
            return Err(Error::Contract(format!(
                "need more than {l} observations, got {}",
                data.len()
            )));
        }
        if self.support_violation(data).is_some() {
            return Ok(f64::NEG_INFINITY);
        }
        let mut hist = vec![0.0; l];
        let mut total = 0.0;
        for t in l..data.len() {
            for (k, h) in hist.iter_mut().enumerate() {
                *h = data[t - 1 - k];
            }
            total += self.ln_mix(data[t], &hist);
        }
        Ok(total)
    }

    /// Per-lag `(a_l, b_l)`, or an error for a nonlinear family.
    pub fn linear_coeffs(&self) -> Result<Vec<(f64, f64)>> {
        self.comps
            .iter()
            .map(|c| {
                c.linear_coeffs().ok_or_else(|| {
                    Error::Unsupported(format!("the {} family is not linear", c.tag()))
                })
            })
            .collect()
    }

    /// Autocorrelations `r(0..=horizon)`.
    pub fn acf(&self, horizon: usize, init: &AcfInit) -> Result<Acf> {
        let coeffs = self.linear_coeffs()?;
        let (mu, mu2) = self.marginal().marginal_moments().ok_or_else(|| {
            Error::Unsupported("the marginal has no finite second moment".into())
        })?;
        let var = mu2 - mu * mu;
        if !(var > 0.0) {
            return Err(Error::Numeric(format!("marginal variance is {var}")));
        }
        let l = self.order();
        let wb: Vec<f64> = self.weights.iter().zip(&coeffs).map(|(w, (_, b))| w * b).collect();
        let swa: f64 = self.weights.iter().zip(&coeffs).map(|(w, (a, _))| w * a).sum();
        let swb: f64 = wb.iter().sum();
        let phi_const = (swa * mu - (1.0 - swb) * mu * mu) / var;

        let mut r = vec![0.0; horizon.max(l) + 1];
        r[0] = 1.0;
        let mut init_se = vec![0.0; l.saturating_sub(1)];
        match init {
            AcfInit::Exact => {
                let start = exact_initial(&wb, phi_const)?;
                r[1..l].copy_from_slice(&start);
            }
            AcfInit::MonteCarlo { len, burn, seed } => {
                if l > 1 {
                    let mut rng = seeded(*seed);
                    let path = self.simulate(len + burn, &mut rng, &Init::FromMarginal)?;
                    let emp = empirical_acf(&path[*burn..], l - 1);
                    let n = *len as f64;
                    let mut acc = 1.0;
                    for h in 1..l {
                        r[h] = emp[h];
                        init_se[h - 1] = (acc / n).sqrt();
                        acc += 2.0 * emp[h] * emp[h];
                    }
                }
            }
        }
        for h in l..r.len() {
            r[h] = phi_const + (1..=l).map(|k| wb[k - 1] * r[h - k]).sum::<f64>();
        }
        r.truncate(horizon + 1);
        Ok(Acf {
            r,
            phi_const,
            mean: mu,
            second_moment: mu2,
            init_se,
        })
    }

    /// Roots of `z^L - sum_l w_l b_l z^{L-l}`.
    pub fn weak_stationarity(&self) -> Result<Stationarity> {
        let coeffs = self.linear_coeffs()?;
        let wb: Vec<f64> = self.weights.iter().zip(&coeffs).map(|(w, (_, b))| w * b).collect();
        let mut report = stationarity_roots(&wb);
        if let Some((mu, mu2)) = self.marginal().marginal_moments() {
            let swa: f64 = self.weights.iter().zip(&coeffs).map(|(w, (a, _))| w * a).sum();
            let swb: f64 = wb.iter().sum();
            report.phi_const = Some((swa * mu - (1.0 - swb) * mu * mu) / (mu2 - mu * mu));
        }
        Ok(report)
    }
}

fn check_simplex(w: &[f64]) -> Result<()> {
    if let Some(bad) = w.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("weights must be nonnegative, got {bad}")));
    }
    let s: f64 = w.iter().sum();
    if (s - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::InvalidParameter(format!("weights sum to {s}, not 1")));
    }
    Ok(())
}

// Compare marginal log densities at a few marginal quantiles of the first
// component; cheaper than a full invariance check per lag.
fn check_common_marginal(comps: &[Transition]) -> Result<()> {
    let first = &comps[0];
    if comps.iter().all(|c| c == first) {
        return Ok(());
    }
    let probe: Vec<f64> = if first.is_discrete() {
        (0..6).map(|k| k as f64).filter(|&k| first.in_state_space(k)).collect()
    } else {
        [0.1, 0.3, 0.5, 0.7, 0.9]
            .iter()
            .map(|&p| first.marginal_quantile(p))
            .collect::<Result<_>>()?
    };
    for (i, c) in comps.iter().enumerate().skip(1) {
        for &x in &probe {
            let a = first.ln_marginal_pdf(x);
            let b = c.ln_marginal_pdf(x);
            if (a - b).abs() > 1e-9 * a.abs().max(1.0) {
                return Err(Error::InvalidParameter(format!(
                    "component {} has a different invariant marginal than component 1",
                    i + 1
                )));
            }
        }
    }
    Ok(())
}

/// Initial conditions for the autocorrelation recursion.
#[derive(Debug, Clone, PartialEq)]
pub enum AcfInit {
    /// Empirical autocorrelations of one long simulated path.
    MonteCarlo { len: usize, burn: usize, seed: u64 },
    /// Solve the recursion at lags `1..L-1`, where it also holds with
    /// `r(|h - l|)`, as a linear system.
    Exact,
}

impl Default for AcfInit {
    fn default() -> Self {
        AcfInit::MonteCarlo {
            len: 1_000_000,
            burn: 10_000,
            seed: 0x5EED_ACF0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Acf {
    /// `r(0..=H)`.
    pub r: Vec<f64>,
    pub phi_const: f64,
    pub mean: f64,
    pub second_moment: f64,
    /// Standard errors of the Monte Carlo initial values `r(1..L-1)`
    /// (Bartlett's formula); zeros for exact initial values.
    pub init_se: Vec<f64>,
}

fn exact_initial(wb: &[f64], phi_const: f64) -> Result<Vec<f64>> {
    let l = wb.len();
    let m = l.saturating_sub(1);
    if m == 0 {
        return Ok(Vec::new());
    }
    // unknowns r(1..L-1); row h: r(h) - sum_l wb_l r(|h-l|) = phi
    let mut a = DMatrix::<f64>::identity(m, m);
    let mut rhs = nalgebra::DVector::<f64>::from_element(m, phi_const);
    for h in 1..=m {
        for k in 1..=l {
            let d = h.abs_diff(k);
            if d == 0 {
                rhs[h - 1] += wb[k - 1];
            } else {
                a[(h - 1, d - 1)] -= wb[k - 1];
            }
        }
    }
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numeric("initial autocorrelation system is singular".into()))?;
    Ok(sol.iter().copied().collect())
}

/// Weak-stationarity verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Stationarity {
    /// Roots as `(re, im)`.
    pub roots: Vec<(f64, f64)>,
    pub max_modulus: f64,
    pub all_inside: bool,
    /// Drift constant of the recursion, when the marginal moments exist.
    pub phi_const: Option<f64>,
}

/// Roots of `z^L - c_1 z^{L-1} - ... - c_L` via companion-matrix eigenvalues.
pub fn stationarity_roots(c: &[f64]) -> Stationarity {
    let l = c.len();
    let mut comp = DMatrix::<f64>::zeros(l, l);
    for (j, &v) in c.iter().enumerate() {
        comp[(0, j)] = v;
    }
    for i in 1..l {
        comp[(i, i - 1)] = 1.0;
    }
    let eig = comp.complex_eigenvalues();
    let roots: Vec<(f64, f64)> = eig.iter().map(|z| (z.re, z.im)).collect();
    let max_modulus = roots.iter().map(|(re, im)| re.hypot(*im)).fold(0.0, f64::max);
    Stationarity {
        roots,
        max_modulus,
        all_inside: max_modulus < 1.0 - ROOT_MARGIN,
        phi_const: None,
    }
}

/// Sample autocorrelations `r(0..=max_lag)` with the usual `1/n` estimator.
pub fn empirical_acf(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let c0: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    (0..=max_lag)
        .map(|h| {
            if h >= n {
                return 0.0;
            }
            let c: f64 = (h..n).map(|t| (x[t] - mean) * (x[t - h] - mean)).sum();
            c / c0
        })
        .collect()
}
