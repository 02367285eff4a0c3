//! Theory-side calculators: tuning and architecture schedules, convergence-rate curves,
//! the log covering-number bound and an empirical weak-dependence diagnostic.
//!
//! Every asymptotic relation is made concrete with an explicit multiplier (`c_depth`,
//! `c_width`, `c_bound`, `c_lambda`, all 1 by default).

use crate::error::{Error, Result};

/// Which oracle inequality the schedule serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateTask {
    /// Square loss; `tau_max = beta / (16 K_n (L+1) ((N+1) B)^(L+1))`.
    Regression,
    /// Margin loss with Lipschitz constant `K_l`;
    /// `tau_max = beta / (4 K_l (L+1) ((N+1) B)^(L+1))`.
    Classification,
}

impl std::str::FromStr for RateTask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regression" => Ok(RateTask::Regression),
            "classification" | "binary" => Ok(RateTask::Classification),
            other => Err(Error::Parse(format!("unknown task '{other}'"))),
        }
    }
}

/// Exponents and multipliers of the tuning schedules.
///
/// `lambda_n = c_lambda (log n)^nu3 / n^nu4`, `beta_n = (log n)^nu5 / n^nu6`,
/// `L_n = ceil(c_depth log n)`, `N_n = ceil(c_width n^nu1)`, `B_n = max(1, c_bound n^nu2)`.
/// `kappa` and `r` describe the approximation class (`S = C eps^-kappa (log n)^r`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleExponents {
    pub nu1: f64,
    pub nu2: f64,
    pub nu3: f64,
    pub nu4: f64,
    pub nu5: f64,
    pub nu6: f64,
    pub kappa: f64,
    pub r: f64,
    pub c_depth: f64,
    pub c_width: f64,
    pub c_bound: f64,
    pub c_lambda: f64,
}

impl Default for ScheduleExponents {
    fn default() -> Self {
        Self {
            nu1: 0.5,
            nu2: 0.5,
            nu3: 1.0,
            nu4: 0.5,
            nu5: 1.0,
            nu6: 0.25,
            kappa: 1.0,
            r: 1.0,
            c_depth: 1.0,
            c_width: 1.0,
            c_bound: 1.0,
            c_lambda: 1.0,
        }
    }
}

/// Absolute tolerance for the boundary case `nu4 + nu6 = 1`.
const BOUNDARY_TOL: f64 = 1e-12;

impl ScheduleExponents {
    /// Checks the admissibility conditions and returns the exponents unchanged.
    pub fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::ScheduleCondition(msg));
        let positive = [
            ("nu1", self.nu1),
            ("nu2", self.nu2),
            ("nu3", self.nu3),
            ("nu5", self.nu5),
            ("nu6", self.nu6),
            ("kappa", self.kappa),
            ("r", self.r),
            ("c_depth", self.c_depth),
            ("c_width", self.c_width),
            ("c_bound", self.c_bound),
            ("c_lambda", self.c_lambda),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return fail(format!("{name} must be a positive finite number, got {v}"));
            }
        }
        if !(self.nu4 > 0.0 && self.nu4 < 1.0) {
            return fail(format!("nu4 must lie in (0, 1), got {}", self.nu4));
        }
        if !(self.nu6 < 0.5) {
            return fail(format!("nu6 must be < 1/2, got {}", self.nu6));
        }
        let sum = self.nu4 + self.nu6;
        if (sum - 1.0).abs() <= BOUNDARY_TOL {
            if !(self.nu5 > 1.0 - self.nu3) {
                return fail(format!(
                    "nu4 + nu6 = 1 requires nu5 > 1 - nu3, got nu5 = {} and nu3 = {}",
                    self.nu5, self.nu3
                ));
            }
        } else if sum > 1.0 {
            return fail(format!(
                "nu4 + nu6 must be < 1 (or = 1 with nu5 > 1 - nu3), got {sum}"
            ));
        }
        Ok(())
    }
}

/// Constants entering `K_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    /// Sub-Gaussian parameter of the regression noise.
    pub rho: f64,
    /// Sup-norm bound on the target function.
    pub h_star: f64,
    /// Lipschitz constant of the margin loss (1 for the hinge loss).
    pub loss_lipschitz: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        Self {
            rho: 1.0,
            h_star: 1.0,
            loss_lipschitz: 1.0,
        }
    }
}

impl BoundConstants {
    /// `K_n = max(sqrt(32 rho^2) sqrt(log n), H*)`.
    pub fn k_n(&self, n: f64) -> f64 {
        ((32.0 * self.rho * self.rho).sqrt() * n.ln().sqrt()).max(self.h_star)
    }
}

/// Concrete schedule at one sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub n: f64,
    pub depth: u64,
    pub width: u64,
    pub weight_bound: f64,
    pub lambda: f64,
    pub tau_max: f64,
    pub beta: f64,
    /// The constant multiplying the `tau` denominator: `16 K_n` (regression) or `4 K_l`.
    pub tau_scale: f64,
}

impl Schedule {
    /// `(L+1) ((N+1) B)^(L+1)`.
    pub fn growth_factor(&self) -> f64 {
        growth_factor(self.depth as f64, self.width as f64, self.weight_bound)
    }
}

fn growth_factor(depth: f64, width: f64, bound: f64) -> f64 {
    (depth + 1.0) * ((width + 1.0) * bound).powf(depth + 1.0)
}

fn check_n(n: f64) -> Result<()> {
    if n >= 2.0 && n.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("sample size must be >= 2, got {n}")))
    }
}

/// `c (log n)^nu3 / n^nu4`, without any admissibility check.
pub fn lambda_rate(n: f64, c_lambda: f64, nu3: f64, nu4: f64) -> f64 {
    c_lambda * n.ln().powf(nu3) / n.powf(nu4)
}

/// Depth, width, weight bound, `lambda_n`, the largest admissible `tau_n` and `beta_n`.
///
/// For [`RateTask::Classification`] the penalty weight decays as `(log n)^nu3 / n`, i.e.
/// the `n` exponent is pinned to 1; `nu4` then only enters the admissibility conditions and
/// the rate.
pub fn schedule(
    n: f64,
    exp: &ScheduleExponents,
    consts: &BoundConstants,
    task: RateTask,
) -> Result<Schedule> {
    check_n(n)?;
    exp.validate()?;
    let log_n = n.ln();
    let depth = (exp.c_depth * log_n).ceil().max(1.0);
    let width = (exp.c_width * n.powf(exp.nu1)).ceil().max(1.0);
    let weight_bound = (exp.c_bound * n.powf(exp.nu2)).max(1.0);
    let lambda = match task {
        RateTask::Regression => lambda_rate(n, exp.c_lambda, exp.nu3, exp.nu4),
        RateTask::Classification => lambda_rate(n, exp.c_lambda, exp.nu3, 1.0),
    };
    let beta = log_n.powf(exp.nu5) / n.powf(exp.nu6);
    let tau_scale = match task {
        RateTask::Regression => 16.0 * consts.k_n(n),
        RateTask::Classification => 4.0 * consts.loss_lipschitz,
    };
    let tau_max = beta / (tau_scale * growth_factor(depth, width, weight_bound));
    Ok(Schedule {
        n,
        depth: depth as u64,
        width: width as u64,
        weight_bound,
        lambda,
        tau_max,
        beta,
        tau_scale,
    })
}

/// `(log n)^a / n^b`
#[inline]
fn log_poly(n: f64, a: f64, b: f64) -> f64 {
    n.ln().powf(a) / n.powf(b)
}

/// The two terms of a rate bound, `(approximation, remainder)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateTerms {
    pub approximation: f64,
    pub remainder: f64,
}

impl RateTerms {
    pub fn bound(&self) -> f64 {
        self.approximation.max(self.remainder)
    }
}

/// Exponents `(log exponent, polynomial exponent)` of the approximation term.
fn approximation_exponents(exp: &ScheduleExponents, task: RateTask) -> (f64, f64) {
    let b = match task {
        RateTask::Regression => 2.0 * exp.nu4 / (exp.kappa + 2.0),
        RateTask::Classification => exp.nu4 / (exp.kappa + 1.0),
    };
    (exp.r + exp.nu3, b)
}

pub fn rate_terms(n: f64, exp: &ScheduleExponents, task: RateTask) -> Result<RateTerms> {
    if !(n > 1.0) {
        return Err(Error::InvalidConfig(format!("sample size must be > 1, got {n}")));
    }
    let (a, b) = approximation_exponents(exp, task);
    Ok(RateTerms {
        approximation: log_poly(n, a, b),
        remainder: log_poly(n, exp.nu5, exp.nu6),
    })
}

/// `(log n)^(r+nu3) / n^(2 nu4/(kappa+2))  v  (log n)^nu5 / n^nu6`.
pub fn regression_rate(n: f64, exp: &ScheduleExponents) -> Result<f64> {
    rate_terms(n, exp, RateTask::Regression).map(|t| t.bound())
}

/// `(log n)^(r+nu3) / n^(nu4/(kappa+1))  v  (log n)^nu5 / n^nu6`.
pub fn classification_rate(n: f64, exp: &ScheduleExponents) -> Result<f64> {
    rate_terms(n, exp, RateTask::Classification).map(|t| t.bound())
}

/// Sample size beyond which both rate terms are strictly decreasing.
///
/// `d/dn log((log n)^a / n^b) = (a / log n - b) / n`, negative once `n > exp(a / b)`.
pub fn rate_decreasing_threshold(exp: &ScheduleExponents, task: RateTask) -> f64 {
    let (a, b) = approximation_exponents(exp, task);
    (a / b).exp().max((exp.nu5 / exp.nu6).exp())
}

/// `(n, bound)` pairs on a log-spaced grid from 2 to `n_max`.
pub fn rate_curve(
    task: RateTask,
    exp: &ScheduleExponents,
    n_max: f64,
    points: usize,
) -> Result<Vec<(f64, f64)>> {
    exp.validate()?;
    if !(n_max > 2.0) || points < 2 {
        return Err(Error::InvalidConfig(
            "rate curve needs n_max > 2 and at least 2 points".into(),
        ));
    }
    let (lo, hi) = (2f64.ln(), n_max.ln());
    (0..points)
        .map(|k| {
            let n = (lo + (hi - lo) * k as f64 / (points - 1) as f64).exp();
            let n = if k + 1 == points { n_max } else { n };
            rate_terms(n, exp, task).map(|t| (n, t.bound()))
        })
        .collect()
}

/// Arguments of [`covering_bound`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoveringArgs {
    pub eps: f64,
    pub depth: f64,
    pub width: f64,
    pub weight_bound: f64,
    pub j: i32,
    pub alpha: f64,
    pub lambda: f64,
    pub tau: f64,
    pub k: f64,
}

/// Logarithm of the covering-number bound of the penalized network class:
///
/// `2 (2^j alpha / lambda) (L+1) log( (L+1)(N+1)B / (eps/(4K) - tau (L+1)((N+1)B)^(L+1)) )`.
///
/// Fails when the inner denominator is not strictly positive, i.e. when `tau` is too
/// large for the requested `eps`.
pub fn covering_bound(args: &CoveringArgs) -> Result<f64> {
    let CoveringArgs {
        eps,
        depth,
        width,
        weight_bound,
        j,
        alpha,
        lambda,
        tau,
        k,
    } = *args;
    if !(eps > 0.0) || !(lambda > 0.0) || !(k > 0.0) || tau < 0.0 || alpha < 0.0 {
        return Err(Error::InvalidConfig(
            "covering bound needs eps, lambda, K > 0 and tau, alpha >= 0".into(),
        ));
    }
    let denominator = eps / (4.0 * k) - tau * growth_factor(depth, width, weight_bound);
    if !(denominator > 0.0) {
        return Err(Error::TauTooLarge { denominator });
    }
    let numerator = (depth + 1.0) * (width + 1.0) * weight_bound;
    let radius = 2f64.powi(j) * alpha / lambda;
    Ok(2.0 * radius * (depth + 1.0) * (numerator / denominator).ln())
}

/// Bounded Lipschitz test functions for [`dependence_diagnostic`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFunction {
    Identity,
    /// `x` clipped to `[-1, 1]`.
    ClippedIdentity,
    Sin,
}

impl TestFunction {
    /// Default family: clipped identity and sine.
    pub const DEFAULT_FAMILY: [TestFunction; 2] = [TestFunction::ClippedIdentity, TestFunction::Sin];

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            TestFunction::Identity => x,
            TestFunction::ClippedIdentity => x.clamp(-1.0, 1.0),
            TestFunction::Sin => x.sin(),
        }
    }
}

/// Mean computed around the first element, so a constant slice has its exact value as mean.
fn shifted_mean(v: &[f64]) -> f64 {
    let base = v[0];
    base + v.iter().map(|x| x - base).sum::<f64>() / v.len() as f64
}

/// Empirical covariance-decay proxy: for each lag `r = 1..=r_max`, the largest absolute
/// sample covariance `Cov(g1(x_t), g2(x_{t+r}))` over all pairs `(g1, g2)` of the family.
pub fn dependence_diagnostic(
    series: &[f64],
    r_max: usize,
    family: &[TestFunction],
) -> Result<Vec<f64>> {
    if r_max == 0 || series.len() < 2 * (r_max + 1) {
        return Err(Error::InvalidConfig(format!(
            "series of length {} is too short for r_max = {r_max}",
            series.len()
        )));
    }
    if family.is_empty() {
        return Err(Error::InvalidConfig("empty test-function family".into()));
    }
    let images: Vec<Vec<f64>> = family
        .iter()
        .map(|g| series.iter().map(|&x| g.apply(x)).collect())
        .collect();
    let n = series.len();
    let out = (1..=r_max)
        .map(|r| {
            let mut worst: f64 = 0.0;
            for a in &images {
                for b in &images {
                    let head = &a[..n - r];
                    let tail = &b[r..];
                    let (ma, mb) = (shifted_mean(head), shifted_mean(tail));
                    let cov = head
                        .iter()
                        .zip(tail)
                        .map(|(x, y)| (x - ma) * (y - mb))
                        .sum::<f64>()
                        / (n - r) as f64;
                    worst = worst.max(cov.abs());
                }
            }
            worst
        })
        .collect();
    Ok(out)
}
