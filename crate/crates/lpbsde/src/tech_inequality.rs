//! The two-regime pointwise inequality `Ψ(a,b,p) >= Γ(a,b,K,ε,p)` that powers
//! the `1 < p < 2` moment estimates, together with its explicit constants, a
//! grid verifier and a per-point proof certificate.
//!
//! `Ψ` is the second-order Taylor remainder of `|·|^p` and `Γ` switches at the
//! radius `ϑ(ε,p)|a|` between a quadratic small-jump bound and a first-order
//! large-jump bound. Both scale like `|a|^p`, so checking the inequality
//! reduces to the plane `(t, τ)` with `b = t·a + c`, `τ = |c|/|a|`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `ϑ(ε,p) = sqrt( ((p-1)/(2ε))^{2/(2-p)} / 2 + 1/2 ) - 1`, the switching
/// radius between the two regimes. Negative when `ε > (p-1)/2`.
pub fn vartheta(eps: f64, p: f64) -> f64 {
    (0.5 * ((p - 1.0) / (2.0 * eps)).powf(2.0 / (2.0 - p)) + 0.5).sqrt() - 1.0
}

/// Explicit constant `α(K,p) = (4(2K+2)+1)^{1/(p-1)}`; past this radius the
/// large-jump comparison function `h` stays nonnegative.
pub fn alpha_const(big_k: f64, p: f64) -> f64 {
    (4.0 * (2.0 * big_k + 2.0) + 1.0).powf(1.0 / (p - 1.0))
}

/// `h(x) = 2^{-p/2} x^p - 2^{p/2} - 1 - p(2K+1)x`. Convex with `h(0) < 0`,
/// so it has a single positive root and is nonnegative beyond it;
/// `alpha_const` bounds that root from above.
pub fn h_fn(x: f64, big_k: f64, p: f64) -> f64 {
    let half_pow = 2f64.powf(p / 2.0);
    x.powf(p) / half_pow - half_pow - 1.0 - p * (2.0 * big_k + 1.0) * x
}

/// Largest `ε` for which the switching radius still dominates the explicit
/// constant: `ϑ(ε,p) >= α(K,p)` holds exactly at
/// `ε = (p-1) / (2 (2(α+1)² - 1)^{(2-p)/2})`; the returned value sits a hair
/// below that threshold so the comparison survives floating point, and is
/// always strictly below `(p-1)/2`.
pub fn epsilon_max(big_k: f64, p: f64) -> f64 {
    let a = alpha_const(big_k, p);
    let denom = (2.0 * (a + 1.0) * (a + 1.0) - 1.0).powf((2.0 - p) / 2.0);
    let eps = (p - 1.0) / (2.0 * denom) * (1.0 - 1e-9);
    eps.min(0.5 * (p - 1.0) * (1.0 - 1e-9))
}

/// `Ψ(a,b,p) = |a+b|^p - |a|^p - p|a|^{p-2} <a,b> 1_{a≠0}`.
pub fn psi_fn(a: &[f64], b: &[f64], p: f64) -> f64 {
    let na2: f64 = a.iter().map(|x| x * x).sum();
    let nab2: f64 = a.iter().zip(b).map(|(x, y)| (x + y) * (x + y)).sum();
    let mut v = nab2.powf(p / 2.0) - na2.powf(p / 2.0);
    if na2 > 0.0 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        v -= p * na2.powf(p / 2.0 - 1.0) * dot;
    }
    v
}

/// `Γ(a,b,K,ε,p) = 2Kp|a|^{p-1}|b| 1_{|b| >= ϑ|a|} + pε|a|^{p-2}|b|² 1_{|b| < ϑ|a|}`.
pub fn gamma_fn(a: &[f64], b: &[f64], big_k: f64, eps: f64, p: f64) -> f64 {
    let na = crate::levy::euclid(a);
    if na == 0.0 {
        return 0.0;
    }
    let nb = crate::levy::euclid(b);
    let th = vartheta(eps, p);
    if nb >= th * na {
        2.0 * big_k * p * na.powf(p - 1.0) * nb
    } else {
        p * eps * na.powf(p - 2.0) * nb * nb
    }
}

/// Reduce `(a, b)` to plane coordinates: `t = <a,b>/|a|²` and
/// `τ² = (|b|² - t²|a|²)/|a|²` (clipped at zero for roundoff), so that
/// `Ψ(a,b,p) = |a|^p ψ(t,τ²,p)` and `Γ(a,b,·) = |a|^p γ(t,τ²,·)`.
pub fn reduce(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    let na2: f64 = a.iter().map(|x| x * x).sum();
    if na2 == 0.0 {
        return Err(Error::InvalidInput("reduce requires a != 0".into()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let nb2: f64 = b.iter().map(|x| x * x).sum();
    let t = dot / na2;
    let tau2 = ((nb2 - t * t * na2) / na2).max(0.0);
    Ok((t, tau2))
}

/// `ψ(t,τ²,p) = ((1+t)² + τ²)^{p/2} - 1 - pt`.
pub fn psi_reduced(t: f64, tau2: f64, p: f64) -> f64 {
    ((1.0 + t) * (1.0 + t) + tau2).powf(p / 2.0) - 1.0 - p * t
}

/// Reduced form of `Γ`, switching at `(t²+τ²)^{1/2} = ϑ(ε,p)`.
pub fn gamma_reduced(t: f64, tau2: f64, big_k: f64, eps: f64, p: f64) -> f64 {
    let r2 = t * t + tau2;
    let r = r2.sqrt();
    if r >= vartheta(eps, p) {
        2.0 * big_k * p * r
    } else {
        p * eps * r2
    }
}

/// Validated parameter bundle for the inequality.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TechIneqParams {
    pub p: f64,
    pub big_k: f64,
    pub eps: f64,
    /// Switching radius `ϑ(eps, p)`.
    pub vartheta: f64,
    /// Explicit constant `α(K, p)`.
    pub alpha_const: f64,
}

impl TechIneqParams {
    /// Build parameters; `eps = None` selects `epsilon_max(K, p)`.
    pub fn new(p: f64, big_k: f64, eps: Option<f64>) -> Result<Self> {
        if !(p > 1.0 && p < 2.0) {
            return Err(Error::InvalidInput(format!("p={p} must lie in (1,2)")));
        }
        if !(big_k >= 0.0) {
            return Err(Error::InvalidInput(format!("K={big_k} must be >= 0")));
        }
        let eps = match eps {
            Some(e) => {
                if !(e > 0.0) || !e.is_finite() {
                    return Err(Error::InvalidInput(format!("eps={e} must be positive")));
                }
                e
            }
            None => {
                let e = epsilon_max(big_k, p);
                if !(e > 0.0) || !e.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "epsilon_max degenerates for p={p}, K={big_k}"
                    )));
                }
                e
            }
        };
        Ok(TechIneqParams {
            p,
            big_k,
            eps,
            vartheta: vartheta(eps, p),
            alpha_const: alpha_const(big_k, p),
        })
    }

    /// Whether `eps` is small enough for the certificate's second regime,
    /// i.e. `eps <= epsilon_max` so that `ϑ >= α >= 2`.
    pub fn admissible(&self) -> bool {
        self.eps <= epsilon_max(self.big_k, self.p) && self.eps < 0.5 * (self.p - 1.0)
    }

    pub fn slack(&self, t: f64, tau2: f64) -> f64 {
        psi_reduced(t, tau2, self.p) - gamma_reduced(t, tau2, self.big_k, self.eps, self.p)
    }
}

/// Rectangular `(t, τ)` grid plus a log-spaced far field out to `10 ϑ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub t_steps: usize,
    pub tau_max: f64,
    pub tau_steps: usize,
    pub far_radii: usize,
    pub far_angles: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            t_min: -50.0,
            t_max: 50.0,
            t_steps: 500,
            tau_max: 50.0,
            tau_steps: 250,
            far_radii: 192,
            far_angles: 65,
        }
    }
}

impl GridSpec {
    fn check(&self) -> Result<()> {
        if !(self.t_max > self.t_min) || self.t_steps < 2 || self.tau_steps < 2 {
            return Err(Error::InvalidInput("degenerate grid spec".into()));
        }
        if !(self.tau_max > 0.0) {
            return Err(Error::InvalidInput("tau_max must be positive".into()));
        }
        Ok(())
    }
}

/// A grid point where the inequality failed its slack tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub t: f64,
    pub tau: f64,
    pub slack: f64,
}

/// Result of sweeping `ψ - γ` over a grid.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    pub params: TechIneqParams,
    pub points_checked: usize,
    pub min_slack: f64,
    pub argmin_t: f64,
    pub argmin_tau: f64,
    pub violations: Vec<Violation>,
    pub violation_count: usize,
}

const MAX_RECORDED_VIOLATIONS: usize = 100;

fn slack_tolerance(psi_value: f64) -> f64 {
    -1e-12 * (1.0 + psi_value.abs())
}

/// Sweep the reduced inequality over the grid plus far field.
///
/// A point is a violation when `ψ - γ < -1e-12 (1 + |ψ|)`; the tolerance
/// covers floating-point rounding near the zero set only. The minimum and its
/// argmin use a total order on `(slack, t, τ)`, so the result is independent
/// of how the sweep is parallelized.
pub fn check_inequality(params: &TechIneqParams, grid: &GridSpec) -> Result<InequalityReport> {
    grid.check()?;
    let mut points: Vec<(f64, f64)> =
        Vec::with_capacity(grid.t_steps * grid.tau_steps + grid.far_radii * grid.far_angles);
    for i in 0..grid.t_steps {
        let t = grid.t_min + (grid.t_max - grid.t_min) * i as f64 / (grid.t_steps - 1) as f64;
        for j in 0..grid.tau_steps {
            let tau = grid.tau_max * j as f64 / (grid.tau_steps - 1) as f64;
            points.push((t, tau));
        }
    }
    // log-spaced far field out to 10 ϑ, when it extends past the grid
    let r0 = (grid.t_max.abs().max(grid.t_min.abs()).powi(2) + grid.tau_max.powi(2)).sqrt();
    let r1 = 10.0 * params.vartheta;
    if r1 > r0 && grid.far_radii > 0 && grid.far_angles > 1 {
        for i in 0..grid.far_radii {
            let f = (i + 1) as f64 / grid.far_radii as f64;
            let r = r0 * (r1 / r0).powf(f);
            for j in 0..grid.far_angles {
                let theta = std::f64::consts::PI * j as f64 / (grid.far_angles - 1) as f64;
                points.push((r * theta.cos(), r * theta.sin()));
            }
        }
    }

    #[derive(Clone)]
    struct Acc {
        min: (f64, f64, f64), // (slack, t, tau), lexicographic
        violations: Vec<Violation>,
        count: usize,
    }
    let identity = || Acc {
        min: (f64::INFINITY, f64::INFINITY, f64::INFINITY),
        violations: Vec::new(),
        count: 0,
    };
    let merge = |mut a: Acc, b: Acc| {
        if b.min < a.min {
            a.min = b.min;
        }
        a.count += b.count;
        a.violations.extend(b.violations);
        a.violations.sort_by(|x, y| {
            (x.slack, x.t, x.tau)
                .partial_cmp(&(y.slack, y.t, y.tau))
                .unwrap()
        });
        a.violations.truncate(MAX_RECORDED_VIOLATIONS);
        a
    };

    let acc = points
        .par_chunks(8192)
        .map(|chunk| {
            let mut acc = identity();
            for &(t, tau) in chunk {
                let tau2 = tau * tau;
                let psi = psi_reduced(t, tau2, params.p);
                let gamma = gamma_reduced(t, tau2, params.big_k, params.eps, params.p);
                let slack = psi - gamma;
                let key = (slack, t, tau);
                if key < acc.min {
                    acc.min = key;
                }
                if slack < slack_tolerance(psi) {
                    acc.count += 1;
                    if acc.violations.len() < MAX_RECORDED_VIOLATIONS {
                        acc.violations.push(Violation { t, tau, slack });
                    }
                }
            }
            acc
        })
        .reduce(identity, merge);

    Ok(InequalityReport {
        params: *params,
        points_checked: points.len(),
        min_slack: acc.min.0,
        argmin_t: acc.min.1,
        argmin_tau: acc.min.2,
        violations: acc.violations,
        violation_count: acc.count,
    })
}

/// Which regime a certificate point falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateCase {
    /// `(t² + τ²)^{1/2} < ϑ`: quadratic regime, handled through `σ`.
    SmallRadius,
    /// `(t² + τ²)^{1/2} >= ϑ`: linear regime, handled through `h`.
    LargeRadius,
}

/// Per-point certificate retracing the displayed inequalities of the proof.
#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub t: f64,
    pub tau2: f64,
    pub params: TechIneqParams,
    pub case: CertificateCase,
    pub sigma_at_minus1: Option<f64>,
    pub sigma_prime_at_minus1: Option<f64>,
    pub sigma_second_at_minus1: Option<f64>,
    /// Root of `g` below `-1`.
    pub xi: Option<f64>,
    /// Root of `g` above `-1`.
    pub upsilon: Option<f64>,
    /// Stationary point of `σ` inside `(-1, Υ)`.
    pub delta_star: Option<f64>,
    /// Interior minimum `m = ϖ(δ*)`.
    pub interior_minimum: Option<f64>,
    /// `h` at the point's radius (large-radius case).
    pub h_at_threshold: Option<f64>,
    /// Named booleans, one per displayed inequality.
    pub bound_checks: Vec<(String, bool)>,
}

impl CertificateReport {
    pub fn all_passed(&self) -> bool {
        self.bound_checks.iter().all(|(_, ok)| *ok)
    }
}

fn sigma(s: f64, tau2: f64, eps: f64, p: f64) -> f64 {
    ((1.0 + s) * (1.0 + s) + tau2).powf(p / 2.0) - 1.0 - p * s - p * eps * (s * s + tau2)
}

fn sigma_prime(s: f64, tau2: f64, eps: f64, p: f64) -> f64 {
    let base = (1.0 + s) * (1.0 + s) + tau2;
    p * base.powf(p / 2.0 - 1.0) * (1.0 + s) - p - 2.0 * p * eps * s
}

fn sigma_second(s: f64, tau2: f64, eps: f64, p: f64) -> f64 {
    let base = (1.0 + s) * (1.0 + s) + tau2;
    p * base.powf(p / 2.0 - 2.0) * ((p - 1.0) * (1.0 + s) * (1.0 + s) + tau2) - 2.0 * p * eps
}

/// `ϖ(x)`: closed form of `σ` at a stationary point, free of the
/// cancellation in evaluating `σ` directly.
fn varpi(x: f64, tau2: f64, eps: f64, p: f64) -> f64 {
    (2.0 - p) * eps * x * x
        + (2.0 * eps + 1.0 - p) * x
        + (2.0 - p) * eps * tau2
        + tau2 * (1.0 - 2.0 * eps) / (1.0 + x)
}

/// Build the proof certificate at one reduced point `(t, τ²)`.
pub fn proof_certificate(t: f64, tau2: f64, params: &TechIneqParams) -> Result<CertificateReport> {
    if !(tau2 >= 0.0) {
        return Err(Error::InvalidInput(format!("tau2={tau2} must be >= 0")));
    }
    let p = params.p;
    let eps = params.eps;
    let big_k = params.big_k;
    let th = params.vartheta;
    let r = (t * t + tau2).sqrt();
    let psi = psi_reduced(t, tau2, p);
    let gamma = gamma_reduced(t, tau2, big_k, eps, p);
    let point_ok = psi - gamma >= slack_tolerance(psi);

    if r < th {
        // small radius: σ(s) = ψ(s,τ²) - pε(s²+τ²) must be nonnegative
        let q_big = ((p - 1.0) / (2.0 * eps)).powf(2.0 / (2.0 - p));
        let sigma_m1 = sigma(-1.0, tau2, eps, p);
        let sigma_p_m1 = sigma_prime(-1.0, tau2, eps, p);
        let sigma_s_m1 = if tau2 > 0.0 {
            sigma_second(-1.0, tau2, eps, p)
        } else {
            f64::INFINITY
        };
        let inner = q_big - tau2;
        let (xi, upsilon) = if inner > 0.0 {
            (-1.0 - inner.sqrt(), inner.sqrt() - 1.0)
        } else {
            (f64::NAN, f64::NAN)
        };
        let g_at_m1 = if tau2 > 0.0 {
            p * (p - 1.0) * tau2.powf(p / 2.0 - 1.0) - 2.0 * p * eps
        } else {
            f64::INFINITY
        };

        // locate the stationary point of σ on (-1, Υ) by bisection
        if !(upsilon.is_finite() && upsilon > -1.0) {
            return Err(Error::BisectionFailure(format!(
                "no bracket: upsilon = {upsilon}"
            )));
        }
        let mut lo = -1.0 + 1e-12 * (1.0 + upsilon.abs());
        let mut hi = upsilon;
        let f_hi = sigma_prime(hi, tau2, eps, p);
        let f_lo = sigma_prime(lo, tau2, eps, p);
        let delta_star = if tau2 == 0.0 {
            0.0
        } else if f_lo < 0.0 && f_hi > 0.0 {
            for _ in 0..240 {
                let mid = 0.5 * (lo + hi);
                if hi - lo <= 1e-14 * hi.abs().max(1.0) {
                    break;
                }
                if sigma_prime(mid, tau2, eps, p) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        } else {
            return Err(Error::BisectionFailure(format!(
                "sigma' does not change sign on (-1, {upsilon}): [{f_lo}, {f_hi}]"
            )));
        };
        let m = varpi(delta_star, tau2, eps, p);

        let bound_checks = vec![
            ("sigma_at_minus1_positive".into(), sigma_m1 > 0.0),
            ("sigma_prime_at_minus1_negative".into(), sigma_p_m1 < 0.0),
            ("g_at_minus1_positive".into(), g_at_m1 > 0.0),
            ("xi_below_minus1".into(), xi < -1.0),
            ("upsilon_positive".into(), upsilon > 0.0),
            (
                "up_bound_tau_1".into(),
                tau2 < th * th && th * th <= 0.5 * (q_big - 1.0),
            ),
            (
                "up_bound_tau".into(),
                tau2 < q_big - 1.0 && tau2 <= (1.0 / (p * eps)).powf(2.0 / (2.0 - p)),
            ),
            ("interior_minimum_nonneg".into(), m >= -1e-12),
            ("point_slack_nonneg".into(), point_ok),
        ];
        Ok(CertificateReport {
            t,
            tau2,
            params: *params,
            case: CertificateCase::SmallRadius,
            sigma_at_minus1: Some(sigma_m1),
            sigma_prime_at_minus1: Some(sigma_p_m1),
            sigma_second_at_minus1: Some(sigma_s_m1),
            xi: Some(xi),
            upsilon: Some(upsilon),
            delta_star: Some(delta_star),
            interior_minimum: Some(m),
            h_at_threshold: None,
            bound_checks,
        })
    } else {
        // large radius: ψ - 2Kp r dominates h(r), which is nonnegative past α
        let h_r = h_fn(r, big_k, p);
        let lhs_chain = psi - 2.0 * big_k * p * r;
        let square_bound = (1.0 + t) * (1.0 + t) >= 0.5 * t * t - 2.0;
        let power_chain = if r * r >= 4.0 {
            let lhs = ((1.0 + t) * (1.0 + t) + tau2).powf(p / 2.0);
            let rhs = (0.5 * r * r).powf(p / 2.0) - 2f64.powf(p / 2.0);
            lhs >= rhs - 1e-12 * (1.0 + rhs.abs())
        } else {
            false
        };
        let bound_checks = vec![
            ("radius_sq_at_least_4".into(), r * r >= 4.0),
            ("square_lower_bound".into(), square_bound),
            ("power_chain".into(), power_chain),
            ("h_nonneg_at_radius".into(), h_r >= 0.0),
            (
                "slack_dominates_h".into(),
                lhs_chain >= h_r - 1e-9 * (1.0 + h_r.abs()),
            ),
            ("point_slack_nonneg".into(), point_ok),
        ];
        Ok(CertificateReport {
            t,
            tau2,
            params: *params,
            case: CertificateCase::LargeRadius,
            sigma_at_minus1: None,
            sigma_prime_at_minus1: None,
            sigma_second_at_minus1: None,
            xi: None,
            upsilon: None,
            delta_star: None,
            interior_minimum: None,
            h_at_threshold: Some(h_r),
            bound_checks,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vartheta_collapse_and_value() {
        for p in [1.1, 1.5, 1.9] {
            let v = vartheta((p - 1.0) / 2.0, p);
            assert!(v.abs() < 1e-12, "p={p} gave {v}");
        }
        // sqrt(8.5) - 1
        let v = vartheta(0.125, 1.5);
        assert!((v - (8.5_f64.sqrt() - 1.0)).abs() < 1e-12);
        assert!((v - 1.91548).abs() < 1e-5);
    }

    #[test]
    fn vartheta_grows_as_eps_shrinks() {
        let p = 1.5;
        let mut last = vartheta(0.2, p);
        for eps in [0.1, 0.05, 0.01, 0.001] {
            let v = vartheta(eps, p);
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn alpha_const_follows_its_formula() {
        // (4·(2·0+2)+1)^{1/(1.5-1)} = 9² = 81
        assert!((alpha_const(0.0, 1.5) - 81.0).abs() < 1e-9);
        // K = 1: 17² = 289
        assert!((alpha_const(1.0, 1.5) - 289.0).abs() < 1e-9);
        for (k, p) in [(0.0, 1.1), (1.0, 1.5), (5.0, 1.9)] {
            assert!(alpha_const(k, p) >= 2.0);
        }
    }

    #[test]
    fn epsilon_max_puts_vartheta_at_or_above_alpha() {
        for &k in &[0.0, 1.0, 5.0] {
            for &p in &[1.1, 1.3, 1.5, 1.7, 1.9] {
                let e = epsilon_max(k, p);
                assert!(e > 0.0 && e < 0.5 * (p - 1.0));
                assert!(
                    vartheta(e, p) >= alpha_const(k, p),
                    "K={k} p={p}: vartheta {} < alpha {}",
                    vartheta(e, p),
                    alpha_const(k, p)
                );
            }
        }
    }

    #[test]
    fn epsilon_max_monotone_in_k_and_p() {
        // decreasing in K
        for &p in &[1.3, 1.5, 1.7] {
            let mut last = epsilon_max(0.0, p);
            for k in [1.0, 2.0, 5.0, 10.0] {
                let e = epsilon_max(k, p);
                assert!(e < last, "K={k} p={p}");
                last = e;
            }
        }
        // shrinking as p decreases toward 1
        for &k in &[0.0, 5.0] {
            let mut last = epsilon_max(k, 1.9);
            for p in [1.7, 1.5, 1.3, 1.1] {
                let e = epsilon_max(k, p);
                assert!(e < last, "K={k} p={p}");
                last = e;
            }
        }
    }

    #[test]
    fn h_nonneg_beyond_alpha() {
        for &k in &[0.0, 1.0, 5.0] {
            for &p in &[1.1, 1.3, 1.5, 1.7, 1.9] {
                let a = alpha_const(k, p);
                for mult in [1.0, 1.5, 4.0, 100.0] {
                    assert!(
                        h_fn(a * mult, k, p) >= 0.0,
                        "h < 0 at {} for K={k} p={p}",
                        a * mult
                    );
                }
            }
        }
    }

    #[test]
    fn psi_fn_examples() {
        assert_eq!(psi_fn(&[2.0, 1.0], &[0.0, 0.0], 1.5), 0.0);
        // a = 0: indicator kills the linear term
        let b = [0.3, -0.4];
        let expect = 0.5_f64.powf(1.5);
        assert!((psi_fn(&[0.0, 0.0], &b, 1.5) - expect).abs() < 1e-14);
        // d = 1: 2^1.5 - 1 - 1.5
        let v = psi_fn(&[1.0], &[1.0], 1.5);
        assert!((v - (2f64.powf(1.5) - 2.5)).abs() < 1e-14);
        assert!((v - 0.32843).abs() < 1e-5);
    }

    #[test]
    fn gamma_fn_examples() {
        let p = 1.5;
        assert_eq!(gamma_fn(&[0.0], &[3.0], 1.0, 0.01, p), 0.0);
        assert_eq!(gamma_fn(&[1.0], &[0.0], 1.0, 0.01, p), 0.0);
        // small-jump branch: vartheta(0.0146, 1.5) ≈ 204 so |b| < ϑ|a|
        let g = gamma_fn(&[1.0], &[1.0], 0.0, 0.0146, p);
        assert!((g - p * 0.0146).abs() < 1e-12);
        assert!(vartheta(0.0146, p) > 200.0);
    }

    #[test]
    fn reduce_examples() {
        let a = [1.0, 2.0];
        let b = [2.0, 4.0];
        let (t, tau2) = reduce(&a, &b).unwrap();
        assert!((t - 2.0).abs() < 1e-14);
        assert!(tau2.abs() < 1e-14);

        let (t, tau2) = reduce(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(t, 0.0);
        assert!((tau2 - 1.0).abs() < 1e-14);

        assert!(reduce(&[0.0], &[1.0]).is_err());
    }

    #[test]
    fn psi_reduced_examples() {
        assert_eq!(psi_reduced(0.0, 0.0, 1.5), 0.0);
        // at t = -1: τ^p - 1 + p
        for (tau2, p) in [(0.25, 1.5), (4.0, 1.3)] {
            let v = psi_reduced(-1.0, tau2, p);
            let expect = (tau2 as f64).powf(p / 2.0) - 1.0 + p;
            assert!((v - expect).abs() < 1e-12);
        }
        let via_reduce = psi_reduced(1.0, 0.0, 1.5);
        assert!((via_reduce - psi_fn(&[1.0], &[1.0], 1.5)).abs() < 1e-12);
    }

    #[test]
    fn check_inequality_origin_slack_zero() {
        let params = TechIneqParams::new(1.5, 0.0, None).unwrap();
        assert_eq!(params.slack(0.0, 0.0), 0.0);
    }

    #[test]
    fn default_grid_has_no_violations_at_epsilon_max() {
        let params = TechIneqParams::new(1.5, 1.0, None).unwrap();
        let rep = check_inequality(&params, &GridSpec::default()).unwrap();
        assert_eq!(rep.violation_count, 0, "min slack {}", rep.min_slack);
    }

    #[test]
    fn inadmissible_eps_with_large_k_produces_witnesses() {
        // diagnostic run, not a statement of the inequality: with eps at the
        // regime boundary the switching radius collapses to 0 and every point
        // lands in the large-radius branch, where K = 5 dominates near 0.
        let p = 1.5;
        let params = TechIneqParams::new(p, 5.0, Some((p - 1.0) / 2.0)).unwrap();
        let rep = check_inequality(&params, &GridSpec::default()).unwrap();
        assert!(rep.violation_count > 0);
        assert!(rep.min_slack < 0.0);
    }

    #[test]
    fn certificate_small_radius_case() {
        let params = TechIneqParams::new(1.5, 0.0, None).unwrap();
        let rep = proof_certificate(0.0, 0.01, &params).unwrap();
        assert_eq!(rep.case, CertificateCase::SmallRadius);
        assert!(rep.all_passed(), "failed checks: {:?}", rep.bound_checks);
        assert!(rep.interior_minimum.unwrap() >= -1e-12);
    }

    #[test]
    fn certificate_sigma_values_at_minus_one() {
        // σ(-1) = p - 1 - pε + τ^p (1 - pε τ^{2-p})
        let params = TechIneqParams::new(1.5, 0.0, Some(0.01)).unwrap();
        let rep = proof_certificate(-1.0, 0.0, &params).unwrap();
        let s = rep.sigma_at_minus1.unwrap();
        assert!((s - (1.5 - 1.0 - 1.5 * 0.01)).abs() < 1e-12);
        assert!(s > 0.0);
    }

    #[test]
    fn certificate_large_radius_case() {
        let params = TechIneqParams::new(1.5, 0.0, None).unwrap();
        let t = 2.0 * params.vartheta;
        let rep = proof_certificate(t, 0.0, &params).unwrap();
        assert_eq!(rep.case, CertificateCase::LargeRadius);
        assert!(rep.all_passed(), "failed checks: {:?}", rep.bound_checks);
        assert!(rep.h_at_threshold.unwrap() >= 0.0);
    }
}
