//! Jump-mark measures and their moment integrals.
//!
//! Two families are supported: finite atomic measures on `R^m \ {0}` and the
//! symmetric power law `μ(du) = |u|^{-1-alpha} du` on `0 < |u| <= cutoff`.
//! Power-law integrals are evaluated by antiderivative, never by quadrature,
//! and a divergent integral is the value `f64::INFINITY`, not an error.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One atom of a finite jump measure: mark `u` with weight `w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    /// Mark position in `R^m`, never the origin.
    pub u: Vec<f64>,
    /// Strictly positive weight.
    pub w: f64,
}

/// A sigma-finite jump-mark measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum LevyMeasure {
    /// Finite list of weighted atoms.
    Atomic { atoms: Vec<Atom> },
    /// `μ(du) = |u|^{-1-alpha} du` on `0 < |u| <= cutoff`, symmetric about 0.
    /// `cutoff = None` means no truncation of large marks.
    #[serde(rename = "powerlaw")]
    SymmetricPowerLaw {
        alpha: f64,
        #[serde(default)]
        cutoff: Option<f64>,
    },
}

/// Which part of the mark space a moment integral runs over, split at `|u| = delta`.
/// Marks exactly on the threshold belong to `Below`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Below(f64),
    Above(f64),
    All,
}

/// Outcome of [`LevyMeasure::validate`].
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    /// True when `∫ (1 ∧ |u|^2) μ(du) < ∞`.
    pub ok: bool,
    /// Value of the integrability integral; `inf` when divergent.
    pub integral: f64,
    /// Human-readable divergence reason when `ok` is false.
    pub reason: Option<String>,
}

impl LevyMeasure {
    /// Single atom at scalar mark `u` with weight `w`.
    pub fn single_atom(u: f64, w: f64) -> Self {
        LevyMeasure::Atomic {
            atoms: vec![Atom { u: vec![u], w }],
        }
    }

    /// Symmetric power law without large-mark truncation.
    pub fn power_law(alpha: f64) -> Self {
        LevyMeasure::SymmetricPowerLaw {
            alpha,
            cutoff: None,
        }
    }

    /// Dimension `m` of the mark space.
    pub fn dim(&self) -> usize {
        match self {
            LevyMeasure::Atomic { atoms } => atoms.first().map_or(1, |a| a.u.len()),
            LevyMeasure::SymmetricPowerLaw { .. } => 1,
        }
    }

    pub fn atom_count(&self) -> usize {
        match self {
            LevyMeasure::Atomic { atoms } => atoms.len(),
            LevyMeasure::SymmetricPowerLaw { .. } => 0,
        }
    }

    /// Cutoff radius; `inf` for an untruncated power law or an atomic measure.
    pub fn cutoff_radius(&self) -> f64 {
        match self {
            LevyMeasure::Atomic { .. } => f64::INFINITY,
            LevyMeasure::SymmetricPowerLaw { cutoff, .. } => cutoff.unwrap_or(f64::INFINITY),
        }
    }

    /// Check structural validity (marks nonzero, weights positive, atoms
    /// distinct, power-law parameters in range). Malformed data is an error,
    /// distinct from an integrability failure which is reported in the
    /// [`ValidationReport`].
    pub fn check_structure(&self) -> Result<()> {
        match self {
            LevyMeasure::Atomic { atoms } => {
                let dim = self.dim();
                for (i, a) in atoms.iter().enumerate() {
                    if a.u.len() != dim {
                        return Err(Error::InvalidMeasure(format!(
                            "atom {i} has dimension {} but atom 0 has {dim}",
                            a.u.len()
                        )));
                    }
                    if !(a.w > 0.0) || !a.w.is_finite() {
                        return Err(Error::InvalidMeasure(format!(
                            "atom {i} has non-positive weight {}",
                            a.w
                        )));
                    }
                    let norm = euclid(&a.u);
                    if norm == 0.0 || !norm.is_finite() {
                        return Err(Error::InvalidMeasure(format!(
                            "atom {i} mark must be nonzero and finite"
                        )));
                    }
                    for b in atoms.iter().take(i) {
                        if a.u == b.u {
                            return Err(Error::InvalidMeasure(format!(
                                "duplicate atom at {:?}",
                                a.u
                            )));
                        }
                    }
                }
                Ok(())
            }
            LevyMeasure::SymmetricPowerLaw { alpha, cutoff } => {
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return Err(Error::InvalidMeasure(format!(
                        "power-law alpha must be positive and finite, got {alpha}"
                    )));
                }
                if let Some(r) = cutoff {
                    if !(*r > 0.0) {
                        return Err(Error::InvalidMeasure(format!(
                            "power-law cutoff must be positive, got {r}"
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// Validate the measure: structure first, then the integrability
    /// condition `∫ (1 ∧ |u|^2) μ(du) < ∞`.
    pub fn validate(&self) -> Result<ValidationReport> {
        self.check_structure()?;
        let integral = self.moment_integral(2.0, Region::Below(1.0))
            + self.moment_integral(0.0, Region::Above(1.0));
        if integral.is_finite() {
            Ok(ValidationReport {
                ok: true,
                integral,
                reason: None,
            })
        } else {
            let reason = match self {
                LevyMeasure::SymmetricPowerLaw { alpha, cutoff } => {
                    if *alpha >= 2.0 {
                        format!("small-jump integral of |u|^2 diverges for alpha = {alpha} >= 2")
                    } else {
                        format!(
                            "integrability integral diverges (alpha={alpha}, cutoff={cutoff:?})"
                        )
                    }
                }
                LevyMeasure::Atomic { .. } => "non-finite atomic data".to_string(),
            };
            Ok(ValidationReport {
                ok: false,
                integral,
                reason: Some(reason),
            })
        }
    }

    /// `∫_{region} |u|^q μ(du)` with `q >= 0`; exact for atomic measures,
    /// closed-form antiderivatives for the power law. Divergence is `inf`.
    pub fn moment_integral(&self, q: f64, region: Region) -> f64 {
        match self {
            LevyMeasure::Atomic { atoms } => {
                let mut sum = 0.0;
                for a in atoms {
                    let r = euclid(&a.u);
                    let inside = match region {
                        Region::Below(d) => r <= d,
                        Region::Above(d) => r > d,
                        Region::All => true,
                    };
                    if inside {
                        sum += a.w * r.powf(q);
                    }
                }
                sum
            }
            LevyMeasure::SymmetricPowerLaw { alpha, cutoff } => {
                let hi = cutoff.unwrap_or(f64::INFINITY);
                let (lo, up) = match region {
                    Region::Below(d) => (0.0, d.min(hi)),
                    Region::Above(d) => (d.min(hi), hi),
                    Region::All => (0.0, hi),
                };
                power_law_interval_moment(*alpha, q, lo, up)
            }
        }
    }

    /// Total mass of the marks with `|u| >= eta` (used by samplers).
    pub fn truncated_mass(&self, eta: f64) -> f64 {
        match self {
            LevyMeasure::Atomic { atoms } => atoms
                .iter()
                .filter(|a| euclid(&a.u) >= eta)
                .map(|a| a.w)
                .sum(),
            LevyMeasure::SymmetricPowerLaw { .. } => {
                // Region::Above uses a strict inequality; mass of the single
                // radius |u| = eta is zero for a density, so this is exact.
                self.moment_integral(0.0, Region::Above(eta))
            }
        }
    }
}

/// `2 ∫_lo^up u^{q-1-alpha} du`, the two-sided power-law mass of `|u|^q`
/// over `lo < |u| <= up`. Divergent endpoints yield `inf`.
pub(crate) fn power_law_interval_moment(alpha: f64, q: f64, lo: f64, up: f64) -> f64 {
    if !(up > lo) {
        return 0.0;
    }
    let e = q - alpha; // antiderivative exponent: u^e / e
    if e == 0.0 {
        // logarithmic antiderivative
        return if lo == 0.0 || up.is_infinite() {
            f64::INFINITY
        } else {
            2.0 * (up / lo).ln()
        };
    }
    let upper = if up.is_infinite() {
        if e > 0.0 {
            return f64::INFINITY;
        }
        0.0
    } else {
        up.powf(e)
    };
    let lower = if lo == 0.0 {
        if e < 0.0 {
            return f64::INFINITY;
        }
        0.0
    } else {
        lo.powf(e)
    };
    2.0 * (upper - lower) / e
}

pub(crate) fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_atom_is_valid_with_integral_one() {
        let m = LevyMeasure::single_atom(1.0, 1.0);
        let rep = m.validate().unwrap();
        assert!(rep.ok);
        assert_eq!(rep.integral, 1.0);
    }

    #[test]
    fn stable_validation_integral_matches_calculus() {
        // 2∫_0^1 u^{-0.5} du + 2∫_1^∞ u^{-2.5} du = 4 + 4/3
        let m = LevyMeasure::power_law(1.5);
        let rep = m.validate().unwrap();
        assert!(rep.ok);
        assert!((rep.integral - 16.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn supercritical_alpha_diverges_without_being_an_error() {
        let m = LevyMeasure::power_law(2.5);
        let rep = m.validate().unwrap();
        assert!(!rep.ok);
        assert!(rep.integral.is_infinite());
        assert!(rep.reason.unwrap().contains("alpha"));
    }

    #[test]
    fn malformed_atoms_are_input_errors_not_divergence() {
        let zero_mark = LevyMeasure::single_atom(0.0, 1.0);
        assert!(matches!(
            zero_mark.validate(),
            Err(Error::InvalidMeasure(_))
        ));
        let bad_weight = LevyMeasure::single_atom(1.0, -2.0);
        assert!(matches!(
            bad_weight.validate(),
            Err(Error::InvalidMeasure(_))
        ));
        let dup = LevyMeasure::Atomic {
            atoms: vec![
                Atom {
                    u: vec![1.0],
                    w: 1.0,
                },
                Atom {
                    u: vec![1.0],
                    w: 2.0,
                },
            ],
        };
        assert!(matches!(dup.validate(), Err(Error::InvalidMeasure(_))));
    }

    #[test]
    fn atom_on_the_threshold_counts_as_below() {
        let m = LevyMeasure::single_atom(1.0, 1.0);
        assert_eq!(m.moment_integral(2.0, Region::Below(1.0)), 1.0);
        assert_eq!(m.moment_integral(2.0, Region::Above(1.0)), 0.0);
        assert_eq!(m.moment_integral(2.0, Region::Below(2.0)), 1.0);
    }

    #[test]
    fn stable_split_moments_match_antiderivatives() {
        let m = LevyMeasure::power_law(1.5);
        // 2∫_0^1 u^{2-1-1.5} du = 2/(0.5) = 4
        assert!((m.moment_integral(2.0, Region::Below(1.0)) - 4.0).abs() < 1e-12);
        // 2∫_1^∞ u^{1-1-1.5} du = 2/(0.5) = 4
        assert!((m.moment_integral(1.0, Region::Above(1.0)) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn power_law_finiteness_boundaries() {
        let m = LevyMeasure::power_law(1.5);
        // above 1: finite iff q < alpha
        assert!(m.moment_integral(1.4, Region::Above(1.0)).is_finite());
        assert!(m.moment_integral(1.5, Region::Above(1.0)).is_infinite());
        assert!(m.moment_integral(1.6, Region::Above(1.0)).is_infinite());
        // below 1: finite iff q > alpha
        assert!(m.moment_integral(1.6, Region::Below(1.0)).is_finite());
        assert!(m.moment_integral(1.5, Region::Below(1.0)).is_infinite());
        assert!(m.moment_integral(1.4, Region::Below(1.0)).is_infinite());
    }

    #[test]
    fn below_plus_above_equals_all_when_finite() {
        let m = LevyMeasure::SymmetricPowerLaw {
            alpha: 1.5,
            cutoff: Some(3.0),
        };
        for q in [1.6_f64, 2.0, 2.5] {
            for delta in [0.3_f64, 1.0, 2.9, 3.5] {
                let below = m.moment_integral(q, Region::Below(delta));
                let above = m.moment_integral(q, Region::Above(delta));
                let all = m.moment_integral(q, Region::All);
                assert!(
                    ((below + above) - all).abs() <= 1e-10 * all.max(1.0),
                    "q={q} delta={delta}"
                );
            }
        }
    }

    #[test]
    fn truncated_mass_closed_form() {
        let m = LevyMeasure::power_law(1.5);
        // 2 * eta^{-1.5} / 1.5 at eta = 0.1
        let lambda = m.truncated_mass(0.1);
        assert!((lambda - 2.0 * 0.1_f64.powf(-1.5) / 1.5).abs() < 1e-9);
    }

    #[test]
    fn json_round_trip_matches_schema() {
        let m = LevyMeasure::Atomic {
            atoms: vec![Atom {
                u: vec![1.0, -2.0],
                w: 0.5,
            }],
        };
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"type\":\"atomic\""));
        assert!(s.contains("\"u\":[1.0,-2.0]"));
        let back: LevyMeasure = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);

        let p: LevyMeasure = serde_json::from_str(r#"{"type":"powerlaw","alpha":1.5}"#).unwrap();
        assert_eq!(p, LevyMeasure::power_law(1.5));
        let pc: LevyMeasure =
            serde_json::from_str(r#"{"type":"powerlaw","alpha":1.5,"cutoff":2.0}"#).unwrap();
        assert_eq!(pc.cutoff_radius(), 2.0);
    }
}
