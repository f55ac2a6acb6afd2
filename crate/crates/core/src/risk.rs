//! Asymptotic misclassification quantities for block-additive plug-in
//! discriminants in the growing-dimension regime (block count growing
//! proportionally to the training size, ratio `rho`).
//!
//! Conventions. With `H` the limiting distribution of per-block
//! discriminative powers and `m` the block size, the limiting divergence is
//! `J = 2 rho * int gamma^2 dH`, the limiting mean and variance of the
//! weighted discriminant are
//!
//! ```text
//! E(w) = rho  * int gamma^2 [ int w(u)     chi(u; m+2, gamma^2) du ] dH
//! V(w) = 2rho * int          [ int u w(u)^2 chi(u; m,   gamma^2) du ] dH
//! ```
//!
//! and for unit weights these reduce to `E(1) = J/2`, `V(1) = J + 2 m rho`,
//! matching the central-limit variance of the unweighted discriminant. The
//! factor `2 rho` in `V` and the factor `rho` inside `J` are fixed by that
//! consistency requirement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    integrate_halfline, noncentral_chi2_log_pdf, std_normal_cdf, QuadratureConfig,
};
use crate::real::Real;

/// One atom of a discrete power distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerAtom<T> {
    pub gamma2: T,
    pub prob: T,
}

/// Discrete distribution of per-block discriminative powers.
///
/// Probabilities must be strictly positive and sum to one within 1e-12;
/// the `gamma2` values must be distinct and nonnegative. A point mass is
/// exactly one atom with probability one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPowerDistribution<T>", into = "RawPowerDistribution<T>")]
pub struct PowerDistribution<T: Real = f64> {
    atoms: Vec<PowerAtom<T>>,
}

#[derive(Serialize, Deserialize)]
struct RawPowerDistribution<T> {
    atoms: Vec<PowerAtom<T>>,
}

impl<T: Real> TryFrom<RawPowerDistribution<T>> for PowerDistribution<T> {
    type Error = Error;

    fn try_from(raw: RawPowerDistribution<T>) -> Result<Self> {
        PowerDistribution::new(raw.atoms)
    }
}

impl<T: Real> From<PowerDistribution<T>> for RawPowerDistribution<T> {
    fn from(h: PowerDistribution<T>) -> Self {
        RawPowerDistribution { atoms: h.atoms }
    }
}

impl<T: Real> PowerDistribution<T> {
    pub fn new(atoms: Vec<PowerAtom<T>>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Model(
                "power distribution needs at least one atom".into(),
            ));
        }
        let mut sum = T::zero();
        for atom in &atoms {
            if !atom.gamma2.is_finite() || atom.gamma2 < T::zero() {
                return Err(Error::Model(format!(
                    "atom gamma2 must be finite and >= 0, got {}",
                    atom.gamma2
                )));
            }
            if !atom.prob.is_finite() || atom.prob <= T::zero() {
                return Err(Error::Model(format!(
                    "atom probability must be finite and > 0, got {}",
                    atom.prob
                )));
            }
            sum = sum + atom.prob;
        }
        if (sum - T::one()).abs() > T::of(1e-12) {
            return Err(Error::Model(format!(
                "atom probabilities must sum to 1 within 1e-12, got {sum}"
            )));
        }
        for i in 0..atoms.len() {
            for j in (i + 1)..atoms.len() {
                if atoms[i].gamma2 == atoms[j].gamma2 {
                    return Err(Error::Model(format!(
                        "duplicate gamma2 value {}",
                        atoms[i].gamma2
                    )));
                }
            }
        }
        Ok(Self { atoms })
    }

    /// Single atom carrying all mass.
    pub fn point_mass(gamma2: T) -> Result<Self> {
        Self::new(vec![PowerAtom {
            gamma2,
            prob: T::one(),
        }])
    }

    pub fn atoms(&self) -> &[PowerAtom<T>] {
        &self.atoms
    }

    /// `Some(gamma2)` when the distribution is a point mass.
    pub fn as_point_mass(&self) -> Option<T> {
        (self.atoms.len() == 1).then(|| self.atoms[0].gamma2)
    }

    /// Mean discriminative power `int gamma^2 dH`.
    pub fn mean_power(&self) -> T {
        self.atoms
            .iter()
            .fold(T::zero(), |acc, a| acc + a.gamma2 * a.prob)
    }
}

/// Growing-dimension regime: block size, block-to-sample ratio limit and
/// the log prior ratio used as the decision threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regime<T: Real = f64> {
    block_size: u32,
    rho: T,
    log_prior_ratio: T,
}

impl<T: Real> Regime<T> {
    pub fn new(block_size: u32, rho: T, log_prior_ratio: T) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::Model("block size must be >= 1".into()));
        }
        if !rho.is_finite() || rho < T::zero() {
            return Err(Error::Model(format!(
                "rho must be finite and >= 0, got {rho}"
            )));
        }
        if !log_prior_ratio.is_finite() {
            return Err(Error::Model(format!(
                "log prior ratio must be finite, got {log_prior_ratio}"
            )));
        }
        Ok(Self {
            block_size,
            rho,
            log_prior_ratio,
        })
    }

    /// Equal priors, threshold zero.
    pub fn equal_priors(block_size: u32, rho: T) -> Result<Self> {
        Self::new(block_size, rho, T::zero())
    }

    pub fn block_size(&self) -> u32 {
        self.block_size
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn log_prior_ratio(&self) -> T {
        self.log_prior_ratio
    }

    /// Feature-to-sample ratio limit `c = m * rho`.
    pub fn dimension_ratio(&self) -> T {
        T::of(f64::from(self.block_size)) * self.rho
    }
}

fn quad_config<T: Real>() -> QuadratureConfig<T> {
    QuadratureConfig::default()
}

/// Limiting total divergence `J = 2 rho * int gamma^2 dH`.
pub fn limiting_divergence<T: Real>(h: &PowerDistribution<T>, rho: T) -> T {
    debug_assert!(rho >= T::zero());
    T::two() * rho * h.mean_power()
}

/// Misclassification limits of the unit-weight plug-in discriminant given
/// the total divergence `j`:
///
/// ```text
/// E1 = Phi(-(j - pi0) / (2 sqrt(j + 2 m rho)))
/// E2 = Phi(-(j + pi0) / (2 sqrt(j + 2 m rho)))
/// ```
pub fn unit_error_limits<T: Real>(j: T, regime: &Regime<T>) -> Result<(T, T)> {
    if !j.is_finite() || j < T::zero() {
        return Err(Error::Domain(format!(
            "total divergence must be finite and >= 0, got {j}"
        )));
    }
    let variance = j + T::two() * regime.dimension_ratio();
    if variance <= T::zero() {
        return Err(Error::Degenerate(
            "j + 2 m rho = 0: the discriminant has no limiting variance".into(),
        ));
    }
    let scale = T::two() * variance.sqrt();
    let pi0 = regime.log_prior_ratio();
    Ok((
        std_normal_cdf(-(j - pi0) / scale)?,
        std_normal_cdf(-(j + pi0) / scale)?,
    ))
}

fn pdf<T: Real>(u: T, dof: u32, gamma2: T) -> T {
    noncentral_chi2_log_pdf(u, dof, gamma2)
        .expect("quadrature abscissas stay inside the distribution domain")
        .exp()
}

/// Limiting mean `E(w)` of the weighted discriminant.
///
/// `w` must be nonnegative and bounded on (0, inf).
pub fn limiting_mean<T: Real>(
    w: impl Fn(T) -> T,
    regime: &Regime<T>,
    h: &PowerDistribution<T>,
) -> Result<T> {
    let cfg = quad_config();
    let m = regime.block_size();
    let mut acc = T::zero();
    for atom in h.atoms() {
        if atom.gamma2 == T::zero() {
            continue;
        }
        let integral = integrate_halfline(|u| w(u) * pdf(u, m + 2, atom.gamma2), &cfg)?;
        acc = acc + atom.prob * atom.gamma2 * integral;
    }
    Ok(regime.rho() * acc)
}

/// Limiting variance `V(w)` of the weighted discriminant.
pub fn limiting_variance<T: Real>(
    w: impl Fn(T) -> T,
    regime: &Regime<T>,
    h: &PowerDistribution<T>,
) -> Result<T> {
    let cfg = quad_config();
    let m = regime.block_size();
    let mut acc = T::zero();
    for atom in h.atoms() {
        let integral = integrate_halfline(
            |u| {
                let wu = w(u);
                u * wu * wu * pdf(u, m, atom.gamma2)
            },
            &cfg,
        )?;
        acc = acc + atom.prob * integral;
    }
    Ok(T::two() * regime.rho() * acc)
}

/// Misclassification limits of the discriminant weighted by `w`:
/// `E1 = Phi(-(E(w) - pi0)/sqrt(V(w)))`, `E2` with the opposite sign on
/// `pi0`. Fails when `V(w) = 0`.
pub fn weighted_error_limits<T: Real>(
    w: impl Fn(T) -> T,
    regime: &Regime<T>,
    h: &PowerDistribution<T>,
) -> Result<(T, T)> {
    let mean = limiting_mean(&w, regime, h)?;
    let variance = limiting_variance(&w, regime, h)?;
    if variance.is_nan() || variance <= T::zero() {
        return Err(Error::Degenerate(format!(
            "V(w) = {variance}: weight function is degenerate for this regime"
        )));
    }
    let scale = variance.sqrt();
    let pi0 = regime.log_prior_ratio();
    Ok((
        std_normal_cdf(-(mean - pi0) / scale)?,
        std_normal_cdf(-(mean + pi0) / scale)?,
    ))
}

/// Log of `sum_atoms prob * gamma2 * chi(u; m+2, gamma2)` (numerator mix)
/// and `sum_atoms prob * chi(u; m, gamma2)` (denominator mix).
///
/// Returns `None` for the numerator when no atom has positive power.
fn w0_log_mixtures<T: Real>(
    u: T,
    block_size: u32,
    h: &PowerDistribution<T>,
) -> Result<(Option<T>, T)> {
    let mut num_logs = Vec::with_capacity(h.atoms().len());
    let mut den_logs = Vec::with_capacity(h.atoms().len());
    for atom in h.atoms() {
        if atom.gamma2 > T::zero() {
            num_logs.push(
                (atom.prob * atom.gamma2).ln()
                    + noncentral_chi2_log_pdf(u, block_size + 2, atom.gamma2)?,
            );
        }
        den_logs.push(atom.prob.ln() + noncentral_chi2_log_pdf(u, block_size, atom.gamma2)?);
    }
    Ok((log_sum_exp(&num_logs), log_sum_exp(&den_logs).unwrap()))
}

fn log_sum_exp<T: Real>(logs: &[T]) -> Option<T> {
    let max = logs
        .iter()
        .copied()
        .fold(None::<T>, |acc, x| Some(acc.map_or(x, |a| a.max(x))))?;
    if !max.is_finite() {
        return Some(max);
    }
    let sum = logs.iter().fold(T::zero(), |acc, &x| acc + (x - max).exp());
    Some(max + sum.ln())
}

/// u -> 0+ limit of the weight ratio: only the leading mixture index
/// survives, leaving `[sum p gamma^2 e^{-gamma^2/2}] / (m sum p e^{-gamma^2/2})`.
pub(crate) fn optimal_weight_origin<T: Real>(block_size: u32, h: &PowerDistribution<T>) -> T {
    let m = T::of(f64::from(block_size));
    let mut num = T::zero();
    let mut den = T::zero();
    for atom in h.atoms() {
        let damp = (-atom.gamma2 * T::half()).exp();
        num = num + atom.prob * atom.gamma2 * damp;
        den = den + atom.prob * damp;
    }
    num / (m * den)
}

/// Large-u limit of the weight ratio, from the dominant Poisson index of
/// the largest-power atom: `gamma^2 / (m/2 + sqrt(m^2/4 + gamma^2 u))`.
fn w0_tail_limit<T: Real>(u: T, block_size: u32, h: &PowerDistribution<T>) -> T {
    let gamma2 = h.atoms().iter().map(|a| a.gamma2).fold(T::zero(), T::max);
    let m = T::of(f64::from(block_size));
    let half_m = m * T::half();
    gamma2 / (half_m + (half_m * half_m + gamma2 * u).sqrt())
}

/// Risk-optimal weight function
///
/// ```text
/// w0(u) = [sum prob gamma^2 chi(u; m+2, gamma^2)]
///       / (u [sum prob chi(u; m, gamma^2)])
/// ```
///
/// evaluated in log space. When both mixtures underflow past exp(-700)
/// the analytic large-u limit of the ratio is returned instead, keeping
/// plotting grids free of 0/0.
pub fn optimal_weight<T: Real>(u: T, block_size: u32, h: &PowerDistribution<T>) -> Result<T> {
    if !u.is_finite() || u <= T::zero() {
        return Err(Error::Domain(format!(
            "optimal weight requires u > 0, got {u}"
        )));
    }
    let (num, den_mix) = w0_log_mixtures(u, block_size, h)?;
    let Some(num) = num else {
        return Ok(T::zero());
    };
    let den = u.ln() + den_mix;
    let floor = T::of(-700.0);
    if num < floor && den < floor {
        return Ok(w0_tail_limit(u, block_size, h));
    }
    Ok((num - den).exp())
}

/// Minimum limiting risk under optimal weighting, assuming equal priors:
///
/// ```text
/// R(w0) = Phi(-1/2 sqrt(2 rho * int num(u)^2 / (u den(u)) du))
/// ```
///
/// with `num`/`den` the mixtures from [`optimal_weight`].
pub fn optimal_risk<T: Real>(regime: &Regime<T>, h: &PowerDistribution<T>) -> Result<T> {
    require_equal_priors(regime)?;
    if h.atoms().iter().all(|a| a.gamma2 == T::zero()) {
        return std_normal_cdf(T::zero());
    }
    let cfg = quad_config();
    let m = regime.block_size();
    let integral = integrate_halfline(
        |u| {
            let (num, den_mix) = w0_log_mixtures(u, m, h)
                .expect("quadrature abscissas stay inside the distribution domain");
            let num = num.expect("checked above: some atom has positive power");
            (T::two() * num - u.ln() - den_mix).exp()
        },
        &cfg,
    )?;
    let arg = (T::two() * regime.rho() * integral).sqrt() * T::half();
    std_normal_cdf(-arg)
}

/// Limiting risk of the unweighted discriminant under equal priors.
///
/// Point masses use the closed form
/// `Phi(-1/2 sqrt(2 rho gamma^4 / (gamma^2 + m)))`; general mixtures go
/// through [`weighted_error_limits`] with unit weights. The two routes
/// agree on point masses.
pub fn unit_risk<T: Real>(regime: &Regime<T>, h: &PowerDistribution<T>) -> Result<T> {
    require_equal_priors(regime)?;
    if regime.rho() == T::zero() {
        // no blocks relative to sample size: both routes degenerate to 1/2
        return std_normal_cdf(T::zero());
    }
    if let Some(gamma2) = h.as_point_mass() {
        let m = T::of(f64::from(regime.block_size()));
        let arg = (T::two() * regime.rho() * gamma2 * gamma2 / (gamma2 + m)).sqrt() * T::half();
        return std_normal_cdf(-arg);
    }
    let (e1, _) = weighted_error_limits(|_| T::one(), regime, h)?;
    Ok(e1)
}

fn require_equal_priors<T: Real>(regime: &Regime<T>) -> Result<()> {
    if regime.log_prior_ratio() != T::zero() {
        return Err(Error::Usage(
            "optimal and unit risk are defined under equal priors (log prior ratio 0); \
             use weighted_error_limits for unequal priors"
                .into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::noncentral_chi2_pdf;
    use approx::assert_abs_diff_eq;

    fn point(gamma2: f64) -> PowerDistribution<f64> {
        PowerDistribution::point_mass(gamma2).unwrap()
    }

    fn two_atoms() -> PowerDistribution<f64> {
        PowerDistribution::new(vec![
            PowerAtom {
                gamma2: 1.0,
                prob: 0.5,
            },
            PowerAtom {
                gamma2: 3.0,
                prob: 0.5,
            },
        ])
        .unwrap()
    }

    #[test]
    fn power_distribution_validation() {
        assert!(PowerDistribution::<f64>::new(vec![]).is_err());
        assert!(PowerDistribution::new(vec![PowerAtom {
            gamma2: -1.0,
            prob: 1.0
        }])
        .is_err());
        assert!(PowerDistribution::new(vec![PowerAtom {
            gamma2: 1.0,
            prob: 0.5
        }])
        .is_err());
        assert!(PowerDistribution::new(vec![
            PowerAtom {
                gamma2: 1.0,
                prob: 0.5
            },
            PowerAtom {
                gamma2: 1.0,
                prob: 0.5
            }
        ])
        .is_err());
        assert_eq!(point(1.8).as_point_mass(), Some(1.8));
        assert_eq!(two_atoms().as_point_mass(), None);
    }

    #[test]
    fn power_distribution_json_schema() {
        let h: PowerDistribution<f64> =
            serde_json::from_str(r#"{"atoms":[{"gamma2":1.8,"prob":1.0}]}"#).unwrap();
        assert_eq!(h, point(1.8));
        let text = serde_json::to_string(&h).unwrap();
        assert_eq!(text, r#"{"atoms":[{"gamma2":1.8,"prob":1.0}]}"#);
        // invalid distributions are rejected at parse time
        assert!(serde_json::from_str::<PowerDistribution<f64>>(
            r#"{"atoms":[{"gamma2":1.8,"prob":0.7}]}"#
        )
        .is_err());
    }

    #[test]
    fn regime_accessors() {
        let r = Regime::new(3, 2.0 / 9.0, 0.0_f64).unwrap();
        assert_abs_diff_eq!(r.dimension_ratio(), 2.0 / 3.0, epsilon = 1e-15);
        assert!(Regime::new(0, 0.1, 0.0_f64).is_err());
        assert!(Regime::new(3, -0.1, 0.0_f64).is_err());
    }

    #[test]
    fn limiting_divergence_values() {
        assert_abs_diff_eq!(
            limiting_divergence(&point(1.8), 2.0 / 9.0),
            0.8,
            epsilon = 1e-14
        );
        assert_eq!(limiting_divergence(&point(1.8), 0.0), 0.0);
        assert_abs_diff_eq!(limiting_divergence(&two_atoms(), 0.5), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn unit_error_limits_values() {
        let regime = Regime::equal_priors(3, 2.0 / 9.0).unwrap();
        let (e1, e2) = unit_error_limits(0.8, &regime).unwrap();
        // Phi(-0.8 / (2 sqrt(32/15))), frozen from the normal-CDF oracle
        assert_abs_diff_eq!(e1, 0.392_095_614_700_809_5, epsilon = 1e-12);
        assert_abs_diff_eq!(e2, e1, epsilon = 1e-15);

        // rho = 0 reduces to the known-densities limit Phi(-sqrt(J)/2)
        let regime0 = Regime::equal_priors(5, 0.0).unwrap();
        let (e1, e2) = unit_error_limits(4.0, &regime0).unwrap();
        assert_abs_diff_eq!(e1, 0.158_655_253_931_457_07, epsilon = 1e-13);
        assert_abs_diff_eq!(e2, e1, epsilon = 1e-15);

        // indistinguishable classes
        let (e1, e2) = unit_error_limits(0.0, &regime).unwrap();
        assert_abs_diff_eq!(e1, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(e2, 0.5, epsilon = 1e-14);

        assert!(unit_error_limits(0.0, &regime0).is_err());
        assert!(unit_error_limits(-0.1, &regime).is_err());
    }

    #[test]
    fn limiting_mean_values() {
        let regime = Regime::equal_priors(3, 2.0 / 9.0).unwrap();
        let e = limiting_mean(|_| 1.0, &regime, &point(1.8)).unwrap();
        assert_abs_diff_eq!(e, 2.0 / 9.0 * 1.8, epsilon = 1e-10);

        let e = limiting_mean(|_| 0.0, &regime, &point(1.8)).unwrap();
        assert_eq!(e, 0.0);

        let regime_half = Regime::equal_priors(3, 0.5).unwrap();
        let e = limiting_mean(|_| 1.0, &regime_half, &two_atoms()).unwrap();
        assert_abs_diff_eq!(e, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn limiting_variance_values() {
        let regime = Regime::equal_priors(3, 2.0 / 9.0).unwrap();
        let v = limiting_variance(|_| 1.0, &regime, &point(1.8)).unwrap();
        assert_abs_diff_eq!(v, 32.0 / 15.0, epsilon = 1e-10);
        let v = limiting_variance(|_| 0.0, &regime, &point(1.8)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn unit_moments_match_divergence_form() {
        // E(1) = J/2 and V(1) = J + 2 m rho for point masses
        for &(m, gamma2, rho) in &[(1u32, 0.5, 1.0 / 9.0), (3, 1.8, 2.0 / 9.0), (6, 5.0, 0.5)] {
            let regime = Regime::equal_priors(m, rho).unwrap();
            let h = point(gamma2);
            let j = limiting_divergence(&h, rho);
            let e = limiting_mean(|_| 1.0, &regime, &h).unwrap();
            let v = limiting_variance(|_| 1.0, &regime, &h).unwrap();
            assert_abs_diff_eq!(e, j / 2.0, epsilon = 1e-10);
            assert_abs_diff_eq!(v, j + 2.0 * f64::from(m) * rho, epsilon = 1e-10);
        }
    }

    #[test]
    fn weighted_limits_consistency() {
        let regime = Regime::equal_priors(3, 2.0 / 9.0).unwrap();
        let (e1, e2) = weighted_error_limits(|_| 1.0, &regime, &point(1.8)).unwrap();
        let (t1, _) = unit_error_limits(0.8, &regime).unwrap();
        assert_abs_diff_eq!(e1, t1, epsilon = 1e-9);
        assert_abs_diff_eq!(e1, e2, epsilon = 1e-14);

        // a power-free mixture forces E(w) = 0 and risk 1/2
        let (e1, e2) = weighted_error_limits(|_| 1.0, &regime, &point(0.0)).unwrap();
        assert_abs_diff_eq!(e1, 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(e2, 0.5, epsilon = 1e-10);

        // degenerate weight
        assert!(weighted_error_limits(|_| 0.0, &regime, &point(1.8)).is_err());
    }

    #[test]
    fn weighted_limits_with_unequal_priors() {
        let pi0 = (0.8_f64 / 0.2).ln();
        let regime = Regime::new(3, 2.0 / 9.0, pi0).unwrap();
        let (e1, e2) = weighted_error_limits(|_| 1.0, &regime, &point(1.8)).unwrap();
        assert!(e1 > e2, "threshold shift favors class 2");
    }

    #[test]
    fn optimal_weight_zero_power() {
        for &u in &[0.1, 1.0, 10.0] {
            assert_eq!(optimal_weight(u, 3, &point(0.0)).unwrap(), 0.0);
        }
    }

    #[test]
    fn optimal_weight_matches_pdf_ratio() {
        // frozen from an independent density-ratio evaluation
        let frozen = 0.407_475_812_239_358;
        let w = optimal_weight(4.8_f64, 3, &point(1.8)).unwrap();
        assert_abs_diff_eq!(w, frozen, epsilon = 1e-10);

        // plain-space ratio for points across the support
        for &u in &[0.3, 1.1, 4.8, 9.5, 30.0] {
            let direct = 1.8 * noncentral_chi2_pdf(u, 5, 1.8).unwrap()
                / (u * noncentral_chi2_pdf(u, 3, 1.8).unwrap());
            assert_abs_diff_eq!(
                optimal_weight(u, 3, &point(1.8)).unwrap(),
                direct,
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn optimal_weight_bounded_and_continuous() {
        let h = point(1.8);
        let bound = 1.8 / 3.0 + 1e-12;
        let mut prev: Option<f64> = None;
        for i in 0..=600 {
            let u = 1e-3 * (1e6_f64).powf(i as f64 / 600.0);
            let w = optimal_weight(u, 3, &h).unwrap();
            assert!(w.is_finite() && w >= 0.0 && w <= bound, "w0({u}) = {w}");
            if let Some(p) = prev {
                assert!((w - p).abs() < 0.05, "jump at u = {u}");
            }
            prev = Some(w);
        }
    }

    #[test]
    fn optimal_weight_tail_fallback_consistent() {
        let h = point(1.8);
        // log densities near -700: both evaluation routes should agree
        let log_path = {
            let num = 1.8_f64.ln() + noncentral_chi2_log_pdf(2000.0, 5, 1.8).unwrap();
            let den = 2000.0_f64.ln() + noncentral_chi2_log_pdf(2000.0, 3, 1.8).unwrap();
            (num - den).exp()
        };
        let fallback = w0_tail_limit(2000.0, 3, &h);
        assert!(
            (fallback - log_path).abs() / log_path < 0.05,
            "fallback {fallback} vs log path {log_path}"
        );
        // deep tail goes through the fallback and stays finite
        let w = optimal_weight(5000.0, 3, &h).unwrap();
        assert!(w.is_finite() && w > 0.0);
    }

    #[test]
    fn optimal_weight_rejects_nonpositive_u() {
        assert!(optimal_weight(0.0, 3, &point(1.8)).is_err());
        assert!(optimal_weight(-1.0, 3, &point(1.8)).is_err());
    }

    #[test]
    fn optimal_risk_values() {
        let regime = Regime::equal_priors(3, 2.0 / 9.0).unwrap();
        assert_abs_diff_eq!(
            optimal_risk(&regime, &point(0.0)).unwrap(),
            0.5,
            epsilon = 1e-14
        );

        let regime0 = Regime::equal_priors(3, 0.0).unwrap();
        assert_abs_diff_eq!(
            optimal_risk(&regime0, &point(1.8)).unwrap(),
            0.5,
            epsilon = 1e-14
        );

        // frozen from an independent adaptive-quadrature evaluation
        let r = optimal_risk(&regime, &point(1.8)).unwrap();
        assert_abs_diff_eq!(r, 0.390_397_084_543_856, epsilon = 1e-9);
        assert!(r < unit_risk(&regime, &point(1.8)).unwrap());
    }

    #[test]
    fn unit_risk_values() {
        let regime = Regime::equal_priors(3, 2.0 / 9.0).unwrap();
        // closed form Phi(-sqrt(0.3)/2)
        assert_abs_diff_eq!(
            unit_risk(&regime, &point(1.8)).unwrap(),
            0.392_095_614_700_809_5,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            unit_risk(&regime, &point(0.0)).unwrap(),
            0.5,
            epsilon = 1e-14
        );
        let regime0 = Regime::equal_priors(3, 0.0).unwrap();
        assert_abs_diff_eq!(
            unit_risk(&regime0, &point(1.8)).unwrap(),
            0.5,
            epsilon = 1e-14
        );
    }

    #[test]
    fn unit_risk_routes_agree_on_point_mass() {
        let regime = Regime::equal_priors(3, 2.0 / 9.0).unwrap();
        let closed = unit_risk(&regime, &point(1.8)).unwrap();
        let (e1, _) = weighted_error_limits(|_| 1.0, &regime, &point(1.8)).unwrap();
        assert_abs_diff_eq!(closed, e1, epsilon = 1e-10);
    }

    #[test]
    fn equal_prior_guard() {
        let regime = Regime::new(3, 2.0 / 9.0, 0.3_f64).unwrap();
        assert!(optimal_risk(&regime, &point(1.8)).is_err());
        assert!(unit_risk(&regime, &point(1.8)).is_err());
    }

    #[test]
    fn optimal_risk_mixture() {
        // mixtures run through the same machinery; sanity: dominated by unit
        let regime = Regime::equal_priors(3, 0.25).unwrap();
        let h = two_atoms();
        let rw0 = optimal_risk(&regime, &h).unwrap();
        let r1 = unit_risk(&regime, &h).unwrap();
        assert!(rw0 < r1, "R(w0) = {rw0} should beat R(1) = {r1}");
        // and the w0-through-moments route reproduces it
        let w = |u: f64| optimal_weight(u, 3, &h).unwrap();
        let (e1, _) = weighted_error_limits(w, &regime, &h).unwrap();
        assert_abs_diff_eq!(rw0, e1, epsilon = 1e-6);
    }
}
