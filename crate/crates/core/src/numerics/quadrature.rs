//! Adaptive quadrature over finite intervals and the half line (0, inf).
//!
//! Panels use the 15-point Gauss-Kronrod rule; all abscissas are interior,
//! so integrands with an integrable endpoint singularity or a removable
//! zero at u = 0 are never evaluated there. The half-line integral grows
//! its truncation point by doubling until the last increment falls below
//! both the absolute tolerance and the tail-mass cutoff.

use crate::error::{Error, Result};
use crate::real::Real;

/// Kronrod abscissas for the 15-point rule (positive half, plus center).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_33,
    0.949_107_912_342_758_524_526_189_684_047_85,
    0.864_864_423_359_769_072_789_712_788_640_93,
    0.741_531_185_599_394_439_863_864_773_280_79,
    0.586_087_235_467_691_130_294_144_838_258_73,
    0.405_845_151_377_397_166_906_606_412_076_96,
    0.207_784_955_007_898_467_600_689_403_773_24,
    0.0,
];

/// 7-point Gauss weights embedded in the rule.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_08,
    0.279_705_391_489_276_667_901_467_771_423_78,
    0.381_830_050_505_118_944_950_369_775_488_97,
    0.417_959_183_673_469_387_755_102_040_816_33,
];

/// 15-point Kronrod weights.
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_97,
    0.063_092_092_629_978_553_290_700_663_189_2,
    0.104_790_010_322_250_183_839_876_322_541_52,
    0.140_653_259_715_525_918_745_189_590_510_24,
    0.169_004_726_639_267_902_826_583_426_598_55,
    0.190_350_578_064_785_409_913_256_402_421_01,
    0.204_432_940_075_298_892_414_161_999_234_65,
    0.209_482_141_084_727_828_012_999_174_891_71,
];

/// Tolerances and refinement limits for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig<T> {
    abs_tol: T,
    rel_tol: T,
    tail_mass_cutoff: T,
    max_refinements: u32,
}

impl<T: Real> QuadratureConfig<T> {
    /// All tolerances must be strictly positive and at most 1e-6.
    pub fn new(abs_tol: T, rel_tol: T, tail_mass_cutoff: T, max_refinements: u32) -> Result<Self> {
        let cap = T::of(1e-6);
        for (name, v) in [
            ("abs_tol", abs_tol),
            ("rel_tol", rel_tol),
            ("tail_mass_cutoff", tail_mass_cutoff),
        ] {
            if !v.is_finite() || v <= T::zero() || v > cap {
                return Err(Error::Domain(format!(
                    "{name} must be in (0, 1e-6], got {v}"
                )));
            }
        }
        if max_refinements == 0 {
            return Err(Error::Domain("max_refinements must be >= 1".into()));
        }
        Ok(Self {
            abs_tol,
            rel_tol,
            tail_mass_cutoff,
            max_refinements,
        })
    }

    pub fn abs_tol(&self) -> T {
        self.abs_tol
    }

    pub fn rel_tol(&self) -> T {
        self.rel_tol
    }

    pub fn tail_mass_cutoff(&self) -> T {
        self.tail_mass_cutoff
    }

    pub fn max_refinements(&self) -> u32 {
        self.max_refinements
    }
}

impl<T: Real> Default for QuadratureConfig<T> {
    fn default() -> Self {
        Self {
            abs_tol: T::of(1e-11),
            rel_tol: T::of(1e-11),
            tail_mass_cutoff: T::of(1e-12),
            max_refinements: 48,
        }
    }
}

/// One Gauss-Kronrod panel: returns the Kronrod estimate and the
/// difference from the embedded Gauss estimate as an error proxy.
fn gk15<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let center = (a + b) * T::half();
    let half_len = (b - a) * T::half();
    let f_center = f(center);

    let mut kronrod = f_center * T::of(WGK[7]);
    let mut gauss = T::zero();
    for j in 0..7 {
        let offset = half_len * T::of(XGK[j]);
        let fsum = f(center - offset) + f(center + offset);
        kronrod = kronrod + T::of(WGK[j]) * fsum;
        if j % 2 == 1 {
            gauss = gauss + T::of(WG[j / 2]) * fsum;
        }
    }
    gauss = gauss + f_center * T::of(WG[3]);
    (kronrod * half_len, ((kronrod - gauss) * half_len).abs())
}

struct Panel<T> {
    err_key: f64,
    a: T,
    b: T,
    estimate: T,
    err: T,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.err_key.total_cmp(&other.err_key) == std::cmp::Ordering::Equal
    }
}

impl<T> Eq for Panel<T> {}

impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl<T> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err_key.total_cmp(&other.err_key)
    }
}

/// Globally adaptive integration over [a, b]: the panel with the largest
/// error estimate is bisected until the summed error meets `tol`. Global
/// refinement keeps endpoint singularities from starving the budget the
/// way per-panel tolerance halving would.
fn adaptive_interval<T: Real, F: Fn(T) -> T>(
    f: &F,
    a: T,
    b: T,
    tol: T,
    split_budget: u32,
) -> Result<T> {
    let panel = |a: T, b: T| -> Panel<T> {
        let (estimate, err) = gk15(f, a, b);
        Panel {
            err_key: err.to_f64().unwrap_or(f64::INFINITY),
            a,
            b,
            estimate,
            err,
        }
    };

    let first = panel(a, b);
    let mut total_est = first.estimate;
    let mut total_err = first.err;
    let mut heap = std::collections::BinaryHeap::new();
    heap.push(first);

    let mut previous = total_est;
    let mut splits = 0;
    while total_err > tol && splits < split_budget {
        let worst = heap.pop().expect("heap never empties");
        // representability floor; panels touching 0 may split arbitrarily
        // deep, which integrable endpoint singularities need
        if worst.b - worst.a <= T::epsilon() * (worst.a.abs() + worst.b.abs()) {
            heap.push(worst);
            break;
        }
        let mid = (worst.a + worst.b) * T::half();
        let left = panel(worst.a, mid);
        let right = panel(mid, worst.b);
        previous = total_est;
        total_est = total_est - worst.estimate + left.estimate + right.estimate;
        total_err = (total_err - worst.err + left.err + right.err).max(T::zero());
        heap.push(left);
        heap.push(right);
        splits += 1;
    }

    if total_err > tol {
        return Err(Error::Convergence {
            refinements: splits,
            previous: previous.to_f64().unwrap_or(f64::NAN),
            last: total_est.to_f64().unwrap_or(f64::NAN),
        });
    }
    // fresh left-to-right summation, free of accumulated update drift
    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.a.partial_cmp(&q.a).expect("finite endpoints"));
    Ok(panels
        .into_iter()
        .fold(T::zero(), |acc, p| acc + p.estimate))
}

/// Integral of `f` over the finite interval [a, b] to roughly `abs_tol`.
pub fn integrate_interval<T: Real>(
    f: impl Fn(T) -> T,
    a: T,
    b: T,
    config: &QuadratureConfig<T>,
) -> Result<T> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::Domain(format!(
            "integration interval [{a}, {b}] is invalid"
        )));
    }
    adaptive_interval(&f, a, b, config.abs_tol, split_budget(config))
}

/// Bisections allowed per integration window, scaled off `max_refinements`.
fn split_budget<T: Real>(config: &QuadratureConfig<T>) -> u32 {
    config.max_refinements.saturating_mul(64)
}

/// Integral of `f` over (0, inf).
///
/// The integrand must be finite and absolutely integrable; its mass must
/// not lie entirely beyond the first few doubling windows. The result is
/// accurate to about `max(abs_tol, rel_tol * |result|)`.
pub fn integrate_halfline<T: Real>(f: impl Fn(T) -> T, config: &QuadratureConfig<T>) -> Result<T> {
    let budget = split_budget(config);
    let mut upper = T::of(16.0);
    let mut total = adaptive_interval(&f, T::zero(), upper, panel_tol(config, 0), budget)?;
    let mut previous = total;

    for round in 0..config.max_refinements {
        let next = upper * T::two();
        let increment = adaptive_interval(&f, upper, next, panel_tol(config, round + 1), budget)?;
        previous = total;
        total = total + increment;
        upper = next;

        let threshold = config
            .abs_tol
            .max(config.rel_tol * total.abs())
            .min(config.tail_mass_cutoff);
        // Two windows minimum, so a slow start cannot fake convergence.
        if round >= 1 && increment.abs() < threshold {
            return Ok(total);
        }
    }
    Err(Error::Convergence {
        refinements: config.max_refinements,
        previous: previous.to_f64().unwrap_or(f64::NAN),
        last: total.to_f64().unwrap_or(f64::NAN),
    })
}

/// Per-window panel tolerance: geometric decay keeps the summed panel
/// error below `abs_tol`, floored so distant windows stay reachable.
fn panel_tol<T: Real>(config: &QuadratureConfig<T>, window: u32) -> T {
    let decay = T::of(0.25) * T::of(0.5).powi(window.min(40) as i32);
    (config.abs_tol * decay).max(config.tail_mass_cutoff * T::of(0.25))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::noncentral::noncentral_chi2_pdf;
    use approx::assert_abs_diff_eq;

    fn config() -> QuadratureConfig<f64> {
        QuadratureConfig::default()
    }

    #[test]
    fn config_validation() {
        assert!(QuadratureConfig::new(1e-8_f64, 1e-8, 1e-10, 32).is_ok());
        assert!(QuadratureConfig::new(0.0_f64, 1e-8, 1e-10, 32).is_err());
        assert!(QuadratureConfig::new(1e-8_f64, 1e-5, 1e-10, 32).is_err());
        assert!(QuadratureConfig::new(1e-8_f64, 1e-8, 1e-10, 0).is_err());
    }

    #[test]
    fn exponential_integrates_to_one() {
        let v = integrate_halfline(|u: f64| (-u).exp(), &config()).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-11);
    }

    #[test]
    fn gamma_like_moments() {
        let v = integrate_halfline(|u: f64| u * (-u).exp(), &config()).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-11);
        let v = integrate_halfline(|u: f64| (-u * u / 2.0).exp(), &config()).unwrap();
        assert_abs_diff_eq!(v, (std::f64::consts::PI / 2.0).sqrt(), epsilon = 1e-11);
    }

    #[test]
    fn noncentral_density_normalization_and_mean() {
        let v = integrate_halfline(|u: f64| noncentral_chi2_pdf(u, 3, 1.8).unwrap(), &config())
            .unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-8);

        let v = integrate_halfline(
            |u: f64| u * noncentral_chi2_pdf(u, 3, 1.8).unwrap(),
            &config(),
        )
        .unwrap();
        assert_abs_diff_eq!(v, 4.8, epsilon = 1e-8);

        let v = integrate_halfline(
            |u: f64| u * noncentral_chi2_pdf(u, 6, 5.0).unwrap(),
            &config(),
        )
        .unwrap();
        assert_abs_diff_eq!(v, 11.0, epsilon = 1e-8);
    }

    #[test]
    fn interval_integration() {
        let v = integrate_interval(|x: f64| x * x, 0.0, 3.0, &config()).unwrap();
        assert_abs_diff_eq!(v, 9.0, epsilon = 1e-11);
    }

    #[test]
    fn divergent_integrand_reports_last_two_estimates() {
        let err = integrate_halfline(|u: f64| 1.0 / (1.0 + u), &config()).unwrap_err();
        match err {
            Error::Convergence {
                refinements,
                previous,
                last,
            } => {
                assert_eq!(refinements, config().max_refinements());
                assert!(last > previous);
                // each doubling adds about ln 2
                assert_abs_diff_eq!(last - previous, std::f64::consts::LN_2, epsilon = 1e-6);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn endpoint_never_evaluated() {
        // would panic at u = 0
        let v = integrate_halfline(
            |u: f64| {
                assert!(u > 0.0);
                u.powf(-0.5) * (-u).exp()
            },
            &config(),
        )
        .unwrap();
        assert_abs_diff_eq!(v, std::f64::consts::PI.sqrt(), epsilon = 1e-9);
    }
}
