//! Green function of the slit plane `C \ ((-inf, -r] U [r, inf))` and the
//! expected occupation times it generates for the killed Cauchy process.
//!
//! The map `h = u o v` with `v(z) = sqrt((1+z)/(1-z))` and `u(w) = (w-1)/(w+1)`
//! sends the unit slit plane onto the unit disk with `h(0) = 0`. It is
//! evaluated in the algebraically equivalent form `z / (1 + sqrt(1 - z^2))`,
//! which avoids cancellation near the origin; with the principal square root
//! the branch cut of both forms is exactly the slit.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::quadrature;

/// Absolute tolerance used by [`expected_occupation`].
pub const OCCUPATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlitDomain {
    radius: f64,
}

impl SlitDomain {
    pub fn new(radius: f64) -> Result<Self> {
        ensure(radius > 0.0 && radius.is_finite(), || format!("slit radius must be positive, got {radius}"))?;
        Ok(Self { radius })
    }

    pub fn unit() -> Self {
        Self { radius: 1.0 }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn check_real(&self, x: f64) -> Result<()> {
        if x.abs() < self.radius {
            Ok(())
        } else {
            Err(Error::Domain(format!("{x} lies outside (-{r}, {r})", r = self.radius)))
        }
    }

    fn check_complex(&self, z: Complex64) -> Result<()> {
        if !(z.re.is_finite() && z.im.is_finite()) || (z.im == 0.0 && z.re.abs() >= self.radius) {
            Err(Error::Domain(format!("{z} lies on the slit of radius {}", self.radius)))
        } else {
            Ok(())
        }
    }
}

/// `v(z) = sqrt((1+z)/(1-z))`, principal branch: slit plane to upper half-plane.
pub fn conformal_v(z: Complex64) -> Complex64 {
    ((1.0 + z) / (1.0 - z)).sqrt()
}

/// `u(w) = (w-1)/(w+1)`: upper half-plane to unit disk.
pub fn conformal_u(w: Complex64) -> Complex64 {
    (w - 1.0) / (w + 1.0)
}

#[inline]
fn h_real(x: f64) -> f64 {
    x / (1.0 + ((1.0 - x) * (1.0 + x)).sqrt())
}

#[inline]
fn h_complex(z: Complex64) -> Complex64 {
    z / (1.0 + ((1.0 - z) * (1.0 + z)).sqrt())
}

/// The map `h` on `(-1, 1)`.
pub fn conformal_h(x: f64) -> Result<f64> {
    if x.abs() < 1.0 {
        Ok(h_real(x))
    } else {
        Err(Error::Domain(format!("h is undefined on the slit, got {x}")))
    }
}

/// The map `h` on the unit slit plane.
pub fn conformal_h_complex(z: Complex64) -> Result<Complex64> {
    SlitDomain::unit().check_complex(z)?;
    Ok(h_complex(z))
}

/// Unchecked real Green function on the unit slit plane; `+inf` at the pole.
#[inline]
fn green_unit(x0: f64, x: f64) -> f64 {
    let a = h_real(x);
    let b = h_real(x0);
    -((a - b) / (1.0 - a * b)).abs().ln() / (2.0 * PI)
}

/// `G(x0, x) = -(1/2pi) log |(h(x/r) - h(x0/r)) / (1 - h(x/r) h(x0/r))|`.
pub fn green_function(x0: f64, x: f64, domain: &SlitDomain) -> Result<f64> {
    domain.check_real(x0)?;
    domain.check_real(x)?;
    if x == x0 {
        return Err(Error::Singular(x));
    }
    let r = domain.radius;
    Ok(green_unit(x0 / r, x / r))
}

/// Complex form with `conj(h(z0/r))` in the denominator.
pub fn green_complex(z0: Complex64, z: Complex64, domain: &SlitDomain) -> Result<f64> {
    domain.check_complex(z0)?;
    domain.check_complex(z)?;
    if z == z0 {
        return Err(Error::Singular(z.re));
    }
    let r = domain.radius;
    let a = h_complex(z / r);
    let b = h_complex(z0 / r);
    Ok(-((a - b) / (1.0 - a * b.conj())).norm().ln() / (2.0 * PI))
}

/// `int_{center-radius}^{center+radius} G(x0, x) dx` by graded adaptive quadrature.
///
/// This is half the expected occupation time; see [`mean_occupation`].
pub fn expected_occupation(x0: f64, center: f64, radius: f64, domain: &SlitDomain) -> Result<f64> {
    expected_occupation_tol(x0, center, radius, domain, OCCUPATION_TOL)
}

pub fn expected_occupation_tol(x0: f64, center: f64, radius: f64, domain: &SlitDomain, tol: f64) -> Result<f64> {
    domain.check_real(x0)?;
    ensure(radius >= 0.0, || format!("interval radius must be nonnegative, got {radius}"))?;
    let r = domain.radius;
    let (lo, hi) = (center - radius, center + radius);
    if lo < -r || hi > r {
        return Err(Error::Domain(format!("interval ({lo}, {hi}) escapes (-{r}, {r})")));
    }
    if radius == 0.0 {
        return Ok(0.0);
    }
    let singular = [x0, -r, r];
    let res = quadrature::integrate(|x| green_unit(x0 / r, x / r), lo, hi, &singular, tol)?;
    Ok(res.value)
}

/// Expected occupation `E^{x0} mu(I(center, radius))` of the process killed on
/// leaving `(-r, r)`: twice the Green integral.
pub fn mean_occupation(x0: f64, center: f64, radius: f64, domain: &SlitDomain) -> Result<f64> {
    Ok(2.0 * expected_occupation(x0, center, radius, domain)?)
}

/// Maximum of [`mean_occupation`] over `n_grid` equispaced starting points in
/// `(-r, r)` together with the interval center.
pub fn sup_mean_occupation(center: f64, radius: f64, domain: &SlitDomain, n_grid: usize) -> Result<f64> {
    ensure(n_grid >= 1, || "grid must contain at least one point".into())?;
    let r = domain.radius;
    let step = 2.0 * r / (n_grid + 1) as f64;
    let mut best = mean_occupation(center, center, radius, domain)?;
    for j in 1..=n_grid {
        let x0 = -r + j as f64 * step;
        best = best.max(mean_occupation(x0, center, radius, domain)?);
    }
    Ok(best)
}

/// Radii and calibration constant of the occupation moment bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundEnv {
    pub r1: f64,
    pub r3: f64,
    pub c: f64,
}

impl BoundEnv {
    pub fn new(r1: f64, r3: f64, c: f64) -> Result<Self> {
        ensure(r1 > 0.0 && r3 > 0.0 && c > 0.0, || format!("r1, r3, c must be positive (got {r1}, {r3}, {c})"))?;
        if r1 > r3 / 2.0 {
            return Err(Error::HypothesisViolation { r1, half_r3: r3 / 2.0 });
        }
        Ok(Self { r1, r3, c })
    }
}

/// `r1 [c + (2/pi) log(r3/r1)]`.
pub fn mean_bound(env: &BoundEnv) -> f64 {
    env.r1 * (env.c + 2.0 / PI * (env.r3 / env.r1).ln())
}

/// `k! M^k` with `M = mean_bound(env)`.
pub fn moment_bound(env: &BoundEnv, k: u32) -> f64 {
    moment_bound_from_mean(mean_bound(env), k)
}

pub fn moment_bound_from_mean(mean: f64, k: u32) -> f64 {
    (1..=k).fold(1.0, |acc, j| acc * j as f64 * mean)
}

/// Exponential Chebyshev bound `(t/M) exp(1 - t/M)`, not clamped.
pub fn tail_bound(t: f64, env: &BoundEnv) -> Result<f64> {
    tail_bound_from_mean(t, mean_bound(env))
}

pub fn tail_bound_from_mean(t: f64, mean: f64) -> Result<f64> {
    ensure(t > 0.0, || format!("t must be positive, got {t}"))?;
    ensure(mean > 0.0, || format!("mean bound must be positive, got {mean}"))?;
    let s = t / mean;
    Ok(s * (1.0 - s).exp())
}

/// Clamps a probability bound to `[0, 1]`.
pub fn clamp_probability(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn h_values() {
        assert_eq!(conformal_h(0.0).unwrap(), 0.0);
        assert!((conformal_h(0.8).unwrap() - 0.5).abs() < 1e-15);
        assert!((conformal_h(-0.8).unwrap() + 0.5).abs() < 1e-15);
        assert!(matches!(conformal_h(1.0), Err(Error::Domain(_))));
        assert!(conformal_h(-3.0).is_err());
    }

    #[test]
    fn stable_form_matches_composition() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let z = Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let direct = conformal_u(conformal_v(z));
            let stable = conformal_h_complex(z).unwrap();
            assert!((direct - stable).norm() < 1e-12, "{z}: {direct} vs {stable}");
            assert!(stable.norm() < 1.0);
        }
        for x in [-0.99, -0.3, 0.1, 0.7, 0.999] {
            let direct = conformal_u(conformal_v(Complex64::new(x, 0.0)));
            assert!((direct.re - conformal_h(x).unwrap()).abs() < 1e-14);
            assert_eq!(direct.im, 0.0);
        }
    }

    #[test]
    fn complex_slit_rejected() {
        assert!(conformal_h_complex(Complex64::new(1.5, 0.0)).is_err());
        assert!(conformal_h_complex(Complex64::new(1.5, 1e-9)).is_ok());
    }

    #[test]
    fn green_closed_form_value() {
        let d = SlitDomain::unit();
        let g = green_function(0.0, 0.8, &d).unwrap();
        assert!((g - 2f64.ln() / (2.0 * PI)).abs() < 1e-12);
        assert!((g - 0.11032).abs() < 1e-5);
    }

    #[test]
    fn green_errors() {
        let d = SlitDomain::unit();
        assert!(matches!(green_function(0.3, 0.3, &d), Err(Error::Singular(_))));
        assert!(matches!(green_function(0.3, 1.0, &d), Err(Error::Domain(_))));
        assert!(matches!(green_function(-1.2, 0.0, &d), Err(Error::Domain(_))));
        assert!(SlitDomain::new(0.0).is_err());
    }

    #[test]
    fn green_boundary_decay() {
        let d = SlitDomain::unit();
        let g = green_function(0.0, 1.0 - 1e-8, &d).unwrap();
        assert!(g > 0.0 && g < 1e-3, "{g}");
        let mut prev = f64::INFINITY;
        for k in 1..8 {
            let v = green_function(0.0, 1.0 - 10f64.powi(-k), &d).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn green_blows_up_at_pole() {
        let d = SlitDomain::unit();
        let mut prev = 0.0;
        for k in 1..15 {
            let v = green_function(0.2, 0.2 + 2f64.powi(-k), &d).unwrap();
            assert!(v > prev);
            prev = v;
        }
        assert!(prev > 1.5);
    }

    #[test]
    fn complex_restricts_to_real() {
        let d = SlitDomain::unit();
        let real = green_function(0.0, 0.8, &d).unwrap();
        let cplx = green_complex(Complex64::new(0.0, 0.0), Complex64::new(0.8, 0.0), &d).unwrap();
        assert!((real - cplx).abs() < 1e-14);
        let off = green_complex(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.5), &d).unwrap();
        assert!(off > 0.0 && off.is_finite());
    }

    #[test]
    fn complex_conjugation_symmetry() {
        let d = SlitDomain::new(1.7).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let z0 = Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0));
            let z = Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0));
            let a = green_complex(z0, z, &d).unwrap();
            let b = green_complex(z0.conj(), z.conj(), &d).unwrap();
            assert!((a - b).abs() < 1e-14);
            assert!(a > 0.0);
        }
    }

    #[test]
    fn expected_occupation_values() {
        let d = SlitDomain::unit();
        assert_eq!(expected_occupation(0.3, 0.1, 0.0, &d).unwrap(), 0.0);
        // mean exit time from 0 is 1 for the unit interval
        let full = mean_occupation(0.0, 0.0, 1.0, &d).unwrap();
        assert!((full - 1.0).abs() < 1e-7, "{full}");
        assert!(matches!(expected_occupation(0.0, 0.5, 0.6, &d), Err(Error::Domain(_))));
    }

    #[test]
    fn expected_occupation_matches_exit_time_formula() {
        // E^x theta = sqrt(1 - x^2) for the Cauchy process on (-1, 1)
        let d = SlitDomain::unit();
        for x0 in [-0.9, -0.5, 0.25, 0.7] {
            let m = mean_occupation(x0, 0.0, 1.0, &d).unwrap();
            assert!((m - (1.0f64 - x0 * x0).sqrt()).abs() < 1e-7, "{x0}: {m}");
        }
    }

    #[test]
    fn small_interval_asymptotics() {
        let d = SlitDomain::unit();
        let ratio = |r1: f64| mean_occupation(0.0, 0.0, r1, &d).unwrap() / (2.0 / PI * r1 * (1.0 / r1).ln());
        let (r05, r01) = (ratio(0.05), ratio(0.01));
        assert!(r01 < r05 && r01 > 1.0);
        // leading order including the constant: h(x) ~ x/2 near 0
        for r1 in [0.05, 0.01, 0.001] {
            let m = mean_occupation(0.0, 0.0, r1, &d).unwrap();
            let lead = 2.0 / PI * r1 * ((2.0 / r1).ln() + 1.0);
            assert!((m / lead - 1.0).abs() < 0.01, "{r1}: {m} vs {lead}");
        }
    }

    #[test]
    #[ignore = "stated 15% tolerance at r1 = 0.01 is not met; the ratio is 1.37 (see README)"]
    fn small_interval_ratio_within_fifteen_percent() {
        let d = SlitDomain::unit();
        let r1 = 0.01;
        let m = mean_occupation(0.0, 0.0, r1, &d).unwrap();
        let ratio = m / (2.0 / PI * r1 * (1.0 / r1).ln());
        assert!((ratio - 1.0).abs() < 0.15, "ratio {ratio}");
    }

    #[test]
    fn quadrature_tolerance_halving() {
        let d = SlitDomain::unit();
        let coarse = expected_occupation_tol(0.05, 0.0, 0.25, &d, 1e-6).unwrap();
        let fine = expected_occupation_tol(0.05, 0.0, 0.25, &d, 5e-7).unwrap();
        assert!((coarse - fine).abs() < 1e-6);
    }

    #[test]
    fn bounds_arithmetic() {
        let env = BoundEnv::new(1.0, 2.0, 1.0).unwrap();
        let m = mean_bound(&env);
        assert!((m - (1.0 + 2.0 / PI * 2f64.ln())).abs() < 1e-15);
        assert!((m - 1.44127).abs() < 1e-5);
        assert_eq!(moment_bound(&env, 0), 1.0);
        assert!((moment_bound(&env, 1) - m).abs() < 1e-15);
        assert!((moment_bound(&env, 2) - 4.15452).abs() < 1e-5);
        assert!(matches!(BoundEnv::new(1.1, 2.0, 1.0), Err(Error::HypothesisViolation { .. })));
    }

    #[test]
    fn tail_bound_values() {
        let env = BoundEnv::new(0.1, 1.0, 0.5).unwrap();
        let m = mean_bound(&env);
        assert!((tail_bound(m, &env).unwrap() - 1.0).abs() < 1e-15);
        assert!((tail_bound(2.0 * m, &env).unwrap() - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert!((tail_bound(2.0 * m, &env).unwrap() - 0.73576).abs() < 1e-5);
        assert!(tail_bound(0.0, &env).is_err());
        assert_eq!(clamp_probability(1.3), 1.0);
    }

    proptest! {
        #[test]
        fn green_symmetric_and_positive(a in -0.999f64..0.999, b in -0.999f64..0.999) {
            prop_assume!(a != b);
            let d = SlitDomain::unit();
            let g1 = green_function(a, b, &d).unwrap();
            let g2 = green_function(b, a, &d).unwrap();
            prop_assert!((g1 - g2).abs() <= 1e-12);
            prop_assert!(g1 > 0.0);
        }

        #[test]
        fn green_scales_with_radius(a in -0.99f64..0.99, b in -0.99f64..0.99, r in 0.1f64..10.0) {
            prop_assume!(a != b);
            let g_r = green_function(a * r, b * r, &SlitDomain::new(r).unwrap()).unwrap();
            let g_1 = green_function(a * r / r, b * r / r, &SlitDomain::unit()).unwrap();
            prop_assert!((g_r - g_1).abs() <= 1e-14);
        }
    }
}
