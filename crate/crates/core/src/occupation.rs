//! Thick-point statistics of a sampled Cauchy path: the normalizer
//! `h(eps) = eps (log eps)^2`, the sup statistic, grid estimates of the
//! Lebesgue mass of thick-point sets and the coarse spectrum slope.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::stable_sim::CauchyPath;
use crate::stats::linear_fit;

/// Upper end of the range where the normalizer is increasing.
pub const NORMALIZER_LIMIT: f64 = 0.135_335_283_236_612_7; // e^-2

pub fn normalizer(eps: f64) -> Result<f64> {
    if eps > 0.0 && eps < NORMALIZER_LIMIT {
        let l = eps.ln();
        Ok(eps * l * l)
    } else {
        Err(Error::Range(eps))
    }
}

/// `eps_1 = eps0, ..., eps_n` with `h(eps_{k+1}) = (1 - delta) h(eps_k)`,
/// each solved by bisection on `(0, eps_k)` to relative tolerance `1e-12`.
pub fn geometric_eps_sequence(delta: f64, eps0: f64, n: usize) -> Result<Vec<f64>> {
    ensure((0.0..1.0).contains(&delta), || format!("delta must lie in [0, 1), got {delta}"))?;
    normalizer(eps0)?;
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return Ok(out);
    }
    out.push(eps0);
    for _ in 1..n {
        let prev = *out.last().unwrap();
        if delta == 0.0 {
            out.push(prev);
            continue;
        }
        let target = (1.0 - delta) * normalizer(prev)?;
        let (mut lo, mut hi) = (0.0f64, prev);
        while hi - lo > 1e-12 * hi {
            let mid = 0.5 * (lo + hi);
            if normalizer(mid)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(0.5 * (lo + hi));
    }
    Ok(out)
}

/// Occupation measures `mu(I(center, eps))` of one path on a center grid.
///
/// The first `grid_len` centers form a uniform grid over `(-barrier, barrier)`
/// with spacing at most `min(eps) / 4`; the rest are the visited positions.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationProfile {
    pub epsilons: Vec<f64>,
    pub centers: Vec<f64>,
    pub grid_len: usize,
    pub spacing: f64,
    /// `values[e][c]` for epsilon index `e` and center index `c`.
    pub values: Vec<Vec<f64>>,
}

/// Number of sorted values `p` with `|p - center| < radius`.
fn count_within(sorted: &[f64], center: f64, radius: f64) -> usize {
    // both predicates are monotone along a sorted slice under rounding
    let lo = sorted.partition_point(|&p| p < center && center - p >= radius);
    let hi = sorted.partition_point(|&p| p <= center || p - center < radius);
    hi.saturating_sub(lo)
}

impl OccupationProfile {
    pub fn build(path: &CauchyPath, epsilons: &[f64]) -> Result<Self> {
        ensure(!epsilons.is_empty(), || "need at least one epsilon".into())?;
        ensure(epsilons.iter().all(|e| *e > 0.0), || "epsilons must be positive".into())?;
        ensure(epsilons.windows(2).all(|w| w[0] > w[1]), || "epsilons must be strictly decreasing".into())?;
        let r = path.barrier;
        let finest = *epsilons.last().unwrap();
        let m = (2.0 * r / (finest / 4.0)).ceil() as usize;
        let spacing = 2.0 * r / m as f64;
        let mut centers: Vec<f64> = (0..m).map(|j| -r + (j as f64 + 0.5) * spacing).collect();
        centers.extend_from_slice(path.occupied());

        let mut sorted = path.occupied().to_vec();
        sorted.sort_by(f64::total_cmp);
        let dt = path.time_step;
        let values = epsilons
            .iter()
            .map(|&eps| centers.iter().map(|&c| dt * count_within(&sorted, c, eps) as f64).collect())
            .collect();
        Ok(Self { epsilons: epsilons.to_vec(), centers, grid_len: m, spacing, values })
    }

    pub fn eps_index(&self, eps: f64) -> Result<usize> {
        self.epsilons
            .iter()
            .position(|e| (e - eps).abs() <= 1e-12 * eps.abs())
            .ok_or(Error::Lookup(eps))
    }

    /// CSV rows `eps,center,mu` over the uniform grid centers.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "eps,center,mu")?;
        for (e, eps) in self.epsilons.iter().enumerate() {
            for c in 0..self.grid_len {
                writeln!(w, "{:.16e},{:.16e},{:.16e}", eps, self.centers[c], self.values[e][c])?;
            }
        }
        Ok(())
    }
}

/// `max_x mu(I(x, eps)) / h(eps)` over all centers of the profile.
pub fn sup_statistic(profile: &OccupationProfile, eps: f64) -> Result<f64> {
    let e = profile.eps_index(eps)?;
    let h = normalizer(eps)?;
    Ok(profile.values[e].iter().fold(0.0f64, |m, v| m.max(*v)) / h)
}

/// `spacing * #{grid centers x : mu(I(x, eps)) >= a h(eps)}`.
pub fn thick_point_mass(profile: &OccupationProfile, a: f64, eps: f64) -> Result<f64> {
    ensure(a > 0.0, || format!("a must be positive, got {a}"))?;
    let e = profile.eps_index(eps)?;
    let threshold = a * normalizer(eps)?;
    let hits = profile.values[e][..profile.grid_len].iter().filter(|v| **v >= threshold).count();
    Ok(profile.spacing * hits as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    pub a: f64,
    pub epsilons: Vec<f64>,
    /// Thick-point mass per epsilon, averaged over profiles.
    pub lebesgue_masses: Vec<f64>,
    pub slope: f64,
    pub theoretical_slope: f64,
    pub n_paths: usize,
    /// Epsilons whose averaged mass was zero and were left out of the fit.
    pub excluded_levels: Vec<f64>,
}

impl SpectrumEstimate {
    /// CSV rows `eps,mass`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "eps,mass")?;
        for (e, m) in self.epsilons.iter().zip(&self.lebesgue_masses) {
            writeln!(w, "{:.16e},{:.16e}", e, m)?;
        }
        Ok(())
    }
}

/// Least-squares slope of `log mass` against `log eps`, masses averaged over
/// the profiles (all built on the same epsilon list).
pub fn coarse_spectrum(profiles: &[OccupationProfile], a: f64) -> Result<SpectrumEstimate> {
    let first = profiles.first().ok_or_else(|| Error::InsufficientData("no profiles".into()))?;
    let epsilons = first.epsilons.clone();
    ensure(profiles.iter().all(|p| p.epsilons == epsilons), || "profiles use different epsilon lists".into())?;
    let mut masses = vec![0.0; epsilons.len()];
    for p in profiles {
        for (m, eps) in masses.iter_mut().zip(&epsilons) {
            *m += thick_point_mass(p, a, *eps)?;
        }
    }
    masses.iter_mut().for_each(|m| *m /= profiles.len() as f64);
    spectrum_from_masses(a, &epsilons, &masses, profiles.len())
}

/// Fits the slope to already-measured masses.
pub fn spectrum_from_masses(a: f64, epsilons: &[f64], masses: &[f64], n_paths: usize) -> Result<SpectrumEstimate> {
    ensure(epsilons.len() == masses.len(), || "epsilons and masses differ in length".into())?;
    let (mut x, mut y, mut excluded) = (Vec::new(), Vec::new(), Vec::new());
    for (&e, &m) in epsilons.iter().zip(masses) {
        if m > 0.0 {
            x.push(e.ln());
            y.push(m.ln());
        } else {
            excluded.push(e);
        }
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData(format!("only {} positive-mass levels", x.len())));
    }
    let (slope, _) = linear_fit(&x, &y);
    Ok(SpectrumEstimate {
        a,
        epsilons: epsilons.to_vec(),
        lebesgue_masses: masses.to_vec(),
        slope,
        theoretical_slope: a * PI / 2.0,
        n_paths,
        excluded_levels: excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stable_sim::{simulate_until_exit, SimConfig};
    use proptest::prelude::*;

    #[test]
    fn normalizer_values() {
        let e4 = (-4.0f64).exp();
        assert!((normalizer(e4).unwrap() - 16.0 * e4).abs() < 1e-15);
        assert!((normalizer(e4).unwrap() - 0.29305).abs() < 1e-5);
        assert!((normalizer(1e-4).unwrap() - 8.4830e-3).abs() < 1e-7);
        assert!(normalizer(0.05).unwrap() < normalizer(0.1).unwrap());
        assert!(matches!(normalizer(0.2), Err(Error::Range(_))));
        assert!(normalizer(0.0).is_err());
        assert!((NORMALIZER_LIMIT - (-2.0f64).exp()).abs() < 1e-17);
    }

    #[test]
    fn geometric_sequence_properties() {
        let s = geometric_eps_sequence(0.0, 1e-2, 4).unwrap();
        assert!(s.iter().all(|e| *e == 1e-2));
        let s = geometric_eps_sequence(0.1, 1e-2, 12).unwrap();
        let r = normalizer(s[1]).unwrap() / normalizer(s[0]).unwrap();
        assert!((r - 0.9).abs() < 1e-10);
        assert!(s.windows(2).all(|w| w[1] < w[0]));
        for w in s.windows(2) {
            let r = normalizer(w[1]).unwrap() / normalizer(w[0]).unwrap();
            assert!((r - 0.9).abs() < 1e-10);
        }
        assert!(geometric_eps_sequence(0.1, 0.5, 3).is_err());
    }

    fn hand_profile() -> OccupationProfile {
        let p = CauchyPath::from_positions(1e-3, 1.0, vec![0.0, 0.01, 0.02, 0.5, 2.0]).unwrap();
        OccupationProfile::build(&p, &[0.1, 0.05]).unwrap()
    }

    #[test]
    fn profile_counts_match_direct_occupation() {
        let cfg = SimConfig::new(1e-4, 1.0, 10_000_000, 4).unwrap();
        let p = simulate_until_exit(&cfg, 0.0).unwrap();
        let prof = OccupationProfile::build(&p, &[0.05, 0.01]).unwrap();
        for (e, eps) in prof.epsilons.iter().enumerate() {
            for c in (0..prof.centers.len()).step_by(97) {
                let direct = crate::stable_sim::occupation_measure(&p, prof.centers[c], *eps).unwrap();
                assert_eq!(prof.values[e][c], direct);
            }
        }
    }

    #[test]
    fn sup_statistic_simple_cases() {
        let mut prof = hand_profile();
        prof.values.iter_mut().for_each(|row| row.iter_mut().for_each(|v| *v = 0.0));
        assert_eq!(sup_statistic(&prof, 0.1).unwrap(), 0.0);
        prof.values[1][7] = 0.3;
        let s = sup_statistic(&prof, 0.05).unwrap();
        assert!((s - 0.3 / normalizer(0.05).unwrap()).abs() < 1e-15);
        assert!(matches!(sup_statistic(&prof, 0.02), Err(Error::Lookup(_))));
    }

    #[test]
    fn thick_mass_edge_cases() {
        let prof = hand_profile();
        assert_eq!(thick_point_mass(&prof, 1e3, 0.1).unwrap(), 0.0);
        // vanishing threshold: eps-neighbourhood of the visited set {0, .01, .02, .5}
        let m = thick_point_mass(&prof, 1e-12, 0.05).unwrap();
        let expected = (0.02 + 0.05 - (-0.05)) + 0.1;
        assert!((m - expected).abs() <= 2.0 * prof.spacing, "{m} vs {expected}");
        assert!(thick_point_mass(&prof, 0.0, 0.1).is_err());
    }

    #[test]
    fn spectrum_of_exact_power_law() {
        let eps = [1e-2, 1e-3, 1e-4, 1e-5];
        let masses: Vec<f64> = eps.iter().map(|e: &f64| e.powf(0.37)).collect();
        let s = spectrum_from_masses(0.2, &eps, &masses, 1).unwrap();
        assert!((s.slope - 0.37).abs() < 1e-12);
        let with_zero = [1.0, 0.5, 0.0, 0.0];
        let s = spectrum_from_masses(0.2, &eps, &with_zero, 1).unwrap();
        assert_eq!(s.excluded_levels, vec![1e-4, 1e-5]);
        assert!(spectrum_from_masses(0.2, &eps, &[1.0, 0.0, 0.0, 0.0], 1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn profile_invariants(seed in any::<u64>()) {
            let cfg = SimConfig::new(1e-4, 1.0, 10_000_000, seed).unwrap();
            let p = simulate_until_exit(&cfg, 0.0).unwrap();
            let eps = [0.05, 0.01, 0.002];
            let prof = OccupationProfile::build(&p, &eps).unwrap();
            for c in 0..prof.centers.len() {
                prop_assert!(prof.values[0][c] >= prof.values[1][c] && prof.values[1][c] >= prof.values[2][c]);
            }
            for e in eps {
                let mut prev = f64::INFINITY;
                for a in [0.01, 0.05, 0.1, 0.3, 0.6, 1.0] {
                    let m = thick_point_mass(&prof, a, e).unwrap();
                    prop_assert!(m <= prev && m <= 2.0 && m >= 0.0);
                    prev = m;
                }
            }
            // sup is unchanged by adding a center with zero occupation
            let s = sup_statistic(&prof, 0.01).unwrap();
            let mut extended = prof.clone();
            extended.centers.push(50.0);
            extended.values.iter_mut().for_each(|row| row.push(0.0));
            prop_assert_eq!(sup_statistic(&extended, 0.01).unwrap(), s);
            let mut reversed = prof.clone();
            reversed.values.iter_mut().for_each(|row| row.reverse());
            prop_assert_eq!(sup_statistic(&reversed, 0.01).unwrap(), s);
        }

        #[test]
        fn sup_statistic_scaling_identity(seed in any::<u64>(), k in -2i32..3) {
            let c = 2f64.powi(k);
            let eps = 0.004;
            let p = simulate_until_exit(&SimConfig::new(1e-4, 1.0, 10_000_000, seed).unwrap(), 0.0).unwrap();
            let q = simulate_until_exit(&SimConfig::new(c * 1e-4, c, 10_000_000, seed).unwrap(), 0.0).unwrap();
            let s1 = sup_statistic(&OccupationProfile::build(&p, &[eps]).unwrap(), eps).unwrap();
            let s2 = sup_statistic(&OccupationProfile::build(&q, &[c * eps]).unwrap(), c * eps).unwrap();
            let factor = normalizer(c * eps).unwrap() / (c * normalizer(eps).unwrap());
            prop_assert!((s1 - s2 * factor).abs() <= 1e-12 * s1.max(1e-300));
        }
    }
}
