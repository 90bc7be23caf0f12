//! `ln Z` through its four components, the energy moment generating function
//! and the exact energy moments.
//!
//! ```text
//! L1 = 2MN ln(2 sinh 2b)      L2 = 2N ln cosh b
//! L3 = 2M sum_theta gamma     L4 = sum_theta f
//! ln Z = L1 - L2 + L3 + L4
//! ```
//!
//! Differences `ln Z(b - s) - ln Z(b)` are never formed by subtracting two
//! accumulated `ln Z` values: `L1` and `L2` use closed-form log ratios and the
//! angle sums are accumulated term by term from [`spectral_delta`].

use std::f64::consts::{LN_2, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::lattice::check_beta;
use crate::spectrum::{gamma_and_f, kernel_with_derivatives, spectral_delta, BetaTerms, ThetaGrid};
use crate::sum::{grid_sum, SumOptions};
use crate::{critical_beta, Error, LatticeSpec, Result};

/// One value per component `L1..L4`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Components {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l4: f64,
}

impl Components {
    /// `l1 - l2 + l3 + l4`
    pub fn combine(&self) -> f64 {
        self.l1 - self.l2 + self.l3 + self.l4
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogPartition {
    pub components: Components,
    pub ln_z: f64,
    /// `(L1', L2', L3', L4')` when requested.
    pub first: Option<Components>,
    /// `(L1'', L2'', L3'', L4'')` when requested.
    pub second: Option<Components>,
}

/// Mean and variance of the energy `E`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyMoments {
    pub mean: f64,
    pub variance: f64,
}

pub fn log_partition(spec: LatticeSpec, beta: f64, with_derivatives: bool) -> Result<LogPartition> {
    log_partition_with(spec, beta, with_derivatives, &SumOptions::default())
}

pub fn log_partition_with(
    spec: LatticeSpec,
    beta: f64,
    with_derivatives: bool,
    opts: &SumOptions,
) -> Result<LogPartition> {
    let bt = BetaTerms::new(beta)?;
    let grid = ThetaGrid::new(spec.n());
    let (m, n, mn) = (spec.m(), spec.n() as f64, spec.mn());
    let two_m = 2.0 * m as f64;

    let l1 = 2.0 * mn * (2.0 * bt.sh).ln();
    let l2 = 2.0 * n * beta.cosh().ln();

    if !with_derivatives {
        let [sg, sf] = grid_sum(grid.len(), opts, |i| {
            let (gm, f) = gamma_and_f(&bt, grid.angle(i), m)?;
            Ok([gm, f])
        })?;
        let components = Components { l1, l2, l3: two_m * sg, l4: sf };
        return Ok(LogPartition {
            components,
            ln_z: components.combine(),
            first: None,
            second: None,
        });
    }

    let [sg, sf, sgp, sfp, sgpp, sfpp] =
        grid_sum(grid.len(), opts, |i| kernel_with_derivatives(&bt, grid.angle(i), m))?;
    let components = Components { l1, l2, l3: two_m * sg, l4: sf };
    let sech = 1.0 / beta.cosh();
    let first = Components {
        l1: 4.0 * mn * bt.coth,
        l2: 2.0 * n * beta.tanh(),
        l3: two_m * sgp,
        l4: sfp,
    };
    let second = Components {
        l1: -8.0 * mn * bt.csch * bt.csch,
        l2: 2.0 * n * sech * sech,
        l3: two_m * sgpp,
        l4: sfpp,
    };
    Ok(LogPartition {
        components,
        ln_z: components.combine(),
        first: Some(first),
        second: Some(second),
    })
}

/// `ln Z` at `beta = 0`: every configuration has weight one, `4MN ln 2`.
pub fn free_partition(spec: LatticeSpec) -> f64 {
    spec.spin_count() as f64 * LN_2
}

/// Componentwise `L_i(shifted) - L_i(base)`.
pub(crate) fn component_deltas(
    spec: LatticeSpec,
    shifted: f64,
    base: f64,
    opts: &SumOptions,
) -> Result<Components> {
    let t1 = BetaTerms::new(shifted)?;
    let t2 = BetaTerms::new(base)?;
    let [dg, df] = delta_sums(spec, &t1, &t2, opts)?;
    let (l1, l2) = closed_form_deltas(spec, &t1, &t2);
    Ok(Components {
        l1,
        l2,
        l3: 2.0 * spec.m() as f64 * dg,
        l4: df,
    })
}

/// `(L1(b1) - L1(b2), L2(b1) - L2(b2))` as logs of ratios, with the ratios'
/// offsets from one written as products of sinh/cosh of half sums and half
/// differences.
fn closed_form_deltas(spec: LatticeSpec, t1: &BetaTerms, t2: &BetaTerms) -> (f64, f64) {
    let d = t1.beta - t2.beta;
    let mid = t1.beta + t2.beta;
    let dl1 = 2.0 * spec.mn() * (2.0 * mid.cosh() * d.sinh() / t2.sh).ln_1p();
    let dl2 = 2.0 * spec.n() as f64
        * (2.0 * (0.5 * mid).sinh() * (0.5 * d).sinh() / t2.beta.cosh()).ln_1p();
    (dl1, dl2)
}

fn delta_sums(spec: LatticeSpec, t1: &BetaTerms, t2: &BetaTerms, opts: &SumOptions) -> Result<[f64; 2]> {
    let grid = ThetaGrid::new(spec.n());
    let m = spec.m();
    grid_sum(grid.len(), opts, |i| {
        let (dg, df) = spectral_delta(t1, t2, grid.angle(i), m)?;
        Ok([dg, df])
    })
}

/// `K(s) = ln <e^{sE}> = ln Z(beta - s) - ln Z(beta)`.
pub fn log_mgf(spec: LatticeSpec, beta: f64, s: f64) -> Result<f64> {
    log_mgf_with(spec, beta, s, &SumOptions::default())
}

pub fn log_mgf_with(spec: LatticeSpec, beta: f64, s: f64, opts: &SumOptions) -> Result<f64> {
    check_beta(beta)?;
    if !s.is_finite() {
        return Err(Error::param(format!("s = {s} is not finite")));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    let shifted = beta - s;
    if shifted == 0.0 {
        return Ok(free_partition(spec) - log_partition_with(spec, beta, false, opts)?.ln_z);
    }
    check_beta(shifted)?;

    let t1 = BetaTerms::new(shifted)?;
    let t2 = BetaTerms::new(beta)?;
    let m = spec.m();
    let two_m = 2.0 * m as f64;
    let grid = ThetaGrid::new(spec.n());
    let [angle_part] = grid_sum(grid.len(), opts, |i| {
        let (dg, df) = spectral_delta(&t1, &t2, grid.angle(i), m)?;
        Ok([two_m * dg + df])
    })?;
    let (dl1, dl2) = closed_form_deltas(spec, &t1, &t2);
    Ok(dl1 - dl2 + angle_part)
}

/// `sqrt(4 M N ln N)`, the scale of the normalized energy.
pub fn clt_scale(spec: LatticeSpec) -> Result<f64> {
    if spec.n() < 2 {
        return Err(Error::param("the normalized energy needs N >= 2 (ln N > 0)"));
    }
    Ok((4.0 * spec.mn() * (spec.n() as f64).ln()).sqrt())
}

/// `4 sqrt(2) M N - (4 / pi) N ln N`, the centering of the energy at the
/// critical point (sign flipped: `E_hat = (E + centering) / scale`).
pub fn clt_centering(spec: LatticeSpec) -> f64 {
    let n = spec.n() as f64;
    4.0 * SQRT_2 * spec.mn() - 4.0 / PI * n * n.ln()
}

/// `ln <e^{t E_hat}>` at the critical point, with
/// `E_hat = (E + 4 sqrt(2) MN - (4/pi) N ln N) / sqrt(4 MN ln N)`.
///
/// Negative `t` is rejected unless `allow_negative` is set, in which case a
/// warning is logged.
pub fn normalized_log_mgf(spec: LatticeSpec, t: f64, allow_negative: bool) -> Result<f64> {
    normalized_log_mgf_with(spec, t, allow_negative, &SumOptions::default())
}

pub fn normalized_log_mgf_with(
    spec: LatticeSpec,
    t: f64,
    allow_negative: bool,
    opts: &SumOptions,
) -> Result<f64> {
    check_t(t, allow_negative)?;
    let scale = clt_scale(spec)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let s = t / scale;
    Ok(log_mgf_with(spec, critical_beta(), s, opts)? + s * clt_centering(spec))
}

pub(crate) fn check_t(t: f64, allow_negative: bool) -> Result<()> {
    if !t.is_finite() {
        return Err(Error::param(format!("t = {t} is not finite")));
    }
    if t < 0.0 {
        if !allow_negative {
            return Err(Error::param(format!(
                "t = {t} < 0; the limit is only established for t >= 0 (override to proceed)"
            )));
        }
        log::warn!("evaluating the normalized log-MGF at t = {t} < 0, outside the proven range");
    }
    Ok(())
}

/// `<E> = -d ln Z / d beta` and `Var E = d^2 ln Z / d beta^2`.
pub fn energy_moments(spec: LatticeSpec, beta: f64) -> Result<EnergyMoments> {
    energy_moments_with(spec, beta, &SumOptions::default())
}

pub fn energy_moments_with(spec: LatticeSpec, beta: f64, opts: &SumOptions) -> Result<EnergyMoments> {
    let lp = log_partition_with(spec, beta, true, opts)?;
    let first = lp.first.expect("derivatives requested");
    let second = lp.second.expect("derivatives requested");
    Ok(EnergyMoments {
        mean: -first.combine(),
        variance: second.combine(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sum::Precision;

    fn spec(n: usize, m: usize) -> LatticeSpec {
        LatticeSpec::new(n, m).unwrap()
    }

    /// ln of the 16-state sum for the 2x2 cylinder,
    /// `E = -2ab - 2cd - ac - bd`.
    fn two_by_two(beta: f64) -> f64 {
        let mut z = 0.0;
        for bits in 0..16u32 {
            let s: Vec<f64> = (0..4).map(|i| if bits >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
            let e = -2.0 * s[0] * s[1] - 2.0 * s[2] * s[3] - s[0] * s[2] - s[1] * s[3];
            z += (-beta * e).exp();
        }
        z.ln()
    }

    #[test]
    fn smallest_cylinder_closed_form() {
        let b = critical_beta();
        let want = (2.0 * (6.0 * b).exp() + 2.0 * (2.0 * b).exp() + 8.0
            + 2.0 * (-2.0 * b).exp()
            + 2.0 * (-6.0 * b).exp())
        .ln();
        let lp = log_partition(spec(1, 1), b, false).unwrap();
        assert!((lp.ln_z - want).abs() < 1e-11);
        for &beta in &[0.05, 0.3, 0.7, 2.0] {
            let lp = log_partition(spec(1, 1), beta, true).unwrap();
            assert!((lp.ln_z - two_by_two(beta)).abs() < 1e-11 * two_by_two(beta));
        }
    }

    #[test]
    fn free_limit() {
        for &(n, m) in &[(1, 1), (2, 3), (5, 5), (40, 7)] {
            let sp = spec(n, m);
            let lp = log_partition(sp, 1e-6, false).unwrap();
            assert!((lp.ln_z - free_partition(sp)).abs() < 1e-4, "{sp}");
        }
        assert_eq!(free_partition(spec(1, 1)), 4.0 * LN_2);
        assert_eq!(free_partition(spec(2, 3)), 24.0 * LN_2);
        assert_eq!(free_partition(spec(5, 5)), 100.0 * LN_2);
    }

    #[test]
    fn lnz_range_guard() {
        assert!(matches!(
            log_partition(spec(2, 2), 0.0, false),
            Err(Error::BetaOutOfRange { .. })
        ));
        assert!(log_partition(spec(2, 2), 51.0, false).is_err());
        assert!(log_partition(spec(2, 2), 50.0, true).unwrap().ln_z.is_finite());
    }

    #[test]
    fn mgf_at_zero_is_zero() {
        assert_eq!(log_mgf(spec(3, 2), 0.4, 0.0).unwrap(), 0.0);
        assert_eq!(normalized_log_mgf(spec(3, 2), 0.0, false).unwrap(), 0.0);
    }

    #[test]
    fn mgf_reaching_zero_temperature_uses_free_value() {
        let sp = spec(1, 1);
        let k = log_mgf(sp, 0.1, 0.1).unwrap();
        assert!((k - (16f64.ln() - two_by_two(0.1))).abs() < 1e-12);
        assert!(log_mgf(sp, 0.1, 0.2).is_err());
    }

    #[test]
    fn mgf_matches_direct_difference() {
        for &(n, m) in &[(1, 1), (4, 3), (37, 11), (100, 100)] {
            let sp = spec(n, m);
            for &(beta, s) in &[(0.3, 0.05), (critical_beta(), 0.01), (0.7, -0.05), (0.2, 0.1)] {
                let k = log_mgf(sp, beta, s).unwrap();
                let direct = log_partition(sp, beta - s, false).unwrap().ln_z
                    - log_partition(sp, beta, false).unwrap().ln_z;
                assert!((k - direct).abs() < 1e-9, "{sp} {beta} {s}: {k} vs {direct}");
            }
        }
    }

    #[test]
    fn component_deltas_sum_to_mgf() {
        let sp = spec(50, 20);
        let c = component_deltas(sp, 0.4, 0.43, &SumOptions::default()).unwrap();
        let k = log_mgf(sp, 0.43, 0.03).unwrap();
        assert!((c.combine() - k).abs() < 1e-10);
    }

    #[test]
    fn mgf_derivatives_give_moments() {
        let sp = spec(6, 4);
        for &beta in &[0.25, critical_beta(), 0.6] {
            let mo = energy_moments(sp, beta).unwrap();
            let h = 1e-4;
            let kp = (log_mgf(sp, beta, h).unwrap() - log_mgf(sp, beta, -h).unwrap()) / (2.0 * h);
            // K'(0) = <E>, K''(0) = Var E
            assert!((kp - mo.mean).abs() < 1e-6 * mo.mean.abs(), "{kp} vs {}", mo.mean);
            let kpp = (log_mgf(sp, beta, h).unwrap() + log_mgf(sp, beta, -h).unwrap()) / (h * h);
            assert!((kpp - mo.variance).abs() < 1e-5 * mo.variance, "{kpp} vs {}", mo.variance);
        }
    }

    #[test]
    fn mgf_is_convex() {
        let sp = spec(8, 5);
        let beta = critical_beta();
        let ss: Vec<f64> = (-10..=10).map(|i| i as f64 * 0.02).collect();
        let ks: Vec<f64> = ss.iter().map(|&s| log_mgf(sp, beta, s).unwrap()).collect();
        for w in ks.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-12);
        }
    }

    #[test]
    fn moments_small_beta() {
        let sp = spec(3, 2);
        let mo = energy_moments(sp, 1e-6).unwrap();
        assert!(mo.mean.abs() < 1e-3 * sp.bond_count() as f64);
        assert!(mo.variance > 0.0);
    }

    #[test]
    fn normalized_guards() {
        assert!(normalized_log_mgf(spec(1, 5), 0.5, false).is_err());
        assert!(normalized_log_mgf(spec(4, 5), -0.5, false).is_err());
        assert!(normalized_log_mgf(spec(4, 5), -0.5, true).unwrap().is_finite());
    }

    #[test]
    fn worker_count_does_not_change_bits() {
        let sp = spec(50_000, 30_000);
        let a = log_partition_with(sp, 0.41, true, &SumOptions::with_workers(1)).unwrap();
        let b = log_partition_with(sp, 0.41, true, &SumOptions::with_workers(4)).unwrap();
        assert_eq!(a.ln_z.to_bits(), b.ln_z.to_bits());
        assert_eq!(a.second.unwrap().l4.to_bits(), b.second.unwrap().l4.to_bits());
    }

    #[test]
    fn double_double_agrees_with_compensated() {
        let sp = spec(20_000, 20_000);
        let dd = SumOptions { workers: 1, precision: Precision::DoubleDouble };
        let a = normalized_log_mgf(sp, 1.0, false).unwrap();
        let b = normalized_log_mgf_with(sp, 1.0, false, &dd).unwrap();
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}
