//! Numerical evaluation of the critical-point limit statements: the four
//! terms of the log-MGF decomposition, the convergence ladder of the
//! normalized log-MGF and the energy moments, harmonic sums, and empirical
//! constants for the sum and pointwise bounds used in the convergence proof.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::lattice::check_beta;
use crate::partition::{
    check_t, clt_scale, component_deltas, energy_moments_with, normalized_log_mgf_with,
};
use crate::spectrum::{BetaTerms, Local, ThetaGrid};
use crate::sum::{grid_sum, Accumulator, NeumaierSum, SumOptions};
use crate::{critical_beta, Error, LatticeSpec, Result};

/// `4 / pi`, the limit of the normalized log-MGF at `t = 1` and of the mean
/// ratio.
pub const MEAN_LIMIT: f64 = 4.0 / PI;
/// `32 / pi`, the limit of `Var E / (MN ln N)`.
pub const VARIANCE_LIMIT: f64 = 32.0 / PI;
/// `8 / pi`, the limit of `Var E / (4 MN ln N)`.
pub const NORMALIZED_VARIANCE_LIMIT: f64 = 8.0 / PI;

/// The four bracketed quantities whose limits make up `ln <e^{t E_hat}>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropositionTerms {
    pub t: f64,
    /// `L1(b_c - s) - L1(b_c) + s 4 sqrt(2) MN`, tends to 0.
    pub term1: f64,
    /// `L2(b_c - s) - L2(b_c)`, tends to 0.
    pub term2: f64,
    /// `L3(b_c - s) - L3(b_c)`, tends to `4 t^2 / pi`.
    pub term3: f64,
    /// `L4(b_c - s) - L4(b_c) - s (4/pi) N ln N`, tends to 0.
    pub term4: f64,
}

impl PropositionTerms {
    /// `term1 - term2 + term3 + term4`, the normalized log-MGF.
    pub fn total(&self) -> f64 {
        self.term1 - self.term2 + self.term3 + self.term4
    }

    pub fn limits(&self) -> [f64; 4] {
        [0.0, 0.0, MEAN_LIMIT * self.t * self.t, 0.0]
    }
}

pub fn proposition_terms(spec: LatticeSpec, t: f64) -> Result<PropositionTerms> {
    proposition_terms_with(spec, t, &SumOptions::default())
}

/// Evaluated at `s = t / sqrt(4 MN ln N)` with each angle sum differenced
/// term by term.
pub fn proposition_terms_with(
    spec: LatticeSpec,
    t: f64,
    opts: &SumOptions,
) -> Result<PropositionTerms> {
    check_t(t, false)?;
    let scale = clt_scale(spec)?;
    if t == 0.0 {
        return Ok(PropositionTerms { t, term1: 0.0, term2: 0.0, term3: 0.0, term4: 0.0 });
    }
    let s = t / scale;
    let bc = critical_beta();
    let shifted = bc - s;
    check_beta(shifted)?;
    let d = component_deltas(spec, shifted, bc, opts)?;
    let n = spec.n() as f64;
    Ok(PropositionTerms {
        t,
        term1: d.l1 + s * 4.0 * SQRT_2 * spec.mn(),
        term2: d.l2,
        term3: d.l3,
        term4: d.l4 - s * MEAN_LIMIT * n * n.ln(),
    })
}

/// How the cylinder height follows the width along a scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MRule {
    /// `M = N`
    Equal,
    /// `M = ceil(N / (ln N)^alpha)` with `alpha` in `[0, 1)`.
    OverLogAlpha(f64),
}

impl MRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MRule::Equal => Ok(()),
            MRule::OverLogAlpha(a) if (0.0..1.0).contains(&a) => Ok(()),
            MRule::OverLogAlpha(a) => {
                Err(Error::param(format!("alpha = {a} must lie in [0, 1)")))
            }
        }
    }

    pub fn height(&self, n: usize) -> Result<usize> {
        self.validate()?;
        match *self {
            MRule::Equal => Ok(n),
            MRule::OverLogAlpha(a) => {
                let ln = (n as f64).ln();
                Ok(((n as f64 / ln.powf(a)).ceil() as usize).max(1))
            }
        }
    }
}

impl FromStr for MRule {
    type Err = Error;

    /// `equal` or `log-alpha:<alpha>`.
    fn from_str(s: &str) -> Result<Self> {
        let rule = if s == "equal" {
            MRule::Equal
        } else if let Some(a) = s.strip_prefix("log-alpha:") {
            let alpha = a
                .parse::<f64>()
                .map_err(|_| Error::param(format!("bad alpha '{a}'")))?;
            MRule::OverLogAlpha(alpha)
        } else {
            return Err(Error::param(format!(
                "unknown M rule '{s}' (expected 'equal' or 'log-alpha:<alpha>')"
            )));
        };
        rule.validate()?;
        Ok(rule)
    }
}

impl fmt::Display for MRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MRule::Equal => write!(f, "equal"),
            MRule::OverLogAlpha(a) => write!(f, "log-alpha:{a}"),
        }
    }
}

/// One rung of the convergence ladder at the critical point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CltScanRow {
    pub n: usize,
    pub m: usize,
    pub t: f64,
    /// `ln <e^{t E_hat}>`
    pub log_mgf: f64,
    /// `log_mgf - 4 t^2 / pi`
    pub residual: f64,
    /// `(<E> + 4 sqrt(2) MN) / (N ln N)`, tends to `4 / pi`.
    pub mean_ratio: f64,
    /// `Var E / (MN ln N)`, tends to `32 / pi`.
    pub var_ratio: f64,
    /// `Var E / (4 MN ln N)`, tends to `8 / pi`.
    pub normalized_variance: f64,
    /// `N (ln ln N)^2 / (M ln N)`; the height condition asks for this to
    /// vanish.
    pub body_condition: f64,
    /// Smallest `alpha` with `M >= N / (ln N)^alpha`; below 1 the alternative
    /// height condition holds.
    pub alpha_min: f64,
}

impl CltScanRow {
    pub fn satisfies_alpha_condition(&self) -> bool {
        self.alpha_min < 1.0
    }
}

pub fn clt_scan(t: f64, ns: &[usize], rule: MRule) -> Result<Vec<CltScanRow>> {
    clt_scan_with(t, ns, rule, &SumOptions::default())
}

/// Rows in the order of `ns`. Each row's angle sums use `opts.workers`.
pub fn clt_scan_with(
    t: f64,
    ns: &[usize],
    rule: MRule,
    opts: &SumOptions,
) -> Result<Vec<CltScanRow>> {
    rule.validate()?;
    ns.iter().map(|&n| scan_row(t, n, rule, opts)).collect()
}

fn scan_row(t: f64, n: usize, rule: MRule, opts: &SumOptions) -> Result<CltScanRow> {
    if n < 2 {
        return Err(Error::param(format!("scan widths need N >= 2 (got {n})")));
    }
    let m = rule.height(n)?;
    let spec = LatticeSpec::new(n, m)?;
    let log_mgf = normalized_log_mgf_with(spec, t, false, opts)?;
    let moments = energy_moments_with(spec, critical_beta(), opts)?;
    let (nf, mf) = (n as f64, m as f64);
    let ln = nf.ln();
    let lnln = ln.ln();
    let mn_ln = spec.mn() * ln;
    Ok(CltScanRow {
        n,
        m,
        t,
        log_mgf,
        residual: log_mgf - MEAN_LIMIT * t * t,
        mean_ratio: (moments.mean + 4.0 * SQRT_2 * spec.mn()) / (nf * ln),
        var_ratio: moments.variance / mn_ln,
        normalized_variance: moments.variance / (4.0 * mn_ln),
        body_condition: nf * lnln * lnln / (mf * ln),
        alpha_min: if m >= n { 0.0 } else { (nf / mf).ln() / lnln },
    })
}

/// `n_min, n_min * step, ...` up to and including `n_max`.
pub fn geometric_ladder(n_min: usize, n_max: usize, step: usize) -> Result<Vec<usize>> {
    if n_min < 2 || n_max < n_min {
        return Err(Error::param(format!(
            "need 2 <= N-min <= N-max (got {n_min}, {n_max})"
        )));
    }
    if step < 2 {
        return Err(Error::param(format!("geometric step must be at least 2 (got {step})")));
    }
    let mut out = Vec::new();
    let mut n = n_min;
    while n <= n_max {
        out.push(n);
        match n.checked_mul(step) {
            Some(next) => n = next,
            None => break,
        }
    }
    Ok(out)
}

/// `H_n`, summed from the small terms up.
pub fn harmonic_number(n: usize) -> f64 {
    (1..=n).rev().map(|k| 1.0 / k as f64).collect::<NeumaierSum>().value()
}

/// `sum_{n=1}^{N} 1 / (2n - 1)`.
pub fn odd_harmonic_sum(n: usize) -> f64 {
    (1..=n)
        .rev()
        .map(|k| 1.0 / (2 * k - 1) as f64)
        .collect::<NeumaierSum>()
        .value()
}

/// The same sum as `H_{2N} - H_N / 2`.
pub fn odd_harmonic_via_harmonic(n: usize) -> f64 {
    harmonic_number(2 * n) - 0.5 * harmonic_number(n)
}

/// `sum_{n=floor(ln N)+1}^{N} 1 / (2n - 1)` and its harmonic-number form
/// `H_{2N} - H_N/2 - (H_{2L} - H_L/2)` with `L = floor(ln N)`.
pub fn odd_harmonic_tail(n: usize) -> (f64, f64) {
    let l = ((n as f64).ln().floor() as usize).min(n);
    let direct = (l + 1..=n)
        .rev()
        .map(|k| 1.0 / (2 * k - 1) as f64)
        .collect::<NeumaierSum>()
        .value();
    let via = odd_harmonic_via_harmonic(n) - odd_harmonic_via_harmonic(l);
    (direct, via)
}

/// Kind of check behind a [`BoundReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    /// A sum compared with its growth scale; passes under a registered
    /// ceiling on the ratio.
    Sum,
    /// A pointwise inequality `lhs <= rhs`; the constant is the worst ratio.
    Pointwise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub kind: BoundKind,
    pub lhs: f64,
    pub rhs_scale: f64,
    pub empirical_constant: f64,
    pub ceiling: f64,
    pub pass: bool,
}

impl BoundReport {
    fn sum(name: &str, lhs: f64, rhs_scale: f64, ceiling: f64) -> Self {
        let c = lhs / rhs_scale;
        Self {
            name: name.into(),
            kind: BoundKind::Sum,
            lhs,
            rhs_scale,
            empirical_constant: c,
            ceiling,
            pass: c <= ceiling,
        }
    }
}

/// Regression ceilings for the sum bounds, 1.25 times the largest ratio seen
/// at the critical point for `3 <= N <= 2^20` with `M = N` and
/// `M = ceil(N / (ln N)^alpha)`, `alpha` in `{0.5, 0.9}`.
pub mod ceilings {
    /// `sum csch(gamma) / (N ln N)`, observed max 0.8556 at `N = 3`.
    pub const CSCH_SUM: f64 = 1.07;
    /// `sum csch^2(gamma) / N^2`, observed max 0.5002.
    pub const CSCH_SQ_SUM: f64 = 0.626;
    /// `sum e^{-4M gamma} / theta / (N ln ln N)`, observed max 0.1514.
    pub const EXP_OVER_THETA: f64 = 0.19;
    /// `sum e^{-4M gamma} csch(gamma) / (N ln ln N)`, observed max 0.1514.
    pub const EXP_CSCH: f64 = 0.19;
}

/// Tracks the worst ratio of a pointwise inequality `lhs <= rhs`.
#[derive(Debug, Clone, Copy)]
struct Worst {
    lhs: f64,
    rhs: f64,
    ratio: f64,
}

impl Worst {
    fn new() -> Self {
        Self { lhs: 0.0, rhs: 1.0, ratio: 0.0 }
    }

    fn update(&mut self, lhs: f64, rhs: f64) {
        let ratio = lhs / rhs;
        if ratio > self.ratio || ratio.is_nan() {
            *self = Self { lhs, rhs, ratio };
        }
    }

    fn report(self, name: &str) -> BoundReport {
        BoundReport {
            name: name.into(),
            kind: BoundKind::Pointwise,
            lhs: self.lhs,
            rhs_scale: self.rhs,
            empirical_constant: self.ratio,
            ceiling: 1.0,
            pass: self.ratio <= 1.0,
        }
    }
}

/// Half-width of the window around the critical point on which the local
/// estimates hold: `1 / sqrt(4 MN ln N)`.
pub fn critical_window(spec: LatticeSpec) -> Result<f64> {
    Ok(1.0 / clt_scale(spec)?)
}

pub const COSINE_GRID: usize = 1000;

pub fn bound_suite(spec: LatticeSpec, beta: f64) -> Result<Vec<BoundReport>> {
    bound_suite_with(spec, beta, &SumOptions::default())
}

/// Sum bounds (always), globally valid pointwise bounds (always), and the
/// local estimates (only when `beta` lies strictly inside
/// [`critical_window`]).
pub fn bound_suite_with(spec: LatticeSpec, beta: f64, opts: &SumOptions) -> Result<Vec<BoundReport>> {
    if spec.n() < 3 {
        return Err(Error::param("bound suite needs N >= 3 (ln ln N > 0)"));
    }
    let bt = BetaTerms::new(beta)?;
    let grid = ThetaGrid::new(spec.n());
    let four_m = 4.0 * spec.m() as f64;
    let n = spec.n() as f64;

    let [csch_sum, csch_sq_sum, exp_theta, exp_csch] = grid_sum(grid.len(), opts, |i| {
        let theta = grid.angle(i);
        let loc = Local::new(&bt, theta)?;
        let e = (-four_m * loc.gamma).exp();
        Ok([loc.csch_g, loc.csch_g * loc.csch_g, e / theta, e * loc.csch_g])
    })?;
    let n_ln = n * n.ln();
    let n_lnln = n * n.ln().ln();
    let mut reports = vec![
        BoundReport::sum("csch_sum", csch_sum, n_ln, ceilings::CSCH_SUM),
        BoundReport::sum("csch_sq_sum", csch_sq_sum, n * n, ceilings::CSCH_SQ_SUM),
        BoundReport::sum("exp_over_theta_sum", exp_theta, n_lnln, ceilings::EXP_OVER_THETA),
        BoundReport::sum("exp_csch_sum", exp_csch, n_lnln, ceilings::EXP_CSCH),
    ];

    let mut cosine = Worst::new();
    for k in 1..=COSINE_GRID {
        let x = PI * k as f64 / COSINE_GRID as f64;
        let half = (0.5 * x).sin();
        cosine.update(x * x / 8.0, 2.0 * half * half);
    }
    reports.push(cosine.report("cosine_quadratic"));

    let mut infimum = Worst::new();
    infimum.update(2.0, bt.x0());
    reports.push(infimum.report("coth_cosh_infimum"));

    let mut chain = Worst::new();
    let mut two_over_theta = Worst::new();
    for theta in grid.iter() {
        let loc = Local::new(&bt, theta)?;
        let half = (0.5 * theta).sin();
        let one_minus_cos = 2.0 * half * half;
        chain.update(loc.csch_g, 1.0 / ((2.0 + one_minus_cos) * one_minus_cos).sqrt());
        two_over_theta.update(loc.csch_g, 2.0 / theta);
    }
    reports.push(chain.report("csch_angle_bound"));
    reports.push(two_over_theta.report("csch_two_over_theta"));

    let window = critical_window(spec)?;
    if (beta - critical_beta()).abs() < window {
        reports.extend(local_estimates(&bt, &grid, window)?);
    }
    Ok(reports)
}

fn local_estimates(bt: &BetaTerms, grid: &ThetaGrid, window: f64) -> Result<Vec<BoundReport>> {
    // 1 - csch(2b) = (sh - 1) / sh
    let one_minus_csch = (bt.sh - 1.0) / bt.sh;
    let mut est1 = Worst::new();
    est1.update(one_minus_csch.abs(), 8.0 * window);
    let mut est2 = Worst::new();
    let mut est3 = Worst::new();
    let mut g_bound = Worst::new();
    let mut gamma_p_bound = Worst::new();
    let mut est2_sharp = Worst::new();
    for theta in grid.iter() {
        let loc = Local::new(bt, theta)?;
        est2.update((one_minus_csch * loc.csch_g).abs(), SQRT_2);
        est3.update(((bt.csch - loc.cos) * loc.csch_g).abs(), 3.0);
        g_bound.update(loc.g.abs(), 6.0);
        gamma_p_bound.update((2.0 * bt.ch * bt.one_minus_csch_sq * loc.csch_g).abs(), 10.0);
        if bt.x0_minus_2 > 0.0 {
            est2_sharp.update(
                (one_minus_csch * loc.csch_g).abs(),
                FRAC_1_SQRT_2 * one_minus_csch.abs() / bt.x0_minus_2.sqrt(),
            );
        }
    }
    let mut out = vec![
        est1.report("one_minus_csch_window"),
        est2.report("one_minus_csch_times_csch"),
        est3.report("csch_minus_cos_times_csch"),
        g_bound.report("g_abs"),
        gamma_p_bound.report("gamma_prime_abs"),
    ];
    if bt.x0_minus_2 > 0.0 {
        out.push(est2_sharp.report("one_minus_csch_times_csch_sharp"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::normalized_log_mgf;

    fn spec(n: usize, m: usize) -> LatticeSpec {
        LatticeSpec::new(n, m).unwrap()
    }

    #[test]
    fn terms_vanish_at_zero() {
        let p = proposition_terms(spec(16, 16), 0.0).unwrap();
        assert_eq!(p.total(), 0.0);
        assert_eq!([p.term1, p.term2, p.term3, p.term4], [0.0; 4]);
    }

    #[test]
    fn terms_add_up_to_normalized_mgf() {
        for (n, m, t) in [(4, 4, 1.0), (64, 32, 0.5), (300, 300, 2.0), (1000, 17, 1.3)] {
            let sp = spec(n, m);
            let p = proposition_terms(sp, t).unwrap();
            let k = normalized_log_mgf(sp, t, false).unwrap();
            assert!((p.total() - k).abs() < 1e-9, "{sp}: {} vs {k}", p.total());
        }
    }

    #[test]
    fn term_guards() {
        assert!(proposition_terms(spec(1, 4), 1.0).is_err());
        assert!(proposition_terms(spec(4, 4), -1.0).is_err());
        assert!(proposition_terms(spec(2, 1), 5.0).is_err());
    }

    #[test]
    fn m_rules() {
        assert_eq!(MRule::Equal.height(100).unwrap(), 100);
        let ln = 256f64.ln();
        assert_eq!(
            MRule::OverLogAlpha(0.5).height(256).unwrap(),
            (256.0 / ln.sqrt()).ceil() as usize
        );
        assert_eq!(MRule::OverLogAlpha(0.0).height(256).unwrap(), 256);
        assert!(MRule::OverLogAlpha(1.0).height(256).is_err());
        assert!(MRule::OverLogAlpha(-0.1).validate().is_err());
        assert_eq!("equal".parse::<MRule>().unwrap(), MRule::Equal);
        assert_eq!("log-alpha:0.25".parse::<MRule>().unwrap(), MRule::OverLogAlpha(0.25));
        assert!("log-alpha:1.5".parse::<MRule>().is_err());
        assert!("square".parse::<MRule>().is_err());
        assert_eq!(MRule::OverLogAlpha(0.25).to_string(), "log-alpha:0.25");
    }

    #[test]
    fn scan_rows_are_consistent() {
        let rows = clt_scan(1.0, &[16, 64], MRule::OverLogAlpha(0.5)).unwrap();
        assert_eq!(rows.len(), 2);
        for r in &rows {
            assert!(r.m <= r.n);
            assert!((r.residual - (r.log_mgf - MEAN_LIMIT)).abs() < 1e-15);
            assert!((r.var_ratio - 4.0 * r.normalized_variance).abs() < 1e-12 * r.var_ratio);
            assert!(r.satisfies_alpha_condition());
            assert!(r.alpha_min <= 0.5 + 1e-12);
        }
        assert!(clt_scan(1.0, &[1], MRule::Equal).is_err());
        assert!(clt_scan(1.0, &[8], MRule::OverLogAlpha(2.0)).is_err());
    }

    #[test]
    fn ladder() {
        assert_eq!(geometric_ladder(256, 4096, 4).unwrap(), vec![256, 1024, 4096]);
        assert_eq!(geometric_ladder(3, 20, 2).unwrap(), vec![3, 6, 12]);
        assert!(geometric_ladder(1, 20, 2).is_err());
        assert!(geometric_ladder(4, 20, 1).is_err());
        assert!(geometric_ladder(40, 20, 2).is_err());
    }

    #[test]
    fn harmonic_values() {
        assert_eq!(odd_harmonic_sum(1), 1.0);
        assert!((odd_harmonic_sum(3) - 23.0 / 15.0).abs() < 1e-15);
        assert!((harmonic_number(4) - 25.0 / 12.0).abs() < 1e-15);
        for n in [1, 2, 10, 1000, 123_456] {
            assert!((odd_harmonic_sum(n) - odd_harmonic_via_harmonic(n)).abs() < 1e-12);
            let (a, b) = odd_harmonic_tail(n);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn bound_suite_at_criticality() {
        let sp = spec(256, 256);
        let reports = bound_suite(sp, critical_beta()).unwrap();
        for r in &reports {
            assert!(r.pass, "{r:?}");
            assert!(r.empirical_constant >= 0.0);
        }
        let names: Vec<&str> = reports.iter().map(|r| r.name.as_str()).collect();
        assert!(names.contains(&"csch_minus_cos_times_csch"));
        assert!(!names.contains(&"one_minus_csch_times_csch_sharp"));
        let cos = reports.iter().find(|r| r.name == "cosine_quadratic").unwrap();
        assert!((cos.lhs - PI * PI / 8.0).abs() < 1e-12);
        assert!((cos.rhs_scale - 2.0).abs() < 1e-15);
    }

    #[test]
    fn local_estimates_only_inside_window() {
        let sp = spec(64, 64);
        let w = critical_window(sp).unwrap();
        let inside = bound_suite(sp, critical_beta() - 0.5 * w).unwrap();
        assert!(inside.iter().any(|r| r.name == "one_minus_csch_window"));
        assert!(inside.iter().all(|r| r.pass), "{inside:?}");
        let outside = bound_suite(sp, 0.3).unwrap();
        assert!(!outside.iter().any(|r| r.name == "one_minus_csch_window"));
        assert!(bound_suite(spec(2, 2), 0.3).is_err());
    }
}
