//! Angle-local spectral quantities of the cylinder partition function.
//!
//! For each grid angle `theta` the product formula involves
//!
//! * `gamma >= 0` with `cosh(gamma) = coth(2b) cosh(2b) - cos(theta)`,
//! * `g = (coth(2b) - cosh(2b) cos(theta)) / sinh(gamma)`,
//! * `f = ln[1 + e^{-4M gamma} + (1 - e^{-4M gamma}) g] - ln 2`,
//!
//! together with their derivatives in `beta`. Everything that depends on
//! `beta` alone lives in [`BetaTerms`] so a sweep over the grid evaluates the
//! hyperbolic functions of `2 beta` once.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::lattice::check_beta;
use crate::{Error, LatticeSpec, Result};

/// `theta_n = pi (2n - 1) / (2N)` for `n = 1..=N`.
#[inline]
pub fn theta(n: usize, half_width: usize) -> f64 {
    PI * (2 * n - 1) as f64 / (2 * half_width) as f64
}

/// The `N` angles `pi (2n - 1) / (2N)`. Each angle is computed from its index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThetaGrid {
    half_width: usize,
}

impl ThetaGrid {
    pub fn new(half_width: usize) -> Self {
        Self { half_width }
    }

    pub fn len(&self) -> usize {
        self.half_width
    }

    pub fn is_empty(&self) -> bool {
        self.half_width == 0
    }

    /// Zero-based access: `angle(i) = theta(i + 1, N)`.
    #[inline]
    pub fn angle(&self, i: usize) -> f64 {
        theta(i + 1, self.half_width)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.half_width).map(move |i| self.angle(i))
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.iter().collect()
    }
}

pub fn theta_grid(spec: LatticeSpec) -> ThetaGrid {
    ThetaGrid::new(spec.n())
}

/// Hyperbolic functions of `2 beta` shared by every angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaTerms {
    pub beta: f64,
    /// `sinh(2b)`
    pub sh: f64,
    /// `cosh(2b)`
    pub ch: f64,
    /// `csch(2b)`
    pub csch: f64,
    /// `coth(2b)`
    pub coth: f64,
    /// `coth(2b) cosh(2b) - 2 = (sinh(2b) - 1)^2 / sinh(2b)`, never negative.
    pub x0_minus_2: f64,
    /// `1 - csch^2(2b) = (sinh(2b) - 1)(sinh(2b) + 1) / sinh^2(2b)`.
    pub one_minus_csch_sq: f64,
}

impl BetaTerms {
    pub fn new(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        let u = 2.0 * beta;
        let sh = u.sinh();
        let ch = u.cosh();
        let csch = 1.0 / sh;
        let d = sh - 1.0;
        Ok(Self {
            beta,
            sh,
            ch,
            csch,
            coth: ch / sh,
            x0_minus_2: d * d / sh,
            one_minus_csch_sq: d * (sh + 1.0) / (sh * sh),
        })
    }

    /// `coth(2b) cosh(2b)`, at least 2 with equality at the critical point.
    pub fn x0(&self) -> f64 {
        2.0 + self.x0_minus_2
    }
}

/// Angle-local values shared by every derivative.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Local {
    pub cos: f64,
    /// `cosh(gamma)`
    pub x: f64,
    pub sinh_g: f64,
    pub csch_g: f64,
    pub gamma: f64,
    /// `coth(2b) - cosh(2b) cos(theta)`
    pub num: f64,
    pub g: f64,
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta <= PI {
        Ok(())
    } else {
        Err(Error::param(format!("theta = {theta} is outside (0, pi]")))
    }
}

impl Local {
    pub(crate) fn new(bt: &BetaTerms, theta: f64) -> Result<Self> {
        check_theta(theta)?;
        let half = (0.5 * theta).sin();
        let one_minus_cos = 2.0 * half * half;
        let cos = theta.cos();
        let x_minus_1 = bt.x0_minus_2 + one_minus_cos;
        if x_minus_1.is_nan() || x_minus_1 < 0.0 {
            return Err(Error::Domain {
                what: "gamma",
                detail: format!("cosh(gamma) < 1 at beta = {}, theta = {theta}", bt.beta),
            });
        }
        let sinh_g = (x_minus_1 * (x_minus_1 + 2.0)).sqrt();
        if sinh_g == 0.0 {
            return Err(Error::Domain {
                what: "gamma",
                detail: format!("gamma = 0 at beta = {}, theta = {theta}", bt.beta),
            });
        }
        let gamma = (x_minus_1 + sinh_g).ln_1p();
        let num = bt.coth - bt.ch * cos;
        Ok(Self {
            cos,
            x: 1.0 + x_minus_1,
            sinh_g,
            csch_g: 1.0 / sinh_g,
            gamma,
            num,
            g: num / sinh_g,
        })
    }

    fn gamma_derivatives(&self, bt: &BetaTerms) -> (f64, f64, f64) {
        let (sh, ch, cs) = (bt.sh, bt.ch, bt.csch);
        let w = bt.one_minus_csch_sq;
        let p = self.csch_g;
        let q = self.x;
        let p3 = p * p * p;

        let first = 2.0 * ch * w * p;
        let second = 4.0 * sh * w * p + 8.0 * ch * ch * cs.powi(3) * p
            - 4.0 * ch * ch * w * w * q * p3;
        let third = gamma_third_braces(bt, self).iter().sum();
        (first, second, third)
    }

    fn g_derivatives(&self, bt: &BetaTerms) -> (f64, f64) {
        let (sh, ch, cs) = (bt.sh, bt.ch, bt.csch);
        let w = bt.one_minus_csch_sq;
        let p = self.csch_g;
        let q = self.x;
        let c = self.cos;
        let p3 = p * p * p;

        let first = -2.0 * (cs * cs + sh * c) * p - 2.0 * ch * ch * q * w * (cs - c) * p3;

        let ch3 = ch * ch * ch;
        let brace1 = -4.0 * ch3 * w * w * (cs - c) * p3;
        let brace2 = (8.0 * cs * cs * bt.coth
            - 4.0 * ch * c
            - 8.0 * ch * sh * q * w * (cs - c) * p * p)
            * p;
        let brace3 = (4.0 * ch * (cs * cs + sh * c) * q * w * p
            - 8.0 * ch3 * cs.powi(3) * q * (cs - c) * p
            + 4.0 * ch3 * cs * cs * q * w * p
            + 12.0 * ch3 * q * q * w * w * (cs - c) * p3)
            * p
            * p;
        (first, brace1 + brace2 + brace3)
    }
}

/// The third `beta`-derivative of `gamma`, as its three braced groups.
pub(crate) fn gamma_third_braces(bt: &BetaTerms, loc: &Local) -> [f64; 3] {
    let (sh, ch, cs, coth) = (bt.sh, bt.ch, bt.csch, bt.coth);
    let w = bt.one_minus_csch_sq;
    let p = loc.csch_g;
    let q = loc.x;
    let ch3 = ch * ch * ch;
    let p3 = p * p * p;

    let brace1 = 8.0 * ch * w * p - 8.0 * ch3 * w.powi(3) * p3;
    let brace2 = (16.0 * cs * coth - 24.0 * ch * sh * q * w * w * p * p + 32.0 * ch * cs * cs
        - 48.0 * ch3 * cs.powi(4))
        * p;
    let brace3 =
        (-48.0 * ch3 * cs.powi(3) * q * w * p + 24.0 * ch3 * q * q * w.powi(3) * p3) * p * p;
    [brace1, brace2, brace3]
}

/// `e^{-4M gamma}` and the log argument `A = 1 + e + (1 - e) g`.
#[inline]
fn boundary_factor(bt: &BetaTerms, loc: &Local, theta: f64, m: usize) -> Result<(f64, f64)> {
    let e = (-4.0 * m as f64 * loc.gamma).exp();
    let a = 1.0 + e + (1.0 - e) * loc.g;
    if a > 0.0 {
        Ok((e, a))
    } else {
        Err(Error::Domain {
            what: "f",
            detail: format!(
                "nonpositive log argument {a} at beta = {}, theta = {theta}, M = {m}",
                bt.beta
            ),
        })
    }
}

/// `f = ln(A / 2)`, evaluated as `ln1p((g - 1)(1 - e) / 2)`; once `e`
/// underflows this is `ln((1 + g) / 2)`.
#[inline]
fn f_value(loc: &Local, e: f64) -> f64 {
    (0.5 * (loc.g - 1.0) * (1.0 - e)).ln_1p()
}

/// `gamma` and `f` without derivatives, the kernel of `ln Z`.
#[inline]
pub(crate) fn gamma_and_f(bt: &BetaTerms, theta: f64, m: usize) -> Result<(f64, f64)> {
    let loc = Local::new(bt, theta)?;
    let (e, _) = boundary_factor(bt, &loc, theta, m)?;
    Ok((loc.gamma, f_value(&loc, e)))
}

/// Every angle-local quantity at one `(beta, theta, M)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub theta: f64,
    pub gamma: f64,
    pub g: f64,
    pub f: f64,
    pub gamma_p: f64,
    pub gamma_pp: f64,
    pub gamma_ppp: f64,
    pub g_p: f64,
    pub g_pp: f64,
    pub f_p: f64,
    pub f_pp: f64,
    /// `e^{gamma}` at the critical point; depends on `theta` only.
    pub eta: f64,
}

impl SpectrumPoint {
    pub fn evaluate(beta: f64, theta: f64, m: usize) -> Result<Self> {
        Self::at(&BetaTerms::new(beta)?, theta, m)
    }

    pub fn at(bt: &BetaTerms, theta: f64, m: usize) -> Result<Self> {
        check_m(m)?;
        let loc = Local::new(bt, theta)?;
        let (gamma_p, gamma_pp, gamma_ppp) = loc.gamma_derivatives(bt);
        let (g_p, g_pp) = loc.g_derivatives(bt);
        let (e, a) = boundary_factor(bt, &loc, theta, m)?;
        let (f_p, f_pp) = f_derivatives_from(&loc, e, a, m, gamma_p, gamma_pp, g_p, g_pp);
        Ok(Self {
            theta,
            gamma: loc.gamma,
            g: loc.g,
            f: f_value(&loc, e),
            gamma_p,
            gamma_pp,
            gamma_ppp,
            g_p,
            g_pp,
            f_p,
            f_pp,
            eta: eta(theta),
        })
    }
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn f_derivatives_from(
    loc: &Local,
    e: f64,
    a: f64,
    m: usize,
    gamma_p: f64,
    gamma_pp: f64,
    g_p: f64,
    g_pp: f64,
) -> (f64, f64) {
    let m = m as f64;
    let gm1 = loc.g - 1.0;
    let a1 = 4.0 * m * gamma_p * e * gm1 + (1.0 - e) * g_p;
    let a2 = 4.0 * m * gamma_pp * e * gm1 - 16.0 * m * m * gamma_p * gamma_p * e * gm1
        + 8.0 * m * gamma_p * e * g_p
        + (1.0 - e) * g_pp;
    let f_p = a1 / a;
    (f_p, a2 / a - f_p * f_p)
}

/// `gamma`, `f`, and their first and second derivatives, the kernel of the
/// differentiated `ln Z`.
#[inline]
pub(crate) fn kernel_with_derivatives(bt: &BetaTerms, theta: f64, m: usize) -> Result<[f64; 6]> {
    let loc = Local::new(bt, theta)?;
    let w = bt.one_minus_csch_sq;
    let p = loc.csch_g;
    let gamma_p = 2.0 * bt.ch * w * p;
    let gamma_pp = 4.0 * bt.sh * w * p + 8.0 * bt.ch * bt.ch * bt.csch.powi(3) * p
        - 4.0 * bt.ch * bt.ch * w * w * loc.x * p * p * p;
    let (g_p, g_pp) = loc.g_derivatives(bt);
    let (e, a) = boundary_factor(bt, &loc, theta, m)?;
    let (f_p, f_pp) = f_derivatives_from(&loc, e, a, m, gamma_p, gamma_pp, g_p, g_pp);
    Ok([loc.gamma, f_value(&loc, e), gamma_p, f_p, gamma_pp, f_pp])
}

/// `(gamma(b1) - gamma(b2), f(b1) - f(b2))` at one angle, where `shifted`
/// holds `b1` and `base` holds `b2`. Every difference is formed analytically
/// from the difference `b1 - b2`, so the result keeps its relative accuracy
/// when the two temperatures are close.
pub(crate) fn spectral_delta(
    shifted: &BetaTerms,
    base: &BetaTerms,
    theta: f64,
    m: usize,
) -> Result<(f64, f64)> {
    let l1 = Local::new(shifted, theta)?;
    let l2 = Local::new(base, theta)?;
    let d = shifted.beta - base.beta;
    let mid = shifted.beta + base.beta;

    // sinh(2b1) - sinh(2b2) and the shifted offset from the critical value
    let dsh = 2.0 * mid.cosh() * d.sinh();
    let d2 = base.sh - 1.0;
    let prod_m1 = (dsh + d2) * base.sh + d2;
    // coth(2b) cosh(2b) = sinh(2b) + csch(2b)
    let dx = dsh * prod_m1 / (shifted.sh * base.sh);
    let dgamma = 2.0 * (dx / (2.0 * (0.5 * (l1.gamma + l2.gamma)).sinh())).asinh();

    let four_m = 4.0 * m as f64;
    let e1 = (-four_m * l1.gamma).exp();
    let e2 = (-four_m * l2.gamma).exp();
    let de = if e2 > 0.0 { e2 * (-four_m * dgamma).exp_m1() } else { e1 };

    let dcoth = -(2.0 * d).sinh() / (shifted.sh * base.sh);
    let dch = 2.0 * mid.sinh() * d.sinh();
    let dnum = dcoth - l2.cos * dch;
    let dsinh_g = 2.0 * (0.5 * (l1.gamma + l2.gamma)).cosh() * (0.5 * dgamma).sinh();
    let dg = (dnum * l2.sinh_g - l2.num * dsinh_g) / (l1.sinh_g * l2.sinh_g);

    let (_, a2) = boundary_factor(base, &l2, theta, m)?;
    boundary_factor(shifted, &l1, theta, m)?;
    let da = de * (1.0 - l2.g) + (1.0 - e1) * dg;
    Ok((dgamma, (da / a2).ln_1p()))
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        Err(Error::InvalidLattice("M must satisfy M >= 1 (got 0)".into()))
    } else {
        Ok(())
    }
}

pub fn gamma(beta: f64, theta: f64) -> Result<f64> {
    Ok(Local::new(&BetaTerms::new(beta)?, theta)?.gamma)
}

pub fn g(beta: f64, theta: f64) -> Result<f64> {
    Ok(Local::new(&BetaTerms::new(beta)?, theta)?.g)
}

/// `(gamma', gamma'', gamma''')` with respect to `beta`.
pub fn gamma_derivatives(beta: f64, theta: f64) -> Result<(f64, f64, f64)> {
    let bt = BetaTerms::new(beta)?;
    Ok(Local::new(&bt, theta)?.gamma_derivatives(&bt))
}

/// `(g', g'')` with respect to `beta`.
pub fn g_derivatives(beta: f64, theta: f64) -> Result<(f64, f64)> {
    let bt = BetaTerms::new(beta)?;
    Ok(Local::new(&bt, theta)?.g_derivatives(&bt))
}

pub fn f(beta: f64, theta: f64, m: usize) -> Result<f64> {
    check_m(m)?;
    Ok(gamma_and_f(&BetaTerms::new(beta)?, theta, m)?.1)
}

/// `(f', f'')` with respect to `beta`.
pub fn f_derivatives(beta: f64, theta: f64, m: usize) -> Result<(f64, f64)> {
    let p = SpectrumPoint::evaluate(beta, theta, m)?;
    Ok((p.f_p, p.f_pp))
}

/// `e^{gamma}` at the critical point:
/// `((sqrt(3 - cos) + sqrt(1 - cos)) / sqrt 2)^2`.
pub fn eta(theta: f64) -> f64 {
    let s = (0.5 * theta).sin();
    let one_minus_cos = 2.0 * s * s;
    let r = ((2.0 + one_minus_cos).sqrt() + one_minus_cos.sqrt()) / SQRT_2;
    r * r
}

/// Closed form of `f'` at the critical point.
pub fn f_p_critical(theta: f64, m: usize) -> Result<f64> {
    check_theta(theta)?;
    check_m(m)?;
    let s = (0.5 * theta).sin();
    let c = (0.5 * theta).cos();
    let one_minus_cos = 2.0 * s * s;
    let one_plus_cos = 2.0 * c * c;
    let three_minus_cos = 2.0 + one_minus_cos;
    // eta^{-4M} = exp(-4M ln eta)
    let decay = (-4.0 * m as f64 * eta(theta).ln()).exp();
    let numer = -2.0 * (1.0 - decay) * one_plus_cos
        / (three_minus_cos.sqrt() * one_minus_cos.sqrt());
    let denom =
        1.0 + decay + (1.0 - decay) * SQRT_2 * one_minus_cos.sqrt() / three_minus_cos.sqrt();
    Ok(numer / denom)
}
