//! Browser bindings for the static demo page in `www/`.
//!
//! Every export returns a flat `Float64Array`; the row layout is given on
//! each function. The plain-Rust `*_rows` functions hold the logic so they
//! can be tested natively.

use wasm_bindgen::prelude::*;

use isingcyl::asymptotics::{self, MRule};
use isingcyl::oracle::{self, EnumerateOptions};
use isingcyl::spectrum::{SpectrumPoint, ThetaGrid};
use isingcyl::LatticeSpec;

/// Largest lattice the page will enumerate, in spins.
pub const PAGE_SPIN_CAP: usize = 24;
/// Largest width the page will scan, as a power of two.
pub const PAGE_MAX_LOG2_N: u32 = 22;

pub fn histogram_rows(n: usize, m: usize) -> Result<Vec<f64>, isingcyl::Error> {
    let spec = LatticeSpec::new(n, m)?;
    let opts = EnumerateOptions { spin_cap: PAGE_SPIN_CAP, workers: 1 };
    let pmf = oracle::enumerate_pmf_with(spec, &opts)?;
    Ok(pmf
        .counts
        .iter()
        .flat_map(|(&e, &c)| [e as f64, c as f64])
        .collect())
}

pub fn residual_rows(t: f64, log2_min: u32, log2_max: u32) -> Result<Vec<f64>, isingcyl::Error> {
    if log2_min < 1 || log2_max > PAGE_MAX_LOG2_N || log2_min > log2_max {
        return Err(isingcyl::Error::InvalidParameter(format!(
            "need 1 <= log2 N-min <= log2 N-max <= {PAGE_MAX_LOG2_N}"
        )));
    }
    let ns: Vec<usize> = (log2_min..=log2_max).map(|k| 1usize << k).collect();
    let rows = asymptotics::clt_scan(t, &ns, MRule::Equal)?;
    Ok(rows
        .iter()
        .flat_map(|r| [r.n as f64, r.log_mgf, r.residual, r.mean_ratio, r.var_ratio])
        .collect())
}

pub fn spectrum_rows(beta: f64, n: usize, m: usize) -> Result<Vec<f64>, isingcyl::Error> {
    let spec = LatticeSpec::new(n, m)?;
    let mut out = Vec::with_capacity(4 * n);
    for theta in ThetaGrid::new(spec.n()).iter() {
        let p = SpectrumPoint::evaluate(beta, theta, spec.m())?;
        out.extend([p.theta, p.gamma, p.g, p.f]);
    }
    Ok(out)
}

fn js(e: isingcyl::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = criticalBeta)]
pub fn critical_beta() -> f64 {
    isingcyl::critical_beta()
}

/// Exact energy histogram of a `2N x 2M` cylinder: `[energy, count]` pairs.
#[wasm_bindgen(js_name = energyHistogram)]
pub fn energy_histogram(n: usize, m: usize) -> Result<Vec<f64>, JsError> {
    histogram_rows(n, m).map_err(js)
}

/// Convergence ladder with `M = N = 2^k`:
/// `[N, log_mgf, residual, mean_ratio, var_ratio]` rows.
#[wasm_bindgen(js_name = cltResiduals)]
pub fn clt_residuals(t: f64, log2_min: u32, log2_max: u32) -> Result<Vec<f64>, JsError> {
    residual_rows(t, log2_min, log2_max).map_err(js)
}

/// Angle-local quantities over the grid: `[theta, gamma, g, f]` rows.
#[wasm_bindgen(js_name = spectrumCurves)]
pub fn spectrum_curves(beta: f64, n: usize, m: usize) -> Result<Vec<f64>, JsError> {
    spectrum_rows(beta, n, m).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_pairs() {
        let h = histogram_rows(1, 1).unwrap();
        assert_eq!(h, vec![-6.0, 2.0, -2.0, 2.0, 0.0, 8.0, 2.0, 2.0, 6.0, 2.0]);
        assert!(matches!(histogram_rows(3, 3), Err(isingcyl::Error::CapExceeded(_))));
        assert!(histogram_rows(0, 1).is_err());
    }

    #[test]
    fn residual_ladder() {
        let r = residual_rows(1.0, 4, 8).unwrap();
        assert_eq!(r.len(), 5 * 5);
        assert_eq!(r[0], 16.0);
        assert_eq!(r[20], 256.0);
        assert!(residual_rows(1.0, 0, 4).is_err());
        assert!(residual_rows(1.0, 5, 4).is_err());
        assert!(residual_rows(1.0, 4, 30).is_err());
    }

    #[test]
    fn spectrum_grid() {
        let s = spectrum_rows(critical_beta(), 4, 2).unwrap();
        assert_eq!(s.len(), 16);
        assert!((s[0] - std::f64::consts::PI / 8.0).abs() < 1e-15);
        assert!(s.chunks(4).all(|row| row[2] >= 0.0 && row[3] <= 0.0));
        assert!(spectrum_rows(0.0, 4, 2).is_err());
    }
}
