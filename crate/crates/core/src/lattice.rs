use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Smallest inverse temperature accepted by the spectral routines.
pub const BETA_MIN: f64 = 1e-6;
/// Largest inverse temperature accepted by the spectral routines; beyond this
/// `coth(2 beta)` is indistinguishable from one and `sinh(2 beta)` heads for
/// overflow in the derived quantities.
pub const BETA_MAX: f64 = 50.0;

/// `ln(1 + sqrt 2) / 2`.
pub fn critical_beta() -> f64 {
    0.5 * std::f64::consts::SQRT_2.ln_1p()
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && (BETA_MIN..=BETA_MAX).contains(&beta) {
        Ok(())
    } else {
        Err(Error::BetaOutOfRange {
            beta,
            min: BETA_MIN,
            max: BETA_MAX,
        })
    }
}

/// Cylinder of circumference `2N` (periodic) and height `2M` (free).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeSpec {
    half_width: usize,
    half_height: usize,
}

impl LatticeSpec {
    pub fn new(half_width: usize, half_height: usize) -> Result<Self> {
        if half_width < 1 {
            return Err(Error::InvalidLattice(format!(
                "N must satisfy N >= 1 (got {half_width})"
            )));
        }
        if half_height < 1 {
            return Err(Error::InvalidLattice(format!(
                "M must satisfy M >= 1 (got {half_height})"
            )));
        }
        Ok(Self {
            half_width,
            half_height,
        })
    }

    /// `N`
    pub fn n(&self) -> usize {
        self.half_width
    }

    /// `M`
    pub fn m(&self) -> usize {
        self.half_height
    }

    /// Number of columns, `2N`.
    pub fn width(&self) -> usize {
        2 * self.half_width
    }

    /// Number of rows, `2M`.
    pub fn height(&self) -> usize {
        2 * self.half_height
    }

    pub fn spin_count(&self) -> usize {
        4 * self.half_width * self.half_height
    }

    /// Number of terms in the Hamiltonian: `2M * 2N` horizontal plus
    /// `(2M - 1) * 2N` vertical. For `N = 1` the two horizontal terms of a row
    /// join the same pair of spins and both are counted.
    pub fn bond_count(&self) -> usize {
        self.height() * self.width() + (self.height() - 1) * self.width()
    }

    /// `M * N` as a float, the scale of every extensive quantity.
    pub(crate) fn mn(&self) -> f64 {
        self.half_width as f64 * self.half_height as f64
    }
}

impl std::fmt::Display for LatticeSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "N={} M={}", self.half_width, self.half_height)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_beta_value() {
        let b = critical_beta();
        assert!((b - 0.4406867935097715).abs() < 1e-16);
        assert!(((2.0 * b).sinh() - 1.0).abs() < 1e-15);
        assert!(((2.0 * b).cosh() - std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn rejects_empty_lattice() {
        let err = LatticeSpec::new(0, 3).unwrap_err();
        assert!(err.to_string().contains("N >= 1"));
        assert!(LatticeSpec::new(2, 0).is_err());
    }

    #[test]
    fn counts() {
        let s = LatticeSpec::new(2, 3).unwrap();
        assert_eq!(s.spin_count(), 24);
        assert_eq!(s.bond_count(), 24 + 5 * 4);
        let one = LatticeSpec::new(1, 1).unwrap();
        assert_eq!(one.bond_count(), 6);
    }

    #[test]
    fn beta_guard() {
        assert!(check_beta(0.3).is_ok());
        assert!(check_beta(0.0).is_err());
        assert!(check_beta(51.0).is_err());
        assert!(check_beta(f64::NAN).is_err());
    }
}
