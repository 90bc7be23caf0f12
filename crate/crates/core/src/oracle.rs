//! Brute-force enumeration of every spin configuration of a small cylinder.
//!
//! Spins are packed row-major, bit `(j - 1) * 2N + (k - 1)` for row `j` and
//! column `k`. A set bit is a `-1` spin, so configuration `0` is all plus.
//! Configurations are visited in Gray-code order and the energy is updated
//! from the single flipped spin.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::partition::EnergyMoments;
use crate::sum::{Accumulator, NeumaierSum};
use crate::{Error, LatticeSpec, Result};

/// Default limit on the number of spins (`4MN`) that will be enumerated.
pub const DEFAULT_SPIN_CAP: usize = 28;

/// Exact energy histogram over all `2^{4MN}` configurations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyPmf {
    pub spec: LatticeSpec,
    pub counts: BTreeMap<i64, u64>,
}

impl EnergyPmf {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn count(&self, energy: i64) -> u64 {
        self.counts.get(&energy).copied().unwrap_or(0)
    }

    pub fn min_energy(&self) -> Option<i64> {
        self.counts.keys().next().copied()
    }

    /// `energy,count` rows after a header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "energy,count")?;
        for (e, c) in &self.counts {
            writeln!(w, "{e},{c}")?;
        }
        Ok(())
    }
}

/// Weighted adjacency of the cylinder. Each Hamiltonian term contributes
/// weight one, so for `N = 1` the horizontal pair of a row has weight two.
#[derive(Debug, Clone)]
pub struct Adjacency {
    neighbors: Vec<Vec<(usize, i64)>>,
}

impl Adjacency {
    pub fn new(spec: LatticeSpec) -> Self {
        let (w, h) = (spec.width(), spec.height());
        let mut neighbors: Vec<Vec<(usize, i64)>> = vec![Vec::new(); w * h];
        let mut link = |a: usize, b: usize| {
            for (x, y) in [(a, b), (b, a)] {
                match neighbors[x].iter_mut().find(|(n, _)| *n == y) {
                    Some((_, wt)) => *wt += 1,
                    None => neighbors[x].push((y, 1)),
                }
            }
        };
        for j in 0..h {
            for k in 0..w {
                let i = j * w + k;
                link(i, j * w + (k + 1) % w);
                if j + 1 < h {
                    link(i, i + w);
                }
            }
        }
        Self { neighbors }
    }

    pub fn site_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, site: usize) -> &[(usize, i64)] {
        &self.neighbors[site]
    }
}

/// Energy of one packed configuration, summing the Hamiltonian term by term.
pub fn configuration_energy(spec: LatticeSpec, bits: u64) -> i64 {
    let (w, h) = (spec.width(), spec.height());
    let spin = |j: usize, k: usize| -> i64 {
        if bits >> (j * w + k) & 1 == 1 {
            -1
        } else {
            1
        }
    };
    let mut e = 0;
    for j in 0..h {
        for k in 0..w {
            e -= spin(j, k) * spin(j, (k + 1) % w);
            if j + 1 < h {
                e -= spin(j, k) * spin(j + 1, k);
            }
        }
    }
    e
}

#[derive(Debug, Clone, Copy)]
pub struct EnumerateOptions {
    pub spin_cap: usize,
    /// 1 runs a single Gray-code pass; more splits the configurations on the
    /// two highest spin bits into four sub-cubes, run on up to four threads.
    pub workers: usize,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        Self {
            spin_cap: DEFAULT_SPIN_CAP,
            workers: 1,
        }
    }
}

pub fn enumerate_pmf(spec: LatticeSpec) -> Result<EnergyPmf> {
    enumerate_pmf_with(spec, &EnumerateOptions::default())
}

pub fn enumerate_pmf_with(spec: LatticeSpec, opts: &EnumerateOptions) -> Result<EnergyPmf> {
    let n_spins = spec.spin_count();
    if n_spins > opts.spin_cap || n_spins > 62 {
        return Err(Error::CapExceeded(format!(
            "enumeration of {n_spins} spins exceeds the cap of {} (4MN <= cap)",
            opts.spin_cap.min(62)
        )));
    }
    if opts.workers == 0 {
        return Err(Error::param("worker count must be at least 1"));
    }
    let adj = Adjacency::new(spec);
    let offset = spec.bond_count() as i64;
    let mut hist = vec![0u64; 2 * spec.bond_count() + 1];

    if opts.workers == 1 || n_spins < 3 {
        gray_pass(spec, &adj, 0, n_spins, &mut hist, offset);
    } else {
        let free = n_spins - 2;
        let threads = opts.workers.min(4);
        let shards: Vec<Vec<u64>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    let adj = &adj;
                    let len = hist.len();
                    scope.spawn(move || {
                        let mut local = vec![0u64; len];
                        for top in (t..4).step_by(threads) {
                            gray_pass(spec, adj, (top as u64) << free, free, &mut local, offset);
                        }
                        local
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("enumeration thread panicked")).collect()
        });
        for shard in shards {
            for (h, c) in hist.iter_mut().zip(shard) {
                *h += c;
            }
        }
    }

    let counts = hist
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| (i as i64 - offset, c))
        .collect();
    Ok(EnergyPmf { spec, counts })
}

/// Visits `base ^ gray(i)` for `i < 2^free_bits`, flipping only the low
/// `free_bits` spins.
fn gray_pass(
    spec: LatticeSpec,
    adj: &Adjacency,
    base: u64,
    free_bits: usize,
    hist: &mut [u64],
    offset: i64,
) {
    let mut bits = base;
    let mut energy = configuration_energy(spec, bits);
    hist[(energy + offset) as usize] += 1;
    for i in 1u64..(1u64 << free_bits) {
        let site = i.trailing_zeros() as usize;
        let s = if bits >> site & 1 == 1 { -1 } else { 1 };
        let field: i64 = adj
            .neighbors(site)
            .iter()
            .map(|&(nb, w)| if bits >> nb & 1 == 1 { -w } else { w })
            .sum();
        // flipping s changes -s * field into +s * field
        energy += 2 * s * field;
        bits ^= 1 << site;
        hist[(energy + offset) as usize] += 1;
    }
}

/// `ln sum_E count(E) e^{-beta E}`, evaluated with a max shift. Any real
/// `beta` is accepted.
pub fn oracle_log_partition(pmf: &EnergyPmf, beta: f64) -> f64 {
    let logs: Vec<f64> = pmf
        .counts
        .iter()
        .map(|(&e, &c)| (c as f64).ln() - beta * e as f64)
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: NeumaierSum = logs.iter().map(|l| (l - max).exp()).collect();
    max + sum.value().ln()
}

/// `ln <e^{sE}>` at `beta`, from the histogram.
pub fn oracle_log_mgf(pmf: &EnergyPmf, beta: f64, s: f64) -> f64 {
    oracle_log_partition(pmf, beta - s) - oracle_log_partition(pmf, beta)
}

/// Boltzmann-weighted mean and variance of the energy.
pub fn oracle_moments(pmf: &EnergyPmf, beta: f64) -> EnergyMoments {
    let logs: Vec<(f64, f64)> = pmf
        .counts
        .iter()
        .map(|(&e, &c)| (e as f64, (c as f64).ln() - beta * e as f64))
        .collect();
    let max = logs.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<(f64, f64)> = logs.iter().map(|&(e, l)| (e, (l - max).exp())).collect();
    let total: NeumaierSum = weights.iter().map(|p| p.1).collect();
    let first: NeumaierSum = weights.iter().map(|&(e, w)| e * w).collect();
    let mean = first.value() / total.value();
    let second: NeumaierSum = weights.iter().map(|&(e, w)| (e - mean) * (e - mean) * w).collect();
    EnergyMoments {
        mean,
        variance: second.value() / total.value(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, m: usize) -> LatticeSpec {
        LatticeSpec::new(n, m).unwrap()
    }

    fn naive_pmf(spec: LatticeSpec) -> EnergyPmf {
        let mut counts = BTreeMap::new();
        for bits in 0..1u64 << spec.spin_count() {
            *counts.entry(configuration_energy(spec, bits)).or_insert(0) += 1;
        }
        EnergyPmf { spec, counts }
    }

    #[test]
    fn two_by_two_histogram() {
        let pmf = enumerate_pmf(spec(1, 1)).unwrap();
        let want: BTreeMap<i64, u64> = [(-6, 2), (-2, 2), (0, 8), (2, 2), (6, 2)].into_iter().collect();
        assert_eq!(pmf.counts, want);
    }

    #[test]
    fn explicit_two_by_two_energy() {
        // E = -2ab - 2cd - ac - bd with a, b on the first row
        let sp = spec(1, 1);
        for bits in 0..16u64 {
            let s: Vec<i64> = (0..4).map(|i| if bits >> i & 1 == 1 { -1 } else { 1 }).collect();
            let e = -2 * s[0] * s[1] - 2 * s[2] * s[3] - s[0] * s[2] - s[1] * s[3];
            assert_eq!(configuration_energy(sp, bits), e);
        }
    }

    #[test]
    fn ground_state_energy() {
        for &(n, m) in &[(1, 1), (2, 1), (1, 3), (3, 2)] {
            let sp = spec(n, m);
            let want = -((4 * m * n + (2 * m - 1) * 2 * n) as i64);
            assert_eq!(configuration_energy(sp, 0), want);
            let pmf = enumerate_pmf(sp).unwrap();
            assert_eq!(pmf.min_energy(), Some(want));
            assert!(pmf.count(want) >= 2);
        }
    }

    #[test]
    fn histogram_invariants() {
        for &(n, m) in &[(1, 1), (2, 1), (1, 2), (3, 1), (1, 3), (2, 2), (5, 1), (1, 5)] {
            let sp = spec(n, m);
            let pmf = enumerate_pmf(sp).unwrap();
            assert_eq!(pmf.total(), 1u64 << sp.spin_count());
            for (&e, &c) in &pmf.counts {
                assert_eq!(pmf.count(-e), c, "{sp}: E = {e}");
            }
        }
    }

    #[test]
    fn gray_code_matches_naive() {
        for &(n, m) in &[(1, 1), (2, 1), (1, 2), (3, 1), (1, 3)] {
            let sp = spec(n, m);
            assert_eq!(enumerate_pmf(sp).unwrap(), naive_pmf(sp));
        }
    }

    #[test]
    fn sharded_matches_single_pass() {
        for &(n, m) in &[(1, 1), (2, 2), (3, 1)] {
            let sp = spec(n, m);
            let single = enumerate_pmf(sp).unwrap();
            for workers in [2, 3, 4, 8] {
                let opts = EnumerateOptions { workers, ..Default::default() };
                assert_eq!(enumerate_pmf_with(sp, &opts).unwrap(), single);
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        let err = enumerate_pmf(spec(4, 2)).unwrap_err();
        assert!(matches!(err, Error::CapExceeded(_)));
        let opts = EnumerateOptions { spin_cap: 8, workers: 1 };
        assert!(enumerate_pmf_with(spec(2, 2), &opts).is_err());
    }

    #[test]
    fn log_partition_values() {
        let pmf = enumerate_pmf(spec(1, 1)).unwrap();
        assert!((oracle_log_partition(&pmf, 0.0) - 16f64.ln()).abs() < 1e-15);
        let b = crate::critical_beta();
        let want = (2.0 * (6.0 * b).exp() + 2.0 * (2.0 * b).exp() + 8.0
            + 2.0 * (-2.0 * b).exp()
            + 2.0 * (-6.0 * b).exp())
        .ln();
        assert!((oracle_log_partition(&pmf, b) - want).abs() < 1e-14);
    }

    #[test]
    fn symmetric_in_beta() {
        let pmf = enumerate_pmf(spec(2, 1)).unwrap();
        for &b in &[0.1, 0.44, 1.3] {
            let a = oracle_log_partition(&pmf, b);
            assert!((a - oracle_log_partition(&pmf, -b)).abs() < 1e-13 * a);
        }
    }

    #[test]
    fn moments_at_infinite_temperature() {
        let pmf = enumerate_pmf(spec(1, 1)).unwrap();
        let mo = oracle_moments(&pmf, 0.0);
        assert_eq!(mo.mean, 0.0);
        assert!((mo.variance - 10.0).abs() < 1e-14);
    }

    #[test]
    fn csv_export() {
        let pmf = enumerate_pmf(spec(1, 1)).unwrap();
        let mut out = Vec::new();
        pmf.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "energy,count\n-6,2\n-2,2\n0,8\n2,2\n6,2\n");
    }

    #[test]
    fn doubled_bond_weight() {
        let adj = Adjacency::new(spec(1, 1));
        assert!(adj.neighbors(0).contains(&(1, 2)));
        assert!(adj.neighbors(0).contains(&(2, 1)));
        let adj = Adjacency::new(spec(3, 2));
        assert!(adj.neighbors(0).iter().all(|&(_, w)| w == 1));
        assert_eq!(adj.neighbors(0).len(), 3);
        assert_eq!(adj.neighbors(8).len(), 4);
    }
}
