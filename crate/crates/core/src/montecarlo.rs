//! Markov-chain sampling of the cylinder Boltzmann measure.
//!
//! Two samplers share one lattice representation: single-spin Metropolis and
//! the Wolff cluster update. Bond weights come from [`Adjacency`], so the
//! doubled horizontal term of an `N = 1` cylinder is activated with
//! probability `1 - e^{-4 beta}`, the same as two independent trials.
//!
//! Error bars use batch means over [`BATCHES`] batches; the variance error is
//! a jackknife over the same batches.

use std::io::{self, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::lattice::check_beta;
use crate::oracle::Adjacency;
use crate::{Error, LatticeSpec, Result};

pub const BATCHES: usize = 32;
pub const MAX_SPINS: usize = 1_000_000;
pub const MIN_SWEEPS: usize = 100;
pub const MIN_BURN_IN: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Wolff,
    Metropolis,
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wolff" => Ok(Algorithm::Wolff),
            "metropolis" => Ok(Algorithm::Metropolis),
            other => Err(Error::param(format!("unknown algorithm '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub spec: LatticeSpec,
    pub beta: f64,
    /// Measurement sweeps; one energy sample per sweep.
    pub sweeps: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        check_beta(self.beta)?;
        if self.sweeps < MIN_SWEEPS {
            return Err(Error::param(format!(
                "sweeps must be at least {MIN_SWEEPS} (got {})",
                self.sweeps
            )));
        }
        if self.burn_in < MIN_BURN_IN {
            return Err(Error::param(format!(
                "burn-in must be at least {MIN_BURN_IN} (got {})",
                self.burn_in
            )));
        }
        if self.spec.spin_count() > MAX_SPINS {
            return Err(Error::CapExceeded(format!(
                "{} spins exceeds the Monte Carlo limit of {MAX_SPINS}",
                self.spec.spin_count()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct McDiagnostics {
    /// Metropolis only.
    pub acceptance_rate: Option<f64>,
    /// Wolff only: mean number of spins per cluster.
    pub mean_cluster_size: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub mean_stderr: f64,
    pub variance: f64,
    pub variance_stderr: f64,
    pub diagnostics: McDiagnostics,
}

/// Spins plus their current energy.
#[derive(Debug, Clone)]
pub struct Lattice {
    adj: Adjacency,
    spins: Vec<i8>,
    energy: i64,
}

impl Lattice {
    /// All spins `+1`.
    pub fn new(spec: LatticeSpec) -> Self {
        let adj = Adjacency::new(spec);
        let spins = vec![1; adj.site_count()];
        Self {
            adj,
            spins,
            energy: -(spec.bond_count() as i64),
        }
    }

    pub fn energy(&self) -> i64 {
        self.energy
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    /// Packed like the enumeration oracle: bit `i` set when spin `i` is `-1`.
    pub fn packed(&self) -> u64 {
        self.spins
            .iter()
            .enumerate()
            .filter(|(_, &s)| s < 0)
            .fold(0, |acc, (i, _)| acc | 1 << i)
    }

    #[inline]
    fn field(&self, site: usize) -> i64 {
        self.adj
            .neighbors(site)
            .iter()
            .map(|&(nb, w)| w * self.spins[nb] as i64)
            .sum()
    }

    fn recompute_energy(&mut self) -> i64 {
        let twice: i64 = (0..self.spins.len())
            .map(|i| self.spins[i] as i64 * self.field(i))
            .sum();
        self.energy = -twice / 2;
        self.energy
    }
}

pub trait Sampler {
    fn sweep(&mut self, rng: &mut ChaCha8Rng);
    /// Called once between burn-in and measurement.
    fn end_burn_in(&mut self) {}
    fn lattice(&self) -> &Lattice;
    fn diagnostics(&self) -> McDiagnostics;
}

pub struct Metropolis {
    lattice: Lattice,
    /// Acceptance probability indexed by `s * h + 4`.
    accept: [f64; 9],
    attempted: u64,
    accepted: u64,
}

impl Metropolis {
    pub fn new(spec: LatticeSpec, beta: f64) -> Self {
        let mut accept = [1.0; 9];
        for (i, a) in accept.iter_mut().enumerate() {
            let sh = i as f64 - 4.0;
            *a = (-2.0 * beta * sh).exp().min(1.0);
        }
        Self {
            lattice: Lattice::new(spec),
            accept,
            attempted: 0,
            accepted: 0,
        }
    }

    /// One single-spin update at a uniformly chosen site.
    pub fn step(&mut self, rng: &mut ChaCha8Rng) {
        let site = rng.random_range(0..self.lattice.spins.len());
        let s = self.lattice.spins[site] as i64;
        let sh = s * self.lattice.field(site);
        self.attempted += 1;
        if sh <= 0 || rng.random::<f64>() < self.accept[(sh + 4) as usize] {
            self.lattice.spins[site] = -self.lattice.spins[site];
            self.lattice.energy += 2 * sh;
            self.accepted += 1;
        }
    }
}

impl Sampler for Metropolis {
    fn sweep(&mut self, rng: &mut ChaCha8Rng) {
        for _ in 0..self.lattice.spins.len() {
            self.step(rng);
        }
    }

    fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    fn diagnostics(&self) -> McDiagnostics {
        McDiagnostics {
            acceptance_rate: Some(self.accepted as f64 / self.attempted.max(1) as f64),
            mean_cluster_size: None,
        }
    }
}

pub struct Wolff {
    lattice: Lattice,
    /// Bond activation probability by bond weight, `1 - e^{-2 beta w}`.
    activate: [f64; 3],
    stack: Vec<usize>,
    clusters: u64,
    flipped: u64,
    /// Fixed cluster count per sweep once burn-in is over.
    clusters_per_sweep: Option<usize>,
}

impl Wolff {
    pub fn new(spec: LatticeSpec, beta: f64) -> Self {
        Self {
            lattice: Lattice::new(spec),
            activate: [0.0, -(-2.0 * beta).exp_m1(), -(-4.0 * beta).exp_m1()],
            stack: Vec::new(),
            clusters: 0,
            flipped: 0,
            clusters_per_sweep: None,
        }
    }

    /// Grows and flips one cluster; returns its size. Leaves the cached
    /// energy stale until [`Sampler::sweep`] refreshes it.
    pub fn cluster_update(&mut self, rng: &mut ChaCha8Rng) -> usize {
        let spins = &mut self.lattice.spins;
        let seed = rng.random_range(0..spins.len());
        let s0 = spins[seed];
        spins[seed] = -s0;
        self.stack.clear();
        self.stack.push(seed);
        let mut size = 1;
        while let Some(site) = self.stack.pop() {
            for &(nb, w) in self.lattice.adj.neighbors(site) {
                if spins[nb] == s0 && rng.random::<f64>() < self.activate[w as usize] {
                    spins[nb] = -s0;
                    self.stack.push(nb);
                    size += 1;
                }
            }
        }
        self.clusters += 1;
        self.flipped += size as u64;
        size
    }
}

impl Sampler for Wolff {
    /// During burn-in, cluster updates until as many spins have been flipped
    /// as the lattice holds. Afterwards a fixed number of clusters per sweep,
    /// chosen from the burn-in mean cluster size, so that measurement times
    /// do not depend on the state.
    fn sweep(&mut self, rng: &mut ChaCha8Rng) {
        match self.clusters_per_sweep {
            Some(k) => {
                for _ in 0..k {
                    self.cluster_update(rng);
                }
            }
            None => {
                let n = self.lattice.spins.len();
                let mut flipped = 0;
                while flipped < n {
                    flipped += self.cluster_update(rng);
                }
            }
        }
        self.lattice.recompute_energy();
    }

    fn end_burn_in(&mut self) {
        let mean = self.flipped as f64 / self.clusters.max(1) as f64;
        let k = (self.lattice.spins.len() as f64 / mean).ceil() as usize;
        self.clusters_per_sweep = Some(k.max(1));
    }

    fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    fn diagnostics(&self) -> McDiagnostics {
        McDiagnostics {
            acceptance_rate: None,
            mean_cluster_size: Some(self.flipped as f64 / self.clusters.max(1) as f64),
        }
    }
}

fn chain_rng(seed: u64, chain: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain);
    rng
}

pub fn run(config: &McConfig) -> Result<McEstimate> {
    run_with_series(config).map(|(est, _)| est)
}

/// Runs one chain and also returns the per-sweep energies.
pub fn run_with_series(config: &McConfig) -> Result<(McEstimate, Vec<i64>)> {
    run_chain(config, 0)
}

fn run_chain(config: &McConfig, chain: u64) -> Result<(McEstimate, Vec<i64>)> {
    config.validate()?;
    let mut rng = chain_rng(config.seed, chain);
    let mut sampler: Box<dyn Sampler> = match config.algorithm {
        Algorithm::Metropolis => Box::new(Metropolis::new(config.spec, config.beta)),
        Algorithm::Wolff => Box::new(Wolff::new(config.spec, config.beta)),
    };
    for _ in 0..config.burn_in {
        sampler.sweep(&mut rng);
    }
    sampler.end_burn_in();
    let mut series = Vec::with_capacity(config.sweeps);
    for _ in 0..config.sweeps {
        sampler.sweep(&mut rng);
        series.push(sampler.lattice().energy());
    }
    let est = estimate_from_series(&series, sampler.diagnostics())?;
    Ok((est, series))
}

/// Independent chains with stream-separated seeds, merged by inverse-variance
/// weighting. `chains = 1` reproduces [`run`].
pub fn run_chains(config: &McConfig, chains: usize) -> Result<McEstimate> {
    if chains == 0 {
        return Err(Error::param("need at least one chain"));
    }
    if chains == 1 {
        return run(config);
    }
    let ests = chain_estimates(config, chains)?;
    Ok(merge_estimates(&ests))
}

#[cfg(feature = "parallel")]
fn chain_estimates(config: &McConfig, chains: usize) -> Result<Vec<McEstimate>> {
    use rayon::prelude::*;
    (0..chains as u64)
        .into_par_iter()
        .map(|c| run_chain(config, c).map(|r| r.0))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn chain_estimates(config: &McConfig, chains: usize) -> Result<Vec<McEstimate>> {
    (0..chains as u64).map(|c| run_chain(config, c).map(|r| r.0)).collect()
}

pub fn merge_estimates(ests: &[McEstimate]) -> McEstimate {
    let weighted = |value: fn(&McEstimate) -> (f64, f64)| {
        let (mut num, mut den) = (0.0, 0.0);
        for e in ests {
            let (v, se) = value(e);
            let w = 1.0 / (se * se);
            num += w * v;
            den += w;
        }
        (num / den, den.recip().sqrt())
    };
    let (mean, mean_stderr) = weighted(|e| (e.mean, e.mean_stderr));
    let (variance, variance_stderr) = weighted(|e| (e.variance, e.variance_stderr));
    let avg = |get: fn(&McDiagnostics) -> Option<f64>| {
        let vals: Vec<f64> = ests.iter().filter_map(|e| get(&e.diagnostics)).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    };
    McEstimate {
        mean,
        mean_stderr,
        variance,
        variance_stderr,
        diagnostics: McDiagnostics {
            acceptance_rate: avg(|d| d.acceptance_rate),
            mean_cluster_size: avg(|d| d.mean_cluster_size),
        },
    }
}

/// Batch-means estimate from a correlated series. Leading samples that do not
/// fill a whole batch are dropped.
pub fn estimate_from_series(series: &[i64], diagnostics: McDiagnostics) -> Result<McEstimate> {
    let len = series.len() / BATCHES;
    if len < 2 {
        return Err(Error::param(format!(
            "need at least {} samples for {BATCHES} batches",
            2 * BATCHES
        )));
    }
    let used = &series[series.len() - len * BATCHES..];
    let n = used.len() as f64;
    let center = used.iter().map(|&e| e as f64).sum::<f64>() / n;

    // per-batch sums of centered values and their squares
    let batches: Vec<(f64, f64)> = used
        .chunks_exact(len)
        .map(|c| {
            c.iter().fold((0.0, 0.0), |(s1, s2), &e| {
                let x = e as f64 - center;
                (s1 + x, s2 + x * x)
            })
        })
        .collect();
    let (s1, s2) = batches
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));

    let b = BATCHES as f64;
    let offset = s1 / n;
    let mean = center + offset;
    let variance = s2 / n - offset * offset;

    let batch_means: Vec<f64> = batches.iter().map(|&(x, _)| x / len as f64).collect();
    let bm_avg = batch_means.iter().sum::<f64>() / b;
    let bm_var = batch_means.iter().map(|m| (m - bm_avg).powi(2)).sum::<f64>() / (b - 1.0);
    let mean_stderr = (bm_var / b).sqrt();

    let rest = n - len as f64;
    let jack: Vec<f64> = batches
        .iter()
        .map(|&(x, y)| {
            let m = (s1 - x) / rest;
            (s2 - y) / rest - m * m
        })
        .collect();
    let jack_avg = jack.iter().sum::<f64>() / b;
    let variance_stderr =
        ((b - 1.0) / b * jack.iter().map(|v| (v - jack_avg).powi(2)).sum::<f64>()).sqrt();

    Ok(McEstimate {
        mean,
        mean_stderr,
        variance,
        variance_stderr,
        diagnostics,
    })
}

/// `sweep,energy` rows after a header.
pub fn write_series_csv<W: Write>(mut w: W, series: &[i64]) -> io::Result<()> {
    writeln!(w, "sweep,energy")?;
    for (i, e) in series.iter().enumerate() {
        writeln!(w, "{},{e}", i + 1)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::configuration_energy;

    fn spec(n: usize, m: usize) -> LatticeSpec {
        LatticeSpec::new(n, m).unwrap()
    }

    fn config(n: usize, m: usize, beta: f64, algorithm: Algorithm) -> McConfig {
        McConfig {
            spec: spec(n, m),
            beta,
            sweeps: 2000,
            burn_in: 100,
            seed: 7,
            algorithm,
        }
    }

    #[test]
    fn tracked_energy_stays_exact() {
        let sp = spec(2, 3);
        let mut rng = chain_rng(1, 0);
        let mut met = Metropolis::new(sp, 0.4);
        for _ in 0..50 {
            met.sweep(&mut rng);
            assert_eq!(met.lattice().energy(), configuration_energy(sp, met.lattice().packed()));
        }
        let mut wolff = Wolff::new(spec(1, 2), 0.4);
        for _ in 0..50 {
            wolff.sweep(&mut rng);
            assert_eq!(
                wolff.lattice().energy(),
                configuration_energy(spec(1, 2), wolff.lattice().packed())
            );
        }
    }

    #[test]
    fn same_seed_same_bits() {
        for alg in [Algorithm::Metropolis, Algorithm::Wolff] {
            let c = config(3, 3, 0.4, alg);
            let a = run(&c).unwrap();
            let b = run(&c).unwrap();
            assert_eq!(a.mean.to_bits(), b.mean.to_bits());
            assert_eq!(a.variance_stderr.to_bits(), b.variance_stderr.to_bits());
        }
    }

    #[test]
    fn config_validation() {
        let mut c = config(2, 2, 0.4, Algorithm::Wolff);
        c.sweeps = 99;
        assert!(run(&c).is_err());
        c.sweeps = 100;
        c.burn_in = 9;
        assert!(run(&c).is_err());
        let big = McConfig { spec: spec(1000, 1000), ..config(1, 1, 0.4, Algorithm::Wolff) };
        assert!(matches!(run(&big), Err(Error::CapExceeded(_))));
        let cold = McConfig { beta: 0.0, ..config(1, 1, 0.4, Algorithm::Wolff) };
        assert!(run(&cold).is_err());
    }

    #[test]
    fn algorithm_parsing() {
        assert_eq!("Wolff".parse::<Algorithm>().unwrap(), Algorithm::Wolff);
        assert_eq!("metropolis".parse::<Algorithm>().unwrap(), Algorithm::Metropolis);
        assert!("heatbath".parse::<Algorithm>().is_err());
    }

    #[test]
    fn batch_means_of_known_series() {
        let series: Vec<i64> = (0..3200).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        let est = estimate_from_series(&series, McDiagnostics::default()).unwrap();
        assert!(est.mean.abs() < 1e-15);
        assert!((est.variance - 1.0).abs() < 1e-15);
        assert!(est.mean_stderr < 1e-15);
        assert!(estimate_from_series(&[1; 40], McDiagnostics::default()).is_err());
    }

    #[test]
    fn merged_chains_are_consistent() {
        let c = config(2, 2, 0.3, Algorithm::Wolff);
        let single = run(&c).unwrap();
        let merged = run_chains(&c, 4).unwrap();
        assert!(merged.mean_stderr < single.mean_stderr);
        let sigma = (merged.mean_stderr.powi(2) + single.mean_stderr.powi(2)).sqrt();
        assert!((merged.mean - single.mean).abs() < 5.0 * sigma);
        assert_eq!(run_chains(&c, 1).unwrap(), single);
    }

    #[test]
    fn series_csv() {
        let mut out = Vec::new();
        write_series_csv(&mut out, &[-6, 2]).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "sweep,energy\n1,-6\n2,2\n");
    }
}
