mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use isingcyl::asymptotics::{self, BoundKind, BoundReport, CltScanRow, MRule, PropositionTerms};
use isingcyl::montecarlo::{self, Algorithm, McConfig, McEstimate};
use isingcyl::oracle::{self, EnumerateOptions, DEFAULT_SPIN_CAP};
use isingcyl::partition::{self, Components, EnergyMoments, LogPartition};
use isingcyl::{critical_beta, LatticeSpec, SumOptions};

use crate::error::CliError;
use crate::output::{emit, num, open, Format, Table};

/// Exact energy statistics of the 2D Ising model on a 2N x 2M cylinder.
#[derive(Debug, Parser)]
#[command(name = "isingcyl", version)]
struct Cli {
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,

    /// Write to this file instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Worker threads for angle sums and enumeration.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Lattice {
    /// Half-width: the cylinder is 2N spins around.
    #[arg(long = "N")]
    n: usize,
    /// Half-height: the cylinder is 2M spins tall.
    #[arg(long = "M")]
    m: usize,
}

impl Lattice {
    fn spec(&self) -> Result<LatticeSpec, CliError> {
        Ok(LatticeSpec::new(self.n, self.m)?)
    }
}

/// A decimal or `critical`.
fn parse_beta(s: &str) -> Result<f64, String> {
    if s.eq_ignore_ascii_case("critical") {
        Ok(critical_beta())
    } else {
        s.parse::<f64>().map_err(|e| format!("'{s}' is neither a number nor 'critical': {e}"))
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// The four components of ln Z and their sum.
    Lnz {
        #[command(flatten)]
        lattice: Lattice,
        #[arg(long, value_parser = parse_beta)]
        beta: f64,
        /// Also emit first and second beta-derivatives.
        #[arg(long)]
        derivatives: bool,
    },
    /// Exact mean and variance of the energy.
    Moments {
        #[command(flatten)]
        lattice: Lattice,
        #[arg(long, value_parser = parse_beta)]
        beta: f64,
    },
    /// ln <e^{sE}> at beta, or the normalized ln <e^{t E_hat}> at the critical point.
    Mgf {
        #[command(flatten)]
        lattice: Lattice,
        #[arg(long, value_parser = parse_beta, required_unless_present = "t")]
        beta: Option<f64>,
        #[arg(long, conflicts_with = "t", requires = "beta", allow_hyphen_values = true)]
        s: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        t: Option<f64>,
        /// Accept t < 0, outside the proven range.
        #[arg(long)]
        allow_negative_t: bool,
    },
    /// Normalized log-MGF and moment ratios along a geometric ladder of widths.
    Scan {
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long = "N-min", default_value_t = 256)]
        n_min: usize,
        #[arg(long = "N-max", default_value_t = 1 << 20)]
        n_max: usize,
        #[arg(long, default_value_t = 4)]
        geometric_step: usize,
        /// `equal` or `log-alpha:<alpha>` with alpha in [0, 1).
        #[arg(long, default_value = "equal")]
        m_rule: String,
    },
    /// Empirical constants of the sum bounds and pointwise inequality checks.
    Bounds {
        #[command(flatten)]
        lattice: Lattice,
        #[arg(long, value_parser = parse_beta, default_value = "critical")]
        beta: f64,
    },
    /// Exact energy histogram by enumerating every configuration.
    Oracle {
        #[command(flatten)]
        lattice: Lattice,
        #[arg(long, default_value_t = DEFAULT_SPIN_CAP)]
        spin_cap: usize,
    },
    /// Monte Carlo estimate of the energy mean and variance.
    Mc {
        #[command(flatten)]
        lattice: Lattice,
        #[arg(long, value_parser = parse_beta, default_value = "critical")]
        beta: f64,
        #[arg(long, default_value_t = 10_000)]
        sweeps: usize,
        #[arg(long, default_value_t = 1_000)]
        burn_in: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "wolff")]
        algorithm: String,
        /// Independent chains merged by inverse-variance weighting.
        #[arg(long, default_value_t = 1)]
        chains: usize,
        /// Write the per-sweep energies of a single chain as CSV.
        #[arg(long)]
        series: Option<PathBuf>,
    },
    /// The four terms of the critical log-MGF decomposition.
    Terms {
        #[command(flatten)]
        lattice: Lattice,
        #[arg(long)]
        t: f64,
    },
}

#[derive(Serialize)]
struct LnzRow {
    #[serde(rename = "L1")]
    l1: f64,
    #[serde(rename = "L2")]
    l2: f64,
    #[serde(rename = "L3")]
    l3: f64,
    #[serde(rename = "L4")]
    l4: f64,
    #[serde(rename = "lnZ")]
    ln_z: f64,
    #[serde(rename = "dL", skip_serializing_if = "Option::is_none")]
    first: Option<Components>,
    #[serde(rename = "d2L", skip_serializing_if = "Option::is_none")]
    second: Option<Components>,
}

impl From<LogPartition> for LnzRow {
    fn from(lp: LogPartition) -> Self {
        let c = lp.components;
        Self {
            l1: c.l1,
            l2: c.l2,
            l3: c.l3,
            l4: c.l4,
            ln_z: lp.ln_z,
            first: lp.first,
            second: lp.second,
        }
    }
}

#[derive(Serialize)]
#[serde(transparent)]
struct LnzTable(LnzRow);

const LNZ_HEADER: [&str; 13] = [
    "L1", "L2", "L3", "L4", "lnZ", "dL1", "dL2", "dL3", "dL4", "d2L1", "d2L2", "d2L3", "d2L4",
];

impl Table for LnzTable {
    fn header() -> &'static [&'static str] {
        &LNZ_HEADER
    }

    fn record(&self) -> Vec<String> {
        let r = &self.0;
        let mut v: Vec<String> = [r.l1, r.l2, r.l3, r.l4, r.ln_z].map(num).into();
        for c in [r.first, r.second].into_iter().flatten() {
            v.extend([c.l1, c.l2, c.l3, c.l4].map(num));
        }
        v
    }
}

/// `lnz` without derivatives has the short schema.
#[derive(Serialize)]
#[serde(transparent)]
struct LnzShort(LnzRow);

impl Table for LnzShort {
    fn header() -> &'static [&'static str] {
        &LNZ_HEADER[..5]
    }

    fn record(&self) -> Vec<String> {
        let r = &self.0;
        [r.l1, r.l2, r.l3, r.l4, r.ln_z].map(num).into()
    }
}

#[derive(Serialize)]
#[serde(transparent)]
struct MomentsRow(EnergyMoments);

impl Table for MomentsRow {
    fn header() -> &'static [&'static str] {
        &["mean", "variance"]
    }

    fn record(&self) -> Vec<String> {
        vec![num(self.0.mean), num(self.0.variance)]
    }
}

#[derive(Serialize)]
struct MgfRow {
    s: f64,
    log_mgf: f64,
}

impl Table for MgfRow {
    fn header() -> &'static [&'static str] {
        &["s", "log_mgf"]
    }

    fn record(&self) -> Vec<String> {
        vec![num(self.s), num(self.log_mgf)]
    }
}

#[derive(Serialize)]
struct NormalizedMgfRow {
    t: f64,
    log_mgf: f64,
}

impl Table for NormalizedMgfRow {
    fn header() -> &'static [&'static str] {
        &["t", "log_mgf"]
    }

    fn record(&self) -> Vec<String> {
        vec![num(self.t), num(self.log_mgf)]
    }
}

#[derive(Serialize)]
#[serde(transparent)]
struct ScanRow(CltScanRow);

impl Table for ScanRow {
    fn header() -> &'static [&'static str] {
        &[
            "N",
            "M",
            "t",
            "log_mgf",
            "residual",
            "mean_ratio",
            "var_ratio",
            "normalized_variance",
            "body_condition",
            "alpha_min",
        ]
    }

    fn record(&self) -> Vec<String> {
        let r = &self.0;
        let mut v = vec![r.n.to_string(), r.m.to_string()];
        v.extend(
            [
                r.t,
                r.log_mgf,
                r.residual,
                r.mean_ratio,
                r.var_ratio,
                r.normalized_variance,
                r.body_condition,
                r.alpha_min,
            ]
            .map(num),
        );
        v
    }
}

#[derive(Serialize)]
#[serde(transparent)]
struct BoundRow(BoundReport);

impl Table for BoundRow {
    fn header() -> &'static [&'static str] {
        &["name", "lhs", "rhs_scale", "empirical_constant", "pass", "kind", "ceiling"]
    }

    fn record(&self) -> Vec<String> {
        let r = &self.0;
        let kind = match r.kind {
            BoundKind::Sum => "sum",
            BoundKind::Pointwise => "pointwise",
        };
        vec![
            r.name.clone(),
            num(r.lhs),
            num(r.rhs_scale),
            num(r.empirical_constant),
            r.pass.to_string(),
            kind.into(),
            num(r.ceiling),
        ]
    }
}

#[derive(Serialize)]
struct HistogramRow {
    energy: i64,
    count: u64,
}

impl Table for HistogramRow {
    fn header() -> &'static [&'static str] {
        &["energy", "count"]
    }

    fn record(&self) -> Vec<String> {
        vec![self.energy.to_string(), self.count.to_string()]
    }
}

#[derive(Serialize)]
#[serde(transparent)]
struct McRow(McEstimate);

impl Table for McRow {
    fn header() -> &'static [&'static str] {
        &["mean", "mean_stderr", "variance", "variance_stderr", "acceptance_rate", "mean_cluster_size"]
    }

    fn record(&self) -> Vec<String> {
        let r = &self.0;
        let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
        vec![
            num(r.mean),
            num(r.mean_stderr),
            num(r.variance),
            num(r.variance_stderr),
            opt(r.diagnostics.acceptance_rate),
            opt(r.diagnostics.mean_cluster_size),
        ]
    }
}

#[derive(Serialize)]
struct TermsRow {
    #[serde(flatten)]
    terms: PropositionTerms,
    total: f64,
}

impl Table for TermsRow {
    fn header() -> &'static [&'static str] {
        &["t", "term1", "term2", "term3", "term4", "total"]
    }

    fn record(&self) -> Vec<String> {
        let p = &self.terms;
        [p.t, p.term1, p.term2, p.term3, p.term4, self.total].map(num).into()
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let opts = SumOptions::with_workers(cli.threads);
    let mut out = open(cli.output.as_deref())?;
    let out = out.as_mut();
    let fmt = cli.format;

    match cli.command {
        Command::Lnz { lattice, beta, derivatives } => {
            let lp = partition::log_partition_with(lattice.spec()?, beta, derivatives, &opts)?;
            if derivatives {
                emit(&[LnzTable(lp.into())], true, fmt, out)
            } else {
                emit(&[LnzShort(lp.into())], true, fmt, out)
            }
        }
        Command::Moments { lattice, beta } => {
            let m = partition::energy_moments_with(lattice.spec()?, beta, &opts)?;
            emit(&[MomentsRow(m)], true, fmt, out)
        }
        Command::Mgf { lattice, beta, s, t, allow_negative_t } => {
            let spec = lattice.spec()?;
            match (s, t) {
                (Some(s), None) => {
                    let beta = beta.expect("clap requires beta with s");
                    let log_mgf = partition::log_mgf_with(spec, beta, s, &opts)?;
                    emit(&[MgfRow { s, log_mgf }], true, fmt, out)
                }
                (None, Some(t)) => {
                    if beta.is_some_and(|b| b != critical_beta()) {
                        return Err(CliError::Usage(
                            "--t is evaluated at the critical point; drop --beta or pass 'critical'".into(),
                        ));
                    }
                    let log_mgf =
                        partition::normalized_log_mgf_with(spec, t, allow_negative_t, &opts)?;
                    emit(&[NormalizedMgfRow { t, log_mgf }], true, fmt, out)
                }
                _ => Err(CliError::Usage("pass exactly one of --s or --t".into())),
            }
        }
        Command::Scan { t, n_min, n_max, geometric_step, m_rule } => {
            let rule: MRule = m_rule.parse()?;
            let ns = asymptotics::geometric_ladder(n_min, n_max, geometric_step)?;
            let rows = asymptotics::clt_scan_with(t, &ns, rule, &opts)?;
            let rows: Vec<ScanRow> = rows.into_iter().map(ScanRow).collect();
            emit(&rows, false, fmt, out)
        }
        Command::Bounds { lattice, beta } => {
            let reports = asymptotics::bound_suite_with(lattice.spec()?, beta, &opts)?;
            let rows: Vec<BoundRow> = reports.into_iter().map(BoundRow).collect();
            emit(&rows, false, fmt, out)
        }
        Command::Oracle { lattice, spin_cap } => {
            let eo = EnumerateOptions { spin_cap, workers: cli.threads };
            let pmf = oracle::enumerate_pmf_with(lattice.spec()?, &eo)?;
            let rows: Vec<HistogramRow> = pmf
                .counts
                .iter()
                .map(|(&energy, &count)| HistogramRow { energy, count })
                .collect();
            emit(&rows, false, fmt, out)
        }
        Command::Mc { lattice, beta, sweeps, burn_in, seed, algorithm, chains, series } => {
            let algorithm: Algorithm = algorithm.parse()?;
            let config = McConfig { spec: lattice.spec()?, beta, sweeps, burn_in, seed, algorithm };
            let est = match series {
                Some(path) => {
                    if chains != 1 {
                        return Err(CliError::Usage("--series records a single chain".into()));
                    }
                    let (est, energies) = montecarlo::run_with_series(&config)?;
                    let mut w = open(Some(&path))?;
                    montecarlo::write_series_csv(&mut w, &energies)?;
                    w.flush()?;
                    est
                }
                None => montecarlo::run_chains(&config, chains)?,
            };
            emit(&[McRow(est)], true, fmt, out)
        }
        Command::Terms { lattice, t } => {
            let terms = asymptotics::proposition_terms_with(lattice.spec()?, t, &opts)?;
            emit(&[TermsRow { terms, total: terms.total() }], true, fmt, out)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
