//! Batch experiment commands behind the `fovpart` binary.
//!
//! Each command loads an [`ExperimentConfig`], applies command-line
//! overrides and writes its results under an output directory. Every file
//! starts with a `# config_hash=... seed=...` provenance line (a
//! `config_hash` field in JSON files).

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use fovpart::config::ExperimentConfig;
use fovpart::emulator::{prepare_scenario, run_scenario, PreparedScenario, ScenarioRun, StatsRow};
use fovpart::overhead::OverheadReport;
use fovpart::partition::{check_constraints, ConstraintViolation, DomainAssignment, PartitionStats};
use fovpart::Strategy;
use rayon::prelude::*;
use serde::Serialize;

/// Overrides shared by the `partition` and `emulate` commands.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seeds: Option<Vec<u64>>,
    pub strategies: Option<Vec<Strategy>>,
    pub gammas: Option<Vec<f64>>,
    pub slots: Option<Range<usize>>,
    pub threads: Option<usize>,
}

/// Parses `a..b`, `a..` or a single slot index `a`.
pub fn parse_slot_range(text: &str) -> Result<Range<usize>> {
    let range = match text.split_once("..") {
        Some((a, b)) => {
            let start = if a.is_empty() { 0 } else { a.parse().context("slot range start")? };
            let end = if b.is_empty() { usize::MAX } else { b.parse().context("slot range end")? };
            start..end
        }
        None => {
            let i: usize = text.parse().context("slot index")?;
            i..i + 1
        }
    };
    ensure!(range.start < range.end, "empty slot range {text:?}");
    Ok(range)
}

/// Loads the config at `path`, or the built-in desk scenario without one,
/// and applies the overrides.
pub fn load_config(path: Option<&Path>, opts: &RunOptions) -> Result<ExperimentConfig> {
    let mut cfg = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::desk(),
    };
    if let Some(s) = &opts.seeds {
        cfg.run.seeds = s.clone();
    }
    if let Some(s) = &opts.strategies {
        cfg.run.strategies = s.clone();
    }
    if let Some(g) = &opts.gammas {
        cfg.run.gammas = g.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn prepare(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<PreparedScenario> {
    let mut prepared = prepare_scenario(cfg.scenario_spec()?)?;
    if let Some(r) = &opts.slots {
        ensure!(r.start < prepared.slots.len(), "slot range starts past the last slot ({})", prepared.slots.len());
        prepared.restrict(r.clone());
    }
    Ok(prepared)
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    Ok(b.build()?)
}

/// Every `(strategy, gamma, seed)` combination in output order.
fn combos(cfg: &ExperimentConfig) -> Vec<(Strategy, f64, u64)> {
    let mut out = Vec::new();
    for &seed in &cfg.run.seeds {
        for &strategy in &cfg.run.strategies {
            for &gamma in &cfg.run.gammas {
                out.push((strategy, gamma, seed));
            }
        }
    }
    out
}

fn seed_dir(out_dir: &Path, seed: u64) -> Result<PathBuf> {
    let dir = out_dir.join(format!("seed-{seed}"));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn run_label(strategy: Strategy, gamma: f64) -> String {
    format!("{strategy}_g{gamma}")
}

#[derive(Debug, Serialize)]
struct ConstraintRun {
    strategy: Strategy,
    gamma: f64,
    slots: usize,
    violations: Vec<SlotViolation>,
}

#[derive(Debug, Serialize)]
struct SlotViolation {
    slot: usize,
    #[serde(flatten)]
    violation: ConstraintViolation,
}

#[derive(Debug, Serialize)]
struct ConstraintReport {
    config_hash: String,
    seed: u64,
    runs: Vec<ConstraintRun>,
}

/// Outcome of [`cmd_partition`].
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSummary {
    pub files: Vec<PathBuf>,
    pub violations: usize,
}

/// Partitions every slot for each configured strategy, scale and seed.
/// Writes `seed-N/assignments_<strategy>_g<gamma>.csv`,
/// `seed-N/partition_stats_<strategy>_g<gamma>.json` and
/// `seed-N/constraints.json`.
pub fn cmd_partition(cfg: &ExperimentConfig, opts: &RunOptions, out_dir: &Path) -> Result<PartitionSummary> {
    let prepared = prepare(cfg, opts)?;
    let combos = combos(cfg);
    type Parts = Vec<(DomainAssignment, PartitionStats)>;
    let results: Vec<Parts> = pool(opts.threads)?.install(|| {
        combos
            .par_iter()
            .map(|&(strategy, gamma, seed)| {
                prepared
                    .partition(strategy, gamma, seed)
                    .with_context(|| format!("partitioning with {strategy} at gamma={gamma} seed={seed}"))
            })
            .collect::<Result<_>>()
    })?;

    let mut files = Vec::new();
    let mut total_violations = 0;
    let mut reports: BTreeMap<u64, ConstraintReport> = BTreeMap::new();
    for (&(strategy, gamma, seed), parts) in combos.iter().zip(&results) {
        let dir = seed_dir(out_dir, seed)?;
        let label = run_label(strategy, gamma);
        let assignments: Vec<DomainAssignment> = parts.iter().map(|(a, _)| a.clone()).collect();

        let path = dir.join(format!("assignments_{label}.csv"));
        let mut w = create(&path)?;
        writeln!(w, "{}", cfg.provenance(Some(seed)))?;
        DomainAssignment::write_csv(&assignments, &mut w)?;
        w.flush()?;
        files.push(path);

        let path = dir.join(format!("partition_stats_{label}.json"));
        let stats: Vec<&PartitionStats> = parts.iter().map(|(_, s)| s).collect();
        write_json(
            &path,
            &serde_json::json!({
                "config_hash": cfg.hash(),
                "seed": seed,
                "strategy": strategy,
                "gamma": gamma,
                "slots": stats,
            }),
        )?;
        files.push(path);

        let mut violations = Vec::new();
        for (slot, a) in prepared.slots.iter().zip(&assignments) {
            for v in check_constraints(a, &slot.snapshot, &slot.coverage) {
                violations.push(SlotViolation { slot: slot.index, violation: v });
            }
        }
        total_violations += violations.len();
        reports
            .entry(seed)
            .or_insert_with(|| ConstraintReport { config_hash: cfg.hash(), seed, runs: Vec::new() })
            .runs
            .push(ConstraintRun { strategy, gamma, slots: assignments.len(), violations });
    }
    for (seed, report) in &reports {
        let path = seed_dir(out_dir, *seed)?.join("constraints.json");
        write_json(&path, report)?;
        files.push(path);
    }
    Ok(PartitionSummary { files, violations: total_violations })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Totals of one `(strategy, gamma, seed)` emulation run.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct SummaryRow {
    pub strategy: String,
    pub gamma: f64,
    pub seed: u64,
    pub slots: usize,
    pub requests: usize,
    pub drops: usize,
    pub drop_rate: f64,
    pub mean_resp_s: f64,
    pub bytes_flow: usize,
    pub bytes_sync: usize,
    pub bytes_ho: usize,
    pub migrations: usize,
    /// Duration-weighted means of the analytic overheads.
    pub w_flow: f64,
    pub w_ctl: f64,
    pub objective: f64,
}

impl SummaryRow {
    pub fn from_run(run: &ScenarioRun) -> Self {
        Self {
            strategy: run.strategy.to_string(),
            gamma: run.gamma,
            seed: run.seed,
            slots: run.stats.len(),
            requests: run.stats.iter().map(|s| s.requests).sum(),
            drops: run.stats.iter().map(|s| s.drops).sum(),
            drop_rate: run.drop_rate(),
            mean_resp_s: run.mean_response(),
            bytes_flow: run.stats.iter().map(|s| s.bytes_flow()).sum(),
            bytes_sync: run.stats.iter().map(|s| s.bytes_sync).sum(),
            bytes_ho: run.stats.iter().map(|s| s.bytes_ho).sum(),
            migrations: run.migrations(),
            w_flow: run.time_mean(|r| r.w_flow),
            w_ctl: run.time_mean(|r| r.w_ctl),
            objective: run.time_mean(|r| r.objective),
        }
    }
}

#[derive(Serialize)]
struct OverheadRun<'a> {
    strategy: Strategy,
    gamma: f64,
    reports: &'a [OverheadReport],
}

/// Emulates every configured combination. Per seed writes `stats.csv` (one
/// row per slot and run), `summary.csv` (one row per run) and
/// `overhead.json` (per-slot analytic reports).
pub fn cmd_emulate(cfg: &ExperimentConfig, opts: &RunOptions, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let prepared = prepare(cfg, opts)?;
    let combos = combos(cfg);
    let runs: Vec<ScenarioRun> = pool(opts.threads)?.install(|| {
        combos
            .par_iter()
            .map(|&(strategy, gamma, seed)| {
                run_scenario(&prepared, strategy, gamma, seed)
                    .with_context(|| format!("emulating {strategy} at gamma={gamma} seed={seed}"))
            })
            .collect::<Result<_>>()
    })?;

    let mut files = Vec::new();
    for &seed in &cfg.run.seeds {
        let dir = seed_dir(out_dir, seed)?;
        let mine: Vec<&ScenarioRun> = runs.iter().filter(|r| r.seed == seed).collect();

        let path = dir.join("stats.csv");
        let rows: Vec<StatsRow> =
            mine.iter().flat_map(|r| r.stats.iter().map(|s| StatsRow::from_stats(r.strategy.tag(), s))).collect();
        let mut w = create(&path)?;
        writeln!(w, "{}", cfg.provenance(Some(seed)))?;
        StatsRow::write_csv(&rows, &mut w)?;
        w.flush()?;
        files.push(path);

        let path = dir.join("summary.csv");
        let mut w = create(&path)?;
        writeln!(w, "{}", cfg.provenance(Some(seed)))?;
        let mut c = csv::Writer::from_writer(&mut w);
        for r in &mine {
            c.serialize(SummaryRow::from_run(r))?;
        }
        c.flush()?;
        drop(c);
        w.flush()?;
        files.push(path);

        let path = dir.join("overhead.json");
        let body: Vec<OverheadRun> =
            mine.iter().map(|r| OverheadRun { strategy: r.strategy, gamma: r.gamma, reports: &r.reports }).collect();
        write_json(&path, &serde_json::json!({ "config_hash": cfg.hash(), "seed": seed, "runs": body }))?;
        files.push(path);
    }
    Ok(files)
}

/// Reads a stats file and the config hash from its provenance line.
pub fn read_stats(path: &Path) -> Result<(Option<String>, Vec<StatsRow>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let hash = text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix('#'))
        .and_then(|rest| rest.split_whitespace().find_map(|kv| kv.strip_prefix("config_hash=")))
        .map(str::to_string);
    let rows = StatsRow::read_csv(text.as_bytes()).with_context(|| format!("reading {}", path.display()))?;
    Ok((hash, rows))
}

/// Mean and sample standard deviation; the deviation is zero for a single
/// value.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Per-run totals recovered from per-slot stats rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTotals {
    pub requests: usize,
    pub drops: usize,
    pub resp_weighted: f64,
    pub sync_delay_sum: f64,
    pub slots: usize,
    pub bytes_flow: usize,
    pub bytes_sync: usize,
    pub bytes_ho: usize,
}

impl RunTotals {
    fn add(&mut self, r: &StatsRow) {
        self.requests += r.requests;
        self.drops += r.drops;
        self.resp_weighted += r.mean_resp_s * (r.requests - r.drops) as f64;
        self.sync_delay_sum += r.sync_delay_s;
        self.slots += 1;
        self.bytes_flow += r.bytes_flow;
        self.bytes_sync += r.bytes_sync;
        self.bytes_ho += r.bytes_ho;
    }

    pub fn metrics(&self) -> [(&'static str, f64); 6] {
        let completed = self.requests - self.drops;
        [
            ("drop_rate", if self.requests > 0 { self.drops as f64 / self.requests as f64 } else { 0.0 }),
            ("mean_resp_s", if completed > 0 { self.resp_weighted / completed as f64 } else { 0.0 }),
            ("sync_delay_s", if self.slots > 0 { self.sync_delay_sum / self.slots as f64 } else { 0.0 }),
            ("bytes_flow", self.bytes_flow as f64),
            ("bytes_sync", self.bytes_sync as f64),
            ("bytes_ho", self.bytes_ho as f64),
        ]
    }
}

/// One aggregated value across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct ReportRow {
    pub strategy: String,
    pub gamma: f64,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub seeds: usize,
}

/// Key of a run within report aggregation: strategy, gamma bits.
type GroupKey = (String, u64);

/// Aggregates stats files across seeds into `comparison.csv` (long format,
/// every metric), one `<metric>_by_gamma.csv` series per metric, and prints
/// a drop-rate and response table to `table`.
pub fn cmd_report(inputs: &[PathBuf], out_dir: &Path, table: &mut impl Write) -> Result<Vec<PathBuf>> {
    ensure!(!inputs.is_empty(), "no stats files given");
    let mut hashes: Vec<String> = Vec::new();
    let mut runs: BTreeMap<GroupKey, BTreeMap<u64, RunTotals>> = BTreeMap::new();
    for path in inputs {
        let (hash, rows) = read_stats(path)?;
        if let Some(h) = hash {
            if !hashes.contains(&h) {
                hashes.push(h);
            }
        }
        for r in &rows {
            runs.entry((r.strategy.clone(), r.gamma.to_bits())).or_default().entry(r.seed).or_default().add(r);
        }
    }
    if runs.is_empty() {
        bail!("stats files contain no rows");
    }

    let mut rows: Vec<ReportRow> = Vec::new();
    let mut seeds: Vec<u64> = Vec::new();
    for ((strategy, gamma_bits), by_seed) in &runs {
        seeds.extend(by_seed.keys().filter(|s| !seeds.contains(s)).copied().collect::<Vec<_>>());
        let metrics: Vec<[(&str, f64); 6]> = by_seed.values().map(RunTotals::metrics).collect();
        for (i, (name, _)) in metrics[0].iter().enumerate() {
            let values: Vec<f64> = metrics.iter().map(|m| m[i].1).collect();
            let (mean, std) = mean_std(&values);
            rows.push(ReportRow {
                strategy: strategy.clone(),
                gamma: f64::from_bits(*gamma_bits),
                metric: name.to_string(),
                mean,
                std,
                seeds: values.len(),
            });
        }
    }
    rows.sort_by(|a, b| a.metric.cmp(&b.metric).then(a.strategy.cmp(&b.strategy)).then(a.gamma.total_cmp(&b.gamma)));
    seeds.sort_unstable();
    let provenance = format!(
        "# config_hash={} seeds={}",
        hashes.join(","),
        seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
    );

    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut files = Vec::new();
    let path = out_dir.join("comparison.csv");
    write_report_csv(&path, &provenance, rows.iter())?;
    files.push(path);
    let metrics: Vec<String> = {
        let mut m: Vec<String> = rows.iter().map(|r| r.metric.clone()).collect();
        m.dedup();
        m
    };
    for metric in &metrics {
        let path = out_dir.join(format!("{metric}_by_gamma.csv"));
        write_report_csv(&path, &provenance, rows.iter().filter(|r| &r.metric == metric))?;
        files.push(path);
    }

    writeln!(table, "{:<10} {:>6} {:>22} {:>22}", "strategy", "gamma", "drop_rate", "mean_resp_s")?;
    let lookup = |s: &str, g: f64, m: &str| rows.iter().find(|r| r.strategy == s && r.gamma == g && r.metric == m);
    for (strategy, gamma_bits) in runs.keys() {
        let g = f64::from_bits(*gamma_bits);
        let cell =
            |m: &str| lookup(strategy, g, m).map_or_else(String::new, |r| format!("{:.4} ± {:.4}", r.mean, r.std));
        writeln!(table, "{:<10} {:>6} {:>22} {:>22}", strategy, g, cell("drop_rate"), cell("mean_resp_s"))?;
    }
    Ok(files)
}

fn write_report_csv<'a>(path: &Path, provenance: &str, rows: impl Iterator<Item = &'a ReportRow>) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{provenance}")?;
    let mut c = csv::Writer::from_writer(&mut w);
    for r in rows {
        c.serialize(r)?;
    }
    c.flush()?;
    drop(c);
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slot_ranges() {
        assert_eq!(parse_slot_range("3..7").unwrap(), 3..7);
        assert_eq!(parse_slot_range("5").unwrap(), 5..6);
        assert_eq!(parse_slot_range("..4").unwrap(), 0..4);
        assert_eq!(parse_slot_range("2..").unwrap(), 2..usize::MAX);
        assert!(parse_slot_range("4..4").is_err());
        assert!(parse_slot_range("x").is_err());
    }

    #[test]
    fn mean_std_single_and_pair() {
        assert_eq!(mean_std(&[2.5]), (2.5, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn totals_weight_response_by_completed_requests() {
        let mut t = RunTotals::default();
        let row = |requests, drops, resp| StatsRow {
            slot: 0,
            strategy: "odc".into(),
            gamma: 1.0,
            seed: 1,
            requests,
            drops,
            drop_rate: 0.0,
            mean_resp_s: resp,
            p95_resp_s: 0.0,
            sync_delay_s: 0.0,
            bytes_flow: 0,
            bytes_sync: 0,
            bytes_ho: 0,
        };
        t.add(&row(10, 0, 1.0));
        t.add(&row(4, 2, 4.0));
        let m = t.metrics();
        assert_eq!(m[0], ("drop_rate", 2.0 / 14.0));
        assert_eq!(m[1], ("mean_resp_s", (10.0 + 8.0) / 12.0));
    }
}
