//! Run configuration and batch orchestration.
//!
//! A run executes its stages in order (simulate, ingest, estimate, report),
//! persists each stage's panels as CSV in the output directory and finishes
//! by writing `manifest.json`. Later stages recompute earlier ones in memory,
//! so every command is self-contained and deterministic.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytics::{
    annual_beta_table, beta_spread_series, beta_trend_table, fm_table, hi_beta_series, hi_beta_sorts,
    high_ownership_membership, index_comparison, market_volatility_series, size_terciles, spread_points,
    spread_table, summary_stats, turnover_by_ownership, AnalysisInputs, Characteristics, Dependent, FigureSeries,
    FmBlock, FmModel, Regressor, RegressorSource, ReportTable, SizeGroups,
};
use crate::commonality::{annual_beta_means, estimate_panel, write_beta_panel, BetaPanel, ControlSet, EstimationConfig};
use crate::error::{Error, Result};
use crate::illiq::{write_market_days, HiPortfolio, MarketPanel, MarketWeighting};
use crate::ingest::{
    build_firm_quarters, load_daily_bars, load_ownership, write_daily_bars, write_day_drops, write_ownership,
    write_rejections, BarSchema, DailyBar, FilterConfig, FirmQuarterBuild, IndexMembership, OwnershipPanel,
    OwnershipSchema, SharesLookup, TickSchedule,
};
use crate::synth::{generate_panel, ground_truth_report, write_firm_quarter_truth, SynthConfig};
use crate::types::{OwnershipCategory, SizeGroup};

/// Report names accepted in `reports`.
pub const KNOWN_REPORTS: [&str; 17] = [
    "table1", "table2", "table3", "table4", "table5", "table6", "table7", "table8", "table9", "tableA1", "tableA2",
    "tableA3", "tableA4", "tableA5", "fig1", "fig2", "fig3",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    pub bars: PathBuf,
    pub ownership: PathBuf,
    #[serde(default)]
    pub index: Option<PathBuf>,
    #[serde(default)]
    pub bar_schema: BarSchema,
    #[serde(default)]
    pub ownership_schema: OwnershipSchema,
}

/// Alternative sample filters re-estimated for the robustness table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariantConfig {
    pub min_prices: Vec<f64>,
    pub min_obs: Vec<usize>,
}

impl Default for VariantConfig {
    fn default() -> Self {
        VariantConfig {
            min_prices: vec![0.02, 0.05],
            min_obs: vec![40],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<InputPaths>,
    pub synth: Option<SynthConfig>,
    pub filters: FilterConfig,
    pub tick_schedule: TickSchedule,
    pub market_weighting: MarketWeighting,
    /// Category whose top bucket forms the high-ownership portfolio.
    pub hi_category: OwnershipCategory,
    pub hi_buckets: usize,
    pub nw_lags: usize,
    pub controls: ControlSet,
    pub leave_one_out: bool,
    pub exclude_from_hi: bool,
    pub out_dir: PathBuf,
    pub max_workers: Option<usize>,
    pub reports: Vec<String>,
    pub variants: VariantConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            synth: None,
            filters: FilterConfig::default(),
            tick_schedule: TickSchedule::default(),
            market_weighting: MarketWeighting::Value,
            hi_category: OwnershipCategory::ForeignInstitution,
            hi_buckets: 10,
            nw_lags: 2,
            controls: ControlSet::Full,
            leave_one_out: true,
            exclude_from_hi: true,
            out_dir: PathBuf::from("out"),
            max_workers: None,
            reports: KNOWN_REPORTS.iter().map(|s| s.to_string()).collect(),
            variants: VariantConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parses a TOML file; relative paths inside it are taken relative to the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(inp) = cfg.input.as_mut() {
            rebase(&mut inp.bars);
            rebase(&mut inp.ownership);
            if let Some(i) = inp.index.as_mut() {
                rebase(i);
            }
        }
        rebase(&mut cfg.out_dir);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.input, &self.synth) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either [input] or [synth], not both".into()));
            }
            (None, None) => return Err(Error::Config("one of [input] or [synth] is required".into())),
            (None, Some(s)) => s.validate()?,
            (Some(_), None) => {}
        }
        self.filters.validate()?;
        self.tick_schedule.validate()?;
        if self.hi_buckets < 2 {
            return Err(Error::Config("hi_buckets must be at least 2".into()));
        }
        if let Some(bad) = self.reports.iter().find(|r| !KNOWN_REPORTS.contains(&r.as_str())) {
            return Err(Error::Config(format!(
                "unknown report `{bad}`; known reports are {}",
                KNOWN_REPORTS.join(", ")
            )));
        }
        if self.max_workers == Some(0) {
            return Err(Error::Config("max_workers must be positive".into()));
        }
        for p in &self.variants.min_prices {
            if p.is_nan() || *p < 0.0 {
                return Err(Error::Config(format!("variant min price must be non-negative, got {p}")));
            }
        }
        if let Some(m) = self.variants.min_obs.iter().find(|m| **m < 2) {
            return Err(Error::Config(format!("variant min_obs must be at least 2, got {m}")));
        }
        Ok(())
    }

    /// Digest of every setting that can change results. Output location,
    /// worker count and input locations are excluded; input contents are
    /// digested separately in the manifest.
    pub fn config_hash(&self) -> Result<String> {
        let mut v = serde_json::to_value(self).map_err(|e| Error::Serialize(e.to_string()))?;
        let obj = v.as_object_mut().expect("config serializes to an object");
        obj.remove("out_dir");
        obj.remove("max_workers");
        if let Some(inp) = obj.get_mut("input").and_then(|i| i.as_object_mut()) {
            for k in ["bars", "ownership", "index"] {
                inp.remove(k);
            }
        }
        let canonical = serde_json::to_string(&v).map_err(|e| Error::Serialize(e.to_string()))?;
        Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
    }

    fn estimation(&self) -> EstimationConfig {
        EstimationConfig {
            leave_one_out: self.leave_one_out,
            exclude_from_hi: self.exclude_from_hi,
            controls: self.controls,
            min_obs: self.filters.min_obs_per_quarter,
        }
    }

    fn wants(&self, report: &str) -> bool {
        self.reports.iter().any(|r| r == report)
    }

    fn resolved_inputs(&self) -> InputPaths {
        match &self.input {
            Some(i) => i.clone(),
            None => {
                let dir = self.out_dir.join("synthetic");
                InputPaths {
                    bars: dir.join("bars.csv"),
                    ownership: dir.join("ownership.csv"),
                    index: Some(dir.join("index.csv")),
                    bar_schema: BarSchema::default(),
                    ownership_schema: OwnershipSchema::default(),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Ingest,
    Estimate,
    Report,
    Simulate,
    All,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Estimate => "estimate",
            Command::Report => "report",
            Command::Simulate => "simulate",
            Command::All => "all",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    /// Path relative to the output directory for outputs; as given for inputs.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub row_counts: BTreeMap<String, usize>,
    pub stages: Vec<StageTiming>,
    pub complete: bool,
    pub error: Option<String>,
}

pub fn file_digest(path: &Path, shown_as: String) -> Result<FileDigest> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(FileDigest {
        path: shown_as,
        sha256: hex::encode(Sha256::digest(&bytes)),
        bytes: bytes.len() as u64,
    })
}

struct Run<'a> {
    cfg: &'a RunConfig,
    out: PathBuf,
    manifest: Manifest,
}

impl Run<'_> {
    fn output(&mut self, rel: &str) -> Result<()> {
        let d = file_digest(&self.out.join(rel), rel.to_string())?;
        self.manifest.outputs.push(d);
        Ok(())
    }

    fn count(&mut self, name: &str, n: usize) {
        self.manifest.row_counts.insert(name.to_string(), n);
    }

    fn timed<T>(&mut self, stage: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let t0 = Instant::now();
        log::info!("stage {stage}: start");
        let r = f(self);
        self.manifest.stages.push(StageTiming {
            stage: stage.to_string(),
            seconds: t0.elapsed().as_secs_f64(),
        });
        r
    }
}

/// Loaded and filtered inputs.
pub struct Ingested {
    pub bars: Vec<DailyBar>,
    pub ownership: OwnershipPanel,
    pub index: IndexMembership,
    pub build: FirmQuarterBuild,
}

/// Estimation outputs over the main sample.
pub struct Estimated {
    pub characteristics: Characteristics,
    pub size_groups: SizeGroups,
    pub market: MarketPanel,
    pub betas: BetaPanel,
}

/// Runs `command` and writes the manifest, also on failure. An error is
/// returned if any stage failed; the manifest then has `complete = false`.
pub fn run(command: Command, cfg: &RunConfig) -> Result<Manifest> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let mut run = Run {
        cfg,
        out: cfg.out_dir.clone(),
        manifest: Manifest {
            command: command.as_str().to_string(),
            config_hash: cfg.config_hash()?,
            inputs: Vec::new(),
            outputs: Vec::new(),
            row_counts: BTreeMap::new(),
            stages: Vec::new(),
            complete: false,
            error: None,
        },
    };
    let result = match cfg.max_workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
            pool.install(|| execute(command, &mut run))
        }
        None => execute(command, &mut run),
    };
    match &result {
        Ok(()) => run.manifest.complete = true,
        Err(e) => run.manifest.error = Some(e.to_string()),
    }
    let path = run.out.join("manifest.json");
    let text = serde_json::to_string_pretty(&run.manifest).map_err(|e| Error::Serialize(e.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    result.map(|()| run.manifest)
}

fn execute(command: Command, run: &mut Run<'_>) -> Result<()> {
    let synth_first = matches!(command, Command::Simulate) || (command == Command::All && run.cfg.synth.is_some());
    if synth_first {
        run.timed("simulate", simulate)?;
    }
    if command == Command::Simulate {
        return Ok(());
    }
    let ingested = run.timed("ingest", ingest)?;
    if command == Command::Ingest {
        return Ok(());
    }
    let estimated = run.timed("estimate", |r| estimate(r, &ingested))?;
    if command == Command::Estimate {
        return Ok(());
    }
    run.timed("report", |r| report(r, &ingested, &estimated))
}

fn simulate(run: &mut Run<'_>) -> Result<()> {
    let Some(sc) = run.cfg.synth.as_ref() else {
        return Err(Error::Config("`simulate` needs a [synth] section".into()));
    };
    let panel = generate_panel(sc)?;
    let dir = run.out.join("synthetic");
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_daily_bars(&dir.join("bars.csv"), &panel.bars)?;
    write_ownership(&dir.join("ownership.csv"), &panel.ownership)?;
    panel.index.write(&dir.join("index.csv"))?;
    ground_truth_report(&dir.join("truth_stocks.csv"), &panel.truth)?;
    write_firm_quarter_truth(&dir.join("truth_firm_quarters.csv"), &panel.truth)?;
    for f in ["bars.csv", "ownership.csv", "index.csv", "truth_stocks.csv", "truth_firm_quarters.csv"] {
        run.output(&format!("synthetic/{f}"))?;
    }
    run.count("synthetic_bars", panel.bars.len());
    run.count("synthetic_ownership", panel.ownership.len());
    Ok(())
}

fn ingest(run: &mut Run<'_>) -> Result<Ingested> {
    let inputs = run.cfg.resolved_inputs();
    if run.cfg.synth.is_some() && !inputs.bars.exists() {
        return Err(Error::Config(format!(
            "{} not found; run `simulate` first",
            inputs.bars.display()
        )));
    }
    let bars = load_daily_bars(&inputs.bars, &inputs.bar_schema)?;
    write_rejections(&run.out.join("bars_rejections.csv"), &bars.rejections)?;
    run.output("bars_rejections.csv")?;
    let shares = SharesLookup::from_bars(&bars.records);
    let own = load_ownership(&inputs.ownership, &inputs.ownership_schema, Some(&shares))?;
    write_rejections(&run.out.join("ownership_rejections.csv"), &own.rejections)?;
    run.output("ownership_rejections.csv")?;
    let index = match &inputs.index {
        Some(p) => IndexMembership::load(p)?,
        None => IndexMembership::new(),
    };
    for (name, p) in [("bars", Some(&inputs.bars)), ("ownership", Some(&inputs.ownership)), ("index", inputs.index.as_ref())] {
        if let Some(p) = p {
            run.manifest.inputs.push(file_digest(p, format!("{name}:{}", p.file_name().map_or_else(String::new, |f| f.to_string_lossy().into_owned())))?);
        }
    }
    run.count("bars_read", bars.rows_read);
    run.count("bars_rejected", bars.rejections.len());
    run.count("ownership_read", own.rows_read);
    run.count("ownership_rejected", own.rejections.len());
    run.count("index_entries", index.len());

    let build = build_firm_quarters(&bars.records, &run.cfg.filters, &run.cfg.tick_schedule)?;
    for w in &build.warnings {
        log::warn!("{w}");
    }
    write_day_drops(&run.out.join("day_drops.csv"), &build.drops)?;
    run.output("day_drops.csv")?;
    write_sample(&run.out.join("firm_quarters.csv"), &build)?;
    run.output("firm_quarters.csv")?;
    run.count("firm_quarters", build.series.len());
    run.count("surviving_days", build.surviving_days());
    for (reason, n) in build.drop_counts() {
        run.count(&format!("dropped_{}", reason.code()), n);
    }
    Ok(Ingested {
        ownership: OwnershipPanel::from_snapshots(&own.records),
        bars: bars.records,
        index,
        build,
    })
}

fn write_sample(path: &Path, build: &FirmQuarterBuild) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["stock_id", "quarter", "n_days", "lagged_market_cap"])?;
    for s in &build.series {
        w.write_record([
            s.stock_id.to_string(),
            s.quarter.to_string(),
            s.days.len().to_string(),
            s.lagged_market_cap.map(|c| c.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Market aggregate, high-ownership portfolio and firm-quarter estimates for one sample.
pub fn estimate_sample(
    build: &FirmQuarterBuild,
    ownership: &OwnershipPanel,
    cfg: &RunConfig,
    weighting: MarketWeighting,
    with_hi: bool,
) -> (MarketPanel, Option<HiPortfolio>, BetaPanel) {
    let market = MarketPanel::build(&build.series, weighting);
    let hi = with_hi.then(|| {
        let members = high_ownership_membership(&build.series, ownership, cfg.hi_category, cfg.hi_buckets);
        HiPortfolio::build(&build.series, &members)
    });
    let betas = estimate_panel(&build.series, &market, hi.as_ref(), &cfg.estimation());
    (market, hi, betas)
}

fn estimate(run: &mut Run<'_>, ing: &Ingested) -> Result<Estimated> {
    let (market, hi, betas) = estimate_sample(&ing.build, &ing.ownership, run.cfg, run.cfg.market_weighting, true);
    let hi = hi.expect("requested");
    write_market_days(&run.out.join("market_days.csv"), &market.days())?;
    run.output("market_days.csv")?;
    write_hi_days(&run.out.join("hi_portfolio.csv"), &hi)?;
    run.output("hi_portfolio.csv")?;
    write_beta_panel(&run.out.join("betas.csv"), &betas.estimates)?;
    run.output("betas.csv")?;
    let mut w = csv::Writer::from_path(run.out.join("skipped_estimates.csv"))?;
    w.write_record(["stock_id", "quarter", "stage", "reason"])?;
    for s in &betas.skipped {
        w.write_record([s.stock_id.as_str(), &s.quarter.to_string(), s.stage, &s.reason])?;
    }
    w.flush().map_err(|e| Error::io(run.out.join("skipped_estimates.csv"), e))?;
    run.output("skipped_estimates.csv")?;
    run.count("beta_estimates", betas.estimates.len());
    run.count("beta_skipped", betas.skipped.len());
    Ok(Estimated {
        characteristics: Characteristics::from_bars(&ing.bars),
        size_groups: size_terciles(&ing.build.series),
        market,
        betas,
    })
}

fn write_hi_days(path: &Path, hi: &HiPortfolio) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["date", "n_members", "illiq_hi", "delta_illiq_hi"])?;
    for d in hi.days() {
        w.write_record([
            d.date.to_string(),
            d.n_members.to_string(),
            d.illiq_hi.to_string(),
            d.delta_illiq_hi.map(|x| x.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn ownership_models(extra: &[Regressor]) -> Vec<FmModel> {
    use OwnershipCategory::*;
    let sets: [(&str, &[Regressor]); 4] = [
        ("M1", &[Regressor::Ownership(Institution)]),
        ("M2", &[Regressor::Ownership(ForeignInstitution)]),
        ("M3", &[Regressor::Ownership(LocalInstitution)]),
        (
            "M4",
            &[Regressor::Ownership(ForeignInstitution), Regressor::Ownership(LocalInstitution)],
        ),
    ];
    sets.iter()
        .map(|(l, own)| {
            let regs: Vec<Regressor> = own.iter().chain(extra).copied().collect();
            FmModel::new(*l, &regs)
        })
        .collect()
}

/// Models of liquidity betas on ownership with size and illiquidity controls.
pub fn liquidity_beta_models() -> Vec<FmModel> {
    use OwnershipCategory::*;
    use Regressor::*;
    vec![
        FmModel::new("M1", &[Ownership(Institution)]),
        FmModel::new("M2", &[Ownership(Institution), Size, Illiq]),
        FmModel::new("M3", &[Ownership(ForeignInstitution), Size, Illiq]),
        FmModel::new("M4", &[Ownership(LocalInstitution), Size, Illiq]),
        FmModel::new("M5", &[Ownership(ForeignInstitution), Ownership(LocalInstitution), Size, Illiq]),
    ]
}

const ALL_GROUPS: [Option<SizeGroup>; 4] = [None, Some(SizeGroup::Large), Some(SizeGroup::Mid), Some(SizeGroup::Small)];

fn report(run: &mut Run<'_>, ing: &Ingested, est: &Estimated) -> Result<()> {
    let cfg = run.cfg;
    let source = RegressorSource {
        characteristics: &est.characteristics,
        ownership: &ing.ownership,
        index: &ing.index,
    };
    let market_days = est.market.days();
    let inputs = AnalysisInputs {
        series: &ing.build.series,
        market_days: &market_days,
        estimates: &est.betas.estimates,
        source,
        size_groups: &est.size_groups,
        hi_category: cfg.hi_category,
        nw_lags: cfg.nw_lags,
    };
    let estimates = &est.betas.estimates;
    let block = |label: &str, dependent, models, groups: &[Option<SizeGroup>]| FmBlock {
        label: label.to_string(),
        estimates,
        size_groups: &est.size_groups,
        dependent,
        models,
        groups: groups.to_vec(),
    };
    let mut tables: Vec<ReportTable> = Vec::new();
    let mut figures: Vec<FigureSeries> = Vec::new();
    if cfg.wants("table1") {
        tables.push(summary_stats(&inputs));
    }
    if cfg.wants("table2") {
        tables.push(annual_beta_table(&annual_beta_means(estimates, &est.size_groups)?));
    }
    if cfg.wants("table3") {
        tables.push(beta_trend_table(estimates, &est.size_groups, cfg.nw_lags));
    }
    if cfg.wants("table4") {
        tables.push(turnover_by_ownership(&inputs));
    }
    if cfg.wants("table5") {
        let b = block("", Dependent::BetaL, liquidity_beta_models(), &ALL_GROUPS);
        tables.push(fm_table("table5", "Liquidity betas on lagged ownership", &[b], &source, cfg.nw_lags));
    }
    if cfg.wants("table6") {
        tables.push(spread_table(&spread_points(estimates, &source, &est.size_groups), cfg.nw_lags));
    }
    if cfg.wants("table7") {
        tables.push(hi_beta_sorts(&inputs));
    }
    if cfg.wants("table8") {
        let own = Regressor::Ownership(cfg.hi_category);
        let models = vec![
            FmModel::new("M1", &[own]),
            FmModel::new("M2", &[own, Regressor::Size, Regressor::Illiq]),
        ];
        let b = block("", Dependent::BetaHi, models, &ALL_GROUPS);
        tables.push(fm_table("table8", "High-ownership betas on lagged ownership", &[b], &source, cfg.nw_lags));
    }
    if cfg.wants("table9") {
        tables.push(index_comparison(&inputs));
    }
    if cfg.wants("tableA1") || cfg.wants("tableA2") {
        tables.extend(variant_tables(run, ing, &source)?);
    }
    if cfg.wants("tableA3") {
        let a = block("Panel A: Pastor-Stambaugh illiquidity", Dependent::BetaL, ownership_models(&[Regressor::Size, Regressor::PsIlliq]), &[None]);
        let b = block("Panel B: quoted spread", Dependent::BetaL, ownership_models(&[Regressor::Size, Regressor::QuotedSpread]), &[None]);
        tables.push(fm_table("tableA3", "Alternative illiquidity controls", &[a, b], &source, cfg.nw_lags));
    }
    if cfg.wants("tableA4") {
        let extra = [
            Regressor::Size,
            Regressor::Illiq,
            Regressor::BookToMarket,
            Regressor::DividendYield,
            Regressor::StdRet,
            Regressor::PastReturn,
        ];
        let b = block("", Dependent::BetaL, ownership_models(&extra), &[None]);
        tables.push(fm_table("tableA4", "Additional firm controls", &[b], &source, cfg.nw_lags));
    }
    if cfg.wants("tableA5") {
        use OwnershipCategory::*;
        use Regressor::*;
        let f = Ownership(ForeignInstitution);
        let models = vec![
            FmModel::new("M1", &[f]),
            FmModel::new("M2", &[f, Size]),
            FmModel::new("M3", &[f, Size, Illiq]),
            FmModel::new("M4", &[f, Size, Illiq, Ownership(LocalInstitution)]),
        ];
        let b = block("", Dependent::Autocorr, models, &[None]);
        tables.push(fm_table("tableA5", "Return autocorrelation on lagged ownership", &[b], &source, cfg.nw_lags));
    }
    if cfg.wants("fig1") {
        figures.push(market_volatility_series(&market_days));
    }
    if cfg.wants("fig2") {
        figures.push(beta_spread_series(estimates, &est.size_groups));
    }
    if cfg.wants("fig3") {
        figures.push(hi_beta_series(estimates));
    }
    for t in &tables {
        t.write(&run.out)?;
        run.output(&format!("{}.csv", t.name))?;
        run.output(&format!("{}.txt", t.name))?;
    }
    for f in &figures {
        f.write(&run.out)?;
        run.output(&format!("{}.csv", f.name))?;
    }
    run.count("reports", tables.len() + figures.len());
    Ok(())
}

/// Equal-weighted market and alternative-filter re-estimations, all stocks only.
fn variant_tables(run: &Run<'_>, ing: &Ingested, source: &RegressorSource<'_>) -> Result<Vec<ReportTable>> {
    let cfg = run.cfg;
    let models = liquidity_beta_models();
    let mut out = Vec::new();
    if cfg.wants("tableA1") {
        let alt = match cfg.market_weighting {
            MarketWeighting::Value => MarketWeighting::Equal,
            MarketWeighting::Equal => MarketWeighting::Value,
        };
        let (_, _, betas) = estimate_sample(&ing.build, &ing.ownership, cfg, alt, false);
        let groups = size_terciles(&ing.build.series);
        let label = match alt {
            MarketWeighting::Equal => "Equal-weighted market",
            MarketWeighting::Value => "Value-weighted market",
        };
        let b = FmBlock {
            label: label.into(),
            estimates: &betas.estimates,
            size_groups: &groups,
            dependent: Dependent::BetaL,
            models: models.clone(),
            groups: vec![None],
        };
        out.push(fm_table("tableA1", "Liquidity betas against the alternatively weighted market", &[b], source, cfg.nw_lags));
    }
    if cfg.wants("tableA2") {
        let mut filters: Vec<(String, FilterConfig)> = Vec::new();
        for p in &cfg.variants.min_prices {
            filters.push((format!("Minimum price {p}"), FilterConfig { min_price: *p, ..cfg.filters.clone() }));
        }
        for m in &cfg.variants.min_obs {
            filters.push((
                format!("Minimum {m} observations"),
                FilterConfig {
                    min_obs_per_quarter: *m,
                    ..cfg.filters.clone()
                },
            ));
        }
        let mut runs = Vec::new();
        for (label, f) in filters {
            let build = build_firm_quarters(&ing.bars, &f, &cfg.tick_schedule)?;
            let vcfg = RunConfig {
                filters: f,
                ..cfg.clone()
            };
            let (_, _, betas) = estimate_sample(&build, &ing.ownership, &vcfg, cfg.market_weighting, false);
            let groups = size_terciles(&build.series);
            runs.push((label, betas, groups));
        }
        let blocks: Vec<FmBlock<'_>> = runs
            .iter()
            .map(|(label, betas, groups)| FmBlock {
                label: label.clone(),
                estimates: &betas.estimates,
                size_groups: groups,
                dependent: Dependent::BetaL,
                models: models.clone(),
                groups: vec![None],
            })
            .collect();
        out.push(fm_table("tableA2", "Alternative sample filters", &blocks, source, cfg.nw_lags));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_location_and_workers() {
        let a = RunConfig {
            synth: Some(SynthConfig::default()),
            ..RunConfig::default()
        };
        let b = RunConfig {
            out_dir: PathBuf::from("elsewhere"),
            max_workers: Some(3),
            ..a.clone()
        };
        assert_eq!(a.config_hash().unwrap(), b.config_hash().unwrap());
        let c = RunConfig { nw_lags: 3, ..a.clone() };
        assert_ne!(a.config_hash().unwrap(), c.config_hash().unwrap());
    }

    #[test]
    fn exactly_one_data_source() {
        let both = RunConfig {
            synth: Some(SynthConfig::default()),
            input: Some(InputPaths {
                bars: "b.csv".into(),
                ownership: "o.csv".into(),
                index: None,
                bar_schema: BarSchema::default(),
                ownership_schema: OwnershipSchema::default(),
            }),
            ..RunConfig::default()
        };
        assert!(both.validate().is_err());
        assert!(RunConfig::default().validate().is_err());
    }
}
