//! `pvtrade`: batch front end to the cost model.
//!
//! Exit codes: 0 on success, 1 when a command fails at run time, 2 on usage
//! errors (bad flags or values).

mod png;

use std::fmt::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use pvtrade_core::dispatch::{deseasonalize, optimize_gs, simulate_dispatch, InsolationSeries, DAYS_PER_YEAR};
use pvtrade_core::geo::anchors::AnchorTable;
use pvtrade_core::geo::eval::{evaluate_grid, latitude_profile, synthetic_grid, Grid, RunConfig};
use pvtrade_core::geo::io::{apply_yields, load_insolation_csv, load_yield_csv, write_outputs};
use pvtrade_core::geo::synthetic::{synthetic_anchor_table, synthetic_latitude_series, synthetic_weather_year, SyntheticClimate};
use pvtrade_core::synth::{build_synthetic, lcoe_curve, load_technology_table, technology_contributions, CostScenario};
use pvtrade_core::transmission::{transmission_breakdown, TransmissionSpec};
use pvtrade_core::{presets, PvCostInputs};

const INSOLATION_FILE: &str = "insolation.csv";
const YIELD_FILE: &str = "yields.csv";

#[derive(Debug, Parser)]
#[command(name = "pvtrade", version, about = "Solar PV with storage, backup and long-distance trade: cost model tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Scenario {
    Min,
    Max,
    Mean,
}

impl From<Scenario> for CostScenario {
    fn from(s: Scenario) -> Self {
        match s {
            Scenario::Min => CostScenario::Min,
            Scenario::Max => CostScenario::Max,
            Scenario::Mean => CostScenario::Mean,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Aggregate a technology table into one baseload/backup cost.
    SynthTech {
        /// Technology CSV; the bundled table when omitted.
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long, value_enum)]
        scenario: Scenario,
        /// Write the LCOE-vs-capacity-factor curve here.
        #[arg(long)]
        lcoe_csv: Option<PathBuf>,
        #[arg(long, default_value_t = 0.05)]
        cf_min: f64,
        #[arg(long, default_value_t = 96)]
        points: usize,
    },
    /// Evaluate every cell of a grid and write rasters, a latitude profile and a manifest.
    GridRun {
        #[arg(long)]
        config: PathBuf,
        /// Directory with insolation.csv (lat,lon,day,ghi) and optionally yields.csv.
        #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
        data: Option<PathBuf>,
        /// Use the synthetic zonal climate instead of data files.
        #[arg(long)]
        synthetic: bool,
        #[arg(long, default_value_t = 5.0)]
        lat_step: f64,
        #[arg(long, default_value_t = 5.0)]
        lon_step: f64,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; all cores when omitted.
        #[arg(long)]
        threads: Option<usize>,
        /// Also render a PNG per regime.
        #[arg(long)]
        png: bool,
    },
    /// Itemized unit cost of a transmission line.
    Transmission {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Anchor CSV; also read from PVTRADE_ANCHORS.
        #[arg(long)]
        anchors: Option<PathBuf>,
        /// Presets JSON; also read from PVTRADE_PRESETS.
        #[arg(long)]
        presets: Option<PathBuf>,
        /// Static files served outside /v1; also read from PVTRADE_STATIC.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
    },
    /// Regenerate the OCF / storage anchor table from the synthetic climate.
    Anchors {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        weather_years: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Cost-optimal generation and storage for one daily series.
    Dispatch {
        /// Single-column CSV of 365 daily yields (kWh/kWp); header optional.
        #[arg(long, conflicts_with = "lat", required_unless_present = "lat")]
        series: Option<PathBuf>,
        /// Synthetic weather year at this latitude.
        #[arg(long, allow_hyphen_values = true)]
        lat: Option<f64>,
        #[arg(long, default_value_t = 0)]
        year: u32,
        /// Remove the seasonal cycle first, as the anchor table does.
        #[arg(long)]
        deseasonalize: bool,
        /// Smooth representative year instead of a weather year.
        #[arg(long, requires = "lat")]
        smooth: bool,
        /// Daily state trace of the optimum.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::SynthTech { table, scenario, lcoe_csv, cf_min, points } => synth_tech(table.as_deref(), scenario.into(), lcoe_csv.as_deref(), cf_min, points),
        Command::GridRun { config, data, synthetic, lat_step, lon_step, out, threads, png } => {
            let source = if synthetic { GridSource::Synthetic { lat_step, lon_step } } else { GridSource::Data(data.expect("clap requires data")) };
            grid_run(&config, source, &out, threads, png)
        }
        Command::Transmission { spec, json } => transmission(&spec, json),
        Command::Serve { addr, anchors, presets, static_dir } => serve(addr, anchors, presets, static_dir),
        Command::Anchors { out, weather_years, seed } => anchors(&out, weather_years, seed),
        Command::Dispatch { series, lat, year, deseasonalize, smooth, trace } => dispatch(series.as_deref(), lat, year, deseasonalize, smooth, trace.as_deref()),
    }
}

fn synth_tech(table: Option<&Path>, scenario: CostScenario, lcoe_csv: Option<&Path>, cf_min: f64, points: usize) -> Result<()> {
    let specs = match table {
        Some(p) => load_technology_table(p)?,
        None => presets::bundled_technology_table(),
    };
    let bb = build_synthetic(&specs, scenario)?;
    println!("scenario {scenario}");
    println!("{:<28} {:>16} {:>14}", "technology", "fixed kUSD/MW-yr", "variable USD/MWh");
    for c in technology_contributions(&specs, scenario)? {
        println!("{:<28} {:>16.1} {:>14.2}", c.name, c.fixed, c.variable);
    }
    println!("f_B = {:.1} kUSD/MW-yr", bb.fixed_annual / 1000.0);
    println!("v_B = {:.1} USD/MWh", bb.variable_unit);
    println!("C_B = {:.2} USD/MWh at full load", bb.total_per_mwh());
    if let Some(path) = lcoe_csv {
        let mut text = String::from("capacity_factor,lcoe_usd_per_mwh\n");
        for (cf, lcoe) in lcoe_curve(&bb, cf_min, points)? {
            let _ = writeln!(text, "{cf},{lcoe}");
        }
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

enum GridSource {
    Data(PathBuf),
    Synthetic { lat_step: f64, lon_step: f64 },
}

fn load_data_dir(dir: &Path) -> Result<Grid> {
    if !dir.is_dir() {
        bail!("data directory {} does not exist", dir.display());
    }
    let insolation = dir.join(INSOLATION_FILE);
    if !insolation.is_file() {
        bail!(
            "{} is missing required inputs: {INSOLATION_FILE} (columns lat,lon,day,ghi; optional {YIELD_FILE} with lat,lon,kwh_per_kwp_year)",
            dir.display()
        );
    }
    let mut grid = load_insolation_csv(&insolation)?;
    let yields = dir.join(YIELD_FILE);
    if yields.is_file() {
        let unmatched = apply_yields(&mut grid, &load_yield_csv(&yields)?);
        if unmatched > 0 {
            eprintln!("warning: {unmatched} rows of {YIELD_FILE} match no insolation cell");
        }
    }
    if grid.cells.is_empty() {
        bail!("{} holds no complete cells", insolation.display());
    }
    Ok(grid)
}

fn grid_run(config: &Path, source: GridSource, out: &Path, threads: Option<usize>, png: bool) -> Result<()> {
    let text = std::fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let cfg = RunConfig::from_json(&text).with_context(|| format!("config {}", config.display()))?;
    let anchors = match &cfg.anchors {
        Some(p) => {
            let p = Path::new(p);
            let p = if p.is_relative() { config.parent().unwrap_or(Path::new(".")).join(p) } else { p.to_path_buf() };
            AnchorTable::load(&p)?
        }
        None => AnchorTable::bundled(),
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;
    let (run, profile) = pool.install(|| -> Result<_> {
        let grid = match source {
            GridSource::Data(dir) => load_data_dir(&dir)?,
            GridSource::Synthetic { lat_step, lon_step } => synthetic_grid(&SyntheticClimate::default(), lat_step, lon_step)?,
        };
        let run = evaluate_grid(&grid, &cfg, &anchors)?;
        let profile = latitude_profile(&run);
        Ok((run, profile))
    })?;
    let files = write_outputs(&run, &profile, &anchors, out)?;
    if png {
        for &regime in &run.config.regimes {
            let path = out.join(format!("{}.png", regime.as_str()));
            png::render_unit_cost(&run, regime, &path)?;
        }
    }
    println!("label {}", run.label);
    println!("cells evaluated {}, issues {}", run.cells.len(), run.issues.len());
    println!("E* {:.1} kWh/kWp/yr", run.estar);
    println!("input hash {}", run.input_hash);
    println!("manifest {}", files.manifest.display());
    Ok(())
}

fn transmission(spec: &Path, json: bool) -> Result<()> {
    let spec = TransmissionSpec::load(spec)?;
    let b = transmission_breakdown(&spec)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&b)?);
        return Ok(());
    }
    println!("{}", b.name);
    println!("  capex                    {:>14.4e} USD", b.capex);
    println!("  yearly cost              {:>14.4e} USD/yr", b.yearly_cost);
    println!("  delivered                {:>14.4e} MWh/yr", b.delivered_mwh_per_year);
    println!("  capital term             {:>14.3} USD/MWh", b.capital_term);
    println!("  line losses              {:>14.2} %", b.loss_fraction * 100.0);
    println!("  loss term                {:>14.3} USD/MWh", b.loss_term);
    println!("  at full utilization      {:>14.3} USD/MWh", b.unit_cost_full_utilization);
    println!("  utilization              {:>14.2} %", b.utilization * 100.0);
    if b.projection_factor != 1.0 {
        println!("  before projection        {:>14.3} USD/MWh", b.unit_cost_before_projection);
        println!("  projection factor        {:>14.4}", b.projection_factor);
    }
    println!("unit cost {:.2} USD/MWh", b.unit_cost);
    Ok(())
}

fn serve(addr: SocketAddr, anchors: Option<PathBuf>, presets: Option<PathBuf>, static_dir: Option<PathBuf>) -> Result<()> {
    let env = pvtrade_service::ServiceConfig::from_env();
    let config = pvtrade_service::ServiceConfig {
        anchors: anchors.or(env.anchors),
        presets: presets.or(env.presets),
        static_dir: static_dir.or(env.static_dir),
    };
    let state = pvtrade_service::ServiceState::load(&config)?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("cannot listen on {addr}"))?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        pvtrade_service::serve_on(listener, state, config.static_dir).await?;
        Ok(())
    })
}

fn anchors(out: &Path, weather_years: Option<u32>, seed: Option<u64>) -> Result<()> {
    let mut climate = SyntheticClimate::default();
    if let Some(n) = weather_years {
        climate.weather_years = n;
    }
    if let Some(s) = seed {
        climate.seed = s;
    }
    let table = AnchorTable::new(synthetic_anchor_table(&climate, &PvCostInputs::default())?)?;
    table.save(out)?;
    println!("wrote {} anchors to {}", table.anchors().len(), out.display());
    Ok(())
}

fn read_series(path: &Path) -> Result<InsolationSeries> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let field = line.split(',').next_back().unwrap_or(line).trim();
        match field.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if values.is_empty() && i == 0 => {} // header
            Err(_) => bail!("{} line {}: cannot parse '{field}'", path.display(), i + 1),
        }
    }
    if values.len() != DAYS_PER_YEAR {
        bail!("{}: expected {DAYS_PER_YEAR} daily values, found {}", path.display(), values.len());
    }
    Ok(InsolationSeries::new(values)?)
}

fn dispatch(series: Option<&Path>, lat: Option<f64>, year: u32, deseason: bool, smooth: bool, trace: Option<&Path>) -> Result<()> {
    let climate = SyntheticClimate::default();
    let mut s = match (series, lat) {
        (Some(p), _) => read_series(p)?,
        (None, Some(lat)) if smooth => synthetic_latitude_series(lat, &climate)?,
        (None, Some(lat)) => synthetic_weather_year(lat, year, &climate)?,
        (None, None) => unreachable!("clap requires one source"),
    };
    if deseason {
        s = deseasonalize(&s)?;
    }
    let pv = PvCostInputs::default();
    let opt = optimize_gs(&s, &pv, 1.0)?;
    println!("annual yield       {:.1} kWh/kWp", s.annual_total());
    println!("generation         {:.4} kWp per kW demand", opt.gen);
    println!("storage            {:.4} kWh per kW demand", opt.sto);
    println!("OCF                {:.4}", opt.ocf);
    println!("S/G                {:.4} kWh/kWp", opt.storage_ratio);
    println!("unit cost          {:.2} USD/MWh", opt.unit_cost);
    if let Some(path) = trace {
        let outcome = simulate_dispatch(&s, opt.gen / pvtrade_core::DIURNAL_MIN_OCF, opt.interday_sto, 1.0)?;
        let mut text = String::from("day,generation,charged,discharged,curtailed,unmet,soc_start,soc_end\n");
        for d in &outcome.trace {
            let _ = writeln!(
                text,
                "{},{},{},{},{},{},{},{}",
                d.day, d.generation, d.charged, d.discharged, d.curtailed, d.unmet, d.soc_start, d.soc_end
            );
        }
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
