//! Command-line front end: offline SPL maps, SEL scenarios, validation
//! tables and source-level comparisons.
//!
//! Exit codes: 0 success, 2 schema error in an input file, 3 domain error
//! (extent, window, unmatched recorder), 4 configuration error, 1 other I/O.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use thiserror::Error;
use urnmap_ais::{import_csv, CsvError};
use urnmap_core::environment::{load_mpas, EnvError, ValueConvention};
use urnmap_core::exposure::{
    read_measurements, validate_against_measurement, validation_csv, ExposureError, LevelTable, RegionSummary, SpeedCap,
};
use urnmap_core::products::{
    estimate_vessel, latest_per_vessel, sel_product, spl_map, BandTriple, Environment, EnvironmentPaths, ModelPaths, ProductConfig,
    ProductError, SelRequest, SlStatus,
};
use urnmap_core::propagation::PropagationError;
use urnmap_core::{BoundingBox, IndicatorBand, MpaPolygon, SlModelId, SourceModels, VesselRecord};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Schema(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Config(_) => 4,
        }
    }
}

impl From<CsvError> for CliError {
    fn from(e: CsvError) -> Self {
        CliError::Schema(e.to_string())
    }
}

impl From<ExposureError> for CliError {
    fn from(e: ExposureError) -> Self {
        match e {
            ExposureError::Schema(_) => CliError::Schema(e.to_string()),
            ExposureError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

fn env_error(e: EnvError) -> CliError {
    match e {
        EnvError::Domain(_) | EnvError::OutOfExtent { .. } | EnvError::NoData { .. } => CliError::Domain(e.to_string()),
        _ => CliError::Config(e.to_string()),
    }
}

impl From<ProductError> for CliError {
    fn from(e: ProductError) -> Self {
        match e {
            ProductError::Environment(e) => env_error(e),
            ProductError::Propagation(PropagationError::Config(m)) => CliError::Config(m),
            ProductError::Propagation(e) => CliError::Domain(e.to_string()),
            ProductError::Exposure(e) => e.into(),
            ProductError::Config(m) => CliError::Config(m),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "urnmap", version, about = "Vessel underwater radiated noise maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// SPL map of the latest report of each vessel.
    Map(MapArgs),
    /// SEL over a window, optionally with a speed-cap scenario.
    Sel(SelArgs),
    /// Modeled-minus-measured SEL table.
    Validate(ValidateArgs),
    /// Source levels of one vessel under each model.
    Sl(SlArgs),
}

/// Configuration file and per-flag overrides shared by map and sel.
#[derive(Debug, Clone, Default, Args)]
pub struct EnvArgs {
    /// TOML file with `[environment]` and `[products]` tables.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Bathymetry raster (ESRI ASCII grid or GeoTIFF).
    #[arg(long)]
    pub bathymetry: Option<PathBuf>,
    /// `depth` (positive down) or `elevation` (positive up).
    #[arg(long, value_parser = parse_convention)]
    pub bathymetry_convention: Option<ValueConvention>,
    #[arg(long)]
    pub sound_speed: Option<PathBuf>,
    /// MPA polygons (GeoJSON).
    #[arg(long)]
    pub mpas: Option<PathBuf>,
    /// Grid resolution in degrees.
    #[arg(long)]
    pub cell_deg: Option<f64>,
}

fn parse_convention(s: &str) -> Result<ValueConvention, String> {
    match s {
        "depth" => Ok(ValueConvention::Depth),
        "elevation" => Ok(ValueConvention::Elevation),
        _ => Err(format!("'{s}' must be depth or elevation")),
    }
}

fn parse_extent(s: &str) -> Result<BoundingBox, CliError> {
    BoundingBox::parse(s).map_err(|e| CliError::Domain(format!("extent '{s}': {e}")))
}

fn parse_time(s: &str) -> Result<DateTime<Utc>, String> {
    urnmap_ais::csv_io::parse_utc(s)
}

/// The `[environment]`, `[products]` and `[models]` tables; other tables
/// (e.g. service settings) are ignored so one file can serve both front ends.
#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct FileConfig {
    environment: Option<EnvironmentPaths>,
    products: ProductConfig,
    models: ModelPaths,
}

fn read_config(path: Option<&Path>) -> Result<(FileConfig, Option<PathBuf>), CliError> {
    let Some(p) = path else {
        return Ok((FileConfig::default(), None));
    };
    let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
    let cfg: FileConfig = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
    Ok((cfg, p.parent().map(Path::to_path_buf)))
}

fn load_models(paths: &ModelPaths, base: Option<&Path>) -> Result<SourceModels<f64>, CliError> {
    paths.load(base).map_err(|e| CliError::Config(format!("models: {e}")))
}

/// Loaded medium, MPAs and product settings.
pub struct Setup {
    pub env: Environment<f64>,
    pub products: ProductConfig,
    pub models: SourceModels<f64>,
}

impl EnvArgs {
    pub fn load(&self) -> Result<Setup, CliError> {
        let (file, base) = read_config(self.config.as_deref())?;
        let mut products = file.products;
        if let Some(c) = self.cell_deg {
            products.cell_deg = c;
        }
        products.validate()?;

        let mut paths = file.environment.unwrap_or_default();
        if self.bathymetry.is_none() && paths.bathymetry.as_os_str().is_empty() {
            return Err(CliError::Config("no bathymetry given (--bathymetry or [environment] in --config)".into()));
        }
        // Flag paths are relative to the working directory; file paths to the file.
        let resolve = |flag: &Option<PathBuf>, from_file: &Option<PathBuf>| -> Option<PathBuf> {
            flag.clone().or_else(|| {
                from_file.as_ref().map(|p| match &base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p.clone(),
                })
            })
        };
        let bathymetry = resolve(&self.bathymetry, &Some(paths.bathymetry.clone())).expect("checked above");
        paths.sound_speed = resolve(&self.sound_speed, &paths.sound_speed);
        paths.mpas = resolve(&self.mpas, &paths.mpas);
        paths.bathymetry = bathymetry;
        if let Some(c) = self.bathymetry_convention {
            paths.bathymetry_convention = Some(c);
        }
        let env = paths.load::<f64>(None).map_err(env_error)?;
        Ok(Setup {
            env,
            products,
            models: load_models(&file.models, base.as_deref())?,
        })
    }
}

/// Reads and concatenates record CSVs in order. Rejected rows are reported
/// on stderr; a missing required column fails the command.
pub fn read_records(paths: &[PathBuf], log: &mut dyn Write) -> Result<Vec<VesselRecord>, CliError> {
    let mut out = Vec::new();
    for p in paths {
        let file = std::fs::File::open(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        let imported = import_csv(file).map_err(|e| CliError::Schema(format!("{}: {e}", p.display())))?;
        for r in &imported.rejected {
            let _ = writeln!(log, "warning: {} line {}: {}", p.display(), r.line, r.message);
        }
        out.extend(imported.records);
    }
    Ok(out)
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct MapArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    /// Vessel record CSV; repeat for several files.
    #[arg(long = "records", required = true)]
    pub records: Vec<PathBuf>,
    /// south,west,north,east in degrees.
    #[arg(long, allow_hyphen_values = true)]
    pub extent: String,
    #[arg(long, default_value = "bb")]
    pub band: IndicatorBand,
    #[arg(long, default_value = "combined")]
    pub model: SlModelId,
    /// Snapshot time; the latest report of every vessel at or before it is used.
    #[arg(long, value_parser = parse_time)]
    pub at: Option<DateTime<Utc>>,
    /// Drop vessels whose latest report is this many seconds or more before the snapshot.
    #[arg(long)]
    pub max_age: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_map(args: &MapArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let setup = args.env.load()?;
    let records = read_records(&args.records, stderr)?;
    let snapshot = latest_per_vessel(&records, args.at, args.max_age);
    let product = spl_map(&setup.env.field, &setup.models, &setup.products, args.model, parse_extent(&args.extent)?, &snapshot)?;
    write_atomic(&args.out, &product.grid.to_csv("spl"))?;

    let mut s = String::new();
    let propagated = product.vessels.len() - product.skipped.len();
    let _ = writeln!(s, "vessels: {} ({} propagated, {} skipped)", product.vessels.len(), propagated, product.skipped.len());
    for (category, n) in &product.counts {
        let _ = writeln!(s, "  {category}: {n}");
    }
    for k in &product.skipped {
        let _ = writeln!(s, "skipped {}: {}", k.mmsi, k.reason);
    }
    let levels: Vec<f64> = product.grid.levels_db(args.band).into_iter().flatten().collect();
    match levels.iter().copied().reduce(f64::max) {
        Some(max) => {
            let _ = writeln!(
                s,
                "{} SPL: max {max:.3} dB, {} of {} cells reached",
                args.band.label(),
                levels.len(),
                product.grid.spec.len()
            );
        }
        None => {
            let _ = writeln!(s, "{} SPL: no cell reached", args.band.label());
        }
    }
    let _ = writeln!(s, "wrote {}", args.out.display());
    stdout.write_all(s.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
}

#[derive(Debug, Clone, Args)]
pub struct SelArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    #[arg(long = "records", required = true)]
    pub records: Vec<PathBuf>,
    #[arg(long, value_parser = parse_time)]
    pub start: DateTime<Utc>,
    #[arg(long, value_parser = parse_time)]
    pub end: DateTime<Utc>,
    #[arg(long, allow_hyphen_values = true)]
    pub extent: String,
    /// Baseline SEL grid CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Speed cap in knots inside the zone and its buffer.
    #[arg(long, requires = "zone")]
    pub cap: Option<f64>,
    /// Zone: a GeoJSON file (first polygon feature) or an MPA id/name from the MPA layer.
    #[arg(long)]
    pub zone: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    pub buffer: f64,
    /// Scenario SEL grid CSV; defaults to the baseline path with `-scenario` appended to the stem.
    #[arg(long)]
    pub scenario_out: Option<PathBuf>,
    /// Source model for the exposure; the configured model (Combined) when absent.
    #[arg(long)]
    pub model: Option<SlModelId>,
    /// Segment gap threshold in seconds.
    #[arg(long)]
    pub gap: Option<f64>,
}

fn resolve_zone(spec: &str, mpas: &[MpaPolygon]) -> Result<MpaPolygon, CliError> {
    let path = Path::new(spec);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{spec}: {e}")))?;
        return load_mpas(&text)
            .map_err(|e| CliError::Schema(format!("{spec}: {e}")))?
            .into_iter()
            .next()
            .ok_or_else(|| CliError::Schema(format!("{spec}: no polygon feature")));
    }
    mpas.iter()
        .find(|m| m.id == spec || m.name == spec)
        .cloned()
        .ok_or_else(|| CliError::Config(format!("zone '{spec}' is neither a file nor a loaded MPA")))
}

fn scenario_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}-scenario.{}", ext.to_string_lossy()),
        None => format!("{stem}-scenario"),
    };
    out.with_file_name(name)
}

/// Per-band zone summary as CSV: `zone,band,baseline_db,scenario_db,delta_db`.
pub fn summary_csv(s: &RegionSummary) -> String {
    let f = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_default();
    let mut out = String::from("zone,band,baseline_db,scenario_db,delta_db\n");
    let delta = s.delta_db();
    for b in IndicatorBand::ALL {
        let k = b.index();
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            s.zone,
            b.tag(),
            f(s.baseline_db[k]),
            f(s.scenario_db.and_then(|v| v[k])),
            f(delta.and_then(|v| v[k]))
        );
    }
    out
}

pub fn cmd_sel(args: &SelArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let mut setup = args.env.load()?;
    if let Some(m) = args.model {
        setup.products.sel_model = m;
    }
    if let Some(g) = args.gap {
        setup.products.gap_threshold_s = g;
    }
    let records = read_records(&args.records, stderr)?;
    let zone = args.zone.as_deref().map(|z| resolve_zone(z, &setup.env.mpas)).transpose()?;
    let scenario = match (args.cap, &zone) {
        (Some(cap), Some(z)) => Some(SpeedCap::new(cap, z.clone(), args.buffer)?),
        _ => None,
    };
    let req = SelRequest {
        start: args.start,
        end: args.end,
        extent: parse_extent(&args.extent)?,
        scenario,
        summary_zone: zone,
    };
    let product = sel_product(&setup.env.field, &setup.models, &setup.products, &records, &req)?;

    let scenario_out = product
        .scenario_csv()
        .map(|csv| (args.scenario_out.clone().unwrap_or_else(|| scenario_path(&args.out)), csv));
    write_atomic(&args.out, &product.baseline_csv())?;
    if let Some((path, csv)) = &scenario_out {
        write_atomic(path, csv)?;
    }

    let mut s = String::new();
    let _ = writeln!(
        s,
        "model {}: {} segments, {} contributed, {} skipped",
        setup.products.sel_model,
        product.segments,
        product.run.used,
        product.run.skipped.len()
    );
    if let Some(summary) = &product.summary {
        s.push_str(&summary_csv(summary));
    }
    let _ = writeln!(s, "wrote {}", args.out.display());
    if let Some((path, _)) = &scenario_out {
        let _ = writeln!(s, "wrote {}", path.display());
    }
    stdout.write_all(s.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    /// Modeled SEL grid CSV, optionally labelled `DATE=path`; repeatable.
    #[arg(long = "sel", required = true)]
    pub sel: Vec<String>,
    /// `date,lat,lon,sel_63_db,sel_125_db,sel_bb_db`.
    #[arg(long)]
    pub measurements: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_validate(args: &ValidateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let open = |p: &Path| std::fs::File::open(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())));
    let mut tables: Vec<(Option<String>, LevelTable)> = Vec::new();
    for spec in &args.sel {
        let (label, path) = match spec.split_once('=') {
            Some((l, p)) if !Path::new(spec).exists() => (Some(l.to_string()), PathBuf::from(p)),
            _ => (None, PathBuf::from(spec)),
        };
        let table = LevelTable::read_csv(open(&path)?, "sel")
            .map_err(|e| CliError::from(e).with_context(&path))?;
        tables.push((label, table));
    }
    let measurements = read_measurements(open(&args.measurements)?)
        .map_err(|e| CliError::from(e).with_context(&args.measurements))?;
    let mut rows = Vec::with_capacity(measurements.len());
    for m in &measurements {
        let table = tables
            .iter()
            .find(|(l, _)| l.as_deref() == Some(m.label.as_str()))
            .or_else(|| tables.iter().find(|(l, _)| l.is_none()))
            .map(|(_, t)| t)
            .ok_or_else(|| CliError::Domain(format!("no modeled SEL grid for '{}'", m.label)))?;
        rows.push(validate_against_measurement(table, m)?);
    }
    let csv = validation_csv(&rows);
    if let Some(out) = &args.out {
        write_atomic(out, &csv)?;
    }
    stdout.write_all(csv.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
}

impl CliError {
    fn with_context(self, path: &Path) -> Self {
        let p = path.display();
        match self {
            CliError::Schema(m) => CliError::Schema(format!("{p}: {m}")),
            CliError::Domain(m) => CliError::Domain(format!("{p}: {m}")),
            CliError::Config(m) => CliError::Config(format!("{p}: {m}")),
            CliError::Io(m) => CliError::Io(format!("{p}: {m}")),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SlArgs {
    /// TOML file; only its `[models]` table is read.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// AIS ship type code.
    #[arg(long = "ais-type")]
    pub ais_type: u8,
    #[arg(long)]
    pub length: Option<f64>,
    #[arg(long)]
    pub speed: f64,
    #[arg(long)]
    pub beam: Option<f64>,
    #[arg(long)]
    pub draft: Option<f64>,
    /// Explicit JOMOPANS-ECHO class.
    #[arg(long)]
    pub je_class: Option<u8>,
    /// Comma-separated models; all five by default.
    #[arg(long, value_delimiter = ',')]
    pub models: Vec<SlModelId>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// One line of the model comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct SlRow {
    pub model: SlModelId,
    pub status: SlStatus,
    pub levels: Option<BandTriple>,
}

pub fn sl_table(args: &SlArgs) -> Result<Vec<SlRow>, CliError> {
    let rec = VesselRecord {
        mmsi: 0,
        name: None,
        timestamp: DateTime::<Utc>::UNIX_EPOCH,
        lat: 0.0,
        lon: 0.0,
        sog_kn: args.speed,
        cog_deg: None,
        ais_type: args.ais_type,
        length_m: args.length,
        beam_m: args.beam,
        draft_m: args.draft,
        nav_status: 0,
        je_class: args.je_class,
    };
    let (file, base) = read_config(args.config.as_deref())?;
    let models = load_models(&file.models, base.as_deref())?;
    let list: Vec<SlModelId> = if args.models.is_empty() {
        SlModelId::INDIVIDUAL.to_vec()
    } else {
        args.models.iter().copied().filter(|m| *m != SlModelId::Combined).collect()
    };
    let mut rows: Vec<SlRow> = list
        .iter()
        .chain([SlModelId::Combined].iter())
        .map(|&m| {
            let (est, _) = estimate_vessel(&models, m, &rec);
            SlRow {
                model: m,
                status: est.sl_status,
                levels: est.sl_db,
            }
        })
        .collect();
    // Combined averages every supported model, so it must lie inside their
    // range when all five are listed.
    if list.len() == SlModelId::INDIVIDUAL.len() {
        let combined = rows.pop().expect("combined row");
        if let Some(c) = combined.levels {
            for band in IndicatorBand::ALL {
                let vals: Vec<f64> = rows.iter().filter_map(|r| r.levels.map(|l| l.get(band))).collect();
                let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let v = c.get(band);
                if !(v >= lo - 1e-9 && v <= hi + 1e-9) {
                    return Err(CliError::Domain(format!(
                        "Combined {} level {v:.3} dB outside model range [{lo:.3}, {hi:.3}]",
                        band.label()
                    )));
                }
            }
        }
        rows.push(combined);
    }
    Ok(rows)
}

pub fn sl_csv(rows: &[SlRow]) -> String {
    let mut out = String::from("model,status,sl_63_db,sl_125_db,sl_bb_db\n");
    for r in rows {
        let status = status_label(r.status);
        match r.levels {
            Some(l) => {
                let _ = writeln!(out, "{},{status},{:.3},{:.3},{:.3}", r.model, l.tob63, l.tob125, l.bb);
            }
            None => {
                let _ = writeln!(out, "{},{status},,,", r.model);
            }
        }
    }
    out
}

fn status_label(s: SlStatus) -> &'static str {
    match s {
        SlStatus::Ok => "ok",
        SlStatus::Unsupported => "unsupported",
        SlStatus::NonRadiating => "non_radiating",
        SlStatus::Error => "error",
    }
}

pub fn cmd_sl(args: &SlArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let csv = sl_csv(&sl_table(args)?);
    if let Some(out) = &args.out {
        write_atomic(out, &csv)?;
    }
    stdout.write_all(csv.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
}

/// Parses `argv` and runs the command; returns the process exit code.
pub fn run<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            if code == 0 {
                let _ = write!(stdout, "{e}");
            } else {
                let _ = write!(stderr, "{e}");
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Map(a) => cmd_map(a, stdout, stderr),
        Command::Sel(a) => cmd_sel(a, stdout, stderr),
        Command::Validate(a) => cmd_validate(a, stdout),
        Command::Sl(a) => cmd_sl(a, stdout),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
