//! Config-driven experiments behind the `apsk64` command line.
//!
//! A config file is TOML with one section per command. Relative paths inside
//! it are resolved against the config file's directory. Every output file
//! starts with `#` comment lines recording the config hash, the seed and the
//! channel conventions; nothing time-dependent is written, so identical
//! inputs give byte-identical outputs.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::channel::{ChannelModel, Hpa};
use crate::distortion::{
    estimate_mse, mapping_tables_with, reports_to_csv, DistortionReport, NeighborMode,
};
use crate::ga::{
    jittered_population, optimize, optimize_from, ConstellationObjective, GaConfig, GaTrace,
};
use crate::geometry::{
    build_uniform, encode, equally_spaced_radii, load_mapping, parse_constellation,
    write_constellation, BundledMapping, Constellation, Mapping, SymmetryClass,
};
use crate::media::{synthetic_image, transmit_image_with, Framing, GreyImage};
use crate::rng::derive_seed;
use crate::{Error, Result};

pub const DEFAULT_SEED: u64 = 1;

const FITNESS_STREAM: u64 = 1;
const EVALUATION_STREAM: u64 = 2;
const INIT_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    AnalyzeMapping,
    SweepSnr,
    Optimize,
    TransmitImage,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::AnalyzeMapping => "analyze-mapping",
            Command::SweepSnr => "sweep-snr",
            Command::Optimize => "optimize",
            Command::TransmitImage => "transmit-image",
        }
    }
}

/// Process exit status for a failed command: 2 for configuration problems,
/// 3 for file access and unreadable input files, 1 otherwise.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Io { .. } | Error::Image(_) => 3,
        Error::Config(_)
        | Error::GaConfig(_)
        | Error::Layout(_)
        | Error::Mapping(_)
        | Error::Radii(_)
        | Error::Angles(_)
        | Error::Symmetry { .. }
        | Error::LabelOutOfRange(_)
        | Error::TooManySymbols { .. }
        | Error::Tournament { .. } => 2,
        _ => 1,
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "analyze-mapping")]
    pub analyze_mapping: Option<AnalyzeSection>,
    #[serde(rename = "sweep-snr")]
    pub sweep_snr: Option<SweepSection>,
    pub optimize: Option<OptimizeSection>,
    #[serde(rename = "transmit-image")]
    pub transmit_image: Option<TransmitSection>,
}

/// A constellation given either by an exported constellation `file`, or by a
/// `mapping` (bundled name or mapping file) with uniform rings at `radii`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstellationSpec {
    pub name: Option<String>,
    pub mapping: Option<String>,
    pub symmetry: Option<String>,
    pub radii: Option<Vec<f64>>,
    pub file: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeSection {
    pub seed: Option<u64>,
    /// `directed` (default) or `symmetric`.
    pub neighbor_mode: Option<String>,
    pub constellations: Vec<ConstellationSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub seed: Option<u64>,
    pub hpa: Option<String>,
    pub snr_db: Vec<f64>,
    pub samples: Option<u64>,
    pub constellations: Vec<ConstellationSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    pub seed: Option<u64>,
    pub hpa: Option<String>,
    pub snr_db: f64,
    pub mapping: String,
    pub symmetry: Option<String>,
    pub baseline_radii: Option<Vec<f64>>,
    pub evaluation_samples: Option<u64>,
    #[serde(default)]
    pub ga: GaSection,
}

/// Overrides of [`GaConfig`] defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaSection {
    pub population: Option<usize>,
    pub p_mut: Option<f64>,
    pub p_cross: Option<f64>,
    pub gene_vary_fraction: Option<f64>,
    pub elite_fraction_cap: Option<f64>,
    pub max_generations: Option<usize>,
    pub tournament_size: Option<usize>,
    pub fitness_samples: Option<u64>,
    pub convergence_epsilon: Option<f64>,
    pub convergence_patience: Option<usize>,
    pub radius_sigma: Option<f64>,
    pub angle_sigma: Option<f64>,
    pub workers: Option<usize>,
    /// `random` (default) or `baseline`.
    pub init: Option<String>,
    /// Gene noise for `init = "baseline"`, default 0.1.
    pub init_jitter: Option<f64>,
}

impl GaSection {
    pub fn initial_population(&self) -> Result<InitialPopulation> {
        match (self.init.as_deref(), self.init_jitter) {
            (None | Some("random"), None) => Ok(InitialPopulation::Random),
            (None | Some("random"), Some(_)) => Err(Error::Config(
                "init_jitter needs init = \"baseline\"".into(),
            )),
            (Some("baseline"), j) => Ok(InitialPopulation::Baseline {
                jitter: j.unwrap_or(DEFAULT_INIT_JITTER),
            }),
            (Some(other), _) => Err(Error::Config(format!(
                "unknown init {other:?}, expected random or baseline"
            ))),
        }
    }

    pub fn to_config(&self, seed: u64) -> GaConfig {
        let d = GaConfig::default();
        GaConfig {
            population: self.population.unwrap_or(d.population),
            p_mut: self.p_mut.unwrap_or(d.p_mut),
            p_cross: self.p_cross.unwrap_or(d.p_cross),
            gene_vary_fraction: self.gene_vary_fraction.unwrap_or(d.gene_vary_fraction),
            elite_fraction_cap: self.elite_fraction_cap.unwrap_or(d.elite_fraction_cap),
            max_generations: self.max_generations.unwrap_or(d.max_generations),
            tournament_size: self.tournament_size.unwrap_or(d.tournament_size),
            fitness_samples: self.fitness_samples.unwrap_or(d.fitness_samples),
            seed,
            convergence_epsilon: self.convergence_epsilon.unwrap_or(d.convergence_epsilon),
            convergence_patience: self.convergence_patience.unwrap_or(d.convergence_patience),
            radius_sigma: self.radius_sigma.unwrap_or(d.radius_sigma),
            angle_sigma: self.angle_sigma.unwrap_or(d.angle_sigma),
            workers: self.workers.unwrap_or(d.workers),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmitSection {
    pub seed: Option<u64>,
    pub hpa: Option<String>,
    pub snr_db: Vec<f64>,
    /// PGM path, or `synthetic` for the built-in 512×512 picture.
    pub image: Option<String>,
    /// `stream` (default) or `pixel-aligned`.
    pub framing: Option<String>,
    pub constellations: Vec<ConstellationSpec>,
}

/// Parsed config plus what the output headers need to know about it.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
    pub sha256: String,
}

impl LoadedConfig {
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let digest = Sha256::digest(text.as_bytes());
        let sha256 = digest.iter().fold(String::new(), |mut s, b| {
            write!(s, "{b:02x}").unwrap();
            s
        });
        Ok(LoadedConfig {
            config,
            base_dir: base_dir.into(),
            sha256,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        LoadedConfig::parse(&text, base)
    }

    fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn section<'a, T>(&self, section: &'a Option<T>, command: Command) -> Result<&'a T> {
        section
            .as_ref()
            .ok_or_else(|| Error::Config(format!("config has no [{}] section", command.name())))
    }

    fn header(&self, command: Command, seed: u64, hpa: Option<Hpa>) -> String {
        let mut h = format!(
            "# apsk64 {} config_sha256={} seed={seed}\n",
            command.name(),
            self.sha256
        );
        if let Some(hpa) = hpa {
            writeln!(
                h,
                "# snr_db = 10·log10(Es/N0), Es = mean post-HPA symbol energy over equiprobable labels, noise variance N0/2 per dimension, hpa={hpa}"
            )
            .unwrap();
        }
        h
    }

    pub fn constellation(&self, spec: &ConstellationSpec) -> Result<(String, Constellation)> {
        if let Some(file) = &spec.file {
            if spec.mapping.is_some() || spec.radii.is_some() || spec.symmetry.is_some() {
                return Err(Error::Config(format!(
                    "constellation file {file} cannot be combined with mapping, radii or symmetry"
                )));
            }
            let path = self.resolve(file);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let c = parse_constellation(&text)?;
            let name = spec.name.clone().unwrap_or_else(|| file_stem(&path));
            return Ok((checked_name(name)?, c));
        }
        let key = spec
            .mapping
            .as_deref()
            .ok_or_else(|| Error::Config("constellation needs `mapping` or `file`".into()))?;
        let (mapping, default_symmetry) = self.mapping(key)?;
        let symmetry = match &spec.symmetry {
            Some(s) => parse_symmetry(s)?,
            None => default_symmetry,
        };
        let radii = spec
            .radii
            .clone()
            .unwrap_or_else(|| equally_spaced_radii(mapping.layout().rings()));
        let c = build_uniform(mapping.layout(), &radii, &mapping, symmetry)?;
        let name = spec.name.clone().unwrap_or_else(|| key.to_string());
        Ok((checked_name(name)?, c))
    }

    /// Bundled mapping by name, or a mapping file.
    pub fn mapping(&self, key: &str) -> Result<(Mapping, SymmetryClass)> {
        match BundledMapping::from_name(key) {
            Some(b) => Ok((b.mapping(), b.symmetry())),
            None => Ok((load_mapping(self.resolve(key))?, SymmetryClass::None)),
        }
    }
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "constellation".into())
}

/// Names become file names, so keep them to a safe alphabet.
fn checked_name(name: String) -> Result<String> {
    if name.is_empty()
        || !name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "._-".contains(c))
    {
        return Err(Error::Config(format!(
            "constellation name {name:?} must be non-empty and use only letters, digits, '.', '_' or '-'"
        )));
    }
    Ok(name)
}

fn parse_symmetry(s: &str) -> Result<SymmetryClass> {
    SymmetryClass::from_name(s).ok_or_else(|| Error::Config(format!("unknown symmetry {s:?}")))
}

fn parse_hpa(s: Option<&str>) -> Result<Hpa> {
    let s = s.unwrap_or("ideal");
    Hpa::from_name(s)
        .ok_or_else(|| Error::Config(format!("unknown hpa {s:?}, expected saleh or ideal")))
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config("snr_db grid is empty".into()));
    }
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(
            "snr_db grid must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

fn non_empty<T>(items: &[T], what: &str) -> Result<()> {
    if items.is_empty() {
        return Err(Error::Config(format!("no {what} listed")));
    }
    Ok(())
}

fn write_file(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Files written by a command and a human-readable summary.
#[derive(Debug, Clone, Default)]
pub struct CommandOutput {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// Run `command` from a config file, writing outputs into `out_dir`.
pub fn run(
    command: Command,
    config: &Path,
    seed: Option<u64>,
    out_dir: &Path,
) -> Result<CommandOutput> {
    let loaded = LoadedConfig::load(config)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    match command {
        Command::AnalyzeMapping => cmd_analyze_mapping(&loaded, seed, out_dir),
        Command::SweepSnr => cmd_sweep_snr(&loaded, seed, out_dir),
        Command::Optimize => cmd_optimize(&loaded, seed, out_dir),
        Command::TransmitImage => cmd_transmit_image(&loaded, seed, out_dir),
    }
}

/// Writes `mapping_tables_<name>.csv` per constellation.
pub fn cmd_analyze_mapping(
    cfg: &LoadedConfig,
    seed: Option<u64>,
    out: &Path,
) -> Result<CommandOutput> {
    let section = cfg.section(&cfg.config.analyze_mapping, Command::AnalyzeMapping)?;
    let seed = seed.or(section.seed).unwrap_or(DEFAULT_SEED);
    let mode = match section.neighbor_mode.as_deref() {
        None | Some("directed") => NeighborMode::Directed,
        Some("symmetric") => NeighborMode::Symmetric,
        Some(other) => return Err(Error::Config(format!("unknown neighbor_mode {other:?}"))),
    };
    non_empty(&section.constellations, "constellations")?;
    let mut output = CommandOutput::default();
    for spec in &section.constellations {
        let (name, c) = cfg.constellation(spec)?;
        let tables = mapping_tables_with(&c, mode);
        let body = cfg.header(Command::AnalyzeMapping, seed, None) + &tables.to_csv();
        output.files.push(write_file(
            out,
            &format!("mapping_tables_{name}.csv"),
            &body,
        )?);
        writeln!(output.summary, "{name}").unwrap();
        for e in &tables.intra_ring {
            writeln!(output.summary, "  {:<22} {:.4}", e.name, e.mean).unwrap();
        }
        for e in &tables.inter_ring {
            writeln!(output.summary, "  {:<22} {:.4}", e.name, e.mean).unwrap();
        }
    }
    Ok(output)
}

/// Writes `sweep_<name>.csv` per constellation.
pub fn cmd_sweep_snr(cfg: &LoadedConfig, seed: Option<u64>, out: &Path) -> Result<CommandOutput> {
    let section = cfg.section(&cfg.config.sweep_snr, Command::SweepSnr)?;
    let seed = seed.or(section.seed).unwrap_or(DEFAULT_SEED);
    let hpa = parse_hpa(section.hpa.as_deref())?;
    check_grid(&section.snr_db)?;
    non_empty(&section.constellations, "constellations")?;
    let samples = section.samples.unwrap_or(1_000_000);
    if samples == 0 {
        return Err(Error::Config("samples must be at least 1".into()));
    }
    let mut output = CommandOutput::default();
    for spec in &section.constellations {
        let (name, c) = cfg.constellation(spec)?;
        let rows = section
            .snr_db
            .iter()
            .map(|&snr| {
                Ok((
                    snr,
                    estimate_mse(&c, &ChannelModel::new(hpa, snr)?, samples, seed)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let body = cfg.header(Command::SweepSnr, seed, Some(hpa)) + &reports_to_csv(&rows);
        output
            .files
            .push(write_file(out, &format!("sweep_{name}.csv"), &body)?);
        writeln!(output.summary, "{name}").unwrap();
        for (snr, r) in &rows {
            writeln!(
                output.summary,
                "  {snr:>6} dB  mse {:.3} ± {:.3}",
                r.mse, r.half_width_95
            )
            .unwrap();
        }
    }
    Ok(output)
}

const DEFAULT_INIT_JITTER: f64 = 0.1;

/// Where the first GA population comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialPopulation {
    /// Radii uniform in `(0, 1)`, angles uniform over the sector.
    Random,
    /// The uniform baseline plus Gaussian gene noise.
    Baseline { jitter: f64 },
}

impl fmt::Display for InitialPopulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialPopulation::Random => f.write_str("random"),
            InitialPopulation::Baseline { jitter } => write!(f, "baseline(jitter={jitter})"),
        }
    }
}

/// Everything needed for one optimization run.
#[derive(Debug, Clone)]
pub struct OptimizeSettings {
    pub mapping: Mapping,
    pub symmetry: SymmetryClass,
    pub model: ChannelModel,
    pub baseline_radii: Vec<f64>,
    pub evaluation_samples: u64,
    pub init: InitialPopulation,
    pub ga: GaConfig,
}

#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub trace: GaTrace,
    pub constellation: Constellation,
    /// Uniform constellation at the baseline radii.
    pub baseline: DistortionReport,
    /// Best chromosome, re-evaluated on samples independent of the fitness
    /// bank.
    pub optimized: DistortionReport,
}

impl OptimizeOutcome {
    /// Relative MSE reduction against the baseline, in percent.
    pub fn reduction_percent(&self) -> f64 {
        100.0 * (1.0 - self.optimized.mse / self.baseline.mse)
    }
}

/// Run the GA with the fitness bank, selection stream and evaluation samples
/// all derived from `settings.ga.seed`.
pub fn run_optimize(settings: &OptimizeSettings) -> Result<OptimizeOutcome> {
    let seed = settings.ga.seed;
    let baseline_c = build_uniform(
        settings.mapping.layout(),
        &settings.baseline_radii,
        &settings.mapping,
        settings.symmetry,
    )?;
    let evaluation_seed = derive_seed(seed, EVALUATION_STREAM);
    let baseline = estimate_mse(
        &baseline_c,
        &settings.model,
        settings.evaluation_samples,
        evaluation_seed,
    )?;
    let objective = ConstellationObjective::new(
        settings.mapping.clone(),
        settings.symmetry,
        settings.model,
        settings.ga.fitness_samples,
        derive_seed(seed, FITNESS_STREAM),
    )?;
    let trace = match settings.init {
        InitialPopulation::Random => optimize(&objective, &settings.ga)?,
        InitialPopulation::Baseline { jitter } => {
            let center = encode(&baseline_c)?;
            let initial = jittered_population(
                &center,
                settings.ga.population,
                jitter,
                derive_seed(seed, INIT_STREAM),
            )?;
            optimize_from(initial, &objective, &settings.ga)?
        }
    };
    let constellation = objective.decode(&trace.best().best_chromosome)?;
    let optimized = estimate_mse(
        &constellation,
        &settings.model,
        settings.evaluation_samples,
        evaluation_seed,
    )?;
    Ok(OptimizeOutcome {
        trace,
        constellation,
        baseline,
        optimized,
    })
}

/// Settings of the `[optimize]` section, with `seed` overriding the config.
pub fn optimize_settings(cfg: &LoadedConfig, seed: Option<u64>) -> Result<OptimizeSettings> {
    let section = cfg.section(&cfg.config.optimize, Command::Optimize)?;
    let seed = seed.or(section.seed).unwrap_or(DEFAULT_SEED);
    let hpa = parse_hpa(section.hpa.as_deref())?;
    if !section.snr_db.is_finite() {
        return Err(Error::Config("snr_db must be finite".into()));
    }
    let (mapping, default_symmetry) = cfg.mapping(&section.mapping)?;
    let symmetry = match &section.symmetry {
        Some(s) => parse_symmetry(s)?,
        None => default_symmetry,
    };
    let settings = OptimizeSettings {
        baseline_radii: section
            .baseline_radii
            .clone()
            .unwrap_or_else(|| equally_spaced_radii(mapping.layout().rings())),
        mapping,
        symmetry,
        model: ChannelModel::new(hpa, section.snr_db)?,
        evaluation_samples: section.evaluation_samples.unwrap_or(1_000_000),
        init: section.ga.initial_population()?,
        ga: section.ga.to_config(seed),
    };
    if settings.evaluation_samples == 0 {
        return Err(Error::Config(
            "evaluation_samples must be at least 1".into(),
        ));
    }
    settings.ga.validate()?;
    Ok(settings)
}

/// Writes `trace.csv`, `constellation.txt` and `summary.txt`.
pub fn cmd_optimize(cfg: &LoadedConfig, seed: Option<u64>, out: &Path) -> Result<CommandOutput> {
    let section = cfg.section(&cfg.config.optimize, Command::Optimize)?;
    let settings = optimize_settings(cfg, seed)?;
    let (seed, hpa, symmetry) = (settings.ga.seed, settings.model.hpa(), settings.symmetry);
    let outcome = run_optimize(&settings)?;
    let header = cfg.header(Command::Optimize, seed, Some(hpa));
    let mut summary = String::new();
    writeln!(summary, "mapping = {}", section.mapping).unwrap();
    writeln!(summary, "symmetry = {symmetry}").unwrap();
    writeln!(summary, "snr_db = {}", section.snr_db).unwrap();
    writeln!(summary, "init = {}", settings.init).unwrap();
    writeln!(summary, "generations = {}", outcome.trace.best().generation).unwrap();
    writeln!(summary, "converged = {}", outcome.trace.converged).unwrap();
    writeln!(summary, "baseline_mse = {}", outcome.baseline.mse).unwrap();
    writeln!(
        summary,
        "baseline_half_width_95 = {}",
        outcome.baseline.half_width_95
    )
    .unwrap();
    writeln!(summary, "optimized_mse = {}", outcome.optimized.mse).unwrap();
    writeln!(
        summary,
        "optimized_half_width_95 = {}",
        outcome.optimized.half_width_95
    )
    .unwrap();
    writeln!(
        summary,
        "reduction_percent = {}",
        outcome.reduction_percent()
    )
    .unwrap();
    let files = vec![
        write_file(out, "trace.csv", header.clone() + &outcome.trace.to_csv())?,
        write_file(
            out,
            "constellation.txt",
            header.clone() + &write_constellation(&outcome.constellation),
        )?,
        write_file(out, "summary.txt", header + &summary)?,
    ];
    Ok(CommandOutput { files, summary })
}

/// Writes `scores.csv` and one decoded PGM per constellation and SNR.
pub fn cmd_transmit_image(
    cfg: &LoadedConfig,
    seed: Option<u64>,
    out: &Path,
) -> Result<CommandOutput> {
    let section = cfg.section(&cfg.config.transmit_image, Command::TransmitImage)?;
    let seed = seed.or(section.seed).unwrap_or(DEFAULT_SEED);
    let hpa = parse_hpa(section.hpa.as_deref())?;
    non_empty(&section.snr_db, "snr_db values")?;
    non_empty(&section.constellations, "constellations")?;
    let image = match section.image.as_deref() {
        None | Some("synthetic") => synthetic_image(512, 512),
        Some(path) => GreyImage::load(cfg.resolve(path))?,
    };
    let framing = match section.framing.as_deref() {
        None => Framing::Stream,
        Some(f) => {
            Framing::from_name(f).ok_or_else(|| Error::Config(format!("unknown framing {f:?}")))?
        }
    };
    let mut csv = cfg.header(Command::TransmitImage, seed, Some(hpa));
    writeln!(csv, "# framing={}", framing.name()).unwrap();
    csv.push_str("constellation,snr_db,psnr_db,pixel_mse,label_mse\n");
    let mut output = CommandOutput::default();
    for spec in &section.constellations {
        let (name, c) = cfg.constellation(spec)?;
        for &snr in &section.snr_db {
            let model = ChannelModel::new(hpa, snr)?;
            let result = transmit_image_with(&image, &c, &model, seed, framing)?;
            writeln!(
                csv,
                "{name},{snr},{},{},{}",
                result.psnr_db, result.pixel_mse, result.label_mse
            )
            .unwrap();
            writeln!(
                output.summary,
                "{name:<28} {snr:>6} dB  psnr {:.2} dB",
                result.psnr_db
            )
            .unwrap();
            let path = out.join(format!("decoded_{name}_{snr}dB.pgm"));
            result.image.save(&path)?;
            output.files.push(path);
        }
    }
    output.files.insert(0, write_file(out, "scores.csv", csv)?);
    Ok(output)
}
