//! Config-driven experiments behind the `diffraction-lab` binary.
//!
//! A config is a TOML file with one section per concern; every command reads
//! the sections it needs and writes plot-ready files into the output
//! directory. Every output starts with a `config_hash` (SHA-256 of the
//! canonical config) for provenance.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::autocorrelation::{autocorr_for, convergence_table, AutocorrOptions, Estimator};
use crate::averaging::{tempered_constant, vanhove_diagnostics, BoxSequence};
use crate::diffraction::{
    bragg_amplitude, detect_peaks, diffraction_profile, ensemble_intensity, pure_point_ratio, FrequencyGrid,
    PeakParams,
};
use crate::error::{Error, Result};
use crate::generators::{GeneratorSpec, Patch};
use crate::geometry::{Point, Window};
use crate::observable::{ClampedPolynomial, Observable};
use crate::perturbation::{correlation_almost_periods, perturbation_experiment, ExperimentParams, Rule, ScanSettings};
use crate::spectral::{almost_periods, eigen_average, AlmostPeriods, SampledCorrelation};
use crate::testfn::{correlation_kernel, tent_fourier, TestFunction};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "DIFFRACTION_LAB_OUT";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Generate,
    Autocorr,
    Diffract,
    Spectral,
    AlmostPer,
    Perturb,
    VanHove,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Generate,
        Command::Autocorr,
        Command::Diffract,
        Command::Spectral,
        Command::AlmostPer,
        Command::Perturb,
        Command::VanHove,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Autocorr => "autocorr",
            Command::Diffract => "diffract",
            Command::Spectral => "spectral",
            Command::AlmostPer => "almostper",
            Command::Perturb => "perturb",
            Command::VanHove => "vanhove",
        }
    }
}

/// Half-widths `n` of the centred cubes `[−n, n]^d`, strictly increasing.
/// Two-scale estimators use `small` and `large` (default: the last two).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub n: Vec<f64>,
    #[serde(default)]
    pub small: Option<f64>,
    #[serde(default)]
    pub large: Option<f64>,
}

/// A tent `a · Π max(0, 1 − |x_i − s_i| / w_i)`; one-element vectors are
/// broadcast to every axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestFunctionConfig {
    pub half_width: Vec<f64>,
    pub shift: Vec<f64>,
    pub amplitude: f64,
}

impl Default for TestFunctionConfig {
    fn default() -> Self {
        TestFunctionConfig {
            half_width: vec![1.0],
            shift: vec![0.0],
            amplitude: 1.0,
        }
    }
}

/// Frequency grid; `spacing` defaults to `1 / (8 n_large)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub spacing: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            lo: vec![-2.5],
            hi: vec![2.5],
            spacing: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AutocorrConfig {
    pub r_max: f64,
    pub estimator: Estimator,
    pub pair_limit: Option<usize>,
    /// Lags of the convergence table.
    pub t: Vec<Vec<f64>>,
}

impl Default for AutocorrConfig {
    fn default() -> Self {
        AutocorrConfig {
            r_max: crate::autocorrelation::DEFAULT_R_MAX,
            estimator: Estimator::Restricted,
            pair_limit: None,
            t: vec![vec![0.0], vec![1.0]],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralConfig {
    pub lambdas: Vec<Vec<f64>>,
    /// Independent replicates for ensemble intensities (0 skips them).
    pub replicates: usize,
    pub random_offset: bool,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            lambdas: vec![vec![1.0]],
            replicates: 0,
            random_offset: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationKind {
    /// `(φ̃ ∗ φ ∗ γ_n)(t)`.
    Autocorr,
    /// `C_h(t)` for `h = f_φ`.
    Pairing,
    /// `h = g ∘ f_φ`.
    Composed,
    /// `h = (g ∘ f_φ)(g ∘ f_ψ)` with `ψ` the test function shifted by
    /// `psi_shift`.
    Product,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlmostPeriodConfig {
    pub correlation: CorrelationKind,
    pub scan: f64,
    pub overlap: f64,
    pub per_unit: usize,
    /// `ε = epsilon_rel · |g(0)|`.
    pub epsilon_rel: f64,
    pub gap_limit: f64,
    pub estimator: Estimator,
    /// `g(z) = clamp(Σ c_k (Re z)^k, lo, hi)`.
    pub map_coeffs: Vec<f64>,
    pub map_lo: f64,
    pub map_hi: f64,
    pub psi_shift: Vec<f64>,
}

impl Default for AlmostPeriodConfig {
    fn default() -> Self {
        AlmostPeriodConfig {
            correlation: CorrelationKind::Autocorr,
            scan: 50.0,
            overlap: 5.0,
            per_unit: 16,
            epsilon_rel: 0.1,
            gap_limit: 5.0,
            estimator: Estimator::OneSided,
            map_coeffs: vec![0.0, 0.0, 1.0],
            map_lo: 0.0,
            map_hi: 0.5,
            psi_shift: vec![0.5],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    pub rule: Rule,
    #[serde(default = "default_theta_pp")]
    pub theta_pp: f64,
    #[serde(default = "default_theta_pp")]
    pub theta_pp_after: f64,
    #[serde(default = "default_coeff_bound")]
    pub coeff_bound: i64,
}

fn default_theta_pp() -> f64 {
    0.9
}

fn default_coeff_bound() -> i64 {
    crate::diffraction::COEFF_BOUND
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VanHoveConfig {
    /// Half-widths of the compact `K`.
    pub k_half_width: Vec<f64>,
    pub boundary_terms: bool,
}

impl Default for VanHoveConfig {
    fn default() -> Self {
        VanHoveConfig {
            k_half_width: vec![1.0],
            boundary_terms: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub generator: GeneratorSpec,
    pub boxes: BoxConfig,
    #[serde(default)]
    pub test_function: TestFunctionConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub peaks: PeakParams,
    #[serde(default)]
    pub autocorr: AutocorrConfig,
    #[serde(default)]
    pub spectral: SpectralConfig,
    #[serde(default)]
    pub almost_periods: AlmostPeriodConfig,
    #[serde(default)]
    pub perturbation: Option<PerturbationConfig>,
    #[serde(default)]
    pub vanhove: VanHoveConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

fn broadcast(v: &[f64], dim: usize, what: &str) -> Result<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; dim]),
        n if n == dim => Ok(v.to_vec()),
        n => Err(config_err(format!("{what}: expected 1 or {dim} values, got {n}"))),
    }
}

fn point(v: &[f64], dim: usize, what: &str) -> Result<Point> {
    Point::from_slice(&broadcast(v, dim, what)?)
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn dim(&self) -> usize {
        self.generator.dim
    }

    /// All range checks; every failure is a config error.
    pub fn validate(&self) -> Result<()> {
        self.generator.validate().map_err(config_err)?;
        let dim = self.dim();
        let n = &self.boxes.n;
        if n.is_empty() || n.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(config_err("boxes.n must be nonempty and positive"));
        }
        if n.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_err("boxes.n must be strictly increasing"));
        }
        let (s, l) = self.pair_indices()?;
        if s >= l {
            return Err(config_err("boxes.small must be smaller than boxes.large"));
        }
        self.test_function().map_err(config_err)?;
        self.frequency_grid()?.validate().map_err(config_err)?;
        self.peaks.validate().map_err(config_err)?;
        if !(self.autocorr.r_max > 0.0) {
            return Err(config_err("autocorr.r_max must be positive"));
        }
        for t in &self.autocorr.t {
            point(t, dim, "autocorr.t")?;
        }
        for l in &self.spectral.lambdas {
            point(l, dim, "spectral.lambdas")?;
        }
        if self.spectral.replicates == 1 {
            return Err(config_err("spectral.replicates must be 0 or at least 2"));
        }
        let ap = &self.almost_periods;
        if !(ap.scan >= 0.0 && ap.overlap >= 0.0 && ap.per_unit > 0) {
            return Err(config_err("almost_periods: scan, overlap ≥ 0 and per_unit > 0"));
        }
        if !(ap.epsilon_rel > 0.0) || !(ap.gap_limit > 0.0) {
            return Err(config_err("almost_periods: epsilon_rel and gap_limit must be positive"));
        }
        if ap.map_coeffs.is_empty() || !(ap.map_lo <= ap.map_hi) {
            return Err(config_err("almost_periods: map needs coefficients and map_lo ≤ map_hi"));
        }
        point(&ap.psi_shift, dim, "almost_periods.psi_shift")?;
        if let Some(p) = &self.perturbation {
            p.rule.validate().map_err(config_err)?;
            if p.rule.dim() != dim {
                return Err(config_err(format!("perturbation.rule has dimension {}, generator {dim}", p.rule.dim())));
            }
            for th in [p.theta_pp, p.theta_pp_after] {
                if !(0.0..=1.0).contains(&th) {
                    return Err(config_err("perturbation thresholds must lie in [0, 1]"));
                }
            }
            if p.coeff_bound < 1 {
                return Err(config_err("perturbation.coeff_bound must be positive"));
            }
        }
        let k = broadcast(&self.vanhove.k_half_width, dim, "vanhove.k_half_width")?;
        if k.iter().any(|v| !(*v > 0.0)) {
            return Err(config_err("vanhove.k_half_width must be positive"));
        }
        if self.output.threads == Some(0) {
            return Err(config_err("output.threads must be positive"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn sequence(&self) -> Result<BoxSequence> {
        BoxSequence::cubes(self.dim(), &self.boxes.n)
    }

    /// 1-based indices of the small and large boxes.
    pub fn pair_indices(&self) -> Result<(usize, usize)> {
        let n = &self.boxes.n;
        let find = |v: Option<f64>, default: usize, what: &str| match v {
            None => Ok(default),
            Some(v) => n
                .iter()
                .position(|x| *x == v)
                .map(|i| i + 1)
                .ok_or_else(|| config_err(format!("boxes.{what} = {v} is not in boxes.n"))),
        };
        let len = n.len();
        if len < 2 && (self.boxes.small.is_none() || self.boxes.large.is_none()) {
            return Ok((0, len));
        }
        Ok((find(self.boxes.small, len - 1, "small")?, find(self.boxes.large, len, "large")?))
    }

    pub fn test_function(&self) -> Result<TestFunction> {
        let dim = self.dim();
        let tf = &self.test_function;
        TestFunction::new(
            dim,
            point(&tf.half_width, dim, "test_function.half_width")?,
            point(&tf.shift, dim, "test_function.shift")?,
            Complex64::new(tf.amplitude, 0.0),
        )
    }

    pub fn frequency_grid(&self) -> Result<FrequencyGrid> {
        let dim = self.dim();
        let large = *self.boxes.n.last().ok_or_else(|| config_err("boxes.n is empty"))?;
        Ok(FrequencyGrid {
            lo: broadcast(&self.grid.lo, dim, "grid.lo")?,
            hi: broadcast(&self.grid.hi, dim, "grid.hi")?,
            spacing: self.grid.spacing.unwrap_or(1.0 / (8.0 * large)),
        })
    }

    fn autocorr_options(&self) -> AutocorrOptions {
        let mut opts = AutocorrOptions {
            estimator: self.autocorr.estimator,
            ..AutocorrOptions::with_r_max(self.autocorr.r_max)
        };
        if let Some(limit) = self.autocorr.pair_limit {
            opts.pair_limit = limit;
        }
        opts
    }

    fn scan_settings(&self) -> ScanSettings {
        let ap = &self.almost_periods;
        ScanSettings {
            scan: ap.scan,
            overlap: ap.overlap,
            per_unit: ap.per_unit,
            epsilon_rel: ap.epsilon_rel,
            estimator: ap.estimator,
        }
    }

    fn observable(&self) -> Result<Observable> {
        let phi = self.test_function()?;
        let ap = &self.almost_periods;
        let map = ClampedPolynomial {
            coeffs: ap.map_coeffs.clone(),
            lo: ap.map_lo,
            hi: ap.map_hi,
        };
        Ok(match ap.correlation {
            CorrelationKind::Autocorr | CorrelationKind::Pairing => Observable::pairing(phi),
            CorrelationKind::Composed => Observable::composed(map, phi),
            CorrelationKind::Product => {
                let psi = phi.with_shift(phi.shift() + point(&ap.psi_shift, self.dim(), "psi_shift")?);
                Observable::Product(vec![Observable::composed(map.clone(), phi), Observable::composed(map, psi)])
            }
        })
    }

    fn experiment_params(&self, p: &PerturbationConfig) -> ExperimentParams {
        let ap = &self.almost_periods;
        ExperimentParams {
            peaks: self.peaks,
            theta_pp: p.theta_pp,
            theta_pp_after: p.theta_pp_after,
            coeff_bound: p.coeff_bound,
            scan: ap.scan,
            overlap: ap.overlap,
            per_unit: ap.per_unit,
            epsilon_rel: ap.epsilon_rel,
            estimator: ap.estimator,
        }
    }
}

/// Output directory: explicit flag, then the environment variable, then
/// `output.dir`, then `./out`.
pub fn resolve_out_dir(flag: Option<&Path>, cfg: &ExperimentConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

struct Outputs<'a> {
    dir: &'a Path,
    hash: String,
    written: Vec<PathBuf>,
}

impl Outputs<'_> {
    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let file = File::create(&path)?;
        self.written.push(path);
        Ok(BufWriter::new(file))
    }

    /// A text file whose first line is the provenance comment.
    fn text(&mut self, name: &str) -> Result<BufWriter<File>> {
        let mut w = self.create(name)?;
        writeln!(w, "# config_hash={}", self.hash)?;
        Ok(w)
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let doc = serde_json::json!({ "config_hash": self.hash, "report": value });
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, &doc).map_err(|e| Error::Io(e.into()))?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}

fn fmt_point(p: &Point, dim: usize) -> String {
    (0..dim).map(|a| format!("{:.16e}", p.coord(a))).collect::<Vec<_>>().join(",")
}

fn lambda_cols(dim: usize) -> String {
    (0..dim).map(|i| format!("lambda_{i}")).collect::<Vec<_>>().join(",")
}

/// Runs one command and returns the files written.
pub fn run(cmd: Command, cfg: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    fs::create_dir_all(out_dir)?;
    let mut out = Outputs {
        dir: out_dir,
        hash: cfg.hash(),
        written: Vec::new(),
    };
    log::info!("{} ({}) -> {}", cmd.name(), cfg.name, out_dir.display());
    match cmd {
        Command::Generate => generate(cfg, &mut out)?,
        Command::Autocorr => autocorr(cfg, &mut out)?,
        Command::Diffract => diffract(cfg, &mut out)?,
        Command::Spectral => spectral(cfg, &mut out)?,
        Command::AlmostPer => almostper(cfg, &mut out)?,
        Command::Perturb => perturb(cfg, &mut out)?,
        Command::VanHove => vanhove(cfg, &mut out)?,
    }
    Ok(out.written)
}

fn large_box(cfg: &ExperimentConfig) -> Result<Window> {
    let seq = cfg.sequence()?;
    Ok(*seq.get(seq.len())?)
}

fn two_scale(cfg: &ExperimentConfig) -> Result<(usize, usize)> {
    match cfg.pair_indices()? {
        (0, _) => Err(config_err("this command needs two box sizes in boxes.n")),
        pair => Ok(pair),
    }
}

fn generate(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let b = large_box(cfg)?;
    let patch = Patch::generate(&cfg.generator, &b)?;
    let mut w = out.text("measure.tsv")?;
    patch.measure.write_columnar(&mut w)?;
    w.flush()?;
    log::info!("{} atoms on {:?}", patch.measure.len(), b);
    Ok(())
}

fn autocorr(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let seq = cfg.sequence()?;
    let b = large_box(cfg)?;
    let opts = cfg.autocorr_options();
    let pad = match opts.estimator {
        Estimator::OneSided => opts.r_max,
        Estimator::Restricted => 0.0,
    };
    let patch = Patch::generate(&cfg.generator, &b.expand(pad + 1.0))?;
    let gamma = autocorr_for(&patch, &seq, seq.len(), opts)?;
    // the estimate's own header line comes first so it reads back
    let path = out.dir.join("autocorr.tsv");
    let mut w = BufWriter::new(File::create(&path)?);
    out.written.push(path);
    let mut header = Vec::new();
    gamma.write_columnar(&mut header)?;
    let text = String::from_utf8(header).expect("utf-8");
    let (first, rest) = text.split_once('\n').unwrap_or((&text, ""));
    writeln!(w, "{first}")?;
    writeln!(w, "# config_hash={}", out.hash)?;
    w.write_all(rest.as_bytes())?;
    w.flush()?;

    let phi = cfg.test_function()?;
    let kernel = correlation_kernel(&phi, &phi)?;
    let dim = cfg.dim();
    let mut w = out.text("convergence.csv")?;
    let tcols: Vec<String> = (0..dim).map(|i| format!("t_{i}")).collect();
    writeln!(w, "n,half_width,{},re,im,abs_bound", tcols.join(","))?;
    for t in &cfg.autocorr.t {
        let t = point(t, dim, "autocorr.t")?;
        for row in convergence_table(&patch, &seq, std::slice::from_ref(&kernel), &t, opts)? {
            writeln!(
                w,
                "{},{:.16e},{},{:.16e},{:.16e},{:.16e}",
                row.n,
                cfg.boxes.n[row.n - 1],
                fmt_point(&t, dim),
                row.values[0].re,
                row.values[0].im,
                row.tv_values[0]
            )?;
        }
    }
    w.flush()?;
    log::info!("{} difference atoms, hermitian: {}", gamma.differences.len(), gamma.is_hermitian());
    Ok(())
}

#[derive(Serialize)]
struct DiffractSummary {
    bragg: Vec<Vec<f64>>,
    pure_point_ratio: crate::diffraction::PurePointRatio,
}

fn diffract(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let seq = cfg.sequence()?;
    let (small, large) = two_scale(cfg)?;
    let b = *seq.get(large)?;
    let patch = Patch::generate(&cfg.generator, &b.expand(1.0))?;
    let grid = cfg.frequency_grid()?;
    let profile = diffraction_profile(&patch.measure, &b, &grid)?;
    let mut w = out.text("profile.csv")?;
    profile.write_csv(&mut w, cfg.dim())?;
    w.flush()?;
    let peaks = detect_peaks(&patch, &seq, small, large, &grid, &cfg.peaks)?;
    let mut w = out.text("peaks.csv")?;
    peaks.write_csv(&mut w)?;
    w.flush()?;
    let ratio = pure_point_ratio(&patch, &seq, large, &cfg.test_function()?, &peaks)?;
    let bragg: Vec<Vec<f64>> = peaks.bragg().map(|p| p.frequency.clone()).collect();
    log::info!("{} bragg peaks, pure-point ratio {:.4}", bragg.len(), ratio.ratio);
    out.json(
        "diffract.json",
        &DiffractSummary {
            bragg,
            pure_point_ratio: ratio,
        },
    )
}

#[derive(Serialize)]
struct IdentityRow {
    lambda: Vec<f64>,
    eigen_average_abs2: f64,
    predicted: f64,
    rel_error: f64,
    ensemble_intensity: Option<crate::autocorrelation::Estimate>,
    /// `|B|·|c_B(λ)|²`, the diffuse density estimate.
    ensemble_periodogram: Option<crate::autocorrelation::Estimate>,
}

fn spectral(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let seq = cfg.sequence()?;
    let dim = cfg.dim();
    let phi = cfg.test_function()?;
    let b = large_box(cfg)?;
    let patch = Patch::generate(&cfg.generator, &b.expand(phi.support().diameter() + 1.0))?;
    let lambdas: Vec<Point> = cfg
        .spectral
        .lambdas
        .iter()
        .map(|l| point(l, dim, "spectral.lambdas"))
        .collect::<Result<_>>()?;
    let mut w = out.text("eigen_average.csv")?;
    writeln!(w, "{},n,half_width,re,im,abs2,predicted", lambda_cols(dim))?;
    let mut report = Vec::new();
    for lambda in &lambdas {
        let mut last = (0.0, 0.0);
        for n in 1..=seq.len() {
            let bn = seq.get(n)?;
            let a = eigen_average(&patch, &phi, lambda, &seq, n)?;
            let predicted = tent_fourier(&phi, lambda).norm_sqr() * bragg_amplitude(&patch.measure, bn, lambda).norm_sqr();
            writeln!(
                w,
                "{},{n},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                fmt_point(lambda, dim),
                cfg.boxes.n[n - 1],
                a.re,
                a.im,
                a.norm_sqr(),
                predicted
            )?;
            last = (a.norm_sqr(), predicted);
        }
        let ensemble = match cfg.spectral.replicates {
            0 => None,
            r => Some(ensemble_intensity(&cfg.generator, &b, lambda, r, cfg.spectral.random_offset)?),
        };
        report.push(IdentityRow {
            lambda: (0..dim).map(|a| lambda.coord(a)).collect(),
            eigen_average_abs2: last.0,
            predicted: last.1,
            rel_error: if last.1 > 0.0 { (last.0 - last.1).abs() / last.1 } else { last.0 },
            ensemble_periodogram: ensemble.map(|e| crate::autocorrelation::Estimate {
                mean: e.mean * b.volume(),
                std_error: e.std_error * b.volume(),
                ..e
            }),
            ensemble_intensity: ensemble,
        });
    }
    w.flush()?;
    out.json("spectral_identity.json", &report)
}

#[derive(Serialize)]
struct AlmostPeriodSummary {
    correlation: CorrelationKind,
    g0: f64,
    gap_limit: f64,
    passes: bool,
    count: usize,
    #[serde(flatten)]
    periods: AlmostPeriods,
}

fn almostper(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    if cfg.dim() != 1 {
        return Err(config_err("almostper is one-dimensional"));
    }
    let seq = cfg.sequence()?;
    let n = seq.len();
    let b = *seq.get(n)?;
    let phi = cfg.test_function()?;
    let ap = &cfg.almost_periods;
    let settings = cfg.scan_settings();
    let range = ap.scan + ap.overlap;
    let reach = settings.r_max(&phi) + phi.support().diameter() + 1.0;
    let patch = Patch::generate(&cfg.generator, &b.expand(reach))?;
    let (g, periods) = if ap.correlation == CorrelationKind::Autocorr {
        let periods = correlation_almost_periods(&patch, &seq, n, &phi, &settings)?;
        let opts = AutocorrOptions {
            estimator: settings.estimator,
            ..AutocorrOptions::with_r_max(settings.r_max(&phi))
        };
        let gamma = autocorr_for(&patch, &seq, n, opts)?;
        (SampledCorrelation::from_autocorr(&gamma, &phi, &phi, ap.per_unit, range)?, periods)
    } else {
        let g = SampledCorrelation::from_observable(&patch, &cfg.observable()?, &seq, n, ap.per_unit, range)?;
        let eps = (ap.epsilon_rel * g.at(0).norm()).max(f64::MIN_POSITIVE);
        let periods = almost_periods(&g, ap.scan, ap.overlap, eps)?;
        (g, periods)
    };
    let mut w = out.text("correlation.csv")?;
    writeln!(w, "t,re,im")?;
    let m = g.half_len() as isize;
    for i in -m..=m {
        let v = g.at(i);
        writeln!(w, "{:.16e},{:.16e},{:.16e}", g.t(i), v.re, v.im)?;
    }
    w.flush()?;
    let mut w = out.text("almost_periods.csv")?;
    writeln!(w, "t")?;
    for t in &periods.periods {
        writeln!(w, "{t:.16e}")?;
    }
    w.flush()?;
    let summary = AlmostPeriodSummary {
        correlation: ap.correlation,
        g0: g.at(0).norm(),
        gap_limit: ap.gap_limit,
        passes: periods.passes(ap.gap_limit),
        count: periods.periods.len(),
        periods,
    };
    log::info!("{} almost periods, max gap {}", summary.count, summary.periods.max_gap);
    out.json("almost_periods.json", &summary)
}

fn perturb(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let p = cfg
        .perturbation
        .as_ref()
        .ok_or_else(|| config_err("perturb needs a [perturbation] section"))?;
    let seq = cfg.sequence()?;
    let (small, large) = two_scale(cfg)?;
    let report = perturbation_experiment(
        &p.rule,
        &cfg.generator,
        &seq,
        small,
        large,
        &cfg.test_function()?,
        &cfg.frequency_grid()?,
        &cfg.experiment_params(p),
    )?;
    log::info!(
        "support flag {}, pure-point flag {}, ratio after {:.4}, max residual {:.3e}",
        report.flag_support,
        report.flag_pp,
        report.ratio_after.ratio,
        report.max_residual()
    );
    out.json("perturbation.json", &report)
}

fn vanhove(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let seq = cfg.sequence()?;
    let dim = cfg.dim();
    let k = Window::new(dim, Point::ORIGIN, point(&cfg.vanhove.k_half_width, dim, "vanhove.k_half_width")?)?;
    let phi = cfg.test_function()?;
    let h = Observable::pairing(phi);
    let b = large_box(cfg)?;
    let patch = Patch::generate(&cfg.generator, &b.minkowski_sum(&k).expand(phi.support().diameter() + 1.0))?;
    let rows = vanhove_diagnostics(&seq, &k, cfg.vanhove.boundary_terms.then_some((&h, &patch)))?;
    let mut w = out.text("vanhove.csv")?;
    writeln!(w, "# tempered_constant={:.16e}", tempered_constant(&seq)?)?;
    writeln!(w, "n,half_width,volume,folner_ratio,vanhove_ratio,tempered_ratio,boundary_term")?;
    for r in rows {
        let bt = r.boundary_term.map_or(String::new(), |v| format!("{v:.16e}"));
        writeln!(
            w,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{bt}",
            r.n,
            cfg.boxes.n[r.n - 1],
            r.volume,
            r.folner_ratio,
            r.vanhove_ratio,
            r.tempered_ratio
        )?;
    }
    w.flush()?;
    Ok(())
}
