//! Flat `key = value` experiment configs, one `[mode]` section per run mode.
//!
//! ```text
//! # everything after a `#` is a comment
//! [sweep]
//! field = complex
//! ensemble = iid_gaussian          # or row_correlated:RHO | from_file:PATH
//! n = 16
//! delta_grid = 2, 4, 6, 8, 10
//! estimators = lspe-c, si:identity
//! trials = 500
//! seed = 1
//! output = sweep.csv
//! ```
//!
//! There is no nesting: a file is a sequence of `[mode]` sections, each a
//! list of `key = value` lines. Keys outside a section, unknown keys or
//! sections, duplicates, and malformed values are all hard errors, and every
//! diagnostic names the file and line.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use lspe_core::analysis::{EstimatorSpec, DEFAULT_SI_MOMENT_SAMPLES};
use lspe_core::estimator::DEFAULT_RIDGE;
use lspe_core::FieldTag;

use crate::error::{KitError, Result};

/// Ceiling on `--average-matrices`: the stream layout reserves 128 repeat
/// bands per sweep point (see `runner`).
pub const MAX_AVERAGE_MATRICES: usize = 128;
/// Ceiling on trials per point, from the same layout (2³¹ slots per band).
pub const MAX_TRIALS: usize = (1 << 31) - 1;
/// Ceiling on (estimator, grid) points per run (2²⁴ point bands).
pub const MAX_POINTS: usize = 1 << 24;

/// How the sensing matrix is produced for each experiment point.
#[derive(Clone, Debug, PartialEq)]
pub enum EnsembleSpec {
    Iid,
    RowCorrelated { rho: f64 },
    FromFile { path: PathBuf },
}

/// The measurement-model parameters shared by sweep and validate runs.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemParams {
    pub field: FieldTag,
    pub ensemble: EnsembleSpec,
    pub sigma_x_sq: f64,
    pub noise_ez_var: f64,
    pub noise_ey_mean: f64,
    pub noise_ey_var: f64,
}

/// `[sweep]`: one dimension, a δ grid, a list of estimators.
#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub sys: SystemParams,
    pub n: usize,
    pub delta_grid: Vec<f64>,
    pub estimators: Vec<EstimatorSpec>,
    pub trials: usize,
    pub seed: u64,
    pub ridge: f64,
    pub si_moment_samples: usize,
    pub average_matrices: usize,
    pub threads: usize,
    pub output: Option<PathBuf>,
}

/// `[validate]`: a dimension grid at fixed δ (default 8, i.e. M = 8N).
#[derive(Clone, Debug)]
pub struct ValidateConfig {
    pub sys: SystemParams,
    pub n_grid: Vec<usize>,
    pub delta: f64,
    pub estimators: Vec<EstimatorSpec>,
    pub trials: usize,
    pub seed: u64,
    pub ridge: f64,
    pub si_moment_samples: usize,
    pub average_matrices: usize,
    pub threads: usize,
    pub output: Option<PathBuf>,
}

/// `[estimate]`: one sensing matrix, one measurement vector, one estimator.
#[derive(Clone, Debug)]
pub struct EstimateConfig {
    pub matrix: PathBuf,
    pub measurements: PathBuf,
    pub estimator: EstimatorSpec,
    pub sigma_x_sq: f64,
    pub noise_ez_var: f64,
    pub noise_ey_mean: f64,
    pub noise_ey_var: f64,
    pub ridge: f64,
    pub si_moment_samples: usize,
    pub seed: u64,
    pub output: PathBuf,
}

/// `[moments]`: the closed-form moment oracle suite.
#[derive(Clone, Debug)]
pub struct MomentsConfig {
    pub samples: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

/// CLI flags that override config-file values.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
    pub average_matrices: Option<usize>,
}

// ---------------------------------------------------------------------------
// Raw key = value layer
// ---------------------------------------------------------------------------

struct Entry {
    key: String,
    value: String,
    line: usize,
}

struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

const SECTION_NAMES: [&str; 4] = ["sweep", "validate", "estimate", "moments"];

fn parse_sections(path: &Path, text: &str) -> Result<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(inner) = line.strip_prefix('[') {
            let name = inner
                .strip_suffix(']')
                .ok_or_else(|| KitError::parse(path, lineno, "unclosed section header"))?
                .trim();
            if !SECTION_NAMES.contains(&name) {
                return Err(KitError::parse(
                    path,
                    lineno,
                    format!("unknown section `[{name}]` (expected one of [sweep], [validate], [estimate], [moments])"),
                ));
            }
            if sections.iter().any(|s| s.name == name) {
                return Err(KitError::parse(
                    path,
                    lineno,
                    format!("duplicate section `[{name}]`"),
                ));
            }
            sections.push(Section {
                name: name.to_string(),
                line: lineno,
                entries: Vec::new(),
            });
            continue;
        }
        let Some(eq) = line.find('=') else {
            return Err(KitError::parse(
                path,
                lineno,
                format!("expected `key = value`, got `{line}`"),
            ));
        };
        let key = line[..eq].trim();
        let value = line[eq + 1..].trim();
        if key.is_empty() {
            return Err(KitError::parse(path, lineno, "empty key before `=`"));
        }
        if value.is_empty() {
            return Err(KitError::parse(
                path,
                lineno,
                format!("key `{key}` has an empty value"),
            ));
        }
        let Some(section) = sections.last_mut() else {
            return Err(KitError::parse(
                path,
                lineno,
                format!("key `{key}` appears before any [mode] section"),
            ));
        };
        if section.entries.iter().any(|e| e.key == key) {
            return Err(KitError::parse(
                path,
                lineno,
                format!("duplicate key `{key}` in section `[{}]`", section.name),
            ));
        }
        section.entries.push(Entry {
            key: key.to_string(),
            value: value.to_string(),
            line: lineno,
        });
    }
    Ok(sections)
}

/// One section's entries with typed, consume-once access. `finish` rejects
/// whatever was never asked for, so misspelled keys cannot silently no-op.
struct Keys<'a> {
    path: &'a Path,
    section: String,
    entries: Vec<Entry>,
    used: HashSet<usize>,
}

impl<'a> Keys<'a> {
    fn get(&mut self, key: &str) -> Option<(String, usize)> {
        for (i, e) in self.entries.iter().enumerate() {
            if e.key == key {
                self.used.insert(i);
                return Some((e.value.clone(), e.line));
            }
        }
        None
    }

    fn require(&mut self, key: &str) -> Result<(String, usize)> {
        self.get(key).ok_or_else(|| {
            KitError::parse(
                self.path,
                0,
                format!("section `[{}]` is missing required key `{key}`", self.section),
            )
        })
    }

    fn parse<T: std::str::FromStr>(&self, v: &str, line: usize, what: &str) -> Result<T> {
        v.parse()
            .map_err(|_| KitError::parse(self.path, line, format!("`{v}` is not {what}")))
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            Some((v, line)) => self.parse(&v, line, "a number"),
            None => Ok(default),
        }
    }

    fn u64_or(&mut self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            Some((v, line)) => self.parse(&v, line, "a 64-bit unsigned integer"),
            None => Ok(default),
        }
    }

    fn usize_or(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            Some((v, line)) => self.parse(&v, line, "a non-negative integer"),
            None => Ok(default),
        }
    }

    fn path_opt(&mut self, key: &str) -> Option<PathBuf> {
        self.get(key).map(|(v, _)| PathBuf::from(v))
    }

    fn finish(self) -> Result<()> {
        for (i, e) in self.entries.iter().enumerate() {
            if !self.used.contains(&i) {
                return Err(KitError::parse(
                    self.path,
                    e.line,
                    format!("unknown key `{}` in section `[{}]`", e.key, self.section),
                ));
            }
        }
        Ok(())
    }
}

fn load_section<'a>(path: &'a Path, text: &str, name: &str) -> Result<Keys<'a>> {
    let sections = parse_sections(path, text)?;
    let section = sections
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| KitError::parse(path, 0, format!("no `[{name}]` section in this file")))?;
    Ok(Keys {
        path,
        section: section.name,
        entries: section.entries,
        used: HashSet::new(),
    })
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| KitError::io(path, e))
}

// ---------------------------------------------------------------------------
// Typed extraction
// ---------------------------------------------------------------------------

fn field(keys: &mut Keys) -> Result<FieldTag> {
    match keys.get("field") {
        None => Ok(FieldTag::Complex),
        Some((v, line)) => match v.as_str() {
            "real" => Ok(FieldTag::Real),
            "complex" => Ok(FieldTag::Complex),
            other => Err(KitError::parse(
                keys.path,
                line,
                format!("field must be `real` or `complex`, got `{other}`"),
            )),
        },
    }
}

fn ensemble(keys: &mut Keys) -> Result<EnsembleSpec> {
    let Some((v, line)) = keys.get("ensemble") else {
        return Ok(EnsembleSpec::Iid);
    };
    if v == "iid_gaussian" {
        return Ok(EnsembleSpec::Iid);
    }
    if let Some(rest) = v.strip_prefix("row_correlated:") {
        let rho: f64 = keys.parse(rest.trim(), line, "a number (RHO)")?;
        if !(0.0..1.0).contains(&rho) {
            return Err(KitError::parse(
                keys.path,
                line,
                format!("row_correlated RHO must lie in [0, 1), got {rho}"),
            ));
        }
        return Ok(EnsembleSpec::RowCorrelated { rho });
    }
    if let Some(rest) = v.strip_prefix("from_file:") {
        let p = rest.trim();
        if p.is_empty() {
            return Err(KitError::parse(keys.path, line, "from_file: needs a path"));
        }
        return Ok(EnsembleSpec::FromFile {
            path: PathBuf::from(p),
        });
    }
    Err(KitError::parse(
        keys.path,
        line,
        format!("ensemble must be `iid_gaussian`, `row_correlated:RHO`, or `from_file:PATH`, got `{v}`"),
    ))
}

fn system_params(keys: &mut Keys) -> Result<SystemParams> {
    let field = field(keys)?;
    let ensemble = ensemble(keys)?;
    let sigma_x_sq = keys.f64_or("sigma_x_sq", 1.0)?;
    if !(sigma_x_sq > 0.0) || !sigma_x_sq.is_finite() {
        return Err(KitError::invalid(format!(
            "sigma_x_sq must be finite and > 0, got {sigma_x_sq}"
        )));
    }
    let noise_ez_var = keys.f64_or("noise_ez_var", 0.0)?;
    let noise_ey_mean = keys.f64_or("noise_ey_mean", 0.0)?;
    let noise_ey_var = keys.f64_or("noise_ey_var", 0.0)?;
    if !(noise_ez_var >= 0.0) || !(noise_ey_var >= 0.0) {
        return Err(KitError::invalid(
            "noise variances must be >= 0".to_string(),
        ));
    }
    Ok(SystemParams {
        field,
        ensemble,
        sigma_x_sq,
        noise_ez_var,
        noise_ey_mean,
        noise_ey_var,
    })
}

fn estimator_list(keys: &mut Keys, key: &str, field: FieldTag) -> Result<Option<Vec<EstimatorSpec>>> {
    let Some((v, line)) = keys.get(key) else {
        return Ok(None);
    };
    let mut out = Vec::new();
    for part in v.split(',') {
        let part = part.trim();
        if part.is_empty() {
            return Err(KitError::parse(keys.path, line, "empty estimator name in list"));
        }
        let spec = EstimatorSpec::parse(part)
            .map_err(|e| KitError::parse(keys.path, line, format!("`{part}`: {e}")))?;
        check_estimator_field(&spec, field)
            .map_err(|m| KitError::parse(keys.path, line, m))?;
        if out.iter().any(|s: &EstimatorSpec| s.label() == spec.label()) {
            return Err(KitError::parse(
                keys.path,
                line,
                format!("estimator `{part}` listed twice"),
            ));
        }
        out.push(spec);
    }
    Ok(Some(out))
}

/// LSPE closed forms are field-specific; catch mismatches before any run.
fn check_estimator_field(spec: &EstimatorSpec, field: FieldTag) -> std::result::Result<(), String> {
    let needs = match spec {
        EstimatorSpec::LspeReal => Some(FieldTag::Real),
        EstimatorSpec::LspeComplex | EstimatorSpec::LspeExp { .. } => Some(FieldTag::Complex),
        EstimatorSpec::Si { .. } => None,
    };
    match needs {
        Some(f) if f != field => Err(format!(
            "estimator `{}` requires field = {}",
            spec.label(),
            match f {
                FieldTag::Real => "real",
                FieldTag::Complex => "complex",
            }
        )),
        _ => Ok(()),
    }
}

fn f64_grid(keys: &mut Keys, key: &str) -> Result<Vec<f64>> {
    let (v, line) = keys.require(key)?;
    let mut out = Vec::new();
    for part in v.split(',') {
        let part = part.trim();
        let x: f64 = keys.parse(part, line, "a number")?;
        if !(x >= 1.0) || !x.is_finite() {
            return Err(KitError::parse(
                keys.path,
                line,
                format!("{key} entries must be finite and >= 1, got {part}"),
            ));
        }
        out.push(x);
    }
    Ok(out)
}

fn usize_grid(keys: &mut Keys, key: &str) -> Result<Vec<usize>> {
    let (v, line) = keys.require(key)?;
    let mut out = Vec::new();
    for part in v.split(',') {
        let part = part.trim();
        let x: usize = keys.parse(part, line, "a positive integer")?;
        if x == 0 {
            return Err(KitError::parse(
                keys.path,
                line,
                format!("{key} entries must be >= 1"),
            ));
        }
        out.push(x);
    }
    Ok(out)
}

struct RunCommon {
    trials: usize,
    seed: u64,
    ridge: f64,
    si_moment_samples: usize,
    average_matrices: usize,
    threads: usize,
    output: Option<PathBuf>,
}

fn run_common(keys: &mut Keys, ov: &Overrides, default_trials: usize) -> Result<RunCommon> {
    let trials = keys.usize_or("trials", default_trials)?;
    if trials == 0 || trials > MAX_TRIALS {
        return Err(KitError::invalid(format!(
            "trials must lie in 1..={MAX_TRIALS}, got {trials}"
        )));
    }
    let seed = match ov.seed {
        Some(s) => {
            let _ = keys.get("seed"); // consume; the flag wins
            s
        }
        None => keys.u64_or("seed", 0)?,
    };
    let ridge = keys.f64_or("ridge", DEFAULT_RIDGE)?;
    if !(ridge >= 0.0) || !ridge.is_finite() {
        return Err(KitError::invalid(format!(
            "ridge must be finite and >= 0, got {ridge}"
        )));
    }
    let si_moment_samples = keys.usize_or("si_moment_samples", DEFAULT_SI_MOMENT_SAMPLES)?;
    if si_moment_samples == 0 || si_moment_samples > MAX_TRIALS {
        return Err(KitError::invalid(format!(
            "si_moment_samples must lie in 1..={MAX_TRIALS}, got {si_moment_samples}"
        )));
    }
    let average_matrices = match ov.average_matrices {
        Some(k) => {
            let _ = keys.get("average_matrices");
            k
        }
        None => keys.usize_or("average_matrices", 1)?,
    };
    if average_matrices == 0 || average_matrices > MAX_AVERAGE_MATRICES {
        return Err(KitError::invalid(format!(
            "average_matrices must lie in 1..={MAX_AVERAGE_MATRICES}, got {average_matrices}"
        )));
    }
    let threads = match ov.threads {
        Some(k) => {
            let _ = keys.get("threads");
            k
        }
        None => keys.usize_or("threads", 1)?,
    };
    if threads == 0 {
        return Err(KitError::invalid("threads must be >= 1".to_string()));
    }
    let output = ov.output.clone().or_else(|| keys.path_opt("output"));
    Ok(RunCommon {
        trials,
        seed,
        ridge,
        si_moment_samples,
        average_matrices,
        threads,
        output,
    })
}

/// Load the `[sweep]` section of `path`, applying CLI overrides.
pub fn load_sweep(path: &Path, ov: &Overrides) -> Result<SweepConfig> {
    let text = read_to_string(path)?;
    let mut keys = load_section(path, &text, "sweep")?;
    let sys = system_params(&mut keys)?;
    let (n_str, n_line) = keys.require("n")?;
    let n: usize = keys.parse(&n_str, n_line, "a positive integer")?;
    if n == 0 {
        return Err(KitError::parse(path, n_line, "n must be >= 1"));
    }
    let delta_grid = f64_grid(&mut keys, "delta_grid")?;
    let estimators = estimator_list(&mut keys, "estimators", sys.field)?
        .ok_or_else(|| KitError::parse(path, 0, "section `[sweep]` is missing required key `estimators`"))?;
    if estimators.is_empty() {
        return Err(KitError::invalid("estimators list is empty".to_string()));
    }
    let common = run_common(&mut keys, ov, 500)?;
    keys.finish()?;
    if estimators.len() * delta_grid.len() > MAX_POINTS {
        return Err(KitError::invalid(format!(
            "too many sweep points (> {MAX_POINTS})"
        )));
    }
    Ok(SweepConfig {
        sys,
        n,
        delta_grid,
        estimators,
        trials: common.trials,
        seed: common.seed,
        ridge: common.ridge,
        si_moment_samples: common.si_moment_samples,
        average_matrices: common.average_matrices,
        threads: common.threads,
        output: common.output,
    })
}

/// Load the `[validate]` section of `path`, applying CLI overrides.
pub fn load_validate(path: &Path, ov: &Overrides) -> Result<ValidateConfig> {
    let text = read_to_string(path)?;
    let mut keys = load_section(path, &text, "validate")?;
    let sys = system_params(&mut keys)?;
    let n_grid = usize_grid(&mut keys, "n_grid")?;
    let delta = keys.f64_or("delta", 8.0)?;
    if !(delta >= 1.0) || !delta.is_finite() {
        return Err(KitError::invalid(format!(
            "delta must be finite and >= 1, got {delta}"
        )));
    }
    // default: the field's LSPE closed form against the optimally scaled
    // identity initializer — the pair the analytic expressions compare
    let estimators = match estimator_list(&mut keys, "estimators", sys.field)? {
        Some(list) if !list.is_empty() => list,
        Some(_) => return Err(KitError::invalid("estimators list is empty".to_string())),
        None => {
            let lspe = match sys.field {
                FieldTag::Real => EstimatorSpec::LspeReal,
                FieldTag::Complex => EstimatorSpec::LspeComplex,
            };
            vec![
                lspe,
                EstimatorSpec::Si {
                    preproc: lspe_core::preprocess::Preprocessor::Identity,
                },
            ]
        }
    };
    let common = run_common(&mut keys, ov, 10_000)?;
    keys.finish()?;
    if estimators.len() * n_grid.len() > MAX_POINTS {
        return Err(KitError::invalid(format!(
            "too many validate points (> {MAX_POINTS})"
        )));
    }
    Ok(ValidateConfig {
        sys,
        n_grid,
        delta,
        estimators,
        trials: common.trials,
        seed: common.seed,
        ridge: common.ridge,
        si_moment_samples: common.si_moment_samples,
        average_matrices: common.average_matrices,
        threads: common.threads,
        output: common.output,
    })
}

/// Load the `[estimate]` section of `path`, applying CLI overrides.
pub fn load_estimate(path: &Path, ov: &Overrides) -> Result<EstimateConfig> {
    let text = read_to_string(path)?;
    let mut keys = load_section(path, &text, "estimate")?;
    let matrix = PathBuf::from(keys.require("matrix")?.0);
    let measurements = PathBuf::from(keys.require("measurements")?.0);
    let (est_str, est_line) = keys.require("estimator")?;
    let estimator = EstimatorSpec::parse(&est_str)
        .map_err(|e| KitError::parse(path, est_line, format!("`{est_str}`: {e}")))?;
    let sigma_x_sq = keys.f64_or("sigma_x_sq", 1.0)?;
    if !(sigma_x_sq > 0.0) || !sigma_x_sq.is_finite() {
        return Err(KitError::invalid(format!(
            "sigma_x_sq must be finite and > 0, got {sigma_x_sq}"
        )));
    }
    let noise_ez_var = keys.f64_or("noise_ez_var", 0.0)?;
    let noise_ey_mean = keys.f64_or("noise_ey_mean", 0.0)?;
    let noise_ey_var = keys.f64_or("noise_ey_var", 0.0)?;
    if !(noise_ez_var >= 0.0) || !(noise_ey_var >= 0.0) {
        return Err(KitError::invalid("noise variances must be >= 0".to_string()));
    }
    let ridge = keys.f64_or("ridge", DEFAULT_RIDGE)?;
    let si_moment_samples = keys.usize_or("si_moment_samples", DEFAULT_SI_MOMENT_SAMPLES)?;
    let seed = match ov.seed {
        Some(s) => {
            let _ = keys.get("seed");
            s
        }
        None => keys.u64_or("seed", 0)?,
    };
    let output = match ov.output.clone().or_else(|| keys.path_opt("output")) {
        Some(p) => p,
        None => {
            return Err(KitError::parse(
                path,
                0,
                "estimate mode needs an output path (key `output` or flag --output)",
            ))
        }
    };
    keys.finish()?;
    Ok(EstimateConfig {
        matrix,
        measurements,
        estimator,
        sigma_x_sq,
        noise_ez_var,
        noise_ey_mean,
        noise_ey_var,
        ridge,
        si_moment_samples,
        seed,
        output,
    })
}

/// Load the `[moments]` section of `path`, applying CLI overrides.
pub fn load_moments(path: &Path, ov: &Overrides) -> Result<MomentsConfig> {
    let text = read_to_string(path)?;
    let mut keys = load_section(path, &text, "moments")?;
    let samples = keys.usize_or("samples", 1_000_000)?;
    if samples == 0 {
        return Err(KitError::invalid("samples must be >= 1".to_string()));
    }
    let seed = match ov.seed {
        Some(s) => {
            let _ = keys.get("seed");
            s
        }
        None => keys.u64_or("seed", 0)?,
    };
    let output = ov.output.clone().or_else(|| keys.path_opt("output"));
    keys.finish()?;
    Ok(MomentsConfig {
        samples,
        seed,
        output,
    })
}
