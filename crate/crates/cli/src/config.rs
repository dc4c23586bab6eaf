//! Run configuration, read from a TOML file.
//!
//! ```toml
//! seed = 7
//! output_dir = "maxlab-out"
//! young = ["power(1.5)", "power(2)"]
//! corpus = ["indicator(0.5)", "gauge-power(0.5)", "step", "fields/b.csv"]
//!
//! [group]
//! kind = "euclidean"
//! n = 1
//!
//! [grid]
//! lo = [-1.0]
//! hi = [1.0]
//! points = [1025]
//!
//! [family]
//! centers_stride = 16
//! r_max = 0.5
//! cover = true
//! ```
//!
//! Corpus entries that do not parse as generator tags are read as field CSV
//! paths, relative to the config file.

use crate::error::CliError;
use maxlab::corpus::{default_corpus, Generator};
use maxlab::field_io::read_field_file;
use maxlab::maximal::FamilyParams;
use maxlab::{GridSpec, GroupKind, GroupSpec, SampledField, YoungFunction};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

/// Largest resolution per axis, indexed by coordinate dimension.
pub fn max_points_per_axis(dim: usize) -> usize {
    match dim {
        1 => 4097,
        2 => 1025,
        _ => 129,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum GridScale {
    Small,
    #[default]
    Default,
    Large,
}

impl GridScale {
    /// Halves or doubles the cell count per axis.
    pub fn apply(self, points: usize) -> usize {
        match self {
            GridScale::Small => (points - 1).div_ceil(2) + 1,
            GridScale::Default => points,
            GridScale::Large => 2 * (points - 1) + 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub points: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Slack for pointwise inequalities.
    pub absolute: f64,
    /// Relative slack for norm identities and inequalities.
    pub relative: f64,
    /// Relative slack for norm ordering (weak below strong).
    pub ordering: f64,
    /// Lower end of the sharp-maximal half identity.
    pub sharp_half_min: f64,
    /// Allowed error of log-log slopes.
    pub slope: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            absolute: 1e-9,
            relative: 1e-6,
            ordering: 1e-9,
            sharp_half_min: 0.45,
            slope: 1e-3,
        }
    }
}

/// One almost-decreasing check on an explicit `Psi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlmostDecreasingConfig {
    pub psi: String,
    pub eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Smoothness exponent for the Lipschitz checks.
    pub beta: f64,
    /// Fractional order used alongside `alpha = 0`.
    pub alpha: f64,
    /// Seeded `(b, f)` pairs for the pointwise and Hölder checks.
    pub pairs: usize,
    /// Exponent of the almost-decreasing checks on derived `Psi`.
    pub eps: f64,
    pub almost_decreasing: Vec<AlmostDecreasingConfig>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            beta: 0.5,
            alpha: 0.5,
            pairs: 5,
            eps: 0.5,
            almost_decreasing: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub group: GroupSpec,
    pub grid: GridConfig,
    pub young: Vec<String>,
    pub family: FamilyParams,
    pub corpus: Vec<String>,
    /// Cells per axis of the unit-ball quadrature, used when the group has no
    /// stored constants.
    pub calibration_resolution: usize,
    pub tolerances: Tolerances,
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: PathBuf::from("maxlab-out"),
            group: GroupSpec::euclidean(1).expect("n = 1 is valid"),
            grid: GridConfig {
                lo: vec![-1.0],
                hi: vec![1.0],
                points: vec![1025],
            },
            young: ["power(1)", "power(1.5)", "power(2)", "power(3)"]
                .map(String::from)
                .to_vec(),
            family: FamilyParams {
                centers_stride: 16,
                r_max: Some(0.5),
                cover: true,
                ..FamilyParams::default()
            },
            corpus: default_corpus().iter().map(|g| g.to_string()).collect(),
            calibration_resolution: 64,
            tolerances: Tolerances::default(),
            verify: VerifyConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, source: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("{source}: {e}")))
    }

    pub fn load(path: &Path) -> Result<(Self, PathBuf), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((Self::from_toml(&text, &path.display().to_string())?, base))
    }
}

/// A config after validation: group constants calibrated, grid built and
/// scaled, descriptors parsed, corpus fields loaded.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub config: RunConfig,
    pub grid: Arc<GridSpec>,
    pub young: Vec<YoungFunction>,
    pub corpus: Vec<(String, SampledField)>,
    /// Directory that relative corpus paths are resolved against.
    pub base_dir: PathBuf,
}

impl Resolved {
    pub fn new(config: RunConfig, base_dir: PathBuf, scale: GridScale) -> Result<Self, CliError> {
        let group = match (config.group.c1, config.group.c0, config.group.kind) {
            (Some(_), Some(_), _) => config.group.clone(),
            (_, _, GroupKind::Euclidean { n }) => GroupSpec::euclidean(n)?,
            _ => config
                .group
                .calibrate_constants(config.calibration_resolution)?,
        };
        let dim = group.coord_dim();
        let points: Vec<usize> = config.grid.points.iter().map(|&n| scale.apply(n)).collect();
        let limit = max_points_per_axis(dim);
        if let Some(&n) = points.iter().find(|&&n| n > limit) {
            return Err(CliError::Config(format!(
                "grid resolution {n} exceeds the limit of {limit} points per axis for {dim}-D grids"
            )));
        }
        let grid = Arc::new(GridSpec::new(
            group,
            config.grid.lo.clone(),
            config.grid.hi.clone(),
            points,
        )?);
        let young = config
            .young
            .iter()
            .map(|d| YoungFunction::from_str(d).map_err(CliError::from))
            .collect::<Result<Vec<_>, _>>()?;
        if young.is_empty() {
            return Err(CliError::Config("young list is empty".into()));
        }
        let corpus = config
            .corpus
            .iter()
            .map(|entry| Ok((entry.clone(), load_field(entry, &grid, &base_dir)?)))
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(Self {
            config,
            grid,
            young,
            corpus,
            base_dir,
        })
    }
}

/// Samples a generator tag, or reads a field CSV whose grid matches `grid`.
pub fn load_field(
    entry: &str,
    grid: &Arc<GridSpec>,
    base_dir: &Path,
) -> Result<SampledField, CliError> {
    if let Ok(generator) = Generator::from_str(entry) {
        return Ok(generator.sample(grid)?);
    }
    let looks_like_tag = entry.contains('(') || !entry.contains(['.', '/']);
    let path = base_dir.join(entry);
    if looks_like_tag && !path.exists() {
        return Err(CliError::Config(format!(
            "{entry:?} is neither a generator tag nor a field file"
        )));
    }
    let field = read_field_file(&path)?;
    let other = field.grid();
    let same = other.group.kind == grid.group.kind
        && other.points_per_axis == grid.points_per_axis
        && close(&other.lo, &grid.lo)
        && close(&other.hi, &grid.hi);
    if !same {
        return Err(CliError::Config(format!(
            "{}: field grid does not match the configured grid",
            path.display()
        )));
    }
    Ok(SampledField::from_values(
        grid.clone(),
        field.values().to_vec(),
    )?)
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + y.abs()))
}
