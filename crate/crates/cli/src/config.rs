//! Run configuration: a JSON file, then `--set path=value` overrides, then
//! the dedicated flags.

use std::path::{Path, PathBuf};

use corrdyn::catalog;
use corrdyn::equilibrium::{BBox, Observable, SamplerConfig, DEFAULT_ATOM_CAP};
use corrdyn::uniqueness::CompactSet;
use corrdyn::{Complex64, Correspondence, UniPoly};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

/// Either a catalog name or a full correspondence description.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CorrSpec {
    Catalog(String),
    Inline(Correspondence),
}

impl CorrSpec {
    pub fn resolve(&self) -> Result<Correspondence, CliError> {
        match self {
            CorrSpec::Catalog(name) => catalog::by_name(name).ok_or_else(|| {
                CliError::Config(format!(
                    "unknown catalog correspondence {name:?}; expected one of {:?}",
                    catalog::NAMES
                ))
            }),
            CorrSpec::Inline(c) => Ok(c.clone()),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Cells per side for measure distances.
    pub n_grid: usize,
    /// `[x_min, x_max, y_min, y_max]`; covers the measure when absent.
    pub bbox: Option<[f64; 4]>,
    /// Pixels per side of the density image.
    pub image_size: usize,
    pub bit_depth: u8,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_grid: 32,
            bbox: None,
            image_size: 256,
            bit_depth: 8,
        }
    }
}

impl GridConfig {
    pub fn bbox(&self) -> Result<Option<BBox>, CliError> {
        self.bbox
            .map(|[a, b, c, d]| BBox::new(a, b, c, d).map_err(|e| CliError::Config(format!("grid.bbox: {e}"))))
            .transpose()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasureConfig {
    pub n_samples: usize,
    pub burn_in: usize,
    pub chains: usize,
    pub atom_cap: usize,
    pub start_point: Complex64,
    /// Exact preimage tree of this depth instead of backward sampling.
    pub tree_depth: Option<usize>,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        let s = SamplerConfig::default();
        Self {
            n_samples: s.n_samples,
            burn_in: s.burn_in,
            chains: s.chains,
            atom_cap: DEFAULT_ATOM_CAP,
            start_point: s.start_point,
            tree_depth: None,
        }
    }
}

impl MeasureConfig {
    pub fn sampler(&self, seed: u64) -> SamplerConfig {
        SamplerConfig {
            seed,
            n_samples: self.n_samples,
            burn_in: self.burn_in,
            atom_cap: self.atom_cap,
            start_point: self.start_point,
            chains: self.chains,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeriodicConfig {
    pub n_max: usize,
    pub minimal_only: bool,
}

impl Default for PeriodicConfig {
    fn default() -> Self {
        Self {
            n_max: 4,
            minimal_only: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixingConfig {
    pub n_max: usize,
    pub phi: Observable,
    pub psi: Observable,
    pub n_samples: usize,
}

impl Default for MixingConfig {
    fn default() -> Self {
        Self {
            n_max: 5,
            phi: Observable::Re,
            psi: Observable::Re,
            n_samples: 20_000,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BranchConfig {
    pub base: Complex64,
    pub radius: f64,
    pub m_max: usize,
    pub n_boundary: usize,
}

impl Default for BranchConfig {
    fn default() -> Self {
        Self {
            base: Complex64::new(4.0, 0.0),
            radius: 0.1,
            m_max: 8,
            n_boundary: 64,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExceptionalConfig {
    pub max_size: usize,
    pub orbit_depth: usize,
    /// Points checked against the equilibrium estimate; needs a seed.
    pub test_points: Vec<Complex64>,
    pub tree_depth: usize,
}

impl Default for ExceptionalConfig {
    fn default() -> Self {
        Self {
            max_size: 16,
            orbit_depth: 3,
            test_points: Vec::new(),
            tree_depth: 8,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CompactSpec {
    Circles { radii: Vec<f64>, samples: usize },
    Segment { samples: usize },
    JuliaLike { p: UniPoly },
    Raw { samples: Vec<Complex64> },
}

impl CompactSpec {
    pub fn build(&self) -> corrdyn::Result<CompactSet> {
        match self {
            CompactSpec::Circles { radii, samples } => CompactSet::circles(radii, *samples),
            CompactSpec::Segment { samples } => CompactSet::segment(*samples),
            CompactSpec::JuliaLike { p } => CompactSet::julia_like(p),
            CompactSpec::Raw { samples } => CompactSet::raw(samples.clone()),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniquenessConfig {
    pub compact: CompactSpec,
    /// Pair compared by `f⁻¹(K) = g⁻¹(K)`; coefficients in ascending order.
    #[serde(default)]
    pub f: Option<UniPoly>,
    #[serde(default)]
    pub g: Option<UniPoly>,
    #[serde(default)]
    pub candidates: Vec<UniPoly>,
    #[serde(default = "default_m_max")]
    pub m_max: usize,
    #[serde(default)]
    pub tolerance: Option<f64>,
}

fn default_m_max() -> usize {
    16
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub correspondence: Option<CorrSpec>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Prefix of every output file.
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub measure: MeasureConfig,
    #[serde(default)]
    pub periodic: PeriodicConfig,
    #[serde(default)]
    pub mixing: MixingConfig,
    #[serde(default)]
    pub branches: BranchConfig,
    #[serde(default)]
    pub exceptional: ExceptionalConfig,
    #[serde(default)]
    pub uniqueness: Option<UniquenessConfig>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from(".")
}

fn default_name() -> String {
    "run".to_string()
}

impl RunConfig {
    pub fn correspondence(&self) -> Result<Correspondence, CliError> {
        self.correspondence
            .as_ref()
            .ok_or_else(|| CliError::Config("config has no correspondence".into()))?
            .resolve()
    }

    pub fn require_seed(&self, command: &str) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Config(format!("{command} is stochastic and needs a seed")))
    }

    pub fn echo(&self) -> Value {
        serde_json::to_value(self).expect("configs serialize")
    }
}

/// Overrides applied on top of the file, in order.
pub struct Overrides {
    pub sets: Vec<String>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub name: Option<String>,
    pub correspondence: Option<String>,
}

pub fn load(path: Option<&Path>, ov: &Overrides) -> Result<RunConfig, CliError> {
    let mut value = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("config {}: {e}", p.display())))?
        }
        None => Value::Object(Default::default()),
    };
    if !value.is_object() {
        return Err(CliError::Config("config must be a JSON object".into()));
    }
    for s in &ov.sets {
        apply_set(&mut value, s)?;
    }
    let obj = value.as_object_mut().expect("checked above");
    if let Some(seed) = ov.seed {
        obj.insert("seed".into(), seed.into());
    }
    if let Some(dir) = &ov.output_dir {
        obj.insert("output_dir".into(), dir.to_string_lossy().into_owned().into());
    }
    if let Some(name) = &ov.name {
        obj.insert("name".into(), name.clone().into());
    }
    if let Some(c) = &ov.correspondence {
        obj.insert("correspondence".into(), c.clone().into());
    }
    serde_json::from_value(value).map_err(|e| CliError::Config(format!("invalid config: {e}")))
}

/// `a.b.c=value`, with `value` parsed as JSON and kept as a string otherwise.
fn apply_set(root: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set expects path=value, got {assignment:?}")))?;
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config(format!("bad --set path {path:?}")));
    }
    let mut node = root;
    for key in &keys[..keys.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("--set path {path:?} crosses a non-object")))?;
        node = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    node.as_object_mut()
        .ok_or_else(|| CliError::Config(format!("--set path {path:?} crosses a non-object")))?
        .insert(keys[keys.len() - 1].to_string(), parsed);
    Ok(())
}
