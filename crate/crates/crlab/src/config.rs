use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Keys accepted in a config file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub genus: Option<usize>,
    pub m: Option<u32>,
    pub refinement: Option<usize>,
    pub seed: Option<u64>,
    pub degree: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub plots: Option<bool>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("cannot parse {}: {e}", path.display()))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub genus: usize,
    pub m: u32,
    pub refinement: usize,
    pub seed: u64,
    pub degree: usize,
    pub tolerances: BTreeMap<String, f64>,
    pub output_dir: PathBuf,
    pub plots: bool,
}

/// Command-line values; `None` falls back to the file, then to the default.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub genus: Option<usize>,
    pub m: Option<u32>,
    pub refinement: Option<usize>,
    pub seed: Option<u64>,
    pub degree: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub plots: bool,
}

impl RunConfig {
    pub fn resolve(file: FileConfig, flags: Overrides, default_refinement: usize) -> Result<Self, String> {
        let c = RunConfig {
            genus: flags.genus.or(file.genus).unwrap_or(2),
            m: flags.m.or(file.m).unwrap_or(1),
            refinement: flags.refinement.or(file.refinement).unwrap_or(default_refinement),
            seed: flags.seed.or(file.seed).unwrap_or(1),
            degree: flags.degree.or(file.degree).unwrap_or(4),
            tolerances: file.tolerances,
            output_dir: flags.output_dir.or(file.output_dir).unwrap_or_else(|| PathBuf::from("crlab-out")),
            plots: flags.plots || file.plots.unwrap_or(false),
        };
        if c.genus < 2 {
            return Err(format!("genus must be at least 2, got {}", c.genus));
        }
        if c.m < 1 {
            return Err("m must be at least 1".into());
        }
        if !(1..=6).contains(&c.degree) {
            return Err(format!("degree must be between 1 and 6, got {}", c.degree));
        }
        Ok(c)
    }

    pub fn tol(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }

    /// Model exponent e = m/(g-1) when it is an integer.
    pub fn integer_exponent(&self) -> Result<f64, String> {
        let g1 = self.genus as u32 - 1;
        if !self.m.is_multiple_of(g1) {
            return Err(format!("the model needs (g-1) | m, but {} does not divide m = {}", g1, self.m));
        }
        Ok((self.m / g1) as f64)
    }

    pub fn exponent(&self) -> f64 {
        self.m as f64 / (self.genus as f64 - 1.0)
    }
}
