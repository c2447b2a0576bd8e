//! Run configuration: a JSON file whose values command-line flags override.

use std::path::{Path, PathBuf};

use serde::Deserialize;

/// Environment variable that redirects the output directory.
pub const OUT_ENV: &str = "SUPERLIOUVILLE_OUT";
pub const DEFAULT_BAND: usize = 16;
pub const MIN_BAND: usize = 8;
pub const MAX_BAND: usize = 64;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub newton_tol: Option<f64>,
    pub sv_cut: Option<f64>,
    pub max_iter: Option<usize>,
    pub flow_tol: Option<f64>,
    pub flow_step: Option<f64>,
    pub eps: Option<f64>,
    pub eps1: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub band_limit: Option<usize>,
    pub out: Option<PathBuf>,
    pub json: Option<bool>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }
}

/// Settings after merging flags, environment and file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub band_limit: usize,
    pub out: Option<PathBuf>,
    pub json: bool,
    pub tolerances: Tolerances,
}

impl RunConfig {
    pub fn merge(band: Option<usize>, out: Option<PathBuf>, json: bool, file: FileConfig) -> Result<Self, String> {
        let band_limit = band.or(file.band_limit).unwrap_or(DEFAULT_BAND);
        if !(MIN_BAND..=MAX_BAND).contains(&band_limit) {
            return Err(format!("band limit must lie in [{MIN_BAND}, {MAX_BAND}] (got {band_limit})"));
        }
        let out = out.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from)).or(file.out);
        if let Some(dir) = &out {
            std::fs::create_dir_all(dir).map_err(|e| format!("output directory {} is not writable: {e}", dir.display()))?;
        }
        Ok(Self { band_limit, out, json: json || file.json.unwrap_or(false), tolerances: file.tolerances })
    }

    pub fn out_path(&self, name: &str) -> Option<PathBuf> {
        self.out.as_ref().map(|d| d.join(name))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = FileConfig { band_limit: Some(32), json: Some(true), ..Default::default() };
        let c = RunConfig::merge(Some(8), None, false, file).unwrap();
        assert_eq!(c.band_limit, 8);
        assert!(c.json);
    }

    #[test]
    fn band_outside_range_is_rejected() {
        assert!(RunConfig::merge(Some(4), None, false, FileConfig::default()).is_err());
        assert!(RunConfig::merge(Some(65), None, false, FileConfig::default()).is_err());
        assert!(RunConfig::merge(None, None, false, FileConfig::default()).is_ok());
    }

    #[test]
    fn unknown_keys_are_errors() {
        assert!(serde_json::from_str::<FileConfig>(r#"{"band": 16}"#).is_err());
        let c: FileConfig = serde_json::from_str(r#"{"band_limit": 24, "tolerances": {"newton_tol": 1e-10}}"#).unwrap();
        assert_eq!(c.band_limit, Some(24));
        assert_eq!(c.tolerances.newton_tol, Some(1e-10));
    }
}
