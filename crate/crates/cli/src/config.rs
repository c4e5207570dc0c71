//! Flat key-value configuration: every tracker hyperparameter is a named
//! key with its default; files use `key = value` lines with `#` comments
//! and unknown keys are rejected. CLI `--set key=value` flags override
//! file values.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::json;

use darktrack::features::CnTable;
use darktrack::track::TrackerParams;

/// Typed configuration mirroring the tracker parameter set plus the
/// color-name table path.
#[derive(Debug, Clone)]
pub struct Config {
    pub alpha_r: f64,
    pub alpha_g: f64,
    pub alpha_b: f64,
    pub delta: f64,

    pub cell_size: usize,
    pub hog_orientations: usize,
    pub use_gray: bool,
    pub use_hog: bool,
    pub use_cn: bool,
    pub cn_table: Option<PathBuf>,

    pub lambda1: f64,
    pub mu: f64,
    pub gamma0: f64,
    pub gamma_max: f64,
    pub gamma_scale: f64,
    pub admm_iters: usize,
    pub learning_rate: f64,
    pub label_sigma_factor: f64,

    pub psi: f64,
    pub search_padding: f64,
    pub search_size: usize,
    pub scale_count: usize,
    pub scale_step: f64,
    pub scale_learning_rate: f64,
    pub lambda2: f64,
    pub scale_sigma_factor: f64,
    pub scale_model_max_area: f64,
    pub detect_with_previous_mask: bool,

    pub enhance_enabled: bool,
    pub dual_enabled: bool,
    pub mask_enabled: bool,
}

impl Default for Config {
    fn default() -> Self {
        let p = TrackerParams::default();
        Config {
            alpha_r: p.enhancer.alpha[0],
            alpha_g: p.enhancer.alpha[1],
            alpha_b: p.enhancer.alpha[2],
            delta: p.enhancer.delta,
            cell_size: p.features.cell_size,
            hog_orientations: p.features.hog_orientations,
            use_gray: p.features.use_gray,
            use_hog: p.features.use_hog,
            use_cn: p.features.use_cn,
            cn_table: None,
            lambda1: p.train.lambda1,
            mu: p.train.mu,
            gamma0: p.train.gamma0,
            gamma_max: p.train.gamma_max,
            gamma_scale: p.train.gamma_scale,
            admm_iters: p.train.admm_iters,
            learning_rate: p.train.learning_rate,
            label_sigma_factor: p.train.label_sigma_factor,
            psi: p.detect.psi,
            search_padding: p.detect.search_padding,
            search_size: p.detect.search_size,
            scale_count: p.detect.scale.count,
            scale_step: p.detect.scale.step,
            scale_learning_rate: p.detect.scale.learning_rate,
            lambda2: p.detect.scale.lambda,
            scale_sigma_factor: p.detect.scale.sigma_factor,
            scale_model_max_area: p.detect.scale.model_max_area,
            detect_with_previous_mask: p.detect.detect_with_previous_mask,
            enhance_enabled: p.enhance_enabled,
            dual_enabled: p.dual_enabled,
            mask_enabled: p.mask_enabled,
        }
    }
}

impl Config {
    /// Defaults, then the optional config file, then `--set` overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Config> {
        let mut cfg = Config::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            for (i, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line
                    .split_once('=')
                    .with_context(|| format!("{}:{}: expected key = value", path.display(), i + 1))?;
                cfg.set(key.trim(), value.trim())
                    .with_context(|| format!("{}:{}", path.display(), i + 1))?;
            }
        }
        for kv in overrides {
            let (key, value) = kv
                .split_once('=')
                .with_context(|| format!("--set {kv}: expected key=value"))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| anyhow::anyhow!("invalid value {value:?} for {key}"))
        }
        fn flag(key: &str, value: &str) -> Result<bool> {
            match value {
                "true" | "1" | "yes" | "on" => Ok(true),
                "false" | "0" | "no" | "off" => Ok(false),
                _ => bail!("invalid boolean {value:?} for {key}"),
            }
        }
        match key {
            "alpha_r" => self.alpha_r = num(key, value)?,
            "alpha_g" => self.alpha_g = num(key, value)?,
            "alpha_b" => self.alpha_b = num(key, value)?,
            "delta" => self.delta = num(key, value)?,
            "cell_size" => self.cell_size = num(key, value)?,
            "hog_orientations" => self.hog_orientations = num(key, value)?,
            "use_gray" => self.use_gray = flag(key, value)?,
            "use_hog" => self.use_hog = flag(key, value)?,
            "use_cn" => self.use_cn = flag(key, value)?,
            "cn_table" => {
                self.cn_table = if value.is_empty() {
                    None
                } else {
                    Some(PathBuf::from(value))
                }
            }
            "lambda1" => self.lambda1 = num(key, value)?,
            "mu" => self.mu = num(key, value)?,
            "gamma0" => self.gamma0 = num(key, value)?,
            "gamma_max" => self.gamma_max = num(key, value)?,
            "gamma_scale" => self.gamma_scale = num(key, value)?,
            "admm_iters" => self.admm_iters = num(key, value)?,
            "learning_rate" => self.learning_rate = num(key, value)?,
            "label_sigma_factor" => self.label_sigma_factor = num(key, value)?,
            "psi" => self.psi = num(key, value)?,
            "search_padding" => self.search_padding = num(key, value)?,
            "search_size" => self.search_size = num(key, value)?,
            "scale_count" => self.scale_count = num(key, value)?,
            "scale_step" => self.scale_step = num(key, value)?,
            "scale_learning_rate" => self.scale_learning_rate = num(key, value)?,
            "lambda2" => self.lambda2 = num(key, value)?,
            "scale_sigma_factor" => self.scale_sigma_factor = num(key, value)?,
            "scale_model_max_area" => self.scale_model_max_area = num(key, value)?,
            "detect_with_previous_mask" => self.detect_with_previous_mask = flag(key, value)?,
            "enhance_enabled" => self.enhance_enabled = flag(key, value)?,
            "dual_enabled" => self.dual_enabled = flag(key, value)?,
            "mask_enabled" => self.mask_enabled = flag(key, value)?,
            _ => bail!("unknown config key {key:?}"),
        }
        Ok(())
    }

    /// Build validated tracker parameters (loads the color-name table).
    pub fn tracker_params(&self) -> Result<TrackerParams> {
        let mut p = TrackerParams::default();
        p.enhancer.alpha = [self.alpha_r, self.alpha_g, self.alpha_b];
        p.enhancer.delta = self.delta;
        p.features.cell_size = self.cell_size;
        p.features.hog_orientations = self.hog_orientations;
        p.features.use_gray = self.use_gray;
        p.features.use_hog = self.use_hog;
        p.features.use_cn = self.use_cn;
        p.features.gray_alpha = p.enhancer.alpha;
        if let Some(path) = &self.cn_table {
            p.features.cn_table = CnTable::load(path)?;
        }
        p.train.lambda1 = self.lambda1;
        p.train.mu = self.mu;
        p.train.gamma0 = self.gamma0;
        p.train.gamma_max = self.gamma_max;
        p.train.gamma_scale = self.gamma_scale;
        p.train.admm_iters = self.admm_iters;
        p.train.learning_rate = self.learning_rate;
        p.train.label_sigma_factor = self.label_sigma_factor;
        p.detect.psi = self.psi;
        p.detect.search_padding = self.search_padding;
        p.detect.search_size = self.search_size;
        p.detect.scale.count = self.scale_count;
        p.detect.scale.step = self.scale_step;
        p.detect.scale.learning_rate = self.scale_learning_rate;
        p.detect.scale.lambda = self.lambda2;
        p.detect.scale.sigma_factor = self.scale_sigma_factor;
        p.detect.scale.model_max_area = self.scale_model_max_area;
        p.detect.detect_with_previous_mask = self.detect_with_previous_mask;
        p.enhance_enabled = self.enhance_enabled;
        p.dual_enabled = self.dual_enabled;
        p.mask_enabled = self.mask_enabled;
        p.validate()?;
        Ok(p)
    }

    /// Stable JSON echo of the effective configuration.
    pub fn echo(&self) -> serde_json::Value {
        json!({
            "alpha_r": self.alpha_r,
            "alpha_g": self.alpha_g,
            "alpha_b": self.alpha_b,
            "delta": self.delta,
            "cell_size": self.cell_size,
            "hog_orientations": self.hog_orientations,
            "use_gray": self.use_gray,
            "use_hog": self.use_hog,
            "use_cn": self.use_cn,
            "cn_table": self.cn_table.as_ref().map(|p| p.display().to_string()),
            "lambda1": self.lambda1,
            "mu": self.mu,
            "gamma0": self.gamma0,
            "gamma_max": self.gamma_max,
            "gamma_scale": self.gamma_scale,
            "admm_iters": self.admm_iters,
            "learning_rate": self.learning_rate,
            "label_sigma_factor": self.label_sigma_factor,
            "psi": self.psi,
            "search_padding": self.search_padding,
            "search_size": self.search_size,
            "scale_count": self.scale_count,
            "scale_step": self.scale_step,
            "scale_learning_rate": self.scale_learning_rate,
            "lambda2": self.lambda2,
            "scale_sigma_factor": self.scale_sigma_factor,
            "scale_model_max_area": self.scale_model_max_area,
            "detect_with_previous_mask": self.detect_with_previous_mask,
            "enhance_enabled": self.enhance_enabled,
            "dual_enabled": self.dual_enabled,
            "mask_enabled": self.mask_enabled,
        })
    }
}
