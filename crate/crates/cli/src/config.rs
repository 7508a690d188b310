//! Flat sectioned key-value run configuration.
//!
//! The format is deliberately diff-friendly for experiment tracking:
//! `[section]` headers, `key = value` lines, `#` comments. Unknown sections
//! or keys are errors so typos cannot silently fall back to defaults. The
//! master seed is mandatory; nothing in a run may depend on wall-clock time.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use aosa_core::error::{Error, Result};
use aosa_core::math::fnv1a;

#[derive(Debug, Clone)]
pub struct LayoutConfig {
    pub rows: usize,
    pub cols: usize,
    pub dx: f64,
    pub dy: f64,
}

#[derive(Debug, Clone)]
pub struct GridConfig {
    /// Side of the centered square aperture, wavelengths.
    pub side: f64,
    pub pitch: f64,
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub subarrays: usize,
    pub n_init: usize,
    /// Bin sizes for (lambda1, lambda2, psi); zero selects the
    /// perturbation-bound default.
    pub tau_lambda: f64,
    pub tau_psi: f64,
    pub refine_rounds: usize,
    pub search_grid: usize,
    pub final_grid: usize,
    pub write_dictionary: bool,
}

#[derive(Debug, Clone)]
pub struct WeightsConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub snr_start_db: f64,
    pub snr_stop_db: f64,
    pub snr_step_db: f64,
}

impl SweepConfig {
    pub fn values(&self) -> Vec<f64> {
        let mut v = Vec::new();
        let mut s = self.snr_start_db;
        while s <= self.snr_stop_db + 1e-9 {
            v.push(s);
            s += self.snr_step_db;
        }
        v
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub k: usize,
    pub min_sep: f64,
    pub interferer_db: f64,
    pub trials: usize,
    pub roi_theta_deg: f64,
    pub refine_rounds: usize,
    pub ccdf_snr_db: f64,
    pub dictionary_oversample: f64,
}

#[derive(Debug, Clone)]
pub struct CompressiveConfig {
    pub m_per_subarray: usize,
    pub sparsity: usize,
    pub isometry_trials: usize,
    pub m_sweep: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub layout: LayoutConfig,
    pub grid: GridConfig,
    pub search: SearchConfig,
    pub weights: WeightsConfig,
    pub bounds_sweep: SweepConfig,
    pub scenario: ScenarioConfig,
    pub scenario_sweep: SweepConfig,
    pub compressive: CompressiveConfig,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub threads: usize,
    /// FNV-1a hash of the raw config text, stamped into output headers.
    pub config_hash: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            layout: LayoutConfig {
                rows: 4,
                cols: 4,
                dx: 0.5,
                dy: 0.6,
            },
            grid: GridConfig {
                side: 20.0,
                pitch: 1.0,
            },
            search: SearchConfig {
                subarrays: 8,
                n_init: 16,
                tau_lambda: 0.0,
                tau_psi: 0.0,
                refine_rounds: 3,
                search_grid: 256,
                final_grid: 512,
                write_dictionary: false,
            },
            weights: WeightsConfig {
                alpha: 1.0,
                beta: 1.0,
                gamma: 1.0,
            },
            bounds_sweep: SweepConfig {
                snr_start_db: -20.0,
                snr_stop_db: 20.0,
                snr_step_db: 1.0,
            },
            scenario: ScenarioConfig {
                k: 1,
                min_sep: 0.16,
                interferer_db: 0.0,
                trials: 200,
                roi_theta_deg: 30.0,
                refine_rounds: 3,
                ccdf_snr_db: -5.0,
                dictionary_oversample: 4.0,
            },
            scenario_sweep: SweepConfig {
                snr_start_db: -10.0,
                snr_stop_db: 10.0,
                snr_step_db: 2.5,
            },
            compressive: CompressiveConfig {
                m_per_subarray: 4,
                sparsity: 8,
                isometry_trials: 100_000,
                m_sweep: vec![8, 16, 32, 64],
            },
            seed: 0,
            out_dir: PathBuf::from("."),
            threads: 0,
            config_hash: 0,
        }
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig {
            config_hash: fnv1a(text.as_bytes()),
            ..Default::default()
        };
        let mut section = String::new();
        let mut seed_set = false;
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| parse_err(line_no, "unterminated section header"))?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(line_no, "expected `key = value`"))?;
            let key = key.trim();
            let value = value.trim();
            let full = format!("{section}.{key}");
            if let Some(prev) = seen.insert(full.clone(), line_no) {
                return Err(parse_err(
                    line_no,
                    format!("duplicate key `{full}` (first set at line {prev})"),
                ));
            }

            let fval = || -> Result<f64> {
                value
                    .parse::<f64>()
                    .map_err(|_| parse_err(line_no, format!("bad number `{value}`")))
            };
            let uval = || -> Result<usize> {
                value
                    .parse::<usize>()
                    .map_err(|_| parse_err(line_no, format!("bad count `{value}`")))
            };
            let bval = || -> Result<bool> {
                value
                    .parse::<bool>()
                    .map_err(|_| parse_err(line_no, format!("bad flag `{value}`")))
            };

            match full.as_str() {
                "layout.rows" => cfg.layout.rows = uval()?,
                "layout.cols" => cfg.layout.cols = uval()?,
                "layout.dx" => cfg.layout.dx = fval()?,
                "layout.dy" => cfg.layout.dy = fval()?,
                "grid.side" => cfg.grid.side = fval()?,
                "grid.pitch" => cfg.grid.pitch = fval()?,
                "search.subarrays" => cfg.search.subarrays = uval()?,
                "search.n_init" => cfg.search.n_init = uval()?,
                "search.tau_lambda" => cfg.search.tau_lambda = fval()?,
                "search.tau_psi" => cfg.search.tau_psi = fval()?,
                "search.refine_rounds" => cfg.search.refine_rounds = uval()?,
                "search.search_grid" => cfg.search.search_grid = uval()?,
                "search.final_grid" => cfg.search.final_grid = uval()?,
                "search.write_dictionary" => cfg.search.write_dictionary = bval()?,
                "weights.alpha" => cfg.weights.alpha = fval()?,
                "weights.beta" => cfg.weights.beta = fval()?,
                "weights.gamma" => cfg.weights.gamma = fval()?,
                "bounds.snr_start" => cfg.bounds_sweep.snr_start_db = fval()?,
                "bounds.snr_stop" => cfg.bounds_sweep.snr_stop_db = fval()?,
                "bounds.snr_step" => cfg.bounds_sweep.snr_step_db = fval()?,
                "scenario.k" => cfg.scenario.k = uval()?,
                "scenario.min_sep" => cfg.scenario.min_sep = fval()?,
                "scenario.interferer_db" => cfg.scenario.interferer_db = fval()?,
                "scenario.trials" => cfg.scenario.trials = uval()?,
                "scenario.roi_theta_deg" => cfg.scenario.roi_theta_deg = fval()?,
                "scenario.refine_rounds" => cfg.scenario.refine_rounds = uval()?,
                "scenario.ccdf_snr_db" => cfg.scenario.ccdf_snr_db = fval()?,
                "scenario.dictionary_oversample" => cfg.scenario.dictionary_oversample = fval()?,
                "scenario.snr_start" => cfg.scenario_sweep.snr_start_db = fval()?,
                "scenario.snr_stop" => cfg.scenario_sweep.snr_stop_db = fval()?,
                "scenario.snr_step" => cfg.scenario_sweep.snr_step_db = fval()?,
                "compressive.m_per_subarray" => cfg.compressive.m_per_subarray = uval()?,
                "compressive.sparsity" => cfg.compressive.sparsity = uval()?,
                "compressive.isometry_trials" => cfg.compressive.isometry_trials = uval()?,
                "compressive.m_sweep" => {
                    cfg.compressive.m_sweep = value
                        .split(',')
                        .map(|t| {
                            t.trim().parse::<usize>().map_err(|_| {
                                parse_err(line_no, format!("bad count `{}`", t.trim()))
                            })
                        })
                        .collect::<Result<_>>()?
                }
                "run.seed" => {
                    cfg.seed = value
                        .parse::<u64>()
                        .map_err(|_| parse_err(line_no, format!("bad seed `{value}`")))?;
                    seed_set = true;
                }
                "run.out" => cfg.out_dir = PathBuf::from(value),
                "run.threads" => cfg.threads = uval()?,
                _ => return Err(parse_err(line_no, format!("unknown key `{full}`"))),
            }
        }

        if !seed_set {
            return Err(Error::invalid(
                "run.seed is mandatory: seeding from the clock is not allowed",
            ));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bounds_sweep.snr_step_db <= 0.0 || self.scenario_sweep.snr_step_db <= 0.0 {
            return Err(Error::invalid("SNR step must be positive"));
        }
        if self.scenario.roi_theta_deg <= 0.0 || self.scenario.roi_theta_deg > 90.0 {
            return Err(Error::invalid("ROI half-angle must lie in (0, 90] degrees"));
        }
        Ok(())
    }

    /// Header comment lines stamped into every output file.
    pub fn provenance(&self) -> Vec<String> {
        vec![
            format!("config_fnv1a = {:#018x}", self.config_hash),
            format!("seed = {}", self.seed),
        ]
    }
}
