//! Study configuration: a flat TOML schema with five sections. Unknown keys
//! anywhere are a hard schema error.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use magnus_core::discretization::{load_tabulated_csv, PotentialSpec};
use magnus_core::study::{MPolicy, StudyGrid, StudyKind, StudyOptions, Tolerances};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub potential: PotentialSection,
    pub study: StudySection,
    pub output: OutputSection,
    #[serde(default)]
    pub tolerances: TolerancesSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub d: usize,
    pub a: f64,
    pub b: f64,
    pub n_list: Vec<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    pub kind: String,
    pub k: Option<Vec<u32>>,
    pub amplitude: Option<f64>,
    pub value: Option<f64>,
    pub file: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    pub kind: String,
    pub dt_list: Vec<f64>,
    pub t: f64,
    pub m_policy: String,
    pub m: Option<usize>,
    pub m_ref: Option<usize>,
    pub m_list: Option<Vec<usize>>,
    pub scan_k: Option<usize>,
    pub refine_scans: Option<bool>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: PathBuf,
    pub format: String,
    pub record_wall_time: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesSection {
    pub error_floor: Option<f64>,
    pub order_slope_min: Option<f64>,
    pub order_slope_max: Option<f64>,
    pub comm_slope_min: Option<f64>,
    pub comm_slope_max: Option<f64>,
    pub quadrature_slope_min: Option<f64>,
    pub quadrature_slope_max: Option<f64>,
    pub uniformity_ratio_max: Option<f64>,
    pub c_spread_max: Option<f64>,
    pub theorem1_slack: Option<f64>,
    pub quadrature_contamination: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Everything a study run needs, resolved from one config file.
#[derive(Debug)]
pub struct ResolvedConfig {
    pub grid: StudyGrid,
    pub options: StudyOptions,
    pub output_path: PathBuf,
    pub format: OutputFormat,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn load(path: &Path) -> Result<ResolvedConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
    let parsed: RunConfig =
        toml::from_str(&text).map_err(|e| ConfigError(format!("config schema error: {e}")))?;
    resolve(parsed, path.parent().unwrap_or(Path::new(".")))
}

pub fn resolve(cfg: RunConfig, base_dir: &Path) -> Result<ResolvedConfig, ConfigError> {
    let potential = build_potential_spec(&cfg.potential, base_dir)?;

    let kind = match cfg.study.kind.as_str() {
        "order" => StudyKind::Order,
        "uniformity" => StudyKind::Uniformity,
        "quadrature" => StudyKind::Quadrature,
        "theorem1_check" => StudyKind::Theorem1Check,
        "theorem3_scan" => StudyKind::Theorem3Scan,
        other => {
            return Err(ConfigError(format!(
                "unknown study kind `{other}`, expected one of order, uniformity, quadrature, theorem1_check, theorem3_scan"
            )))
        }
    };

    let m_policy = match cfg.study.m_policy.as_str() {
        "fixed" => MPolicy::Fixed(cfg.study.m.ok_or_else(|| {
            ConfigError("m_policy = \"fixed\" requires study.m".to_string())
        })?),
        "reference" => MPolicy::Reference(cfg.study.m_ref.unwrap_or(4096)),
        "paper_formula" => MPolicy::PaperFormula,
        "exact" => MPolicy::Exact,
        other => {
            return Err(ConfigError(format!(
                "unknown m_policy `{other}`, expected one of fixed, reference, paper_formula, exact"
            )))
        }
    };

    let format = match cfg.output.format.as_str() {
        "csv" => OutputFormat::Csv,
        "json" => OutputFormat::Json,
        other => {
            return Err(ConfigError(format!(
                "unknown output format `{other}`, expected csv or json"
            )))
        }
    };

    let defaults = Tolerances::default();
    let t = &cfg.tolerances;
    let tolerances = Tolerances {
        order_slope_range: (
            t.order_slope_min.unwrap_or(defaults.order_slope_range.0),
            t.order_slope_max.unwrap_or(defaults.order_slope_range.1),
        ),
        comm_slope_range: (
            t.comm_slope_min.unwrap_or(defaults.comm_slope_range.0),
            t.comm_slope_max.unwrap_or(defaults.comm_slope_range.1),
        ),
        quadrature_slope_range: (
            t.quadrature_slope_min
                .unwrap_or(defaults.quadrature_slope_range.0),
            t.quadrature_slope_max
                .unwrap_or(defaults.quadrature_slope_range.1),
        ),
        uniformity_ratio_max: t
            .uniformity_ratio_max
            .unwrap_or(defaults.uniformity_ratio_max),
        c_spread_max: t.c_spread_max.unwrap_or(defaults.c_spread_max),
        theorem1_slack: t.theorem1_slack.unwrap_or(defaults.theorem1_slack),
        quadrature_contamination: t
            .quadrature_contamination
            .unwrap_or(defaults.quadrature_contamination),
    };

    let default_opts = StudyOptions::default();
    let options = StudyOptions {
        seed: cfg.study.seed.unwrap_or(default_opts.seed),
        workers: worker_override().unwrap_or(cfg.study.workers.unwrap_or(0)),
        scan_k: cfg.study.scan_k.unwrap_or(default_opts.scan_k),
        refine_scans: cfg.study.refine_scans.unwrap_or(true),
        error_floor: t.error_floor.unwrap_or(default_opts.error_floor),
        record_wall_time: cfg.output.record_wall_time.unwrap_or(false),
        tolerances,
    };

    let grid = StudyGrid {
        kind,
        potential,
        d: cfg.grid.d,
        interval: (cfg.grid.a, cfg.grid.b),
        n_list: cfg.grid.n_list,
        dt_list: cfg.study.dt_list,
        m_policy,
        t_total: cfg.study.t,
        m_list: cfg.study.m_list.unwrap_or_default(),
    };

    let output_path = if cfg.output.path.is_relative() {
        base_dir.join(&cfg.output.path)
    } else {
        cfg.output.path
    };

    Ok(ResolvedConfig {
        grid,
        options,
        output_path,
        format,
    })
}

/// `MAGNUS_WORKERS` overrides the configured worker count.
pub fn worker_override() -> Option<usize> {
    std::env::var("MAGNUS_WORKERS")
        .ok()
        .and_then(|v| v.parse().ok())
}

pub fn build_potential_spec(
    section: &PotentialSection,
    base_dir: &Path,
) -> Result<PotentialSpec, ConfigError> {
    match section.kind.as_str() {
        "zero" => Ok(PotentialSpec::Zero),
        "constant" => Ok(PotentialSpec::Constant(section.value.ok_or_else(|| {
            ConfigError("potential kind `constant` requires `value`".to_string())
        })?)),
        "cos_mode" => Ok(PotentialSpec::CosMode {
            k: section.k.clone().unwrap_or_else(|| vec![1]),
            amplitude: section.amplitude.unwrap_or(1.0),
        }),
        "exp_sin" => Ok(PotentialSpec::ExpSin {
            amplitude: section.amplitude.unwrap_or(1.0),
        }),
        "tabulated" => {
            let file = section.file.as_ref().ok_or_else(|| {
                ConfigError("potential kind `tabulated` requires `file`".to_string())
            })?;
            let resolved = if file.is_relative() {
                base_dir.join(file)
            } else {
                file.clone()
            };
            load_tabulated_csv(&resolved).map_err(|e| ConfigError(e.to_string()))
        }
        other => Err(ConfigError(format!(
            "unknown potential kind `{other}`, expected one of zero, constant, cos_mode, exp_sin, tabulated"
        ))),
    }
}
