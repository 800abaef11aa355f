//! Pipeline configuration: a `key = value` file overlaid with flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ecomplexity_core::fitness::FitnessConfig;
use ecomplexity_core::rca::{IncidenceMatrix, RcaVariant, Threshold};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const KEYS: &[&str] = &[
    "trade",
    "incidence",
    "fixture",
    "kinds",
    "gdp",
    "allow_list",
    "exclusions",
    "years",
    "metric",
    "rca_variant",
    "threshold",
    "strict_threshold",
    "spectral_tol",
    "tol",
    "max_iter",
    "zero_floor",
    "boundary_margin",
    "window",
    "horizon",
    "periods",
    "threads",
    "out",
];

/// Keys that do not change any output byte and stay out of the config hash.
const UNHASHED: &[&str] = &["out", "threads"];

/// Raw settings. Later writes win, so load the file first, then flags.
/// Covariate files use `covariate.<name>` keys.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    pub fn load_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Input {
                    path: path.display().to_string(),
                    line: Some(idx + 1),
                    message: "expected `key = value`".into(),
                });
            };
            self.set(k.trim(), v.trim()).map_err(|e| CliError::Input {
                path: path.display().to_string(),
                line: Some(idx + 1),
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), CliError> {
        let known = KEYS.contains(&key) || key.strip_prefix("covariate.").is_some_and(|n| !n.is_empty());
        if !known {
            return Err(CliError::Config(format!("unknown key `{key}`")));
        }
        self.0.insert(key.to_string(), value.into());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    /// SHA-256 over the sorted settings that influence outputs.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.0 {
            if UNHASHED.contains(&k.as_str()) {
                continue;
            }
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Fixture {
    /// `[[1,1,1],[1,1,0],[1,0,0]]`
    Triangular,
    /// `[[1,1],[0,1]]`
    Nested,
}

impl Fixture {
    pub fn parse(s: &str) -> Option<Fixture> {
        match s {
            "triangular" => Some(Fixture::Triangular),
            "nested" => Some(Fixture::Nested),
            _ => None,
        }
    }

    pub fn matrix(self) -> IncidenceMatrix {
        let m = match self {
            Fixture::Triangular => IncidenceMatrix::from_rows(&[[1u8, 1, 1], [1, 1, 0], [1, 0, 0]]),
            Fixture::Nested => IncidenceMatrix::from_rows(&[[1u8, 1], [0, 1]]),
        };
        m.expect("fixture matrices are valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Trade(PathBuf),
    /// A ready-made 0/1 matrix; RCA is skipped.
    Incidence(PathBuf),
    Fixture(Fixture),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Metrics {
    pub eci: bool,
    pub fcm: bool,
    pub mfcm: bool,
}

impl Metrics {
    pub const ALL: Metrics = Metrics {
        eci: true,
        fcm: true,
        mfcm: true,
    };

    /// `all`, `none`, or a comma list of `eci`, `fcm`, `mfcm`.
    pub fn parse(s: &str) -> Option<Metrics> {
        match s {
            "all" => return Some(Metrics::ALL),
            "none" => {
                return Some(Metrics {
                    eci: false,
                    fcm: false,
                    mfcm: false,
                })
            }
            _ => {}
        }
        let mut m = Metrics {
            eci: false,
            fcm: false,
            mfcm: false,
        };
        for part in s.split(',').map(str::trim) {
            match part {
                "eci" => m.eci = true,
                "fcm" => m.fcm = true,
                "mfcm" => m.mfcm = true,
                _ => return None,
            }
        }
        Some(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub source: Source,
    pub kinds: Option<PathBuf>,
    pub gdp: Option<PathBuf>,
    pub covariates: BTreeMap<String, PathBuf>,
    pub allow_list: Option<PathBuf>,
    pub exclusions: Option<PathBuf>,
    pub years: Option<(i32, i32)>,
    pub metrics: Metrics,
    pub rca_variant: RcaVariant,
    pub threshold: Threshold,
    pub spectral_tol: f64,
    pub fitness: FitnessConfig,
    pub horizon: i32,
    /// Empty means consecutive `horizon`-year windows over the data.
    pub periods: Vec<(i32, i32)>,
    /// 0 lets the pool pick.
    pub threads: usize,
    pub out_dir: PathBuf,
    pub config_hash: String,
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse()
        .map_err(|_| CliError::Config(format!("`{key}` has invalid value `{v}`")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, CliError> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(CliError::Config(format!("`{key}` must be true or false, got `{v}`"))),
    }
}

/// `1995-2010` or a single year.
pub fn parse_year_range(v: &str) -> Option<(i32, i32)> {
    match v.split_once('-') {
        Some((a, b)) => Some((a.trim().parse().ok()?, b.trim().parse().ok()?)),
        None => {
            let y = v.trim().parse().ok()?;
            Some((y, y))
        }
    }
}

fn existing(key: &str, v: &str) -> Result<PathBuf, CliError> {
    let p = PathBuf::from(v);
    if !p.is_file() {
        return Err(CliError::input(&p, format!("{key} file not found")));
    }
    Ok(p)
}

impl PipelineConfig {
    pub fn from_settings(s: &Settings) -> Result<Self, CliError> {
        let sources = ["trade", "incidence", "fixture"]
            .iter()
            .filter(|k| s.get(k).is_some())
            .count();
        if sources != 1 {
            return Err(CliError::Config(
                "exactly one of `trade`, `incidence` or `fixture` is required".into(),
            ));
        }
        let source = if let Some(v) = s.get("trade") {
            Source::Trade(existing("trade", v)?)
        } else if let Some(v) = s.get("incidence") {
            Source::Incidence(existing("incidence", v)?)
        } else {
            let v = s.get("fixture").unwrap_or_default();
            Source::Fixture(
                Fixture::parse(v).ok_or_else(|| CliError::Config(format!("unknown fixture `{v}`")))?,
            )
        };
        let opt_path = |key: &str| s.get(key).map(|v| existing(key, v)).transpose();

        let years = match s.get("years") {
            None => None,
            Some(v) => {
                let (a, b) = parse_year_range(v)
                    .ok_or_else(|| CliError::Config(format!("`years` must look like 1995-2010, got `{v}`")))?;
                if a > b {
                    return Err(CliError::Config(format!("empty year range `{v}`")));
                }
                Some((a, b))
            }
        };
        let metrics = match s.get("metric") {
            None => Metrics::ALL,
            Some(v) => Metrics::parse(v).ok_or_else(|| CliError::Config(format!("unknown metric `{v}`")))?,
        };
        let rca_variant = match s.get("rca_variant").unwrap_or("joint") {
            "joint" => RcaVariant::Joint,
            "concatenated" => RcaVariant::Concatenated,
            v => return Err(CliError::Config(format!("unknown rca_variant `{v}`"))),
        };
        let threshold_value: f64 = s.get("threshold").map_or(Ok(1.0), |v| parse_num("threshold", v))?;
        if !(threshold_value > 0.0) {
            return Err(CliError::Config("threshold must be positive".into()));
        }
        let strict = s
            .get("strict_threshold")
            .map_or(Ok(false), |v| parse_bool("strict_threshold", v))?;
        let spectral_tol: f64 = s.get("spectral_tol").map_or(Ok(1e-8), |v| parse_num("spectral_tol", v))?;
        if !(spectral_tol > 0.0) {
            return Err(CliError::Config("spectral_tol must be positive".into()));
        }

        let mut fitness = FitnessConfig::default();
        if let Some(v) = s.get("tol") {
            fitness.tol = parse_num("tol", v)?;
        }
        if let Some(v) = s.get("max_iter") {
            fitness.max_iter = parse_num("max_iter", v)?;
        }
        if let Some(v) = s.get("zero_floor") {
            fitness.zero_floor = parse_num("zero_floor", v)?;
        }
        if let Some(v) = s.get("boundary_margin") {
            fitness.boundary_margin = parse_num("boundary_margin", v)?;
        }
        if let Some(v) = s.get("window") {
            fitness.window = parse_num("window", v)?;
        }
        fitness.validate()?;

        let horizon: i32 = s.get("horizon").map_or(Ok(10), |v| parse_num("horizon", v))?;
        if horizon < 1 {
            return Err(CliError::Config("horizon must be at least 1".into()));
        }
        let periods = match s.get("periods") {
            None => Vec::new(),
            Some(v) => v
                .split(',')
                .map(|p| match parse_year_range(p) {
                    Some((a, b)) if a < b => Ok((a, b)),
                    _ => Err(CliError::Config(format!("bad period `{p}` (expected start-end)"))),
                })
                .collect::<Result<_, _>>()?,
        };
        let covariates = s
            .0
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("covariate.").map(|name| (name, v)))
            .map(|(name, v)| Ok((name.to_string(), existing(&format!("covariate.{name}"), v)?)))
            .collect::<Result<BTreeMap<_, _>, CliError>>()?;

        Ok(PipelineConfig {
            source,
            kinds: opt_path("kinds")?,
            gdp: opt_path("gdp")?,
            covariates,
            allow_list: opt_path("allow_list")?,
            exclusions: opt_path("exclusions")?,
            years,
            metrics,
            rca_variant,
            threshold: Threshold {
                value: threshold_value,
                strict,
            },
            spectral_tol,
            fitness,
            horizon,
            periods,
            threads: s.get("threads").map_or(Ok(0), |v| parse_num("threads", v))?,
            out_dir: PathBuf::from(s.get("out").unwrap_or("out")),
            config_hash: s.hash(),
        })
    }
}
