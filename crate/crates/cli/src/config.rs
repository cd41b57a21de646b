//! Flat `key = value` run configuration.
//!
//! Values come from built-in defaults, then an optional config file, then
//! command-line flags; later sources win. Every key is validated before any
//! computation starts.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config key `{key}`: {message}")]
    Key { key: String, message: String },
    #[error("unknown config key `{0}`")]
    Unknown(String),
    #[error("config file {path}: line {line}: {message}")]
    Syntax { path: String, line: usize, message: String },
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ConfigError {
    fn key(key: &str, message: impl Into<String>) -> Self {
        ConfigError::Key {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

/// Every accepted key with its default value.
pub const DEFAULTS: &[(&str, &str)] = &[
    ("bins", "50"),
    ("blocks", "20"),
    ("dt", "0.005"),
    ("epsilon", "0.01"),
    ("epsilons", "0.001,1,1000"),
    ("format", "csv"),
    ("grid_max", "20"),
    ("grid_min", "-20"),
    ("grid_n", "2001"),
    ("h", "auto"),
    ("hbar", "1"),
    ("ladder", "0.01,0.005,0.0025,0.00125"),
    ("mass", "1"),
    ("p0", "0"),
    ("perm", "1"),
    ("potential", "free"),
    ("samples", "1000"),
    ("seed", "0"),
    ("sigma0", "1"),
    ("snapshots", "1"),
    ("speed", "1"),
    ("steps", "60"),
    ("stiffness", "1"),
    ("t_final", "1.2"),
    ("trajectories", "10"),
    ("velocity", "wave"),
    ("x0", "0"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    Free,
    Linear,
    Harmonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VelocityKind {
    Zero,
    Constant,
    Wave,
}

impl fmt::Display for VelocityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VelocityKind::Zero => "zero",
            VelocityKind::Constant => "constant",
            VelocityKind::Wave => "wave",
        })
    }
}

/// Validated configuration of one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub hbar: f64,
    pub mass: f64,
    pub epsilon: f64,
    pub perm: u8,
    pub steps: usize,
    pub blocks: usize,
    pub seed: u64,
    pub format: Format,
    pub potential: PotentialKind,
    pub stiffness: f64,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_n: usize,
    pub sigma0: f64,
    pub x0: f64,
    pub p0: f64,
    pub t_final: f64,
    pub dt: f64,
    pub ladder: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub velocity: VelocityKind,
    pub bins: usize,
    pub samples: usize,
    pub trajectories: usize,
    pub snapshots: usize,
    pub speed: f64,
    pub h: f64,
    /// Resolved `key = value` pairs, echoed into every output header.
    pub echo: BTreeMap<String, String>,
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_file(path: &Path) -> Result<BTreeMap<String, String>, ConfigError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: shown.clone(),
        source,
    })?;
    parse_text(&text, &shown)
}

pub fn parse_text(text: &str, origin: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            path: origin.to_string(),
            line: i + 1,
            message: format!("expected `key = value`, found `{line}`"),
        })?;
        let key = k.trim().to_string();
        if !DEFAULTS.iter().any(|(d, _)| *d == key) {
            return Err(ConfigError::Unknown(key));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

fn positive(key: &str, raw: &str) -> Result<f64, ConfigError> {
    let v: f64 = raw
        .parse()
        .map_err(|_| ConfigError::key(key, format!("`{raw}` is not a number")))?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(ConfigError::key(key, format!("must be a positive finite number, got {raw}")));
    }
    Ok(v)
}

fn finite(key: &str, raw: &str) -> Result<f64, ConfigError> {
    let v: f64 = raw
        .parse()
        .map_err(|_| ConfigError::key(key, format!("`{raw}` is not a number")))?;
    if !v.is_finite() {
        return Err(ConfigError::key(key, "must be finite"));
    }
    Ok(v)
}

fn count(key: &str, raw: &str, min: usize) -> Result<usize, ConfigError> {
    let v: usize = raw
        .parse()
        .map_err(|_| ConfigError::key(key, format!("`{raw}` is not a non-negative integer")))?;
    if v < min {
        return Err(ConfigError::key(key, format!("must be at least {min}, got {v}")));
    }
    Ok(v)
}

fn list(key: &str, raw: &str) -> Result<Vec<f64>, ConfigError> {
    let values = raw
        .split(',')
        .map(|p| positive(key, p.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(ConfigError::key(key, "list is empty"));
    }
    Ok(values)
}

impl RunConfig {
    /// Merges defaults, file values and overrides, then validates.
    pub fn resolve(
        file: BTreeMap<String, String>,
        overrides: BTreeMap<String, String>,
    ) -> Result<RunConfig, ConfigError> {
        let mut map: BTreeMap<String, String> =
            DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        for (k, v) in file.into_iter().chain(overrides) {
            if !map.contains_key(&k) {
                return Err(ConfigError::Unknown(k));
            }
            map.insert(k, v);
        }
        let get = |k: &str| map[k].as_str();

        let hbar = positive("hbar", get("hbar"))?;
        let perm = count("perm", get("perm"), 1)?;
        if perm > 8 {
            return Err(ConfigError::key("perm", format!("must be in 1..=8, got {perm}")));
        }
        let format = match get("format") {
            "csv" => Format::Csv,
            "json" => Format::Json,
            other => return Err(ConfigError::key("format", format!("expected csv or json, got `{other}`"))),
        };
        let potential = match get("potential") {
            "free" => PotentialKind::Free,
            "linear" => PotentialKind::Linear,
            "harmonic" => PotentialKind::Harmonic,
            other => {
                return Err(ConfigError::key(
                    "potential",
                    format!("expected free, linear or harmonic, got `{other}`"),
                ))
            }
        };
        let velocity = match get("velocity") {
            "zero" => VelocityKind::Zero,
            "constant" => VelocityKind::Constant,
            "wave" => VelocityKind::Wave,
            other => {
                return Err(ConfigError::key(
                    "velocity",
                    format!("expected zero, constant or wave, got `{other}`"),
                ))
            }
        };
        let seed: u64 = get("seed")
            .parse()
            .map_err(|_| ConfigError::key("seed", format!("`{}` is not an unsigned integer", get("seed"))))?;
        let h = match get("h") {
            "auto" => 2.0 * std::f64::consts::PI * hbar,
            raw => positive("h", raw)?,
        };
        let grid_min = finite("grid_min", get("grid_min"))?;
        let grid_max = finite("grid_max", get("grid_max"))?;
        if grid_max <= grid_min {
            return Err(ConfigError::key("grid_max", "must exceed grid_min"));
        }
        let ladder = list("ladder", get("ladder"))?;
        if ladder.windows(2).any(|w| w[1] >= w[0]) {
            return Err(ConfigError::key("ladder", "must be strictly decreasing"));
        }
        let cfg = RunConfig {
            hbar,
            mass: positive("mass", get("mass"))?,
            epsilon: positive("epsilon", get("epsilon"))?,
            perm: perm as u8,
            steps: count("steps", get("steps"), 1)?,
            blocks: count("blocks", get("blocks"), 1)?,
            seed,
            format,
            potential,
            stiffness: finite("stiffness", get("stiffness"))?,
            grid_min,
            grid_max,
            grid_n: count("grid_n", get("grid_n"), 8)?,
            sigma0: positive("sigma0", get("sigma0"))?,
            x0: finite("x0", get("x0"))?,
            p0: finite("p0", get("p0"))?,
            t_final: positive("t_final", get("t_final"))?,
            dt: positive("dt", get("dt"))?,
            ladder,
            epsilons: list("epsilons", get("epsilons"))?,
            velocity,
            bins: count("bins", get("bins"), 1)?,
            samples: count("samples", get("samples"), 2)?,
            trajectories: count("trajectories", get("trajectories"), 1)?,
            snapshots: count("snapshots", get("snapshots"), 1)?,
            speed: finite("speed", get("speed"))?,
            h,
            echo: BTreeMap::new(),
        };
        if cfg.potential == PotentialKind::Harmonic && cfg.stiffness <= 0.0 {
            return Err(ConfigError::key("stiffness", "a harmonic potential needs stiffness > 0"));
        }
        let mut echo = map;
        echo.insert("h".to_string(), crate::output::fmt_f64(h));
        Ok(RunConfig { echo, ..cfg })
    }

    /// Number of `dt` steps in `t_final`; must be a whole number.
    pub fn time_steps(&self) -> Result<usize, ConfigError> {
        let ratio = self.t_final / self.dt;
        let n = ratio.round();
        if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio {
            return Err(ConfigError::key(
                "dt",
                format!("t_final / dt must be a whole number, got {ratio}"),
            ));
        }
        Ok(n as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(pairs: &[(&str, &str)]) -> Result<RunConfig, ConfigError> {
        let o = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        RunConfig::resolve(BTreeMap::new(), o)
    }

    #[test]
    fn defaults_are_valid() {
        let c = resolve(&[]).unwrap();
        assert_eq!(c.perm, 1);
        assert!((c.h - 2.0 * std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(c.echo.len(), DEFAULTS.len());
    }

    #[test]
    fn bad_values_name_the_key() {
        for (k, v) in [("hbar", "-1"), ("perm", "9"), ("format", "xml"), ("ladder", "0.1,0.2"), ("steps", "0")] {
            let e = resolve(&[(k, v)]).unwrap_err().to_string();
            assert!(e.contains(&format!("`{k}`")), "{e}");
        }
    }

    #[test]
    fn file_syntax() {
        let m = parse_text("# comment\nhbar = 2 # trailing\n\nmass=3\n", "t").unwrap();
        assert_eq!(m["hbar"], "2");
        assert_eq!(m["mass"], "3");
        assert!(matches!(parse_text("bogus = 1", "t"), Err(ConfigError::Unknown(k)) if k == "bogus"));
        assert!(matches!(parse_text("hbar 1", "t"), Err(ConfigError::Syntax { line: 1, .. })));
    }

    #[test]
    fn overrides_win() {
        let file = parse_text("hbar = 2\nmass = 3", "t").unwrap();
        let o = [("hbar".to_string(), "5".to_string())].into_iter().collect();
        let c = RunConfig::resolve(file, o).unwrap();
        assert_eq!(c.hbar, 5.0);
        assert_eq!(c.mass, 3.0);
    }
}
