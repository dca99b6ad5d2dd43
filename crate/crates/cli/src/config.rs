//! Command-line parameters and the flat `key = value` config file.
//!
//! Every flag has a config key of the same name (dashes or underscores).
//! A value given on the command line wins over the config file, which wins
//! over the command's defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use hadamard_gap::report::Format;

/// A configuration problem; the CLI exits with status 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn parse_list<T: FromStr>(key: &str, raw: &str) -> Result<Vec<T>, String> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| format!("`{key}`: cannot parse `{s}`")))
        .collect()
}

fn list_f64(raw: &str) -> Result<Vec<f64>, String> {
    parse_list("list", raw)
}

fn list_usize(raw: &str) -> Result<Vec<usize>, String> {
    parse_list("list", raw)
}

fn format_arg(raw: &str) -> Result<Format, String> {
    raw.parse::<Format>().map_err(|e| e.to_string())
}

/// Parameters shared by all commands. Each command reads the subset it
/// needs.
#[derive(Debug, Clone, Default, Args)]
pub struct Params {
    /// Flat key=value file; command-line flags take precedence.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Dimension.
    #[arg(long)]
    pub n: Option<usize>,
    /// Curvature parameter; the space has curvature −κ².
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Weight exponent of the weighted Rellich inequality.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Order of the higher-order inequalities.
    #[arg(long)]
    pub k: Option<usize>,
    /// Ball radius, or an increasing comma-separated list for a gap study.
    #[arg(long = "R", value_name = "R[,R...]", value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
    /// Increasing comma-separated δ values, each at least 8.
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    /// Riccati family id, e.g. `clamped_constant`.
    #[arg(long)]
    pub family: Option<String>,
    /// Node count of the radial mesh (at least 64).
    #[arg(long)]
    pub mesh: Option<usize>,
    /// Relative tolerance of comparisons against closed forms.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Report file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = format_arg)]
    pub format: Option<Format>,
    /// Omit timestamps and timings so identical runs give identical bytes.
    #[arg(long)]
    pub no_timestamp: bool,
    /// Problem kind: membrane|clamped|buckling for `eigen`, a sweep kind for
    /// `sharpness`.
    #[arg(long)]
    pub kind: Option<String>,
    /// Use the family's optimal parameters (the default when a, b, C are unset).
    #[arg(long)]
    pub optimal: bool,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long = "C")]
    pub c: Option<f64>,
    /// Cut-off of u_δ: `smooth` (default), `linear`, or `smooth:<order>`.
    #[arg(long)]
    pub truncation: Option<String>,
    /// Rellich mode: weighted|higher_order|higher_order_gradient|bessel|hyperbolic|gradient|hardy.
    #[arg(long)]
    pub mode: Option<String>,
    /// Number of random test functions for `rellich`.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Number of eigenvalues reported by `eigen`.
    #[arg(long)]
    pub count: Option<usize>,
    /// CSV file for the eigenfunctions computed by `eigen`.
    #[arg(long, value_name = "FILE")]
    pub dump: Option<PathBuf>,
    /// Acceptance criteria run by `validate`, e.g. `1,4,7`.
    #[arg(long, value_delimiter = ',')]
    pub criteria: Option<Vec<usize>>,
}

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// skipped; keys are normalised to underscores.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError(format!("line {}: expected key = value, got `{line}`", i + 1)));
        };
        let key = key.trim().replace('-', "_");
        if key.is_empty() {
            return Err(ConfigError(format!("line {}: empty key", i + 1)));
        }
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(ConfigError(format!("line {}: duplicate key `{key}`", i + 1)));
        }
    }
    Ok(map)
}

fn parsed<T: FromStr>(key: &str, raw: &str) -> Result<T, ConfigError> {
    raw.parse::<T>()
        .map_err(|_| ConfigError(format!("config key `{key}`: cannot parse `{raw}`")))
}

fn fill<T>(slot: &mut Option<T>, value: Result<T, ConfigError>) -> Result<(), ConfigError> {
    let value = value?;
    if slot.is_none() {
        *slot = Some(value);
    }
    Ok(())
}

impl Params {
    /// Fills unset fields from `map`. `command`, if present, must name the
    /// running command.
    pub fn merge(&mut self, map: &BTreeMap<String, String>, command: &str) -> Result<(), ConfigError> {
        for (key, raw) in map {
            let list_err = |e: String| ConfigError(format!("config key `{key}`: {e}"));
            match key.as_str() {
                "command" => {
                    if raw != command {
                        return Err(ConfigError(format!("config is for command `{raw}`, running `{command}`")));
                    }
                }
                "n" => fill(&mut self.n, parsed(key, raw))?,
                "kappa" => fill(&mut self.kappa, parsed(key, raw))?,
                "p" => fill(&mut self.p, parsed(key, raw))?,
                "gamma" => fill(&mut self.gamma, parsed(key, raw))?,
                "k" => fill(&mut self.k, parsed(key, raw))?,
                "R" | "r" => fill(&mut self.radii, list_f64(raw).map_err(list_err))?,
                "deltas" => fill(&mut self.deltas, list_f64(raw).map_err(list_err))?,
                "family" => fill(&mut self.family, Ok(raw.clone()))?,
                "mesh" => fill(&mut self.mesh, parsed(key, raw))?,
                "tol" => fill(&mut self.tol, parsed(key, raw))?,
                "out" => fill(&mut self.out, Ok(PathBuf::from(raw)))?,
                "format" => fill(&mut self.format, format_arg(raw).map_err(list_err))?,
                "no_timestamp" => self.no_timestamp |= parsed::<bool>(key, raw)?,
                "kind" => fill(&mut self.kind, Ok(raw.clone()))?,
                "optimal" => self.optimal |= parsed::<bool>(key, raw)?,
                "a" => fill(&mut self.a, parsed(key, raw))?,
                "b" => fill(&mut self.b, parsed(key, raw))?,
                "C" | "c" => fill(&mut self.c, parsed(key, raw))?,
                "truncation" => fill(&mut self.truncation, Ok(raw.clone()))?,
                "mode" => fill(&mut self.mode, Ok(raw.clone()))?,
                "samples" => fill(&mut self.samples, parsed(key, raw))?,
                "count" => fill(&mut self.count, parsed(key, raw))?,
                "dump" => fill(&mut self.dump, Ok(PathBuf::from(raw)))?,
                "criteria" => fill(&mut self.criteria, list_usize(raw).map_err(list_err))?,
                other => return Err(ConfigError(format!("unknown config key `{other}`"))),
            }
        }
        Ok(())
    }

    /// Reads and merges the `--config` file, if any.
    pub fn resolve(mut self, command: &str) -> Result<Self, ConfigError> {
        if let Some(path) = self.config.clone() {
            let map = parse_config(&read(&path)?)?;
            self.merge(&map, command)?;
        }
        Ok(self)
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_files() {
        let map = parse_config("# sweep\nn = 3\nkappa=1\n\nno-timestamp = true\n").unwrap();
        assert_eq!(map.len(), 3);
        assert_eq!(map["no_timestamp"], "true");
        assert!(parse_config("n 3").is_err());
        assert!(parse_config("n = 3\nn = 4").is_err());
    }

    #[test]
    fn command_line_wins() {
        let mut p = Params {
            n: Some(5),
            ..Default::default()
        };
        let map = parse_config("n = 3\nkappa = 2\ndeltas = 8, 16,32").unwrap();
        p.merge(&map, "sharpness").unwrap();
        assert_eq!(p.n, Some(5));
        assert_eq!(p.kappa, Some(2.0));
        assert_eq!(p.deltas, Some(vec![8.0, 16.0, 32.0]));
    }

    #[test]
    fn rejects_unknown_and_malformed_keys() {
        let mut p = Params::default();
        assert!(p.merge(&parse_config("colour = red").unwrap(), "eigen").is_err());
        assert!(p.merge(&parse_config("n = three").unwrap(), "eigen").is_err());
        assert!(p.merge(&parse_config("command = rellich").unwrap(), "eigen").is_err());
        assert!(p.merge(&parse_config("command = eigen").unwrap(), "eigen").is_ok());
    }
}
