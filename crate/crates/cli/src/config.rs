//! Run configuration: defaults, flat `key = value` files and flag overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use curvelab::geometry::{Case, IndexConfig, IntRange, SectorLabel};
use curvelab::quadrature::QuadratureSpec;
use curvelab::wavelet1d::make_ramp;

use crate::CliError;

pub const CACHE_ENV: &str = "CURVELAB_CACHE";

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub case: Case,
    pub d: usize,
    pub mu: f64,
    pub m_range: IntRange,
    pub j_range: IntRange,
    pub k_box: IntRange,
    pub sectors: Vec<SectorLabel>,
    pub ramp: String,
    pub base_order: usize,
    pub resolution_factor: f64,
    pub max_nodes: usize,
    pub cache_dir: PathBuf,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        let q = QuadratureSpec::default();
        Self {
            case: Case::Wave,
            d: 1,
            mu: 1.0,
            m_range: IntRange::new(0, 0),
            j_range: IntRange::new(2, 2),
            k_box: IntRange::new(0, 0),
            sectors: vec![SectorLabel::TP],
            ramp: make_ramp().label(),
            base_order: q.base_order,
            resolution_factor: q.resolution_factor,
            max_nodes: q.max_nodes_per_axis,
            cache_dir: PathBuf::from(".curvelab-cache"),
            seed: 0,
        }
    }
}

/// Flags shared by every subcommand. Each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// `wave` or `kg`.
    #[arg(long, global = true)]
    pub case: Option<String>,
    /// Spatial dimension, 1 or 3.
    #[arg(long, global = true)]
    pub d: Option<String>,
    #[arg(long, global = true)]
    pub mu: Option<String>,
    /// Main scale range, e.g. `0..2`.
    #[arg(long = "m", global = true, allow_hyphen_values = true)]
    pub m_range: Option<String>,
    /// Secondary scale range, e.g. `2..4`.
    #[arg(long = "j", global = true, allow_hyphen_values = true)]
    pub j_range: Option<String>,
    /// Translation range applied to every lattice axis, e.g. `-1..1`.
    #[arg(long = "k", global = true, allow_hyphen_values = true)]
    pub k_box: Option<String>,
    /// Comma-separated sector codes (`tp`, `tm`, `np`, `nm`).
    #[arg(long, global = true)]
    pub sectors: Option<String>,
    #[arg(long, global = true)]
    pub base_order: Option<String>,
    #[arg(long, global = true)]
    pub resolution_factor: Option<String>,
    #[arg(long, global = true)]
    pub max_nodes: Option<String>,
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Do not read or write the result cache.
    #[arg(long, global = true)]
    pub no_cache: bool,
    #[arg(long, global = true)]
    pub seed: Option<String>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn parse_sectors(v: &str) -> Result<Vec<SectorLabel>, CliError> {
    let mut out = Vec::new();
    for s in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let label: SectorLabel = s.parse().map_err(|e| invalid(format!("sectors: {e}")))?;
        if !out.contains(&label) {
            out.push(label);
        }
    }
    if out.is_empty() {
        return Err(invalid("sectors: empty list"));
    }
    Ok(out)
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim().parse().map_err(|_| invalid(format!("{key}: cannot parse '{v}'")))
}

impl Config {
    fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "case" => self.case = value.trim().parse().map_err(|e| invalid(format!("case: {e}")))?,
            "d" => self.d = parse(key, value)?,
            "mu" => self.mu = parse(key, value)?,
            "m_range" | "m" => self.m_range = parse(key, value)?,
            "j_range" | "j" => self.j_range = parse(key, value)?,
            "k_box" | "k" => self.k_box = parse(key, value)?,
            "sectors" => self.sectors = parse_sectors(value)?,
            "ramp" => self.ramp = value.trim().to_string(),
            "base_order" => self.base_order = parse(key, value)?,
            "resolution_factor" => self.resolution_factor = parse(key, value)?,
            "max_nodes" => self.max_nodes = parse(key, value)?,
            "cache_dir" => self.cache_dir = PathBuf::from(value.trim()),
            "seed" => self.seed = parse(key, value)?,
            _ => return Err(invalid(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    /// Reads a flat `key = value` file; `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("config {}: {e}", path.display())))?;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("config {}:{}: expected key = value", path.display(), n + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    /// Defaults, then the config file, then `CURVELAB_CACHE`, then flags.
    pub fn resolve(args: &ConfigArgs) -> Result<Self, CliError> {
        let mut cfg = Config::default();
        if let Some(p) = &args.config {
            cfg.apply_file(p)?;
        }
        if let Some(dir) = std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()) {
            cfg.cache_dir = PathBuf::from(dir);
        }
        let flags: [(&str, &Option<String>); 11] = [
            ("case", &args.case),
            ("d", &args.d),
            ("mu", &args.mu),
            ("m_range", &args.m_range),
            ("j_range", &args.j_range),
            ("k_box", &args.k_box),
            ("sectors", &args.sectors),
            ("base_order", &args.base_order),
            ("resolution_factor", &args.resolution_factor),
            ("max_nodes", &args.max_nodes),
            ("seed", &args.seed),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, v)?;
            }
        }
        if let Some(dir) = &args.cache_dir {
            cfg.cache_dir = dir.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.d != 1 && self.d != 3 {
            return Err(invalid(format!("d = {} not supported (use 1 or 3)", self.d)));
        }
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(invalid(format!("mu = {} must be finite and >= 0", self.mu)));
        }
        if !self.j_range.is_empty() && self.j_range.lo < 1 {
            return Err(invalid(format!("j range starts at {}, must be >= 1", self.j_range.lo)));
        }
        if self.ramp != make_ramp().label() {
            return Err(invalid(format!("ramp '{}' not available (only '{}')", self.ramp, make_ramp().label())));
        }
        self.quad().validate().map_err(|e| invalid(e.to_string()))?;
        Ok(())
    }

    pub fn quad(&self) -> QuadratureSpec {
        QuadratureSpec {
            base_order: self.base_order,
            resolution_factor: self.resolution_factor,
            max_nodes_per_axis: self.max_nodes,
            ..QuadratureSpec::default()
        }
    }

    pub fn index_config(&self) -> IndexConfig {
        IndexConfig {
            case: self.case,
            d: self.d,
            mu: self.mu,
            m_range: self.m_range,
            j_range: self.j_range,
            k_box: self.k_box,
            sectors: self.sectors.clone(),
        }
    }

    /// Fields that change numerical results, in a fixed textual form.
    pub fn canonical(&self) -> String {
        self.fields().iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// Every field including defaults, for output manifests.
    pub fn echo(&self) -> serde_json::Value {
        let mut m: serde_json::Map<String, serde_json::Value> =
            self.fields().into_iter().map(|(k, v)| (k.to_string(), v.into())).collect();
        m.insert("cache_dir".into(), self.cache_dir.display().to_string().into());
        m.into()
    }

    fn fields(&self) -> BTreeMap<&'static str, String> {
        let sectors: Vec<&str> = self.sectors.iter().map(|s| s.code()).collect();
        BTreeMap::from([
            ("case", self.case.name().to_string()),
            ("d", self.d.to_string()),
            ("mu", format!("{:e}", self.mu)),
            ("m_range", format!("{}..{}", self.m_range.lo, self.m_range.hi)),
            ("j_range", format!("{}..{}", self.j_range.lo, self.j_range.hi)),
            ("k_box", format!("{}..{}", self.k_box.lo, self.k_box.hi)),
            ("sectors", sectors.join(",")),
            ("ramp", self.ramp.clone()),
            ("base_order", self.base_order.to_string()),
            ("resolution_factor", format!("{:e}", self.resolution_factor)),
            ("max_nodes", self.max_nodes.to_string()),
            ("seed", self.seed.to_string()),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.conf");
        std::fs::write(&p, "# test\ncase = kg\nm_range = -1..2\nsectors = tp, tm\nmu=0.5\n").unwrap();
        let args = ConfigArgs { config: Some(p), mu: Some("2".into()), ..Default::default() };
        let cfg = Config::resolve(&args).unwrap();
        assert_eq!(cfg.case, Case::Kg);
        assert_eq!(cfg.m_range, IntRange::new(-1, 2));
        assert_eq!(cfg.sectors, vec![SectorLabel::TP, SectorLabel::TM]);
        assert_eq!(cfg.mu, 2.0);
    }

    #[test]
    fn rejects_bad_values() {
        let mut cfg = Config::default();
        assert!(cfg.set("colour", "red").is_err());
        assert!(cfg.set("d", "two").is_err());
        cfg.j_range = IntRange::new(0, 2);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn canonical_changes_with_fields() {
        let a = Config::default();
        let b = Config { base_order: a.base_order + 1, ..a.clone() };
        assert_ne!(a.canonical(), b.canonical());
        let c = Config { cache_dir: PathBuf::from("elsewhere"), ..a.clone() };
        assert_eq!(a.canonical(), c.canonical());
    }
}
