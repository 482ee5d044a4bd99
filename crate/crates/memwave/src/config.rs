//! Line-oriented run configuration.
//!
//! One `key = value` pair per line, keys are dotted paths, `#` starts a
//! comment. Lists are written `[a, b, c]`. Every key has a default, so a
//! file only needs the entries it changes. Serialization writes every key
//! in a fixed order and floats in shortest round-trip form, so
//! `parse(serialize(c)) == c`.

use std::fmt::Write as _;

use memwave_core::domain::Grid;
use memwave_core::kernels::{KernelFamily, MemoryKernel};
use memwave_core::nonlinearity::{Nonlinearity, NonlinearityFamily};
use memwave_core::solver::{InitialData, SolverConfig, DEFAULT_CFL_FACTOR};
use serde::Serialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainBlock {
    pub dim: usize,
    pub extents: Vec<f64>,
    pub nodes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelBlock {
    pub family: String,
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonlinearityBlock {
    pub family: String,
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Eigenmode,
    RandomSmooth,
    Zero,
    Custom,
}

impl InitialKind {
    pub fn name(self) -> &'static str {
        match self {
            InitialKind::Eigenmode => "eigenmode",
            InitialKind::RandomSmooth => "random_smooth",
            InitialKind::Zero => "zero",
            InitialKind::Custom => "custom",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "eigenmode" => InitialKind::Eigenmode,
            "random_smooth" => InitialKind::RandomSmooth,
            "zero" => InitialKind::Zero,
            "custom" => InitialKind::Custom,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialBlock {
    pub kind: InitialKind,
    /// Mode indices, one per dimension.
    pub mode: Vec<usize>,
    /// Highest mode index used by `random_smooth`.
    pub cutoff: usize,
    /// Interior values for `custom`.
    pub u0: Vec<f64>,
    pub u1: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverBlock {
    pub dt: f64,
    pub t_final: f64,
    pub cfl_check: bool,
    pub cfl_factor: f64,
    pub history_window: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Bin,
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Bin => "bin",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputsBlock {
    pub directory: String,
    pub snapshot_every: usize,
    pub formats: Vec<Format>,
    pub check_identity: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub domain: DomainBlock,
    pub kernel: KernelBlock,
    pub nonlinearity: NonlinearityBlock,
    pub initial: InitialBlock,
    pub solver: SolverBlock,
    pub outputs: OutputsBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            domain: DomainBlock { dim: 1, extents: vec![1.0], nodes: vec![101] },
            kernel: KernelBlock { family: "poly_exp".into(), params: vec![2.0, 0.0, 1.0] },
            nonlinearity: NonlinearityBlock { family: "sine".into(), params: vec![1.0] },
            initial: InitialBlock {
                kind: InitialKind::Eigenmode,
                mode: vec![1],
                cutoff: 8,
                u0: Vec::new(),
                u1: Vec::new(),
            },
            solver: SolverBlock {
                dt: 5e-3,
                t_final: 1.0,
                cfl_check: true,
                cfl_factor: DEFAULT_CFL_FACTOR,
                history_window: None,
            },
            outputs: OutputsBlock {
                directory: "runs".into(),
                snapshot_every: 10,
                formats: vec![Format::Csv, Format::Bin],
                check_identity: false,
            },
        }
    }
}

/// Every accepted key, in serialization order.
pub const KEYS: &[&str] = &[
    "seed",
    "domain.dim",
    "domain.extents",
    "domain.nodes",
    "kernel.family",
    "kernel.params",
    "nonlinearity.family",
    "nonlinearity.params",
    "initial.kind",
    "initial.mode",
    "initial.cutoff",
    "initial.u0",
    "initial.u1",
    "solver.dt",
    "solver.t_final",
    "solver.cfl_check",
    "solver.cfl_factor",
    "solver.history_window",
    "outputs.directory",
    "outputs.snapshot_every",
    "outputs.formats",
    "outputs.check_identity",
];

fn bad(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Invalid(format!("{key}: {msg}"))
}

fn parse_f64(key: &str, s: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| bad(key, format!("expected a number, got `{}`", s.trim())))?;
    if !v.is_finite() {
        return Err(bad(key, "value must be finite"));
    }
    Ok(v)
}

fn parse_usize(key: &str, s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| bad(key, format!("expected a nonnegative integer, got `{}`", s.trim())))
}

fn parse_bool(key: &str, s: &str) -> Result<bool> {
    match s.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(bad(key, format!("expected true or false, got `{other}`"))),
    }
}

/// `[a, b]`, `[]`, or a bare scalar taken as a one-element list.
fn split_list(key: &str, s: &str) -> Result<Vec<String>> {
    let s = s.trim();
    let inner = match (s.strip_prefix('['), s.ends_with(']')) {
        (Some(rest), true) => &rest[..rest.len() - 1],
        (None, false) => return Ok(vec![s.to_string()]),
        _ => return Err(bad(key, format!("unbalanced list `{s}`"))),
    };
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    Ok(inner.split(',').map(|p| p.trim().to_string()).collect())
}

fn parse_list<T>(key: &str, s: &str, item: impl Fn(&str, &str) -> Result<T>) -> Result<Vec<T>> {
    split_list(key, s)?.iter().map(|p| item(key, p)).collect()
}

fn fmt_list<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    let parts: Vec<String> = items.iter().map(f).collect();
    format!("[{}]", parts.join(", "))
}

fn fmt_f64(v: &f64) -> String {
    format!("{v:?}")
}

/// Splits `kernel.params[1]` into the key and index.
fn split_index(path: &str) -> Result<(&str, Option<usize>)> {
    match path.find('[') {
        None => Ok((path, None)),
        Some(at) => {
            let idx = path[at + 1..]
                .strip_suffix(']')
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad(path, "malformed index"))?;
            Ok((&path[..at], Some(idx)))
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen: Vec<&str> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Invalid(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim();
            let canon = KEYS
                .iter()
                .find(|k| **k == key)
                .ok_or_else(|| CliError::Invalid(format!("line {}: unknown key `{key}`", lineno + 1)))?;
            if seen.contains(canon) {
                return Err(CliError::Invalid(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
            seen.push(canon);
            cfg.set(key, value.trim())
                .map_err(|e| CliError::Invalid(format!("line {}: {}", lineno + 1, strip_prefix(&e))))?;
        }
        Ok(cfg)
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).expect("every listed key resolves"));
        }
        out
    }

    /// Current value of `key` in config syntax.
    pub fn get(&self, key: &str) -> Result<String> {
        let (base, idx) = split_index(key)?;
        if let Some(i) = idx {
            let list = self.float_list(base).ok_or_else(|| bad(key, "only numeric lists can be indexed"))?;
            return list.get(i).map(fmt_f64).ok_or_else(|| bad(key, "index out of range"));
        }
        let usize_list = |v: &[usize]| fmt_list(v, |x| x.to_string());
        Ok(match key {
            "seed" => self.seed.to_string(),
            "domain.dim" => self.domain.dim.to_string(),
            "domain.extents" => fmt_list(&self.domain.extents, fmt_f64),
            "domain.nodes" => usize_list(&self.domain.nodes),
            "kernel.family" => self.kernel.family.clone(),
            "kernel.params" => fmt_list(&self.kernel.params, fmt_f64),
            "nonlinearity.family" => self.nonlinearity.family.clone(),
            "nonlinearity.params" => fmt_list(&self.nonlinearity.params, fmt_f64),
            "initial.kind" => self.initial.kind.name().into(),
            "initial.mode" => usize_list(&self.initial.mode),
            "initial.cutoff" => self.initial.cutoff.to_string(),
            "initial.u0" => fmt_list(&self.initial.u0, fmt_f64),
            "initial.u1" => fmt_list(&self.initial.u1, fmt_f64),
            "solver.dt" => fmt_f64(&self.solver.dt),
            "solver.t_final" => fmt_f64(&self.solver.t_final),
            "solver.cfl_check" => self.solver.cfl_check.to_string(),
            "solver.cfl_factor" => fmt_f64(&self.solver.cfl_factor),
            "solver.history_window" => match self.solver.history_window {
                None => "none".into(),
                Some(n) => n.to_string(),
            },
            "outputs.directory" => self.outputs.directory.clone(),
            "outputs.snapshot_every" => self.outputs.snapshot_every.to_string(),
            "outputs.formats" => fmt_list(&self.outputs.formats, |f| f.name().to_string()),
            "outputs.check_identity" => self.outputs.check_identity.to_string(),
            _ => return Err(bad(key, "unknown key")),
        })
    }

    fn float_list(&self, key: &str) -> Option<&Vec<f64>> {
        Some(match key {
            "domain.extents" => &self.domain.extents,
            "kernel.params" => &self.kernel.params,
            "nonlinearity.params" => &self.nonlinearity.params,
            "initial.u0" => &self.initial.u0,
            "initial.u1" => &self.initial.u1,
            _ => return None,
        })
    }

    /// Whether `path` names a key (or an in-range element of a numeric list).
    pub fn resolves(&self, path: &str) -> bool {
        self.get(path).is_ok()
    }

    /// Assigns `value` to `path`; `path` may index a numeric list, as in `kernel.params[1]`.
    pub fn set(&mut self, path: &str, value: &str) -> Result<()> {
        let (key, idx) = split_index(path)?;
        if let Some(i) = idx {
            let v = parse_f64(path, value)?;
            let list = match key {
                "domain.extents" => &mut self.domain.extents,
                "kernel.params" => &mut self.kernel.params,
                "nonlinearity.params" => &mut self.nonlinearity.params,
                "initial.u0" => &mut self.initial.u0,
                "initial.u1" => &mut self.initial.u1,
                _ => return Err(bad(path, "only numeric lists can be indexed")),
            };
            let slot = list.get_mut(i).ok_or_else(|| bad(path, "index out of range"))?;
            *slot = v;
            return Ok(());
        }
        match key {
            "seed" => {
                self.seed =
                    value.parse().map_err(|_| bad(key, format!("expected a 64-bit unsigned integer, got `{value}`")))?
            }
            "domain.dim" => self.domain.dim = parse_usize(key, value)?,
            "domain.extents" => self.domain.extents = parse_list(key, value, parse_f64)?,
            "domain.nodes" => self.domain.nodes = parse_list(key, value, parse_usize)?,
            "kernel.family" => {
                if KernelFamily::from_name(value).is_none() {
                    return Err(bad(
                        key,
                        format!("unknown family `{value}` (exp_integral, poly_exp, power_law, zero, custom_table)"),
                    ));
                }
                self.kernel.family = value.to_string();
            }
            "kernel.params" => self.kernel.params = parse_list(key, value, parse_f64)?,
            "nonlinearity.family" => {
                match NonlinearityFamily::from_name(value) {
                    Some(NonlinearityFamily::Custom) | None => {
                        return Err(bad(key, format!("unknown family `{value}` (power, sine, zero)")))
                    }
                    Some(_) => {}
                }
                self.nonlinearity.family = value.to_string();
            }
            "nonlinearity.params" => self.nonlinearity.params = parse_list(key, value, parse_f64)?,
            "initial.kind" => {
                self.initial.kind = InitialKind::from_name(value).ok_or_else(|| {
                    bad(key, format!("unknown kind `{value}` (eigenmode, random_smooth, zero, custom)"))
                })?
            }
            "initial.mode" => self.initial.mode = parse_list(key, value, parse_usize)?,
            "initial.cutoff" => self.initial.cutoff = parse_usize(key, value)?,
            "initial.u0" => self.initial.u0 = parse_list(key, value, parse_f64)?,
            "initial.u1" => self.initial.u1 = parse_list(key, value, parse_f64)?,
            "solver.dt" => self.solver.dt = parse_f64(key, value)?,
            "solver.t_final" => self.solver.t_final = parse_f64(key, value)?,
            "solver.cfl_check" => self.solver.cfl_check = parse_bool(key, value)?,
            "solver.cfl_factor" => self.solver.cfl_factor = parse_f64(key, value)?,
            "solver.history_window" => {
                self.solver.history_window = match value {
                    "none" => None,
                    v => Some(parse_usize(key, v)?),
                }
            }
            "outputs.directory" => {
                if value.is_empty() {
                    return Err(bad(key, "directory must not be empty"));
                }
                self.outputs.directory = value.to_string();
            }
            "outputs.snapshot_every" => self.outputs.snapshot_every = parse_usize(key, value)?,
            "outputs.formats" => {
                self.outputs.formats = parse_list(key, value, |k, s| match s {
                    "csv" => Ok(Format::Csv),
                    "bin" => Ok(Format::Bin),
                    other => Err(bad(k, format!("unknown format `{other}` (csv, bin)"))),
                })?
            }
            "outputs.check_identity" => self.outputs.check_identity = parse_bool(key, value)?,
            _ => return Err(bad(key, "unknown key")),
        }
        Ok(())
    }

    pub fn wants(&self, f: Format) -> bool {
        self.outputs.formats.contains(&f)
    }

    /// Resolves every block into core objects, checking cross references.
    pub fn build(&self) -> Result<Setup> {
        let d = &self.domain;
        if !(1..=2).contains(&d.dim) {
            return Err(bad("domain.dim", format!("must be 1 or 2, got {}", d.dim)));
        }
        if d.extents.len() != d.dim {
            return Err(bad("domain.extents", format!("has {} entries but domain.dim = {}", d.extents.len(), d.dim)));
        }
        if d.nodes.len() != d.dim {
            return Err(bad("domain.nodes", format!("has {} entries but domain.dim = {}", d.nodes.len(), d.dim)));
        }
        let grid = Grid::new(d.dim, &d.extents, &d.nodes).map_err(|e| bad("domain", e))?;

        let family = KernelFamily::from_name(&self.kernel.family)
            .ok_or_else(|| bad("kernel.family", format!("unknown family `{}`", self.kernel.family)))?;
        let kernel = MemoryKernel::new(family, &self.kernel.params).map_err(|e| bad("kernel", e))?;

        let nl_family = NonlinearityFamily::from_name(&self.nonlinearity.family)
            .ok_or_else(|| bad("nonlinearity.family", format!("unknown family `{}`", self.nonlinearity.family)))?;
        let nl = Nonlinearity::new(nl_family, &self.nonlinearity.params, d.dim).map_err(|e| bad("nonlinearity", e))?;

        let init = &self.initial;
        let ic = match init.kind {
            InitialKind::Eigenmode => {
                if init.mode.len() != d.dim {
                    return Err(bad(
                        "initial.mode",
                        format!("has {} entries but domain.dim = {}", init.mode.len(), d.dim),
                    ));
                }
                let l = if d.dim == 2 { init.mode[1] } else { 1 };
                InitialData::eigenmode(&grid, init.mode[0], l).map_err(|e| bad("initial.mode", e))?
            }
            InitialKind::RandomSmooth => {
                if init.cutoff == 0 {
                    return Err(bad("initial.cutoff", "must be at least 1"));
                }
                InitialData::random_smooth(&grid, self.seed, init.cutoff)
            }
            InitialKind::Zero => InitialData::zero(&grid),
            InitialKind::Custom => {
                InitialData::custom(&grid, init.u0.clone(), init.u1.clone()).map_err(|e| bad("initial.u0/u1", e))?
            }
        };

        if !(self.solver.cfl_factor > 0.0) {
            return Err(bad("solver.cfl_factor", "must be positive"));
        }
        let solver = SolverConfig {
            dt: self.solver.dt,
            t_final: self.solver.t_final,
            cfl_check: self.solver.cfl_check,
            cfl_factor: self.solver.cfl_factor,
            history_window: self.solver.history_window,
            snapshot_every: self.outputs.snapshot_every,
        };
        solver.validate(&grid).map_err(|e| bad("solver", e))?;
        Ok(Setup { grid, kernel, nl, ic, solver })
    }
}

fn strip_prefix(e: &CliError) -> String {
    match e {
        CliError::Invalid(m) => m.clone(),
        other => other.to_string(),
    }
}

/// A config resolved into core objects.
#[derive(Debug, Clone)]
pub struct Setup {
    pub grid: Grid,
    pub kernel: MemoryKernel,
    pub nl: Nonlinearity,
    pub ic: InitialData,
    pub solver: SolverConfig,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::parse(&c.serialize()).unwrap(), c);
    }

    #[test]
    fn parses_comments_and_lists() {
        let text =
            "# smoke\nkernel.params = [1.5, 0.3, 0.2]  # poly_exp\nsolver.history_window = 40\n\ndomain.nodes = 51\n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.kernel.params, vec![1.5, 0.3, 0.2]);
        assert_eq!(c.solver.history_window, Some(40));
        assert_eq!(c.domain.nodes, vec![51]);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        let e = RunConfig::parse("solver.dtt = 1").unwrap_err();
        assert!(e.to_string().contains("line 1"), "{e}");
        assert!(RunConfig::parse("seed = 1\nseed = 2").is_err());
        assert!(RunConfig::parse("seed 1").is_err());
        assert!(RunConfig::parse("solver.dt = nan").is_err());
        assert!(RunConfig::parse("kernel.params = [1, 2").is_err());
    }

    #[test]
    fn indexed_set() {
        let mut c = RunConfig::default();
        c.set("kernel.params[1]", "0.25").unwrap();
        assert_eq!(c.kernel.params[1], 0.25);
        assert!(c.set("kernel.params[7]", "1").is_err());
        assert!(c.set("domain.nodes[0]", "1").is_err());
        assert!(c.resolves("solver.dt"));
        assert!(!c.resolves("solver.nope"));
    }

    #[test]
    fn cross_references_checked() {
        let mut c = RunConfig::default();
        c.domain.dim = 2;
        let e = c.build().unwrap_err();
        assert!(e.to_string().contains("domain.extents"), "{e}");
        let mut c = RunConfig::default();
        c.set("kernel.family", "exp_integral").unwrap();
        c.set("kernel.params", "[1.2, 1.0, 0.0]").unwrap();
        assert!(c.build().unwrap_err().to_string().contains("a(0) < 1"));
        let mut c = RunConfig::default();
        c.solver.dt = 0.05;
        assert!(c.build().unwrap_err().to_string().contains("CFL"));
    }
}
