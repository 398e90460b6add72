//! Experiment configuration: a flat `key = value` text format.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! line    := blank | comment | entry
//! comment := '#' any*
//! entry   := key ws* '=' ws* value ws* comment?
//! key     := segment ('.' segment)*      e.g. grid.n, potential.depth
//! value   := number | word | number (',' number)*
//! ```
//!
//! Keys are unique. Unknown keys, duplicates and keys not used by the selected
//! family are errors, so a misspelled parameter never falls back to a default.
//! Serialization writes every key in a fixed order, which makes the text a
//! canonical form for hashing.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum PotentialSpec {
    Zero,
    /// Centred at `L / 2`.
    GaussianWell { depth: f64, width: f64 },
    /// Wells at `L / 2 -/+ separation / 2`.
    DoubleWell {
        depth_left: f64,
        depth_right: f64,
        width: f64,
        separation: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum CouplingSpec {
    Gaussian { amplitude: f64, width: f64 },
    CosinePacket { amplitude: f64, width: f64, wavenumber: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldMode {
    Identity,
    Compressed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverSpec {
    pub gradient_tolerance: f64,
    pub energy_tolerance: f64,
    pub max_iterations: usize,
    pub lanczos_tolerance: f64,
    pub krylov: usize,
    /// Cap on the composite dimension `n * dim F(M, N_tot)` of a sweep row.
    pub capacity: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            gradient_tolerance: 1e-8,
            energy_tolerance: 1e-12,
            max_iterations: 200_000,
            lanczos_tolerance: 1e-9,
            krylov: 160,
            capacity: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalizationSpec {
    pub radii: Vec<f64>,
    pub field: FieldMode,
    pub capacity: usize,
}

impl Default for LocalizationSpec {
    fn default() -> Self {
        Self {
            radii: Vec::new(),
            field: FieldMode::Compressed,
            capacity: polaron_core::localization::DEFAULT_CAPACITY,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HusimiConfig {
    /// Signed wavenumber index of the probed mode.
    pub mode: i64,
    pub cells: usize,
    /// Disc radius in units of `1 / alpha`.
    pub radius: f64,
}

impl Default for HusimiConfig {
    fn default() -> Self {
        Self {
            mode: 1,
            cells: 48,
            radius: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub length: f64,
    pub potential: PotentialSpec,
    pub coupling: CouplingSpec,
    pub mass: f64,
    pub modes: usize,
    pub safety: f64,
    pub alphas: Vec<f64>,
    pub seed: u64,
    pub output: Option<String>,
    pub solver: SolverSpec,
    pub localization: LocalizationSpec,
    pub husimi: HusimiConfig,
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn take_raw(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.take_raw(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|_| ConfigError::Line {
                line,
                message: format!("cannot parse `{v}` for `{key}`"),
            }),
        }
    }

    fn require<T: FromStr>(&mut self, key: &str) -> Result<T, ConfigError> {
        self.take(key)?.ok_or_else(|| ConfigError::Missing(key.into()))
    }

    fn list(&mut self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.take_raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|_| ConfigError::Line {
                        line,
                        message: format!("cannot parse `{}` in list `{key}`", s.trim()),
                    })
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
        }
    }
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Line {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            })?;
            let key = key.trim();
            let valid = !key.is_empty()
                && key
                    .split('.')
                    .all(|s| !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'));
            if !valid {
                return Err(ConfigError::Line {
                    line,
                    message: format!("malformed key `{key}`"),
                });
            }
            if let Some((first, _)) = map.insert(key.to_string(), (line, value.trim().to_string())) {
                return Err(ConfigError::Line {
                    line,
                    message: format!("duplicate key `{key}` (first set on line {first})"),
                });
            }
        }
        let mut e = Entries { map };

        let n = e.require("grid.n")?;
        let length = e.require("grid.length")?;
        let family: String = e.require("potential.family")?;
        let potential = match family.as_str() {
            "zero" => PotentialSpec::Zero,
            "gaussian-well" => PotentialSpec::GaussianWell {
                depth: e.require("potential.depth")?,
                width: e.require("potential.width")?,
            },
            "double-well" => PotentialSpec::DoubleWell {
                depth_left: e.require("potential.depth_left")?,
                depth_right: e.require("potential.depth_right")?,
                width: e.require("potential.width")?,
                separation: e.require("potential.separation")?,
            },
            other => return Err(ConfigError::Invalid(format!("unknown potential family `{other}`"))),
        };
        let family: String = e.require("coupling.family")?;
        let coupling = match family.as_str() {
            "gaussian" => CouplingSpec::Gaussian {
                amplitude: e.require("coupling.amplitude")?,
                width: e.require("coupling.width")?,
            },
            "cosine-packet" => CouplingSpec::CosinePacket {
                amplitude: e.require("coupling.amplitude")?,
                width: e.require("coupling.width")?,
                wavenumber: e.require("coupling.wavenumber")?,
            },
            other => return Err(ConfigError::Invalid(format!("unknown coupling family `{other}`"))),
        };
        let mass = e.require("particle.mass")?;
        let modes = e.require("field.modes")?;
        let safety = e.require("field.safety")?;
        let alphas = e.list("sweep.alphas")?.ok_or_else(|| ConfigError::Missing("sweep.alphas".into()))?;
        let seed = e.require("seed")?;
        let output = e.take("output.dir")?;

        let d = SolverSpec::default();
        let solver = SolverSpec {
            gradient_tolerance: e.take("solver.gradient_tolerance")?.unwrap_or(d.gradient_tolerance),
            energy_tolerance: e.take("solver.energy_tolerance")?.unwrap_or(d.energy_tolerance),
            max_iterations: e.take("solver.max_iterations")?.unwrap_or(d.max_iterations),
            lanczos_tolerance: e.take("solver.lanczos_tolerance")?.unwrap_or(d.lanczos_tolerance),
            krylov: e.take("solver.krylov")?.unwrap_or(d.krylov),
            capacity: e.take("solver.capacity")?.unwrap_or(d.capacity),
        };
        let d = LocalizationSpec::default();
        let field = match e.take_raw("localization.field") {
            None => d.field,
            Some((_, v)) if v == "identity" => FieldMode::Identity,
            Some((_, v)) if v == "compressed" => FieldMode::Compressed,
            Some((line, v)) => {
                return Err(ConfigError::Line {
                    line,
                    message: format!("`localization.field` must be identity or compressed, found `{v}`"),
                })
            }
        };
        let localization = LocalizationSpec {
            radii: e.list("localization.radii")?.unwrap_or_default(),
            field,
            capacity: e.take("localization.capacity")?.unwrap_or(d.capacity),
        };
        let d = HusimiConfig::default();
        let husimi = HusimiConfig {
            mode: e.take("husimi.mode")?.unwrap_or(d.mode),
            cells: e.take("husimi.cells")?.unwrap_or(d.cells),
            radius: e.take("husimi.radius")?.unwrap_or(d.radius),
        };

        if let Some((key, (line, _))) = e.map.into_iter().min_by_key(|(_, (line, _))| *line) {
            return Err(ConfigError::Line {
                line,
                message: format!("unknown key `{key}`"),
            });
        }
        let config = Self {
            n,
            length,
            potential,
            coupling,
            mass,
            modes,
            safety,
            alphas,
            seed,
            output,
            solver,
            localization,
            husimi,
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.into()));
        if self.alphas.is_empty() || !strictly_increasing(&self.alphas) {
            return bad("`sweep.alphas` must be a non-empty, strictly increasing list");
        }
        if self.alphas.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return bad("`sweep.alphas` must be positive");
        }
        if !strictly_increasing(&self.localization.radii) || self.localization.radii.iter().any(|r| *r <= 0.0) {
            return bad("`localization.radii` must be positive and strictly increasing");
        }
        if !(self.length > 0.0 && self.mass > 0.0) {
            return bad("`grid.length` and `particle.mass` must be positive");
        }
        if self.modes % 2 == 0 {
            return bad("`field.modes` must be odd (mode 0 plus +/- pairs)");
        }
        if self.safety < 3.0 {
            return bad("`field.safety` must be at least 3");
        }
        Ok(())
    }

    /// Canonical text form; `parse(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        put("grid.n", self.n.to_string());
        put("grid.length", self.length.to_string());
        match &self.potential {
            PotentialSpec::Zero => put("potential.family", "zero".into()),
            PotentialSpec::GaussianWell { depth, width } => {
                put("potential.family", "gaussian-well".into());
                put("potential.depth", depth.to_string());
                put("potential.width", width.to_string());
            }
            PotentialSpec::DoubleWell {
                depth_left,
                depth_right,
                width,
                separation,
            } => {
                put("potential.family", "double-well".into());
                put("potential.depth_left", depth_left.to_string());
                put("potential.depth_right", depth_right.to_string());
                put("potential.width", width.to_string());
                put("potential.separation", separation.to_string());
            }
        }
        match &self.coupling {
            CouplingSpec::Gaussian { amplitude, width } => {
                put("coupling.family", "gaussian".into());
                put("coupling.amplitude", amplitude.to_string());
                put("coupling.width", width.to_string());
            }
            CouplingSpec::CosinePacket {
                amplitude,
                width,
                wavenumber,
            } => {
                put("coupling.family", "cosine-packet".into());
                put("coupling.amplitude", amplitude.to_string());
                put("coupling.width", width.to_string());
                put("coupling.wavenumber", wavenumber.to_string());
            }
        }
        put("particle.mass", self.mass.to_string());
        put("field.modes", self.modes.to_string());
        put("field.safety", self.safety.to_string());
        put("sweep.alphas", list(&self.alphas));
        put("seed", self.seed.to_string());
        if let Some(dir) = &self.output {
            put("output.dir", dir.clone());
        }
        put("solver.gradient_tolerance", self.solver.gradient_tolerance.to_string());
        put("solver.energy_tolerance", self.solver.energy_tolerance.to_string());
        put("solver.max_iterations", self.solver.max_iterations.to_string());
        put("solver.lanczos_tolerance", self.solver.lanczos_tolerance.to_string());
        put("solver.krylov", self.solver.krylov.to_string());
        put("solver.capacity", self.solver.capacity.to_string());
        if !self.localization.radii.is_empty() {
            put("localization.radii", list(&self.localization.radii));
        }
        let field = match self.localization.field {
            FieldMode::Identity => "identity",
            FieldMode::Compressed => "compressed",
        };
        put("localization.field", field.into());
        put("localization.capacity", self.localization.capacity.to_string());
        put("husimi.mode", self.husimi.mode.to_string());
        put("husimi.cells", self.husimi.cells.to_string());
        put("husimi.radius", self.husimi.radius.to_string());
        s
    }

    /// SHA-256 of the canonical form, without the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        hex::encode(Sha256::digest(c.serialize().as_bytes()))
    }
}
