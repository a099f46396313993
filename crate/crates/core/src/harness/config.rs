//! Scenario configuration and its flat `key = value` text format.
//!
//! ```text
//! # comments and blank lines are ignored
//! M = 8
//! eps_max = 0.1:1.0:0.1     # start:stop:step sweep
//! P_T_dbw = 1, 2, 3         # list sweep
//! methods = lrcc, perfect_csi, non_robust
//! ```

use std::fmt;
use std::path::Path;

use crate::estimator::CsiMode;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Lrcc,
    PerfectCsi,
    NonRobust,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Lrcc, Method::PerfectCsi, Method::NonRobust];

    pub fn name(self) -> &'static str {
        match self {
            Method::Lrcc => "lrcc",
            Method::PerfectCsi => "perfect_csi",
            Method::NonRobust => "non_robust",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }
}

/// A scalar that may be swept.
#[derive(Debug, Clone, PartialEq)]
pub enum Param {
    Fixed(f64),
    Sweep(Vec<f64>),
}

impl Param {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Param::Fixed(v) => vec![*v],
            Param::Sweep(v) => v.clone(),
        }
    }

    pub fn is_sweep(&self) -> bool {
        matches!(self, Param::Sweep(_))
    }

    /// The fixed value, or the first sweep point.
    pub fn first(&self) -> f64 {
        match self {
            Param::Fixed(v) => *v,
            Param::Sweep(v) => v.first().copied().unwrap_or(f64::NAN),
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Param::Fixed(v) => write!(f, "{v}"),
            Param::Sweep(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "{}", parts.join(", "))
            }
        }
    }
}

/// Which scalar a sweep runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    EpsMax,
    PtDbw,
    SnrDb,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::EpsMax => "eps_max",
            SweepAxis::PtDbw => "P_T_dbw",
            SweepAxis::SnrDb => "snr_db",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub m: usize,
    pub k: usize,
    pub rho: f64,
    pub l_db: f64,
    pub sigma_s_db: f64,
    pub eps_max: Param,
    pub pt_dbw: Param,
    pub snr_db: Param,
    pub inr_db: f64,
    pub interferer_power_ratio: f64,
    pub snapshots: usize,
    pub trials: usize,
    pub seed: u64,
    pub mode: CsiMode,
    pub methods: Vec<Method>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            m: 8,
            k: 3,
            rho: 2.0,
            l_db: 10.0,
            sigma_s_db: 3.0,
            eps_max: Param::Fixed(0.5),
            pt_dbw: Param::Fixed(1.0),
            snr_db: Param::Fixed(10.0),
            inr_db: 10.0,
            interferer_power_ratio: 1.0,
            snapshots: 100,
            trials: 200,
            seed: 1,
            mode: CsiMode::Instantaneous,
            methods: Method::ALL.to_vec(),
        }
    }
}

pub const KEYS: [&str; 15] = [
    "M",
    "K",
    "rho",
    "L_db",
    "sigma_s_db",
    "eps_max",
    "P_T_dbw",
    "snr_db",
    "inr_db",
    "interferer_power_ratio",
    "snapshots",
    "trials",
    "seed",
    "mode",
    "methods",
];

impl ScenarioConfig {
    /// The swept axis, if any.
    pub fn sweep_axis(&self) -> Option<SweepAxis> {
        [
            (SweepAxis::EpsMax, &self.eps_max),
            (SweepAxis::PtDbw, &self.pt_dbw),
            (SweepAxis::SnrDb, &self.snr_db),
        ]
        .into_iter()
        .find(|(_, p)| p.is_sweep())
        .map(|(axis, _)| axis)
    }

    pub fn param(&self, axis: SweepAxis) -> &Param {
        match axis {
            SweepAxis::EpsMax => &self.eps_max,
            SweepAxis::PtDbw => &self.pt_dbw,
            SweepAxis::SnrDb => &self.snr_db,
        }
    }

    pub fn has_method(&self, method: Method) -> bool {
        self.methods.contains(&method)
    }

    /// Every violated constraint, one message per field.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        let sweeps: Vec<&str> = [
            ("eps_max", &self.eps_max),
            ("P_T_dbw", &self.pt_dbw),
            ("snr_db", &self.snr_db),
        ]
        .into_iter()
        .filter(|(_, p)| p.is_sweep())
        .map(|(n, _)| n)
        .collect();
        if sweeps.len() > 1 {
            errors.push(format!("only one field may be swept, got {}", sweeps.join(", ")));
        }
        if self.m < 2 {
            errors.push(format!("M: need at least 2 relays, got {}", self.m));
        }
        if self.k < 1 {
            errors.push("K: need at least 1 source".to_string());
        }
        if self.trials < 1 {
            errors.push("trials: must be at least 1".to_string());
        }
        if self.snapshots < 1 {
            errors.push("snapshots: must be at least 1".to_string());
        }
        if !(self.rho > 0.0) {
            errors.push(format!("rho: must be positive, got {}", self.rho));
        }
        if !(self.sigma_s_db >= 0.0) {
            errors.push(format!("sigma_s_db: must be non-negative, got {}", self.sigma_s_db));
        }
        if !(self.interferer_power_ratio > 0.0) {
            errors.push(format!(
                "interferer_power_ratio: must be positive, got {}",
                self.interferer_power_ratio
            ));
        }
        for (name, p) in [("eps_max", &self.eps_max), ("P_T_dbw", &self.pt_dbw), ("snr_db", &self.snr_db)] {
            let values = p.values();
            if values.is_empty() {
                errors.push(format!("{name}: empty sweep"));
            }
            if values.iter().any(|v| !v.is_finite()) {
                errors.push(format!("{name}: non-finite value"));
            }
        }
        if self.eps_max.values().iter().any(|&e| !(e > 0.0)) {
            errors.push(format!("eps_max: every value must be positive, got {}", self.eps_max));
        }
        if self.methods.is_empty() {
            errors.push("methods: at least one method is required".to_string());
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }

    pub fn from_file(path: &Path, base: ScenarioConfig) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string(), base)
    }

    /// Applies the keys found in `text` on top of `base`. Unknown or
    /// repeated keys are parse errors; the result is validated.
    pub fn parse(text: &str, origin: &str, base: ScenarioConfig) -> Result<Self> {
        let mut cfg = base;
        let mut seen: Vec<&str> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |message: String| Error::Parse {
                path: origin.to_string(),
                line: line_no,
                message,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(err(format!("expected `key = value`, got `{line}`")));
            };
            let (key, value) = (key.trim(), value.trim());
            let Some(&known) = KEYS.iter().find(|k| **k == key) else {
                return Err(err(format!("unknown key `{key}`")));
            };
            if seen.contains(&known) {
                return Err(err(format!("key `{key}` given twice")));
            }
            seen.push(known);
            cfg.set(known, value).map_err(err)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "M" => self.m = parse_int(value)?,
            "K" => self.k = parse_int(value)?,
            "rho" => self.rho = parse_real(value)?,
            "L_db" => self.l_db = parse_real(value)?,
            "sigma_s_db" => self.sigma_s_db = parse_real(value)?,
            "eps_max" => self.eps_max = parse_param(value)?,
            "P_T_dbw" => self.pt_dbw = parse_param(value)?,
            "snr_db" => self.snr_db = parse_param(value)?,
            "inr_db" => self.inr_db = parse_real(value)?,
            "interferer_power_ratio" => self.interferer_power_ratio = parse_real(value)?,
            "snapshots" => self.snapshots = parse_int(value)?,
            "trials" => self.trials = parse_int(value)?,
            "seed" => self.seed = value.parse().map_err(|_| format!("invalid seed `{value}`"))?,
            "mode" => {
                self.mode = match value {
                    "instantaneous" => CsiMode::Instantaneous,
                    "statistics" => CsiMode::Statistics,
                    _ => return Err(format!("mode must be `instantaneous` or `statistics`, got `{value}`")),
                }
            }
            "methods" => {
                let mut methods = Vec::new();
                for name in value.split(',').map(str::trim) {
                    let m = Method::from_name(name).ok_or_else(|| format!("unknown method `{name}`"))?;
                    if !methods.contains(&m) {
                        methods.push(m);
                    }
                }
                self.methods = methods;
            }
            _ => unreachable!("key list and setter agree"),
        }
        Ok(())
    }

    /// Serializes back to the text format; `parse` of the result reproduces
    /// `self`.
    pub fn to_text(&self) -> String {
        let mode = match self.mode {
            CsiMode::Instantaneous => "instantaneous",
            CsiMode::Statistics => "statistics",
        };
        let methods: Vec<&str> = self.methods.iter().map(|m| m.name()).collect();
        let values = [
            self.m.to_string(),
            self.k.to_string(),
            self.rho.to_string(),
            self.l_db.to_string(),
            self.sigma_s_db.to_string(),
            self.eps_max.to_string(),
            self.pt_dbw.to_string(),
            self.snr_db.to_string(),
            self.inr_db.to_string(),
            self.interferer_power_ratio.to_string(),
            self.snapshots.to_string(),
            self.trials.to_string(),
            self.seed.to_string(),
            mode.to_string(),
            methods.join(", "),
        ];
        KEYS.iter()
            .zip(values)
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

fn parse_real(value: &str) -> std::result::Result<f64, String> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("expected a finite number, got `{value}`"))
}

fn parse_int(value: &str) -> std::result::Result<usize, String> {
    value
        .parse()
        .map_err(|_| format!("expected a non-negative integer, got `{value}`"))
}

/// `x`, `a, b, c` or `start:stop:step` (inclusive of `stop` up to rounding).
fn parse_param(value: &str) -> std::result::Result<Param, String> {
    if value.contains(':') {
        let parts: Vec<&str> = value.split(':').map(str::trim).collect();
        let [start, stop, step] = parts.as_slice() else {
            return Err(format!("range must be `start:stop:step`, got `{value}`"));
        };
        let (start, stop, step) = (parse_real(start)?, parse_real(stop)?, parse_real(step)?);
        if !(step > 0.0) || stop < start {
            return Err(format!("range `{value}` needs step > 0 and stop >= start"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        // Round to 12 significant decimals so 0.1 steps print cleanly.
        let values = (0..count)
            .map(|i| {
                let v = start + i as f64 * step;
                (v * 1e12).round() / 1e12
            })
            .collect();
        return Ok(Param::Sweep(values));
    }
    if value.contains(',') {
        let values = value
            .split(',')
            .map(|v| parse_real(v.trim()))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        return Ok(Param::Sweep(values));
    }
    Ok(Param::Fixed(parse_real(value)?))
}
