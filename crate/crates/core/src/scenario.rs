//! Experiment descriptions in a flat `key = value` format.
//!
//! One statement per line, or several separated by `;`. `#` starts a comment.
//! String values may be quoted. Unspecified keys take the reference
//! scenario's defaults; see `scenarios/SCHEMA.md` for the full key list.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::beamform::{BeamPair, DEFAULT_EPSILON, DEFAULT_MAX_ITER};
use crate::channel::{AngleSet, SystemConfig};
use crate::error::{Error, Result};

pub const DEFAULT_TRIALS: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioKind {
    BoundCheck,
    Converge,
    CompareRician,
    CompareRayleigh,
    FadingCompare,
    PowerSweep,
    Moments,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 7] = [
        ScenarioKind::BoundCheck,
        ScenarioKind::Converge,
        ScenarioKind::CompareRician,
        ScenarioKind::CompareRayleigh,
        ScenarioKind::FadingCompare,
        ScenarioKind::PowerSweep,
        ScenarioKind::Moments,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::BoundCheck => "bound-check",
            ScenarioKind::Converge => "converge",
            ScenarioKind::CompareRician => "compare-rician",
            ScenarioKind::CompareRayleigh => "compare-rayleigh",
            ScenarioKind::FadingCompare => "fading-compare",
            ScenarioKind::PowerSweep => "power-sweep",
            ScenarioKind::Moments => "moments",
        }
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = ScenarioKind::ALL.iter().map(|k| k.name()).collect();
                format!("unknown kind `{s}`, expected one of {}", names.join(", "))
            })
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepVariable {
    N,
    M,
    PDbm,
    /// Sets `K0 = K1 = K2`.
    K,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::N => "N",
            SweepVariable::M => "M",
            SweepVariable::PDbm => "P_dbm",
            SweepVariable::K => "K",
        }
    }

    fn parse(s: &str) -> std::result::Result<Self, String> {
        match s {
            "N" => Ok(SweepVariable::N),
            "M" => Ok(SweepVariable::M),
            "P_dbm" => Ok(SweepVariable::PDbm),
            "K" => Ok(SweepVariable::K),
            other => Err(format!(
                "unknown sweep variable `{other}`, expected one of N, M, P_dbm, K"
            )),
        }
    }

    fn check_value(self, v: f64) -> std::result::Result<(), String> {
        match self {
            SweepVariable::N | SweepVariable::M => {
                if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                    Ok(())
                } else {
                    Err(format!("{} values must be positive integers, got {v}", self.name()))
                }
            }
            SweepVariable::PDbm => {
                if v.is_finite() {
                    Ok(())
                } else {
                    Err(format!("P_dbm values must be finite, got {v}"))
                }
            }
            SweepVariable::K => {
                if v >= 0.0 {
                    Ok(())
                } else {
                    Err(format!("K values must be >= 0, got {v}"))
                }
            }
        }
    }

    /// Copy of `config` with this variable set to `value`.
    pub fn apply(self, config: &SystemConfig, value: f64) -> SystemConfig {
        let mut c = config.clone();
        match self {
            SweepVariable::N => c.n = value as usize,
            SweepVariable::M => c.m = value as usize,
            SweepVariable::PDbm => c.p_dbm = value,
            SweepVariable::K => c.k_factors = [value; 3],
        }
        c
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

/// Starting point of the alternating optimizer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitStrategy {
    /// All-ones phases, `f = 1/sqrt(M)`.
    Uniform,
    /// Random feasible pair from the given seed.
    Random(u64),
}

impl InitStrategy {
    pub fn beams(self, m: usize, n: usize) -> Result<BeamPair> {
        match self {
            InitStrategy::Uniform => Ok(BeamPair::uniform(m, n)),
            InitStrategy::Random(seed) => BeamPair::random(m, n, seed),
        }
    }
}

/// A fully-populated experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    /// Base configuration. Its `angles` are placeholders: use
    /// [`Scenario::resolved_config`].
    pub config: SystemConfig,
    /// `theta_aoa_1, theta_aod_1, theta_aod_2, theta_aod_0` overrides; the
    /// rest are drawn once from the seed.
    pub angle_overrides: [Option<f64>; 4],
    pub sweep: Option<Sweep>,
    pub trials: u64,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub epsilon: f64,
    pub max_iter: usize,
    pub init: InitStrategy,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            kind: ScenarioKind::BoundCheck,
            config: SystemConfig::default(),
            angle_overrides: [None; 4],
            sweep: None,
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            output_path: None,
            epsilon: DEFAULT_EPSILON,
            max_iter: DEFAULT_MAX_ITER,
            init: InitStrategy::Uniform,
        }
    }
}

const ANGLE_KEYS: [&str; 4] = ["theta_aoa_1", "theta_aod_1", "theta_aod_2", "theta_aod_0"];

impl Scenario {
    /// LoS angles: one uniform draw per seed, shared by every sweep point,
    /// with explicit overrides applied.
    pub fn angles(&self) -> AngleSet {
        let drawn = AngleSet::random(self.seed);
        let pick = |i: usize, d: f64| self.angle_overrides[i].unwrap_or(d);
        AngleSet::new(
            pick(0, drawn.theta_aoa_1),
            pick(1, drawn.theta_aod_1),
            pick(2, drawn.theta_aod_2),
            pick(3, drawn.theta_aod_0),
        )
    }

    pub fn resolved_config(&self) -> SystemConfig {
        SystemConfig {
            angles: self.angles(),
            ..self.config.clone()
        }
    }

    /// `(sweep value, config)` per point; a single unlabeled point when no
    /// sweep is configured.
    pub fn points(&self) -> Vec<(Option<f64>, SystemConfig)> {
        let base = self.resolved_config();
        match &self.sweep {
            Some(s) => s
                .values
                .iter()
                .map(|&v| (Some(v), s.variable.apply(&base, v)))
                .collect(),
            None => vec![(None, base)],
        }
    }

    /// Every setting as `key = value` lines, in a fixed order. Parsing the
    /// output yields an equal scenario.
    pub fn to_canonical_string(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        line("kind", self.kind.name().into());
        line("M", c.m.to_string());
        line("N", c.n.to_string());
        line("P_dbm", fmt_f64(c.p_dbm));
        line("noise_psd_dbm_hz", fmt_f64(c.noise_psd_dbm_hz));
        line("bandwidth_hz", fmt_f64(c.bandwidth_hz));
        for i in 0..3 {
            line(&format!("d{i}"), fmt_f64(c.distances[i]));
        }
        for i in 0..3 {
            line(&format!("alpha{i}"), fmt_f64(c.exponents[i]));
        }
        for i in 0..3 {
            line(&format!("K{i}"), fmt_f64(c.k_factors[i]));
        }
        for (key, value) in ANGLE_KEYS.iter().zip(self.angle_overrides) {
            if let Some(v) = value {
                line(key, fmt_f64(v));
            }
        }
        if let Some(s) = &self.sweep {
            line("sweep", s.variable.name().into());
            let values: Vec<String> = s.values.iter().map(|v| fmt_f64(*v)).collect();
            line("values", values.join(","));
        }
        line("trials", self.trials.to_string());
        line("seed", self.seed.to_string());
        line("epsilon", fmt_f64(self.epsilon));
        line("max_iter", self.max_iter.to_string());
        match self.init {
            InitStrategy::Uniform => line("init", "uniform".into()),
            InitStrategy::Random(seed) => {
                line("init", "random".into());
                line("init_seed", seed.to_string());
            }
        }
        if let Some(p) = &self.output_path {
            line("output", format!("\"{}\"", p.display()));
        }
        out
    }
}

/// Shortest round-trip decimal form; `inf` for infinity.
pub fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

pub fn parse_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        context: format!("reading scenario {}", path.display()),
        source,
    })?;
    parse_scenario_str(&text)
}

struct Statement<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

pub fn parse_scenario_str(text: &str) -> Result<Scenario> {
    let mut statements: Vec<Statement> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = strip_comment(raw);
        for part in content.split(';') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (key, value) = part.split_once('=').ok_or_else(|| Error::Parse {
                line,
                key: part.to_string(),
                message: "expected `key = value`".into(),
            })?;
            let key = key.trim();
            let value = unquote(value.trim());
            if key.is_empty() {
                return Err(Error::Parse {
                    line,
                    key: String::new(),
                    message: "empty key".into(),
                });
            }
            if let Some(prev) = statements.iter().find(|s| s.key == key) {
                return Err(Error::Parse {
                    line,
                    key: key.into(),
                    message: format!("duplicate key (first set on line {})", prev.line),
                });
            }
            statements.push(Statement { line, key, value });
        }
    }

    let mut s = Scenario::default();
    let mut sweep_var: Option<(usize, SweepVariable)> = None;
    let mut sweep_values: Option<(usize, Vec<f64>)> = None;
    let mut init_kind: Option<(usize, &str)> = None;
    let mut init_seed: Option<(usize, u64)> = None;

    // The joint K applies before per-link overrides regardless of order.
    if let Some(st) = statements.iter().find(|st| st.key == "K") {
        s.config.k_factors = [parse_k(st)?; 3];
    }

    for st in &statements {
        let cfg = &mut s.config;
        match st.key {
            "kind" => s.kind = st.value.parse().map_err(|m| err(st, m))?,
            "M" => cfg.m = parse_count(st)? as usize,
            "N" => cfg.n = parse_count(st)? as usize,
            "P_dbm" => cfg.p_dbm = parse_finite(st)?,
            "noise_psd_dbm_hz" => cfg.noise_psd_dbm_hz = parse_finite(st)?,
            "bandwidth_hz" => cfg.bandwidth_hz = parse_positive(st)?,
            "d0" => cfg.distances[0] = parse_positive(st)?,
            "d1" => cfg.distances[1] = parse_positive(st)?,
            "d2" => cfg.distances[2] = parse_positive(st)?,
            "alpha0" => cfg.exponents[0] = parse_positive(st)?,
            "alpha1" => cfg.exponents[1] = parse_positive(st)?,
            "alpha2" => cfg.exponents[2] = parse_positive(st)?,
            "K" => {}
            "K0" => cfg.k_factors[0] = parse_k(st)?,
            "K1" => cfg.k_factors[1] = parse_k(st)?,
            "K2" => cfg.k_factors[2] = parse_k(st)?,
            "theta_aoa_1" => s.angle_overrides[0] = Some(parse_finite(st)?),
            "theta_aod_1" => s.angle_overrides[1] = Some(parse_finite(st)?),
            "theta_aod_2" => s.angle_overrides[2] = Some(parse_finite(st)?),
            "theta_aod_0" => s.angle_overrides[3] = Some(parse_finite(st)?),
            "sweep" => {
                sweep_var = Some((st.line, SweepVariable::parse(st.value).map_err(|m| err(st, m))?))
            }
            "values" => sweep_values = Some((st.line, parse_list(st)?)),
            "trials" => s.trials = parse_count(st)?,
            "seed" => s.seed = parse_u64(st)?,
            "output" => {
                if st.value.is_empty() {
                    return Err(err(st, "output path is empty"));
                }
                s.output_path = Some(PathBuf::from(st.value));
            }
            "epsilon" => s.epsilon = parse_positive(st)?,
            "max_iter" => s.max_iter = parse_count(st)? as usize,
            "init" => init_kind = Some((st.line, st.value)),
            "init_seed" => init_seed = Some((st.line, parse_u64(st)?)),
            _ => return Err(err(st, "unknown key")),
        }
    }

    match (sweep_var, sweep_values) {
        (Some((_, variable)), Some((line, values))) => {
            for v in &values {
                variable.check_value(*v).map_err(|message| Error::Parse {
                    line,
                    key: "values".into(),
                    message,
                })?;
            }
            s.sweep = Some(Sweep { variable, values });
        }
        (Some((line, _)), None) => {
            return Err(Error::Parse {
                line,
                key: "sweep".into(),
                message: "missing sweep values (add `values = v1,v2,...`)".into(),
            })
        }
        (None, Some((line, _))) => {
            return Err(Error::Parse {
                line,
                key: "values".into(),
                message: "values given without a `sweep` variable".into(),
            })
        }
        (None, None) => {}
    }

    s.init = match init_kind {
        None | Some((_, "uniform")) => {
            if let Some((line, _)) = init_seed {
                return Err(Error::Parse {
                    line,
                    key: "init_seed".into(),
                    message: "init_seed requires `init = random`".into(),
                });
            }
            InitStrategy::Uniform
        }
        Some((_, "random")) => InitStrategy::Random(init_seed.map_or(s.seed, |(_, v)| v)),
        Some((line, other)) => {
            return Err(Error::Parse {
                line,
                key: "init".into(),
                message: format!("expected `uniform` or `random`, got `{other}`"),
            })
        }
    };
    Ok(s)
}

fn strip_comment(line: &str) -> &str {
    // `#` inside a quoted value is kept
    let mut in_quotes = false;
    for (i, ch) in line.char_indices() {
        match ch {
            '"' => in_quotes = !in_quotes,
            '#' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}

fn unquote(v: &str) -> &str {
    v.strip_prefix('"')
        .and_then(|x| x.strip_suffix('"'))
        .unwrap_or(v)
}

fn err(st: &Statement, message: impl Into<String>) -> Error {
    Error::Parse {
        line: st.line,
        key: st.key.to_string(),
        message: message.into(),
    }
}

fn parse_number(st: &Statement, text: &str) -> Result<f64> {
    match text {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        _ => text
            .parse::<f64>()
            .ok()
            .filter(|v| !v.is_nan())
            .ok_or_else(|| err(st, format!("`{text}` is not a number"))),
    }
}

fn parse_finite(st: &Statement) -> Result<f64> {
    let v = parse_number(st, st.value)?;
    if !v.is_finite() {
        return Err(err(st, "value must be finite"));
    }
    Ok(v)
}

fn parse_positive(st: &Statement) -> Result<f64> {
    let v = parse_finite(st)?;
    if v <= 0.0 {
        return Err(err(st, format!("value must be positive, got {v}")));
    }
    Ok(v)
}

fn parse_k(st: &Statement) -> Result<f64> {
    let v = parse_number(st, st.value)?;
    if v < 0.0 {
        return Err(err(st, format!("Rician K-factor must be >= 0, got {v}")));
    }
    Ok(v)
}

fn parse_u64(st: &Statement) -> Result<u64> {
    st.value
        .parse::<u64>()
        .map_err(|_| err(st, format!("`{}` is not a non-negative integer", st.value)))
}

fn parse_count(st: &Statement) -> Result<u64> {
    let v = parse_u64(st)?;
    if v == 0 {
        return Err(err(st, "value must be at least 1"));
    }
    Ok(v)
}

fn parse_list(st: &Statement) -> Result<Vec<f64>> {
    let values = st
        .value
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| parse_number(st, t))
        .collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        return Err(err(st, "sweep value list is empty"));
    }
    Ok(values)
}
