//! Scenario pipelines and CSV output.
//!
//! Every sweep point designs its beams, evaluates them by Monte Carlo with
//! the scenario seed (common random numbers across schemes) and emits one
//! row per scheme. Rows come back in sweep order.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::beamform::{
    alternating_optimize, optimal_f_given_phase, random_phase_baseline, rayleigh_optimal_beams,
    BeamPair, OptimizationTrace,
};
use crate::capacity::{
    appendix_moments, capacity_upper_bound, ergodic_capacity_with, rayleigh_upper_bound_closed,
    CapacityEstimate,
};
use crate::channel::{derive_link_params, los_components, LinkParams, LosComponents, SystemConfig};
use crate::error::{Error, Result};
use crate::numerics::{domain, RngStream};
use crate::scenario::{fmt_f64, Scenario, ScenarioKind};

pub const CSV_COLUMNS: [&str; 7] = [
    "sweep_value",
    "scheme",
    "capacity_bps_hz",
    "std_error",
    "bound_bps_hz",
    "iterations",
    "seed",
];

/// One CSV line. Empty fields are `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub sweep_value: Option<f64>,
    pub scheme: String,
    pub capacity_bps_hz: Option<f64>,
    pub std_error: Option<f64>,
    pub bound_bps_hz: Option<f64>,
    pub iterations: Option<usize>,
    pub seed: u64,
}

impl ResultRow {
    fn new(sweep_value: Option<f64>, scheme: &str, seed: u64) -> Self {
        ResultRow {
            sweep_value,
            scheme: scheme.to_string(),
            capacity_bps_hz: None,
            std_error: None,
            bound_bps_hz: None,
            iterations: None,
            seed,
        }
    }

    fn with_estimate(mut self, est: &CapacityEstimate) -> Self {
        self.capacity_bps_hz = Some(est.mean_bps_hz);
        self.std_error = Some(est.std_error);
        self
    }

    fn with_bound(mut self, bound: f64) -> Self {
        self.bound_bps_hz = Some(bound);
        self
    }

    fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = Some(iterations);
        self
    }

    pub fn to_csv_line(&self) -> String {
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{}",
            opt(self.sweep_value),
            self.scheme,
            opt(self.capacity_bps_hz),
            opt(self.std_error),
            opt(self.bound_bps_hz),
            self.iterations.map(|i| i.to_string()).unwrap_or_default(),
            self.seed
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub rows: Vec<ResultRow>,
    /// One human-readable line per sweep point.
    pub summaries: Vec<String>,
}

/// Runs every sweep point of `scenario` on the current rayon pool.
pub fn run_scenario(scenario: &Scenario) -> Result<RunOutput> {
    let mut out = RunOutput {
        rows: Vec::new(),
        summaries: Vec::new(),
    };
    for (value, config) in scenario.points() {
        let label = point_label(scenario, value);
        let rows = run_point(scenario, value, &config).map_err(|e| Error::Scenario {
            context: format!("{} scenario at {label}", scenario.kind),
            source: Box::new(e),
        })?;
        out.summaries.push(summarize(&label, &rows));
        out.rows.extend(rows);
    }
    Ok(out)
}

fn point_label(scenario: &Scenario, value: Option<f64>) -> String {
    match (&scenario.sweep, value) {
        (Some(s), Some(v)) => format!("{}={}", s.variable.name(), fmt_f64(v)),
        _ => "base point".into(),
    }
}

fn summarize(label: &str, rows: &[ResultRow]) -> String {
    let mut s = format!("{label}:");
    for r in rows {
        let _ = write!(s, " {}", r.scheme);
        if let (Some(c), Some(e)) = (r.capacity_bps_hz, r.std_error) {
            let _ = write!(s, " {c:.4}±{e:.4}");
        }
        if let Some(b) = r.bound_bps_hz {
            let _ = write!(s, " (bound {b:.4})");
        }
        if let Some(i) = r.iterations {
            let _ = write!(s, " [it {i}]");
        }
        s.push(';');
    }
    s.pop();
    s
}

fn run_point(scenario: &Scenario, value: Option<f64>, config: &SystemConfig) -> Result<Vec<ResultRow>> {
    let seed = scenario.seed;
    let trials = scenario.trials;
    let los = los_components(&config.angles, config.m, config.n)?;
    let params = derive_link_params(config)?;
    let row = |scheme: &str| ResultRow::new(value, scheme, seed);

    let rows = match scenario.kind {
        ScenarioKind::BoundCheck => {
            let (beams, trace) = rician_design(scenario, &los, &params)?;
            let est = fixed_beams_capacity(&los, &params, &beams, trials, seed)?;
            vec![row("proposed")
                .with_estimate(&est)
                .with_bound(capacity_upper_bound(&los, &params, &beams)?)
                .with_iterations(trace.iterations)]
        }
        ScenarioKind::Converge => {
            let (_, trace) = rician_design(scenario, &los, &params)?;
            // Upper bound after each half-step; a monotone map of the objective.
            let offset = upper_bound_offset(&los, &params);
            trace
                .objective_values
                .iter()
                .enumerate()
                .map(|(k, obj)| {
                    row("algorithm1")
                        .with_bound((params.gamma0 * (obj + offset)).ln_1p() / std::f64::consts::LN_2)
                        .with_iterations(k)
                })
                .collect()
        }
        ScenarioKind::CompareRician => {
            let (beams, trace) = rician_design(scenario, &los, &params)?;
            let est = fixed_beams_capacity(&los, &params, &beams, trials, seed)?;
            let random = random_scheme_capacity(&los, &params, trials, seed)?;
            vec![
                row("proposed")
                    .with_estimate(&est)
                    .with_bound(capacity_upper_bound(&los, &params, &beams)?)
                    .with_iterations(trace.iterations),
                row("random").with_estimate(&random),
            ]
        }
        ScenarioKind::CompareRayleigh => {
            let params = params.with_rayleigh_direct();
            let beams = rayleigh_optimal_beams(&config.angles, config.m, config.n)?;
            let est = fixed_beams_capacity(&los, &params, &beams, trials, seed)?;
            let random = random_scheme_capacity(&los, &params, trials, seed)?;
            vec![
                row("proposed")
                    .with_estimate(&est)
                    .with_bound(rayleigh_upper_bound_closed(&params, config.m, config.n)?),
                row("random").with_estimate(&random),
            ]
        }
        ScenarioKind::FadingCompare | ScenarioKind::PowerSweep => {
            let (rician_beams, trace) = rician_design(scenario, &los, &params)?;
            let rician = fixed_beams_capacity(&los, &params, &rician_beams, trials, seed)?;
            let rayleigh_params = params.with_rayleigh_direct();
            let rayleigh_beams = rayleigh_optimal_beams(&config.angles, config.m, config.n)?;
            let rayleigh =
                fixed_beams_capacity(&los, &rayleigh_params, &rayleigh_beams, trials, seed)?;
            vec![
                row("rician")
                    .with_estimate(&rician)
                    .with_bound(capacity_upper_bound(&los, &params, &rician_beams)?)
                    .with_iterations(trace.iterations),
                row("rayleigh")
                    .with_estimate(&rayleigh)
                    .with_bound(rayleigh_upper_bound_closed(&rayleigh_params, config.m, config.n)?),
            ]
        }
        ScenarioKind::Moments => {
            let (beams, _) = rician_design(scenario, &los, &params)?;
            let report = appendix_moments(&los, config, &beams, trials, seed)?;
            report
                .moments
                .iter()
                .map(|m| {
                    let mut r = row(m.label);
                    r.capacity_bps_hz = Some(m.empirical);
                    r.std_error = Some(m.std_error);
                    r.bound_bps_hz = Some(m.analytic);
                    r
                })
                .collect()
        }
    };
    Ok(rows)
}

/// Alternating-optimizer beams for the scenario's initialization.
pub fn rician_design(
    scenario: &Scenario,
    los: &LosComponents,
    params: &LinkParams,
) -> Result<(BeamPair, OptimizationTrace)> {
    let init = scenario.init.beams(los.m(), los.n())?;
    alternating_optimize(los, params, &init, scenario.epsilon, scenario.max_iter)
}

/// Beam-independent part of the upper bound's argument.
fn upper_bound_offset(los: &LosComponents, params: &LinkParams) -> f64 {
    let [b0, b1, b2] = params.b;
    let a2 = params.a[2];
    (a2 * a2 + b2 * b2) * b1 * b1 * los.n() as f64 + params.lambda * params.lambda * b0 * b0
}

fn fixed_beams_capacity(
    los: &LosComponents,
    params: &LinkParams,
    beams: &BeamPair,
    trials: u64,
    seed: u64,
) -> Result<CapacityEstimate> {
    ergodic_capacity_with(los, params, trials, seed, |_| Ok(beams.clone()))
}

/// Random-phase benchmark: fresh uniform IRS phases every trial, with the
/// statistically optimal transmit beam for those phases.
pub fn random_scheme_capacity(
    los: &LosComponents,
    params: &LinkParams,
    trials: u64,
    seed: u64,
) -> Result<CapacityEstimate> {
    ergodic_capacity_with(los, params, trials, seed, |t| {
        let mut stream = RngStream::with_domain(seed, domain::BASELINE, t);
        let phi = random_phase_baseline(los.n(), &mut stream)?;
        let f = optimal_f_given_phase(los, params, &phi)?;
        Ok(BeamPair { phi, f })
    })
}

/// CSV text: `#` header lines with the resolved scenario, then the column
/// row and one line per result.
pub fn render_csv(scenario: &Scenario, rows: &[ResultRow]) -> String {
    let mut out = String::new();
    out.push_str("# irsbeam results\n");
    for line in scenario.to_canonical_string().lines() {
        if line.starts_with("output =") {
            continue;
        }
        let _ = writeln!(out, "# {line}");
    }
    out.push_str(&CSV_COLUMNS.join(","));
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv_line());
        out.push('\n');
    }
    out
}

pub fn write_csv(path: &Path, scenario: &Scenario, rows: &[ResultRow]) -> Result<()> {
    let text = render_csv(scenario, rows);
    let mut file = std::fs::File::create(path).map_err(|source| Error::Io {
        context: format!("creating {}", path.display()),
        source,
    })?;
    file.write_all(text.as_bytes()).map_err(|source| Error::Io {
        context: format!("writing {}", path.display()),
        source,
    })
}
