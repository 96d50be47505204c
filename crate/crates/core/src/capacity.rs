//! Instantaneous and ergodic capacity, the Jensen upper bound and the
//! per-term moment diagnostics behind it.
//!
//! Monte Carlo estimators index one [`RngStream`] per trial and reduce the
//! per-trial values in trial order, so estimates are bit-identical for any
//! thread count.

use rayon::prelude::*;

use crate::beamform::{BeamPair, ObjectiveTerms};
use crate::channel::{
    combine, derive_link_params, effective_row, sample_nlos, ChannelRealization, LinkParams,
    LosComponents, SystemConfig,
};
use crate::error::{Error, Result};
use crate::numerics::{RngStream, C64};

/// Monte Carlo mean of a capacity-like quantity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CapacityEstimate {
    pub mean_bps_hz: f64,
    pub std_error: f64,
    pub trials: u64,
    pub master_seed: u64,
}

impl CapacityEstimate {
    /// Mean and standard error, summed in slice order.
    pub fn from_samples(samples: &[f64], master_seed: u64) -> Result<Self> {
        let (mean, std_error) = mean_and_std_error(samples)?;
        Ok(CapacityEstimate {
            mean_bps_hz: mean,
            std_error,
            trials: samples.len() as u64,
            master_seed,
        })
    }
}

fn mean_and_std_error(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::Config("at least one trial is required".into()));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let std_error = if samples.len() > 1 {
        let ss: f64 = samples.iter().map(|x| (x - mean).powi(2)).sum();
        (ss / (n - 1.0)).sqrt() / n.sqrt()
    } else {
        0.0
    };
    Ok((mean, std_error))
}

/// Runs `trial` for every index in `0..trials` on the current rayon pool and
/// returns the results in index order.
pub fn monte_carlo<T, F>(trials: u64, trial: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    if trials == 0 {
        return Err(Error::Config("at least one trial is required".into()));
    }
    (0..trials).into_par_iter().map(trial).collect()
}

/// `log2(1 + gamma0 |(h2^T Phi H1 + lambda g^T) f|^2)` in bits/s/Hz.
pub fn instantaneous_capacity(
    real: &ChannelRealization,
    beams: &BeamPair,
    params: &LinkParams,
) -> Result<f64> {
    let row = effective_row(real, &beams.phi, params.lambda)?;
    let gain = row.dot(&beams.f)?.norm_sqr();
    Ok((params.gamma0 * gain).ln_1p() / std::f64::consts::LN_2)
}

/// Ergodic capacity of fixed beams; trial `t` draws its channel from
/// stream `t` of `master_seed`.
pub fn ergodic_capacity_mc(
    los: &LosComponents,
    config: &SystemConfig,
    beams: &BeamPair,
    trials: u64,
    master_seed: u64,
) -> Result<CapacityEstimate> {
    let params = derive_link_params(config)?;
    ergodic_capacity_with(los, &params, trials, master_seed, |_| Ok(beams.clone()))
}

/// Ergodic capacity where the beams may depend on the trial index (for
/// schemes that redraw their beams every trial).
pub fn ergodic_capacity_with<B>(
    los: &LosComponents,
    params: &LinkParams,
    trials: u64,
    master_seed: u64,
    beams_for_trial: B,
) -> Result<CapacityEstimate>
where
    B: Fn(u64) -> Result<BeamPair> + Sync + Send,
{
    let samples = monte_carlo(trials, |t| {
        let mut stream = RngStream::new(master_seed, t);
        let nlos = sample_nlos(los.m(), los.n(), &mut stream)?;
        let real = combine(los, params, &nlos)?;
        instantaneous_capacity(&real, &beams_for_trial(t)?, params)
    })?;
    CapacityEstimate::from_samples(&samples, master_seed)
}

/// Argument of the upper bound's logarithm before scaling by `gamma0`:
/// `|x1|^2 + b2^2 a1^2 ||H1_bar f||^2 + (a2^2 + b2^2) b1^2 N + lambda^2 b0^2`.
pub fn upper_bound_argument(los: &LosComponents, params: &LinkParams, beams: &BeamPair) -> Result<f64> {
    let terms = ObjectiveTerms::compute(los, &beams.phi, &beams.f)?;
    let [_, a1, a2] = params.a;
    let [b0, b1, b2] = params.b;
    let n = los.n() as f64;
    let lambda = params.lambda;
    Ok(terms.coherent(params).norm_sqr()
        + b2 * b2 * a1 * a1 * terms.scatter
        + (a2 * a2 + b2 * b2) * b1 * b1 * n
        + lambda * lambda * b0 * b0)
}

/// Jensen upper bound on the ergodic capacity, bits/s/Hz.
pub fn capacity_upper_bound(los: &LosComponents, params: &LinkParams, beams: &BeamPair) -> Result<f64> {
    let arg = upper_bound_argument(los, params, beams)?;
    Ok(log2_1p(params.gamma0 * arg))
}

/// Upper bound at the closed-form Rayleigh-case beams.
pub fn rayleigh_upper_bound_closed(params: &LinkParams, m: usize, n: usize) -> Result<f64> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidDimension(format!(
            "M and N must be positive (M={m}, N={n})"
        )));
    }
    let [_, a1, a2] = params.a;
    let [_, b1, b2] = params.b;
    let (m, n) = (m as f64, n as f64);
    let lambda = params.lambda;
    let arg = a2 * a2 * a1 * a1 * m * n * n
        + b2 * b2 * a1 * a1 * m * n
        + (a2 * a2 + b2 * b2) * b1 * b1 * n
        + lambda * lambda;
    Ok(log2_1p(params.gamma0 * arg))
}

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

/// Empirical second moment of one random term next to its analytic value.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentEstimate {
    pub label: &'static str,
    pub empirical: f64,
    pub std_error: f64,
    pub analytic: f64,
}

impl MomentEstimate {
    /// Distance from the analytic value in standard errors.
    pub fn z_score(&self) -> f64 {
        let d = (self.empirical - self.analytic).abs();
        if self.std_error == 0.0 {
            if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            d / self.std_error
        }
    }
}

/// Empirical `E{x_i x_j^*}` for a pair of random terms.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossMoment {
    pub first: &'static str,
    pub second: &'static str,
    pub value: C64,
    pub std_error: f64,
}

impl CrossMoment {
    pub fn magnitude(&self) -> f64 {
        self.value.norm()
    }
}

/// Decomposition of the composite channel gain into the deterministic term
/// `x1` and the zero-mean terms `x2..x5`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentReport {
    pub x1_sq: f64,
    /// `x2, x3, x4, x5` in order.
    pub moments: Vec<MomentEstimate>,
    pub cross_terms: Vec<CrossMoment>,
    pub trials: u64,
    pub master_seed: u64,
}

impl MomentReport {
    pub fn max_cross_magnitude(&self) -> f64 {
        self.cross_terms
            .iter()
            .map(CrossMoment::magnitude)
            .fold(0.0, f64::max)
    }

    /// `|x1|^2` plus the analytic second moments; equals
    /// [`upper_bound_argument`] for the same beams.
    pub fn analytic_total(&self) -> f64 {
        self.x1_sq + self.moments.iter().map(|m| m.analytic).sum::<f64>()
    }

    pub fn empirical_total(&self) -> f64 {
        self.x1_sq + self.moments.iter().map(|m| m.empirical).sum::<f64>()
    }
}

const TERM_LABELS: [&str; 4] = ["x2", "x3", "x4", "x5"];

/// Monte Carlo second and cross moments of `x2..x5`, trial `t` using the
/// same channel stream as [`ergodic_capacity_mc`].
pub fn appendix_moments(
    los: &LosComponents,
    config: &SystemConfig,
    beams: &BeamPair,
    trials: u64,
    master_seed: u64,
) -> Result<MomentReport> {
    let params = derive_link_params(config)?;
    let [_, a1, a2] = params.a;
    let [b0, b1, b2] = params.b;
    let lambda = params.lambda;
    let (m, n) = (los.m(), los.n());

    let terms = ObjectiveTerms::compute(los, &beams.phi, &beams.f)?;
    let h2_bar_phi = los.h2_bar.hadamard(&beams.phi)?;
    let h1_bar_f = los.h1_bar_times(&beams.f)?;

    let draws = monte_carlo(trials, |t| {
        let mut stream = RngStream::new(master_seed, t);
        let nlos = sample_nlos(m, n, &mut stream)?;
        let h1_tilde_f = nlos.h1.mul_vec(&beams.f)?;
        let h2_tilde_phi = nlos.h2.hadamard(&beams.phi)?;
        Ok([
            h2_bar_phi.dot(&h1_tilde_f)? * (a2 * b1),
            h2_tilde_phi.dot(&h1_bar_f)? * (b2 * a1),
            h2_tilde_phi.dot(&h1_tilde_f)? * (b2 * b1),
            nlos.g.dot(&beams.f)? * (lambda * b0),
        ])
    })?;

    let nf = n as f64;
    let analytic = [
        a2 * a2 * b1 * b1 * nf,
        b2 * b2 * a1 * a1 * terms.scatter,
        b2 * b2 * b1 * b1 * nf,
        lambda * lambda * b0 * b0,
    ];
    let mut moments = Vec::with_capacity(4);
    for (k, label) in TERM_LABELS.iter().enumerate() {
        let sq: Vec<f64> = draws.iter().map(|x| x[k].norm_sqr()).collect();
        let (empirical, std_error) = mean_and_std_error(&sq)?;
        moments.push(MomentEstimate {
            label,
            empirical,
            std_error,
            analytic: analytic[k],
        });
    }

    let mut cross_terms = Vec::with_capacity(6);
    for i in 0..4 {
        for j in i + 1..4 {
            let prods: Vec<C64> = draws.iter().map(|x| x[i] * x[j].conj()).collect();
            let (value, std_error) = complex_mean_and_std_error(&prods);
            cross_terms.push(CrossMoment {
                first: TERM_LABELS[i],
                second: TERM_LABELS[j],
                value,
                std_error,
            });
        }
    }

    Ok(MomentReport {
        x1_sq: terms.coherent(&params).norm_sqr(),
        moments,
        cross_terms,
        trials,
        master_seed,
    })
}

fn complex_mean_and_std_error(samples: &[C64]) -> (C64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<C64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = samples.iter().map(|z| (z - mean).norm_sqr()).sum();
    (mean, (ss / (n - 1.0)).sqrt() / n.sqrt())
}
