//! Transmit and phase-shift beam designs from statistical CSI.
//!
//! Rician direct link: alternate between the closed-form phase alignment
//! (given `f`) and the dominant right singular vector of the stacked LoS
//! matrix (given `phi`). Rayleigh direct link: the two beams decouple and
//! both have closed forms.

use crate::channel::{check_unit_modulus, AngleSet, LinkParams, LosComponents};
use crate::error::{Error, Result};
use crate::numerics::{
    domain, dominant_right_singular_vector, sample_cn_vector, steering_vector, CMatrix, CVector,
    RngStream, C64,
};

pub const DEFAULT_EPSILON: f64 = 1e-4;
pub const DEFAULT_MAX_ITER: usize = 50;

/// Phase-shift beam `phi` (unit-modulus entries) and transmit beam `f`
/// (unit norm).
#[derive(Clone, Debug, PartialEq)]
pub struct BeamPair {
    pub phi: CVector,
    pub f: CVector,
}

impl BeamPair {
    /// Checks the feasibility constraints before wrapping the beams.
    pub fn new(phi: CVector, f: CVector) -> Result<Self> {
        if phi.is_empty() || f.is_empty() {
            return Err(Error::InvalidDimension("beams must be non-empty".into()));
        }
        check_unit_modulus(&phi)?;
        let norm = f.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "transmit beam must have unit norm, got {norm}"
            )));
        }
        Ok(BeamPair { phi, f })
    }

    /// All-ones `phi` and `f = 1/sqrt(M)`.
    pub fn uniform(m: usize, n: usize) -> Self {
        BeamPair {
            phi: CVector::filled(n, C64::new(1.0, 0.0)),
            f: CVector::filled(m, C64::new(1.0 / (m as f64).sqrt(), 0.0)),
        }
    }

    /// Random feasible pair: uniform phases and an isotropic unit `f`.
    pub fn random(m: usize, n: usize, seed: u64) -> Result<Self> {
        let mut s = RngStream::with_domain(seed, domain::INIT, 0);
        let phi = random_phase_baseline(n, &mut s)?;
        let f = sample_cn_vector(m, &mut s)?.normalized()?;
        Ok(BeamPair { phi, f })
    }

    pub fn m(&self) -> usize {
        self.f.len()
    }

    pub fn n(&self) -> usize {
        self.phi.len()
    }
}

/// Convergence record of [`alternating_optimize`].
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizationTrace {
    /// Objective at the initial pair, then after every half-step
    /// (phase update, transmit update, phase update, ...).
    pub objective_values: Vec<f64>,
    /// Completed full iterations.
    pub iterations: usize,
    pub converged: bool,
    pub epsilon: f64,
}

impl OptimizationTrace {
    pub fn final_objective(&self) -> f64 {
        *self.objective_values.last().expect("trace is never empty")
    }
}

/// The pieces of the upper-bound objective for one beam pair.
#[derive(Clone, Copy, Debug)]
pub struct ObjectiveTerms {
    /// `h2_bar^T diag(phi) h1_bar f`.
    pub irs: C64,
    /// `g_bar^T f`.
    pub direct: C64,
    /// `||h1_bar f||^2`.
    pub scatter: f64,
}

impl ObjectiveTerms {
    pub fn compute(los: &LosComponents, phi: &CVector, f: &CVector) -> Result<Self> {
        check_dims(los, phi, f)?;
        let h1f = los.h1_bar_times(f)?;
        Ok(ObjectiveTerms {
            irs: los.h2_bar.hadamard(phi)?.dot(&h1f)?,
            direct: los.g_bar.dot(f)?,
            scatter: h1f.norm_sqr(),
        })
    }

    /// The deterministic composite term `x1`.
    pub fn coherent(&self, params: &LinkParams) -> C64 {
        let [a0, a1, a2] = params.a;
        self.irs * (a2 * a1) + self.direct * (params.lambda * a0)
    }

    pub fn objective(&self, params: &LinkParams) -> f64 {
        let a1 = params.a[1];
        let b2 = params.b[2];
        self.coherent(params).norm_sqr() + b2 * b2 * a1 * a1 * self.scatter
    }
}

fn check_dims(los: &LosComponents, phi: &CVector, f: &CVector) -> Result<()> {
    if phi.len() != los.n() {
        return Err(Error::shape(
            format!("phase beam of length N={}", los.n()),
            format!("length {}", phi.len()),
        ));
    }
    if f.len() != los.m() {
        return Err(Error::shape(
            format!("transmit beam of length M={}", los.m()),
            format!("length {}", f.len()),
        ));
    }
    Ok(())
}

/// `|(a2 a1 h2_bar^T Phi H1_bar + lambda a0 g_bar^T) f|^2 + b2^2 a1^2 ||H1_bar f||^2`.
pub fn objective_p3(los: &LosComponents, params: &LinkParams, phi: &CVector, f: &CVector) -> Result<f64> {
    Ok(ObjectiveTerms::compute(los, phi, f)?.objective(params))
}

/// Phase beam that co-phases every reflected summand with `g_bar^T f`.
///
/// Elements whose reflected contribution vanishes (to rounding) are
/// unconstrained and get the direct-term phase.
pub fn optimal_phase_given_f(los: &LosComponents, f: &CVector) -> Result<CVector> {
    if f.len() != los.m() {
        return Err(Error::shape(
            format!("transmit beam of length M={}", los.m()),
            format!("length {}", f.len()),
        ));
    }
    let target = los.g_bar.dot(f)?.arg();
    // Entries are products of unit-modulus steering terms and a unit-norm f.
    let zero_tol = 1e-12 * (los.m() as f64).sqrt();
    let per_element = los.h2_bar.hadamard(&los.h1_bar_times(f)?)?;
    Ok(CVector::from_vec(
        per_element
            .iter()
            .map(|u| {
                if u.norm() <= zero_tol {
                    C64::from_polar(1.0, target)
                } else {
                    C64::from_polar(1.0, target - u.arg())
                }
            })
            .collect(),
    ))
}

/// Stacked matrix `[a2 a1 h2_bar^T Phi H1_bar + lambda a0 g_bar^T ; b2 a1 H1_bar]`
/// whose squared gain `||H f||^2` is the objective for fixed `phi`.
pub fn stacked_matrix(los: &LosComponents, params: &LinkParams, phi: &CVector) -> Result<CMatrix> {
    check_unit_modulus(phi)?;
    if phi.len() != los.n() {
        return Err(Error::shape(
            format!("phase beam of length N={}", los.n()),
            format!("length {}", phi.len()),
        ));
    }
    let [a0, a1, a2] = params.a;
    let b2 = params.b[2];
    let (m, n) = (los.m(), los.n());
    let top = los
        .h1_bar
        .left_mul_vec(&los.h2_bar.hadamard(phi)?)?
        .scale_real(a2 * a1)
        .add(&los.g_bar.scale_real(params.lambda * a0))?;
    let mut data = Vec::with_capacity((n + 1) * m);
    data.extend_from_slice(top.as_slice());
    data.extend(los.h1_bar.as_slice().iter().map(|z| z * (b2 * a1)));
    CMatrix::from_vec(n + 1, m, data)
}

pub fn optimal_f_given_phase(los: &LosComponents, params: &LinkParams, phi: &CVector) -> Result<CVector> {
    let h = stacked_matrix(los, params, phi)?;
    dominant_right_singular_vector(&h)
}

/// Alternates the phase update and the transmit update, starting from
/// `init.f`, until the fractional objective increase of a full iteration
/// drops below `epsilon` or `max_iter` iterations have run.
pub fn alternating_optimize(
    los: &LosComponents,
    params: &LinkParams,
    init: &BeamPair,
    epsilon: f64,
    max_iter: usize,
) -> Result<(BeamPair, OptimizationTrace)> {
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    if max_iter == 0 {
        return Err(Error::Config("max_iter must be at least 1".into()));
    }
    let mut pair = BeamPair::new(init.phi.clone(), init.f.clone())?;
    check_dims(los, &pair.phi, &pair.f)?;

    let mut previous = objective_p3(los, params, &pair.phi, &pair.f)?;
    let mut trace = OptimizationTrace {
        objective_values: vec![previous],
        iterations: 0,
        converged: false,
        epsilon,
    };
    for _ in 0..max_iter {
        pair.phi = optimal_phase_given_f(los, &pair.f)?;
        trace
            .objective_values
            .push(objective_p3(los, params, &pair.phi, &pair.f)?);

        pair.f = optimal_f_given_phase(los, params, &pair.phi)?;
        let current = objective_p3(los, params, &pair.phi, &pair.f)?;
        trace.objective_values.push(current);
        trace.iterations += 1;

        let increase = if previous > 0.0 {
            (current - previous) / previous
        } else if current > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        previous = current;
        if increase < epsilon {
            trace.converged = true;
            break;
        }
    }
    Ok((pair, trace))
}

/// `f1(phi) = |phi^T diag(a_N(theta_aod_2)) a_N(theta_aoa_1)|^2`.
pub fn phase_gain(angles: &AngleSet, phi: &CVector) -> Result<f64> {
    let n = phi.len();
    let cascade = steering_vector(angles.theta_aod_2, n)?.hadamard(&steering_vector(angles.theta_aoa_1, n)?)?;
    Ok(phi.dot(&cascade)?.norm_sqr())
}

/// `f2(f) = |a_M^T(theta_aod_1) f|^2`.
pub fn transmit_gain(angles: &AngleSet, f: &CVector) -> Result<f64> {
    Ok(steering_vector(angles.theta_aod_1, f.len())?.dot(f)?.norm_sqr())
}

/// Closed-form optimal beams when the direct link is Rayleigh faded.
pub fn rayleigh_optimal_beams(angles: &AngleSet, m: usize, n: usize) -> Result<BeamPair> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidDimension(format!(
            "M and N must be positive (M={m}, N={n})"
        )));
    }
    let phi = steering_vector(angles.theta_aod_2, n)?
        .hadamard(&steering_vector(angles.theta_aoa_1, n)?)?
        .conj();
    let f = steering_vector(angles.theta_aod_1, m)?
        .conj()
        .scale_real(1.0 / (m as f64).sqrt());
    Ok(BeamPair { phi, f })
}

/// Independent uniform phases on `[0, 2 pi)`.
pub fn random_phase_baseline(n: usize, stream: &mut RngStream) -> Result<CVector> {
    if n == 0 {
        return Err(Error::InvalidDimension("N must be positive".into()));
    }
    let phases: Vec<f64> = (0..n).map(|_| stream.uniform_angle()).collect();
    Ok(CVector::from_phases(&phases))
}
