use super::{DynamicsError, SpreadingParams, Trajectory, TrajectoryKind};

/// Values may drift this far outside `[0, 1]` before a step is rejected;
/// anything inside is clamped back.
const RANGE_SLACK: f64 = 1e-6;

/// `0.01 / max(max δ_i, max row sum of B)`.
pub fn default_step(params: &SpreadingParams) -> f64 {
    let fastest = params
        .beta()
        .row_sums()
        .into_iter()
        .chain(params.delta().iter().copied())
        .fold(0.0_f64, f64::max);
    if fastest > 0.0 {
        0.01 / fastest
    } else {
        0.01
    }
}

/// Fixed-step classical Runge–Kutta. `rhs(state, out)` writes the
/// derivative; `post` may project or validate the state after each step.
pub(crate) fn rk4_integrate(
    state0: Vec<f64>,
    t_end: f64,
    step: f64,
    mut rhs: impl FnMut(&[f64], &mut [f64]),
    mut post: impl FnMut(f64, &mut [f64]) -> Result<(), DynamicsError>,
) -> Result<Trajectory, DynamicsError> {
    if !(step > 0.0) || !(t_end >= 0.0) || !step.is_finite() || !t_end.is_finite() {
        return Err(DynamicsError::InvalidHorizon { step, t_end });
    }
    let dim = state0.len();
    let n_steps = ((t_end / step) - 1e-9).ceil().max(0.0) as usize;
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut values = Vec::with_capacity(n_steps + 1);
    let mut x = state0;
    times.push(0.0);
    values.push(x.clone());

    let (mut k1, mut k2, mut k3, mut k4) = (
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
    );
    let mut tmp = vec![0.0; dim];
    for k in 0..n_steps {
        let t = k as f64 * step;
        let h = if k + 1 == n_steps { t_end - t } else { step };
        rhs(&x, &mut k1);
        for i in 0..dim {
            tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        rhs(&tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        rhs(&tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = x[i] + h * k3[i];
        }
        rhs(&tmp, &mut k4);
        for i in 0..dim {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t_next = if k + 1 == n_steps { t_end } else { t + h };
        post(t_next, &mut x)?;
        times.push(t_next);
        values.push(x.clone());
    }
    Ok(Trajectory {
        times,
        values,
        kind: TrajectoryKind::MeanField,
    })
}

pub(crate) fn clamp_probabilities(step: f64, t: f64, x: &mut [f64]) -> Result<(), DynamicsError> {
    for v in x.iter_mut() {
        if !(*v >= -RANGE_SLACK && *v <= 1.0 + RANGE_SLACK) {
            return Err(DynamicsError::StepTooLarge { step, t, value: *v });
        }
        *v = v.clamp(0.0, 1.0);
    }
    Ok(())
}

/// Integrates `dp_i/dt = (1 − p_i) Σ_j β_ij p_j − δ_i p_i` from `p0`.
pub fn meanfield_simulate(
    params: &SpreadingParams,
    p0: &[f64],
    t_end: f64,
    step: f64,
) -> Result<Trajectory, DynamicsError> {
    let n = params.node_count();
    if p0.len() != n {
        return Err(DynamicsError::DimensionMismatch {
            expected: n,
            got: p0.len(),
        });
    }
    if let Some((index, &value)) = p0
        .iter()
        .enumerate()
        .find(|(_, &v)| !(0.0..=1.0).contains(&v))
    {
        return Err(DynamicsError::InvalidInitialState { index, value });
    }
    let beta = params.beta();
    let delta = params.delta();
    let mut pressure = vec![0.0; n];
    rk4_integrate(
        p0.to_vec(),
        t_end,
        step,
        |p, out| {
            beta.mul_vec_into(p, &mut pressure);
            for i in 0..n {
                out[i] = (1.0 - p[i]) * pressure[i] - delta[i] * p[i];
            }
        },
        |t, x| clamp_probabilities(step, t, x),
    )
}

/// Least-squares fit of `log ‖p(t)‖₂ ≈ log(‖p(0)‖ K) − rate·t` over the
/// second half of the horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub rate: f64,
    /// `log K`, relative to `‖p(0)‖`.
    pub log_k: f64,
    pub samples: usize,
}

pub fn fit_decay_rate(traj: &Trajectory) -> Result<DecayFit, DynamicsError> {
    let (t_end, _) = traj.last().ok_or(DynamicsError::TooFewSamples)?;
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let points: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&traj.values)
        .filter(|(&t, _)| t >= 0.5 * t_end)
        .map(|(&t, v)| (t, norm(v)))
        .filter(|&(_, r)| r > 0.0 && r.is_finite())
        .map(|(t, r)| (t, r.ln()))
        .collect();
    if points.len() < 2 {
        return Err(DynamicsError::TooFewSamples);
    }
    let m = points.len() as f64;
    let t_mean = points.iter().map(|p| p.0).sum::<f64>() / m;
    let y_mean = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - t_mean).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - t_mean) * (p.1 - y_mean)).sum();
    if sxx == 0.0 {
        return Err(DynamicsError::TooFewSamples);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * t_mean;
    let p0_norm = norm(&traj.values[0]);
    Ok(DecayFit {
        rate: -slope,
        log_k: intercept - p0_norm.ln(),
        samples: points.len(),
    })
}
