use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use super::{DynamicsError, SpreadingParams, Trajectory, TrajectoryKind};
use crate::graph::SparseMatrix;

/// One transition of the stochastic process: `node` switched to
/// `new_state` (1 = infected, 0 = susceptible) at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateChange {
    pub t: f64,
    pub node: usize,
    pub new_state: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticRun {
    pub initial: Vec<u8>,
    pub events: Vec<StateChange>,
    pub t_end: f64,
    /// Time at which the last infected node recovered, if that happened
    /// before `t_end` (zero when the run starts disease-free).
    pub extinction_time: Option<f64>,
    pub seed: u64,
    pub stream: u64,
}

impl StochasticRun {
    pub fn final_state(&self) -> Vec<u8> {
        let mut x = self.initial.clone();
        for e in &self.events {
            x[e.node] = e.new_state;
        }
        x
    }

    /// Piecewise-constant path: one row at `t = 0`, one per event and a
    /// closing row at `t_end` when the last event happened earlier.
    pub fn to_trajectory(&self) -> Trajectory {
        let mut x: Vec<f64> = self.initial.iter().map(|&s| f64::from(s)).collect();
        let mut times = vec![0.0];
        let mut values = vec![x.clone()];
        for e in &self.events {
            x[e.node] = f64::from(e.new_state);
            if *times.last().unwrap() == e.t {
                *values.last_mut().unwrap() = x.clone();
            } else {
                times.push(e.t);
                values.push(x.clone());
            }
        }
        if *times.last().unwrap() < self.t_end {
            times.push(self.t_end);
            values.push(x);
        }
        Trajectory {
            times,
            values,
            kind: TrajectoryKind::Stochastic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Pending {
    t: f64,
    node: usize,
    version: u64,
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        self.t
            .total_cmp(&other.t)
            .then(self.node.cmp(&other.node))
            .then(self.version.cmp(&other.version))
    }
}

struct Engine<'a> {
    beta: &'a SparseMatrix,
    /// `beta_t.row(j)` lists the nodes `i` that `j` can infect.
    beta_t: SparseMatrix,
    delta: &'a [f64],
    state: Vec<u8>,
    version: Vec<u64>,
    queue: BinaryHeap<Reverse<Pending>>,
    infected: usize,
    rng: ChaCha8Rng,
}

impl<'a> Engine<'a> {
    fn new(params: &'a SpreadingParams, x0: &[u8], seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let n = x0.len();
        let mut engine = Self {
            beta: params.beta(),
            beta_t: params.beta().transpose(),
            delta: params.delta(),
            state: x0.to_vec(),
            version: vec![0; n],
            queue: BinaryHeap::new(),
            infected: x0.iter().filter(|&&s| s == 1).count(),
            rng,
        };
        for i in 0..n {
            engine.reschedule(i, 0.0);
        }
        engine
    }

    fn rate(&self, i: usize) -> f64 {
        if self.state[i] == 1 {
            self.delta[i]
        } else {
            self.beta
                .row(i)
                .iter()
                .filter(|&&(j, _)| self.state[j] == 1)
                .map(|&(_, b)| b)
                .sum()
        }
    }

    /// Invalidates any pending clock for `i` and draws a fresh one. Valid
    /// because exponential clocks are memoryless.
    fn reschedule(&mut self, i: usize, now: f64) {
        self.version[i] += 1;
        let rate = self.rate(i);
        if rate > 0.0 {
            let wait: f64 = self.rng.sample::<f64, _>(Exp1) / rate;
            self.queue.push(Reverse(Pending {
                t: now + wait,
                node: i,
                version: self.version[i],
            }));
        }
    }

    /// Fires the next valid event at or before `t_end`.
    fn step(&mut self, t_end: f64) -> Option<StateChange> {
        while let Some(Reverse(p)) = self.queue.pop() {
            if p.version != self.version[p.node] {
                continue;
            }
            if p.t > t_end {
                return None;
            }
            let i = p.node;
            let new_state = 1 - self.state[i];
            self.state[i] = new_state;
            if new_state == 1 {
                self.infected += 1;
            } else {
                self.infected -= 1;
            }
            self.reschedule(i, p.t);
            let targets: Vec<usize> = self.beta_t.row(i).iter().map(|&(k, _)| k).collect();
            for k in targets {
                if k != i && self.state[k] == 0 {
                    self.reschedule(k, p.t);
                }
            }
            return Some(StateChange {
                t: p.t,
                node: i,
                new_state,
            });
        }
        None
    }
}

fn check_initial(params: &SpreadingParams, x0: &[u8]) -> Result<(), DynamicsError> {
    if x0.len() != params.node_count() {
        return Err(DynamicsError::DimensionMismatch {
            expected: params.node_count(),
            got: x0.len(),
        });
    }
    if let Some((index, &v)) = x0.iter().enumerate().find(|(_, &v)| v > 1) {
        return Err(DynamicsError::InvalidInitialState {
            index,
            value: f64::from(v),
        });
    }
    Ok(())
}

fn check_horizon(t_end: f64) -> Result<(), DynamicsError> {
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(DynamicsError::InvalidHorizon { step: 0.0, t_end });
    }
    Ok(())
}

/// Exact event-driven simulation of the SIS Markov process up to `t_end`.
/// Equivalent to [`stochastic_simulate_stream`] with stream 0.
pub fn stochastic_simulate(
    params: &SpreadingParams,
    x0: &[u8],
    t_end: f64,
    seed: u64,
) -> Result<StochasticRun, DynamicsError> {
    stochastic_simulate_stream(params, x0, t_end, seed, 0)
}

/// Like [`stochastic_simulate`], drawing from the independent substream
/// `stream` of the generator seeded by `seed`.
pub fn stochastic_simulate_stream(
    params: &SpreadingParams,
    x0: &[u8],
    t_end: f64,
    seed: u64,
    stream: u64,
) -> Result<StochasticRun, DynamicsError> {
    check_initial(params, x0)?;
    check_horizon(t_end)?;
    let mut engine = Engine::new(params, x0, seed, stream);
    let mut events = Vec::new();
    let mut extinction_time = (engine.infected == 0).then_some(0.0);
    while let Some(e) = engine.step(t_end) {
        events.push(e);
        if engine.infected == 0 {
            extinction_time = Some(e.t);
        }
    }
    Ok(StochasticRun {
        initial: x0.to_vec(),
        events,
        t_end,
        extinction_time,
        seed,
        stream,
    })
}

/// Extinction time (or `None` if still infected at `t_max`) for `trials`
/// independent runs. Trial `k` uses stream `k`, so the result does not
/// depend on the number of worker threads.
pub fn extinction_times(
    params: &SpreadingParams,
    x0: &[u8],
    t_max: f64,
    seed: u64,
    trials: usize,
) -> Result<Vec<Option<f64>>, DynamicsError> {
    check_initial(params, x0)?;
    check_horizon(t_max)?;
    Ok((0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let mut engine = Engine::new(params, x0, seed, k);
            if engine.infected == 0 {
                return Some(0.0);
            }
            while let Some(e) = engine.step(t_max) {
                if engine.infected == 0 {
                    return Some(e.t);
                }
            }
            None
        })
        .collect())
}
