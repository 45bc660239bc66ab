use alloc::vec;
use alloc::vec::Vec;

use super::targets::TableBootstrap;
use crate::agents::{assemble_input, RecurrentNet, StateValues};
use crate::numcore::{Real, Tape, Tensor};
use crate::scanenv::{EnvConfig, ScanHistory};
use crate::{Error, Result};

/// Per-step network inputs of a minibatch of complete episodes.
///
/// `obs[t]` holds `o_t` and `acts[t]` holds `a_{t-1}`, both zero at `t = 0`,
/// so `acts[t + 1]` is the action taken at step `t`. Each entry is
/// `[n, width]` row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Minibatch<T = f32> {
    pub n: usize,
    pub obs: Vec<Vec<T>>,
    pub acts: Vec<Vec<T>>,
}

impl<T: Real> Minibatch<T> {
    pub fn new(episodes: &[&ScanHistory], env: &EnvConfig) -> Result<Self> {
        let (n, t_max, s) = (episodes.len(), env.segments, env.samples_per_segment);
        if n == 0 {
            return Err(Error::Usage("minibatch needs at least one episode".into()));
        }
        let mut obs = vec![vec![T::zero(); n * s]; t_max + 1];
        let mut acts = vec![vec![T::zero(); n * 2]; t_max + 1];
        for (i, h) in episodes.iter().enumerate() {
            if !h.is_complete(env) {
                return Err(Error::Contract("minibatch episodes must be complete".into()));
            }
            for t in 0..t_max {
                for (d, &v) in obs[t + 1][i * s..(i + 1) * s].iter_mut().zip(&h.observations[t]) {
                    *d = T::of(v as f64);
                }
                for k in 0..2 {
                    acts[t + 1][2 * i + k] = T::of(h.actions[t][k] as f64);
                }
            }
        }
        Ok(Self { n, obs, acts })
    }

    pub fn steps(&self) -> usize {
        self.obs.len() - 1
    }

    /// Actor input at step `t`: `[o_t, a_{t-1}]`.
    pub fn actor_input(&self, t: usize) -> Result<Tensor<T>> {
        assemble_input(&[&self.obs[t], &self.acts[t]], self.n)
    }

    /// Critic input at step `t` with the replayed action: `[o_t, a_{t-1}, a_t]`.
    pub fn critic_input(&self, t: usize) -> Result<Tensor<T>> {
        assemble_input(&[&self.obs[t], &self.acts[t], &self.acts[t + 1]], self.n)
    }
}

/// States of `net` before each step when fed `input(t)`; entry `T` is the
/// state after the last step.
fn unroll<T: Real>(
    net: &RecurrentNet<T>,
    steps: usize,
    n: usize,
    input: impl Fn(usize) -> Result<Tensor<T>>,
) -> Result<Vec<StateValues<T>>> {
    let mut states = Vec::with_capacity(steps + 1);
    states.push(net.initial_values(n));
    for t in 0..steps {
        let (_, next) = net.step_values(&states[t], &input(t)?)?;
        states.push(next);
    }
    Ok(states)
}

/// Critic outputs `[n][T]` over replayed actions.
pub fn critic_values<T: Real>(critic: &RecurrentNet<T>, batch: &Minibatch<T>) -> Result<Vec<Vec<f64>>> {
    let mut state = critic.initial_values(batch.n);
    let mut out = vec![Vec::with_capacity(batch.steps()); batch.n];
    for t in 0..batch.steps() {
        let (q, next) = critic.step_values(&state, &batch.critic_input(t)?)?;
        for (row, &v) in out.iter_mut().zip(q.data()) {
            row.push(v.f64());
        }
        state = next;
    }
    Ok(out)
}

/// Critic loss `(1 / 2nT) sum (y - Q)^2` with full BPTT, and its gradient
/// in parameter order.
pub fn critic_loss<T: Real>(
    critic: &RecurrentNet<T>,
    batch: &Minibatch<T>,
    targets: &[Vec<f64>],
) -> Result<(f64, Vec<Tensor<T>>)> {
    let t_max = batch.steps();
    if targets.len() != batch.n || targets.iter().any(|y| y.len() != t_max) {
        return Err(Error::dim("critic_loss", &[batch.n, t_max], &[targets.len()]));
    }
    let mut tape = Tape::new();
    let vars = critic.bind(&mut tape, true);
    let mut state = critic.initial_state(&mut tape, &vars, batch.n)?;
    let mut qs = Vec::with_capacity(t_max);
    for t in 0..t_max {
        let x = tape.constant(batch.critic_input(t)?);
        let (q, next) = critic.step(&mut tape, &vars, &state, x)?;
        qs.push(q);
        state = next;
    }
    let all = tape.concat_cols(&qs)?;
    let y = Tensor::from_fn(&[batch.n, t_max], |k| T::of(targets[k / t_max][k % t_max]));
    let mse = tape.mse_loss(all, &y)?;
    let loss = tape.scale(mse, T::of(0.5))?;
    let value = tape.value(loss).item().f64();
    let grads = tape.backward(loss)?.collect(&vars);
    Ok((value, grads))
}

/// Actor objective: the mean over batch and steps of the critic's predicted
/// loss for live actions `mu(h_t)`, with the critic state carried along the
/// replayed actions and the critic parameters held constant. Returns the
/// value and its gradient with respect to the actor parameters.
///
/// With `replayed`, the critic sees the replayed action while the gradient
/// still flows through `mu`.
pub fn actor_objective<T: Real>(
    actor: &RecurrentNet<T>,
    critic: &RecurrentNet<T>,
    batch: &Minibatch<T>,
    replayed: bool,
) -> Result<(f64, Vec<Tensor<T>>)> {
    let t_max = batch.steps();
    let critic_states = unroll(critic, t_max, batch.n, |t| batch.critic_input(t))?;
    let mut tape = Tape::new();
    let av = actor.bind(&mut tape, true);
    let cv = critic.bind(&mut tape, false);
    let mut state = actor.initial_state(&mut tape, &av, batch.n)?;
    let mut qs = Vec::with_capacity(t_max);
    for t in 0..t_max {
        let x = tape.constant(batch.actor_input(t)?);
        let (mu, next) = actor.step(&mut tape, &av, &state, x)?;
        state = next;
        let action = if replayed {
            let live = tape.value(mu).data();
            let offset = Tensor::from_fn(&[batch.n, 2], |i| batch.acts[t + 1][i] - live[i]);
            let off = tape.constant(offset);
            tape.add(mu, off)?
        } else {
            mu
        };
        let cs = critic_states[t].constant(&mut tape);
        let ctx = tape.constant(assemble_input(&[&batch.obs[t], &batch.acts[t]], batch.n)?);
        let xin = tape.concat_cols(&[ctx, action])?;
        let (q, _) = critic.step(&mut tape, &cv, &cs, xin)?;
        qs.push(q);
    }
    let all = tape.concat_cols(&qs)?;
    let obj = tape.mean(all)?;
    let value = tape.value(obj).item().f64();
    let grads = tape.backward(obj)?.collect(&av);
    Ok((value, grads))
}

/// Target-network estimates `Q'(o_{t+1}, a_t, mu'(o_{t+1}, a_t))` after each
/// non-final step `t`, with both target networks started from the live
/// networks' states after step `t`.
pub fn bootstrap_values<T: Real>(
    actor: &RecurrentNet<T>,
    critic: &RecurrentNet<T>,
    actor_target: &RecurrentNet<T>,
    critic_target: &RecurrentNet<T>,
    batch: &Minibatch<T>,
) -> Result<TableBootstrap> {
    let t_max = batch.steps();
    let n = batch.n;
    let live_c = unroll(critic, t_max, n, |t| batch.critic_input(t))?;
    let live_a = unroll(actor, t_max, n, |t| batch.actor_input(t))?;
    let mut table = vec![Vec::with_capacity(t_max.saturating_sub(1)); n];
    for t in 0..t_max.saturating_sub(1) {
        let (a, _) = actor_target.step_values(&live_a[t + 1], &batch.actor_input(t + 1)?)?;
        let xq = assemble_input(&[&batch.obs[t + 1], &batch.acts[t + 1], a.data()], n)?;
        let (q, _) = critic_target.step_values(&live_c[t + 1], &xq)?;
        for (row, &v) in table.iter_mut().zip(q.data()) {
            row.push(v.f64());
        }
    }
    Ok(TableBootstrap(table))
}
