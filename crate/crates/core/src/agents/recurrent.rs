use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use super::params::{truncated_normal, ParamSet};
use crate::numcore::{Real, Tape, Tensor, Var};
use crate::{Error, Result};

pub const INIT_STD: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NetKind {
    /// Unit-length direction from a tanh head.
    Actor,
    /// Unbounded scalar.
    Critic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RecurrentConfig {
    pub kind: NetKind,
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
}

impl RecurrentConfig {
    /// Actor over `[observation ++ previous action]`.
    pub fn actor(observation: usize, hidden: usize) -> Self {
        Self {
            kind: NetKind::Actor,
            input: observation + 2,
            hidden,
            output: 2,
        }
    }

    /// Critic over `[observation ++ previous action ++ action]`.
    pub fn critic(observation: usize, hidden: usize) -> Self {
        Self {
            kind: NetKind::Critic,
            input: observation + 4,
            hidden,
            output: 1,
        }
    }
}

const L1_WX: usize = 0;
const L1_WH: usize = 1;
const L1_B: usize = 2;
const L2_WX: usize = 3;
const L2_WH: usize = 4;
const L2_B: usize = 5;
const H1: usize = 6;
const C1: usize = 7;
const H2: usize = 8;
const C2: usize = 9;
const HEAD: usize = 10;

/// Two stacked LSTM layers with the input also fed to layer 2, both layers'
/// outputs feeding a bias-free linear head, and trainable initial states.
#[derive(Clone, Debug, PartialEq)]
pub struct RecurrentNet<T = f32> {
    pub config: RecurrentConfig,
    pub params: ParamSet<T>,
}

/// Recurrent state as tape variables, each `[batch, hidden]`.
#[derive(Clone, Copy, Debug)]
pub struct LstmState {
    pub h1: Var,
    pub c1: Var,
    pub h2: Var,
    pub c2: Var,
}

/// Detached recurrent state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateValues<T = f32> {
    pub h1: Tensor<T>,
    pub c1: Tensor<T>,
    pub h2: Tensor<T>,
    pub c2: Tensor<T>,
}

impl LstmState {
    pub fn values<T: Real>(&self, tape: &Tape<T>) -> StateValues<T> {
        StateValues {
            h1: tape.value(self.h1).clone(),
            c1: tape.value(self.c1).clone(),
            h2: tape.value(self.h2).clone(),
            c2: tape.value(self.c2).clone(),
        }
    }
}

impl<T: Real> StateValues<T> {
    pub fn constant(&self, tape: &mut Tape<T>) -> LstmState {
        LstmState {
            h1: tape.constant(self.h1.clone()),
            c1: tape.constant(self.c1.clone()),
            h2: tape.constant(self.h2.clone()),
            c2: tape.constant(self.c2.clone()),
        }
    }

    pub fn batch(&self) -> usize {
        self.h1.shape()[0]
    }

    /// Rows `rows` of every state tensor.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        let pick = |t: &Tensor<T>| -> Result<Tensor<T>> {
            let n = t.shape()[1];
            let mut data = Vec::with_capacity(rows.len() * n);
            for &r in rows {
                data.extend_from_slice(&t.data()[r * n..(r + 1) * n]);
            }
            Tensor::new(&[rows.len(), n], data)
        };
        Ok(Self {
            h1: pick(&self.h1)?,
            c1: pick(&self.c1)?,
            h2: pick(&self.h2)?,
            c2: pick(&self.c2)?,
        })
    }
}

fn lstm_bias<T: Real>(hidden: usize) -> Tensor<T> {
    Tensor::from_fn(&[4 * hidden], |i| {
        if i / hidden == 1 {
            T::one()
        } else {
            T::zero()
        }
    })
}

impl<T: Real> RecurrentNet<T> {
    pub fn new(config: RecurrentConfig, rng: &mut impl Rng) -> Self {
        let (i, n, o) = (config.input, config.hidden, config.output);
        let mut p = ParamSet::new();
        p.push("lstm1.wx", truncated_normal(&[i, 4 * n], INIT_STD, rng));
        p.push("lstm1.wh", truncated_normal(&[n, 4 * n], INIT_STD, rng));
        p.push("lstm1.bias", lstm_bias(n));
        p.push("lstm2.wx", truncated_normal(&[i + n, 4 * n], INIT_STD, rng));
        p.push("lstm2.wh", truncated_normal(&[n, 4 * n], INIT_STD, rng));
        p.push("lstm2.bias", lstm_bias(n));
        p.push("init.h1", truncated_normal(&[1, n], INIT_STD, rng));
        p.push("init.c1", truncated_normal(&[1, n], INIT_STD, rng));
        p.push("init.h2", truncated_normal(&[1, n], INIT_STD, rng));
        p.push("init.c2", truncated_normal(&[1, n], INIT_STD, rng));
        p.push("head.w", truncated_normal(&[2 * n, o], INIT_STD, rng));
        Self { config, params: p }
    }

    pub fn cast<U: Real>(&self) -> RecurrentNet<U> {
        RecurrentNet {
            config: self.config,
            params: self.params.cast(),
        }
    }

    pub fn bind(&self, tape: &mut Tape<T>, trainable: bool) -> Vec<Var> {
        self.params.bind(tape, trainable)
    }

    /// Trainable initial state broadcast over `batch` rows.
    pub fn initial_state(&self, tape: &mut Tape<T>, vars: &[Var], batch: usize) -> Result<LstmState> {
        Ok(LstmState {
            h1: tape.broadcast_rows(vars[H1], batch)?,
            c1: tape.broadcast_rows(vars[C1], batch)?,
            h2: tape.broadcast_rows(vars[H2], batch)?,
            c2: tape.broadcast_rows(vars[C2], batch)?,
        })
    }

    /// Initial state as plain values.
    pub fn initial_values(&self, batch: usize) -> StateValues<T> {
        let rows = |i: usize| {
            let t = &self.params.tensors()[i];
            Tensor::new(&[batch, t.len()], t.data().repeat(batch)).expect("state shape")
        };
        StateValues {
            h1: rows(H1),
            c1: rows(C1),
            h2: rows(H2),
            c2: rows(C2),
        }
    }

    /// One step on input `x: [b, input]`. Returns the network output
    /// (unit direction or scalar, by kind) and the next state.
    pub fn step(
        &self,
        tape: &mut Tape<T>,
        vars: &[Var],
        state: &LstmState,
        x: Var,
    ) -> Result<(Var, LstmState)> {
        let width = tape.value(x).shape().get(1).copied();
        if tape.value(x).rank() != 2 || width != Some(self.config.input) {
            return Err(Error::dim(
                "recurrent_step",
                &[self.config.input],
                tape.value(x).shape(),
            ));
        }
        let (h1, c1) = tape.lstm_cell(x, state.h1, state.c1, vars[L1_WX], vars[L1_WH], vars[L1_B])?;
        let x2 = tape.concat_cols(&[x, h1])?;
        let (h2, c2) = tape.lstm_cell(x2, state.h2, state.c2, vars[L2_WX], vars[L2_WH], vars[L2_B])?;
        let both = tape.concat_cols(&[h1, h2])?;
        let head = tape.matmul(both, vars[HEAD])?;
        let out = match self.config.kind {
            NetKind::Critic => head,
            NetKind::Actor => {
                let t = tape.tanh(head)?;
                tape.normalize_rows(t)?
            }
        };
        Ok((out, LstmState { h1, c1, h2, c2 }))
    }

    /// Detached step on plain values: `x` is `[b, input]` row-major.
    pub fn step_values(&self, state: &StateValues<T>, x: &Tensor<T>) -> Result<(Tensor<T>, StateValues<T>)> {
        let mut tape = Tape::new();
        let vars = self.bind(&mut tape, false);
        let s = state.constant(&mut tape);
        let xv = tape.constant(x.clone());
        let (out, next) = self.step(&mut tape, &vars, &s, xv)?;
        Ok((tape.value(out).clone(), next.values(&tape)))
    }
}

/// Row-wise concatenation of observation and action parts into one input.
pub fn assemble_input<T: Real>(parts: &[&[T]], rows: usize) -> Result<Tensor<T>> {
    let mut widths = Vec::with_capacity(parts.len());
    for p in parts {
        if p.len() % rows != 0 {
            return Err(Error::Usage(format!("part of length {} does not split into {rows} rows", p.len())));
        }
        widths.push(p.len() / rows);
    }
    let total: usize = widths.iter().sum();
    let mut data = Vec::with_capacity(rows * total);
    for r in 0..rows {
        for (p, &w) in parts.iter().zip(&widths) {
            data.extend_from_slice(&p[r * w..(r + 1) * w]);
        }
    }
    Tensor::new(&[rows, total], data)
}
