use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::eval::{adaptive_scans, completion_errors, EvalReport};
use super::losses::{compute_step_losses, RunningStats};
use super::noise::{noise_scale, rotate_action, NoiseState};
use super::schedule::lr_schedule;
use super::targets::{compute_targets, supervised_targets, supervised_weight};
use super::updates::{actor_objective, bootstrap_values, critic_loss, Minibatch};
use super::{LossVariant, SupervisedMode, TrainConfig};
use crate::agents::{assemble_input, soft_update, NetworkBundle, RecurrentNet};
use crate::numcore::{loss, AdamConfig, AdamState, NormMode, Tape, Tensor, Var};
use crate::replay::{Episode, ReplayBuffer};
use crate::scanenv::{augment_dihedral, rasterize_scan, EnvConfig, EpisodeState, ProcessedImage, Raster, ScanHistory};
use crate::{Error, Result};

/// Losses of one update phase.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpdateStats {
    /// Mean generator loss over the minibatch.
    pub gen_loss: f64,
    pub critic_loss: f64,
    pub actor_obj: f64,
    /// Parameter tensors left unchanged because of non-finite values.
    pub skipped: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    /// 1-based.
    pub iteration: u64,
    /// `None` while the replay holds fewer than a minibatch of episodes.
    pub update: Option<UpdateStats>,
    pub l_avg: Option<f32>,
    pub lr_gen: f64,
    pub noise_scale: f64,
    pub eval: Option<EvalReport>,
}

/// Serializable ChaCha8 position.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        Self {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos(),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }
}

/// Complete trainer state as named tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub tensors: Vec<(String, Tensor)>,
    pub rng: RngState,
    pub iteration: u64,
}

/// One noisy episode of `actor` on `image`. The noise process restarts at
/// its configured start value.
pub fn collect_episode<R: Rng>(
    actor: &RecurrentNet,
    env: &EnvConfig,
    image: &Raster,
    noise: &mut NoiseState,
    scale: f64,
    rng: &mut R,
) -> Result<ScanHistory> {
    let mut st = EpisodeState::reset(env);
    let mut hidden = actor.initial_values(1);
    let mut obs = vec![0f32; env.samples_per_segment];
    let mut prev = [0f32; 2];
    for _ in 0..env.segments {
        let x = assemble_input(&[&obs, &prev], 1)?;
        let (mu, next) = actor.step_values(&hidden, &x)?;
        hidden = next;
        let eps = noise.step(rng, scale);
        let a = rotate_action([mu.data()[0], mu.data()[1]], eps)?;
        let (o, _) = st.step(env, image, a)?;
        obs = o;
        prev = a;
    }
    Ok(st.history)
}

pub struct Trainer {
    pub config: TrainConfig,
    pub bundle: NetworkBundle,
    pub adam_actor: AdamState,
    pub adam_critic: AdamState,
    pub adam_generator: AdamState,
    pub stats: RunningStats,
    pub replay: ReplayBuffer,
    train: Vec<ProcessedImage>,
    test: Vec<ProcessedImage>,
    rng: ChaCha8Rng,
    iteration: u64,
}

impl Trainer {
    pub fn new(config: TrainConfig, train: Vec<ProcessedImage>, test: Vec<ProcessedImage>) -> Result<Self> {
        config.validate()?;
        if train.is_empty() {
            return Err(Error::Usage("training needs at least one image".into()));
        }
        let env = config.env;
        for p in train.iter().chain(&test) {
            if p.raw_norm.width != env.width || p.raw_norm.height != env.height {
                return Err(Error::dim(
                    "trainer",
                    &[env.height, env.width],
                    &[p.raw_norm.height, p.raw_norm.width],
                ));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let bundle = NetworkBundle::new(&config.agent(), &mut rng)?;
        let adam_actor = AdamState::new(AdamConfig::with_lr(config.lr_actor), bundle.actor.params.tensors());
        let adam_critic = AdamState::new(AdamConfig::with_lr(config.lr_critic), bundle.critic.params.tensors());
        let gen_cfg = AdamConfig {
            lr: config.lr_generator,
            decay: config.generator_decay,
            ..AdamConfig::default()
        };
        let adam_generator = AdamState::new(gen_cfg, bundle.generator.params.tensors());
        Ok(Self {
            replay: ReplayBuffer::new(config.replay_capacity)?,
            config,
            bundle,
            adam_actor,
            adam_critic,
            adam_generator,
            stats: RunningStats::default(),
            train,
            test,
            rng,
            iteration: 0,
        })
    }

    /// Completed iterations.
    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn is_finished(&self) -> bool {
        self.iteration >= self.config.iterations
    }

    pub fn test_images(&self) -> &[ProcessedImage] {
        &self.test
    }

    pub fn train_images(&self) -> &[ProcessedImage] {
        &self.train
    }

    /// Collect one episode, then update every network if the replay holds a
    /// full minibatch.
    pub fn run_iteration(&mut self) -> Result<IterationRecord> {
        let cfg = self.config;
        let m = self.iteration;
        let scale = noise_scale(m, cfg.iterations, cfg.noise_decay);
        let image_index = self.rng.gen_range(0..self.train.len());
        let mut noise = NoiseState::new(&cfg);
        let history = collect_episode(
            &self.bundle.actor,
            &cfg.env,
            &self.train[image_index].raw_norm,
            &mut noise,
            scale,
            &mut self.rng,
        )?;
        self.replay.push(&cfg.env, history, image_index)?;
        let lr_gen = lr_schedule(m, &cfg);
        let batch: Option<Vec<Episode>> = self
            .replay
            .sample(cfg.batch, &mut self.rng)
            .map(|b| b.into_iter().cloned().collect());
        let update = match batch {
            Some(b) => Some(self.update(&b, m, lr_gen)?),
            None => None,
        };
        self.iteration += 1;
        let eval = if self.iteration % cfg.eval_interval() == 0 && !self.test.is_empty() {
            Some(self.evaluate()?)
        } else {
            None
        };
        Ok(IterationRecord {
            iteration: self.iteration,
            update,
            l_avg: self.stats.initialized.then_some(self.stats.avg),
            lr_gen,
            noise_scale: scale,
            eval,
        })
    }

    /// Test-set completion errors of the noise-free policy.
    pub fn evaluate(&mut self) -> Result<EvalReport> {
        let raws: Vec<&Raster> = self.test.iter().map(|p| &p.raw_norm).collect();
        let targets: Vec<&Raster> = self.test.iter().map(|p| &p.target_blur).collect();
        let scans = adaptive_scans(&self.bundle.actor, &self.config.env, &raws)?;
        EvalReport::from_errors(completion_errors(&mut self.bundle.generator, &scans, &targets)?)
    }

    fn update(&mut self, batch: &[Episode], m: u64, lr_gen: f64) -> Result<UpdateStats> {
        let cfg = self.config;
        let mut skipped = 0;
        let (gen_losses, gen_skipped) = self.generator_update(batch, lr_gen)?;
        skipped += gen_skipped;
        let finite: Vec<f32> = gen_losses.iter().copied().filter(|v| v.is_finite()).collect();
        if !self.stats.initialized && !finite.is_empty() {
            self.stats.update(&finite, cfg.beta_loss)?;
        }
        let step_losses = batch
            .iter()
            .zip(&gen_losses)
            .map(|(e, &lg)| compute_step_losses(lg, &e.history.over_edge, &self.stats, &cfg))
            .collect::<Result<Vec<_>>>()?;

        let histories: Vec<&ScanHistory> = batch.iter().map(|e| &e.history).collect();
        let mb = Minibatch::new(&histories, &cfg.env)?;
        let b = &self.bundle;
        let (actor_obj, actor_grads) = actor_objective(&b.actor, &b.critic, &mb, cfg.replayed_actions)?;
        let bootstrap = bootstrap_values(&b.actor, &b.critic, &b.actor_target, &b.critic_target, &mb)?;
        let rl = compute_targets(&step_losses, cfg.gamma, &bootstrap);
        let w = match cfg.supervised {
            SupervisedMode::Off => 0.0,
            SupervisedMode::Always => 1.0,
            SupervisedMode::Decayed => supervised_weight(m, cfg.supervised_iterations),
        };
        let targets: Vec<Vec<f64>> = if w == 0.0 {
            rl
        } else {
            step_losses
                .iter()
                .zip(rl)
                .map(|(ls, y)| {
                    supervised_targets(ls, cfg.gamma)
                        .into_iter()
                        .zip(y)
                        .map(|(s, r)| w * s + (1.0 - w) * r)
                        .collect()
                })
                .collect()
        };
        let (critic_loss, critic_grads) = critic_loss(&b.critic, &mb, &targets)?;

        if actor_obj.is_finite() {
            skipped += self
                .adam_actor
                .update(self.bundle.actor.params.tensors_mut(), &actor_grads)?;
        } else {
            log::warn!("non-finite actor objective; actor update skipped");
            skipped += actor_grads.len();
        }
        if critic_loss.is_finite() {
            skipped += self
                .adam_critic
                .update(self.bundle.critic.params.tensors_mut(), &critic_grads)?;
        } else {
            log::warn!("non-finite critic loss; critic update skipped");
            skipped += critic_grads.len();
        }
        soft_update(&self.bundle.actor.params, &mut self.bundle.actor_target.params, cfg.beta_actor)?;
        soft_update(&self.bundle.critic.params, &mut self.bundle.critic_target.params, cfg.beta_critic)?;
        if !finite.is_empty() {
            self.stats.update(&finite, cfg.beta_loss)?;
        }
        let gen_loss = gen_losses.iter().map(|&v| v as f64).sum::<f64>() / gen_losses.len() as f64;
        Ok(UpdateStats {
            gen_loss,
            critic_loss,
            actor_obj,
            skipped,
        })
    }

    /// Rasterize, augment, complete and take one generator step. Returns
    /// per-episode losses.
    fn generator_update(&mut self, batch: &[Episode], lr: f64) -> Result<(Vec<f32>, usize)> {
        let cfg = self.config;
        let mut scans = Vec::with_capacity(batch.len());
        let mut targets = Vec::with_capacity(batch.len() * cfg.env.width * cfg.env.height);
        for e in batch {
            let scan = rasterize_scan(&e.history, &cfg.env)?;
            let k = self.rng.gen_range(0..8);
            let (s, t) = augment_dihedral(&scan, &self.train[e.image_index].target_blur, k)?;
            scans.push(s);
            targets.extend_from_slice(&t.data);
        }
        let n = batch.len();
        let shape = [n, 1, cfg.env.height, cfg.env.width];
        let target = Tensor::new(&shape, targets)?;
        let g = &mut self.bundle.generator;
        let mut tape = Tape::new();
        let vars = g.bind(&mut tape, true);
        let refs: Vec<_> = scans.iter().collect();
        let x = tape.constant(g.input(&refs)?);
        let y = g.forward(&mut tape, &vars, x, NormMode::Train)?;
        let (loss, per_sample) = generator_loss(&mut tape, y, &target, &cfg)?;
        if !tape.value(loss).item().is_finite() {
            log::warn!("non-finite generator loss; generator update skipped");
            return Ok((per_sample, vars.len()));
        }
        let grads = tape.backward(loss)?.collect(&vars);
        let skipped = self
            .adam_generator
            .update_with_lr(g.params.tensors_mut(), &grads, lr)?;
        Ok((per_sample, skipped))
    }

    pub fn snapshot(&self) -> Result<Snapshot> {
        let mut out = Vec::new();
        let b = &self.bundle;
        for (prefix, p) in [
            ("actor", &b.actor.params),
            ("critic", &b.critic.params),
            ("actor_target", &b.actor_target.params),
            ("critic_target", &b.critic_target.params),
            ("generator", &b.generator.params),
        ] {
            for (name, t) in p.names().iter().zip(p.tensors()) {
                out.push((format!("{prefix}/{name}"), t.clone()));
            }
        }
        for (i, s) in b.generator.norms.iter().enumerate() {
            out.push((format!("generator/bn{i}.mean"), Tensor::new(&[s.mean.len()], s.mean.clone())?));
            out.push((format!("generator/bn{i}.var"), Tensor::new(&[s.var.len()], s.var.clone())?));
        }
        for (prefix, adam, names) in [
            ("adam.actor", &self.adam_actor, b.actor.params.names()),
            ("adam.critic", &self.adam_critic, b.critic.params.names()),
            ("adam.generator", &self.adam_generator, b.generator.params.names()),
        ] {
            for ((name, m), v) in names.iter().zip(&adam.m).zip(&adam.v) {
                out.push((format!("{prefix}.m/{name}"), m.clone()));
                out.push((format!("{prefix}.v/{name}"), v.clone()));
            }
            out.push((
                format!("{prefix}.counters"),
                Tensor::new(&[2], vec![exact_f32(adam.step)?, exact_f32(adam.skipped)?])?,
            ));
        }
        let s = &self.stats;
        out.push((
            "stats".into(),
            Tensor::new(&[3], vec![s.avg, s.sq_avg, if s.initialized { 1.0 } else { 0.0 }])?,
        ));
        out.push(("replay.inserted".into(), Tensor::scalar(exact_f32(self.replay.inserted())?)));
        let eps: Vec<&Episode> = self.replay.iter().collect();
        if !eps.is_empty() {
            let (n, t, s) = (eps.len(), self.config.env.segments, self.config.env.samples_per_segment);
            let idx = eps.iter().map(|e| exact_f32(e.image_index as u64)).collect::<Result<Vec<_>>>()?;
            let flat = |f: &dyn Fn(&Episode) -> Vec<f32>| eps.iter().flat_map(|e| f(e)).collect::<Vec<f32>>();
            out.push(("replay.image_index".into(), Tensor::new(&[n], idx)?));
            out.push((
                "replay.actions".into(),
                Tensor::new(&[n, t, 2], flat(&|e| e.history.actions.iter().flatten().copied().collect()))?,
            ));
            out.push((
                "replay.observations".into(),
                Tensor::new(&[n, t, s], flat(&|e| e.history.observations.concat()))?,
            ));
            out.push((
                "replay.over_edge".into(),
                Tensor::new(
                    &[n, t],
                    flat(&|e| e.history.over_edge.iter().map(|&f| if f { 1.0 } else { 0.0 }).collect()),
                )?,
            ));
            out.push((
                "replay.positions".into(),
                Tensor::new(
                    &[n, t, s, 2],
                    flat(&|e| e.history.positions.iter().flatten().flatten().copied().collect()),
                )?,
            ));
        }
        Ok(Snapshot {
            tensors: out,
            rng: RngState::capture(&self.rng),
            iteration: self.iteration,
        })
    }

    /// Rebuild a trainer from `snap`. Every tensor of a fresh trainer must be
    /// present with the same shape.
    pub fn restore(
        config: TrainConfig,
        train: Vec<ProcessedImage>,
        test: Vec<ProcessedImage>,
        snap: &Snapshot,
    ) -> Result<Self> {
        let mut tr = Self::new(config, train, test)?;
        let lookup = |name: &str, shape: &[usize]| -> Result<Tensor> {
            let t = snap
                .tensors
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, t)| t)
                .ok_or_else(|| Error::Data(format!("snapshot lacks tensor {name}")))?;
            if t.shape() != shape {
                return Err(Error::dim("restore", shape, t.shape()));
            }
            Ok(t.clone())
        };
        let fresh = tr.snapshot()?;
        let b = &mut tr.bundle;
        for (prefix, p) in [
            ("actor", &mut b.actor.params),
            ("critic", &mut b.critic.params),
            ("actor_target", &mut b.actor_target.params),
            ("critic_target", &mut b.critic_target.params),
            ("generator", &mut b.generator.params),
        ] {
            let loaded = p
                .names()
                .iter()
                .zip(p.tensors())
                .map(|(n, t)| lookup(&format!("{prefix}/{n}"), t.shape()))
                .collect::<Result<Vec<_>>>()?;
            p.assign(loaded)?;
        }
        for (i, s) in b.generator.norms.iter_mut().enumerate() {
            s.mean = lookup(&format!("generator/bn{i}.mean"), &[s.mean.len()])?.into_data();
            s.var = lookup(&format!("generator/bn{i}.var"), &[s.var.len()])?.into_data();
        }
        let names = [
            b.actor.params.names().to_vec(),
            b.critic.params.names().to_vec(),
            b.generator.params.names().to_vec(),
        ];
        for ((prefix, adam), names) in [
            ("adam.actor", &mut tr.adam_actor),
            ("adam.critic", &mut tr.adam_critic),
            ("adam.generator", &mut tr.adam_generator),
        ]
        .into_iter()
        .zip(&names)
        {
            for (i, name) in names.iter().enumerate() {
                let shape = adam.m[i].shape().to_vec();
                adam.m[i] = lookup(&format!("{prefix}.m/{name}"), &shape)?;
                adam.v[i] = lookup(&format!("{prefix}.v/{name}"), &shape)?;
            }
            let c = lookup(&format!("{prefix}.counters"), &[2])?;
            adam.step = c.data()[0] as u64;
            adam.skipped = c.data()[1] as u64;
        }
        let s = lookup("stats", &[3])?;
        tr.stats = RunningStats {
            avg: s.data()[0],
            sq_avg: s.data()[1],
            initialized: s.data()[2] != 0.0,
        };
        let inserted = lookup("replay.inserted", &[1])?.item() as u64;
        let episodes = match snap.tensors.iter().find(|(n, _)| n == "replay.image_index") {
            None => Vec::new(),
            Some((_, idx)) => read_episodes(&tr.config.env, idx, &lookup)?,
        };
        if let Some(bad) = episodes.iter().find(|e| e.image_index >= tr.train.len()) {
            return Err(Error::Data(format!("replayed image index {} is out of range", bad.image_index)));
        }
        tr.replay = ReplayBuffer::restore(tr.config.replay_capacity, episodes, inserted)?;
        let known: Vec<&str> = fresh.tensors.iter().map(|(n, _)| n.as_str()).collect();
        if let Some((n, _)) = snap
            .tensors
            .iter()
            .find(|(n, _)| !known.contains(&n.as_str()) && !n.starts_with("replay."))
        {
            return Err(Error::Data(format!("snapshot has unexpected tensor {n}")));
        }
        tr.rng = snap.rng.rng();
        tr.iteration = snap.iteration;
        Ok(tr)
    }
}

fn read_episodes(
    env: &EnvConfig,
    idx: &Tensor,
    lookup: &dyn Fn(&str, &[usize]) -> Result<Tensor>,
) -> Result<Vec<Episode>> {
    let n = idx.len();
    let (t, s) = (env.segments, env.samples_per_segment);
    let actions = lookup("replay.actions", &[n, t, 2])?;
    let obs = lookup("replay.observations", &[n, t, s])?;
    let edge = lookup("replay.over_edge", &[n, t])?;
    let pos = lookup("replay.positions", &[n, t, s, 2])?;
    Ok((0..n)
        .map(|i| Episode {
            image_index: idx.data()[i] as usize,
            history: ScanHistory {
                actions: actions.data()[i * t * 2..(i + 1) * t * 2]
                    .chunks(2)
                    .map(|c| [c[0], c[1]])
                    .collect(),
                observations: obs.data()[i * t * s..(i + 1) * t * s]
                    .chunks(s)
                    .map(|c| c.to_vec())
                    .collect(),
                over_edge: edge.data()[i * t..(i + 1) * t].iter().map(|&v| v != 0.0).collect(),
                positions: pos.data()[i * t * s * 2..(i + 1) * t * s * 2]
                    .chunks(s * 2)
                    .map(|c| c.chunks(2).map(|p| [p[0], p[1]]).collect())
                    .collect(),
            },
        })
        .collect())
}

fn exact_f32(v: u64) -> Result<f32> {
    if v > 1 << 24 {
        return Err(Error::Data(format!("counter {v} is not exactly representable")));
    }
    Ok(v as f32)
}

/// Minibatch generator loss on the tape and its per-sample values.
fn generator_loss(tape: &mut Tape, pred: Var, target: &Tensor, cfg: &TrainConfig) -> Result<(Var, Vec<f32>)> {
    let n = target.shape()[0];
    let p = tape.value(pred).clone();
    match cfg.loss {
        LossVariant::Mse => {
            let l = tape.mse_loss(pred, target)?;
            Ok((l, loss::mse_per_sample(p.data(), target.data(), n)))
        }
        LossVariant::MseSobel => {
            let w = cfg.sobel_weight as f32;
            let a = tape.mse_loss(pred, target)?;
            let s = tape.sobel_loss(pred, target)?;
            let s = tape.scale(s, w)?;
            let l = tape.add(a, s)?;
            let base = loss::mse_per_sample(p.data(), target.data(), n);
            let (sp, st) = (loss::sobel(&p)?, loss::sobel(target)?);
            let edge = loss::mse_per_sample(sp.data(), st.data(), n);
            Ok((l, base.iter().zip(edge).map(|(a, e)| a + w * e).collect()))
        }
        LossVariant::RegionMax => {
            let l = tape.region_max_mse(pred, target, cfg.region_size)?;
            let (per, _) = loss::region_max(&p, target, cfg.region_size)?;
            Ok((l, per))
        }
    }
}
