mod support;

use std::f64::consts::FRAC_PI_2;

use adascan_core::agents::{AgentConfig, GeneratorConfig, NetworkBundle, RecurrentNet};
use adascan_core::crdpg::*;
use adascan_core::numcore::{AdamConfig, AdamState, Tensor};
use adascan_core::scanenv::{preprocess, synth_dataset, EnvConfig, ProcessedImage, ScanHistory};
use adascan_core::Error;
use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tiny_env() -> EnvConfig {
    EnvConfig {
        segments: 4,
        samples_per_segment: 5,
        spacing: std::f32::consts::SQRT_2,
        width: 16,
        height: 16,
        over_edge_penalty: 0.1,
    }
}

fn tiny_config() -> TrainConfig {
    let env = tiny_env();
    TrainConfig {
        iterations: 8,
        batch: 2,
        replay_capacity: 6,
        hidden: 8,
        eval_every: 3,
        seed: 11,
        env,
        generator: GeneratorConfig::desk(env.width, env.height),
        ..TrainConfig::desk()
    }
}

fn images(count: usize, seed: u64) -> Vec<ProcessedImage> {
    let env = tiny_env();
    synth_dataset(count, env.height, env.width, seed)
        .unwrap()
        .images
        .iter()
        .map(|r| preprocess(r).unwrap())
        .collect()
}

fn bundle(seed: u64) -> NetworkBundle {
    let cfg = AgentConfig {
        observation: tiny_env().samples_per_segment,
        hidden: 8,
        generator: GeneratorConfig::desk(16, 16),
    };
    NetworkBundle::new(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

/// Noisy episodes from a fresh actor on synthetic images.
fn episodes(actor: &RecurrentNet, count: usize, scale: f64, seed: u64) -> Vec<ScanHistory> {
    let cfg = tiny_config();
    let imgs = images(count, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    imgs.iter()
        .map(|p| {
            let mut noise = NoiseState::new(&cfg);
            collect_episode(actor, &cfg.env, &p.raw_norm, &mut noise, scale, &mut rng).unwrap()
        })
        .collect()
}

fn minibatch(histories: &[ScanHistory]) -> Minibatch<f64> {
    let refs: Vec<&ScanHistory> = histories.iter().collect();
    Minibatch::new(&refs, &tiny_env()).unwrap()
}

// --- exploration noise ---

#[test]
fn ou_step_reverts_toward_mean() {
    let mut n = NoiseState::new(&TrainConfig::paper());
    n.prev = 0.5;
    assert_relative_eq!(n.step_with(0.0, 1.0), 0.45, epsilon = 1e-15);
    assert_relative_eq!(n.prev, 0.45, epsilon = 1e-15);
}

#[test]
fn noise_fully_decayed_at_end() {
    let scale = noise_scale(1000, 1000, true);
    assert_eq!(scale, 0.0);
    let mut n = NoiseState::new(&TrainConfig::paper());
    assert_eq!(n.step_with(2.5, scale), 0.0);
    assert_eq!(noise_scale(0, 1000, true), 1.0);
    assert_eq!(noise_scale(500, 1000, false), 1.0);
}

#[test]
fn ou_stationary_std() {
    let mut n = NoiseState::new(&TrainConfig::paper());
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let samples: Vec<f64> = (0..100_000).map(|_| n.step(&mut rng, 1.0)).collect();
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / samples.len() as f64;
    let expected = 0.2 / (1.0f64 - 0.9 * 0.9).sqrt();
    assert!((var.sqrt() / expected - 1.0).abs() < 0.05, "{} vs {expected}", var.sqrt());
}

#[test]
fn rotation_examples() {
    assert_eq!(rotate_action([0.6, 0.8], 0.0).unwrap(), [0.6, 0.8]);
    let r = rotate_action([1.0, 0.0], FRAC_PI_2).unwrap();
    assert!(r[0].abs() < 1e-7 && (r[1] - 1.0).abs() < 1e-7, "{r:?}");
    assert!(matches!(rotate_action([1.0, 1.0], 0.1), Err(Error::Contract(_))));
}

proptest! {
    #[test]
    fn rotation_preserves_norm(angle in -10.0f64..10.0, eps in -3.0f64..3.0) {
        let d = [angle.cos() as f32, angle.sin() as f32];
        let r = rotate_action(d, eps).unwrap();
        let norm = ((r[0] as f64).powi(2) + (r[1] as f64).powi(2)).sqrt();
        prop_assert!((norm - 1.0).abs() < 1e-6);
    }
}

// --- episode collection ---

#[test]
fn noise_free_episode_matches_policy_rollout() {
    let b = bundle(1);
    let imgs = images(3, 5);
    let raws: Vec<_> = imgs.iter().map(|p| &p.raw_norm).collect();
    let rollouts = policy_rollouts(&b.actor, &tiny_env(), &raws).unwrap();
    let collected = episodes(&b.actor, 3, 0.0, 5);
    for (c, r) in collected.iter().zip(&rollouts) {
        assert_eq!(c.len(), 4);
        assert!(c.observations.iter().all(|o| o.len() == 5));
        for (a, b) in c.actions.iter().zip(&r.actions) {
            assert!((a[0] - b[0]).abs() < 1e-6 && (a[1] - b[1]).abs() < 1e-6);
        }
    }
}

#[test]
fn collection_is_deterministic() {
    let b = bundle(2);
    assert_eq!(episodes(&b.actor, 2, 1.0, 9), episodes(&b.actor, 2, 1.0, 9));
    assert_ne!(episodes(&b.actor, 2, 1.0, 9), episodes(&b.actor, 2, 1.0, 10));
}

// --- step losses and running statistics ---

fn initialized(avg: f32, sq_avg: f32) -> RunningStats {
    RunningStats {
        avg,
        sq_avg,
        initialized: true,
    }
}

#[test]
fn self_normalized_terminal_loss() {
    let cfg = TrainConfig::paper();
    let stats = initialized(0.2, 0.04);
    let l = compute_step_losses(0.2, &[false; 5], &stats, &cfg).unwrap();
    assert_eq!(l, vec![0.0, 0.0, 0.0, 0.0, 1.0]);
}

#[test]
fn over_edge_penalty_at_every_flagged_step() {
    let cfg = TrainConfig::paper();
    let stats = initialized(0.2, 0.04);
    let l = compute_step_losses(0.2, &[true; 4], &stats, &cfg).unwrap();
    for v in &l[..3] {
        assert_relative_eq!(*v, 0.1);
    }
    assert_relative_eq!(l[3], 1.1);
}

#[test]
fn outlier_is_clipped_at_three_std() {
    let mut cfg = TrainConfig::paper();
    // avg 1, std 0.5
    let stats = initialized(1.0, 1.25);
    let l = compute_step_losses(1.0 + 10.0 * 0.5, &[false; 2], &stats, &cfg).unwrap();
    assert_relative_eq!(l[1], 2.5, epsilon = 1e-6);
    cfg.clip_enabled = false;
    let l = compute_step_losses(6.0, &[false; 2], &stats, &cfg).unwrap();
    assert_relative_eq!(l[1], 6.0, epsilon = 1e-6);
}

#[test]
fn uninitialized_stats_are_rejected() {
    let r = compute_step_losses(1.0, &[false], &RunningStats::default(), &TrainConfig::paper());
    assert!(matches!(r, Err(Error::Usage(_))));
}

#[test]
fn running_stats_rules() {
    let mut s = RunningStats::default();
    s.update(&[1.0, 3.0], 0.997).unwrap();
    assert_eq!(s.avg, 2.0);
    assert_eq!(s.sq_avg, 5.0);

    let mut s = initialized(1.0, 1.0);
    s.update(&[2.0, 2.0], 0.997).unwrap();
    assert_relative_eq!(s.avg, 1.003, epsilon = 1e-6);

    assert!(matches!(s.update(&[], 0.997), Err(Error::Usage(_))));
}

#[test]
fn constant_stream_converges() {
    let mut s = RunningStats::default();
    s.update(&[0.1, 0.9], 0.997).unwrap();
    for _ in 0..10_000 {
        s.update(&[0.3; 4], 0.997).unwrap();
    }
    assert_relative_eq!(s.avg, 0.3, epsilon = 1e-5);
    assert!(s.variance() < 1e-5);
}

#[test]
fn normalized_loss_is_scale_invariant() {
    let cfg = TrainConfig::paper();
    let ratio = |k: f32| {
        let mut s = RunningStats::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..4000 {
            let batch: Vec<f32> = (0..8).map(|_| k * rng.gen_range(0.5..1.5)).collect();
            s.update(&batch, 0.997).unwrap();
        }
        for _ in 0..4000 {
            s.update(&[k; 8], 0.997).unwrap();
        }
        compute_step_losses(k, &[false], &s, &cfg).unwrap()[0]
    };
    let (a, b) = (ratio(1.0), ratio(37.0));
    assert!((a / b - 1.0).abs() < 0.01, "{a} {b}");
    assert!((a - 1.0).abs() < 0.01);
}

// --- targets ---

/// Brute-force discounted sum of losses from step `t` on.
fn discounted(losses: &[f32], gamma: f64, t: usize) -> f64 {
    losses[t..]
        .iter()
        .enumerate()
        .map(|(k, &l)| gamma.powi(k as i32) * l as f64)
        .sum()
}

/// Critic stub that returns the exact discounted tail after each step.
fn tail_stub(losses: &[Vec<f32>], gamma: f64) -> TableBootstrap {
    TableBootstrap(
        losses
            .iter()
            .map(|ls| (0..ls.len() - 1).map(|t| discounted(ls, gamma, t + 1)).collect())
            .collect(),
    )
}

#[test]
fn bellman_targets_match_discounted_sums() {
    let losses = vec![vec![0.25f32, 0.0, 1.5], vec![0.0f32, 0.125, 0.0, 0.5, 2.0]];
    for gamma in [0.5, 0.97] {
        let y = compute_targets(&losses, gamma, &tail_stub(&losses, gamma));
        for (ls, ys) in losses.iter().zip(&y) {
            for (t, &v) in ys.iter().enumerate() {
                assert_relative_eq!(v, discounted(ls, gamma, t), max_relative = 1e-14);
            }
            assert_eq!(*ys.last().unwrap(), *ls.last().unwrap() as f64);
            assert_eq!(*ys, supervised_targets(ls, gamma));
        }
    }
}

#[test]
fn zero_discount_targets_are_immediate() {
    let losses = vec![vec![0.1f32, 0.2, 0.3]];
    let y = compute_targets(&losses, 0.0, &TableBootstrap(vec![vec![9.0, 9.0]]));
    assert_eq!(y[0], vec![0.1f32 as f64, 0.2f32 as f64, 0.3f32 as f64]);
    assert_eq!(supervised_targets(&losses[0], 0.0), y[0]);
}

#[test]
fn over_edge_penalty_stays_at_its_step() {
    // penalty at step 1 only; the bootstrap carries nothing
    let losses = vec![vec![0.0f32, 0.1, 0.0]];
    let y = compute_targets(&losses, 0.97, &TableBootstrap(vec![vec![0.0, 0.0]]));
    assert_eq!(y[0][0], 0.0);
    assert_eq!(y[0][1], 0.1f32 as f64);
}

#[test]
fn supervised_target_example() {
    assert_eq!(supervised_targets(&[1.0, 1.0, 1.0], 0.5), vec![1.75, 1.5, 1.0]);
    assert_eq!(supervised_weight(0, 100_000), 1.0);
    assert_eq!(supervised_weight(100_000, 100_000), 0.0);
    assert_eq!(supervised_weight(250_000, 100_000), 0.0);
}

#[test]
fn bootstrap_with_copied_targets_matches_next_critic_value() {
    // Noise-free episodes replay mu exactly, so with targets equal to the live
    // networks the bootstrap after step t is the critic output at step t + 1.
    let b = bundle(4);
    let hs = episodes(&b.actor, 3, 0.0, 21);
    let mb = minibatch(&hs);
    let (a, c) = (b.actor.cast::<f64>(), b.critic.cast::<f64>());
    let boot = bootstrap_values(&a, &c, &a, &c, &mb).unwrap();
    let q = critic_values(&c, &mb).unwrap();
    for (row, qs) in boot.0.iter().zip(&q) {
        assert_eq!(row.len(), 3);
        for (t, v) in row.iter().enumerate() {
            assert_relative_eq!(*v, qs[t + 1], max_relative = 1e-5);
        }
    }
}

// --- learning-rate schedule ---

#[test]
fn lr_schedule_checkpoints() {
    let cfg = TrainConfig::paper();
    let m_total = cfg.iterations;
    assert_relative_eq!(lr_schedule(0, &cfg), 0.0030, epsilon = 1e-15);
    let last = m_total - 1;
    let phase = last as f64 / (2.0 * m_total as f64 / 9.0);
    let saw = 1.0 - 0.8 * phase.fract();
    let envelope = 0.75f64.powf(5.0 * last as f64 / m_total as f64);
    assert_relative_eq!(lr_schedule(last, &cfg), 0.0030 * envelope * saw, max_relative = 1e-12);
    assert_relative_eq!(0.75f64.powf(5.0), 0.2373046875);

    // just before and after the first period boundary (2M/9 is not an integer)
    let boundary = 2 * m_total / 9;
    let before = lr_schedule(boundary, &cfg) / (0.0030 * 0.75f64.powf(5.0 * boundary as f64 / m_total as f64));
    let after = lr_schedule(boundary + 1, &cfg)
        / (0.0030 * 0.75f64.powf(5.0 * (boundary + 1) as f64 / m_total as f64));
    assert!((before - 0.2).abs() < 1e-5, "{before}");
    assert!((after - 1.0).abs() < 1e-5, "{after}");
}

#[test]
fn four_full_sawtooth_periods() {
    let cfg = TrainConfig {
        iterations: 9000,
        ..TrainConfig::paper()
    };
    let resets = (1..cfg.iterations)
        .filter(|&m| lr_schedule(m, &cfg) > lr_schedule(m - 1, &cfg))
        .count();
    assert_eq!(resets, 4);
}

#[test]
fn upward_sawtooth_starts_at_floor() {
    let cfg = TrainConfig {
        sawtooth: Sawtooth::Up,
        ..TrainConfig::paper()
    };
    assert_relative_eq!(lr_schedule(0, &cfg), 0.0030 * 0.2, epsilon = 1e-15);
}

// --- critic and actor updates ---

fn perturbed(net: &RecurrentNet<f64>, tensor: usize, index: usize, h: f64) -> RecurrentNet<f64> {
    let mut n = net.clone();
    n.params.tensors_mut()[tensor].data_mut()[index] += h;
    n
}

/// Largest relative error between `grads` and central differences of `f`
/// over a few elements of every parameter tensor.
fn check_gradients(net: &RecurrentNet<f64>, grads: &[Tensor<f64>], f: impl Fn(&RecurrentNet<f64>) -> f64) -> f64 {
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for (i, g) in grads.iter().enumerate() {
        let n = g.len();
        let stride = n.div_ceil(6).max(1);
        let (mut num_max, mut diff_max): (f64, f64) = (0.0, 0.0);
        for j in (0..n).step_by(stride) {
            let numeric = (f(&perturbed(net, i, j, h)) - f(&perturbed(net, i, j, -h))) / (2.0 * h);
            num_max = num_max.max(numeric.abs());
            diff_max = diff_max.max((g.data()[j] - numeric).abs());
        }
        worst = worst.max(diff_max / num_max.max(1e-8));
    }
    worst
}

fn random_targets(n: usize, t: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..t).map(|_| rng.gen_range(0.0..1.0)).collect()).collect()
}

#[test]
fn critic_loss_matches_recomputation() {
    let b = bundle(5);
    let mb = minibatch(&episodes(&b.actor, 3, 1.0, 30));
    let c = b.critic.cast::<f64>();
    let y = random_targets(3, 4, 1);
    let (loss, _) = critic_loss(&c, &mb, &y).unwrap();
    let q = critic_values(&c, &mb).unwrap();
    let mut sum = 0.0;
    for (qs, ys) in q.iter().zip(&y) {
        for (a, b) in qs.iter().zip(ys) {
            sum += (b - a).powi(2);
        }
    }
    assert_relative_eq!(loss, sum / (2.0 * 3.0 * 4.0), max_relative = 1e-12);
}

#[test]
fn critic_at_targets_has_zero_gradient() {
    let b = bundle(6);
    let mb = minibatch(&episodes(&b.actor, 2, 1.0, 31));
    let c = b.critic.cast::<f64>();
    let y = critic_values(&c, &mb).unwrap();
    let (loss, grads) = critic_loss(&c, &mb, &y).unwrap();
    assert_eq!(loss, 0.0);
    assert!(grads.iter().all(|g| g.data().iter().all(|&v| v == 0.0)));
    let mut params = c.params.tensors().to_vec();
    AdamState::new(AdamConfig::with_lr(1e-3), &params).update(&mut params, &grads).unwrap();
    assert_eq!(params, c.params.tensors());
}

#[test]
fn critic_gradient_matches_finite_differences() {
    let b = bundle(7);
    let mb = minibatch(&episodes(&b.actor, 2, 1.0, 32));
    let mut c = b.critic.cast::<f64>();
    // larger weights so that every gate contributes measurably
    for t in c.params.tensors_mut() {
        t.data_mut().iter_mut().for_each(|v| *v *= 20.0);
    }
    let y = random_targets(2, 4, 2);
    let (_, grads) = critic_loss(&c, &mb, &y).unwrap();
    let err = check_gradients(&c, &grads, |n| critic_loss(n, &mb, &y).unwrap().0);
    assert!(err < 1e-4, "{err}");
}

#[test]
fn critic_step_lowers_loss() {
    let b = bundle(8);
    let mb = minibatch(&episodes(&b.actor, 3, 1.0, 33));
    let mut c = b.critic.cast::<f64>();
    let y = random_targets(3, 4, 3);
    let (before, grads) = critic_loss(&c, &mb, &y).unwrap();
    let mut adam = AdamState::new(AdamConfig::with_lr(1e-4), c.params.tensors());
    adam.update(c.params.tensors_mut(), &grads).unwrap();
    let (after, _) = critic_loss(&c, &mb, &y).unwrap();
    assert!(after < before, "{after} >= {before}");
}

#[test]
fn action_blind_critic_gives_zero_actor_gradient() {
    let b = bundle(9);
    let mb = minibatch(&episodes(&b.actor, 2, 1.0, 34));
    let a = b.actor.cast::<f64>();
    let mut c = b.critic.cast::<f64>();
    // zero the input rows of the current action in both layers
    let input = c.config.input;
    for name in ["lstm1.wx", "lstm2.wx"] {
        let i = c.params.names().iter().position(|n| n == name).unwrap();
        let w = &mut c.params.tensors_mut()[i];
        let cols = w.shape()[1];
        w.data_mut()[(input - 2) * cols..input * cols].fill(0.0);
    }
    let (_, grads) = actor_objective(&a, &c, &mb, false).unwrap();
    assert!(grads.iter().all(|g| g.data().iter().all(|&v| v == 0.0)));
}

#[test]
fn actor_gradient_matches_finite_differences() {
    let b = bundle(10);
    let mb = minibatch(&episodes(&b.actor, 2, 1.0, 35));
    let mut a = b.actor.cast::<f64>();
    for t in a.params.tensors_mut() {
        t.data_mut().iter_mut().for_each(|v| *v *= 20.0);
    }
    let mut c = b.critic.cast::<f64>();
    for t in c.params.tensors_mut() {
        t.data_mut().iter_mut().for_each(|v| *v *= 20.0);
    }
    let (_, grads) = actor_objective(&a, &c, &mb, false).unwrap();
    let err = check_gradients(&a, &grads, |n| actor_objective(n, &c, &mb, false).unwrap().0);
    assert!(err < 1e-4, "{err}");
}

#[test]
fn actor_step_descends_predicted_loss() {
    let b = bundle(11);
    let mb = minibatch(&episodes(&b.actor, 3, 1.0, 36));
    let mut a = b.actor.cast::<f64>();
    let c = b.critic.cast::<f64>();
    let (before, grads) = actor_objective(&a, &c, &mb, false).unwrap();
    let mut adam = AdamState::new(AdamConfig::with_lr(1e-4), a.params.tensors());
    adam.update(a.params.tensors_mut(), &grads).unwrap();
    let (after, _) = actor_objective(&a, &c, &mb, false).unwrap();
    assert!(after < before, "{after} >= {before}");
}

#[test]
fn replayed_and_live_actions_agree_without_noise() {
    let b = bundle(12);
    let mb = minibatch(&episodes(&b.actor, 3, 0.0, 37));
    let (a, c) = (b.actor.cast::<f64>(), b.critic.cast::<f64>());
    let (live, gl) = actor_objective(&a, &c, &mb, false).unwrap();
    let (rep, gr) = actor_objective(&a, &c, &mb, true).unwrap();
    assert_relative_eq!(live, rep, max_relative = 1e-6);
    for (x, y) in gl.iter().zip(&gr) {
        for (u, v) in x.data().iter().zip(y.data()) {
            assert!((u - v).abs() < 1e-6 * (1.0 + u.abs()));
        }
    }
}

#[test]
fn updates_do_not_touch_other_networks() {
    let b = bundle(13);
    let mb = minibatch(&episodes(&b.actor, 2, 1.0, 38));
    let (a, c) = (b.actor.cast::<f64>(), b.critic.cast::<f64>());
    let (a0, c0) = (a.clone(), c.clone());
    let (_, ga) = actor_objective(&a, &c, &mb, false).unwrap();
    let (_, gc) = critic_loss(&c, &mb, &random_targets(2, 4, 4)).unwrap();
    assert_eq!((&a, &c), (&a0, &c0));
    assert_eq!(ga.len(), a.params.len());
    assert_eq!(gc.len(), c.params.len());
}

// --- training loop ---

#[test]
fn zero_iterations_leave_networks_unchanged() {
    let cfg = TrainConfig {
        iterations: 0,
        ..tiny_config()
    };
    let tr = Trainer::new(cfg, images(4, 1), images(2, 2)).unwrap();
    assert!(tr.is_finished());
    let fresh = NetworkBundle::new(&cfg.agent(), &mut ChaCha8Rng::seed_from_u64(cfg.seed)).unwrap();
    assert_eq!(tr.bundle, fresh);
}

fn run(cfg: TrainConfig, iterations: u64) -> (Vec<IterationRecord>, Snapshot) {
    let mut tr = Trainer::new(cfg, images(6, 1), images(2, 2)).unwrap();
    let records = (0..iterations).map(|_| tr.run_iteration().unwrap()).collect();
    (records, tr.snapshot().unwrap())
}

#[test]
fn training_is_deterministic() {
    let (ra, sa) = run(tiny_config(), 8);
    let (rb, sb) = run(tiny_config(), 8);
    assert_eq!(ra, rb);
    assert_eq!(sa, sb);
    assert!(ra[0].update.is_none());
    assert!(ra[7].update.is_some());
    assert!(ra[2].eval.is_some() && ra[3].eval.is_none());
    let (rc, _) = run(TrainConfig { seed: 12, ..tiny_config() }, 8);
    assert_ne!(ra, rc);
}

#[test]
fn restored_trainer_continues_identically() {
    let cfg = tiny_config();
    let (full, end) = run(cfg, 8);
    let (_, mid) = run(cfg, 4);
    let mut tr = Trainer::restore(cfg, images(6, 1), images(2, 2), &mid).unwrap();
    assert_eq!(tr.snapshot().unwrap(), mid);
    let rest: Vec<_> = (0..4).map(|_| tr.run_iteration().unwrap()).collect();
    assert_eq!(rest, full[4..]);
    assert_eq!(tr.snapshot().unwrap(), end);
}

#[test]
fn restore_rejects_mismatched_snapshot() {
    let cfg = tiny_config();
    let (_, snap) = run(cfg, 3);
    let other = TrainConfig { hidden: 6, ..cfg };
    assert!(Trainer::restore(other, images(6, 1), images(2, 2), &snap).is_err());
}

#[test]
fn loss_variants_train() {
    for loss in [LossVariant::MseSobel, LossVariant::RegionMax] {
        let cfg = TrainConfig {
            loss,
            supervised: SupervisedMode::Decayed,
            replayed_actions: true,
            ..tiny_config()
        };
        let (records, _) = run(cfg, 4);
        let u = records[3].update.unwrap();
        assert!(u.gen_loss.is_finite() && u.critic_loss.is_finite() && u.actor_obj.is_finite());
    }
}
