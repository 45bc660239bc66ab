use super::{Sawtooth, TrainConfig};

/// Generator learning rate at 0-based iteration `m`: an exponential envelope
/// times a sawtooth between `lr_floor` and 1.
pub fn lr_schedule(m: u64, cfg: &TrainConfig) -> f64 {
    let total = cfg.iterations.max(1) as f64;
    let m = m as f64;
    let envelope = libm::pow(cfg.lr_decay_base, cfg.lr_decay_scale * m / total);
    cfg.lr_generator * envelope * sawtooth(m / (cfg.lr_period * total), cfg)
}

fn sawtooth(phase: f64, cfg: &TrainConfig) -> f64 {
    let frac = phase - libm::floor(phase);
    let span = 1.0 - cfg.lr_floor;
    match cfg.sawtooth {
        Sawtooth::Down => 1.0 - span * frac,
        Sawtooth::Up => cfg.lr_floor + span * frac,
    }
}
