use super::config::TrainingConfig;

/// `(lr_g, lr_d)` at `iter`: constant for `lr_const_iters`, then linear to
/// zero over `lr_decay_iters`, then zero.
pub fn lr_at(iter: u64, cfg: &TrainingConfig) -> (f64, f64) {
    let factor = if iter < cfg.lr_const_iters {
        1.0
    } else {
        let into = iter - cfg.lr_const_iters;
        if into >= cfg.lr_decay_iters {
            0.0
        } else {
            1.0 - into as f64 / cfg.lr_decay_iters as f64
        }
    };
    (cfg.lr_g * factor, cfg.lr_d * factor)
}

/// Identity-loss weight: `lambda_id` before `id_active_iters`, zero after.
pub fn lambda_id_at(iter: u64, cfg: &TrainingConfig) -> f64 {
    if iter < cfg.id_active_iters {
        cfg.lambda_id
    } else {
        0.0
    }
}
