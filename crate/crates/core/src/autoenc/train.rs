//! Minibatch training of the wiretap autoencoder and the best-response
//! eavesdropper.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{
    backward_batch, batch_loss, cross_entropy_logit_grad, draw_realizations, encode_batch, forward_batch,
    forward_with, propagate, Architecture, LossParts, NetParams, PowerNorm, Realization, Scenario, SnrDraw,
};
use super::loss::{argmax, loss_r};
use super::nn::{Adam, Mlp};
use crate::channel::ChannelConfig;
use crate::error::{Error, Result};
use crate::impair::ImpairmentConfig;
use crate::modem::SymbolIndex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub alpha: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub lr0: f64,
    pub lr_decay: f64,
    /// Non-improving epochs before the learning rate is decayed.
    pub patience: usize,
    pub snr_train_range_db: (f64, f64),
    pub power_limit: f64,
    pub order: usize,
    pub seed: u64,
    pub val_snr_db: f64,
    pub val_symbols: usize,
    /// Draw one pool of channel, noise and oscillator states and reuse it
    /// every epoch (messages are re-paired with it by the shuffle), instead
    /// of redrawing per batch.
    pub fixed_realizations: bool,
    pub architecture: Architecture,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            batch_size: 256,
            epochs: 100,
            lr0: 3e-4,
            lr_decay: 0.65,
            patience: 3,
            snr_train_range_db: (0.0, 18.0),
            power_limit: 1.0,
            order: 16,
            seed: 0,
            val_snr_db: 18.0,
            val_symbols: 4096,
            fixed_realizations: true,
            architecture: Architecture::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.snr_train_range_db;
        let ok = (0.0..=1.0).contains(&self.alpha)
            && self.batch_size > 0
            && self.epochs > 0
            && self.lr0 > 0.0
            && self.lr_decay > 0.0
            && self.lr_decay <= 1.0
            && self.patience > 0
            && lo.is_finite()
            && hi >= lo
            && self.power_limit > 0.0
            && self.order >= 2
            && self.val_snr_db.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid training config: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Losses of the end-of-epoch parameters over the whole training set,
    /// each message paired with its own pool realisation.
    pub loss_total: f64,
    pub loss_r: f64,
    pub loss_e: f64,
    /// Mean of the minibatch losses seen during the epoch.
    pub running_loss: f64,
    pub lr: f64,
    pub val_ber_legit: f64,
    pub val_ber_eve: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochStats>,
}

impl History {
    pub fn last(&self) -> Option<&EpochStats> {
        self.epochs.last()
    }

    /// Fraction of epoch transitions where the training loss did not rise.
    pub fn non_increasing_fraction(&self) -> f64 {
        let pairs: Vec<_> = self.epochs.windows(2).collect();
        if pairs.is_empty() {
            return 1.0;
        }
        pairs
            .iter()
            .filter(|w| w[1].loss_total <= w[0].loss_total)
            .count() as f64
            / pairs.len() as f64
    }
}

/// Plateau schedule: multiply by `factor` after `patience` epochs without
/// a new best loss.
#[derive(Debug, Clone)]
struct Plateau {
    best: f64,
    bad: usize,
    patience: usize,
    factor: f64,
}

impl Plateau {
    fn new(patience: usize, factor: f64) -> Self {
        Self {
            best: f64::INFINITY,
            bad: 0,
            patience,
            factor,
        }
    }

    /// Returns the multiplier to apply to the learning rate.
    fn observe(&mut self, loss: f64) -> f64 {
        if loss < self.best {
            self.best = loss;
            self.bad = 0;
            1.0
        } else {
            self.bad += 1;
            if self.bad >= self.patience {
                self.bad = 0;
                self.factor
            } else {
                1.0
            }
        }
    }
}

fn bit_errors(sent: SymbolIndex, got: usize) -> u64 {
    (sent.0 ^ got).count_ones() as u64
}

fn validation_messages(n: usize, order: usize, seed: u64) -> Vec<SymbolIndex> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(7);
    (0..n).map(|_| SymbolIndex(rng.random_range(0..order))).collect()
}

/// Frozen-normalisation BER of both decoders on a fixed validation set.
fn validate_ber(params: &NetParams, cfg: &TrainConfig, imp: &ImpairmentConfig, ch: &ChannelConfig) -> Result<(f64, f64)> {
    let messages = validation_messages(cfg.val_symbols, params.order, cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(8);
    let scen = Scenario {
        impairments: imp,
        channel: ch,
        snr: SnrDraw::Fixed(cfg.val_snr_db),
    };
    let mut params = params.clone();
    params.calibrate();
    let cache = forward_batch(&messages, &scen, &mut rng, &params, PowerNorm::Frozen)?;
    let bits = (params.order.trailing_zeros() as u64 * messages.len() as u64).max(1) as f64;
    let count = |p: &ndarray::Array2<f64>| -> f64 {
        p.rows()
            .into_iter()
            .zip(&messages)
            .map(|(r, &m)| bit_errors(m, argmax(r.as_slice().expect("contiguous"))))
            .sum::<u64>() as f64
            / bits
    };
    Ok((count(cache.legit()), count(cache.eve())))
}

/// Training-set losses with `data[i]` sent through `pool[i]`.
fn pool_loss(
    params: &NetParams,
    data: &[SymbolIndex],
    pool: &[Realization],
    cfg: &TrainConfig,
    imp: &ImpairmentConfig,
) -> Result<LossParts> {
    let mut acc = LossParts::default();
    for (labels, draws) in data.chunks(cfg.batch_size).zip(pool.chunks(cfg.batch_size)) {
        let refs: Vec<&Realization> = draws.iter().collect();
        let cache = forward_with(labels, &refs, imp, params, PowerNorm::Batch)?;
        let l = batch_loss(&cache, labels, cfg.alpha);
        let w = labels.len() as f64 / data.len() as f64;
        acc.total += l.total * w;
        acc.legit += l.legit * w;
        acc.eve += l.eve * w;
    }
    Ok(acc)
}

/// Trains encoder and both decoders jointly on `data` (message indices).
///
/// Returns calibrated parameters (frozen power normalisation) and the
/// per-epoch history.
pub fn train(
    data: &[SymbolIndex],
    cfg: &TrainConfig,
    imp: &ImpairmentConfig,
    ch: &ChannelConfig,
) -> Result<(NetParams, History)> {
    cfg.validate()?;
    imp.validate()?;
    ch.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidConfig("empty training set".into()));
    }
    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = NetParams::new(cfg.order, ch.n_rx, cfg.power_limit, &cfg.architecture, &mut init_rng)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut opt = [
        Adam::new(&params.encoder, cfg.lr0),
        Adam::new(&params.legit, cfg.lr0),
        Adam::new(&params.eve, cfg.lr0),
    ];
    let mut lr = cfg.lr0;
    let mut plateau = Plateau::new(cfg.patience, cfg.lr_decay);
    let scen = Scenario {
        impairments: imp,
        channel: ch,
        snr: SnrDraw::Uniform(cfg.snr_train_range_db.0, cfg.snr_train_range_db.1),
    };
    let pool = draw_realizations(data.len(), &scen, &mut rng)?;
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = History::default();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut sum_t, mut n) = (0.0, 0.0);
        for (batch, idx) in order.chunks(cfg.batch_size).enumerate() {
            let diverged = |what: String| Error::Diverged { epoch, batch, what };
            let labels: Vec<SymbolIndex> = idx.iter().map(|&i| data[i]).collect();
            let labels = labels.as_slice();
            params.zero_grad();
            let cache = if cfg.fixed_realizations {
                let start = batch * cfg.batch_size;
                let refs: Vec<&Realization> = pool[start..start + idx.len()].iter().collect();
                forward_with(labels, &refs, imp, &params, PowerNorm::Batch)
            } else {
                forward_batch(labels, &scen, &mut rng, &params, PowerNorm::Batch)
            }
            .map_err(|e| diverged(e.to_string()))?;
            let parts = backward_batch(&cache, labels, cfg.alpha, &mut params)
                .map_err(|e| diverged(e.to_string()))?;
            if !parts.total.is_finite() {
                return Err(diverged(format!("loss {}", parts.total)));
            }
            opt[0].step(&mut params.encoder);
            opt[1].step(&mut params.legit);
            opt[2].step(&mut params.eve);
            if !params.is_finite() {
                return Err(diverged("non-finite parameters".into()));
            }
            let w = labels.len() as f64;
            sum_t += parts.total * w;
            n += w;
        }
        let (val_ber_legit, val_ber_eve) = validate_ber(&params, cfg, imp, ch)?;
        let train_loss = pool_loss(&params, data, &pool, cfg, imp)?;
        let loss_total = train_loss.total;
        history.epochs.push(EpochStats {
            epoch,
            loss_total,
            loss_r: train_loss.legit,
            loss_e: train_loss.eve,
            running_loss: sum_t / n,
            lr,
            val_ber_legit,
            val_ber_eve,
        });
        let f = plateau.observe(loss_total);
        if f != 1.0 {
            lr *= f;
            for o in &mut opt {
                o.lr = lr;
            }
        }
    }
    params.calibrate();
    Ok((params, history))
}

/// Budget of the eavesdropper that retrains its own decoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponseConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub snr_train_range_db: (f64, f64),
    pub seed: u64,
}

impl Default for BestResponseConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 256,
            lr: 3e-4,
            snr_train_range_db: (0.0, 18.0),
            seed: 0,
        }
    }
}

/// Trains a freshly initialised eavesdropper decoder with cross-entropy
/// against the frozen encoder, observing its own channel. Returns a copy of
/// `params` whose `eve` network is the best response, plus per-epoch mean
/// cross-entropy.
pub fn eve_best_response(
    params: &NetParams,
    data: &[SymbolIndex],
    cfg: &BestResponseConfig,
    imp: &ImpairmentConfig,
    ch: &ChannelConfig,
) -> Result<(NetParams, Vec<f64>)> {
    if data.is_empty() || cfg.epochs == 0 || cfg.batch_size == 0 || !(cfg.lr > 0.0) {
        return Err(Error::InvalidConfig("invalid best-response config".into()));
    }
    let mut frozen = params.clone();
    if frozen.norm_scale.is_none() {
        frozen.calibrate();
    }
    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    init_rng.set_stream(2);
    let mut eve = Mlp::new(&params.eve.specs(), &mut init_rng)?;
    let mut opt = Adam::new(&eve, cfg.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(3);
    let scen = Scenario {
        impairments: imp,
        channel: ch,
        snr: SnrDraw::Uniform(cfg.snr_train_range_db.0, cfg.snr_train_range_db.1),
    };
    let mut order = data.to_vec();
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut sum, mut n) = (0.0, 0.0);
        for (batch, labels) in order.chunks(cfg.batch_size).enumerate() {
            let enc = encode_batch(labels, &frozen, PowerNorm::Frozen)?;
            let prop = propagate(&enc.x, &scen, &mut rng)?;
            eve.zero_grad();
            let trace = eve.forward(&prop.input_eve);
            let b = labels.len() as f64;
            let loss: f64 = trace
                .output
                .rows()
                .into_iter()
                .zip(labels)
                .map(|(r, &l)| loss_r(r.as_slice().expect("contiguous"), l))
                .sum::<f64>()
                / b;
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch,
                    what: format!("best-response loss {loss}"),
                });
            }
            let g = cross_entropy_logit_grad(&trace.output, labels, 1.0 / b);
            eve.backward(&trace, g);
            opt.step(&mut eve);
            sum += loss * b;
            n += b;
        }
        curve.push(sum / n);
    }
    frozen.eve = eve;
    Ok((frozen, curve))
}
