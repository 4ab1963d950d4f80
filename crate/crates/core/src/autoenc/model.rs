//! The wiretap autoencoder: one encoder, a legitimate and an eavesdropper
//! decoder, and the differentiable path between them.
//!
//! Forward: one-hot message -> encoder -> power normalisation -> RF chain
//! (frozen phase realisation) -> `y = h x + n` on two independent links ->
//! decoders fed `[Re y, Im y, Re h, Im h]` -> softmax. Channels, noise and
//! oscillator phases are sampled once per batch and treated as constants
//! by the backward pass.

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::loss::{loss_e, loss_r, SoftOutput, PROB_FLOOR};
#[cfg(test)]
use super::loss::argmax;
use super::nn::{Activation, LayerSpec, Mlp, MlpTrace};
use crate::channel::{complex_gaussian, gen_channel, snr_to_sigma2, ChannelConfig};
use crate::error::{Error, Result};
use crate::impair::{apply_sample, chain_jacobian, draw_phases, ImpairmentConfig, Jacobian, SamplePhases};
use crate::modem::SymbolIndex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub encoder_hidden: Vec<usize>,
    pub decoder_hidden: Vec<usize>,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            encoder_hidden: vec![64, 64],
            decoder_hidden: vec![128, 128],
        }
    }
}

/// Trainable parameters of the whole system.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetParams {
    pub order: usize,
    pub n_rx: usize,
    pub power_limit: f64,
    pub encoder: Mlp,
    pub legit: Mlp,
    pub eve: Mlp,
    /// Normalisation constant frozen after training; `None` while training.
    pub norm_scale: Option<f64>,
}

pub fn decoder_specs(order: usize, n_rx: usize, hidden: &[usize]) -> Vec<LayerSpec> {
    LayerSpec::stack(4 * n_rx, hidden, order, Activation::Softmax)
}

impl NetParams {
    pub fn new<R: Rng + ?Sized>(
        order: usize,
        n_rx: usize,
        power_limit: f64,
        arch: &Architecture,
        rng: &mut R,
    ) -> Result<Self> {
        if order < 2 || n_rx == 0 || !(power_limit > 0.0) {
            return Err(Error::InvalidConfig(
                "autoencoder needs M >= 2, n_rx >= 1 and P_T > 0".into(),
            ));
        }
        let encoder = Mlp::new(
            &LayerSpec::stack(order, &arch.encoder_hidden, 2, Activation::Identity),
            rng,
        )?;
        let legit = Mlp::new(&decoder_specs(order, n_rx, &arch.decoder_hidden), rng)?;
        let eve = Mlp::new(&decoder_specs(order, n_rx, &arch.decoder_hidden), rng)?;
        Ok(Self {
            order,
            n_rx,
            power_limit,
            encoder,
            legit,
            eve,
            norm_scale: None,
        })
    }

    pub fn zero_grad(&mut self) {
        self.encoder.zero_grad();
        self.legit.zero_grad();
        self.eve.zero_grad();
    }

    /// Unnormalised encoder output for every message.
    pub fn raw_points(&self) -> Vec<Complex64> {
        let z = self.encoder.predict(&Array2::eye(self.order));
        z.rows()
            .into_iter()
            .map(|r| Complex64::new(r[0], r[1]))
            .collect()
    }

    /// Scale giving mean power `P_T` over uniformly drawn messages.
    pub fn calibration_scale(&self) -> f64 {
        let pts = self.raw_points();
        let m = pts.iter().map(|p| p.norm_sqr()).sum::<f64>() / pts.len() as f64;
        (self.power_limit / m).sqrt()
    }

    pub fn calibrate(&mut self) {
        self.norm_scale = Some(self.calibration_scale());
    }

    pub fn scale(&self) -> f64 {
        self.norm_scale
            .unwrap_or_else(|| self.calibration_scale())
    }

    /// Evaluation-mode transmit symbols indexed by message.
    pub fn constellation(&self) -> Vec<Complex64> {
        let s = self.scale();
        self.raw_points().into_iter().map(|p| p * s).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.encoder.is_finite() && self.legit.is_finite() && self.eve.is_finite()
    }
}

/// Evaluation-mode encoding of one message.
pub fn encode(message: SymbolIndex, params: &NetParams) -> Result<Complex64> {
    if message.0 >= params.order {
        return Err(Error::SymbolOutOfRange {
            index: message.0,
            order: params.order,
        });
    }
    let mut onehot = Array2::zeros((1, params.order));
    onehot[(0, message.0)] = 1.0;
    let z = params.encoder.predict(&onehot);
    let x = Complex64::new(z[(0, 0)], z[(0, 1)]) * params.scale();
    if !x.re.is_finite() || !x.im.is_finite() {
        return Err(Error::NonFinite {
            stage: "encoder",
            index: message.0,
        });
    }
    Ok(x)
}

/// Writes `[Re y, Im y, Re h, Im h]` into `row`.
pub fn fill_decoder_input(y: &[Complex64], h: &[Complex64], mut row: ndarray::ArrayViewMut1<f64>) {
    let n = h.len();
    for k in 0..n {
        row[k] = y[k].re;
        row[n + k] = y[k].im;
        row[2 * n + k] = h[k].re;
        row[3 * n + k] = h[k].im;
    }
}

pub fn decode(y: &[Complex64], h: &[Complex64], decoder: &Mlp) -> Result<SoftOutput> {
    let want = decoder.input_dim();
    if y.len() != h.len() || 4 * y.len() != want {
        return Err(Error::Dimension {
            expected: want,
            got: 2 * (y.len() + h.len()),
        });
    }
    let mut input = Array2::zeros((1, want));
    fill_decoder_input(y, h, input.row_mut(0));
    let p = decoder.predict(&input);
    SoftOutput::new(p.row(0).to_vec())
}

/// Per-sample SNR during a forward pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SnrDraw {
    /// Uniform in dB over `[lo, hi]`.
    Uniform(f64, f64),
    Fixed(f64),
}

impl SnrDraw {
    fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            SnrDraw::Uniform(lo, hi) if hi > lo => rng.random_range(lo..=hi),
            SnrDraw::Uniform(lo, _) => lo,
            SnrDraw::Fixed(v) => v,
        }
    }
}

/// Everything between the encoder and the decoders.
#[derive(Debug, Clone, Copy)]
pub struct Scenario<'a> {
    pub impairments: &'a ImpairmentConfig,
    pub channel: &'a ChannelConfig,
    pub snr: SnrDraw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerNorm {
    /// Rescale so the batch itself has mean power `P_T` (training).
    Batch,
    /// Use the frozen calibration constant (evaluation).
    Frozen,
}

/// Encoder pass with power normalisation.
#[derive(Debug, Clone)]
pub struct EncodeTrace {
    pub trace: MlpTrace,
    pub scale: f64,
    pub mean_power: f64,
    pub norm: PowerNorm,
    pub x: Vec<Complex64>,
}

pub fn encode_batch(messages: &[SymbolIndex], params: &NetParams, norm: PowerNorm) -> Result<EncodeTrace> {
    let b = messages.len();
    let mut onehot = Array2::zeros((b, params.order));
    for (i, m) in messages.iter().enumerate() {
        if m.0 >= params.order {
            return Err(Error::SymbolOutOfRange {
                index: m.0,
                order: params.order,
            });
        }
        onehot[(i, m.0)] = 1.0;
    }
    let trace = params.encoder.forward(&onehot);
    let z = &trace.output;
    let mean_power = z.map_axis(Axis(1), |r| r[0] * r[0] + r[1] * r[1]).mean().unwrap_or(0.0);
    let scale = match norm {
        PowerNorm::Batch => (params.power_limit / mean_power).sqrt(),
        PowerNorm::Frozen => params.scale(),
    };
    let x: Vec<Complex64> = z
        .rows()
        .into_iter()
        .map(|r| Complex64::new(r[0], r[1]) * scale)
        .collect();
    if let Some(index) = x.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite {
            stage: "encoder",
            index,
        });
    }
    Ok(EncodeTrace {
        trace,
        scale,
        mean_power,
        norm,
        x,
    })
}

/// One sampled pass through chain and both channels.
#[derive(Debug, Clone)]
pub struct Propagation {
    pub phases: Vec<SamplePhases>,
    pub x_imp: Vec<Complex64>,
    /// Chain Jacobian at each transmitted symbol.
    pub jacobians: Vec<Jacobian>,
    pub h_legit: Vec<Vec<Complex64>>,
    pub h_eve: Vec<Vec<Complex64>>,
    pub sigma2: Vec<f64>,
    pub input_legit: Array2<f64>,
    pub input_eve: Array2<f64>,
}

/// Channel and noise seen by one receiver for one symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkDraw {
    pub h: Vec<Complex64>,
    pub noise: Vec<Complex64>,
}

/// Every random quantity one symbol meets after the encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub phases: SamplePhases,
    pub sigma2: f64,
    pub legit: LinkDraw,
    pub eve: LinkDraw,
}

/// Draw order: chain phases for the whole block, then per sample the SNR,
/// legitimate channel and noise, eavesdropper channel and noise.
pub fn draw_realizations<R: Rng + ?Sized>(len: usize, scen: &Scenario<'_>, rng: &mut R) -> Result<Vec<Realization>> {
    let phases = draw_phases(len, scen.impairments, rng)?;
    let n = scen.channel.n_rx;
    let link = |rng: &mut R, s2: f64| {
        let h = gen_channel(scen.channel, rng).h;
        let noise = (0..n)
            .map(|_| {
                if s2 > 0.0 {
                    complex_gaussian(rng, s2)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        LinkDraw { h, noise }
    };
    Ok(phases
        .into_iter()
        .map(|ph| {
            let sigma2 = snr_to_sigma2(scen.snr.sample(rng), 1.0);
            let legit = link(rng, sigma2);
            let eve = link(rng, sigma2);
            Realization {
                phases: ph,
                sigma2,
                legit,
                eve,
            }
        })
        .collect())
}

pub fn propagate<R: Rng + ?Sized>(x: &[Complex64], scen: &Scenario<'_>, rng: &mut R) -> Result<Propagation> {
    let draws = draw_realizations(x.len(), scen, rng)?;
    let refs: Vec<&Realization> = draws.iter().collect();
    propagate_with(x, &refs, scen.impairments)
}

/// Sends `x[i]` through realisation `draws[i]`.
pub fn propagate_with(x: &[Complex64], draws: &[&Realization], imp: &ImpairmentConfig) -> Result<Propagation> {
    if draws.len() != x.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: draws.len(),
        });
    }
    let b = x.len();
    let n = draws.first().map_or(0, |d| d.legit.h.len());
    let phases: Vec<SamplePhases> = draws.iter().map(|d| d.phases).collect();
    let x_imp: Vec<Complex64> = x
        .iter()
        .zip(&phases)
        .map(|(&v, &ph)| apply_sample(v, imp, ph))
        .collect();
    if let Some(index) = x_imp.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite {
            stage: "rf chain",
            index,
        });
    }
    let jacobians = x
        .iter()
        .zip(&phases)
        .map(|(&v, &ph)| chain_jacobian(v, imp, ph))
        .collect();
    let mut h_legit = Vec::with_capacity(b);
    let mut h_eve = Vec::with_capacity(b);
    let mut sigma2 = Vec::with_capacity(b);
    let mut input_legit = Array2::zeros((b, 4 * n));
    let mut input_eve = Array2::zeros((b, 4 * n));
    let mut y = Vec::with_capacity(n);
    for (i, (&xi, d)) in x_imp.iter().zip(draws).enumerate() {
        for (hs, input, link) in [
            (&mut h_legit, &mut input_legit, &d.legit),
            (&mut h_eve, &mut input_eve, &d.eve),
        ] {
            y.clear();
            y.extend(link.h.iter().zip(&link.noise).map(|(hk, nk)| hk * xi + nk));
            fill_decoder_input(&y, &link.h, input.row_mut(i));
            hs.push(link.h.clone());
        }
        sigma2.push(d.sigma2);
    }
    Ok(Propagation {
        phases,
        x_imp,
        jacobians,
        h_legit,
        h_eve,
        sigma2,
        input_legit,
        input_eve,
    })
}

/// Intermediates of [`forward_batch`] kept for [`backward_batch`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub encoded: EncodeTrace,
    pub prop: Propagation,
    pub legit_trace: MlpTrace,
    pub eve_trace: MlpTrace,
}

impl ForwardCache {
    /// Legitimate decoder probabilities, one row per message.
    pub fn legit(&self) -> &Array2<f64> {
        &self.legit_trace.output
    }

    pub fn eve(&self) -> &Array2<f64> {
        &self.eve_trace.output
    }
}

pub fn forward_batch<R: Rng + ?Sized>(
    messages: &[SymbolIndex],
    scen: &Scenario<'_>,
    rng: &mut R,
    params: &NetParams,
    norm: PowerNorm,
) -> Result<ForwardCache> {
    let encoded = encode_batch(messages, params, norm)?;
    let prop = propagate(&encoded.x, scen, rng)?;
    let legit_trace = params.legit.forward(&prop.input_legit);
    let eve_trace = params.eve.forward(&prop.input_eve);
    Ok(ForwardCache {
        encoded,
        prop,
        legit_trace,
        eve_trace,
    })
}

/// [`forward_batch`] over pre-drawn realisations.
pub fn forward_with(
    messages: &[SymbolIndex],
    draws: &[&Realization],
    imp: &ImpairmentConfig,
    params: &NetParams,
    norm: PowerNorm,
) -> Result<ForwardCache> {
    let encoded = encode_batch(messages, params, norm)?;
    let prop = propagate_with(&encoded.x, draws, imp)?;
    let legit_trace = params.legit.forward(&prop.input_legit);
    let eve_trace = params.eve.forward(&prop.input_eve);
    Ok(ForwardCache {
        encoded,
        prop,
        legit_trace,
        eve_trace,
    })
}

/// Batch-mean losses.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossParts {
    pub total: f64,
    /// Mean legitimate cross-entropy (bits).
    pub legit: f64,
    /// Mean eavesdropper `sum P ln P`.
    pub eve: f64,
}

pub fn batch_loss(cache: &ForwardCache, labels: &[SymbolIndex], alpha: f64) -> LossParts {
    let b = labels.len() as f64;
    let legit = cache
        .legit()
        .rows()
        .into_iter()
        .zip(labels)
        .map(|(r, &l)| loss_r(r.as_slice().expect("contiguous"), l))
        .sum::<f64>()
        / b;
    let eve = cache
        .eve()
        .rows()
        .into_iter()
        .map(|r| loss_e(r.as_slice().expect("contiguous")))
        .sum::<f64>()
        / b;
    LossParts {
        total: alpha * legit + (1.0 - alpha) * eve,
        legit,
        eve,
    }
}

/// `d L_r / d logits` for softmax outputs `p`, scaled by `weight`.
pub(crate) fn cross_entropy_logit_grad(p: &Array2<f64>, labels: &[SymbolIndex], weight: f64) -> Array2<f64> {
    let mut g = p * (weight / std::f64::consts::LN_2);
    for (i, l) in labels.iter().enumerate() {
        g[(i, l.0)] -= weight / std::f64::consts::LN_2;
    }
    g
}

/// `d/dz_k sum_i P_i ln P_i = P_k (ln P_k - sum_i P_i ln P_i)`, scaled.
fn entropy_logit_grad(p: &Array2<f64>, weight: f64) -> Array2<f64> {
    let mut g = Array2::zeros(p.dim());
    for (mut gr, pr) in g.rows_mut().into_iter().zip(p.rows()) {
        let le: f64 = pr.iter().map(|&v| v * v.max(PROB_FLOOR).ln()).sum();
        for (gk, &pk) in gr.iter_mut().zip(pr.iter()) {
            *gk = weight * pk * (pk.max(PROB_FLOOR).ln() - le);
        }
    }
    g
}

/// Gradient of a decoder-input batch w.r.t. the transmitted symbols.
fn pull_back_channel(grad_in: &Array2<f64>, hs: &[Vec<Complex64>], out: &mut [Complex64]) {
    for ((row, h), acc) in grad_in.rows().into_iter().zip(hs).zip(out.iter_mut()) {
        let n = h.len();
        for (k, hk) in h.iter().enumerate() {
            let (gr, gi) = (row[k], row[n + k]);
            // y_k = h_k x: dRe/dRe x = Re h, dIm/dRe x = Im h, dRe/dIm x = -Im h, dIm/dIm x = Re h
            acc.re += gr * hk.re + gi * hk.im;
            acc.im += -gr * hk.im + gi * hk.re;
        }
    }
}

/// Accumulates `d L_total / d theta` for all three networks and returns the
/// batch losses. `L_total = alpha L_r + (1 - alpha) L_e`, batch-averaged.
pub fn backward_batch(
    cache: &ForwardCache,
    labels: &[SymbolIndex],
    alpha: f64,
    params: &mut NetParams,
) -> Result<LossParts> {
    let b = labels.len();
    if b != cache.encoded.x.len() {
        return Err(Error::Dimension {
            expected: cache.encoded.x.len(),
            got: b,
        });
    }
    let losses = batch_loss(cache, labels, alpha);
    let inv_b = 1.0 / b as f64;

    let g_legit = cross_entropy_logit_grad(cache.legit(), labels, alpha * inv_b);
    let g_eve = entropy_logit_grad(cache.eve(), (1.0 - alpha) * inv_b);
    let din_legit = params.legit.backward(&cache.legit_trace, g_legit);
    let din_eve = params.eve.backward(&cache.eve_trace, g_eve);

    let mut g_imp = vec![Complex64::new(0.0, 0.0); b];
    pull_back_channel(&din_legit, &cache.prop.h_legit, &mut g_imp);
    pull_back_channel(&din_eve, &cache.prop.h_eve, &mut g_imp);

    // through the frozen RF chain
    let g_x: Vec<Complex64> = g_imp
        .iter()
        .zip(&cache.prop.jacobians)
        .map(|(&g, j)| j.transpose_apply(g))
        .collect();

    let enc = &cache.encoded;
    let z = &enc.trace.output;
    let s = enc.scale;
    let mut dz = Array2::zeros(z.dim());
    match enc.norm {
        PowerNorm::Frozen => {
            for (i, g) in g_x.iter().enumerate() {
                dz[(i, 0)] = s * g.re;
                dz[(i, 1)] = s * g.im;
            }
        }
        PowerNorm::Batch => {
            // x = s z, s = sqrt(P / m), m = mean |z|^2
            let dot: f64 = g_x
                .iter()
                .zip(z.rows())
                .map(|(g, r)| g.re * r[0] + g.im * r[1])
                .sum();
            let c = s * dot / (b as f64 * enc.mean_power);
            for (i, g) in g_x.iter().enumerate() {
                dz[(i, 0)] = s * g.re - c * z[(i, 0)];
                dz[(i, 1)] = s * g.im - c * z[(i, 1)];
            }
        }
    }
    params.encoder.backward(&enc.trace, dz);

    if !(params.encoder.grads_finite() && params.legit.grads_finite() && params.eve.grads_finite()) {
        return Err(Error::NonFinite {
            stage: "gradients",
            index: 0,
        });
    }
    Ok(losses)
}
