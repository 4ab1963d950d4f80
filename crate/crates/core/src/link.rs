//! Symbol-level Monte Carlo over one link: RF chain, fading channel, AWGN
//! and a detector. Shared by the sweep harness and the training monitor.

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;

use crate::autoenc::argmax;
use crate::autoenc::model::fill_decoder_input;
use crate::autoenc::nn::Mlp;
use crate::channel::{gen_channel, snr_to_sigma2, transmit_into, ChannelConfig, NoiseConfig};
use crate::equalize::{decide, DecoderKind};
use crate::error::{Error, Result};
use crate::impair::{apply_sample, draw_phases, ImpairmentConfig};
use crate::modem::{Constellation, SymbolIndex};

/// Error tallies; bit errors count differing bits of the message index.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ErrorCounts {
    pub symbols: u64,
    pub symbol_errors: u64,
    pub bits: u64,
    pub bit_errors: u64,
}

impl ErrorCounts {
    pub fn add(&mut self, other: ErrorCounts) {
        self.symbols += other.symbols;
        self.symbol_errors += other.symbol_errors;
        self.bits += other.bits;
        self.bit_errors += other.bit_errors;
    }

    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.bit_errors as f64 / self.bits as f64
        }
    }

    pub fn ser(&self) -> f64 {
        if self.symbols == 0 {
            0.0
        } else {
            self.symbol_errors as f64 / self.symbols as f64
        }
    }

    fn tally(&mut self, sent: SymbolIndex, got: SymbolIndex, bits_per_symbol: u32) {
        let diff = (sent.0 ^ got.0).count_ones() as u64;
        self.symbols += 1;
        self.bits += bits_per_symbol as u64;
        self.bit_errors += diff;
        self.symbol_errors += u64::from(diff != 0);
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Detector<'a> {
    /// Nominal QAM at the transmitter, textbook receiver with perfect CSI.
    Classical {
        kind: DecoderKind,
        constellation: &'a Constellation,
    },
    /// Learned transmit points and a softmax decoder fed `[y, h]`.
    Learned {
        points: &'a [Complex64],
        decoder: &'a Mlp,
    },
}

impl Detector<'_> {
    fn points(&self) -> &[Complex64] {
        match self {
            Detector::Classical { constellation, .. } => constellation.points(),
            Detector::Learned { points, .. } => points,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinkModel<'a> {
    pub impairments: &'a ImpairmentConfig,
    pub channel: &'a ChannelConfig,
    pub snr_db: f64,
    /// Symbol energy used for the SNR definition.
    pub es: f64,
}

impl LinkModel<'_> {
    /// Sends `messages` as one contiguous block of RF samples.
    pub fn run_block<R: Rng + ?Sized>(
        &self,
        messages: &[SymbolIndex],
        detector: &Detector<'_>,
        rng: &mut R,
    ) -> Result<ErrorCounts> {
        let points = detector.points();
        let order = points.len();
        if order < 2 || !order.is_power_of_two() {
            return Err(Error::UnsupportedOrder(order));
        }
        if let Some(m) = messages.iter().find(|m| m.0 >= order) {
            return Err(Error::SymbolOutOfRange { index: m.0, order });
        }
        let bps = order.trailing_zeros();
        let sigma2 = snr_to_sigma2(self.snr_db, self.es);
        let noise = NoiseConfig { sigma2 };
        let phases = draw_phases(messages.len(), self.impairments, rng)?;
        let n = self.channel.n_rx;
        let mut counts = ErrorCounts::default();
        let mut y = Vec::with_capacity(n);
        let mut learned_input = match detector {
            Detector::Learned { decoder, .. } => {
                if decoder.input_dim() != 4 * n || decoder.output_dim() != order {
                    return Err(Error::Dimension {
                        expected: 4 * n,
                        got: decoder.input_dim(),
                    });
                }
                Some(Array2::zeros((messages.len(), 4 * n)))
            }
            Detector::Classical { .. } => None,
        };
        for (i, (&m, &ph)) in messages.iter().zip(&phases).enumerate() {
            let x = apply_sample(points[m.0], self.impairments, ph);
            if !x.re.is_finite() || !x.im.is_finite() {
                return Err(Error::NonFinite {
                    stage: "rf chain",
                    index: i,
                });
            }
            let h = gen_channel(self.channel, rng).h;
            transmit_into(x, &h, noise, rng, &mut y);
            match (detector, learned_input.as_mut()) {
                (Detector::Classical { kind, constellation }, _) => {
                    let got = decide(*kind, &y, &h, sigma2, self.es, constellation)?;
                    counts.tally(m, got, bps);
                }
                (Detector::Learned { .. }, Some(input)) => {
                    fill_decoder_input(&y, &h, input.row_mut(i));
                }
                (Detector::Learned { .. }, None) => unreachable!("input allocated above"),
            }
        }
        if let (Detector::Learned { decoder, .. }, Some(input)) = (detector, learned_input) {
            let probs = decoder.predict(&input);
            for (row, &m) in probs.rows().into_iter().zip(messages) {
                let got = SymbolIndex(argmax(row.as_slice().expect("contiguous")));
                counts.tally(m, got, bps);
            }
        }
        Ok(counts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modem::build_qam;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn messages(n: usize, order: usize, seed: u64) -> Vec<SymbolIndex> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| SymbolIndex(rng.random_range(0..order))).collect()
    }

    #[test]
    fn high_snr_clean_link_is_error_free() {
        let c = build_qam(16).unwrap();
        let imp = ImpairmentConfig::disabled();
        let ch = ChannelConfig::default();
        let link = LinkModel {
            impairments: &imp,
            channel: &ch,
            snr_db: 60.0,
            es: 1.0,
        };
        let det = Detector::Classical {
            kind: DecoderKind::Ml,
            constellation: &c,
        };
        let counts = link
            .run_block(&messages(2000, 16, 1), &det, &mut ChaCha8Rng::seed_from_u64(2))
            .unwrap();
        assert_eq!(counts.symbols, 2000);
        assert_eq!(counts.bits, 8000);
        assert_eq!(counts.bit_errors, 0);
    }

    #[test]
    fn low_snr_has_errors_and_counts_are_consistent() {
        let c = build_qam(16).unwrap();
        let imp = ImpairmentConfig::default();
        let ch = ChannelConfig::default();
        let link = LinkModel {
            impairments: &imp,
            channel: &ch,
            snr_db: 0.0,
            es: 1.0,
        };
        let det = Detector::Classical {
            kind: DecoderKind::Zf,
            constellation: &c,
        };
        let counts = link
            .run_block(&messages(5000, 16, 3), &det, &mut ChaCha8Rng::seed_from_u64(4))
            .unwrap();
        assert!(counts.bit_errors > 0);
        assert!(counts.symbol_errors <= counts.bit_errors);
        assert!(counts.bit_errors <= 4 * counts.symbol_errors);
        assert!(counts.ber() <= 1.0);
    }

    #[test]
    fn rejects_out_of_range_message() {
        let c = build_qam(4).unwrap();
        let imp = ImpairmentConfig::disabled();
        let ch = ChannelConfig::default();
        let link = LinkModel {
            impairments: &imp,
            channel: &ch,
            snr_db: 10.0,
            es: 1.0,
        };
        let det = Detector::Classical {
            kind: DecoderKind::Ml,
            constellation: &c,
        };
        let r = link.run_block(&[SymbolIndex(4)], &det, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(r, Err(Error::SymbolOutOfRange { .. })));
    }
}
