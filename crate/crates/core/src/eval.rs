//! Synthetic evaluation of multichannel against single-channel demodulation.
//!
//! A sum of AM-FM resonances is copied to `M` channels, optionally convolved
//! with a per-channel room response, and corrupted by independent noise at a
//! target SNR. Both demodulators are scored by the RMS distance between their
//! MIF matrices and the MIF of the clean source.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::audio::{load_wav, mean_power, stack_channels, AudioBuffer};
use crate::demod::{esa_channel, esa_single_with, mmd_demodulate_with_pairs, MediumFrameConfig, RepairConfig};
use crate::error::{Error, Result};
use crate::features::{extract_mif, FeatureMatrix, FrameConfig};
use crate::filterbank::Filterbank;

/// One AM-FM component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    /// Hz.
    pub carrier: f64,
    pub am_depth: f64,
    /// Hz.
    pub am_rate: f64,
    /// Peak frequency deviation in Hz.
    pub fm_deviation: f64,
    /// Hz.
    pub fm_rate: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmFmSpec {
    pub resonances: Vec<Resonance>,
    /// Seconds.
    pub duration: f64,
    pub sample_rate: u32,
}

fn resonance(carrier: f64, amplitude: f64, fm_deviation: f64) -> Resonance {
    Resonance {
        carrier,
        am_depth: 0.3,
        am_rate: 4.0,
        fm_deviation,
        fm_rate: 5.0,
        amplitude,
    }
}

impl AmFmSpec {
    /// Open vowel with six resonances: the first three near /a/ formants
    /// plus weaker high ones.
    pub fn vowel(duration: f64, sample_rate: u32) -> Self {
        let resonances = [
            (730.0, 1.0, 30.0),
            (1090.0, 0.6, 50.0),
            (2440.0, 0.35, 80.0),
            (3500.0, 0.2, 100.0),
            (4500.0, 0.15, 120.0),
            (5500.0, 0.1, 120.0),
        ]
        .into_iter()
        .map(|(c, a, d)| resonance(c, a, d))
        .collect();
        Self {
            resonances,
            duration,
            sample_rate,
        }
    }

    /// High-band carriers with fast, deep envelopes and wide deviations.
    pub fn fricative(duration: f64, sample_rate: u32) -> Self {
        let nyq = f64::from(sample_rate) / 2.0;
        let resonances = [(0.5, 1.0, 300.0), (0.6, 0.8, 350.0), (0.7, 0.6, 400.0)]
            .into_iter()
            .map(|(frac, amplitude, fm_deviation)| Resonance {
                carrier: frac * nyq,
                am_depth: 0.8,
                am_rate: 37.0,
                fm_deviation,
                fm_rate: 23.0,
                amplitude,
            })
            .collect();
        Self {
            resonances,
            duration,
            sample_rate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nyq = f64::from(self.sample_rate) / 2.0;
        if self.sample_rate == 0 {
            return Err(Error::ZeroSampleRate);
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) || self.resonances.is_empty() {
            return Err(Error::InvalidConfig("AM-FM spec needs a positive duration and a resonance".into()));
        }
        for r in &self.resonances {
            let ok = r.carrier > 0.0
                && r.fm_deviation >= 0.0
                && r.carrier + r.fm_deviation < nyq
                && (0.0..1.0).contains(&r.am_depth)
                && r.am_rate >= 0.0
                && (r.fm_rate > 0.0 || r.fm_deviation == 0.0)
                && r.amplitude.is_finite();
            if !ok {
                return Err(Error::InvalidConfig(format!("invalid resonance {r:?}")));
            }
        }
        Ok(())
    }

    pub fn num_samples(&self) -> usize {
        (self.duration * f64::from(self.sample_rate)).round() as usize
    }
}

/// Renders the source and the true frequency track (Hz) of each resonance.
pub fn synthesize_amfm(spec: &AmFmSpec) -> Result<(AudioBuffer, Vec<Vec<f64>>)> {
    spec.validate()?;
    let n = spec.num_samples();
    let fs = f64::from(spec.sample_rate);
    let mut signal = vec![0.0; n];
    let mut truth = Vec::with_capacity(spec.resonances.len());
    for r in &spec.resonances {
        let beta = if r.fm_deviation == 0.0 { 0.0 } else { r.fm_deviation / r.fm_rate };
        let mut track = Vec::with_capacity(n);
        for (i, s) in signal.iter_mut().enumerate() {
            let t = i as f64 / fs;
            let env = r.amplitude * (1.0 + r.am_depth * (2.0 * PI * r.am_rate * t).cos());
            *s += env * (2.0 * PI * r.carrier * t + beta * (2.0 * PI * r.fm_rate * t).sin()).cos();
            track.push(r.carrier + r.fm_deviation * (2.0 * PI * r.fm_rate * t).cos());
        }
        truth.push(track);
    }
    Ok((AudioBuffer::new(signal, spec.sample_rate)?, truth))
}

/// Adds a segment of `noise`, starting at a seed-chosen offset and tiled as
/// needed, scaled so the mixture has the requested SNR.
pub fn add_noise_at_snr(clean: &AudioBuffer, noise: &AudioBuffer, snr_db: f64, seed: u64) -> Result<AudioBuffer> {
    if clean.sample_rate() != noise.sample_rate() {
        return Err(Error::RateMismatch {
            expected: clean.sample_rate(),
            found: noise.sample_rate(),
        });
    }
    if noise.is_empty() {
        return Err(Error::EmptyAudio);
    }
    mix_at_snr(clean, &noise_segment(noise, clean.len(), seed), snr_db)
}

fn noise_segment(noise: &AudioBuffer, n: usize, seed: u64) -> Vec<f64> {
    let offset = ChaCha8Rng::seed_from_u64(seed).random_range(0..noise.len());
    (0..n).map(|i| noise.samples()[(offset + i) % noise.len()]).collect()
}

fn mix_at_snr(clean: &AudioBuffer, noise: &[f64], snr_db: f64) -> Result<AudioBuffer> {
    let (p_clean, p_noise) = (clean.power(), mean_power(noise));
    if p_clean == 0.0 || p_noise == 0.0 {
        return Err(Error::SilentSignal);
    }
    let g = (p_clean / (p_noise * 10f64.powf(snr_db / 10.0))).sqrt();
    let mixed = clean.samples().iter().zip(noise).map(|(s, u)| s + g * u).collect();
    AudioBuffer::new(mixed, clean.sample_rate())
}

/// Convolves with a room response whose strongest tap is moved to lag 0,
/// keeping the input length.
pub fn apply_rir(signal: &AudioBuffer, rir: &AudioBuffer) -> Result<AudioBuffer> {
    if signal.sample_rate() != rir.sample_rate() {
        return Err(Error::RateMismatch {
            expected: signal.sample_rate(),
            found: rir.sample_rate(),
        });
    }
    if rir.is_empty() {
        return Err(Error::EmptyAudio);
    }
    let h = rir.samples();
    let x = signal.samples();
    let peak = h
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if v.abs() > h[best].abs() { i } else { best });
    let out = (0..x.len())
        .map(|n| {
            // y[n] = Σ_k h[k]·x[n + peak − k]
            let lo = (n + peak + 1).saturating_sub(x.len());
            let hi = (n + peak).min(h.len() - 1);
            (lo..=hi).map(|k| h[k] * x[n + peak - k]).sum()
        })
        .collect();
    AudioBuffer::new(out, signal.sample_rate())
}

/// Pooled RMS difference over all frames and bands, in Hz.
pub fn freq_rms_error(estimated: &FeatureMatrix, reference: &FeatureMatrix) -> Result<f64> {
    if (estimated.rows(), estimated.cols()) != (reference.rows(), reference.cols()) {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} against {}x{}",
            estimated.rows(),
            estimated.cols(),
            reference.rows(),
            reference.cols()
        )));
    }
    let n = estimated.data().len();
    if n == 0 {
        return Err(Error::ShapeMismatch("empty feature matrix".into()));
    }
    let sse: f64 = estimated
        .data()
        .iter()
        .zip(reference.data())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    Ok((sse / n as f64).sqrt())
}

pub fn relative_reduction(single: f64, mmd: f64) -> f64 {
    if single > 0.0 {
        100.0 * (single - mmd) / single
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSource {
    WhiteGaussian,
    Wav(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub num_channels: usize,
    pub snr_db_list: Vec<f64>,
    pub trials: usize,
    /// One response per channel.
    pub rir_paths: Option<Vec<PathBuf>>,
    pub noise: NoiseSource,
    /// Fraction of noise power shared by all channels, in `[0, 1]`.
    pub correlated_noise: f64,
    /// Channel fed to the single-channel baseline.
    pub reference_channel: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            num_channels: 3,
            snr_db_list: vec![20.0, 10.0, 0.0, -5.0, -10.0],
            trials: 20,
            rir_paths: None,
            noise: NoiseSource::WhiteGaussian,
            correlated_noise: 0.0,
            reference_channel: 0,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_channels < 2 {
            return Err(Error::NeedTwoChannels(self.num_channels));
        }
        if self.trials == 0 || self.snr_db_list.is_empty() {
            return Err(Error::InvalidConfig("scenario needs at least one trial and one SNR".into()));
        }
        if self.snr_db_list.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidConfig("SNR values must be finite".into()));
        }
        if !(0.0..=1.0).contains(&self.correlated_noise) {
            return Err(Error::InvalidConfig(format!(
                "correlated noise fraction {} outside [0, 1]",
                self.correlated_noise
            )));
        }
        if self.reference_channel >= self.num_channels {
            return Err(Error::InvalidConfig(format!(
                "reference channel {} out of range",
                self.reference_channel
            )));
        }
        if let Some(r) = &self.rir_paths {
            if r.len() != self.num_channels {
                return Err(Error::LengthMismatch {
                    expected: self.num_channels,
                    found: r.len(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    pub snr_db: f64,
    pub trial: usize,
    pub rms_single: f64,
    pub rms_mmd: f64,
    pub relative_reduction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrAggregate {
    pub snr_db: f64,
    /// Mean relative reduction in percent.
    pub mean: f64,
    /// Sample standard deviation of the relative reduction.
    pub std: f64,
    pub n: usize,
    pub mean_rms_single: f64,
    pub mean_rms_mmd: f64,
}

impl SnrAggregate {
    pub fn std_error(&self) -> f64 {
        self.std / (self.n as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub trials: Vec<TrialResult>,
    pub aggregates: Vec<SnrAggregate>,
}

impl EvalResult {
    pub fn aggregate(&self, snr_db: f64) -> Option<&SnrAggregate> {
        self.aggregates.iter().find(|a| a.snr_db == snr_db)
    }

    pub fn write_trials_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["snr_db", "trial", "rms_single_hz", "rms_mmd_hz", "rel_reduction_pct"])?;
        for t in &self.trials {
            w.write_record([
                t.snr_db.to_string(),
                t.trial.to_string(),
                t.rms_single.to_string(),
                t.rms_mmd.to_string(),
                t.relative_reduction.to_string(),
            ])?;
        }
        w.flush()
    }

    pub fn write_aggregate_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["snr_db", "mean", "std", "n"])?;
        for a in &self.aggregates {
            w.write_record([a.snr_db.to_string(), a.mean.to_string(), a.std.to_string(), a.n.to_string()])?;
        }
        w.flush()
    }
}

/// Independent stream per `(seed, snr index, trial, channel)`.
fn derive_seed(seed: u64, parts: [u64; 3]) -> u64 {
    // splitmix64 finalizer over each component in turn.
    parts.iter().fold(seed ^ 0x9e37_79b9_7f4a_7c15, |acc, p| {
        let mut z = acc.wrapping_add(p.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    })
}

fn gaussian(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn load_mono(path: &Path) -> Result<AudioBuffer> {
    let audio = load_wav(path)?;
    Ok(audio.into_channels().swap_remove(0))
}

/// Runs every (SNR, trial) cell; results do not depend on thread count.
pub fn run_scenario(
    spec: &AmFmSpec,
    cfg: &ScenarioConfig,
    bank: &Filterbank,
    mcfg: &MediumFrameConfig,
    fcfg: &FrameConfig,
) -> Result<EvalResult> {
    cfg.validate()?;
    mcfg.validate()?;
    fcfg.validate()?;
    if spec.sample_rate != bank.sample_rate() {
        return Err(Error::RateMismatch {
            expected: bank.sample_rate(),
            found: spec.sample_rate,
        });
    }
    let repair = RepairConfig::default();
    let (source, _) = synthesize_amfm(spec)?;

    let reference: Vec<_> = bank
        .filters()
        .iter()
        .map(|f| esa_single_with(&source, f, &repair))
        .collect::<Result<_>>()?;
    let reference = extract_mif(&reference, fcfg)?;

    let clean_channels: Vec<AudioBuffer> = match &cfg.rir_paths {
        Some(paths) => paths
            .iter()
            .map(|p| apply_rir(&source, &load_mono(p)?))
            .collect::<Result<_>>()?,
        None => vec![source.clone(); cfg.num_channels],
    };
    let noise_recording = match &cfg.noise {
        NoiseSource::WhiteGaussian => None,
        NoiseSource::Wav(p) => {
            let rec = load_mono(p)?;
            if rec.sample_rate() != spec.sample_rate {
                return Err(Error::RateMismatch {
                    expected: spec.sample_rate,
                    found: rec.sample_rate(),
                });
            }
            if rec.is_empty() {
                return Err(Error::EmptyAudio);
            }
            Some(rec)
        }
    };

    let cells: Vec<(usize, usize)> = (0..cfg.snr_db_list.len())
        .flat_map(|s| (0..cfg.trials).map(move |t| (s, t)))
        .collect();
    let trials: Vec<TrialResult> = cells
        .par_iter()
        .map(|&(s, t)| {
            let snr_db = cfg.snr_db_list[s];
            let n = source.len();
            let common = gaussian(derive_seed(cfg.seed, [s as u64, t as u64, u64::MAX]), n);
            let rho = cfg.correlated_noise;
            let channels = clean_channels
                .iter()
                .enumerate()
                .map(|(m, clean)| {
                    let ch_seed = derive_seed(cfg.seed, [s as u64, t as u64, m as u64]);
                    let own = match &noise_recording {
                        None => gaussian(ch_seed, n),
                        Some(rec) => noise_segment(rec, n, ch_seed),
                    };
                    let noise: Vec<f64> = if rho > 0.0 {
                        own.iter()
                            .zip(&common)
                            .map(|(u, c)| (1.0 - rho).sqrt() * u + rho.sqrt() * c)
                            .collect()
                    } else {
                        own
                    };
                    mix_at_snr(clean, &noise, snr_db)
                })
                .collect::<Result<Vec<_>>>()?;
            let audio = stack_channels(channels)?;

            let single = esa_channel(&audio, cfg.reference_channel, bank, &repair)?;
            let mmd: Vec<_> = mmd_demodulate_with_pairs(&audio, bank, mcfg, &repair)?
                .into_iter()
                .map(|(d, _)| d)
                .collect();
            let rms_single = freq_rms_error(&extract_mif(&single, fcfg)?, &reference)?;
            let rms_mmd = freq_rms_error(&extract_mif(&mmd, fcfg)?, &reference)?;
            Ok(TrialResult {
                snr_db,
                trial: t,
                rms_single,
                rms_mmd,
                relative_reduction: relative_reduction(rms_single, rms_mmd),
            })
        })
        .collect::<Result<_>>()?;

    let aggregates = cfg
        .snr_db_list
        .iter()
        .enumerate()
        .map(|(s, &snr_db)| {
            let cell = &trials[s * cfg.trials..(s + 1) * cfg.trials];
            let n = cell.len() as f64;
            let mean = cell.iter().map(|t| t.relative_reduction).sum::<f64>() / n;
            let var = if cell.len() > 1 {
                cell.iter().map(|t| (t.relative_reduction - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            SnrAggregate {
                snr_db,
                mean,
                std: var.sqrt(),
                n: cell.len(),
                mean_rms_single: cell.iter().map(|t| t.rms_single).sum::<f64>() / n,
                mean_rms_mmd: cell.iter().map(|t| t.rms_mmd).sum::<f64>() / n,
            }
        })
        .collect();
    Ok(EvalResult { trials, aggregates })
}
