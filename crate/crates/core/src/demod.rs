//! Energy-separation demodulation, single-channel and multichannel.
//!
//! For one band, the instantaneous frequency and amplitude follow from two
//! filtered energies, the band energy `Ψ` and the energy of the band derivative
//! `Ψ'`:
//!
//! ```text
//! ω[n] = sqrt(Ψ'[n] / Ψ[n])        a[n] = Ψ[n] / sqrt(Ψ'[n])
//! ```
//!
//! The single-channel baseline ([`esa_single`]) uses the self-pair energies of
//! one signal. Multichannel demodulation ([`mmd_demodulate`]) instead uses
//! cross energies of an ordered microphone pair, re-chosen in every medium
//! frame by [`select_pairs`]: the two channels with the lowest mean band energy
//! are the candidates, and the ordering with the lower mean cross energy wins.
//!
//! Both paths share [`repair_and_smooth`], which marks samples with a negative
//! or vanishing denominator as invalid, fills them from the nearest valid
//! neighbour, clips to `[0, π]` rad/sample and applies a 7-sample median.

use std::f64::consts::PI;
use std::ops::Range;

use rayon::prelude::*;

use crate::audio::{AudioBuffer, MultichannelAudio};
use crate::energy::{filtered_deriv_energy, filtered_deriv_energy_range, filtered_energy, filtered_energy_range, mean};
use crate::error::{Error, Result};
use crate::filterbank::{BandOutputs, Filterbank, GaborFilter};

/// Window over which the channel pair is held fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumFrameConfig {
    /// Seconds.
    pub frame_len: f64,
    /// Seconds.
    pub hop: f64,
}

impl Default for MediumFrameConfig {
    fn default() -> Self {
        Self {
            frame_len: 0.1,
            hop: 0.1,
        }
    }
}

impl MediumFrameConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.hop > 0.0 && self.hop <= self.frame_len && self.frame_len.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "medium frame needs 0 < hop <= frame_len, got hop={} frame_len={}",
                self.hop, self.frame_len
            )));
        }
        Ok(())
    }

    fn in_samples(&self, sample_rate: u32) -> (usize, usize) {
        let fs = f64::from(sample_rate);
        let len = ((self.frame_len * fs).round() as usize).max(1);
        let hop = ((self.hop * fs).round() as usize).clamp(1, len);
        (len, hop)
    }
}

/// Singularity handling applied before the frequency ratio is trusted.
///
/// A sample is invalid when the band energy is at most
/// `max(abs_floor, rel_floor · local mean |Ψ|)` or when the derivative energy
/// is not positive. The local mean runs over a centered window of
/// `floor_window` seconds; both floors scale with the signal, so the valid set
/// does not change when the input is rescaled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepairConfig {
    pub abs_floor: f64,
    pub rel_floor: f64,
    /// Seconds.
    pub floor_window: f64,
    /// Median filter length in samples (odd).
    pub median_len: usize,
}

impl Default for RepairConfig {
    fn default() -> Self {
        Self {
            abs_floor: 1e-12,
            rel_floor: 0.25,
            floor_window: 0.1,
            median_len: 7,
        }
    }
}

impl RepairConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_floor >= 0.0 && self.rel_floor >= 0.0 && self.floor_window > 0.0) {
            return Err(Error::InvalidConfig("repair floors must be non-negative".into()));
        }
        if self.median_len == 0 || self.median_len.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "median length {} must be odd",
                self.median_len
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemodSource {
    SingleChannel(usize),
    Mmd,
}

/// Instantaneous amplitude and frequency of one band.
#[derive(Debug, Clone, PartialEq)]
pub struct BandDemodulation {
    pub band_index: usize,
    pub amp: Vec<f64>,
    /// Hz.
    pub freq: Vec<f64>,
    pub sample_rate: u32,
    pub source: DemodSource,
}

impl BandDemodulation {
    pub fn len(&self) -> usize {
        self.freq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freq.is_empty()
    }
}

/// Pair chosen for one medium frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramePair {
    pub frame: usize,
    /// Samples this choice applies to.
    pub start: usize,
    pub end: usize,
    pub m_hat: usize,
    pub l_hat: usize,
    /// Frame mean of the cross energy for `(m_hat, l_hat)`.
    pub mean_energy: f64,
    /// Frame mean for the reversed ordering `(l_hat, m_hat)`.
    pub reversed_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairSelection {
    pub band_index: usize,
    pub frames: Vec<FramePair>,
}

/// Median filter with edge replication; `len` must be odd.
pub fn median_filter(x: &[f64], len: usize) -> Vec<f64> {
    let half = len / 2;
    let n = x.len();
    if n == 0 || half == 0 {
        return x.to_vec();
    }
    let mut window = Vec::with_capacity(len);
    (0..n)
        .map(|i| {
            window.clear();
            window.extend((0..len).map(|j| x[(i + j).saturating_sub(half).min(n - 1)]));
            let (_, m, _) = window.select_nth_unstable_by(half, f64::total_cmp);
            *m
        })
        .collect()
}

/// Centered moving mean of `|x|` over `win` samples, truncated at the edges.
fn local_abs_mean(x: &[f64], win: usize) -> Vec<f64> {
    let n = x.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in x {
        acc += v.abs();
        prefix.push(acc);
    }
    let half = win / 2;
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + win - half).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Turns raw band energies into clean frequency (Hz) and amplitude tracks.
///
/// `energy` is `Ψ` and `deriv_energy` is `Ψ'` for the band, sample-aligned.
pub fn repair_and_smooth(
    energy: &[f64],
    deriv_energy: &[f64],
    band: &GaborFilter,
    cfg: &RepairConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if energy.len() != deriv_energy.len() {
        return Err(Error::LengthMismatch {
            expected: energy.len(),
            found: deriv_energy.len(),
        });
    }
    let n = energy.len();
    let fs = f64::from(band.sample_rate());
    let win = ((cfg.floor_window * fs).round() as usize).max(1);
    let local = local_abs_mean(energy, win);

    let raw: Vec<Option<f64>> = (0..n)
        .map(|i| {
            let (den, num) = (energy[i], deriv_energy[i]);
            let floor = cfg.abs_floor.max(cfg.rel_floor * local[i]);
            let ok = den > floor && num > 0.0 && den.is_finite() && num.is_finite();
            ok.then(|| (num / den).sqrt()).filter(|w| w.is_finite())
        })
        .collect();

    let filled = fill_nearest(&raw, band.center_freq());
    let omega: Vec<f64> = filled.iter().map(|w| w.clamp(0.0, PI)).collect();

    let amp = (0..n)
        .map(|i| {
            let a = match raw[i] {
                Some(_) => energy[i] / deriv_energy[i].sqrt(),
                None if omega[i] > 0.0 => energy[i].max(0.0).sqrt() / omega[i],
                None => 0.0,
            };
            if a.is_finite() {
                a.max(0.0)
            } else {
                0.0
            }
        })
        .collect();

    let to_hz = fs / (2.0 * PI);
    let freq = median_filter(&omega, cfg.median_len)
        .into_iter()
        .map(|w| w * to_hz)
        .collect();
    Ok((freq, amp))
}

/// Replaces `None` with the nearest `Some` (earlier one on ties), or `fallback`.
fn fill_nearest(raw: &[Option<f64>], fallback: f64) -> Vec<f64> {
    let n = raw.len();
    let mut prev: Vec<Option<(usize, f64)>> = Vec::with_capacity(n);
    let mut last = None;
    for (i, v) in raw.iter().enumerate() {
        if let Some(v) = v {
            last = Some((i, *v));
        }
        prev.push(last);
    }
    let mut next = None;
    let mut out = vec![fallback; n];
    for i in (0..n).rev() {
        if let Some(v) = raw[i] {
            next = Some((i, v));
        }
        out[i] = match (prev[i], next) {
            (Some((p, pv)), Some((q, qv))) => {
                if i - p <= q - i {
                    pv
                } else {
                    qv
                }
            }
            (Some((_, v)), None) | (None, Some((_, v))) => v,
            (None, None) => fallback,
        };
    }
    out
}

fn check_length(len: usize, filter: &GaborFilter) -> Result<()> {
    if len < filter.len() {
        return Err(Error::TooShort {
            len,
            min: filter.len(),
        });
    }
    Ok(())
}

/// Single-channel Gabor-ESA in one band, with default repair settings.
pub fn esa_single(signal: &AudioBuffer, filter: &GaborFilter) -> Result<BandDemodulation> {
    esa_single_with(signal, filter, &RepairConfig::default())
}

pub fn esa_single_with(signal: &AudioBuffer, filter: &GaborFilter, repair: &RepairConfig) -> Result<BandDemodulation> {
    check_length(signal.len(), filter)?;
    let out = BandOutputs::compute(signal.samples(), filter);
    let energy = filtered_energy(&out, &out);
    let deriv = filtered_deriv_energy(&out, &out);
    let (freq, amp) = repair_and_smooth(&energy, &deriv, filter, repair)?;
    Ok(BandDemodulation {
        band_index: filter.band_index(),
        amp,
        freq,
        sample_rate: signal.sample_rate(),
        source: DemodSource::SingleChannel(0),
    })
}

/// Gabor-ESA of one channel in every band of `bank`.
pub fn esa_channel(
    audio: &MultichannelAudio,
    channel: usize,
    bank: &Filterbank,
    repair: &RepairConfig,
) -> Result<Vec<BandDemodulation>> {
    let signal = audio.channel(channel).ok_or_else(|| {
        Error::InvalidConfig(format!(
            "channel {channel} out of range for {} channels",
            audio.num_channels()
        ))
    })?;
    check_rate(signal.sample_rate(), bank)?;
    bank.filters()
        .par_iter()
        .map(|f| {
            let mut d = esa_single_with(signal, f, repair)?;
            d.source = DemodSource::SingleChannel(channel);
            Ok(d)
        })
        .collect()
}

fn check_rate(rate: u32, bank: &Filterbank) -> Result<()> {
    if rate != bank.sample_rate() {
        return Err(Error::RateMismatch {
            expected: bank.sample_rate(),
            found: rate,
        });
    }
    Ok(())
}

/// `(statistics window, applied segment)` for each medium frame.
fn medium_frames(n: usize, cfg: &MediumFrameConfig, sample_rate: u32) -> Vec<(Range<usize>, Range<usize>)> {
    let (len, hop) = cfg.in_samples(sample_rate);
    (0..n.div_ceil(hop))
        .map(|j| {
            let start = j * hop;
            (start..(start + len).min(n), start..(start + hop).min(n))
        })
        .collect()
}

fn select_from_outputs(
    outputs: &[BandOutputs],
    self_energy: &[Vec<f64>],
    frames: &[(Range<usize>, Range<usize>)],
    band_index: usize,
) -> PairSelection {
    let frames = frames
        .iter()
        .enumerate()
        .map(|(j, (stats, applied))| {
            let mut order: Vec<(f64, usize)> = self_energy
                .iter()
                .enumerate()
                .map(|(m, e)| (mean(&e[stats.clone()]), m))
                .collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let (m_bar, l_bar) = (order[0].1, order[1].1);
            let forward = mean(&filtered_energy_range(&outputs[m_bar], &outputs[l_bar], stats.clone()));
            let backward = mean(&filtered_energy_range(&outputs[l_bar], &outputs[m_bar], stats.clone()));
            let (m_hat, l_hat, mean_energy, reversed_mean) = if backward < forward {
                (l_bar, m_bar, backward, forward)
            } else {
                (m_bar, l_bar, forward, backward)
            };
            FramePair {
                frame: j,
                start: applied.start,
                end: applied.end,
                m_hat,
                l_hat,
                mean_energy,
                reversed_mean,
            }
        })
        .collect();
    PairSelection { band_index, frames }
}

fn band_outputs(audio: &MultichannelAudio, filter: &GaborFilter) -> (Vec<BandOutputs>, Vec<Vec<f64>>) {
    let outputs: Vec<BandOutputs> = audio
        .channels()
        .iter()
        .map(|c| BandOutputs::compute(c.samples(), filter))
        .collect();
    let self_energy = outputs.iter().map(|o| filtered_energy(o, o)).collect();
    (outputs, self_energy)
}

fn check_mmd(audio: &MultichannelAudio, cfg: &MediumFrameConfig) -> Result<()> {
    if audio.num_channels() < 2 {
        return Err(Error::NeedTwoChannels(audio.num_channels()));
    }
    cfg.validate()
}

/// Picks the ordered microphone pair with the lower mean cross energy among
/// the two lowest-energy channels, per medium frame.
pub fn select_pairs(audio: &MultichannelAudio, filter: &GaborFilter, cfg: &MediumFrameConfig) -> Result<PairSelection> {
    check_mmd(audio, cfg)?;
    let (outputs, self_energy) = band_outputs(audio, filter);
    let frames = medium_frames(audio.len(), cfg, audio.sample_rate());
    Ok(select_from_outputs(&outputs, &self_energy, &frames, filter.band_index()))
}

fn mmd_band(
    audio: &MultichannelAudio,
    filter: &GaborFilter,
    cfg: &MediumFrameConfig,
    repair: &RepairConfig,
) -> Result<(BandDemodulation, PairSelection)> {
    check_length(audio.len(), filter)?;
    let (outputs, self_energy) = band_outputs(audio, filter);
    let frames = medium_frames(audio.len(), cfg, audio.sample_rate());
    let selection = select_from_outputs(&outputs, &self_energy, &frames, filter.band_index());

    let mut energy = Vec::with_capacity(audio.len());
    let mut deriv = Vec::with_capacity(audio.len());
    for p in &selection.frames {
        let (a, b) = (&outputs[p.m_hat], &outputs[p.l_hat]);
        energy.extend(filtered_energy_range(a, b, p.start..p.end));
        deriv.extend(filtered_deriv_energy_range(a, b, p.start..p.end));
    }
    let (freq, amp) = repair_and_smooth(&energy, &deriv, filter, repair)?;
    let demod = BandDemodulation {
        band_index: filter.band_index(),
        amp,
        freq,
        sample_rate: audio.sample_rate(),
        source: DemodSource::Mmd,
    };
    Ok((demod, selection))
}

/// Multichannel multiband demodulation with default repair settings.
pub fn mmd_demodulate(
    audio: &MultichannelAudio,
    bank: &Filterbank,
    cfg: &MediumFrameConfig,
) -> Result<Vec<BandDemodulation>> {
    Ok(mmd_demodulate_with_pairs(audio, bank, cfg, &RepairConfig::default())?
        .into_iter()
        .map(|(d, _)| d)
        .collect())
}

/// Like [`mmd_demodulate`], also returning the pair chosen in every frame.
pub fn mmd_demodulate_with_pairs(
    audio: &MultichannelAudio,
    bank: &Filterbank,
    cfg: &MediumFrameConfig,
    repair: &RepairConfig,
) -> Result<Vec<(BandDemodulation, PairSelection)>> {
    check_mmd(audio, cfg)?;
    repair.validate()?;
    check_rate(audio.sample_rate(), bank)?;
    bank.filters()
        .par_iter()
        .map(|f| mmd_band(audio, f, cfg, repair))
        .collect()
}
