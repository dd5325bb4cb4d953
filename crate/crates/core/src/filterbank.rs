//! Mel-spaced Gabor filterbank.
//!
//! Each band uses the prototype `g(t) = exp(-α²t²)·cos(ω_c t)` with `t` in
//! samples. The kernel and its first three time derivatives are evaluated in
//! closed form and then sampled, so the derivative kernels carry no
//! finite-difference error. All four kernels of a band share one gain that
//! gives `g` a unit magnitude response at `ω_c`.
//!
//! # Bandwidth and overlap
//!
//! The magnitude response of the prototype is a Gaussian bump of standard
//! deviation `√2·α` rad/sample around `ω_c`; its equivalent rectangular
//! bandwidth is `2√π·α` rad/sample, i.e. `B = α·fs/√π` Hz. A filter's band is
//! taken as `center ± B/2`. Two neighbours overlapping by a fraction `v` share
//! `v·B` of that width, so a filter whose local center spacing is `Δ` gets
//! `B = Δ / (1 - v)`. The local spacing of filter `k` is half the distance
//! between its two neighbouring mel points, where the mel points are the `N`
//! centers plus the two band edges `f_min` and `f_max`.

use std::f64::consts::PI;

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

/// Longest kernel `design_filterbank` will produce.
pub const MAX_KERNEL_LEN: usize = 1 << 16;

/// HTK-style mel scale.
pub fn mel(hz: f64) -> Result<f64> {
    if hz < 0.0 || hz.is_nan() {
        return Err(Error::NegativeFrequency(hz));
    }
    Ok(2595.0 * (1.0 + hz / 700.0).log10())
}

/// Inverse of [`mel`].
pub fn mel_inv(mels: f64) -> Result<f64> {
    if mels < 0.0 || mels.is_nan() {
        return Err(Error::NegativeFrequency(mels));
    }
    Ok(700.0 * (10f64.powf(mels / 2595.0) - 1.0))
}

/// The two analysis set-ups used for the modulation features.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// 12 filters, 70% overlap.
    Mif,
    /// 6 filters, 50% overlap.
    Cif,
}

impl Profile {
    pub fn num_filters(self) -> usize {
        match self {
            Profile::Mif => 12,
            Profile::Cif => 6,
        }
    }

    pub fn overlap(self) -> f64 {
        match self {
            Profile::Mif => 0.70,
            Profile::Cif => 0.50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterbankConfig {
    pub num_filters: usize,
    /// Lower band edge, Hz.
    pub f_min: f64,
    /// Upper band edge, Hz.
    pub f_max: f64,
    /// Fraction of each filter's bandwidth shared with a neighbour.
    pub overlap: f64,
    pub sample_rate: u32,
    /// Kernel half-length in units of the Gaussian σ.
    pub truncation_sigmas: f64,
}

impl FilterbankConfig {
    pub const DEFAULT_F_MIN: f64 = 200.0;
    /// Default upper edge as a fraction of the sample rate.
    pub const DEFAULT_F_MAX_RATIO: f64 = 0.4;
    pub const DEFAULT_TRUNCATION_SIGMAS: f64 = 4.0;

    pub fn for_profile(profile: Profile, sample_rate: u32) -> Self {
        Self {
            num_filters: profile.num_filters(),
            f_min: Self::DEFAULT_F_MIN,
            f_max: Self::DEFAULT_F_MAX_RATIO * f64::from(sample_rate),
            overlap: profile.overlap(),
            sample_rate,
            truncation_sigmas: Self::DEFAULT_TRUNCATION_SIGMAS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nyquist = f64::from(self.sample_rate) / 2.0;
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.sample_rate == 0 {
            return Err(Error::ZeroSampleRate);
        }
        if self.num_filters == 0 {
            return bad("num_filters must be at least 1".into());
        }
        if !(self.f_min > 0.0 && self.f_min < self.f_max && self.f_max <= nyquist) {
            return bad(format!(
                "need 0 < f_min < f_max <= {nyquist} Hz, got f_min={} f_max={}",
                self.f_min, self.f_max
            ));
        }
        if !(0.0..=0.95).contains(&self.overlap) {
            return bad(format!("overlap {} outside [0, 0.95]", self.overlap));
        }
        if !(self.truncation_sigmas > 0.0 && self.truncation_sigmas.is_finite()) {
            return bad("truncation_sigmas must be positive".into());
        }
        Ok(())
    }
}

/// Which of the four band kernels to convolve with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DerivativeOrder {
    Zero = 0,
    First = 1,
    Second = 2,
    Third = 3,
}

impl DerivativeOrder {
    pub const ALL: [DerivativeOrder; 4] = [
        DerivativeOrder::Zero,
        DerivativeOrder::First,
        DerivativeOrder::Second,
        DerivativeOrder::Third,
    ];
}

impl TryFrom<u8> for DerivativeOrder {
    type Error = Error;

    fn try_from(order: u8) -> Result<Self> {
        Self::ALL
            .get(usize::from(order))
            .copied()
            .ok_or(Error::InvalidDerivativeOrder(order))
    }
}

/// One analysis band: the sampled Gabor kernel and its first three derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct GaborFilter {
    band_index: usize,
    /// rad/sample
    center_freq: f64,
    /// 1/sample
    alpha: f64,
    sample_rate: u32,
    kernels: [Vec<f64>; 4],
}

impl GaborFilter {
    /// Samples the kernel family for one band. `center_freq` in rad/sample,
    /// `alpha` in 1/sample.
    pub fn new(
        band_index: usize,
        center_freq: f64,
        alpha: f64,
        sample_rate: u32,
        truncation_sigmas: f64,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!("alpha {alpha} must be positive")));
        }
        let sigma = 1.0 / (alpha * 2f64.sqrt());
        let half = (truncation_sigmas * sigma).ceil();
        if !half.is_finite() || 2.0 * half + 1.0 > MAX_KERNEL_LEN as f64 {
            return Err(Error::KernelTooLong {
                len: if half.is_finite() { 2 * half as usize + 1 } else { usize::MAX },
                max: MAX_KERNEL_LEN,
            });
        }
        let half = half as i64;

        let (a2, w) = (alpha * alpha, center_freq);
        let mut kernels: [Vec<f64>; 4] = Default::default();
        for n in -half..=half {
            let t = n as f64;
            let e = (-a2 * t * t).exp();
            let e1 = -2.0 * a2 * t * e;
            let e2 = (4.0 * a2 * a2 * t * t - 2.0 * a2) * e;
            let e3 = (-8.0 * a2 * a2 * a2 * t * t * t + 12.0 * a2 * a2 * t) * e;
            let (s, c) = (w * t).sin_cos();
            kernels[0].push(e * c);
            kernels[1].push(e1 * c - w * e * s);
            kernels[2].push(e2 * c - 2.0 * w * e1 * s - w * w * e * c);
            kernels[3].push(e3 * c - 3.0 * w * e2 * s - 3.0 * w * w * e1 * c + w * w * w * e * s);
        }

        // g is even, so its DTFT at ω_c is real.
        let gain: f64 = kernels[0]
            .iter()
            .zip(-half..=half)
            .map(|(g, n)| g * (w * n as f64).cos())
            .sum();
        if !(gain.abs() > 0.0 && gain.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "band {band_index} has no response at its center"
            )));
        }
        for k in &mut kernels {
            k.iter_mut().for_each(|v| *v /= gain);
        }

        Ok(Self {
            band_index,
            center_freq,
            alpha,
            sample_rate,
            kernels,
        })
    }

    pub fn band_index(&self) -> usize {
        self.band_index
    }

    /// Center frequency in rad/sample.
    pub fn center_freq(&self) -> f64 {
        self.center_freq
    }

    pub fn center_hz(&self) -> f64 {
        self.center_freq * f64::from(self.sample_rate) / (2.0 * PI)
    }

    /// Gaussian width parameter in 1/sample.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Equivalent rectangular bandwidth in Hz.
    pub fn bandwidth_hz(&self) -> f64 {
        self.alpha * f64::from(self.sample_rate) / PI.sqrt()
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn kernel(&self, order: DerivativeOrder) -> &[f64] {
        &self.kernels[order as usize]
    }

    /// Kernel length in taps (always odd).
    pub fn len(&self) -> usize {
        self.kernels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the kernel's center tap.
    pub fn center_tap(&self) -> usize {
        self.len() / 2
    }

    /// Magnitude of the sampled kernel's DTFT at `omega` rad/sample.
    pub fn magnitude_response(&self, order: DerivativeOrder, omega: f64) -> f64 {
        let c = self.center_tap() as f64;
        let (re, im) = self
            .kernel(order)
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(re, im), (j, h)| {
                let (s, co) = (omega * (j as f64 - c)).sin_cos();
                (re + h * co, im - h * s)
            });
        re.hypot(im)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Filterbank {
    config: FilterbankConfig,
    filters: Vec<GaborFilter>,
}

impl Filterbank {
    pub fn config(&self) -> &FilterbankConfig {
        &self.config
    }

    pub fn filters(&self) -> &[GaborFilter] {
        &self.filters
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn sample_rate(&self) -> u32 {
        self.config.sample_rate
    }
}

/// Places `N` filters equidistantly on the mel scale strictly inside
/// `[f_min, f_max]` and sizes each one for the requested overlap.
pub fn design_filterbank(config: &FilterbankConfig) -> Result<Filterbank> {
    config.validate()?;
    if config.overlap >= 1.0 {
        return Err(Error::InfeasibleOverlap {
            overlap: config.overlap,
        });
    }
    let n = config.num_filters;
    let fs = f64::from(config.sample_rate);
    let (lo, hi) = (mel(config.f_min)?, mel(config.f_max)?);
    let step = (hi - lo) / (n + 1) as f64;
    let points = (0..n + 2)
        .map(|i| mel_inv(lo + step * i as f64))
        .collect::<Result<Vec<_>>>()?;

    let filters = (1..=n)
        .map(|k| {
            let spacing = (points[k + 1] - points[k - 1]) / 2.0;
            let bandwidth = spacing / (1.0 - config.overlap);
            let alpha = PI.sqrt() * bandwidth / fs;
            if alpha.is_nan() || alpha <= 0.0 {
                return Err(Error::InfeasibleOverlap {
                    overlap: config.overlap,
                });
            }
            GaborFilter::new(
                k - 1,
                2.0 * PI * points[k] / fs,
                alpha,
                config.sample_rate,
                config.truncation_sigmas,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Filterbank {
        config: config.clone(),
        filters,
    })
}

/// Same-length convolution with zero-padded edges; the kernel center sits at lag 0.
pub fn convolve_same(x: &[f64], kernel: &[f64]) -> Vec<f64> {
    let half = kernel.len() / 2;
    let n = x.len();
    (0..n)
        .map(|i| {
            // y[i] = Σ_j h[j]·x[i + half - j]
            let j_lo = (i + half + 1).saturating_sub(n);
            let j_hi = (i + half).min(kernel.len() - 1);
            (j_lo..=j_hi).map(|j| kernel[j] * x[i + half - j]).sum()
        })
        .collect()
}

/// Filters `signal` with the band kernel of the given derivative order.
pub fn bandpass(signal: &AudioBuffer, filter: &GaborFilter, order: DerivativeOrder) -> Vec<f64> {
    convolve_same(signal.samples(), filter.kernel(order))
}

/// All four filtered versions of one signal in a band, indexed by derivative order.
#[derive(Debug, Clone)]
pub struct BandOutputs(pub [Vec<f64>; 4]);

impl BandOutputs {
    pub fn compute(x: &[f64], filter: &GaborFilter) -> Self {
        Self(DerivativeOrder::ALL.map(|o| convolve_same(x, filter.kernel(o))))
    }

    pub fn get(&self, order: DerivativeOrder) -> &[f64] {
        &self.0[order as usize]
    }

    pub fn len(&self) -> usize {
        self.0[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.0[0].is_empty()
    }
}
