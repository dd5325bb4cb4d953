//! Teager-Kaiser and cross-Teager energy operators.
//!
//! Plain operators work on raw sequences with discrete differences. The
//! Gabor-filtered forms take their derivatives from the analytic derivative
//! kernels of a [`GaborFilter`] instead, so a band's energy and the energy of
//! its derivative come straight out of four convolutions.
//!
//! All operators are bilinear: scaling the first input by `a` and the second by
//! `b` scales the track by `a·b`. The cross operator is not symmetric in its
//! arguments.

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::filterbank::{BandOutputs, DerivativeOrder, GaborFilter};

/// An energy value per input sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTrack {
    pub values: Vec<f64>,
    pub band_index: Option<usize>,
    /// Ordered channel pair `(m, ℓ)` for cross energies.
    pub pair: Option<(usize, usize)>,
}

impl EnergyTrack {
    fn plain(values: Vec<f64>) -> Self {
        Self {
            values,
            band_index: None,
            pair: None,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }
}

pub(crate) fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().sum::<f64>() / x.len() as f64
    }
}

fn replicate_ends(v: &mut [f64]) {
    let n = v.len();
    v[0] = v[1];
    v[n - 1] = v[n - 2];
}

/// Discrete Teager-Kaiser energy `x[n]² − x[n−1]·x[n+1]`.
pub fn teager(x: &[f64]) -> Result<EnergyTrack> {
    if x.len() < 3 {
        return Err(Error::TooShort { len: x.len(), min: 3 });
    }
    let mut out = vec![0.0; x.len()];
    for n in 1..x.len() - 1 {
        out[n] = x[n] * x[n] - x[n - 1] * x[n + 1];
    }
    replicate_ends(&mut out);
    Ok(EnergyTrack::plain(out))
}

/// Discrete cross-Teager energy `ẋ[n]·ẏ[n] − x[n]·ÿ[n]` with central differences.
pub fn cross_teager(x: &[f64], y: &[f64]) -> Result<EnergyTrack> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::TooShort { len: x.len(), min: 3 });
    }
    let mut out = vec![0.0; x.len()];
    for n in 1..x.len() - 1 {
        let dx = (x[n + 1] - x[n - 1]) / 2.0;
        let dy = (y[n + 1] - y[n - 1]) / 2.0;
        let ddy = y[n + 1] - 2.0 * y[n] + y[n - 1];
        out[n] = dx * dy - x[n] * ddy;
    }
    replicate_ends(&mut out);
    Ok(EnergyTrack::plain(out))
}

/// Pointwise `a[lo+1]·b[lo+1] − a[lo]·b[lo+2]` over band outputs.
fn combine(a: &BandOutputs, b: &BandOutputs, lo: usize, range: std::ops::Range<usize>) -> Vec<f64> {
    let (a0, a1) = (&a.0[lo][range.clone()], &a.0[lo + 1][range.clone()]);
    let (b1, b2) = (&b.0[lo + 1][range.clone()], &b.0[lo + 2][range]);
    a1.iter()
        .zip(b1)
        .zip(a0.iter().zip(b2))
        .map(|((p, q), (r, s))| p * q - r * s)
        .collect()
}

/// Filtered cross energy of a band from precomputed outputs:
/// `(ya*ġ)(yb*ġ) − (ya*g)(yb*g̈)`.
pub fn filtered_energy(a: &BandOutputs, b: &BandOutputs) -> Vec<f64> {
    combine(a, b, 0, 0..a.len())
}

/// Filtered cross energy of the band derivative:
/// `(ya*g̈)(yb*g̈) − (ya*ġ)(yb*g⃛)`.
pub fn filtered_deriv_energy(a: &BandOutputs, b: &BandOutputs) -> Vec<f64> {
    combine(a, b, 1, 0..a.len())
}

/// [`filtered_energy`] restricted to a sample range.
pub fn filtered_energy_range(a: &BandOutputs, b: &BandOutputs, range: std::ops::Range<usize>) -> Vec<f64> {
    combine(a, b, 0, range)
}

/// [`filtered_deriv_energy`] restricted to a sample range.
pub fn filtered_deriv_energy_range(
    a: &BandOutputs,
    b: &BandOutputs,
    range: std::ops::Range<usize>,
) -> Vec<f64> {
    combine(a, b, 1, range)
}

fn check_pair(ya: &AudioBuffer, yb: &AudioBuffer) -> Result<()> {
    if ya.sample_rate() != yb.sample_rate() {
        return Err(Error::RateMismatch {
            expected: ya.sample_rate(),
            found: yb.sample_rate(),
        });
    }
    if ya.len() != yb.len() {
        return Err(Error::LengthMismatch {
            expected: ya.len(),
            found: yb.len(),
        });
    }
    Ok(())
}

fn gabor_track(
    ya: &AudioBuffer,
    yb: &AudioBuffer,
    filter: &GaborFilter,
    f: fn(&BandOutputs, &BandOutputs) -> Vec<f64>,
) -> Result<EnergyTrack> {
    check_pair(ya, yb)?;
    let a = BandOutputs::compute(ya.samples(), filter);
    let values = if ya == yb {
        f(&a, &a)
    } else {
        f(&a, &BandOutputs::compute(yb.samples(), filter))
    };
    Ok(EnergyTrack {
        values,
        band_index: Some(filter.band_index()),
        pair: None,
    })
}

/// Cross-Teager energy of band `k` computed through the Gabor kernels.
pub fn gabor_cross_teager(ya: &AudioBuffer, yb: &AudioBuffer, filter: &GaborFilter) -> Result<EnergyTrack> {
    gabor_track(ya, yb, filter, filtered_energy)
}

/// Cross-Teager energy of the derivative of band `k`, through the Gabor kernels.
pub fn gabor_cross_teager_deriv(
    ya: &AudioBuffer,
    yb: &AudioBuffer,
    filter: &GaborFilter,
) -> Result<EnergyTrack> {
    gabor_track(ya, yb, filter, filtered_deriv_energy)
}

/// Convenience for the order-0 filtered signal of one band.
pub fn band_signal(x: &AudioBuffer, filter: &GaborFilter) -> Vec<f64> {
    crate::filterbank::bandpass(x, filter, DerivativeOrder::Zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filterbank::{design_filterbank, FilterbankConfig, Profile};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn buf(x: Vec<f64>) -> AudioBuffer {
        AudioBuffer::new(x, 16000).unwrap()
    }

    fn tone(a: f64, w: f64, phi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a * (w * i as f64 + phi).cos()).collect()
    }

    #[test]
    fn teager_closed_forms() {
        let t = teager(&tone(1.3, 0.7, 0.2, 50)).unwrap();
        let expect = 1.3f64.powi(2) * 0.7f64.sin().powi(2);
        for v in &t.values {
            assert_relative_eq!(*v, expect, max_relative = 1e-12);
        }
        assert!(teager(&[2.5; 10]).unwrap().values.iter().all(|v| *v == 0.0));
        // a²n² − a²(n−1)(n+1) = a²
        let ramp: Vec<f64> = (0..20).map(|n| 0.3 * n as f64).collect();
        for v in teager(&ramp).unwrap().values {
            assert_relative_eq!(v, 0.09, epsilon = 1e-12);
        }
        assert!(teager(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn endpoints_replicated() {
        let x = noise(1, 30);
        let t = teager(&x).unwrap().values;
        assert_eq!(t[0], t[1]);
        assert_eq!(t[29], t[28]);
        let c = cross_teager(&x, &noise(2, 30)).unwrap().values;
        assert_eq!(c[0], c[1]);
        assert_eq!(c[29], c[28]);
    }

    #[test]
    fn cross_self_pair_is_central_difference_teager() {
        let x = noise(5, 200);
        let c = cross_teager(&x, &x).unwrap().values;
        for n in 1..199 {
            let d = (x[n + 1] - x[n - 1]) / 2.0;
            let dd = x[n + 1] - 2.0 * x[n] + x[n - 1];
            assert_eq!(c[n], d * d - x[n] * dd);
        }
        // For A·cos θ with θ = Ωn+φ: ẋ² − xẍ = A²·sin²Ω·sin²θ + A²·(2 − 2cos Ω)·cos²θ.
        let (a, w, phi) = (0.9, 0.4, 1.1);
        let x = tone(a, w, phi, 64);
        let c = cross_teager(&x, &x).unwrap().values;
        for (n, v) in c.iter().enumerate().take(63).skip(1) {
            let th = w * n as f64 + phi;
            let expect = a * a * (w.sin().powi(2) * th.sin().powi(2) + (2.0 - 2.0 * w.cos()) * th.cos().powi(2));
            assert_relative_eq!(*v, expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn cross_is_asymmetric() {
        let (x, y) = (noise(10, 100), noise(11, 100));
        let xy = cross_teager(&x, &y).unwrap().values;
        let yx = cross_teager(&y, &x).unwrap().values;
        let diff = xy.iter().zip(&yx).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff > 0.0);
        assert!(cross_teager(&x, &y[..99]).is_err());
    }

    #[test]
    fn gabor_self_pair_matches_tone_energy() {
        let bank = design_filterbank(&FilterbankConfig::for_profile(Profile::Mif, 16000)).unwrap();
        for f in bank.filters() {
            let w = f.center_freq();
            let x = buf(tone(0.6, w, 0.3, 4000));
            let e = gabor_cross_teager(&x, &x, f).unwrap().values;
            let band = band_signal(&x, f);
            let plain = teager(&band).unwrap().values;
            let af = 0.6 * f.magnitude_response(DerivativeOrder::Zero, w);
            let mid = 2000;
            assert_relative_eq!(e[mid], af * af * w * w, max_relative = 0.01);
            // Plain TEO of the filtered tone gives A_f²·sin²ω; rescale to A_f²·ω².
            assert_relative_eq!(e[mid], plain[mid] * (w / w.sin()).powi(2), max_relative = 0.01);
        }
    }

    #[test]
    fn tone_calibration_over_3db_band() {
        for profile in [Profile::Mif, Profile::Cif] {
            let bank = design_filterbank(&FilterbankConfig::for_profile(profile, 16000)).unwrap();
            for f in bank.filters() {
                let hw = 2.0 * f.alpha() * (std::f64::consts::LN_2 / 2.0).sqrt();
                for frac in [-1.0, -0.5, 0.0, 0.5, 1.0] {
                    let w = f.center_freq() + frac * hw;
                    let x = buf(tone(1.0, w, 0.0, 3000));
                    let core = f.len()..3000 - f.len();
                    let e = mean(&gabor_cross_teager(&x, &x, f).unwrap().values[core.clone()]);
                    let d = mean(&gabor_cross_teager_deriv(&x, &x, f).unwrap().values[core]);
                    assert_relative_eq!((d / e).sqrt(), w, max_relative = 0.01);
                }
            }
        }
    }

    #[test]
    fn zero_input_gives_zero_track() {
        let bank = design_filterbank(&FilterbankConfig::for_profile(Profile::Cif, 16000)).unwrap();
        let f = &bank.filters()[1];
        let x = buf(noise(3, 800));
        let z = buf(vec![0.0; 800]);
        assert!(gabor_cross_teager(&x, &z, f).unwrap().values.iter().all(|v| *v == 0.0));
        assert!(gabor_cross_teager_deriv(&z, &x, f).unwrap().values.iter().all(|v| *v == 0.0));
        let other = AudioBuffer::new(vec![0.0; 800], 8000).unwrap();
        assert!(matches!(gabor_cross_teager(&x, &other, f), Err(Error::RateMismatch { .. })));
    }

    /// Independent noise averages out of the cross energy but biases the
    /// single-channel energy.
    #[test]
    fn cross_energy_resists_independent_noise() {
        let bank = design_filterbank(&FilterbankConfig::for_profile(Profile::Mif, 16000)).unwrap();
        let f = &bank.filters()[3];
        let w = f.center_freq();
        let n = 4000;
        let clean = tone(1.0, w, 0.0, n);
        let core = f.len()..n - f.len();
        let (mut dev_cross, mut dev_single) = (0.0, 0.0);
        let trials = 24;
        for t in 0..trials {
            let mk = |seed| {
                let u = noise(seed, n);
                buf(clean.iter().zip(&u).map(|(s, u)| s + 0.5 * u).collect())
            };
            let (ya, yb) = (mk(100 + 2 * t), mk(101 + 2 * t));
            let cross = gabor_cross_teager(&ya, &yb, f).unwrap().values;
            let single = teager(&band_signal(&ya, f)).unwrap().values;
            let target_cross = w * w;
            let target_single = w.sin().powi(2);
            dev_cross += (mean(&cross[core.clone()]) - target_cross).abs() / target_cross;
            dev_single += (mean(&single[core.clone()]) - target_single).abs() / target_single;
        }
        assert!(dev_cross < dev_single, "cross {dev_cross} vs single {dev_single}");
    }

    proptest! {
        #[test]
        fn bilinear_in_both_arguments(a in -3.0f64..3.0, b in -3.0f64..3.0, seed in 0u64..1000) {
            let x = noise(seed, 300);
            let y = noise(seed + 7919, 300);
            let xa: Vec<f64> = x.iter().map(|v| a * v).collect();
            let yb: Vec<f64> = y.iter().map(|v| b * v).collect();
            let base = cross_teager(&x, &y).unwrap().values;
            let scaled = cross_teager(&xa, &yb).unwrap().values;
            for (s, v) in scaled.iter().zip(&base) {
                prop_assert!((s - a * b * v).abs() <= 1e-9 * (1.0 + (a * b * v).abs()));
            }

            let bank = design_filterbank(&FilterbankConfig::for_profile(Profile::Cif, 16000)).unwrap();
            let f = &bank.filters()[2];
            let (bx, by) = (buf(x), buf(y));
            let (bxa, byb) = (buf(xa), buf(yb));
            for op in [gabor_cross_teager, gabor_cross_teager_deriv] {
                let base = op(&bx, &by, f).unwrap().values;
                let scaled = op(&bxa, &byb, f).unwrap().values;
                let peak = base.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                for (s, v) in scaled.iter().zip(&base) {
                    prop_assert!((s - a * b * v).abs() <= 1e-9 * (1.0 + (a * b).abs() * peak));
                }
            }
        }
    }
}
