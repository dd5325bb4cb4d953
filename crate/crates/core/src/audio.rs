//! Audio containers and WAV input/output.
//!
//! Channels are stored de-interleaved as `f64` samples nominally in `[-1, 1]`.
//! Integer PCM is normalized by `2^(bits-1)`, so `0` maps to `0.0` and the most
//! negative code maps to exactly `-1.0`. No resampling is ever performed: inputs
//! at different rates are rejected.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};

/// One channel of audio at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::ZeroSampleRate);
        }
        if let Some(index) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFiniteSample { index });
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    /// Mean power of the samples; zero for an empty buffer.
    pub fn power(&self) -> f64 {
        mean_power(&self.samples)
    }

    /// Returns a copy with every sample multiplied by `gain`.
    pub fn scaled(&self, gain: f64) -> Result<Self> {
        Self::new(
            self.samples.iter().map(|s| s * gain).collect(),
            self.sample_rate,
        )
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

pub(crate) fn mean_power(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// Time-aligned channels sharing one sample rate and length.
#[derive(Debug, Clone, PartialEq)]
pub struct MultichannelAudio {
    channels: Vec<AudioBuffer>,
}

impl MultichannelAudio {
    pub fn channels(&self) -> &[AudioBuffer] {
        &self.channels
    }

    pub fn channel(&self, index: usize) -> Option<&AudioBuffer> {
        self.channels.get(index)
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_rate(&self) -> u32 {
        self.channels[0].sample_rate()
    }

    /// Returns a copy with every channel multiplied by `gain`.
    pub fn scaled(&self, gain: f64) -> Result<Self> {
        let channels = self
            .channels
            .iter()
            .map(|c| c.scaled(gain))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { channels })
    }

    pub fn into_channels(self) -> Vec<AudioBuffer> {
        self.channels
    }
}

impl From<AudioBuffer> for MultichannelAudio {
    fn from(buffer: AudioBuffer) -> Self {
        Self {
            channels: vec![buffer],
        }
    }
}

/// Groups buffers into one multichannel recording, keeping their order.
pub fn stack_channels(buffers: Vec<AudioBuffer>) -> Result<MultichannelAudio> {
    let first = buffers.first().ok_or(Error::NoChannels)?;
    let (rate, len) = (first.sample_rate(), first.len());
    for b in &buffers[1..] {
        if b.sample_rate() != rate {
            return Err(Error::RateMismatch {
                expected: rate,
                found: b.sample_rate(),
            });
        }
        if b.len() != len {
            return Err(Error::LengthMismatch {
                expected: len,
                found: b.len(),
            });
        }
    }
    Ok(MultichannelAudio { channels: buffers })
}

/// Reads a PCM (16/24/32-bit integer) or 32-bit float WAV file.
pub fn load_wav(path: impl AsRef<Path>) -> Result<MultichannelAudio> {
    let path = path.as_ref();
    let wav_err = |source| Error::Wav {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = WavReader::open(path).map_err(wav_err)?;
    let spec = reader.spec();
    let num_channels = usize::from(spec.channels);
    if num_channels == 0 {
        return Err(Error::UnsupportedEncoding("zero channels".into()));
    }

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(wav_err)?,
        (SampleFormat::Int, bits @ (16 | 24 | 32)) => {
            let full_scale = f64::from(1u32 << (bits - 1));
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| f64::from(v) / full_scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(wav_err)?
        }
        (format, bits) => {
            return Err(Error::UnsupportedEncoding(format!(
                "{bits}-bit {format:?}"
            )))
        }
    };
    if interleaved.is_empty() {
        return Err(Error::EmptyAudio);
    }

    let frames = interleaved.len() / num_channels;
    let mut channels = vec![Vec::with_capacity(frames); num_channels];
    for frame in interleaved.chunks_exact(num_channels) {
        for (ch, &s) in channels.iter_mut().zip(frame) {
            ch.push(s);
        }
    }
    let buffers = channels
        .into_iter()
        .map(|c| AudioBuffer::new(c, spec.sample_rate))
        .collect::<Result<Vec<_>>>()?;
    stack_channels(buffers)
}

/// Writes interleaved 32-bit float WAV.
pub fn save_wav(audio: &MultichannelAudio, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if path.as_os_str().is_empty() {
        return Err(Error::EmptyPath);
    }
    let wav_err = |source| Error::Wav {
        path: path.to_path_buf(),
        source,
    };
    let channels = u16::try_from(audio.num_channels())
        .map_err(|_| Error::UnsupportedEncoding("too many channels".into()))?;
    let spec = WavSpec {
        channels,
        sample_rate: audio.sample_rate(),
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut writer = WavWriter::create(path, spec).map_err(wav_err)?;
    for n in 0..audio.len() {
        for ch in audio.channels() {
            writer.write_sample(ch.samples()[n] as f32).map_err(wav_err)?;
        }
    }
    writer.finalize().map_err(wav_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_int_wav(path: &Path, bits: u16, channels: u16, data: &[i32]) {
        let spec = WavSpec {
            channels,
            sample_rate: 16000,
            bits_per_sample: bits,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(path, spec).unwrap();
        for &v in data {
            match bits {
                16 => w.write_sample(v as i16).unwrap(),
                _ => w.write_sample(v).unwrap(),
            }
        }
        w.finalize().unwrap();
    }

    #[test]
    fn pcm16_full_scale_normalization() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        write_int_wav(&p, 16, 1, &[16384, -32768, 0]);
        let audio = load_wav(&p).unwrap();
        assert_eq!(audio.sample_rate(), 16000);
        assert_eq!(audio.channel(0).unwrap().samples(), &[0.5, -1.0, 0.0]);
    }

    #[test]
    fn pcm24_and_32_normalization() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.wav");
        write_int_wav(&p, 24, 1, &[1 << 22, -(1 << 23)]);
        assert_eq!(load_wav(&p).unwrap().channel(0).unwrap().samples(), &[0.5, -1.0]);
        let p = dir.path().join("c.wav");
        write_int_wav(&p, 32, 1, &[1 << 29]);
        assert_eq!(load_wav(&p).unwrap().channel(0).unwrap().samples(), &[0.25]);
    }

    #[test]
    fn stereo_shape_and_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.wav");
        let data: Vec<i32> = (0..16000).flat_map(|_| [1000, -2000]).collect();
        write_int_wav(&p, 16, 2, &data);
        let audio = load_wav(&p).unwrap();
        assert_eq!(audio.num_channels(), 2);
        assert_eq!(audio.len(), 16000);
        assert!(audio.channel(0).unwrap().samples()[0] > 0.0);
        assert!(audio.channel(1).unwrap().samples()[0] < 0.0);
    }

    #[test]
    fn float_round_trip_is_exact() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let chans: Vec<AudioBuffer> = (0..3)
            .map(|_| {
                let s = (0..500)
                    .map(|_| f64::from(rng.random_range(-1.0f32..1.0)))
                    .collect();
                AudioBuffer::new(s, 22050).unwrap()
            })
            .collect();
        let audio = stack_channels(chans).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("n1.wav");
        let p2 = dir.path().join("n2.wav");
        save_wav(&audio, &p1).unwrap();
        let once = load_wav(&p1).unwrap();
        assert_eq!(once, audio);
        save_wav(&once, &p2).unwrap();
        assert_eq!(load_wav(&p2).unwrap(), once);
    }

    #[test]
    fn mono_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.wav");
        let audio = MultichannelAudio::from(AudioBuffer::new(vec![0.1; 10], 8000).unwrap());
        save_wav(&audio, &p).unwrap();
        let spec = WavReader::open(&p).unwrap().spec();
        assert_eq!(spec.channels, 1);
        assert_eq!(spec.sample_rate, 8000);
    }

    #[test]
    fn error_contracts() {
        let audio = MultichannelAudio::from(AudioBuffer::new(vec![0.0; 4], 8000).unwrap());
        assert!(matches!(save_wav(&audio, ""), Err(Error::EmptyPath)));
        assert!(load_wav("/nonexistent/x.wav").is_err());
        assert!(matches!(AudioBuffer::new(vec![1.0], 0), Err(Error::ZeroSampleRate)));
        assert!(matches!(
            AudioBuffer::new(vec![0.0, f64::NAN], 8000),
            Err(Error::NonFiniteSample { index: 1 })
        ));

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.wav");
        write_int_wav(&p, 16, 1, &[]);
        assert!(matches!(load_wav(&p), Err(Error::EmptyAudio)));
    }

    #[test]
    fn stacking_rules() {
        let a = AudioBuffer::new(vec![0.25; 400], 16000).unwrap();
        let two = stack_channels(vec![a.clone(), a.clone()]).unwrap();
        assert_eq!(two.num_channels(), 2);
        assert_eq!(two.channels()[0], two.channels()[1]);

        let three = stack_channels(vec![a.clone(), a.clone(), a.clone()]).unwrap();
        assert_eq!((three.num_channels(), three.len()), (3, 400));

        let b = AudioBuffer::new(vec![0.25; 400], 8000).unwrap();
        assert!(matches!(
            stack_channels(vec![a.clone(), b]),
            Err(Error::RateMismatch { .. })
        ));
        let c = AudioBuffer::new(vec![0.25; 399], 16000).unwrap();
        assert!(matches!(
            stack_channels(vec![a, c]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(stack_channels(vec![]), Err(Error::NoChannels)));
    }

    #[test]
    fn integer_scaling_is_linear() {
        let dir = tempfile::tempdir().unwrap();
        let base = [100, -250, 1200, 7];
        let p1 = dir.path().join("x1.wav");
        let p2 = dir.path().join("x3.wav");
        write_int_wav(&p1, 16, 1, &base);
        write_int_wav(&p2, 16, 1, &base.map(|v| v * 3));
        let a = load_wav(&p1).unwrap();
        let b = load_wav(&p2).unwrap();
        for (x, y) in a.channels()[0].samples().iter().zip(b.channels()[0].samples()) {
            assert_eq!(3.0 * x, *y);
        }
    }
}
