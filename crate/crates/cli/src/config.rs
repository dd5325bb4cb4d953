//! Option merging and the effective run configuration.
//!
//! Every option can come from a flag or from a flat `key=value` file given
//! with `--config`; flags win. Keys use the flag names with or without the
//! leading dashes, and `_` may stand for `-`. Keys starting with `info.`
//! describe the run and its outputs and are skipped on reading, so a written
//! `run.conf` can be fed back unchanged.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, ValueEnum};
use mmdemod::demod::MediumFrameConfig;
use mmdemod::eval::{AmFmSpec, NoiseSource, ScenarioConfig};
use mmdemod::features::FrameConfig;
use mmdemod::filterbank::{FilterbankConfig, Profile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    Mif,
    Cif,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Mif,
    Cif,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnOff {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Mmdf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Vowel,
    Fricative,
}

fn name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default()
}

/// All tunables, each optional so that flags and file can be layered.
#[derive(Args, Debug, Clone, Default, PartialEq)]
pub struct Opts {
    /// Input WAV file (demod, features).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Directory receiving all outputs.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Filterbank preset: mif = 12 filters at 70% overlap, cif = 6 at 50%.
    #[arg(long, value_enum)]
    pub profile: Option<ProfileArg>,
    /// Feature type (features).
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Force multichannel demodulation.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub mmd: Option<bool>,
    /// Demodulate this channel alone.
    #[arg(long)]
    pub single_channel: Option<usize>,
    #[arg(long)]
    pub num_filters: Option<usize>,
    /// Lowest filter edge in Hz.
    #[arg(long)]
    pub fmin: Option<f64>,
    /// Highest filter edge in Hz (default 0.4 × sample rate).
    #[arg(long)]
    pub fmax: Option<f64>,
    /// Filter overlap in [0, 0.95].
    #[arg(long)]
    pub overlap: Option<f64>,
    /// Feature frame length in seconds.
    #[arg(long)]
    pub win: Option<f64>,
    /// Feature frame hop in seconds.
    #[arg(long)]
    pub hop: Option<f64>,
    /// Pair-selection frame length in seconds.
    #[arg(long)]
    pub medium_len: Option<f64>,
    /// DCT coefficients kept per band (cif).
    #[arg(long)]
    pub num_dct: Option<usize>,
    /// Frames of context on each side.
    #[arg(long)]
    pub splice: Option<usize>,
    /// Per-band utterance standardization of frequency tracks.
    #[arg(long, value_enum)]
    pub standardize: Option<OnOff>,
    /// Column-wise mean/variance normalization of the final matrix.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub cmvn: Option<bool>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Comma-separated SNRs in dB (evaluate).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub snr: Option<Vec<f64>>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Number of simulated microphones (evaluate).
    #[arg(long)]
    pub channels: Option<usize>,
    /// Comma-separated room responses, one per channel (evaluate).
    #[arg(long, value_delimiter = ',')]
    pub rir: Option<Vec<PathBuf>>,
    /// Noise recording instead of white Gaussian noise (evaluate).
    #[arg(long)]
    pub noise_wav: Option<PathBuf>,
    /// Fraction of noise power shared by all channels (evaluate).
    #[arg(long)]
    pub correlated_noise: Option<f64>,
    /// Synthetic source (evaluate).
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Synthetic source length in seconds (evaluate).
    #[arg(long)]
    pub duration: Option<f64>,
    /// Synthetic source sample rate in Hz (evaluate).
    #[arg(long)]
    pub sample_rate: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
}

macro_rules! overlay {
    ($top:expr, $base:expr; $($f:ident),*) => {
        Opts { $($f: $top.$f.or($base.$f)),* }
    };
}

impl Opts {
    /// Values in `self` take precedence over `base`.
    pub fn over(self, base: Opts) -> Opts {
        overlay!(self, base; input, output_dir, profile, kind, mmd, single_channel, num_filters, fmin, fmax,
            overlap, win, hop, medium_len, num_dct, splice, standardize, cmvn, format, snr, trials, channels,
            rir, noise_wav, correlated_noise, preset, duration, sample_rate, seed)
    }
}

#[derive(Parser)]
#[command(no_binary_name = true)]
struct FileArgs {
    #[command(flatten)]
    opts: Opts,
}

pub fn parse_config_text(text: &str) -> Result<Opts> {
    let mut args = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("line {}: expected key=value", lineno + 1))?;
        let key = key.trim().trim_start_matches('-').replace('_', "-");
        let value = value.trim();
        if key.starts_with("info.") || value.is_empty() {
            continue;
        }
        args.push(format!("--{key}={value}"));
    }
    FileArgs::try_parse_from(args)
        .map(|f| f.opts)
        .map_err(|e| anyhow::anyhow!(first_line(&e.to_string())))
}

pub fn load_config(path: &Path) -> Result<Opts> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config_text(&text).with_context(|| format!("config {}", path.display()))
}

pub fn first_line(msg: &str) -> String {
    msg.lines()
        .find(|l| !l.trim().is_empty())
        .unwrap_or("")
        .trim_start_matches("error: ")
        .to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Demod,
    Features,
    Evaluate,
}

/// Which demodulator to run on an input file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelChoice {
    Mmd,
    Single(usize),
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Mode,
    pub input: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub profile: Profile,
    pub kind: KindArg,
    pub mmd: Option<bool>,
    pub single_channel: Option<usize>,
    pub num_filters: usize,
    pub fmin: f64,
    pub fmax: Option<f64>,
    pub overlap: f64,
    pub frame: FrameConfig,
    pub medium: MediumFrameConfig,
    pub num_dct: usize,
    pub splice: usize,
    pub standardize: bool,
    pub cmvn: bool,
    pub format: Format,
    pub scenario: ScenarioConfig,
    pub preset: Preset,
    pub duration: f64,
    pub sample_rate: u32,
}

impl RunConfig {
    pub fn resolve(mode: Mode, o: Opts) -> Result<Self> {
        let profile = match (o.profile, o.kind) {
            (Some(ProfileArg::Cif), _) | (None, Some(KindArg::Cif)) => Profile::Cif,
            _ => Profile::Mif,
        };
        let kind = o.kind.unwrap_or(match profile {
            Profile::Cif => KindArg::Cif,
            Profile::Mif => KindArg::Mif,
        });
        let medium_len = o.medium_len.unwrap_or(MediumFrameConfig::default().frame_len);
        let defaults = FrameConfig::default();
        let scenario_defaults = ScenarioConfig::default();
        let scenario = ScenarioConfig {
            num_channels: o.channels.unwrap_or(scenario_defaults.num_channels),
            snr_db_list: o.snr.clone().unwrap_or(scenario_defaults.snr_db_list),
            trials: o.trials.unwrap_or(scenario_defaults.trials),
            rir_paths: o.rir.clone(),
            noise: o.noise_wav.clone().map_or(NoiseSource::WhiteGaussian, NoiseSource::Wav),
            correlated_noise: o.correlated_noise.unwrap_or(0.0),
            reference_channel: 0,
            seed: o.seed.unwrap_or(0),
        };
        let cfg = RunConfig {
            mode,
            input: o.input,
            output_dir: o.output_dir.context("--output-dir is required")?,
            profile,
            kind,
            mmd: o.mmd,
            single_channel: o.single_channel,
            num_filters: o.num_filters.unwrap_or(profile.num_filters()),
            fmin: o.fmin.unwrap_or(FilterbankConfig::DEFAULT_F_MIN),
            fmax: o.fmax,
            overlap: o.overlap.unwrap_or(profile.overlap()),
            frame: FrameConfig {
                win: o.win.unwrap_or(defaults.win),
                hop: o.hop.unwrap_or(defaults.hop),
            },
            medium: MediumFrameConfig {
                frame_len: medium_len,
                hop: medium_len,
            },
            num_dct: o.num_dct.unwrap_or(10),
            splice: o.splice.unwrap_or(0),
            standardize: o.standardize.unwrap_or(OnOff::On) == OnOff::On,
            cmvn: o.cmvn.unwrap_or(false),
            format: o.format.unwrap_or(Format::Csv),
            scenario,
            preset: o.preset.unwrap_or(Preset::Vowel),
            duration: o.duration.unwrap_or(0.5),
            sample_rate: o.sample_rate.unwrap_or(16000),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if matches!(self.mode, Mode::Demod | Mode::Features) && self.input.is_none() {
            bail!("--input is required");
        }
        if self.mmd == Some(true) && self.single_channel.is_some() {
            bail!("--mmd and --single-channel are mutually exclusive");
        }
        self.frame.validate()?;
        self.medium.validate()?;
        if self.mode == Mode::Evaluate {
            self.scenario.validate()?;
            if self.sample_rate == 0 {
                bail!("--sample-rate must be positive");
            }
        }
        Ok(())
    }

    pub fn filterbank(&self, sample_rate: u32) -> FilterbankConfig {
        let mut fb = FilterbankConfig::for_profile(self.profile, sample_rate);
        fb.num_filters = self.num_filters;
        fb.f_min = self.fmin;
        if let Some(f) = self.fmax {
            fb.f_max = f;
        }
        fb.overlap = self.overlap;
        fb
    }

    pub fn channel_choice(&self, num_channels: usize) -> Result<ChannelChoice> {
        match (self.mmd, self.single_channel) {
            (_, Some(i)) if i >= num_channels => {
                bail!("--single-channel {i} out of range for {num_channels} channel(s)")
            }
            (_, Some(i)) => Ok(ChannelChoice::Single(i)),
            (Some(true), None) => Ok(ChannelChoice::Mmd),
            (Some(false), None) => Ok(ChannelChoice::Single(0)),
            (None, None) if num_channels >= 2 => Ok(ChannelChoice::Mmd),
            (None, None) => Ok(ChannelChoice::Single(0)),
        }
    }

    pub fn source_spec(&self) -> AmFmSpec {
        match self.preset {
            Preset::Vowel => AmFmSpec::vowel(self.duration, self.sample_rate),
            Preset::Fricative => AmFmSpec::fricative(self.duration, self.sample_rate),
        }
    }

    /// Effective settings as `key=value` pairs readable by [`load_config`].
    ///
    /// `fb` is the filterbank actually used and `choice` the demodulator.
    pub fn entries(&self, fb: &FilterbankConfig, choice: Option<ChannelChoice>) -> Vec<(String, String)> {
        fn kv(k: &str, v: impl Display) -> (String, String) {
            (k.to_string(), v.to_string())
        }
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let profile = match self.profile {
            Profile::Mif => "mif",
            Profile::Cif => "cif",
        };
        let mode = match self.mode {
            Mode::Demod => "demod",
            Mode::Features => "features",
            Mode::Evaluate => "evaluate",
        };
        let mut out = vec![kv("info.mode", mode)];
        if let Some(p) = &self.input {
            out.push(kv("input", p.display()));
        }
        out.push(kv("output-dir", self.output_dir.display()));
        out.push(kv("profile", profile));
        out.push(kv("num-filters", fb.num_filters));
        out.push(kv("fmin", fb.f_min));
        out.push(kv("fmax", fb.f_max));
        out.push(kv("overlap", fb.overlap));
        out.push(kv("medium-len", self.medium.frame_len));
        match choice {
            Some(ChannelChoice::Mmd) => out.push(kv("mmd", true)),
            Some(ChannelChoice::Single(i)) => out.push(kv("single-channel", i)),
            None => {}
        }
        match self.mode {
            Mode::Demod => {}
            Mode::Features => {
                out.push(kv("kind", name(&self.kind)));
                out.push(kv("win", self.frame.win));
                out.push(kv("hop", self.frame.hop));
                out.push(kv("num-dct", self.num_dct));
                out.push(kv("splice", self.splice));
                out.push(kv("standardize", if self.standardize { "on" } else { "off" }));
                out.push(kv("cmvn", self.cmvn));
                out.push(kv("format", name(&self.format)));
            }
            Mode::Evaluate => {
                let s = &self.scenario;
                out.push(kv("win", self.frame.win));
                out.push(kv("hop", self.frame.hop));
                out.push(kv("snr", join(&s.snr_db_list)));
                out.push(kv("trials", s.trials));
                out.push(kv("channels", s.num_channels));
                if let Some(r) = &s.rir_paths {
                    let paths: Vec<String> = r.iter().map(|p| p.display().to_string()).collect();
                    out.push(kv("rir", paths.join(",")));
                }
                if let NoiseSource::Wav(p) = &s.noise {
                    out.push(kv("noise-wav", p.display()));
                }
                out.push(kv("correlated-noise", s.correlated_noise));
                out.push(kv("preset", name(&self.preset)));
                out.push(kv("duration", self.duration));
                out.push(kv("sample-rate", self.sample_rate));
                out.push(kv("seed", s.seed));
            }
        }
        out
    }
}
