use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use mmdemod::audio::{load_wav, MultichannelAudio};
use mmdemod::demod::{esa_channel, mmd_demodulate_with_pairs, BandDemodulation, PairSelection, RepairConfig};
use mmdemod::eval::run_scenario;
use mmdemod::features::{cmvn, extract_cif, extract_mif, splice, standardize_bands, write_sidecar};
use mmdemod::filterbank::{design_filterbank, Filterbank, FilterbankConfig};

use crate::config::{ChannelChoice, Format, KindArg, RunConfig};

pub const SIDECAR: &str = "run.conf";

struct Demodulated {
    bands: Vec<BandDemodulation>,
    pairs: Option<Vec<PairSelection>>,
    fb: FilterbankConfig,
    choice: ChannelChoice,
}

fn demodulate(cfg: &RunConfig) -> Result<Demodulated> {
    let input = cfg.input.as_deref().context("--input is required")?;
    let audio: MultichannelAudio = load_wav(input)?;
    let fb = cfg.filterbank(audio.sample_rate());
    let bank: Filterbank = design_filterbank(&fb)?;
    let choice = cfg.channel_choice(audio.num_channels())?;
    let repair = RepairConfig::default();
    let (bands, pairs) = match choice {
        ChannelChoice::Mmd => {
            let (b, p) = mmd_demodulate_with_pairs(&audio, &bank, &cfg.medium, &repair)?.into_iter().unzip();
            (b, Some(p))
        }
        ChannelChoice::Single(i) => (esa_channel(&audio, i, &bank, &repair)?, None),
    };
    Ok(Demodulated {
        bands,
        pairs,
        fb,
        choice,
    })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn finish(mut w: BufWriter<File>) -> Result<()> {
    w.flush()?;
    w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    Ok(())
}

fn write_tracks(out: impl Write, bands: &[BandDemodulation]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["sample".to_string()];
    for b in bands {
        header.push(format!("b{}_freq_hz", b.band_index));
        header.push(format!("b{}_amp", b.band_index));
    }
    w.write_record(&header)?;
    let len = bands.first().map_or(0, BandDemodulation::len);
    let mut row = Vec::with_capacity(header.len());
    for n in 0..len {
        row.clear();
        row.push(n.to_string());
        for b in bands {
            row.push(b.freq[n].to_string());
            row.push(b.amp[n].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_pairs(out: impl Write, pairs: &[PairSelection]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["band", "frame", "start", "end", "m_hat", "l_hat", "mean_energy", "reversed_mean"])?;
    for sel in pairs {
        for p in &sel.frames {
            w.write_record([
                sel.band_index.to_string(),
                p.frame.to_string(),
                p.start.to_string(),
                p.end.to_string(),
                p.m_hat.to_string(),
                p.l_hat.to_string(),
                p.mean_energy.to_string(),
                p.reversed_mean.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn cmd_demod(cfg: &RunConfig) -> Result<()> {
    let d = demodulate(cfg)?;
    prepare_dir(&cfg.output_dir)?;
    let mut w = create(&cfg.output_dir, "tracks.csv")?;
    write_tracks(&mut w, &d.bands)?;
    finish(w)?;
    if let Some(pairs) = &d.pairs {
        let mut w = create(&cfg.output_dir, "pairs.csv")?;
        write_pairs(&mut w, pairs)?;
        finish(w)?;
    }
    write_sidecar(cfg.output_dir.join(SIDECAR), &cfg.entries(&d.fb, Some(d.choice)))?;
    Ok(())
}

pub fn cmd_features(cfg: &RunConfig) -> Result<()> {
    let d = demodulate(cfg)?;
    let tracks = if cfg.standardize {
        standardize_bands(&d.bands)
    } else {
        d.bands
    };
    let mut m = match cfg.kind {
        KindArg::Mif => extract_mif(&tracks, &cfg.frame)?,
        KindArg::Cif => extract_cif(&tracks, &cfg.frame, cfg.num_dct)?,
    };
    if cfg.cmvn {
        m = cmvn(&m);
    }
    let m = splice(&m, cfg.splice);

    prepare_dir(&cfg.output_dir)?;
    let name = match cfg.format {
        Format::Csv => "features.csv",
        Format::Mmdf => "features.mmdf",
    };
    let mut w = create(&cfg.output_dir, name)?;
    match cfg.format {
        Format::Csv => m.write_csv(&mut w)?,
        Format::Mmdf => m.write_mmdf(&mut w)?,
    }
    finish(w)?;

    let mut entries = cfg.entries(&d.fb, Some(d.choice));
    entries.push(("info.output".into(), name.into()));
    entries.extend(m.meta_entries().into_iter().map(|(k, v)| (format!("info.{k}"), v)));
    write_sidecar(cfg.output_dir.join(SIDECAR), &entries)?;
    Ok(())
}

pub fn cmd_evaluate(cfg: &RunConfig, stdout: &mut impl Write) -> Result<()> {
    let fb = cfg.filterbank(cfg.sample_rate);
    let bank = design_filterbank(&fb)?;
    let result = run_scenario(&cfg.source_spec(), &cfg.scenario, &bank, &cfg.medium, &cfg.frame)?;

    prepare_dir(&cfg.output_dir)?;
    let mut w = create(&cfg.output_dir, "trials.csv")?;
    result.write_trials_csv(&mut w)?;
    finish(w)?;
    let mut w = create(&cfg.output_dir, "aggregate.csv")?;
    result.write_aggregate_csv(&mut w)?;
    finish(w)?;
    write_sidecar(cfg.output_dir.join(SIDECAR), &cfg.entries(&fb, None))?;

    writeln!(
        stdout,
        "{:>8} {:>10} {:>8} {:>4} {:>12} {:>12}",
        "snr_db", "mean_%", "std_%", "n", "single_hz", "mmd_hz"
    )?;
    for a in &result.aggregates {
        writeln!(
            stdout,
            "{:>8} {:>10.2} {:>8.2} {:>4} {:>12.2} {:>12.2}",
            a.snr_db, a.mean, a.std, a.n, a.mean_rms_single, a.mean_rms_mmd
        )?;
    }
    Ok(())
}
