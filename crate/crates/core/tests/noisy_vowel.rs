use mmdemod::audio::{stack_channels, AudioBuffer};
use mmdemod::demod::{esa_channel, esa_single, mmd_demodulate, MediumFrameConfig, RepairConfig};
use mmdemod::eval::{freq_rms_error, run_scenario, synthesize_amfm, AmFmSpec, Resonance, ScenarioConfig};
use mmdemod::features::{extract_mif, FrameConfig};
use mmdemod::filterbank::{design_filterbank, FilterbankConfig, Profile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const FS: u32 = 16000;

fn two_formants(c1: f64, c2: f64) -> AmFmSpec {
    let r = |carrier, amplitude, fm_deviation| Resonance {
        carrier,
        am_depth: 0.3,
        am_rate: 4.0,
        fm_deviation,
        fm_rate: 5.0,
        amplitude,
    };
    AmFmSpec {
        resonances: vec![r(c1, 1.0, 30.0), r(c2, 0.7, 50.0)],
        duration: 0.5,
        sample_rate: FS,
    }
}

/// Pooled band-frequency RMS against the clean-source MIF, channel with the
/// most noise as the baseline.
#[test]
fn mmd_beats_noisiest_channel_at_0db() {
    let bank = design_filterbank(&FilterbankConfig::for_profile(Profile::Cif, FS)).unwrap();
    let (clean, _) = synthesize_amfm(&two_formants(700.0, 1220.0)).unwrap();
    let fcfg = FrameConfig::default();
    let reference: Vec<_> = bank.filters().iter().map(|f| esa_single(&clean, f).unwrap()).collect();
    let reference = extract_mif(&reference, &fcfg).unwrap();

    let trials = 20;
    let (mut single, mut mmd) = (0.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let g = clean.power().sqrt();
    for _ in 0..trials {
        let chans = (0..3)
            .map(|_| {
                let x = clean.samples().iter().map(|s| s + g * rng.sample::<f64, _>(StandardNormal)).collect();
                AudioBuffer::new(x, FS).unwrap()
            })
            .collect();
        let audio = stack_channels(chans).unwrap();
        let noisiest = (0..3)
            .max_by(|a, b| audio.channels()[*a].power().total_cmp(&audio.channels()[*b].power()))
            .unwrap();
        let sd = esa_channel(&audio, noisiest, &bank, &RepairConfig::default()).unwrap();
        let md = mmd_demodulate(&audio, &bank, &MediumFrameConfig::default()).unwrap();
        single += freq_rms_error(&extract_mif(&sd, &fcfg).unwrap(), &reference).unwrap() / trials as f64;
        mmd += freq_rms_error(&extract_mif(&md, &fcfg).unwrap(), &reference).unwrap() / trials as f64;
    }
    assert!(mmd <= single, "mmd {mmd:.1} Hz, single {single:.1} Hz");
}

#[test]
fn near_clean_errors_vanish() {
    let bank = design_filterbank(&FilterbankConfig::for_profile(Profile::Mif, FS)).unwrap();
    let cfg = ScenarioConfig {
        snr_db_list: vec![60.0],
        trials: 4,
        seed: 3,
        ..Default::default()
    };
    let r = run_scenario(&AmFmSpec::vowel(0.3, FS), &cfg, &bank, &MediumFrameConfig::default(), &FrameConfig::default())
        .unwrap();
    let a = r.aggregate(60.0).unwrap();
    // Against band spacing of a few hundred Hz both are negligible.
    assert!(a.mean_rms_single < 5.0 && a.mean_rms_mmd < 5.0, "{a:?}");
}
