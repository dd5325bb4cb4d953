//! Frame-level descriptors built from frequency tracks.
//!
//! * MIF: mean instantaneous frequency of each band in every frame.
//! * CIF: the first few orthonormal DCT-II coefficients of each band's
//!   frequency track inside every frame, band-major.
//!
//! Tracks are usually standardized per band over the whole utterance first
//! ([`standardize_bands`]). [`splice`] stacks neighbouring frames.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::demod::BandDemodulation;
use crate::energy::mean;
use crate::error::{Error, Result};

const STD_FLOOR: f64 = 1e-8;

/// Short-time analysis frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameConfig {
    /// Seconds.
    pub win: f64,
    /// Seconds.
    pub hop: f64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self { win: 0.025, hop: 0.010 }
    }
}

impl FrameConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.hop > 0.0 && self.hop <= self.win && self.win.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "frame needs 0 < hop <= win, got hop={} win={}",
                self.hop, self.win
            )));
        }
        Ok(())
    }

    /// `(win, hop)` in samples.
    pub fn in_samples(&self, sample_rate: u32) -> (usize, usize) {
        let fs = f64::from(sample_rate);
        let win = ((self.win * fs).round() as usize).max(1);
        let hop = ((self.hop * fs).round() as usize).clamp(1, win);
        (win, hop)
    }

    /// Number of complete frames in `len` samples.
    pub fn num_frames(&self, len: usize, sample_rate: u32) -> usize {
        let (win, hop) = self.in_samples(sample_rate);
        if len < win {
            0
        } else {
            (len - win) / hop + 1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Mif,
    Cif,
    Spliced,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Mif => "mif",
            FeatureKind::Cif => "cif",
            FeatureKind::Spliced => "spliced",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMeta {
    /// Band index of each column block, in column order.
    pub bands: Vec<usize>,
    /// Coefficients per band; 1 for MIF.
    pub num_dct: usize,
    /// Kind before splicing.
    pub base_kind: FeatureKind,
    pub splice_context: usize,
    pub sample_rate: u32,
    pub win_samples: usize,
    pub hop_samples: usize,
    pub cmvn: bool,
}

/// Row-major `rows × cols` feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    /// Frame centers in seconds.
    pub frame_times: Vec<f64>,
    pub kind: FeatureKind,
    pub meta: FeatureMeta,
}

impl FeatureMatrix {
    /// Wraps row-major `data`; frame times are derived from the meta hop.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>, kind: FeatureKind, meta: FeatureMeta) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        let frame_times = frame_times(rows, meta.win_samples, meta.hop_samples, meta.sample_rate.max(1));
        Ok(Self {
            rows,
            cols,
            data,
            frame_times,
            kind,
            meta,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.cols..(t + 1) * self.cols]
    }

    pub fn get(&self, t: usize, c: usize) -> f64 {
        self.data[t * self.cols + c]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|t| self.get(t, c)).collect()
    }

    /// Column headers such as `mif_b3`, `cif_b0_c7` or `mif_b3_t-4`.
    pub fn column_names(&self) -> Vec<String> {
        let base: Vec<String> = self
            .meta
            .bands
            .iter()
            .flat_map(|b| {
                (0..self.meta.num_dct).map(move |c| match self.meta.base_kind {
                    FeatureKind::Cif => format!("cif_b{b}_c{c}"),
                    _ => format!("mif_b{b}"),
                })
            })
            .collect();
        if self.kind != FeatureKind::Spliced {
            return base;
        }
        let c = self.meta.splice_context as isize;
        (-c..=c)
            .flat_map(|off| base.iter().map(move |name| format!("{name}_t{off:+}")))
            .collect()
    }

    /// Key/value description of how the matrix was produced.
    pub fn meta_entries(&self) -> Vec<(String, String)> {
        let m = &self.meta;
        let bands: Vec<String> = m.bands.iter().map(usize::to_string).collect();
        vec![
            ("kind".into(), self.kind.as_str().into()),
            ("base_kind".into(), m.base_kind.as_str().into()),
            ("rows".into(), self.rows.to_string()),
            ("cols".into(), self.cols.to_string()),
            ("bands".into(), bands.join(",")),
            ("num_dct".into(), m.num_dct.to_string()),
            ("layout".into(), "band-major".into()),
            ("splice_context".into(), m.splice_context.to_string()),
            ("sample_rate".into(), m.sample_rate.to_string()),
            ("win_samples".into(), m.win_samples.to_string()),
            ("hop_samples".into(), m.hop_samples.to_string()),
            ("cmvn".into(), m.cmvn.to_string()),
        ]
    }

    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.column_names())?;
        for t in 0..self.rows {
            w.write_record(self.row(t).iter().map(f64::to_string))?;
        }
        w.flush()
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        write_file(path, |w| self.write_csv(w))
    }

    /// Binary dump: `MMDF`, u16 version, u32 rows, u32 cols, then f32 data,
    /// all little-endian.
    pub fn write_mmdf(&self, out: &mut impl Write) -> std::io::Result<()> {
        out.write_all(MMDF_MAGIC)?;
        out.write_all(&MMDF_VERSION.to_le_bytes())?;
        out.write_all(&(self.rows as u32).to_le_bytes())?;
        out.write_all(&(self.cols as u32).to_le_bytes())?;
        for v in &self.data {
            out.write_all(&(*v as f32).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn save_mmdf(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if self.rows > u32::MAX as usize || self.cols > u32::MAX as usize {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} does not fit the binary header",
                self.rows, self.cols
            )));
        }
        write_file(path, |w| self.write_mmdf(w))
    }
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    f(&mut w).map_err(io_err)?;
    w.flush().map_err(io_err)
}

pub const MMDF_MAGIC: &[u8; 4] = b"MMDF";
pub const MMDF_VERSION: u16 = 1;

/// Contents of an MMDF file.
#[derive(Debug, Clone, PartialEq)]
pub struct MmdfData {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

pub fn parse_mmdf(bytes: &[u8]) -> Result<MmdfData> {
    let bad = |m: &str| Error::MalformedFeatures(m.to_string());
    if bytes.len() < 14 || &bytes[..4] != MMDF_MAGIC {
        return Err(bad("missing MMDF header"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != MMDF_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let rows = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
    let cols = u32::from_le_bytes(bytes[10..14].try_into().expect("4 bytes")) as usize;
    let body = &bytes[14..];
    if Some(body.len()) != rows.checked_mul(cols).and_then(|n| n.checked_mul(4)) {
        return Err(bad(&format!("{rows}x{cols} header but {} data bytes", body.len())));
    }
    let data = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Ok(MmdfData { rows, cols, data })
}

pub fn load_mmdf(path: impl AsRef<Path>) -> Result<MmdfData> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
    parse_mmdf(&bytes)
}

/// Writes `key=value` lines.
pub fn write_sidecar(path: impl AsRef<Path>, entries: &[(String, String)]) -> Result<()> {
    write_file(path.as_ref(), |w| {
        for (k, v) in entries {
            writeln!(w, "{k}={v}")?;
        }
        Ok(())
    })
}

/// Per-band utterance-level standardization of the frequency tracks.
///
/// Uses the population standard deviation. A band whose deviation is below
/// `1e-8` becomes all zeros. Amplitude tracks are left untouched.
pub fn standardize_bands(demods: &[BandDemodulation]) -> Vec<BandDemodulation> {
    demods
        .iter()
        .map(|d| BandDemodulation {
            freq: standardize(&d.freq),
            ..d.clone()
        })
        .collect()
}

fn standardize(x: &[f64]) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let mu = mean(x);
    let std = (x.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / x.len() as f64).sqrt();
    if std < STD_FLOOR {
        return vec![0.0; x.len()];
    }
    x.iter().map(|v| (v - mu) / std).collect()
}

fn check_tracks(demods: &[BandDemodulation], cfg: &FrameConfig) -> Result<(usize, u32)> {
    cfg.validate()?;
    let first = demods
        .first()
        .ok_or_else(|| Error::InvalidConfig("no bands to featurize".into()))?;
    for d in demods {
        if d.sample_rate != first.sample_rate {
            return Err(Error::RateMismatch {
                expected: first.sample_rate,
                found: d.sample_rate,
            });
        }
        if d.len() != first.len() {
            return Err(Error::LengthMismatch {
                expected: first.len(),
                found: d.len(),
            });
        }
    }
    let (win, _) = cfg.in_samples(first.sample_rate);
    if first.len() < win {
        return Err(Error::TooShort {
            len: first.len(),
            min: win,
        });
    }
    Ok((first.len(), first.sample_rate))
}

fn frame_times(rows: usize, win: usize, hop: usize, sample_rate: u32) -> Vec<f64> {
    let fs = f64::from(sample_rate);
    (0..rows).map(|t| (t * hop) as f64 / fs + win as f64 / (2.0 * fs)).collect()
}

/// Generic frame-by-band extraction: `per_frame` maps one band's frame to
/// `width` values.
fn extract(
    demods: &[BandDemodulation],
    cfg: &FrameConfig,
    kind: FeatureKind,
    width: usize,
    per_frame: impl Fn(&[f64], &mut [f64]),
) -> Result<FeatureMatrix> {
    let (len, sr) = check_tracks(demods, cfg)?;
    let (win, hop) = cfg.in_samples(sr);
    let rows = cfg.num_frames(len, sr);
    let cols = demods.len() * width;
    let mut data = vec![0.0; rows * cols];
    for (t, row) in data.chunks_exact_mut(cols.max(1)).enumerate().take(rows) {
        for (d, out) in demods.iter().zip(row.chunks_exact_mut(width)) {
            per_frame(&d.freq[t * hop..t * hop + win], out);
        }
    }
    let m = FeatureMatrix {
        rows,
        cols,
        data,
        frame_times: frame_times(rows, win, hop, sr),
        kind,
        meta: FeatureMeta {
            bands: demods.iter().map(|d| d.band_index).collect(),
            num_dct: width,
            base_kind: kind,
            splice_context: 0,
            sample_rate: sr,
            win_samples: win,
            hop_samples: hop,
            cmvn: false,
        },
    };
    if m.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::ShapeMismatch("non-finite feature value".into()));
    }
    Ok(m)
}

/// Mean instantaneous frequency per band and frame; columns follow the
/// order of `demods`.
pub fn extract_mif(demods: &[BandDemodulation], cfg: &FrameConfig) -> Result<FeatureMatrix> {
    extract(demods, cfg, FeatureKind::Mif, 1, |frame, out| out[0] = mean(frame))
}

/// First `num_dct` orthonormal DCT-II coefficients of every band's frame,
/// band-major.
pub fn extract_cif(demods: &[BandDemodulation], cfg: &FrameConfig, num_dct: usize) -> Result<FeatureMatrix> {
    let sr = demods.first().map_or(16000, |d| d.sample_rate);
    let (win, _) = cfg.in_samples(sr);
    if num_dct == 0 || num_dct > win {
        return Err(Error::TooManyCoefficients {
            requested: num_dct,
            available: win,
        });
    }
    let basis = dct_basis(win, num_dct);
    extract(demods, cfg, FeatureKind::Cif, num_dct, |frame, out| {
        for (o, b) in out.iter_mut().zip(basis.chunks_exact(win)) {
            *o = b.iter().zip(frame).map(|(b, x)| b * x).sum();
        }
    })
}

/// Rows `k < num` of the orthonormal DCT-II matrix of size `len`.
fn dct_basis(len: usize, num: usize) -> Vec<f64> {
    let l = len as f64;
    let mut out = Vec::with_capacity(len * num);
    for k in 0..num {
        let s = if k == 0 { (1.0 / l).sqrt() } else { (2.0 / l).sqrt() };
        out.extend((0..len).map(|n| s * (PI * k as f64 * (2 * n + 1) as f64 / (2.0 * l)).cos()));
    }
    out
}

/// Orthonormal DCT-II, all coefficients.
pub fn dct_ii(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    dct_basis(n, n)
        .chunks_exact(n.max(1))
        .take(n)
        .map(|b| b.iter().zip(x).map(|(b, x)| b * x).sum())
        .collect()
}

/// Inverse of [`dct_ii`] for a signal of length `len`; missing trailing
/// coefficients are taken as zero.
pub fn idct_ii(coeffs: &[f64], len: usize) -> Vec<f64> {
    let basis = dct_basis(len, coeffs.len().min(len));
    let mut out = vec![0.0; len];
    for (c, b) in coeffs.iter().zip(basis.chunks_exact(len.max(1))) {
        for (o, b) in out.iter_mut().zip(b) {
            *o += c * b;
        }
    }
    out
}

/// Stacks frames `t−context ..= t+context` into each row, replicating the
/// first and last frames at the edges.
pub fn splice(features: &FeatureMatrix, context: usize) -> FeatureMatrix {
    if context == 0 {
        return features.clone();
    }
    let (rows, d) = (features.rows, features.cols);
    let cols = (2 * context + 1) * d;
    let mut data = Vec::with_capacity(rows * cols);
    for t in 0..rows {
        for off in 0..=2 * context {
            let src = (t + off).saturating_sub(context).min(rows - 1);
            data.extend_from_slice(features.row(src));
        }
    }
    FeatureMatrix {
        rows,
        cols,
        data,
        frame_times: features.frame_times.clone(),
        kind: FeatureKind::Spliced,
        meta: FeatureMeta {
            splice_context: features.meta.splice_context + context,
            ..features.meta.clone()
        },
    }
}

/// Column-wise mean and variance normalization of a feature matrix.
pub fn cmvn(features: &FeatureMatrix) -> FeatureMatrix {
    let mut out = features.clone();
    for c in 0..features.cols {
        let z = standardize(&features.column(c));
        for (t, v) in z.into_iter().enumerate() {
            out.data[t * features.cols + c] = v;
        }
    }
    out.meta.cmvn = true;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demod::DemodSource;
    use proptest::prelude::*;

    const FS: u32 = 16000;

    fn band(i: usize, freq: Vec<f64>) -> BandDemodulation {
        BandDemodulation {
            band_index: i,
            amp: vec![1.0; freq.len()],
            freq,
            sample_rate: FS,
            source: DemodSource::Mmd,
        }
    }

    #[test]
    fn frame_count() {
        let cfg = FrameConfig::default();
        assert_eq!(cfg.num_frames(16000, FS), 98);
        assert_eq!(cfg.num_frames(399, FS), 0);
        assert_eq!(cfg.num_frames(400, FS), 1);
        let d = vec![band(0, vec![1.0; 16000])];
        assert_eq!(extract_mif(&d, &cfg).unwrap().rows(), 98);
        let short = vec![band(0, vec![1.0; 399])];
        assert!(matches!(extract_mif(&short, &cfg), Err(Error::TooShort { .. })));
    }

    #[test]
    fn mif_of_constants_and_ramp() {
        let d: Vec<_> = (0..4).map(|k| band(k, vec![100.0 * (k + 1) as f64; 2000])).collect();
        let m = extract_mif(&d, &FrameConfig::default()).unwrap();
        for t in 0..m.rows() {
            assert_eq!(m.row(t), &[100.0, 200.0, 300.0, 400.0]);
        }
        let ramp: Vec<f64> = (0..2000).map(|n| 3.0 * n as f64).collect();
        let m = extract_mif(&[band(0, ramp)], &FrameConfig::default()).unwrap();
        for t in 0..m.rows() {
            // Mean of an arithmetic sequence over [160t, 160t+399].
            let center = 160.0 * t as f64 + 199.5;
            assert!((m.get(t, 0) - 3.0 * center).abs() < 1e-9);
            assert!((m.frame_times[t] * 16000.0 - (160.0 * t as f64 + 200.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn mismatched_tracks() {
        let cfg = FrameConfig::default();
        let d = vec![band(0, vec![1.0; 500]), band(1, vec![1.0; 600])];
        assert!(matches!(extract_mif(&d, &cfg), Err(Error::LengthMismatch { .. })));
        assert!(extract_mif(&[], &cfg).is_err());
        let bad = FrameConfig { win: 0.01, hop: 0.02 };
        assert!(extract_mif(&[band(0, vec![1.0; 500])], &bad).is_err());
    }

    #[test]
    fn cif_constant_track() {
        let m = extract_cif(&[band(0, vec![2.5; 1000]), band(1, vec![-1.0; 1000])], &FrameConfig::default(), 10).unwrap();
        assert_eq!(m.cols(), 20);
        for t in 0..m.rows() {
            assert!((m.get(t, 0) - 2.5 * 20.0).abs() < 1e-9);
            assert!((m.get(t, 10) + 20.0).abs() < 1e-9);
            for c in (1..10).chain(11..20) {
                assert!(m.get(t, c).abs() < 1e-9);
            }
        }
        assert!(matches!(
            extract_cif(&[band(0, vec![0.0; 1000])], &FrameConfig::default(), 401),
            Err(Error::TooManyCoefficients { requested: 401, available: 400 })
        ));
    }

    #[test]
    fn dct_matches_direct_sum() {
        let x: Vec<f64> = (0..16).map(|n| ((n * 7 % 5) as f64).sin() + 0.3 * n as f64).collect();
        let c = dct_ii(&x);
        let l = x.len() as f64;
        for (k, ck) in c.iter().enumerate() {
            let s: f64 = x
                .iter()
                .enumerate()
                .map(|(n, v)| v * (PI * k as f64 * (n as f64 + 0.5) / l).cos())
                .sum();
            let w = if k == 0 { (1.0 / l).sqrt() } else { (2.0 / l).sqrt() };
            assert!((ck - w * s).abs() < 1e-12);
        }
        let back = idct_ii(&c, x.len());
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dct_bin_concentration() {
        let l = 400;
        let x: Vec<f64> = (0..l).map(|n| (PI * 3.0 * (n as f64 + 0.5) / l as f64).cos()).collect();
        let c = dct_ii(&x);
        let total: f64 = c.iter().map(|v| v * v).sum();
        assert!(c[3] * c[3] > 0.999999 * total);
    }

    #[test]
    fn splice_shapes_and_edges() {
        let d: Vec<_> = (0..12).map(|k| band(k, (0..1200).map(|n| (n + k) as f64).collect())).collect();
        let m = extract_mif(&d, &FrameConfig::default()).unwrap();
        assert_eq!(splice(&m, 0), m);
        let s = splice(&m, 4);
        assert_eq!((s.rows(), s.cols()), (m.rows(), 108));
        assert_eq!(s.kind, FeatureKind::Spliced);
        assert_eq!(&s.row(0)[..12], m.row(0));
        assert_eq!(&s.row(0)[48..60], m.row(0));
        assert_eq!(&s.row(0)[60..72], m.row(1));
        assert_eq!(&s.row(m.rows() - 1)[96..], m.row(m.rows() - 1));
        assert_eq!(s.column_names().len(), 108);
        assert_eq!(s.column_names()[0], "mif_b0_t-4");

        let one = extract_mif(&[band(0, vec![7.0; 400])], &FrameConfig::default()).unwrap();
        assert_eq!(splice(&one, 3).row(0), &[7.0; 7]);
    }

    #[test]
    fn standardization() {
        let x: Vec<f64> = (0..5000).map(|n| 1000.0 + 50.0 * (n as f64 * 0.01).sin() + (n % 7) as f64).collect();
        let z = standardize_bands(&[band(0, x.clone()), band(1, vec![440.0; 5000])]);
        let f = &z[0].freq;
        let mu = mean(f);
        let var = f.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / f.len() as f64;
        assert!(mu.abs() < 1e-9 && (var - 1.0).abs() < 1e-6);
        assert!(z[1].freq.iter().all(|v| *v == 0.0));
        assert_eq!(z[0].amp, vec![1.0; 5000]);

        let affine: Vec<f64> = x.iter().map(|v| 2.5 * v - 300.0).collect();
        let za = standardize_bands(&[band(0, affine)]);
        for (a, b) in za[0].freq.iter().zip(f) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn cmvn_columns() {
        let d = vec![
            band(0, (0..2000).map(|n| (n as f64).sqrt()).collect()),
            band(1, vec![3.0; 2000]),
        ];
        let m = cmvn(&extract_mif(&d, &FrameConfig::default()).unwrap());
        let c0 = m.column(0);
        assert!(mean(&c0).abs() < 1e-9);
        assert!(m.column(1).iter().all(|v| *v == 0.0));
        assert!(m.meta.cmvn);
    }

    #[test]
    fn mmdf_round_trip() {
        let d: Vec<_> = (0..3).map(|k| band(k, (0..800).map(|n| (n * (k + 1)) as f64 * 0.5).collect())).collect();
        let m = extract_cif(&d, &FrameConfig::default(), 4).unwrap();
        let mut buf = Vec::new();
        m.write_mmdf(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"MMDF");
        assert_eq!(u16::from_le_bytes([buf[4], buf[5]]), 1);
        assert_eq!(buf.len(), 14 + 4 * m.rows() * m.cols());
        let back = parse_mmdf(&buf).unwrap();
        assert_eq!((back.rows, back.cols), (m.rows(), m.cols()));
        for (a, b) in back.data.iter().zip(m.data()) {
            assert_eq!(*a, *b as f32);
        }
        assert!(parse_mmdf(&buf[..buf.len() - 1]).is_err());
        assert!(parse_mmdf(b"MMDX\x01\x00").is_err());
    }

    #[test]
    fn csv_layout() {
        let d = vec![band(4, vec![1.5; 400]), band(5, vec![2.0; 400])];
        let m = extract_cif(&d, &FrameConfig::default(), 2).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "cif_b4_c0,cif_b4_c1,cif_b5_c0,cif_b5_c1");
        assert_eq!(lines.next().unwrap().split(',').count(), 4);
        assert_eq!(lines.next(), None);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn band_order_only_permutes_columns(seed in 0u64..1000, rot in 1usize..4) {
            let d: Vec<_> = (0..4)
                .map(|k| band(k, (0..900).map(|n| ((n as u64 * (seed + 3) + k as u64 * 17) % 101) as f64).collect()))
                .collect();
            let cfg = FrameConfig::default();
            let mut permuted = d.clone();
            permuted.rotate_left(rot);
            for (a, b, w) in [
                (extract_mif(&d, &cfg).unwrap(), extract_mif(&permuted, &cfg).unwrap(), 1),
                (extract_cif(&d, &cfg, 5).unwrap(), extract_cif(&permuted, &cfg, 5).unwrap(), 5),
            ] {
                for t in 0..a.rows() {
                    for k in 0..4 {
                        let j = (k + 4 - rot) % 4;
                        prop_assert_eq!(&a.row(t)[k * w..(k + 1) * w], &b.row(t)[j * w..(j + 1) * w]);
                    }
                }
            }
        }
    }
}
