//! Frequency-domain diagnostics for velocity series.
//!
//! - One-sided DFT magnitude spectrum. The forward transform is unnormalized
//!   and the inverse carries `1/n`, so Parseval reads
//!   `sum |x|^2 = (1/n) sum |X|^2`.
//! - Continuous wavelet transform with the second-order Gaussian (Mexican
//!   hat) mother wavelet `psi(t) = C (1 - t^2) exp(-t^2 / 2)`, L2-normalized
//!   (`C = 2 / (sqrt(3) pi^(1/4))`), evaluated as a direct inner product at
//!   each scale and translation. Scales are in samples.

use std::io::{BufWriter, Write};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::VelocitySeries;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("series needs at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("sampling is not uniform at sample {index} (delta {delta_ms} ms, expected {expected_ms} ms)")]
    NonUniformSampling { index: usize, delta_ms: f64, expected_ms: f64 },
    #[error("bad scales: {0}")]
    BadScales(String),
}

/// Allowed relative deviation of a sample delta from the nominal frame
/// duration before a series counts as non-uniform.
pub const UNIFORMITY_TOLERANCE: f64 = 0.1;

pub const WAVELET_TAG: &str = "gaussian-2nd-order";

/// L2 normalization constant of the second-order Gaussian wavelet.
pub fn gaus2_norm() -> f64 {
    2.0 / (3f64.sqrt() * std::f64::consts::PI.powf(0.25))
}

pub fn gaus2(t: f64) -> f64 {
    let t2 = t * t;
    gaus2_norm() * (1.0 - t2) * (-t2 / 2.0).exp()
}

/// Wavelet support is truncated at this many scales either side of centre.
pub const SUPPORT_HALF_WIDTH: f64 = 5.0;

fn check_uniform(series: &VelocitySeries) -> Result<(), SpectralError> {
    let expected_ms = series.frame_ms();
    for (i, w) in series.samples.windows(2).enumerate() {
        let delta_ms = w[1].t_ms - w[0].t_ms;
        if (delta_ms - expected_ms).abs() > UNIFORMITY_TOLERANCE * expected_ms {
            return Err(SpectralError::NonUniformSampling {
                index: i + 1,
                delta_ms,
                expected_ms,
            });
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// DFT

/// Unnormalized forward DFT.
pub fn dft(x: &[f64]) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&r| Complex::new(r, 0.0)).collect();
    if !buf.is_empty() {
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    }
    buf
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumBin {
    pub freq_hz: f64,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeSpectrum {
    pub fps: f64,
    pub n: usize,
    pub mean_removed: bool,
    pub bins: Vec<SpectrumBin>,
}

impl MagnitudeSpectrum {
    /// Bin with the largest magnitude, skipping DC.
    pub fn dominant(&self) -> Option<SpectrumBin> {
        self.bins
            .iter()
            .skip(1)
            .copied()
            .fold(None, |best: Option<SpectrumBin>, b| match best {
                Some(x) if x.magnitude >= b.magnitude => Some(x),
                _ => Some(b),
            })
    }

    /// CSV with header `freq_hz,magnitude`.
    pub fn write_csv<W: Write>(&self, writer: W) -> std::io::Result<()> {
        let mut w = BufWriter::new(writer);
        writeln!(w, "freq_hz,magnitude")?;
        for b in &self.bins {
            writeln!(w, "{},{}", b.freq_hz, b.magnitude)?;
        }
        w.flush()
    }
}

/// One-sided magnitude spectrum, bins `0..=n/2` at spacing `fps / n`.
pub fn fft_magnitude(series: &VelocitySeries, remove_mean: bool) -> Result<MagnitudeSpectrum, SpectralError> {
    let n = series.len();
    if n < 2 {
        return Err(SpectralError::TooShort { needed: 2, got: n });
    }
    check_uniform(series)?;
    let mut x = series.values();
    if remove_mean {
        let mean = x.iter().sum::<f64>() / n as f64;
        x.iter_mut().for_each(|v| *v -= mean);
    }
    let spectrum = dft(&x);
    let bins = spectrum[..=n / 2]
        .iter()
        .enumerate()
        .map(|(k, z)| SpectrumBin {
            freq_hz: k as f64 * series.fps / n as f64,
            magnitude: z.norm(),
        })
        .collect();
    Ok(MagnitudeSpectrum {
        fps: series.fps,
        n,
        mean_removed: remove_mean,
        bins,
    })
}

// ---------------------------------------------------------------------------
// CWT

/// Discrete wavelet taps for one scale, `h[M + m]` for `m` in `-M..=M`, with
/// `M = ceil(5 a)`. The `1/sqrt(a)` factor is folded in. After truncation the
/// taps are corrected to exact zero mean by removing a matching multiple of
/// the Gaussian envelope; symmetry gives the zero first moment.
pub fn wavelet_taps(scale: f64) -> Vec<f64> {
    let half = (SUPPORT_HALF_WIDTH * scale).ceil() as usize;
    let norm = 1.0 / scale.sqrt();
    let mut psi = Vec::with_capacity(half + 1);
    let mut env = Vec::with_capacity(half + 1);
    for m in 0..=half {
        let t = m as f64 / scale;
        psi.push(gaus2(t));
        env.push((-t * t / 2.0).exp());
    }
    let total = |v: &[f64]| v[0] + 2.0 * v[1..].iter().sum::<f64>();
    let lambda = total(&psi) / total(&env);
    let one_sided: Vec<f64> = psi
        .iter()
        .zip(&env)
        .map(|(p, g)| norm * (p - lambda * g))
        .collect();
    let mut taps = Vec::with_capacity(2 * half + 1);
    taps.extend(one_sided[1..].iter().rev());
    taps.extend(one_sided.iter());
    taps
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CwtResult {
    pub wavelet: String,
    pub normalization: f64,
    /// Scales in samples, ascending.
    pub scales: Vec<f64>,
    pub translations_ms: Vec<f64>,
    /// One row per scale, one column per translation.
    pub coefficients: Vec<Vec<f64>>,
    /// Half-width of the truncated support per scale, in samples.
    pub support: Vec<usize>,
}

impl CwtResult {
    pub fn rows(&self) -> usize {
        self.scales.len()
    }

    pub fn cols(&self) -> usize {
        self.translations_ms.len()
    }

    /// Whether the wavelet at (scale, translation) lies entirely within the series.
    pub fn is_interior(&self, scale: usize, b: usize) -> bool {
        let m = self.support[scale];
        b >= m && b + m < self.cols()
    }

    /// Row-major little-endian f64 matrix.
    pub fn write_binary<W: Write>(&self, writer: W) -> std::io::Result<()> {
        let mut w = BufWriter::new(writer);
        for row in &self.coefficients {
            for v in row {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()
    }

    pub fn sidecar(&self) -> CwtSidecar {
        CwtSidecar {
            wavelet: self.wavelet.clone(),
            normalization: self.normalization,
            support_half_width_scales: SUPPORT_HALF_WIDTH,
            rows: self.rows(),
            cols: self.cols(),
            dtype: "f64le".into(),
            layout: "row-major, rows = scales".into(),
            scales: self.scales.clone(),
            translations_ms: self.translations_ms.clone(),
        }
    }
}

/// JSON description of the binary CWT matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CwtSidecar {
    pub wavelet: String,
    pub normalization: f64,
    pub support_half_width_scales: f64,
    pub rows: usize,
    pub cols: usize,
    pub dtype: String,
    pub layout: String,
    pub scales: Vec<f64>,
    pub translations_ms: Vec<f64>,
}

fn check_scales(scales: &[f64]) -> Result<(), SpectralError> {
    if scales.is_empty() {
        return Err(SpectralError::BadScales("empty scale list".into()));
    }
    if let Some(s) = scales.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
        return Err(SpectralError::BadScales(format!("scale {s} is not positive")));
    }
    if scales.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SpectralError::BadScales("scales must be strictly ascending".into()));
    }
    Ok(())
}

/// Coefficients of `x` at every sample for each scale. Samples outside the
/// series count as zero.
pub fn cwt_gaus2_values(x: &[f64], scales: &[f64]) -> Result<Vec<Vec<f64>>, SpectralError> {
    check_scales(scales)?;
    Ok(scales.iter().map(|&a| cwt_row(x, &wavelet_taps(a))).collect())
}

fn cwt_row(x: &[f64], taps: &[f64]) -> Vec<f64> {
    let n = x.len() as isize;
    let half = (taps.len() / 2) as isize;
    let centre = taps[half as usize];
    (0..n)
        .map(|b| {
            let at = |i: isize| if (0..n).contains(&i) { x[i as usize] } else { 0.0 };
            let mut acc = centre * x[b as usize];
            for m in 1..=half {
                acc += taps[(half + m) as usize] * (at(b + m) + at(b - m));
            }
            acc
        })
        .collect()
}

pub fn cwt_gaus2(series: &VelocitySeries, scales: &[f64]) -> Result<CwtResult, SpectralError> {
    check_scales(scales)?;
    if series.len() < 3 {
        return Err(SpectralError::TooShort { needed: 3, got: series.len() });
    }
    let x = series.values();
    let coefficients = cwt_gaus2_values(&x, scales)?;
    Ok(CwtResult {
        wavelet: WAVELET_TAG.into(),
        normalization: gaus2_norm(),
        scales: scales.to_vec(),
        translations_ms: series.times(),
        coefficients,
        support: scales
            .iter()
            .map(|a| (SUPPORT_HALF_WIDTH * a).ceil() as usize)
            .collect(),
    })
}

/// `count` logarithmically spaced scales from `min` to `max` inclusive.
pub fn log_scales(min: f64, max: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![min],
        _ => {
            let (lo, hi) = (min.ln(), max.ln());
            (0..count)
                .map(|i| (lo + (hi - lo) * i as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}

/// 32 scales from 2 samples up to the search-window length.
pub fn default_scales(window_frames: usize) -> Vec<f64> {
    log_scales(2.0, (window_frames as f64).max(3.0), 32)
}

// ---------------------------------------------------------------------------
// Dominant scale trace

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleTrace {
    pub translations_ms: Vec<f64>,
    /// Scale maximizing |W| at each translation; `None` where the column is all zero.
    pub scale: Vec<Option<f64>>,
    /// The maximal |W| at each translation.
    pub strength: Vec<f64>,
}

impl ScaleTrace {
    /// Contiguous runs of translations whose strength is at least
    /// `fraction` of the overall maximum, as inclusive index ranges.
    pub fn regions(&self, fraction: f64) -> Vec<(usize, usize)> {
        let max = self.strength.iter().copied().fold(0.0, f64::max);
        if max <= 0.0 {
            return Vec::new();
        }
        let threshold = fraction * max;
        let mut out = Vec::new();
        let mut start = None;
        for (i, &s) in self.strength.iter().enumerate() {
            match (s >= threshold, start) {
                (true, None) => start = Some(i),
                (false, Some(st)) => {
                    out.push((st, i - 1));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(st) = start {
            out.push((st, self.strength.len() - 1));
        }
        out
    }

    /// CSV with header `t_ms,scale,strength`; undefined scales are left empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> std::io::Result<()> {
        let mut w = BufWriter::new(writer);
        writeln!(w, "t_ms,scale,strength")?;
        for ((t, s), m) in self.translations_ms.iter().zip(&self.scale).zip(&self.strength) {
            match s {
                Some(s) => writeln!(w, "{t},{s},{m}")?,
                None => writeln!(w, "{t},,{m}")?,
            }
        }
        w.flush()
    }
}

pub fn peak_scale_map(cwt: &CwtResult) -> ScaleTrace {
    let cols = cwt.cols();
    let mut scale = Vec::with_capacity(cols);
    let mut strength = Vec::with_capacity(cols);
    for b in 0..cols {
        let mut best: Option<(usize, f64)> = None;
        for (i, row) in cwt.coefficients.iter().enumerate() {
            let m = row[b].abs();
            if m > 0.0 && best.is_none_or(|(_, bm)| m > bm) {
                best = Some((i, m));
            }
        }
        scale.push(best.map(|(i, _)| cwt.scales[i]));
        strength.push(best.map_or(0.0, |(_, m)| m));
    }
    ScaleTrace {
        translations_ms: cwt.translations_ms.clone(),
        scale,
        strength,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(values: &[f64]) -> VelocitySeries {
        VelocitySeries::from_values("s", 30.0, 0.0, values)
    }

    #[test]
    fn wavelet_is_l2_normalized() {
        // Riemann sum of psi^2 over a fine grid.
        let h = 1e-3;
        let e: f64 = (-12_000..=12_000).map(|i| gaus2(i as f64 * h).powi(2) * h).sum();
        assert!((e - 1.0).abs() < 1e-9, "{e}");
        assert_eq!(gaus2(0.0), gaus2_norm());
    }

    #[test]
    fn taps_have_zero_sum_and_symmetry() {
        for a in [1.0, 2.5, 7.0, 30.0] {
            let taps = wavelet_taps(a);
            let half = (SUPPORT_HALF_WIDTH * a).ceil() as usize;
            assert_eq!(taps.len(), 2 * half + 1);
            let sum: f64 = taps.iter().sum();
            let scale: f64 = taps.iter().map(|t| t.abs()).sum();
            assert!(sum.abs() < 1e-14 * scale);
            for i in 0..taps.len() {
                assert_eq!(taps[i], taps[taps.len() - 1 - i]);
            }
        }
    }

    #[test]
    fn constant_series_is_all_dc() {
        let spec = fft_magnitude(&series(&[2.5; 64]), false).unwrap();
        assert_eq!(spec.bins.len(), 33);
        assert!((spec.bins[0].magnitude - 160.0).abs() < 1e-9);
        assert!(spec.bins[1..].iter().all(|b| b.magnitude < 1e-9));
        let centered = fft_magnitude(&series(&[2.5; 64]), true).unwrap();
        assert!(centered.bins.iter().all(|b| b.magnitude < 1e-9));
    }

    #[test]
    fn sinusoid_dominant_bin() {
        let x: Vec<f64> = (0..300)
            .map(|i| (2.0 * std::f64::consts::PI * 3.0 * i as f64 / 30.0).sin())
            .collect();
        let spec = fft_magnitude(&series(&x), false).unwrap();
        let dom = spec.dominant().unwrap();
        assert!((dom.freq_hz - 3.0).abs() < 1e-12);
        assert!((spec.bins[30].freq_hz - 3.0).abs() < 1e-12);
        assert_eq!(spec.bins.last().unwrap().freq_hz, 15.0);
    }

    #[test]
    fn non_uniform_sampling_rejected() {
        let mut s = series(&[1.0, 2.0, 3.0, 4.0]);
        s.samples[2].t_ms += 10.0;
        assert!(matches!(fft_magnitude(&s, false), Err(SpectralError::NonUniformSampling { .. })));
        assert!(matches!(fft_magnitude(&series(&[1.0]), false), Err(SpectralError::TooShort { .. })));
    }

    #[test]
    fn bad_scales() {
        let s = series(&[0.0; 20]);
        assert!(cwt_gaus2(&s, &[]).is_err());
        assert!(cwt_gaus2(&s, &[2.0, 1.0]).is_err());
        assert!(cwt_gaus2(&s, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn zero_input_gives_zero_matrix_and_undefined_trace() {
        let cwt = cwt_gaus2(&series(&[0.0; 50]), &[1.0, 2.0, 4.0]).unwrap();
        assert_eq!((cwt.rows(), cwt.cols()), (3, 50));
        assert!(cwt.coefficients.iter().flatten().all(|&c| c == 0.0));
        let trace = peak_scale_map(&cwt);
        assert!(trace.scale.iter().all(Option::is_none));
        assert!(trace.regions(0.5).is_empty());
    }

    #[test]
    fn vanishes_on_constant_and_linear_trends() {
        let scales = log_scales(1.0, 16.0, 12);
        let n = 400;
        let constant = vec![3.0; n];
        let linear: Vec<f64> = (0..n).map(|i| 0.7 * i as f64 - 20.0).collect();
        for x in [&constant, &linear] {
            let w = cwt_gaus2_values(x, &scales).unwrap();
            let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (r, &a) in scales.iter().enumerate() {
                let half = (SUPPORT_HALF_WIDTH * a).ceil() as usize;
                for b in half..n - half {
                    assert!(w[r][b].abs() < 1e-8 * peak, "a={a} b={b} w={}", w[r][b]);
                }
            }
        }
    }

    #[test]
    fn two_pulses_two_regions() {
        let pulse = |c: f64, i: usize| (-0.5 * ((i as f64 - c) / 4.0).powi(2)).exp();
        let x: Vec<f64> = (0..600).map(|i| pulse(150.0, i) + pulse(450.0, i)).collect();
        let cwt = cwt_gaus2(&series(&x), &default_scales(30)).unwrap();
        let trace = peak_scale_map(&cwt);
        let regions = trace.regions(0.5);
        assert_eq!(regions.len(), 2, "{regions:?}");
        assert!(regions[0].0 <= 150 && 150 <= regions[0].1);
        assert!(regions[1].0 <= 450 && 450 <= regions[1].1);
    }

    #[test]
    fn sidecar_and_binary_layout() {
        let cwt = cwt_gaus2(&series(&[1.0, 0.0, -1.0, 2.0, 0.5]), &[1.0, 2.0]).unwrap();
        let mut buf = Vec::new();
        cwt.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 2 * 5 * 8);
        let first = f64::from_le_bytes(buf[..8].try_into().unwrap());
        assert_eq!(first, cwt.coefficients[0][0]);
        let side = cwt.sidecar();
        assert_eq!((side.rows, side.cols), (2, 5));
        assert_eq!(side.wavelet, WAVELET_TAG);
    }
}
