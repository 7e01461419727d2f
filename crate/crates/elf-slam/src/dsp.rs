//! Excitation chirp synthesis, echo-trace extraction, and the spectrogram /
//! PSD front end that feeds the feature extractor.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Samples kept in one echo trace. A 96-point window with hop 48 over this
/// length yields exactly 48 frames, matching the 12x48 feature image.
pub const TRACE_LEN: usize = 2352;

/// STFT window length in samples.
pub const STFT_WINDOW: usize = 96;

/// STFT hop in samples.
pub const STFT_HOP: usize = 48;

/// One-sided frequency bins of a 96-point transform.
pub const PSD_BINS: usize = STFT_WINDOW / 2 + 1;

/// Frequency bins kept in the spectrogram (centers in [15.0, 20.5) kHz at
/// 44.1 ksps, i.e. bins 33..=44 of the 96-point transform).
pub const SPEC_BINS: usize = 12;

/// Number of STFT frames over one trace.
pub const SPEC_FRAMES: usize = (TRACE_LEN - STFT_WINDOW) / STFT_HOP + 1;

/// Sweep law of the excitation chirp.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    Logarithmic,
    Linear,
}

/// Excitation chirp parameters.
#[derive(Debug, Clone)]
pub struct ChirpConfig<T> {
    pub sample_rate_hz: u32,
    pub f0_hz: T,
    pub f1_hz: T,
    pub duration_s: T,
    pub sweep: Sweep,
}

impl<T: Scalar> Default for ChirpConfig<T> {
    fn default() -> Self {
        Self {
            sample_rate_hz: 44_100,
            f0_hz: T::of(15_000.0),
            f1_hz: T::of(20_000.0),
            duration_s: T::of(0.010),
            sweep: Sweep::Logarithmic,
        }
    }
}

impl<T: Scalar> ChirpConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let fs = T::of_usize(self.sample_rate_hz as usize);
        if !(self.f0_hz > T::zero() && self.f0_hz < self.f1_hz && self.f1_hz < fs / T::of(2.0)) {
            return Err(Error::InvalidConfig(format!(
                "chirp band must satisfy 0 < f0 < f1 < fs/2, got f0={} f1={} fs={}",
                self.f0_hz, self.f1_hz, fs
            )));
        }
        if self.duration_s * fs < T::of(2.0) {
            return Err(Error::InvalidConfig(format!(
                "chirp must span at least 2 samples, got duration {} s",
                self.duration_s
            )));
        }
        Ok(())
    }

    /// Number of chirp samples.
    pub fn num_samples(&self) -> usize {
        (self.duration_s.as_f64() * self.sample_rate_hz as f64).round() as usize
    }

    /// Instantaneous frequency at time `t` in seconds.
    pub fn instantaneous_freq(&self, t: T) -> T {
        match self.sweep {
            Sweep::Logarithmic => {
                let ratio = self.f1_hz / self.f0_hz;
                self.f0_hz * ratio.powf(t / self.duration_s)
            }
            Sweep::Linear => self.f0_hz + (self.f1_hz - self.f0_hz) * t / self.duration_s,
        }
    }

    /// Phase (integral of 2*pi*f) at time `t` in seconds.
    pub fn phase(&self, t: T) -> T {
        let two_pi = T::of(2.0) * T::PI();
        match self.sweep {
            Sweep::Logarithmic => {
                let k = self.f1_hz / self.f0_hz;
                let lnk = k.ln();
                two_pi * self.f0_hz * self.duration_s / lnk * (k.powf(t / self.duration_s) - T::one())
            }
            Sweep::Linear => {
                two_pi
                    * (self.f0_hz * t
                        + (self.f1_hz - self.f0_hz) * t * t / (T::of(2.0) * self.duration_s))
            }
        }
    }
}

/// A raw microphone recording with samples in [-1, 1].
#[derive(Debug, Clone)]
pub struct Recording<T> {
    pub samples: Vec<T>,
    pub sample_rate_hz: u32,
}

impl<T: Scalar> Recording<T> {
    pub fn new(samples: Vec<T>, sample_rate_hz: u32) -> Self {
        Self {
            samples,
            sample_rate_hz,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.iter().any(|s| s.abs() > T::one()) {
            return Err(Error::InvalidConfig(
                "recording samples must lie in [-1, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Fixed-length echo window kept after discarding the direct path and the
/// first body reflection.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoTrace<T> {
    samples: Vec<T>,
}

impl<T: Scalar> EchoTrace<T> {
    pub fn new(samples: Vec<T>) -> Result<Self> {
        if samples.len() != TRACE_LEN {
            return Err(Error::Length(format!(
                "echo trace must be {TRACE_LEN} samples, got {}",
                samples.len()
            )));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    /// Converts the sample precision, used when loading f32 wire data.
    pub fn cast<U: Scalar>(&self) -> EchoTrace<U> {
        EchoTrace {
            samples: self.samples.iter().map(|s| U::of(s.as_f64())).collect(),
        }
    }
}

/// Magnitude spectrogram of one echo trace: `SPEC_BINS` frequency rows by
/// `SPEC_FRAMES` time columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram<T> {
    magnitudes: Vec<T>,
    pub bin_freqs_hz: Vec<T>,
}

impl<T: Scalar> Spectrogram<T> {
    pub fn rows(&self) -> usize {
        SPEC_BINS
    }

    pub fn cols(&self) -> usize {
        SPEC_FRAMES
    }

    pub fn get(&self, bin: usize, frame: usize) -> T {
        self.magnitudes[bin * SPEC_FRAMES + frame]
    }

    /// Row-major magnitude data, `rows x cols`.
    pub fn data(&self) -> &[T] {
        &self.magnitudes
    }

    pub fn from_data(magnitudes: Vec<T>, bin_freqs_hz: Vec<T>) -> Result<Self> {
        if magnitudes.len() != SPEC_BINS * SPEC_FRAMES || bin_freqs_hz.len() != SPEC_BINS {
            return Err(Error::Shape(format!(
                "spectrogram must be {SPEC_BINS}x{SPEC_FRAMES} with {SPEC_BINS} bin frequencies"
            )));
        }
        Ok(Self {
            magnitudes,
            bin_freqs_hz,
        })
    }

    pub fn max_magnitude(&self) -> T {
        self.magnitudes
            .iter()
            .fold(T::zero(), |m, &v| if v > m { v } else { m })
    }
}

/// Generates the unit-amplitude excitation chirp.
pub fn generate_chirp<T: Scalar>(cfg: &ChirpConfig<T>) -> Result<Recording<T>> {
    cfg.validate()?;
    let n = cfg.num_samples();
    let fs = T::of_usize(cfg.sample_rate_hz as usize);
    let samples = (0..n)
        .map(|i| {
            let t = T::of_usize(i) / fs;
            cfg.phase(t).sin()
        })
        .collect();
    Ok(Recording::new(samples, cfg.sample_rate_hz))
}

/// Sliding-window Pearson correlation of `rec` against `template`. Windows
/// with zero variance on either side map to 0.
pub fn matched_filter<T: Scalar>(rec: &Recording<T>, template: &Recording<T>) -> Result<Vec<T>> {
    let x = &rec.samples;
    let t = &template.samples;
    let m = t.len();
    if m == 0 || m > x.len() {
        return Err(Error::Length(format!(
            "template length {} must be in 1..={}",
            m,
            x.len()
        )));
    }
    if rec.sample_rate_hz != template.sample_rate_hz {
        return Err(Error::InvalidConfig(
            "recording and template sample rates differ".into(),
        ));
    }
    let mf = T::of_usize(m);
    let t_mean = t.iter().fold(T::zero(), |a, &v| a + v) / mf;
    let t_var = t.iter().fold(T::zero(), |a, &v| a + (v - t_mean) * (v - t_mean));
    let n_out = x.len() - m + 1;
    let mut out = Vec::with_capacity(n_out);
    // Running window sums keep the scan O(n) outside the dot product.
    let mut w_sum = x[..m].iter().fold(T::zero(), |a, &v| a + v);
    let mut w_sq = x[..m].iter().fold(T::zero(), |a, &v| a + v * v);
    for i in 0..n_out {
        if i > 0 {
            let enter = x[i + m - 1];
            let leave = x[i - 1];
            w_sum += enter - leave;
            w_sq += enter * enter - leave * leave;
        }
        let w_var = w_sq - w_sum * w_sum / mf;
        let denom_sq = w_var * t_var;
        if denom_sq <= T::zero() {
            out.push(T::zero());
            continue;
        }
        let mut dot = T::zero();
        for k in 0..m {
            dot += x[i + k] * t[k];
        }
        let cov = dot - w_sum * t_mean;
        let r = cov / denom_sq.sqrt();
        // Clamp away round-off excursions past +/-1.
        out.push(r.max(-T::one()).min(T::one()));
    }
    Ok(out)
}

/// Index of the first kept sample: the direct path plus the first body
/// reflection span is `duration_s + 1 ms` after emission start.
pub fn trace_start_index<T: Scalar>(cfg: &ChirpConfig<T>) -> usize {
    ((cfg.duration_s.as_f64() + 0.001) * cfg.sample_rate_hz as f64).round() as usize
}

/// Cuts the fixed-length echo window out of a recording that starts at the
/// chirp emission.
pub fn extract_echo_trace<T: Scalar>(
    rec: &Recording<T>,
    cfg: &ChirpConfig<T>,
) -> Result<EchoTrace<T>> {
    let start = trace_start_index(cfg);
    let needed = start + TRACE_LEN;
    if rec.samples.len() < needed {
        return Err(Error::Length(format!(
            "recording has {} samples, echo extraction needs at least {needed}",
            rec.samples.len()
        )));
    }
    EchoTrace::new(rec.samples[start..start + TRACE_LEN].to_vec())
}

fn hann_window<T: Scalar>() -> [T; STFT_WINDOW] {
    let mut w = [T::zero(); STFT_WINDOW];
    let denom = T::of_usize(STFT_WINDOW - 1);
    for (i, wi) in w.iter_mut().enumerate() {
        let phase = T::of(2.0) * T::PI() * T::of_usize(i) / denom;
        *wi = T::of(0.5) - T::of(0.5) * phase.cos();
    }
    w
}

/// Windowed DFT magnitude of one frame at one bin.
fn frame_bin_magnitude<T: Scalar>(frame: &[T], window: &[T; STFT_WINDOW], bin: usize) -> T {
    let mut re = T::zero();
    let mut im = T::zero();
    let step = T::of(2.0) * T::PI() * T::of_usize(bin) / T::of_usize(STFT_WINDOW);
    for n in 0..STFT_WINDOW {
        let angle = step * T::of_usize(n);
        let v = frame[n] * window[n];
        re += v * angle.cos();
        im -= v * angle.sin();
    }
    (re * re + im * im).sqrt()
}

/// First retained bin index of the 96-point transform (center >= 15 kHz).
pub const FIRST_KEPT_BIN: usize = 33;

/// Computes the 12x48 magnitude spectrogram: 96-point Hann STFT with hop 48,
/// keeping the 12 bins whose centers lie in [15.0, 20.5) kHz.
pub fn compute_spectrogram<T: Scalar>(trace: &EchoTrace<T>) -> Spectrogram<T> {
    let window = hann_window::<T>();
    let fs = T::of(44_100.0);
    let bin_width = fs / T::of_usize(STFT_WINDOW);
    let mut magnitudes = vec![T::zero(); SPEC_BINS * SPEC_FRAMES];
    for frame_idx in 0..SPEC_FRAMES {
        let start = frame_idx * STFT_HOP;
        let frame = &trace.samples()[start..start + STFT_WINDOW];
        for b in 0..SPEC_BINS {
            magnitudes[b * SPEC_FRAMES + frame_idx] =
                frame_bin_magnitude(frame, &window, FIRST_KEPT_BIN + b);
        }
    }
    let bin_freqs_hz = (0..SPEC_BINS)
        .map(|b| bin_width * T::of_usize(FIRST_KEPT_BIN + b))
        .collect();
    Spectrogram {
        magnitudes,
        bin_freqs_hz,
    }
}

/// Welch-style averaged periodogram over the 48 frames, all 49 one-sided
/// bins of the 96-point transform, normalized by the window energy.
pub fn compute_psd<T: Scalar>(trace: &EchoTrace<T>) -> Vec<T> {
    let window = hann_window::<T>();
    let win_energy = window.iter().fold(T::zero(), |a, &w| a + w * w);
    let mut psd = vec![T::zero(); PSD_BINS];
    for frame_idx in 0..SPEC_FRAMES {
        let start = frame_idx * STFT_HOP;
        let frame = &trace.samples()[start..start + STFT_WINDOW];
        for (b, p) in psd.iter_mut().enumerate() {
            let mag = frame_bin_magnitude(frame, &window, b);
            *p += mag * mag;
        }
    }
    let norm = T::one() / (T::of_usize(SPEC_FRAMES) * win_energy);
    for p in psd.iter_mut() {
        *p *= norm;
    }
    psd
}
