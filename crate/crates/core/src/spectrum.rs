//! Hann-windowed power spectra of complex time series.
//!
//! Frequencies are signed angular frequencies in the FFT convention, so a
//! signal `e^{-i w t}` peaks at `-w`.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::numerics::parabolic_offset;

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Ascending signed angular frequencies.
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
    /// Natural resolution `2 pi / T` of the unpadded window.
    pub resolution: f64,
}

pub fn hann(n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![1.0; n];
    }
    (0..n).map(|k| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * k as f64 / (n - 1) as f64).cos()).collect()
}

/// Power spectrum of `series` sampled every `dt`, Hann windowed and
/// zero-padded to at least `pad` times its length (next power of two).
pub fn power_spectrum(series: &[Complex64], dt: f64, pad: usize) -> Spectrum {
    let n = series.len();
    let len = (n * pad.max(1)).max(2).next_power_of_two();
    let w = hann(n);
    let mut buf: Vec<Complex64> = series.iter().zip(&w).map(|(z, wk)| z * wk).collect();
    buf.resize(len, Complex64::default());
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let df = 2.0 * std::f64::consts::PI / (len as f64 * dt);
    let half = len / 2;
    // Reorder from FFT layout to ascending frequency.
    let order = (half..len).chain(0..half);
    let mut freqs = Vec::with_capacity(len);
    let mut power = Vec::with_capacity(len);
    for k in order {
        let signed = if k >= half { k as f64 - len as f64 } else { k as f64 };
        freqs.push(signed * df);
        power.push(buf[k].norm_sqr());
    }
    Spectrum { freqs, power, resolution: 2.0 * std::f64::consts::PI / (n as f64 * dt) }
}

impl Spectrum {
    pub fn total(&self) -> f64 {
        self.power.iter().sum()
    }

    pub fn spacing(&self) -> f64 {
        self.freqs[1] - self.freqs[0]
    }

    /// Frequency of the global maximum, refined by a parabola through the
    /// log power of the neighbouring samples.
    pub fn dominant(&self) -> f64 {
        let k = self.power.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(k, _)| k).unwrap_or(0);
        self.refine(k)
    }

    fn refine(&self, k: usize) -> f64 {
        if k == 0 || k + 1 >= self.power.len() {
            return self.freqs[k];
        }
        let l = |p: f64| p.max(f64::MIN_POSITIVE).ln();
        let off = parabolic_offset(l(self.power[k - 1]), l(self.power[k]), l(self.power[k + 1]));
        self.freqs[k] + off * self.spacing()
    }

    /// Power within `bandwidth` of `freq`.
    pub fn power_near(&self, freq: f64, bandwidth: f64) -> f64 {
        self.freqs.iter().zip(&self.power).filter(|(f, _)| (*f - freq).abs() <= bandwidth).map(|(_, p)| p).sum()
    }

    /// Local maxima holding at least `min_fraction` of the total power
    /// within one resolution cell, strongest first.
    pub fn peaks(&self, min_fraction: f64) -> Vec<(f64, f64)> {
        let total = self.total();
        let mut out = Vec::new();
        for k in 1..self.power.len().saturating_sub(1) {
            let p = self.power[k];
            if p > self.power[k - 1] && p >= self.power[k + 1] {
                let f = self.refine(k);
                let cell = self.power_near(f, self.resolution);
                if total > 0.0 && cell >= min_fraction * total {
                    out.push((f, cell / total));
                }
            }
        }
        out.sort_by(|a, b| b.1.total_cmp(&a.1));
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub spectrum: Spectrum,
    pub dominant: f64,
    /// Fraction of the power within `bandwidth` of the dominant frequency.
    pub concentration: f64,
    pub bandwidth: f64,
    /// `(t_start, t_end)` of the analysed window.
    pub window_span: (f64, f64),
}

impl SpectrumReport {
    /// Columns `freq,power,dominant`; the last repeats the dominant frequency.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        use crate::output::fmt_f64;
        writeln!(w, "freq,power,dominant")?;
        let dominant = fmt_f64(self.dominant);
        for (f, p) in self.spectrum.freqs.iter().zip(&self.spectrum.power) {
            writeln!(w, "{},{},{dominant}", fmt_f64(*f), fmt_f64(*p))?;
        }
        Ok(())
    }

    /// Flat `key = value` summary.
    pub fn summary(&self) -> String {
        use crate::output::fmt_f64;
        format!(
            "dominant = {}\nconcentration = {}\nbandwidth = {}\nwindow_start = {}\nwindow_end = {}\nresolution = {}\n",
            fmt_f64(self.dominant),
            fmt_f64(self.concentration),
            fmt_f64(self.bandwidth),
            fmt_f64(self.window_span.0),
            fmt_f64(self.window_span.1),
            fmt_f64(self.spectrum.resolution),
        )
    }
}

pub const DEFAULT_PAD: usize = 8;

/// Spectral report of the final `window` samples of `series`, which starts
/// at `t0` and is sampled every `dt`.
pub fn spectral_report(
    series: &[Complex64],
    t0: f64,
    dt: f64,
    window: usize,
    bandwidth: f64,
) -> Result<SpectrumReport> {
    if window > series.len() {
        return Err(Error::WindowTooLong { len: series.len(), window });
    }
    if window < 4 {
        return Err(Error::InvalidArgument(format!("window of {window} samples is too short")));
    }
    let start = series.len() - window;
    let spectrum = power_spectrum(&series[start..], dt, DEFAULT_PAD);
    let dominant = spectrum.dominant();
    let total = spectrum.total();
    let concentration =
        if total > 0.0 { (spectrum.power_near(dominant, bandwidth) / total).clamp(0.0, 1.0) } else { 0.0 };
    Ok(SpectrumReport {
        spectrum,
        dominant,
        concentration,
        bandwidth,
        window_span: (t0 + start as f64 * dt, t0 + (series.len() - 1) as f64 * dt),
    })
}
