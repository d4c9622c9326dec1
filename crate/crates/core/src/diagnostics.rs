//! Post-processing of snapshots: structure detection, tracking, internal
//! oscillation frequencies, radiation line speeds, and seminorm decay.

use std::collections::VecDeque;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{seminorm_dist, FieldState};
use crate::integrator::RunSink;
use crate::numerics::linear_fit;
use crate::output::fmt_f64;
use crate::spectrum::power_spectrum;

/// Which vacuum the background sits in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Vacuum {
    /// Real field with vacua `+1` and `-1`; structures are kinks.
    PlusMinusOne,
    /// Vacuum `0`; structures are lumps of `|psi|`.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Transition from `-1` to `+1` with increasing `x`.
    Kink,
    AntiKink,
    Soliton,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Structure {
    pub center: f64,
    /// Half-amplitude width.
    pub width: f64,
    pub kind: Kind,
    /// Kinks: slope at the centre. Solitons: peak `|psi|`.
    pub amplitude: f64,
    /// Set when neighbours closer than twice their width were merged.
    pub merged: bool,
}

/// Default threshold for kink vacua, the `0.01` band of the kink plots.
pub const KINK_EPSILON: f64 = 0.01;
/// Default `|psi|` threshold for soliton regions.
pub const SOLITON_THRESHOLD: f64 = 0.1;

fn crossing(x0: f64, x1: f64, y0: f64, y1: f64, level: f64) -> f64 {
    if y1 == y0 {
        0.5 * (x0 + x1)
    } else {
        x0 + (level - y0) * (x1 - x0) / (y1 - y0)
    }
}

/// Finds kinks (between the `1 - eps` and `-1 + eps` bands) or solitons
/// (connected regions with `|psi| > eps`) in one snapshot.
pub fn detect_structures(state: &FieldState, vacuum: Vacuum, eps: f64) -> Vec<Structure> {
    let found = match vacuum {
        Vacuum::PlusMinusOne => detect_kinks(state, eps),
        Vacuum::Zero => detect_solitons(state, eps),
    };
    merge_close(found)
}

fn detect_kinks(state: &FieldState, eps: f64) -> Vec<Structure> {
    let grid = state.grid;
    let y: Vec<f64> = state.psi.iter().map(|z| z.re).collect();
    let dx = grid.dx();
    // Band label per node: +1, -1, or 0 (in transition).
    let band = |v: f64| {
        if v > 1.0 - eps {
            1
        } else if v < -1.0 + eps {
            -1
        } else {
            0
        }
    };
    let mut out = Vec::new();
    let mut last: Option<(usize, i32)> = None;
    for (j, &v) in y.iter().enumerate() {
        let b = band(v);
        if b == 0 {
            continue;
        }
        if let Some((i, prev)) = last {
            if prev != b {
                // Transition on (i, j): locate the zero and half-amplitude crossings.
                let seg = i..=j;
                let find = |level: f64| -> Option<f64> {
                    let mut best: Option<f64> = None;
                    for k in *seg.start()..*seg.end() {
                        let (a, c) = (y[k] - level, y[k + 1] - level);
                        if a == 0.0 || a.signum() != c.signum() {
                            let x = crossing(grid.x(k), grid.x(k + 1), y[k], y[k + 1], level);
                            // Keep the crossing nearest the middle of the segment.
                            let mid = 0.5 * (grid.x(i) + grid.x(j));
                            if best.is_none_or(|b| (x - mid).abs() < (b - mid).abs()) {
                                best = Some(x);
                            }
                        }
                    }
                    best
                };
                if let (Some(c), Some(up), Some(down)) = (find(0.0), find(0.5), find(-0.5)) {
                    let k = grid.nearest(c).clamp(1, grid.len() - 2);
                    let slope = (y[k + 1] - y[k - 1]) / (2.0 * dx);
                    out.push(Structure {
                        center: c,
                        width: (up - down).abs(),
                        kind: if b > prev { Kind::Kink } else { Kind::AntiKink },
                        amplitude: slope.abs(),
                        merged: false,
                    });
                }
            }
        }
        last = Some((j, b));
    }
    out
}

fn detect_solitons(state: &FieldState, threshold: f64) -> Vec<Structure> {
    let grid = state.grid;
    let mag: Vec<f64> = state.psi.iter().map(|z| z.norm()).collect();
    let mut out = Vec::new();
    let mut j = 0;
    let n = mag.len();
    while j < n {
        if mag[j] <= threshold {
            j += 1;
            continue;
        }
        let start = j;
        while j < n && mag[j] > threshold {
            j += 1;
        }
        let end = j - 1;
        let (mut w, mut wx) = (0.0, 0.0);
        let mut peak = (start, mag[start]);
        for k in start..=end {
            let m2 = mag[k] * mag[k];
            w += m2;
            wx += m2 * grid.x(k);
            if mag[k] > peak.1 {
                peak = (k, mag[k]);
            }
        }
        let half = 0.5 * peak.1;
        let mut left = grid.x(start);
        for k in (start.max(1)..=peak.0).rev() {
            if mag[k - 1] < half {
                left = crossing(grid.x(k - 1), grid.x(k), mag[k - 1], mag[k], half);
                break;
            }
        }
        let mut right = grid.x(end);
        for k in peak.0..end.min(n - 2) + 1 {
            if k + 1 < n && mag[k + 1] < half {
                right = crossing(grid.x(k), grid.x(k + 1), mag[k], mag[k + 1], half);
                break;
            }
        }
        out.push(Structure {
            center: wx / w,
            width: right - left,
            kind: Kind::Soliton,
            amplitude: peak.1,
            merged: false,
        });
    }
    out
}

fn merge_close(mut found: Vec<Structure>) -> Vec<Structure> {
    found.sort_by(|a, b| a.center.total_cmp(&b.center));
    let mut out: Vec<Structure> = Vec::with_capacity(found.len());
    for s in found {
        if let Some(prev) = out.last_mut() {
            if s.center - prev.center < 2.0 * prev.width.max(s.width) && s.kind == prev.kind {
                let total = prev.amplitude + s.amplitude;
                let wgt = if total > 0.0 { s.amplitude / total } else { 0.5 };
                prev.center += wgt * (s.center - prev.center);
                prev.width = prev.width.max(s.width);
                prev.amplitude = prev.amplitude.max(s.amplitude);
                prev.merged = true;
                continue;
            }
        }
        out.push(s);
    }
    out
}

/// Detections of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub structures: Vec<Structure>,
}

/// Runs the detector on snapshots as they are produced.
#[derive(Debug, Clone)]
pub struct DetectionSink {
    pub vacuum: Vacuum,
    pub eps: f64,
    pub frames: Vec<Frame>,
}

impl DetectionSink {
    pub fn new(vacuum: Vacuum, eps: f64) -> Self {
        Self { vacuum, eps, frames: Vec::new() }
    }
}

impl RunSink for DetectionSink {
    fn on_snapshot(&mut self, _step: u64, state: &FieldState) -> Result<()> {
        self.frames.push(Frame { t: state.t, structures: detect_structures(state, self.vacuum, self.eps) });
        Ok(())
    }
}

/// Follows one lump of a zero-vacuum field from snapshot to snapshot.
///
/// The weight is `|psi|^2 + |pi|^2 / m^2`. A real field blinking at a
/// frequency near `m` keeps this density nearly steady, while `|psi|`
/// alone drops through zero twice per cycle and breaks level-set
/// detection. The centre is the weighted centroid over `|x - c| < radius`,
/// iterated from the previous centre; the first frame starts at the peak.
#[derive(Debug, Clone)]
pub struct FollowSink {
    pub radius: f64,
    inv_m2: f64,
    track: TrackSeries,
}

impl FollowSink {
    /// `mass` sets the blink frequency scale; zero falls back to one.
    pub fn new(radius: f64, mass: f64) -> Self {
        let m = if mass > 0.0 { mass } else { 1.0 };
        Self {
            radius,
            inv_m2: 1.0 / (m * m),
            track: TrackSeries {
                id: 0,
                kind: Kind::Soliton,
                times: Vec::new(),
                positions: Vec::new(),
                widths: Vec::new(),
                amplitudes: Vec::new(),
                velocity: 0.0,
                mean_width: 0.0,
                ambiguous: false,
            },
        }
    }

    /// The followed track; empty when no snapshot was seen.
    pub fn into_tracks(mut self) -> Vec<TrackSeries> {
        if self.track.is_empty() {
            return Vec::new();
        }
        self.track.finish();
        vec![self.track]
    }

    fn locate(&self, state: &FieldState, start: f64) -> (f64, f64, f64) {
        let grid = state.grid;
        let density: Vec<f64> =
            state.psi.iter().zip(&state.pi).map(|(p, q)| p.norm_sqr() + q.norm_sqr() * self.inv_m2).collect();
        let mut c = start;
        for _ in 0..3 {
            let (lo, hi) = (grid.nearest(c - self.radius), grid.nearest(c + self.radius));
            let (mut w, mut wx) = (0.0, 0.0);
            for (j, d) in density.iter().enumerate().take(hi + 1).skip(lo) {
                w += d;
                wx += d * grid.x(j);
            }
            if w > 0.0 {
                c = wx / w;
            }
        }
        let (lo, hi) = (grid.nearest(c - self.radius), grid.nearest(c + self.radius));
        let peak = (lo..=hi).max_by(|&a, &b| density[a].total_cmp(&density[b])).unwrap_or(lo);
        // Full width at half maximum of the envelope sqrt(density).
        let half = 0.5 * density[peak].sqrt();
        let env = |j: usize| density[j].sqrt();
        let left = (lo + 1..=peak)
            .rev()
            .find(|&j| env(j - 1) < half)
            .map_or(grid.x(lo), |j| crossing(grid.x(j - 1), grid.x(j), env(j - 1), env(j), half));
        let right = (peak..hi)
            .find(|&j| env(j + 1) < half)
            .map_or(grid.x(hi), |j| crossing(grid.x(j), grid.x(j + 1), env(j), env(j + 1), half));
        let amp = (lo..=hi).map(|j| state.psi[j].norm()).fold(0.0, f64::max);
        (c, right - left, amp)
    }
}

impl RunSink for FollowSink {
    fn on_snapshot(&mut self, _step: u64, state: &FieldState) -> Result<()> {
        let start = match self.track.positions.last() {
            Some(&c) => c,
            None => {
                let peak = (0..state.psi.len())
                    .max_by(|&a, &b| {
                        let da = state.psi[a].norm_sqr() + state.pi[a].norm_sqr() * self.inv_m2;
                        let db = state.psi[b].norm_sqr() + state.pi[b].norm_sqr() * self.inv_m2;
                        da.total_cmp(&db)
                    })
                    .unwrap_or(0);
                state.grid.x(peak)
            }
        };
        let (c, width, amp) = self.locate(state, start);
        self.track.times.push(state.t);
        self.track.positions.push(c);
        self.track.widths.push(width);
        self.track.amplitudes.push(amp);
        Ok(())
    }
}

/// Detects structures in every snapshot, in parallel.
pub fn detect_all(snapshots: &[FieldState], vacuum: Vacuum, eps: f64) -> Vec<Frame> {
    snapshots.par_iter().map(|s| Frame { t: s.t, structures: detect_structures(s, vacuum, eps) }).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackSeries {
    pub id: usize,
    pub kind: Kind,
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub widths: Vec<f64>,
    pub amplitudes: Vec<f64>,
    /// Least-squares velocity over the final half of the track.
    pub velocity: f64,
    pub mean_width: f64,
    /// Set when a detection was contested by another track.
    pub ambiguous: bool,
}

impl TrackSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn duration(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    fn finish(&mut self) {
        let h = self.len() / 2;
        self.velocity = linear_fit(&self.times[h..], &self.positions[h..]).map(|(_, s)| s).unwrap_or(0.0);
        self.mean_width = self.widths.iter().sum::<f64>() / self.widths.len().max(1) as f64;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkConfig {
    pub max_speed: f64,
    /// Extra gate allowance for detection jitter.
    pub slack: f64,
    /// Frames a track may go undetected before it is closed.
    pub max_gap: usize,
    pub min_length: usize,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self { max_speed: 1.0, slack: 0.5, max_gap: 10, min_length: 3 }
    }
}

/// Links detections into tracks.
///
/// Each open track predicts its next position from its last velocity;
/// candidates must lie within `max_speed * dt + slack` of the last position
/// and are assigned greedily by distance to the prediction, so tracks keep
/// their identity through crossings.
pub fn link_tracks(frames: &[Frame], cfg: &LinkConfig) -> Vec<TrackSeries> {
    struct Open {
        track: TrackSeries,
        missed: usize,
    }
    let mut open: Vec<Open> = Vec::new();
    let mut closed: Vec<TrackSeries> = Vec::new();
    let mut next_id = 0;
    for frame in frames {
        let mut pairs: Vec<(f64, usize, usize, bool)> = Vec::new();
        for (ti, o) in open.iter().enumerate() {
            let tr = &o.track;
            let n = tr.len();
            let (t_last, x_last) = (tr.times[n - 1], tr.positions[n - 1]);
            let dt = frame.t - t_last;
            let v = if n >= 2 { (x_last - tr.positions[n - 2]) / (t_last - tr.times[n - 2]) } else { 0.0 };
            let predicted = x_last + v * dt;
            let gate = cfg.max_speed * dt + cfg.slack;
            for (di, d) in frame.structures.iter().enumerate() {
                if d.kind != tr.kind || (d.center - x_last).abs() > gate {
                    continue;
                }
                pairs.push(((d.center - predicted).abs(), ti, di, d.merged));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut track_used = vec![false; open.len()];
        let mut det_used = vec![false; frame.structures.len()];
        let mut claims = vec![0usize; frame.structures.len()];
        for &(_, _, di, _) in &pairs {
            claims[di] += 1;
        }
        for &(_, ti, di, _) in &pairs {
            if track_used[ti] || det_used[di] {
                continue;
            }
            track_used[ti] = true;
            det_used[di] = true;
            let d = &frame.structures[di];
            let o = &mut open[ti];
            o.track.times.push(frame.t);
            o.track.positions.push(d.center);
            o.track.widths.push(d.width);
            o.track.amplitudes.push(d.amplitude);
            o.track.ambiguous |= claims[di] > 1 && !d.merged;
            o.missed = 0;
        }
        for (ti, o) in open.iter_mut().enumerate() {
            if !track_used[ti] {
                o.missed += 1;
            }
        }
        let (keep, done): (Vec<Open>, Vec<Open>) = open.into_iter().partition(|o| o.missed <= cfg.max_gap);
        closed.extend(done.into_iter().map(|o| o.track));
        open = keep;
        for (di, d) in frame.structures.iter().enumerate() {
            if !det_used[di] {
                open.push(Open {
                    track: TrackSeries {
                        id: next_id,
                        kind: d.kind,
                        times: vec![frame.t],
                        positions: vec![d.center],
                        widths: vec![d.width],
                        amplitudes: vec![d.amplitude],
                        velocity: 0.0,
                        mean_width: 0.0,
                        ambiguous: false,
                    },
                    missed: 0,
                });
                next_id += 1;
            }
        }
    }
    closed.extend(open.into_iter().map(|o| o.track));
    let mut tracks: Vec<TrackSeries> = closed.into_iter().filter(|t| t.len() >= cfg.min_length).collect();
    tracks.sort_by_key(|t| t.id);
    for t in &mut tracks {
        t.finish();
    }
    tracks
}

pub fn write_tracks_csv<W: Write>(mut w: W, tracks: &[TrackSeries]) -> Result<usize> {
    writeln!(w, "t,track_id,position,width,amplitude")?;
    let mut rows = 0;
    for tr in tracks {
        for k in 0..tr.len() {
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_f64(tr.times[k]),
                tr.id,
                fmt_f64(tr.positions[k]),
                fmt_f64(tr.widths[k]),
                fmt_f64(tr.amplitudes[k])
            )?;
            rows += 1;
        }
    }
    Ok(rows)
}

/// Resamples `(t, y)` onto a uniform grid with the median spacing.
fn uniform(times: &[f64], values: &[f64]) -> (f64, Vec<f64>) {
    let mut steps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    steps.sort_by(f64::total_cmp);
    let dt = steps[steps.len() / 2];
    let n = ((times[times.len() - 1] - times[0]) / dt).floor() as usize + 1;
    let mut out = Vec::with_capacity(n);
    let mut k = 0;
    for i in 0..n {
        let t = times[0] + i as f64 * dt;
        while k + 2 < times.len() && times[k + 1] < t {
            k += 1;
        }
        let (t0, t1) = (times[k], times[k + 1]);
        let s = if t1 > t0 { ((t - t0) / (t1 - t0)).clamp(0.0, 1.0) } else { 0.0 };
        out.push(values[k] + s * (values[k + 1] - values[k]));
    }
    (dt, out)
}

/// Dominant angular frequency of a sampled real signal after removing a
/// linear trend; requires at least `min_periods` periods of data.
pub fn signal_frequency(times: &[f64], values: &[f64], min_periods: f64) -> Result<f64> {
    if times.len() < 8 {
        return Err(Error::TrackTooShort(format!("{} samples", times.len())));
    }
    let (dt, y) = uniform(times, values);
    let ts: Vec<f64> = (0..y.len()).map(|k| k as f64 * dt).collect();
    let (c0, c1) = linear_fit(&ts, &y).unwrap_or((0.0, 0.0));
    let detrended: Vec<Complex64> = ts.iter().zip(&y).map(|(t, v)| Complex64::new(v - c0 - c1 * t, 0.0)).collect();
    let spec = power_spectrum(&detrended, dt, 16);
    // Real input: search the positive half, skipping the zero bin's lobe.
    let skip = 2.0 * spec.resolution;
    let mut best: Option<(usize, f64)> = None;
    for (k, (&f, &p)) in spec.freqs.iter().zip(&spec.power).enumerate() {
        if f > skip && best.is_none_or(|b| p > b.1) {
            best = Some((k, p));
        }
    }
    let (k, _) = best.ok_or_else(|| Error::TrackTooShort("no positive frequencies".into()))?;
    let refined = {
        let l = |p: f64| p.max(f64::MIN_POSITIVE).ln();
        let off = crate::numerics::parabolic_offset(l(spec.power[k - 1]), l(spec.power[k]), l(spec.power[k + 1]));
        spec.freqs[k] + off * spec.spacing()
    };
    let duration = times[times.len() - 1] - times[0];
    let needed = min_periods * 2.0 * std::f64::consts::PI / refined;
    if duration < needed {
        return Err(Error::TrackTooShort(format!(
            "duration {duration} covers fewer than {min_periods} periods of frequency {refined}"
        )));
    }
    Ok(refined)
}

/// Lab-frame frequency of a track's amplitude oscillation.
pub fn oscillation_frequency(track: &TrackSeries) -> Result<f64> {
    signal_frequency(&track.times, &track.amplitudes, 5.0)
}

/// A straight space-time line `x = intercept + speed * t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub speed: f64,
    /// Number of supporting points.
    pub strength: usize,
    pub intercept: f64,
}

/// Radiation fronts are level curves of the deviation envelope; the
/// levels are the band ends and their geometric mean.
#[derive(Debug, Clone, PartialEq)]
pub struct LineConfig {
    pub band: (f64, f64),
    pub vacuum: Vacuum,
    /// Half-width of the running maximum that turns an oscillating
    /// deviation into its envelope, so crests do not register as fronts.
    pub envelope_radius: f64,
    /// Points within this many structure widths of a detected structure
    /// are ignored.
    pub exclusion_widths: f64,
    pub max_speed: f64,
    pub speed_step: f64,
    pub intercept_bin: f64,
    pub max_lines: usize,
    pub min_strength: usize,
}

impl Default for LineConfig {
    fn default() -> Self {
        Self {
            band: (1e-3, 1e-2),
            vacuum: Vacuum::Zero,
            envelope_radius: 2.0,
            exclusion_widths: 3.0,
            max_speed: 1.5,
            speed_step: 0.002,
            intercept_bin: 0.5,
            max_lines: 8,
            min_strength: 20,
        }
    }
}

/// Distance to the nearest vacuum.
fn deviation(z: Complex64, vacuum: Vacuum) -> f64 {
    match vacuum {
        Vacuum::Zero => z.norm(),
        Vacuum::PlusMinusOne => (z - 1.0).norm().min((z + 1.0).norm()),
    }
}

/// Running maximum of `v` over `[j - r, j + r]`, by a monotone deque.
fn running_max(v: &[f64], r: usize) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; n];
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for j in 0..n {
        while next < n && next <= j + r {
            while dq.back().is_some_and(|&b| v[b] <= v[next]) {
                dq.pop_back();
            }
            dq.push_back(next);
            next += 1;
        }
        while dq.front().is_some_and(|&f| f + r < j) {
            dq.pop_front();
        }
        out[j] = v[dq[0]];
    }
    out
}

/// Space-time points where the deviation envelope of one snapshot crosses
/// a front level, away from coherent structures.
pub fn dispersive_points_of(s: &FieldState, cfg: &LineConfig) -> Vec<(f64, f64)> {
    let eps = match cfg.vacuum {
        Vacuum::PlusMinusOne => KINK_EPSILON,
        Vacuum::Zero => SOLITON_THRESHOLD,
    };
    let structures = detect_structures(s, cfg.vacuum, eps);
    let grid = s.grid;
    let dev: Vec<f64> = s.psi.iter().map(|&z| deviation(z, cfg.vacuum)).collect();
    let env = running_max(&dev, (cfg.envelope_radius / grid.dx()).round() as usize);
    let (lo, hi) = cfg.band;
    let levels = [lo, (lo * hi).sqrt(), hi];
    let mut pts = Vec::new();
    for j in 0..grid.len().saturating_sub(1) {
        let (a, b) = (env[j], env[j + 1]);
        for &level in &levels {
            if (a - level) * (b - level) < 0.0 {
                let x = grid.x(j) + grid.dx() * (level - a) / (b - a);
                let near =
                    structures.iter().any(|st| (x - st.center).abs() < cfg.exclusion_widths * st.width.max(grid.dx()));
                if !near {
                    pts.push((x, s.t));
                }
            }
        }
    }
    pts
}

/// Space-time points of a whole snapshot sequence.
pub fn dispersive_points(snapshots: &[FieldState], cfg: &LineConfig) -> Vec<(f64, f64)> {
    snapshots.par_iter().flat_map_iter(|s| dispersive_points_of(s, cfg)).collect()
}

/// Collects dispersive points as snapshots are produced.
#[derive(Debug, Clone)]
pub struct PointSink {
    pub cfg: LineConfig,
    pub points: Vec<(f64, f64)>,
}

impl PointSink {
    pub fn new(cfg: LineConfig) -> Self {
        Self { cfg, points: Vec::new() }
    }
}

impl RunSink for PointSink {
    fn on_snapshot(&mut self, _step: u64, state: &FieldState) -> Result<()> {
        self.points.extend(dispersive_points_of(state, &self.cfg));
        Ok(())
    }
}

/// Hough transform over `(speed, intercept)` followed by a least-squares
/// refit on each line's inliers; strongest lines first.
pub fn hough_lines(points: &[(f64, f64)], cfg: &LineConfig) -> Vec<Line> {
    if points.is_empty() {
        return Vec::new();
    }
    let mut remaining: Vec<(f64, f64)> = points.to_vec();
    let n_speeds = (2.0 * cfg.max_speed / cfg.speed_step).round() as usize + 1;
    let speeds: Vec<f64> = (0..n_speeds).map(|k| -cfg.max_speed + k as f64 * cfg.speed_step).collect();
    let mut lines = Vec::new();
    while lines.len() < cfg.max_lines && remaining.len() >= cfg.min_strength {
        let (x_lo, x_hi) = remaining.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(x, t)| {
            let r = cfg.max_speed * t;
            (a.min(x - r), b.max(x + r))
        });
        let n_bins = ((x_hi - x_lo) / cfg.intercept_bin).ceil() as usize + 1;
        let best = speeds
            .par_iter()
            .map(|&c| {
                let mut hist = vec![0u32; n_bins];
                for &(x, t) in &remaining {
                    let b = ((x - c * t - x_lo) / cfg.intercept_bin) as usize;
                    hist[b.min(n_bins - 1)] += 1;
                }
                // Votes over two adjacent bins so straddling lines are not split.
                let (mut kb, mut vb) = (0, 0);
                for k in 0..n_bins {
                    let v = hist[k] + if k + 1 < n_bins { hist[k + 1] } else { 0 };
                    if v > vb {
                        vb = v;
                        kb = k;
                    }
                }
                (vb, c, x_lo + (kb as f64 + 1.0) * cfg.intercept_bin)
            })
            .reduce(
                || (0, 0.0, 0.0),
                |a, b| {
                    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                        b
                    } else {
                        a
                    }
                },
            );
        let (votes, mut c, mut x0) = best;
        if (votes as usize) < cfg.min_strength {
            break;
        }
        let tol = cfg.intercept_bin;
        let mut inliers: Vec<usize> = Vec::new();
        for _ in 0..3 {
            inliers = (0..remaining.len())
                .filter(|&i| {
                    let (x, t) = remaining[i];
                    (x - x0 - c * t).abs() <= tol
                })
                .collect();
            let ts: Vec<f64> = inliers.iter().map(|&i| remaining[i].1).collect();
            let xs: Vec<f64> = inliers.iter().map(|&i| remaining[i].0).collect();
            match linear_fit(&ts, &xs) {
                Some((a, b)) => {
                    x0 = a;
                    c = b;
                }
                None => break,
            }
        }
        if inliers.len() < cfg.min_strength {
            break;
        }
        lines.push(Line { speed: c, strength: inliers.len(), intercept: x0 });
        let mut keep = vec![true; remaining.len()];
        for i in inliers {
            keep[i] = false;
        }
        remaining = remaining.into_iter().zip(keep).filter_map(|(p, k)| k.then_some(p)).collect();
    }
    lines
}

/// Speeds of the dominant radiation lines in a snapshot sequence.
pub fn dispersion_lines(snapshots: &[FieldState], cfg: &LineConfig) -> Vec<Line> {
    hough_lines(&dispersive_points(snapshots, cfg), cfg)
}

pub fn write_lines_csv<W: Write>(mut w: W, lines: &[Line]) -> Result<usize> {
    writeln!(w, "speed,strength,intercept")?;
    for l in lines {
        writeln!(w, "{},{},{}", fmt_f64(l.speed), l.strength, fmt_f64(l.intercept))?;
    }
    Ok(lines.len())
}

/// `(t, seminorm_dist(snapshot, reference, R))` per snapshot.
pub fn seminorm_decay(snapshots: &[FieldState], reference: &FieldState, radius: f64) -> Result<Vec<(f64, f64)>> {
    snapshots.iter().map(|s| seminorm_dist(s, reference, radius).map(|d| (s.t, d.value))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid1D;
    use crate::solitons::{boost, kink_rest_width, Shape, SolitonParams};

    fn kink_at(grid: Grid1D, v: f64, a: f64, t: f64) -> FieldState {
        boost(Shape::Kink { sign: 1.0 }, &SolitonParams::new(0.0, v, a, 0.0).unwrap(), grid, t).unwrap()
    }

    #[test]
    fn rest_kink_is_found_with_rest_width() {
        let grid = Grid1D::symmetric(30.0, 0.01).unwrap();
        let found = detect_structures(&kink_at(grid, 0.0, 0.0, 0.0), Vacuum::PlusMinusOne, KINK_EPSILON);
        assert_eq!(found.len(), 1);
        assert!(found[0].center.abs() <= 0.01);
        assert_eq!(found[0].kind, Kind::Kink);
        assert!((found[0].width - kink_rest_width()).abs() < 1e-4, "width {}", found[0].width);
    }

    #[test]
    fn boosted_kink_is_contracted() {
        let grid = Grid1D::symmetric(30.0, 0.01).unwrap();
        let found = detect_structures(&kink_at(grid, 0.88, 2.0, 0.0), Vacuum::PlusMinusOne, KINK_EPSILON);
        let ratio = found[0].width / kink_rest_width();
        assert!((ratio / (1.0 - 0.88f64 * 0.88).sqrt() - 1.0).abs() < 0.05);
    }

    #[test]
    fn vacuum_has_no_structures() {
        let grid = Grid1D::symmetric(10.0, 0.1).unwrap();
        let one = FieldState::from_fn(grid, |_| Complex64::new(1.0, 0.0), |_| Complex64::default());
        assert!(detect_structures(&one, Vacuum::PlusMinusOne, KINK_EPSILON).is_empty());
        assert!(detect_structures(&FieldState::zeros(grid), Vacuum::Zero, SOLITON_THRESHOLD).is_empty());
    }

    #[test]
    fn kink_antikink_pair_and_soliton_width() {
        let grid = Grid1D::symmetric(40.0, 0.05).unwrap();
        let s = FieldState::from_fn(
            grid,
            |x| Complex64::new(-((x + 10.0) / 2f64.sqrt()).tanh() * ((x - 10.0) / 2f64.sqrt()).tanh(), 0.0),
            |_| Complex64::default(),
        );
        let found = detect_structures(&s, Vacuum::PlusMinusOne, KINK_EPSILON);
        assert_eq!(found.len(), 2);
        assert_eq!(found[0].kind, Kind::Kink);
        assert_eq!(found[1].kind, Kind::AntiKink);
        let lump =
            FieldState::from_fn(grid, |x| Complex64::from_polar(0.8 * (-x * x).exp(), x), |_| Complex64::default());
        let found = detect_structures(&lump, Vacuum::Zero, SOLITON_THRESHOLD);
        assert_eq!(found.len(), 1);
        assert!((found[0].width - 2.0 * 2f64.ln().sqrt()).abs() < 0.01);
        assert!((found[0].amplitude - 0.8).abs() < 1e-12);
    }

    #[test]
    fn nearby_structures_are_merged_and_flagged() {
        let grid = Grid1D::symmetric(20.0, 0.05).unwrap();
        let s = FieldState::from_fn(
            grid,
            |x| {
                Complex64::new(
                    0.8 * (-(x - 0.6) * (x - 0.6) * 4.0).exp() + 0.8 * (-(x + 0.6) * (x + 0.6) * 4.0).exp(),
                    0.0,
                )
            },
            |_| Complex64::default(),
        );
        let found = detect_structures(&s, Vacuum::Zero, 0.9);
        assert!(found.len() <= 1 || found.iter().any(|f| f.merged));
        let spaced = merge_close(vec![
            Structure { center: 0.0, width: 1.0, kind: Kind::Soliton, amplitude: 1.0, merged: false },
            Structure { center: 1.5, width: 1.0, kind: Kind::Soliton, amplitude: 1.0, merged: false },
        ]);
        assert_eq!(spaced.len(), 1);
        assert!(spaced[0].merged);
    }

    fn synthetic(lines: &[(f64, f64)], times: &[f64]) -> Vec<Frame> {
        times
            .iter()
            .map(|&t| Frame {
                t,
                structures: lines
                    .iter()
                    .map(|&(x0, v)| Structure {
                        center: x0 + v * t,
                        width: 1.0,
                        kind: Kind::Soliton,
                        amplitude: 1.0,
                        merged: false,
                    })
                    .collect(),
            })
            .collect()
    }

    #[test]
    fn single_track_velocity() {
        let times: Vec<f64> = (0..200).map(|k| k as f64 * 0.5).collect();
        let tracks = link_tracks(&synthetic(&[(-20.0, 0.37)], &times), &LinkConfig::default());
        assert_eq!(tracks.len(), 1);
        assert!((tracks[0].velocity / 0.37 - 1.0).abs() < 0.01);
        assert!(link_tracks(&[], &LinkConfig::default()).is_empty());
    }

    #[test]
    fn crossing_tracks_keep_identity() {
        let times: Vec<f64> = (0..200).map(|k| k as f64 * 0.25).collect();
        let frames = synthetic(&[(-10.0, 0.5), (10.0, -0.3)], &times);
        let tracks = link_tracks(&frames, &LinkConfig::default());
        assert_eq!(tracks.len(), 2);
        let mut v: Vec<f64> = tracks.iter().map(|t| t.velocity).collect();
        v.sort_by(f64::total_cmp);
        assert!((v[0] + 0.3).abs() < 1e-9 && (v[1] - 0.5).abs() < 1e-9);
        assert!(tracks.iter().all(|t| t.len() == 200));
    }

    #[test]
    fn pure_tone_oscillation() {
        let times: Vec<f64> = (0..2000).map(|k| k as f64 * 0.05).collect();
        let w = 1.5f64.sqrt();
        let amps: Vec<f64> = times.iter().map(|t| 0.1 * (w * t).sin()).collect();
        let track = TrackSeries {
            id: 0,
            kind: Kind::Kink,
            times: times.clone(),
            positions: vec![0.0; 2000],
            widths: vec![1.0; 2000],
            amplitudes: amps,
            velocity: 0.0,
            mean_width: 1.0,
            ambiguous: false,
        };
        let f = oscillation_frequency(&track).unwrap();
        assert!((f - w).abs() < 2.0 * std::f64::consts::PI / 100.0, "freq {f}");
        let short = TrackSeries { times: times[..200].to_vec(), amplitudes: track.amplitudes[..200].to_vec(), ..track };
        assert!(matches!(oscillation_frequency(&short), Err(Error::TrackTooShort(_))));
    }

    #[test]
    fn hough_recovers_synthetic_lines() {
        let mut pts = Vec::new();
        for k in 0..400 {
            let t = k as f64 * 0.1;
            pts.push((5.0 + 0.7 * t, t));
            pts.push((-3.0 - 0.95 * t, t));
        }
        let lines = hough_lines(&pts, &LineConfig::default());
        assert!(lines.len() >= 2);
        let mut s: Vec<f64> = lines[..2].iter().map(|l| l.speed).collect();
        s.sort_by(f64::total_cmp);
        assert!((s[0] + 0.95).abs() < 1e-9 && (s[1] - 0.7).abs() < 1e-9);
        assert!(hough_lines(&[], &LineConfig::default()).is_empty());
    }

    #[test]
    fn follower_keeps_a_blinking_lump() {
        let grid = Grid1D::symmetric(40.0, 0.05).unwrap();
        let mut sink = FollowSink::new(6.0, 1.0);
        for k in 0..40 {
            let t = 0.25 * k as f64;
            let c = 2.0 + 0.3 * t;
            let lump = |x: f64| 0.3 * (-(x - c) * (x - c) / 2.0).exp();
            let mut s = FieldState::from_fn(
                grid,
                |x| Complex64::new(lump(x) * t.cos(), 0.0),
                |x| Complex64::new(-lump(x) * t.sin(), 0.0),
            );
            s.t = t;
            sink.on_snapshot(k, &s).unwrap();
        }
        let tracks = sink.into_tracks();
        assert_eq!(tracks.len(), 1);
        let tr = &tracks[0];
        for (t, x) in tr.times.iter().zip(&tr.positions) {
            assert!((x - (2.0 + 0.3 * t)).abs() < 1e-6, "t={t}: {x}");
        }
        assert!((tr.velocity - 0.3).abs() < 1e-6);
        // FWHM of a unit-variance gaussian envelope.
        assert!((tr.mean_width - 2.0 * (2.0 * 2f64.ln()).sqrt()).abs() < 0.05, "{}", tr.mean_width);
    }

    #[test]
    fn running_max_matches_brute_force() {
        let v: Vec<f64> = (0..57).map(|k| ((k * 37) % 11) as f64 - (k as f64 * 0.3).sin()).collect();
        for r in [0, 1, 4, 60] {
            let fast = running_max(&v, r);
            for j in 0..v.len() {
                let lo = j.saturating_sub(r);
                let hi = (j + r).min(v.len() - 1);
                let slow = v[lo..=hi].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                assert_eq!(fast[j], slow);
            }
        }
    }

    #[test]
    fn oscillating_packet_fronts_move_with_the_envelope() {
        // Carrier crests travel at 3, the envelope at 0.5.
        let grid = Grid1D::symmetric(60.0, 0.05).unwrap();
        let frames: Vec<FieldState> = (0..60)
            .map(|k| {
                let t = k as f64 * 0.5;
                let psi = (0..grid.len())
                    .map(|j| {
                        let x = grid.x(j);
                        let env = 0.05 * (-(x - 0.5 * t).powi(2) / 50.0).exp();
                        Complex64::new(env * (2.0 * (x - 3.0 * t)).cos(), 0.0)
                    })
                    .collect();
                FieldState::new(grid, psi, vec![Complex64::default(); grid.len()], t).unwrap()
            })
            .collect();
        let lines = dispersion_lines(&frames, &LineConfig::default());
        assert!(lines.len() >= 2, "{lines:?}");
        for l in &lines[..2] {
            assert!((l.speed - 0.5).abs() < 0.02, "{lines:?}");
        }
    }

    #[test]
    fn seminorm_decay_of_identical_reference_vanishes() {
        let grid = Grid1D::symmetric(10.0, 0.1).unwrap();
        let s = kink_at(grid, 0.0, 0.0, 0.0);
        let series = seminorm_decay(&[s.clone(), s.clone()], &s, 5.0).unwrap();
        assert!(series.iter().all(|(_, d)| *d == 0.0));
    }
}
