//! Cardiac cycle segmentation from the per-frame LVID series.
//!
//! Diastole frames are prominent local maxima of the (smoothed) LVID signal,
//! separated by at least the interval of the fastest allowed heart rate. The
//! systole of each beat is the LVID minimum that follows its diastole, before
//! the next one.

use serde::{Deserialize, Serialize};

use crate::decode::FrameRecord;
use crate::error::{Error, Result};
use crate::geometry::MeasurementTriple;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesEntry {
    pub frame_index: usize,
    /// `None` marks an excluded frame.
    pub value: Option<MeasurementTriple>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSeries {
    entries: Vec<SeriesEntry>,
    fps: f64,
}

impl MeasurementSeries {
    pub fn new(entries: Vec<SeriesEntry>, fps: f64) -> Result<Self> {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::InvalidConfig(format!("fps must be positive, got {fps}")));
        }
        if entries.is_empty() {
            return Err(Error::InvalidConfig("measurement series is empty".into()));
        }
        if entries.windows(2).any(|w| w[0].frame_index >= w[1].frame_index) {
            return Err(Error::InvalidConfig(
                "frame indices must be strictly increasing".into(),
            ));
        }
        Ok(Self { entries, fps })
    }

    /// Series of measurements from decoded frames, sorted by frame index.
    pub fn from_records(records: &[FrameRecord], fps: f64) -> Result<Self> {
        let mut entries: Vec<SeriesEntry> = records
            .iter()
            .map(|r| SeriesEntry {
                frame_index: r.frame_index,
                value: r.measurement,
            })
            .collect();
        entries.sort_by_key(|e| e.frame_index);
        Self::new(entries, fps)
    }

    /// Builds a gap-free series from LVID values alone (walls set to zero).
    pub fn from_lvid(lvid: &[f64], fps: f64) -> Result<Self> {
        let entries = lvid
            .iter()
            .enumerate()
            .map(|(i, &v)| SeriesEntry {
                frame_index: i,
                value: Some(MeasurementTriple::new(0.0, v, 0.0)),
            })
            .collect();
        Self::new(entries, fps)
    }

    pub fn entries(&self) -> &[SeriesEntry] {
        &self.entries
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The series with every entry's frame order reversed, re-indexed from 0.
    pub fn reversed(&self) -> Self {
        let last = self.entries.last().map_or(0, |e| e.frame_index);
        let entries = self
            .entries
            .iter()
            .rev()
            .map(|e| SeriesEntry {
                frame_index: last - e.frame_index,
                value: e.value,
            })
            .collect();
        Self {
            entries,
            fps: self.fps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeatConfig {
    /// Fastest plausible heart rate, bpm; sets the minimum diastole spacing.
    pub max_heart_rate: f64,
    /// Minimum peak prominence as a fraction of the LVID range.
    pub min_prominence_frac: f64,
    pub smooth_median_window: usize,
    /// Defaults to `round(fps / 10)` frames when unset.
    pub smooth_mean_window: Option<usize>,
    /// Smooth before locating extrema.
    pub smooth: bool,
}

impl Default for BeatConfig {
    fn default() -> Self {
        Self {
            max_heart_rate: 160.0,
            min_prominence_frac: 0.2,
            smooth_median_window: 3,
            smooth_mean_window: None,
            smooth: true,
        }
    }
}

fn odd(w: usize) -> usize {
    if w.is_multiple_of(2) {
        w + 1
    } else {
        w
    }
}

impl BeatConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_heart_rate.is_finite() && self.max_heart_rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "max_heart_rate must be positive, got {}",
                self.max_heart_rate
            )));
        }
        if !(self.min_prominence_frac.is_finite() && self.min_prominence_frac > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "min_prominence_frac must be positive, got {}",
                self.min_prominence_frac
            )));
        }
        if self.smooth_median_window == 0 || self.smooth_mean_window == Some(0) {
            return Err(Error::InvalidConfig("smoothing windows must be >= 1".into()));
        }
        Ok(())
    }

    /// Minimum spacing between diastoles, in frames.
    pub fn min_separation(&self, fps: f64) -> f64 {
        fps * 60.0 / self.max_heart_rate
    }

    pub fn median_window(&self) -> usize {
        odd(self.smooth_median_window.max(1))
    }

    pub fn mean_window(&self, fps: f64) -> usize {
        odd(self
            .smooth_mean_window
            .unwrap_or_else(|| (fps / 10.0).round() as usize)
            .max(1))
    }
}

/// One cardiac cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeatRecord {
    pub beat_index: usize,
    pub diastole_frame: usize,
    pub systole_frame: usize,
    pub diastolic: MeasurementTriple,
    pub systolic: MeasurementTriple,
}

/// Fills gaps by linear interpolation over frame index; leading and trailing
/// gaps copy the nearest measured value.
fn fill_gaps(entries: &[SeriesEntry]) -> Result<Vec<[f64; 3]>> {
    let known: Vec<usize> = (0..entries.len())
        .filter(|&i| entries[i].value.is_some())
        .collect();
    let (&first, &last) = match (known.first(), known.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::AllGaps),
    };
    let at = |i: usize| entries[i].value.expect("known index").to_array();
    let mut out = Vec::with_capacity(entries.len());
    let mut next = 0;
    for (i, e) in entries.iter().enumerate() {
        if let Some(v) = e.value {
            out.push(v.to_array());
            next += 1;
            continue;
        }
        if i < first {
            out.push(at(first));
        } else if i > last {
            out.push(at(last));
        } else {
            let (lo, hi) = (known[next - 1], known[next]);
            let (x0, x1) = (entries[lo].frame_index as f64, entries[hi].frame_index as f64);
            let t = (e.frame_index as f64 - x0) / (x1 - x0);
            let (a, b) = (at(lo), at(hi));
            out.push([0, 1, 2].map(|k| a[k] + t * (b[k] - a[k])));
        }
    }
    Ok(out)
}

/// Centered running filter with edge replication.
fn running<F>(xs: &[f64], window: usize, reduce: F) -> Vec<f64>
where
    F: Fn(&mut [f64]) -> f64,
{
    if window <= 1 {
        return xs.to_vec();
    }
    let half = window / 2;
    let n = xs.len() as isize;
    let mut buf = vec![0.0; window];
    (0..n)
        .map(|i| {
            for (k, slot) in buf.iter_mut().enumerate() {
                let j = (i + k as isize - half as isize).clamp(0, n - 1);
                *slot = xs[j as usize];
            }
            reduce(&mut buf)
        })
        .collect()
}

fn median(buf: &mut [f64]) -> f64 {
    buf.sort_by(f64::total_cmp);
    buf[buf.len() / 2]
}

fn mean(buf: &mut [f64]) -> f64 {
    buf.iter().sum::<f64>() / buf.len() as f64
}

/// Gap filling, then a running median and a running mean on each component.
pub fn smooth_series(s: &MeasurementSeries, cfg: &BeatConfig) -> Result<MeasurementSeries> {
    cfg.validate()?;
    let filled = fill_gaps(&s.entries)?;
    let (mw, aw) = (cfg.median_window(), cfg.mean_window(s.fps));
    let mut comps = [0, 1, 2].map(|k| filled.iter().map(|v| v[k]).collect::<Vec<_>>());
    for c in &mut comps {
        *c = running(&running(c, mw, median), aw, mean);
    }
    let entries = s
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| SeriesEntry {
            frame_index: e.frame_index,
            value: Some(MeasurementTriple::new(comps[0][i], comps[1][i], comps[2][i])),
        })
        .collect();
    Ok(MeasurementSeries {
        entries,
        fps: s.fps,
    })
}

/// Interior local maxima; a flat top reports its middle sample.
fn local_maxima(x: &[f64]) -> Vec<usize> {
    let mut peaks = Vec::new();
    let n = x.len();
    let mut i = 1;
    while i + 1 < n {
        if x[i - 1] < x[i] {
            let mut ahead = i + 1;
            while ahead < n && x[ahead] == x[i] {
                ahead += 1;
            }
            if ahead < n && x[ahead] < x[i] {
                peaks.push((i + ahead - 1) / 2);
                i = ahead;
                continue;
            }
        }
        i += 1;
    }
    peaks
}

/// Height of a peak above the higher of the two bases reachable before
/// climbing above it on either side.
fn prominence(x: &[f64], peak: usize) -> f64 {
    let h = x[peak];
    let mut left_min = h;
    for &v in x[..peak].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &x[peak + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

fn argmin(x: &[f64], range: std::ops::Range<usize>) -> Option<usize> {
    range.min_by(|&a, &b| x[a].total_cmp(&x[b]))
}

/// Positions (into the series) of diastoles, plus the prominence floor used.
fn find_diastoles(frames: &[usize], x: &[f64], cfg: &BeatConfig, fps: f64) -> (Vec<usize>, f64) {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let floor = cfg.min_prominence_frac * (hi - lo);
    if hi <= lo {
        return (Vec::new(), floor);
    }
    let mut candidates: Vec<usize> = local_maxima(x)
        .into_iter()
        .filter(|&p| prominence(x, p) >= floor)
        .collect();

    // tallest first; drop anything closer than the minimum spacing to a kept peak
    let min_sep = cfg.min_separation(fps);
    candidates.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for p in candidates {
        let clear = kept
            .iter()
            .all(|&q| (frames[p] as f64 - frames[q] as f64).abs() >= min_sep);
        if clear {
            kept.push(p);
        }
    }
    kept.sort_unstable();
    (kept, floor)
}

/// Measured value at position `i`, or at the nearest measured frame.
fn raw_at(entries: &[SeriesEntry], i: usize) -> Option<MeasurementTriple> {
    if let Some(v) = entries[i].value {
        return Some(v);
    }
    let target = entries[i].frame_index;
    entries
        .iter()
        .filter_map(|e| e.value.map(|v| (e.frame_index.abs_diff(target), e.frame_index, v)))
        .min_by_key(|&(d, f, _)| (d, f))
        .map(|(_, _, v)| v)
}

/// Locates diastole and systole of every complete beat.
pub fn detect_beats(s: &MeasurementSeries, cfg: &BeatConfig) -> Result<Vec<BeatRecord>> {
    cfg.validate()?;
    let smoothed = if cfg.smooth {
        smooth_series(s, cfg)?
    } else {
        let filled = fill_gaps(&s.entries)?;
        MeasurementSeries {
            entries: s
                .entries
                .iter()
                .zip(filled)
                .map(|(e, v)| SeriesEntry {
                    frame_index: e.frame_index,
                    value: Some(MeasurementTriple::from_array(v)),
                })
                .collect(),
            fps: s.fps,
        }
    };
    let frames: Vec<usize> = smoothed.entries.iter().map(|e| e.frame_index).collect();
    let lvid: Vec<f64> = smoothed
        .entries
        .iter()
        .map(|e| e.value.expect("gaps filled").lvid)
        .collect();
    let n = lvid.len();

    let (diastoles, floor) = find_diastoles(&frames, &lvid, cfg, s.fps);
    let mut beats = Vec::new();
    for (k, &d) in diastoles.iter().enumerate() {
        let systole = match diastoles.get(k + 1) {
            Some(&next) => argmin(&lvid, d + 1..next),
            None => argmin(&lvid, d + 1..n)
                .filter(|&m| m + 1 < n && lvid[d] - lvid[m] >= floor),
        };
        let Some(sys) = systole else { continue };
        let (Some(diastolic), Some(systolic)) = (raw_at(&s.entries, d), raw_at(&s.entries, sys))
        else {
            continue;
        };
        // raw values can invert under heavy noise; such a beat is not a cycle
        if diastolic.lvid < systolic.lvid {
            continue;
        }
        beats.push(BeatRecord {
            beat_index: beats.len(),
            diastole_frame: frames[d],
            systole_frame: frames[sys],
            diastolic,
            systolic,
        });
    }
    if beats.is_empty() {
        return Err(Error::NoBeatsDetected);
    }
    Ok(beats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn lvid_series(values: &[Option<f64>]) -> MeasurementSeries {
        let entries = values
            .iter()
            .enumerate()
            .map(|(i, v)| SeriesEntry {
                frame_index: i,
                value: v.map(|l| MeasurementTriple::new(1.0, l, 1.0)),
            })
            .collect();
        MeasurementSeries::new(entries, 50.0).unwrap()
    }

    fn lvids(s: &MeasurementSeries) -> Vec<f64> {
        s.entries().iter().map(|e| e.value.unwrap().lvid).collect()
    }

    fn identity_windows() -> BeatConfig {
        BeatConfig {
            smooth_median_window: 1,
            smooth_mean_window: Some(1),
            ..BeatConfig::default()
        }
    }

    #[test]
    fn identity_smoothing() {
        let s = lvid_series(&[Some(4.0), Some(4.4), Some(3.9), Some(4.8)]);
        assert_eq!(smooth_series(&s, &identity_windows()).unwrap(), s);
    }

    #[test]
    fn gaps_are_interpolated() {
        let s = lvid_series(&[Some(4.0), None, Some(5.0)]);
        let out = smooth_series(&s, &identity_windows()).unwrap();
        assert_eq!(lvids(&out), vec![4.0, 4.5, 5.0]);

        let s = lvid_series(&[None, Some(4.0), None, None, Some(5.5), None]);
        let out = smooth_series(&s, &identity_windows()).unwrap();
        assert_eq!(lvids(&out), vec![4.0, 4.0, 4.5, 5.0, 5.5, 5.5]);

        let s = lvid_series(&[None, None]);
        assert_eq!(smooth_series(&s, &identity_windows()), Err(Error::AllGaps));
    }

    #[test]
    fn interpolation_uses_frame_indices() {
        let entries = vec![
            SeriesEntry { frame_index: 0, value: Some(MeasurementTriple::new(1.0, 4.0, 1.0)) },
            SeriesEntry { frame_index: 1, value: None },
            SeriesEntry { frame_index: 4, value: Some(MeasurementTriple::new(1.0, 8.0, 1.0)) },
        ];
        let s = MeasurementSeries::new(entries, 50.0).unwrap();
        let out = smooth_series(&s, &identity_windows()).unwrap();
        assert_eq!(lvids(&out), vec![4.0, 5.0, 8.0]);
    }

    #[test]
    fn median_removes_impulse() {
        let mut v: Vec<Option<f64>> = vec![Some(4.0); 20];
        v[9] = Some(14.0);
        let cfg = BeatConfig {
            smooth_median_window: 3,
            smooth_mean_window: Some(1),
            ..BeatConfig::default()
        };
        let out = lvids(&smooth_series(&lvid_series(&v), &cfg).unwrap());
        assert!(out.iter().all(|&x| x == 4.0), "{out:?}");
    }

    #[test]
    fn windows_are_forced_odd() {
        let cfg = BeatConfig {
            smooth_median_window: 4,
            ..BeatConfig::default()
        };
        assert_eq!(cfg.median_window(), 5);
        assert_eq!(cfg.mean_window(50.0), 5);
        assert_eq!(cfg.mean_window(30.0), 3);
        assert_eq!(cfg.mean_window(4.0), 1);
        assert_eq!(cfg.mean_window(60.0), 7);
        assert!((cfg.min_separation(50.0) - 18.75).abs() < 1e-12);
    }

    fn sinusoid(fps: f64, duration: f64) -> Vec<f64> {
        let n = (fps * duration).round() as usize;
        (0..n)
            .map(|i| 4.5 + 0.7 * (2.0 * PI * i as f64 / fps).sin())
            .collect()
    }

    #[test]
    fn sinusoid_extrema() {
        let s = MeasurementSeries::from_lvid(&sinusoid(50.0, 5.0), 50.0).unwrap();
        let beats = detect_beats(&s, &BeatConfig::default()).unwrap();
        assert!((4..=5).contains(&beats.len()), "{}", beats.len());
        for (k, b) in beats.iter().enumerate() {
            let d_truth = (0.25 + k as f64) * 50.0;
            let s_truth = (0.75 + k as f64) * 50.0;
            assert!((b.diastole_frame as f64 - d_truth).abs() <= 1.0, "{b:?}");
            assert!((b.systole_frame as f64 - s_truth).abs() <= 1.0, "{b:?}");
            assert!(b.diastolic.lvid >= b.systolic.lvid);
            assert_eq!(b.beat_index, k);
        }
    }

    #[test]
    fn constant_series_has_no_beats() {
        let s = MeasurementSeries::from_lvid(&[4.5; 200], 50.0).unwrap();
        assert_eq!(detect_beats(&s, &BeatConfig::default()), Err(Error::NoBeatsDetected));
    }

    /// Cosine cycles of the given periods, diastole at every cycle start.
    fn cycles(periods: &[f64], fps: f64) -> (Vec<f64>, Vec<f64>) {
        let total: f64 = periods.iter().sum();
        let n = (total * fps).round() as usize;
        let mut starts = vec![0.0];
        for p in periods {
            starts.push(starts.last().unwrap() + p);
        }
        let x = (0..n)
            .map(|i| {
                let t = i as f64 / fps;
                let k = starts.iter().rposition(|&s| s <= t).unwrap().min(periods.len() - 1);
                let phase = (t - starts[k]) / periods[k];
                4.0 + 0.8 * (2.0 * PI * phase).cos()
            })
            .collect();
        (x, starts)
    }

    #[test]
    fn mixed_periods_are_recovered() {
        let fps = 50.0;
        let periods = [0.8, 0.8, 0.8, 1.0, 1.0, 1.0];
        let (x, starts) = cycles(&periods, fps);
        let s = MeasurementSeries::from_lvid(&x, fps).unwrap();
        let beats = detect_beats(&s, &BeatConfig::default()).unwrap();
        // every interior cycle start is a diastole
        let truth: Vec<f64> = starts[1..periods.len()].iter().map(|t| t * fps).collect();
        assert_eq!(beats.len(), truth.len());
        for (b, t) in beats.iter().zip(&truth) {
            assert!((b.diastole_frame as f64 - t).abs() <= 1.0);
        }
        let gaps: Vec<f64> = beats
            .windows(2)
            .map(|w| (w[1].diastole_frame - w[0].diastole_frame) as f64)
            .collect();
        for (g, p) in gaps.iter().zip(&periods[1..]) {
            assert!((g - p * fps).abs() <= 1.0, "gap {g} vs period {p}");
        }
    }

    #[test]
    fn reports_unsmoothed_values_and_skips_gaps() {
        let fps = 50.0;
        let x = sinusoid(fps, 3.0);
        let mut v: Vec<Option<f64>> = x.iter().copied().map(Some).collect();
        // knock out the frame nearest the second diastole
        v[62] = None;
        let s = lvid_series(&v);
        let beats = detect_beats(&s, &BeatConfig::default()).unwrap();
        for b in &beats {
            let expect = |f: usize| s.entries()[f].value.map(|m| m.lvid);
            if let Some(l) = expect(b.diastole_frame) {
                assert_eq!(b.diastolic.lvid, l);
            } else {
                let near = [b.diastole_frame - 1, b.diastole_frame + 1]
                    .map(|f| expect(f).unwrap());
                assert!(near.contains(&b.diastolic.lvid));
            }
            assert_eq!(b.systolic.lvid, expect(b.systole_frame).unwrap());
        }
    }

    #[test]
    fn short_or_flat_inputs_fail() {
        let s = MeasurementSeries::from_lvid(&sinusoid(50.0, 0.4), 50.0).unwrap();
        assert_eq!(detect_beats(&s, &BeatConfig::default()), Err(Error::NoBeatsDetected));
        assert!(MeasurementSeries::new(vec![], 50.0).is_err());
        let bad = vec![
            SeriesEntry { frame_index: 3, value: None },
            SeriesEntry { frame_index: 3, value: None },
        ];
        assert!(MeasurementSeries::new(bad, 50.0).is_err());
    }

    #[test]
    fn beat_count_matches_duration_over_period() {
        for (period, duration) in [(0.6, 6.0), (0.75, 5.0), (1.0, 5.0), (1.2, 7.0), (0.9, 4.0)] {
            let fps = 50.0;
            let n = (fps * duration) as usize;
            let x: Vec<f64> = (0..n)
                .map(|i| 4.5 + 0.7 * (2.0 * PI * i as f64 / fps / period + 0.3).sin())
                .collect();
            let s = MeasurementSeries::from_lvid(&x, fps).unwrap();
            let beats = detect_beats(&s, &BeatConfig::default()).unwrap();
            let expected = (duration / period).floor();
            assert!(
                (beats.len() as f64 - expected).abs() <= 1.0,
                "period {period}: {} beats",
                beats.len()
            );
        }
    }

    fn random_cycles() -> impl Strategy<Value = (Vec<f64>, f64)> {
        (
            prop::collection::vec(0.6f64..1.3, 3..7),
            prop::collection::vec(-0.05f64..0.05, 400),
            30.0f64..80.0,
        )
            .prop_map(|(periods, noise, fps)| {
                let (mut x, _) = cycles(&periods, fps);
                for (v, e) in x.iter_mut().zip(noise.iter().cycle()) {
                    *v += e;
                }
                (x, fps)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn beats_alternate_and_shift_invariant((x, fps) in random_cycles(), c in -3.0f64..3.0) {
            let s = MeasurementSeries::from_lvid(&x, fps).unwrap();
            let Ok(beats) = detect_beats(&s, &BeatConfig::default()) else { return Ok(()) };
            let mut last = 0;
            for b in &beats {
                prop_assert!(b.diastole_frame > last || last == 0);
                prop_assert!(b.systole_frame > b.diastole_frame);
                prop_assert!(b.diastolic.lvid >= b.systolic.lvid);
                last = b.systole_frame;
            }
            for w in beats.windows(2) {
                prop_assert!(w[0].systole_frame < w[1].diastole_frame);
            }
            let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
            let s2 = MeasurementSeries::from_lvid(&shifted, fps).unwrap();
            let b2 = detect_beats(&s2, &BeatConfig::default()).unwrap();
            let frames = |bs: &[BeatRecord]| bs.iter().map(|b| (b.diastole_frame, b.systole_frame)).collect::<Vec<_>>();
            prop_assert_eq!(frames(&beats), frames(&b2));
            prop_assert_eq!(detect_beats(&s, &BeatConfig::default()).unwrap(), beats);
        }

        #[test]
        fn time_reversal_preserves_diastoles((x, fps) in random_cycles()) {
            let s = MeasurementSeries::from_lvid(&x, fps).unwrap();
            let cfg = BeatConfig::default();
            let smoothed = lvids(&smooth_series(&s, &cfg).unwrap());
            let frames: Vec<usize> = (0..x.len()).collect();
            let (fwd, _) = find_diastoles(&frames, &smoothed, &cfg, fps);
            let rev_s: Vec<f64> = lvids(&smooth_series(&s.reversed(), &cfg).unwrap());
            let (rev, _) = find_diastoles(&frames, &rev_s, &cfg, fps);
            let n = x.len();
            let mut mapped: Vec<usize> = rev.iter().map(|&r| n - 1 - r).collect();
            mapped.sort_unstable();
            prop_assert_eq!(fwd.len(), mapped.len());
            for (a, b) in fwd.iter().zip(&mapped) {
                prop_assert!(a.abs_diff(*b) <= 1, "{:?} vs {:?}", fwd, mapped);
            }
        }
    }
}
