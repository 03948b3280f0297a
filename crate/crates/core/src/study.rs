//! Study-level aggregation over detected beats.

use serde::{Deserialize, Serialize};

use crate::beats::BeatRecord;
use crate::error::{Error, Result};

/// How the per-beat values are collapsed into the study value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    #[default]
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Combinator {
    Any,
    All,
}

/// Wall-thickness thresholds for flagging hypertrophy. There is no default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LvhRule {
    pub ivs_threshold_cm: f64,
    pub lvpw_threshold_cm: f64,
    pub combinator: Combinator,
}

impl LvhRule {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.ivs_threshold_cm) || !ok(self.lvpw_threshold_cm) {
            return Err(Error::InvalidConfig(
                "LVH thresholds must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn evaluate(&self, ivsd: f64, lvpwd: f64) -> bool {
        let ivs = ivsd >= self.ivs_threshold_cm;
        let lvpw = lvpwd >= self.lvpw_threshold_cm;
        match self.combinator {
            Combinator::Any => ivs || lvpw,
            Combinator::All => ivs && lvpw,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    pub lvh_rule: Option<LvhRule>,
    pub aggregate: Aggregate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementStats {
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation; absent for a single beat.
    pub sd: Option<f64>,
    pub min: f64,
    pub max: f64,
}

impl MeasurementStats {
    fn from_values(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = (values.len() > 1).then(|| sample_sd(values, mean));
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len().is_multiple_of(2) {
            0.5 * (sorted[mid - 1] + sorted[mid])
        } else {
            sorted[mid]
        };
        Self {
            // guards min <= mean <= max against summation rounding
            mean: mean.clamp(sorted[0], sorted[sorted.len() - 1]),
            median,
            sd,
            min: sorted[0],
            max: sorted[sorted.len() - 1],
        }
    }

    pub fn center(&self, aggregate: Aggregate) -> f64 {
        match aggregate {
            Aggregate::Mean => self.mean,
            Aggregate::Median => self.median,
        }
    }
}

fn sample_sd(values: &[f64], mean: f64) -> f64 {
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub n_beats: usize,
    pub per_beat: Vec<BeatRecord>,
    pub ivsd: MeasurementStats,
    pub lvidd: MeasurementStats,
    pub lvpwd: MeasurementStats,
    pub lvids: MeasurementStats,
    pub lvh_flag: Option<bool>,
    pub config_echo: serde_json::Value,
}

fn columns(beats: &[BeatRecord]) -> [Vec<f64>; 4] {
    [
        beats.iter().map(|b| b.diastolic.ivs).collect(),
        beats.iter().map(|b| b.diastolic.lvid).collect(),
        beats.iter().map(|b| b.diastolic.lvpw).collect(),
        beats.iter().map(|b| b.systolic.lvid).collect(),
    ]
}

/// Aggregates diastolic IVS/LVID/LVPW and systolic LVID over beats.
pub fn summarize(beats: &[BeatRecord], cfg: &StudyConfig) -> Result<StudySummary> {
    if beats.is_empty() {
        return Err(Error::EmptyBeats);
    }
    if let Some(rule) = &cfg.lvh_rule {
        rule.validate()?;
    }
    let [ivsd, lvidd, lvpwd, lvids] = columns(beats).map(|c| MeasurementStats::from_values(&c));
    let lvh_flag = cfg.lvh_rule.map(|rule| {
        rule.evaluate(ivsd.center(cfg.aggregate), lvpwd.center(cfg.aggregate))
    });
    Ok(StudySummary {
        n_beats: beats.len(),
        per_beat: beats.to_vec(),
        ivsd,
        lvidd,
        lvpwd,
        lvids,
        lvh_flag,
        config_echo: serde_json::to_value(cfg).expect("config serializes"),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub range: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeatSpread {
    pub ivsd: Spread,
    pub lvidd: Spread,
    pub lvpwd: Spread,
    pub lvids: Spread,
}

/// Beat-to-beat variability: range and sample SD per measurement.
pub fn beat_spread(beats: &[BeatRecord]) -> Result<BeatSpread> {
    if beats.len() < 2 {
        return Err(Error::InsufficientBeats {
            needed: 2,
            got: beats.len(),
        });
    }
    let [ivsd, lvidd, lvpwd, lvids] = columns(beats).map(|c| {
        let s = MeasurementStats::from_values(&c);
        Spread {
            range: s.max - s.min,
            sd: s.sd.unwrap_or(0.0),
        }
    });
    Ok(BeatSpread {
        ivsd,
        lvidd,
        lvpwd,
        lvids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MeasurementTriple;
    use proptest::prelude::*;

    fn beat(i: usize, ivs: f64, lvid: f64, lvpw: f64, lvid_s: f64) -> BeatRecord {
        BeatRecord {
            beat_index: i,
            diastole_frame: 10 + 50 * i,
            systole_frame: 35 + 50 * i,
            diastolic: MeasurementTriple::new(ivs, lvid, lvpw),
            systolic: MeasurementTriple::new(ivs * 1.3, lvid_s, lvpw * 1.3),
        }
    }

    #[test]
    fn single_beat() {
        let s = summarize(&[beat(0, 1.2, 4.6, 1.1, 3.0)], &StudyConfig::default()).unwrap();
        assert_eq!(s.n_beats, 1);
        assert_eq!(s.ivsd.mean, 1.2);
        assert_eq!(s.lvidd.mean, 4.6);
        assert_eq!(s.lvpwd.mean, 1.1);
        assert_eq!(s.lvids.mean, 3.0);
        assert!(s.ivsd.sd.is_none());
        assert!(s.lvh_flag.is_none());
    }

    #[test]
    fn sample_statistics() {
        let beats: Vec<_> = [1.0, 1.2, 1.4]
            .iter()
            .enumerate()
            .map(|(i, &v)| beat(i, v, 4.6, 1.0, 3.0))
            .collect();
        let s = summarize(&beats, &StudyConfig::default()).unwrap();
        assert!((s.ivsd.mean - 1.2).abs() < 1e-12);
        assert!((s.ivsd.sd.unwrap() - 0.2).abs() < 1e-12);
        assert_eq!((s.ivsd.min, s.ivsd.max), (1.0, 1.4));
        assert_eq!(s.lvidd.sd, Some(0.0));
        assert!(matches!(summarize(&[], &StudyConfig::default()), Err(Error::EmptyBeats)));
    }

    #[test]
    fn lvh_rule() {
        let beats = [beat(0, 1.2, 4.6, 0.9, 3.0)];
        let cfg = |c| StudyConfig {
            lvh_rule: Some(LvhRule {
                ivs_threshold_cm: 1.1,
                lvpw_threshold_cm: 1.1,
                combinator: c,
            }),
            ..StudyConfig::default()
        };
        assert_eq!(summarize(&beats, &cfg(Combinator::Any)).unwrap().lvh_flag, Some(true));
        assert_eq!(summarize(&beats, &cfg(Combinator::All)).unwrap().lvh_flag, Some(false));
        let bad = StudyConfig {
            lvh_rule: Some(LvhRule {
                ivs_threshold_cm: 0.0,
                lvpw_threshold_cm: 1.1,
                combinator: Combinator::Any,
            }),
            ..StudyConfig::default()
        };
        assert!(summarize(&beats, &bad).is_err());
    }

    #[test]
    fn median_aggregate() {
        let beats = [beat(0, 1.0, 4.6, 1.0, 3.0), beat(1, 1.05, 4.6, 1.0, 3.0), beat(2, 2.0, 4.6, 1.0, 3.0)];
        let cfg = StudyConfig {
            lvh_rule: Some(LvhRule {
                ivs_threshold_cm: 1.3,
                lvpw_threshold_cm: 5.0,
                combinator: Combinator::Any,
            }),
            aggregate: Aggregate::Median,
        };
        let s = summarize(&beats, &cfg).unwrap();
        assert_eq!(s.ivsd.median, 1.05);
        assert_eq!(s.lvh_flag, Some(false));
        let mean = summarize(&beats, &StudyConfig { aggregate: Aggregate::Mean, ..cfg }).unwrap();
        assert_eq!(mean.lvh_flag, Some(true));
    }

    #[test]
    fn spread() {
        let same = [beat(0, 1.0, 4.6, 1.0, 3.0), beat(1, 1.0, 4.6, 1.0, 3.0)];
        let s = beat_spread(&same).unwrap();
        assert_eq!(s.ivsd, Spread { range: 0.0, sd: 0.0 });
        assert_eq!(s.lvids, Spread { range: 0.0, sd: 0.0 });

        let two = [beat(0, 1.0, 4.6, 1.0, 3.0), beat(1, 1.4, 4.6, 1.0, 3.0)];
        let s = beat_spread(&two).unwrap();
        assert!((s.ivsd.range - 0.4).abs() < 1e-12);
        assert!((s.ivsd.sd - 0.08f64.sqrt()).abs() < 1e-12);
        assert!(matches!(
            beat_spread(&two[..1]),
            Err(Error::InsufficientBeats { needed: 2, got: 1 })
        ));
    }

    fn beats_strategy() -> impl Strategy<Value = Vec<BeatRecord>> {
        prop::collection::vec((0.5f64..2.0, 3.0f64..6.0, 0.5f64..2.0, 2.0f64..3.0), 2..10).prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (a, b, c, d))| beat(i, a, b, c, d))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn permutation_invariant(beats in beats_strategy(), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut shuffled = beats.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = summarize(&beats, &StudyConfig::default()).unwrap();
            let b = summarize(&shuffled, &StudyConfig::default()).unwrap();
            for (x, y) in [(a.ivsd, b.ivsd), (a.lvidd, b.lvidd), (a.lvpwd, b.lvpwd), (a.lvids, b.lvids)] {
                prop_assert!((x.mean - y.mean).abs() < 1e-12);
                prop_assert!((x.sd.unwrap() - y.sd.unwrap()).abs() < 1e-12);
                prop_assert_eq!((x.min, x.max, x.median), (y.min, y.max, y.median));
                prop_assert!(x.min <= x.mean && x.mean <= x.max);
            }
        }

        #[test]
        fn duplicate_beat_never_widens(beats in beats_strategy(), pick in any::<prop::sample::Index>()) {
            let mut more = beats.clone();
            more.push(beats[pick.index(beats.len())]);
            let a = beat_spread(&beats).unwrap();
            let b = beat_spread(&more).unwrap();
            for (x, y) in [(a.ivsd, b.ivsd), (a.lvidd, b.lvidd), (a.lvpwd, b.lvpwd), (a.lvids, b.lvids)] {
                prop_assert!(y.range <= x.range);
            }
            let sa = summarize(&beats, &StudyConfig::default()).unwrap();
            let sb = summarize(&more, &StudyConfig::default()).unwrap();
            prop_assert_eq!((sa.ivsd.min, sa.ivsd.max), (sb.ivsd.min, sb.ivsd.max));
        }

        #[test]
        fn lvh_flag_monotone(beats in beats_strategy(), t in 0.5f64..2.0, dt in 0.0f64..1.0, any_of in any::<bool>()) {
            let combinator = if any_of { Combinator::Any } else { Combinator::All };
            let rule = |t: f64| StudyConfig {
                lvh_rule: Some(LvhRule { ivs_threshold_cm: t, lvpw_threshold_cm: t, combinator }),
                ..StudyConfig::default()
            };
            let high = summarize(&beats, &rule(t + dt)).unwrap().lvh_flag.unwrap();
            let low = summarize(&beats, &rule(t)).unwrap().lvh_flag.unwrap();
            prop_assert!(!high || low);
        }
    }
}
