use echobeat_core::beats::{detect_beats, BeatConfig, MeasurementSeries};
use echobeat_core::decode::{decode_video, DecodeConfig};
use echobeat_core::heatmap::Extent;
use echobeat_core::phantom::{generate_trajectory, render_heatmaps, MockModelConfig, PhantomConfig};
use echobeat_core::study::{summarize, StudyConfig};

const EXTENT: Extent = Extent {
    height: 112,
    width: 112,
};

fn run(phantom: &PhantomConfig, mock: &MockModelConfig) -> (echobeat_core::Trajectory, Vec<echobeat_core::FrameRecord>) {
    let traj = generate_trajectory(phantom).unwrap();
    let stack = render_heatmaps(&traj, mock, EXTENT).unwrap();
    let records = decode_video(&stack, &DecodeConfig::default(), &traj.calibration).unwrap();
    (traj, records)
}

#[test]
fn noise_free_phantom_recovers_study_values() {
    let phantom = PhantomConfig::default();
    let (traj, records) = run(&phantom, &MockModelConfig::default());
    assert!(records.iter().all(|r| r.quality.kept));

    let series = MeasurementSeries::from_records(&records, phantom.fps).unwrap();
    let beats = detect_beats(&series, &BeatConfig::default()).unwrap();
    assert!((4..=5).contains(&beats.len()), "{} beats", beats.len());
    for b in &beats {
        let nearest = traj
            .diastole_frames
            .iter()
            .map(|&d| (d as i64 - b.diastole_frame as i64).abs())
            .min()
            .unwrap();
        assert!(nearest <= 1, "diastole at {}", b.diastole_frame);
    }

    let summary = summarize(&beats, &StudyConfig::default()).unwrap();
    let bound = std::f64::consts::SQRT_2 * phantom.cm_per_pixel;
    assert!((summary.lvidd.mean - phantom.lvid_d).abs() <= bound);
    assert!((summary.ivsd.mean - phantom.ivs_d).abs() <= bound);
    assert!((summary.lvpwd.mean - phantom.lvpw_d).abs() <= bound);
    assert!((summary.lvids.mean - phantom.lvid_s).abs() <= bound);
}

#[test]
fn unit_noise_frame_error_is_bounded() {
    // The LVID error is about the axial part of two independent endpoint
    // errors, N(0, 2σ²) px, whose mean magnitude is √(2/π)·√2·σ.
    let phantom = PhantomConfig {
        duration_s: 6.0,
        ..PhantomConfig::default()
    };
    let mock = MockModelConfig {
        noise_sigma_px: 1.0,
        seed: 11,
        ..MockModelConfig::default()
    };
    let (traj, records) = run(&phantom, &mock);
    let truth = traj.truth_lvid();
    let errs: Vec<f64> = records
        .iter()
        .filter_map(|r| r.measurement.map(|m| (m.lvid - truth[r.frame_index]).abs()))
        .collect();
    assert!(errs.len() >= 200, "only {} kept frames", errs.len());
    let mae = errs.iter().sum::<f64>() / errs.len() as f64;
    let bound = 3.0 * (2.0 / std::f64::consts::PI).sqrt() * std::f64::consts::SQRT_2 * phantom.cm_per_pixel;
    assert!(mae <= bound, "mae {mae} > {bound}");
    assert!(mae > 0.0);
}

#[test]
fn irregular_rhythm_yields_one_beat_per_cycle() {
    let phantom = PhantomConfig {
        duration_s: 6.0,
        period_s: vec![0.8, 1.0, 1.2],
        ..PhantomConfig::default()
    };
    let (traj, records) = run(&phantom, &MockModelConfig::default());
    let series = MeasurementSeries::from_records(&records, phantom.fps).unwrap();
    let beats = detect_beats(&series, &BeatConfig::default()).unwrap();
    let found: Vec<usize> = beats.iter().map(|b| b.diastole_frame).collect();
    assert!(found.len() >= traj.complete_beats().len() - 1, "{found:?}");
    for d in found {
        assert!(traj.diastole_frames.iter().any(|&t| t.abs_diff(d) <= 1), "{d}");
    }
}

#[test]
fn dropped_frames_are_bridged() {
    let phantom = PhantomConfig::default();
    let mock = MockModelConfig {
        dropout_prob: 0.05,
        seed: 3,
        ..MockModelConfig::default()
    };
    let (traj, records) = run(&phantom, &mock);
    let dropped = records.iter().filter(|r| !r.quality.kept).count();
    assert!(dropped > 0 && dropped < records.len() / 2);
    let series = MeasurementSeries::from_records(&records, phantom.fps).unwrap();
    let beats = detect_beats(&series, &BeatConfig::default()).unwrap();
    assert!(!beats.is_empty());
    for b in &beats {
        assert!(traj.diastole_frames.iter().any(|&t| t.abs_diff(b.diastole_frame) <= 1));
        assert!(b.diastolic.lvid >= b.systolic.lvid);
    }
}
