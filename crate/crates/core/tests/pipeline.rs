//! End-to-end library behaviour on the synthetic fixtures.

use vcrop_core::analysis::{consecutive_center_distance, consecutive_iou};
use vcrop_core::io::{format_annotations, parse_annotations, parse_y4m, encode_y4m};
use vcrop_core::metrics::{evaluate, DenseTrack, EvalPair, DEFAULT_IOU_THRESHOLDS};
use vcrop_core::motion::{FlowFrames, TrackConfig};
use vcrop_core::render::render_portrait;
use vcrop_core::scenes::{detect_scenes, SceneConfig};
use vcrop_core::smoothing::{anchor_report, smooth_track, Exclusion};
use vcrop_core::synth::fixture_set;
use vcrop_core::{Execution, FilterConfig, Provenance};

#[test]
fn smoothing_moves_fixture_tracks_toward_ground_truth() {
    let set = fixture_set(3, 6).unwrap();
    let cfg = FilterConfig::default();
    let mut raw_pairs = Vec::new();
    let mut smooth_pairs = Vec::new();
    for ((raw, gt), (id, video)) in set.raw.iter().zip(&set.ground_truth).zip(&set.videos) {
        let ff = FlowFrames::from_sequence(video, &TrackConfig::default(), Execution::Parallel).unwrap();
        let out = smooth_track(raw, &ff, &raw.scene_list(), &cfg, Execution::Parallel).unwrap();
        assert_eq!(out.provenance, Provenance::Smoothed);
        assert!(consecutive_iou(&out).unwrap() > consecutive_iou(raw).unwrap(), "{id}");
        assert!(consecutive_center_distance(&out).unwrap() < consecutive_center_distance(raw).unwrap(), "{id}");
        let gt_dense = DenseTrack::from_track(gt).unwrap();
        raw_pairs.push(EvalPair {
            video_id: id.clone(),
            pred: DenseTrack::from_track(raw).unwrap(),
            gt: gt_dense.clone(),
        });
        smooth_pairs.push(EvalPair {
            video_id: id.clone(),
            pred: DenseTrack::from_track(&out).unwrap(),
            gt: gt_dense,
        });
    }
    let before = evaluate(&raw_pairs, &DEFAULT_IOU_THRESHOLDS, Execution::Sequential).unwrap();
    let after = evaluate(&smooth_pairs, &DEFAULT_IOU_THRESHOLDS, Execution::Sequential).unwrap();
    assert!(after.m_iou > before.m_iou, "{} vs {}", after.m_iou, before.m_iou);
    assert!(after.temporal_smoothness.unwrap() > before.temporal_smoothness.unwrap());
}

#[test]
fn fixture_scene_cut_blocks_cross_scene_samples() {
    let set = fixture_set(3, 3).unwrap();
    let (raw, (_, video)) = (&set.raw[2], &set.videos[2]);
    let bounds = detect_scenes(video, &SceneConfig::default(), Execution::Parallel);
    assert_eq!(bounds.cuts(), &[33]);
    let ff = FlowFrames::from_sequence(video, &TrackConfig::default(), Execution::Parallel).unwrap();
    for k in 1..=raw.len() {
        let samples = anchor_report(raw, &ff, &bounds, k, &FilterConfig::default()).unwrap();
        let anchor_scene = bounds.scene_of(raw.annotations[k - 1].frame_index).unwrap();
        for s in samples {
            let scene = bounds.scene_of(raw.annotations[s.ordinal - 1].frame_index).unwrap();
            if scene != anchor_scene {
                assert_eq!(s.exclusion, Some(Exclusion::SceneCut));
                assert_eq!(s.weight, 0.0);
            }
        }
    }
}

#[test]
fn sequential_and_parallel_agree_everywhere() {
    let set = fixture_set(8, 3).unwrap();
    let cfg = FilterConfig::default();
    for (raw, (_, video)) in set.raw.iter().zip(&set.videos) {
        let a = FlowFrames::from_sequence(video, &TrackConfig::default(), Execution::Sequential).unwrap();
        let b = FlowFrames::from_sequence(video, &TrackConfig::default(), Execution::Parallel).unwrap();
        let s = smooth_track(raw, &a, &raw.scene_list(), &cfg, Execution::Sequential).unwrap();
        let p = smooth_track(raw, &b, &raw.scene_list(), &cfg, Execution::Parallel).unwrap();
        assert_eq!(format_annotations(&[s.clone()]), format_annotations(&[p]));
        let dense = DenseTrack::from_track(&s).unwrap();
        let rs = render_portrait(video, &dense, 180, Execution::Sequential).unwrap();
        let rp = render_portrait(video, &dense, 180, Execution::Parallel).unwrap();
        assert!(rs.iter().zip(rp.iter()).all(|(x, y)| x == y));
    }
}

#[test]
fn annotation_and_video_round_trips() {
    let set = fixture_set(11, 2).unwrap();
    let text = format_annotations(&set.raw);
    let back = parse_annotations(&text).unwrap();
    assert_eq!(format_annotations(&back), text);
    let y4m = encode_y4m(&set.videos[0].1).unwrap();
    let decoded = parse_y4m(&y4m).unwrap();
    assert_eq!(decoded.len(), set.videos[0].1.len());
    assert_eq!(encode_y4m(&decoded).unwrap().len(), y4m.len());
}
