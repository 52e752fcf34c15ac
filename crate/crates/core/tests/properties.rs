//! Invariants of OCR scheduling, collision resolution and the synthetic
//! generator, over random inputs.

use std::collections::BTreeSet;

use pitchid_core::identity::{resolve_collisions, resolve_identities};
use pitchid_core::ingest::{generate_synthetic_match, SyntheticSpec};
use pitchid_core::model::RosterEntry;
use pitchid_core::ocr::plan::{score_gate, select_top_n, split_time_zones};
use pitchid_core::ocr::score::crop_score;
use pitchid_core::{
    BBox, CropScoreFn, Detection, GameMetadata, KitCandidate, KitNumber, PlayerDb, TeamAssignment, TeamSide,
    Tracklet,
};
use proptest::prelude::*;

fn detection(track_id: u32, frame: u32, brisque: f64, iou_sum: f64) -> Detection {
    Detection {
        frame,
        track_id,
        bbox: BBox::new(0.0, 0.0, 20.0, 40.0),
        conf: 0.9,
        avg_rgb: None,
        brisque,
        iou_sum,
        team_id: None,
        kit_number: None,
    }
}

/// A tracklet over distinct, sorted frames with random crop metadata.
fn tracklet_strategy() -> impl Strategy<Value = Tracklet> {
    prop::collection::btree_map(0u32..2000, (0.0f64..100.0, 0.0f64..3.0), 1..200).prop_map(|frames| Tracklet {
        track_id: 1,
        detections: frames.into_iter().map(|(f, (b, i))| detection(1, f, b, i)).collect(),
        team_assignment: None,
        kit_candidates: Vec::new(),
    })
}

fn score_fn() -> impl Strategy<Value = CropScoreFn> {
    prop_oneof![Just(CropScoreFn::IouScore), Just(CropScoreFn::IouArea), Just(CropScoreFn::IouRandom)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn time_zone_plans_respect_their_caps(t in tracklet_strategy(), zones in 1usize..8, per_zone in 1usize..12, f in score_fn()) {
        let plan = split_time_zones(&t, zones, per_zone, f, 0);
        prop_assert_eq!(plan.zones.len(), zones);
        prop_assert_eq!(plan.zones[0].start, t.first_frame());
        prop_assert_eq!(plan.zones.last().unwrap().end, t.last_frame() + 1);
        for w in plan.zones.windows(2) {
            prop_assert_eq!(w[0].end, w[1].start);
        }
        let mut frames = BTreeSet::new();
        for z in &plan.zones {
            prop_assert!(z.entries.len() <= per_zone);
            for e in &z.entries {
                prop_assert!(z.contains(e.frame));
                prop_assert!(frames.insert(e.frame));
            }
            for w in z.entries.windows(2) {
                prop_assert!(w[0].score <= w[1].score);
            }
            // Nothing left out of a zone scores better than what was kept.
            if let Some(worst) = z.entries.last() {
                let in_zone = t.detections.iter().filter(|d| z.contains(d.frame));
                let better = in_zone.filter(|d| crop_score(d, f, 0) < worst.score).count();
                prop_assert!(better < z.entries.len());
            }
        }
        let expected: usize = plan.zones.iter().map(|z| t.detections.iter().filter(|d| z.contains(d.frame)).count().min(per_zone)).sum();
        prop_assert_eq!(plan.len(), expected);
    }

    #[test]
    fn top_n_keeps_the_best_scores(t in tracklet_strategy(), n in 1usize..40, f in score_fn()) {
        let plan = select_top_n(&t, n, f, 0);
        prop_assert_eq!(plan.len(), n.min(t.detections.len()));
        let kept: BTreeSet<u32> = plan.entries().map(|e| e.frame).collect();
        let cutoff = plan.entries().map(|e| e.score).fold(f64::NEG_INFINITY, f64::max);
        for d in t.detections.iter().filter(|d| !kept.contains(&d.frame)) {
            prop_assert!(crop_score(d, f, 0) >= cutoff);
        }
    }

    #[test]
    fn score_gate_keeps_exactly_the_crops_under_the_gate(t in tracklet_strategy(), gate in 0.0f64..200.0) {
        let plan = score_gate(&t, gate, CropScoreFn::IouScore, 0);
        let want: BTreeSet<u32> = t.detections.iter().filter(|d| d.brisque * (1.0 + d.iou_sum) <= gate).map(|d| d.frame).collect();
        let got: BTreeSet<u32> = plan.entries().map(|e| e.frame).collect();
        prop_assert_eq!(got, want);
    }
}

fn meta() -> GameMetadata {
    GameMetadata {
        game_id: "g".into(),
        clip_id: "c".into(),
        width: 100,
        height: 100,
        fps: 25.0,
        video_url: String::new(),
        home_team: "X".into(),
        away_team: "Y".into(),
        home_color: [255, 0, 0],
        away_color: [0, 0, 255],
    }
}

fn roster() -> PlayerDb {
    let mut db = PlayerDb::default();
    for (team, kits) in [("X", [1, 2, 3]), ("Y", [1, 2, 4])] {
        for k in kits {
            let entry = RosterEntry {
                name: format!("{team}{k}"),
                position: "DF".into(),
            };
            db.insert(team, KitNumber::new(k).unwrap(), entry).unwrap();
        }
    }
    db
}

type Spec = (bool, f64, Vec<(u32, f64)>, u32, u32);

fn identity_specs() -> impl Strategy<Value = Vec<Spec>> {
    prop::collection::vec(
        (
            any::<bool>(),
            0.0f64..1.0,
            prop::collection::vec((1u32..6, 0.0f64..1.0), 0..4),
            0u32..30,
            1u32..20,
        ),
        1..10,
    )
}

fn build(specs: &[Spec]) -> Vec<Tracklet> {
    specs
        .iter()
        .enumerate()
        .map(|(i, (home, team_conf, cands, start, len))| {
            let id = i as u32;
            let side = if *home { TeamSide::Home } else { TeamSide::Away };
            let mut cands: Vec<KitCandidate> = cands
                .iter()
                .map(|&(k, c)| KitCandidate { kit: KitNumber::new(k).unwrap(), confidence: c })
                .collect();
            cands.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
            cands.dedup_by_key(|c| c.kit);
            Tracklet {
                track_id: id,
                detections: (*start..start + len).map(|f| detection(id, f, 1.0, 0.0)).collect(),
                team_assignment: Some(TeamAssignment {
                    team: if *home { "X" } else { "Y" }.into(),
                    side,
                    confidence: *team_conf,
                }),
                kit_candidates: cands,
            }
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn resolution_leaves_no_co_frame_duplicates(specs in identity_specs()) {
        let tracklets = build(&specs);
        let db = roster();
        let out = resolve_identities(&tracklets, &meta(), &db);
        let mut seen = BTreeSet::new();
        for (id, t) in out.iter().zip(&tracklets) {
            prop_assert_eq!(id.track_id, t.track_id);
            if let (Some(side), Some(kit)) = (id.side, id.kit) {
                let team = id.team.as_deref().unwrap();
                prop_assert!(db.contains(team, kit), "unrostered kit survived");
                for d in &t.detections {
                    prop_assert!(seen.insert((d.frame, side, kit)));
                }
            }
        }
        prop_assert_eq!(resolve_collisions(out.clone(), &meta(), &db), out);
    }
}

#[test]
fn generator_is_deterministic_and_fully_annotated() {
    let spec = SyntheticSpec {
        frames: 150,
        absence_rate: 0.2,
        occlusion_rate: 0.2,
        ..SyntheticSpec::default()
    };
    let a = generate_synthetic_match(&spec, 31).unwrap();
    let b = generate_synthetic_match(&spec, 31).unwrap();
    assert_eq!(a.detections, b.detections);
    assert_eq!(a.ground_truth, b.ground_truth);
    let c = generate_synthetic_match(&spec, 32).unwrap();
    assert_ne!(a.detections, c.detections);

    let tracks: BTreeSet<u32> = a.detections.iter().map(|d| d.track_id).collect();
    let annotated: BTreeSet<u32> = a.ground_truth.entries.keys().copied().collect();
    assert_eq!(tracks, annotated);
    for e in a.ground_truth.entries.values() {
        let kit = e.kit.expect("every number is visible by default");
        assert!(a.player_db.contains(&e.team, kit));
    }
}

#[test]
fn clean_generator_has_every_player_in_every_frame() {
    let spec = SyntheticSpec {
        frames: 100,
        ..SyntheticSpec::default()
    };
    let m = generate_synthetic_match(&spec, 4).unwrap();
    assert_eq!(m.detections.len(), 100 * 10);
    assert_eq!(m.ground_truth.len(), 10);
    assert!(m.detections.iter().all(|d| d.iou_sum == 0.0));
}
