//! Evaluation against annotated ground truth: team accuracy, OCR top-k
//! accuracy and combined accuracy, pooled per video and overall.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::identity::PlayerIdentity;
use crate::ingest::{GroundTruth, GtEntry};
use crate::model::{ColorSpace, OcrMethod, TrackId};

/// Hit count over a denominator. `pct` is `None` when nothing was eligible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub hits: usize,
    pub total: usize,
    pub pct: Option<f64>,
}

impl Metric {
    pub fn new(hits: usize, total: usize) -> Self {
        assert!(hits <= total, "hits {hits} exceed total {total}");
        Metric {
            hits,
            total,
            pct: (total > 0).then(|| 100.0 * hits as f64 / total as f64),
        }
    }

    fn add(self, other: Metric) -> Metric {
        Metric::new(self.hits + other.hits, self.total + other.total)
    }

    /// One decimal, or `n/a`.
    pub fn display(&self) -> String {
        self.pct.map_or_else(|| "n/a".to_string(), |p| format!("{p:.1}"))
    }
}

fn index(ids: &[PlayerIdentity]) -> HashMap<TrackId, &PlayerIdentity> {
    ids.iter().map(|i| (i.track_id, i)).collect()
}

fn team_ok(id: Option<&&PlayerIdentity>, gt: &GtEntry) -> bool {
    id.and_then(|i| i.team.as_deref()) == Some(gt.team.as_str())
}

fn in_top_k(id: Option<&&PlayerIdentity>, gt: &GtEntry, k: usize) -> bool {
    match (id, gt.kit) {
        (Some(i), Some(kit)) => i.candidates.iter().take(k).any(|c| c.kit == kit),
        _ => false,
    }
}

/// Team hits over every annotated tracklet, hidden kits included. A
/// tracklet with no identity counts as a miss.
pub fn team_counts(ids: &[PlayerIdentity], gt: &GroundTruth) -> Metric {
    let by_id = index(ids);
    let hits = gt
        .entries
        .iter()
        .filter(|(t, e)| team_ok(by_id.get(t), e))
        .count();
    Metric::new(hits, gt.len())
}

/// Hits where the annotated kit is among the first `k` candidates, over
/// tracklets whose kit is annotated as visible.
pub fn ocr_topk_counts(ids: &[PlayerIdentity], gt: &GroundTruth, k: usize) -> Metric {
    let by_id = index(ids);
    let eligible = gt.entries.iter().filter(|(_, e)| e.kit.is_some());
    let (mut hits, mut total) = (0, 0);
    for (t, e) in eligible {
        total += 1;
        hits += usize::from(in_top_k(by_id.get(t), e, k));
    }
    Metric::new(hits, total)
}

/// Hits where team and top-1 kit are both right, over kit-annotated
/// tracklets.
pub fn combined_counts(ids: &[PlayerIdentity], gt: &GroundTruth) -> Metric {
    let by_id = index(ids);
    let (mut hits, mut total) = (0, 0);
    for (t, e) in gt.entries.iter().filter(|(_, e)| e.kit.is_some()) {
        total += 1;
        let id = by_id.get(t);
        hits += usize::from(team_ok(id, e) && in_top_k(id, e, 1));
    }
    Metric::new(hits, total)
}

/// Team hits restricted to kit-annotated tracklets (bounds `combined`).
fn team_on_kit_counts(ids: &[PlayerIdentity], gt: &GroundTruth) -> Metric {
    let by_id = index(ids);
    let (mut hits, mut total) = (0, 0);
    for (t, e) in gt.entries.iter().filter(|(_, e)| e.kit.is_some()) {
        total += 1;
        hits += usize::from(team_ok(by_id.get(t), e));
    }
    Metric::new(hits, total)
}

pub fn team_accuracy(ids: &[PlayerIdentity], gt: &GroundTruth) -> Result<f64> {
    team_counts(ids, gt)
        .pct
        .ok_or_else(|| Error::Eval("ground truth is empty".into()))
}

pub fn ocr_topk_accuracy(ids: &[PlayerIdentity], gt: &GroundTruth, k: usize) -> Option<f64> {
    ocr_topk_counts(ids, gt, k).pct
}

pub fn combined_accuracy(ids: &[PlayerIdentity], gt: &GroundTruth) -> Option<f64> {
    combined_counts(ids, gt).pct
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Online,
    Post,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Online => "online",
            Mode::Post => "post",
        }
    }
}

/// Identities produced by one configuration on one video.
#[derive(Debug, Clone)]
pub struct EvalRun {
    pub mode: Mode,
    pub color_space: ColorSpace,
    pub ocr_method: OcrMethod,
    pub identities: Vec<PlayerIdentity>,
}

#[derive(Debug, Clone)]
pub struct VideoEval {
    pub video: String,
    pub ground_truth: GroundTruth,
    pub runs: Vec<EvalRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamCell {
    pub mode: Mode,
    pub color_space: ColorSpace,
    pub accuracy: Metric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcrCell {
    pub method: OcrMethod,
    pub top1: Metric,
    pub top5: Metric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedCell {
    pub mode: Mode,
    pub color_space: ColorSpace,
    pub method: OcrMethod,
    pub accuracy: Metric,
    /// Team accuracy on the kit-annotated subset, an upper bound of `accuracy`.
    pub team_on_kit: Metric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub video: String,
    pub tracklets: usize,
    pub kit_tracklets: usize,
    pub team: Vec<TeamCell>,
    pub ocr: Vec<OcrCell>,
    pub combined: Vec<CombinedCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub videos: Vec<EvalRow>,
    /// Pooled over every tracklet of every video.
    pub overall: EvalRow,
}

type RunKey = (Mode, ColorSpace, OcrMethod);

fn row_for(v: &VideoEval) -> Result<EvalRow> {
    if v.ground_truth.is_empty() {
        return Err(Error::Eval(format!("video `{}` has empty ground truth", v.video)));
    }
    let mut runs: BTreeMap<RunKey, &EvalRun> = BTreeMap::new();
    for r in &v.runs {
        if runs.insert((r.mode, r.color_space, r.ocr_method), r).is_some() {
            return Err(Error::Eval(format!(
                "video `{}` has two {} runs with {} / {}",
                v.video,
                r.mode.label(),
                r.color_space.label(),
                r.ocr_method.label()
            )));
        }
    }
    if runs.is_empty() {
        return Err(Error::Eval(format!("video `{}` has no runs", v.video)));
    }
    let gt = &v.ground_truth;
    // Team columns per (mode, space), OCR columns per method; the first run
    // in key order represents each column.
    let mut team: BTreeMap<(Mode, ColorSpace), TeamCell> = BTreeMap::new();
    let mut ocr: BTreeMap<OcrMethod, OcrCell> = BTreeMap::new();
    let mut combined = Vec::new();
    for (&(mode, cs, method), r) in &runs {
        team.entry((mode, cs)).or_insert_with(|| TeamCell {
            mode,
            color_space: cs,
            accuracy: team_counts(&r.identities, gt),
        });
        ocr.entry(method).or_insert_with(|| OcrCell {
            method,
            top1: ocr_topk_counts(&r.identities, gt, 1),
            top5: ocr_topk_counts(&r.identities, gt, 5),
        });
    }
    // Combined per method, from the post run in the preferred color space.
    let prefer = |cs: ColorSpace| match cs {
        ColorSpace::Cielab => 0,
        ColorSpace::WeightedRgb => 1,
        ColorSpace::Rgb => 2,
    };
    let methods: BTreeSet<OcrMethod> = runs.keys().map(|k| k.2).collect();
    for method in methods {
        let best = runs
            .iter()
            .filter(|(k, _)| k.2 == method)
            .min_by_key(|(k, _)| (k.0 != Mode::Post, prefer(k.1)));
        if let Some((&(mode, cs, _), r)) = best {
            combined.push(CombinedCell {
                mode,
                color_space: cs,
                method,
                accuracy: combined_counts(&r.identities, gt),
                team_on_kit: team_on_kit_counts(&r.identities, gt),
            });
        }
    }
    Ok(EvalRow {
        video: v.video.clone(),
        tracklets: gt.len(),
        kit_tracklets: gt.entries.values().filter(|e| e.kit.is_some()).count(),
        team: team.into_values().collect(),
        ocr: ocr.into_values().collect(),
        combined,
    })
}

fn columns(row: &EvalRow) -> (Vec<(Mode, ColorSpace)>, Vec<OcrMethod>, Vec<RunKey>) {
    (
        row.team.iter().map(|c| (c.mode, c.color_space)).collect(),
        row.ocr.iter().map(|c| c.method).collect(),
        row.combined.iter().map(|c| (c.mode, c.color_space, c.method)).collect(),
    )
}

fn pool(rows: &[EvalRow]) -> EvalRow {
    let mut overall = rows[0].clone();
    overall.video = "Overall".into();
    for r in &rows[1..] {
        overall.tracklets += r.tracklets;
        overall.kit_tracklets += r.kit_tracklets;
        for (a, b) in overall.team.iter_mut().zip(&r.team) {
            a.accuracy = a.accuracy.add(b.accuracy);
        }
        for (a, b) in overall.ocr.iter_mut().zip(&r.ocr) {
            a.top1 = a.top1.add(b.top1);
            a.top5 = a.top5.add(b.top5);
        }
        for (a, b) in overall.combined.iter_mut().zip(&r.combined) {
            a.accuracy = a.accuracy.add(b.accuracy);
            a.team_on_kit = a.team_on_kit.add(b.team_on_kit);
        }
    }
    overall
}

/// Per-video rows plus an overall row pooled over tracklets (not averaged
/// over videos). Every video must carry the same set of configurations.
pub fn build_report(videos: &[VideoEval]) -> Result<EvalReport> {
    if videos.is_empty() {
        return Err(Error::Eval("no videos to evaluate".into()));
    }
    let rows = videos.iter().map(row_for).collect::<Result<Vec<_>>>()?;
    let expected = columns(&rows[0]);
    for r in &rows[1..] {
        if columns(r) != expected {
            return Err(Error::Eval(format!(
                "video `{}` was run with a different configuration set than `{}`",
                r.video, rows[0].video
            )));
        }
    }
    let report = EvalReport {
        overall: pool(&rows),
        videos: rows,
    };
    report.check_invariants()?;
    Ok(report)
}

impl EvalReport {
    /// `top1 <= top5` and `combined <= min(team on kit subset, top1)` on
    /// every row; percentages within `[0, 100]` hold by construction.
    pub fn check_invariants(&self) -> Result<()> {
        for row in self.videos.iter().chain(std::iter::once(&self.overall)) {
            for c in &row.ocr {
                if c.top1.hits > c.top5.hits {
                    return Err(Error::Eval(format!("{}: top-1 exceeds top-5", row.video)));
                }
            }
            for c in &row.combined {
                let top1 = row
                    .ocr
                    .iter()
                    .find(|o| o.method == c.method)
                    .map_or(0, |o| o.top1.hits);
                if c.accuracy.hits > c.team_on_kit.hits.min(top1) {
                    return Err(Error::Eval(format!(
                        "{}: combined exceeds its team or top-1 bound",
                        row.video
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Aligned text table: one column per team configuration, one per OCR
    /// method as `top1 (top5)`, then combined.
    pub fn to_table(&self) -> String {
        let first = &self.overall;
        let mut header = vec!["Video".to_string(), "Tracklets".into(), "Kits".into()];
        header.extend(first.team.iter().map(|c| format!("Team {} {}", c.mode.label(), c.color_space.label())));
        header.extend(first.ocr.iter().map(|c| format!("OCR {}", c.method.label())));
        header.extend(first.combined.iter().map(|c| format!("Combined {}", c.method.label())));
        let mut rows = vec![header];
        for r in self.videos.iter().chain(std::iter::once(&self.overall)) {
            let mut cells = vec![r.video.clone(), r.tracklets.to_string(), r.kit_tracklets.to_string()];
            cells.extend(r.team.iter().map(|c| c.accuracy.display()));
            cells.extend(r.ocr.iter().map(|c| format!("{} ({})", c.top1.display(), c.top5.display())));
            cells.extend(r.combined.iter().map(|c| c.accuracy.display()));
            rows.push(cells);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|i| rows.iter().map(|r| r[i].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (n, r) in rows.iter().enumerate() {
            let line: Vec<String> = r
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
            if n == 0 || n == rows.len() - 2 {
                let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
                let _ = writeln!(out, "{}", "-".repeat(total));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{KitCandidate, KitNumber, TeamSide};

    fn kit(n: u32) -> KitNumber {
        KitNumber::new(n).unwrap()
    }

    fn ident(track: u32, team: &str, cands: &[u32]) -> PlayerIdentity {
        PlayerIdentity {
            track_id: track,
            team: Some(team.into()),
            side: Some(TeamSide::Home),
            team_conf: 1.0,
            kit: cands.first().map(|&k| kit(k)),
            kit_conf: 1.0,
            player_name: None,
            position: None,
            team_overridden: false,
            kit_dropped: false,
            candidates: cands
                .iter()
                .map(|&k| KitCandidate { kit: kit(k), confidence: 0.5 })
                .collect(),
            candidate_rank: None,
            first_frame: 0,
            last_frame: 0,
            frame_count: 1,
            frames: vec![],
        }
    }

    fn gt(entries: &[(u32, &str, Option<u32>)]) -> GroundTruth {
        GroundTruth {
            entries: entries
                .iter()
                .map(|&(t, team, k)| (t, GtEntry { team: team.into(), kit: k.map(kit) }))
                .collect(),
        }
    }

    #[test]
    fn ratios() {
        let g = gt(&(0..10).map(|t| (t, "X", Some(7))).collect::<Vec<_>>());
        let mut ids: Vec<_> = (0..10).map(|t| ident(t, "X", &[7])).collect();
        assert_eq!(team_accuracy(&ids, &g).unwrap(), 100.0);
        ids[3].team = Some("Y".into());
        assert_eq!(team_accuracy(&ids, &g).unwrap(), 90.0);
        assert!(team_accuracy(&ids, &GroundTruth::default()).is_err());
    }

    #[test]
    fn topk_rank_and_exclusion() {
        let g = gt(&[(1, "X", Some(7)), (2, "X", None)]);
        let ids = vec![ident(1, "X", &[3, 7]), ident(2, "X", &[9])];
        assert_eq!(ocr_topk_accuracy(&ids, &g, 1), Some(0.0));
        assert_eq!(ocr_topk_accuracy(&ids, &g, 5), Some(100.0));
        assert_eq!(ocr_topk_accuracy(&[ident(1, "X", &[])], &g, 5), Some(0.0));
        assert_eq!(ocr_topk_accuracy(&ids, &gt(&[(2, "X", None)]), 1), None);
    }

    #[test]
    fn combined_is_a_conjunction() {
        let g = gt(&[(1, "X", Some(7))]);
        assert_eq!(combined_accuracy(&[ident(1, "Y", &[7])], &g), Some(0.0));
        assert_eq!(combined_accuracy(&[ident(1, "X", &[7])], &g), Some(100.0));
    }

    #[test]
    fn count_arithmetic() {
        assert_eq!(Metric::new(92, 300).display(), "30.7");
        assert_eq!(Metric::new(107, 300).display(), "35.7");
        assert_eq!(Metric::new(0, 0).display(), "n/a");
    }

    fn video(name: &str, n: u32, correct: u32) -> VideoEval {
        let g = gt(&(0..n).map(|t| (t, "X", Some(7))).collect::<Vec<_>>());
        let ids = (0..n)
            .map(|t| ident(t, if t < correct { "X" } else { "Y" }, &[7]))
            .collect();
        VideoEval {
            video: name.into(),
            ground_truth: g,
            runs: vec![EvalRun {
                mode: Mode::Post,
                color_space: ColorSpace::Cielab,
                ocr_method: OcrMethod::Mock,
                identities: ids,
            }],
        }
    }

    #[test]
    fn overall_is_pooled() {
        let r = build_report(&[video("a", 10, 10), video("b", 30, 15)]).unwrap();
        assert_eq!(r.overall.team[0].accuracy.pct, Some(62.5));
        assert_eq!(r.overall.tracklets, 40);
        let single = build_report(&[video("a", 10, 7)]).unwrap();
        assert_eq!(single.overall.team, single.videos[0].team);
        assert_eq!(EvalReport::from_json(&r.to_json()).unwrap(), r);
        assert!(r.to_table().contains("Overall"));
    }

    #[test]
    fn incompatible_configs_rejected() {
        let a = video("a", 4, 4);
        let mut b = video("b", 4, 4);
        b.runs[0].color_space = ColorSpace::WeightedRgb;
        assert!(build_report(&[a.clone(), b]).is_err());
        let mut dup = a.clone();
        dup.runs.push(dup.runs[0].clone());
        assert!(build_report(&[dup]).is_err());
        assert!(build_report(&[]).is_err());
    }
}
