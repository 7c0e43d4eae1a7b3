//! Detection scoring against ground truth: greedy confidence-ordered
//! matching, precision/recall/F1, interpolated PR curves, and mAP.
//!
//! AP uses COCO-style 101-point interpolation at every IoU threshold, so
//! mAP@0.5 and mAP@0.5:0.95 come from one integration scheme.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::BBox;
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("IoU threshold must be in (0, 1), got {0}")]
    InvalidThreshold(f64),
    #[error("confidence must be in [0, 1], got {0}")]
    InvalidConfidence(f64),
    #[error("no ground truth boxes: AP is undefined")]
    NoGroundTruth,
}

/// One predicted box with its confidence.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection<T> {
    pub image_id: String,
    pub class_id: u32,
    pub bbox: BBox<T>,
    pub confidence: T,
}

impl<T: Real> Detection<T> {
    pub fn new(
        image_id: impl Into<String>,
        class_id: u32,
        bbox: BBox<T>,
        confidence: T,
    ) -> Result<Self, EvalError> {
        if !confidence.is_finite() || confidence < T::zero() || confidence > T::one() {
            return Err(EvalError::InvalidConfidence(
                confidence.to_f64().unwrap_or(f64::NAN),
            ));
        }
        Ok(Self {
            image_id: image_id.into(),
            class_id,
            bbox,
            confidence,
        })
    }
}

/// One annotated box.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth<T> {
    pub image_id: String,
    pub class_id: u32,
    pub bbox: BBox<T>,
}

/// Verdict for one detection after matching.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionMatch<T> {
    pub confidence: T,
    pub is_tp: bool,
    /// Index into the ground-truth slice this detection consumed.
    pub matched_gt: Option<usize>,
}

/// Result of matching one detection set against one ground-truth set at a
/// fixed IoU threshold. Detections are stored in descending-confidence
/// order (ties keep input order), ready for the PR sweep.
#[derive(Debug, Clone)]
pub struct MatchOutcome<T> {
    pub detections: Vec<DetectionMatch<T>>,
    /// Unmatched ground-truth count per image (images with ground truth only).
    pub fn_per_image: BTreeMap<String, usize>,
    pub total_gt: usize,
}

impl<T: Real> MatchOutcome<T> {
    pub fn tp_count(&self) -> usize {
        self.detections.iter().filter(|d| d.is_tp).count()
    }

    pub fn fp_count(&self) -> usize {
        self.detections.len() - self.tp_count()
    }

    pub fn fn_count(&self) -> usize {
        self.fn_per_image.values().sum()
    }
}

/// Keep at most `max_det` detections per image, preferring higher
/// confidence (ties keep input order). Output preserves input order.
pub fn cap_per_image<T: Real>(dets: &[Detection<T>], max_det: usize) -> Vec<Detection<T>> {
    let mut by_image: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, d) in dets.iter().enumerate() {
        by_image.entry(&d.image_id).or_default().push(i);
    }
    let mut keep = vec![false; dets.len()];
    for indices in by_image.values() {
        let mut order = indices.clone();
        order.sort_by(|&a, &b| {
            dets[b]
                .confidence
                .partial_cmp(&dets[a].confidence)
                .expect("confidence is finite")
                .then(a.cmp(&b))
        });
        for &i in order.iter().take(max_det) {
            keep[i] = true;
        }
    }
    dets.iter()
        .enumerate()
        .filter(|(i, _)| keep[*i])
        .map(|(_, d)| d.clone())
        .collect()
}

/// Greedy one-to-one matching: detections in descending confidence, each
/// taking the unmatched same-image same-class ground truth with the highest
/// IoU at or above the threshold. Losers are false positives; leftover
/// ground truths are false negatives.
pub fn match_detections<T: Real>(
    dets: &[Detection<T>],
    gts: &[GroundTruth<T>],
    iou_thr: T,
) -> Result<MatchOutcome<T>, EvalError> {
    if !(iou_thr > T::zero() && iou_thr < T::one()) {
        return Err(EvalError::InvalidThreshold(
            iou_thr.to_f64().unwrap_or(f64::NAN),
        ));
    }

    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        dets[b]
            .confidence
            .partial_cmp(&dets[a].confidence)
            .expect("confidence is finite")
            .then(a.cmp(&b))
    });

    let mut gt_matched = vec![false; gts.len()];
    let mut detections = Vec::with_capacity(dets.len());
    for &di in &order {
        let det = &dets[di];
        let mut best: Option<(usize, T)> = None;
        for (gi, gt) in gts.iter().enumerate() {
            if gt_matched[gi] || gt.image_id != det.image_id || gt.class_id != det.class_id {
                continue;
            }
            let iou = det.bbox.iou(&gt.bbox);
            if iou < iou_thr {
                continue;
            }
            let better = match best {
                None => true,
                Some((_, best_iou)) => iou > best_iou,
            };
            if better {
                best = Some((gi, iou));
            }
        }
        let matched_gt = best.map(|(gi, _)| gi);
        if let Some(gi) = matched_gt {
            gt_matched[gi] = true;
        }
        detections.push(DetectionMatch {
            confidence: det.confidence,
            is_tp: matched_gt.is_some(),
            matched_gt,
        });
    }

    let mut fn_per_image = BTreeMap::new();
    for (gi, gt) in gts.iter().enumerate() {
        let slot = fn_per_image.entry(gt.image_id.clone()).or_insert(0usize);
        if !gt_matched[gi] {
            *slot += 1;
        }
    }

    Ok(MatchOutcome {
        detections,
        fn_per_image,
        total_gt: gts.len(),
    })
}

/// Precision, recall, and F1 from raw counts. Degenerate 0/0 ratios are
/// defined as 0 so empty fixtures stay NaN-free.
pub fn precision_recall_f1<T: Real>(tp: usize, fp: usize, fn_: usize) -> (T, T, T) {
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            T::zero()
        } else {
            T::from_usize_lossy(num) / T::from_usize_lossy(den)
        }
    };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let two = T::from_f64_lossy(2.0);
    let f1 = if precision + recall > T::zero() {
        two * precision * recall / (precision + recall)
    } else {
        T::zero()
    };
    (precision, recall, f1)
}

/// Precision/recall sweep with its 101-point interpolated AP.
#[derive(Debug, Clone)]
pub struct PrCurve<T> {
    /// `(recall, precision)` points in descending-confidence order; recall
    /// is non-decreasing along the sweep.
    pub points: Vec<(T, T)>,
    pub ap: T,
}

/// Build the PR curve and its AP from a match outcome. Precision is made
/// non-increasing by a right-to-left max envelope; AP averages the envelope
/// at the 101 recall points 0.00, 0.01, ..., 1.00, with precision 0 beyond
/// the attained recall.
pub fn pr_curve<T: Real>(outcome: &MatchOutcome<T>) -> Result<PrCurve<T>, EvalError> {
    if outcome.total_gt == 0 {
        return Err(EvalError::NoGroundTruth);
    }
    let total_gt = T::from_usize_lossy(outcome.total_gt);
    let mut points = Vec::with_capacity(outcome.detections.len());
    let (mut tp, mut fp) = (0usize, 0usize);
    for d in &outcome.detections {
        if d.is_tp {
            tp += 1;
        } else {
            fp += 1;
        }
        let precision = T::from_usize_lossy(tp) / T::from_usize_lossy(tp + fp);
        let recall = T::from_usize_lossy(tp) / total_gt;
        points.push((recall, precision));
    }

    let mut envelope: Vec<T> = points.iter().map(|&(_, p)| p).collect();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }

    let hundred = T::from_usize_lossy(100);
    let mut sum = T::zero();
    for i in 0..=100usize {
        let r = T::from_usize_lossy(i) / hundred;
        let idx = points.partition_point(|&(recall, _)| recall < r);
        if idx < points.len() {
            sum = sum + envelope[idx];
        }
    }
    let ap = sum / T::from_usize_lossy(101);

    Ok(PrCurve { points, ap })
}

/// AP at one threshold, as part of a threshold table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdAp<T> {
    pub threshold: T,
    pub ap: T,
}

/// AP per IoU threshold (classes averaged) plus the mean over thresholds.
///
/// AP at a threshold is computed independently per ground-truth class and
/// averaged; with a single class this is just that class's AP.
pub fn map_at<T: Real>(
    dets: &[Detection<T>],
    gts: &[GroundTruth<T>],
    thresholds: &[T],
) -> Result<(Vec<ThresholdAp<T>>, T), EvalError> {
    if gts.is_empty() {
        return Err(EvalError::NoGroundTruth);
    }
    let mut classes: Vec<u32> = gts.iter().map(|g| g.class_id).collect();
    classes.sort_unstable();
    classes.dedup();

    let mut table = Vec::with_capacity(thresholds.len());
    for &thr in thresholds {
        let mut class_sum = T::zero();
        for &class in &classes {
            let class_dets: Vec<Detection<T>> = dets
                .iter()
                .filter(|d| d.class_id == class)
                .cloned()
                .collect();
            let class_gts: Vec<GroundTruth<T>> = gts
                .iter()
                .filter(|g| g.class_id == class)
                .cloned()
                .collect();
            let outcome = match_detections(&class_dets, &class_gts, thr)?;
            class_sum = class_sum + pr_curve(&outcome)?.ap;
        }
        table.push(ThresholdAp {
            threshold: thr,
            ap: class_sum / T::from_usize_lossy(classes.len()),
        });
    }
    let mean = table.iter().map(|t| t.ap).sum::<T>() / T::from_usize_lossy(table.len());
    Ok((table, mean))
}

/// The ten COCO thresholds 0.50, 0.55, ..., 0.95.
pub fn coco_thresholds<T: Real>() -> Vec<T> {
    (0..10)
        .map(|i| T::from_usize_lossy(50 + 5 * i) / T::from_usize_lossy(100))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

/// Full evaluation summary. Field order is the serialization order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport<T> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
    pub map50: T,
    pub map50_95: T,
    pub per_threshold_ap: Vec<ThresholdAp<T>>,
    pub counts: MatchCounts,
}

/// Score a prediction set: per-image cap, counts and scalar metrics at
/// `iou_thr` over all capped detections (no confidence cutoff), and the
/// COCO threshold table for mAP@0.5 and mAP@0.5:0.95.
pub fn evaluate<T: Real>(
    dets: &[Detection<T>],
    gts: &[GroundTruth<T>],
    iou_thr: T,
    max_det: usize,
) -> Result<EvalReport<T>, EvalError> {
    if gts.is_empty() {
        return Err(EvalError::NoGroundTruth);
    }
    let capped = cap_per_image(dets, max_det);
    let outcome = match_detections(&capped, gts, iou_thr)?;
    let (precision, recall, f1) =
        precision_recall_f1(outcome.tp_count(), outcome.fp_count(), outcome.fn_count());

    let thresholds = coco_thresholds::<T>();
    let (per_threshold_ap, map50_95) = map_at(&capped, gts, &thresholds)?;
    let half = T::from_usize_lossy(50) / T::from_usize_lossy(100);
    let map50 = per_threshold_ap
        .iter()
        .find(|t| t.threshold == half)
        .map(|t| t.ap)
        .expect("0.5 is in the COCO threshold list");

    Ok(EvalReport {
        precision,
        recall,
        f1,
        map50,
        map50_95,
        per_threshold_ap,
        counts: MatchCounts {
            tp: outcome.tp_count(),
            fp: outcome.fp_count(),
            fn_: outcome.fn_count(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(x0: f64, y0: f64, x1: f64, y1: f64) -> BBox<f64> {
        BBox::new(x0, y0, x1, y1).unwrap()
    }

    fn det(img: &str, b: BBox<f64>, conf: f64) -> Detection<f64> {
        Detection::new(img, 0, b, conf).unwrap()
    }

    fn gt(img: &str, b: BBox<f64>) -> GroundTruth<f64> {
        GroundTruth {
            image_id: img.into(),
            class_id: 0,
            bbox: b,
        }
    }

    #[test]
    fn match_single_overlap_is_tp() {
        let gts = vec![gt("a", bx(0.0, 0.0, 10.0, 10.0))];
        let dets = vec![det("a", bx(0.0, 0.0, 10.0, 9.0), 0.9)];
        let out = match_detections(&dets, &gts, 0.5).unwrap();
        assert_eq!((out.tp_count(), out.fp_count(), out.fn_count()), (1, 0, 0));
    }

    #[test]
    fn match_one_gt_two_dets_keeps_higher_confidence() {
        let gts = vec![gt("a", bx(0.0, 0.0, 10.0, 10.0))];
        let dets = vec![
            det("a", bx(0.0, 0.0, 10.0, 9.0), 0.6),
            det("a", bx(0.0, 0.0, 10.0, 10.0), 0.9),
        ];
        let out = match_detections(&dets, &gts, 0.5).unwrap();
        assert_eq!((out.tp_count(), out.fp_count()), (1, 1));
        // processed order is by confidence: the 0.9 det is the TP
        assert!(out.detections[0].is_tp && out.detections[0].confidence == 0.9);
        assert!(!out.detections[1].is_tp);
    }

    #[test]
    fn match_respects_image_and_class_boundaries() {
        let gts = vec![gt("a", bx(0.0, 0.0, 10.0, 10.0))];
        let wrong_image = vec![det("b", bx(0.0, 0.0, 10.0, 10.0), 0.9)];
        let out = match_detections(&wrong_image, &gts, 0.5).unwrap();
        assert_eq!((out.tp_count(), out.fn_count()), (0, 1));

        let wrong_class = vec![Detection::new("a", 7, bx(0.0, 0.0, 10.0, 10.0), 0.9).unwrap()];
        let out = match_detections(&wrong_class, &gts, 0.5).unwrap();
        assert_eq!((out.tp_count(), out.fp_count(), out.fn_count()), (0, 1, 1));
    }

    /// Hand-stepped greedy protocol over 3 ground truths and 5 detections.
    ///
    /// Confidence order: d1 matches G0 exactly (TP); d2 overlaps only the
    /// already-taken G0 (FP); d3 matches G1 at IoU 9/11 (TP); d4 overlaps G2
    /// at IoU 1/3 < 0.5 (FP); d5 matches G2 at IoU 2/3 (TP).
    #[test]
    fn match_mixed_fixture_follows_greedy_protocol() {
        let gts = vec![
            gt("a", bx(0.0, 0.0, 10.0, 10.0)),
            gt("a", bx(20.0, 0.0, 30.0, 10.0)),
            gt("a", bx(40.0, 0.0, 50.0, 10.0)),
        ];
        let dets = vec![
            det("a", bx(0.0, 0.0, 10.0, 10.0), 0.95),
            det("a", bx(1.0, 0.0, 11.0, 10.0), 0.90),
            det("a", bx(19.0, 0.0, 29.0, 10.0), 0.85),
            det("a", bx(45.0, 0.0, 55.0, 10.0), 0.80),
            det("a", bx(40.0, 2.0, 50.0, 12.0), 0.75),
        ];
        let out = match_detections(&dets, &gts, 0.5).unwrap();
        let flags: Vec<bool> = out.detections.iter().map(|d| d.is_tp).collect();
        assert_eq!(flags, vec![true, false, true, false, true]);
        assert_eq!(out.detections[0].matched_gt, Some(0));
        assert_eq!(out.detections[2].matched_gt, Some(1));
        assert_eq!(out.detections[4].matched_gt, Some(2));
        assert_eq!((out.tp_count(), out.fp_count(), out.fn_count()), (3, 2, 0));

        let curve = pr_curve(&out).unwrap();
        // grid: 34 points at 1, 33 at 2/3, 34 at 3/5
        let expected = (34.0 + 33.0 * (2.0 / 3.0) + 34.0 * 0.6) / 101.0;
        assert!((curve.ap - expected).abs() < 1e-12);
    }

    #[test]
    fn match_rejects_bad_threshold() {
        let gts = vec![gt("a", bx(0.0, 0.0, 1.0, 1.0))];
        assert!(matches!(
            match_detections::<f64>(&[], &gts, 0.0),
            Err(EvalError::InvalidThreshold(_))
        ));
        assert!(match_detections::<f64>(&[], &gts, 1.0).is_err());
    }

    #[test]
    fn prf_formulas() {
        let (p, r, f) = precision_recall_f1::<f64>(3, 1, 2);
        assert_eq!(p, 0.75);
        assert_eq!(r, 0.6);
        assert!((f - 2.0 * 0.45 / 1.35).abs() < 1e-15);

        assert_eq!(precision_recall_f1::<f64>(0, 0, 0), (0.0, 0.0, 0.0));
        assert_eq!(precision_recall_f1::<f64>(0, 5, 5), (0.0, 0.0, 0.0));
    }

    #[test]
    fn pr_curve_perfect_ranking_gives_ap_one() {
        let gts = vec![gt("a", bx(0.0, 0.0, 10.0, 10.0)), gt("b", bx(0.0, 0.0, 10.0, 10.0))];
        let dets = vec![
            det("a", bx(0.0, 0.0, 10.0, 10.0), 0.9),
            det("b", bx(0.0, 0.0, 10.0, 10.0), 0.8),
            det("a", bx(50.0, 50.0, 60.0, 60.0), 0.1), // trailing FP
        ];
        let out = match_detections(&dets, &gts, 0.5).unwrap();
        let curve = pr_curve(&out).unwrap();
        assert_eq!(curve.ap, 1.0);
    }

    #[test]
    fn pr_curve_missed_gt_gives_ap_zero() {
        let gts = vec![gt("a", bx(0.0, 0.0, 10.0, 10.0))];
        let out = match_detections::<f64>(&[], &gts, 0.5).unwrap();
        assert_eq!(pr_curve(&out).unwrap().ap, 0.0);
    }

    #[test]
    fn pr_curve_tp_fp_tp_matches_envelope_arithmetic() {
        let gts = vec![gt("a", bx(0.0, 0.0, 10.0, 10.0)), gt("a", bx(30.0, 0.0, 40.0, 10.0))];
        let dets = vec![
            det("a", bx(0.0, 0.0, 10.0, 10.0), 0.9),
            det("a", bx(60.0, 0.0, 70.0, 10.0), 0.8),
            det("a", bx(30.0, 0.0, 40.0, 10.0), 0.7),
        ];
        let out = match_detections(&dets, &gts, 0.5).unwrap();
        let flags: Vec<bool> = out.detections.iter().map(|d| d.is_tp).collect();
        assert_eq!(flags, vec![true, false, true]);
        let curve = pr_curve(&out).unwrap();
        // 51 grid points at 1.0, 50 at 2/3
        assert!((curve.ap - 253.0 / 303.0).abs() < 1e-12);
    }

    #[test]
    fn pr_curve_requires_ground_truth() {
        let out = MatchOutcome::<f64> {
            detections: vec![],
            fn_per_image: BTreeMap::new(),
            total_gt: 0,
        };
        assert!(matches!(pr_curve(&out), Err(EvalError::NoGroundTruth)));
    }

    #[test]
    fn map_exact_predictions_are_perfect_everywhere() {
        let gts = vec![gt("a", bx(0.0, 0.0, 10.0, 10.0)), gt("b", bx(5.0, 5.0, 9.0, 9.0))];
        let dets: Vec<Detection<f64>> = gts
            .iter()
            .map(|g| det(&g.image_id, g.bbox, 1.0))
            .collect();
        let (table, mean) = map_at(&dets, &gts, &coco_thresholds()).unwrap();
        assert!(table.iter().all(|t| t.ap == 1.0));
        assert_eq!(mean, 1.0);
    }

    #[test]
    fn map_iou_boundary_splits_thresholds() {
        // IoU exactly 0.6: matched at 0.50/0.55/0.60, missed above
        let gts = vec![gt("a", bx(0.0, 0.0, 10.0, 10.0))];
        let dets = vec![det("a", bx(0.0, 0.0, 10.0, 6.0), 0.9)];
        let (table, mean) = map_at(&dets, &gts, &coco_thresholds()).unwrap();
        for t in &table {
            let expected = if t.threshold <= 0.6 { 1.0 } else { 0.0 };
            assert_eq!(t.ap, expected, "threshold {}", t.threshold);
        }
        assert!((mean - 0.3).abs() < 1e-15);
    }

    #[test]
    fn map_empty_predictions_zero_everywhere() {
        let gts = vec![gt("a", bx(0.0, 0.0, 10.0, 10.0))];
        let (table, mean) = map_at::<f64>(&[], &gts, &coco_thresholds()).unwrap();
        assert!(table.iter().all(|t| t.ap == 0.0));
        assert_eq!(mean, 0.0);
    }

    #[test]
    fn evaluate_perfect_predictions() {
        let gts = vec![gt("a", bx(0.0, 0.0, 10.0, 10.0)), gt("b", bx(3.0, 3.0, 9.0, 9.0))];
        let dets: Vec<Detection<f64>> = gts
            .iter()
            .map(|g| det(&g.image_id, g.bbox, 1.0))
            .collect();
        let report = evaluate(&dets, &gts, 0.5, 300).unwrap();
        assert_eq!(report.precision, 1.0);
        assert_eq!(report.recall, 1.0);
        assert_eq!(report.f1, 1.0);
        assert_eq!(report.map50, 1.0);
        assert_eq!(report.map50_95, 1.0);
        assert_eq!(report.counts, MatchCounts { tp: 2, fp: 0, fn_: 0 });
    }

    #[test]
    fn evaluate_f1_consistent_with_own_fields() {
        let gts = vec![
            gt("a", bx(0.0, 0.0, 10.0, 10.0)),
            gt("a", bx(20.0, 0.0, 30.0, 10.0)),
            gt("b", bx(0.0, 0.0, 10.0, 10.0)),
        ];
        let dets = vec![
            det("a", bx(0.0, 0.0, 10.0, 9.0), 0.9),
            det("a", bx(50.0, 0.0, 60.0, 10.0), 0.8),
            det("b", bx(0.0, 0.0, 10.0, 4.0), 0.7),
        ];
        let report = evaluate(&dets, &gts, 0.5, 300).unwrap();
        let recomputed = 2.0 * report.precision * report.recall / (report.precision + report.recall);
        assert!((report.f1 - recomputed).abs() < 1e-12);
        assert!(report.map50_95 <= report.map50);
    }

    #[test]
    fn evaluate_requires_ground_truth() {
        assert!(matches!(
            evaluate::<f64>(&[], &[], 0.5, 300),
            Err(EvalError::NoGroundTruth)
        ));
    }

    #[test]
    fn cap_keeps_highest_confidence_per_image() {
        let dets = vec![
            det("a", bx(0.0, 0.0, 1.0, 1.0), 0.3),
            det("a", bx(0.0, 0.0, 1.0, 1.0), 0.9),
            det("a", bx(0.0, 0.0, 1.0, 1.0), 0.6),
            det("b", bx(0.0, 0.0, 1.0, 1.0), 0.1),
        ];
        let capped = cap_per_image(&dets, 2);
        let confs: Vec<f64> = capped.iter().map(|d| d.confidence).collect();
        // input order preserved; the 0.3 det on image a is dropped
        assert_eq!(confs, vec![0.9, 0.6, 0.1]);
    }

    #[test]
    fn cap_is_identity_when_under_limit() {
        let dets: Vec<Detection<f64>> = (0..10)
            .map(|i| det("a", bx(0.0, 0.0, 1.0, 1.0), i as f64 / 10.0))
            .collect();
        let gts = vec![gt("a", bx(0.0, 0.0, 1.0, 1.0))];
        let with_cap = evaluate(&cap_per_image(&dets, 300), &gts, 0.5, 300).unwrap();
        let without = evaluate(&dets, &gts, 0.5, usize::MAX).unwrap();
        assert_eq!(with_cap.map50, without.map50);
        assert_eq!(with_cap.counts, without.counts);
    }

    #[test]
    fn metrics_permutation_invariant_with_distinct_confidences() {
        let gts = vec![
            gt("a", bx(0.0, 0.0, 10.0, 10.0)),
            gt("b", bx(0.0, 0.0, 10.0, 10.0)),
        ];
        let dets = vec![
            det("a", bx(0.0, 0.0, 10.0, 9.0), 0.9),
            det("a", bx(20.0, 0.0, 30.0, 10.0), 0.7),
            det("b", bx(0.0, 0.0, 10.0, 8.0), 0.5),
        ];
        let base = evaluate(&dets, &gts, 0.5, 300).unwrap();
        let mut shuffled = dets.clone();
        shuffled.reverse();
        let permuted = evaluate(&shuffled, &gts, 0.5, 300).unwrap();
        assert_eq!(base.precision, permuted.precision);
        assert_eq!(base.recall, permuted.recall);
        assert_eq!(base.f1, permuted.f1);
        assert_eq!(base.map50, permuted.map50);
        assert_eq!(base.map50_95, permuted.map50_95);
    }

    #[test]
    fn threshold_monotonicity_stricter_never_helps() {
        let gts = vec![
            gt("a", bx(0.0, 0.0, 10.0, 10.0)),
            gt("a", bx(20.0, 0.0, 30.0, 10.0)),
        ];
        let dets = vec![
            det("a", bx(0.0, 0.0, 10.0, 8.0), 0.9),
            det("a", bx(20.0, 0.0, 30.0, 6.0), 0.8),
        ];
        let (table, _) = map_at(&dets, &gts, &coco_thresholds()).unwrap();
        for pair in table.windows(2) {
            assert!(pair[0].ap >= pair[1].ap);
        }
    }

    #[test]
    fn adding_trailing_fp_never_raises_ap() {
        let gts = vec![gt("a", bx(0.0, 0.0, 10.0, 10.0)), gt("a", bx(20.0, 0.0, 30.0, 10.0))];
        let dets = vec![
            det("a", bx(0.0, 0.0, 10.0, 9.0), 0.9),
            det("a", bx(50.0, 0.0, 60.0, 10.0), 0.5),
        ];
        let base = pr_curve(&match_detections(&dets, &gts, 0.5).unwrap())
            .unwrap()
            .ap;
        let mut more = dets.clone();
        more.push(det("a", bx(70.0, 0.0, 80.0, 10.0), 0.1));
        let with_fp = pr_curve(&match_detections(&more, &gts, 0.5).unwrap())
            .unwrap()
            .ap;
        assert!(with_fp <= base);

        // a trailing TP while recall < 1 never hurts
        let mut with_tp = dets.clone();
        with_tp.push(det("a", bx(20.0, 0.0, 30.0, 9.0), 0.05));
        let tp_ap = pr_curve(&match_detections(&with_tp, &gts, 0.5).unwrap())
            .unwrap()
            .ap;
        assert!(tp_ap >= base);
    }
}
