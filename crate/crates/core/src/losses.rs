//! Standalone detection-loss kernels: CIoU box loss, weighted BCE
//! classification loss, a probability-weighted L1 localization loss, and
//! their weighted total. All kernels are pure and return sums, not means.

use thiserror::Error;

use crate::geometry::BBox;
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum LossError {
    #[error("parallel sequences must have equal lengths: {0:?}")]
    LengthMismatch(Vec<usize>),
    #[error("non-finite value in batch at index {0}")]
    NonFinite(usize),
    #[error("class weight at index {0} must be > 0")]
    NonPositiveWeight(usize),
    #[error("probability weight at index {0} must be >= 0")]
    NegativeWeight(usize),
    #[error("loss weights must be finite and >= 0")]
    InvalidLossWeights,
}

/// Component weights of the total loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights<T> {
    pub lambda_box: T,
    pub lambda_cls: T,
    pub lambda_dfl: T,
}

impl<T: Real> LossWeights<T> {
    pub fn new(lambda_box: T, lambda_cls: T, lambda_dfl: T) -> Result<Self, LossError> {
        for l in [lambda_box, lambda_cls, lambda_dfl] {
            if !l.is_finite() || l < T::zero() {
                return Err(LossError::InvalidLossWeights);
            }
        }
        Ok(Self {
            lambda_box,
            lambda_cls,
            lambda_dfl,
        })
    }
}

impl<T: Real> Default for LossWeights<T> {
    /// YOLO reference convention: box 7.5, cls 0.5, dfl 1.5.
    fn default() -> Self {
        Self {
            lambda_box: T::from_f64_lossy(7.5),
            lambda_cls: T::from_f64_lossy(0.5),
            lambda_dfl: T::from_f64_lossy(1.5),
        }
    }
}

/// CIoU box regression loss: `1 - IoU + rho^2/c^2 + alpha*v`.
///
/// `rho` is the center distance, `c` the diagonal of the minimal enclosing
/// box, `v = (4/pi^2) (atan(w_gt/h_gt) - atan(w_pred/h_pred))^2` the aspect
/// penalty, and `alpha = v / ((1 - IoU) + v)` (zero when `v` vanishes).
/// Zero exactly when `pred == gt`; always below 3 for valid boxes.
pub fn box_loss<T: Real>(pred: &BBox<T>, gt: &BBox<T>) -> T {
    let iou = pred.iou(gt);

    let (pcx, pcy) = pred.center();
    let (gcx, gcy) = gt.center();
    let rho2 = (pcx - gcx).powi(2) + (pcy - gcy).powi(2);

    let enc_w = pred.x_max().max(gt.x_max()) - pred.x_min().min(gt.x_min());
    let enc_h = pred.y_max().max(gt.y_max()) - pred.y_min().min(gt.y_min());
    let c2 = enc_w.powi(2) + enc_h.powi(2);

    let four_over_pi2 = T::from_f64_lossy(4.0 / (std::f64::consts::PI * std::f64::consts::PI));
    let angle = (gt.width() / gt.height()).atan() - (pred.width() / pred.height()).atan();
    let v = four_over_pi2 * angle * angle;

    let aspect = if v > T::zero() {
        let alpha = v / ((T::one() - iou) + v);
        alpha * v
    } else {
        T::zero()
    };

    T::one() - iou + rho2 / c2 + aspect
}

/// Classification batch: labels, clamped probabilities, per-class weights.
#[derive(Debug, Clone)]
pub struct ClsBatch<T> {
    labels: Vec<bool>,
    probs: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> ClsBatch<T> {
    /// Probabilities are clamped into `[1e-7, 1 - 1e-7]` so the log terms
    /// stay finite. Weights must be positive.
    pub fn new(labels: Vec<bool>, probs: Vec<T>, weights: Vec<T>) -> Result<Self, LossError> {
        if labels.len() != probs.len() || labels.len() != weights.len() {
            return Err(LossError::LengthMismatch(vec![
                labels.len(),
                probs.len(),
                weights.len(),
            ]));
        }
        let eps = T::from_f64_lossy(1e-7);
        let mut clamped = Vec::with_capacity(probs.len());
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() {
                return Err(LossError::NonFinite(i));
            }
            clamped.push(p.max(eps).min(T::one() - eps));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(LossError::NonFinite(i));
            }
            if w <= T::zero() {
                return Err(LossError::NonPositiveWeight(i));
            }
        }
        Ok(Self {
            labels,
            probs: clamped,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Weighted binary cross entropy, summed over the batch. The weight applies
/// to the positive term only: `-sum_j [w_j y_j ln(p_j) + (1-y_j) ln(1-p_j)]`.
/// An empty batch yields 0.
pub fn cls_loss<T: Real>(batch: &ClsBatch<T>) -> T {
    let mut total = T::zero();
    for i in 0..batch.len() {
        let p = batch.probs[i];
        total = total
            + if batch.labels[i] {
                -(batch.weights[i] * p.ln())
            } else {
                -(T::one() - p).ln()
            };
    }
    total
}

/// Localization batch: per-coordinate weights and predicted/target values.
#[derive(Debug, Clone)]
pub struct DflBatch<T> {
    weights: Vec<T>,
    x_pred: Vec<T>,
    x_gt: Vec<T>,
}

impl<T: Real> DflBatch<T> {
    pub fn new(weights: Vec<T>, x_pred: Vec<T>, x_gt: Vec<T>) -> Result<Self, LossError> {
        if weights.len() != x_pred.len() || weights.len() != x_gt.len() {
            return Err(LossError::LengthMismatch(vec![
                weights.len(),
                x_pred.len(),
                x_gt.len(),
            ]));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(LossError::NonFinite(i));
            }
            if w < T::zero() {
                return Err(LossError::NegativeWeight(i));
            }
        }
        for i in 0..x_pred.len() {
            if !x_pred[i].is_finite() || !x_gt[i].is_finite() {
                return Err(LossError::NonFinite(i));
            }
        }
        Ok(Self {
            weights,
            x_pred,
            x_gt,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Probability-weighted L1 over coordinates: `sum_j p_j |x_j - x_gt_j|`.
pub fn dfl_loss<T: Real>(batch: &DflBatch<T>) -> T {
    (0..batch.len())
        .map(|i| batch.weights[i] * (batch.x_pred[i] - batch.x_gt[i]).abs())
        .sum()
}

/// Weighted sum of the three components.
pub fn total_loss<T: Real>(box_l: T, cls_l: T, dfl_l: T, w: &LossWeights<T>) -> T {
    w.lambda_box * box_l + w.lambda_cls * cls_l + w.lambda_dfl * dfl_l
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bx(x0: f64, y0: f64, x1: f64, y1: f64) -> BBox<f64> {
        BBox::new(x0, y0, x1, y1).unwrap()
    }

    /// Term-by-term scalar oracle for the CIoU loss, written independently
    /// of `box_loss`.
    fn ciou_oracle(p: (f64, f64, f64, f64), g: (f64, f64, f64, f64)) -> f64 {
        let inter_w = (p.2.min(g.2) - p.0.max(g.0)).max(0.0);
        let inter_h = (p.3.min(g.3) - p.1.max(g.1)).max(0.0);
        let inter = inter_w * inter_h;
        let area_p = (p.2 - p.0) * (p.3 - p.1);
        let area_g = (g.2 - g.0) * (g.3 - g.1);
        let iou = inter / (area_p + area_g - inter);

        let pc = ((p.0 + p.2) / 2.0, (p.1 + p.3) / 2.0);
        let gc = ((g.0 + g.2) / 2.0, (g.1 + g.3) / 2.0);
        let rho2 = (pc.0 - gc.0).powi(2) + (pc.1 - gc.1).powi(2);

        let cw = p.2.max(g.2) - p.0.min(g.0);
        let ch = p.3.max(g.3) - p.1.min(g.1);
        let c2 = cw * cw + ch * ch;

        let w_p = p.2 - p.0;
        let h_p = p.3 - p.1;
        let w_g = g.2 - g.0;
        let h_g = g.3 - g.1;
        let v = 4.0 / std::f64::consts::PI.powi(2)
            * ((w_g / h_g).atan() - (w_p / h_p).atan()).powi(2);
        let alpha_v = if v == 0.0 { 0.0 } else { v / ((1.0 - iou) + v) * v };

        1.0 - iou + rho2 / c2 + alpha_v
    }

    #[test]
    fn box_loss_identity_is_zero() {
        let a = bx(0.0, 0.0, 2.0, 2.0);
        assert_eq!(box_loss(&a, &a), 0.0);
    }

    #[test]
    fn box_loss_worked_value_same_shape_disjoint() {
        // IoU 0, v 0, rho 4, c = sqrt(40): 1 + 16/40 = 1.4
        let pred = bx(0.0, 0.0, 2.0, 2.0);
        let gt = bx(4.0, 0.0, 6.0, 2.0);
        assert!((box_loss(&pred, &gt) - 1.4).abs() < 1e-12);
    }

    #[test]
    fn box_loss_aspect_term_matches_oracle() {
        let pred = bx(0.0, 0.0, 4.0, 1.0);
        let gt = bx(0.0, 0.0, 1.0, 4.0);
        let got = box_loss(&pred, &gt);
        let want = ciou_oracle((0.0, 0.0, 4.0, 1.0), (0.0, 0.0, 1.0, 4.0));
        assert!((got - want).abs() < 1e-12, "got {got}, oracle {want}");
        // aspect term is active here
        assert!(got > 1.0 - 1.0 / 7.0 + 4.5 / 32.0);
    }

    #[test]
    fn box_loss_finite_difference_consistency() {
        // central differences at two step sizes agree away from contact
        let gt = (2.0, 1.5, 5.0, 4.0);
        let pred = (1.0, 1.0, 4.0, 3.0);
        let eval = |p: (f64, f64, f64, f64)| {
            box_loss(&bx(p.0, p.1, p.2, p.3), &bx(gt.0, gt.1, gt.2, gt.3))
        };
        for coord in 0..4 {
            let mut diff = [0.0f64; 2];
            for (si, step) in [1e-3, 1e-4].iter().enumerate() {
                let mut hi = pred;
                let mut lo = pred;
                match coord {
                    0 => {
                        hi.0 += step;
                        lo.0 -= step;
                    }
                    1 => {
                        hi.1 += step;
                        lo.1 -= step;
                    }
                    2 => {
                        hi.2 += step;
                        lo.2 -= step;
                    }
                    _ => {
                        hi.3 += step;
                        lo.3 -= step;
                    }
                }
                diff[si] = (eval(hi) - eval(lo)) / (2.0 * step);
                assert!(diff[si].is_finite());
            }
            assert!(
                diff[0].abs() > 1e-6,
                "degenerate fixture: derivative ~0 for coord {coord}"
            );
            let ratio = diff[0] / diff[1];
            assert!(
                (ratio - 1.0).abs() < 0.05,
                "coord {coord}: steps disagree, ratio {ratio}"
            );
        }
    }

    #[test]
    fn cls_loss_examples() {
        let confident = ClsBatch::<f64>::new(vec![true], vec![1.0 - 1e-7], vec![1.0]).unwrap();
        assert!(cls_loss(&confident) < 2e-7);

        let weighted_pos = ClsBatch::<f64>::new(vec![true], vec![0.5], vec![2.0]).unwrap();
        assert!((cls_loss(&weighted_pos) - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);

        // weight is not applied to the negative term
        let neg = ClsBatch::<f64>::new(vec![false], vec![0.5], vec![5.0]).unwrap();
        assert!((cls_loss(&neg) - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn cls_empty_batch_is_zero() {
        let empty = ClsBatch::<f64>::new(vec![], vec![], vec![]).unwrap();
        assert_eq!(cls_loss(&empty), 0.0);
    }

    #[test]
    fn cls_clamp_keeps_loss_finite() {
        let b = ClsBatch::<f64>::new(vec![true, false], vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        let l = cls_loss(&b);
        assert!(l.is_finite() && l > 0.0);
    }

    #[test]
    fn cls_batch_rejects_mismatch_and_bad_weights() {
        assert!(matches!(
            ClsBatch::new(vec![true], vec![0.5, 0.5], vec![1.0]),
            Err(LossError::LengthMismatch(_))
        ));
        assert!(matches!(
            ClsBatch::new(vec![true], vec![0.5], vec![0.0]),
            Err(LossError::NonPositiveWeight(0))
        ));
    }

    #[test]
    fn dfl_loss_examples() {
        let zero = DflBatch::new(vec![1.0, 1.0], vec![3.0, -2.0], vec![3.0, -2.0]).unwrap();
        assert_eq!(dfl_loss(&zero), 0.0);

        let simple = DflBatch::new(vec![1.0, 1.0], vec![0.0, 3.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(dfl_loss(&simple), 3.0);

        // zero-weight term is inert
        let weighted = DflBatch::new(vec![0.5, 0.0, 2.0], vec![2.0, 9.0, 1.0], vec![0.0, 0.0, 1.0])
            .unwrap();
        assert_eq!(dfl_loss(&weighted), 1.0);
    }

    #[test]
    fn dfl_batch_rejects_mismatch() {
        assert!(matches!(
            DflBatch::new(vec![1.0], vec![1.0, 2.0], vec![1.0]),
            Err(LossError::LengthMismatch(_))
        ));
    }

    #[test]
    fn total_loss_examples() {
        let unit = LossWeights::new(1.0, 1.0, 1.0).unwrap();
        assert_eq!(total_loss(0.2, 0.3, 0.5, &unit), 1.0);

        let zero = LossWeights::new(0.0, 0.0, 0.0).unwrap();
        assert_eq!(total_loss(9.0, 3.0, 7.5, &zero), 0.0);

        let defaults = LossWeights::<f64>::default();
        assert!((total_loss(0.1, 0.2, 0.3, &defaults) - 1.3).abs() < 1e-12);
    }

    #[test]
    fn monotone_approach_for_disjoint_same_shape() {
        // slide pred's center linearly toward gt's center; loss must strictly drop
        let gt = bx(10.0, 0.0, 12.0, 2.0);
        let mut prev = f64::INFINITY;
        for step in 0..20 {
            let x0 = 0.0 + step as f64 * 0.3; // stays disjoint: x0 + 2 <= 7.7 + 2 < 10
            let pred = bx(x0, 0.0, x0 + 2.0, 2.0);
            let l = box_loss(&pred, &gt);
            assert!(l < prev, "loss not decreasing at step {step}");
            prev = l;
        }
    }

    proptest! {
        #[test]
        fn box_loss_translation_and_scale_invariant(
            ax in 0.0..20.0f64, ay in 0.0..20.0f64, aw in 0.2..10.0f64, ah in 0.2..10.0f64,
            gx in 0.0..20.0f64, gy in 0.0..20.0f64, gw in 0.2..10.0f64, gh in 0.2..10.0f64,
            tx in -50.0..50.0f64, ty in -50.0..50.0f64, s in 0.1..10.0f64,
        ) {
            let p = bx(ax, ay, ax + aw, ay + ah);
            let g = bx(gx, gy, gx + gw, gy + gh);
            let base = box_loss(&p, &g);

            let pt = bx(ax + tx, ay + ty, ax + aw + tx, ay + ah + ty);
            let gt_ = bx(gx + tx, gy + ty, gx + gw + tx, gy + gh + ty);
            prop_assert!((box_loss(&pt, &gt_) - base).abs() < 1e-9);

            let ps = bx(ax * s, ay * s, (ax + aw) * s, (ay + ah) * s);
            let gs = bx(gx * s, gy * s, (gx + gw) * s, (gy + gh) * s);
            prop_assert!((box_loss(&ps, &gs) - base).abs() < 1e-9);
        }

        #[test]
        fn box_loss_positive_unless_identical(
            ax in 0.0..20.0f64, ay in 0.0..20.0f64, aw in 0.2..10.0f64, ah in 0.2..10.0f64,
            dx in 0.01..5.0f64,
        ) {
            let p = bx(ax, ay, ax + aw, ay + ah);
            let g = bx(ax + dx, ay, ax + aw + dx, ay + ah);
            let l = box_loss(&p, &g);
            prop_assert!(l > 0.0 && l < 3.0);
            prop_assert_eq!(box_loss(&p, &p), 0.0);
        }

        #[test]
        fn cls_and_dfl_additive_over_concatenation(
            y in proptest::collection::vec(any::<bool>(), 1..8),
            seed in 0u64..1000,
        ) {
            let n = y.len();
            let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(13);
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64
            };
            let p: Vec<f64> = (0..n).map(|_| 0.05 + 0.9 * next()).collect();
            let w: Vec<f64> = (0..n).map(|_| 0.5 + next()).collect();
            let xp: Vec<f64> = (0..n).map(|_| next() * 10.0).collect();
            let xg: Vec<f64> = (0..n).map(|_| next() * 10.0).collect();

            let whole = ClsBatch::new(y.clone(), p.clone(), w.clone()).unwrap();
            let split = n / 2;
            let left = ClsBatch::new(y[..split].to_vec(), p[..split].to_vec(), w[..split].to_vec()).unwrap();
            let right = ClsBatch::new(y[split..].to_vec(), p[split..].to_vec(), w[split..].to_vec()).unwrap();
            prop_assert!((cls_loss(&whole) - (cls_loss(&left) + cls_loss(&right))).abs() < 1e-9);

            let dwhole = DflBatch::new(w.clone(), xp.clone(), xg.clone()).unwrap();
            let dleft = DflBatch::new(w[..split].to_vec(), xp[..split].to_vec(), xg[..split].to_vec()).unwrap();
            let dright = DflBatch::new(w[split..].to_vec(), xp[split..].to_vec(), xg[split..].to_vec()).unwrap();
            prop_assert!((dfl_loss(&dwhole) - (dfl_loss(&dleft) + dfl_loss(&dright))).abs() < 1e-9);
        }
    }
}
