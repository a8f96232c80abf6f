mod common;

use proptest::prelude::*;
use rand::Rng;

use ripflow::detect::LikelihoodMatrix;
use ripflow::eval::{mask_iou_f1, pr_curve, precision_recall, threshold_region, write_pr_csv};
use ripflow::frame_io::{BinaryMask, MaskKind};
use ripflow::grid::Grid;
use ripflow::Error;

fn random_lik(rng: &mut rand_chacha::ChaCha8Rng, w: usize, h: usize, t: u32) -> LikelihoodMatrix {
    LikelihoodMatrix::from_counts(Grid::from_fn(w, h, |_, _| rng.random_range(0..=t)), t).unwrap()
}

fn truth_mask(bits: Grid<bool>) -> BinaryMask {
    BinaryMask::new(bits, MaskKind::GroundTruth)
}

#[test]
fn threshold_region_matches_loop() {
    let mut rng = common::rng(1);
    let lik = random_lik(&mut rng, 13, 11, 7);
    for a in 0..=8 {
        let r = threshold_region(&lik, a);
        for y in 0..11 {
            for x in 0..13 {
                assert_eq!(r.get(x, y), *lik.counts.get(x, y) >= a);
            }
        }
    }
    assert!(threshold_region(&lik, 0).all());
    assert!(!threshold_region(&lik, 8).any());
}

#[test]
fn curve_points_match_counting_oracle() {
    let mut rng = common::rng(2);
    for _ in 0..30 {
        let t = rng.random_range(1..25);
        let lik = random_lik(&mut rng, 16, 12, t);
        let truth = common::random_mask(&mut rng, 16, 12, 0.3);
        if !truth.iter().any(|b| *b) {
            continue;
        }
        let curve = pr_curve(&lik, &truth_mask(truth.clone())).unwrap();
        for p in &curve.points {
            let region = lik.counts.map(|c| *c >= p.threshold);
            let (prec, rec) = common::count_pr(&region, &truth);
            assert_eq!((p.precision, p.recall), (prec, rec), "a = {}", p.threshold);
            assert_eq!(p.region_size, region.iter().filter(|b| **b).count());
        }
        assert!(curve.points.iter().any(|p| p.threshold == t + 1 && p.region_size == 0));
        assert!((curve.auc - common::sweep_auc(&lik.counts, t, &truth)).abs() < 1e-12);
    }
}

#[test]
fn recall_is_monotone_in_threshold() {
    let mut rng = common::rng(3);
    let lik = random_lik(&mut rng, 20, 20, 20);
    let truth = truth_mask(common::random_mask(&mut rng, 20, 20, 0.4));
    let mut prev = f64::INFINITY;
    for a in 0..=21 {
        let (_, r) = precision_recall(&threshold_region(&lik, a), &truth).unwrap();
        assert!(r <= prev);
        prev = r;
    }
}

#[test]
fn perfect_separation_scores_one() {
    let truth = Grid::from_fn(10, 10, |x, _| x < 4);
    let lik = LikelihoodMatrix::from_counts(truth.map(|b| if *b { 20 } else { 3 }), 20).unwrap();
    let curve = pr_curve(&lik, &truth_mask(truth)).unwrap();
    assert_eq!(curve.auc, 1.0);
}

#[test]
fn empty_truth_is_an_error() {
    let lik = LikelihoodMatrix::new(4, 4);
    let empty = BinaryMask::filled(4, 4, false, MaskKind::GroundTruth);
    assert!(matches!(pr_curve(&lik, &empty), Err(Error::UndefinedGroundTruth(_))));
    assert!(matches!(
        precision_recall(&threshold_region(&lik, 0), &empty),
        Err(Error::UndefinedGroundTruth(_))
    ));
    let wrong = BinaryMask::filled(4, 5, true, MaskKind::GroundTruth);
    assert!(matches!(pr_curve(&lik, &wrong), Err(Error::Dimension(_))));
}

#[test]
fn iou_and_f1_match_hand_counts() {
    let pred = BinaryMask::new(Grid::from_fn(4, 1, |x, _| x < 3), MaskKind::Region);
    let truth = truth_mask(Grid::from_fn(4, 1, |x, _| x >= 1));
    let (iou, f1) = mask_iou_f1(&pred, &truth).unwrap();
    assert_eq!((iou, f1), (0.5, 2.0 / 3.0));
    let none = BinaryMask::filled(4, 1, false, MaskKind::Region);
    assert_eq!(mask_iou_f1(&none, &none).unwrap(), (1.0, 1.0));
}

#[test]
fn csv_lists_every_point() {
    let mut rng = common::rng(4);
    let lik = random_lik(&mut rng, 8, 8, 5);
    let truth = truth_mask(Grid::from_fn(8, 8, |x, _| x < 3));
    let curve = pr_curve(&lik, &truth).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pr.csv");
    write_pr_csv(&curve, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("a,precision,recall,region_size"));
    assert_eq!(lines.count(), curve.points.len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integer_rescaling_preserves_the_curve(seed in any::<u64>(), c in 1u32..6) {
        let mut rng = common::rng(seed);
        let t = rng.random_range(1..15);
        let lik = random_lik(&mut rng, 9, 7, t);
        let mut truth = common::random_mask(&mut rng, 9, 7, 0.4);
        truth.set(0, 0, true);
        let scaled = LikelihoodMatrix::from_counts(lik.counts.map(|v| v * c), t * c).unwrap();
        let a = pr_curve(&lik, &truth_mask(truth.clone())).unwrap();
        let b = pr_curve(&scaled, &truth_mask(truth)).unwrap();
        prop_assert_eq!(a.auc, b.auc);
        let pr = |cv: &ripflow::eval::PrCurve| cv.operating_points().map(|p| (p.precision, p.recall)).collect::<Vec<_>>();
        prop_assert_eq!(pr(&a), pr(&b));
    }

    #[test]
    fn iou_and_f1_are_symmetric_and_bounded(seed in any::<u64>(), w in 1usize..12, h in 1usize..12) {
        let mut rng = common::rng(seed);
        let a = BinaryMask::new(common::random_mask(&mut rng, w, h, 0.5), MaskKind::Region);
        let b = BinaryMask::new(common::random_mask(&mut rng, w, h, 0.5), MaskKind::GroundTruth);
        let (i1, f1) = mask_iou_f1(&a, &b).unwrap();
        let (i2, f2) = mask_iou_f1(&b, &a).unwrap();
        prop_assert_eq!((i1, f1), (i2, f2));
        prop_assert!((0.0..=1.0).contains(&i1) && i1 <= f1 && f1 <= 1.0);
    }

    #[test]
    fn auc_is_a_probability(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let lik = random_lik(&mut rng, 10, 10, 12);
        let mut truth = common::random_mask(&mut rng, 10, 10, 0.2);
        truth.set(3, 3, true);
        let curve = pr_curve(&lik, &truth_mask(truth)).unwrap();
        prop_assert!((0.0..=1.0).contains(&curve.auc));
    }
}
