mod common;

use proptest::prelude::*;
use rand::Rng;

use ripflow::frame_io::{BinaryMask, Frame, Hsv, MaskKind};
use ripflow::grid::Grid;
use ripflow::segmentation::{combined_mask, shore_mask, wave_mask, ShoreSource, ShoreThresholds, WaveThresholds};

fn random_hsv(rng: &mut impl Rng, w: usize, h: usize) -> Grid<Hsv> {
    Grid::from_fn(w, h, |_, _| Hsv {
        h: rng.random_range(0.0..360.0),
        s: rng.random_range(0.0..1.0),
        v: rng.random_range(0.0..1.0),
    })
}

#[test]
fn sand_and_sea_are_separated() {
    let (w, h) = (64, 48);
    let mut rng = common::rng(2);
    let rgb = Grid::from_fn(w, h, |_, y| {
        let jitter = |c: f64, rng: &mut rand_chacha::ChaCha8Rng| (c + rng.random_range(-0.03..0.03)).clamp(0.0, 1.0);
        if y >= 30 {
            [jitter(0.82, &mut rng), jitter(0.72, &mut rng), jitter(0.52, &mut rng)]
        } else {
            [jitter(0.08, &mut rng), jitter(0.30, &mut rng), jitter(0.58, &mut rng)]
        }
    });
    let frame = Frame::from_rgb(&rgb);
    let m = shore_mask(&frame, &ShoreSource::Threshold(ShoreThresholds::default())).unwrap();
    assert_eq!(m.kind, MaskKind::Shore);
    let (mut sand_ok, mut sea_ok) = (0, 0);
    for y in 0..h {
        for x in 0..w {
            match (y >= 30, m.get(x, y)) {
                (true, true) => sand_ok += 1,
                (false, false) => sea_ok += 1,
                _ => {}
            }
        }
    }
    let sand_frac = sand_ok as f64 / (18 * w) as f64;
    let sea_frac = sea_ok as f64 / (30 * w) as f64;
    assert!(sand_frac >= 0.95 && sea_frac >= 0.95, "sand {sand_frac}, sea {sea_frac}");
}

#[test]
fn textured_gray_region_is_shore() {
    let (w, h) = (40, 40);
    let mut rng = common::rng(3);
    let gray = Grid::from_fn(w, h, |_, y| if y < 20 { 0.4 } else if rng.random_bool(0.5) { 0.0 } else { 1.0 });
    let m = shore_mask(&Frame::from_gray(gray), &ShoreSource::Threshold(ShoreThresholds::default())).unwrap();
    for x in 0..w {
        assert!(!m.get(x, 5) && m.get(x, 30));
    }
}

#[test]
fn foam_mask_matches_box_oracle() {
    let mut rng = common::rng(4);
    let color = random_hsv(&mut rng, 50, 40);
    let t = WaveThresholds { s_max: 0.3, v_min: 0.6 };
    let m = wave_mask(&Frame::from_hsv(color.clone()), &t).unwrap();
    assert_eq!(m.kind, MaskKind::Wave);
    for y in 0..40 {
        for x in 0..50 {
            let c = color.get(x, y);
            assert_eq!(m.get(x, y), c.s <= 0.3 && c.v >= 0.6);
        }
    }
    assert!(m.any() && !m.all());
}

#[test]
fn external_shore_mask_is_loaded_and_checked() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("shore.png");
    let bits = Grid::from_fn(12, 9, |x, y| x + y > 10);
    ripflow::frame_io::save_bool_png(&bits, &p).unwrap();
    let f = Frame::from_gray(Grid::new(12, 9));
    let m = shore_mask(&f, &ShoreSource::External(p.clone())).unwrap();
    assert_eq!(m.bits, bits);
    let wrong = Frame::from_gray(Grid::new(12, 8));
    assert!(shore_mask(&wrong, &ShoreSource::External(p)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hue_does_not_affect_foam(seed in any::<u64>(), shift in 0.0f64..360.0) {
        let mut rng = common::rng(seed);
        let color = random_hsv(&mut rng, 12, 10);
        let rotated = color.map(|c| Hsv { h: (c.h + shift) % 360.0, ..*c });
        let t = WaveThresholds::default();
        let a = wave_mask(&Frame::from_hsv(color), &t).unwrap();
        let b = wave_mask(&Frame::from_hsv(rotated), &t).unwrap();
        prop_assert_eq!(a.bits, b.bits);
    }

    #[test]
    fn union_is_smallest_superset(w in 1usize..20, h in 1usize..20, seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let a = BinaryMask::new(common::random_mask(&mut rng, w, h, 0.3), MaskKind::Shore);
        let b = BinaryMask::new(common::random_mask(&mut rng, w, h, 0.3), MaskKind::Wave);
        let c = combined_mask(&a, &b).unwrap();
        prop_assert_eq!(c.kind, MaskKind::Combined);
        for y in 0..h {
            for x in 0..w {
                prop_assert!(!a.get(x, y) || c.get(x, y));
                prop_assert!(!b.get(x, y) || c.get(x, y));
                prop_assert!(!c.get(x, y) || a.get(x, y) || b.get(x, y));
            }
        }
        prop_assert_eq!(combined_mask(&b, &a).unwrap().bits, c.bits.clone());
        prop_assert_eq!(combined_mask(&c, &a).unwrap().bits, c.bits);
    }
}
