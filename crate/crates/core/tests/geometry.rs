mod common;

use proptest::prelude::*;
use rand::Rng;

use ripflow::frame_io::{BinaryMask, MaskKind};
use ripflow::geometry::{
    blend_weights, detect_coastline, detect_skyline, distance_matrix, global_offshore, local_offshore,
    offshore_from_shore, GeometryParams, Shoreline,
};
use ripflow::grid::Grid;
use ripflow::Error;

fn shore(w: usize, h: usize, f: impl FnMut(usize, usize) -> bool) -> BinaryMask {
    BinaryMask::new(Grid::from_fn(w, h, f), MaskKind::Shore)
}

fn line_shoreline(w: usize, row: usize) -> Shoreline {
    Shoreline::from_points((0..w).map(|x| (x, row)).collect(), w, row + 1).unwrap()
}

#[test]
fn quarter_circle_coastline_follows_the_arc() {
    let (w, h, r) = (80, 80, 50.0);
    let land = shore(w, h, |x, y| (x as f64).hypot((h - 1 - y) as f64) <= r);
    let p = GeometryParams::default();
    let line = detect_coastline(&land, p.gauss_sigma, p.canny_lo, p.canny_hi).unwrap();
    assert_eq!(line.points.len(), w);
    let mut checked = 0;
    for &(x, y) in line.detected_points() {
        let err = ((x as f64).hypot((h - 1 - y) as f64) - r).abs();
        assert!(err <= 1.5, "({x}, {y}) is {err} px off the arc");
        checked += 1;
    }
    assert!(checked >= 45, "only {checked} detected columns");
    assert!(line.filled_columns.iter().all(|&x| x as f64 > r - 2.0));
    assert!(line.closed_by_border);
}

#[test]
fn horizontal_line_distance_is_row_offset() {
    let (w, h, row) = (30, 25, 17);
    let line = Shoreline::from_points((0..w).map(|x| (x, row)).collect(), w, h).unwrap();
    let d = distance_matrix(&line, w, h).unwrap();
    for y in 0..h {
        for x in 0..w {
            assert_eq!(*d.s.get(x, y), (y as f64 - row as f64).abs());
        }
    }
}

#[test]
fn horizontal_coastline_is_detected_at_the_boundary() {
    let (w, h) = (40, 30);
    let land = shore(w, h, |_, y| y >= 20);
    let p = GeometryParams::default();
    let line = detect_coastline(&land, p.gauss_sigma, p.canny_lo, p.canny_hi).unwrap();
    assert!(line.filled_columns.is_empty());
    for &(_, y) in &line.points {
        assert!((19..=20).contains(&y), "row {y}");
    }
}

#[test]
fn tilted_skyline_rows_and_focal_point() {
    let (w, h) = (60, 50);
    let sky_row = |x: usize| 4 + x / 10;
    let mask = shore(w, h, |x, y| y < sky_row(x) || y >= 42);
    let sky = detect_skyline(&mask).expect("skyline");
    for x in 0..w {
        assert_eq!(sky.rows[x], Some(sky_row(x)));
    }
    assert_eq!(sky.focal, [30.0, sky_row(30) as f64]);
}

#[test]
fn narrow_top_band_is_not_a_skyline() {
    let mask = shore(60, 50, |x, y| (y < 5 && x < 20) || y >= 42);
    assert!(detect_skyline(&mask).is_none());
}

#[test]
fn point_shoreline_gives_radial_directions() {
    let (w, h) = (41, 41);
    let line = Shoreline::from_points(vec![(20, 20)], w, h).unwrap();
    let d = distance_matrix(&line, w, h).unwrap();
    let sea = BinaryMask::filled(w, h, true, MaskKind::Combined);
    let o = local_offshore(&d, &sea).unwrap();
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let (rx, ry) = (x as f64 - 20.0, y as f64 - 20.0);
            let r = rx.hypot(ry);
            if r < 4.0 {
                continue;
            }
            assert!(o.is_valid(x, y));
            let [ox, oy] = o.at(x, y);
            let dot = (ox * rx + oy * ry) / r;
            assert!(dot > 0.99, "({x}, {y}): {dot}");
        }
    }
}

#[test]
fn straight_shoreline_marches_offshore() {
    let (w, h) = (32, 24);
    let d = distance_matrix(&line_shoreline(w, 20), w, h).unwrap();
    let sea = BinaryMask::new(Grid::from_fn(w, h, |_, y| y < 20), MaskKind::Combined);
    let o = local_offshore(&d, &sea).unwrap();
    for y in 1..20 {
        for x in 0..w {
            assert_eq!(o.at(x, y), [0.0, -1.0]);
            // one step along O moves exactly one pixel further out
            let ny = (y as f64 + o.at(x, y)[1]) as usize;
            assert_eq!(d.s.get(x, ny) - d.s.get(x, y), 1.0);
        }
    }
}

#[test]
fn without_skyline_the_field_is_local() {
    let (w, h) = (48, 40);
    let mask = shore(w, h, |x, y| y as f64 >= 28.0 + 0.2 * x as f64);
    assert!(detect_skyline(&mask).is_none());
    let p = GeometryParams::default();
    let (field, line) = offshore_from_shore(&mask, &p).unwrap();
    assert!(field.local.is_none() && field.global.is_none() && field.focal.is_none());
    let d = distance_matrix(&line, w, h).unwrap();
    let local = local_offshore(&d, &mask.not(MaskKind::Combined)).unwrap();
    assert_eq!(field.dirs, local.dirs);
    assert_eq!(field.valid, local.valid);
}

#[test]
fn skyline_scene_keeps_both_components() {
    let mask = shore(60, 50, |_, y| !(8..40).contains(&y));
    let (field, _) = offshore_from_shore(&mask, &GeometryParams::default()).unwrap();
    assert!(field.local.is_some() && field.global.is_some());
    assert_eq!(field.focal, Some([30.0, 8.0]));
}

#[test]
fn uniform_masks_have_no_coastline() {
    let p = GeometryParams::default();
    for v in [false, true] {
        let m = BinaryMask::filled(10, 10, v, MaskKind::Shore);
        let err = detect_coastline(&m, p.gauss_sigma, p.canny_lo, p.canny_hi).unwrap_err();
        assert!(matches!(err, Error::NoCoastline(_)));
    }
}

#[test]
fn blend_weights_have_exact_endpoints() {
    assert_eq!(blend_weights(0.0, 10.0), (1.0, 0.0));
    assert_eq!(blend_weights(10.0, 10.0), (0.0, 1.0));
    assert_eq!(blend_weights(25.0, 10.0), (0.0, 1.0));
    let (g, r) = blend_weights(5.0, 10.0);
    assert_eq!((g, r), (0.75, 0.25));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn distance_matches_brute_force(w in 1usize..24, h in 1usize..24, n in 1usize..12, seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let pts: Vec<(usize, usize)> = (0..n).map(|_| (rng.random_range(0..w), rng.random_range(0..h))).collect();
        let d = distance_matrix(&Shoreline::from_points(pts.clone(), w, h).unwrap(), w, h).unwrap();
        let brute = common::brute_distance(&pts, w, h);
        for (a, b) in d.s.iter().zip(brute.iter()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn distance_is_one_lipschitz(w in 2usize..24, h in 2usize..24, n in 1usize..8, seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let pts: Vec<(usize, usize)> = (0..n).map(|_| (rng.random_range(0..w), rng.random_range(0..h))).collect();
        let d = distance_matrix(&Shoreline::from_points(pts, w, h).unwrap(), w, h).unwrap();
        for y in 0..h {
            for x in 0..w {
                for (dx, dy) in [(1usize, 0usize), (0, 1), (1, 1)] {
                    if x + dx < w && y + dy < h {
                        let step = ((dx * dx + dy * dy) as f64).sqrt();
                        prop_assert!((d.s.get(x + dx, y + dy) - d.s.get(x, y)).abs() <= step + 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn global_directions_point_at_the_focus(w in 2usize..30, h in 2usize..30, seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let focal = [rng.random_range(0.0..w as f64), rng.random_range(0.0..h as f64)];
        let sea = BinaryMask::new(common::random_mask(&mut rng, w, h, 0.7), MaskKind::Combined);
        let o = global_offshore(focal, w, h, &sea).unwrap();
        for y in 0..h {
            for x in 0..w {
                let (dx, dy) = (focal[0] - x as f64, focal[1] - y as f64);
                let n = dx.hypot(dy);
                if !sea.get(x, y) || n == 0.0 {
                    prop_assert!(!o.is_valid(x, y));
                    continue;
                }
                let [ox, oy] = o.at(x, y);
                prop_assert!((ox - dx / n).abs() < 1e-12 && (oy - dy / n).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn offshore_directions_are_unit(row in 10usize..30, tilt in -0.3f64..0.3, sky in any::<bool>()) {
        let (w, h) = (40usize, 40usize);
        let mask = shore(w, h, |x, y| (y as f64) >= row as f64 + tilt * x as f64 || (sky && y < 3));
        prop_assume!(mask.any() && !mask.all());
        let (field, _) = offshore_from_shore(&mask, &GeometryParams::default()).unwrap();
        for y in 0..h {
            for x in 0..w {
                if field.is_valid(x, y) {
                    prop_assert!(!mask.get(x, y));
                    let [a, b] = field.at(x, y);
                    prop_assert!((a.hypot(b) - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}
