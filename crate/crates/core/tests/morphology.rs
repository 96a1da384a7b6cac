mod common;

use labseg::morphology::{
    impose_minima, otsu_bin, otsu_binarize, otsu_threshold, reconstruct_by_dilation, reconstruct_by_erosion,
    regional_extrema, squared_distance_transform, Extremum, Histogram,
};
use labseg::raster::label_components;
use labseg::{BinaryMask, Connectivity, GrayMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CONNS: [Connectivity; 2] = [Connectivity::Four, Connectivity::Eight];

/// Small integer levels so plateaus actually occur.
fn levels_map(rng: &mut ChaCha8Rng, w: usize, h: usize, levels: u32) -> GrayMap {
    GrayMap::new(w, h, (0..w * h).map(|_| f64::from(rng.random_range(0..levels))).collect()).unwrap()
}

fn pair_under(rng: &mut ChaCha8Rng, w: usize, h: usize) -> (GrayMap, GrayMap) {
    let mask = levels_map(rng, w, h, 10);
    let marker = GrayMap::new(
        w,
        h,
        mask.data().iter().map(|&m| if rng.random_bool(0.2) { m } else { m - f64::from(rng.random_range(1..10u32)) }).collect(),
    )
    .unwrap();
    (marker, mask)
}

#[test]
fn dilation_reconstruction_matches_fixpoint_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..50 {
        for conn in CONNS {
            let (marker, mask) = pair_under(&mut rng, 9, 7);
            let fast = reconstruct_by_dilation(&marker, &mask, conn).unwrap();
            assert_eq!(fast, common::reconstruct_dilation_reference(&marker, &mask, conn));
            for i in 0..fast.len() {
                assert!(marker.data()[i] <= fast.data()[i] && fast.data()[i] <= mask.data()[i]);
            }
            assert_eq!(reconstruct_by_dilation(&fast, &mask, conn).unwrap(), fast);
        }
    }
}

#[test]
fn reconstruction_duality_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let (lo, hi) = pair_under(&mut rng, 8, 8);
        // erosion: marker above mask
        let marker = hi.map(|v| -v + 20.0);
        let mask = lo.map(|v| -v + 20.0);
        let (marker, mask) = (mask, marker);
        let e = reconstruct_by_erosion(&marker, &mask, Connectivity::Eight).unwrap();
        let d = reconstruct_by_dilation(&marker.map(|v| -v), &mask.map(|v| -v), Connectivity::Eight).unwrap();
        assert_eq!(e, d.map(|v| -v));
    }
}

#[test]
fn regional_minima_match_plateau_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        for conn in CONNS {
            let img = levels_map(&mut rng, 6, 6, 4);
            let fast = regional_extrema(&img, Extremum::Minima, conn);
            assert_eq!(fast.data(), common::regional_minima_reference(&img, conn).as_slice());
            let neg = regional_extrema(&img.map(|v| -v), Extremum::Maxima, conn);
            assert_eq!(neg, fast);
        }
    }
}

#[test]
fn imposed_minima_are_exactly_the_markers() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut checked = 0;
    while checked < 50 {
        let conn = CONNS[checked % 2];
        let img = if checked % 3 == 0 {
            levels_map(&mut rng, 10, 8, 6)
        } else {
            GrayMap::new(10, 8, (0..80).map(|_| rng.random_range(0.0..5.0)).collect()).unwrap()
        };
        let markers = BinaryMask::new(10, 8, (0..80).map(|_| rng.random_bool(0.08)).collect()).unwrap();
        if !markers.any() {
            continue;
        }
        let out = impose_minima(&img, &markers, conn).unwrap();
        let minima = regional_extrema(&out, Extremum::Minima, conn);
        assert_eq!(minima, markers);
        assert_eq!(label_components(&minima, conn).1, label_components(&markers, conn).1);
        checked += 1;
    }
}

#[test]
fn squared_edt_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut checked = 0;
    while checked < 100 {
        let p = rng.random_range(0.3..0.97);
        let mask = BinaryMask::new(8, 8, (0..64).map(|_| rng.random_bool(p)).collect()).unwrap();
        if mask.count() == 64 {
            continue;
        }
        assert_eq!(squared_distance_transform(&mask).unwrap(), common::squared_edt_reference(&mask));
        checked += 1;
    }
    // non-square shapes
    for (w, h) in [(1, 9), (9, 1), (13, 5)] {
        let mask = BinaryMask::new(w, h, (0..w * h).map(|i| i % 7 != 3).collect()).unwrap();
        assert_eq!(squared_distance_transform(&mask).unwrap(), common::squared_edt_reference(&mask));
    }
}

#[test]
fn otsu_matches_exhaustive_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..100 {
        let occupied = rng.random_range(2..=256);
        let mut counts = [0u64; 256];
        for _ in 0..occupied {
            counts[rng.random_range(0..256)] += rng.random_range(1..1000);
        }
        assert_eq!(otsu_bin(&counts), common::otsu_reference(&counts));
    }
}

#[test]
fn otsu_on_random_samples_matches_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..100 {
        let img = GrayMap::new(100, 1, (0..100).map(|_| rng.random_range(-20.0..300.0)).collect()).unwrap();
        let hist = Histogram::of(&img).unwrap();
        let t = common::otsu_reference(&hist.counts).unwrap();
        assert_eq!(otsu_threshold(&img).unwrap(), hist.upper_edge(t));
        let bw = otsu_binarize(&img).unwrap();
        let below = img.data().iter().zip(bw.data()).filter(|(_, &b)| !b).count() as u64;
        assert_eq!(below, hist.counts[..=t].iter().sum::<u64>());
    }
}
