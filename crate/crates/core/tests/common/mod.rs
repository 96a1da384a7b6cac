//! Brute-force reference implementations. Each one follows the textbook
//! definition directly and shares no code path with the library.

#![allow(dead_code)]

use labseg::{BinaryMask, Connectivity, GrayMap};
use rand::Rng;

pub fn offsets(conn: Connectivity) -> Vec<(isize, isize)> {
    let mut v = Vec::new();
    for dy in -1..=1isize {
        for dx in -1..=1isize {
            if (dx, dy) == (0, 0) {
                continue;
            }
            if conn == Connectivity::Four && dx != 0 && dy != 0 {
                continue;
            }
            v.push((dx, dy));
        }
    }
    v
}

pub fn adjacent(w: usize, h: usize, p: usize, conn: Connectivity) -> Vec<usize> {
    let (x, y) = ((p % w) as isize, (p / w) as isize);
    offsets(conn)
        .into_iter()
        .filter_map(|(dx, dy)| {
            let (nx, ny) = (x + dx, y + dy);
            (nx >= 0 && ny >= 0 && nx < w as isize && ny < h as isize).then(|| ny as usize * w + nx as usize)
        })
        .collect()
}

/// Optimal squared-Euclidean K-means objective and sorted centroids over
/// every assignment of `points` (1-D) to `k` non-empty clusters.
pub fn kmeans_exhaustive_1d(points: &[f64], k: usize) -> (f64, Vec<f64>, usize) {
    let n = points.len();
    let total = k.pow(n as u32);
    let mut best = f64::INFINITY;
    let mut best_centroids = Vec::new();
    let mut optimal_partitions = 0;
    for code in 0..total {
        let mut labels = vec![0; n];
        let mut c = code;
        for l in labels.iter_mut() {
            *l = c % k;
            c /= k;
        }
        let mut members = vec![Vec::new(); k];
        for (i, &l) in labels.iter().enumerate() {
            members[l].push(points[i]);
        }
        if members.iter().any(|m| m.is_empty()) {
            continue;
        }
        let centroids: Vec<f64> = members.iter().map(|m| m.iter().sum::<f64>() / m.len() as f64).collect();
        let j: f64 = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| (points[i] - centroids[l]).powi(2))
            .sum();
        if j < best - 1e-12 {
            best = j;
            let mut c = centroids.clone();
            c.sort_by(f64::total_cmp);
            best_centroids = c;
            optimal_partitions = 1;
        } else if (j - best).abs() <= 1e-12 {
            optimal_partitions += 1;
        }
    }
    // each partition is counted k! times (label permutations)
    let fact: usize = (1..=k).product();
    (best, best_centroids, optimal_partitions / fact)
}

/// Convolution by the definition, with the image explicitly padded by
/// replication first.
pub fn convolve_reference(img: &GrayMap, k: &[f64; 9]) -> GrayMap {
    let (w, h) = (img.width(), img.height());
    let pw = w + 2;
    let mut padded = vec![0.0; pw * (h + 2)];
    for py in 0..h + 2 {
        for px in 0..pw {
            let sx = (px as isize - 1).clamp(0, w as isize - 1) as usize;
            let sy = (py as isize - 1).clamp(0, h as isize - 1) as usize;
            padded[py * pw + px] = img.get(sx, sy);
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for j in 0..3 {
                for i in 0..3 {
                    // padded (x+1, y+1) is image (x, y); tap at offset (1-i, 1-j)
                    acc += k[j * 3 + i] * padded[(y + 2 - j) * pw + (x + 2 - i)];
                }
            }
            out[y * w + x] = acc;
        }
    }
    GrayMap::new(w, h, out).unwrap()
}

/// Reconstruction by dilation as repeated elementary geodesic dilation until
/// nothing changes.
pub fn reconstruct_dilation_reference(marker: &GrayMap, mask: &GrayMap, conn: Connectivity) -> GrayMap {
    let (w, h) = (mask.width(), mask.height());
    let mut cur = marker.data().to_vec();
    loop {
        let mut next = cur.clone();
        for p in 0..cur.len() {
            let mut v = cur[p];
            for q in adjacent(w, h, p, conn) {
                v = v.max(cur[q]);
            }
            next[p] = v.min(mask.data()[p]);
        }
        if next == cur {
            return GrayMap::new(w, h, cur).unwrap();
        }
        cur = next;
    }
}

/// Plateau-by-plateau check: flood each plateau and compare it against every
/// pixel touching it.
pub fn regional_minima_reference(img: &GrayMap, conn: Connectivity) -> Vec<bool> {
    let (w, h) = (img.width(), img.height());
    let v = img.data();
    let mut out = vec![false; v.len()];
    for start in 0..v.len() {
        let mut plateau = vec![start];
        let mut inside = vec![false; v.len()];
        inside[start] = true;
        let mut i = 0;
        while i < plateau.len() {
            for q in adjacent(w, h, plateau[i], conn) {
                if !inside[q] && v[q] == v[start] {
                    inside[q] = true;
                    plateau.push(q);
                }
            }
            i += 1;
        }
        let strictly_lowest = plateau
            .iter()
            .flat_map(|&p| adjacent(w, h, p, conn))
            .filter(|&q| !inside[q])
            .all(|q| v[q] > v[start]);
        out[start] = strictly_lowest;
    }
    out
}

/// Squared distance to the nearest `false` pixel by scanning all of them.
pub fn squared_edt_reference(mask: &BinaryMask) -> Vec<u64> {
    let (w, h) = (mask.width(), mask.height());
    let features: Vec<(i64, i64)> = (0..w * h)
        .filter(|&p| !mask.data()[p])
        .map(|p| ((p % w) as i64, (p / w) as i64))
        .collect();
    (0..w * h)
        .map(|p| {
            let (x, y) = ((p % w) as i64, (p / w) as i64);
            features
                .iter()
                .map(|&(fx, fy)| ((x - fx).pow(2) + (y - fy).pow(2)) as u64)
                .min()
                .unwrap()
        })
        .collect()
}

/// Otsu by exhaustive scan: for each split, compute the within-class
/// variance from the class members directly and maximize
/// `total variance - within-class variance`. Ties within a relative 1e-9 go
/// to the smaller split.
pub fn otsu_reference(counts: &[u64]) -> Option<usize> {
    let n: u64 = counts.iter().sum();
    let stats = |range: std::ops::Range<usize>| {
        let w: u64 = counts[range.clone()].iter().sum();
        if w == 0 {
            return None;
        }
        let mean = range.clone().map(|i| i as f64 * counts[i] as f64).sum::<f64>() / w as f64;
        let var = range.map(|i| counts[i] as f64 * (i as f64 - mean).powi(2)).sum::<f64>() / w as f64;
        Some((w as f64 / n as f64, var))
    };
    let (_, total_var) = stats(0..counts.len())?;
    let scores: Vec<Option<f64>> = (0..counts.len() - 1)
        .map(|t| {
            let (w0, v0) = stats(0..t + 1)?;
            let (w1, v1) = stats(t + 1..counts.len())?;
            Some(total_var - (w0 * v0 + w1 * v1))
        })
        .collect();
    let best = scores.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    if !best.is_finite() {
        return None;
    }
    scores.iter().position(|s| s.is_some_and(|s| s >= best - 1e-9 * best.abs()))
}

/// Marker flooding simulated by raising the water level one relief value at
/// a time. Inside a level, the lowest reachable dry pixel is flooded next.
/// A marker starts feeding water once the level reaches its own relief; it
/// counts as a labeled neighbor from the start. A flooded pixel touching two
/// different labels becomes a ridge (0) and feeds nothing.
pub fn immersion_reference(relief: &GrayMap, markers: &[u32], conn: Connectivity) -> Vec<u32> {
    let (w, h) = (relief.width(), relief.height());
    let v = relief.data();
    let n = v.len();
    let is_marker: Vec<bool> = markers.iter().map(|&l| l > 0).collect();
    let mut label = markers.to_vec();
    let mut wet = vec![false; n]; // marker activated or pixel flooded
    let mut levels = v.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();

    for &level in &levels {
        loop {
            let mut next: Option<usize> = None;
            for p in 0..n {
                if wet[p] || v[p] > level {
                    continue;
                }
                let reachable = is_marker[p]
                    || adjacent(w, h, p, conn)
                        .into_iter()
                        .any(|q| wet[q] && label[q] > 0);
                if reachable && next.is_none_or(|b| v[p] < v[b]) {
                    next = Some(p);
                }
            }
            let Some(p) = next else { break };
            wet[p] = true;
            if is_marker[p] {
                continue;
            }
            let mut seen: Vec<u32> = adjacent(w, h, p, conn)
                .into_iter()
                .filter(|&q| (is_marker[q] || wet[q]) && label[q] > 0)
                .map(|q| label[q])
                .collect();
            seen.sort_unstable();
            seen.dedup();
            label[p] = if seen.len() == 1 { seen[0] } else { 0 };
        }
    }
    for p in 0..n {
        if !wet[p] && !is_marker[p] {
            label[p] = 0;
        }
    }
    label
}

/// Relief with all-distinct values: a random permutation of `0..w*h`.
pub fn distinct_relief(rng: &mut impl Rng, w: usize, h: usize) -> GrayMap {
    let mut vals: Vec<f64> = (0..w * h).map(|i| i as f64).collect();
    for i in (1..vals.len()).rev() {
        let j = rng.random_range(0..=i);
        vals.swap(i, j);
    }
    GrayMap::new(w, h, vals).unwrap()
}

/// `count` distinct pixels, none adjacent to another under `conn`.
pub fn scattered_markers(rng: &mut impl Rng, w: usize, h: usize, count: usize, conn: Connectivity) -> Vec<u32> {
    let mut m = vec![0u32; w * h];
    let mut placed = 0;
    while placed < count {
        let p = rng.random_range(0..w * h);
        if m[p] != 0 || adjacent(w, h, p, conn).iter().any(|&q| m[q] != 0) {
            continue;
        }
        placed += 1;
        m[p] = placed as u32;
    }
    m
}

/// Fraction of pixels whose predicted cluster matches the truth under the
/// best relabeling of the predicted clusters.
pub fn best_permutation_agreement(pred: &[usize], truth: &[usize], k: usize) -> f64 {
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = 0usize;
    permute(&mut perm, 0, &mut |p| {
        let hits = pred.iter().zip(truth).filter(|(&a, &t)| p[a] == t).count();
        best = best.max(hits);
    });
    best as f64 / pred.len() as f64
}

fn permute(v: &mut Vec<usize>, i: usize, f: &mut impl FnMut(&[usize])) {
    if i == v.len() {
        f(v);
        return;
    }
    for j in i..v.len() {
        v.swap(i, j);
        permute(v, i + 1, f);
        v.swap(i, j);
    }
}
