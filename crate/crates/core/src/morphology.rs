//! Flat grayscale morphology and the binary tools used to build watershed
//! markers.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::raster::{label_components, neighbors, BinaryMask, Connectivity, GrayMap, ensure_same_shape};

/// Flat structuring element: a set of offsets around a center pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuringElement {
    offsets: Vec<(isize, isize)>,
}

impl StructuringElement {
    /// Euclidean disk, `dx² + dy² <= r²`.
    pub fn disk(radius: usize) -> Self {
        let r = radius as isize;
        let mut offsets = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                if dx * dx + dy * dy <= r * r {
                    offsets.push((dx, dy));
                }
            }
        }
        Self { offsets }
    }

    pub fn square(side: usize) -> Result<Self> {
        Self::from_mask(side, &vec![true; side * side])
    }

    /// Explicit row-major neighborhood with odd side length; the center must
    /// be set.
    pub fn from_mask(side: usize, mask: &[bool]) -> Result<Self> {
        if side.is_multiple_of(2) || mask.len() != side * side {
            return Err(Error::InvalidParameter(format!(
                "structuring element needs an odd side and side² entries (side {side}, {} entries)",
                mask.len()
            )));
        }
        let c = (side / 2) as isize;
        if !mask[side * side / 2] {
            return Err(Error::InvalidParameter("structuring element must contain its center".into()));
        }
        let offsets = mask
            .iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .map(|(i, _)| ((i % side) as isize - c, (i / side) as isize - c))
            .collect();
        Ok(Self { offsets })
    }

    pub fn offsets(&self) -> &[(isize, isize)] {
        &self.offsets
    }
}

fn rank_filter(img: &GrayMap, se: &StructuringElement, pick: fn(f64, f64) -> f64) -> GrayMap {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let src = img.data();
    let mut out = Vec::with_capacity(src.len());
    for y in 0..h {
        for x in 0..w {
            let mut acc = src[(y * w + x) as usize];
            for &(dx, dy) in se.offsets() {
                let sx = (x + dx).clamp(0, w - 1);
                let sy = (y + dy).clamp(0, h - 1);
                acc = pick(acc, src[(sy * w + sx) as usize]);
            }
            out.push(acc);
        }
    }
    GrayMap::from_shape(img, out)
}

/// Minimum over the neighborhood, replicate padding.
pub fn erode(img: &GrayMap, se: &StructuringElement) -> GrayMap {
    rank_filter(img, se, f64::min)
}

/// Maximum over the neighborhood, replicate padding.
pub fn dilate(img: &GrayMap, se: &StructuringElement) -> GrayMap {
    rank_filter(img, se, f64::max)
}

/// Direction of a geodesic reconstruction. Dilation grows values upward
/// under a ceiling, erosion grows them downward above a floor.
trait Growth {
    fn grow(a: f64, b: f64) -> f64;
    fn limit(a: f64, b: f64) -> f64;
    /// `a` can still be raised (dilation) or lowered (erosion) towards `b`.
    fn behind(a: f64, b: f64) -> bool;
}

struct Dilation;
struct Erosion;

impl Growth for Dilation {
    fn grow(a: f64, b: f64) -> f64 {
        a.max(b)
    }
    fn limit(a: f64, b: f64) -> f64 {
        a.min(b)
    }
    fn behind(a: f64, b: f64) -> bool {
        a < b
    }
}

impl Growth for Erosion {
    fn grow(a: f64, b: f64) -> f64 {
        a.min(b)
    }
    fn limit(a: f64, b: f64) -> f64 {
        a.max(b)
    }
    fn behind(a: f64, b: f64) -> bool {
        a > b
    }
}

/// Hybrid reconstruction: one raster sweep, one anti-raster sweep, then a
/// FIFO pass for whatever the sweeps could not settle.
fn reconstruct<G: Growth>(marker: &GrayMap, mask: &GrayMap, conn: Connectivity) -> GrayMap {
    let (w, h) = (mask.width(), mask.height());
    let lim = mask.data();
    let mut out = marker.data().to_vec();

    for p in 0..out.len() {
        let mut v = out[p];
        for q in neighbors(w, h, p, conn.causal()) {
            v = G::grow(v, out[q]);
        }
        out[p] = G::limit(v, lim[p]);
    }

    let mut queue = VecDeque::new();
    for p in (0..out.len()).rev() {
        let mut v = out[p];
        for q in neighbors(w, h, p, conn.anticausal()) {
            v = G::grow(v, out[q]);
        }
        out[p] = G::limit(v, lim[p]);
        let vp = out[p];
        if neighbors(w, h, p, conn.anticausal()).any(|q| G::behind(out[q], vp) && G::behind(out[q], lim[q])) {
            queue.push_back(p);
        }
    }

    while let Some(p) = queue.pop_front() {
        let vp = out[p];
        for q in neighbors(w, h, p, conn.offsets()) {
            if G::behind(out[q], vp) && out[q] != lim[q] {
                out[q] = G::limit(vp, lim[q]);
                queue.push_back(q);
            }
        }
    }
    GrayMap::from_shape(mask, out)
}

/// Morphological reconstruction by dilation of `marker` under `mask`.
pub fn reconstruct_by_dilation(marker: &GrayMap, mask: &GrayMap, conn: Connectivity) -> Result<GrayMap> {
    ensure_same_shape(marker, mask, "reconstruction")?;
    if let Some(p) = marker.data().iter().zip(mask.data()).position(|(m, l)| m > l) {
        return Err(Error::MarkerAboveMask(p));
    }
    Ok(reconstruct::<Dilation>(marker, mask, conn))
}

/// Morphological reconstruction by erosion of `marker` above `mask`.
pub fn reconstruct_by_erosion(marker: &GrayMap, mask: &GrayMap, conn: Connectivity) -> Result<GrayMap> {
    ensure_same_shape(marker, mask, "reconstruction")?;
    if let Some(p) = marker.data().iter().zip(mask.data()).position(|(m, l)| m < l) {
        return Err(Error::MarkerBelowMask(p));
    }
    Ok(reconstruct::<Erosion>(marker, mask, conn))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremum {
    Minima,
    Maxima,
}

/// Marks every plateau that is strictly below (minima) or above (maxima) all
/// pixels adjacent to it.
pub fn regional_extrema(img: &GrayMap, kind: Extremum, conn: Connectivity) -> BinaryMask {
    let (w, h) = (img.width(), img.height());
    let v = img.data();
    let mut seen = vec![false; v.len()];
    let mut out = vec![false; v.len()];
    let mut plateau = Vec::new();
    let mut stack = Vec::new();
    for start in 0..v.len() {
        if seen[start] {
            continue;
        }
        let level = v[start];
        let mut extremal = true;
        plateau.clear();
        seen[start] = true;
        stack.push(start);
        while let Some(p) = stack.pop() {
            plateau.push(p);
            for q in neighbors(w, h, p, conn.offsets()) {
                if v[q] == level {
                    if !seen[q] {
                        seen[q] = true;
                        stack.push(q);
                    }
                } else if match kind {
                    Extremum::Minima => v[q] < level,
                    Extremum::Maxima => v[q] > level,
                } {
                    extremal = false;
                }
            }
        }
        if extremal {
            for &p in &plateau {
                out[p] = true;
            }
        }
    }
    BinaryMask::from_shape(img, out)
}

/// Level offset used when imposing minima.
fn impose_offset(img: &GrayMap) -> f64 {
    let (lo, hi) = img.min_max();
    if img.data().iter().all(|v| v.fract() == 0.0) {
        1.0
    } else if hi > lo {
        (hi - lo) * 1e-6
    } else {
        1e-6
    }
}

/// Modifies `img` so that its regional minima are exactly the connected
/// components of `markers`.
///
/// Marker pixels are pushed to a floor below every other value; everything
/// else is raised by a small offset and then filled by reconstruction by
/// erosion so that no other basin survives.
pub fn impose_minima(img: &GrayMap, markers: &BinaryMask, conn: Connectivity) -> Result<GrayMap> {
    ensure_same_shape(img, markers, "impose_minima")?;
    if !markers.any() {
        return Err(Error::EmptyMarkers);
    }
    let delta = impose_offset(img);
    let (lo, hi) = img.min_max();
    let span = (hi - lo).max(1.0);
    let floor = lo - span;
    let ceiling = hi + delta + span;

    let fm: Vec<f64> = markers.data().iter().map(|&m| if m { floor } else { ceiling }).collect();
    let lowered: Vec<f64> = img
        .data()
        .iter()
        .zip(&fm)
        .map(|(&v, &f)| (v + delta).min(f))
        .collect();
    let fm = GrayMap::from_shape(img, fm);
    let lowered = GrayMap::from_shape(img, lowered);
    reconstruct_by_erosion(&fm, &lowered, conn)
}

const OTSU_BINS: usize = 256;

/// 256-bin histogram of the min-max normalized image, plus the range.
#[derive(Debug, Clone)]
pub struct Histogram {
    pub counts: [u64; OTSU_BINS],
    pub min: f64,
    pub max: f64,
}

impl Histogram {
    pub fn of(img: &GrayMap) -> Result<Self> {
        let (min, max) = img.min_max();
        if !(max > min) {
            return Err(Error::DegenerateHistogram);
        }
        let mut counts = [0u64; OTSU_BINS];
        for &v in img.data() {
            counts[bin_of(v, min, max)] += 1;
        }
        Ok(Self { counts, min, max })
    }

    /// Lower edge of bin `t + 1` in image units.
    pub fn upper_edge(&self, t: usize) -> f64 {
        self.min + (t + 1) as f64 * (self.max - self.min) / OTSU_BINS as f64
    }
}

#[inline]
fn bin_of(v: f64, min: f64, max: f64) -> usize {
    let t = (v - min) / (max - min);
    ((t * OTSU_BINS as f64).floor() as usize).min(OTSU_BINS - 1)
}

/// Relative slack under which two between-class variances count as tied.
pub const OTSU_TIE: f64 = 1e-12;

/// Bin index `t` maximizing the between-class variance of the split
/// `{0..=t} | {t+1..}`. Ties (within [`OTSU_TIE`]) go to the smallest `t`.
/// `None` when fewer than two bins are occupied.
pub fn otsu_bin(counts: &[u64]) -> Option<usize> {
    let total: u64 = counts.iter().sum();
    let total_mass: f64 = counts.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let mut w0 = 0u64;
    let mut mass0 = 0.0;
    let mut scores = Vec::with_capacity(counts.len());
    for (t, &c) in counts.iter().enumerate().take(counts.len().saturating_sub(1)) {
        w0 += c;
        mass0 += t as f64 * c as f64;
        let w1 = total - w0;
        if w0 == 0 || w1 == 0 {
            scores.push(None);
            continue;
        }
        let mu0 = mass0 / w0 as f64;
        let mu1 = (total_mass - mass0) / w1 as f64;
        let p0 = w0 as f64 / total as f64;
        let p1 = w1 as f64 / total as f64;
        scores.push(Some(p0 * p1 * (mu0 - mu1) * (mu0 - mu1)));
    }
    let best = scores.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    if !best.is_finite() {
        return None;
    }
    scores
        .iter()
        .position(|s| s.is_some_and(|s| s >= best * (1.0 - OTSU_TIE)))
}

/// Otsu threshold in image units: pixels strictly below it form the dark
/// class.
pub fn otsu_threshold(img: &GrayMap) -> Result<f64> {
    let hist = Histogram::of(img)?;
    let t = otsu_bin(&hist.counts).ok_or(Error::DegenerateHistogram)?;
    Ok(hist.upper_edge(t))
}

/// Pixels in the bright Otsu class.
pub fn otsu_binarize(img: &GrayMap) -> Result<BinaryMask> {
    let hist = Histogram::of(img)?;
    let t = otsu_bin(&hist.counts).ok_or(Error::DegenerateHistogram)?;
    let data = img.data().iter().map(|&v| bin_of(v, hist.min, hist.max) > t).collect();
    Ok(BinaryMask::from_shape(img, data))
}

/// Exact squared Euclidean distance from every pixel to the nearest `false`
/// pixel (zero on `false` pixels), by Meijster's separable two-pass method.
pub fn squared_distance_transform(mask: &BinaryMask) -> Result<Vec<u64>> {
    let (w, h) = (mask.width(), mask.height());
    if mask.data().iter().all(|&b| b) {
        return Err(Error::NoFeaturePixels);
    }
    let inf = (w + h) as i64;

    // column pass: vertical distance to the nearest feature pixel
    let mut g = vec![0i64; w * h];
    for x in 0..w {
        g[x] = if mask.get(x, 0) { inf } else { 0 };
        for y in 1..h {
            g[y * w + x] = if mask.get(x, y) { 1 + g[(y - 1) * w + x] } else { 0 };
        }
        for y in (0..h.saturating_sub(1)).rev() {
            if g[(y + 1) * w + x] < g[y * w + x] {
                g[y * w + x] = 1 + g[(y + 1) * w + x];
            }
        }
    }

    // row pass: lower envelope of parabolas
    let mut out = vec![0u64; w * h];
    let mut s = vec![0usize; w];
    let mut t = vec![0i64; w];
    for y in 0..h {
        let row = &g[y * w..(y + 1) * w];
        let f = |x: i64, i: usize| (x - i as i64).pow(2) + row[i].pow(2);
        let sep = |i: usize, u: usize| {
            let (i2, u2) = (i as i64, u as i64);
            (u2 * u2 - i2 * i2 + row[u].pow(2) - row[i].pow(2)).div_euclid(2 * (u2 - i2))
        };
        let mut q: isize = 0;
        s[0] = 0;
        t[0] = 0;
        for u in 1..w {
            while q >= 0 && f(t[q as usize], s[q as usize]) > f(t[q as usize], u) {
                q -= 1;
            }
            if q < 0 {
                q = 0;
                s[0] = u;
            } else {
                let next = 1 + sep(s[q as usize], u);
                if next < w as i64 {
                    q += 1;
                    s[q as usize] = u;
                    t[q as usize] = next;
                }
            }
        }
        for u in (0..w).rev() {
            out[y * w + u] = f(u as i64, s[q as usize]) as u64;
            if u as i64 == t[q as usize] {
                q -= 1;
            }
        }
    }
    Ok(out)
}

/// Euclidean distance from every `true` pixel to the nearest `false` pixel.
pub fn distance_transform(mask: &BinaryMask) -> Result<GrayMap> {
    let sq = squared_distance_transform(mask)?;
    Ok(GrayMap::from_shape(mask, sq.into_iter().map(|d| (d as f64).sqrt()).collect()))
}

pub fn complement(mask: &BinaryMask) -> BinaryMask {
    BinaryMask::from_shape(mask, mask.data().iter().map(|b| !b).collect())
}

/// Binary dilation of `mask` by one step of `conn`.
pub fn grow_mask(mask: &BinaryMask, conn: Connectivity) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let data = (0..mask.len())
        .map(|p| mask.data()[p] || neighbors(w, h, p, conn.offsets()).any(|q| mask.data()[q]))
        .collect();
    BinaryMask::from_shape(mask, data)
}

/// Drops connected components with fewer than `min_area` pixels.
pub fn remove_small_components(mask: &BinaryMask, min_area: usize, conn: Connectivity) -> BinaryMask {
    let (labels, n) = label_components(mask, conn);
    let mut area = vec![0usize; n as usize + 1];
    for &l in labels.data() {
        area[l as usize] += 1;
    }
    let data = labels
        .data()
        .iter()
        .map(|&l| l != 0 && area[l as usize] >= min_area)
        .collect();
    BinaryMask::from_shape(mask, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: &[f64]) -> GrayMap {
        GrayMap::new(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn structuring_elements() {
        assert_eq!(StructuringElement::disk(0).offsets(), &[(0, 0)]);
        assert_eq!(StructuringElement::disk(1).offsets().len(), 5);
        assert_eq!(StructuringElement::disk(2).offsets().len(), 13);
        assert!(StructuringElement::from_mask(2, &[true; 4]).is_err());
        assert!(StructuringElement::from_mask(3, &[true, true, true, true, false, true, true, true, true]).is_err());
        assert_eq!(StructuringElement::square(3).unwrap().offsets().len(), 9);
    }

    #[test]
    fn erode_dilate_basics() {
        let se = StructuringElement::square(3).unwrap();
        let flat = GrayMap::filled(4, 3, 2.0).unwrap();
        assert_eq!(erode(&flat, &se), flat);
        assert_eq!(dilate(&flat, &se), flat);

        let mut spot = GrayMap::filled(5, 5, 0.0).unwrap();
        spot.set(2, 2, 1.0);
        let d = dilate(&spot, &se);
        for y in 0..5 {
            for x in 0..5 {
                let inside = (1..=3).contains(&x) && (1..=3).contains(&y);
                assert_eq!(d.get(x, y), if inside { 1.0 } else { 0.0 });
            }
        }
        let closed = erode(&d, &se);
        assert!(closed.data().iter().zip(spot.data()).all(|(c, s)| c >= s));
    }

    #[test]
    fn reconstruction_examples() {
        let mask = row(&[0.0, 5.0, 0.0, 7.0, 0.0]);
        let marker = row(&[0.0, 5.0, 0.0, 0.0, 0.0]);
        let r = reconstruct_by_dilation(&marker, &mask, Connectivity::Four).unwrap();
        assert_eq!(r.data(), &[0.0, 5.0, 0.0, 0.0, 0.0]);

        assert_eq!(reconstruct_by_dilation(&mask, &mask, Connectivity::Eight).unwrap(), mask);

        let floor = GrayMap::filled(5, 1, 0.0).unwrap();
        assert_eq!(reconstruct_by_dilation(&floor, &mask, Connectivity::Eight).unwrap(), floor);

        assert!(matches!(
            reconstruct_by_dilation(&mask, &marker, Connectivity::Four),
            Err(Error::MarkerAboveMask(3))
        ));
    }

    #[test]
    fn erosion_reconstruction_fills_basins() {
        let mask = row(&[5.0, 1.0, 5.0]);
        let r = reconstruct_by_erosion(&row(&[5.0, 5.0, 5.0]), &mask, Connectivity::Four).unwrap();
        assert_eq!(r.data(), &[5.0, 5.0, 5.0]);

        // border seeded at the mask: the basin fills to its lowest exit
        let mask = row(&[4.0, 1.0, 2.0, 6.0]);
        let marker = row(&[4.0, 9.0, 9.0, 6.0]);
        let r = reconstruct_by_erosion(&marker, &mask, Connectivity::Four).unwrap();
        assert_eq!(r.data(), &[4.0, 4.0, 4.0, 6.0]);

        assert!(matches!(
            reconstruct_by_erosion(&mask, &marker, Connectivity::Four),
            Err(Error::MarkerBelowMask(1))
        ));
    }

    #[test]
    fn extrema_examples() {
        let img = row(&[5.0, 3.0, 5.0, 2.0, 5.0]);
        let m = regional_extrema(&img, Extremum::Minima, Connectivity::Four);
        assert_eq!(m.data(), &[false, true, false, true, false]);
        let m = regional_extrema(&img, Extremum::Maxima, Connectivity::Four);
        assert_eq!(m.data(), &[true, false, true, false, true]);

        let flat = GrayMap::filled(3, 3, 1.0).unwrap();
        assert!(regional_extrema(&flat, Extremum::Minima, Connectivity::Eight).data().iter().all(|&b| b));
    }

    #[test]
    fn impose_minima_examples() {
        let img = row(&[3.0, 0.0, 3.0, 0.0, 3.0]);
        let mut markers = BinaryMask::filled(5, 1, false).unwrap();
        markers.set(1, 0, true);
        let out = impose_minima(&img, &markers, Connectivity::Four).unwrap();
        let minima = regional_extrema(&out, Extremum::Minima, Connectivity::Four);
        assert_eq!(minima, markers);
        // the unmarked valley is filled to the surrounding level
        assert_eq!(out.get(3, 0), out.get(2, 0));

        let all = BinaryMask::filled(5, 1, true).unwrap();
        let out = impose_minima(&img, &all, Connectivity::Four).unwrap();
        assert!(out.data().iter().all(|&v| v == out.data()[0]));

        let none = BinaryMask::filled(5, 1, false).unwrap();
        assert!(matches!(impose_minima(&img, &none, Connectivity::Four), Err(Error::EmptyMarkers)));
    }

    #[test]
    fn impose_existing_minimum_is_consistent() {
        let img = row(&[4.0, 2.0, 1.0, 3.0, 5.0]);
        let minima = regional_extrema(&img, Extremum::Minima, Connectivity::Four);
        let out = impose_minima(&img, &minima, Connectivity::Four).unwrap();
        assert_eq!(regional_extrema(&out, Extremum::Minima, Connectivity::Four), minima);
    }

    #[test]
    fn otsu_examples() {
        let mut v = vec![10.0; 50];
        v.extend(std::iter::repeat_n(200.0, 50));
        let img = GrayMap::new(100, 1, v).unwrap();
        let t = otsu_threshold(&img).unwrap();
        assert_eq!(t, 10.0 + 190.0 / 256.0);
        let bw = otsu_binarize(&img).unwrap();
        assert_eq!(bw.count(), 50);

        let img = GrayMap::new(4, 1, vec![0.0, 255.0, 0.0, 255.0]).unwrap();
        let bw = otsu_binarize(&img).unwrap();
        assert_eq!(bw.data(), &[false, true, false, true]);

        assert!(matches!(otsu_threshold(&GrayMap::filled(3, 3, 1.0).unwrap()), Err(Error::DegenerateHistogram)));
    }

    #[test]
    fn edt_examples() {
        let m = BinaryMask::new(3, 1, vec![true, false, true]).unwrap();
        assert_eq!(distance_transform(&m).unwrap().data(), &[1.0, 0.0, 1.0]);

        let mut m = BinaryMask::filled(5, 5, true).unwrap();
        m.set(2, 2, false);
        let d = distance_transform(&m).unwrap();
        assert_eq!(d.get(0, 0), 8f64.sqrt());
        assert_eq!(d.get(4, 4), 8f64.sqrt());
        assert_eq!(d.get(2, 0), 2.0);

        assert!(matches!(
            distance_transform(&BinaryMask::filled(2, 2, true).unwrap()),
            Err(Error::NoFeaturePixels)
        ));
    }

    #[test]
    fn small_components_are_dropped() {
        let m = BinaryMask::new(5, 1, vec![true, false, true, true, true]).unwrap();
        let kept = remove_small_components(&m, 2, Connectivity::Four);
        assert_eq!(kept.data(), &[false, false, true, true, true]);
    }
}
