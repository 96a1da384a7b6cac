//! Marker-controlled watershed: marker extraction, relief modification and
//! priority flooding.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::morphology::{
    complement, dilate, distance_transform, erode, grow_mask, impose_minima, otsu_binarize,
    reconstruct_by_dilation, reconstruct_by_erosion, regional_extrema, remove_small_components,
    Extremum, StructuringElement,
};
use crate::raster::{ensure_same_shape, label_components, neighbors, BinaryMask, Connectivity, GrayMap, LabelMap};

/// Ridge label in a [`LabelMap`].
pub const RIDGE: u32 = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct MarkerSet {
    pub foreground: BinaryMask,
    pub background: BinaryMask,
    /// One positive label per connected component of
    /// `foreground ∪ background`, zero elsewhere.
    pub labels: LabelMap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkerParams {
    pub conn: Connectivity,
    pub fg_se_radius: usize,
    pub min_marker_area: usize,
}

impl Default for MarkerParams {
    fn default() -> Self {
        Self {
            conn: Connectivity::Eight,
            fg_se_radius: 5,
            min_marker_area: 20,
        }
    }
}

/// Builds foreground and background markers from a segmented gray image.
///
/// Foreground: regional maxima of the opening-by-reconstruction followed by
/// closing-by-reconstruction (disk of `fg_se_radius`), small blobs removed.
///
/// Background: the ridge lines of the watershed of the distance to the Otsu
/// foreground, plus the image border wherever it lies in the dark class.
/// Background pixels touching the foreground are dropped so the two sets
/// stay disjoint and non-adjacent.
pub fn generate_markers(gray: &GrayMap, params: &MarkerParams) -> Result<MarkerSet> {
    let conn = params.conn;
    let se = StructuringElement::disk(params.fg_se_radius);

    let eroded = erode(gray, &se);
    let opened = reconstruct_by_dilation(&eroded, gray, conn)?;
    let dilated = dilate(&opened, &se);
    let cleaned = reconstruct_by_erosion(&dilated, &opened, conn)?;
    let maxima = regional_extrema(&cleaned, Extremum::Maxima, conn);
    let foreground = remove_small_components(&maxima, params.min_marker_area, conn);
    if !foreground.any() {
        return Err(Error::NoForegroundMarkers);
    }

    let bright = otsu_binarize(&cleaned)?;
    let dark = complement(&bright);
    let dist = distance_transform(&dark)?;
    let (seeds, _) = label_components(&bright, conn);
    let split = watershed_flood(&dist, &seeds, conn)?;

    let (w, h) = (gray.width(), gray.height());
    let near_fg = grow_mask(&foreground, conn);
    let background_data = (0..gray.len())
        .map(|p| {
            let (x, y) = (p % w, p / w);
            let border = x == 0 || y == 0 || x + 1 == w || y + 1 == h;
            let ridge = split.data()[p] == RIDGE && dark.data()[p];
            (ridge || (border && dark.data()[p])) && !near_fg.data()[p]
        })
        .collect();
    let background = BinaryMask::from_shape(gray, background_data);

    let union = BinaryMask::from_shape(
        gray,
        foreground
            .data()
            .iter()
            .zip(background.data())
            .map(|(&f, &b)| f || b)
            .collect(),
    );
    let (labels, _) = label_components(&union, conn);
    Ok(MarkerSet {
        foreground,
        background,
        labels,
    })
}

/// Heap entry ordered by relief value, then insertion sequence.
#[derive(Debug, Clone, Copy)]
struct Entry {
    level: f64,
    seq: u64,
    pixel: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.level
            .total_cmp(&other.level)
            .then(self.seq.cmp(&other.seq))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Unseen,
    Queued,
    Done,
}

/// Priority flooding from labeled marker pixels.
///
/// Marker pixels are final from the start and enter the queue at their own
/// relief value. A popped pixel whose finished neighbors carry two different
/// positive labels becomes a ridge ([`RIDGE`]) and does not spread; otherwise
/// it keeps the label it inherited when queued and queues its unseen
/// neighbors. Equal relief values pop in insertion order. Pixels that are
/// never reached stay [`RIDGE`].
pub fn watershed_flood(relief: &GrayMap, markers: &LabelMap, conn: Connectivity) -> Result<LabelMap> {
    ensure_same_shape(relief, markers, "watershed_flood")?;
    if markers.data().iter().all(|&l| l == RIDGE) {
        return Err(Error::EmptyMarkers);
    }
    let (w, h) = (relief.width(), relief.height());
    let level = relief.data();
    let mut labels = markers.data().to_vec();
    let mut state: Vec<State> = labels
        .iter()
        .map(|&l| if l == RIDGE { State::Unseen } else { State::Done })
        .collect();

    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    for (p, &l) in labels.iter().enumerate() {
        if l != RIDGE {
            heap.push(Reverse(Entry { level: level[p], seq, pixel: p }));
            seq += 1;
        }
    }

    while let Some(Reverse(Entry { pixel: p, .. })) = heap.pop() {
        if state[p] == State::Queued {
            let own = labels[p];
            let conflict = neighbors(w, h, p, conn.offsets())
                .any(|q| state[q] == State::Done && labels[q] != RIDGE && labels[q] != own);
            state[p] = State::Done;
            if conflict {
                labels[p] = RIDGE;
                continue;
            }
        }
        let own = labels[p];
        for q in neighbors(w, h, p, conn.offsets()) {
            if state[q] == State::Unseen {
                state[q] = State::Queued;
                labels[q] = own;
                heap.push(Reverse(Entry { level: level[q], seq, pixel: q }));
                seq += 1;
            }
        }
    }
    Ok(LabelMap::from_shape(relief, labels))
}

/// Full marker-controlled watershed.
///
/// Markers come from `gray` (the segmented image); the flood runs over
/// `relief` (its gradient magnitude) after forcing its minima onto the
/// markers.
pub fn marker_watershed(gray: &GrayMap, relief: &GrayMap, params: &MarkerParams) -> Result<(MarkerSet, GrayMap, LabelMap)> {
    ensure_same_shape(gray, relief, "marker_watershed")?;
    let markers = generate_markers(gray, params)?;
    let all = BinaryMask::from_shape(relief, markers.labels.data().iter().map(|&l| l != RIDGE).collect());
    let imposed = impose_minima(relief, &all, params.conn)?;
    let labels = watershed_flood(&imposed, &markers.labels, params.conn)?;
    Ok((markers, imposed, labels))
}
