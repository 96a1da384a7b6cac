//! End-to-end segmentation: Lab conversion, K-means, Sobel relief,
//! marker-controlled watershed, region rendering and metrics.

use std::path::PathBuf;
use std::time::Instant;

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use crate::cluster::{kmeans_run, Assignment, Centroids, Distance, KMeansConfig, KMeansResult};
use crate::color::{extract_features, lab_to_rgb_pixel, srgb_to_lab, FeatureMode};
use crate::error::{Error, Result};
use crate::gradient::{lightness_of, sobel_gradient, Magnitude};
use crate::metrics::{MetricsReport, DEFAULT_MAX_I};
use crate::raster::{BinaryMask, Connectivity, GrayMap, LabImage, LabelMap, RgbImage, Shaped};
use crate::watershed::{marker_watershed, MarkerParams, MarkerSet, RIDGE};

/// Which image the metrics compare against the original.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MetricsTarget {
    /// Region-mean rendering with black ridges.
    #[default]
    FinalRender,
    /// The original with ridge pixels painted black.
    RidgeOverlay,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub k: usize,
    pub distance: Distance,
    pub features: FeatureMode,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
    pub connectivity: Connectivity,
    pub magnitude: Magnitude,
    pub fg_se_radius: usize,
    pub min_marker_area: usize,
    pub max_i: f64,
    pub metrics_target: MetricsTarget,
    pub out_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let km = KMeansConfig::default();
        let mk = MarkerParams::default();
        Self {
            k: km.k,
            distance: km.distance,
            features: FeatureMode::Ab,
            seed: km.seed,
            max_iter: km.max_iter,
            tol: km.tol,
            connectivity: mk.conn,
            magnitude: Magnitude::Exact,
            fg_se_radius: mk.fg_se_radius,
            min_marker_area: mk.min_marker_area,
            max_i: DEFAULT_MAX_I,
            metrics_target: MetricsTarget::FinalRender,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl PipelineConfig {
    pub fn kmeans(&self) -> KMeansConfig {
        KMeansConfig {
            k: self.k,
            distance: self.distance,
            max_iter: self.max_iter,
            tol: self.tol,
            seed: self.seed,
        }
    }

    pub fn markers(&self) -> MarkerParams {
        MarkerParams {
            conn: self.connectivity,
            fg_se_radius: self.fg_se_radius,
            min_marker_area: self.min_marker_area,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.kmeans().validate()?;
        if !(self.max_i > 0.0) || !self.max_i.is_finite() {
            return Err(Error::InvalidParameter(format!("max_i must be positive, got {}", self.max_i)));
        }
        Ok(())
    }
}

/// Wall-clock time per stage, in pipeline order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Timings(pub Vec<(&'static str, f64)>);

impl Timings {
    fn time<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f().map_err(|e| e.in_stage(stage))?;
        self.0.push((stage, start.elapsed().as_secs_f64() * 1e3));
        Ok(out)
    }
}

impl Serialize for Timings {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (stage, ms) in &self.0 {
            map.serialize_entry(&format!("{stage}_ms"), ms)?;
        }
        map.end()
    }
}

#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub lab: LabImage,
    pub kmeans: KMeansResult,
    /// Each pixel drawn in its centroid's color.
    pub cluster_render: RgbImage,
    /// Lightness of the cluster-mean image; markers are extracted from it.
    pub segmented: GrayMap,
    /// Sobel magnitude of `segmented`.
    pub relief: GrayMap,
    pub markers: MarkerSet,
    pub labels: LabelMap,
    pub final_render: RgbImage,
    /// The image the metrics were computed against.
    pub metrics_image: RgbImage,
    pub metrics: MetricsReport,
    pub timings: Timings,
}

impl PipelineResult {
    pub fn assignment(&self) -> &Assignment {
        &self.kmeans.assignment
    }
}

pub fn run_pipeline(img: &RgbImage, cfg: &PipelineConfig) -> Result<PipelineResult> {
    cfg.validate()?;
    let mut timings = Timings::default();

    let lab = timings.time("conversion", || Ok(srgb_to_lab(img)))?;

    let kmeans = timings.time("kmeans", || {
        let features = extract_features(&lab, cfg.features);
        kmeans_run(&features, &cfg.kmeans())
    })?;

    let cluster_render = timings.time("cluster_render", || {
        Ok(render_assignment(&lab, &kmeans.assignment, &kmeans.centroids, cfg.features))
    })?;

    let (segmented, relief) = timings.time("gradient", || {
        let mean_lab = cluster_mean_lab(&lab, &kmeans.assignment.labels, cfg.k);
        let segmented = lightness_of(&mean_lab);
        let relief = sobel_gradient(&segmented, cfg.magnitude).magnitude;
        Ok((segmented, relief))
    })?;

    let (markers, labels) = timings.time("watershed", || {
        let (lo, hi) = segmented.min_max();
        if lo == hi {
            // a single gray level has no internal boundary: one region
            return Ok(single_region(img));
        }
        let (markers, _imposed, labels) = marker_watershed(&segmented, &relief, &cfg.markers())?;
        Ok((markers, labels))
    })?;

    let final_render = timings.time("final_render", || render_final(img, &labels))?;

    let (metrics_image, metrics) = timings.time("metrics", || {
        let target = match cfg.metrics_target {
            MetricsTarget::FinalRender => final_render.clone(),
            MetricsTarget::RidgeOverlay => ridge_overlay(img, &labels)?,
        };
        let report = MetricsReport::compute(img, &target, cfg.max_i)?;
        Ok((target, report))
    })?;

    Ok(PipelineResult {
        lab,
        kmeans,
        cluster_render,
        segmented,
        relief,
        markers,
        labels,
        final_render,
        metrics_image,
        metrics,
        timings,
    })
}

fn single_region<S: Shaped>(shape: &S) -> (MarkerSet, LabelMap) {
    let (w, h) = (shape.width(), shape.height());
    let labels = LabelMap::filled(w, h, 1).expect("shape of a valid image");
    let markers = MarkerSet {
        foreground: BinaryMask::filled(w, h, true).expect("shape of a valid image"),
        background: BinaryMask::filled(w, h, false).expect("shape of a valid image"),
        labels: labels.clone(),
    };
    (markers, labels)
}

/// Replaces every pixel by the mean Lab value of its cluster's members.
pub fn cluster_mean_lab(lab: &LabImage, labels: &[usize], k: usize) -> LabImage {
    let mut sums = vec![[0.0f64; 3]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in lab.data().iter().zip(labels) {
        counts[l] += 1;
        for c in 0..3 {
            sums[l][c] += p[c];
        }
    }
    let means: Vec<[f64; 3]> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &n)| if n == 0 { [0.0; 3] } else { s.map(|v| v / n as f64) })
        .collect();
    LabImage::from_shape(lab, labels.iter().map(|&l| means[l]).collect())
}

/// Draws each pixel in its centroid's color. For chromaticity-only features
/// the centroid is paired with the image's mean lightness.
pub fn render_assignment(lab: &LabImage, assignment: &Assignment, centroids: &Centroids, mode: FeatureMode) -> RgbImage {
    let mean_l = lab.data().iter().map(|p| p[0]).sum::<f64>() / lab.len() as f64;
    let palette: Vec<[u8; 3]> = centroids
        .rows()
        .map(|c| match mode {
            FeatureMode::Ab => lab_to_rgb_pixel([mean_l, c[0], c[1]]),
            FeatureMode::Lab => lab_to_rgb_pixel([c[0], c[1], c[2]]),
        })
        .collect();
    RgbImage::from_shape(lab, assignment.labels.iter().map(|&l| palette[l]).collect())
}

/// Region-mean sRGB per positive label, ridges black.
pub fn render_final(original: &RgbImage, labels: &LabelMap) -> Result<RgbImage> {
    crate::raster::ensure_same_shape(original, labels, "render_final")?;
    let regions = labels.max_label() as usize;
    let mut sums = vec![[0u64; 3]; regions + 1];
    let mut counts = vec![0u64; regions + 1];
    for (p, &l) in original.data().iter().zip(labels.data()) {
        counts[l as usize] += 1;
        for c in 0..3 {
            sums[l as usize][c] += u64::from(p[c]);
        }
    }
    let palette: Vec<[u8; 3]> = sums
        .iter()
        .zip(&counts)
        .enumerate()
        .map(|(l, (s, &n))| {
            if l == RIDGE as usize || n == 0 {
                [0, 0, 0]
            } else {
                // round half up
                s.map(|v| ((2 * v + n) / (2 * n)) as u8)
            }
        })
        .collect();
    Ok(RgbImage::from_shape(
        original,
        labels.data().iter().map(|&l| palette[l as usize]).collect(),
    ))
}

/// The original image with ridge pixels set to black.
pub fn ridge_overlay(original: &RgbImage, labels: &LabelMap) -> Result<RgbImage> {
    crate::raster::ensure_same_shape(original, labels, "ridge_overlay")?;
    Ok(RgbImage::from_shape(
        original,
        original
            .data()
            .iter()
            .zip(labels.data())
            .map(|(&p, &l)| if l == RIDGE { [0, 0, 0] } else { p })
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::rgb_to_lab_pixel;

    #[test]
    fn single_pixel_reconstructs_itself() {
        let img = RgbImage::new(1, 1, vec![[12, 200, 99]]).unwrap();
        let cfg = PipelineConfig { k: 1, ..Default::default() };
        let r = run_pipeline(&img, &cfg).unwrap();
        assert_eq!(r.labels.data(), &[1]);
        assert_eq!(r.metrics.mse, [0.0; 3]);
        assert!(r.metrics.psnr_db.iter().all(|p| p.is_infinite()));
    }

    #[test]
    fn render_assignment_is_a_palette_lookup() {
        let px = [[200, 30, 30], [30, 180, 50], [200, 30, 30], [30, 50, 200]];
        let img = RgbImage::new(4, 1, px.to_vec()).unwrap();
        let lab = srgb_to_lab(&img);
        let assignment = Assignment { labels: vec![0, 1, 0, 1], objective: 0.0 };
        let centroids = Centroids::from_rows(&[[40.0, 30.0], [-40.0, 20.0]]);
        let out = render_assignment(&lab, &assignment, &centroids, FeatureMode::Ab);
        assert_eq!(out.get(0, 0), out.get(2, 0));
        assert_eq!(out.get(1, 0), out.get(3, 0));
        assert_ne!(out.get(0, 0), out.get(1, 0));

        let one = Centroids::from_rows(&[rgb_to_lab_pixel([10, 20, 30])]);
        let a = Assignment { labels: vec![0; 4], objective: 0.0 };
        let out = render_assignment(&lab, &a, &one, FeatureMode::Lab);
        assert!(out.data().iter().all(|&p| p == [10, 20, 30]));
    }

    #[test]
    fn render_final_examples() {
        let img = RgbImage::new(2, 2, vec![[0, 0, 0], [10, 20, 30], [20, 40, 60], [30, 60, 91]]).unwrap();
        let one = LabelMap::filled(2, 2, 1).unwrap();
        let out = render_final(&img, &one).unwrap();
        assert!(out.data().iter().all(|&p| p == [15, 30, 45]));

        let ridge = LabelMap::filled(2, 2, 0).unwrap();
        assert!(render_final(&img, &ridge).unwrap().data().iter().all(|&p| p == [0, 0, 0]));

        let split = LabelMap::new(2, 2, vec![1, 0, 2, 2]).unwrap();
        let out = render_final(&img, &split).unwrap();
        assert_eq!(out.data(), &[[0, 0, 0], [0, 0, 0], [25, 50, 76], [25, 50, 76]]);
    }

    #[test]
    fn stage_errors_carry_the_stage_name() {
        let img = RgbImage::new(2, 1, vec![[1, 2, 3], [4, 5, 6]]).unwrap();
        let cfg = PipelineConfig { k: 3, ..Default::default() };
        let err = run_pipeline(&img, &cfg).unwrap_err();
        assert!(err.to_string().starts_with("kmeans:"), "{err}");
    }
}
