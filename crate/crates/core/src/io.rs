//! Image files and report output.

use std::fs;
use std::path::{Path, PathBuf};

use image::{ImageBuffer, ImageFormat, Luma, Rgb};

use crate::error::{Error, Result};
use crate::pipeline::PipelineResult;
use crate::raster::{GrayMap, LabImage, LabelMap, RgbImage, Shaped};
use crate::watershed::MarkerSet;

/// Files written by [`write_outputs`], in order.
pub const OUTPUT_FILES: [&str; 8] = [
    "lab_preview.png",
    "clusters.png",
    "gradient.png",
    "markers.png",
    "labels.png",
    "final.png",
    "metrics.json",
    "timings.json",
];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn image_err(path: &Path) -> impl FnOnce(image::ImageError) -> Error + '_ {
    move |source| Error::Image {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a PNG or binary PPM file; alpha is dropped.
pub fn read_rgb(path: &Path) -> Result<RgbImage> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let format = image::guess_format(&bytes).map_err(image_err(path))?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Pnm) {
        return Err(Error::UnsupportedFormat(format!("{}: {format:?}", path.display())));
    }
    let decoded = image::load_from_memory_with_format(&bytes, format)
        .map_err(image_err(path))?
        .to_rgb8();
    let (w, h) = decoded.dimensions();
    let data = decoded.pixels().map(|p| p.0).collect();
    RgbImage::new(w as usize, h as usize, data)
}

fn dims<S: Shaped>(img: &S) -> (u32, u32) {
    (img.width() as u32, img.height() as u32)
}

pub fn write_rgb_png(path: &Path, img: &RgbImage) -> Result<()> {
    let (w, h) = dims(img);
    let raw: Vec<u8> = img.data().iter().flatten().copied().collect();
    let buf: ImageBuffer<Rgb<u8>, _> = ImageBuffer::from_raw(w, h, raw).expect("buffer matches dimensions");
    buf.save_with_format(path, ImageFormat::Png).map_err(image_err(path))
}

pub fn write_gray_png(path: &Path, width: usize, height: usize, data: Vec<u8>) -> Result<()> {
    let buf: ImageBuffer<Luma<u8>, _> =
        ImageBuffer::from_raw(width as u32, height as u32, data).expect("buffer matches dimensions");
    buf.save_with_format(path, ImageFormat::Png).map_err(image_err(path))
}

/// 16-bit grayscale label image; fails when a label exceeds `u16::MAX`.
pub fn write_labels_png(path: &Path, labels: &LabelMap) -> Result<()> {
    let max = labels.max_label();
    if max > u32::from(u16::MAX) {
        return Err(Error::TooManyRegions(max as usize));
    }
    let (w, h) = dims(labels);
    let raw: Vec<u16> = labels.data().iter().map(|&l| l as u16).collect();
    let buf: ImageBuffer<Luma<u16>, _> = ImageBuffer::from_raw(w, h, raw).expect("buffer matches dimensions");
    buf.save_with_format(path, ImageFormat::Png).map_err(image_err(path))
}

/// Reads a 16-bit label image written by [`write_labels_png`].
pub fn read_labels_png(path: &Path) -> Result<LabelMap> {
    let img = image::open(path).map_err(image_err(path))?.to_luma16();
    let (w, h) = img.dimensions();
    LabelMap::new(w as usize, h as usize, img.pixels().map(|p| u32::from(p.0[0])).collect())
}

/// `(L·2.55, a+128, b+128)` packed into RGB for viewing.
pub fn lab_preview(lab: &LabImage) -> RgbImage {
    let to_u8 = |v: f64| v.round().clamp(0.0, 255.0) as u8;
    let data = lab
        .data()
        .iter()
        .map(|p| [to_u8(p[0] * 2.55), to_u8(p[1] + 128.0), to_u8(p[2] + 128.0)])
        .collect();
    RgbImage::new(lab.width(), lab.height(), data).expect("same shape as input")
}

/// Scales a non-negative map to 0..=255 by its maximum.
pub fn gray_to_u8(map: &GrayMap) -> Vec<u8> {
    let (_, hi) = map.min_max();
    map.data()
        .iter()
        .map(|&v| if hi > 0.0 { (v / hi * 255.0).round().clamp(0.0, 255.0) as u8 } else { 0 })
        .collect()
}

/// Foreground 255, background 128, everything else 0.
pub fn markers_to_u8(markers: &MarkerSet) -> Vec<u8> {
    markers
        .foreground
        .data()
        .iter()
        .zip(markers.background.data())
        .map(|(&f, &b)| if f { 255 } else if b { 128 } else { 0 })
        .collect()
}

/// Writes every artifact of a pipeline run into `dir`, creating it if needed.
/// Returns the written paths in [`OUTPUT_FILES`] order.
pub fn write_outputs(dir: &Path, result: &PipelineResult) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let (w, h) = (result.labels.width(), result.labels.height());
    let paths: Vec<PathBuf> = OUTPUT_FILES.iter().map(|f| dir.join(f)).collect();

    write_rgb_png(&paths[0], &lab_preview(&result.lab))?;
    write_rgb_png(&paths[1], &result.cluster_render)?;
    write_gray_png(&paths[2], w, h, gray_to_u8(&result.relief))?;
    write_gray_png(&paths[3], w, h, markers_to_u8(&result.markers))?;
    write_labels_png(&paths[4], &result.labels)?;
    write_rgb_png(&paths[5], &result.final_render)?;
    fs::write(&paths[6], result.metrics.to_json()?).map_err(io_err(&paths[6]))?;
    fs::write(&paths[7], serde_json::to_string(&result.timings)?).map_err(io_err(&paths[7]))?;
    Ok(paths)
}
