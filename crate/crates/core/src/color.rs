//! sRGB <-> CIELAB conversion (D65 white, 2° observer) and feature
//! extraction for clustering.

use std::sync::LazyLock;

use rayon::prelude::*;

use crate::raster::{LabImage, RgbImage};

/// Linear sRGB -> XYZ (D65).
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

/// Reference white as the XYZ image of linear RGB (1, 1, 1), so that white
/// and every neutral gray land exactly on the L axis.
static WHITE: LazyLock<[f64; 3]> = LazyLock::new(|| {
    let mut w = [0.0; 3];
    for (wi, row) in w.iter_mut().zip(RGB_TO_XYZ.iter()) {
        *wi = row.iter().sum();
    }
    w
});

static XYZ_TO_RGB: LazyLock<[[f64; 3]; 3]> = LazyLock::new(|| invert3(&RGB_TO_XYZ));

const EPSILON: f64 = 216.0 / 24389.0; // (6/29)^3
const DELTA: f64 = 6.0 / 29.0;

fn invert3(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    let det = m[0][0] * cof(1, 2, 1, 2) - m[0][1] * cof(1, 2, 0, 2) + m[0][2] * cof(1, 2, 0, 1);
    let adj = [
        [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
        [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
        [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
    ];
    let mut out = [[0.0; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            out[r][c] = adj[r][c] / det;
        }
    }
    out
}

fn mul3(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

#[inline]
fn srgb_decode(c: u8) -> f64 {
    let c = f64::from(c) / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

#[inline]
fn srgb_encode(c: f64) -> u8 {
    let c = c.clamp(0.0, 1.0);
    let v = if c <= 0.0031308 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    };
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

#[inline]
fn lab_f(t: f64) -> f64 {
    if t > EPSILON {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

#[inline]
fn lab_f_inv(t: f64) -> f64 {
    if t > DELTA {
        t * t * t
    } else {
        3.0 * DELTA * DELTA * (t - 4.0 / 29.0)
    }
}

/// Converts one sRGB pixel to `[L, a, b]`.
pub fn rgb_to_lab_pixel(rgb: [u8; 3]) -> [f64; 3] {
    let lin = [srgb_decode(rgb[0]), srgb_decode(rgb[1]), srgb_decode(rgb[2])];
    let xyz = mul3(&RGB_TO_XYZ, lin);
    let w = &*WHITE;
    let fx = lab_f(xyz[0] / w[0]);
    let fy = lab_f(xyz[1] / w[1]);
    let fz = lab_f(xyz[2] / w[2]);
    [
        (116.0 * fy - 16.0).clamp(0.0, 100.0),
        500.0 * (fx - fy),
        200.0 * (fy - fz),
    ]
}

/// Converts one `[L, a, b]` triple back to sRGB, clamping out-of-gamut
/// channels.
pub fn lab_to_rgb_pixel(lab: [f64; 3]) -> [u8; 3] {
    let fy = (lab[0] + 16.0) / 116.0;
    let fx = fy + lab[1] / 500.0;
    let fz = fy - lab[2] / 200.0;
    let w = &*WHITE;
    let xyz = [w[0] * lab_f_inv(fx), w[1] * lab_f_inv(fy), w[2] * lab_f_inv(fz)];
    let lin = mul3(&XYZ_TO_RGB, xyz);
    [srgb_encode(lin[0]), srgb_encode(lin[1]), srgb_encode(lin[2])]
}

pub fn srgb_to_lab(img: &RgbImage) -> LabImage {
    let data = img.data().par_iter().map(|&p| rgb_to_lab_pixel(p)).collect();
    LabImage::from_shape(img, data)
}

pub fn lab_to_srgb(img: &LabImage) -> RgbImage {
    let data = img.data().par_iter().map(|&p| lab_to_rgb_pixel(p)).collect();
    RgbImage::from_shape(img, data)
}

/// Which Lab channels become clustering features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeatureMode {
    /// Chromaticity only, `(a, b)`.
    #[default]
    Ab,
    /// All three channels, `(L, a, b)`.
    Lab,
}

impl FeatureMode {
    pub fn dim(self) -> usize {
        match self {
            FeatureMode::Ab => 2,
            FeatureMode::Lab => 3,
        }
    }
}

/// `n` points of dimension `d`, stored as one flat row-major buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    /// Builds a matrix from a flat buffer. Panics if `dim == 0` or the
    /// buffer length is not a multiple of `dim`.
    pub fn from_flat(dim: usize, data: Vec<f64>) -> Self {
        assert!(dim > 0, "feature dimension must be positive");
        assert_eq!(data.len() % dim, 0, "buffer is not a whole number of rows");
        Self { dim, data }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let dim = rows.first().map_or(1, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            assert_eq!(r.as_ref().len(), dim, "ragged feature rows");
            data.extend_from_slice(r.as_ref());
        }
        Self::from_flat(dim, data)
    }

    pub fn n(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }
}

pub fn extract_features(img: &LabImage, mode: FeatureMode) -> FeatureMatrix {
    let mut data = Vec::with_capacity(img.len() * mode.dim());
    for p in img.data() {
        match mode {
            FeatureMode::Ab => data.extend_from_slice(&p[1..]),
            FeatureMode::Lab => data.extend_from_slice(p),
        }
    }
    FeatureMatrix::from_flat(mode.dim(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
        a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn white_and_black() {
        assert!(close(rgb_to_lab_pixel([255, 255, 255]), [100.0, 0.0, 0.0], 1e-3));
        assert!(close(rgb_to_lab_pixel([0, 0, 0]), [0.0, 0.0, 0.0], 1e-3));
        assert_eq!(lab_to_rgb_pixel([100.0, 0.0, 0.0]), [255, 255, 255]);
        assert_eq!(lab_to_rgb_pixel([0.0, 0.0, 0.0]), [0, 0, 0]);
    }

    #[test]
    fn primaries_match_reference_values() {
        // Independently evaluated CIE 1976 formulas (D65, white = matrix row sums).
        let cases = [
            ([255, 0, 0], [53.240792, 80.092470, 67.203193]),
            ([0, 255, 0], [87.734719, -86.182702, 83.179315]),
            ([0, 0, 255], [32.297009, 79.187527, -107.860165]),
        ];
        for (rgb, lab) in cases {
            assert!(close(rgb_to_lab_pixel(rgb), lab, 1e-5), "{rgb:?}");
        }
    }

    #[test]
    fn grays_are_neutral_and_monotone() {
        let mut prev = -1.0;
        for v in 0..=255u8 {
            let [l, a, b] = rgb_to_lab_pixel([v, v, v]);
            assert!(a.abs() < 0.01 && b.abs() < 0.01, "gray {v}: a={a} b={b}");
            assert!(l > prev, "lightness not increasing at {v}");
            prev = l;
        }
    }

    #[test]
    fn out_of_gamut_clamps() {
        assert_eq!(lab_to_rgb_pixel([50.0, 300.0, 0.0])[1], 0);
        assert_eq!(lab_to_rgb_pixel([120.0, 0.0, 0.0]), [255, 255, 255]);
    }

    #[test]
    fn feature_projection() {
        let lab = LabImage::new(1, 1, vec![[50.0, 10.0, -5.0]]).unwrap();
        assert_eq!(extract_features(&lab, FeatureMode::Ab).row(0), &[10.0, -5.0]);
        assert_eq!(extract_features(&lab, FeatureMode::Lab).row(0), &[50.0, 10.0, -5.0]);

        let lab = LabImage::new(2, 2, (0..4).map(|i| [i as f64, 10.0 + i as f64, 0.0]).collect()).unwrap();
        let f = extract_features(&lab, FeatureMode::Lab);
        assert_eq!(f.n(), 4);
        for i in 0..4 {
            assert_eq!(f.row(i)[0], i as f64);
        }
    }
}
