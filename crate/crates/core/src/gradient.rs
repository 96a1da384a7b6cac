//! 3×3 convolution and the Sobel gradient.

use rayon::prelude::*;

use crate::raster::{GrayMap, LabImage};

/// Row-major 3×3 kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel3x3(pub [f64; 9]);

impl Kernel3x3 {
    pub const IDENTITY: Kernel3x3 = Kernel3x3([0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);

    /// Horizontal Sobel kernel, correlation orientation.
    pub const SOBEL_X: Kernel3x3 = Kernel3x3([-1.0, 0.0, 1.0, -2.0, 0.0, 2.0, -1.0, 0.0, 1.0]);

    /// Vertical Sobel kernel (transpose of [`Self::SOBEL_X`]).
    pub const SOBEL_Y: Kernel3x3 = Kernel3x3([-1.0, -2.0, -1.0, 0.0, 0.0, 0.0, 1.0, 2.0, 1.0]);

    /// The kernel rotated by 180°, which turns a convolution into a
    /// correlation and back.
    pub fn flipped(&self) -> Kernel3x3 {
        let mut k = self.0;
        k.reverse();
        Kernel3x3(k)
    }
}

/// True 2D convolution with replicate padding:
/// `out(x, y) = Σ k[j][i] · img(x + 1 - i, y + 1 - j)`.
pub fn convolve3x3(img: &GrayMap, kernel: &Kernel3x3) -> GrayMap {
    let (w, h) = (img.width(), img.height());
    let src = img.data();
    let clamp = |v: isize, hi: usize| v.clamp(0, hi as isize - 1) as usize;
    let mut out = vec![0.0; src.len()];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..3 {
                let sy = clamp(y as isize + 1 - j as isize, h);
                for i in 0..3 {
                    let sx = clamp(x as isize + 1 - i as isize, w);
                    acc += kernel.0[j * 3 + i] * src[sy * w + sx];
                }
            }
            *o = acc;
        }
    });
    GrayMap::from_shape(img, out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Magnitude {
    /// `sqrt(gx² + gy²)`
    #[default]
    Exact,
    /// `|gx| + |gy|`
    Manhattan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SobelGradient {
    pub gx: GrayMap,
    pub gy: GrayMap,
    pub magnitude: GrayMap,
}

pub fn sobel_gradient(img: &GrayMap, magnitude: Magnitude) -> SobelGradient {
    // SOBEL_* are written as correlations; flip them for convolve3x3.
    let gx = convolve3x3(img, &Kernel3x3::SOBEL_X.flipped());
    let gy = convolve3x3(img, &Kernel3x3::SOBEL_Y.flipped());
    let mag = gx
        .data()
        .iter()
        .zip(gy.data())
        .map(|(&a, &b)| match magnitude {
            Magnitude::Exact => a.hypot(b),
            Magnitude::Manhattan => a.abs() + b.abs(),
        })
        .collect();
    let magnitude = GrayMap::from_shape(img, mag);
    SobelGradient { gx, gy, magnitude }
}

/// The L channel as a gray map.
pub fn lightness_of(img: &LabImage) -> GrayMap {
    GrayMap::from_shape(img, img.data().iter().map(|p| p[0]).collect())
}
