//! Seeded synthetic test images with known ground truth.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::raster::RgbImage;

/// Base colors of the three vertical strips: red, green, blue.
pub const STRIP_COLORS: [[u8; 3]; 3] = [[200, 30, 30], [30, 180, 50], [30, 50, 200]];

/// A square image split into red, green and blue vertical thirds, with
/// optional per-channel Gaussian noise of standard deviation `sigma`.
/// Returns the image and the ground-truth strip index of every pixel.
pub fn three_region(size: usize, sigma: f64, seed: u64) -> Result<(RgbImage, Vec<usize>)> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!("noise sigma must be >= 0, got {sigma}")));
    }
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(size * size);
    let mut truth = Vec::with_capacity(size * size);
    for _y in 0..size {
        for x in 0..size {
            let region = (x * 3 / size).min(2);
            let base = STRIP_COLORS[region];
            let px = if sigma > 0.0 {
                base.map(|c| (f64::from(c) + noise.sample(&mut rng)).round().clamp(0.0, 255.0) as u8)
            } else {
                base
            };
            data.push(px);
            truth.push(region);
        }
    }
    Ok((RgbImage::new(size, size, data)?, truth))
}
