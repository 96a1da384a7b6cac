//! Per-channel MSE and PSNR.

use serde::ser::{SerializeSeq, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::raster::{ensure_same_shape, RgbImage};

/// Default peak value for 8-bit channels.
pub const DEFAULT_MAX_I: f64 = 255.0;

/// Mean squared error per channel, ordered R, G, B.
pub fn mse_per_channel(a: &RgbImage, b: &RgbImage) -> Result<[f64; 3]> {
    ensure_same_shape(a, b, "mse")?;
    let mut sums = [0u64; 3];
    for (pa, pb) in a.data().iter().zip(b.data()) {
        for c in 0..3 {
            let d = i64::from(pa[c]) - i64::from(pb[c]);
            sums[c] += (d * d) as u64;
        }
    }
    let n = a.len() as f64;
    Ok(sums.map(|s| s as f64 / n))
}

/// `10 log10(max_i² / mse)` per channel; zero error gives `+inf`.
pub fn psnr_per_channel(mse: [f64; 3], max_i: f64) -> Result<[f64; 3]> {
    if !(max_i > 0.0) || !max_i.is_finite() {
        return Err(Error::InvalidParameter(format!("max_i must be positive, got {max_i}")));
    }
    if let Some(m) = mse.iter().find(|m| !(**m >= 0.0)) {
        return Err(Error::InvalidParameter(format!("mse must be non-negative, got {m}")));
    }
    Ok(mse.map(|m| psnr(m, max_i)))
}

fn psnr(mse: f64, max_i: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (max_i * max_i / mse).log10()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub mse: [f64; 3],
    #[serde(serialize_with = "psnr_values")]
    pub psnr_db: [f64; 3],
    pub max_i: f64,
}

fn psnr_values<S: Serializer>(values: &[f64; 3], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(3))?;
    for v in values {
        if v.is_infinite() && *v > 0.0 {
            seq.serialize_element("inf")?;
        } else {
            seq.serialize_element(v)?;
        }
    }
    seq.end()
}

impl MetricsReport {
    pub fn compute(original: &RgbImage, approx: &RgbImage, max_i: f64) -> Result<Self> {
        let mse = mse_per_channel(original, approx)?;
        let psnr_db = psnr_per_channel(mse, max_i)?;
        Ok(Self { mse, psnr_db, max_i })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}
