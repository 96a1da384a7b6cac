//! Raster containers shared by every stage of the pipeline.
//!
//! All rasters are stored row-major: pixel `(x, y)` lives at index
//! `y * width + x`.

use crate::error::{Error, Result};

fn check_shape(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions(format!(
            "{width}x{height}: width and height must be at least 1"
        )));
    }
    if width.checked_mul(height) != Some(len) {
        return Err(Error::InvalidDimensions(format!(
            "{width}x{height} needs {} pixels, got {len}",
            width.saturating_mul(height)
        )));
    }
    Ok(())
}

macro_rules! raster {
    ($(#[$meta:meta])* $name:ident, $px:ty) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            width: usize,
            height: usize,
            data: Vec<$px>,
        }

        impl $name {
            pub fn new(width: usize, height: usize, data: Vec<$px>) -> Result<Self> {
                check_shape(width, height, data.len())?;
                Ok(Self { width, height, data })
            }

            pub fn filled(width: usize, height: usize, value: $px) -> Result<Self> {
                let len = width.checked_mul(height).ok_or_else(|| {
                    Error::InvalidDimensions(format!("{width}x{height} overflows"))
                })?;
                Self::new(width, height, vec![value; len])
            }

            pub fn width(&self) -> usize {
                self.width
            }

            pub fn height(&self) -> usize {
                self.height
            }

            pub fn len(&self) -> usize {
                self.data.len()
            }

            pub fn is_empty(&self) -> bool {
                self.data.is_empty()
            }

            pub fn data(&self) -> &[$px] {
                &self.data
            }

            pub fn data_mut(&mut self) -> &mut [$px] {
                &mut self.data
            }

            pub fn into_data(self) -> Vec<$px> {
                self.data
            }

            #[inline]
            pub fn get(&self, x: usize, y: usize) -> $px {
                self.data[y * self.width + x]
            }

            #[inline]
            pub fn set(&mut self, x: usize, y: usize, value: $px) {
                self.data[y * self.width + x] = value;
            }

            pub fn same_shape<T: Shaped>(&self, other: &T) -> bool {
                self.width == other.width() && self.height == other.height()
            }

            /// Builds a raster of the same shape by mapping every pixel.
            pub(crate) fn from_shape<S: Shaped>(shape: &S, data: Vec<$px>) -> Self {
                debug_assert_eq!(shape.width() * shape.height(), data.len());
                Self {
                    width: shape.width(),
                    height: shape.height(),
                    data,
                }
            }
        }

        impl Shaped for $name {
            fn width(&self) -> usize {
                self.width
            }
            fn height(&self) -> usize {
                self.height
            }
        }
    };
}

/// Anything with a width and a height.
pub trait Shaped {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
}

pub(crate) fn ensure_same_shape<A: Shaped, B: Shaped>(a: &A, b: &B, what: &str) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::DimensionMismatch(format!(
            "{what}: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

raster!(
    /// 8-bit sRGB raster.
    RgbImage,
    [u8; 3]
);
raster!(
    /// CIELAB raster, channels `[L, a, b]`.
    LabImage,
    [f64; 3]
);
raster!(
    /// Single-channel real-valued raster.
    GrayMap,
    f64
);
raster!(BinaryMask, bool);
raster!(
    /// Region labels. `0` marks watershed ridge pixels, regions are `1..=R`.
    LabelMap,
    u32
);

impl GrayMap {
    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GrayMap {
        GrayMap::from_shape(self, self.data.iter().map(|&v| f(v)).collect())
    }
}

impl BinaryMask {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn any(&self) -> bool {
        self.data.iter().any(|&b| b)
    }
}

impl LabelMap {
    /// Largest label present.
    pub fn max_label(&self) -> u32 {
        self.data.iter().copied().max().unwrap_or(0)
    }
}

/// Pixel adjacency used by reconstruction, extrema and flooding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

const N4: [(isize, isize); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];
const N8: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

impl Connectivity {
    pub fn from_count(n: u32) -> Result<Self> {
        match n {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            _ => Err(Error::InvalidParameter(format!(
                "connectivity must be 4 or 8, got {n}"
            ))),
        }
    }

    pub fn count(self) -> u32 {
        match self {
            Connectivity::Four => 4,
            Connectivity::Eight => 8,
        }
    }

    /// Neighbor offsets `(dx, dy)` in raster order.
    pub fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &N4,
            Connectivity::Eight => &N8,
        }
    }

    /// Offsets that precede the center pixel in raster order.
    pub(crate) fn causal(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &N4[..2],
            Connectivity::Eight => &N8[..4],
        }
    }

    /// Offsets that follow the center pixel in raster order.
    pub(crate) fn anticausal(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &N4[2..],
            Connectivity::Eight => &N8[4..],
        }
    }
}

/// Iterates over the in-bounds neighbors of `idx` under a set of offsets.
#[inline]
pub(crate) fn neighbors<'a>(
    width: usize,
    height: usize,
    idx: usize,
    offsets: &'a [(isize, isize)],
) -> impl Iterator<Item = usize> + 'a {
    let x = (idx % width) as isize;
    let y = (idx / width) as isize;
    offsets.iter().filter_map(move |&(dx, dy)| {
        let nx = x + dx;
        let ny = y + dy;
        if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
            None
        } else {
            Some(ny as usize * width + nx as usize)
        }
    })
}

/// Labels the connected components of `mask`, in raster order of their
/// first pixel. Returns the label map (0 = background) and component count.
pub fn label_components(mask: &BinaryMask, conn: Connectivity) -> (LabelMap, u32) {
    let (w, h) = (mask.width(), mask.height());
    let mut labels = vec![0u32; mask.len()];
    let mut next = 0u32;
    let mut stack = Vec::new();
    for start in 0..mask.len() {
        if !mask.data[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        stack.push(start);
        while let Some(p) = stack.pop() {
            for q in neighbors(w, h, p, conn.offsets()) {
                if mask.data[q] && labels[q] == 0 {
                    labels[q] = next;
                    stack.push(q);
                }
            }
        }
    }
    (LabelMap::from_shape(mask, labels), next)
}
