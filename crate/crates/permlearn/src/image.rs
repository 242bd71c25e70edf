//! Image containers: square binary images, arbitrary binary rasters, and
//! 8-bit grayscale images.
//!
//! Pixels linearize row-major: `(col u, row v)` maps to index `v * side + u`.

use crate::bits::{BitVector, Permutation};
use crate::error::{Error, Result};

/// A square binary image backed by a packed [`BitVector`] of length `side²`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BitImage {
    side: usize,
    bits: BitVector,
}

impl BitImage {
    pub fn new(side: usize) -> Self {
        BitImage {
            side,
            bits: BitVector::zeros(side * side),
        }
    }

    pub fn from_bits(side: usize, bits: BitVector) -> Result<Self> {
        if bits.len() != side * side {
            return Err(Error::LengthMismatch {
                left: bits.len(),
                right: side * side,
            });
        }
        Ok(BitImage { side, bits })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn bits(&self) -> &BitVector {
        &self.bits
    }

    pub fn into_bits(self) -> BitVector {
        self.bits
    }

    #[inline]
    pub fn index(&self, u: usize, v: usize) -> usize {
        debug_assert!(u < self.side && v < self.side);
        v * self.side + u
    }

    #[inline]
    pub fn get_pixel(&self, u: usize, v: usize) -> bool {
        self.bits.get(self.index(u, v))
    }

    #[inline]
    pub fn set_pixel(&mut self, u: usize, v: usize, white: bool) {
        self.bits.set(self.index(u, v), white);
    }

    pub fn white_count(&self) -> u64 {
        self.bits.count_ones()
    }

    /// Fraction of pixels carrying the rarer color.
    pub fn minority_fraction(&self) -> f64 {
        let total = (self.side * self.side) as f64;
        if total == 0.0 {
            return 0.0;
        }
        let white = self.white_count() as f64;
        (white.min(total - white)) / total
    }

    pub fn permuted(&self, t: &Permutation) -> Result<BitImage> {
        Ok(BitImage {
            side: self.side,
            bits: self.bits.permute(t)?,
        })
    }

    pub fn hamming(&self, other: &BitImage) -> Result<u64> {
        self.bits.hamming(&other.bits)
    }
}

/// A binary raster of arbitrary dimensions (used for whole source images
/// before patch extraction).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BinaryRaster {
    width: usize,
    height: usize,
    bits: BitVector,
}

impl BinaryRaster {
    pub fn new(width: usize, height: usize) -> Self {
        BinaryRaster {
            width,
            height,
            bits: BitVector::zeros(width * height),
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: BitVector) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::LengthMismatch {
                left: bits.len(),
                right: width * height,
            });
        }
        Ok(BinaryRaster {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &BitVector {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        debug_assert!(x < self.width && y < self.height);
        self.bits.get(y * self.width + x)
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, white: bool) {
        debug_assert!(x < self.width && y < self.height);
        self.bits.set(y * self.width + x, white);
    }

    /// Square window copy with top-left corner `(x0, y0)`.
    pub fn window(&self, x0: usize, y0: usize, side: usize) -> Result<BitImage> {
        if x0 + side > self.width || y0 + side > self.height {
            return Err(Error::IndexOutOfRange {
                index: (x0 + side).max(y0 + side),
                size: self.width.min(self.height),
            });
        }
        let mut out = BitImage::new(side);
        for v in 0..side {
            for u in 0..side {
                if self.get(x0 + u, y0 + v) {
                    out.set_pixel(u, v, true);
                }
            }
        }
        Ok(out)
    }
}

/// 8-bit grayscale image.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GrayImage {
    width: usize,
    height: usize,
    values: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize) -> Self {
        GrayImage {
            width,
            height,
            values: vec![0; width * height],
        }
    }

    pub fn from_raw(width: usize, height: usize, values: Vec<u8>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: width * height,
            });
        }
        Ok(GrayImage {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.values[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.values[y * self.width + x] = value;
    }
}
