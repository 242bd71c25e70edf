//! Dataset construction: synthetic triangle images and binarized natural
//! image patches.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{BinaryRaster, BitImage, GrayImage};
use crate::match_index::ImageSet;

/// Default admission filter: at least 10% minority pixels.
pub const DEFAULT_MIN_MINORITY: f64 = 0.10;

/// A triangle with integer vertices inside `[0, side)²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriangleSpec {
    pub vertices: [(i32, i32); 3],
}

impl TriangleSpec {
    pub fn random(side: usize, rng: &mut impl Rng) -> Self {
        let s = side as i32;
        let mut v = [(0, 0); 3];
        for p in &mut v {
            *p = (rng.gen_range(0..s), rng.gen_range(0..s));
        }
        TriangleSpec { vertices: v }
    }

    pub fn validate(&self, side: usize) -> Result<()> {
        for &(x, y) in &self.vertices {
            if x < 0 || y < 0 || x >= side as i32 || y >= side as i32 {
                return Err(Error::InvalidData(format!(
                    "vertex ({x}, {y}) outside [0, {side})"
                )));
            }
        }
        Ok(())
    }

    /// Shoelace area in pixel units.
    pub fn area(&self) -> f64 {
        let [(x1, y1), (x2, y2), (x3, y3)] = self.vertices;
        let twice = i64::from(x1) * i64::from(y2 - y3)
            + i64::from(x2) * i64::from(y3 - y1)
            + i64::from(x3) * i64::from(y1 - y2);
        (twice.abs() as f64) / 2.0
    }

    pub fn perimeter(&self) -> f64 {
        let [a, b, c] = self.vertices;
        edge_len(a, b) + edge_len(b, c) + edge_len(c, a)
    }

    /// Rasterizes on an `side`×`side` grid: a pixel is white iff its center
    /// lies inside the triangle or on its boundary. Exact integer
    /// predicates on doubled coordinates, so results are platform-stable.
    pub fn rasterize(&self, side: usize) -> BitImage {
        let mut img = BitImage::new(side);
        let [a, b, c] = self.vertices;
        let (min_x, max_x) = min_max(a.0, b.0, c.0);
        let (min_y, max_y) = min_max(a.1, b.1, c.1);
        // Pixel center (u+0.5, v+0.5) can lie in [min, max] only for
        // u in [min_x, max_x - 1]; centers never coincide with integer
        // coordinates.
        if max_x == min_x || max_y == min_y {
            return img; // degenerate along an axis: no center can be hit
        }
        let da = double(a);
        let db = double(b);
        let dc = double(c);
        for v in min_y..max_y {
            for u in min_x..max_x {
                let p = (2 * u + 1, 2 * v + 1);
                let s1 = orient(da, db, p);
                let s2 = orient(db, dc, p);
                let s3 = orient(dc, da, p);
                let inside = (s1 >= 0 && s2 >= 0 && s3 >= 0) || (s1 <= 0 && s2 <= 0 && s3 <= 0);
                if inside {
                    img.set_pixel(u as usize, v as usize, true);
                }
            }
        }
        img
    }
}

fn double(p: (i32, i32)) -> (i64, i64) {
    (2 * i64::from(p.0), 2 * i64::from(p.1))
}

fn orient(a: (i64, i64), b: (i64, i64), p: (i64, i64)) -> i64 {
    (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)
}

fn min_max(a: i32, b: i32, c: i32) -> (i32, i32) {
    (a.min(b).min(c), a.max(b).max(c))
}

fn edge_len(a: (i32, i32), b: (i32, i32)) -> f64 {
    let dx = f64::from(a.0 - b.0);
    let dy = f64::from(a.1 - b.1);
    dx.hypot(dy)
}

/// Outcome of triangle sampling, including what the rejection loop did.
pub struct TriangleSample {
    pub set: ImageSet,
    pub specs: Vec<TriangleSpec>,
    pub attempts: usize,
}

/// Rejection-samples random triangles until `count` rasterizations pass the
/// minority filter. Deterministic given the generator state.
pub fn generate_triangles(
    side: usize,
    count: usize,
    min_minority: f64,
    rng: &mut impl Rng,
) -> Result<ImageSet> {
    Ok(generate_triangles_sampled(side, count, min_minority, rng)?.set)
}

/// As [`generate_triangles`], also returning accepted specs and the attempt
/// count (for manifests and rasterization statistics).
pub fn generate_triangles_sampled(
    side: usize,
    count: usize,
    min_minority: f64,
    rng: &mut impl Rng,
) -> Result<TriangleSample> {
    if count == 0 {
        return Err(Error::InvalidConfig("triangle count must be positive".into()));
    }
    if !(0.0..0.5).contains(&min_minority) {
        return Err(Error::InvalidConfig(format!(
            "minority fraction must lie in [0, 0.5), got {min_minority}"
        )));
    }
    let max_attempts = 400 * count + 10_000;
    let mut images = Vec::with_capacity(count);
    let mut specs = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while images.len() < count {
        if attempts >= max_attempts {
            return Err(Error::RejectionLimit {
                attempts,
                accepted: images.len(),
            });
        }
        attempts += 1;
        let spec = TriangleSpec::random(side, rng);
        let img = spec.rasterize(side);
        if img.minority_fraction() >= min_minority {
            images.push(img);
            specs.push(spec);
        }
    }
    Ok(TriangleSample {
        set: ImageSet::with_filter(images, Some(min_minority))?,
        specs,
        attempts,
    })
}

/// Threshold found by 1-D 2-means on an intensity histogram: Lloyd's
/// iterations from min/max initial centers, stopping when the assignment
/// boundary stabilizes. Returns the midpoint of the final cluster means, or
/// `None` for a constant histogram.
pub fn two_means_threshold(hist: &[u64; 256]) -> Option<f64> {
    let lo = hist.iter().position(|&c| c > 0)?;
    let hi = hist.iter().rposition(|&c| c > 0)?;
    if lo == hi {
        return None;
    }
    let mut c0 = lo as f64;
    let mut c1 = hi as f64;
    let mut boundary = usize::MAX;
    loop {
        let tau = (c0 + c1) / 2.0;
        // bins at exactly tau join the darker cluster
        let new_boundary = tau.floor() as usize;
        if new_boundary == boundary {
            return Some(tau);
        }
        boundary = new_boundary;
        let (mut w0, mut s0, mut w1, mut s1) = (0u64, 0u64, 0u64, 0u64);
        for (v, &cnt) in hist.iter().enumerate() {
            if v as f64 <= tau {
                w0 += cnt;
                s0 += cnt * v as u64;
            } else {
                w1 += cnt;
                s1 += cnt * v as u64;
            }
        }
        debug_assert!(w0 > 0 && w1 > 0, "min/max initialization keeps both clusters nonempty");
        c0 = s0 as f64 / w0 as f64;
        c1 = s1 as f64 / w1 as f64;
    }
}

/// Binarizes by 2-means clustering of intensities: the brighter cluster
/// becomes white. Constant images map to all-black.
pub fn binarize(img: &GrayImage) -> BinaryRaster {
    let mut hist = [0u64; 256];
    for &v in img.values() {
        hist[v as usize] += 1;
    }
    let mut out = BinaryRaster::new(img.width(), img.height());
    let Some(tau) = two_means_threshold(&hist) else {
        return out; // constant image: all black
    };
    for y in 0..img.height() {
        for x in 0..img.width() {
            if f64::from(img.get(x, y)) > tau {
                out.set(x, y, true);
            }
        }
    }
    out
}

/// A patch kept by [`extract_patches_located`], with its source offset.
pub struct LocatedPatch {
    pub image: BitImage,
    pub offset: (usize, usize),
    pub minority_fraction: f64,
}

/// Tiles the raster with non-overlapping `side`×`side` patches anchored at
/// the origin (partial edge tiles are dropped) and keeps those passing the
/// minority filter.
pub fn extract_patches(raster: &BinaryRaster, side: usize, min_minority: f64) -> Vec<BitImage> {
    extract_patches_located(raster, side, min_minority)
        .into_iter()
        .map(|p| p.image)
        .collect()
}

pub fn extract_patches_located(
    raster: &BinaryRaster,
    side: usize,
    min_minority: f64,
) -> Vec<LocatedPatch> {
    let mut out = Vec::new();
    if side == 0 || raster.width() < side || raster.height() < side {
        return out;
    }
    for y0 in (0..=raster.height() - side).step_by(side) {
        for x0 in (0..=raster.width() - side).step_by(side) {
            let patch = raster
                .window(x0, y0, side)
                .expect("tile bounds are checked by the loop ranges");
            let frac = patch.minority_fraction();
            if frac >= min_minority {
                out.push(LocatedPatch {
                    image: patch,
                    offset: (x0, y0),
                    minority_fraction: frac,
                });
            }
        }
    }
    out
}

/// Grayscale conversion with fixed luma weights (0.299, 0.587, 0.114).
pub fn gray_from_rgb(width: usize, height: usize, rgb: &[u8]) -> Result<GrayImage> {
    if rgb.len() != width * height * 3 {
        return Err(Error::LengthMismatch {
            left: rgb.len(),
            right: width * height * 3,
        });
    }
    let values = rgb
        .chunks_exact(3)
        .map(|px| {
            let y = 0.299 * f64::from(px[0]) + 0.587 * f64::from(px[1]) + 0.114 * f64::from(px[2]);
            y.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    GrayImage::from_raw(width, height, values)
}

/// Loads any common-format image (PNG, PGM, JPEG, BMP) as grayscale.
pub fn load_gray(path: &Path) -> Result<GrayImage> {
    let dynamic = ::image::open(path).map_err(|e| Error::format(path, e.to_string()))?;
    let rgb = dynamic.to_rgb8();
    gray_from_rgb(rgb.width() as usize, rgb.height() as usize, rgb.as_raw())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    #[test]
    fn degenerate_triangles_fail_the_filter() {
        let spec = TriangleSpec {
            vertices: [(3, 3), (10, 10), (20, 20)],
        };
        let img = spec.rasterize(64);
        // collinear vertices: only centers exactly on the segment could be
        // white, and at 45° none are
        assert_eq!(img.white_count(), 0);
        assert!(img.minority_fraction() < 0.10);
    }

    #[test]
    fn generated_triangles_satisfy_the_filter() {
        let mut rng = seeded_rng(1, 0);
        let set = generate_triangles(64, 100, 0.10, &mut rng).unwrap();
        assert_eq!(set.len(), 100);
        for img in set.iter() {
            let white = img.white_count() as f64 / 4096.0;
            assert!((0.10..=0.90).contains(&white));
        }
    }

    #[test]
    fn white_count_tracks_shoelace_area() {
        let mut rng = seeded_rng(2, 0);
        let sample = generate_triangles_sampled(64, 100, 0.10, &mut rng).unwrap();
        for (spec, img) in sample.specs.iter().zip(sample.set.iter()) {
            let count = img.white_count() as f64;
            let bound = spec.perimeter() + 4.0;
            assert!(
                (count - spec.area()).abs() <= bound,
                "count {count} vs area {} exceeds perimeter bound {bound} for {spec:?}",
                spec.area()
            );
        }
        // acceptance rate stays sane at these settings
        assert!(sample.attempts < 100 * 400 + 10_000);
    }

    #[test]
    fn rasterization_counts_boundary_pixels() {
        // right triangle on the lower-left half of a 4x4 grid:
        // vertices (0,0), (0,3), (3,3); interior is x >= 0, y <= 3, y >= x
        let spec = TriangleSpec {
            vertices: [(0, 0), (0, 3), (3, 3)],
        };
        let img = spec.rasterize(4);
        for v in 0..4usize {
            for u in 0..4usize {
                // center (u+0.5, v+0.5): on the hypotenuse when u == v
                // (boundary-inclusive), inside when u < v; v = 3 centers
                // fall below the bottom edge
                let expected = u <= v && v <= 2;
                assert_eq!(img.get_pixel(u, v), expected, "pixel ({u}, {v})");
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_triangles(16, 50, 0.10, &mut seeded_rng(9, 0)).unwrap();
        let b = generate_triangles(16, 50, 0.10, &mut seeded_rng(9, 0)).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn impossible_filter_hits_the_rejection_limit() {
        let mut rng = seeded_rng(3, 0);
        let err = generate_triangles(4, 5, 0.49, &mut rng).unwrap_err();
        assert!(matches!(err, Error::RejectionLimit { .. }));
    }

    #[test]
    fn binarize_splits_two_valued_images() {
        let mut g = GrayImage::new(4, 1);
        g.set(0, 0, 0);
        g.set(1, 0, 255);
        g.set(2, 0, 0);
        g.set(3, 0, 255);
        let b = binarize(&g);
        assert!(!b.get(0, 0));
        assert!(b.get(1, 0));
        assert!(!b.get(2, 0));
        assert!(b.get(3, 0));
    }

    #[test]
    fn binarize_constant_is_all_black() {
        let g = GrayImage::from_raw(3, 3, vec![200; 9]).unwrap();
        let b = binarize(&g);
        assert_eq!(b.bits().count_ones(), 0);
    }

    #[test]
    fn two_means_matches_exhaustive_scan_on_bimodal_input() {
        // two truncated Gaussians at 60 and 200
        let mut hist = [0u64; 256];
        for v in 0..256usize {
            let g = |mu: f64, sigma: f64| {
                let z = (v as f64 - mu) / sigma;
                (1000.0 * (-0.5 * z * z).exp()).round() as u64
            };
            hist[v] = g(60.0, 12.0) + g(200.0, 18.0);
        }
        let tau = two_means_threshold(&hist).unwrap();
        assert!(tau > 60.0 && tau < 200.0);

        // midpoint-of-final-means property: reassigning at tau and
        // recomputing means must reproduce tau
        let (mut w0, mut s0, mut w1, mut s1) = (0u64, 0u64, 0u64, 0u64);
        for (v, &cnt) in hist.iter().enumerate() {
            if (v as f64) <= tau {
                w0 += cnt;
                s0 += cnt * v as u64;
            } else {
                w1 += cnt;
                s1 += cnt * v as u64;
            }
        }
        let mid = (s0 as f64 / w0 as f64 + s1 as f64 / w1 as f64) / 2.0;
        assert!((tau - mid).abs() < 1e-9);

        // oracle: exhaustive boundary scan minimizing within-cluster SSE
        let mut best = (f64::INFINITY, 0usize);
        for split in 0..255usize {
            let (mut w0, mut s0, mut q0, mut w1, mut s1, mut q1) = (0f64, 0f64, 0f64, 0f64, 0f64, 0f64);
            for (v, &cnt) in hist.iter().enumerate() {
                let (c, v) = (cnt as f64, v as f64);
                if v as usize <= split {
                    w0 += c;
                    s0 += c * v;
                    q0 += c * v * v;
                } else {
                    w1 += c;
                    s1 += c * v;
                    q1 += c * v * v;
                }
            }
            if w0 == 0.0 || w1 == 0.0 {
                continue;
            }
            let sse = (q0 - s0 * s0 / w0) + (q1 - s1 * s1 / w1);
            if sse < best.0 {
                best = (sse, split);
            }
        }
        assert_eq!(tau.floor() as usize, best.1, "2-means split must equal the SSE-optimal split");
    }

    #[test]
    fn patch_tiling_arithmetic() {
        // checkerboard with 8px checks: every patch has fraction 0.5
        let mut raster = BinaryRaster::new(128, 128);
        for y in 0..128 {
            for x in 0..128 {
                if ((x / 8) + (y / 8)) % 2 == 0 {
                    raster.set(x, y, true);
                }
            }
        }
        let patches = extract_patches(&raster, 64, 0.10);
        assert_eq!(patches.len(), 4);

        let black = BinaryRaster::new(128, 128);
        assert!(extract_patches(&black, 64, 0.10).is_empty());

        let small = BinaryRaster::new(63, 128);
        assert!(extract_patches(&small, 64, 0.10).is_empty());

        // partial tiles at the right/bottom edges are dropped
        let mut odd = BinaryRaster::new(130, 70);
        for y in 0..70 {
            for x in 0..130 {
                if (x + y) % 2 == 0 {
                    odd.set(x, y, true);
                }
            }
        }
        let located = extract_patches_located(&odd, 64, 0.10);
        assert_eq!(located.len(), 2);
        assert_eq!(located[0].offset, (0, 0));
        assert_eq!(located[1].offset, (64, 0));
        assert!((located[0].minority_fraction - 0.5).abs() < 1e-12);
    }

    #[test]
    fn luma_weights_are_fixed() {
        let g = gray_from_rgb(1, 1, &[255, 0, 0]).unwrap();
        assert_eq!(g.get(0, 0), 76); // round(0.299 * 255)
        let g = gray_from_rgb(1, 1, &[100, 100, 100]).unwrap();
        assert_eq!(g.get(0, 0), 100); // weights sum to one
    }
}
