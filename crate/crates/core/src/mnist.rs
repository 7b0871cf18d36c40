//! MNIST IDX loading, binarization into active-pixel sets, and seeded
//! dataset splits.
//!
//! IDX headers are big-endian and honored exactly; `.gz` files are
//! transparently decompressed. Pixel indexing is row-major (`row * 28 + col`)
//! throughout, which fixes the pixel-to-input-node correspondence.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;

pub const IMAGE_SIDE: usize = 28;
pub const IMAGE_PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

/// A loaded image/label pair set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageSet {
    pub images: Vec<[u8; IMAGE_PIXELS]>,
    pub labels: Vec<u8>,
    /// Where the set came from (file stem of the images path).
    pub source: String,
}

impl ImageSet {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Indices of all items with the given label.
    pub fn indices_of_class(&self, class: u8) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == class).collect()
    }
}

/// Sorted set of active (nonzero) pixel indices of one image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivePixelSet {
    indices: Vec<u16>,
}

impl ActivePixelSet {
    /// Build from raw indices; sorts, dedups and validates the < 784 bound.
    pub fn new(mut indices: Vec<u16>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if let Some(&bad) = indices.iter().find(|&&i| i as usize >= IMAGE_PIXELS) {
            return Err(Error::PixelOutOfRange { pixel: bad, n_input: IMAGE_PIXELS as u32 });
        }
        Ok(Self { indices })
    }

    pub fn indices(&self) -> &[u16] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Seeded evaluation split: `embedding_count` reference items plus
/// `query_count` queries, re-drawn `repeats` times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub seed: u64,
    pub embedding_count: usize,
    pub query_count: usize,
    pub repeats: u32,
}

impl SplitPlan {
    pub fn new(seed: u64, embedding_count: usize, query_count: usize, repeats: u32) -> Self {
        Self { seed, embedding_count, query_count, repeats }
    }
}

fn read_file_bytes(path: &Path) -> Result<Vec<u8>> {
    let display = path.display().to_string();
    let mut file = File::open(path).map_err(|e| Error::io(&display, e))?;
    let mut bytes = Vec::new();
    if path.extension().is_some_and(|ext| ext == "gz") {
        GzDecoder::new(file)
            .read_to_end(&mut bytes)
            .map_err(|e| Error::io(&display, e))?;
    } else {
        file.read_to_end(&mut bytes).map_err(|e| Error::io(&display, e))?;
    }
    Ok(bytes)
}

fn be_u32(bytes: &[u8], offset: usize, path: &str) -> Result<u32> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(Error::TruncatedIdx { path: path.to_string(), expected: end, found: bytes.len() });
    }
    Ok(u32::from_be_bytes([bytes[offset], bytes[offset + 1], bytes[offset + 2], bytes[offset + 3]]))
}

fn parse_images(bytes: &[u8], path: &str) -> Result<Vec<[u8; IMAGE_PIXELS]>> {
    let magic = be_u32(bytes, 0, path)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::BadIdxMagic { path: path.to_string(), expected: IMAGES_MAGIC, found: magic });
    }
    let count = be_u32(bytes, 4, path)? as usize;
    let rows = be_u32(bytes, 8, path)?;
    let cols = be_u32(bytes, 12, path)?;
    if rows != IMAGE_SIDE as u32 || cols != IMAGE_SIDE as u32 {
        return Err(Error::IdxShape { path: path.to_string(), rows, cols });
    }
    let expected = 16 + count * IMAGE_PIXELS;
    if bytes.len() < expected {
        return Err(Error::TruncatedIdx { path: path.to_string(), expected, found: bytes.len() });
    }
    let mut images = Vec::with_capacity(count);
    for i in 0..count {
        let start = 16 + i * IMAGE_PIXELS;
        let mut img = [0u8; IMAGE_PIXELS];
        img.copy_from_slice(&bytes[start..start + IMAGE_PIXELS]);
        images.push(img);
    }
    Ok(images)
}

fn parse_labels(bytes: &[u8], path: &str) -> Result<Vec<u8>> {
    let magic = be_u32(bytes, 0, path)?;
    if magic != LABELS_MAGIC {
        return Err(Error::BadIdxMagic { path: path.to_string(), expected: LABELS_MAGIC, found: magic });
    }
    let count = be_u32(bytes, 4, path)? as usize;
    let expected = 8 + count;
    if bytes.len() < expected {
        return Err(Error::TruncatedIdx { path: path.to_string(), expected, found: bytes.len() });
    }
    let labels = bytes[8..8 + count].to_vec();
    for (index, &label) in labels.iter().enumerate() {
        if label > 9 {
            return Err(Error::LabelRange { index, label });
        }
    }
    Ok(labels)
}

/// Load an IDX image/label file pair.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<ImageSet> {
    let images = parse_images(&read_file_bytes(images_path)?, &images_path.display().to_string())?;
    let labels = parse_labels(&read_file_bytes(labels_path)?, &labels_path.display().to_string())?;
    if images.len() != labels.len() {
        return Err(Error::IdxCountMismatch { images: images.len(), labels: labels.len() });
    }
    let source = images_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(ImageSet { images, labels, source })
}

/// Serialize an ImageSet back to IDX bytes (images file, labels file).
pub fn to_idx_bytes(set: &ImageSet) -> (Vec<u8>, Vec<u8>) {
    let n = set.len() as u32;
    let mut images = Vec::with_capacity(16 + set.len() * IMAGE_PIXELS);
    images.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    images.extend_from_slice(&n.to_be_bytes());
    images.extend_from_slice(&(IMAGE_SIDE as u32).to_be_bytes());
    images.extend_from_slice(&(IMAGE_SIDE as u32).to_be_bytes());
    for img in &set.images {
        images.extend_from_slice(img);
    }
    let mut labels = Vec::with_capacity(8 + set.len());
    labels.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    labels.extend_from_slice(&n.to_be_bytes());
    labels.extend_from_slice(&set.labels);
    (images, labels)
}

/// Parse an ImageSet from in-memory IDX bytes.
pub fn from_idx_bytes(images: &[u8], labels: &[u8], source: &str) -> Result<ImageSet> {
    let imgs = parse_images(images, "<memory>")?;
    let lbls = parse_labels(labels, "<memory>")?;
    if imgs.len() != lbls.len() {
        return Err(Error::IdxCountMismatch { images: imgs.len(), labels: lbls.len() });
    }
    Ok(ImageSet { images: imgs, labels: lbls, source: source.to_string() })
}

/// Active-pixel set of one image: index i is in iff pixel i > 0.
pub fn binarize(image: &[u8; IMAGE_PIXELS]) -> ActivePixelSet {
    let indices = image
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0)
        .map(|(i, _)| i as u16)
        .collect();
    // enumerate order is already sorted and in range
    ActivePixelSet { indices }
}

/// Split item indices `0..n` into disjoint (embedding, query) subsets for one
/// repeat of the plan. Deterministic in (plan.seed, repeat_index); distinct
/// repeat indices give distinct permutations.
pub fn split_indices(n: usize, plan: &SplitPlan, repeat_index: u32) -> Result<(Vec<u32>, Vec<u32>)> {
    if repeat_index >= plan.repeats {
        return Err(Error::RepeatOutOfRange { index: repeat_index, repeats: plan.repeats });
    }
    let needed = plan.embedding_count + plan.query_count;
    if needed > n {
        return Err(Error::InsufficientItems { needed, available: n });
    }
    let mut order: Vec<u32> = (0..n as u32).collect();
    let mut rng = stream_rng(plan.seed, repeat_index as u64);
    order.shuffle(&mut rng);
    let embedding = order[..plan.embedding_count].to_vec();
    let query = order[plan.embedding_count..needed].to_vec();
    Ok((embedding, query))
}

/// Split an ImageSet per the plan; returns (embedding, query) index lists.
pub fn split(set: &ImageSet, plan: &SplitPlan, repeat_index: u32) -> Result<(Vec<u32>, Vec<u32>)> {
    split_indices(set.len(), plan, repeat_index)
}

/// Deterministic subset of item indices: a seeded shuffle of `0..n`, truncated.
pub fn subset_indices(n: usize, seed: u64, count: usize) -> Vec<u32> {
    let mut order: Vec<u32> = (0..n as u32).collect();
    let mut rng = stream_rng(seed, 0);
    order.shuffle(&mut rng);
    order.truncate(count.min(n));
    order
}

/// Deterministic class-balanced subset: `per_class` items of each listed class,
/// drawn from a seeded shuffle. Errors if a class runs short.
pub fn balanced_subset(set: &ImageSet, seed: u64, per_class: usize, classes: &[u8]) -> Result<Vec<u32>> {
    let mut order: Vec<u32> = (0..set.len() as u32).collect();
    let mut rng = stream_rng(seed, 1);
    order.shuffle(&mut rng);
    let mut picked: Vec<u32> = Vec::with_capacity(per_class * classes.len());
    for &class in classes {
        let of_class: Vec<u32> = order
            .iter()
            .copied()
            .filter(|&i| set.labels[i as usize] == class)
            .take(per_class)
            .collect();
        if of_class.len() < per_class {
            return Err(Error::InsufficientItems { needed: per_class, available: of_class.len() });
        }
        picked.extend(of_class);
    }
    Ok(picked)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_set(n: usize) -> ImageSet {
        let mut images = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let mut img = [0u8; IMAGE_PIXELS];
            img[i % IMAGE_PIXELS] = (i % 255) as u8 + 1;
            images.push(img);
            labels.push((i % 10) as u8);
        }
        ImageSet { images, labels, source: "tiny".into() }
    }

    #[test]
    fn empty_idx_parses() {
        let set = tiny_set(0);
        let (ib, lb) = to_idx_bytes(&set);
        let back = from_idx_bytes(&ib, &lb, "tiny").unwrap();
        assert!(back.is_empty());
    }

    #[test]
    fn idx_round_trip_identical() {
        let set = tiny_set(17);
        let (ib, lb) = to_idx_bytes(&set);
        let back = from_idx_bytes(&ib, &lb, "tiny").unwrap();
        assert_eq!(set, back);
    }

    #[test]
    fn bad_magic_detected() {
        let set = tiny_set(3);
        let (mut ib, lb) = to_idx_bytes(&set);
        ib[3] = 0x99;
        match from_idx_bytes(&ib, &lb, "t") {
            Err(Error::BadIdxMagic { .. }) => {}
            other => panic!("expected BadIdxMagic, got {other:?}"),
        }
    }

    #[test]
    fn truncation_detected() {
        let set = tiny_set(3);
        let (ib, lb) = to_idx_bytes(&set);
        let cut = &ib[..ib.len() - 5];
        match from_idx_bytes(cut, &lb, "t") {
            Err(Error::TruncatedIdx { .. }) => {}
            other => panic!("expected TruncatedIdx, got {other:?}"),
        }
    }

    #[test]
    fn count_mismatch_detected() {
        let a = tiny_set(3);
        let b = tiny_set(4);
        let (ib, _) = to_idx_bytes(&a);
        let (_, lb) = to_idx_bytes(&b);
        match from_idx_bytes(&ib, &lb, "t") {
            Err(Error::IdxCountMismatch { images: 3, labels: 4 }) => {}
            other => panic!("expected IdxCountMismatch, got {other:?}"),
        }
    }

    #[test]
    fn binarize_all_zero() {
        let img = [0u8; IMAGE_PIXELS];
        assert!(binarize(&img).is_empty());
    }

    #[test]
    fn binarize_single_pixel() {
        let mut img = [0u8; IMAGE_PIXELS];
        img[0] = 1;
        assert_eq!(binarize(&img).indices(), &[0]);
    }

    #[test]
    fn binarize_idempotent_as_01_image() {
        let mut img = [0u8; IMAGE_PIXELS];
        for i in (0..IMAGE_PIXELS).step_by(7) {
            img[i] = (i % 200) as u8 + 1;
        }
        let first = binarize(&img);
        let mut as01 = [0u8; IMAGE_PIXELS];
        for &i in first.indices() {
            as01[i as usize] = 1;
        }
        assert_eq!(binarize(&as01), first);
    }

    #[test]
    fn split_deterministic_and_disjoint() {
        let plan = SplitPlan::new(42, 9, 1, 10);
        let set = tiny_set(10);
        let (e1, q1) = split(&set, &plan, 3).unwrap();
        let (e2, q2) = split(&set, &plan, 3).unwrap();
        assert_eq!(e1, e2);
        assert_eq!(q1, q2);
        assert!(q1.iter().all(|i| !e1.contains(i)));
        // full coverage when counts exhaust the pool
        let mut all: Vec<u32> = e1.iter().chain(q1.iter()).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<u32>>());
    }

    #[test]
    fn repeats_give_distinct_query_sets() {
        let plan = SplitPlan::new(7, 9000, 1000, 10);
        let mut queries = Vec::new();
        for r in 0..plan.repeats {
            let (_, q) = split_indices(10_000, &plan, r).unwrap();
            queries.push(q);
        }
        for i in 0..queries.len() {
            for j in (i + 1)..queries.len() {
                assert_ne!(queries[i], queries[j], "repeats {i} and {j} coincide");
            }
        }
    }

    #[test]
    fn split_errors() {
        let plan = SplitPlan::new(1, 9, 2, 3);
        assert!(matches!(split_indices(10, &plan, 0), Err(Error::InsufficientItems { .. })));
        let plan = SplitPlan::new(1, 5, 2, 3);
        assert!(matches!(split_indices(10, &plan, 3), Err(Error::RepeatOutOfRange { .. })));
    }

    #[test]
    fn balanced_subset_counts() {
        let set = tiny_set(100);
        let picked = balanced_subset(&set, 9, 5, &[1, 5]).unwrap();
        assert_eq!(picked.len(), 10);
        assert_eq!(picked.iter().filter(|&&i| set.labels[i as usize] == 1).count(), 5);
        assert_eq!(picked.iter().filter(|&&i| set.labels[i as usize] == 5).count(), 5);
    }
}
