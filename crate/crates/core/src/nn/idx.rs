//! Readers and writers for the IDX format used by MNIST-style datasets.
//!
//! Images: magic `0x00000803`, big-endian u32 count, rows, cols, then one
//! unsigned byte per pixel. Labels: magic `0x00000801`, count, one byte each.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::data::Dataset;
use crate::error::{Error, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_be_bytes(b))
}

/// Returns `(count, rows, cols, pixels)`.
pub fn read_images(r: &mut impl Read) -> Result<(usize, usize, usize, Vec<u8>)> {
    let magic = read_u32(r)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::Format(format!("bad IDX image magic {magic:#010x}")));
    }
    let count = read_u32(r)? as usize;
    let rows = read_u32(r)? as usize;
    let cols = read_u32(r)? as usize;
    let mut pixels = vec![0u8; count * rows * cols];
    r.read_exact(&mut pixels)?;
    Ok((count, rows, cols, pixels))
}

pub fn read_labels(r: &mut impl Read) -> Result<Vec<u8>> {
    let magic = read_u32(r)?;
    if magic != LABELS_MAGIC {
        return Err(Error::Format(format!("bad IDX label magic {magic:#010x}")));
    }
    let count = read_u32(r)? as usize;
    let mut labels = vec![0u8; count];
    r.read_exact(&mut labels)?;
    Ok(labels)
}

/// Loads an image/label file pair, scaling pixels to `[0, 1]`. `limit`
/// keeps only the first samples.
pub fn load(images: &Path, labels: &Path, limit: Option<usize>) -> Result<Dataset> {
    let (count, rows, cols, pixels) = read_images(&mut BufReader::new(File::open(images)?))?;
    let labels = read_labels(&mut BufReader::new(File::open(labels)?))?;
    if labels.len() != count {
        return Err(Error::Format(format!(
            "{count} images but {} labels",
            labels.len()
        )));
    }
    let keep = limit.unwrap_or(count).min(count);
    let dim = rows * cols;
    let inputs = pixels[..keep * dim]
        .iter()
        .map(|&p| f64::from(p) / 255.0)
        .collect();
    let labels: Vec<usize> = labels[..keep].iter().map(|&l| usize::from(l)).collect();
    let classes = labels.iter().max().map_or(1, |m| m + 1).max(2);
    Dataset::new(dim, inputs, labels, classes)?.with_image_shape(rows, cols, 1)
}

/// Writes a single-channel image dataset, quantizing `[0, 1]` to bytes.
pub fn save(dataset: &Dataset, images: &Path, labels: &Path) -> Result<()> {
    let (rows, cols, channels) = dataset
        .image_shape
        .ok_or_else(|| Error::Format("dataset has no image shape".into()))?;
    if channels != 1 {
        return Err(Error::Format("IDX export supports one channel".into()));
    }
    let mut w = BufWriter::new(File::create(images)?);
    for v in [IMAGES_MAGIC, dataset.len() as u32, rows as u32, cols as u32] {
        w.write_all(&v.to_be_bytes())?;
    }
    for i in 0..dataset.len() {
        let bytes: Vec<u8> = dataset
            .sample(i)
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        w.write_all(&bytes)?;
    }
    w.flush()?;
    let mut w = BufWriter::new(File::create(labels)?);
    w.write_all(&LABELS_MAGIC.to_be_bytes())?;
    w.write_all(&(dataset.len() as u32).to_be_bytes())?;
    let bytes: Vec<u8> = dataset.labels().iter().map(|&l| l as u8).collect();
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}
