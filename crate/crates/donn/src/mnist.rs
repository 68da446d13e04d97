//! Loader for the classic IDX-format MNIST files.
//!
//! Both the images file (magic 2051) and the labels file (magic 2049) are
//! big-endian. Every header field is validated before any pixel is touched,
//! and each failure mode gets its own diagnostic: wrong magic, truncation,
//! bad image dimensions, or a count mismatch between the two files.

use std::path::Path;

use crate::error::{Error, Result};

pub const IMAGE_SIDE: usize = 28;
pub const IMAGE_PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;

const IMAGES_MAGIC: u32 = 2051;
const LABELS_MAGIC: u32 = 2049;

/// One 28x28 greyscale digit with its class label (0-9).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledImage {
    pub pixels: [u8; IMAGE_PIXELS],
    pub label: u8,
}

impl LabeledImage {
    /// Pixel at `(row, col)`, row-major from the top-left.
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * IMAGE_SIDE + col]
    }
}

/// Load an images/labels file pair into memory.
pub fn load_mnist(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<Vec<LabeledImage>> {
    let images_path = images_path.as_ref();
    let labels_path = labels_path.as_ref();
    let image_bytes =
        std::fs::read(images_path).map_err(|e| Error::io(images_path, e))?;
    let label_bytes =
        std::fs::read(labels_path).map_err(|e| Error::io(labels_path, e))?;

    let (image_count, pixels) = parse_images(images_path, &image_bytes)?;
    let labels = parse_labels(labels_path, &label_bytes)?;
    if image_count != labels.len() {
        return Err(Error::CountMismatch {
            images: image_count,
            labels: labels.len(),
        });
    }

    let mut out = Vec::with_capacity(image_count);
    for (i, &label) in labels.iter().enumerate() {
        if label > 9 {
            return Err(Error::Format {
                what: "label file",
                detail: format!("label {label} at index {i} is not a digit"),
            });
        }
        let mut image = [0u8; IMAGE_PIXELS];
        image.copy_from_slice(&pixels[i * IMAGE_PIXELS..(i + 1) * IMAGE_PIXELS]);
        out.push(LabeledImage {
            pixels: image,
            label,
        });
    }
    Ok(out)
}

fn read_u32(path: &Path, bytes: &[u8], offset: usize, what: &'static str) -> Result<u32> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(Error::Truncated {
            path: path.to_owned(),
            what,
            expected: end,
            found: bytes.len(),
        });
    }
    Ok(u32::from_be_bytes(bytes[offset..end].try_into().unwrap()))
}

fn parse_images<'a>(path: &Path, bytes: &'a [u8]) -> Result<(usize, &'a [u8])> {
    let magic = read_u32(path, bytes, 0, "images header")?;
    if magic != IMAGES_MAGIC {
        return Err(Error::WrongMagic {
            path: path.to_owned(),
            expected: IMAGES_MAGIC,
            found: magic,
        });
    }
    let count = read_u32(path, bytes, 4, "images header")? as usize;
    let rows = read_u32(path, bytes, 8, "images header")?;
    let cols = read_u32(path, bytes, 12, "images header")?;
    if rows != IMAGE_SIDE as u32 || cols != IMAGE_SIDE as u32 {
        return Err(Error::BadDimensions {
            path: path.to_owned(),
            rows,
            cols,
        });
    }
    let needed = 16 + count * IMAGE_PIXELS;
    if bytes.len() < needed {
        return Err(Error::Truncated {
            path: path.to_owned(),
            what: "image data",
            expected: needed,
            found: bytes.len(),
        });
    }
    Ok((count, &bytes[16..needed]))
}

fn parse_labels(path: &Path, bytes: &[u8]) -> Result<Vec<u8>> {
    let magic = read_u32(path, bytes, 0, "labels header")?;
    if magic != LABELS_MAGIC {
        return Err(Error::WrongMagic {
            path: path.to_owned(),
            expected: LABELS_MAGIC,
            found: magic,
        });
    }
    let count = read_u32(path, bytes, 4, "labels header")? as usize;
    let needed = 8 + count;
    if bytes.len() < needed {
        return Err(Error::Truncated {
            path: path.to_owned(),
            what: "label data",
            expected: needed,
            found: bytes.len(),
        });
    }
    Ok(bytes[8..needed].to_vec())
}

/// Count how often each digit occurs; handy for sanity-checking a dataset.
pub fn label_histogram(data: &[LabeledImage]) -> [usize; 10] {
    let mut histogram = [0usize; 10];
    for img in data {
        histogram[img.label as usize] += 1;
    }
    histogram
}

/// Serialise images and labels back into IDX bytes. Used by tests and by
/// tools that need small fixture datasets.
pub fn to_idx_bytes(data: &[LabeledImage]) -> (Vec<u8>, Vec<u8>) {
    let mut images = Vec::with_capacity(16 + data.len() * IMAGE_PIXELS);
    images.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    images.extend_from_slice(&(data.len() as u32).to_be_bytes());
    images.extend_from_slice(&(IMAGE_SIDE as u32).to_be_bytes());
    images.extend_from_slice(&(IMAGE_SIDE as u32).to_be_bytes());
    let mut labels = Vec::with_capacity(8 + data.len());
    labels.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    labels.extend_from_slice(&(data.len() as u32).to_be_bytes());
    for img in data {
        images.extend_from_slice(&img.pixels);
        labels.push(img.label);
    }
    (images, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;
    use tempfile::NamedTempFile;

    fn fixture(count: usize) -> Vec<LabeledImage> {
        (0..count)
            .map(|i| {
                let mut pixels = [0u8; IMAGE_PIXELS];
                for (j, p) in pixels.iter_mut().enumerate() {
                    *p = ((i * 31 + j * 7) % 256) as u8;
                }
                LabeledImage {
                    pixels,
                    label: (i % 10) as u8,
                }
            })
            .collect()
    }

    fn write_temp(bytes: &[u8]) -> NamedTempFile {
        let mut f = NamedTempFile::new().unwrap();
        f.write_all(bytes).unwrap();
        f
    }

    #[test]
    fn round_trips_through_idx_bytes() {
        let data = fixture(23);
        let (images, labels) = to_idx_bytes(&data);
        let fi = write_temp(&images);
        let fl = write_temp(&labels);
        let back = load_mnist(fi.path(), fl.path()).unwrap();
        assert_eq!(back, data);
        assert_eq!(label_histogram(&back)[2], 3); // indices 2, 12, 22
    }

    #[test]
    fn histogram_counts_labels() {
        let data = fixture(25);
        let h = label_histogram(&data);
        // 25 images cycling 0..9: digits 0-4 appear 3 times, 5-9 twice.
        assert_eq!(h[0], 3);
        assert_eq!(h[4], 3);
        assert_eq!(h[5], 2);
        assert_eq!(h.iter().sum::<usize>(), 25);
    }

    #[test]
    fn rejects_wrong_magic() {
        let data = fixture(2);
        let (mut images, labels) = to_idx_bytes(&data);
        images[3] = 99;
        let fi = write_temp(&images);
        let fl = write_temp(&labels);
        match load_mnist(fi.path(), fl.path()) {
            Err(Error::WrongMagic { expected, found, .. }) => {
                assert_eq!(expected, 2051);
                assert_ne!(found, 2051);
            }
            other => panic!("expected WrongMagic, got {other:?}"),
        }
    }

    #[test]
    fn rejects_truncated_pixels() {
        let data = fixture(3);
        let (images, labels) = to_idx_bytes(&data);
        let fi = write_temp(&images[..images.len() - 100]);
        let fl = write_temp(&labels);
        match load_mnist(fi.path(), fl.path()) {
            Err(Error::Truncated { what, .. }) => assert_eq!(what, "image data"),
            other => panic!("expected Truncated, got {other:?}"),
        }
    }

    #[test]
    fn rejects_truncated_header() {
        let fi = write_temp(&[0, 0, 8]);
        let fl = write_temp(&[0, 0, 7, 0xd1, 0, 0, 0, 0]);
        assert!(matches!(
            load_mnist(fi.path(), fl.path()),
            Err(Error::Truncated { .. })
        ));
    }

    #[test]
    fn rejects_count_mismatch() {
        let data = fixture(4);
        let (images, _) = to_idx_bytes(&data);
        let (_, labels) = to_idx_bytes(&fixture(5));
        let fi = write_temp(&images);
        let fl = write_temp(&labels);
        match load_mnist(fi.path(), fl.path()) {
            Err(Error::CountMismatch { images, labels }) => {
                assert_eq!((images, labels), (4, 5));
            }
            other => panic!("expected CountMismatch, got {other:?}"),
        }
    }

    #[test]
    fn rejects_unsupported_dimensions() {
        let data = fixture(2);
        let (mut images, labels) = to_idx_bytes(&data);
        images[11] = 32; // rows = 32
        let fi = write_temp(&images);
        let fl = write_temp(&labels);
        assert!(matches!(
            load_mnist(fi.path(), fl.path()),
            Err(Error::BadDimensions { rows: 32, .. })
        ));
    }

    #[test]
    fn rejects_out_of_range_labels() {
        let data = fixture(2);
        let (images, mut labels) = to_idx_bytes(&data);
        labels[9] = 11;
        let fi = write_temp(&images);
        let fl = write_temp(&labels);
        assert!(matches!(
            load_mnist(fi.path(), fl.path()),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn missing_file_reports_path() {
        let data = fixture(1);
        let (_, labels) = to_idx_bytes(&data);
        let fl = write_temp(&labels);
        let err = load_mnist("/nonexistent/images-idx3", fl.path()).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/images-idx3"));
    }
}
