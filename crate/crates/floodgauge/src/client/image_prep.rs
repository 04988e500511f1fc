//! Image validation, downscaling, and content hashing.

use std::io::Cursor;

use image::{ImageFormat, ImageReader};
use sha2::{Digest, Sha256};

use super::LmmError;

/// Images longer than this on their long edge are downscaled before upload.
pub const MAX_LONG_EDGE_PX: u32 = 2048;

/// Bytes as they will be sent to the provider, plus their identity hash.
///
/// The hash covers the post-resize bytes, so cache keys and run records agree
/// regardless of the original file size.
#[derive(Debug, Clone)]
pub struct PreparedImage {
    pub bytes: Vec<u8>,
    pub media_type: &'static str,
    pub hash: String,
    pub width: u32,
    pub height: u32,
    pub resized: bool,
}

/// Decodes a JPEG or PNG under `max_bytes`, downscaling when the long edge
/// exceeds [`MAX_LONG_EDGE_PX`]. Unchanged images keep their original bytes
/// (and therefore their original hash).
pub fn prepare_image(bytes: &[u8], max_bytes: usize) -> Result<PreparedImage, LmmError> {
    if bytes.len() > max_bytes {
        return Err(LmmError::ImageTooLarge {
            size: bytes.len(),
            cap: max_bytes,
        });
    }
    let format = image::guess_format(bytes).map_err(|e| LmmError::ImageDecode(e.to_string()))?;
    let media_type = match format {
        ImageFormat::Png => "image/png",
        ImageFormat::Jpeg => "image/jpeg",
        other => {
            return Err(LmmError::ImageDecode(format!(
                "unsupported format {other:?}: only JPEG and PNG are accepted"
            )))
        }
    };
    let decoded = ImageReader::with_format(Cursor::new(bytes), format)
        .decode()
        .map_err(|e| LmmError::ImageDecode(e.to_string()))?;

    let (w, h) = (decoded.width(), decoded.height());
    let (out_bytes, width, height, resized) = if w.max(h) > MAX_LONG_EDGE_PX {
        let scaled = decoded.resize(
            MAX_LONG_EDGE_PX,
            MAX_LONG_EDGE_PX,
            image::imageops::FilterType::Triangle,
        );
        let mut buf = Vec::new();
        scaled
            .write_to(&mut Cursor::new(&mut buf), format)
            .map_err(|e| LmmError::ImageDecode(format!("re-encode failed: {e}")))?;
        (buf, scaled.width(), scaled.height(), true)
    } else {
        (bytes.to_vec(), w, h, false)
    };

    let hash = hex::encode(Sha256::digest(&out_bytes));
    Ok(PreparedImage {
        bytes: out_bytes,
        media_type,
        hash,
        width,
        height,
        resized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn png_of(w: u32, h: u32) -> Vec<u8> {
        let img = image::RgbImage::from_fn(w, h, |x, y| {
            image::Rgb([(x % 251) as u8, (y % 241) as u8, 7])
        });
        let mut out = Vec::new();
        image::DynamicImage::ImageRgb8(img)
            .write_to(&mut Cursor::new(&mut out), ImageFormat::Png)
            .unwrap();
        out
    }

    #[test]
    fn small_image_passes_through_unchanged() {
        let bytes = png_of(64, 32);
        let prepared = prepare_image(&bytes, usize::MAX).unwrap();
        assert!(!prepared.resized);
        assert_eq!(prepared.bytes, bytes);
        assert_eq!(prepared.media_type, "image/png");
        assert_eq!((prepared.width, prepared.height), (64, 32));
    }

    #[test]
    fn oversized_long_edge_is_downscaled() {
        let bytes = png_of(2600, 80);
        let prepared = prepare_image(&bytes, usize::MAX).unwrap();
        assert!(prepared.resized);
        assert_eq!(prepared.width, MAX_LONG_EDGE_PX);
        assert!(prepared.height < 80);
        assert_ne!(prepared.bytes, bytes);
    }

    #[test]
    fn hashing_is_stable_for_identical_input() {
        let bytes = png_of(16, 16);
        let a = prepare_image(&bytes, usize::MAX).unwrap();
        let b = prepare_image(&bytes, usize::MAX).unwrap();
        assert_eq!(a.hash, b.hash);
    }

    #[test]
    fn byte_cap_is_enforced() {
        let bytes = png_of(64, 64);
        let err = prepare_image(&bytes, 10).unwrap_err();
        assert!(matches!(err, LmmError::ImageTooLarge { cap: 10, .. }));
    }

    #[test]
    fn garbage_and_unsupported_formats_are_rejected() {
        assert!(matches!(
            prepare_image(b"plainly not an image", usize::MAX).unwrap_err(),
            LmmError::ImageDecode(_)
        ));
        // a BMP header should be refused even though the image crate can read it
        let img = image::RgbImage::from_fn(4, 4, |_, _| image::Rgb([1, 2, 3]));
        let mut bmp = Vec::new();
        image::DynamicImage::ImageRgb8(img)
            .write_to(&mut Cursor::new(&mut bmp), ImageFormat::Bmp)
            .unwrap();
        assert!(matches!(
            prepare_image(&bmp, usize::MAX).unwrap_err(),
            LmmError::ImageDecode(_)
        ));
    }
}
