//! Single-channel images with pixels in `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::tensor::Tensor;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyImage {
    h: usize,
    w: usize,
    pixels: Vec<f32>,
}

impl ToyImage {
    pub fn new(h: usize, w: usize, pixels: Vec<f32>) -> Result<Self> {
        if h == 0 || w == 0 {
            return Err(Error::contract("image dimensions must be positive"));
        }
        if pixels.len() != h * w {
            return Err(Error::DimensionMismatch {
                expected: h * w,
                actual: pixels.len(),
            });
        }
        if let Some(bad) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::contract(format!("pixel value {bad} outside [0, 1]")));
        }
        Ok(ToyImage { h, w, pixels })
    }

    pub fn filled(h: usize, w: usize, value: f32) -> Result<Self> {
        ToyImage::new(h, w, vec![value; h * w])
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    pub fn get(&self, y: usize, x: usize) -> f32 {
        self.pixels[y * self.w + x]
    }
}

/// Packs same-sized images into an `n x h x w` tensor.
pub fn images_to_tensor(images: &[ToyImage]) -> Result<Tensor> {
    let first = images
        .first()
        .ok_or_else(|| Error::contract("no images to pack"))?;
    let (h, w) = (first.h, first.w);
    let mut data = Vec::with_capacity(images.len() * h * w);
    for img in images {
        if (img.h, img.w) != (h, w) {
            return Err(Error::contract("images differ in size"));
        }
        data.extend_from_slice(&img.pixels);
    }
    Tensor::new(vec![images.len(), h, w], data)
}

pub fn tensor_to_images(tensor: &Tensor) -> Result<Vec<ToyImage>> {
    let dims = tensor.dims();
    let (n, h, w) = match *dims {
        [n, h, w] => (n, h, w),
        [h, w] => (1, h, w),
        _ => {
            return Err(Error::format(format!(
                "expected an n x h x w image tensor, got dims {dims:?}"
            )))
        }
    };
    if h * w == 0 {
        return Ok(Vec::new());
    }
    (0..n)
        .map(|i| ToyImage::new(h, w, tensor.data()[i * h * w..(i + 1) * h * w].to_vec()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_pixels() {
        assert!(ToyImage::new(1, 2, vec![0.0, 1.5]).is_err());
        assert!(ToyImage::new(1, 2, vec![0.0]).is_err());
    }

    #[test]
    fn tensor_packing() {
        let imgs = vec![ToyImage::filled(2, 3, 0.25).unwrap(), ToyImage::filled(2, 3, 1.0).unwrap()];
        let t = images_to_tensor(&imgs).unwrap();
        assert_eq!(t.dims(), &[2, 2, 3]);
        assert_eq!(tensor_to_images(&t).unwrap(), imgs);
    }
}
