//! Synthetic shape datasets with controlled duplication.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::image::ToyImage;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CaptionStyle {
    Specific,
    General,
}

fn default_side() -> usize {
    16
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub n_base: usize,
    pub dup_factor: usize,
    pub dup_fraction: f64,
    pub caption_style: CaptionStyle,
    #[serde(default = "default_side")]
    pub height: usize,
    #[serde(default = "default_side")]
    pub width: usize,
    #[serde(default)]
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_base == 0 {
            return Err(Error::contract("n_base must be at least 1"));
        }
        if self.dup_factor == 0 {
            return Err(Error::contract("dup_factor must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.dup_fraction) {
            return Err(Error::contract(format!(
                "dup_fraction {} outside [0, 1]",
                self.dup_fraction
            )));
        }
        if self.height < 4 || self.width < 4 {
            return Err(Error::contract("synthetic images need at least 4x4 pixels"));
        }
        Ok(())
    }

    pub fn duplicated_count(&self) -> usize {
        (self.dup_fraction * self.n_base as f64 - 1e-9).ceil().max(0.0) as usize
    }

    pub fn dataset_size(&self) -> usize {
        self.n_base + self.duplicated_count() * (self.dup_factor - 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSample {
    pub image: ToyImage,
    pub caption: String,
    /// Index of the distinct base image this sample copies.
    pub base: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub samples: Vec<SynthSample>,
    /// The distinct images, indexed by `SynthSample::base`.
    pub base_images: Vec<ToyImage>,
    pub base_captions: Vec<String>,
}

const INTENSITIES: [(&str, f32); 3] = [("bright", 1.0), ("medium", 0.75), ("dim", 0.5)];

struct Canvas {
    h: usize,
    w: usize,
    pixels: Vec<f32>,
}

impl Canvas {
    fn new(h: usize, w: usize) -> Self {
        Canvas {
            h,
            w,
            pixels: vec![0.0; h * w],
        }
    }

    fn paint(&mut self, value: f32, inside: impl Fn(f64, f64) -> bool) {
        for y in 0..self.h {
            for x in 0..self.w {
                if inside(x as f64 + 0.5, y as f64 + 0.5) {
                    self.pixels[y * self.w + x] = value;
                }
            }
        }
    }

    fn finish(self) -> ToyImage {
        ToyImage::new(self.h, self.w, self.pixels).expect("painted values lie in [0, 1]")
    }
}

fn base_shape(h: usize, w: usize, id: usize, rng: &mut ChaCha8Rng) -> (ToyImage, String, &'static str) {
    let (word, value) = INTENSITIES[rng.random_range(0..INTENSITIES.len())];
    let mut canvas = Canvas::new(h, w);
    let (caption, kind) = match rng.random_range(0..3) {
        0 => {
            let r = rng.random_range(2..=(h.min(w) / 3).max(2));
            let cx = rng.random_range(r..=w - r);
            let cy = rng.random_range(r..=h - r);
            let (fx, fy, fr) = (cx as f64, cy as f64, r as f64);
            canvas.paint(value, |x, y| (x - fx).powi(2) + (y - fy).powi(2) <= fr * fr);
            (format!("{word} circle at {cx},{cy} radius {r} id {id:05}"), "circle")
        }
        1 => {
            let rw = rng.random_range(3..=w / 2);
            let rh = rng.random_range(3..=h / 2);
            let x0 = rng.random_range(0..=w - rw);
            let y0 = rng.random_range(0..=h - rh);
            canvas.paint(value, |x, y| {
                x >= x0 as f64 && x < (x0 + rw) as f64 && y >= y0 as f64 && y < (y0 + rh) as f64
            });
            (format!("{word} rectangle at {x0},{y0} size {rw}x{rh} id {id:05}"), "rectangle")
        }
        _ => {
            let vertical = rng.random_bool(0.5);
            let span = if vertical { w } else { h };
            let width = rng.random_range(2..=4.min(span - 1));
            let pos = rng.random_range(0..=span - width);
            let (lo, hi) = (pos as f64, (pos + width) as f64);
            canvas.paint(value, |x, y| {
                let c = if vertical { x } else { y };
                c >= lo && c < hi
            });
            let dir = if vertical { "vertical" } else { "horizontal" };
            (format!("{word} {dir} stripe at {pos} width {width} id {id:05}"), "stripe")
        }
    };
    (canvas.finish(), caption, kind)
}

/// Builds the fine-tuning set. Base images come first in id order; each of
/// the first `ceil(dup_fraction * n_base)` images is followed by its
/// `dup_factor - 1` extra copies.
pub fn gen_synth_dataset(spec: &SynthSpec) -> Result<SynthDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut base_images = Vec::with_capacity(spec.n_base);
    let mut base_captions = Vec::with_capacity(spec.n_base);
    for id in 0..spec.n_base {
        let (image, specific, kind) = base_shape(spec.height, spec.width, id, &mut rng);
        base_images.push(image);
        base_captions.push(match spec.caption_style {
            CaptionStyle::Specific => specific,
            CaptionStyle::General => format!("a {kind}"),
        });
    }
    let dup = spec.duplicated_count();
    let mut samples = Vec::with_capacity(spec.dataset_size());
    for base in 0..spec.n_base {
        let copies = if base < dup { spec.dup_factor } else { 1 };
        for _ in 0..copies {
            samples.push(SynthSample {
                image: base_images[base].clone(),
                caption: base_captions[base].clone(),
                base,
            });
        }
    }
    Ok(SynthDataset {
        samples,
        base_images,
        base_captions,
    })
}

/// Shapes disjoint from the fine-tuning family (crosses, rings, triangles),
/// used as the fusion set. Each is drawn large over a random linear
/// gradient so that, like natural photographs, it fills the frame.
pub fn gen_fusion_dataset(n: usize, h: usize, w: usize, seed: u64) -> Result<Vec<(ToyImage, String)>> {
    if h < 8 || w < 8 {
        return Err(Error::contract("fusion images need at least 8x8 pixels"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let (fw, fh) = (w as f64, h as f64);
    let side = fw.min(fh);
    for _ in 0..n {
        let (_, value) = INTENSITIES[rng.random_range(0..INTENSITIES.len())];
        let base: f64 = rng.random_range(0.0..0.3);
        let gx: f64 = rng.random_range(-0.3..0.3);
        let gy: f64 = rng.random_range(-0.3..0.3);
        let mut canvas = Canvas::new(h, w);
        for y in 0..h {
            for x in 0..w {
                let v = base + 0.3 + gx * (x as f64 / fw - 0.5) + gy * (y as f64 / fh - 0.5);
                canvas.pixels[y * w + x] = v.clamp(0.0, 1.0) as f32;
            }
        }
        let cx = fw / 2.0 + rng.random_range(-0.15..0.15) * fw;
        let cy = fh / 2.0 + rng.random_range(-0.15..0.15) * fh;
        let kind = match rng.random_range(0..3) {
            0 => {
                let half_thick = rng.random_range(0.06..0.12) * side;
                canvas.paint(value, |x, y| (x - cx).abs() <= half_thick || (y - cy).abs() <= half_thick);
                "cross"
            }
            1 => {
                let outer = rng.random_range(0.3..0.45) * side;
                let thick = rng.random_range(0.1..0.18) * side;
                canvas.paint(value, |x, y| {
                    let d = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
                    d <= outer && d >= outer - thick
                });
                "ring"
            }
            _ => {
                let half = rng.random_range(0.3..0.45) * side;
                canvas.paint(value, |x, y| {
                    let dy = y - (cy - half);
                    dy >= 0.0 && dy <= 2.0 * half && (x - cx).abs() <= dy / 2.0
                });
                "triangle"
            }
        };
        out.push((canvas.finish(), format!("a {kind}")));
    }
    Ok(out)
}
