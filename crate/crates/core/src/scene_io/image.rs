//! Sample accumulation, display resolve and binary PPM output.

use crate::geometry::Vec3;
use std::io::{self, Write};
use thiserror::Error;

/// Per-pixel running sums `(r, g, b, sample count)` in linear units,
/// row 0 at the top.
#[derive(Debug, Clone, PartialEq)]
pub struct AccumBuffer {
    width: u32,
    height: u32,
    data: Vec<[f64; 4]>,
}

impl AccumBuffer {
    pub fn new(width: u32, height: u32) -> Self {
        AccumBuffer {
            width,
            height,
            data: vec![[0.0; 4]; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[[f64; 4]] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [[f64; 4]] {
        &mut self.data
    }

    fn index(&self, x: u32, y: u32) -> usize {
        assert!(x < self.width && y < self.height, "pixel ({x}, {y}) out of bounds");
        y as usize * self.width as usize + x as usize
    }

    pub fn add_sample(&mut self, x: u32, y: u32, radiance: Vec3) {
        let i = self.index(x, y);
        let px = &mut self.data[i];
        px[0] += radiance.x;
        px[1] += radiance.y;
        px[2] += radiance.z;
        px[3] += 1.0;
    }

    /// Mean radiance, `None` before the first sample.
    pub fn mean(&self, x: u32, y: u32) -> Option<Vec3> {
        let [r, g, b, n] = self.data[self.index(x, y)];
        (n > 0.0).then(|| Vec3::new(r, g, b) / n)
    }

    /// Row-major means of all pixels.
    pub fn means(&self) -> Option<Vec<Vec3>> {
        self.data
            .iter()
            .map(|&[r, g, b, n]| (n > 0.0).then(|| Vec3::new(r, g, b) / n))
            .collect()
    }
}

/// 8-bit RGB image, rows top to bottom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl Image {
    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        let i = 3 * (y as usize * self.width as usize + x as usize);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ResolveError {
    #[error("pixel ({x}, {y}) has no samples")]
    ZeroSamples { x: u32, y: u32 },
}

pub const DISPLAY_GAMMA: f64 = 2.2;

/// Maps one linear value to a byte. NaN maps to 0.
#[inline]
pub fn encode_channel(v: f64, gamma_encode: bool) -> u8 {
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    let v = if gamma_encode { v.powf(1.0 / DISPLAY_GAMMA) } else { v };
    (255.0 * v).round() as u8
}

/// Averages, clamps to `[0, 1]`, optionally gamma encodes and quantizes.
pub fn resolve(acc: &AccumBuffer, gamma_encode: bool) -> Result<Image, ResolveError> {
    let mut pixels = Vec::with_capacity(acc.data.len() * 3);
    for (i, &[r, g, b, n]) in acc.data.iter().enumerate() {
        if !(n > 0.0) {
            let w = acc.width as usize;
            return Err(ResolveError::ZeroSamples {
                x: (i % w) as u32,
                y: (i / w) as u32,
            });
        }
        pixels.extend([r, g, b].map(|c| encode_channel(c / n, gamma_encode)));
    }
    Ok(Image {
        width: acc.width,
        height: acc.height,
        pixels,
    })
}

/// Writes `P6\n{w} {h}\n255\n` followed by the raw RGB bytes.
pub fn write_ppm<W: Write>(image: &Image, sink: &mut W) -> io::Result<()> {
    write!(sink, "P6\n{} {}\n255\n", image.width, image.height)?;
    sink.write_all(&image.pixels)?;
    sink.flush()
}
