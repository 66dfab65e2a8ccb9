//! Grayscale raster helpers: loading, saving, line drawing and sampling.
//!
//! Images use white ink (255) on a black background.

use std::path::Path;

pub use ::image::GrayImage;
use ::image::Luma;

use crate::error::{Error, Result};

pub const INK: u8 = 255;

pub fn blank(width: u32, height: u32) -> GrayImage {
    GrayImage::new(width, height)
}

/// Reads a PNG or binary PGM as 8-bit grayscale.
pub fn load(path: &Path) -> Result<GrayImage> {
    let img = ::image::open(path).map_err(|e| Error::file(path, e))?;
    Ok(img.into_luma8())
}

/// Writes PNG or binary PGM depending on the extension.
pub fn save(img: &GrayImage, path: &Path) -> Result<()> {
    img.save(path).map_err(|e| Error::file(path, e))
}

pub fn encode_png(img: &GrayImage) -> Result<Vec<u8>> {
    let mut buf = std::io::Cursor::new(Vec::new());
    img.write_to(&mut buf, ::image::ImageFormat::Png)?;
    Ok(buf.into_inner())
}

/// Integer midpoint (Bresenham) line between two pixel positions, endpoints included.
pub fn line_pixels(x0: i64, y0: i64, x1: i64, y1: i64) -> Vec<(i64, i64)> {
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    let (mut x, mut y) = (x0, y0);
    let mut out = Vec::with_capacity((dx.max(-dy) + 1) as usize);
    loop {
        out.push((x, y));
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}

/// Draws a line with a square brush of side `stroke`, clipped to the image.
pub fn draw_line(img: &mut GrayImage, from: (f64, f64), to: (f64, f64), stroke: u32, value: u8) {
    let stroke = stroke.max(1) as i64;
    let lo = -(stroke - 1) / 2;
    let hi = stroke / 2;
    let (w, h) = (img.width() as i64, img.height() as i64);
    let pts = line_pixels(from.0.round() as i64, from.1.round() as i64, to.0.round() as i64, to.1.round() as i64);
    for (x, y) in pts {
        for oy in lo..=hi {
            for ox in lo..=hi {
                let (px, py) = (x + ox, y + oy);
                if (0..w).contains(&px) && (0..h).contains(&py) {
                    img.put_pixel(px as u32, py as u32, Luma([value]));
                }
            }
        }
    }
}

/// Bilinear intensity in `[0, 1]` at a sub-pixel position; pixel centres sit
/// on integer coordinates and samples outside are clamped to the border.
pub fn bilinear(img: &GrayImage, x: f64, y: f64) -> f64 {
    let (w, h) = (img.width(), img.height());
    if w == 0 || h == 0 {
        return 0.0;
    }
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let x0 = x.floor() as u32;
    let y0 = y.floor() as u32;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let px = |x: u32, y: u32| img.get_pixel(x, y).0[0] as f64 / 255.0;
    let top = px(x0, y0) * (1.0 - fx) + px(x1, y0) * fx;
    let bottom = px(x0, y1) * (1.0 - fx) + px(x1, y1) * fx;
    top * (1.0 - fy) + bottom * fy
}

pub fn is_ink(img: &GrayImage, x: u32, y: u32) -> bool {
    img.get_pixel(x, y).0[0] > 127
}
