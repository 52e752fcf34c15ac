//! Deterministic reader for the generator's 5x7 digit glyphs.
//!
//! Ink is every pixel far from the crop's median color. The ink bounding box
//! fixes the glyph scale (its height is seven cells); each one- and
//! two-digit layout covering the ink is then matched cell by cell against
//! the font, sampling cell centers. Confidence is the fraction of matching
//! cells of the best layout.

use crate::ingest::font::{cell, GLYPH_H, GLYPH_W};
use crate::ingest::Raster;

const MIN_CONTRAST: f64 = 60.0;

fn median(mut v: Vec<u8>) -> f64 {
    let mid = v.len() / 2;
    *v.select_nth_unstable(mid).1 as f64
}

struct InkMask {
    w: u32,
    h: u32,
    ink: Vec<bool>,
}

impl InkMask {
    fn from_raster(r: &Raster) -> Option<InkMask> {
        if r.width == 0 || r.height == 0 {
            return None;
        }
        let channel = |c: usize| r.data.iter().skip(c).step_by(3).copied().collect::<Vec<_>>();
        let bg = [median(channel(0)), median(channel(1)), median(channel(2))];
        let dist: Vec<f64> = r
            .data
            .chunks_exact(3)
            .map(|p| {
                (0..3)
                    .map(|c| (p[c] as f64 - bg[c]).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        let max = dist.iter().copied().fold(0.0, f64::max);
        if max < MIN_CONTRAST {
            return None;
        }
        let threshold = MIN_CONTRAST.max(0.5 * max);
        Some(InkMask {
            w: r.width,
            h: r.height,
            ink: dist.iter().map(|&d| d >= threshold).collect(),
        })
    }

    fn at(&self, x: u32, y: u32) -> bool {
        self.ink[(y * self.w + x) as usize]
    }

    fn bounds(&self) -> Option<(u32, u32, u32, u32)> {
        let mut b: Option<(u32, u32, u32, u32)> = None;
        for y in 0..self.h {
            for x in 0..self.w {
                if self.at(x, y) {
                    b = Some(match b {
                        None => (x, y, x, y),
                        Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
                    });
                }
            }
        }
        b
    }
}

/// Best `(digits, confidence)` for one layout of `n` digits at `origin`.
fn match_layout(mask: &InkMask, n: u32, scale: u32, ox: u32, oy: u32) -> (Vec<u8>, f64) {
    let sample = |col: u32, row: u32| {
        mask.at(ox + col * scale + scale / 2, oy + row * scale + scale / 2)
    };
    let mut matched = 0u32;
    let mut total = 0u32;
    let mut digits = Vec::with_capacity(n as usize);
    for slot in 0..n {
        let base = slot * (GLYPH_W + 1);
        let mut best = (0u8, 0u32);
        for d in 0..10u8 {
            let mut m = 0;
            for row in 0..GLYPH_H {
                for col in 0..GLYPH_W {
                    m += u32::from(sample(base + col, row) == cell(d, col, row));
                }
            }
            if m > best.1 {
                best = (d, m);
            }
        }
        digits.push(best.0);
        matched += best.1;
        total += GLYPH_W * GLYPH_H;
        if slot + 1 < n {
            for row in 0..GLYPH_H {
                matched += u32::from(!sample(base + GLYPH_W, row));
            }
            total += GLYPH_H;
        }
    }
    (digits, matched as f64 / total as f64)
}

/// Reads a rendered number from a crop, if one is found.
pub fn read_glyphs(crop: &Raster) -> Option<(String, f64)> {
    let mask = InkMask::from_raster(crop)?;
    let (x0, y0, x1, y1) = mask.bounds()?;
    let height = y1 - y0 + 1;
    if height % GLYPH_H != 0 {
        return None;
    }
    let scale = height / GLYPH_H;
    let ink_w = x1 - x0 + 1;
    let mut best: Option<(Vec<u8>, f64)> = None;
    for n in 1..=2u32 {
        let width = scale * (n * (GLYPH_W + 1) - 1);
        if width < ink_w || width > mask.w {
            continue;
        }
        let lo = (x1 + 1).saturating_sub(width);
        let hi = x0.min(mask.w - width);
        for ox in lo..=hi {
            let cand = match_layout(&mask, n, scale, ox, y0);
            if best.as_ref().is_none_or(|b| cand.1 > b.1) {
                best = Some(cand);
            }
        }
    }
    best.map(|(d, c)| (d.iter().map(|d| char::from(b'0' + d)).collect(), c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::font::{digits_of, ink_at, text_size};

    fn render(n: u8, scale: u32, bg: [u8; 3], ink: [u8; 3]) -> Raster {
        let mut r = Raster::new(40, 100, bg);
        let d = digits_of(n);
        let (tw, th) = text_size(d.len() as u32, scale);
        let (gx, gy) = ((40 - tw) / 2, 54);
        for y in 0..th {
            for x in 0..tw {
                if ink_at(&d, scale, x, y) {
                    r.set_pixel(gx + x, gy + y, ink);
                }
            }
        }
        r
    }

    #[test]
    fn reads_every_kit_number() {
        for n in 1..=99u8 {
            let r = render(n, 3, [200, 30, 30], [255, 255, 255]);
            let (digits, conf) = read_glyphs(&r).unwrap();
            assert_eq!(digits, n.to_string(), "kit {n}");
            assert_eq!(conf, 1.0);
        }
    }

    #[test]
    fn reads_at_scale_one_and_dark_ink() {
        let r = render(47, 1, [240, 240, 60], [0, 0, 0]);
        assert_eq!(read_glyphs(&r).unwrap(), ("47".to_string(), 1.0));
    }

    #[test]
    fn blank_crop_reads_nothing() {
        assert_eq!(read_glyphs(&Raster::new(40, 100, [10, 20, 30])), None);
    }
}
