//! RGB8 rasters and frame sources.
//!
//! On disk a frame source is a directory of binary PPM (P6, maxval 255) files
//! named `frame_%06d.ppm`, numbered contiguously from 0.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::synth::SyntheticScene;
use crate::error::{Error, Result};
use crate::model::BBox;

/// Row-major RGB8 image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

/// Integer pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Rect { x, y, w, h }
    }

    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }

    pub fn is_empty(&self) -> bool {
        self.w == 0 || self.h == 0
    }

    /// Intersection of a signed rectangle with `[0, width) x [0, height)`.
    pub fn clip_signed(x: i64, y: i64, w: i64, h: i64, width: u32, height: u32) -> Option<Rect> {
        let x0 = x.max(0);
        let y0 = y.max(0);
        let x1 = (x + w).min(width as i64);
        let y1 = (y + h).min(height as i64);
        (x1 > x0 && y1 > y0).then(|| Rect::new(x0 as u32, y0 as u32, (x1 - x0) as u32, (y1 - y0) as u32))
    }

    /// Pixel rectangle covered by a bounding box, clipped to the frame.
    pub fn from_bbox(b: &BBox, width: u32, height: u32) -> Option<Rect> {
        let (x, y, w, h) = bbox_pixels(b);
        Rect::clip_signed(x, y, w, h, width, height)
    }
}

/// Integer crop geometry of a bounding box: floor of the origin and rounded
/// size (at least 1 pixel).
pub fn bbox_pixels(b: &BBox) -> (i64, i64, i64, i64) {
    (
        b.x.floor() as i64,
        b.y.floor() as i64,
        (b.w.round() as i64).max(1),
        (b.h.round() as i64).max(1),
    )
}

impl Raster {
    pub fn new(width: u32, height: u32, fill: [u8; 3]) -> Self {
        let n = width as usize * height as usize;
        let mut data = Vec::with_capacity(n * 3);
        for _ in 0..n {
            data.extend_from_slice(&fill);
        }
        Raster {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: u32, y: u32, c: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&c);
    }

    /// Copies a sub-rectangle; `rect` must lie inside the raster.
    pub fn crop(&self, rect: Rect) -> Raster {
        assert!(rect.right() <= self.width && rect.bottom() <= self.height);
        let mut data = Vec::with_capacity(rect.w as usize * rect.h as usize * 3);
        for y in rect.y..rect.bottom() {
            let start = (y as usize * self.width as usize + rect.x as usize) * 3;
            data.extend_from_slice(&self.data[start..start + rect.w as usize * 3]);
        }
        Raster {
            width: rect.w,
            height: rect.h,
            data,
        }
    }

    pub fn write_ppm<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "P6\n{} {}\n255\n", self.width, self.height)?;
        w.write_all(&self.data)
    }

    pub fn save_ppm(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::path(path, e))?;
        let mut w = std::io::BufWriter::new(f);
        self.write_ppm(&mut w).map_err(|e| Error::path(path, e))?;
        w.flush().map_err(|e| Error::path(path, e))
    }

    pub fn read_ppm<R: Read>(r: R) -> std::result::Result<Raster, String> {
        let mut r = BufReader::new(r);
        let header = read_ppm_header(&mut r)?;
        let mut data = vec![0u8; header.width as usize * header.height as usize * 3];
        r.read_exact(&mut data)
            .map_err(|_| "truncated pixel data".to_string())?;
        Ok(Raster {
            width: header.width,
            height: header.height,
            data,
        })
    }
}

struct PpmHeader {
    width: u32,
    height: u32,
    data_offset: u64,
}

fn read_ppm_header<R: BufRead>(r: &mut R) -> std::result::Result<PpmHeader, String> {
    let mut fields: Vec<String> = Vec::with_capacity(4);
    let mut offset = 0u64;
    let mut byte = [0u8; 1];
    let mut current = String::new();
    let mut in_comment = false;
    while fields.len() < 4 {
        if r.read(&mut byte).map_err(|e| e.to_string())? == 0 {
            return Err("truncated header".into());
        }
        offset += 1;
        let c = byte[0] as char;
        if in_comment {
            in_comment = c != '\n';
            continue;
        }
        if c == '#' && current.is_empty() {
            in_comment = true;
        } else if c.is_ascii_whitespace() {
            if !current.is_empty() {
                fields.push(std::mem::take(&mut current));
            }
        } else {
            current.push(c);
        }
    }
    if fields[0] != "P6" {
        return Err(format!("unsupported magic `{}` (expected P6)", fields[0]));
    }
    let width: u32 = fields[1].parse().map_err(|_| "bad width".to_string())?;
    let height: u32 = fields[2].parse().map_err(|_| "bad height".to_string())?;
    if fields[3] != "255" {
        return Err(format!("unsupported maxval {}", fields[3]));
    }
    Ok(PpmHeader {
        width,
        height,
        data_offset: offset,
    })
}

/// Directory of `frame_%06d.ppm` files.
#[derive(Debug, Clone)]
pub struct RasterDir {
    dir: PathBuf,
    count: u32,
    width: u32,
    height: u32,
}

pub fn frame_file_name(index: u32) -> String {
    format!("frame_{index:06}.ppm")
}

impl RasterDir {
    /// Opens a directory whose frames must all be `width x height`. Frames
    /// are counted contiguously from `frame_000000.ppm`.
    pub fn open(dir: impl Into<PathBuf>, width: u32, height: u32) -> Result<Self> {
        let dir = dir.into();
        if !dir.is_dir() {
            return Err(Error::path(
                &dir,
                std::io::Error::new(std::io::ErrorKind::NotFound, "frames directory not found"),
            ));
        }
        let mut count = 0u32;
        while dir.join(frame_file_name(count)).is_file() {
            count += 1;
        }
        Ok(RasterDir {
            dir,
            count,
            width,
            height,
        })
    }

    pub fn path_of(&self, index: u32) -> PathBuf {
        self.dir.join(frame_file_name(index))
    }

    fn check_index(&self, index: u32) -> Result<()> {
        if index >= self.count {
            return Err(Error::FrameOutOfRange {
                index,
                count: self.count,
            });
        }
        Ok(())
    }

    fn open_frame(&self, index: u32) -> Result<(BufReader<File>, PpmHeader, PathBuf)> {
        self.check_index(index)?;
        let path = self.path_of(index);
        let file = File::open(&path).map_err(|e| Error::FrameDecode {
            index,
            path: path.clone(),
            message: e.to_string(),
        })?;
        let mut r = BufReader::new(file);
        let header = read_ppm_header(&mut r).map_err(|message| Error::FrameDecode {
            index,
            path: path.clone(),
            message,
        })?;
        if header.width != self.width || header.height != self.height {
            return Err(Error::FrameDimensions {
                index,
                expected_w: self.width,
                expected_h: self.height,
                w: header.width,
                h: header.height,
            });
        }
        Ok((r, header, path))
    }

    pub fn read_frame(&self, index: u32) -> Result<Raster> {
        let (mut r, header, path) = self.open_frame(index)?;
        let mut data = vec![0u8; header.width as usize * header.height as usize * 3];
        r.read_exact(&mut data).map_err(|_| Error::FrameDecode {
            index,
            path,
            message: "truncated pixel data".into(),
        })?;
        Ok(Raster {
            width: header.width,
            height: header.height,
            data,
        })
    }

    /// Reads only the rows of `rect`, seeking past the rest of the file.
    pub fn read_region(&self, index: u32, rect: Rect) -> Result<Raster> {
        let (r, header, path) = self.open_frame(index)?;
        let mut file = r.into_inner();
        let row_bytes = rect.w as usize * 3;
        let mut data = vec![0u8; row_bytes * rect.h as usize];
        for (row, chunk) in data.chunks_exact_mut(row_bytes).enumerate() {
            let y = rect.y as u64 + row as u64;
            let pos = header.data_offset + (y * header.width as u64 + rect.x as u64) * 3;
            file.seek(SeekFrom::Start(pos))
                .and_then(|_| file.read_exact(chunk))
                .map_err(|_| Error::FrameDecode {
                    index,
                    path: path.clone(),
                    message: "truncated pixel data".into(),
                })?;
        }
        Ok(Raster {
            width: rect.w,
            height: rect.h,
            data,
        })
    }
}

/// Where frame pixels come from.
#[derive(Debug, Clone, Default)]
pub enum FrameSource {
    /// No pixels; stages fall back to values carried by the tracker records.
    #[default]
    None,
    RasterDir(RasterDir),
    /// Frames rendered on demand from a generated scene.
    Synthetic(Arc<SyntheticScene>),
}

impl FrameSource {
    pub fn frame_count(&self) -> u32 {
        match self {
            FrameSource::None => 0,
            FrameSource::RasterDir(d) => d.count,
            FrameSource::Synthetic(s) => s.frame_count(),
        }
    }

    pub fn dimensions(&self) -> Option<(u32, u32)> {
        match self {
            FrameSource::None => None,
            FrameSource::RasterDir(d) => Some((d.width, d.height)),
            FrameSource::Synthetic(s) => Some(s.dimensions()),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, FrameSource::None)
    }

    pub fn read_frame(&self, index: u32) -> Result<Raster> {
        match self {
            FrameSource::None => Err(Error::NoFrames),
            FrameSource::RasterDir(d) => d.read_frame(index),
            FrameSource::Synthetic(s) => {
                let (w, h) = s.dimensions();
                s.render_region(index, Rect::new(0, 0, w, h))
            }
        }
    }

    /// Reads the pixels of `rect`, which must lie inside the frame.
    pub fn read_region(&self, index: u32, rect: Rect) -> Result<Raster> {
        if let Some((w, h)) = self.dimensions() {
            assert!(rect.right() <= w && rect.bottom() <= h, "region outside frame");
        }
        match self {
            FrameSource::None => Err(Error::NoFrames),
            FrameSource::RasterDir(d) => d.read_region(index, rect),
            FrameSource::Synthetic(s) => s.render_region(index, rect),
        }
    }

    /// Writes every frame as PPM into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::path(dir, e))?;
        for i in 0..self.frame_count() {
            self.read_frame(i)?.save_ppm(&dir.join(frame_file_name(i)))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(w: u32, h: u32) -> Raster {
        let mut r = Raster::new(w, h, [0, 0, 0]);
        for y in 0..h {
            for x in 0..w {
                r.set_pixel(x, y, [x as u8, y as u8, (x + y) as u8]);
            }
        }
        r
    }

    #[test]
    fn ppm_round_trip_and_region_reads() {
        let dir = tempfile::tempdir().unwrap();
        let frames = [gradient(16, 9), Raster::new(16, 9, [9, 8, 7])];
        for (i, f) in frames.iter().enumerate() {
            f.save_ppm(&dir.path().join(frame_file_name(i as u32))).unwrap();
        }
        let src = FrameSource::RasterDir(RasterDir::open(dir.path(), 16, 9).unwrap());
        assert_eq!(src.frame_count(), 2);
        assert_eq!(src.read_frame(0).unwrap(), frames[0]);
        let rect = Rect::new(3, 2, 5, 4);
        assert_eq!(src.read_region(0, rect).unwrap(), frames[0].crop(rect));
        assert!(matches!(
            src.read_frame(2),
            Err(Error::FrameOutOfRange { index: 2, count: 2 })
        ));
    }

    #[test]
    fn dimension_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        gradient(8, 8)
            .save_ppm(&dir.path().join(frame_file_name(0)))
            .unwrap();
        let src = RasterDir::open(dir.path(), 16, 9).unwrap();
        assert!(matches!(
            src.read_frame(0),
            Err(Error::FrameDimensions { w: 8, h: 8, .. })
        ));
    }

    #[test]
    fn truncated_file_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(frame_file_name(0));
        let mut bytes = Vec::new();
        gradient(16, 9).write_ppm(&mut bytes).unwrap();
        bytes.truncate(bytes.len() - 10);
        std::fs::write(&path, bytes).unwrap();
        let src = RasterDir::open(dir.path(), 16, 9).unwrap();
        let err = src.read_frame(0).unwrap_err();
        assert!(matches!(err, Error::FrameDecode { index: 0, .. }));
        assert!(err.to_string().contains("frame_000000.ppm"), "{err}");
    }

    #[test]
    fn header_with_comment() {
        let bytes = b"P6\n# made by hand\n2 1\n255\n\x01\x02\x03\x04\x05\x06";
        let r = Raster::read_ppm(&bytes[..]).unwrap();
        assert_eq!(r.pixel(1, 0), [4, 5, 6]);
        assert!(Raster::read_ppm(&b"P3\n1 1\n255\n"[..]).is_err());
    }

    #[test]
    fn bbox_clipping() {
        let b = BBox::new(-5.0, -5.0, 10.0, 10.0);
        assert_eq!(Rect::from_bbox(&b, 100, 100), Some(Rect::new(0, 0, 5, 5)));
        let outside = BBox::new(200.0, 0.0, 10.0, 10.0);
        assert_eq!(Rect::from_bbox(&outside, 100, 100), None);
    }
}
