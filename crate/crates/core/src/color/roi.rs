//! Region of interest inside a player crop, and its mean color.

use crate::error::{Error, Result};
use crate::ingest::frames::{bbox_pixels, Raster, Rect};
use crate::model::{BBox, OffsetType, Rgb};

/// ROI in crop-local pixel coordinates.
///
/// `trim` drops a third of the width on each side, the top quarter and the
/// bottom half. `center` keeps a centered `w/3 x h/3` rectangle. `none` keeps
/// the whole crop. The result is never empty and always inside the crop.
pub fn roi_rect(bbox: &BBox, offset: OffsetType) -> Rect {
    let (_, _, w, h) = bbox_pixels(bbox);
    let (w, h) = (w as u32, h as u32);
    match offset {
        OffsetType::None => Rect::new(0, 0, w, h),
        OffsetType::Trim => {
            let (x, rw) = fit_span(w / 3, w - 2 * (w / 3), w);
            let (y, rh) = fit_span(h / 4, h / 2 - h / 4, h);
            Rect::new(x, y, rw, rh)
        }
        OffsetType::Center => {
            let cw = (w / 3).max(1);
            let ch = (h / 3).max(1);
            Rect::new((w - cw) / 2, (h - ch) / 2, cw, ch)
        }
    }
}

/// Clamps an (origin, length) pair to at least one pixel each while keeping
/// it inside `[0, total)`.
fn fit_span(origin: u32, len: u32, total: u32) -> (u32, u32) {
    let origin = origin.max(1).min(total - 1);
    let len = len.max(1).min(total - origin);
    (origin, len)
}

/// ROI of a detection in frame coordinates, clipped to the frame.
pub fn roi_frame_rect(bbox: &BBox, offset: OffsetType, width: u32, height: u32) -> Option<Rect> {
    let (x, y, _, _) = bbox_pixels(bbox);
    let roi = roi_rect(bbox, offset);
    Rect::clip_signed(
        x + roi.x as i64,
        y + roi.y as i64,
        roi.w as i64,
        roi.h as i64,
        width,
        height,
    )
}

/// Per-channel arithmetic mean over every pixel of a raster.
pub fn mean_color(r: &Raster) -> Rgb {
    let mut sum = [0u64; 3];
    for px in r.data.chunks_exact(3) {
        sum[0] += px[0] as u64;
        sum[1] += px[1] as u64;
        sum[2] += px[2] as u64;
    }
    let n = (r.width as u64 * r.height as u64).max(1) as f64;
    Rgb([sum[0] as f64 / n, sum[1] as f64 / n, sum[2] as f64 / n])
}

/// Mean color of a detection's ROI in a full frame.
pub fn avg_rgb(frame: &Raster, bbox: &BBox, offset: OffsetType) -> Result<Rgb> {
    let rect = roi_frame_rect(bbox, offset, frame.width, frame.height).ok_or(Error::OutOfFrame)?;
    Ok(mean_color(&frame.crop(rect)))
}
