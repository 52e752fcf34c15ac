//! Tracker record lines:
//!
//! ```text
//! <frame> <track_id> <x> <y> <w> <h> <conf> [<r> <g> <b>] <brisque> <iou> [<team_id> <kit_number>]
//! ```
//!
//! The color triple accepts comma or whitespace separators, and `[]` marks a
//! record without a mean color. The trailing team/kit pair is optional; `-1`
//! means unset.

use std::fmt::Write as _;

use super::{BBox, Detection, KitNumber, Rgb, TeamSide};
use crate::error::{Error, Result};

pub fn parse_tracker_output(text: &str) -> Result<Vec<Detection>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(parse_line(line).map_err(|m| Error::parse(i + 1, m))?);
    }
    Ok(out)
}

fn parse_line(line: &str) -> std::result::Result<Detection, String> {
    let open = line.find('[').ok_or("missing `[r g b]` color group")?;
    let close = line[open..]
        .find(']')
        .map(|p| p + open)
        .ok_or("unterminated color group")?;
    let head: Vec<&str> = line[..open].split_whitespace().collect();
    let color: Vec<&str> = line[open + 1..close]
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect();
    let tail: Vec<&str> = line[close + 1..].split_whitespace().collect();

    if head.len() != 7 {
        return Err(format!(
            "expected 7 fields before the color group, found {}",
            head.len()
        ));
    }
    if tail.len() != 2 && tail.len() != 4 {
        return Err(format!(
            "expected 2 or 4 fields after the color group, found {}",
            tail.len()
        ));
    }

    let frame = int_field(head[0], "frame")?;
    let track_id = int_field(head[1], "track_id")?;
    if track_id < 1 {
        return Err("track_id must be >= 1".into());
    }
    let x = real_field(head[2], "x")?;
    let y = real_field(head[3], "y")?;
    let w = real_field(head[4], "w")?;
    let h = real_field(head[5], "h")?;
    if w <= 0.0 {
        return Err(format!("non-positive width {w}"));
    }
    if h <= 0.0 {
        return Err(format!("non-positive height {h}"));
    }
    let conf = real_field(head[6], "conf")?;
    if !(0.0..=1.0).contains(&conf) {
        return Err(format!("conf {conf} outside [0, 1]"));
    }

    let avg_rgb = match color.len() {
        0 => None,
        3 => {
            let mut c = [0.0; 3];
            for (slot, tok) in c.iter_mut().zip(&color) {
                *slot = real_field(tok, "color channel")?;
            }
            let rgb = Rgb(c);
            if !rgb.is_valid() {
                return Err("color channel outside [0, 255]".into());
            }
            Some(rgb)
        }
        n => return Err(format!("color group must hold 3 channels, found {n}")),
    };

    let brisque = real_field(tail[0], "brisque")?;
    if brisque < 0.0 {
        return Err(format!("negative brisque score {brisque}"));
    }
    let iou_sum = real_field(tail[1], "iou")?;
    if iou_sum < 0.0 {
        return Err(format!("negative iou {iou_sum}"));
    }

    let (team_id, kit_number) = if tail.len() == 4 {
        let team: i64 = tail[2]
            .parse()
            .map_err(|_| format!("bad team_id `{}`", tail[2]))?;
        let team_id = match team {
            -1 => None,
            t => Some(TeamSide::from_index(t).ok_or(format!("team_id {t} not in {{-1, 0, 1}}"))?),
        };
        let kit_number = match tail[3] {
            "-1" => None,
            k => Some(KitNumber::parse(k).ok_or(format!("kit_number `{k}` not in 1..=99"))?),
        };
        (team_id, kit_number)
    } else {
        (None, None)
    };

    Ok(Detection {
        frame,
        track_id,
        bbox: BBox { x, y, w, h },
        conf,
        avg_rgb,
        brisque,
        iou_sum,
        team_id,
        kit_number,
    })
}

fn int_field(tok: &str, name: &str) -> std::result::Result<u32, String> {
    tok.parse().map_err(|_| format!("bad {name} `{tok}`"))
}

fn real_field(tok: &str, name: &str) -> std::result::Result<f64, String> {
    let v: f64 = tok.parse().map_err(|_| format!("bad {name} `{tok}`"))?;
    if !v.is_finite() {
        return Err(format!("non-finite {name}"));
    }
    Ok(v)
}

/// Formats one record line. Floats use the shortest representation that
/// parses back to the same value.
pub fn format_detection(d: &Detection) -> String {
    let mut s = String::with_capacity(96);
    let b = &d.bbox;
    let _ = write!(
        s,
        "{} {} {} {} {} {} {} ",
        d.frame, d.track_id, b.x, b.y, b.w, b.h, d.conf
    );
    match d.avg_rgb {
        Some(Rgb([r, g, bl])) => {
            let _ = write!(s, "[{r} {g} {bl}]");
        }
        None => s.push_str("[]"),
    }
    let _ = write!(
        s,
        " {} {} {} {}",
        d.brisque,
        d.iou_sum,
        d.team_id.map_or(-1, |t| t.index()),
        d.kit_number.map_or(-1, |k| k.get() as i32)
    );
    s
}

pub fn format_tracker_output(detections: &[Detection]) -> String {
    let mut s = String::new();
    for d in detections {
        s.push_str(&format_detection(d));
        s.push('\n');
    }
    s
}
