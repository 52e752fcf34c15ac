//! Fixed 5x7 bitmap digits used for kit numbers on synthetic players.
//!
//! A rendered number of `n` digits at integer `scale` occupies
//! `scale * (6n - 1)` by `scale * 7` pixels: one blank column between digits.

pub const GLYPH_W: u32 = 5;
pub const GLYPH_H: u32 = 7;

#[rustfmt::skip]
const DIGITS: [[u8; 7]; 10] = [
    [0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110],
    [0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110],
    [0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111],
    [0b11111, 0b00010, 0b00100, 0b00010, 0b00001, 0b10001, 0b01110],
    [0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010],
    [0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110],
    [0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110],
    [0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000],
    [0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110],
    [0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100],
];

/// Whether cell `(col, row)` of `digit` is inked.
pub fn cell(digit: u8, col: u32, row: u32) -> bool {
    debug_assert!(digit < 10 && col < GLYPH_W && row < GLYPH_H);
    DIGITS[digit as usize][row as usize] >> (GLYPH_W - 1 - col) & 1 == 1
}

/// Pixel size of `n_digits` rendered at `scale`.
pub fn text_size(n_digits: u32, scale: u32) -> (u32, u32) {
    let cols = if n_digits == 0 { 0 } else { n_digits * (GLYPH_W + 1) - 1 };
    (cols * scale, GLYPH_H * scale)
}

/// Whether local pixel `(x, y)` of the rendered `digits` is inked.
pub fn ink_at(digits: &[u8], scale: u32, x: u32, y: u32) -> bool {
    let (cx, cy) = (x / scale, y / scale);
    if cy >= GLYPH_H {
        return false;
    }
    let slot = cx / (GLYPH_W + 1);
    let col = cx % (GLYPH_W + 1);
    if slot as usize >= digits.len() || col == GLYPH_W {
        return false;
    }
    cell(digits[slot as usize], col, cy)
}

/// Decimal digits of a number, most significant first.
pub fn digits_of(n: u8) -> Vec<u8> {
    if n >= 10 {
        vec![n / 10, n % 10]
    } else {
        vec![n]
    }
}
