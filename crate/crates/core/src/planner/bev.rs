//! Bird's-eye-view raster of the world around the ego.

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::sim::WorldState;

pub const BACKGROUND: Rgb<u8> = Rgb([40, 40, 40]);
pub const LANE_LINE: Rgb<u8> = Rgb([230, 230, 230]);
pub const EGO: Rgb<u8> = Rgb([40, 200, 60]);
pub const VEHICLE: Rgb<u8> = Rgb([60, 110, 230]);
pub const LABEL: Rgb<u8> = Rgb([255, 230, 0]);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BevConfig {
    pub width: u32,
    pub height: u32,
    /// Visible distance ahead of the ego [m].
    pub ahead: f64,
    /// Visible distance behind the ego [m].
    pub behind: f64,
    /// Extra lateral space beyond each road edge [m].
    pub margin: f64,
}

impl Default for BevConfig {
    fn default() -> Self {
        Self { width: 400, height: 120, ahead: 100.0, behind: 20.0, margin: 2.0 }
    }
}

/// Affine map between world metres and pixel coordinates for one frame.
/// `x` grows to the right; the leftmost lane is at the top.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BevFrame {
    pub x0: f64,
    pub y_top: f64,
    pub sx: f64,
    pub sy: f64,
}

impl BevFrame {
    pub fn new(world: &WorldState, cfg: &BevConfig) -> Self {
        let (y_min, y_max) = world.road.edges();
        let span = y_max - y_min + 2.0 * cfg.margin;
        Self {
            x0: world.ego.x - cfg.behind,
            y_top: y_max + cfg.margin,
            sx: cfg.width as f64 / (cfg.ahead + cfg.behind),
            sy: cfg.height as f64 / span,
        }
    }

    /// Continuous pixel coordinates of a world point.
    pub fn to_pixel(&self, x: f64, y: f64) -> (f64, f64) {
        ((x - self.x0) * self.sx, (self.y_top - y) * self.sy)
    }

    pub fn to_world(&self, px: f64, py: f64) -> (f64, f64) {
        (px / self.sx + self.x0, self.y_top - py / self.sy)
    }
}

// 3×5 digit glyphs, one row per byte, high bit on the left.
const DIGITS: [[u8; 5]; 10] = [
    [0b111, 0b101, 0b101, 0b101, 0b111],
    [0b010, 0b110, 0b010, 0b010, 0b111],
    [0b111, 0b001, 0b111, 0b100, 0b111],
    [0b111, 0b001, 0b111, 0b001, 0b111],
    [0b101, 0b101, 0b111, 0b001, 0b001],
    [0b111, 0b100, 0b111, 0b001, 0b111],
    [0b111, 0b100, 0b111, 0b101, 0b111],
    [0b111, 0b001, 0b001, 0b001, 0b001],
    [0b111, 0b101, 0b111, 0b101, 0b111],
    [0b111, 0b101, 0b111, 0b001, 0b111],
];

fn put(img: &mut RgbImage, x: i64, y: i64, c: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, c);
    }
}

/// Fills every pixel whose center lies inside the box.
fn fill_box(img: &mut RgbImage, (cx, cy): (f64, f64), (hw, hh): (f64, f64), c: Rgb<u8>) {
    let x_lo = (cx - hw - 0.5).ceil() as i64;
    let x_hi = (cx + hw - 0.5).floor() as i64;
    let y_lo = (cy - hh - 0.5).ceil() as i64;
    let y_hi = (cy + hh - 0.5).floor() as i64;
    for py in y_lo..=y_hi {
        for px in x_lo..=x_hi {
            put(img, px, py, c);
        }
    }
}

fn draw_label(img: &mut RgbImage, (cx, cy): (f64, f64), id: usize) {
    let text = id.to_string();
    let w = text.len() as i64 * 4 - 1;
    let left = cx.round() as i64 - w / 2;
    let top = cy.round() as i64 - 2;
    for (i, ch) in text.bytes().enumerate() {
        let glyph = DIGITS[(ch - b'0') as usize];
        for (row, bits) in glyph.iter().enumerate() {
            for col in 0..3 {
                if bits & (0b100 >> col) != 0 {
                    put(img, left + i as i64 * 4 + col, top + row as i64, LABEL);
                }
            }
        }
    }
}

/// Renders lanes, surrounding vehicles with their ids, and the ego.
pub fn render_bev(world: &WorldState, cfg: &BevConfig) -> RgbImage {
    let mut img = RgbImage::from_pixel(cfg.width, cfg.height, BACKGROUND);
    let frame = BevFrame::new(world, cfg);
    let road = &world.road;
    for b in 0..=road.lane_count {
        let y = road.center(0) - road.lane_width / 2.0 + b as f64 * road.lane_width;
        let py = frame.to_pixel(0.0, y).1.round() as i64;
        let dashed = b != 0 && b != road.lane_count;
        for px in 0..cfg.width as i64 {
            // Dashes are anchored to world x so they scroll with the scene.
            let wx = frame.to_world(px as f64 + 0.5, 0.0).0;
            if !dashed || wx.rem_euclid(12.0) < 6.0 {
                put(&mut img, px, py, LANE_LINE);
            }
        }
    }
    let half = (world.geometry.length / 2.0 * frame.sx, world.geometry.width / 2.0 * frame.sy);
    for v in &world.vehicles {
        let c = frame.to_pixel(v.x, v.y);
        fill_box(&mut img, c, half, VEHICLE);
        draw_label(&mut img, c, v.id);
    }
    fill_box(&mut img, frame.to_pixel(world.ego.x, world.ego.y), half, EGO);
    img
}
