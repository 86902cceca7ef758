//! Raster episode renders: one PNG per state, full grid plus FOV highlight.

use super::{Cell, Color, DoorState, GridError, GridState, Trajectory};
use image::{Rgb, RgbImage};
use std::path::{Path, PathBuf};

const SCALE: u32 = 16;

fn cell_color(cell: Cell) -> Rgb<u8> {
    match cell {
        Cell::Unseen => Rgb([40, 40, 40]),
        Cell::Floor => Rgb([228, 228, 228]),
        Cell::Wall => Rgb([90, 90, 90]),
        Cell::Lava => Rgb([255, 120, 30]),
        Cell::Goal => Rgb([60, 200, 80]),
        Cell::Key(c) => tint(c, 0.95),
        Cell::Door(c, DoorState::Open) => tint(c, 0.55),
        Cell::Door(c, DoorState::Closed) => tint(c, 0.8),
        Cell::Door(c, DoorState::Locked) => tint(c, 1.0),
    }
}

fn tint(c: Color, k: f32) -> Rgb<u8> {
    let base: [u8; 3] = match c {
        Color::Red => [220, 60, 60],
        Color::Green => [70, 190, 70],
        Color::Blue => [70, 110, 220],
        Color::Purple => [160, 80, 200],
        Color::Yellow => [230, 200, 50],
        Color::Grey => [150, 150, 150],
    };
    Rgb(base.map(|v| (v as f32 * k) as u8))
}

fn fill(img: &mut RgbImage, x: i32, y: i32, color: Rgb<u8>) {
    for dy in 1..SCALE - 1 {
        for dx in 1..SCALE - 1 {
            img.put_pixel(x as u32 * SCALE + dx, y as u32 * SCALE + dy, color);
        }
    }
}

fn draw_frame(state: &GridState) -> RgbImage {
    let w = state.layout.width * SCALE;
    let h = state.layout.height * SCALE;
    let mut img = RgbImage::from_pixel(w, h, Rgb([20, 20, 20]));
    for y in 0..state.layout.height as i32 {
        for x in 0..state.layout.width as i32 {
            fill(&mut img, x, y, cell_color(state.layout.get(x, y)));
        }
    }
    // FOV highlight: border the nine window cells in red.
    let (fx, fy) = state.agent_dir.delta();
    let (rx, ry) = state.agent_dir.turn_right().delta();
    for v in 0..3i32 {
        for u in 0..3i32 {
            let x = state.agent_pos.0 + fx * (2 - v) + rx * (u - 1);
            let y = state.agent_pos.1 + fy * (2 - v) + ry * (u - 1);
            if state.layout.in_bounds(x, y) {
                let (px, py) = (x as u32 * SCALE, y as u32 * SCALE);
                for d in 0..SCALE {
                    img.put_pixel(px + d, py, Rgb([220, 40, 40]));
                    img.put_pixel(px + d, py + SCALE - 1, Rgb([220, 40, 40]));
                    img.put_pixel(px, py + d, Rgb([220, 40, 40]));
                    img.put_pixel(px + SCALE - 1, py + d, Rgb([220, 40, 40]));
                }
            }
        }
    }
    // Agent marker: solid square in direction color, with a heading notch.
    let (ax, ay) = state.agent_pos;
    fill(&mut img, ax, ay, Rgb([200, 30, 30]));
    let cx = ax as u32 * SCALE + SCALE / 2;
    let cy = ay as u32 * SCALE + SCALE / 2;
    let (dx, dy) = state.agent_dir.delta();
    for k in 0..(SCALE / 2) as i32 {
        let px = cx as i32 + dx * k;
        let py = cy as i32 + dy * k;
        if px >= 0 && py >= 0 && (px as u32) < img.width() && (py as u32) < img.height() {
            img.put_pixel(px as u32, py as u32, Rgb([255, 255, 255]));
        }
    }
    img
}

/// Writes `frame_000.png`, `frame_001.png`, ... — one per logged state.
/// The state log must hold exactly one more entry than the trajectory has
/// steps (the initial state plus one per transition).
pub fn render_episode(
    trajectory: &Trajectory,
    state_log: &[GridState],
    out_dir: &Path,
) -> Result<Vec<PathBuf>, GridError> {
    if state_log.len() != trajectory.steps.len() + 1 {
        return Err(GridError::LengthMismatch {
            states: state_log.len(),
            expected: trajectory.steps.len() + 1,
        });
    }
    std::fs::create_dir_all(out_dir)?;
    let mut paths = Vec::with_capacity(state_log.len());
    for (i, state) in state_log.iter().enumerate() {
        let path = out_dir.join(format!("frame_{i:03}.png"));
        draw_frame(state)
            .save(&path)
            .map_err(|e| GridError::Format(format!("png encode: {e}")))?;
        paths.push(path);
    }
    Ok(paths)
}
