use std::fmt::Write;

use crate::apps::{Obstacle, ObstacleSet};
use crate::io::fmt_g;

/// Stage colors in order: original, first stage, second stage, final.
pub const STAGE_COLORS: [&str; 4] = ["red", "blue", "green", "magenta"];

#[derive(Clone, Debug)]
pub enum PlotLayer {
    Path { points: Vec<[f64; 2]>, color: String, width: f64 },
    Marker { at: [f64; 2], color: String },
    Obstacles(ObstacleSet),
}

const SIZE: f64 = 800.0;
const MARGIN: f64 = 20.0;

/// Render the layers on an equal-aspect canvas with +y up.
pub fn svg(layers: &[PlotLayer]) -> String {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    let mut grow = |p: [f64; 2]| {
        for i in 0..2 {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    };
    for layer in layers {
        match layer {
            PlotLayer::Path { points, .. } => points.iter().for_each(|p| grow(*p)),
            PlotLayer::Marker { at, .. } => grow(*at),
            PlotLayer::Obstacles(set) => {
                for o in &set.obstacles {
                    match o {
                        Obstacle::Circle { center, radius, .. } => {
                            grow([center[0] - radius, center[1] - radius]);
                            grow([center[0] + radius, center[1] + radius]);
                        }
                        Obstacle::Rect { min, max, .. } => {
                            grow(*min);
                            grow(*max);
                        }
                    }
                }
            }
        }
    }
    if !lo[0].is_finite() {
        lo = [0.0, 0.0];
        hi = [1.0, 1.0];
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    let width = (hi[0] - lo[0]) * scale + 2.0 * MARGIN;
    let height = (hi[1] - lo[1]) * scale + 2.0 * MARGIN;
    let tx = |x: f64| MARGIN + (x - lo[0]) * scale;
    let ty = |y: f64| height - MARGIN - (y - lo[1]) * scale;
    let f = |v: f64| fmt_g((v * 100.0).round() / 100.0);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        f(width),
        f(height),
        f(width),
        f(height)
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for layer in layers {
        match layer {
            PlotLayer::Obstacles(set) => {
                for o in &set.obstacles {
                    let fill = if o.known() { "#bbbbbb" } else { "#888888" };
                    match o {
                        Obstacle::Circle { center, radius, .. } => {
                            let _ = writeln!(
                                out,
                                r#"<circle cx="{}" cy="{}" r="{}" fill="{fill}"/>"#,
                                f(tx(center[0])),
                                f(ty(center[1])),
                                f(radius * scale)
                            );
                        }
                        Obstacle::Rect { min, max, .. } => {
                            let _ = writeln!(
                                out,
                                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}"/>"#,
                                f(tx(min[0])),
                                f(ty(max[1])),
                                f((max[0] - min[0]) * scale),
                                f((max[1] - min[1]) * scale)
                            );
                        }
                    }
                }
            }
            PlotLayer::Path { points, color, width } => {
                let mut d = String::new();
                for (i, p) in points.iter().enumerate() {
                    let _ = write!(d, "{}{} {}", if i == 0 { "M" } else { " L" }, f(tx(p[0])), f(ty(p[1])));
                }
                let _ = writeln!(out, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="{}"/>"#, fmt_g(*width));
            }
            PlotLayer::Marker { at, color } => {
                let _ = writeln!(out, r#"<circle cx="{}" cy="{}" r="4" fill="{color}"/>"#, f(tx(at[0])), f(ty(at[1])));
            }
        }
    }
    out.push_str("</svg>\n");
    out
}
