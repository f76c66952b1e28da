//! Minimal SVG rendering of traces and hull clouds: the unit circle plus
//! one polyline (or dot set) per chord. Deliberately free of plotting
//! framework semantics and of volatile metadata, so outputs are
//! reproducible byte for byte; the CSV next to an SVG is the contract.

use crate::float::Scalar;
use crate::loewner::{HullPoint, LoewnerTrace};
use std::io::{self, Write};

const SIZE: f64 = 640.0;
const MARGIN: f64 = 20.0;

fn map(x: f64) -> f64 {
    MARGIN + (x + 1.0) * 0.5 * (SIZE - 2.0 * MARGIN)
}

fn header<W: Write>(w: &mut W) -> io::Result<()> {
    writeln!(
        w,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">"
    )?;
    writeln!(
        w,
        "  <circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>",
        map(0.0),
        map(0.0),
        0.5 * (SIZE - 2.0 * MARGIN)
    )
}

const CHORD_COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Renders a trace as one polyline per chord inside the unit circle.
pub fn render_trace<S: Scalar, W: Write>(trace: &LoewnerTrace<S>, mut w: W) -> io::Result<()> {
    header(&mut w)?;
    for (j, chord) in trace.points.iter().enumerate() {
        let color = CHORD_COLORS[j % CHORD_COLORS.len()];
        write!(w, "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"")?;
        for p in chord {
            let (x, y) = (p.point.re.to_f64().unwrap(), p.point.im.to_f64().unwrap());
            write!(w, "{:.4},{:.4} ", map(x), map(-y))?;
        }
        writeln!(w, "\"/>")?;
    }
    writeln!(w, "</svg>")
}

/// Renders a hull cloud as dots, shaded by swallowing time.
pub fn render_hull<S: Scalar, W: Write>(
    cloud: &[HullPoint<S>],
    t_final: S,
    mut w: W,
) -> io::Result<()> {
    header(&mut w)?;
    let t_max = t_final.to_f64().unwrap().max(1e-12);
    for p in cloud {
        let (x, y) = (p.re.to_f64().unwrap(), p.im.to_f64().unwrap());
        let shade = (200.0 * (1.0 - p.tau.to_f64().unwrap() / t_max)) as u8;
        writeln!(
            w,
            "  <circle cx=\"{:.4}\" cy=\"{:.4}\" r=\"1.2\" fill=\"rgb({shade},{shade},255)\"/>",
            map(x),
            map(-y),
        )?;
    }
    writeln!(w, "</svg>")
}
