//! Minimal SVG line rendering of a cumulative incidence estimate with its
//! interval and band curves. No plotting dependency; the output mirrors
//! the curves CSV.

use std::fs::File;
use std::io::{BufWriter, Write};

use fgscan_core::cif::CifEstimate;
use fgscan_core::Error;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 52.0;

fn step_path(times: &[f64], values: &[f64], to_x: impl Fn(f64) -> f64, to_y: impl Fn(f64) -> f64) -> String {
    let mut d = String::new();
    for (i, (&t, &v)) in times.iter().zip(values).enumerate() {
        let (x, y) = (to_x(t), to_y(v));
        if i == 0 {
            d.push_str(&format!("M{x:.2},{y:.2}"));
        } else {
            // right-continuous step: run flat to the jump, then rise
            d.push_str(&format!("H{x:.2}V{y:.2}"));
        }
    }
    d
}

pub fn write_cif_plot(path: &str, est: &CifEstimate) -> Result<(), Error> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e: std::io::Error| Error::io(path, e);

    let (t_min, t_max) = (
        est.times.first().copied().unwrap_or(0.0),
        est.times.last().copied().unwrap_or(1.0),
    );
    let span = (t_max - t_min).max(1e-12);
    let to_x = |t: f64| MARGIN + (t - t_min) / span * (WIDTH - 2.0 * MARGIN);
    let to_y = |v: f64| HEIGHT - MARGIN - v * (HEIGHT - 2.0 * MARGIN);

    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .map_err(io_err)?;
    writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).map_err(io_err)?;
    // axes
    writeln!(
        w,
        r#"<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{m}" y1="{t}" x2="{m}" y2="{b}" stroke="black"/>"#,
        m = MARGIN,
        r = WIDTH - MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN
    )
    .map_err(io_err)?;
    for (label, x, y, anchor) in [
        (format!("{t_min:.3}"), MARGIN, HEIGHT - MARGIN + 16.0, "middle"),
        (format!("{t_max:.3}"), WIDTH - MARGIN, HEIGHT - MARGIN + 16.0, "middle"),
        ("0".to_string(), MARGIN - 8.0, HEIGHT - MARGIN, "end"),
        ("1".to_string(), MARGIN - 8.0, MARGIN + 4.0, "end"),
        ("time".to_string(), WIDTH / 2.0, HEIGHT - 12.0, "middle"),
    ] {
        writeln!(
            w,
            r#"<text x="{x:.1}" y="{y:.1}" font-size="12" text-anchor="{anchor}">{label}</text>"#
        )
        .map_err(io_err)?;
    }
    writeln!(
        w,
        r#"<text x="14" y="{y:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {y:.1})">cumulative incidence</text>"#,
        y = HEIGHT / 2.0
    )
    .map_err(io_err)?;

    let mut curve = |vals: &Option<Vec<f64>>, color: &str, dash: &str| -> std::io::Result<()> {
        if let Some(vals) = vals {
            writeln!(
                w,
                r#"<path d="{}" fill="none" stroke="{color}" stroke-dasharray="{dash}"/>"#,
                step_path(&est.times, vals, to_x, to_y)
            )?;
        }
        Ok(())
    };
    curve(&est.band_lower, "#c44e52", "2,3").map_err(io_err)?;
    curve(&est.band_upper, "#c44e52", "2,3").map_err(io_err)?;
    curve(&est.lower, "#4c72b0", "6,3").map_err(io_err)?;
    curve(&est.upper, "#4c72b0", "6,3").map_err(io_err)?;
    curve(&Some(est.values.clone()), "black", "").map_err(io_err)?;

    writeln!(w, "</svg>").map_err(io_err)?;
    w.flush().map_err(io_err)
}
