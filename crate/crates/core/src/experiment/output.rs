use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::agent::EpisodeLog;
use crate::error::{Error, Result};
use crate::experiment::run::{Metric, SweepResult, SweepRow};
use crate::experiment::spec::{Method, SweepSpec};

/// Column names of every sweep CSV.
pub const CSV_HEADER: [&str; 6] = ["swept_value", "method", "mean", "stderr", "n", "infeasible"];

/// Name of the manifest file written next to the CSVs.
pub const MANIFEST_FILE: &str = "manifest.toml";

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// The manifest as `#` comment lines, so every CSV carries its own config.
fn manifest_comment(spec: &SweepSpec) -> Result<String> {
    Ok(spec
        .to_toml()?
        .lines()
        .map(|l| {
            if l.is_empty() {
                "#\n".to_string()
            } else {
                format!("# {l}\n")
            }
        })
        .collect())
}

/// CSV bytes of one metric table, manifest comment first.
pub fn table_csv(result: &SweepResult, metric: Metric, path: &Path) -> Result<Vec<u8>> {
    let mut out = manifest_comment(&result.spec)?.into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        for row in result.table(metric) {
            w.serialize(row).map_err(csv_err(path))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    Ok(out)
}

/// Parse a sweep CSV written by [`emit_outputs`], skipping comment lines.
pub fn read_table(path: &Path) -> Result<Vec<SweepRow>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(csv_err(path))?;
    let header: Vec<String> = r
        .headers()
        .map_err(csv_err(path))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != CSV_HEADER {
        return Err(Error::Manifest(format!(
            "{}: unexpected header {header:?}",
            path.display()
        )));
    }
    r.deserialize()
        .map(|row| row.map_err(csv_err(path)))
        .collect()
}

/// Recover the manifest embedded in a sweep CSV.
pub fn read_embedded_manifest(path: &Path) -> Result<SweepSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let toml: String = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .map(|l| {
            format!(
                "{}\n",
                l.trim_start_matches('#').strip_prefix(' ').unwrap_or("")
            )
        })
        .collect();
    SweepSpec::from_toml(&toml)
}

pub fn write_episode_log(log: &[EpisodeLog], path: &Path) -> Result<()> {
    let mut out = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        for e in log {
            w.serialize(e).map_err(csv_err(path))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    write_file(path, &out)
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#ff7f0e",
];

/// Line plot of one metric against the swept value, one polyline per
/// method. NaN points break the line.
pub fn plot_svg(result: &SweepResult, metric: Metric) -> String {
    let (w, h, left, right, top, bottom) = (640.0, 400.0, 60.0, 170.0, 20.0, 50.0);
    let xs = &result.spec.values;
    let ys: Vec<f64> = result
        .points
        .iter()
        .map(|p| p.metric(metric).mean)
        .filter(|y| y.is_finite())
        .collect();
    let (x0, x1) = (xs[0], *xs.last().expect("validated non-empty"));
    let (mut y0, mut y1) = ys
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| {
            (a.min(y), b.max(y))
        });
    if !y0.is_finite() {
        (y0, y1) = (0.0, 1.0);
    }
    let pad = ((y1 - y0) * 0.05).max(1e-9);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let sx = |x: f64| {
        if x1 > x0 {
            left + (x - x0) / (x1 - x0) * (w - left - right)
        } else {
            left + 0.5 * (w - left - right)
        }
    };
    let sy = |y: f64| h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let (ax0, ax1, ay0, ay1) = (left, w - right, h - bottom, top);
    let _ = writeln!(
        s,
        r#"<path d="M{ax0} {ay1} L{ax0} {ay0} L{ax1} {ay0}" stroke="black" fill="none"/>"#
    );
    for &x in xs {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x}</text>"#,
            sx(x),
            ay0 + 18.0
        );
    }
    for (y, anchor) in [(y0 + pad, "end"), (y1 - pad, "end")] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="{anchor}">{y:.3}</text>"#,
            ax0 - 6.0,
            sy(y) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        0.5 * (ax0 + ax1),
        h - 10.0,
        result.spec.parameter.name()
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
        0.5 * (ay0 + ay1),
        0.5 * (ay0 + ay1),
        metric.name()
    );

    for (mi, method) in result.spec.methods.iter().enumerate() {
        let color = PALETTE[mi % PALETTE.len()];
        let curve = result.curve(*method, metric);
        let mut d = String::new();
        let mut pen_down = false;
        for (&x, &y) in xs.iter().zip(&curve) {
            if y.is_finite() {
                let _ = write!(
                    d,
                    "{}{:.2} {:.2} ",
                    if pen_down { "L" } else { "M" },
                    sx(x),
                    sy(y)
                );
                pen_down = true;
            } else {
                pen_down = false;
            }
        }
        if !d.is_empty() {
            let _ = writeln!(
                s,
                r#"<path d="{}" stroke="{color}" stroke-width="2" fill="none"/>"#,
                d.trim_end()
            );
        }
        for (&x, &y) in xs.iter().zip(&curve).filter(|(_, y)| y.is_finite()) {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                sx(x),
                sy(y)
            );
        }
        let ly = top + 10.0 + 18.0 * mi as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            ax1 + 12.0,
            ax1 + 32.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            ax1 + 38.0,
            ly + 4.0,
            method.name()
        );
    }
    s.push_str("</svg>\n");
    s
}

fn episode_log_name(method: Method, index: usize) -> String {
    format!("episodes-{}-{index}.csv", method.name())
}

/// Write the manifest, one CSV per metric, a sum-rate plot and the episode
/// logs of inline trainings into `dir`. Returns the paths written.
/// Identical results give identical bytes.
pub fn emit_outputs(result: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    let path = dir.join(MANIFEST_FILE);
    write_file(&path, result.spec.to_toml()?.as_bytes())?;
    written.push(path);

    for metric in Metric::ALL {
        let path = dir.join(format!("{}.csv", metric.name()));
        let bytes = table_csv(result, metric, &path)?;
        write_file(&path, &bytes)?;
        written.push(path);
    }

    let path = dir.join("sum_rate.svg");
    write_file(&path, plot_svg(result, Metric::SumRate).as_bytes())?;
    written.push(path);

    for rec in &result.training {
        let path = dir.join(episode_log_name(rec.method, rec.index));
        write_episode_log(&rec.log, &path)?;
        written.push(path);
    }
    Ok(written)
}
