//! Plain PGM (P2 ASCII / P5 binary) masks and heatmaps.
//!
//! Masks are written with 255 for domain cells and 0 elsewhere. PGM rows run
//! top to bottom, so row 0 of the file is the array row with the largest `j`.
//! Grid metadata travels in a header comment `# divjohn h=<h> origin=<x>,<y>`.

use std::io::{BufRead, BufReader, Read, Write};

use super::domain::{GridDomain, GridShape};
use super::field::ScalarField;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmFormat {
    Ascii,
    Binary,
}

pub fn write_mask<W: Write>(dom: &GridDomain, format: PgmFormat, w: &mut W) -> Result<()> {
    let shape = dom.shape();
    let pixels: Vec<u8> = rows_top_down(shape)
        .map(|k| if dom.contains(k) { 255 } else { 0 })
        .collect();
    write_pixels(shape, &pixels, format, dom.family_tag(), w)
}

/// Linear heatmap of `values` (min maps to 0, max to 255).
pub fn write_heatmap<W: Write>(
    shape: &GridShape,
    values: &[f64],
    format: PgmFormat,
    w: &mut W,
) -> Result<()> {
    let (lo, hi) = values
        .iter()
        .filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let pixels: Vec<u8> = rows_top_down(shape)
        .map(|k| {
            let x = values[k];
            if !x.is_finite() {
                0
            } else {
                (((x - lo) / span) * 255.0).round().clamp(0.0, 255.0) as u8
            }
        })
        .collect();
    write_pixels(shape, &pixels, format, None, w)
}

fn rows_top_down(shape: &GridShape) -> impl Iterator<Item = usize> + '_ {
    (0..shape.ny).rev().flat_map(move |j| (0..shape.nx).map(move |i| shape.idx(i, j)))
}

fn write_pixels<W: Write>(
    shape: &GridShape,
    pixels: &[u8],
    format: PgmFormat,
    tag: Option<&str>,
    w: &mut W,
) -> Result<()> {
    let magic = match format {
        PgmFormat::Ascii => "P2",
        PgmFormat::Binary => "P5",
    };
    writeln!(w, "{magic}")?;
    writeln!(
        w,
        "# divjohn h={:e} origin={:e},{:e}",
        shape.h, shape.origin[0], shape.origin[1]
    )?;
    if let Some(tag) = tag {
        writeln!(w, "# family={tag}")?;
    }
    writeln!(w, "{} {}", shape.nx, shape.ny)?;
    writeln!(w, "255")?;
    match format {
        PgmFormat::Binary => w.write_all(pixels)?,
        PgmFormat::Ascii => {
            for row in pixels.chunks(shape.nx) {
                let line: Vec<String> = row.iter().map(|p| p.to_string()).collect();
                writeln!(w, "{}", line.join(" "))?;
            }
        }
    }
    Ok(())
}

/// Reads a P2/P5 mask. Pixels above half the max value are domain cells. The
/// spacing comes from the header comment when present, else from `default_h`.
pub fn read_mask<R: Read>(r: R, default_h: Option<f64>) -> Result<GridDomain> {
    let raw = read_raw(r, default_h)?;
    let shape = raw.shape.ok_or_else(|| Error::Pgm("grid spacing missing".into()))?;
    let mask = raw.pixels.iter().map(|&p| 2 * p > raw.maxval).collect();
    GridDomain::new(shape, mask, raw.tag)
}

/// Reads a P2/P5 image onto an existing grid as values in `[0, 1]`
/// (pixel / maxval). The image must have the grid's dimensions.
pub fn read_field<R: Read>(r: R, shape: &GridShape) -> Result<ScalarField> {
    let raw = read_raw(r, Some(shape.h))?;
    if (raw.nx, raw.ny) != (shape.nx, shape.ny) {
        return Err(Error::Pgm(format!(
            "image is {}x{}, grid is {}x{}",
            raw.nx, raw.ny, shape.nx, shape.ny
        )));
    }
    let values = raw.pixels.iter().map(|&p| p as f64 / raw.maxval as f64).collect();
    ScalarField::from_values(*shape, values)
}

struct RawImage {
    nx: usize,
    ny: usize,
    shape: Option<GridShape>,
    /// Pixel values in array order.
    pixels: Vec<usize>,
    maxval: usize,
    tag: Option<String>,
}

fn read_raw<R: Read>(r: R, default_h: Option<f64>) -> Result<RawImage> {
    let mut reader = BufReader::new(r);
    let mut tokens: Vec<String> = Vec::new();
    let mut h = default_h;
    let mut origin = None;
    let mut tag = None;
    while tokens.len() < 4 {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            return Err(Error::Pgm("truncated header".into()));
        }
        let (content, comment) = match line.find('#') {
            Some(pos) => (&line[..pos], Some(&line[pos + 1..])),
            None => (line.as_str(), None),
        };
        if let Some(c) = comment {
            for field in c.split_whitespace() {
                if let Some(v) = field.strip_prefix("h=") {
                    h = v.parse().ok().or(h);
                } else if let Some(v) = field.strip_prefix("origin=") {
                    let parts: Vec<f64> = v.split(',').filter_map(|s| s.parse().ok()).collect();
                    if parts.len() == 2 {
                        origin = Some([parts[0], parts[1]]);
                    }
                } else if let Some(v) = field.strip_prefix("family=") {
                    tag = Some(v.to_string());
                }
            }
        }
        tokens.extend(content.split_whitespace().map(str::to_string));
    }
    let magic = tokens[0].as_str();
    let parse = |s: &str| -> Result<usize> {
        s.parse().map_err(|_| Error::Pgm(format!("bad header token {s:?}")))
    };
    let nx = parse(&tokens[1])?;
    let ny = parse(&tokens[2])?;
    let maxval = parse(&tokens[3])?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Pgm(format!("unsupported maxval {maxval}")));
    }
    let mut pixels = Vec::with_capacity(nx * ny);
    match magic {
        "P5" => {
            let mut buf = vec![0u8; nx * ny];
            reader.read_exact(&mut buf)?;
            pixels.extend(buf.into_iter().map(usize::from));
        }
        "P2" => {
            let mut rest = String::new();
            reader.read_to_string(&mut rest)?;
            for tok in rest.split_whitespace() {
                pixels.push(parse(tok)?);
            }
            if pixels.len() != nx * ny {
                return Err(Error::Pgm(format!("expected {} pixels, got {}", nx * ny, pixels.len())));
            }
        }
        other => return Err(Error::Pgm(format!("unsupported magic {other:?}"))),
    }
    if magic == "P5" && pixels.len() != nx * ny {
        return Err(Error::Pgm("truncated pixel data".into()));
    }
    let layout = GridShape::new(nx, ny, 1.0, [0.0, 0.0]);
    let mut ordered = vec![0; nx * ny];
    for (pos, k) in rows_top_down(&layout).enumerate() {
        ordered[k] = pixels[pos];
    }
    let shape = h.map(|h| GridShape::new(nx, ny, h, origin.unwrap_or([0.5 * h, 0.5 * h])));
    Ok(RawImage { nx, ny, shape, pixels: ordered, maxval, tag })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{rasterize_predicate, BoundingBox};

    #[test]
    fn mask_survives_both_formats() {
        let bbox = BoundingBox { min: [0.0, 0.0], max: [1.0, 0.5] };
        let dom = rasterize_predicate(bbox, 1.0 / 16.0, Some("strip".into()), |x, y| {
            x > 0.0 && x < 1.0 && y > 0.0 && y < 0.5 && (x - 0.5).abs() + y > 0.2
        })
        .unwrap();
        for format in [PgmFormat::Ascii, PgmFormat::Binary] {
            let mut buf = Vec::new();
            write_mask(&dom, format, &mut buf).unwrap();
            let back = read_mask(&buf[..], None).unwrap();
            assert_eq!(back.mask(), dom.mask());
            assert_eq!(back.h(), dom.h());
            assert_eq!(back.family_tag(), Some("strip"));
        }
    }

    #[test]
    fn heatmap_reads_back_as_field() {
        let dom = GridDomain::from_unpadded(3, 2, 0.25, &[true; 6], None).unwrap();
        let values: Vec<f64> = (0..dom.shape().len()).map(|k| k as f64).collect();
        let mut buf = Vec::new();
        write_heatmap(dom.shape(), &values, PgmFormat::Binary, &mut buf).unwrap();
        let f = read_field(&buf[..], dom.shape()).unwrap();
        let top = values.len() as f64 - 1.0;
        for (a, b) in f.values.iter().zip(&values) {
            assert!((a - b / top).abs() <= 0.5 / 255.0);
        }
        let other = GridShape::new(2, 2, 0.25, [0.0, 0.0]);
        assert!(read_field(&buf[..], &other).is_err());
    }

    #[test]
    fn missing_spacing_is_an_error() {
        let text = "P2\n3 3\n255\n0 0 0\n0 255 0\n0 0 0\n";
        assert!(read_mask(text.as_bytes(), None).is_err());
        let dom = read_mask(text.as_bytes(), Some(0.5)).unwrap();
        assert_eq!(dom.num_cells(), 1);
    }
}
