//! Wing polylines and their EPS, SVG and CSV serializations.
//!
//! EPS output follows a fixed byte layout: every coordinate is written as
//! C-style `%.12e` (`-3.876300213013e+00`) and every command line carries a
//! trailing space, so identical inputs give identical files on every
//! platform.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::gaplabel::Wing;

/// Ordered `(energy, scaled theta)` points drawn as one stroked path.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polyline {
    pub points: Vec<(f64, f64)>,
}

impl Polyline {
    pub fn new(points: Vec<(f64, f64)>) -> Self {
        Polyline { points }
    }

    /// The same path with every energy negated.
    pub fn mirrored(&self) -> Polyline {
        Polyline { points: self.points.iter().map(|&(x, y)| (-x, y)).collect() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Page setup plus the paths to stroke.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsDocument {
    pub scale: f64,
    pub linewidth: f64,
    pub linecap: i32,
    /// Device height of the unit frequency interval, before `scale`.
    pub theta_scale: f64,
    /// Half-width of the energy axis used for the bounding box.
    pub x_extent: f64,
    pub polylines: Vec<Polyline>,
}

pub const DEFAULT_THETA_SCALE: f64 = 8.0;

impl Default for EpsDocument {
    fn default() -> Self {
        EpsDocument {
            scale: 100.0,
            linewidth: 0.0005,
            linecap: 1,
            theta_scale: DEFAULT_THETA_SCALE,
            x_extent: 4.0,
            polylines: Vec::new(),
        }
    }
}

impl EpsDocument {
    pub fn new(polylines: Vec<Polyline>) -> Self {
        EpsDocument { polylines, ..Default::default() }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("scale", self.scale),
            ("linewidth", self.linewidth),
            ("theta_scale", self.theta_scale),
            ("x_extent", self.x_extent),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(0..=2).contains(&self.linecap) {
            return Err(Error::InvalidArgument(format!("linecap must be 0, 1 or 2, got {}", self.linecap)));
        }
        check_finite(&self.polylines)
    }
}

fn check_finite(polylines: &[Polyline]) -> Result<()> {
    for (i, line) in polylines.iter().enumerate() {
        if let Some(j) = line.points.iter().position(|(x, y)| !(x.is_finite() && y.is_finite())) {
            return Err(Error::NonFinite { polyline: i, point: j });
        }
    }
    Ok(())
}

/// Four curves per wing segment: left, right, and their mirror images, with
/// `y = theta_scale * theta`.
pub fn wings_to_polylines(wings: &[Wing], theta_scale: f64) -> Vec<Polyline> {
    wings_to_polylines_with(wings, theta_scale, true)
}

/// Like [`wings_to_polylines`]; `mirror = false` emits only left and right.
/// Segments with fewer than two points are skipped.
pub fn wings_to_polylines_with(wings: &[Wing], theta_scale: f64, mirror: bool) -> Vec<Polyline> {
    map_wings(wings, mirror, |theta| theta * theta_scale)
}

/// Polylines for a frequency window `[lo, hi]` stretched over the full
/// height `[0, theta_scale]`. Wings should already be clipped to the window.
pub fn window_to_polylines(wings: &[Wing], theta_scale: f64, lo: f64, hi: f64, mirror: bool) -> Vec<Polyline> {
    let span = hi - lo;
    map_wings(wings, mirror, |theta| (theta - lo) / span * theta_scale)
}

fn map_wings(wings: &[Wing], mirror: bool, y_of: impl Fn(f64) -> f64) -> Vec<Polyline> {
    let mut out = Vec::new();
    for seg in wings.iter().flat_map(|w| &w.segments) {
        if seg.len() < 2 {
            continue;
        }
        let ys: Vec<f64> = seg.theta.iter().map(|t| y_of(t.to_f64())).collect();
        let left = Polyline::new(seg.left.iter().copied().zip(ys.iter().copied()).collect());
        let right = Polyline::new(seg.right.iter().copied().zip(ys.iter().copied()).collect());
        if mirror {
            let (ml, mr) = (left.mirrored(), right.mirrored());
            out.extend([left, right, ml, mr]);
        } else {
            out.extend([left, right]);
        }
    }
    out
}

/// C `%.12e`: twelve fractional digits and an exponent of at least two
/// digits with explicit sign. Negative zero prints as zero.
pub fn format_sci(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    let s = format!("{v:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent always present");
    let (sign, digits) = match exp.strip_prefix('-') {
        Some(d) => ('-', d),
        None => ('+', exp),
    };
    format!("{mantissa}e{sign}{digits:0>2}")
}

/// Shortest decimal form with the leading zero of a pure fraction dropped
/// (`0.0005` prints as `.0005`).
fn format_plain(v: f64) -> String {
    let s = format!("{v}");
    if let Some(rest) = s.strip_prefix("0.") {
        format!(".{rest}")
    } else if let Some(rest) = s.strip_prefix("-0.") {
        format!("-.{rest}")
    } else {
        s
    }
}

pub fn emit_eps(doc: &EpsDocument) -> Result<Vec<u8>> {
    doc.validate()?;
    let half = (doc.scale * doc.x_extent).ceil() as i64;
    let top = (doc.scale * doc.theta_scale).ceil() as i64;
    let mut s = String::new();
    s.push_str("%!PS-Adobe-3.0 EPSF-3.0\n");
    let _ = writeln!(s, "%%BoundingBox: {} 0 {} {}", -half, half, top);
    let scale = format_plain(doc.scale);
    let _ = writeln!(s, "{scale} {scale} scale ");
    let _ = writeln!(s, "{} setlinewidth ", format_plain(doc.linewidth));
    let _ = writeln!(s, "{} setlinecap ", doc.linecap);
    for line in &doc.polylines {
        s.push_str("newpath \n");
        for (i, &(x, y)) in line.points.iter().enumerate() {
            let op = if i == 0 { "moveto" } else { "lineto" };
            let _ = writeln!(s, "{} {} {op} ", format_sci(x), format_sci(y));
        }
        s.push_str("stroke \n");
    }
    Ok(s.into_bytes())
}

/// Recovers the polylines from [`emit_eps`] output. Comment lines, blank
/// lines and the setup commands are accepted; anything else is an error
/// carrying its 1-based line number.
pub fn parse_eps(bytes: &[u8]) -> Result<Vec<Polyline>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse { line: 0, message: e.to_string() })?;
    let mut out = Vec::new();
    let mut current: Option<Vec<(f64, f64)>> = None;
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let err = |message: String| Error::Parse { line: line_no, message };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let (op, args) = tokens.split_last().expect("non-empty line has a token");
        match (*op, args.len(), current.as_mut()) {
            ("scale", 2, None) | ("setlinewidth", 1, None) | ("setlinecap", 1, None) => {}
            ("newpath", 0, None) => current = Some(Vec::new()),
            ("moveto", 2, Some(pts)) if pts.is_empty() => pts.push(parse_pair(args).map_err(err)?),
            ("lineto", 2, Some(pts)) if !pts.is_empty() => pts.push(parse_pair(args).map_err(err)?),
            ("stroke", 0, Some(_)) => out.push(Polyline::new(current.take().unwrap_or_default())),
            _ => return Err(err(format!("unexpected command {line:?}"))),
        }
    }
    if current.is_some() {
        return Err(Error::Parse { line: last_line, message: "path not terminated by stroke".into() });
    }
    Ok(out)
}

fn parse_pair(args: &[&str]) -> std::result::Result<(f64, f64), String> {
    let num = |s: &str| s.parse::<f64>().map_err(|_| format!("bad number {s:?}"));
    Ok((num(args[0])?, num(args[1])?))
}

/// SVG 1.1 with one `<path>` per polyline, y flipped so that theta grows
/// upward as in the EPS output.
pub fn emit_svg(doc: &EpsDocument) -> Result<Vec<u8>> {
    doc.validate()?;
    let half = doc.scale * doc.x_extent;
    let top = doc.scale * doc.theta_scale;
    let cap = ["butt", "round", "square"][doc.linecap as usize];
    let num = |v: f64| format!("{}", if v == 0.0 { 0.0 } else { v });
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"{} 0 {} {}\">",
        num(2.0 * half),
        num(top),
        num(-half),
        num(2.0 * half),
        num(top)
    );
    let _ = writeln!(
        s,
        "<g fill=\"none\" stroke=\"black\" stroke-width=\"{}\" stroke-linecap=\"{cap}\">",
        num(doc.linewidth * doc.scale)
    );
    for line in &doc.polylines {
        s.push_str("<path d=\"");
        for (i, &(x, y)) in line.points.iter().enumerate() {
            let cmd = if i == 0 { "M" } else { " L" };
            let _ = write!(s, "{cmd}{} {}", num(x * doc.scale), num(top - y * doc.scale));
        }
        s.push_str("\"/>\n");
    }
    s.push_str("</g>\n</svg>\n");
    Ok(s.into_bytes())
}

/// Rows `polyline_id,x,y` under a header, in shortest round-trip notation.
pub fn emit_csv(polylines: &[Polyline]) -> Result<Vec<u8>> {
    check_finite(polylines)?;
    let mut s = String::from("polyline_id,x,y\n");
    for (i, line) in polylines.iter().enumerate() {
        for &(x, y) in &line.points {
            let _ = writeln!(s, "{i},{x},{y}");
        }
    }
    Ok(s.into_bytes())
}

/// Inverse of [`emit_csv`]. Ids must start at 0 and increase by one.
pub fn parse_csv(bytes: &[u8]) -> Result<Vec<Polyline>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse { line: 0, message: e.to_string() })?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "polyline_id,x,y")) => {}
        _ => return Err(Error::Parse { line: 1, message: "missing header polyline_id,x,y".into() }),
    }
    let mut out: Vec<Polyline> = Vec::new();
    for (idx, line) in lines {
        let err = |message: String| Error::Parse { line: idx + 1, message };
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let [id, x, y] = fields[..] else {
            return Err(err(format!("expected 3 fields, got {}", fields.len())));
        };
        let id: usize = id.parse().map_err(|_| err(format!("bad id {id:?}")))?;
        let (x, y) = parse_pair(&[x, y]).map_err(err)?;
        if id + 1 == out.len() {
            out[id].points.push((x, y));
        } else if id == out.len() {
            out.push(Polyline::new(vec![(x, y)]));
        } else {
            return Err(err(format!("polyline id {id} out of sequence")));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaplabel::{build_wing, GapLabel};
    use crate::spectrum::SpectrumCache;

    #[test]
    fn scientific_format_matches_c() {
        assert_eq!(format_sci(-3.876300213013), "-3.876300213013e+00");
        assert_eq!(format_sci(0.16), "1.600000000000e-01");
        assert_eq!(format_sci(0.0), "0.000000000000e+00");
        assert_eq!(format_sci(-0.0), "0.000000000000e+00");
        assert_eq!(format_sci(8.0), "8.000000000000e+00");
        assert_eq!(format_sci(1.5e-120), "1.500000000000e-120");
        assert_eq!(format_sci(12345.0), "1.234500000000e+04");
    }

    #[test]
    fn plain_format_drops_leading_zero() {
        assert_eq!(format_plain(0.0005), ".0005");
        assert_eq!(format_plain(100.0), "100");
        assert_eq!(format_plain(2.5), "2.5");
    }

    #[test]
    fn empty_document() {
        let bytes = emit_eps(&EpsDocument::default()).unwrap();
        assert_eq!(
            String::from_utf8(bytes.clone()).unwrap(),
            "%!PS-Adobe-3.0 EPSF-3.0\n%%BoundingBox: -400 0 400 800\n100 100 scale \n.0005 setlinewidth \n1 setlinecap \n"
        );
        assert!(parse_eps(&bytes).unwrap().is_empty());
    }

    #[test]
    fn single_polyline_lines() {
        let doc = EpsDocument::new(vec![Polyline::new(vec![(-4.0, 0.0), (3.632788171307, 7.84), (4.0, 8.0)])]);
        let text = String::from_utf8(emit_eps(&doc).unwrap()).unwrap();
        let body: Vec<&str> = text.lines().skip(5).collect();
        assert_eq!(
            body,
            [
                "newpath ",
                "-4.000000000000e+00 0.000000000000e+00 moveto ",
                "3.632788171307e+00 7.840000000000e+00 lineto ",
                "4.000000000000e+00 8.000000000000e+00 lineto ",
                "stroke ",
            ]
        );
    }

    #[test]
    fn non_finite_rejected() {
        let doc =
            EpsDocument::new(vec![Polyline::new(vec![(0.0, 0.0)]), Polyline::new(vec![(0.0, 0.0), (f64::NAN, 1.0)])]);
        assert_eq!(emit_eps(&doc), Err(Error::NonFinite { polyline: 1, point: 1 }));
        assert!(emit_svg(&doc).is_err());
        assert!(emit_csv(&doc.polylines).is_err());
    }

    #[test]
    fn truncated_stream_errors_at_last_line() {
        let doc = EpsDocument::new(vec![Polyline::new(vec![(-4.0, 0.0), (4.0, 8.0)])]);
        let text = String::from_utf8(emit_eps(&doc).unwrap()).unwrap();
        let truncated = text.trim_end().strip_suffix("stroke").unwrap();
        let n = truncated.lines().count();
        assert_eq!(
            parse_eps(truncated.as_bytes()),
            Err(Error::Parse { line: n, message: "path not terminated by stroke".into() })
        );
    }

    #[test]
    fn malformed_command_reports_line() {
        let src = b"newpath \n1 2 moveto \nbogus \nstroke \n";
        assert!(matches!(parse_eps(src), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_eps(b"1 2 lineto\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn slope_one_wing_polylines() {
        let cache = SpectrumCache::new();
        let wing = build_wing(GapLabel::new(1, 0).unwrap(), 1, 2.0, &cache).unwrap();
        let lines = wings_to_polylines(&[wing], 8.0);
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0].points[0], (-4.0, 0.0));
        assert_eq!(lines[0].points[1].1, 8.0);
        assert!((lines[0].points[1].0 - 4.0).abs() < 1e-12);
        assert_eq!(lines[2], lines[0].mirrored());
        assert_eq!(lines[3], lines[1].mirrored());
        assert!(wings_to_polylines(&[], 8.0).is_empty());
    }

    #[test]
    fn svg_and_csv_skeletons() {
        let svg = String::from_utf8(emit_svg(&EpsDocument::default()).unwrap()).unwrap();
        assert!(svg.starts_with("<?xml"));
        assert!(svg.contains("viewBox=\"-400 0 800 800\""));
        assert!(!svg.contains("<path"));
        assert_eq!(emit_csv(&[]).unwrap(), b"polyline_id,x,y\n");
        assert!(parse_csv(b"polyline_id,x,y\n").unwrap().is_empty());

        let one = vec![Polyline::new(vec![(-4.0, 0.0), (4.0, 8.0)])];
        let svg = String::from_utf8(emit_svg(&EpsDocument::new(one.clone())).unwrap()).unwrap();
        assert_eq!(svg.matches("<path").count(), 1);
        assert!(svg.contains("<path d=\"M-400 800 L400 0\"/>"));
        let csv = emit_csv(&one).unwrap();
        assert_eq!(String::from_utf8(csv.clone()).unwrap(), "polyline_id,x,y\n0,-4,0\n0,4,8\n");
        assert_eq!(parse_csv(&csv).unwrap(), one);
    }

    #[test]
    fn csv_rejects_out_of_sequence_ids() {
        assert!(matches!(parse_csv(b"polyline_id,x,y\n1,0,0\n"), Err(Error::Parse { line: 2, .. })));
        assert!(parse_csv(b"x\n").is_err());
    }
}
