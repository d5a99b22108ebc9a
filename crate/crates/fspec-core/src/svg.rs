//! Hand-rolled SVG emission: polylines, axes, shaded regions.  No plotting
//! dependency, so figure output is a pure function of the plotted data.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 480.0;
const ML: f64 = 64.0;
const MR: f64 = 20.0;
const MT: f64 = 36.0;
const MB: f64 = 48.0;

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub color: String,
    pub points: Vec<(f64, f64)>,
    /// Fill down to the region cap instead of stroking a curve.
    pub fill_to: Option<f64>,
}

impl Series {
    pub fn line(label: &str, color: &str, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.to_string(),
            color: color.to_string(),
            points,
            fill_to: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
}

impl Chart {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            series: Vec::new(),
            x_range: None,
            y_range: None,
        }
    }

    pub fn push(&mut self, s: Series) {
        self.series.push(s);
    }

    fn ranges(&self) -> ((f64, f64), (f64, f64)) {
        let mut xs = (f64::INFINITY, f64::NEG_INFINITY);
        let mut ys = (f64::INFINITY, f64::NEG_INFINITY);
        for s in &self.series {
            for &(x, y) in &s.points {
                if x.is_finite() {
                    xs = (xs.0.min(x), xs.1.max(x));
                }
                if y.is_finite() {
                    ys = (ys.0.min(y), ys.1.max(y));
                }
                if let Some(c) = s.fill_to {
                    ys = (ys.0.min(c), ys.1.max(c));
                }
            }
        }
        let pad = |r: (f64, f64)| {
            if !r.0.is_finite() || !r.1.is_finite() {
                (0.0, 1.0)
            } else if (r.1 - r.0).abs() < 1e-12 {
                (r.0 - 0.5, r.1 + 0.5)
            } else {
                r
            }
        };
        (self.x_range.unwrap_or(pad(xs)), self.y_range.unwrap_or(pad(ys)))
    }

    pub fn render(&self) -> String {
        let ((x0, x1), (y0, y1)) = self.ranges();
        let sx = |x: f64| ML + (x - x0) / (x1 - x0) * (W - ML - MR);
        let sy = |y: f64| H - MB - (y - y0) / (y1 - y0) * (H - MT - MB);
        let mut out = String::new();
        let _ = write!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
        );
        let _ = write!(
            out,
            "<rect x=\"0\" y=\"0\" width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
        );
        // axes
        let _ = write!(
            out,
            "<line x1=\"{ML}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
            H - MB,
            W - MR,
            H - MB
        );
        let _ = write!(
            out,
            "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>\n",
            H - MB
        );
        // ticks
        for i in 0..=4 {
            let t = i as f64 / 4.0;
            let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
            let (px, py) = (sx(xv), sy(yv));
            let _ = write!(
                out,
                "<line x1=\"{px}\" y1=\"{}\" x2=\"{px}\" y2=\"{}\" stroke=\"black\"/>\n",
                H - MB,
                H - MB + 5.0
            );
            let _ = write!(
                out,
                "<text x=\"{px}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
                H - MB + 18.0,
                trim_num(xv)
            );
            let _ = write!(
                out,
                "<line x1=\"{}\" y1=\"{py}\" x2=\"{ML}\" y2=\"{py}\" stroke=\"black\"/>\n",
                ML - 5.0
            );
            let _ = write!(
                out,
                "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
                ML - 8.0,
                py + 4.0,
                trim_num(yv)
            );
        }
        let _ = write!(
            out,
            "<text x=\"{}\" y=\"18\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
            (ML + W - MR) / 2.0,
            xml_escape(&self.title)
        );
        let _ = write!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
            (ML + W - MR) / 2.0,
            H - 12.0,
            xml_escape(&self.x_label)
        );
        let _ = write!(
            out,
            "<text x=\"16\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
            (MT + H - MB) / 2.0,
            (MT + H - MB) / 2.0,
            xml_escape(&self.y_label)
        );
        // series
        for s in &self.series {
            let clamp_y = |y: f64| y.clamp(y0, y1);
            if let Some(cap) = s.fill_to {
                let mut d = String::new();
                let pts: Vec<(f64, f64)> = s
                    .points
                    .iter()
                    .filter(|(x, y)| x.is_finite() && y.is_finite())
                    .map(|&(x, y)| (x, clamp_y(y)))
                    .filter(|(_, y)| *y <= cap)
                    .collect();
                if pts.len() >= 2 {
                    for (i, (x, y)) in pts.iter().enumerate() {
                        let _ = write!(d, "{}{:.2},{:.2} ", if i == 0 { "M" } else { "L" }, sx(*x), sy(*y));
                    }
                    for (x, _) in pts.iter().rev() {
                        let _ = write!(d, "L{:.2},{:.2} ", sx(*x), sy(clamp_y(cap)));
                    }
                    let _ = write!(
                        out,
                        "<path d=\"{}Z\" fill=\"{}\" fill-opacity=\"0.25\" stroke=\"none\"/>\n",
                        d, s.color
                    );
                }
                continue;
            }
            let mut poly = String::new();
            for &(x, y) in s.points.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
                let _ = write!(poly, "{:.2},{:.2} ", sx(x), sy(clamp_y(y)));
            }
            let _ = write!(
                out,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                poly.trim_end(),
                s.color
            );
        }
        // legend
        let mut ly = MT + 8.0;
        for s in &self.series {
            let _ = write!(
                out,
                "<rect x=\"{}\" y=\"{}\" width=\"14\" height=\"4\" fill=\"{}\"/>\n",
                W - MR - 150.0,
                ly,
                s.color
            );
            let _ = write!(
                out,
                "<text x=\"{}\" y=\"{}\" font-size=\"11\">{}</text>\n",
                W - MR - 130.0,
                ly + 5.0,
                xml_escape(&s.label)
            );
            ly += 16.0;
        }
        out.push_str("</svg>\n");
        out
    }
}

fn trim_num(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_polylines_and_legend() {
        let mut c = Chart::new("test", "u", "bound");
        c.push(Series::line("a", "#aa0000", vec![(0.0, 0.0), (1.0, 2.0)]));
        let svg = c.render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("polyline"));
        assert!(svg.contains("#aa0000"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let mut c = Chart::new("t", "x", "y");
        c.push(Series::line("s", "blue", vec![(0.0, 1.0), (0.5, 0.25), (1.0, 0.9)]));
        assert_eq!(c.render(), c.render());
    }

    #[test]
    fn shaded_region_emits_path() {
        let mut c = Chart::new("region", "theta", "dim");
        c.push(Series {
            label: "region".into(),
            color: "#3355cc".into(),
            points: vec![(0.0, 0.4), (0.5, 0.9), (1.0, 1.4)],
            fill_to: Some(1.4),
        });
        let svg = c.render();
        assert!(svg.contains("<path"));
        assert!(svg.contains("fill-opacity"));
    }
}
