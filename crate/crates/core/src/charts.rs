//! Small, dependency-free SVG charts for run reports: a multi-series line
//! chart and a histogram. Static markup only — the files are meant to sit
//! next to the CSVs as a quick visual check, not to be interactive.

/// Canvas size shared by both chart kinds.
const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 420.0;
/// Margins: left, right, top, bottom. The left margin carries y labels, the
/// bottom carries x labels and the legend.
const MARGINS: (f64, f64, f64, f64) = (64.0, 16.0, 34.0, 46.0);

/// Line colors, cycled when a chart has more series than entries here.
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// An affine map from data space onto one pixel axis.
#[derive(Debug, Clone, Copy)]
struct Scale {
    lo: f64,
    span: f64,
    pixel_lo: f64,
    pixel_span: f64,
}

impl Scale {
    /// Maps `[lo, hi]` onto `[pixel_lo, pixel_hi]`. A degenerate data range
    /// is padded so constant series render mid-axis instead of dividing by
    /// zero.
    fn new(lo: f64, hi: f64, pixel_lo: f64, pixel_hi: f64) -> Scale {
        let (lo, hi) = if hi > lo {
            (lo, hi)
        } else {
            let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.5 };
            (lo - pad, lo + pad)
        };
        Scale { lo, span: hi - lo, pixel_lo, pixel_span: pixel_hi - pixel_lo }
    }

    fn map(&self, x: f64) -> f64 {
        self.pixel_lo + (x - self.lo) / self.span * self.pixel_span
    }
}

fn finite_bounds<'a>(values: impl Iterator<Item = &'a f64>) -> Option<(f64, f64)> {
    let mut bounds: Option<(f64, f64)> = None;
    for &v in values {
        if v.is_finite() {
            let (lo, hi) = bounds.get_or_insert((v, v));
            *lo = lo.min(v);
            *hi = hi.max(v);
        }
    }
    bounds
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Compact tick label: plain notation in a sane range, scientific outside.
fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 1e6 || v.abs() < 1e-3 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn svg_open(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    )
}

/// Frame, y grid lines, and min/mid/max labels on both axes.
fn axes(x: &Scale, y: &Scale, x_label: &str, y_label: &str) -> String {
    let (left, right, top, bottom) = MARGINS;
    let (x0, x1) = (left, WIDTH - right);
    let (y0, y1) = (HEIGHT - bottom, top);
    let mut out = format!(
        "<rect x=\"{x0}\" y=\"{y1}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>\n",
        x1 - x0,
        y0 - y1
    );
    for frac in [0.0, 0.5, 1.0] {
        let value = y.lo + frac * y.span;
        let py = y.map(value);
        out.push_str(&format!(
            "<line x1=\"{x0}\" y1=\"{py}\" x2=\"{x1}\" y2=\"{py}\" stroke=\"#ddd\"/>\n\
             <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            x0 - 6.0,
            py + 4.0,
            tick_label(value)
        ));
        let value = x.lo + frac * x.span;
        let px = x.map(value);
        out.push_str(&format!(
            "<text x=\"{px}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            y0 + 16.0,
            tick_label(value)
        ));
    }
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 6.0,
        escape(x_label)
    ));
    out.push_str(&format!(
        "<text x=\"14\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">{}</text>\n",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    ));
    out
}

/// Renders named series as polylines over a shared day axis. Non-finite
/// points break the line rather than corrupting the path.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<f64>)]) -> String {
    let (left, right, top, bottom) = MARGINS;
    let n = series.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    let (lo, hi) = series
        .iter()
        .flat_map(|(_, v)| finite_bounds(v.iter()))
        .fold(None::<(f64, f64)>, |acc, (lo, hi)| match acc {
            Some((a, b)) => Some((a.min(lo), b.max(hi))),
            None => Some((lo, hi)),
        })
        .unwrap_or((0.0, 1.0));
    let x = Scale::new(0.0, (n.max(2) - 1) as f64, left, WIDTH - right);
    let y = Scale::new(lo, hi, HEIGHT - bottom, top);

    let mut out = svg_open(title);
    out.push_str(&axes(&x, &y, x_label, y_label));
    for (k, (name, values)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut segment = String::new();
        let flush = |seg: &mut String, out: &mut String| {
            if seg.matches(' ').count() >= 1 {
                out.push_str(&format!(
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\"/>\n",
                    seg.trim_end()
                ));
            }
            seg.clear();
        };
        for (i, v) in values.iter().enumerate() {
            if v.is_finite() {
                segment.push_str(&format!("{:.2},{:.2} ", x.map(i as f64), y.map(*v)));
            } else {
                flush(&mut segment, &mut out);
            }
        }
        flush(&mut segment, &mut out);
        // Legend swatches along the bottom-left.
        let lx = left + 120.0 * k as f64;
        let ly = HEIGHT - 24.0;
        out.push_str(&format!(
            "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n\
             <text x=\"{}\" y=\"{}\">{}</text>\n",
            lx + 18.0,
            lx + 22.0,
            ly + 4.0,
            escape(name)
        ));
    }
    out.push_str("</svg>\n");
    out
}

/// Renders a histogram of `values` with equal-width bins spanning the
/// finite data range. Non-finite entries are dropped.
pub fn histogram(title: &str, x_label: &str, values: &[f64], bins: usize) -> String {
    let (left, right, top, bottom) = MARGINS;
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let bins = bins.max(1);
    let (lo, hi) = finite_bounds(finite.iter()).unwrap_or((0.0, 1.0));
    let edge = Scale::new(lo, hi, 0.0, bins as f64);
    let mut counts = vec![0usize; bins];
    for v in &finite {
        let b = (edge.map(*v) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let max_count = counts.iter().copied().max().unwrap_or(0).max(1);

    let x = Scale::new(edge.lo, edge.lo + edge.span, left, WIDTH - right);
    let y = Scale::new(0.0, max_count as f64, HEIGHT - bottom, top);
    let mut out = svg_open(title);
    out.push_str(&axes(&x, &y, x_label, "count"));
    let bin_width = edge.span / bins as f64;
    for (b, count) in counts.iter().enumerate() {
        if *count == 0 {
            continue;
        }
        let x0 = x.map(edge.lo + b as f64 * bin_width);
        let x1 = x.map(edge.lo + (b + 1) as f64 * bin_width);
        let y1 = y.map(*count as f64);
        out.push_str(&format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
             fill=\"#1f77b4\" stroke=\"white\" stroke-width=\"0.5\"/>\n",
            x0,
            y1,
            x1 - x0,
            y.map(0.0) - y1,
        ));
    }
    out.push_str("</svg>\n");
    out
}
