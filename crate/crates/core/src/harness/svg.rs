//! Minimal SVG chart rendering: grouped bars with CI whiskers and line
//! charts. Enough for the report figures without a plotting dependency.

const W: f64 = 800.0;
const H: f64 = 480.0;
const MARGIN: f64 = 60.0;

const PALETTE: [&str; 6] = ["#4C72B0", "#DD8452", "#55A868", "#C44E52", "#8172B3", "#937860"];

fn header() -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    )
}

fn axes(y_label: &str, y_max: f64) -> String {
    let x0 = MARGIN;
    let y0 = H - MARGIN;
    let x1 = W - MARGIN / 2.0;
    let y1 = MARGIN / 2.0;
    let mut out = format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n\
         <text x=\"14\" y=\"{}\" font-size=\"13\" transform=\"rotate(-90 14 {})\">{}</text>\n",
        H / 2.0,
        H / 2.0,
        y_label
    );
    for i in 0..=4 {
        let v = y_max * i as f64 / 4.0;
        let y = y0 - (y0 - y1) * i as f64 / 4.0;
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{v:.2}</text>\n\
             <line x1=\"{x0}\" y1=\"{y}\" x2=\"{x1}\" y2=\"{y}\" stroke=\"#dddddd\"/>\n",
            x0 - 6.0,
            y + 4.0,
        ));
    }
    out
}

/// Bar chart with one bar per (label, value) and optional CI whiskers.
pub fn bar_chart(title: &str, y_label: &str, bars: &[(String, f64, Option<(f64, f64)>)]) -> String {
    let y_max = bars
        .iter()
        .map(|(_, v, ci)| ci.map_or(*v, |c| c.1).max(*v))
        .fold(0.0f64, f64::max)
        .max(1e-9)
        * 1.15;
    let mut out = header();
    out.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-size=\"15\" text-anchor=\"middle\">{title}</text>\n",
        W / 2.0
    ));
    out.push_str(&axes(y_label, y_max));
    let y0 = H - MARGIN;
    let span = W - 1.5 * MARGIN;
    let slot = span / bars.len() as f64;
    let bar_w = (slot * 0.6).min(80.0);
    for (i, (label, value, ci)) in bars.iter().enumerate() {
        let cx = MARGIN + slot * (i as f64 + 0.5);
        let h = (value / y_max) * (y0 - MARGIN / 2.0);
        let color = PALETTE[i % PALETTE.len()];
        out.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{bar_w}\" height=\"{}\" fill=\"{color}\"/>\n",
            cx - bar_w / 2.0,
            y0 - h,
            h.max(0.0),
        ));
        if let Some((lo, hi)) = ci {
            let ylo = y0 - (lo / y_max) * (y0 - MARGIN / 2.0);
            let yhi = y0 - (hi / y_max) * (y0 - MARGIN / 2.0);
            out.push_str(&format!(
                "<line x1=\"{cx}\" y1=\"{ylo}\" x2=\"{cx}\" y2=\"{yhi}\" stroke=\"black\" stroke-width=\"1.5\"/>\n\
                 <line x1=\"{}\" y1=\"{ylo}\" x2=\"{}\" y2=\"{ylo}\" stroke=\"black\"/>\n\
                 <line x1=\"{}\" y1=\"{yhi}\" x2=\"{}\" y2=\"{yhi}\" stroke=\"black\"/>\n",
                cx - 8.0,
                cx + 8.0,
                cx - 8.0,
                cx + 8.0,
            ));
        }
        out.push_str(&format!(
            "<text x=\"{cx}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{label}</text>\n",
            y0 + 20.0
        ));
    }
    out.push_str("</svg>\n");
    out
}

/// Line chart over (x, y) series; NaN points are skipped.
pub fn line_chart(title: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let xs: Vec<f64> = series.iter().flat_map(|(_, pts)| pts.iter().map(|p| p.0)).collect();
    let ys: Vec<f64> =
        series.iter().flat_map(|(_, pts)| pts.iter().map(|p| p.1)).filter(|v| v.is_finite()).collect();
    let x_max = xs.iter().copied().fold(1e-9f64, f64::max);
    let y_max = ys.iter().copied().fold(1e-9f64, f64::max) * 1.15;
    let mut out = header();
    out.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-size=\"15\" text-anchor=\"middle\">{title}</text>\n",
        W / 2.0
    ));
    out.push_str(&axes(y_label, y_max));
    let y0 = H - MARGIN;
    let x0 = MARGIN;
    let sx = (W - 1.5 * MARGIN) / x_max;
    let sy = (y0 - MARGIN / 2.0) / y_max;
    for (si, (label, pts)) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let path: Vec<String> = pts
            .iter()
            .filter(|(_, y)| y.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", x0 + x * sx, y0 - y * sy))
            .collect();
        if path.is_empty() {
            continue;
        }
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            path.join(" ")
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{color}\">{label}</text>\n",
            W - MARGIN * 2.2,
            MARGIN + 16.0 * si as f64,
        ));
    }
    out.push_str("</svg>\n");
    out
}
