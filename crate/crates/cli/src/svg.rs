//! Self-contained static SVG log-log plot of errors against the contrast
//! scale `3^{-m}`, one polyline per eigenvalue index, with a slope-1
//! reference line.

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 110.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 55.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

/// One curve: `(k, [(m, median_error)])`.
pub fn rate_plot(title: &str, curves: &[(usize, Vec<(u32, f64)>)]) -> String {
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for (_, c) in curves {
        for &(m, e) in c {
            if e > 0.0 {
                pts.push((3f64.powi(-(m as i32)).log10(), e.log10()));
            }
        }
    }
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"monospace\" font-size=\"12\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    if pts.is_empty() {
        svg.push_str("<text x=\"40\" y=\"40\">no positive data</text>\n</svg>\n");
        return svg;
    }
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let pad = |a: &mut f64, b: &mut f64| {
        let d = (*b - *a).max(0.2);
        *a -= 0.08 * d;
        *b += 0.08 * d;
    };
    pad(&mut x0, &mut x1);
    pad(&mut y0, &mut y1);
    let sx = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * (WIDTH - MARGIN_L - MARGIN_R);
    let sy = |y: f64| HEIGHT - MARGIN_B - (y - y0) / (y1 - y0) * (HEIGHT - MARGIN_T - MARGIN_B);

    // Axes.
    svg.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n",
        MARGIN_L,
        MARGIN_T,
        WIDTH - MARGIN_L - MARGIN_R,
        HEIGHT - MARGIN_T - MARGIN_B
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        16.0,
        xml_escape(title)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">3^-m</text>\n",
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        HEIGHT - 12.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">median error</text>\n",
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0
    ));

    // x ticks at the actual m values.
    let mut ms: Vec<u32> = curves
        .iter()
        .flat_map(|(_, c)| c.iter().map(|p| p.0))
        .collect();
    ms.sort_unstable();
    ms.dedup();
    for &m in &ms {
        let x = sx(3f64.powi(-(m as i32)).log10());
        svg.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{}\" x2=\"{x:.1}\" y2=\"{}\" stroke=\"#bbb\" stroke-dasharray=\"3 3\"/>\n",
            MARGIN_T,
            HEIGHT - MARGIN_B
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{}\" text-anchor=\"middle\">3^-{m}</text>\n",
            HEIGHT - MARGIN_B + 18.0
        ));
    }
    // y ticks at decades.
    let mut d = y0.ceil() as i64;
    while (d as f64) < y1 {
        let y = sy(d as f64);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y:.1}\" x2=\"{}\" y2=\"{y:.1}\" stroke=\"#bbb\" stroke-dasharray=\"3 3\"/>\n",
            MARGIN_L,
            WIDTH - MARGIN_R
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{y:.1}\" text-anchor=\"end\" dominant-baseline=\"middle\">1e{d}</text>\n",
            MARGIN_L - 6.0
        ));
        d += 1;
    }

    // Slope-1 reference through the center of mass.
    let cx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let cy = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    svg.push_str(&format!(
        "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#888\" stroke-dasharray=\"6 4\"/>\n",
        sx(x0),
        sy(cy + (x0 - cx)),
        sx(x1),
        sy(cy + (x1 - cx)),
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" fill=\"#888\">slope 1</text>\n",
        WIDTH - MARGIN_R + 8.0,
        sy(cy + (x1 - cx)) + 4.0
    ));

    for (ci, (k, curve)) in curves.iter().enumerate() {
        let color = PALETTE[ci % PALETTE.len()];
        let path: Vec<String> = curve
            .iter()
            .filter(|p| p.1 > 0.0)
            .map(|&(m, e)| {
                format!("{:.2},{:.2}", sx(3f64.powi(-(m as i32)).log10()), sy(e.log10()))
            })
            .collect();
        if path.len() >= 2 {
            svg.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                path.join(" ")
            ));
        }
        for p in &path {
            let mut it = p.split(',');
            let (x, y) = (it.next().unwrap(), it.next().unwrap());
            svg.push_str(&format!("<circle cx=\"{x}\" cy=\"{y}\" r=\"3\" fill=\"{color}\"/>\n"));
        }
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">k={k}</text>\n",
            WIDTH - MARGIN_R + 8.0,
            MARGIN_T + 16.0 * ci as f64 + 12.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
