//! Dependency-free SVG line plots: one polyline per series plus dashed
//! vertical event markers.

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
}

pub struct VLine {
    pub x: f64,
    pub color: &'static str,
    pub label: String,
}

/// Renders series into a self-contained SVG document.
pub fn line_plot(title: &str, series: &[Series], vlines: &[VLine], width: u32, height: u32) -> String {
    let (w, h) = (width as f64, height as f64);
    let margin = 46.0;
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in &all {
        x_min = x_min.min(*x);
        x_max = x_max.max(*x);
        y_min = y_min.min(*y);
        y_max = y_max.max(*y);
    }
    if !x_min.is_finite() {
        x_min = 0.0;
        x_max = 1.0;
        y_min = 0.0;
        y_max = 1.0;
    }
    if (x_max - x_min).abs() < 1e-12 {
        x_max = x_min + 1.0;
    }
    if (y_max - y_min).abs() < 1e-12 {
        y_max = y_min + 1.0;
    }
    let sx = |x: f64| margin + (x - x_min) / (x_max - x_min) * (w - 2.0 * margin);
    let sy = |y: f64| h - margin - (y - y_min) / (y_max - y_min) * (h - 2.0 * margin);

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    ));
    out.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">{}</text>\n",
        w / 2.0,
        xml_escape(title)
    ));
    // Axes.
    out.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = margin,
        b = h - margin,
        r = w - margin,
        t = margin
    ));
    for (tick, value) in [(0.0, x_min), (1.0, x_max)] {
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"10\" font-family=\"sans-serif\">{value:.3}</text>\n",
            margin + tick * (w - 2.0 * margin),
            h - margin + 14.0
        ));
    }
    for (tick, value) in [(0.0, y_min), (1.0, y_max)] {
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">{value:.3}</text>\n",
            margin - 6.0,
            h - margin - tick * (h - 2.0 * margin) + 3.0
        ));
    }
    for line in vlines {
        out.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{t}\" x2=\"{x}\" y2=\"{b}\" stroke=\"{c}\" stroke-dasharray=\"4,3\" opacity=\"0.7\"/>\n",
            x = sx(line.x),
            t = margin,
            b = h - margin,
            c = line.color
        ));
    }
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
            .collect();
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\" points=\"{}\"/>\n",
            pts.join(" ")
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" font-family=\"sans-serif\" fill=\"{color}\">{}</text>\n",
            w - margin + 4.0,
            margin + 14.0 * i as f64,
            xml_escape(s.label)
        ));
    }
    out.push_str("</svg>\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Minimal well-formedness check used by tests: tags balance and the
/// document parses as a single element tree.
pub fn check_well_formed(svg: &str) -> Result<(), String> {
    let mut stack: Vec<String> = Vec::new();
    let mut rest = svg;
    while let Some(start) = rest.find('<') {
        let Some(end_rel) = rest[start..].find('>') else {
            return Err("unterminated tag".into());
        };
        let tag = &rest[start + 1..start + end_rel];
        rest = &rest[start + end_rel + 1..];
        if tag.starts_with('?') || tag.starts_with('!') {
            continue;
        }
        if let Some(name) = tag.strip_prefix('/') {
            match stack.pop() {
                Some(open) if open == name.trim() => {}
                Some(open) => return Err(format!("mismatched </{}> for <{}>", name.trim(), open)),
                None => return Err(format!("stray closing tag </{}>", name.trim())),
            }
        } else if !tag.ends_with('/') {
            let name = tag.split_whitespace().next().unwrap_or("").to_string();
            stack.push(name);
        }
    }
    if stack.is_empty() {
        Ok(())
    } else {
        Err(format!("unclosed tags: {stack:?}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plot_is_well_formed_with_one_polyline_per_series() {
        let svg = line_plot(
            "demo",
            &[Series {
                label: "x",
                points: (0..50).map(|i| (i as f64, (i as f64 * 0.2).sin())).collect(),
            }],
            &[VLine {
                x: 25.0,
                color: "green",
                label: "td".into(),
            }],
            640,
            360,
        );
        check_well_formed(&svg).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("stroke-dasharray"));
    }

    #[test]
    fn empty_series_still_renders() {
        let svg = line_plot("empty", &[], &[], 320, 200);
        check_well_formed(&svg).unwrap();
    }

    #[test]
    fn escapes_labels() {
        let svg = line_plot(
            "a<b&c",
            &[Series {
                label: "x>y",
                points: vec![(0.0, 0.0), (1.0, 1.0)],
            }],
            &[],
            320,
            200,
        );
        check_well_formed(&svg).unwrap();
        assert!(svg.contains("a&lt;b&amp;c"));
    }
}
