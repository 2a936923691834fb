//! Static SVG renderings of the five views, built from the same payloads the
//! API serves.

use std::fmt::Write;

use crate::network::NetworkView;
use crate::som::GridCoord;
use crate::sotm::AlluvialFlows;

const W: f64 = 800.0;
const H: f64 = 500.0;
const MARGIN: f64 = 50.0;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Blue→yellow ramp for `t ∈ [0, 1]`.
pub fn ramp(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.5 };
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(33.0, 253.0), lerp(102.0, 231.0), lerp(172.0, 37.0))
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

struct Doc {
    body: String,
}

impl Doc {
    fn new(title: &str) -> Self {
        let mut body = String::new();
        let _ = write!(
            body,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
        );
        let _ = write!(body, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = write!(
            body,
            r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
            W / 2.0,
            escape(title)
        );
        Doc { body }
    }

    fn text(&mut self, x: f64, y: f64, size: u32, anchor: &str, s: &str) {
        let _ = write!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="{size}" text-anchor="{anchor}">{}</text>"#,
            escape(s)
        );
    }

    fn line(&mut self, a: (f64, f64), b: (f64, f64), stroke: &str, width: f64, opacity: f64) {
        let _ = write!(
            self.body,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{stroke}" stroke-width="{width}" stroke-opacity="{opacity:.3}"/>"#,
            a.0, a.1, b.0, b.1
        );
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, title: Option<&str>) {
        let _ = write!(
            self.body,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}">"#
        );
        if let Some(t) = title {
            let _ = write!(self.body, "<title>{}</title>", escape(t));
        }
        self.body.push_str("</rect>");
    }

    fn path(&mut self, d: &str, stroke: &str, fill: &str, width: f64, opacity: f64, title: &str) {
        let _ = write!(
            self.body,
            r#"<path d="{d}" stroke="{stroke}" fill="{fill}" stroke-width="{width}" opacity="{opacity:.3}"><title>{}</title></path>"#,
            escape(title)
        );
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, fill: &str, stroke: &str, title: &str) {
        let _ = write!(
            self.body,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r:.2}" fill="{fill}" stroke="{stroke}"><title>{}</title></circle>"#,
            escape(title)
        );
    }

    fn empty(&mut self, message: &str) {
        self.text(W / 2.0, H / 2.0, 14, "middle", message);
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>");
        self.body
    }
}

/// Linear map of `[lo, hi]` onto the vertical plot area.
struct YScale {
    lo: f64,
    hi: f64,
}

impl YScale {
    fn fit<'a>(values: impl Iterator<Item = &'a f64>) -> Self {
        let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
        if !lo.is_finite() {
            return YScale { lo: 0.0, hi: 1.0 };
        }
        if hi - lo < 1e-12 {
            return YScale {
                lo: lo - 0.5,
                hi: hi + 0.5,
            };
        }
        YScale { lo, hi }
    }

    fn y(&self, v: f64) -> f64 {
        H - MARGIN - (v - self.lo) / (self.hi - self.lo) * (H - 2.0 * MARGIN)
    }
}

fn x_at(i: usize, n: usize) -> f64 {
    if n <= 1 {
        W / 2.0
    } else {
        MARGIN + i as f64 / (n - 1) as f64 * (W - 2.0 * MARGIN)
    }
}

fn axes(doc: &mut Doc, x_labels: &[String], scale: &YScale) {
    doc.line((MARGIN, H - MARGIN), (W - MARGIN, H - MARGIN), "#333", 1.0, 1.0);
    doc.line((MARGIN, MARGIN), (MARGIN, H - MARGIN), "#333", 1.0, 1.0);
    doc.text(MARGIN - 6.0, scale.y(scale.lo) + 4.0, 10, "end", &format!("{:.3}", scale.lo));
    doc.text(MARGIN - 6.0, scale.y(scale.hi) + 4.0, 10, "end", &format!("{:.3}", scale.hi));
    let n = x_labels.len();
    let stride = n.div_ceil(8).max(1);
    for (i, l) in x_labels.iter().enumerate().step_by(stride) {
        doc.text(x_at(i, n), H - MARGIN + 16.0, 10, "middle", l);
    }
}

fn event_lines(doc: &mut Doc, n: usize, events: &[(usize, String)]) {
    for (i, label) in events {
        let x = x_at(*i, n);
        doc.line((x, MARGIN), (x, H - MARGIN), "#c00", 1.0, 0.8);
        doc.text(x + 3.0, MARGIN + 10.0, 10, "start", label);
    }
}

pub struct LineSeries {
    pub label: String,
    pub values: Vec<Option<f64>>,
    pub highlighted: bool,
}

/// Multi-series line chart. When any series is highlighted the others are
/// drawn dimmed.
pub fn line_chart(
    title: &str,
    x_labels: &[String],
    series: &[LineSeries],
    events: &[(usize, String)],
) -> String {
    let mut doc = Doc::new(title);
    let all: Vec<f64> = series.iter().flat_map(|s| s.values.iter().flatten().copied()).collect();
    if series.is_empty() || x_labels.is_empty() || all.is_empty() {
        doc.empty("no data in the selected range");
        return doc.finish();
    }
    let scale = YScale::fit(all.iter());
    axes(&mut doc, x_labels, &scale);
    let any_highlight = series.iter().any(|s| s.highlighted);
    let n = x_labels.len();
    for (si, s) in series.iter().enumerate() {
        let mut d = String::new();
        let mut pen_down = false;
        for (i, v) in s.values.iter().enumerate() {
            match v {
                Some(v) => {
                    let cmd = if pen_down { 'L' } else { 'M' };
                    let _ = write!(d, "{cmd}{:.2},{:.2} ", x_at(i, n), scale.y(*v));
                    pen_down = true;
                }
                None => pen_down = false,
            }
        }
        let opacity = if !any_highlight || s.highlighted { 1.0 } else { 0.15 };
        doc.path(&d, PALETTE[si % PALETTE.len()], "none", 1.5, opacity, &s.label);
    }
    event_lines(&mut doc, n, events);
    doc.finish()
}

/// Stacked areas of signed layers (positive parts stack up, negative down).
pub fn stacked_area(
    title: &str,
    x_labels: &[String],
    layers: &[(String, Vec<f64>)],
    events: &[(usize, String)],
) -> String {
    let mut doc = Doc::new(title);
    let n = x_labels.len();
    if layers.is_empty() || n == 0 {
        doc.empty("no data in the selected range");
        return doc.finish();
    }
    let mut pos = vec![0.0; n];
    let mut neg = vec![0.0; n];
    let mut bands = Vec::new();
    for (name, vals) in layers {
        let mut lower = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n);
        for i in 0..n {
            let v = vals.get(i).copied().unwrap_or(0.0);
            let base = if v >= 0.0 { &mut pos[i] } else { &mut neg[i] };
            lower.push(*base);
            *base += v;
            upper.push(*base);
        }
        bands.push((name, lower, upper));
    }
    let scale = YScale::fit(pos.iter().chain(&neg).chain(std::iter::once(&0.0)));
    axes(&mut doc, x_labels, &scale);
    for (li, (name, lower, upper)) in bands.iter().enumerate() {
        let mut d = String::new();
        for i in 0..n {
            let _ = write!(d, "{}{:.2},{:.2} ", if i == 0 { 'M' } else { 'L' }, x_at(i, n), scale.y(upper[i]));
        }
        for i in (0..n).rev() {
            let _ = write!(d, "L{:.2},{:.2} ", x_at(i, n), scale.y(lower[i]));
        }
        d.push('Z');
        doc.path(&d, "none", PALETTE[li % PALETTE.len()], 0.0, 0.85, name);
    }
    event_lines(&mut doc, n, events);
    doc.finish()
}

/// Map grid colored by `values` (min→blue, max→yellow) with entity
/// trajectories drawn as arrows between consecutive unit centers.
pub fn grid_heatmap(
    title: &str,
    width: usize,
    height: usize,
    values: &[f64],
    trajectories: &[(String, Vec<GridCoord>)],
) -> String {
    let mut doc = Doc::new(title);
    let cell = ((W - 2.0 * MARGIN) / width as f64).min((H - 2.0 * MARGIN) / height as f64);
    let scale = YScale::fit(values.iter());
    for (i, v) in values.iter().enumerate() {
        let (c, r) = (i % width, i / width);
        let t = (v - scale.lo) / (scale.hi - scale.lo);
        doc.rect(
            MARGIN + c as f64 * cell,
            MARGIN + r as f64 * cell,
            cell - 1.0,
            cell - 1.0,
            &ramp(t),
            Some(&format!("unit {i}: {v:.4}")),
        );
    }
    let center = |g: &GridCoord| {
        (
            MARGIN + (g.col as f64 + 0.5) * cell,
            MARGIN + (g.row as f64 + 0.5) * cell,
        )
    };
    for (ti, (label, path)) in trajectories.iter().enumerate() {
        let color = PALETTE[ti % PALETTE.len()];
        for w in path.windows(2) {
            if w[0] != w[1] {
                doc.line(center(&w[0]), center(&w[1]), color, 2.0, 0.9);
            }
        }
        if let Some(last) = path.last() {
            let (x, y) = center(last);
            doc.circle(x, y, 4.0, color, "black", label);
            doc.text(x + 6.0, y - 6.0, 11, "start", label);
        }
    }
    doc.finish()
}

/// Alluvial diagram: one column per time, node height ∝ cluster size,
/// ribbons for transitions. `y_positions` (in [0, 1] per unit) distorts the
/// vertical placement; otherwise units are evenly spaced.
pub fn alluvial(
    title: &str,
    flows: &AlluvialFlows,
    coloring: &[Vec<f64>],
    y_positions: Option<&[Vec<f64>]>,
    highlight: &[(usize, usize)],
) -> String {
    let mut doc = Doc::new(title);
    let nt = flows.times.len();
    if nt == 0 {
        doc.empty("no data in the selected range");
        return doc.finish();
    }
    let units = flows.node_sizes.first().map_or(0, Vec::len);
    let max_size = flows.node_sizes.iter().flatten().copied().max().unwrap_or(1).max(1) as f64;
    let band = (H - 2.0 * MARGIN) / units.max(1) as f64;
    let node_w = ((W - 2.0 * MARGIN) / nt as f64 * 0.3).clamp(2.0, 14.0);
    let center_y = |t: usize, i: usize| -> f64 {
        match y_positions {
            Some(y) => MARGIN + band / 2.0 + y[t][i] * (H - 2.0 * MARGIN - band),
            None => MARGIN + (i as f64 + 0.5) * band,
        }
    };
    let node_h = |t: usize, i: usize| flows.node_sizes[t][i] as f64 / max_size * band * 0.8;
    for (t, tr) in flows.transitions.iter().enumerate() {
        for f in &tr.flows {
            let (x0, x1) = (x_at(t, nt) + node_w / 2.0, x_at(t + 1, nt) - node_w / 2.0);
            let (y0, y1) = (center_y(t, f.from), center_y(t + 1, f.to));
            let mid = (x0 + x1) / 2.0;
            let d = format!("M{x0:.2},{y0:.2} C{mid:.2},{y0:.2} {mid:.2},{y1:.2} {x1:.2},{y1:.2}");
            let width = (f.count as f64 / max_size * band * 0.8).max(0.5);
            doc.path(&d, "#888", "none", width, 0.35, &f.entities.join(", "));
        }
    }
    for t in 0..nt {
        for i in 0..units {
            if flows.node_sizes[t][i] == 0 {
                continue;
            }
            let h = node_h(t, i);
            let c = coloring.get(t).and_then(|r| r.get(i)).copied().unwrap_or(0.5);
            doc.rect(
                x_at(t, nt) - node_w / 2.0,
                center_y(t, i) - h / 2.0,
                node_w,
                h,
                &ramp(c),
                Some(&format!("{} unit {i}: {}", flows.times[t], flows.node_sizes[t][i])),
            );
        }
    }
    for w in highlight.windows(2) {
        let (a, b) = (w[0], w[1]);
        doc.line((x_at(a.0, nt), center_y(a.0, a.1)), (x_at(b.0, nt), center_y(b.0, b.1)), "#d62728", 2.5, 1.0);
    }
    let stride = nt.div_ceil(8).max(1);
    for t in (0..nt).step_by(stride) {
        doc.text(x_at(t, nt), H - MARGIN + 16.0, 10, "middle", flows.times[t].label());
    }
    doc.finish()
}

/// Force-directed network: node radius ∝ √count, edge opacity = darkness,
/// distressed nodes outlined red.
pub fn network(title: &str, view: &NetworkView<f64>, distress_threshold: f64) -> String {
    let mut doc = Doc::new(title);
    if view.nodes.is_empty() {
        doc.empty("no records in the selected window");
        return doc.finish();
    }
    let sx = (W - 2.0 * MARGIN) / view.frame.width;
    let sy = (H - 2.0 * MARGIN) / view.frame.height;
    let at = |x: f64, y: f64| (MARGIN + x * sx, MARGIN + y * sy);
    let pos: std::collections::HashMap<&str, (f64, f64)> =
        view.nodes.iter().map(|n| (n.id.as_str(), at(n.x, n.y))).collect();
    for e in &view.edges {
        if let (Some(&a), Some(&b)) = (pos.get(e.a.as_str()), pos.get(e.b.as_str())) {
            doc.line(a, b, "#000", 1.0, e.darkness.max(0.05));
        }
    }
    let max_count = view.nodes.iter().map(|n| n.count).max().unwrap_or(1).max(1) as f64;
    for n in &view.nodes {
        let (x, y) = pos[n.id.as_str()];
        let r = 3.0 + 12.0 * (n.count as f64 / max_count).sqrt();
        let stroke = if n.distress_share >= distress_threshold { "#d62728" } else { "#333" };
        doc.circle(
            x,
            y,
            r,
            "#9ecae1",
            stroke,
            &format!("{}: {} mentions, distress {:.2}", n.id, n.count, n.distress_share),
        );
        doc.text(x, y - r - 2.0, 10, "middle", &n.id);
    }
    doc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn well_formed(svg: &str) -> bool {
        svg.starts_with("<svg") && svg.ends_with("</svg>") && !svg.contains("NaN")
    }

    #[test]
    fn escapes_labels() {
        let s = line_chart(
            "a<b & c",
            &["t1".into(), "t2".into()],
            &[LineSeries {
                label: "\"x\"".into(),
                values: vec![Some(1.0), None],
                highlighted: false,
            }],
            &[(1, "crisis".into())],
        );
        assert!(well_formed(&s));
        assert!(s.contains("a&lt;b &amp; c"));
        assert!(s.contains("&quot;x&quot;"));
    }

    #[test]
    fn empty_inputs_render_message() {
        let s = line_chart("t", &[], &[], &[]);
        assert!(well_formed(&s) && s.contains("no data"));
        let s = stacked_area("t", &["a".into()], &[], &[]);
        assert!(well_formed(&s));
    }

    #[test]
    fn ramp_endpoints() {
        assert_eq!(ramp(0.0), "#2166ac");
        assert_eq!(ramp(1.0), "#fde725");
        assert_eq!(ramp(f64::NAN), ramp(0.5));
    }

    #[test]
    fn heatmap_draws_every_unit() {
        let s = grid_heatmap("m", 3, 2, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0], &[(
            "US".into(),
            vec![GridCoord { col: 0, row: 0 }, GridCoord { col: 2, row: 1 }],
        )]);
        assert!(well_formed(&s));
        assert_eq!(s.matches("<rect").count(), 1 + 6);
    }
}
