use std::fmt::Write as _;

use crate::analytics::DistributionRow;

/// Fixed chart geometry, in SVG user units.
#[derive(Debug, Clone, Copy)]
pub struct ChartLayout {
    pub bar_width: f64,
    pub bar_gap: f64,
    pub plot_height: f64,
    pub margin_left: f64,
    pub margin_top: f64,
    pub margin_bottom: f64,
    pub margin_right: f64,
}

impl Default for ChartLayout {
    fn default() -> Self {
        ChartLayout {
            bar_width: 36.0,
            bar_gap: 18.0,
            plot_height: 280.0,
            margin_left: 70.0,
            margin_top: 60.0,
            margin_bottom: 150.0,
            margin_right: 30.0,
        }
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            // not representable in XML 1.0
            c if (c as u32) < 0x20 && !matches!(c, '\t' | '\n' | '\r') => out.push(' '),
            c => out.push(c),
        }
    }
    out
}

/// Renders a distribution as a standalone SVG bar chart.
///
/// The y axis always spans 0-100%, so bar heights are directly proportional
/// to the percentages. Bars keep the order of `dist`.
pub fn render_bar_chart(dist: &[DistributionRow], title: &str) -> Vec<u8> {
    render_with_layout(dist, title, &ChartLayout::default())
}

pub fn render_with_layout(dist: &[DistributionRow], title: &str, layout: &ChartLayout) -> Vec<u8> {
    let slots = dist.len().max(3) as f64;
    let plot_width = slots * (layout.bar_width + layout.bar_gap) + layout.bar_gap;
    let width = layout.margin_left + plot_width + layout.margin_right;
    let height = layout.margin_top + layout.plot_height + layout.margin_bottom;
    let x0 = layout.margin_left;
    let y_base = layout.margin_top + layout.plot_height;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.2}" height="{height:.2}" viewBox="0 0 {width:.2} {height:.2}" font-family="sans-serif">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{width:.2}" height="{height:.2}" fill="white"/>"#);
    let _ =
        writeln!(s, r#"<text class="title" x="{:.2}" y="30.00" text-anchor="middle" font-size="16">{}</text>"#, width / 2.0, escape(title));

    // axes and gridlines
    let _ = writeln!(s, r##"<g class="axes" stroke="#333" stroke-width="1">"##);
    let _ = writeln!(s, r#"<line x1="{x0:.2}" y1="{:.2}" x2="{x0:.2}" y2="{y_base:.2}"/>"#, layout.margin_top);
    let _ = writeln!(s, r#"<line x1="{x0:.2}" y1="{y_base:.2}" x2="{:.2}" y2="{y_base:.2}"/>"#, x0 + plot_width);
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g class="y-ticks" font-size="11" text-anchor="end">"#);
    for pct in [0u32, 25, 50, 75, 100] {
        let y = y_base - layout.plot_height * f64::from(pct) / 100.0;
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="#333"/><text x="{:.2}" y="{:.2}">{pct}%</text>"##,
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<text class="y-label" transform="translate(18.00 {:.2}) rotate(-90)" text-anchor="middle" font-size="12">Share of papers (%)</text>"#,
        layout.margin_top + layout.plot_height / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text class="x-label" x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">Label</text>"#,
        x0 + plot_width / 2.0,
        height - 10.0
    );

    if dist.is_empty() {
        let _ = writeln!(
            s,
            r#"<text class="no-data" x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">no data</text>"#,
            x0 + plot_width / 2.0,
            layout.margin_top + layout.plot_height / 2.0
        );
    } else {
        let _ = writeln!(s, r#"<g class="bars">"#);
        for (i, row) in dist.iter().enumerate() {
            let pct = row.percentage.clamp(0.0, 100.0);
            let bar_h = layout.plot_height * pct / 100.0;
            let x = x0 + layout.bar_gap + i as f64 * (layout.bar_width + layout.bar_gap);
            let y = y_base - bar_h;
            let cx = x + layout.bar_width / 2.0;
            let label = escape(&row.label);
            let _ = writeln!(
                s,
                r##"<rect class="bar" x="{x:.2}" y="{y:.2}" width="{:.2}" height="{bar_h:.2}" fill="#4c72b0" data-label="{label}" data-count="{}" data-percentage="{pct:.4}"/>"##,
                layout.bar_width, row.count
            );
            let _ =
                writeln!(s, r#"<text class="value" x="{cx:.2}" y="{:.2}" text-anchor="middle" font-size="10">{pct:.1}%</text>"#, y - 4.0);
            let _ = writeln!(
                s,
                r#"<text class="tick-label" transform="translate({cx:.2} {:.2}) rotate(-45)" text-anchor="end" font-size="10">{label}</text>"#,
                y_base + 12.0
            );
        }
        let _ = writeln!(s, "</g>");
    }
    let _ = writeln!(s, "</svg>");
    s.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escapes_markup_in_labels() {
        assert_eq!(escape(r#"a<b>&"c'"#), "a&lt;b&gt;&amp;&quot;c&apos;");
        assert_eq!(escape("x\u{1}y"), "x y");
    }

    #[test]
    fn empty_chart_says_no_data() {
        let svg = String::from_utf8(render_bar_chart(&[], "empty")).unwrap();
        assert!(svg.contains(">no data</text>"));
        assert!(!svg.contains(r#"class="bar""#));
    }

    #[test]
    fn full_bar_spans_plot_height() {
        let rows = vec![DistributionRow { label: "X".into(), count: 4, percentage: 100.0 }];
        let svg = String::from_utf8(render_bar_chart(&rows, "one")).unwrap();
        assert!(svg.contains(r#"y="60.00" width="36.00" height="280.00""#), "{svg}");
    }
}
