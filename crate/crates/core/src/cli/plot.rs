//! Static SVG rendering of the line web of a projective system.

use std::fmt::Write;

use crate::fiber::{solve_fiber, FiberSystem, Point};

const CANVAS: f64 = 600.0;
const MARGIN: f64 = 20.0;

/// Draws one short segment per fiber root at the centre of each of
/// `grid × grid` cells, and a marker at each singular point. Cells whose
/// fiber cannot be solved are left empty.
pub fn render_svg(sys: &FiberSystem, grid: usize, singular: &[Point]) -> String {
    let dom = sys.domain;
    let scale = (CANVAS - 2.0 * MARGIN) / dom.width().max(dom.height());
    let width = dom.width() * scale + 2.0 * MARGIN;
    let height = dom.height() * scale + 2.0 * MARGIN;
    let to_px = |p: Point| (MARGIN + (p.x - dom.x.0) * scale, MARGIN + (dom.y.1 - p.y) * scale);
    let cw = dom.width() / grid as f64;
    let ch = dom.height() / grid as f64;
    let half = 0.35 * cw.min(ch);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.1}" height="{height:.1}" viewBox="0 0 {width:.1} {height:.1}">"#
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{MARGIN:.1}" y="{MARGIN:.1}" width="{:.1}" height="{:.1}" fill="white" stroke="#888" stroke-width="1"/>"##,
        dom.width() * scale,
        dom.height() * scale
    );
    let _ = writeln!(svg, r##"<g stroke="#1f4e8c" stroke-width="1.2" stroke-linecap="round">"##);
    let mut gaps = 0;
    for i in 0..grid {
        for j in 0..grid {
            let c = Point::new(dom.x.0 + cw * (i as f64 + 0.5), dom.y.0 + ch * (j as f64 + 0.5));
            let Ok(roots) = solve_fiber(sys, c) else {
                gaps += 1;
                continue;
            };
            for r in roots {
                let (s, co) = r.angle().sin_cos();
                let a = to_px(Point::new(c.x - half * co, c.y - half * s));
                let b = to_px(Point::new(c.x + half * co, c.y + half * s));
                let _ = writeln!(
                    svg,
                    r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}"/>"#,
                    a.0, a.1, b.0, b.1
                );
            }
        }
    }
    let _ = writeln!(svg, "</g>");
    if gaps > 0 {
        log::info!("{gaps} grid cells left empty");
    }
    for p in singular {
        let (x, y) = to_px(*p);
        let _ = writeln!(
            svg,
            r##"<circle cx="{x:.3}" cy="{y:.3}" r="4" fill="none" stroke="#c0392b" stroke-width="2"/>"##
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::{BinaryForm, Rect};

    fn system(coeffs: &[&str]) -> FiberSystem {
        FiberSystem::projective(BinaryForm::parse(coeffs).unwrap(), Rect::new((-2.0, 2.0), (-2.0, 2.0)))
    }

    fn lines(svg: &str) -> usize {
        svg.matches("<line ").count()
    }

    #[test]
    fn two_segments_per_cell() {
        let svg = render_svg(&system(&["y", "-2*x", "-y"]), 20, &[Point::new(0.0, 0.0)]);
        assert_eq!(lines(&svg), 2 * 400);
        assert_eq!(svg.matches("<circle ").count(), 1);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn three_line_web() {
        // dy · dx · (dx + dy)
        let svg = render_svg(&system(&["0", "1", "1", "0"]), 10, &[]);
        assert_eq!(lines(&svg), 3 * 100);
    }

    #[test]
    fn unsolvable_cells_are_gaps() {
        // x² dx² + dy² has no real directions off the line x = 0
        let svg = render_svg(&system(&["x^2", "0", "1"]), 10, &[]);
        assert_eq!(lines(&svg), 0);
    }

    #[test]
    fn output_is_deterministic() {
        let sys = system(&["x*y", "-(x^2 - y^2)", "-x*y"]);
        assert_eq!(render_svg(&sys, 12, &[]), render_svg(&sys, 12, &[]));
    }
}
