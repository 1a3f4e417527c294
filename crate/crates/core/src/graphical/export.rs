//! CSV tables and the space-time SVG diagram.

use std::fmt::Write as _;

use super::{ArrowField, SpaceTimeGrid};

/// `t,x,occupancy` rows for every cell of the grid.
pub fn grid_csv(grid: &SpaceTimeGrid) -> String {
    let (x0, x1) = grid.x_range();
    let (t0, t1) = grid.t_range();
    let mut out = String::from("t,x,occupancy\n");
    for t in t0..=t1 {
        for x in x0..x1 {
            let _ = writeln!(out, "{t},{x},{}", grid.get(x, t).unwrap_or(0));
        }
    }
    out
}

/// `edge_left_site,time` rows for edges with left site in `[lo, hi)`.
pub fn arrows_csv(field: &ArrowField, lo: i64, hi: i64) -> String {
    let mut out = String::from("edge_left_site,time\n");
    for e in lo..hi {
        for t in field.edge(e) {
            let _ = writeln!(out, "{e},{t}");
        }
    }
    out
}

/// Sites of the ζ-path started at `(x, t0)`, as polyline vertices `(site, time)`.
pub fn forward_path_vertices(field: &ArrowField, x: i64, t0: f64, t1: f64) -> Vec<(f64, f64)> {
    let w = field.window();
    let mut pts = vec![(x as f64, t0)];
    let mut pos = x;
    for (u, e) in field.chronological(w.lo(), w.hi(), t0, t1) {
        if e == pos || e + 1 == pos {
            pts.push((pos as f64, u));
            pos = if e == pos { pos + 1 } else { pos - 1 };
            pts.push((pos as f64, u));
        }
    }
    pts.push((pos as f64, t1));
    pts
}

/// Space-time diagram: one vertical line per site, a horizontal arrow for each event, time
/// running upwards, optional occupancy dots at the bottom and one highlighted ζ-path.
pub fn spacetime_svg(
    field: &ArrowField,
    x0: i64,
    x1: i64,
    t_end: f64,
    occupancy: Option<&[u8]>,
    path_from: Option<i64>,
) -> String {
    let (sx, sy, m) = (40.0, 60.0, 30.0);
    let width = (x1 - x0) as f64 * sx + 2.0 * m;
    let height = t_end * sy + 2.0 * m + 20.0;
    let px = |x: f64| m + (x - x0 as f64) * sx;
    let py = |t: f64| m + (t_end - t) * sy;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.1}" height="{height:.1}" viewBox="0 0 {width:.1} {height:.1}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<g stroke="black" stroke-width="1">"#);
    for x in x0..=x1 {
        let _ = writeln!(
            s,
            r#"<line x1="{a:.2}" y1="{b:.2}" x2="{a:.2}" y2="{c:.2}"/>"#,
            a = px(x as f64),
            b = py(0.0),
            c = py(t_end)
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g stroke="black" stroke-width="1.5">"#);
    for e in x0..x1 {
        for &t in field.edge(e) {
            if t > t_end {
                break;
            }
            let (a, b, y) = (px(e as f64) + 4.0, px(e as f64 + 1.0) - 4.0, py(t));
            let _ = writeln!(s, r#"<line x1="{a:.2}" y1="{y:.2}" x2="{b:.2}" y2="{y:.2}"/>"#);
            let _ = writeln!(
                s,
                r#"<polyline fill="none" points="{:.2},{:.2} {a:.2},{y:.2} {:.2},{:.2}"/>"#,
                a + 5.0,
                y - 3.0,
                a + 5.0,
                y + 3.0
            );
            let _ = writeln!(
                s,
                r#"<polyline fill="none" points="{:.2},{:.2} {b:.2},{y:.2} {:.2},{:.2}"/>"#,
                b - 5.0,
                y - 3.0,
                b - 5.0,
                y + 3.0
            );
        }
    }
    let _ = writeln!(s, "</g>");
    if let Some(occ) = occupancy {
        let _ = writeln!(s, r#"<g stroke="black">"#);
        for (i, &v) in occ.iter().enumerate() {
            let fill = if v == 1 { "black" } else { "white" };
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="5" fill="{fill}"/>"#,
                px((x0 + i as i64) as f64),
                py(0.0) + 12.0
            );
        }
        let _ = writeln!(s, "</g>");
    }
    if let Some(x) = path_from {
        let pts: Vec<String> = forward_path_vertices(field, x, 0.0, t_end)
            .into_iter()
            .filter(|&(px_, _)| px_ >= x0 as f64 && px_ <= x1 as f64)
            .map(|(a, t)| format!("{:.2},{:.2}", px(a), py(t)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="black" stroke-width="4" points="{}"/>"#,
            pts.join(" ")
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" font-family="sans-serif">space</text>"#,
        width / 2.0 - 15.0,
        height - 4.0
    );
    let _ = writeln!(s, "</svg>");
    s
}

#[cfg(test)]
mod tests {
    use super::super::{Configuration, Trajectory, Window};
    use super::*;

    #[test]
    fn csv_headers_and_rows() {
        let w = Window::closed(0, 3, 2.0).unwrap();
        let f = ArrowField::from_events(&w, &[(1, 0.5)]).unwrap();
        assert_eq!(arrows_csv(&f, 0, 3), "edge_left_site,time\n1,0.5\n");
        let tr = Trajectory::new(f, Configuration::from_sites(0, vec![0, 1, 0, 0]).unwrap()).unwrap();
        let csv = grid_csv(&tr.grid(0, 4, 0, 1).unwrap());
        assert!(csv.starts_with("t,x,occupancy\n0,0,0\n0,1,1\n"));
        assert!(csv.contains("1,2,1\n"));
        assert_eq!(csv.lines().count(), 9);
    }

    #[test]
    fn path_vertices_follow_arrows() {
        let w = Window::closed(0, 3, 2.0).unwrap();
        let f = ArrowField::from_events(&w, &[(1, 0.5), (2, 1.0), (0, 1.5)]).unwrap();
        let v = forward_path_vertices(&f, 1, 0.0, 2.0);
        assert_eq!(v.last().unwrap().0, f.trace(1, 0.0, 2.0).unwrap() as f64);
        assert_eq!(v.len(), 6);
    }

    #[test]
    fn svg_is_well_formed() {
        let w = Window::closed(0, 5, 3.0).unwrap();
        let f = ArrowField::sample(&w, 1).unwrap();
        let svg = spacetime_svg(&f, 0, 5, 3.0, Some(&[1, 0, 1, 0, 0, 1]), Some(2));
        assert!(svg.starts_with("<?xml"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<svg").count(), 1);
    }
}
