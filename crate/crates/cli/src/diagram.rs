//! Bifurcation diagram: `ρ` against `‖ψ‖_{L²}` for any number of branch
//! tables, with dashed markers where the Morse index jumps.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;
use superliouville::branch_solver::BranchRow;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const TICKS: usize = 5;
const PALETTE: [&str; 4] = ["#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub name: String,
    /// `(ρ, ‖ψ‖, index_l)` in file order.
    pub points: Vec<(f64, f64, usize)>,
}

impl Branch {
    pub fn from_rows(name: &str, rows: &[BranchRow]) -> Self {
        Self { name: name.into(), points: rows.iter().map(|r| (r.rho, r.psi_norm, r.index_l)).collect() }
    }
}

#[derive(Deserialize)]
struct Row {
    rho: f64,
    index_l: usize,
    psi_l2: f64,
}

pub fn read_branch(path: &Path) -> Result<Branch, String> {
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "branch".into());
    let mut rdr = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut points = Vec::new();
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let r = row.map_err(|e| format!("{} row {}: {e}", path.display(), i + 1))?;
        if !r.rho.is_finite() || !r.psi_l2.is_finite() {
            return Err(format!("{} row {}: non-finite value", path.display(), i + 1));
        }
        points.push((r.rho, r.psi_l2, r.index_l));
    }
    Ok(Branch { name, points })
}

fn color(name: &str, k: usize) -> &'static str {
    let lower = name.to_ascii_lowercase();
    if lower.contains("trivial") {
        "#444444"
    } else if lower.contains("killing") {
        "#1f77b4"
    } else {
        PALETTE[k % PALETTE.len()]
    }
}

/// Locations of index jumps: the integer inside the bracketing interval
/// when there is one, the midpoint otherwise.
pub fn index_jumps(b: &Branch) -> Vec<f64> {
    b.points
        .windows(2)
        .filter(|w| w[0].2 != w[1].2)
        .map(|w| {
            let (lo, hi) = (w[0].0.min(w[1].0), w[0].0.max(w[1].0));
            let n = lo.ceil();
            if n <= hi {
                n
            } else {
                0.5 * (lo + hi)
            }
        })
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders the diagram. Output depends only on the input data.
pub fn render(branches: &[Branch]) -> String {
    let all = || branches.iter().flat_map(|b| b.points.iter());
    let (mut x0, mut x1) = (1.0f64, 3.0f64);
    let mut y1 = 1.0f64;
    if all().next().is_some() {
        x0 = all().fold(1.0f64, |a, p| a.min(p.0));
        x1 = all().fold(f64::NEG_INFINITY, |a, p| a.max(p.0));
        x0 = (x0 * 4.0).floor() / 4.0;
        x1 = ((x1 * 4.0).ceil() / 4.0).max(x0 + 0.25);
        let ymax = all().fold(0.0f64, |a, p| a.max(p.1));
        y1 = if ymax > 0.0 { ymax * 1.1 } else { 1.0 };
    }
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - y / y1 * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<g stroke="black" stroke-width="1"><line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/><line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/></g>"#,
        LEFT,
        TOP + ph,
        LEFT + pw,
        TOP + ph,
        LEFT,
        TOP,
        LEFT,
        TOP + ph
    );
    for i in 0..=TICKS {
        let t = i as f64 / TICKS as f64;
        let (xv, yv) = (x0 + t * (x1 - x0), t * y1);
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{xv:.2}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 20.0
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT:.2}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{yv:.3}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            py + 4.0
        );
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">ρ</text>"#, LEFT + pw / 2.0, HEIGHT - 10.0);
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">‖ψ‖ L²</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );

    let mut markers: Vec<f64> = branches.iter().flat_map(index_jumps).collect();
    markers.sort_by(f64::total_cmp);
    markers.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    for m in markers {
        let px = sx(m);
        let _ = writeln!(
            s,
            r##"<line x1="{px:.2}" y1="{TOP:.2}" x2="{px:.2}" y2="{:.2}" stroke="#888888" stroke-dasharray="4 3"/><text x="{px:.2}" y="{:.2}" text-anchor="middle" fill="#888888">{m:.2}</text>"##,
            TOP + ph,
            TOP - 8.0
        );
    }

    for (k, b) in branches.iter().enumerate() {
        let c = color(&b.name, k);
        let pts: Vec<String> = b.points.iter().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1))).collect();
        if pts.len() == 1 {
            let p = b.points[0];
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{c}"/>"#, sx(p.0), sy(p.1));
        } else if !pts.is_empty() {
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{c}" stroke-width="2" points="{}"/>"#, pts.join(" "));
        }
        let ly = TOP + 15.0 + 20.0 * k as f64;
        let lx = LEFT + pw + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{c}" stroke-width="2"/><text x="{:.2}" y="{ly:.2}">{}</text>"#,
            ly - 4.0,
            lx + 20.0,
            ly - 4.0,
            lx + 26.0,
            escape(&b.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn branch(name: &str, pts: &[(f64, f64, usize)]) -> Branch {
        Branch { name: name.into(), points: pts.to_vec() }
    }

    #[test]
    fn empty_input_draws_axes_only() {
        let svg = render(&[]);
        assert!(svg.starts_with("<svg"));
        assert!(!svg.contains("polyline"));
        assert!(!svg.contains("stroke-dasharray"));
    }

    #[test]
    fn jump_marker_sits_on_the_integer() {
        let b = branch("trivial", &[(1.5, 0.0, 4), (2.0, 0.0, 4), (2.25, 0.0, 12), (2.5, 0.0, 12)]);
        assert_eq!(index_jumps(&b), vec![2.0]);
        let b = branch("x", &[(2.1, 0.0, 4), (2.4, 0.0, 5)]);
        assert!((index_jumps(&b)[0] - 2.25).abs() < 1e-12);
    }

    #[test]
    fn curves_meet_at_the_first_eigenvalue() {
        let t = branch("trivial", &[(1.0, 0.0, 0), (2.0, 0.0, 4)]);
        let k = branch("killing", &[(1.0, 0.0, 0), (1.5, 2.6, 0)]);
        let svg = render(&[t, k]);
        assert_eq!(svg.matches("<polyline").count(), 2);
        // both start at the lower-left corner of the plot
        let start = format!("{:.2},{:.2}", LEFT, HEIGHT - BOTTOM);
        assert_eq!(svg.matches(&format!("points=\"{start}")).count(), 2);
    }

    #[test]
    fn rendering_is_deterministic() {
        let b = [branch("killing", &[(1.2, 1.1, 0), (1.4, 2.0, 0), (1.8, 2.9, 0)])];
        assert_eq!(render(&b), render(&b));
    }
}
