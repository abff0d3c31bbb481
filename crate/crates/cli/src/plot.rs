//! Trajectory plots as standalone SVG.
//!
//! Each robot's path is drawn as a thin polyline with every move overdrawn
//! in the colour of the state of the cycle that produced it. Dashed chords
//! join the robots at sampled look ticks and carry the segment argument α.

use std::fmt::Write as _;

use gathering::algorithms::RobotState;
use gathering::analysis::alpha;
use gathering::engine::{EventKind, Execution};
use gathering::geometry::Point;

const SIZE: f64 = 720.0;
const MARGIN: f64 = 48.0;
const MAX_ANNOTATIONS: usize = 24;

fn state_colour(s: RobotState) -> &'static str {
    match s {
        RobotState::Gathered => "#1f77b4",
        RobotState::Approach => "#2ca02c",
        RobotState::Rotate => "#ff7f0e",
        RobotState::Wait => "#7f7f7f",
        RobotState::Terminated => "#d62728",
    }
}

const ROBOT_COLOUR: [&str; 2] = ["#17becf", "#9467bd"];

struct Canvas {
    min: Point,
    scale: f64,
    height: f64,
}

impl Canvas {
    fn fit(points: &[Point]) -> Canvas {
        let (mut lo, mut hi) = (points[0], points[0]);
        for p in points {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let span = (hi.x - lo.x).max(hi.y - lo.y);
        let span = if span > 0.0 { span } else { 1.0 };
        let centre = Point::new((lo.x + hi.x) / 2.0, (lo.y + hi.y) / 2.0);
        let min = Point::new(centre.x - span / 2.0, centre.y - span / 2.0);
        Canvas { min, scale: (SIZE - 2.0 * MARGIN) / span, height: SIZE }
    }

    fn map(&self, p: Point) -> (f64, f64) {
        (MARGIN + (p.x - self.min.x) * self.scale, self.height - MARGIN - (p.y - self.min.y) * self.scale)
    }
}

/// Renders the execution's trajectories.
pub fn render_svg(e: &Execution) -> String {
    let mut points: Vec<Point> = e.configs.iter().flat_map(|c| [c.r0, c.r1]).collect();
    for ev in &e.events {
        if let EventKind::Look { target, .. } = ev.kind {
            if target.is_finite() {
                points.push(target);
            }
        }
    }
    let canvas = Canvas::fit(&points);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{h}" viewBox="0 0 {SIZE} {h}" font-family="sans-serif" font-size="11">"#,
        h = SIZE + 60.0
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="20" font-size="13">{} φ={:.4}π, {}, stop: {:?}</text>"#,
        e.header.algorithm.id,
        e.header.algorithm.phi / std::f64::consts::PI,
        escape(&e.header.adversary),
        e.stop
    );

    // Chords with α at sampled look ticks.
    let look_ticks: Vec<u64> = {
        let mut v: Vec<u64> =
            e.events.iter().filter(|ev| matches!(ev.kind, EventKind::Look { .. })).map(|ev| ev.tick).collect();
        v.dedup();
        v
    };
    let stride = look_ticks.len().div_ceil(MAX_ANNOTATIONS).max(1);
    let _ = writeln!(s, r##"<g class="alpha" stroke="#bbbbbb" stroke-dasharray="3,3">"##);
    for &t in look_ticks.iter().step_by(stride) {
        let Some(c) = e.config(t) else { continue };
        let Ok(a) = alpha(c) else { continue };
        let (x0, y0) = canvas.map(c.r0);
        let (x1, y1) = canvas.map(c.r1);
        let _ = writeln!(s, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y1:.2}"/>"#);
        let _ = writeln!(
            s,
            r##"<text x="{:.2}" y="{:.2}" stroke="none" fill="#555555">t={t} α={:.3}π</text>"##,
            (x0 + x1) / 2.0 + 4.0,
            (y0 + y1) / 2.0 - 4.0,
            a.radians() / std::f64::consts::PI
        );
    }
    let _ = writeln!(s, "</g>");

    for r in 0..2 {
        let path: Vec<String> = e
            .configs
            .iter()
            .map(|c| {
                let (x, y) = canvas.map(c.robot(r));
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="trajectory r{r}" fill="none" stroke="{}" stroke-width="1" points="{}"/>"#,
            ROBOT_COLOUR[r],
            path.join(" ")
        );
    }

    // Moves coloured by the state of the cycle that made them.
    let mut state = [None::<RobotState>; 2];
    let mut events = e.events.iter().peekable();
    let _ = writeln!(s, r#"<g class="moves" stroke-width="2.5" stroke-linecap="round">"#);
    for t in 0..e.configs.len() {
        while let Some(ev) = events.next_if(|ev| ev.tick == t as u64) {
            if let EventKind::Look { state: st, .. } = ev.kind {
                state[ev.robot] = Some(st);
            }
        }
        let Some(next) = e.configs.get(t + 1) else { break };
        for r in 0..2 {
            let (a, b) = (e.configs[t].robot(r), next.robot(r));
            if a == b {
                continue;
            }
            let colour = state[r].map_or("#000000", state_colour);
            let (x0, y0) = canvas.map(a);
            let (x1, y1) = canvas.map(b);
            let _ = writeln!(s, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y1:.2}" stroke="{colour}"/>"#);
        }
    }
    let _ = writeln!(s, "</g>");

    for r in 0..2 {
        let (x, y) = canvas.map(e.configs[0].robot(r));
        let (fx, fy) = canvas.map(e.configs[e.configs.len() - 1].robot(r));
        let _ = writeln!(
            s,
            r#"<circle class="start r{r}" cx="{x:.2}" cy="{y:.2}" r="5" fill="none" stroke="{c}" stroke-width="2"/>"#,
            c = ROBOT_COLOUR[r]
        );
        let _ = writeln!(
            s,
            r#"<circle class="end r{r}" cx="{fx:.2}" cy="{fy:.2}" r="4" fill="{c}"/>"#,
            c = ROBOT_COLOUR[r]
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" fill="{c}">r{r}</text>"#,
            x + 7.0,
            y - 7.0 + 14.0 * r as f64,
            c = ROBOT_COLOUR[r]
        );
    }

    let mut x = MARGIN;
    let y = SIZE + 30.0;
    for st in [RobotState::Approach, RobotState::Rotate, RobotState::Wait, RobotState::Gathered, RobotState::Terminated]
    {
        let _ = writeln!(
            s,
            r#"<rect x="{x}" y="{}" width="14" height="6" fill="{}"/><text x="{}" y="{}">{st}</text>"#,
            y - 6.0,
            state_colour(st),
            x + 18.0,
            y
        );
        x += 60.0;
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use gathering::adversary::random_fair;
    use gathering::algorithms::{region_table, AlgorithmId};
    use gathering::engine::{run, Configuration, EngineConfig};
    use gathering::frames::{CompassMode, CompassSpec};

    #[test]
    fn gathered_start_draws_coincident_points() {
        let alg = region_table(AlgorithmId::SS, 0.0, false, false).unwrap();
        let compass = CompassSpec::new(CompassMode::Static, 0.0).unwrap();
        let p = Point::new(2.0, 2.0);
        let e =
            run(&alg, EngineConfig::semi_sync(), compass, &mut random_fair(0), Configuration::new(p, p), 0).unwrap();
        let svg = render_svg(&e);
        assert!(svg.starts_with("<svg"));
        let ends: Vec<&str> = svg.lines().filter(|l| l.contains("class=\"end")).collect();
        assert_eq!(ends.len(), 2);
        let centre = |l: &str| l.split("cx=").nth(1).unwrap().split(" r=").next().unwrap().to_string();
        assert_eq!(centre(ends[0]), centre(ends[1]));
        assert!(!svg.contains("<line x1"), "no motion to draw");
    }
}
