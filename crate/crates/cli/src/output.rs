//! Artifact writers. Every float goes out with 17 significant digits in
//! exponent form, which round-trips exactly and never depends on locale.

use std::fmt::Write as _;

use egt_core::stochastic::{ContestOutcome, Contestant};
use egt_core::tournament::{LabelledTrajectory, ScoreTable};
use serde_json::Value;

pub const TRAJECTORY_HEADER: [&str; 4] = ["t", "pop", "strategy", "share"];
pub const SCORES_HEADER: [&str; 3] = ["strategy", "total", "mean_per_round"];
pub const CONTESTS_HEADER: [&str; 5] = ["trial", "winner", "duration", "payoff_a", "payoff_b"];

pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Pretty-printed JSON with the float format above. Object keys come out
/// sorted, so equal documents give equal bytes.
pub fn json_string(v: &Value) -> String {
    let mut out = String::new();
    write_json(&mut out, v, 0);
    out.push('\n');
    out
}

fn write_json(out: &mut String, v: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| out.extend(std::iter::repeat_n("  ", d));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => write!(out, "{u}").unwrap(),
            (None, Some(i)) => write!(out, "{i}").unwrap(),
            _ => {
                let x = n.as_f64().unwrap_or(f64::NAN);
                if x.is_finite() {
                    out.push_str(&fmt_float(x));
                } else {
                    out.push_str("null");
                }
            }
        },
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, depth + 1);
                write_json(out, item, depth + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&serde_json::to_string(k).expect("string serializes"));
                out.push_str(": ");
                write_json(out, item, depth + 1);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push('}');
        }
    }
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Long-form rows: one per recorded time, population and strategy.
pub fn trajectory_csv(trajectories: &[LabelledTrajectory]) -> Vec<u8> {
    let mut rows = Vec::new();
    for lt in trajectories {
        let tr = &lt.trajectory;
        for (k, &t) in tr.times.iter().enumerate() {
            let mut pops = vec![(&lt.populations[0], &lt.labels_x, &tr.x[k])];
            if let (Some(y), Some(labels)) = (&tr.y, &lt.labels_y) {
                pops.push((&lt.populations[1], labels, &y[k]));
            }
            for (pop, labels, state) in pops {
                for (label, &share) in labels.iter().zip(state.probs()) {
                    rows.push(vec![fmt_float(t), pop.clone(), label.clone(), fmt_float(share)]);
                }
            }
        }
    }
    csv_bytes(&TRAJECTORY_HEADER, rows.into_iter())
}

pub fn scores_csv(table: &ScoreTable) -> Vec<u8> {
    let means = table.mean_per_round();
    let rows = (0..table.roster.len())
        .map(|i| vec![table.roster[i].clone(), fmt_float(table.totals[i]), fmt_float(means[i])]);
    csv_bytes(&SCORES_HEADER, rows)
}

pub fn contests_csv(outcomes: &[ContestOutcome]) -> Vec<u8> {
    let rows = outcomes.iter().enumerate().map(|(i, o)| {
        let w = match o.winner {
            Contestant::A => "a",
            Contestant::B => "b",
        };
        vec![i.to_string(), w.into(), fmt_float(o.duration), fmt_float(o.payoff_a), fmt_float(o.payoff_b)]
    });
    csv_bytes(&CONTESTS_HEADER, rows)
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// A bare-bones line chart: one panel per trajectory and population, share
/// against time.
pub fn trajectory_svg(trajectories: &[LabelledTrajectory]) -> String {
    let (w, h, m) = (640.0, 220.0, 40.0);
    let mut panels = Vec::new();
    for lt in trajectories {
        let tr = &lt.trajectory;
        panels.push((format!("{} / {}", lt.name, lt.populations[0]), &lt.labels_x, &tr.x, &tr.times));
        if let (Some(y), Some(labels)) = (&tr.y, &lt.labels_y) {
            panels.push((format!("{} / {}", lt.name, lt.populations[1]), labels, y, &tr.times));
        }
    }
    let total_h = h * panels.len() as f64;
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{total_h}" font-family="sans-serif" font-size="11">"#).unwrap();
    for (p, (title, labels, states, times)) in panels.iter().enumerate() {
        let top = h * p as f64;
        let t_end = times.last().copied().unwrap_or(1.0).max(f64::MIN_POSITIVE);
        let px = |t: f64| m + (w - 2.0 * m) * t / t_end;
        let py = |share: f64| top + h - m + (2.0 * m - h) * share;
        writeln!(s, r#"<text x="{m}" y="{}">{}</text>"#, top + 15.0, xml_escape(title)).unwrap();
        writeln!(
            s,
            r##"<rect x="{m}" y="{}" width="{}" height="{}" fill="none" stroke="#999"/>"##,
            top + m,
            w - 2.0 * m,
            h - 2.0 * m
        )
        .unwrap();
        writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">t={:.3}</text>"#, w - m, top + h - m + 14.0, t_end).unwrap();
        for (k, label) in labels.iter().enumerate() {
            let colour = PALETTE[k % PALETTE.len()];
            let pts: Vec<String> = times
                .iter()
                .zip(states.iter())
                .map(|(&t, x)| format!("{:.2},{:.2}", px(t), py(x.probs()[k])))
                .collect();
            writeln!(s, r#"<polyline fill="none" stroke="{colour}" points="{}"><title>{}</title></polyline>"#, pts.join(" "), xml_escape(label))
                .unwrap();
        }
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
