//! Columnar text export of trajectories.
//!
//! Layout: `key=value` header lines starting with `#`, then one CSV row per
//! segment component: `part,segment,t_start,h,component,a0,a1,a2,a3,a4`.
//! `part` is `history` or `body`.

use std::fmt::Write as _;

use super::dopri::{PiecewiseQuartic, Segment};
use super::trajectory::{Breakpoint, HistoryRepr, Trajectory, TrajectoryMeta};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// Serialises `traj`; history functions are converted to `history_pieces` quartics.
pub fn export_columnar(traj: &Trajectory, history_pieces: usize) -> String {
    let mut s = String::new();
    let m = &traj.meta;
    let bps: Vec<String> = traj
        .breakpoints
        .iter()
        .map(|b| format!("{:e}:{}", b.time, b.order))
        .collect();
    let _ = writeln!(s, "#format=sdde-trajectory");
    let _ = writeln!(s, "#version={FORMAT_VERSION}");
    let _ = writeln!(s, "#N={}", m.n);
    let _ = writeln!(s, "#M={}", m.m);
    let _ = writeln!(s, "#c={:e}", m.c);
    let _ = writeln!(s, "#l={:e}", m.l);
    let _ = writeln!(s, "#t_min={:e}", traj.t_min);
    let _ = writeln!(s, "#t0={:e}", traj.t0);
    let _ = writeln!(s, "#tol={:e}", traj.tol);
    let _ = writeln!(s, "#breakpoints={}", bps.join(";"));
    let _ = writeln!(s, "part,segment,t_start,h,component,a0,a1,a2,a3,a4");
    let hist = traj.history_segments(history_pieces.max(1));
    for (part, pw) in [("history", &hist), ("body", &traj.body)] {
        for (i, seg) in pw.segments.iter().enumerate() {
            for (k, a) in seg.coeffs.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{part},{i},{:e},{:e},{k},{:e},{:e},{:e},{:e},{:e}",
                    seg.t_start, seg.h, a[0], a[1], a[2], a[3], a[4]
                );
            }
        }
    }
    s
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad number for {key}: {v:?}")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad integer for {key}: {v:?}")))
}

/// Inverse of [`export_columnar`].
pub fn import_columnar(text: &str) -> Result<Trajectory> {
    let mut header = std::collections::BTreeMap::new();
    let mut hist = PiecewiseQuartic::default();
    let mut body = PiecewiseQuartic::default();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(kv) = line.strip_prefix('#') {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: header without '='", lineno + 1)))?;
            header.insert(k.trim().to_string(), v.trim().to_string());
            continue;
        }
        if line.starts_with("part,") {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 10 {
            return Err(Error::Parse(format!(
                "line {}: expected 10 columns, got {}",
                lineno + 1,
                cols.len()
            )));
        }
        let target = match cols[0] {
            "history" => &mut hist,
            "body" => &mut body,
            other => {
                return Err(Error::Parse(format!(
                    "line {}: unknown part {other:?}",
                    lineno + 1
                )))
            }
        };
        let seg_idx = parse_usize("segment", cols[1])?;
        let t_start = parse_f64("t_start", cols[2])?;
        let h = parse_f64("h", cols[3])?;
        let comp = parse_usize("component", cols[4])?;
        let mut a = [0.0; 5];
        for (k, slot) in a.iter_mut().enumerate() {
            *slot = parse_f64("coefficient", cols[5 + k])?;
        }
        if seg_idx == target.segments.len() {
            target.segments.push(Segment {
                t_start,
                h,
                coeffs: Vec::new(),
            });
        } else if seg_idx + 1 != target.segments.len() {
            return Err(Error::Parse(format!(
                "line {}: segments out of order",
                lineno + 1
            )));
        }
        let seg = target.segments.last_mut().expect("segment pushed above");
        if comp != seg.coeffs.len() {
            return Err(Error::Parse(format!(
                "line {}: components out of order",
                lineno + 1
            )));
        }
        seg.coeffs.push(a);
    }

    let get = |k: &str| {
        header
            .get(k)
            .cloned()
            .ok_or_else(|| Error::Parse(format!("missing header field {k}")))
    };
    if get("format")? != "sdde-trajectory" {
        return Err(Error::Parse("not an sdde trajectory file".into()));
    }
    let meta = TrajectoryMeta {
        n: parse_usize("N", &get("N")?)?,
        m: parse_usize("M", &get("M")?)?,
        c: parse_f64("c", &get("c")?)?,
        l: parse_f64("l", &get("l")?)?,
    };
    let mut breakpoints = Vec::new();
    for item in get("breakpoints")?.split(';').filter(|s| !s.is_empty()) {
        let (t, o) = item
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("bad breakpoint {item:?}")))?;
        breakpoints.push(Breakpoint {
            time: parse_f64("breakpoint", t)?,
            order: parse_usize("breakpoint order", o)? as u32,
        });
    }
    let width = meta.n + 1;
    if hist
        .segments
        .iter()
        .chain(&body.segments)
        .any(|s| s.coeffs.len() != width)
    {
        return Err(Error::Parse(format!(
            "every segment needs {width} components"
        )));
    }
    if hist.segments.is_empty() {
        return Err(Error::Parse("history section is empty".into()));
    }
    Ok(Trajectory {
        meta,
        history: HistoryRepr::Segments(hist),
        t_min: parse_f64("t_min", &get("t_min")?)?,
        t0: parse_f64("t0", &get("t0")?)?,
        body,
        breakpoints,
        tol: parse_f64("tol", &get("tol")?)?,
    })
}

/// Plot-ready samples `t, x1..xN, tau` on `n` equispaced times of `[t_from, t_to]`.
pub fn export_sampled_csv(traj: &Trajectory, t_from: f64, t_to: f64, n: usize) -> Result<String> {
    if n < 2 {
        return Err(Error::param("samples", "need at least two samples"));
    }
    let mut s = String::from("t");
    for i in 1..=traj.meta.n {
        let _ = write!(s, ",x{i}");
    }
    s.push_str(",tau\n");
    for k in 0..n {
        let t = t_from + (t_to - t_from) * k as f64 / (n - 1) as f64;
        let y = traj.eval(t)?;
        let _ = write!(s, "{t:e}");
        for v in y {
            let _ = write!(s, ",{v:e}");
        }
        s.push('\n');
    }
    Ok(s)
}
