//! Plot-ready export of lifted time series.

use std::fmt::Write as _;

use super::integrate::LiftedTrajectory;
use crate::error::{Error, Result};

/// CSV with columns `t, j, y_1..y_N, z, u_1..u_N, v` on `n` equispaced times.
pub fn export_lifted_csv(sol: &LiftedTrajectory, n: usize) -> Result<String> {
    if n < 2 {
        return Err(Error::param("samples", "need at least two samples"));
    }
    let dim = sol.width - 1;
    let mut s = String::from("t,j");
    for i in 1..=dim {
        let _ = write!(s, ",y{i}");
    }
    s.push_str(",z");
    for i in 1..=dim {
        let _ = write!(s, ",u{i}");
    }
    s.push_str(",v\n");
    let (a, b) = (sol.t_start(), sol.t_end());
    for k in 0..n {
        let t = a + (b - a) * k as f64 / (n - 1) as f64;
        let w = sol.eval(t)?;
        for j in 1..=sol.depth {
            let cj = sol.c.powi(j as i32);
            let _ = write!(s, "{t:e},{j}");
            for z in w.block(j) {
                let _ = write!(s, ",{:e}", z.re);
            }
            for z in w.block(j) {
                let _ = write!(s, ",{:e}", z.re * cj);
            }
            s.push('\n');
        }
    }
    Ok(s)
}
