//! Subcommand bodies.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use sdde_core::assumptions::{check_a2, check_alpha, search_lc};
use sdde_core::complexext::extend_orbit;
use sdde_core::delaycore::io::export_sampled_csv;
use sdde_core::delaycore::{check_monotone_delay, integrate_dde, ModelSpec, Trajectory};
use sdde_core::example41::run_full_pipeline;
use sdde_core::lift::{build_lift, decay_profile, lift_consistency};

use crate::config::{load_config, Model, RunConfig};
use crate::output::Artifacts;
use crate::{Cli, CliError, Command};

/// What a stage reports back: overall verdict and a one-line summary.
struct Outcome {
    pass: bool,
    summary: String,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    model: &'a Model,
    art: Artifacts,
}

impl Ctx<'_> {
    fn t_end(&self) -> f64 {
        self.cfg
            .t_end
            .unwrap_or(self.cfg.t0 + self.model.default_span())
    }

    fn lift_time(&self) -> Result<f64, CliError> {
        let t = self
            .cfg
            .lift_time
            .unwrap_or(self.cfg.t0 + self.model.default_lift_offset());
        if !(t >= self.cfg.t0 && t < self.t_end()) {
            return Err(CliError::usage(format!(
                "config field `lift_time` = {t} must lie in [t0, t_end) = [{}, {})",
                self.cfg.t0,
                self.t_end()
            )));
        }
        Ok(t)
    }

    /// Builds the model, refusing example41 parameters that fail an alpha condition.
    fn spec(&self) -> Result<ModelSpec, CliError> {
        if let Model::Example41(p) = self.model {
            if let Some(bad) = check_alpha(p).first_failure() {
                return Err(CliError::assumption(format!(
                    "{} fails: {}",
                    bad.name, bad.detail
                )));
            }
        }
        Ok(self.model.spec()?)
    }

    fn integrate(&self, spec: &ModelSpec) -> Result<Trajectory, CliError> {
        let hist = self.model.history(self.cfg)?;
        Ok(integrate_dde(spec, &hist, self.t_end(), self.cfg.tol)
            .map_err(|e| e.at_stage("integrate_dde"))?)
    }
}

pub fn run(cli: &Cli) -> u8 {
    if let Command::Report { dir } = &cli.command {
        return report(dir.as_deref().unwrap_or(&cli.out));
    }
    let started = SystemTime::now();
    let clock = Instant::now();

    let setup = || -> Result<(RunConfig, Model), CliError> {
        let mut cfg = load_config(cli.config.as_deref(), &cli.set)?;
        if let Some(s) = cli.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        let model = Model::load(&cli.model)?;
        if let Some(n) = cli.workers {
            if n == 0 {
                return Err(CliError::usage("--workers must be at least 1"));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::usage(format!("--workers: {e}")))?;
        }
        Ok((cfg, model))
    };
    let (cfg, model) = match setup() {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {}", e.message);
            return e.code;
        }
    };

    let context = json!({ "command": cli.command.name(), "model": model, "config": cfg });
    let art = match Artifacts::new(&cli.out, &cli.format, cli.command.name(), cfg.seed, context) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {}", e.message);
            return e.code;
        }
    };
    let mut ctx = Ctx {
        cfg: &cfg,
        model: &model,
        art,
    };
    let result = match &cli.command {
        Command::Simulate => simulate(&mut ctx),
        Command::Lift => lift(&mut ctx),
        Command::VerifyAssumptions => verify_assumptions(&mut ctx),
        Command::ComplexExtend => complex_extend(&mut ctx),
        Command::Example41 => example41(&mut ctx),
        Command::Report { .. } => unreachable!("handled above"),
    };

    let (code, status, error) = match &result {
        Ok(o) if o.pass => (0, "PASS", None),
        Ok(_) => (CliError::ASSUMPTION, "FAIL", None),
        Err(e) => (e.code, "ERROR", Some(e.message.clone())),
    };
    let unix = started
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let extra = json!({
        "status": status,
        "exit_code": code,
        "error": error,
        "workers": cli.workers.unwrap_or_else(rayon::current_num_threads),
        "started_unix": unix,
        "wall_time_s": clock.elapsed().as_secs_f64(),
    });
    if let Err(e) = ctx.art.manifest(extra) {
        eprintln!("error: {}", e.message);
        return e.code;
    }
    match result {
        Ok(o) => println!("[{status}] {}: {}", cli.command.name(), o.summary),
        Err(e) => eprintln!("[{status}] {}: {}", cli.command.name(), e.message),
    }
    code
}

fn simulate(ctx: &mut Ctx) -> Result<Outcome, CliError> {
    let spec = ctx.spec()?;
    let traj = ctx.integrate(&spec)?;
    let mono = check_monotone_delay(&traj, &spec, 2000)?;
    let t_end = traj.t_end();
    let result = json!({
        "t0": traj.t0,
        "t_end": t_end,
        "n_segments": traj.segments().len(),
        "breakpoints": traj.breakpoints,
        "final_state": traj.eval(t_end)?,
        "monotone_delay": mono,
    });
    ctx.art.json("simulate", Some(mono.pass), &result)?;
    ctx.art.csv(
        "trajectory",
        &export_sampled_csv(&traj, traj.t0, t_end, ctx.cfg.samples)?,
    )?;
    Ok(Outcome {
        pass: mono.pass,
        summary: format!(
            "{} segments on [{}, {t_end}], min η' = {:.4}",
            traj.segments().len(),
            traj.t0,
            mono.min_rate
        ),
    })
}

fn lift(ctx: &mut Ctx) -> Result<Outcome, CliError> {
    let spec = ctx.spec()?;
    let traj = ctx.integrate(&spec)?;
    let t = ctx.lift_time()?;
    let w = build_lift(&traj, t, ctx.cfg.depth).map_err(|e| e.at_stage("build_lift"))?;
    let decay = decay_profile(&w, &spec, ctx.cfg.decay_m).map_err(|e| e.at_stage("build_lift"))?;
    // centered differences need room on both sides of t
    let room = (t - traj.t_min).min(traj.t_end() - t);
    let consistency = lift_consistency(&traj, &spec, t, ctx.cfg.depth, (0.1_f64).min(0.5 * room))
        .map_err(|e| e.at_stage("lift_consistency"))?;
    let width = spec.n + 1;
    let states = w.unscaled();
    let blocks: Vec<Vec<f64>> = states
        .chunks(width)
        .map(|b| b.iter().map(|z| z.re).collect())
        .collect();

    let pass = decay.last_below_first || decay.d.len() == 1;
    let result = json!({
        "lift_time": t,
        "depth": w.depth(),
        "achieved_depth": w.achieved_depth,
        "eta_times": w.eta_times,
        "unscaled_blocks": blocks,
        "tail": w.tail.iter().map(|z| z.re).collect::<Vec<_>>(),
        "decay": decay,
        "consistency": consistency,
    });
    ctx.art.json("lift", Some(pass), &result)?;

    let mut csv = String::from("j,eta");
    for i in 1..=spec.n {
        let _ = write!(csv, ",y{i}");
    }
    csv.push_str(",z");
    for i in 1..=spec.n {
        let _ = write!(csv, ",u{i}");
    }
    csv.push_str(",v\n");
    for (i, (scaled, unscaled)) in w.seq.blocks().zip(&blocks).enumerate() {
        let _ = write!(csv, "{},{:e}", i + 1, w.eta_times[i]);
        for z in scaled {
            let _ = write!(csv, ",{:e}", z.re);
        }
        for v in unscaled {
            let _ = write!(csv, ",{v:e}");
        }
        csv.push('\n');
    }
    ctx.art.csv("lift", &csv)?;
    Ok(Outcome {
        pass,
        summary: format!(
            "J = {} at t = {t}; d_J/d_1 = {:.3e}; finite-difference mismatch {:.2e}",
            w.depth(),
            decay.d[decay.d.len() - 1] / decay.d[0],
            consistency.mismatch
        ),
    })
}

fn verify_assumptions(ctx: &mut Ctx) -> Result<Outcome, CliError> {
    if let Model::Example41(p) = ctx.model {
        let alpha = check_alpha(p);
        ctx.art.json("alpha", Some(alpha.all_pass), &alpha)?;
        if let Some(bad) = alpha.first_failure() {
            // the model itself is ill-posed past a failed alpha condition
            return Ok(Outcome {
                pass: false,
                summary: format!("{} fails: {}", bad.name, bad.detail),
            });
        }
    }
    let spec = ctx.spec()?;
    let a2 = check_a2(&spec, &ctx.cfg.a2_options())?;
    let lc = match search_lc(&spec, ctx.cfg.a2_density) {
        Ok(r) => json!(r),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let result = json!({ "a2": a2, "lc_search": lc });
    ctx.art.json("a2", Some(a2.pass), &result)?;
    Ok(Outcome {
        pass: a2.pass,
        summary: format!(
            "A2 with (l, c) = ({}, {}): worst margin {:.6e}",
            a2.l, a2.c, a2.worst_margin
        ),
    })
}

fn complex_extend(ctx: &mut Ctx) -> Result<Outcome, CliError> {
    let spec = ctx.spec()?;
    let a2 = check_a2(&spec, &ctx.cfg.a2_options())?;
    ctx.art.json("a2", Some(a2.pass), &a2)?;
    if !a2.pass {
        return Err(CliError::assumption(format!(
            "A2 fails (worst margin {:e}); no Picard iteration attempted",
            a2.worst_margin
        )));
    }
    let traj = ctx.integrate(&spec)?;
    let t = ctx.lift_time()?;
    let ext = extend_orbit(&spec, &traj, t, &ctx.cfg.extend_config(ctx.model))?;
    let rep = &ext.report;
    let pass = rep.taylor.pass && rep.continuation.drift_monotone;
    ctx.art.json("complex_extend", Some(pass), rep)?;

    let mut csv = String::from("block,component,k,re,im,scaled_abs\n");
    for s in &rep.taylor.block1 {
        for (k, a) in s.coeffs.iter().enumerate() {
            let _ = writeln!(
                csv,
                "{},{},{k},{:e},{:e},{:e}",
                s.block,
                s.component,
                a.re,
                a.im,
                a.norm() * s.rho.powi(k as i32)
            );
        }
    }
    ctx.art.csv("taylor", &csv)?;

    // block 1 of the extrapolated orbit on the real diameter
    let orb = &ext.extrapolated;
    let mut rows: Vec<(f64, Vec<f64>)> = orb
        .real_rays()
        .into_iter()
        .flat_map(|ray| (0..orb.n_nodes()).map(move |k| (ray, k)))
        .map(|(ray, k)| {
            (
                orb.node_time(ray, k).re,
                orb.values[ray][k][..orb.width]
                    .iter()
                    .map(|z| z.re)
                    .collect(),
            )
        })
        .collect();
    rows.push((t, orb.center[..orb.width].iter().map(|z| z.re).collect()));
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut csv = String::from("t");
    for i in 1..orb.width {
        let _ = write!(csv, ",x{i}");
    }
    csv.push_str(",tau\n");
    for (tt, v) in rows {
        let _ = write!(csv, "{tt:e}");
        for x in v {
            let _ = write!(csv, ",{x:e}");
        }
        csv.push('\n');
    }
    ctx.art.csv("real_slice", &csv)?;
    Ok(Outcome {
        pass,
        summary: format!(
            "h = {:.4}, {} λ stages, fitted radius {:.4} vs threshold {:.4}",
            rep.continuation.h,
            rep.continuation.stages.len(),
            rep.taylor.min_fitted_radius,
            rep.taylor.threshold
        ),
    })
}

fn example41(ctx: &mut Ctx) -> Result<Outcome, CliError> {
    let Model::Example41(p) = ctx.model else {
        return Err(CliError::usage(format!(
            "the example41 subcommand needs --model example41 or an example41 parameter file, got {}",
            ctx.model.name()
        )));
    };
    let rep = run_full_pipeline(p, &ctx.cfg.pipeline_config(ctx.model))?;
    ctx.art.json("pipeline", Some(rep.pass), &rep)?;
    ctx.art.csv(
        "decay",
        &rep.decay
            .d
            .iter()
            .enumerate()
            .fold(String::from("j,d\n"), |mut s, (i, d)| {
                let _ = writeln!(s, "{},{d:e}", i + 1);
                s
            }),
    )?;
    Ok(Outcome {
        pass: rep.pass,
        summary: format!(
            "A2 margin {:.4}, h0 = {:.4}, fitted radius {:.4}",
            rep.a2.worst_margin, rep.disk.h0, rep.taylor.min_fitted_radius
        ),
    })
}

fn report(dir: &Path) -> u8 {
    let read = |name: &str| -> Result<Value, String> {
        let path = dir.join(name);
        let text =
            std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    };
    let manifest = match read("manifest.json") {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return CliError::USAGE;
        }
    };
    println!(
        "{} run of `{}` (schema {}, seed {}): {}",
        manifest["tool"].as_str().unwrap_or("?"),
        manifest["stage"].as_str().unwrap_or("?"),
        manifest["schema_version"],
        manifest["seed"],
        manifest["status"].as_str().unwrap_or("?")
    );
    if let Some(err) = manifest["error"].as_str() {
        println!("  error: {err}");
    }
    for name in manifest["artifacts"]
        .as_array()
        .into_iter()
        .flatten()
        .filter_map(Value::as_str)
    {
        if name.ends_with(".json") {
            match read(name) {
                Ok(doc) => {
                    let verdict = match doc["pass"].as_bool() {
                        Some(true) => "pass",
                        Some(false) => "FAIL",
                        None => "-",
                    };
                    println!("  {name}: {verdict}");
                }
                Err(e) => println!("  {name}: unreadable ({e})"),
            }
        } else {
            println!("  {name}");
        }
    }
    manifest["exit_code"]
        .as_u64()
        .map_or(CliError::USAGE, |c| c as u8)
}
