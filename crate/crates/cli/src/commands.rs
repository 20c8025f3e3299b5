use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use mkt_core::distance::{Geometry, BOUNDARY_BAND, FOOT_ANGLE_SEPARATION, FOOT_CHORD_SEPARATION};
use mkt_core::scene::SceneConfig;
use mkt_core::solver::FieldGrid;
use mkt_core::transport::{cut_locus, FOOT_TRACK_TOL, TABLE_VALIDATION_TOL};
use mkt_core::verify::{run_battery, BatteryOptions};
use nalgebra::Vector2;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::render;
use crate::{Common, Failure, GridArgs};

type Res = std::result::Result<(), Failure>;

fn load(common: &Common) -> std::result::Result<SceneConfig, Failure> {
    let text = fs::read_to_string(&common.config)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", common.config.display())))?;
    let mut cfg = SceneConfig::from_json(&text)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn apply_grid(cfg: &mut SceneConfig, grid: GridArgs) -> Res {
    if let Some(nx) = grid.nx {
        cfg.grid.nx = nx;
    }
    if let Some(ny) = grid.ny {
        cfg.grid.ny = ny;
    }
    cfg.validate()?;
    Ok(())
}

fn write(dir: &Path, name: &str, body: &str) -> Res {
    fs::create_dir_all(dir).map_err(|e| Failure::Numeric(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| Failure::Numeric(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Res {
    let mut body = serde_json::to_string_pretty(value).map_err(|e| Failure::Numeric(e.to_string()))?;
    body.push('\n');
    write(dir, name, &body)
}

/// 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Every tolerance that can influence a reported number.
fn tolerances(cfg: &SceneConfig) -> Value {
    json!({
        "cluster": cfg.tolerances.cluster,
        "cut": cfg.tolerances.cut,
        "quadrature": cfg.tolerances.quadrature,
        "foot_angle_separation": FOOT_ANGLE_SEPARATION,
        "foot_chord_separation_relative": FOOT_CHORD_SEPARATION,
        "boundary_band": BOUNDARY_BAND,
        "foot_track": FOOT_TRACK_TOL,
        "table_validation": TABLE_VALIDATION_TOL,
        "table_size": cfg.table_size,
    })
}

fn manifest(command: &str, cfg: &SceneConfig, extra: Value, outputs: &[&str]) -> Value {
    let mut m = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "tolerances": tolerances(cfg),
        "outputs": outputs,
    });
    if let (Value::Object(m), Value::Object(extra)) = (&mut m, extra) {
        m.extend(extra);
    }
    m
}

fn grid_meta<T>(g: &FieldGrid<T>) -> Value {
    json!({
        "nx": g.nx,
        "ny": g.ny,
        "bbox": g.bbox,
        "dx": g.dx(),
        "dy": g.dy(),
        "inside_cells": g.inside.iter().filter(|b| **b).count(),
        "singular_cells": g.singular.iter().filter(|b| **b).count(),
    })
}

fn distance_grid(geom: &Geometry, cfg: &SceneConfig) -> std::result::Result<FieldGrid<f64>, Failure> {
    let bbox = cfg.bbox(geom.curve());
    let (nx, ny) = (cfg.grid.nx, cfg.grid.ny);
    let mut g = FieldGrid {
        bbox,
        nx,
        ny,
        values: Vec::new(),
        inside: Vec::new(),
        singular: Vec::new(),
    };
    let pts: Vec<Vector2<f64>> = g.points().map(|(_, x)| x).collect();
    let res: Vec<(f64, bool, bool)> = pts
        .par_iter()
        .map(|x| {
            if !geom.curve().contains(x) {
                return Ok((f64::NAN, false, false));
            }
            let p = geom.project(x)?;
            Ok((p.distance, true, p.singular))
        })
        .collect::<mkt_core::Result<_>>()?;
    for (d, inside, singular) in res {
        g.values.push(d);
        g.inside.push(inside);
        g.singular.push(singular);
    }
    Ok(g)
}

pub fn distance(common: &Common, grid: GridArgs) -> Res {
    let mut cfg = load(common)?;
    apply_grid(&mut cfg, grid)?;
    let geom = cfg.geometry()?;
    let d = distance_grid(&geom, &cfg)?;
    let mut csv = String::from("x,y,d,singular\n");
    for (k, x) in d.points() {
        if d.inside[k] {
            let _ = writeln!(csv, "{},{},{},{}", num(x.x), num(x.y), num(d.values[k]), d.singular[k] as u8);
        }
    }
    write(&common.out, "distance.csv", &csv)?;
    let mut outputs = vec!["distance.csv", "manifest.json"];
    if common.svg_enabled() {
        write(&common.out, "distance.svg", &render::field(&d, geom.curve(), "d"))?;
        outputs.push("distance.svg");
    }
    write_json(&common.out, "manifest.json", &manifest("distance", &cfg, json!({ "grid": grid_meta(&d) }), &outputs))?;
    println!("distance: {} interior cells written to {}", d.inside.iter().filter(|b| **b).count(), common.out.display());
    Ok(())
}

pub fn cutlocus(common: &Common, n_theta: Option<usize>) -> Res {
    let mut cfg = load(common)?;
    if let Some(n) = n_theta {
        cfg.n_theta = n;
        cfg.validate()?;
    }
    let geom = cfg.geometry()?;
    let frames = cut_locus(&geom, cfg.n_theta, cfg.tolerances.cut)?;
    let mut csv = String::from("theta,cut_x,cut_y,tau,kappa_tilde\n");
    for f in &frames {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            num(f.theta),
            num(f.cut_point.x),
            num(f.cut_point.y),
            num(f.tau),
            num(f.kappa_tilde)
        );
    }
    write(&common.out, "cutlocus.csv", &csv)?;
    let mut outputs = vec!["cutlocus.csv", "manifest.json"];
    if common.svg_enabled() {
        let pts: Vec<Vector2<f64>> = frames.iter().map(|f| f.cut_point).collect();
        write(&common.out, "cutlocus.svg", &render::cut_locus(geom.curve(), &pts))?;
        outputs.push("cutlocus.svg");
    }
    write_json(&common.out, "manifest.json", &manifest("cutlocus", &cfg, json!({}), &outputs))?;
    println!("cutlocus: {} rays written to {}", frames.len(), common.out.display());
    Ok(())
}

pub fn solve(common: &Common, grid: GridArgs) -> Res {
    let mut cfg = load(common)?;
    apply_grid(&mut cfg, grid)?;
    let start = Instant::now();
    let geom = cfg.geometry()?;
    let solver = cfg.solver(&geom)?;
    let table_s = start.elapsed().as_secs_f64();
    let bbox = cfg.bbox(geom.curve());
    let (d, v) = solver.solve_grid(cfg.grid.nx, cfg.grid.ny, Some(bbox))?;
    let total_s = start.elapsed().as_secs_f64();

    let mut csv = String::from("x,y,d,v,singular\n");
    for (k, x) in v.points() {
        if v.inside[k] {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                num(x.x),
                num(x.y),
                num(d.values[k]),
                num(v.values[k]),
                v.singular[k] as u8
            );
        }
    }
    write(&common.out, "field.csv", &csv)?;
    let header = json!({
        "columns": ["x", "y", "d", "v", "singular"],
        "config": cfg,
        "grid": grid_meta(&v),
        "solver": solver.options(),
        "cluster_tol": geom.cluster_tol(),
        "table": solver.table().stats(),
    });
    write_json(&common.out, "field.json", &header)?;
    let mut outputs = vec!["field.csv", "field.json", "manifest.json", "run_timings.json"];
    if common.svg_enabled() {
        write(&common.out, "field_v.svg", &render::field(&v, geom.curve(), "v"))?;
        write(&common.out, "field_d.svg", &render::field(&d, geom.curve(), "d"))?;
        outputs.extend(["field_v.svg", "field_d.svg"]);
    }
    let extra = json!({ "grid": grid_meta(&v), "table": solver.table().stats() });
    write_json(&common.out, "manifest.json", &manifest("solve", &cfg, extra, &outputs))?;
    write_json(
        &common.out,
        "run_timings.json",
        &json!({ "setup_seconds": table_s, "total_seconds": total_s }),
    )?;
    println!("solve: {}x{} grid written to {} in {total_s:.2} s", cfg.grid.nx, cfg.grid.ny, common.out.display());
    Ok(())
}

pub fn verify(common: &Common, perturb_v: f64) -> Res {
    let cfg = load(common)?;
    if !(perturb_v > 0.0 && perturb_v.is_finite()) {
        return Err(Failure::Config(format!("--perturb-v must be positive (got {perturb_v})")));
    }
    let geom = cfg.geometry()?;
    let solver = cfg.solver(&geom)?;
    let opts = BatteryOptions {
        seed: cfg.seed,
        perturb_v,
        ..BatteryOptions::default()
    };
    let report = run_battery(&solver, &opts)?;
    write_json(&common.out, "report.json", &report)?;
    let extra = json!({ "battery": opts, "table": solver.table().stats() });
    write_json(&common.out, "manifest.json", &manifest("verify", &cfg, extra, &["report.json", "manifest.json"]))?;
    for e in &report.entries {
        println!(
            "{} {:<15} max error {:.3e} (tolerance {:.1e}, {} samples)",
            if e.pass { "PASS" } else { "FAIL" },
            e.name,
            e.max_error,
            e.tolerance,
            e.samples
        );
    }
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

pub fn constants(common: &Common, samples: usize) -> Res {
    let cfg = load(common)?;
    let gauge = cfg.gauge.build()?;
    let c = gauge.constants(samples)?;
    let out = json!({ "gauge": gauge.describe(), "samples": samples, "constants": c });
    write_json(&common.out, "constants.json", &out)?;
    println!("{}", serde_json::to_string_pretty(&out).map_err(|e| Failure::Numeric(e.to_string()))?);
    Ok(())
}
