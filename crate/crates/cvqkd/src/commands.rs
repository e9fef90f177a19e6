//! The five analyses behind the command-line subcommands.
//!
//! `keyrate` prints one CSV row; the others write CSV (plus a small JSON
//! metadata file where useful) into the output directory and return the
//! paths written. All numbers go through [`crate::format`].

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;

use cvqkd_core::analysis::{
    compare_frontiers, find_optimal_attack, normalized_correlation, sweep_plane, Executor,
    FrontierOptions, RangeMode, SearchOptions, Serial, SweepResult,
};
use cvqkd_core::attack::{max_correlation_on_ray, Criterion, TwoModeAttackParams};
use cvqkd_core::protocol::key_rate;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::exec::Threads;
use crate::format::{number, optional};

const SWEEP_DISTANCES: [f64; 3] = [10.0, 20.0, 30.0];

fn curve_distances() -> Vec<f64> {
    (1..=30).map(f64::from).collect()
}

fn search_options(cfg: &RunConfig) -> SearchOptions {
    SearchOptions {
        refinement_levels: cfg.refine,
        mode: cfg.search.into(),
        ..SearchOptions::default()
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("json value serializes");
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn prepare_out(cfg: &RunConfig) -> Result<&Path, CliError> {
    fs::create_dir_all(&cfg.out)
        .map_err(|e| CliError::usage(format!("cannot create {}: {e}", cfg.out.display())))?;
    Ok(&cfg.out)
}

pub const KEYRATE_HEADER: [&str; 18] = [
    "distance_km", "T", "epsilon", "v_e", "c_x", "c_p", "class", "i_ab", "chi_be", "key_rate",
    "lambda1", "lambda2", "lambda3", "lambda4", "lambda5", "lambda6", "lambda7", "lambda8",
];

/// Key rate at one attack point, as a header and one row on `out`.
pub fn keyrate(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let (Some(c_x), Some(c_p)) = (cfg.c_x, cfg.c_p) else {
        return Err(CliError::usage("keyrate needs both --cx and --cp"));
    };
    let params = cfg.protocol(cfg.distance_km, cfg.beta, cfg.epsilon)?;
    let attack = params.attack(c_x, c_p)?;
    attack.check_physical()?;
    let report = key_rate(&params, &attack)?;

    let mut row = vec![
        number(cfg.distance_km),
        number(params.transmittance),
        number(params.excess_noise),
        number(params.ancilla_variance()),
        number(c_x),
        number(c_p),
        attack.classify().as_str().to_string(),
        number(report.i_ab),
        number(report.chi_be),
        number(report.key_rate),
    ];
    row.extend(report.spectrum_unconditioned.iter().map(|&l| number(l)));
    row.extend(report.spectrum_conditioned.iter().map(|&l| number(l)));
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(KEYRATE_HEADER)?;
    w.write_record(&row)?;
    w.flush()?;
    Ok(())
}

/// Label used in file names: `10` for 10 km, `2.5` for 2.5 km.
pub fn distance_label(d: f64) -> String {
    number(d)
}

/// Rate over the correlation plane at each distance, with diagonal and
/// anti-diagonal slices.
pub fn sweep(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let dir = prepare_out(cfg)?.to_path_buf();
    let exec = Threads::new(cfg.workers);
    let mut written = Vec::new();
    let diag_path = dir.join("slice_diag.csv");
    let anti_path = dir.join("slice_antidiag.csv");
    let mut diag = csv_writer(&diag_path)?;
    let mut anti = csv_writer(&anti_path)?;
    let slice_header = ["distance_km", "c_x", "c_p", "class", "key_rate"];
    diag.write_record(slice_header)?;
    anti.write_record(slice_header)?;

    for d in cfg.distances_or(&SWEEP_DISTANCES) {
        let params = cfg.protocol(d, cfg.beta, cfg.epsilon)?;
        let result = sweep_plane(&params, cfg.grid, RangeMode::PhysicalBox, &exec)?;
        let label = distance_label(d);
        let plane = dir.join(format!("plane_d{label}km.csv"));
        write_plane(&plane, &result)?;
        written.push(plane);

        let n = result.c_x.len();
        for i in 0..n {
            let row = |w: &mut csv::Writer<fs::File>, j: usize| {
                w.write_record([
                    number(d),
                    number(result.c_x[i]),
                    number(result.c_p[j]),
                    result.class(i, j).as_str().to_string(),
                    optional(result.rate(i, j)),
                ])
            };
            row(&mut diag, i)?;
            row(&mut anti, n - 1 - i)?;
        }

        let argmin = result.argmin.map(|(x, p, k)| {
            json!({
                "c_x": x,
                "c_p": p,
                "key_rate": k,
                "class": TwoModeAttackParams::symmetric(params.ancilla_variance(), x, p)
                    .map(|a| a.classify().as_str())
                    .unwrap_or("unphysical"),
            })
        });
        let meta = json!({
            "distance_km": d,
            "transmittance": params.transmittance,
            "attenuation_db_per_km": cfg.attenuation_db_per_km,
            "epsilon": params.excess_noise,
            "v_e": params.ancilla_variance(),
            "v_a": params.v_a,
            "v_b": params.v_b,
            "eta": params.eta,
            "beta": params.beta,
            "estimator_k": params.estimator_coefficient(),
            "grid": n,
            "c_phys_max": result.c_phys_max,
            "c_sep_max": result.c_sep_max,
            "argmin": argmin,
        });
        let meta_path = dir.join(format!("plane_d{label}km_meta.json"));
        write_json(&meta_path, &meta)?;
        written.push(meta_path);
    }
    diag.flush()?;
    anti.flush()?;
    written.push(diag_path);
    written.push(anti_path);
    Ok(written)
}

fn write_plane(path: &Path, result: &SweepResult) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    w.write_record(["c_x", "c_p", "class", "key_rate"])?;
    for (i, &x) in result.c_x.iter().enumerate() {
        for (j, &p) in result.c_p.iter().enumerate() {
            w.write_record([
                number(x),
                number(p),
                result.class(i, j).as_str().to_string(),
                optional(result.rate(i, j)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Rate-minimizing attack per noise level, distance and efficiency.
pub fn optimal(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let dir = prepare_out(cfg)?.to_path_buf();
    let exec = Threads::new(cfg.workers);
    let search = search_options(cfg);
    let distances = cfg.distances_or(&curve_distances());
    let mut jobs = Vec::new();
    for &eps in &cfg.epsilons {
        for &d in &distances {
            for &beta in &cfg.betas {
                jobs.push((eps, d, beta));
            }
        }
    }
    let results = exec.map(&jobs, |&(eps, d, beta)| -> Result<Vec<String>, CliError> {
        let params = cfg.protocol(d, beta, eps)?;
        let opt = find_optimal_attack(&params, &search, &Serial)?;
        let normalized = if opt.v_e > 1.0 {
            Some(normalized_correlation(opt.c_x, opt.v_e)?)
        } else {
            None
        };
        Ok(vec![
            number(d),
            number(eps),
            number(beta),
            number(opt.c_x),
            number(opt.c_p),
            optional(normalized),
            number(opt.v_e),
            opt.class.as_str().to_string(),
            number(opt.key_rate),
        ])
    });
    let path = dir.join("optimal_attacks.csv");
    let mut w = csv_writer(&path)?;
    w.write_record([
        "distance_km", "epsilon", "beta", "c_opt", "c_opt_p", "c_opt_normalized", "v_e", "class",
        "key_rate_min",
    ])?;
    for row in results {
        w.write_record(row?)?;
    }
    w.flush()?;
    Ok(vec![path])
}

/// Tolerable excess noise of both protocols per distance and efficiency.
pub fn frontier(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let dir = prepare_out(cfg)?.to_path_buf();
    let exec = Threads::new(cfg.workers);
    let search = search_options(cfg);
    let distances = cfg.distances_or(&curve_distances());
    let path = dir.join("frontier.csv");
    let mut w = csv_writer(&path)?;
    w.write_record([
        "distance_km", "eps_two_way", "eps_one_way", "beta", "two_way_status", "one_way_status",
    ])?;
    for &beta in &cfg.betas {
        let template = cfg.protocol(distances[0], beta, cfg.epsilon)?;
        let points = compare_frontiers(
            &distances,
            cfg.attenuation_db_per_km,
            &template,
            &search,
            &FrontierOptions::default(),
            &exec,
        )?;
        for p in points {
            w.write_record([
                number(p.distance_km),
                number(p.two_way.epsilon),
                number(p.one_way.epsilon),
                number(beta),
                p.two_way.status.as_str().to_string(),
                p.one_way.status.as_str().to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(vec![path])
}

/// Attack classes over the correlation plane at fixed ancilla variances.
pub fn region(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let dir = prepare_out(cfg)?.to_path_buf();
    let (v1, v2) = (cfg.v_e1, cfg.v_e2);
    TwoModeAttackParams::new(v1, v2, 0.0, 0.0)?;
    let n = cfg.grid;
    let half = (v1 * v2).sqrt();
    let m = (n - 1) as f64;
    let axis: Vec<f64> = (0..n).map(|i| half * (2.0 * i as f64 - m) / m).collect();

    let path = dir.join("region.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["c_x", "c_p", "class"])?;
    for &x in &axis {
        for &p in &axis {
            let class = TwoModeAttackParams::new(v1, v2, x, p)?.classify();
            w.write_record([number(x), number(p), class.as_str().to_string()])?;
        }
    }
    w.flush()?;

    let bound = |dir: (f64, f64), c| max_correlation_on_ray(v1, v2, dir, c);
    let meta = json!({
        "v_e1": v1,
        "v_e2": v2,
        "grid": n,
        "c_sep_max_diagonal": bound((1.0, 1.0), Criterion::Separable)?,
        "c_phys_max_diagonal": bound((1.0, 1.0), Criterion::Physical)?,
        "c_sep_max_antidiagonal": bound((1.0, -1.0), Criterion::Separable)?,
        "c_phys_max_antidiagonal": bound((1.0, -1.0), Criterion::Physical)?,
    });
    let meta_path = dir.join("region_meta.json");
    write_json(&meta_path, &meta)?;
    Ok(vec![path, meta_path])
}
