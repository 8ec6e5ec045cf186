//! Sweep execution: expands the grid of an [`ExperimentConfig`], evaluates
//! the points (in parallel, order preserved), and assembles a
//! [`ResultTable`] with failed points kept as flagged rows.

use rayon::prelude::*;

use crate::atomic::{FieldConfig, LevelScheme};
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::shelving::{
    detection_steady_state, optimal_pulse, readout_success, shelving_efficiency, ReducedModel,
    EVOLVE_REL_TOL,
};
use crate::sideband::{
    cooling_steady_state, eta_limit, first_sideband_prediction, sideband_strength, CoolingConfig,
};
use crate::table::{Column, ResultTable, Row};

const TWO_PI: f64 = std::f64::consts::TAU;

fn provenance(cfg: &ExperimentConfig) -> Vec<(String, String)> {
    let echo = serde_json::to_string(&cfg.kind).expect("config serializes");
    vec![
        ("generator".to_string(), format!("ionsim {}", env!("CARGO_PKG_VERSION"))),
        ("config".to_string(), echo),
        ("evolve_rel_tol".to_string(), format!("{EVOLVE_REL_TOL:e}")),
        ("pulse_opt_rel_tol".to_string(), "1e-3".to_string()),
    ]
}

/// One grid point: either the remaining column values or an error message.
type Point = Result<Vec<f64>, String>;

fn assemble(
    mut table: ResultTable,
    grid: Vec<Vec<f64>>,
    points: Vec<Point>,
) -> ResultTable {
    let width = table.columns.len();
    for (mut head, point) in grid.into_iter().zip(points) {
        match point {
            Ok(mut tail) => {
                head.append(&mut tail);
                table.push(Row::ok(head));
            }
            Err(message) => table.push(Row::failed(width, head, message)),
        }
    }
    table
}

pub fn run(cfg: &ExperimentConfig) -> ResultTable {
    let prov = provenance(cfg);
    match &cfg.kind {
        ExperimentKind::ShelveSweep(p) => {
            let scheme = LevelScheme::ca40();
            let rabi = TWO_PI * p.rabi_hz;
            let table = ResultTable::new(
                prov,
                vec![
                    Column::new("field", "T"),
                    Column::new("pulse_time", "s"),
                    Column::new("efficiency", ""),
                ],
            );
            let bs = p.field_tesla.values();
            let points: Vec<Point> = bs
                .par_iter()
                .map(|&b| {
                    let field = FieldConfig::new(b).map_err(|e| e.to_string())?;
                    let (t, eps) =
                        optimal_pulse(&scheme, &field, rabi).map_err(|e| e.to_string())?;
                    Ok(vec![t, eps])
                })
                .collect();
            assemble(table, bs.into_iter().map(|b| vec![b]).collect(), points)
        }
        ExperimentKind::ShelvePulse(p) => {
            let scheme = LevelScheme::ca40();
            let rabi = TWO_PI * p.rabi_hz;
            let table = ResultTable::new(
                prov,
                vec![
                    Column::new("time", "s"),
                    Column::new("efficiency", ""),
                    Column::new("reduced_model", ""),
                ],
            );
            let ts = p.time_s.values();
            let points: Vec<Point> = ts
                .par_iter()
                .map(|&t| {
                    let field = FieldConfig::new(p.field_tesla).map_err(|e| e.to_string())?;
                    let full = shelving_efficiency(&scheme, &field, rabi, t)
                        .map_err(|e| e.to_string())?;
                    let reduced =
                        ReducedModel::new(&scheme, &field, rabi).map_err(|e| e.to_string())?;
                    Ok(vec![full.epsilon, reduced.epsilon(t)])
                })
                .collect();
            assemble(table, ts.into_iter().map(|t| vec![t]).collect(), points)
        }
        ExperimentKind::DetectSweep(p) => {
            let scheme = LevelScheme::ca40();
            let (rabi14, rabi24) = (TWO_PI * p.rabi_blue_hz, TWO_PI * p.rabi_ir_hz);
            let table = ResultTable::new(
                prov,
                vec![Column::new("field", "T"), Column::new("fluorescing_population", "")],
            );
            let bs = p.field_tesla.values();
            let points: Vec<Point> = bs
                .par_iter()
                .map(|&b| {
                    let field = FieldConfig::new(b).map_err(|e| e.to_string())?;
                    let pop = detection_steady_state(&scheme, &field, rabi14, rabi24)
                        .map_err(|e| e.to_string())?;
                    Ok(vec![pop])
                })
                .collect();
            assemble(table, bs.into_iter().map(|b| vec![b]).collect(), points)
        }
        ExperimentKind::CoolSingle(p) => {
            let table = ResultTable::new(
                prov,
                vec![
                    Column::new("eta_sq", ""),
                    Column::new("mean_n", ""),
                    Column::new("ground_deficit", ""),
                    Column::new("lamb_dicke_mean_n", ""),
                ],
            );
            let e2s = p.eta_sq.values();
            let points: Vec<Point> = e2s
                .par_iter()
                .map(|&e2| {
                    let mut c = CoolingConfig::new(e2.sqrt(), p.gamma, p.sideband, 0.0);
                    if let Some(n) = p.n_max {
                        c = c.with_n_max(n);
                    }
                    let out = cooling_steady_state(&c).map_err(|e| e.to_string())?;
                    // the small-η prediction only exists for the first
                    // sideband below its pole
                    let ld = if p.sideband == 1 {
                        first_sideband_prediction(e2.sqrt(), p.gamma)
                            .map(|pr| pr.mean_n)
                            .unwrap_or(f64::NAN)
                    } else {
                        f64::NAN
                    };
                    Ok(vec![out.distribution.mean_n(), out.distribution.ground_deficit(), ld])
                })
                .collect();
            assemble(table, e2s.into_iter().map(|e| vec![e]).collect(), points)
        }
        ExperimentKind::CoolDouble(p) => {
            let table = ResultTable::new(
                prov,
                vec![
                    Column::new("eta_sq", ""),
                    Column::new("alpha", ""),
                    Column::new("ground_deficit", ""),
                    Column::new("mean_n", ""),
                ],
            );
            let e2s = p.eta_sq.values();
            let points: Vec<Point> = e2s
                .par_iter()
                .map(|&e2| {
                    let alpha = p.alpha.unwrap_or(1.0 / (3.0 * e2));
                    let mut c = CoolingConfig::new(e2.sqrt(), p.gamma, p.sideband, alpha);
                    if let Some(n) = p.n_max {
                        c = c.with_n_max(n);
                    }
                    let out = cooling_steady_state(&c).map_err(|e| e.to_string())?;
                    Ok(vec![
                        alpha,
                        out.distribution.ground_deficit(),
                        out.distribution.mean_n(),
                    ])
                })
                .collect();
            assemble(table, e2s.into_iter().map(|e| vec![e]).collect(), points)
        }
        ExperimentKind::EtaLimit(p) => {
            let table = ResultTable::new(
                prov,
                vec![
                    Column::new("gamma", ""),
                    Column::new("eta_max", ""),
                    Column::new("eta_sq", ""),
                    Column::new("residual", ""),
                    Column::new("iterations", ""),
                ],
            );
            let gs = p.gamma.values();
            let points: Vec<Point> = gs
                .par_iter()
                .map(|&g| {
                    let lim = eta_limit(g).map_err(|e| e.to_string())?;
                    Ok(vec![lim.eta_max, lim.eta_sq, lim.residual, lim.iterations as f64])
                })
                .collect();
            assemble(table, gs.into_iter().map(|g| vec![g]).collect(), points)
        }
        ExperimentKind::MatrixTable(p) => {
            let table = ResultTable::new(
                prov,
                vec![Column::new("f", ""), Column::new("n", ""), Column::new("strength", "")],
            );
            let grid: Vec<Vec<f64>> = (0..=p.max_level)
                .flat_map(|f| (0..=p.max_level).map(move |n| vec![f as f64, n as f64]))
                .collect();
            let points: Vec<Point> = grid
                .par_iter()
                .map(|fn_pair| {
                    let (f, n) = (fn_pair[0] as usize, fn_pair[1] as usize);
                    let s = sideband_strength(f, n, p.eta).map_err(|e| e.to_string())?;
                    Ok(vec![s])
                })
                .collect();
            assemble(table, grid, points)
        }
        ExperimentKind::ReadoutStats(p) => {
            let table = ResultTable::new(
                prov,
                vec![Column::new("repetitions", ""), Column::new("success_probability", "")],
            );
            let rs: Vec<u32> = p
                .repetitions
                .values()
                .into_iter()
                .map(|v| v.round().max(1.0) as u32)
                .collect();
            let points: Vec<Point> = rs
                .par_iter()
                .map(|&r| {
                    let s = readout_success(p.epsilon, r, p.ions).map_err(|e| e.to_string())?;
                    Ok(vec![s])
                })
                .collect();
            assemble(table, rs.into_iter().map(|r| vec![f64::from(r)]).collect(), points)
        }
    }
}
