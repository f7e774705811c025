//! `growth-probe`: local growth exponents of `Tr(R e^{-tD²})`.

use ncgtwist_core::peterweyl::{growth_probe, regular_blocks, GrowthReport, IrrepTable};
use ncgtwist_core::Result;
use serde_json::json;

use crate::config::RunConfig;
use crate::report::{Check, Measured};

/// Points at the small-t end over which monotonicity is judged.
const WINDOW: usize = 5;
const CLASSICAL_LABELS: usize = 60;

fn probe(table: &IrrepTable, grid: &[f64]) -> Result<GrowthReport> {
    let blocks = regular_blocks(table);
    // D acts on the block of label n by n + 1.
    let values: Vec<f64> = blocks.iter().map(|b| b.label as f64 + 1.0).collect();
    growth_probe(&blocks, table, &values, grid)
}

fn measured(report: GrowthReport, verdict: bool) -> Measured {
    let series: Vec<(f64, f64)> = report.points.iter().map(|p| (p.t, p.exponent)).collect();
    Measured::new(report.tail_spread(WINDOW))
        .verdict(verdict)
        .with("exponents", series)
        .with("traces", &report.traces)
}

pub fn checks(cfg: &RunConfig) -> Vec<Check> {
    let q = cfg.model.q;
    let mut out = Vec::new();
    for &cutoff in &cfg.cutoffs {
        let grid = cfg.t_grid.clone();
        let params = json!({ "q": q, "spin_cutoff": cutoff, "window": WINDOW, "t_grid": grid });
        out.push(
            Check::new(
                &format!("quantum-cutoff-{cutoff}"),
                0.1,
                params,
                move |_| {
                    let report = probe(&IrrepTable::suq2(q, 2 * cutoff)?, &grid)?;
                    let rising = report.increasing_tail(WINDOW);
                    Ok(measured(report, rising).with("increasing_tail", rising))
                },
            )
            .diagnostic(),
        );
    }
    let grid = cfg.t_grid.clone();
    let params = json!({ "labels": CLASSICAL_LABELS, "multiplicity": "n + 1", "window": WINDOW, "t_grid": grid });
    out.push(
        Check::new("classical", 0.1, params, move |_| {
            let labels: Vec<(usize, usize)> = (0..CLASSICAL_LABELS).map(|n| (n, n + 1)).collect();
            let report = probe(&IrrepTable::classical(&labels)?, &grid)?;
            let stable = report.tail_spread(WINDOW) <= 0.1;
            let last = report.points.last().map(|p| p.exponent);
            Ok(measured(report, stable).with("final_exponent", last))
        })
        .diagnostic(),
    );
    out
}
