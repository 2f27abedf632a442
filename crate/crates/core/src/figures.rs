//! Data series behind the outage, ergodic-rate, sensing and rate-region plots.
//!
//! Per-group columns refer to group 1; the reference scenario has identical
//! groups. Monte Carlo columns (`mc_*`) appear only when simulation options
//! are supplied.

use std::fmt;
use std::str::FromStr;

use crate::comm::{
    ecr_asymptotic, ecr_far, ecr_group, ecr_near, ergodic_sum_rate, ergodic_sum_rate_high_snr, outage_far,
    outage_floor_near_far, outage_group, outage_group_asymptotic, outage_near, slot_noise, RateKind, SlotNoiseModel,
};
use crate::config::ConfigError;
use crate::montecarlo::{simulate_grid, GridEstimates, McOptions};
use crate::region::{fdsac_region, isac_beta_region, isac_region};
use crate::run_config::RunConfig;
use crate::sensing::{optimal_allocation, orthogonal_waveform_rate, sensing_rate, sensing_rate_high_snr};
use crate::table::{Cell, Table};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Figure {
    /// Outage probabilities versus p_c.
    Fig2a,
    /// Ergodic rates versus p_c.
    Fig2b,
    /// Sensing rate versus p_s.
    Fig3,
    /// ISAC and FDSAC rate regions.
    Fig4a,
    /// ISAC corners along p_s = β p_c.
    Fig4b,
}

impl Figure {
    pub const ALL: [Figure; 5] = [Figure::Fig2a, Figure::Fig2b, Figure::Fig3, Figure::Fig4a, Figure::Fig4b];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2a => "fig2a",
            Figure::Fig2b => "fig2b",
            Figure::Fig3 => "fig3",
            Figure::Fig4a => "fig4a",
            Figure::Fig4b => "fig4b",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Figure {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| ConfigError::Invalid(format!("unknown figure '{s}'")))
    }
}

pub fn emit_figure_data(which: Figure, run: &RunConfig, mc: Option<&McOptions>) -> Result<Table, Error> {
    match which {
        Figure::Fig2a => outage_table(run, mc),
        Figure::Fig2b => ecr_table(run, mc),
        Figure::Fig3 => sensing_table(run),
        Figure::Fig4a => region_table(run),
        Figure::Fig4b => beta_table(run),
    }
}

/// Noise model of every (p_c, slot) pair, p_c-major.
fn grid_points(run: &RunConfig) -> Result<Vec<SlotNoiseModel>, ConfigError> {
    let wf = optimal_allocation(&run.system)?;
    let mut pts = Vec::with_capacity(run.p_c_db_grid.len() * run.slots.len());
    for &p_db in &run.p_c_db_grid {
        let cfg = run.system_at_p_c_db(p_db);
        for &slot in &run.slots {
            pts.push(slot_noise(&cfg, &wf, slot)?);
        }
    }
    Ok(pts)
}

fn simulate(run: &RunConfig, pts: &[SlotNoiseModel], mc: Option<&McOptions>) -> Result<Option<GridEstimates>, Error> {
    match mc {
        Some(opts) => Ok(Some(simulate_grid(&run.system, pts, &run.targets, opts)?)),
        None => Ok(None),
    }
}

fn per_slot(names: &[&str], slots: &[usize]) -> Vec<String> {
    names
        .iter()
        .flat_map(|n| slots.iter().map(move |s| format!("{n}_slot{s}")))
        .collect()
}

fn mc_columns(names: &[&str], slots: &[usize]) -> Vec<String> {
    names
        .iter()
        .flat_map(|n| {
            slots
                .iter()
                .flat_map(move |s| [format!("mc_{n}_slot{s}"), format!("mc_{n}_se_slot{s}")])
        })
        .collect()
}

pub fn outage_table(run: &RunConfig, mc: Option<&McOptions>) -> Result<Table, Error> {
    let slots = &run.slots;
    let mut header = vec!["p_c_db".to_string()];
    header.extend(per_slot(&["op_near", "op_far", "op_group"], slots));
    header.push("op_floor".into());
    header.extend(per_slot(&["op_group_asym"], slots));
    if mc.is_some() {
        header.extend(mc_columns(&["op_near", "op_far", "op_group"], slots));
    }
    let pts = grid_points(run)?;
    let sim = simulate(run, &pts, mc)?;
    let g = run.system.groups[0];
    let (tn, tf, tg) = (
        run.targets.threshold_near(),
        run.targets.threshold_far(),
        run.targets.threshold_group(),
    );
    let t = run.system.truncation;
    let ns = slots.len();
    let mut table = Table::new(header);
    for (i, &p_db) in run.p_c_db_grid.iter().enumerate() {
        let row_pts = &pts[i * ns..(i + 1) * ns];
        let mut row: Vec<Cell> = vec![p_db.into()];
        row.extend(row_pts.iter().map(|n| Cell::Num(outage_near(n, g, tn))));
        row.extend(row_pts.iter().map(|n| Cell::Num(outage_far(n, g, tn, tf))));
        row.extend(row_pts.iter().map(|n| Cell::Num(outage_group(n, g, tg, t).value)));
        row.push(outage_floor_near_far(&row_pts[0], g, tn).into());
        row.extend(row_pts.iter().map(|n| Cell::Num(outage_group_asymptotic(n, g, tg))));
        if let Some(sim) = &sim {
            let est = &sim.points[i * ns..(i + 1) * ns];
            for metric in 0..3 {
                for p in est {
                    let e = &p.groups[0];
                    let m = [&e.outage_near, &e.outage_far, &e.outage_group][metric];
                    row.push(m.mean.into());
                    row.push(m.std_error.into());
                }
            }
        }
        table.push(row);
    }
    Ok(table)
}

pub fn ecr_table(run: &RunConfig, mc: Option<&McOptions>) -> Result<Table, Error> {
    let slots = &run.slots;
    let mut header = vec!["p_c_db".to_string()];
    header.extend(per_slot(&["ecr_near", "ecr_far", "ecr_group", "sum_rate"], slots));
    header.extend(per_slot(
        &["ecr_near_asym", "ecr_far_asym", "ecr_group_asym", "sum_rate_asym"],
        slots,
    ));
    if mc.is_some() {
        header.extend(mc_columns(&["ecr_near", "ecr_far", "ecr_group", "sum_rate"], slots));
    }
    let pts = grid_points(run)?;
    let sim = simulate(run, &pts, mc)?;
    let cfg = &run.system;
    let g = cfg.groups[0];
    let t = cfg.truncation;
    let ns = slots.len();
    let mut table = Table::new(header);
    for (i, &p_db) in run.p_c_db_grid.iter().enumerate() {
        let row_pts = &pts[i * ns..(i + 1) * ns];
        let mut row: Vec<Cell> = vec![p_db.into()];
        row.extend(row_pts.iter().map(|n| Cell::Num(ecr_near(n, g, t).value)));
        row.extend(row_pts.iter().map(|n| Cell::Num(ecr_far(n, g))));
        row.extend(row_pts.iter().map(|n| Cell::Num(ecr_group(n, g, t).value)));
        row.extend(row_pts.iter().map(|n| Cell::Num(ergodic_sum_rate(cfg, n))));
        for kind in [RateKind::Near, RateKind::Far, RateKind::Group] {
            row.extend(row_pts.iter().map(|n| Cell::Num(ecr_asymptotic(kind, n, g, t))));
        }
        row.extend(row_pts.iter().map(|n| Cell::Num(ergodic_sum_rate_high_snr(cfg, n))));
        if let Some(sim) = &sim {
            let est = &sim.points[i * ns..(i + 1) * ns];
            for metric in 0..4 {
                for p in est {
                    let e = &p.groups[0];
                    let m = [&e.rate_near, &e.rate_far, &e.rate_group, &p.sum_rate][metric];
                    row.push(m.mean.into());
                    row.push(m.std_error.into());
                }
            }
        }
        table.push(row);
    }
    Ok(table)
}

pub fn sensing_table(run: &RunConfig) -> Result<Table, Error> {
    let mut table = Table::new(["p_s_db", "rate_waterfill", "rate_orthogonal", "rate_high_snr"]);
    for &p_db in &run.p_s_db_grid {
        let cfg = run.system_at_p_s_db(p_db);
        table.push(vec![
            p_db.into(),
            sensing_rate(&cfg)?.into(),
            orthogonal_waveform_rate(&cfg).into(),
            sensing_rate_high_snr(&cfg).into(),
        ]);
    }
    Ok(table)
}

pub fn region_table(run: &RunConfig) -> Result<Table, Error> {
    let mut table = Table::new(["series", "label", "comm_rate", "sens_rate"]);
    let isac = isac_region(&run.system)?;
    table.push(vec!["isac".into(), isac.label.into(), isac.comm_rate.into(), isac.sens_rate.into()]);
    let fdsac = fdsac_region(&run.system, &run.alpha_grid)?;
    for (series, pts) in [("fdsac_corner", fdsac.corners), ("fdsac_frontier", fdsac.frontier)] {
        for p in pts {
            table.push(vec![series.into(), p.label.into(), p.comm_rate.into(), p.sens_rate.into()]);
        }
    }
    Ok(table)
}

pub fn beta_table(run: &RunConfig) -> Result<Table, Error> {
    let mut table = Table::new(["beta", "label", "comm_rate", "sens_rate"]);
    for (beta, p) in run.beta_grid.iter().zip(isac_beta_region(&run.system, &run.beta_grid)?) {
        table.push(vec![(*beta).into(), p.label.into(), p.comm_rate.into(), p.sens_rate.into()]);
    }
    Ok(table)
}
