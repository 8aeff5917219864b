use std::fmt::Write as _;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::derive_linear_certificate;
use crate::error::Result;
use crate::sim::{count_events, simulate, SimConfig};
use crate::system::example1_system;
use crate::trigger::TriggerParams;
use crate::window::HistoryWindow;

pub const TABLE1_HORIZON: usize = 10_000;
pub const TABLE2_HORIZON: usize = 100_000;

const INITIALS: [[f64; 2]; 2] = [[1.0, 1.0], [-2.0, 3.0]];

/// (table, sigma, a, b, horizon, reference counts for both initial functions)
const CELLS: [(u8, f64, f64, f64, usize, [usize; 2]); 5] = [
    (1, 0.1, 16.0, 0.01, TABLE1_HORIZON, [2135, 2141]),
    (1, 0.1, 16.0, 0.03, TABLE1_HORIZON, [2317, 2323]),
    (1, 0.1, 24.0, 0.03, TABLE1_HORIZON, [2315, 2320]),
    (2, 0.1, 16.0, 0.01, TABLE2_HORIZON, [15845, 15857]),
    (2, 0.0, 16.0, 0.01, TABLE2_HORIZON, [17373, 17369]),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub table: u8,
    pub sigma: f64,
    pub a: f64,
    pub b: f64,
    pub initial: [f64; 2],
    pub horizon: usize,
    pub computed_incl: usize,
    pub computed_excl: usize,
    pub reference: usize,
}

impl TableCell {
    pub fn computed(&self, include_initial: bool) -> usize {
        if include_initial {
            self.computed_incl
        } else {
            self.computed_excl
        }
    }

    /// `(computed - reference) / reference`
    pub fn rel_error(&self, include_initial: bool) -> f64 {
        (self.computed(include_initial) as f64 - self.reference as f64) / self.reference as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableDocument {
    pub table1: Vec<TableCell>,
    pub table2: Vec<TableCell>,
}

impl TableDocument {
    pub fn cells(&self) -> impl Iterator<Item = &TableCell> {
        self.table1.iter().chain(&self.table2)
    }

    pub fn find(&self, sigma: f64, a: f64, b: f64, initial: [f64; 2], horizon: usize) -> Option<&TableCell> {
        self.cells()
            .find(|c| c.sigma == sigma && c.a == a && c.b == b && c.initial == initial && c.horizon == horizon)
    }

    /// Markdown rendering; each cell shows computed, reference, relative error.
    pub fn render(&self, include_initial: bool) -> String {
        let counting = if include_initial { "including k = 0" } else { "excluding k = 0" };
        let mut out = String::new();
        let cell = |c: &TableCell| {
            format!(
                "{} / {} / {:+.2}%",
                c.computed(include_initial),
                c.reference,
                100.0 * c.rel_error(include_initial)
            )
        };
        let _ = writeln!(out, "Table 1: events on [0, {TABLE1_HORIZON}], sigma = 0.1 ({counting})\n");
        let _ = writeln!(out, "| a | b | phi = [1, 1] | phi = [-2, 3] |");
        let _ = writeln!(out, "|---|---|---|---|");
        for pair in self.table1.chunks(2) {
            let _ = writeln!(out, "| {} | {} | {} | {} |", pair[0].a, pair[0].b, cell(&pair[0]), cell(&pair[1]));
        }
        let _ = writeln!(out, "\nTable 2: events on [0, {TABLE2_HORIZON}], a = 16, b = 0.01 ({counting})\n");
        let _ = writeln!(out, "| sigma | phi = [1, 1] | phi = [-2, 3] |");
        let _ = writeln!(out, "|---|---|---|");
        for pair in self.table2.chunks(2) {
            let _ = writeln!(out, "| {} | {} | {} |", pair[0].sigma, cell(&pair[0]), cell(&pair[1]));
        }
        let _ = writeln!(out, "\nCells: computed / reference / relative error.");
        out
    }
}

/// Re-runs the event-count tables for the linear benchmark plant.
pub fn reproduce_tables() -> Result<TableDocument> {
    Ok(TableDocument {
        table1: reproduce_table(1)?,
        table2: reproduce_table(2)?,
    })
}

/// Cells of a single table (1 or 2), in row-major order.
pub fn reproduce_table(table: u8) -> Result<Vec<TableCell>> {
    let sys = example1_system();
    let cert = derive_linear_certificate(&sys)?.cert;
    let jobs: Vec<_> = CELLS
        .iter()
        .filter(|cell| cell.0 == table)
        .flat_map(|&(table, sigma, a, b, horizon, reference)| {
            INITIALS
                .iter()
                .zip(reference)
                .map(move |(&initial, reference)| (table, sigma, a, b, horizon, initial, reference))
        })
        .collect();
    jobs.par_iter()
        .map(|&(table, sigma, a, b, horizon, initial, reference)| {
            let cfg = SimConfig {
                horizon,
                phi: HistoryWindow::constant(1, DVector::from_row_slice(&initial))?,
                params: TriggerParams::inferred(sigma, a, b)?,
                record_v: false,
            };
            let trace = simulate(&sys, &cert, &cfg)?;
            Ok(TableCell {
                table,
                sigma,
                a,
                b,
                initial,
                horizon,
                computed_incl: count_events(&trace, horizon, true),
                computed_excl: count_events(&trace, horizon, false),
                reference,
            })
        })
        .collect()
}
