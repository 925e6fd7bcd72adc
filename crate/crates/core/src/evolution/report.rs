use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::io;
use crate::noether::FourVector;

/// Echo of the stepping parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub solver: String,
    pub dt: f64,
    pub steps: usize,
    pub frame: Option<String>,
    pub stability_bound: Option<f64>,
}

/// Time series of conserved quantities relative to their initial values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionReport {
    pub params: ReportParams,
    pub times: Vec<f64>,
    pub initial_norm: f64,
    pub initial_charge: f64,
    pub initial_momentum: FourVector,
    pub norm_drift: Vec<f64>,
    pub charge_drift: Vec<f64>,
    pub momentum_drift: Vec<FourVector>,
    /// Phase-aligned relative L2 distance to a reference, when one exists.
    pub discrepancy: Vec<f64>,
}

impl EvolutionReport {
    pub fn new(params: ReportParams) -> Self {
        EvolutionReport {
            params,
            times: Vec::new(),
            initial_norm: 0.0,
            initial_charge: 0.0,
            initial_momentum: FourVector::default(),
            norm_drift: Vec::new(),
            charge_drift: Vec::new(),
            momentum_drift: Vec::new(),
            discrepancy: Vec::new(),
        }
    }

    /// Appends a sample; the first sample fixes the reference values.
    pub fn record(&mut self, t: f64, norm: f64, charge: f64, momentum: FourVector, discrepancy: Option<f64>) {
        if self.times.is_empty() {
            self.initial_norm = norm;
            self.initial_charge = charge;
            self.initial_momentum = momentum;
        }
        self.times.push(t);
        self.norm_drift.push(norm - self.initial_norm);
        self.charge_drift.push(charge - self.initial_charge);
        self.momentum_drift.push(momentum.sub(&self.initial_momentum));
        if let Some(d) = discrepancy {
            self.discrepancy.push(d);
        }
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.norm_drift.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_charge_drift(&self) -> f64 {
        self.charge_drift.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_momentum_drift(&self) -> f64 {
        self.momentum_drift
            .iter()
            .fold(0.0, |m, p| m.max(p.0.iter().fold(0.0f64, |a, v| a.max(v.abs()))))
    }

    pub fn final_discrepancy(&self) -> Option<f64> {
        self.discrepancy.last().copied()
    }

    /// Columns `t, norm_drift, charge_drift, dP0..dP3` and `discrepancy` when recorded.
    pub fn write_columns<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let mut headers = vec!["t", "norm_drift", "charge_drift", "dP0", "dP1", "dP2", "dP3"];
        let with_disc = self.discrepancy.len() == self.times.len() && !self.times.is_empty();
        if with_disc {
            headers.push("discrepancy");
        }
        let rows: Vec<Vec<f64>> = (0..self.times.len())
            .map(|i| {
                let mut row = vec![self.times[i], self.norm_drift[i], self.charge_drift[i]];
                row.extend(self.momentum_drift[i].0);
                if with_disc {
                    row.push(self.discrepancy[i]);
                }
                row
            })
            .collect();
        io::write_table(w, &headers, &rows)
    }
}
