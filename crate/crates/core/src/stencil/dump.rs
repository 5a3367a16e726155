//! JSON records of derived stencils for external checking.
//!
//! Each record holds the node, the mesh size, the coefficient derivatives the
//! stencil was derived from (keys `"m,n"`), the 9x8 array `c_klp` with rows in
//! neighbor order `(k, l) = (-1,-1), (-1,0), ..., (1,1)` and columns `p = 0..7`,
//! and the matching residual.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coefficients::{CoefficientTables, EquationMode, PointCoefficients, CONVECTION_ORDER, REACTION_ORDER};
use crate::derivatives::{tri_index, tri_pairs};
use crate::error::Result;

use super::StencilField;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSnapshot {
    pub a: BTreeMap<String, f64>,
    pub b: BTreeMap<String, f64>,
    pub c: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StencilRecord {
    pub mode: EquationMode,
    pub h: f64,
    pub node: [usize; 2],
    pub coeffs: CoefficientSnapshot,
    pub c_klp: Vec<Vec<f64>>,
    pub residual: f64,
}

fn snapshot(values: &[f64], order: usize) -> BTreeMap<String, f64> {
    tri_pairs(order)
        .map(|(m, n)| (format!("{m},{n}"), values[tri_index(m, n)]))
        .collect()
}

impl CoefficientSnapshot {
    pub fn of(pc: &PointCoefficients) -> Self {
        Self {
            a: snapshot(&pc.a, CONVECTION_ORDER),
            b: snapshot(&pc.b, CONVECTION_ORDER),
            c: match pc.mode {
                EquationMode::Steady => BTreeMap::new(),
                EquationMode::Helmholtz => snapshot(&pc.c, REACTION_ORDER),
            },
        }
    }
}

/// Records for about `count` interior nodes spread evenly over the grid.
/// Stencils without `c_klp` (the explicit variants) are skipped.
pub fn sample_records(tables: &CoefficientTables, field: &StencilField, count: usize) -> Vec<StencilRecord> {
    let total = field.nodes.len();
    let m = field.grid.n_cells() - 1;
    let stride = (total / count.max(1)).max(1);
    (0..total)
        .step_by(stride)
        .take(count)
        .filter_map(|idx| {
            let s = &field.nodes[idx];
            let c = s.c_klp?;
            let (i, j) = (idx % m + 1, idx / m + 1);
            let pc = tables.at(i, j);
            Some(StencilRecord {
                mode: pc.mode,
                h: s.h,
                node: [i, j],
                coeffs: CoefficientSnapshot::of(&pc),
                c_klp: c.iter().map(|r| r.to_vec()).collect(),
                residual: s.match_residual,
            })
        })
        .collect()
}

pub fn write_stencil_dump(path: &Path, records: &[StencilRecord]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut f, records)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn read_stencil_dump(path: &Path) -> Result<Vec<StencilRecord>> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
