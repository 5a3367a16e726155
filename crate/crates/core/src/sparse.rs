//! Assembly and solution of the 9-band linear system.
//!
//! Interior unknowns are numbered row-major along `j`. Row `(i, j)` reads
//! `sum C_kl u_(i+k,j+l) = h^2 F - sum_(boundary) C_kl g`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::stencil::{StencilField, NEIGHBORS};

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate().take(self.n) {
            let (s, e) = (self.row_ptr[r], self.row_ptr[r + 1]);
            *out = self.col_idx[s..e]
                .iter()
                .zip(&self.values[s..e])
                .map(|(&c, &v)| v * x[c])
                .sum();
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|r| {
                let (s, e) = (self.row_ptr[r], self.row_ptr[r + 1]);
                (s..e)
                    .find(|&k| self.col_idx[k] == r)
                    .map_or(0.0, |k| self.values[k])
            })
            .collect()
    }

    /// Largest `|col - row|` over stored entries, split into (lower, upper).
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut lo = 0;
        let mut up = 0;
        for r in 0..self.n {
            for &c in &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]] {
                if c < r {
                    lo = lo.max(r - c);
                } else {
                    up = up.max(c - r);
                }
            }
        }
        (lo, up)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }
}

/// Linear system for the interior unknowns plus the boundary data it used.
#[derive(Debug, Clone)]
pub struct NineBandSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Full nodal field whose boundary entries are the Dirichlet data.
    pub boundary: ScalarField,
}

/// Builds one row per interior node with boundary values folded into the rhs.
pub fn assemble(stencils: &StencilField, boundary: &ScalarField) -> Result<NineBandSystem> {
    let grid = stencils.grid;
    if boundary.grid() != grid {
        return Err(Error::GridMismatch(grid.n_cells(), boundary.grid().n_cells()));
    }
    if stencils.nodes.len() != grid.n_interior() {
        return Err(Error::MissingStencil {
            got: stencils.nodes.len(),
            expected: grid.n_interior(),
        });
    }
    let nc = grid.n_cells();
    let n = grid.n_interior();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(9 * n);
    let mut values = Vec::with_capacity(9 * n);
    let mut rhs = Vec::with_capacity(n);
    row_ptr.push(0);
    for j in 1..nc {
        for i in 1..nc {
            let s = stencils.at(i, j);
            let mut b = s.h * s.h * s.rhs;
            // NEIGHBORS runs k outer, l inner; sort by column for a tidy CSR row.
            let mut entries: Vec<(usize, f64)> = Vec::with_capacity(9);
            for &(k, l) in &NEIGHBORS {
                let (ii, jj) = ((i as i64 + k as i64) as usize, (j as i64 + l as i64) as usize);
                let w = s.weight(k, l);
                if grid.is_boundary(ii, jj) {
                    b -= w * boundary.get(ii, jj);
                } else {
                    entries.push((grid.interior_index(ii, jj), w));
                }
            }
            entries.sort_unstable_by_key(|e| e.0);
            for (c, w) in entries {
                col_idx.push(c);
                values.push(w);
            }
            row_ptr.push(col_idx.len());
            rhs.push(b);
        }
    }
    Ok(NineBandSystem {
        matrix: CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        },
        rhs,
        boundary: boundary.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    /// Banded LU with partial pivoting; BiCGStab if the factorization breaks down.
    #[default]
    Direct,
    /// Jacobi-preconditioned BiCGStab.
    Bicgstab,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub method: SolverKind,
    /// Iterations used by BiCGStab; zero for a direct solve.
    pub iterations: usize,
    /// `||A x - b|| / ||b||` (absolute when `b = 0`).
    pub relative_residual: f64,
    pub elapsed_secs: f64,
}

pub const BICGSTAB_TOL: f64 = 1e-12;
pub const BICGSTAB_MAX_ITER: usize = 10_000;

/// Solves with the default (direct) method and scatters into a full field.
pub fn solve(system: &NineBandSystem) -> Result<(ScalarField, SolveStats)> {
    solve_with(system, SolverKind::Direct, None)
}

/// Solves with the chosen method. `guess` seeds BiCGStab.
pub fn solve_with(
    system: &NineBandSystem,
    kind: SolverKind,
    guess: Option<&ScalarField>,
) -> Result<(ScalarField, SolveStats)> {
    let start = std::time::Instant::now();
    let a = &system.matrix;
    if let Some(r) = a.diagonal().iter().position(|&d| d == 0.0) {
        return Err(Error::Singular(format!("zero diagonal entry in row {r}")));
    }
    let grid = system.boundary.grid();
    let x0: Vec<f64> = match guess {
        Some(g) => interior_values(g),
        None => vec![0.0; a.n],
    };
    let (x, method, iterations) = match kind {
        SolverKind::Direct => match BandLu::factor(a) {
            Ok(lu) => (lu.solve(&system.rhs), SolverKind::Direct, 0),
            Err(direct_err) => {
                let (x, it) = bicgstab(a, &system.rhs, x0).map_err(|e| match e {
                    Error::NotConverged { .. } => direct_err,
                    other => other,
                })?;
                (x, SolverKind::Bicgstab, it)
            }
        },
        SolverKind::Bicgstab => {
            let (x, it) = bicgstab(a, &system.rhs, x0)?;
            (x, SolverKind::Bicgstab, it)
        }
    };
    let relative_residual = relative_residual(a, &x, &system.rhs);
    let mut field = system.boundary.clone();
    let nc = grid.n_cells();
    for j in 1..nc {
        for i in 1..nc {
            field.set(i, j, x[grid.interior_index(i, j)]);
        }
    }
    Ok((
        field,
        SolveStats {
            method,
            iterations,
            relative_residual,
            elapsed_secs: start.elapsed().as_secs_f64(),
        },
    ))
}

fn interior_values(f: &ScalarField) -> Vec<f64> {
    let g = f.grid();
    let nc = g.n_cells();
    let mut v = vec![0.0; g.n_interior()];
    for j in 1..nc {
        for i in 1..nc {
            v[g.interior_index(i, j)] = f.get(i, j);
        }
    }
    v
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let mut ax = vec![0.0; a.n];
    a.mul_vec(x, &mut ax);
    let r: Vec<f64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
    let nb = norm(b);
    if nb > 0.0 {
        norm(&r) / nb
    } else {
        norm(&r)
    }
}

/// LU factors of a banded matrix with row interchanges, stored column-major
/// with `2 kl + ku + 1` rows per column.
struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandLu {
    #[inline]
    fn idx(&self, r: usize, c: usize) -> usize {
        let ld = 2 * self.kl + self.ku + 1;
        (self.kl + self.ku + r - c) + c * ld
    }

    fn factor(a: &CsrMatrix) -> Result<Self> {
        let (kl, ku) = a.bandwidths();
        let n = a.n;
        let ld = 2 * kl + ku + 1;
        let mut lu = Self {
            n,
            kl,
            ku,
            ab: vec![0.0; ld * n],
            ipiv: vec![0; n],
        };
        let mut max_entry = 0.0_f64;
        for r in 0..n {
            for k in a.row_ptr[r]..a.row_ptr[r + 1] {
                let c = a.col_idx[k];
                let i = lu.idx(r, c);
                lu.ab[i] = a.values[k];
                max_entry = max_entry.max(a.values[k].abs());
            }
        }
        let mut ju = 0;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let (mut jp, mut best) = (0, -1.0);
            for t in 0..=km {
                let v = lu.ab[lu.idx(j + t, j)].abs();
                if v > best {
                    best = v;
                    jp = t;
                }
            }
            lu.ipiv[j] = j + jp;
            if best <= 1e-14 * max_entry {
                return Err(Error::Singular(format!(
                    "pivot {best:e} in column {j} (largest entry {max_entry:e})"
                )));
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let (x, y) = (lu.idx(j, c), lu.idx(j + jp, c));
                    lu.ab.swap(x, y);
                }
            }
            let piv = lu.ab[lu.idx(j, j)];
            for r in j + 1..=j + km {
                let i = lu.idx(r, j);
                lu.ab[i] /= piv;
            }
            for c in j + 1..=ju {
                let t = lu.ab[lu.idx(j, c)];
                if t == 0.0 {
                    continue;
                }
                for r in j + 1..=j + km {
                    let l = lu.ab[lu.idx(r, j)];
                    let i = lu.idx(r, c);
                    lu.ab[i] -= l * t;
                }
            }
        }
        Ok(lu)
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = b.to_vec();
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                x.swap(j, p);
            }
            let km = self.kl.min(n - 1 - j);
            let xj = x[j];
            if xj != 0.0 {
                for r in j + 1..=j + km {
                    x[r] -= self.ab[self.idx(r, j)] * xj;
                }
            }
        }
        let kv = self.kl + self.ku;
        for j in (0..n).rev() {
            x[j] /= self.ab[self.idx(j, j)];
            let xj = x[j];
            if xj != 0.0 {
                for r in j.saturating_sub(kv)..j {
                    x[r] -= self.ab[self.idx(r, j)] * xj;
                }
            }
        }
        x
    }
}

/// Jacobi-preconditioned BiCGStab. Returns the solution and iteration count.
pub fn bicgstab(a: &CsrMatrix, b: &[f64], mut x: Vec<f64>) -> Result<(Vec<f64>, usize)> {
    let n = a.n;
    let inv_d: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
    let nb = norm(b).max(f64::MIN_POSITIVE);
    let mut r = vec![0.0; n];
    a.mul_vec(&x, &mut r);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut history = Vec::new();
    let mut res = norm(&r) / nb;
    history.push(res);
    if res <= BICGSTAB_TOL {
        return Ok((x, 0));
    }
    for it in 1..=BICGSTAB_MAX_ITER {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || omega == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for k in 0..n {
            p[k] = r[k] + beta * (p[k] - omega * v[k]);
            y[k] = inv_d[k] * p[k];
        }
        a.mul_vec(&y, &mut v);
        alpha = rho / dot(&r_hat, &v);
        for k in 0..n {
            s[k] = r[k] - alpha * v[k];
        }
        if norm(&s) / nb <= BICGSTAB_TOL {
            for k in 0..n {
                x[k] += alpha * y[k];
            }
            return Ok((x, it));
        }
        for k in 0..n {
            z[k] = inv_d[k] * s[k];
        }
        a.mul_vec(&z, &mut t);
        omega = dot(&t, &s) / dot(&t, &t);
        for k in 0..n {
            x[k] += alpha * y[k] + omega * z[k];
            r[k] = s[k] - omega * t[k];
        }
        res = norm(&r) / nb;
        history.push(res);
        if res <= BICGSTAB_TOL {
            return Ok((x, it));
        }
        if !res.is_finite() {
            break;
        }
    }
    Err(Error::NotConverged {
        iterations: history.len() - 1,
        residual: res,
        history,
    })
}

/// Writes the matrix in Matrix Market coordinate format (1-based indices).
pub fn write_matrix_market(matrix: &CsrMatrix, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(f, "{} {} {}", matrix.n, matrix.n, matrix.nnz())?;
    for r in 0..matrix.n {
        for k in matrix.row_ptr[r]..matrix.row_ptr[r + 1] {
            writeln!(f, "{} {} {:.17e}", r + 1, matrix.col_idx[k] + 1, matrix.values[k])?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{EquationMode, PointCoefficients};
    use crate::grid::GridSpec;
    use crate::stencil::{closed_form_general, StencilVariant};

    fn poisson_field(grid: GridSpec) -> StencilField {
        let pc = PointCoefficients::zero(EquationMode::Steady, grid.h());
        let s = closed_form_general(&pc);
        StencilField::new(grid, StencilVariant::General4, vec![s; grid.n_interior()]).unwrap()
    }

    #[test]
    fn single_unknown_system() {
        let grid = GridSpec::coarse(2).unwrap();
        let boundary = ScalarField::constant(grid, 1.0);
        let sys = assemble(&poisson_field(grid), &boundary).unwrap();
        assert_eq!(sys.matrix.n, 1);
        assert_eq!(sys.matrix.values, vec![-10.0 / 3.0]);
        // -10/3 u = -(4 * 2/3 + 4 * 1/6) * 1
        assert!((sys.rhs[0] + 10.0 / 3.0).abs() < 1e-15);
        let (u, stats) = solve(&sys).unwrap();
        assert!((u.get(1, 1) - 1.0).abs() < 1e-15);
        assert!(stats.relative_residual < 1e-15);
    }

    #[test]
    fn bandwidth_matches_grid() {
        let grid = GridSpec::new(8).unwrap();
        let sys = assemble(&poisson_field(grid), &ScalarField::zeros(grid)).unwrap();
        assert_eq!(sys.matrix.bandwidths(), (8, 8));
        assert_eq!(sys.matrix.nnz(), 9 * 25 + 6 * 4 * 5 + 4 * 4);
    }

    #[test]
    fn direct_and_iterative_agree() {
        let grid = GridSpec::new(16).unwrap();
        let boundary = ScalarField::from_fn(grid, |i, j| {
            let (x, y) = (grid.coord(i), grid.coord(j));
            x * x - y * y + 0.5 * x * y
        });
        let sys = assemble(&poisson_field(grid), &boundary).unwrap();
        let (u1, s1) = solve_with(&sys, SolverKind::Direct, None).unwrap();
        let (u2, s2) = solve_with(&sys, SolverKind::Bicgstab, None).unwrap();
        assert!(s1.relative_residual < 1e-12 && s2.relative_residual < 1e-11);
        assert!(u1.max_abs_diff(&u2).unwrap() < 1e-10);
        // Harmonic quadratics are reproduced exactly by the 9-point Laplacian.
        assert!(u1.max_abs_diff(&boundary).unwrap() < 1e-12);
    }

    #[test]
    fn zero_data_gives_zero_rhs() {
        let grid = GridSpec::new(8).unwrap();
        let sys = assemble(&poisson_field(grid), &ScalarField::zeros(grid)).unwrap();
        assert_eq!(sys.rhs.len(), 49);
        assert!(sys.rhs.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn diagonal_system_is_solved_exactly() {
        let grid = GridSpec::new(8).unwrap();
        let n = grid.n_interior();
        let sys = NineBandSystem {
            matrix: CsrMatrix {
                n,
                row_ptr: (0..=n).collect(),
                col_idx: (0..n).collect(),
                values: (0..n).map(|k| 1.0 + k as f64).collect(),
            },
            rhs: (0..n).map(|k| 2.0 * (1.0 + k as f64)).collect(),
            boundary: ScalarField::constant(grid, -1.0),
        };
        let (u, _) = solve(&sys).unwrap();
        for j in 0..=8 {
            for i in 0..=8 {
                let want = if grid.is_boundary(i, j) { -1.0 } else { 2.0 };
                assert_eq!(u.get(i, j), want);
            }
        }
    }

    #[test]
    fn zero_diagonal_is_singular() {
        let grid = GridSpec::new(8).unwrap();
        let mut sys = assemble(&poisson_field(grid), &ScalarField::zeros(grid)).unwrap();
        let r = 10;
        for k in sys.matrix.row_ptr[r]..sys.matrix.row_ptr[r + 1] {
            if sys.matrix.col_idx[k] == r {
                sys.matrix.values[k] = 0.0;
            }
        }
        assert!(matches!(solve(&sys), Err(Error::Singular(_))));
    }

    #[test]
    fn matrix_market_header() {
        let grid = GridSpec::new(8).unwrap();
        let sys = assemble(&poisson_field(grid), &ScalarField::zeros(grid)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.mtx");
        write_matrix_market(&sys.matrix, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "%%MatrixMarket matrix coordinate real general");
        assert_eq!(lines.next().unwrap(), format!("49 49 {}", sys.matrix.nnz()));
    }
}
