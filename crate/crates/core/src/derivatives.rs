//! Finite-difference derivatives of nodal fields.
//!
//! Every order from 1 to 5 has a small catalogue of six-point (five-point for
//! the centered even-order rules) formulas. Near the boundary the catalogue
//! switches to shifted or one-sided rules. Mixed derivatives differentiate
//! along x first, then along y.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ScalarField;

/// Highest derivative order supported along one axis and in total.
pub const MAX_ORDER: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    Y,
}

/// How a formula is chosen when several fit inside the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionPolicy {
    /// Smallest reach `max |offset|`; ties go to the earlier catalogue entry,
    /// and a forward (`+`) rule precedes its mirror.
    #[default]
    MostCentered,
    /// First admissible entry in catalogue order.
    FirstListed,
}

/// One difference rule: `rho^(order)(x_i) ~ sum_k w_k rho(x_{i + o_k}) / h^order`.
#[derive(Debug, Clone, PartialEq)]
pub struct Formula {
    pub order: usize,
    pub offsets: Vec<i32>,
    pub weights: Vec<f64>,
}

impl Formula {
    fn new(order: usize, offsets: &[i32], weights: &[f64]) -> Self {
        Self {
            order,
            offsets: offsets.to_vec(),
            weights: weights.to_vec(),
        }
    }

    /// The rule reflected about the node: offsets negate and the weights pick up `(-1)^order`.
    pub fn mirrored(&self) -> Self {
        let sign = if self.order % 2 == 0 { 1.0 } else { -1.0 };
        Self {
            order: self.order,
            offsets: self.offsets.iter().map(|o| -o).collect(),
            weights: self.weights.iter().map(|w| sign * w).collect(),
        }
    }

    pub fn min_offset(&self) -> i32 {
        *self.offsets.iter().min().unwrap()
    }

    pub fn max_offset(&self) -> i32 {
        *self.offsets.iter().max().unwrap()
    }

    pub fn reach(&self) -> i32 {
        self.offsets.iter().map(|o| o.abs()).max().unwrap()
    }

    fn fits(&self, i: usize, n_cells: usize) -> bool {
        let i = i as i64;
        i + self.min_offset() as i64 >= 0 && i + self.max_offset() as i64 <= n_cells as i64
    }
}

/// Catalogue for one order, in listing order, with `+`/`-` pairs adjacent.
pub fn catalogue(order: usize) -> Result<Vec<Formula>> {
    let f = |offsets: &[i32], weights: &[f64]| Formula::new(order, offsets, weights);
    let pair = |offsets: &[i32], weights: &[f64]| {
        let fwd = Formula::new(order, offsets, weights);
        let back = fwd.mirrored();
        [fwd, back]
    };
    let shifted = [-2, -1, 0, 1, 2, 3];
    let shifted_back = [-3, -2, -1, 0, 1, 2];
    let one_sided = [0, 1, 2, 3, 4, 5];
    let near = [-1, 0, 1, 2, 3, 4];
    let centered5 = [-2, -1, 0, 1, 2];

    let mut out = Vec::new();
    match order {
        1 => {
            out.push(f(&shifted, &[1. / 20., -1. / 2., -1. / 3., 1., -1. / 4., 1. / 30.]));
            out.push(f(&shifted_back, &[-1. / 30., 1. / 4., -1., 1. / 3., 1. / 2., -1. / 20.]));
            out.extend(pair(&one_sided, &[-137. / 60., 5., -5., 10. / 3., -5. / 4., 1. / 5.]));
            out.extend(pair(&near, &[-1. / 5., -13. / 12., 2., -1., 1. / 3., -1. / 20.]));
        }
        2 => {
            out.push(f(&centered5, &[-1. / 12., 4. / 3., -5. / 2., 4. / 3., -1. / 12.]));
            out.extend(pair(&one_sided, &[15. / 4., -77. / 6., 107. / 6., -13., 61. / 12., -5. / 6.]));
            out.extend(pair(&near, &[5. / 6., -5. / 4., -1. / 3., 7. / 6., -1. / 2., 1. / 12.]));
        }
        3 => {
            out.push(f(&shifted, &[-1. / 4., -1. / 4., 5. / 2., -7. / 2., 7. / 4., -1. / 4.]));
            out.push(f(&shifted_back, &[1. / 4., -7. / 4., 7. / 2., -5. / 2., 1. / 4., 1. / 4.]));
            out.extend(pair(&one_sided, &[-17. / 4., 71. / 4., -59. / 2., 49. / 2., -41. / 4., 7. / 4.]));
            out.extend(pair(&near, &[-7. / 4., 25. / 4., -17. / 2., 11. / 2., -7. / 4., 1. / 4.]));
        }
        4 => {
            out.push(f(&centered5, &[1., -4., 6., -4., 1.]));
            out.extend(pair(&one_sided, &[3., -14., 26., -24., 11., -2.]));
            out.extend(pair(&near, &[2., -9., 16., -14., 6., -1.]));
        }
        5 => {
            out.push(f(&shifted, &[-1., 5., -10., 10., -5., 1.]));
            out.push(f(&shifted_back, &[-1., 5., -10., 10., -5., 1.]));
            out.extend(pair(&one_sided, &[-1., 5., -10., 10., -5., 1.]));
            out.extend(pair(&near, &[-1., 5., -10., 10., -5., 1.]));
        }
        _ => return Err(Error::DerivativeOrder(order)),
    }
    Ok(out)
}

/// Formula used at index `i` of a line with `n_cells` cells.
pub fn select_formula(
    catalogue: &[Formula],
    i: usize,
    n_cells: usize,
    policy: SelectionPolicy,
) -> Option<&Formula> {
    let mut fitting = catalogue.iter().filter(|f| f.fits(i, n_cells));
    match policy {
        SelectionPolicy::FirstListed => fitting.next(),
        // min_by_key keeps the first of equal keys, so catalogue order breaks ties.
        SelectionPolicy::MostCentered => fitting.min_by_key(|f| f.reach()),
    }
}

/// Per-index formula plan for one line, reusable across rows.
fn plan(order: usize, n_cells: usize, policy: SelectionPolicy) -> Result<Vec<Formula>> {
    let cat = catalogue(order)?;
    (0..=n_cells)
        .map(|i| {
            select_formula(&cat, i, n_cells, policy)
                .cloned()
                .ok_or(Error::GridTooCoarse {
                    got: n_cells,
                    min: 5,
                })
        })
        .collect()
}

fn apply_line(
    plan: &[Formula],
    inv_h_pow: f64,
    get: impl Fn(usize) -> f64,
    mut put: impl FnMut(usize, f64),
) {
    for (i, f) in plan.iter().enumerate() {
        let base = get(i);
        // Differences against the node value keep constants exactly in the kernel.
        let s: f64 = f
            .offsets
            .iter()
            .zip(&f.weights)
            .map(|(&o, &w)| w * (get((i as i64 + o as i64) as usize) - base))
            .sum();
        put(i, s * inv_h_pow);
    }
}

/// Derivative of `order` (1..=5) along one axis.
pub fn axis_derivative(field: &ScalarField, axis: Axis, order: usize) -> Result<ScalarField> {
    axis_derivative_with(field, axis, order, SelectionPolicy::default())
}

pub fn axis_derivative_with(
    field: &ScalarField,
    axis: Axis,
    order: usize,
    policy: SelectionPolicy,
) -> Result<ScalarField> {
    let grid = field.grid();
    let n = grid.n_cells();
    let plan = plan(order, n, policy)?;
    let scale = grid.h().powi(-(order as i32));
    let mut out = ScalarField::zeros(grid);
    for line in 0..=n {
        match axis {
            Axis::X => apply_line(
                &plan,
                scale,
                |i| field.get(i, line),
                |i, v| out.set(i, line, v),
            ),
            Axis::Y => apply_line(
                &plan,
                scale,
                |j| field.get(line, j),
                |j, v| out.set(line, j, v),
            ),
        }
    }
    Ok(out)
}

/// `rho^(m,n)`: x-derivative of order `m`, then y-derivative of order `n`.
pub fn mixed_derivative(field: &ScalarField, m: usize, n: usize) -> Result<ScalarField> {
    mixed_derivative_with(field, m, n, SelectionPolicy::default())
}

pub fn mixed_derivative_with(
    field: &ScalarField,
    m: usize,
    n: usize,
    policy: SelectionPolicy,
) -> Result<ScalarField> {
    if m + n > MAX_ORDER {
        return Err(Error::MixedOrder { m, n });
    }
    let dx = if m > 0 {
        axis_derivative_with(field, Axis::X, m, policy)?
    } else {
        field.clone()
    };
    if n > 0 {
        axis_derivative_with(&dx, Axis::Y, n, policy)
    } else {
        Ok(dx)
    }
}

/// Position of `(m, n)` in a table ordered by total order, then by `n`.
#[inline]
pub const fn tri_index(m: usize, n: usize) -> usize {
    let s = m + n;
    s * (s + 1) / 2 + n
}

/// Number of pairs with `m + n <= order`.
#[inline]
pub const fn tri_len(order: usize) -> usize {
    (order + 1) * (order + 2) / 2
}

/// All `(m, n)` with `m + n <= order`, in [`tri_index`] order.
pub fn tri_pairs(order: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..=order).flat_map(|s| (0..=s).map(move |n| (s - n, n)))
}

/// Every mixed derivative of a field up to a total order.
#[derive(Debug, Clone)]
pub struct DerivativeTable {
    max_order: usize,
    entries: Vec<ScalarField>,
}

impl DerivativeTable {
    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn get(&self, m: usize, n: usize) -> Option<&ScalarField> {
        (m + n <= self.max_order).then(|| &self.entries[tri_index(m, n)])
    }

    /// Value of `rho^(m,n)` at a node; zero beyond the table's order.
    #[inline]
    pub fn value(&self, m: usize, n: usize, i: usize, j: usize) -> f64 {
        self.get(m, n).map_or(0.0, |f| f.get(i, j))
    }

    pub(crate) fn get_by_index(&self, k: usize) -> &ScalarField {
        &self.entries[k]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Table from entries in triangular order; the length fixes the order.
    pub(crate) fn from_entries(entries: Vec<ScalarField>) -> Self {
        let max_order = (0..=MAX_ORDER)
            .find(|&s| tri_len(s) == entries.len())
            .expect("entry count is a triangular number");
        Self { max_order, entries }
    }

    /// `sa * self + sb * other`, entry by entry.
    pub(crate) fn combine(&self, sa: f64, other: &DerivativeTable, sb: f64) -> Result<Self> {
        if self.max_order != other.max_order {
            return Err(Error::MixedOrder {
                m: self.max_order,
                n: other.max_order,
            });
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.zip_map(b, |x, y| sa * x + sb * y))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            max_order: self.max_order,
            entries,
        })
    }

    pub(crate) fn scaled(&self, s: f64) -> Self {
        Self {
            max_order: self.max_order,
            entries: self.entries.iter().map(|f| f.map(|v| s * v)).collect(),
        }
    }
}

pub fn derivative_table(field: &ScalarField, max_total_order: usize) -> Result<DerivativeTable> {
    derivative_table_with(field, max_total_order, SelectionPolicy::default())
}

pub fn derivative_table_with(
    field: &ScalarField,
    max_total_order: usize,
    policy: SelectionPolicy,
) -> Result<DerivativeTable> {
    if max_total_order > MAX_ORDER {
        return Err(Error::MixedOrder {
            m: max_total_order,
            n: 0,
        });
    }
    let mut by_x = vec![field.clone()];
    for m in 1..=max_total_order {
        by_x.push(axis_derivative_with(field, Axis::X, m, policy)?);
    }
    let mut entries = Vec::with_capacity(tri_len(max_total_order));
    for (m, n) in tri_pairs(max_total_order) {
        entries.push(if n == 0 {
            by_x[m].clone()
        } else {
            axis_derivative_with(&by_x[m], Axis::Y, n, policy)?
        });
    }
    Ok(DerivativeTable {
        max_order: max_total_order,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn factorial(k: usize) -> f64 {
        (1..=k).map(|v| v as f64).product()
    }

    /// `sum_k w_k o_k^p` for a rule, i.e. its action on `x^p / h^order` at the node.
    fn moment(f: &Formula, p: u32) -> f64 {
        f.offsets
            .iter()
            .zip(&f.weights)
            .map(|(&o, &w)| w * (o as f64).powi(p as i32))
            .sum()
    }

    #[test]
    fn every_rule_annihilates_constants_and_reproduces_its_order() {
        for order in 1..=5 {
            let cat = catalogue(order).unwrap();
            assert_eq!(cat.len(), if order % 2 == 0 { 5 } else { 6 });
            for f in &cat {
                assert!(moment(f, 0).abs() < 1e-12, "order {order}: {f:?}");
                let m = moment(f, order as u32);
                assert!((m - factorial(order)).abs() < 1e-10, "order {order}: {m}");
                for p in 1..order as u32 {
                    assert!(moment(f, p).abs() < 1e-10, "order {order} p {p}");
                }
            }
        }
    }

    #[test]
    fn rules_are_exact_on_polynomials_of_degree_five() {
        // Six distinct points give exactness through degree 5; the symmetric
        // five-point rules get degree 5 by symmetry.
        for order in 1..=5 {
            for f in catalogue(order).unwrap() {
                for p in (order as u32 + 1)..=5 {
                    assert!(moment(&f, p).abs() < 1e-9, "order {order} p {p}");
                }
            }
        }
    }

    #[test]
    fn order_zero_and_six_are_rejected() {
        assert!(matches!(catalogue(0), Err(Error::DerivativeOrder(0))));
        assert!(matches!(catalogue(6), Err(Error::DerivativeOrder(6))));
        let f = ScalarField::zeros(make_grid(8).unwrap());
        assert!(matches!(mixed_derivative(&f, 3, 3), Err(Error::MixedOrder { .. })));
    }

    #[test]
    fn selection_prefers_centered_rules() {
        let cat = catalogue(1).unwrap();
        let pick = |i| select_formula(&cat, i, 16, SelectionPolicy::MostCentered).unwrap();
        assert_eq!((pick(0).min_offset(), pick(0).max_offset()), (0, 5));
        assert_eq!((pick(1).min_offset(), pick(1).max_offset()), (-1, 4));
        assert_eq!((pick(2).min_offset(), pick(2).max_offset()), (-2, 3));
        assert_eq!((pick(14).min_offset(), pick(14).max_offset()), (-3, 2));
        assert_eq!((pick(15).min_offset(), pick(15).max_offset()), (-4, 1));
        assert_eq!((pick(16).min_offset(), pick(16).max_offset()), (-5, 0));
        let first = select_formula(&cat, 1, 16, SelectionPolicy::FirstListed).unwrap();
        assert_eq!((first.min_offset(), first.max_offset()), (0, 5));
    }

    #[test]
    fn quintic_is_differentiated_exactly_everywhere() {
        let g = make_grid(8).unwrap();
        let p = |x: f64| 1.0 + 2.0 * x - 3.0 * x.powi(2) + x.powi(3) + 4.0 * x.powi(4) - 2.0 * x.powi(5);
        let dp = [
            |x: f64| 2.0 - 6.0 * x + 3.0 * x * x + 16.0 * x.powi(3) - 10.0 * x.powi(4),
            |x: f64| -6.0 + 6.0 * x + 48.0 * x * x - 40.0 * x.powi(3),
            |x: f64| 6.0 + 96.0 * x - 120.0 * x * x,
            |x: f64| 96.0 - 240.0 * x,
            |_: f64| -240.0,
        ];
        let f = ScalarField::from_fn(g, |i, _| p(g.coord(i)));
        for (k, d) in dp.iter().enumerate() {
            let num = axis_derivative(&f, Axis::X, k + 1).unwrap();
            for i in 0..=8 {
                let exact = d(g.coord(i));
                assert!((num.get(i, 3) - exact).abs() < 1e-7 * (1.0 + exact.abs()), "order {}", k + 1);
            }
        }
    }

    #[test]
    fn constant_fields_have_exactly_zero_derivatives() {
        let f = ScalarField::constant(make_grid(64).unwrap(), -0.4 / 0.3);
        let t = derivative_table(&f, 5).unwrap();
        for (m, n) in tri_pairs(5).skip(1) {
            assert!(t.get(m, n).unwrap().values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn mixed_derivative_of_product_polynomial() {
        let g = make_grid(16).unwrap();
        let f = ScalarField::from_fn(g, |i, j| {
            let (x, y) = (g.coord(i), g.coord(j));
            x.powi(3) * y.powi(2)
        });
        let d = mixed_derivative(&f, 2, 1).unwrap();
        for (i, j) in [(0, 0), (5, 9), (16, 16)] {
            let exact = 6.0 * g.coord(i) * 2.0 * g.coord(j);
            assert!((d.get(i, j) - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn table_indexing() {
        assert_eq!(tri_len(4), 15);
        assert_eq!(tri_len(5), 21);
        let pairs: Vec<_> = tri_pairs(2).collect();
        assert_eq!(pairs, [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]);
        for (k, (m, n)) in tri_pairs(5).enumerate() {
            assert_eq!(tri_index(m, n), k);
        }
    }
}
