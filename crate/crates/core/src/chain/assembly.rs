use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{ChainSpec, Entry, TransformationMatrix};
use crate::error::{Error, Result};

/// `d^plain D_m^partial`: rows `i < m` are differentiated `plain + partial`
/// times, the remaining rows `plain` times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Op {
    pub plain: usize,
    pub partial: usize,
}

impl Op {
    pub const IDENTITY: Op = Op { plain: 0, partial: 0 };

    pub fn derivative(plain: usize) -> Self {
        Op { plain, partial: 0 }
    }

    pub fn dm(partial: usize) -> Self {
        Op { plain: 0, partial }
    }

    pub fn order_for_row(self, row: usize, m: usize) -> usize {
        self.plain + if row < m { self.partial } else { 0 }
    }

    pub fn max_order(self) -> usize {
        self.plain + self.partial
    }

    /// One more plain derivative.
    pub fn raised(self) -> Self {
        Op { plain: self.plain + 1, ..self }
    }
}

/// Operator applied to column `col` in block row `row` (both zero-based).
///
/// Columns `col < M` hold singular links, the rest regular links; `col = N`
/// is the column of a bordering vector, which follows the regular pattern.
/// Row `N` is the bottom row of the bordered assembly.
pub fn operator_schedule(row: usize, col: usize, chain: &ChainSpec) -> Result<Op> {
    let n = chain.len();
    if row > n + 1 || col > n {
        return Err(Error::Argument(format!("block ({row},{col}) outside a chain of {n} links")));
    }
    Ok(schedule(row, col, chain.singular_count()))
}

fn schedule(row: usize, col: usize, singular: usize) -> Op {
    if col < singular {
        if row <= col {
            Op::dm(row)
        } else {
            Op::derivative(row)
        }
    } else if row <= singular {
        Op::dm(row)
    } else {
        Op { plain: row - singular, partial: singular }
    }
}

/// Replaces rows `i < m` of `value` by the matching rows of `derivative`.
pub fn apply_dm(value: &DMatrix<Complex64>, derivative: &DMatrix<Complex64>, m: usize) -> Result<DMatrix<Complex64>> {
    if value.shape() != derivative.shape() {
        return Err(Error::Argument("value and derivative shapes differ".into()));
    }
    if m == 0 || m > value.nrows() {
        return Err(Error::Argument(format!("m = {m} must satisfy 1 <= m <= {}", value.nrows())));
    }
    let mut out = value.clone();
    for i in 0..m {
        out.set_row(i, &derivative.row(i));
    }
    Ok(out)
}

/// Scalar `d_m`: differentiates component `j` (zero-based) iff `j < m`.
pub fn apply_dm_scalar(value: Complex64, derivative: Complex64, j: usize, m: usize) -> Complex64 {
    if j < m {
        derivative
    } else {
        value
    }
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("radius must be positive and finite, got {r}")));
    }
    Ok(())
}

fn check_order(op: Op, supported: usize) -> Result<()> {
    if op.max_order() > supported {
        return Err(Error::Capability { requested: op.max_order(), supported });
    }
    Ok(())
}

/// `op` applied to `u` at `r`, using the analytic derivative closures.
pub fn eval_block(u: &TransformationMatrix, op: Op, m: usize, r: f64) -> Result<DMatrix<Complex64>> {
    check_radius(r)?;
    check_order(op, u.max_order())?;
    let n = u.dim();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        let order = op.order_for_row(i, m);
        for j in 0..n {
            out[(i, j)] = u.entry(i, j).derivative(r, order)?;
        }
    }
    Ok(out)
}

/// `op` applied to a vector function.
pub fn eval_column(psi: &[Entry], op: Op, m: usize, r: f64) -> Result<DVector<Complex64>> {
    check_radius(r)?;
    let supported = psi.iter().map(Entry::max_order).min().unwrap_or(usize::MAX);
    check_order(op, supported)?;
    let mut out = DVector::zeros(psi.len());
    for (i, e) in psi.iter().enumerate() {
        out[i] = e.derivative(r, op.order_for_row(i, m))?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockTag {
    pub block_row: usize,
    pub block_col: usize,
    pub op: Op,
}

/// Numeric assembly at one radius together with the operator that produced
/// each `n x n` block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockAssembly {
    pub matrix: DMatrix<Complex64>,
    pub tags: Vec<BlockTag>,
}

impl BlockAssembly {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// `nN x nN` matrix whose block `(j, k)` is `operator_schedule(j, k)` applied to `U_k`.
pub fn build_w(chain: &ChainSpec, r: f64) -> Result<BlockAssembly> {
    check_radius(r)?;
    let (n, links, m) = (chain.channels(), chain.len(), chain.subsystem());
    let singular = chain.singular_count();
    let mut matrix = DMatrix::zeros(n * links, n * links);
    let mut tags = Vec::with_capacity(links * links);
    for (k, u) in chain.links().iter().enumerate() {
        for j in 0..links {
            let op = schedule(j, k, singular);
            let block = eval_block(u, op, m, r)?;
            matrix.view_mut((j * n, k * n), (n, n)).copy_from(&block);
            tags.push(BlockTag { block_row: j, block_col: k, op });
        }
    }
    Ok(BlockAssembly { matrix, tags })
}

fn bordered(chain: &ChainSpec, psi: &[Entry], j: usize, r: f64, extra: usize) -> Result<BlockAssembly> {
    let (n, links, m) = (chain.channels(), chain.len(), chain.subsystem());
    if psi.len() != n {
        return Err(Error::Argument(format!("vector has {} components, chain has {n} channels", psi.len())));
    }
    if j >= n {
        return Err(Error::Argument(format!("component {j} out of range for {n} channels")));
    }
    let singular = chain.singular_count();
    let w = build_w(chain, r)?;
    let dim = n * links + 1;
    let mut matrix = DMatrix::zeros(dim, dim);
    matrix.view_mut((0, 0), (dim - 1, dim - 1)).copy_from(&w.matrix);
    for row in 0..links {
        let col = eval_column(psi, schedule(row, links, singular), m, r)?;
        matrix.view_mut((row * n, dim - 1), (n, 1)).copy_from(&col);
    }
    for (k, u) in chain.links().iter().enumerate() {
        let op = schedule(links, k, singular);
        let op = Op { plain: op.plain + extra, ..op };
        check_order(op, u.max_order())?;
        let order = op.order_for_row(j, m);
        for c in 0..n {
            matrix[(dim - 1, k * n + c)] = u.entry(j, c).derivative(r, order)?;
        }
    }
    let corner = schedule(links, links, singular);
    let corner = Op { plain: corner.plain + extra, ..corner };
    check_order(corner, psi[j].max_order())?;
    matrix[(dim - 1, dim - 1)] = psi[j].derivative(r, corner.order_for_row(j, m))?;
    Ok(BlockAssembly { matrix, tags: w.tags })
}

/// `W` bordered on the right by the column of `psi` and at the bottom by
/// row `j` (zero-based) of the next operator in the schedule.
pub fn build_wj(chain: &ChainSpec, psi: &[Entry], j: usize, r: f64) -> Result<BlockAssembly> {
    bordered(chain, psi, j, r, 0)
}

/// `build_wj` with its bottom row differentiated once more.
pub fn build_wj_differentiated(chain: &ChainSpec, psi: &[Entry], j: usize, r: f64) -> Result<BlockAssembly> {
    bordered(chain, psi, j, r, 1)
}

/// `W` whose last block row has, in every block, row `j` replaced by row `i`
/// of the next operator in the schedule applied to the same link.
pub fn build_wij(chain: &ChainSpec, i: usize, j: usize, r: f64) -> Result<BlockAssembly> {
    let (n, links, m) = (chain.channels(), chain.len(), chain.subsystem());
    if i >= n || j >= n {
        return Err(Error::Argument(format!("indices ({i},{j}) out of range for {n} channels")));
    }
    let singular = chain.singular_count();
    let mut w = build_w(chain, r)?;
    let row = (links - 1) * n + j;
    for (k, u) in chain.links().iter().enumerate() {
        let op = schedule(links, k, singular);
        check_order(op, u.max_order())?;
        let order = op.order_for_row(i, m);
        for c in 0..n {
            w.matrix[(row, k * n + c)] = u.entry(i, c).derivative(r, order)?;
        }
    }
    Ok(w)
}
