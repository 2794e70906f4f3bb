//! Transformation matrices, chains of links and the block assemblies whose
//! determinants give the resulting action of a chain.

mod assembly;
mod basis;

pub use assembly::{
    apply_dm, apply_dm_scalar, build_w, build_wij, build_wj, build_wj_differentiated, eval_block, eval_column, operator_schedule,
    BlockAssembly, BlockTag, Op,
};
pub use basis::{make_basis, BasisKind, BasisSolution, ChannelPotential, CustomBasis};

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};

/// One entry of a transformation matrix or solution vector: either a
/// constant or a linear combination of basis solutions.
#[derive(Debug, Clone, PartialEq)]
pub enum Entry {
    Const(Complex64),
    Sum(Vec<(Complex64, BasisSolution)>),
}

impl Entry {
    pub fn zero() -> Self {
        Entry::Const(Complex64::zero())
    }

    pub fn one() -> Self {
        Entry::Const(Complex64::new(1.0, 0.0))
    }

    pub fn term(coeff: Complex64, basis: BasisSolution) -> Self {
        Entry::Sum(vec![(coeff, basis)])
    }

    pub fn basis(basis: BasisSolution) -> Self {
        Self::term(Complex64::new(1.0, 0.0), basis)
    }

    pub fn derivative(&self, r: f64, order: usize) -> Result<Complex64> {
        match self {
            Entry::Const(c) => Ok(if order == 0 { *c } else { Complex64::zero() }),
            Entry::Sum(terms) => terms.iter().try_fold(Complex64::zero(), |acc, (c, b)| {
                Ok(acc + *c * b.derivative(r, order)?)
            }),
        }
    }

    pub fn max_order(&self) -> usize {
        match self {
            Entry::Const(_) => usize::MAX,
            Entry::Sum(terms) => terms.iter().map(|(_, b)| b.max_order()).min().unwrap_or(usize::MAX),
        }
    }

    pub fn conjugate(&self) -> Self {
        match self {
            Entry::Const(c) => Entry::Const(c.conj()),
            Entry::Sum(terms) => Entry::Sum(terms.iter().map(|(c, b)| (c.conj(), b.conjugate())).collect()),
        }
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        match self {
            Entry::Const(c) => Entry::Const(c * s),
            Entry::Sum(terms) => Entry::Sum(terms.iter().map(|(c, b)| (c * s, b.clone())).collect()),
        }
    }

    fn is_zero_const(&self) -> bool {
        matches!(self, Entry::Const(c) if c.is_zero())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    /// Acts on the first `m` channels only; the matrix is `diag(active, I)`.
    Singular { m: usize },
    Regular,
}

/// `n x n` matrix solution `H0 U = U lambda` generating one link of a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformationMatrix {
    n: usize,
    entries: Vec<Entry>,
    lambda: Complex64,
    kind: LinkKind,
}

impl TransformationMatrix {
    /// Regular link from `n x n` entries given row by row.
    pub fn regular(rows: Vec<Vec<Entry>>, lambda: Complex64) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Argument("transformation matrix must be square and non-empty".into()));
        }
        let entries: Vec<Entry> = rows.into_iter().flatten().collect();
        let out = Self { n, entries, lambda, kind: LinkKind::Regular };
        out.check_spectral_values()?;
        Ok(out)
    }

    /// Singular link `diag(active, I_{n-m})` where `active` is `m x m`.
    pub fn singular(active: Vec<Vec<Entry>>, n: usize, lambda: Complex64) -> Result<Self> {
        let m = active.len();
        if m == 0 || m > n || active.iter().any(|r| r.len() != m) {
            return Err(Error::Argument(format!("active block must be m x m with 1 <= m <= n = {n}")));
        }
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(if i < m && j < m {
                    active[i][j].clone()
                } else if i == j {
                    Entry::one()
                } else {
                    Entry::zero()
                });
            }
        }
        let out = Self { n, entries, lambda, kind: LinkKind::Singular { m } };
        out.check_spectral_values()?;
        Ok(out)
    }

    fn check_spectral_values(&self) -> Result<()> {
        for (idx, e) in self.entries.iter().enumerate() {
            let (i, j) = (idx / self.n, idx % self.n);
            match (e, self.kind) {
                (Entry::Sum(terms), _) => {
                    for (_, b) in terms {
                        let lam = b.spectral_value();
                        if (lam - self.lambda).norm() > 1e-10 * self.lambda.norm().max(1.0) {
                            return Err(Error::Argument(format!(
                                "entry ({i},{j}) has spectral value {lam}, link has {}",
                                self.lambda
                            )));
                        }
                    }
                }
                (Entry::Const(_), LinkKind::Singular { m }) if i >= m || j >= m => {}
                (c, _) if c.is_zero_const() => {}
                _ => {
                    return Err(Error::Argument(format!(
                        "entry ({i},{j}) is a nonzero constant outside an identity block"
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }

    pub fn kind(&self) -> LinkKind {
        self.kind
    }

    pub fn is_singular(&self) -> bool {
        matches!(self.kind, LinkKind::Singular { .. })
    }

    pub fn entry(&self, i: usize, j: usize) -> &Entry {
        &self.entries[i * self.n + j]
    }

    pub fn column(&self, j: usize) -> Vec<Entry> {
        (0..self.n).map(|i| self.entry(i, j).clone()).collect()
    }

    /// Pointwise complex conjugate; the spectral value is conjugated too.
    pub fn conjugate(&self) -> Self {
        Self {
            n: self.n,
            entries: self.entries.iter().map(Entry::conjugate).collect(),
            lambda: self.lambda.conj(),
            kind: self.kind,
        }
    }

    /// Same matrix re-labelled as a regular link.
    pub fn as_regular(&self) -> Self {
        Self { kind: LinkKind::Regular, ..self.clone() }
    }

    pub fn max_order(&self) -> usize {
        self.entries.iter().map(Entry::max_order).min().unwrap_or(usize::MAX)
    }

    /// `d^order U / dr^order` entrywise.
    pub fn derivative(&self, r: f64, order: usize) -> Result<DMatrix<Complex64>> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out[(i, j)] = self.entry(i, j).derivative(r, order)?;
            }
        }
        Ok(out)
    }

    pub fn value(&self, r: f64) -> Result<DMatrix<Complex64>> {
        self.derivative(r, 0)
    }
}

/// Ordered chain: `M` singular links followed by `N - M` regular links over
/// a block-diagonal background `V0 = diag(v_1, ..., v_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    n: usize,
    m: usize,
    links: Vec<TransformationMatrix>,
    background: Vec<ChannelPotential>,
}

impl ChainSpec {
    pub fn new(m: usize, links: Vec<TransformationMatrix>, background: Vec<ChannelPotential>) -> Result<Self> {
        let n = background.len();
        if n == 0 {
            return Err(Error::Chain("background must have at least one channel".into()));
        }
        if m == 0 || m > n {
            return Err(Error::Chain(format!("subsystem size m = {m} must satisfy 1 <= m <= n = {n}")));
        }
        if links.is_empty() {
            return Err(Error::Chain("chain needs at least one link".into()));
        }
        let mut seen_regular = false;
        for (idx, link) in links.iter().enumerate() {
            if link.dim() != n {
                return Err(Error::Chain(format!("link {} is {}x{}, background has {n} channels", idx + 1, link.dim(), link.dim())));
            }
            match link.kind() {
                LinkKind::Singular { m: lm } => {
                    if seen_regular {
                        return Err(Error::Chain(format!(
                            "link {} is singular but follows a regular link; singular links must come first",
                            idx + 1
                        )));
                    }
                    if lm != m {
                        return Err(Error::Chain(format!("link {} acts on {lm} channels, chain has m = {m}", idx + 1)));
                    }
                }
                LinkKind::Regular => seen_regular = true,
            }
            for i in 0..n {
                for j in 0..n {
                    if let Entry::Sum(terms) = link.entry(i, j) {
                        for (_, b) in terms {
                            if b.channel() != &background[i] {
                                return Err(Error::Chain(format!(
                                    "link {} entry ({i},{j}) solves {:?}, row channel is {:?}",
                                    idx + 1,
                                    b.channel(),
                                    background[i]
                                )));
                            }
                        }
                    }
                }
            }
        }
        for a in 0..links.len() {
            for b in a + 1..links.len() {
                let (la, lb) = (links[a].lambda(), links[b].lambda());
                if (la - lb).norm() <= 1e-12 * la.norm().max(lb.norm()).max(1.0) {
                    return Err(Error::Chain(format!(
                        "links {} and {} share the spectral value {la}",
                        a + 1,
                        b + 1
                    )));
                }
            }
        }
        Ok(Self { n, m, links, background })
    }

    pub fn channels(&self) -> usize {
        self.n
    }

    pub fn subsystem(&self) -> usize {
        self.m
    }

    /// `N`
    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// `M`
    pub fn singular_count(&self) -> usize {
        self.links.iter().filter(|l| l.is_singular()).count()
    }

    pub fn links(&self) -> &[TransformationMatrix] {
        &self.links
    }

    pub fn background(&self) -> &[ChannelPotential] {
        &self.background
    }

    /// Chain made of the first `len` links.
    pub fn prefix(&self, len: usize) -> Result<Self> {
        Self::new(self.m, self.links[..len.min(self.links.len())].to_vec(), self.background.clone())
    }

    pub fn background_matrix(&self, r: f64) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| if i == j { self.background[i].value(r) } else { 0.0 })
    }

    /// Highest derivative every link can supply.
    pub fn max_order(&self) -> usize {
        self.links.iter().map(TransformationMatrix::max_order).min().unwrap_or(usize::MAX)
    }
}
