use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::lu::DenseLu;
use crate::{aca, BlockKind, BlockTree, ClusterTree, EntryOracle, HError, RkMatrix};

/// Hierarchical block.
#[derive(Debug, Clone)]
pub enum HNode {
    Dense(DMatrix<f64>),
    LowRank(RkMatrix),
    /// Row-major children; `rows`/`cols` are the child block sizes.
    Block {
        rows: Vec<usize>,
        cols: Vec<usize>,
        children: Vec<HNode>,
    },
    /// Factored diagonal leaf (only inside [`crate::HLu`]).
    Lu(Box<DenseLu>),
}

impl HNode {
    pub(crate) fn placeholder() -> Self {
        HNode::Dense(DMatrix::zeros(0, 0))
    }

    pub fn nrows(&self) -> usize {
        match self {
            HNode::Dense(m) => m.nrows(),
            HNode::LowRank(r) => r.nrows(),
            HNode::Block { rows, .. } => rows.iter().sum(),
            HNode::Lu(f) => f.dim(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            HNode::Dense(m) => m.ncols(),
            HNode::LowRank(r) => r.ncols(),
            HNode::Block { cols, .. } => cols.iter().sum(),
            HNode::Lu(f) => f.dim(),
        }
    }

    pub fn storage_bytes(&self) -> usize {
        match self {
            HNode::Dense(m) => 8 * m.len(),
            HNode::LowRank(r) => r.storage_bytes(),
            HNode::Block { children, .. } => children.iter().map(HNode::storage_bytes).sum(),
            HNode::Lu(f) => 8 * f.dim() * f.dim(),
        }
    }

    pub fn is_leaf(&self) -> bool {
        !matches!(self, HNode::Block { .. })
    }

    /// `y += alpha · M x`.
    pub fn apply(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        match self {
            HNode::Dense(m) => {
                for (j, &xj) in x.iter().enumerate() {
                    let s = alpha * xj;
                    if s != 0.0 {
                        for (yi, mij) in y.iter_mut().zip(m.column(j).iter()) {
                            *yi += s * mij;
                        }
                    }
                }
            }
            HNode::LowRank(r) => r.apply(alpha, x, y),
            HNode::Block { rows, cols, children } => {
                let mut r0 = 0;
                for (bi, &nr) in rows.iter().enumerate() {
                    let mut c0 = 0;
                    for (bj, &nc) in cols.iter().enumerate() {
                        children[bi * cols.len() + bj].apply(alpha, &x[c0..c0 + nc], &mut y[r0..r0 + nr]);
                        c0 += nc;
                    }
                    r0 += nr;
                }
            }
            HNode::Lu(_) => unreachable!("factored leaves are applied through triangular solves"),
        }
    }

    /// `y += alpha · Mᵀ x`.
    pub fn apply_transpose(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        match self {
            HNode::Dense(m) => {
                for (j, yj) in y.iter_mut().enumerate() {
                    *yj += alpha * m.column(j).iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                }
            }
            HNode::LowRank(r) => r.apply_transpose(alpha, x, y),
            HNode::Block { rows, cols, children } => {
                let mut r0 = 0;
                for (bi, &nr) in rows.iter().enumerate() {
                    let mut c0 = 0;
                    for (bj, &nc) in cols.iter().enumerate() {
                        children[bi * cols.len() + bj].apply_transpose(alpha, &x[r0..r0 + nr], &mut y[c0..c0 + nc]);
                        c0 += nc;
                    }
                    r0 += nr;
                }
            }
            HNode::Lu(_) => unreachable!("factored leaves are applied through triangular solves"),
        }
    }

    /// `M · X` for a dense `X`.
    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            HNode::Dense(m) => m * x,
            HNode::LowRank(r) => &r.a * (r.b.transpose() * x),
            _ => {
                let mut out = DMatrix::zeros(self.nrows(), x.ncols());
                for c in 0..x.ncols() {
                    self.apply(1.0, x.column(c).as_slice(), out.column_mut(c).as_mut_slice());
                }
                out
            }
        }
    }

    /// `Mᵀ · X` for a dense `X`.
    pub fn tr_mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            HNode::Dense(m) => m.tr_mul(x),
            HNode::LowRank(r) => &r.b * r.a.tr_mul(x),
            _ => {
                let mut out = DMatrix::zeros(self.ncols(), x.ncols());
                for c in 0..x.ncols() {
                    self.apply_transpose(1.0, x.column(c).as_slice(), out.column_mut(c).as_mut_slice());
                }
                out
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            HNode::Dense(m) => m.clone(),
            HNode::LowRank(r) => r.to_dense(),
            HNode::Block { rows, cols, children } => {
                let mut out = DMatrix::zeros(rows.iter().sum(), cols.iter().sum());
                let mut r0 = 0;
                for (bi, &nr) in rows.iter().enumerate() {
                    let mut c0 = 0;
                    for (bj, &nc) in cols.iter().enumerate() {
                        out.view_mut((r0, c0), (nr, nc))
                            .copy_from(&children[bi * cols.len() + bj].to_dense());
                        c0 += nc;
                    }
                    r0 += nr;
                }
                out
            }
            HNode::Lu(f) => f.reconstruct(),
        }
    }

    /// Leaf statistics: (dense leaves, low-rank leaves, largest rank).
    pub fn leaf_stats(&self) -> (usize, usize, usize) {
        match self {
            HNode::Dense(_) | HNode::Lu(_) => (1, 0, 0),
            HNode::LowRank(r) => (0, 1, r.rank()),
            HNode::Block { children, .. } => children.iter().fold((0, 0, 0), |acc, c| {
                let s = c.leaf_stats();
                (acc.0 + s.0, acc.1 + s.1, acc.2.max(s.2))
            }),
        }
    }

    /// Merges sibling leaves into one low-rank block wherever the
    /// recompressed merge needs no more storage than the siblings.
    pub fn coarsen(&mut self, eps: f64) {
        let HNode::Block { rows, cols, children } = self else {
            return;
        };
        for c in children.iter_mut() {
            c.coarsen(eps);
        }
        if !children
            .iter()
            .all(|c| matches!(c, HNode::Dense(_) | HNode::LowRank(_)))
        {
            return;
        }
        let before: usize = children.iter().map(HNode::storage_bytes).sum();
        let (m, n): (usize, usize) = (rows.iter().sum(), cols.iter().sum());
        let parts: Vec<RkMatrix> = children
            .iter()
            .map(|c| match c {
                HNode::LowRank(r) => r.clone(),
                HNode::Dense(d) => RkMatrix::from_dense(d, eps),
                _ => unreachable!(),
            })
            .collect();
        let k: usize = parts.iter().map(RkMatrix::rank).sum();
        let mut a = DMatrix::zeros(m, k);
        let mut b = DMatrix::zeros(n, k);
        let mut l = 0;
        let mut r0 = 0;
        for (bi, &nr) in rows.iter().enumerate() {
            let mut c0 = 0;
            for (bj, &nc) in cols.iter().enumerate() {
                let p = &parts[bi * cols.len() + bj];
                a.view_mut((r0, l), (nr, p.rank())).copy_from(&p.a);
                b.view_mut((c0, l), (nc, p.rank())).copy_from(&p.b);
                l += p.rank();
                c0 += nc;
            }
            r0 += nr;
        }
        let merged = RkMatrix::new(a, b).recompress(eps);
        if merged.storage_bytes() <= before {
            *self = HNode::LowRank(merged);
        }
    }
}

/// Kernel-matrix entries, possibly vector valued: each (row, column) pair
/// carries a `d × d` block of components.
pub trait BlockSource {
    fn components(&self) -> usize;
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// Writes component `(a, b)` of pair `(rows[r], cols[c])` to
    /// `out[((r * cols.len() + c) * d + a) * d + b]`.
    fn fill(&self, rows: &[usize], cols: &[usize], out: &mut [f64]);
}

/// A scalar matrix as a [`BlockSource`].
pub struct DenseSource<'a>(pub &'a DMatrix<f64>);

impl BlockSource for DenseSource<'_> {
    fn components(&self) -> usize {
        1
    }

    fn nrows(&self) -> usize {
        self.0.nrows()
    }

    fn ncols(&self) -> usize {
        self.0.ncols()
    }

    fn fill(&self, rows: &[usize], cols: &[usize], out: &mut [f64]) {
        for (r, &i) in rows.iter().enumerate() {
            for (c, &j) in cols.iter().enumerate() {
                out[r * cols.len() + c] = self.0[(i, j)];
            }
        }
    }
}

/// Caches full component rows/columns of one admissible block so that the
/// `d²` scalar approximations share kernel evaluations.
struct SharedBlock<'a, S: BlockSource> {
    source: &'a S,
    rows: &'a [usize],
    cols: &'a [usize],
    row_cache: HashMap<usize, Vec<f64>>,
    col_cache: HashMap<usize, Vec<f64>>,
}

struct ComponentOracle<'b, 'a, S: BlockSource> {
    shared: &'b mut SharedBlock<'a, S>,
    a: usize,
    b: usize,
}

impl<S: BlockSource> EntryOracle for ComponentOracle<'_, '_, S> {
    fn nrows(&self) -> usize {
        self.shared.rows.len()
    }

    fn ncols(&self) -> usize {
        self.shared.cols.len()
    }

    fn row(&mut self, i: usize, out: &mut [f64]) {
        let sh = &mut *self.shared;
        let d = sh.source.components();
        let data = sh.row_cache.entry(i).or_insert_with(|| {
            let mut v = vec![0.0; sh.cols.len() * d * d];
            sh.source.fill(&sh.rows[i..=i], sh.cols, &mut v);
            v
        });
        for (c, o) in out.iter_mut().enumerate() {
            *o = data[(c * d + self.a) * d + self.b];
        }
    }

    fn col(&mut self, j: usize, out: &mut [f64]) {
        let sh = &mut *self.shared;
        let d = sh.source.components();
        let data = sh.col_cache.entry(j).or_insert_with(|| {
            let mut v = vec![0.0; sh.rows.len() * d * d];
            sh.source.fill(sh.rows, &sh.cols[j..=j], &mut v);
            v
        });
        for (r, o) in out.iter_mut().enumerate() {
            *o = data[(r * d + self.a) * d + self.b];
        }
    }
}

/// Assembly statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub admissible_blocks: usize,
    pub full_rank_fallbacks: usize,
}

/// H-matrix in the original index ordering. Components are ordered
/// direction-major: global row `a·m + i` is component `a` of row `i`.
#[derive(Debug, Clone)]
pub struct HMatrix {
    root: HNode,
    row_perm: Vec<usize>,
    col_perm: Vec<usize>,
    stats: BuildStats,
}

impl HMatrix {
    /// Assembles `source` on `tree`: near-field leaves densely, far-field
    /// leaves by ACA at `eps` followed by recompression.
    pub fn build<S: BlockSource>(
        source: &S,
        tree: &BlockTree,
        rows: &ClusterTree,
        cols: &ClusterTree,
        eps: f64,
    ) -> Self {
        let d = source.components();
        let mut stats = BuildStats::default();
        let parts = build_node(source, tree, tree.root(), rows, cols, eps, &mut stats);
        let root = if d == 1 {
            parts.into_iter().next().expect("one component")
        } else {
            HNode::Block {
                rows: vec![rows.len(); d],
                cols: vec![cols.len(); d],
                children: parts,
            }
        };
        let expand = |perm: &[usize], n: usize| -> Vec<usize> {
            (0..d).flat_map(|a| perm.iter().map(move |&i| a * n + i)).collect()
        };
        Self {
            root,
            row_perm: expand(rows.perm(), rows.len()),
            col_perm: expand(cols.perm(), cols.len()),
            stats,
        }
    }

    /// Wraps a node given in tree ordering.
    pub fn from_parts(root: HNode, row_perm: Vec<usize>, col_perm: Vec<usize>) -> Self {
        assert_eq!(root.nrows(), row_perm.len());
        assert_eq!(root.ncols(), col_perm.len());
        Self {
            root,
            row_perm,
            col_perm,
            stats: BuildStats::default(),
        }
    }

    pub fn root(&self) -> &HNode {
        &self.root
    }

    pub fn row_perm(&self) -> &[usize] {
        &self.row_perm
    }

    pub fn col_perm(&self) -> &[usize] {
        &self.col_perm
    }

    pub fn stats(&self) -> BuildStats {
        self.stats
    }

    pub fn nrows(&self) -> usize {
        self.row_perm.len()
    }

    pub fn ncols(&self) -> usize {
        self.col_perm.len()
    }

    pub fn storage_bytes(&self) -> usize {
        self.root.storage_bytes()
    }

    pub fn dense_bytes(&self) -> usize {
        8 * self.nrows() * self.ncols()
    }

    /// `c_H = S(M) / S(M_H)`.
    pub fn compression(&self) -> f64 {
        self.dense_bytes() as f64 / self.storage_bytes().max(1) as f64
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, HError> {
        if x.len() != self.ncols() {
            return Err(HError::DimensionMismatch {
                expected: self.ncols(),
                found: x.len(),
            });
        }
        let xt: Vec<f64> = self.col_perm.iter().map(|&j| x[j]).collect();
        let mut yt = vec![0.0; self.nrows()];
        self.root.apply(1.0, &xt, &mut yt);
        let mut y = vec![0.0; self.nrows()];
        for (k, &i) in self.row_perm.iter().enumerate() {
            y[i] = yt[k];
        }
        Ok(y)
    }

    /// Dense copy in the original ordering.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let t = self.root.to_dense();
        let mut out = DMatrix::zeros(self.nrows(), self.ncols());
        for (r, &i) in self.row_perm.iter().enumerate() {
            for (c, &j) in self.col_perm.iter().enumerate() {
                out[(i, j)] = t[(r, c)];
            }
        }
        out
    }

    pub fn coarsen(&mut self, eps: f64) {
        self.root.coarsen(eps);
    }

    pub(crate) fn into_parts(self) -> (HNode, Vec<usize>, Vec<usize>) {
        (self.root, self.row_perm, self.col_perm)
    }
}

fn build_node<S: BlockSource>(
    source: &S,
    tree: &BlockTree,
    id: usize,
    rows: &ClusterTree,
    cols: &ClusterTree,
    eps: f64,
    stats: &mut BuildStats,
) -> Vec<HNode> {
    let d = source.components();
    let node = tree.node(id);
    let (ri, ci) = (rows.indices(node.row), cols.indices(node.col));
    match node.kind {
        BlockKind::Inadmissible => {
            let mut buf = vec![0.0; ri.len() * ci.len() * d * d];
            source.fill(ri, ci, &mut buf);
            (0..d * d)
                .map(|ab| {
                    let (a, b) = (ab / d, ab % d);
                    HNode::Dense(DMatrix::from_fn(ri.len(), ci.len(), |r, c| {
                        buf[((r * ci.len() + c) * d + a) * d + b]
                    }))
                })
                .collect()
        }
        BlockKind::Admissible => {
            stats.admissible_blocks += 1;
            approximate_block(source, ri, ci, eps)
                .into_iter()
                .map(|leaf| match leaf {
                    FarLeaf::LowRank(rk) => HNode::LowRank(rk),
                    FarLeaf::Dense { matrix, full_rank } => {
                        stats.full_rank_fallbacks += usize::from(full_rank);
                        HNode::Dense(matrix)
                    }
                })
                .collect()
        }
        BlockKind::Split => {
            let kids: Vec<Vec<HNode>> = node
                .children
                .iter()
                .map(|&c| build_node(source, tree, c, rows, cols, eps, stats))
                .collect();
            let sizes_r: Vec<usize> = (0..node.child_rows)
                .map(|r| rows.node(tree.node(node.children[r * node.child_cols]).row).len())
                .collect();
            let sizes_c: Vec<usize> = (0..node.child_cols)
                .map(|c| cols.node(tree.node(node.children[c]).col).len())
                .collect();
            let mut per_component: Vec<Vec<HNode>> = (0..d * d).map(|_| Vec::new()).collect();
            for kid in kids {
                for (ab, n) in kid.into_iter().enumerate() {
                    per_component[ab].push(n);
                }
            }
            per_component
                .into_iter()
                .map(|children| HNode::Block {
                    rows: sizes_r.clone(),
                    cols: sizes_c.clone(),
                    children,
                })
                .collect()
        }
    }
}

/// Storage chosen for one component of an admissible block.
#[derive(Debug, Clone, PartialEq)]
pub enum FarLeaf {
    LowRank(RkMatrix),
    /// The approximation needed full rank, or its factors would not be
    /// smaller than the block.
    Dense {
        matrix: DMatrix<f64>,
        full_rank: bool,
    },
}

/// ACA at `eps` plus recompression for every component pair of the block
/// `rows × cols`, sharing kernel evaluations between components.
pub fn approximate_block<S: BlockSource>(source: &S, rows: &[usize], cols: &[usize], eps: f64) -> Vec<FarLeaf> {
    let d = source.components();
    let mut shared = SharedBlock {
        source,
        rows,
        cols,
        row_cache: HashMap::new(),
        col_cache: HashMap::new(),
    };
    (0..d * d)
        .map(|ab| {
            let (a, b) = (ab / d, ab % d);
            let out = aca(
                &mut ComponentOracle {
                    shared: &mut shared,
                    a,
                    b,
                },
                eps,
            );
            let rk = out.rk.recompress(eps);
            if out.full_rank {
                let mut oracle = ComponentOracle {
                    shared: &mut shared,
                    a,
                    b,
                };
                let mut matrix = DMatrix::zeros(rows.len(), cols.len());
                let mut row = vec![0.0; cols.len()];
                for i in 0..rows.len() {
                    oracle.row(i, &mut row);
                    for (j, v) in row.iter().enumerate() {
                        matrix[(i, j)] = *v;
                    }
                }
                FarLeaf::Dense {
                    matrix,
                    full_rank: true,
                }
            } else if rk.storage_bytes() >= 8 * rows.len() * cols.len() {
                FarLeaf::Dense {
                    matrix: rk.to_dense(),
                    full_rank: false,
                }
            } else {
                FarLeaf::LowRank(rk)
            }
        })
        .collect()
}
