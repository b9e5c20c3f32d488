use crate::{admissible, ClusterTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    /// Far field, stored low-rank.
    Admissible,
    /// Near field, stored dense.
    Inadmissible,
    Split,
}

/// How the descent proceeds once one of the two clusters is a leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subdivision {
    /// Stop: the block becomes a near-field leaf.
    Balanced,
    /// The leaf cluster stalls while the other one keeps splitting.
    Stall,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockNode {
    pub row: usize,
    pub col: usize,
    pub kind: BlockKind,
    /// Row-major children, `child_rows × child_cols` of them.
    pub children: Vec<usize>,
    pub child_rows: usize,
    pub child_cols: usize,
}

/// Quad-tree of blocks `t × s` over a row and a column cluster tree.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTree {
    nodes: Vec<BlockNode>,
    eta: f64,
}

impl BlockTree {
    pub fn build(rows: &ClusterTree, cols: &ClusterTree, eta: f64, mode: Subdivision) -> Self {
        let mut tree = Self { nodes: Vec::new(), eta };
        tree.descend(rows, cols, rows.root(), cols.root(), mode);
        tree
    }

    fn descend(&mut self, rows: &ClusterTree, cols: &ClusterTree, t: usize, s: usize, mode: Subdivision) -> usize {
        let (ct, cs) = (rows.node(t), cols.node(s));
        let id = self.nodes.len();
        let leaf = |kind| BlockNode {
            row: t,
            col: s,
            kind,
            children: Vec::new(),
            child_rows: 0,
            child_cols: 0,
        };
        if admissible(&ct.bbox, &cs.bbox, self.eta) {
            self.nodes.push(leaf(BlockKind::Admissible));
            return id;
        }
        let stop = match mode {
            Subdivision::Balanced => ct.is_leaf() || cs.is_leaf(),
            Subdivision::Stall => ct.is_leaf() && cs.is_leaf(),
        };
        if stop {
            self.nodes.push(leaf(BlockKind::Inadmissible));
            return id;
        }
        let rt: Vec<usize> = ct.children.map_or(vec![t], |c| c.to_vec());
        let rs: Vec<usize> = cs.children.map_or(vec![s], |c| c.to_vec());
        self.nodes.push(BlockNode {
            row: t,
            col: s,
            kind: BlockKind::Split,
            children: Vec::new(),
            child_rows: rt.len(),
            child_cols: rs.len(),
        });
        let mut children = Vec::with_capacity(rt.len() * rs.len());
        for &a in &rt {
            for &b in &rs {
                children.push(self.descend(rows, cols, a, b, mode));
            }
        }
        self.nodes[id].children = children;
        id
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn node(&self, id: usize) -> &BlockNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[BlockNode] {
        &self.nodes
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn leaves(&self) -> impl Iterator<Item = &BlockNode> {
        self.nodes.iter().filter(|b| b.kind != BlockKind::Split)
    }

    /// Number of matrix entries covered by near-field leaves.
    pub fn near_field_area(&self, rows: &ClusterTree, cols: &ClusterTree) -> usize {
        self.leaves()
            .filter(|b| b.kind == BlockKind::Inadmissible)
            .map(|b| rows.node(b.row).len() * cols.node(b.col).len())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::BoundingBox;

    fn line(n: usize) -> ClusterTree {
        let boxes: Vec<_> = (0..n).map(|i| BoundingBox::point([i as f64, 0.0])).collect();
        ClusterTree::build(&boxes, 2)
    }

    #[test]
    fn diagonal_is_near_field() {
        let t = line(16);
        let b = BlockTree::build(&t, &t, 1.0, Subdivision::Balanced);
        for leaf in b.leaves() {
            if leaf.row == leaf.col {
                assert_eq!(leaf.kind, BlockKind::Inadmissible);
            }
        }
        assert!(b.leaves().any(|l| l.kind == BlockKind::Admissible));
    }

    #[test]
    fn stalling_splits_only_the_larger_side() {
        let rows = line(2);
        let cols = line(32);
        let b = BlockTree::build(&rows, &cols, 1.0, Subdivision::Stall);
        let root = b.node(b.root());
        assert_eq!(root.kind, BlockKind::Split);
        assert_eq!((root.child_rows, root.child_cols), (1, 2));
    }
}
