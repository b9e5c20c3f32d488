use crate::BoundingBox;

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Range of tree positions (into [`ClusterTree::perm`]).
    pub start: usize,
    pub end: usize,
    pub bbox: BoundingBox,
    pub level: usize,
    pub children: Option<[usize; 2]>,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

/// Geometrically balanced binary cluster tree.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterTree {
    nodes: Vec<Cluster>,
    perm: Vec<usize>,
    n_min: usize,
}

impl ClusterTree {
    /// Bisects the bounding box of all `boxes` across its longest extent,
    /// assigning indices by box centre, until clusters hold at most `n_min`
    /// indices. If the cut leaves one side empty the cluster is split at the
    /// median centre instead.
    pub fn build(boxes: &[BoundingBox], n_min: usize) -> Self {
        assert!(!boxes.is_empty(), "cluster tree needs at least one index");
        let n_min = n_min.max(1);
        let mut tree = Self {
            nodes: Vec::new(),
            perm: (0..boxes.len()).collect(),
            n_min,
        };
        tree.split(boxes, 0, boxes.len(), 0);
        tree
    }

    fn split(&mut self, boxes: &[BoundingBox], start: usize, end: usize, level: usize) -> usize {
        let bbox = self.perm[start..end]
            .iter()
            .fold(BoundingBox::empty(), |b, &i| b.union(&boxes[i]));
        let id = self.nodes.len();
        self.nodes.push(Cluster {
            start,
            end,
            bbox,
            level,
            children: None,
        });
        if end - start <= self.n_min {
            return id;
        }
        let axis = bbox.longest_axis();
        let cut = bbox.center()[axis];
        let key = |i: usize| boxes[i].center()[axis];
        let (mut left, mut right): (Vec<usize>, Vec<usize>) =
            self.perm[start..end].iter().partition(|&&i| key(i) < cut);
        if left.is_empty() || right.is_empty() {
            let mut all = self.perm[start..end].to_vec();
            all.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
            right = all.split_off(all.len() / 2);
            left = all;
        }
        let mid = start + left.len();
        self.perm[start..mid].copy_from_slice(&left);
        self.perm[mid..end].copy_from_slice(&right);
        let a = self.split(boxes, start, mid, level + 1);
        let b = self.split(boxes, mid, end, level + 1);
        self.nodes[id].children = Some([a, b]);
        id
    }

    /// Same partition with boxes minimised over a different box set, e.g.
    /// basis supports instead of collocation points.
    pub fn rebox(&self, boxes: &[BoundingBox]) -> Self {
        assert_eq!(boxes.len(), self.perm.len());
        let mut out = self.clone();
        for c in &mut out.nodes {
            c.bbox = self.perm[c.start..c.end]
                .iter()
                .fold(BoundingBox::empty(), |b, &i| b.union(&boxes[i]));
        }
        out
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn node(&self, id: usize) -> &Cluster {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Cluster] {
        &self.nodes
    }

    /// Tree position to original index.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn indices(&self, id: usize) -> &[usize] {
        let c = &self.nodes[id];
        &self.perm[c.start..c.end]
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn n_min(&self) -> usize {
        self.n_min
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].is_leaf()).collect()
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|c| c.level).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_points_on_a_line() {
        let boxes: Vec<_> = (0..8).map(|i| BoundingBox::point([i as f64, 0.0])).collect();
        let t = ClusterTree::build(&boxes, 2);
        assert_eq!(t.depth(), 2);
        let leaves = t.leaves();
        assert_eq!(leaves.len(), 4);
        for l in leaves {
            assert_eq!(t.node(l).len(), 2);
        }
        assert_eq!(t.nodes().len(), 7);
    }

    #[test]
    fn large_leaf_size_gives_single_root() {
        let boxes: Vec<_> = (0..5).map(|i| BoundingBox::point([0.0, i as f64])).collect();
        let t = ClusterTree::build(&boxes, 5);
        assert_eq!(t.nodes().len(), 1);
        assert!(t.node(0).is_leaf());
    }

    #[test]
    fn coincident_points_still_split() {
        let boxes = vec![BoundingBox::point([1.0, 1.0]); 6];
        let t = ClusterTree::build(&boxes, 2);
        assert!(t.leaves().iter().all(|&l| t.node(l).len() <= 2));
    }
}
