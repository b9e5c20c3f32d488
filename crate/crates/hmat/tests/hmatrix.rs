use hmat::{
    aca, gmres, BlockKind, BlockSource, BlockTree, BoundingBox, ClusterTree, DenseOracle, DenseSource, GmresConfig,
    HLu, HMatrix, HNode, RkMatrix, Subdivision,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn circle(n: usize, r: f64, phase: f64) -> Vec<[f64; 2]> {
    (0..n)
        .map(|i| {
            let t = phase + 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            [r * t.cos(), r * t.sin()]
        })
        .collect()
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Second-kind log-kernel matrix on the unit circle: well conditioned and
/// asymptotically smooth off the diagonal.
fn log_system(n: usize) -> (Vec<[f64; 2]>, DMatrix<f64>) {
    let x = circle(n, 1.0, 0.1);
    let h = 1.0 / n as f64;
    let m = DMatrix::from_fn(n, n, |i, j| {
        let k = h * (1.0 / (dist(x[i], x[j]) + h)).ln();
        if i == j {
            1.0 + k
        } else {
            k
        }
    });
    (x, m)
}

fn point_tree(x: &[[f64; 2]], n_min: usize) -> ClusterTree {
    let boxes: Vec<_> = x.iter().map(|&p| BoundingBox::point(p)).collect();
    ClusterTree::build(&boxes, n_min)
}

fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

fn svd_rank(m: &DMatrix<f64>, eps: f64) -> usize {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    hmat::truncation_rank(&s, eps)
}

#[test]
fn aca_on_separated_log_block_matches_svd() {
    let xs = circle(64, 1.0, 0.0);
    let ys: Vec<[f64; 2]> = circle(64, 1.0, 0.0).iter().map(|p| [p[0] + 5.0, p[1]]).collect();
    let m = DMatrix::from_fn(64, 64, |i, j| -dist(xs[i], ys[j]).ln());
    let eps = 1e-6;
    let out = aca(&mut DenseOracle(&m), eps);
    assert!(!out.full_rank);
    assert!(
        rel(&out.rk.to_dense(), &m) <= 10.0 * eps,
        "{}",
        rel(&out.rk.to_dense(), &m)
    );
    assert!(out.rk.rank() <= svd_rank(&m, eps) + 5);
    assert_eq!(out.rows_generated, out.rk.rank());
}

#[test]
fn recompression_reveals_true_rank() {
    // Rank-8 factors whose product has rank 3.
    let u = DMatrix::from_fn(20, 3, |i, j| ((i * (j + 1)) as f64).cos());
    let mix = DMatrix::from_fn(3, 8, |i, j| {
        if j < 3 {
            f64::from(u8::from(i == j))
        } else {
            ((i + j) as f64).cos()
        }
    });
    let b = DMatrix::from_fn(15, 8, |i, j| (0.37 * ((i + 1) * (j + 1)) as f64).sin());
    let r = RkMatrix::new(&u * &mix, b);
    let dense = r.to_dense();
    let c = r.recompress(1e-13);
    assert_eq!(c.rank(), 3);
    assert!((c.to_dense() - &dense).norm() <= 1e-12 * dense.norm());
}

#[test]
fn minimal_rank_is_kept() {
    let a = DMatrix::from_fn(10, 2, |i, j| if i == j { 1.0 } else { 0.0 });
    let b = DMatrix::from_fn(10, 2, |i, j| if i == j { [3.0, 1.0][j] } else { 0.0 });
    assert_eq!(RkMatrix::new(a, b).recompress(1e-6).rank(), 2);
}

#[test]
fn near_field_only_matvec_is_exact() {
    let n = 40;
    let m = DMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 13) % 11) as f64 - 5.0);
    let x = circle(n, 1.0, 0.0);
    let t = point_tree(&x, 4);
    let tree = BlockTree::build(&t, &t, 1e-12, Subdivision::Balanced);
    assert!(tree.leaves().all(|l| l.kind == BlockKind::Inadmissible));
    let h = HMatrix::build(&DenseSource(&m), &tree, &t, &t, 1e-6);
    let v: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
    let y = h.matvec(&v).unwrap();
    let d = &m * DVector::from_column_slice(&v);
    for i in 0..n {
        assert!((y[i] - d[i]).abs() <= 1e-14 * d.amax().max(1.0));
    }
    assert_eq!(h.to_dense(), m);
    assert!(h.matvec(&v[1..]).is_err());
}

#[test]
fn identity_matvec() {
    let n = 16;
    let m = DMatrix::<f64>::identity(n, n);
    let t = point_tree(&circle(n, 1.0, 0.0), 2);
    let tree = BlockTree::build(&t, &t, 1.0, Subdivision::Balanced);
    let h = HMatrix::build(&DenseSource(&m), &tree, &t, &t, 1e-8);
    let v: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let y = h.matvec(&v).unwrap();
    for i in 0..n {
        assert!((y[i] - v[i]).abs() < 1e-14);
    }
}

#[test]
fn log_system_compresses_and_multiplies() {
    let (x, m) = log_system(512);
    let t = point_tree(&x, 8);
    let tree = BlockTree::build(&t, &t, 1.0, Subdivision::Balanced);
    let eps = 1e-6;
    let h = HMatrix::build(&DenseSource(&m), &tree, &t, &t, eps);
    assert!(h.compression() > 1.5, "{}", h.compression());
    assert!(rel(&h.to_dense(), &m) < 10.0 * eps);
    for s in 0..5 {
        let v: Vec<f64> = (0..512).map(|i| ((i * (s + 3)) as f64).cos()).collect();
        let y = DVector::from_vec(h.matvec(&v).unwrap());
        let d = &m * DVector::from_vec(v);
        assert!((y - &d).norm() <= 1e-4 * d.norm());
    }
}

#[test]
fn smaller_eta_has_larger_near_field() {
    let x = circle(256, 1.0, 0.0);
    let t = point_tree(&x, 8);
    let a = BlockTree::build(&t, &t, 1.0, Subdivision::Balanced).near_field_area(&t, &t);
    let b = BlockTree::build(&t, &t, 0.5, Subdivision::Balanced).near_field_area(&t, &t);
    assert!(b >= a);
    assert!(a < 256 * 256);
}

#[test]
fn coarsening_merges_globally_low_rank_siblings() {
    let u = DVector::from_fn(8, |i, _| i as f64 + 1.0);
    let v = DVector::from_fn(8, |j, _| 1.0 / (j as f64 + 1.0));
    let piece = |r: usize, c: usize| {
        HNode::LowRank(RkMatrix::new(
            DMatrix::from_column_slice(4, 1, &u.as_slice()[r..r + 4]),
            DMatrix::from_column_slice(4, 1, &v.as_slice()[c..c + 4]),
        ))
    };
    let mut node = HNode::Block {
        rows: vec![4, 4],
        cols: vec![4, 4],
        children: vec![piece(0, 0), piece(0, 4), piece(4, 0), piece(4, 4)],
    };
    let before = node.storage_bytes();
    let dense = node.to_dense();
    node.coarsen(1e-10);
    match &node {
        HNode::LowRank(r) => assert_eq!(r.rank(), 1),
        other => panic!("not merged: {other:?}"),
    }
    assert!(node.storage_bytes() <= before);
    assert!((node.to_dense() - dense).norm() < 1e-12);
}

#[test]
fn coarsening_keeps_small_dense_groups() {
    let d = |s: f64| {
        HNode::Dense(DMatrix::from_fn(2, 2, |i, j| {
            if i == j {
                s
            } else {
                0.1 * (i + 2 * j) as f64
            }
        }))
    };
    let mut node = HNode::Block {
        rows: vec![2, 2],
        cols: vec![2, 2],
        children: vec![d(1.0), d(2.0), d(3.0), d(4.0)],
    };
    node.coarsen(1e-10);
    assert!(matches!(node, HNode::Block { .. }));
}

#[test]
fn coarsening_never_increases_storage() {
    let (x, m) = log_system(256);
    let t = point_tree(&x, 8);
    let tree = BlockTree::build(&t, &t, 1.0, Subdivision::Balanced);
    let mut h = HMatrix::build(&DenseSource(&m), &tree, &t, &t, 1e-6);
    let before = h.storage_bytes();
    h.coarsen(1e-6);
    assert!(h.storage_bytes() <= before);
    assert!(rel(&h.to_dense(), &m) < 1e-4);
}

#[test]
fn lu_of_diagonal_matrix() {
    let n = 20;
    let m = DMatrix::from_fn(n, n, |i, j| if i == j { (i + 1) as f64 } else { 0.0 });
    let t = point_tree(&circle(n, 1.0, 0.0), 4);
    let tree = BlockTree::build(&t, &t, 1.0, Subdivision::Balanced);
    let lu = HLu::new(HMatrix::build(&DenseSource(&m), &tree, &t, &t, 1e-10), 1e-10).unwrap();
    let b: Vec<f64> = (0..n).map(|i| (i + 1) as f64).collect();
    let x = lu.solve(&b).unwrap();
    for xi in x {
        assert!((xi - 1.0).abs() < 1e-14);
    }
}

#[test]
fn lu_of_shifted_near_field_matrix_matches_dense() {
    let n = 64;
    let r = DMatrix::from_fn(n, n, |i, j| (((i * 31 + j * 17) % 23) as f64 - 11.0) / 23.0);
    let m = &r * r.transpose() + DMatrix::identity(n, n) * n as f64;
    let t = point_tree(&circle(n, 1.0, 0.0), 4);
    let tree = BlockTree::build(&t, &t, 1e-12, Subdivision::Balanced);
    let lu = HLu::new(HMatrix::build(&DenseSource(&m), &tree, &t, &t, 1e-12), 1e-14).unwrap();
    let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
    let x = DVector::from_vec(lu.solve(&b).unwrap());
    let oracle = m.clone().lu().solve(&DVector::from_vec(b)).unwrap();
    assert!((x - &oracle).norm() <= 1e-10 * oracle.norm());
}

#[test]
fn lu_of_compressed_log_system_is_accurate() {
    let (x, m) = log_system(400);
    let t = point_tree(&x, 8);
    let tree = BlockTree::build(&t, &t, 1.0, Subdivision::Balanced);
    let lu = HLu::new(HMatrix::build(&DenseSource(&m), &tree, &t, &t, 1e-10), 1e-10).unwrap();
    let b: Vec<f64> = (0..400).map(|i| (i as f64 * 0.05).cos()).collect();
    let xs = DVector::from_vec(lu.solve(&b).unwrap());
    let oracle = m.clone().lu().solve(&DVector::from_vec(b)).unwrap();
    assert!((xs - &oracle).norm() <= 1e-7 * oracle.norm());
}

#[test]
fn singular_leaf_is_reported() {
    let m = DMatrix::<f64>::zeros(4, 4);
    let t = point_tree(&circle(4, 1.0, 0.0), 4);
    let tree = BlockTree::build(&t, &t, 1.0, Subdivision::Balanced);
    assert!(HLu::new(HMatrix::build(&DenseSource(&m), &tree, &t, &t, 1e-8), 1e-8).is_err());
}

#[test]
fn gmres_matches_dense_and_preconditioning_helps() {
    let (x, m) = log_system(512);
    let t = point_tree(&x, 8);
    let tree = BlockTree::build(&t, &t, 1.0, Subdivision::Balanced);
    let eps = 1e-6;
    let h = HMatrix::build(&DenseSource(&m), &tree, &t, &t, eps);
    let b: Vec<f64> = (0..512).map(|i| 1.0 + (i as f64 * 0.01).sin()).collect();
    let cfg = GmresConfig {
        tol: eps,
        max_iter: 500,
    };
    let plain = gmres(&h, None, &b, cfg).unwrap();
    let lu = HLu::new(h.clone(), 1e-1).unwrap();
    let pre = gmres(&h, Some(&lu), &b, cfg).unwrap();
    assert!(pre.iterations < plain.iterations);
    for w in plain.residuals.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12));
    }
    let oracle = m.clone().lu().solve(&DVector::from_column_slice(&b)).unwrap();
    for s in [plain, pre] {
        let d = (DVector::from_vec(s.x) - &oracle).norm() / oracle.norm();
        assert!(d <= 10.0 * (eps + eps), "{d}");
    }
}

/// Two-component kernel with a Kelvin-like structure.
struct Vector2Kernel {
    x: Vec<[f64; 2]>,
}

impl Vector2Kernel {
    fn entry(&self, i: usize, j: usize, a: usize, b: usize) -> f64 {
        let h = 1.0 / self.x.len() as f64;
        let d = [self.x[j][0] - self.x[i][0], self.x[j][1] - self.x[i][1]];
        let r = d[0].hypot(d[1]) + h;
        let delta = if a == b { 1.0 } else { 0.0 };
        let k = h * (delta * (1.0 / r).ln() + d[a] * d[b] / (r * r));
        k + if i == j && a == b { 1.0 } else { 0.0 }
    }
}

impl BlockSource for Vector2Kernel {
    fn components(&self) -> usize {
        2
    }

    fn nrows(&self) -> usize {
        self.x.len()
    }

    fn ncols(&self) -> usize {
        self.x.len()
    }

    fn fill(&self, rows: &[usize], cols: &[usize], out: &mut [f64]) {
        for (r, &i) in rows.iter().enumerate() {
            for (c, &j) in cols.iter().enumerate() {
                for a in 0..2 {
                    for b in 0..2 {
                        out[((r * cols.len() + c) * 2 + a) * 2 + b] = self.entry(i, j, a, b);
                    }
                }
            }
        }
    }
}

#[test]
fn direction_blocks_reproduce_interleaved_matrix() {
    let n = 200;
    let k = Vector2Kernel { x: circle(n, 1.0, 0.3) };
    let t = point_tree(&k.x, 8);
    let tree = BlockTree::build(&t, &t, 1.0, Subdivision::Balanced);
    let eps = 1e-8;
    let h = HMatrix::build(&k, &tree, &t, &t, eps);
    let dense = DMatrix::from_fn(2 * n, 2 * n, |r, c| k.entry(r % n, c % n, r / n, c / n));
    assert!(rel(&h.to_dense(), &dense) < 10.0 * eps);
    assert!(matches!(h.root(), HNode::Block { rows, .. } if rows == &vec![n, n]));
    let lu = HLu::new(h.clone(), 1e-8).unwrap();
    let b: Vec<f64> = (0..2 * n).map(|i| (i as f64).sqrt()).collect();
    let x = DVector::from_vec(lu.solve(&b).unwrap());
    let oracle = dense.lu().solve(&DVector::from_vec(b)).unwrap();
    assert!((x - &oracle).norm() < 1e-5 * oracle.norm());
}

fn points() -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0).prop_map(|(a, b)| [a, b]), 1..300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cluster_tree_partitions_and_contains(x in points(), n_min in 1usize..12) {
        let boxes: Vec<_> = x.iter().map(|&p| BoundingBox::point(p)).collect();
        let t = ClusterTree::build(&boxes, n_min);
        let mut seen = t.perm().to_vec();
        seen.sort();
        prop_assert_eq!(seen, (0..x.len()).collect::<Vec<_>>());
        for c in t.nodes() {
            for &i in &t.perm()[c.start..c.end] {
                prop_assert!(c.bbox.contains(&boxes[i]));
            }
            match c.children {
                Some([a, b]) => {
                    prop_assert_eq!(t.node(a).start, c.start);
                    prop_assert_eq!(t.node(a).end, t.node(b).start);
                    prop_assert_eq!(t.node(b).end, c.end);
                    prop_assert!(!t.node(a).is_empty() && !t.node(b).is_empty());
                }
                None => prop_assert!(c.len() <= n_min),
            }
        }
    }

    #[test]
    fn leaves_cover_every_pair_once(x in points(), y in points(), eta in 0.1f64..=1.0, stall in any::<bool>()) {
        let rows = point_tree(&x, 4);
        let cols = point_tree(&y, 4);
        let mode = if stall { Subdivision::Stall } else { Subdivision::Balanced };
        let tree = BlockTree::build(&rows, &cols, eta, mode);
        let mut hits = vec![0u8; x.len() * y.len()];
        for leaf in tree.leaves() {
            let (ct, cs) = (rows.node(leaf.row), cols.node(leaf.col));
            match leaf.kind {
                BlockKind::Admissible => prop_assert!(hmat::admissible(&ct.bbox, &cs.bbox, eta)),
                _ => prop_assert!(ct.is_leaf() || cs.is_leaf()),
            }
            for &i in rows.indices(leaf.row) {
                for &j in cols.indices(leaf.col) {
                    hits[i * y.len() + j] += 1;
                }
            }
        }
        prop_assert!(hits.iter().all(|&h| h == 1));
    }
}
