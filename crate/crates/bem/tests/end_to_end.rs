use bem::harness::{
    circle_curves, run_direct_test, run_indirect_test, run_level, tunnel_curves, Backend, StudyConfig, TestKind,
    TestSetting,
};
use bem::quadrature::QuadratureConfig;

fn dense(order: usize, first_level: usize, levels: usize) -> StudyConfig {
    StudyConfig {
        order,
        first_level,
        levels,
        backend: Backend::Dense,
        quadrature: QuadratureConfig::with_eps(1e-12),
        ..StudyConfig::default()
    }
}

#[test]
fn tunnel_neumann_converges() {
    let curves = tunnel_curves().unwrap();
    let setting = TestSetting::tunnel_direct(TestKind::DirectNeumann);
    let report = run_direct_test(&curves, &setting, &dense(2, 2, 3)).unwrap();
    let last = report.records.last().unwrap();
    assert!(last.n > 150, "n = {}", last.n);
    let e = report.errors();
    assert!(e.windows(2).all(|w| w[1] < 0.3 * w[0]), "{e:?}");
    assert!(last.e_rel < 1e-3);
}

#[test]
fn hierarchical_and_dense_levels_agree() {
    let curves = tunnel_curves().unwrap();
    let setting = TestSetting::tunnel_direct(TestKind::DirectNeumann);
    let base = setting.boundary(&curves).unwrap();
    let d = run_level(&base, &setting, &dense(2, 0, 1), 3).unwrap();
    let mut cfg = dense(2, 0, 1);
    cfg.backend = Backend::HMatrix;
    cfg.hmatrix.eps_h = 1e-8;
    cfg.hmatrix.eps_s = 1e-10;
    let h = run_level(&base, &setting, &cfg, 3).unwrap();
    assert_eq!(d.n, h.n);
    assert!(
        (d.e_rel - h.e_rel).abs() <= 1e-3 * d.e_rel,
        "{} vs {}",
        d.e_rel,
        h.e_rel
    );
    assert!(h.iterations.is_some());
}

#[test]
fn indirect_double_layer_on_circle() {
    let curves = circle_curves(1.0).unwrap();
    let setting = TestSetting::circle_indirect(TestKind::IndirectK, 1.0);
    let report = run_indirect_test(&curves, &setting, &dense(2, 1, 4)).unwrap();
    let rate = report.fitted_rate().unwrap();
    assert!(rate > 2.5, "rate {rate}: {:?}", report.errors());
}

#[test]
fn dirichlet_circle_matches_single_patch_rate() {
    let curves = circle_curves(3.0).unwrap();
    let setting = TestSetting::circle_direct(TestKind::DirectDirichlet, 3.0);
    let report = run_direct_test(&curves, &setting, &dense(2, 2, 3)).unwrap();
    let rate = report.fitted_rate().unwrap();
    assert!((rate - 3.0).abs() < 0.5, "rate {rate}");
}
