use sigloc_core::invariants::{self, WeakPlan, WeakRunConfig};
use sigloc_core::lattice::Boundary;
use sigloc_core::linalg::hermitian_eigenvalues;
use sigloc_core::models::{Family, ModelSpec};

fn config(t_perp: f64, w: f64) -> WeakRunConfig {
    WeakRunConfig {
        spec: ModelSpec::new(Family::StackedChiral2d, 0.5).with_t_perp(t_perp).with_disorder(w),
        n: 1,
        kappa: 0.05,
        radius: 6.5,
        volumes: vec![2, 4, 6],
        boundary: Boundary::Periodic,
        samples: 3,
        seed: 11,
    }
}

#[test]
fn decoupled_stack_is_volume_independent() {
    let r = invariants::trace_per_volume_signature(&config(0.0, 0.0)).unwrap();
    let first = r.volumes[0].mean;
    assert!(r.volumes.iter().all(|v| v.mean == first));
    assert_eq!(r.invariant, 1);
    assert_eq!(r.distance_to_integer, 0.0);
}

#[test]
fn decoupled_spectrum_is_layer_spectrum_repeated() {
    // without coupling each transverse site carries one chain
    let c = config(0.0, 0.0);
    let layers = invariants::weak_localizer(&c, 3, 0).unwrap();
    let chain = invariants::weak_localizer(&WeakRunConfig { volumes: vec![1], ..c.clone() }, 1, 0).unwrap();
    let mut expect: Vec<f64> = hermitian_eigenvalues(&chain.reduced.matrix().to_dense()).into_iter().flat_map(|v| [v; 3]).collect();
    expect.sort_by(f64::total_cmp);
    let got = hermitian_eigenvalues(&layers.reduced.matrix().to_dense());
    for (a, b) in got.iter().zip(&expect) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn identical_config_is_bit_identical() {
    let c = config(0.2, 0.3);
    let a = invariants::trace_per_volume_signature(&c).unwrap();
    let b = invariants::trace_per_volume_signature(&c).unwrap();
    assert_eq!(a, b);
}

#[test]
fn merge_is_order_independent() {
    let plan = WeakPlan::new(&config(0.2, 0.3)).unwrap();
    let mut samples: Vec<_> = plan.jobs.iter().map(|&j| plan.run(j).unwrap()).collect();
    let forward = plan.finish(samples.clone()).unwrap();
    samples.reverse();
    assert_eq!(plan.finish(samples).unwrap(), forward);
}

#[test]
fn samples_only_rescale_existing_entries() {
    let c = config(0.2, 0.3);
    let a = invariants::weak_localizer(&c, 4, 0).unwrap();
    let b = invariants::weak_localizer(&c, 4, 1).unwrap();
    let diff = a.reduced.matrix() - b.reduced.matrix();
    assert!(diff.max_abs() > 0.0);
    let clean = invariants::weak_localizer(&config(0.2, 0.0), 4, 0).unwrap();
    // chiral disorder rescales the existing hopping entries of a, never creates new ones
    for (i, j, v) in diff.triplets() {
        if v.norm() > 0.0 {
            assert!(clean.reduced.matrix().get(i, j).norm() > 0.0, "new entry at ({i}, {j})");
        }
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let mut c = config(0.2, 0.0);
    c.n = 2;
    assert!(c.validate().is_err());
    let mut c = config(0.2, 0.0);
    c.radius = 6.0;
    assert!(c.validate().is_err());
    let mut c = config(0.2, 0.0);
    c.volumes = vec![4, 2];
    assert!(c.validate().is_err());
}
