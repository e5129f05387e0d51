use sigmalab::lrcontrol::{heat_evolve, SpectralModel};
use sigmalab::spectral::{sphere_modes, torus_modes};

#[test]
fn torus_mode_count_matches_lattice_points() {
    // Gauss circle counts N(r) for r = 0, 1, 2, 5, 10.
    for (r, n) in [(0.0, 1), (1.0, 5), (2.0, 13), (5.0, 81), (10.0, 317)] {
        assert_eq!(torus_modes(r).unwrap().len(), n, "cutoff {r}");
    }
}

#[test]
fn torus_modes_are_sorted_by_eigenvalue() {
    let modes = torus_modes(12.0).unwrap();
    assert!(modes.windows(2).all(|w| w[0].lambda <= w[1].lambda));
}

#[test]
fn sphere_mode_count_and_eigenvalues() {
    let modes = sphere_modes(9).unwrap();
    assert_eq!(modes.len(), 100);
    let top = modes.last().unwrap().lambda;
    assert!((top * top - 90.0).abs() < 1e-12);
}

#[test]
fn negative_cutoff_is_rejected() {
    assert!(torus_modes(-1.0).is_err());
}

#[test]
fn heat_keeps_the_constant_mode() {
    let m = SpectralModel::sphere(4.0).unwrap();
    let mut v = vec![0.0; m.len()];
    v[0] = 3.0;
    let w = heat_evolve(&m, &v, 5.0).unwrap();
    assert_eq!(w[0], 3.0);
    assert!(heat_evolve(&m, &v, -1.0).is_err());
}
