use std::sync::OnceLock;

use proptest::prelude::*;
use sdi_core::baa::{baa_image_with, build_gamma, svd_threshold_index, tsvd_invert, GammaMatrix};
use sdi_core::forward::{simulate_born_with, ContrastMap};
use sdi_core::scenario::default_scene_grid;
use sdi_core::{BScan, FrequencySweep, ReconstructionGrid, ScanLine, SoilModel, C64};

fn pipe_gamma() -> &'static GammaMatrix {
    static G: OnceLock<GammaMatrix> = OnceLock::new();
    G.get_or_init(|| {
        build_gamma(
            &default_scene_grid(),
            &ScanLine::reference(),
            &FrequencySweep::reference(),
            &SoilModel::default(),
        )
        .unwrap()
    })
}

/// Small operator for properties that need many evaluations.
fn small_gamma() -> &'static GammaMatrix {
    static G: OnceLock<GammaMatrix> = OnceLock::new();
    G.get_or_init(|| {
        let grid = ReconstructionGrid::new(0.45, 0.75, 0.04, 0.16, 10, 4).unwrap();
        let sweep = FrequencySweep::from_range(2.5e9, 3.5e9, 50e6).unwrap();
        build_gamma(&grid, &ScanLine::reference(), &sweep, &SoilModel::default()).unwrap()
    })
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn residual(gamma: &GammaMatrix, tau: &[C64], e_s: &[C64]) -> f64 {
    let fitted = gamma.apply(tau).unwrap();
    let diff: Vec<C64> = fitted.iter().zip(e_s).map(|(a, b)| a - b).collect();
    norm(&diff) / norm(e_s)
}

fn scan_of(gamma: &GammaMatrix, contrast: &ContrastMap) -> BScan {
    simulate_born_with(gamma.operator(), contrast).unwrap()
}

#[test]
fn single_cells_are_recovered_at_the_knee() {
    let gamma = pipe_gamma();
    let grid = *gamma.operator().grid();
    assert!(gamma.reconstruction_error() <= 1e-8);
    let keep = svd_threshold_index(gamma.singular_values()).unwrap();
    for i in 0..10 {
        let m = (37 * i + 11) % grid.n_cells();
        let (ix, iz) = grid.coords(m);
        let mut contrast = ContrastMap::zeros(grid);
        contrast.set(ix, iz, C64::new(1.0, 0.0));
        let scan = scan_of(gamma, &contrast);
        let image = baa_image_with(gamma, &scan, None).unwrap();
        let peak = image.peak();
        assert_eq!((peak.ix, peak.iz), (ix, iz), "cell {m}");
        let res = residual(gamma, &image.cells(), &scan.to_vector());
        assert!(res <= 0.05, "cell {m}: residual {res} with keep {keep}");
    }
}

#[test]
fn two_equal_cells_give_two_local_maxima() {
    let gamma = pipe_gamma();
    let grid = *gamma.operator().grid();
    let mut contrast = ContrastMap::zeros(grid);
    contrast.set(8, 3, C64::new(1.0, 0.0));
    contrast.set(21, 8, C64::new(1.0, 0.0));
    let image = baa_image_with(gamma, &scan_of(gamma, &contrast), None).unwrap();
    for (ix, iz) in [(8usize, 3usize), (21, 8)] {
        let centre = image.at(ix, iz).norm();
        for (dx, dz) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
            let (nx, nz) = (ix as i64 + dx, iz as i64 + dz);
            assert!(centre > image.at(nx as usize, nz as usize).norm());
        }
    }
}

#[test]
fn kept_modes_are_inverted_exactly() {
    let gamma = small_gamma();
    let svd = gamma.svd();
    let keep = 12;
    let coeffs = [C64::new(1.0, 0.5), C64::new(-0.3, 2.0), C64::new(0.7, -0.1)];
    let m = svd.v.nrows();
    let tau0: Vec<C64> = (0..m)
        .map(|j| coeffs.iter().enumerate().map(|(i, c)| c * svd.v[(j, 3 * i + 1)]).sum())
        .collect();
    let tau = tsvd_invert(gamma, &gamma.apply(&tau0).unwrap(), keep).unwrap();
    let err: Vec<C64> = tau.iter().zip(&tau0).map(|(a, b)| a - b).collect();
    assert!(norm(&err) <= 1e-8 * norm(&tau0));
}

#[test]
fn higher_band_has_no_fewer_significant_modes() {
    let grid = default_scene_grid();
    let line = ScanLine::reference();
    let full = FrequencySweep::reference();
    let soil = SoilModel::default();
    let knee = |start: usize, end: usize| {
        let g = build_gamma(&grid, &line, &full.sub_sweep(start, end).unwrap(), &soil).unwrap();
        svd_threshold_index(g.singular_values()).unwrap()
    };
    // 1.3-2.3 GHz and 2.5-3.5 GHz
    let low = knee(4, 44);
    let high = knee(52, 92);
    assert!(high >= low, "knee {high} (high band) < {low} (low band)");
}

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(r, i)| C64::new(r, i)), len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn residual_never_grows_with_more_modes(e_s in complex_vec(45 * 21)) {
        let gamma = small_gamma();
        let positive = gamma.n_positive();
        let mut last = f64::INFINITY;
        for keep in 1..=positive {
            let r = residual(gamma, &tsvd_invert(gamma, &e_s, keep).unwrap(), &e_s);
            prop_assert!(r <= last + 1e-12, "keep {keep}: {r} > {last}");
            last = r;
        }
    }

    #[test]
    fn consistent_data_is_fitted_at_full_rank(tau0 in complex_vec(40)) {
        let gamma = small_gamma();
        let e_s = gamma.apply(&tau0).unwrap();
        let tau = tsvd_invert(gamma, &e_s, gamma.n_positive()).unwrap();
        prop_assert!(residual(gamma, &tau, &e_s) <= 1e-8);
    }

    #[test]
    fn image_is_linear_in_the_scan(
        t1 in complex_vec(40),
        t2 in complex_vec(40),
        alpha in (-3.0f64..3.0, -3.0f64..3.0),
        beta in (-3.0f64..3.0, -3.0f64..3.0),
    ) {
        let gamma = small_gamma();
        let grid = *gamma.operator().grid();
        let (alpha, beta) = (C64::new(alpha.0, alpha.1), C64::new(beta.0, beta.1));
        let b1 = scan_of(gamma, &ContrastMap::new(grid, t1).unwrap());
        let b2 = scan_of(gamma, &ContrastMap::new(grid, t2).unwrap());
        let combined = b1.with_data(b1.data() * faer::Scale(alpha) + b2.data() * faer::Scale(beta)).unwrap();
        let keep = Some(10);
        let lhs = baa_image_with(gamma, &combined, keep).unwrap().cells();
        let i1 = baa_image_with(gamma, &b1, keep).unwrap().cells();
        let i2 = baa_image_with(gamma, &b2, keep).unwrap().cells();
        let scale = norm(&lhs).max(1.0);
        for m in 0..lhs.len() {
            prop_assert!((lhs[m] - (alpha * i1[m] + beta * i2[m])).norm() <= 1e-9 * scale);
        }
    }
}
