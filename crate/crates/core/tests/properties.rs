use bridgelab_core::bridges::{
    bridge_density_ratio, log_bridge_density_radial_limit, log_radial_bridge_density, ou_bridge_density,
    ou_scalar_bridge_density, wiener_bridge_density,
};
use bridgelab_core::linalg::{gramian_vt, matrix_exp};
use bridgelab_core::sample::{ks_two_sample, sample_gaussian_bridge_path, sample_radial_bridge_path};
use bridgelab_core::specfun::bessel_i;
use bridgelab_core::verify::quadrature::integrate_halfline_hinted;
use bridgelab_core::verify::fit_bessel_bounds;
use bridgelab_core::{BesselOrder, BridgeSpec, DiffusionMatrix, ProcessModel, QuadratureConfig, SquareMatrix};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        ((a - b) / b).abs()
    }
}

/// Stable matrix `-(BBᵀ + δI) + K` with `K` skew-symmetric.
fn stable(n: usize, entries: &[f64]) -> SquareMatrix {
    let b = DMatrix::from_fn(n, n, |i, j| entries[i * n + j]);
    let k = DMatrix::from_fn(n, n, |i, j| entries[(n * n + i * n + j) % entries.len()] * 0.5);
    let a = -(&b * b.transpose()) - DMatrix::identity(n, n) * 0.3 + (&k - k.transpose());
    SquareMatrix::new(a).unwrap()
}

fn stable_strategy() -> impl Strategy<Value = SquareMatrix> {
    (2usize..=3).prop_flat_map(|n| prop::collection::vec(-1.0f64..1.0, 2 * n * n).prop_map(move |e| stable(n, &e)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bessel_i_strictly_increasing(nu in -0.5f64..4.0, z in 1e-3f64..200.0, step in 1e-3f64..0.5) {
        let order = BesselOrder::new(nu).unwrap();
        let lo = bessel_i(order, z).unwrap();
        let hi = bessel_i(order, z * (1.0 + step)).unwrap();
        prop_assert!(hi > lo, "nu={nu} z={z}: {lo} !< {hi}");
    }

    #[test]
    fn matrix_exp_semigroup(a in stable_strategy(), s in 0.0f64..2.0, t in 0.0f64..2.0) {
        let lhs = matrix_exp(&a, s + t).unwrap().into_matrix();
        let rhs = matrix_exp(&a, s).unwrap().into_matrix() * matrix_exp(&a, t).unwrap().into_matrix();
        prop_assert!((&lhs - &rhs).norm() <= 1e-11 * lhs.norm().max(1.0));
    }

    #[test]
    fn det_exp_is_exp_trace(a in stable_strategy(), t in -1.5f64..1.5) {
        let det = matrix_exp(&a, t).unwrap().into_matrix().determinant();
        let want = (t * a.as_matrix().trace()).exp();
        prop_assert!(rel(det, want) <= 1e-11);
    }

    #[test]
    fn gramian_is_monotone(a in stable_strategy(), t1 in 0.05f64..2.0, dt in 0.01f64..2.0) {
        let s = DiffusionMatrix::scaled_identity(a.dim(), 1.0);
        let v1 = gramian_vt(&a, &s, t1).unwrap();
        let v2 = gramian_vt(&a, &s, t1 + dt).unwrap();
        let diff = v2.matrix() - v1.matrix();
        let eig = nalgebra::SymmetricEigen::new((&diff + diff.transpose()) * 0.5);
        prop_assert!(eig.eigenvalues.min() >= -1e-12 * v2.matrix().norm());
    }

    #[test]
    fn ou_chain_reduces(d in 1usize..=3, a in -1.5f64..1.0, sigma in 0.3f64..2.0, t in 0.05f64..3.0,
                        x in prop::collection::vec(-2.0f64..2.0, 3), y in prop::collection::vec(-2.0f64..2.0, 3)) {
        let (x, y) = (&x[..d], &y[..d]);
        let scalar = ProcessModel::ou_scalar(a, sigma, d).unwrap().density(t, x, y).unwrap();
        let matrix = ProcessModel::ou_matrix(SquareMatrix::scaled_identity(d, a), DiffusionMatrix::scaled_identity(d, sigma))
            .unwrap()
            .density(t, x, y)
            .unwrap();
        prop_assert!(rel(matrix, scalar) <= 1e-11);
        let w = ProcessModel::wiener(d).unwrap().density(t, x, y).unwrap();
        let o = ProcessModel::ou_scalar(0.0, 1.0, d).unwrap().density(t, x, y).unwrap();
        prop_assert!(rel(o, w) <= 1e-11);
    }

    #[test]
    fn radial_base_normalizes(d in 1usize..=5, a in -1.0f64..0.6, sigma in 0.5f64..1.5, t in 0.05f64..2.0, x in 0.0f64..4.0) {
        let model = ProcessModel::ou_radial(a, sigma, d).unwrap();
        let tau = sigma * sigma * bridgelab_core::kappa(a, t).unwrap();
        let centre = (a * t).exp() * x;
        let i = integrate_halfline_hinted(
            |y| model.density(t, &[x], &[y]).unwrap(),
            &[centre, (centre * centre + d as f64 * tau).sqrt()],
            tau.sqrt(),
            &QuadratureConfig::default(),
        )
        .unwrap();
        prop_assert!((i.value - 1.0).abs() <= 1e-8, "mass {}", i.value);
    }

    #[test]
    fn wiener_sup_on_diagonal(d in 1usize..=4, t in 0.05f64..4.0, x in prop::collection::vec(-3.0f64..3.0, 4),
                              offsets in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 4), 1..20)) {
        let w = ProcessModel::wiener(d).unwrap();
        let x = &x[..d];
        let peak = (2.0 * std::f64::consts::PI * t).powf(-(d as f64) / 2.0);
        prop_assert!(rel(w.density(t, x, x).unwrap(), peak) <= 1e-14);
        for o in &offsets {
            let y: Vec<f64> = x.iter().zip(o).map(|(a, b)| a + b).collect();
            prop_assert!(w.density(t, x, &y).unwrap() <= peak);
        }
    }

    /// `p_t(x, y) / f_t(x, y) = I_ν(z) / g(z)` with `z = xy/t`, so the fitted
    /// constants bound it; a 1% margin covers points between the fitting nodes.
    #[test]
    fn bessel_density_two_sided_bound(d in 1usize..=5, lx in -3.0f64..2.0, ly in -3.0f64..2.0, lt in -2.0f64..1.5) {
        let (x, y, t) = (10f64.powf(lx), 10f64.powf(ly), 10f64.powf(lt));
        let nu = BesselOrder::from_dimension(d).unwrap();
        let fit = fit_bessel_bounds(nu).unwrap();
        let df = d as f64;
        let z = x * y / t;
        let log_f = if z < 1.0 {
            -df / 2.0 * t.ln() + (df - 1.0) * y.ln() - (x * x + y * y) / (2.0 * t)
        } else {
            -0.5 * t.ln() + (df - 1.0) / 2.0 * (y / x).ln() - (x - y) * (x - y) / (2.0 * t)
        };
        let log_p = ProcessModel::bessel(d).unwrap().log_density(t, &[x], &[y]).unwrap();
        let ratio = (log_p - log_f).exp();
        prop_assert!(ratio >= fit.c1 * 0.99 && ratio <= fit.c2 * 1.01, "ratio {ratio} fit {:?}", fit);
    }

    #[test]
    fn ratio_matches_closed_forms(d in 1usize..=3, a in -1.0f64..0.8, sigma in 0.5f64..1.5, big_t in 0.5f64..2.0,
                                  fs in 0.0f64..0.8, ft in 0.05f64..0.95,
                                  x in prop::collection::vec(-1.5f64..1.5, 3), y in prop::collection::vec(-1.5f64..1.5, 3)) {
        let (x, y) = (&x[..d], &y[..d]);
        let s = fs * big_t;
        let t = s + ft * (big_t - s);
        let spec = BridgeSpec::zero(ProcessModel::ou_scalar(a, sigma, d).unwrap(), big_t).unwrap();
        let ratio = bridge_density_ratio(&spec, s, t, x, y).unwrap();
        prop_assert!(rel(ratio, ou_scalar_bridge_density(a, sigma, d, big_t, s, t, x, y).unwrap()) <= 1e-10);
        let m = ou_bridge_density(&SquareMatrix::scaled_identity(d, a), &DiffusionMatrix::scaled_identity(d, sigma), big_t, s, t, x, y).unwrap();
        prop_assert!(rel(m, ratio) <= 1e-10);
        let wspec = BridgeSpec::zero(ProcessModel::wiener(d).unwrap(), big_t).unwrap();
        prop_assert!(rel(bridge_density_ratio(&wspec, s, t, x, y).unwrap(), wiener_bridge_density(d, big_t, s, t, x, y).unwrap()) <= 1e-10);
    }

    #[test]
    fn commutation_pointwise(d in 1usize..=4, a in -1.0f64..0.8, sigma in 0.5f64..1.5, big_t in 0.5f64..2.0,
                             fs in 0.0f64..0.9, ft in 0.01f64..0.99, x in 0.0f64..5.0, y in 0.0f64..5.0) {
        let s = fs * big_t;
        let t = s + ft * (big_t - s);
        let spec = BridgeSpec::zero(ProcessModel::ou_radial(a, sigma, d).unwrap(), big_t).unwrap();
        let limit = log_bridge_density_radial_limit(&spec, s, t, x, y).unwrap();
        let closed = log_radial_bridge_density(a, sigma, d, big_t, s, t, x, y).unwrap();
        if limit.exp() > 1e-300 && closed.exp() > 1e-300 {
            prop_assert!(rel(limit.exp(), closed.exp()) <= 1e-10);
        }
    }

    #[test]
    fn gaussian_paths_are_pinned(d in 1usize..=3, steps in 1usize..30, seed in any::<u64>(), a in -1.0f64..0.5) {
        let spec = BridgeSpec::zero(ProcessModel::ou_scalar(a, 1.0, d).unwrap(), 1.0).unwrap();
        let grid = bridgelab_core::sample::uniform_grid(1.0, steps).unwrap();
        let p = sample_gaussian_bridge_path(&spec, &grid, seed).unwrap();
        prop_assert_eq!(&p.states[0], &vec![0.0; d]);
        prop_assert_eq!(&p.states[steps], &vec![0.0; d]);
        prop_assert_eq!(p, sample_gaussian_bridge_path(&spec, &grid, seed).unwrap());
    }

    #[test]
    fn ks_is_symmetric_and_deterministic(xs in prop::collection::vec(-5.0f64..5.0, 100..300),
                                         ys in prop::collection::vec(-5.0f64..5.0, 100..300)) {
        let a = ks_two_sample(&xs, &ys).unwrap();
        let b = ks_two_sample(&ys, &xs).unwrap();
        prop_assert_eq!(a.statistic, b.statistic);
        prop_assert_eq!(a.p_value_bound, b.p_value_bound);
        prop_assert_eq!(a, ks_two_sample(&xs, &ys).unwrap());
        prop_assert!((0.0..=1.0).contains(&a.statistic));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn radial_paths_are_pinned_and_nonnegative(d in 1usize..=4, steps in 1usize..6, seed in any::<u64>()) {
        let spec = BridgeSpec::zero(ProcessModel::bessel(d).unwrap(), 1.0).unwrap();
        let grid = bridgelab_core::sample::uniform_grid(1.0, steps).unwrap();
        let p = sample_radial_bridge_path(&spec, &grid, seed).unwrap();
        prop_assert_eq!(&p.states[0], &vec![0.0]);
        prop_assert_eq!(&p.states[steps], &vec![0.0]);
        prop_assert!(p.states.iter().all(|x| x[0] >= 0.0));
    }
}

#[test]
fn radial_densities_bounded_on_expanding_grid() {
    for d in 1..=5 {
        let model = ProcessModel::bessel(d).unwrap();
        let mut sup: f64 = 0.0;
        for k in 0..=60 {
            let x = 1e-3 * 1.25f64.powi(k);
            for j in 0..=60 {
                let y = 1e-3 * 1.25f64.powi(j);
                sup = sup.max(model.density(1.0, &[x], &[y]).unwrap());
            }
        }
        assert!(sup.is_finite() && sup > 0.0, "d={d}");
        assert!(sup < 2.0, "d={d} sup={sup}");
    }
}

#[test]
fn bridge_pins_endpoint() {
    let quad = QuadratureConfig::default();
    let big_t = 1.0;
    for model in [ProcessModel::wiener(1).unwrap(), ProcessModel::ou_scalar(-1.0, 1.0, 1).unwrap()] {
        let spec = BridgeSpec::zero(model, big_t).unwrap();
        for delta in [0.1, 0.01] {
            let mut prev = 0.0;
            for frac in [0.9, 0.99, 0.999] {
                let t = frac * big_t;
                let f = |y: f64| bridge_density_ratio(&spec, 0.0, t, &[0.5], &[y]).unwrap();
                let mass = bridgelab_core::verify::quadrature::integrate(f, -delta, delta, &quad).unwrap().value;
                assert!(mass > prev, "delta={delta} t={t}");
                prev = mass;
            }
            if delta == 0.1 {
                assert!(prev > 0.99, "mass {prev}");
            }
        }
    }
    for d in [2, 3] {
        let spec = BridgeSpec::zero(ProcessModel::bessel(d).unwrap(), big_t).unwrap();
        for delta in [0.1, 0.01] {
            let mut prev = 0.0;
            for frac in [0.9, 0.99, 0.999] {
                let t = frac * big_t;
                let f = |y: f64| log_bridge_density_radial_limit(&spec, 0.0, t, 0.5, y).unwrap().exp();
                let mass = bridgelab_core::verify::quadrature::integrate(f, 0.0, delta, &quad).unwrap().value;
                assert!(mass > prev, "d={d} delta={delta} t={t}");
                prev = mass;
            }
        }
    }
}
