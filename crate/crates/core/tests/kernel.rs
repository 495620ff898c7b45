//! Kernel checks against independent routes: an explicit Kronecker-product
//! unitary, two-state overlaps, eigen-decomposition and finite differences.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use qklstm_core::kernel::{self, FeatureMapParams};
use qklstm_core::rng::{seeded, ChaCha8Rng};
use qklstm_core::Matrix;
use rand::Rng;

type CMat = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn single(n: usize, q: usize, g: [[Complex64; 2]; 2]) -> CMat {
    let g = CMat::from_row_slice(2, 2, &[g[0][0], g[0][1], g[1][0], g[1][1]]);
    let mut out = CMat::identity(1, 1);
    for k in 0..n {
        let factor = if k == q { g.clone() } else { CMat::identity(2, 2) };
        out = out.kronecker(&factor);
    }
    out
}

fn cnot(n: usize, control: usize, target: usize) -> CMat {
    let dim = 1 << n;
    let mut m = CMat::zeros(dim, dim);
    for i in 0..dim {
        let cbit = (i >> (n - 1 - control)) & 1;
        let j = if cbit == 1 { i ^ (1 << (n - 1 - target)) } else { i };
        m[(j, i)] = c(1.0, 0.0);
    }
    m
}

/// Dense matrix of the feature-map circuit for the given angles.
fn feature_unitary(n: usize, angles: &[f64]) -> CMat {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let h = [[c(r, 0.0), c(r, 0.0)], [c(r, 0.0), c(-r, 0.0)]];
    let mut u = CMat::identity(1 << n, 1 << n);
    for q in 0..n {
        u = single(n, q, h) * u;
    }
    for q in 0..n {
        let (t, p) = (angles[2 * q], angles[2 * q + 1]);
        let ry = [[c((t / 2.0).cos(), 0.0), c(-(t / 2.0).sin(), 0.0)], [c((t / 2.0).sin(), 0.0), c((t / 2.0).cos(), 0.0)]];
        let rz = [[Complex64::from_polar(1.0, -p / 2.0), c(0.0, 0.0)], [c(0.0, 0.0), Complex64::from_polar(1.0, p / 2.0)]];
        u = single(n, q, ry) * u;
        u = single(n, q, rz) * u;
    }
    for q in 0..n.saturating_sub(1) {
        u = cnot(n, q, q + 1) * u;
    }
    u
}

fn dense_kernel(n: usize, a: &[f64], b: &[f64]) -> f64 {
    let ua = feature_unitary(n, a);
    let ub = feature_unitary(n, b);
    let amp = (ub.adjoint() * ua)[(0, 0)];
    amp.norm_sqr()
}

fn rand_vec(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(-scale..scale)).collect()
}

/// Projection with entries of order one so the kernel takes a spread of values.
fn wide_params(rng: &mut ChaCha8Rng, n: usize, d: usize) -> FeatureMapParams {
    FeatureMapParams::new(n, Matrix::from_fn(2 * n, d, |_, _| rng.gen_range(-1.0..1.0))).unwrap()
}

#[test]
fn circuit_matches_dense_unitary_oracle() {
    let mut rng = seeded(11);
    for n in 1..=4 {
        for _ in 0..10 {
            let a = rand_vec(&mut rng, 2 * n, 3.0);
            let b = rand_vec(&mut rng, 2 * n, 3.0);
            let fast = kernel::kernel_from_angles(n, &a, &b).unwrap();
            assert!((fast - dense_kernel(n, &a, &b)).abs() < 1e-12, "n={n}");
        }
        let angles = rand_vec(&mut rng, 2 * n, 3.0);
        let mut state = qklstm_core::sim::zero_state(n).unwrap();
        kernel::apply_feature_map(&mut state, &angles).unwrap();
        let dense = feature_unitary(n, &angles).column(0).into_owned();
        for (x, y) in state.amplitudes().iter().zip(dense.iter()) {
            assert!((x - y).norm() < 1e-12);
        }
    }
}

#[test]
fn kernel_properties_on_random_pairs() {
    let mut rng = seeded(12);
    let params = wide_params(&mut rng, 4, 14);
    for _ in 0..1000 {
        let a = rand_vec(&mut rng, 14, 1.0);
        let b = rand_vec(&mut rng, 14, 1.0);
        let kab = params.kernel(&a, &b).unwrap();
        let kba = params.kernel(&b, &a).unwrap();
        assert!((0.0..=1.0).contains(&kab));
        assert!((kab - kba).abs() < 1e-12);
        assert!((params.kernel(&a, &a).unwrap() - 1.0).abs() < 1e-10);
        let sa = params.prepare_feature_state(&a).unwrap();
        let sb = params.prepare_feature_state(&b).unwrap();
        assert!((sa.norm_sqr() - 1.0).abs() < 1e-12);
        let two_state = sb.inner_product(&sa).unwrap().norm_sqr();
        assert!((kab - two_state).abs() < 1e-12);
    }
}

#[test]
fn gram_matrices_are_psd_with_unit_diagonal() {
    let mut rng = seeded(13);
    for _ in 0..20 {
        let params = wide_params(&mut rng, 4, 14);
        let vs: Vec<Vec<f64>> = (0..10).map(|_| rand_vec(&mut rng, 14, 1.0)).collect();
        let g = params.gram_matrix(&vs).unwrap();
        let m = DMatrix::from_row_slice(10, 10, g.as_slice());
        for i in 0..10 {
            assert!((m[(i, i)] - 1.0).abs() < 1e-10);
            for j in 0..10 {
                assert!((m[(i, j)] - m[(j, i)]).abs() < 1e-12);
                assert!((m[(i, j)] - params.kernel(&vs[i], &vs[j]).unwrap()).abs() < 1e-12);
            }
        }
        let eig: DVector<f64> = m.symmetric_eigenvalues();
        assert!(eig.min() >= -1e-8, "min eigenvalue {}", eig.min());
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

#[test]
fn kernel_gradients_match_finite_differences() {
    let mut rng = seeded(14);
    let eps = 1e-5;
    for _ in 0..5 {
        let mut params = wide_params(&mut rng, 4, 14);
        let a = rand_vec(&mut rng, 14, 1.0);
        let b = rand_vec(&mut rng, 14, 1.0);
        let g = params.kernel_grad(&a, &b).unwrap();
        for m in 0..14 {
            let (mut ap, mut am) = (a.clone(), a.clone());
            ap[m] += eps;
            am[m] -= eps;
            let fd = (params.kernel(&ap, &b).unwrap() - params.kernel(&am, &b).unwrap()) / (2.0 * eps);
            assert!(rel(g.d_va[m], fd) < 1e-6, "d_va[{m}]");
            let (mut bp, mut bm) = (b.clone(), b.clone());
            bp[m] += eps;
            bm[m] -= eps;
            let fd = (params.kernel(&a, &bp).unwrap() - params.kernel(&a, &bm).unwrap()) / (2.0 * eps);
            assert!(rel(g.d_vb[m], fd) < 1e-6, "d_vb[{m}]");
        }
        for r in 0..8 {
            for col in 0..14 {
                let orig = params.proj.get(r, col);
                params.proj.set(r, col, orig + eps);
                let up = params.kernel(&a, &b).unwrap();
                params.proj.set(r, col, orig - eps);
                let down = params.kernel(&a, &b).unwrap();
                params.proj.set(r, col, orig);
                assert!(rel(g.d_proj.get(r, col), (up - down) / (2.0 * eps)) < 1e-6, "d_proj[{r},{col}]");
            }
        }
    }
}

#[test]
fn shift_difference_without_half_factor_is_off_by_two() {
    // k(+π/2) − k(−π/2) without the ½ is exactly twice the true derivative.
    let mut rng = seeded(15);
    let a = rand_vec(&mut rng, 8, 2.0);
    let b = rand_vec(&mut rng, 8, 2.0);
    let (ga, _) = kernel::angle_gradients(4, &a, &b).unwrap();
    let m = ga.iter().enumerate().max_by(|x, y| x.1.abs().total_cmp(&y.1.abs())).unwrap().0;
    let eps = 1e-5;
    let (mut ap, mut am) = (a.clone(), a.clone());
    ap[m] += eps;
    am[m] -= eps;
    let fd = (kernel::kernel_from_angles(4, &ap, &b).unwrap() - kernel::kernel_from_angles(4, &am, &b).unwrap()) / (2.0 * eps);
    assert!(rel(ga[m], fd) < 1e-6);
    assert!(rel(2.0 * ga[m], fd) > 0.4);
}

#[test]
fn symmetric_perturbation_has_zero_directional_derivative() {
    let mut rng = seeded(16);
    let params = wide_params(&mut rng, 4, 14);
    let v = rand_vec(&mut rng, 14, 1.0);
    let u = rand_vec(&mut rng, 14, 1.0);
    let g = params.kernel_grad(&v, &v).unwrap();
    let analytic: f64 = u.iter().zip(g.d_va.iter().zip(&g.d_vb)).map(|(u, (a, b))| u * (a - b)).sum();
    assert!(analytic.abs() < 1e-12);
    let t = 1e-5;
    let f = |s: f64| {
        let p: Vec<f64> = v.iter().zip(&u).map(|(v, u)| v + s * u).collect();
        let m: Vec<f64> = v.iter().zip(&u).map(|(v, u)| v - s * u).collect();
        params.kernel(&p, &m).unwrap()
    };
    assert!(((f(t) - f(-t)) / (2.0 * t)).abs() < 1e-8);
}

#[test]
fn single_qubit_kernel_matches_dense_oracle() {
    let mut rng = seeded(17);
    for _ in 0..20 {
        let a = rand_vec(&mut rng, 2, 3.0);
        let b = rand_vec(&mut rng, 2, 3.0);
        assert!((kernel::kernel_from_angles(1, &a, &b).unwrap() - dense_kernel(1, &a, &b)).abs() < 1e-12);
    }
}
