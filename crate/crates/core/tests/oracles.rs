//! Dense reference computations checked against the factored code paths.

use lowrank_kmeans::baselines::{kmeans_rows, spectral_embedding, KMeansOptions};
use lowrank_kmeans::bm::{extract_labels, lagrangian_value, SolverState};
use lowrank_kmeans::gmm::sample;
use lowrank_kmeans::gram::GramOperator;
use lowrank_kmeans::metrics::misclustering_error;
use lowrank_kmeans::model::{ideal_factor, DataMatrix, FactorMatrix, GmmSpec, Labeling};
use lowrank_kmeans::rng::seeded;
use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn to_dense(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

fn random_data(p: usize, n: usize, rng: &mut impl Rng) -> DataMatrix {
    DataMatrix::new(Array2::from_shape_fn((p, n), |_| StandardNormal.sample(rng))).unwrap()
}

#[test]
fn gram_operator_matches_dense_product() {
    let mut rng = seeded(1);
    for _ in 0..20 {
        let (p, n, r) = (rng.random_range(1..6), rng.random_range(2..30), rng.random_range(1..5));
        let x = random_data(p, n, &mut rng);
        let u = Array2::from_shape_fn((n, r), |_| rng.random::<f64>());
        let op = GramOperator::new(&x);
        let xd = to_dense(x.values());
        let ud = to_dense(&u);
        let gram = xd.transpose() * &xd;
        let au = -(&gram * &ud);
        let got = op.apply(u.view()).unwrap();
        for ((i, j), v) in got.indexed_iter() {
            assert!((v - au[(i, j)]).abs() <= 1e-10 * (1.0 + au[(i, j)].abs()));
        }
        let z = &ud * ud.transpose();
        let inner: f64 = -gram.component_mul(&z).sum();
        let q = op.quadratic_form(u.view()).unwrap();
        assert!((q - inner).abs() <= 1e-10 * (1.0 + inner.abs()));
    }
}

#[test]
fn lagrangian_matches_dense_formula() {
    let mut rng = seeded(2);
    for _ in 0..20 {
        let (p, n, r) = (rng.random_range(1..5), rng.random_range(2..12), rng.random_range(1..4));
        let x = random_data(p, n, &mut rng);
        let u = Array2::from_shape_fn((n, r), |_| rng.random::<f64>());
        let y = Array1::from_shape_fn(n, |_| rng.random_range(-2.0..2.0));
        let (beta, shift) = (rng.random_range(0.0..4.0), rng.random_range(0.0..4.0));

        let xd = to_dense(x.values());
        let ud = to_dense(&u);
        let z = &ud * ud.transpose();
        let res: Vec<f64> = (0..n).map(|i| z.row(i).sum() - 1.0).collect();
        let expected = -(xd.transpose() * &xd).component_mul(&z).sum()
            + shift * z.trace()
            + res.iter().zip(y.iter()).map(|(a, b)| a * b).sum::<f64>()
            + 0.5 * beta * res.iter().map(|v| v * v).sum::<f64>();

        let state = SolverState::new(FactorMatrix::unprojected(u), y, beta).unwrap();
        let got = lagrangian_value(&state, &GramOperator::new(&x), shift).unwrap();
        assert!((got - expected).abs() <= 1e-9 * (1.0 + expected.abs()), "{got} vs {expected}");
    }
}

#[test]
fn spectral_subspace_matches_dense_eigenvectors() {
    for seed in 0..5 {
        let spec = GmmSpec::balanced(48, 6, 3, 1.0, 4.0).unwrap();
        let s = sample(&spec, seed, true).unwrap();
        let emb = spectral_embedding(&s.data, 3, seed).unwrap();

        let xd = to_dense(s.data.values());
        let eig = SymmetricEigen::new(xd.transpose() * &xd);
        let mut order: Vec<usize> = (0..48).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let top = DMatrix::from_fn(48, 3, |i, j| eig.eigenvectors[(i, order[j])]);

        for j in 0..3 {
            let want = eig.eigenvalues[order[j]];
            assert!((emb.values[j] - want).abs() <= 1e-8 * want, "{} vs {want}", emb.values[j]);
        }
        // Compare orthogonal projectors, which ignores sign and rotation.
        let v = to_dense(&emb.vectors);
        let gap = (&v * v.transpose() - &top * top.transpose()).norm();
        assert!(gap < 1e-8, "seed {seed}: projector gap {gap}");
    }
}

#[test]
fn ideal_factor_labels_round_trip() {
    let mut rng = seeded(3);
    for _ in 0..20 {
        let k = rng.random_range(1..6);
        let n = rng.random_range(k..60);
        let labels: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
        let truth = Labeling::new(labels, k).unwrap();
        let r = k + rng.random_range(0..4);
        let u = ideal_factor(&truth, r).unwrap();
        let est = extract_labels(&u, k, 0).unwrap();
        assert_eq!(misclustering_error(&est, &truth).unwrap(), 0.0);
    }
}

#[test]
fn lloyd_reaches_the_exhaustive_optimum_on_tiny_sets() {
    let mut rng = seeded(4);
    for _ in 0..10 {
        let n = 9;
        let pts: Array2<f64> = Array2::from_shape_fn((n, 2), |_| StandardNormal.sample(&mut rng));
        let cost = |assign: &[usize]| -> f64 {
            (0..2)
                .map(|c| {
                    let members: Vec<usize> = (0..n).filter(|&i| assign[i] == c).collect();
                    if members.is_empty() {
                        return 0.0;
                    }
                    let m: Vec<f64> = (0..2).map(|d: usize| members.iter().map(|&i| pts[[i, d]]).sum::<f64>() / members.len() as f64).collect();
                    members.iter().map(|&i| (0..2).map(|d: usize| (pts[[i, d]] - m[d]).powi(2)).sum::<f64>()).sum()
                })
                .sum()
        };
        let best = (0..1u32 << n)
            .map(|mask| cost(&(0..n).map(|i| ((mask >> i) & 1) as usize).collect::<Vec<_>>()))
            .fold(f64::INFINITY, f64::min);
        let fit = kmeans_rows(pts.view(), &KMeansOptions { k: 2, restarts: 10, max_iter: 100, seed: 0 }).unwrap();
        assert!(fit.objective >= best - 1e-9);
        assert!((fit.objective - best).abs() <= 1e-9, "{} vs {best}", fit.objective);
    }
}
