use proptest::prelude::*;

use hpca::linalg::DenseMatrix;
use hpca::{
    canonical_angles, coherence_eta, gaussian_matrix, gram_schmidt, parse_libsvm, sym_eig,
    write_libsvm, EtaMode, HashSpec, SparseDataset, SparseRow,
};

fn symmetric(n: usize, seed: u64) -> DenseMatrix {
    let g = gaussian_matrix(n, n, seed);
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            data[i * n + j] = 0.5 * (g[(i, j)] + g[(j, i)]);
        }
    }
    DenseMatrix::from_vec(n, n, data).unwrap()
}

#[test]
fn gram_schmidt_orthonormal_grid() {
    for d in [8, 64, 512] {
        for k in [1, 4, 16] {
            if k > d {
                continue;
            }
            for seed in 0..10 {
                let y = gaussian_matrix(d, k, seed);
                let q = gram_schmidt(&y).unwrap();
                let err = q.t_matmul(&q).sub(&DenseMatrix::identity(k)).max_abs();
                assert!(err <= 1e-12, "d={d} k={k}: {err}");
                // Same span: residual of Y after projecting onto Q.
                let resid = y.sub(&q.matmul(&q.t_matmul(&y))).frobenius_norm();
                assert!(resid <= 1e-10 * y.frobenius_norm());
            }
        }
    }
}

#[test]
fn sym_eig_random_matrices() {
    for trial in 0..1000u64 {
        let n = 1 + (trial % 32) as usize;
        let a = symmetric(n, trial);
        let eig = sym_eig(&a).unwrap();
        let v = &eig.eigenvectors;
        let mut lambda = DenseMatrix::zeros(n, n);
        for i in 0..n {
            let mut col = vec![0.0; n];
            col[i] = eig.eigenvalues[i];
            lambda.set_column(i, &col);
        }
        let recon = v.matmul(&lambda).matmul(&v.transpose());
        let scale = a.frobenius_norm().max(1.0);
        assert!(
            recon.sub(&a).frobenius_norm() <= 1e-10 * scale,
            "trial {trial}"
        );
        let orth = v.t_matmul(v).sub(&DenseMatrix::identity(n)).max_abs();
        assert!(orth <= 1e-10);
        assert!(eig.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn hash_inner_product_unbiased() {
    let x = SparseRow::new(vec![0, 5, 17, 40, 99], vec![1.0, -2.0, 0.5, 3.0, 1.5], None).unwrap();
    let y = SparseRow::new(
        vec![5, 17, 50, 99, 120],
        vec![2.0, 1.0, -1.0, 0.5, 4.0],
        None,
    )
    .unwrap();
    let truth = x.dot(&y);
    let seeds = 2000u64;
    let mut sum = 0.0;
    let mut sq = 0.0;
    for s in 0..seeds {
        let spec = HashSpec::new(16, hpca::mix64(2 * s), hpca::mix64(2 * s + 1)).unwrap();
        let a = spec.apply(&x);
        let b = spec.apply(&y);
        let v: f64 = a.iter().zip(b.iter()).map(|(p, q)| p * q).sum();
        sum += v;
        sq += v * v;
    }
    let mean = sum / seeds as f64;
    let var = sq / seeds as f64 - mean * mean;
    let se = (var / seeds as f64).sqrt();
    assert!(
        (mean - truth).abs() <= 4.0 * se,
        "mean {mean} truth {truth} se {se}"
    );
}

#[test]
fn hash_inner_product_variance_shrinks_with_d() {
    let dense: Vec<f64> = (0..300)
        .map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0)
        .collect();
    let x = SparseRow::from_dense(&dense);
    let truth = x.squared_norm();
    let spread = |d: usize| {
        let vals: Vec<f64> = (0..200u64)
            .map(|s| {
                let spec = HashSpec::new(d, hpca::mix64(s), hpca::mix64(!s)).unwrap();
                spec.apply(&x).iter().map(|v| v * v).sum::<f64>() - truth
            })
            .collect();
        vals.iter().map(|v| v * v).sum::<f64>() / vals.len() as f64
    };
    let small = spread(64);
    let large = spread(4096);
    assert!(large * 10.0 < small, "{large} vs {small}");
}

#[test]
fn canonical_angles_symmetry_and_basis_invariance() {
    for seed in 0..20 {
        let a = gram_schmidt(&gaussian_matrix(30, 4, seed)).unwrap();
        let b = gram_schmidt(&gaussian_matrix(30, 4, seed + 1000)).unwrap();
        let ab = canonical_angles(&a, &b).unwrap();
        let ba = canonical_angles(&b, &a).unwrap();
        assert!((ab.sin_phi_frobenius - ba.sin_phi_frobenius).abs() <= 1e-12);
        for (x, y) in ab.cosines.iter().zip(&ba.cosines) {
            assert!((x - y).abs() <= 1e-12);
        }
        // Rotating the basis inside the span changes nothing.
        let r = gram_schmidt(&gaussian_matrix(4, 4, seed + 7)).unwrap();
        let rotated = a.matmul(&r);
        let ar = canonical_angles(&rotated, &b).unwrap();
        assert!((ar.sin_phi_frobenius - ab.sin_phi_frobenius).abs() <= 1e-10);
        let self_angle = canonical_angles(&a, &rotated).unwrap();
        assert!(self_angle.sin_phi_frobenius <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn libsvm_round_trip(
        rows in prop::collection::vec(
            (
                prop::collection::btree_map(0usize..500, -1e6f64..1e6, 0..12),
                prop::option::of(-5i32..5),
            ),
            1..20,
        )
    ) {
        let rows: Vec<SparseRow> = rows
            .into_iter()
            .map(|(m, label)| {
                let (idx, vals): (Vec<usize>, Vec<f64>) = m.into_iter().unzip();
                // Files always carry a label; a missing one is written as 0.
                SparseRow::new(idx, vals, Some(label.unwrap_or(0) as f64)).unwrap()
            })
            .collect();
        let ds = SparseDataset::from_rows(rows.clone(), Some(500)).unwrap();
        let dir = std::env::temp_dir().join(format!("hpca-prop-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("rt-{}.svm", rows.len()));
        let mut f = std::io::BufWriter::new(std::fs::File::create(&path).unwrap());
        write_libsvm(&ds, &mut f).unwrap();
        drop(f);
        let back = parse_libsvm(&path, Some(500)).unwrap();
        prop_assert_eq!(back.to_rows().unwrap(), rows);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn eta_is_scale_invariant(seed in 0u64..1000, c in 0.01f64..100.0) {
        let g = gaussian_matrix(12, 9, seed);
        let rows: Vec<SparseRow> = (0..12).map(|i| SparseRow::from_dense(g.row(i))).collect();
        let scaled: Vec<SparseRow> = rows.iter().map(|r| r.scaled(c)).collect();
        let a = coherence_eta(&SparseDataset::from_rows(rows, None).unwrap(), EtaMode::Pairwise).unwrap();
        let b = coherence_eta(&SparseDataset::from_rows(scaled, None).unwrap(), EtaMode::Pairwise).unwrap();
        prop_assert!((a.eta - b.eta).abs() <= 1e-12);
        prop_assert!(a.eta <= 1.0 + 1e-12);
        prop_assert!(a.eta > 0.0 && !a.lower_bound);
    }

    #[test]
    fn hash_preserves_norm_of_one_hot(i in 0usize..1_000_000, v in -1e3f64..1e3, d in 1usize..5000) {
        let spec = HashSpec::new(d, 9, 10).unwrap();
        let x = SparseRow::new(vec![i], vec![v], None).unwrap();
        let out = spec.apply(&x);
        let norm: f64 = out.iter().map(|z| z * z).sum();
        prop_assert_eq!(norm, v * v);
    }
}
