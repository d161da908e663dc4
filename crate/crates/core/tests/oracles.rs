//! Library results checked against slow, direct reimplementations.

use dualsparse::grouping::{form_group, GroupingConfig, Similarity};
use dualsparse::linalg::norm2;
use dualsparse::patch::{aggregate, extract_patches};
use dualsparse::sparse::{
    encode_all, init_dictionary, ksvd_learn, omp_encode, reconstruct, Dictionary, SparseCodes,
    SparseColumn, SparseConfig,
};
use dualsparse::{Image, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::SQRT_2;

fn random_image(h: usize, w: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Image::from_fn(h, w, |_, _| rng.random_range(1.0..255.0)).unwrap()
}

#[test]
fn patch_count_matches_enumeration() {
    let img = Image::filled(512, 512, 0.0).unwrap();
    let p = extract_patches(&img, 8, 4).unwrap();
    let last = 512 - 8;
    let mut expected = Vec::new();
    for r in 0..=last {
        for c in 0..=last {
            if (r % 4 == 0 || r == last) && (c % 4 == 0 || c == last) {
                expected.push((r, c));
            }
        }
    }
    assert_eq!(p.count(), expected.len());
    assert_eq!(p.origins(), &expected[..]);
}

#[test]
fn small_grids() {
    let img = random_image(9, 9, 3);
    let p = extract_patches(&img, 8, 1).unwrap();
    assert_eq!(p.origins(), &[(0, 0), (0, 1), (1, 0), (1, 1)]);
    assert_eq!(p.patch(3)[0], img.get(1, 1));
    assert_eq!(p.patch(2)[8], img.get(2, 0));
    let one = extract_patches(&random_image(8, 8, 1), 8, 1).unwrap();
    assert_eq!(one.count(), 1);
    assert!(extract_patches(&img, 10, 1).is_err());
}

#[test]
fn aggregation_matches_pixel_loop() {
    let (h, w, edge) = (16, 16, 4);
    let img = random_image(h, w, 11);
    let p = extract_patches(&img, edge, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let est = Matrix::from_fn(p.patch_len(), p.count(), |_, _| rng.random_range(-50.0..300.0));
    let weights: Vec<f64> = (0..p.count()).map(|_| rng.random_range(0.05..3.0)).collect();
    let out = aggregate(&p, &est, &weights, h, w).unwrap();

    for r in 0..h {
        for c in 0..w {
            let (mut num, mut den) = (0.0, 0.0);
            for (m, &(r0, c0)) in p.origins().iter().enumerate() {
                if r >= r0 && r < r0 + edge && c >= c0 && c < c0 + edge {
                    num += weights[m] * est.get((r - r0) * edge + (c - c0), m);
                    den += weights[m];
                }
            }
            assert!((out.get(r, c) - num / den).abs() <= 1e-12, "pixel ({r}, {c})");
        }
    }
}

#[test]
fn overlapping_patches_average() {
    let img = Image::filled(3, 3, 0.0).unwrap();
    let p = extract_patches(&img, 3, 1).unwrap();
    let two = dualsparse::patch::PatchMatrix::new(
        3,
        Matrix::from_columns(9, &[vec![2.0; 9], vec![6.0; 9]]).unwrap(),
        vec![(0, 0), (0, 0)],
    )
    .unwrap();
    let out = aggregate(&two, two.data(), &[1.0, 1.0], 3, 3).unwrap();
    assert!(out.pixels().iter().all(|&v| v == 4.0));
    let gap = aggregate(&p, p.data(), &[0.0], 3, 3);
    assert!(gap.is_err());
}

/// Smallest support (by size, then lexicographically) whose least-squares
/// fit leaves a residual within `tol`.
fn exhaustive_support(dict: &Dictionary, x: &[f64], tol: f64) -> Vec<usize> {
    let k = dict.atom_count();
    for size in 0..=dict.atom_len().min(k) {
        let mut best: Option<(f64, Vec<usize>)> = None;
        for mask in 0u32..(1 << k) {
            if mask.count_ones() as usize != size {
                continue;
            }
            let support: Vec<usize> = (0..k).filter(|&j| mask & (1 << j) != 0).collect();
            let r = least_squares_residual(dict, &support, x);
            if r <= tol && best.as_ref().is_none_or(|b| r < b.0) {
                best = Some((r, support));
            }
        }
        if let Some((_, s)) = best {
            return s;
        }
    }
    unreachable!("full span always fits")
}

fn least_squares_residual(dict: &Dictionary, support: &[usize], x: &[f64]) -> f64 {
    // Gram-Schmidt projection
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for &j in support {
        let mut v = dict.atom(j).to_vec();
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(p, q)| p * q).sum();
            v.iter_mut().zip(b).for_each(|(p, q)| *p -= d * q);
        }
        let n = norm2(&v);
        if n > 1e-12 {
            basis.push(v.iter().map(|p| p / n).collect());
        }
    }
    let mut r = x.to_vec();
    for b in &basis {
        let d: f64 = r.iter().zip(b).map(|(p, q)| p * q).sum();
        r.iter_mut().zip(b).for_each(|(p, q)| *p -= d * q);
    }
    norm2(&r)
}

#[test]
fn pursuit_finds_the_exhaustive_optimum() {
    let h = 1.0 / SQRT_2;
    let dict = Dictionary::new(Matrix::from_col_major(2, 3, vec![1.0, 0.0, 0.0, 1.0, h, h]).unwrap()).unwrap();
    let x = [1.0, 1.0];
    let cfg = SparseConfig { epsilon: 1e-9, ..SparseConfig::default() };
    assert_eq!(exhaustive_support(&dict, &x, cfg.residual_tolerance(2)), vec![2]);
    let code = omp_encode(&dict, &x, &cfg).unwrap();
    assert_eq!(code.column.indices, vec![2]);
    assert!((code.column.values[0] - SQRT_2).abs() <= 1e-12);
}

#[test]
fn pursuit_trivial_cases() {
    let cfg = SparseConfig::default();
    let id = Dictionary::identity(2);
    let code = omp_encode(&id, &[3.0, 0.0], &cfg).unwrap();
    assert_eq!(code.column, SparseColumn { indices: vec![0], values: vec![3.0] });
    let zero = omp_encode(&id, &[0.0, 0.0], &cfg).unwrap();
    assert_eq!(zero.column.support_size(), 0);
}

#[test]
fn atoms_code_themselves() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let dict = Dictionary::normalized(Matrix::from_fn(6, 9, |_, _| rng.random_range(-1.0..1.0))).unwrap();
    let x = dict.atoms().select_columns(&[0, 1, 2]);
    let out = encode_all(&dict, &x, &SparseConfig { epsilon: 1e-10, ..SparseConfig::default() }).unwrap();
    for m in 0..3 {
        let (idx, vals) = out.codes.column(m);
        assert_eq!(idx, &[m]);
        assert!((vals[0] - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn reconstruct_matches_triple_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (n, k, m) = (7, 13, 11);
    let dict = Dictionary::normalized(Matrix::from_fn(n, k, |_, _| rng.random_range(-1.0..1.0))).unwrap();
    let dense = Matrix::from_fn(k, m, |_, _| if rng.random_bool(0.3) { rng.random_range(-4.0..4.0) } else { 0.0 });
    let codes = SparseCodes::from_dense(&dense);
    let got = reconstruct(&dict, &codes).unwrap();
    for i in 0..n {
        for j in 0..m {
            let mut s = 0.0;
            for l in 0..k {
                s += dict.atoms().get(i, l) * dense.get(l, j);
            }
            assert!((got.get(i, j) - s).abs() <= 1e-12);
        }
    }
}

#[test]
fn rank_one_data_learns_its_direction() {
    let v = [0.6, 0.0, -0.8];
    let x = Matrix::from_columns(3, &vec![v.to_vec(); 10]).unwrap();
    let out = ksvd_learn(&x, 1, &SparseConfig { epsilon: 0.0, learn_iters: 3, ..SparseConfig::default() }).unwrap();
    let atom = out.dictionary.atom(0);
    let d: f64 = atom.iter().zip(&v).map(|(a, b)| a * b).sum();
    assert!((d.abs() - 1.0).abs() <= 1e-12);
    assert!(out.residual_norms.iter().all(|&r| r <= 1e-12));
}

#[test]
fn initial_dictionary_with_few_columns() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x = Matrix::from_fn(5, 4, |_, _| rng.random_range(-1.0..1.0));
    let d = init_dictionary(&x, 12, 3).unwrap();
    for k in 0..12 {
        assert!((norm2(d.atom(k)) - 1.0).abs() <= 1e-9);
    }
    assert_eq!(d, init_dictionary(&x, 12, 3).unwrap());
    assert!(init_dictionary(&Matrix::zeros(5, 4), 3, 0).is_err());
}

fn brute_group(img: &Image, edge: usize, reference: usize, cfg: &GroupingConfig) -> Vec<usize> {
    let p = extract_patches(img, edge, 1).unwrap();
    let (r0, c0) = p.origins()[reference];
    let half = (cfg.window / 2) as isize;
    let score = |a: &[f64], b: &[f64]| -> f64 {
        match cfg.metric {
            Similarity::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
            Similarity::Ppb => {
                let s: f64 = a
                    .iter()
                    .zip(b)
                    .map(|(x, y)| ((x - y).exp().sqrt() + (y - x).exp().sqrt()).ln())
                    .sum();
                (2.0 * cfg.looks - 1.0) * s
            }
        }
    };
    let mut scored: Vec<(f64, usize)> = p
        .origins()
        .iter()
        .enumerate()
        .filter(|&(m, &(r, c))| {
            m != reference
                && (r as isize - r0 as isize).abs() <= half
                && (c as isize - c0 as isize).abs() <= half
        })
        .map(|(m, _)| (score(p.patch(reference), p.patch(m)), m))
        .collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    std::iter::once(reference)
        .chain(scored.iter().take(cfg.gamma - 1).map(|s| s.1))
        .collect()
}

#[test]
fn grouping_matches_exhaustive_knn() {
    let img = random_image(24, 21, 4);
    let log_img = img.map(f64::ln).unwrap();
    for (metric, source) in [(Similarity::Euclidean, &img), (Similarity::Ppb, &log_img)] {
        let cfg = GroupingConfig { gamma: 12, window: 11, metric, looks: 2.0, ref_stride: 1 };
        let p = extract_patches(source, 5, 1).unwrap();
        for reference in [0, 17, 123, p.count() - 1] {
            let g = form_group(&p, reference, &cfg).unwrap();
            assert_eq!(g.member_indices, brute_group(source, 5, reference, &cfg), "{metric:?} ref {reference}");
            assert!(g.similarities.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}

#[test]
fn constant_image_groups_lowest_indices() {
    let img = Image::filled(12, 12, 9.0).unwrap();
    let p = extract_patches(&img, 3, 1).unwrap();
    let cfg = GroupingConfig { gamma: 5, window: 41, metric: Similarity::Euclidean, looks: 1.0, ref_stride: 1 };
    let g = form_group(&p, 0, &cfg).unwrap();
    assert_eq!(g.member_indices, vec![0, 1, 2, 3, 4]);
    let single = form_group(&p, 7, &GroupingConfig { gamma: 1, ..cfg.clone() }).unwrap();
    assert_eq!(single.member_indices, vec![7]);
    let wide = form_group(&p, 0, &GroupingConfig { gamma: 1000, ..cfg }).unwrap();
    assert_eq!(wide.len(), p.count());
    assert_eq!(wide.shortfall, 1000 - p.count());
}
