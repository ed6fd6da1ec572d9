//! Estimators checked against each other through independent routes.

use immse_lab::analytics::{mi_good_code, mmse_gaussian, GoodCodeProfile};
use immse_lab::estimator::{
    generate_codebook_of_size, mi_codebook_mc, mi_scalar_quadrature, mmse_codebook_mc, mmse_matrix_mc,
    mmse_scalar_quadrature, Codebook, Constellation,
};
use immse_lab::kl::{kl_block_independent, kl_gaussian_direct, mmse_eigen_bound_check, BlockGaussianPair};
use immse_lab::model::incremental_decomposition;
use immse_lab::{ChannelParams, CovMatrix};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn bpsk_codebook() -> Codebook {
    Codebook::from_flat(1, vec![-1.0, 1.0]).unwrap()
}

#[test]
fn bpsk_mmse_quadrature_matches_ten_million_samples() {
    let quad = mmse_scalar_quadrature(&Constellation::bpsk(), 1.0, 61).unwrap();
    let mc = mmse_codebook_mc(&bpsk_codebook(), 1.0, 10_000_000, 3).unwrap();
    assert!(mc.std_error < 5e-4, "{mc:?}");
    assert!((quad - mc.value).abs() <= 4.0 * mc.std_error, "quad {quad} mc {mc:?}");
}

#[test]
fn bpsk_mi_quadrature_matches_monte_carlo() {
    for (g, seed) in [(0.25, 1), (1.0, 2), (4.0, 3)] {
        let quad = mi_scalar_quadrature(&Constellation::bpsk(), g, 61).unwrap();
        let mc = mi_codebook_mc(&bpsk_codebook(), g, 1_000_000, seed).unwrap();
        assert!((quad - mc.value).abs() <= 4.0 * mc.std_error, "gamma {g}: quad {quad} mc {mc:?}");
    }
}

#[test]
fn four_level_quadrature_matches_monte_carlo() {
    // equiprobable levels inside the unit ball so they also form a codebook
    let c = Constellation::new([-0.9, -0.3, 0.3, 0.9].map(|v| (v, 0.25)).to_vec()).unwrap();
    let cb = Codebook::from_flat(1, c.points().iter().map(|p| p.0).collect()).unwrap();
    let g = 2.0;
    let quad = mmse_scalar_quadrature(&c, g, 61).unwrap();
    let mc = mmse_codebook_mc(&cb, g, 1_000_000, 9).unwrap();
    assert!((quad - mc.value).abs() <= 4.0 * mc.std_error, "quad {quad} mc {mc:?}");
}

#[test]
fn large_codebook_mmse_tracks_the_gaussian_curve_at_low_snr() {
    // a dense random code looks Gaussian well below its design SNR
    let cb = generate_codebook_of_size(2, 256, 17).unwrap();
    let g = 0.05;
    let mc = mmse_codebook_mc(&cb, g, 50_000, 4).unwrap();
    let power = cb.covariance().unwrap().trace() / 2.0;
    assert!((mc.value - mmse_gaussian(power, g)).abs() < 0.01, "{mc:?}");
    // and a capacity-achieving profile caps MI at the design point
    let p = GoodCodeProfile::unit(1.0).unwrap();
    assert_eq!(mi_good_code(&p, 5.0), mi_good_code(&p, 1.0));
}

#[test]
fn mmse_matrix_spectrum_stays_below_codeword_covariance() {
    for seed in 0..5u64 {
        let cb = generate_codebook_of_size(4, 8, 40 + seed).unwrap();
        let cov = cb.covariance().unwrap();
        for g in [0.5, 1.0, 2.0] {
            let est = mmse_matrix_mc(&cb, g, 50_000, seed).unwrap();
            let check =
                mmse_eigen_bound_check(&est.matrix, &cov, 3.0 * est.quadratic_form_std_error()).unwrap();
            assert!(check.holds, "seed {seed} gamma {g}: {check:?}");
            // trace of the MMSE matrix matches the scalar estimator on the same draws
            let scalar = mmse_codebook_mc(&cb, g, 50_000, seed).unwrap();
            assert!((est.matrix.trace() / 4.0 - scalar.value).abs() < 1e-9);
        }
    }
}

#[test]
fn block_kl_at_fifty_dimensions() {
    let mut r = ChaCha8Rng::seed_from_u64(50);
    let n = 50;
    let g = DMatrix::<f64>::from_fn(2 * n, 4 * n, |_, _| r.sample(StandardNormal));
    let joint = &g * g.transpose() / (4 * n) as f64 + DMatrix::identity(2 * n, 2 * n) * 0.05;
    let pair = BlockGaussianPair::new(
        CovMatrix::new(joint.view((0, 0), (n, n)).into_owned()).unwrap(),
        joint.view((n, 0), (n, n)).into_owned(),
        CovMatrix::new(joint.view((n, n), (n, n)).into_owned()).unwrap(),
    )
    .unwrap();
    let block = kl_block_independent(&pair).unwrap();
    let direct = kl_gaussian_direct(&pair.assembled(), &pair.block_diagonal()).unwrap();
    assert!((block - direct).abs() <= 1e-8 * direct, "{block} vs {direct}");
}

#[test]
fn incremental_pair_of_random_code_has_small_coupling() {
    let params = ChannelParams::new(1.0, 1.0, 0.5).unwrap();
    let d = incremental_decomposition(&params, 0.1, 0.05).unwrap();
    let cb = generate_codebook_of_size(16, 4096, 5).unwrap();
    let pair = BlockGaussianPair::incremental(&cb.covariance().unwrap(), &d).unwrap();
    let lambdas = pair.coupling_eigenvalues().unwrap();
    assert!(lambdas.iter().all(|&l| (0.0..1e-2).contains(&l)), "{lambdas:?}");
}
