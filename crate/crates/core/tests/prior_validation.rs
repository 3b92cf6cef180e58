use nalgebra::DMatrix;
use padic_dnn::prior::{c_phiphi, c_phiphi_norm_bound, c_xx, mc_validate};
use padic_dnn::{Activation, BiasCovariance, NetworkPrior, Prime, TreeFunction, WeightCovariance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let m = &g * g.transpose();
    // Exact symmetry after rounding.
    DMatrix::from_fn(n, n, |i, j| if i <= j { m[(i, j)] } else { m[(j, i)] })
}

fn random_function(rng: &mut ChaCha8Rng, p: Prime, l: u32) -> TreeFunction<f64> {
    TreeFunction::from_fn(p, l, |_| rng.random_range(-2.0..2.0)).unwrap()
}

#[test]
fn monte_carlo_matches_analytic_covariances() {
    let p = Prime::new(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let tanh = Activation::tanh();
    for l in [1u32, 2] {
        let n = p.size(l).unwrap();
        let prior = NetworkPrior::new(
            WeightCovariance::separable(p, l, random_psd(&mut rng, n), random_psd(&mut rng, n)).unwrap(),
            WeightCovariance::iid(p, l, 0.7).unwrap(),
            BiasCovariance::new(p, l, random_psd(&mut rng, n)).unwrap(),
            WeightCovariance::dense(p, l, WeightCovariance::separable(p, l, random_psd(&mut rng, n), random_psd(&mut rng, n)).unwrap().to_dense().transpose().as_slice()).unwrap(),
            BiasCovariance::iid(p, l, 0.3).unwrap(),
        )
        .unwrap();
        let h = random_function(&mut rng, p, l);
        let x = random_function(&mut rng, p, l);
        let rep = mc_validate(&prior, &h, &x, &tanh, &Activation::pwl_sigmoid(), 100_000, 77).unwrap();
        assert!(rep.frac_within_3se >= 0.95, "l={l}: {:?}", rep.summary());
    }
}

#[test]
fn norm_bound_holds_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for i in 0..100 {
        let p = Prime::new([2u64, 3][rng.random_range(0..2)]).unwrap();
        let l = rng.random_range(0..=2u32).min(if p.get() == 3 { 1 } else { 2 });
        let n = p.size(l).unwrap();
        let cov = match i % 3 {
            0 => WeightCovariance::iid(p, l, rng.random_range(0.0..2.0)).unwrap(),
            1 => WeightCovariance::separable(p, l, random_psd(&mut rng, n), random_psd(&mut rng, n)).unwrap(),
            _ => {
                let k = random_psd(&mut rng, n * n);
                WeightCovariance::dense(p, l, k.transpose().as_slice()).unwrap()
            }
        };
        let h = random_function(&mut rng, p, l);
        let phi = if i % 2 == 0 { Activation::tanh() } else { Activation::pwl_sigmoid() };
        let (bound, actual) = c_phiphi_norm_bound(&cov, &h, &phi).unwrap();
        assert!(actual <= bound + 1e-10, "instance {i}: {actual} > {bound}");
    }
}

#[test]
fn representations_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let tanh = Activation::tanh();
    for (p, l) in [(2u64, 1u32), (2, 2), (3, 1)] {
        let p = Prime::new(p).unwrap();
        let n = p.size(l).unwrap();
        let (a, b) = (random_psd(&mut rng, n), random_psd(&mut rng, n));
        let sep = WeightCovariance::separable(p, l, a, b).unwrap();
        let dense = WeightCovariance::dense(p, l, sep.to_dense().transpose().as_slice()).unwrap();
        let h = random_function(&mut rng, p, l);
        assert!((c_phiphi(&sep, &h, &tanh).unwrap() - c_phiphi(&dense, &h, &tanh).unwrap()).amax() <= 1e-12);
        assert!((c_xx(&sep, &h).unwrap() - c_xx(&dense, &h).unwrap()).amax() <= 1e-12);

        let s2 = rng.random_range(0.1..2.0);
        let iid = WeightCovariance::iid(p, l, s2).unwrap();
        let iid_sep = WeightCovariance::separable(p, l, DMatrix::identity(n, n) * s2, DMatrix::identity(n, n)).unwrap();
        let iid_dense = WeightCovariance::dense(p, l, iid.to_dense().transpose().as_slice()).unwrap();
        let c = c_phiphi(&iid, &h, &tanh).unwrap();
        assert!((&c - c_phiphi(&iid_sep, &h, &tanh).unwrap()).amax() <= 1e-12);
        assert!((&c - c_phiphi(&iid_dense, &h, &tanh).unwrap()).amax() <= 1e-12);
    }
}
