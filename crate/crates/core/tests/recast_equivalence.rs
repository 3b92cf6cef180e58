use padic_dnn::recast::{build_neuron_map, recast, verify_equivalence, LayeredJson, NeuronMapJson};
use padic_dnn::{haar_weight, Activation, LayeredNet, Matrix, PadicIndex, Prime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, density: f64) -> Matrix<f64> {
    let data = (0..rows * cols)
        .map(|_| if rng.random_bool(density) { rng.random_range(-1.5..1.5) } else { 0.0 })
        .collect();
    Matrix::new(rows, cols, data).unwrap()
}

fn random_net(rng: &mut ChaCha8Rng, widths: Vec<usize>) -> LayeredNet<f64> {
    let depth = widths.len() - 1;
    let weights = (0..depth).map(|j| random_matrix(rng, widths[j + 1], widths[j], 0.7)).collect();
    let biases = (0..depth).map(|j| (0..widths[j + 1]).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let phi = if rng.random_bool(0.5) { Activation::tanh() } else { Activation::pwl_sigmoid() };
    LayeredNet::new(widths, weights, biases, phi).unwrap()
}

fn probes(rng: &mut ChaCha8Rng, width: usize, count: usize) -> Vec<Vec<f64>> {
    (0..count).map(|_| (0..width).map(|_| rng.random_range(-2.0..2.0)).collect()).collect()
}

fn smallest_prime(net: &LayeredNet<f64>) -> Prime {
    Prime::next_above(net.max_width() as u64).unwrap()
}

#[test]
fn three_two_two_net_at_p5() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let net = random_net(&mut rng, vec![3, 2, 2]);
    let r = recast(&net, Prime::new(5).unwrap()).unwrap();
    let rep = verify_equivalence(&net, &r, &probes(&mut rng, 3, 20)).unwrap();
    assert!(rep.max_deviation <= 1e-12);
    assert!(rep.nonzero_preserved);
}

#[test]
fn random_nets_recast_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for trial in 0..100 {
        let depth = rng.random_range(1..=4usize);
        let widths: Vec<usize> = (0..=depth).map(|_| rng.random_range(1..=5usize)).collect();
        let net = if trial % 5 == 4 {
            let n = widths[0];
            LayeredNet::tied(n, depth, random_matrix(&mut rng, n, n, 0.8), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(), Activation::tanh())
                .unwrap()
        } else {
            random_net(&mut rng, widths)
        };
        let p = smallest_prime(&net);
        let r = recast(&net, p).unwrap();
        let rep = verify_equivalence(&net, &r, &probes(&mut rng, net.widths()[0], 4)).unwrap();
        assert!(rep.max_deviation <= 1e-12, "trial {trial}: {rep:?}");
        assert_eq!(rep.source_nonzero, rep.recast_nonzero);
        if net.is_tied() {
            assert_eq!(rep.tied_blocks_identical, Some(true));
        }
    }
}

#[test]
fn addresses_are_injective_and_follow_parents() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let depth = rng.random_range(1..=3usize);
        let widths: Vec<usize> = (0..=depth).map(|_| rng.random_range(1..=4usize)).collect();
        let net = random_net(&mut rng, widths);
        let p = smallest_prime(&net);
        let map = build_neuron_map(&net, p).unwrap();
        for j in 0..=depth {
            let layer = map.layer(j);
            let mut sorted = layer.to_vec();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), layer.len());
            for &a in layer {
                let idx = PadicIndex::new(p, j as u32 + 1, a).unwrap();
                assert_ne!(idx.digit(j as u32), 0);
                if j > 0 {
                    assert!(map.layer(j - 1).contains(&idx.project(j as u32).value()));
                }
            }
        }
        let json = NeuronMapJson::from(&map);
        assert_eq!(json.layers.len(), depth + 1);
    }
}

#[test]
fn kernel_entries_scale_back_within_one_ulp() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let net = random_net(&mut rng, vec![3, 4, 2]);
        let p = smallest_prime(&net);
        let r = recast(&net, p).unwrap();
        let haar = haar_weight::<f64>(p, r.params.level());
        for (j, w) in net.weights().iter().enumerate() {
            for i in 0..w.rows() {
                for k in 0..w.cols() {
                    let entry = r.params.weights().get(r.neuron_map.layer(j + 1)[i] as usize, r.neuron_map.layer(j)[k] as usize);
                    let back = entry * haar;
                    let orig = w.get(i, k);
                    let ulp = f64::EPSILON * orig.abs();
                    assert!((back - orig).abs() <= ulp, "{back} vs {orig}");
                }
            }
        }
    }
}

#[test]
fn depth_four_width_five_needs_sparse_storage() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let net = random_net(&mut rng, vec![5, 5, 5, 5, 5]);
    let r = recast(&net, Prime::new(7).unwrap()).unwrap();
    assert!(r.params.weights().is_sparse());
    assert_eq!(r.params.weights().side(), 7usize.pow(5));
    let rep = verify_equivalence(&net, &r, &probes(&mut rng, 5, 3)).unwrap();
    assert!(rep.max_deviation <= 1e-12);
}

#[test]
fn layered_json_parses() {
    let text = r#"{"widths":[1,1],"weights":[[[2.0]]],"biases":[[0.3]],"phi":"tanh","tied":false}"#;
    let spec: LayeredJson = serde_json::from_str(text).unwrap();
    let net: LayeredNet<f64> = spec.to_net().unwrap();
    let r = recast(&net, Prime::new(2).unwrap()).unwrap();
    let out = r.forward(&[0.5]).unwrap();
    assert!((out[1][0] - (2.0 * 0.5f64.tanh() + 0.3)).abs() < 1e-12);
}
