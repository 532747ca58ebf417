//! Finite-difference check of a two-branch network's backward pass.
//!
//! cargo run --example gradient_check

use racecraft::neural::{Activation, BranchSpec, HeadSpec, LayerSpec, Network, NetworkSpec, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = NetworkSpec {
        branches: vec![
            BranchSpec {
                input_shape: vec![4],
                layers: vec![LayerSpec::dense(4, 6, Activation::Tanh)],
            },
            BranchSpec {
                input_shape: vec![2, 10],
                layers: vec![LayerSpec::conv1d(2, 3, 3, Activation::Tanh), LayerSpec::Flatten],
            },
        ],
        trunk: vec![LayerSpec::dense(30, 8, Activation::Tanh)],
        heads: vec![HeadSpec {
            layers: vec![LayerSpec::dense(8, 3, Activation::Linear)],
            init_scale: 1.0,
        }],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut net = Network::init(spec, &mut rng)?;
    let inputs: Vec<Tensor> = net
        .input_shapes()
        .iter()
        .map(|s| {
            Tensor::new(
                s.clone(),
                (0..s.iter().product()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            )
        })
        .collect::<Result<_, _>>()?;
    let seed = Tensor::new(vec![3], vec![1.0, -0.5, 0.25])?;
    let loss = |net: &Network| -> f64 {
        let (out, _) = net.forward(&inputs).unwrap();
        out[0].data.iter().zip(&seed.data).map(|(a, b)| a * b).sum()
    };
    let (_, cache) = net.forward(&inputs)?;
    let grads = net.backward(&cache, std::slice::from_ref(&seed))?;
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..net.params.len() {
        let p = net.params[i];
        net.params[i] = p + h;
        let up = loss(&net);
        net.params[i] = p - h;
        let down = loss(&net);
        net.params[i] = p;
        let num = (up - down) / (2.0 * h);
        worst = worst.max((num - grads.params[i]).abs() / num.abs().max(grads.params[i].abs()).max(1e-4));
    }
    println!("{} parameters, max relative error {worst:.2e}", net.params.len());
    Ok(())
}
