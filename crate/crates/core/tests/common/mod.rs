// SPDX-License-Identifier: Apache-2.0
//! Helpers shared by the integration tests.

use circuit_ddpm::nn::{mse_loss, Mode, Network, Tensor2D};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;
/// Gradients smaller than this are compared in absolute terms.
const FLOOR: f64 = 1e-6;

fn loss(net: &mut Network, x: &Tensor2D, y: &Array2<f64>) -> f64 {
    let pred = net.forward(x, Mode::Train).unwrap();
    mse_loss(&pred, y).0
}

/// Largest `|analytic − numeric| / max(|analytic|, |numeric|, FLOOR)` over
/// every parameter.
pub fn max_relative_error(hidden: &[usize], batch: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n_in, n_out) = (7, 5);
    let mut net = Network::encoder_decoder(n_in, hidden, n_out, 0.2, &mut rng);
    // Perturb BN affine parameters away from (1, 0) so their gradients are
    // exercised in a generic position.
    for p in net.params_mut() {
        for v in p.iter_mut() {
            *v += rng.random_range(-0.1..0.1);
        }
    }
    let x = Tensor2D::new(Array2::from_shape_simple_fn((batch, n_in), || rng.random_range(-2.0..2.0))).unwrap();
    let y = Array2::from_shape_simple_fn((batch, n_out), || rng.random_range(-1.0..1.0));

    let pred = net.forward(&x, Mode::Train).unwrap();
    let (_, dl) = mse_loss(&pred, &y);
    let analytic = net.backward(&dl).unwrap();

    let mut worst: f64 = 0.0;
    let shapes = net.param_shapes();
    for (k, &len) in shapes.iter().enumerate() {
        for j in 0..len {
            let orig = net.params()[k][j];
            net.params_mut()[k][j] = orig + H;
            let up = loss(&mut net, &x, &y);
            net.params_mut()[k][j] = orig - H;
            let down = loss(&mut net, &x, &y);
            net.params_mut()[k][j] = orig;
            let numeric = (up - down) / (2.0 * H);
            let a = analytic.as_slices()[k][j];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FLOOR);
            worst = worst.max(rel);
        }
    }
    worst
}
