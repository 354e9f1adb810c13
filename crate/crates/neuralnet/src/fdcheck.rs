//! Directional finite-difference utilities shared by the gradient-check
//! test suites. Not part of the public API surface.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::elem::Elem;
use crate::error::NetError;
use crate::layers::Layer;
use crate::tensor::Tensor;

pub const FD_STEP: f64 = 1e-6;
pub const FD_REL_TOL: f64 = 1e-4;
pub const FD_ABS_ESCAPE: f64 = 1e-9;

pub fn random_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor<f64> {
    let data = (0..shape.iter().product::<usize>())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    Tensor::from_vec(shape, data).expect("consistent shape")
}

/// Random direction of unit L2 norm.
pub fn unit_direction(numel: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut d: Vec<f64> = (0..numel).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
    d.iter_mut().for_each(|v| *v /= norm);
    d
}

/// L = sum(layer(x) * r).
pub fn projection_loss(
    layer: &mut dyn Layer<f64>,
    x: &Tensor<f64>,
    r: &Tensor<f64>,
    train: bool,
) -> Result<f64, NetError> {
    let y = layer.forward(x, train)?;
    Ok(y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum())
}

/// Relative-error comparison with an absolute escape hatch for directional
/// derivatives that are genuinely zero.
pub fn close(analytic: f64, numeric: f64) -> Result<(), String> {
    let diff = (analytic - numeric).abs();
    if diff < FD_ABS_ESCAPE {
        return Ok(());
    }
    let rel = diff / analytic.abs().max(numeric.abs()).max(1e-12);
    if rel < FD_REL_TOL {
        Ok(())
    } else {
        Err(format!(
            "analytic {analytic:.9e} vs numeric {numeric:.9e} (rel {rel:.3e})"
        ))
    }
}

/// Directional finite-difference check of one layer built by `make`:
/// verifies the input gradient and every parameter gradient over `seeds`
/// random seeds. Returns the number of directional comparisons made.
pub fn check_layer<F>(
    make: F,
    input_shape: &[usize],
    train: bool,
    seeds: u64,
    what: &str,
) -> Result<usize, String>
where
    F: Fn(&mut ChaCha8Rng) -> Box<dyn Layer<f64>>,
{
    let mut comparisons = 0usize;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layer = make(&mut rng);
        let x = random_tensor(input_shape, &mut rng);
        let y = layer.forward(&x, train).map_err(|e| e.to_string())?;
        let r = random_tensor(y.shape(), &mut rng);

        let mut params = Vec::new();
        layer.collect_params(&mut params);
        for p in params.iter_mut() {
            p.zero_grad();
        }
        drop(params);
        let _ = layer.forward(&x, train).map_err(|e| e.to_string())?;
        let dx = layer.backward(&r).map_err(|e| e.to_string())?;

        // input direction
        let d = unit_direction(x.numel(), &mut rng);
        let analytic: f64 = dx.data().iter().zip(&d).map(|(g, dv)| g * dv).sum();
        let mut x_plus = x.clone();
        let mut x_minus = x.clone();
        for ((p, m), dv) in x_plus.data_mut().iter_mut().zip(x_minus.data_mut()).zip(&d) {
            *p += FD_STEP * dv;
            *m -= FD_STEP * dv;
        }
        let lp = projection_loss(layer.as_mut(), &x_plus, &r, train).map_err(|e| e.to_string())?;
        let lm = projection_loss(layer.as_mut(), &x_minus, &r, train).map_err(|e| e.to_string())?;
        close(analytic, (lp - lm) / (2.0 * FD_STEP))
            .map_err(|e| format!("{what} input (seed {seed}): {e}"))?;
        comparisons += 1;

        // one direction per parameter tensor
        let mut grads: Vec<Vec<f64>> = Vec::new();
        let mut n_params = 0usize;
        {
            let mut params = Vec::new();
            layer.collect_params(&mut params);
            n_params = params.len();
            for p in &params {
                grads.push(p.grad.data().to_vec());
            }
        }
        for pi in 0..n_params {
            let mut rng_p = ChaCha8Rng::seed_from_u64(seed ^ (0x9E37 + pi as u64));
            let (numel, name) = {
                let mut params = Vec::new();
                layer.collect_params(&mut params);
                (params[pi].value.numel(), params[pi].name.clone())
            };
            let d = unit_direction(numel, &mut rng_p);
            let analytic: f64 = grads[pi].iter().zip(&d).map(|(g, dv)| g * dv).sum();

            let shift = |layer: &mut dyn Layer<f64>, delta: f64, d: &[f64]| {
                let mut params = Vec::new();
                layer.collect_params(&mut params);
                for (v, dv) in params[pi].value.data_mut().iter_mut().zip(d) {
                    *v += delta * dv;
                }
            };
            shift(layer.as_mut(), FD_STEP, &d);
            let lp = projection_loss(layer.as_mut(), &x, &r, train).map_err(|e| e.to_string())?;
            shift(layer.as_mut(), -2.0 * FD_STEP, &d);
            let lm = projection_loss(layer.as_mut(), &x, &r, train).map_err(|e| e.to_string())?;
            shift(layer.as_mut(), FD_STEP, &d);
            close(analytic, (lp - lm) / (2.0 * FD_STEP))
                .map_err(|e| format!("{what} param {name} (seed {seed}): {e}"))?;
            comparisons += 1;
        }
    }
    Ok(comparisons)
}
