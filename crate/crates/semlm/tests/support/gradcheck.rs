//! Central finite-difference gradient checking for the three training
//! objectives, on small fixed instances (V=8, d=5).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use semlm::neural::{
    cbow_event_gradient, cbow_event_loss, lb_event_gradient, lb_event_loss, sg_event_gradient,
    sg_event_loss, LbParams,
};

pub const V: usize = 8;
pub const DIM: usize = 5;
const EPS: f64 = 1e-5;

/// d/dθ_i f(θ) via central differences, restoring θ afterwards.
pub fn central_difference<F>(f: &mut F, params: &mut [f64], idx: usize) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    let original = params[idx];
    params[idx] = original + EPS;
    let hi = f(params);
    params[idx] = original - EPS;
    let lo = f(params);
    params[idx] = original;
    (hi - lo) / (2.0 * EPS)
}

/// Max relative error between analytic and numeric gradients, with an
/// absolute floor so near-zero coordinates compare sanely.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / (a.abs() + n.abs()).max(1e-6))
        .fold(0.0, f64::max)
}

fn random_params(seed: u64, len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.gen_range(-0.8..0.8)).collect()
}

fn numeric_gradient<F: FnMut(&[f64]) -> f64>(mut loss: F, params: &mut [f64]) -> Vec<f64> {
    (0..params.len())
        .map(|i| central_difference(&mut loss, params, i))
        .collect()
}

/// Skip-gram negative-sampling loss gradient vs finite differences; the
/// duplicated noise draw exercises accumulation.
pub fn sg_gradient_error(seed: u64) -> f64 {
    let mut params = random_params(seed, 2 * V * DIM);
    let (center, context, noise) = (2usize, 5usize, vec![1usize, 3, 3]);

    let mut analytic = vec![0.0; params.len()];
    {
        let (input, output) = params.split_at(V * DIM);
        let grad = sg_event_gradient(input, output, DIM, center, context, &noise);
        let (id, g) = &grad.input_row;
        analytic[id * DIM..(id + 1) * DIM].copy_from_slice(g);
        for (id, g) in &grad.output_rows {
            let base = V * DIM + id * DIM;
            for (slot, gj) in analytic[base..base + DIM].iter_mut().zip(g) {
                *slot += gj;
            }
        }
    }
    let numeric = numeric_gradient(
        |p: &[f64]| {
            let (input, output) = p.split_at(V * DIM);
            sg_event_loss(input, output, DIM, center, context, &noise)
        },
        &mut params,
    );
    max_relative_error(&analytic, &numeric)
}

/// CBOW negative-sampling loss gradient vs finite differences; a repeated
/// context token exercises accumulation across the averaged window.
pub fn cbow_gradient_error(seed: u64) -> f64 {
    let mut params = random_params(seed, 2 * V * DIM);
    let (context, target, noise) = (vec![1usize, 2, 2], 4usize, vec![0usize, 7]);

    let mut analytic = vec![0.0; params.len()];
    {
        let (input, output) = params.split_at(V * DIM);
        let grad = cbow_event_gradient(input, output, DIM, &context, target, &noise);
        for (id, g) in &grad.input_rows {
            for (slot, gj) in analytic[id * DIM..(id + 1) * DIM].iter_mut().zip(g) {
                *slot += gj;
            }
        }
        for (id, g) in &grad.output_rows {
            let base = V * DIM + id * DIM;
            for (slot, gj) in analytic[base..base + DIM].iter_mut().zip(g) {
                *slot += gj;
            }
        }
    }
    let numeric = numeric_gradient(
        |p: &[f64]| {
            let (input, output) = p.split_at(V * DIM);
            cbow_event_loss(input, output, DIM, &context, target, &noise)
        },
        &mut params,
    );
    max_relative_error(&analytic, &numeric)
}

/// Log-bilinear NCE loss gradient vs finite differences; the context is
/// shorter than the window and one noise token repeats.
pub fn lb_gradient_error(seed: u64) -> f64 {
    let window = 3;
    let sizes = [V * DIM, V * DIM, V, window * DIM];
    let total: usize = sizes.iter().sum();
    let mut params = random_params(seed, total);

    let counts = [3u64, 1, 4, 1, 5, 9, 2, 6];
    let total_count: u64 = counts.iter().sum();
    let k = 3usize;
    let ln_kq: Vec<f64> = counts
        .iter()
        .map(|&c| (k as f64 * c as f64 / total_count as f64).ln())
        .collect();
    let (context, target, noise) = (vec![1usize, 2], 3usize, vec![4usize, 4, 6]);

    let unflatten = |p: &[f64]| {
        let (target_m, rest) = p.split_at(sizes[0]);
        let (context_m, rest) = rest.split_at(sizes[1]);
        let (bias, position) = rest.split_at(sizes[2]);
        LbParams {
            dim: DIM,
            window,
            target: target_m.to_vec(),
            context: context_m.to_vec(),
            bias: bias.to_vec(),
            position: position.to_vec(),
        }
    };

    let mut analytic = vec![0.0; total];
    {
        let lb = unflatten(&params);
        let grad = lb_event_gradient(&lb, &context, target, &noise, &ln_kq);
        for (id, g) in &grad.target_rows {
            for (slot, gj) in analytic[id * DIM..(id + 1) * DIM].iter_mut().zip(g) {
                *slot += gj;
            }
        }
        let ctx_base = sizes[0];
        for (id, g) in &grad.context_rows {
            let base = ctx_base + id * DIM;
            for (slot, gj) in analytic[base..base + DIM].iter_mut().zip(g) {
                *slot += gj;
            }
        }
        let bias_base = sizes[0] + sizes[1];
        for (id, g) in &grad.bias_rows {
            analytic[bias_base + id] += g;
        }
        let pos_base = sizes[0] + sizes[1] + sizes[2];
        for (slot_idx, g) in &grad.position_rows {
            let base = pos_base + slot_idx * DIM;
            for (slot, gj) in analytic[base..base + DIM].iter_mut().zip(g) {
                *slot += gj;
            }
        }
    }
    let numeric = numeric_gradient(
        |p: &[f64]| lb_event_loss(&unflatten(p), &context, target, &noise, &ln_kq),
        &mut params,
    );
    max_relative_error(&analytic, &numeric)
}
