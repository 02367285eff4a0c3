//! Test-side oracles shared by the integration and acceptance suites.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use spdnn_core::{Architecture, LossKind, Network};

/// Central finite-difference step.
pub const FD_STEP: f64 = 1e-6;
/// Coordinates whose perturbation brings any kink quantity within this distance are skipped.
pub const KINK_TOL: f64 = 1e-7;

/// Output of the naive evaluator: value per sample plus every kink-sensitive scalar
/// (pre-activations, hinge margins, distance of the raw output to the clamp).
pub struct NaiveEval {
    pub outputs: Vec<f64>,
    pub kink_values: Vec<f64>,
}

/// Plain nested-loop evaluation from the flat layout: per layer, `out x in` weights in
/// row-major order followed by `out` biases.
pub fn naive_eval(dims: &[usize], params: &[f64], clamp: f64, xs: &[f64]) -> NaiveEval {
    let d = dims[0];
    let mut outputs = Vec::new();
    let mut kink_values = Vec::new();
    for x in xs.chunks(d) {
        let mut a: Vec<f64> = x.to_vec();
        let mut off = 0;
        for l in 0..dims.len() - 1 {
            let (nin, nout) = (dims[l], dims[l + 1]);
            let w = &params[off..off + nin * nout];
            let b = &params[off + nin * nout..off + nin * nout + nout];
            off += nin * nout + nout;
            let mut z = vec![0.0; nout];
            for o in 0..nout {
                let mut s = b[o];
                for i in 0..nin {
                    s += w[o * nin + i] * a[i];
                }
                z[o] = s;
            }
            if l + 2 < dims.len() {
                kink_values.extend(z.iter().copied());
                a = z.iter().map(|&v| v.max(0.0)).collect();
            } else {
                a = z;
            }
        }
        let raw = a[0];
        if clamp.is_finite() {
            kink_values.push(raw - clamp);
            kink_values.push(raw + clamp);
        }
        outputs.push(raw.clamp(-clamp, clamp));
    }
    NaiveEval {
        outputs,
        kink_values,
    }
}

pub fn naive_mean_loss(
    dims: &[usize],
    params: &[f64],
    clamp: f64,
    xs: &[f64],
    ys: &[f64],
    loss: LossKind,
) -> (f64, Vec<f64>) {
    let ev = naive_eval(dims, params, clamp, xs);
    let mut kinks = ev.kink_values;
    let mut total = 0.0;
    for (&h, &y) in ev.outputs.iter().zip(ys) {
        total += match loss {
            LossKind::Square => (y - h) * (y - h),
            LossKind::Hinge => {
                kinks.push(1.0 - y * h);
                (1.0 - y * h).max(0.0)
            }
        };
    }
    (total / ys.len() as f64, kinks)
}

pub fn dims_of(arch: &Architecture) -> Vec<usize> {
    let mut dims = vec![arch.input_dim()];
    dims.extend_from_slice(arch.hidden_widths());
    dims.push(1);
    dims
}

/// A random small network (`d <= 4`, widths `<= 8`, 1 to 3 hidden layers) with a batch.
pub struct Case {
    pub net: Network,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub loss: LossKind,
}

pub fn random_case(rng: &mut ChaCha8Rng) -> Case {
    let d = rng.gen_range(1..=4);
    let depth = rng.gen_range(1..=3);
    let widths: Vec<usize> = (0..depth).map(|_| rng.gen_range(1..=8)).collect();
    let mut arch = Architecture::new(d, widths).unwrap();
    if rng.gen_bool(0.3) {
        arch = arch.with_output_clamp(rng.gen_range(0.5..2.0)).unwrap();
    }
    let params: Vec<f64> = (0..arch.param_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let net = Network::from_flat(arch, params).unwrap();
    let m = rng.gen_range(1..=8);
    let xs: Vec<f64> = (0..m * d).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let loss = if rng.gen_bool(0.5) {
        LossKind::Square
    } else {
        LossKind::Hinge
    };
    let ys: Vec<f64> = (0..m)
        .map(|_| match loss {
            LossKind::Square => rng.gen_range(-2.0..2.0),
            LossKind::Hinge => {
                if rng.gen_bool(0.5) {
                    1.0
                } else {
                    -1.0
                }
            }
        })
        .collect();
    Case { net, xs, ys, loss }
}

pub struct FdReport {
    pub max_rel_err: f64,
    pub checked: usize,
    pub skipped: usize,
}

/// Relative error with a `1e-3` floor on the scale, so that near-zero derivatives are
/// compared at the finite-difference noise level.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

/// Compares the library gradient with central differences of the naive loss.
pub fn fd_check(case: &Case) -> FdReport {
    let arch = case.net.architecture();
    let dims = dims_of(arch);
    let clamp = arch.output_clamp();
    let (_, grad) = case
        .net
        .loss_and_gradient(&case.xs, &case.ys, case.loss)
        .unwrap();
    let base = case.net.flatten().to_vec();
    let (_, k0) = naive_mean_loss(&dims, &base, clamp, &case.xs, &case.ys, case.loss);
    let mut report = FdReport {
        max_rel_err: 0.0,
        checked: 0,
        skipped: 0,
    };
    let mut p = base.clone();
    for k in 0..base.len() {
        p[k] = base[k] + FD_STEP;
        let (lp, kp) = naive_mean_loss(&dims, &p, clamp, &case.xs, &case.ys, case.loss);
        p[k] = base[k] - FD_STEP;
        let (lm, km) = naive_mean_loss(&dims, &p, clamp, &case.xs, &case.ys, case.loss);
        p[k] = base[k];
        let near_kink = k0
            .iter()
            .zip(&kp)
            .zip(&km)
            .any(|((&a, &b), &c)| {
                a.abs() <= KINK_TOL
                    || b.abs() <= KINK_TOL
                    || c.abs() <= KINK_TOL
                    || a.signum() != b.signum()
                    || a.signum() != c.signum()
            });
        if near_kink {
            report.skipped += 1;
            continue;
        }
        let fd = (lp - lm) / (2.0 * FD_STEP);
        report.max_rel_err = report.max_rel_err.max(rel_err(grad[k], fd));
        report.checked += 1;
    }
    report
}
