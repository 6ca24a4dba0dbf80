//! Independent numerical oracles for the library's spectral and gradient code.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;

use cocol_core::inner_solvers::MinibatchSampler;
use cocol_core::objectives::{make_synthetic_classification, mlp_oracle, softmax_oracle, Activation, Objective};
use cocol_core::rng::{stream, Purpose};
use cocol_core::topology::{algebraic_connectivity, build_complete, build_path, build_ring, build_star, build_with_connectivity, laplacian, metropolis_weights, spectral_gap};

/// Cyclic Jacobi rotations for a symmetric matrix; eigenvalues ascending.
fn jacobi_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[(i, j)].powi(2)).sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[test]
fn fiedler_values_of_named_graphs() {
    for n in [3usize, 5, 8, 13] {
        let ring = algebraic_connectivity(&build_ring(n).unwrap());
        assert!((ring - (2.0 - 2.0 * (2.0 * PI / n as f64).cos())).abs() < 1e-10);
        let path = algebraic_connectivity(&build_path(n).unwrap());
        assert!((path - (2.0 - 2.0 * (PI / n as f64).cos())).abs() < 1e-10);
        assert!((algebraic_connectivity(&build_complete(n).unwrap()) - n as f64).abs() < 1e-10);
        assert!((algebraic_connectivity(&build_star(n).unwrap()) - 1.0).abs() < 1e-10);
    }
}

#[test]
fn spectral_queries_match_jacobi() {
    for seed in 0..10u64 {
        let g = build_with_connectivity(12, 1.5, 0.2, seed).unwrap();
        let lap = jacobi_eigenvalues(&laplacian(&g));
        assert!((algebraic_connectivity(&g) - lap[1]).abs() < 1e-9);
        let w = metropolis_weights(&g).unwrap();
        let mut mags: Vec<f64> = jacobi_eigenvalues(w.dense()).iter().map(|v| v.abs()).collect();
        mags.sort_by(|a, b| b.total_cmp(a));
        assert!((spectral_gap(&w) - mags[1]).abs() < 1e-9);
    }
}

#[test]
fn ring_four_metropolis_second_singular_value() {
    // eigenvalues of the ring-4 Metropolis matrix are 1, 1/3, 1/3, -1/3
    let w = metropolis_weights(&build_ring(4).unwrap()).unwrap();
    assert!((spectral_gap(&w) - 1.0 / 3.0).abs() < 1e-12);
}

fn fd_gradient(o: &dyn Objective, theta: &[f64], h: f64) -> Vec<f64> {
    let mut x = theta.to_vec();
    (0..theta.len())
        .map(|k| {
            x[k] = theta[k] + h;
            let up = o.full_loss(&x);
            x[k] = theta[k] - h;
            let down = o.full_loss(&x);
            x[k] = theta[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    num / den.max(1e-12)
}

#[test]
fn finite_differences_softmax_and_mlp() {
    let ds = Arc::new(make_synthetic_classification(4, 3, 8, 1.0, 3).unwrap());
    let softmax = softmax_oracle(ds.clone(), 0.05).unwrap();
    let tanh = mlp_oracle(ds.clone(), 4, Activation::Tanh, 3).unwrap();
    let relu = mlp_oracle(ds, 4, Activation::Relu, 3).unwrap();
    for i in 0..10 {
        let p = |dim: usize| (0..dim).map(|k| ((i * 31 + k) as f64 * 0.713).sin()).collect::<Vec<f64>>();
        let t = p(softmax.dim());
        assert!(rel_err(&softmax.full_grad(&t), &fd_gradient(&softmax, &t, 1e-5)) < 1e-6);
        let t = p(tanh.dim());
        assert!(rel_err(&tanh.full_grad(&t), &fd_gradient(&tanh, &t, 1e-5)) < 1e-4);
        // kinks are measure zero; a small step keeps them out of the stencil
        let t = p(relu.dim());
        assert!(rel_err(&relu.full_grad(&t), &fd_gradient(&relu, &t, 1e-7)) < 1e-4);
    }
}

#[test]
fn minibatch_epoch_covers_every_sample_once() {
    let n = 48;
    let b = 8;
    let mut sampler = MinibatchSampler::new(stream(5, Purpose::Minibatch, 0));
    for _ in 0..3 {
        let mut seen = HashSet::new();
        for _ in 0..n / b {
            for i in sampler.next_batch(n, b).unwrap() {
                assert!(seen.insert(i));
            }
        }
        assert_eq!(seen.len(), n);
    }
    assert!(sampler.next_batch(n, 0).is_none());
    assert!(sampler.next_batch(n, n).is_none());
}

#[test]
fn epoch_of_minibatch_gradients_averages_to_full_gradient() {
    let ds = Arc::new(make_synthetic_classification(3, 4, 16, 1.5, 9).unwrap());
    let o = softmax_oracle(ds, 0.01).unwrap();
    let theta: Vec<f64> = (0..o.dim()).map(|k| (k as f64 * 0.3).cos()).collect();
    let n = o.num_samples();
    let b = 6;
    assert_eq!(n % b, 0);
    let mut sampler = MinibatchSampler::new(stream(1, Purpose::Minibatch, 2));
    let mut acc = vec![0.0; o.dim()];
    for _ in 0..n / b {
        let batch = sampler.next_batch(n, b).unwrap();
        for (a, g) in acc.iter_mut().zip(o.stochastic_grad(&theta, &batch)) {
            *a += g / (n / b) as f64;
        }
    }
    let full = o.full_grad(&theta);
    assert!(acc.iter().zip(&full).all(|(a, f)| (a - f).abs() < 1e-12));
}
