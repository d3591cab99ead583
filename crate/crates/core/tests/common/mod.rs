#![allow(dead_code)]

use msiq::gibbs::{log_collapsed_joint, ChainState, Hyperparameters};
use msiq::read_model::GeneratingMatrix;
use msiq::special::ln_gamma;
use rand::Rng;

/// Random generating matrix with at least one positive entry per row.
pub fn random_matrix<R: Rng>(n_reads: usize, n_iso: usize, rng: &mut R) -> GeneratingMatrix {
    let rows: Vec<Vec<f64>> = (0..n_reads)
        .map(|_| loop {
            let row: Vec<f64> = (0..n_iso)
                .map(|_| if rng.random::<f64>() < 0.3 { 0.0 } else { rng.random_range(0.01..1.0) })
                .collect();
            if row.iter().any(|&v| v > 0.0) {
                break row;
            }
        })
        .collect();
    GeneratingMatrix::from_rows(n_iso, &rows).unwrap()
}

/// A chain state whose assignments all have positive h.
pub fn random_state<R: Rng>(h: &[GeneratingMatrix], rng: &mut R) -> ChainState {
    let z = h
        .iter()
        .map(|m| {
            (0..m.n_reads())
                .map(|i| {
                    let support: Vec<usize> = (0..m.n_isoforms()).filter(|&j| m.get(i, j) > 0.0).collect();
                    support[rng.random_range(0..support.len())]
                })
                .collect()
        })
        .collect();
    ChainState {
        z,
        e: (0..h.len()).map(|_| rng.random::<bool>()).collect(),
        gamma: rng.random_range(0.05..0.95),
    }
}

pub fn random_hyper<R: Rng>(n_iso: usize, rng: &mut R) -> Hyperparameters {
    Hyperparameters {
        lambda: (0..n_iso).map(|_| rng.random_range(0.5..2.5)).collect(),
        ..Hyperparameters::symmetric(n_iso, 1.0, rng.random_range(0.5..3.0), rng.random_range(0.5..3.0))
    }
}

/// `P(E_d = 1 | rest)` from two evaluations of the joint.
pub fn e_probability_by_ratio(
    state: &ChainState,
    d: usize,
    h: &[GeneratingMatrix],
    hyper: &Hyperparameters,
) -> f64 {
    let mut s = state.clone();
    s.e[d] = true;
    let l1 = log_collapsed_joint(&s, h, hyper).unwrap();
    s.e[d] = false;
    let l0 = log_collapsed_joint(&s, h, hyper).unwrap();
    1.0 / (1.0 + (l0 - l1).exp())
}

/// Distribution of `Z[d][i]` from the joint evaluated at every origin.
pub fn z_distribution_by_ratio(
    state: &ChainState,
    d: usize,
    i: usize,
    h: &[GeneratingMatrix],
    hyper: &Hyperparameters,
) -> Vec<f64> {
    let n_iso = h[d].n_isoforms();
    let mut s = state.clone();
    let logs: Vec<Option<f64>> = (0..n_iso)
        .map(|j| {
            (h[d].get(i, j) > 0.0).then(|| {
                s.z[d][i] = j;
                log_collapsed_joint(&s, h, hyper).unwrap()
            })
        })
        .collect();
    let max = logs.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| l.map_or(0.0, |l| (l - max).exp())).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|v| v / total).collect()
}

/// Tanh-sinh nodes on (0, 1) as `(x, 1 - x, weight)`.
pub fn tanh_sinh_nodes(step: f64, t_max: f64) -> Vec<(f64, f64, f64)> {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let n = (t_max / step).round() as i64;
    (-n..=n)
        .map(|k| {
            let t = k as f64 * step;
            let s = half_pi * t.sinh();
            let x = 1.0 / (1.0 + (-2.0 * s).exp());
            let xc = 1.0 / (1.0 + (2.0 * s).exp());
            let w = step * std::f64::consts::PI * t.cosh() * x * xc;
            (x, xc, w)
        })
        .filter(|&(x, xc, w)| x > 0.0 && xc > 0.0 && w > 0.0)
        .collect()
}

/// Integral over `[0, 1]^dims` of `f` by a product tanh-sinh rule. `f`
/// receives each coordinate together with its complement.
pub fn integrate_cube(dims: usize, nodes: &[(f64, f64, f64)], f: &mut dyn FnMut(&[(f64, f64)]) -> f64) -> f64 {
    fn rec(
        level: usize,
        point: &mut Vec<(f64, f64)>,
        weight: f64,
        nodes: &[(f64, f64, f64)],
        dims: usize,
        f: &mut dyn FnMut(&[(f64, f64)]) -> f64,
    ) -> f64 {
        if level == dims {
            return weight * f(point);
        }
        let mut acc = 0.0;
        for &(x, xc, w) in nodes {
            point.push((x, xc));
            acc += rec(level + 1, point, weight * w, nodes, dims, f);
            point.pop();
        }
        acc
    }
    rec(0, &mut Vec::with_capacity(dims), 1.0, nodes, dims, f)
}

/// Maps `J - 1` unit coordinates to a point on the simplex by stick
/// breaking; returns the log of every component and the log Jacobian.
pub fn stick_break(u: &[(f64, f64)]) -> (Vec<f64>, f64) {
    let mut ln_p = Vec::with_capacity(u.len() + 1);
    let mut ln_rest = 0.0;
    let mut ln_jac = 0.0;
    for &(x, xc) in u {
        ln_p.push(ln_rest + x.ln());
        ln_jac += ln_rest;
        ln_rest += xc.ln();
    }
    ln_p.push(ln_rest);
    (ln_p, ln_jac)
}

pub fn ln_dirichlet_density(ln_p: &[f64], lambda: &[f64]) -> f64 {
    let norm = lambda.iter().map(|&l| ln_gamma(l)).sum::<f64>() - ln_gamma(lambda.iter().sum());
    lambda.iter().zip(ln_p).map(|(l, lp)| (l - 1.0) * lp).sum::<f64>() - norm
}

/// `P(R, Z, E, gamma)` with every proportion vector integrated out by brute
/// force: the shared vector, plus one per sample outside the group. With
/// `over_gamma` the group probability is integrated as well, giving
/// `P(R, Z, E)`.
pub fn brute_force_joint(
    state: &ChainState,
    h: &[GeneratingMatrix],
    hyper: &Hyperparameters,
    nodes: &[(f64, f64, f64)],
    over_gamma: bool,
) -> f64 {
    let n_iso = hyper.lambda.len();
    let outside: Vec<usize> = (0..h.len()).filter(|&d| !state.e[d]).collect();
    let blocks = 1 + outside.len();
    let simplex_dims = blocks * (n_iso - 1);
    let dims = simplex_dims + over_gamma as usize;
    let ln_h: f64 = state
        .z
        .iter()
        .zip(h)
        .map(|(zs, m)| zs.iter().enumerate().map(|(i, &z)| m.get(i, z).ln()).sum::<f64>())
        .sum();
    let n_in = state.e.iter().filter(|&&e| e).count() as f64;
    let n_out = h.len() as f64 - n_in;
    let ln_beta_ab = ln_gamma(hyper.a) + ln_gamma(hyper.b) - ln_gamma(hyper.a + hyper.b);
    let ln_gamma_part = |g: f64, gc: f64| {
        (hyper.a - 1.0 + n_in) * g.ln() + (hyper.b - 1.0 + n_out) * gc.ln() - ln_beta_ab
    };

    let mut f = |u: &[(f64, f64)]| {
        let mut total = if over_gamma {
            let (g, gc) = u[simplex_dims];
            ln_gamma_part(g, gc)
        } else {
            ln_gamma_part(state.gamma, 1.0 - state.gamma)
        };
        for (b, chunk) in u[..simplex_dims].chunks(n_iso - 1).enumerate() {
            let (ln_p, ln_jac) = stick_break(chunk);
            total += ln_jac + ln_dirichlet_density(&ln_p, &hyper.lambda);
            let members: Vec<usize> = if b == 0 {
                (0..h.len()).filter(|&d| state.e[d]).collect()
            } else {
                vec![outside[b - 1]]
            };
            for d in members {
                total += state.z[d].iter().map(|&z| ln_p[z]).sum::<f64>();
            }
        }
        total.exp()
    };
    integrate_cube(dims, nodes, &mut f) * ln_h.exp()
}
