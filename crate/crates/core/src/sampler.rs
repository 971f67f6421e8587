//! Seeded random generators for the property and verification suites:
//! channels, ratio-capped channels, anchored laws, mean-one scalar laws,
//! interior base points, and alternative orthonormal bases.
//!
//! Everything samples through an explicit RNG, so verification runs are
//! reproducible from a seed.

use rand::Rng;

use crate::channel::{anchor_in, Channel, ScalarLaw};
use crate::error::Result;
use crate::linalg::{dot, Mat};
use crate::scalar::Scalar;
use crate::simplex::{AnchoredLaw, SimplexBasis, Template};

/// A point of the probability simplex with `k` coordinates, sampled from
/// the flat Dirichlet via normalized exponentials.
pub fn random_simplex_point<T: Scalar>(k: usize, rng: &mut impl Rng) -> Vec<T> {
    let mut v: Vec<f64> = (0..k)
        .map(|_| -(1.0 - rng.gen::<f64>()).ln().max(1e-12))
        .collect();
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    v.into_iter().map(T::of).collect()
}

/// A random row-stochastic channel with strictly positive entries.
pub fn random_channel<T: Scalar>(d: usize, k: usize, rng: &mut impl Rng) -> Channel<T> {
    let rows = (0..d).map(|_| random_simplex_point(k, rng)).collect();
    Channel::new(rows).expect("sampled rows are stochastic")
}

/// A random channel whose pairwise row ratios are capped at `e^eps0`:
/// entries are a common column profile scaled by per-cell factors in
/// `[1, e^{eps0/2}]`, then row-normalized (normalizers also stay within
/// that band, so ratios stay within `e^eps0`).
pub fn random_ldp_channel<T: Scalar>(
    d: usize,
    k: usize,
    eps0: f64,
    rng: &mut impl Rng,
) -> Channel<T> {
    let base = random_simplex_point::<f64>(k, rng);
    let half = (eps0 / 2.0).exp();
    let rows: Vec<Vec<T>> = (0..d)
        .map(|_| {
            let raw: Vec<f64> = base
                .iter()
                .map(|&b| b * (1.0 + rng.gen::<f64>() * (half - 1.0)))
                .collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|x| T::of(x / total)).collect()
        })
        .collect();
    Channel::new(rows).expect("sampled rows are stochastic")
}

/// A random anchored law with `k` support columns (the anchor of a random
/// channel, so the mean-zero constraint holds by construction).
pub fn random_law<T: Scalar>(
    basis: &SimplexBasis<T>,
    k: usize,
    rng: &mut impl Rng,
) -> Result<AnchoredLaw<T>> {
    let channel = random_channel::<T>(basis.d(), k, rng);
    anchor_in(&channel, basis).map(|(law, _)| law)
}

/// A random eps0-capped anchored law.
pub fn random_ldp_law<T: Scalar>(
    basis: &SimplexBasis<T>,
    k: usize,
    eps0: f64,
    rng: &mut impl Rng,
) -> Result<AnchoredLaw<T>> {
    let channel = random_ldp_channel::<T>(basis.d(), k, eps0, rng);
    anchor_in(&channel, basis).map(|(law, _)| law)
}

/// A random base point with all barycentric coordinates at least `floor`.
pub fn random_interior_base<T: Scalar>(
    basis: &SimplexBasis<T>,
    floor: f64,
    rng: &mut impl Rng,
) -> Vec<T> {
    let d = basis.d();
    let dir = random_simplex_point::<f64>(d, rng);
    let scale = 1.0 - d as f64 * floor;
    let theta: Vec<T> = dir.iter().map(|&w| T::of(floor + scale * w)).collect();
    basis
        .composition_base(&theta)
        .expect("floored composition is valid")
}

/// A random mean-one law supported in `[e^-eps0, e^eps0]` that is not the
/// endpoint two-point law: a mixture of the endpoint law with interior
/// mass, or a three-point law with an interior atom.
pub fn random_feasible_lr_law<T: Scalar>(eps0: f64, rng: &mut impl Rng) -> ScalarLaw<T> {
    let a = (-eps0).exp();
    let b = eps0.exp();
    if rng.gen::<bool>() {
        // Endpoint mixture with mass tau pulled to the mean.
        let tau = 0.1 + 0.8 * rng.gen::<f64>();
        let w_lo = (1.0 - tau) * (b - 1.0) / (b - a);
        let w_hi = (1.0 - tau) * (1.0 - a) / (b - a);
        ScalarLaw::new(vec![
            (T::of(w_lo), T::of(a)),
            (T::of(tau), T::one()),
            (T::of(w_hi), T::of(b)),
        ])
        .expect("mixture weights are positive")
    } else {
        // Three points a < c < b with an interior atom of mass >= 0.1.
        let c = a + (0.15 + 0.7 * rng.gen::<f64>()) * (b - a);
        let wc = 0.1 + 0.5 * rng.gen::<f64>();
        // Solve w_a + w_b = 1 - wc, a w_a + b w_b = 1 - wc c.
        let rest = 1.0 - wc;
        let target = 1.0 - wc * c;
        let w_b = (target - a * rest) / (b - a);
        let w_a = rest - w_b;
        if w_a <= 1e-6 || w_b <= 1e-6 {
            return random_feasible_lr_law(eps0, rng);
        }
        ScalarLaw::new(vec![
            (T::of(w_a), T::of(a)),
            (T::of(wc), T::of(c)),
            (T::of(w_b), T::of(b)),
        ])
        .expect("solved weights are positive")
    }
}

/// A uniformly random orthonormal basis of the zero-sum subspace:
/// the canonical basis rotated by a Gram-Schmidt-orthonormalized
/// Gaussian matrix.
pub fn random_orthonormal_basis<T: Scalar>(d: usize, rng: &mut impl Rng) -> Result<SimplexBasis<T>> {
    let canonical = SimplexBasis::<T>::new(d)?;
    let m = d - 1;
    // Gaussian entries via Box-Muller.
    let mut q: Vec<Vec<T>> = (0..m)
        .map(|_| {
            (0..m)
                .map(|_| {
                    let u1: f64 = (1.0 - rng.gen::<f64>()).max(1e-12);
                    let u2: f64 = rng.gen();
                    T::of((-2.0 * u1.ln()).sqrt() * (2.0 * core::f64::consts::PI * u2).cos())
                })
                .collect()
        })
        .collect();
    // Gram-Schmidt on the columns of q (stored as rows here).
    for i in 0..m {
        for j in 0..i {
            let proj = dot(&q[i], &q[j]);
            for k in 0..m {
                let v = q[j][k];
                q[i][k] = q[i][k] - proj * v;
            }
        }
        let norm = dot(&q[i], &q[i]).sqrt();
        if norm < T::of(1e-6) {
            // Degenerate draw; retry.
            return random_orthonormal_basis(d, rng);
        }
        for k in 0..m {
            q[i][k] = q[i][k] / norm;
        }
    }
    // H' = H Q with Q orthogonal.
    let mut h = Mat::zeros(d, m);
    for r in 0..d {
        for c in 0..m {
            let mut acc = T::zero();
            for k in 0..m {
                acc = acc + canonical.matrix()[(r, k)] * q[c][k];
            }
            h[(r, c)] = acc;
        }
    }
    SimplexBasis::from_matrix(h)
}

/// A random template with `levels >= 3` distinct values whose max/min
/// ratio is at most `max_ratio` and whose adjacent levels are separated
/// by at least a factor `1.1`.
pub fn random_multilevel_template<T: Scalar>(
    d: usize,
    levels: usize,
    max_ratio: f64,
    rng: &mut impl Rng,
) -> Template<T> {
    let levels = levels.clamp(3, d);
    loop {
        // Level values: log-uniform in [1, max_ratio], forced apart.
        let mut vals: Vec<f64> = (0..levels)
            .map(|_| (rng.gen::<f64>() * max_ratio.ln()).exp())
            .collect();
        vals.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let separated = vals.windows(2).all(|w| w[0] / w[1] >= 1.1);
        if !separated {
            continue;
        }
        // Multiplicities: each level at least once.
        let mut mult = vec![1usize; levels];
        for _ in 0..d - levels {
            mult[rng.gen_range(0..levels)] += 1;
        }
        let mut coords = Vec::with_capacity(d);
        for (v, &m) in vals.iter().zip(&mult) {
            coords.extend(std::iter::repeat(*v).take(m));
        }
        let total: f64 = coords.iter().sum();
        let scale = d as f64 / total;
        let coords: Vec<T> = coords.into_iter().map(|v| T::of(v * scale)).collect();
        return Template::new(coords).expect("scaled coordinates are a template");
    }
}
