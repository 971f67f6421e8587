//! Canonical mechanism design under the pairwise chi-square budget.
//!
//! The covariance `Sigma(rho) = E[x x']` calibrates the unbiased affine
//! estimator `1/d + H Sigma^{-1} Xbar`, whose exact i.i.d. and
//! fixed-composition risks are finite sums over atoms. The directed
//! pairwise chi-square budget `chi*` caps the trace of the covariance
//! through the sharp inequality `tr Sigma <= K_d chi*` with
//! `K_d = d(d-1)/(d + 2 sqrt(d-1))`, attained by augmented randomized
//! response at the tuned level ratio `sqrt(d-1)`. Above the tangency
//! budget the frontier is the upper concave envelope of the two-level
//! orbit curve, realized by mixtures of at most two orbit laws.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution};

use crate::channel::{ldp_check, LdpReport, ScalarLaw};
use crate::error::{Error, Result};
use crate::linalg::{dot, ksum, sym_apply, sym_eigen, Accum, Mat};
use crate::scalar::Scalar;
use crate::simplex::{orbit_law, AnchoredLaw, Atom, SimplexBasis, Template};

/// Eigenvalue floor deciding covariance singularity.
pub fn singularity_floor<T: Scalar>() -> T {
    T::tol_exact()
}

/// Covariance and per-row second-moment matrices of a law.
#[derive(Clone, Debug)]
pub struct MomentStats<T> {
    pub sigma: Mat<T>,
    pub b_rows: Vec<Mat<T>>,
    pub trace: T,
    pub min_eigenvalue: T,
    pub singular: bool,
    eigvals: Vec<T>,
    eigvecs: Mat<T>,
}

impl<T: Scalar> MomentStats<T> {
    /// `Sigma^{-1}`, or `None` when singular.
    pub fn inverse(&self) -> Option<Mat<T>> {
        if self.singular {
            return None;
        }
        Some(sym_apply(&self.eigvals, &self.eigvecs, |l| T::one() / l))
    }

    /// `Sigma^{-2}`, or `None` when singular.
    pub fn inverse_sq(&self) -> Option<Mat<T>> {
        if self.singular {
            return None;
        }
        Some(sym_apply(&self.eigvals, &self.eigvecs, |l| {
            T::one() / (l * l)
        }))
    }

    pub fn trace_inverse(&self) -> T {
        if self.singular {
            return T::infinity();
        }
        ksum(self.eigvals.iter().map(|&l| T::one() / l))
    }
}

/// Exact finite sums `Sigma = sum w x x'` and
/// `B_i = sum w (1 + gamma_i . x) x x'`.
pub fn moment_stats<T: Scalar>(law: &AnchoredLaw<T>) -> MomentStats<T> {
    let basis = law.basis();
    let dim = basis.dim();
    let d = basis.d();
    let mut sigma_acc = vec![Accum::new(); dim * dim];
    let mut b_accs: Vec<Vec<Accum<T>>> = vec![vec![Accum::new(); dim * dim]; d];
    for atom in law.atoms() {
        let w = atom.weight;
        let x = &atom.point;
        let tilts: Vec<T> = (0..d).map(|i| T::one() + dot(basis.gamma(i), x)).collect();
        for r in 0..dim {
            for c in r..dim {
                let v = w * x[r] * x[c];
                sigma_acc[r * dim + c].add(v);
                for (i, &tilt) in tilts.iter().enumerate() {
                    b_accs[i][r * dim + c].add(v * tilt);
                }
            }
        }
    }
    let mut sigma = Mat::zeros(dim, dim);
    let mut b_rows: Vec<Mat<T>> = (0..d).map(|_| Mat::zeros(dim, dim)).collect();
    for r in 0..dim {
        for c in r..dim {
            let v = sigma_acc[r * dim + c].value();
            sigma[(r, c)] = v;
            sigma[(c, r)] = v;
            for (i, b) in b_rows.iter_mut().enumerate() {
                let bv = b_accs[i][r * dim + c].value();
                b[(r, c)] = bv;
                b[(c, r)] = bv;
            }
        }
    }
    let (eigvals, eigvecs) = sym_eigen(&sigma);
    let min_eigenvalue = eigvals.first().copied().unwrap_or_else(T::zero);
    let trace = sigma.trace();
    MomentStats {
        singular: min_eigenvalue < singularity_floor::<T>(),
        sigma,
        b_rows,
        trace,
        min_eigenvalue,
        eigvals,
        eigvecs,
    }
}

/// The directed pairwise chi-square matrix and its maximum.
#[derive(Clone, Debug)]
pub struct ChiStar<T> {
    /// `chi_ij = sum_atoms w (a_j - a_i)^2 / a_i` in the extended-real
    /// sense (`0/0 = 0`, `c/0 = +inf`); diagonal zero.
    pub pairs: Mat<T>,
    /// Maximum over ordered pairs; `+inf` disqualifies the law from every
    /// finite budget.
    pub value: T,
}

pub fn chi_star<T: Scalar>(law: &AnchoredLaw<T>) -> ChiStar<T> {
    let d = law.d();
    let templates = law.templates();
    let mut pairs = Mat::zeros(d, d);
    let mut value = T::zero();
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            let mut acc = Accum::new();
            let mut infinite = false;
            for (atom, t) in law.atoms().iter().zip(&templates) {
                let ai = t.coords()[i];
                let aj = t.coords()[j];
                let diff = aj - ai;
                if ai == T::zero() {
                    if diff != T::zero() {
                        infinite = true;
                        break;
                    }
                } else {
                    acc.add(atom.weight * diff * diff / ai);
                }
            }
            let v = if infinite { T::infinity() } else { acc.value() };
            pairs[(i, j)] = v;
            value = value.max(v);
        }
    }
    ChiStar { pairs, value }
}

fn check_composition<T: Scalar>(theta: &[T], d: usize) -> Result<()> {
    if theta.len() != d {
        return Err(Error::InvalidComposition("wrong length".into()));
    }
    let sum = ksum(theta.iter().copied());
    if (sum - T::one()).abs() > T::tol_tight() || theta.iter().any(|&t| t < -T::tol_tight()) {
        return Err(Error::InvalidComposition(format!("sums to {sum}")));
    }
    Ok(())
}

/// Exact fixed-composition risk of the canonical estimator:
/// `(1/n) sum_i theta_i [tr(Sigma^{-1} B_i Sigma^{-1}) - (d-1)/d]`.
/// Requires integer counts `n theta_i`; `+inf` for singular covariance.
pub fn risk_fc<T: Scalar>(law: &AnchoredLaw<T>, theta: &[T], n: usize) -> Result<T> {
    let d = law.d();
    check_composition(theta, d)?;
    let n_t = T::from_usize(n).unwrap();
    for &t in theta {
        let count = t * n_t;
        if (count - count.round()).abs() > T::tol_member() {
            return Err(Error::InvalidComposition(format!(
                "n theta_i = {count} is not an integer"
            )));
        }
    }
    let stats = moment_stats(law);
    Ok(risk_fc_with(&stats, theta, n, d))
}

/// [`risk_fc`] against precomputed moments (no composition re-validation).
pub fn risk_fc_with<T: Scalar>(stats: &MomentStats<T>, theta: &[T], n: usize, d: usize) -> T {
    let Some(inv) = stats.inverse() else {
        return T::infinity();
    };
    let n_t = T::from_usize(n).unwrap();
    let d_t = T::from_usize(d).unwrap();
    let vertex_term = (d_t - T::one()) / d_t;
    let mut acc = Accum::new();
    for (i, &t) in theta.iter().enumerate() {
        if t == T::zero() {
            continue;
        }
        let m = inv.matmul(&stats.b_rows[i]).matmul(&inv);
        acc.add(t * (m.trace() - vertex_term));
    }
    acc.value() / n_t
}

/// Exact i.i.d. risk of the canonical estimator:
/// `(1/n) E_rho[(1 + h_theta . x) x' Sigma^{-2} x] - |h_theta|^2 / n`.
pub fn risk_iid<T: Scalar>(law: &AnchoredLaw<T>, theta: &[T], n: usize) -> Result<T> {
    check_composition(theta, law.d())?;
    let stats = moment_stats(law);
    risk_iid_with(law, &stats, theta, n)
}

pub fn risk_iid_with<T: Scalar>(
    law: &AnchoredLaw<T>,
    stats: &MomentStats<T>,
    theta: &[T],
    n: usize,
) -> Result<T> {
    let Some(inv2) = stats.inverse_sq() else {
        return Ok(T::infinity());
    };
    let h = law.basis().composition_base(theta)?;
    let n_t = T::from_usize(n).unwrap();
    let mut acc = Accum::new();
    for atom in law.atoms() {
        let tilt = T::one() + dot(&h, &atom.point);
        acc.add(atom.weight * tilt * inv2.quad_form(&atom.point));
    }
    Ok((acc.value() - dot(&h, &h)) / n_t)
}

/// Worst-case fixed-composition risk: the maximum over vertex
/// compositions (the risk is affine in the composition).
pub fn sup_risk_fc<T: Scalar>(law: &AnchoredLaw<T>, n: usize) -> T {
    let d = law.d();
    let stats = moment_stats(law);
    let mut worst = -T::infinity();
    for i in 0..d {
        let mut theta = vec![T::zero(); d];
        theta[i] = T::one();
        worst = worst.max(risk_fc_with(&stats, &theta, n, d));
    }
    worst
}

/// Worst-case i.i.d. risk of an exchangeable law: attained at the uniform
/// composition, `(1/n) tr Sigma^{-1}`.
pub fn sup_risk_iid_exchangeable<T: Scalar>(stats: &MomentStats<T>, n: usize) -> T {
    if stats.singular {
        return T::infinity();
    }
    stats.trace_inverse() / T::from_usize(n).unwrap()
}

/// Grid search for the worst i.i.d. composition of a general law. The
/// value is a lower estimate of the supremum; for exchangeable laws the
/// uniform composition is exact and the grid is unnecessary.
pub fn sup_risk_iid_grid<T: Scalar>(
    law: &AnchoredLaw<T>,
    n: usize,
    resolution: usize,
) -> Result<(T, Vec<T>)> {
    let d = law.d();
    let stats = moment_stats(law);
    if stats.singular {
        return Ok((
            T::infinity(),
            vec![T::one() / T::from_usize(d).unwrap(); d],
        ));
    }
    let mut best = -T::infinity();
    let mut best_theta = vec![T::zero(); d];
    let res_t = T::from_usize(resolution).unwrap();
    let mut counts = vec![0usize; d];
    let mut stack: Vec<(usize, usize)> = Vec::new();
    // Iterative enumeration of compositions of `resolution` into d parts.
    stack.push((0, resolution));
    let mut theta_buf = vec![T::zero(); d];
    enumerate_counts(&mut counts, 0, resolution, &mut |c: &[usize]| {
        for (t, &k) in theta_buf.iter_mut().zip(c) {
            *t = T::from_usize(k).unwrap() / res_t;
        }
        let r = risk_iid_with(law, &stats, &theta_buf, n)?;
        if r > best {
            best = r;
            best_theta.copy_from_slice(&theta_buf);
        }
        Ok(())
    })?;
    drop(stack);
    Ok((best, best_theta))
}

fn enumerate_counts(
    counts: &mut Vec<usize>,
    idx: usize,
    remaining: usize,
    visit: &mut impl FnMut(&[usize]) -> Result<()>,
) -> Result<()> {
    if idx + 1 == counts.len() {
        counts[idx] = remaining;
        return visit(counts);
    }
    for c in 0..=remaining {
        counts[idx] = c;
        enumerate_counts(counts, idx + 1, remaining - c, visit)?;
    }
    Ok(())
}

/// Sampling model for the Monte Carlo check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplingModel {
    /// Users draw inputs i.i.d. from the composition.
    Iid,
    /// Exactly `n theta_i` users hold input `i`.
    FixedComposition,
}

/// Monte Carlo estimate of the canonical-estimator squared error:
/// simulates `samples` replicates of `n` users and returns the empirical
/// mean squared error with its standard error. Deterministic given the
/// seed. Sampling runs in `f64` internally.
pub fn simulate_risk<T: Scalar>(
    law: &AnchoredLaw<T>,
    theta: &[T],
    n: usize,
    samples: usize,
    seed: u64,
    model: SamplingModel,
) -> Result<(T, T)> {
    let d = law.d();
    check_composition(theta, d)?;
    let stats = moment_stats(law);
    if stats.singular {
        return Err(Error::SingularCovariance);
    }
    let inv = stats.inverse().expect("nonsingular");
    let h = law.basis().composition_base(theta)?;
    let dim = law.basis().dim();
    let atom_count = law.len();
    let row_probs: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            law.atoms()
                .iter()
                .map(|a| {
                    (a.weight * (T::one() + dot(law.basis().gamma(i), &a.point)))
                        .to_f64()
                        .unwrap()
                        .max(0.0)
                })
                .collect()
        })
        .collect();
    let counts_per_row: Vec<usize> = if model == SamplingModel::FixedComposition {
        let n_t = T::from_usize(n).unwrap();
        theta
            .iter()
            .map(|&t| {
                let c = t * n_t;
                if (c - c.round()).abs() > T::tol_member() {
                    return Err(Error::InvalidComposition(format!(
                        "n theta_i = {c} is not an integer"
                    )));
                }
                Ok(c.round().to_usize().unwrap())
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let mixture_probs: Vec<f64> = if model == SamplingModel::Iid {
        let th: Vec<f64> = theta.iter().map(|t| t.to_f64().unwrap()).collect();
        (0..atom_count)
            .map(|k| {
                (0..d)
                    .map(|i| th[i] * row_probs[i][k])
                    .sum::<f64>()
                    .max(0.0)
            })
            .collect()
    } else {
        Vec::new()
    };
    let points: Vec<Vec<f64>> = law
        .atoms()
        .iter()
        .map(|a| a.point.iter().map(|v| v.to_f64().unwrap()).collect())
        .collect();
    let inv_f: Vec<Vec<f64>> = (0..dim)
        .map(|r| (0..dim).map(|c| inv[(r, c)].to_f64().unwrap()).collect())
        .collect();
    let h_f: Vec<f64> = h.iter().map(|v| v.to_f64().unwrap()).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut hist = vec![0u64; atom_count];
    let mut mean_acc = Accum::<f64>::new();
    let mut sq_acc = Accum::<f64>::new();
    let n_f = n as f64;
    for _ in 0..samples {
        hist.iter_mut().for_each(|c| *c = 0);
        match model {
            SamplingModel::Iid => {
                sample_multinomial(&mut rng, n as u64, &mixture_probs, &mut hist);
            }
            SamplingModel::FixedComposition => {
                for (i, &c) in counts_per_row.iter().enumerate() {
                    if c > 0 {
                        sample_multinomial(&mut rng, c as u64, &row_probs[i], &mut hist);
                    }
                }
            }
        }
        let mut err = 0.0f64;
        let mut xbar = vec![0.0f64; dim];
        for (k, &c) in hist.iter().enumerate() {
            if c > 0 {
                let cf = c as f64;
                for (j, xb) in xbar.iter_mut().enumerate() {
                    *xb += cf * points[k][j];
                }
            }
        }
        for xb in &mut xbar {
            *xb /= n_f;
        }
        for (r, row) in inv_f.iter().enumerate() {
            let mut v = 0.0f64;
            for (c, m) in row.iter().enumerate() {
                v += m * xbar[c];
            }
            let delta = v - h_f[r];
            err += delta * delta;
        }
        mean_acc.add(err);
        sq_acc.add(err * err);
    }
    let s = samples as f64;
    let mean = mean_acc.value() / s;
    let var = (sq_acc.value() / s - mean * mean).max(0.0);
    let stderr = (var / s).sqrt();
    Ok((T::of(mean), T::of(stderr)))
}

/// Conditional-binomial multinomial sampler; adds counts into `hist`.
fn sample_multinomial(rng: &mut ChaCha12Rng, n: u64, probs: &[f64], hist: &mut [u64]) {
    let mut remaining = n;
    let mut prob_left: f64 = probs.iter().sum();
    for (k, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            return;
        }
        if k + 1 == probs.len() || prob_left <= p {
            hist[k] += remaining;
            return;
        }
        let ratio = (p / prob_left).clamp(0.0, 1.0);
        let draw = if ratio >= 1.0 {
            remaining
        } else if ratio <= 0.0 {
            0
        } else {
            Binomial::new(remaining, ratio).unwrap().sample(rng)
        };
        hist[k] += draw;
        remaining -= draw;
        prob_left -= p;
    }
    if remaining > 0 {
        *hist.last_mut().unwrap() += remaining;
    }
}

/// Augmented randomized response: mass `1 - p` at the center and `p/d` at
/// each scaled vertex `t_lambda gamma_i` with
/// `t_lambda = d(lambda - 1)/(d + lambda - 1)`.
pub fn augmented_rr<T: Scalar>(d: usize, p: T, lambda: T) -> Result<AnchoredLaw<T>> {
    if lambda <= T::one() || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "level ratio lambda = {lambda} must exceed 1"
        )));
    }
    if p < T::zero() || p > T::one() + T::tol_exact() {
        return Err(Error::InvalidParameter(format!(
            "activation probability p = {p} outside [0, 1]"
        )));
    }
    let basis = SimplexBasis::new(d)?;
    let d_t = T::from_usize(d).unwrap();
    let t = d_t * (lambda - T::one()) / (d_t + lambda - T::one());
    let mut atoms = Vec::with_capacity(d + 1);
    if p < T::one() {
        atoms.push(Atom::new(T::one() - p, vec![T::zero(); basis.dim()]));
    }
    if p > T::zero() {
        let w = p / d_t;
        for i in 0..d {
            atoms.push(Atom::new(
                w,
                basis.gamma(i).iter().map(|&g| g * t).collect(),
            ));
        }
    }
    AnchoredLaw::new(basis, atoms)
}

/// Budget of the singleton two-level orbit at ratio `lambda`:
/// `C_1(lambda) = (lambda-1)^2 (lambda+1) / (lambda (d + lambda - 1))`.
pub fn chi_budget_singleton<T: Scalar>(d: usize, lambda: T) -> T {
    let d_t = T::from_usize(d).unwrap();
    let lm1 = lambda - T::one();
    lm1 * lm1 * (lambda + T::one()) / (lambda * (d_t + lambda - T::one()))
}

/// Tuned level ratio `sqrt(d-1)` of the low-budget optimizer.
pub fn optimal_lambda<T: Scalar>(d: usize) -> T {
    T::from_usize(d - 1).unwrap().sqrt()
}

/// The tangency budget `C*(d) = C_1(sqrt(d-1))`; the trace cap is
/// attained by augmented randomized response exactly up to this budget.
pub fn budget_cap<T: Scalar>(d: usize) -> Result<T> {
    if d < 3 {
        return Err(Error::InvalidDimension { min: 3, got: d });
    }
    Ok(chi_budget_singleton(d, optimal_lambda::<T>(d)))
}

/// `K_d = d(d-1)/(d + 2 sqrt(d-1))`.
pub fn trace_cap_coeff<T: Scalar>(d: usize) -> Result<T> {
    if d < 3 {
        return Err(Error::InvalidDimension { min: 3, got: d });
    }
    let d_t = T::from_usize(d).unwrap();
    let root = (d_t - T::one()).sqrt();
    Ok(d_t * (d_t - T::one()) / (d_t + T::of(2.0) * root))
}

/// The sharp trace bound `K_d C` for laws with `chi* <= C`.
pub fn trace_cap<T: Scalar>(d: usize, c: T) -> Result<T> {
    if c < T::zero() {
        return Err(Error::InvalidParameter(format!("budget {c} negative")));
    }
    Ok(trace_cap_coeff::<T>(d)? * c)
}

/// Slack `K_d chi*(rho) - tr Sigma(rho)`; nonnegative (up to `1e-9`) for
/// every law with `d >= 3`.
pub fn trace_cap_check<T: Scalar>(law: &AnchoredLaw<T>) -> Result<T> {
    let coeff = trace_cap_coeff::<T>(law.d())?;
    let chi = chi_star(law).value;
    if chi.is_infinite() {
        return Ok(T::infinity());
    }
    let trace = moment_stats(law).trace;
    Ok(coeff * chi - trace)
}

/// The exact low-budget optimum and its optimizer.
#[derive(Clone, Debug)]
pub struct ChiBudgetOptimum<T> {
    pub d: usize,
    pub n: usize,
    pub budget: T,
    /// Worst-case i.i.d. risk `(d-1)(d + 2 sqrt(d-1)) / (n d C)`.
    pub risk_iid: T,
    /// Worst-case fixed-composition risk: the i.i.d. value minus
    /// `(d-1)/(nd)`.
    pub risk_fc: T,
    pub activation: T,
    pub lambda: T,
    pub optimizer: AnchoredLaw<T>,
}

/// Exact finite-n canonical optimum under `chi* <= C` for
/// `0 < C <= C*(d)`: attained by augmented randomized response with
/// `lambda = sqrt(d-1)`, `p = C / C*(d)`.
pub fn finite_n_optimum<T: Scalar>(d: usize, c: T, n: usize) -> Result<ChiBudgetOptimum<T>> {
    if d < 3 {
        return Err(Error::InvalidDimension { min: 3, got: d });
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if c <= T::zero() || !c.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "budget {c} must be positive"
        )));
    }
    let cap = budget_cap::<T>(d)?;
    if c > cap * (T::one() + T::tol_exact()) {
        return Err(Error::OutOfRegime(format!("C = {c} exceeds C*({d}) = {cap}")));
    }
    let d_t = T::from_usize(d).unwrap();
    let n_t = T::from_usize(n).unwrap();
    let root = (d_t - T::one()).sqrt();
    let risk_iid = (d_t - T::one()) * (d_t + T::of(2.0) * root) / (n_t * d_t * c);
    let risk_fc = risk_iid - (d_t - T::one()) / (n_t * d_t);
    let p = (c / cap).min(T::one());
    let lambda = optimal_lambda::<T>(d);
    let optimizer = augmented_rr(d, p, lambda)?;
    Ok(ChiBudgetOptimum {
        d,
        n,
        budget: c,
        risk_iid,
        risk_fc,
        activation: p,
        lambda,
        optimizer,
    })
}

/// Closed forms for the sorted two-level template with `s` high
/// coordinates at level ratio `lambda`: returns `(C(a), S(a))`.
pub fn two_level_stats<T: Scalar>(d: usize, s: usize, lambda: T) -> (T, T) {
    let d_t = T::from_usize(d).unwrap();
    let s_t = T::from_usize(s).unwrap();
    let lm1 = lambda - T::one();
    let denom = d_t + s_t * lm1;
    let s_val = d_t * s_t * (d_t - s_t) * lm1 * lm1 / (denom * denom);
    let c_val =
        s_t * (d_t - s_t) * lm1 * lm1 * (lambda + T::one()) / (lambda * denom * (d_t - T::one()));
    (c_val, s_val)
}

/// The sorted two-level template itself.
pub fn two_level_template<T: Scalar>(d: usize, s: usize, lambda: T) -> Result<Template<T>> {
    if s == 0 || s >= d {
        return Err(Error::InvalidParameter(format!(
            "level count s = {s} outside 1..{d}"
        )));
    }
    if lambda < T::one() {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} below 1")));
    }
    let d_t = T::from_usize(d).unwrap();
    let s_t = T::from_usize(s).unwrap();
    let beta = d_t / (d_t + s_t * (lambda - T::one()));
    let alpha = lambda * beta;
    let mut coords = vec![alpha; s];
    coords.extend(vec![beta; d - s]);
    Template::new(coords)
}

/// One supporting certificate of the frontier: a mixture of at most two
/// two-level orbit laws, identified by `(s, lambda)`; `s = 0, lambda = 1`
/// denotes the center template.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrontierCertificate<T> {
    pub s_a: usize,
    pub lambda_a: T,
    pub s_b: usize,
    pub lambda_b: T,
    /// Mixture weight on the `a` vertex.
    pub t: T,
}

#[derive(Clone, Copy, Debug)]
struct HullVertex<T> {
    c: T,
    s_val: T,
    s: usize,
    lambda: T,
}

/// The frontier curve `C0 -> F_d(C0)` with supporting certificates.
#[derive(Clone, Debug)]
pub struct FrontierCurve<T> {
    pub d: usize,
    pub budgets: Vec<T>,
    pub values: Vec<T>,
    pub certificates: Vec<FrontierCertificate<T>>,
    hull: Vec<HullVertex<T>>,
}

impl<T: Scalar> FrontierCurve<T> {
    /// Interpolated frontier value at an arbitrary budget (constant
    /// beyond the sampled range).
    pub fn value_at(&self, c0: T) -> T {
        self.eval(c0).0
    }

    pub fn certificate_at(&self, c0: T) -> FrontierCertificate<T> {
        self.eval(c0).1
    }

    fn eval(&self, c0: T) -> (T, FrontierCertificate<T>) {
        let hull = &self.hull;
        let last = hull.len() - 1;
        if c0 >= hull[last].c {
            let v = hull[last];
            return (
                v.s_val,
                FrontierCertificate {
                    s_a: v.s,
                    lambda_a: v.lambda,
                    s_b: v.s,
                    lambda_b: v.lambda,
                    t: T::one(),
                },
            );
        }
        let mut lo = 0usize;
        let mut hi = last;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if hull[mid].c <= c0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (a, b) = (hull[lo], hull[hi]);
        if b.c <= a.c {
            return (
                a.s_val,
                FrontierCertificate {
                    s_a: a.s,
                    lambda_a: a.lambda,
                    s_b: a.s,
                    lambda_b: a.lambda,
                    t: T::one(),
                },
            );
        }
        // Ties between adjacent segments break toward the smaller-budget
        // vertex through the <= above.
        let t = (b.c - c0) / (b.c - a.c);
        let value = t * a.s_val + (T::one() - t) * b.s_val;
        (
            value,
            FrontierCertificate {
                s_a: a.s,
                lambda_a: a.lambda,
                s_b: b.s,
                lambda_b: b.lambda,
                t,
            },
        )
    }

    /// Builds the optimizer law of a certificate (mixture of at most two
    /// orbit laws).
    pub fn certificate_law(&self, cert: &FrontierCertificate<T>) -> Result<AnchoredLaw<T>> {
        let basis = SimplexBasis::new(self.d)?;
        let tmpl = |s: usize, lambda: T| -> Result<Template<T>> {
            if s == 0 {
                Ok(Template::center(self.d))
            } else {
                two_level_template(self.d, s, lambda)
            }
        };
        let law_a = orbit_law(&basis, &tmpl(cert.s_a, cert.lambda_a)?)?;
        if cert.t >= T::one() - T::tol_exact() {
            return Ok(law_a);
        }
        let law_b = orbit_law(&basis, &tmpl(cert.s_b, cert.lambda_b)?)?;
        if cert.t <= T::tol_exact() {
            return Ok(law_b);
        }
        let mut atoms = Vec::new();
        for a in law_a.atoms() {
            atoms.push(Atom::new(a.weight * cert.t, a.point.clone()));
        }
        for b in law_b.atoms() {
            atoms.push(Atom::new(b.weight * (T::one() - cert.t), b.point.clone()));
        }
        AnchoredLaw::new(basis, atoms)
    }
}

/// Sampling configuration for [`frontier`].
#[derive(Clone, Copy, Debug)]
pub struct FrontierConfig {
    /// Log-spaced level-ratio samples per subset size.
    pub lambda_points: usize,
    /// Upper end of the level-ratio grid.
    pub lambda_max: f64,
}

impl Default for FrontierConfig {
    fn default() -> Self {
        FrontierConfig {
            lambda_points: 400,
            lambda_max: 1e3,
        }
    }
}

/// Samples the two-level orbit curve, forms its upper concave envelope,
/// and evaluates the frontier on the requested budget grid. For `d >= 3`
/// the tuned ratio `sqrt(d-1)` is always part of the sample, so the
/// low-budget segment reproduces the trace cap exactly.
pub fn frontier<T: Scalar>(
    d: usize,
    budgets: &[T],
    config: FrontierConfig,
) -> Result<FrontierCurve<T>> {
    if d < 2 {
        return Err(Error::InvalidDimension { min: 2, got: d });
    }
    if budgets.is_empty() {
        return Err(Error::InvalidParameter("empty budget grid".into()));
    }
    if budgets.iter().any(|&c| c < T::zero() || !c.is_finite()) {
        return Err(Error::InvalidParameter("negative budget in grid".into()));
    }
    let mut points: Vec<HullVertex<T>> = vec![HullVertex {
        c: T::zero(),
        s_val: T::zero(),
        s: 0,
        lambda: T::one(),
    }];
    let count = config.lambda_points.max(2);
    let log_max = config.lambda_max.ln();
    let mut lambdas: Vec<T> = (1..=count)
        .map(|k| T::of((log_max * k as f64 / count as f64).exp()))
        .collect();
    if d >= 3 {
        lambdas.push(optimal_lambda::<T>(d));
    }
    for s in 1..d {
        for &lambda in &lambdas {
            if lambda <= T::one() {
                continue;
            }
            let (c, s_val) = two_level_stats(d, s, lambda);
            points.push(HullVertex { c, s_val, s, lambda });
        }
    }
    let hull = truncate_at_peak(upper_concave_hull(points));
    let mut curve = FrontierCurve {
        d,
        budgets: budgets.to_vec(),
        values: Vec::with_capacity(budgets.len()),
        certificates: Vec::with_capacity(budgets.len()),
        hull,
    };
    for &c0 in budgets {
        let (v, cert) = curve.eval(c0);
        curve.values.push(v);
        curve.certificates.push(cert);
    }
    Ok(curve)
}

fn upper_concave_hull<T: Scalar>(mut points: Vec<HullVertex<T>>) -> Vec<HullVertex<T>> {
    points.sort_by(|a, b| {
        a.c.partial_cmp(&b.c)
            .unwrap()
            .then(a.s_val.partial_cmp(&b.s_val).unwrap())
    });
    // For (near-)equal abscissae keep only the highest point.
    let mut dedup: Vec<HullVertex<T>> = Vec::with_capacity(points.len());
    for p in points {
        match dedup.last_mut() {
            Some(last) if (last.c - p.c).abs() <= T::tol_exact() * T::one().max(p.c) => {
                if p.s_val > last.s_val {
                    *last = p;
                }
            }
            _ => dedup.push(p),
        }
    }
    // Monotone chain, keeping right turns only (concave from above).
    let mut hull: Vec<HullVertex<T>> = Vec::with_capacity(dedup.len());
    for p in dedup {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b.c - a.c) * (p.s_val - a.s_val) - (b.s_val - a.s_val) * (p.c - a.c);
            if cross >= T::zero() {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

fn truncate_at_peak<T: Scalar>(hull: Vec<HullVertex<T>>) -> Vec<HullVertex<T>> {
    let mut peak = 0usize;
    for (i, v) in hull.iter().enumerate() {
        if v.s_val >= hull[peak].s_val {
            peak = i;
        }
    }
    hull.into_iter().take(peak + 1).collect()
}

/// Prior kernel for the Bayesian Cramer-Rao evaluator: a C^1 density on
/// `[-1, 1]` vanishing at the endpoints.
pub trait PriorKernel<T> {
    fn density(&self, t: T) -> T;
    fn derivative(&self, t: T) -> T;
}

/// The quartic kernel `phi(t) = 15/16 (1 - t^2)^2`, whose score-squared
/// integral is exactly 10.
#[derive(Clone, Copy, Debug, Default)]
pub struct QuarticKernel;

impl<T: Scalar> PriorKernel<T> for QuarticKernel {
    fn density(&self, t: T) -> T {
        let u = T::one() - t * t;
        T::of(15.0 / 16.0) * u * u
    }

    fn derivative(&self, t: T) -> T {
        let u = T::one() - t * t;
        -T::of(15.0 / 4.0) * t * u
    }
}

/// `J0 = int phi'^2 / phi` over `[-1, 1]` by adaptive Simpson quadrature.
pub fn kernel_fisher_info<T: Scalar, K: PriorKernel<T>>(kernel: &K) -> T {
    let f = |t: T| {
        let phi = kernel.density(t);
        if phi <= T::zero() {
            return T::zero();
        }
        let dphi = kernel.derivative(t);
        dphi * dphi / phi
    };
    adaptive_simpson(&f, -T::one(), T::one(), T::of(1e-12).max(T::epsilon()), 60)
}

fn adaptive_simpson<T: Scalar>(f: &impl Fn(T) -> T, a: T, b: T, tol: T, depth: usize) -> T {
    let m = (a + b) / T::of(2.0);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = (b - a) / T::of(6.0) * (fa + T::of(4.0) * fm + fb);
    simpson_step(f, a, m, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<T: Scalar>(
    f: &impl Fn(T) -> T,
    a: T,
    m: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: usize,
) -> T {
    let lm = (a + m) / T::of(2.0);
    let rm = (m + b) / T::of(2.0);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / T::of(6.0) * (fa + T::of(4.0) * flm + fm);
    let right = (b - m) / T::of(6.0) * (fm + T::of(4.0) * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= T::of(15.0) * tol {
        return left + right + delta / T::of(15.0);
    }
    let half = tol / T::of(2.0);
    simpson_step(f, a, lm, m, fa, flm, fm, left, half, depth - 1)
        + simpson_step(f, m, rm, b, fm, frm, fb, right, half, depth - 1)
}

/// Prior information `J(pi) = m J0 / r^2` of the coordinatewise product
/// prior scaled to half-width `r`.
pub fn vt_prior_info<T: Scalar>(m: usize, r: T) -> Result<T> {
    vt_prior_info_with(m, r, &QuarticKernel)
}

pub fn vt_prior_info_with<T: Scalar, K: PriorKernel<T>>(m: usize, r: T, kernel: &K) -> Result<T> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    if r <= T::zero() || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("half-width r = {r}")));
    }
    Ok(T::from_usize(m).unwrap() * kernel_fisher_info(kernel) / (r * r))
}

/// Coordinatewise Bayesian Cramer-Rao bound:
/// `m^2 / (fisher-trace integral + prior info)`.
pub fn vantrees_bound<T: Scalar>(m: usize, fisher_trace: T, prior_info: T) -> Result<T> {
    let denom = fisher_trace + prior_info;
    if denom <= T::zero() || !denom.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "nonpositive denominator {denom}"
        )));
    }
    let m_t = T::from_usize(m).unwrap();
    Ok(m_t * m_t / denom)
}

/// One-user Fisher trace `int |x|^2 / (1 + u.x) drho` at composition
/// offset `u`; multiply by `n` for the n-sample trace.
pub fn fisher_trace_at<T: Scalar>(law: &AnchoredLaw<T>, u: &[T]) -> T {
    let mut acc = Accum::new();
    for atom in law.atoms() {
        let tilt = T::one() + dot(u, &atom.point);
        if tilt > T::zero() {
            acc.add(atom.weight * dot(&atom.point, &atom.point) / tilt);
        }
    }
    acc.value()
}

/// Chi-square of a scalar likelihood-ratio law about its unit mean
/// (diagnostic used by the verify suites).
pub fn lr_chi_square<T: Scalar>(mu: &ScalarLaw<T>) -> T {
    let mut acc = Accum::new();
    for &(w, v) in mu.atoms() {
        acc.add(w * (v - T::one()) * (v - T::one()));
    }
    acc.value()
}

/// `chi*(rho) <= C` up to tolerance.
pub fn is_budget_feasible<T: Scalar>(law: &AnchoredLaw<T>, c: T) -> bool {
    chi_star(law).value <= c + T::tol_tight()
}

/// LDP check re-exported next to the design ops for report code.
pub fn ldp_report<T: Scalar>(law: &AnchoredLaw<T>, eps0: T) -> LdpReport<T> {
    ldp_check(law, eps0)
}
