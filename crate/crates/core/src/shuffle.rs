//! Exact finite-n shuffled privacy arithmetic.
//!
//! The neighboring experiment that changes one user's input reduces to the
//! scalar average `(L_1 + ... + L_n) / n` of i.i.d. pairwise likelihood
//! ratios. This module provides the two-point endpoint law, the exact
//! n-fold average of a finitely supported scalar law, hockey-stick and
//! f-divergence profiles, the universal binary-response envelope with a
//! per-pair dominance check, a saturation (rigidity) probe, and a
//! brute-force histogram oracle for cross-validation.

use crate::channel::{ldp_check, pairwise_lr_law, Channel, ScalarLaw};
use crate::error::{Error, Result};
use crate::linalg::{ksum, Accum};
use crate::scalar::Scalar;
use crate::simplex::AnchoredLaw;

/// Default convolution support cap.
pub const CONVOLUTION_CAP: usize = 10_000_000;

/// The two-point law on `{e^-eps0, e^eps0}` with mean one; the point mass
/// at one when `eps0 = 0`. This is the pairwise likelihood-ratio law of
/// binary randomized response and the convex-order maximum of the
/// mean-one class supported on that interval.
pub fn endpoint_law<T: Scalar>(eps0: T) -> Result<ScalarLaw<T>> {
    if eps0 < T::zero() || !eps0.is_finite() {
        return Err(Error::InvalidParameter(format!("eps0 = {eps0}")));
    }
    if eps0 == T::zero() {
        return Ok(ScalarLaw::dirac(T::one()));
    }
    let a = (-eps0).exp();
    let b = eps0.exp();
    let w_lo = (b - T::one()) / (b - a);
    let w_hi = (T::one() - a) / (b - a);
    ScalarLaw::new(vec![(w_lo, a), (w_hi, b)])
}

/// Law of the average of `n` i.i.d. draws from a scalar law.
#[derive(Clone, Debug)]
pub struct AveragedLaw<T> {
    n: usize,
    atoms: Vec<(T, T)>,
}

impl<T: Scalar> AveragedLaw<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn atoms(&self) -> &[(T, T)] {
        &self.atoms
    }

    pub fn mean(&self) -> T {
        let mut acc = Accum::new();
        for &(w, v) in &self.atoms {
            acc.add(w * v);
        }
        acc.value()
    }

    pub fn max_value(&self) -> T {
        self.atoms
            .iter()
            .fold(T::zero(), |m, &(_, v)| m.max(v))
    }
}

fn merge_atoms<T: Scalar>(mut atoms: Vec<(T, T)>) -> Vec<(T, T)> {
    atoms.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    let mut merged: Vec<(T, T)> = Vec::with_capacity(atoms.len());
    for (w, v) in atoms {
        match merged.last_mut() {
            Some((lw, lv)) if (*lv - v).abs() <= T::tol_exact() * T::one().max(v.abs()) => {
                let tw = *lw + w;
                *lv = (*lv * *lw + v * w) / tw;
                *lw = tw;
            }
            _ => merged.push((w, v)),
        }
    }
    merged
}

/// Exact n-fold average by iterated convolution with support merging
/// (values equal within `1e-12` relative tolerance are combined). The
/// support of a two-point law grows to exactly `n + 1` atoms.
pub fn nfold_average_with<T: Scalar>(
    mu: &ScalarLaw<T>,
    n: usize,
    cap: usize,
) -> Result<AveragedLaw<T>> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let base: Vec<(T, T)> = mu.atoms().to_vec();
    let mut acc = base.clone();
    for _ in 1..n {
        if acc.len().saturating_mul(base.len()) > cap {
            return Err(Error::TooLarge(format!(
                "convolution support would exceed {cap} atoms"
            )));
        }
        let mut next = Vec::with_capacity(acc.len() * base.len());
        for &(wa, va) in &acc {
            for &(wb, vb) in &base {
                next.push((wa * wb, va + vb));
            }
        }
        acc = merge_atoms(next);
    }
    let n_t = T::from_usize(n).unwrap();
    let atoms: Vec<(T, T)> = acc.into_iter().map(|(w, v)| (w, v / n_t)).collect();
    Ok(AveragedLaw { n, atoms })
}

pub fn nfold_average<T: Scalar>(mu: &ScalarLaw<T>, n: usize) -> Result<AveragedLaw<T>> {
    nfold_average_with(mu, n, CONVOLUTION_CAP)
}

/// Hockey-stick profiles in both directions plus the standard named
/// f-divergences of a mean-one law: `forward(alpha) = E (L - alpha)_+`,
/// `reverse(alpha) = E (1 - alpha L)_+`, `kl = E L ln L`,
/// `chi2 = E (L - 1)^2`, `tv = E |L - 1| / 2`.
#[derive(Clone, Debug)]
pub struct DivergenceProfile<T> {
    pub alphas: Vec<T>,
    pub forward: Vec<T>,
    pub reverse: Vec<T>,
    pub kl: T,
    pub chi2: T,
    pub tv: T,
}

impl<T: Scalar> DivergenceProfile<T> {
    pub fn max_abs_gap(&self, other: &DivergenceProfile<T>) -> T {
        let mut worst = T::zero();
        for (a, b) in self.forward.iter().zip(&other.forward) {
            worst = worst.max((*a - *b).abs());
        }
        for (a, b) in self.reverse.iter().zip(&other.reverse) {
            worst = worst.max((*a - *b).abs());
        }
        worst
    }
}

fn profile_of_atoms<T: Scalar>(atoms: &[(T, T)], alphas: &[T]) -> DivergenceProfile<T> {
    let forward: Vec<T> = alphas
        .iter()
        .map(|&alpha| {
            let mut acc = Accum::new();
            for &(w, v) in atoms {
                if v > alpha {
                    acc.add(w * (v - alpha));
                }
            }
            acc.value()
        })
        .collect();
    let reverse: Vec<T> = alphas
        .iter()
        .map(|&alpha| {
            let mut acc = Accum::new();
            for &(w, v) in atoms {
                let g = T::one() - alpha * v;
                if g > T::zero() {
                    acc.add(w * g);
                }
            }
            acc.value()
        })
        .collect();
    let mut kl = Accum::new();
    let mut chi2 = Accum::new();
    let mut tv = Accum::new();
    for &(w, v) in atoms {
        if v > T::zero() {
            kl.add(w * v * v.ln());
        }
        chi2.add(w * (v - T::one()) * (v - T::one()));
        tv.add(w * (v - T::one()).abs());
    }
    DivergenceProfile {
        alphas: alphas.to_vec(),
        forward,
        reverse,
        kl: kl.value(),
        chi2: chi2.value(),
        tv: tv.value() / T::of(2.0),
    }
}

/// Profile of an averaged law over a grid of thresholds `alpha >= 1`.
pub fn divergence_profile<T: Scalar>(law: &AveragedLaw<T>, alphas: &[T]) -> DivergenceProfile<T> {
    profile_of_atoms(law.atoms(), alphas)
}

/// Profile of a one-user scalar law.
pub fn divergence_profile_scalar<T: Scalar>(
    law: &ScalarLaw<T>,
    alphas: &[T],
) -> DivergenceProfile<T> {
    profile_of_atoms(law.atoms(), alphas)
}

/// Default grid: 25 logarithmically spaced points in `[1, e^{eps0 n}]`.
/// The forward profile vanishes beyond `e^{eps0}`; the wider grid
/// documents that plateau.
pub fn default_alpha_grid<T: Scalar>(eps0: T, n: usize) -> Vec<T> {
    log_alpha_grid(eps0 * T::from_usize(n).unwrap(), 25)
}

/// `count` log-spaced points in `[1, e^{log_max}]`.
pub fn log_alpha_grid<T: Scalar>(log_max: T, count: usize) -> Vec<T> {
    let count = count.max(2);
    let log_max = log_max.max(T::zero());
    (0..count)
        .map(|k| {
            let f = T::from_usize(k).unwrap() / T::from_usize(count - 1).unwrap();
            (log_max * f).exp()
        })
        .collect()
}

/// The universal one-step shuffled envelope: the profile of the n-fold
/// average of the endpoint law, evaluated exactly through the binomial
/// expansion of the two-point convolution.
pub fn envelope<T: Scalar>(eps0: T, n: usize, alphas: &[T]) -> Result<DivergenceProfile<T>> {
    let mu = endpoint_law(eps0)?;
    let avg = nfold_average(&mu, n)?;
    Ok(divergence_profile(&avg, alphas))
}

/// Worst signed violation of envelope dominance for one ordered row pair.
#[derive(Clone, Debug)]
pub struct PairSlack<T> {
    pub i: usize,
    pub j: usize,
    /// `min_alpha (envelope - profile)`, separately over both directions;
    /// nonnegative (up to tolerance) when the envelope dominates.
    pub min_slack: T,
    /// `max_alpha (envelope - profile)` over both directions.
    pub max_slack: T,
}

#[derive(Clone, Debug)]
pub struct EnvelopeReport<T> {
    pub eps0: T,
    pub n: usize,
    pub pairs: Vec<PairSlack<T>>,
}

impl<T: Scalar> EnvelopeReport<T> {
    /// The most violated slack over all pairs (negative means a violation
    /// beyond tolerance).
    pub fn worst_slack(&self) -> T {
        self.pairs
            .iter()
            .fold(T::infinity(), |m, p| m.min(p.min_slack))
    }
}

/// Checks envelope dominance of every ordered row pair of a law against
/// the endpoint envelope at the same local parameter.
pub fn envelope_check<T: Scalar>(
    law: &AnchoredLaw<T>,
    eps0: T,
    n: usize,
    alphas: &[T],
) -> Result<EnvelopeReport<T>> {
    let ldp = ldp_check(law, eps0);
    if !ldp.pass {
        return Err(Error::NotFeasible(format!(
            "law is not eps0-LDP at {eps0}: worst log ratio {}",
            ldp.worst_log_ratio
        )));
    }
    let env = envelope(eps0, n, alphas)?;
    let d = law.d();
    let mut pairs = Vec::with_capacity(d * (d - 1));
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            let mu = pairwise_lr_law(law, i, j)?;
            let avg = nfold_average(&mu, n)?;
            let prof = divergence_profile(&avg, alphas);
            let mut min_slack = T::infinity();
            let mut max_slack = -T::infinity();
            for (e, p) in env.forward.iter().zip(&prof.forward) {
                min_slack = min_slack.min(*e - *p);
                max_slack = max_slack.max(*e - *p);
            }
            for (e, p) in env.reverse.iter().zip(&prof.reverse) {
                min_slack = min_slack.min(*e - *p);
                max_slack = max_slack.max(*e - *p);
            }
            pairs.push(PairSlack {
                i,
                j,
                min_slack,
                max_slack,
            });
        }
    }
    Ok(EnvelopeReport { eps0, n, pairs })
}

/// Verdict of the saturation probe.
#[derive(Clone, Debug, PartialEq)]
pub enum RigidityVerdict<T> {
    /// Both directed profiles agree with the envelope on the whole grid
    /// and the one-user law is the endpoint law, as exact saturation
    /// forces.
    Saturated,
    /// Grid-level saturation holds but the one-user law differs from the
    /// endpoint law; exact saturation at every threshold would forbid
    /// this, so either the grid is too coarse or the inputs are
    /// inconsistent.
    Inconsistent { atom_distance: T },
    /// A gap against the envelope was found on the grid.
    Gap { alpha: T, size: T },
}

/// Compares both directed stop-loss profiles of the n-fold average of
/// `mu` against the endpoint envelope on a grid.
///
/// The grid verdict is an under-approximation: exact saturation is a
/// statement about every threshold, which a finite grid cannot certify.
pub fn rigidity_probe<T: Scalar>(
    mu: &ScalarLaw<T>,
    eps0: T,
    n: usize,
    alphas: &[T],
) -> Result<RigidityVerdict<T>> {
    let lo = (-eps0).exp() * (T::one() - T::tol_tight());
    let hi = eps0.exp() * (T::one() + T::tol_tight());
    if mu.min_value() < lo || mu.max_value() > hi {
        return Err(Error::NotFeasible(format!(
            "support [{}, {}] outside [e^-eps0, e^eps0]",
            mu.min_value(),
            mu.max_value()
        )));
    }
    if (mu.mean() - T::one()).abs() > T::tol_tight() {
        return Err(Error::NotFeasible(format!("mean {} is not one", mu.mean())));
    }
    let star = endpoint_law(eps0)?;
    let avg = nfold_average(mu, n)?;
    let avg_star = nfold_average(&star, n)?;
    let prof = divergence_profile(&avg, alphas);
    let prof_star = divergence_profile(&avg_star, alphas);
    let mut worst = T::zero();
    let mut worst_alpha = alphas.first().copied().unwrap_or_else(T::one);
    for (k, &alpha) in alphas.iter().enumerate() {
        let gap_f = (prof_star.forward[k] - prof.forward[k]).abs();
        let gap_r = (prof_star.reverse[k] - prof.reverse[k]).abs();
        let gap = gap_f.max(gap_r);
        if gap > worst {
            worst = gap;
            worst_alpha = alpha;
        }
    }
    if worst < T::tol_tight() {
        let dist = mu.max_atom_distance(&star);
        if dist <= T::tol_tight() {
            Ok(RigidityVerdict::Saturated)
        } else {
            Ok(RigidityVerdict::Inconsistent {
                atom_distance: dist,
            })
        }
    } else {
        Ok(RigidityVerdict::Gap {
            alpha: worst_alpha,
            size: worst,
        })
    }
}

/// Brute-force oracle: enumerates output histograms of `n` independent
/// draws and evaluates both directed hockey-stick profiles of the
/// one-coordinate contamination pair directly from histogram
/// probabilities. Guarded by `K^n <= 10^7`.
pub fn brute_force_shuffle<T: Scalar>(
    channel: &Channel<T>,
    i: usize,
    j: usize,
    n: usize,
    alphas: &[T],
) -> Result<DivergenceProfile<T>> {
    let d = channel.d();
    let k = channel.k();
    if i >= d || j >= d || i == j {
        return Err(Error::InvalidParameter(format!(
            "row pair ({i}, {j}) invalid for d={d}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if (k as f64).powi(n as i32) > 1e7 {
        return Err(Error::TooLarge(format!("K^n = {k}^{n} exceeds 10^7")));
    }
    let p = channel.row(i);
    let q = channel.row(j);
    let mut pairs: Vec<(T, T)> = Vec::new(); // (Q0, Q1) per histogram
    let mut hist = vec![0usize; k];
    enumerate_histograms(&mut hist, 0, n, &mut |h| {
        let p0 = multinomial_prob(h, p, n);
        // One draw from row j, n-1 from row i, averaged over which draw:
        // Q1(h) = sum_y q_y * Multinom(n-1, h - e_y; p).
        let mut p1 = Accum::new();
        for y in 0..k {
            if h[y] == 0 || q[y] == T::zero() {
                continue;
            }
            let mut reduced = h.to_vec();
            reduced[y] -= 1;
            p1.add(q[y] * multinomial_prob(&reduced, p, n - 1));
        }
        pairs.push((p0, p1.value()));
    });
    let forward: Vec<T> = alphas
        .iter()
        .map(|&alpha| {
            let mut acc = Accum::new();
            for &(p0, p1) in &pairs {
                let v = p1 - alpha * p0;
                if v > T::zero() {
                    acc.add(v);
                }
            }
            acc.value()
        })
        .collect();
    let reverse: Vec<T> = alphas
        .iter()
        .map(|&alpha| {
            let mut acc = Accum::new();
            for &(p0, p1) in &pairs {
                let v = p0 - alpha * p1;
                if v > T::zero() {
                    acc.add(v);
                }
            }
            acc.value()
        })
        .collect();
    let mut kl = Accum::new();
    let mut chi2 = Accum::new();
    let mut tv = Accum::new();
    for &(p0, p1) in &pairs {
        if p0 > T::zero() {
            let l = p1 / p0;
            if l > T::zero() {
                kl.add(p0 * l * l.ln());
            }
            chi2.add(p0 * (l - T::one()) * (l - T::one()));
        }
        tv.add((p1 - p0).abs());
    }
    Ok(DivergenceProfile {
        alphas: alphas.to_vec(),
        forward,
        reverse,
        kl: kl.value(),
        chi2: chi2.value(),
        tv: tv.value() / T::of(2.0),
    })
}

fn enumerate_histograms(
    hist: &mut [usize],
    idx: usize,
    remaining: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    if idx + 1 == hist.len() {
        hist[idx] = remaining;
        visit(hist);
        return;
    }
    for c in 0..=remaining {
        hist[idx] = c;
        enumerate_histograms(hist, idx + 1, remaining - c, visit);
    }
}

/// `n! / prod(h_y!) * prod(p_y^{h_y})`, with `0^0 = 1`.
fn multinomial_prob<T: Scalar>(hist: &[usize], p: &[T], n: usize) -> T {
    debug_assert_eq!(hist.iter().sum::<usize>(), n);
    let mut coeff = 1.0f64;
    let mut placed = 0usize;
    for &h in hist {
        for step in 1..=h {
            placed += 1;
            coeff *= placed as f64 / step as f64;
        }
    }
    let mut prob = T::of(coeff);
    for (y, &h) in hist.iter().enumerate() {
        if h > 0 {
            prob = prob * p[y].powi(h as i32);
        }
    }
    prob
}

/// Convex-order chord inequality helper used by the property suites:
/// integral of a convex test function against a scalar law.
pub fn integrate<T: Scalar>(law: &ScalarLaw<T>, f: impl Fn(T) -> T) -> T {
    let mut acc = Accum::new();
    for &(w, v) in law.atoms() {
        acc.add(w * f(v));
    }
    acc.value()
}

/// Total weight helper shared by tests.
pub fn total_weight<T: Scalar>(atoms: &[(T, T)]) -> T {
    ksum(atoms.iter().map(|&(w, _)| w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::anchor;

    const LN3: f64 = 1.0986122886681098;

    #[test]
    fn endpoint_law_zero_eps_is_dirac() {
        let mu = endpoint_law(0.0f64).unwrap();
        assert_eq!(mu.len(), 1);
        assert!((mu.atoms()[0].1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn endpoint_law_ln3() {
        let mu = endpoint_law(LN3).unwrap();
        let atoms = mu.atoms();
        assert!((atoms[0].1 - 1.0 / 3.0).abs() < 1e-14);
        assert!((atoms[0].0 - 0.75).abs() < 1e-14);
        assert!((atoms[1].1 - 3.0).abs() < 1e-13);
        assert!((atoms[1].0 - 0.25).abs() < 1e-14);
    }

    #[test]
    fn endpoint_mean_one_for_various_eps() {
        for eps in [0.1f64, 0.5, 1.0, 2.0, 5.0] {
            let mu = endpoint_law(eps).unwrap();
            assert!((mu.mean() - 1.0).abs() < 1e-13, "eps={eps}");
        }
    }

    #[test]
    fn nfold_average_of_dirac() {
        let avg = nfold_average(&ScalarLaw::dirac(1.0f64), 5).unwrap();
        assert_eq!(avg.atoms().len(), 1);
        assert!((avg.atoms()[0].1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nfold_average_binomial_support() {
        let mu = endpoint_law(LN3).unwrap();
        let avg = nfold_average(&mu, 2).unwrap();
        let atoms = avg.atoms();
        assert_eq!(atoms.len(), 3);
        let want = [
            (9.0 / 16.0, 1.0 / 3.0),
            (6.0 / 16.0, 5.0 / 3.0),
            (1.0 / 16.0, 3.0),
        ];
        for ((w, v), (ww, wv)) in atoms.iter().zip(want) {
            assert!((w - ww).abs() < 1e-13);
            assert!((v - wv).abs() < 1e-13);
        }
        for n in 1..=8 {
            let a = nfold_average(&mu, n).unwrap();
            assert_eq!(a.atoms().len(), n + 1);
            assert!((a.mean() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn convolution_cap_guards() {
        let mu = ScalarLaw::new(vec![(0.25, 0.5), (0.25, 1.0), (0.25, 1.25), (0.25, 1.25001)])
            .unwrap();
        assert!(matches!(
            nfold_average_with(&mu, 40, 100),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn profile_of_dirac_is_zero() {
        let avg = nfold_average(&ScalarLaw::dirac(1.0f64), 3).unwrap();
        let prof = divergence_profile(&avg, &[1.0, 1.5, 2.0]);
        assert!(prof.forward.iter().all(|&v| v == 0.0));
        assert!(prof.reverse.iter().all(|&v| v == 0.0));
        assert!(prof.kl.abs() < 1e-15 && prof.chi2 == 0.0 && prof.tv == 0.0);
    }

    #[test]
    fn profile_endpoint_ln3_n1() {
        let mu = endpoint_law(LN3).unwrap();
        let avg = nfold_average(&mu, 1).unwrap();
        let prof = divergence_profile(&avg, &[1.0, 2.0]);
        assert!((prof.forward[0] - 0.5).abs() < 1e-13);
        assert!((prof.forward[1] - 0.25).abs() < 1e-13);
        assert!((prof.chi2 - 4.0 / 3.0).abs() < 1e-13);
        // forward(1) = reverse(1) = tv.
        assert!((prof.forward[0] - prof.reverse[0]).abs() < 1e-13);
        assert!((prof.forward[0] - prof.tv).abs() < 1e-13);
    }

    #[test]
    fn profile_endpoint_ln3_n2() {
        let env = envelope(LN3, 2, &[1.0, 2.0]).unwrap();
        assert!((env.forward[1] - 1.0 / 16.0).abs() < 1e-13);
        // TV of the two-fold average: 3/8.
        assert!((env.tv - 3.0 / 8.0).abs() < 1e-13);
    }

    #[test]
    fn envelope_zero_eps_is_zero() {
        let env = envelope(0.0f64, 4, &[1.0, 1.5, 3.0]).unwrap();
        assert!(env.forward.iter().all(|&v| v == 0.0));
        assert!(env.reverse.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn profiles_monotone_and_bounded() {
        let mu = endpoint_law(2.0f64).unwrap();
        let avg = nfold_average(&mu, 3).unwrap();
        let grid = default_alpha_grid(2.0, 3);
        let prof = divergence_profile(&avg, &grid);
        for w in prof.forward.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
        for w in prof.reverse.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
        for (&f, &r) in prof.forward.iter().zip(&prof.reverse) {
            assert!((0.0..=1.0).contains(&f));
            assert!((0.0..=1.0).contains(&r));
        }
    }

    #[test]
    fn brr_achieves_envelope_with_zero_slack() {
        let law = anchor(&Channel::brr(LN3)).unwrap();
        for n in 1..=4 {
            let grid = default_alpha_grid(LN3, n);
            let report = envelope_check(&law, LN3, n, &grid).unwrap();
            for pair in &report.pairs {
                assert!(pair.min_slack.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn envelope_check_rejects_infeasible() {
        let law = anchor(&Channel::brr(2.0)).unwrap();
        let grid = default_alpha_grid(1.0, 2);
        assert!(matches!(
            envelope_check(&law, 1.0, 2, &grid),
            Err(Error::NotFeasible(_))
        ));
    }

    #[test]
    fn equal_rows_profiles_below_envelope() {
        let law = anchor(&Channel::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap()).unwrap();
        let grid = default_alpha_grid(LN3, 2);
        let report = envelope_check(&law, LN3, 2, &grid).unwrap();
        assert!(report.worst_slack() >= -1e-12);
    }

    #[test]
    fn rigidity_saturated_for_endpoint() {
        let mu = endpoint_law(LN3).unwrap();
        let grid = default_alpha_grid(LN3, 2);
        let verdict = rigidity_probe(&mu, LN3, 2, &grid).unwrap();
        assert_eq!(verdict, RigidityVerdict::Saturated);
    }

    #[test]
    fn rigidity_gap_for_dirac() {
        let grid = default_alpha_grid(LN3, 2);
        let verdict = rigidity_probe(&ScalarLaw::dirac(1.0), LN3, 2, &grid).unwrap();
        match verdict {
            RigidityVerdict::Gap { alpha, size } => {
                assert!((alpha - 1.0).abs() < 1e-12);
                assert!((size - 3.0 / 8.0).abs() < 1e-12);
            }
            other => panic!("expected a gap, got {other:?}"),
        }
    }

    #[test]
    fn rigidity_gap_for_three_point_law() {
        // {1/3, 1, 3} with half the mass at 1 and the rest split to keep
        // the mean at one.
        let b = 3.0f64;
        let a = 1.0 / 3.0;
        let w_hi = 0.5 * (1.0 - a) / (b - a);
        let w_lo = 0.5 - w_hi;
        let mu = ScalarLaw::new(vec![(w_lo, a), (0.5, 1.0), (w_hi, b)]).unwrap();
        assert!((mu.mean() - 1.0).abs() < 1e-14);
        let grid = default_alpha_grid(LN3, 3);
        let verdict = rigidity_probe(&mu, LN3, 3, &grid).unwrap();
        assert!(matches!(verdict, RigidityVerdict::Gap { .. }));
    }

    #[test]
    fn rigidity_rejects_unsupported_law() {
        let mu = ScalarLaw::new(vec![(0.5, 0.1), (0.5, 1.9)]).unwrap();
        let grid = default_alpha_grid(1.0, 1);
        assert!(matches!(
            rigidity_probe(&mu, 1.0, 1, &grid),
            Err(Error::NotFeasible(_))
        ));
    }

    #[test]
    fn brute_force_matches_hand_values() {
        let w = Channel::brr(LN3);
        let prof1 = brute_force_shuffle(&w, 0, 1, 1, &[1.0]).unwrap();
        assert!((prof1.forward[0] - 0.5).abs() < 1e-13);
        let prof2 = brute_force_shuffle(&w, 0, 1, 2, &[2.0]).unwrap();
        assert!((prof2.forward[0] - 1.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn brute_force_identical_rows_zero() {
        let w = Channel::<f64>::new(vec![vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        let prof = brute_force_shuffle(&w, 0, 1, 3, &[1.0, 2.0]).unwrap();
        assert!(prof.forward.iter().all(|&v| v.abs() < 1e-15));
        assert!(prof.reverse.iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn brute_force_guard() {
        let w = Channel::new(vec![vec![0.25; 4]; 4]).unwrap();
        assert!(matches!(
            brute_force_shuffle(&w, 0, 1, 20, &[1.0]),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn oracle_agrees_with_scalar_shadow() {
        let w = Channel::new(vec![
            vec![0.5, 0.3, 0.2],
            vec![0.1, 0.6, 0.3],
            vec![0.25, 0.25, 0.5],
        ])
        .unwrap();
        let law = anchor(&w).unwrap();
        let grid = log_alpha_grid(2.0f64, 25);
        for n in 1..=4 {
            for i in 0..3 {
                for j in 0..3 {
                    if i == j {
                        continue;
                    }
                    let oracle = brute_force_shuffle(&w, i, j, n, &grid).unwrap();
                    let mu = pairwise_lr_law(&law, i, j).unwrap();
                    let avg = nfold_average(&mu, n).unwrap();
                    let shadow = divergence_profile(&avg, &grid);
                    assert!(
                        oracle.max_abs_gap(&shadow) < 1e-10,
                        "n={n} pair=({i},{j}) gap={}",
                        oracle.max_abs_gap(&shadow)
                    );
                }
            }
        }
    }

    #[test]
    fn chord_bound_at_n1() {
        // Any feasible law is dominated by the endpoint law for convex tests.
        let eps = 1.0f64;
        let star = endpoint_law(eps).unwrap();
        let mid = ScalarLaw::<f64>::new(vec![(0.4, 0.6), (0.6, 1.2666666666666666)]).unwrap();
        assert!((mid.mean() - 1.0).abs() < 1e-12);
        let tests: [Box<dyn Fn(f64) -> f64>; 4] = [
            Box::new(|t: f64| (t - 1.3).max(0.0)),
            Box::new(|t: f64| (1.0 - 1.3 * t).max(0.0)),
            Box::new(|t: f64| if t > 0.0 { t * t.ln() } else { 0.0 }),
            Box::new(|t: f64| (t - 1.0) * (t - 1.0)),
        ];
        for f in &tests {
            assert!(integrate(&mid, f) <= integrate(&star, f) + 1e-12);
        }
    }
}
