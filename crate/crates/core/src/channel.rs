//! Conversion between row-stochastic channels and anchored laws, one-user
//! mixtures, local-ratio (LDP) verification, and pairwise likelihood-ratio
//! extraction.

use crate::error::{Error, Result};
use crate::linalg::{dot, ksum, norm2, Accum};
use crate::scalar::Scalar;
use crate::simplex::{AnchoredLaw, Atom, SimplexBasis};

/// A finite-output local randomizer: `d` rows, `K` output columns, each
/// row a probability vector.
#[derive(Clone, Debug)]
pub struct Channel<T> {
    rows: Vec<Vec<T>>,
}

impl<T: Scalar> Channel<T> {
    pub fn new(rows: Vec<Vec<T>>) -> Result<Self> {
        let d = rows.len();
        if d < 2 {
            return Err(Error::InvalidChannel(format!("{d} rows, need at least 2")));
        }
        let k = rows[0].len();
        if k == 0 || rows.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidChannel("empty or ragged rows".into()));
        }
        let mut rows = rows;
        for (i, row) in rows.iter_mut().enumerate() {
            for p in row.iter_mut() {
                if !p.is_finite() || *p < -T::tol_exact() || *p > T::one() + T::tol_exact() {
                    return Err(Error::InvalidChannel(format!(
                        "entry {p} in row {i} outside [0, 1]"
                    )));
                }
                *p = p.max(T::zero()).min(T::one());
            }
            let sum = ksum(row.iter().copied());
            if (sum - T::one()).abs() > T::tol_tight() {
                return Err(Error::InvalidChannel(format!("row {i} sums to {sum}")));
            }
        }
        Ok(Channel { rows })
    }

    pub fn d(&self) -> usize {
        self.rows.len()
    }

    pub fn k(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    /// Binary randomized response with local parameter `eps0`: the two-row
    /// channel with diagonal entries `e^eps0 / (1 + e^eps0)`.
    pub fn brr(eps0: T) -> Self {
        let b = eps0.exp();
        let hi = b / (T::one() + b);
        let lo = T::one() / (T::one() + b);
        Channel {
            rows: vec![vec![hi, lo], vec![lo, hi]],
        }
    }
}

/// Diagnostics from [`anchor`]: columns with zero row-average carry no
/// probability under any input and are dropped; columns whose templates
/// coincide are merged.
#[derive(Clone, Copy, Debug, Default)]
pub struct AnchorReport {
    pub dropped_columns: usize,
    pub merged_columns: usize,
}

/// The anchored law of a channel in the given gauge: atom weights are the
/// row averages, atom positions the centered per-column likelihood-ratio
/// templates.
pub fn anchor_in<T: Scalar>(
    channel: &Channel<T>,
    basis: &SimplexBasis<T>,
) -> Result<(AnchoredLaw<T>, AnchorReport)> {
    let d = channel.d();
    if basis.d() != d {
        return Err(Error::InvalidDimension {
            min: d,
            got: basis.d(),
        });
    }
    let inv_d = T::one() / T::from_usize(d).unwrap();
    let mut atoms = Vec::with_capacity(channel.k());
    let mut dropped = 0usize;
    for y in 0..channel.k() {
        let avg = ksum((0..d).map(|i| channel.row(i)[y])) * inv_d;
        if avg <= T::zero() {
            dropped += 1;
            continue;
        }
        let template: Vec<T> = (0..d).map(|i| channel.row(i)[y] / avg).collect();
        atoms.push(Atom::new(avg, basis.unchart(&template)));
    }
    if atoms.is_empty() {
        return Err(Error::InvalidChannel("all columns have zero mass".into()));
    }
    let kept = atoms.len();
    let law = AnchoredLaw::new(basis.clone(), atoms)?;
    let report = AnchorReport {
        dropped_columns: dropped,
        merged_columns: kept - law.len(),
    };
    Ok((law, report))
}

/// [`anchor_in`] with the deterministic canonical gauge.
pub fn anchor<T: Scalar>(channel: &Channel<T>) -> Result<AnchoredLaw<T>> {
    let basis = SimplexBasis::new(channel.d())?;
    anchor_in(channel, &basis).map(|(law, _)| law)
}

/// The canonical channel of a law: one output column per atom, with
/// `W(y_k | i) = w_k (1 + gamma_i . x_k)`. Anchoring the result returns
/// the law itself.
pub fn reconstruct<T: Scalar>(law: &AnchoredLaw<T>) -> Channel<T> {
    let basis = law.basis();
    let d = law.d();
    let rows: Vec<Vec<T>> = (0..d)
        .map(|i| {
            law.atoms()
                .iter()
                .map(|a| a.weight * (T::one() + dot(basis.gamma(i), &a.point)))
                .map(|p| p.max(T::zero()))
                .collect()
        })
        .collect();
    Channel { rows }
}

/// The one-user output law under input composition `theta`: atoms of the
/// law reweighted by `1 + h_theta . x`. Weights are nonnegative and sum
/// to one.
pub fn mixture<T: Scalar>(law: &AnchoredLaw<T>, theta: &[T]) -> Result<Vec<Atom<T>>> {
    let h = law.basis().composition_base(theta)?;
    Ok(law
        .atoms()
        .iter()
        .map(|a| {
            let w = a.weight * (T::one() + dot(&h, &a.point));
            Atom::new(w.max(T::zero()), a.point.clone())
        })
        .collect())
}

/// Outcome of a local-ratio check.
#[derive(Clone, Copy, Debug)]
pub struct LdpReport<T> {
    pub pass: bool,
    pub eps0: T,
    /// Max over atoms and ordered pairs of `log(a_i / a_j)`; `+inf` when a
    /// template mixes zero and nonzero coordinates.
    pub worst_log_ratio: T,
    /// Index of the atom attaining the worst ratio.
    pub worst_atom: usize,
}

/// Checks the `eps0` local cap on template ratios: every atom must have
/// `a_i <= e^{eps0} a_j` for all `i, j`, with `1e-10` relative slack.
pub fn ldp_check<T: Scalar>(law: &AnchoredLaw<T>, eps0: T) -> LdpReport<T> {
    let mut worst = T::zero();
    let mut worst_atom = 0usize;
    for (k, template) in law.templates().iter().enumerate() {
        let ratio = template.max_min_ratio();
        let log_ratio = if ratio.is_infinite() {
            T::infinity()
        } else {
            ratio.ln()
        };
        if log_ratio > worst {
            worst = log_ratio;
            worst_atom = k;
        }
    }
    let slack = (T::one() + T::tol_tight()).ln();
    LdpReport {
        pass: worst <= eps0 + slack,
        eps0,
        worst_log_ratio: worst,
        worst_atom,
    }
}

/// A finitely supported probability law on the nonnegative reals.
///
/// Canonical form: atoms sorted by value, values equal within `1e-12`
/// relative tolerance merged.
#[derive(Clone, Debug)]
pub struct ScalarLaw<T> {
    atoms: Vec<(T, T)>, // (weight, value)
}

impl<T: Scalar> ScalarLaw<T> {
    pub fn new(atoms: Vec<(T, T)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidLaw("no atoms".into()));
        }
        for &(w, v) in &atoms {
            if !w.is_finite() || w <= T::zero() {
                return Err(Error::InvalidLaw(format!("nonpositive weight {w}")));
            }
            if !v.is_finite() || v < T::zero() {
                return Err(Error::InvalidLaw(format!("value {v} outside [0, inf)")));
            }
        }
        let mut atoms = atoms;
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
        let total = ksum(merged.iter().map(|&(w, _)| w));
        if (total - T::one()).abs() > T::tol_exact() * T::of(8.0) {
            return Err(Error::InvalidLaw(format!("weights sum to {total}")));
        }
        Ok(ScalarLaw { atoms: merged })
    }

    pub fn dirac(v: T) -> Self {
        ScalarLaw {
            atoms: vec![(T::one(), v)],
        }
    }

    pub fn atoms(&self) -> &[(T, T)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mean(&self) -> T {
        let mut acc = Accum::new();
        for &(w, v) in &self.atoms {
            acc.add(w * v);
        }
        acc.value()
    }

    pub fn min_value(&self) -> T {
        self.atoms.first().map(|&(_, v)| v).unwrap()
    }

    pub fn max_value(&self) -> T {
        self.atoms.last().map(|&(_, v)| v).unwrap()
    }

    /// Max over matched atoms of weight/value discrepancies; `+inf` when
    /// the supports differ in size.
    pub fn max_atom_distance(&self, other: &ScalarLaw<T>) -> T {
        if self.len() != other.len() {
            return T::infinity();
        }
        self.atoms
            .iter()
            .zip(&other.atoms)
            .fold(T::zero(), |m, (a, b)| {
                m.max((a.0 - b.0).abs()).max((a.1 - b.1).abs())
            })
    }
}

/// Law of the likelihood ratio `dW(.|j) / dW(.|i)` under row `i`, in
/// template coordinates: atom probabilities `w a_i / 1`, values `a_j / a_i`.
///
/// Atoms with `a_i = a_j = 0` carry no row-`i` probability and are
/// skipped; an atom with `a_i = 0 < a_j` breaks absolute continuity.
pub fn pairwise_lr_law<T: Scalar>(
    law: &AnchoredLaw<T>,
    i: usize,
    j: usize,
) -> Result<ScalarLaw<T>> {
    let d = law.d();
    if i == j || i >= d || j >= d {
        return Err(Error::InvalidParameter(format!(
            "row pair ({i}, {j}) invalid for d={d}"
        )));
    }
    // Row-i probabilities are w_k a_i(k); values are a_j / a_i.
    let mut weighted = Vec::with_capacity(law.len());
    for (atom, template) in law.atoms().iter().zip(law.templates()) {
        let ai = template.coords()[i];
        let aj = template.coords()[j];
        if ai == T::zero() {
            if aj == T::zero() {
                continue;
            }
            return Err(Error::SingularPair { i, j });
        }
        weighted.push((atom.weight * ai, aj / ai));
    }
    ScalarLaw::new(weighted)
}

/// Norm of the mean of an anchored law (diagnostic for reports).
pub fn mean_residual<T: Scalar>(law: &AnchoredLaw<T>) -> T {
    norm2(&law.mean())
}
