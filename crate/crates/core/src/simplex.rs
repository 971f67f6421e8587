//! The regular-simplex gauge: an orthonormal basis of the zero-sum
//! subspace, the template simplex, anchored (mean-zero) laws, permutation
//! actions, and extremality of finitely supported laws.
//!
//! Geometry in one paragraph: fix `H` with orthonormal columns spanning
//! `{u : 1'u = 0}` and let `gamma_i = H' e_i`. The vertex vectors satisfy
//! `gamma_i . gamma_j = delta_ij - 1/d` and sum to zero. The polytope
//! `X_d = {x : 1 + gamma_i . x >= 0}` is affinely identified with the
//! template simplex `K_d = {a >= 0 : sum a_i = d}` through `a = 1 + Hx`,
//! `x = H'(a - 1)`. An anchored law is a probability law on `X_d` with
//! mean zero; its template coordinates are basis-independent and are the
//! canonical wire representation.

use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::linalg::{dot, ksum, lex_cmp, norm2, nullspace_vector, rank, Accum, Mat};
use crate::scalar::Scalar;

/// Orthonormal gauge for dimension `d`: the matrix `H` and the vertex
/// vectors `gamma_i = H' e_i`.
#[derive(Clone, Debug)]
pub struct SimplexBasis<T> {
    d: usize,
    h: Mat<T>,
    gamma: Vec<Vec<T>>,
}

impl<T: Scalar> SimplexBasis<T> {
    /// Deterministic Helmert-style construction. Column `k` (1-indexed) has
    /// entries `1/sqrt(k(k+1))` in the first `k` rows, `-k/sqrt(k(k+1))` in
    /// row `k+1`, zeros below.
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension { min: 2, got: d });
        }
        let mut h = Mat::zeros(d, d - 1);
        for k in 1..d {
            let denom = T::from_usize(k * (k + 1)).unwrap().sqrt();
            for i in 0..k {
                h[(i, k - 1)] = T::one() / denom;
            }
            h[(k, k - 1)] = -T::from_usize(k).unwrap() / denom;
        }
        Self::from_matrix(h)
    }

    /// Builds a gauge from an arbitrary orthonormal basis of the zero-sum
    /// subspace. All invariants are validated.
    pub fn from_matrix(h: Mat<T>) -> Result<Self> {
        let d = h.nrows();
        if d < 2 || h.ncols() != d - 1 {
            return Err(Error::InvalidDimension { min: 2, got: d });
        }
        let gamma: Vec<Vec<T>> = (0..d).map(|i| h.row(i).to_vec()).collect();
        let basis = SimplexBasis { d, h, gamma };
        basis.validate()?;
        Ok(basis)
    }

    fn validate(&self) -> Result<()> {
        let tol = T::tol_exact();
        let d = self.d;
        // H'H = I.
        for a in 0..d - 1 {
            for b in 0..d - 1 {
                let mut acc = Accum::new();
                for i in 0..d {
                    acc.add(self.h[(i, a)] * self.h[(i, b)]);
                }
                let want = if a == b { T::one() } else { T::zero() };
                if (acc.value() - want).abs() > tol {
                    return Err(Error::InvalidParameter(
                        "basis columns are not orthonormal".into(),
                    ));
                }
            }
        }
        // H'1 = 0 and the vertex inner-product identity.
        for a in 0..d - 1 {
            let col_sum = ksum((0..d).map(|i| self.h[(i, a)]));
            if col_sum.abs() > tol {
                return Err(Error::InvalidParameter(
                    "basis columns do not span the zero-sum subspace".into(),
                ));
            }
        }
        let inv_d = T::one() / T::from_usize(d).unwrap();
        for i in 0..d {
            for j in 0..d {
                let want = if i == j { T::one() - inv_d } else { -inv_d };
                if (dot(&self.gamma[i], &self.gamma[j]) - want).abs() > tol {
                    return Err(Error::InvalidParameter(
                        "vertex vectors violate gamma_i.gamma_j = delta_ij - 1/d".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Dimension of the gauge space, `d - 1`.
    pub fn dim(&self) -> usize {
        self.d - 1
    }

    pub fn matrix(&self) -> &Mat<T> {
        &self.h
    }

    pub fn gamma(&self, i: usize) -> &[T] {
        &self.gamma[i]
    }

    pub fn vertices(&self) -> &[Vec<T>] {
        &self.gamma
    }

    /// Affine chart `v -> 1 + Hv`. The result always sums to `d`; for
    /// `v` in the polytope it is the template of `v`.
    pub fn chart(&self, v: &[T]) -> Vec<T> {
        (0..self.d).map(|i| T::one() + dot(&self.gamma[i], v)).collect()
    }

    /// Inverse chart `c -> H'(c - 1)`.
    pub fn unchart(&self, c: &[T]) -> Vec<T> {
        let shifted: Vec<T> = c.iter().map(|&x| x - T::one()).collect();
        self.h.tvec(&shifted)
    }

    /// `min_i (1 + gamma_i . x)`; nonnegative up to slack iff `x` is in
    /// the polytope.
    pub fn membership_slack(&self, x: &[T]) -> T {
        (0..self.d)
            .map(|i| T::one() + dot(&self.gamma[i], x))
            .fold(T::infinity(), T::min)
    }

    /// Template of a polytope point, with tiny negative coordinates
    /// clamped to zero.
    pub fn to_template(&self, x: &[T]) -> Result<Template<T>> {
        if x.len() != self.dim() {
            return Err(Error::OutsidePolytope("wrong coordinate length".into()));
        }
        let slack = self.membership_slack(x);
        if slack < -T::tol_member() {
            return Err(Error::OutsidePolytope(format!(
                "membership slack {slack} below -{}",
                T::tol_member()
            )));
        }
        let mut coords = self.chart(x);
        for c in &mut coords {
            if *c < T::zero() {
                *c = T::zero();
            }
        }
        Template::new(coords)
    }

    /// Anchored coordinates of a template.
    pub fn from_template(&self, a: &Template<T>) -> Vec<T> {
        self.unchart(a.coords())
    }

    /// Centered image `H'(theta - 1/d)` of a composition vector, i.e. the
    /// base point `h_theta = sum_i theta_i gamma_i`.
    pub fn composition_base(&self, theta: &[T]) -> Result<Vec<T>> {
        if theta.len() != self.d {
            return Err(Error::InvalidComposition("wrong length".into()));
        }
        let sum = ksum(theta.iter().copied());
        if (sum - T::one()).abs() > T::tol_tight() {
            return Err(Error::InvalidComposition(format!("sums to {sum}")));
        }
        if theta.iter().any(|&t| t < -T::tol_tight()) {
            return Err(Error::InvalidComposition("negative entry".into()));
        }
        let mut out = vec![Accum::new(); self.dim()];
        for (i, &t) in theta.iter().enumerate() {
            for (j, acc) in out.iter_mut().enumerate() {
                acc.add(t * self.gamma[i][j]);
            }
        }
        Ok(out.into_iter().map(|a| a.value()).collect())
    }

    /// Barycentric coordinates of a base point in the vertex hull:
    /// `theta(h) = 1/d + Hh`, the unique affine combination of the
    /// `gamma_i` equal to `h`.
    pub fn hull_barycentric(&self, h: &[T]) -> Vec<T> {
        let inv_d = T::one() / T::from_usize(self.d).unwrap();
        (0..self.d)
            .map(|i| inv_d + dot(&self.gamma[i], h))
            .collect()
    }

    /// Restricted permutation matrix `P_pi = H' Pi H` acting on the gauge
    /// space; `perm[i]` is the image of `i`.
    pub fn restricted_permutation(&self, perm: &[usize]) -> Mat<T> {
        let n = self.dim();
        let mut out = Mat::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                let mut acc = Accum::new();
                for i in 0..self.d {
                    acc.add(self.h[(perm[i], a)] * self.h[(i, b)]);
                }
                out[(a, b)] = acc.value();
            }
        }
        out
    }

    /// Largest attainable norm on the polytope, `sqrt(d(d-1))`.
    pub fn radius(&self) -> T {
        T::from_usize(self.d * (self.d - 1)).unwrap().sqrt()
    }
}

/// A point of the template simplex: nonnegative coordinates summing to `d`.
///
/// Carries the derived statistics `A(a) = sum 1/a_i` (extended-real),
/// `B(a) = sum a_i^2`, `S(a) = B(a) - d`, and
/// `C(a) = (A(a)B(a) - d^2) / (d(d-1))`.
#[derive(Clone, Debug, PartialEq)]
pub struct Template<T> {
    a: Vec<T>,
}

impl<T: Scalar> Template<T> {
    pub fn new(a: Vec<T>) -> Result<Self> {
        let d = a.len();
        if d < 2 {
            return Err(Error::InvalidDimension { min: 2, got: d });
        }
        if a.iter().any(|x| !x.is_finite() || *x < -T::tol_exact()) {
            return Err(Error::OutsidePolytope("negative template coordinate".into()));
        }
        let sum = ksum(a.iter().copied());
        if (sum - T::from_usize(d).unwrap()).abs() > T::tol_member() * T::from_usize(d).unwrap() {
            return Err(Error::OutsidePolytope(format!(
                "template sums to {sum}, expected {d}"
            )));
        }
        let mut a = a;
        for x in &mut a {
            if *x < T::zero() {
                *x = T::zero();
            }
        }
        Ok(Template { a })
    }

    /// The center `(1, ..., 1)`.
    pub fn center(d: usize) -> Self {
        Template {
            a: vec![T::one(); d],
        }
    }

    pub fn d(&self) -> usize {
        self.a.len()
    }

    pub fn coords(&self) -> &[T] {
        &self.a
    }

    /// `A(a) = sum 1/a_i`, `+inf` when some coordinate vanishes.
    pub fn stat_a(&self) -> T {
        if self.a.iter().any(|x| *x == T::zero()) {
            return T::infinity();
        }
        ksum(self.a.iter().map(|&x| T::one() / x))
    }

    /// `B(a) = sum a_i^2`.
    pub fn stat_b(&self) -> T {
        ksum(self.a.iter().map(|&x| x * x))
    }

    /// `S(a) = B(a) - d`, the squared norm of the anchored point.
    pub fn stat_s(&self) -> T {
        self.stat_b() - T::from_usize(self.d()).unwrap()
    }

    /// `C(a) = (A(a)B(a) - d^2)/(d(d-1))`, the averaged directed pairwise
    /// chi-square of the orbit law of `a`; `+inf` when `A(a)` is.
    pub fn stat_c(&self) -> T {
        let d = self.d();
        let a = self.stat_a();
        if a.is_infinite() {
            return T::infinity();
        }
        let dd = T::from_usize(d).unwrap();
        (a * self.stat_b() - dd * dd) / (dd * (dd - T::one()))
    }

    /// `max_i a_i / min_j a_j`, `+inf` when the minimum vanishes.
    pub fn max_min_ratio(&self) -> T {
        let mut lo = T::infinity();
        let mut hi = T::zero();
        for &x in &self.a {
            lo = lo.min(x);
            hi = hi.max(x);
        }
        if lo == T::zero() {
            if hi == T::zero() {
                T::one()
            } else {
                T::infinity()
            }
        } else {
            hi / lo
        }
    }

    pub fn sorted_desc(&self) -> Template<T> {
        let mut a = self.a.clone();
        a.sort_by(|x, y| y.partial_cmp(x).unwrap());
        Template { a }
    }
}

/// One weighted support point of a law on the gauge space.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom<T> {
    pub weight: T,
    pub point: Vec<T>,
}

impl<T: Scalar> Atom<T> {
    pub fn new(weight: T, point: Vec<T>) -> Self {
        Atom { weight, point }
    }
}

/// A finitely supported mean-zero probability law on the simplex polytope.
///
/// Construction canonicalizes: atoms whose templates agree within `1e-10`
/// in max-norm are merged (weights added, points weight-averaged), and
/// atoms are sorted lexicographically by template coordinates, so equal
/// laws have identical representations.
#[derive(Clone, Debug)]
pub struct AnchoredLaw<T> {
    basis: SimplexBasis<T>,
    atoms: Vec<Atom<T>>,
}

impl<T: Scalar> AnchoredLaw<T> {
    pub fn new(basis: SimplexBasis<T>, atoms: Vec<Atom<T>>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidLaw("no atoms".into()));
        }
        let mut keys: Vec<Vec<T>> = Vec::with_capacity(atoms.len());
        for atom in &atoms {
            if !atom.weight.is_finite() || atom.weight <= T::zero() {
                return Err(Error::InvalidLaw(format!(
                    "nonpositive atom weight {}",
                    atom.weight
                )));
            }
            if atom.point.len() != basis.dim() {
                return Err(Error::InvalidLaw("atom dimension mismatch".into()));
            }
            let slack = basis.membership_slack(&atom.point);
            if slack < -T::tol_member() {
                return Err(Error::InvalidLaw(format!(
                    "atom outside polytope (slack {slack})"
                )));
            }
            if norm2(&atom.point) > basis.radius() + T::tol_member() {
                return Err(Error::InvalidLaw("atom norm exceeds polytope radius".into()));
            }
            keys.push(basis.chart(&atom.point));
        }
        let atoms = merge_clusters(atoms, &keys, |a| basis.chart(&a.point));

        let total = ksum(atoms.iter().map(|a| a.weight));
        if (total - T::one()).abs() > T::tol_exact() * T::of(8.0) {
            return Err(Error::InvalidLaw(format!("weights sum to {total}")));
        }
        let law = AnchoredLaw { basis, atoms };
        let mean = law.mean();
        if norm2(&mean) > T::tol_tight() {
            return Err(Error::InvalidLaw(format!(
                "law mean has norm {} (must anchor at zero)",
                norm2(&mean)
            )));
        }
        Ok(law)
    }

    /// The point mass at the center of the polytope.
    pub fn dirac_center(basis: SimplexBasis<T>) -> Self {
        let dim = basis.dim();
        AnchoredLaw {
            basis,
            atoms: vec![Atom::new(T::one(), vec![T::zero(); dim])],
        }
    }

    /// Builds a law from template-coordinate atoms.
    pub fn from_template_atoms(
        basis: SimplexBasis<T>,
        atoms: Vec<(T, Template<T>)>,
    ) -> Result<Self> {
        let converted = atoms
            .into_iter()
            .map(|(w, t)| Atom::new(w, basis.from_template(&t)))
            .collect();
        Self::new(basis, converted)
    }

    pub fn basis(&self) -> &SimplexBasis<T> {
        &self.basis
    }

    pub fn d(&self) -> usize {
        self.basis.d()
    }

    pub fn atoms(&self) -> &[Atom<T>] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mean(&self) -> Vec<T> {
        let mut acc = vec![Accum::new(); self.basis.dim()];
        for atom in &self.atoms {
            for (j, a) in acc.iter_mut().enumerate() {
                a.add(atom.weight * atom.point[j]);
            }
        }
        acc.into_iter().map(|a| a.value()).collect()
    }

    pub fn template(&self, idx: usize) -> Template<T> {
        self.basis
            .to_template(&self.atoms[idx].point)
            .expect("stored atom is in the polytope")
    }

    pub fn templates(&self) -> Vec<Template<T>> {
        (0..self.len()).map(|i| self.template(i)).collect()
    }

    pub fn template_law(&self) -> TemplateLaw<T> {
        TemplateLaw {
            d: self.d(),
            atoms: self
                .atoms
                .iter()
                .enumerate()
                .map(|(i, a)| (a.weight, self.template(i)))
                .collect(),
        }
    }

    /// Max over matched atoms of weight and template discrepancies.
    /// Returns `+inf` when the supports have different sizes.
    pub fn max_atom_distance(&self, other: &AnchoredLaw<T>) -> T {
        if self.len() != other.len() {
            return T::infinity();
        }
        let mut worst = T::zero();
        for (a, b) in self.atoms.iter().zip(&other.atoms) {
            worst = worst.max((a.weight - b.weight).abs());
            let ta = self.basis.chart(&a.point);
            let tb = other.basis.chart(&b.point);
            worst = worst.max(max_norm_diff(&ta, &tb));
        }
        worst
    }
}

/// The image of an anchored law under the template chart; the wire
/// representation is built from this view.
#[derive(Clone, Debug)]
pub struct TemplateLaw<T> {
    d: usize,
    atoms: Vec<(T, Template<T>)>,
}

impl<T: Scalar> TemplateLaw<T> {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn atoms(&self) -> &[(T, Template<T>)] {
        &self.atoms
    }

    pub fn into_law(self, basis: SimplexBasis<T>) -> Result<AnchoredLaw<T>> {
        AnchoredLaw::from_template_atoms(basis, self.atoms)
    }
}

fn max_norm_diff<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |m, (x, y)| m.max((*x - *y).abs()))
}

/// Merges atoms whose keys fall in the same tolerance cluster (weights
/// added, points weight-averaged) and sorts the result lexicographically
/// by the recomputed key.
pub(crate) fn merge_clusters<T: Scalar>(
    atoms: Vec<Atom<T>>,
    keys: &[Vec<T>],
    rekey: impl Fn(&Atom<T>) -> Vec<T>,
) -> Vec<Atom<T>> {
    let clusters = crate::linalg::tolerance_clusters(keys, T::tol_tight());
    let mut merged: Vec<(Vec<T>, Atom<T>)> = Vec::with_capacity(clusters.len());
    for cluster in clusters {
        if cluster.is_empty() {
            continue;
        }
        let w = ksum(cluster.iter().map(|&k| atoms[k].weight));
        let dim = atoms[cluster[0]].point.len();
        let mut point = vec![Accum::new(); dim];
        for &k in &cluster {
            for (j, acc) in point.iter_mut().enumerate() {
                acc.add(atoms[k].weight * atoms[k].point[j]);
            }
        }
        let point: Vec<T> = point.into_iter().map(|a| a.value() / w).collect();
        let atom = Atom::new(w, point);
        let key = rekey(&atom);
        merged.push((key, atom));
    }
    merged.sort_by(|x, y| lex_cmp(&x.0, &y.0));
    merged.into_iter().map(|(_, a)| a).collect()
}

/// Distinct permutations of a template in lexicographic order.
///
/// Coordinates that compare exactly equal are treated as identical, so a
/// two-level template with `s` high coordinates yields `binom(d, s)`
/// permutations.
fn distinct_permutations<T: Scalar>(a: &[T], cap: usize) -> Result<Vec<Vec<T>>> {
    let mut cur: Vec<T> = a.to_vec();
    cur.sort_by(|x, y| x.partial_cmp(y).unwrap());
    // Count d! / prod(mult!) first so pathological inputs fail fast.
    let mut count = 1.0f64;
    let mut run = 1usize;
    for i in 1..=cur.len() {
        count *= i as f64;
        if i < cur.len() && cur[i] == cur[i - 1] {
            run += 1;
        } else {
            for k in 2..=run {
                count /= k as f64;
            }
            run = 1;
        }
    }
    if count > cap as f64 {
        return Err(Error::TooLarge(format!(
            "permutation orbit has ~{count:.0} elements, cap {cap}"
        )));
    }
    let mut out = Vec::with_capacity(count as usize);
    loop {
        out.push(cur.clone());
        // next_permutation
        let n = cur.len();
        let Some(i) = (0..n - 1).rev().find(|&i| cur[i] < cur[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
    }
    Ok(out)
}

const ORBIT_CAP: usize = 4_000_000;

/// The exchangeable law placing uniform mass on the permutation orbit of
/// a template. The mean vanishes exactly by symmetry.
pub fn orbit_law<T: Scalar>(basis: &SimplexBasis<T>, a: &Template<T>) -> Result<AnchoredLaw<T>> {
    if a.d() != basis.d() {
        return Err(Error::InvalidDimension {
            min: basis.d(),
            got: a.d(),
        });
    }
    let perms = distinct_permutations(a.coords(), ORBIT_CAP)?;
    let w = T::one() / T::from_usize(perms.len()).unwrap();
    let atoms = perms
        .into_iter()
        .map(|coords| Atom::new(w, basis.unchart(&coords)))
        .collect();
    AnchoredLaw::new(basis.clone(), atoms)
}

/// Permutation averaging: redistributes each atom uniformly over its
/// orbit and merges. The result is exchangeable, the trace of the
/// covariance is preserved, and the pairwise chi-square budget never
/// increases.
pub fn symmetrize<T: Scalar>(law: &AnchoredLaw<T>) -> Result<AnchoredLaw<T>> {
    let basis = law.basis();
    let mut atoms: Vec<Atom<T>> = Vec::new();
    for (i, atom) in law.atoms().iter().enumerate() {
        let template = law.template(i);
        let perms = distinct_permutations(template.coords(), ORBIT_CAP)?;
        let w = atom.weight / T::from_usize(perms.len()).unwrap();
        for coords in perms {
            atoms.push(Atom::new(w, basis.unchart(&coords)));
        }
    }
    AnchoredLaw::new(basis.clone(), atoms)
}

/// Whether the law is invariant under all restricted permutations,
/// detected by comparing against its own symmetrization.
pub fn is_exchangeable<T: Scalar>(law: &AnchoredLaw<T>) -> Result<bool> {
    let sym = symmetrize(law)?;
    Ok(law.max_atom_distance(&sym) <= T::tol_tight())
}

/// True iff the law is an extreme point of the mean-zero class: at most
/// `d` support points, affinely independent (rank test on lifted vectors
/// `(1, x)`).
pub fn is_extreme<T: Scalar>(law: &AnchoredLaw<T>) -> bool {
    let n = law.len();
    let d = law.d();
    if n > d {
        return false;
    }
    let mut rows = Vec::with_capacity(n);
    for atom in law.atoms() {
        let mut row = Vec::with_capacity(d);
        row.push(T::one());
        row.extend_from_slice(&atom.point);
        rows.push(row);
    }
    rank(&Mat::from_rows(rows), T::tol_tight()) == n
}

/// For a non-extreme law, a constructive split `rho = (rho_+ + rho_-)/2`
/// into distinct valid laws along an affine-dependence direction of the
/// support. Returns `None` for extreme laws.
pub fn decompose_non_extreme<T: Scalar>(
    law: &AnchoredLaw<T>,
) -> Option<(AnchoredLaw<T>, AnchoredLaw<T>)> {
    let n = law.len();
    let d = law.d();
    // Columns are the lifted support points (1, x_k).
    let mut lifted = Mat::zeros(d, n);
    for (k, atom) in law.atoms().iter().enumerate() {
        lifted[(0, k)] = T::one();
        for (j, &x) in atom.point.iter().enumerate() {
            lifted[(j + 1, k)] = x;
        }
    }
    let c = nullspace_vector(&lifted, T::tol_tight())?;
    let mut eps = T::infinity();
    for (k, atom) in law.atoms().iter().enumerate() {
        if c[k].abs() > T::tol_exact() {
            eps = eps.min(atom.weight / (T::of(2.0) * c[k].abs()));
        }
    }
    if !eps.is_finite() || eps <= T::zero() {
        return None;
    }
    let shift = |sign: T| -> Result<AnchoredLaw<T>> {
        let atoms = law
            .atoms()
            .iter()
            .enumerate()
            .map(|(k, a)| Atom::new(a.weight + sign * eps * c[k], a.point.clone()))
            .collect();
        AnchoredLaw::new(law.basis().clone(), atoms)
    };
    match (shift(T::one()), shift(-T::one())) {
        (Ok(p), Ok(m)) => Some((p, m)),
        _ => None,
    }
}

/// All permutations of `0..d` (used by tests and by the permutation
/// action helpers; factorial growth is the caller's concern).
pub fn permutations(d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..d).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (0..d - 1).rev().find(|&i| cur[i] < cur[i + 1]) else {
            break;
        };
        let j = (i + 1..d).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
    }
    out
}

/// Total-ordering helper for sorting float keys.
pub fn float_cmp<T: Scalar>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).expect("non-finite sort key")
}

#[cfg(test)]
mod tests {
    use super::*;

    type B = SimplexBasis<f64>;

    #[test]
    fn helmert_d2_vertices() {
        let basis = B::new(2).unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        assert!((basis.gamma(0)[0] - s).abs() < 1e-15);
        assert!((basis.gamma(1)[0] + s).abs() < 1e-15);
    }

    #[test]
    fn vertex_identities_d3() {
        let basis = B::new(3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 2.0 / 3.0 } else { -1.0 / 3.0 };
                assert!((dot(basis.gamma(i), basis.gamma(j)) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn vertex_sum_vanishes_many_d() {
        for d in 2..=12 {
            let basis = B::new(d).unwrap();
            for j in 0..d - 1 {
                let s = ksum((0..d).map(|i| basis.gamma(i)[j]));
                assert!(s.abs() < 1e-12, "d={d} coord={j} sum={s}");
            }
        }
    }

    #[test]
    fn rejects_d_below_two() {
        assert!(matches!(
            B::new(1),
            Err(Error::InvalidDimension { min: 2, got: 1 })
        ));
    }

    #[test]
    fn template_round_trip_and_norm() {
        let basis = B::new(3).unwrap();
        // Vertex template: norm^2 = d(d-1).
        let a = Template::new(vec![3.0, 0.0, 0.0]).unwrap();
        let x = basis.from_template(&a);
        assert!((dot(&x, &x) - 6.0).abs() < 1e-12);
        let back = basis.to_template(&x).unwrap();
        for (p, q) in back.coords().iter().zip(a.coords()) {
            assert!((p - q).abs() < 1e-12);
        }
        // Center maps to the origin.
        let center = Template::center(3);
        let origin = basis.from_template(&center);
        assert!(norm2(&origin) < 1e-15);
    }

    #[test]
    fn explicit_d2_template_coordinates() {
        let basis = B::new(2).unwrap();
        let a = Template::new(vec![1.5, 0.5]).unwrap();
        let x = basis.from_template(&a);
        assert!((x[0] - 1.0 / 2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn outside_point_rejected() {
        let basis = B::new(3).unwrap();
        let far = vec![10.0, 10.0];
        assert!(matches!(
            basis.to_template(&far),
            Err(Error::OutsidePolytope(_))
        ));
    }

    #[test]
    fn orbit_law_center_is_dirac() {
        let basis = B::new(4).unwrap();
        let law = orbit_law(&basis, &Template::center(4)).unwrap();
        assert_eq!(law.len(), 1);
        assert!(norm2(&law.atoms()[0].point) < 1e-15);
    }

    #[test]
    fn orbit_law_two_level_d3() {
        let basis = B::new(3).unwrap();
        let a = Template::new(vec![2.0, 0.5, 0.5]).unwrap();
        let law = orbit_law(&basis, &a).unwrap();
        assert_eq!(law.len(), 3);
        for atom in law.atoms() {
            assert!((atom.weight - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!(norm2(&law.mean()) < 1e-14);
    }

    #[test]
    fn orbit_law_covariance_isotropic() {
        let basis = B::new(4).unwrap();
        let a = Template::new(vec![2.0, 1.0, 0.6, 0.4]).unwrap();
        let law = orbit_law(&basis, &a).unwrap();
        let dim = basis.dim();
        let mut sigma = Mat::<f64>::zeros(dim, dim);
        for atom in law.atoms() {
            for i in 0..dim {
                for j in 0..dim {
                    sigma[(i, j)] += atom.weight * atom.point[i] * atom.point[j];
                }
            }
        }
        let iso = sigma.trace() / dim as f64;
        for i in 0..dim {
            for j in 0..dim {
                let want = if i == j { iso } else { 0.0 };
                assert!((sigma[(i, j)] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn symmetrize_fixes_exchangeable_input() {
        let basis = B::new(3).unwrap();
        let a = Template::new(vec![1.8, 0.7, 0.5]).unwrap();
        let law = orbit_law(&basis, &a).unwrap();
        let sym = symmetrize(&law).unwrap();
        assert!(law.max_atom_distance(&sym) < 1e-12);
        assert!(is_exchangeable(&law).unwrap());
    }

    #[test]
    fn symmetrize_is_idempotent() {
        let basis = B::new(3).unwrap();
        let mix = {
            let a = orbit_law(&basis, &Template::new(vec![2.0, 0.6, 0.4]).unwrap()).unwrap();
            let b = orbit_law(&basis, &Template::new(vec![1.3, 1.0, 0.7]).unwrap()).unwrap();
            let mut atoms = Vec::new();
            for at in a.atoms() {
                atoms.push(Atom::new(at.weight * 0.6, at.point.clone()));
            }
            for at in b.atoms() {
                atoms.push(Atom::new(at.weight * 0.4, at.point.clone()));
            }
            AnchoredLaw::new(basis.clone(), atoms).unwrap()
        };
        let once = symmetrize(&mix).unwrap();
        let twice = symmetrize(&once).unwrap();
        assert!(once.max_atom_distance(&twice) < 1e-12);
    }

    #[test]
    fn extreme_point_checks() {
        let basis = B::new(2).unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        let law = AnchoredLaw::new(
            basis.clone(),
            vec![Atom::new(0.5, vec![s]), Atom::new(0.5, vec![-s])],
        )
        .unwrap();
        assert!(is_extreme(&law));
        assert!(decompose_non_extreme(&law).is_none());

        let dirac = AnchoredLaw::dirac_center(B::new(3).unwrap());
        assert!(is_extreme(&dirac));

        // An orbit law with d+1 or more atoms cannot be extreme.
        let basis3 = B::new(3).unwrap();
        let orbit = orbit_law(&basis3, &Template::new(vec![1.6, 1.0, 0.4]).unwrap()).unwrap();
        assert_eq!(orbit.len(), 6);
        assert!(!is_extreme(&orbit));
        let (p, m) = decompose_non_extreme(&orbit).expect("six atoms in two dims");
        assert!(p.max_atom_distance(&m) > 1e-12);
        // Midpoint recovers the original weights.
        for ((a, b), orig) in p.atoms().iter().zip(m.atoms()).zip(orbit.atoms()) {
            assert!((0.5 * (a.weight + b.weight) - orig.weight).abs() < 1e-12);
        }
    }

    #[test]
    fn single_offcenter_atom_is_invalid() {
        let basis = B::new(3).unwrap();
        let x = basis.unchart(&[1.5, 0.75, 0.75]);
        assert!(matches!(
            AnchoredLaw::new(basis, vec![Atom::new(1.0, x)]),
            Err(Error::InvalidLaw(_))
        ));
    }

    #[test]
    fn restricted_permutation_matches_template_action() {
        let basis = B::new(3).unwrap();
        let perm = vec![1usize, 2, 0];
        let p = basis.restricted_permutation(&perm);
        let a = Template::new(vec![1.7, 0.9, 0.4]).unwrap();
        let x = basis.from_template(&a);
        let px = p.matvec(&x);
        let pa = basis.to_template(&px).unwrap();
        // 1 + gamma_i . (P x) = 1 + gamma_{perm^{-1}(i)} . x
        for i in 0..3 {
            let src = perm.iter().position(|&v| v == i).unwrap();
            assert!((pa.coords()[i] - a.coords()[src]).abs() < 1e-12);
        }
    }
}

