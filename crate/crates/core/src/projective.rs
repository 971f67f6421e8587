//! Projective maps and fibers: `T_h(x) = x / (1 + h.x)` with inverse
//! `S_h(y) = y / (1 - h.y)`, fibers of anchored laws, exact transport
//! between interior base points, and reconstruction from interior fibers.
//!
//! A fiber at base `h` is the pushforward under `T_h` of the tilted law
//! `(1 + h.x) rho(dx)`. At interior bases the tilt is strictly positive on
//! the whole polytope, the fiber has mean zero, and the law is exactly
//! recoverable. At boundary bases, support on the kernel face
//! `{1 + h.x = 0}` is invisible to the fiber; its mass is reported in
//! `lost_mass` and reconstruction is refused.

use crate::error::{Error, Result};
use crate::linalg::{dot, ksum, norm2, Accum};
use crate::scalar::Scalar;
use crate::simplex::{AnchoredLaw, Atom, SimplexBasis};

/// Default barycentric threshold below which a base point is treated as
/// boundary.
pub fn interior_threshold<T: Scalar>() -> T {
    T::tol_tight()
}

/// Whether `h` lies in the vertex hull (barycentric coordinates
/// nonnegative up to slack).
pub fn base_in_hull<T: Scalar>(basis: &SimplexBasis<T>, h: &[T]) -> bool {
    basis
        .hull_barycentric(h)
        .iter()
        .all(|&t| t >= -interior_threshold::<T>())
}

/// Whether `h` is interior to the vertex hull at the given threshold.
pub fn is_interior_with<T: Scalar>(basis: &SimplexBasis<T>, h: &[T], threshold: T) -> bool {
    basis.hull_barycentric(h).iter().all(|&t| t > threshold)
}

pub fn is_interior<T: Scalar>(basis: &SimplexBasis<T>, h: &[T]) -> bool {
    is_interior_with(basis, h, interior_threshold::<T>())
}

/// Forward projective map `x -> x / (1 + h.x)`.
pub fn project_point<T: Scalar>(x: &[T], h: &[T]) -> Result<Vec<T>> {
    let t = T::one() + dot(h, x);
    if t <= T::tol_exact() {
        return Err(Error::OnFiberKernel);
    }
    Ok(x.iter().map(|&v| v / t).collect())
}

/// Inverse projective map `y -> y / (1 - h.y)`.
pub fn unproject_point<T: Scalar>(y: &[T], h: &[T]) -> Result<Vec<T>> {
    let t = T::one() - dot(h, y);
    if t <= T::zero() {
        return Err(Error::NotRealizable(format!(
            "1 - h.y = {t} is not positive"
        )));
    }
    Ok(y.iter().map(|&v| v / t).collect())
}

/// A finitely supported fiber: base point, weighted atoms in the fiber
/// domain, and the law mass carried by the kernel face (zero at interior
/// bases).
#[derive(Clone, Debug)]
pub struct Fiber<T> {
    basis: SimplexBasis<T>,
    base: Vec<T>,
    atoms: Vec<Atom<T>>,
    lost_mass: T,
}

impl<T: Scalar> Fiber<T> {
    /// Validated constructor for externally supplied fibers.
    pub fn new(
        basis: SimplexBasis<T>,
        base: Vec<T>,
        atoms: Vec<Atom<T>>,
        lost_mass: T,
    ) -> Result<Self> {
        if base.len() != basis.dim() {
            return Err(Error::InvalidBase("wrong base length".into()));
        }
        if !base_in_hull(&basis, &base) {
            return Err(Error::InvalidBase(
                "base outside the vertex hull".into(),
            ));
        }
        if lost_mass < -T::tol_exact() || lost_mass > T::one() + T::tol_exact() {
            return Err(Error::InvalidLaw(format!("lost mass {lost_mass}")));
        }
        for atom in &atoms {
            if !atom.weight.is_finite() || atom.weight < T::zero() {
                return Err(Error::InvalidLaw("negative fiber weight".into()));
            }
            // Membership in the fiber domain: 1 + (gamma_i - h).y >= 0.
            for i in 0..basis.d() {
                let g = basis.gamma(i);
                let s = T::one() + dot(g, &atom.point) - dot(&base, &atom.point);
                if s < -T::tol_member() {
                    return Err(Error::InvalidLaw(format!(
                        "fiber atom violates domain constraint by {s}"
                    )));
                }
            }
        }
        let total = ksum(atoms.iter().map(|a| a.weight));
        if (total - T::one()).abs() > T::tol_exact() * T::of(8.0)
            && (total + lost_mass - T::one()).abs() > T::tol_exact() * T::of(8.0)
        {
            return Err(Error::InvalidLaw(format!(
                "fiber mass {total} with lost mass {lost_mass} conserves neither convention"
            )));
        }
        let mut f = Fiber {
            basis,
            base,
            atoms,
            lost_mass: lost_mass.max(T::zero()),
        };
        f.canonicalize();
        Ok(f)
    }

    fn canonicalize(&mut self) {
        let atoms = core::mem::take(&mut self.atoms);
        let keys: Vec<Vec<T>> = atoms.iter().map(|a| self.basis.chart(&a.point)).collect();
        self.atoms = crate::simplex::merge_clusters(atoms, &keys, |a| self.basis.chart(&a.point));
    }

    pub fn basis(&self) -> &SimplexBasis<T> {
        &self.basis
    }

    pub fn base(&self) -> &[T] {
        &self.base
    }

    pub fn atoms(&self) -> &[Atom<T>] {
        &self.atoms
    }

    pub fn lost_mass(&self) -> T {
        self.lost_mass
    }

    pub fn is_interior(&self) -> bool {
        is_interior(&self.basis, &self.base)
    }

    pub fn total_weight(&self) -> T {
        ksum(self.atoms.iter().map(|a| a.weight))
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

    /// Max over matched atoms of weight/coordinate discrepancies plus the
    /// lost-mass discrepancy; `+inf` on support-size mismatch.
    pub fn max_atom_distance(&self, other: &Fiber<T>) -> T {
        if self.atoms.len() != other.atoms.len() {
            return T::infinity();
        }
        let mut worst = (self.lost_mass - other.lost_mass).abs();
        for (a, b) in self.atoms.iter().zip(&other.atoms) {
            worst = worst.max((a.weight - b.weight).abs());
            for (p, q) in a.point.iter().zip(&b.point) {
                worst = worst.max((*p - *q).abs());
            }
        }
        worst
    }
}

/// The fiber of a law at base `h`: each atom `(w, x)` maps to
/// `(w (1 + h.x), T_h(x))`; atoms on the kernel face contribute their law
/// mass to `lost_mass` instead. At interior bases the surviving weights
/// sum to one and the fiber mean vanishes.
pub fn fiber<T: Scalar>(law: &AnchoredLaw<T>, h: &[T]) -> Result<Fiber<T>> {
    let basis = law.basis();
    if h.len() != basis.dim() {
        return Err(Error::InvalidBase("wrong base length".into()));
    }
    if !base_in_hull(basis, h) {
        return Err(Error::InvalidBase("base outside the vertex hull".into()));
    }
    let mut atoms = Vec::with_capacity(law.len());
    let mut lost = Accum::new();
    for atom in law.atoms() {
        let t = T::one() + dot(h, &atom.point);
        if t <= T::tol_exact() {
            lost.add(atom.weight);
            continue;
        }
        let point = atom.point.iter().map(|&v| v / t).collect();
        atoms.push(Atom::new(atom.weight * t, point));
    }
    let mut f = Fiber {
        basis: basis.clone(),
        base: h.to_vec(),
        atoms,
        lost_mass: lost.value(),
    };
    f.canonicalize();
    Ok(f)
}

/// Exact transport of an interior fiber to a new base `k`: weights are
/// rescaled by `1 + (k - h).y` and points mapped by `T_{k-h}`. Equals
/// `fiber(rho, k)` of the generating law. Atoms pushed onto the kernel of
/// the move contribute their law mass (`w (1 - h.y)`) to `lost_mass`.
pub fn transport<T: Scalar>(f: &Fiber<T>, k: &[T]) -> Result<Fiber<T>> {
    if !f.is_interior() || f.lost_mass() > T::tol_exact() {
        return Err(Error::BoundaryBase);
    }
    let basis = f.basis();
    if k.len() != basis.dim() {
        return Err(Error::InvalidBase("wrong base length".into()));
    }
    if !base_in_hull(basis, k) {
        return Err(Error::InvalidBase("base outside the vertex hull".into()));
    }
    let delta: Vec<T> = k.iter().zip(f.base()).map(|(&a, &b)| a - b).collect();
    let mut atoms = Vec::with_capacity(f.atoms().len());
    let mut lost = Accum::new();
    for atom in f.atoms() {
        let factor = T::one() + dot(&delta, &atom.point);
        if factor <= T::tol_exact() {
            // The generating atom sits on the kernel face of k; its law
            // mass is w (1 - h.y).
            lost.add(atom.weight * (T::one() - dot(f.base(), &atom.point)));
            continue;
        }
        let w = atom.weight * factor;
        if w == T::zero() {
            continue;
        }
        let point = atom.point.iter().map(|&v| v / factor).collect();
        atoms.push(Atom::new(w, point));
    }
    let mut out = Fiber {
        basis: basis.clone(),
        base: k.to_vec(),
        atoms,
        lost_mass: lost.value(),
    };
    out.canonicalize();
    Ok(out)
}

/// The unique anchored law with the given interior fiber: pushforward
/// under `S_h` of the weights rescaled by `1 - h.y`.
pub fn reconstruct_from_fiber<T: Scalar>(f: &Fiber<T>) -> Result<AnchoredLaw<T>> {
    if !f.is_interior() {
        return Err(Error::BoundaryBase);
    }
    if f.lost_mass() > T::tol_exact() {
        return Err(Error::NotRealizable(format!(
            "fiber lost mass {}",
            f.lost_mass()
        )));
    }
    let mean = f.mean();
    if norm2(&mean) > T::of(1e-8).max(T::tol_member()) {
        return Err(Error::NotRealizable(format!(
            "fiber mean has norm {}",
            norm2(&mean)
        )));
    }
    let h = f.base();
    let mut atoms = Vec::with_capacity(f.atoms().len());
    for atom in f.atoms() {
        let t = T::one() - dot(h, &atom.point);
        if t <= T::zero() {
            return Err(Error::NotRealizable(
                "fiber atom violates 1 - h.y > 0".into(),
            ));
        }
        let point = atom.point.iter().map(|&v| v / t).collect();
        atoms.push(Atom::new(atom.weight * t, point));
    }
    AnchoredLaw::new(f.basis().clone(), atoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{anchor, Channel};

    fn test_law() -> AnchoredLaw<f64> {
        anchor(
            &Channel::new(vec![
                vec![0.5, 0.3, 0.2],
                vec![0.1, 0.6, 0.3],
                vec![0.25, 0.25, 0.5],
            ])
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn projection_fixes_origin_and_zero_base() {
        let x = vec![0.3, -0.2];
        let h = vec![0.0, 0.0];
        assert_eq!(project_point(&x, &h).unwrap(), x);
        let y = project_point(&[0.0, 0.0], &[0.4, 0.1]).unwrap();
        assert!(norm2(&y) < 1e-15);
    }

    #[test]
    fn projection_round_trip() {
        let x = vec![0.35f64, -0.15];
        let h = vec![0.2, 0.3];
        let y = project_point(&x, &h).unwrap();
        let back = unproject_point(&y, &h).unwrap();
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn explicit_d2_projection() {
        let basis = SimplexBasis::<f64>::new(2).unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        let h = vec![basis.gamma(0)[0] / 2.0];
        let y = project_point(&[s], &h).unwrap();
        assert!((y[0] - s / 1.25).abs() < 1e-14);
    }

    #[test]
    fn kernel_point_rejected() {
        let basis = SimplexBasis::<f64>::new(2).unwrap();
        // Template (0, 2) maps to x with 1 + gamma_1 . x = 0.
        let x = basis.unchart(&[0.0, 2.0]);
        let h = basis.gamma(0).to_vec();
        assert!(matches!(project_point(&x, &h), Err(Error::OnFiberKernel)));
    }

    #[test]
    fn fiber_at_zero_is_identity() {
        let law = test_law();
        let f = fiber(&law, &[0.0, 0.0]).unwrap();
        assert!(f.lost_mass() < 1e-15);
        assert_eq!(f.atoms().len(), law.len());
        for (a, b) in f.atoms().iter().zip(law.atoms()) {
            assert!((a.weight - b.weight).abs() < 1e-15);
            for (p, q) in a.point.iter().zip(&b.point) {
                assert!((p - q).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn interior_fiber_mean_zero_and_mass_one() {
        let law = test_law();
        let basis = law.basis();
        let h = basis
            .composition_base(&[0.5, 0.3, 0.2])
            .unwrap();
        assert!(is_interior(basis, &h));
        let f = fiber(&law, &h).unwrap();
        assert!(f.lost_mass() == 0.0);
        assert!(norm2(&f.mean()) < 1e-12);
        assert!((f.total_weight() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_fiber_collects_kernel_mass() {
        let basis = SimplexBasis::<f64>::new(2).unwrap();
        // Two-atom mean-zero law with one atom on the face a_1 = 0.
        let x_face = basis.unchart(&[0.0, 2.0]); // 1 + gamma_1.x = 0
        let x_other = basis.unchart(&[1.5, 0.5]);
        // Mean zero: w * x_face + (1-w) * x_other = 0.
        let w = x_other[0] / (x_other[0] - x_face[0]);
        let law = AnchoredLaw::new(
            basis.clone(),
            vec![
                Atom::new(w, x_face.clone()),
                Atom::new(1.0 - w, x_other.clone()),
            ],
        )
        .unwrap();
        let h = basis.gamma(0).to_vec();
        assert!(!is_interior(&basis, &h));
        let f = fiber(&law, &h).unwrap();
        assert!((f.lost_mass() - w).abs() < 1e-12);
        // Surviving tilted weights still sum to one.
        assert!((f.total_weight() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fiber_rejects_base_outside_hull() {
        let law = test_law();
        assert!(matches!(
            fiber(&law, &[5.0, 5.0]),
            Err(Error::InvalidBase(_))
        ));
    }

    #[test]
    fn transport_identity_and_consistency() {
        let law = test_law();
        let basis = law.basis().clone();
        let h = basis.composition_base(&[0.4, 0.35, 0.25]).unwrap();
        let k = basis.composition_base(&[0.25, 0.3, 0.45]).unwrap();
        let fh = fiber(&law, &h).unwrap();
        let same = transport(&fh, &h).unwrap();
        assert!(fh.max_atom_distance(&same) < 1e-13);
        let moved = transport(&fh, &k).unwrap();
        let direct = fiber(&law, &k).unwrap();
        assert!(moved.max_atom_distance(&direct) < 1e-12);
    }

    #[test]
    fn transport_round_trip_and_triangle() {
        let law = test_law();
        let basis = law.basis().clone();
        let g = basis.composition_base(&[0.5, 0.25, 0.25]).unwrap();
        let h = basis.composition_base(&[0.2, 0.45, 0.35]).unwrap();
        let k = basis.composition_base(&[0.3, 0.3, 0.4]).unwrap();
        let fg = fiber(&law, &g).unwrap();
        let back = transport(&transport(&fg, &h).unwrap(), &g).unwrap();
        assert!(fg.max_atom_distance(&back) < 1e-12);
        let via_h = transport(&transport(&fg, &h).unwrap(), &k).unwrap();
        let direct = transport(&fg, &k).unwrap();
        assert!(via_h.max_atom_distance(&direct) < 1e-11);
    }

    #[test]
    fn transport_refuses_boundary_input() {
        let basis = SimplexBasis::<f64>::new(2).unwrap();
        let law = anchor(&Channel::brr(1.0)).unwrap();
        let h = basis.gamma(0).to_vec();
        let f = fiber(&law, &h).unwrap();
        assert!(matches!(transport(&f, &[0.0]), Err(Error::BoundaryBase)));
    }

    #[test]
    fn reconstruct_round_trip() {
        let law = test_law();
        let basis = law.basis().clone();
        let h = basis.composition_base(&[0.3, 0.45, 0.25]).unwrap();
        let f = fiber(&law, &h).unwrap();
        let back = reconstruct_from_fiber(&f).unwrap();
        assert!(law.max_atom_distance(&back) < 1e-12);
        let again = fiber(&back, &h).unwrap();
        assert!(f.max_atom_distance(&again) < 1e-12);
    }

    #[test]
    fn reconstruct_dirac_fiber() {
        let basis = SimplexBasis::<f64>::new(3).unwrap();
        let h = basis.composition_base(&[0.4, 0.3, 0.3]).unwrap();
        let f = Fiber::new(
            basis.clone(),
            h,
            vec![Atom::new(1.0, vec![0.0, 0.0])],
            0.0,
        )
        .unwrap();
        let law = reconstruct_from_fiber(&f).unwrap();
        assert_eq!(law.len(), 1);
        assert!(norm2(&law.atoms()[0].point) < 1e-15);
    }

    #[test]
    fn reconstruct_refuses_boundary_and_nonzero_mean() {
        let basis = SimplexBasis::<f64>::new(2).unwrap();
        let law = anchor(&Channel::brr(1.0)).unwrap();
        let boundary = fiber(&law, &basis.gamma(0).to_vec()).unwrap();
        assert!(matches!(
            reconstruct_from_fiber(&boundary),
            Err(Error::BoundaryBase)
        ));
        // Interior fiber with a deliberately broken mean.
        let skew = Fiber::new(
            basis.clone(),
            vec![0.1],
            vec![Atom::new(1.0, vec![0.25])],
            0.0,
        )
        .unwrap();
        assert!(matches!(
            reconstruct_from_fiber(&skew),
            Err(Error::NotRealizable(_))
        ));
    }

    #[test]
    fn fiber_norm_bound() {
        let law = test_law();
        let basis = law.basis().clone();
        let h = basis.composition_base(&[0.45, 0.35, 0.2]).unwrap();
        let f = fiber(&law, &h).unwrap();
        let min_tilt = law
            .atoms()
            .iter()
            .map(|a| 1.0 + dot(&h, &a.point))
            .fold(f64::INFINITY, f64::min);
        let bound = basis.radius() / min_tilt;
        for atom in f.atoms() {
            assert!(norm2(&atom.point) <= bound + 1e-12);
        }
    }

    #[test]
    fn vertex_template_has_boundary_membership() {
        // Sanity on hull membership: gamma_0 itself is in the hull but not
        // interior; midpoints with the center are interior.
        let basis = SimplexBasis::<f64>::new(3).unwrap();
        let g0 = basis.gamma(0).to_vec();
        assert!(base_in_hull(&basis, &g0));
        assert!(!is_interior(&basis, &g0));
        let mid: Vec<f64> = g0.iter().map(|v| v * 0.5).collect();
        assert!(is_interior(&basis, &mid));
    }
}
