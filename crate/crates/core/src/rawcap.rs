//! Exact canonical design under the raw local-ratio cap.
//!
//! With every pairwise template ratio capped at `lambda = e^eps0`, the
//! feasible templates form the polytope `{a >= 0 : sum a = d,
//! a_i <= lambda a_j}` whose extreme points are the two-level subset
//! templates. Trace maximization therefore reduces to the explicit
//! one-dimensional family
//! `T_{d,lambda}(s) = d s (d-s) (lambda-1)^2 / (d + s(lambda-1))^2`,
//! unimodal in `s` around `d / (lambda + 1)`, and the exact worst-case
//! canonical risks are `(d-1)^2 / (n T*)` (i.i.d.) and that value minus
//! `(d-1)/(nd)` (fixed composition).

use crate::design::{chi_star, trace_cap_coeff, two_level_template};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::simplex::{orbit_law, AnchoredLaw, SimplexBasis, Template};

/// The exchangeable `s`-subset mechanism at level ratio `lambda`: the
/// orbit law of the sorted two-level template with `s` high coordinates
/// `alpha_s = lambda d / (d + s(lambda-1))` and `d - s` low coordinates
/// `beta_s = d / (d + s(lambda-1))`.
pub fn subset_law<T: Scalar>(d: usize, lambda: T, s: usize) -> Result<AnchoredLaw<T>> {
    if lambda <= T::one() || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "level ratio lambda = {lambda} must exceed 1"
        )));
    }
    let template = subset_template(d, lambda, s)?;
    let basis = SimplexBasis::new(d)?;
    orbit_law(&basis, &template)
}

/// The sorted subset template itself.
pub fn subset_template<T: Scalar>(d: usize, lambda: T, s: usize) -> Result<Template<T>> {
    if d < 2 {
        return Err(Error::InvalidDimension { min: 2, got: d });
    }
    if s == 0 || s >= d {
        return Err(Error::InvalidParameter(format!(
            "subset size s = {s} outside 1..{}",
            d - 1
        )));
    }
    two_level_template(d, s, lambda)
}

/// `T_{d,lambda}(s)`, the trace of the `s`-subset mechanism.
pub fn subset_trace<T: Scalar>(d: usize, lambda: T, s: usize) -> T {
    let d_t = T::from_usize(d).unwrap();
    let s_t = T::from_usize(s).unwrap();
    let lm1 = lambda - T::one();
    let denom = d_t + s_t * lm1;
    d_t * s_t * (d_t - s_t) * lm1 * lm1 / (denom * denom)
}

/// The trace curve over subset sizes with its maximizing set.
#[derive(Clone, Debug)]
pub struct TraceCurve<T> {
    pub d: usize,
    pub lambda: T,
    /// `T_{d,lambda}(s)` for `s = 1..d-1`.
    pub values: Vec<T>,
    /// All maximizing sizes (ties within `1e-12` kept); a subset of the
    /// two integers bracketing `d / (lambda + 1)`.
    pub phase_set: Vec<usize>,
    /// Smallest maximizing size (deterministic representative).
    pub s_star: usize,
    pub trace_opt: T,
}

/// Evaluates `T_{d,lambda}(s)` over `s = 1..d-1` and locates the argmax.
pub fn t_curve<T: Scalar>(d: usize, lambda: T) -> Result<TraceCurve<T>> {
    if d < 2 {
        return Err(Error::InvalidDimension { min: 2, got: d });
    }
    if lambda <= T::one() || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "level ratio lambda = {lambda} must exceed 1"
        )));
    }
    let values: Vec<T> = (1..d).map(|s| subset_trace(d, lambda, s)).collect();
    let trace_opt = values.iter().copied().fold(-T::infinity(), T::max);
    let tie = T::tol_exact() * T::one().max(trace_opt);
    let phase_set: Vec<usize> = (1..d)
        .filter(|&s| (values[s - 1] - trace_opt).abs() <= tie)
        .collect();
    let s_star = phase_set[0];
    Ok(TraceCurve {
        d,
        lambda,
        values,
        phase_set,
        s_star,
        trace_opt,
    })
}

/// Exact raw-cap design summary.
#[derive(Clone, Debug)]
pub struct RawCapReport<T> {
    pub d: usize,
    pub eps0: T,
    pub lambda: T,
    pub n: usize,
    pub phase_set: Vec<usize>,
    pub s_star: usize,
    /// `T_d*(lambda)`.
    pub trace_opt: T,
    /// `n` times the worst-case i.i.d. risk, `(d-1)^2 / T_d*`.
    pub n_times_risk_iid: T,
    /// `n` times the worst-case fixed-composition risk.
    pub n_times_risk_fc: T,
    pub risk_iid: T,
    pub risk_fc: T,
}

/// Exact canonical optimum under the raw `eps0` cap: the maximizing
/// subset mechanism and closed-form worst-case risks.
pub fn rawcap_optimum<T: Scalar>(d: usize, eps0: T, n: usize) -> Result<RawCapReport<T>> {
    if eps0 <= T::zero() || !eps0.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "eps0 = {eps0} must be positive"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let lambda = eps0.exp();
    let curve = t_curve(d, lambda)?;
    let d_t = T::from_usize(d).unwrap();
    let n_t = T::from_usize(n).unwrap();
    let n_iid = (d_t - T::one()) * (d_t - T::one()) / curve.trace_opt;
    let n_fc = n_iid - (d_t - T::one()) / d_t;
    Ok(RawCapReport {
        d,
        eps0,
        lambda,
        n,
        phase_set: curve.phase_set,
        s_star: curve.s_star,
        trace_opt: curve.trace_opt,
        n_times_risk_iid: n_iid,
        n_times_risk_fc: n_fc,
        risk_iid: n_iid / n_t,
        risk_fc: n_fc / n_t,
    })
}

/// Raw-cap trace maximum versus the chi-square trace cap evaluated at the
/// maximizing subset law: `(T_d*, K_d chi*, d(d-1) chi*)`.
#[derive(Clone, Debug)]
pub struct RawCapComparison<T> {
    pub d: usize,
    pub eps0: T,
    pub s_star: usize,
    pub trace_exact: T,
    pub kd_chi: T,
    pub crude: T,
}

pub fn rawcap_vs_budget<T: Scalar>(d: usize, eps0: T) -> Result<RawCapComparison<T>> {
    if d < 3 {
        return Err(Error::InvalidDimension { min: 3, got: d });
    }
    if eps0 <= T::zero() || !eps0.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "eps0 = {eps0} must be positive"
        )));
    }
    let lambda = eps0.exp();
    let curve = t_curve(d, lambda)?;
    let law = subset_law(d, lambda, curve.s_star)?;
    let chi = chi_star(&law).value;
    let d_t = T::from_usize(d).unwrap();
    Ok(RawCapComparison {
        d,
        eps0,
        s_star: curve.s_star,
        trace_exact: curve.trace_opt,
        kd_chi: trace_cap_coeff::<T>(d)? * chi,
        crude: d_t * (d_t - T::one()) * chi,
    })
}

/// One entry of the varying-cap benchmark `(d-1)^2 / (n T_d*(lambda_n))`.
#[derive(Clone, Copy, Debug)]
pub struct VaryingCapEntry<T> {
    pub eps0: T,
    pub n: usize,
    pub bound: T,
    /// `n T_d*(lambda_n)`; entries below 10 sit outside the asymptotic
    /// regime and are flagged.
    pub effective_information: T,
    pub in_regime: bool,
}

/// Evaluates the finite-n benchmark along a schedule of caps and sample
/// sizes.
pub fn varying_cap<T: Scalar>(
    d: usize,
    schedule: &[(T, usize)],
) -> Result<Vec<VaryingCapEntry<T>>> {
    let d_t = T::from_usize(d).unwrap();
    schedule
        .iter()
        .map(|&(eps0, n)| {
            if eps0 <= T::zero() || n == 0 {
                return Err(Error::InvalidParameter(format!(
                    "schedule entry (eps0 = {eps0}, n = {n})"
                )));
            }
            let curve = t_curve(d, eps0.exp())?;
            let n_t = T::from_usize(n).unwrap();
            let effective = n_t * curve.trace_opt;
            Ok(VaryingCapEntry {
                eps0,
                n,
                bound: (d_t - T::one()) * (d_t - T::one()) / effective,
                effective_information: effective,
                in_regime: effective >= T::of(10.0),
            })
        })
        .collect()
}

/// Golden 4-decimal table rows for the standard grid
/// `d in {3, 5, 10, 20}`, `eps0 in {0.5, 1, 2}`.
pub mod golden {
    /// `(d, eps0, s_star, T*, n R_iid, n R_fc)`.
    pub const TABLE1: &[(usize, f64, usize, &str, &str, &str)] = &[
        (3, 0.5, 1, "0.1897", "21.0899", "20.4232"),
        (3, 1.0, 1, "0.7957", "5.0268", "4.3601"),
        (3, 2.0, 1, "2.7783", "1.4397", "0.7731"),
        (5, 0.5, 2, "0.3184", "50.2587", "49.4587"),
        (5, 1.0, 1, "1.3083", "12.2298", "11.4298"),
        (5, 2.0, 1, "6.2940", "2.5421", "1.7421"),
        (10, 0.5, 4, "0.6367", "127.2172", "126.3172"),
        (10, 1.0, 3, "2.6996", "30.0041", "29.1041"),
        (10, 2.0, 1, "13.6775", "5.9221", "5.0221"),
        (20, 0.5, 8, "1.2734", "283.4902", "282.5402"),
        (20, 1.0, 5, "5.4176", "66.6344", "65.6844"),
        (20, 2.0, 2, "27.3551", "13.1968", "12.2468"),
    ];

    /// `(d, eps0, s_star, exact T*, K_d chi*, d(d-1) chi*)`.
    pub const TABLE2: &[(usize, f64, usize, &str, &str, &str)] = &[
        (3, 0.5, 1, "0.1897", "0.1907", "1.1118"),
        (3, 1.0, 1, "0.7957", "0.8812", "5.1358"),
        (3, 2.0, 1, "2.7783", "5.0813", "29.6160"),
        (5, 0.5, 2, "0.3184", "0.3579", "3.2208"),
        (5, 1.0, 1, "1.3083", "1.3359", "12.0229"),
        (5, 2.0, 1, "6.2940", "9.0427", "81.3841"),
        (10, 0.5, 4, "0.6367", "0.8052", "12.8832"),
        (10, 1.0, 3, "2.6996", "3.4977", "55.9634"),
        (10, 2.0, 1, "13.6775", "15.9062", "254.4990"),
        (20, 0.5, 8, "1.2734", "1.7944", "51.5326"),
        (20, 1.0, 5, "5.4176", "7.3780", "211.8811"),
        (20, 2.0, 2, "27.3551", "35.4483", "1017.9961"),
    ];

    /// The grid the tables run over.
    pub const GRID_D: &[usize] = &[3, 5, 10, 20];
    pub const GRID_EPS0: &[f64] = &[0.5, 1.0, 2.0];
}

/// Round-half-even formatting to four decimals, matching the golden
/// tables.
pub fn round4(value: f64) -> String {
    let scaled = value * 1e4;
    let floor = scaled.floor();
    let frac = scaled - floor;
    let rounded = if (frac - 0.5).abs() < 1e-9 {
        // Exact half: round to even.
        if (floor as i64) % 2 == 0 {
            floor
        } else {
            floor + 1.0
        }
    } else {
        scaled.round()
    };
    format!("{:.4}", rounded / 1e4)
}

/// A computed Table-1 row.
#[derive(Clone, Debug)]
pub struct Table1Row {
    pub d: usize,
    pub eps0: f64,
    pub s_star: usize,
    pub trace_opt: f64,
    pub n_risk_iid: f64,
    pub n_risk_fc: f64,
}

/// A computed Table-2 row.
#[derive(Clone, Debug)]
pub struct Table2Row {
    pub d: usize,
    pub eps0: f64,
    pub s_star: usize,
    pub trace_exact: f64,
    pub kd_chi: f64,
    pub crude: f64,
}

/// Regenerates the subset-selection phase table over the standard grid.
pub fn table1() -> Vec<Table1Row> {
    let mut rows = Vec::new();
    for &d in golden::GRID_D {
        for &eps0 in golden::GRID_EPS0 {
            let report = rawcap_optimum::<f64>(d, eps0, 1).expect("grid parameters are valid");
            rows.push(Table1Row {
                d,
                eps0,
                s_star: report.s_star,
                trace_opt: report.trace_opt,
                n_risk_iid: report.n_times_risk_iid,
                n_risk_fc: report.n_times_risk_fc,
            });
        }
    }
    rows
}

/// Regenerates the raw-cap versus chi-square-cap comparison table.
pub fn table2() -> Vec<Table2Row> {
    let mut rows = Vec::new();
    for &d in golden::GRID_D {
        for &eps0 in golden::GRID_EPS0 {
            let cmp = rawcap_vs_budget::<f64>(d, eps0).expect("grid parameters are valid");
            rows.push(Table2Row {
                d,
                eps0,
                s_star: cmp.s_star,
                trace_exact: cmp.trace_exact,
                kd_chi: cmp.kd_chi,
                crude: cmp.crude,
            });
        }
    }
    rows
}

/// First deviation of the regenerated tables from the golden values, if
/// any: `(table, row index, column name, got, want)`.
pub fn golden_mismatch() -> Option<(usize, usize, &'static str, String, String)> {
    for (k, (row, want)) in table1().iter().zip(golden::TABLE1).enumerate() {
        if row.s_star != want.2 {
            return Some((1, k, "s_star", row.s_star.to_string(), want.2.to_string()));
        }
        let checks = [
            ("T_star", round4(row.trace_opt), want.3),
            ("nR_iid", round4(row.n_risk_iid), want.4),
            ("nR_fc", round4(row.n_risk_fc), want.5),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Some((1, k, name, got, want.to_string()));
            }
        }
    }
    for (k, (row, want)) in table2().iter().zip(golden::TABLE2).enumerate() {
        if row.s_star != want.2 {
            return Some((2, k, "s_star", row.s_star.to_string(), want.2.to_string()));
        }
        let checks = [
            ("T_exact", round4(row.trace_exact), want.3),
            ("Kd_chi", round4(row.kd_chi), want.4),
            ("crude", round4(row.crude), want.5),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Some((2, k, name, got, want.to_string()));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ldp_check;
    use crate::design::{
        augmented_rr, moment_stats, risk_iid, sup_risk_fc, sup_risk_iid_exchangeable,
    };
    use crate::simplex::Atom;

    #[test]
    fn subset_law_caps_exactly_at_eps0() {
        let eps0 = 0.7f64;
        let law = subset_law(4, eps0.exp(), 2).unwrap();
        assert!(ldp_check(&law, eps0).pass);
        assert!(!ldp_check(&law, eps0 * 0.999).pass);
    }

    #[test]
    fn subset_trace_matches_moments() {
        for (d, s, eps0) in [(3usize, 1usize, 0.5f64), (5, 2, 1.0), (6, 3, 2.0)] {
            let lambda = eps0.exp();
            let law = subset_law(d, lambda, s).unwrap();
            let stats = moment_stats(&law);
            assert!(
                (stats.trace - subset_trace(d, lambda, s)).abs() < 1e-12,
                "d={d} s={s}"
            );
        }
    }

    #[test]
    fn singleton_subset_is_full_activation_augmented_rr() {
        let lambda = 1.9f64;
        let a = subset_law(4, lambda, 1).unwrap();
        let b = augmented_rr(4, 1.0, lambda).unwrap();
        assert!(a.max_atom_distance(&b) < 1e-12);
    }

    #[test]
    fn subset_trace_table_value() {
        let lambda = 0.5f64.exp();
        assert_eq!(round4(subset_trace(3, lambda, 1)), "0.1897");
    }

    #[test]
    fn t_curve_bracketing_and_unimodality() {
        for d in [3usize, 5, 10, 20, 37] {
            for eps0 in [0.3f64, 0.5, 1.0, 2.0, 3.5] {
                let lambda = eps0.exp();
                let curve = t_curve(d, lambda).unwrap();
                let pivot = d as f64 / (lambda + 1.0);
                for &s in &curve.phase_set {
                    assert!(
                        s == pivot.floor().max(1.0) as usize
                            || s == (pivot.ceil() as usize).min(d - 1),
                        "d={d} eps0={eps0} s={s} pivot={pivot}"
                    );
                }
                for s in 1..d - 1 {
                    let rising = (s as f64 + 1.0) <= pivot;
                    let falling = (s as f64) >= pivot;
                    if rising {
                        assert!(curve.values[s] > curve.values[s - 1]);
                    } else if falling {
                        assert!(curve.values[s] < curve.values[s - 1]);
                    }
                }
            }
        }
    }

    #[test]
    fn t_curve_known_argmaxes() {
        assert_eq!(t_curve(10, 1.0f64.exp()).unwrap().s_star, 3);
        let c = t_curve(20, 2.0f64.exp()).unwrap();
        assert_eq!(c.s_star, 2);
        assert_eq!(round4(c.trace_opt), "27.3551");
    }

    #[test]
    fn rawcap_optimum_reproduces_subset_risks() {
        for (d, eps0) in [(3usize, 0.5f64), (5, 2.0), (10, 1.0)] {
            let report = rawcap_optimum(d, eps0, 100).unwrap();
            let law = subset_law(d, report.lambda, report.s_star).unwrap();
            let stats = moment_stats(&law);
            let iid = sup_risk_iid_exchangeable(&stats, 100);
            assert!(
                (iid - report.risk_iid).abs() < 1e-12,
                "d={d} eps0={eps0} iid={iid} want={}",
                report.risk_iid
            );
            let fc = sup_risk_fc(&law, 100);
            assert!((fc - report.risk_fc).abs() < 1e-12);
            // The uniform composition attains the i.i.d. worst case.
            let uniform = vec![1.0 / d as f64; d];
            let direct = risk_iid(&law, &uniform, 100).unwrap();
            assert!((direct - report.risk_iid).abs() < 1e-12);
        }
    }

    #[test]
    fn rawcap_table_values() {
        let r = rawcap_optimum(3, 0.5f64, 1).unwrap();
        assert_eq!(round4(r.n_times_risk_iid), "21.0899");
        assert_eq!(round4(r.n_times_risk_fc), "20.4232");
        let r5 = rawcap_optimum(5, 2.0f64, 1).unwrap();
        assert_eq!(round4(r5.n_times_risk_iid), "2.5421");
    }

    #[test]
    fn tied_phase_set_mixture_preserves_trace() {
        // Locate a lambda where T(2) == T(3) for d = 6 by bisection, then
        // check the tie is kept and a uniform mixture of the tied subset
        // laws achieves the same trace.
        let d = 6usize;
        let f = |l: f64| subset_trace(d, l, 2) - subset_trace(d, l, 3);
        let (mut lo, mut hi) = (1.3f64, 2.2f64);
        assert!(f(lo) < 0.0 && f(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let lambda = 0.5 * (lo + hi);
        let curve = t_curve(d, lambda).unwrap();
        assert_eq!(curve.phase_set, vec![2, 3]);
        assert_eq!(curve.s_star, 2);
        let a = subset_law(d, lambda, 2).unwrap();
        let b = subset_law(d, lambda, 3).unwrap();
        let mut atoms = Vec::new();
        for at in a.atoms() {
            atoms.push(Atom::new(at.weight * 0.5, at.point.clone()));
        }
        for at in b.atoms() {
            atoms.push(Atom::new(at.weight * 0.5, at.point.clone()));
        }
        let mix = crate::simplex::AnchoredLaw::new(a.basis().clone(), atoms).unwrap();
        let stats = moment_stats(&mix);
        assert!((stats.trace - curve.trace_opt).abs() < 1e-12);
    }

    #[test]
    fn varying_cap_scaling_and_guard() {
        let d = 3usize;
        let entries = varying_cap(d, &[(0.5f64, 1000), (0.5, 2000)]).unwrap();
        assert!((entries[0].bound / entries[1].bound - 2.0).abs() < 1e-12);
        assert!((entries[0].bound - 21.0899 / 1000.0).abs() < 1e-4);
        assert!(entries[0].in_regime);
        let tiny = varying_cap(d, &[(0.01f64, 10)]).unwrap();
        assert!(!tiny[0].in_regime);
        let grow = varying_cap(d, &[(0.5f64, 10), (0.5, 100), (0.5, 1000)]).unwrap();
        assert!(grow
            .windows(2)
            .all(|w| w[1].effective_information > w[0].effective_information));
    }

    #[test]
    fn golden_tables_match() {
        assert_eq!(golden_mismatch(), None);
    }

    #[test]
    fn table2_crude_dominates() {
        for row in table2() {
            assert!(row.trace_exact <= row.kd_chi + 1e-9);
            assert!(row.kd_chi <= row.crude);
        }
    }

    #[test]
    fn subset_templates_are_ratio_extreme() {
        // Any feasible template with max/min ratio strictly below lambda
        // is a midpoint of two feasible templates; subset templates sit at
        // ratio exactly lambda.
        let d = 5usize;
        let lambda = 1.6f64;
        for s in 1..d {
            let t = subset_template(d, lambda, s).unwrap();
            assert!((t.max_min_ratio() - lambda).abs() < 1e-12);
        }
        let interior = Template::new(vec![1.2, 1.1, 1.0, 0.9, 0.8]).unwrap();
        assert!(interior.max_min_ratio() < lambda);
        let eps = 1e-3;
        let mut up = interior.coords().to_vec();
        let mut down = interior.coords().to_vec();
        up[0] += eps;
        up[4] -= eps;
        down[0] -= eps;
        down[4] += eps;
        let up = Template::new(up).unwrap();
        let down = Template::new(down).unwrap();
        assert!(up.max_min_ratio() <= lambda && down.max_min_ratio() <= lambda);
        for i in 0..d {
            let mid = 0.5 * (up.coords()[i] + down.coords()[i]);
            assert!((mid - interior.coords()[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            subset_law(4, 0.9f64, 1),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            subset_law(4, 2.0f64, 0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            subset_law(4, 2.0f64, 4),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            rawcap_optimum(3, 0.0f64, 10),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            rawcap_vs_budget(2, 1.0f64),
            Err(Error::InvalidDimension { .. })
        ));
    }

    #[test]
    fn round4_half_even() {
        assert_eq!(round4(0.12345), "0.1234");
        assert_eq!(round4(0.12355), "0.1236");
        assert_eq!(round4(0.12341), "0.1234");
        assert_eq!(round4(21.089851), "21.0899");
    }
}
