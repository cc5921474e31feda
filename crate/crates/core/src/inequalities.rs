//! Numerical probes of the functional inequalities: Gagliardo-Nirenberg
//! quotients, the Hardy quotient, norm monotonicity, and the one-dimensional
//! sup/total-variation bound. Constants are estimated one-sidedly by
//! extremizing the scale-invariant quotients over the sphere.

use crate::lattice::{BoxDomain, LatticeField};
use crate::scalar::Real;
use crate::solver::random_sphere_point;
use crate::{Error, Result};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::sync::Arc;

/// Interpolation quotient `‖u‖_p / (‖∇u‖₂^θ ‖u‖₂^{1−θ})`.
pub fn gns_quotient<T: Real>(u: &LatticeField<T>, p: T, theta: T) -> Result<T> {
    if u.mass() <= T::zero() {
        return Err(Error::ZeroField);
    }
    if !(p > T::of(2.0)) {
        return Err(Error::InvalidParameter(format!("p must exceed 2, got {p}")));
    }
    if !(theta > T::zero() && theta <= T::one()) {
        return Err(Error::InvalidParameter(format!("theta must lie in (0,1], got {theta}")));
    }
    let grad = u.gradient_energy().sqrt();
    Ok(u.lp_norm(p)? / (grad.powf(theta) * u.l2_norm().powf(T::one() - theta)))
}

/// Mass-critical quotient `‖u‖_{2+4/d}^{2+4/d} / (‖∇u‖₂² ‖u‖₂^{4/d})`; its
/// supremum is the constant of the critical inequality. For `d = 2` this is
/// exactly the four-norm bound `‖u‖₄⁴ ≤ C‖∇u‖₂²‖u‖₂²`.
pub fn mass_critical_quotient<T: Real>(u: &LatticeField<T>) -> Result<T> {
    let m = u.mass();
    if m <= T::zero() {
        return Err(Error::ZeroField);
    }
    let d = u.domain().dim();
    let q = T::of(2.0 + 4.0 / d as f64);
    let num = u.lp_norm(q)?.powf(q);
    Ok(num / (u.gradient_energy() * m.powf(T::of(2.0 / d as f64))))
}

/// Hardy quotient `‖∇u‖₂² / Σ u(x)²/(1+|x|²)`; its infimum over `u ≠ 0`
/// bounds the best Hardy constant from above.
pub fn hardy_quotient<T: Real>(u: &LatticeField<T>) -> Result<T> {
    if u.mass() <= T::zero() {
        return Err(Error::ZeroField);
    }
    let dom = u.domain();
    let mut weighted = T::zero();
    for (i, &v) in u.values().iter().enumerate() {
        weighted += v * v / (T::one() + T::from_i64(dom.dist2(i)).unwrap());
    }
    Ok(u.gradient_energy() / weighted)
}

/// One-sided constant estimate, with the metadata needed to interpret it.
#[derive(Debug, Clone, Serialize)]
#[serde(bound = "T: Real")]
pub struct ConstantReport<T: Real> {
    pub inequality: String,
    pub d: usize,
    pub p: T,
    pub estimate: T,
    /// "lower": the true constant is at least this; "upper": at most.
    pub direction: String,
    pub box_l: i64,
    pub trials: usize,
    pub seed: u64,
}

/// Extremize a scale-invariant quotient on the unit sphere by projected
/// gradient steps with an adaptive step length. `sign = +1` ascends,
/// `sign = -1` descends. Returns the running extremum over every iterate
/// evaluated, which is one-sided by construction.
fn extremize_quotient<T: Real>(
    u0: &LatticeField<T>,
    quotient: &dyn Fn(&LatticeField<T>) -> Result<T>,
    grad_ln: &dyn Fn(&LatticeField<T>) -> LatticeField<T>,
    sign: T,
    max_iters: usize,
) -> Result<T> {
    let mut u = u0.renormalized(T::one())?;
    let mut q = quotient(&u)?;
    let mut best = q;
    let mut step = T::one();
    for _ in 0..max_iters {
        let g = grad_ln(&u);
        let radial = g.inner(&u).expect("same domain");
        let mut gp = g;
        gp.add_scaled(-radial, &u);
        let gn = gp.l2_norm();
        if gn <= T::of(1e-10) || step <= T::of(1e-14) {
            break;
        }
        let mut cand = u.clone();
        cand.add_scaled(sign * step, &gp);
        match cand.renormalized(T::one()) {
            Ok(c) => {
                let qc = quotient(&c)?;
                if sign * (qc - q) > T::zero() {
                    u = c;
                    q = qc;
                    step = (step * T::of(2.0)).min(T::one());
                    if sign * (q - best) > T::zero() {
                        best = q;
                    }
                } else {
                    step *= T::of(0.5);
                }
            }
            Err(_) => step *= T::of(0.5),
        }
    }
    Ok(best)
}

/// Lower estimate of the mass-critical constant: supremum of the quotient
/// over a `δ_0` seed plus `trials` refined random starts.
pub fn estimate_gns_constant<T: Real>(
    domain: &Arc<BoxDomain>,
    trials: usize,
    seed: u64,
) -> Result<ConstantReport<T>> {
    if trials < 1 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    let d = domain.dim();
    let qexp = T::of(2.0 + 4.0 / d as f64);
    let quotient = |u: &LatticeField<T>| mass_critical_quotient(u);
    let grad_ln = |u: &LatticeField<T>| {
        // ∇ ln Q = q|u|^{q−2}u/N − 2(−Δu)/G − (4/d)u/m
        let m = u.mass();
        let g_energy = u.gradient_energy();
        let n: T = u.values().iter().map(|&v| v.abs().powf(qexp)).sum();
        let lap = u.laplacian();
        let mut out = u.clone();
        for (i, o) in out.values_mut().iter_mut().enumerate() {
            let v = u.values()[i];
            *o = qexp * v.abs().powf(qexp - T::of(2.0)) * v / n + T::of(2.0) * lap.values()[i] / g_energy
                - T::of(4.0 / d as f64) * v / m;
        }
        out
    };
    let zero = domain.site(0).iter().map(|_| 0i64).collect::<Vec<_>>();
    let delta = LatticeField::delta(domain, &zero)?;
    let mut best = extremize_quotient(&delta, &quotient, &grad_ln, T::one(), 2_000)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        rng.set_stream(trial as u64 + 1);
        let u0 = random_sphere_point(domain, T::one(), &mut rng)?;
        best = best.max(extremize_quotient(&u0, &quotient, &grad_ln, T::one(), 2_000)?);
    }
    Ok(ConstantReport {
        inequality: "mass_critical_gns".into(),
        d,
        p: qexp,
        estimate: best,
        direction: "lower".into(),
        box_l: domain.radius(),
        trials,
        seed,
    })
}

/// Upper estimate of the Hardy constant (`d ≥ 3`): infimum of the quotient
/// over a `δ_0` seed plus refined random starts.
pub fn estimate_hardy_constant<T: Real>(
    domain: &Arc<BoxDomain>,
    trials: usize,
    seed: u64,
) -> Result<ConstantReport<T>> {
    let d = domain.dim();
    if d < 3 {
        return Err(Error::InvalidParameter(format!(
            "the Hardy constant claim needs d >= 3, got d = {d}"
        )));
    }
    if trials < 1 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    let quotient = |u: &LatticeField<T>| hardy_quotient(u);
    let grad_ln = |u: &LatticeField<T>| {
        // ∇ ln Q = 2(−Δu)/G − (2u/(1+|x|²))/W
        let g_energy = u.gradient_energy();
        let dom = u.domain().clone();
        let mut weighted = T::zero();
        for (i, &v) in u.values().iter().enumerate() {
            weighted += v * v / (T::one() + T::from_i64(dom.dist2(i)).unwrap());
        }
        let lap = u.laplacian();
        let mut out = u.clone();
        for (i, o) in out.values_mut().iter_mut().enumerate() {
            let v = u.values()[i];
            let wgt = T::one() + T::from_i64(dom.dist2(i)).unwrap();
            *o = -T::of(2.0) * lap.values()[i] / g_energy - T::of(2.0) * v / wgt / weighted;
        }
        out
    };
    let zero = vec![0i64; d];
    let delta = LatticeField::delta(domain, &zero)?;
    let mut best = extremize_quotient(&delta, &quotient, &grad_ln, -T::one(), 2_000)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        rng.set_stream(trial as u64 + 1);
        let u0 = random_sphere_point(domain, T::one(), &mut rng)?;
        best = best.min(extremize_quotient(&u0, &quotient, &grad_ln, -T::one(), 2_000)?);
    }
    Ok(ConstantReport {
        inequality: "hardy".into(),
        d,
        p: T::of(2.0),
        estimate: best,
        direction: "upper".into(),
        box_l: domain.radius(),
        trials,
        seed,
    })
}

/// `‖u‖_q ≤ ‖u‖_p` for `q > p ≥ 1` (with 1e-12 slack).
pub fn check_norm_monotonicity<T: Real>(u: &LatticeField<T>, p: T, q: T) -> Result<bool> {
    if !(p < q) {
        return Err(Error::InvalidParameter(format!("need p < q, got p = {p}, q = {q}")));
    }
    Ok(u.lp_norm(q)? <= u.lp_norm(p)? + T::of(1e-12))
}

/// `‖u‖_∞ ≤ TV(u)` in `d = 1`, where `TV` is the once-per-edge sum of
/// `|u(y) − u(x)|` including the edges into the zero exterior.
pub fn check_sup_tv_d1<T: Real>(u: &LatticeField<T>) -> Result<bool> {
    let dom = u.domain();
    if dom.dim() != 1 {
        return Err(Error::InvalidParameter(format!(
            "sup/TV bound is one-dimensional, got d = {}",
            dom.dim()
        )));
    }
    let mut tv = T::zero();
    for (i, &v) in u.values().iter().enumerate() {
        let nbs = dom.neighbors(i);
        match nbs[0] {
            Some(j) => tv += (u.values()[j] - v).abs(),
            None => tv += v.abs(),
        }
        if nbs[1].is_none() {
            tv += v.abs();
        }
    }
    Ok(u.lp_norm(T::infinity())? <= tv + T::of(1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;

    type F = LatticeField<f64>;

    fn delta(d: usize, l: i64) -> F {
        let dom = BoxDomain::new(d, l).unwrap();
        F::delta(&dom, &vec![0; d]).unwrap()
    }

    fn random_field(dom: &Arc<BoxDomain>, rng: &mut ChaCha8Rng) -> F {
        F::new(
            Arc::clone(dom),
            (0..dom.site_count()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn quotient_examples() {
        assert!((mass_critical_quotient(&delta(1, 2)).unwrap() - 0.5).abs() < 1e-15);
        assert!((mass_critical_quotient(&delta(2, 2)).unwrap() - 0.25).abs() < 1e-15);
        assert!((hardy_quotient(&delta(3, 2)).unwrap() - 6.0).abs() < 1e-15);
        // general interpolation form with theta = 1 on delta_0 in d=1:
        // ||u||_p = 1, ||grad u|| = sqrt(2)
        let q = gns_quotient(&delta(1, 2), 6.0, 1.0).unwrap();
        assert!((q - 1.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn quotient_preconditions() {
        let d = delta(1, 2);
        let zero = F::zeros(d.domain());
        assert!(matches!(mass_critical_quotient(&zero), Err(Error::ZeroField)));
        assert!(matches!(hardy_quotient(&zero), Err(Error::ZeroField)));
        assert!(gns_quotient(&d, 2.0, 1.0).is_err());
        assert!(gns_quotient(&d, 4.0, 0.0).is_err());
        assert!(gns_quotient(&d, 4.0, 1.5).is_err());
    }

    #[test]
    fn quotients_are_scale_invariant() {
        let dom = BoxDomain::new(1, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let u = random_field(&dom, &mut rng);
            let c = rng.gen_range(0.1..10.0) * if rng.gen_bool(0.5) { -1.0 } else { 1.0 };
            let scaled = u.scaled(c);
            let q1 = mass_critical_quotient(&u).unwrap();
            let q2 = mass_critical_quotient(&scaled).unwrap();
            assert!((q1 - q2).abs() <= 1e-12 * (1.0 + q1.abs()));
            let h1 = hardy_quotient(&u).unwrap();
            let h2 = hardy_quotient(&scaled).unwrap();
            assert!((h1 - h2).abs() <= 1e-12 * (1.0 + h1.abs()));
        }
    }

    #[test]
    fn gns_estimate_bounds_and_monotonicity() {
        let dom = BoxDomain::new(1, 6).unwrap();
        let few = estimate_gns_constant::<f64>(&dom, 2, 9).unwrap();
        let more = estimate_gns_constant::<f64>(&dom, 4, 9).unwrap();
        assert!(few.estimate >= 0.5);
        assert!(more.estimate >= few.estimate);
        assert_eq!(few.direction, "lower");
        // every evaluated field satisfies the inequality with the estimate
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let u = random_field(&dom, &mut rng);
            assert!(mass_critical_quotient(&u).unwrap() <= more.estimate * (1.0 + 1e-9) + 1e-12);
        }
    }

    #[test]
    fn hardy_estimate_bounds() {
        let dom = BoxDomain::new(3, 4).unwrap();
        let rep = estimate_hardy_constant::<f64>(&dom, 2, 5).unwrap();
        assert!(rep.estimate <= 6.0);
        assert!(rep.estimate > 0.0);
        assert_eq!(rep.direction, "upper");
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let u = random_field(&dom, &mut rng);
            assert!(hardy_quotient(&u).unwrap() >= rep.estimate * (1.0 - 1e-9) - 1e-12);
        }
        let low = BoxDomain::new(2, 3).unwrap();
        assert!(estimate_hardy_constant::<f64>(&low, 1, 0).is_err());
    }

    #[test]
    fn norm_monotonicity_examples_and_sweep() {
        let dom = BoxDomain::new(1, 2).unwrap();
        let two = F::from_fn(&dom, |x| if x[0] == 0 || x[0] == 1 { 1.0 } else { 0.0 });
        assert!(check_norm_monotonicity(&two, 2.0, 4.0).unwrap());
        assert!((two.lp_norm(4.0).unwrap() - 2f64.powf(0.25)).abs() < 1e-15);
        let d = delta(1, 2);
        assert!(check_norm_monotonicity(&d, 1.0, 7.3).unwrap());
        assert!(check_norm_monotonicity(&d, 3.0, 3.0).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for dim in [1usize, 2] {
            let dom = BoxDomain::new(dim, 4).unwrap();
            for _ in 0..500 {
                let u = random_field(&dom, &mut rng);
                let p = rng.gen_range(1.0..6.0);
                let q = p + rng.gen_range(0.1..6.0);
                assert!(check_norm_monotonicity(&u, p, q).unwrap());
            }
        }
    }

    #[test]
    fn sup_tv_examples_and_sweep() {
        let d = delta(1, 3);
        assert!(check_sup_tv_d1(&d).unwrap());
        // monotone ramp up to the box edge: sup = 1, TV counts the interior
        // rises plus the drop across the boundary edge
        let dom = BoxDomain::new(1, 3).unwrap();
        let ramp = F::from_fn(&dom, |x| ((x[0] + 3) as f64 / 3.0).clamp(0.0, 1.0));
        assert!(check_sup_tv_d1(&ramp).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..1000 {
            let u = random_field(&dom, &mut rng);
            assert!(check_sup_tv_d1(&u).unwrap());
        }
        let dom2 = BoxDomain::new(2, 2).unwrap();
        assert!(check_sup_tv_d1(&F::delta(&dom2, &[0, 0]).unwrap()).is_err());
    }
}
