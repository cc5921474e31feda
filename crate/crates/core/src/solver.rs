//! Projected gradient descent on the mass sphere with multi-start, plus the
//! structural trial fields (tent and box profiles) used both as solver starts
//! and in the energy-curve checks.

use crate::energy::EnergyContext;
use crate::lattice::{BoxDomain, LatticeField};
use crate::scalar::Real;
use crate::{Error, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::sync::Arc;

/// Tent profile `u(x) ∝ (n − |x|₁)₊`, rescaled so `‖u‖₂² = a` exactly.
pub fn tent_field<T: Real>(domain: &Arc<BoxDomain>, a: T, n: i64) -> Result<LatticeField<T>> {
    if n < 1 || n > domain.radius() {
        return Err(Error::InvalidParameter(format!(
            "tent width n={n} must satisfy 1 <= n <= L={}",
            domain.radius()
        )));
    }
    let u = LatticeField::from_fn(domain, |x| {
        let dist: i64 = x.iter().map(|c| c.abs()).sum();
        if dist < n { T::from_i64(n - dist).unwrap() } else { T::zero() }
    });
    u.renormalized(a)
}

/// Constant `ξ` on the sup-norm ball `|x|_∞ ≤ R`, zero outside. The corner of
/// the sup ball has `|x|₁ = d·R`, so the ball must fit inside the domain.
pub fn box_field<T: Real>(domain: &Arc<BoxDomain>, xi: T, r: i64) -> Result<LatticeField<T>> {
    if r < 0 || r * domain.dim() as i64 > domain.radius() {
        return Err(Error::InvalidParameter(format!(
            "sup ball of radius R={r} does not fit in the l1 ball of radius {} (d={})",
            domain.radius(),
            domain.dim()
        )));
    }
    if !xi.is_finite() {
        return Err(Error::InvalidParameter(format!("box height xi={xi} must be finite")));
    }
    Ok(LatticeField::from_fn(domain, |x| {
        if x.iter().all(|c| c.abs() <= r) { xi } else { T::zero() }
    }))
}

/// Gaussian bump `exp(−|x−c|²/2σ²)` with random center, mass `a`.
pub fn gaussian_bump<T: Real, R: Rng>(
    domain: &Arc<BoxDomain>,
    a: T,
    rng: &mut R,
) -> Result<LatticeField<T>> {
    let center = domain.site(rng.gen_range(0..domain.site_count())).to_vec();
    let sigma = T::of((domain.radius() as f64 / 4.0).max(1.0));
    let u = LatticeField::from_fn(domain, |x| {
        let d2: i64 = x.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum();
        (-T::from_i64(d2).unwrap() / (T::of(2.0) * sigma * sigma)).exp()
    });
    u.renormalized(a)
}

/// Point with iid standard normal coordinates, renormalized: uniform on the
/// mass sphere.
pub fn random_sphere_point<T: Real, R: Rng>(
    domain: &Arc<BoxDomain>,
    a: T,
    rng: &mut R,
) -> Result<LatticeField<T>> {
    loop {
        let values: Vec<T> = (0..domain.site_count()).map(|_| standard_normal(rng)).collect();
        let u = LatticeField::new(Arc::clone(domain), values)?;
        if u.mass() > T::zero() {
            return u.renormalized(a);
        }
    }
}

fn standard_normal<T: Real, R: Rng>(rng: &mut R) -> T {
    // Box-Muller; avoids pulling in a distributions crate for one sampler.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    T::of((-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos())
}

/// A start field for the multi-start minimization.
#[derive(Debug, Clone)]
pub enum Start<T: Real> {
    Tent { n: i64 },
    Box { xi: T, r: i64 },
    GaussianBump,
    RandomSphere,
    Given { label: String, field: LatticeField<T> },
}

impl<T: Real> Start<T> {
    pub fn label(&self) -> String {
        match self {
            Start::Tent { n } => format!("tent(n={n})"),
            Start::Box { xi, r } => format!("box(xi={xi},R={r})"),
            Start::GaussianBump => "bump".into(),
            Start::RandomSphere => "random".into(),
            Start::Given { label, .. } => label.clone(),
        }
    }

    fn materialize(
        &self,
        ctx: &EnergyContext<T>,
        rng: &mut ChaCha8Rng,
    ) -> Result<LatticeField<T>> {
        let dom = ctx.domain();
        let a = ctx.mass();
        match self {
            Start::Tent { n } => tent_field(dom, a, *n),
            Start::Box { xi, r } => box_field(dom, *xi, *r)?.renormalized(a),
            Start::GaussianBump => gaussian_bump(dom, a, rng),
            Start::RandomSphere => random_sphere_point(dom, a, rng),
            Start::Given { field, .. } => {
                if field.domain() != dom {
                    return Err(Error::DomainMismatch);
                }
                field.renormalized(a)
            }
        }
    }
}

/// Default start set: the two structural trial profiles, a random bump, and
/// three uniform sphere points. `xi` should come from the superquadraticity
/// witness when one is known.
pub fn default_starts<T: Real>(domain: &BoxDomain, xi: Option<T>) -> Vec<Start<T>> {
    let l = domain.radius();
    let mut starts = vec![
        Start::Tent { n: (l / 2).max(1) },
        Start::Box { xi: xi.unwrap_or_else(T::one), r: l / domain.dim() as i64 },
        Start::GaussianBump,
    ];
    for _ in 0..3 {
        starts.push(Start::RandomSphere);
    }
    starts
}

#[derive(Debug, Clone)]
pub struct SolveConfig<T: Real> {
    /// Stop when the tangential gradient l2 norm falls below this.
    pub tol: T,
    pub max_iters: usize,
    /// Backtracking line search: initial step, shrink factor, Armijo coefficient.
    pub step_init: T,
    pub step_shrink: T,
    pub decrease_coeff: T,
    pub seed: u64,
    pub starts: Vec<Start<T>>,
}

impl<T: Real> SolveConfig<T> {
    pub fn new(seed: u64, starts: Vec<Start<T>>) -> Self {
        Self {
            tol: T::of(1e-9),
            max_iters: 200_000,
            step_init: T::one(),
            step_shrink: T::of(0.5),
            decrease_coeff: T::of(1e-4),
            seed,
            starts,
        }
    }

    /// Standard configuration for a context: default starts with the witness
    /// height of its nonlinearity.
    pub fn standard(ctx: &EnergyContext<T>, seed: u64) -> Self {
        let xi = ctx.problem().nonlinearity.xi_witness();
        Self::new(seed, default_starts(ctx.domain(), xi))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > T::zero()) {
            return Err(Error::InvalidParameter("tol must be positive".into()));
        }
        if self.starts.is_empty() {
            return Err(Error::InvalidParameter("at least one start is required".into()));
        }
        if !(self.step_shrink > T::zero() && self.step_shrink < T::one()) {
            return Err(Error::InvalidParameter("step shrink must lie in (0,1)".into()));
        }
        if !(self.step_init > T::zero()) || !(self.decrease_coeff > T::zero()) {
            return Err(Error::InvalidParameter("step parameters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult<T: Real> {
    pub u: LatticeField<T>,
    pub energy: T,
    pub lambda: T,
    pub residual_norm: T,
    pub iters: usize,
    pub converged: bool,
    pub start_label: String,
}

/// All per-start results plus the selected best.
#[derive(Debug, Clone)]
pub struct MultiStartResult<T: Real> {
    pub best: SolveResult<T>,
    pub all: Vec<SolveResult<T>>,
    /// False when no start reached the gradient tolerance; `best` is then the
    /// lowest-energy iterate and still a valid upper bound.
    pub any_converged: bool,
}

struct DescentOutcome<T: Real> {
    u: LatticeField<T>,
    energy: T,
    iters: usize,
    converged: bool,
}

/// Projected gradient descent with renormalization retraction from one start.
/// The step length persists between iterations (and is allowed to grow back)
/// so progress does not collapse once the gradient is tiny.
fn descend<T: Real>(
    ctx: &EnergyContext<T>,
    u0: &LatticeField<T>,
    cfg: &SolveConfig<T>,
    mut trace: Option<&mut Vec<T>>,
) -> Result<DescentOutcome<T>> {
    let a = ctx.mass();
    let mut u = u0.renormalized(a)?;
    let mut e = ctx.energy(&u);
    if let Some(t) = trace.as_deref_mut() {
        t.push(e);
    }
    let mut step = cfg.step_init;
    let step_floor = T::of(1e-18);
    let mut iters = 0usize;
    let mut converged = false;
    while iters < cfg.max_iters {
        let g = ctx.energy_gradient(&u);
        let radial = g.inner(&u).expect("same domain") / a;
        let mut gp = g;
        gp.add_scaled(-radial, &u);
        let grad_norm = gp.l2_norm();
        if grad_norm <= cfg.tol {
            converged = true;
            break;
        }
        // Armijo decrease. Near a minimizer the true decrease per step falls
        // below one ulp of `Φ` (and below the energy jitter injected by the
        // renormalization rescale), so sampled energies can no longer
        // discriminate; in that regime a step is accepted when it is within
        // the analytic stability range `t ≤ 1/Λ`, where `Λ` bounds the local
        // Hessian. Such a step satisfies the same sufficient-decrease
        // condition in exact arithmetic: decrease ≥ t·‖g‖²·(1 − tΛ/2) ≥
        // t·‖g‖²/2.
        let fp_floor = T::of(64.0) * T::epsilon() * (T::one() + e.abs());
        let mut t_safe = T::nan(); // computed lazily, once per outer iteration
        let mut t = step;
        let mut accepted = false;
        while t >= step_floor {
            let need = cfg.decrease_coeff * t * grad_norm * grad_norm;
            if need < fp_floor {
                if t_safe.is_nan() {
                    // margin absorbs the retraction curvature terms, which
                    // are O(|λ|) here
                    t_safe = T::one() / (ctx.hessian_bound(&u) + radial.abs() + T::one());
                }
                if t > t_safe {
                    t *= cfg.step_shrink;
                    continue;
                }
            }
            let mut cand = u.clone();
            cand.add_scaled(-t, &gp);
            let cand = match cand.renormalized(a) {
                Ok(c) => c,
                Err(_) => {
                    t *= cfg.step_shrink;
                    continue;
                }
            };
            let delta = if need < fp_floor {
                ctx.energy_diff(&u, &cand)
            } else {
                ctx.energy(&cand) - e
            };
            if delta <= -need || (need < fp_floor && delta <= fp_floor) {
                debug_assert!(
                    ((cand.mass() - a) / a).abs() <= T::of(1e-10),
                    "iterate left the sphere"
                );
                step = (t / cfg.step_shrink).min(cfg.step_init);
                u = cand;
                e += delta.min(T::zero());
                accepted = true;
                break;
            }
            t *= cfg.step_shrink;
        }
        iters += 1;
        if !accepted {
            break; // line search exhausted: no representable decrease left
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(e);
        }
    }
    Ok(DescentOutcome { u, energy: e, iters, converged })
}

/// Refine a single start; exposed for tests that inspect one descent run.
pub fn minimize_from<T: Real>(
    ctx: &EnergyContext<T>,
    u0: &LatticeField<T>,
    cfg: &SolveConfig<T>,
    label: &str,
) -> Result<SolveResult<T>> {
    let out = descend(ctx, u0, cfg, None)?;
    finish(ctx, out, label)
}

/// Like [`minimize_from`] but records the energy after every accepted step.
pub fn minimize_traced<T: Real>(
    ctx: &EnergyContext<T>,
    u0: &LatticeField<T>,
    cfg: &SolveConfig<T>,
) -> Result<(SolveResult<T>, Vec<T>)> {
    let mut energies = Vec::new();
    let out = descend(ctx, u0, cfg, Some(&mut energies))?;
    Ok((finish(ctx, out, "traced")?, energies))
}

fn finish<T: Real>(
    ctx: &EnergyContext<T>,
    out: DescentOutcome<T>,
    label: &str,
) -> Result<SolveResult<T>> {
    let lambda = ctx.lagrange_multiplier(&out.u)?;
    let (_, residual_norm) = ctx.el_residual(&out.u, lambda);
    Ok(SolveResult {
        u: out.u,
        energy: out.energy,
        lambda,
        residual_norm,
        iters: out.iters,
        converged: out.converged,
        start_label: label.to_string(),
    })
}

/// Multi-start minimization of `Φ` over the sphere `‖u‖₂² = a`. Starts run in
/// parallel on independent RNG substreams; the merge is deterministic: the
/// lowest-energy converged result wins, ties within 1e-12 go to the lowest
/// start index, and if nothing converged the best iterate is returned flagged.
pub fn minimize_on_sphere<T: Real>(
    ctx: &EnergyContext<T>,
    cfg: &SolveConfig<T>,
) -> Result<MultiStartResult<T>> {
    cfg.validate()?;
    let all: Vec<SolveResult<T>> = cfg
        .starts
        .par_iter()
        .enumerate()
        .map(|(idx, start)| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(idx as u64 + 1);
            let u0 = start.materialize(ctx, &mut rng)?;
            minimize_from(ctx, &u0, cfg, &start.label())
        })
        .collect::<Result<_>>()?;
    let any_converged = all.iter().any(|r| r.converged);
    let tie = T::of(1e-12);
    let mut best: Option<usize> = None;
    for (i, r) in all.iter().enumerate() {
        if any_converged && !r.converged {
            continue;
        }
        match best {
            None => best = Some(i),
            Some(b) => {
                if r.energy < all[b].energy - tie {
                    best = Some(i);
                }
            }
        }
    }
    let best = all[best.expect("at least one start")].clone();
    Ok(MultiStartResult { best, all, any_converged })
}

/// Desk-scale oracle: exhaustive multi-start from random sphere points, each
/// refined by the same projected descent. Test-only companion to
/// [`minimize_on_sphere`]; restricted to tiny domains.
pub fn brute_force_min<T: Real>(ctx: &EnergyContext<T>, budget: usize, seed: u64) -> Result<T> {
    let n = ctx.domain().site_count();
    if n > 13 {
        return Err(Error::DomainTooLarge(n));
    }
    let cfg = SolveConfig {
        max_iters: 5_000,
        ..SolveConfig::new(seed, vec![Start::RandomSphere])
    };
    let chunk = 64;
    let best = (0..budget.div_ceil(chunk))
        .into_par_iter()
        .map(|block| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(block as u64 + 1);
            let mut local = T::infinity();
            for _ in 0..chunk.min(budget - block * chunk) {
                let u0 = random_sphere_point(ctx.domain(), ctx.mass(), &mut rng)?;
                let out = descend(ctx, &u0, &cfg, None)?;
                if out.energy < local {
                    local = out.energy;
                }
            }
            Ok(local)
        })
        .collect::<Result<Vec<T>>>()?
        .into_iter()
        .fold(T::infinity(), T::min);
    Ok(best)
}
