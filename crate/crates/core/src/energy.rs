//! The constrained energy functional, its gradient, the Euler-Lagrange
//! residual and the Lagrange multiplier.

use crate::lattice::{BoxDomain, LatticeField};
use crate::model::{Nonlinearity, Potential};
use crate::scalar::Real;
use crate::{Error, Result};
use std::sync::Arc;

/// A variational problem without a prescribed mass: domain + potential +
/// nonlinearity. Thresholds scan this over a mass grid.
#[derive(Debug, Clone)]
pub struct Problem<T: Real> {
    pub domain: Arc<BoxDomain>,
    pub potential: Potential<T>,
    pub nonlinearity: Nonlinearity<T>,
}

impl<T: Real> Problem<T> {
    pub fn new(
        domain: Arc<BoxDomain>,
        potential: Potential<T>,
        nonlinearity: Nonlinearity<T>,
    ) -> Result<Self> {
        potential.validate()?;
        nonlinearity.validate()?;
        if let Potential::Table { values, .. } = &potential {
            if values.len() != domain.site_count() {
                return Err(Error::InvalidParameter(format!(
                    "table potential has {} values for {} sites",
                    values.len(),
                    domain.site_count()
                )));
            }
        }
        Ok(Self { domain, potential, nonlinearity })
    }

    /// The limit problem: `V = 0` and the limit nonlinearity `f~`.
    pub fn limit(&self) -> Self {
        Self {
            domain: Arc::clone(&self.domain),
            potential: Potential::Zero,
            nonlinearity: self.nonlinearity.limit(),
        }
    }

    pub fn context(&self, mass: T) -> Result<EnergyContext<T>> {
        EnergyContext::new(self.clone(), mass)
    }
}

/// Energy functional `Φ(u) = ½‖∇u‖² + ½ Σ V u² − Σ F(x,u)` restricted to the
/// sphere `‖u‖² = mass`.
///
/// `V(x)` and the modulation weight are cached per site so the solver's hot
/// loop is a single pass over values.
#[derive(Debug, Clone)]
pub struct EnergyContext<T: Real> {
    problem: Problem<T>,
    mass: T,
    v_cache: Vec<T>,
    weight_cache: Vec<T>,
}

impl<T: Real> EnergyContext<T> {
    pub fn new(problem: Problem<T>, mass: T) -> Result<Self> {
        if !(mass > T::zero()) || !mass.is_finite() {
            return Err(Error::InvalidParameter(format!("mass must be positive, got {mass}")));
        }
        let n = problem.domain.site_count();
        let mut v_cache = Vec::with_capacity(n);
        let mut weight_cache = Vec::with_capacity(n);
        for i in 0..n {
            let x = problem.domain.site(i);
            v_cache.push(problem.potential.eval(x, i)?);
            weight_cache.push(problem.nonlinearity.modulation_weight(x));
        }
        Ok(Self { problem, mass, v_cache, weight_cache })
    }

    pub fn domain(&self) -> &Arc<BoxDomain> {
        &self.problem.domain
    }

    pub fn problem(&self) -> &Problem<T> {
        &self.problem
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    pub fn with_mass(&self, mass: T) -> Result<Self> {
        Self::new(self.problem.clone(), mass)
    }

    /// Same mass, `V = 0`, limit nonlinearity: the functional `Φ^∞`.
    pub fn limit(&self) -> Self {
        Self::new(self.problem.limit(), self.mass).expect("limit problem is valid")
    }

    /// `Φ(u)`.
    pub fn energy(&self, u: &LatticeField<T>) -> T {
        let half = T::of(0.5);
        let nl = &self.problem.nonlinearity;
        let mut pot = T::zero();
        let mut nonlin = T::zero();
        for (i, &v) in u.values().iter().enumerate() {
            pot += self.v_cache[i] * v * v;
            nonlin += self.weight_cache[i] * nl.big_f_limit(v);
        }
        half * u.gradient_energy() + half * pot - nonlin
    }

    /// Upper bound on the spectral norm of the Hessian of `Φ` at `u`:
    /// `‖−Δ‖ ≤ 4d` on the box, plus the largest `|V|` and reaction terms.
    pub fn hessian_bound(&self, u: &LatticeField<T>) -> T {
        let nl = &self.problem.nonlinearity;
        let mut pointwise = T::zero();
        for (i, &v) in u.values().iter().enumerate() {
            let local = self.v_cache[i].abs() + self.weight_cache[i] * nl.df_limit(v).abs();
            if local > pointwise {
                pointwise = local;
            }
        }
        T::of(4.0 * self.problem.domain.dim() as f64) + pointwise
    }

    /// `Φ(w) − Φ(u)` evaluated termwise. When `w` is a tiny perturbation of
    /// `u` the two energies agree to within an ulp and their direct
    /// difference is pure rounding noise; summing per-edge and per-site
    /// differences in factored form keeps the result accurate down to the
    /// scale of the perturbation itself. The nonlinear part uses the midpoint
    /// rule for `F(w) − F(u)`, whose error is cubic in `w − u` and therefore
    /// negligible exactly in the regime where this function is needed.
    pub fn energy_diff(&self, u: &LatticeField<T>, w: &LatticeField<T>) -> T {
        let half = T::of(0.5);
        let dom = self.problem.domain.clone();
        let d = dom.dim();
        let nl = &self.problem.nonlinearity;
        let uv = u.values();
        let wv = w.values();
        let mut grad = T::zero();
        let mut rest = T::zero();
        for i in 0..uv.len() {
            let nbs = dom.neighbors(i);
            let boundary = (wv[i] - uv[i]) * (wv[i] + uv[i]);
            for k in 0..d {
                match nbs[2 * k] {
                    Some(j) => {
                        let du = uv[j] - uv[i];
                        let dw = wv[j] - wv[i];
                        grad += (dw - du) * (dw + du);
                    }
                    None => grad += boundary,
                }
                if nbs[2 * k + 1].is_none() {
                    grad += boundary;
                }
            }
            let dv = wv[i] - uv[i];
            let sv = wv[i] + uv[i];
            rest += half * self.v_cache[i] * dv * sv;
            rest -= self.weight_cache[i] * nl.f_limit(half * sv) * dv;
        }
        half * grad + rest
    }

    /// First variation `g(x) = (−Δu)(x) + V(x)u(x) − f(x,u(x))`.
    pub fn energy_gradient(&self, u: &LatticeField<T>) -> LatticeField<T> {
        let nl = &self.problem.nonlinearity;
        let mut g = u.laplacian();
        for (i, gi) in g.values_mut().iter_mut().enumerate() {
            let v = u.values()[i];
            *gi = -*gi + self.v_cache[i] * v - self.weight_cache[i] * nl.f_limit(v);
        }
        g
    }

    /// `λ(u) = ⟨f(·,u) − (−Δ + V)u, u⟩ / ‖u‖²`, the least-squares multiplier.
    pub fn lagrange_multiplier(&self, u: &LatticeField<T>) -> Result<T> {
        let m = u.mass();
        if m <= T::zero() {
            return Err(Error::ZeroField);
        }
        let g = self.energy_gradient(u);
        // f − (−Δ+V)u = −g, so λ = −⟨g,u⟩/‖u‖².
        Ok(-g.inner(u).expect("same domain") / m)
    }

    /// Euler-Lagrange residual `r = (−Δ + V + λ)u − f(·,u)` and its `l²` norm.
    pub fn el_residual(&self, u: &LatticeField<T>, lambda: T) -> (LatticeField<T>, T) {
        let mut r = self.energy_gradient(u);
        r.add_scaled(lambda, u);
        let norm = r.l2_norm();
        (r, norm)
    }
}
