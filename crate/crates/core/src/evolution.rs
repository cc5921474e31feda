//! Time integration of the dynamic equation and standing-wave validation.
//!
//! The equation is integrated in the explicit form `∂ψ/∂t = −iHψ` with
//! `Hψ = −Δψ + Vψ − g(x,|ψ|)ψ`. A stationary profile with multiplier `λ`
//! satisfies `Hu = −λu`, so the corresponding trajectory is the standing wave
//! `ψ(t) = e^{iλt}u`.

use crate::energy::Problem;
use crate::lattice::{BoxDomain, LatticeField};
use crate::linalg::ComplexLu;
use crate::scalar::Real;
use crate::{Error, Result};
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Complex-valued field on a [`BoxDomain`], the integrator's state.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexLatticeField<T: Real> {
    domain: Arc<BoxDomain>,
    values: Vec<Complex<T>>,
}

impl<T: Real> ComplexLatticeField<T> {
    pub fn new(domain: Arc<BoxDomain>, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != domain.site_count() {
            return Err(Error::InvalidDomain(format!(
                "{} values for {} sites",
                values.len(),
                domain.site_count()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite field value".into()));
        }
        Ok(Self { domain, values })
    }

    pub fn zeros(domain: &Arc<BoxDomain>) -> Self {
        Self {
            domain: Arc::clone(domain),
            values: vec![Complex::new(T::zero(), T::zero()); domain.site_count()],
        }
    }

    pub fn from_real(u: &LatticeField<T>) -> Self {
        Self {
            domain: Arc::clone(u.domain()),
            values: u.values().iter().map(|&v| Complex::new(v, T::zero())).collect(),
        }
    }

    pub fn domain(&self) -> &Arc<BoxDomain> {
        &self.domain
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn conj(&self) -> Self {
        Self {
            domain: Arc::clone(&self.domain),
            values: self.values.iter().map(Complex::conj).collect(),
        }
    }

    /// `‖ψ‖₂²`.
    pub fn mass(&self) -> T {
        self.values.iter().map(Complex::norm_sqr).sum()
    }

    pub fn modulus(&self) -> LatticeField<T> {
        LatticeField::new(
            Arc::clone(&self.domain),
            self.values.iter().map(|v| v.norm()).collect(),
        )
        .expect("modulus of a valid field is valid")
    }

    /// `‖ψ − φ‖₂`.
    pub fn l2_distance(&self, other: &Self) -> Result<T> {
        if self.domain != other.domain {
            return Err(Error::DomainMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<T>()
            .sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    StrangSplit,
    ImplicitMidpoint,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EvolutionConfig<T: Real> {
    pub dt: T,
    /// Time horizon.
    #[serde(rename = "T")]
    pub t_final: T,
    pub scheme: Scheme,
    /// Record a sample every this many steps; 0 picks a stride that yields
    /// about a thousand samples.
    #[serde(default)]
    pub sample_stride: usize,
}

impl<T: Real> EvolutionConfig<T> {
    pub fn new(dt: T, t_final: T, scheme: Scheme) -> Self {
        Self { dt, t_final, scheme, sample_stride: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.dt < self.t_final) {
            return Err(Error::InvalidParameter(format!(
                "dt = {} must be smaller than the horizon T = {}",
                self.dt, self.t_final
            )));
        }
        if self.dt > T::of(0.1) {
            return Err(Error::InvalidParameter(format!(
                "dt = {} exceeds the documented stability envelope 0.1",
                self.dt
            )));
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        (self.t_final / self.dt).round().to_f64_lossy() as usize
    }

    fn stride(&self) -> usize {
        if self.sample_stride > 0 {
            self.sample_stride
        } else {
            (self.steps() / 1000).max(1)
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrajectorySample<T: Real> {
    pub t: T,
    pub mass: T,
    pub energy: T,
    pub state: ComplexLatticeField<T>,
}

struct Evolver<T: Real> {
    problem: Problem<T>,
    v: Vec<T>,
    w: Vec<T>,
    /// `−Δ` as a dense row-major matrix.
    kinetic: Vec<T>,
    n: usize,
}

impl<T: Real> Evolver<T> {
    fn new(problem: &Problem<T>) -> Result<Self> {
        let dom = &problem.domain;
        let n = dom.site_count();
        let d = dom.dim();
        let mut v = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        for i in 0..n {
            v.push(problem.potential.eval(dom.site(i), i)?);
            w.push(problem.nonlinearity.modulation_weight(dom.site(i)));
        }
        let mut kinetic = vec![T::zero(); n * n];
        for i in 0..n {
            kinetic[i * n + i] = T::of(2.0 * d as f64);
            for nb in dom.neighbors(i) {
                if let Some(j) = nb {
                    kinetic[i * n + j] = -T::one();
                }
            }
        }
        Ok(Self { problem: problem.clone(), v, w, kinetic, n })
    }

    /// `Φ(ψ)` for a complex field: same functional with moduli in the
    /// potential and nonlinear terms.
    fn energy(&self, psi: &ComplexLatticeField<T>) -> T {
        let half = T::of(0.5);
        let dom = psi.domain();
        let d = dom.dim();
        let nl = &self.problem.nonlinearity;
        let vals = psi.values();
        let mut grad = T::zero();
        let mut rest = T::zero();
        for i in 0..self.n {
            let nbs = dom.neighbors(i);
            for k in 0..d {
                match nbs[2 * k] {
                    Some(j) => grad += (vals[j] - vals[i]).norm_sqr(),
                    None => grad += vals[i].norm_sqr(),
                }
                if nbs[2 * k + 1].is_none() {
                    grad += vals[i].norm_sqr();
                }
            }
            let m = vals[i].norm();
            rest += half * self.v[i] * m * m - self.w[i] * nl.big_f_limit(m);
        }
        half * grad + rest
    }

    /// `B(x) = V(x) − w(x)·g~(|ψ(x)|)`, the pointwise part of `H`.
    fn pointwise(&self, psi: &[Complex<T>]) -> Vec<T> {
        psi.iter()
            .enumerate()
            .map(|(i, p)| self.v[i] - self.w[i] * self.problem.nonlinearity.g_limit(p.norm()))
            .collect()
    }

    fn apply_kinetic(&self, x: &[Complex<T>], out: &mut [Complex<T>]) {
        for i in 0..self.n {
            let mut acc = Complex::new(T::zero(), T::zero());
            for j in 0..self.n {
                let k = self.kinetic[i * self.n + j];
                if k != T::zero() {
                    acc += x[j].scale(k);
                }
            }
            out[i] = acc;
        }
    }
}

/// Integrate `∂ψ/∂t = −iHψ` and return sampled diagnostics (the initial
/// state, every `stride`-th step, and the final state).
pub fn evolve<T: Real>(
    psi0: &ComplexLatticeField<T>,
    problem: &Problem<T>,
    cfg: &EvolutionConfig<T>,
) -> Result<Vec<TrajectorySample<T>>> {
    cfg.validate()?;
    if psi0.domain() != &problem.domain {
        return Err(Error::DomainMismatch);
    }
    let ev = Evolver::new(problem)?;
    let n = ev.n;
    let steps = cfg.steps();
    let stride = cfg.stride();
    let dt = cfg.dt;
    let mut psi = psi0.clone();
    let mut samples = Vec::new();
    let sample = |t: T, psi: &ComplexLatticeField<T>, out: &mut Vec<TrajectorySample<T>>| {
        out.push(TrajectorySample { t, mass: psi.mass(), energy: ev.energy(psi), state: psi.clone() });
    };
    sample(T::zero(), &psi, &mut samples);

    match cfg.scheme {
        Scheme::StrangSplit => {
            // Cayley (Crank-Nicolson) kinetic half-steps around an exact
            // pointwise phase rotation; each factor is unitary, so mass is
            // conserved to roundoff.
            let quarter = dt / T::of(4.0);
            let mut m_plus = vec![Complex::new(T::zero(), T::zero()); n * n];
            for i in 0..n {
                for j in 0..n {
                    m_plus[i * n + j] = Complex::new(
                        if i == j { T::one() } else { T::zero() },
                        quarter * ev.kinetic[i * n + j],
                    );
                }
            }
            let lu = ComplexLu::factor(m_plus, n)?;
            let mut scratch = vec![Complex::new(T::zero(), T::zero()); n];
            let mut half_kinetic = |vals: &mut Vec<Complex<T>>| -> Result<()> {
                // (I + i dt/4 (−Δ))⁻¹ (I − i dt/4 (−Δ))
                ev.apply_kinetic(vals, &mut scratch);
                for i in 0..n {
                    vals[i] -= Complex::new(T::zero(), quarter) * scratch[i];
                }
                lu.solve(vals)
            };
            for step in 0..steps {
                half_kinetic(&mut psi.values)?;
                let b = ev.pointwise(&psi.values);
                for i in 0..n {
                    psi.values[i] *= Complex::from_polar(T::one(), -b[i] * dt);
                }
                half_kinetic(&mut psi.values)?;
                if (step + 1) % stride == 0 || step + 1 == steps {
                    sample(dt * T::from_usize(step + 1).unwrap(), &psi, &mut samples);
                }
            }
        }
        Scheme::ImplicitMidpoint => {
            // (I + i dt/2 H_mid) ψ⁺ = (I − i dt/2 H_mid) ψ with the pointwise
            // coefficient refreshed from the midpoint modulus by fixed-point
            // iteration.
            let half_dt = dt / T::of(2.0);
            let mut next = psi.values.clone();
            let mut scratch = vec![Complex::new(T::zero(), T::zero()); n];
            for step in 0..steps {
                for _ in 0..3 {
                    let mid: Vec<Complex<T>> = psi
                        .values
                        .iter()
                        .zip(&next)
                        .map(|(a, b)| (a + b).scale(T::of(0.5)))
                        .collect();
                    let b = ev.pointwise(&mid);
                    let mut m_plus = vec![Complex::new(T::zero(), T::zero()); n * n];
                    for i in 0..n {
                        for j in 0..n {
                            let mut h = ev.kinetic[i * n + j];
                            if i == j {
                                h += b[i];
                            }
                            m_plus[i * n + j] = Complex::new(
                                if i == j { T::one() } else { T::zero() },
                                half_dt * h,
                            );
                        }
                    }
                    let lu = ComplexLu::factor(m_plus, n)?;
                    // rhs = (I − i dt/2 H) ψ
                    ev.apply_kinetic(&psi.values, &mut scratch);
                    for i in 0..n {
                        let h = scratch[i] + psi.values[i].scale(b[i]);
                        next[i] = psi.values[i] - Complex::new(T::zero(), half_dt) * h;
                    }
                    lu.solve(&mut next)?;
                }
                psi.values.copy_from_slice(&next);
                if (step + 1) % stride == 0 || step + 1 == steps {
                    sample(dt * T::from_usize(step + 1).unwrap(), &psi, &mut samples);
                }
            }
        }
    }
    Ok(samples)
}

/// One row of the standing-wave diagnostics.
#[derive(Debug, Clone, Serialize)]
#[serde(bound = "T: Real")]
pub struct StandingWaveSample<T: Real> {
    pub t: T,
    pub mass: T,
    pub energy: T,
    /// `‖ |ψ(t)| − |u| ‖_∞`.
    pub mod_dev: T,
    /// `‖ ψ(t) − e^{iλt} u ‖₂`.
    pub phase_err: T,
}

#[derive(Debug, Clone, Serialize)]
#[serde(bound = "T: Real")]
pub struct StandingWaveReport<T: Real> {
    pub samples: Vec<StandingWaveSample<T>>,
    pub max_mod_dev: T,
    pub max_phase_err: T,
}

/// Evolve `ψ0 = u` and compare against the standing wave `e^{iλt}u` (the
/// multiplier enters the stationary equation as `(−Δ + V + λ)u = f`, so the
/// phase advances with the sign of `λ`).
pub fn standing_wave_check<T: Real>(
    u: &LatticeField<T>,
    lambda: T,
    problem: &Problem<T>,
    cfg: &EvolutionConfig<T>,
) -> Result<StandingWaveReport<T>> {
    let trajectory = evolve(&ComplexLatticeField::from_real(u), problem, cfg)?;
    let umod: Vec<T> = u.values().iter().map(|v| v.abs()).collect();
    let mut samples = Vec::with_capacity(trajectory.len());
    let mut max_mod_dev = T::zero();
    let mut max_phase_err = T::zero();
    for s in &trajectory {
        let mut mod_dev = T::zero();
        let mut phase_sq = T::zero();
        let phase = Complex::from_polar(T::one(), lambda * s.t);
        for (i, p) in s.state.values().iter().enumerate() {
            mod_dev = mod_dev.max((p.norm() - umod[i]).abs());
            phase_sq += (p - phase.scale(u.values()[i])).norm_sqr();
        }
        let phase_err = phase_sq.sqrt();
        max_mod_dev = max_mod_dev.max(mod_dev);
        max_phase_err = max_phase_err.max(phase_err);
        samples.push(StandingWaveSample {
            t: s.t,
            mass: s.mass,
            energy: s.energy,
            mod_dev,
            phase_err,
        });
    }
    Ok(StandingWaveReport { samples, max_mod_dev, max_phase_err })
}

/// Write the standing-wave diagnostics as `t,mass,energy,mod_dev,phase_err`.
pub fn write_trajectory_csv<T: Real>(
    report: &StandingWaveReport<T>,
    path: &std::path::Path,
) -> Result<()> {
    use std::io::Write;
    let mut out = String::from("t,mass,energy,mod_dev,phase_err\n");
    for s in &report.samples {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            s.t, s.mass, s.energy, s.mod_dev, s.phase_err
        ));
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::Problem;
    use crate::model::{Nonlinearity, Potential};
    use crate::solver::{minimize_on_sphere, SolveConfig};

    fn problem_d1(l: i64, pot: Potential<f64>, nl: Nonlinearity<f64>) -> Problem<f64> {
        Problem::new(BoxDomain::new(1, l).unwrap(), pot, nl).unwrap()
    }

    fn cfg(dt: f64, t: f64, scheme: Scheme) -> EvolutionConfig<f64> {
        EvolutionConfig::new(dt, t, scheme)
    }

    #[test]
    fn config_validation() {
        assert!(cfg(1e-3, 1.0, Scheme::StrangSplit).validate().is_ok());
        assert!(cfg(0.0, 1.0, Scheme::StrangSplit).validate().is_err());
        assert!(cfg(0.2, 1.0, Scheme::StrangSplit).validate().is_err());
        assert!(cfg(0.05, 0.01, Scheme::StrangSplit).validate().is_err());
    }

    #[test]
    fn zero_field_stays_zero() {
        let p = problem_d1(3, Potential::Well { c: 1.0 }, Nonlinearity::Power { p: 4.0 });
        for scheme in [Scheme::StrangSplit, Scheme::ImplicitMidpoint] {
            let samples =
                evolve(&ComplexLatticeField::zeros(&p.domain), &p, &cfg(1e-2, 1.0, scheme))
                    .unwrap();
            for s in &samples {
                assert_eq!(s.mass, 0.0);
                assert!(s.state.values().iter().all(|v| v.norm() == 0.0));
            }
        }
    }

    #[test]
    fn eigenvector_acquires_exact_phase() {
        // 5-site path, ground Dirichlet mode: v(j) = sin(j pi / 6),
        // eigenvalue mu = 2 − 2 cos(pi/6); the flow multiplies it by e^{−i mu t}.
        let p = problem_d1(2, Potential::Zero, Nonlinearity::Zero);
        let dom = &p.domain;
        let v = LatticeField::from_fn(dom, |x| ((x[0] + 3) as f64 * std::f64::consts::PI / 6.0).sin());
        let mu = 2.0 - 2.0 * (std::f64::consts::PI / 6.0).cos();
        let psi0 = ComplexLatticeField::from_real(&v);
        let samples = evolve(&psi0, &p, &cfg(1e-3, 1.0, Scheme::StrangSplit)).unwrap();
        let last = samples.last().unwrap();
        assert!((last.t - 1.0).abs() < 1e-12);
        let rot = Complex::from_polar(1.0, -mu * last.t);
        for (got, &orig) in last.state.values().iter().zip(v.values()) {
            assert!((got - rot.scale(orig)).norm() < 1e-6);
            assert!((got.norm() - orig.abs()).abs() < 1e-10);
        }
    }

    #[test]
    fn mass_is_conserved() {
        let p = problem_d1(6, Potential::Well { c: 1.0 }, Nonlinearity::Power { p: 4.0 });
        let u = crate::solver::tent_field(&p.domain, 2.0, 3).unwrap();
        let psi0 = ComplexLatticeField::from_real(&u);
        let strang = evolve(&psi0, &p, &cfg(1e-3, 10.0, Scheme::StrangSplit)).unwrap();
        for s in &strang {
            assert!((s.mass - 2.0).abs() <= 1e-8, "t={} drift={}", s.t, s.mass - 2.0);
        }
        let midpoint = evolve(&psi0, &p, &cfg(1e-3, 1.0, Scheme::ImplicitMidpoint)).unwrap();
        for s in &midpoint {
            assert!((s.mass - 2.0).abs() <= 1e-8, "t={} drift={}", s.t, s.mass - 2.0);
        }
    }

    #[test]
    fn strang_is_time_reversible() {
        // Conjugating the state swaps e^{−iHt} for e^{iHt}, and the Strang
        // composition is symmetric, so conj∘step∘conj inverts one step
        // exactly.
        let p = problem_d1(5, Potential::Well { c: 1.0 }, Nonlinearity::Power { p: 4.0 });
        let u = crate::solver::tent_field(&p.domain, 1.0, 2).unwrap();
        let psi0 = ComplexLatticeField::from_real(&u);
        let c = cfg(1e-2, 2.0, Scheme::StrangSplit);
        let forward = evolve(&psi0, &p, &c).unwrap();
        let back = evolve(&forward.last().unwrap().state.conj(), &p, &c).unwrap();
        let returned = back.last().unwrap().state.conj();
        assert!(returned.l2_distance(&psi0).unwrap() < 1e-6);
    }

    #[test]
    fn one_site_standing_wave_is_exact() {
        // Single site: every mass gives a stationary profile with
        // lambda = f(sqrt a)/sqrt a − 2 − V(0).
        let p = problem_d1(0, Potential::Well { c: 1.0 }, Nonlinearity::Power { p: 4.0 });
        let a = 2.0f64;
        let u = LatticeField::new(Arc::clone(&p.domain), vec![a.sqrt()]).unwrap();
        let lambda = a.sqrt().powi(2) - 2.0 - (-1.0);
        let ctx = p.context(a).unwrap();
        let (_, res_norm) = ctx.el_residual(&u, lambda);
        assert!(res_norm < 1e-14);
        for scheme in [Scheme::StrangSplit, Scheme::ImplicitMidpoint] {
            let report = standing_wave_check(&u, lambda, &p, &cfg(1e-3, 1.0, scheme)).unwrap();
            assert!(report.max_mod_dev < 1e-10, "{:?}: {}", scheme, report.max_mod_dev);
            assert!(report.max_phase_err < 1e-6, "{:?}: {}", scheme, report.max_phase_err);
        }
    }

    #[test]
    fn ground_state_evolves_as_standing_wave() {
        let p = problem_d1(10, Potential::Zero, Nonlinearity::Power { p: 4.0 });
        let ctx = p.context(4.0).unwrap();
        let best = minimize_on_sphere(&ctx, &SolveConfig::standard(&ctx, 3)).unwrap().best;
        assert!(best.converged);
        let report =
            standing_wave_check(&best.u, best.lambda, &p, &cfg(1e-3, 1.0, Scheme::StrangSplit))
                .unwrap();
        assert!(report.max_mod_dev <= 1e-4, "mod dev {}", report.max_mod_dev);
        assert!((report.samples.last().unwrap().mass - 4.0).abs() <= 1e-8);
    }

    #[test]
    fn energy_drift_shrinks_quadratically() {
        let p = problem_d1(5, Potential::Zero, Nonlinearity::Power { p: 4.0 });
        let u = crate::solver::tent_field(&p.domain, 1.5, 2).unwrap();
        let psi0 = ComplexLatticeField::from_real(&u);
        let drift = |dt: f64| {
            let s = evolve(&psi0, &p, &cfg(dt, 1.0, Scheme::StrangSplit)).unwrap();
            (s.last().unwrap().energy - s[0].energy).abs()
        };
        let coarse = drift(4e-2);
        let fine = drift(2e-2);
        assert!(coarse >= 3.5 * fine, "coarse {coarse} fine {fine}");
    }

    #[test]
    fn trajectory_csv_has_documented_header() {
        let p = problem_d1(2, Potential::Zero, Nonlinearity::Power { p: 4.0 });
        let u = crate::solver::tent_field(&p.domain, 1.0, 1).unwrap();
        let report = standing_wave_check(&u, -1.0, &p, &cfg(1e-2, 0.1, Scheme::StrangSplit)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        write_trajectory_csv(&report, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t,mass,energy,mod_dev,phase_err\n"));
        assert_eq!(text.lines().count(), report.samples.len() + 1);
    }
}
