//! Catalog of nonlinearities `f(x,s)` and potentials `V(x)`, with checkers
//! for the structural hypotheses the existence theory needs.
//!
//! The catalog is closed-form only: the primitive `F(x,s)` is exact, so the
//! energy functional never carries quadrature error.

use crate::lattice::BoxDomain;
use crate::scalar::Real;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Nonlinearity `f(x,s)`; all variants are odd in `s`.
///
/// `Zero` is the degenerate linear case (`F ≡ 0`), used for eigenvalue
/// oracles; it deliberately fails the sign hypothesis on `F`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Real")]
pub enum Nonlinearity<T: Real> {
    Zero,
    /// `f = |s|^{p-2} s`, `F = |s|^p / p`, `p > 2`.
    Power { p: T },
    /// `f = |s|^{p-2} s + mu |s|^{q-2} s`, `p, q > 2`, `mu >= 0`.
    CombinedPower { p: T, q: T, mu: T },
    /// `f(x,s) = (1 + b0 / (1 + |x|^2)) fbase(s)` with Euclidean `|x|^2`.
    Modulated { base: Box<Nonlinearity<T>>, b0: T },
}

impl<T: Real> Nonlinearity<T> {
    pub fn validate(&self) -> Result<()> {
        let two = T::of(2.0);
        match self {
            Self::Zero => Ok(()),
            Self::Power { p } => {
                if *p <= two {
                    return Err(Error::InvalidParameter(format!("Power requires p > 2, got {p}")));
                }
                Ok(())
            }
            Self::CombinedPower { p, q, mu } => {
                if *p <= two || *q <= two {
                    return Err(Error::InvalidParameter(
                        "CombinedPower requires p, q > 2".into(),
                    ));
                }
                if *mu < T::zero() {
                    return Err(Error::InvalidParameter("CombinedPower requires mu >= 0".into()));
                }
                Ok(())
            }
            Self::Modulated { base, b0 } => {
                if matches!(**base, Self::Modulated { .. }) {
                    return Err(Error::InvalidParameter("nested Modulated nonlinearity".into()));
                }
                if *b0 < T::zero() {
                    return Err(Error::InvalidParameter("Modulated requires b0 >= 0".into()));
                }
                base.validate()
            }
        }
    }

    /// Spatial modulation weight `1 + b(x)`; identically 1 except for
    /// `Modulated`, where `b(x) = b0 / (1 + |x|^2)`.
    pub fn modulation_weight(&self, x: &[i64]) -> T {
        match self {
            Self::Modulated { b0, .. } => {
                let r2: i64 = x.iter().map(|&c| c * c).sum();
                T::one() + *b0 / (T::one() + T::of(r2 as f64))
            }
            _ => T::one(),
        }
    }

    /// The limit nonlinearity `f~` (the `|x| -> inf` profile).
    pub fn limit(&self) -> Self {
        match self {
            Self::Modulated { base, .. } => (**base).clone(),
            other => other.clone(),
        }
    }

    /// `f(x, s)`.
    pub fn f(&self, x: &[i64], s: T) -> T {
        self.modulation_weight(x) * self.f_limit(s)
    }

    /// `F(x, s) = ∫_0^s f(x,t) dt`, in closed form.
    pub fn big_f(&self, x: &[i64], s: T) -> T {
        self.modulation_weight(x) * self.big_f_limit(s)
    }

    /// `f~(s)`.
    pub fn f_limit(&self, s: T) -> T {
        match self {
            Self::Zero => T::zero(),
            Self::Power { p } => odd_power(s, *p),
            Self::CombinedPower { p, q, mu } => odd_power(s, *p) + *mu * odd_power(s, *q),
            Self::Modulated { base, .. } => base.f_limit(s),
        }
    }

    /// `g~(s) = f~(s)/s`, extended by its limit `0` at `s = 0`; the dynamic
    /// equation's reaction coefficient.
    pub fn g_limit(&self, s: T) -> T {
        if s == T::zero() {
            T::zero()
        } else {
            self.f_limit(s) / s
        }
    }

    /// `f~'(s)`, the derivative of the limit nonlinearity; used for local
    /// curvature bounds.
    pub fn df_limit(&self, s: T) -> T {
        match self {
            Self::Zero => T::zero(),
            Self::Power { p } => (*p - T::one()) * s.abs().powf(*p - T::of(2.0)),
            Self::CombinedPower { p, q, mu } => {
                (*p - T::one()) * s.abs().powf(*p - T::of(2.0))
                    + *mu * (*q - T::one()) * s.abs().powf(*q - T::of(2.0))
            }
            Self::Modulated { base, .. } => base.df_limit(s),
        }
    }

    /// `F~(s)`.
    pub fn big_f_limit(&self, s: T) -> T {
        match self {
            Self::Zero => T::zero(),
            Self::Power { p } => s.abs().powf(*p) / *p,
            Self::CombinedPower { p, q, mu } => {
                s.abs().powf(*p) / *p + *mu * s.abs().powf(*q) / *q
            }
            Self::Modulated { base, .. } => base.big_f_limit(s),
        }
    }

    /// Smallest growth exponent of `F` near `s = 0`; `None` for `Zero`.
    pub fn leading_exponent(&self) -> Option<T> {
        match self {
            Self::Zero => None,
            Self::Power { p } => Some(*p),
            Self::CombinedPower { p, q, mu } => {
                if *mu > T::zero() {
                    Some(p.min(*q))
                } else {
                    Some(*p)
                }
            }
            Self::Modulated { base, .. } => base.leading_exponent(),
        }
    }

    /// Reported `q` for the growth condition; `p - 1` for the catalog.
    pub fn growth_q(&self) -> Option<T> {
        match self {
            Self::Zero => None,
            Self::Power { p } => Some(*p - T::one()),
            Self::CombinedPower { p, q, mu } => {
                if *mu > T::zero() {
                    Some(p.max(*q) - T::one())
                } else {
                    Some(*p - T::one())
                }
            }
            Self::Modulated { base, .. } => base.growth_q(),
        }
    }

    /// Whether `F~` grows strictly slower than `|s|^{2+4/d}` near 0
    /// (`liminf F~(s)/|s|^{2+4/d} = inf`), decided symbolically from the
    /// catalog exponents. `None` for `Zero`.
    pub fn mass_subcritical(&self, d: usize) -> Option<bool> {
        let crit = T::of(2.0 + 4.0 / d as f64);
        self.leading_exponent().map(|p| p < crit)
    }

    /// A witness `xi` with `F~(xi) > 0`, searched over a coarse grid.
    pub fn xi_witness(&self) -> Option<T> {
        for xi in [1.0, 0.5, 2.0, 0.25, 4.0, 0.1, 8.0] {
            let xi = T::of(xi);
            if self.big_f_limit(xi) > T::zero() {
                return Some(xi);
            }
        }
        None
    }

    /// Admissible `C_F` with `F(x,s) <= C_F |s|^{2+4/d}` for `|s| <= delta`,
    /// when `F` is mass-critical or supercritical near 0. `None` otherwise.
    pub fn mass_critical_bound(&self, d: usize, delta: T) -> Option<T> {
        let crit = T::of(2.0 + 4.0 / d as f64);
        let sup_weight = match self {
            Self::Modulated { b0, .. } => T::one() + *b0,
            _ => T::one(),
        };
        match self.limit() {
            Self::Zero => None,
            Self::Power { p } => {
                if p < crit {
                    None
                } else {
                    Some(sup_weight * delta.powf(p - crit) / p)
                }
            }
            Self::CombinedPower { p, q, mu } => {
                if p.min(if mu > T::zero() { q } else { p }) < crit {
                    None
                } else {
                    Some(sup_weight * (delta.powf(p - crit) / p + mu * delta.powf(q - crit) / q))
                }
            }
            Self::Modulated { .. } => unreachable!("limit() strips modulation"),
        }
    }
}

fn odd_power<T: Real>(s: T, p: T) -> T {
    // |s|^{p-2} s, continuous at 0 for p > 2.
    if s == T::zero() {
        T::zero()
    } else {
        s.abs().powf(p - T::of(2.0)) * s
    }
}

/// Potential `V(x)`. Euclidean `|x|^2` throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Real")]
pub enum Potential<T: Real> {
    Zero,
    /// `V(x) = -c / (1 + |x|^2)`, `c >= 0`; `V_inf = 0`.
    Well { c: T },
    /// `V(x) = |x|^beta`, `beta > 0`; `V_inf = inf`.
    Trapping { beta: T },
    /// Tabulated values per site in enumeration order.
    Table { values: Vec<T>, v_inf: T },
}

impl<T: Real> Potential<T> {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Zero => Ok(()),
            Self::Well { c } => {
                if *c < T::zero() {
                    return Err(Error::InvalidParameter("Well requires c >= 0".into()));
                }
                Ok(())
            }
            Self::Trapping { beta } => {
                if *beta <= T::zero() {
                    return Err(Error::InvalidParameter("Trapping requires beta > 0".into()));
                }
                Ok(())
            }
            Self::Table { values, .. } => {
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidParameter("Table potential contains NaN/Inf".into()));
                }
                Ok(())
            }
        }
    }

    /// `V` at the site with coordinates `x` and enumeration index `index`.
    pub fn eval(&self, x: &[i64], index: usize) -> Result<T> {
        let r2: i64 = x.iter().map(|&c| c * c).sum();
        match self {
            Self::Zero => Ok(T::zero()),
            Self::Well { c } => Ok(-*c / (T::one() + T::of(r2 as f64))),
            Self::Trapping { beta } => Ok(T::of(r2 as f64).sqrt().powf(*beta)),
            Self::Table { values, .. } => values
                .get(index)
                .copied()
                .ok_or(Error::TableOutOfRange(index)),
        }
    }

    /// Limit at infinity; `T::infinity()` for trapping potentials.
    pub fn v_infinity(&self) -> T {
        match self {
            Self::Zero | Self::Well { .. } => T::zero(),
            Self::Trapping { .. } => T::infinity(),
            Self::Table { v_inf, .. } => *v_inf,
        }
    }

    pub fn is_trapping(&self) -> bool {
        self.v_infinity() == T::infinity()
    }
}

/// Grids for the finite hypothesis checks.
#[derive(Debug, Clone)]
pub struct SampleGrid<T: Real> {
    pub thetas: Vec<T>,
    pub s_values: Vec<T>,
}

impl<T: Real> Default for SampleGrid<T> {
    fn default() -> Self {
        let thetas = [1.1, 1.5, 2.0, 4.0, 16.0].iter().map(|&t| T::of(t)).collect();
        let s_values = [-4.0, -1.0, -0.3, -1e-3, 1e-3, 0.3, 1.0, 4.0]
            .iter()
            .map(|&s| T::of(s))
            .collect();
        Self { thetas, s_values }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub passed: bool,
    /// First violating tuple, if any.
    pub violation: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(bound = "T: Real")]
pub struct HypothesisReport<T: Real> {
    pub checks: Vec<HypothesisCheck>,
    pub xi_witness: Option<T>,
}

impl<T: Real> HypothesisReport<T> {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Check the nonlinearity/potential hypotheses on finite grids; strict
/// inequalities are tested with `1e-12` slack.
pub fn check_hypotheses<T: Real>(
    nl: &Nonlinearity<T>,
    pot: &Potential<T>,
    domain: &BoxDomain,
    grid: &SampleGrid<T>,
) -> HypothesisReport<T> {
    let slack = T::of(1e-12);
    let mut checks = Vec::new();

    // (f1) small-s: f(x,s)/s -> 0.
    {
        let mut violation = None;
        let s_small = T::of(1e-6);
        'f1: for i in 0..domain.site_count() {
            let x = domain.site(i);
            for sign in [T::one(), -T::one()] {
                let s = s_small * sign;
                let ratio = (nl.f(x, s) / s).abs();
                // Leading exponent p gives f/s ~ |s|^{p-2}; allow a wide margin.
                let tol = match nl.leading_exponent() {
                    Some(p) => T::of(10.0) * s_small.abs().powf(p - T::of(2.0)),
                    None => slack,
                };
                if ratio > tol {
                    violation = Some(format!("x={x:?}, s={s}: |f/s| = {ratio}"));
                    break 'f1;
                }
            }
        }
        checks.push(HypothesisCheck {
            name: "f1_small_s".into(),
            passed: violation.is_none(),
            violation,
        });
    }

    // (f2) dominance: F(x,s) >= F~(s), sign-aware for f.
    {
        let mut violation = None;
        'f2: for i in 0..domain.site_count() {
            let x = domain.site(i);
            for &s in &grid.s_values {
                if nl.big_f(x, s) < nl.big_f_limit(s) - slack {
                    violation = Some(format!("x={x:?}, s={s}: F < F~"));
                    break 'f2;
                }
                let (f, fl) = (nl.f(x, s), nl.f_limit(s));
                let bad = if s >= T::zero() { f < fl - slack } else { f > fl + slack };
                if bad {
                    violation = Some(format!("x={x:?}, s={s}: f vs f~ sign-aware dominance"));
                    break 'f2;
                }
            }
        }
        checks.push(HypothesisCheck {
            name: "f2_dominates_limit".into(),
            passed: violation.is_none(),
            violation,
        });
    }

    // (f3) some xi with F~(xi) > 0.
    let xi = nl.xi_witness();
    checks.push(HypothesisCheck {
        name: "f3_positive_primitive".into(),
        passed: xi.is_some(),
        violation: if xi.is_some() {
            None
        } else {
            Some("no xi with F~(xi) > 0 on the search grid".into())
        },
    });

    // (f4) F(x, sqrt(theta) s) > theta F(x, s).
    {
        let mut violation = None;
        'f4: for i in 0..domain.site_count() {
            let x = domain.site(i);
            for &theta in &grid.thetas {
                for &s in &grid.s_values {
                    if s == T::zero() {
                        continue;
                    }
                    let lhs = nl.big_f(x, theta.sqrt() * s);
                    let rhs = theta * nl.big_f(x, s);
                    if lhs - rhs <= slack * (lhs.abs() + rhs.abs()) {
                        violation = Some(format!("x={x:?}, theta={theta}, s={s}"));
                        break 'f4;
                    }
                }
            }
        }
        checks.push(HypothesisCheck {
            name: "f4_superquadratic".into(),
            passed: violation.is_none(),
            violation,
        });
    }

    // (V0): V(x) <= V_inf on the box.
    {
        let vinf = pot.v_infinity();
        let mut violation = None;
        for i in 0..domain.site_count() {
            let x = domain.site(i);
            match pot.eval(x, i) {
                Ok(v) if v <= vinf + slack => {}
                Ok(v) => {
                    violation = Some(format!("site {i} ({x:?}): V = {v} > V_inf = {vinf}"));
                    break;
                }
                Err(e) => {
                    violation = Some(format!("site {i}: {e}"));
                    break;
                }
            }
        }
        checks.push(HypothesisCheck {
            name: "v0_bounded_by_limit".into(),
            passed: violation.is_none(),
            violation,
        });
    }

    HypothesisReport { checks, xi_witness: xi }
}
