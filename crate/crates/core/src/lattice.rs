//! Discrete geometry and calculus on a truncated lattice `Z^d`.
//!
//! The domain is the set of integer points with `|x|_1 <= L`, enumerated
//! lexicographically. Everything outside the box carries the value zero
//! (Dirichlet extension), so each in-box site has exactly `2d` neighbour
//! slots, some of which may point outside.

use crate::scalar::Real;
use crate::{Error, Result};
use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::sync::Arc;

/// Truncated lattice `Z^d ∩ {|x|_1 <= L}` with zero exterior extension.
#[derive(Debug)]
pub struct BoxDomain {
    d: usize,
    radius: i64,
    /// Site coordinates, flattened row-major (stride `d`), lexicographic order.
    coords: Vec<i64>,
    index: HashMap<Vec<i64>, usize>,
    /// For site `i`, entries `2k` / `2k + 1` are the neighbours `x + e_k` /
    /// `x - e_k`, `None` when the neighbour falls outside the box.
    neighbors: Vec<Option<usize>>,
}

impl PartialEq for BoxDomain {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.radius == other.radius
    }
}
impl Eq for BoxDomain {}

impl BoxDomain {
    pub fn new(d: usize, radius: i64) -> Result<Arc<Self>> {
        if d == 0 {
            return Err(Error::InvalidDomain("dimension must be >= 1".into()));
        }
        if radius < 0 {
            return Err(Error::InvalidDomain("radius must be >= 0".into()));
        }
        let mut coords = Vec::new();
        let mut point = vec![0i64; d];
        enumerate_ball(d, radius, 0, radius, &mut point, &mut coords);
        let site_count = coords.len() / d;
        let mut index = HashMap::with_capacity(site_count);
        for i in 0..site_count {
            index.insert(coords[i * d..(i + 1) * d].to_vec(), i);
        }
        let mut neighbors = vec![None; site_count * 2 * d];
        let mut probe = vec![0i64; d];
        for i in 0..site_count {
            for k in 0..d {
                probe.copy_from_slice(&coords[i * d..(i + 1) * d]);
                probe[k] += 1;
                neighbors[(i * d + k) * 2] = index.get(&probe).copied();
                probe[k] -= 2;
                neighbors[(i * d + k) * 2 + 1] = index.get(&probe).copied();
            }
        }
        Ok(Arc::new(Self {
            d,
            radius,
            coords,
            index,
            neighbors,
        }))
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    pub fn site_count(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn site(&self, i: usize) -> &[i64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn index_of(&self, x: &[i64]) -> Option<usize> {
        self.index.get(x).copied()
    }

    /// The `2d` neighbour slots of site `i`, `None` for exterior neighbours.
    pub fn neighbors(&self, i: usize) -> &[Option<usize>] {
        &self.neighbors[i * 2 * self.d..(i + 1) * 2 * self.d]
    }

    pub fn sites(&self) -> impl Iterator<Item = &[i64]> {
        self.coords.chunks_exact(self.d)
    }

    /// Euclidean `|x|^2 = Σ x_i^2` of site `i`.
    pub fn dist2(&self, i: usize) -> i64 {
        self.site(i).iter().map(|&c| c * c).sum()
    }

    /// Graph metric `|x|_1` of site `i`.
    pub fn l1_dist(&self, i: usize) -> i64 {
        self.site(i).iter().map(|&c| c.abs()).sum()
    }

    pub fn linf_dist(&self, i: usize) -> i64 {
        self.site(i).iter().map(|&c| c.abs()).max().unwrap_or(0)
    }
}

fn enumerate_ball(
    d: usize,
    radius: i64,
    axis: usize,
    budget: i64,
    point: &mut Vec<i64>,
    out: &mut Vec<i64>,
) {
    if axis == d {
        out.extend_from_slice(point);
        return;
    }
    for c in -budget..=budget {
        point[axis] = c;
        enumerate_ball(d, radius, axis + 1, budget - c.abs(), point, out);
    }
    point[axis] = 0;
}

/// Real-valued function on a [`BoxDomain`].
#[derive(Debug, Clone)]
pub struct LatticeField<T: Real> {
    domain: Arc<BoxDomain>,
    values: Vec<T>,
}

impl<T: Real> LatticeField<T> {
    pub fn new(domain: Arc<BoxDomain>, values: Vec<T>) -> Result<Self> {
        if values.len() != domain.site_count() {
            return Err(Error::InvalidParameter(format!(
                "field length {} does not match site count {}",
                values.len(),
                domain.site_count()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("field contains NaN/Inf".into()));
        }
        Ok(Self { domain, values })
    }

    pub fn zeros(domain: &Arc<BoxDomain>) -> Self {
        Self {
            domain: Arc::clone(domain),
            values: vec![T::zero(); domain.site_count()],
        }
    }

    /// Kronecker delta at the given site.
    pub fn delta(domain: &Arc<BoxDomain>, x: &[i64]) -> Result<Self> {
        let i = domain
            .index_of(x)
            .ok_or_else(|| Error::InvalidParameter(format!("site {x:?} outside domain")))?;
        let mut f = Self::zeros(domain);
        f.values[i] = T::one();
        Ok(f)
    }

    pub fn from_fn(domain: &Arc<BoxDomain>, mut f: impl FnMut(&[i64]) -> T) -> Self {
        let values = (0..domain.site_count()).map(|i| f(domain.site(i))).collect();
        Self {
            domain: Arc::clone(domain),
            values,
        }
    }

    pub fn domain(&self) -> &Arc<BoxDomain> {
        &self.domain
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    fn check_same_domain(&self, other: &Self) -> Result<()> {
        if self.domain != other.domain {
            return Err(Error::DomainMismatch);
        }
        Ok(())
    }

    /// Pointwise discrete Laplacian `Δu(x) = Σ_{y~x} (u(y) - u(x))`,
    /// exterior neighbours contributing `u(y) = 0`.
    pub fn laplacian(&self) -> Self {
        let d2 = T::of(2.0 * self.domain.dim() as f64);
        let mut out = Self::zeros(&self.domain);
        for i in 0..self.values.len() {
            let mut acc = -d2 * self.values[i];
            for nb in self.domain.neighbors(i) {
                if let Some(j) = nb {
                    acc += self.values[*j];
                }
            }
            out.values[i] = acc;
        }
        out
    }

    /// `Σ |∇u|^2`: sum of `(u(y) - u(x))^2` over undirected edges touching the
    /// box, each counted once; equals the paper's `Σ_x Γ(u)(x)`.
    pub fn gradient_energy(&self) -> T {
        let d = self.domain.dim();
        let mut acc = T::zero();
        for i in 0..self.values.len() {
            let nbs = self.domain.neighbors(i);
            let ui = self.values[i];
            for k in 0..d {
                // +e_k edge: interior edges counted here exactly once.
                match nbs[2 * k] {
                    Some(j) => {
                        let diff = self.values[j] - ui;
                        acc += diff * diff;
                    }
                    None => acc += ui * ui,
                }
                // -e_k edge only matters when it leaves the box.
                if nbs[2 * k + 1].is_none() {
                    acc += ui * ui;
                }
            }
        }
        acc
    }

    /// `l^p` norm; pass `T::infinity()` for the sup norm. Rejects `p < 1`.
    pub fn lp_norm(&self, p: T) -> Result<T> {
        if p < T::one() {
            return Err(Error::InvalidParameter(format!("lp_norm requires p >= 1, got {p}")));
        }
        if p.is_infinite() {
            return Ok(self
                .values
                .iter()
                .fold(T::zero(), |m, v| m.max(v.abs())));
        }
        let sum: T = self.values.iter().map(|v| v.abs().powf(p)).sum();
        Ok(sum.powf(p.recip()))
    }

    pub fn l2_norm(&self) -> T {
        self.mass().sqrt()
    }

    /// Squared `l^2` norm `‖u‖_2^2` (the "mass").
    pub fn mass(&self) -> T {
        self.values.iter().map(|v| *v * *v).sum()
    }

    /// Counting-measure inner product `Σ_x u(x) v(x)`.
    pub fn inner(&self, other: &Self) -> Result<T> {
        self.check_same_domain(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| *a * *b)
            .sum())
    }

    pub fn scale(&mut self, c: T) {
        for v in &mut self.values {
            *v *= c;
        }
    }

    pub fn scaled(&self, c: T) -> Self {
        let mut out = self.clone();
        out.scale(c);
        out
    }

    /// `self += c * other`; panics on domain mismatch (internal arithmetic).
    pub fn add_scaled(&mut self, c: T, other: &Self) {
        assert_eq!(self.domain, other.domain);
        for (v, w) in self.values.iter_mut().zip(&other.values) {
            *v += c * *w;
        }
    }

    /// Rescale so that `‖u‖_2^2 = a` exactly. Errors on the zero field.
    pub fn renormalized(&self, a: T) -> Result<Self> {
        let m = self.mass();
        if m <= T::zero() {
            return Err(Error::ZeroField);
        }
        Ok(self.scaled((a / m).sqrt()))
    }

    /// Translate by `shift`; errors if any nonzero value would leave the box.
    pub fn translate(&self, shift: &[i64]) -> Result<Self> {
        if shift.len() != self.domain.dim() {
            return Err(Error::InvalidParameter("shift dimension mismatch".into()));
        }
        let mut out = Self::zeros(&self.domain);
        let mut target = vec![0i64; self.domain.dim()];
        for i in 0..self.values.len() {
            if self.values[i] == T::zero() {
                continue;
            }
            for (t, (c, s)) in target.iter_mut().zip(self.domain.site(i).iter().zip(shift)) {
                *t = c + s;
            }
            match self.domain.index_of(&target) {
                Some(j) => out.values[j] = self.values[i],
                None => {
                    return Err(Error::InvalidParameter(
                        "translated support leaves the box".into(),
                    ))
                }
            }
        }
        Ok(out)
    }

    /// CSV with columns `x1,...,xd,value`, sites in enumeration order,
    /// 17-significant-digit floats.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        let d = self.domain.dim();
        let header: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
        writeln!(w, "{},value", header.join(","))?;
        for i in 0..self.values.len() {
            for c in self.domain.site(i) {
                write!(w, "{c},")?;
            }
            writeln!(w, "{:.16e}", self.values[i])?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(domain: &Arc<BoxDomain>, r: R) -> Result<Self> {
        let d = domain.dim();
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty field CSV".into()))??;
        let expected: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
        if header.trim() != format!("{},value", expected.join(",")) {
            return Err(Error::Parse(format!("unexpected field CSV header: {header}")));
        }
        let mut values = Vec::with_capacity(domain.site_count());
        for (row, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.trim().split(',').collect();
            if parts.len() != d + 1 {
                return Err(Error::Parse(format!("row {row}: expected {} columns", d + 1)));
            }
            let site = domain.site(values.len());
            for (k, p) in parts[..d].iter().enumerate() {
                let c: i64 = p
                    .parse()
                    .map_err(|_| Error::Parse(format!("row {row}: bad coordinate {p}")))?;
                if c != site[k] {
                    return Err(Error::Parse(format!(
                        "row {row}: site {parts:?} out of enumeration order"
                    )));
                }
            }
            let v = parts[d]
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("row {row}: bad value {}", parts[d])))?;
            values.push(T::of(v));
        }
        Self::new(Arc::clone(domain), values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand::Rng as _;
    use rand_chacha::ChaCha8Rng;

    type F = LatticeField<f64>;

    fn random_field(domain: &Arc<BoxDomain>, rng: &mut ChaCha8Rng) -> F {
        let values = (0..domain.site_count())
            .map(|_| rng.gen_range(-2.0..2.0))
            .collect();
        F::new(Arc::clone(domain), values).unwrap()
    }

    #[test]
    fn enumeration_is_lexicographic_and_complete() {
        let dom = BoxDomain::new(2, 2).unwrap();
        // |x|_1 <= 2 in Z^2 has 13 sites.
        assert_eq!(dom.site_count(), 13);
        let sites: Vec<Vec<i64>> = dom.sites().map(|s| s.to_vec()).collect();
        let mut sorted = sites.clone();
        sorted.sort();
        assert_eq!(sites, sorted);
        assert_eq!(dom.index_of(&[0, 0]), Some(6));
        assert_eq!(dom.index_of(&[2, 1]), None);
    }

    #[test]
    fn laplacian_of_delta_d1() {
        let dom = BoxDomain::new(1, 2).unwrap();
        let u = F::delta(&dom, &[0]).unwrap();
        let lap = u.laplacian();
        assert_eq!(lap.values()[dom.index_of(&[0]).unwrap()], -2.0);
        assert_eq!(lap.values()[dom.index_of(&[1]).unwrap()], 1.0);
        assert_eq!(lap.values()[dom.index_of(&[-1]).unwrap()], 1.0);
        assert_eq!(lap.values()[dom.index_of(&[2]).unwrap()], 0.0);
        assert_eq!(lap.values()[dom.index_of(&[-2]).unwrap()], 0.0);
    }

    #[test]
    fn laplacian_of_delta_d2() {
        let dom = BoxDomain::new(2, 3).unwrap();
        let u = F::delta(&dom, &[0, 0]).unwrap();
        let lap = u.laplacian();
        assert_eq!(lap.values()[dom.index_of(&[0, 0]).unwrap()], -4.0);
        for nb in [[1, 0], [-1, 0], [0, 1], [0, -1]] {
            assert_eq!(lap.values()[dom.index_of(&nb).unwrap()], 1.0);
        }
    }

    #[test]
    fn laplacian_of_zero_is_zero() {
        let dom = BoxDomain::new(3, 2).unwrap();
        let lap = F::zeros(&dom).laplacian();
        assert!(lap.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_energy_of_delta() {
        let d1 = BoxDomain::new(1, 2).unwrap();
        assert_eq!(F::delta(&d1, &[0]).unwrap().gradient_energy(), 2.0);
        let d2 = BoxDomain::new(2, 2).unwrap();
        assert_eq!(F::delta(&d2, &[0, 0]).unwrap().gradient_energy(), 4.0);
    }

    #[test]
    fn gradient_energy_box_profile_d1() {
        // xi = 1 on |x|_inf <= 1 inside L = 3: only the two boundary edges count.
        let dom = BoxDomain::new(1, 3).unwrap();
        let u = F::from_fn(&dom, |x| if x[0].abs() <= 1 { 1.0 } else { 0.0 });
        assert_eq!(u.gradient_energy(), 2.0);
    }

    #[test]
    fn gradient_energy_matches_brute_force_edge_sum() {
        // Independent oracle: enumerate every undirected edge of Z^d touching
        // the box directly from coordinates.
        let dom = BoxDomain::new(2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let u = random_field(&dom, &mut rng);
            let mut acc = 0.0;
            for i in 0..dom.site_count() {
                let x = dom.site(i).to_vec();
                for k in 0..dom.dim() {
                    for s in [-1i64, 1] {
                        let mut y = x.clone();
                        y[k] += s;
                        let uy = dom.index_of(&y).map_or(0.0, |j| u.values()[j]);
                        // Count each edge once: from the lexicographically
                        // smaller endpoint, or always when y is exterior.
                        if dom.index_of(&y).is_none() || y > x {
                            acc += (uy - u.values()[i]).powi(2);
                        }
                    }
                }
            }
            assert!((acc - u.gradient_energy()).abs() <= 1e-12 * (1.0 + acc));
        }
    }

    #[test]
    fn lp_norm_examples() {
        let dom = BoxDomain::new(1, 2).unwrap();
        let u = F::delta(&dom, &[0]).unwrap().scaled(3.0);
        assert_eq!(u.lp_norm(2.0).unwrap(), 3.0);
        let two = F::new(
            Arc::clone(&dom),
            vec![0.0, 1.0, 1.0, 0.0, 0.0],
        )
        .unwrap();
        assert!((two.lp_norm(2.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((two.lp_norm(4.0).unwrap() - 2f64.powf(0.25)).abs() < 1e-15);
        assert!(two.lp_norm(4.0).unwrap() <= two.lp_norm(2.0).unwrap());
        let z = F::zeros(&dom);
        for p in [1.0, 2.0, 5.5, f64::INFINITY] {
            assert_eq!(z.lp_norm(p).unwrap(), 0.0);
        }
        assert!(z.lp_norm(0.5).is_err());
    }

    #[test]
    fn inner_examples() {
        let dom = BoxDomain::new(1, 2).unwrap();
        let delta = F::delta(&dom, &[0]).unwrap();
        assert_eq!(delta.inner(&delta).unwrap(), 1.0);
        assert_eq!(delta.inner(&F::zeros(&dom)).unwrap(), 0.0);
        let neg_lap = delta.laplacian().scaled(-1.0);
        assert_eq!(delta.inner(&neg_lap).unwrap(), delta.gradient_energy());
        let other = BoxDomain::new(1, 3).unwrap();
        assert!(delta.inner(&F::zeros(&other)).is_err());
    }

    #[test]
    fn summation_by_parts_and_symmetry_random() {
        for (d, l) in [(1usize, 8i64), (2, 4), (3, 3)] {
            let dom = BoxDomain::new(d, l).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(d as u64);
            for _ in 0..1000 {
                let u = random_field(&dom, &mut rng);
                let v = random_field(&dom, &mut rng);
                let ge = u.gradient_energy();
                let ip = u.inner(&u.laplacian().scaled(-1.0)).unwrap();
                assert!((ge - ip).abs() <= 1e-12 * (1.0 + ge.abs()));
                let a = u.inner(&v.laplacian()).unwrap();
                let b = u.laplacian().inner(&v).unwrap();
                assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            }
        }
    }

    #[test]
    fn translation_leaves_calculus_invariant() {
        let dom = BoxDomain::new(2, 5).unwrap();
        let u = F::from_fn(&dom, |x| {
            if x[0].abs() + x[1].abs() <= 2 {
                1.0 / (1.0 + x[0].abs() as f64 + x[1].abs() as f64)
            } else {
                0.0
            }
        });
        let shifted = u.translate(&[1, -2]).unwrap();
        assert!((u.gradient_energy() - shifted.gradient_energy()).abs() < 1e-14);
        for p in [1.0, 2.0, 4.0, f64::INFINITY] {
            assert!((u.lp_norm(p).unwrap() - shifted.lp_norm(p).unwrap()).abs() < 1e-14);
        }
        // Support hitting the boundary is an error.
        assert!(u.translate(&[4, 0]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dom = BoxDomain::new(2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = random_field(&dom, &mut rng);
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let back = F::read_csv(&dom, &buf[..]).unwrap();
        for (a, b) in u.values().iter().zip(back.values()) {
            assert_eq!(a, b);
        }
    }

    proptest! {
        #[test]
        fn norm_monotone_in_p(values in proptest::collection::vec(-3.0f64..3.0, 5),
                              p in 1.0f64..8.0, dq in 0.01f64..7.0) {
            let dom = BoxDomain::new(1, 2).unwrap();
            let u = F::new(Arc::clone(&dom), values).unwrap();
            let q = (p + dq).min(8.0);
            prop_assume!(q > p);
            prop_assert!(u.lp_norm(q).unwrap() <= u.lp_norm(p).unwrap() + 1e-12);
        }

        #[test]
        fn mass_is_square_of_l2(values in proptest::collection::vec(-3.0f64..3.0, 13)) {
            let dom = BoxDomain::new(2, 2).unwrap();
            let u = F::new(Arc::clone(&dom), values).unwrap();
            let n = u.lp_norm(2.0).unwrap();
            prop_assert!((u.mass() - n * n).abs() <= 1e-12 * (1.0 + u.mass()));
        }
    }
}
