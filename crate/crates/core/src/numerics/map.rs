//! Rational maps on the sphere.
//!
//! A map is stored as a reduced fraction `p/q` of complex polynomials.
//! Evaluation, derivatives and fibers are computed in whichever chart
//! the argument lives in: in the inverted chart the map acts through
//! its coefficient-reversed form, so no intermediate quantity overflows
//! near infinity.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};

use super::poly::{resultant, Poly};
use super::sphere::{sph_dist, Chart, SpherePoint};

/// Relative tolerance for the common-root (degeneracy) check.
const RESULTANT_TOL: f64 = 1e-9;

/// Radius used to cluster fiber points into multiplicities.
const CLUSTER_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct RationalMap {
    num: Poly,
    den: Poly,
    /// `max(deg num, deg den)`; the topological degree.
    degree: usize,
    /// `w^d num(1/w)` and `w^d den(1/w)`: the map as seen from the
    /// inverted chart (post-composed with the chart flip on input).
    num_rev: Poly,
    den_rev: Poly,
}

impl RationalMap {
    /// Builds `num/den`, rejecting degenerate data: a zero denominator,
    /// or numerator and denominator sharing a root within tolerance
    /// (checked via the resultant).
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidInput("denominator is identically zero".into()));
        }
        if num.is_zero() {
            return Err(Error::InvalidInput("numerator is identically zero".into()));
        }
        let degree = num.degree().max(den.degree());
        if degree == 0 {
            return Err(Error::InvalidInput("map is constant".into()));
        }
        let scale_p = num.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
        let scale_q = den.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
        if num.degree() > 0 && den.degree() > 0 {
            let res = resultant(&num, &den);
            let scale = scale_p.powi(den.degree() as i32) * scale_q.powi(num.degree() as i32);
            if res.norm() <= RESULTANT_TOL * scale {
                return Err(Error::InvalidInput(
                    "numerator and denominator share a root within tolerance".into(),
                ));
            }
        }
        let num_rev = num.reversed(degree);
        let den_rev = den.reversed(degree);
        Ok(RationalMap {
            num,
            den,
            degree,
            num_rev,
            den_rev,
        })
    }

    /// Convenience: polynomial map `z^d + c`.
    pub fn monic_plus_c(d: usize, c: Complex64) -> Result<Self> {
        let zero = Complex64::new(0.0, 0.0);
        let mut coeffs = vec![zero; d + 1];
        coeffs[0] = c;
        coeffs[d] = Complex64::new(1.0, 0.0);
        RationalMap::new(Poly::new(coeffs), Poly::from_real(&[1.0]))
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    /// Evaluates the map. Errors with `IndeterminateForm` only if both
    /// homogeneous components vanish, which the degeneracy check makes
    /// unreachable for valid maps away from rounding extremes.
    pub fn evaluate(&self, z: &SpherePoint) -> Result<SpherePoint> {
        let (a, b) = self.homogeneous(z);
        SpherePoint::from_projective(a, b)
            .ok_or_else(|| Error::IndeterminateForm(format!("{:?}", z)))
    }

    /// Numerator and denominator values in the chart of `z`.
    fn homogeneous(&self, z: &SpherePoint) -> (Complex64, Complex64) {
        match z.chart() {
            Chart::Standard => (self.num.eval(z.coords()), self.den.eval(z.coords())),
            Chart::Inverted => (self.num_rev.eval(z.coords()), self.den_rev.eval(z.coords())),
        }
    }

    /// Norm of the derivative with respect to the spherical metric:
    /// `|f'(z)| (1 + |z|^2) / (1 + |f(z)|^2)`, computed homogeneously as
    /// `|p'q - pq'| (1 + |z|^2) / (|p|^2 + |q|^2)` so poles are regular
    /// points of the formula.
    pub fn spherical_derivative(&self, z: &SpherePoint) -> f64 {
        let (p, q, w) = match z.chart() {
            Chart::Standard => (&self.num, &self.den, self.num.wronskian(&self.den)),
            Chart::Inverted => (
                &self.num_rev,
                &self.den_rev,
                self.num_rev.wronskian(&self.den_rev),
            ),
        };
        let c = z.coords();
        let denom = p.eval(c).norm_sqr() + q.eval(c).norm_sqr();
        w.eval(c).norm() * (1.0 + c.norm_sqr()) / denom
    }

    /// Critical points with multiplicity; always `2 deg - 2` entries.
    /// Finite ones are roots of the Wronskian, the defect of its degree
    /// is the multiplicity at infinity.
    pub fn critical_points(&self) -> Result<Vec<SpherePoint>> {
        let w = self.num.wronskian(&self.den);
        let expected = 2 * self.degree - 2;
        if w.is_zero() {
            return Err(Error::InvalidInput(
                "Wronskian vanishes identically; map is degenerate".into(),
            ));
        }
        let mut pts: Vec<SpherePoint> = w
            .roots()?
            .into_iter()
            .map(SpherePoint::from_complex)
            .collect();
        for _ in w.degree()..expected {
            pts.push(SpherePoint::infinity());
        }
        pts.sort_by(|a, b| a.canonical_cmp(b));
        Ok(pts)
    }

    /// Images of the critical points (with repetition).
    pub fn critical_values(&self) -> Result<Vec<SpherePoint>> {
        self.critical_points()?
            .iter()
            .map(|p| self.evaluate(p))
            .collect()
    }

    /// The full preimage of `w`, always `deg` points counted with
    /// multiplicity, sorted canonically. Members of a root cluster are
    /// averaged so multiple points repeat exactly.
    pub fn fiber(&self, w: &SpherePoint) -> Result<Vec<SpherePoint>> {
        // Fiber equation in the standard chart: p(z) - w q(z) = 0; in
        // the inverted chart of w (w = 1/w'): w' p(z) - q(z) = 0.
        let eq = match w.chart() {
            Chart::Standard => self.num.sub_scaled(w.coords(), &self.den),
            Chart::Inverted => self
                .num
                .scale(w.coords())
                .sub_scaled(Complex64::new(1.0, 0.0), &self.den),
        };
        if eq.is_zero() {
            return Err(Error::IndeterminateForm(
                "fiber equation vanished identically".into(),
            ));
        }
        let mut pts: Vec<SpherePoint> = eq
            .roots()?
            .into_iter()
            .map(SpherePoint::from_complex)
            .collect();
        // Degree defect: preimages at infinity.
        for _ in eq.degree()..self.degree {
            pts.push(SpherePoint::infinity());
        }
        let mut pts = cluster_points(pts);
        pts.sort_by(|a, b| a.canonical_cmp(b));
        Ok(pts)
    }

    /// `n`-fold composition applied pointwise.
    pub fn iterate(&self, z: &SpherePoint, n: usize) -> Result<SpherePoint> {
        let mut y = *z;
        for _ in 0..n {
            y = self.evaluate(&y)?;
        }
        Ok(y)
    }

    /// Text form (see [`RationalMap::parse`] for the grammar).
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "degree {}", self.degree);
        for (k, c) in self.num.coeffs().iter().enumerate() {
            let _ = writeln!(out, "num {} {} {}", k, c.re, c.im);
        }
        for (k, c) in self.den.coeffs().iter().enumerate() {
            let _ = writeln!(out, "den {} {} {}", k, c.re, c.im);
        }
        out
    }

    /// Parses the text form: a `degree d` line, then `num k re im` and
    /// `den k re im` coefficient lines. Blank lines and `#` comments are
    /// skipped. The declared degree must match the coefficients.
    pub fn parse(text: &str) -> Result<Self> {
        let mut degree: Option<usize> = None;
        let zero = Complex64::new(0.0, 0.0);
        let mut num: Vec<Complex64> = Vec::new();
        let mut den: Vec<Complex64> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let fail = |msg: &str| Error::Parse(format!("line {}: {}", lineno + 1, msg));
            match fields[0] {
                "degree" => {
                    if fields.len() != 2 {
                        return Err(fail("expected `degree d`"));
                    }
                    degree = Some(
                        fields[1]
                            .parse()
                            .map_err(|_| fail("degree must be an integer"))?,
                    );
                }
                tag @ ("num" | "den") => {
                    if fields.len() != 4 {
                        return Err(fail("expected `num|den k re im`"));
                    }
                    let k: usize = fields[1]
                        .parse()
                        .map_err(|_| fail("coefficient index must be an integer"))?;
                    let re: f64 = fields[2].parse().map_err(|_| fail("bad real part"))?;
                    let im: f64 = fields[3].parse().map_err(|_| fail("bad imaginary part"))?;
                    let target = if tag == "num" { &mut num } else { &mut den };
                    if target.len() <= k {
                        target.resize(k + 1, zero);
                    }
                    target[k] = Complex64::new(re, im);
                }
                other => return Err(fail(&format!("unknown record `{other}`"))),
            }
        }
        let degree = degree.ok_or_else(|| Error::Parse("missing `degree` line".into()))?;
        let map = RationalMap::new(Poly::new(num), Poly::new(den))?;
        if map.degree != degree {
            return Err(Error::Parse(format!(
                "declared degree {} but coefficients give degree {}",
                degree, map.degree
            )));
        }
        Ok(map)
    }
}

/// Averages groups of points closer than `CLUSTER_TOL` so multiple
/// fiber points come out exactly repeated.
fn cluster_points(pts: Vec<SpherePoint>) -> Vec<SpherePoint> {
    let n = pts.len();
    let mut assigned = vec![usize::MAX; n];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        if assigned[i] != usize::MAX {
            continue;
        }
        let id = clusters.len();
        let mut members = vec![i];
        assigned[i] = id;
        for (j, slot) in assigned.iter_mut().enumerate().skip(i + 1) {
            if *slot == usize::MAX && sph_dist(&pts[i], &pts[j]) < CLUSTER_TOL {
                *slot = id;
                members.push(j);
            }
        }
        clusters.push(members);
    }
    let mut out = Vec::with_capacity(n);
    for members in clusters {
        if members.len() == 1 {
            out.push(pts[members[0]]);
            continue;
        }
        let mut acc = super::sphere::Vec3::new(0.0, 0.0, 0.0);
        for &m in &members {
            acc = acc.add(pts[m].to_vec3());
        }
        let rep = SpherePoint::from_vec3(acc.scale(1.0 / members.len() as f64));
        for _ in members {
            out.push(rep);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn z_squared() -> RationalMap {
        RationalMap::monic_plus_c(2, Complex64::new(0.0, 0.0)).unwrap()
    }

    fn pt(re: f64, im: f64) -> SpherePoint {
        SpherePoint::from_complex(Complex64::new(re, im))
    }

    #[test]
    fn evaluate_in_both_charts() {
        let f = z_squared();
        let y = f.evaluate(&pt(2.0, 0.0)).unwrap();
        assert!((y.to_complex().re - 4.0).abs() < 1e-12);
        assert!(f.evaluate(&SpherePoint::infinity()).unwrap().is_infinity());
        // z + 1/z sends 0 and infinity to infinity.
        let g = RationalMap::new(
            Poly::from_real(&[1.0, 0.0, 1.0]),
            Poly::from_real(&[0.0, 1.0]),
        )
        .unwrap();
        assert!(g.evaluate(&SpherePoint::zero()).unwrap().is_infinity());
        assert!(g.evaluate(&SpherePoint::infinity()).unwrap().is_infinity());
    }

    #[test]
    fn spherical_derivative_matches_finite_differences() {
        let maps = [
            z_squared(),
            RationalMap::new(
                Poly::from_real(&[1.0, 0.0, 1.0]),
                Poly::from_real(&[0.0, 1.0]),
            )
            .unwrap(),
            RationalMap::monic_plus_c(3, Complex64::new(0.1, -0.2)).unwrap(),
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for f in &maps {
            for _ in 0..40 {
                let z = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                let p = SpherePoint::from_complex(z);
                let sd = f.spherical_derivative(&p);
                if sd < 1e-3 {
                    continue; // finite differences lose accuracy at critical points
                }
                let h = 1e-6;
                let q = SpherePoint::from_complex(z + Complex64::new(h, 0.0));
                let num = sph_dist(&f.evaluate(&p).unwrap(), &f.evaluate(&q).unwrap());
                let den = sph_dist(&p, &q);
                let fd = num / den;
                assert!(
                    (fd - sd).abs() / sd < 1e-3,
                    "fd {fd} vs formula {sd} at {z}"
                );
            }
        }
    }

    #[test]
    fn spherical_derivative_of_isometries_is_one() {
        // z and 1/z are isometries of the spherical metric.
        let id = RationalMap::new(Poly::from_real(&[0.0, 1.0]), Poly::from_real(&[1.0])).unwrap();
        let inv = RationalMap::new(Poly::from_real(&[1.0]), Poly::from_real(&[0.0, 1.0])).unwrap();
        for p in [pt(0.0, 0.0), pt(1.0, 0.0), pt(-0.3, 2.0), SpherePoint::infinity()] {
            assert!((id.spherical_derivative(&p) - 1.0).abs() < 1e-12);
            assert!((inv.spherical_derivative(&p) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn critical_points_counted_with_multiplicity() {
        let f = z_squared();
        let cps = f.critical_points().unwrap();
        assert_eq!(cps.len(), 2);
        assert!(cps.iter().any(|p| p.is_infinity()));
        assert!(cps.iter().any(|p| sph_dist(p, &SpherePoint::zero()) < 1e-9));

        // z + 1/z has critical points exactly at +-1.
        let g = RationalMap::new(
            Poly::from_real(&[1.0, 0.0, 1.0]),
            Poly::from_real(&[0.0, 1.0]),
        )
        .unwrap();
        let cps = g.critical_points().unwrap();
        assert_eq!(cps.len(), 2);
        assert!(cps.iter().any(|p| sph_dist(p, &pt(1.0, 0.0)) < 1e-9));
        assert!(cps.iter().any(|p| sph_dist(p, &pt(-1.0, 0.0)) < 1e-9));

        let h = RationalMap::monic_plus_c(3, Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(h.critical_points().unwrap().len(), 4);
    }

    #[test]
    fn fibers_have_full_cardinality_and_map_back() {
        let f = z_squared();
        let fib = f.fiber(&pt(1.0, 0.0)).unwrap();
        assert_eq!(fib.len(), 2);
        for p in &fib {
            let img = f.evaluate(p).unwrap();
            assert!(sph_dist(&img, &pt(1.0, 0.0)) < 1e-9);
        }
        // Critical value: double point at 0.
        let fib0 = f.fiber(&SpherePoint::zero()).unwrap();
        assert_eq!(fib0.len(), 2);
        assert!(sph_dist(&fib0[0], &fib0[1]) < 1e-12);
        assert!(sph_dist(&fib0[0], &SpherePoint::zero()) < 1e-6);
        // Fiber over infinity: double point at infinity.
        let fibi = f.fiber(&SpherePoint::infinity()).unwrap();
        assert_eq!(fibi.len(), 2);
        assert!(fibi.iter().all(|p| p.is_infinity()));
    }

    #[test]
    fn random_fibers_round_trip() {
        let f = RationalMap::monic_plus_c(3, Complex64::new(0.2, 0.1)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let w = SpherePoint::from_complex(Complex64::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            ));
            let fib = f.fiber(&w).unwrap();
            assert_eq!(fib.len(), 3);
            for p in &fib {
                assert!(sph_dist(&f.evaluate(p).unwrap(), &w) < 1e-9);
            }
        }
    }

    #[test]
    fn degenerate_fraction_rejected() {
        // (z-1)(z-2) / (z-1)(z+3) shares the root z = 1.
        let num = Poly::from_real(&[2.0, -3.0, 1.0]);
        let den = Poly::from_real(&[-3.0, 2.0, 1.0]);
        assert!(RationalMap::new(num, den).is_err());
    }

    #[test]
    fn serialization_round_trips() {
        let f = RationalMap::new(
            Poly::new(vec![
                Complex64::new(0.125, -0.7331),
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 1e-17),
            ]),
            Poly::from_real(&[1.0, 0.5]),
        )
        .unwrap();
        let text = f.serialize();
        let g = RationalMap::parse(&text).unwrap();
        assert_eq!(f.num().coeffs(), g.num().coeffs());
        assert_eq!(f.den().coeffs(), g.den().coeffs());
        assert!(RationalMap::parse("degree 2\nnum 2 1 0\n").is_err());
        assert!(RationalMap::parse("num 2 1 0\nden 0 1 0\n").is_err());
    }
}
