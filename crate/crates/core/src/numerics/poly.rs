//! Complex polynomials with root finding.
//!
//! Roots of degree one and two use closed forms; higher degrees use the
//! Aberth–Ehrlich simultaneous iteration followed by Newton polishing.
//! Multiple roots are found as clusters whose spread is limited by the
//! conditioning of the polynomial, not by the iteration.

use num_complex::Complex64;

use crate::error::{Error, Result};

const ROOT_TOL: f64 = 1e-13;
const MAX_ITERS: usize = 400;

/// Dense polynomial, coefficients in ascending degree order.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<Complex64>,
}

impl Poly {
    /// Builds a polynomial, trimming trailing coefficients that are
    /// negligible relative to the largest one.
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        let max = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let cutoff = max * 1e-14;
        let mut c = coeffs;
        while c.len() > 1 && c.last().map(|t| t.norm() <= cutoff).unwrap_or(false) {
            c.pop();
        }
        if c.is_empty() {
            c.push(Complex64::new(0.0, 0.0));
        }
        Poly { coeffs: c }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Poly::new(coeffs.iter().map(|&r| Complex64::new(r, 0.0)).collect())
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].norm() == 0.0
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() == 1 {
            return Poly::new(vec![Complex64::new(0.0, 0.0)]);
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * k as f64)
                .collect(),
        )
    }

    /// `self - w * other`, used for fiber equations.
    pub fn sub_scaled(&self, w: Complex64, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = Complex64::new(0.0, 0.0);
        let mut out = vec![zero; n];
        for (k, slot) in out.iter_mut().enumerate() {
            let a = self.coeffs.get(k).copied().unwrap_or(zero);
            let b = other.coeffs.get(k).copied().unwrap_or(zero);
            *slot = a - w * b;
        }
        Poly::new(out)
    }

    pub fn scale(&self, s: Complex64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// `p' * q  -  p * q'`, the Wronskian used for critical points.
    pub fn wronskian(&self, other: &Poly) -> Poly {
        let dp = self.derivative();
        let dq = other.derivative();
        mul(&dp, other).sub_scaled(Complex64::new(1.0, 0.0), &mul(self, &dq))
    }

    /// Reversal `w^d p(1/w)` against an explicit target degree `d`
    /// (coefficients reversed and zero-padded); the chart-flipped form.
    pub fn reversed(&self, degree: usize) -> Poly {
        let zero = Complex64::new(0.0, 0.0);
        let mut out = vec![zero; degree + 1];
        for (k, c) in self.coeffs.iter().enumerate() {
            if degree >= k {
                out[degree - k] = *c;
            }
        }
        Poly::new(out)
    }

    /// All complex roots with multiplicity (cluster members listed
    /// individually). The count always equals the degree.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        if self.is_zero() {
            return Err(Error::RootFindingFailure(
                "zero polynomial has no isolated roots".into(),
            ));
        }
        match self.degree() {
            0 => Ok(Vec::new()),
            1 => Ok(vec![-self.coeffs[0] / self.coeffs[1]]),
            2 => Ok(quadratic_roots(
                self.coeffs[2],
                self.coeffs[1],
                self.coeffs[0],
            )),
            _ => self.aberth_roots(),
        }
    }

    fn aberth_roots(&self) -> Result<Vec<Complex64>> {
        let n = self.degree();
        let lead = self.coeffs[n];
        // Cauchy bound on root magnitude.
        let bound = 1.0
            + self.coeffs[..n]
                .iter()
                .map(|c| (c / lead).norm())
                .fold(0.0, f64::max);
        let deriv = self.derivative();
        // Asymmetric initial angles avoid symmetric stalling.
        let mut z: Vec<Complex64> = (0..n)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
                Complex64::from_polar(bound * (0.5 + 0.3 * (k as f64 / n as f64)), theta)
            })
            .collect();
        for _ in 0..MAX_ITERS {
            let mut max_step = 0.0f64;
            for i in 0..n {
                let p = self.eval(z[i]);
                let dp = deriv.eval(z[i]);
                let ratio = if dp.norm() > 0.0 {
                    p / dp
                } else {
                    p * Complex64::new(1e8, 0.0)
                };
                let mut s = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    if j != i {
                        let d = z[i] - z[j];
                        if d.norm() > 1e-300 {
                            s += d.inv();
                        }
                    }
                }
                let denom = Complex64::new(1.0, 0.0) - ratio * s;
                let step = if denom.norm() > 1e-300 {
                    ratio / denom
                } else {
                    ratio
                };
                z[i] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
            }
            if max_step < ROOT_TOL {
                // Newton polish sharpens simple roots to full precision.
                for zi in z.iter_mut() {
                    for _ in 0..3 {
                        let dp = deriv.eval(*zi);
                        if dp.norm() > 0.0 {
                            let step = self.eval(*zi) / dp;
                            if step.norm() < 1.0 {
                                *zi -= step;
                            }
                        }
                    }
                }
                return Ok(z);
            }
        }
        Err(Error::RootFindingFailure(format!(
            "Aberth iteration did not converge for degree {n}"
        )))
    }
}

/// Product of two polynomials.
pub fn mul(a: &Poly, b: &Poly) -> Poly {
    let zero = Complex64::new(0.0, 0.0);
    let mut out = vec![zero; a.coeffs.len() + b.coeffs.len() - 1];
    for (i, ai) in a.coeffs.iter().enumerate() {
        for (j, bj) in b.coeffs.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    Poly::new(out)
}

/// Numerically stable quadratic formula.
fn quadratic_roots(a: Complex64, b: Complex64, c: Complex64) -> Vec<Complex64> {
    let disc = b * b - 4.0 * a * c;
    let r = disc.sqrt();
    // Pick the sign that avoids cancellation in -b -+ r.
    let s = if (b.conj() * r).re >= 0.0 { r } else { -r };
    let q = -(b + s) * 0.5;
    let z1 = q / a;
    let z2 = if q.norm() > 0.0 { c / q } else { (-b + s) / (2.0 * a) };
    vec![z1, z2]
}

/// Resultant of `p` and `q` via the Sylvester matrix determinant.
pub fn resultant(p: &Poly, q: &Poly) -> Complex64 {
    let m = p.degree();
    let n = q.degree();
    if m == 0 {
        return p.coeffs[0].powu(n as u32);
    }
    if n == 0 {
        return q.coeffs[0].powu(m as u32);
    }
    let size = m + n;
    let zero = Complex64::new(0.0, 0.0);
    let mut a = vec![vec![zero; size]; size];
    for row in 0..n {
        for (k, c) in p.coeffs.iter().enumerate() {
            a[row][row + m - k] = *c;
        }
    }
    for row in 0..m {
        for (k, c) in q.coeffs.iter().enumerate() {
            a[n + row][row + n - k] = *c;
        }
    }
    // LU determinant with partial pivoting.
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..size {
        let (pivot, pnorm) = (col..size)
            .map(|r| (r, a[r][col].norm()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap();
        if pnorm == 0.0 {
            return zero;
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= a[col][col];
        for r in col + 1..size {
            let factor = a[r][col] / a[col][col];
            for c in col..size {
                let sub = factor * a[col][c];
                a[r][c] -= sub;
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Expands a product of linear factors; the oracle for root tests.
    fn from_roots(roots: &[Complex64]) -> Poly {
        let mut p = Poly::from_real(&[1.0]);
        for r in roots {
            p = mul(&p, &Poly::new(vec![-r, c(1.0, 0.0)]));
        }
        p
    }

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| {
            a.re.partial_cmp(&b.re)
                .unwrap()
                .then(a.im.partial_cmp(&b.im).unwrap())
        });
        v
    }

    #[test]
    fn closed_form_roots() {
        let r = sorted(Poly::from_real(&[-1.0, 0.0, 1.0]).roots().unwrap());
        assert!((r[0] - c(-1.0, 0.0)).norm() < 1e-14);
        assert!((r[1] - c(1.0, 0.0)).norm() < 1e-14);
        let r = Poly::from_real(&[3.0, 2.0]).roots().unwrap();
        assert!((r[0] - c(-1.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn double_root_clusters_near_zero() {
        // z^2 has both roots at 0; the solver reports a tight cluster.
        let r = Poly::from_real(&[0.0, 0.0, 1.0]).roots().unwrap();
        assert_eq!(r.len(), 2);
        for z in r {
            assert!(z.norm() < 1e-7);
        }
    }

    #[test]
    fn random_polynomials_recover_their_roots() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for deg in [3usize, 5, 8] {
            for _ in 0..10 {
                let roots: Vec<Complex64> = (0..deg)
                    .map(|_| c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
                    .collect();
                let p = from_roots(&roots);
                let found = p.roots().unwrap();
                assert_eq!(found.len(), deg);
                for r in &roots {
                    let best = found.iter().map(|f| (f - r).norm()).fold(f64::MAX, f64::min);
                    assert!(best < 1e-8, "degree {deg}: root {r} missed by {best:e}");
                }
            }
        }
    }

    #[test]
    fn wronskian_matches_quotient_derivative() {
        // d/dz (p/q) = (p'q - pq')/q^2; check numerically.
        let p = Poly::from_real(&[1.0, 0.0, 1.0]); // z^2 + 1
        let q = Poly::from_real(&[0.0, 1.0]); // z
        let w = p.wronskian(&q);
        let z = c(0.7, 0.4);
        let h = c(1e-7, 0.0);
        let f = |z: Complex64| p.eval(z) / q.eval(z);
        let fd = (f(z + h) - f(z - h)) / (2.0 * h);
        let exact = w.eval(z) / (q.eval(z) * q.eval(z));
        assert!((fd - exact).norm() < 1e-6);
    }

    #[test]
    fn resultant_detects_common_roots() {
        let p = from_roots(&[c(1.0, 0.0), c(2.0, 0.0)]);
        let q = from_roots(&[c(1.0, 0.0), c(-3.0, 0.0)]);
        assert!(resultant(&p, &q).norm() < 1e-12);
        let q2 = from_roots(&[c(0.5, 0.0), c(-3.0, 0.0)]);
        assert!(resultant(&p, &q2).norm() > 1e-3);
    }

    #[test]
    fn reversal_flips_coefficients() {
        let p = Poly::from_real(&[1.0, 2.0, 3.0]);
        let r = p.reversed(3); // w^3 p(1/w)
        let w = c(0.3, -0.2);
        let direct = w.powu(3) * p.eval(w.inv());
        assert!((r.eval(w) - direct).norm() < 1e-12);
    }
}
