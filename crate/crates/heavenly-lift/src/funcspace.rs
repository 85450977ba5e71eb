//! Closed-form free functions: holomorphic b(z), real r(y) and k(y), and the
//! two integral terms entering the solution families.

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::{jet_len, multi_indices, Jet, Point4};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const POLE_GUARD: f64 = 1e-9;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Holomorphic function of one complex variable. The conjugate function
/// b̄(z̄) = conj(b(conj z̄)) is always derived, never stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HoloFn {
    /// Σ c_k z^k
    Polynomial { coeffs: Vec<Complex64> },
    /// a·e^{βz}
    ExpLinear { a: Complex64, beta: Complex64 },
    /// p(z) / Π (z − pole_j); repeated poles encode multiplicity.
    Rational { numerator: Vec<Complex64>, poles: Vec<Complex64> },
}

/// Real function of one real variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RealFn1 {
    /// Σ c_k y^k
    Polynomial { coeffs: Vec<f64> },
    /// a·sin(ωy) + b·cos(ωy)
    Trig { a: f64, b: f64, omega: f64 },
    /// a·e^{γy}
    Exponential { a: f64, gamma: f64 },
    /// slope·y + intercept
    Affine { slope: f64, intercept: f64 },
}

fn poly_eval_derivs(c: &[Complex64], z: Complex64, order: usize) -> Vec<Complex64> {
    // Taylor shift by synthetic division; k-th entry becomes f^(k)(z)/k!
    let mut t: Vec<Complex64> = c.to_vec();
    let n = t.len();
    let mut out = vec![zero(); order + 1];
    let mut fact = 1.0;
    for (k, o) in out.iter_mut().enumerate() {
        if k > 0 {
            fact *= k as f64;
        }
        if k >= n {
            break;
        }
        for i in (k..n - 1).rev() {
            let v = t[i + 1];
            t[i] += v * z;
        }
        *o = t[k] * fact;
    }
    out
}

fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_deriv(a: &[Complex64]) -> Vec<Complex64> {
    a.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect()
}

fn poly_from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    roots.iter().fold(vec![Complex64::new(1.0, 0.0)], |acc, r| poly_mul(&acc, &[-r, Complex64::new(1.0, 0.0)]))
}

impl HoloFn {
    pub fn polynomial(coeffs: &[Complex64]) -> HoloFn {
        HoloFn::Polynomial { coeffs: coeffs.to_vec() }
    }

    pub fn constant(c: Complex64) -> HoloFn {
        HoloFn::Polynomial { coeffs: vec![c] }
    }

    /// c·z^k
    pub fn monomial(c: Complex64, k: usize) -> HoloFn {
        let mut coeffs = vec![zero(); k + 1];
        coeffs[k] = c;
        HoloFn::Polynomial { coeffs }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            HoloFn::Polynomial { coeffs } => coeffs.iter().skip(1).all(|c| *c == zero()),
            HoloFn::ExpLinear { a, beta } => *a == zero() || *beta == zero(),
            HoloFn::Rational { numerator, poles } => {
                poles.is_empty() && numerator.iter().skip(1).all(|c| *c == zero())
            }
        }
    }

    /// (f(z), f'(z), …, f^(order)(z))
    pub fn eval(&self, z: Complex64, order: usize) -> Result<Vec<Complex64>> {
        match self {
            HoloFn::Polynomial { coeffs } => Ok(poly_eval_derivs(coeffs, z, order)),
            HoloFn::ExpLinear { a, beta } => {
                let e = a * (beta * z).exp();
                Ok((0..=order).map(|k| e * beta.powu(k as u32)).collect())
            }
            HoloFn::Rational { numerator, poles } => {
                if let Some(p) = poles.iter().find(|p| (z - **p).norm() < POLE_GUARD) {
                    return Err(Error::PoleProximity(*p));
                }
                // Taylor series in h of numerator and denominator, then divide
                let mut fact = vec![1.0; order + 1];
                for k in 1..=order {
                    fact[k] = fact[k - 1] * k as f64;
                }
                let num: Vec<Complex64> = poly_eval_derivs(numerator, z, order)
                    .iter()
                    .zip(&fact)
                    .map(|(d, f)| d / f)
                    .collect();
                let den_poly = poly_from_roots(poles);
                let den: Vec<Complex64> = poly_eval_derivs(&den_poly, z, order)
                    .iter()
                    .zip(&fact)
                    .map(|(d, f)| d / f)
                    .collect();
                let mut quo = vec![zero(); order + 1];
                for k in 0..=order {
                    let mut acc = num[k];
                    for j in 0..k {
                        acc -= quo[j] * den[k - j];
                    }
                    quo[k] = acc / den[0];
                }
                Ok(quo.iter().zip(&fact).map(|(c, f)| c * f).collect())
            }
        }
    }

    /// Derivatives of the conjugate function b̄ at z̄.
    pub fn eval_conj(&self, zbar: Complex64, order: usize) -> Result<Vec<Complex64>> {
        Ok(self.eval(zbar.conj(), order)?.into_iter().map(|v| v.conj()).collect())
    }

    /// The derivative, in the same family.
    pub fn derivative(&self) -> HoloFn {
        match self {
            HoloFn::Polynomial { coeffs } => HoloFn::Polynomial { coeffs: poly_deriv(coeffs) },
            HoloFn::ExpLinear { a, beta } => HoloFn::ExpLinear { a: a * beta, beta: *beta },
            HoloFn::Rational { numerator, poles } => {
                let d = poly_from_roots(poles);
                let a = poly_mul(&poly_deriv(numerator), &d);
                let b = poly_mul(numerator, &poly_deriv(&d));
                let n = a.len().max(b.len());
                let num = (0..n)
                    .map(|k| a.get(k).copied().unwrap_or_default() - b.get(k).copied().unwrap_or_default())
                    .collect();
                let mut p2 = poles.clone();
                p2.extend_from_slice(poles);
                HoloFn::Rational { numerator: num, poles: p2 }
            }
        }
    }

    /// f∘z as a jet, given the jet of z.
    pub fn to_jet(&self, z: &Jet) -> Result<Jet> {
        Ok(z.compose_univariate(&self.eval(z.value(), z.order())?))
    }

    /// b̄∘z̄ as a jet, given the jet of z̄.
    pub fn to_jet_conj(&self, zbar: &Jet) -> Result<Jet> {
        Ok(zbar.compose_univariate(&self.eval_conj(zbar.value(), zbar.order())?))
    }
}

impl RealFn1 {
    pub fn zero() -> RealFn1 {
        RealFn1::Polynomial { coeffs: vec![] }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            RealFn1::Polynomial { coeffs } => coeffs.iter().all(|c| *c == 0.0),
            RealFn1::Trig { a, b, .. } => *a == 0.0 && *b == 0.0,
            RealFn1::Exponential { a, .. } => *a == 0.0,
            RealFn1::Affine { slope, intercept } => *slope == 0.0 && *intercept == 0.0,
        }
    }

    /// (r(y), r'(y), …, r^(order)(y))
    pub fn eval(&self, y: f64, order: usize) -> Vec<f64> {
        match self {
            RealFn1::Polynomial { coeffs } => {
                let c: Vec<Complex64> = coeffs.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                poly_eval_derivs(&c, Complex64::new(y, 0.0), order).iter().map(|v| v.re).collect()
            }
            RealFn1::Trig { a, b, omega } => {
                let (s, c) = (omega * y).sin_cos();
                // d^k/dy^k rotates (sin, cos) by quarter turns
                (0..=order)
                    .map(|k| {
                        let w = omega.powi(k as i32);
                        let (ds, dc) = match k % 4 {
                            0 => (s, c),
                            1 => (c, -s),
                            2 => (-s, -c),
                            _ => (-c, s),
                        };
                        w * (a * ds + b * dc)
                    })
                    .collect()
            }
            RealFn1::Exponential { a, gamma } => {
                let e = a * (gamma * y).exp();
                (0..=order).map(|k| e * gamma.powi(k as i32)).collect()
            }
            RealFn1::Affine { slope, intercept } => (0..=order)
                .map(|k| match k {
                    0 => slope * y + intercept,
                    1 => *slope,
                    _ => 0.0,
                })
                .collect(),
        }
    }

    /// r∘y as a jet, given the (real-valued) jet of y.
    pub fn to_jet(&self, y: &Jet) -> Jet {
        let d: Vec<Complex64> = self.eval(y.value().re, y.order()).iter().map(|&v| Complex64::new(v, 0.0)).collect();
        y.compose_univariate(&d)
    }
}

/// Jet of the gauge-fixed antiderivative I(z, z̄) with ∂_z∂_z̄ I = (b + b̄)/(z + z̄)²,
/// I = −F − F̄ where F = ∫ b(z)/(z + z̄) dz is evaluated by polynomial division.
pub fn doubleint_jet(b: &HoloFn, p: Point4, order: usize) -> Result<Jet> {
    let coeffs = match b {
        HoloFn::Polynomial { coeffs } => coeffs,
        _ => return Err(Error::Unsupported("the double-integral term needs a polynomial b".into())),
    };
    if coeffs.len() > 9 {
        return Err(Error::Unsupported("polynomial b of degree above 8".into()));
    }
    if 2.0 * p.z.re <= 1e-9 {
        return Err(Error::Domain(format!("z + z̄ = {} must be positive", 2.0 * p.z.re)));
    }
    let (_, z) = Jet::complex_coordinates(p, order)?;
    let zb = z.conj();
    let s = &z + &zb;
    let mzb = -&zb;
    // Σ_k b_k Σ_{j<k} z^{j+1}/(j+1) (−z̄)^{k−1−j}
    let mut zp = vec![Jet::constant(1.0, order)];
    let mut mp = vec![Jet::constant(1.0, order)];
    for k in 1..coeffs.len().max(1) {
        zp.push(&zp[k - 1] * &z);
        mp.push(&mp[k - 1] * &mzb);
    }
    zp.push(&zp[zp.len() - 1] * &z);
    let mut f = Jet::zero(order);
    for (k, bk) in coeffs.iter().enumerate().skip(1) {
        if *bk == zero() {
            continue;
        }
        for j in 0..k {
            f += (&zp[j + 1] * &mp[k - 1 - j]) * (bk / (j + 1) as f64);
        }
    }
    // b(−z̄) ln(z + z̄)
    let mut bm = Jet::zero(order);
    for c in coeffs.iter().rev() {
        bm = bm * &mzb + *c;
    }
    f += bm * s.ln()?;
    Ok(-(&f + f.conj()))
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
            let dt = p1 / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn gl32() -> &'static (Vec<f64>, Vec<f64>) {
    static R: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    R.get_or_init(|| gauss_legendre(32))
}

fn log_ratio(z: &Jet, zb: &Jet, k: &Jet) -> Result<Jet> {
    let ik2 = k * (2.0 * I);
    Ok((zb + &ik2).ln()? - (z - &ik2).ln()?)
}

/// Jet of T = 2i ∫_0^y [ln(z̄ + 2ik(s)) − ln(z − 2ik(s))] ds.
///
/// Every coefficient with a y-derivative comes from the integrand in closed
/// form; the pure (z, z̄) part is integrated by 32-node Gauss–Legendre.
pub fn log_ratio_integral_jet(k: &RealFn1, p: Point4, order: usize) -> Result<Jet> {
    if p.z.re <= 0.0 {
        return Err(Error::Domain("Re z must be positive".into()));
    }
    let y0 = p.y();
    let mut c = vec![zero(); jet_len(order)];
    if order >= 1 {
        let [_, x2, _, _] = crate::jets::seed_coordinates(p, order - 1)?;
        let (_, z) = Jet::complex_coordinates(p, order - 1)?;
        let g = log_ratio(&z, &z.conj(), &k.to_jet(&x2))?;
        for (idx, a) in multi_indices(order).enumerate() {
            if a[0] == 0 && a[1] >= 1 {
                c[idx] = 2.0 * I * g.coeff([0, a[1] - 1, a[2], a[3]]) / a[1] as f64;
            }
        }
    }
    if y0 != 0.0 {
        let (nodes, weights) = gl32();
        for (t, w) in nodes.iter().zip(weights) {
            let s = 0.5 * y0 * (t + 1.0);
            let (_, z) = Jet::complex_coordinates(Point4::new(Complex64::new(p.x(), s), p.z), order)?;
            let ks = Jet::constant(k.eval(s, 0)[0], order);
            let g = log_ratio(&z, &z.conj(), &ks)?;
            let f = 2.0 * I * 0.5 * y0 * w;
            for (idx, a) in multi_indices(order).enumerate() {
                if a[0] == 0 && a[1] == 0 {
                    c[idx] += f * g.coeff(a);
                }
            }
        }
    }
    Ok(Jet::from_coeffs(order, c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cubic_derivatives() {
        let f = HoloFn::monomial(c(1.0, 0.0), 3);
        let d = f.eval(c(2.0, 0.0), 3).unwrap();
        let want = [8.0, 12.0, 12.0, 6.0];
        for (a, b) in d.iter().zip(want) {
            assert!((a - b).norm() < 1e-14);
        }
        let d = f.eval(c(2.0, 0.0), 5).unwrap();
        assert_eq!(d[4], zero());
        assert_eq!(d[5], zero());
    }

    #[test]
    fn constant_fn() {
        let f = HoloFn::constant(c(1.5, -2.0));
        assert_eq!(f.eval(c(0.3, 0.1), 3).unwrap(), vec![c(1.5, -2.0), zero(), zero(), zero()]);
    }

    #[test]
    fn rational_matches_closed_form() {
        // 1/(z + 3): f^(k) = (−1)^k k! / (z + 3)^{k+1}
        let f = HoloFn::Rational { numerator: vec![c(1.0, 0.0)], poles: vec![c(-3.0, 0.0)] };
        let z = c(1.0, 0.0);
        let d = f.eval(z, 4).unwrap();
        let mut fact = 1.0;
        for (k, v) in d.iter().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            let want = (-1f64).powi(k as i32) * fact / (z + 3.0).powu(k as u32 + 1);
            assert!((v - want).norm() < 1e-14);
        }
        assert!(matches!(f.eval(c(-3.0, 1e-12), 1), Err(Error::PoleProximity(_))));
    }

    #[test]
    fn derivative_stays_in_family() {
        let fs = [
            HoloFn::polynomial(&[c(1.0, 0.5), c(0.0, 0.0), c(-2.0, 1.0)]),
            HoloFn::ExpLinear { a: c(0.5, 0.1), beta: c(-0.3, 0.7) },
            HoloFn::Rational { numerator: vec![c(1.0, 0.0), c(0.5, 0.5)], poles: vec![c(-3.0, 0.0), c(-1.0, 2.0)] },
        ];
        let z = c(0.9, -0.2);
        for f in &fs {
            let d = f.eval(z, 4).unwrap();
            let df = f.derivative().eval(z, 3).unwrap();
            for k in 0..=3 {
                assert!((d[k + 1] - df[k]).norm() < 1e-12 * (1.0 + d[k + 1].norm()), "{f:?} k={k}");
            }
        }
    }

    #[test]
    fn affine_has_no_curvature() {
        let alpha = 0.7;
        let r = RealFn1::Affine { slope: 2.0 * (alpha - std::f64::consts::PI), intercept: 0.3 };
        for y in [-0.4, 0.0, 0.25] {
            let d = r.eval(y, 4);
            assert!(d[2..].iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn sine_at_zero() {
        let r = RealFn1::Trig { a: 1.0, b: 0.0, omega: 1.0 };
        assert_eq!(r.eval(0.0, 2), vec![0.0, 1.0, -0.0]);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(32);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(62)).sum();
        assert!((m - 2.0 / 63.0).abs() < 1e-14);
    }

    #[test]
    fn doubleint_constant_b() {
        let cb = c(0.7, -0.4);
        let p = Point4::new(c(1.0, 0.0), c(1.3, 0.2));
        let j = doubleint_jet(&HoloFn::constant(cb), p, 2).unwrap();
        let s = 2.0 * p.z.re;
        assert!((j.value() + 2.0 * cb.re * s.ln()).norm() < 1e-14);
        assert!((j.wirt("zz̄").unwrap() - 2.0 * cb.re / (s * s)).norm() < 1e-14);
        let z0 = doubleint_jet(&HoloFn::polynomial(&[]), p, 2).unwrap();
        assert_eq!(z0.max_abs(), 0.0);
    }
}
