//! The lifted solution families ψ(q, q̄, z, z̄), the Boyer-Finley seed v, and the
//! numeric Legendre inversion back to the Kähler potential u(ζ₁, z).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::{doubleint_jet, log_ratio_integral_jet, HoloFn, RealFn1};
use crate::jets::{seed_coordinates, Jet, Point4, Wirt};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Sol1,
    Sol2,
    Sol3,
    Special1,
    Special2,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Sol1 => "sol1",
            Family::Sol2 => "sol2",
            Family::Sol3 => "sol3",
            Family::Special1 => "special1",
            Family::Special2 => "special2",
        }
    }

    pub fn is_special(self) -> bool {
        matches!(self, Family::Special1 | Family::Special2)
    }
}

/// One exact solution: family plus its free functions.
///
/// Sol2 is Sol3 with k ≡ 0; Sol2/Special2 without an explicit k use the
/// closed form of the y-integral term, any explicit k goes through quadrature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionSpec {
    pub family: Family,
    pub b: HoloFn,
    pub r: RealFn1,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<RealFn1>,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub r0: f64,
}

impl SolutionSpec {
    pub fn sol1(b: HoloFn, r: RealFn1) -> Self {
        SolutionSpec { family: Family::Sol1, b, r, k: None, alpha: 0.0, r0: 0.0 }
    }

    pub fn sol2(b: HoloFn, r: RealFn1) -> Self {
        SolutionSpec { family: Family::Sol2, b, r, k: None, alpha: 0.0, r0: 0.0 }
    }

    pub fn sol3(b: HoloFn, k: RealFn1, r: RealFn1) -> Self {
        SolutionSpec { family: Family::Sol3, b, r, k: Some(k), alpha: 0.0, r0: 0.0 }
    }

    /// Sol1 with r(y) = 2(α − π)y + r₀.
    pub fn special1(b: HoloFn, alpha: f64, r0: f64) -> Self {
        let r = RealFn1::Affine { slope: 2.0 * (alpha - PI), intercept: r0 };
        SolutionSpec { family: Family::Special1, b, r, k: None, alpha, r0 }
    }

    /// Sol2 with r(y) = 2αy + r₀.
    pub fn special2(b: HoloFn, alpha: f64, r0: f64) -> Self {
        let r = RealFn1::Affine { slope: 2.0 * alpha, intercept: r0 };
        SolutionSpec { family: Family::Special2, b, r, k: None, alpha, r0 }
    }

    /// The r(y) forced by a special family, if any.
    pub fn required_r(&self) -> Option<RealFn1> {
        match self.family {
            Family::Special1 => Some(RealFn1::Affine { slope: 2.0 * (self.alpha - PI), intercept: self.r0 }),
            Family::Special2 => Some(RealFn1::Affine { slope: 2.0 * self.alpha, intercept: self.r0 }),
            _ => None,
        }
    }

    /// Whether r obeys the restriction of a special family (always true otherwise).
    pub fn restriction_holds(&self) -> bool {
        match self.required_r() {
            None => true,
            Some(req) => {
                let ys = [-0.7, -0.1, 0.0, 0.3, 0.9];
                ys.iter().all(|&y| {
                    let a = self.r.eval(y, 2);
                    let b = req.eval(y, 2);
                    a.iter().zip(&b).all(|(u, v)| (u - v).abs() <= 1e-14 * (1.0 + v.abs()))
                })
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.family == Family::Sol3 && self.k.is_none() {
            return Err(Error::Config("sol3 needs k(y)".into()));
        }
        if matches!(self.family, Family::Sol1 | Family::Special1) && self.k.is_some() {
            return Err(Error::Config("k(y) only enters sol2/sol3-type families".into()));
        }
        if !self.restriction_holds() {
            return Err(Error::Config(format!(
                "{} requires r(y) = {:?}",
                self.family.name(),
                self.required_r().unwrap()
            )));
        }
        Ok(())
    }

    /// Whether ψ carries the y-integral term.
    pub fn has_log_term(&self) -> bool {
        matches!(self.family, Family::Sol2 | Family::Sol3 | Family::Special2)
    }

    /// k(y) of the y-integral term (zero for Sol2-type specs without k).
    pub fn k_fn(&self) -> RealFn1 {
        self.k.clone().unwrap_or_else(RealFn1::zero)
    }
}

fn check_domain(spec: &SolutionSpec, p: Point4) -> Result<()> {
    if !(p.z.re > 0.0) {
        return Err(Error::Domain(format!("Re z = {} must be positive", p.z.re)));
    }
    let pb = p.q + spec.b.eval(p.z, 0)?[0];
    if pb.norm() < 1e-12 || pb.arg().abs() >= PI - 1e-6 {
        return Err(Error::BranchCut { op: "ln(q + b)", value: pb });
    }
    Ok(())
}

/// Jet of ψ at p.
pub fn psi_jet(spec: &SolutionSpec, p: Point4, order: usize) -> Result<Jet> {
    check_domain(spec, p)?;
    let [_, y, _, _] = seed_coordinates(p, order)?;
    let (q, z) = Jet::complex_coordinates(p, order)?;
    let zb = z.conj();
    let pq = &q + spec.b.to_jet(&z)?;
    let plogp = &pq * pq.ln()?;
    let s = &z + &zb;
    let xs = &q + q.conj();
    let mut psi = &plogp + plogp.conj() - xs * (s.ln()? + 1.0);
    psi += doubleint_jet(&spec.b, p, order)?;
    psi += spec.r.to_jet(&y);
    if spec.has_log_term() {
        psi += match &spec.k {
            None => {
                let lz = z.ln()?;
                y * (lz.conj() - lz) * (2.0 * I)
            }
            Some(k) => log_ratio_integral_jet(k, p, order)?,
        };
    }
    Ok(psi)
}

/// Point of the Boyer-Finley picture: x = Re q, y = Im q, z.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BfPoint {
    pub x: f64,
    pub y: f64,
    pub z: Complex64,
}

impl From<Point4> for BfPoint {
    fn from(p: Point4) -> Self {
        BfPoint { x: p.q.re, y: p.q.im, z: p.z }
    }
}

/// Jet of v = ln(x + b(z, y)) + ln(x + b̄) − 2 ln(z + z̄) in the chart (x, y, Re z, Im z),
/// where b(z, y) = b(z) + iy (so x + b(z, y) = q + b(z) for every family).
pub fn bf_v(spec: &SolutionSpec, p: BfPoint, order: usize) -> Result<Jet> {
    let pt = Point4::new(Complex64::new(p.x, p.y), p.z);
    if !(p.z.re > 0.0) {
        return Err(Error::Domain("z + z̄ must be positive".into()));
    }
    let (q, z) = Jet::complex_coordinates(pt, order)?;
    let a = &q + spec.b.to_jet(&z)?;
    if a.value().norm() < 1e-12 {
        return Err(Error::ZeroArgument { op: "ln(x + b)" });
    }
    let la = a.ln()?;
    Ok(&la + la.conj() - (&z + z.conj()).ln()? * 2.0)
}

/// Newton solution of ψ_q(q, z) = ζ₁ together with the Legendre data of u.
#[derive(Clone, Debug, PartialEq)]
pub struct LegendreSolution {
    pub point: Point4,
    pub zeta: Complex64,
    /// u = qψ_q + q̄ψ_q̄ − ψ
    pub u: f64,
    /// Wirtinger Hessian of u in the order (ζ₁, ζ̄₁, z, z̄).
    pub u_hessian: [[Complex64; 4]; 4],
    pub iterations: usize,
    pub residual: f64,
}

const NEWTON_MAX_ITER: usize = 60;
const NEWTON_TOL: f64 = 1e-12;
const HESS_GUARD: f64 = 1e-10;

/// Default Newton seed: exact inverse of ψ_q for r'' ≡ 0 without the log term.
pub fn legendre_seed(spec: &SolutionSpec, zeta: Complex64, z: Complex64) -> Result<Point4> {
    let b = spec.b.eval(z, 0)?[0];
    Ok(Point4::new(zeta.exp() * (2.0 * z.re) - b, z))
}

fn forward(spec: &SolutionSpec, p: Point4) -> Result<Jet> {
    psi_jet(spec, p, 2)
}

/// Solve ψ_q = ζ₁ (and its conjugate) for q at fixed z by damped Newton.
pub fn legendre_invert(
    spec: &SolutionSpec,
    zeta: Complex64,
    z: Complex64,
    seed: Option<Point4>,
) -> Result<LegendreSolution> {
    if let Some(s) = seed {
        return newton(spec, zeta, Point4::new(s.q, z));
    }
    // multi-start: ψ_q need not be injective (oscillating r), so the heuristic
    // seed can stall in a basin without a root
    let q0 = legendre_seed(spec, zeta, z)?.q;
    let starts = [q0, q0 + Complex64::new(0.0, 0.5), q0 - Complex64::new(0.0, 0.5), q0 * 0.5, q0 * 2.0, q0 + Complex64::new(0.0, 1.0), q0 - Complex64::new(0.0, 1.0)];
    let mut last = None;
    for q in starts {
        match newton(spec, zeta, Point4::new(q, z)) {
            Ok(s) => return Ok(s),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap())
}

fn newton(spec: &SolutionSpec, zeta: Complex64, start: Point4) -> Result<LegendreSolution> {
    let z = start.z;
    let mut p = start;
    let mut psi = forward(spec, p)?;
    let mut f = psi.wirt("q")? - zeta;
    let mut iterations = 0;
    while f.norm() > NEWTON_TOL {
        if iterations == NEWTON_MAX_ITER {
            return Err(Error::NoConvergence { iterations, residual: f.norm() });
        }
        iterations += 1;
        let (hqq, hqb, hbb) = (psi.wirt("qq")?, psi.wirt("qq̄")?, psi.wirt("q̄q̄")?);
        let det = hqq * hbb - hqb * hqb;
        if det.norm() < HESS_GUARD {
            return Err(Error::SingularHessian(det.norm()));
        }
        let dq = (-f * hbb + hqb * f.conj()) / det;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=20 {
            let trial = Point4::new(p.q + dq * t, z);
            if let Ok(j) = forward(spec, trial) {
                let ft = j.wirt("q")? - zeta;
                if ft.norm() < f.norm() {
                    p = trial;
                    psi = j;
                    f = ft;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence { iterations, residual: f.norm() });
        }
    }
    let zeta_at = psi.wirt("q")?;
    let u = 2.0 * (p.q * zeta_at).re - psi.value().re;
    let u_hessian = legendre_hessian(&psi)?;
    Ok(LegendreSolution { point: p, zeta, u, u_hessian, iterations, residual: f.norm() })
}

/// Second derivatives of u from the Hessian of ψ through the Legendre relations.
pub fn legendre_hessian(psi: &Jet) -> Result<[[Complex64; 4]; 4]> {
    use Wirt::*;
    let d = |w: &[Wirt]| psi.wirtinger(w);
    let h = [[d(&[Q, Q])?, d(&[Q, Qbar])?], [d(&[Qbar, Q])?, d(&[Qbar, Qbar])?]];
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    if det.norm() < HESS_GUARD {
        return Err(Error::SingularHessian(det.norm()));
    }
    let hi = [[h[1][1] / det, -h[0][1] / det], [-h[1][0] / det, h[0][0] / det]];
    // mixed ψ derivatives: rows (q, q̄), columns (z, z̄)
    let m = [[d(&[Q, Z])?, d(&[Q, Zbar])?], [d(&[Qbar, Z])?, d(&[Qbar, Zbar])?]];
    // ∂(q, q̄)/∂(z, z̄) at fixed ζ
    let mut dz = [[Complex64::new(0.0, 0.0); 2]; 2];
    for a in 0..2 {
        for c in 0..2 {
            dz[a][c] = -(hi[a][0] * m[0][c] + hi[a][1] * m[1][c]);
        }
    }
    let zz = [[d(&[Z, Z])?, d(&[Z, Zbar])?], [d(&[Zbar, Z])?, d(&[Zbar, Zbar])?]];
    let mut out = [[Complex64::new(0.0, 0.0); 4]; 4];
    for a in 0..2 {
        for c in 0..2 {
            out[a][c] = hi[a][c];
            out[a][2 + c] = dz[a][c];
            out[2 + c][a] = dz[a][c];
        }
    }
    // u_{zw} = −ψ_{zw} − ψ_{zq} ∂q/∂w − ψ_{zq̄} ∂q̄/∂w
    for r in 0..2 {
        for c in 0..2 {
            out[2 + r][2 + c] = -zz[r][c] - m[0][r] * dz[0][c] - m[1][r] * dz[1][c];
        }
    }
    Ok(out)
}

/// Jet of u(ζ₁, z) of the given order (≤ 3) in the chart (Re ζ₁, Im ζ₁, Re z, Im z),
/// obtained by jet-level Newton on ψ_q∘(x₁, x₂) = ζ₁.
pub fn legendre_u_jet(spec: &SolutionSpec, sol: &LegendreSolution, order: usize) -> Result<Jet> {
    if order > 3 {
        return Err(Error::OrderOutOfRange(order));
    }
    let p = sol.point;
    let psi = psi_jet(spec, p, order + 1)?;
    let g = psi.wd(Wirt::Q);
    let zeta0 = g.value();
    let s = seed_coordinates(Point4::new(zeta0, p.z), order)?;
    let zeta = &s[0] + &s[1] * I;
    let gx1 = g.derivative([1, 0, 0, 0]);
    let gx2 = g.derivative([0, 1, 0, 0]);
    let jac = [[gx1.re, gx2.re], [gx1.im, gx2.im]];
    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    if det.abs() < HESS_GUARD {
        return Err(Error::SingularHessian(det.abs()));
    }
    let mut x1 = Jet::constant(p.q.re, order);
    let mut x2 = Jet::constant(p.q.im, order);
    for _ in 0..order + 2 {
        let r = g.compose(&[x1.clone(), x2.clone(), s[2].clone(), s[3].clone()]) - &zeta;
        let re = (&r + r.conj()) * 0.5;
        let im = (&r - r.conj()) * Complex64::new(0.0, -0.5);
        let d1 = (&re * jac[1][1] - &im * jac[0][1]) / det;
        let d2 = (&im * jac[0][0] - &re * jac[1][0]) / det;
        x1 -= d1;
        x2 -= d2;
    }
    let psi_n = psi.truncate(order).compose(&[x1.clone(), x2.clone(), s[2].clone(), s[3].clone()]);
    let q = &x1 + &x2 * I;
    let qz = &q * &zeta;
    Ok(&qz + qz.conj() - psi_n)
}

/// Re-express a jet in the chart (Re ζ₁, Im ζ₁, Re z, Im z) in the chart
/// (Re z₁, Im z₁, Re z, Im z) with z₁ = e^{ζ₁}.
pub fn point_transform(u: &Jet, zeta: Complex64, z: Complex64) -> Result<Jet> {
    let order = u.order();
    let s = seed_coordinates(Point4::new(zeta.exp(), z), order)?;
    let z1 = &s[0] + &s[1] * I;
    let l = z1.ln()?;
    let re = (&l + l.conj()) * 0.5;
    let im = (&l - l.conj()) * Complex64::new(0.0, -0.5);
    Ok(u.compose(&[re, im, s[2].clone(), s[3].clone()]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn sol1_trivial_value() {
        let spec = SolutionSpec::sol1(HoloFn::constant(c(0.0, 0.0)), RealFn1::zero());
        let psi = psi_jet(&spec, Point4::new(c(1.0, 0.0), c(1.0, 0.0)), 2).unwrap();
        assert!((psi.value().re + 2.0 * (2f64.ln() + 1.0)).abs() < 1e-14);
        assert!((psi.wirt("qq").unwrap() - 1.0).norm() < 1e-14);
    }

    #[test]
    fn bf_v_trivial() {
        let spec = SolutionSpec::sol1(HoloFn::constant(c(0.0, 0.0)), RealFn1::zero());
        let v = bf_v(&spec, BfPoint { x: 1.0, y: 0.0, z: c(1.0, 0.0) }, 2).unwrap();
        assert!((v.value().re + 2.0 * 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn special_constructors_enforce_r() {
        let s = SolutionSpec::special1(HoloFn::monomial(c(1.0, 0.0), 1), 0.7, 0.3);
        assert!(s.validate().is_ok());
        let mut bad = s.clone();
        bad.r = RealFn1::Polynomial { coeffs: vec![0.0, 0.0, 0.0, 1.0] };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn branch_cut_is_an_error() {
        let spec = SolutionSpec::sol1(HoloFn::constant(c(0.0, 0.0)), RealFn1::zero());
        let e = psi_jet(&spec, Point4::new(c(-1.0, 0.0), c(1.0, 0.0)), 2);
        assert!(matches!(e, Err(Error::BranchCut { .. })));
        let e = legendre_invert(&spec, c(0.0, 0.0), c(1.0, 0.0), Some(Point4::new(c(-1.0, 0.0), c(1.0, 0.0))));
        assert!(e.is_err());
    }
}
