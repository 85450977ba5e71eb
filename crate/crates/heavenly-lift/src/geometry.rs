//! Metrics and Newman-Penrose co-frames in the real chart (x₁..x₄).
//!
//! Quadratic forms are first written in the complex differentials
//! (dq, dq̄, dz, dz̄) and then pulled back with dq = dx₁ + i dx₂, dz = dx₃ + i dx₄.
//! A product α·β of one-forms means the symmetric product ½(α⊗β + β⊗α).

use std::f64::consts::PI;

use nalgebra::{Matrix4, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::RealFn1;
use crate::jets::{seed_coordinates, Jet, Point4, Wirt};
use crate::solutions::{psi_jet, Family, SolutionSpec};

const I: Complex64 = Complex64::new(0.0, 1.0);
const DQ: usize = 0;
const DQB: usize = 1;
const DZ: usize = 2;
const DZB: usize = 3;

/// Guard for denominators and square-root arguments.
pub const SINGULAR_TOL: f64 = 1e-12;
/// Guard for Δ₋ in the Legendre-transformed metric.
pub const DELTA_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricForm {
    Metr1,
    Metr2,
    Metr3,
    Metric1,
    Metric2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoframeForm {
    LegTetrad,
    LegTetrad2,
    Tetr1,
    Tetr2,
    Tetr3,
    Frame2Sol1,
    Frame2Sol2,
}

impl MetricForm {
    pub const ALL: [MetricForm; 5] =
        [MetricForm::Metr1, MetricForm::Metr2, MetricForm::Metr3, MetricForm::Metric1, MetricForm::Metric2];

    pub fn name(self) -> &'static str {
        match self {
            MetricForm::Metr1 => "metr1",
            MetricForm::Metr2 => "metr2",
            MetricForm::Metr3 => "metr3",
            MetricForm::Metric1 => "metric1",
            MetricForm::Metric2 => "metric2",
        }
    }

    /// The closed form belonging to a solution family.
    pub fn for_family(f: Family) -> MetricForm {
        match f {
            Family::Sol1 => MetricForm::Metr1,
            Family::Sol2 => MetricForm::Metr2,
            Family::Sol3 => MetricForm::Metr3,
            Family::Special1 => MetricForm::Metric1,
            Family::Special2 => MetricForm::Metric2,
        }
    }

    /// s with closed form = s · (metric from ψ); metric2 carries the opposite overall sign.
    pub fn legendre_sign(self) -> f64 {
        if self == MetricForm::Metric2 {
            -1.0
        } else {
            1.0
        }
    }
}

impl CoframeForm {
    pub const ALL: [CoframeForm; 7] = [
        CoframeForm::LegTetrad,
        CoframeForm::LegTetrad2,
        CoframeForm::Tetr1,
        CoframeForm::Tetr2,
        CoframeForm::Tetr3,
        CoframeForm::Frame2Sol1,
        CoframeForm::Frame2Sol2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CoframeForm::LegTetrad => "legtetrad",
            CoframeForm::LegTetrad2 => "legtetrad2",
            CoframeForm::Tetr1 => "tetr1",
            CoframeForm::Tetr2 => "tetr2",
            CoframeForm::Tetr3 => "tetr3",
            CoframeForm::Frame2Sol1 => "frame2sol1",
            CoframeForm::Frame2Sol2 => "frame2sol2",
        }
    }

    /// Families on which the form is defined.
    pub fn applies_to(self, f: Family) -> bool {
        use Family::*;
        match self {
            CoframeForm::LegTetrad => matches!(f, Sol1 | Sol2 | Sol3),
            CoframeForm::LegTetrad2 => true,
            CoframeForm::Tetr1 => f == Sol1,
            CoframeForm::Tetr2 => f == Sol2,
            CoframeForm::Tetr3 => f == Sol3,
            CoframeForm::Frame2Sol1 => f == Special1,
            CoframeForm::Frame2Sol2 => f == Special2,
        }
    }
}

/// Symmetric metric components g_{μν} as jets in the real chart.
#[derive(Clone, Debug)]
pub struct MetricJet {
    pub point: Point4,
    pub order: usize,
    pub g: [[Jet; 4]; 4],
}

/// Complex covectors in the real chart. `lbar`, `mbar` are the formal
/// conjugates (the defining formula evaluated on conjugated arguments).
#[derive(Clone, Debug)]
pub struct CoframeJet {
    pub point: Point4,
    pub order: usize,
    pub l: [Jet; 4],
    pub m: [Jet; 4],
    pub lbar: [Jet; 4],
    pub mbar: [Jet; 4],
}

impl MetricJet {
    /// Base-point values (real part).
    pub fn value(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|a, b| self.g[a][b].value().re)
    }

    pub fn max_imag(&self) -> f64 {
        self.g.iter().flatten().fold(0.0, |m, j| m.max(j.max_imag()))
    }

    pub fn max_abs(&self) -> f64 {
        self.g.iter().flatten().fold(0.0, |m, j| m.max(j.max_abs()))
    }

    /// Real parts of all components.
    pub fn re(&self) -> MetricJet {
        MetricJet { point: self.point, order: self.order, g: self.g.clone().map(|r| r.map(|j| j.re())) }
    }

    pub fn scale(&self, s: f64) -> MetricJet {
        MetricJet { point: self.point, order: self.order, g: self.g.clone().map(|r| r.map(|j| j * s)) }
    }

    pub fn from_fn(point: Point4, order: usize, f: impl Fn(usize, usize) -> Jet) -> MetricJet {
        let g = std::array::from_fn(|a| std::array::from_fn(|b| f(a.min(b), a.max(b))));
        MetricJet { point, order, g }
    }

    /// Largest componentwise deviation over all Taylor coefficients,
    /// relative to max(1, largest coefficient of `self`).
    pub fn deviation(&self, other: &MetricJet) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..4 {
            for b in 0..4 {
                for (x, y) in self.g[a][b].coeffs().iter().zip(other.g[a][b].coeffs()) {
                    worst = worst.max((x - y).norm());
                }
            }
        }
        worst / self.max_abs().max(1.0)
    }

    pub fn det(&self) -> f64 {
        self.value().determinant()
    }

    /// Sorted eigenvalues of the base-point matrix.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let e = SymmetricEigen::new(self.value()).eigenvalues;
        let mut v = [e[0], e[1], e[2], e[3]];
        v.sort_by(f64::total_cmp);
        v
    }

    /// (number of positive, number of negative) eigenvalues; eigenvalues below
    /// 1e−12 of the largest magnitude count as neither.
    pub fn signature(&self) -> (usize, usize) {
        let e = self.eigenvalues();
        let tol = 1e-12 * e.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (e.iter().filter(|&&v| v > tol).count(), e.iter().filter(|&&v| v < -tol).count())
    }
}

// ---------------------------------------------------------------- forms

type Form1 = [Jet; 4];

fn form1(order: usize, entries: &[(usize, Jet)]) -> Form1 {
    let mut f: Form1 = std::array::from_fn(|_| Jet::zero(order));
    for (i, c) in entries {
        f[*i] += c;
    }
    f
}

fn form_scale(f: &Form1, c: &Jet) -> Form1 {
    std::array::from_fn(|i| &f[i] * c)
}

fn form_swap(f: Form1) -> Form1 {
    let [a, b, c, d] = f;
    [b, a, d, c]
}

/// Symmetric quadratic form in (dq, dq̄, dz, dz̄).
struct Quad {
    m: [[Jet; 4]; 4],
}

impl Quad {
    fn new(order: usize) -> Quad {
        Quad { m: std::array::from_fn(|_| std::array::from_fn(|_| Jet::zero(order))) }
    }

    /// += c·α·β
    fn prod(&mut self, a: &Form1, b: &Form1, c: &Jet) {
        for i in 0..4 {
            for j in 0..4 {
                let t = (&a[i] * &b[j] + &a[j] * &b[i]) * c * 0.5;
                self.m[i][j] += &t;
            }
        }
    }

    fn sq(&mut self, a: &Form1, c: &Jet) {
        self.prod(a, a, c);
    }

    /// += c·dXᵢ dXⱼ
    fn basis(&mut self, i: usize, j: usize, c: &Jet) {
        if i == j {
            self.m[i][i] += c;
        } else {
            let h = c * 0.5;
            self.m[i][j] += &h;
            self.m[j][i] += &h;
        }
    }

    fn scaled(mut self, c: &Jet) -> Quad {
        for row in self.m.iter_mut() {
            for e in row.iter_mut() {
                *e = &*e * c;
            }
        }
        self
    }

    fn add(mut self, other: Quad) -> Quad {
        for i in 0..4 {
            for j in 0..4 {
                self.m[i][j] += &other.m[i][j];
            }
        }
        self
    }

    fn into_metric(self, point: Point4, order: usize) -> MetricJet {
        let c = pullback();
        MetricJet::from_fn(point, order, |mu, nu| {
            let mut acc = Jet::zero(order);
            for i in 0..4 {
                for j in 0..4 {
                    let w = c[i][mu] * c[j][nu];
                    if w != Complex64::new(0.0, 0.0) {
                        acc += &(&self.m[i][j] * w);
                    }
                }
            }
            acc
        })
    }
}

/// Rows: dq, dq̄, dz, dz̄ in terms of dx₁..dx₄.
fn pullback() -> [[Complex64; 4]; 4] {
    let o = Complex64::new(1.0, 0.0);
    let z = Complex64::new(0.0, 0.0);
    [[o, I, z, z], [o, -I, z, z], [z, z, o, I], [z, z, o, -I]]
}

fn to_real(f: &Form1) -> [Jet; 4] {
    let c = pullback();
    let order = f[0].order();
    std::array::from_fn(|mu| {
        let mut acc = Jet::zero(order);
        for i in 0..4 {
            if c[i][mu] != Complex64::new(0.0, 0.0) {
                acc += &(&f[i] * c[i][mu]);
            }
        }
        acc
    })
}

// ---------------------------------------------------------------- branches

fn check_arg(j: &Jet, what: &str) -> Result<()> {
    let v = j.value();
    if !v.is_finite() || v.norm() <= SINGULAR_TOL {
        return Err(Error::SingularCoframe(format!("{what} = {v}")));
    }
    Ok(())
}

/// J^p on the principal branch, except that a negative real argument gets
/// e^{iπp}(−J)^p. Real-valued arguments then satisfy J^p·J̄^p = (J²)^p with
/// the formal conjugate J̄ = J, which is what the co-frame identities need.
fn bpow(j: &Jet, p: f64, what: &str) -> Result<Jet> {
    check_arg(j, what)?;
    let v = j.value();
    if v.re < 0.0 && v.im.abs() <= 1e-10 * v.norm() {
        Ok((-j).powf(p)? * Complex64::from_polar(1.0, PI * p))
    } else {
        j.powf(p)
    }
}

fn bsqrt(j: &Jet, what: &str) -> Result<Jet> {
    bpow(j, 0.5, what)
}

fn nonzero(j: &Jet, what: &str) -> Result<()> {
    let v = j.value();
    if !v.is_finite() || v.norm() <= SINGULAR_TOL {
        return Err(Error::DegenerateMetric(format!("{what} = {v}")));
    }
    Ok(())
}

// ---------------------------------------------------------------- inputs

/// Closed-form ingredients at a point; `conj` gives the formal conjugate.
#[derive(Clone)]
struct Vars {
    order: usize,
    q: Jet,
    qb: Jet,
    z: Jet,
    zb: Jet,
    b: Jet,
    bb: Jet,
    db: Jet,
    dbb: Jet,
    r2: Jet,
    k: Jet,
    k1: Jet,
    i: Complex64,
}

impl Vars {
    fn new(spec: &SolutionSpec, p: Point4, order: usize) -> Result<Vars> {
        let s = seed_coordinates(p, order)?;
        let (q, z) = Jet::complex_coordinates(p, order)?;
        let (qb, zb) = (q.conj(), z.conj());
        let db = spec.b.derivative();
        let kf = spec.k_fn();
        Ok(Vars {
            order,
            b: spec.b.to_jet(&z)?,
            bb: spec.b.to_jet_conj(&zb)?,
            db: db.to_jet(&z)?,
            dbb: db.to_jet_conj(&zb)?,
            r2: real_deriv_jet(&spec.r, &s[1], 2),
            k: real_deriv_jet(&kf, &s[1], 0),
            k1: real_deriv_jet(&kf, &s[1], 1),
            q,
            qb,
            z,
            zb,
            i: I,
        })
    }

    fn conj(&self) -> Vars {
        Vars {
            order: self.order,
            q: self.qb.clone(),
            qb: self.q.clone(),
            z: self.zb.clone(),
            zb: self.z.clone(),
            b: self.bb.clone(),
            bb: self.b.clone(),
            db: self.dbb.clone(),
            dbb: self.db.clone(),
            r2: self.r2.clone(),
            k: self.k.clone(),
            k1: self.k1.clone(),
            i: -self.i,
        }
    }

    fn p(&self) -> Jet {
        &self.q + &self.b
    }

    fn pb(&self) -> Jet {
        &self.qb + &self.bb
    }

    fn s(&self) -> Jet {
        &self.z + &self.zb
    }

    fn c(&self, v: f64) -> Jet {
        Jet::constant(v, self.order)
    }
}

/// f^(k)∘y as a jet.
fn real_deriv_jet(f: &RealFn1, y: &Jet, k: usize) -> Jet {
    let d: Vec<Complex64> = f.eval(y.value().re, y.order() + k)[k..].iter().map(|&v| Complex64::new(v, 0.0)).collect();
    y.compose_univariate(&d)
}

/// Wirtinger second derivatives of ψ; `conj` swaps barred and unbarred slots.
#[derive(Clone)]
struct PsiVars {
    q: Jet,
    qb: Jet,
    qq: Jet,
    qqb: Jet,
    qbqb: Jet,
    qz: Jet,
    qzb: Jet,
    qbz: Jet,
    qbzb: Jet,
    zzb: Jet,
}

impl PsiVars {
    fn new(psi: &Jet) -> Result<PsiVars> {
        use Wirt::*;
        let w = |word: &[Wirt]| psi.wd_word(word);
        Ok(PsiVars {
            q: w(&[Q])?,
            qb: w(&[Qbar])?,
            qq: w(&[Q, Q])?,
            qqb: w(&[Q, Qbar])?,
            qbqb: w(&[Qbar, Qbar])?,
            qz: w(&[Q, Z])?,
            qzb: w(&[Q, Zbar])?,
            qbz: w(&[Qbar, Z])?,
            qbzb: w(&[Qbar, Zbar])?,
            zzb: w(&[Z, Zbar])?,
        })
    }

    fn conj(&self) -> PsiVars {
        PsiVars {
            q: self.qb.clone(),
            qb: self.q.clone(),
            qq: self.qbqb.clone(),
            qqb: self.qqb.clone(),
            qbqb: self.qq.clone(),
            qz: self.qbzb.clone(),
            qzb: self.qbz.clone(),
            qbz: self.qzb.clone(),
            qbzb: self.qz.clone(),
            zzb: self.zzb.clone(),
        }
    }

    fn delta_minus(&self) -> Jet {
        &self.qq * &self.qbqb - &self.qqb * &self.qqb
    }

    fn delta_plus(&self) -> Jet {
        &self.qq * &self.qbqb + &self.qqb * &self.qqb
    }
}

// ---------------------------------------------------------------- metrics

/// Legendre-transformed metric built from the second derivatives of ψ.
pub fn metric_from_psi(spec: &SolutionSpec, p: Point4, order: usize) -> Result<MetricJet> {
    if order > 2 {
        return Err(Error::OrderOutOfRange(order));
    }
    let psi = psi_jet(spec, p, order + 2)?;
    metric_from_psi_jet(&psi, p)
}

/// As [`metric_from_psi`] for an arbitrary ψ jet; the metric has order ψ.order() − 2.
pub fn metric_from_psi_jet(psi: &Jet, p: Point4) -> Result<MetricJet> {
    if psi.order() < 2 {
        return Err(Error::PatternTooLong { len: 2, order: psi.order() });
    }
    let order = psi.order() - 2;
    let v = PsiVars::new(psi)?;
    let dm = v.delta_minus();
    if !(dm.value().norm() > DELTA_TOL) {
        return Err(Error::DegenerateMetric(format!("Δ₋ = {}", dm.value())));
    }
    let one = Jet::constant(1.0, order);
    let mut f = Quad::new(order);
    f.sq(&form1(order, &[(DQ, v.qqb.clone()), (DZ, v.qbz.clone())]), &v.qq);
    f.sq(&form1(order, &[(DQB, v.qqb.clone()), (DZB, v.qzb.clone())]), &v.qbqb);
    let dp = v.delta_plus();
    f.basis(DQ, DQB, &(&dp * &v.qqb));
    f.basis(DQ, DZB, &(&dp * &v.qzb));
    f.basis(DQB, DZ, &(&dp * &v.qbz));
    f.basis(DZ, DZB, &(&dp * &v.zzb));
    f.basis(DZ, DZB, &(&v.qqb * (&v.qzb * &v.qbz - &v.qqb * &v.zzb) * 2.0));
    let pre = -(one.checked_div(&dm)?);
    Ok(f.scaled(&pre).into_metric(p, order))
}

/// Closed-form metric of a solution family.
pub fn metric_closed(form: MetricForm, spec: &SolutionSpec, p: Point4, order: usize) -> Result<MetricJet> {
    if order > 2 {
        return Err(Error::OrderOutOfRange(order));
    }
    if !(p.z.re > 0.0) {
        return Err(Error::Domain(format!("Re z = {} must be positive", p.z.re)));
    }
    let v = Vars::new(spec, p, order)?;
    let q = match form {
        MetricForm::Metr1 => metr1(&v)?,
        MetricForm::Metr2 => metr2(&v)?,
        MetricForm::Metr3 => metr3(&v)?,
        MetricForm::Metric1 => metric1(&v)?,
        MetricForm::Metric2 => metric2(&v)?,
    };
    Ok(q.into_metric(p, order))
}

fn div(a: &Jet, b: &Jet, what: &str) -> Result<Jet> {
    nonzero(b, what)?;
    a.checked_div(b)
}

fn metr1(v: &Vars) -> Result<Quad> {
    let o = v.order;
    let (p, pb, s) = (v.p(), v.pb(), v.s());
    // the closed form is written in ρ = −r″
    let rho = -&v.r2;
    nonzero(&rho, "r''")?;
    let sum = &p + &pb;
    let d = &pb * (&p * &rho + 4.0) * 0.25;
    let db = &p * (&pb * &rho + 4.0) * 0.25;
    let b = -(&s * &s * &rho * (&p * &pb * &rho * &rho + &sum * &rho * 2.0 + 8.0)) / 32.0;
    let e = (&p * &p + &pb * &pb) * &rho * 0.25 + &sum;
    let a = &s * &rho * 0.25;
    let mut f = Quad::new(o);
    f.sq(&form1(o, &[(DQ, a.clone()), (DZ, v.c(1.0))]), &d);
    f.sq(&form1(o, &[(DQB, a.clone()), (DZB, v.c(1.0))]), &db);
    f.basis(DQ, DQB, &b);
    let x = div(&(&b * 4.0), &(&s * &rho), "(z+z̄)ρ")?;
    f.basis(DQ, DZB, &x);
    f.basis(DQB, DZ, &x);
    f.basis(DZ, DZB, &e);
    let den = &s * &s * (&sum * &rho + 4.0);
    Ok(f.scaled(&div(&v.c(-4.0), &den, "(z+z̄)²[(P+P̄)ρ+4]")?))
}

fn metr2(v: &Vars) -> Result<Quad> {
    let o = v.order;
    let (p, pb, s) = (v.p(), v.pb(), v.s());
    let rho = v.r2.clone();
    nonzero(&rho, "r''")?;
    let (z, zb) = (&v.z, &v.zb);
    let zz = z * zb;
    let sum = &p + &pb;
    let fct = -(&sum * &rho) + 4.0;
    nonzero(&fct, "4 − (P+P̄)r''")?;
    let z4b = zb * zb * zb * zb;
    let z4 = z * z * z * z;
    let d = &z4b * &pb * (&p * &rho - 4.0) * 0.25;
    let db = &z4 * &p * (&pb * &rho - 4.0) * 0.25;
    let b = -(&zz * &zz * &s * &s * &rho * (&p * &pb * &rho * &rho - &sum * &rho * 2.0 + 8.0)) / 32.0;
    let a1 = div(&(z * &s * &rho), &(zb * 4.0), "z̄")?;
    let a2 = div(&(zb * &s * &rho), &(z * 4.0), "z")?;
    let mut t = Quad::new(o);
    t.sq(&form1(o, &[(DQ, a1), (DZ, v.c(1.0))]), &d);
    t.sq(&form1(o, &[(DQB, a2), (DZB, v.c(1.0))]), &db);
    let t = t.scaled(&div(&v.c(4.0), &(&zz * &zz * &s * &s * &fct), "z²z̄²(z+z̄)²F")?);
    let mut u = Quad::new(o);
    let f1 = form1(o, &[(DQ, z * &s * &rho), (DZ, zb * 4.0)]);
    let f2 = form1(o, &[(DQB, zb * &s * &rho), (DZB, z * 4.0)]);
    let den = &zz * &zz * &zz * &s * &s * &s * &s * &rho * &rho * &fct;
    u.prod(&f1, &f2, &div(&(&b * 4.0), &den, "metr2 denominator")?);
    let mut w = Quad::new(o);
    w.basis(DZ, DZB, &div(&fct, &(&s * &s * &rho), "(z+z̄)²r''")?);
    Ok(t.add(u).add(w))
}

/// Ingredients of the third family: z − 2ik, z̄ + 2ik, V, W, W̄.
fn sol3_parts(v: &Vars) -> (Jet, Jet, Jet, Jet, Jet) {
    let zm = &v.z - &v.k * (v.i * 2.0);
    let zp = &v.zb + &v.k * (v.i * 2.0);
    let vv = v.s() * &v.k1 - &zm * &zp * &v.r2 * 0.25;
    let w = v.p() * &vv + &zm * &zp;
    let wb = v.pb() * &vv + &zm * &zp;
    (zm, zp, vv, w, wb)
}

fn metr3(v: &Vars) -> Result<Quad> {
    let o = v.order;
    let (p, pb, s) = (v.p(), v.pb(), v.s());
    let (zm, zp, vv, w, wb) = sol3_parts(v);
    let sum = &p + &pb;
    let mut f = Quad::new(o);
    f.sq(&form1(o, &[(DZ, &zp * &zp), (DQ, -(&s * &vv))]), &(&pb * &w));
    f.sq(&form1(o, &[(DZB, &zm * &zm), (DQB, -(&s * &vv))]), &(&p * &wb));
    let c = &w * &wb + &p * &pb * &vv * &vv;
    f.basis(DQ, DQB, &(-(&s * &s * &vv) * &c));
    f.basis(DQ, DZB, &(&s * &zm * &zm * &c));
    f.basis(DQB, DZ, &(&s * &zp * &zp * &c));
    f.basis(DZ, DZB, &(&sum * &zm * &zp * &c));
    let den = &s * &s * &zm * &zm * &zp * &zp * (&sum * &vv + &zm * &zp);
    let mut f = f.scaled(&div(&v.c(-1.0), &den, "metr3 denominator")?);
    let extra = div(&(&p * &pb * &vv * 2.0), &(&s * &s * &zm * &zp), "(z+z̄)²(z−2ik)(z̄+2ik)")?;
    f.basis(DZ, DZB, &extra);
    Ok(f)
}

fn metric1(v: &Vars) -> Result<Quad> {
    let o = v.order;
    let (p, pb, s) = (v.p(), v.pb(), v.s());
    let mut f = Quad::new(o);
    f.basis(DQ, DZB, &s);
    f.basis(DQB, DZ, &s);
    let a = form1(o, &[(DZB, p), (DZ, pb)]);
    let b = form1(o, &[(DZ, v.c(1.0)), (DZB, v.c(1.0))]);
    f.prod(&a, &b, &v.c(-1.0));
    Ok(f.scaled(&div(&v.c(1.0), &(&s * &s), "(z+z̄)²")?))
}

fn metric2(v: &Vars) -> Result<Quad> {
    let o = v.order;
    let (p, pb, s) = (v.p(), v.pb(), v.s());
    let (z, zb) = (&v.z, &v.zb);
    let (z2, zb2) = (z * z, zb * zb);
    let zzs = z * zb * &s;
    let mut f = Quad::new(o);
    let a = form1(o, &[(DZ, &pb * &zb2), (DZB, &p * &z2)]);
    let b = form1(o, &[(DZ, zb2.clone()), (DZB, z2.clone())]);
    f.prod(&a, &b, &v.c(1.0));
    f.basis(DQ, DZB, &(&zzs * &z2));
    f.basis(DQB, DZ, &(&zzs * &zb2));
    Ok(f.scaled(&div(&v.c(1.0), &(&zzs * &zzs), "[zz̄(z+z̄)]²")?))
}

// ---------------------------------------------------------------- co-frames

type Pair = (Form1, Form1);

/// Co-frame (l, m) and formal conjugates (l̄, m̄) in the real chart.
pub fn coframe(form: CoframeForm, spec: &SolutionSpec, p: Point4, order: usize) -> Result<CoframeJet> {
    if order > 2 {
        return Err(Error::OrderOutOfRange(order));
    }
    let ((l, m), (lb, mb)) = match form {
        CoframeForm::LegTetrad | CoframeForm::LegTetrad2 => {
            let psi = psi_jet(spec, p, order + 2)?;
            let v = PsiVars::new(&psi)?;
            let f = if form == CoframeForm::LegTetrad { legtetrad } else { legtetrad2 };
            (f(&v)?, f(&v.conj())?)
        }
        _ => {
            if !(p.z.re > 0.0) {
                return Err(Error::Domain(format!("Re z = {} must be positive", p.z.re)));
            }
            let v = Vars::new(spec, p, order)?;
            let f = match form {
                CoframeForm::Tetr1 => tetr1,
                CoframeForm::Tetr2 => tetr2,
                CoframeForm::Tetr3 => tetr3,
                CoframeForm::Frame2Sol1 => frame2sol1,
                _ => frame2sol2,
            };
            (f(&v)?, f(&v.conj())?)
        }
    };
    Ok(CoframeJet {
        point: p,
        order,
        l: to_real(&l),
        m: to_real(&m),
        lbar: to_real(&form_swap(lb)),
        mbar: to_real(&form_swap(mb)),
    })
}

/// Symmetrized l⊗l̄ − m⊗m̄ as a metric.
pub fn coframe_metric(c: &CoframeJet) -> MetricJet {
    let (l, m) = coframe_parts(c);
    MetricJet::from_fn(c.point, c.order, |a, b| &l.g[a][b] - &m.g[a][b])
}

fn coframe_parts(c: &CoframeJet) -> (MetricJet, MetricJet) {
    let sym = |u: &[Jet; 4], v: &[Jet; 4]| {
        MetricJet::from_fn(c.point, c.order, |a, b| (&u[a] * &v[b] + &v[a] * &u[b]) * 0.5)
    };
    (sym(&c.l, &c.lbar), sym(&c.m, &c.mbar))
}

/// Max deviation of l⊗l̄ − m⊗m̄ from g over components and Taylor
/// coefficients, relative to the largest coefficient among g, l⊗l̄, m⊗m̄
/// (at least 1). Near K = 0 the two products are large and cancel.
pub fn coframe_metric_check(c: &CoframeJet, g: &MetricJet) -> f64 {
    let (l, m) = coframe_parts(c);
    let scale = g.max_abs().max(l.max_abs()).max(m.max_abs()).max(1.0);
    let mut worst = 0.0f64;
    for a in 0..4 {
        for b in 0..4 {
            let d = &l.g[a][b] - &m.g[a][b] - &g.g[a][b];
            worst = worst.max(d.max_abs());
        }
    }
    worst / scale
}

fn legtetrad(v: &PsiVars) -> Result<Pair> {
    let o = v.q.order();
    let dm = v.delta_minus();
    let den = bsqrt(&-(&v.qqb * &dm), "−ψ_qq̄Δ₋")?;
    let l = form_scale(
        &form1(
            o,
            &[
                (DQ, &v.qqb * &v.qq),
                (DQB, &v.qqb * &v.qqb),
                (DZB, &v.qqb * &v.qzb),
                (DZ, &v.qq * &v.qbz),
            ],
        ),
        &den.recip()?,
    );
    let ratio = (-&dm).checked_div(&v.qqb)?;
    let mc = ((&v.q + &v.qb) * 0.5).exp() * bsqrt(&ratio, "−Δ₋/ψ_qq̄")?;
    Ok((l, form1(o, &[(DZ, mc)])))
}

fn legtetrad2(v: &PsiVars) -> Result<Pair> {
    let o = v.q.order();
    let dm = v.delta_minus();
    let k2 = &v.qz * (&v.qzb * &v.qbqb - &v.qqb * &v.qbzb) + &v.qbz * (&v.qq * &v.qbzb - &v.qqb * &v.qzb)
        - &v.zzb * &dm;
    let c1 = &v.qqb * &v.qbzb - &v.qbqb * &v.qzb;
    let dz = &v.qbz * (&v.qq * &v.qbzb - &v.qqb * &v.qzb) - &v.zzb * &dm;
    let l = form1(o, &[(DQ, &c1 * &v.qq), (DQB, &c1 * &v.qqb), (DZB, &c1 * &v.qzb), (DZ, dz)]);
    let l = form_scale(&l, &bpow(&(&dm * &k2), -0.5, "Δ₋K")?);
    let mc = v.q.exp() * bsqrt(&dm, "Δ₋")? * bpow(&k2, -0.5, "K")?;
    let m = form1(o, &[(DQ, v.qq.clone()), (DQB, v.qqb.clone()), (DZ, v.qz.clone()), (DZB, v.qzb.clone())]);
    Ok((l, form_scale(&m, &mc)))
}

fn tetr1(v: &Vars) -> Result<Pair> {
    let o = v.order;
    let (p, pb, s) = (v.p(), v.pb(), v.s());
    let rho = -&v.r2;
    if rho.value().norm() <= SINGULAR_TOL {
        return Err(Error::SingularCoframe("r'' = 0".into()));
    }
    let g = (&p + &pb) * &rho + 4.0;
    let den = &s * bsqrt(&(&rho * &g), "ρ[(P+P̄)ρ+4]")? * 4.0;
    let a = &s * &p * &rho * &rho;
    let c = &p * &rho * 4.0;
    let l = form1(
        o,
        &[(DQB, a.clone()), (DQ, -&a - &s * &rho * 4.0), (DZB, c.clone()), (DZ, -&c - 16.0)],
    );
    let l = form_scale(&l, &den.recip()?);
    let m = bsqrt(&g.checked_div(&rho)?, "[(P+P̄)ρ+4]/ρ")?.checked_div(&s)?;
    Ok((l, form1(o, &[(DZ, m)])))
}

fn tetr2(v: &Vars) -> Result<Pair> {
    let o = v.order;
    let (p, pb, s) = (v.p(), v.pb(), v.s());
    let rho = v.r2.clone();
    if rho.value().norm() <= SINGULAR_TOL {
        return Err(Error::SingularCoframe("r'' = 0".into()));
    }
    let (z, zb) = (&v.z, &v.zb);
    let g = (&p + &pb) * &rho - 4.0;
    // √(P̄/(Pρg)) written as √(PP̄ρg)/(Pρg) so the root has a real argument
    let prg = &p * &rho * &g;
    nonzero(&prg, "(q+b)r''[(P+P̄)r''−4]").map_err(|e| Error::SingularCoframe(e.to_string()))?;
    let pre = bsqrt(&(&pb * &prg), "PP̄r''[(P+P̄)r''−4]")?.checked_div(&(&prg * z * zb * &s * 4.0))?;
    let zzs = z * zb * &s * &rho;
    let prho = &p * &rho;
    let l = form1(
        o,
        &[
            (DQ, &zzs * (&prho - 4.0)),
            (DQB, -(&zzs * &prho)),
            (DZB, -(&prho * z * z * 4.0)),
            (DZ, &prho * zb * zb * 4.0 - zb * zb * 16.0),
        ],
    );
    let m = bsqrt(&g.checked_div(&rho)?, "[(P+P̄)r''−4]/r''")?.checked_div(&s)?;
    Ok((form_scale(&l, &pre), form1(o, &[(DZ, m)])))
}

fn tetr3(v: &Vars) -> Result<Pair> {
    let o = v.order;
    let (p, pb, s) = (v.p(), v.pb(), v.s());
    let (zm, zp, vv, _, wb) = sol3_parts(v);
    if vv.value().norm() <= SINGULAR_TOL {
        return Err(Error::SingularCoframe("V = 0".into()));
    }
    let g = (&p + &pb) * &vv + &zm * &zp;
    let den = &s * &zp * &zp * bsqrt(&(&vv * &g), "V[(P+P̄)V+(z−2ik)(z̄+2ik)]")?;
    let l = form1(
        o,
        &[
            (DQB, &s * &vv * &wb),
            (DQ, -(&s * &vv * &vv * &pb)),
            (DZ, &pb * &zp * &zp * &vv),
            (DZB, -(&zm * &zm * &wb)),
        ],
    );
    let m = bsqrt(&g.checked_div(&vv)?, "[(P+P̄)V+(z−2ik)(z̄+2ik)]/V")?.checked_div(&s)?;
    Ok((form_scale(&l, &den.recip()?), form1(o, &[(DZ, m)])))
}

fn frame2sol1(v: &Vars) -> Result<Pair> {
    let o = v.order;
    let (p, s) = (v.p(), v.s());
    let c = bpow(&s, -1.5, "z+z̄")? * bpow(&-(&v.db + &v.dbb), -0.5, "−(b′+b̄′)")?;
    let l = form1(o, &[(DQ, s.clone()), (DZ, -(&s * &v.dbb) - &p), (DZB, -&p)]);
    let m = form1(o, &[(DQ, -&s), (DZ, &p - &s * &v.db), (DZB, p.clone())]);
    Ok((form_scale(&l, &c), form_scale(&m, &c)))
}

fn frame2sol2(v: &Vars) -> Result<Pair> {
    let o = v.order;
    let (p, pb, s) = (v.p(), v.pb(), v.s());
    let (z, zb) = (&v.z, &v.zb);
    let (z2, zb2) = (z * z, zb * zb);
    let k = (z * &p + zb * &pb) * 2.0 - (&z2 * &v.db + &zb2 * &v.dbb);
    let kinv = bpow(&k, -0.5, "K")?;
    let cl = bpow(z, -0.5, "z")? * bpow(&(zb * &s), -1.5, "z̄(z+z̄)")? * &kinv;
    let l = form1(
        o,
        &[
            (DZ, &p * z * &zb2 + zb * &s * (zb * &pb * 2.0 - &zb2 * &v.dbb)),
            (DZB, &p * z * &z2),
            (DQ, zb * &s * &z2),
        ],
    );
    let cm = bsqrt(zb, "z̄")? * bpow(&(z * &s), -1.5, "z(z+z̄)")? * &kinv;
    let zzs = z * zb * &s;
    let m = form1(
        o,
        &[
            (DZ, &p * (z * 2.0 + zb) * zb - &zzs * &v.db),
            (DZB, -(&p * &z2)),
            (DQ, -zzs),
        ],
    );
    Ok((form_scale(&l, &cl), form_scale(&m, &cm)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::HoloFn;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn metric1_hand_value() {
        // b = 0, q = 1, z = 1: ¼[2(dq dz̄ + dq̄ dz) − (dz + dz̄)²]
        let spec = SolutionSpec::special1(HoloFn::constant(c(0.0, 0.0)), 0.5, 0.0);
        let g = metric_closed(MetricForm::Metric1, &spec, Point4::new(c(1.0, 0.0), c(1.0, 0.0)), 0).unwrap();
        let v = g.value();
        // dq dz̄ + dq̄ dz = 2(dx₁dx₃ + dx₂dx₄); (dz + dz̄)² = 4dx₃²
        let want = Matrix4::new(
            0.0, 0.0, 0.5, 0.0, //
            0.0, 0.0, 0.0, 0.5, //
            0.5, 0.0, -1.0, 0.0, //
            0.0, 0.5, 0.0, 0.0,
        );
        assert!((v - want).abs().max() < 1e-15, "{v}");
        assert_eq!(g.signature(), (2, 2));
    }

    #[test]
    fn branch_power_on_negative_axis() {
        let j = Jet::constant(-4.0, 1);
        let r = bsqrt(&j, "x").unwrap();
        assert!((r.value() - c(0.0, 2.0)).norm() < 1e-15);
        assert!(matches!(bsqrt(&Jet::zero(1), "x"), Err(Error::SingularCoframe(_))));
    }

    #[test]
    fn zero_coframe_and_zero_metric() {
        let p = Point4::new(c(1.0, 0.0), c(1.0, 0.0));
        let z: [Jet; 4] = std::array::from_fn(|_| Jet::zero(1));
        let cf = CoframeJet { point: p, order: 1, l: z.clone(), m: z.clone(), lbar: z.clone(), mbar: z.clone() };
        let g = MetricJet::from_fn(p, 1, |_, _| Jet::zero(1));
        assert_eq!(coframe_metric_check(&cf, &g), 0.0);
    }
}
