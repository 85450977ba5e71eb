//! Sampled-rank test for point symmetries of the Legendre-transformed equation.
//!
//! A generator X = ξ^q∂_q + ξ^q̄∂_q̄ + ξ^z∂_z + ξ^z̄∂_z̄ + η∂_ψ leaves the graph
//! ψ = f invariant iff its characteristic Q = ξ·∇f − η vanishes identically.
//! Q is linear in the generator's parameters, so sampling it at many points
//! gives a linear system whose kernel holds every invariance direction.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::Point4;
use crate::sampling::SampleBox;
use crate::solutions::{psi_jet, SolutionSpec};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub const KERNEL_TOL: f64 = 1e-8;
pub const FLOW_EPS: f64 = 1e-3;
pub const FLOW_TOL: f64 = 1e-7;
pub const DEGREES: [usize; 3] = [4, 6, 8];

pub const CAVEAT: &str = "only the point symmetries of the Legendre-transformed equation are tested; \
higher-order or non-local symmetries are outside the scope of the rank test";

/// Polynomial truncation of a(z), c(z), d(z) in the shifted variable s = (z − center)/scale.
///
/// Parameter layout: C₁, C₂, then (Re, Im) pairs of a₀..a_D, c₀..c_D, d₀..d_D with
/// Im d₀ omitted (d = iγ gives the zero generator once its conjugate is added).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorBasis {
    pub degree: usize,
    pub center: Complex64,
    pub scale: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    C1,
    C2,
    A(usize, bool),
    C(usize, bool),
    D(usize, bool),
}

impl GeneratorBasis {
    pub fn new(degree: usize) -> Self {
        Self::for_box(degree, &SampleBox::default())
    }

    pub fn for_box(degree: usize, b: &SampleBox) -> Self {
        let center = Complex64::new(0.5 * (b.re_z[0] + b.re_z[1]), 0.5 * (b.im_z[0] + b.im_z[1]));
        let scale = 0.5 * (b.re_z[1] - b.re_z[0]).max(b.im_z[1] - b.im_z[0]);
        GeneratorBasis { degree, center, scale }
    }

    pub fn dimension(&self) -> usize {
        1 + 6 * (self.degree + 1)
    }

    fn slots(&self) -> Vec<Slot> {
        let n = self.degree + 1;
        let mut out = vec![Slot::C1, Slot::C2];
        for k in 0..n {
            out.extend([Slot::A(k, false), Slot::A(k, true)]);
        }
        for k in 0..n {
            out.extend([Slot::C(k, false), Slot::C(k, true)]);
        }
        out.push(Slot::D(0, false));
        for k in 1..n {
            out.extend([Slot::D(k, false), Slot::D(k, true)]);
        }
        out
    }

    pub fn labels(&self) -> Vec<String> {
        self.slots()
            .into_iter()
            .map(|s| match s {
                Slot::C1 => "C1".to_string(),
                Slot::C2 => "C2".to_string(),
                Slot::A(k, im) => format!("{}(a{k})", if im { "Im" } else { "Re" }),
                Slot::C(k, im) => format!("{}(c{k})", if im { "Im" } else { "Re" }),
                Slot::D(k, im) => format!("{}(d{k})", if im { "Im" } else { "Re" }),
            })
            .collect()
    }

    /// Coordinates of `theta` in a basis of higher (or equal) degree with the same shift.
    pub fn embed(&self, theta: &[f64], target: &GeneratorBasis) -> Result<Vec<f64>> {
        if target.degree < self.degree || target.center != self.center || target.scale != self.scale {
            return Err(Error::Precondition("embedding needs a larger basis with the same shift".into()));
        }
        let dst = target.slots();
        let mut out = vec![0.0; dst.len()];
        for (s, &t) in self.slots().iter().zip(theta) {
            let j = dst.iter().position(|d| d == s).unwrap();
            out[j] = t;
        }
        Ok(out)
    }

    pub fn generator(&self, theta: &[f64]) -> Result<Generator> {
        if theta.len() != self.dimension() {
            return Err(Error::Precondition(format!(
                "{} parameters for a basis of dimension {}",
                theta.len(),
                self.dimension()
            )));
        }
        let n = self.degree + 1;
        let mut g = Generator {
            c1: 0.0,
            c2: 0.0,
            a: vec![Complex64::new(0.0, 0.0); n],
            c: vec![Complex64::new(0.0, 0.0); n],
            d: vec![Complex64::new(0.0, 0.0); n],
            basis: *self,
        };
        for (s, &t) in self.slots().iter().zip(theta) {
            let part = |im: bool| if im { Complex64::new(0.0, t) } else { Complex64::new(t, 0.0) };
            match *s {
                Slot::C1 => g.c1 = t,
                Slot::C2 => g.c2 = t,
                Slot::A(k, im) => g.a[k] += part(im),
                Slot::C(k, im) => g.c[k] += part(im),
                Slot::D(k, im) => g.d[k] += part(im),
            }
        }
        Ok(g)
    }

    fn powers(&self, z: Complex64) -> (Vec<Complex64>, Vec<Complex64>) {
        let s = (z - self.center) / self.scale;
        let mut p = vec![Complex64::new(1.0, 0.0); self.degree + 1];
        for k in 1..=self.degree {
            p[k] = p[k - 1] * s;
        }
        // d/dz s^k = k s^(k−1) / scale
        let dp = (0..=self.degree)
            .map(|k| if k == 0 { Complex64::new(0.0, 0.0) } else { p[k - 1] * (k as f64 / self.scale) })
            .collect();
        (p, dp)
    }
}

/// A concrete element of the symmetry algebra (combination with its conjugate generators).
#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub c1: f64,
    pub c2: f64,
    pub a: Vec<Complex64>,
    pub c: Vec<Complex64>,
    pub d: Vec<Complex64>,
    pub basis: GeneratorBasis,
}

fn poly(coef: &[Complex64], p: &[Complex64]) -> Complex64 {
    coef.iter().zip(p).map(|(c, x)| c * x).sum()
}

impl Generator {
    /// (ξ^q, ξ^z, η) at (q, z, ψ); ξ^q̄, ξ^z̄ are the conjugates.
    pub fn velocity(&self, q: Complex64, z: Complex64, psi: Complex64) -> (Complex64, Complex64, Complex64) {
        let (p, dp) = self.basis.powers(z);
        let a = poly(&self.a, &p);
        let da = poly(&self.a, &dp);
        let c = poly(&self.c, &p);
        let d = poly(&self.d, &p);
        let xq = q * self.c1 + c;
        let eta = (q + q.conj() + psi) * self.c1 + (q - q.conj()) * self.c2 - 2.0 * (da * q).re + 2.0 * d.re;
        (xq, a, eta)
    }

    /// Q = ξ·∇f − η at p.
    pub fn characteristic(&self, spec: &SolutionSpec, p: Point4) -> Result<Complex64> {
        let f = psi_jet(spec, p, 1)?;
        let (xq, xz, eta) = self.velocity(p.q, p.z, f.value());
        Ok(xq * f.wirt("q")? + xq.conj() * f.wirt("q̄")? + xz * f.wirt("z")? + xz.conj() * f.wirt("z̄")? - eta)
    }
}

/// Characteristic of each basis parameter at p, as complex numbers.
///
/// Every column is real for a real ψ except C₂'s, which is −(q − q̄) = −2i Im q.
pub fn invariance_row(spec: &SolutionSpec, p: Point4, basis: &GeneratorBasis) -> Result<Vec<Complex64>> {
    let f = psi_jet(spec, p, 1)?;
    let fv = f.value();
    let (fq, fqb, fz, fzb) = (f.wirt("q")?, f.wirt("q̄")?, f.wirt("z")?, f.wirt("z̄")?);
    let (q, qb) = (p.q, p.q.conj());
    let (pw, dpw) = basis.powers(p.z);
    let (pwb, dpwb): (Vec<_>, Vec<_>) = (pw.iter().map(|x| x.conj()).collect(), dpw.iter().map(|x| x.conj()).collect());
    // a term φ from X and its partner φ̄' from the conjugate generator:
    // Re part of the coefficient multiplies φ + φ̄', Im part multiplies i(φ − φ̄').
    let pair = |phi: Complex64, phib: Complex64, im: bool| if im { I * (phi - phib) } else { phi + phib };
    Ok(basis
        .slots()
        .into_iter()
        .map(|s| match s {
            Slot::C1 => q * fq + qb * fqb - (q + qb + fv),
            Slot::C2 => -(q - qb),
            Slot::A(k, im) => pair(pw[k] * fz + dpw[k] * q, pwb[k] * fzb + dpwb[k] * qb, im),
            Slot::C(k, im) => pair(pw[k] * fq, pwb[k] * fqb, im),
            Slot::D(k, im) => pair(-pw[k], -pwb[k], im),
        })
        .collect())
}

/// Real system: for every point, the real row above the imaginary row.
pub fn assemble(spec: &SolutionSpec, points: &[Point4], basis: &GeneratorBasis) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<Complex64>> = points.par_iter().map(|&p| invariance_row(spec, p, basis)).collect::<Result<_>>()?;
    let n = basis.dimension();
    Ok(DMatrix::from_fn(2 * rows.len(), n, |i, j| {
        let v = rows[i / 2][j];
        if i % 2 == 0 {
            v.re
        } else {
            v.im
        }
    }))
}

/// Singular values (descending) and kernel vectors of `m` with its columns
/// normalised first; kernel vectors are returned in the original parameters.
pub fn kernel(m: &DMatrix<f64>, tol: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let norms: Vec<f64> = m.column_iter().map(|c| c.norm()).map(|n| if n > 0.0 { n } else { 1.0 }).collect();
    let mut a = m.clone();
    for (j, mut col) in a.column_iter_mut().enumerate() {
        col /= norms[j];
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let smax = sv.first().copied().unwrap_or(0.0);
    let mut ker = Vec::new();
    for &i in &order {
        if svd.singular_values[i] < tol * smax {
            let mut v: Vec<f64> = (0..m.ncols()).map(|j| vt[(i, j)] / norms[j]).collect();
            let big = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
            v.iter_mut().for_each(|x| *x /= big);
            ker.push(v);
        }
    }
    // a zero column makes the SVD short when rows < cols; never the case here (rows ≥ 6·cols)
    (sv, ker)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Noninvariant,
    InvariantDirectionFound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub degree: usize,
    pub dimension: usize,
    pub n_points: usize,
    pub seed: u64,
    pub tol: f64,
    pub singular_values: Vec<f64>,
    pub kernel_dim: usize,
    pub verdict: Verdict,
    pub labels: Vec<String>,
    pub witness: Vec<Vec<f64>>,
    /// smallest singular value above the threshold, relative to the largest
    pub gap: f64,
}

/// Kernel of the sampled invariance system.
pub fn kernel_rank(
    spec: &SolutionSpec,
    n_points: usize,
    basis: &GeneratorBasis,
    seed: u64,
    sample: &SampleBox,
) -> Result<KernelReport> {
    let need = 3 * basis.dimension();
    if n_points < need {
        return Err(Error::InsufficientSampling { got: n_points, need });
    }
    spec.validate()?;
    sample.validate()?;
    let pts = sample.halton_points(n_points, seed);
    let m = assemble(spec, &pts, basis)?;
    let (sv, witness) = kernel(&m, KERNEL_TOL);
    let smax = sv[0];
    let gap = sv.iter().rev().find(|&&s| s >= KERNEL_TOL * smax).map_or(0.0, |s| s / smax);
    Ok(KernelReport {
        degree: basis.degree,
        dimension: basis.dimension(),
        n_points,
        seed,
        tol: KERNEL_TOL,
        kernel_dim: witness.len(),
        verdict: if witness.is_empty() { Verdict::Noninvariant } else { Verdict::InvariantDirectionFound },
        labels: basis.labels(),
        singular_values: sv,
        witness,
        gap,
    })
}

/// Flows (q, z, ψ = f) along the generator for time `eps` (RK4, `steps` steps).
pub fn flow(g: &Generator, p: Point4, psi: Complex64, eps: f64, steps: usize) -> (Point4, Complex64) {
    let (mut q, mut z, mut w) = (p.q, p.z, psi);
    let h = eps / steps as f64;
    for _ in 0..steps {
        let k1 = g.velocity(q, z, w);
        let k2 = g.velocity(q + k1.0 * (h / 2.0), z + k1.1 * (h / 2.0), w + k1.2 * (h / 2.0));
        let k3 = g.velocity(q + k2.0 * (h / 2.0), z + k2.1 * (h / 2.0), w + k2.2 * (h / 2.0));
        let k4 = g.velocity(q + k3.0 * h, z + k3.1 * h, w + k3.2 * h);
        q += (k1.0 + k2.0 * 2.0 + k3.0 * 2.0 + k4.0) * (h / 6.0);
        z += (k1.1 + k2.1 * 2.0 + k3.1 * 2.0 + k4.1) * (h / 6.0);
        w += (k1.2 + k2.2 * 2.0 + k3.2 * 2.0 + k4.2) * (h / 6.0);
    }
    (Point4::new(q, z), w)
}

/// max |f(flowed point) − flowed ψ| over `points`: how far the flow moves the graph.
pub fn flow_defect(spec: &SolutionSpec, g: &Generator, points: &[Point4], eps: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for &p in points {
        let f0 = psi_jet(spec, p, 0)?.value();
        let (p1, w1) = flow(g, p, f0, eps, 8);
        let f1 = psi_jet(spec, p1, 0)?.value();
        worst = worst.max((f1 - w1).norm());
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub reports: Vec<KernelReport>,
    /// worst flow defect over all witnesses (ε = FLOW_EPS), when any
    pub witness_flow_defect: Option<f64>,
    pub witnesses_verified: bool,
    pub caveat: String,
}

/// Points per degree: four times the basis dimension.
pub fn default_points(basis: &GeneratorBasis) -> usize {
    4 * basis.dimension()
}

/// Kernel test at every degree of `DEGREES`; invariant iff some degree has a kernel.
pub fn classify(spec: &SolutionSpec) -> Result<Classification> {
    classify_with(spec, &SampleBox::default(), 0, &DEGREES, None)
}

/// As [`classify`]; `n_points` fixes the sample size at every degree
/// (default: [`default_points`]).
pub fn classify_with(
    spec: &SolutionSpec,
    sample: &SampleBox,
    seed: u64,
    degrees: &[usize],
    n_points: Option<usize>,
) -> Result<Classification> {
    let mut reports = Vec::new();
    let mut defect: Option<f64> = None;
    let check_pts = sample.halton_points(20, seed + 10_000);
    for &deg in degrees {
        let basis = GeneratorBasis::for_box(deg, sample);
        let rep = kernel_rank(spec, n_points.unwrap_or_else(|| default_points(&basis)), &basis, seed, sample)?;
        for w in &rep.witness {
            let d = flow_defect(spec, &basis.generator(w)?, &check_pts, FLOW_EPS)?;
            defect = Some(defect.map_or(d, |x| x.max(d)));
        }
        reports.push(rep);
    }
    let invariant = reports.iter().any(|r| r.kernel_dim > 0);
    Ok(Classification {
        verdict: if invariant { Verdict::InvariantDirectionFound } else { Verdict::Noninvariant },
        witnesses_verified: defect.map_or(true, |d| d <= FLOW_TOL),
        witness_flow_defect: defect,
        reports,
        caveat: CAVEAT.to_string(),
    })
}
