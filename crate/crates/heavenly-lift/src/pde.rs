//! Residuals of the equations, all computed from jets.
//!
//! In the (z₁, z₂) and (ζ₁, z₂) charts the first complex variable occupies the
//! q-slots (x₁, x₂) and the second the z-slots (x₃, x₄), so u₁₂̄ is `wirt("qz̄")`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jets::{Jet, Wirt};

/// A residual with the magnitude of its largest constituent term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Residual {
    pub value: Complex64,
    pub scale: f64,
}

impl Residual {
    pub fn new(value: Complex64, terms: &[Complex64]) -> Residual {
        let scale = terms.iter().fold(0.0f64, |m, t| m.max(t.norm()));
        Residual { value, scale }
    }

    /// |value| / max(scale, 1)
    pub fn relative(&self) -> f64 {
        self.value.norm() / self.scale.max(1.0)
    }
}

fn d(j: &Jet, w: &[Wirt]) -> Result<Complex64> {
    j.wirtinger(w)
}

use Wirt::{Q, Qbar as QB, Z, Zbar as ZB};

/// u₁₁̄u₂₂̄ − u₁₂̄u₂₁̄ + 1
pub fn residual_hcma(u: &Jet) -> Result<Residual> {
    let t1 = d(u, &[Q, QB])? * d(u, &[Z, ZB])?;
    let t2 = d(u, &[Q, ZB])? * d(u, &[Z, QB])?;
    let one = Complex64::new(1.0, 0.0);
    Ok(Residual::new(t1 - t2 + one, &[t1, t2, one]))
}

/// u_{ζζ̄}u₂₂̄ − u_{ζ2̄}u_{2ζ̄} + e^{ζ+ζ̄}, for a jet based at ζ₁ = `zeta`.
pub fn residual_zeta(u: &Jet, zeta: Complex64) -> Result<Residual> {
    let t1 = d(u, &[Q, QB])? * d(u, &[Z, ZB])?;
    let t2 = d(u, &[Q, ZB])? * d(u, &[Z, QB])?;
    let e = Complex64::new((2.0 * zeta.re).exp(), 0.0);
    Ok(Residual::new(t1 - t2 + e, &[t1, t2, e]))
}

/// Same residual from a Wirtinger Hessian in the order (ζ₁, ζ̄₁, z, z̄).
pub fn residual_zeta_hessian(h: &[[Complex64; 4]; 4], zeta: Complex64) -> Residual {
    let t1 = h[0][1] * h[2][3];
    let t2 = h[0][3] * h[2][1];
    let e = Complex64::new((2.0 * zeta.re).exp(), 0.0);
    Residual::new(t1 - t2 + e, &[t1, t2, e])
}

/// ψ_{qq̄}ψ_{zz̄} − ψ_{qz̄}ψ_{q̄z} − e^{ψ_q+ψ_q̄}(ψ_{qq̄}² − ψ_{qq}ψ_{q̄q̄})
pub fn residual_leghcma(psi: &Jet) -> Result<Residual> {
    let e = (d(psi, &[Q])? + d(psi, &[QB])?).exp();
    let pqb = d(psi, &[Q, QB])?;
    let t1 = pqb * d(psi, &[Z, ZB])?;
    let t2 = d(psi, &[Q, ZB])? * d(psi, &[QB, Z])?;
    let t3 = e * pqb * pqb;
    let t4 = e * d(psi, &[Q, Q])? * d(psi, &[QB, QB])?;
    Ok(Residual::new(t1 - t2 - t3 + t4, &[t1, t2, t3, t4]))
}

/// ψ_{zz̄} − e^{ψ_x}ψ_{xx}
pub fn residual_bf(psi: &Jet) -> Result<Residual> {
    let psi_x = d(psi, &[Q])? + d(psi, &[QB])?;
    let psi_xx = d(psi, &[Q, Q])? + 2.0 * d(psi, &[Q, QB])? + d(psi, &[QB, QB])?;
    let t1 = d(psi, &[Z, ZB])?;
    let t2 = psi_x.exp() * psi_xx;
    Ok(Residual::new(t1 - t2, &[t1, t2]))
}

/// v_{zz̄} − (e^v)_{xx} for v in the chart (x, y, Re z, Im z).
pub fn residual_bf_v(v: &Jet) -> Result<Residual> {
    if v.order() < 2 {
        return Err(Error::PatternTooLong { len: 2, order: v.order() });
    }
    let t1 = d(v, &[Z, ZB])?;
    let t2 = v.exp().derivative([2, 0, 0, 0]);
    Ok(Residual::new(t1 - t2, &[t1, t2]))
}

fn lambda(alpha: f64) -> Complex64 {
    Complex64::from_polar(1.0, alpha)
}

/// The two constraints e^{ψ_q̄}(ψ_{q̄q̄}+ψ_{qq̄}) − λψ_{qz̄} and
/// λe^{ψ_q}(ψ_{qq}+ψ_{qq̄}) − ψ_{q̄z}, λ = e^{iα}.
pub fn residual_legrot(psi: &Jet, alpha: f64) -> Result<[Residual; 2]> {
    let l = lambda(alpha);
    let pqb = d(psi, &[Q, QB])?;
    let a1 = d(psi, &[QB])?.exp() * (d(psi, &[QB, QB])? + pqb);
    let b1 = l * d(psi, &[Q, ZB])?;
    let a2 = l * d(psi, &[Q])?.exp() * (d(psi, &[Q, Q])? + pqb);
    let b2 = d(psi, &[QB, Z])?;
    Ok([Residual::new(a1 - b1, &[a1, b1]), Residual::new(a2 - b2, &[a2, b2])])
}

/// Both sides of the identity ψ_{qq̄}·BF = L − (A/λ)R₂ − C·R₁ + R₁R₂/λ, where L is
/// the Legendre-HCMA residual, R₁, R₂ the constraint residuals,
/// A = e^{ψ_q̄}(ψ_{q̄q̄}+ψ_{qq̄}) and C = e^{ψ_q}(ψ_{qq}+ψ_{qq̄}). Holds for any ψ.
pub fn bf_identity_sides(psi: &Jet, alpha: f64) -> Result<(Complex64, Complex64)> {
    let l = lambda(alpha);
    let pqb = d(psi, &[Q, QB])?;
    let a = d(psi, &[QB])?.exp() * (d(psi, &[QB, QB])? + pqb);
    let c = d(psi, &[Q])?.exp() * (d(psi, &[Q, Q])? + pqb);
    let bf = residual_bf(psi)?.value;
    let leg = residual_leghcma(psi)?.value;
    let [r1, r2] = residual_legrot(psi, alpha)?;
    let (r1, r2) = (r1.value, r2.value);
    Ok((pqb * bf, leg - a / l * r2 - c * r1 + r1 * r2 / l))
}

/// ∂_z̄(RHS₁) − ∂_z(RHS₂) for ω_z = ψ_z − 2λe^{(ψ_x+ω_x)/2},
/// ω_z̄ = −ψ_z̄ + 2λ⁻¹e^{(ψ_x−ω_x)/2}, ω_x = −iψ_y.
///
/// The exponents are complex in general (ω_x is imaginary for real ψ), so they
/// are exponentiated as complex jets.
pub fn backlund_compatibility(psi: &Jet, alpha: f64) -> Result<Residual> {
    if psi.order() < 2 {
        return Err(Error::PatternTooLong { len: 2, order: psi.order() });
    }
    let worst = residual_legrot(psi, alpha)?.iter().fold(0.0f64, |m, r| m.max(r.relative()));
    if worst > 1e-8 {
        return Err(Error::Precondition(format!("constraint residual {worst:e} exceeds 1e-8")));
    }
    backlund_compatibility_unchecked(psi, alpha)
}

/// [`backlund_compatibility`] without the constraint precondition.
pub fn backlund_compatibility_unchecked(psi: &Jet, alpha: f64) -> Result<Residual> {
    if psi.order() < 2 {
        return Err(Error::PatternTooLong { len: 2, order: psi.order() });
    }
    let l = lambda(alpha);
    let psi_x = psi.partial(0);
    let omega_x = psi.partial(1) * Complex64::new(0.0, -1.0);
    let e1 = ((&psi_x + &omega_x) * 0.5).exp() * (2.0 * l);
    let e2 = ((&psi_x - &omega_x) * 0.5).exp() * (2.0 / l);
    let pz = psi.wd(Z);
    let pzb = psi.wd(ZB);
    let t1 = pz.wd(ZB).value();
    let t2 = e1.wd(ZB).value();
    let t3 = -pzb.wd(Z).value();
    let t4 = e2.wd(Z).value();
    Ok(Residual::new((t1 - t2) - (t3 + t4), &[t1, t2, t3, t4]))
}

/// ω_{zz̄} − e^{ψ_x}ω_{xx}
pub fn residual_omeg(psi: &Jet, omega: &Jet) -> Result<Residual> {
    if omega.order() < 2 {
        return Err(Error::PatternTooLong { len: 2, order: omega.order() });
    }
    let psi_x = d(psi, &[Q])? + d(psi, &[QB])?;
    let t1 = d(omega, &[Z, ZB])?;
    let t2 = psi_x.exp() * omega.derivative([2, 0, 0, 0]);
    Ok(Residual::new(t1 - t2, &[t1, t2]))
}

/// u₂₂̄φ₁₁̄ + u₁₁̄φ₂₂̄ − u₂₁̄φ₁₂̄ − u₁₂̄φ₂₁̄
pub fn box_apply(u: &Jet, phi: &Jet) -> Result<Residual> {
    let t1 = d(u, &[Z, ZB])? * d(phi, &[Q, QB])?;
    let t2 = d(u, &[Q, QB])? * d(phi, &[Z, ZB])?;
    let t3 = d(u, &[Z, QB])? * d(phi, &[Q, ZB])?;
    let t4 = d(u, &[Q, ZB])? * d(phi, &[Z, QB])?;
    Ok(Residual::new(t1 + t2 - t3 - t4, &[t1, t2, t3, t4]))
}
