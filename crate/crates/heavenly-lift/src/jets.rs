//! Truncated multivariate Taylor jets in the real chart
//! (x1, x2, x3, x4) = (Re q, Im q, Re z, Im z) with complex coefficients.
//!
//! A jet of order n stores c_α = ∂^α f / α! for all |α| ≤ n. Monomials are
//! laid out by total degree, so a lower-order jet is a prefix of a higher one.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const NVARS: usize = 4;
pub const MAX_ORDER: usize = 4;

const LEN: [usize; MAX_ORDER + 1] = [1, 5, 15, 35, 70];
const NONE: u16 = u16::MAX;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Point in the complex chart; conjugates are always exact.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Point4 {
    pub q: Complex64,
    pub z: Complex64,
}

impl Point4 {
    pub fn new(q: Complex64, z: Complex64) -> Self {
        Point4 { q, z }
    }

    pub fn from_coords(x: [f64; 4]) -> Self {
        Point4 { q: Complex64::new(x[0], x[1]), z: Complex64::new(x[2], x[3]) }
    }

    pub fn coords(&self) -> [f64; 4] {
        [self.q.re, self.q.im, self.z.re, self.z.im]
    }

    /// x = (q + q̄)/2
    pub fn x(&self) -> f64 {
        self.q.re
    }

    /// y = i(q̄ − q)/2
    pub fn y(&self) -> f64 {
        self.q.im
    }
}

struct Tables {
    monos: Vec<[u8; 4]>,
    degree: Vec<usize>,
    index: Vec<u16>,
    // (i, j, k): c_k += a_i b_j, sorted by deg(k)
    mul: Vec<(u16, u16, u16)>,
    mul_len: [usize; MAX_ORDER + 1],
    fact: Vec<f64>,
}

fn dense(a: [u8; 4]) -> usize {
    ((a[0] as usize * 5 + a[1] as usize) * 5 + a[2] as usize) * 5 + a[3] as usize
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let mut monos = Vec::new();
        for d in 0..=MAX_ORDER as u8 {
            for a0 in (0..=d).rev() {
                for a1 in (0..=d - a0).rev() {
                    for a2 in (0..=d - a0 - a1).rev() {
                        monos.push([a0, a1, a2, d - a0 - a1 - a2]);
                    }
                }
            }
        }
        let mut index = vec![NONE; 625];
        for (k, m) in monos.iter().enumerate() {
            index[dense(*m)] = k as u16;
        }
        let degree: Vec<usize> = monos.iter().map(|m| m.iter().map(|&a| a as usize).sum()).collect();
        let mut mul = Vec::new();
        for i in 0..monos.len() {
            for j in 0..monos.len() {
                if degree[i] + degree[j] <= MAX_ORDER {
                    let s = [
                        monos[i][0] + monos[j][0],
                        monos[i][1] + monos[j][1],
                        monos[i][2] + monos[j][2],
                        monos[i][3] + monos[j][3],
                    ];
                    mul.push((i as u16, j as u16, index[dense(s)]));
                }
            }
        }
        mul.sort_by_key(|&(_, _, k)| degree[k as usize]);
        let mut mul_len = [0; MAX_ORDER + 1];
        for (n, len) in mul_len.iter_mut().enumerate() {
            *len = mul.iter().filter(|&&(_, _, k)| degree[k as usize] <= n).count();
        }
        let f = |a: u8| (1..=a as u64).product::<u64>() as f64;
        let fact = monos.iter().map(|m| m.iter().map(|&a| f(a)).product()).collect();
        Tables { monos, degree, index, mul, mul_len, fact }
    })
}

fn mono_index(alpha: [usize; 4]) -> Option<usize> {
    if alpha.iter().sum::<usize>() > MAX_ORDER {
        return None;
    }
    let a = [alpha[0] as u8, alpha[1] as u8, alpha[2] as u8, alpha[3] as u8];
    match tables().index[dense(a)] {
        NONE => None,
        k => Some(k as usize),
    }
}

/// Number of coefficients of a jet of the given order.
pub fn jet_len(order: usize) -> usize {
    LEN[order]
}

/// Multi-indices in storage order, up to the given order.
pub fn multi_indices(order: usize) -> impl Iterator<Item = [usize; 4]> {
    tables().monos[..LEN[order]]
        .iter()
        .map(|m| [m[0] as usize, m[1] as usize, m[2] as usize, m[3] as usize])
}

/// Wirtinger derivative directions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Wirt {
    Q,
    Qbar,
    Z,
    Zbar,
}

impl Wirt {
    pub fn conj(self) -> Wirt {
        match self {
            Wirt::Q => Wirt::Qbar,
            Wirt::Qbar => Wirt::Q,
            Wirt::Z => Wirt::Zbar,
            Wirt::Zbar => Wirt::Z,
        }
    }
}

/// A derivative word such as "qq̄" or "qZ"; accepted spellings for the barred
/// variables are `q̄`, `qb` and `Q` (likewise for z).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern(pub Vec<Wirt>);

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let (base, bar) = match chars[i] {
                'q' => (0, false),
                'z' => (1, false),
                'Q' => (0, true),
                'Z' => (1, true),
                _ => return Err(Error::InvalidPattern(s.to_string())),
            };
            i += 1;
            let mut bar = bar;
            if !bar && i < chars.len() && (chars[i] == '\u{304}' || chars[i] == 'b') {
                bar = true;
                i += 1;
            }
            out.push(match (base, bar) {
                (0, false) => Wirt::Q,
                (0, true) => Wirt::Qbar,
                (_, false) => Wirt::Z,
                (_, true) => Wirt::Zbar,
            });
        }
        Ok(Pattern(out))
    }
}

#[derive(Clone, PartialEq)]
pub struct Jet {
    order: usize,
    c: Vec<Complex64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet(order {}, value {})", self.order, self.value())
    }
}

/// Jets for x1..x4 at `p`, each with a unit first-order coefficient in its own slot.
pub fn seed_coordinates(p: Point4, order: usize) -> Result<[Jet; 4]> {
    if order > MAX_ORDER {
        return Err(Error::OrderOutOfRange(order));
    }
    let x = p.coords();
    Ok(std::array::from_fn(|i| Jet::variable(i, x[i], order)))
}

fn check_order(order: usize) {
    assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
}

impl Jet {
    pub fn zero(order: usize) -> Jet {
        check_order(order);
        Jet { order, c: vec![Complex64::new(0.0, 0.0); LEN[order]] }
    }

    pub fn constant(value: impl Into<Complex64>, order: usize) -> Jet {
        let mut j = Jet::zero(order);
        j.c[0] = value.into();
        j
    }

    pub fn variable(var: usize, value: impl Into<Complex64>, order: usize) -> Jet {
        let mut j = Jet::constant(value, order);
        if order >= 1 {
            j.c[1 + var] = Complex64::new(1.0, 0.0);
        }
        j
    }

    /// Jets of q and z as complex functions of the real chart.
    pub fn complex_coordinates(p: Point4, order: usize) -> Result<(Jet, Jet)> {
        let [x1, x2, x3, x4] = seed_coordinates(p, order)?;
        Ok((x1 + x2 * I, x3 + x4 * I))
    }

    pub fn from_coeffs(order: usize, c: Vec<Complex64>) -> Jet {
        check_order(order);
        assert_eq!(c.len(), LEN[order], "coefficient count does not match order");
        Jet { order, c }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> Complex64 {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.c
    }

    /// Taylor coefficient c_α (zero beyond the stored order).
    pub fn coeff(&self, alpha: [usize; 4]) -> Complex64 {
        match mono_index(alpha) {
            Some(k) if k < self.c.len() => self.c[k],
            _ => Complex64::new(0.0, 0.0),
        }
    }

    /// Partial derivative ∂^α f at the base point.
    pub fn derivative(&self, alpha: [usize; 4]) -> Complex64 {
        match mono_index(alpha) {
            Some(k) if k < self.c.len() => self.c[k] * tables().fact[k],
            _ => Complex64::new(0.0, 0.0),
        }
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let order = order.min(self.order);
        Jet { order, c: self.c[..LEN[order]].to_vec() }
    }

    pub fn conj(&self) -> Jet {
        Jet { order: self.order, c: self.c.iter().map(|v| v.conj()).collect() }
    }

    /// Jet of the real part of the represented function.
    pub fn re(&self) -> Jet {
        Jet { order: self.order, c: self.c.iter().map(|v| Complex64::new(v.re, 0.0)).collect() }
    }

    pub fn max_imag(&self) -> f64 {
        self.c.iter().fold(0.0, |m, v| m.max(v.im.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn scale(&self, s: impl Into<Complex64>) -> Jet {
        let s = s.into();
        Jet { order: self.order, c: self.c.iter().map(|v| v * s).collect() }
    }

    /// ∂/∂x_var, one order lower.
    pub fn partial(&self, var: usize) -> Jet {
        if self.order == 0 {
            return Jet::zero(0);
        }
        let t = tables();
        let order = self.order - 1;
        let mut out = Jet::zero(order);
        for k in 0..LEN[order] {
            let mut a = t.monos[k];
            a[var] += 1;
            let src = t.index[dense(a)] as usize;
            out.c[k] = self.c[src] * a[var] as f64;
        }
        out
    }

    /// Wirtinger derivative as a jet, one order lower.
    pub fn wd(&self, w: Wirt) -> Jet {
        let (a, b, sign) = match w {
            Wirt::Q => (0, 1, -1.0),
            Wirt::Qbar => (0, 1, 1.0),
            Wirt::Z => (2, 3, -1.0),
            Wirt::Zbar => (2, 3, 1.0),
        };
        let da = self.partial(a);
        let db = self.partial(b);
        let f = Complex64::new(0.0, 0.5 * sign);
        Jet {
            order: da.order,
            c: da.c.iter().zip(&db.c).map(|(x, y)| 0.5 * x + f * y).collect(),
        }
    }

    /// Iterated Wirtinger derivative as a jet.
    pub fn wd_word(&self, word: &[Wirt]) -> Result<Jet> {
        if word.len() > self.order {
            return Err(Error::PatternTooLong { len: word.len(), order: self.order });
        }
        let mut j = self.clone();
        for &w in word {
            j = j.wd(w);
        }
        Ok(j)
    }

    /// Value of an iterated Wirtinger derivative at the base point.
    pub fn wirtinger(&self, word: &[Wirt]) -> Result<Complex64> {
        Ok(self.wd_word(word)?.value())
    }

    /// As [`Jet::wirtinger`] with a textual pattern such as "qq̄".
    pub fn wirt(&self, pattern: &str) -> Result<Complex64> {
        let p: Pattern = pattern.parse()?;
        self.wirtinger(&p.0)
    }

    fn mul_jet(&self, other: &Jet) -> Jet {
        let order = self.order.min(other.order);
        let t = tables();
        let mut out = Jet::zero(order);
        for &(i, j, k) in &t.mul[..t.mul_len[order]] {
            out.c[k as usize] += self.c[i as usize] * other.c[j as usize];
        }
        out
    }

    /// f∘self for a univariate f given by f^(k)(value) for k = 0..=order.
    pub fn compose_univariate(&self, derivs: &[Complex64]) -> Jet {
        let n = self.order;
        assert!(derivs.len() > n, "need {} derivatives, got {}", n + 1, derivs.len());
        let mut h = self.clone();
        h.c[0] = Complex64::new(0.0, 0.0);
        let mut kfact = 1.0;
        for k in 1..=n {
            kfact *= k as f64;
        }
        let mut acc = Jet::constant(derivs[n] / kfact, n);
        for k in (0..n).rev() {
            kfact /= (k + 1) as f64;
            acc = acc.mul_jet(&h);
            acc.c[0] += derivs[k] / kfact;
        }
        acc
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose_univariate(&vec![e; self.order + 1])
    }

    fn cut_guard(&self, op: &'static str) -> Result<Complex64> {
        let a = self.value();
        if a.norm() <= 1e-12 {
            return Err(Error::ZeroArgument { op });
        }
        if a.arg().abs() > std::f64::consts::PI - 1e-9 {
            return Err(Error::BranchCut { op, value: a });
        }
        Ok(a)
    }

    /// Principal logarithm.
    pub fn ln(&self) -> Result<Jet> {
        let a = self.cut_guard("ln")?;
        let mut d = vec![a.ln()];
        let mut p = Complex64::new(1.0, 0.0) / a;
        for k in 1..=self.order {
            d.push(p);
            p *= -(k as f64) / a;
        }
        Ok(self.compose_univariate(&d))
    }

    /// Principal power a^p.
    pub fn powf(&self, p: f64) -> Result<Jet> {
        let a = self.cut_guard("pow")?;
        Ok(self.compose_univariate(&pow_derivs(a, Complex64::new(p, 0.0), self.order)))
    }

    /// Principal square root.
    pub fn sqrt(&self) -> Result<Jet> {
        let a = self.cut_guard("sqrt")?;
        let mut d = vec![a.sqrt()];
        for k in 1..=self.order {
            let prev = d[k - 1];
            d.push(prev * (0.5 - (k - 1) as f64) / a);
        }
        Ok(self.compose_univariate(&d))
    }

    /// Integer power; negative exponents require a nonzero value.
    pub fn powi(&self, n: i32) -> Result<Jet> {
        if n < 0 {
            return self.recip()?.powi(-n);
        }
        let mut acc = Jet::constant(1.0, self.order);
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_jet(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_jet(&base);
            }
        }
        Ok(acc)
    }

    pub fn recip(&self) -> Result<Jet> {
        let a = self.value();
        if a.norm() <= 1e-14 {
            return Err(Error::DivisionByZero);
        }
        Ok(self.recip_unchecked())
    }

    fn recip_unchecked(&self) -> Jet {
        let a = self.value();
        let mut d = vec![Complex64::new(1.0, 0.0) / a];
        for k in 1..=self.order {
            let prev = d[k - 1];
            d.push(prev * (-(k as f64)) / a);
        }
        self.compose_univariate(&d)
    }

    pub fn checked_div(&self, other: &Jet) -> Result<Jet> {
        Ok(self.mul_jet(&other.recip()?))
    }

    /// Multivariate composition f(x0 + h) with h_i = shifts_i − shifts_i(0).
    /// The result has the smaller of the two orders.
    pub fn compose(&self, shifts: &[Jet; 4]) -> Jet {
        let order = shifts.iter().map(|s| s.order).min().unwrap_or(0).min(self.order);
        let h: Vec<Jet> = shifts
            .iter()
            .map(|s| {
                let mut s = s.truncate(order);
                s.c[0] = Complex64::new(0.0, 0.0);
                s
            })
            .collect();
        let mut pows: Vec<Vec<Jet>> = Vec::with_capacity(4);
        for hi in &h {
            let mut v = vec![Jet::constant(1.0, order)];
            for k in 1..=order {
                let next = v[k - 1].mul_jet(hi);
                v.push(next);
            }
            pows.push(v);
        }
        let t = tables();
        let mut out = Jet::zero(order);
        for k in 0..LEN[order] {
            let ck = self.c[k];
            if ck == Complex64::new(0.0, 0.0) {
                continue;
            }
            let m = t.monos[k];
            let mut term: Option<Jet> = None;
            for (var, &a) in m.iter().enumerate() {
                if a > 0 {
                    let p = &pows[var][a as usize];
                    term = Some(match term {
                        None => p.clone(),
                        Some(tj) => tj.mul_jet(p),
                    });
                }
            }
            match term {
                None => out.c[0] += ck,
                Some(tj) => {
                    for (o, v) in out.c.iter_mut().zip(&tj.c) {
                        *o += ck * v;
                    }
                }
            }
        }
        out
    }

    /// Builds a jet from its value and partial-derivative jets. Coefficients are
    /// taken from the first available direction; multi-indices reachable through
    /// no supplied direction stay zero.
    pub fn integrate_gradient(value: Complex64, grads: [Option<&Jet>; 4]) -> Jet {
        let order = grads.iter().flatten().map(|g| g.order + 1).min().unwrap_or(0).min(MAX_ORDER);
        let t = tables();
        let mut out = Jet::constant(value, order);
        for k in 1..LEN[order] {
            let m = t.monos[k];
            for (var, g) in grads.iter().enumerate() {
                if let (Some(g), true) = (g, m[var] > 0) {
                    let mut a = m;
                    a[var] -= 1;
                    out.c[k] = g.c[t.index[dense(a)] as usize] / m[var] as f64;
                    break;
                }
            }
        }
        out
    }

    /// Total degree of the k-th stored monomial.
    pub fn degree_of(k: usize) -> usize {
        tables().degree[k]
    }
}

/// Derivatives of w ↦ w^p at a, principal branch.
pub(crate) fn pow_derivs(a: Complex64, p: Complex64, n: usize) -> Vec<Complex64> {
    let mut d = Vec::with_capacity(n + 1);
    let mut coef = Complex64::new(1.0, 0.0);
    for k in 0..=n {
        d.push(coef * (a.ln() * (p - k as f64)).exp());
        coef *= p - k as f64;
    }
    d
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        for v in &mut self.c {
            *v = -*v;
        }
        self
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -self.clone()
    }
}

fn add_jets(a: &Jet, b: &Jet, sign: f64) -> Jet {
    let order = a.order.min(b.order);
    Jet { order, c: (0..LEN[order]).map(|k| a.c[k] + sign * b.c[k]).collect() }
}

macro_rules! jet_binop {
    ($tr:ident, $m:ident, $f:expr) => {
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                $f(&self, &rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                $f(&self, rhs)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                $f(self, &rhs)
            }
        }
        impl $tr<&Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                $f(self, rhs)
            }
        }
    };
}

jet_binop!(Add, add, |a: &Jet, b: &Jet| add_jets(a, b, 1.0));
jet_binop!(Sub, sub, |a: &Jet, b: &Jet| add_jets(a, b, -1.0));
jet_binop!(Mul, mul, |a: &Jet, b: &Jet| a.mul_jet(b));
// IEEE-style: dividing by a jet with zero value gives non-finite coefficients;
// use `checked_div` where that must be an error.
jet_binop!(Div, div, |a: &Jet, b: &Jet| a.mul_jet(&b.recip_unchecked()));

macro_rules! jet_scalar {
    ($t:ty) => {
        impl Add<$t> for Jet {
            type Output = Jet;
            fn add(mut self, rhs: $t) -> Jet {
                self.c[0] += rhs;
                self
            }
        }
        impl Add<$t> for &Jet {
            type Output = Jet;
            fn add(self, rhs: $t) -> Jet {
                self.clone() + rhs
            }
        }
        impl Add<Jet> for $t {
            type Output = Jet;
            fn add(self, rhs: Jet) -> Jet {
                rhs + self
            }
        }
        impl Add<&Jet> for $t {
            type Output = Jet;
            fn add(self, rhs: &Jet) -> Jet {
                rhs.clone() + self
            }
        }
        impl Sub<$t> for Jet {
            type Output = Jet;
            fn sub(mut self, rhs: $t) -> Jet {
                self.c[0] -= rhs;
                self
            }
        }
        impl Sub<$t> for &Jet {
            type Output = Jet;
            fn sub(self, rhs: $t) -> Jet {
                self.clone() - rhs
            }
        }
        impl Sub<Jet> for $t {
            type Output = Jet;
            fn sub(self, rhs: Jet) -> Jet {
                -rhs + self
            }
        }
        impl Sub<&Jet> for $t {
            type Output = Jet;
            fn sub(self, rhs: &Jet) -> Jet {
                -rhs + self
            }
        }
        impl Mul<$t> for Jet {
            type Output = Jet;
            fn mul(mut self, rhs: $t) -> Jet {
                for v in &mut self.c {
                    *v *= rhs;
                }
                self
            }
        }
        impl Mul<$t> for &Jet {
            type Output = Jet;
            fn mul(self, rhs: $t) -> Jet {
                self.clone() * rhs
            }
        }
        impl Mul<Jet> for $t {
            type Output = Jet;
            fn mul(self, rhs: Jet) -> Jet {
                rhs * self
            }
        }
        impl Mul<&Jet> for $t {
            type Output = Jet;
            fn mul(self, rhs: &Jet) -> Jet {
                rhs.clone() * self
            }
        }
        impl Div<$t> for Jet {
            type Output = Jet;
            fn div(mut self, rhs: $t) -> Jet {
                for v in &mut self.c {
                    *v /= rhs;
                }
                self
            }
        }
        impl Div<$t> for &Jet {
            type Output = Jet;
            fn div(self, rhs: $t) -> Jet {
                self.clone() / rhs
            }
        }
        impl Div<Jet> for $t {
            type Output = Jet;
            fn div(self, rhs: Jet) -> Jet {
                rhs.recip_unchecked() * self
            }
        }
        impl Div<&Jet> for $t {
            type Output = Jet;
            fn div(self, rhs: &Jet) -> Jet {
                rhs.recip_unchecked() * self
            }
        }
    };
}

jet_scalar!(f64);
jet_scalar!(Complex64);

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        *self = add_jets(self, rhs, 1.0);
    }
}

impl AddAssign<Jet> for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = add_jets(self, &rhs, 1.0);
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        *self = add_jets(self, rhs, -1.0);
    }
}

impl SubAssign<Jet> for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self = add_jets(self, &rhs, -1.0);
    }
}

impl MulAssign<&Jet> for Jet {
    fn mul_assign(&mut self, rhs: &Jet) {
        *self = self.mul_jet(rhs);
    }
}
