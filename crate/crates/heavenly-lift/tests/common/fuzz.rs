// Random expression trees evaluated both as jets and as plain f64 functions.
use heavenly_lift::jets::seed_coordinates;
use heavenly_lift::{Jet, Point4};
use proptest::prelude::*;

#[derive(Clone, Debug)]
pub enum Expr {
    Var(usize),
    Const(f64),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    // a / (1 + b²) keeps the denominator away from zero
    Div(Box<Expr>, Box<Expr>),
    // exp(a / (1 + a²)), ln(1 + a²), sqrt(1 + a²), (1 + a²)^p
    Exp(Box<Expr>),
    Ln(Box<Expr>),
    Sqrt(Box<Expr>),
    Pow(Box<Expr>, f64),
}

pub fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![(0usize..4).prop_map(Expr::Var), (-2.0f64..2.0).prop_map(Expr::Const)];
    leaf.prop_recursive(5, 24, 2, |inner| {
        let b = |e: Expr| Box::new(e);
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Add(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Sub(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Mul(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Div(b(x), b(y))),
            inner.clone().prop_map(move |x| Expr::Exp(b(x))),
            inner.clone().prop_map(move |x| Expr::Ln(b(x))),
            inner.clone().prop_map(move |x| Expr::Sqrt(b(x))),
            (inner, -1.5f64..1.5).prop_map(move |(x, p)| Expr::Pow(b(x), p)),
        ]
    })
}

pub fn point() -> impl Strategy<Value = [f64; 4]> {
    [-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0]
}

impl Expr {
    pub fn eval(&self, x: &[f64; 4]) -> f64 {
        match self {
            Expr::Var(i) => x[*i],
            Expr::Const(c) => *c,
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => {
                let d = b.eval(x);
                a.eval(x) / (1.0 + d * d)
            }
            Expr::Exp(a) => {
                let v = a.eval(x);
                (v / (1.0 + v * v)).exp()
            }
            Expr::Ln(a) => {
                let v = a.eval(x);
                (1.0 + v * v).ln()
            }
            Expr::Sqrt(a) => {
                let v = a.eval(x);
                (1.0 + v * v).sqrt()
            }
            Expr::Pow(a, p) => {
                let v = a.eval(x);
                (1.0 + v * v).powf(*p)
            }
        }
    }

    pub fn jet(&self, s: &[Jet; 4]) -> Jet {
        let one = |j: &Jet| j * j + 1.0;
        match self {
            Expr::Var(i) => s[*i].clone(),
            Expr::Const(c) => Jet::constant(*c, s[0].order()),
            Expr::Add(a, b) => a.jet(s) + b.jet(s),
            Expr::Sub(a, b) => a.jet(s) - b.jet(s),
            Expr::Mul(a, b) => a.jet(s) * b.jet(s),
            Expr::Div(a, b) => a.jet(s).checked_div(&one(&b.jet(s))).unwrap(),
            Expr::Exp(a) => {
                let v = a.jet(s);
                v.checked_div(&one(&v)).unwrap().exp()
            }
            Expr::Ln(a) => one(&a.jet(s)).ln().unwrap(),
            Expr::Sqrt(a) => one(&a.jet(s)).sqrt().unwrap(),
            Expr::Pow(a, p) => one(&a.jet(s)).powf(*p).unwrap(),
        }
    }

    pub fn jet_at(&self, x: &[f64; 4], order: usize) -> Jet {
        self.jet(&seed_coordinates(Point4::from_coords(*x), order).unwrap())
    }
}

/// Worst relative mismatch between jet derivatives of order k+1 and central
/// differences of jet derivatives of order k, for k = 0..order.
pub fn fd_mismatch(e: &Expr, x: &[f64; 4], order: usize) -> f64 {
    let h = 1e-5;
    let centre = e.jet_at(x, order);
    let mut worst = 0.0f64;
    // value against the plain evaluation
    let v = e.eval(x);
    worst = worst.max((centre.value().re - v).abs() / (1.0 + v.abs()));
    for i in 0..4 {
        let mut xp = *x;
        let mut xm = *x;
        xp[i] += h;
        xm[i] -= h;
        let jp = e.jet_at(&xp, order - 1);
        let jm = e.jet_at(&xm, order - 1);
        for alpha in heavenly_lift::jets::multi_indices(order - 1) {
            let fd = (jp.derivative(alpha) - jm.derivative(alpha)) / (2.0 * h);
            let mut beta = alpha;
            beta[i] += 1;
            let d = centre.derivative(beta);
            worst = worst.max((d - fd).norm() / (1.0 + d.norm()));
        }
    }
    worst
}
