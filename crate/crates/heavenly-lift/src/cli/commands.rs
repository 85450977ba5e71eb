//! The three suites behind `verify`, `curvature` and `noninv`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use super::config::RunConfig;
use super::report::{Csv, SCHEMA};
use crate::curvature::{compare_curv_closed, convention, frame_pattern, riemann_ricci};
use crate::error::{Error, Result};
use crate::geometry::{coframe, coframe_metric_check, metric_closed, metric_from_psi, CoframeForm, MetricForm};
use crate::jets::Point4;
use crate::noninv::{classify_with, Verdict, CAVEAT, FLOW_EPS, FLOW_TOL, KERNEL_TOL};
use crate::pde::{backlund_compatibility, residual_bf, residual_leghcma, residual_legrot, residual_zeta_hessian};
use crate::solutions::{legendre_invert, psi_jet};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

pub struct Outcome {
    pub code: i32,
    pub json: Value,
    pub csv: String,
    pub summary: String,
}

/// Exit code for an error that aborts a whole command.
pub fn error_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InsufficientSampling { .. } | Error::Precondition(_) => EXIT_USAGE,
        _ => EXIT_FAIL,
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Bound {
    /// value = max over points, must be ≤ tol
    Upper,
    /// value = max over points, must be ≥ tol somewhere
    Lower,
}

/// Worst value of one check over the sample, with the first evaluation error.
#[derive(Default)]
struct Acc {
    worst: Option<f64>,
    at: Option<Point4>,
    errors: usize,
    first_error: Option<String>,
    evaluated: usize,
}

impl Acc {
    fn add(&mut self, p: Point4, r: &Result<f64>) {
        match r {
            Ok(v) => {
                self.evaluated += 1;
                // NaN always wins so that it cannot hide
                if self.worst.map_or(true, |w| v.is_nan() || *v > w) && !self.worst.is_some_and(f64::is_nan) {
                    self.worst = Some(*v);
                    self.at = Some(p);
                }
            }
            Err(e) => {
                self.errors += 1;
                if self.first_error.is_none() {
                    self.first_error = Some(format!("{e} at {:?}", p.coords()));
                }
            }
        }
    }

    fn finish(&self, tol: f64, bound: Bound) -> (Value, bool) {
        let pass = self.errors == 0
            && match (bound, self.worst) {
                (Bound::Upper, Some(w)) => w <= tol,
                (Bound::Lower, Some(w)) => w >= tol,
                (_, None) => false,
            };
        let mut m = Map::new();
        m.insert("value".into(), self.worst.map_or(Value::Null, |w| json!(w)));
        m.insert("tolerance".into(), json!(tol));
        m.insert("bound".into(), json!(if bound == Bound::Upper { "max<=tol" } else { "max>=tol" }));
        m.insert("pass".into(), json!(pass));
        m.insert("evaluated".into(), json!(self.evaluated));
        m.insert("errors".into(), json!(self.errors));
        if let Some(p) = self.at {
            m.insert("worst_point".into(), json!(p.coords()));
        }
        if let Some(e) = &self.first_error {
            m.insert("first_error".into(), json!(e));
        }
        (Value::Object(m), pass)
    }
}

struct Checks {
    map: BTreeMap<String, Value>,
    failed: Vec<String>,
}

impl Checks {
    fn new() -> Checks {
        Checks { map: BTreeMap::new(), failed: Vec::new() }
    }

    fn push(&mut self, name: &str, acc: &Acc, tol: f64, bound: Bound) {
        let (v, pass) = acc.finish(tol, bound);
        if !pass {
            self.failed.push(name.to_string());
        }
        self.map.insert(name.to_string(), v);
    }

    fn push_value(&mut self, name: &str, v: Value, pass: bool) {
        if !pass {
            self.failed.push(name.to_string());
        }
        self.map.insert(name.to_string(), v);
    }
}

fn header(cmd: &str, cfg: &RunConfig, n_points: Option<usize>) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("schema".into(), json!(SCHEMA));
    m.insert("command".into(), json!(cmd));
    m.insert("solution".into(), serde_json::to_value(&cfg.spec).unwrap_or(Value::Null));
    m.insert("box".into(), serde_json::to_value(cfg.sample).unwrap_or(Value::Null));
    m.insert("seed".into(), json!(cfg.seed));
    m.insert("n_points".into(), n_points.map_or(Value::Null, |n| json!(n)));
    m.insert("tolerances".into(), json!(cfg.tolerances));
    m.insert(
        "curvature_convention".into(),
        match convention() {
            Ok(c) => json!({"labels": c.labels, "sign": c.sign, "description": c.describe()}),
            Err(e) => json!({"error": e.to_string()}),
        },
    );
    m
}

fn finish(mut m: Map<String, Value>, checks: Checks, csv: String, cmd: &str) -> Outcome {
    let pass = checks.failed.is_empty();
    let summary = if pass {
        format!("{cmd}: all {} checks pass", checks.map.len())
    } else {
        format!("{cmd}: FAILED {}", checks.failed.join(", "))
    };
    m.insert("checks".into(), json!(checks.map));
    m.insert("failed".into(), json!(checks.failed));
    m.insert("pass".into(), json!(pass));
    Outcome { code: if pass { EXIT_PASS } else { EXIT_FAIL }, json: Value::Object(m), csv, summary }
}

fn opt(r: &Result<f64>) -> Option<f64> {
    r.as_ref().ok().copied()
}

// ---------------------------------------------------------------- verify

struct VerifyRow {
    p: Point4,
    leghcma: Result<f64>,
    bf: Result<f64>,
    legrot: Option<Result<f64>>,
    backlund: Option<Result<f64>>,
    zeta: Option<Result<f64>>,
    closure: Option<Result<f64>>,
}

const ROUND_TRIP_POINTS: usize = 50;

fn round_trip(cfg: &RunConfig, p: Point4, psi: &crate::Jet) -> Result<(f64, f64)> {
    let zeta = psi.wirt("q")?;
    let sol = legendre_invert(&cfg.spec, zeta, p.z, None)?;
    let back = psi_jet(&cfg.spec, sol.point, 1)?.wirt("q")?;
    Ok((residual_zeta_hessian(&sol.u_hessian, zeta).relative(), (back - zeta).norm() / zeta.norm().max(1.0)))
}

fn verify_point(cfg: &RunConfig, p: Point4, with_round_trip: bool) -> VerifyRow {
    let spec = &cfg.spec;
    let psi = psi_jet(spec, p, 3);
    let with = |f: &dyn Fn(&crate::Jet) -> Result<f64>| psi.as_ref().map_err(Clone::clone).and_then(f);
    let special = spec.family.is_special();
    let (zeta, closure) = if with_round_trip {
        match psi.as_ref().map_err(Clone::clone).and_then(|j| round_trip(cfg, p, j)) {
            Ok((z, c)) => (Some(Ok(z)), Some(Ok(c))),
            Err(e) => (Some(Err(e.clone())), Some(Err(e))),
        }
    } else {
        (None, None)
    };
    VerifyRow {
        p,
        leghcma: with(&|j| Ok(residual_leghcma(j)?.relative())),
        bf: with(&|j| Ok(residual_bf(j)?.relative())),
        legrot: special.then(|| with(&|j| Ok(residual_legrot(j, spec.alpha)?.iter().fold(0.0f64, |m, r| m.max(r.relative()))))),
        backlund: special.then(|| with(&|j| Ok(backlund_compatibility(j, spec.alpha)?.relative()))),
        zeta,
        closure,
    }
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<Outcome> {
    let n = cfg.n_points.unwrap_or(200);
    if n == 0 {
        return Err(Error::Config("verify needs at least one point".into()));
    }
    let pts = cfg.sample.halton_points(n, cfg.seed);
    let rows: Vec<VerifyRow> =
        pts.par_iter().enumerate().map(|(i, &p)| verify_point(cfg, p, i < ROUND_TRIP_POINTS)).collect();

    let mut acc: BTreeMap<&str, Acc> = BTreeMap::new();
    let mut csv = Csv::new(&["x1", "x2", "x3", "x4", "leghcma", "bf", "legrot", "backlund", "zeta", "closure"]);
    for r in &rows {
        let cols: [(&str, Option<&Result<f64>>); 6] = [
            ("leghcma", Some(&r.leghcma)),
            ("bf", Some(&r.bf)),
            ("legrot", r.legrot.as_ref()),
            ("backlund", r.backlund.as_ref()),
            ("zeta", r.zeta.as_ref()),
            ("closure", r.closure.as_ref()),
        ];
        let x = r.p.coords();
        let mut cells: Vec<Option<f64>> = x.iter().map(|&v| Some(v)).collect();
        for (name, v) in cols {
            if let Some(v) = v {
                acc.entry(name).or_default().add(r.p, v);
            }
            cells.push(v.and_then(opt));
        }
        csv.row(&cells);
    }
    let mut checks = Checks::new();
    for (name, a) in &acc {
        checks.push(name, a, cfg.tol(name), Bound::Upper);
    }
    if let Some(req) = cfg.spec.required_r() {
        let ok = cfg.spec.restriction_holds();
        checks.push_value(
            "restriction",
            json!({"pass": ok, "required_r": serde_json::to_value(&req).unwrap_or(Value::Null)}),
            ok,
        );
    }
    let mut m = header("verify", cfg, Some(n));
    m.insert("round_trip_points".into(), json!(n.min(ROUND_TRIP_POINTS)));
    Ok(finish(m, checks, csv.finish(), "verify"))
}

// ---------------------------------------------------------------- curvature

struct CurvRow {
    p: Point4,
    metric: Result<f64>,
    coframes: Vec<(CoframeForm, Result<f64>)>,
    ricci: Result<f64>,
    riemann: Result<f64>,
    symmetry: Result<f64>,
    signature_off: Result<f64>,
    closed: Option<Result<f64>>,
    r3434: Option<Result<(num_complex::Complex64, num_complex::Complex64)>>,
    frame_zero: Option<Result<f64>>,
    frame_rel: Option<Result<f64>>,
    frame_printed: Option<Result<f64>>,
    g: Option<[f64; 10]>,
}

fn curvature_point(cfg: &RunConfig, p: Point4) -> CurvRow {
    let spec = &cfg.spec;
    let form = MetricForm::for_family(spec.family);
    let gp = metric_from_psi(spec, p, 2);
    let gc = metric_closed(form, spec, p, 2);
    let both = || -> Result<_> { Ok((gp.clone()?, gc.clone()?)) };
    let metric = both().map(|(a, b)| a.deviation(&b.scale(form.legendre_sign())));
    let coframes = CoframeForm::ALL
        .iter()
        .filter(|f| f.applies_to(spec.family))
        .map(|&f| {
            let target = match f {
                CoframeForm::LegTetrad | CoframeForm::LegTetrad2 => gp.clone(),
                _ => gc.clone(),
            };
            (f, target.and_then(|g| Ok(coframe_metric_check(&coframe(f, spec, p, 2)?, &g))))
        })
        .collect();
    let reps = both().and_then(|(a, b)| Ok((riemann_ricci(&a)?, riemann_ricci(&b)?)));
    let ricci = reps.as_ref().map(|(a, b)| a.ricci_relative().max(b.ricci_relative())).map_err(Clone::clone);
    let riemann = reps.as_ref().map(|(a, _)| a.max_riemann()).map_err(Clone::clone);
    let symmetry = reps.as_ref().map(|(a, b)| a.symmetry_defect().max(b.symmetry_defect())).map_err(Clone::clone);
    let signature_off = both().map(|(a, b)| if a.signature() == (2, 2) && b.signature() == (2, 2) { 0.0 } else { 1.0 });
    let special = spec.family.is_special();
    let cm = special.then(|| compare_curv_closed(spec, p));
    let fp = special.then(|| frame_pattern(spec, p));
    let pick = |f: &dyn Fn(&crate::curvature::FramePattern) -> f64| fp.as_ref().map(|r| r.as_ref().map(f).map_err(Clone::clone));
    // CSV metric: the one whose curvature is reported (closed form for the special families)
    let shown = if special { gc.as_ref().ok() } else { gp.as_ref().ok() };
    let g = shown.map(|g| {
        let v = g.value();
        let mut out = [0.0; 10];
        let mut k = 0;
        for a in 0..4 {
            for b in a..4 {
                out[k] = v[(a, b)];
                k += 1;
            }
        }
        out
    });
    CurvRow {
        p,
        metric,
        coframes,
        ricci,
        riemann,
        symmetry,
        signature_off,
        closed: cm.as_ref().map(|r| r.as_ref().map(|m| m.relative_error).map_err(Clone::clone)),
        r3434: cm.as_ref().map(|r| r.as_ref().map(|m| (m.numeric, m.closed)).map_err(Clone::clone)),
        frame_zero: pick(&|r| r.zero_defect),
        frame_rel: pick(&|r| r.relation_defect),
        frame_printed: pick(&|r| r.printed_relation_defect),
        g,
    }
}

/// Cell-centred grid of `n` points per axis, thinned with a constant stride to ≤ `cap` points.
pub fn grid_points(cfg: &RunConfig, n: usize, cap: usize) -> Vec<Point4> {
    let total = n.pow(4);
    let stride = total.div_ceil(cap).max(1);
    (0..total)
        .step_by(stride)
        .map(|k| {
            let idx = [k % n, (k / n) % n, (k / (n * n)) % n, k / (n * n * n)];
            cfg.sample.lerp(std::array::from_fn(|d| (idx[d] as f64 + 0.5) / n as f64))
        })
        .collect()
}

pub const GRID_CAP: usize = 10_000;

pub fn cmd_curvature(cfg: &RunConfig) -> Result<Outcome> {
    cfg.spec.validate()?;
    let pts = if cfg.grid > 0 {
        grid_points(cfg, cfg.grid, GRID_CAP)
    } else {
        let n = cfg.n_points.unwrap_or(100);
        if n == 0 {
            return Err(Error::Config("curvature needs at least one point".into()));
        }
        cfg.sample.halton_points(n, cfg.seed)
    };
    let rows: Vec<CurvRow> = pts.par_iter().map(|&p| curvature_point(cfg, p)).collect();

    let mut header_cols: Vec<String> = ["x1", "x2", "x3", "x4"].map(String::from).to_vec();
    for a in 1..=4 {
        for b in a..=4 {
            header_cols.push(format!("g{a}{b}"));
        }
    }
    header_cols.extend(
        ["ricci_rel", "riemann_max", "r3434_re", "r3434_im", "r3434_closed_re", "r3434_closed_im", "r3434_abs_diff"]
            .map(String::from),
    );
    let hdr: Vec<&str> = header_cols.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&hdr);

    let mut acc: BTreeMap<String, Acc> = BTreeMap::new();
    let mut add = |name: &str, p: Point4, r: &Result<f64>| acc.entry(name.to_string()).or_default().add(p, r);
    for r in &rows {
        add("metric", r.p, &r.metric);
        for (f, v) in &r.coframes {
            add(&format!("coframe/{}", f.name()), r.p, v);
        }
        add("ricci", r.p, &r.ricci);
        add("riemann_max", r.p, &r.riemann);
        add("riemann_symmetries", r.p, &r.symmetry);
        add("signature", r.p, &r.signature_off);
        for (name, v) in [
            ("closed_curvature", &r.closed),
            ("frame_zero_pattern", &r.frame_zero),
            ("frame_relations", &r.frame_rel),
            ("frame_relations_as_printed", &r.frame_printed),
        ] {
            if let Some(v) = v {
                add(name, r.p, v);
            }
        }
        let mut cells: Vec<Option<f64>> = r.p.coords().iter().map(|&v| Some(v)).collect();
        match &r.g {
            Some(g) => cells.extend(g.iter().map(|&v| Some(v))),
            None => cells.extend([None; 10]),
        }
        cells.push(opt(&r.ricci));
        cells.push(opt(&r.riemann));
        match &r.r3434 {
            Some(Ok((num, closed))) => {
                cells.extend([num.re, num.im, closed.re, closed.im, (num - closed).norm()].map(Some))
            }
            _ => cells.extend([None; 5]),
        }
        csv.row(&cells);
    }

    let mut checks = Checks::new();
    let mut info = Map::new();
    for (name, a) in &acc {
        let (tol, bound) = match name.as_str() {
            "metric" => (cfg.tol("metric"), Bound::Upper),
            "ricci" => (cfg.tol("ricci"), Bound::Upper),
            "riemann_symmetries" => (cfg.tol("frame"), Bound::Upper),
            "signature" => (0.5, Bound::Upper),
            "closed_curvature" => (cfg.tol("closed_curvature"), Bound::Upper),
            "frame_zero_pattern" | "frame_relations" => (cfg.tol("frame"), Bound::Upper),
            "riemann_max" | "frame_relations_as_printed" => {
                // informational unless b is non-constant (then the metric must be curved)
                if name == "riemann_max" && !cfg.spec.b.is_constant() {
                    (cfg.tol("riemann_min"), Bound::Lower)
                } else {
                    info.insert(name.clone(), a.finish(0.0, Bound::Upper).0["value"].clone());
                    continue;
                }
            }
            _ => (cfg.tol("coframe"), Bound::Upper),
        };
        checks.push(name, a, tol, bound);
    }
    let mut m = header("curvature", cfg, Some(pts.len()));
    m.insert("grid".into(), json!(cfg.grid));
    m.insert("metric_form".into(), json!(MetricForm::for_family(cfg.spec.family).name()));
    m.insert("informational".into(), Value::Object(info));
    Ok(finish(m, checks, csv.finish(), "curvature"))
}

// ---------------------------------------------------------------- noninv

pub fn cmd_noninv(cfg: &RunConfig) -> Result<Outcome> {
    cfg.spec.validate()?;
    let c = classify_with(&cfg.spec, &cfg.sample, cfg.seed, &cfg.degrees, cfg.n_points)?;
    let mut csv = Csv::new(&["degree", "index", "singular_value"]);
    for r in &c.reports {
        for (i, s) in r.singular_values.iter().enumerate() {
            csv.row_text(&[r.degree.to_string(), i.to_string(), super::report::fmt_f64(*s)]);
        }
    }
    let (code, summary) = match (c.verdict, c.witnesses_verified) {
        (Verdict::Noninvariant, _) => (EXIT_PASS, "noninv: noninvariant (trivial kernel at every degree)".to_string()),
        (Verdict::InvariantDirectionFound, true) => (
            EXIT_INVARIANT,
            format!(
                "noninv: invariant direction found (kernel dims {:?}), witnesses flow-verified",
                c.reports.iter().map(|r| r.kernel_dim).collect::<Vec<_>>()
            ),
        ),
        (Verdict::InvariantDirectionFound, false) => {
            (EXIT_FAIL, "noninv: kernel found but a witness fails the flow check".to_string())
        }
    };
    let mut m = header("noninv", cfg, cfg.n_points);
    m.insert("degrees".into(), json!(cfg.degrees));
    m.insert(
        "settings".into(),
        json!({"kernel_tol": KERNEL_TOL, "flow_eps": FLOW_EPS, "flow_tol": FLOW_TOL, "caveat": CAVEAT}),
    );
    m.insert("classification".into(), serde_json::to_value(&c).unwrap_or(Value::Null));
    m.insert("pass".into(), json!(code == EXIT_PASS));
    Ok(Outcome { code, json: Value::Object(m), csv: csv.finish(), summary })
}
