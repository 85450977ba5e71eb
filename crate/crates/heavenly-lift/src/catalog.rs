//! Default specs and the list of metrics exercised by the sweeps.
//!
//! The defaults keep the standard box away from the loci (P+P̄)r″ = ±4 and
//! r″ = 0 where the closed forms degenerate.

use num_complex::Complex64;

use crate::error::Result;
use crate::funcspace::{HoloFn, RealFn1};
use crate::geometry::{metric_closed, metric_from_psi, CoframeForm, MetricForm, MetricJet};
use crate::jets::Point4;
use crate::solutions::{Family, SolutionSpec};

fn monomial(k: usize) -> HoloFn {
    HoloFn::monomial(Complex64::new(1.0, 0.0), k)
}

fn small_exp() -> RealFn1 {
    RealFn1::Exponential { a: 0.1, gamma: 1.0 }
}

pub fn default_spec(f: Family) -> SolutionSpec {
    match f {
        Family::Sol1 => SolutionSpec::sol1(monomial(2), small_exp()),
        Family::Sol2 => SolutionSpec::sol2(monomial(3), small_exp()),
        Family::Sol3 => SolutionSpec::sol3(monomial(2), RealFn1::Polynomial { coeffs: vec![0.0, 1.0] }, small_exp()),
        Family::Special1 => SolutionSpec::special1(monomial(3), 0.7, 0.3),
        Family::Special2 => SolutionSpec::special2(monomial(2), 0.7, 0.3),
    }
}

pub const FAMILIES: [Family; 5] = [Family::Sol1, Family::Sol2, Family::Sol3, Family::Special1, Family::Special2];

/// How a catalog metric is produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricSource {
    Psi,
    Closed(MetricForm),
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: String,
    pub spec: SolutionSpec,
    pub source: MetricSource,
}

impl CatalogEntry {
    pub fn metric(&self, p: Point4, order: usize) -> Result<MetricJet> {
        match self.source {
            MetricSource::Psi => metric_from_psi(&self.spec, p, order),
            MetricSource::Closed(f) => metric_closed(f, &self.spec, p, order),
        }
    }
}

/// Every family's metric twice: from ψ and from its closed form.
pub fn metric_catalog() -> Vec<CatalogEntry> {
    let mut out = Vec::new();
    for f in FAMILIES {
        let spec = default_spec(f);
        out.push(CatalogEntry { name: format!("{}/psi", f.name()), spec: spec.clone(), source: MetricSource::Psi });
        let form = MetricForm::for_family(f);
        out.push(CatalogEntry { name: format!("{}/{}", f.name(), form.name()), spec, source: MetricSource::Closed(form) });
    }
    out
}

/// (co-frame, spec, metric it must reproduce) for every applicable pairing.
pub fn coframe_catalog() -> Vec<(CoframeForm, CatalogEntry)> {
    let mut out = Vec::new();
    for f in FAMILIES {
        let spec = default_spec(f);
        for form in CoframeForm::ALL {
            if !form.applies_to(f) {
                continue;
            }
            let source = match form {
                CoframeForm::LegTetrad | CoframeForm::LegTetrad2 => MetricSource::Psi,
                _ => MetricSource::Closed(MetricForm::for_family(f)),
            };
            let name = format!("{}/{}", f.name(), form.name());
            out.push((form, CatalogEntry { name, spec: spec.clone(), source }));
        }
    }
    out
}
