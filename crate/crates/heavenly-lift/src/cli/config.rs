//! TOML run configuration.
//!
//! ```toml
//! [solution]
//! family = "sol1"            # sol1 | sol2 | sol3 | special1 | special2
//! b = { kind = "polynomial", coeffs = [[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]] }
//! r = { kind = "trig", a = 1.0, b = 0.0, omega = 1.0 }
//! # k = { kind = "affine", slope = 1.0, intercept = 0.0 }   (sol3, optional for sol2/special2)
//! # alpha = 0.7, r0 = 0.3                                   (special families; r defaults to the forced one)
//!
//! [box]                       # optional, defaults shown
//! re_q = [0.6, 2.0]
//! im_q = [-0.4, 0.4]
//! re_z = [0.6, 2.0]
//! im_z = [-0.4, 0.4]
//!
//! [run]                       # all optional
//! points = 200
//! seed = 0
//! jobs = 0                    # 0 = all cores
//! grid = 0                    # curvature: points per axis of the CSV grid
//! degrees = [4, 6, 8]         # noninv
//!
//! [tolerances]                # any subset of the names in DEFAULT_TOLERANCES
//! leghcma = 1e-8
//!
//! [outputs]                   # optional files written besides --out
//! json = "report.json"
//! csv = "grid.csv"
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::funcspace::{HoloFn, RealFn1};
use crate::noninv::DEGREES;
use crate::sampling::SampleBox;
use crate::solutions::{Family, SolutionSpec};

pub const DEFAULT_TOLERANCES: [(&str, f64); 12] = [
    ("leghcma", 1e-8),
    ("bf", 1e-8),
    ("legrot", 1e-8),
    ("backlund", 1e-7),
    ("zeta", 1e-7),
    ("closure", 1e-11),
    ("metric", 1e-9),
    ("coframe", 1e-10),
    ("ricci", 1e-8),
    ("riemann_min", 1e-3),
    ("closed_curvature", 1e-8),
    ("frame", 1e-9),
];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolution {
    family: Family,
    b: HoloFn,
    r: Option<RealFn1>,
    k: Option<RealFn1>,
    #[serde(default)]
    alpha: f64,
    #[serde(default)]
    r0: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    points: Option<usize>,
    seed: Option<u64>,
    jobs: Option<usize>,
    grid: Option<usize>,
    degrees: Option<Vec<usize>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutputs {
    json: Option<PathBuf>,
    csv: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    solution: RawSolution,
    #[serde(rename = "box", default)]
    sample: Option<SampleBox>,
    #[serde(default)]
    run: RawRun,
    #[serde(default)]
    tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    outputs: RawOutputs,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub spec: SolutionSpec,
    pub sample: SampleBox,
    pub n_points: Option<usize>,
    pub seed: u64,
    pub jobs: usize,
    pub grid: usize,
    pub degrees: Vec<usize>,
    pub tolerances: BTreeMap<String, f64>,
    pub json_out: Option<PathBuf>,
    pub csv_out: Option<PathBuf>,
}

impl RunConfig {
    pub fn tol(&self, name: &str) -> f64 {
        self.tolerances[name]
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parses and checks everything except the special-family restriction on r,
    /// which `verify` reports as a failing check instead.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let s = raw.solution;
        let forced = SolutionSpec { family: s.family, b: s.b.clone(), r: RealFn1::zero(), k: None, alpha: s.alpha, r0: s.r0 }
            .required_r();
        let r = match (s.r, forced) {
            (Some(r), _) => r,
            (None, Some(f)) => f,
            (None, None) => return Err(Error::Config("solution.r is required for this family".into())),
        };
        let spec = SolutionSpec { family: s.family, b: s.b, r, k: s.k, alpha: s.alpha, r0: s.r0 };
        if spec.family == Family::Sol3 && spec.k.is_none() {
            return Err(Error::Config("sol3 needs solution.k".into()));
        }
        if matches!(spec.family, Family::Sol1 | Family::Special1) && spec.k.is_some() {
            return Err(Error::Config("solution.k only enters sol2/sol3/special2".into()));
        }
        if let HoloFn::Polynomial { coeffs } = &spec.b {
            if coeffs.is_empty() {
                return Err(Error::Config("solution.b needs at least one coefficient".into()));
            }
        }
        let sample = raw.sample.unwrap_or_default();
        sample.validate()?;
        let mut tolerances: BTreeMap<String, f64> = DEFAULT_TOLERANCES.iter().map(|&(k, v)| (k.to_string(), v)).collect();
        for (k, v) in raw.tolerances {
            if !tolerances.contains_key(&k) {
                return Err(Error::Config(format!("unknown tolerance '{k}'")));
            }
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("tolerance '{k}' must be positive")));
            }
            tolerances.insert(k, v);
        }
        let degrees = raw.run.degrees.unwrap_or_else(|| DEGREES.to_vec());
        if degrees.is_empty() || degrees.iter().any(|&d| d > 16) {
            return Err(Error::Config("run.degrees must be a non-empty list of degrees ≤ 16".into()));
        }
        Ok(RunConfig {
            spec,
            sample,
            n_points: raw.run.points,
            seed: raw.run.seed.unwrap_or(0),
            jobs: raw.run.jobs.unwrap_or(0),
            grid: raw.run.grid.unwrap_or(0),
            degrees,
            tolerances,
            json_out: raw.outputs.json,
            csv_out: raw.outputs.csv,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "[solution]\nfamily = \"special2\"\nb = { kind = \"polynomial\", coeffs = [[0.0, 0.0], [1.0, 0.0]] }\nalpha = 0.5\nr0 = 0.1\n";

    #[test]
    fn forced_r_and_defaults() {
        let c = RunConfig::parse(BASE).unwrap();
        assert!(c.spec.restriction_holds());
        assert_eq!(c.degrees, DEGREES.to_vec());
        assert_eq!(c.tol("backlund"), 1e-7);
        assert_eq!(c.sample, SampleBox::default());
    }

    #[test]
    fn rejects_bad_configs() {
        for extra in [
            "[box]\nre_q = [0.6, 2.0]\nim_q = [-0.4, 0.4]\nre_z = [-1.0, 2.0]\nim_z = [-0.4, 0.4]\n",
            "[tolerances]\nleghcma = -1.0\n",
            "[run]\nspeed = 3\n",
            "[run]\ndegrees = []\n",
        ] {
            assert!(matches!(RunConfig::parse(&format!("{BASE}{extra}")), Err(Error::Config(_))), "{extra}");
        }
        let no_r = "[solution]\nfamily = \"sol1\"\nb = { kind = \"polynomial\", coeffs = [[1.0, 0.0]] }\n";
        assert!(RunConfig::parse(no_r).is_err());
        let sol3_no_k = no_r.replace("sol1", "sol3") + "r = { kind = \"affine\", slope = 0.0, intercept = 0.0 }\n";
        assert!(RunConfig::parse(&sol3_no_k).is_err());
    }
}
