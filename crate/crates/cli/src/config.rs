use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use toruslab::rng::{random_field, rough_potential, stream};
use toruslab::spectral1d::{IntervalSet, Potential1D};
use toruslab::spectral2d::Bump;
use toruslab::torus::{FourierField, ObservationRegion, Rect, TorusGeometry};

pub const COMMANDS: [&str; 10] = [
    "simulate",
    "gramian",
    "control",
    "scan-zygmund",
    "scan-resolvent",
    "scan-dispersive",
    "verify-geom",
    "scan-shells",
    "lowfreq",
    "hitting",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Gramian,
    Control,
    ScanZygmund,
    ScanResolvent,
    ScanDispersive,
    VerifyGeom,
    ScanShells,
    Lowfreq,
    Hitting,
}

impl Command {
    pub fn parse(s: &str) -> Option<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).ok()
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GeometrySpec {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
}

impl Default for GeometrySpec {
    fn default() -> Self {
        Self { a: 2.0 * PI, b: 2.0 * PI }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSpec {
    pub seed: u64,
    pub cutoff: usize,
    /// Decay exponent of the coefficient envelope.
    #[serde(default = "default_tail")]
    pub tail: f64,
    #[serde(default = "one")]
    pub l2: f64,
}

/// A field given by a named preset, a CSV coefficient file, or a seeded random draw.
///
/// Presets: `zero`, `mode(n1,n2)`, `cos(n1,n2,a)` for `a cos(w_n . z)`; in 1D `cos(m,a)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Preset(String),
    File { file: PathBuf },
    Random { random: RandomSpec },
}

impl Default for FieldSpec {
    fn default() -> Self {
        FieldSpec::Preset("zero".into())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectSpec {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    #[serde(default)]
    pub geometry: GeometrySpec,
    #[serde(default)]
    pub potential: FieldSpec,
    /// Initial state for `simulate` and `control`.
    #[serde(default)]
    pub initial: Option<FieldSpec>,
    /// Rectangles of the observation region; the whole torus when absent.
    #[serde(default)]
    pub region: Option<Vec<RectSpec>>,
    #[serde(default = "default_cutoff")]
    pub cutoff: usize,
    /// Extra cutoffs for `gramian`.
    #[serde(default)]
    pub cutoffs: Option<Vec<usize>>,
    #[serde(default = "one")]
    pub time: f64,
    #[serde(default)]
    pub seed: u64,
    pub grid: Option<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub params: Params,
}

/// Command-specific knobs. Unused entries are ignored by the other commands.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub steps: usize,
    pub panels: usize,
    pub samples: usize,
    pub kappas: Vec<f64>,
    pub hs: Vec<f64>,
    pub max_exponent: f64,
    pub tau_re: Vec<f64>,
    pub tau_im: f64,
    pub oversample: usize,
    pub ks: Vec<f64>,
    pub points: usize,
    /// Observation set in `[0, 2 pi)` for 1D commands.
    pub interval: Vec<(f64, f64)>,
    pub epsilon: f64,
    pub threshold: usize,
    pub refinements: usize,
    pub rho: f64,
    pub profile: Bump,
    pub k: f64,
    pub weak_epsilon: f64,
    pub cluster_tol: f64,
    pub direction: Option<(i64, i64)>,
    pub angle: Option<f64>,
    pub start: (f64, f64),
    pub n_min: Option<f64>,
    pub norm_cap: Option<f64>,
    pub z_grid: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            steps: 64,
            panels: 64,
            samples: 200,
            kappas: vec![1.0, 2.0, 4.0, 8.0],
            hs: vec![1.0 / 32.0],
            max_exponent: 0.65,
            tau_re: vec![10.0, 40.0, 160.0, 640.0],
            tau_im: 1.0,
            oversample: 2,
            ks: vec![0.0, 0.3, 0.5],
            points: 256,
            interval: vec![(0.0, PI)],
            epsilon: 1.0 / 16.0,
            threshold: 12,
            refinements: 2,
            rho: 0.2,
            profile: Bump::Sharp,
            k: 0.0,
            weak_epsilon: 2.0,
            cluster_tol: 1e-9,
            direction: None,
            angle: None,
            start: (0.0, 0.0),
            n_min: None,
            norm_cap: None,
            z_grid: 4,
        }
    }
}

fn default_tail() -> f64 {
    0.5
}

fn one() -> f64 {
    1.0
}

fn default_cutoff() -> usize {
    4
}

fn default_trials() -> usize {
    20
}

pub type ConfigResult<T> = std::result::Result<T, String>;

impl RunConfig {
    pub fn torus(&self) -> ConfigResult<TorusGeometry> {
        TorusGeometry::new(self.geometry.a, self.geometry.b).map_err(|e| e.to_string())
    }

    pub fn region(&self) -> ConfigResult<ObservationRegion> {
        let g = self.torus()?;
        match &self.region {
            None => Ok(ObservationRegion::full(g)),
            Some(rects) => ObservationRegion::new(g, rects.iter().map(|r| Rect::new(r.x0, r.x1, r.y0, r.y1)).collect())
                .map_err(|e| e.to_string()),
        }
    }

    pub fn interval(&self) -> ConfigResult<IntervalSet> {
        IntervalSet::new(self.params.interval.clone()).map_err(|e| e.to_string())
    }

    /// Seeds that feed some random stream in this run.
    pub fn seeds(&self) -> Vec<u64> {
        let mut out = vec![self.seed];
        for spec in [Some(&self.potential), self.initial.as_ref()].into_iter().flatten() {
            if let FieldSpec::Random { random } = spec {
                out.push(random.seed);
            }
        }
        out
    }
}

fn parse_call(s: &str) -> ConfigResult<(String, Vec<f64>)> {
    let s = s.trim();
    match s.find('(') {
        None => Ok((s.to_string(), vec![])),
        Some(i) => {
            let name = s[..i].trim().to_string();
            let inner = s[i + 1..].strip_suffix(')').ok_or_else(|| format!("unbalanced preset `{s}`"))?;
            let args = inner
                .split(',')
                .map(|a| a.trim().parse::<f64>().map_err(|_| format!("bad argument `{a}` in preset `{s}`")))
                .collect::<ConfigResult<Vec<f64>>>()?;
            Ok((name, args))
        }
    }
}

fn as_int(x: f64) -> ConfigResult<i64> {
    if x.fract() != 0.0 {
        return Err(format!("expected an integer mode index, got {x}"));
    }
    Ok(x as i64)
}

fn read_coefficients(path: &Path, dims: usize) -> ConfigResult<Vec<(Vec<i64>, Complex64)>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let headers = rdr.headers().map_err(|e| e.to_string())?.clone();
    let want: Vec<&str> = if dims == 2 { vec!["n1", "n2", "re", "im"] } else { vec!["n", "re", "im"] };
    let cols: Vec<usize> = want
        .iter()
        .map(|w| headers.iter().position(|h| h.trim() == *w).ok_or_else(|| format!("{}: missing column `{w}`", path.display())))
        .collect::<ConfigResult<_>>()?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let num = |i: usize| rec[cols[i]].trim().parse::<f64>().map_err(|_| format!("bad number `{}`", &rec[cols[i]]));
        let idx = (0..dims).map(|i| num(i).and_then(as_int)).collect::<ConfigResult<Vec<i64>>>()?;
        out.push((idx, Complex64::new(num(dims)?, num(dims + 1)?)));
    }
    Ok(out)
}

/// Builds a 2D field; presets take their cutoff from the largest mode they touch.
pub fn field_2d(spec: &FieldSpec, g: TorusGeometry) -> ConfigResult<FourierField> {
    let err = |e: toruslab::Error| e.to_string();
    match spec {
        FieldSpec::Preset(s) => {
            let (name, args) = parse_call(s)?;
            match (name.as_str(), args.as_slice()) {
                ("zero", []) => Ok(FourierField::zeros(g, 0)),
                ("mode", [n1, n2]) => {
                    let n = (as_int(*n1)?, as_int(*n2)?);
                    let c = n.0.unsigned_abs().max(n.1.unsigned_abs()) as usize;
                    FourierField::from_modes(g, c, [(n, Complex64::new(1.0, 0.0))]).map_err(err)
                }
                ("cos", [n1, n2, a]) => {
                    let n = (as_int(*n1)?, as_int(*n2)?);
                    let c = n.0.unsigned_abs().max(n.1.unsigned_abs()) as usize;
                    // a cos(w.z) = (a sqrt(AB) / 2) (e_n + e_{-n})
                    let h = Complex64::new(0.5 * a * g.area().sqrt(), 0.0);
                    FourierField::from_modes(g, c, [(n, h), ((-n.0, -n.1), h)]).map_err(err)
                }
                _ => Err(format!("unknown 2D preset `{s}`")),
            }
        }
        FieldSpec::File { file } => {
            let entries = read_coefficients(file, 2)?;
            let c = entries.iter().map(|(n, _)| n[0].unsigned_abs().max(n[1].unsigned_abs())).max().unwrap_or(0) as usize;
            FourierField::from_modes(g, c, entries.into_iter().map(|(n, z)| ((n[0], n[1]), z))).map_err(err)
        }
        FieldSpec::Random { random } => {
            let mut rng = stream(random.seed, "cli/field");
            Ok(if random.tail > 0.0 {
                rough_potential(&mut rng, g, random.cutoff, random.tail, random.l2)
            } else {
                let f = random_field(&mut rng, g, random.cutoff);
                let n = f.l2_norm();
                f.scaled(Complex64::new(random.l2 / n, 0.0))
            })
        }
    }
}

pub fn potential_1d(spec: &FieldSpec) -> ConfigResult<Potential1D> {
    let err = |e: toruslab::Error| e.to_string();
    match spec {
        FieldSpec::Preset(s) => {
            let (name, args) = parse_call(s)?;
            match (name.as_str(), args.as_slice()) {
                ("zero", []) => Ok(Potential1D::zero()),
                ("cos", [m, a]) => Ok(Potential1D::cosine(*a, as_int(*m)?)),
                _ => Err(format!("unknown 1D preset `{s}`")),
            }
        }
        FieldSpec::File { file } => {
            let entries: Vec<(i64, Complex64)> = read_coefficients(file, 1)?.into_iter().map(|(n, z)| (n[0], z)).collect();
            Potential1D::from_modes(&entries).map_err(err)
        }
        FieldSpec::Random { random } => {
            let mut rng = stream(random.seed, "cli/potential1d");
            Ok(Potential1D::rough(&mut rng, random.cutoff, random.tail, random.l2))
        }
    }
}
