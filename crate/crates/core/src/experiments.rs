//! Seeded verification suites.
//!
//! Each suite runs a few fixed trials on closed-form cases followed by
//! `trials` random ones. Trial `i` draws everything from `rng_for(sub_seed(seed, i), attempt)`,
//! so results do not depend on scheduling, and draws hitting the unitary
//! branch cut are redrawn with the next attempt index.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::curves::{
    curve_length, geodesic_residual, perturb_curve, polar_group_geodesic, speed, tangency_residual, Curve,
    PerturbMode, TangentField,
};
use crate::error::{GeoError, Result};
use crate::io::{fmt17, ser_f64, ser_f64_map};
use crate::manifolds::{
    left_exp, polar_dist, spd_dist, unitary_dist, GroupPoint, MetricKind, PolarGeodesic, SpdGeodesic,
    UnitaryGeodesic,
};
use crate::matfun::{
    fro_norm, hermitian_part, identity, matrix_exp, real, real_diag, schatten_norm, CMatrix, SpdMatrix,
    UnitaryMatrix,
};
use crate::sampling::{gaussian_matrix, random_normal_matrix, rng_for, sub_seed, uniform, with_norm, TrialRng};
use crate::subgroups::{
    conjugation_residual, polar_closure_residuals, random_combination, random_group_element_with,
    triple_system_check, validate_algebra, BuiltinKind, SubgroupContext,
};

/// Names accepted by [`run_suite`].
pub const SUITES: [&str; 10] = [
    "closed_form",
    "minimality",
    "bound",
    "minkowski",
    "normal",
    "pnorm",
    "convergence",
    "geodesic",
    "tangency",
    "cartan",
];

const MAX_ATTEMPTS: u64 = 16;

/// Tolerance names and their defaults.
pub const DEFAULT_TOLERANCES: [(&str, f64); 20] = [
    ("closed_form_rtol", 1e-6),
    ("minimality_slack", 1e-4),
    ("strict_gap", 1e-3),
    ("equality", 1e-8),
    ("bound_slack", 1e-9),
    ("minkowski_slack", 1e-8),
    ("normal_gap", 1e-10),
    ("control_gap", 1e-6),
    ("pnorm_slack", 1e-12),
    ("convergence_target", 1e-3),
    ("geodesic_residual", 1e-5),
    ("decay_lo", 3.5),
    ("decay_hi", 4.5),
    ("chord_residual", 1e-2),
    ("tangency", 1e-6),
    ("triple_system", 1e-10),
    ("polar_closure", 1e-8),
    ("conjugation", 1e-10),
    ("chord_gap", 1e-3),
    ("resample_fraction", 0.01),
];

/// Which closed-form geometry a suite exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Manifold {
    Spd,
    Unitary,
    Polar,
}

impl Manifold {
    pub const ALL: [Manifold; 3] = [Manifold::Spd, Manifold::Unitary, Manifold::Polar];

    pub fn as_str(self) -> &'static str {
        match self {
            Manifold::Spd => "spd",
            Manifold::Unitary => "unitary",
            Manifold::Polar => "polar",
        }
    }

    fn metric(self) -> MetricKind {
        match self {
            Manifold::Spd => MetricKind::PositiveCone,
            Manifold::Unitary => MetricKind::LeftInvariant(2.0),
            Manifold::Polar => MetricKind::PolarProduct,
        }
    }

    fn perturb_mode(self) -> PerturbMode {
        match self {
            Manifold::Spd => PerturbMode::Spd,
            Manifold::Unitary => PerturbMode::Group,
            Manifold::Polar => PerturbMode::Polar,
        }
    }
}

impl fmt::Display for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Manifold {
    type Err = GeoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spd" | "positive" => Ok(Manifold::Spd),
            "unitary" => Ok(Manifold::Unitary),
            "polar" => Ok(Manifold::Polar),
            other => Err(GeoError::ConfigInvalid(format!("unknown manifold {other:?} (expected spd, unitary or polar)"))),
        }
    }
}

mod pnorm_serde {
    use super::*;

    pub fn serialize<S: Serializer>(p: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if p.is_infinite() {
            s.serialize_str("inf")
        } else {
            ser_f64(p, s)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => parse_p(&t).map_err(serde::de::Error::custom),
        }
    }
}

/// Parses a Schatten exponent: a number, `inf` or `infinity`.
pub fn parse_p(text: &str) -> Result<f64> {
    match text.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" => Ok(f64::INFINITY),
        other => other.parse::<f64>().map_err(|_| GeoError::ConfigInvalid(format!("bad norm exponent {text:?}"))),
    }
}

/// Parameters shared by all suites. Missing JSON fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialConfig {
    pub group: BuiltinKind,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    #[serde(serialize_with = "ser_f64")]
    pub spread: f64,
    #[serde(serialize_with = "ser_f64_map")]
    pub tolerances: BTreeMap<String, f64>,
    pub panels: usize,
    /// finite-difference step
    #[serde(serialize_with = "ser_f64")]
    pub h: f64,
    /// larger step from which the residual decay ratio is measured
    #[serde(serialize_with = "ser_f64")]
    pub decay_h: f64,
    pub perturbations: usize,
    pub manifold: Manifold,
    #[serde(with = "pnorm_serde")]
    pub p_norm: f64,
    pub grid: usize,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            group: BuiltinKind::FullGl,
            n: 4,
            trials: 100,
            seed: 1,
            spread: 0.8,
            tolerances: BTreeMap::new(),
            panels: crate::curves::DEFAULT_PANELS,
            h: crate::curves::DEFAULT_STEP,
            decay_h: 1e-2,
            perturbations: 10,
            manifold: Manifold::Polar,
            p_norm: 4.0,
            grid: 33,
        }
    }
}

impl TrialConfig {
    /// Checks ranges and fills in every default tolerance.
    pub fn validated(&self) -> Result<TrialConfig> {
        let bad = |m: String| Err(GeoError::ConfigInvalid(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(1..=64).contains(&self.n) {
            return bad(format!("n must be in [1, 64], got {}", self.n));
        }
        if self.group == BuiltinKind::Symplectic && self.n % 2 != 0 {
            return bad(format!("symplectic groups need even n, got {}", self.n));
        }
        if self.group == BuiltinKind::Orthogonal && self.n < 2 {
            return bad("orthogonal groups need n >= 2".into());
        }
        for (name, x) in [("spread", self.spread), ("h", self.h), ("decay_h", self.decay_h)] {
            if !(x > 0.0 && x.is_finite()) {
                return bad(format!("{name} must be positive and finite, got {x}"));
            }
        }
        if self.panels == 0 || self.perturbations == 0 || self.grid < 2 {
            return bad("panels and perturbations must be positive and grid at least 2".into());
        }
        if self.p_norm.is_nan() {
            return bad("p_norm must be a number or \"inf\"".into());
        }
        let mut out = self.clone();
        for (name, x) in &self.tolerances {
            if !DEFAULT_TOLERANCES.iter().any(|(k, _)| k == name) {
                return bad(format!("unknown tolerance {name:?}"));
            }
            if !(*x > 0.0 && x.is_finite()) {
                return bad(format!("tolerance {name} must be positive, got {x}"));
            }
        }
        for (name, x) in DEFAULT_TOLERANCES {
            out.tolerances.entry(name.to_string()).or_insert(x);
        }
        Ok(out)
    }

    pub fn tol(&self, name: &str) -> f64 {
        match self.tolerances.get(name) {
            Some(x) => *x,
            None => DEFAULT_TOLERANCES
                .iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| *v)
                .unwrap_or_else(|| panic!("no tolerance named {name}")),
        }
    }
}

/// One trial's inputs digest, measurements and verdict.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub index: usize,
    /// `random`, or the name of a fixed closed-form case
    pub label: String,
    pub fixed: bool,
    pub inputs_digest: String,
    #[serde(serialize_with = "ser_f64_map")]
    pub values: BTreeMap<String, f64>,
    /// smallest slack over the trial's checks; negative means a violation
    #[serde(serialize_with = "ser_f64")]
    pub margin: f64,
    pub pass: bool,
    pub resampled: u64,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub counters: BTreeMap<String, u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteSummary {
    pub trials: usize,
    pub fixed_trials: usize,
    pub failures: usize,
    pub resampled: u64,
    #[serde(serialize_with = "ser_f64")]
    pub resample_fraction: f64,
    #[serde(serialize_with = "ser_f64")]
    pub min_margin: f64,
    #[serde(serialize_with = "ser_f64_map")]
    pub max_values: BTreeMap<String, f64>,
    #[serde(serialize_with = "ser_f64_map")]
    pub min_values: BTreeMap<String, f64>,
    pub counters: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub config: TrialConfig,
    pub trials: Vec<TrialRecord>,
    pub pass: bool,
    pub summary: SuiteSummary,
    /// SHA-256 of the serialized trial records
    pub records_digest: String,
    pub runtime_ms: u64,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }

    /// One row per trial; value columns are the union of all value names.
    pub fn summary_csv(&self) -> Result<String> {
        let keys: std::collections::BTreeSet<&String> = self.trials.iter().flat_map(|r| r.values.keys()).collect();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> =
            ["index", "label", "fixed", "pass", "margin", "resampled", "inputs_digest"].map(String::from).to_vec();
        header.extend(keys.iter().map(|k| k.to_string()));
        w.write_record(&header).map_err(|e| GeoError::Io(e.to_string()))?;
        for r in &self.trials {
            let mut row = vec![
                r.index.to_string(),
                r.label.clone(),
                r.fixed.to_string(),
                r.pass.to_string(),
                fmt17(r.margin),
                r.resampled.to_string(),
                r.inputs_digest.clone(),
            ];
            row.extend(keys.iter().map(|k| r.values.get(*k).map(|v| fmt17(*v)).unwrap_or_default()));
            w.write_record(&row).map_err(|e| GeoError::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| GeoError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| GeoError::Io(e.to_string()))
    }
}

/// What a single trial measured.
#[derive(Clone, Default)]
struct Outcome {
    hasher: Sha256,
    values: BTreeMap<String, f64>,
    checks: Vec<(&'static str, f64)>,
    counters: BTreeMap<String, u64>,
}

impl Outcome {
    fn input(&mut self, x: &CMatrix) -> &mut Self {
        self.hasher.update(format!("{}x{};", x.nrows(), x.ncols()));
        for z in x.iter() {
            self.hasher.update(fmt17(z.re));
            self.hasher.update(",");
            self.hasher.update(fmt17(z.im));
            self.hasher.update(";");
        }
        self
    }

    fn scalar(&mut self, s: f64) -> &mut Self {
        self.hasher.update(fmt17(s));
        self.hasher.update(";");
        self
    }

    fn value(&mut self, name: &str, x: f64) -> &mut Self {
        self.values.insert(name.to_string(), x);
        self
    }

    /// Records a check; it passes when `margin >= 0`.
    fn check(&mut self, name: &'static str, margin: f64) -> &mut Self {
        self.checks.push((name, margin));
        self
    }

    fn count(&mut self, name: &str) -> &mut Self {
        *self.counters.entry(name.to_string()).or_insert(0) += 1;
        self
    }
}

fn record(index: usize, label: &str, fixed: bool, result: Result<Outcome>, resampled: u64) -> TrialRecord {
    match result {
        Ok(out) => {
            let margin = out.checks.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            let failed: Vec<&str> = out.checks.iter().filter(|c| !(c.1 >= 0.0)).map(|c| c.0).collect();
            TrialRecord {
                index,
                label: label.to_string(),
                fixed,
                inputs_digest: hex::encode(out.hasher.finalize()),
                values: out.values,
                margin: if out.checks.is_empty() { 0.0 } else { margin },
                pass: failed.is_empty(),
                resampled,
                counters: out.counters,
                note: (!failed.is_empty()).then(|| format!("failed checks: {}", failed.join(", "))),
            }
        }
        Err(e) => TrialRecord {
            index,
            label: label.to_string(),
            fixed,
            inputs_digest: String::new(),
            values: BTreeMap::new(),
            margin: f64::NEG_INFINITY,
            pass: false,
            resampled,
            counters: BTreeMap::new(),
            note: Some(format!("{}: {e}", e.name())),
        },
    }
}

/// Runs `f` on a pool capped by `OPGEO_THREADS` when that variable is set.
pub fn with_thread_cap<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let cap = std::env::var("OPGEO_THREADS").ok().and_then(|s| s.trim().parse::<usize>().ok()).filter(|k| *k > 0);
    match cap.and_then(|k| rayon::ThreadPoolBuilder::new().num_threads(k).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

type RandomTrial<'a> = dyn Fn(&mut TrialRng) -> Result<Outcome> + Sync + 'a;

fn run_trials(name: &str, cfg: &TrialConfig, fixed: Vec<(&'static str, Result<Outcome>)>, random: &RandomTrial) -> SuiteReport {
    let start = Instant::now();
    let mut trials: Vec<TrialRecord> =
        fixed.into_iter().enumerate().map(|(i, (label, r))| record(i, label, true, r, 0)).collect();
    let offset = trials.len();
    let random_records: Vec<TrialRecord> = with_thread_cap(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| {
                let base = sub_seed(cfg.seed, i as u64);
                let mut attempt = 0;
                loop {
                    let mut rng = rng_for(base, attempt);
                    match random(&mut rng) {
                        Err(GeoError::BranchCut { .. }) if attempt + 1 < MAX_ATTEMPTS => attempt += 1,
                        r => return record(offset + i, "random", false, r, attempt),
                    }
                }
            })
            .collect()
    });
    trials.extend(random_records);

    let failures = trials.iter().filter(|r| !r.pass).count();
    let resampled: u64 = trials.iter().map(|r| r.resampled).sum();
    let draws = cfg.trials as u64 + resampled;
    let resample_fraction = resampled as f64 / draws as f64;
    let mut max_values = BTreeMap::new();
    let mut min_values = BTreeMap::new();
    let mut counters = BTreeMap::new();
    for r in &trials {
        for (k, v) in &r.values {
            let hi = max_values.entry(k.clone()).or_insert(f64::NEG_INFINITY);
            *hi = f64::max(*hi, *v);
            let lo = min_values.entry(k.clone()).or_insert(f64::INFINITY);
            *lo = f64::min(*lo, *v);
        }
        for (k, c) in &r.counters {
            *counters.entry(k.clone()).or_insert(0) += c;
        }
    }
    let min_margin = trials.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    let records_digest = hex::encode(Sha256::digest(
        serde_json::to_string(&trials).expect("record serialization is infallible").as_bytes(),
    ));
    let pass = failures == 0 && resample_fraction <= cfg.tol("resample_fraction");
    SuiteReport {
        suite: name.to_string(),
        config: cfg.clone(),
        trials,
        pass,
        summary: SuiteSummary {
            trials: cfg.trials,
            fixed_trials: offset,
            failures,
            resampled,
            resample_fraction,
            min_margin,
            max_values,
            min_values,
            counters,
        },
        records_digest,
        runtime_ms: start.elapsed().as_millis() as u64,
    }
}

/// `c(p, q) = (2 max{e^{4 |ln v|} (|p| |p^{-1}|)^2, |p| |p^{-1}|})^{1/2}` with
/// `v = |p|^{-1/2} |q| |p|^{-1/2}` and operator norms throughout.
pub fn bound_constant(p: &GroupPoint, q: &GroupPoint) -> Result<f64> {
    crate::matfun::check_same_dim(p.matrix(), q.matrix())?;
    let pa = p.modulus();
    let isq = pa.inv_sqrt();
    let v = SpdMatrix::new(hermitian_part(&(&isq * q.modulus().as_matrix() * &isq)))?;
    let ln_v = v.eigen().values.iter().map(|l| l.ln().abs()).fold(0.0, f64::max);
    let kappa = pa.eigen().max() / pa.eigen().min();
    Ok((2.0 * f64::max((4.0 * ln_v).exp() * kappa * kappa, kappa)).sqrt())
}

/// The uniform cap `2 max{e^4 k^2, k}` on `c^2` near `x`, `k = |x| |x^{-1}|`.
pub fn bound_cap(x: &GroupPoint) -> f64 {
    let kappa = x.condition();
    2.0 * f64::max((4.0f64).exp() * kappa * kappa, kappa)
}

/// A random pair together with its closed-form distance and geodesic.
enum Pair {
    Spd(SpdMatrix, SpdMatrix),
    Unitary(UnitaryMatrix, UnitaryMatrix),
    Polar(GroupPoint, GroupPoint),
}

impl Pair {
    fn sample(ctx: &SubgroupContext, manifold: Manifold, rng: &mut TrialRng, spread: f64) -> Result<Pair> {
        let p = random_group_element_with(&ctx.spec, rng, spread)?;
        let q = random_group_element_with(&ctx.spec, rng, spread)?;
        let pair = match manifold {
            Manifold::Spd => Pair::Spd(p.modulus().clone(), q.modulus().clone()),
            Manifold::Unitary => Pair::Unitary(p.unitary().clone(), q.unitary().clone()),
            Manifold::Polar => Pair::Polar(p, q),
        };
        // surfaces BranchCut before any work is done
        pair.dist()?;
        Ok(pair)
    }

    fn dist(&self) -> Result<f64> {
        match self {
            Pair::Spd(p, q) => spd_dist(p, q),
            Pair::Unitary(u, w) => unitary_dist(u, w),
            Pair::Polar(p, q) => polar_dist(p, q),
        }
    }

    fn geodesic(&self) -> Result<Curve> {
        Ok(match self {
            Pair::Spd(p, q) => Curve::spd_geodesic(SpdGeodesic::new(p, q)?),
            Pair::Unitary(u, w) => Curve::unitary_geodesic(UnitaryGeodesic::new(u, w)?),
            Pair::Polar(p, q) => Curve::polar_geodesic(PolarGeodesic::new(p, q)?),
        })
    }

    fn digest(&self, out: &mut Outcome) {
        let (a, b) = match self {
            Pair::Spd(p, q) => (p.as_matrix(), q.as_matrix()),
            Pair::Unitary(u, w) => (u.as_matrix(), w.as_matrix()),
            Pair::Polar(p, q) => (p.matrix(), q.matrix()),
        };
        out.input(a).input(b);
    }
}

/// A deterministic, moderately conditioned pair for fixed trials.
fn fixed_pair(ctx: &SubgroupContext, manifold: Manifold) -> Result<Pair> {
    let mut rng = rng_for(0x00f1_7ed0, ctx.dim() as u64);
    Pair::sample(ctx, manifold, &mut rng, 0.7)
}

fn rel_gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn closed_form(cfg: &TrialConfig, ctx: &SubgroupContext) -> SuiteReport {
    let manifold = cfg.manifold;
    let rtol = cfg.tol("closed_form_rtol");
    let measure = |pair: &Pair| -> Result<Outcome> {
        let mut out = Outcome::default();
        pair.digest(&mut out);
        let d = pair.dist()?;
        let l = curve_length(&pair.geodesic()?.with_panels(cfg.panels), manifold.metric())?;
        out.value("distance", d).value("length", l);
        if d == 0.0 {
            // coincident endpoints: the length is pure rounding
            out.check("zero_length", 1e-12 - l);
        } else {
            let rel = rel_gap(d, l);
            out.value("relative_error", rel).check("closed_form", rtol - rel);
        }
        Ok(out)
    };
    let same = fixed_pair(ctx, manifold).and_then(|pair| {
        let twin = match pair {
            Pair::Spd(p, _) => Pair::Spd(p.clone(), p),
            Pair::Unitary(u, _) => Pair::Unitary(u.clone(), u),
            Pair::Polar(p, _) => Pair::Polar(p.clone(), p),
        };
        measure(&twin)
    });
    run_trials("closed_form", cfg, vec![("p_equals_q", same)], &|rng| {
        measure(&Pair::sample(ctx, manifold, rng, cfg.spread)?)
    })
}

const AMPLITUDES: [f64; 3] = [0.05, 0.2, 0.5];

/// Two fixed non-commuting positive matrices, padded with the identity.
fn noncommuting_spd(n: usize) -> Result<(SpdMatrix, SpdMatrix)> {
    let mut p = identity(n);
    let mut q = identity(n);
    p[(0, 0)] = real(1.0);
    p[(1, 1)] = real(4.0);
    q[(0, 0)] = real(2.0);
    q[(1, 1)] = real(2.0);
    q[(0, 1)] = real(1.0);
    q[(1, 0)] = real(1.0);
    Ok((SpdMatrix::new(p)?, SpdMatrix::new(q)?))
}

fn minimality(cfg: &TrialConfig, ctx: &SubgroupContext) -> SuiteReport {
    let manifold = cfg.manifold;
    let metric = manifold.metric();
    let slack = cfg.tol("minimality_slack");
    let gap = cfg.tol("strict_gap");
    let mut fixed = Vec::new();
    let equality = fixed_pair(ctx, manifold).and_then(|pair| {
        let mut out = Outcome::default();
        pair.digest(&mut out);
        let d = pair.dist()?;
        let base = pair.geodesic()?.with_panels(cfg.panels);
        let same = perturb_curve(&base, 0, 0.0, manifold.perturb_mode())?;
        let l = curve_length(&same, metric)?;
        out.value("distance", d).value("length", l).check("amplitude_zero", cfg.tol("equality") - (l - d).abs());
        Ok(out)
    });
    fixed.push(("amplitude_zero", equality));
    if manifold == Manifold::Spd && cfg.n >= 2 {
        let chord = noncommuting_spd(cfg.n).and_then(|(p, q)| {
            let mut out = Outcome::default();
            out.input(p.as_matrix()).input(q.as_matrix());
            let d = spd_dist(&p, &q)?;
            let c = Curve::chord(p.as_matrix().clone(), q.as_matrix().clone()).with_panels(cfg.panels);
            let l = curve_length(&c, metric)?;
            out.value("distance", d).value("length", l).check("chord_longer", l - d - cfg.tol("chord_gap"));
            Ok(out)
        });
        fixed.push(("chord", chord));
    }
    run_trials("minimality", cfg, fixed, &|rng| {
        let pair = Pair::sample(ctx, manifold, rng, cfg.spread)?;
        let mut out = Outcome::default();
        pair.digest(&mut out);
        let d = pair.dist()?;
        let base = pair.geodesic()?.with_panels(cfg.panels);
        let seed = rng_seed(rng);
        let mut worst = f64::INFINITY;
        let mut worst_strict = f64::INFINITY;
        for j in 0..cfg.perturbations {
            let amp = AMPLITUDES[j % AMPLITUDES.len()];
            let c = perturb_curve(&base, sub_seed(seed, j as u64), amp, manifold.perturb_mode())?;
            let l = curve_length(&c, metric)?;
            worst = worst.min(l - (d - slack));
            if amp == 0.5 {
                worst_strict = worst_strict.min(l - d - gap);
            }
        }
        out.scalar(seed as f64).value("distance", d).value("min_excess", worst - slack).check("not_shorter", worst);
        if worst_strict.is_finite() {
            out.value("min_excess_at_half", worst_strict + gap).check("strictly_longer", worst_strict);
        }
        Ok(out)
    })
}

fn rng_seed(rng: &mut TrialRng) -> u64 {
    use rand::Rng;
    rng.next_u64()
}

fn bound(cfg: &TrialConfig, ctx: &SubgroupContext) -> SuiteReport {
    let slack = cfg.tol("bound_slack");
    let grid = cfg.grid;
    let measure = |p: &GroupPoint, q: &GroupPoint| -> Result<Outcome> {
        let mut out = Outcome::default();
        out.input(p.matrix()).input(q.matrix());
        let c = bound_constant(p, q)?;
        let d = polar_dist(p, q)?;
        let curve = Curve::polar_geodesic(PolarGeodesic::new(p, q)?).with_panels(cfg.panels);
        let l = curve_length(&curve, MetricKind::LeftInvariant(2.0))?;
        let rhs = c * d;
        let mut pointwise = f64::INFINITY;
        for i in 0..grid {
            let t = i as f64 / (grid - 1) as f64;
            let s = speed(MetricKind::LeftInvariant(2.0), &curve.at(t), &curve.velocity(t))?;
            pointwise = pointwise.min(rhs + slack - s);
        }
        out.value("c", c)
            .value("c_reversed", bound_constant(q, p)?)
            .value("polar_distance", d)
            .value("left_length", l)
            .value("tightness", if rhs > 0.0 { l / rhs } else { 0.0 })
            .check("length_bound", rhs + slack - l)
            .check("pointwise_bound", pointwise);
        Ok(out)
    };
    let fixed = fixed_pair(ctx, Manifold::Polar).and_then(|pair| match pair {
        Pair::Polar(p, _) => measure(&p, &p),
        _ => unreachable!(),
    });
    run_trials("bound", cfg, vec![("p_equals_q", fixed)], &|rng| {
        let p = random_group_element_with(&ctx.spec, rng, cfg.spread)?;
        let q = random_group_element_with(&ctx.spec, rng, cfg.spread)?;
        measure(&p, &q)
    })
}

/// `beta_1(t) = e^{t z_1} e^{sin(pi t) z_2}` in `K` and
/// `beta_2(t) = e^{t y_1 / 2} e^{sin(2 pi t) y_2} e^{t y_1 / 2}` in `M_G`.
fn factored_curves(z1: CMatrix, z2: CMatrix, y1: CMatrix, y2: CMatrix, panels: usize) -> (Curve, Curve) {
    let pi = std::f64::consts::PI;
    let (za, zb) = (z1.clone(), z2.clone());
    let unitary = Curve::new(move |t| matrix_exp(&za.map(|z| z * t)) * matrix_exp(&zb.map(|z| z * (pi * t).sin())))
        .with_velocity(move |t| {
            let a = matrix_exp(&z1.map(|z| z * t));
            let b = matrix_exp(&z2.map(|z| z * (pi * t).sin()));
            &z1 * &a * &b + &a * &z2 * &b * real(pi * (pi * t).cos())
        })
        .with_panels(panels);
    let (ya, yb) = (y1.clone(), y2.clone());
    let positive = Curve::new(move |t| {
        let e = matrix_exp(&ya.map(|z| z * (0.5 * t)));
        hermitian_part(&(&e * matrix_exp(&yb.map(|z| z * (2.0 * pi * t).sin())) * &e))
    })
    .with_velocity(move |t| {
        let e = matrix_exp(&y1.map(|z| z * (0.5 * t)));
        let m = matrix_exp(&y2.map(|z| z * (2.0 * pi * t).sin()));
        let x = &e * &m * &e;
        let half = y1.map(|z| z * 0.5);
        &half * &x + &x * &half + &e * &y2 * &m * &e * real(2.0 * pi * (2.0 * pi * t).cos())
    })
    .with_panels(panels);
    (unitary, positive)
}

fn minkowski(cfg: &TrialConfig, ctx: &SubgroupContext) -> SuiteReport {
    let n = ctx.dim();
    let slack = cfg.tol("minkowski_slack");
    let eq = cfg.tol("equality");
    let (kb, mb) = (&ctx.split.k_basis, &ctx.split.m_basis);
    let measure = |z1: CMatrix, z2: CMatrix, y1: CMatrix, y2: CMatrix, expect: Option<usize>| -> Result<Outcome> {
        let mut out = Outcome::default();
        out.input(&z1).input(&z2).input(&y1).input(&y2);
        let (b1, b2) = factored_curves(z1, z2, y1, y2, cfg.panels);
        let l1 = curve_length(&b1, MetricKind::LeftInvariant(2.0))?;
        let l2 = curve_length(&b2, MetricKind::PositiveCone)?;
        let lp = curve_length(&b1.product(&b2), MetricKind::PolarProduct)?;
        out.value("unitary_length", l1)
            .value("positive_length", l2)
            .value("polar_length", lp)
            .check("minkowski", lp * lp - (l1 * l1 + l2 * l2) + slack);
        match expect {
            Some(1) => out.check("equals_unitary_length", eq - (lp - l1).abs()),
            Some(2) => out.check("equals_positive_length", eq - (lp - l2).abs()),
            _ => &mut out,
        };
        Ok(out)
    };
    let zero = CMatrix::zeros(n, n);
    let mut rng = rng_for(0x00f1_7ed1, n as u64);
    let (z1, z2) = (random_combination(kb, n, &mut rng, 0.9), random_combination(kb, n, &mut rng, 0.6));
    let (y1, y2) = (random_combination(mb, n, &mut rng, 0.9), random_combination(mb, n, &mut rng, 0.6));
    let fixed = vec![
        ("constant_positive_factor", measure(z1, z2, zero.clone(), zero.clone(), Some(1))),
        ("constant_unitary_factor", measure(zero.clone(), zero, y1, y2, Some(2))),
    ];
    run_trials("minkowski", cfg, fixed, &|rng| {
        let s = cfg.spread;
        let z1 = random_combination(kb, n, rng, s);
        let z2 = random_combination(kb, n, rng, s);
        let y1 = random_combination(mb, n, rng, s);
        let y2 = random_combination(mb, n, rng, s);
        measure(z1, z2, y1, y2, None)
    })
}

/// `sup_t |e^{t v*} e^{t (v - v*)} - e^{tx} e^{ty}|_2` over the grid.
fn normal_gap(ctx: &SubgroupContext, v: &CMatrix, grid: usize) -> Result<(f64, f64)> {
    let one = GroupPoint::identity(ctx.dim());
    let mut gap = 0.0f64;
    let mut direct = 0.0f64;
    for i in 0..grid {
        let t = i as f64 / (grid - 1) as f64;
        let tv = v.map(|z| z * t);
        let left = left_exp(&one, &tv)?;
        let polar = polar_group_geodesic(ctx, v, t)?;
        gap = gap.max(fro_norm(&(left.matrix() - polar.matrix())));
        direct = direct.max(fro_norm(&(polar.matrix() - matrix_exp(&tv))));
    }
    Ok((gap, direct))
}

fn normal(cfg: &TrialConfig, ctx: &SubgroupContext) -> SuiteReport {
    let n = ctx.dim();
    let tol = cfg.tol("normal_gap");
    let control = cfg.tol("control_gap");
    let measure = |v: &CMatrix| -> Result<Outcome> {
        let mut out = Outcome::default();
        out.input(v);
        let (gap, direct) = normal_gap(ctx, v, cfg.grid)?;
        out.value("gap", gap).value("exp_gap", direct).check("coincide", tol - gap);
        Ok(out)
    };
    let mut fixed = Vec::new();
    if let Some(m) = ctx.split.m_basis.first() {
        fixed.push(("hermitian", measure(m)));
    }
    if let Some(k) = ctx.split.k_basis.first() {
        fixed.push(("anti_hermitian", measure(k)));
    }
    let full = ctx.spec.real_dim() == 2 * n * n;
    run_trials("normal", cfg, fixed, &|rng| {
        // normal elements: u diag(d) u* in gl(n); otherwise pure k or pure m elements
        let v = if full {
            random_normal_matrix(rng, n, cfg.spread / (n as f64).sqrt())
        } else if ctx.split.m_basis.is_empty() || uniform(rng, 0.0, 1.0) < 0.5 {
            random_combination(&ctx.split.k_basis, n, rng, cfg.spread)
        } else {
            random_combination(&ctx.split.m_basis, n, rng, cfg.spread)
        };
        let mut out = measure(&v)?;
        // negative control: a generic (non-normal) element of the algebra
        let w = with_norm(&ctx.spec.random_element(rng, 1.0), cfg.spread);
        let (cgap, _) = normal_gap(ctx, &w, cfg.grid)?;
        out.input(&w).value("control_gap", cgap);
        if cgap > control {
            out.count("control_exceeded");
        }
        Ok(out)
    })
}

fn pnorm(cfg: &TrialConfig) -> Result<SuiteReport> {
    let p = cfg.p_norm;
    if p.is_nan() || p < 2.0 {
        return Err(GeoError::InvalidP(p));
    }
    let n = cfg.n;
    let slack = cfg.tol("pnorm_slack");
    let exponent = if p.is_infinite() { 0.5 } else { 0.5 - 1.0 / p };
    let cn = (n as f64).powf(exponent);
    let extremal = |x: CMatrix, upper: bool| -> Result<Outcome> {
        let mut out = Outcome::default();
        out.input(&x).scalar(p);
        let two = schatten_norm(&x, 2.0)?;
        let np = schatten_norm(&x, p)?;
        let ratio = two / np;
        out.value("ratio", ratio);
        if upper {
            out.check("upper_attained", slack * cn - (ratio - cn).abs());
        } else {
            out.check("lower_attained", slack - (ratio - 1.0).abs());
        }
        Ok(out)
    };
    let mut rank_one = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            rank_one[(i, j)] = real((i + 1) as f64 * (n - j) as f64 / (n * n) as f64);
        }
    }
    let fixed = vec![("identity", extremal(identity(n), true)), ("rank_one", extremal(rank_one, false))];
    Ok(run_trials("pnorm", cfg, fixed, &|rng| {
        let x = with_norm(&gaussian_matrix(rng, n), cfg.spread);
        let mut out = Outcome::default();
        out.input(&x).scalar(p);
        let two = schatten_norm(&x, 2.0)?;
        let np = schatten_norm(&x, p)?;
        out.value("lower_ratio", np / two)
            .value("upper_ratio", two / (cn * np))
            .check("p_below_2", two + slack - np)
            .check("2_below_scaled_p", cn * np + slack - two);
        // a smooth curve e^{ta} e^{t^2 b}
        let a = gaussian_matrix(rng, n).map(|z| z * (cfg.spread / n as f64));
        let b = gaussian_matrix(rng, n).map(|z| z * (cfg.spread / n as f64));
        out.input(&a).input(&b);
        let (a2, b2) = (a.clone(), b.clone());
        let c = Curve::new(move |t| matrix_exp(&a.map(|z| z * t)) * matrix_exp(&b.map(|z| z * (t * t))))
            .with_velocity(move |t| {
                let ea = matrix_exp(&a2.map(|z| z * t));
                let eb = matrix_exp(&b2.map(|z| z * (t * t)));
                &a2 * &ea * &eb + &ea * &b2 * &eb * real(2.0 * t)
            })
            .with_panels(cfg.panels.min(16));
        let l2 = curve_length(&c, MetricKind::LeftInvariant(2.0))?;
        let lp = curve_length(&c, MetricKind::LeftInvariant(p))?;
        let cslack = slack * l2.max(1.0);
        out.value("length_2", l2)
            .value("length_p", lp)
            .check("curve_p_below_2", l2 + cslack - lp)
            .check("curve_2_below_scaled_p", cn * lp + cslack - l2);
        Ok(out)
    }))
}

/// `s > 0` with `|x (e^{s w} - 1)|_2 = target`.
fn step_to_distance(x: &CMatrix, w: &CMatrix, target: f64) -> CMatrix {
    let n = x.nrows();
    let f = |s: f64| fro_norm(&(x * (matrix_exp(&w.map(|z| z * s)) - identity(n))));
    let mut s = target / fro_norm(&(x * w));
    for _ in 0..60 {
        let fs = f(s);
        if (fs / target - 1.0).abs() < 1e-14 {
            break;
        }
        s *= target / fs;
    }
    x * matrix_exp(&w.map(|z| z * s))
}

const CONVERGENCE_STEPS: usize = 12;

fn convergence(cfg: &TrialConfig, ctx: &SubgroupContext) -> SuiteReport {
    let target = cfg.tol("convergence_target");
    let measure = |x: &GroupPoint, seq: &[GroupPoint]| -> Result<Outcome> {
        let mut out = Outcome::default();
        out.input(x.matrix());
        let cap = bound_cap(x);
        let mut estimates = Vec::with_capacity(seq.len());
        let mut worst_cap = f64::INFINITY;
        let mut max_c_sq = 0.0f64;
        for xk in seq {
            out.input(xk.matrix());
            let c = bound_constant(x, xk)?;
            worst_cap = worst_cap.min(cap * (1.0 + 1e-12) - c * c);
            max_c_sq = max_c_sq.max(c * c);
            estimates.push(c * polar_dist(x, xk)?);
        }
        let mut monotone = f64::INFINITY;
        let mut ratios = (f64::INFINITY, 0.0f64);
        for w in estimates.windows(2) {
            monotone = monotone.min(w[0] - w[1]);
            if w[1] > 0.0 {
                ratios = (ratios.0.min(w[0] / w[1]), ratios.1.max(w[0] / w[1]));
            }
        }
        let last = *estimates.last().expect("nonempty sequence");
        out.value("first_estimate", estimates[0])
            .value("last_estimate", last)
            .value("cap", cap)
            .value("max_c_squared", max_c_sq)
            .check("under_cap", worst_cap)
            .check("monotone", monotone)
            .check("small_at_end", target - last);
        if ratios.1 > 0.0 {
            out.value("min_decrease_factor", ratios.0).value("max_decrease_factor", ratios.1);
        }
        Ok(out)
    };
    let fixed = fixed_pair(ctx, Manifold::Polar).and_then(|pair| match pair {
        Pair::Polar(x, _) => measure(&x, &vec![x.clone(); CONVERGENCE_STEPS]),
        _ => unreachable!(),
    });
    run_trials("convergence", cfg, vec![("constant_sequence", fixed)], &|rng| {
        let x = random_group_element_with(&ctx.spec, rng, cfg.spread)?;
        let w = with_norm(&ctx.spec.random_element(rng, 1.0), 1.0);
        let seq = (1..=CONVERGENCE_STEPS)
            .map(|k| GroupPoint::new(step_to_distance(x.matrix(), &w, 0.5f64.powi(k as i32))))
            .collect::<Result<Vec<_>>>()?;
        measure(&x, &seq)
    })
}

fn geodesic(cfg: &TrialConfig, ctx: &SubgroupContext) -> SuiteReport {
    let n = ctx.dim();
    let tol = cfg.tol("geodesic_residual");
    let (lo, hi) = (cfg.tol("decay_lo"), cfg.tol("decay_hi"));
    let spd_metric = MetricKind::PositiveCone;
    let left_metric = MetricKind::LeftInvariant(2.0);
    let measure = |c: &Curve, metric: MetricKind, name: &'static str, out: &mut Outcome| -> Result<()> {
        let r = geodesic_residual(&c.clone().with_step(cfg.h), metric, cfg.grid)?;
        let r1 = geodesic_residual(&c.clone().with_step(cfg.decay_h), metric, cfg.grid)?;
        let r2 = geodesic_residual(&c.clone().with_step(cfg.decay_h / 2.0), metric, cfg.grid)?;
        let ratio = r1 / r2;
        out.value(&format!("{name}_residual"), r).value(&format!("{name}_decay_ratio"), ratio);
        out.check(if name == "spd" { "spd_residual" } else { "left_residual" }, tol - r);
        out.check(if name == "spd" { "spd_decay" } else { "left_decay" }, (ratio - lo).min(hi - ratio));
        Ok(())
    };
    let mut fixed = Vec::new();
    let constant = (|| {
        let mut out = Outcome::default();
        let x = real_diag(&(1..=n).map(|i| i as f64).collect::<Vec<_>>());
        out.input(&x);
        let c = Curve::constant(x);
        let r = geodesic_residual(&c, spd_metric, cfg.grid)?.max(geodesic_residual(&c, left_metric, cfg.grid)?);
        out.value("residual", r).check("zero", -r);
        Ok(out)
    })();
    fixed.push(("constant", constant));
    if n >= 2 {
        let chord = noncommuting_spd(n).and_then(|(p, q)| {
            let mut out = Outcome::default();
            out.input(p.as_matrix()).input(q.as_matrix());
            let c = Curve::chord(p.as_matrix().clone(), q.as_matrix().clone()).with_step(cfg.h);
            let r = geodesic_residual(&c, spd_metric, cfg.grid)?;
            out.value("residual", r).check("not_geodesic", r - cfg.tol("chord_residual"));
            Ok(out)
        });
        fixed.push(("chord", chord));
    }
    run_trials("geodesic", cfg, fixed, &|rng| {
        let mut out = Outcome::default();
        let p = random_group_element_with(&ctx.spec, rng, cfg.spread)?;
        let q = random_group_element_with(&ctx.spec, rng, cfg.spread)?;
        out.input(p.modulus().as_matrix()).input(q.modulus().as_matrix());
        let spd = Curve::spd_geodesic(SpdGeodesic::new(p.modulus(), q.modulus())?);
        measure(&spd, spd_metric, "spd", &mut out)?;
        let v = with_norm(&ctx.spec.random_element(rng, 1.0), cfg.spread);
        out.input(p.matrix()).input(&v);
        let left = Curve::left_exp_ray(p.matrix().clone(), v);
        measure(&left, left_metric, "left", &mut out)?;
        Ok(out)
    })
}

fn tangency(cfg: &TrialConfig, ctx: &SubgroupContext) -> SuiteReport {
    let n = ctx.dim();
    let tol = cfg.tol("tangency");
    let fixed = (|| {
        let mut out = Outcome::default();
        let w = ctx.spec.orthonormal_basis()[0].clone();
        out.input(&w);
        let c = Curve::constant(identity(n)).with_step(cfg.h);
        let eta = TangentField::new(move |t| w.map(|z| z * t));
        let r = tangency_residual(&c, &eta, &ctx.spec, cfg.grid)?;
        out.value("residual", r).check("tangent", tol - r);
        Ok(out)
    })();
    run_trials("tangency", cfg, vec![("linear_field_at_identity", fixed)], &|rng| {
        let mut out = Outcome::default();
        let v1 = ctx.spec.random_element(rng, cfg.spread);
        let v2 = ctx.spec.random_element(rng, cfg.spread);
        let w = ctx.spec.random_element(rng, 1.0);
        out.input(&v1).input(&v2).input(&w);
        let c = Curve::exp_ray(v1).product(&Curve::exp_ray(v2)).with_step(cfg.h);
        let velocity = tangency_residual(&c, &TangentField::velocity_of(&c), &ctx.spec, cfg.grid)?;
        let translated = tangency_residual(&c, &TangentField::left_translate(&c, w), &ctx.spec, cfg.grid)?;
        out.value("velocity_field_residual", velocity)
            .value("translated_field_residual", translated)
            .check("velocity_field", tol - velocity)
            .check("translated_field", tol - translated);
        Ok(out)
    })
}

fn cartan(cfg: &TrialConfig, ctx: &SubgroupContext) -> SuiteReport {
    let n = ctx.dim();
    let structure = (|| {
        let mut out = Outcome::default();
        for b in ctx.spec.basis() {
            out.input(b);
        }
        let v = validate_algebra(&ctx.spec);
        let t = triple_system_check(&ctx.split);
        let (k, m) = ctx.split.dims();
        out.value("bracket_residual", v.bracket_residual)
            .value("adjoint_residual", v.adjoint_residual)
            .value("triple_system_residual", t.max_residual)
            .value("dim_k", k as f64)
            .value("dim_m", m as f64)
            .check("closed", cfg.tol("triple_system") - v.bracket_residual.max(v.adjoint_residual))
            .check("triple_system", cfg.tol("triple_system") - t.max_residual);
        Ok(out)
    })();
    run_trials("cartan", cfg, vec![("structure", structure)], &|rng| {
        let mut out = Outcome::default();
        let g = random_group_element_with(&ctx.spec, rng, cfg.spread)?;
        out.input(g.matrix());
        let (rk, rm) = polar_closure_residuals(&ctx.split, &g)?;
        let k = random_combination(&ctx.split.k_basis, n, rng, 2.0);
        out.input(&k);
        let conj = ctx.split.m_basis.iter().map(|x| conjugation_residual(&ctx.split, &k, x)).fold(0.0, f64::max);
        let closure = cfg.tol("polar_closure");
        out.value("unitary_log_residual", rk)
            .value("modulus_log_residual", rm)
            .value("conjugation_residual", conj)
            .check("unitary_factor_in_k", closure - rk)
            .check("modulus_in_m", closure - rm)
            .check("conjugation", cfg.tol("conjugation") - conj);
        Ok(out)
    })
}

/// Resolves a suite name or alias to its canonical name.
pub fn canonical_suite(name: &str) -> Option<&'static str> {
    let canon = match name {
        "normal_coincidence" => "normal",
        "pnorm_equivalence" | "p_norm" => "pnorm",
        "convergence_proxy" => "convergence",
        "closed-form" | "closedform" => "closed_form",
        "totally_geodesic" => "tangency",
        other => other,
    };
    SUITES.iter().copied().find(|s| *s == canon)
}

/// Runs the named suite; the report is a deterministic function of `(name, cfg)`
/// apart from `runtime_ms`.
pub fn run_suite(name: &str, cfg: &TrialConfig) -> Result<SuiteReport> {
    let suite = canonical_suite(name).ok_or_else(|| GeoError::UnknownSuite(name.to_string()))?;
    let cfg = cfg.validated()?;
    if suite == "pnorm" {
        return pnorm(&cfg);
    }
    let ctx = SubgroupContext::builtin(cfg.group, cfg.n)?;
    Ok(match suite {
        "closed_form" => closed_form(&cfg, &ctx),
        "minimality" => minimality(&cfg, &ctx),
        "bound" => bound(&cfg, &ctx),
        "minkowski" => minkowski(&cfg, &ctx),
        "normal" => normal(&cfg, &ctx),
        "convergence" => convergence(&cfg, &ctx),
        "geodesic" => geodesic(&cfg, &ctx),
        "tangency" => tangency(&cfg, &ctx),
        "cartan" => cartan(&cfg, &ctx),
        _ => unreachable!("suite list and dispatch disagree"),
    })
}
