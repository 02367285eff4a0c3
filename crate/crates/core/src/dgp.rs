//! Simulators for the four benchmark data-generating processes.
//!
//! Every process is driven by an exogenous AR(1) covariate `x_t = phi x_{t-1} + u_t` and
//! uses the feature vector `X_t = (Y_{t-1}, ..., Y_{t-p}, x_{t-1})`:
//!
//! | kind | task | p | mean function `f(X_t)` |
//! |------|------|---|------------------------|
//! | DGP1 | regression | 3 | `1 - 0.2 y1 + 0.3 y2 + 0.25 y3 - 0.6 / (1 + x^2)` |
//! | DGP2 | regression | 1 | `0.5 + (-0.4 + 0.25 exp(-2 y1^2)) y1 + 1.5 x` |
//! | DGP3 | binary | 1 | `-0.15 + (0.1 - 0.2 exp(-0.5 y1^2)) y1 + 0.25 / (1 + x^2)` |
//! | DGP4 | binary | 2 | `0.1 + 0.15 y1 - 0.25 y2 - 0.2 exp(-x^2)` |
//!
//! Regression targets are `f(X_t) + e_t`; binary targets are `+1` with probability
//! `(1 + f(X_t)) / 2` and `-1` otherwise. Both `u_t` and `e_t` are standardized uniform:
//! `U[-2, 2]` divided by its standard deviation `2/sqrt(3)`.

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    Regression,
    Binary,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Regression => "regression",
            Task::Binary => "binary",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DgpKind {
    Dgp1,
    Dgp2,
    Dgp3,
    Dgp4,
}

impl DgpKind {
    pub const ALL: [DgpKind; 4] = [DgpKind::Dgp1, DgpKind::Dgp2, DgpKind::Dgp3, DgpKind::Dgp4];

    /// Number of lagged responses in the feature vector.
    pub fn lag_order(self) -> usize {
        match self {
            DgpKind::Dgp1 => 3,
            DgpKind::Dgp2 | DgpKind::Dgp3 => 1,
            DgpKind::Dgp4 => 2,
        }
    }

    /// `p + 1`: lags plus the exogenous covariate.
    pub fn feature_dim(self) -> usize {
        self.lag_order() + 1
    }

    pub fn task(self) -> Task {
        match self {
            DgpKind::Dgp1 | DgpKind::Dgp2 => Task::Regression,
            DgpKind::Dgp3 | DgpKind::Dgp4 => Task::Binary,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DgpKind::Dgp1 => "DGP1",
            DgpKind::Dgp2 => "DGP2",
            DgpKind::Dgp3 => "DGP3",
            DgpKind::Dgp4 => "DGP4",
        }
    }

    fn require(self, task: Task) -> Result<()> {
        if self.task() == task {
            Ok(())
        } else {
            Err(Error::WrongTask {
                kind: self.name().into(),
                task: self.task().name(),
                required: task.name(),
            })
        }
    }
}

impl fmt::Display for DgpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DgpKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "DGP1" | "1" => Ok(DgpKind::Dgp1),
            "DGP2" | "2" => Ok(DgpKind::Dgp2),
            "DGP3" | "3" => Ok(DgpKind::Dgp3),
            "DGP4" | "4" => Ok(DgpKind::Dgp4),
            other => Err(Error::Parse(format!("unknown DGP '{other}'"))),
        }
    }
}

/// Knobs of the simulators.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    /// Steps simulated from zero initial conditions and then discarded.
    pub burn_in: usize,
    /// AR(1) coefficient of the exogenous covariate.
    pub exog_phi: f64,
    /// Multiplier on the regression innovations; 0 gives the noiseless skeleton.
    pub noise_scale: f64,
    /// Replaces the AR(1) covariate by a constant when set.
    pub frozen_exog: Option<f64>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            burn_in: 1000,
            exog_phi: 0.5,
            noise_scale: 1.0,
            frozen_exog: None,
        }
    }
}

/// Standard deviation of `U[-2, 2]`.
const UNIFORM_SD: f64 = 1.154_700_538_379_251_5; // 2 / sqrt(3)

/// Draws `U[-2, 2] / (2 / sqrt(3))`: mean 0, variance 1.
#[derive(Debug, Clone, Copy)]
pub struct StandardizedUniform {
    inner: Uniform<f64>,
}

impl StandardizedUniform {
    pub fn new() -> Self {
        Self {
            inner: Uniform::new_inclusive(-2.0, 2.0),
        }
    }
}

impl Default for StandardizedUniform {
    fn default() -> Self {
        Self::new()
    }
}

impl Distribution<f64> for StandardizedUniform {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.inner.sample(rng) / UNIFORM_SD
    }
}

const EXOG_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn exog_path(total: usize, seed: u64, cfg: &SimulationConfig) -> Vec<f64> {
    if let Some(c) = cfg.frozen_exog {
        return vec![c; total];
    }
    let mut rng = rng_for(seed, EXOG_STREAM);
    let dist = StandardizedUniform::new();
    let mut prev = 0.0;
    (0..total)
        .map(|_| {
            prev = cfg.exog_phi * prev + dist.sample(&mut rng);
            prev
        })
        .collect()
}

/// Exogenous AR(1) covariate of length `n` with the default configuration.
pub fn simulate_exog_ar1(n: usize, seed: u64) -> Vec<f64> {
    simulate_exog_ar1_with(n, seed, &SimulationConfig::default())
}

/// Exogenous AR(1) covariate of length `n`, after discarding `cfg.burn_in` steps.
pub fn simulate_exog_ar1_with(n: usize, seed: u64, cfg: &SimulationConfig) -> Vec<f64> {
    let mut path = exog_path(cfg.burn_in + n, seed, cfg);
    path.drain(..cfg.burn_in);
    path
}

/// Deterministic part `f(X_t)` of the process.
pub fn mean_function(kind: DgpKind, x: &[f64]) -> Result<f64> {
    if x.len() != kind.feature_dim() {
        return Err(Error::DimensionMismatch {
            layer: format!("{kind} feature vector"),
            expected: kind.feature_dim(),
            got: x.len(),
        });
    }
    Ok(mean_unchecked(kind, x))
}

#[inline]
fn mean_unchecked(kind: DgpKind, x: &[f64]) -> f64 {
    match kind {
        DgpKind::Dgp1 => {
            let ex = x[3];
            1.0 - 0.2 * x[0] + 0.3 * x[1] + 0.25 * x[2] - 0.6 / (1.0 + ex * ex)
        }
        DgpKind::Dgp2 => {
            let y1 = x[0];
            0.5 + (-0.4 + 0.25 * (-2.0 * y1 * y1).exp()) * y1 + 1.5 * x[1]
        }
        DgpKind::Dgp3 => {
            let (y1, ex) = (x[0], x[1]);
            -0.15 + (0.1 - 0.2 * (-0.5 * y1 * y1).exp()) * y1 + 0.25 / (1.0 + ex * ex)
        }
        DgpKind::Dgp4 => {
            let ex = x[2];
            0.1 + 0.15 * x[0] - 0.25 * x[1] - 0.2 * (-ex * ex).exp()
        }
    }
}

/// Hinge-loss Bayes classifier `2 * 1{f(x) >= 0} - 1` of a binary process.
pub fn bayes_classifier(kind: DgpKind, x: &[f64]) -> Result<f64> {
    kind.require(Task::Binary)?;
    Ok(if mean_function(kind, x)? >= 0.0 { 1.0 } else { -1.0 })
}

/// A simulated sample `{(X_t, Y_t)}` in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    features: Vec<f64>,
    targets: Vec<f64>,
    kind: DgpKind,
    seed: u64,
    burn_in: usize,
}

/// The complete simulated paths (burn-in included) behind a [`Trajectory`].
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    pub y: Vec<f64>,
    pub exog: Vec<f64>,
    pub burn_in: usize,
}

impl RawSeries {
    /// Feature vector at absolute time `t` (zeros before the start of the path).
    pub fn features_at(&self, kind: DgpKind, t: usize) -> Vec<f64> {
        let p = kind.lag_order();
        let mut row = Vec::with_capacity(p + 1);
        for lag in 1..=p {
            row.push(if t >= lag { self.y[t - lag] } else { 0.0 });
        }
        row.push(if t >= 1 { self.exog[t - 1] } else { 0.0 });
        row
    }
}

impl Trajectory {
    pub fn new(
        kind: DgpKind,
        features: Vec<f64>,
        targets: Vec<f64>,
        seed: u64,
        burn_in: usize,
    ) -> Result<Self> {
        let d = kind.feature_dim();
        if features.len() != targets.len() * d {
            return Err(Error::LengthMismatch {
                what: "trajectory features",
                expected: targets.len() * d,
                got: features.len(),
            });
        }
        if kind.task() == Task::Binary {
            if let Some(&bad) = targets.iter().find(|&&y| y != 1.0 && y != -1.0) {
                return Err(Error::InvalidLabel(bad));
            }
        }
        Ok(Self {
            features,
            targets,
            kind,
            seed,
            burn_in,
        })
    }

    #[inline]
    pub fn kind(&self) -> DgpKind {
        self.kind
    }

    #[inline]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    #[inline]
    pub fn feature_dim(&self) -> usize {
        self.kind.feature_dim()
    }

    #[inline]
    pub fn row(&self, t: usize) -> &[f64] {
        let d = self.feature_dim();
        &self.features[t * d..(t + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.feature_dim())
    }

    #[inline]
    pub fn features(&self) -> &[f64] {
        &self.features
    }

    #[inline]
    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Training design with all `p` lags.
    pub fn to_dataset(&self) -> Dataset {
        Dataset::new(self.features.clone(), self.targets.clone(), self.feature_dim())
            .expect("trajectory invariants guarantee a well-formed dataset")
    }

    /// Training design keeping only the first `lags` response lags plus the covariate.
    pub fn dataset_with_lags(&self, lags: usize) -> Result<Dataset> {
        let p = self.kind.lag_order();
        if lags == 0 || lags > p {
            return Err(Error::InvalidConfig(format!(
                "{} supports 1..={p} input lags, got {lags}",
                self.kind
            )));
        }
        let mut features = Vec::with_capacity(self.len() * (lags + 1));
        for row in self.rows() {
            features.extend_from_slice(&row[..lags]);
            features.push(row[p]);
        }
        Dataset::new(features, self.targets.clone(), lags + 1)
    }

    /// Delimited text export: a `# dgp=.. seed=.. burn_in=..` comment, a header row
    /// `x1,..,x{p+1},y`, then one row per time step.
    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(
            writer,
            "# dgp={} seed={} burn_in={}",
            self.kind, self.seed, self.burn_in
        )?;
        let mut w = csv::Writer::from_writer(writer);
        let d = self.feature_dim();
        let mut header: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
        header.push("y".into());
        w.write_record(&header)?;
        for (row, y) in self.rows().zip(&self.targets) {
            let mut rec: Vec<String> = row.iter().map(ToString::to_string).collect();
            rec.push(y.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut buf = BufReader::new(reader);
        let mut first = String::new();
        buf.read_line(&mut first)?;
        let meta = first
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse("missing '# dgp=..' metadata line".into()))?;
        let (mut kind, mut seed, mut burn_in) = (None, None, None);
        for tok in meta.split_whitespace() {
            match tok.split_once('=') {
                Some(("dgp", v)) => kind = Some(v.parse::<DgpKind>()?),
                Some(("seed", v)) => {
                    seed = Some(v.parse::<u64>().map_err(|e| Error::Parse(e.to_string()))?)
                }
                Some(("burn_in", v)) => {
                    burn_in = Some(v.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?)
                }
                _ => return Err(Error::Parse(format!("unexpected metadata '{tok}'"))),
            }
        }
        let kind = kind.ok_or_else(|| Error::Parse("metadata lacks dgp".into()))?;
        let d = kind.feature_dim();

        let mut r = csv::Reader::from_reader(buf);
        let headers = r.headers()?.clone();
        if headers.len() != d + 1 {
            return Err(Error::Parse(format!(
                "{kind} needs {} columns, found {}",
                d + 1,
                headers.len()
            )));
        }
        let mut features = Vec::new();
        let mut targets = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            for (k, field) in rec.iter().enumerate() {
                let v = field
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("'{field}': {e}")))?;
                if k < d {
                    features.push(v);
                } else {
                    targets.push(v);
                }
            }
        }
        Self::new(
            kind,
            features,
            targets,
            seed.unwrap_or(0),
            burn_in.unwrap_or(0),
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// Simulates `n` retained steps of `kind` with the default configuration.
pub fn simulate(kind: DgpKind, n: usize, seed: u64) -> Result<Trajectory> {
    simulate_with(kind, n, seed, &SimulationConfig::default())
}

pub fn simulate_with(
    kind: DgpKind,
    n: usize,
    seed: u64,
    cfg: &SimulationConfig,
) -> Result<Trajectory> {
    simulate_with_series(kind, n, seed, cfg).map(|(traj, _)| traj)
}

/// Simulation that also returns the raw paths, for regeneration checks.
pub fn simulate_with_series(
    kind: DgpKind,
    n: usize,
    seed: u64,
    cfg: &SimulationConfig,
) -> Result<(Trajectory, RawSeries)> {
    if n == 0 {
        return Err(Error::InvalidConfig("trajectory length must be >= 1".into()));
    }
    let total = cfg.burn_in + n;
    let exog = exog_path(total, seed, cfg);
    let mut rng = rng_for(seed, NOISE_STREAM);
    let noise = StandardizedUniform::new();

    let mut raw = RawSeries {
        y: Vec::with_capacity(total),
        exog,
        burn_in: cfg.burn_in,
    };
    let d = kind.feature_dim();
    let mut features = Vec::with_capacity(n * d);
    let mut targets = Vec::with_capacity(n);

    for t in 0..total {
        let x = raw.features_at(kind, t);
        let f = mean_unchecked(kind, &x);
        let y = match kind.task() {
            Task::Regression => f + cfg.noise_scale * noise.sample(&mut rng),
            Task::Binary => {
                let p = ((1.0 + f) / 2.0).clamp(0.0, 1.0);
                if rng.gen_bool(p) {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        if !y.is_finite() {
            return Err(Error::NonFiniteSimulation { step: t });
        }
        raw.y.push(y);
        if t >= cfg.burn_in {
            features.extend_from_slice(&x);
            targets.push(y);
        }
    }
    let traj = Trajectory::new(kind, features, targets, seed, cfg.burn_in)?;
    Ok((traj, raw))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_function_at_origin() {
        let cases = [
            (DgpKind::Dgp1, 0.4),
            (DgpKind::Dgp2, 0.5),
            (DgpKind::Dgp3, 0.10),
            (DgpKind::Dgp4, -0.10),
        ];
        for (kind, want) in cases {
            let x = vec![0.0; kind.feature_dim()];
            let got = mean_function(kind, &x).unwrap();
            assert!((got - want).abs() < 1e-15, "{kind}: {got}");
        }
    }

    #[test]
    fn mean_function_checks_dimension() {
        assert!(matches!(
            mean_function(DgpKind::Dgp1, &[0.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn bayes_classifier_signs() {
        assert_eq!(bayes_classifier(DgpKind::Dgp3, &[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(bayes_classifier(DgpKind::Dgp4, &[0.0, 0.0, 0.0]).unwrap(), -1.0);
        assert!(bayes_classifier(DgpKind::Dgp1, &[0.0; 4]).is_err());
    }

    #[test]
    fn bayes_classifier_boundary_is_positive() {
        // DGP4 with y1 = 0, y2 = 0.4 and x -> infinity: f = 0.1 - 0.25 * 0.4 = 0 exactly.
        let x = [0.0, 0.4, f64::INFINITY];
        assert_eq!(mean_function(DgpKind::Dgp4, &x).unwrap(), 0.0);
        assert_eq!(bayes_classifier(DgpKind::Dgp4, &x).unwrap(), 1.0);
    }

    #[test]
    fn simulation_is_deterministic_and_labels_are_binary() {
        let a = simulate(DgpKind::Dgp4, 500, 9).unwrap();
        let b = simulate(DgpKind::Dgp4, 500, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.targets().iter().all(|&y| y == 1.0 || y == -1.0));
        assert_ne!(a, simulate(DgpKind::Dgp4, 500, 10).unwrap());
    }

    #[test]
    fn lag_projection_keeps_first_lags_and_covariate() {
        let traj = simulate(DgpKind::Dgp1, 20, 1).unwrap();
        let ds = traj.dataset_with_lags(1).unwrap();
        assert_eq!(ds.dim(), 2);
        for t in 0..traj.len() {
            assert_eq!(ds.row(t), &[traj.row(t)[0], traj.row(t)[3]]);
        }
        assert!(traj.dataset_with_lags(0).is_err());
        assert!(traj.dataset_with_lags(4).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let traj = simulate(DgpKind::Dgp2, 50, 77).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# dgp=DGP2 seed=77 burn_in=1000\nx1,x2,y\n"));
        let back = Trajectory::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, traj);
    }

    #[test]
    fn read_rejects_bad_labels() {
        let text = "# dgp=DGP3 seed=1 burn_in=0\nx1,x2,y\n0,0,0.5\n";
        assert!(matches!(
            Trajectory::read_csv(text.as_bytes()),
            Err(Error::InvalidLabel(_))
        ));
    }

    #[test]
    fn explosive_recursion_is_reported() {
        let cfg = SimulationConfig {
            exog_phi: 3.0,
            burn_in: 0,
            ..SimulationConfig::default()
        };
        assert!(matches!(
            simulate_with(DgpKind::Dgp2, 2000, 1, &cfg),
            Err(Error::NonFiniteSimulation { .. })
        ));
    }
}
