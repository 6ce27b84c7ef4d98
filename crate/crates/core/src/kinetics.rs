//! Mass-action rates, the explicit update rule, and sampled trajectories.

use std::io::{Read, Write};
use std::str::FromStr;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mechanism::{Mechanism, StoichMatrix};

#[derive(Debug, Error)]
pub enum KineticsError {
    #[error("reaction {reaction} uses an Arrhenius rate but no temperature was given")]
    MissingTemperature { reaction: usize },
    #[error("temperature must be positive, got {0}")]
    InvalidTemperature(f64),
    #[error("expected {expected} values for {what}, got {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("negative initial concentration {value} for species {species}")]
    NegativeInitial { species: usize, value: f64 },
    #[error("times must be strictly increasing (t[{index}] = {value} after {previous})")]
    NonIncreasingTimes {
        index: usize,
        previous: f64,
        value: f64,
    },
    #[error("a trajectory needs at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("{file}: negative or non-finite value {value} at row {row}, column {column:?}")]
    InvalidValue {
        file: &'static str,
        row: usize,
        column: String,
        value: f64,
    },
    #[error("{file}: header mismatch, expected {expected:?}, found {found:?}")]
    ColumnMismatch {
        file: &'static str,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("{file}: row {row}: {message}")]
    Parse {
        file: &'static str,
        row: usize,
        message: String,
    },
    #[error("rates file time grid differs from the trajectory at row {row}")]
    TimeGridMismatch { row: usize },
    #[error("integration did not converge on [{t_start}, {t_end}] within {substeps} sub-steps")]
    StepUnderflow {
        t_start: f64,
        t_end: f64,
        substeps: usize,
    },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Operating condition of one run. Only the temperature influences the
/// kinetics (through Arrhenius rates); the rest is carried as metadata.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub label: String,
    #[serde(default, rename = "T", skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, rename = "P", skip_serializing_if = "Option::is_none")]
    pub pressure: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
}

impl Condition {
    pub fn labeled(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            ..Default::default()
        }
    }
}

/// Rate constants of every reaction at the given temperature.
pub fn rate_constants(
    mechanism: &Mechanism,
    temperature: Option<f64>,
) -> Result<Vec<f64>, KineticsError> {
    if let Some(t) = temperature {
        if !(t > 0.0 && t.is_finite()) && mechanism.needs_temperature() {
            return Err(KineticsError::InvalidTemperature(t));
        }
    }
    mechanism
        .reactions()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.rate
                .evaluate(temperature)
                .ok_or(KineticsError::MissingTemperature { reaction: i })
        })
        .collect()
}

fn mass_action_into(mechanism: &Mechanism, k: &[f64], x: &[f64], out: &mut [f64]) {
    for ((rxn, &ki), ri) in mechanism.reactions().iter().zip(k).zip(out.iter_mut()) {
        let mut r = ki;
        for &(s, nu) in &rxn.reactants {
            r *= x[s].powi(nu as i32);
        }
        *ri = r;
    }
}

/// Mass-action rates `r_i = k_i * prod_j X_j^nu_ij`.
pub fn reaction_rates(
    mechanism: &Mechanism,
    x: &[f64],
    temperature: Option<f64>,
) -> Result<Vec<f64>, KineticsError> {
    check_len("concentrations", mechanism.n_species(), x.len())?;
    let k = rate_constants(mechanism, temperature)?;
    let mut r = vec![0.0; mechanism.n_reactions()];
    mass_action_into(mechanism, &k, x, &mut r);
    Ok(r)
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<(), KineticsError> {
    if expected != found {
        return Err(KineticsError::LengthMismatch {
            what,
            expected,
            found,
        });
    }
    Ok(())
}

/// Result of one explicit update: the new state and the species that went
/// negative and were clamped to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerStep {
    pub next: Vec<f64>,
    pub clamped: Vec<usize>,
}

/// `X' = X + M r dt`, with negative components clamped to zero.
pub fn euler_step(x: &[f64], stoich: &StoichMatrix, r: &[f64], dt: f64) -> EulerStep {
    let m = stoich.entries();
    let mut next = Vec::with_capacity(x.len());
    let mut clamped = Vec::new();
    for (j, &xj) in x.iter().enumerate() {
        let dxdt: f64 = m
            .row(j)
            .iter()
            .zip(r)
            .map(|(&mji, &ri)| mji as f64 * ri)
            .sum();
        let v = xj + dxdt * dt;
        if v < 0.0 {
            clamped.push(j);
            next.push(0.0);
        } else {
            next.push(v);
        }
    }
    EulerStep { next, clamped }
}

/// Sampled states of one run. `rates` row `k` is the rate vector at `times[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    concentrations: Array2<f64>,
    rates: Array2<f64>,
    condition: Condition,
}

impl Trajectory {
    pub fn new(
        times: Vec<f64>,
        concentrations: Array2<f64>,
        rates: Array2<f64>,
        condition: Condition,
    ) -> Result<Self, KineticsError> {
        if times.len() < 2 {
            return Err(KineticsError::TooFewSamples(times.len()));
        }
        check_increasing(&times)?;
        check_len("concentration rows", times.len(), concentrations.nrows())?;
        check_len("rate rows", times.len(), rates.nrows())?;
        for (file, m) in [("concentrations", &concentrations), ("rates", &rates)] {
            if let Some(((row, col), &v)) = m
                .indexed_iter()
                .find(|(_, v)| !(**v >= 0.0 && v.is_finite()))
            {
                return Err(KineticsError::InvalidValue {
                    file,
                    row,
                    column: col.to_string(),
                    value: v,
                });
            }
        }
        Ok(Self {
            times,
            concentrations,
            rates,
            condition,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn concentrations(&self) -> &Array2<f64> {
        &self.concentrations
    }

    pub fn rates(&self) -> &Array2<f64> {
        &self.rates
    }

    pub fn condition(&self) -> &Condition {
        &self.condition
    }

    pub fn n_samples(&self) -> usize {
        self.times.len()
    }

    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn n_species(&self) -> usize {
        self.concentrations.ncols()
    }

    pub fn n_reactions(&self) -> usize {
        self.rates.ncols()
    }

    pub fn x(&self, k: usize) -> ArrayView1<'_, f64> {
        self.concentrations.row(k)
    }

    pub fn r(&self, k: usize) -> ArrayView1<'_, f64> {
        self.rates.row(k)
    }

    /// Spacing of step `k`, i.e. `times[k + 1] - times[k]`.
    pub fn delta(&self, k: usize) -> f64 {
        self.times[k + 1] - self.times[k]
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.times.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Same states on a stretched clock: spacings scale by `factor`, rates by
    /// `1 / factor`, so every product `r_k * dt_k` is unchanged.
    pub fn rescale_time(&self, factor: f64) -> Trajectory {
        let t0 = self.times[0];
        Trajectory {
            times: self.times.iter().map(|t| t0 + (t - t0) * factor).collect(),
            concentrations: self.concentrations.clone(),
            rates: self.rates.mapv(|r| r / factor),
            condition: self.condition.clone(),
        }
    }

    pub fn with_condition(mut self, condition: Condition) -> Self {
        self.condition = condition;
        self
    }
}

fn check_increasing(times: &[f64]) -> Result<(), KineticsError> {
    for (i, w) in times.windows(2).enumerate() {
        if !w[0].is_finite() || !w[1].is_finite() || w[1] <= w[0] {
            return Err(KineticsError::NonIncreasingTimes {
                index: i + 1,
                previous: w[0],
                value: w[1],
            });
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Sampling schedules

/// Sample times for a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Schedule {
    /// `samples` points evenly spaced on `[0, t_end]`.
    Uniform {
        t_end: f64,
        samples: usize,
    },
    /// `t = 0` followed by `samples - 1` log-spaced points on `[t_first, t_end]`.
    Geometric {
        t_first: f64,
        t_end: f64,
        samples: usize,
    },
    Explicit {
        times: Vec<f64>,
    },
}

impl Schedule {
    pub fn times(&self) -> Result<Vec<f64>, KineticsError> {
        let times = match *self {
            Schedule::Uniform { t_end, samples } => {
                if samples < 2 || !t_end.is_finite() || t_end <= 0.0 {
                    return Err(KineticsError::InvalidSchedule(format!(
                        "uniform schedule needs t_end > 0 and >= 2 samples (got {t_end}, {samples})"
                    )));
                }
                let n = (samples - 1) as f64;
                (0..samples).map(|i| t_end * i as f64 / n).collect()
            }
            Schedule::Geometric {
                t_first,
                t_end,
                samples,
            } => {
                if samples < 3
                    || !t_end.is_finite()
                    || t_first.is_nan()
                    || t_first <= 0.0
                    || t_end <= t_first
                {
                    return Err(KineticsError::InvalidSchedule(format!(
                        "geometric schedule needs 0 < t_first < t_end and >= 3 samples (got {t_first}, {t_end}, {samples})"
                    )));
                }
                let n = (samples - 2) as f64;
                let ratio = (t_end / t_first).ln();
                std::iter::once(0.0)
                    .chain((0..samples - 1).map(|i| t_first * (ratio * i as f64 / n).exp()))
                    .collect()
            }
            Schedule::Explicit { ref times } => times.clone(),
        };
        if times.len() < 2 {
            return Err(KineticsError::TooFewSamples(times.len()));
        }
        check_increasing(&times)?;
        Ok(times)
    }
}

impl FromStr for Schedule {
    type Err = KineticsError;

    /// `uniform:T_END:N`, `geometric:T_FIRST:T_END:N`, or a comma-separated
    /// list of times.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || KineticsError::InvalidSchedule(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| p.trim().parse::<f64>().map_err(|_| bad());
        let count = |p: &str| p.trim().parse::<usize>().map_err(|_| bad());
        let schedule = match parts.as_slice() {
            ["uniform", t_end, n] => Schedule::Uniform {
                t_end: num(t_end)?,
                samples: count(n)?,
            },
            ["geometric", t_first, t_end, n] => Schedule::Geometric {
                t_first: num(t_first)?,
                t_end: num(t_end)?,
                samples: count(n)?,
            },
            [list] => Schedule::Explicit {
                times: list.split(',').map(num).collect::<Result<_, _>>()?,
            },
            _ => return Err(bad()),
        };
        schedule.times()?;
        Ok(schedule)
    }
}

// ---------------------------------------------------------------------------
// Simulation

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Integrator {
    /// Classical RK4 with uniform sub-steps per sample interval. The number of
    /// sub-steps doubles until two successive refinements agree to `rel_tol`.
    Rk4 { rel_tol: f64, max_substeps: usize },
    /// One explicit update per sample interval, so that
    /// `X[k+1] - X[k] = M r[k] dt[k]` holds exactly (up to clamping).
    ExactEuler,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationOptions {
    pub integrator: Integrator,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            integrator: Integrator::Rk4 {
                rel_tol: 1e-6,
                max_substeps: 1 << 20,
            },
        }
    }
}

impl SimulationOptions {
    pub fn exact_euler() -> Self {
        Self {
            integrator: Integrator::ExactEuler,
        }
    }
}

/// A species clamped to zero during sample interval `step`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClampEvent {
    pub step: usize,
    pub species: usize,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub trajectory: Trajectory,
    pub clamp_events: Vec<ClampEvent>,
}

/// Integrates the mass-action system and records states and rates exactly at
/// `times`.
pub fn simulate(
    mechanism: &Mechanism,
    x0: &[f64],
    condition: &Condition,
    times: &[f64],
    options: &SimulationOptions,
) -> Result<Simulation, KineticsError> {
    check_len("initial concentrations", mechanism.n_species(), x0.len())?;
    if let Some((species, &value)) = x0.iter().enumerate().find(|(_, v)| v.is_nan() || **v < 0.0) {
        return Err(KineticsError::NegativeInitial { species, value });
    }
    if times.len() < 2 {
        return Err(KineticsError::TooFewSamples(times.len()));
    }
    check_increasing(times)?;

    let k = rate_constants(mechanism, condition.temperature)?;
    let stoich = mechanism.stoich_matrix();
    let ns = mechanism.n_species();
    let nr = mechanism.n_reactions();

    let mut conc = Array2::zeros((times.len(), ns));
    let mut rates = Array2::zeros((times.len(), nr));
    let mut events = Vec::new();
    let mut x = x0.to_vec();
    let mut r = vec![0.0; nr];

    let mut sys = Rk4System::new(mechanism, &stoich, &k);
    for (step, w) in times.windows(2).enumerate() {
        mass_action_into(mechanism, &k, &x, &mut r);
        conc.row_mut(step).assign(&ArrayView1::from(&x[..]));
        rates.row_mut(step).assign(&ArrayView1::from(&r[..]));

        let (next, clamped) = match options.integrator {
            Integrator::ExactEuler => {
                let s = euler_step(&x, &stoich, &r, w[1] - w[0]);
                (s.next, s.clamped)
            }
            Integrator::Rk4 {
                rel_tol,
                max_substeps,
            } => sys.advance(&x, w[0], w[1], rel_tol, max_substeps)?,
        };
        events.extend(
            clamped
                .into_iter()
                .map(|species| ClampEvent { step, species }),
        );
        x = next;
    }
    let last = times.len() - 1;
    mass_action_into(mechanism, &k, &x, &mut r);
    conc.row_mut(last).assign(&ArrayView1::from(&x[..]));
    rates.row_mut(last).assign(&ArrayView1::from(&r[..]));

    Ok(Simulation {
        trajectory: Trajectory::new(times.to_vec(), conc, rates, condition.clone())?,
        clamp_events: events,
    })
}

struct Rk4System<'a> {
    mechanism: &'a Mechanism,
    stoich: Vec<Vec<(usize, f64)>>,
    k: &'a [f64],
    r: Vec<f64>,
}

impl<'a> Rk4System<'a> {
    fn new(mechanism: &'a Mechanism, stoich: &StoichMatrix, k: &'a [f64]) -> Self {
        let m = stoich.entries();
        let sparse = m
            .rows()
            .into_iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0)
                    .map(|(i, v)| (i, *v as f64))
                    .collect()
            })
            .collect();
        Self {
            mechanism,
            stoich: sparse,
            k,
            r: vec![0.0; mechanism.n_reactions()],
        }
    }

    fn rhs(&mut self, x: &[f64], out: &mut [f64]) {
        mass_action_into(self.mechanism, self.k, x, &mut self.r);
        for (o, row) in out.iter_mut().zip(&self.stoich) {
            *o = row.iter().map(|&(i, m)| m * self.r[i]).sum();
        }
    }

    fn integrate(&mut self, x0: &[f64], dt_total: f64, n: usize, clamped: &mut [bool]) -> Vec<f64> {
        let ns = x0.len();
        let h = dt_total / n as f64;
        let mut x = x0.to_vec();
        let (mut k1, mut k2, mut k3, mut k4) =
            (vec![0.0; ns], vec![0.0; ns], vec![0.0; ns], vec![0.0; ns]);
        let mut tmp = vec![0.0; ns];
        for _ in 0..n {
            self.rhs(&x, &mut k1);
            for j in 0..ns {
                tmp[j] = x[j] + 0.5 * h * k1[j];
            }
            self.rhs(&tmp, &mut k2);
            for j in 0..ns {
                tmp[j] = x[j] + 0.5 * h * k2[j];
            }
            self.rhs(&tmp, &mut k3);
            for j in 0..ns {
                tmp[j] = x[j] + h * k3[j];
            }
            self.rhs(&tmp, &mut k4);
            for j in 0..ns {
                let v = x[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
                if v < 0.0 {
                    clamped[j] = true;
                    x[j] = 0.0;
                } else {
                    x[j] = v;
                }
            }
        }
        x
    }

    fn advance(
        &mut self,
        x: &[f64],
        t0: f64,
        t1: f64,
        rel_tol: f64,
        max_substeps: usize,
    ) -> Result<(Vec<f64>, Vec<usize>), KineticsError> {
        let dt = t1 - t0;
        let ns = x.len();
        let mut n = 1;
        let mut coarse = self.integrate(x, dt, n, &mut vec![false; ns]);
        loop {
            if 2 * n > max_substeps {
                return Err(KineticsError::StepUnderflow {
                    t_start: t0,
                    t_end: t1,
                    substeps: max_substeps,
                });
            }
            n *= 2;
            let mut fine_clamped = vec![false; ns];
            let fine = self.integrate(x, dt, n, &mut fine_clamped);
            let scale = fine.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let floor = 1e-9 * scale.max(f64::MIN_POSITIVE);
            let converged = coarse
                .iter()
                .zip(&fine)
                .all(|(a, b)| (a - b).abs() <= rel_tol * b.abs().max(floor));
            if converged {
                let events = (0..ns).filter(|&j| fine_clamped[j]).collect();
                return Ok((fine, events));
            }
            coarse = fine;
        }
    }
}

// ---------------------------------------------------------------------------
// CSV interchange

fn read_table(
    file: &'static str,
    reader: impl Read,
    expected: &[String],
) -> Result<(Vec<f64>, Vec<Vec<f64>>), KineticsError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut want = vec!["t".to_string()];
    want.extend(expected.iter().cloned());
    if header != want {
        return Err(KineticsError::ColumnMismatch {
            file,
            expected: want,
            found: header,
        });
    }
    let mut times = Vec::new();
    let mut rows = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let mut values = Vec::with_capacity(record.len());
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| KineticsError::Parse {
                file,
                row,
                message: format!("cannot parse {field:?} in column {:?}", header[col]),
            })?;
            if col > 0 && !(v >= 0.0 && v.is_finite()) {
                return Err(KineticsError::InvalidValue {
                    file,
                    row,
                    column: header[col].clone(),
                    value: v,
                });
            }
            values.push(v);
        }
        times.push(values[0]);
        rows.push(values[1..].to_vec());
    }
    Ok((times, rows))
}

/// Reads a trajectory from CSV. Without a rates file the rates are computed
/// from each concentration row.
pub fn load_trajectory(
    concentrations: impl Read,
    rates: Option<impl Read>,
    mechanism: &Mechanism,
    condition: Condition,
) -> Result<Trajectory, KineticsError> {
    let species: Vec<String> = mechanism.species().iter().map(|s| s.name.clone()).collect();
    let (times, xs) = read_table("trajectory", concentrations, &species)?;
    if times.len() < 2 {
        return Err(KineticsError::TooFewSamples(times.len()));
    }
    check_increasing(&times)?;
    let n = times.len();
    let conc =
        Array2::from_shape_vec((n, species.len()), xs.concat()).expect("rows have header width");

    let rate_matrix = match rates {
        Some(reader) => {
            let labels: Vec<String> = mechanism.labels().iter().map(|s| s.to_string()).collect();
            let (rt, rs) = read_table("rates", reader, &labels)?;
            if rt.len() != n {
                return Err(KineticsError::TimeGridMismatch {
                    row: rt.len().min(n),
                });
            }
            if let Some(row) = rt.iter().zip(&times).position(|(a, b)| a != b) {
                return Err(KineticsError::TimeGridMismatch { row });
            }
            Array2::from_shape_vec((n, labels.len()), rs.concat()).expect("rows have header width")
        }
        None => {
            let k = rate_constants(mechanism, condition.temperature)?;
            let mut m = Array2::zeros((n, mechanism.n_reactions()));
            let mut r = vec![0.0; mechanism.n_reactions()];
            for (row, x) in conc.rows().into_iter().enumerate() {
                mass_action_into(
                    mechanism,
                    &k,
                    x.as_slice().expect("standard layout"),
                    &mut r,
                );
                m.row_mut(row).assign(&ArrayView1::from(&r[..]));
            }
            m
        }
    };
    Trajectory::new(times, conc, rate_matrix, condition)
}

fn write_table<'a>(
    writer: impl Write,
    header: impl Iterator<Item = &'a str>,
    times: &[f64],
    values: &Array2<f64>,
) -> Result<(), KineticsError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut head = vec!["t"];
    head.extend(header);
    w.write_record(&head)?;
    for (t, row) in times.iter().zip(values.rows()) {
        let mut rec = vec![t.to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_trajectory_csv(
    trajectory: &Trajectory,
    mechanism: &Mechanism,
    writer: impl Write,
) -> Result<(), KineticsError> {
    write_table(
        writer,
        mechanism.species().iter().map(|s| s.name.as_str()),
        trajectory.times(),
        trajectory.concentrations(),
    )
}

pub fn write_rates_csv(
    trajectory: &Trajectory,
    mechanism: &Mechanism,
    writer: impl Write,
) -> Result<(), KineticsError> {
    write_table(
        writer,
        mechanism.labels().into_iter(),
        trajectory.times(),
        trajectory.rates(),
    )
}
