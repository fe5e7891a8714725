use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vector;

/// Piecewise-constant, right-continuous mode schedule `p(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SwitchingDoc", into = "SwitchingDoc")]
pub struct SwitchingSignal {
    switch_times: Vec<f64>,
    mode_indices: Vec<usize>,
    dwell_time: f64,
}

impl SwitchingSignal {
    /// `switch_times[0]` must be 0; consecutive gaps must be at least
    /// `dwell_time` (> 0).
    pub fn new(switch_times: Vec<f64>, mode_indices: Vec<usize>, dwell_time: f64) -> Result<Self> {
        if switch_times.is_empty() || switch_times.len() != mode_indices.len() {
            return Err(Error::InvalidArgument(
                "switching signal needs matching, non-empty times and modes".into(),
            ));
        }
        if switch_times[0] != 0.0 {
            return Err(Error::InvalidArgument("first switching time must be 0".into()));
        }
        if !(dwell_time > 0.0) {
            return Err(Error::InvalidArgument("dwell time must be positive".into()));
        }
        for w in switch_times.windows(2) {
            if !(w[1] - w[0] >= dwell_time) {
                return Err(Error::InvalidArgument(format!(
                    "switches at {} and {} violate dwell time {dwell_time}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { switch_times, mode_indices, dwell_time })
    }

    /// Single mode for all time.
    pub fn constant(mode: usize) -> Self {
        Self { switch_times: vec![0.0], mode_indices: vec![mode], dwell_time: f64::INFINITY }
    }

    /// Modes taken in order, each held for `interval` seconds.
    pub fn periodic(interval: f64, modes: Vec<usize>) -> Result<Self> {
        let times = (0..modes.len()).map(|k| k as f64 * interval).collect();
        Self::new(times, modes, interval)
    }

    pub fn switch_times(&self) -> &[f64] {
        &self.switch_times
    }

    pub fn mode_indices(&self) -> &[usize] {
        &self.mode_indices
    }

    pub fn dwell_time(&self) -> f64 {
        self.dwell_time
    }

    /// Mode active at `t` (right-continuous).
    pub fn mode_at(&self, t: f64) -> usize {
        let k = self.switch_times.partition_point(|&s| s <= t);
        self.mode_indices[k.saturating_sub(1)]
    }

    pub fn validate_modes(&self, family_len: usize) -> Result<()> {
        match self.mode_indices.iter().find(|&&p| p >= family_len) {
            Some(p) => Err(Error::InvalidArgument(format!(
                "switching signal references mode {p}, family has {family_len}"
            ))),
            None => Ok(()),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SwitchingDoc {
    times: Vec<f64>,
    modes: Vec<usize>,
    #[serde(default)]
    dwell_time: Option<f64>,
}

impl TryFrom<SwitchingDoc> for SwitchingSignal {
    type Error = Error;

    fn try_from(d: SwitchingDoc) -> Result<Self> {
        let dwell = match d.dwell_time {
            Some(t) => t,
            None => d
                .times
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::INFINITY, f64::min),
        };
        Self::new(d.times, d.modes, dwell)
    }
}

impl From<SwitchingSignal> for SwitchingDoc {
    fn from(s: SwitchingSignal) -> Self {
        let dwell_time = s.dwell_time.is_finite().then_some(s.dwell_time);
        Self { times: s.switch_times, modes: s.mode_indices, dwell_time }
    }
}

/// Piecewise-constant command `r(t)`; zero before the first step.
#[derive(Clone, Debug, PartialEq)]
pub struct CommandSignal {
    times: Vec<f64>,
    values: Vec<Vector>,
    dim: usize,
}

impl CommandSignal {
    pub fn new(dim: usize, steps: Vec<(f64, Vector)>) -> Result<Self> {
        let mut times = Vec::with_capacity(steps.len());
        let mut values = Vec::with_capacity(steps.len());
        for (t, v) in steps {
            if v.len() != dim {
                return Err(Error::Dimension(format!("command value has {} entries, expected {dim}", v.len())));
            }
            if !t.is_finite() || v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument("command must be finite".into()));
            }
            if let Some(&last) = times.last() {
                if t <= last {
                    return Err(Error::InvalidArgument("command step times must be strictly increasing".into()));
                }
            }
            times.push(t);
            values.push(v);
        }
        Ok(Self { times, values, dim })
    }

    pub fn zero(dim: usize) -> Self {
        Self { times: Vec::new(), values: Vec::new(), dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step_times(&self) -> &[f64] {
        &self.times
    }

    pub fn value_at(&self, t: f64) -> Vector {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            Vector::zeros(self.dim)
        } else {
            self.values[k - 1].clone()
        }
    }
}
