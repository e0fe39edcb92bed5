//! Recurrence plots and recurrence quantification over strategy-vector
//! trajectories.

mod recurrence;
mod rqa;

pub use recurrence::{default_epsilon, recurrence_matrix, write_pbm, RecurrenceMatrix};
pub use rqa::{rqa_metrics, write_rqa_csv, RqaMetrics};

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("sample {index} has dimension {got}, expected {expected}")]
    DimensionMismatch { index: usize, expected: usize, got: usize },
    #[error("timestamps must be strictly increasing (sample {0})")]
    NonMonotonicTime(usize),
    #[error("need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("threshold must be finite and non-negative")]
    BadThreshold,
    #[error("minimum line lengths must be at least 2")]
    BadLineLength,
}

/// Equally spaced samples of an N-dimensional state vector.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StateSeries {
    dim: usize,
    times: Vec<u64>,
    samples: Vec<Vec<f64>>,
}

impl StateSeries {
    pub fn new(dim: usize) -> Self {
        StateSeries { dim, times: Vec::new(), samples: Vec::new() }
    }

    pub fn from_samples(times: Vec<u64>, samples: Vec<Vec<f64>>) -> Result<Self, AnalysisError> {
        let dim = samples.first().map_or(0, Vec::len);
        let mut s = StateSeries::new(dim);
        for (t, v) in times.into_iter().zip(samples) {
            s.push(t, v)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, time: u64, state: Vec<f64>) -> Result<(), AnalysisError> {
        if state.len() != self.dim {
            return Err(AnalysisError::DimensionMismatch { index: self.samples.len(), expected: self.dim, got: state.len() });
        }
        if self.times.last().is_some_and(|&last| time <= last) {
            return Err(AnalysisError::NonMonotonicTime(self.samples.len()));
        }
        self.times.push(time);
        self.samples.push(state);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> &[u64] {
        &self.times
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    /// CSV with a `t` column and one `s<i>` column per dimension.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "t")?;
        for i in 0..self.dim {
            write!(w, ",s{i}")?;
        }
        writeln!(w)?;
        for (t, v) in self.times.iter().zip(&self.samples) {
            write!(w, "{t}")?;
            for x in v {
                write!(w, ",{x}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Same states, uniformly random order. Timestamps stay where they were.
pub fn surrogate_shuffle<R: Rng + ?Sized>(series: &StateSeries, rng: &mut R) -> StateSeries {
    let mut samples = series.samples.clone();
    samples.shuffle(rng);
    StateSeries { dim: series.dim, times: series.times.clone(), samples }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
