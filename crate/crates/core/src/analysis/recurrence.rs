use std::io::{self, Write};

use rayon::prelude::*;

use super::{euclidean, AnalysisError, StateSeries};

/// Square binary recurrence matrix. Cells closer to the main diagonal than
/// the Theiler window (`|i - j| < theiler`) are masked to 0; `theiler = 0`
/// masks nothing, `theiler = 1` removes the line of identity.
#[derive(Clone, Debug, PartialEq)]
pub struct RecurrenceMatrix {
    n: usize,
    bits: Vec<bool>,
    epsilon: f64,
    theiler: usize,
}

impl RecurrenceMatrix {
    /// Builds a matrix directly from bits. The mask is applied, so any set
    /// bits inside the Theiler band are dropped.
    pub fn from_bits(n: usize, bits: Vec<bool>, theiler: usize) -> Self {
        assert_eq!(bits.len(), n * n, "bit vector must be n*n");
        let mut m = RecurrenceMatrix { n, bits, epsilon: f64::NAN, theiler };
        for i in 0..n {
            for j in 0..n {
                if !m.admissible(i, j) {
                    m.bits[i * n + j] = false;
                }
            }
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn theiler(&self) -> usize {
        self.theiler
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.n + j]
    }

    pub fn admissible(&self, i: usize, j: usize) -> bool {
        i.abs_diff(j) >= self.theiler
    }

    pub fn admissible_cells(&self) -> usize {
        let n = self.n;
        (0..n).map(|i| (0..n).filter(|&j| self.admissible(i, j)).count()).sum()
    }

    pub fn recurrent_points(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

/// `bits[i][j]` is set iff `|s_i - s_j| < epsilon` and the cell lies outside
/// the Theiler band.
pub fn recurrence_matrix(series: &StateSeries, epsilon: f64, theiler: usize) -> Result<RecurrenceMatrix, AnalysisError> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(AnalysisError::BadThreshold);
    }
    let n = series.len();
    if n < 2 {
        return Err(AnalysisError::TooShort { needed: 2, got: n });
    }
    let samples = series.samples();
    let dim = series.dim();
    if let Some((index, s)) = samples.iter().enumerate().find(|(_, s)| s.len() != dim) {
        return Err(AnalysisError::DimensionMismatch { index, expected: dim, got: s.len() });
    }
    let mut bits = vec![false; n * n];
    bits.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = i.abs_diff(j) >= theiler && euclidean(&samples[i], &samples[j]) < epsilon;
        }
    });
    Ok(RecurrenceMatrix { n, bits, epsilon, theiler })
}

/// `fraction` of the largest pairwise distance in the series.
pub fn default_epsilon(series: &StateSeries, fraction: f64) -> f64 {
    let s = series.samples();
    let mut max: f64 = 0.0;
    for i in 0..s.len() {
        for j in 0..i {
            max = max.max(euclidean(&s[i], &s[j]));
        }
    }
    fraction * max
}

/// Plain PBM (P1). Row `i` is sample `i`; 1 marks a recurrence.
pub fn write_pbm<W: Write>(mut w: W, m: &RecurrenceMatrix) -> io::Result<()> {
    writeln!(w, "P1")?;
    writeln!(w, "{} {}", m.n, m.n)?;
    for i in 0..m.n {
        // netpbm asks for lines of at most 70 characters
        for chunk in (0..m.n).collect::<Vec<_>>().chunks(35) {
            let line: Vec<&str> = chunk.iter().map(|&j| if m.get(i, j) { "1" } else { "0" }).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
    }
    Ok(())
}
