use std::collections::BTreeMap;
use std::io::{self, Write};

use super::{AnalysisError, RecurrenceMatrix};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RqaMetrics {
    /// Recurrence rate over cells outside the Theiler band.
    pub rr: f64,
    /// Share of recurrent points on diagonal lines of length >= `l_min`.
    pub det: f64,
    /// Share of recurrent points on vertical lines of length >= `v_min`.
    pub lam: f64,
    pub l_mean: f64,
    pub l_max: usize,
    /// Shannon entropy (nats) of the diagonal line-length distribution.
    pub ent: f64,
}

/// Line-length histogram: length -> number of lines.
type Histogram = BTreeMap<usize, usize>;

fn record(hist: &mut Histogram, run: usize) {
    if run > 0 {
        *hist.entry(run).or_insert(0) += 1;
    }
}

fn diagonal_lines(m: &RecurrenceMatrix) -> Histogram {
    let n = m.size();
    let mut hist = Histogram::new();
    for k in -(n as isize - 1)..=(n as isize - 1) {
        let (i0, j0) = if k >= 0 { (0, k as usize) } else { ((-k) as usize, 0) };
        let mut run = 0;
        let mut step = 0;
        while i0 + step < n && j0 + step < n {
            if m.get(i0 + step, j0 + step) {
                run += 1;
            } else {
                record(&mut hist, run);
                run = 0;
            }
            step += 1;
        }
        record(&mut hist, run);
    }
    hist
}

fn vertical_lines(m: &RecurrenceMatrix) -> Histogram {
    let n = m.size();
    let mut hist = Histogram::new();
    for j in 0..n {
        let mut run = 0;
        for i in 0..n {
            if m.get(i, j) {
                run += 1;
            } else {
                record(&mut hist, run);
                run = 0;
            }
        }
        record(&mut hist, run);
    }
    hist
}

/// Standard RQA measures. Lines run to the matrix border and count at their
/// visible length.
pub fn rqa_metrics(m: &RecurrenceMatrix, l_min: usize, v_min: usize) -> Result<RqaMetrics, AnalysisError> {
    if l_min < 2 || v_min < 2 {
        return Err(AnalysisError::BadLineLength);
    }
    let points = m.recurrent_points();
    if points == 0 {
        return Ok(RqaMetrics::default());
    }
    let cells = m.admissible_cells();
    let rr = points as f64 / cells as f64;

    let diag = diagonal_lines(m);
    let long: Vec<(usize, usize)> = diag.range(l_min..).map(|(&l, &c)| (l, c)).collect();
    let det_points: usize = long.iter().map(|(l, c)| l * c).sum();
    let n_lines: usize = long.iter().map(|(_, c)| c).sum();
    let (l_mean, l_max, ent) = if n_lines == 0 {
        (0.0, 0, 0.0)
    } else {
        let ent = -long
            .iter()
            .map(|&(_, c)| {
                let p = c as f64 / n_lines as f64;
                p * p.ln()
            })
            .sum::<f64>();
        (det_points as f64 / n_lines as f64, long.last().map_or(0, |&(l, _)| l), ent.max(0.0))
    };

    let vert = vertical_lines(m);
    let lam_points: usize = vert.range(v_min..).map(|(&v, &c)| v * c).sum();

    Ok(RqaMetrics {
        rr,
        det: det_points as f64 / points as f64,
        lam: lam_points as f64 / points as f64,
        l_mean,
        l_max,
        ent,
    })
}

/// Single-row CSV: `RR,DET,LAM,L_mean,L_max,ENT`.
pub fn write_rqa_csv<W: Write>(mut w: W, r: &RqaMetrics) -> io::Result<()> {
    writeln!(w, "RR,DET,LAM,L_mean,L_max,ENT")?;
    writeln!(w, "{},{},{},{},{},{}", r.rr, r.det, r.lam, r.l_mean, r.l_max, r.ent)
}
