//! Adaptive PRZI traders: the prod/dev hill-climber and the two-trader
//! phase-space quiver sampler.

mod climber;

pub use climber::{mutate_strategy, AdaptiveClimber, Adoption, ClimberError, ClimberParams};

use std::io::{self, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::lob::Side;
use crate::session::{run_session_indexed, ConfigError, SessionConfig};
use crate::traders::StrategySpec;

#[derive(Debug, Error, PartialEq)]
pub enum QuiverError {
    #[error("grid resolution must be at least 2")]
    Grid,
    #[error("reps must be at least 1")]
    Reps,
    #[error("template needs exactly one adaptive buyer and one adaptive seller, each with count 1")]
    Template,
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuiverPoint {
    pub s_b: f64,
    pub s_s: f64,
    /// Mean net drift of the buyer's and seller's prod strategy.
    pub d_sb: f64,
    pub d_ss: f64,
    pub reps: u32,
}

impl QuiverPoint {
    pub fn magnitude(&self) -> f64 {
        self.d_sb.hypot(self.d_ss)
    }
}

/// Mean strategy drift over a regular grid on [-1, 1]^2. Points are stored
/// row-major with the buyer axis outermost.
#[derive(Clone, Debug, PartialEq)]
pub struct QuiverField {
    pub grid_res: usize,
    pub points: Vec<QuiverPoint>,
}

pub fn grid_coord(i: usize, res: usize) -> f64 {
    if i + 1 == res {
        1.0
    } else {
        -1.0 + 2.0 * i as f64 / (res - 1) as f64
    }
}

impl QuiverField {
    pub fn at(&self, ib: usize, is: usize) -> &QuiverPoint {
        &self.points[ib * self.grid_res + is]
    }

    pub fn max_magnitude(&self) -> f64 {
        self.points.iter().map(QuiverPoint::magnitude).fold(0.0, f64::max)
    }

    /// Bilinear interpolation of the drift at an arbitrary point.
    pub fn velocity(&self, s_b: f64, s_s: f64) -> (f64, f64) {
        let r = self.grid_res;
        let cell = |s: f64| {
            let x = (s.clamp(-1.0, 1.0) + 1.0) / 2.0 * (r - 1) as f64;
            let i = (x.floor() as usize).min(r - 2);
            (i, x - i as f64)
        };
        let (ib, fb) = cell(s_b);
        let (is, fs) = cell(s_s);
        let mut v = (0.0, 0.0);
        for (di, wb) in [(0, 1.0 - fb), (1, fb)] {
            for (dj, ws) in [(0, 1.0 - fs), (1, fs)] {
                let p = self.at(ib + di, is + dj);
                v.0 += wb * ws * p.d_sb;
                v.1 += wb * ws * p.d_ss;
            }
        }
        v
    }

    /// Follows the interpolated field from `start` for `steps` Euler steps of
    /// size `h` (in units of one sampling horizon), staying inside the square.
    pub fn trace(&self, start: (f64, f64), steps: usize, h: f64) -> (f64, f64) {
        let mut p = start;
        for _ in 0..steps {
            let v = self.velocity(p.0, p.1);
            p = ((p.0 + h * v.0).clamp(-1.0, 1.0), (p.1 + h * v.1).clamp(-1.0, 1.0));
        }
        p
    }

    /// Grid cells 4-connected to the one nearest the origin whose magnitude
    /// is below `fraction` of the field maximum. Empty when the origin cell
    /// itself is above the threshold.
    pub fn plateau_around_origin(&self, fraction: f64) -> Vec<(usize, usize)> {
        let r = self.grid_res;
        let limit = fraction * self.max_magnitude();
        let low = |ib: usize, is: usize| self.at(ib, is).magnitude() < limit;
        let o = (r - 1) / 2;
        let mut seen = vec![false; r * r];
        let mut out = Vec::new();
        let mut stack = vec![(o, o)];
        while let Some((ib, is)) = stack.pop() {
            if seen[ib * r + is] || !low(ib, is) {
                continue;
            }
            seen[ib * r + is] = true;
            out.push((ib, is));
            if ib > 0 {
                stack.push((ib - 1, is));
            }
            if ib + 1 < r {
                stack.push((ib + 1, is));
            }
            if is > 0 {
                stack.push((ib, is - 1));
            }
            if is + 1 < r {
                stack.push((ib, is + 1));
            }
        }
        out.sort_unstable();
        out
    }

    /// `s_b,s_s,d_sb,d_ss,magnitude,reps`. Drift vectors are scaled to unit
    /// length for plotting; `magnitude` keeps the raw length.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "s_b,s_s,d_sb,d_ss,magnitude,reps")?;
        for p in &self.points {
            let m = p.magnitude();
            let (u, v) = if m > 0.0 { (p.d_sb / m, p.d_ss / m) } else { (0.0, 0.0) };
            writeln!(w, "{},{},{},{},{},{}", p.s_b, p.s_s, u, v, m, p.reps)?;
        }
        Ok(())
    }
}

/// A sink of the traced field together with how many grid starts end there.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Attractor {
    pub s_b: f64,
    pub s_s: f64,
    pub basin: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttractorSearch {
    pub steps: usize,
    pub h: f64,
    /// Endpoints closer than this are merged into one cluster.
    pub merge_radius: f64,
    /// Minimum share of grid starts a cluster must capture to count.
    pub min_share: f64,
}

impl Default for AttractorSearch {
    fn default() -> Self {
        AttractorSearch { steps: 400, h: 1.0, merge_radius: 0.2, min_share: 0.1 }
    }
}

/// Traces the field from every grid point and clusters the endpoints
/// (single linkage). Returns clusters ordered by basin size, largest first.
pub fn find_attractors(field: &QuiverField, search: &AttractorSearch) -> Vec<Attractor> {
    let r = field.grid_res;
    let ends: Vec<(f64, f64)> = (0..r * r)
        .map(|k| field.trace((grid_coord(k / r, r), grid_coord(k % r, r)), search.steps, search.h))
        .collect();
    let n = ends.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in 0..i {
            let d = (ends[i].0 - ends[j].0).hypot(ends[i].1 - ends[j].1);
            if d < search.merge_radius {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut clusters: Vec<(usize, f64, f64, usize)> = Vec::new();
    for i in 0..n {
        let c = root(&mut parent, i);
        match clusters.iter_mut().find(|x| x.0 == c) {
            Some(x) => {
                x.1 += ends[i].0;
                x.2 += ends[i].1;
                x.3 += 1;
            }
            None => clusters.push((c, ends[i].0, ends[i].1, 1)),
        }
    }
    let mut out: Vec<Attractor> = clusters
        .into_iter()
        .filter(|c| c.3 as f64 >= search.min_share * n as f64)
        .map(|(_, sb, ss, m)| Attractor { s_b: sb / m as f64, s_s: ss / m as f64, basin: m })
        .collect();
    out.sort_by_key(|a| std::cmp::Reverse(a.basin));
    out
}

fn adaptive_seats(template: &SessionConfig) -> Result<(usize, usize), QuiverError> {
    let mut buyer = None;
    let mut seller = None;
    for (i, e) in template.roster.iter().enumerate() {
        if e.adaptive.is_none() {
            continue;
        }
        if e.count != 1 || !matches!(e.strategy, StrategySpec::Przi(_)) {
            return Err(QuiverError::Template);
        }
        let slot = match e.side {
            Side::Bid => &mut buyer,
            Side::Ask => &mut seller,
        };
        if slot.replace(i).is_some() {
            return Err(QuiverError::Template);
        }
    }
    buyer.zip(seller).ok_or(QuiverError::Template)
}

/// Samples the mean prod-strategy drift of one adaptive buyer and one
/// adaptive seller on a `grid_res` x `grid_res` grid. Each of the `reps`
/// sessions at a grid point runs for `horizon` time units on its own RNG
/// stream, so the result does not depend on thread scheduling.
pub fn quiver_sample(
    template: &SessionConfig,
    grid_res: usize,
    horizon: u64,
    reps: u32,
    seed: u64,
) -> Result<QuiverField, QuiverError> {
    if grid_res < 2 {
        return Err(QuiverError::Grid);
    }
    if reps == 0 {
        return Err(QuiverError::Reps);
    }
    let (bi, si) = adaptive_seats(template)?;
    template.validate()?;
    // seat ids of the two adaptive traders after roster expansion
    let seat = |entry: usize| template.roster[..entry].iter().map(|e| e.count as usize).sum::<usize>();
    let (b_id, s_id) = (seat(bi), seat(si));

    let points = (0..grid_res * grid_res)
        .into_par_iter()
        .map(|k| {
            let s_b = grid_coord(k / grid_res, grid_res);
            let s_s = grid_coord(k % grid_res, grid_res);
            let mut cfg = template.clone();
            cfg.roster[bi].strategy = StrategySpec::Przi(s_b);
            cfg.roster[si].strategy = StrategySpec::Przi(s_s);
            cfg.duration = horizon;
            cfg.seed = seed;
            let (mut d_sb, mut d_ss) = (0.0, 0.0);
            for r in 0..reps {
                let res = run_session_indexed(&cfg, k as u64 * reps as u64 + r as u64)?;
                let prod = |id: usize| match res.final_strategies[id] {
                    StrategySpec::Przi(s) => s,
                    _ => unreachable!("adaptive seats are PRZI"),
                };
                d_sb += prod(b_id) - s_b;
                d_ss += prod(s_id) - s_s;
            }
            Ok(QuiverPoint { s_b, s_s, d_sb: d_sb / reps as f64, d_ss: d_ss / reps as f64, reps })
        })
        .collect::<Result<Vec<_>, ConfigError>>()?;
    Ok(QuiverField { grid_res, points })
}
