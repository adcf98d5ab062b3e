//! Certified intervals on √F(W_N^(i)) for every index at any level.
//!
//! The plus step is exact, √F(W⁺) = F(W). The minus step only has
//! F(W) ≤ F(W⁻) and √F(W⁻) ≤ 2√F(W) − F(W); both ends are monotone in the
//! input, so intervals propagate soundly.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::channel::{channel_root_fidelity, BinaryCQChannel};
use crate::error::{Error, Result};
use crate::synthesis::{split_root_fidelity, Budget};

/// Deepest level [`propagate_all`] will allocate.
pub const PROPAGATION_LEVEL_CAP: u32 = 24;

/// Default depth of the exact prefix in hybrid construction.
pub const DEFAULT_EXACT_LEVELS: u32 = 8;

pub const BOUNDS_CSV_SCHEMA: &str = "cqpolar.bounds.v1";

/// Bounds f_lo ≤ √F ≤ f_hi.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityInterval {
    pub f_lo: f64,
    pub f_hi: f64,
}

impl ReliabilityInterval {
    pub fn new(f_lo: f64, f_hi: f64) -> Result<Self> {
        if !(0.0 <= f_lo && f_lo <= f_hi && f_hi <= 1.0) {
            return Err(Error::OutOfRange { what: "reliability interval", value: f_lo, lo: 0.0, hi: f_hi });
        }
        Ok(ReliabilityInterval { f_lo, f_hi })
    }

    /// A degenerate interval at an exactly computed value, clamped to [0, 1].
    pub fn exact(f: f64) -> Self {
        let f = f.clamp(0.0, 1.0);
        ReliabilityInterval { f_lo: f, f_hi: f }
    }

    pub fn width(&self) -> f64 {
        self.f_hi - self.f_lo
    }

    pub fn contains(&self, f: f64, tol: f64) -> bool {
        self.f_lo - tol <= f && f <= self.f_hi + tol
    }

    /// Holevo bounds implied by the interval: I ≥ log₂(2/(1+f_hi)) and
    /// I ≤ √(1 − f_lo²).
    pub fn holevo_bounds(&self) -> (f64, f64) {
        let lo = (2.0 / (1.0 + self.f_hi)).log2();
        let hi = (1.0 - self.f_lo * self.f_lo).max(0.0).sqrt();
        (lo, hi)
    }
}

pub fn propagate_minus(iv: ReliabilityInterval) -> ReliabilityInterval {
    ReliabilityInterval { f_lo: iv.f_lo, f_hi: 2.0 * iv.f_hi - iv.f_hi * iv.f_hi }
}

pub fn propagate_plus(iv: ReliabilityInterval) -> ReliabilityInterval {
    ReliabilityInterval { f_lo: iv.f_lo * iv.f_lo, f_hi: iv.f_hi * iv.f_hi }
}

fn check_levels(levels: u32) -> Result<()> {
    if levels > PROPAGATION_LEVEL_CAP {
        return Err(Error::BudgetExceeded {
            what: "propagation levels",
            required: levels as u128,
            limit: PROPAGATION_LEVEL_CAP as u128,
        });
    }
    Ok(())
}

/// Pushes a full level of intervals (index order) down `extra` more levels.
pub fn propagate_from(level: Vec<ReliabilityInterval>, extra: u32) -> Result<Vec<ReliabilityInterval>> {
    let start = crate::transform::log2_exact(level.len())?;
    check_levels(start + extra)?;
    let mut cur = level;
    for _ in 0..extra {
        let mut next = Vec::with_capacity(2 * cur.len());
        for &iv in &cur {
            next.push(propagate_minus(iv));
            next.push(propagate_plus(iv));
        }
        cur = next;
    }
    Ok(cur)
}

/// Intervals for all 2^n indices starting from the base value f0 = √F(W).
pub fn propagate_all(f0: f64, levels: u32) -> Result<Vec<ReliabilityInterval>> {
    if !(0.0..=1.0).contains(&f0) {
        return Err(Error::OutOfRange { what: "root fidelity", value: f0, lo: 0.0, hi: 1.0 });
    }
    propagate_from(vec![ReliabilityInterval::exact(f0)], levels)
}

/// Intervals seeded by exact synthesis at level n₀ and propagated for the
/// remaining levels.
///
/// With `exact_levels = None`, n₀ is the deepest level up to
/// min(8, n) that fits the budget. Returns the intervals and n₀.
pub fn hybrid_intervals(
    base: &BinaryCQChannel,
    levels: u32,
    exact_levels: Option<u32>,
    budget: &Budget,
) -> Result<(Vec<ReliabilityInterval>, u32)> {
    check_levels(levels)?;
    let seed = |n0: u32| -> Result<Vec<ReliabilityInterval>> {
        Ok(split_root_fidelity(base, n0, budget)?.into_iter().map(ReliabilityInterval::exact).collect())
    };
    match exact_levels {
        Some(n0) => {
            if n0 > levels {
                return Err(Error::OutOfRange { what: "exact levels", value: n0 as f64, lo: 0.0, hi: levels as f64 });
            }
            Ok((propagate_from(seed(n0)?, levels - n0)?, n0))
        }
        None => {
            let mut n0 = DEFAULT_EXACT_LEVELS.min(levels);
            loop {
                match seed(n0) {
                    Ok(s) => return Ok((propagate_from(s, levels - n0)?, n0)),
                    Err(e) if e.is_budget() && n0 > 0 => n0 -= 1,
                    Err(e) if e.is_budget() => {
                        let f0 = channel_root_fidelity(base)?;
                        return Ok((propagate_all(f0, levels)?, 0));
                    }
                    Err(e) => return Err(e),
                }
            }
        }
    }
}

/// Fraction of indices with f_hi ≤ `threshold`.
pub fn good_fraction(intervals: &[ReliabilityInterval], threshold: f64) -> f64 {
    if intervals.is_empty() {
        return 0.0;
    }
    intervals.iter().filter(|iv| iv.f_hi <= threshold).count() as f64 / intervals.len() as f64
}

/// min over K-subsets of Σ f_hi, i.e. the sum of the K smallest upper
/// bounds.
pub fn smallest_sum(intervals: &[ReliabilityInterval], k: usize) -> f64 {
    let mut v: Vec<f64> = intervals.iter().map(|iv| iv.f_hi).collect();
    v.sort_by(f64::total_cmp);
    v.iter().take(k).sum()
}

#[derive(Serialize)]
struct BoundsRow {
    index: usize,
    f_lo: f64,
    f_hi: f64,
    holevo_lo: f64,
    holevo_hi: f64,
}

/// CSV with a `# schema=` line, then index (1-based), f_lo, f_hi,
/// holevo_lo, holevo_hi.
pub fn write_bounds_csv<W: Write>(intervals: &[ReliabilityInterval], mut out: W) -> Result<()> {
    writeln!(out, "# schema={BOUNDS_CSV_SCHEMA}")?;
    let mut w = csv::Writer::from_writer(out);
    for (k, iv) in intervals.iter().enumerate() {
        let (holevo_lo, holevo_hi) = iv.holevo_bounds();
        w.serialize(BoundsRow { index: k + 1, f_lo: iv.f_lo, f_hi: iv.f_hi, holevo_lo, holevo_hi })?;
    }
    w.flush()?;
    Ok(())
}
