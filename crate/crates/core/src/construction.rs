//! The polar coding rule and its block-error bound.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{hybrid_intervals, propagate_all, ReliabilityInterval};
use crate::channel::{channel_root_fidelity, BinaryCQChannel};
use crate::error::{Error, Result};
use crate::synthesis::{split_root_fidelity, Budget};
use crate::transform::{CodeSpec, CodeSpecDoc};

pub const CONSTRUCTION_SCHEMA: &str = "cqpolar.construction.v1";

/// Where the per-index reliabilities come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Exact,
    Bounds,
    Hybrid,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::Bounds => "bounds",
            Backend::Hybrid => "hybrid",
        }
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Backend::Exact),
            "bounds" => Ok(Backend::Bounds),
            "hybrid" => Ok(Backend::Hybrid),
            other => Err(Error::Parse(format!("unknown backend '{other}' (exact, bounds, hybrid)"))),
        }
    }
}

/// Per-index reliabilities from the chosen backend. Exact values are
/// degenerate intervals. Also returns the exact-prefix depth.
pub fn reliabilities(
    base: &BinaryCQChannel,
    levels: u32,
    backend: Backend,
    budget: &Budget,
) -> Result<(Vec<ReliabilityInterval>, Option<u32>)> {
    match backend {
        Backend::Exact => {
            let f = split_root_fidelity(base, levels, budget)?;
            Ok((f.into_iter().map(ReliabilityInterval::exact).collect(), Some(levels)))
        }
        Backend::Bounds => Ok((propagate_all(channel_root_fidelity(base)?.clamp(0.0, 1.0), levels)?, None)),
        Backend::Hybrid => {
            let (ivs, n0) = hybrid_intervals(base, levels, None, budget)?;
            Ok((ivs, Some(n0)))
        }
    }
}

/// The K indices (0-based, ascending) of smallest value; ties go to the
/// smaller index.
pub fn select_information_set(values: &[f64], k: usize) -> Result<Vec<usize>> {
    if k > values.len() {
        return Err(Error::OutOfRange { what: "K", value: k as f64, lo: 0.0, hi: values.len() as f64 });
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut chosen = order[..k].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

/// 2·√(Σ_{i∈A} ½·f(i)).
pub fn error_bound(values: &[f64], info_set: &[usize]) -> f64 {
    let s: f64 = info_set.iter().map(|&i| 0.5 * values[i]).sum();
    2.0 * s.max(0.0).sqrt()
}

/// How frozen bits are filled in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrozenPolicy {
    Zeros,
    Random { seed: u64 },
}

pub fn choose_frozen_bits(block_length: usize, info_set: Vec<usize>, policy: FrozenPolicy) -> Result<CodeSpec> {
    let spec = CodeSpec::with_zero_frozen(block_length, info_set)?;
    match policy {
        FrozenPolicy::Zeros => Ok(spec),
        FrozenPolicy::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let values: Vec<u8> = (0..block_length - spec.info_count()).map(|_| rng.gen_range(0..=1u8)).collect();
            spec.with_frozen_values(&values)
        }
    }
}

/// A constructed code with the reliabilities it was chosen from.
#[derive(Clone, Debug)]
pub struct ConstructionReport {
    pub spec: CodeSpec,
    pub backend: Backend,
    pub exact_levels: Option<u32>,
    pub reliabilities: Vec<ReliabilityInterval>,
    pub error_bound: f64,
}

#[derive(Serialize)]
struct IndexedInterval {
    index: usize,
    f_lo: f64,
    f_hi: f64,
}

#[derive(Serialize)]
struct ReportDoc<'a> {
    schema: &'static str,
    backend: &'static str,
    exact_levels: Option<u32>,
    error_bound: f64,
    code: CodeSpecDoc,
    reliabilities: Vec<IndexedInterval>,
    #[serde(skip_serializing_if = "Option::is_none")]
    channel: Option<&'a str>,
}

impl ConstructionReport {
    /// Selects A by f_hi and evaluates the bound with f_hi.
    pub fn from_reliabilities(
        reliabilities: Vec<ReliabilityInterval>,
        k: usize,
        backend: Backend,
        exact_levels: Option<u32>,
        policy: FrozenPolicy,
    ) -> Result<Self> {
        let upper: Vec<f64> = reliabilities.iter().map(|iv| iv.f_hi).collect();
        let info = select_information_set(&upper, k)?;
        let bound = error_bound(&upper, &info);
        let spec = choose_frozen_bits(upper.len(), info, policy)?;
        Ok(ConstructionReport { spec, backend, exact_levels, reliabilities, error_bound: bound })
    }

    pub fn upper_values(&self) -> Vec<f64> {
        self.reliabilities.iter().map(|iv| iv.f_hi).collect()
    }

    /// JSON with 1-based indices; `channel` is an optional label.
    pub fn to_json(&self, channel: Option<&str>) -> Result<String> {
        let doc = ReportDoc {
            schema: CONSTRUCTION_SCHEMA,
            backend: self.backend.name(),
            exact_levels: self.exact_levels,
            error_bound: self.error_bound,
            code: CodeSpecDoc::from(&self.spec),
            reliabilities: self
                .reliabilities
                .iter()
                .enumerate()
                .map(|(k, iv)| IndexedInterval { index: k + 1, f_lo: iv.f_lo, f_hi: iv.f_hi })
                .collect(),
            channel,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }
}

/// Builds the (N = 2^n, K) polar code for `base`.
pub fn construct(
    base: &BinaryCQChannel,
    levels: u32,
    k: usize,
    backend: Backend,
    budget: &Budget,
    policy: FrozenPolicy,
) -> Result<ConstructionReport> {
    let (ivs, exact_levels) = reliabilities(base, levels, backend, budget)?;
    ConstructionReport::from_reliabilities(ivs, k, backend, exact_levels, policy)
}

/// K = ⌊N·R⌋.
pub fn info_count_for_rate(block_length: usize, rate: f64) -> Result<usize> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::OutOfRange { what: "rate", value: rate, lo: 0.0, hi: 1.0 });
    }
    Ok((block_length as f64 * rate).floor() as usize)
}
