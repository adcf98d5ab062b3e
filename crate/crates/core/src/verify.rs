//! Invariant checks run by `cqpolar verify`.
//!
//! Each row reports the worst violation of one property on one channel:
//! for inequalities the amount by which the right side is exceeded, for
//! identities the absolute difference. A row passes when the violation is
//! at most its tolerance.

use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bounds::propagate_all;
use crate::channel::{
    channel_params, make_bec, make_bpsk, make_bsc, make_pure_overlap, random_qubit_channel, BinaryCQChannel, ChannelParams,
};
use crate::construction::{error_bound, select_information_set};
use crate::decoder::Decoder;
use crate::error::{Error, Result};
use crate::synthesis::{split_level, split_params, transform_minus, transform_plus, Budget};
use crate::transform::{encode, generator_matrix, CodeSpec};

pub const VERIFY_SCHEMA: &str = "cqpolar.verify.v1";

/// Groups of checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Encoder,
    Synthesis,
    Bounds,
    Decoder,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Encoder, Suite::Synthesis, Suite::Bounds, Suite::Decoder];
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "encoder" => Ok(Suite::Encoder),
            "synthesis" => Ok(Suite::Synthesis),
            "bounds" => Ok(Suite::Bounds),
            "decoder" => Ok(Suite::Decoder),
            other => Err(Error::Parse(format!("unknown suite '{other}' (encoder, synthesis, bounds, decoder)"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub suites: Vec<Suite>,
    /// Deepest level for exact synthesis checks.
    pub levels: u32,
    pub random_channels: usize,
    pub seed: u64,
    /// Negative control: perturbs √F(W⁺) by 1e-3 before the fidelity checks.
    pub mutate_fidelity: bool,
    pub budget: Budget,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            suites: Suite::ALL.to_vec(),
            levels: 3,
            random_channels: 3,
            seed: 2009,
            mutate_fidelity: false,
            budget: Budget::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyRow {
    pub suite: Suite,
    pub property: &'static str,
    pub channel: String,
    pub n: u32,
    pub max_violation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// The shipped channel set: four presets and seeded random qubit channels.
pub fn standard_channels(random: usize, seed: u64) -> Result<Vec<(String, BinaryCQChannel)>> {
    let mut out = vec![
        ("bsc:0.11".to_string(), make_bsc(0.11)?),
        ("bec:0.5".to_string(), make_bec(0.5)?),
        ("pure_overlap:0.5".to_string(), make_pure_overlap(0.5)?),
        ("bpsk:0.5".to_string(), make_bpsk(0.5)?),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..random {
        out.push((format!("random_qubit#{k}"), random_qubit_channel(&mut rng, 1.0)));
    }
    Ok(out)
}

struct Collector {
    rows: Vec<VerifyRow>,
}

impl Collector {
    fn push(&mut self, suite: Suite, property: &'static str, channel: &str, n: u32, violation: f64, tolerance: f64) {
        let v = if violation.is_nan() { f64::INFINITY } else { violation };
        self.rows.push(VerifyRow {
            suite,
            property,
            channel: channel.to_string(),
            n,
            max_violation: v,
            tolerance,
            passed: v <= tolerance,
        });
    }
}

fn worst(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(f64::NEG_INFINITY, |m, x| if x.is_nan() { f64::INFINITY } else { m.max(x) })
}

pub fn run(options: &VerifyOptions) -> Result<Vec<VerifyRow>> {
    let mut c = Collector { rows: Vec::new() };
    if options.suites.contains(&Suite::Encoder) {
        encoder_checks(&mut c)?;
    }
    let channels = standard_channels(options.random_channels, options.seed)?;
    for (label, w) in &channels {
        if options.suites.contains(&Suite::Synthesis) {
            synthesis_checks(&mut c, label, w, options)?;
        }
        if options.suites.contains(&Suite::Bounds) {
            bounds_checks(&mut c, label, w, options)?;
        }
        if options.suites.contains(&Suite::Decoder) {
            decoder_checks(&mut c, label, w, options)?;
        }
    }
    Ok(c.rows)
}

fn encoder_checks(c: &mut Collector) -> Result<()> {
    for levels in 1..=3u32 {
        let n = 1usize << levels;
        let g = generator_matrix(n)?;
        let mut mismatches = 0usize;
        for m in 0..1usize << n {
            let u: Vec<u8> = (0..n).map(|b| ((m >> b) & 1) as u8).collect();
            let mut x = vec![0u8; n];
            for (i, &bit) in u.iter().enumerate() {
                if bit == 1 {
                    for j in 0..n {
                        x[j] ^= g[i][j];
                    }
                }
            }
            mismatches += (encode(&u)? != x) as usize;
        }
        c.push(Suite::Encoder, "butterfly_equals_matrix", "-", levels, mismatches as f64, 0.0);
    }
    Ok(())
}

fn synthesis_checks(c: &mut Collector, label: &str, w: &BinaryCQChannel, o: &VerifyOptions) -> Result<()> {
    let step_levels = o.levels.saturating_sub(1).min(2);
    let mut rate = Vec::new();
    let mut polar = Vec::new();
    let mut plus_id = Vec::new();
    let mut minus_up = Vec::new();
    let mut order = Vec::new();
    let mut rel_sum = Vec::new();
    for k in 0..step_levels {
        for v in split_level(w, k, &o.budget)? {
            let p = channel_params(&v)?;
            let pm = channel_params(&transform_minus(&v, &o.budget)?)?;
            let pp = channel_params(&transform_plus(&v, &o.budget)?)?;
            let f = p.root_fidelity();
            let fm = pm.root_fidelity();
            let mut fp = pp.root_fidelity();
            if o.mutate_fidelity {
                fp += 1e-3;
            }
            rate.push((pm.holevo + pp.holevo - 2.0 * p.holevo).abs());
            polar.push((pm.holevo - p.holevo).max(p.holevo - pp.holevo));
            plus_id.push((fp - f * f).abs());
            minus_up.push(fm - (2.0 * f - f * f));
            order.push((f * f - fm * fm).max(fp * fp - f * f));
            rel_sum.push(fm + fp - 2.0 * f);
        }
    }
    let n = step_levels;
    c.push(Suite::Synthesis, "prop4_rate_conservation", label, n, worst(rate), 1e-7);
    c.push(Suite::Synthesis, "prop4_polarization_order", label, n, worst(polar), 1e-8);
    c.push(Suite::Synthesis, "prop5_plus_identity", label, n, worst(plus_id), 1e-8);
    c.push(Suite::Synthesis, "prop5_minus_upper", label, n, worst(minus_up), 1e-8);
    c.push(Suite::Synthesis, "prop5_fidelity_order", label, n, worst(order), 1e-8);
    c.push(Suite::Synthesis, "prop6_single_step_reliability", label, n, worst(rel_sum), 1e-8);

    let base = channel_params(w)?;
    let mut sandwich = vec![base.rate_reliability_violation()];
    for k in 1..=o.levels {
        let ps = split_params(w, k, &o.budget)?;
        let nn = (1usize << k) as f64;
        let total_i: f64 = ps.iter().map(|p| p.holevo).sum();
        let total_f: f64 = ps.iter().map(ChannelParams::root_fidelity).sum();
        c.push(Suite::Synthesis, "prop6_cumulative_rate", label, k, (total_i - nn * base.holevo).abs(), 1e-7);
        c.push(Suite::Synthesis, "prop6_cumulative_reliability", label, k, total_f - nn * base.root_fidelity(), 1e-7);
        sandwich.extend(ps.iter().map(ChannelParams::rate_reliability_violation));
    }
    c.push(Suite::Synthesis, "prop1_sandwich", label, o.levels, worst(sandwich), 1e-8);
    Ok(())
}

fn bounds_checks(c: &mut Collector, label: &str, w: &BinaryCQChannel, o: &VerifyOptions) -> Result<()> {
    let f0 = channel_params(w)?.root_fidelity();
    let mut excess = Vec::new();
    for k in 1..=o.levels {
        let exact = crate::synthesis::split_root_fidelity(w, k, &o.budget)?;
        let ivs = propagate_all(f0, k)?;
        for (iv, f) in ivs.iter().zip(&exact) {
            excess.push((iv.f_lo - f).max(f - iv.f_hi));
        }
    }
    c.push(Suite::Bounds, "interval_soundness", label, o.levels, worst(excess), 1e-9);
    Ok(())
}

fn decoder_checks(c: &mut Collector, label: &str, w: &BinaryCQChannel, o: &VerifyOptions) -> Result<()> {
    for k in 1..=2u32 {
        let n = 1usize << k;
        let dec = Decoder::new(w, k, &o.budget)?;
        let f = crate::synthesis::split_root_fidelity(w, k, &o.budget)?;
        let mut prop2 = Vec::new();
        let mut sen = Vec::new();
        for kk in 0..=n {
            let info = select_information_set(&f, kk)?;
            let bound = error_bound(&f, &info);
            let spec = CodeSpec::with_zero_frozen(n, info)?;
            prop2.push(dec.exact_block_error_frozen_average(&spec)? - bound);
            for m in 0..1usize << n {
                let u: Vec<u8> = (0..n).map(|b| ((m >> b) & 1) as u8).collect();
                let chk = dec.sen_check_message(&spec, &u)?;
                sen.push(chk.lhs - chk.rhs);
            }
        }
        let mut step = Vec::new();
        for i in 1..=n {
            step.push(dec.step_error(i)? - 0.5 * f[i - 1]);
        }
        c.push(Suite::Decoder, "prop2_block_error_bound", label, k, worst(prop2), 1e-8);
        c.push(Suite::Decoder, "sen_union_bound", label, k, worst(sen), 1e-9);
        c.push(Suite::Decoder, "step_error_vs_fidelity", label, k, worst(step), 1e-8);
    }
    Ok(())
}
