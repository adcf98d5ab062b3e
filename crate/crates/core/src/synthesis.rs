//! Channel combining and splitting: W ↦ (W⁻, W⁺) and the split channels
//! W_N^(i), with exact rate and reliability parameters.
//!
//! Split channel i at level n is reached by reading the bits b₁…b_n of i−1
//! from the most significant end: 0 applies the minus transform, 1 the plus
//! transform.

use std::str::FromStr;
use std::sync::Arc;

use faer::{Mat, Side};
use rayon::prelude::*;

use crate::channel::{BinaryCQChannel, Branch, BranchTerms, ChannelParams, ParamAccumulator};
use crate::error::{Error, Result};
use crate::operator::{entropy_of_spectrum, root_fidelity, singular_value_sum, Complex64, DensityOperator};
use crate::transform::encode;

/// Plus-transform branches whose state pairs are this close in Frobenius
/// norm are merged.
pub const MERGE_TOL: f64 = 1e-10;

/// Exact synthesis never goes deeper than this many levels.
pub const EXACT_LEVEL_CAP: u32 = 16;

/// Ratio of the per-level cap on stored scalars to `max_elements`.
pub const TOTAL_ELEMENTS_FACTOR: usize = 256;

/// Resource caps for exact synthesis.
///
/// `max_elements` bounds the stored scalars of one conditional state: the
/// dimension for diagonal states, its square for dense ones. A whole
/// materialized level may hold at most [`TOTAL_ELEMENTS_FACTOR`] times that.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_elements: usize,
    pub max_branches: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_elements: 65536, max_branches: 4096 }
    }
}

impl Budget {
    pub const ENV: &'static str = "CQPOLAR_BUDGET";

    /// Reads `CQPOLAR_BUDGET` if set, else the defaults.
    pub fn from_env() -> Result<Self> {
        match std::env::var(Self::ENV) {
            Ok(s) => s.parse(),
            Err(_) => Ok(Self::default()),
        }
    }

    fn state_elements(dim: usize, diagonal: bool) -> u128 {
        if diagonal {
            dim as u128
        } else {
            (dim as u128) * (dim as u128)
        }
    }

    pub fn check_state(&self, dim: usize, diagonal: bool) -> Result<()> {
        let required = Self::state_elements(dim, diagonal);
        if required > self.max_elements as u128 {
            return Err(Error::BudgetExceeded {
                what: "state elements",
                required,
                limit: self.max_elements as u128,
            });
        }
        Ok(())
    }

    pub fn check_branches(&self, count: u128) -> Result<()> {
        if count > self.max_branches as u128 {
            return Err(Error::BudgetExceeded {
                what: "branch count",
                required: count,
                limit: self.max_branches as u128,
            });
        }
        Ok(())
    }

    /// Caps the scalars stored by all states of one materialized level.
    pub fn check_total(&self, required: u128) -> Result<()> {
        let limit = self.max_elements as u128 * TOTAL_ELEMENTS_FACTOR as u128;
        if required > limit {
            return Err(Error::BudgetExceeded { what: "stored elements", required, limit });
        }
        Ok(())
    }

    fn check_levels(levels: u32) -> Result<()> {
        if levels > EXACT_LEVEL_CAP {
            return Err(Error::BudgetExceeded {
                what: "exact synthesis levels",
                required: levels as u128,
                limit: EXACT_LEVEL_CAP as u128,
            });
        }
        Ok(())
    }
}

/// `elements=<n>,branches=<n>`; either key may be omitted.
impl FromStr for Budget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut budget = Budget::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("budget entry '{part}' is not key=value")))?;
            let value: usize = value
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("budget value '{value}' is not a count")))?;
            match key.trim() {
                "elements" => budget.max_elements = value,
                "branches" => budget.max_branches = value,
                other => return Err(Error::Parse(format!("unknown budget key '{other}'"))),
            }
        }
        Ok(budget)
    }
}

/// Position i ∈ 1..2^n of a split channel at level n.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SplitChannelIndex {
    levels: u32,
    index: usize,
}

impl SplitChannelIndex {
    pub fn new(levels: u32, index: usize) -> Result<Self> {
        if levels >= usize::BITS - 1 {
            return Err(Error::OutOfRange { what: "level", value: levels as f64, lo: 0.0, hi: 62.0 });
        }
        let n = 1usize << levels;
        if index == 0 || index > n {
            return Err(Error::OutOfRange { what: "split channel index", value: index as f64, lo: 1.0, hi: n as f64 });
        }
        Ok(SplitChannelIndex { levels, index })
    }

    /// The index whose expansion is `bits` (b₁ first).
    pub fn from_expansion(bits: &[u8]) -> Result<Self> {
        let zero_based = bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
        Self::new(bits.len() as u32, zero_based + 1)
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn index(&self) -> usize {
        self.index
    }

    /// b₁…b_n of i−1, most significant first.
    pub fn expansion(&self) -> Vec<u8> {
        let z = self.index - 1;
        (0..self.levels).rev().map(|k| ((z >> k) & 1) as u8).collect()
    }
}

fn minus_states(a: &Branch, b: &Branch) -> [DensityOperator; 2] {
    [0u8, 1].map(|u| {
        let first = a.sigma(u).matrix().kron(b.sigma0.matrix());
        let second = a.sigma(u ^ 1).matrix().kron(b.sigma1.matrix());
        let m = first.scaled(0.5).add_scaled(&second, 0.5).expect("equal dimensions");
        DensityOperator::new_unchecked(m)
    })
}

fn minus_branch(a: &Branch, b: &Branch) -> Branch {
    let [s0, s1] = minus_states(a, b);
    Branch { weight: a.weight * b.weight, sigma0: Arc::new(s0), sigma1: Arc::new(s1) }
}

fn plus_branch(a: &Branch, b: &Branch, u1: u8) -> Branch {
    Branch {
        weight: a.weight * b.weight / 2.0,
        sigma0: Arc::new(DensityOperator::kron_shared(a.sigma(u1), &b.sigma0)),
        sigma1: Arc::new(DensityOperator::kron_shared(a.sigma(u1 ^ 1), &b.sigma1)),
    }
}

/// Checks the per-state and branch caps for one transform of `w`; returns
/// the scalars its (unmerged) output would store.
fn check_step(w: &BinaryCQChannel, budget: &Budget, branch_factor: u128) -> Result<u128> {
    let d = w.quantum_dim();
    let dim = d.checked_mul(d).ok_or(Error::BudgetExceeded {
        what: "state elements",
        required: u128::MAX,
        limit: budget.max_elements as u128,
    })?;
    budget.check_state(dim, w.is_diagonal())?;
    let b = w.branch_count() as u128;
    budget.check_branches(branch_factor * b * b)?;
    Ok(branch_factor * b * b * 2 * Budget::state_elements(dim, w.is_diagonal()))
}

/// W⁻: the bit u₁ = u₁ ⊕ u₂ seen with u₂ uniformly unknown.
pub fn transform_minus(w: &BinaryCQChannel, budget: &Budget) -> Result<BinaryCQChannel> {
    budget.check_total(check_step(w, budget, 1)?)?;
    let mut branches = Vec::with_capacity(w.branch_count().pow(2));
    for a in w.branches() {
        for b in w.branches() {
            branches.push(minus_branch(a, b));
        }
    }
    Ok(BinaryCQChannel::from_branches_unchecked(w.quantum_dim().pow(2), branches))
}

/// W⁺: the bit u₂ seen with u₁ revealed as a classical register.
pub fn transform_plus(w: &BinaryCQChannel, budget: &Budget) -> Result<BinaryCQChannel> {
    budget.check_total(check_step(w, budget, 2)?)?;
    let mut branches = Vec::with_capacity(2 * w.branch_count().pow(2));
    for a in w.branches() {
        for b in w.branches() {
            for u1 in [0u8, 1] {
                branches.push(plus_branch(a, b, u1));
            }
        }
    }
    Ok(BinaryCQChannel::from_branches_unchecked(w.quantum_dim().pow(2), merge_branches(branches)))
}

fn merge_branches(branches: Vec<Branch>) -> Vec<Branch> {
    let mut merged: Vec<Branch> = Vec::with_capacity(branches.len());
    'outer: for b in branches {
        for m in merged.iter_mut() {
            if m.sigma0.close_to(&b.sigma0, MERGE_TOL) && m.sigma1.close_to(&b.sigma1, MERGE_TOL) {
                m.weight += b.weight;
                continue 'outer;
            }
        }
        merged.push(b);
    }
    merged
}

/// One transform: 0 for minus, 1 for plus.
pub fn transform(w: &BinaryCQChannel, bit: u8, budget: &Budget) -> Result<BinaryCQChannel> {
    if bit == 0 {
        transform_minus(w, budget)
    } else {
        transform_plus(w, budget)
    }
}

/// W_N^(i), built by applying the transforms along b₁…b_n.
pub fn split_channel(base: &BinaryCQChannel, idx: SplitChannelIndex, budget: &Budget) -> Result<BinaryCQChannel> {
    Budget::check_levels(idx.levels())?;
    let mut w = base.clone();
    for bit in idx.expansion() {
        w = transform(&w, bit, budget)?;
    }
    Ok(w)
}

/// All 2^k split channels at level k, index order.
pub fn split_level(base: &BinaryCQChannel, levels: u32, budget: &Budget) -> Result<Vec<BinaryCQChannel>> {
    Budget::check_levels(levels)?;
    let mut level = vec![base.clone()];
    for _ in 0..levels {
        let mut total = 0u128;
        for w in &level {
            total += check_step(w, budget, 1)? + check_step(w, budget, 2)?;
        }
        budget.check_total(total)?;
        let mut next = Vec::with_capacity(2 * level.len());
        for w in &level {
            next.push(transform_minus(w, budget)?);
            next.push(transform_plus(w, budget)?);
        }
        level = next;
    }
    Ok(level)
}

/// Which parameters to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wanted {
    Holevo,
    Fidelity,
    Both,
}

impl Wanted {
    fn entropy(self) -> bool {
        self != Wanted::Fidelity
    }

    fn fidelity(self) -> bool {
        self != Wanted::Holevo
    }
}

/// Per-branch quantities of a channel about to be transformed once more.
#[derive(Clone, Copy, Debug)]
struct BranchStats {
    entropy: [f64; 2],
    entropy_mean: f64,
    root_fidelity: f64,
}

fn branch_stats(b: &Branch, want: Wanted) -> Result<BranchStats> {
    let mut stats = BranchStats { entropy: [f64::NAN; 2], entropy_mean: f64::NAN, root_fidelity: f64::NAN };
    if want.entropy() {
        let t = b.entropy_terms()?;
        stats.entropy = [t.entropy0, t.entropy1];
        stats.entropy_mean = t.entropy_mean;
    }
    if want.fidelity() {
        stats.root_fidelity = root_fidelity(&b.sigma0, &b.sigma1)?;
    }
    Ok(stats)
}

/// Root fidelity and entropies of the minus outputs σ⁻_u(a, b).
///
/// σ⁻_u(b, a) is σ⁻_u(a, b) with the two factors swapped, so these values
/// are symmetric in (a, b).
fn minus_spectral(a: &Branch, b: &Branch, want: Wanted) -> Result<(f64, [f64; 2])> {
    let [s0, s1] = minus_states(a, b);
    let mut rf = f64::NAN;
    let mut h = [f64::NAN; 2];
    if want.fidelity() {
        rf = root_fidelity(&s0, &s1)?;
    }
    if want.entropy() {
        h = [entropy_of_spectrum(s0.spectrum()?), entropy_of_spectrum(s1.spectrum()?)];
    }
    Ok((rf, h))
}

/// Terms of the minus branch (a, b) and of the plus branches (a, b, 0)
/// and (a, b, 1).
///
/// The minus output σ⁻_u equals the mean output of the plus branch with
/// u₁ = u, so one spectrum serves both. The minus mean is the product of
/// the input means. Plus outputs are products, so their entropies add and
/// their root fidelity multiplies.
fn pair_terms(weight: f64, sa: &BranchStats, sb: &BranchStats, rf: f64, h: [f64; 2]) -> [BranchTerms; 3] {
    let minus = BranchTerms {
        weight,
        entropy_mean: sa.entropy_mean + sb.entropy_mean,
        entropy0: h[0],
        entropy1: h[1],
        root_fidelity: rf,
    };
    let plus = |u: usize| BranchTerms {
        weight: weight / 2.0,
        entropy_mean: h[u],
        entropy0: sa.entropy[u] + sb.entropy[0],
        entropy1: sa.entropy[u ^ 1] + sb.entropy[1],
        root_fidelity: sa.root_fidelity * sb.root_fidelity,
    };
    [minus, plus(0), plus(1)]
}

fn base_terms(b: &Branch, want: Wanted) -> Result<BranchTerms> {
    match want {
        Wanted::Holevo => b.entropy_terms(),
        Wanted::Fidelity => b.fidelity_terms(),
        Wanted::Both => b.terms(),
    }
}

/// Accumulated terms for every split channel at level n. The last level
/// is streamed branch by branch and never stored.
fn split_accumulators(base: &BinaryCQChannel, levels: u32, budget: &Budget, want: Wanted) -> Result<Vec<ParamAccumulator>> {
    if levels == 0 {
        let mut acc = ParamAccumulator::default();
        for b in base.branches() {
            acc.add(&base_terms(b, want)?);
        }
        return Ok(vec![acc]);
    }
    let parents = split_level(base, levels - 1, budget)?;
    for (w, factor) in parents.iter().flat_map(|w| [(w, 1u128), (w, 2u128)]) {
        check_step(w, budget, factor)?;
    }
    let stats: Vec<Vec<BranchStats>> = parents
        .iter()
        .map(|w| w.branches().iter().map(|b| branch_stats(b, want)).collect())
        .collect::<Result<_>>()?;
    let children: Vec<[ParamAccumulator; 2]> = parents
        .par_iter()
        .zip(stats.par_iter())
        .map(|(w, st)| {
            let (mut minus, mut plus) = (ParamAccumulator::default(), ParamAccumulator::default());
            let branches = w.branches();
            for (ia, a) in branches.iter().enumerate() {
                for (ib, b) in branches.iter().enumerate().skip(ia) {
                    let (rf, h) = minus_spectral(a, b, want)?;
                    let weight = a.weight * b.weight;
                    let mut terms = vec![pair_terms(weight, &st[ia], &st[ib], rf, h)];
                    if ib != ia {
                        terms.push(pair_terms(weight, &st[ib], &st[ia], rf, h));
                    }
                    for [m, p0, p1] in terms {
                        minus.add(&m);
                        plus.add(&p0);
                        plus.add(&p1);
                    }
                }
            }
            Ok([minus, plus])
        })
        .collect::<Result<_>>()?;
    Ok(children.into_iter().flatten().collect())
}

/// (I, F) of W_N^(i) for i = 1..2^n.
pub fn split_params(base: &BinaryCQChannel, levels: u32, budget: &Budget) -> Result<Vec<ChannelParams>> {
    Ok(split_accumulators(base, levels, budget, Wanted::Both)?.iter().map(|a| a.params()).collect())
}

/// I(W_N^(i)) for i = 1..2^n, skipping the fidelities.
pub fn split_holevo(base: &BinaryCQChannel, levels: u32, budget: &Budget) -> Result<Vec<f64>> {
    Ok(split_accumulators(base, levels, budget, Wanted::Holevo)?.iter().map(|a| a.holevo()).collect())
}

/// √F(W_N^(i)) for i = 1..2^n, skipping the entropies.
pub fn split_root_fidelity(base: &BinaryCQChannel, levels: u32, budget: &Budget) -> Result<Vec<f64>> {
    Ok(split_accumulators(base, levels, budget, Wanted::Fidelity)?
        .iter()
        .map(|a| a.root_fidelity())
        .collect())
}

/// Codewords x = (0^{i−1}, b, f)·G_N over all futures f, bit-packed, for
/// b = 0 then b = 1.
fn future_codewords(block_length: usize, index: usize) -> Result<[Vec<Vec<u64>>; 2]> {
    let futures = block_length - index;
    let count = 1usize << futures;
    let words = block_length.div_ceil(64);
    let mut out: [Vec<Vec<u64>>; 2] = [Vec::with_capacity(count), Vec::with_capacity(count)];
    let mut u = vec![0u8; block_length];
    for (bit, slot) in out.iter_mut().enumerate() {
        for f in 0..count {
            u[index - 1] = bit as u8;
            for k in 0..futures {
                u[index + k] = ((f >> k) & 1) as u8;
            }
            let x = encode(&u)?;
            let mut packed = vec![0u64; words];
            for (j, &xj) in x.iter().enumerate() {
                packed[j / 64] |= (xj as u64) << (j % 64);
            }
            slot.push(packed);
        }
    }
    Ok(out)
}

fn distance(a: &[u64], b: &[u64]) -> usize {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones() as usize).sum()
}

fn real_entropy(gram: &Mat<f64>) -> Result<f64> {
    let values = gram.self_adjoint_eigenvalues(Side::Lower).map_err(|_| Error::EigenFailed)?;
    Ok(entropy_of_spectrum(&values))
}

/// (I, F) of selected split channels of a pure-state channel with real
/// overlap `overlap`, from Gram matrices of the product vectors.
///
/// The averaged output for a prefix is a uniform mixture of product
/// vectors whose inner products are overlap^{d(x, x′)}. That depends only
/// on x ⊕ x′, so every prefix gives the same entropies and fidelity and
/// the all-zero prefix stands for all of them. `indices` are 1-based.
pub fn gram_split_params(overlap: f64, levels: u32, indices: &[usize], budget: &Budget) -> Result<Vec<ChannelParams>> {
    if !(-1.0..=1.0).contains(&overlap) {
        return Err(Error::OutOfRange { what: "overlap", value: overlap, lo: -1.0, hi: 1.0 });
    }
    let n = 1usize << levels;
    let powers: Vec<f64> = (0..=n).map(|k| overlap.powi(k as i32)).collect();
    indices
        .iter()
        .map(|&i| {
            SplitChannelIndex::new(levels, i)?;
            let futures = n - i;
            if futures >= 32 {
                return Err(Error::BudgetExceeded {
                    what: "Gram matrix size",
                    required: u128::MAX,
                    limit: budget.max_elements as u128,
                });
            }
            budget.check_state(2usize << futures, false)?;
            let [zero, one] = future_codewords(n, i)?;
            let m = zero.len();
            let all: Vec<&Vec<u64>> = zero.iter().chain(one.iter()).collect();
            let mean = Mat::<f64>::from_fn(2 * m, 2 * m, |r, c| powers[distance(all[r], all[c])] / (2 * m) as f64);
            let given = Mat::<f64>::from_fn(m, m, |r, c| powers[distance(&zero[r], &zero[c])] / m as f64);
            let cross = Mat::<Complex64>::from_fn(m, m, |r, c| {
                Complex64::new(powers[distance(&zero[r], &one[c])] / m as f64, 0.0)
            });
            let holevo = real_entropy(&mean)? - real_entropy(&given)?;
            let root = singular_value_sum(&cross)?;
            Ok(ChannelParams { holevo, fidelity: root.min(1.0).powi(2) })
        })
        .collect()
}
