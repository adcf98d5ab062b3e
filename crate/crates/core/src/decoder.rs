//! Successive-cancellation decoding with binary projective measurements.
//!
//! At position i with estimated prefix û^{i−1}, the decoder measures
//! {Π₀, Π₁} with Π₀ = {√ρ̄_{û^{i−1}0} − √ρ̄_{û^{i−1}1} ≥ 0}, where ρ̄ averages
//! the output ρ_{u^N} uniformly over every later bit, frozen or not.
//! Frozen positions are not measured (Π = I).
//!
//! Output states ⊗_j ρ_{x_j} are handled as weighted pure product
//! components built from the eigendecompositions of ρ₀ and ρ₁.

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, RwLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::BinaryCQChannel;
use crate::error::{Error, Result};
use crate::operator::{
    eig_hermitian, kron_vec, positive_eigenspace_projector, Complex64, DensityOperator, HermitianMatrix, Matrix,
    ProjectorMatrix, ZERO_TOL,
};
use crate::synthesis::Budget;
use crate::transform::{encode, CodeSpec};

/// Trials whose observed outcome had smaller probability are aborted.
pub const COLLAPSE_TOL: f64 = 1e-14;

/// Eigen-components of the base states below this weight are dropped.
const COMPONENT_TOL: f64 = 1e-15;

/// Largest K for which the 2^K messages are enumerated exactly.
pub const EXACT_MESSAGE_CAP: usize = 12;

/// Largest N for which all 2^N (message, frozen) pairs are enumerated.
pub const FROZEN_AVERAGE_CAP: usize = 12;

pub const TRAJECTORY_CSV_SCHEMA: &str = "cqpolar.trajectory.v1";

/// Which binary measurement decides each information bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measurement {
    /// {√ρ̄₀ − √ρ̄₁ ≥ 0}.
    SquareRoot,
    /// {ρ̄₀ − ρ̄₁ ≥ 0}; for comparison only.
    Helstrom,
}

/// The two outcomes of one decision, Π₀ + Π₁ = I.
#[derive(Clone, Debug)]
pub struct DecisionProjectorPair {
    pub pi0: ProjectorMatrix,
    pub pi1: ProjectorMatrix,
}

impl DecisionProjectorPair {
    pub fn outcome(&self, bit: u8) -> &ProjectorMatrix {
        if bit == 0 {
            &self.pi0
        } else {
            &self.pi1
        }
    }
}

/// A pure component ψ with weight p of a mixed state.
#[derive(Clone, Debug)]
struct Component {
    weight: f64,
    vector: Vec<Complex64>,
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Both sides of the non-commutative union bound for one projector
/// sequence and state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SenCheck {
    /// 1 − Tr{Π_N⋯Π₁ ρ Π₁⋯Π_N}.
    pub lhs: f64,
    /// 2√(Σ_i Tr{(I − Π_i)ρ}).
    pub rhs: f64,
    /// Σ_i Tr{(I − Π_i)ρ}, the commuting-case union bound.
    pub commuting_sum: f64,
    pub holds: bool,
}

impl SenCheck {
    fn new(lhs: f64, commuting_sum: f64) -> Self {
        let rhs = 2.0 * commuting_sum.max(0.0).sqrt();
        SenCheck { lhs, rhs, commuting_sum, holds: lhs <= rhs + 1e-9 }
    }
}

/// Evaluates the union bound for projectors applied in order Π₁, Π₂, ….
pub fn sen_bound_check(projectors: &[ProjectorMatrix], rho: &DensityOperator) -> Result<SenCheck> {
    let mut state = rho.matrix().clone();
    let mut sum = 0.0;
    for p in projectors {
        if p.dim() != rho.dim() {
            return Err(Error::DimensionMismatch(p.dim(), rho.dim()));
        }
        sum += p.complement().matrix().trace_of_product(rho.matrix())?.re;
        state = state.sandwich(p.matrix())?;
    }
    Ok(SenCheck::new(1.0 - state.trace().re, sum))
}

/// One simulated decoding run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub message: Vec<u8>,
    pub estimates: Vec<u8>,
    /// Probability of the observed outcome at each position (1 at frozen
    /// positions).
    pub outcome_probabilities: Vec<f64>,
    pub success: bool,
    /// Probability of the whole observed outcome sequence for the sampled
    /// component.
    pub residual_trace: f64,
    pub aborted: bool,
}

/// Monte Carlo block-error estimate.
#[derive(Clone, Debug, Serialize)]
pub struct MonteCarloSummary {
    pub trials: usize,
    pub errors: usize,
    pub aborted: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub sen_checks_passed: usize,
    pub sen_checks_failed: usize,
    pub max_sen_slack_violation: f64,
}

type PrefixKey = Vec<u8>;

/// Exact SC decoder state for one base channel and block length.
///
/// Decision projectors depend only on the base channel, the position and
/// the prefix, so one cache serves every code of this length.
pub struct Decoder {
    rho: [Arc<DensityOperator>; 2],
    components: [Vec<Component>; 2],
    levels: u32,
    measurement: Measurement,
    dim: usize,
    cache: RwLock<HashMap<PrefixKey, Arc<DecisionProjectorPair>>>,
}

impl Decoder {
    /// Requires a single-branch channel and d^N within the state budget.
    pub fn new(base: &BinaryCQChannel, levels: u32, budget: &Budget) -> Result<Self> {
        let (r0, r1) = base.base_states()?;
        let n = 1usize << levels;
        let d = base.quantum_dim();
        let dim = (0..n).try_fold(1usize, |acc, _| acc.checked_mul(d)).ok_or(Error::BudgetExceeded {
            what: "decoder dimension",
            required: u128::MAX,
            limit: budget.max_elements as u128,
        })?;
        budget.check_state(dim, base.is_diagonal())?;
        Ok(Decoder {
            rho: [Arc::clone(r0), Arc::clone(r1)],
            components: [state_components(r0)?, state_components(r1)?],
            levels,
            measurement: Measurement::SquareRoot,
            dim,
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn with_measurement(mut self, measurement: Measurement) -> Self {
        self.measurement = measurement;
        self.cache = RwLock::new(HashMap::new());
        self
    }

    pub fn measurement(&self) -> Measurement {
        self.measurement
    }

    pub fn block_length(&self) -> usize {
        1 << self.levels
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// Dimension d^N of the output space.
    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check_spec(&self, spec: &CodeSpec) -> Result<()> {
        if spec.block_length() != self.block_length() {
            return Err(Error::LengthMismatch { expected: self.block_length(), actual: spec.block_length() });
        }
        Ok(())
    }

    fn product_state(&self, x: &[u8]) -> DensityOperator {
        let mut m = self.rho[x[0] as usize].matrix().clone();
        for &b in &x[1..] {
            m = m.kron(self.rho[b as usize].matrix());
        }
        DensityOperator::new_unchecked(m)
    }

    /// ρ_{u^N} = ⊗_j ρ_{x_j} with x = u·G_N.
    pub fn output_state(&self, u: &[u8]) -> Result<DensityOperator> {
        if u.len() != self.block_length() {
            return Err(Error::LengthMismatch { expected: self.block_length(), actual: u.len() });
        }
        Ok(self.product_state(&encode(u)?))
    }

    fn output_components(&self, u: &[u8]) -> Result<Vec<Component>> {
        let x = encode(u)?;
        let mut acc = vec![Component { weight: 1.0, vector: vec![Complex64::new(1.0, 0.0)] }];
        for &b in &x {
            let mut next = Vec::with_capacity(acc.len() * self.components[b as usize].len());
            for c in &acc {
                for f in &self.components[b as usize] {
                    next.push(Component { weight: c.weight * f.weight, vector: kron_vec(&c.vector, &f.vector) });
                }
            }
            acc = next;
        }
        Ok(acc)
    }

    /// ρ̄_{u^i}: the output averaged uniformly over u_{i+1}…u_N.
    pub fn averaged_state(&self, prefix: &[u8]) -> Result<DensityOperator> {
        let n = self.block_length();
        if prefix.len() > n {
            return Err(Error::LengthMismatch { expected: n, actual: prefix.len() });
        }
        let futures = n - prefix.len();
        let count = 1usize << futures;
        let mut u = vec![0u8; n];
        u[..prefix.len()].copy_from_slice(prefix);
        let mut acc: Option<Matrix> = None;
        for f in 0..count {
            for k in 0..futures {
                u[prefix.len() + k] = ((f >> k) & 1) as u8;
            }
            let m = self.product_state(&encode(&u)?).matrix().clone();
            acc = Some(match acc {
                None => m,
                Some(a) => a.add(&m)?,
            });
        }
        let total = acc.expect("at least one future").scaled(1.0 / count as f64);
        Ok(DensityOperator::new_unchecked(total))
    }

    /// The measurement deciding u_i, i = prefix.len() + 1, after `prefix`.
    pub fn decision_projectors(&self, prefix: &[u8]) -> Result<Arc<DecisionProjectorPair>> {
        if prefix.len() >= self.block_length() {
            return Err(Error::LengthMismatch { expected: self.block_length() - 1, actual: prefix.len() });
        }
        if let Some(p) = self.cache.read().expect("cache lock").get(prefix) {
            return Ok(Arc::clone(p));
        }
        let mut with0 = prefix.to_vec();
        with0.push(0);
        let mut with1 = prefix.to_vec();
        with1.push(1);
        let (s0, s1) = (self.averaged_state(&with0)?, self.averaged_state(&with1)?);
        let diff = match self.measurement {
            Measurement::SquareRoot => s0.sqrt()?.sub(s1.sqrt()?)?,
            Measurement::Helstrom => s0.matrix().sub(s1.matrix())?,
        };
        let pi0 = positive_eigenspace_projector(&HermitianMatrix::new_unchecked(diff), ZERO_TOL)?;
        let pi1 = pi0.complement();
        let pair = Arc::new(DecisionProjectorPair { pi0, pi1 });
        self.cache.write().expect("cache lock").insert(prefix.to_vec(), Arc::clone(&pair));
        Ok(pair)
    }

    /// Π_i along the correct path for message u (identity at frozen
    /// positions).
    pub fn true_path_projectors(&self, spec: &CodeSpec, u: &[u8]) -> Result<Vec<ProjectorMatrix>> {
        self.check_spec(spec)?;
        (0..self.block_length())
            .map(|i| {
                if spec.is_info(i) {
                    Ok(self.decision_projectors(&u[..i])?.outcome(u[i]).clone())
                } else {
                    Ok(ProjectorMatrix::identity(self.dim))
                }
            })
            .collect()
    }

    /// Tr{Π_N⋯Π₁ ρ_{u^N} Π₁⋯Π_N} along the correct path.
    pub fn success_probability(&self, spec: &CodeSpec, u: &[u8]) -> Result<f64> {
        self.check_spec(spec)?;
        let mut comps = self.output_components(u)?;
        for i in 0..self.block_length() {
            if !spec.is_info(i) {
                continue;
            }
            let pair = self.decision_projectors(&u[..i])?;
            let p = pair.outcome(u[i]).matrix();
            for c in comps.iter_mut() {
                c.vector = p.apply(&c.vector);
            }
        }
        Ok(comps.iter().map(|c| c.weight * norm_sqr(&c.vector)).sum())
    }

    /// Union bound for message u: Π_i along the correct path, ρ = ρ_{u^N}.
    pub fn sen_check_message(&self, spec: &CodeSpec, u: &[u8]) -> Result<SenCheck> {
        self.check_spec(spec)?;
        let fresh = self.output_components(u)?;
        let mut comps = fresh.clone();
        let mut sum = 0.0;
        for i in 0..self.block_length() {
            if !spec.is_info(i) {
                continue;
            }
            let pair = self.decision_projectors(&u[..i])?;
            let wrong = pair.outcome(u[i] ^ 1).matrix();
            let right = pair.outcome(u[i]).matrix();
            sum += fresh.iter().map(|c| c.weight * norm_sqr(&wrong.apply(&c.vector))).sum::<f64>();
            for c in comps.iter_mut() {
                c.vector = right.apply(&c.vector);
            }
        }
        let success: f64 = comps.iter().map(|c| c.weight * norm_sqr(&c.vector)).sum();
        Ok(SenCheck::new(1.0 - success, sum))
    }

    /// P_e for the spec's frozen vector, averaged over uniform u_A.
    pub fn exact_block_error(&self, spec: &CodeSpec) -> Result<f64> {
        self.check_spec(spec)?;
        let k = spec.info_count();
        if k > EXACT_MESSAGE_CAP {
            return Err(Error::BudgetExceeded {
                what: "exact message count (log2)",
                required: k as u128,
                limit: EXACT_MESSAGE_CAP as u128,
            });
        }
        let messages: Vec<Vec<u8>> = (0..1usize << k)
            .map(|m| spec.assemble(&(0..k).map(|b| ((m >> b) & 1) as u8).collect::<Vec<_>>()))
            .collect::<Result<_>>()?;
        let success: Vec<f64> = messages
            .par_iter()
            .map(|u| self.success_probability(spec, u))
            .collect::<Result<_>>()?;
        Ok(1.0 - success.iter().sum::<f64>() / messages.len() as f64)
    }

    /// P_e averaged over uniform u_A and every frozen vector.
    pub fn exact_block_error_frozen_average(&self, spec: &CodeSpec) -> Result<f64> {
        self.check_spec(spec)?;
        let n = self.block_length();
        if n > FROZEN_AVERAGE_CAP {
            return Err(Error::BudgetExceeded {
                what: "block length for frozen averaging",
                required: n as u128,
                limit: FROZEN_AVERAGE_CAP as u128,
            });
        }
        let all: Vec<Vec<u8>> = (0..1usize << n).map(|m| (0..n).map(|b| ((m >> b) & 1) as u8).collect()).collect();
        let success: Vec<f64> = all
            .par_iter()
            .map(|u| self.success_probability(spec, u))
            .collect::<Result<_>>()?;
        Ok(1.0 - success.iter().sum::<f64>() / all.len() as f64)
    }

    /// Average single-step error at position i (1-based) with the correct
    /// prefix known: 2^{−(i−1)} Σ_{u^{i−1}} Σ_{u_i} ½ Tr{(I − Π_{u^i}) ρ̄_{u^i}}.
    pub fn step_error(&self, i: usize) -> Result<f64> {
        let n = self.block_length();
        if i == 0 || i > n {
            return Err(Error::OutOfRange { what: "position", value: i as f64, lo: 1.0, hi: n as f64 });
        }
        let prefixes = 1usize << (i - 1);
        let mut total = 0.0;
        for m in 0..prefixes {
            let prefix: Vec<u8> = (0..i - 1).map(|b| ((m >> b) & 1) as u8).collect();
            let pair = self.decision_projectors(&prefix)?;
            for bit in [0u8, 1] {
                let mut full = prefix.clone();
                full.push(bit);
                let rho = self.averaged_state(&full)?;
                total += 0.5 * pair.outcome(bit ^ 1).matrix().trace_of_product(rho.matrix())?.re;
            }
        }
        Ok(total / prefixes as f64)
    }

    /// (1/2^N) Σ_{u^N} Σ_{i∈A} Tr{(I − Π_{(i),u^i}) ρ_{u^N}}, the quantity
    /// under the square root of the union bound averaged over frozen bits.
    pub fn union_sum(&self, spec: &CodeSpec) -> Result<f64> {
        self.check_spec(spec)?;
        let n = self.block_length();
        if n > FROZEN_AVERAGE_CAP {
            return Err(Error::BudgetExceeded {
                what: "block length for frozen averaging",
                required: n as u128,
                limit: FROZEN_AVERAGE_CAP as u128,
            });
        }
        let mut total = 0.0;
        for m in 0..1usize << n {
            let u: Vec<u8> = (0..n).map(|b| ((m >> b) & 1) as u8).collect();
            total += self.sen_check_message(spec, &u)?.commuting_sum;
        }
        Ok(total / (1usize << n) as f64)
    }

    /// One decoding run for a uniformly drawn message.
    ///
    /// The mixed output is unravelled: one pure product component is drawn
    /// with its weight, then measured and collapsed step by step. This has
    /// the same outcome distribution as collapsing the density operator.
    pub fn run_trial<R: Rng + ?Sized>(&self, spec: &CodeSpec, rng: &mut R) -> Result<Trajectory> {
        self.check_spec(spec)?;
        let n = self.block_length();
        let info: Vec<u8> = (0..spec.info_count()).map(|_| rng.gen_range(0..=1u8)).collect();
        let u = spec.assemble(&info)?;
        let x = encode(&u)?;
        let mut psi = vec![Complex64::new(1.0, 0.0)];
        for &b in &x {
            let comps = &self.components[b as usize];
            let r: f64 = rng.gen();
            let mut acc = 0.0;
            let mut pick = comps.len() - 1;
            for (k, c) in comps.iter().enumerate() {
                acc += c.weight;
                if r < acc {
                    pick = k;
                    break;
                }
            }
            psi = kron_vec(&psi, &comps[pick].vector);
        }
        let mut estimates = Vec::with_capacity(n);
        let mut probs = Vec::with_capacity(n);
        let mut residual = 1.0;
        for i in 0..n {
            if !spec.is_info(i) {
                estimates.push(spec.frozen_bit(i));
                probs.push(1.0);
                continue;
            }
            let pair = self.decision_projectors(&estimates)?;
            let total = norm_sqr(&psi);
            let after0 = pair.pi0.matrix().apply(&psi);
            let p0 = (norm_sqr(&after0) / total).clamp(0.0, 1.0);
            let bit = if rng.gen::<f64>() < p0 { 0u8 } else { 1u8 };
            let p = if bit == 0 { p0 } else { 1.0 - p0 };
            if p < COLLAPSE_TOL {
                return Ok(Trajectory {
                    message: u,
                    estimates,
                    outcome_probabilities: probs,
                    success: false,
                    residual_trace: 0.0,
                    aborted: true,
                });
            }
            let after = if bit == 0 { after0 } else { pair.pi1.matrix().apply(&psi) };
            let scale = 1.0 / norm_sqr(&after).sqrt();
            psi = after.into_iter().map(|z| z * scale).collect();
            residual *= p;
            estimates.push(bit);
            probs.push(p);
        }
        let success = spec.info_set().iter().all(|&i| estimates[i] == u[i]);
        Ok(Trajectory { message: u, estimates, outcome_probabilities: probs, success, residual_trace: residual, aborted: false })
    }

    /// Trial t uses a ChaCha8 stream t under `seed`, so results do not
    /// depend on scheduling. With `check_sen`, the union bound is checked
    /// for every sampled message.
    pub fn monte_carlo(&self, spec: &CodeSpec, trials: usize, seed: u64, check_sen: bool) -> Result<(MonteCarloSummary, Vec<Trajectory>)> {
        if trials == 0 {
            return Err(Error::OutOfRange { what: "trials", value: 0.0, lo: 1.0, hi: f64::INFINITY });
        }
        let runs: Vec<Trajectory> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t as u64);
                self.run_trial(spec, &mut rng)
            })
            .collect::<Result<_>>()?;
        let aborted = runs.iter().filter(|t| t.aborted).count();
        let errors = runs.iter().filter(|t| !t.aborted && !t.success).count();
        let done = trials - aborted;
        let estimate = if done > 0 { errors as f64 / done as f64 } else { f64::NAN };
        let stderr = if done > 0 { (estimate * (1.0 - estimate) / done as f64).sqrt() } else { f64::NAN };
        let (mut passed, mut failed, mut worst) = (0, 0, f64::NEG_INFINITY);
        if check_sen {
            let mut memo: HashMap<Vec<u8>, SenCheck> = HashMap::new();
            for t in &runs {
                let check = match memo.get(&t.message) {
                    Some(c) => *c,
                    None => {
                        let c = self.sen_check_message(spec, &t.message)?;
                        memo.insert(t.message.clone(), c);
                        c
                    }
                };
                worst = worst.max(check.lhs - check.rhs);
                if check.holds {
                    passed += 1;
                } else {
                    failed += 1;
                }
            }
        }
        let summary = MonteCarloSummary {
            trials,
            errors,
            aborted,
            estimate,
            stderr,
            sen_checks_passed: passed,
            sen_checks_failed: failed,
            max_sen_slack_violation: if check_sen { worst } else { f64::NAN },
        };
        Ok((summary, runs))
    }
}

fn state_components(rho: &DensityOperator) -> Result<Vec<Component>> {
    let e = eig_hermitian(&HermitianMatrix::new(rho.matrix().clone())?)?;
    let d = rho.dim();
    let mut out: Vec<Component> = (0..d)
        .filter(|&k| e.values[k] > COMPONENT_TOL)
        .map(|k| Component { weight: e.values[k], vector: (0..d).map(|r| e.vectors[(r, k)]).collect() })
        .collect();
    let total: f64 = out.iter().map(|c| c.weight).sum();
    for c in out.iter_mut() {
        c.weight /= total;
    }
    Ok(out)
}

#[derive(Serialize)]
struct TrajectoryRow {
    trial: usize,
    position: usize,
    frozen: bool,
    bit: u8,
    estimate: u8,
    outcome_probability: f64,
}

/// Per-step CSV (positions 1-based) for debugging.
pub fn write_trajectory_csv<W: Write>(spec: &CodeSpec, runs: &[Trajectory], mut out: W) -> Result<()> {
    writeln!(out, "# schema={TRAJECTORY_CSV_SCHEMA}")?;
    let mut w = csv::Writer::from_writer(out);
    for (t, run) in runs.iter().enumerate() {
        for (i, (&est, &p)) in run.estimates.iter().zip(&run.outcome_probabilities).enumerate() {
            w.serialize(TrajectoryRow {
                trial: t,
                position: i + 1,
                frozen: !spec.is_info(i),
                bit: run.message[i],
                estimate: est,
                outcome_probability: p,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Probability of at least one failure when projectors are measured in
/// sequence, each failure being the outcome I − Π_i. Returns the empirical
/// failure rate and its standard error.
pub fn simulate_sequence(
    projectors: &[ProjectorMatrix],
    rho: &DensityOperator,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::OutOfRange { what: "trials", value: 0.0, lo: 1.0, hi: f64::INFINITY });
    }
    let start = rho.matrix().clone();
    let mut failures = 0usize;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let mut state = start.clone();
        let mut failed = false;
        for p in projectors {
            let kept = state.sandwich(p.matrix())?;
            let tr = state.trace().re;
            let pk = (kept.trace().re / tr).clamp(0.0, 1.0);
            if rng.gen::<f64>() < pk {
                state = kept;
            } else {
                state = state.sandwich(p.complement().matrix())?;
                failed = true;
            }
        }
        failures += failed as usize;
    }
    let rate = failures as f64 / trials as f64;
    Ok((rate, (rate * (1.0 - rate) / trials as f64).sqrt()))
}

/// The block-error report for one decoding configuration.
#[derive(Clone, Debug, Serialize)]
pub struct ErrorReport {
    pub schema: &'static str,
    pub measurement: Measurement,
    pub exact_block_error: Option<f64>,
    pub exact_block_error_frozen_average: Option<f64>,
    pub monte_carlo: Option<MonteCarloSummary>,
    pub prop2_bound: f64,
}

pub const ERROR_REPORT_SCHEMA: &str = "cqpolar.error_report.v1";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{make_bec, make_pure_overlap};
    use crate::operator::Matrix;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn budget() -> Budget {
        Budget::default()
    }

    #[test]
    fn footnote_counterexample() {
        let s = 0.5f64.sqrt();
        let plus = ProjectorMatrix::new(Matrix::outer(&[c(s), c(s)])).unwrap();
        let zero = ProjectorMatrix::new(Matrix::outer(&[c(1.0), c(0.0)])).unwrap();
        let rho = DensityOperator::pure(&[c(1.0), c(0.0)]).unwrap();
        let chk = sen_bound_check(&[plus, zero], &rho).unwrap();
        assert!((chk.lhs - 0.75).abs() < 1e-12);
        assert!((chk.commuting_sum - 0.5).abs() < 1e-12);
        assert!((chk.rhs - 2.0 * 0.5f64.sqrt()).abs() < 1e-12);
        assert!(chk.lhs > chk.commuting_sum && chk.holds);
    }

    #[test]
    fn sen_trivial_cases() {
        let rho = DensityOperator::maximally_mixed(2);
        let chk = sen_bound_check(&[ProjectorMatrix::identity(2), ProjectorMatrix::identity(2)], &rho).unwrap();
        assert!(chk.lhs.abs() < 1e-15 && chk.rhs.abs() < 1e-15);
        let p = ProjectorMatrix::new(Matrix::diagonal(vec![1.0, 0.0])).unwrap();
        let rho = DensityOperator::from_diagonal(vec![0.75, 0.25]).unwrap();
        let chk = sen_bound_check(&[p], &rho).unwrap();
        assert!((chk.lhs - 0.25).abs() < 1e-15 && (chk.rhs - 1.0).abs() < 1e-15);
        assert!(sen_bound_check(&[ProjectorMatrix::identity(3)], &rho).is_err());
    }

    #[test]
    fn orthogonal_outputs_decode_perfectly() {
        let w = make_pure_overlap(0.0).unwrap();
        let dec = Decoder::new(&w, 0, &budget()).unwrap();
        let pair = dec.decision_projectors(&[]).unwrap();
        let psi0 = [c(0.5f64.sqrt()), c(0.5f64.sqrt())];
        assert!((norm_sqr(&pair.pi0.matrix().apply(&psi0)) - 1.0).abs() < 1e-12);
        let spec = CodeSpec::with_zero_frozen(1, vec![0]).unwrap();
        assert!(dec.exact_block_error(&spec).unwrap().abs() < 1e-12);
    }

    #[test]
    fn identical_outputs_always_decide_zero() {
        let w = make_pure_overlap(1.0).unwrap();
        let dec = Decoder::new(&w, 1, &budget()).unwrap();
        let pair = dec.decision_projectors(&[]).unwrap();
        assert!(pair.pi0.matrix().frobenius_distance(&Matrix::identity(4)).unwrap() < 1e-12);
        let spec = CodeSpec::with_zero_frozen(2, vec![0, 1]).unwrap();
        assert!((dec.exact_block_error(&spec).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn single_use_matches_helstrom_value() {
        for overlap in [0.0, 0.3, 0.5, 0.9] {
            let w = make_pure_overlap(overlap).unwrap();
            let dec = Decoder::new(&w, 0, &budget()).unwrap();
            let spec = CodeSpec::with_zero_frozen(1, vec![0]).unwrap();
            let expected = 0.5 * (1.0 - (1.0f64 - overlap * overlap).sqrt());
            assert!((dec.exact_block_error(&spec).unwrap() - expected).abs() < 1e-12, "{overlap}");
        }
    }

    #[test]
    fn projector_pairs_are_complete() {
        let w = make_pure_overlap(0.5).unwrap();
        let dec = Decoder::new(&w, 2, &budget()).unwrap();
        for prefix in [vec![], vec![0], vec![1, 0], vec![1, 1, 0]] {
            let pair = dec.decision_projectors(&prefix).unwrap();
            let sum = pair.pi0.matrix().add(pair.pi1.matrix()).unwrap();
            assert!(sum.frobenius_distance(&Matrix::identity(16)).unwrap() < 1e-9);
            assert!(ProjectorMatrix::new(pair.pi0.matrix().clone()).is_ok());
        }
    }

    #[test]
    fn budget_limits_decoder() {
        let w = make_pure_overlap(0.5).unwrap();
        assert!(Decoder::new(&w, 4, &budget()).err().unwrap().is_budget());
        assert!(Decoder::new(&make_bec(0.5).unwrap(), 3, &budget()).is_ok());
    }

    #[test]
    fn components_match_density_route() {
        let w = make_bec(0.3).unwrap();
        let dec = Decoder::new(&w, 2, &budget()).unwrap();
        let spec = CodeSpec::with_zero_frozen(4, vec![1, 3]).unwrap();
        let u = spec.assemble(&[1, 0]).unwrap();
        let via_components = dec.success_probability(&spec, &u).unwrap();
        let projectors = dec.true_path_projectors(&spec, &u).unwrap();
        let rho = dec.output_state(&u).unwrap();
        let chk = sen_bound_check(&projectors, &rho).unwrap();
        assert!((1.0 - chk.lhs - via_components).abs() < 1e-12);
        let msg = dec.sen_check_message(&spec, &u).unwrap();
        assert!((msg.commuting_sum - chk.commuting_sum).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let w = make_bec(0.5).unwrap();
        let dec = Decoder::new(&w, 2, &budget()).unwrap();
        let spec = CodeSpec::with_zero_frozen(4, vec![2, 3]).unwrap();
        let (a, runs) = dec.monte_carlo(&spec, 200, 11, true).unwrap();
        let (b, _) = dec.monte_carlo(&spec, 200, 11, false).unwrap();
        assert_eq!(a.errors, b.errors);
        assert_eq!(a.sen_checks_passed, 200);
        for r in &runs {
            for &i in &spec.frozen_set() {
                assert_eq!(r.estimates[i], r.message[i]);
            }
        }
        let mut buf = Vec::new();
        write_trajectory_csv(&spec, &runs[..2], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# schema=cqpolar.trajectory.v1\ntrial,position,frozen,bit,estimate,outcome_probability\n"));
        assert_eq!(text.lines().count(), 2 + 8);
    }
}
