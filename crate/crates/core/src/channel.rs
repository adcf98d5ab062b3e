//! Binary-input classical-quantum channels and their rate/reliability
//! parameters.
//!
//! A channel maps an input bit `u` to the classical-quantum state
//! `Σ_c w(c) |c⟩⟨c| ⊗ σ_u(c)`. The classical register `c` is kept as a list
//! of weighted branches rather than as extra matrix dimensions: both the
//! entropy and the root fidelity decompose exactly over branches, so the
//! quantum dimension never carries the register.

use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{
    entropy_of_spectrum, h2, root_fidelity, Complex64, DensityOperator, Matrix, TRACE_TOL,
};

/// Branch weights must sum to one within this tolerance.
pub const WEIGHT_TOL: f64 = 1e-10;

/// One value of the classical register: its probability and the two
/// conditional output states.
#[derive(Clone, Debug)]
pub struct Branch {
    pub weight: f64,
    pub sigma0: Arc<DensityOperator>,
    pub sigma1: Arc<DensityOperator>,
}

impl Branch {
    pub fn new(weight: f64, sigma0: DensityOperator, sigma1: DensityOperator) -> Self {
        Branch {
            weight,
            sigma0: Arc::new(sigma0),
            sigma1: Arc::new(sigma1),
        }
    }

    pub fn sigma(&self, u: u8) -> &Arc<DensityOperator> {
        if u == 0 {
            &self.sigma0
        } else {
            &self.sigma1
        }
    }

    /// Entropies and root fidelity of this branch.
    pub fn terms(&self) -> Result<BranchTerms> {
        Ok(BranchTerms {
            weight: self.weight,
            entropy_mean: branch_mean_entropy(&self.sigma0, &self.sigma1)?,
            entropy0: entropy_of_spectrum(self.sigma0.spectrum()?),
            entropy1: entropy_of_spectrum(self.sigma1.spectrum()?),
            root_fidelity: root_fidelity(&self.sigma0, &self.sigma1)?,
        })
    }

    /// Entropy terms only; skips the fidelity.
    pub fn entropy_terms(&self) -> Result<BranchTerms> {
        Ok(BranchTerms {
            weight: self.weight,
            entropy_mean: branch_mean_entropy(&self.sigma0, &self.sigma1)?,
            entropy0: entropy_of_spectrum(self.sigma0.spectrum()?),
            entropy1: entropy_of_spectrum(self.sigma1.spectrum()?),
            root_fidelity: f64::NAN,
        })
    }

    /// Root fidelity only.
    pub fn fidelity_terms(&self) -> Result<BranchTerms> {
        Ok(BranchTerms {
            weight: self.weight,
            entropy_mean: f64::NAN,
            entropy0: f64::NAN,
            entropy1: f64::NAN,
            root_fidelity: root_fidelity(&self.sigma0, &self.sigma1)?,
        })
    }
}

fn branch_mean_entropy(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    let mean = DensityOperator::mixture(&[(0.5, a), (0.5, b)])?;
    Ok(entropy_of_spectrum(mean.spectrum()?))
}

/// Per-branch entropies (bits) and root fidelity, the ingredients of the
/// block-diagonal decomposition.
#[derive(Clone, Copy, Debug)]
pub struct BranchTerms {
    pub weight: f64,
    pub entropy_mean: f64,
    pub entropy0: f64,
    pub entropy1: f64,
    pub root_fidelity: f64,
}

/// Accumulates branch terms into I(W) and √F(W).
///
/// H(Σ_c w(c)|c⟩⟨c| ⊗ τ_c) = H(w) + Σ_c w(c) H(τ_c), applied to the mean
/// output and to each conditional output.
#[derive(Clone, Debug, Default)]
pub struct ParamAccumulator {
    weight_entropy: f64,
    weight_total: f64,
    mean: f64,
    given0: f64,
    given1: f64,
    root_fidelity: f64,
}

impl ParamAccumulator {
    pub fn add(&mut self, t: &BranchTerms) {
        if t.weight > 0.0 {
            self.weight_entropy -= t.weight * t.weight.log2();
        }
        self.weight_total += t.weight;
        self.mean += t.weight * t.entropy_mean;
        self.given0 += t.weight * t.entropy0;
        self.given1 += t.weight * t.entropy1;
        self.root_fidelity += t.weight * t.root_fidelity;
    }

    pub fn merge(mut self, other: &ParamAccumulator) -> Self {
        self.weight_entropy += other.weight_entropy;
        self.weight_total += other.weight_total;
        self.mean += other.mean;
        self.given0 += other.given0;
        self.given1 += other.given1;
        self.root_fidelity += other.root_fidelity;
        self
    }

    pub fn holevo(&self) -> f64 {
        let h_mean = self.weight_entropy + self.mean;
        let h0 = self.weight_entropy + self.given0;
        let h1 = self.weight_entropy + self.given1;
        h_mean - 0.5 * h0 - 0.5 * h1
    }

    pub fn root_fidelity(&self) -> f64 {
        self.root_fidelity
    }

    pub fn params(&self) -> ChannelParams {
        ChannelParams {
            holevo: self.holevo(),
            fidelity: self.root_fidelity.powi(2),
        }
    }
}

/// A binary-input classical-quantum channel with an explicit classical
/// register.
#[derive(Clone, Debug)]
pub struct BinaryCQChannel {
    quantum_dim: usize,
    branches: Vec<Branch>,
}

impl BinaryCQChannel {
    /// A base channel `x → ρ_x` with no classical register.
    pub fn new(rho0: DensityOperator, rho1: DensityOperator) -> Result<Self> {
        Self::from_branches(vec![Branch::new(1.0, rho0, rho1)])
    }

    /// Validates weights (non-negative, summing to one within 1e-10) and a
    /// common quantum dimension.
    pub fn from_branches(branches: Vec<Branch>) -> Result<Self> {
        let first = branches
            .first()
            .ok_or_else(|| Error::InvalidChannel("no branches".into()))?;
        let quantum_dim = first.sigma0.dim();
        let mut total = 0.0;
        for (c, b) in branches.iter().enumerate() {
            if !(b.weight >= 0.0) {
                return Err(Error::InvalidChannel(format!("branch {c} has weight {}", b.weight)));
            }
            if b.sigma0.dim() != quantum_dim || b.sigma1.dim() != quantum_dim {
                return Err(Error::InvalidChannel(format!(
                    "branch {c} has dimensions ({}, {}), expected {quantum_dim}",
                    b.sigma0.dim(),
                    b.sigma1.dim()
                )));
            }
            total += b.weight;
        }
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidChannel(format!("branch weights sum to {total}")));
        }
        Ok(BinaryCQChannel { quantum_dim, branches })
    }

    pub(crate) fn from_branches_unchecked(quantum_dim: usize, branches: Vec<Branch>) -> Self {
        BinaryCQChannel { quantum_dim, branches }
    }

    pub fn quantum_dim(&self) -> usize {
        self.quantum_dim
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    /// All conditional states are diagonal (a classical channel embedding).
    pub fn is_diagonal(&self) -> bool {
        self.branches
            .iter()
            .all(|b| b.sigma0.is_diagonal() && b.sigma1.is_diagonal())
    }

    /// Stored scalars per conditional state.
    pub fn state_elements(&self) -> usize {
        self.branches[0].sigma0.matrix().element_count()
    }

    /// The base states (ρ₀, ρ₁) of a one-branch channel.
    pub fn base_states(&self) -> Result<(&Arc<DensityOperator>, &Arc<DensityOperator>)> {
        match self.branches.as_slice() {
            [b] => Ok((&b.sigma0, &b.sigma1)),
            _ => Err(Error::InvalidChannel(format!(
                "expected a single-branch channel, found {} branches",
                self.branches.len()
            ))),
        }
    }

    /// The full output Σ_c w(c)|c⟩⟨c| ⊗ σ_u(c) as one block-diagonal matrix.
    /// Only meant for small checks.
    pub fn materialize(&self, u: u8) -> Matrix {
        let d = self.quantum_dim;
        let n = d * self.branches.len();
        let mut rows = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for (c, b) in self.branches.iter().enumerate() {
            let m = b.sigma(u).matrix();
            for i in 0..d {
                for j in 0..d {
                    rows[c * d + i][c * d + j] = m.entry(i, j) * b.weight;
                }
            }
        }
        Matrix::from_rows(&rows).expect("square")
    }

    fn accumulate(&self, f: impl Fn(&Branch) -> Result<BranchTerms>) -> Result<ParamAccumulator> {
        let mut acc = ParamAccumulator::default();
        for b in &self.branches {
            acc.add(&f(b)?);
        }
        Ok(acc)
    }
}

/// The two scalar parameters of a channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Symmetric Holevo information I(W), bits.
    pub holevo: f64,
    /// Fidelity F(W) = F(ρ₀, ρ₁).
    pub fidelity: f64,
}

impl ChannelParams {
    pub fn root_fidelity(&self) -> f64 {
        self.fidelity.max(0.0).sqrt()
    }

    /// How far the pair sits outside
    /// log₂(2/(1+√F)) ≤ I ≤ √(1−F); zero or negative when inside.
    pub fn rate_reliability_violation(&self) -> f64 {
        let f = self.fidelity.clamp(0.0, 1.0);
        let lower = (2.0 / (1.0 + f.sqrt())).log2();
        let upper = (1.0 - f).sqrt();
        (lower - self.holevo).max(self.holevo - upper)
    }
}

/// F(W) = (Σ_c w(c) √F(σ₀(c), σ₁(c)))².
pub fn channel_fidelity(w: &BinaryCQChannel) -> Result<f64> {
    Ok(channel_root_fidelity(w)?.powi(2))
}

/// √F(W) = Σ_c w(c) √F(σ₀(c), σ₁(c)).
pub fn channel_root_fidelity(w: &BinaryCQChannel) -> Result<f64> {
    Ok(w.accumulate(Branch::fidelity_terms)?.root_fidelity())
}

/// I(W) = H((ρ₀+ρ₁)/2) − H(ρ₀)/2 − H(ρ₁)/2 evaluated branch by branch.
pub fn holevo_information(w: &BinaryCQChannel) -> Result<f64> {
    Ok(w.accumulate(Branch::entropy_terms)?.holevo())
}

/// Both parameters in one pass.
pub fn channel_params(w: &BinaryCQChannel) -> Result<ChannelParams> {
    Ok(w.accumulate(Branch::terms)?.params())
}

fn check_unit(what: &'static str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfRange { what, value: x, lo: 0.0, hi: 1.0 });
    }
    Ok(())
}

/// I(W) ≥ log₂(2/(1+√F(W))).
pub fn holevo_lower_bound_from_fidelity(f: f64) -> Result<f64> {
    check_unit("fidelity", f)?;
    Ok((2.0 / (1.0 + f.sqrt())).log2())
}

/// I(W) ≤ √(1−F(W)).
pub fn holevo_upper_bound_from_fidelity(f: f64) -> Result<f64> {
    check_unit("fidelity", f)?;
    Ok((1.0 - f).sqrt())
}

/// The intermediate bound I(W) ≤ H₂((1−√F(W))/2), never larger than
/// [`holevo_upper_bound_from_fidelity`].
pub fn holevo_entropy_bound_from_fidelity(f: f64) -> Result<f64> {
    check_unit("fidelity", f)?;
    Ok(h2((1.0 - f.sqrt()) / 2.0))
}

/// Embeds a classical binary-input DMC: σ_u = diag(row_u).
pub fn make_classical(rows: [&[f64]; 2]) -> Result<BinaryCQChannel> {
    if rows[0].len() != rows[1].len() || rows[0].is_empty() {
        return Err(Error::InvalidChannel("transition rows differ in length".into()));
    }
    let mut states = Vec::with_capacity(2);
    for (u, row) in rows.iter().enumerate() {
        if let Some(p) = row.iter().find(|p| !(**p >= 0.0)) {
            return Err(Error::InvalidChannel(format!("row {u} has negative entry {p}")));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidChannel(format!("row {u} sums to {s}")));
        }
        states.push(DensityOperator::from_diagonal(row.to_vec())?);
    }
    let rho1 = states.pop().expect("two rows");
    let rho0 = states.pop().expect("two rows");
    BinaryCQChannel::new(rho0, rho1)
}

/// Binary symmetric channel with crossover `p`.
pub fn make_bsc(p: f64) -> Result<BinaryCQChannel> {
    check_unit("crossover probability", p)?;
    make_classical([&[1.0 - p, p], &[p, 1.0 - p]])
}

/// Binary erasure channel with erasure probability `eps`; outputs {0, e, 1}.
pub fn make_bec(eps: f64) -> Result<BinaryCQChannel> {
    check_unit("erasure probability", eps)?;
    make_classical([&[1.0 - eps, eps, 0.0], &[0.0, eps, 1.0 - eps]])
}

/// Pure-state channel on a qubit with real overlap ⟨ψ₀|ψ₁⟩ = `overlap`.
///
/// ψ₀,₁ = (cos θ, ±sin θ) with cos 2θ = overlap.
pub fn make_pure_overlap(overlap: f64) -> Result<BinaryCQChannel> {
    if !(-1.0..=1.0).contains(&overlap) {
        return Err(Error::OutOfRange { what: "overlap", value: overlap, lo: -1.0, hi: 1.0 });
    }
    let cos = ((1.0 + overlap) / 2.0).sqrt();
    let sin = ((1.0 - overlap) / 2.0).sqrt();
    let psi0 = [Complex64::new(cos, 0.0), Complex64::new(sin, 0.0)];
    let psi1 = [Complex64::new(cos, 0.0), Complex64::new(-sin, 0.0)];
    BinaryCQChannel::new(DensityOperator::pure(&psi0)?, DensityOperator::pure(&psi1)?)
}

/// Overlap of two coherent states |±α⟩: e^{−2α²}.
pub fn bpsk_overlap(alpha: f64) -> f64 {
    (-2.0 * alpha * alpha).exp()
}

/// Binary phase-shift keyed coherent states, reduced to their qubit span.
pub fn make_bpsk(alpha: f64) -> Result<BinaryCQChannel> {
    if !alpha.is_finite() {
        return Err(Error::InvalidChannel(format!("amplitude {alpha}")));
    }
    make_pure_overlap(bpsk_overlap(alpha))
}

/// A random qubit state ½(I + r·σ) with Bloch radius at most `max_radius`.
pub fn random_qubit_state<R: Rng + ?Sized>(rng: &mut R, max_radius: f64) -> DensityOperator {
    let dir = loop {
        let v: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n2 = v.iter().map(|x| x * x).sum::<f64>();
        if n2 > 1e-6 && n2 <= 1.0 {
            let n = n2.sqrt();
            break [v[0] / n, v[1] / n, v[2] / n];
        }
    };
    let r = max_radius * rng.gen::<f64>();
    let (x, y, z) = (r * dir[0], r * dir[1], r * dir[2]);
    let m = Matrix::from_rows(&[
        vec![Complex64::new((1.0 + z) / 2.0, 0.0), Complex64::new(x / 2.0, -y / 2.0)],
        vec![Complex64::new(x / 2.0, y / 2.0), Complex64::new((1.0 - z) / 2.0, 0.0)],
    ])
    .expect("2x2");
    DensityOperator::new(m).expect("Bloch radius ≤ 1 gives a valid state")
}

/// A channel whose two outputs are independent random qubit states.
pub fn random_qubit_channel<R: Rng + ?Sized>(rng: &mut R, max_radius: f64) -> BinaryCQChannel {
    let a = random_qubit_state(rng, max_radius);
    let b = random_qubit_state(rng, max_radius);
    BinaryCQChannel::new(a, b).expect("valid states")
}

/// Named channel families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Bsc,
    Bec,
    PureOverlap,
    Bpsk,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Bsc => "bsc",
            Preset::Bec => "bec",
            Preset::PureOverlap => "pure_overlap",
            Preset::Bpsk => "bpsk",
        }
    }

    pub fn build(self, param: f64) -> Result<BinaryCQChannel> {
        match self {
            Preset::Bsc => make_bsc(param),
            Preset::Bec => make_bec(param),
            Preset::PureOverlap => make_pure_overlap(param),
            Preset::Bpsk => make_bpsk(param),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bsc" => Ok(Preset::Bsc),
            "bec" => Ok(Preset::Bec),
            "pure_overlap" => Ok(Preset::PureOverlap),
            "bpsk" => Ok(Preset::Bpsk),
            other => Err(Error::Parse(format!("unknown preset '{other}'"))),
        }
    }
}

/// The JSON channel document: a preset or two explicit density matrices
/// with row-major `[re, im]` entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelSpec {
    Preset {
        preset: Preset,
        param: f64,
    },
    Explicit {
        dim: usize,
        rho0: Vec<[f64; 2]>,
        rho1: Vec<[f64; 2]>,
    },
}

impl ChannelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Parses `preset:param`, e.g. `bsc:0.11`.
    pub fn parse_preset(s: &str) -> Result<Self> {
        let (name, param) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected <preset>:<param>, got '{s}'")))?;
        let param: f64 = param
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad channel parameter '{param}'")))?;
        Ok(ChannelSpec::Preset { preset: name.trim().parse()?, param })
    }

    /// Short human-readable label.
    pub fn label(&self) -> String {
        match self {
            ChannelSpec::Preset { preset, param } => format!("{}({param})", preset.name()),
            ChannelSpec::Explicit { dim, .. } => format!("explicit(dim={dim})"),
        }
    }

    /// Builds the channel, reporting which invariant failed.
    pub fn build(&self) -> Result<BinaryCQChannel> {
        match self {
            ChannelSpec::Preset { preset, param } => preset.build(*param),
            ChannelSpec::Explicit { dim, rho0, rho1 } => {
                let parse = |name: &str, entries: &[[f64; 2]]| -> Result<DensityOperator> {
                    if entries.len() != dim * dim {
                        return Err(Error::InvalidChannel(format!(
                            "{name}: expected {} entries for dim {dim}, got {}",
                            dim * dim,
                            entries.len()
                        )));
                    }
                    let m = Matrix::from_fn(*dim, |i, j| {
                        let [re, im] = entries[i * dim + j];
                        Complex64::new(re, im)
                    });
                    DensityOperator::new(m).map_err(|e| Error::InvalidChannel(format!("{name}: {e}")))
                };
                if *dim == 0 {
                    return Err(Error::InvalidChannel("dim must be positive".into()));
                }
                BinaryCQChannel::new(parse("rho0", rho0)?, parse("rho1", rho1)?)
            }
        }
    }
}
