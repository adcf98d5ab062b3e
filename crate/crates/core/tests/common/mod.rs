//! Reference computations for the integration tests. Everything here is
//! built straight from definitions, without going through the library's
//! synthesis, bounds or encoder code.
#![allow(dead_code)]

use std::collections::BTreeMap;

use cqpolar::channel::BinaryCQChannel;
use cqpolar::operator::DensityOperator;
use faer::{Mat, Side};
use num_complex::Complex64 as C;

pub type M = Mat<C>;

pub fn dense(rho: &DensityOperator) -> M {
    let rows = rho.matrix().to_rows();
    let d = rows.len();
    Mat::from_fn(d, d, |i, j| rows[i][j])
}

/// The two output states of a single-branch channel.
pub fn outputs(w: &BinaryCQChannel) -> [M; 2] {
    let (a, b) = w.base_states().expect("single-branch channel");
    [dense(a), dense(b)]
}

pub fn kron(a: &M, b: &M) -> M {
    let (p, q) = (a.nrows(), b.nrows());
    Mat::from_fn(p * q, p * q, |i, j| a[(i / q, j / q)] * b[(i % q, j % q)])
}

pub fn scaled_sum(terms: &[(f64, &M)]) -> M {
    let d = terms[0].1.nrows();
    Mat::from_fn(d, d, |i, j| terms.iter().map(|(w, m)| m[(i, j)] * *w).sum())
}

pub fn eigh(m: &M) -> (Vec<f64>, M) {
    let evd = m.self_adjoint_eigen(Side::Lower).expect("eigendecomposition");
    (evd.S().column_vector().iter().map(|z| z.re).collect(), evd.U().to_owned())
}

pub fn entropy(m: &M) -> f64 {
    let (vals, _) = eigh(m);
    -vals.iter().filter(|&&x| x > 1e-13).map(|&x| x * x.log2()).sum::<f64>()
}

fn spectral_fn(m: &M, f: impl Fn(f64) -> f64) -> M {
    let (vals, u) = eigh(m);
    let d = m.nrows();
    Mat::from_fn(d, d, |i, j| (0..d).map(|k| u[(i, k)] * u[(j, k)].conj() * f(vals[k])).sum())
}

pub fn psd_sqrt(m: &M) -> M {
    spectral_fn(m, |x| if x > 1e-13 { x.sqrt() } else { 0.0 })
}

/// ‖√a √b‖₁, the singular values read off the Hermitian dilation.
pub fn root_fidelity(a: &M, b: &M) -> f64 {
    let x = psd_sqrt(a) * psd_sqrt(b);
    let d = x.nrows();
    let dil = Mat::from_fn(2 * d, 2 * d, |i, j| match (i < d, j < d) {
        (true, false) => x[(i, j - d)],
        (false, true) => x[(j, i - d)].conj(),
        _ => C::new(0.0, 0.0),
    });
    let (vals, _) = eigh(&dil);
    vals.iter().map(|v| v.abs()).sum::<f64>() / 2.0
}

pub fn holevo(r0: &M, r1: &M) -> f64 {
    entropy(&scaled_sum(&[(0.5, r0), (0.5, r1)])) - 0.5 * entropy(r0) - 0.5 * entropy(r1)
}

/// Projector onto eigenvalues ≥ −1e-10 of a Hermitian matrix.
pub fn nonneg_projector(m: &M) -> M {
    spectral_fn(m, |x| if x >= -1e-10 { 1.0 } else { 0.0 })
}

pub fn frobenius(a: &M, b: &M) -> f64 {
    let mut s = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            s += (a[(i, j)] - b[(i, j)]).norm_sqr();
        }
    }
    s.sqrt()
}

pub fn trace_re(m: &M) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

/// G_N = B_N F^{⊗n}, from the Kronecker power and the bit-reversal
/// permutation of its rows.
pub fn generator(levels: u32) -> Vec<Vec<u8>> {
    let mut f = vec![vec![1u8]];
    for _ in 0..levels {
        let n = f.len();
        let mut next = vec![vec![0u8; 2 * n]; 2 * n];
        for (bi, brow) in [[1u8, 0], [1, 1]].iter().enumerate() {
            for (bj, &bv) in brow.iter().enumerate() {
                for i in 0..n {
                    for j in 0..n {
                        next[bi * n + i][bj * n + j] = bv & f[i][j];
                    }
                }
            }
        }
        f = next;
    }
    let n = f.len();
    let rev = |i: usize| if levels == 0 { i } else { i.reverse_bits() >> (usize::BITS - levels) };
    (0..n).map(|i| f[rev(i)].clone()).collect()
}

pub fn gf2_mul(u: &[u8], g: &[Vec<u8>]) -> Vec<u8> {
    let n = g[0].len();
    (0..n).map(|j| u.iter().zip(g).fold(0u8, |acc, (&ui, row)| acc ^ (ui & row[j]))).collect()
}

pub fn bits(m: usize, n: usize) -> Vec<u8> {
    (0..n).map(|b| ((m >> b) & 1) as u8).collect()
}

/// ρ_{u^N} = ⊗_j W(x_j) with x = u·G_N.
pub fn codeword_state(r: &[M; 2], g: &[Vec<u8>], u: &[u8]) -> M {
    let x = gf2_mul(u, g);
    let mut s = r[x[0] as usize].clone();
    for &b in &x[1..] {
        s = kron(&s, &r[b as usize]);
    }
    s
}

/// ρ̄_{u^i}: ρ_{u^N} averaged over the 2^{N−i} completions of the prefix.
pub fn averaged_state(r: &[M; 2], levels: u32, prefix: &[u8]) -> M {
    let n = 1usize << levels;
    let g = generator(levels);
    let free = n - prefix.len();
    let states: Vec<M> = (0..1usize << free)
        .map(|m| {
            let mut u = prefix.to_vec();
            u.extend(bits(m, free));
            codeword_state(r, &g, &u)
        })
        .collect();
    let w = 1.0 / states.len() as f64;
    scaled_sum(&states.iter().map(|s| (w, s)).collect::<Vec<_>>())
}

/// The two outputs of W_N^(i) (1-based i) as full matrices: a classical
/// register holding u^{i−1} in block-diagonal form next to ρ̄_{u^i}.
pub fn direct_split(r: &[M; 2], levels: u32, i: usize) -> [M; 2] {
    let d = r[0].nrows().pow(1 << levels);
    let reg = 1usize << (i - 1);
    [0u8, 1].map(|ui| {
        let mut out = Mat::<C>::zeros(reg * d, reg * d);
        for p in 0..reg {
            let mut prefix = bits(p, i - 1);
            prefix.push(ui);
            let s = averaged_state(r, levels, &prefix);
            for a in 0..d {
                for b in 0..d {
                    out[(p * d + a, p * d + b)] = s[(a, b)] / reg as f64;
                }
            }
        }
        out
    })
}

/// (I, √F) of W_N^(i) from the direct materialization.
pub fn direct_split_params(r: &[M; 2], levels: u32, i: usize) -> (f64, f64) {
    let [a, b] = direct_split(r, levels, i);
    (holevo(&a, &b), root_fidelity(&a, &b))
}

/// Bhattacharyya parameters of the BEC split channels, index order.
pub fn z_recursion(z0: f64, levels: u32) -> Vec<f64> {
    let mut z = vec![z0];
    for _ in 0..levels {
        z = z.iter().flat_map(|&x| [2.0 * x - x * x, x * x]).collect();
    }
    z
}

/// Split channels of BSC(p) as exact mixtures of BSCs: W⁻ of BSC(a), BSC(b)
/// is BSC(a(1−b)+b(1−a)); W⁺ splits on whether the two observations agree.
/// Returns √F(W_N^(i)) in index order.
pub fn bsc_mixture_root_fidelity(p: f64, levels: u32) -> Vec<f64> {
    fn merge(comps: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
        let mut m: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
        for (w, q) in comps {
            let q = q.min(1.0 - q);
            let e = m.entry((q * 1e14).round() as i64).or_insert((0.0, q));
            e.0 += w;
        }
        m.into_values().collect()
    }
    let minus = |c: &[(f64, f64)]| {
        merge(c.iter().flat_map(|&(wa, a)| c.iter().map(move |&(wb, b)| (wa * wb, a * (1.0 - b) + b * (1.0 - a)))).collect())
    };
    let plus = |c: &[(f64, f64)]| {
        let mut out = Vec::new();
        for &(wa, a) in c {
            for &(wb, b) in c {
                let agree = (1.0 - a) * (1.0 - b) + a * b;
                if agree > 0.0 {
                    out.push((wa * wb * agree, a * b / agree));
                }
                if agree < 1.0 {
                    out.push((wa * wb * (1.0 - agree), a * (1.0 - b) / (1.0 - agree)));
                }
            }
        }
        merge(out)
    };
    let mut level = vec![vec![(1.0, p)]];
    for _ in 0..levels {
        level = level.iter().flat_map(|c| [minus(c), plus(c)]).collect();
    }
    level
        .iter()
        .map(|c| c.iter().map(|&(w, q)| w * 2.0 * (q * (1.0 - q)).max(0.0).sqrt()).sum())
        .collect()
}

/// Sum of the k smallest values.
pub fn smallest_sum(values: &[f64], k: usize) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v[..k].iter().sum()
}
