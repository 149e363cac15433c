//! Fast Fisher evaluation for the ancilla strategy over tensor grids of
//! waveplate angles.
//!
//! Only the path-diagonal blocks of the output state matter to the
//! polarization-resolved measurement: outcome `(k1 s1 k2 s2)` reads the
//! `(k1, k2)` path block, conjugated by the analysis unitaries of arms `k1`
//! and `k2`. Blocks are computed once per `(alpha1, alpha2, phi)` and reused
//! across every `(beta1, beta2)`. Fisher information is additive over
//! outcomes, so the `(u,u)` and `(l,l)` blocks depend on one beta each.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use super::{outcome_term, FisherValue};
use crate::decoherence::{depolarizing_kraus, DepolarizingSpec};
use crate::error::Result;
use crate::optics::{ancilla_input_state_with, full_space, Jones, ParameterSet, ValidatedConvention, LOWER, PATH1, PATH2, UPPER};
use crate::quantum::{apply_channel, lift_channel, KrausChannel, C64, ZERO};

pub(crate) type Rho16 = [[C64; 16]; 16];
type Block = [[C64; 4]; 4];
type Mat2 = [[C64; 2]; 2];

/// `[k1][k2][derivative order]` pol-pol blocks of `rho(phi)`.
struct PathBlocks([[[Block; 3]; 2]; 2]);

fn contract(rho: &Rho16, x: &[C64; 4], y: &[C64; 4]) -> Block {
    let mut out = [[ZERO; 4]; 4];
    for (a, row) in out.iter_mut().enumerate() {
        let (a1, a2) = (a >> 1, a & 1);
        for (b, entry) in row.iter_mut().enumerate() {
            let (b1, b2) = (b >> 1, b & 1);
            let mut acc = ZERO;
            for (jj, &xj) in x.iter().enumerate() {
                let r = 8 * (jj >> 1) + 4 * a1 + 2 * (jj & 1) + a2;
                let mut inner = ZERO;
                for (kk, &yk) in y.iter().enumerate() {
                    let c = 8 * (kk >> 1) + 4 * b1 + 2 * (kk & 1) + b2;
                    inner += rho[r][c] * yk.conj();
                }
                acc += xj * inner;
            }
            *entry = acc;
        }
    }
    out
}

fn block_adjoint_sum(m: &Block) -> Block {
    let mut out = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = m[i][j] + m[j][i].conj();
        }
    }
    out
}

fn path_blocks(rho: &Rho16, u: &[Jones; 3]) -> PathBlocks {
    let mut blocks = [[[[[ZERO; 4]; 4]; 3]; 2]; 2];
    for (k1, row) in blocks.iter_mut().enumerate() {
        for (k2, slot) in row.iter_mut().enumerate() {
            let mut a0 = [ZERO; 4];
            let mut a1 = [ZERO; 4];
            let mut a2 = [ZERO; 4];
            for j in 0..4 {
                let (j1, j2) = (j >> 1, j & 1);
                let (x0, x1, x2) = (u[0][k1][j1], u[1][k1][j1], u[2][k1][j1]);
                let (y0, y1, y2) = (u[0][k2][j2], u[1][k2][j2], u[2][k2][j2]);
                a0[j] = x0 * y0;
                a1[j] = x1 * y0 + x0 * y1;
                a2[j] = x2 * y0 + (x1 * y1).scale(2.0) + x0 * y2;
            }
            let m00 = contract(rho, &a0, &a0);
            let m10 = contract(rho, &a1, &a0);
            let m11 = contract(rho, &a1, &a1);
            let m20 = contract(rho, &a2, &a0);
            let mut second = block_adjoint_sum(&m20);
            for i in 0..4 {
                for j in 0..4 {
                    second[i][j] += m11[i][j].scale(2.0);
                }
            }
            *slot = [m00, block_adjoint_sum(&m10), second];
        }
    }
    PathBlocks(blocks)
}

/// `C[a1][b1] = sum y[a2] B[(a1 a2),(b1 b2)] conj(y[b2])`.
fn contract_second_photon(block: &Block, y: &[C64; 2]) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for (a1, row) in out.iter_mut().enumerate() {
        for (b1, entry) in row.iter_mut().enumerate() {
            let mut acc = ZERO;
            for (a2, &ya) in y.iter().enumerate() {
                for (b2, &yb) in y.iter().enumerate() {
                    acc += ya * block[2 * a1 + a2][2 * b1 + b2] * yb.conj();
                }
            }
            *entry = acc;
        }
    }
    out
}

fn quad(c: &Mat2, x: &[C64; 2]) -> f64 {
    let mut acc = ZERO;
    for a in 0..2 {
        for b in 0..2 {
            acc += x[a] * c[a][b] * x[b].conj();
        }
    }
    acc.re
}

/// Second photon contracted against both rows of its analysis unitary: `[s2][order]`.
type Contracted = [[Mat2; 3]; 2];

fn contract_block(block: &[Block; 3], v: &Mat2) -> Contracted {
    let mut out = [[[[ZERO; 2]; 2]; 3]; 2];
    for (s2, slot) in out.iter_mut().enumerate() {
        for (order, m) in slot.iter_mut().enumerate() {
            *m = contract_second_photon(&block[order], &v[s2]);
        }
    }
    out
}

/// Fisher contribution of the four outcomes of one path block.
fn block_fisher(c: &Contracted, v1: &Mat2) -> (f64, bool) {
    let mut total = 0.0;
    let mut flagged = false;
    for x in v1 {
        for cs in c {
            let p = quad(&cs[0], x).clamp(0.0, 1.0);
            let d = quad(&cs[1], x);
            let (t, f) = outcome_term(p, d, || Some(quad(&cs[2], x)));
            total += t;
            flagged |= f;
        }
    }
    (total, flagged)
}

/// Fisher values on the `beta1 x beta2` grid, row-major in `beta1`.
fn fisher_on_beta_grid(blocks: &PathBlocks, v1s: &[Mat2], v2s: &[Mat2]) -> Vec<(f64, bool)> {
    let b = &blocks.0;
    let uu: Vec<(f64, bool)> = v1s
        .iter()
        .map(|v| block_fisher(&contract_block(&b[UPPER][UPPER], v), v))
        .collect();
    let ll: Vec<(f64, bool)> = v2s
        .iter()
        .map(|v| block_fisher(&contract_block(&b[LOWER][LOWER], v), v))
        .collect();
    // photon 1 upper, photon 2 lower: second photon analysed with beta2
    let ul: Vec<Contracted> = v2s.iter().map(|v| contract_block(&b[UPPER][LOWER], v)).collect();
    // photon 1 lower, photon 2 upper: second photon analysed with beta1
    let lu: Vec<Contracted> = v1s.iter().map(|v| contract_block(&b[LOWER][UPPER], v)).collect();

    let mut out = Vec::with_capacity(v1s.len() * v2s.len());
    for (i, v1) in v1s.iter().enumerate() {
        for (j, v2) in v2s.iter().enumerate() {
            let (f_ul, g_ul) = block_fisher(&ul[j], v1);
            let (f_lu, g_lu) = block_fisher(&lu[i], v2);
            let value = uu[i].0 + ll[j].0 + f_ul + f_lu;
            out.push((value.max(0.0), uu[i].1 | ll[j].1 | g_ul | g_lu));
        }
    }
    out
}

/// Best point found on a grid, with the number of evaluations.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Candidate {
    pub theta: ParameterSet,
    pub value: f64,
}

impl Candidate {
    /// Higher Fisher wins; exact ties go to the lexicographically smaller angles.
    pub fn better(self, other: Self) -> Self {
        if self.value > other.value
            || (self.value == other.value && self.theta.lex_cmp(&other.theta).is_lt())
        {
            self
        } else {
            other
        }
    }
}

/// Evaluates the ancilla-strategy Fisher information for one decoherence
/// probability, caching depolarized input states of the coarse search grid.
pub struct AncillaEvaluator {
    conv: ValidatedConvention,
    p: f64,
    channels: [KrausChannel; 2],
    coarse_cache: Mutex<HashMap<usize, Arc<Vec<Rho16>>>>,
}

impl AncillaEvaluator {
    pub fn new(conv: &ValidatedConvention, p: f64) -> Result<Self> {
        let p = DepolarizingSpec::new(p)?.p();
        let single = depolarizing_kraus(p)?;
        let space = full_space();
        let channels = [lift_channel(&single, PATH1, &space)?, lift_channel(&single, PATH2, &space)?];
        Ok(Self {
            conv: conv.clone(),
            p,
            channels,
            coarse_cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn convention(&self) -> &ValidatedConvention {
        &self.conv
    }

    pub(crate) fn depolarized_input(&self, alpha1: f64, alpha2: f64) -> Rho16 {
        let mut rho = ancilla_input_state_with(self.conv.ancilla_cross_term, alpha1, alpha2).density();
        if self.p > 0.0 {
            for ch in &self.channels {
                rho = apply_channel(&rho, ch).expect("channel dimensions match the full space");
            }
        }
        let m = rho.matrix();
        let mut out = [[ZERO; 16]; 16];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = m[(i, j)];
            }
        }
        out
    }

    /// Depolarized inputs on the `n x n` grid `k pi / n`, row-major in alpha1.
    pub(crate) fn coarse_inputs(&self, n: usize) -> Arc<Vec<Rho16>> {
        if let Some(hit) = self.coarse_cache.lock().expect("cache lock").get(&n) {
            return hit.clone();
        }
        let grid = crate::optics::phase_grid(n);
        let inputs: Vec<Rho16> = (0..n * n)
            .into_par_iter()
            .map(|idx| self.depolarized_input(grid[idx / n], grid[idx % n]))
            .collect();
        let inputs = Arc::new(inputs);
        self.coarse_cache
            .lock()
            .expect("cache lock")
            .insert(n, inputs.clone());
        inputs
    }

    fn analysis_rows(&self, betas: &[f64]) -> Vec<Mat2> {
        betas.iter().map(|&b| self.conv.analysis_unitary(b)).collect()
    }

    /// Fisher information of the 16-outcome measurement at one parameter set.
    pub fn fisher(&self, phi: f64, theta: &ParameterSet) -> FisherValue {
        let rho = self.depolarized_input(theta.alpha1, theta.alpha2);
        let blocks = path_blocks(&rho, &self.conv.path_unitary(phi));
        let (value, flagged) = fisher_on_beta_grid(
            &blocks,
            &self.analysis_rows(&[theta.beta1]),
            &self.analysis_rows(&[theta.beta2]),
        )[0];
        FisherValue { value, flagged }
    }

    /// Probabilities of the 16 outcomes, indexed `8 k1 + 4 s1 + 2 k2 + s2`.
    pub(crate) fn outcome_probabilities(&self, rho: &Rho16, phi: f64, beta1: f64, beta2: f64) -> [f64; 16] {
        let u = self.conv.path_unitary(phi);
        let v = [self.conv.analysis_unitary(beta1), self.conv.analysis_unitary(beta2)];
        let mut out = [0.0; 16];
        for k1 in 0..2 {
            for k2 in 0..2 {
                let mut a = [ZERO; 4];
                for (j, slot) in a.iter_mut().enumerate() {
                    *slot = u[0][k1][j >> 1] * u[0][k2][j & 1];
                }
                let block = contract(rho, &a, &a);
                for s2 in 0..2 {
                    let c = contract_second_photon(&block, &v[k2][s2]);
                    for s1 in 0..2 {
                        out[8 * k1 + 4 * s1 + 2 * k2 + s2] = quad(&c, &v[k1][s1]).clamp(0.0, 1.0);
                    }
                }
            }
        }
        out
    }

    /// Exhaustive maximum over the tensor grid `a1s x a2s x b1s x b2s`.
    /// Angles must already be normalized. `inputs`, when given, holds the
    /// depolarized states for every `(a1, a2)` pair, row-major in `a1`.
    pub(crate) fn best_on_grid(
        &self,
        phi: f64,
        grids: [&[f64]; 4],
        inputs: Option<&[Rho16]>,
    ) -> (Candidate, usize) {
        let [a1s, a2s, b1s, b2s] = grids;
        let u = self.conv.path_unitary(phi);
        let v1s = self.analysis_rows(b1s);
        let v2s = self.analysis_rows(b2s);
        let n_alpha = a1s.len() * a2s.len();
        let best = (0..n_alpha)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / a2s.len(), idx % a2s.len());
                let blocks = match inputs {
                    Some(cached) => path_blocks(&cached[idx], &u),
                    None => path_blocks(&self.depolarized_input(a1s[i], a2s[j]), &u),
                };
                let values = fisher_on_beta_grid(&blocks, &v1s, &v2s);
                values
                    .iter()
                    .enumerate()
                    .map(|(k, &(value, _))| Candidate {
                        theta: ParameterSet {
                            alpha1: a1s[i],
                            alpha2: a2s[j],
                            beta1: b1s[k / b2s.len()],
                            beta2: b2s[k % b2s.len()],
                        },
                        value: if value.is_nan() { f64::NEG_INFINITY } else { value },
                    })
                    .reduce(Candidate::better)
                    .expect("non-empty beta grid")
            })
            .reduce_with(Candidate::better)
            .expect("non-empty alpha grid");
        (best, n_alpha * b1s.len() * b2s.len())
    }
}
