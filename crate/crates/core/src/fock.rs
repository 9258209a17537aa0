//! Brute-force truncated Fock-space simulator. Independent oracle for the
//! moment engine: builds small multimode states, applies the exact unitaries
//! behind the polariton rotation and the gain-2 amplifier, and computes
//! quadrature moments by direct operator application.
//!
//! Unitaries are realized by diagonalizing the (Hermitian-ized) generator on
//! the truncated subspace of the modes involved. That keeps every applied map
//! exactly unitary on the truncated space, so norm is preserved to rounding;
//! truncation shows up as wrong support near the cutoff instead, which the
//! squeezer guards with an explicit leak check.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_TOTAL_DIM: usize = 10_000_000;
const MAX_GENERATOR_DIM: usize = 200_000;
const NORM_TOL: f64 = 1e-12;
const SQUEEZER_LEAK_BOUND: f64 = 1e-10;

/// Single-mode preparations with independently known amplitude formulas.
#[derive(Debug, Clone, Copy)]
pub enum ModePrep {
    Vacuum,
    /// Number state |n>.
    Number(usize),
    /// Coherent state with complex amplitude alpha.
    Coherent(Complex64),
    /// Squeezed vacuum in the convention a -> a cosh s + a\u{207a} sinh s, so
    /// V_Q = exp(2s) and V_P = exp(-2s).
    SqueezedVacuum { s: f64 },
}

fn coherent_amplitudes(alpha: Complex64, dim: usize) -> Result<Vec<Complex64>> {
    let a = alpha.norm();
    let needed = a * a + 8.0 * a + 10.0;
    if ((dim - 1) as f64) < needed {
        return Err(Error::Capacity(format!(
            "coherent cutoff {} below the truncation bound {:.1} for |alpha| = {:.3}",
            dim - 1,
            needed,
            a
        )));
    }
    let mut c = vec![Complex64::new(0.0, 0.0); dim];
    c[0] = Complex64::new((-0.5 * a * a).exp(), 0.0);
    for n in 1..dim {
        c[n] = c[n - 1] * alpha / (n as f64).sqrt();
    }
    Ok(c)
}

fn squeezed_vacuum_amplitudes(s: f64, dim: usize) -> Result<Vec<Complex64>> {
    let t = s.tanh();
    let mut c = vec![Complex64::new(0.0, 0.0); dim];
    c[0] = Complex64::new(1.0 / s.cosh().sqrt(), 0.0);
    let mut prev = c[0];
    let mut m = 1usize;
    while 2 * m < dim {
        // c_{2m}/c_{2m-2} = tanh(s) sqrt((2m-1)/(2m))
        let k = 2 * m;
        prev *= t * (((k - 1) as f64) / (k as f64)).sqrt();
        c[k] = prev;
        m += 1;
    }
    let deficit = 1.0 - c.iter().map(|x| x.norm_sqr()).sum::<f64>();
    if deficit.abs() > 1e-12 {
        return Err(Error::Capacity(format!(
            "squeezed-vacuum truncation deficit {deficit:.3e} at cutoff {} for s = {s}",
            dim - 1
        )));
    }
    Ok(c)
}

fn prep_amplitudes(prep: &ModePrep, dim: usize) -> Result<Vec<Complex64>> {
    match prep {
        ModePrep::Vacuum => {
            let mut c = vec![Complex64::new(0.0, 0.0); dim];
            c[0] = Complex64::new(1.0, 0.0);
            Ok(c)
        }
        ModePrep::Number(n) => {
            if *n >= dim {
                return Err(Error::Capacity(format!(
                    "number state {n} does not fit in dimension {dim}"
                )));
            }
            let mut c = vec![Complex64::new(0.0, 0.0); dim];
            c[*n] = Complex64::new(1.0, 0.0);
            Ok(c)
        }
        ModePrep::Coherent(alpha) => coherent_amplitudes(*alpha, dim),
        ModePrep::SqueezedVacuum { s } => squeezed_vacuum_amplitudes(*s, dim),
    }
}

/// Observables whose means and (symmetrized) covariances the oracle reports.
#[derive(Debug, Clone, Copy)]
pub enum Observable {
    /// Q = a + a\u{207a} of one mode.
    Q(usize),
    /// P = i(a\u{207a} \u{2212} a) of one mode.
    P(usize),
    /// Q of the collective excitation built from two atomic modes:
    /// (a_l1\u{207a} a_l2 + a_l2\u{207a} a_l1)/\u{221a}n_ref.
    SpinQ {
        level1: usize,
        level2: usize,
        n_ref: u64,
    },
    /// P analog, i(a_l1\u{207a} a_l2 \u{2212} a_l2\u{207a} a_l1)/\u{221a}n_ref, matching
    /// \u{3be} = a_l2\u{207a} a_l1/\u{221a}n_ref.
    SpinP {
        level1: usize,
        level2: usize,
        n_ref: u64,
    },
}

/// Dense state vector over a product of truncated Fock spaces.
#[derive(Debug, Clone)]
pub struct FockState {
    labels: Vec<String>,
    dims: Vec<usize>,
    amps: Vec<Complex64>,
}

impl FockState {
    /// Product state from independent single-mode preparations.
    pub fn product<S: AsRef<str>>(modes: &[(S, usize, ModePrep)]) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::Validation("at least one mode required".into()));
        }
        let mut total: usize = 1;
        for (_, dim, _) in modes {
            if *dim == 0 {
                return Err(Error::Validation("zero-dimensional mode".into()));
            }
            total = total
                .checked_mul(*dim)
                .filter(|t| *t <= MAX_TOTAL_DIM)
                .ok_or_else(|| {
                    Error::Capacity(format!("total dimension exceeds {MAX_TOTAL_DIM}"))
                })?;
        }
        let mut amps = vec![Complex64::new(1.0, 0.0)];
        for (_, dim, prep) in modes {
            let single = prep_amplitudes(prep, *dim)?;
            let mut next = Vec::with_capacity(amps.len() * dim);
            for a in &amps {
                for s in &single {
                    next.push(a * s);
                }
            }
            amps = next;
        }
        let mut st = Self {
            labels: modes.iter().map(|(l, _, _)| l.as_ref().to_string()).collect(),
            dims: modes.iter().map(|(_, d, _)| *d).collect(),
            amps,
        };
        st.normalize()?;
        Ok(st)
    }

    /// Entangled two-mode condensate state over |k, N-k>, amplitudes
    /// sqrt(C(N,k)) alpha1^k alpha2^(N-k). `pad` adds headroom above N on
    /// both modes so that quadratic spin observables act exactly.
    pub fn bec_pair<S: AsRef<str>>(
        label1: S,
        label2: S,
        n: u64,
        alpha1: Complex64,
        alpha2: Complex64,
        pad: usize,
    ) -> Result<Self> {
        let norm = alpha1.norm_sqr() + alpha2.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!(
                "condensate amplitudes must be normalized, |a1|^2+|a2|^2 = {norm}"
            )));
        }
        let dim = n as usize + 1 + pad;
        if dim * dim > MAX_TOTAL_DIM {
            return Err(Error::Capacity(format!(
                "condensate pair dimension {dim}^2 exceeds {MAX_TOTAL_DIM}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim * dim];
        let nn = n as usize;
        let mut coeff = alpha2.powu(n as u32); // k = 0 term
        for k in 0..=nn {
            if k > 0 {
                // sqrt(C(N,k)/C(N,k-1)) = sqrt((N-k+1)/k), and one factor
                // alpha1/alpha2 moves over
                let ratio = (((nn - k + 1) as f64) / k as f64).sqrt();
                if alpha2.norm() == 0.0 {
                    coeff = if k == nn {
                        alpha1.powu(n as u32)
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                } else {
                    coeff = coeff * ratio * alpha1 / alpha2;
                }
            }
            amps[k * dim + (nn - k)] = coeff;
        }
        let mut st = Self {
            labels: vec![label1.as_ref().to_string(), label2.as_ref().to_string()],
            dims: vec![dim, dim],
            amps,
        };
        st.normalize()?;
        Ok(st)
    }

    /// Tensor product with another register.
    pub fn tensor(&self, other: &FockState) -> Result<FockState> {
        for l in &other.labels {
            if self.labels.contains(l) {
                return Err(Error::Validation(format!("duplicate mode label `{l}`")));
            }
        }
        let total = self
            .amps
            .len()
            .checked_mul(other.amps.len())
            .filter(|t| *t <= MAX_TOTAL_DIM)
            .ok_or_else(|| Error::Capacity(format!("total dimension exceeds {MAX_TOTAL_DIM}")))?;
        let mut amps = Vec::with_capacity(total);
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(FockState {
            labels: [self.labels.clone(), other.labels.clone()].concat(),
            dims: [self.dims.clone(), other.dims.clone()].concat(),
            amps,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn mode_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownMode(label.to_string()))
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Same register with replaced (not necessarily normalized) amplitudes;
    /// returns the original norm alongside the normalized state. Used for
    /// two-time correlators, where an observable is applied before evolving.
    pub(crate) fn with_raw_amplitudes(&self, amps: Vec<Complex64>) -> Result<(FockState, f64)> {
        if amps.len() != self.amps.len() {
            return Err(Error::DimensionMismatch(
                "amplitude vector does not match the register".into(),
            ));
        }
        let mut st = FockState {
            labels: self.labels.clone(),
            dims: self.dims.clone(),
            amps,
        };
        let norm = st.norm();
        if norm == 0.0 {
            return Err(Error::DegenerateInput("zero vector".into()));
        }
        for a in &mut st.amps {
            *a /= norm;
        }
        Ok((st, norm))
    }

    fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() > 1e-6 {
            return Err(Error::Validation(format!(
                "state norm {n} too far from 1 to renormalize"
            )));
        }
        for a in &mut self.amps {
            *a /= n;
        }
        Ok(())
    }

    fn stride(&self, mode: usize) -> usize {
        self.dims[mode + 1..].iter().product()
    }

    /// Population with occupation number above `level` in `mode`.
    pub fn population_above(&self, mode: usize, level: usize) -> f64 {
        let stride = self.stride(mode);
        let dim = self.dims[mode];
        let mut pop = 0.0;
        for (idx, a) in self.amps.iter().enumerate() {
            let n = (idx / stride) % dim;
            if n > level {
                pop += a.norm_sqr();
            }
        }
        pop
    }

    /// Mean occupation of one mode.
    pub fn mean_occupation(&self, mode: usize) -> f64 {
        let stride = self.stride(mode);
        let dim = self.dims[mode];
        self.amps
            .iter()
            .enumerate()
            .map(|(idx, a)| ((idx / stride) % dim) as f64 * a.norm_sqr())
            .sum()
    }

    fn apply_generator(
        &self,
        modes: &[usize],
        key: GeneratorKey,
        scale: f64,
    ) -> Result<FockState> {
        let sub_dims: Vec<usize> = modes.iter().map(|&m| self.dims[m]).collect();
        let d: usize = sub_dims.iter().product();
        if d > MAX_GENERATOR_DIM {
            return Err(Error::Capacity(format!(
                "generator subspace dimension {d} exceeds {MAX_GENERATOR_DIM}"
            )));
        }
        let sys = cached_chain_system(&key, &sub_dims);
        self.apply_chain_system(modes, &sys, scale)
    }

    /// Exact beamsplitter exp(theta (b\u{207a}a \u{2212} a\u{207a}b)) whose Heisenberg action
    /// is a -> a cos(theta) \u{2212} b sin(theta), b -> b cos(theta) + a sin(theta).
    pub fn apply_beamsplitter(&self, mode_a: &str, mode_b: &str, theta: f64) -> Result<FockState> {
        let (ia, ib) = (self.mode_index(mode_a)?, self.mode_index(mode_b)?);
        if ia == ib {
            return Err(Error::Validation("beamsplitter modes must differ".into()));
        }
        self.apply_generator(&[ia, ib], GeneratorKey::Beamsplitter, theta)
    }

    /// Exact two-mode squeezer exp(r (a\u{207a}b\u{207a} \u{2212} ab)) with cosh r = gain;
    /// Heisenberg action a -> a cosh r + b\u{207a} sinh r. Checks after the fact
    /// that no meaningful population reached the top four levels of either
    /// mode.
    pub fn apply_two_mode_squeezer(
        &self,
        mode_a: &str,
        mode_b: &str,
        gain: f64,
    ) -> Result<FockState> {
        if gain < 1.0 {
            return Err(Error::Validation(format!(
                "two-mode squeezer gain must be >= 1, got {gain}"
            )));
        }
        let (ia, ib) = (self.mode_index(mode_a)?, self.mode_index(mode_b)?);
        if ia == ib {
            return Err(Error::Validation("squeezer modes must differ".into()));
        }
        let r = gain.acosh();
        let out = self.apply_generator(&[ia, ib], GeneratorKey::TwoModeSqueezer, r)?;
        for (mode, label) in [(ia, mode_a), (ib, mode_b)] {
            let guard_level = self.dims[mode].saturating_sub(5);
            let leak = out.population_above(mode, guard_level);
            if leak > SQUEEZER_LEAK_BOUND {
                return Err(Error::TruncationLeak {
                    mode: label.to_string(),
                    leak,
                    bound: SQUEEZER_LEAK_BOUND,
                });
            }
        }
        Ok(out)
    }

    /// Displacement exp(alpha a\u{207a} \u{2212} alpha* a) of a single mode.
    pub fn apply_displacement(&self, mode: &str, alpha: Complex64) -> Result<FockState> {
        let i = self.mode_index(mode)?;
        if alpha.norm() == 0.0 {
            return Ok(self.clone());
        }
        // direction depends on arg(alpha), so this generator is not cached
        let dim = self.dims[i];
        let down = |s: usize| -> Option<(usize, Complex64)> {
            if s >= 1 {
                // <n-1| -i(alpha a+ - alpha* a) |n>
                Some((s - 1, Complex64::new(0.0, 1.0) * alpha.conj() * (s as f64).sqrt()))
            } else {
                None
            }
        };
        let sys = build_chain_system(dim, &down);
        self.apply_chain_system(&[i], &sys, 1.0)
    }

    /// Exact trilinear exchange exp(theta (\u{3be}\u{207a}f \u{2212} f\u{207a}\u{3be})) with
    /// \u{3be} = a_l2\u{207a} a_l1/\u{221a}n_ref: the spin-mode counterpart of the
    /// beamsplitter, used to probe the bosonic replacement of \u{3be}.
    pub fn apply_spin_exchange(
        &self,
        field: &str,
        level1: &str,
        level2: &str,
        theta: f64,
        n_ref: u64,
    ) -> Result<FockState> {
        let f = self.mode_index(field)?;
        let l1 = self.mode_index(level1)?;
        let l2 = self.mode_index(level2)?;
        if f == l1 || f == l2 || l1 == l2 {
            return Err(Error::Validation("exchange modes must be distinct".into()));
        }
        self.apply_generator(&[f, l1, l2], GeneratorKey::SpinExchange { n_ref }, theta)
    }

    /// Apply exp(i * scale * H) on the listed modes, H given as a direct sum
    /// of gauge-rotated real tridiagonal chains over their joint subspace.
    fn apply_chain_system(
        &self,
        modes: &[usize],
        sys: &ChainSystem,
        scale: f64,
    ) -> Result<FockState> {
        let sub_dims: Vec<usize> = modes.iter().map(|&m| self.dims[m]).collect();
        let d: usize = sub_dims.iter().product();
        if sys.size != d {
            return Err(Error::DimensionMismatch(
                "chain system does not match subspace".into(),
            ));
        }
        let strides: Vec<usize> = modes.iter().map(|&m| self.stride(m)).collect();
        let mut sub_offsets = vec![0usize; d];
        for (s, off) in sub_offsets.iter_mut().enumerate() {
            let mut rem = s;
            let mut o = 0;
            for (k, &sd) in sub_dims.iter().enumerate().rev() {
                o += (rem % sd) * strides[k];
                rem /= sd;
            }
            *off = o;
        }
        let mut rest_offsets = vec![0usize];
        for m in 0..self.dims.len() {
            if modes.contains(&m) {
                continue;
            }
            let stride = self.stride(m);
            let mut next = Vec::with_capacity(rest_offsets.len() * self.dims[m]);
            for &base in &rest_offsets {
                for v in 0..self.dims[m] {
                    next.push(base + v * stride);
                }
            }
            rest_offsets = next;
        }

        let mut out = self.amps.clone();
        let mut gathered: Vec<Complex64> = Vec::new();
        let mut rotated: Vec<Complex64> = Vec::new();
        for &base in &rest_offsets {
            for chain in &sys.chains {
                let l = chain.sub_indices.len();
                if l == 1 {
                    continue; // bare element of the direct sum: identity
                }
                gathered.clear();
                for (k, &s) in chain.sub_indices.iter().enumerate() {
                    gathered.push(chain.gauge[k].conj() * self.amps[base + sub_offsets[s]]);
                }
                rotated.clear();
                for j in 0..l {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (k, g) in gathered.iter().enumerate() {
                        acc += chain.eigvecs[(k, j)] * g;
                    }
                    acc *= Complex64::from_polar(1.0, scale * chain.eigvals[j]);
                    rotated.push(acc);
                }
                for (k, &s) in chain.sub_indices.iter().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (j, r) in rotated.iter().enumerate() {
                        acc += chain.eigvecs[(k, j)] * r;
                    }
                    out[base + sub_offsets[s]] = chain.gauge[k] * acc;
                }
            }
        }
        let st = FockState {
            labels: self.labels.clone(),
            dims: self.dims.clone(),
            amps: out,
        };
        let drift = (st.norm() - 1.0).abs();
        if drift > NORM_TOL {
            return Err(Error::InternalDisagreement(format!(
                "unitary application drifted the norm by {drift:.3e}"
            )));
        }
        Ok(st)
    }

    fn apply_ladder(&self, mode: usize, raise: bool) -> Vec<Complex64> {
        let stride = self.stride(mode);
        let dim = self.dims[mode];
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (idx, a) in self.amps.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let n = (idx / stride) % dim;
            if raise {
                if n + 1 < dim {
                    out[idx + stride] += ((n + 1) as f64).sqrt() * a;
                }
            } else if n > 0 {
                out[idx - stride] += (n as f64).sqrt() * a;
            }
        }
        out
    }

    pub(crate) fn apply_observable(&self, obs: &Observable) -> Vec<Complex64> {
        let add = |mut u: Vec<Complex64>, v: Vec<Complex64>, w: Complex64| -> Vec<Complex64> {
            for (a, b) in u.iter_mut().zip(v) {
                *a += w * b;
            }
            u
        };
        let hop = |from: usize, to: usize| -> Vec<Complex64> {
            // a_to+ a_from |psi>
            let lowered = FockState {
                labels: self.labels.clone(),
                dims: self.dims.clone(),
                amps: self.apply_ladder(from, false),
            };
            lowered.apply_ladder(to, true)
        };
        match obs {
            Observable::Q(m) => add(
                self.apply_ladder(*m, false),
                self.apply_ladder(*m, true),
                Complex64::new(1.0, 0.0),
            ),
            Observable::P(m) => add(
                self.apply_ladder(*m, true)
                    .into_iter()
                    .map(|x| Complex64::new(0.0, 1.0) * x)
                    .collect(),
                self.apply_ladder(*m, false),
                Complex64::new(0.0, -1.0),
            ),
            Observable::SpinQ {
                level1,
                level2,
                n_ref,
            } => {
                let w = Complex64::new(1.0 / (*n_ref as f64).sqrt(), 0.0);
                let u = hop(*level2, *level1); // a1+ a2
                let v = hop(*level1, *level2); // a2+ a1
                add(u.into_iter().map(|x| w * x).collect(), v, w)
            }
            Observable::SpinP {
                level1,
                level2,
                n_ref,
            } => {
                let w = Complex64::new(0.0, 1.0 / (*n_ref as f64).sqrt());
                let u = hop(*level2, *level1); // i/sqrt(N) a1+ a2
                let v = hop(*level1, *level2); // -i/sqrt(N) a2+ a1
                add(u.into_iter().map(|x| w * x).collect(), v, -w)
            }
        }
    }

    /// Means and symmetrized covariance matrix of the given observables,
    /// computed exactly on the truncated space.
    pub fn moments(&self, observables: &[Observable]) -> (DVector<f64>, DMatrix<f64>) {
        let applied: Vec<Vec<Complex64>> = observables
            .iter()
            .map(|o| self.apply_observable(o))
            .collect();
        let dot = |u: &[Complex64], v: &[Complex64]| -> Complex64 {
            u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
        };
        let k = observables.len();
        let mut means = DVector::zeros(k);
        for (i, ov) in applied.iter().enumerate() {
            means[i] = dot(&self.amps, ov).re;
        }
        let mut cov = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                // Re<O_i psi | O_j psi> is the symmetrized second moment
                let second = dot(&applied[i], &applied[j]).re;
                let c = second - means[i] * means[j];
                cov[(i, j)] = c;
                cov[(j, i)] = c;
            }
        }
        (means, cov)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum GeneratorKey {
    Beamsplitter,
    TwoModeSqueezer,
    SpinExchange { n_ref: u64 },
}

/// One tridiagonal block of a quadratic-charge-conserving generator,
/// gauge-rotated so its couplings are real.
struct Chain {
    /// Subspace linear indices, chain bottom first.
    sub_indices: Vec<usize>,
    /// Unit phases d_k with conj(d_k) <k|H|k+1> d_{k+1} real positive.
    gauge: Vec<Complex64>,
    eigvecs: DMatrix<f64>,
    eigvals: Vec<f64>,
}

struct ChainSystem {
    size: usize,
    chains: Vec<Chain>,
}

/// Decompose a generator into chains from its single-step lowering move.
/// `down(s)` returns the target index and the matrix element <target|H|s>.
fn build_chain_system(d: usize, down: &dyn Fn(usize) -> Option<(usize, Complex64)>) -> ChainSystem {
    let down_links: Vec<Option<(usize, Complex64)>> = (0..d).map(down).collect();
    let mut up_links: Vec<Option<(usize, Complex64)>> = vec![None; d];
    for (s, link) in down_links.iter().enumerate() {
        if let Some((t, c)) = link {
            up_links[*t] = Some((s, *c));
        }
    }
    let mut chains = Vec::new();
    for bottom in 0..d {
        if down_links[bottom].is_some() {
            continue;
        }
        let mut sub_indices = vec![bottom];
        let mut couplings = Vec::new();
        let mut cur = bottom;
        while let Some((next, c)) = up_links[cur] {
            couplings.push(c);
            sub_indices.push(next);
            cur = next;
        }
        let l = sub_indices.len();
        let mut gauge = Vec::with_capacity(l);
        gauge.push(Complex64::new(1.0, 0.0));
        for c in &couplings {
            let prev = *gauge.last().expect("nonempty");
            gauge.push(prev * c.conj() / c.norm());
        }
        let mut tri = DMatrix::zeros(l, l);
        for (k, c) in couplings.iter().enumerate() {
            tri[(k, k + 1)] = c.norm();
            tri[(k + 1, k)] = c.norm();
        }
        let eig = SymmetricEigen::new(tri);
        chains.push(Chain {
            sub_indices,
            gauge,
            eigvecs: eig.eigenvectors,
            eigvals: eig.eigenvalues.iter().copied().collect(),
        });
    }
    ChainSystem { size: d, chains }
}

fn generator_down_move(
    key: &GeneratorKey,
    sub_dims: &[usize],
    s: usize,
) -> Option<(usize, Complex64)> {
    let minus_i = Complex64::new(0.0, -1.0);
    match key {
        // H = -i (b+ a - a+ b); lowering move takes (m, n) to (m-1, n+1)
        GeneratorKey::Beamsplitter => {
            let db = sub_dims[1];
            let (m, n) = (s / db, s % db);
            if m >= 1 && n + 1 < db {
                let g = ((m as f64) * ((n + 1) as f64)).sqrt();
                Some((s - db + 1, minus_i * g))
            } else {
                None
            }
        }
        // H = -i (a+ b+ - a b); lowering move takes (m, n) to (m-1, n-1)
        GeneratorKey::TwoModeSqueezer => {
            let db = sub_dims[1];
            let (m, n) = (s / db, s % db);
            if m >= 1 && n >= 1 {
                let g = ((m as f64) * (n as f64)).sqrt();
                Some((s - db - 1, -minus_i * g))
            } else {
                None
            }
        }
        // H = -i (xi+ f - f+ xi) over (field, level1, level2);
        // lowering move takes (nf, m1, m2) to (nf-1, m1+1, m2-1)
        GeneratorKey::SpinExchange { n_ref } => {
            let (d1, d2) = (sub_dims[1], sub_dims[2]);
            let nf = s / (d1 * d2);
            let m1 = (s / d2) % d1;
            let m2 = s % d2;
            if nf >= 1 && m1 + 1 < d1 && m2 >= 1 {
                let g = ((nf as f64) * ((m1 + 1) as f64) * (m2 as f64)).sqrt()
                    / (*n_ref as f64).sqrt();
                Some((s - d1 * d2 + d2 - 1, minus_i * g))
            } else {
                None
            }
        }
    }
}

fn cached_chain_system(key: &GeneratorKey, sub_dims: &[usize]) -> Arc<ChainSystem> {
    static CACHE: OnceLock<Mutex<HashMap<(GeneratorKey, Vec<usize>), Arc<ChainSystem>>>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let cache_key = (key.clone(), sub_dims.to_vec());
    if let Some(sys) = cache.lock().unwrap().get(&cache_key) {
        return sys.clone();
    }
    let d: usize = sub_dims.iter().product();
    let sys = Arc::new(build_chain_system(d, &|s| {
        generator_down_move(key, sub_dims, s)
    }));
    cache.lock().unwrap().insert(cache_key, sys.clone());
    sys
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn number_state_is_a_basis_vector() {
        let st = FockState::product(&[
            ("a", 4, ModePrep::Number(2)),
            ("b", 5, ModePrep::Number(3)),
        ])
        .unwrap();
        let flat = 2 * 5 + 3;
        for (i, a) in st.amplitudes().iter().enumerate() {
            let want = if i == flat { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(a.re, want, epsilon = 0.0);
            assert_abs_diff_eq!(a.im, 0.0, epsilon = 0.0);
        }
    }

    #[test]
    fn condensate_pair_amplitudes_n2() {
        // hand-expanded binomial for N = 2, equal real amplitudes:
        // 1/2 on (2,0), 1/sqrt(2) on (1,1), 1/2 on (0,2)
        let a = c(1.0 / SQRT_2, 0.0);
        let st = FockState::bec_pair("a1", "a2", 2, a, a, 0).unwrap();
        let dim = 3;
        assert_abs_diff_eq!(st.amplitudes()[2 * dim].re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(st.amplitudes()[dim + 1].re, 1.0 / SQRT_2, epsilon = 1e-14);
        assert_abs_diff_eq!(st.amplitudes()[2].re, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn coherent_mean_occupation() {
        let st = FockState::product(&[("a", 21, ModePrep::Coherent(c(1.0, 0.0)))]).unwrap();
        assert_abs_diff_eq!(st.mean_occupation(0), 1.0, epsilon = 1e-10);
        // cutoff below the truncation bound is rejected
        assert!(FockState::product(&[("a", 10, ModePrep::Coherent(c(1.0, 0.0)))]).is_err());
    }

    #[test]
    fn vacuum_quadrature_variance_is_one() {
        let st = FockState::product(&[("a", 8, ModePrep::Vacuum)]).unwrap();
        let (means, cov) = st.moments(&[Observable::Q(0), Observable::P(0)]);
        assert_abs_diff_eq!(means[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(cov[(0, 0)], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(cov[(1, 1)], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(cov[(0, 1)], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn squeezed_vacuum_variances() {
        for s in [-0.4, 0.25, 0.4] {
            let st = FockState::product(&[("a", 40, ModePrep::SqueezedVacuum { s })]).unwrap();
            let (_, cov) = st.moments(&[Observable::Q(0), Observable::P(0)]);
            assert_abs_diff_eq!(cov[(0, 0)], (2.0 * s).exp(), epsilon = 1e-9);
            assert_abs_diff_eq!(cov[(1, 1)], (-2.0 * s).exp(), epsilon = 1e-9);
        }
        // truncation deficit beyond the bound is rejected, not absorbed
        assert!(FockState::product(&[("a", 20, ModePrep::SqueezedVacuum { s: 0.7 })]).is_err());
    }

    #[test]
    fn beamsplitter_identity_and_swap() {
        let st = FockState::product(&[
            ("a", 6, ModePrep::Number(1)),
            ("b", 6, ModePrep::Vacuum),
        ])
        .unwrap();
        let same = st.apply_beamsplitter("a", "b", 0.0).unwrap();
        for (x, y) in st.amplitudes().iter().zip(same.amplitudes()) {
            assert_abs_diff_eq!((x - y).norm(), 0.0, epsilon = 1e-13);
        }
        let swapped = st.apply_beamsplitter("a", "b", FRAC_PI_2).unwrap();
        // |1,0> -> |0,1> with unit amplitude up to rounding
        let target = 1usize; // (0,1) flat index in 6x6
        assert_abs_diff_eq!(swapped.amplitudes()[target].norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn beamsplitter_splits_coherent_state() {
        let alpha = c(0.8, 0.3);
        let st = FockState::product(&[
            ("a", 22, ModePrep::Coherent(alpha)),
            ("b", 22, ModePrep::Vacuum),
        ])
        .unwrap();
        let out = st.apply_beamsplitter("a", "b", FRAC_PI_4).unwrap();
        let (mu, nu) = (FRAC_PI_4.cos(), FRAC_PI_4.sin());
        let (means, cov) = out.moments(&[
            Observable::Q(0),
            Observable::P(0),
            Observable::Q(1),
            Observable::P(1),
        ]);
        // classical splitting rule: product of coherent states mu*alpha, nu*alpha
        assert_abs_diff_eq!(means[0], 2.0 * mu * alpha.re, epsilon = 1e-9);
        assert_abs_diff_eq!(means[1], 2.0 * mu * alpha.im, epsilon = 1e-9);
        assert_abs_diff_eq!(means[2], 2.0 * nu * alpha.re, epsilon = 1e-9);
        for i in 0..4 {
            assert_abs_diff_eq!(cov[(i, i)], 1.0, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(cov[(0, 2)], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn two_mode_squeezer_on_vacuum() {
        // geometric tail (1/2)^n of the squeezed vacuum needs headroom of
        // about 38 levels to meet the 1e-10 leak contract
        let st = FockState::product(&[
            ("f", 42, ModePrep::Vacuum),
            ("c", 42, ModePrep::Vacuum),
        ])
        .unwrap();
        let out = st.apply_two_mode_squeezer("f", "c", SQRT_2).unwrap();
        // mean occupation sinh^2 r = gain^2 - 1 = 1
        assert_abs_diff_eq!(out.mean_occupation(0), 1.0, epsilon = 1e-10);
        let (_, cov) = out.moments(&[Observable::Q(0), Observable::P(0)]);
        assert_abs_diff_eq!(cov[(0, 0)], 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(cov[(1, 1)], 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!((out.norm() - 1.0).abs(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn squeezer_gain_on_means() {
        let st = FockState::product(&[
            ("f", 64, ModePrep::Coherent(c(0.9, 0.0))),
            ("c", 64, ModePrep::Vacuum),
        ])
        .unwrap();
        let out = st.apply_two_mode_squeezer("f", "c", SQRT_2).unwrap();
        let (means, _) = out.moments(&[Observable::Q(0)]);
        assert_abs_diff_eq!(means[0], SQRT_2 * 2.0 * 0.9, epsilon = 1e-9);
    }

    #[test]
    fn squeezer_leak_check_fires_on_tiny_cutoff() {
        let st = FockState::product(&[
            ("f", 7, ModePrep::Vacuum),
            ("c", 7, ModePrep::Vacuum),
        ])
        .unwrap();
        let err = st.apply_two_mode_squeezer("f", "c", SQRT_2);
        assert!(matches!(err, Err(Error::TruncationLeak { .. })));
    }

    #[test]
    fn fock_medium_spin_variance_exact() {
        // V = (n1(n2+1) + n2(n1+1))/N = 61/21 for (1, 20)
        let st = FockState::product(&[
            ("a1", 4, ModePrep::Number(1)),
            ("a2", 24, ModePrep::Number(20)),
        ])
        .unwrap();
        let (means, cov) = st.moments(&[
            Observable::SpinQ {
                level1: 0,
                level2: 1,
                n_ref: 21,
            },
            Observable::SpinP {
                level1: 0,
                level2: 1,
                n_ref: 21,
            },
        ]);
        assert_abs_diff_eq!(means[0], 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(cov[(0, 0)], 61.0 / 21.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cov[(1, 1)], 61.0 / 21.0, epsilon = 1e-12);
    }

    #[test]
    fn condensate_spin_moments_match_closed_forms() {
        use crate::medium::{AtomicMedium, BecMedium};
        for (n, a1sq, phi) in [(20u64, 0.5, FRAC_PI_4), (50, 0.3, 0.9), (35, 0.5, 0.0)] {
            let bec = BecMedium::from_population(n, a1sq, phi).unwrap();
            let st = FockState::bec_pair("a1", "a2", n, bec.alpha1(), bec.alpha2(), 3).unwrap();
            let (means, cov) = st.moments(&[
                Observable::SpinQ {
                    level1: 0,
                    level2: 1,
                    n_ref: n,
                },
                Observable::SpinP {
                    level1: 0,
                    level2: 1,
                    n_ref: n,
                },
            ]);
            let closed = bec.spin_moments();
            // the oracle pins down the sign convention of <P> as well
            assert_abs_diff_eq!(means[0], closed.mean_q, epsilon = 1e-10);
            assert_abs_diff_eq!(means[1], closed.mean_p, epsilon = 1e-10);
            assert_abs_diff_eq!(cov[(0, 0)], closed.vq, epsilon = 5.0 / n as f64);
            assert_abs_diff_eq!(cov[(0, 0)], closed.vq, epsilon = 1e-10);
            assert_abs_diff_eq!(cov[(1, 1)], closed.vp, epsilon = 1e-10);
            assert_abs_diff_eq!(cov[(0, 1)], closed.cov_qp, epsilon = 1e-10);
        }
    }

    #[test]
    fn capacity_guard() {
        assert!(FockState::product(&[
            ("a", 5000, ModePrep::Vacuum),
            ("b", 5000, ModePrep::Vacuum)
        ])
        .is_err());
    }
}
