//! Multimode Gaussian states as first/second quadrature moments, plus linear
//! (possibly phase-conjugating) mode maps acting on them.
//!
//! Conventions. Quadratures are Q = a + a\u{207a}, P = i(a\u{207a} \u{2212} a), so a vacuum or
//! coherent mode has V_Q = V_P = 1. Mean vectors and covariance matrices are
//! ordered Q\u{2081},P\u{2081},...,Q_M,P_M. Covariances are symmetrized expectation values,
//! which is what linear propagation of the real matrices produces anyway.
//!
//! Positivity of `cov + i\u{3a9}` is deliberately not enforced: spin-derived
//! effective modes at finite atom number may dip below bosonic bounds. Only
//! per-mode variance nonnegativity is checked at injection points.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// First and second moments of a single mode's quadrature pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeMoments {
    pub mean_q: f64,
    pub mean_p: f64,
    pub vq: f64,
    pub vp: f64,
    pub cov_qp: f64,
}

impl ModeMoments {
    pub fn new(mean_q: f64, mean_p: f64, vq: f64, vp: f64, cov_qp: f64) -> Result<Self> {
        if vq < 0.0 {
            return Err(Error::NegativeVariance {
                what: "vq".into(),
                value: vq,
            });
        }
        if vp < 0.0 {
            return Err(Error::NegativeVariance {
                what: "vp".into(),
                value: vp,
            });
        }
        Ok(Self {
            mean_q,
            mean_p,
            vq,
            vp,
            cov_qp,
        })
    }

    /// Coherent-level moments: unit variances, no correlation.
    pub fn vacuum() -> Self {
        Self {
            mean_q: 0.0,
            mean_p: 0.0,
            vq: 1.0,
            vp: 1.0,
            cov_qp: 0.0,
        }
    }

    pub fn with_means(mean_q: f64, mean_p: f64) -> Self {
        Self {
            mean_q,
            mean_p,
            ..Self::vacuum()
        }
    }
}

/// Gaussian state over an ordered set of labelled bosonic modes.
#[derive(Debug, Clone)]
pub struct GaussianState {
    labels: Vec<String>,
    means: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Product vacuum over the given modes: zero means, identity covariance.
    pub fn vacuum<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Validation("at least one mode label required".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for l in labels {
            if !seen.insert(l.as_ref()) {
                return Err(Error::Validation(format!(
                    "duplicate mode label `{}`",
                    l.as_ref()
                )));
            }
        }
        let n = 2 * labels.len();
        Ok(Self {
            labels: labels.iter().map(|l| l.as_ref().to_string()).collect(),
            means: DVector::zeros(n),
            cov: DMatrix::identity(n, n),
        })
    }

    pub fn mode_labels(&self) -> &[String] {
        &self.labels
    }

    pub fn num_modes(&self) -> usize {
        self.labels.len()
    }

    pub fn means(&self) -> &DVector<f64> {
        &self.means
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn mode_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownMode(label.to_string()))
    }

    /// Replace one mode's 2x2 moment block and means; cross covariances of
    /// that mode with every other mode are zeroed (fresh, uncorrelated
    /// preparation).
    pub fn set_mode_moments(&self, label: &str, m: ModeMoments) -> Result<Self> {
        // Re-run the variance checks so values forged via struct literals
        // are still rejected here.
        let m = ModeMoments::new(m.mean_q, m.mean_p, m.vq, m.vp, m.cov_qp)?;
        let k = self.mode_index(label)?;
        let mut out = self.clone();
        let (q, p) = (2 * k, 2 * k + 1);
        out.means[q] = m.mean_q;
        out.means[p] = m.mean_p;
        for j in 0..out.cov.ncols() {
            out.cov[(q, j)] = 0.0;
            out.cov[(p, j)] = 0.0;
            out.cov[(j, q)] = 0.0;
            out.cov[(j, p)] = 0.0;
        }
        out.cov[(q, q)] = m.vq;
        out.cov[(p, p)] = m.vp;
        out.cov[(q, p)] = m.cov_qp;
        out.cov[(p, q)] = m.cov_qp;
        Ok(out)
    }

    /// Moments of a single mode as stored.
    pub fn mode_moments(&self, label: &str) -> Result<ModeMoments> {
        let k = self.mode_index(label)?;
        let (q, p) = (2 * k, 2 * k + 1);
        Ok(ModeMoments {
            mean_q: self.means[q],
            mean_p: self.means[p],
            vq: self.cov[(q, q)],
            vp: self.cov[(p, p)],
            cov_qp: self.cov[(q, p)],
        })
    }

    /// Propagate the state through `map` acting on `in_labels`, relabelling
    /// those modes to `out_labels`; untouched modes are carried through.
    ///
    /// Returns the transformed state together with the input-output
    /// cross-covariance matrix, entry (i, j) = Cov(r_in_i, r_out_j) over the
    /// full quadrature ordering. The cross block is what correlation
    /// coefficients between pre- and post-map quadratures are built from.
    pub fn apply_map(
        &self,
        map: &ModeMap,
        in_labels: &[&str],
        out_labels: &[&str],
    ) -> Result<(GaussianState, DMatrix<f64>)> {
        if map.modes_in() != map.modes_out() {
            return Err(Error::DimensionMismatch(format!(
                "in-place application needs a square map, got {}x{}",
                map.modes_out(),
                map.modes_in()
            )));
        }
        if in_labels.len() != map.modes_in() || out_labels.len() != map.modes_out() {
            return Err(Error::DimensionMismatch(format!(
                "map acts on {} modes but {} input / {} output labels given",
                map.modes_in(),
                in_labels.len(),
                out_labels.len()
            )));
        }
        let positions = in_labels
            .iter()
            .map(|l| self.mode_index(l))
            .collect::<Result<Vec<_>>>()?;
        let full = map.embed(&positions, self.num_modes())?;
        let s = full.quadrature_matrix();

        let means = &s * &self.means;
        let mut cov = &s * &self.cov * s.transpose();
        // Keep the stored matrix exactly symmetric.
        for i in 0..cov.nrows() {
            for j in 0..i {
                let v = 0.5 * (cov[(i, j)] + cov[(j, i)]);
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        let cross = &self.cov * s.transpose();

        let mut labels = self.labels.clone();
        for (slot, label) in positions.iter().zip(out_labels) {
            labels[*slot] = label.to_string();
        }
        Ok((
            GaussianState {
                labels,
                means,
                cov,
            },
            cross,
        ))
    }
}

/// Linear transformation of mode operators, b_out = A a + B a\u{207a}.
///
/// `a_block` multiplies annihilation operators, `b_block` creation operators.
/// A map with nonzero `b_block` is phase conjugating (Bogoliubov).
#[derive(Debug, Clone)]
pub struct ModeMap {
    a_block: DMatrix<Complex64>,
    b_block: DMatrix<Complex64>,
}

pub const CANONICAL_TOL: f64 = 1e-12;

impl ModeMap {
    pub fn new(a_block: DMatrix<Complex64>, b_block: DMatrix<Complex64>) -> Result<Self> {
        if a_block.shape() != b_block.shape() {
            return Err(Error::DimensionMismatch(format!(
                "a_block {:?} vs b_block {:?}",
                a_block.shape(),
                b_block.shape()
            )));
        }
        Ok(Self { a_block, b_block })
    }

    /// Passive map (no phase conjugation): b_block = 0.
    pub fn rotation(a_block: DMatrix<f64>) -> Self {
        let (r, c) = a_block.shape();
        Self {
            a_block: a_block.map(|x| Complex64::new(x, 0.0)),
            b_block: DMatrix::zeros(r, c),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            a_block: DMatrix::identity(n, n),
            b_block: DMatrix::zeros(n, n),
        }
    }

    pub fn a_block(&self) -> &DMatrix<Complex64> {
        &self.a_block
    }

    pub fn b_block(&self) -> &DMatrix<Complex64> {
        &self.b_block
    }

    pub fn modes_in(&self) -> usize {
        self.a_block.ncols()
    }

    pub fn modes_out(&self) -> usize {
        self.a_block.nrows()
    }

    /// Commutator-preservation certificate: A A\u{1d34} \u{2212} B B\u{1d34} = 1 per entry.
    pub fn canonical_defect(&self) -> f64 {
        let aa = &self.a_block * self.a_block.adjoint();
        let bb = &self.b_block * self.b_block.adjoint();
        let mut worst: f64 = 0.0;
        for i in 0..aa.nrows() {
            for j in 0..aa.ncols() {
                let expected = if i == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                worst = worst.max((aa[(i, j)] - bb[(i, j)] - expected).norm());
            }
        }
        worst
    }

    pub fn is_canonical(&self) -> bool {
        self.modes_in() == self.modes_out() && self.canonical_defect() <= CANONICAL_TOL
    }

    /// Real quadrature-space matrix S with output row order Q\u{2081},P\u{2081},...
    pub fn quadrature_matrix(&self) -> DMatrix<f64> {
        let (m_out, m_in) = self.a_block.shape();
        let mut s = DMatrix::zeros(2 * m_out, 2 * m_in);
        for i in 0..m_out {
            for j in 0..m_in {
                let u = self.a_block[(i, j)];
                let w = self.b_block[(i, j)];
                s[(2 * i, 2 * j)] = (u + w).re;
                s[(2 * i, 2 * j + 1)] = -(u - w).im;
                s[(2 * i + 1, 2 * j)] = (u + w).im;
                s[(2 * i + 1, 2 * j + 1)] = (u - w).re;
            }
        }
        s
    }

    /// Composition self \u{2218} inner (apply `inner` first).
    pub fn compose(&self, inner: &ModeMap) -> Result<ModeMap> {
        if self.modes_in() != inner.modes_out() {
            return Err(Error::DimensionMismatch(format!(
                "compose: outer expects {} modes, inner produces {}",
                self.modes_in(),
                inner.modes_out()
            )));
        }
        // b'' = A2 (A1 a + B1 a+) + B2 (conj(A1) a+ + conj(B1) a)
        let a = &self.a_block * &inner.a_block + &self.b_block * inner.b_block.conjugate();
        let b = &self.a_block * &inner.b_block + &self.b_block * inner.a_block.conjugate();
        Ok(ModeMap {
            a_block: a,
            b_block: b,
        })
    }

    /// Embed a square map acting on the listed mode positions into a system
    /// of `total` modes, identity elsewhere.
    pub fn embed(&self, positions: &[usize], total: usize) -> Result<ModeMap> {
        if self.modes_in() != self.modes_out() {
            return Err(Error::DimensionMismatch("embed needs a square map".into()));
        }
        if positions.len() != self.modes_in() {
            return Err(Error::DimensionMismatch(format!(
                "{} positions for a {}-mode map",
                positions.len(),
                self.modes_in()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for &p in positions {
            if p >= total || !seen.insert(p) {
                return Err(Error::DimensionMismatch(format!(
                    "invalid or repeated mode position {p} (total {total})"
                )));
            }
        }
        let mut a = DMatrix::identity(total, total).map(|x: f64| Complex64::new(x, 0.0));
        let mut b = DMatrix::zeros(total, total);
        for (bi, &gi) in positions.iter().enumerate() {
            for (bj, &gj) in positions.iter().enumerate() {
                a[(gi, gj)] = self.a_block[(bi, bj)];
                b[(gi, gj)] = self.b_block[(bi, bj)];
            }
        }
        Ok(ModeMap {
            a_block: a,
            b_block: b,
        })
    }
}

/// Standard antisymmetric form for the Q,P ordering used here:
/// block-diagonal [[0, 1], [-1, 0]] per mode.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * modes, 2 * modes);
    for k in 0..modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

/// Max entrywise deviation of S \u{3a9} S\u{1d40} from \u{3a9}.
pub fn symplectic_defect(map: &ModeMap) -> f64 {
    let s = map.quadrature_matrix();
    let omega = symplectic_form(map.modes_in());
    let lhs = &s * &omega * s.transpose();
    (lhs - omega).amax()
}
