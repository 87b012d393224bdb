//! Exact Gaussian-state algebra: state construction, beamsplitter channels,
//! partial trace, conditioning on coherent-state outcomes, symplectic
//! eigenvalues and von Neumann entropies.
//!
//! Conventions: hbar = 1, q = (a + a^dag)/sqrt(2), vacuum variance 1/2,
//! quadrature ordering (q1, p1, ..., qn, pn). A coherent state |beta> has
//! mean quadratures (sqrt(2) Re beta, sqrt(2) Im beta).

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Inverse};
use num_complex::Complex64;

use crate::error::{param_err, Error, Result};
use crate::rates::g;

const SYM_TOL: f64 = 1e-12;
const PHYS_TOL: f64 = 1e-10;

/// Channel parameters for the lossy (and noisy) bosonic channel.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ChannelParams {
    /// Transmissivity in [0, 1].
    pub eta: f64,
    /// Mean signal photons per mode.
    pub n: f64,
    /// Mean thermal photons per mode injected by the environment.
    pub n_t: f64,
}

impl ChannelParams {
    pub fn new(eta: f64, n: f64, n_t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(param_err("eta", format!("transmissivity {eta} not in [0,1]")));
        }
        if !(n >= 0.0) {
            return Err(param_err("N", format!("mean photon number {n} must be >= 0")));
        }
        if !(n_t >= 0.0) {
            return Err(param_err("N_T", format!("thermal photon number {n_t} must be >= 0")));
        }
        Ok(ChannelParams { eta, n, n_t })
    }
}

/// An n-mode Gaussian state: mean quadrature vector and covariance matrix.
#[derive(Debug, Clone)]
pub struct GaussianState {
    nmodes: usize,
    mean: Array1<f64>,
    cov: Array2<f64>,
}

impl GaussianState {
    /// Validating constructor: symmetry to 1e-12, finite entries, and every
    /// symplectic eigenvalue >= 1/2 - 1e-10.
    pub fn new(mean: Array1<f64>, cov: Array2<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || dim % 2 != 0 || cov.nrows() != dim || cov.ncols() != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: cov.nrows(),
            });
        }
        if mean.iter().any(|x| !x.is_finite()) || cov.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut max_asym = 0f64;
        for i in 0..dim {
            for j in (i + 1)..dim {
                max_asym = max_asym.max((cov[[i, j]] - cov[[j, i]]).abs());
            }
        }
        if max_asym > SYM_TOL {
            return Err(Error::NonSymmetric { max_asym });
        }
        let state = GaussianState {
            nmodes: dim / 2,
            mean,
            cov,
        };
        let nus = state.symplectic_eigenvalues()?;
        if let Some(&nu) = nus.first() {
            if nu < 0.5 - PHYS_TOL {
                return Err(Error::Unphysical { nu });
            }
        }
        Ok(state)
    }

    pub fn nmodes(&self) -> usize {
        self.nmodes
    }

    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &Array2<f64> {
        &self.cov
    }

    /// n-mode vacuum.
    pub fn vacuum(nmodes: usize) -> Self {
        GaussianState {
            nmodes,
            mean: Array1::zeros(2 * nmodes),
            cov: Array2::eye(2 * nmodes) * 0.5,
        }
    }

    /// Two-mode squeezed vacuum with `n` mean photons per mode:
    /// cov = 1/2 [[C I, S Z], [S Z, C I]], C = 2N+1, S = 2 sqrt(N(N+1)).
    pub fn tmsv(n: f64) -> Result<Self> {
        if !(n >= 0.0) {
            return Err(param_err("N", format!("mean photon number {n} must be >= 0")));
        }
        let c = 2.0 * n + 1.0;
        let s = 2.0 * (n * (n + 1.0)).sqrt();
        let mut cov = Array2::zeros((4, 4));
        for (i, v) in [c, c, c, c].into_iter().enumerate() {
            cov[[i, i]] = 0.5 * v;
        }
        cov[[0, 2]] = 0.5 * s;
        cov[[2, 0]] = 0.5 * s;
        cov[[1, 3]] = -0.5 * s;
        cov[[3, 1]] = -0.5 * s;
        GaussianState::new(Array1::zeros(4), cov)
    }

    /// Append an uncorrelated thermal mode with `n_t` mean photons.
    pub fn attach_thermal(&self, n_t: f64) -> Result<Self> {
        if !(n_t >= 0.0) {
            return Err(param_err("N_T", format!("thermal photon number {n_t} must be >= 0")));
        }
        let dim = 2 * self.nmodes;
        let mut cov = Array2::zeros((dim + 2, dim + 2));
        cov.slice_mut(ndarray::s![..dim, ..dim]).assign(&self.cov);
        cov[[dim, dim]] = n_t + 0.5;
        cov[[dim + 1, dim + 1]] = n_t + 0.5;
        let mut mean = Array1::zeros(dim + 2);
        mean.slice_mut(ndarray::s![..dim]).assign(&self.mean);
        GaussianState::new(mean, cov)
    }

    /// Append a vacuum mode.
    pub fn attach_vacuum(&self) -> Result<Self> {
        self.attach_thermal(0.0)
    }

    /// Beamsplitter of transmissivity `eta` on modes (a, b), acting as
    /// a -> sqrt(eta) a + sqrt(1-eta) b, b -> sqrt(1-eta) a - sqrt(eta) b.
    pub fn beamsplitter(&self, mode_a: usize, mode_b: usize, eta: f64) -> Result<Self> {
        if mode_a >= self.nmodes {
            return Err(Error::ModeIndex {
                index: mode_a,
                nmodes: self.nmodes,
            });
        }
        if mode_b >= self.nmodes {
            return Err(Error::ModeIndex {
                index: mode_b,
                nmodes: self.nmodes,
            });
        }
        if mode_a == mode_b {
            return Err(param_err("mode_b", "beamsplitter modes must be distinct"));
        }
        if !(0.0..=1.0).contains(&eta) {
            return Err(param_err("eta", format!("transmissivity {eta} not in [0,1]")));
        }
        let t = eta.sqrt();
        let r = (1.0 - eta).sqrt();
        let dim = 2 * self.nmodes;
        let mut sym = Array2::eye(dim);
        for off in 0..2 {
            let ia = 2 * mode_a + off;
            let ib = 2 * mode_b + off;
            sym[[ia, ia]] = t;
            sym[[ia, ib]] = r;
            sym[[ib, ia]] = r;
            sym[[ib, ib]] = -t;
        }
        let mean = sym.dot(&self.mean);
        let cov = sym.dot(&self.cov).dot(&sym.t());
        GaussianState::new(mean, cov)
    }

    /// Restrict to the listed modes (in the given order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(param_err("keep", "mode list must be nonempty"));
        }
        for &m in keep {
            if m >= self.nmodes {
                return Err(Error::ModeIndex {
                    index: m,
                    nmodes: self.nmodes,
                });
            }
        }
        let idx: Vec<usize> = keep.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let mean = Array1::from_iter(idx.iter().map(|&i| self.mean[i]));
        let mut cov = Array2::zeros((idx.len(), idx.len()));
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                cov[[a, b]] = self.cov[[i, j]];
            }
        }
        GaussianState::new(mean, cov)
    }

    /// Condition on a heterodyne (coherent-state) outcome `beta` on the
    /// listed modes. Returns the conditional state of the remaining modes
    /// and the Gaussian density of the outcome in quadrature space.
    ///
    /// cov' = V_K - V_KB (V_B + I/2)^-1 V_KB^T,
    /// mean' = m_K + V_KB (V_B + I/2)^-1 (m_beta - m_B),
    /// with m_beta = (sqrt(2) Re beta, sqrt(2) Im beta) per measured mode.
    pub fn condition_on_coherent(
        &self,
        measured: &[usize],
        betas: &[Complex64],
    ) -> Result<(Self, f64)> {
        if measured.is_empty() || measured.len() != betas.len() {
            return Err(param_err("measured", "need one amplitude per measured mode"));
        }
        for &m in measured {
            if m >= self.nmodes {
                return Err(Error::ModeIndex {
                    index: m,
                    nmodes: self.nmodes,
                });
            }
        }
        if measured.len() >= self.nmodes {
            return Err(param_err("measured", "at least one mode must remain"));
        }
        let kept: Vec<usize> = (0..self.nmodes).filter(|m| !measured.contains(m)).collect();
        let ik: Vec<usize> = kept.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let ib: Vec<usize> = measured.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();

        let pick = |rows: &[usize], cols: &[usize]| {
            let mut out = Array2::zeros((rows.len(), cols.len()));
            for (a, &i) in rows.iter().enumerate() {
                for (b, &j) in cols.iter().enumerate() {
                    out[[a, b]] = self.cov[[i, j]];
                }
            }
            out
        };
        let v_k = pick(&ik, &ik);
        let v_kb = pick(&ik, &ib);
        let mut v_b = pick(&ib, &ib);
        for i in 0..v_b.nrows() {
            v_b[[i, i]] += 0.5;
        }
        // (V_B + I/2) is positive definite for any physical state
        let v_b_inv = v_b.inv().map_err(|e| Error::Linalg(e.to_string()))?;

        let m_b = Array1::from_iter(ib.iter().map(|&i| self.mean[i]));
        let m_k = Array1::from_iter(ik.iter().map(|&i| self.mean[i]));
        let mut m_beta = Array1::zeros(ib.len());
        for (j, beta) in betas.iter().enumerate() {
            m_beta[2 * j] = std::f64::consts::SQRT_2 * beta.re;
            m_beta[2 * j + 1] = std::f64::consts::SQRT_2 * beta.im;
        }
        let d = &m_beta - &m_b;
        let gain = v_kb.dot(&v_b_inv);
        let mean = &m_k + &gain.dot(&d);
        let cov = &v_k - &gain.dot(&v_kb.t());

        let quad = d.dot(&v_b_inv.dot(&d));
        let det = det_symmetric(&v_b)?;
        let m = ib.len();
        let norm = (2.0 * std::f64::consts::PI).powf(m as f64 / 2.0) * det.sqrt();
        let weight = (-0.5 * quad).exp() / norm;
        Ok((GaussianState::new(mean, cov)?, weight))
    }

    /// Symplectic eigenvalues of the covariance matrix, ascending.
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        symplectic_eigenvalues(&self.cov)
    }

    /// Von Neumann entropy in bits: sum over g(nu_k - 1/2).
    pub fn entropy_bits(&self) -> Result<f64> {
        let mut s = 0.0;
        for nu in self.symplectic_eigenvalues()? {
            s += g((nu - 0.5).max(0.0))?;
        }
        Ok(s)
    }

    /// Mean photon number of one mode: (V_qq + V_pp - 1)/2 + |mean|^2/2.
    pub fn mean_photons(&self, mode: usize) -> Result<f64> {
        if mode >= self.nmodes {
            return Err(Error::ModeIndex {
                index: mode,
                nmodes: self.nmodes,
            });
        }
        let q = 2 * mode;
        let p = q + 1;
        Ok(0.5 * (self.cov[[q, q]] + self.cov[[p, p]] - 1.0)
            + 0.5 * (self.mean[q] * self.mean[q] + self.mean[p] * self.mean[p]))
    }
}

fn det_symmetric(m: &Array2<f64>) -> Result<f64> {
    use ndarray_linalg::Determinant;
    m.det().map_err(|e| Error::Linalg(e.to_string()))
}

/// Symplectic eigenvalues of a symmetric covariance matrix: the moduli of
/// the eigenvalues of i*Omega*V, deduplicated into n values, ascending.
pub fn symplectic_eigenvalues(cov: &Array2<f64>) -> Result<Vec<f64>> {
    let dim = cov.nrows();
    if dim == 0 || dim % 2 != 0 || cov.ncols() != dim {
        return Err(Error::DimensionMismatch {
            left: dim,
            right: cov.ncols(),
        });
    }
    let mut max_asym = 0f64;
    for i in 0..dim {
        for j in (i + 1)..dim {
            max_asym = max_asym.max((cov[[i, j]] - cov[[j, i]]).abs());
        }
    }
    if max_asym > SYM_TOL {
        return Err(Error::NonSymmetric { max_asym });
    }
    // Omega = blockdiag([[0,1],[-1,0]]); rows of Omega*V
    let mut om_v = Array2::zeros((dim, dim));
    for m in 0..dim / 2 {
        for j in 0..dim {
            om_v[[2 * m, j]] = cov[[2 * m + 1, j]];
            om_v[[2 * m + 1, j]] = -cov[[2 * m, j]];
        }
    }
    let (eigs, _) = om_v.eig().map_err(|e| Error::Linalg(e.to_string()))?;
    let mut moduli: Vec<f64> = eigs.iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // eigenvalues come in +/- i*nu pairs with equal modulus
    let mut out = Vec::with_capacity(dim / 2);
    for pair in moduli.chunks(2) {
        out.push(0.5 * (pair[0] + pair[1]));
    }
    Ok(out)
}

/// Three-mode state (A, B, E) after the TMSV signal mode passes a
/// pure-loss channel of transmissivity `eta`: covariance V_ABE with
/// C = 2N+1, S = 2 sqrt(N(N+1)).
pub fn build_abe(eta: f64, n: f64) -> Result<GaussianState> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(param_err("eta", format!("transmissivity {eta} not in [0,1]")));
    }
    if !(n >= 0.0) {
        return Err(param_err("N", format!("mean photon number {n} must be >= 0")));
    }
    let c = 2.0 * n + 1.0;
    let s = 2.0 * (n * (n + 1.0)).sqrt();
    let t = eta.sqrt();
    let r = (1.0 - eta).sqrt();
    let bb = c * eta + (1.0 - eta);
    let ee = c * (1.0 - eta) + eta;
    let be = (c - 1.0) * (eta * (1.0 - eta)).sqrt();
    #[rustfmt::skip]
    let rows: [[f64; 6]; 6] = [
        [c,       0.0,    s * t,  0.0,     s * r,  0.0   ],
        [0.0,     c,      0.0,    -s * t,  0.0,    -s * r],
        [s * t,   0.0,    bb,     0.0,     be,     0.0   ],
        [0.0,     -s * t, 0.0,    bb,      0.0,    be    ],
        [s * r,   0.0,    be,     0.0,     ee,     0.0   ],
        [0.0,     -s * r, 0.0,    be,      0.0,    ee    ],
    ];
    let mut cov = Array2::zeros((6, 6));
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            cov[[i, j]] = 0.5 * v;
        }
    }
    GaussianState::new(Array1::zeros(6), cov)
}

/// Four-mode state (A, B, E, E') for the active Gaussian attack in which
/// the eavesdropper injects one arm of a TMSV with `n_t` photons per mode.
/// C = 2N+1, S = 2 sqrt(N(N+1)), C_T = 2 N_T + 1, S_T = 2 sqrt(N_T(N_T+1)).
pub fn build_active(eta: f64, n: f64, n_t: f64) -> Result<GaussianState> {
    let p = ChannelParams::new(eta, n, n_t)?;
    let (eta, n, n_t) = (p.eta, p.n, p.n_t);
    let c = 2.0 * n + 1.0;
    let s = 2.0 * (n * (n + 1.0)).sqrt();
    let ct = 2.0 * n_t + 1.0;
    let st = 2.0 * (n_t * (n_t + 1.0)).sqrt();
    let t = eta.sqrt();
    let r = (1.0 - eta).sqrt();
    let bb = ct * (1.0 - eta) + c * eta;
    let ee = c * (1.0 - eta) + ct * eta;
    let be = (c - ct) * (eta * (1.0 - eta)).sqrt();
    // Eve's injected arm carries correlation -S_T Z with her retained mode,
    // so B-E' = -S_T sqrt(1-eta) Z and E-E' = +S_T sqrt(eta) Z.
    #[rustfmt::skip]
    let rows: [[f64; 8]; 8] = [
        [c,       0.0,     s * t,    0.0,      s * r,   0.0,      0.0,      0.0    ],
        [0.0,     c,       0.0,      -s * t,   0.0,     -s * r,   0.0,      0.0    ],
        [s * t,   0.0,     bb,       0.0,      be,      0.0,      -st * r,  0.0    ],
        [0.0,     -s * t,  0.0,      bb,       0.0,     be,       0.0,      st * r ],
        [s * r,   0.0,     be,       0.0,      ee,      0.0,      st * t,   0.0    ],
        [0.0,     -s * r,  0.0,      be,       0.0,     ee,       0.0,      -st * t],
        [0.0,     0.0,     -st * r,  0.0,      st * t,  0.0,      ct,       0.0    ],
        [0.0,     0.0,     0.0,      st * r,   0.0,     -st * t,  0.0,      ct     ],
    ];
    let mut cov = Array2::zeros((8, 8));
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            cov[[i, j]] = 0.5 * v;
        }
    }
    GaussianState::new(Array1::zeros(8), cov)
}
