//! Dense truncated photon-number-basis states and operators.
//!
//! `cutoff` is the per-mode dimension: levels 0..cutoff-1. Multi-mode
//! amplitudes are stored row-major, index = i1 * cutoff + i2 for two modes.
//! Constructors renormalize after truncation and record the discarded
//! probability in `tail_mass`.

pub mod oracle;

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

use crate::error::{param_err, Error, Result};

const HERM_TOL: f64 = 1e-12;

/// Hermitian eigendecomposition of a row-major complex matrix. The LAPACK
/// binding reads buffers column-major, i.e. it decomposes the transpose;
/// feeding it the conjugate makes the returned vectors belong to the input.
/// (Eigenvalues are unaffected either way for Hermitian input.)
pub(crate) fn eigh_rowmajor(mat: &Array2<Complex64>) -> Result<(Array1<f64>, Array2<Complex64>)> {
    let conj = mat.mapv(|z| z.conj());
    let (vals, vecs) = conj.eigh(UPLO::Lower).map_err(|e| Error::Linalg(e.to_string()))?;
    Ok((vals, vecs))
}

/// Default truncation-tail bound for coherent-state construction.
pub const COHERENT_TAIL_BOUND: f64 = 1e-10;
/// Default truncation-tail bound for density operators.
pub const DENSITY_TAIL_BOUND: f64 = 1e-8;

/// A pure state vector in truncated Fock space.
#[derive(Debug, Clone)]
pub struct FockVector {
    cutoff: usize,
    modes: usize,
    amps: Array1<Complex64>,
    tail_mass: f64,
}

impl FockVector {
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn amps(&self) -> &Array1<Complex64> {
        &self.amps
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    /// Single-mode number state |l>.
    pub fn number_state(l: usize, cutoff: usize) -> Result<Self> {
        if l >= cutoff {
            return Err(param_err("l", format!("level {l} outside cutoff {cutoff}")));
        }
        let mut amps = Array1::zeros(cutoff);
        amps[l] = Complex64::new(1.0, 0.0);
        Ok(FockVector {
            cutoff,
            modes: 1,
            amps,
            tail_mass: 0.0,
        })
    }

    /// Coherent state |alpha>, renormalized after truncation; errors when the
    /// discarded tail exceeds `COHERENT_TAIL_BOUND`.
    pub fn coherent(alpha: Complex64, cutoff: usize) -> Result<Self> {
        let v = Self::coherent_renormalized(alpha, cutoff);
        if v.tail_mass > COHERENT_TAIL_BOUND {
            return Err(Error::CutoffTooSmall {
                cutoff,
                tail: v.tail_mass,
                bound: COHERENT_TAIL_BOUND,
            });
        }
        Ok(v)
    }

    /// Coherent state with the tail recorded but not bounded; used by the
    /// Monte Carlo builders where the codebook occasionally draws large
    /// amplitudes at a fixed operator dimension.
    pub fn coherent_renormalized(alpha: Complex64, cutoff: usize) -> Self {
        let mut amps = Array1::zeros(cutoff);
        // c_0 = e^{-|a|^2/2}, c_{l+1} = c_l * alpha / sqrt(l+1)
        let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
        let mut norm_sq = 0.0;
        for l in 0..cutoff {
            amps[l] = c;
            norm_sq += c.norm_sqr();
            c *= alpha / ((l + 1) as f64).sqrt();
        }
        let tail_mass = (1.0 - norm_sq).max(0.0);
        let scale = 1.0 / norm_sq.sqrt();
        amps.mapv_inplace(|z| z * scale);
        FockVector {
            cutoff,
            modes: 1,
            amps,
            tail_mass,
        }
    }

    /// Symmetric two-mode eigenvector |psi+_l> of the averaged two-copy
    /// codeword state: 2^{-l/2} sum_i sqrt(C(l,i)) |i>|l-i>.
    pub fn psi_plus(l: usize, cutoff: usize) -> Result<Self> {
        if l >= cutoff {
            return Err(param_err("l", format!("photon number {l} outside cutoff {cutoff}")));
        }
        let mut amps = Array1::zeros(cutoff * cutoff);
        let mut binom = 1.0f64;
        for i in 0..=l {
            amps[i * cutoff + (l - i)] = Complex64::new(binom.sqrt() * 2f64.powi(-(l as i32)).sqrt(), 0.0);
            binom = binom * ((l - i) as f64) / ((i + 1) as f64);
        }
        Ok(FockVector {
            cutoff,
            modes: 2,
            amps,
            tail_mass: 0.0,
        })
    }

    /// Two-mode eigenvector of the reverse-protocol two-copy state, as
    /// printed with prefactor 2^{-(t+m)/2}. The printed family is orthogonal
    /// but has squared norm t! m!; the returned vector is renormalized and
    /// the printed squared norm reported alongside.
    pub fn psi_tm(t: usize, m: usize, cutoff: usize) -> Result<(Self, f64)> {
        if t + m >= cutoff {
            return Err(param_err(
                "t+m",
                format!("photon number {} outside cutoff {cutoff}", t + m),
            ));
        }
        let mut amps: Array1<Complex64> = Array1::zeros(cutoff * cutoff);
        let pref = 2f64.powf(-((t + m) as f64) / 2.0);
        let mut binom_t = 1.0f64;
        for j in 0..=t {
            let mut binom_m = 1.0f64;
            for k in 0..=m {
                let a = t + m - j - k;
                let b = j + k;
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let val = pref * binom_t * binom_m * sign * (factorial(a) * factorial(b)).sqrt();
                amps[a * cutoff + b] += Complex64::new(val, 0.0);
                binom_m = binom_m * ((m - k) as f64) / ((k + 1) as f64);
            }
            binom_t = binom_t * ((t - j) as f64) / ((j + 1) as f64);
        }
        let printed_norm_sq: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        let scale = 1.0 / printed_norm_sq.sqrt();
        amps.mapv_inplace(|z| z * scale);
        Ok((
            FockVector {
                cutoff,
                modes: 2,
                amps,
                tail_mass: 0.0,
            },
            printed_norm_sq,
        ))
    }

    /// Tensor product with another vector over the same cutoff.
    pub fn kron(&self, other: &FockVector) -> Result<FockVector> {
        if self.cutoff != other.cutoff {
            return Err(Error::DimensionMismatch {
                left: self.cutoff,
                right: other.cutoff,
            });
        }
        let d1 = self.dim();
        let d2 = other.dim();
        let mut amps = Array1::zeros(d1 * d2);
        for i in 0..d1 {
            for j in 0..d2 {
                amps[i * d2 + j] = self.amps[i] * other.amps[j];
            }
        }
        Ok(FockVector {
            cutoff: self.cutoff,
            modes: self.modes + other.modes,
            amps,
            tail_mass: 1.0 - (1.0 - self.tail_mass) * (1.0 - other.tail_mass),
        })
    }

    /// Rank-one projector |v><v|.
    pub fn outer(&self) -> FockOperator {
        let d = self.dim();
        let mut mat = Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                mat[[i, j]] = self.amps[i] * self.amps[j].conj();
            }
        }
        FockOperator {
            cutoff: self.cutoff,
            modes: self.modes,
            mat,
            hermitian: true,
            tail_mass: self.tail_mass,
        }
    }

    /// Mean photon number summed over modes.
    pub fn mean_photons(&self) -> f64 {
        let c = self.cutoff;
        self.amps
            .iter()
            .enumerate()
            .map(|(idx, z)| {
                let mut total = 0usize;
                let mut rem = idx;
                for _ in 0..self.modes {
                    total += rem % c;
                    rem /= c;
                }
                total as f64 * z.norm_sqr()
            })
            .sum()
    }

    pub fn inner(&self, other: &FockVector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// A dense operator in truncated Fock space.
#[derive(Debug, Clone)]
pub struct FockOperator {
    cutoff: usize,
    modes: usize,
    mat: Array2<Complex64>,
    hermitian: bool,
    tail_mass: f64,
}

impl FockOperator {
    /// Wrap a matrix, verifying hermiticity to 1e-12 when flagged.
    pub fn new(
        mat: Array2<Complex64>,
        cutoff: usize,
        modes: usize,
        hermitian: bool,
        tail_mass: f64,
    ) -> Result<Self> {
        let d = cutoff.pow(modes as u32);
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::DimensionMismatch {
                left: mat.nrows(),
                right: d,
            });
        }
        if hermitian {
            let mut max_asym = 0f64;
            for i in 0..d {
                for j in i..d {
                    max_asym = max_asym.max((mat[[i, j]] - mat[[j, i]].conj()).norm());
                }
            }
            if max_asym > HERM_TOL {
                return Err(Error::Invalid(format!(
                    "operator flagged hermitian but max |A - A^dag| = {max_asym:.3e}"
                )));
            }
        }
        Ok(FockOperator {
            cutoff,
            modes,
            mat,
            hermitian,
            tail_mass,
        })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.mat
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn is_hermitian_flagged(&self) -> bool {
        self.hermitian
    }

    /// Single-mode thermal state, renormalized over the cutoff; errors when
    /// the geometric tail exceeds `DENSITY_TAIL_BOUND`.
    pub fn thermal(nbar: f64, cutoff: usize) -> Result<Self> {
        let op = Self::thermal_renormalized(nbar, cutoff)?;
        if op.tail_mass > DENSITY_TAIL_BOUND {
            return Err(Error::CutoffTooSmall {
                cutoff,
                tail: op.tail_mass,
                bound: DENSITY_TAIL_BOUND,
            });
        }
        Ok(op)
    }

    /// Thermal state with the tail recorded but not bounded.
    pub fn thermal_renormalized(nbar: f64, cutoff: usize) -> Result<Self> {
        if !(nbar >= 0.0) {
            return Err(param_err("Nbar", format!("mean photon number {nbar} must be >= 0")));
        }
        let mut mat = Array2::zeros((cutoff, cutoff));
        let ratio = nbar / (nbar + 1.0);
        let mut w = 1.0 / (nbar + 1.0);
        let mut total = 0.0;
        for l in 0..cutoff {
            mat[[l, l]] = Complex64::new(w, 0.0);
            total += w;
            w *= ratio;
        }
        let tail = (1.0 - total).max(0.0);
        mat.mapv_inplace(|z| z / total);
        FockOperator::new(mat, cutoff, 1, true, tail)
    }

    /// Tensor product.
    pub fn kron(&self, other: &FockOperator) -> Result<FockOperator> {
        if self.cutoff != other.cutoff {
            return Err(Error::DimensionMismatch {
                left: self.cutoff,
                right: other.cutoff,
            });
        }
        let mat = ndarray::linalg::kron(&self.mat, &other.mat);
        FockOperator::new(
            mat,
            self.cutoff,
            self.modes + other.modes,
            self.hermitian && other.hermitian,
            1.0 - (1.0 - self.tail_mass) * (1.0 - other.tail_mass),
        )
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.mat[[i, i]]).sum()
    }

    /// Eigenvalues, ascending (Hermitian part must hold).
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let (vals, _) = self.mat.eigh(UPLO::Lower).map_err(|e| Error::Linalg(e.to_string()))?;
        Ok(vals.to_vec())
    }

    /// Eigendecomposition (values ascending, columns are eigenvectors).
    pub fn eigh(&self) -> Result<(Array1<f64>, Array2<Complex64>)> {
        eigh_rowmajor(&self.mat)
    }

    /// Validity checks for a density operator: PSD within -1e-10 and trace
    /// inside [1 - tail, 1 + tol].
    pub fn check_density(&self) -> Result<()> {
        let tr = self.trace();
        if tr.im.abs() > 1e-10 || tr.re < 1.0 - self.tail_mass - 1e-9 || tr.re > 1.0 + 1e-9 {
            return Err(Error::Invalid(format!("density trace {tr} out of range")));
        }
        let eigs = self.eigenvalues()?;
        if let Some(&min) = eigs.first() {
            if min < -1e-10 {
                return Err(Error::Invalid(format!("density operator has eigenvalue {min:.3e}")));
            }
        }
        Ok(())
    }

    /// Expectation value <phi| A |phi>.
    pub fn expectation(&self, phi: &FockVector) -> Result<Complex64> {
        if phi.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                left: phi.dim(),
                right: self.dim(),
            });
        }
        let av = self.mat.dot(&phi.amps);
        Ok(phi.amps.iter().zip(av.iter()).map(|(p, q)| p.conj() * q).sum())
    }
}

/// Annihilation operator on one mode.
pub fn annihilation(cutoff: usize) -> Array2<Complex64> {
    let mut a = Array2::zeros((cutoff, cutoff));
    for n in 1..cutoff {
        a[[n - 1, n]] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Two-mode beamsplitter unitary exp[theta (a^dag b - a b^dag)] in the
/// truncated space; exact on every total-photon sector that fits below the
/// cutoff since the generator preserves photon number.
pub fn beamsplitter_unitary(cutoff: usize, theta: f64) -> Result<Array2<Complex64>> {
    let d = cutoff * cutoff;
    let mut h: Array2<Complex64> = Array2::zeros((d, d));
    // H = i (a^dag b - a b^dag) is hermitian; U = exp(-i theta H)
    for i in 0..cutoff {
        for j in 0..cutoff {
            if i + 1 < cutoff && j >= 1 {
                let amp = (((i + 1) * j) as f64).sqrt();
                h[[(i + 1) * cutoff + (j - 1), i * cutoff + j]] += Complex64::new(0.0, 1.0) * amp;
            }
            if i >= 1 && j + 1 < cutoff {
                let amp = ((i * (j + 1)) as f64).sqrt();
                h[[(i - 1) * cutoff + (j + 1), i * cutoff + j]] -= Complex64::new(0.0, 1.0) * amp;
            }
        }
    }
    let (vals, vecs) = h.eigh(UPLO::Lower).map_err(|e| Error::Linalg(e.to_string()))?;
    let phases: Array1<Complex64> = vals
        .iter()
        .map(|&l| Complex64::from_polar(1.0, -theta * l))
        .collect();
    let mut scaled = vecs.clone();
    for (mut col, ph) in scaled.columns_mut().into_iter().zip(phases.iter()) {
        col.mapv_inplace(|z| z * ph);
    }
    let vdag = vecs.mapv(|z| z.conj()).reversed_axes();
    Ok(scaled.dot(&vdag))
}

/// Conjugate rho by a unitary: U rho U^dag.
pub fn conjugate(u: &Array2<Complex64>, rho: &FockOperator) -> Result<FockOperator> {
    if u.nrows() != rho.dim() {
        return Err(Error::DimensionMismatch {
            left: u.nrows(),
            right: rho.dim(),
        });
    }
    let udag = u.mapv(|z| z.conj()).reversed_axes();
    let mat = u.dot(&rho.mat).dot(&udag);
    FockOperator::new(mat, rho.cutoff, rho.modes, false, rho.tail_mass).map(|mut op| {
        // conjugation preserves hermiticity exactly up to rounding; flag it
        // without re-verifying at the strict constructor tolerance
        op.hermitian = rho.hermitian;
        op
    })
}

/// Trace distance (1/2)||A - B||_1 via the eigenvalues of the Hermitian
/// difference.
pub fn trace_distance(a: &FockOperator, b: &FockOperator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let diff = &a.mat - &b.mat;
    let (vals, _) = diff.eigh(UPLO::Lower).map_err(|e| Error::Linalg(e.to_string()))?;
    Ok(0.5 * vals.iter().map(|v| v.abs()).sum::<f64>())
}

/// Operator norm of the commutator AB - BA (largest singular value).
pub fn commutator_norm(a: &FockOperator, b: &FockOperator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let c = a.mat.dot(&b.mat) - b.mat.dot(&a.mat);
    let cdag = c.mapv(|z| z.conj()).reversed_axes();
    let gram = cdag.dot(&c);
    let (vals, _) = gram.eigh(UPLO::Lower).map_err(|e| Error::Linalg(e.to_string()))?;
    Ok(vals.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

/// Von Neumann entropy in bits: -sum lambda log2 lambda over lambda > 1e-15.
pub fn entropy_fock(op: &FockOperator) -> Result<f64> {
    let eigs = op.eigenvalues()?;
    Ok(eigs
        .iter()
        .filter(|&&l| l > 1e-15)
        .map(|&l| -l * l.log2())
        .sum())
}

/// First and second quadrature moments of a single-mode operator.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct QuadratureMoments {
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

/// Quadrature moments of a single-mode density operator, in the
/// q = (a + a^dag)/sqrt(2) convention.
pub fn quadrature_moments(rho: &FockOperator) -> Result<QuadratureMoments> {
    if rho.modes != 1 {
        return Err(param_err("rho", "quadrature moments need a single-mode operator"));
    }
    let c = rho.cutoff;
    let a = annihilation(c);
    let a_mean = {
        let prod = rho.mat.dot(&a);
        (0..c).map(|i| prod[[i, i]]).sum::<Complex64>()
    };
    let a2_mean = {
        let prod = rho.mat.dot(&a).dot(&a);
        (0..c).map(|i| prod[[i, i]]).sum::<Complex64>()
    };
    let n_mean: f64 = (0..c).map(|l| l as f64 * rho.mat[[l, l]].re).sum();
    let q = std::f64::consts::SQRT_2 * a_mean.re;
    let p = std::f64::consts::SQRT_2 * a_mean.im;
    let vqq = a2_mean.re + n_mean + 0.5 - q * q;
    let vpp = -a2_mean.re + n_mean + 0.5 - p * p;
    let vqp = a2_mean.im - q * p;
    Ok(QuadratureMoments {
        mean: [q, p],
        cov: [[vqq, vqp], [vqp, vpp]],
    })
}
