//! Closed-form locked-key rates and capacity-style bounds for the lossy and
//! thermal bosonic channel, finite-energy and asymptotic.
//!
//! Everything here is in bits per bosonic mode; `log` means log base 2.

use crate::error::{param_err, Result};

/// Entropy of a thermal bosonic state with `n` mean photons, in bits:
/// g(N) = (N+1) log2(N+1) - N log2 N, with g(0) = 0.
pub fn g(n: f64) -> Result<f64> {
    if !(n >= 0.0) {
        return Err(param_err("N", format!("mean photon number {n} must be >= 0")));
    }
    if n == 0.0 {
        return Ok(0.0);
    }
    // below 1e-12 the direct expression loses to 0*log(0) noise; use the
    // leading series g(N) ~ N*log2(e/N)
    if n < 1e-12 {
        return Ok(n * (std::f64::consts::LOG2_E - n.log2()));
    }
    Ok((n + 1.0) * (n + 1.0).log2() - n * n.log2())
}

/// Which branch of the key-consumption max is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum KBranch {
    /// 2 S(rho_E) - S(rho_2E)
    TwoSeMinusS2e,
    /// S(rho_E) - chi
    SeMinusChi,
}

/// Key consumption rate from entropies: k = max{2 S_E - S_2E, S_E - chi}.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct KFromEntropies {
    pub k: f64,
    pub branch: KBranch,
}

pub fn locking_k_from_entropies(s_e: f64, s_2e: f64, chi: f64) -> KFromEntropies {
    let b1 = 2.0 * s_e - s_2e;
    let b2 = s_e - chi;
    if b1 >= b2 {
        KFromEntropies {
            k: b1,
            branch: KBranch::TwoSeMinusS2e,
        }
    } else {
        KFromEntropies {
            k: b2,
            branch: KBranch::SeMinusChi,
        }
    }
}

/// Derived photon numbers appearing in the reverse and active-attack rates.
#[derive(Debug, Clone, Copy, Default, serde::Serialize)]
pub struct RateAux {
    pub n_prime: Option<f64>,
    pub n_double_prime: Option<f64>,
    pub n_tilde: Option<f64>,
    pub n_hat: Option<f64>,
}

/// Reconciliation rate chi, key consumption k and net locked-key rate
/// r = chi - k, all in bits per mode.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct RateBreakdown {
    pub chi: f64,
    pub k: f64,
    pub r: f64,
    pub aux: RateAux,
}

impl RateBreakdown {
    fn new(chi: f64, k: f64, aux: RateAux) -> Self {
        RateBreakdown {
            chi,
            k,
            r: chi - k,
            aux,
        }
    }
}

fn check_eta_open(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(param_err("eta", format!("transmissivity {eta} must lie in (0,1)")));
    }
    Ok(())
}

fn check_n_positive(n: f64) -> Result<()> {
    if !(n > 0.0) {
        return Err(param_err("N", format!("mean photon number {n} must be > 0")));
    }
    Ok(())
}

/// Direct-reconciliation rates: chi = g(eta N),
/// k = 2 g((1-eta)N) - g(2(1-eta)N).
pub fn dr_rates(eta: f64, n: f64) -> Result<RateBreakdown> {
    check_eta_open(eta)?;
    check_n_positive(n)?;
    let chi = g(eta * n)?;
    let k = 2.0 * g((1.0 - eta) * n)? - g(2.0 * (1.0 - eta) * n)?;
    Ok(RateBreakdown::new(chi, k, RateAux::default()))
}

/// Reverse-reconciliation rates with N' = N/(1+eta N) and
/// N'' = N(1+2 eta N)/(1+eta N).
pub fn rr_rates(eta: f64, n: f64) -> Result<RateBreakdown> {
    check_eta_open(eta)?;
    check_n_positive(n)?;
    let n_prime = n / (1.0 + eta * n);
    let n_dprime = n * (1.0 + 2.0 * eta * n) / (1.0 + eta * n);
    let chi = g(n)? - g((1.0 - eta) * n_prime)?;
    let k = 2.0 * g((1.0 - eta) * n)? - g((1.0 - eta) * n_prime)? - g((1.0 - eta) * n_dprime)?;
    Ok(RateBreakdown::new(
        chi,
        k,
        RateAux {
            n_prime: Some(n_prime),
            n_double_prime: Some(n_dprime),
            ..RateAux::default()
        },
    ))
}

/// Asymptotic (N -> infinity) locked-key rates.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct AsymptoticRates {
    /// 1 + log2(eta/(1-eta))
    pub r_dr: f64,
    /// 1 + log2(1/(1-eta))
    pub r_rr: f64,
    /// 1 + log2(1/(1-eta)) - g(N_T)
    pub r_rr_thermal: f64,
}

pub fn asymptotic_rates(eta: f64, n_t: f64) -> Result<AsymptoticRates> {
    check_eta_open(eta)?;
    if !(n_t >= 0.0) {
        return Err(param_err("N_T", format!("thermal photon number {n_t} must be >= 0")));
    }
    let rci = (1.0 / (1.0 - eta)).log2();
    Ok(AsymptoticRates {
        r_dr: 1.0 + (eta / (1.0 - eta)).log2(),
        r_rr: 1.0 + rci,
        r_rr_thermal: 1.0 + rci - g(n_t)?,
    })
}

/// Reference curves: squashed-entanglement bound, direct-reconciliation
/// capacity and reverse coherence information.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct BoundSet {
    /// log2((1+eta)/(1-eta))
    pub tgw: f64,
    /// max{0, log2(eta/(1-eta))}
    pub dr_capacity: f64,
    /// log2(1/(1-eta))
    pub rci: f64,
}

pub fn bounds(eta: f64) -> Result<BoundSet> {
    check_eta_open(eta)?;
    Ok(BoundSet {
        tgw: ((1.0 + eta) / (1.0 - eta)).log2(),
        dr_capacity: (eta / (1.0 - eta)).log2().max(0.0),
        rci: (1.0 / (1.0 - eta)).log2(),
    })
}

/// Reverse-reconciliation rates against an active Gaussian attack injecting
/// N_T thermal photons, valid in the N >> 1, N_T regime.
///
/// Ntilde = N(1+N_T)/(1+N_T+(N-N_T)eta); the eta term enters with a plus
/// sign so that Ntilde reduces to N' at N_T = 0 and stays finite for all
/// eta in (0,1) (it equals the mean photon number of the sender's state
/// conditioned on a heterodyne outcome at the receiver, which the Gaussian
/// algebra reproduces entrywise).
pub fn active_rates(eta: f64, n: f64, n_t: f64) -> Result<RateBreakdown> {
    check_eta_open(eta)?;
    check_n_positive(n)?;
    if !(n_t >= 0.0) {
        return Err(param_err("N_T", format!("thermal photon number {n_t} must be >= 0")));
    }
    let denom = 1.0 + n_t + (n - n_t) * eta;
    if denom <= 0.0 {
        return Err(param_err("N_T", format!("Ntilde pole: 1+N_T+(N-N_T)eta = {denom} <= 0")));
    }
    let n_tilde = n * (1.0 + n_t) / denom;
    let n_hat = 2.0 * (1.0 - eta) * n + ((1.0 - eta) + n_t * (2.0 * eta * eta - 1.0)) / eta;
    let chi = g(n)? - g((1.0 - eta) * n_tilde)?;
    let k = g(n_t)? + 2.0 * g((1.0 - eta) * n + eta * n_t)?
        - g((1.0 - eta) * n_tilde)?
        - g(n_hat)?;
    Ok(RateBreakdown::new(
        chi,
        k,
        RateAux {
            n_tilde: Some(n_tilde),
            n_hat: Some(n_hat),
            ..RateAux::default()
        },
    ))
}

/// Largest tolerable thermal noise: the root N_T* of
/// 1 + log2(1/(1-eta)) - g(N_T) = 0, found by bisection to 1e-10.
pub fn noise_threshold(eta: f64) -> Result<f64> {
    check_eta_open(eta)?;
    let target = 1.0 + (1.0 / (1.0 - eta)).log2();
    // g(N) <= log2(N+1) + log2 e, so g(2^target) >= target: valid bracket
    let hi = 2f64.powf(target);
    bisect(0.0, hi, |n| g(n).unwrap_or(f64::NAN) - target, 1e-10, 200)
}

/// Bisection on [lo, hi]; f(lo) and f(hi) must have opposite signs.
fn bisect<F: Fn(f64) -> f64>(mut lo: f64, mut hi: f64, f: F, tol: f64, max_iter: usize) -> Result<f64> {
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(crate::error::Error::Invalid(format!(
            "bisection bracket [{lo}, {hi}] does not straddle a root"
        )));
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        if (hi - lo).abs() < tol {
            return Ok(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn g_at_zero_and_one() {
        assert_eq!(g(0.0).unwrap(), 0.0);
        assert!((g(1.0).unwrap() - 2.0).abs() < TOL);
    }

    #[test]
    fn g_at_three_matches_direct_evaluation() {
        // independent oracle: plain arithmetic on the definition
        let expected = 4.0 * 4f64.log2() - 3.0 * 3f64.log2();
        assert!((g(3.0).unwrap() - expected).abs() < TOL);
    }

    #[test]
    fn g_rejects_negative() {
        assert!(g(-0.1).is_err());
    }

    #[test]
    fn g_is_continuous_and_increasing_near_zero() {
        assert!(g(1e-13).unwrap() > 0.0);
        assert!(g(1e-13).unwrap() < 1e-11);
        let mut prev = 0.0;
        for k in 1..200 {
            let v = g(k as f64 * 0.05).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn dr_asymptotics() {
        // r_dr(N -> inf) -> 1 + log2(eta/(1-eta)); at eta = 1/2 the limit is 1
        let r = dr_rates(0.5, 1e8).unwrap().r;
        assert!((r - 1.0).abs() < 1e-6, "r = {r}");
        // threshold claim: asymptotic rate crosses zero at eta = 1/3
        let a = asymptotic_rates(1.0 / 3.0, 0.0).unwrap();
        assert!(a.r_dr.abs() < TOL);
    }

    #[test]
    fn dr_finite_n_near_asymptote() {
        // (0.6, 100): within 0.05 of 1 + log2(0.6/0.4)
        let r = dr_rates(0.6, 100.0).unwrap().r;
        let asym = 1.0 + (0.6f64 / 0.4).log2();
        assert!((r - asym).abs() < 0.05, "r = {r}, asym = {asym}");
    }

    #[test]
    fn rr_asymptotics() {
        let r = rr_rates(0.5, 1e8).unwrap().r;
        assert!((r - 2.0).abs() < 1e-6);
        // eta -> 0 with N large: r -> 1
        let r = rr_rates(1e-4, 1e7).unwrap().r;
        assert!((r - 1.0).abs() < 0.01, "r = {r}");
    }

    #[test]
    fn rr_gap_to_asymptote_shrinks_in_n() {
        let asym = asymptotic_rates(0.1, 0.0).unwrap().r_rr;
        let gaps: Vec<f64> = [10.0, 50.0, 200.0]
            .iter()
            .map(|&n| (rr_rates(0.1, n).unwrap().r - asym).abs())
            .collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "gaps = {gaps:?}");
    }

    #[test]
    fn rates_converge_monotonically_to_asymptote() {
        for &eta in &[0.4, 0.5, 0.7] {
            let a = asymptotic_rates(eta, 0.0).unwrap();
            let mut prev_dr = f64::INFINITY;
            let mut prev_rr = f64::INFINITY;
            for &n in &[10.0, 100.0, 1e3, 1e4] {
                let gap_dr = (dr_rates(eta, n).unwrap().r - a.r_dr).abs();
                let gap_rr = (rr_rates(eta, n).unwrap().r - a.r_rr).abs();
                assert!(gap_dr <= prev_dr + 1e-9);
                assert!(gap_rr <= prev_rr + 1e-9);
                prev_dr = gap_dr;
                prev_rr = gap_rr;
            }
        }
    }

    #[test]
    fn asymptotic_exact_points() {
        let a = asymptotic_rates(0.5, 0.0).unwrap();
        assert!((a.r_dr - 1.0).abs() < TOL);
        assert!((a.r_rr - 2.0).abs() < TOL);
        assert!((a.r_rr_thermal - 2.0).abs() < TOL);
        let a = asymptotic_rates(0.9, 1.0).unwrap();
        assert!((a.r_rr_thermal - (1.0 + 10f64.log2() - 2.0)).abs() < TOL);
    }

    #[test]
    fn bound_set_values() {
        let b = bounds(1.0 / 3.0).unwrap();
        assert!((b.tgw - 1.0).abs() < TOL);
        let b = bounds(0.5).unwrap();
        assert!(b.dr_capacity.abs() < TOL);
        assert!((b.tgw - 3f64.log2()).abs() < TOL);
        assert!((b.rci - 1.0).abs() < TOL);
    }

    #[test]
    fn tgw_small_eta_scaling() {
        // series: log2((1+eta)/(1-eta)) ~ 2 eta log2(e)
        let eta = 1e-3;
        let b = bounds(eta).unwrap();
        let series = 2.0 * eta * std::f64::consts::LOG2_E;
        assert!((b.tgw - series).abs() / series < 1e-5);
    }

    #[test]
    fn bounds_monotone_in_eta() {
        let mut prev = bounds(0.01).unwrap();
        for k in 2..99 {
            let b = bounds(k as f64 * 0.01).unwrap();
            assert!(b.tgw >= prev.tgw);
            assert!(b.dr_capacity >= prev.dr_capacity);
            assert!(b.rci >= prev.rci);
            prev = b;
        }
    }

    #[test]
    fn active_reduces_to_rr_chi_exactly_and_r_asymptotically() {
        // chi is an algebraic identity at N_T = 0 (Ntilde == N')
        for &n in &[1.0, 10.0, 1e4] {
            let act = active_rates(0.5, n, 0.0).unwrap();
            let rr = rr_rates(0.5, n).unwrap();
            assert!((act.chi - rr.chi).abs() < TOL, "n = {n}");
        }
        // r agrees only in the large-N regime; the gap is Theta(1/N)
        // (measured: 0.25 at N=10, 2.8e-2 at N=100, 2.9e-4 at N=1e4)
        let gap = |n: f64| (active_rates(0.5, n, 0.0).unwrap().r - rr_rates(0.5, n).unwrap().r).abs();
        assert!(gap(1e4) < 5e-4, "gap(1e4) = {}", gap(1e4));
        assert!(gap(100.0) < 5e-2);
        assert!(gap(100.0) > gap(1e3) && gap(1e3) > gap(1e4));
    }

    #[test]
    fn active_large_n_limit_is_thermal_rate() {
        for &(eta, n_t) in &[(0.5, 0.1), (0.7, 0.2)] {
            let lim = asymptotic_rates(eta, n_t).unwrap().r_rr_thermal;
            let r = active_rates(eta, 1e6, n_t).unwrap().r;
            assert!((r - lim).abs() < 1e-3, "eta={eta} n_t={n_t}: {r} vs {lim}");
        }
        // (0.5, 1e4, 0.1): within 0.02 of asymptotic
        let r = active_rates(0.5, 1e4, 0.1).unwrap().r;
        let lim = asymptotic_rates(0.5, 0.1).unwrap().r_rr_thermal;
        assert!((r - lim).abs() < 0.02);
    }

    #[test]
    fn active_rejects_bad_params() {
        assert!(active_rates(0.0, 1.0, 0.0).is_err());
        assert!(active_rates(0.5, -1.0, 0.0).is_err());
        assert!(active_rates(0.5, 1.0, -0.1).is_err());
    }

    #[test]
    fn noise_threshold_known_points() {
        // eta = 0.5: root of g(N) = 2, i.e. N = 1 exactly
        let t = noise_threshold(0.5).unwrap();
        assert!((t - 1.0).abs() < 1e-9, "t = {t}");
        // eta -> 0: root of g(N) = 1, approx 0.293
        let t0 = noise_threshold(1e-9).unwrap();
        assert!((t0 - 0.293).abs() < 1e-3, "t0 = {t0}");
    }

    #[test]
    fn noise_threshold_monotone_and_consistent() {
        let mut prev = 0.0;
        for k in 1..10 {
            let eta = k as f64 * 0.1;
            let t = noise_threshold(eta).unwrap();
            assert!(t > prev);
            prev = t;
            // substituting the root back into the thermal rate gives 0
            let resid = asymptotic_rates(eta, t).unwrap().r_rr_thermal;
            assert!(resid.abs() < 1e-9, "resid = {resid}");
        }
    }

    #[test]
    fn k_from_entropies_cases() {
        let out = locking_k_from_entropies(1.0, 2.0, 1.0);
        assert_eq!(out.k, 0.0);
        let out = locking_k_from_entropies(1.0, 0.0, 0.0);
        assert_eq!(out.k, 2.0);
        assert_eq!(out.branch, KBranch::TwoSeMinusS2e);
        // reproduces the dr closed form when fed dr entropies
        let (eta, n) = (0.6, 100.0);
        let s_e = g((1.0 - eta) * n).unwrap();
        let s_2e = g(2.0 * (1.0 - eta) * n).unwrap();
        let chi = g(eta * n).unwrap();
        let out = locking_k_from_entropies(s_e, s_2e, chi);
        let k_dr = dr_rates(eta, n).unwrap().k;
        assert!((out.k - k_dr).abs() < TOL);
        assert_eq!(out.branch, KBranch::TwoSeMinusS2e);
    }

    #[test]
    fn k_from_entropies_reproduces_rr_closed_form() {
        let (eta, n) = (0.5, 10.0);
        let rr = rr_rates(eta, n).unwrap();
        let s_e = g((1.0 - eta) * n).unwrap();
        let s_2e = g((1.0 - eta) * rr.aux.n_prime.unwrap()).unwrap()
            + g((1.0 - eta) * rr.aux.n_double_prime.unwrap()).unwrap();
        let out = locking_k_from_entropies(s_e, s_2e, rr.chi);
        assert!((out.k - rr.k).abs() < TOL);
    }

    #[test]
    fn rr_rate_beats_tgw_at_low_transmissivity() {
        for k in 1..=40 {
            let eta = k as f64 * 0.01;
            let r = asymptotic_rates(eta, 0.0).unwrap().r_rr;
            let b = bounds(eta).unwrap().tgw;
            assert!(r > b, "eta = {eta}: r_rr = {r} <= tgw = {b}");
        }
    }

    #[test]
    fn breakdown_identity_r_eq_chi_minus_k() {
        for &(eta, n) in &[(0.3, 2.0), (0.5, 7.0), (0.9, 0.4)] {
            for rb in [dr_rates(eta, n).unwrap(), rr_rates(eta, n).unwrap()] {
                assert_eq!(rb.r, rb.chi - rb.k);
                assert!(rb.chi >= 0.0 && rb.k >= 0.0);
            }
        }
    }

    #[test]
    fn boundary_eta_rejected() {
        for f in [dr_rates, rr_rates] {
            assert!(f(0.0, 1.0).is_err());
            assert!(f(1.0, 1.0).is_err());
        }
        assert!(bounds(1.0).is_err());
        assert!(noise_threshold(0.0).is_err());
    }
}
