//! Correlation, CHSH, no-signaling and tail-probability estimators on count
//! tables.
//!
//! Every spread is first-order propagation of independent Poisson noise on
//! the raw counts (sigma_i = sqrt(N_i)). Writing T for a setting pair's
//! total and N++ .. N-- for its cells:
//!
//! ```text
//! E        = (N++ - N+- - N-+ + N--) / T
//! var(E)   = 4 (N++ + N--)(N+- + N-+) / T^3
//! pA(+)    = (N++ + N+-) / T      var = (N++ + N+-)(N-+ + N--) / T^3
//! pB(+)    = (N++ + N-+) / T      var = (N++ + N-+)(N+- + N--) / T^3
//! ```
//!
//! The marginal variances are symmetric under outcome flip, so pA(+) and
//! pA(-) carry the same sigma.

use crate::error::{Error, Result};
use crate::model::{CandidateEvent, CountsTable, StatWithSigma};

/// Counts every event into a fresh table. No windowing here; feed it the
/// output of a herald selection.
pub fn tabulate(events: &[CandidateEvent]) -> CountsTable {
    let mut t = CountsTable::new();
    for ev in events {
        t.record(ev);
    }
    t
}

/// Relative frequency of outcome pair (x, y) under setting pair (a, b).
pub fn joint_prob(t: &CountsTable, a: u8, b: u8, x: i8, y: i8) -> Result<f64> {
    let total = t.pair_total(a, b);
    if total == 0 {
        return Err(Error::EmptySettingPair { a, b });
    }
    Ok(t.count(a, b, x, y) as f64 / total as f64)
}

/// Outcome correlation E(a, b) with its propagated sigma. No null applies,
/// so z and p stay unset.
pub fn correlation(t: &CountsTable, a: u8, b: u8) -> Result<StatWithSigma> {
    let [npp, npm, nmp, nmm] = t.pair_cells(a, b);
    let total = npp + npm + nmp + nmm;
    if total == 0 {
        return Err(Error::EmptySettingPair { a, b });
    }
    let tt = total as f64;
    let same = (npp + nmm) as f64;
    let diff = (npm + nmp) as f64;
    let value = (same - diff) / tt;
    let sigma = (4.0 * same * diff / (tt * tt * tt)).sqrt();
    Ok(StatWithSigma::plain(value, sigma))
}

/// CHSH statistic S = |E(0,0) + E(0,1) + E(1,0) - E(1,1)| with sigma by
/// quadrature over the four correlations. z = max(0, (S - 2) / sigma) and p
/// is the one-tailed Gaussian tail above the local-realist bound 2.
pub fn chsh(t: &CountsTable) -> Result<StatWithSigma> {
    let e00 = correlation(t, 0, 0)?;
    let e01 = correlation(t, 0, 1)?;
    let e10 = correlation(t, 1, 0)?;
    let e11 = correlation(t, 1, 1)?;
    let value = (e00.value + e01.value + e10.value - e11.value).abs();
    let sigma = (e00.sigma * e00.sigma
        + e01.sigma * e01.sigma
        + e10.sigma * e10.sigma
        + e11.sigma * e11.sigma)
        .sqrt();
    Ok(chsh_bound_stat(value, sigma))
}

/// Builds the CHSH record from a value and sigma alone, applying the
/// one-tailed convention against the bound 2.
pub fn chsh_bound_stat(value: f64, sigma: f64) -> StatWithSigma {
    if sigma > 0.0 {
        let z = ((value - 2.0) / sigma).max(0.0);
        StatWithSigma {
            value,
            sigma,
            z: Some(z),
            p: Some(p_one_tailed(z)),
            degenerate: false,
        }
    } else if value > 2.0 {
        // infinitely many sigmas above the bound; flag rather than overflow
        StatWithSigma {
            value,
            sigma,
            z: None,
            p: Some(0.0),
            degenerate: true,
        }
    } else {
        StatWithSigma {
            value,
            sigma,
            z: Some(0.0),
            p: Some(0.5),
            degenerate: value != 2.0,
        }
    }
}

/// Marginal probability of outcome x on side A under setting pair (a, b).
pub fn marginal_a(t: &CountsTable, x: i8, a: u8, b: u8) -> Result<StatWithSigma> {
    let [npp, npm, nmp, nmm] = t.pair_cells(a, b);
    let total = npp + npm + nmp + nmm;
    if total == 0 {
        return Err(Error::EmptySettingPair { a, b });
    }
    let tt = total as f64;
    let plus = (npp + npm) as f64;
    let minus = (nmp + nmm) as f64;
    let value = if x > 0 { plus } else { minus } / tt;
    let sigma = (plus * minus / (tt * tt * tt)).sqrt();
    Ok(StatWithSigma::plain(value, sigma))
}

/// Marginal probability of outcome y on side B under setting pair (a, b).
pub fn marginal_b(t: &CountsTable, y: i8, a: u8, b: u8) -> Result<StatWithSigma> {
    let [npp, npm, nmp, nmm] = t.pair_cells(a, b);
    let total = npp + npm + nmp + nmm;
    if total == 0 {
        return Err(Error::EmptySettingPair { a, b });
    }
    let tt = total as f64;
    let plus = (npp + nmp) as f64;
    let minus = (npm + nmm) as f64;
    let value = if y > 0 { plus } else { minus } / tt;
    let sigma = (plus * minus / (tt * tt * tt)).sqrt();
    Ok(StatWithSigma::plain(value, sigma))
}

/// The four no-signaling differences. `abN` reads "does setting a move
/// side-B marginals at b = N"; `baN` the mirror image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoSignalSet {
    /// pB(+|00) - pB(+|10)
    pub ab0: StatWithSigma,
    /// pB(+|01) - pB(+|11)
    pub ab1: StatWithSigma,
    /// pA(+|00) - pA(+|01)
    pub ba0: StatWithSigma,
    /// pA(+|10) - pA(+|11)
    pub ba1: StatWithSigma,
}

impl NoSignalSet {
    pub fn labeled(&self) -> [(&'static str, &StatWithSigma); 4] {
        [
            ("A->B0", &self.ab0),
            ("A->B1", &self.ab1),
            ("B->A0", &self.ba0),
            ("B->A1", &self.ba1),
        ]
    }
}

/// Builds a two-tailed statistic around a null of zero from a value and its
/// sigma. Zero sigma off the null has no finite z; it reports p = 0 with the
/// degenerate flag set.
pub fn stat_two_tailed(value: f64, sigma: f64) -> StatWithSigma {
    if sigma > 0.0 {
        let z = (value / sigma).abs();
        StatWithSigma {
            value,
            sigma,
            z: Some(z),
            p: Some(p_two_tailed(z)),
            degenerate: false,
        }
    } else if value == 0.0 {
        StatWithSigma {
            value,
            sigma,
            z: Some(0.0),
            p: Some(1.0),
            degenerate: false,
        }
    } else {
        StatWithSigma {
            value,
            sigma,
            z: None,
            p: Some(0.0),
            degenerate: true,
        }
    }
}

/// All four setting-to-marginal leakage statistics, each two-tailed against
/// zero with sigma from the two marginals in quadrature.
pub fn nosignal(t: &CountsTable) -> Result<NoSignalSet> {
    let diff = |lhs: StatWithSigma, rhs: StatWithSigma| {
        stat_two_tailed(
            lhs.value - rhs.value,
            (lhs.sigma * lhs.sigma + rhs.sigma * rhs.sigma).sqrt(),
        )
    };
    let ab0 = diff(marginal_b(t, 1, 0, 0)?, marginal_b(t, 1, 1, 0)?);
    let ab1 = diff(marginal_b(t, 1, 0, 1)?, marginal_b(t, 1, 1, 1)?);
    let ba0 = diff(marginal_a(t, 1, 0, 0)?, marginal_a(t, 1, 0, 1)?);
    let ba1 = diff(marginal_a(t, 1, 1, 0)?, marginal_a(t, 1, 1, 1)?);
    Ok(NoSignalSet { ab0, ab1, ba0, ba1 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chi2NoSignal {
    pub chi2: f64,
    pub dof: u32,
    pub p: f64,
}

/// Pools the four no-signaling statistics into chi2 = sum (value/sigma)^2
/// with four degrees of freedom. Errors when any sigma is zero.
pub fn chi2_nosignal(ns: &NoSignalSet) -> Result<Chi2NoSignal> {
    let mut chi2 = 0.0;
    for (_, s) in ns.labeled() {
        if s.sigma <= 0.0 {
            return Err(Error::Degenerate("no-signaling sigma is zero"));
        }
        let z = s.value / s.sigma;
        chi2 += z * z;
    }
    Ok(Chi2NoSignal {
        chi2,
        dof: 4,
        p: chi2_tail_dof4(chi2),
    })
}

/// Upper tail of chi-square with four degrees of freedom, which closes to
/// exp(-x/2) (1 + x/2). Exact, so no incomplete-gamma machinery is needed.
pub fn chi2_tail_dof4(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    ((-x / 2.0).exp() * (1.0 + x / 2.0)).clamp(0.0, 1.0)
}

/// Complementary error function. Chebyshev fit with relative error below
/// 1.3e-7 over the whole line, so far tails keep their leading digits.
pub fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let ans = t * (-z * z - 1.26551223
        + t * (1.00002368
            + t * (0.37409196
                + t * (0.09678418
                    + t * (-0.18628806
                        + t * (0.27886807
                            + t * (-1.13520398
                                + t * (1.48851587
                                    + t * (-0.82215223 + t * 0.17087277)))))))))
        .exp();
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}

/// Two-tailed Gaussian tail probability at standardized distance z >= 0.
pub fn p_two_tailed(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

/// One-tailed (upper) Gaussian tail probability at z >= 0.
pub fn p_one_tailed(z: f64) -> f64 {
    (0.5 * erfc(z.abs() / std::f64::consts::SQRT_2)).clamp(0.0, 1.0)
}

/// Counts the game-winning trials: xy = +1 on setting pairs (0,0), (0,1),
/// (1,0) and xy = -1 on (1,1). An ideal quantum strategy wins with
/// probability cos^2(pi/8) ~ 0.85; independent local-realist trials win with
/// probability at most 3/4, which is the null this tail bounds.
pub fn p_chsh_binomial(t: &CountsTable) -> Result<f64> {
    let n = t.total();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let mut wins = 0u64;
    for a in 0..2u8 {
        for b in 0..2u8 {
            let [npp, npm, nmp, nmm] = t.pair_cells(a, b);
            wins += if a == 1 && b == 1 {
                npm + nmp
            } else {
                npp + nmm
            };
        }
    }
    Ok(binomial_upper_tail(n, wins, 0.75))
}

/// P(Binomial(n, p) >= k) by direct term summation. The first term comes
/// from log-gamma; the rest follow the exact ratio recurrence, so nothing
/// overflows and the relative error stays near machine precision.
pub fn binomial_upper_tail(n: u64, k: u64, p: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    let ratio = p / (1.0 - p);
    let ln_first = ln_choose(n, k) + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln();
    let mut term = ln_first.exp();
    let mut sum = term;
    for i in k..n {
        term *= (n - i) as f64 / (i + 1) as f64 * ratio;
        sum += term;
    }
    sum.min(1.0)
}

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Lanczos approximation (g = 7, 9 terms), good to ~1e-13 relative for the
/// positive arguments used here.
fn ln_gamma(x: f64) -> f64 {
    const C: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    debug_assert!(x > 0.0);
    let xm1 = x - 1.0;
    let mut acc = C[0];
    for (i, &c) in C.iter().enumerate().skip(1) {
        acc += c / (xm1 + i as f64);
    }
    let t = xm1 + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (xm1 + 0.5) * t.ln() - t + acc.ln()
}

/// Pooled two-proportion z test for x1/n1 against x2/n2, two-tailed. Both
/// proportions 0 or both 1 make the pooled spread vanish with nothing to
/// distinguish, reported as z = 0, p = 1.
pub fn pooled_two_proportion(x1: u64, n1: u64, x2: u64, n2: u64) -> Result<StatWithSigma> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::Degenerate("two-proportion test with empty side"));
    }
    if x1 > n1 {
        return Err(Error::FieldOutOfRange {
            field: "x1",
            value: x1 as i64,
        });
    }
    if x2 > n2 {
        return Err(Error::FieldOutOfRange {
            field: "x2",
            value: x2 as i64,
        });
    }
    let p1 = x1 as f64 / n1 as f64;
    let p2 = x2 as f64 / n2 as f64;
    let pooled = (x1 + x2) as f64 / (n1 + n2) as f64;
    let value = p1 - p2;
    if pooled == 0.0 || pooled == 1.0 {
        return Ok(StatWithSigma {
            value,
            sigma: 0.0,
            z: Some(0.0),
            p: Some(1.0),
            degenerate: false,
        });
    }
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    Ok(stat_two_tailed(value, se))
}

/// The full per-sample battery: CHSH with both tail bounds, the four
/// no-signaling statistics and their pooled chi-square. The chi-square slot
/// is None when a no-signaling sigma degenerates to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats {
    pub chsh: StatWithSigma,
    pub p_chsh_binomial: f64,
    pub nosig: NoSignalSet,
    pub chi2: Option<Chi2NoSignal>,
}

/// Runs the battery on one table. Errors when any setting pair is empty;
/// callers that scan represent that as an undefined point instead.
pub fn analyze(t: &CountsTable) -> Result<SampleStats> {
    let chsh = chsh(t)?;
    let nosig = nosignal(t)?;
    let chi2 = chi2_nosignal(&nosig).ok();
    let p_chsh_binomial = p_chsh_binomial(t)?;
    Ok(SampleStats {
        chsh,
        p_chsh_binomial,
        nosig,
        chi2,
    })
}
