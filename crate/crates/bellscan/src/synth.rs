//! Synthetic event generator with a controllable signaling defect.
//!
//! Each attempt is one of two classes. Entangled trials follow singlet
//! statistics at visibility V: settings are uniform and the joint outcome
//! law is p(x, y | a, b) = (1 + x y V c_ab) / 4 with c_00 = c_01 = c_10 =
//! +1/sqrt(2) and c_11 = -1/sqrt(2), so E[S] = 2 sqrt(2) V. Contaminated
//! trials (probability `w_ref`) have an unpaired x and leak setting a into
//! outcome y: y = +1 with probability 1/2 + epsilon (2a - 1) / 2.
//!
//! Herald clicks are i.i.d. exponential per class: entangled from t = 0 with
//! decay `tau_nv_ps`, contaminated from t = -`ref_lead_ps` with decay
//! `tau_ref_ps`, rounded to integer picoseconds. The clean-attempt streak is
//! geometric with per-attempt invalid probability `invalid_rate`, saturated
//! at 250.
//!
//! Determinism contract: the stream is ChaCha12 keyed by the little-endian
//! seed in the first 8 key bytes (rest zero). Uniform deviates take the top
//! 53 bits of one `next_u64` each; exponentials and the geometric come from
//! inverse CDFs. Per attempt the draw order is a, b, class, click1, click2,
//! clean streak, then the outcome draws. Changing any of this changes every
//! generated file, so treat it as part of the format.

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::model::{CandidateEvent, CLEAN_ATTEMPTS_CAP};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub n_attempts: u64,
    pub seed: u64,
    /// Singlet visibility V in [0, 1].
    pub visibility: f64,
    /// Contaminated-class probability in [0, 1].
    pub w_ref: f64,
    /// Setting leak strength in [-1, 1]; 0 restores no-signaling.
    pub epsilon: f64,
    pub tau_nv_ps: f64,
    pub tau_ref_ps: f64,
    /// Contaminated clicks start this many ps before the emission origin.
    pub ref_lead_ps: i64,
    /// Per-attempt probability that an attempt is invalid, driving the
    /// clean-streak distribution. 0 pins every streak at 250.
    pub invalid_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_attempts: 10_000,
            seed: 1,
            visibility: 0.9,
            w_ref: 0.2,
            epsilon: 0.0,
            tau_nv_ps: 12_000.0,
            tau_ref_ps: 3_000.0,
            ref_lead_ps: 8_000,
            invalid_rate: 0.01,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        fn unit_range(name: &str, v: f64) -> Result<()> {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must be in [0, 1], got {v}")));
            }
            Ok(())
        }
        if self.n_attempts == 0 {
            return Err(Error::Config("n_attempts must be positive".into()));
        }
        unit_range("visibility", self.visibility)?;
        unit_range("w_ref", self.w_ref)?;
        unit_range("invalid_rate", self.invalid_rate)?;
        if !(-1.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!(
                "epsilon must be in [-1, 1], got {}",
                self.epsilon
            )));
        }
        for (name, tau) in [("tau_nv", self.tau_nv_ps), ("tau_ref", self.tau_ref_ps)] {
            if !tau.is_finite() || tau <= 0.0 {
                return Err(Error::Config(format!("{name} must be positive, got {tau}")));
            }
        }
        Ok(())
    }

    /// Applies `key = value` lines over the current config. Blank lines and
    /// `#` comments are skipped; later lines win. Keys mirror the CLI flags:
    /// n, seed, visibility, wref, epsilon, tau_nv, tau_ref, lead,
    /// invalid_rate.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("config line {}: expected key=value", idx + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| {
                Error::Config(format!("config line {}: bad {what}: {value:?}", idx + 1))
            };
            // reals must be finite; "nan" and "inf" parse but are never a
            // meaningful model parameter
            let real = |what: &str| -> Result<f64> {
                value
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| bad(what))
            };
            match key {
                "n" => self.n_attempts = value.parse().map_err(|_| bad("n"))?,
                "seed" => self.seed = value.parse().map_err(|_| bad("seed"))?,
                "visibility" => self.visibility = real("visibility")?,
                "wref" => self.w_ref = real("wref")?,
                "epsilon" => self.epsilon = real("epsilon")?,
                "tau_nv" => self.tau_nv_ps = real("tau_nv")?,
                "tau_ref" => self.tau_ref_ps = real("tau_ref")?,
                "lead" => self.ref_lead_ps = value.parse().map_err(|_| bad("lead"))?,
                "invalid_rate" => self.invalid_rate = real("invalid_rate")?,
                other => {
                    return Err(Error::Config(format!(
                        "config line {}: unknown key {other:?}",
                        idx + 1
                    )))
                }
            }
        }
        Ok(())
    }
}

/// Ground-truth class of a generated trial, for calibration checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialClass {
    Entangled,
    Contaminated,
}

fn rng_for(seed: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    ChaCha12Rng::from_seed(key)
}

/// Uniform in [0, 1) from the top 53 bits of one u64 draw.
#[inline]
fn unit(rng: &mut ChaCha12Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Inverse-CDF exponential; u < 1 keeps it finite.
#[inline]
fn exp_ps(rng: &mut ChaCha12Rng, tau: f64) -> f64 {
    -tau * (1.0 - unit(rng)).ln()
}

fn clean_streak(rng: &mut ChaCha12Rng, invalid_rate: f64) -> u32 {
    if invalid_rate <= 0.0 {
        return CLEAN_ATTEMPTS_CAP;
    }
    if invalid_rate >= 1.0 {
        return 0;
    }
    let g = ((1.0 - unit(rng)).ln() / (1.0 - invalid_rate).ln()).floor();
    if g >= CLEAN_ATTEMPTS_CAP as f64 {
        CLEAN_ATTEMPTS_CAP
    } else {
        g as u32
    }
}

/// Generates the configured attempts with their ground-truth class.
pub fn generate_tagged(cfg: &SynthConfig) -> Result<Vec<(CandidateEvent, TrialClass)>> {
    cfg.validate()?;
    let mut rng = rng_for(cfg.seed);
    let mut out = Vec::with_capacity(cfg.n_attempts as usize);
    for sync_index in 0..cfg.n_attempts {
        let a: u8 = if unit(&mut rng) < 0.5 { 0 } else { 1 };
        let b: u8 = if unit(&mut rng) < 0.5 { 0 } else { 1 };
        let class = if unit(&mut rng) < cfg.w_ref {
            TrialClass::Contaminated
        } else {
            TrialClass::Entangled
        };
        let (click1_ps, click2_ps) = match class {
            TrialClass::Entangled => (
                exp_ps(&mut rng, cfg.tau_nv_ps).round() as i64,
                exp_ps(&mut rng, cfg.tau_nv_ps).round() as i64,
            ),
            TrialClass::Contaminated => {
                let lead = cfg.ref_lead_ps as f64;
                (
                    (exp_ps(&mut rng, cfg.tau_ref_ps) - lead).round() as i64,
                    (exp_ps(&mut rng, cfg.tau_ref_ps) - lead).round() as i64,
                )
            }
        };
        let clean_attempts = clean_streak(&mut rng, cfg.invalid_rate);
        let x: i8 = if unit(&mut rng) < 0.5 { 1 } else { -1 };
        let y: i8 = match class {
            TrialClass::Entangled => {
                // c_ab = +1/sqrt(2) except c_11 = -1/sqrt(2)
                let c_ab = if a == 1 && b == 1 {
                    -std::f64::consts::FRAC_1_SQRT_2
                } else {
                    std::f64::consts::FRAC_1_SQRT_2
                };
                let p_same = 0.5 * (1.0 + cfg.visibility * c_ab);
                if unit(&mut rng) < p_same {
                    x
                } else {
                    -x
                }
            }
            TrialClass::Contaminated => {
                let p_plus = 0.5 + cfg.epsilon * (2.0 * a as f64 - 1.0) / 2.0;
                if unit(&mut rng) < p_plus {
                    1
                } else {
                    -1
                }
            }
        };
        out.push((
            CandidateEvent {
                run_id: 0,
                sync_index,
                click1_ps,
                click2_ps,
                clean_attempts,
                setting_a: a,
                setting_b: b,
                outcome_x: x,
                outcome_y: y,
            },
            class,
        ));
    }
    Ok(out)
}

/// Same stream as [`generate_tagged`], classes dropped.
pub fn generate(cfg: &SynthConfig) -> Result<Vec<CandidateEvent>> {
    Ok(generate_tagged(cfg)?
        .into_iter()
        .map(|(ev, _)| ev)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{chsh, nosignal, tabulate};

    #[test]
    fn same_config_reproduces_the_same_file() {
        let cfg = SynthConfig {
            n_attempts: 500,
            seed: 42,
            w_ref: 0.4,
            epsilon: 0.2,
            ..SynthConfig::default()
        };
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
        let tagged = generate_tagged(&cfg).unwrap();
        let untagged: Vec<_> = tagged.iter().map(|(e, _)| *e).collect();
        assert_eq!(untagged, generate(&cfg).unwrap());
    }

    #[test]
    fn different_seeds_differ() {
        let a = generate(&SynthConfig {
            n_attempts: 100,
            seed: 1,
            ..SynthConfig::default()
        })
        .unwrap();
        let b = generate(&SynthConfig {
            n_attempts: 100,
            seed: 2,
            ..SynthConfig::default()
        })
        .unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn validation_names_the_offending_field() {
        let bad = |f: fn(&mut SynthConfig)| {
            let mut c = SynthConfig::default();
            f(&mut c);
            c.validate().unwrap_err().to_string()
        };
        assert!(bad(|c| c.n_attempts = 0).contains("n_attempts"));
        assert!(bad(|c| c.visibility = 1.5).contains("visibility"));
        assert!(bad(|c| c.w_ref = -0.1).contains("w_ref"));
        assert!(bad(|c| c.epsilon = 1.2).contains("epsilon"));
        assert!(bad(|c| c.tau_nv_ps = 0.0).contains("tau_nv"));
        assert!(bad(|c| c.tau_ref_ps = -3.0).contains("tau_ref"));
        assert!(bad(|c| c.invalid_rate = 2.0).contains("invalid_rate"));
    }

    #[test]
    fn kv_config_round_trip_and_errors() {
        let mut cfg = SynthConfig::default();
        cfg.apply_kv(
            "# comment\n\nn = 250\nseed=7\nvisibility=0.8\nwref = 0.5\nepsilon=-0.1\n\
             tau_nv=9000\ntau_ref=2500\nlead=6000\ninvalid_rate=0.05\n",
        )
        .unwrap();
        assert_eq!(cfg.n_attempts, 250);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.visibility, 0.8);
        assert_eq!(cfg.w_ref, 0.5);
        assert_eq!(cfg.epsilon, -0.1);
        assert_eq!(cfg.tau_nv_ps, 9000.0);
        assert_eq!(cfg.tau_ref_ps, 2500.0);
        assert_eq!(cfg.ref_lead_ps, 6000);
        assert_eq!(cfg.invalid_rate, 0.05);

        // later lines win
        let mut cfg = SynthConfig::default();
        cfg.apply_kv("seed=1\nseed=9\n").unwrap();
        assert_eq!(cfg.seed, 9);

        let mut cfg = SynthConfig::default();
        let err = cfg.apply_kv("bogus=1\n").unwrap_err().to_string();
        assert!(err.contains("bogus"), "got: {err}");
        let err = cfg.apply_kv("seed\n").unwrap_err().to_string();
        assert!(err.contains("key=value"), "got: {err}");
        let err = cfg.apply_kv("n=\n").unwrap_err().to_string();
        assert!(err.contains("line 1"), "got: {err}");
        // non-finite reals are parse errors, not validation errors
        let err = cfg.apply_kv("visibility=nan\n").unwrap_err().to_string();
        assert!(err.contains("visibility"), "got: {err}");
        assert!(cfg.apply_kv("tau_nv=inf\n").is_err());
    }

    #[test]
    fn click_support_respects_class_origins() {
        let cfg = SynthConfig {
            n_attempts: 5_000,
            seed: 8,
            w_ref: 0.5,
            ..SynthConfig::default()
        };
        let mut n_contam = 0usize;
        let mut contam_sum = 0f64;
        for (ev, class) in generate_tagged(&cfg).unwrap() {
            match class {
                TrialClass::Entangled => {
                    assert!(ev.click1_ps >= 0 && ev.click2_ps >= 0);
                }
                TrialClass::Contaminated => {
                    assert!(ev.click1_ps >= -8_000 && ev.click2_ps >= -8_000);
                    n_contam += 1;
                    contam_sum += (ev.click1_ps + ev.click2_ps) as f64;
                }
            }
        }
        // mean contaminated click sits near -lead + tau_ref = -5000
        let mean = contam_sum / (2 * n_contam) as f64;
        let tol = 3.0 * 3_000.0 / ((2 * n_contam) as f64).sqrt();
        assert!(
            (mean + 5_000.0).abs() < tol,
            "mean {mean}, n_contam {n_contam}"
        );
        // class mix tracks w_ref
        let frac = n_contam as f64 / cfg.n_attempts as f64;
        assert!((frac - 0.5).abs() < 3.0 * 0.5 / (cfg.n_attempts as f64).sqrt());
    }

    #[test]
    fn settings_are_balanced() {
        let events = generate(&SynthConfig {
            n_attempts: 10_000,
            seed: 4,
            ..SynthConfig::default()
        })
        .unwrap();
        let mut counts = [0f64; 4];
        for ev in &events {
            counts[(ev.setting_a * 2 + ev.setting_b) as usize] += 1.0;
        }
        let expect = events.len() as f64 / 4.0;
        let chi2: f64 = counts.iter().map(|c| (c - expect).powi(2) / expect).sum();
        // dof-3 upper critical value at 1e-6
        assert!(chi2 < 30.6648, "settings unbalanced: chi2 {chi2}");
    }

    #[test]
    fn clean_streak_edge_rates() {
        let all_clean = generate(&SynthConfig {
            n_attempts: 200,
            seed: 5,
            invalid_rate: 0.0,
            ..SynthConfig::default()
        })
        .unwrap();
        assert!(all_clean.iter().all(|e| e.clean_attempts == 250));

        let none_clean = generate(&SynthConfig {
            n_attempts: 200,
            seed: 5,
            invalid_rate: 1.0,
            ..SynthConfig::default()
        })
        .unwrap();
        assert!(none_clean.iter().all(|e| e.clean_attempts == 0));

        // r = 0.5 gives mean streak ~1
        let events = generate(&SynthConfig {
            n_attempts: 10_000,
            seed: 6,
            invalid_rate: 0.5,
            ..SynthConfig::default()
        })
        .unwrap();
        let mean =
            events.iter().map(|e| e.clean_attempts as f64).sum::<f64>() / events.len() as f64;
        assert!((mean - 1.0).abs() < 0.05, "mean streak {mean}");
    }

    #[test]
    fn pure_entangled_sample_hits_the_visibility_scaled_chsh() {
        let events = generate(&SynthConfig {
            n_attempts: 20_000,
            seed: 21,
            visibility: 1.0,
            w_ref: 0.0,
            ..SynthConfig::default()
        })
        .unwrap();
        let s = chsh(&tabulate(&events)).unwrap();
        let target = 2.0 * std::f64::consts::SQRT_2;
        assert!(
            (s.value - target).abs() < 3.0 * s.sigma,
            "S {} sigma {}",
            s.value,
            s.sigma
        );
    }

    /// The leak law y = +1 w.p. 1/2 + eps(2a-1)/2 shifts pB(+|a=0) down and
    /// pB(+|a=1) up, so ab0 = pB(+|00) - pB(+|10) lands at -eps.
    #[test]
    fn contaminated_class_leaks_setting_a_into_b() {
        let events = generate(&SynthConfig {
            n_attempts: 40_000,
            seed: 23,
            w_ref: 1.0,
            epsilon: 0.3,
            invalid_rate: 0.0,
            ..SynthConfig::default()
        })
        .unwrap();
        let ns = nosignal(&tabulate(&events)).unwrap();
        assert!(
            (ns.ab0.value + 0.3).abs() < 3.0 * ns.ab0.sigma,
            "ab0 {} sigma {}",
            ns.ab0.value,
            ns.ab0.sigma
        );
        assert!((ns.ab1.value + 0.3).abs() < 3.0 * ns.ab1.sigma);
        assert!(ns.ba0.value.abs() < 3.0 * ns.ba0.sigma);
        assert!(ns.ba1.value.abs() < 3.0 * ns.ba1.sigma);
    }

    #[test]
    fn epsilon_zero_restores_no_signaling() {
        let events = generate(&SynthConfig {
            n_attempts: 30_000,
            seed: 31,
            w_ref: 0.5,
            epsilon: 0.0,
            ..SynthConfig::default()
        })
        .unwrap();
        let ns = nosignal(&tabulate(&events)).unwrap();
        for (label, s) in ns.labeled() {
            assert!(
                s.value.abs() < 4.0 * s.sigma,
                "{label}: {} vs sigma {}",
                s.value,
                s.sigma
            );
        }
    }
}
