//! One-factor, two-regime synthetic market.
//!
//! Daily returns follow `R_i(t) = beta(regime) * f(t) + e_i(t)` with the
//! common factor `f ~ N(0, sigma_factor^2)` and idiosyncratic noise
//! `e_i ~ N(0, sigma_idio^2)`, all independent. The population correlation of
//! any two entities is then `beta^2 sf^2 / (beta^2 sf^2 + se^2)`, so the
//! crisis regime is simply a month with a larger loading.
//!
//! ## Reproducibility
//!
//! The random stream is fully specified so fixtures can be regenerated in any
//! language:
//!
//! * generator: xoshiro256++, state expanded from the 64-bit seed with
//!   SplitMix64 (`rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64`);
//! * uniforms: `u = (x >> 11) * 2^-53` for each 64-bit output `x`;
//! * normals: Box-Muller on a pair `(u1, u2)`,
//!   `r = sqrt(-2 ln(1 - u1))`, yielding `r cos(2 pi u2)` then
//!   `r sin(2 pi u2)` on the next call;
//! * draw order: month by month, day by day; each day draws the factor first,
//!   then the noise of entities `0..N` in column order.

use chrono::NaiveDate;
use ndarray::Array2;
use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{PeSeries, PricePanel};
use crate::month::MonthKey;

/// Synthetic months use calendar days `1..=days_per_month`.
pub const MAX_CALENDAR_DAYS: usize = 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Normal,
    Crisis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_entities: usize,
    /// Regime of each consecutive month.
    pub months: Vec<Regime>,
    pub days_per_month: usize,
    pub beta_normal: f64,
    pub beta_crisis: f64,
    pub sigma_factor: f64,
    pub sigma_idio: f64,
    pub pe_normal: f64,
    pub pe_crisis: f64,
    pub seed: u64,
    pub start_month: MonthKey,
    pub initial_price: f64,
}

/// Crisis months of the default 48-month schedule (0-based).
pub const DEFAULT_CRISIS_MONTHS: [usize; 14] =
    [4, 5, 6, 18, 19, 20, 25, 26, 31, 32, 33, 34, 44, 45];

/// LECM threshold for [`SynthConfig::two_regime_scenario`]: the 0.99 quantile
/// of normal-month LECM over seeds `10000..10100`, rounded to two decimals.
/// Regenerate with `cargo run --release -p plunge-core --example calibrate_lecm`.
pub const SCENARIO_LECM_MIN: f64 = 6.89;

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig::two_regime_scenario(0)
    }
}

impl SynthConfig {
    /// 13 entities, 48 months of 21 days starting 2006-01, pairwise
    /// correlation 0.3 in normal months and 0.85 in crisis months, PE 15 / 26.
    pub fn two_regime_scenario(seed: u64) -> Self {
        let sigma_factor = 0.01;
        let sigma_idio = 0.01;
        let months = (0..48)
            .map(|m| {
                if DEFAULT_CRISIS_MONTHS.contains(&m) {
                    Regime::Crisis
                } else {
                    Regime::Normal
                }
            })
            .collect();
        SynthConfig {
            n_entities: 13,
            months,
            days_per_month: 21,
            beta_normal: loading_for_correlation(0.3, sigma_factor, sigma_idio)
                .expect("valid target"),
            beta_crisis: loading_for_correlation(0.85, sigma_factor, sigma_idio)
                .expect("valid target"),
            sigma_factor,
            sigma_idio,
            pe_normal: 15.0,
            pe_crisis: 26.0,
            seed,
            start_month: MonthKey::new(2006, 1).expect("valid month"),
            initial_price: 1000.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_entities == 0 {
            return bad("n_entities must be positive".into());
        }
        if self.months.is_empty() {
            return bad("at least one month is required".into());
        }
        if self.days_per_month < 2 {
            return bad(format!(
                "days_per_month must be at least 2, got {}",
                self.days_per_month
            ));
        }
        let nonneg = [
            ("beta_normal", self.beta_normal),
            ("beta_crisis", self.beta_crisis),
            ("sigma_factor", self.sigma_factor),
            ("sigma_idio", self.sigma_idio),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a non-negative number, got {v}"));
            }
        }
        let positive = [
            ("pe_normal", self.pe_normal),
            ("pe_crisis", self.pe_crisis),
            ("initial_price", self.initial_price),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    pub fn beta(&self, regime: Regime) -> f64 {
        match regime {
            Regime::Normal => self.beta_normal,
            Regime::Crisis => self.beta_crisis,
        }
    }

    pub fn pe(&self, regime: Regime) -> f64 {
        match regime {
            Regime::Normal => self.pe_normal,
            Regime::Crisis => self.pe_crisis,
        }
    }

    pub fn entity_names(&self) -> Vec<String> {
        let width = self.n_entities.to_string().len().max(2);
        (1..=self.n_entities)
            .map(|i| format!("S{i:0width$}"))
            .collect()
    }

    pub fn month_keys(&self) -> Vec<MonthKey> {
        std::iter::successors(Some(self.start_month), |m| Some(m.succ()))
            .take(self.months.len())
            .collect()
    }
}

/// Population pairwise correlation of the one-factor model.
pub fn expected_pairwise_correlation(beta: f64, sigma_factor: f64, sigma_idio: f64) -> Result<f64> {
    let common = beta * beta * sigma_factor * sigma_factor;
    let total = common + sigma_idio * sigma_idio;
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::InvalidConfig(
            "one-factor model has zero total variance".into(),
        ));
    }
    Ok(common / total)
}

/// Loading that gives pairwise correlation `rho` (inverse of
/// [`expected_pairwise_correlation`]).
pub fn loading_for_correlation(rho: f64, sigma_factor: f64, sigma_idio: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&rho) || sigma_factor <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "cannot reach correlation {rho} with sigma_factor {sigma_factor}"
        )));
    }
    Ok((rho * sigma_idio * sigma_idio / ((1.0 - rho) * sigma_factor * sigma_factor)).sqrt())
}

/// Seeded uniform / Gaussian stream (see the module docs for the algorithm).
#[derive(Debug, Clone)]
pub struct SynthRng {
    inner: Xoshiro256PlusPlus,
    spare: Option<f64>,
}

impl SynthRng {
    pub fn new(seed: u64) -> Self {
        SynthRng {
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
            spare: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * angle.sin());
        r * angle.cos()
    }
}

/// Model returns without a calendar: `months * days_per_month` rows, one
/// column per entity.
pub fn simulate_returns(config: &SynthConfig) -> Result<Array2<f64>> {
    config.validate()?;
    let n = config.n_entities;
    let rows = config.months.len() * config.days_per_month;
    let mut rng = SynthRng::new(config.seed);
    let mut out = Array2::<f64>::zeros((rows, n));
    let mut t = 0;
    for &regime in &config.months {
        let beta = config.beta(regime);
        for _ in 0..config.days_per_month {
            let f = config.sigma_factor * rng.standard_normal();
            for i in 0..n {
                let e = config.sigma_idio * rng.standard_normal();
                out[[t, i]] = beta * f + e;
            }
            t += 1;
        }
    }
    Ok(out)
}

/// Ground-truth regime of each generated month.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub months: Vec<MonthRegime>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonthRegime {
    pub month: MonthKey,
    pub regime: Regime,
}

impl GroundTruth {
    pub fn months_in(&self, regime: Regime) -> impl Iterator<Item = MonthKey> + '_ {
        self.months
            .iter()
            .filter(move |m| m.regime == regime)
            .map(|m| m.month)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("ground truth serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub prices: PricePanel,
    pub pe: PeSeries,
    pub truth: GroundTruth,
    /// The model returns the prices were built from.
    pub returns: Array2<f64>,
}

/// Dated price panel, PE series and ground truth for `config`.
///
/// Month `k` occupies calendar days `1..=days_per_month` of the `k`-th month
/// after `start_month`; the starting price sits on the last day of the
/// preceding month so every return falls inside its own month.
pub fn generate(config: &SynthConfig) -> Result<SynthOutput> {
    config.validate()?;
    if config.days_per_month > MAX_CALENDAR_DAYS {
        return Err(Error::InvalidConfig(format!(
            "days_per_month {} does not fit a calendar month (max {MAX_CALENDAR_DAYS})",
            config.days_per_month
        )));
    }
    let returns = simulate_returns(config)?;
    let month_keys = config.month_keys();

    let mut dates = Vec::with_capacity(returns.nrows() + 1);
    let base = config
        .start_month
        .day(1)
        .and_then(|d| d.pred_opt())
        .ok_or_else(|| Error::InvalidConfig("start month out of range".into()))?;
    dates.push(base);
    for m in &month_keys {
        for d in 1..=config.days_per_month as u32 {
            let date: NaiveDate = m
                .day(d)
                .ok_or_else(|| Error::InvalidConfig(format!("no day {d} in {m}")))?;
            dates.push(date);
        }
    }

    let n = config.n_entities;
    let mut prices = Array2::<f64>::zeros((returns.nrows() + 1, n));
    for i in 0..n {
        let mut log_level = config.initial_price.ln();
        prices[[0, i]] = config.initial_price;
        for t in 0..returns.nrows() {
            log_level += returns[[t, i]];
            prices[[t + 1, i]] = log_level.exp();
        }
    }
    let prices = PricePanel::new(config.entity_names(), dates, prices)?;

    let pe = PeSeries::new(
        month_keys
            .iter()
            .zip(&config.months)
            .map(|(&m, &r)| (m, config.pe(r)))
            .collect(),
    )?;
    let truth = GroundTruth {
        seed: config.seed,
        months: month_keys
            .iter()
            .zip(&config.months)
            .map(|(&month, &regime)| MonthRegime { month, regime })
            .collect(),
    };
    Ok(SynthOutput {
        prices,
        pe,
        truth,
        returns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expected_correlation_examples() {
        assert_eq!(expected_pairwise_correlation(1.0, 1.0, 0.0).unwrap(), 1.0);
        assert_eq!(expected_pairwise_correlation(0.0, 1.0, 1.0).unwrap(), 0.0);
        let r = expected_pairwise_correlation(1.0, 0.02, 0.01).unwrap();
        assert!((r - 0.8).abs() < 1e-15, "{r}");
        assert!(expected_pairwise_correlation(0.0, 1.0, 0.0).is_err());
        assert!(expected_pairwise_correlation(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn loading_inverts_correlation() {
        for rho in [0.0, 0.3, 0.85, 0.99] {
            let b = loading_for_correlation(rho, 0.01, 0.02).unwrap();
            let back = expected_pairwise_correlation(b, 0.01, 0.02).unwrap();
            assert!((back - rho).abs() < 1e-12);
        }
        assert!(loading_for_correlation(1.0, 0.01, 0.01).is_err());
    }

    #[test]
    fn invalid_configs() {
        let mut c = SynthConfig::two_regime_scenario(1);
        c.days_per_month = 1;
        assert!(matches!(generate(&c), Err(Error::InvalidConfig(_))));
        let mut c = SynthConfig::two_regime_scenario(1);
        c.days_per_month = 29;
        assert!(generate(&c).is_err());
        assert!(simulate_returns(&c).is_ok());
        let mut c = SynthConfig::two_regime_scenario(1);
        c.sigma_idio = -0.1;
        assert!(generate(&c).is_err());
        let mut c = SynthConfig::two_regime_scenario(1);
        c.months.clear();
        assert!(generate(&c).is_err());
        let mut c = SynthConfig::two_regime_scenario(1);
        c.pe_crisis = 0.0;
        assert!(generate(&c).is_err());
    }

    #[test]
    fn calendar_layout() {
        let out = generate(&SynthConfig::two_regime_scenario(3)).unwrap();
        let p = &out.prices;
        assert_eq!(p.n_dates(), 48 * 21 + 1);
        assert_eq!(p.dates()[0].to_string(), "2005-12-31");
        assert_eq!(p.dates()[1].to_string(), "2006-01-01");
        assert_eq!(p.dates()[21].to_string(), "2006-01-21");
        assert_eq!(p.dates()[22].to_string(), "2006-02-01");
        assert_eq!(out.pe.len(), 48);
        assert_eq!(out.pe.get("2006-05".parse().unwrap()), Some(26.0));
        assert_eq!(out.pe.get("2006-04".parse().unwrap()), Some(15.0));
        assert_eq!(
            out.truth.months_in(Regime::Crisis).count(),
            DEFAULT_CRISIS_MONTHS.len()
        );
        assert_eq!(p.entities()[0], "S01");
        assert_eq!(p.entities()[12], "S13");
    }

    #[test]
    fn gaussian_moments() {
        let mut rng = SynthRng::new(7);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01, "{mean}");
        assert!((var - 1.0).abs() < 0.02, "{var}");
    }

    #[test]
    fn uniform_range() {
        let mut rng = SynthRng::new(0);
        for _ in 0..10_000 {
            let u = rng.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }
}
