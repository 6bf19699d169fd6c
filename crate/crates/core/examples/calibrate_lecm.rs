//! Calibrates the LECM threshold for the two-regime synthetic scenario.
//!
//! Runs the full pipeline on seeds disjoint from the ones used by the
//! acceptance suite and prints quantiles of the LECM distribution in
//! normal and crisis months. The 0.99 normal-month quantile is the value
//! frozen as `synth::SCENARIO_LECM_MIN`.
//!
//! ```text
//! cargo run --release -p plunge-core --example calibrate_lecm
//! ```

use plunge_core::analysis::{analyze_panel, AnalysisOptions};
use plunge_core::ingest::IngestPolicy;
use plunge_core::synth::{generate, Regime, SynthConfig};

const SEEDS: std::ops::Range<u64> = 10_000..10_100;

fn quantile(sorted: &[f64], q: f64) -> f64 {
    // linear interpolation between order statistics
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut normal = Vec::new();
    let mut crisis = Vec::new();
    for seed in SEEDS {
        let out = generate(&SynthConfig::two_regime_scenario(seed))?;
        let analysis = analyze_panel(
            &out.prices,
            &IngestPolicy::default(),
            &AnalysisOptions::default(),
        )?;
        for (m, truth) in analysis.metrics.iter().zip(&out.truth.months) {
            assert_eq!(m.month, truth.month);
            match truth.regime {
                Regime::Normal => normal.push(m.lecm()),
                Regime::Crisis => crisis.push(m.lecm()),
            }
        }
    }
    normal.sort_by(f64::total_cmp);
    crisis.sort_by(f64::total_cmp);
    for (name, xs) in [("normal", &normal), ("crisis", &crisis)] {
        println!(
            "{name}: n={} min={:.4} q01={:.4} q50={:.4} q99={:.4} max={:.4}",
            xs.len(),
            xs[0],
            quantile(xs, 0.01),
            quantile(xs, 0.5),
            quantile(xs, 0.99),
            xs[xs.len() - 1]
        );
    }
    println!("lecm_min (normal q99) = {:.2}", quantile(&normal, 0.99));
    Ok(())
}
