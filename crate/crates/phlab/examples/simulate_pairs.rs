//! Simulate a heralded photon-pair experiment and print its correlation
//! table next to the closed-form expectations.
//!
//! ```bash
//! cargo run --release -p phlab --example simulate_pairs
//! ```

use phlab::correlation::CorrelationSet;
use phlab::montecarlo::{Experiment, RngPlan, RunOptions, SourceParams};
use phlab::noisemodel::{mix_auto, mix_cross};

fn main() {
    // Ten-percent excitation with collection boosted well above the
    // per-mille regime so the heralded statistics resolve quickly.
    let source = SourceParams {
        mean_pairs: SourceParams::mean_pairs_for_excitation(0.1),
        eta_s: 0.06,
        eta_asv: 0.07,
        eta_conv: 0.6,
        ..SourceParams::default()
    };
    let trials = 20_000_000;
    let plan = RngPlan::new(7);

    println!("two-mode squeezed source, p_ex = 0.10, {trials} write slots\n");

    // Direct detection of the heralds.
    let experiment = Experiment::new(source.clone());
    let direct = experiment.run(&plan, &RunOptions::new(trials)).unwrap();
    let mut table = CorrelationSet::from_aggregate(&direct.aggregate);

    // Converted detection with a signal-to-noise ratio of 0.55 at the
    // converter input.
    let mut noisy = source.clone();
    noisy.noise_mean = noisy.noise_mean_for_zeta(0.55);
    let converted = Experiment::new(noisy)
        .run(&RngPlan::new(8), &RunOptions::new(trials).qfc(true))
        .unwrap();
    table.fill_missing_from(&CorrelationSet::from_aggregate(&converted.aggregate));

    println!("{:<18} {:>9} {:>9} {:>8}", "statistic", "value", "std_err", "counts");
    for (name, est) in table.entries() {
        println!(
            "{name:<18} {:>9.4} {:>9.4} {:>8}",
            est.value, est.std_err, est.numerator_counts
        );
    }

    // The converted statistics follow the noise-mixing algebra applied to
    // the thermal-source values.
    let zeta = 0.55;
    let g_cross_in = 2.0 + 1.0 / source.mean_pairs;
    println!("\nmixing expectations at zeta = {zeta}:");
    println!("  s_ast   ~ {:.3}", mix_cross(g_cross_in, zeta));
    println!("  ast_ast ~ {:.3}", mix_auto(2.0, 1.0, zeta));
}
