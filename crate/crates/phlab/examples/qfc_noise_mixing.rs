//! The closed-form noise-mixing algebra: how an additive Poissonian
//! background degrades the correlation functions of a converted herald,
//! how to invert the observed values back to the signal-to-noise ratio,
//! and what selected improvements would buy.
//!
//! ```bash
//! cargo run -p phlab --example qfc_noise_mixing
//! ```

use phlab::noisemodel::{
    mix_auto, mix_cross, mix_heralded_ss, predict_scenario, solve_zeta_gnoise, NoiseMix,
    ObservedMix, ScenarioSpec,
};

fn main() {
    // Measured correlation functions of a heralded source before and
    // after frequency conversion.
    let observed = ObservedMix {
        g2_cross_in: 9.69,
        g2_cross_out: 4.09,
        g2_signal_auto: 1.99,
        g2_auto_out: 1.12,
    };
    let solution = solve_zeta_gnoise(&observed).unwrap();
    println!("inverted from the four observed correlation functions:");
    println!("  zeta      = {:.4}  (signal-to-noise at the converter input)", solution.zeta);
    println!("  g2_noise  = {:.4}  (the background is almost Poissonian)\n", solution.g2_noise);

    // Forward formulas at that operating point.
    println!("forward mixing at zeta = 0.55:");
    println!("  cross      9.69 -> {:.4}", mix_cross(9.69, 0.55));
    println!("  auto       1.99 -> {:.4}", mix_auto(1.99, 0.99, 0.55));
    println!(
        "  heralded   0.34 -> {:.4}",
        mix_heralded_ss(0.34, 1.58, 9.69, 4.09, 0.55).unwrap()
    );
    println!(
        "  heralded auto of the converted mode (zeta' = 9.69 * 0.55): {:.4}\n",
        mix_auto(0.47, 0.99, 9.69 * 0.55)
    );

    // What-if scenarios scaling the signal-to-noise ratio.
    let base = NoiseMix {
        zeta: solution.zeta,
        g2_noise: solution.g2_noise,
        g2_cross_in: 9.69,
        g2_signal_auto: 1.99,
        g2_signal_auto_heralded: 0.47,
        g2_ss: 1.58,
        g2_ss_heralded_in: 0.34,
    };
    let scenarios = [
        ("baseline", 1.0),
        ("polarization selection recovered", 1.25),
        ("collection efficiency x10", 10.0),
    ];
    println!(
        "{:<34} {:>7} {:>14} {:>16}",
        "scenario", "zeta", "g2_ss|converted", "g2_conv|heralded"
    );
    for (label, multiplier) in scenarios {
        let pred = predict_scenario(
            &base,
            &ScenarioSpec {
                label: label.to_string(),
                zeta_multiplier: multiplier,
            },
        )
        .unwrap();
        println!(
            "{label:<34} {:>7.3} {:>14.3} {:>16.3}",
            pred.zeta, pred.g2_ss_given_ast, pred.g2_ast_ast_given_s
        );
    }
}
