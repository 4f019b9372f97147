//! Hong-Ou-Mandel visibility of two independently prepared sources, from
//! the closed form 1/(1 + g2) and from normal-ordered moment sampling.
//!
//! ```bash
//! cargo run --release -p phlab --example hom_visibility
//! ```

use phlab::hom::{visibility_from_g2, visibility_from_moments};
use phlab::montecarlo::{sample_pair_numbers, sample_trial, SourceParams};
use phlab::ChannelSet;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    println!("closed form 1/(1 + g2):");
    for g2 in [0.0, 0.54, 1.0, 2.0] {
        println!("  g2 = {g2:<5} -> V = {:.4}", visibility_from_g2(g2));
    }

    // Deterministic single photons: perfect interference.
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ideal = visibility_from_moments(|_| (1, 1), 100_000, &mut rng).unwrap();
    println!("\nsingle-photon inputs:  V = {:.4}", ideal.visibility);

    // Thermal inputs: V = 1/3.
    let thermal = SourceParams {
        mean_pairs: 1.0,
        ..SourceParams::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let result = visibility_from_moments(
        |r| {
            (
                sample_pair_numbers(&thermal, r).0 as u64,
                sample_pair_numbers(&thermal, r).0 as u64,
            )
        },
        2_000_000,
        &mut rng,
    )
    .unwrap();
    println!(
        "thermal inputs:        V = {:.4} +- {:.4}  (1/3 expected)",
        result.visibility, result.visibility_std_err
    );

    // Two independently simulated heralded telecom sources.
    let source = SourceParams {
        mean_pairs: SourceParams::mean_pairs_for_excitation(0.1),
        eta_s: 0.06,
        eta_asv: 0.07,
        eta_conv: 0.6,
        noise_mean: 0.1111 * 0.07 / 5.5,
        ..SourceParams::default()
    };
    let herald_stream = |seed: u64| {
        let source = source.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        move || loop {
            let trial = sample_trial(&source, true, &mut rng);
            if trial.clicks.intersects(ChannelSet::MODE_S) {
                return trial.n_ast as u64;
            }
        }
    };
    let mut left = herald_stream(3);
    let mut right = herald_stream(4);
    let mut unused = ChaCha8Rng::seed_from_u64(5);
    let result = visibility_from_moments(|_| (left(), right()), 100_000, &mut unused).unwrap();
    println!(
        "heralded telecom pair: V = {:.4} +- {:.4}",
        result.visibility, result.visibility_std_err
    );
    println!(
        "  coincidence probabilities per efficiency product: P0 = {:.3e}, Pinf = {:.3e}",
        result.p0, result.p_inf
    );
}
