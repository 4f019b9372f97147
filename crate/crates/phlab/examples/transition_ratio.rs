//! Hyperfine transition-matrix products for the write/read Raman chain and
//! the polarization-selection loss of the heralds.
//!
//! ```bash
//! cargo run -p phlab --example transition_ratio
//! ```

use phlab::atomic::{build_matrices, path_matrix, polarization_ratio_and_loss, Polarization};

fn main() {
    let set = build_matrices();
    println!("excitation matrix (F = 2 -> F' = 2):\n{}", set.excitation);
    println!(
        "herald emission, sigma-plus branch (F' = 2 -> F = 1):\n{}",
        set.emission_sigma_plus
    );
    println!(
        "herald emission, sigma-minus branch:\n{}",
        set.emission_sigma_minus
    );

    let accepted = path_matrix(&set, Polarization::Plus).unwrap();
    let rejected = path_matrix(&set, Polarization::Minus).unwrap();
    println!("full chain, accepted polarization:\n{accepted}");
    println!("full chain, rejected polarization:\n{rejected}");

    let selection = polarization_ratio_and_loss();
    println!(
        "accepted/rejected intensity ratio = {:.6}  (33/8 = {:.6})",
        selection.ratio,
        33.0 / 8.0
    );
    println!(
        "herald loss from polarization selection = {:.6}  (8/41 = {:.6})",
        selection.loss,
        8.0 / 41.0
    );
    println!(
        "recovering it would scale the converter-input signal-to-noise by {:.3}",
        1.0 / (1.0 - selection.loss)
    );
}
