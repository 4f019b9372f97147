//! Hong-Ou-Mandel visibility of two independently prepared sources.
//!
//! Two statistically independent inputs with identical mean photon number
//! and autocorrelation `g2` interfere on a half beamsplitter. With perfect
//! mode overlap at zero delay and no stray photons, the coincidence
//! probabilities behind the splitter follow from normal-ordered moments:
//! `P0 = (<:n1^2:> + <:n2^2:>)/4` at zero delay and
//! `P_inf = (<:n1^2:> + <:n2^2:> + 2<n1><n2>)/4` at large delay, both up to
//! the detector-efficiency product, giving `V = 1 - P0/P_inf = 1/(1 + g2)`.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HomError {
    #[error("degenerate source: mean photon number is zero")]
    DegenerateSource,
}

/// Visibility of the interference dip for two identical independent sources
/// with the given autocorrelation: `1 / (1 + g2)`.
pub fn visibility_from_g2(g2: f64) -> f64 {
    debug_assert!(g2 >= 0.0);
    1.0 / (1.0 + g2)
}

/// Coincidence probabilities (per unit detector-efficiency product) and the
/// resulting visibility, with batch-scatter standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HomResult {
    pub p0: f64,
    pub p0_std_err: f64,
    pub p_inf: f64,
    pub p_inf_std_err: f64,
    pub visibility: f64,
    pub visibility_std_err: f64,
}

const BATCHES: usize = 100;

/// Estimates the visibility by sampling photon-number pairs for the two
/// inputs and accounting normal-ordered moments via
/// `<:n^2:> = <n(n-1)>` and `<:n1 n2:> = <n1><n2>` (independence).
pub fn visibility_from_moments<R, F>(
    mut sample: F,
    trials: u64,
    rng: &mut R,
) -> Result<HomResult, HomError>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> (u64, u64),
{
    #[derive(Default, Clone, Copy)]
    struct Moments {
        n1: f64,
        n2: f64,
        n1_fact: f64,
        n2_fact: f64,
        count: f64,
    }
    impl Moments {
        fn p0(&self) -> f64 {
            (self.n1_fact + self.n2_fact) / (4.0 * self.count)
        }
        fn p_inf(&self) -> f64 {
            self.p0() + (self.n1 / self.count) * (self.n2 / self.count) / 2.0
        }
    }

    let mut batches = [Moments::default(); BATCHES];
    let per_batch = (trials / BATCHES as u64).max(1);
    for trial in 0..trials {
        let (n1, n2) = sample(rng);
        let batch = &mut batches[((trial / per_batch) as usize).min(BATCHES - 1)];
        let (n1, n2) = (n1 as f64, n2 as f64);
        batch.n1 += n1;
        batch.n2 += n2;
        batch.n1_fact += n1 * (n1 - 1.0);
        batch.n2_fact += n2 * (n2 - 1.0);
        batch.count += 1.0;
    }

    let mut total = Moments::default();
    for b in &batches {
        total.n1 += b.n1;
        total.n2 += b.n2;
        total.n1_fact += b.n1_fact;
        total.n2_fact += b.n2_fact;
        total.count += b.count;
    }
    if total.n1 <= 0.0 || total.n2 <= 0.0 {
        return Err(HomError::DegenerateSource);
    }

    let p0 = total.p0();
    let p_inf = total.p_inf();
    let visibility = 1.0 - p0 / p_inf;

    let spread = |f: &dyn Fn(&Moments) -> f64, center: f64| {
        let used: Vec<&Moments> = batches.iter().filter(|b| b.count > 0.0).collect();
        let var = used
            .iter()
            .map(|b| (f(b) - center).powi(2))
            .sum::<f64>()
            / (used.len() as f64 - 1.0);
        (var / used.len() as f64).sqrt()
    };
    let p0_std_err = spread(&|b| b.p0(), p0);
    let p_inf_std_err = spread(&|b| b.p_inf(), p_inf);
    let visibility_std_err = spread(
        &|b| {
            if b.p_inf() > 0.0 {
                1.0 - b.p0() / b.p_inf()
            } else {
                1.0
            }
        },
        visibility,
    );

    Ok(HomResult {
        p0,
        p0_std_err,
        p_inf,
        p_inf_std_err,
        visibility,
        visibility_std_err,
    })
}
