use rand::Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::lattice::{Dims, Lattice, ModelParams};
use crate::recursion::exact_sample_with;
use crate::rng::stream_rng;

/// How synthetic datasets are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataMethod {
    /// Exact draws from the forward recursion (lag ≤ 20).
    Exact,
    /// Systematic-scan Gibbs sweeps from a uniform random start.
    Gibbs { sweeps: usize },
}

/// `P(y_i = +1)` indexed by neighbour sum + 4.
fn plus_probabilities(theta: ModelParams) -> [f64; 9] {
    let mut p = [0.0; 9];
    for (k, slot) in p.iter_mut().enumerate() {
        let u = theta.theta0 + theta.theta1 * (k as f64 - 4.0);
        *slot = 1.0 / (1.0 + (-2.0 * u).exp());
    }
    p
}

/// One sweep over the sites in index order, resampling each from its full
/// conditional.
pub fn gibbs_sweep_in_place<R: Rng + ?Sized>(theta: ModelParams, lat: &mut Lattice, rng: &mut R) {
    let p = plus_probabilities(theta);
    for i in 0..lat.len() {
        let ns = (lat.neighbor_sum(i) + 4) as usize;
        let spin = if rng.random::<f64>() < p[ns] { 1 } else { -1 };
        lat.set(i, spin);
    }
}

pub fn gibbs_sweep(theta: ModelParams, lat: &Lattice, seed: u64) -> Lattice {
    let mut out = lat.clone();
    gibbs_sweep_in_place(theta, &mut out, &mut stream_rng(seed, 0));
    out
}

/// `count` independent datasets; dataset `i` uses stream `i` of `seed`.
pub fn simulate_datasets(
    theta: ModelParams,
    rows: usize,
    cols: usize,
    count: usize,
    method: DataMethod,
    seed: u64,
) -> Result<Vec<Lattice>> {
    let dims = Dims::new(rows, cols)?;
    if method == DataMethod::Exact {
        // fail fast on the lag cap even when count is zero
        crate::recursion::RecursionPlan::new(dims)?;
    }
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            match method {
                DataMethod::Exact => exact_sample_with(theta, dims, &mut rng),
                DataMethod::Gibbs { sweeps } => {
                    let mut lat = Lattice::random(rows, cols, &mut rng)?;
                    for _ in 0..sweeps {
                        gibbs_sweep_in_place(theta, &mut lat, &mut rng);
                    }
                    Ok(lat)
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn sweep_is_deterministic() {
        let lat = Lattice::filled(8, 8, 1).unwrap();
        let a = gibbs_sweep(ModelParams::ising(0.4), &lat, 5);
        let b = gibbs_sweep(ModelParams::ising(0.4), &lat, 5);
        assert_eq!(a, b);
    }

    #[test]
    fn zero_theta_sweep_forgets_start() {
        let lat = Lattice::filled(4, 4, 1).unwrap();
        let mut plus = [0usize; 16];
        let reps = 20_000;
        for s in 0..reps {
            let out = gibbs_sweep(ModelParams::default(), &lat, s);
            for (c, &y) in plus.iter_mut().zip(out.spins()) {
                *c += usize::from(y > 0);
            }
        }
        for c in plus {
            assert!((c as f64 / reps as f64 - 0.5).abs() < 0.02);
        }
    }

    #[test]
    fn dataset_generation() {
        assert!(simulate_datasets(ModelParams::ising(0.4), 16, 16, 0, DataMethod::Exact, 1)
            .unwrap()
            .is_empty());
        let a = simulate_datasets(ModelParams::ising(0.4), 6, 5, 3, DataMethod::Gibbs { sweeps: 5 }, 2)
            .unwrap();
        let b = simulate_datasets(ModelParams::ising(0.4), 6, 5, 3, DataMethod::Gibbs { sweeps: 5 }, 2)
            .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        assert_ne!(a[0], a[1]);
        assert!(matches!(
            simulate_datasets(ModelParams::ising(0.4), 50, 50, 1, DataMethod::Exact, 1),
            Err(Error::UnsupportedSize { lag: 50, .. })
        ));
    }
}
