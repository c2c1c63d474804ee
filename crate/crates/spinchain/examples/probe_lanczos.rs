use spinchain::operator_core::{lanczos_extremal, Extremal};
use spinchain::string_analysis::string_energy;
use spinchain::transfer_chain::{hamiltonian_terms, Boundary};
use spinchain::ModelParams;
use std::time::Instant;

fn main() {
    for b in [0.3, 0.75] {
        for sites in [14usize, 16, 18] {
            let params = ModelParams::new(sites, 1.0, b, -1.0).unwrap();
            let h = hamiltonian_terms(&params, Boundary::Antiperiodic).compile();
            let es = string_energy(-std::f64::consts::FRAC_PI_2, &params);
            for tol in [1e-8, 1e-9] {
                let t0 = Instant::now();
                match lanczos_extremal(&h, Extremal::Lowest, tol, 7) {
                    Ok(r) => println!(
                        "b={b} sites={sites} tol={tol:e}: dE={:.6e} bound={:.2e} iters={} ({:.1}s)",
                        es - r.value,
                        r.residual_bound,
                        r.iterations,
                        t0.elapsed().as_secs_f64()
                    ),
                    Err(e) => println!(
                        "b={b} sites={sites} tol={tol:e}: FAIL {e} ({:.1}s)",
                        t0.elapsed().as_secs_f64()
                    ),
                }
            }
        }
    }
}
