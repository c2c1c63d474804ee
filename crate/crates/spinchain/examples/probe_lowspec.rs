use spinchain::operator_core::{hermitian_eigs, lanczos_extremal, Extremal};
use spinchain::string_analysis::string_energy;
use spinchain::transfer_chain::{hamiltonian_terms, Boundary};
use spinchain::ModelParams;

fn main() {
    for b in [0.3, 0.75] {
        let params = ModelParams::new(10, 1.0, b, -1.0).unwrap();
        let h = hamiltonian_terms(&params, Boundary::Antiperiodic).compile();
        let dense = hermitian_eigs(&h.to_dense(true).unwrap()).unwrap();
        println!("b={b} lowest 8 levels:");
        for k in 0..8 {
            println!(
                "  E[{k}] = {:.15}  gap to E0 = {:.3e}",
                dense.values[k],
                dense.values[k] - dense.values[0]
            );
        }
        let es = string_energy(-std::f64::consts::FRAC_PI_2, &params);
        println!("  E_s(closed) = {es:.15}  delta = {:.6e}", es - dense.values[0]);
        for tol in [1e-6, 1e-8, 1e-10] {
            match lanczos_extremal(&h, Extremal::Lowest, tol, 7) {
                Ok(r) => println!(
                    "  lanczos tol {tol:e}: value err {:.3e} bound {:.3e} iters {}",
                    r.value - dense.values[0],
                    r.residual_bound,
                    r.iterations
                ),
                Err(e) => println!("  lanczos tol {tol:e}: {e}"),
            }
        }
    }
}
