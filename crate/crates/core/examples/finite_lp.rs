//! The bounded TPR-FPR problem on a finite input space as a linear program,
//! and the threshold structure of its solution.
//!
//! cargo run --example finite_lp

use ood_reject::finite_lp::{fpr_cap_for_precision, solve, verify_band_structure, LpInstance, LpItem, LpStatus};
use ood_reject::synth_world::SyntheticSetup;

fn main() -> ood_reject::Result<()> {
    // Discretize the synthetic world into 40 bins on [-5, 6].
    let setup = SyntheticSetup::default_world();
    let (lo, hi, bins) = (-5.0, 6.0, 40);
    let w = (hi - lo) / bins as f64;
    let items: Vec<LpItem> = (0..bins)
        .map(|k| {
            let x = lo + (k as f64 + 0.5) * w;
            LpItem {
                p_id: setup.pdf_id(x) * w,
                p_ood: setup.pdf_ood(x) * w,
                risk_mass: setup.risk_density(x) * w,
            }
        })
        .collect();

    for (phi, rho) in [(0.7, 0.2), (0.85, 0.5), (0.95, 0.05)] {
        let inst = LpInstance::new(items.clone(), phi, rho)?;
        let sol = solve(&inst)?;
        if sol.status == LpStatus::Infeasible {
            println!("phi_min {phi}, rho_max {rho}: infeasible");
            continue;
        }
        let band = verify_band_structure(&inst, &sol)?;
        let accepted: Vec<usize> = (0..bins).filter(|&k| sol.acceptance[k] > 0.0).collect();
        println!("phi_min {phi}, rho_max {rho}: selective risk {:.4}", sol.objective);
        println!("  {band}");
        println!("  accepted bins {accepted:?}");
    }

    let rho = fpr_cap_for_precision(setup.pi, 0.9, 0.7);
    println!("\nprecision 0.9 at recall 0.7 is the FPR cap {rho:.4}");
    Ok(())
}
