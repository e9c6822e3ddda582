//! Optimal reject rules of the three models, evaluated by quadrature:
//! the cost-based rule, and thresholds on r + μ·g found for a TPR target.
//!
//! cargo run --release --example optimal_rules

use ood_reject::reject_models::{
    cost_mixing, cost_optimal_rule, invert_threshold, theoretical_report, SelectiveRule, Target,
};
use ood_reject::synth_world::SyntheticSetup;

fn main() -> ood_reject::Result<()> {
    let setup = SyntheticSetup::default_world();

    let rule = cost_optimal_rule(&setup);
    let rep = theoretical_report(&setup, &rule);
    println!(
        "cost-based (eps = {:?}): mu = {:.4}, lambda = {}",
        setup.costs,
        cost_mixing(&setup),
        rule.lambda
    );
    println!(
        "  expected cost {:.4}, TPR {:.4}, FPR {:.4}, selective risk {:.4}",
        rep.risk,
        rep.tpr,
        rep.fpr,
        rep.selective_risk()?
    );

    println!("\nrules r + mu*g <= lambda at TPR 0.7:");
    for mu in [0.0, 0.05, 0.2, 1.0, f64::INFINITY] {
        let lambda = invert_threshold(&setup, mu, Target::Tpr(0.7))?;
        let rule = if mu.is_infinite() {
            SelectiveRule::g_only(lambda)
        } else {
            SelectiveRule::new(mu, lambda)
        };
        let rep = theoretical_report(&setup, &rule);
        println!(
            "  mu = {mu:>5}: lambda = {lambda:.5}, FPR = {:.4}, selective risk = {:.4}, precision = {:.4}",
            rep.fpr,
            rep.selective_risk()?,
            rep.precision.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
