//! Post-hoc tuning on a score file: single-score sweeps and the double-score
//! angular grid under TPR-FPR and precision-recall targets.
//!
//! cargo run --release --example tune_scores [scores.csv]
//!
//! Without an argument a 20000-sample synthetic score file is generated.

use ood_reject::posthoc::{double_score_grid, tune_prec_recall, tune_tpr_fpr, ScoreSelector, TuningTargets};
use ood_reject::scorefile::load_scores;
use ood_reject::synth_world::SyntheticSetup;
use ood_reject::Error;

fn main() -> ood_reject::Result<()> {
    let dataset = match std::env::args().nth(1) {
        Some(path) => load_scores(path.as_ref())?,
        None => {
            let setup = SyntheticSetup::default_world();
            setup.score_samples(&setup.sample(20_000, 1))?
        }
    };
    println!("{} rows ({} OOD), score_g: {}", dataset.len(), dataset.num_ood(), dataset.has_score_g());

    let t = TuningTargets::tpr_fpr(0.7, 0.2);
    let k = TuningTargets::prec_recall(0.7, 0.9);
    let pi = dataset.pi();
    let mut selectors = vec![("score_r", ScoreSelector::R)];
    if dataset.has_score_g() {
        selectors.push(("score_g", ScoreSelector::G));
        selectors.push(("r+0.2g", ScoreSelector::Mixed(0.2)));
    }
    for (name, sel) in selectors {
        for (label, res) in [
            ("TPR .7/FPR .2", tune_tpr_fpr(&dataset, &[sel], t)),
            ("Prec .9/Rec .7", tune_prec_recall(&dataset, &[sel], k, pi)),
        ] {
            match res {
                Ok(p) => println!(
                    "{name:>8} {label}: risk {:.4} at TPR {:.4} FPR {:.4}, lambda {:.5}",
                    p.selective_risk()?,
                    p.tpr,
                    p.fpr,
                    p.rule.lambda
                ),
                Err(Error::Infeasible(f)) => println!("{name:>8} {label}: unable ({f})"),
                Err(e) => return Err(e),
            }
        }
    }
    if dataset.has_score_g() {
        let best = double_score_grid(&dataset, t, 360)?;
        let rule = best.rule.to_selective_rule();
        println!(
            "  double TPR .7/FPR .2: risk {:.4} at TPR {:.4} FPR {:.4}, {:?}",
            best.selective_risk()?,
            best.tpr,
            best.fpr,
            rule.map(|r| (r.mu, r.lambda))
        );
    }
    Ok(())
}
