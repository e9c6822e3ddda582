//! ROC, PR, risk-coverage-at-FPR and CCR-FPR curves for single scores and
//! the double-score family, with their areas, written as CSV and SVG.
//!
//! cargo run --release --example curves [out_dir]

use std::path::PathBuf;

use ood_reject::curves::{double_family_areas, envelope_curves, rc_at_fpr, roc_curve, Family};
use ood_reject::posthoc::ScoreSelector;
use ood_reject::synth_world::SyntheticSetup;
use ood_reject::{curves, svg};

fn main() -> ood_reject::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "curves_example".into()));
    std::fs::create_dir_all(&out).map_err(|e| ood_reject::Error::Io {
        path: out.clone(),
        source: e,
    })?;
    let setup = SyntheticSetup::default_world();
    let dataset = setup.score_samples(&setup.sample(20_000, 1))?;
    let pi = setup.pi;

    for sel in [ScoreSelector::R, ScoreSelector::G, ScoreSelector::Mixed(0.2)] {
        let fam = Family::Single(sel);
        let rc = rc_at_fpr(&dataset, &fam, 0.2)?;
        println!(
            "{:<22} AUROC {:.3}  AUPR {:.3}  OSCR {:.3}  max coverage at FPR .2: {:.3}",
            fam.label(),
            curves::auroc(&roc_curve(&dataset, &fam)?),
            curves::aupr(&curves::pr_curve(&dataset, &fam, pi)?),
            curves::oscr(&dataset, sel)?,
            rc.meta.phi_max.unwrap_or(0.0)
        );
    }
    let areas = double_family_areas(&dataset, 90, pi)?;
    println!(
        "{:<22} AUROC {:.3}  AUPR {:.3}  OSCR {:.3}",
        "double(d=90)", areas.auroc.0, areas.aupr.0, areas.oscr.0
    );

    let single = envelope_curves(&dataset, &Family::Single(ScoreSelector::R), pi, 0.2)?;
    let double = envelope_curves(&dataset, &Family::Double { d: 90 }, pi, 0.2)?;
    for (a, b) in [(&single.roc, &double.roc), (&single.rc, &double.rc)] {
        let name = a.kind.name();
        let path = out.join(format!("{name}.svg"));
        std::fs::write(&path, svg::line_chart(name, &[a, b])).map_err(|e| ood_reject::Error::Io { path, source: e })?;
    }
    println!("wrote roc.svg and rc_at_fpr.svg to {}", out.display());
    Ok(())
}
