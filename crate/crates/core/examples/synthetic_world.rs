//! Exact quantities of the synthetic Gaussian world: densities, the Bayes
//! classifier, its conditional risk and the OOD/ID likelihood ratio.
//!
//! cargo run --example synthetic_world

use ood_reject::synth_world::{Label, SyntheticSetup};

fn main() -> ood_reject::Result<()> {
    let setup = SyntheticSetup::default_world();
    println!("{} ID classes, OOD prior {}", setup.num_classes(), setup.pi);
    println!("{:>6} {:>10} {:>10} {:>6} {:>8} {:>10}", "x", "p_I", "p_O", "h(x)", "r(x)", "g(x)");
    for x in [-3.0, -1.0, 0.0, 1.0, 2.0, 3.0, 5.0] {
        let (r, g) = setup.scores(x);
        println!(
            "{x:>6.1} {:>10.6} {:>10.6} {:>6} {r:>8.5} {g:>10.5}",
            setup.pdf_id(x),
            setup.pdf_ood(x),
            setup.bayes_classifier(x)?,
        );
    }

    let samples = setup.sample(10_000, 7);
    let ood = samples.iter().filter(|s| s.label == Label::Ood).count();
    println!("\n10000 samples, seed 7: {ood} OOD");
    let scored = setup.score_samples(&samples)?;
    let errors: f64 = scored.samples().iter().map(|s| s.loss).sum();
    println!("Bayes error on the ID part: {:.4}", errors / scored.num_id() as f64);
    Ok(())
}
