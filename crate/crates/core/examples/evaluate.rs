//! Detection metrics on hand-written score lists: AUROC, the 95% TPR
//! threshold, per-sample decisions and the JSON report.

use ncdd::metrics::{accepted_fraction, auroc, decide, evaluate, threshold_at_tpr};

fn main() -> ncdd::Result<()> {
    let id: Vec<f64> = (1..=20).map(|i| i as f64 * 0.5).collect();
    let ood = vec![-1.0, 0.2, 0.5, 1.0, 3.25, 12.0];

    let lambda = threshold_at_tpr(&id, 0.95)?;
    println!("lambda at 95% TPR: {lambda}");
    println!("ID kept: {:.2}", accepted_fraction(&id, lambda));
    println!("OOD let through: {:.4}", accepted_fraction(&ood, lambda));
    println!("AUROC: {:.4}", auroc(&id, &ood)?);

    println!();
    for s in &ood {
        println!("  score {s:>6}: {:?}", decide(*s, lambda));
    }

    // a score equal to the threshold counts as OOD
    println!("  score {lambda:>6}: {:?}", decide(lambda, lambda));

    let report = evaluate(&id, &ood, 0.95, None)?;
    println!("\n{}", serde_json::to_string_pretty(&report).expect("serializable"));
    Ok(())
}
