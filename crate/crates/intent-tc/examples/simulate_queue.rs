//! Run the queueing digital twin and freeze its metrics into a semantic
//! model of certified thresholds.

use intent_tc::queue_twin::{analytic_waits, build_semantic_model, simulate, QueueParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Two-class priority M/M/1/K: high-priority packets always depart
    // first, low-priority packets absorb the queueing and the drops.
    let params = QueueParams {
        lambda_high: 6.0,
        lambda_low: 12.0,
        mu_high: 20.0,
        mu_low: 20.0,
        capacity: 30,
        horizon: 3600.0,
        seed: 7,
    };

    let metrics = simulate(&params)?;
    let (analytic_high, analytic_low) = analytic_waits(&params)?;

    println!("offered load rho = {:.2}", params.utilization());
    println!();
    println!("              simulated   analytic (infinite-K)");
    println!("wait high     {:>8.4}s   {:>8.4}s", metrics.avg_wait_high, analytic_high);
    println!("wait low      {:>8.4}s   {:>8.4}s", metrics.avg_wait_low, analytic_low);
    println!("drop high     {:>8.4}", metrics.drop_rate_high);
    println!("drop low      {:>8.4}", metrics.drop_rate_low);
    println!("utilization   {:>8.4}", metrics.u_actual);
    println!();

    // Conservation holds exactly per class: every offered packet is
    // served, dropped, or still queued at the horizon.
    println!(
        "high: {} offered = {} served + {} dropped + {} residual",
        metrics.offered_high, metrics.served_high, metrics.dropped_high, metrics.residual_high
    );
    println!(
        "low:  {} offered = {} served + {} dropped + {} residual",
        metrics.offered_low, metrics.served_low, metrics.dropped_low, metrics.residual_low
    );
    println!();

    let model = build_semantic_model(&params)?;
    println!("semantic model thresholds:");
    for bound in model.threshold_bounds() {
        println!("  {bound}");
    }
    Ok(())
}
