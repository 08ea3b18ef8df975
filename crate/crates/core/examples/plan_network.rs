//! Mode assignment and widest route over a small relay network.
//!
//! cargo run --example plan_network

use hqkd::planner::{best_path, Network, PlanStatus, QLink};

pub fn main() -> hqkd::Result<()> {
    let net = Network {
        links: vec![
            QLink::new("metro-1", "alice", "relay-a", 3.0, 0.012),
            QLink::new("metro-2", "relay-a", "bob", 5.0, 0.012),
            QLink::new("long-haul", "alice", "relay-b", 38.0, 0.03),
            QLink::new("tail", "relay-b", "bob", 2.0, 0.012),
            QLink::new("direct", "alice", "bob", 22.0, 0.03),
        ],
        src: "alice".into(),
        dst: "bob".into(),
    };
    let plan = best_path(&net, &net.src, &net.dst)?;
    for l in &plan.links {
        println!(
            "{:<10} {:?}  {:>12.1} bit/s  (cv {:.1}, dv {:.1})",
            l.id, l.mode, l.rate_bps, l.cv_bps, l.dv_bps
        );
    }
    match (&plan.status, &plan.route) {
        (PlanStatus::Routed, Some(r)) => {
            println!("route {} via {:?}, bottleneck {:.1} bit/s", r.nodes.join(" -> "), r.links, r.bottleneck_bps)
        }
        _ => println!("no route"),
    }
    Ok(())
}
