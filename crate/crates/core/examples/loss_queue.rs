//! Multi-class resource loss queue: the normalization-constant recursion,
//! its reduction to Erlang B for unit demands, and per-class loss when two
//! classes with different demands share the pool.

use nru_offload::pmf::DiscretePmf;
use nru_offload::resq::{class_loss, erlang_b, ClassSpec, GTable, QueueSpec};

fn main() {
    // unit demands: the queue collapses to Erlang B
    println!("Erlang-B reduction (K = R, unit demands):");
    for (k, rho) in [(5usize, 2.0f64), (10, 8.0), (20, 25.0)] {
        let spec = QueueSpec {
            k_max: k,
            r_max: k,
            service_rate: 1.0,
            classes: vec![ClassSpec {
                arrival_rate: rho,
                demand: DiscretePmf::delta(1),
            }],
        };
        let table = GTable::build(&spec).unwrap();
        let loss = class_loss(&table, &spec.classes[0].demand, k, k);
        let b = erlang_b(rho, k);
        println!("  K={k:2} rho={rho:4.1}: recursion {loss:.10}, Erlang B {b:.10}");
    }

    // two classes, demands 1 and 4: the heavy class is blocked far more often
    let light = DiscretePmf::delta(1);
    let heavy = DiscretePmf::delta(4);
    let spec = QueueSpec {
        k_max: 10,
        r_max: 12,
        service_rate: 1.0,
        classes: vec![
            ClassSpec { arrival_rate: 4.0, demand: light.clone() },
            ClassSpec { arrival_rate: 1.5, demand: heavy.clone() },
        ],
    };
    let table = GTable::build(&spec).unwrap();
    println!("\nshared pool, K=10 sessions, R=12 units:");
    println!(
        "  light class (1 unit):  loss {:.6}",
        class_loss(&table, &light, spec.k_max, spec.r_max)
    );
    println!(
        "  heavy class (4 units): loss {:.6}",
        class_loss(&table, &heavy, spec.k_max, spec.r_max)
    );
    println!(
        "  empty-queue probability {:.6}",
        table.stationary(0, 0, spec.k_max, spec.r_max)
    );
}
