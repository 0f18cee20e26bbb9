//! Snapshot throughput at N = 8 with order-6 accumulation on one thread.

use std::time::Instant;

use shadowrdm::models::random_uccsd;
use shadowrdm::shadows::{collect_shadows, AcquisitionPlan};

fn main() {
    let (state, _) = random_uccsd(8, 0.1, 1).expect("state");
    let plan = AcquisitionPlan::new(50_000, 6, 3);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("pool");
    let t = Instant::now();
    let acc = pool.install(|| collect_shadows(&state, &plan)).expect("collect");
    let dt = t.elapsed().as_secs_f64();
    println!("{} snapshots in {dt:.3} s: {:.0} snapshots/s", acc.n_snapshots(), acc.n_snapshots() as f64 / dt);
}
