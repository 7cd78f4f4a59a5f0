use beltrami_core::field::catalog_lookup;
use beltrami_core::flow::{recurrence_experiment, RecurrenceOptions};

fn main() {
    let f = catalog_lookup("abc:1,0,-1").unwrap();
    let opts = RecurrenceOptions::default();
    for seed in [7u64, 42] {
        for t in [200.0, 400.0, 800.0] {
            let r = recurrence_experiment(&f, 300, t, 0.2, seed, &opts).unwrap();
            println!(
                "seed={seed} T={t}: fwd {:.3} bwd {:.3}",
                r.recurrent_fraction_forward, r.recurrent_fraction_backward
            );
        }
    }
}
