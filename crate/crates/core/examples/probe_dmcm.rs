use lowcoh::*;
fn main() {
    let n = 60usize;
    for m in [6usize, 10, 16] {
        let welch = welch_bound(m, n).unwrap();
        for (label, sched) in [
            ("default(15/1000)", ContinuationSchedule::default()),
            ("slow eta 1.05", ContinuationSchedule { eta: 1.05, ..Default::default() }),
            ("inner100/outer150", ContinuationSchedule { inner_iters: 100, outer_iters: 150, ..Default::default() }),
            ("eta1.05 inner50 outer300", ContinuationSchedule { eta: 1.05, inner_iters: 50, outer_iters: 300, ..Default::default() }),
        ] {
            let mut mus = Vec::new();
            for seed in 0..3u64 {
                let (mm, _) = dmcm_design(m, n, &sched, seed).unwrap();
                mus.push(mutual_coherence(&mm).unwrap());
            }
            let mean: f64 = mus.iter().sum::<f64>() / mus.len() as f64;
            println!("m={m:2} welch={welch:.4} {label:26} mean mu = {mean:.4}");
        }
    }
}
