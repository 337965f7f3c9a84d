use lowcoh::*;
fn main() {
    let n = 60usize;
    for m in [6usize, 16] {
        println!("--- m={m}, n={n}, welch={:.4}", welch_bound(m, n).unwrap());
        let dict = Dictionary::identity(n).unwrap();
        for t in [0.2, 0.4, 0.6, 0.8] {
            for gamma in [0.6, 0.9, 0.95] {
                let params = EladParams { threshold: t, down_scale: gamma, iters: 100 };
                let mut mus = Vec::new();
                for seed in 0..3u64 {
                    match elad_projection(&dict, m, &params, seed) {
                        Ok(p) => {
                            let eff = normalize_columns(&DenseMatrix::from_dmatrix(p.as_dmatrix() * dict.as_dmatrix()).unwrap()).unwrap();
                            mus.push(mutual_coherence(&eff).unwrap());
                        }
                        Err(e) => { println!("  t={t} gamma={gamma}: ERROR {e}"); }
                    }
                }
                if !mus.is_empty() {
                    let mean: f64 = mus.iter().sum::<f64>() / mus.len() as f64;
                    println!("  t={t:4} gamma={gamma:5}: mean mu = {mean:.4}");
                }
            }
        }
    }
}
