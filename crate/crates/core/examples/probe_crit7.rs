use lowcoh::*;
fn main() {
    let n = 60usize;
    for m in [6usize, 10, 16] {
        let welch = welch_bound(m, n).unwrap();
        let reps = 5u64;
        let mean = |mus: &[f64]| mus.iter().sum::<f64>() / mus.len() as f64;
        let mut dmcm_mus = Vec::new();
        for s in 0..reps { let (mm, _) = dmcm_design(m, n, &ContinuationSchedule::default(), s).unwrap(); dmcm_mus.push(mutual_coherence(&mm).unwrap()); }
        println!("m={m:2} welch={welch:.4} dmcm={:.4}", mean(&dmcm_mus));
        let eval = |p: &DenseMatrix, dict: &Dictionary| {
            let eff = normalize_columns(&DenseMatrix::from_dmatrix(p.as_dmatrix() * dict.as_dmatrix()).unwrap()).unwrap();
            mutual_coherence(&eff).unwrap()
        };
        for t in [0.15, 0.2, 0.3, 0.4] { for g in [0.9, 0.95] {
            let params = EladParams { threshold: t, down_scale: g, iters: 100 };
            let mut mus = Vec::new();
            for s in 0..reps {
                let dict = Dictionary::random_rotation(n, 1000 + s).unwrap();
                let p = elad_projection(&dict, m, &params, s).unwrap();
                mus.push(eval(&p, &dict));
            }
            println!("   elad t={t:4} g={g:4}: {:.4}", mean(&mus));
        }}
        let mut xu_mus = Vec::new();
        let mut du_mus = Vec::new();
        let mut ra_mus = Vec::new();
        for s in 0..reps {
            let dict = Dictionary::random_rotation(n, 1000 + s).unwrap();
            xu_mus.push(eval(&xu_projection(&dict, m, &XuParams::default(), s).unwrap(), &dict));
            du_mus.push(eval(&duarte_projection(&dict, m).unwrap(), &dict));
            ra_mus.push(eval(&random_projection(m, n, s).unwrap(), &dict));
        }
        println!("   xu    : {:.4}\n   duarte: {:.4}\n   random: {:.4}", mean(&xu_mus), mean(&du_mus), mean(&ra_mus));
    }
}
