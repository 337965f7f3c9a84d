use lowcoh::*;
fn main() {
    let n = 60usize;
    let d = 30usize;
    for m in [6usize, 8, 10, 12, 14, 16] {
        let mean = |mus: &[f64]| mus.iter().sum::<f64>() / mus.len() as f64;
        let reps = 3u64;
        let mut pd_mus = Vec::new();
        let mut m_mus = Vec::new();
        let mut gaps = Vec::new();
        let mut ra_mus = Vec::new();
        for s in 0..reps {
            let dict = Dictionary::random_gaussian(d, n, 500 + s).unwrap();
            let (mm, p, _) = dmcmp_continuation(&dict, m, &AmSchedule::default(), s).unwrap();
            let eff = normalize_columns(&DenseMatrix::from_dmatrix(p.as_dmatrix() * dict.as_dmatrix()).unwrap()).unwrap();
            let mu_pd = mutual_coherence(&eff).unwrap();
            let mu_m = mutual_coherence(&mm).unwrap();
            pd_mus.push(mu_pd);
            m_mus.push(mu_m);
            gaps.push((mu_pd - mu_m).abs());
            let rp = random_projection(m, d, s).unwrap();
            let reff = normalize_columns(&DenseMatrix::from_dmatrix(rp.as_dmatrix() * dict.as_dmatrix()).unwrap()).unwrap();
            ra_mus.push(mutual_coherence(&reff).unwrap());
        }
        println!(
            "m={m:2} welch={:.4} dmcmp_pd={:.4} dmcmp_m={:.4} max_gap={:.2e} random={:.4}",
            welch_bound(m, n).unwrap(), mean(&pd_mus), mean(&m_mus),
            gaps.iter().cloned().fold(0.0, f64::max), mean(&ra_mus)
        );
    }
}
