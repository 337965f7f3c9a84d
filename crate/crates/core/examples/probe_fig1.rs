use lowcoh::*;
fn main() {
    let n = 60;
    for m in [6usize, 10, 16] {
        let dict = Dictionary::identity(n).unwrap();
        let mut line = format!("m={m:2}  welch={:.4}", welch_bound(m, n).unwrap());
        // elad
        let p = elad_projection(&dict, m, &EladParams::default(), 1).unwrap();
        let eff = normalize_columns(&DenseMatrix::from_dmatrix(p.as_dmatrix() * dict.as_dmatrix()).unwrap()).unwrap();
        line += &format!("  elad={:.4}", mutual_coherence(&eff).unwrap());
        // xu
        let p = xu_projection(&dict, m, &XuParams::default(), 1).unwrap();
        let eff = normalize_columns(&DenseMatrix::from_dmatrix(p.as_dmatrix() * dict.as_dmatrix()).unwrap()).unwrap();
        line += &format!("  xu={:.4}", mutual_coherence(&eff).unwrap());
        // duarte
        let p = duarte_projection(&dict, m).unwrap();
        let eff = normalize_columns(&DenseMatrix::from_dmatrix(p.as_dmatrix() * dict.as_dmatrix()).unwrap()).unwrap();
        line += &format!("  duarte={:.4}", mutual_coherence(&eff).unwrap());
        // random
        let p = random_projection(m, n, 1).unwrap();
        let eff = normalize_columns(&DenseMatrix::from_dmatrix(p.as_dmatrix() * dict.as_dmatrix()).unwrap()).unwrap();
        line += &format!("  random={:.4}", mutual_coherence(&eff).unwrap());
        // dmcm default budget
        let (mm, _) = dmcm_design(m, n, &ContinuationSchedule::default(), 1).unwrap();
        line += &format!("  dmcm={:.4}", mutual_coherence(&mm).unwrap());
        println!("{line}");
    }
}
