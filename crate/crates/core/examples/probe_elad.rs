use lowcoh::*;
use nalgebra::SymmetricEigen;
fn main() {
    let n = 60usize;
    let m = 6usize;
    let dict = Dictionary::identity(n).unwrap();
    let params = EladParams::default();
    // Re-create the loop manually with diagnostics.
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let mut p = DenseMatrix::standard_normal(m, n, &mut rng).unwrap().into_dmatrix();
    for it in 0..params.iters {
        let pd = &p * dict.as_dmatrix();
        let mut min_norm = f64::INFINITY;
        let mut min_idx = 0;
        for j in 0..n {
            let nn = pd.column(j).norm();
            if nn < min_norm { min_norm = nn; min_idx = j; }
        }
        if min_norm < 1e-12 {
            println!("iter {it}: column {min_idx} norm {min_norm:e}");
            break;
        }
        let eff = normalize_columns(&DenseMatrix::from_dmatrix(pd).unwrap()).unwrap();
        let shrunk = elad_shrink(&eff.gram(), &params).into_dmatrix();
        let sym = (&shrunk + shrunk.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym.clone());
        let mut evs: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        evs.sort_by(|a, b| b.total_cmp(a));
        if it < 3 || it % 20 == 0 {
            println!("iter {it}: mu={:.4} top6 evs: {:?}", mutual_coherence(&eff).unwrap(), &evs[..7.min(evs.len())].iter().map(|v| (v*100.0).round()/100.0).collect::<Vec<_>>());
        }
        // rank-m sqrt factor
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mut s = nalgebra::DMatrix::zeros(m, n);
        for (row, &idx) in order.iter().take(m).enumerate() {
            let lam = eig.eigenvalues[idx].max(0.0);
            for col in 0..n { s[(row, col)] = lam.sqrt() * eig.eigenvectors[(col, idx)]; }
        }
        p = s; // D = I so least squares projection is S itself
    }
    println!("done");
}
