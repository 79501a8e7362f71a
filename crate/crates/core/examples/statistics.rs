//! Correlation and t-tests with p-values computed from scratch.

use divcurate::analyze::{pearson, ttest_ind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let entropy = [2.1, 2.4, 2.2, 2.9, 3.1, 2.7, 3.3, 2.5];
    let quality = [0.41, 0.45, 0.40, 0.58, 0.61, 0.52, 0.66, 0.47];
    let c = pearson(&entropy, &quality)?;
    println!("pearson r = {:.4}, p = {:.3e}, n = {}", c.r, c.p_value, c.n);

    let base = [0.52, 0.55, 0.49, 0.51, 0.58, 0.50, 0.53];
    let tuned = [0.61, 0.57, 0.66, 0.59, 0.63, 0.60, 0.65];
    for equal_variance in [true, false] {
        let t = ttest_ind(&base, &tuned, equal_variance)?;
        let name = if equal_variance { "Student" } else { "Welch" };
        println!("{name:<7} t = {:+.4}, df = {:.2}, p = {:.3e}", t.t_statistic, t.df, t.p_value);
    }
    Ok(())
}
