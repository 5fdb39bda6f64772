//! Build pseudorandom bipartite multigraph families and show the
//! construction chain: base graph, eigengap boosting by matrix powers,
//! padding to cover every power-of-2 size at uniform degree.
//!
//!     cargo run --release --example gen_expander

use oblidist::graph::{
    boost_power, build_base, family, pad_double_size, pad_same_size, spectral, BaseId,
    ExpanderParams,
};

fn main() {
    // The affine base: 8-regular on Z_m x Z_m, second eigenvalue modulus
    // at most 5*sqrt(2) ~ 7.071.
    let base = build_base(16, &BaseId::Affine).unwrap();
    let sv = spectral::dense_singular_values(&base);
    println!("affine base N=16: degree {}, second value {:.4} (bound 7.0711)", base.degree(), sv[1]);

    // Boosting squares the matrix: degree d^2, second value squared,
    // eigengap squared.
    let boosted = boost_power(&base, 2, 1 << 16).unwrap();
    let sv2 = spectral::dense_singular_values(&boosted);
    println!(
        "boosted k=2:     degree {}, second value {:.4} (= {:.4}^2)",
        boosted.degree(),
        sv2[1],
        sv[1]
    );

    // Padding doubles degree and all eigenvalues, preserving the gap; the
    // size-doubling variant fills the family's odd power-of-2 sizes.
    let same = pad_same_size(&base);
    let double = pad_double_size(&base);
    println!(
        "padded same:     N={} degree {};  padded double: N={} degree {}",
        same.n_per_side(),
        same.degree(),
        double.n_per_side(),
        double.degree()
    );

    // A full family member, built and certified in one call.
    let params = ExpanderParams::new(0.55, BaseId::SeededPermSum { degree: 16, seed: 7 }, 1);
    for n in [64usize, 256, 1024] {
        let g = family(&params, n).unwrap();
        let cert = spectral::verify_disc_spectral(&g, &Default::default()).unwrap();
        println!(
            "family n={n:<5} degree {} second {:.4} eigengap {:.3} passes(0.55)={}",
            g.degree(),
            cert.second,
            cert.eigengap,
            cert.passes(0.55)
        );
    }
}
