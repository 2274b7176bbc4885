use palmnut::phantom::*;

fn main() {
    let p = make_phantom(64, 64, PhantomKind::Ellipses).unwrap();
    let tissue = p.background_mask.iter().filter(|&&b| b).count();
    println!("64x64 tissue count: {tissue} (fraction {:.3})", tissue as f64 / 4096.0);
    let truth = p.complex_image();
    for sigma in [0.04, 0.05, 0.06, 0.07, 0.08] {
        let noisy = add_noise(&truth, sigma, 42).unwrap();
        let e = nrmse(&noisy, &truth, &p.background_mask).unwrap();
        println!("sigma {sigma}: input NRMSE {:.4}", e);
    }
    // combine-scale
    let p2 = make_phantom(64, 128, PhantomKind::Ellipses).unwrap();
    let t2 = p2.background_mask.iter().filter(|&&b| b).count();
    println!("64x128 tissue: {t2} (fraction {:.3})", t2 as f64 / 8192.0);
}
