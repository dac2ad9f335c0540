use discospec_core::*;
use discospec_core::forward::{eigenvalues, PropagatorConfig};
use std::time::Instant;

fn main() {
    let cfg = PropagatorConfig::default();
    let p = ProblemSpec::new(
        Potential::zero(), 0.0,
        BoundaryCondition::Robin(0.0),
        Transmission { a1: 2.0, a2: 0.0 },
    ).unwrap();
    let t = Instant::now();
    let spec = eigenvalues(&p, 100, &cfg).unwrap();
    println!("jump robin n<=100: {:?}", t.elapsed());
    let mut worst = 0.0f64;
    for e in &spec.values {
        let exact = (e.n as f64 * std::f64::consts::PI).powi(2);
        let rel = if exact > 0.0 { (e.lambda - exact).abs() / exact } else { e.lambda.abs() };
        if rel > worst { worst = rel; }
    }
    println!("worst rel err: {:.3e}", worst);

    // dirichlet jump: roots of cos k = -0.6
    let pd = p.with_right(BoundaryCondition::Dirichlet);
    let t = Instant::now();
    let specd = eigenvalues(&pd, 100, &cfg).unwrap();
    println!("jump dirichlet n<=100: {:?}", t.elapsed());
    let k0 = (-0.6f64).acos();
    let mut worst = 0.0f64;
    for e in &specd.values {
        let m = (e.n / 2) as f64;
        let exact_k = if e.n % 2 == 0 { 2.0*std::f64::consts::PI*m + k0 } else { 2.0*std::f64::consts::PI*(m+1.0) - k0 };
        let rel = (e.lambda.sqrt() - exact_k).abs() / exact_k;
        if rel > worst { worst = rel; }
    }
    println!("worst rel err sqrt: {:.3e}", worst);

    // smooth q high-n timing (for asymptotics criterion)
    let q = Potential::interpolated(|x| 1.0 + (2.0*std::f64::consts::PI*x).cos(), 64).unwrap();
    let ps = ProblemSpec::new(q, 0.3, BoundaryCondition::Robin(-0.2), Transmission{a1:2.0,a2:1.0}).unwrap();
    let t = Instant::now();
    let specs = eigenvalues(&ps, 100, &cfg).unwrap();
    println!("smooth q n<=100: {:?}", t.elapsed());
    let c = asymptotics::constants(&ps).unwrap();
    let r = asymptotics::residuals(&specs, &c).unwrap();
    println!("max |r_n| last quartile: {:.4}", r.max_abs_last_quartile);
    println!("even tail {:.5} odd tail {:.5} gap {:.5} expect 2w1/pi={:.5}",
        r.even_tail_mean, r.odd_tail_mean, r.even_tail_mean - r.odd_tail_mean,
        2.0*c.omega1.unwrap()/std::f64::consts::PI);

    // 3000 eigenvalues timing (for E-decay lattice)
    let t = Instant::now();
    let spec3k = eigenvalues(&ps, 3000, &cfg).unwrap();
    println!("smooth q n<=3000: {:?} (last lambda {:.1})", t.elapsed(), spec3k.values.last().unwrap().lambda);
}
