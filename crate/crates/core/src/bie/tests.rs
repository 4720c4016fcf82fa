use std::f64::consts::PI;
use std::sync::Arc;

use super::*;
use crate::kernel::Lattice;

fn kernel() -> Arc<PeriodicKernel<f64>> {
    Arc::new(PeriodicKernel::new(Lattice::unit(), 1e-12).unwrap())
}

fn center() -> Vec2<f64> {
    Vec2::new(0.5, 0.5)
}

fn disk() -> ShapeSpec<f64> {
    ShapeSpec::<f64>::Disk { radius: 1.0 }
}

fn t1() -> DirichletDatum<f64> {
    DirichletDatum {
        constant: 0.0,
        cos: vec![1.0],
        sin: vec![],
    }
}

fn cos_source() -> PeriodicSource<f64> {
    PeriodicSource::cosine(Lattice::unit(), [1, 0], 1.0).unwrap()
}

fn problem(g: DirichletDatum<f64>, f: PeriodicSource<f64>) -> DirichletProblem<f64> {
    DirichletProblem::new(kernel(), disk(), center(), g, f)
}

fn laplacian(f: impl Fn(Vec2<f64>) -> f64, x: Vec2<f64>, h: f64) -> f64 {
    (f(x + Vec2::new(h, 0.0))
        + f(x - Vec2::new(h, 0.0))
        + f(x + Vec2::new(0.0, h))
        + f(x - Vec2::new(0.0, h))
        - 4.0 * f(x))
        / (h * h)
}

#[test]
fn system_shape_and_diagonal() {
    let k = kernel();
    let curve = disk().curve(128).unwrap();
    let scaled = curve.scaled(k.lattice(), center(), 0.1).unwrap();
    let m = assemble_periodic_system(&k, &scaled).unwrap();
    assert_eq!((m.rows(), m.cols()), (129, 129));
    // free-space diagonal κ w / (4π) with κ = 1/ε and w = ε·(2π/N)
    let w = scaled.weights()[0];
    let kappa = scaled.curvatures()[0];
    assert!((kappa - 10.0).abs() < 1e-12);
    assert!((m.get(0, 0) + 0.5 - kappa * w / (4.0 * PI)).abs() < 1e-15);
    assert_eq!(m.get(128, 128), 0.0);
    assert_eq!(m.get(5, 128), 1.0);
}

#[test]
fn constants_are_reproduced() {
    let c = 0.7;
    let p = problem(
        DirichletDatum::constant(c),
        PeriodicSource::empty(Lattice::unit()),
    );
    for eps in [0.05, 0.1, 0.2] {
        let r = p.solve(eps).unwrap();
        assert!((r.xi - c).abs() < 1e-10);
        assert!(r.density.max_abs() < 1e-10);
        assert!(r.residual < 1e-8);
        let u = r.layer().double_layer(Vec2::new(0.1, 0.1)).unwrap() + r.xi;
        assert!((u - c).abs() < 1e-10);
    }
}

#[test]
fn pure_source_problem() {
    let p = problem(DirichletDatum::constant(0.0), cos_source());
    let r = p.solve(0.1).unwrap();
    assert!(r.residual < 1e-8);
    assert!(r.density.integral().abs() < 1e-12);
    // u = 0 on the hole, checked off the nodes through the near-field evaluator
    for phi in [0.05, 1.0, 2.5] {
        let t = disk().point(phi).x * (1.0 + 1e-3);
        let x = center() + t * 0.1;
        let u = r.layer().double_layer(x).unwrap() + r.xi + r.source.eval_pq(x);
        assert!(u.abs() < 2e-4, "u = {u}");
    }
    // u − P_q[f] is harmonic off the holes
    let w = |y: Vec2<f64>| r.layer().double_layer(y).unwrap();
    assert!(laplacian(w, Vec2::new(0.15, 0.15), 1e-3).abs() < 1e-4);
    assert!(laplacian(w, Vec2::new(0.5, 0.68), 1e-3).abs() < 1e-4);
}

#[test]
fn nystrom_self_convergence() {
    let p = problem(t1(), cos_source());
    let a = p.solve_with(0.1, 128).unwrap();
    let b = p.solve_with(0.1, 256).unwrap();
    assert!((a.xi - b.xi).abs() < 1e-10, "{} vs {}", a.xi, b.xi);
}

#[test]
fn mismatched_lattice_is_rejected() {
    let f = PeriodicSource::cosine(Lattice::new(2.0, 1.0).unwrap(), [1, 0], 1.0).unwrap();
    assert!(matches!(
        problem(t1(), f).solve(0.1),
        Err(Error::InvalidSource(_))
    ));
}

#[test]
fn escaping_hole_is_rejected() {
    let r = problem(t1(), PeriodicSource::empty(Lattice::unit())).solve(0.6);
    assert!(matches!(r, Err(Error::Containment { .. })));
}

#[test]
fn tau0_of_disk_and_ellipse() {
    let tau = compute_tau0(&disk().curve(128).unwrap()).unwrap();
    assert!(tau
        .values
        .iter()
        .all(|v| (v - 1.0 / (2.0 * PI)).abs() < 1e-9));
    assert!((tau.integral() - 1.0).abs() < 1e-10);
    let e = ShapeSpec::<f64>::Ellipse { a: 2.0, b: 1.0 }
        .curve(128)
        .unwrap();
    let tau = compute_tau0(&e).unwrap();
    assert!((tau.integral() - 1.0).abs() < 1e-10);
    let n = 128;
    for i in 0..n {
        // θ ↦ π − θ reflects t₁, θ ↦ −θ reflects t₂
        let mirror1 = (3 * n / 2 - i) % n;
        let mirror2 = (n - i) % n;
        assert!((tau.values[i] - tau.values[mirror1]).abs() < 1e-8);
        assert!((tau.values[i] - tau.values[mirror2]).abs() < 1e-8);
    }
}

#[test]
fn limiting_equation_closed_forms() {
    let curve = disk().curve(128).unwrap();
    let c = vec![0.3; 128];
    let lim = solve_limiting_equation(&curve, &c, 0.0).unwrap();
    assert!(lim.theta_tilde.max_abs() < 1e-12);
    assert!((lim.xi_tilde - 0.3).abs() < 1e-12);

    let g0 = t1().sample(&curve);
    let lim = solve_limiting_equation(&curve, &g0, 0.0).unwrap();
    assert!(lim.xi_tilde.abs() < 1e-12);
    for (i, v) in lim.theta_tilde.values.iter().enumerate() {
        assert!((v + 2.0 * curve.theta(i).cos()).abs() < 1e-10);
    }
    assert!((eval_u_tilde(&lim, Vec2::new(2.0, 0.0)).unwrap() - 0.5).abs() < 1e-8);
    let near = eval_u_tilde(&lim, Vec2::new(2.0, 0.0)).unwrap();
    let far = eval_u_tilde(&lim, Vec2::new(10.0, 0.0)).unwrap();
    assert!(far.abs() <= near.abs() * 0.2 + 1e-12);
    assert!(matches!(
        eval_u_tilde(&lim, Vec2::new(0.2, 0.0)),
        Err(Error::InsideHole(_))
    ));

    let pq = cos_source().eval_pq(center());
    assert!((pq - 1.0 / (4.0 * PI * PI)).abs() < 1e-16);
    let lim = solve_limiting_equation(&curve, &g0, pq).unwrap();
    assert!((lim.xi_tilde + 1.0 / (4.0 * PI * PI)).abs() < 1e-12);
    assert!((lim.xi_tilde - lim.xi_tilde_closed_form).abs() < 1e-12);

    let zero = solve_limiting_equation(&curve, &[0.0; 128], 0.0).unwrap();
    assert_eq!(eval_u_tilde(&zero, Vec2::new(2.0, 0.0)).unwrap(), 0.0);
}

#[test]
fn limit_matches_problem_limit() {
    let p = problem(t1(), cos_source());
    let lim = p.limit().unwrap();
    assert!((lim.xi_tilde + 1.0 / (4.0 * PI * PI)).abs() < 1e-12);
    // the periodic solve at small ε approaches the limiting constant
    let r = p.solve(0.0125).unwrap();
    assert!((r.xi - lim.xi_tilde).abs() < 1e-3);
}

#[test]
fn double_layer_properties() {
    let k = kernel();
    let curve = disk().curve(64).unwrap();
    let scaled = curve.scaled(k.lattice(), center(), 0.1).unwrap();
    let zero = vec![0.0; 64];
    assert_eq!(
        eval_wq(&k, &scaled, &zero, Vec2::new(0.1, 0.1)).unwrap(),
        0.0
    );
    assert_eq!(
        eval_vq(&k, &scaled, &zero, Vec2::new(0.1, 0.1)).unwrap(),
        0.0
    );
    let mu: Vec<f64> = (0..64).map(|i| curve.theta(i).cos()).collect();
    let x = Vec2::new(0.1, 0.1);
    let a = eval_wq(&k, &scaled, &mu, x).unwrap();
    let b = eval_wq(&k, &scaled, &mu, x + Vec2::new(1.0, 0.0)).unwrap();
    assert!((a - b).abs() < 1e-12);
    let layer = LayerEvaluator::new(Some(k.clone()), curve.clone(), center(), 0.1, mu.clone());
    let lap = laplacian(
        |y| layer.double_layer(y).unwrap(),
        Vec2::new(0.15, 0.15),
        1e-3,
    );
    assert!(lap.abs() < 1e-4, "laplacian {lap}");
}

#[test]
fn single_layer_properties() {
    let k = kernel();
    let curve = disk().curve(64).unwrap();
    let scaled = curve.scaled(k.lattice(), center(), 0.1).unwrap();
    let ones = vec![1.0; 64];
    let x = Vec2::new(0.2, 0.9);
    let direct: f64 = scaled
        .nodes()
        .iter()
        .zip(scaled.weights())
        .map(|(y, w)| k.eval_sqn(x - *y).unwrap() * w)
        .sum();
    assert!((eval_vq(&k, &scaled, &ones, x).unwrap() - direct).abs() < 1e-13);
    // continuity across the boundary
    let mu: Vec<f64> = (0..64).map(|i| 1.0 + curve.theta(i).sin()).collect();
    let layer = LayerEvaluator::new(Some(k.clone()), curve.clone(), center(), 0.1, mu);
    let s = center() + scaled.nodes()[7] - center();
    let n = scaled.normals()[7];
    let mut prev = f64::INFINITY;
    for h in [1e-2, 1e-3, 1e-4] {
        let gap =
            (layer.single_layer(s + n * h).unwrap() - layer.single_layer(s - n * h).unwrap()).abs();
        assert!(gap < prev);
        prev = gap;
    }
    assert!(prev < 1e-4);
}

#[test]
fn jump_relation() {
    let k = kernel();
    let curve = ShapeSpec::<f64>::Ellipse { a: 1.0, b: 0.7 }
        .curve(128)
        .unwrap();
    let mu: Vec<f64> = (0..128)
        .map(|i| (curve.theta(i)).cos() + 0.5 * (3.0 * curve.theta(i)).sin() + 0.2)
        .collect();
    let eps = 0.2;
    let layer = LayerEvaluator::new(Some(k), curve.clone(), center(), eps, mu.clone());
    for i in (0..128).step_by(8) {
        let y = center() + curve.nodes()[i] * eps;
        let n = curve.normals()[i];
        // quadratic extrapolation of the one-sided limits from offsets h, 2h, 4h
        let h = 2e-3 * eps;
        let side = |sign: f64| {
            let at = |k: f64| layer.double_layer(y + n * (sign * k * h)).unwrap();
            (8.0 * at(1.0) - 6.0 * at(2.0) + at(4.0)) / 3.0
        };
        let jump = side(-1.0) - side(1.0);
        assert!(
            (jump - mu[i]).abs() < 1e-6,
            "node {i}: jump {jump} vs {}",
            mu[i]
        );
    }
}
