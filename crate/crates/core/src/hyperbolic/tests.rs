use super::*;

fn c1() -> Curvature {
    Curvature::new(1.0).unwrap()
}

fn pt(v: &[f64]) -> BallPoint {
    BallPoint::new(v.to_vec(), c1()).unwrap()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn curvature_rejects_nonpositive() {
    assert!(Curvature::new(0.0).is_err());
    assert!(Curvature::new(-1.0).is_err());
    assert!(Curvature::new(f64::NAN).is_err());
    assert_eq!(Curvature::default().value(), 1.0);
}

#[test]
fn ball_point_rejects_outside() {
    assert!(BallPoint::new(vec![1.0, 0.0], c1()).is_err());
    assert!(BallPoint::new(vec![0.5, f64::INFINITY], c1()).is_err());
    let c4 = Curvature::new(4.0).unwrap();
    assert!(BallPoint::new(vec![0.6], c4).is_err());
    assert!(BallPoint::new(vec![0.4], c4).is_ok());
}

#[test]
fn mobius_add_identity_and_inverse() {
    let x = pt(&[0.2, -0.5, 0.1]);
    let zero = BallPoint::origin(3, c1());
    assert_eq!(mobius_add(&x, &zero).unwrap().coords(), x.coords());
    assert_eq!(mobius_add(&zero, &x).unwrap().coords(), x.coords());
    let inv = mobius_add(&x, &x.negate()).unwrap();
    assert!(inv.norm() < 1e-15);
}

#[test]
fn mobius_add_collinear_value() {
    // Collinear case: (a + b) / (1 + ab).
    let z = mobius_add(&pt(&[0.3, 0.0]), &pt(&[0.4, 0.0])).unwrap();
    assert!(close(z.coords(), &[0.7 / 1.12, 0.0], 1e-15));
    assert!((z.coords()[0] - 0.625).abs() < 1e-15);
}

#[test]
fn mobius_add_rejects_mismatch() {
    let x = pt(&[0.1, 0.2]);
    assert!(mobius_add(&x, &pt(&[0.1])).is_err());
    let y = BallPoint::new(vec![0.1, 0.2], Curvature::new(2.0).unwrap()).unwrap();
    assert!(mobius_add(&x, &y).is_err());
}

#[test]
fn mobius_sub_examples() {
    let x = pt(&[0.3, -0.2]);
    assert!(mobius_sub(&x, &x).unwrap().norm() < 1e-15);
    assert_eq!(
        mobius_sub(&x, &BallPoint::origin(2, c1()))
            .unwrap()
            .coords(),
        x.coords()
    );
    let z = mobius_sub(&pt(&[0.625, 0.0]), &pt(&[0.4, 0.0])).unwrap();
    assert!(close(z.coords(), &[0.3, 0.0], 1e-14));
}

#[test]
fn exp_map_zero_tangent_is_identity() {
    let x = pt(&[0.3, 0.1]);
    let v = TangentVector::new(vec![0.0, 0.0], x.clone()).unwrap();
    assert_eq!(exp_map(&x, &v).unwrap().coords(), x.coords());
}

#[test]
fn exp_map_small_norm_limit_at_origin() {
    let o = BallPoint::origin(2, c1());
    let v = TangentVector::new(vec![1e-9, -2e-9], o.clone()).unwrap();
    let y = exp_map(&o, &v).unwrap();
    assert!(close(y.coords(), v.coords(), 1e-20));
}

#[test]
fn exp_log_round_trip_at_origin() {
    let o = BallPoint::origin(2, c1());
    // artanh(0.5) = ln(3)/2, so exp_0 of this vector lands on (0.5, 0).
    let v = TangentVector::new(vec![3f64.ln() / 2.0, 0.0], o.clone()).unwrap();
    let y = exp_map(&o, &v).unwrap();
    assert!(close(y.coords(), &[0.5, 0.0], 1e-15));
    let back = log_map(&o, &y).unwrap();
    assert!(close(back.coords(), v.coords(), 1e-9));
}

#[test]
fn exp_map_rejects_foreign_tangent() {
    let x = pt(&[0.3, 0.1]);
    let v = TangentVector::at_origin(vec![0.1, 0.1], c1()).unwrap();
    assert!(exp_map(&x, &v).is_err());
}

#[test]
fn log_map_self_is_zero() {
    let x = pt(&[0.3, -0.4]);
    assert!(log_map(&x, &x).unwrap().norm() < 1e-14);
}

#[test]
fn log_norm_at_origin_equals_distance() {
    let o = BallPoint::origin(3, c1());
    let y = pt(&[0.2, -0.3, 0.5]);
    let l = log_map(&o, &y).unwrap().norm();
    let d = hyperbolic_distance(&o, &y).unwrap();
    // Riemannian norm of the tangent vector: λ₀‖log₀ y‖ = d(0, y).
    assert!((2.0 * l - d).abs() < 1e-12, "{l} vs {d}");
}

#[test]
fn mobius_scalar_examples() {
    let x = pt(&[0.3, 0.4]);
    assert!(close(
        mobius_scalar(1.0, &x).unwrap().coords(),
        x.coords(),
        1e-15
    ));
    assert_eq!(mobius_scalar(0.0, &x).unwrap().norm(), 0.0);
    let doubled = mobius_scalar(2.0, &x).unwrap();
    let summed = mobius_add(&x, &x).unwrap();
    assert!(close(doubled.coords(), summed.coords(), 1e-12));
    assert!(mobius_scalar(f64::NAN, &x).is_err());
}

#[test]
fn mobius_matvec_examples() {
    let x = pt(&[0.3, -0.2, 0.1]);
    let id = Matrix::identity(3);
    assert!(close(
        mobius_matvec(&id, &x).unwrap().coords(),
        x.coords(),
        1e-15
    ));
    let m = Matrix::new(2, 3, vec![1.0, 2.0, 0.5, -1.0, 0.3, 0.2]).unwrap();
    assert_eq!(
        mobius_matvec(&m, &BallPoint::origin(3, c1()))
            .unwrap()
            .coords(),
        &[0.0, 0.0]
    );
    // Mx = 0 maps to the origin.
    let k = Matrix::new(1, 3, vec![1.0, 1.0, -1.0]).unwrap();
    let y = pt(&[0.25, 0.25, 0.5]);
    assert_eq!(mobius_matvec(&k, &y).unwrap().coords(), &[0.0]);
    assert!(mobius_matvec(&m, &pt(&[0.1, 0.1])).is_err());
}

#[test]
fn distance_examples() {
    let o = BallPoint::origin(2, c1());
    let y = pt(&[0.5, 0.0]);
    let d = hyperbolic_distance(&o, &y).unwrap();
    assert!((d - 3f64.ln()).abs() < 1e-12);
    assert!((d - 1.098612).abs() < 1e-6);
    assert_eq!(hyperbolic_distance(&y, &y).unwrap(), 0.0);
}

#[test]
fn conformal_and_lorentz_examples() {
    let o = BallPoint::origin(2, c1());
    assert_eq!(conformal_factor(&o), 2.0);
    assert_eq!(lorentz_factor(&o), 1.0);
    let x = pt(&[0.6, 0.0]);
    assert!((conformal_factor(&x) - 3.125).abs() < 1e-12);
    assert!((lorentz_factor(&x) - 1.25).abs() < 1e-12);
    let x = pt(&[0.0, 0.8]);
    assert!((lorentz_factor(&x) - 5.0 / 3.0).abs() < 1e-12);
    assert!((lorentz_factor(&x) - 1.6667).abs() < 1e-4);
}

#[test]
fn conformal_factor_diverges_monotonically() {
    let mut prev = 0.0;
    for i in 0..1000 {
        let r = 0.999 * i as f64 / 1000.0;
        let l = conformal_factor(&pt(&[r, 0.0]));
        assert!(l > prev || i == 0);
        prev = l;
    }
    assert!(prev > 400.0);
}

#[test]
fn einstein_midpoint_examples() {
    let x = pt(&[0.3, -0.1]);
    assert_eq!(
        einstein_midpoint(std::slice::from_ref(&x), None).unwrap(),
        x
    );
    let m = einstein_midpoint(&[pt(&[0.5, 0.0]), pt(&[-0.5, 0.0])], None).unwrap();
    assert!(m.norm() < 1e-15);
    let m = einstein_midpoint(&[pt(&[0.6, 0.0]), pt(&[0.0, 0.0])], None).unwrap();
    assert!(close(m.coords(), &[1.25 * 0.6 / 2.25, 0.0], 1e-15));
    assert!((m.coords()[0] - 0.3333).abs() < 1e-4);
    assert!(einstein_midpoint(&[], None).is_err());
    assert!(einstein_midpoint(std::slice::from_ref(&x), Some(&[0.0])).is_err());
    let w = einstein_midpoint(&[pt(&[0.6, 0.0]), pt(&[0.0, 0.0])], Some(&[1.0, 0.0])).unwrap();
    assert!(close(w.coords(), &[0.6, 0.0], 1e-15));
}

#[test]
fn project_to_ball_examples() {
    let p = project_to_ball(&[0.3, 0.4], c1()).unwrap();
    assert_eq!(p.coords(), &[0.3, 0.4]);
    let p = project_to_ball(&[1.0, 0.0], c1()).unwrap();
    assert!((p.norm() - 0.99999).abs() < 1e-15);
    let p = project_to_ball(&[6.0, 8.0], c1()).unwrap();
    assert!((p.norm() - 0.99999).abs() < 1e-15);
    assert!(close(p.coords(), &[0.6 * 0.99999, 0.8 * 0.99999], 1e-15));
    assert!(project_to_ball(&[f64::NAN], c1()).is_err());
    let c4 = Curvature::new(4.0).unwrap();
    assert!((project_to_ball(&[3.0], c4).unwrap().norm() - 0.99999 / 2.0).abs() < 1e-15);
}

#[test]
fn scalar_maps_invert() {
    let c = Curvature::new(2.0).unwrap();
    for r in [0.0, 0.1, 0.7, 2.5] {
        assert!((log0_scalar(exp0_scalar(r, c), c) - r).abs() < 1e-12);
    }
    assert!((exp0_scalar(1.0, c1()) - 1f64.tanh()).abs() < 1e-15);
}

#[test]
fn general_maps_agree_with_origin_specializations() {
    let c = 1.5;
    let v = [0.4, -0.9, 0.2];
    let o = [0.0; 3];
    assert!(close(&ops::exp_map(&o, &v, c), &ops::exp0(&v, c), 1e-15));
    let y = ops::exp0(&v, c);
    assert!(close(&ops::log_map(&o, &y, c), &ops::log0(&y, c), 1e-14));
}
