use cclab::examples::{counterexample_coboundary, counterexample_smooth, odometer};
use cclab::measures::{
    defect_to_compression, dichotomy_solve, refute_level_measures, tower_limit, verify_certificate, CertificateKind,
    DefectEvidence, Schedule, SolveOptions,
};
use cclab::model::Domain;
use cclab::rational::q;

#[test]
fn coboundary_pipeline() {
    let t = counterexample_coboundary(10).unwrap();
    let lim = tower_limit(&t, &Schedule::default()).unwrap();
    let d = lim.certified_defect().expect("defect");

    let dc = defect_to_compression(&t, &DefectEvidence::from(d)).unwrap();

    assert!(dc.report.valid);
    assert!(refute_level_measures(&t, &dc.compression).unwrap().is_some());
    let cert = dichotomy_solve(Domain::Tower(&t), &SolveOptions::default()).unwrap();
    assert_eq!(cert.kind(), CertificateKind::Compression);
    assert!(verify_certificate(Domain::Tower(&t), &cert).unwrap().valid);
}

#[test]
fn odometer_pipeline() {
    for (p, v) in [(None, q(1, 2)), (Some(q(1, 3)), q(1, 3))] {
        let t = odometer(10, p.as_ref()).unwrap();
        let lim = tower_limit(&t, &Schedule::default()).unwrap();

        let cert = dichotomy_solve(Domain::Tower(&t), &SolveOptions::default()).unwrap();
        println!("{} {:?}", cert.route, cert.kind());
        assert_eq!(cert.kind(), CertificateKind::Measure);
        assert!(verify_certificate(Domain::Tower(&t), &cert).unwrap().valid);
        assert_eq!(lim.limits["x0=1"].value(), Some(&v));
    }
}

#[test]
fn smooth_pipeline() {
    let t = counterexample_smooth(4, 4).unwrap();
    let cert = dichotomy_solve(Domain::Tower(&t), &SolveOptions::default()).unwrap();
    println!("{} {:?}", cert.route, cert.kind());
    assert_eq!(cert.kind(), CertificateKind::Compression);
    assert!(verify_certificate(Domain::Tower(&t), &cert).unwrap().valid);
}
