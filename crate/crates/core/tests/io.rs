mod common;

use brokenflow::broken::time_pi_relation;
use brokenflow::flow::{integrate_bichar, reparametrize, FlowConfig};
use brokenflow::io::{
    read_json, read_samples_csv, write_geodesic_csv, write_json, write_relation_csv, write_samples_csv, RelationRecord, TrajectoryRecord,
};
use brokenflow::phasespace::ScCovector;
use brokenflow::Error;
use common::e;
use nalgebra::DVector;

fn segment() -> brokenflow::flow::BicharSegment {
    let v = DVector::from_vec(vec![0.0, 0.8, 0.0]);
    let xi = ScCovector::new(e(3, 0), 0.6, v).unwrap();
    integrate_bichar(&xi, &FlowConfig::analytic(1.0, 0.5), None).unwrap()
}

#[test]
fn samples_csv_round_trip_is_exact() {
    let seg = segment();
    let l = common::two_circles();
    let mut buf = Vec::new();
    write_samples_csv(&mut buf, &seg.samples, Some(&l)).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("t,s,omega_1,omega_2,omega_3,tau,v_1,v_2,v_3,face\n"));
    // The start lies on C_xz; later samples leave it.
    assert!(text.lines().nth(1).unwrap().ends_with(",xz"));
    assert!(text.lines().nth(2).unwrap().ends_with(",ambient"));
    let back = read_samples_csv(buf.as_slice()).unwrap();
    assert_eq!(back, seg.samples);
}

#[test]
fn malformed_csv_is_reported_with_its_location() {
    let bad = "t,s,omega_1,tau,v_1,face\n0,0,1,0.5,zero,\n";
    match read_samples_csv(bad.as_bytes()) {
        Err(Error::Invalid(msg)) => assert!(msg.contains("row 2") && msg.contains("v_1"), "{msg}"),
        other => panic!("unexpected {other:?}"),
    }
    assert!(read_samples_csv("s,omega_1\n".as_bytes()).is_err());
}

#[test]
fn trajectory_json_round_trip() {
    let seg = segment();
    let rec = TrajectoryRecord::from_segment(&seg, None);
    let mut buf = Vec::new();
    write_json(&mut buf, &rec).unwrap();
    let back: TrajectoryRecord = read_json(buf.as_slice()).unwrap();
    assert_eq!(back, rec);
    assert_eq!(back.to_samples(), seg.samples);
}

#[test]
fn geodesic_csv_columns() {
    let rec = reparametrize(&segment()).unwrap();
    let mut buf = Vec::new();
    write_geodesic_csv(&mut buf, &rec).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "s,t,tau,speed,x_1,x_2,x_3,d_1,d_2,d_3");
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(first[0], 0.0);
    assert!(first[1].abs() < 1e-15);
    assert!((first[2] - 0.6).abs() < 1e-15 && (first[3] - 0.8).abs() < 1e-15);
}

#[test]
fn relation_exports() {
    let l = common::two_circles();
    let p = DVector::from_vec(vec![0.6, 0.0, 0.8]);
    let u = DVector::from_vec(vec![0.0, 1.0, 0.0]);
    let rel = time_pi_relation(&l, &p, &u, 1, 8).unwrap();
    let rec = RelationRecord::new(&rel, &l);
    let mut buf = Vec::new();
    write_json(&mut buf, &rec).unwrap();
    let back: RelationRecord = read_json(buf.as_slice()).unwrap();
    assert_eq!(back, rec);
    let mut csv = Vec::new();
    write_relation_csv(&mut csv, &rec).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), rec.targets.len() + 1);
    assert!(text.lines().any(|line| line.contains(",yz,")));
}
