use std::f64::consts::PI;

use proptest::prelude::*;
use tdma_continuum::actuation::{config_to_tendons, TendonVector};
use tdma_continuum::kinematics::{forward_kinematics, jacobian, pose_error, segment_transform, ArmGeometry, JointConfig};
use tdma_continuum::planner::{plan, Method, PlanProblem, ServoSet};
use tdma_continuum::scheduler::{schedule_trajectory, AxialServoMap, HardwarePlan, TimingModel};

fn config() -> impl Strategy<Value = JointConfig> {
    let lim = 2.0 * PI / 3.0;
    (prop::array::uniform3(0.0..lim), prop::array::uniform3(-PI..PI)).prop_map(|(theta, phi)| JointConfig::new(theta, phi))
}

fn interior_config() -> impl Strategy<Value = JointConfig> {
    let lim = 2.0 * PI / 3.0;
    (prop::array::uniform3(0.05..lim - 0.05), prop::array::uniform3(-PI..PI))
        .prop_map(|(theta, phi)| JointConfig::new(theta, phi))
}

fn target() -> impl Strategy<Value = TendonVector> {
    (prop::array::uniform3(0.0..1.6f64), prop::array::uniform3(-PI..PI))
        .prop_map(|(theta, phi)| config_to_tendons(&ArmGeometry::default(), &JointConfig::new(theta, phi)).unwrap())
}

fn problem(target: TendonVector, servos: usize) -> PlanProblem {
    PlanProblem::new(
        ArmGeometry::default(),
        TendonVector::zeros(),
        target,
        ServoSet::first(servos).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frames_recompose_exactly(q in config()) {
        let geom = ArmGeometry::default();
        let fk = forward_kinematics(&geom, &q).unwrap();
        let mut acc = segment_transform(q.theta[0], q.phi[0], geom.lengths[0]).unwrap();
        for i in 0..3 {
            if i > 0 {
                acc = acc.compose(&segment_transform(q.theta[i], q.phi[i], geom.lengths[i]).unwrap());
            }
            let f = &fk.frames[i];
            prop_assert!((f.rotation - acc.rotation).amax() < 1e-12);
            prop_assert!((f.position - acc.position).amax() < 1e-12);
            prop_assert!(f.orthonormality_error() < 1e-9);
        }
        prop_assert_eq!(fk.end_effector, fk.frames[2]);
    }

    #[test]
    fn jacobian_matches_forward_difference(q in interior_config()) {
        let geom = ArmGeometry::default();
        let jac = jacobian(&geom, &q).unwrap();
        let base = forward_kinematics(&geom, &q).unwrap().end_effector;
        let h = 1e-7;
        for k in 0..6 {
            let mut v = q.to_vector();
            v[k] += h;
            let moved = forward_kinematics(&geom, &JointConfig::from_vector(&v)).unwrap().end_effector;
            let col = pose_error(&base, &moved).to_vector() / h;
            for r in 0..6 {
                prop_assert!((jac[(r, k)] - col[r]).abs() < 1e-5, "entry ({}, {}): {} vs {}", r, k, jac[(r, k)], col[r]);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn planners_are_deterministic_and_reach(t in target(), servos in 1usize..=3) {
        for method in Method::ALL {
            let p = problem(t, servos);
            let a = plan(method, &p).unwrap();
            let b = plan(method, &p).unwrap();
            prop_assert_eq!(&a, &b);
            let residual = (0..9).map(|i| (a.terminal().0[i] - t.0[i]).abs()).fold(0.0, f64::max);
            prop_assert!(residual <= p.tol);
        }
    }

    #[test]
    fn schedules_conserve_and_compress(t in target(), servos in 1usize..=3, method_index in 0usize..4) {
        let p = problem(t, servos);
        let traj = plan(Method::ALL[method_index], &p).unwrap();
        let map = AxialServoMap::canonical();
        let timing = TimingModel::default();
        let s = schedule_trajectory(&map, &traj, &p.servos, p.tol, &timing).unwrap();

        prop_assert!(s.plan.len() <= traj.len());
        prop_assert!(s.plan.check(&map, &p.servos).is_ok());

        let net = traj.net_displacement();
        let mut fused = TendonVector::zeros();
        for stage in s.fusion.stages.iter().chain(&s.fusion.discarded) {
            fused = fused + stage.tendon_displacement();
        }
        for i in 0..9 {
            prop_assert!((fused.0[i] - net.0[i]).abs() < 1e-12);
        }
        for stage in &s.fusion.discarded {
            prop_assert!(stage.displacements.iter().all(|d| d.displacement.abs() < p.tol));
        }

        let mut partial = HardwarePlan::default();
        let mut last = 0.0;
        for ins in &s.plan.instructions {
            partial.instructions.push(ins.clone());
            let t = partial.total_time(&timing);
            prop_assert!(t >= last);
            last = t;
        }
    }
}
