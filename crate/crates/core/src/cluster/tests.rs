use super::*;
use crate::graphs::{edge_labellings, LabeledGraph};
use crate::oracle::tonks_cluster_coefficients;
use crate::potential::{ConvexBody, ShellDecomposition};

fn rods() -> (Potential, BoxDomain) {
    (Potential::hard_sphere(1, 0.5).unwrap(), BoxDomain::new(1, 1).unwrap())
}

fn two_shell_1d() -> Potential {
    let shells = ShellDecomposition::new(1, vec![ConvexBody::ball(0.5), ConvexBody::ball(1.0)], 2.0, 0.0).unwrap();
    Potential::step(shells, vec![1.0, 0.5]).unwrap()
}

#[test]
fn first_coefficient_is_one() {
    let p = Potential::hard_sphere(2, 1.0).unwrap();
    let dom = BoxDomain::new(2, 2).unwrap();
    let c = cluster_coefficient(&p, &dom, 1, 1e-9, Mode::Certified).unwrap();
    assert_eq!(c.value, 1.0);
    assert_eq!(c.error_bound, 0.0);
    let lv = ClusterEngine::default().level(&p, &dom, 1, 1.0 / 64.0).unwrap();
    assert_eq!(lv.point_count, 256 * 256);
}

#[test]
fn certified_second_coefficient_of_rods() {
    let (p, dom) = rods();
    let c = cluster_coefficient(&p, &dom, 2, 0.01, Mode::Certified).unwrap();
    assert!(c.certified);
    assert!(c.error_bound <= 0.01);
    assert_eq!(c.delta_used, 2f64.powi(-14));
    assert!((c.value + 0.875).abs() <= c.error_bound, "{c:?}");
}

#[test]
fn walk_matches_literal_stream() {
    let p = two_shell_1d();
    let dom = BoxDomain::new(1, 1).unwrap();
    let mesh = MeshParams::new(1.0 / 16.0, &p).unwrap();
    let triangle = LabeledGraph::new(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
    let path = LabeledGraph::new(3, &[(0, 2), (1, 2)]).unwrap();
    for g in [&triangle, &path] {
        for sigma in edge_labellings(g, 2) {
            let fast = labelled_integral(&p, &sigma, &mesh, &dom).unwrap();
            let (slow, count) = stream_sum(&p, &sigma, &mesh, &dom).unwrap();
            assert_eq!(fast.point_count, count, "{:?}", sigma.labels);
            assert!((fast.value - slow).abs() <= 1e-12 * slow.abs().max(1e-300), "{} vs {slow}", fast.value);
        }
    }
    let p = Potential::hard_sphere(2, 1.0).unwrap();
    let dom = BoxDomain::new(1, 2).unwrap();
    let mesh = MeshParams::new(1.0 / 16.0, &p).unwrap();
    let edge = LabeledGraph::new(2, &[(0, 1)]).unwrap();
    let sigma = edge_labellings(&edge, 1).next().unwrap();
    let fast = labelled_integral(&p, &sigma, &mesh, &dom).unwrap();
    let (slow, count) = stream_sum(&p, &sigma, &mesh, &dom).unwrap();
    assert_eq!(fast.point_count, count);
    assert!(count > 0);
    assert!((fast.value - slow).abs() <= 1e-12 * slow.abs());
}

#[test]
fn mesh_points_of_unit_rods() {
    let p = Potential::hard_sphere(1, 1.0).unwrap();
    let dom = BoxDomain::new(1, 1).unwrap();
    let edge = LabeledGraph::new(2, &[(0, 1)]).unwrap();
    let sigma = edge_labellings(&edge, 1).next().unwrap();
    // γ = 1 leaves the shrunk shell {0 < |x| ≤ 0} empty.
    let coarse = MeshParams::new(0.5, &p).unwrap();
    assert_eq!(mesh_points(&p, &sigma, &coarse, &dom).unwrap().count(), 0);
    // γ = 1/2: pairs of lattice points in [-1, 1) with 0 < |x_0 - x_1| ≤ 1/2.
    let mesh = MeshParams::new(0.25, &p).unwrap();
    let lattice: Vec<f64> = (0..8).map(|a| -1.0 + 0.25 * a as f64).collect();
    let mut expected = Vec::new();
    for &a in &lattice {
        for &b in &lattice {
            let g = (a - b).abs();
            if g > 0.0 && g <= 0.5 {
                expected.push(vec![vec![a], vec![b]]);
            }
        }
    }
    let mut got: Vec<_> = mesh_points(&p, &sigma, &mesh, &dom).unwrap().collect();
    got.sort_by(|x, y| x.partial_cmp(y).unwrap());
    expected.sort_by(|x, y| x.partial_cmp(y).unwrap());
    assert_eq!(got, expected);
    assert_eq!(got.len(), 26);
    let (sum, count) = stream_sum(&p, &sigma, &mesh, &dom).unwrap();
    assert_eq!((sum, count), (-26.0 / 16.0, 26));
}

#[test]
fn rods_alternate_in_sign() {
    let (p, dom) = rods();
    let eng = ClusterEngine::default();
    let delta = 2f64.powi(-8);
    let c2 = eng.level(&p, &dom, 2, delta).unwrap().value;
    let c3 = eng.level(&p, &dom, 3, delta).unwrap().value;
    assert!(c2 < 0.0 && c3 > 0.0, "{c2} {c3}");
    let disks = Potential::hard_sphere(2, 1.0).unwrap();
    let dom2 = BoxDomain::new(2, 2).unwrap();
    assert!(eng.level(&disks, &dom2, 2, 2f64.powi(-6)).unwrap().value < 0.0);
}

#[test]
fn refinement_stays_within_bounds() {
    let p = two_shell_1d();
    let dom = BoxDomain::new(1, 1).unwrap();
    let eng = ClusterEngine::default();
    for k in 2..=3 {
        let a = eng.level(&p, &dom, k, 2f64.powi(-7)).unwrap();
        let b = eng.level(&p, &dom, k, 2f64.powi(-8)).unwrap();
        assert!((a.value - b.value).abs() <= a.error_bound + b.error_bound);
        assert!(b.error_bound < a.error_bound);
    }
}

#[test]
fn third_coefficient_of_rods_converges_to_tonks() {
    let (p, dom) = rods();
    let exact = tonks_cluster_coefficients(2.0, 0.5, 3)[2];
    let eng = ClusterEngine::default();
    let mut last = f64::INFINITY;
    for e in [6, 8, 10] {
        let lv = eng.level(&p, &dom, 3, 2f64.powi(-e)).unwrap();
        let err = (lv.value - exact).abs();
        assert!(err <= lv.error_bound);
        assert!(err < last);
        last = err;
    }
    assert!(last < 0.05, "{last}");
}

#[test]
fn adaptive_mode_is_flagged_heuristic() {
    let (p, dom) = rods();
    let c = cluster_coefficient(&p, &dom, 2, 1e-3, Mode::Adaptive).unwrap();
    assert!(!c.certified);
    assert!(c.levels.len() >= 2);
    assert!((c.value + 0.875).abs() < 5e-3, "{c:?}");
    assert_eq!(c.error_bound, (c.levels[c.levels.len() - 1].value - c.levels[c.levels.len() - 2].value).abs());
}

#[test]
fn zero_potential_has_no_interactions() {
    let p = Potential::zero(3).unwrap();
    let dom = BoxDomain::new(1, 3).unwrap();
    let s = cluster_series(&p, &dom, 5, &[0.1; 5], Mode::Certified).unwrap();
    assert_eq!(s[0].value, 1.0);
    assert!(s[1..].iter().all(|c| c.value == 0.0 && c.error_bound == 0.0));
}

#[test]
fn choose_delta_respects_cap_and_floor() {
    let (p, dom) = rods();
    let cap = delta_cap(&p);
    assert_eq!(cap, 0.25);
    let d = choose_delta(2, 0.01, &p, &dom, Mode::Certified).unwrap();
    let hist = edge_histogram(2, 7).unwrap();
    assert!(bounds::coefficient_bound(&p.shells, &dom, 2, &hist, d) <= 0.01);
    assert!(bounds::coefficient_bound(&p.shells, &dom, 2, &hist, 2.0 * d) > 0.01);
    assert_eq!(choose_delta(2, 0.01, &p, &dom, Mode::Adaptive).unwrap(), 0.25);
    assert!(matches!(choose_delta(2, 1e-20, &p, &dom, Mode::Certified), Err(Error::Refusal(_))));
    assert!(matches!(choose_delta(2, 0.0, &p, &dom, Mode::Certified), Err(Error::Input(_))));
    assert!(MeshParams::new(0.5, &p).is_err());
    assert!(MeshParams::new(0.1, &p).is_err());
}

#[test]
fn chosen_width_is_admissible_under_rounding() {
    let spec: crate::potential::PotentialSpec = serde_json::from_str(
        r#"{"kind":"step","dimension":2,"shells":[{"body":"ball","size":0.5},{"body":"box","size":1.0}],"values":["inf",0.5]}"#,
    )
    .unwrap();
    let mut cases: Vec<Potential> = (1..=4).map(|d| Potential::hard_sphere(d, 1.0).unwrap()).collect();
    cases.push(Potential::from_spec(&spec).unwrap());
    for q in &cases {
        let dom = BoxDomain::for_potential(1, q).unwrap();
        for mode in [Mode::Certified, Mode::Adaptive] {
            let delta = choose_delta(1, 0.1, q, &dom, mode).unwrap();
            assert!(MeshParams::new(delta, q).is_ok(), "{} {mode:?}: δ = {delta}", q.hash());
            if mode == Mode::Certified {
                assert!(2.0 * delta > delta_cap(q));
            }
        }
    }
}

#[test]
fn refuses_large_orders_and_costs() {
    let (p, dom) = rods();
    assert!(matches!(cluster_coefficient(&p, &dom, 8, 0.1, Mode::Adaptive), Err(Error::Refusal(_))));
    assert!(matches!(cluster_coefficient(&p, &dom, 0, 0.1, Mode::Adaptive), Err(Error::Input(_))));
    let eng = ClusterEngine::new(ClusterSettings { cost_ceiling: 1e3, ..Default::default() });
    assert!(matches!(eng.level(&p, &dom, 2, 2f64.powi(-12)), Err(Error::Refusal(_))));
}

#[test]
fn results_do_not_depend_on_threads_or_cache() {
    let p = two_shell_1d();
    let dom = BoxDomain::new(1, 1).unwrap();
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| ClusterEngine::default().level(&p, &dom, 3, 2f64.powi(-7)).unwrap())
    };
    let one = run(1);
    assert_eq!(one.value.to_bits(), run(4).value.to_bits());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    let eng = ClusterEngine::with_cache(ClusterSettings::default(), CoefficientCache::open(&path).unwrap());
    let fresh = eng.level(&p, &dom, 3, 2f64.powi(-7)).unwrap();
    let eng = ClusterEngine::with_cache(ClusterSettings::default(), CoefficientCache::open(&path).unwrap());
    assert_eq!(eng.cache().len(), 1);
    let cached = eng.level(&p, &dom, 3, 2f64.powi(-7)).unwrap();
    assert_eq!(fresh, cached);
    assert_eq!(fresh.value.to_bits(), one.value.to_bits());
}

#[test]
fn in_u_gamma_checks_box_shell_and_support() {
    let p = Potential::hard_sphere(1, 1.0).unwrap();
    let dom = BoxDomain::new(2, 1).unwrap();
    let edge = LabeledGraph::new(2, &[(0, 1)]).unwrap();
    let sigma = edge_labellings(&edge, 1).next().unwrap();
    assert!(in_u_gamma(&p, &sigma, 0.5, &dom, &[vec![0.0], vec![0.4]]).unwrap());
    assert!(!in_u_gamma(&p, &sigma, 0.5, &dom, &[vec![0.0], vec![0.6]]).unwrap());
    assert!(!in_u_gamma(&p, &sigma, 0.5, &dom, &[vec![0.0], vec![0.0]]).unwrap());
    assert!(!in_u_gamma(&p, &sigma, 0.5, &dom, &[vec![2.0], vec![1.9]]).unwrap());
    assert!(in_u_gamma(&p, &sigma, 1.5, &dom, &[vec![0.0], vec![0.1]]).is_err());
}
