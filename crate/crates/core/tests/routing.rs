use canalplan_core::graph::{GeoNode, RoadGraph};
use canalplan_core::oracle::{brute_force_tour, min_assignment};
use canalplan_core::routing::{
    build_q_matrix, car_legs, held_karp, solve_atsp, transfer_cost, QMatrix, TourPlanFile, TransferEndpoints,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn integer_matrix(rng: &mut ChaCha8Rng, s: usize) -> QMatrix {
    let rows: Vec<Vec<f64>> = (0..=s)
        .map(|a| (0..=s).map(|b| if a == b { 0.0 } else { rng.gen_range(1..200) as f64 }).collect())
        .collect();
    QMatrix::from_rows(&rows).unwrap()
}

#[test]
fn transfer_matches_permutations() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7a5);
    for n in 1..=5 {
        for _ in 0..20 {
            let d: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(0..1000) as f64).collect()).collect();
            let (cost, a) = transfer_cost(n, |i, j| d[i][j]).unwrap();
            assert_eq!(cost, min_assignment(n, |i, j| d[i][j]));
            let mut seen = a.clone();
            seen.sort_unstable();
            assert_eq!(seen, (0..n).collect::<Vec<_>>());
        }
    }
}

#[test]
fn tour_program_matches_dynamic_program() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x75b);
    for s in 1..=7 {
        for _ in 0..4 {
            let q = integer_matrix(&mut rng, s);
            let tour = solve_atsp(&q).unwrap();
            let (hk, order) = held_karp(&q).unwrap();
            assert_eq!(tour.length, hk, "S = {s}");
            assert_eq!(q.tour_length(&tour.order), hk);
            assert_eq!(q.tour_length(&order), hk);
            assert_eq!(hk, brute_force_tour(&q));
        }
    }
}

#[test]
fn ten_subgraph_tour() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let q = integer_matrix(&mut rng, 10);
    let tour = solve_atsp(&q).unwrap();
    assert_eq!(tour.length, held_karp(&q).unwrap().0);
}

/// Road ring r0 → r1 → … → r5 → r0 with one two-way chord r0–r3.
fn ring() -> RoadGraph {
    let nodes = (0..6).map(|i| GeoNode::new(format!("r{i}"), 37.0, 139.0 + 0.001 * i as f64)).collect();
    let mut segs: Vec<(usize, usize, f64, bool)> = (0..6).map(|i| (i, (i + 1) % 6, 100.0, true)).collect();
    segs.push((0, 3, 150.0, false));
    RoadGraph::from_segments(nodes, &segs).unwrap()
}

#[test]
fn legs_follow_matchings() {
    let road = ring();
    let ep = vec![
        TransferEndpoints {
            start: vec![1, 2],
            leave: vec![2, 1],
        },
        TransferEndpoints {
            start: vec![4, 5],
            leave: vec![5, 4],
        },
    ];
    let q = build_q_matrix(&ep, 0, &road).unwrap();
    // office → {1, 2}: 100 + 200
    assert_eq!(q.get(0, 1), 300.0);
    // {2, 1} → {4, 5}: 2→3→4 = 200 and 1→2→3→4→5 = 400, or 2→…→5 = 300 and 1→…→4 = 300
    assert_eq!(q.get(1, 2), 600.0);
    for a in 0..3 {
        for b in 0..3 {
            if a != b {
                assert!(q.get(a, b).is_finite());
            }
        }
    }
    let tour = solve_atsp(&q).unwrap();
    assert_eq!(tour.length, brute_force_tour(&q));
    let plan = car_legs(&tour, &ep, 0, &road).unwrap();
    assert_eq!(plan.legs.len(), 3);
    assert_eq!(plan.total_length, tour.length);
    for leg in &plan.legs {
        for car in &leg.cars {
            let len: f64 = car
                .path
                .windows(2)
                .map(|w| road.out_arcs(w[0]).filter(|a| a.to == w[1]).map(|a| a.length).fold(f64::INFINITY, f64::min))
                .sum();
            assert_eq!(len, car.length);
        }
    }
    let file = plan.to_file(&road);
    let text = serde_json::to_string(&file).unwrap();
    assert!(text.contains("\"fromSub\":null"));
    let back: TourPlanFile = serde_json::from_str(&text).unwrap();
    assert_eq!(back, file);
}

#[test]
fn unreachable_subgraph() {
    let nodes = (0..3).map(|i| GeoNode::new(format!("r{i}"), 37.0, 139.0 + 0.001 * i as f64)).collect();
    let road = RoadGraph::from_segments(nodes, &[(0, 1, 50.0, false)]).unwrap();
    let ep = [TransferEndpoints {
        start: vec![2],
        leave: vec![2],
    }];
    let err = build_q_matrix(&ep, 0, &road).unwrap_err();
    assert!(err.to_string().contains("not road-connected"), "{err}");
}
