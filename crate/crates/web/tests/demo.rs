use mapf_lab_web::demo;

const ROOM: &str = "type octile\nheight 6\nwidth 8\nmap\n........\n........\n...@@...\n...@@...\n........\n........\n";

#[test]
fn roadmap_lists_vertices_and_edges() {
    let v = demo::roadmap(ROOM, 2, 0.5).unwrap();
    let vertices = v["vertices"].as_array().unwrap();
    // 44 free cells, 70 free adjacent pairs, 26 free 2x2 blocks
    assert_eq!(vertices.len(), 44 + 70 + 26);
    assert_eq!(v["vertices"][0]["x"], 0.5);
    assert!(!v["edges"].as_array().unwrap().is_empty());
}

#[test]
fn topology_reports_label_and_heat() {
    let v = demo::topology(ROOM, 1).unwrap();
    assert!(v["label"].is_string());
    let heat = v["heat"].as_array().unwrap();
    assert_eq!(heat.len(), 44);
    assert!(heat.iter().all(|h| (0.0..=1.0).contains(&h[2].as_f64().unwrap())));
}

#[test]
fn solve_returns_paths_in_map_coordinates() {
    for strategy in ["cbs", "cbswp"] {
        let v = demo::solve(ROOM, 1, 4, strategy, 1, 1000).unwrap();
        assert_eq!(v["outcome"], "Solved");
        assert_eq!(v["paths"].as_array().unwrap().len(), 4);
    }
}

#[test]
fn bad_input_is_reported() {
    assert!(demo::roadmap("nonsense", 1, 0.5).is_err());
    assert!(demo::solve(ROOM, 1, 2, "dfs", 0, 10).is_err());
    assert!(demo::solve(ROOM, 1, 100, "cbs", 0, 10).is_err());
}
