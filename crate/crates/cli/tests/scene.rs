use std::path::PathBuf;

use templar_demo::scene::SceneConfig;
use templar_demo::DemoError;

fn bundled_text() -> String {
    std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenes/appendix_c.json")).unwrap()
}

#[test]
fn bundled_scene_has_the_expected_contents() {
    let s = SceneConfig::from_json(&bundled_text()).unwrap();
    assert_eq!(s.cuboids.len(), 4);
    assert_eq!(s.cuboids[0].ext_mat, [[0.0, 1.0, 0.0, 0.03], [-1.0, 0.0, 0.0, -0.60], [0.0, 0.0, 1.0, -0.45]]);
    assert_eq!(s.cuboids[2].dims, [1.60, 1.10, 0.75]);
    assert_eq!(s.cuboids[3].ext_mat[2][3], -1.03);
    assert_eq!(s.start_pose, [-1.15, -1.028, 0.6, 0.0, 0.0, 0.6981]);
    assert_eq!(s.goal_pose, [1.025, 1.125, 0.6, 0.0, 0.0, 0.6981]);
    assert_eq!(s.rel_body_points.len(), 5);
    assert_eq!(s.rel_body_points[4], [0.15, 0.15, 0.0]);
}

#[test]
fn top_level_keys_are_exact() {
    let v: serde_json::Value = serde_json::from_str(&bundled_text()).unwrap();
    let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
    keys.sort();
    assert_eq!(keys, ["cuboids", "goal_pose", "rel_body_points", "start_pose"]);
    let mut ck: Vec<_> = v["cuboids"][0].as_object().unwrap().keys().cloned().collect();
    ck.sort();
    assert_eq!(ck, ["dims", "ext_mat"]);
}

fn edit(f: impl FnOnce(&mut serde_json::Value)) -> Result<SceneConfig, DemoError> {
    let mut v: serde_json::Value = serde_json::from_str(&bundled_text()).unwrap();
    f(&mut v);
    SceneConfig::from_json(&v.to_string())
}

#[test]
fn malformed_scenes_are_rejected() {
    type Edit = Box<dyn FnOnce(&mut serde_json::Value)>;
    let cases: Vec<Edit> = vec![
        Box::new(|v| v["extra"] = 1.into()),
        Box::new(|v| {
            v.as_object_mut().unwrap().remove("goal_pose");
        }),
        Box::new(|v| v["start_pose"] = serde_json::json!([0, 0, 0])),
        Box::new(|v| v["cuboids"][1]["dims"][0] = (-0.4).into()),
        Box::new(|v| v["cuboids"][0]["ext_mat"][0][0] = 2.0.into()),
        Box::new(|v| v["rel_body_points"] = serde_json::json!([])),
        Box::new(|v| v["cuboids"][0]["ext_mat"] = serde_json::json!([[1, 0, 0], [0, 1, 0], [0, 0, 1]])),
    ];
    for (i, c) in cases.into_iter().enumerate() {
        assert!(matches!(edit(c), Err(DemoError::Scene(_))), "case {i}");
    }
    assert!(matches!(SceneConfig::load(std::path::Path::new("/nonexistent/scene.json")), Err(DemoError::Read { .. })));
}
