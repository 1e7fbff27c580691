use replimit_web::{fusion_frames, quantile_json, score_json, POOL, SIDE};

#[test]
fn scores_a_caption() {
    let v = score_json("A dog runs in the park").unwrap();
    let gs = v["report"]["gs"].as_f64().unwrap();
    assert!((0.0..=10.0).contains(&gs));
    assert_eq!(v["tokens"].as_array().unwrap().len(), 6);
    assert!(score_json("  ...  ").is_err());
}

#[test]
fn frames_have_three_images() {
    let px = fusion_frames(1, 2, 0.3, 50, 7).unwrap();
    assert_eq!(px.len(), 3 * SIDE * SIDE);
    assert!(px.iter().all(|v| (0.0..=1.0).contains(v)));
    assert_eq!(px, fusion_frames(1, 2, 0.3, 50, 7).unwrap());
}

#[test]
fn zero_weight_shows_the_pooled_image() {
    let px = fusion_frames(0, 0, 0.0, 1, 3).unwrap();
    let n = SIDE * SIDE;
    let (original, fused) = (&px[..n], &px[n..2 * n]);
    for y in 0..SIDE {
        for x in 0..SIDE {
            let (by, bx) = (y / POOL * POOL, x / POOL * POOL);
            let block = (original[by * SIDE + bx]
                + original[by * SIDE + bx + 1]
                + original[(by + 1) * SIDE + bx]
                + original[(by + 1) * SIDE + bx + 1])
                / 4.0;
            assert!((fused[y * SIDE + x] - block).abs() < 1e-6);
        }
    }
}

#[test]
fn quantile_of_grid() {
    let v = quantile_json((1..=100).map(|i| i as f64 / 100.0).collect(), 0.95).unwrap();
    assert_eq!(v["r"].as_f64().unwrap(), 0.95);
    assert_eq!(v["rank"].as_u64().unwrap(), 95);
    assert!(quantile_json(vec![], 0.95).is_err());
}
