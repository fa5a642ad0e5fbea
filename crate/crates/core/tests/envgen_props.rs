use std::collections::HashSet;

use coverbot::envgen::{furniture_catalog, generate, generate_detailed, GenConfig, CATALOG_SIZE};
use coverbot::layout::{CellCoord, Layout};
use proptest::prelude::*;

/// Connectivity from the printed form only: parse the '.'/'x' rows and run
/// an explicit-stack depth-first search from the base.
fn text_flood_fill(text: &str) -> (usize, usize) {
    let mut lines = text.lines();
    let head: Vec<usize> = lines
        .next()
        .unwrap()
        .split_whitespace()
        .map(|t| t.parse().unwrap())
        .collect();
    let (rows, cols, br, bc) = (head[0], head[1], head[2], head[3]);
    let grid: Vec<Vec<bool>> = lines
        .map(|l| l.chars().map(|ch| ch == '.').collect())
        .collect();
    assert_eq!(grid.len(), rows);
    assert!(grid.iter().all(|r| r.len() == cols));
    let free = grid.iter().flatten().filter(|&&f| f).count();
    let mut seen = HashSet::new();
    let mut stack = vec![(br as i64, bc as i64)];
    while let Some((r, c)) = stack.pop() {
        if r < 0 || c < 0 || r >= rows as i64 || c >= cols as i64 {
            continue;
        }
        if !grid[r as usize][c as usize] || !seen.insert((r, c)) {
            continue;
        }
        stack.extend([(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)]);
    }
    (seen.len(), free)
}

#[test]
fn thousand_seeds_satisfy_layout_invariants() {
    let mut pieces_seen = [false; 7];
    for seed in 0..1000u64 {
        let g = generate_detailed(&GenConfig::with_seed(seed)).unwrap();
        let l = &g.layout;
        assert!(
            (10..=20).contains(&l.rows()) && (10..=20).contains(&l.cols()),
            "seed {seed}"
        );
        assert!(g.placements.len() <= 6 && g.requested <= 6);
        assert!(!l.is_obstacle(l.base()), "seed {seed}: base on obstacle");
        let (reached, free) = text_flood_fill(&l.to_string());
        assert_eq!(reached, free, "seed {seed}: disconnected");
        assert_eq!(free, l.empty_count());
        assert!(l.empty_count() >= l.rows() * l.cols() - 6 * 16);
        pieces_seen[g.placements.len()] = true;
    }
    assert!(
        pieces_seen.iter().all(|&s| s),
        "every piece count 0..=6 should occur"
    );
}

#[test]
fn placements_explain_every_obstacle() {
    let catalog = furniture_catalog();
    for seed in 0..200u64 {
        let g = generate_detailed(&GenConfig::with_seed(seed)).unwrap();
        let mut stamped = Layout::open(g.layout.rows(), g.layout.cols(), g.layout.base()).unwrap();
        for p in &g.placements {
            let shape = catalog[p.piece].rotated(p.quarter_turns);
            for r in 0..shape.rows {
                for c in 0..shape.cols {
                    if shape.occupied(r, c) {
                        let cell = CellCoord::new(p.top + r, p.left + c);
                        assert!(
                            !stamped.is_obstacle(cell),
                            "seed {seed}: overlapping pieces"
                        );
                        stamped.set_tile(cell, coverbot::Tile::Obstacle);
                    }
                }
            }
        }
        assert_eq!(stamped, g.layout, "seed {seed}");
    }
}

#[test]
fn dimensions_are_roughly_uniform() {
    let mut counts = [0usize; 11];
    for seed in 0..5500u64 {
        let l = generate(&GenConfig::with_seed(seed)).unwrap();
        counts[l.rows() - 10] += 1;
    }
    // 500 expected per bucket; 5 standard deviations is about ±110
    for (d, &n) in counts.iter().enumerate() {
        assert!((390..=610).contains(&n), "rows {} drawn {n} times", d + 10);
    }
}

#[test]
fn catalog_shape() {
    let catalog = furniture_catalog();
    assert_eq!(catalog.len(), CATALOG_SIZE);
    for p in catalog {
        assert!(p.rows <= 4 && p.cols <= 4 && p.area() >= 1, "{}", p.name);
        assert_eq!(p.rotated(4), *p);
        assert_eq!(p.rotated(1).area(), p.area());
        assert_eq!((p.rotated(1).rows, p.rotated(1).cols), (p.cols, p.rows));
    }
    let l = &catalog[10];
    // "#.." / "#.." / "###" turned clockwise is "###" / "#.." / "#.."
    let r = l.rotated(1);
    let rows: Vec<String> = (0..r.rows)
        .map(|i| {
            (0..r.cols)
                .map(|j| if r.occupied(i, j) { '#' } else { '.' })
                .collect()
        })
        .collect();
    assert_eq!(rows, ["###", "#..", "#.."]);
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = [
        GenConfig {
            min_dim: 9,
            ..GenConfig::default()
        },
        GenConfig {
            max_dim: 21,
            ..GenConfig::default()
        },
        GenConfig {
            min_dim: 15,
            max_dim: 12,
            ..GenConfig::default()
        },
        GenConfig {
            max_pieces: 7,
            ..GenConfig::default()
        },
    ];
    for cfg in bad {
        assert!(generate(&cfg).is_err(), "{cfg:?}");
    }
}

proptest! {
    #[test]
    fn generation_is_a_function_of_the_seed(seed in any::<u64>()) {
        let a = generate_detailed(&GenConfig::with_seed(seed)).unwrap();
        let b = generate_detailed(&GenConfig::with_seed(seed)).unwrap();
        prop_assert_eq!(&a, &b);
        let (reached, free) = text_flood_fill(&a.layout.to_string());
        prop_assert_eq!(reached, free);
    }

    #[test]
    fn fixed_size_rooms(seed in any::<u64>(), dim in 10usize..=20) {
        let cfg = GenConfig { min_dim: dim, max_dim: dim, max_pieces: 6, seed };
        let l = generate(&cfg).unwrap();
        prop_assert_eq!((l.rows(), l.cols()), (dim, dim));
        prop_assert!(l.is_connected());
    }
}
