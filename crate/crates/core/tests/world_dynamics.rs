use coverbot::envgen::{generate, GenConfig};
use coverbot::layout::{CellCoord, Layout, Tile};
use coverbot::rng::SimRng;
use coverbot::world::{Action, Heading, KnowledgeCell, World, WorldError, DEFAULT_BUDGET, WINDOW};
use proptest::prelude::*;

type Window = [[i8; WINDOW]; WINDOW];

/// Unrotated crop of the knowledge map with the agent at the centre.
fn north_up_crop(world: &World) -> Window {
    let p = world.position();
    let mut w = [[-1; WINDOW]; WINDOW];
    for (i, row) in w.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let r = p.row as isize + i as isize - 4;
            let c = p.col as isize + j as isize - 4;
            if r >= 0
                && c >= 0
                && (r as usize) < world.layout().rows()
                && (c as usize) < world.layout().cols()
            {
                *v = world
                    .knowledge(CellCoord::new(r as usize, c as usize))
                    .code();
            }
        }
    }
    w
}

/// Quarter turn counterclockwise of a square matrix.
fn rotate_ccw(m: &Window) -> Window {
    let mut out = [[0; WINDOW]; WINDOW];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = m[j][WINDOW - 1 - i];
        }
    }
    out
}

fn expected_window(world: &World) -> Window {
    let turns = match world.heading() {
        Heading::North => 0,
        Heading::East => 1,
        Heading::South => 2,
        Heading::West => 3,
    };
    (0..turns).fold(north_up_crop(world), |m, _| rotate_ccw(&m))
}

fn random_actions(rng: &mut SimRng, n: usize) -> Vec<Action> {
    (0..n)
        .map(|_| {
            // forward-heavy so the agent actually travels
            if rng.index(5) < 3 {
                Action::Forward
            } else {
                Action::ALL[1 + rng.index(2)]
            }
        })
        .collect()
}

#[test]
fn window_follows_rotation_oracle() {
    let layout = generate(&GenConfig::with_seed(11)).unwrap();
    let mut world = World::new(layout, DEFAULT_BUDGET).unwrap();
    let mut rng = SimRng::new(1);
    for a in random_actions(&mut rng, 600) {
        world.apply_action(a).unwrap();
        assert_eq!(world.observe().window, expected_window(&world));
    }
}

#[test]
fn east_window_is_north_window_turned() {
    let layout = generate(&GenConfig::with_seed(12)).unwrap();
    let mut world = World::new(layout, DEFAULT_BUDGET).unwrap();
    let mut rng = SimRng::new(2);
    for a in random_actions(&mut rng, 200) {
        world.apply_action(a).unwrap();
    }
    let pos = world.position();
    world.set_pose(pos, Heading::North);
    let north = world.observe().window;
    world.set_pose(pos, Heading::East);
    let east = world.observe().window;
    assert_eq!(east, rotate_ccw(&north));
    // the cell ahead is always row 3 of column 4
    let (dr, dc) = Heading::East.delta();
    let ahead = CellCoord::new(
        (pos.row as isize + dr) as usize,
        (pos.col as isize + dc) as usize,
    );
    if world.layout().contains(ahead) {
        assert_eq!(east[3][4], world.knowledge(ahead).code());
    }
}

#[test]
fn generated_world_starts_with_one_visited_cell() {
    let layout = generate(&GenConfig::with_seed(42)).unwrap();
    let empty = layout.reachable_from(layout.base());
    assert_eq!(empty, layout.empty_count());
    let world = World::new(layout, DEFAULT_BUDGET).unwrap();
    assert_eq!(world.coverage(), 1.0 / empty as f64);
    let obs = world.observe();
    assert_eq!(obs.window[4][4], 2);
    assert_eq!(obs.step, 0);
}

#[test]
fn corner_pads_with_unobserved() {
    let layout = Layout::open(10, 10, CellCoord::new(0, 0)).unwrap();
    let world = World::new(layout, DEFAULT_BUDGET).unwrap();
    let w = world.observe().window;
    assert!(w[0].iter().all(|&v| v == -1));
    assert!(w.iter().all(|row| row[0] == -1));
    assert_eq!(w[4][4], 2);
}

#[test]
fn rejects_bad_worlds() {
    let mut tiles = vec![Tile::Empty; 25];
    tiles[12] = Tile::Obstacle;
    let layout = Layout::new(5, 5, tiles, CellCoord::new(2, 2)).unwrap();
    assert!(matches!(
        World::new(layout, 10),
        Err(WorldError::BaseOnObstacle(_))
    ));
    let open = Layout::open(5, 5, CellCoord::new(2, 2)).unwrap();
    assert!(matches!(World::new(open, 0), Err(WorldError::ZeroBudget)));
    let mut split = vec![Tile::Empty; 25];
    for r in 0..5 {
        split[r * 5 + 2] = Tile::Obstacle;
    }
    let layout = Layout::new(5, 5, split, CellCoord::new(0, 0)).unwrap();
    assert!(matches!(
        World::new(layout, 10),
        Err(WorldError::Disconnected)
    ));
}

fn check_episode(layout: Layout, actions: &[Action], budget: u32) -> Result<(), TestCaseError> {
    let mut world = World::new(layout.clone(), budget).unwrap();
    let mut total = 0i64;
    let mut prev_cov = world.coverage();
    for &a in actions {
        if world.is_done() {
            break;
        }
        let before = (
            world.position(),
            world.visited_count(),
            world.collision_count(),
        );
        let out = world.apply_action(a).unwrap();
        total += i64::from(out.reward);
        prop_assert!(matches!(out.reward, -1..=1));
        prop_assert_eq!(out.collided, out.reward == -1);
        prop_assert_eq!(out.newly_visited, out.reward == 1);
        prop_assert!(!(out.collided && out.newly_visited));
        let stayed = world.position() == before.0;
        prop_assert_eq!(out.reward == -1, a == Action::Forward && stayed);
        prop_assert_eq!(out.reward == 1, world.visited_count() == before.1 + 1);
        prop_assert!(world.coverage() >= prev_cov);
        prev_cov = world.coverage();
        prop_assert!(!layout.is_obstacle(world.position()));
        prop_assert!(world.visited_count() <= world.empty_count());
        prop_assert!(world.step() <= world.budget());
        prop_assert_eq!(out.done, world.is_done());
    }
    prop_assert_eq!(
        total,
        world.visited_count() as i64 - 1 - i64::from(world.collision_count())
    );
    for r in 0..layout.rows() {
        for c in 0..layout.cols() {
            let cell = CellCoord::new(r, c);
            match world.knowledge(cell) {
                KnowledgeCell::Obstacle => prop_assert!(layout.is_obstacle(cell)),
                KnowledgeCell::Empty { .. } | KnowledgeCell::Base => {
                    prop_assert!(!layout.is_obstacle(cell))
                }
                KnowledgeCell::Unobserved => {}
            }
            prop_assert!(!(layout.is_obstacle(cell) && world.knowledge(cell).is_visited()));
        }
    }
    prop_assert!(world.knowledge(layout.base()).is_visited());
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dynamics_identities(seed in any::<u64>(), actions in prop::collection::vec(0usize..3, 1..800)) {
        let layout = generate(&GenConfig::with_seed(seed)).unwrap();
        let actions: Vec<Action> = actions.into_iter().map(|i| Action::from_index(i).unwrap()).collect();
        check_episode(layout, &actions, DEFAULT_BUDGET)?;
    }

    #[test]
    fn small_budgets_end_on_time(seed in any::<u64>(), budget in 1u32..60) {
        let layout = generate(&GenConfig::with_seed(seed)).unwrap();
        let mut world = World::new(layout, budget).unwrap();
        let mut steps = 0;
        while !world.is_done() {
            world.apply_action(Action::TurnLeft).unwrap();
            steps += 1;
        }
        prop_assert_eq!(steps, budget);
        prop_assert!(world.apply_action(Action::Forward).is_err());
    }

    #[test]
    fn observation_matches_oracle(seed in any::<u64>(), actions in prop::collection::vec(0usize..3, 0..200)) {
        let layout = generate(&GenConfig::with_seed(seed)).unwrap();
        let mut world = World::new(layout, DEFAULT_BUDGET).unwrap();
        for i in actions {
            world.apply_action(Action::from_index(i).unwrap()).unwrap();
        }
        prop_assert_eq!(world.observe().window, expected_window(&world));
    }
}
