use blinkscan::blockscan::{Phase, ScanConfig, ScanState};
use blinkscan::Region;
use proptest::prelude::*;

mod common;
use common::tiles_exactly;

#[test]
fn quadrants_tile_every_small_size() {
    for w in 1..=50 {
        for h in 1..=50 {
            for (x, y) in [(0, 0), (7, 3)] {
                let r = Region::new(x, y, w, h);
                assert!(tiles_exactly(&r), "{r:?}");
                let kids = r.quadrants();
                // floor-first split on each axis
                let (w0, h0) = (w / 2, h / 2);
                let expect = |q: Option<Region>, ew: u32, eh: u32| match q {
                    Some(q) => q.w == ew && q.h == eh,
                    None => ew == 0 || eh == 0,
                };
                assert!(expect(kids[0], w0, h0));
                assert!(expect(kids[1], w - w0, h0));
                assert!(expect(kids[2], w0, h - h0));
                assert!(expect(kids[3], w - w0, h - h0));
            }
        }
    }
}

#[test]
fn odd_screen_two_levels() {
    let cfg = ScanConfig::new(Region::screen(1023, 1023), 500).with_depth(2);
    let s = ScanState::initial(&cfg).blink(&cfg).unwrap();
    assert_eq!(s.active, Region::new(0, 0, 511, 511));
    let s = s.tick(&cfg, 500).blink(&cfg).unwrap();
    assert_eq!(s.active, Region::new(255, 0, 256, 255));
    assert!(matches!(s.phase, Phase::DirectionScan { highlight: 0 }));
}

fn descend(cfg: &ScanConfig, waits: &[u8]) -> Vec<ScanState> {
    let mut s = ScanState::initial(cfg);
    let mut trail = vec![s.clone()];
    for &w in waits {
        if s.is_done() {
            break;
        }
        s = s.tick(cfg, u64::from(w) * cfg.scan_interval_ms + u64::from(w) % 3);
        trail.push(s.clone());
        s = s.blink(cfg).unwrap();
        trail.push(s.clone());
    }
    trail
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn descent_contains_and_decays(
        w in 1u32..2500, h in 1u32..2500, depth in 1u32..7,
        waits in prop::collection::vec(0u8..40, 4..14),
    ) {
        let cfg = ScanConfig::new(Region::screen(w, h), 250).with_depth(depth).with_step(1 + w % 13);
        let trail = descend(&cfg, &waits);
        let mut selections = 0u32;
        for pair in trail.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            prop_assert!(a.active.contains_region(&b.active));
            if matches!(a.phase, Phase::BlockScan { .. }) && a.active != b.active {
                selections += 1;
            }
            if matches!(a.phase, Phase::BlockScan { .. }) && !matches!(b.phase, Phase::BlockScan { .. } | Phase::DirectionScan { .. }) {
                prop_assert!(false, "block scan left to {:?}", b.phase);
            }
            let d = 1u64 << selections;
            let bound = u64::from(w).div_ceil(d) * u64::from(h).div_ceil(d);
            prop_assert!(b.active.area() <= bound, "area {} > {}", b.active.area(), bound);
            if let Phase::CursorMove { .. } = b.phase {
                prop_assert!(b.active.contains(b.cursor.unwrap()));
            }
        }
    }

    #[test]
    fn same_events_same_state(w in 1u32..800, h in 1u32..800, waits in prop::collection::vec(0u8..20, 1..10)) {
        let cfg = ScanConfig::new(Region::screen(w, h), 300);
        prop_assert_eq!(descend(&cfg, &waits), descend(&cfg, &waits));
    }

    #[test]
    fn cursor_stays_inside_while_moving(dir in 0u8..8, ticks in 0u64..400, w in 16u32..900, h in 16u32..900) {
        let cfg = ScanConfig::new(Region::screen(w, h), 100).with_step(7);
        let mut s = ScanState::initial(&cfg);
        for _ in 0..4 { s = s.blink(&cfg).unwrap(); }
        s = s.tick(&cfg, u64::from(dir) * 100).blink(&cfg).unwrap();
        for _ in 0..ticks {
            s = s.tick(&cfg, 100);
            prop_assert!(s.active.contains(s.cursor.unwrap()));
        }
    }
}
