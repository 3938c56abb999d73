//! The block-scanning automaton.
//!
//! A session starts by cycling a highlight over the four quadrants of the
//! screen. Each blink selects the highlighted quadrant and the cycle restarts
//! inside it, for `max_depth` levels. The next blink picks one of eight
//! movement directions, the cursor then creeps from the center of the final
//! block along that direction until another blink stops it, and a last blink
//! picks an action from the menu.
//!
//! The automaton is a pure value: [`tick`] and [`blink`] return new states.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{step_within, Direction, Point, Region};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScanError {
    #[error("invalid scan config: {0}")]
    InvalidConfig(&'static str),
    #[error("blink received after the selection completed")]
    BlinkAfterDone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Click,
    Copy,
    Cut,
    Paste,
    Edit,
    Cancel,
}

impl Action {
    pub const DEFAULT_MENU: [Action; 5] = [
        Action::Click,
        Action::Copy,
        Action::Cut,
        Action::Paste,
        Action::Cancel,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub screen: Region,
    pub scan_interval_ms: u64,
    pub max_depth: u32,
    pub directions: Vec<Direction>,
    pub step_px: u32,
    pub actions: Vec<Action>,
    /// Return to the initial state after this long without a blink. Off by default.
    #[serde(default)]
    pub idle_reset_ms: Option<u64>,
}

impl ScanConfig {
    pub fn new(screen: Region, scan_interval_ms: u64) -> Self {
        Self {
            screen,
            scan_interval_ms,
            max_depth: 4,
            directions: Direction::SCAN_ORDER.to_vec(),
            step_px: 8,
            actions: Action::DEFAULT_MENU.to_vec(),
            idle_reset_ms: None,
        }
    }

    pub fn with_depth(mut self, max_depth: u32) -> Self {
        self.max_depth = max_depth;
        self
    }

    pub fn with_step(mut self, step_px: u32) -> Self {
        self.step_px = step_px;
        self
    }

    pub fn with_interval(mut self, scan_interval_ms: u64) -> Self {
        self.scan_interval_ms = scan_interval_ms;
        self
    }

    pub fn validate(&self) -> Result<(), ScanError> {
        if self.screen.is_empty() {
            return Err(ScanError::InvalidConfig("screen must be at least 1x1"));
        }
        if self.scan_interval_ms == 0 {
            return Err(ScanError::InvalidConfig(
                "scan_interval_ms must be positive",
            ));
        }
        if self.max_depth == 0 {
            return Err(ScanError::InvalidConfig("max_depth must be at least 1"));
        }
        if self.step_px == 0 {
            return Err(ScanError::InvalidConfig("step_px must be at least 1"));
        }
        if self.directions.len() != 8 {
            return Err(ScanError::InvalidConfig(
                "exactly 8 directions are required",
            ));
        }
        for (i, d) in self.directions.iter().enumerate() {
            if self.directions[..i].contains(d) {
                return Err(ScanError::InvalidConfig("directions must be distinct"));
            }
        }
        if self.actions.is_empty() {
            return Err(ScanError::InvalidConfig("action menu is empty"));
        }
        Ok(())
    }

    pub fn action_index(&self, action: Action) -> Option<usize> {
        self.actions.iter().position(|&a| a == action)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum Phase {
    BlockScan { depth: u32, highlight: usize },
    DirectionScan { highlight: usize },
    CursorMove { direction: usize },
    ActionMenu { highlight: usize },
    Done { action: Action, point: Point },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanState {
    #[serde(flatten)]
    pub phase: Phase,
    pub active: Region,
    pub cursor: Option<Point>,
    pub elapsed_in_item_ms: u64,
    /// Time since the last blink, only consulted for the idle reset.
    #[serde(default)]
    pub idle_ms: u64,
}

/// What a renderer should emphasize for a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Highlight {
    Quadrant { index: usize, region: Region },
    Direction { index: usize, direction: Direction },
    Moving { direction: Direction, cursor: Point },
    Action { index: usize, action: Action },
    Done { action: Action, point: Point },
}

pub fn initial_state(cfg: &ScanConfig) -> ScanState {
    ScanState {
        phase: Phase::BlockScan {
            depth: 1,
            highlight: first_quadrant(&cfg.screen),
        },
        active: cfg.screen,
        cursor: None,
        elapsed_in_item_ms: 0,
        idle_ms: 0,
    }
}

pub fn tick(state: &ScanState, cfg: &ScanConfig, dt_ms: u64) -> ScanState {
    state.tick(cfg, dt_ms)
}

pub fn blink(state: &ScanState, cfg: &ScanConfig) -> Result<ScanState, ScanError> {
    state.blink(cfg)
}

fn first_quadrant(r: &Region) -> usize {
    r.quadrants()
        .iter()
        .position(Option::is_some)
        .expect("non-empty region has a child")
}

fn next_quadrant(r: &Region, from: usize, steps: u64) -> usize {
    let live: Vec<usize> = (0..4).filter(|&i| r.quadrant(i).is_some()).collect();
    let pos = live.iter().position(|&i| i == from).unwrap_or(0);
    live[(pos + (steps % live.len() as u64) as usize) % live.len()]
}

impl ScanState {
    pub fn initial(cfg: &ScanConfig) -> Self {
        initial_state(cfg)
    }

    pub fn is_done(&self) -> bool {
        matches!(self.phase, Phase::Done { .. })
    }

    /// Number of items the highlight cycles through in the current phase.
    /// Cursor movement counts one item per direction.
    pub fn items_in_phase(&self, cfg: &ScanConfig) -> usize {
        match self.phase {
            Phase::BlockScan { .. } => self.active.quadrants().iter().flatten().count(),
            Phase::DirectionScan { .. } | Phase::CursorMove { .. } => cfg.directions.len(),
            Phase::ActionMenu { .. } => cfg.actions.len(),
            Phase::Done { .. } => 0,
        }
    }

    /// Milliseconds until the highlight (or cursor) next advances.
    pub fn until_advance(&self, cfg: &ScanConfig) -> u64 {
        cfg.scan_interval_ms - self.elapsed_in_item_ms
    }

    pub fn tick(&self, cfg: &ScanConfig, dt_ms: u64) -> ScanState {
        let mut next = self.clone();
        if next.is_done() {
            return next;
        }
        next.idle_ms += dt_ms;
        if let Some(limit) = cfg.idle_reset_ms {
            if next.idle_ms >= limit {
                return initial_state(cfg);
            }
        }
        let total = next.elapsed_in_item_ms + dt_ms;
        next.elapsed_in_item_ms = total % cfg.scan_interval_ms;
        next.advance(cfg, total / cfg.scan_interval_ms);
        next
    }

    fn advance(&mut self, cfg: &ScanConfig, steps: u64) {
        if steps == 0 {
            return;
        }
        match &mut self.phase {
            Phase::BlockScan { highlight, .. } => {
                *highlight = next_quadrant(&self.active, *highlight, steps);
            }
            Phase::DirectionScan { highlight } => {
                *highlight = (*highlight + (steps % 8) as usize) % 8;
            }
            Phase::ActionMenu { highlight } => {
                let n = cfg.actions.len();
                *highlight = (*highlight + (steps % n as u64) as usize) % n;
            }
            Phase::CursorMove { direction } => {
                let dir = cfg.directions[*direction];
                let mut p = self.cursor.expect("cursor is set while moving");
                for _ in 0..steps {
                    let q = step_within(p, dir, cfg.step_px, &self.active);
                    if q == p {
                        break;
                    }
                    p = q;
                }
                self.cursor = Some(p);
            }
            Phase::Done { .. } => {}
        }
    }

    pub fn blink(&self, cfg: &ScanConfig) -> Result<ScanState, ScanError> {
        let mut next = self.clone();
        next.elapsed_in_item_ms = 0;
        next.idle_ms = 0;
        next.phase = match self.phase {
            Phase::BlockScan { depth, highlight } => {
                next.active = self
                    .active
                    .quadrant(highlight)
                    .expect("highlight always rests on a non-empty quadrant");
                if depth < cfg.max_depth {
                    Phase::BlockScan {
                        depth: depth + 1,
                        highlight: first_quadrant(&next.active),
                    }
                } else {
                    next.cursor = Some(next.active.center());
                    Phase::DirectionScan { highlight: 0 }
                }
            }
            Phase::DirectionScan { highlight } => Phase::CursorMove {
                direction: highlight,
            },
            Phase::CursorMove { .. } => Phase::ActionMenu { highlight: 0 },
            Phase::ActionMenu { highlight } => Phase::Done {
                action: cfg.actions[highlight],
                point: self.cursor.expect("cursor is set in the action menu"),
            },
            Phase::Done { .. } => return Err(ScanError::BlinkAfterDone),
        };
        Ok(next)
    }

    pub fn highlight(&self, cfg: &ScanConfig) -> Highlight {
        match self.phase {
            Phase::BlockScan { highlight, .. } => Highlight::Quadrant {
                index: highlight,
                region: self.active.quadrant(highlight).expect("non-empty quadrant"),
            },
            Phase::DirectionScan { highlight } => Highlight::Direction {
                index: highlight,
                direction: cfg.directions[highlight],
            },
            Phase::CursorMove { direction } => Highlight::Moving {
                direction: cfg.directions[direction],
                cursor: self.cursor.expect("cursor is set while moving"),
            },
            Phase::ActionMenu { highlight } => Highlight::Action {
                index: highlight,
                action: cfg.actions[highlight],
            },
            Phase::Done { action, point } => Highlight::Done { action, point },
        }
    }
}

// ---------------------------------------------------------------------------
// Intent helpers shared by the acquisition planner and simulated users.
// ---------------------------------------------------------------------------

/// Quadrant of `active` an aiming user would pick for `target`: the one
/// holding the target center, or the point of `active` closest to it.
pub fn preferred_quadrant(active: &Region, target: &Region) -> usize {
    let aim = active.clamp(target.center());
    active
        .quadrants()
        .iter()
        .position(|q| q.is_some_and(|q| q.contains(aim)))
        .expect("quadrants tile the parent")
}

/// Steps along `dir` from `from` before the cursor lands in `target`, or
/// `None` if the clamped ray never gets there.
pub fn steps_to_target(
    from: Point,
    dir: Direction,
    cfg: &ScanConfig,
    bounds: &Region,
    target: &Region,
) -> Option<u32> {
    let mut p = from;
    let mut k = 0;
    loop {
        if target.contains(p) {
            return Some(k);
        }
        let q = step_within(p, dir, cfg.step_px, bounds);
        if q == p {
            return None;
        }
        p = q;
        k += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirectionChoice {
    pub index: usize,
    /// Steps until the cursor enters the target, when it can.
    pub steps: Option<u32>,
}

/// Direction an aiming user would pick: fewest steps into the target, ties
/// going to the earlier direction; if no ray reaches it, the ray passing
/// closest.
pub fn choose_direction(
    cursor: Point,
    bounds: &Region,
    target: &Region,
    cfg: &ScanConfig,
) -> DirectionChoice {
    let reaching = cfg
        .directions
        .iter()
        .enumerate()
        .filter_map(|(i, &d)| steps_to_target(cursor, d, cfg, bounds, target).map(|s| (s, i)))
        .min();
    if let Some((steps, index)) = reaching {
        // Already inside: any direction works, the first one costs no waiting.
        let index = if steps == 0 { 0 } else { index };
        return DirectionChoice {
            index,
            steps: Some(steps),
        };
    }
    let mut best = (u64::MAX, 0usize);
    for (i, &d) in cfg.directions.iter().enumerate() {
        let mut p = cursor;
        let mut closest = target.distance_sq(p);
        loop {
            let q = step_within(p, d, cfg.step_px, bounds);
            if q == p {
                break;
            }
            p = q;
            closest = closest.min(target.distance_sq(p));
        }
        if closest < best.0 {
            best = (closest, i);
        }
    }
    DirectionChoice {
        index: best.1,
        steps: None,
    }
}

/// Whether an aiming user would stop a moving cursor now: it is inside the
/// target, or moving on can no longer bring it closer.
pub fn should_stop(
    cursor: Point,
    dir: Direction,
    bounds: &Region,
    target: &Region,
    cfg: &ScanConfig,
) -> bool {
    if target.contains(cursor) {
        return true;
    }
    let next = step_within(cursor, dir, cfg.step_px, bounds);
    if next == cursor {
        return true;
    }
    steps_to_target(cursor, dir, cfg, bounds, target).is_none()
        && target.distance_sq(next) >= target.distance_sq(cursor)
}

/// The item an aiming user wants highlighted in the current phase.
/// `None` while the cursor is moving (see [`should_stop`]) and once done.
pub fn intended_item(
    state: &ScanState,
    cfg: &ScanConfig,
    target: &Region,
    menu_choice: Action,
) -> Option<usize> {
    match state.phase {
        Phase::BlockScan { .. } => Some(preferred_quadrant(&state.active, target)),
        Phase::DirectionScan { .. } => {
            let cursor = state.cursor.expect("cursor is set after descent");
            Some(choose_direction(cursor, &state.active, target, cfg).index)
        }
        Phase::ActionMenu { .. } => cfg.action_index(menu_choice).or(Some(0)),
        Phase::CursorMove { .. } | Phase::Done { .. } => None,
    }
}

/// Result of driving the automaton with perfect timing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Acquisition {
    pub blinks: u32,
    pub point: Point,
    /// Blink instants relative to the start, each `reaction_ms` after the
    /// intended item comes up.
    pub blink_times: Vec<u64>,
}

/// Drives the automaton as an ideal user who blinks `reaction_ms` after the
/// intended item is highlighted (`reaction_ms` below the scan interval).
/// Returns `None` when the selection does not end inside `target`.
pub fn plan_acquisition(
    target: &Region,
    cfg: &ScanConfig,
    reaction_ms: u64,
) -> Option<Acquisition> {
    if cfg.validate().is_err() || target.is_empty() || !cfg.screen.contains_region(target) {
        return None;
    }
    if reaction_ms >= cfg.scan_interval_ms {
        return None;
    }
    let mut state = initial_state(cfg);
    let mut t = 0u64;
    let mut blink_times = Vec::new();
    loop {
        if let Phase::Done { action, point } = state.phase {
            let ok = action == Action::Click && target.contains(point);
            return ok.then_some(Acquisition {
                blinks: blink_times.len() as u32,
                point,
                blink_times,
            });
        }
        let mut waited = 0usize;
        loop {
            let ready = match (
                state.phase,
                intended_item(&state, cfg, target, Action::Click),
            ) {
                (Phase::BlockScan { highlight, .. }, Some(i))
                | (Phase::DirectionScan { highlight }, Some(i))
                | (Phase::ActionMenu { highlight }, Some(i)) => highlight == i,
                (Phase::CursorMove { direction }, _) => {
                    let cursor = state.cursor.expect("cursor set while moving");
                    should_stop(
                        cursor,
                        cfg.directions[direction],
                        &state.active,
                        target,
                        cfg,
                    )
                }
                _ => unreachable!("done handled above"),
            };
            if ready {
                break;
            }
            waited += 1;
            if waited > 4 * cfg.directions.len() + (state.active.w + state.active.h) as usize {
                return None;
            }
            state = state.tick(cfg, cfg.scan_interval_ms);
            t += cfg.scan_interval_ms;
        }
        state = state.tick(cfg, reaction_ms);
        t += reaction_ms;
        blink_times.push(t);
        state = state.blink(cfg).ok()?;
    }
}

/// Minimum blinks for an ideal user to click inside `target`.
pub fn blinks_to_acquire(target: &Region, cfg: &ScanConfig) -> Option<u32> {
    plan_acquisition(target, cfg, 0).map(|a| a.blinks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(w: u32, h: u32) -> ScanConfig {
        ScanConfig::new(Region::screen(w, h), 1000)
    }

    #[test]
    fn initial_covers_screen() {
        for (w, h) in [(1024, 1024), (1920, 1080)] {
            let s = initial_state(&cfg(w, h));
            assert_eq!(s.active, Region::screen(w, h));
            assert_eq!(
                s.phase,
                Phase::BlockScan {
                    depth: 1,
                    highlight: 0
                }
            );
            assert_eq!(s.elapsed_in_item_ms, 0);
            assert_eq!(s.cursor, None);
        }
    }

    #[test]
    fn block_highlight_wraps() {
        let c = cfg(1024, 1024);
        let mut s = initial_state(&c);
        s.phase = Phase::BlockScan {
            depth: 1,
            highlight: 3,
        };
        let s = s.tick(&c, 1000);
        assert_eq!(
            s.phase,
            Phase::BlockScan {
                depth: 1,
                highlight: 0
            }
        );
    }

    #[test]
    fn partial_ticks_accumulate() {
        let c = cfg(1024, 1024);
        let s = initial_state(&c).tick(&c, 400).tick(&c, 400);
        assert_eq!(
            s.phase,
            Phase::BlockScan {
                depth: 1,
                highlight: 0
            }
        );
        let s = s.tick(&c, 400);
        assert_eq!(
            s.phase,
            Phase::BlockScan {
                depth: 1,
                highlight: 1
            }
        );
        assert_eq!(s.elapsed_in_item_ms, 200);
    }

    #[test]
    fn cursor_moves_right() {
        let c = cfg(1024, 1024).with_step(10);
        let s = ScanState {
            phase: Phase::CursorMove { direction: 6 },
            active: Region::screen(1024, 1024),
            cursor: Some(Point::new(100, 100)),
            elapsed_in_item_ms: 0,
            idle_ms: 0,
        };
        let s = s.tick(&c, 3000);
        assert_eq!(s.cursor, Some(Point::new(130, 100)));
    }

    #[test]
    fn cursor_clamps_at_edge() {
        let c = cfg(1024, 1024).with_step(10);
        let active = Region::new(0, 0, 64, 64);
        let s = ScanState {
            phase: Phase::CursorMove { direction: 6 },
            active,
            cursor: Some(Point::new(63, 20)),
            elapsed_in_item_ms: 0,
            idle_ms: 0,
        };
        for n in [1, 5, 50] {
            assert_eq!(s.tick(&c, 1000 * n).cursor, Some(Point::new(63, 20)));
        }
    }

    #[test]
    fn four_tl_blinks_reach_64_block() {
        let c = cfg(1024, 1024);
        let mut s = initial_state(&c);
        for _ in 0..4 {
            s = s.blink(&c).unwrap();
        }
        assert_eq!(s.active, Region::new(0, 0, 64, 64));
        assert_eq!(s.phase, Phase::DirectionScan { highlight: 0 });
        assert_eq!(s.cursor, Some(Point::new(32, 32)));
    }

    #[test]
    fn odd_screen_tl_then_tr() {
        let c = cfg(1023, 1023);
        let s = initial_state(&c).blink(&c).unwrap();
        assert_eq!(s.active, Region::new(0, 0, 511, 511));
        let s = s.tick(&c, 1000).blink(&c).unwrap();
        assert_eq!(s.active, Region::new(255, 0, 256, 255));
    }

    #[test]
    fn direction_blink_starts_movement() {
        let c = cfg(1024, 1024);
        let s = ScanState {
            phase: Phase::DirectionScan { highlight: 2 },
            active: Region::new(0, 0, 64, 64),
            cursor: Some(Point::new(32, 32)),
            elapsed_in_item_ms: 300,
            idle_ms: 0,
        };
        let s = s.blink(&c).unwrap();
        assert_eq!(s.phase, Phase::CursorMove { direction: 2 });
        assert_eq!(c.directions[2], Direction::Left);
        assert_eq!(s.elapsed_in_item_ms, 0);
    }

    #[test]
    fn full_selection_and_done_rejects() {
        let c = cfg(1024, 1024);
        let mut s = initial_state(&c);
        for _ in 0..7 {
            s = s.blink(&c).unwrap();
        }
        assert_eq!(
            s.phase,
            Phase::Done {
                action: Action::Click,
                point: Point::new(32, 32)
            }
        );
        assert_eq!(s.blink(&c), Err(ScanError::BlinkAfterDone));
        assert_eq!(s.tick(&c, 5000), s);
    }

    #[test]
    fn action_menu_cycles() {
        let c = cfg(64, 64);
        let mut s = initial_state(&c);
        for _ in 0..6 {
            s = s.blink(&c).unwrap();
        }
        let s = s.tick(&c, 2000).blink(&c).unwrap();
        assert!(matches!(
            s.phase,
            Phase::Done {
                action: Action::Cut,
                ..
            }
        ));
    }

    #[test]
    fn blinks_to_acquire_counts() {
        let c = cfg(1024, 1024);
        assert_eq!(
            blinks_to_acquire(&Region::new(700, 300, 100, 100), &c),
            Some(7)
        );
        assert_eq!(
            blinks_to_acquire(&Region::new(700, 300, 100, 100), &c.clone().with_depth(1)),
            Some(4)
        );
        assert_eq!(blinks_to_acquire(&Region::new(2000, 0, 10, 10), &c), None);
    }

    #[test]
    fn idle_reset_returns_to_start() {
        let mut c = cfg(64, 64);
        c.idle_reset_ms = Some(5000);
        let s = initial_state(&c).blink(&c).unwrap();
        assert_eq!(s.tick(&c, 4999).active, Region::new(0, 0, 32, 32));
        assert_eq!(s.tick(&c, 5000), initial_state(&c));
    }

    #[test]
    fn config_validation() {
        let mut c = cfg(64, 64);
        assert!(c.validate().is_ok());
        c.directions[1] = Direction::Up;
        assert!(c.validate().is_err());
        assert!(cfg(64, 64).with_interval(0).validate().is_err());
        assert!(cfg(64, 64).with_depth(0).validate().is_err());
        assert!(cfg(64, 64).with_step(0).validate().is_err());
    }
}
