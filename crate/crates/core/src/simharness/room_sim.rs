//! In-process discrete-event run of a room: bot plans drive the facilitator
//! directly, with a 1 Hz tick, and every event goes through an [`EventLog`].

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand_chacha::ChaCha8Rng;

use super::bots::{text_rng, BotPlan, TextGen};
use super::SimError;
use crate::chatcore::{EventLog, Millis, RoomEvent, RoomState};
use crate::facilitator::Facilitator;

pub const TICK_MS: Millis = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Step {
    // Variant order breaks ties at equal times: bot actions before the tick.
    Arrive(usize),
    Post(usize, usize),
    Leave(usize),
    Tick,
}

/// Result of a simulated room run.
#[derive(Debug, Clone)]
pub struct RoomRun {
    pub events: Vec<RoomEvent>,
    pub final_state: RoomState,
}

/// Runs `plans` against a fresh room starting at absolute time `start`.
/// Plan times are offsets from `start`. The run ends when the last bot leaves.
pub fn simulate_room(facilitator: &Facilitator, plans: &[BotPlan], start: Millis) -> Result<RoomRun, SimError> {
    let texts = TextGen::default();
    let mut rngs: Vec<ChaCha8Rng> = plans.iter().map(text_rng).collect();
    let mut queue: BinaryHeap<Reverse<(Millis, Step)>> = BinaryHeap::new();
    for (i, plan) in plans.iter().enumerate() {
        queue.push(Reverse((start + plan.arrive_at, Step::Arrive(i))));
        if !plan.connect_fail {
            for (k, post) in plan.posts.iter().enumerate() {
                queue.push(Reverse((start + post.at, Step::Post(i, k))));
            }
            queue.push(Reverse((start + plan.leave_at, Step::Leave(i))));
        }
    }

    let mut state = RoomState::new();
    let mut log = EventLog::in_memory();
    let mut events = Vec::new();
    let mut record = |evs: Vec<RoomEvent>, log: &mut EventLog| -> Result<(), SimError> {
        for ev in evs {
            log.append(&ev)?;
            events.push(ev);
        }
        Ok(())
    };
    let mut next_tick: Option<Millis> = None;

    while let Some(Reverse((now, step))) = queue.pop() {
        match step {
            Step::Arrive(i) => {
                let plan = &plans[i];
                if plan.connect_fail {
                    let ev = RoomEvent::connect_fail(now, facilitator.room(), facilitator.agent_name(), &plan.name);
                    state.apply(&ev, &facilitator.state_config())?;
                    record(vec![ev], &mut log)?;
                } else {
                    let tr = facilitator.on_join(&mut state, &plan.name, now)?;
                    record(tr.events, &mut log)?;
                }
            }
            Step::Post(i, k) => {
                let prompt = state.topic_index.and_then(|t| facilitator.script().topic(t)).map(|t| t.prompt.as_str());
                let text = texts.compose(&mut rngs[i], prompt, plans[i].posts[k].on_topic);
                let tr = facilitator.on_message(&mut state, &plans[i].name, &text, now)?;
                record(tr.events, &mut log)?;
            }
            Step::Leave(i) => {
                let tr = facilitator.on_leave(&mut state, &plans[i].name, now)?;
                record(tr.events, &mut log)?;
            }
            Step::Tick => {
                next_tick = None;
                if !state.is_empty() {
                    let tr = facilitator.tick(&mut state, now)?;
                    record(tr.events, &mut log)?;
                }
            }
        }
        // Tick once per second of wall time while anyone is present.
        if !state.is_empty() && next_tick.is_none() {
            let t = start + ((now - start) / TICK_MS + 1) * TICK_MS;
            next_tick = Some(t);
            queue.push(Reverse((t, Step::Tick)));
        }
    }
    Ok(RoomRun { events, final_state: state })
}
