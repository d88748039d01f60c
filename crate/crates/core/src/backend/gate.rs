use std::sync::{Condvar, Mutex};

#[derive(Debug, Default)]
struct GateState {
    next_ticket: u64,
    now_serving: u64,
    in_flight: usize,
}

/// Counting gate with first-come-first-served admission: callers are
/// admitted strictly in ticket order and never more than `limit` at once.
#[derive(Debug)]
pub struct AdmissionGate {
    limit: usize,
    state: Mutex<GateState>,
    changed: Condvar,
}

/// Releases its slot on drop.
#[derive(Debug)]
pub struct Permit<'a> {
    gate: &'a AdmissionGate,
}

impl AdmissionGate {
    pub fn new(limit: usize) -> Self {
        AdmissionGate {
            limit: limit.max(1),
            state: Mutex::new(GateState::default()),
            changed: Condvar::new(),
        }
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut state = self.state.lock().unwrap_or_else(|e| e.into_inner());
        let ticket = state.next_ticket;
        state.next_ticket += 1;
        while state.now_serving != ticket || state.in_flight >= self.limit {
            state = self.changed.wait(state).unwrap_or_else(|e| e.into_inner());
        }
        state.now_serving += 1;
        state.in_flight += 1;
        drop(state);
        self.changed.notify_all();
        Permit { gate: self }
    }

    pub fn in_flight(&self) -> usize {
        self.state.lock().unwrap_or_else(|e| e.into_inner()).in_flight
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut state = self.gate.state.lock().unwrap_or_else(|e| e.into_inner());
        state.in_flight -= 1;
        drop(state);
        self.gate.changed.notify_all();
    }
}
