//! The web-service TRE. Demand changes are acted on immediately rather than
//! at lease ticks; the provider decides where the nodes come from.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WsDelta {
    Request(u32),
    Release(u32),
    None,
}

/// What the WS asks of the provider when its demand becomes `new_demand`.
/// Nodes still in setup count toward the demand; only settled nodes can be
/// released.
pub fn on_demand_change(owned: u32, in_setup: u32, new_demand: u32) -> WsDelta {
    let have = owned + in_setup;
    if new_demand > have {
        WsDelta::Request(new_demand - have)
    } else if have > new_demand && owned > 0 {
        WsDelta::Release((have - new_demand).min(owned))
    } else {
        WsDelta::None
    }
}

/// Demand tracking and the node-seconds of demand left uncovered.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WsState {
    pub current_demand: u32,
    pub unmet_node_s: u64,
    last_s: u64,
}

impl WsState {
    pub fn new(initial_demand: u32) -> Self {
        WsState {
            current_demand: initial_demand,
            unmet_node_s: 0,
            last_s: 0,
        }
    }

    /// Accrues shortfall up to `now_s` given the nodes owned since the last
    /// call.
    pub fn accrue(&mut self, now_s: u64, owned: u32) {
        let gap = self.current_demand.saturating_sub(owned);
        self.unmet_node_s += u64::from(gap) * (now_s - self.last_s);
        self.last_s = now_s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deltas() {
        assert_eq!(on_demand_change(20, 0, 26), WsDelta::Request(6));
        assert_eq!(on_demand_change(26, 0, 20), WsDelta::Release(6));
        assert_eq!(on_demand_change(20, 0, 20), WsDelta::None);
        assert_eq!(on_demand_change(20, 6, 26), WsDelta::None);
        assert_eq!(on_demand_change(20, 6, 10), WsDelta::Release(16));
        assert_eq!(on_demand_change(2, 10, 0), WsDelta::Release(2));
        assert_eq!(on_demand_change(0, 10, 0), WsDelta::None);
    }

    #[test]
    fn unmet_accrual() {
        let mut s = WsState::new(10);
        s.accrue(100, 10);
        assert_eq!(s.unmet_node_s, 0);
        s.current_demand = 16;
        s.accrue(400, 10);
        assert_eq!(s.unmet_node_s, 6 * 300);
    }
}
