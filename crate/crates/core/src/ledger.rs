//! Authoritative node accounting for one simulated cluster.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Capacity {
    Finite(u32),
    /// Public cloud. `reserved` nodes back the coordinated lower bounds;
    /// the provider-idle count is whatever part of them no TRE holds.
    Unbounded {
        reserved: u32,
    },
}

impl Capacity {
    pub fn finite(self) -> Option<u32> {
        match self {
            Capacity::Finite(n) => Some(n),
            Capacity::Unbounded { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pool {
    Provider,
    Pbj,
    Ws,
}

impl fmt::Display for Pool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pool::Provider => "provider",
            Pool::Pbj => "pbj",
            Pool::Ws => "ws",
        })
    }
}

/// Nodes that left their source and join `dest` once setup finishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PendingSetup {
    pub id: u64,
    pub nodes: u32,
    pub ready_s: u64,
    pub dest: Pool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLedger {
    capacity: Capacity,
    provider_idle: u32,
    pbj_owned: u32,
    pbj_in_use: u32,
    ws_owned: u32,
    pending: Vec<PendingSetup>,
    next_setup_id: u64,
}

impl ClusterLedger {
    pub fn new(capacity: Capacity) -> Self {
        ClusterLedger {
            capacity,
            provider_idle: capacity.finite().unwrap_or(0),
            pbj_owned: 0,
            pbj_in_use: 0,
            ws_owned: 0,
            pending: Vec::new(),
            next_setup_id: 0,
        }
    }

    pub fn capacity(&self) -> Capacity {
        self.capacity
    }

    pub fn pbj_owned(&self) -> u32 {
        self.pbj_owned
    }

    pub fn pbj_in_use(&self) -> u32 {
        self.pbj_in_use
    }

    pub fn pbj_idle(&self) -> u32 {
        self.pbj_owned - self.pbj_in_use
    }

    pub fn ws_owned(&self) -> u32 {
        self.ws_owned
    }

    pub fn pending(&self) -> &[PendingSetup] {
        &self.pending
    }

    pub fn pending_to(&self, dest: Pool) -> u32 {
        self.pending
            .iter()
            .filter(|p| p.dest == dest)
            .map(|p| p.nodes)
            .sum()
    }

    fn pending_total(&self) -> u32 {
        self.pending.iter().map(|p| p.nodes).sum()
    }

    /// Idle nodes at the provider. Unbounded clusters report only the unheld
    /// part of the reserved pool.
    pub fn provider_idle(&self) -> u32 {
        match self.capacity {
            Capacity::Finite(_) => self.provider_idle,
            Capacity::Unbounded { reserved } => {
                reserved.saturating_sub(self.pbj_owned + self.ws_owned + self.pending_total())
            }
        }
    }

    fn available(&self, pool: Pool) -> Option<u32> {
        match pool {
            Pool::Provider => self.capacity.finite().map(|_| self.provider_idle),
            Pool::Pbj => Some(self.pbj_idle()),
            Pool::Ws => Some(self.ws_owned),
        }
    }

    fn credit(&mut self, pool: Pool, n: u32) {
        match pool {
            Pool::Provider => {
                if self.capacity.finite().is_some() {
                    self.provider_idle += n;
                }
            }
            Pool::Pbj => self.pbj_owned += n,
            Pool::Ws => self.ws_owned += n,
        }
    }

    /// Moves `n` free nodes from one pool to another. Transfers into a TRE
    /// with positive latency park the nodes in setup and return the entry
    /// the caller must complete at `ready_s`.
    pub fn transfer(
        &mut self,
        from: Pool,
        to: Pool,
        n: u32,
        setup_latency_s: u64,
        now_s: u64,
    ) -> Result<Option<PendingSetup>> {
        if let Some(avail) = self.available(from) {
            if avail < n {
                return Err(Error::Accounting {
                    time_s: now_s,
                    msg: format!("transfer of {n} nodes {from} -> {to}, only {avail} free"),
                });
            }
        }
        match from {
            Pool::Provider => {
                if self.capacity.finite().is_some() {
                    self.provider_idle -= n;
                }
            }
            Pool::Pbj => self.pbj_owned -= n,
            Pool::Ws => self.ws_owned -= n,
        }
        if setup_latency_s == 0 || to == Pool::Provider {
            self.credit(to, n);
            return Ok(None);
        }
        let entry = PendingSetup {
            id: self.next_setup_id,
            nodes: n,
            ready_s: now_s + setup_latency_s,
            dest: to,
        };
        self.next_setup_id += 1;
        self.pending.push(entry);
        Ok(Some(entry))
    }

    pub fn complete_setup(&mut self, id: u64, now_s: u64) -> Result<PendingSetup> {
        let pos = self
            .pending
            .iter()
            .position(|p| p.id == id)
            .ok_or_else(|| Error::Accounting {
                time_s: now_s,
                msg: format!("unknown setup {id}"),
            })?;
        let entry = self.pending.remove(pos);
        self.credit(entry.dest, entry.nodes);
        Ok(entry)
    }

    pub fn start_jobs(&mut self, n: u32, now_s: u64) -> Result<()> {
        if self.pbj_idle() < n {
            return Err(Error::Accounting {
                time_s: now_s,
                msg: format!("starting {n} nodes of jobs with {} idle", self.pbj_idle()),
            });
        }
        self.pbj_in_use += n;
        Ok(())
    }

    pub fn finish_jobs(&mut self, n: u32, now_s: u64) -> Result<()> {
        if self.pbj_in_use < n {
            return Err(Error::Accounting {
                time_s: now_s,
                msg: format!("freeing {n} job nodes with {} in use", self.pbj_in_use),
            });
        }
        self.pbj_in_use -= n;
        Ok(())
    }

    /// Pool sums equal capacity (finite clusters) and in-use nodes never
    /// exceed owned nodes.
    pub fn check_conservation(&self, now_s: u64) -> Result<()> {
        if self.pbj_in_use > self.pbj_owned {
            return Err(Error::Accounting {
                time_s: now_s,
                msg: format!("pbj in use {} > owned {}", self.pbj_in_use, self.pbj_owned),
            });
        }
        if let Capacity::Finite(total) = self.capacity {
            let sum = u64::from(self.provider_idle)
                + u64::from(self.pbj_owned)
                + u64::from(self.ws_owned)
                + u64::from(self.pending_total());
            if sum != u64::from(total) {
                return Err(Error::Accounting {
                    time_s: now_s,
                    msg: format!(
                        "pools sum to {sum} (idle {} pbj {} ws {} setup {}) but capacity is {total}",
                        self.provider_idle,
                        self.pbj_owned,
                        self.ws_owned,
                        self.pending_total()
                    ),
                });
            }
        }
        Ok(())
    }
}
