use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row key of the action-value table: a cluster together with one
/// hard-decision pattern of its neighbouring VNs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateKey {
    pub cluster: u32,
    pub state: u64,
}

impl StateKey {
    pub fn new(cluster: usize, state: u64) -> Self {
        Self {
            cluster: cluster as u32,
            state,
        }
    }
}

/// Sparse action-value table. Unmaterialised cells read as 0.
///
/// Rows are stored as short sorted `(action, value)` lists since training
/// only ever touches a handful of actions per state.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(into = "QTableRepr", from = "QTableRepr")]
pub struct QTable {
    num_actions: usize,
    rows: HashMap<StateKey, Vec<(u32, f64)>>,
}

impl QTable {
    pub fn new(num_actions: usize) -> Self {
        Self {
            num_actions,
            rows: HashMap::new(),
        }
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// Number of materialised rows.
    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Number of materialised cells.
    pub fn num_cells(&self) -> usize {
        self.rows.values().map(Vec::len).sum()
    }

    pub fn get(&self, key: StateKey, action: usize) -> f64 {
        self.rows
            .get(&key)
            .and_then(|row| {
                row.binary_search_by_key(&(action as u32), |&(a, _)| a)
                    .ok()
                    .map(|i| row[i].1)
            })
            .unwrap_or(0.0)
    }

    pub fn set(&mut self, key: StateKey, action: usize, value: f64) {
        debug_assert!(action < self.num_actions);
        debug_assert!(value.is_finite());
        let row = self.rows.entry(key).or_default();
        match row.binary_search_by_key(&(action as u32), |&(a, _)| a) {
            Ok(i) => row[i].1 = value,
            Err(i) => row.insert(i, (action as u32, value)),
        }
    }

    /// `max_a' Q(key, a')`, counting unmaterialised cells as 0.
    pub fn row_max(&self, key: StateKey) -> f64 {
        match self.rows.get(&key) {
            None => 0.0,
            Some(row) => {
                let stored = row
                    .iter()
                    .map(|&(_, v)| v)
                    .fold(f64::NEG_INFINITY, f64::max);
                if row.len() < self.num_actions {
                    stored.max(0.0)
                } else {
                    stored
                }
            }
        }
    }

    /// Dense copy of one row.
    pub fn row(&self, key: StateKey) -> Vec<f64> {
        let mut dense = vec![0.0; self.num_actions];
        if let Some(row) = self.rows.get(&key) {
            for &(a, v) in row {
                dense[a as usize] = v;
            }
        }
        dense
    }

    /// Materialised cells in key order.
    pub fn sorted_cells(&self) -> Vec<(StateKey, u32, f64)> {
        let mut keys: Vec<&StateKey> = self.rows.keys().collect();
        keys.sort_unstable();
        keys.into_iter()
            .flat_map(|k| self.rows[k].iter().map(move |&(a, v)| (*k, a, v)))
            .collect()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows
            .values()
            .flat_map(|row| row.iter().map(|&(_, v)| v))
    }

    /// Cell-wise mean of several tables with the same action count.
    pub fn average(tables: &[QTable]) -> Result<QTable> {
        let first = tables
            .first()
            .ok_or_else(|| Error::InvalidArgument("no tables to average".into()))?;
        if tables.iter().any(|t| t.num_actions != first.num_actions) {
            return Err(Error::InvalidArgument(
                "tables disagree on action count".into(),
            ));
        }
        let mut cells: Vec<(StateKey, u32)> = tables
            .iter()
            .flat_map(|t| {
                t.rows
                    .iter()
                    .flat_map(|(k, row)| row.iter().map(move |&(a, _)| (*k, a)))
            })
            .collect();
        cells.sort_unstable();
        cells.dedup();
        let k = tables.len() as f64;
        let mut out = QTable::new(first.num_actions);
        for (key, a) in cells {
            let sum: f64 = tables.iter().map(|t| t.get(key, a as usize)).sum();
            out.set(key, a as usize, sum / k);
        }
        Ok(out)
    }

    /// Order-independent hash of the effective table contents.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        eat(self.num_actions as u64);
        for (k, a, v) in self.sorted_cells() {
            if v != 0.0 {
                eat(u64::from(k.cluster));
                eat(k.state);
                eat(u64::from(a));
                eat(v.to_bits());
            }
        }
        h
    }
}

/// On-disk form: sorted `(cluster, state, action, value)` cells.
#[derive(Serialize, Deserialize)]
struct QTableRepr {
    num_actions: usize,
    cells: Vec<(u32, u64, u32, f64)>,
}

impl From<QTable> for QTableRepr {
    fn from(q: QTable) -> Self {
        Self {
            num_actions: q.num_actions,
            cells: q
                .sorted_cells()
                .into_iter()
                .map(|(k, a, v)| (k.cluster, k.state, a, v))
                .collect(),
        }
    }
}

impl From<QTableRepr> for QTable {
    fn from(r: QTableRepr) -> Self {
        let mut q = QTable::new(r.num_actions);
        for (cluster, state, a, v) in r.cells {
            q.set(StateKey { cluster, state }, a as usize, v);
        }
        q
    }
}

impl PartialEq for QTable {
    /// Tables are equal when every cell, materialised or default, agrees.
    fn eq(&self, other: &Self) -> bool {
        if self.num_actions != other.num_actions {
            return false;
        }
        let covers = |a: &QTable, b: &QTable| {
            a.rows
                .iter()
                .all(|(k, row)| row.iter().all(|&(act, v)| b.get(*k, act as usize) == v))
        };
        covers(self, other) && covers(other, self)
    }
}
