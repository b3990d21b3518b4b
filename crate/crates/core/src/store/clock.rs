use chrono::{DateTime, TimeDelta, Utc};

/// Source of journal timestamps.
pub trait Clock: Send + Sync {
    fn timestamp(&self, seq: u64) -> DateTime<Utc>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn timestamp(&self, _seq: u64) -> DateTime<Utc> {
        Utc::now()
    }
}

/// `base + seq` seconds; makes journals reproducible byte for byte.
#[derive(Debug, Clone, Copy)]
pub struct LogicalClock {
    pub base: DateTime<Utc>,
}

impl Default for LogicalClock {
    fn default() -> Self {
        LogicalClock {
            base: DateTime::<Utc>::UNIX_EPOCH,
        }
    }
}

impl Clock for LogicalClock {
    fn timestamp(&self, seq: u64) -> DateTime<Utc> {
        self.base + TimeDelta::seconds(i64::try_from(seq).unwrap_or(i64::MAX / 2_000))
    }
}
