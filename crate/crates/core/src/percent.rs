use std::fmt;

use serde::{Serialize, Serializer};

/// A percentage held as an integer number of hundredths, rounded half up.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Percent(u64);

impl Percent {
    /// `count / total` as a percentage; zero when `total` is zero.
    pub fn of(count: u64, total: u64) -> Percent {
        if total == 0 {
            return Percent(0);
        }
        let (count, total) = (u128::from(count), u128::from(total));
        // round(count * 10_000 / total) with halves going up
        Percent(((count * 20_000 + total) / (2 * total)) as u64)
    }

    /// Rounds a floating point percentage to hundredths, halves going up.
    pub fn from_f64(value: f64) -> Percent {
        Percent((value * 100.0 + 0.5).floor().max(0.0) as u64)
    }

    pub fn hundredths(self) -> u64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

impl Serialize for Percent {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.as_f64())
    }
}
