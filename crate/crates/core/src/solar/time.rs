//! Minimal UTC calendar arithmetic on Unix seconds.

/// Seconds since 1970-01-01T00:00:00Z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(pub i64);

pub const SECONDS_PER_HOUR: i64 = 3600;
pub const SECONDS_PER_DAY: i64 = 86_400;

/// Days since the epoch of a proleptic Gregorian date.
pub fn days_from_civil(year: i32, month: u32, day: u32) -> i64 {
    let y = i64::from(year) - i64::from(month <= 2);
    let era = y.div_euclid(400);
    let yoe = y - era * 400;
    let m = i64::from(month);
    let doy = (153 * (if m > 2 { m - 3 } else { m + 9 }) + 2) / 5 + i64::from(day) - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

/// Inverse of [`days_from_civil`]: `(year, month, day)`.
pub fn civil_from_days(days: i64) -> (i32, u32, u32) {
    let z = days + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    let y = yoe + era * 400 + i64::from(m <= 2);
    (y as i32, m, d)
}

pub fn is_leap_year(year: i32) -> bool {
    (year % 4 == 0 && year % 100 != 0) || year % 400 == 0
}

pub fn hours_in_year(year: i32) -> usize {
    if is_leap_year(year) {
        8784
    } else {
        8760
    }
}

impl Timestamp {
    pub fn from_ymd_hms(year: i32, month: u32, day: u32, hour: u32, minute: u32, second: u32) -> Self {
        Self(
            days_from_civil(year, month, day) * SECONDS_PER_DAY
                + i64::from(hour) * SECONDS_PER_HOUR
                + i64::from(minute) * 60
                + i64::from(second),
        )
    }

    pub fn unix_seconds(&self) -> i64 {
        self.0
    }

    pub fn date(&self) -> (i32, u32, u32) {
        civil_from_days(self.0.div_euclid(SECONDS_PER_DAY))
    }

    pub fn year(&self) -> i32 {
        self.date().0
    }

    /// Month 1..=12.
    pub fn month(&self) -> u32 {
        self.date().1
    }

    /// Day of year, 1-based.
    pub fn day_of_year(&self) -> u32 {
        let (y, _, _) = self.date();
        (self.0.div_euclid(SECONDS_PER_DAY) - days_from_civil(y, 1, 1)) as u32 + 1
    }

    pub fn seconds_of_day(&self) -> i64 {
        self.0.rem_euclid(SECONDS_PER_DAY)
    }

    /// Julian date (UT).
    pub fn julian_day(&self) -> f64 {
        self.0 as f64 / SECONDS_PER_DAY as f64 + 2_440_587.5
    }

    pub fn is_whole_hour(&self) -> bool {
        self.0.rem_euclid(SECONDS_PER_HOUR) == 0
    }

    pub fn plus_seconds(&self, s: i64) -> Self {
        Self(self.0 + s)
    }
}
