//! Grid-level summaries of index fields: drought-area fractions, event peaks
//! and per-pixel Kendall's tau between two indices.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::copula::empirical_kendall_tau;
use crate::index::{classify, Category, IndexSeries};
use crate::series::{stamp_range, TimeStamp};

/// D3 or D4, i.e. `value <= -1.64`.
pub const DROUGHT_CATEGORIES: [Category; 2] = [Category::D3, Category::D4];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("no pixels")]
    EmptyGrid,
    #[error("pixel {pixel} is not aligned with pixel 0 (start or length differs)")]
    Misaligned { pixel: usize },
    #[error("the two index fields have {a} and {b} pixels")]
    PixelCountMismatch { a: usize, b: usize },
    #[error("window {start}..={end} contains no defined fraction")]
    EmptyWindow { start: TimeStamp, end: TimeStamp },
    #[error("window {start}..={end} is outside the series range {first}..={last}")]
    WindowOutOfRange {
        start: TimeStamp,
        end: TimeStamp,
        first: TimeStamp,
        last: TimeStamp,
    },
}

/// Share of pixels in the threshold categories, per stamp. `None` where no
/// pixel has a defined index value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaSeries {
    pub start: TimeStamp,
    pub fraction: Vec<Option<f64>>,
}

impl AreaSeries {
    pub fn stamps(&self) -> Vec<TimeStamp> {
        stamp_range(self.start, self.fraction.len())
    }

    pub fn len(&self) -> usize {
        self.fraction.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fraction.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroughtEvent {
    pub window: (TimeStamp, TimeStamp),
    pub peak_stamp: TimeStamp,
    pub peak_fraction: f64,
}

fn check_aligned(indices: &[IndexSeries]) -> Result<(), AnalyticsError> {
    let first = indices.first().ok_or(AnalyticsError::EmptyGrid)?;
    match indices
        .iter()
        .position(|s| s.start != first.start || s.len() != first.len())
    {
        Some(pixel) => Err(AnalyticsError::Misaligned { pixel }),
        None => Ok(()),
    }
}

/// Per stamp, the fraction of pixels whose category is in `categories`,
/// among pixels with a defined value at that stamp.
pub fn area_affected(indices: &[IndexSeries], categories: &[Category]) -> Result<AreaSeries, AnalyticsError> {
    check_aligned(indices)?;
    let t = indices[0].len();
    let fraction = (0..t)
        .map(|k| {
            let (mut hit, mut defined) = (0usize, 0usize);
            for s in indices {
                if let Some(v) = s.values[k] {
                    defined += 1;
                    if categories.contains(&classify(v)) {
                        hit += 1;
                    }
                }
            }
            (defined > 0).then(|| hit as f64 / defined as f64)
        })
        .collect();
    Ok(AreaSeries {
        start: indices[0].start,
        fraction,
    })
}

/// Stamp of the largest fraction inside the inclusive window; the earliest
/// stamp wins ties. Undefined fractions are skipped.
pub fn peak_extent(area: &AreaSeries, window: (TimeStamp, TimeStamp)) -> Result<DroughtEvent, AnalyticsError> {
    let (start, end) = window;
    let empty = AnalyticsError::EmptyWindow { start, end };
    if area.is_empty() || start > end {
        return Err(empty);
    }
    let first = area.start;
    let last = first.add_months(area.len() as i64 - 1);
    if start < first || end > last {
        return Err(AnalyticsError::WindowOutOfRange {
            start,
            end,
            first,
            last,
        });
    }
    let lo = first.months_until(&start) as usize;
    let hi = first.months_until(&end) as usize;
    let mut best: Option<(usize, f64)> = None;
    for k in lo..=hi {
        if let Some(f) = area.fraction[k] {
            if best.is_none_or(|(_, b)| f > b) {
                best = Some((k, f));
            }
        }
    }
    let (k, peak_fraction) = best.ok_or(empty)?;
    Ok(DroughtEvent {
        window,
        peak_stamp: first.add_months(k as i64),
        peak_fraction,
    })
}

/// Kendall's tau between two index fields, pixel by pixel, over the stamps
/// where both are defined. Cells with fewer than two joint values are `None`.
pub fn tau_map(a: &[IndexSeries], b: &[IndexSeries]) -> Result<Vec<Option<f64>>, AnalyticsError> {
    if a.len() != b.len() {
        return Err(AnalyticsError::PixelCountMismatch { a: a.len(), b: b.len() });
    }
    check_aligned(a)?;
    check_aligned(b)?;
    if a[0].start != b[0].start || a[0].len() != b[0].len() {
        return Err(AnalyticsError::Misaligned { pixel: 0 });
    }
    Ok(a.par_iter()
        .zip(b.par_iter())
        .map(|(sa, sb)| {
            let (x, y): (Vec<f64>, Vec<f64>) = sa
                .values
                .iter()
                .zip(&sb.values)
                .filter_map(|(p, q)| Some(((*p)?, (*q)?)))
                .unzip();
            empirical_kendall_tau(&x, &y).ok()
        })
        .collect())
}
