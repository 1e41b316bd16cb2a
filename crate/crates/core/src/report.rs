//! CSV renderings of run results.
//!
//! Column order is fixed. Times are printed with 3 decimals (millisecond
//! resolution), fractions with 6. Missing values print as `NA`.

use std::fmt::Write as _;

use crate::engine::{Event, SimResult};
use crate::geometry::Direction;
use crate::metrics::{records_for, DelayRecord, DelaySummary, EmpiricalCdf};

pub const DELAYS_HEADER: &str = "id,direction,scheduled_spawn,exit_time,delay";
pub const CDF_HEADER: &str = "scope,delay,cdf";
pub const SUMMARY_HEADER: &str = "scope,count,median,mean,max,frac_over_20s,non_drained";
pub const EVENTS_HEADER: &str = "time,vehicle,event,detail";

pub fn delays_csv(records: &[DelayRecord]) -> String {
    let mut s = String::with_capacity(40 * (records.len() + 1));
    s.push_str(DELAYS_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{:.3},{:.3},{:.3}",
            r.id, r.direction, r.scheduled_spawn, r.exit_time, r.delay
        );
    }
    s
}

/// Population scopes: everything pooled, then each direction.
pub fn scopes(records: &[DelayRecord]) -> Vec<(String, Vec<DelayRecord>)> {
    let mut out = vec![("pooled".to_string(), records.to_vec())];
    for d in Direction::ALL {
        out.push((format!("dir{d}"), records_for(records, d)));
    }
    out
}

pub fn cdf_csv(records: &[DelayRecord]) -> String {
    let mut s = String::new();
    s.push_str(CDF_HEADER);
    s.push('\n');
    for (scope, recs) in scopes(records) {
        for (x, f) in EmpiricalCdf::from_records(&recs).steps() {
            let _ = writeln!(s, "{scope},{x:.3},{f:.6}");
        }
    }
    s
}

fn summary_row(s: &mut String, scope: &str, records: &[DelayRecord], non_drained: usize) {
    match DelaySummary::of(records) {
        Ok(sum) => {
            let _ = writeln!(
                s,
                "{scope},{},{:.3},{:.3},{:.3},{:.6},{non_drained}",
                sum.count, sum.median, sum.mean, sum.max, sum.over_20s
            );
        }
        Err(_) => {
            let _ = writeln!(s, "{scope},0,NA,NA,NA,NA,{non_drained}");
        }
    }
}

pub fn summary_csv(result: &SimResult) -> String {
    let mut s = String::new();
    s.push_str(SUMMARY_HEADER);
    s.push('\n');
    for (scope, recs) in scopes(&result.records) {
        let non_drained = if scope == "pooled" { result.non_drained.len() } else { 0 };
        summary_row(&mut s, &scope, &recs, non_drained);
    }
    s
}

pub fn events_csv(events: &[Event]) -> String {
    let mut s = String::with_capacity(32 * (events.len() + 1));
    s.push_str(EVENTS_HEADER);
    s.push('\n');
    for e in events {
        let _ = writeln!(s, "{:.3},{},{},{}", e.time, e.vehicle, e.kind, e.detail);
    }
    s
}
