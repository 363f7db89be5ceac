//! Crowd-disaster analytics for mass religious gatherings.
//!
//! * [`dataset`]: the historical incident, inquiry and venue tables.
//! * [`regression`]: least squares with t-based inference and trend lines.
//! * [`crowdsim`]: a deterministic social-force evacuation simulator.
//! * [`risk`]: the Crowd Risk Index and density classification.
//! * [`textmine`]: TF-IDF and recurring-phrase mining of inquiry reports.

// `!(x > 0.0)` is used on purpose: unlike `x <= 0.0` it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod crowdsim;
pub mod dataset;
pub mod regression;
pub mod risk;
pub mod textmine;

/// Rounds to six decimals, the precision used in every serialized artifact.
pub fn round6(v: f64) -> f64 {
    if !v.is_finite() {
        return v;
    }
    let r = (v * 1e6).round() / 1e6;
    // avoid "-0.0" in golden files
    if r == 0.0 {
        0.0
    } else {
        r
    }
}
