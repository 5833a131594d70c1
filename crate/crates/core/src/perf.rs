//! Timing harness for scene ingestion and a least-squares line fit.

use std::time::Instant;

use serde::Serialize;

use crate::exec::Execution;
use crate::extract::{
    describe_nodes, extract_nodes_with, infer_edges, synthetic_scatter, ExtractError,
    ExtractionOptions, Template,
};
use crate::graph::build_graph;

pub const DEFAULT_SIZES: &[usize] = &[406, 20_300];
pub const FIT_SIZES: &[usize] = &[1_000, 5_000, 10_000, 20_000];
pub const MIN_REPS: usize = 10;

/// Median timings in milliseconds for one scene size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub size: usize,
    pub reps: usize,
    /// Extraction, description and edge inference.
    pub ingest_ms: f64,
    pub build_ms: f64,
    pub total_ms: f64,
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    }
}

/// Times ingest of a synthetic scatter scene of `size` marks. Scene
/// generation is outside the timed region. `reps` is raised to at least
/// [`MIN_REPS`].
pub fn time_ingest(
    size: usize,
    reps: usize,
    options: &ExtractionOptions,
    exec: Execution,
) -> Result<Timing, ExtractError> {
    let reps = reps.max(MIN_REPS);
    let scene = synthetic_scatter(size, size as u64);
    let template = Template::resolve(&options.description_template)?;
    let mut ingest = Vec::with_capacity(reps);
    let mut build = Vec::with_capacity(reps);
    let mut total = Vec::with_capacity(reps);
    for _ in 0..reps {
        let t0 = Instant::now();
        let mut nodes = extract_nodes_with(&scene, exec)?;
        describe_nodes(&mut nodes, &template, exec)?;
        let decl = infer_edges(nodes, options.mode)?;
        let t1 = Instant::now();
        let graph = build_graph(decl)?;
        let t2 = Instant::now();
        drop(graph);
        ingest.push(ms(t1 - t0));
        build.push(ms(t2 - t1));
        total.push(ms(t2 - t0));
    }
    Ok(Timing {
        size,
        reps,
        ingest_ms: median(&mut ingest),
        build_ms: median(&mut build),
        total_ms: median(&mut total),
    })
}

fn ms(d: std::time::Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope * x + intercept`. Needs two distinct
/// x values. A perfectly flat `y` fits with R² = 1.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

pub fn fit_timings(timings: &[Timing]) -> Option<LinearFit> {
    let xs: Vec<f64> = timings.iter().map(|t| t.size as f64).collect();
    let ys: Vec<f64> = timings.iter().map(|t| t.total_ms).collect();
    linear_fit(&xs, &ys)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_odd_even() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 3.0, 2.0]), 2.5);
        assert!(median(&mut []).is_nan());
    }

    #[test]
    fn exact_line() {
        let fit = linear_fit(&[1.0, 2.0, 3.0, 4.0], &[3.0, 5.0, 7.0, 9.0]).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn r_squared_against_hand_computation() {
        // y = (1, 3, 2): mean 2, ss_tot = 2; fit slope 0.5, intercept 1,
        // residuals (-0.5, 1, -0.5) so ss_res = 1.5 and R² = 0.25.
        let fit = linear_fit(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 0.25).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(linear_fit(&[1.0], &[1.0]).is_none());
        assert!(linear_fit(&[2.0, 2.0], &[1.0, 3.0]).is_none());
        assert!(linear_fit(&[1.0, 2.0], &[1.0]).is_none());
    }

    #[test]
    fn timing_shape() {
        let t = time_ingest(1, 1, &ExtractionOptions::default(), Execution::Sequential).unwrap();
        assert_eq!(t.size, 1);
        assert_eq!(t.reps, MIN_REPS);
        assert!(t.total_ms >= 0.0);
    }
}
