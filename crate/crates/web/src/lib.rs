//! Browser bindings for the demo page in `www/`.
//!
//! Every export takes plain numbers or JSON text and returns JSON text, so the
//! functions are equally usable from native tests.

use nalgebra::DMatrix;
use serde_json::json;
use wasm_bindgen::prelude::*;

use sigpath::expected_sig::{solve_recurrence, DomainShape, GridDomain};
use sigpath::lie::CoordinateMap;
use sigpath::logode::{linear_solve, solve, LinearSystem, LogOdeSchedule};
use sigpath::{log_signature, Stream, Word};

fn fail(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Signature, log-signature and Lévy area of a drawn polyline `[[x, y], ...]`.
#[wasm_bindgen]
pub fn path_signature(points_json: &str, depth: usize) -> Result<String, String> {
    let points: Vec<Vec<f64>> = serde_json::from_str(points_json).map_err(fail)?;
    if points.len() < 2 {
        return Err("draw at least two points".into());
    }
    if !(1..=6).contains(&depth) {
        return Err("depth must be between 1 and 6".into());
    }
    let stream = Stream::from_points(points).map_err(fail)?;
    let level2 = stream.signature(2);
    let area = 0.5
        * (level2.inner(&Word::from_letters([1, 2])).map_err(fail)?
            - level2.inner(&Word::from_letters([2, 1])).map_err(fail)?);
    let sig = stream.signature(depth);
    let log = log_signature(&stream, depth).map_err(fail)?;
    Ok(json!({
        "depth": depth,
        "levy_area": area,
        "signature": sig.word_map(),
        "log_signature": CoordinateMap(&log),
    })
    .to_string())
}

/// One component of the expected signature of Brownian motion stopped on
/// leaving the disk of radius `radius`, as a row-major image.
#[wasm_bindgen]
pub fn expected_signature_image(radius: f64, h: f64, word: &str) -> Result<String, String> {
    let word: Word = word.parse().map_err(fail)?;
    let word = Word::new(word.letters().to_vec(), 2).map_err(fail)?;
    if !(2..=4).contains(&word.degree()) {
        return Err("choose a word of length 2 to 4".into());
    }
    if !(radius > 0.0) || !(h > 0.0) || radius / h > 120.0 {
        return Err("need radius > 0 and at most 120 grid steps per radius".into());
    }
    let grid = GridDomain::new(DomainShape::Disk { radius }, h).map_err(fail)?;
    let field = solve_recurrence(&grid, word.degree()).map_err(fail)?;
    let (nx, ny) = grid.size();
    Ok(json!({
        "word": word.to_string(),
        "nx": nx,
        "ny": ny,
        "origin": grid.position(0, 0),
        "h": h,
        "max_residual": field.max_residual(),
        "values": field.component_image(&word).map_err(fail)?,
    })
    .to_string())
}

/// Log-ODE solution of `dY = ω K Y dX¹ + σ J Y dX²` (`K` a quarter turn,
/// `J = diag(1, −1)`) along a looping driver,
/// against the exact piecewise-linear solution at every step boundary.
#[wasm_bindgen]
pub fn rotation_log_ode(omega: f64, sigma: f64, steps: usize, depth: usize) -> Result<String, String> {
    if !(1..=256).contains(&steps) || !(1..=6).contains(&depth) {
        return Err("steps must lie in 1..=256 and depth in 1..=6".into());
    }
    let n = 512;
    let times: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let points: Vec<Vec<f64>> = times
        .iter()
        .map(|&t| {
            let a = 2.0 * std::f64::consts::PI * t;
            vec![a.sin() + 0.3 * (3.0 * a).sin(), (2.0 * a).sin() * 0.5]
        })
        .collect();
    let driver = Stream::new(times, points).map_err(fail)?;
    let sys = LinearSystem::new(vec![
        DMatrix::from_row_slice(2, 2, &[0.0, -omega, omega, 0.0]),
        DMatrix::from_row_slice(2, 2, &[sigma, 0.0, 0.0, -sigma]),
    ])
    .map_err(fail)?;
    let y0 = [1.0, 0.0];
    let schedule = LogOdeSchedule::uniform(&driver, steps, depth, 16).map_err(fail)?;
    let traj = solve(&sys, &driver, &y0, &schedule).map_err(fail)?;
    let mut exact = vec![y0.to_vec()];
    for &t in &traj.times[1..] {
        exact.push(linear_solve(&sys, &driver.restrict(0.0, t).map_err(fail)?, &y0).map_err(fail)?);
    }
    let error = traj
        .states
        .iter()
        .zip(&exact)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let driver_points: Vec<&[f64]> = driver.points().collect();
    Ok(json!({
        "times": traj.times,
        "log_ode": traj.states,
        "exact": exact,
        "max_error": error,
        "driver": driver_points,
    })
    .to_string())
}
