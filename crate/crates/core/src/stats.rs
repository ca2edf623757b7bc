// SPDX-License-Identifier: Apache-2.0

use serde::Serialize;

/// Sample mean with its standard error. `stderr` is `None` for a single
/// observation, where it is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: Option<f64>,
    pub samples: u64,
}

impl Estimate {
    /// Mean and standard error of `values`, summed in the given order with
    /// Neumaier compensation so results do not depend on thread scheduling.
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        assert!(n > 0, "estimate of an empty sample");
        if values.iter().all(|&v| v == values[0]) {
            return Estimate {
                mean: values[0],
                stderr: (n > 1).then_some(0.0),
                samples: n as u64,
            };
        }
        let mean = compensated_sum(values.iter().copied()) / n as f64;
        let stderr = (n > 1).then(|| {
            let ss = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
            (ss / (n as f64 - 1.0) / n as f64).sqrt()
        });
        Estimate {
            mean,
            stderr,
            samples: n as u64,
        }
    }

    /// Standard error, reading the undefined single-sample case as zero.
    pub fn se(&self) -> f64 {
        self.stderr.unwrap_or(0.0)
    }
}

pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// `sqrt(a² + b²)`: standard error of a difference of independent estimates.
pub fn pooled(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}
