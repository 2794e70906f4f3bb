use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::PotentialTable;

/// Central, tensor and spin-orbit curves of a `(d, s)`-ordered 2x2 table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialDecomposition {
    pub grid: Vec<f64>,
    pub central: Vec<f64>,
    pub tensor: Vec<f64>,
    pub spin_orbit: Vec<f64>,
}

/// `V_C = V22`, `V_T = V12 / sqrt 8`, `V_O = (V22 - V12/sqrt 2 - V11 + 6/r^2) / 3`.
pub fn decompose(r: f64, v11: f64, v12: f64, v22: f64) -> (f64, f64, f64) {
    let central = v22;
    let tensor = v12 / 8f64.sqrt();
    let spin_orbit = (v22 - v12 / 2f64.sqrt() - v11 + 6.0 / (r * r)) / 3.0;
    (central, tensor, spin_orbit)
}

/// Inverse of [`decompose`]: `(V11, V12, V22)`.
pub fn reconstruct(r: f64, central: f64, tensor: f64, spin_orbit: f64) -> (f64, f64, f64) {
    let v22 = central;
    let v12 = 8f64.sqrt() * tensor;
    let v11 = v22 - v12 / 2f64.sqrt() - 3.0 * spin_orbit + 6.0 / (r * r);
    (v11, v12, v22)
}

pub fn decompose_potential(table: &PotentialTable) -> Result<PotentialDecomposition> {
    if table.channels != 2 {
        return Err(Error::Argument(format!("decomposition needs a 2x2 table, got {0}x{0}", table.channels)));
    }
    let mut out = PotentialDecomposition {
        grid: table.grid.clone(),
        central: Vec::with_capacity(table.len()),
        tensor: Vec::with_capacity(table.len()),
        spin_orbit: Vec::with_capacity(table.len()),
    };
    for (idx, &r) in table.grid.iter().enumerate() {
        let (c, t, o) = decompose(r, table.value(idx, 0, 0), table.value(idx, 0, 1), table.value(idx, 1, 1));
        out.central.push(c);
        out.tensor.push(t);
        out.spin_orbit.push(o);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn background_only() {
        for &r in &[0.2, 1.0, 7.5] {
            let (c, t, o) = decompose(r, 6.0 / (r * r), 0.0, 0.0);
            assert_eq!((c, t), (0.0, 0.0));
            assert!(o.abs() < 1e-15);
        }
    }

    #[test]
    fn round_trip() {
        let (r, v11, v12, v22) = (0.7, 3.1, -0.4, 1.9);
        let (c, t, o) = decompose(r, v11, v12, v22);
        let (a, b, d) = reconstruct(r, c, t, o);
        assert!((a - v11).abs() < 1e-14 && (b - v12).abs() < 1e-15 && (d - v22).abs() < 1e-15);
    }
}
